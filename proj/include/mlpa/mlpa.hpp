/*
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "mlpa/approx.hpp"
#include "mlpa/leakage.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <vector>

namespace mlpa {

/// Where <H,gamma_h> comes from. Measured reads one threshold bit from the
/// sample (gamma_h must be 0x10 or 0x20). SimulationExact rounds the sample
/// to the nearest integer and uses it as H, which is exact for a noiseless
/// simulated device and works with any gamma_h.
enum class AttackMode { Measured, SimulationExact };

/// Largest key support the decoder accepts (2^26 doubles = 512 MiB).
inline constexpr unsigned kMaxDecodeBits = 26;

struct PartitionCounts {
    std::size_t n0 = 0;
    std::size_t n1 = 0;

    /// n0 - n1.
    double balance() const {
        return static_cast<double>(n0) - static_cast<double>(n1);
    }
    bool operator==(const PartitionCounts &) const = default;
};

/// Splits the traces by the key parity each one predicts. `mean` is the
/// campaign mean of the sample (Measured mode only).
PartitionCounts partition_counts(const Campaign &campaign,
                                 const LinearApproximation &a,
                                 std::size_t sample_index, double mean,
                                 AttackMode mode = AttackMode::Measured);

/// Counts for every relation of a set in one pass over the traces.
std::vector<PartitionCounts> partition_counts(const Campaign &campaign,
                                              const ApproximationSet &set,
                                              std::size_t sample_index,
                                              double mean, AttackMode mode);
std::vector<PartitionCounts> partition_counts_serial(const Campaign &campaign,
                                                     const ApproximationSet &set,
                                                     std::size_t sample_index,
                                                     double mean, AttackMode mode);

/// ln((1/2 + eps) / (1/2 - eps)); eps = 1/2 is clamped just below 1/2.
double log_likelihood_weight(double bias);

struct NoisyCodeword {
    std::vector<double> values;
    unsigned k = 0;
    std::size_t defined_positions = 0;
    /// Restricted kappa -> accumulated weight, defined positions only.
    std::map<std::uint64_t, double> position_map;
};

/// Accumulates (n0 - n1) * log_likelihood_weight(bias) at the restricted
/// kappa of every relation. Throws SupportError when the counts do not
/// match the set and BudgetError when k exceeds kMaxDecodeBits.
NoisyCodeword build_codeword(const std::vector<PartitionCounts> &counts,
                             const ApproximationSet &set);

struct KeyScore {
    BitVector subkey{0, 1};
    double score = 0.0;
};

/// Subkeys restricted to a key support (bit j of the value is master-key
/// bit key_support[j]), sorted by descending score, ties by lowest value.
struct KeyRanking {
    std::vector<KeyScore> entries;
    /// Set when the codeword had no defined position.
    bool uninformative = false;

    /// 1-based rank of a subkey; 0 if it is not in the listed prefix.
    std::size_t rank_of(std::uint64_t subkey) const;
    std::uint64_t best() const { return entries.front().subkey.value(); }
};

/// Ranks all 2^k subkeys by their Walsh-Hadamard coefficient, or only the
/// best `top_m` when given.
KeyRanking decode(const NoisyCodeword &codeword,
                  std::optional<std::size_t> top_m = {});

struct MlpaResult {
    KeyRanking ranking;
    std::vector<PartitionCounts> counts;
    /// Majority vote of each relation on <K,kappa>.
    std::vector<unsigned> votes;
    /// <K,kappa> of each relation under the rank-1 subkey.
    std::vector<unsigned> parities;
};

/// partition_counts, build_codeword and decode. Throws DataError on an
/// empty campaign and ModelError on an empty set.
MlpaResult mlpa_attack(const Campaign &campaign, const ApproximationSet &set,
                       std::size_t sample_index,
                       AttackMode mode = AttackMode::Measured,
                       std::optional<std::size_t> top_m = {});

struct TrialSpec {
    DeviceConfig device;
    std::size_t n_traces = 0;
    unsigned n_trials = 1;
    std::uint64_t seed = 0;
    AttackMode mode = AttackMode::SimulationExact;
    /// Sample to attack. When unset the register load of the first relation
    /// is used, or the earliest load when the device never loads it.
    std::optional<std::size_t> sample_index;
};

struct TrialOutcome {
    std::uint64_t key = 0;
    std::size_t rank = 0;
    bool success = false;
};

/// One attack per trial on a fresh random key and campaign. Trials run in
/// parallel; outcome t only depends on (spec.seed, t).
std::vector<TrialOutcome> run_trials(const TrialSpec &spec,
                                     const ApproximationSet &set);
std::vector<TrialOutcome> run_trials_serial(const TrialSpec &spec,
                                            const ApproximationSet &set);

/// Fraction of successful run_trials outcomes.
double success_rate(const TrialSpec &spec, const ApproximationSet &set);

/// "rank,subkey_hex,score,is_correct"; is_correct is left empty when the
/// correct subkey is unknown.
void write_ranking_csv(std::ostream &out, const KeyRanking &ranking,
                       std::optional<std::uint64_t> correct = {});

} // namespace mlpa
