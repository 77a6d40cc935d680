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

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

namespace mlpa {

enum class SelectionKind { Deterministic, Probabilistic };

/// D(P, B, K_s): predicts one bit of each trace from its known data and a
/// subkey guess in [0, subkey_space).
struct SelectionFunction {
    SelectionKind kind = SelectionKind::Deterministic;
    std::function<unsigned(const Trace &, std::uint64_t guess)> predict;
    std::uint64_t subkey_space = 64;
    /// Probability - 1/2 that the prediction is right under the correct
    /// guess; 1/2 for a deterministic selection.
    double bias = 0.5;
    /// Register load whose sample carries the predicted bit.
    unsigned target_load = 1;

    /// Throws ModelError on an empty subkey space or a bias outside (0,1/2].
    void validate() const;
};

/// Classic DPA selection on DES round 1: the LR-register bit fed by output bit
/// `bit` (1..4, MSB first) of S-box `box` (1..8), guessing that S-box's
/// 6 round-key bits.
SelectionFunction des_sbox_selection(unsigned box, unsigned bit);

/// `base` xor a public plaintext-keyed coin that is 1 with probability
/// 1/2 - eps, so the prediction is right with probability 1/2 + eps under the
/// right guess. The coin is independent of the device data.
SelectionFunction probabilistic_selection(const SelectionFunction &base,
                                          double eps, std::uint64_t coin_seed);

/// The 6 master-key bits behind S-box `box` of round key `round`, as the
/// guess value that des_sbox_selection expects.
std::uint64_t des_sbox_subkey(const BitVector &master, unsigned box,
                              unsigned round = 1);

struct DifferentialTrace {
    std::vector<double> values;
    std::size_t n_traces_used = 0;
    std::uint64_t guess = 0;
    /// One partition was empty; values are all zero.
    bool degenerate = false;
};

/// mean{T_i : B_i = 1} - mean{T_i : B_i = 0} per sample, with compensated
/// sums. Throws DataError on an empty campaign.
DifferentialTrace differential_trace(const Campaign &campaign,
                                     const SelectionFunction &selection,
                                     std::uint64_t guess);

/// Same statistic driven by a probabilistic selection (bias in (0,1/2]).
DifferentialTrace probabilistic_differential_trace(
    const Campaign &campaign, const SelectionFunction &selection,
    std::uint64_t guess);

/// Differential trace from explicit selection bits.
DifferentialTrace differential_trace_from_bits(const Campaign &campaign,
                                               const std::vector<unsigned> &bits,
                                               std::uint64_t guess = 0);

struct GuessScore {
    std::uint64_t guess = 0;
    double score = 0.0;
};

/// Guesses sorted by descending score, ties by ascending guess.
struct GuessRanking {
    std::vector<GuessScore> entries;

    /// 1-based rank of a guess; 0 if absent.
    std::size_t rank_of(std::uint64_t guess) const;
    std::uint64_t best() const { return entries.front().guess; }
};

GuessRanking rank_scores(std::vector<GuessScore> scores);

/// Scores every guess by |Delta| at `sample_index`, or by max_j |Delta[j]|
/// over the whole trace when sample_index is empty. Guesses are processed in
/// parallel.
GuessRanking dpa_rank(const Campaign &campaign, const SelectionFunction &selection,
                      std::optional<std::size_t> sample_index);
GuessRanking dpa_rank_serial(const Campaign &campaign,
                             const SelectionFunction &selection,
                             std::optional<std::size_t> sample_index);

enum class PeakPolarity {
    /// Rank by the signed peak: a 1 bit raises Hamming-type leakage.
    Positive,
    /// Rank by the peak magnitude.
    Absolute,
};

/// The four selections of one DES round-1 S-box, output bits 1..4.
std::vector<SelectionFunction> des_sbox_selections(unsigned box);

/// Multi-bit DPA: the differential traces of several selections over the
/// same guess space are summed (Positive) or their magnitudes summed
/// (Absolute), then ranked at one sample or by the maximum over samples.
GuessRanking dpa_rank_multibit(const Campaign &campaign,
                               const std::vector<SelectionFunction> &selections,
                               std::optional<std::size_t> sample_index,
                               PeakPolarity polarity = PeakPolarity::Positive);

/// Copy of the campaign with known(trace) subtracted from one sample: removes
/// leakage the attacker can compute from public data alone.
Campaign subtract_known_leakage(const Campaign &campaign, std::size_t sample_index,
                                const std::function<double(const Trace &)> &known);

/// H(L1) = H(R0) for a DES trace: the half of the round-1 LR register that
/// follows from the plaintext.
double des_round1_known_weight(const Trace &trace);

/// 4.5 times the standard deviation of Delta[sample_index] over
/// `permutations` random relabellings of the guess's selection bits.
double flatness_threshold(const Campaign &campaign,
                          const SelectionFunction &selection, std::uint64_t guess,
                          std::size_t sample_index, unsigned permutations,
                          std::uint64_t seed);

/// predictions[g][i] is the modelled leakage of trace i under guess g.
/// Returns r[g][j], the Pearson correlation between predictions[g] and
/// sample j. Throws DegenerateModelError for a constant prediction vector.
std::vector<std::vector<double>>
pearson_cpa(const Campaign &campaign,
            const std::vector<std::vector<double>> &predictions);
std::vector<std::vector<double>>
pearson_cpa_serial(const Campaign &campaign,
                   const std::vector<std::vector<double>> &predictions);

/// Ranking by |r| at one sample (or max over samples).
GuessRanking cpa_rank(const std::vector<std::vector<double>> &correlations,
                      std::optional<std::size_t> sample_index);

/// H(state byte) predictions for the AES last round, one row per key byte
/// guess (256 rows).
std::vector<std::vector<double>> aes_last_round_predictions(const Campaign &campaign,
                                                            unsigned byte_index);

/// CSV report: header "guess,hex_score,rank", the score printed as a C99
/// hexadecimal float so that reports compare bit for bit.
void write_score_csv(std::ostream &out, const GuessRanking &ranking);

} // namespace mlpa
