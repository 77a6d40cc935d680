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

#include "mlpa/bitcore.hpp"
#include "mlpa/leakage.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mlpa {

/// Width of a Hamming-weight mask for a 64-bit register: ceil(log2(65)).
inline constexpr unsigned kGammaWidth = 7;

/// <P,pi> xor <V,gamma_h> xor b = <K,kappa>, holding with probability
/// 1/2 + bias. V is the observed quantity, normally H(register).
struct LinearApproximation {
    BitVector pi{0, 64};
    BitVector gamma_h{0, kGammaWidth};
    BitVector kappa{0, 64};
    unsigned b = 0;
    double bias = 0.0;
    /// Depth of the approximated function; 0 when unknown.
    unsigned rounds = 0;
    /// Register load the relation targets; 0 when unknown.
    unsigned register_load = 0;

    /// Throws ModelError when bias is not in (0,1/2] or kappa is zero.
    void validate() const;

    /// Same relation with b complemented (the bias magnitude is unchanged).
    LinearApproximation flipped() const;

    bool operator==(const LinearApproximation &) const = default;
};

/// A list of relations and the union of their key supports.
class ApproximationSet {
  public:
    ApproximationSet() = default;
    explicit ApproximationSet(std::vector<LinearApproximation> items);
    /// Explicit key support; throws SupportError if a kappa leaves it.
    ApproximationSet(std::vector<LinearApproximation> items,
                     std::vector<unsigned> key_support);

    const std::vector<LinearApproximation> &items() const { return items_; }
    /// Master-key bit indices (1-based), ascending.
    const std::vector<unsigned> &key_support() const { return key_support_; }
    unsigned k() const { return static_cast<unsigned>(key_support_.size()); }
    std::size_t size() const { return items_.size(); }
    bool empty() const { return items_.empty(); }

    /// Kappa of item i as a k-bit integer: bit j is key_support()[j].
    std::uint64_t restricted_kappa(std::size_t i) const;
    /// Projection of a 64-bit key onto key_support(), same bit order.
    std::uint64_t restrict_key(const BitVector &key) const;
    /// Rank over GF(2) of the restricted kappa vectors.
    unsigned kappa_rank() const;

  private:
    std::vector<LinearApproximation> items_;
    std::vector<unsigned> key_support_;
};

/// Parse one relation:
///   gamma_h=<hex> bias=<decimal> [rounds=<n>] [register=<n>] eq=<b>(+P[i])*(+K[j])*
/// Whitespace is allowed around tokens. Throws ParseError with the given line
/// number and the column of the offending character.
LinearApproximation parse_approximation(std::string_view line,
                                        std::size_t line_number = 1);

/// Canonical text form; parse_approximation(serialize_approximation(a)) == a.
std::string serialize_approximation(const LinearApproximation &a);

/// Corpus text: one relation per line, '#' starts a comment.
std::vector<LinearApproximation> parse_corpus(std::istream &in);
std::vector<LinearApproximation> read_corpus(const std::string &path);
void write_corpus(std::ostream &out, const std::vector<LinearApproximation> &items,
                  std::string_view header_comment = {});
void write_corpus(const std::string &path,
                  const std::vector<LinearApproximation> &items,
                  std::string_view header_comment = {});

/// Predicted <K,kappa> from a plaintext and an exact observed value.
unsigned evaluate_parity(const LinearApproximation &a, const BitVector &plaintext,
                         unsigned hw_value);
/// Same, when <V,gamma_h> is already known as a single bit.
unsigned evaluate_parity_with_bit(const LinearApproximation &a,
                                  const BitVector &plaintext, unsigned hw_bit);

/// Boolean-function view of a device: maps (plaintext, key) to the value
/// whose gamma_h bits are approximated.
struct TargetFunction {
    std::function<unsigned(std::uint64_t plaintext, std::uint64_t key)> eval;
    std::string name;
};

/// H(LR after `round`) for HW, H(transition into `round`) for HD.
TargetFunction des_register_target(unsigned round, LeakageModel model);
/// S(x xor k) of one DES S-box; x and k are the low 6 bits of plaintext and
/// key, the value is the 4-bit S-box output (gamma_h masks it directly).
TargetFunction des_sbox_target(unsigned box);

/// Signed p - 1/2 over every (P,K) in the cross product. Throws BudgetError
/// when the product exceeds 2^26.
double estimate_bias_exhaustive(const LinearApproximation &a,
                                const TargetFunction &target,
                                const std::vector<std::uint64_t> &key_space,
                                const std::vector<std::uint64_t> &plaintext_space);

struct BiasEstimate {
    double bias = 0.0;
    double std_err = 0.0;
};

/// Uniform (P,K) sampling. Samples are drawn in fixed-size chunks with one
/// seed per chunk, so the estimate does not depend on the worker count.
/// Throws DataError for n_samples < 1000.
BiasEstimate estimate_bias_monte_carlo(const LinearApproximation &a,
                                       const TargetFunction &target,
                                       std::uint64_t n_samples,
                                       std::uint64_t seed);
BiasEstimate estimate_bias_monte_carlo_serial(const LinearApproximation &a,
                                              const TargetFunction &target,
                                              std::uint64_t n_samples,
                                              std::uint64_t seed);

/// Twin-device calibration: how often the relation holds when <H,gamma_h>
/// is read from the measured sample through the threshold trick, under the
/// campaign key (or `assumed_key`). Returns p - 1/2.
double estimate_bias_from_traces(const LinearApproximation &a,
                                 const Campaign &campaign,
                                 std::size_t sample_index,
                                 std::optional<BitVector> assumed_key = {});

/// Bounded search over Pi and kappa masks restricted to small bit supports.
struct SearchSpec {
    TargetFunction target;
    unsigned rounds = 0;
    unsigned register_load = 0;
    std::vector<unsigned> gamma_h_list;
    /// Candidate plaintext / key bit indices (1-based).
    std::vector<unsigned> pi_support;
    std::vector<unsigned> key_support;
    unsigned max_pi_weight = 2;
    unsigned max_kappa_weight = 2;
    double min_bias = 0.01;
    /// Maximum number of (gamma_h, pi, kappa) candidates to score.
    std::uint64_t budget = 1ULL << 24;
    std::uint64_t n_samples = 1ULL << 18;
    std::uint64_t seed = 0;
};

struct SearchResult {
    ApproximationSet set;
    std::uint64_t evaluated = 0;
    bool partial = false;
    unsigned kappa_rank = 0;
    bool full_rank = false;
};

/// Scores every candidate at once: the empirical (+1/-1) table of
/// <V,gamma_h> over the joint restricted (plaintext, key) domain is
/// Walsh-Hadamard transformed, each coefficient being 2n times the bias of
/// one (pi, kappa) pair. Throws BudgetError if the joint domain exceeds
/// 2^24 entries.
SearchResult search_approximations(const SearchSpec &spec);

/// 1/bias^2.
double data_complexity(const LinearApproximation &a);
/// 1/sum(bias^2).
double multi_data_complexity(const std::vector<LinearApproximation> &items);
double multi_data_complexity(const ApproximationSet &set);

} // namespace mlpa
