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

#include "mlpa/approx.hpp"

#include "mlpa/fwht.hpp"
#include "mlpa/parallel.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

namespace mlpa {
namespace {

constexpr std::uint64_t kMonteCarloChunk = 4096;

unsigned relation_holds(const LinearApproximation &a, std::uint64_t p,
                        std::uint64_t k, unsigned value) {
    const unsigned lhs = parity(p & a.pi.value()) ^
                         parity(value & a.gamma_h.value()) ^ a.b;
    return lhs == parity(k & a.kappa.value()) ? 1U : 0U;
}

class LineParser {
  public:
    LineParser(std::string_view text, std::size_t line)
        : text_(text), line_(line) {}

    [[noreturn]] void fail(const std::string &what) const {
        throw ParseError(what, line_, pos_ + 1);
    }

    void skip_ws() {
        while (pos_ < text_.size() &&
               (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\r'))
            ++pos_;
    }
    bool at_end() {
        skip_ws();
        return pos_ >= text_.size();
    }
    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
    void expect(char c) {
        skip_ws();
        if (peek() != c)
            fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    std::string_view identifier() {
        skip_ws();
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalpha(static_cast<unsigned char>(text_[pos_])) ||
                text_[pos_] == '_'))
            ++pos_;
        if (start == pos_)
            fail("expected a field name");
        return text_.substr(start, pos_ - start);
    }

    std::uint64_t unsigned_number(int base) {
        skip_ws();
        if (base == 16 && text_.substr(pos_, 2) == "0x")
            pos_ += 2;
        std::uint64_t v = 0;
        const auto *first = text_.data() + pos_;
        const auto *last = text_.data() + text_.size();
        auto [ptr, ec] = std::from_chars(first, last, v, base);
        if (ec != std::errc{} || ptr == first)
            fail("expected a number");
        pos_ += static_cast<std::size_t>(ptr - first);
        return v;
    }

    double decimal() {
        skip_ws();
        double v = 0;
        const auto *first = text_.data() + pos_;
        const auto *last = text_.data() + text_.size();
        auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc{} || ptr == first)
            fail("expected a decimal number");
        pos_ += static_cast<std::size_t>(ptr - first);
        return v;
    }

    std::size_t column() const { return pos_ + 1; }

  private:
    std::string_view text_;
    std::size_t line_;
    std::size_t pos_ = 0;
};

std::uint64_t mask_from(const std::vector<unsigned> &support, std::uint64_t bits) {
    std::uint64_t m = 0;
    for (std::size_t j = 0; j < support.size(); ++j)
        if ((bits >> j) & 1U)
            m |= raw_single_bit(support[j], 64);
    return m;
}

std::uint64_t gather(std::uint64_t word, const std::vector<unsigned> &support) {
    std::uint64_t r = 0;
    for (std::size_t j = 0; j < support.size(); ++j)
        r |= std::uint64_t{raw_bit(word, support[j], 64)} << j;
    return r;
}

void append_terms(std::string &out, char name, std::uint64_t mask) {
    for (unsigned i = 1; i <= 64; ++i)
        if (raw_bit(mask, i, 64)) {
            out += '+';
            out += name;
            out += '[';
            out += std::to_string(i);
            out += ']';
        }
}

std::uint64_t monte_carlo_chunk(const LinearApproximation &a,
                                const TargetFunction &target,
                                std::uint64_t seed, std::uint64_t chunk,
                                std::uint64_t count) {
    std::mt19937_64 rng(derive_seed(seed, chunk));
    std::uint64_t hits = 0;
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint64_t p = rng();
        const std::uint64_t k = rng();
        hits += relation_holds(a, p, k, target.eval(p, k));
    }
    return hits;
}

BiasEstimate finish_estimate(std::uint64_t hits, std::uint64_t n) {
    const double p = static_cast<double>(hits) / static_cast<double>(n);
    return {p - 0.5, std::sqrt(p * (1.0 - p) / static_cast<double>(n))};
}

void check_support(const std::vector<unsigned> &support, const char *what) {
    std::set<unsigned> seen;
    for (unsigned i : support) {
        if (i < 1 || i > 64)
            throw IndexError(std::string(what) + " bit " + std::to_string(i) +
                             " outside [1,64]");
        if (!seen.insert(i).second)
            throw IndexError(std::string("duplicate ") + what + " bit " +
                             std::to_string(i));
    }
}

} // namespace

void LinearApproximation::validate() const {
    if (!(bias > 0.0 && bias <= 0.5))
        throw ModelError("bias must lie in (0, 1/2]");
    if (kappa.value() == 0)
        throw ModelError("kappa must involve at least one key bit");
    if (b > 1)
        throw ModelError("b must be 0 or 1");
}

LinearApproximation LinearApproximation::flipped() const {
    LinearApproximation f = *this;
    f.b ^= 1U;
    return f;
}

ApproximationSet::ApproximationSet(std::vector<LinearApproximation> items)
    : items_(std::move(items)) {
    std::uint64_t all = 0;
    for (const auto &a : items_)
        all |= a.kappa.value();
    for (unsigned i = 1; i <= 64; ++i)
        if (raw_bit(all, i, 64))
            key_support_.push_back(i);
}

ApproximationSet::ApproximationSet(std::vector<LinearApproximation> items,
                                   std::vector<unsigned> key_support)
    : items_(std::move(items)), key_support_(std::move(key_support)) {
    std::sort(key_support_.begin(), key_support_.end());
    check_support(key_support_, "key support");
    const std::uint64_t allowed = mask_from(key_support_, ~std::uint64_t{0});
    for (const auto &a : items_)
        if ((a.kappa.value() & ~allowed) != 0)
            throw SupportError("kappa " + a.kappa.to_string() +
                               " leaves the key support");
}

std::uint64_t ApproximationSet::restricted_kappa(std::size_t i) const {
    return gather(items_.at(i).kappa.value(), key_support_);
}

std::uint64_t ApproximationSet::restrict_key(const BitVector &key) const {
    return gather(key.value(), key_support_);
}

unsigned ApproximationSet::kappa_rank() const {
    std::vector<std::uint64_t> basis;
    for (std::size_t i = 0; i < items_.size(); ++i) {
        std::uint64_t v = restricted_kappa(i);
        for (std::uint64_t b : basis)
            v = std::min(v, v ^ b);
        if (v != 0) {
            basis.push_back(v);
            std::sort(basis.rbegin(), basis.rend());
        }
    }
    return static_cast<unsigned>(basis.size());
}

LinearApproximation parse_approximation(std::string_view line,
                                        std::size_t line_number) {
    LineParser in(line, line_number);
    LinearApproximation a;
    bool have_gamma = false, have_bias = false, have_eq = false;
    bool have_rounds = false, have_register = false;
    std::uint64_t pi = 0, kappa = 0;

    while (!in.at_end()) {
        if (have_eq)
            in.fail("unexpected text after the equation");
        const std::size_t field_col = in.column();
        const std::string field(in.identifier());
        in.expect('=');
        auto once = [&](bool &flag) {
            if (flag)
                throw ParseError("duplicate field '" + field + "'", line_number,
                                 field_col);
            flag = true;
        };
        if (field == "gamma_h") {
            once(have_gamma);
            const std::uint64_t g = in.unsigned_number(16);
            if (g >= (1U << kGammaWidth))
                in.fail("gamma_h wider than " + std::to_string(kGammaWidth) +
                        " bits");
            a.gamma_h = BitVector(g, kGammaWidth);
        } else if (field == "bias") {
            once(have_bias);
            const std::size_t col = in.column();
            a.bias = in.decimal();
            if (!(a.bias > 0.0 && a.bias <= 0.5))
                throw ParseError("bias must lie in (0, 1/2]", line_number, col);
        } else if (field == "rounds") {
            once(have_rounds);
            a.rounds = static_cast<unsigned>(in.unsigned_number(10));
        } else if (field == "register") {
            once(have_register);
            a.register_load = static_cast<unsigned>(in.unsigned_number(10));
        } else if (field == "eq") {
            once(have_eq);
            in.skip_ws();
            const std::size_t col = in.column();
            const std::uint64_t b = in.unsigned_number(10);
            if (b > 1)
                throw ParseError("constant term must be 0 or 1", line_number, col);
            a.b = static_cast<unsigned>(b);
            while (!in.at_end()) {
                in.expect('+');
                in.skip_ws();
                const char var = in.peek();
                if (var != 'P' && var != 'K')
                    in.fail("expected P[i] or K[j]");
                in.expect(var);
                in.expect('[');
                const std::size_t idx_col = in.column();
                const std::uint64_t idx = in.unsigned_number(10);
                in.expect(']');
                if (idx < 1 || idx > 64)
                    throw ParseError("bit index outside [1,64]", line_number,
                                     idx_col);
                std::uint64_t &mask = var == 'P' ? pi : kappa;
                const std::uint64_t bit = raw_single_bit(static_cast<unsigned>(idx), 64);
                if (mask & bit)
                    throw ParseError(std::string("duplicate term ") + var + "[" +
                                         std::to_string(idx) + "]",
                                     line_number, idx_col);
                mask |= bit;
            }
        } else {
            throw ParseError("unknown field '" + field + "'", line_number,
                             field_col);
        }
    }
    if (!have_gamma || !have_bias || !have_eq)
        in.fail("relation needs gamma_h, bias and eq fields");
    if (kappa == 0)
        in.fail("relation involves no key bit");
    a.pi = BitVector(pi, 64);
    a.kappa = BitVector(kappa, 64);
    return a;
}

std::string serialize_approximation(const LinearApproximation &a) {
    char buf[64];
    std::string out = "gamma_h=0x";
    auto r = std::to_chars(buf, buf + sizeof buf, a.gamma_h.value(), 16);
    if (r.ptr - buf < 2)
        out += '0';
    out.append(buf, r.ptr);
    out += " bias=";
    r = std::to_chars(buf, buf + sizeof buf, a.bias);
    out.append(buf, r.ptr);
    if (a.rounds != 0)
        out += " rounds=" + std::to_string(a.rounds);
    if (a.register_load != 0)
        out += " register=" + std::to_string(a.register_load);
    out += " eq=";
    out += std::to_string(a.b);
    append_terms(out, 'P', a.pi.value());
    append_terms(out, 'K', a.kappa.value());
    return out;
}

std::vector<LinearApproximation> parse_corpus(std::istream &in) {
    std::vector<LinearApproximation> items;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        std::string_view body(line.data(),
                              hash == std::string::npos ? line.size() : hash);
        if (body.find_first_not_of(" \t\r") == std::string_view::npos)
            continue;
        items.push_back(parse_approximation(body, number));
    }
    return items;
}

std::vector<LinearApproximation> read_corpus(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open corpus '" + path + "'");
    return parse_corpus(in);
}

void write_corpus(std::ostream &out, const std::vector<LinearApproximation> &items,
                  std::string_view header_comment) {
    if (!header_comment.empty()) {
        std::istringstream lines{std::string(header_comment)};
        std::string l;
        while (std::getline(lines, l))
            out << "# " << l << '\n';
    }
    for (const auto &a : items)
        out << serialize_approximation(a) << '\n';
}

void write_corpus(const std::string &path,
                  const std::vector<LinearApproximation> &items,
                  std::string_view header_comment) {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write corpus '" + path + "'");
    write_corpus(out, items, header_comment);
    if (!out)
        throw IoError("write failed for '" + path + "'");
}

unsigned evaluate_parity(const LinearApproximation &a, const BitVector &plaintext,
                         unsigned hw_value) {
    return parity(plaintext.value() & a.pi.value()) ^
           parity(hw_value & a.gamma_h.value()) ^ a.b;
}

unsigned evaluate_parity_with_bit(const LinearApproximation &a,
                                  const BitVector &plaintext, unsigned hw_bit) {
    return parity(plaintext.value() & a.pi.value()) ^ (hw_bit & 1U) ^ a.b;
}

TargetFunction des_register_target(unsigned round, LeakageModel model) {
    if (round < 1 || round > 16)
        throw RoundError("round " + std::to_string(round) + " outside [1,16]");
    std::string name = (model == LeakageModel::HammingWeight ? "HW(LR" : "HD(LR") +
                       std::to_string(round) + ")";
    return {[round, model](std::uint64_t p, std::uint64_t k) -> unsigned {
                const auto ks = des_key_schedule(BitVector(k, 64));
                const BitVector pt(p, 64);
                if (model == LeakageModel::HammingWeight)
                    return hamming_weight(des_rounds(pt, ks, round).lr());
                return hamming_weight(register_transition(pt, ks, round));
            },
            std::move(name)};
}

TargetFunction des_sbox_target(unsigned box) {
    (void)des_sbox(box, 0); // range check
    return {[box](std::uint64_t p, std::uint64_t k) -> unsigned {
                return des_sbox(box, static_cast<unsigned>((p ^ k) & 0x3FU));
            },
            "S" + std::to_string(box)};
}

double estimate_bias_exhaustive(const LinearApproximation &a,
                                const TargetFunction &target,
                                const std::vector<std::uint64_t> &key_space,
                                const std::vector<std::uint64_t> &plaintext_space) {
    const double pairs = static_cast<double>(key_space.size()) *
                         static_cast<double>(plaintext_space.size());
    if (pairs > static_cast<double>(1ULL << 26))
        throw BudgetError("exhaustive bias over more than 2^26 pairs");
    if (pairs == 0)
        throw DataError("empty key or plaintext space");
    std::uint64_t hits = 0;
    for (std::uint64_t k : key_space)
        for (std::uint64_t p : plaintext_space)
            hits += relation_holds(a, p, k, target.eval(p, k));
    return static_cast<double>(hits) / pairs - 0.5;
}

BiasEstimate estimate_bias_monte_carlo(const LinearApproximation &a,
                                       const TargetFunction &target,
                                       std::uint64_t n_samples,
                                       std::uint64_t seed) {
    if (n_samples < 1000)
        throw DataError("Monte-Carlo bias needs at least 1000 samples");
    const auto chunks =
        static_cast<std::int64_t>((n_samples + kMonteCarloChunk - 1) / kMonteCarloChunk);
    std::uint64_t hits = 0;
#pragma omp parallel for schedule(dynamic) reduction(+ : hits) num_threads(worker_count())
    for (std::int64_t c = 0; c < chunks; ++c) {
        const auto uc = static_cast<std::uint64_t>(c);
        const std::uint64_t count =
            std::min(kMonteCarloChunk, n_samples - uc * kMonteCarloChunk);
        hits += monte_carlo_chunk(a, target, seed, uc, count);
    }
    return finish_estimate(hits, n_samples);
}

BiasEstimate estimate_bias_monte_carlo_serial(const LinearApproximation &a,
                                              const TargetFunction &target,
                                              std::uint64_t n_samples,
                                              std::uint64_t seed) {
    if (n_samples < 1000)
        throw DataError("Monte-Carlo bias needs at least 1000 samples");
    std::uint64_t hits = 0;
    for (std::uint64_t c = 0; c * kMonteCarloChunk < n_samples; ++c)
        hits += monte_carlo_chunk(a, target, seed, c,
                                  std::min(kMonteCarloChunk,
                                           n_samples - c * kMonteCarloChunk));
    return finish_estimate(hits, n_samples);
}

double estimate_bias_from_traces(const LinearApproximation &a,
                                 const Campaign &campaign,
                                 std::size_t sample_index,
                                 std::optional<BitVector> assumed_key) {
    const auto key = assumed_key ? assumed_key : campaign.key;
    if (!key)
        throw DataError("trace-based calibration needs a known key");
    const double mean = campaign.sample_mean(sample_index);
    const unsigned key_parity = inner_product(*key, a.kappa);
    std::uint64_t hits = 0;
    for (const auto &t : campaign.traces) {
        const unsigned bit = power_to_hw_bits(t.samples[sample_index], mean, a.gamma_h);
        hits += evaluate_parity_with_bit(a, t.plaintext, bit) == key_parity;
    }
    return static_cast<double>(hits) / static_cast<double>(campaign.size()) - 0.5;
}

SearchResult search_approximations(const SearchSpec &spec) {
    check_support(spec.pi_support, "plaintext support");
    check_support(spec.key_support, "key support");
    const std::size_t pi_bits = spec.pi_support.size();
    const std::size_t key_bits = spec.key_support.size();
    if (key_bits == 0)
        throw SupportError("search needs a non-empty key support");
    if (pi_bits + key_bits > 24)
        throw BudgetError("joint search domain exceeds 2^24 entries");
    if (spec.n_samples < 1000)
        throw DataError("search needs at least 1000 samples");

    // Draw the samples once; every gamma_h reuses them.
    const std::uint64_t n = spec.n_samples;
    std::vector<std::uint32_t> joint(n);
    std::vector<std::uint32_t> value(n);
    const auto chunks =
        static_cast<std::int64_t>((n + kMonteCarloChunk - 1) / kMonteCarloChunk);
#pragma omp parallel for schedule(dynamic) num_threads(worker_count())
    for (std::int64_t c = 0; c < chunks; ++c) {
        const auto uc = static_cast<std::uint64_t>(c);
        std::mt19937_64 rng(derive_seed(spec.seed, uc));
        const std::uint64_t end = std::min(n, (uc + 1) * kMonteCarloChunk);
        for (std::uint64_t i = uc * kMonteCarloChunk; i < end; ++i) {
            const std::uint64_t p = rng();
            const std::uint64_t k = rng();
            joint[i] = static_cast<std::uint32_t>(
                (gather(p, spec.pi_support) << key_bits) |
                gather(k, spec.key_support));
            value[i] = spec.target.eval(p, k);
        }
    }

    std::vector<unsigned> gammas;
    for (unsigned g : spec.gamma_h_list) {
        if (g == 0 || g >= (1U << kGammaWidth))
            throw MaskError("gamma_h " + std::to_string(g) + " out of range");
        if (std::find(gammas.begin(), gammas.end(), g) == gammas.end())
            gammas.push_back(g);
    }

    SearchResult result;
    std::vector<LinearApproximation> found;
    const std::size_t domain = std::size_t{1} << (pi_bits + key_bits);
    const std::uint64_t key_mask = (std::uint64_t{1} << key_bits) - 1;
    std::vector<double> table(domain);
    for (unsigned g : gammas) {
        std::fill(table.begin(), table.end(), 0.0);
        for (std::uint64_t i = 0; i < n; ++i)
            table[joint[i]] += (parity(value[i] & g) ? -1.0 : 1.0);
        fwht_inplace_parallel(table);

        for (std::size_t idx = 0; idx < domain && !result.partial; ++idx) {
            const std::uint64_t kbits = idx & key_mask;
            const std::uint64_t pbits = idx >> key_bits;
            const auto kw = static_cast<unsigned>(std::popcount(kbits));
            if (kw == 0 || kw > spec.max_kappa_weight ||
                static_cast<unsigned>(std::popcount(pbits)) > spec.max_pi_weight)
                continue;
            if (result.evaluated >= spec.budget) {
                result.partial = true;
                break;
            }
            ++result.evaluated;
            const double signed_bias = table[idx] / (2.0 * static_cast<double>(n));
            if (std::fabs(signed_bias) < spec.min_bias || signed_bias == 0.0)
                continue;
            LinearApproximation a;
            a.pi = BitVector(mask_from(spec.pi_support, pbits), 64);
            a.kappa = BitVector(mask_from(spec.key_support, kbits), 64);
            a.gamma_h = BitVector(g, kGammaWidth);
            a.b = signed_bias < 0 ? 1U : 0U;
            a.bias = std::min(0.5, std::fabs(signed_bias));
            a.rounds = spec.rounds;
            a.register_load = spec.register_load;
            found.push_back(a);
        }
        if (result.partial)
            break;
    }
    result.set = ApproximationSet(std::move(found));
    result.kappa_rank = result.set.kappa_rank();
    result.full_rank = !result.set.empty() && result.kappa_rank == result.set.k();
    return result;
}

double data_complexity(const LinearApproximation &a) {
    if (!(a.bias > 0))
        throw ModelError("data complexity needs a positive bias");
    return 1.0 / (a.bias * a.bias);
}

double multi_data_complexity(const std::vector<LinearApproximation> &items) {
    if (items.empty())
        throw DataError("empty approximation list");
    double sum = 0.0;
    for (const auto &a : items) {
        if (!(a.bias > 0))
            throw ModelError("data complexity needs positive biases");
        sum += a.bias * a.bias;
    }
    return 1.0 / sum;
}

double multi_data_complexity(const ApproximationSet &set) {
    return multi_data_complexity(set.items());
}

} // namespace mlpa
