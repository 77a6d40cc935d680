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

#include "mlpa/dpa.hpp"

#include "mlpa/errors.hpp"
#include "mlpa/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

namespace mlpa {
namespace {

/// Neumaier compensated accumulator.
struct CompensatedSum {
    double sum = 0.0;
    double comp = 0.0;
    void add(double x) {
        const double t = sum + x;
        if (std::fabs(sum) >= std::fabs(x))
            comp += (sum - t) + x;
        else
            comp += (x - t) + sum;
        sum = t;
    }
    double value() const { return sum + comp; }
};

std::vector<unsigned> selection_bits(const Campaign &campaign,
                                     const SelectionFunction &selection,
                                     std::uint64_t guess) {
    std::vector<unsigned> bits(campaign.size());
    for (std::size_t i = 0; i < campaign.size(); ++i)
        bits[i] = selection.predict(campaign.traces[i], guess) & 1U;
    return bits;
}

double delta_at(const Campaign &campaign, const std::vector<unsigned> &bits,
                std::size_t j) {
    CompensatedSum s0, s1;
    std::size_t n1 = 0;
    for (std::size_t i = 0; i < campaign.size(); ++i) {
        const double v = campaign.traces[i].samples[j];
        if (bits[i]) {
            s1.add(v);
            ++n1;
        } else {
            s0.add(v);
        }
    }
    const std::size_t n0 = campaign.size() - n1;
    if (n0 == 0 || n1 == 0)
        return 0.0;
    return s1.value() / static_cast<double>(n1) - s0.value() / static_cast<double>(n0);
}

void check_campaign(const Campaign &campaign) {
    if (campaign.traces.empty())
        throw DataError("empty campaign");
}

void check_sample(const Campaign &campaign, std::size_t j) {
    if (j >= campaign.samples_per_trace())
        throw IndexError("sample index " + std::to_string(j) + " out of range");
}

double guess_score(const Campaign &campaign, const SelectionFunction &selection,
                   std::uint64_t guess, std::optional<std::size_t> sample_index) {
    const auto bits = selection_bits(campaign, selection, guess);
    if (sample_index)
        return std::fabs(delta_at(campaign, bits, *sample_index));
    double best = 0.0;
    for (std::size_t j = 0; j < campaign.samples_per_trace(); ++j)
        best = std::max(best, std::fabs(delta_at(campaign, bits, j)));
    return best;
}

void check_rank_args(const Campaign &campaign, const SelectionFunction &selection,
                     std::optional<std::size_t> sample_index) {
    check_campaign(campaign);
    selection.validate();
    if (sample_index)
        check_sample(campaign, *sample_index);
}

double mean_of(const std::vector<double> &v) {
    CompensatedSum s;
    for (double x : v)
        s.add(x);
    return s.value() / static_cast<double>(v.size());
}

std::vector<double> correlations_for(const Campaign &campaign,
                                     const std::vector<double> &pred) {
    const std::size_t n = campaign.size();
    if (pred.size() != n)
        throw DataError("prediction count differs from trace count");
    const double pm = mean_of(pred);
    CompensatedSum pvar;
    for (double x : pred)
        pvar.add((x - pm) * (x - pm));
    if (!(pvar.value() > 0.0))
        throw DegenerateModelError("prediction vector has zero variance");

    const std::size_t ns = campaign.samples_per_trace();
    std::vector<double> r(ns, 0.0);
    for (std::size_t j = 0; j < ns; ++j) {
        CompensatedSum ts;
        for (const auto &t : campaign.traces)
            ts.add(t.samples[j]);
        const double tm = ts.value() / static_cast<double>(n);
        CompensatedSum cov, tvar;
        for (std::size_t i = 0; i < n; ++i) {
            const double dt = campaign.traces[i].samples[j] - tm;
            cov.add((pred[i] - pm) * dt);
            tvar.add(dt * dt);
        }
        if (tvar.value() > 0.0)
            r[j] = std::clamp(cov.value() / std::sqrt(pvar.value() * tvar.value()),
                              -1.0, 1.0);
    }
    return r;
}

} // namespace

void SelectionFunction::validate() const {
    if (subkey_space == 0)
        throw ModelError("empty subkey space");
    if (!(bias > 0.0 && bias <= 0.5))
        throw ModelError("selection bias must lie in (0, 1/2]");
    if (!predict)
        throw ModelError("selection has no predictor");
}

SelectionFunction des_sbox_selection(unsigned box, unsigned bit) {
    const unsigned pos = des_sbox_output_position(box, bit);
    SelectionFunction sel;
    sel.kind = SelectionKind::Deterministic;
    sel.subkey_space = 64;
    sel.bias = 0.5;
    sel.target_load = 1;
    sel.predict = [box, bit, pos](const Trace &t, std::uint64_t guess) -> unsigned {
        const std::uint64_t ip = des_initial_permutation(t.plaintext).value();
        const auto left = static_cast<std::uint32_t>(ip >> 32);
        const auto right = static_cast<std::uint32_t>(ip);
        const std::uint64_t e = des_expand(right);
        const auto x = static_cast<unsigned>(((e >> (42 - 6 * (box - 1))) ^ guess) & 0x3FU);
        const unsigned s = des_sbox(box, x);
        return raw_bit(left, pos, 32) ^ ((s >> (4 - bit)) & 1U);
    };
    return sel;
}

SelectionFunction probabilistic_selection(const SelectionFunction &base,
                                          double eps, std::uint64_t coin_seed) {
    if (!(eps > 0.0 && eps <= 0.5))
        throw ModelError("selection bias must lie in (0, 1/2]");
    SelectionFunction sel = base;
    sel.kind = SelectionKind::Probabilistic;
    sel.bias = eps;
    const double flip_probability = 0.5 - eps;
    const std::uint64_t salt = mix64(coin_seed);
    auto inner = base.predict;
    sel.predict = [inner, flip_probability, salt](const Trace &t,
                                                  std::uint64_t guess) -> unsigned {
        const double u = static_cast<double>(mix64(t.plaintext.value() ^ salt) >> 11) *
                         0x1.0p-53;
        return inner(t, guess) ^ (u < flip_probability ? 1U : 0U);
    };
    return sel;
}

std::uint64_t des_sbox_subkey(const BitVector &master, unsigned box, unsigned round) {
    if (box < 1 || box > 8)
        throw IndexError("S-box index " + std::to_string(box));
    const auto ks = des_key_schedule(master);
    return (ks.round_key(round) >> (42 - 6 * (box - 1))) & 0x3FU;
}

DifferentialTrace differential_trace_from_bits(const Campaign &campaign,
                                               const std::vector<unsigned> &bits,
                                               std::uint64_t guess) {
    check_campaign(campaign);
    if (bits.size() != campaign.size())
        throw DataError("one selection bit per trace is required");
    DifferentialTrace d;
    d.guess = guess;
    d.n_traces_used = campaign.size();
    const std::size_t n1 = static_cast<std::size_t>(
        std::count_if(bits.begin(), bits.end(), [](unsigned b) { return b != 0; }));
    d.values.assign(campaign.samples_per_trace(), 0.0);
    if (n1 == 0 || n1 == campaign.size()) {
        d.degenerate = true;
        return d;
    }
    for (std::size_t j = 0; j < d.values.size(); ++j)
        d.values[j] = delta_at(campaign, bits, j);
    return d;
}

DifferentialTrace differential_trace(const Campaign &campaign,
                                     const SelectionFunction &selection,
                                     std::uint64_t guess) {
    check_campaign(campaign);
    selection.validate();
    return differential_trace_from_bits(campaign,
                                        selection_bits(campaign, selection, guess),
                                        guess);
}

DifferentialTrace probabilistic_differential_trace(const Campaign &campaign,
                                                   const SelectionFunction &selection,
                                                   std::uint64_t guess) {
    // The partition statistic is the same; only the expected peak height
    // (2*eps times the deterministic one) differs.
    return differential_trace(campaign, selection, guess);
}

std::size_t GuessRanking::rank_of(std::uint64_t guess) const {
    for (std::size_t i = 0; i < entries.size(); ++i)
        if (entries[i].guess == guess)
            return i + 1;
    return 0;
}

GuessRanking rank_scores(std::vector<GuessScore> scores) {
    std::stable_sort(scores.begin(), scores.end(),
                     [](const GuessScore &a, const GuessScore &b) {
                         if (a.score != b.score)
                             return a.score > b.score;
                         return a.guess < b.guess;
                     });
    return {std::move(scores)};
}

GuessRanking dpa_rank(const Campaign &campaign, const SelectionFunction &selection,
                      std::optional<std::size_t> sample_index) {
    check_rank_args(campaign, selection, sample_index);
    std::vector<GuessScore> scores(selection.subkey_space);
    const auto guesses = static_cast<std::int64_t>(selection.subkey_space);
#pragma omp parallel for schedule(dynamic) num_threads(worker_count())
    for (std::int64_t g = 0; g < guesses; ++g) {
        const auto ug = static_cast<std::uint64_t>(g);
        scores[ug] = {ug, guess_score(campaign, selection, ug, sample_index)};
    }
    return rank_scores(std::move(scores));
}

GuessRanking dpa_rank_serial(const Campaign &campaign,
                             const SelectionFunction &selection,
                             std::optional<std::size_t> sample_index) {
    check_rank_args(campaign, selection, sample_index);
    std::vector<GuessScore> scores;
    for (std::uint64_t g = 0; g < selection.subkey_space; ++g)
        scores.push_back({g, guess_score(campaign, selection, g, sample_index)});
    return rank_scores(std::move(scores));
}

std::vector<SelectionFunction> des_sbox_selections(unsigned box) {
    std::vector<SelectionFunction> out;
    for (unsigned bit = 1; bit <= 4; ++bit)
        out.push_back(des_sbox_selection(box, bit));
    return out;
}

GuessRanking dpa_rank_multibit(const Campaign &campaign,
                               const std::vector<SelectionFunction> &selections,
                               std::optional<std::size_t> sample_index,
                               PeakPolarity polarity) {
    if (selections.empty())
        throw ModelError("no selection function");
    for (const auto &s : selections) {
        check_rank_args(campaign, s, sample_index);
        if (s.subkey_space != selections.front().subkey_space)
            throw ModelError("selections disagree on the guess space");
    }
    const std::uint64_t space = selections.front().subkey_space;
    std::vector<GuessScore> scores(space);
    const std::size_t first = sample_index.value_or(0);
    const std::size_t last = sample_index ? first + 1 : campaign.samples_per_trace();
#pragma omp parallel for schedule(dynamic) num_threads(worker_count())
    for (std::int64_t g = 0; g < static_cast<std::int64_t>(space); ++g) {
        const auto ug = static_cast<std::uint64_t>(g);
        std::vector<double> acc(last - first, 0.0);
        for (const auto &s : selections) {
            const auto bits = selection_bits(campaign, s, ug);
            for (std::size_t j = first; j < last; ++j) {
                const double d = delta_at(campaign, bits, j);
                acc[j - first] += polarity == PeakPolarity::Positive ? d : std::fabs(d);
            }
        }
        scores[ug] = {ug, *std::max_element(acc.begin(), acc.end())};
    }
    return rank_scores(std::move(scores));
}

Campaign subtract_known_leakage(const Campaign &campaign, std::size_t sample_index,
                                const std::function<double(const Trace &)> &known) {
    check_campaign(campaign);
    check_sample(campaign, sample_index);
    Campaign out = campaign;
    for (auto &t : out.traces)
        t.samples[sample_index] =
            static_cast<float>(t.samples[sample_index] - known(t));
    return out;
}

double des_round1_known_weight(const Trace &trace) {
    const std::uint64_t ip = des_initial_permutation(trace.plaintext).value();
    return hamming_weight(ip & 0xFFFFFFFFULL);
}

double flatness_threshold(const Campaign &campaign,
                          const SelectionFunction &selection, std::uint64_t guess,
                          std::size_t sample_index, unsigned permutations,
                          std::uint64_t seed) {
    check_campaign(campaign);
    check_sample(campaign, sample_index);
    if (permutations < 2)
        throw DataError("flatness calibration needs at least 2 permutations");
    const auto bits = selection_bits(campaign, selection, guess);
    std::vector<double> deltas(permutations);
#pragma omp parallel for schedule(dynamic) num_threads(worker_count())
    for (std::int64_t p = 0; p < static_cast<std::int64_t>(permutations); ++p) {
        auto shuffled = bits;
        std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(p)));
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        deltas[static_cast<std::size_t>(p)] = delta_at(campaign, shuffled, sample_index);
    }
    const double m = mean_of(deltas);
    CompensatedSum ss;
    for (double d : deltas)
        ss.add((d - m) * (d - m));
    return 4.5 * std::sqrt(ss.value() / static_cast<double>(permutations - 1));
}

std::vector<std::vector<double>>
pearson_cpa(const Campaign &campaign,
            const std::vector<std::vector<double>> &predictions) {
    check_campaign(campaign);
    std::vector<std::vector<double>> r(predictions.size());
    const auto guesses = static_cast<std::int64_t>(predictions.size());
    // Exceptions cannot leave an OpenMP region; validate up front.
    for (const auto &p : predictions) {
        if (p.size() != campaign.size())
            throw DataError("prediction count differs from trace count");
        const auto [lo, hi] = std::minmax_element(p.begin(), p.end());
        if (*lo == *hi)
            throw DegenerateModelError("prediction vector has zero variance");
    }
#pragma omp parallel for schedule(dynamic) num_threads(worker_count())
    for (std::int64_t g = 0; g < guesses; ++g)
        r[static_cast<std::size_t>(g)] =
            correlations_for(campaign, predictions[static_cast<std::size_t>(g)]);
    return r;
}

std::vector<std::vector<double>>
pearson_cpa_serial(const Campaign &campaign,
                   const std::vector<std::vector<double>> &predictions) {
    check_campaign(campaign);
    std::vector<std::vector<double>> r;
    for (const auto &p : predictions)
        r.push_back(correlations_for(campaign, p));
    return r;
}

GuessRanking cpa_rank(const std::vector<std::vector<double>> &correlations,
                      std::optional<std::size_t> sample_index) {
    std::vector<GuessScore> scores;
    for (std::size_t g = 0; g < correlations.size(); ++g) {
        const auto &r = correlations[g];
        double s = 0.0;
        if (sample_index) {
            if (*sample_index >= r.size())
                throw IndexError("sample index out of range");
            s = std::fabs(r[*sample_index]);
        } else {
            for (double v : r)
                s = std::max(s, std::fabs(v));
        }
        scores.push_back({g, s});
    }
    return rank_scores(std::move(scores));
}

std::vector<std::vector<double>> aes_last_round_predictions(const Campaign &campaign,
                                                            unsigned byte_index) {
    if (byte_index >= 16)
        throw IndexError("AES byte index " + std::to_string(byte_index));
    std::vector<std::vector<double>> pred(256, std::vector<double>(campaign.size()));
    for (std::size_t i = 0; i < campaign.size(); ++i) {
        const AesBlock ct = aes_trace_ciphertext(campaign.traces[i]);
        for (unsigned g = 0; g < 256; ++g)
            pred[g][i] = hamming_weight(
                aes_last_round_state(ct, static_cast<std::uint8_t>(g), byte_index));
    }
    return pred;
}

void write_score_csv(std::ostream &out, const GuessRanking &ranking) {
    out << "guess,hex_score,rank\n";
    char buf[64];
    for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
        const auto &e = ranking.entries[i];
        std::snprintf(buf, sizeof buf, "0x%llx,%a,%zu\n",
                      static_cast<unsigned long long>(e.guess), e.score, i + 1);
        out << buf;
    }
}

} // namespace mlpa
