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

#include "mlpa/mlpa.hpp"

#include "mlpa/errors.hpp"
#include "mlpa/fwht.hpp"
#include "mlpa/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

namespace mlpa {
namespace {

constexpr std::size_t kChunk = 4096;

/// What one trace contributes: both threshold bits, or the rounded H.
struct Observation {
    std::uint64_t plaintext;
    unsigned hw;
    unsigned bit10;
    unsigned bit20;
};

Observation observe(const Trace &t, std::size_t j, double mean, AttackMode mode) {
    const double s = t.samples[j];
    Observation o{t.plaintext.value(), 0, 0, 0};
    if (mode == AttackMode::SimulationExact) {
        o.hw = static_cast<unsigned>(std::clamp<long long>(std::llround(s), 0, 64));
    } else {
        o.bit10 = power_to_hw_bits(s, mean, 0x10U);
        o.bit20 = power_to_hw_bits(s, mean, 0x20U);
    }
    return o;
}

unsigned predict(const LinearApproximation &a, const Observation &o, AttackMode mode) {
    if (mode == AttackMode::SimulationExact)
        return parity(o.plaintext & a.pi.value()) ^ parity(o.hw & a.gamma_h.value()) ^ a.b;
    const unsigned bit = a.gamma_h.value() == 0x10 ? o.bit10 : o.bit20;
    return parity(o.plaintext & a.pi.value()) ^ bit ^ a.b;
}

void check_inputs(const Campaign &campaign, const ApproximationSet &set,
                  std::size_t sample_index, AttackMode mode) {
    if (campaign.traces.empty())
        throw DataError("empty campaign");
    for (const auto &t : campaign.traces)
        if (sample_index >= t.samples.size())
            throw IndexError("sample index " + std::to_string(sample_index) +
                             " out of range");
    if (mode == AttackMode::Measured)
        for (const auto &a : set.items())
            if (a.gamma_h.value() != 0x10 && a.gamma_h.value() != 0x20)
                throw MaskError("measured mode needs gamma_h 0x10 or 0x20");
}

void count_range(const Campaign &campaign, const ApproximationSet &set,
                 std::size_t sample_index, double mean, AttackMode mode,
                 std::size_t begin, std::size_t end, std::vector<std::size_t> &n1) {
    const auto &items = set.items();
    for (std::size_t i = begin; i < end; ++i) {
        const Observation o = observe(campaign.traces[i], sample_index, mean, mode);
        for (std::size_t l = 0; l < items.size(); ++l)
            n1[l] += predict(items[l], o, mode);
    }
}

std::vector<PartitionCounts> to_counts(const std::vector<std::size_t> &n1,
                                       std::size_t n) {
    std::vector<PartitionCounts> out(n1.size());
    for (std::size_t l = 0; l < n1.size(); ++l)
        out[l] = {n - n1[l], n1[l]};
    return out;
}

std::uint64_t random_key(std::uint64_t seed, std::uint64_t trial) {
    std::mt19937_64 rng(derive_seed(derive_seed(seed, "trials"), trial));
    return rng();
}

TrialOutcome run_trial(const TrialSpec &spec, const ApproximationSet &set,
                       std::uint64_t t) {
    DeviceConfig device = spec.device;
    device.seed = derive_seed(derive_seed(spec.seed, "campaign"), t);
    const BitVector key(random_key(spec.seed, t), 64);
    const Campaign campaign = simulate_campaign_serial(device, key, spec.n_traces);

    std::size_t idx = 0;
    if (spec.sample_index) {
        idx = *spec.sample_index;
    } else if (auto s = device.sample_index_of(set.items().front().register_load)) {
        idx = *s;
    }
    const auto result = mlpa_attack(campaign, set, idx, spec.mode);
    TrialOutcome out;
    out.key = key.value();
    out.rank = result.ranking.rank_of(set.restrict_key(key));
    out.success = out.rank == 1;
    return out;
}

void check_trials(const TrialSpec &spec, const ApproximationSet &set) {
    if (spec.n_trials < 1)
        throw DataError("at least one trial is required");
    if (set.empty())
        throw ModelError("empty approximation set");
    spec.device.validate();
}

} // namespace

PartitionCounts partition_counts(const Campaign &campaign,
                                 const LinearApproximation &a,
                                 std::size_t sample_index, double mean,
                                 AttackMode mode) {
    const ApproximationSet one({a});
    const auto counts = partition_counts(campaign, one, sample_index, mean, mode);
    return counts.front();
}

std::vector<PartitionCounts> partition_counts(const Campaign &campaign,
                                              const ApproximationSet &set,
                                              std::size_t sample_index,
                                              double mean, AttackMode mode) {
    check_inputs(campaign, set, sample_index, mode);
    const std::size_t n = campaign.size();
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    std::vector<std::vector<std::size_t>> partial(
        chunks, std::vector<std::size_t>(set.size(), 0));
#pragma omp parallel for schedule(static) num_threads(worker_count())
    for (std::int64_t c = 0; c < static_cast<std::int64_t>(chunks); ++c) {
        const auto begin = static_cast<std::size_t>(c) * kChunk;
        count_range(campaign, set, sample_index, mean, mode, begin,
                    std::min(n, begin + kChunk), partial[static_cast<std::size_t>(c)]);
    }
    std::vector<std::size_t> n1(set.size(), 0);
    for (const auto &p : partial)
        for (std::size_t l = 0; l < n1.size(); ++l)
            n1[l] += p[l];
    return to_counts(n1, n);
}

std::vector<PartitionCounts> partition_counts_serial(const Campaign &campaign,
                                                     const ApproximationSet &set,
                                                     std::size_t sample_index,
                                                     double mean, AttackMode mode) {
    check_inputs(campaign, set, sample_index, mode);
    std::vector<std::size_t> n1(set.size(), 0);
    count_range(campaign, set, sample_index, mean, mode, 0, campaign.size(), n1);
    return to_counts(n1, campaign.size());
}

double log_likelihood_weight(double bias) {
    const double eps = std::min(bias, 0.5 - 1e-9);
    return std::log((0.5 + eps) / (0.5 - eps));
}

NoisyCodeword build_codeword(const std::vector<PartitionCounts> &counts,
                             const ApproximationSet &set) {
    if (counts.size() != set.size())
        throw SupportError("one count pair per relation is required");
    if (set.k() > kMaxDecodeBits)
        throw BudgetError("key support of " + std::to_string(set.k()) +
                          " bits exceeds the decoder limit");
    NoisyCodeword cw;
    cw.k = set.k();
    cw.values.assign(std::size_t{1} << cw.k, 0.0);
    for (std::size_t l = 0; l < set.size(); ++l) {
        const double w = counts[l].balance() * log_likelihood_weight(set.items()[l].bias);
        cw.position_map[set.restricted_kappa(l)] += w;
    }
    for (const auto &[x, w] : cw.position_map)
        cw.values[x] = w;
    cw.defined_positions = cw.position_map.size();
    return cw;
}

std::size_t KeyRanking::rank_of(std::uint64_t subkey) const {
    for (std::size_t i = 0; i < entries.size(); ++i)
        if (entries[i].subkey.value() == subkey)
            return i + 1;
    return 0;
}

KeyRanking decode(const NoisyCodeword &codeword, std::optional<std::size_t> top_m) {
    if (codeword.k > kMaxDecodeBits)
        throw BudgetError("codeword too long to decode");
    if (codeword.values.size() != (std::size_t{1} << codeword.k))
        throw ShapeError("codeword length is not 2^k");
    std::vector<double> scores = codeword.values;
    if (codeword.k >= 16)
        fwht_inplace_parallel(scores);
    else
        fwht_inplace(scores);

    std::vector<std::uint64_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::uint64_t{0});
    const auto better = [&](std::uint64_t a, std::uint64_t b) {
        if (scores[a] != scores[b])
            return scores[a] > scores[b];
        return a < b;
    };
    const std::size_t m = std::min(order.size(), top_m.value_or(order.size()));
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m),
                      order.end(), better);

    KeyRanking r;
    r.uninformative = codeword.defined_positions == 0;
    r.entries.reserve(m);
    const unsigned width = std::max(codeword.k, 1U);
    for (std::size_t i = 0; i < m; ++i)
        r.entries.push_back({BitVector(order[i], width), scores[order[i]]});
    return r;
}

MlpaResult mlpa_attack(const Campaign &campaign, const ApproximationSet &set,
                       std::size_t sample_index, AttackMode mode,
                       std::optional<std::size_t> top_m) {
    if (campaign.traces.empty())
        throw DataError("empty campaign");
    if (set.empty())
        throw ModelError("empty approximation set");
    const double mean =
        mode == AttackMode::Measured ? campaign.sample_mean(sample_index) : 0.0;

    MlpaResult res;
    res.counts = partition_counts(campaign, set, sample_index, mean, mode);
    res.ranking = decode(build_codeword(res.counts, set), top_m);
    const std::uint64_t best = res.ranking.best();
    for (std::size_t l = 0; l < set.size(); ++l) {
        res.votes.push_back(res.counts[l].n1 > res.counts[l].n0 ? 1U : 0U);
        res.parities.push_back(parity(best & set.restricted_kappa(l)));
    }
    return res;
}

std::vector<TrialOutcome> run_trials(const TrialSpec &spec,
                                     const ApproximationSet &set) {
    check_trials(spec, set);
    std::vector<TrialOutcome> out(spec.n_trials);
    std::exception_ptr failure;
    std::mutex failure_lock;
#pragma omp parallel for schedule(dynamic) num_threads(worker_count())
    for (std::int64_t t = 0; t < static_cast<std::int64_t>(spec.n_trials); ++t) {
        try {
            out[static_cast<std::size_t>(t)] =
                run_trial(spec, set, static_cast<std::uint64_t>(t));
        } catch (...) {
            const std::lock_guard<std::mutex> hold(failure_lock);
            if (!failure)
                failure = std::current_exception();
        }
    }
    if (failure)
        std::rethrow_exception(failure);
    return out;
}

std::vector<TrialOutcome> run_trials_serial(const TrialSpec &spec,
                                            const ApproximationSet &set) {
    check_trials(spec, set);
    std::vector<TrialOutcome> out;
    for (std::uint64_t t = 0; t < spec.n_trials; ++t)
        out.push_back(run_trial(spec, set, t));
    return out;
}

double success_rate(const TrialSpec &spec, const ApproximationSet &set) {
    const auto outcomes = run_trials(spec, set);
    const auto wins = std::count_if(outcomes.begin(), outcomes.end(),
                                    [](const TrialOutcome &o) { return o.success; });
    return static_cast<double>(wins) / static_cast<double>(outcomes.size());
}

void write_ranking_csv(std::ostream &out, const KeyRanking &ranking,
                       std::optional<std::uint64_t> correct) {
    out << "rank,subkey_hex,score,is_correct\n";
    char buf[96];
    for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
        const auto &e = ranking.entries[i];
        const char *flag = "";
        if (correct)
            flag = e.subkey.value() == *correct ? "1" : "0";
        std::snprintf(buf, sizeof buf, "%zu,0x%llx,%.17g,%s\n", i + 1,
                      static_cast<unsigned long long>(e.subkey.value()), e.score, flag);
        out << buf;
    }
}

} // namespace mlpa
