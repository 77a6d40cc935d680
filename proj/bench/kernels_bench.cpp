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

// Parallel kernels against their serial references.

#include "mlpa/dpa.hpp"
#include "mlpa/fwht.hpp"
#include "mlpa/mlpa.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace mlpa;

namespace {

DeviceConfig hd_device() {
    DeviceConfig d;
    d.register_rounds = {1, 2};
    d.leakage = LeakageModel::HammingDistance;
    d.noise_sigma = 1.0;
    d.seed = 1;
    return d;
}

const BitVector kKey(0x133457799BBCDFF1ULL, 64);

const Campaign &campaign() {
    static const Campaign c = simulate_campaign(hd_device(), kKey, 1 << 16);
    return c;
}

const ApproximationSet &relations() {
    static const ApproximationSet set = [] {
        std::vector<LinearApproximation> items;
        std::mt19937_64 rng(2);
        for (int i = 0; i < 64; ++i) {
            LinearApproximation a;
            a.pi = BitVector(rng(), 64);
            a.kappa = BitVector((rng() & 0xFFFF) | 1, 64);
            a.gamma_h = BitVector(i % 2 ? 0x10 : 0x20, kGammaWidth);
            a.bias = 0.02;
            items.push_back(a);
        }
        return ApproximationSet(items);
    }();
    return set;
}

void BM_simulate_serial(benchmark::State &st) {
    for (auto _ : st)
        benchmark::DoNotOptimize(simulate_campaign_serial(hd_device(), kKey, st.range(0)));
}
void BM_simulate_parallel(benchmark::State &st) {
    for (auto _ : st)
        benchmark::DoNotOptimize(simulate_campaign(hd_device(), kKey, st.range(0)));
}

void BM_partition_serial(benchmark::State &st) {
    const auto &c = campaign();
    const double mean = c.sample_mean(1);
    for (auto _ : st)
        benchmark::DoNotOptimize(
            partition_counts_serial(c, relations(), 1, mean, AttackMode::Measured));
}
void BM_partition_parallel(benchmark::State &st) {
    const auto &c = campaign();
    const double mean = c.sample_mean(1);
    for (auto _ : st)
        benchmark::DoNotOptimize(partition_counts(c, relations(), 1, mean, AttackMode::Measured));
}

std::vector<double> noise_vector(unsigned k) {
    std::vector<double> v(std::size_t{1} << k);
    std::mt19937_64 rng(k);
    std::normal_distribution<double> g;
    for (auto &x : v)
        x = g(rng);
    return v;
}

void BM_fwht_serial(benchmark::State &st) {
    auto v = noise_vector(static_cast<unsigned>(st.range(0)));
    for (auto _ : st) {
        fwht_inplace(v);
        benchmark::ClobberMemory();
    }
}
void BM_fwht_parallel(benchmark::State &st) {
    auto v = noise_vector(static_cast<unsigned>(st.range(0)));
    for (auto _ : st) {
        fwht_inplace_parallel(v);
        benchmark::ClobberMemory();
    }
}

const LinearApproximation &sbox_relation() {
    static const LinearApproximation a = parse_approximation("gamma_h=0xf bias=0.3 eq=0+P[60]+K[60]");
    return a;
}

void BM_bias_serial(benchmark::State &st) {
    const auto target = des_sbox_target(5);
    for (auto _ : st)
        benchmark::DoNotOptimize(
            estimate_bias_monte_carlo_serial(sbox_relation(), target, 1 << 20, 3));
}
void BM_bias_parallel(benchmark::State &st) {
    const auto target = des_sbox_target(5);
    for (auto _ : st)
        benchmark::DoNotOptimize(estimate_bias_monte_carlo(sbox_relation(), target, 1 << 20, 3));
}

void BM_dpa_serial(benchmark::State &st) {
    const auto sel = des_sbox_selection(1, 1);
    for (auto _ : st)
        benchmark::DoNotOptimize(dpa_rank_serial(campaign(), sel, 0));
}
void BM_dpa_parallel(benchmark::State &st) {
    const auto sel = des_sbox_selection(1, 1);
    for (auto _ : st)
        benchmark::DoNotOptimize(dpa_rank(campaign(), sel, 0));
}

} // namespace

BENCHMARK(BM_simulate_serial)->Arg(1 << 14)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_simulate_parallel)->Arg(1 << 14)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_partition_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_partition_parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_fwht_serial)->Arg(16)->Arg(22)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_fwht_parallel)->Arg(16)->Arg(22)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_bias_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_bias_parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_dpa_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_dpa_parallel)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
