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

#include "mlpa/leakage.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace mlpa;

TEST_SUITE("leakage") {

TEST_CASE("noiseless HW sample is the register weight") {
    std::mt19937_64 rng(11);
    DeviceConfig cfg;
    cfg.register_rounds = {1};
    for (int t = 0; t < 50; ++t) {
        const BitVector key(rng(), 64), p(rng(), 64);
        const Trace tr = simulate_trace(cfg, key, p);
        REQUIRE(tr.samples.size() == 1);
        const auto state = des_rounds(p, des_key_schedule(key), 1);
        CHECK(tr.samples[0] == static_cast<float>(hamming_weight(state.lr())));
        CHECK(tr.sample_map == std::vector<std::size_t>{0});
        CHECK_FALSE(tr.ciphertext.has_value());
    }
}

TEST_CASE("noiseless HD samples are transition weights") {
    std::mt19937_64 rng(12);
    DeviceConfig cfg;
    cfg.register_rounds = {1, 2};
    cfg.leakage = LeakageModel::HammingDistance;
    for (int t = 0; t < 50; ++t) {
        const BitVector key(rng(), 64), p(rng(), 64);
        const auto ks = des_key_schedule(key);
        const Trace tr = simulate_trace(cfg, key, p);
        CHECK(tr.samples[0] == static_cast<float>(hamming_weight(register_transition(p, ks, 1))));
        CHECK(tr.samples[1] == static_cast<float>(hamming_weight(register_transition(p, ks, 2))));
    }
}

TEST_CASE("HD predecessor: explicit state, reset state and glued blocks") {
    const BitVector key(0x133457799BBCDFF1ULL, 64), p(0x0123456789ABCDEFULL, 64);
    const auto ks = des_key_schedule(key);
    const auto s1 = des_rounds(p, ks, 1).lr().value();
    const auto s3 = des_rounds(p, ks, 3).lr().value();
    const auto s4 = des_rounds(p, ks, 4).lr().value();
    DeviceConfig cfg;
    cfg.leakage = LeakageModel::HammingDistance;
    cfg.register_rounds = {1};
    CHECK(simulate_trace(cfg, key, p, 0x0ULL).samples[0] ==
          static_cast<float>(hamming_weight(s1)));
    cfg.reset_state = ~0ULL;
    CHECK(simulate_trace(cfg, key, p).samples[0] ==
          static_cast<float>(hamming_weight(~s1)));

    DeviceConfig glued;
    glued.leakage = LeakageModel::HammingDistance;
    glued.register_rounds = {3, 4};
    const Trace tr = simulate_trace(glued, key, p);
    REQUIRE(tr.samples.size() == 2);
    const auto ip = des_initial_permutation(p).value();
    CHECK(tr.samples[0] == static_cast<float>(hamming_weight(ip ^ s3)));
    CHECK(tr.samples[1] == static_cast<float>(hamming_weight(s3 ^ s4)));
}

TEST_CASE("HD samples are invariant under complementing both states") {
    std::mt19937_64 rng(13);
    for (int t = 0; t < 100; ++t) {
        const std::uint64_t a = rng(), b = rng();
        CHECK(hamming_weight(a ^ b) == hamming_weight(~a ^ ~b));
    }
    // Through the simulator: a complemented reset state against a
    // complemented key gives the same first transition (DES complementation).
    const BitVector key(rng(), 64), p(rng(), 64);
    DeviceConfig cfg;
    cfg.leakage = LeakageModel::HammingDistance;
    const auto ip = des_initial_permutation(p).value();
    cfg.reset_state = ip;
    const float a = simulate_trace(cfg, key, p).samples[0];
    cfg.reset_state = ~ip;
    const float b = simulate_trace(cfg, ~key, ~p).samples[0];
    CHECK(a == b);
}

TEST_CASE("glued block emits no early samples") {
    DeviceConfig cfg;
    cfg.register_rounds = {3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16};
    cfg.samples_per_load = 2;
    const Trace tr = simulate_trace(cfg, BitVector(1, 64), BitVector(2, 64));
    CHECK(tr.samples.size() == 28);
    CHECK_FALSE(cfg.sample_index_of(1).has_value());
    CHECK_FALSE(cfg.sample_index_of(2).has_value());
    CHECK(cfg.sample_index_of(3) == 0);
    CHECK(cfg.sample_index_of(4) == 2);
    CHECK(tr.sample_map[1] == 2);
    // Padding samples carry noise only: zero without noise.
    CHECK(tr.samples[1] == 0.0F);
}

TEST_CASE("noise has the configured spread") {
    DeviceConfig cfg;
    cfg.noise_sigma = 2.0;
    cfg.seed = 99;
    const BitVector key(0xABCDEF, 64), p(0x123456, 64);
    DeviceConfig quiet = cfg;
    quiet.noise_sigma = 0.0;
    const double truth = simulate_trace(quiet, key, p).samples[0];
    double sum = 0;
    for (std::uint64_t i = 0; i < 10000; ++i)
        sum += simulate_trace(cfg, key, p, std::nullopt, i).samples[0];
    const double mean = sum / 10000;
    CHECK(std::fabs(mean - truth) <= 3 * 2.0 / std::sqrt(10000.0));
}

TEST_CASE("campaign determinism and statistics") {
    DeviceConfig cfg;
    cfg.seed = 5;
    cfg.noise_sigma = 0.5;
    const BitVector key(0x0F0F0F0F0F0F0F0FULL, 64);
    const auto one = simulate_campaign(cfg, key, 1);
    CHECK(one.size() == 1);

    const auto a = simulate_campaign(cfg, key, 1000);
    const auto b = simulate_campaign(cfg, key, 1000);
    const auto c = simulate_campaign_serial(cfg, key, 1000);
    for (std::size_t i = 0; i < 1000; ++i) {
        CHECK(a.traces[i].samples == b.traces[i].samples);
        CHECK(a.traces[i].samples == c.traces[i].samples);
        CHECK(a.traces[i].plaintext == c.traces[i].plaintext);
    }
    cfg.noise_sigma = 0.0;
    const auto q = simulate_campaign(cfg, key, 1000);
    CHECK(std::fabs(q.sample_mean(0) - 32.0) <= 3 * 4.0 / std::sqrt(1000.0));

    CHECK_THROWS_AS(simulate_campaign(cfg, key, 0), DataError);
    CHECK_THROWS_AS(simulate_campaign(cfg, key, 3, PlaintextSource::FixedList, {}),
                    DataError);
    const auto fixed = simulate_campaign(cfg, key, 4, PlaintextSource::FixedList,
                                         {BitVector(7, 64), BitVector(9, 64)});
    CHECK(fixed.traces[2].plaintext == BitVector(7, 64));
    CHECK(fixed.traces[3].plaintext == BitVector(9, 64));
}

TEST_CASE("config validation") {
    DeviceConfig cfg;
    cfg.register_rounds = {};
    CHECK_THROWS_AS(cfg.validate(), ModelError);
    cfg.register_rounds = {2, 2};
    CHECK_THROWS_AS(cfg.validate(), ModelError);
    cfg.register_rounds = {3, 2};
    CHECK_THROWS_AS(cfg.validate(), ModelError);
    cfg.register_rounds = {17};
    CHECK_THROWS_AS(cfg.validate(), ModelError);
    cfg.register_rounds = {1};
    cfg.noise_sigma = -1;
    CHECK_THROWS_AS(cfg.validate(), ModelError);
    cfg.noise_sigma = 0;
    cfg.samples_per_load = 0;
    CHECK_THROWS_AS(cfg.validate(), ModelError);
    CHECK_THROWS_AS(simulate_trace(DeviceConfig{}, BitVector(0, 64), BitVector(0, 32)),
                    WidthError);
}

TEST_CASE("threshold trick") {
    CHECK(power_to_hw_bits(35.0, 32.0, 0x20U) == 1);
    CHECK(power_to_hw_bits(35.0, 32.0, 0x10U) == 0);
    CHECK(power_to_hw_bits(30.0, 32.0, 0x10U) == 1);
    CHECK(power_to_hw_bits(30.0, 32.0, BitVector(0x20, 7)) == 0);
    CHECK_THROWS_AS(power_to_hw_bits(1.0, 0.0, 0x30U), MaskError);
    CHECK_THROWS_AS(power_to_hw_bits(1.0, 0.0, BitVector(0x01, 7)), MaskError);
    // Exact bits for H in [16,48) with the midpoint as mean.
    for (unsigned h = 16; h < 48; ++h) {
        CHECK(power_to_hw_bits(h, 31.5, 0x20U) == ((h >> 5) & 1U));
        CHECK(power_to_hw_bits(h, 31.5, 0x10U) == ((h >> 4) & 1U));
    }
}

TEST_CASE("AES last round device") {
    DeviceConfig cfg;
    cfg.cipher = CipherKind::AesLastRound;
    cfg.register_rounds = {1, 2};
    const BitVector key(0x0011223344556677ULL, 64);
    AesBlock state{};
    for (unsigned i = 0; i < 16; ++i)
        state[i] = static_cast<std::uint8_t>(17 * i + 3);
    const Trace tr = simulate_aes_trace(cfg, key, state);
    const AesBlock ct = aes_last_round_encrypt(state, aes_round_key_from(key));
    CHECK(aes_trace_ciphertext(tr) == ct);
    unsigned hs = 0, hc = 0;
    for (unsigned i = 0; i < 16; ++i) {
        hs += hamming_weight(state[i]);
        hc += hamming_weight(ct[i]);
    }
    CHECK(tr.samples[0] == static_cast<float>(hs));
    CHECK(tr.samples[1] == static_cast<float>(hc));

    cfg.leakage = LeakageModel::HammingDistance;
    CHECK_THROWS_AS(simulate_aes_trace(cfg, key, state), ModelError);
    cfg.reset_state = 0;
    CHECK(simulate_aes_trace(cfg, key, state).samples[0] == static_cast<float>(hs));
    CHECK_THROWS_AS(simulate_trace(cfg, key, BitVector(0, 64)), ModelError);
}

TEST_CASE("affine transform") {
    DeviceConfig cfg;
    auto c = simulate_campaign(cfg, BitVector(3, 64), 10);
    const auto before = c.traces[4].samples[0];
    apply_affine(c, 2.0, 5.0);
    CHECK(c.traces[4].samples[0] == doctest::Approx(2.0 * before + 5.0));
}

}
