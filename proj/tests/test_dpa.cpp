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

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>
#include <sstream>

using namespace mlpa;

namespace {

Campaign des_campaign(std::size_t n, std::uint64_t seed, double sigma = 0.0,
                      BitVector key = BitVector(0x133457799BBCDFF1ULL, 64)) {
    DeviceConfig cfg;
    cfg.register_rounds = {1};
    cfg.noise_sigma = sigma;
    cfg.seed = seed;
    return simulate_campaign(cfg, key, n);
}

Campaign tiny_campaign(const std::vector<std::vector<float>> &rows) {
    Campaign c;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        Trace t;
        t.samples = rows[i];
        t.plaintext = BitVector(i, 64);
        c.traces.push_back(t);
    }
    return c;
}

/// Fraction of traces on which two guesses predict the same bit.
double agreement(const Campaign &c, const SelectionFunction &s, std::uint64_t g1,
                 std::uint64_t g2) {
    std::size_t same = 0;
    for (const auto &t : c.traces)
        same += s.predict(t, g1) == s.predict(t, g2);
    return static_cast<double>(same) / static_cast<double>(c.size());
}

} // namespace

TEST_SUITE("dpa") {

TEST_CASE("differential trace on explicit partitions") {
    const auto c = tiny_campaign({{5.0F, 1.0F}, {2.0F, 4.0F}});
    const auto d = differential_trace_from_bits(c, {1, 0});
    CHECK(d.values == std::vector<double>{3.0, -3.0});
    CHECK_FALSE(d.degenerate);
    CHECK(d.n_traces_used == 2);

    const auto flat = differential_trace_from_bits(c, {1, 1});
    CHECK(flat.degenerate);
    CHECK(flat.values == std::vector<double>{0.0, 0.0});
    CHECK_THROWS_AS(differential_trace_from_bits(Campaign{}, {}), DataError);
    CHECK_THROWS_AS(differential_trace_from_bits(c, {1}), DataError);
}

TEST_CASE("round key guess of the S1 selection") {
    const BitVector key(0x133457799BBCDFF1ULL, 64);
    CHECK(des_sbox_subkey(key, 1) == (0x1B02EFFC7072ULL >> 42));
    CHECK(des_sbox_subkey(key, 8) == (0x1B02EFFC7072ULL & 0x3F));
    CHECK_THROWS_AS(des_sbox_subkey(key, 9), IndexError);
}

TEST_CASE("selection predicts the round-1 register bit") {
    std::mt19937_64 rng(40);
    for (int t = 0; t < 50; ++t) {
        const BitVector key(rng(), 64);
        const auto ks = des_key_schedule(key);
        Trace tr;
        tr.plaintext = BitVector(rng(), 64);
        const auto r1 = des_rounds(tr.plaintext, ks, 1).right;
        for (unsigned box = 1; box <= 8; ++box)
            for (unsigned bit = 1; bit <= 4; ++bit) {
                const auto sel = des_sbox_selection(box, bit);
                CHECK(sel.predict(tr, des_sbox_subkey(key, box)) ==
                      bit_at(r1, des_sbox_output_position(box, bit)));
            }
    }
}

TEST_CASE("correct S1 guess gives the highest peak") {
    const auto c = des_campaign(5000, 1);
    const auto good = des_sbox_subkey(*c.key, 1);
    for (unsigned bit = 1; bit <= 4; ++bit) {
        const auto sel = des_sbox_selection(1, bit);
        const double peak = differential_trace(c, sel, good).values[0];
        for (std::uint64_t g = 0; g < 64; ++g)
            if (g != good)
                CHECK(std::fabs(differential_trace(c, sel, g).values[0]) < peak);
        CHECK(dpa_rank(c, sel, 0).best() == good);
    }
}

TEST_CASE("multi-bit DPA with known-half compensation") {
    const auto c = des_campaign(200, 2);
    const auto clean = subtract_known_leakage(c, 0, des_round1_known_weight);
    const auto r = dpa_rank_multibit(clean, des_sbox_selections(1), 0);
    CHECK(r.best() == des_sbox_subkey(*c.key, 1));
    CHECK(r.entries.size() == 64);
    CHECK_THROWS_AS(dpa_rank_multibit(clean, {}, 0), ModelError);
    CHECK_THROWS_AS(subtract_known_leakage(c, 1, des_round1_known_weight), IndexError);
}

TEST_CASE("uncorrelated wrong guesses give flat differential traces") {
    const auto c = des_campaign(20000, 3, 1.0);
    const auto good = des_sbox_subkey(*c.key, 1);
    for (double eps : {0.5, 0.125}) {
        auto sel = des_sbox_selection(1, 1);
        if (eps < 0.5)
            sel = probabilistic_selection(sel, eps, 77);
        const auto base = des_sbox_selection(1, 1);
        int checked = 0;
        for (std::uint64_t g = 0; g < 64; ++g) {
            if (g == good || std::fabs(agreement(c, base, g, good) - 0.5) > 0.03)
                continue;
            const double thr = flatness_threshold(c, sel, g, 0, 100, g);
            CHECK(std::fabs(probabilistic_differential_trace(c, sel, g).values[0]) < thr);
            ++checked;
        }
        CHECK(checked > 0);
    }
}

TEST_CASE("probabilistic selection") {
    const auto c = des_campaign(500, 4);
    const auto base = des_sbox_selection(1, 2);
    const auto same = probabilistic_selection(base, 0.5, 9);
    for (std::uint64_t g : {0ULL, 17ULL, 63ULL})
        CHECK(probabilistic_differential_trace(c, same, g).values ==
              differential_trace(c, base, g).values);

    const auto p = probabilistic_selection(base, 0.25, 9);
    CHECK(p.kind == SelectionKind::Probabilistic);
    CHECK(p.bias == 0.25);
    const auto big = des_campaign(20000, 5);
    std::size_t right = 0;
    for (const auto &t : big.traces)
        right += p.predict(t, 11) == base.predict(t, 11);
    const double rate = static_cast<double>(right) / 20000.0;
    CHECK(std::fabs(rate - 0.75) < 3 * std::sqrt(0.75 * 0.25 / 20000));
    CHECK_THROWS_AS(probabilistic_selection(base, 0.0, 1), ModelError);
    CHECK_THROWS_AS(probabilistic_selection(base, 0.6, 1), ModelError);
}

TEST_CASE("Pearson CPA") {
    const auto c = tiny_campaign({{1.0F}, {2.0F}, {4.0F}, {8.0F}});
    const auto r = pearson_cpa(c, {{1, 2, 4, 8}, {-1, -2, -4, -8}, {3, 1, 4, 1}});
    CHECK(r[0][0] == doctest::Approx(1.0));
    CHECK(r[1][0] == doctest::Approx(-1.0));
    CHECK(std::fabs(r[2][0]) <= 1.0);
    CHECK_THROWS_AS(pearson_cpa(c, {{2, 2, 2, 2}}), DegenerateModelError);
    CHECK_THROWS_AS(pearson_cpa_serial(c, {{2, 2, 2, 2}}), DegenerateModelError);
    CHECK_THROWS_AS(pearson_cpa(c, {{1, 2}}), DataError);
}

TEST_CASE("CPA on the AES last round") {
    DeviceConfig cfg;
    cfg.cipher = CipherKind::AesLastRound;
    cfg.register_rounds = {1, 2};
    cfg.seed = 6;
    const BitVector key(0xA1B2C3D4E5F60718ULL, 64);
    const auto c = simulate_campaign(cfg, key, 3000);
    const auto rk = aes_round_key_from(key);
    for (unsigned byte : {0U, 5U, 13U}) {
        const auto r = pearson_cpa(c, aes_last_round_predictions(c, byte));
        const auto ranking = cpa_rank(r, 0);
        const std::uint64_t good = rk[byte];
        CHECK(ranking.best() == good);
        for (std::uint64_t g = 0; g < 256; ++g)
            if (g != good)
                CHECK(std::fabs(r[g][0]) < std::fabs(r[good][0]));
    }
    CHECK_THROWS_AS(aes_last_round_predictions(c, 16), IndexError);
}

TEST_CASE("invariants under affine sample transforms") {
    const auto c = des_campaign(1500, 7, 2.0);
    const auto sel = des_sbox_selection(1, 3);
    auto shifted = c;
    apply_affine(shifted, 1.0, 100.0);
    auto scaled = c;
    apply_affine(scaled, 3.0, -7.0);
    for (std::uint64_t g : {0ULL, 21ULL, 42ULL}) {
        const double d = differential_trace(c, sel, g).values[0];
        CHECK(differential_trace(shifted, sel, g).values[0] == doctest::Approx(d).epsilon(1e-4));
        CHECK(differential_trace(scaled, sel, g).values[0] ==
              doctest::Approx(3.0 * d).epsilon(1e-4));
    }
    CHECK(dpa_rank(scaled, sel, 0).best() == dpa_rank(c, sel, 0).best());

    std::vector<double> pred(c.size());
    for (std::size_t i = 0; i < c.size(); ++i)
        pred[i] = sel.predict(c.traces[i], 5);
    const double r0 = pearson_cpa(c, {pred})[0][0];
    CHECK(pearson_cpa(scaled, {pred})[0][0] == doctest::Approx(r0).epsilon(1e-5));
    for (auto &x : pred)
        x = 2.0 * x + 9.0;
    CHECK(pearson_cpa(c, {pred})[0][0] == doctest::Approx(r0).epsilon(1e-9));
}

TEST_CASE("random selection bits have zero mean difference") {
    const auto c = des_campaign(4000, 8, 1.0);
    std::mt19937_64 rng(9);
    std::vector<unsigned> bits(c.size());
    for (auto &b : bits)
        b = rng() & 1U;
    const double d = differential_trace_from_bits(c, bits).values[0];
    // sd of H over a 64-bit register is 4, plus unit noise.
    const double sd = std::sqrt(16.0 + 1.0) * std::sqrt(4.0 / 4000.0);
    CHECK(std::fabs(d) < 3 * sd);
}

TEST_CASE("parallel kernels match their serial references") {
    const auto c = des_campaign(3000, 10, 1.5);
    const auto sel = des_sbox_selection(1, 1);
    for (std::optional<std::size_t> idx : {std::optional<std::size_t>{0}, std::optional<std::size_t>{}}) {
        const auto a = dpa_rank(c, sel, idx);
        const auto b = dpa_rank_serial(c, sel, idx);
        REQUIRE(a.entries.size() == b.entries.size());
        for (std::size_t i = 0; i < a.entries.size(); ++i) {
            CHECK(a.entries[i].guess == b.entries[i].guess);
            CHECK(a.entries[i].score == b.entries[i].score);
        }
    }
    std::vector<std::vector<double>> preds(8, std::vector<double>(c.size()));
    for (std::size_t g = 0; g < 8; ++g)
        for (std::size_t i = 0; i < c.size(); ++i)
            preds[g][i] = sel.predict(c.traces[i], g);
    CHECK(pearson_cpa(c, preds) == pearson_cpa_serial(c, preds));
    CHECK(flatness_threshold(c, sel, 3, 0, 50, 1) == flatness_threshold(c, sel, 3, 0, 50, 1));
}

TEST_CASE("ranking and score report") {
    const auto r = rank_scores({{0, 1.0}, {1, 3.0}, {2, 3.0}, {3, 0.5}});
    CHECK(r.entries[0].guess == 1);
    CHECK(r.entries[1].guess == 2);
    CHECK(r.rank_of(3) == 4);
    CHECK(r.rank_of(9) == 0);

    std::ostringstream out;
    write_score_csv(out, r);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "guess,hex_score,rank");
    std::getline(in, line);
    CHECK(line.rfind("0x1,", 0) == 0);
    const auto comma = line.find(',');
    CHECK(std::strtod(line.c_str() + comma + 1, nullptr) == 3.0);
    CHECK(line.substr(line.rfind(',') + 1) == "1");
}

TEST_CASE("input validation") {
    const auto c = des_campaign(10, 11);
    auto sel = des_sbox_selection(1, 1);
    CHECK_THROWS_AS(dpa_rank(Campaign{}, sel, 0), DataError);
    CHECK_THROWS_AS(dpa_rank(c, sel, 5), IndexError);
    sel.subkey_space = 0;
    CHECK_THROWS_AS(dpa_rank(c, sel, 0), ModelError);
    CHECK_THROWS_AS(differential_trace(Campaign{}, des_sbox_selection(1, 1), 0), DataError);
    CHECK_THROWS_AS(flatness_threshold(c, des_sbox_selection(1, 1), 0, 0, 1, 0), DataError);
}

}
