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

#include "mlpa/errors.hpp"
#include "mlpa/fwht.hpp"

#include <doctest.h>

#include <bit>
#include <cmath>
#include <random>

using namespace mlpa;

namespace {

std::vector<double> brute_force_wht(const std::vector<double> &in) {
    std::vector<double> out(in.size(), 0.0);
    for (std::size_t k = 0; k < in.size(); ++k)
        for (std::size_t x = 0; x < in.size(); ++x)
            out[k] += (std::popcount(k & x) & 1) ? -in[x] : in[x];
    return out;
}

} // namespace

TEST_SUITE("fwht") {

TEST_CASE("delta at zero transforms to all ones") {
    std::vector<double> v(64, 0.0);
    v[0] = 1.0;
    for (double x : fwht(v))
        CHECK(x == 1.0);
}

TEST_CASE("transform is an involution up to scale") {
    std::mt19937_64 rng(20);
    std::normal_distribution<double> n;
    for (unsigned k : {0U, 1U, 3U, 7U, 10U}) {
        std::vector<double> v(std::size_t{1} << k);
        for (auto &x : v)
            x = n(rng);
        const auto twice = fwht(fwht(v));
        for (std::size_t i = 0; i < v.size(); ++i)
            CHECK(twice[i] == doctest::Approx(v[i] * static_cast<double>(v.size())).epsilon(1e-12));
    }
}

TEST_CASE("matches the quadratic definition") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-5, 5);
    std::vector<double> v(256);
    for (auto &x : v)
        x = u(rng);
    const auto fast = fwht(v);
    const auto slow = brute_force_wht(v);
    for (std::size_t i = 0; i < v.size(); ++i)
        CHECK(std::fabs(fast[i] - slow[i]) <= 1e-9);
}

TEST_CASE("parallel version is bit-identical") {
    std::mt19937_64 rng(22);
    std::normal_distribution<double> n;
    std::vector<double> v(std::size_t{1} << 16);
    for (auto &x : v)
        x = n(rng);
    auto a = v, b = v;
    fwht_inplace(a);
    fwht_inplace_parallel(b);
    CHECK(a == b);
}

TEST_CASE("rejects lengths that are not powers of two") {
    CHECK_THROWS_AS(fwht(std::vector<double>{}), ShapeError);
    CHECK_THROWS_AS(fwht(std::vector<double>(3, 0.0)), ShapeError);
    CHECK_THROWS_AS(fwht(std::vector<double>(96, 0.0)), ShapeError);
    std::vector<double> bad(12);
    CHECK_THROWS_AS(fwht_inplace_parallel(bad), ShapeError);
}

}
