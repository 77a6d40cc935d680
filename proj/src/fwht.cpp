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

#include "mlpa/fwht.hpp"

#include "mlpa/errors.hpp"
#include "mlpa/parallel.hpp"

#include <bit>
#include <cstdint>
#include <string>

namespace mlpa {
namespace {

void check_shape(std::size_t n) {
    if (n == 0 || !std::has_single_bit(n))
        throw ShapeError("transform length " + std::to_string(n) +
                         " is not a power of two");
}

} // namespace

void fwht_inplace(std::span<double> values) {
    const std::size_t n = values.size();
    check_shape(n);
    for (std::size_t half = 1; half < n; half <<= 1)
        for (std::size_t block = 0; block < n; block += 2 * half)
            for (std::size_t i = block; i < block + half; ++i) {
                const double a = values[i];
                const double b = values[i + half];
                values[i] = a + b;
                values[i + half] = a - b;
            }
}

void fwht_inplace_parallel(std::span<double> values) {
    const std::size_t n = values.size();
    check_shape(n);
    double *v = values.data();
    const auto pairs = static_cast<std::int64_t>(n / 2);
    for (std::size_t half = 1; half < n; half <<= 1) {
#pragma omp parallel for schedule(static) num_threads(worker_count())
        for (std::int64_t p = 0; p < pairs; ++p) {
            const auto up = static_cast<std::size_t>(p);
            const std::size_t i = (up / half) * 2 * half + (up % half);
            const double a = v[i];
            const double b = v[i + half];
            v[i] = a + b;
            v[i + half] = a - b;
        }
    }
}

std::vector<double> fwht(std::vector<double> values) {
    fwht_inplace(values);
    return values;
}

} // namespace mlpa
