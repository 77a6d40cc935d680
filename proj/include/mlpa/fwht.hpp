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

#include <span>
#include <vector>

namespace mlpa {

/// In-place fast Walsh-Hadamard transform:
///   out[K] = sum_x (-1)^<K,x> in[x]
/// in k*2^k butterflies. Throws ShapeError unless the length is a power of
/// two (length 1 is the identity).
void fwht_inplace(std::span<double> values);

/// OpenMP version of fwht_inplace for large tables. Same results bit for
/// bit: every butterfly is computed exactly as in the serial version.
void fwht_inplace_parallel(std::span<double> values);

std::vector<double> fwht(std::vector<double> values);

} // namespace mlpa
