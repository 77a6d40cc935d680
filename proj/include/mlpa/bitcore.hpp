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

#include "mlpa/errors.hpp"

#include <bit>
#include <cstdint>
#include <string>
#include <string_view>

namespace mlpa {

/// Fixed-width (1..64 bits) bit string.
///
/// Bits are numbered 1..width, bit 1 being the most significant one. This is
/// the FIPS-46 convention used by the DES tables, and the convention used to
/// interpret P[i] / K[j] terms of approximation equations.
class BitVector {
  public:
    BitVector() = default;

    /// Throws WidthError if width is not in [1,64] or if value does not fit.
    BitVector(std::uint64_t value, unsigned width);

    std::uint64_t value() const { return value_; }
    unsigned width() const { return width_; }

    /// All-ones value of the given width.
    static std::uint64_t full_mask(unsigned width) {
        return width >= 64 ? ~std::uint64_t{0}
                           : (std::uint64_t{1} << width) - 1;
    }

    /// Vector of the given width with only bit `index` (1-based, MSB first) set.
    static BitVector single_bit(unsigned index, unsigned width);

    BitVector operator^(const BitVector &o) const;
    BitVector operator&(const BitVector &o) const;
    BitVector operator~() const { return {~value_ & full_mask(width_), width_}; }

    bool operator==(const BitVector &) const = default;

    /// Hex rendering with explicit width, e.g. "0x13/8".
    std::string to_string() const;

    /// Inverse of to_string(). Throws FormatError.
    static BitVector from_string(std::string_view text);

  private:
    std::uint64_t value_ = 0;
    unsigned width_ = 64;
};

inline unsigned hamming_weight(std::uint64_t v) {
    return static_cast<unsigned>(std::popcount(v));
}

inline unsigned parity(std::uint64_t v) { return std::popcount(v) & 1U; }

unsigned hamming_weight(const BitVector &v);

/// GF(2) inner product <v, mask>. Throws WidthError on width mismatch.
unsigned inner_product(const BitVector &v, const BitVector &mask);

/// Bit at 1-based index (bit 1 = MSB). Throws IndexError.
unsigned bit_at(const BitVector &v, unsigned index);

/// Raw helpers on 64-bit words with an explicit width, used in hot loops.
inline unsigned raw_bit(std::uint64_t v, unsigned index, unsigned width) {
    return static_cast<unsigned>((v >> (width - index)) & 1U);
}
inline std::uint64_t raw_single_bit(unsigned index, unsigned width) {
    return std::uint64_t{1} << (width - index);
}

} // namespace mlpa
