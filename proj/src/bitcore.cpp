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

#include "mlpa/bitcore.hpp"

#include <charconv>
#include <cstdio>

namespace mlpa {

BitVector::BitVector(std::uint64_t value, unsigned width)
    : value_(value), width_(width) {
    if (width < 1 || width > 64)
        throw WidthError("BitVector width must be in [1,64], got " +
                         std::to_string(width));
    if ((value & ~full_mask(width)) != 0)
        throw WidthError("value does not fit in " + std::to_string(width) +
                         " bits");
}

BitVector BitVector::single_bit(unsigned index, unsigned width) {
    if (index < 1 || index > width)
        throw IndexError("bit index " + std::to_string(index) +
                         " outside [1," + std::to_string(width) + "]");
    return {raw_single_bit(index, width), width};
}

BitVector BitVector::operator^(const BitVector &o) const {
    if (o.width_ != width_)
        throw WidthError("xor of vectors with different widths");
    return {value_ ^ o.value_, width_};
}

BitVector BitVector::operator&(const BitVector &o) const {
    if (o.width_ != width_)
        throw WidthError("and of vectors with different widths");
    return {value_ & o.value_, width_};
}

std::string BitVector::to_string() const {
    char buf[32];
    const int digits = static_cast<int>((width_ + 3) / 4);
    std::snprintf(buf, sizeof buf, "0x%0*llX/%u", digits,
                  static_cast<unsigned long long>(value_), width_);
    return buf;
}

BitVector BitVector::from_string(std::string_view text) {
    const auto slash = text.find('/');
    if (text.size() < 4 || text.substr(0, 2) != "0x" ||
        slash == std::string_view::npos)
        throw FormatError("expected 0x<hex>/<width>, got '" +
                          std::string(text) + "'");
    std::uint64_t value = 0;
    unsigned width = 0;
    const auto hex = text.substr(2, slash - 2);
    const auto dec = text.substr(slash + 1);
    auto r1 = std::from_chars(hex.data(), hex.data() + hex.size(), value, 16);
    auto r2 = std::from_chars(dec.data(), dec.data() + dec.size(), width);
    if (hex.empty() || r1.ec != std::errc{} || r1.ptr != hex.data() + hex.size() ||
        dec.empty() || r2.ec != std::errc{} || r2.ptr != dec.data() + dec.size())
        throw FormatError("malformed bit vector '" + std::string(text) + "'");
    return {value, width};
}

unsigned hamming_weight(const BitVector &v) { return hamming_weight(v.value()); }

unsigned inner_product(const BitVector &v, const BitVector &mask) {
    if (v.width() != mask.width())
        throw WidthError("inner product of vectors with widths " +
                         std::to_string(v.width()) + " and " +
                         std::to_string(mask.width()));
    return parity(v.value() & mask.value());
}

unsigned bit_at(const BitVector &v, unsigned index) {
    if (index < 1 || index > v.width())
        throw IndexError("bit index " + std::to_string(index) +
                         " outside [1," + std::to_string(v.width()) + "]");
    return raw_bit(v.value(), index, v.width());
}

} // namespace mlpa
