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

#include "mlpa/des.hpp"

#include <mutex>
#include <string>

namespace mlpa {
namespace {

// FIPS 46-3 tables, 1-based bit positions.
constexpr std::array<std::uint8_t, 64> kIP = {
    58, 50, 42, 34, 26, 18, 10, 2, 60, 52, 44, 36, 28, 20, 12, 4,
    62, 54, 46, 38, 30, 22, 14, 6, 64, 56, 48, 40, 32, 24, 16, 8,
    57, 49, 41, 33, 25, 17, 9,  1, 59, 51, 43, 35, 27, 19, 11, 3,
    61, 53, 45, 37, 29, 21, 13, 5, 63, 55, 47, 39, 31, 23, 15, 7};

constexpr std::array<std::uint8_t, 64> kFP = {
    40, 8, 48, 16, 56, 24, 64, 32, 39, 7, 47, 15, 55, 23, 63, 31,
    38, 6, 46, 14, 54, 22, 62, 30, 37, 5, 45, 13, 53, 21, 61, 29,
    36, 4, 44, 12, 52, 20, 60, 28, 35, 3, 43, 11, 51, 19, 59, 27,
    34, 2, 42, 10, 50, 18, 58, 26, 33, 1, 41, 9,  49, 17, 57, 25};

constexpr std::array<std::uint8_t, 48> kE = {
    32, 1,  2,  3,  4,  5,  4,  5,  6,  7,  8,  9,  8,  9,  10, 11,
    12, 13, 12, 13, 14, 15, 16, 17, 16, 17, 18, 19, 20, 21, 20, 21,
    22, 23, 24, 25, 24, 25, 26, 27, 28, 29, 28, 29, 30, 31, 32, 1};

constexpr std::array<std::uint8_t, 32> kP = {
    16, 7, 20, 21, 29, 12, 28, 17, 1,  15, 23, 26, 5,  18, 31, 10,
    2,  8, 24, 14, 32, 27, 3,  9,  19, 13, 30, 6,  22, 11, 4,  25};

constexpr std::array<std::uint8_t, 56> kPC1 = {
    57, 49, 41, 33, 25, 17, 9,  1,  58, 50, 42, 34, 26, 18,
    10, 2,  59, 51, 43, 35, 27, 19, 11, 3,  60, 52, 44, 36,
    63, 55, 47, 39, 31, 23, 15, 7,  62, 54, 46, 38, 30, 22,
    14, 6,  61, 53, 45, 37, 29, 21, 13, 5,  28, 20, 12, 4};

constexpr std::array<std::uint8_t, 48> kPC2 = {
    14, 17, 11, 24, 1,  5,  3,  28, 15, 6,  21, 10,
    23, 19, 12, 4,  26, 8,  16, 7,  27, 20, 13, 2,
    41, 52, 31, 37, 47, 55, 30, 40, 51, 45, 33, 48,
    44, 49, 39, 56, 34, 53, 46, 42, 50, 36, 29, 32};

constexpr std::array<std::uint8_t, 16> kShifts = {1, 1, 2, 2, 2, 2, 2, 2,
                                                  1, 2, 2, 2, 2, 2, 2, 1};

constexpr std::uint8_t kSBox[8][64] = {
    {14, 4,  13, 1, 2,  15, 11, 8,  3,  10, 6,  12, 5,  9,  0, 7,
     0,  15, 7,  4, 14, 2,  13, 1,  10, 6,  12, 11, 9,  5,  3, 8,
     4,  1,  14, 8, 13, 6,  2,  11, 15, 12, 9,  7,  3,  10, 5, 0,
     15, 12, 8,  2, 4,  9,  1,  7,  5,  11, 3,  14, 10, 0,  6, 13},
    {15, 1,  8,  14, 6,  11, 3,  4,  9,  7, 2,  13, 12, 0, 5,  10,
     3,  13, 4,  7,  15, 2,  8,  14, 12, 0, 1,  10, 6,  9, 11, 5,
     0,  14, 7,  11, 10, 4,  13, 1,  5,  8, 12, 6,  9,  3, 2,  15,
     13, 8,  10, 1,  3,  15, 4,  2,  11, 6, 7,  12, 0,  5, 14, 9},
    {10, 0,  9,  14, 6, 3,  15, 5,  1,  13, 12, 7,  11, 4,  2,  8,
     13, 7,  0,  9,  3, 4,  6,  10, 2,  8,  5,  14, 12, 11, 15, 1,
     13, 6,  4,  9,  8, 15, 3,  0,  11, 1,  2,  12, 5,  10, 14, 7,
     1,  10, 13, 0,  6, 9,  8,  7,  4,  15, 14, 3,  11, 5,  2,  12},
    {7,  13, 14, 3, 0,  6,  9,  10, 1,  2, 8, 5,  11, 12, 4,  15,
     13, 8,  11, 5, 6,  15, 0,  3,  4,  7, 2, 12, 1,  10, 14, 9,
     10, 6,  9,  0, 12, 11, 7,  13, 15, 1, 3, 14, 5,  2,  8,  4,
     3,  15, 0,  6, 10, 1,  13, 8,  9,  4, 5, 11, 12, 7,  2,  14},
    {2,  12, 4,  1,  7,  10, 11, 6,  8,  5,  3,  15, 13, 0, 14, 9,
     14, 11, 2,  12, 4,  7,  13, 1,  5,  0,  15, 10, 3,  9, 8,  6,
     4,  2,  1,  11, 10, 13, 7,  8,  15, 9,  12, 5,  6,  3, 0,  14,
     11, 8,  12, 7,  1,  14, 2,  13, 6,  15, 0,  9,  10, 4, 5,  3},
    {12, 1,  10, 15, 9, 2,  6,  8,  0,  13, 3,  4,  14, 7,  5,  11,
     10, 15, 4,  2,  7, 12, 9,  5,  6,  1,  13, 14, 0,  11, 3,  8,
     9,  14, 15, 5,  2, 8,  12, 3,  7,  0,  4,  10, 1,  13, 11, 6,
     4,  3,  2,  12, 9, 5,  15, 10, 11, 14, 1,  7,  6,  0,  8,  13},
    {4,  11, 2,  14, 15, 0, 8,  13, 3,  12, 9, 7,  5,  10, 6, 1,
     13, 0,  11, 7,  4,  9, 1,  10, 14, 3,  5, 12, 2,  15, 8, 6,
     1,  4,  11, 13, 12, 3, 7,  14, 10, 15, 6, 8,  0,  5,  9, 2,
     6,  11, 13, 8,  1,  4, 10, 7,  9,  5,  0, 15, 14, 2,  3, 12},
    {13, 2,  8,  4, 6,  15, 11, 1,  10, 9,  3,  14, 5,  0,  12, 7,
     1,  15, 13, 8, 10, 3,  7,  4,  12, 5,  6,  11, 0,  14, 9,  2,
     7,  11, 4,  1, 9,  12, 14, 2,  0,  6,  10, 13, 15, 3,  5,  8,
     2,  1,  14, 7, 4,  10, 8,  13, 15, 12, 9,  0,  3,  5,  6,  11}};

// FNV-1a over every table above, in declaration order.
constexpr std::uint64_t kTableChecksum = 0x96a8d40f2105d5dfULL;

std::uint64_t fnv1a(std::uint64_t h, const std::uint8_t *data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        h ^= data[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t table_checksum() {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    h = fnv1a(h, kIP.data(), kIP.size());
    h = fnv1a(h, kFP.data(), kFP.size());
    h = fnv1a(h, kE.data(), kE.size());
    h = fnv1a(h, kP.data(), kP.size());
    h = fnv1a(h, kPC1.data(), kPC1.size());
    h = fnv1a(h, kPC2.data(), kPC2.size());
    h = fnv1a(h, kShifts.data(), kShifts.size());
    h = fnv1a(h, &kSBox[0][0], sizeof kSBox);
    return h;
}

template <std::size_t N>
std::uint64_t permute(std::uint64_t in, unsigned in_width,
                      const std::array<std::uint8_t, N> &table) {
    std::uint64_t out = 0;
    for (std::size_t i = 0; i < N; ++i)
        out = (out << 1) | ((in >> (in_width - table[i])) & 1U);
    return out;
}

// S-box outputs already routed through P, indexed by box and 6-bit input.
struct SpTables {
    std::array<std::array<std::uint32_t, 64>, 8> sp{};
    SpTables() {
        for (unsigned box = 0; box < 8; ++box)
            for (unsigned x = 0; x < 64; ++x) {
                const std::uint64_t s = des_sbox(box + 1, x);
                const std::uint64_t pre = s << (28 - 4 * box);
                sp[box][x] = static_cast<std::uint32_t>(permute(pre, 32, kP));
            }
    }
};

const SpTables &sp_tables() {
    static const SpTables tables;
    return tables;
}

std::uint32_t rotl28(std::uint32_t v, unsigned n) {
    return ((v << n) | (v >> (28 - n))) & 0x0FFFFFFFU;
}

} // namespace

void verify_des_tables() {
    const auto sum = table_checksum();
    if (sum != kTableChecksum)
        throw SelfTestError("DES table checksum mismatch");
}

unsigned des_sbox(unsigned box, unsigned input6) {
    if (box < 1 || box > 8)
        throw IndexError("S-box index " + std::to_string(box));
    const unsigned row = ((input6 >> 4) & 2U) | (input6 & 1U);
    const unsigned col = (input6 >> 1) & 0xFU;
    return kSBox[box - 1][row * 16 + col];
}

std::uint64_t des_expand(std::uint32_t right) { return permute(right, 32, kE); }

std::uint32_t des_feistel(std::uint32_t right, std::uint64_t round_key) {
    const auto &sp = sp_tables().sp;
    const std::uint64_t x = des_expand(right) ^ round_key;
    std::uint32_t out = 0;
    for (unsigned box = 0; box < 8; ++box)
        out |= sp[box][(x >> (42 - 6 * box)) & 0x3FU];
    return out;
}

unsigned des_sbox_output_position(unsigned box, unsigned bit) {
    if (box < 1 || box > 8 || bit < 1 || bit > 4)
        throw IndexError("S-box output bit out of range");
    const unsigned pre = 4 * (box - 1) + bit;
    for (unsigned i = 0; i < 32; ++i)
        if (kP[i] == pre)
            return i + 1;
    throw SelfTestError("P table is not a permutation");
}

unsigned des_sbox_input_position(unsigned box, unsigned bit) {
    if (box < 1 || box > 8 || bit < 1 || bit > 6)
        throw IndexError("S-box input bit out of range");
    return kE[6 * (box - 1) + bit - 1];
}

unsigned des_round_key_bit_source(unsigned round, unsigned bit) {
    if (round < 1 || round > 16)
        throw RoundError("round " + std::to_string(round) + " outside [1,16]");
    if (bit < 1 || bit > 48)
        throw IndexError("round-key bit " + std::to_string(bit));
    unsigned shift = 0;
    for (unsigned r = 0; r < round; ++r)
        shift += kShifts[r];
    const unsigned cd = kPC2[bit - 1] - 1; // 0-based position in C||D
    const unsigned half = cd / 28;
    const unsigned pos = (cd % 28 + shift) % 28;
    return kPC1[half * 28 + pos];
}

DesKeySchedule des_key_schedule(const BitVector &master) {
    static std::once_flag checked;
    std::call_once(checked, verify_des_tables);
    if (master.width() != 64)
        throw WidthError("DES master key must be 64 bits");

    DesKeySchedule ks;
    ks.master = master;
    const std::uint64_t cd = permute(master.value(), 64, kPC1);
    std::uint32_t c = static_cast<std::uint32_t>(cd >> 28) & 0x0FFFFFFFU;
    std::uint32_t d = static_cast<std::uint32_t>(cd) & 0x0FFFFFFFU;
    for (unsigned r = 0; r < 16; ++r) {
        c = rotl28(c, kShifts[r]);
        d = rotl28(d, kShifts[r]);
        const std::uint64_t joined = (std::uint64_t{c} << 28) | d;
        ks.round_keys[r] = BitVector(permute(joined, 56, kPC2), 48);
    }
    return ks;
}

BitVector des_initial_permutation(const BitVector &block) {
    return {permute(block.value(), 64, kIP), 64};
}

BitVector des_final_permutation(const BitVector &block) {
    return {permute(block.value(), 64, kFP), 64};
}

DesState des_round(const DesState &state, const DesKeySchedule &ks) {
    if (state.rounds_applied >= 16)
        throw RoundError("DES state already has 16 rounds");
    const auto l = static_cast<std::uint32_t>(state.left.value());
    const auto r = static_cast<std::uint32_t>(state.right.value());
    const auto f = des_feistel(r, ks.round_key(state.rounds_applied + 1));
    return {BitVector(r, 32), BitVector(l ^ f, 32), state.rounds_applied + 1};
}

DesState des_rounds(const BitVector &plaintext, const DesKeySchedule &ks,
                    unsigned n) {
    if (n > 16)
        throw RoundError("round count " + std::to_string(n) +
                         " outside [0,16]");
    if (plaintext.width() != 64)
        throw WidthError("DES block must be 64 bits");
    const auto ip = permute(plaintext.value(), 64, kIP);
    DesState state{BitVector(ip >> 32, 32), BitVector(ip & 0xFFFFFFFFU, 32), 0};
    for (unsigned i = 0; i < n; ++i)
        state = des_round(state, ks);
    return state;
}

BitVector register_transition(const BitVector &plaintext,
                              const DesKeySchedule &ks, unsigned r) {
    if (r < 1 || r > 16)
        throw RoundError("transition round " + std::to_string(r) +
                         " outside [1,16]");
    const DesState before = des_rounds(plaintext, ks, r - 1);
    const DesState after = des_round(before, ks);
    return before.lr() ^ after.lr();
}

BitVector des_encrypt(const BitVector &plaintext, const DesKeySchedule &ks) {
    const DesState s = des_rounds(plaintext, ks, 16);
    const std::uint64_t swapped = (s.right.value() << 32) | s.left.value();
    return {permute(swapped, 64, kFP), 64};
}

BitVector des_decrypt(const BitVector &ciphertext, const DesKeySchedule &ks) {
    if (ciphertext.width() != 64)
        throw WidthError("DES block must be 64 bits");
    const auto ip = permute(ciphertext.value(), 64, kIP);
    auto l = static_cast<std::uint32_t>(ip >> 32);
    auto r = static_cast<std::uint32_t>(ip);
    for (unsigned round = 16; round >= 1; --round) {
        const auto next = l ^ des_feistel(r, ks.round_key(round));
        l = r;
        r = next;
    }
    const std::uint64_t swapped = (std::uint64_t{r} << 32) | l;
    return {permute(swapped, 64, kFP), 64};
}

} // namespace mlpa
