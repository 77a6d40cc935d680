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

#include "mlpa/bitcore.hpp"

#include <array>
#include <cstdint>

namespace mlpa {

/// Content of the LR round register after some number of Feistel rounds.
/// Reduced-round states skip the final swap and the final permutation.
struct DesState {
    BitVector left{0, 32};
    BitVector right{0, 32};
    unsigned rounds_applied = 0;

    /// L||R as a 64-bit vector.
    BitVector lr() const {
        return {(left.value() << 32) | right.value(), 64};
    }
    bool operator==(const DesState &) const = default;
};

struct DesKeySchedule {
    BitVector master{0, 64};
    std::array<BitVector, 16> round_keys{};

    /// Round key r (1-based) as a raw 48-bit word.
    std::uint64_t round_key(unsigned r) const {
        return round_keys[r - 1].value();
    }
};

/// Throws SelfTestError if any embedded DES table fails its checksum.
/// Called once automatically by des_key_schedule().
void verify_des_tables();

DesKeySchedule des_key_schedule(const BitVector &master);

/// IP then n Feistel rounds, 0 <= n <= 16. Throws RoundError.
DesState des_rounds(const BitVector &plaintext, const DesKeySchedule &ks,
                    unsigned n);

/// One more Feistel round applied to a state.
DesState des_round(const DesState &state, const DesKeySchedule &ks);

/// (L||R after round r-1) XOR (L||R after round r), round 0 being IP(X).
/// The Hamming weight of the result is the HD leakage of the r-th LR load.
BitVector register_transition(const BitVector &plaintext,
                              const DesKeySchedule &ks, unsigned r);

BitVector des_encrypt(const BitVector &plaintext, const DesKeySchedule &ks);
BitVector des_decrypt(const BitVector &ciphertext, const DesKeySchedule &ks);

BitVector des_initial_permutation(const BitVector &block);
BitVector des_final_permutation(const BitVector &block);

/// Round function f(R, K) on raw words (32-bit R, 48-bit K).
std::uint32_t des_feistel(std::uint32_t right, std::uint64_t round_key);

/// Expansion E on a raw 32-bit word, giving 48 bits.
std::uint64_t des_expand(std::uint32_t right);

/// Output of S-box `box` (1..8) for a 6-bit input, FIPS row/column rule.
unsigned des_sbox(unsigned box, unsigned input6);

/// 1-based output position (in the 32-bit f output, after P) of bit `bit`
/// (1..4, MSB first) of S-box `box`.
unsigned des_sbox_output_position(unsigned box, unsigned bit);

/// 1-based position in the 32-bit R word feeding input bit `bit` (1..6) of
/// S-box `box` through E.
unsigned des_sbox_input_position(unsigned box, unsigned bit);

/// Master-key bit (1-based, FIPS numbering, parity bits are 8,16,...,64)
/// that ends up at bit `bit` (1..48) of round key `round` (1..16).
unsigned des_round_key_bit_source(unsigned round, unsigned bit);

} // namespace mlpa
