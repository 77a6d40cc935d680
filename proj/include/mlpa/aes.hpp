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

using AesBlock = std::array<std::uint8_t, 16>;

/// Last AES round seen as a byte map: state bytes before SubBytes and the
/// last round key. Bytes are in the standard column-major order.
struct AesLastRoundState {
    std::array<BitVector, 16> state_bytes;
    std::array<BitVector, 16> round_key_bytes;
};

std::uint8_t aes_sbox(std::uint8_t x);
std::uint8_t aes_inv_sbox(std::uint8_t x);

/// Index of the state byte that ShiftRows moves to ciphertext position
/// `byte_index`.
unsigned aes_shift_rows_source(unsigned byte_index);

/// SubBytes, ShiftRows, AddRoundKey.
AesBlock aes_last_round_encrypt(const AesBlock &state, const AesBlock &round_key);

/// Inverse of aes_last_round_encrypt for a whole block.
AesBlock aes_last_round_decrypt(const AesBlock &ciphertext,
                                const AesBlock &round_key);

/// Pre-last-round state byte that ends up at ciphertext position
/// `byte_index`, under a guess for the matching round-key byte. The
/// returned byte sits at state position aes_shift_rows_source(byte_index).
/// Throws IndexError for byte_index >= 16.
BitVector aes_last_round_state(const AesBlock &ciphertext,
                               std::uint8_t key_guess_byte,
                               unsigned byte_index);

} // namespace mlpa
