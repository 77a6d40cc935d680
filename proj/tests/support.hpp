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

#include "mlpa/approx.hpp"
#include "mlpa/des.hpp"

#include <cstdint>
#include <fstream>
#include <random>
#include <string>
#include <vector>

namespace mlpa::test {

/// Plaintext bit that IP moves to position i of the LR register.
inline unsigned ip_source(unsigned i) {
    for (unsigned p = 1; p <= 64; ++p)
        if (des_initial_permutation(BitVector(raw_single_bit(p, 64), 64)).value() ==
            raw_single_bit(i, 64))
            return p;
    return 0;
}

inline std::string data_path(const std::string &name) {
    return std::string(MLPA_TEST_DATA_DIR) + "/" + name;
}

/// The 20 relations on the HD of the round-2 LR load, as text lines.
inline std::vector<std::string> lr2_relation_lines() {
    std::ifstream in(data_path("lr2_hd_relations.txt"));
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);)
        if (!line.empty() && line[0] != '#')
            lines.push_back(line);
    return lines;
}

/// Master-key bits behind S1 of round key 1.
inline std::vector<unsigned> s1_key_bits() {
    std::vector<unsigned> bits;
    for (unsigned b = 1; b <= 6; ++b)
        bits.push_back(des_round_key_bit_source(1, b));
    return bits;
}

/// Plaintext bits that determine S1's round-1 output and the LR bits it
/// lands on: the L0 bits at S1's output positions and the R0 bits feeding it.
inline std::vector<unsigned> s1_plaintext_bits() {
    std::vector<unsigned> bits;
    for (unsigned b = 1; b <= 4; ++b)
        bits.push_back(ip_source(des_sbox_output_position(1, b)));
    for (unsigned b = 1; b <= 6; ++b)
        bits.push_back(ip_source(32 + des_sbox_input_position(1, b)));
    return bits;
}

inline std::uint64_t random_u64(std::mt19937_64 &rng) { return rng(); }

} // namespace mlpa::test
