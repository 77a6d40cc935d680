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

#include "mlpa/aes.hpp"
#include "mlpa/des.hpp"

#include "support.hpp"

#include <doctest.h>

#include <random>

#ifdef MLPA_HAVE_OPENSSL
#include <openssl/des.h>
#endif

using namespace mlpa;

namespace {

#ifdef MLPA_HAVE_OPENSSL
std::uint64_t openssl_des(std::uint64_t key, std::uint64_t block, bool encrypt) {
    DES_cblock k, in, out;
    for (int i = 0; i < 8; ++i) {
        k[i] = static_cast<unsigned char>(key >> (56 - 8 * i));
        in[i] = static_cast<unsigned char>(block >> (56 - 8 * i));
    }
    DES_key_schedule ks;
    DES_set_key_unchecked(&k, &ks);
    DES_ecb_encrypt(&in, &out, &ks, encrypt ? DES_ENCRYPT : DES_DECRYPT);
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i)
        r = (r << 8) | out[i];
    return r;
}
#endif

std::uint8_t gf_mul(std::uint8_t a, std::uint8_t b) {
    std::uint8_t p = 0;
    for (int i = 0; i < 8; ++i) {
        if (b & 1)
            p ^= a;
        const bool hi = a & 0x80;
        a = static_cast<std::uint8_t>(a << 1);
        if (hi)
            a ^= 0x1B;
        b >>= 1;
    }
    return p;
}

/// S-box from its definition: inverse in GF(2^8) then the affine map.
std::uint8_t sbox_oracle(std::uint8_t x) {
    std::uint8_t inv = 1;
    for (int i = 0; i < 254; ++i)
        inv = gf_mul(inv, x);
    if (x == 0)
        inv = 0;
    std::uint8_t s = 0x63;
    for (int r = 0; r < 5; ++r)
        s ^= static_cast<std::uint8_t>((inv << r) | (inv >> (8 - r)));
    return s;
}

} // namespace

TEST_SUITE("ciphers") {

TEST_CASE("key schedule") {
    const auto zero = des_key_schedule(BitVector(0, 64));
    for (unsigned r = 1; r <= 16; ++r)
        CHECK(zero.round_key(r) == 0);

    const auto ks = des_key_schedule(BitVector(0x133457799BBCDFF1ULL, 64));
    CHECK(ks.round_key(1) == 0x1B02EFFC7072ULL);
    CHECK(ks.round_key(16) == 0xCB3D8B0E17F5ULL);

    std::mt19937_64 rng(4);
    for (int t = 0; t < 50; ++t) {
        const std::uint64_t k = rng();
        const auto a = des_key_schedule(BitVector(k, 64));
        const auto b = des_key_schedule(BitVector(k ^ 0x0101010101010101ULL, 64));
        CHECK(a.round_keys == b.round_keys);
    }
}

TEST_CASE("round key bit sources agree with the schedule") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 20; ++t) {
        const BitVector key(rng(), 64);
        const auto ks = des_key_schedule(key);
        for (unsigned r = 1; r <= 16; ++r)
            for (unsigned b = 1; b <= 48; ++b)
                CHECK(raw_bit(ks.round_key(r), b, 48) ==
                      bit_at(key, des_round_key_bit_source(r, b)));
    }
    CHECK(mlpa::test::s1_key_bits() == std::vector<unsigned>{10, 51, 34, 60, 49, 17});
}

TEST_CASE("known answer and round trips") {
    const auto ks = des_key_schedule(BitVector(0x133457799BBCDFF1ULL, 64));
    const BitVector p(0x0123456789ABCDEFULL, 64);
    CHECK(des_encrypt(p, ks).value() == 0x85E813540F0AB405ULL);
    CHECK(des_decrypt(BitVector(0x85E813540F0AB405ULL, 64), ks) == p);

    std::mt19937_64 rng(6);
    for (int t = 0; t < 1000; ++t) {
        const auto k = des_key_schedule(BitVector(rng(), 64));
        const BitVector x(rng(), 64);
        CHECK(des_decrypt(des_encrypt(x, k), k) == x);
    }
}

#ifdef MLPA_HAVE_OPENSSL
TEST_CASE("agrees with an independent DES implementation") {
    std::mt19937_64 rng(7);
    CHECK(openssl_des(0x133457799BBCDFF1ULL, 0x0123456789ABCDEFULL, true) ==
          0x85E813540F0AB405ULL);
    for (int t = 0; t < 500; ++t) {
        const std::uint64_t k = rng(), x = rng();
        const auto ks = des_key_schedule(BitVector(k, 64));
        CHECK(des_encrypt(BitVector(x, 64), ks).value() == openssl_des(k, x, true));
        CHECK(des_decrypt(BitVector(x, 64), ks).value() == openssl_des(k, x, false));
    }
}
#endif

TEST_CASE("reduced rounds") {
    std::mt19937_64 rng(8);
    const auto ks = des_key_schedule(BitVector(rng(), 64));
    const BitVector p(rng(), 64);
    const auto s0 = des_rounds(p, ks, 0);
    CHECK(s0.lr() == des_initial_permutation(p));
    CHECK(s0.rounds_applied == 0);

    DesState iter = s0;
    for (unsigned n = 0; n < 16; ++n) {
        const auto now = des_rounds(p, ks, n);
        const auto next = des_rounds(p, ks, n + 1);
        CHECK(next.left == now.right);
        CHECK(now == iter);
        iter = des_round(iter, ks);
    }
    CHECK(iter.rounds_applied == 16);
    // Full DES is 16 rounds, the final swap and FP.
    const auto s16 = des_rounds(p, ks, 16);
    const BitVector swapped((s16.right.value() << 32) | s16.left.value(), 64);
    CHECK(des_final_permutation(swapped) == des_encrypt(p, ks));
    CHECK(des_final_permutation(des_initial_permutation(p)) == p);
    CHECK_THROWS_AS(des_rounds(p, ks, 17), RoundError);
}

TEST_CASE("register transition") {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 100; ++t) {
        const auto ks = des_key_schedule(BitVector(rng(), 64));
        const BitVector p(rng(), 64);
        for (unsigned r = 1; r <= 16; ++r) {
            const auto before = des_rounds(p, ks, r - 1);
            const auto after = des_rounds(p, ks, r);
            const auto tr = register_transition(p, ks, r);
            CHECK(tr == (before.lr() ^ after.lr()));
            CHECK((tr.value() >> 32) == (before.left ^ before.right).value());
            CHECK(hamming_weight(tr) ==
                  hamming_weight(before.lr().value() ^ after.lr().value()));
        }
    }
    const auto ks = des_key_schedule(BitVector(1, 64));
    CHECK_THROWS_AS(register_transition(BitVector(0, 64), ks, 0), RoundError);
    CHECK_THROWS_AS(register_transition(BitVector(0, 64), ks, 17), RoundError);
}

TEST_CASE("S-box lookup follows the row and column rule") {
    // S1 row 0 starts 14, 4, 13; row 1 starts 0, 15; input 0b000001 is row 1.
    CHECK(des_sbox(1, 0b000000) == 14);
    CHECK(des_sbox(1, 0b000010) == 4);
    CHECK(des_sbox(1, 0b000001) == 0);
    CHECK(des_sbox(1, 0b000011) == 15);
    for (unsigned box = 1; box <= 8; ++box)
        for (unsigned row = 0; row < 4; ++row) {
            unsigned seen = 0;
            for (unsigned col = 0; col < 16; ++col) {
                const unsigned in = ((row & 2) << 4) | (col << 1) | (row & 1);
                seen |= 1U << des_sbox(box, in);
            }
            CHECK(seen == 0xFFFF);
        }
}

TEST_CASE("AES S-box matches its algebraic definition") {
    for (unsigned x = 0; x < 256; ++x) {
        const auto b = static_cast<std::uint8_t>(x);
        CHECK(aes_sbox(b) == sbox_oracle(b));
        CHECK(aes_inv_sbox(aes_sbox(b)) == b);
    }
}

TEST_CASE("AES last round inversion") {
    std::mt19937_64 rng(10);
    for (int t = 0; t < 200; ++t) {
        AesBlock state{}, key{};
        for (auto &b : state)
            b = static_cast<std::uint8_t>(rng());
        for (auto &b : key)
            b = static_cast<std::uint8_t>(rng());
        const AesBlock ct = aes_last_round_encrypt(state, key);

        // Independent last round: column-major state, row r rotated left by r.
        for (unsigned r = 0; r < 4; ++r)
            for (unsigned c = 0; c < 4; ++c)
                CHECK(ct[r + 4 * c] ==
                      (sbox_oracle(state[r + 4 * ((c + r) % 4)]) ^ key[r + 4 * c]));

        CHECK(aes_last_round_decrypt(ct, key) == state);
        for (unsigned i = 0; i < 16; ++i)
            CHECK(aes_last_round_state(ct, key[i], i).value() ==
                  state[aes_shift_rows_source(i)]);
    }
    AesBlock ct{};
    ct[3] = 0xED;
    CHECK(aes_last_round_state(ct, 0, 3).value() == aes_inv_sbox(0xED));
    CHECK(aes_last_round_state(ct, 0xED, 3).value() == aes_inv_sbox(0));
    CHECK_THROWS_AS(aes_last_round_state(ct, 0, 16), IndexError);
}

}
