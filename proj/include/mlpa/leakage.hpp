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

#include "mlpa/aes.hpp"
#include "mlpa/bitcore.hpp"
#include "mlpa/des.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace mlpa {

enum class CipherKind : std::uint8_t { Des = 0, AesLastRound = 1 };
enum class LeakageModel : std::uint8_t { HammingWeight = 0, HammingDistance = 1 };

/// Simulated device: which register loads happen and how they leak.
///
/// A register load "r" for DES is the LR register after round r. A glued
/// block of g rounds is register_rounds = {g, g+1, ...}. For the AES last
/// round model, load 1 is the state register before the last round and
/// load 2 is the ciphertext register.
struct DeviceConfig {
    CipherKind cipher = CipherKind::Des;
    std::vector<unsigned> register_rounds{1};
    LeakageModel leakage = LeakageModel::HammingWeight;
    double noise_sigma = 0.0;
    unsigned samples_per_load = 1;
    std::uint64_t seed = 0;
    /// Register content before the first load (HD only). DES defaults to
    /// IP(plaintext) when unset.
    std::optional<std::uint64_t> reset_state;

    /// Throws ModelError when an invariant is violated.
    void validate() const;

    std::size_t samples_per_trace() const {
        return register_rounds.size() * samples_per_load;
    }
    /// Sample index of a register load, or nullopt if the device never
    /// loads the register after that round.
    std::optional<std::size_t> sample_index_of(unsigned load) const;
};

struct Trace {
    std::vector<float> samples;
    BitVector plaintext{0, 64};
    std::optional<BitVector> ciphertext;
    /// sample_map[i] is the sample index of the i-th register load.
    std::vector<std::size_t> sample_map;
};

struct Campaign {
    DeviceConfig config;
    /// Secret key. Attack code must only read it to score a result.
    std::optional<BitVector> key;
    std::vector<Trace> traces;

    std::size_t size() const { return traces.size(); }
    std::size_t samples_per_trace() const {
        return traces.empty() ? 0 : traces.front().samples.size();
    }
    /// Mean of one sample column. Throws DataError / IndexError.
    double sample_mean(std::size_t sample_index) const;
};

/// AES-last-round traces store the 128-bit ciphertext in their two data
/// words: plaintext holds bytes 0..7 and ciphertext holds bytes 8..15.
AesBlock aes_trace_ciphertext(const Trace &trace);

/// Last AES round key used by the simulator for a 64-bit device key:
/// bytes 0..7 are the key bytes (big-endian), bytes 8..15 their complement.
AesBlock aes_round_key_from(const BitVector &key);

/// Simulate one DES execution. Noise is drawn from a generator seeded by
/// (config.seed, trace_index), so the result is a pure function of the
/// arguments. Throws ModelError / WidthError.
Trace simulate_trace(const DeviceConfig &config, const BitVector &key,
                     const BitVector &plaintext,
                     std::optional<std::uint64_t> previous_register_state = {},
                     std::uint64_t trace_index = 0);

/// Simulate the AES last round on a given pre-last-round state.
Trace simulate_aes_trace(const DeviceConfig &config, const BitVector &key,
                         const AesBlock &state, std::uint64_t trace_index = 0);

enum class PlaintextSource { UniformRandom, FixedList };

/// n traces under one key. Plaintexts (or AES states) are drawn from the
/// trace's own sub-stream; FixedList cycles through `fixed`.
Campaign simulate_campaign(const DeviceConfig &config, const BitVector &key,
                           std::size_t n,
                           PlaintextSource source = PlaintextSource::UniformRandom,
                           const std::vector<BitVector> &fixed = {});

/// Single-threaded reference of simulate_campaign.
Campaign simulate_campaign_serial(
    const DeviceConfig &config, const BitVector &key, std::size_t n,
    PlaintextSource source = PlaintextSource::UniformRandom,
    const std::vector<BitVector> &fixed = {});

/// Threshold trick turning a measured sample into the bit <H, gamma_h> for
/// gamma_h in {0x10, 0x20}: above the campaign mean means H in [32,48),
/// otherwise H in [16,32). Throws MaskError for any other mask.
unsigned power_to_hw_bits(double sample, double campaign_mean,
                          const BitVector &gamma_h);
unsigned power_to_hw_bits(double sample, double campaign_mean,
                          unsigned gamma_h);

/// Replace every sample s by gain*s + offset.
void apply_affine(Campaign &campaign, double gain, double offset);

} // namespace mlpa
