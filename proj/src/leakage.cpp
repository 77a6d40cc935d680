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

#include "mlpa/leakage.hpp"

#include "mlpa/parallel.hpp"

#include <algorithm>
#include <random>
#include <string>

namespace mlpa {
namespace {

std::uint64_t plaintext_seed(const DeviceConfig &config, std::uint64_t index) {
    return derive_seed(derive_seed(config.seed, "plaintext"), index);
}

class NoiseSource {
  public:
    NoiseSource(double sigma, std::uint64_t seed)
        : sigma_(sigma), rng_(seed), normal_(0.0, sigma > 0 ? sigma : 1.0) {}
    double operator()() { return sigma_ > 0 ? normal_(rng_) : 0.0; }

  private:
    double sigma_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_;
};

Trace des_trace(const DeviceConfig &config, const DesKeySchedule &ks,
                const BitVector &plaintext,
                std::optional<std::uint64_t> previous_register_state,
                std::uint64_t trace_index) {
    if (plaintext.width() != 64)
        throw WidthError("DES plaintext must be 64 bits");
    NoiseSource noise(config.noise_sigma, derive_seed(config.seed, trace_index));

    Trace trace;
    trace.plaintext = plaintext;
    trace.samples.assign(config.samples_per_trace(), 0.0F);
    trace.sample_map.resize(config.register_rounds.size());

    DesState state = des_rounds(plaintext, ks, 0);
    std::uint64_t previous = previous_register_state
                                 ? *previous_register_state
                                 : config.reset_state.value_or(state.lr().value());
    for (std::size_t i = 0; i < config.register_rounds.size(); ++i) {
        while (state.rounds_applied < config.register_rounds[i])
            state = des_round(state, ks);
        const std::uint64_t value = state.lr().value();
        const unsigned h = config.leakage == LeakageModel::HammingWeight
                               ? hamming_weight(value)
                               : hamming_weight(previous ^ value);
        previous = value;
        const std::size_t base = i * config.samples_per_load;
        trace.sample_map[i] = base;
        trace.samples[base] = static_cast<float>(h + noise());
        for (unsigned j = 1; j < config.samples_per_load; ++j)
            trace.samples[base + j] = static_cast<float>(noise());
    }
    return trace;
}

std::uint64_t block_word(const AesBlock &b, unsigned offset) {
    std::uint64_t w = 0;
    for (unsigned i = 0; i < 8; ++i)
        w = (w << 8) | b[offset + i];
    return w;
}

unsigned block_weight(const AesBlock &b) {
    return hamming_weight(block_word(b, 0)) + hamming_weight(block_word(b, 8));
}

AesBlock random_block(std::mt19937_64 &rng) {
    AesBlock b{};
    const std::uint64_t hi = rng();
    const std::uint64_t lo = rng();
    for (unsigned i = 0; i < 8; ++i) {
        b[i] = static_cast<std::uint8_t>(hi >> (56 - 8 * i));
        b[8 + i] = static_cast<std::uint8_t>(lo >> (56 - 8 * i));
    }
    return b;
}

Trace aes_trace(const DeviceConfig &config, const AesBlock &round_key,
                const AesBlock &state, std::uint64_t trace_index) {
    NoiseSource noise(config.noise_sigma, derive_seed(config.seed, trace_index));
    const AesBlock ct = aes_last_round_encrypt(state, round_key);

    Trace trace;
    trace.plaintext = BitVector(block_word(ct, 0), 64);
    trace.ciphertext = BitVector(block_word(ct, 8), 64);
    trace.samples.assign(config.samples_per_trace(), 0.0F);
    trace.sample_map.resize(config.register_rounds.size());

    std::optional<AesBlock> previous;
    if (config.reset_state) {
        AesBlock reset{};
        for (unsigned i = 0; i < 8; ++i)
            reset[i] = reset[8 + i] =
                static_cast<std::uint8_t>(*config.reset_state >> (56 - 8 * i));
        previous = reset;
    }
    for (std::size_t i = 0; i < config.register_rounds.size(); ++i) {
        const AesBlock &value = config.register_rounds[i] == 1 ? state : ct;
        unsigned h = 0;
        if (config.leakage == LeakageModel::HammingWeight) {
            h = block_weight(value);
        } else {
            if (!previous)
                throw ModelError("HD leakage of the first AES register load "
                                 "needs a reset state");
            AesBlock diff{};
            for (unsigned j = 0; j < 16; ++j)
                diff[j] = (*previous)[j] ^ value[j];
            h = block_weight(diff);
        }
        previous = value;
        const std::size_t base = i * config.samples_per_load;
        trace.sample_map[i] = base;
        trace.samples[base] = static_cast<float>(h + noise());
        for (unsigned j = 1; j < config.samples_per_load; ++j)
            trace.samples[base + j] = static_cast<float>(noise());
    }
    return trace;
}

BitVector draw_plaintext(const DeviceConfig &config, std::size_t i,
                         PlaintextSource source,
                         const std::vector<BitVector> &fixed) {
    if (source == PlaintextSource::FixedList)
        return fixed[i % fixed.size()];
    std::mt19937_64 rng(plaintext_seed(config, i));
    return {rng(), 64};
}

void check_campaign_args(const DeviceConfig &config, std::size_t n,
                         PlaintextSource source,
                         const std::vector<BitVector> &fixed) {
    config.validate();
    if (n < 1)
        throw DataError("a campaign needs at least one trace");
    if (source == PlaintextSource::FixedList && fixed.empty())
        throw DataError("fixed plaintext list is empty");
}

Trace campaign_trace(const DeviceConfig &config, const DesKeySchedule &ks,
                     const AesBlock &aes_key, std::size_t i,
                     PlaintextSource source, const std::vector<BitVector> &fixed) {
    if (config.cipher == CipherKind::Des)
        return des_trace(config, ks, draw_plaintext(config, i, source, fixed),
                         std::nullopt, i);
    AesBlock state{};
    if (source == PlaintextSource::FixedList) {
        const auto w = fixed[i % fixed.size()].value();
        for (unsigned j = 0; j < 8; ++j)
            state[j] = state[8 + j] = static_cast<std::uint8_t>(w >> (56 - 8 * j));
    } else {
        std::mt19937_64 rng(plaintext_seed(config, i));
        state = random_block(rng);
    }
    return aes_trace(config, aes_key, state, i);
}

} // namespace

void DeviceConfig::validate() const {
    if (register_rounds.empty())
        throw ModelError("register_rounds must not be empty");
    const unsigned max_round = cipher == CipherKind::Des ? 16 : 2;
    for (std::size_t i = 0; i < register_rounds.size(); ++i) {
        if (register_rounds[i] < 1 || register_rounds[i] > max_round)
            throw ModelError("register round " +
                             std::to_string(register_rounds[i]) +
                             " outside [1," + std::to_string(max_round) + "]");
        if (i > 0 && register_rounds[i] <= register_rounds[i - 1])
            throw ModelError("register_rounds must be strictly increasing");
    }
    if (!(noise_sigma >= 0.0))
        throw ModelError("noise_sigma must be >= 0");
    if (samples_per_load < 1)
        throw ModelError("samples_per_load must be >= 1");
}

std::optional<std::size_t> DeviceConfig::sample_index_of(unsigned load) const {
    const auto it = std::find(register_rounds.begin(), register_rounds.end(), load);
    if (it == register_rounds.end())
        return std::nullopt;
    return static_cast<std::size_t>(it - register_rounds.begin()) * samples_per_load;
}

double Campaign::sample_mean(std::size_t sample_index) const {
    if (traces.empty())
        throw DataError("empty campaign");
    double sum = 0.0;
    double comp = 0.0;
    for (const auto &t : traces) {
        if (sample_index >= t.samples.size())
            throw IndexError("sample index " + std::to_string(sample_index) +
                             " out of range");
        const double y = t.samples[sample_index] - comp;
        const double s = sum + y;
        comp = (s - sum) - y;
        sum = s;
    }
    return sum / static_cast<double>(traces.size());
}

AesBlock aes_trace_ciphertext(const Trace &trace) {
    AesBlock b{};
    const std::uint64_t hi = trace.plaintext.value();
    const std::uint64_t lo = trace.ciphertext ? trace.ciphertext->value() : 0;
    for (unsigned i = 0; i < 8; ++i) {
        b[i] = static_cast<std::uint8_t>(hi >> (56 - 8 * i));
        b[8 + i] = static_cast<std::uint8_t>(lo >> (56 - 8 * i));
    }
    return b;
}

AesBlock aes_round_key_from(const BitVector &key) {
    AesBlock rk{};
    for (unsigned i = 0; i < 8; ++i) {
        rk[i] = static_cast<std::uint8_t>(key.value() >> (56 - 8 * i));
        rk[8 + i] = static_cast<std::uint8_t>(~rk[i]);
    }
    return rk;
}

Trace simulate_trace(const DeviceConfig &config, const BitVector &key,
                     const BitVector &plaintext,
                     std::optional<std::uint64_t> previous_register_state,
                     std::uint64_t trace_index) {
    config.validate();
    if (config.cipher != CipherKind::Des)
        throw ModelError("simulate_trace drives DES devices; use "
                         "simulate_aes_trace for the AES last round");
    return des_trace(config, des_key_schedule(key), plaintext,
                     previous_register_state, trace_index);
}

Trace simulate_aes_trace(const DeviceConfig &config, const BitVector &key,
                         const AesBlock &state, std::uint64_t trace_index) {
    config.validate();
    if (config.cipher != CipherKind::AesLastRound)
        throw ModelError("device is not an AES last-round device");
    return aes_trace(config, aes_round_key_from(key), state, trace_index);
}

Campaign simulate_campaign(const DeviceConfig &config, const BitVector &key,
                           std::size_t n, PlaintextSource source,
                           const std::vector<BitVector> &fixed) {
    check_campaign_args(config, n, source, fixed);
    const DesKeySchedule ks = des_key_schedule(key);
    const AesBlock aes_key = aes_round_key_from(key);

    Campaign campaign{config, key, std::vector<Trace>(n)};
    const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) num_threads(worker_count())
    for (std::int64_t i = 0; i < count; ++i)
        campaign.traces[i] = campaign_trace(config, ks, aes_key, i, source, fixed);
    return campaign;
}

Campaign simulate_campaign_serial(const DeviceConfig &config,
                                  const BitVector &key, std::size_t n,
                                  PlaintextSource source,
                                  const std::vector<BitVector> &fixed) {
    check_campaign_args(config, n, source, fixed);
    const DesKeySchedule ks = des_key_schedule(key);
    const AesBlock aes_key = aes_round_key_from(key);

    Campaign campaign{config, key, {}};
    campaign.traces.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        campaign.traces.push_back(
            campaign_trace(config, ks, aes_key, i, source, fixed));
    return campaign;
}

unsigned power_to_hw_bits(double sample, double campaign_mean,
                          unsigned gamma_h) {
    const bool above = sample > campaign_mean;
    switch (gamma_h) {
    case 0x20:
        return above ? 1U : 0U;
    case 0x10:
        return above ? 0U : 1U;
    default:
        throw MaskError("threshold bits only exist for gamma_h 0x10 and 0x20");
    }
}

unsigned power_to_hw_bits(double sample, double campaign_mean,
                          const BitVector &gamma_h) {
    if (gamma_h.value() > 0xFFFFFFFFULL)
        throw MaskError("unsupported gamma_h " + gamma_h.to_string());
    return power_to_hw_bits(sample, campaign_mean,
                            static_cast<unsigned>(gamma_h.value()));
}

void apply_affine(Campaign &campaign, double gain, double offset) {
    for (auto &t : campaign.traces)
        for (auto &s : t.samples)
            s = static_cast<float>(gain * s + offset);
}

} // namespace mlpa
