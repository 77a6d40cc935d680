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

#include "mlpa/leakage.hpp"
#include "mlpa/mlpa.hpp"

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace mlpa::cli {

enum class AttackKind { Mlpa, Dpa, ProbDpa, Cpa };

/// Everything one CLI invocation needs. Loaded from an INI file:
///
///   seed = 1
///   [device]   cipher=des|aes  rounds=2 | 3..16 | 1,2  leakage=hw|hd
///              samples_per_load=1  reset_state=0x...
///   [sweep]    n_traces=512,1024  noise_sigma=0,1
///   [search]   target=register|sbox  round=2  sbox=1  gamma_h=0x10,0x20
///              pi_support=...  key_support=...  max_pi_weight  max_kappa_weight
///              min_bias  n_samples  budget
///   [attack]   kind=mlpa|dpa|prob-dpa|cpa  corpus=PATH  campaign=PATH
///              mode=measured|exact  n_trials  sample_index  sbox  bit  eps  byte
///   [output]   dir=PATH
struct ExperimentConfig {
    std::uint64_t seed = 0;
    DeviceConfig device;
    std::vector<std::size_t> n_traces{1000};
    std::vector<double> noise_sigma{0.0};

    std::string search_target = "register";
    unsigned search_round = 1;
    unsigned search_sbox = 1;
    std::vector<unsigned> gamma_h{0x10, 0x20};
    std::vector<unsigned> pi_support;
    std::vector<unsigned> key_support;
    unsigned max_pi_weight = 2;
    unsigned max_kappa_weight = 2;
    double min_bias = 0.01;
    std::uint64_t search_samples = 1ULL << 18;
    std::uint64_t search_budget = 1ULL << 24;

    AttackKind attack = AttackKind::Mlpa;
    std::string corpus_path;
    std::string campaign_path;
    AttackMode mode = AttackMode::Measured;
    unsigned n_trials = 1;
    std::optional<std::size_t> sample_index;
    unsigned sbox = 1;
    unsigned bit = 1;
    double eps = 0.25;
    unsigned byte_index = 0;

    std::string output_dir;

    /// Throws ConfigError naming the offending field.
    void validate(bool needs_corpus) const;
};

/// Throws ConfigError (unknown section or key, bad value) naming the field.
ExperimentConfig parse_experiment_config(std::istream &in);
ExperimentConfig load_experiment_config(const std::string &path);

std::string cipher_name(CipherKind c);
std::string model_name(LeakageModel m);

} // namespace mlpa::cli
