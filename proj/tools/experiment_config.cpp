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

#include "experiment_config.hpp"

#include "mlpa/errors.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>

namespace mlpa::cli {
namespace {

using Inputs = std::vector<std::string>;

std::string trimmed(std::string s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos)
        return {};
    return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

std::uint64_t to_u64(const std::string &field, std::string s) {
    s = trimmed(s);
    int base = 10;
    std::string_view v = s;
    if (v.size() > 2 && v[0] == '0' && (v[1] == 'x' || v[1] == 'X')) {
        v.remove_prefix(2);
        base = 16;
    }
    std::uint64_t out = 0;
    const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out, base);
    if (v.empty() || ec != std::errc() || end != v.data() + v.size())
        throw ConfigError(field + ": expected an unsigned integer, got '" + s + "'");
    return out;
}

double to_double(const std::string &field, std::string s) {
    s = trimmed(s);
    double out = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (s.empty() || ec != std::errc() || end != s.data() + s.size())
        throw ConfigError(field + ": expected a number, got '" + s + "'");
    return out;
}

const std::string &single(const std::string &field, const Inputs &in) {
    if (in.size() != 1)
        throw ConfigError(field + ": expected one value");
    return in.front();
}

/// Accepts "a,b,c" and ranges "a..b".
std::vector<unsigned> to_uints(const std::string &field, const Inputs &in) {
    std::vector<unsigned> out;
    for (const auto &raw : in) {
        const std::string item = trimmed(raw);
        const auto dots = item.find("..");
        if (dots == std::string::npos) {
            out.push_back(static_cast<unsigned>(to_u64(field, item)));
            continue;
        }
        const auto lo = to_u64(field, item.substr(0, dots));
        const auto hi = to_u64(field, item.substr(dots + 2));
        if (lo > hi)
            throw ConfigError(field + ": empty range '" + item + "'");
        for (auto v = lo; v <= hi; ++v)
            out.push_back(static_cast<unsigned>(v));
    }
    return out;
}

using Setter = std::function<void(ExperimentConfig &, const std::string &, const Inputs &)>;

const std::map<std::string, Setter> &setters() {
    static const std::map<std::string, Setter> table = {
        {"default.seed", [](auto &c, auto &f, auto &in) { c.seed = to_u64(f, single(f, in)); }},
        {"device.cipher",
         [](auto &c, auto &f, auto &in) {
             const auto v = single(f, in);
             if (v == "des")
                 c.device.cipher = CipherKind::Des;
             else if (v == "aes")
                 c.device.cipher = CipherKind::AesLastRound;
             else
                 throw ConfigError(f + ": expected des or aes");
         }},
        {"device.rounds",
         [](auto &c, auto &f, auto &in) { c.device.register_rounds = to_uints(f, in); }},
        {"device.leakage",
         [](auto &c, auto &f, auto &in) {
             const auto v = single(f, in);
             if (v == "hw")
                 c.device.leakage = LeakageModel::HammingWeight;
             else if (v == "hd")
                 c.device.leakage = LeakageModel::HammingDistance;
             else
                 throw ConfigError(f + ": expected hw or hd");
         }},
        {"device.samples_per_load",
         [](auto &c, auto &f, auto &in) {
             c.device.samples_per_load = static_cast<unsigned>(to_u64(f, single(f, in)));
         }},
        {"device.reset_state",
         [](auto &c, auto &f, auto &in) { c.device.reset_state = to_u64(f, single(f, in)); }},
        {"sweep.n_traces",
         [](auto &c, auto &f, auto &in) {
             c.n_traces.clear();
             for (unsigned v : to_uints(f, in))
                 c.n_traces.push_back(v);
         }},
        {"sweep.noise_sigma",
         [](auto &c, auto &f, auto &in) {
             c.noise_sigma.clear();
             for (const auto &s : in)
                 c.noise_sigma.push_back(to_double(f, s));
         }},
        {"search.target",
         [](auto &c, auto &f, auto &in) {
             c.search_target = single(f, in);
             if (c.search_target != "register" && c.search_target != "sbox")
                 throw ConfigError(f + ": expected register or sbox");
         }},
        {"search.round",
         [](auto &c, auto &f, auto &in) {
             c.search_round = static_cast<unsigned>(to_u64(f, single(f, in)));
         }},
        {"search.sbox",
         [](auto &c, auto &f, auto &in) {
             c.search_sbox = static_cast<unsigned>(to_u64(f, single(f, in)));
         }},
        {"search.gamma_h", [](auto &c, auto &f, auto &in) { c.gamma_h = to_uints(f, in); }},
        {"search.pi_support", [](auto &c, auto &f, auto &in) { c.pi_support = to_uints(f, in); }},
        {"search.key_support",
         [](auto &c, auto &f, auto &in) { c.key_support = to_uints(f, in); }},
        {"search.max_pi_weight",
         [](auto &c, auto &f, auto &in) {
             c.max_pi_weight = static_cast<unsigned>(to_u64(f, single(f, in)));
         }},
        {"search.max_kappa_weight",
         [](auto &c, auto &f, auto &in) {
             c.max_kappa_weight = static_cast<unsigned>(to_u64(f, single(f, in)));
         }},
        {"search.min_bias",
         [](auto &c, auto &f, auto &in) { c.min_bias = to_double(f, single(f, in)); }},
        {"search.n_samples",
         [](auto &c, auto &f, auto &in) { c.search_samples = to_u64(f, single(f, in)); }},
        {"search.budget",
         [](auto &c, auto &f, auto &in) { c.search_budget = to_u64(f, single(f, in)); }},
        {"attack.kind",
         [](auto &c, auto &f, auto &in) {
             const auto v = single(f, in);
             if (v == "mlpa")
                 c.attack = AttackKind::Mlpa;
             else if (v == "dpa")
                 c.attack = AttackKind::Dpa;
             else if (v == "prob-dpa")
                 c.attack = AttackKind::ProbDpa;
             else if (v == "cpa")
                 c.attack = AttackKind::Cpa;
             else
                 throw ConfigError(f + ": expected mlpa, dpa, prob-dpa or cpa");
         }},
        {"attack.corpus", [](auto &c, auto &f, auto &in) { c.corpus_path = single(f, in); }},
        {"attack.campaign", [](auto &c, auto &f, auto &in) { c.campaign_path = single(f, in); }},
        {"attack.mode",
         [](auto &c, auto &f, auto &in) {
             const auto v = single(f, in);
             if (v == "measured")
                 c.mode = AttackMode::Measured;
             else if (v == "exact")
                 c.mode = AttackMode::SimulationExact;
             else
                 throw ConfigError(f + ": expected measured or exact");
         }},
        {"attack.n_trials",
         [](auto &c, auto &f, auto &in) {
             c.n_trials = static_cast<unsigned>(to_u64(f, single(f, in)));
         }},
        {"attack.sample_index",
         [](auto &c, auto &f, auto &in) { c.sample_index = to_u64(f, single(f, in)); }},
        {"attack.sbox",
         [](auto &c, auto &f, auto &in) {
             c.sbox = static_cast<unsigned>(to_u64(f, single(f, in)));
         }},
        {"attack.bit",
         [](auto &c, auto &f, auto &in) {
             c.bit = static_cast<unsigned>(to_u64(f, single(f, in)));
         }},
        {"attack.eps", [](auto &c, auto &f, auto &in) { c.eps = to_double(f, single(f, in)); }},
        {"attack.byte",
         [](auto &c, auto &f, auto &in) {
             c.byte_index = static_cast<unsigned>(to_u64(f, single(f, in)));
         }},
        {"output.dir", [](auto &c, auto &f, auto &in) { c.output_dir = single(f, in); }},
    };
    return table;
}

} // namespace

void ExperimentConfig::validate(bool needs_corpus) const {
    try {
        device.validate();
    } catch (const ModelError &e) {
        throw ConfigError(std::string("device: ") + e.what());
    }
    if (n_traces.empty())
        throw ConfigError("sweep.n_traces: sweep is empty");
    if (noise_sigma.empty())
        throw ConfigError("sweep.noise_sigma: sweep is empty");
    for (double s : noise_sigma)
        if (!(s >= 0.0))
            throw ConfigError("sweep.noise_sigma: negative value");
    if (n_trials < 1)
        throw ConfigError("attack.n_trials: must be at least 1");
    if (output_dir.empty())
        throw ConfigError("output.dir: missing (set it in the config or pass --out)");
    if (needs_corpus) {
        if (corpus_path.empty())
            throw ConfigError("attack.corpus: missing");
        if (!std::filesystem::exists(corpus_path))
            throw ConfigError("attack.corpus: no such file '" + corpus_path + "'");
    }
    if (!campaign_path.empty() && !std::filesystem::exists(campaign_path))
        throw ConfigError("attack.campaign: no such file '" + campaign_path + "'");
}

ExperimentConfig parse_experiment_config(std::istream &in) {
    std::vector<CLI::ConfigItem> items;
    try {
        items = CLI::ConfigINI().from_config(in);
    } catch (const CLI::Error &e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    ExperimentConfig cfg;
    for (const auto &item : items) {
        if (item.name == "++" || item.name == "--")
            continue;
        std::string field;
        for (const auto &p : item.parents)
            field += p + ".";
        if (item.parents.empty())
            field = "default.";
        field += item.name;
        const auto it = setters().find(field);
        if (it == setters().end())
            throw ConfigError(field + ": unknown setting");
        it->second(cfg, field.rfind("default.", 0) == 0 ? field.substr(8) : field,
                   item.inputs);
    }
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("--config: cannot open '" + path + "'");
    return parse_experiment_config(in);
}

std::string cipher_name(CipherKind c) {
    return c == CipherKind::Des ? "DES" : "AES";
}

std::string model_name(LeakageModel m) {
    return m == LeakageModel::HammingWeight ? "HW" : "HD";
}

} // namespace mlpa::cli
