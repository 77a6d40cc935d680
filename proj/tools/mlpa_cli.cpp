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

// mlpa_cli: simulate campaigns, search linear approximations and run
// DPA / CPA / MLPA experiments from an INI configuration.

#include "experiment_config.hpp"

#include "mlpa/approx.hpp"
#include "mlpa/dpa.hpp"
#include "mlpa/errors.hpp"
#include "mlpa/mlpa.hpp"
#include "mlpa/parallel.hpp"
#include "mlpa/trace_io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

namespace fs = std::filesystem;
using namespace mlpa;
using mlpa::cli::AttackKind;
using mlpa::cli::ExperimentConfig;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitAssert = 4;

struct Row {
    std::string cipher, model, rounds, equations, key_bits, plaintexts, success;
};

void print_table(std::ostream &out, const std::vector<Row> &rows) {
    const std::vector<std::string> head = {"Cipher",    "Model",         "rounds",
                                           "# linear equ.", "# key bits", "# Plaintexts",
                                           "Pr(Success)"};
    std::vector<std::size_t> w(head.size());
    for (std::size_t i = 0; i < head.size(); ++i)
        w[i] = head[i].size();
    auto cells = [](const Row &r) {
        return std::vector<std::string>{r.cipher,   r.model,      r.rounds, r.equations,
                                        r.key_bits, r.plaintexts, r.success};
    };
    for (const auto &r : rows) {
        const auto c = cells(r);
        for (std::size_t i = 0; i < c.size(); ++i)
            w[i] = std::max(w[i], c[i].size());
    }
    auto line = [&](const std::vector<std::string> &c) {
        out << "|";
        for (std::size_t i = 0; i < c.size(); ++i)
            out << " " << c[i] << std::string(w[i] - c[i].size(), ' ') << " |";
        out << "\n";
    };
    line(head);
    out << "|";
    for (auto n : w)
        out << std::string(n + 2, '-') << "|";
    out << "\n";
    for (const auto &r : rows)
        line(cells(r));
}

std::string fmt(const char *f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string point_tag(std::size_t n, double sigma) {
    return "n" + std::to_string(n) + "_s" + fmt("%g", sigma);
}

std::string rounds_text(const std::vector<unsigned> &r) {
    if (r.size() == 1)
        return std::to_string(r.front());
    return std::to_string(r.front()) + ".." + std::to_string(r.back());
}

BitVector trial_key(std::uint64_t stream, std::uint64_t index) {
    std::mt19937_64 rng(derive_seed(stream, index));
    return BitVector(rng(), 64);
}

/// The key and campaign used for the reported ranking of a sweep point.
Campaign report_campaign(const ExperimentConfig &cfg, std::size_t n, double sigma,
                         std::size_t point) {
    DeviceConfig dev = cfg.device;
    dev.noise_sigma = sigma;
    dev.seed = derive_seed(derive_seed(cfg.seed, "campaign"), point);
    return simulate_campaign(dev, trial_key(derive_seed(cfg.seed, "key"), point), n);
}

int cmd_simulate(const ExperimentConfig &cfg) {
    cfg.validate(false);
    fs::create_directories(cfg.output_dir);
    std::size_t point = 0;
    for (double sigma : cfg.noise_sigma) {
        for (std::size_t n : cfg.n_traces) {
            const Campaign c = report_campaign(cfg, n, sigma, point++);
            const auto path =
                (fs::path(cfg.output_dir) / ("campaign_" + point_tag(n, sigma) + ".mlpatrc"))
                    .string();
            write_campaign(c, path, true);
            std::cout << path << ": " << c.size() << " traces, " << c.samples_per_trace()
                      << " samples per trace\n";
        }
    }
    return 0;
}

int cmd_search(const ExperimentConfig &cfg) {
    cfg.validate(false);
    SearchSpec s;
    if (cfg.search_target == "sbox") {
        s.target = des_sbox_target(cfg.search_sbox);
        s.rounds = 1;
    } else {
        s.target = des_register_target(cfg.search_round, cfg.device.leakage);
        s.rounds = cfg.search_round;
        s.register_load = cfg.search_round;
    }
    s.gamma_h_list = cfg.gamma_h;
    s.pi_support = cfg.pi_support;
    s.key_support = cfg.key_support;
    s.max_pi_weight = cfg.max_pi_weight;
    s.max_kappa_weight = cfg.max_kappa_weight;
    s.min_bias = cfg.min_bias;
    s.n_samples = cfg.search_samples;
    s.budget = cfg.search_budget;
    s.seed = derive_seed(cfg.seed, "search");
    const SearchResult r = search_approximations(s);

    fs::create_directories(cfg.output_dir);
    const auto path = (fs::path(cfg.output_dir) / "corpus.txt").string();
    write_corpus(path, r.set.items(),
                 "target " + s.target.name + ", min_bias " + fmt("%g", s.min_bias));
    std::cout << path << ": " << r.set.size() << " relations, " << r.evaluated
              << " candidates scored, kappa rank " << r.kappa_rank << "/" << r.set.k()
              << (r.partial ? " (partial: budget exhausted)" : "") << "\n";
    return 0;
}

struct AttackOutcome {
    Row row;
    bool asserted_ok = true;
};

int finish_attack(const ExperimentConfig &cfg, const std::vector<Row> &rows,
                  bool assert_success, bool all_rank1) {
    print_table(std::cout, rows);
    std::ofstream table(fs::path(cfg.output_dir) / "table.md");
    print_table(table, rows);
    if (assert_success && !all_rank1) {
        std::cerr << "assertion failed: correct subkey not at rank 1\n";
        return kExitAssert;
    }
    return 0;
}

int attack_mlpa(const ExperimentConfig &cfg, bool assert_success) {
    const ApproximationSet set(read_corpus(cfg.corpus_path));
    if (set.empty())
        throw DataError("corpus " + cfg.corpus_path + " holds no relation");
    unsigned depth = 0;
    for (const auto &a : set.items())
        depth = std::max(depth, a.rounds);
    const std::string rounds =
        depth ? std::to_string(depth) : rounds_text(cfg.device.register_rounds);
    std::vector<Row> rows;
    bool all_rank1 = true;

    const auto sample_for = [&](const DeviceConfig &dev) {
        if (cfg.sample_index)
            return *cfg.sample_index;
        return dev.sample_index_of(set.items().front().register_load).value_or(0);
    };

    if (!cfg.campaign_path.empty()) {
        const Campaign c = read_campaign(cfg.campaign_path);
        const auto res = mlpa_attack(c, set, cfg.sample_index.value_or(0), cfg.mode);
        std::optional<std::uint64_t> correct;
        if (c.key)
            correct = set.restrict_key(*c.key);
        std::ofstream csv(fs::path(cfg.output_dir) / "ranking.csv");
        write_ranking_csv(csv, res.ranking, correct);
        const bool ok = correct && res.ranking.best() == *correct;
        all_rank1 = ok;
        rows.push_back({cli::cipher_name(c.config.cipher), cli::model_name(c.config.leakage),
                        rounds, std::to_string(set.size()), std::to_string(set.k()),
                        std::to_string(c.size()), correct ? (ok ? "1.00" : "0.00") : "-"});
        return finish_attack(cfg, rows, assert_success && correct.has_value(), all_rank1);
    }

    std::size_t point = 0;
    for (double sigma : cfg.noise_sigma) {
        for (std::size_t n : cfg.n_traces) {
            const Campaign c = report_campaign(cfg, n, sigma, point);
            const auto res = mlpa_attack(c, set, sample_for(c.config), cfg.mode);
            const auto correct = set.restrict_key(*c.key);
            std::ofstream csv(fs::path(cfg.output_dir) /
                              ("ranking_" + point_tag(n, sigma) + ".csv"));
            write_ranking_csv(csv, res.ranking, correct);
            all_rank1 = all_rank1 && res.ranking.best() == correct;

            TrialSpec t;
            t.device = cfg.device;
            t.device.noise_sigma = sigma;
            t.n_traces = n;
            t.n_trials = cfg.n_trials;
            t.seed = derive_seed(derive_seed(cfg.seed, "trials"), point);
            t.mode = cfg.mode;
            t.sample_index = sample_for(cfg.device);
            const double rate = success_rate(t, set);
            rows.push_back({cli::cipher_name(cfg.device.cipher),
                            cli::model_name(cfg.device.leakage), rounds,
                            std::to_string(set.size()), std::to_string(set.k()),
                            std::to_string(n), fmt("%.2f", rate)});
            ++point;
        }
    }
    return finish_attack(cfg, rows, assert_success, all_rank1);
}

int attack_selection(const ExperimentConfig &cfg, bool assert_success) {
    const bool cpa = cfg.attack == AttackKind::Cpa;
    if (cpa && cfg.device.cipher != CipherKind::AesLastRound)
        throw ConfigError("attack.kind: cpa needs device.cipher = aes");
    if (!cpa && cfg.device.cipher != CipherKind::Des)
        throw ConfigError("attack.kind: dpa needs device.cipher = des");
    SelectionFunction sel;
    if (!cpa) {
        sel = des_sbox_selection(cfg.sbox, cfg.bit);
        if (cfg.attack == AttackKind::ProbDpa)
            sel = probabilistic_selection(sel, cfg.eps, derive_seed(cfg.seed, "coin"));
    }
    const auto rank = [&](const Campaign &c) {
        const auto idx = cfg.sample_index ? cfg.sample_index : c.config.sample_index_of(1);
        if (cpa)
            return cpa_rank(pearson_cpa(c, aes_last_round_predictions(c, cfg.byte_index)),
                            idx);
        return dpa_rank(c, sel, idx);
    };
    const auto correct_of = [&](const BitVector &key) -> std::uint64_t {
        if (cpa)
            return aes_round_key_from(key)[cfg.byte_index];
        return des_sbox_subkey(key, cfg.sbox);
    };

    std::vector<Row> rows;
    bool all_rank1 = true;
    std::size_t point = 0;
    for (double sigma : cfg.noise_sigma) {
        for (std::size_t n : cfg.n_traces) {
            const Campaign c = report_campaign(cfg, n, sigma, point);
            const auto ranking = rank(c);
            std::ofstream csv(fs::path(cfg.output_dir) /
                              ("scores_" + point_tag(n, sigma) + ".csv"));
            write_score_csv(csv, ranking);
            all_rank1 = all_rank1 && ranking.best() == correct_of(*c.key);

            const auto stream = derive_seed(derive_seed(cfg.seed, "trials"), point);
            unsigned wins = 0;
            for (unsigned t = 0; t < cfg.n_trials; ++t) {
                DeviceConfig dev = cfg.device;
                dev.noise_sigma = sigma;
                dev.seed = derive_seed(derive_seed(stream, "campaign"), t);
                const BitVector key = trial_key(stream, t);
                wins += rank(simulate_campaign(dev, key, n)).best() == correct_of(key);
            }
            rows.push_back({cli::cipher_name(cfg.device.cipher),
                            cli::model_name(cfg.device.leakage),
                            rounds_text(cfg.device.register_rounds), "-",
                            cpa ? "8" : "6", std::to_string(n),
                            fmt("%.2f", static_cast<double>(wins) / cfg.n_trials)});
            ++point;
        }
    }
    return finish_attack(cfg, rows, assert_success, all_rank1);
}

int cmd_attack(const ExperimentConfig &cfg, bool assert_success) {
    cfg.validate(cfg.attack == AttackKind::Mlpa);
    fs::create_directories(cfg.output_dir);
    if (cfg.attack == AttackKind::Mlpa)
        return attack_mlpa(cfg, assert_success);
    return attack_selection(cfg, assert_success);
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Multi-linear power analysis experiments"};
    app.require_subcommand(1);
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    bool assert_success = false;

    auto add_common = [&](CLI::App *sub) {
        sub->add_option("--config", config_path, "Experiment INI file")->required();
        sub->add_option("--seed", seed, "Override the config seed");
        sub->add_option("--out", out_dir, "Override the output directory");
    };
    auto *simulate = app.add_subcommand("simulate", "Write simulated campaigns");
    auto *search = app.add_subcommand("search", "Search linear approximations");
    auto *attack = app.add_subcommand("attack", "Run an attack and report success rates");
    add_common(simulate);
    add_common(search);
    add_common(attack);
    attack->add_flag("--assert-success", assert_success,
                     "Exit with status 4 unless every reported ranking puts the "
                     "correct subkey first");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        ExperimentConfig cfg = cli::load_experiment_config(config_path);
        if (seed)
            cfg.seed = *seed;
        if (!out_dir.empty())
            cfg.output_dir = out_dir;
        if (simulate->parsed())
            return cmd_simulate(cfg);
        if (search->parsed())
            return cmd_search(cfg);
        return cmd_attack(cfg, assert_success);
    } catch (const ConfigError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ParseError &e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ModelError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
}
