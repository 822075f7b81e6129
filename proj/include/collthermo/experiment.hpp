// Copyright 2026 The collthermo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
/**
 * @file experiment.hpp
 * Declarative experiment runner behind the command-line tool: JSON config,
 * validation diagnostics, one CSV per experiment and a JSON manifest.
 *
 * Exit codes: 0 success, 1 invalid config, 2 numerical invariant violated,
 * 3 I/O failure.
 */
#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "estimation.hpp"
#include "infoflow.hpp"
#include "protocol.hpp"

namespace collthermo::cli {

using Json = nlohmann::ordered_json;

inline constexpr const char *kVersion = "1.0.0";

enum ExitCode : int { kOk = 0, kInvalidConfig = 1, kInvariantViolation = 2, kIoFailure = 3 };

inline const std::vector<std::string> &experiment_names() {
    static const std::vector<std::string> names{
        "qfi-sweep",    "qfi-vs-chains",   "qfi-vs-rounds", "infoflow",
        "fullswap-qfi", "partialswap-qfi", "mutual-info"};
    return names;
}

struct TemperatureGrid {
    double min = 0.05;
    double max = 2.0;
    std::size_t count = 100;
    std::string spacing = "linear"; ///< or "log"

    [[nodiscard]] std::vector<double> values() const {
        std::vector<double> out(count);
        for (std::size_t i = 0; i < count; ++i) {
            const double f = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
            out[i] = spacing == "log" ? min * std::pow(max / min, f) : min + (max - min) * f;
        }
        return out;
    }
};

struct ExperimentConfig {
    std::string experiment = "qfi-sweep";
    ProtocolParams protocol = [] {
        ProtocolParams p;
        p.couplings = {std::numbers::pi / 100, std::numbers::pi / 2};
        return p;
    }();
    std::string reset_mode = "exact-gibbs";
    TemperatureGrid t_grid;
    std::vector<std::size_t> chains{1, 2, 3, 4, 5, 6, 7, 8};
    std::vector<std::size_t> rounds{1};
    double temperature = 1.0; ///< single-temperature experiments
    std::vector<std::string> preparations{"0", "1"};
    std::vector<std::string> subjects{"S", "A1"};
    std::string output = "results";
    std::uint64_t seed = 0;
    std::size_t threads = 0; ///< 0: available parallelism
};

struct Diagnostic {
    std::string path;
    std::string message;

    friend bool operator==(const Diagnostic &, const Diagnostic &) = default;
};

// Parsing -------------------------------------------------------------------

/// Number, or a multiple of pi written as "pi", "pi/100", "3*pi/4".
inline double parse_angle(const Json &v) {
    if (v.is_number()) {
        return v.get<double>();
    }
    if (!v.is_string()) {
        throw std::invalid_argument("expected a number or a multiple of pi");
    }
    std::string s;
    for (char c : v.get<std::string>()) {
        if (c != ' ') {
            s += c;
        }
    }
    const auto at = s.find("pi");
    if (at == std::string::npos) {
        throw std::invalid_argument("cannot read angle '" + v.get<std::string>() + "'");
    }
    auto number = [&](const std::string &text) {
        double x = 0.0;
        const auto res = std::from_chars(text.data(), text.data() + text.size(), x);
        if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
            throw std::invalid_argument("cannot read angle '" + v.get<std::string>() + "'");
        }
        return x;
    };
    double coef = 1.0;
    if (at > 0) {
        if (s[at - 1] != '*') {
            throw std::invalid_argument("cannot read angle '" + v.get<std::string>() + "'");
        }
        coef = number(s.substr(0, at - 1));
    }
    double denom = 1.0;
    const std::string rest = s.substr(at + 2);
    if (!rest.empty()) {
        if (rest[0] != '/') {
            throw std::invalid_argument("cannot read angle '" + v.get<std::string>() + "'");
        }
        denom = number(rest.substr(1));
    }
    return coef * std::numbers::pi / denom;
}

namespace detail {

class Reader {
  public:
    explicit Reader(std::vector<Diagnostic> &diags) : diags_(diags) {}

    template <class T>
    void field(const Json &obj, const char *key, const std::string &path, T &out) {
        if (!obj.contains(key)) {
            return;
        }
        try {
            out = obj.at(key).get<T>();
        } catch (const std::exception &) {
            diags_.push_back({path, path + " has the wrong type"});
        }
    }

    void angle(const Json &obj, const char *key, const std::string &path, double &out) {
        if (!obj.contains(key)) {
            return;
        }
        try {
            out = parse_angle(obj.at(key));
        } catch (const std::exception &e) {
            diags_.push_back({path, path + ": " + e.what()});
        }
    }

    void only(const Json &obj, const std::string &prefix, std::initializer_list<const char *> keys) {
        for (const auto &item : obj.items()) {
            if (std::find_if(keys.begin(), keys.end(), [&](const char *k) {
                    return item.key() == k;
                }) == keys.end()) {
                diags_.push_back({prefix + item.key(), "unknown field " + prefix + item.key()});
            }
        }
    }

    bool object(const Json &obj, const std::string &path) {
        if (!obj.is_object()) {
            diags_.push_back({path, path + " must be an object"});
            return false;
        }
        return true;
    }

  private:
    std::vector<Diagnostic> &diags_;
};

} // namespace detail

/// Reads a config document; type errors and unknown fields become diagnostics.
inline ExperimentConfig parse_config(const Json &doc, std::vector<Diagnostic> &diags) {
    ExperimentConfig cfg;
    detail::Reader r(diags);
    if (!r.object(doc, "config")) {
        return cfg;
    }
    r.only(doc, "", {"experiment", "protocol", "T_grid", "chains", "rounds", "temperature",
                     "preparations", "subjects", "output", "seed", "threads"});
    r.field(doc, "experiment", "experiment", cfg.experiment);
    if (doc.contains("protocol") && r.object(doc.at("protocol"), "protocol")) {
        const auto &p = doc.at("protocol");
        r.only(p, "protocol.",
               {"n_chains", "n_rounds", "omega", "gamma", "g_tau_sa", "j_tau_a", "reset_mode",
                "tau_se", "time_steps_per_collision", "ancilla_check"});
        auto &pp = cfg.protocol;
        r.field(p, "n_chains", "protocol.n_chains", pp.n_chains);
        r.field(p, "n_rounds", "protocol.n_rounds", pp.n_rounds);
        r.field(p, "omega", "protocol.omega", pp.thermal.omega);
        r.field(p, "gamma", "protocol.gamma", pp.thermal.gamma);
        r.angle(p, "g_tau_sa", "protocol.g_tau_sa", pp.couplings.g_tau_sa);
        r.angle(p, "j_tau_a", "protocol.j_tau_a", pp.couplings.j_tau_a);
        r.field(p, "reset_mode", "protocol.reset_mode", cfg.reset_mode);
        r.field(p, "tau_se", "protocol.tau_se", pp.reset.tau_se);
        r.field(p, "time_steps_per_collision", "protocol.time_steps_per_collision",
                pp.time_steps_per_collision);
        std::string check = "warn";
        r.field(p, "ancilla_check", "protocol.ancilla_check", check);
        if (check == "error") {
            pp.ancilla_check = AncillaCheck::Error;
        } else if (check == "off") {
            pp.ancilla_check = AncillaCheck::Off;
        } else if (check == "warn") {
            pp.ancilla_check = AncillaCheck::Warn;
        } else {
            diags.push_back({"protocol.ancilla_check",
                             "protocol.ancilla_check must be error, warn or off"});
        }
    }
    if (doc.contains("T_grid") && r.object(doc.at("T_grid"), "T_grid")) {
        const auto &g = doc.at("T_grid");
        r.only(g, "T_grid.", {"min", "max", "count", "spacing"});
        r.field(g, "min", "T_grid.min", cfg.t_grid.min);
        r.field(g, "max", "T_grid.max", cfg.t_grid.max);
        r.field(g, "count", "T_grid.count", cfg.t_grid.count);
        r.field(g, "spacing", "T_grid.spacing", cfg.t_grid.spacing);
    }
    r.field(doc, "chains", "chains", cfg.chains);
    r.field(doc, "rounds", "rounds", cfg.rounds);
    r.field(doc, "temperature", "temperature", cfg.temperature);
    r.field(doc, "preparations", "preparations", cfg.preparations);
    r.field(doc, "subjects", "subjects", cfg.subjects);
    r.field(doc, "output", "output", cfg.output);
    r.field(doc, "seed", "seed", cfg.seed);
    r.field(doc, "threads", "threads", cfg.threads);

    auto &reset = cfg.protocol.reset;
    if (cfg.reset_mode == "exact-gibbs") {
        reset.kind = ResetKind::ExactGibbs;
    } else if (cfg.reset_mode == "finite-time") {
        reset.kind = ResetKind::FiniteTime;
    } else if (cfg.reset_mode == "none") {
        reset.kind = ResetKind::None;
    } else {
        diags.push_back({"protocol.reset_mode",
                         "protocol.reset_mode must be exact-gibbs, finite-time or none"});
    }
    return cfg;
}

/// Normalized config echo: every value the run depends on, angles in radians.
inline Json to_json(const ExperimentConfig &cfg) {
    const auto &p = cfg.protocol;
    Json j;
    j["experiment"] = cfg.experiment;
    j["protocol"] = {
        {"n_chains", p.n_chains},
        {"n_rounds", p.n_rounds},
        {"omega", p.thermal.omega},
        {"gamma", p.thermal.gamma},
        {"g_tau_sa", p.couplings.g_tau_sa},
        {"j_tau_a", p.couplings.j_tau_a},
        {"reset_mode", cfg.reset_mode},
        {"tau_se", p.reset.tau_se},
        {"time_steps_per_collision", p.time_steps_per_collision},
        {"ancilla_check", p.ancilla_check == AncillaCheck::Error ? "error"
                          : p.ancilla_check == AncillaCheck::Off ? "off"
                                                                 : "warn"},
    };
    j["T_grid"] = {{"min", cfg.t_grid.min},
                   {"max", cfg.t_grid.max},
                   {"count", cfg.t_grid.count},
                   {"spacing", cfg.t_grid.spacing}};
    j["chains"] = cfg.chains;
    j["rounds"] = cfg.rounds;
    j["temperature"] = cfg.temperature;
    j["preparations"] = cfg.preparations;
    j["subjects"] = cfg.subjects;
    j["output"] = cfg.output;
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    return j;
}

inline std::optional<ComplexMatrix> preparation_matrix(const std::string &name) {
    Eigen::VectorXcd psi(2);
    const double r = 1.0 / std::numbers::sqrt2;
    if (name == "0") {
        psi << 1.0, 0.0;
    } else if (name == "1") {
        psi << 0.0, 1.0;
    } else if (name == "+") {
        psi << r, r;
    } else if (name == "-") {
        psi << r, -r;
    } else {
        return std::nullopt;
    }
    return ComplexMatrix(psi * psi.adjoint());
}

/// Empty iff the config can be run.
inline std::vector<Diagnostic> validate(const ExperimentConfig &cfg) {
    std::vector<Diagnostic> d;
    const auto &names = experiment_names();
    if (std::find(names.begin(), names.end(), cfg.experiment) == names.end()) {
        d.push_back({"experiment", "unknown experiment '" + cfg.experiment + "'"});
    }
    auto chain_count = [&](std::size_t n, const std::string &path) {
        if (n < 1) {
            d.push_back({path, "n_chains must be >= 1"});
        } else if (n > kMaxChains) {
            d.push_back({path, "n_chains exceeds memory cap " + std::to_string(kMaxChains)});
        }
    };
    const auto &p = cfg.protocol;
    chain_count(p.n_chains, "protocol.n_chains");
    if (p.n_rounds < 1) {
        d.push_back({"protocol.n_rounds", "n_rounds must be >= 1"});
    }
    if (!(p.thermal.omega > 0.0)) {
        d.push_back({"protocol.omega", "protocol.omega must be > 0"});
    }
    if (!(p.thermal.gamma > 0.0)) {
        d.push_back({"protocol.gamma", "protocol.gamma must be > 0"});
    }
    if (!(p.couplings.g_tau_sa >= 0.0)) {
        d.push_back({"protocol.g_tau_sa", "protocol.g_tau_sa must be >= 0"});
    }
    if (!(p.couplings.j_tau_a >= 0.0)) {
        d.push_back({"protocol.j_tau_a", "protocol.j_tau_a must be >= 0"});
    }
    if (!(p.reset.tau_se >= 0.0)) {
        d.push_back({"protocol.tau_se", "protocol.tau_se must be >= 0"});
    }
    if (p.time_steps_per_collision < 1) {
        d.push_back({"protocol.time_steps_per_collision",
                     "protocol.time_steps_per_collision must be > 0"});
    }

    const auto &g = cfg.t_grid;
    if (!(g.min > 0.0)) {
        d.push_back({"T_grid.min", "T_grid.min must be > 0"});
    }
    if (g.count < 1) {
        d.push_back({"T_grid.count", "T_grid.count must be >= 1"});
    }
    if (g.count > 1 && !(g.max > g.min)) {
        d.push_back({"T_grid.max", "T_grid.max must be > T_grid.min"});
    }
    if (g.spacing != "linear" && g.spacing != "log") {
        d.push_back({"T_grid.spacing", "T_grid.spacing must be linear or log"});
    }
    if ((cfg.experiment == "qfi-vs-chains" || cfg.experiment == "qfi-vs-rounds") && g.count < 3) {
        d.push_back({"T_grid.count", "T_grid.count must be >= 3 to locate a maximum"});
    }

    if (cfg.chains.empty()) {
        d.push_back({"chains", "chains must be nonempty"});
    }
    for (std::size_t i = 0; i < cfg.chains.size(); ++i) {
        chain_count(cfg.chains[i], "chains[" + std::to_string(i) + "]");
    }
    if (cfg.rounds.empty()) {
        d.push_back({"rounds", "rounds must be nonempty"});
    }
    for (std::size_t i = 0; i < cfg.rounds.size(); ++i) {
        if (cfg.rounds[i] < 1) {
            d.push_back({"rounds[" + std::to_string(i) + "]", "rounds are 1-based"});
        }
    }
    if (!(cfg.temperature > 0.0)) {
        d.push_back({"temperature", "temperature must be > 0"});
    }
    if (cfg.preparations.size() != 2) {
        d.push_back({"preparations", "preparations must list two states"});
    }
    for (std::size_t i = 0; i < cfg.preparations.size(); ++i) {
        if (!preparation_matrix(cfg.preparations[i])) {
            d.push_back({"preparations[" + std::to_string(i) + "]",
                         "unknown preparation '" + cfg.preparations[i] + "' (use 0, 1, + or -)"});
        }
    }
    if (cfg.experiment == "infoflow" && cfg.subjects.empty()) {
        d.push_back({"subjects", "subjects must be nonempty"});
    }
    for (std::size_t i = 0; i < cfg.subjects.size(); ++i) {
        const std::string path = "subjects[" + std::to_string(i) + "]";
        try {
            const auto s = Subject::parse(cfg.subjects[i]);
            if (s.chain > p.n_chains) {
                d.push_back({path, "subject " + cfg.subjects[i] + " beyond protocol.n_chains"});
            }
        } catch (const std::invalid_argument &e) {
            d.push_back({path, e.what()});
        }
    }
    if (cfg.output.empty()) {
        d.push_back({"output", "output must be a directory path"});
    }
    return d;
}

// Tables --------------------------------------------------------------------

using Cell = std::variant<double, std::size_t, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

/// Shortest round-trip of the value at 12 significant digits, locale free.
inline std::string format_number(double v) {
    if (!std::isfinite(v)) {
        throw InvariantViolation("finite-output", "non-finite value in result table");
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 12);
    return {buf, res.ptr};
}

inline std::string to_csv(const Table &t) {
    std::string out;
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
        out += (c ? "," : "") + t.columns[c];
    }
    out += '\n';
    for (const auto &row : t.rows) {
        if (row.size() != t.columns.size()) {
            throw std::logic_error("table row does not match its columns");
        }
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) {
                out += ',';
            }
            std::visit(
                [&](const auto &v) {
                    using V = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<V, double>) {
                        out += format_number(v);
                    } else if constexpr (std::is_same_v<V, std::size_t>) {
                        out += std::to_string(v);
                    } else {
                        out += v;
                    }
                },
                row[c]);
        }
        out += '\n';
    }
    return out;
}

struct ExperimentOutput {
    Table table;
    Json results = Json::object();
    std::vector<std::string> warnings;
};

// Experiments ---------------------------------------------------------------

namespace detail {

inline std::size_t worker_count(const ExperimentConfig &cfg) {
    if (cfg.threads > 0) {
        return cfg.threads;
    }
    return std::max(1U, std::thread::hardware_concurrency());
}

inline TemperatureScan scan_or_warn(const std::function<double(double)> &f,
                                    const ExperimentConfig &cfg, const std::string &what,
                                    std::vector<std::string> &warnings) {
    auto scan = scan_temperature(f, cfg.t_grid.min, cfg.t_grid.max, cfg.t_grid.count);
    if (scan.local_maxima.size() > 1) {
        std::ostringstream msg;
        msg << what << ": " << scan.local_maxima.size()
            << " local maxima on the coarse scan, reporting the largest (T =";
        for (const auto &m : scan.local_maxima) {
            msg << ' ' << format_number(m.temperature);
        }
        msg << ')';
        warnings.push_back(msg.str());
    }
    return scan;
}

inline ExperimentOutput qfi_sweep(const ExperimentConfig &cfg) {
    ExperimentOutput out;
    out.table.columns = {"temperature", "n_chains", "round_j", "qfi",
                         "qfi_thermal", "ratio",    "cumulative_fi"};
    const auto rows = sweep_fig2(cfg.protocol, cfg.t_grid.values(), cfg.chains, cfg.rounds,
                                 worker_count(cfg));
    for (const auto &r : rows) {
        out.table.rows.push_back(
            {r.temperature, r.n_chains, r.round, r.qfi, r.qfi_thermal, r.ratio, r.cumulative_fi});
    }
    return out;
}

inline ExperimentOutput qfi_vs_chains(const ExperimentConfig &cfg) {
    ExperimentOutput out;
    out.table.columns = {"n_chains", "t_star", "qfi_max", "qfi_thermal_max", "ratio"};
    const double qth = thermal_qfi_max(cfg.protocol.thermal.omega).value;
    std::vector<TemperatureScan> scans(cfg.chains.size());
    std::vector<std::vector<std::string>> warnings(cfg.chains.size());
    parallel_for(cfg.chains.size(), worker_count(cfg), [&](std::size_t i) {
        auto p = cfg.protocol;
        p.n_chains = cfg.chains[i];
        const auto family = as_multi(ancilla_family(p, p.n_chains, p.n_rounds));
        scans[i] = scan_or_warn([&](double t) { return qfi_all(family, t).front(); }, cfg,
                                "n_chains=" + std::to_string(p.n_chains), warnings[i]);
    });
    for (std::size_t i = 0; i < cfg.chains.size(); ++i) {
        const auto &b = scans[i].best;
        out.table.rows.push_back({cfg.chains[i], b.temperature, b.value, qth, b.value / qth});
        out.warnings.insert(out.warnings.end(), warnings[i].begin(), warnings[i].end());
    }
    return out;
}

inline ExperimentOutput qfi_vs_rounds(const ExperimentConfig &cfg) {
    ExperimentOutput out;
    out.table.columns = {"round_j", "n_chains", "t_star",          "qfi_max",
                         "ratio",   "cumulative_fi_max", "cumulative_ratio"};
    const double qth = thermal_qfi_max(cfg.protocol.thermal.omega).value;
    const std::size_t max_round = *std::max_element(cfg.rounds.begin(), cfg.rounds.end());
    const std::size_t nr = cfg.rounds.size();
    std::vector<std::pair<TemperatureScan, TemperatureScan>> scans(cfg.chains.size() * nr);
    std::vector<std::vector<std::string>> warnings(cfg.chains.size());
    parallel_for(cfg.chains.size(), worker_count(cfg), [&](std::size_t ci) {
        auto p = cfg.protocol;
        p.n_chains = cfg.chains[ci];
        p.n_rounds = max_round;
        const auto family = chain_rounds_family(p, p.n_chains);
        std::map<double, std::vector<double>> cache;
        auto qfis = [&](double t) -> const std::vector<double> & {
            auto it = cache.find(t);
            if (it == cache.end()) {
                it = cache.emplace(t, qfi_all(family, t)).first;
            }
            return it->second;
        };
        for (std::size_t ri = 0; ri < nr; ++ri) {
            const std::size_t j = cfg.rounds[ri];
            const std::string tag =
                "n_chains=" + std::to_string(p.n_chains) + " round=" + std::to_string(j);
            auto single = scan_or_warn([&](double t) { return qfis(t)[j - 1]; }, cfg, tag,
                                       warnings[ci]);
            auto cumulative = scan_or_warn(
                [&](double t) {
                    const auto &q = qfis(t);
                    double s = 0.0;
                    for (std::size_t jj = 0; jj < j; ++jj) {
                        s += q[jj];
                    }
                    return s;
                },
                cfg, tag + " cumulative", warnings[ci]);
            scans[ci * nr + ri] = {std::move(single), std::move(cumulative)};
        }
    });
    for (std::size_t ri = 0; ri < nr; ++ri) {
        for (std::size_t ci = 0; ci < cfg.chains.size(); ++ci) {
            const auto &[single, cumulative] = scans[ci * nr + ri];
            out.table.rows.push_back({cfg.rounds[ri], cfg.chains[ci], single.best.temperature,
                                      single.best.value, single.best.value / qth,
                                      cumulative.best.value, cumulative.best.value / qth});
        }
    }
    for (const auto &w : warnings) {
        out.warnings.insert(out.warnings.end(), w.begin(), w.end());
    }
    return out;
}

inline DensityOperator preparation(const std::string &name) {
    return DensityOperator(*preparation_matrix(name), QubitRegister{"S"});
}

inline ExperimentOutput infoflow(const ExperimentConfig &cfg) {
    ExperimentOutput out;
    out.table.columns = {"time",       "subject", "distance", "sigma",
                         "event_kind", "round_j", "chain_k"};
    std::vector<Subject> subjects;
    bool joint = false;
    for (const auto &s : cfg.subjects) {
        subjects.push_back(Subject::parse(s));
        joint = joint || subjects.back().kind == SubjectKind::Joint;
    }
    const auto p = cfg.protocol.at_temperature(cfg.temperature);
    const auto [a, b] = run_time_resolved(
        p, {preparation(cfg.preparations[0]), preparation(cfg.preparations[1])}, joint);
    Json blp = Json::object();
    for (const auto &subject : subjects) {
        const auto series = distinguishability(a, b, subject);
        const auto f = flow(series);
        blp[subject.label()] = blp_measure(series);
        for (std::size_t i = 0; i < series.size(); ++i) {
            const auto e = series.event[i];
            const bool initial = e == kInitialSample;
            const std::string kind =
                initial ? std::string("initial") : std::string(to_string(a.events[e].kind));
            out.table.rows.push_back({series.times[i], subject.label(), series.distance[i],
                                      f.sigma[i], kind,
                                      initial ? std::size_t{0} : a.events[e].round,
                                      initial ? std::size_t{0} : a.events[e].chain()});
        }
    }
    out.results["blp"] = blp;
    return out;
}

inline ExperimentOutput checkpoint_qfi(const ExperimentConfig &cfg, bool full_swap) {
    ExperimentOutput out;
    out.table.columns = {"checkpoint", "event_kind", "round_j",     "chain_k",
                         "party",      "role",       "temperature", "qfi"};
    auto p = cfg.protocol;
    if (full_swap) {
        p.couplings = {std::numbers::pi / 2, std::numbers::pi / 2};
    }
    // the event layout does not depend on T
    const auto layout = run_protocol(p);
    const MultiStateFamily family = [p](double t) {
        const auto trace = run_protocol(p.at_temperature(t));
        std::vector<ComplexMatrix> mats;
        for (const auto &ev : trace.events) {
            for (auto slot : ev.participants) {
                mats.push_back(ev.end_state().slots[slot].matrix());
            }
        }
        return mats;
    };
    const auto temps = cfg.t_grid.values();
    std::vector<std::vector<double>> qfi(temps.size());
    parallel_for(temps.size(), worker_count(cfg),
                 [&](std::size_t i) { qfi[i] = qfi_all(family, temps[i]); });
    // Roles follow where the temperature information sits: thermalization
    // informs S, a full swap moves it across, a partial swap shares it.
    // Ancillae are fresh every round.
    std::map<std::string, bool> informed;
    std::size_t column = 0;
    for (std::size_t e = 0; e < layout.events.size(); ++e) {
        const auto &ev = layout.events[e];
        if (e > 0 && ev.round != layout.events[e - 1].round) {
            const bool s = informed["S"];
            informed = {{"S", s}};
        }
        std::vector<std::string> roles(ev.participants.size(), "receiver");
        if (ev.kind == EventKind::Thermalization) {
            informed[ev.labels[0]] = true;
        } else {
            const double angle = ev.kind == EventKind::SystemAncilla ? p.couplings.g_tau_sa
                                                                     : p.couplings.j_tau_a;
            const bool full = std::abs(std::abs(std::sin(angle)) - 1.0) < 1e-12;
            const bool a = informed[ev.labels[0]];
            const bool b = informed[ev.labels[1]];
            if (a != b) {
                roles[a ? 0 : 1] = "sender";
            } else {
                roles = {"shared", "shared"};
            }
            if (full) {
                informed[ev.labels[0]] = b;
                informed[ev.labels[1]] = a;
            } else {
                informed[ev.labels[0]] = informed[ev.labels[1]] = a || b;
            }
        }
        for (std::size_t pi = 0; pi < ev.participants.size(); ++pi, ++column) {
            for (std::size_t ti = 0; ti < temps.size(); ++ti) {
                out.table.rows.push_back({e, std::string(to_string(ev.kind)), ev.round,
                                          ev.chain(), ev.labels[pi], roles[pi], temps[ti],
                                          qfi[ti][column]});
            }
        }
    }
    return out;
}

inline ExperimentOutput mutual_info(const ExperimentConfig &cfg) {
    ExperimentOutput out;
    out.table.columns = {"checkpoint", "n_chains", "chain_k", "mutual_information"};
    std::vector<std::vector<std::vector<Cell>>> rows(cfg.chains.size());
    parallel_for(cfg.chains.size(), worker_count(cfg), [&](std::size_t ci) {
        auto p = cfg.protocol.at_temperature(cfg.temperature);
        p.n_chains = cfg.chains[ci];
        const auto trace = run_protocol(p);
        for (std::size_t e = 0; e < trace.events.size(); ++e) {
            const auto &ev = trace.events[e];
            if (ev.kind != EventKind::SystemAncilla) {
                continue;
            }
            const auto k = ev.chain();
            const auto &pair = ev.end_state().system_pairs[k - 1];
            rows[ci].push_back({e, p.n_chains, k, mutual_information(pair, 0, 1)});
        }
    });
    for (auto &r : rows) {
        for (auto &row : r) {
            out.table.rows.push_back(std::move(row));
        }
    }
    return out;
}

} // namespace detail

/// Runs the configured experiment without touching the filesystem.
inline ExperimentOutput compute(const ExperimentConfig &cfg) {
    const auto &e = cfg.experiment;
    if (e == "qfi-sweep") {
        return detail::qfi_sweep(cfg);
    }
    if (e == "qfi-vs-chains") {
        return detail::qfi_vs_chains(cfg);
    }
    if (e == "qfi-vs-rounds") {
        return detail::qfi_vs_rounds(cfg);
    }
    if (e == "infoflow") {
        return detail::infoflow(cfg);
    }
    if (e == "fullswap-qfi") {
        return detail::checkpoint_qfi(cfg, true);
    }
    if (e == "partialswap-qfi") {
        return detail::checkpoint_qfi(cfg, false);
    }
    if (e == "mutual-info") {
        return detail::mutual_info(cfg);
    }
    throw std::invalid_argument("unknown experiment '" + e + "'");
}

struct RunOptions {
    bool quiet = false;
    std::ostream *log = &std::cerr;
};

/// Validates, computes and writes <output>/<experiment>.csv and manifest.json.
inline int run(const ExperimentConfig &cfg, const RunOptions &opts = {}) {
    std::ostream &log = *opts.log;
    const auto diags = validate(cfg);
    if (!diags.empty()) {
        for (const auto &d : diags) {
            log << "error: " << d.message << '\n';
        }
        return kInvalidConfig;
    }
    const auto start = std::chrono::steady_clock::now();
    ExperimentOutput result;
    std::string csv;
    try {
        result = compute(cfg);
        csv = to_csv(result.table);
    } catch (const InvariantViolation &e) {
        log << "error: invariant violated: " << e.what() << '\n';
        return kInvariantViolation;
    } catch (const NonUnimodalError &e) {
        log << "error: invariant violated: unimodality: " << e.what() << '\n';
        return kInvariantViolation;
    } catch (const std::invalid_argument &e) {
        log << "error: " << e.what() << '\n';
        return kInvalidConfig;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const auto qth = thermal_qfi_max(cfg.protocol.thermal.omega);
    Json manifest;
    manifest["software"] = {{"name", "collthermo"}, {"version", kVersion}};
    manifest["experiment"] = cfg.experiment;
    manifest["config"] = to_json(cfg);
    manifest["wall_time_seconds"] = wall;
    manifest["derived"] = {{"qfi_thermal_max", qth.value},
                           {"qfi_thermal_t_star", qth.temperature},
                           {"qfi_thermal_max_reported", kReportedThermalQfiMax}};
    manifest["outputs"] = Json::array({cfg.experiment + ".csv"});
    manifest["results"] = result.results;
    manifest["warnings"] = result.warnings;

    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(cfg.output, ec);
    if (ec) {
        log << "error: cannot create " << cfg.output << ": " << ec.message() << '\n';
        return kIoFailure;
    }
    auto write = [&](const fs::path &path, const std::string &text) {
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        f << text;
        f.close();
        if (!f) {
            log << "error: cannot write " << path.string() << '\n';
            return false;
        }
        return true;
    };
    const fs::path dir(cfg.output);
    if (!write(dir / (cfg.experiment + ".csv"), csv) ||
        !write(dir / "manifest.json", manifest.dump(2) + "\n")) {
        return kIoFailure;
    }
    if (!opts.quiet) {
        for (const auto &w : result.warnings) {
            log << "warning: " << w << '\n';
        }
        log << cfg.experiment << ": " << result.table.rows.size() << " rows -> "
            << (dir / (cfg.experiment + ".csv")).string() << " (" << format_number(wall)
            << " s)\n";
    }
    return kOk;
}

/// Loads a JSON config file; diagnostics on parse or type errors.
inline std::optional<ExperimentConfig> load_config(const std::string &path,
                                                   std::vector<Diagnostic> &diags, bool &io_error) {
    io_error = false;
    std::ifstream in(path);
    if (!in) {
        io_error = true;
        diags.push_back({"", "cannot read config file " + path});
        return std::nullopt;
    }
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const Json::parse_error &e) {
        diags.push_back({"", std::string("config is not valid JSON: ") + e.what()});
        return std::nullopt;
    }
    auto cfg = parse_config(doc, diags);
    if (!diags.empty()) {
        return std::nullopt;
    }
    return cfg;
}

} // namespace collthermo::cli
