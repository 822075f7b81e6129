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

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "collthermo/experiment.hpp"

namespace ct = collthermo::cli;

int main(int argc, char **argv) {
    CLI::App app{"Layered collision-model thermometry experiments"};
    std::string config_path;
    std::string experiment;
    std::string out_dir;
    std::size_t threads = 0;
    bool quiet = false;
    bool validate_only = false;
    app.add_option("--config", config_path, "JSON experiment config")->required();
    app.add_option("--experiment", experiment, "override the config's experiment");
    app.add_option("--out", out_dir, "override the output directory");
    app.add_option("--threads", threads, "worker threads (0: available parallelism)");
    app.add_flag("--quiet", quiet, "only print errors");
    app.add_flag("--validate-only", validate_only, "check the config and exit");
    app.set_version_flag("--version", ct::kVersion);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : ct::kInvalidConfig;
    }

    std::vector<ct::Diagnostic> diags;
    bool io_error = false;
    auto cfg = ct::load_config(config_path, diags, io_error);
    if (!cfg) {
        for (const auto &d : diags) {
            std::cerr << "error: " << d.message << '\n';
        }
        return io_error ? ct::kIoFailure : ct::kInvalidConfig;
    }
    if (!experiment.empty()) {
        cfg->experiment = experiment;
    }
    if (!out_dir.empty()) {
        cfg->output = out_dir;
    }
    if (threads > 0) {
        cfg->threads = threads;
    }
    if (validate_only) {
        const auto problems = ct::validate(*cfg);
        for (const auto &d : problems) {
            std::cerr << "error: " << d.message << '\n';
        }
        return problems.empty() ? ct::kOk : ct::kInvalidConfig;
    }
    return ct::run(*cfg, {quiet, &std::cerr});
}
