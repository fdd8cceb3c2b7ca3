// Copyright 2026 The QCBM Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// qcbm command-line runner.
//
//   qcbm run <config.json> [--set key.path=value]... [--output DIR]
//   qcbm compare <a/report.json> <b/report.json> [--tolerance T]
//   qcbm synth-data <params.json> <out.csv>
//   qcbm report <run-dir>
//
// QCBM_OUTPUT_ROOT, when set, prefixes relative output directories.
// Exit codes: 0 success, 1 invalid input, 2 training aborted, 3 regression.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qcbm/experiment.hpp"

namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kInvalid = 1, kAborted = 2, kRegressed = 3 };

qcbm::json read_json(const std::string &path) {
    if (!fs::exists(path)) {
        throw qcbm::ConfigError(path + ": no such file");
    }
    auto j = qcbm::json::parse(qcbm::read_text(path), nullptr, false);
    if (j.is_discarded()) {
        throw qcbm::ConfigError(path + ": not valid JSON");
    }
    return j;
}

fs::path output_dir(const std::string &configured) {
    fs::path dir(configured);
    const char *root = std::getenv("QCBM_OUTPUT_ROOT");
    if (root && *root && dir.is_relative()) {
        dir = fs::path(root) / dir;
    }
    return dir;
}

int cmd_run(const std::string &config_path, const std::vector<std::string> &sets, const std::string &out) {
    auto doc = read_json(config_path);
    for (const auto &s : sets) {
        qcbm::apply_override(doc, s);
    }
    auto config = qcbm::config_from_json(doc);
    if (!out.empty()) {
        config.output_dir = out;
    }
    config.output_dir = output_dir(config.output_dir).string();
    qcbm::validate_config(config);
    std::cerr << "running " << qcbm::to_string(config.experiment) << " (seed " << config.seed << ")\n";
    const auto bundle = qcbm::run_experiment(config);
    qcbm::write_bundle(bundle, config.output_dir);
    std::cout << bundle.report.at("metrics").dump(2) << "\n";
    std::cerr << "wrote " << config.output_dir << "\n";
    return kOk;
}

int cmd_compare(const std::string &a, const std::string &b, double tolerance) {
    const auto diff = qcbm::compare_reports(read_json(a), read_json(b), tolerance);
    if (diff.deltas.empty()) {
        std::cout << "no differences\n";
        return kOk;
    }
    for (const auto &d : diff.deltas) {
        const bool bad = std::abs(d.delta()) > tolerance;
        std::printf("%s %-48s %.6g -> %.6g (%+.3g)\n", bad ? "!" : " ", d.path.c_str(), d.a, d.b, d.delta());
    }
    if (diff.regressed()) {
        std::printf("%zu metric(s) changed by more than %g\n", diff.regressions.size(), tolerance);
        return kRegressed;
    }
    return kOk;
}

int cmd_synth(const std::string &params, const std::string &out) {
    const auto request = qcbm::synth_request_from_json(read_json(params));
    const auto events = qcbm::synthesize(request);
    if (fs::path(out).has_parent_path()) {
        fs::create_directories(fs::path(out).parent_path());
    }
    qcbm::write_csv(out, events);
    std::cerr << "wrote " << events.size() << " events to " << out << "\n";
    return kOk;
}

void print_metrics(const qcbm::json &j, const std::string &indent) {
    for (const auto &[k, v] : j.items()) {
        if (v.is_object()) {
            std::cout << indent << k << ":\n";
            print_metrics(v, indent + "  ");
        } else if (v.is_number_float()) {
            std::printf("%s%s: %.5f\n", indent.c_str(), k.c_str(), v.get<double>());
        } else {
            std::cout << indent << k << ": " << v.dump() << "\n";
        }
    }
}

int cmd_report(const std::string &dir) {
    const auto report = read_json((fs::path(dir) / "report.json").string());
    std::cout << "experiment: " << report.value("experiment", "?") << "\n"
              << "version:    " << report.value("version", "?") << "\n"
              << "seed:       " << report.value("seed", 0) << "\n";
    const auto meta = fs::path(dir) / "metadata.json";
    if (fs::exists(meta)) {
        const auto m = read_json(meta.string());
        std::cout << "finished:   " << m.value("finished_at", "?") << " (" << m.value("seconds", 0.0) << " s)\n";
    }
    std::cout << "metrics:\n";
    print_metrics(report.value("metrics", qcbm::json::object()), "  ");
    return kOk;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Quantum circuit Born machine experiments"};
    app.set_version_flag("--version", std::string(qcbm::kVersion));
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> sets;
    std::string out;
    auto *run = app.add_subcommand("run", "Run an experiment from a JSON config");
    run->add_option("config", config_path, "Config file")->required();
    run->add_option("--set", sets, "Override a config field, e.g. train.max_epochs=10");
    run->add_option("--output", out, "Output directory");

    std::string report_a;
    std::string report_b;
    double tolerance = 0.05;
    auto *compare = app.add_subcommand("compare", "Compare the metrics of two reports");
    compare->add_option("a", report_a, "Baseline report.json")->required();
    compare->add_option("b", report_b, "Candidate report.json")->required();
    compare->add_option("--tolerance", tolerance, "Largest absolute change that is not a regression")
        ->capture_default_str();

    std::string params;
    std::string csv_out;
    auto *synth = app.add_subcommand("synth-data", "Write synthetic events to CSV");
    synth->add_option("params", params, "Generator parameters (JSON)")->required();
    synth->add_option("out", csv_out, "Output CSV")->required();

    std::string run_dir;
    auto *report = app.add_subcommand("report", "Print the report of a run directory");
    report->add_option("dir", run_dir, "Run directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInvalid;
    }

    try {
        if (*run) {
            return cmd_run(config_path, sets, out);
        }
        if (*compare) {
            return cmd_compare(report_a, report_b, tolerance);
        }
        if (*synth) {
            return cmd_synth(params, csv_out);
        }
        return cmd_report(run_dir);
    } catch (const qcbm::TrainingAborted &e) {
        std::cerr << "training aborted: " << e.what() << "\n";
        return kAborted;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvalid;
    }
}
