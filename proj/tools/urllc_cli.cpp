/*
 * SPDX-FileCopyrightText: Copyright (c) 2026 The urllc-alloc Authors. All rights reserved.
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line front end: solve-symmetric, train, sweep, convergence-study,
// evaluate. Every command writes CSV outputs plus manifest.json into
// --out-dir. Exit codes: 0 success / converged, 2 unconverged or QoS
// failure, 1 usage or configuration error.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "urllc/checkpoint.hpp"
#include "urllc/config.hpp"
#include "urllc/evaluator.hpp"
#include "urllc/experiments.hpp"
#include "urllc/symmetric.hpp"
#include "urllc/trainer.hpp"
#include "urllc/version.hpp"

namespace fs = std::filesystem;
using namespace urllc;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kUnconverged = 2;

struct CommonOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    std::optional<std::size_t> samples;
    std::string checkpoint;
};

class Run {
public:
    Run(std::string command, const CommonOptions& opt) : command_(std::move(command)), opt_(opt) {
        start_ = std::chrono::steady_clock::now();
        started_at_ = utc_now();
        config_ = opt.config_path.empty() ? RunConfig{} : load_config_file(opt.config_path);
        if (opt.seed) config_.seed = *opt.seed;
        if (opt.samples) config_.eval_samples = *opt.samples;
        config_.validate();
        fs::create_directories(opt.out_dir);
    }

    const RunConfig& config() const { return config_; }

    std::ofstream open(const std::string& name) {
        const fs::path p = fs::path(opt_.out_dir) / name;
        std::ofstream os(p);
        if (!os) throw invalid_input("cannot write '" + p.string() + "'");
        outputs_.push_back(p.string());
        return os;
    }

    std::string path(const std::string& name) {
        const fs::path p = fs::path(opt_.out_dir) / name;
        outputs_.push_back(p.string());
        return p.string();
    }

    void note(const std::string& key, nlohmann::json value) { extra_[key] = std::move(value); }

    int finish(int code) {
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        nlohmann::json m = {{"command", command_},
                            {"tool_version", kVersion},
                            {"config_path", opt_.config_path},
                            {"checkpoint", opt_.checkpoint},
                            {"seed", config_.seed},
                            {"config", to_json(config_)},
                            {"outputs", outputs_},
                            {"started_at_utc", started_at_},
                            {"wall_clock_s", secs},
                            {"exit_code", code},
                            {"results", extra_}};
        std::ofstream os(fs::path(opt_.out_dir) / "manifest.json");
        os << m.dump(2) << '\n';
        return code;
    }

private:
    static std::string utc_now() {
        const std::time_t t = std::time(nullptr);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
        return buf;
    }

    std::string command_;
    CommonOptions opt_;
    RunConfig config_;
    std::vector<std::string> outputs_;
    nlohmann::json extra_ = nlohmann::json::object();
    std::chrono::steady_clock::time_point start_;
    std::string started_at_;
};

void log(const std::string& msg) { std::cerr << msg << '\n'; }

nlohmann::json report_json(const EvalReport& r) {
    return {{"policy", r.policy},   {"samples", r.samples},         {"xi", r.xi},
            {"xi_max", r.xi_max},   {"total_bandwidth_hz", r.total_bandwidth_hz},
            {"pass", r.all_pass()}, {"violation_draws", r.violation_draws}};
}

int cmd_solve_symmetric(const CommonOptions& opt) {
    Run run("solve-symmetric", opt);
    const RunConfig& c = run.config();
    const ScenarioConfig cfg = drop_scenario(c, c.num_users);
    if (!is_symmetric(cfg)) {
        log("solve-symmetric: the scenario is not symmetric (all users must share distance and arrival rate)");
        return run.finish(kUsage);
    }
    const auto qos = make_qos(cfg);
    Rng rng(stream_seed(c.seed, streams::solver, static_cast<std::uint64_t>(cfg.num_users())));
    SymmetricSolution sol;
    try {
        sol = solve_bandwidth(cfg, qos.front(), rng, c.solver);
    } catch (const convergence_error& e) {
        log(std::string("solve-symmetric: ") + e.what());
        auto os = run.open("trace.csv");
        os << "t,W\n";
        for (std::size_t i = 0; i < e.trace().size(); ++i) os << i << ',' << e.trace()[i] << '\n';
        return run.finish(kUnconverged);
    }
    {
        auto os = run.open("trace.csv");
        write_bandwidth_trace_csv(os, sol.search.trace);
    }
    Rng ev(stream_seed(c.seed, streams::evaluate, static_cast<std::uint64_t>(cfg.num_users())));
    const EvalReport rep =
        evaluate(symmetric_optimal_handle(cfg, qos.front(), sol.policy.bandwidth_hz), cfg, qos, c.eval_samples, ev,
                 c.eval_tolerance);
    {
        auto os = run.open("eval_report.csv");
        write_eval_report_csv(os, rep);
    }
    {
        auto os = run.open("solution.csv");
        os.precision(12);
        os << "K,W_star_hz,total_bandwidth_hz,iterations,initial_bandwidth_hz,xi,xi_max,violation_draws,qos_pass\n";
        os << cfg.num_users() << ',' << sol.policy.bandwidth_hz << ',' << total_bandwidth(sol.policy) << ','
           << sol.search.iterations << ',' << sol.initial_bandwidth_hz << ',' << rep.xi << ',' << rep.xi_max << ','
           << rep.violation_draws << ',' << (rep.all_pass() ? 1 : 0) << '\n';
    }
    std::cout.precision(10);
    std::cout << "W* = " << sol.policy.bandwidth_hz << " Hz per user, total " << total_bandwidth(sol.policy)
              << " Hz, " << sol.search.iterations << " iterations, xi = " << rep.xi << '\n';
    run.note("bandwidth_per_user_hz", sol.policy.bandwidth_hz);
    run.note("total_bandwidth_hz", total_bandwidth(sol.policy));
    run.note("iterations", sol.search.iterations);
    run.note("evaluation", report_json(rep));
    return run.finish(rep.all_pass() ? kOk : kUnconverged);
}

int cmd_train(const CommonOptions& opt) {
    Run run("train", opt);
    const RunConfig& c = run.config();
    const ScenarioConfig cfg = drop_scenario(c, c.num_users);
    const TrainingProblem prob = make_training_problem(cfg);
    std::optional<TrainState> init;
    if (!opt.checkpoint.empty()) {
        init = load_checkpoint(opt.checkpoint);
        if (c.warm_start_schedule == "restart") init->t = 0;
        if (init->bandwidth.size() != static_cast<std::size_t>(cfg.num_users())) {
            log("train: checkpoint has " + std::to_string(init->bandwidth.size()) + " users, scenario has " +
                std::to_string(cfg.num_users()));
            return run.finish(kUsage);
        }
    }
    Rng rng(stream_seed(c.seed, streams::train, static_cast<std::uint64_t>(cfg.num_users())));
    TrainResult res;
    try {
        res = train(prob, c.train, rng, init);
    } catch (const divergence_error& e) {
        log(std::string("train: ") + e.what());
        auto os = run.open("history.csv");
        write_history_csv(os, e.history());
        run.note("diverged", true);
        return run.finish(kUnconverged);
    }
    {
        auto os = run.open("history.csv");
        write_history_csv(os, res.history);
    }
    const std::string ckpt = run.path("checkpoint.mlp");
    save_checkpoint(ckpt, res.state);
    run.path("checkpoint.mlp.state.json");
    Rng ev(stream_seed(c.seed, streams::evaluate, static_cast<std::uint64_t>(cfg.num_users())));
    const EvalReport rep = evaluate(learned_handle(cfg, res.state.params, res.state.bandwidth), cfg, prob.qos,
                                    c.eval_samples, ev, c.eval_tolerance);
    {
        auto os = run.open("eval_report.csv");
        write_eval_report_csv(os, rep);
    }
    double sum_w = 0.0;
    for (double w : res.state.bandwidth) sum_w += w;
    std::cout.precision(10);
    std::cout << (res.converged ? "converged" : "not converged") << " after " << res.frames << " frames; total "
              << sum_w << " Hz; xi = " << rep.xi << '\n';
    run.note("converged", res.converged);
    run.note("frames", res.frames);
    run.note("total_bandwidth_hz", sum_w);
    run.note("evaluation", report_json(rep));
    return run.finish(res.converged ? kOk : kUnconverged);
}

int cmd_sweep(const CommonOptions& opt) {
    Run run("sweep", opt);
    const auto rows = run_sweep(run.config(), log);
    {
        auto os = run.open("sweep.csv");
        write_sweep_csv(os, rows);
    }
    bool ok = true;
    for (const auto& r : rows) ok = ok && r.converged;
    run.note("rows", rows.size());
    return run.finish(ok ? kOk : kUnconverged);
}

int cmd_convergence_study(const CommonOptions& opt) {
    Run run("convergence-study", opt);
    const RunConfig& c = run.config();
    if (c.scenario_type == "symmetric") {
        log("convergence-study: needs an asymmetric (road) scenario");
        return run.finish(kUsage);
    }
    const auto rows = run_convergence_study(c, log);
    const auto summary = summarize_study(rows);
    {
        auto os = run.open("study.csv");
        write_study_csv(os, rows);
    }
    {
        auto os = run.open("study_summary.csv");
        write_study_summary_csv(os, summary);
    }
    bool ok = true;
    for (const auto& r : rows) ok = ok && r.converged;
    for (const auto& s : summary)
        std::cout << (s.pretrained ? "pre-trained" : "cold       ") << ": median " << s.median << ", 99.9% "
                  << s.p99_9 << ", 99.99% " << s.p99_99 << " frames (" << s.converged << "/" << s.trials
                  << " converged)\n";
    run.note("median_frames_cold", summary[0].median);
    run.note("median_frames_pretrained", summary[1].median);
    return run.finish(ok ? kOk : kUnconverged);
}

int cmd_evaluate(const CommonOptions& opt) {
    Run run("evaluate", opt);
    const RunConfig& c = run.config();
    if (opt.checkpoint.empty()) {
        log("evaluate: --checkpoint is required");
        return run.finish(kUsage);
    }
    const ScenarioConfig cfg = drop_scenario(c, c.num_users);
    const TrainState st = load_checkpoint(opt.checkpoint);
    if (st.bandwidth.size() != static_cast<std::size_t>(cfg.num_users())) {
        log("evaluate: checkpoint does not match the scenario's user count");
        return run.finish(kUsage);
    }
    Rng ev(stream_seed(c.seed, streams::evaluate, static_cast<std::uint64_t>(cfg.num_users())));
    const EvalReport rep =
        evaluate(learned_handle(cfg, st.params, st.bandwidth), cfg, make_qos(cfg), c.eval_samples, ev, c.eval_tolerance);
    {
        auto os = run.open("eval_report.csv");
        write_eval_report_csv(os, rep);
    }
    std::cout << "xi = " << rep.xi << ", worst user " << rep.xi_max << ", " << (rep.all_pass() ? "pass" : "FAIL")
              << '\n';
    run.note("evaluation", report_json(rep));
    return run.finish(rep.all_pass() ? kOk : kUnconverged);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Joint power and bandwidth allocation for low-latency, high-reliability downlinks"};
    app.require_subcommand(1);
    CommonOptions opt;
    auto add_common = [&](CLI::App* sub, bool checkpoint) {
        sub->add_option("--config", opt.config_path, "JSON configuration file")->check(CLI::ExistingFile);
        sub->add_option("--seed", opt.seed, "master seed (overrides the config)");
        sub->add_option("--out-dir", opt.out_dir, "directory for CSV outputs and manifest.json");
        sub->add_option("--samples", opt.samples, "Monte-Carlo draws for QoS checks (overrides the config)");
        if (checkpoint) sub->add_option("--checkpoint", opt.checkpoint, "network checkpoint (sidecar alongside)");
    };
    auto* solve = app.add_subcommand("solve-symmetric", "closed-form power + bandwidth search (symmetric users)");
    auto* trn = app.add_subcommand("train", "primal-dual training of the power network and bandwidths");
    auto* swp = app.add_subcommand("sweep", "total bandwidth versus number of users for several policies");
    auto* study = app.add_subcommand("convergence-study", "frames to converge with and without pre-training");
    auto* evl = app.add_subcommand("evaluate", "Monte-Carlo QoS check of a trained checkpoint");
    add_common(solve, false);
    add_common(trn, true);
    add_common(swp, false);
    add_common(study, false);
    add_common(evl, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        const auto subs = app.get_subcommands();
        std::cerr << '\n' << (subs.empty() ? app.help() : subs.front()->help());
        return kUsage;
    }

    try {
        if (*solve) return cmd_solve_symmetric(opt);
        if (*trn) return cmd_train(opt);
        if (*swp) return cmd_sweep(opt);
        if (*study) return cmd_convergence_study(opt);
        if (*evl) return cmd_evaluate(opt);
    } catch (const invalid_input& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUnconverged;
    }
    return kUsage;
}
