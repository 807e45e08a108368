// prefgrid: run the preference-based microgrid exchange from the command line.
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "prefgrid/reporting.hpp"

namespace {

using namespace prefgrid;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitUnconverged = 2;
constexpr int kExitInfeasible = 3;

enum class LogLevel { Quiet, Info, Debug };

LogLevel log_level() {
    const char* env = std::getenv("PREFGRID_LOG");
    if (!env) return LogLevel::Info;
    const std::string v = env;
    if (v == "quiet" || v == "0" || v == "off") return LogLevel::Quiet;
    if (v == "debug" || v == "2") return LogLevel::Debug;
    return LogLevel::Info;
}

void install_progress(AdmmParams& params) {
    const LogLevel level = log_level();
    if (level == LogLevel::Quiet) return;
    const int every = level == LogLevel::Debug ? 1 : 50;
    params.on_iteration = [every](const IterationRecord& r) {
        if (r.iteration % every == 0 || r.iteration == 1)
            std::fprintf(stderr, "admm it=%d r=%.3e s=%.3e obj=%.6f rho=%g\n", r.iteration, r.primal, r.dual, r.objective,
                         r.rho);
    };
}

int exit_code(const SolutionTrace& tr) {
    if (tr.ok()) return kExitOk;
    if (tr.status == "infeasible") return kExitInfeasible;
    return kExitUnconverged;
}

std::string clusters_text(const std::vector<std::vector<int>>& clusters) {
    std::string out;
    for (const auto& c : clusters) {
        if (!out.empty()) out += " ";
        out += "{";
        for (std::size_t i = 0; i < c.size(); ++i) out += (i ? "," : "") + std::to_string(c[i]);
        out += "}";
    }
    return out;
}

void print_summary(const SolutionTrace& tr) {
    std::printf("status       %s\n", tr.status.c_str());
    if (!tr.message.empty()) std::printf("message      %s\n", tr.message.c_str());
    std::printf("iterations   %d\n", tr.iterations);
    if (!tr.ok()) return;
    std::printf("objective    %.6f\n", tr.total());
    std::printf("  dso        %.6f\n  generation %.6f\n  losses     %.6f\n  preference %.6f\n", tr.objective.dso,
                tr.objective.generation, tr.objective.losses, tr.objective.preference);
    std::printf("traded       %.6f MWh\n", tr.traded_energy());
    std::printf("clusters     %s\n", clusters_text(detect_clusters(tr)).c_str());
    std::printf("audit        balance %.2e consensus %.2e split %.2e storage %.2e cone %.2e exactness %.2e%s\n",
                tr.audit.balance, tr.audit.consensus, tr.audit.split, tr.audit.storage, tr.audit.cone,
                tr.audit.exactness_gap, tr.audit.exact() ? "" : " (relaxation not tight)");
    for (const auto& f : tr.audit.failures) std::printf("  audit failure: %s\n", f.c_str());
}

void write_outputs(const SolutionTrace& tr, const std::string& dir) {
    if (dir.empty()) return;
    std::filesystem::create_directories(dir);
    export_flows(tr, ExportFormat::Csv, dir + "/flows.csv");
    export_flows(tr, ExportFormat::Structured, dir + "/trace.json");
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::logic_error&) {
            throw ParseError("kappas: '" + item + "' is not a number");
        }
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Preference-based energy exchange among networked microgrids"};
    app.require_subcommand(1);

    int case_id = 0;
    std::string mode_text = "grid";
    std::string kappa_text = "60";
    std::string method_text = "admm";
    std::string out_dir;
    std::string config;
    RunOptions opts;
    auto add_run_options = [&](CLI::App* cmd) {
        cmd->add_option("--method", method_text, "admm or central")->capture_default_str();
        cmd->add_option("--rho", opts.admm.rho, "ADMM penalty")->capture_default_str();
        cmd->add_option("--eps", opts.admm.eps_primal, "ADMM primal and dual tolerance")->capture_default_str();
        cmd->add_option("--max-iter", opts.admm.max_iter, "ADMM iteration limit")->capture_default_str();
        cmd->add_flag("--adaptive-rho", opts.admm.adaptive_rho, "residual balancing of rho");
        cmd->add_option("--threads", opts.admm.threads, "local solve threads (0: all cores)")->capture_default_str();
        cmd->add_option("--seed", opts.profile_seed, "profile seed")->capture_default_str();
        cmd->add_option("--horizon", opts.horizon, "hours")->capture_default_str();
        cmd->add_option("--out", out_dir, "output directory");
    };

    auto* run = app.add_subcommand("run", "solve one case and export flows");
    run->add_option("--case", case_id, "preference case 0, 1 or 2")->check(CLI::Range(0, 2))->capture_default_str();
    run->add_option("--mode", mode_text, "grid or island")->capture_default_str();
    run->add_option("--kappa", kappa_text, "number or random:<seed>")->capture_default_str();
    run->add_option("--config", config, "scenario JSON instead of a built-in case");
    add_run_options(run);

    std::string trace_path;
    double eps = 1e-3;
    auto* clusters = app.add_subcommand("clusters", "report microgrid clusters of a saved trace");
    clusters->add_option("--trace", trace_path, "trace.json or flows.csv")->required();
    clusters->add_option("--eps", eps, "flow threshold, MW")->capture_default_str();

    std::string kappas_text = "20,60,100";
    std::string sweep_mode = "island";
    auto* sweep = app.add_subcommand("sweep", "traded energy across kappa values");
    sweep->add_option("--case", case_id, "preference case 0, 1 or 2")->check(CLI::Range(0, 2))->capture_default_str();
    sweep->add_option("--kappas", kappas_text, "comma separated")->capture_default_str();
    sweep->add_option("--mode", sweep_mode, "grid or island")->capture_default_str();
    add_run_options(sweep);

    CLI11_PARSE(app, argc, argv);
    opts.admm.eps_dual = opts.admm.eps_primal;
    opts.admm.solver = opts.solver;
    install_progress(opts.admm);

    try {
        if (*run) {
            const Method method = parse_method(method_text);
            SolutionTrace tr;
            if (!config.empty()) {
                auto scenario = load_scenario_file(config);
                TraceMeta meta;
                meta.kappa = "config";
                tr = run_scenario(scenario, method, opts, meta);
            } else {
                tr = run_case(case_id, parse_mode(mode_text), KappaSpec::parse(kappa_text), method, opts);
            }
            print_summary(tr);
            write_outputs(tr, out_dir);
            return exit_code(tr);
        }
        if (*clusters) {
            const auto tr = import_trace(trace_path);
            std::printf("%s\n", clusters_text(detect_clusters(tr, eps)).c_str());
            return kExitOk;
        }
        if (*sweep) {
            const Method method = parse_method(method_text);
            const Mode mode = parse_mode(sweep_mode);
            int code = kExitOk;
            std::printf("kappa,traded_mwh,objective,status\n");
            for (double k : parse_list(kappas_text)) {
                auto tr = run_case(case_id, mode, KappaSpec::fixed(k), method, opts);
                std::printf("%g,%.9f,%.9f,%s\n", k, tr.traded_energy(), tr.total(), tr.status.c_str());
                std::fflush(stdout);
                if (!out_dir.empty()) {
                    std::ostringstream sub;
                    sub << out_dir << "/kappa_" << k;
                    write_outputs(tr, sub.str());
                }
                if (exit_code(tr) != kExitOk) code = std::max(code, exit_code(tr));
            }
            return code;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitError;
    }
    return kExitOk;
}
