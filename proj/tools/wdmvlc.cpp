// Command-line front end: scenario runs, calibration, result verification, parameter inspection.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "wdmvlc/calibration.hpp"
#include "wdmvlc/error.hpp"
#include "wdmvlc/scenario.hpp"

using namespace wdmvlc;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << text;
}

struct RunArgs {
    std::string config;
    std::string out;
    std::string timing;
    std::string scenario;
    std::string baseline;
    std::optional<std::uint64_t> seed;
    std::optional<int> starts;
    std::optional<int> threads;
};

int cmd_run(const RunArgs& a) {
    ScenarioConfig cfg = load_scenario(a.config);
    if (a.seed) cfg.seed = *a.seed;
    if (!a.scenario.empty()) cfg.kind = parse_scenario_kind(a.scenario);
    if (!a.baseline.empty()) {
        if (a.baseline == "on") cfg.baseline = true;
        else if (a.baseline == "off") cfg.baseline = false;
        else throw ConfigError("--baseline expects on or off");
    }
    if (a.starts) cfg.starts = *a.starts;
    if (a.threads) cfg.threads = *a.threads;
    cfg.validate();
    const SystemModel model = build_model(cfg);
    const ScenarioResult res = run_scenario(model, cfg);
    if (a.out.empty()) std::cout << format_results(res);
    else write_results(res, a.out);
    if (!a.timing.empty()) write_text(a.timing, format_timing(res));
    std::cerr << fmt::format("{}: {} rows, {} feasible, baseline {}\n", to_string(res.kind), res.rows.size(),
                             res.feasible_rows(), res.baseline_status);
    if (!res.rows.empty() && res.feasible_rows() == 0) return kExitInfeasible;
    return 0;
}

int cmd_verify(const std::string& config, const std::string& results) {
    const ScenarioConfig cfg = load_scenario(config);
    cfg.validate();
    const SystemModel model = build_model(cfg);
    const VerifyReport rep = verify_results(model, cfg, results);
    for (const auto& m : rep.messages) std::cout << m << "\n";
    std::cout << fmt::format("{} rows, {} feasible, {} failed verification\n", rep.rows, rep.feasible, rep.failures);
    return rep.failures == 0 ? 0 : kExitFailure;
}

std::map<std::string, LedParams> load_reference(const std::filesystem::path& dir) {
    std::map<std::string, LedParams> out;
    for (const char* stem : {"red", "green", "blue", "yellow"}) {
        const LedParams p = load_led_params(dir / (std::string(stem) + ".params"));
        out[p.channel] = p;
    }
    return out;
}

int cmd_params(const std::string& dir, const std::string& channel) {
    const auto set = load_reference(dir);
    for (const auto& [id, p] : set) {
        if (!channel.empty() && channel != id) continue;
        std::cout << "# " << channel_file_stem(id) << "\n" << format_led_params(p);
        for (double v : {p.v_th, 0.5 * (p.v_th + p.v_max), p.v_max}) {
            const auto op = solve_dc(p, v);
            const auto el = small_signal(p, op);
            std::cout << fmt::format("#   V = {:.4f} V: I = {:.6e} A, a5 = {:.6e}, |H(10 MHz)/H(0)| = {:.6f}\n", v,
                                     op.i_dc, el.a5,
                                     std::abs(transfer_function(el, 10e6)) / std::abs(transfer_function(el, 0.0)));
        }
        std::cout << "\n";
    }
    return 0;
}

struct CalibrateArgs {
    std::string el;
    std::string sweep;
    std::string params_dir = std::string(WDMVLC_DATA_DIR) + "/reference";
    std::string out;
    std::string el_mask;
    std::string sweep_mask;
};

int cmd_calibrate(const CalibrateArgs& a) {
    auto set = load_reference(a.params_dir);
    const auto el = read_el_csv(a.el);
    std::map<std::string, SweepMeasurement> sweep;
    if (!a.sweep.empty()) sweep = read_sweep_csv(a.sweep);
    const auto el_mask = a.el_mask.empty() ? default_el_mask() : split_list(a.el_mask);
    const auto sweep_mask = a.sweep_mask.empty() ? default_sweep_mask() : split_list(a.sweep_mask);
    ReceiverParams rx;
    rx.set_flat_responsivity(0.5);
    bool ok = true;
    auto report = [&](const std::string& what, const std::string& id, const FitResult& r) {
        std::cout << fmt::format("{} {}: {} after {} iterations, rms {:.6e}, condition {:.3e}\n", id, what,
                                 to_string(r.status), r.iterations, r.rms, r.condition);
        for (std::size_t i = 0; i < r.free.size(); ++i)
            std::cout << fmt::format("    {} = {:.17g}\n", r.free[i], r.values[i]);
        for (const auto& b : r.at_bound) std::cout << "    warning: " << b << " ended on a bound\n";
        for (const auto& w : r.warnings) std::cout << "    warning: " << w << "\n";
        ok = ok && r.status == SolveStatus::converged;
    };
    for (auto& [id, params] : set) {
        auto it = el.find(id);
        if (it == el.end()) continue;
        const FitResult r = fit_electroluminescence(it->second, params, el_mask);
        report("electroluminescence fit", id, r);
        params = r.params;
        auto sw = sweep.find(id);
        if (sw != sweep.end()) {
            const FitResult s = fit_power_loss(sw->second, params, rx, sweep_mask);
            report("power-loss fit", id, s);
            params = s.params;
        }
    }
    if (!a.out.empty()) {
        export_reference_set(set, a.out);
        std::cout << "wrote parameter set to " << a.out << "\n";
    }
    return ok ? 0 : kExitFailure;
}

struct SynthArgs {
    std::string params_dir = std::string(WDMVLC_DATA_DIR) + "/reference";
    std::string el_out;
    std::string sweep_out;
    int rows = 101;
    int biases = 8;
    int freqs = 16;
    double el_noise = 0.02;
    double sweep_noise = 0.005;
    std::uint64_t seed = 1;
};

int cmd_synthesize(const SynthArgs& a) {
    const auto set = load_reference(a.params_dir);
    ReceiverParams rx;
    rx.set_flat_responsivity(0.5);
    std::vector<ElMeasurement> el;
    std::vector<SweepMeasurement> sw;
    std::uint64_t k = 0;
    for (const char* id : {"R", "G", "B", "Y"}) {
        const LedParams& p = set.at(id);
        el.push_back(synthetic_el(p, a.rows, a.el_noise, a.seed + k));
        sw.push_back(synthetic_sweep(p, rx, a.biases, a.freqs, a.sweep_noise, a.seed + 100 + k));
        ++k;
    }
    if (!a.el_out.empty()) write_text(a.el_out, format_el_csv(el));
    if (!a.sweep_out.empty()) write_text(a.sweep_out, format_sweep_csv(sw));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Energy-efficiency optimizer for RGBY wavelength-division VLC links"};
    app.require_subcommand(1);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Run a scenario and write the result CSV");
    run_cmd->add_option("config", run.config, "Scenario config file")->required();
    run_cmd->add_option("--out", run.out, "Result CSV path (stdout if omitted)");
    run_cmd->add_option("--timing", run.timing, "Per-row wall-time CSV path");
    run_cmd->add_option("--scenario", run.scenario, "Override scenario kind")
        ->check(CLI::IsMember({"grid", "frequency-sweep", "illuminance-sweep", "cct-sweep"}));
    run_cmd->add_option("--baseline", run.baseline, "Override baseline toggle")->check(CLI::IsMember({"on", "off"}));
    run_cmd->add_option("--seed", run.seed, "Override multi-start seed");
    run_cmd->add_option("--starts", run.starts, "Override multi-start count")->check(CLI::PositiveNumber);
    run_cmd->add_option("--threads", run.threads, "Worker threads (0 = automatic)")->check(CLI::NonNegativeNumber);

    std::string verify_config, verify_results_path;
    auto* verify_cmd = app.add_subcommand("verify", "Re-check every feasible row of a result CSV");
    verify_cmd->add_option("config", verify_config, "Scenario config the results came from")->required();
    verify_cmd->add_option("results", verify_results_path, "Result CSV")->required();

    std::string params_dir = std::string(WDMVLC_DATA_DIR) + "/reference", params_channel;
    auto* params_cmd = app.add_subcommand("params", "Print an LED parameter set with derived quantities");
    params_cmd->add_option("--dir", params_dir, "Directory with {red,green,blue,yellow}.params");
    params_cmd->add_option("--channel", params_channel, "Only this channel")->check(CLI::IsMember({"R", "G", "B", "Y"}));

    CalibrateArgs cal;
    auto* cal_cmd = app.add_subcommand("calibrate", "Fit LED parameters to measured curves");
    cal_cmd->add_option("--el", cal.el, "Electroluminescence CSV")->required();
    cal_cmd->add_option("--sweep", cal.sweep, "Power-loss sweep CSV");
    cal_cmd->add_option("--params-dir", cal.params_dir, "Initial parameter set");
    cal_cmd->add_option("--out", cal.out, "Directory for the fitted parameter set");
    cal_cmd->add_option("--el-mask", cal.el_mask, "Comma-separated free parameters of the EL fit");
    cal_cmd->add_option("--sweep-mask", cal.sweep_mask, "Comma-separated free parameters of the sweep fit");

    SynthArgs syn;
    auto* syn_cmd = app.add_subcommand("synthesize", "Generate synthetic calibration data from a parameter set");
    syn_cmd->add_option("--params-dir", syn.params_dir, "Parameter set to sample");
    syn_cmd->add_option("--el-out", syn.el_out, "Electroluminescence CSV output");
    syn_cmd->add_option("--sweep-out", syn.sweep_out, "Power-loss sweep CSV output");
    syn_cmd->add_option("--rows", syn.rows, "EL rows per channel")->check(CLI::Range(8, 100000));
    syn_cmd->add_option("--biases", syn.biases, "Sweep bias points")->check(CLI::Range(1, 1000));
    syn_cmd->add_option("--freqs", syn.freqs, "Sweep frequencies")->check(CLI::Range(4, 1000));
    syn_cmd->add_option("--el-noise", syn.el_noise, "Relative EL noise (std)")->check(CLI::NonNegativeNumber);
    syn_cmd->add_option("--sweep-noise", syn.sweep_noise, "Relative |H| noise (std)")->check(CLI::NonNegativeNumber);
    syn_cmd->add_option("--seed", syn.seed, "Noise seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (*run_cmd) return cmd_run(run);
        if (*verify_cmd) return cmd_verify(verify_config, verify_results_path);
        if (*params_cmd) return cmd_params(params_dir, params_channel);
        if (*cal_cmd) return cmd_calibrate(cal);
        if (*syn_cmd) return cmd_synthesize(syn);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return 0;
}
