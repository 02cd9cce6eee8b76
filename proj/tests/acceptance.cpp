// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any criterion fails.
// Usage: acceptance [output-dir]

#include <chrono>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "wdmvlc/calibration.hpp"
#include "wdmvlc/scenario.hpp"

using namespace wdmvlc;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
    bool pass = true;
    std::vector<std::string> notes;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            notes.push_back("failed: " + what);
        }
    }
    void note(const std::string& s) { notes.push_back(s); }
};

std::vector<Verdict> g_verdicts(11);
std::vector<std::string> g_info;

void report(int id, const std::string& title) {
    const auto& v = g_verdicts[static_cast<std::size_t>(id)];
    std::string detail;
    for (const auto& n : v.notes) detail += (detail.empty() ? "" : "; ") + n;
    std::cout << fmt::format("{} criterion {:2}: {} [{}]\n", v.pass ? "PASS" : "FAIL", id, title, detail);
}

// ---------------------------------------------------------------------------------------------------------------
// 1. Solver correctness

NlpProblem program(int n, int m, std::function<NlpValues(const VectorXd&)> f) {
    NlpProblem p;
    p.n = n;
    p.m = m;
    p.lower = VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
    p.upper = VectorXd::Constant(n, std::numeric_limits<double>::infinity());
    p.evaluate = std::move(f);
    return p;
}

void criterion_solver() {
    Verdict& v = g_verdicts[1];
    const SolverOptions opt{1e-8, 1e-8, 200, true};
    struct Case {
        std::string name;
        NlpProblem prob;
        VectorXd x0;
        VectorXd x_star;
        double tol;
    };
    std::vector<Case> cases;
    cases.push_back({"x^2 s.t. x>=1",
                     program(1, 1, [](const VectorXd& x) { return NlpValues{x(0) * x(0), VectorXd::Constant(1, 1.0 - x(0))}; }),
                     VectorXd::Constant(1, 3.0), VectorXd::Constant(1, 1.0), 1e-6});
    cases.push_back({"halfplane projection",
                     program(2, 1,
                             [](const VectorXd& x) {
                                 return NlpValues{std::pow(x(0) - 2.0, 2) + std::pow(x(1) - 1.0, 2),
                                                  VectorXd::Constant(1, x(0) + x(1) - 2.0)};
                             }),
                     VectorXd::Zero(2), (VectorXd(2) << 1.5, 0.5).finished(), 1e-6});
    cases.push_back({"Rosenbrock",
                     program(2, 0,
                             [](const VectorXd& x) {
                                 return NlpValues{100.0 * std::pow(x(1) - x(0) * x(0), 2) + std::pow(1.0 - x(0), 2),
                                                  VectorXd(0)};
                             }),
                     (VectorXd(2) << -1.2, 1.0).finished(), VectorXd::Ones(2), 1e-5});
    for (const auto& c : cases) {
        const auto t0 = Clock::now();
        const SolveOutcome out = sqp_solve(c.prob, c.x0, opt);
        const double dt = seconds_since(t0);
        const double err = (out.x - c.x_star).lpNorm<Eigen::Infinity>();
        v.require(out.status == SolveStatus::converged, c.name + " converged");
        v.require(err <= c.tol, fmt::format("{} |x - x*| = {:.2e} <= {:.0e}", c.name, err, c.tol));
        v.require(out.iterations <= 200, c.name + " within 200 iterations");
        v.require(out.status != SolveStatus::converged || verify_kkt(c.prob, out.x, 10.0 * opt.tolerance).passed,
                  c.name + " passes the independent KKT check");
        v.require(out.hessian_spd, c.name + " Hessian stayed SPD");
        v.require(dt < 1.0, fmt::format("{} runtime {:.3f} s < 1 s", c.name, dt));
        v.note(fmt::format("{}: {} it, err {:.1e}, {:.1f} ms", c.name, out.iterations, err, 1e3 * dt));
    }
    const SolveOutcome first = sqp_solve(cases[0].prob, cases[0].x0, opt);
    v.require(std::abs(first.mu(0) - 2.0) <= 1e-5, "multiplier of x>=1 equals 2");
}

// ---------------------------------------------------------------------------------------------------------------
// 2. Model self-consistency

void criterion_model(const SystemModel& m) {
    Verdict& v = g_verdicts[2];
    double worst_laplace = 0.0, worst_gauss = 0.0;
    bool monotone = true;
    for (const auto& p : m.leds) {
        const double vb = 0.5 * (p.v_th + p.v_max);
        const auto e = small_signal(p, solve_dc(p, vb));
        // Numerical Fourier-Laplace transform of h(t), Simpson over 60 slowest time constants.
        const double tmax = 60.0 * std::max(e.a2, e.a4 / e.a3);
        const int n = 400000;
        const double h = tmax / n;
        for (int k = 0; k < 20; ++k) {
            const double f = std::pow(10.0, 5.0 + 3.0 * k / 19.0);
            const std::complex<double> s(0.0, 2.0 * constants::pi * f);
            std::complex<double> acc = 0.0;
            for (int i = 0; i <= n; ++i) {
                const double t = i * h;
                const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
                acc += w * impulse_response(e, t) * std::exp(-s * t);
            }
            acc *= h / 3.0;
            const auto hf = transfer_function(e, f);
            worst_laplace = std::max(worst_laplace, std::abs(acc - hf) / std::abs(hf));
        }
        double prev = -1.0;
        for (int i = 0; i < 100; ++i) {
            const double i_dc = solve_dc(p, p.v_th + (p.v_max - p.v_th) * i / 99.0).i_dc;
            monotone = monotone && i_dc > prev;
            prev = i_dc;
        }
        const double half = 0.5 * p.delta_lambda;
        const Spectrum sp = spectrum(p, vb, {p.lambda0 - half, p.lambda0, p.lambda0 + half});
        worst_gauss = std::max({worst_gauss, std::abs(sp.values[1] - e.a5) / e.a5,
                                std::abs(sp.values[0] - e.a5 * std::exp(-1.0)) / e.a5,
                                std::abs(sp.values[2] - e.a5 * std::exp(-1.0)) / e.a5});
    }
    v.require(worst_laplace <= 1e-3, fmt::format("Laplace pair worst {:.2e} <= 1e-3", worst_laplace));
    v.require(monotone, "DC current strictly increasing on 100-point sweeps");
    v.require(worst_gauss <= 1e-15, fmt::format("Gaussian identities worst {:.1e}", worst_gauss));
    v.note(fmt::format("Laplace worst {:.2e} over 4 channels x 20 frequencies", worst_laplace));
    v.note(fmt::format("Gaussian peak/half-width deviation {:.1e}", worst_gauss));
}

// ---------------------------------------------------------------------------------------------------------------
// 3. Colorimetry

void criterion_colorimetry(const SystemModel& m) {
    Verdict& v = g_verdicts[3];
    const Spectrum flat{m.cie.wavelength, std::vector<double>(m.cie.wavelength.size(), 1.0)};
    const auto c = chromaticity(flat, m.cie);
    v.require(std::abs(c.x - 1.0 / 3.0) <= 1e-3 && std::abs(c.y - 1.0 / 3.0) <= 1e-3,
              fmt::format("equal-energy ({:.5f}, {:.5f})", c.x, c.y));
    v.require(cct({0.3320, 0.3}) == 5517.0 && cct_from_n(0.0) == 5517.0, "n = 0 gives 5517 K");
    std::array<double, 4> bias{};
    for (int k = 0; k < 4; ++k) bias[k] = 0.5 * (m.leds[k].v_th + m.leds[k].v_max);
    const Spectrum s = rgby_spectrum(m.leds, bias, m.cie.wavelength);
    const auto ref = chromaticity(s, m.cie);
    double worst = 0.0;
    for (double k : {0.5, 2.0, 10.0}) {
        const auto ck = chromaticity(s.scaled(k), m.cie);
        worst = std::max({worst, std::abs(ck.x - ref.x), std::abs(ck.y - ref.y)});
    }
    v.require(worst <= 1e-12, fmt::format("scale invariance {:.1e} <= 1e-12", worst));
    v.note(fmt::format("equal-energy ({:.5f}, {:.5f}), scale deviation {:.1e}", c.x, c.y, worst));
}

// ---------------------------------------------------------------------------------------------------------------
// 4. Calibration round trip

void criterion_calibration(const SystemModel& m) {
    Verdict& v = g_verdicts[4];
    ReceiverParams rx;
    rx.set_flat_responsivity(0.5);
    auto perturbed = [](const LedParams& truth, const std::vector<std::string>& mask, std::uint64_t seed) {
        LedParams p = truth;
        SplitMix64 rng(seed);
        for (const auto& name : mask)
            parameter_ref(p, name) *= 1.0 + (name.rfind("alpha", 0) == 0 ? 0.01 : 0.2) * (2.0 * rng.uniform() - 1.0);
        return p;
    };
    auto worst_of = [](const FitResult& r, const LedParams& truth) {
        double w = 0.0;
        for (std::size_t k = 0; k < r.free.size(); ++k)
            w = std::max(w, std::abs(r.values[k] / parameter_value(truth, r.free[k]) - 1.0));
        return w;
    };
    double el_clean = 0.0, el_noisy = 0.0, sw_clean = 0.0, sw_noisy = 0.0;
    int fits = 0, unconverged = 0, failures = 0;
    const auto t0 = Clock::now();
    for (const auto& truth : m.leds) {
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            auto run = [&](auto&& fit, double& worst) {
                try {
                    const FitResult r = fit();
                    ++fits;
                    unconverged += r.status != SolveStatus::converged;
                    worst = std::max(worst, worst_of(r, truth));
                } catch (const std::exception& e) {
                    ++failures;
                    worst = std::numeric_limits<double>::infinity();
                }
            };
            run([&] { return fit_electroluminescence(synthetic_el(truth, 101, 0.0, seed), perturbed(truth, default_el_mask(), 1000 + seed), default_el_mask()); }, el_clean);
            run([&] { return fit_electroluminescence(synthetic_el(truth, 101, 0.02, seed), perturbed(truth, default_el_mask(), 1000 + seed), default_el_mask()); }, el_noisy);
            run([&] { return fit_power_loss(synthetic_sweep(truth, rx, 8, 16, 0.0, seed), perturbed(truth, default_sweep_mask(), 2000 + seed), rx, default_sweep_mask()); }, sw_clean);
            double ignored = 0.0;
            const int before = unconverged;
            run([&] { return fit_power_loss(synthetic_sweep(truth, rx, 8, 16, 0.02, seed), perturbed(truth, default_sweep_mask(), 2000 + seed), rx, default_sweep_mask()); }, ignored);
            unconverged = before;  // informational fit, not part of the criterion
            --fits;
            sw_noisy = std::max(sw_noisy, ignored);
        }
    }
    const double dt = seconds_since(t0);
    v.require(failures == 0, fmt::format("{} fits threw", failures));
    v.require(unconverged == 0, fmt::format("{} of {} fits did not converge", unconverged, fits));
    v.require(el_clean <= 0.01, fmt::format("noiseless EL recovery {:.2e} <= 1%", el_clean));
    v.require(sw_clean <= 0.01, fmt::format("noiseless sweep recovery {:.2e} <= 1%", sw_clean));
    v.require(el_noisy <= 0.10, fmt::format("2%-noise EL recovery {:.3f} <= 10%", el_noisy));
    v.require(dt < 30.0, fmt::format("runtime {:.1f} s < 30 s", dt));
    v.note(fmt::format("{} fits, worst recovery: EL clean {:.1e}, sweep clean {:.1e}, EL 2% noise {:.3f}; {:.2f} s",
                       fits, el_clean, sw_clean, el_noisy, dt));
    g_info.push_back(fmt::format("sweep fit at 2% |H| noise (not part of criterion 4): worst recovery {:.3f}", sw_noisy));
}

// ---------------------------------------------------------------------------------------------------------------
// Scenario runs (criteria 5-9) and determinism (10)

struct RunRecord {
    ScenarioConfig cfg;
    ScenarioResult res;
    fs::path csv;
    double seconds = 0.0;
};

std::map<std::string, RunRecord> run_scenarios(const fs::path& out_dir) {
    fs::create_directories(out_dir);
    std::map<std::string, RunRecord> runs;
    for (const char* name : {"grid_desk", "grid_desk_32qam", "frequency_sweep", "illuminance_sweep", "cct_sweep"}) {
        RunRecord r;
        r.cfg = load_scenario(fs::path(WDMVLC_SOURCE_DIR) / "configs" / (std::string(name) + ".cfg"));
        r.cfg.validate();
        const SystemModel model = build_model(r.cfg);
        const auto t0 = Clock::now();
        r.res = run_scenario(model, r.cfg);
        r.seconds = seconds_since(t0);
        r.csv = out_dir / (std::string(name) + ".csv");
        write_results(r.res, r.csv);
        runs[name] = std::move(r);
    }
    return runs;
}

void criterion_grid(const RunRecord& run) {
    Verdict& v = g_verdicts[5];
    const auto& rows = run.res.rows;
    v.require(run.res.baseline.has_value(), "baseline feasible at the corner");
    std::map<std::pair<long, long>, const ResultRow*> at;
    auto key = [](double x, double y) { return std::pair{std::lround(x * 1000), std::lround(y * 1000)}; };
    int dominance_failures = 0;
    for (const auto& r : rows) {
        at[key(r.x, r.y)] = &r;
        v.require(r.feasible, fmt::format("point ({}, {}) feasible", r.x, r.y));
        if (r.feasible && r.has_baseline && r.eval.report.ee < r.baseline_eval.report.ee - 1e-9) ++dominance_failures;
    }
    v.require(dominance_failures == 0, fmt::format("{} points below the baseline", dominance_failures));
    const ResultRow* centre = at.count(key(0, 0)) ? at[key(0, 0)] : nullptr;
    v.require(centre != nullptr, "centre evaluated");
    double ratio = 0.0;
    if (centre && centre->has_baseline) ratio = centre->eval.report.ee / centre->baseline_eval.report.ee;
    v.require(ratio >= 1.5, fmt::format("centre improvement {:.3f} >= 1.5", ratio));

    // Outward monotonicity along every grid row and column, including the centre.
    const double tol = 10.0 * run.cfg.solver.tolerance;
    int mono_failures = 0;
    const auto xs = run.cfg.axis();
    auto ee_at = [&](double x, double y) { return at.at(key(x, y))->eval.report.ee; };
    for (double fixed : xs) {
        for (int dir : {-1, 1}) {
            std::vector<double> out;
            for (double c : xs)
                if (c * dir > 0) out.push_back(c);
            std::sort(out.begin(), out.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
            for (std::size_t i = 1; i < out.size(); ++i) {
                if (ee_at(out[i], fixed) > ee_at(out[i - 1], fixed) * (1.0 + tol)) ++mono_failures;
                if (ee_at(fixed, out[i]) > ee_at(fixed, out[i - 1]) * (1.0 + tol)) ++mono_failures;
            }
        }
    }
    if (centre)
        for (const auto& r : rows)
            if (r.eval.report.ee > centre->eval.report.ee * (1.0 + tol)) ++mono_failures;
    v.require(mono_failures == 0, fmt::format("{} outward EE increases", mono_failures));

    double asym = 0.0;
    for (const auto& [k, r] : at) {
        const double e = r->eval.report.ee;
        for (auto other : {std::pair{-k.first, -k.second}, std::pair{k.second, k.first}}) {
            auto it = at.find(other);
            if (it == at.end()) {
                asym = std::numeric_limits<double>::infinity();
                continue;
            }
            asym = std::max(asym, std::abs(it->second->eval.report.ee - e) / e);
        }
    }
    v.require(asym <= tol, fmt::format("symmetry deviation {:.1e} <= {:.0e}", asym, tol));
    v.require(run.seconds < 300.0, fmt::format("runtime {:.1f} s < 300 s", run.seconds));
    v.note(fmt::format("{} points, centre EE {:.4e} bit/J vs baseline {:.4e} (x{:.3f}), symmetry {:.1e}, {:.1f} s",
                       rows.size(), centre ? centre->eval.report.ee : 0.0,
                       centre ? centre->baseline_eval.report.ee : 0.0, ratio, asym, run.seconds));
}

double average_ratio(const RunRecord& run, int& count) {
    double sum = 0.0;
    count = 0;
    for (const auto& r : run.res.rows) {
        if (r.point != "grid" || !r.feasible || !r.has_baseline) continue;
        sum += r.eval.report.ee / r.baseline_eval.report.ee;
        ++count;
    }
    return count ? sum / count : 0.0;
}

void criterion_modulation(const RunRecord& m16, const RunRecord& m32) {
    Verdict& v = g_verdicts[6];
    int n16 = 0, n32 = 0;
    const double r16 = average_ratio(m16, n16), r32 = average_ratio(m32, n32);
    v.require(n16 == static_cast<int>(m16.cfg.axis().size() * m16.cfg.axis().size()), "every 16-QAM grid point has a ratio");
    v.require(n32 == static_cast<int>(m32.cfg.axis().size() * m32.cfg.axis().size()), "every 32-QAM grid point has a ratio");
    v.require(r32 > r16, fmt::format("32-QAM average ratio {:.4f} > 16-QAM {:.4f}", r32, r16));
    v.note(fmt::format("average EE ratio 16-QAM {:.4f} ({} pts), 32-QAM {:.4f} ({} pts)", r16, n16, r32, n32));
}

void criterion_frequency(const RunRecord& run) {
    Verdict& v = g_verdicts[7];
    std::map<int, std::vector<const ResultRow*>> by_m;
    for (const auto& r : run.res.rows) {
        v.require(r.feasible, fmt::format("M={} f_c={} feasible", r.qam, r.f_c));
        by_m[r.qam].push_back(&r);
    }
    const std::vector<double> expected{5e6, 10e6, 15e6, 20e6, 25e6, 30e6};
    v.require(run.cfg.sweep_f_c == expected, "f_c grid is 5..30 MHz");
    v.require(run.cfg.constraints.phi_req == 400.0 && run.cfg.location_x == 0.0 && run.cfg.location_y == 0.0,
              "400 lx at (0, 0)");
    for (int m : {16, 32, 64}) {
        const auto& rs = by_m[m];
        v.require(rs.size() == expected.size(), fmt::format("{} rows for M={}", rs.size(), m));
        for (std::size_t i = 1; i < rs.size(); ++i) {
            v.require(rs[i]->eval.report.ee < rs[i - 1]->eval.report.ee,
                      fmt::format("EE decreasing at M={} f_c={}", m, rs[i]->f_c));
            v.require(rs[i]->eval.report.p_com > rs[i - 1]->eval.report.p_com,
                      fmt::format("P_com increasing at M={} f_c={}", m, rs[i]->f_c));
        }
    }
    for (std::size_t i = 0; i < expected.size() && by_m[64].size() == expected.size(); ++i) {
        const double e16 = by_m[16][i]->eval.report.ee, e32 = by_m[32][i]->eval.report.ee, e64 = by_m[64][i]->eval.report.ee;
        v.require(e16 > e32 && e32 > e64, fmt::format("ordering at f_c={}", expected[i]));
    }
    v.require(run.seconds < 180.0, fmt::format("runtime {:.1f} s < 180 s", run.seconds));
    if (by_m[16].size() == expected.size() && by_m[64].size() == expected.size())
        v.note(fmt::format("EE 16-QAM {:.3e} -> {:.3e}, 64-QAM {:.3e} -> {:.3e} bit/J; P_com 16-QAM {:.1f} -> {:.1f} mW; {:.1f} s",
                           by_m[16].front()->eval.report.ee, by_m[16].back()->eval.report.ee,
                           by_m[64].front()->eval.report.ee, by_m[64].back()->eval.report.ee,
                           1e3 * by_m[16].front()->eval.report.p_com, 1e3 * by_m[16].back()->eval.report.p_com,
                           run.seconds));
}

void criterion_illumination(const RunRecord& phi, const RunRecord& cct_run, const SystemModel& m) {
    Verdict& v = g_verdicts[8];
    const auto& pr = phi.res.rows;
    v.require(phi.cfg.sweep_phi == std::vector<double>{300, 400, 500, 600}, "illuminance grid 300..600 lx");
    v.require(cct_run.cfg.sweep_cct == std::vector<double>{3000, 4000, 5000}, "CCT grid 3000..5000 K");
    for (const auto* rs : {&pr, &cct_run.res.rows})
        for (const auto& r : *rs) v.require(r.feasible, fmt::format("row {} feasible", r.index));
    for (std::size_t i = 1; i < pr.size(); ++i) {
        v.require(pr[i].eval.report.ee < pr[i - 1].eval.report.ee, fmt::format("EE decreasing at {} lx", pr[i].phi_req));
        v.require(pr[i].eval.report.p_com > pr[i - 1].eval.report.p_com, fmt::format("P_com increasing at {} lx", pr[i].phi_req));
    }
    const auto& cr = cct_run.res.rows;
    for (std::size_t i = 1; i < cr.size(); ++i) {
        v.require(cr[i].eval.report.ee > cr[i - 1].eval.report.ee, fmt::format("EE increasing at {} K", cr[i].cct_req));
        v.require(cr[i].eval.report.p_com < cr[i - 1].eval.report.p_com, fmt::format("P_com decreasing at {} K", cr[i].cct_req));
        v.require(cr[i].eval.report.p_ill < cr[i - 1].eval.report.p_ill, fmt::format("P_ill decreasing at {} K", cr[i].cct_req));
    }
    // Blue-dominant efficiency: steepest radiant power per volt across the bias window.
    std::array<double, 4> slope{};
    for (int c = 0; c < 4; ++c) {
        const auto& p = m.leds[c];
        const auto grid = canonical_grid();
        slope[c] = (trapezoid(grid, spectrum(p, p.v_max, grid).values) - trapezoid(grid, spectrum(p, p.v_th, grid).values)) /
                   (p.v_max - p.v_th);
    }
    v.require(slope[2] > slope[0] && slope[2] > slope[1] && slope[2] > slope[3], "blue has the steepest emission slope");
    v.require(phi.seconds + cct_run.seconds < 180.0, fmt::format("runtime {:.1f} s < 180 s", phi.seconds + cct_run.seconds));
    if (pr.size() == 4 && cr.size() == 3)
        v.note(fmt::format("EE {:.3e} -> {:.3e} over 300..600 lx, {:.3e} -> {:.3e} over 3000..5000 K; "
                           "emission slope R/G/B/Y {:.3f}/{:.3f}/{:.3f}/{:.3f} W/nm/V; {:.2f} s",
                           pr.front().eval.report.ee, pr.back().eval.report.ee, cr.front().eval.report.ee,
                           cr.back().eval.report.ee, slope[0], slope[1], slope[2], slope[3],
                           phi.seconds + cct_run.seconds));
}

void criterion_verifier(const std::map<std::string, RunRecord>& runs) {
    Verdict& v = g_verdicts[9];
    int rows = 0, feasible = 0, failures = 0;
    for (const auto& [name, run] : runs) {
        const SystemModel model = build_model(run.cfg);
        const VerifyReport rep = verify_results(model, run.cfg, run.csv);
        rows += rep.rows;
        feasible += rep.feasible;
        failures += rep.failures;
        for (const auto& msg : rep.messages) v.note(name + ": " + msg);
        v.require(run.cfg.constraints.ber_req == 1e-5, name + " uses BER <= 1e-5");
    }
    v.require(feasible > 0, "at least one feasible row");
    v.require(failures == 0, fmt::format("{} rows failed re-verification", failures));
    v.note(fmt::format("{} feasible of {} rows re-checked from CSV, {} failures", feasible, rows, failures));
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void criterion_determinism(const std::map<std::string, RunRecord>& first, const fs::path& second_dir) {
    Verdict& v = g_verdicts[10];
    const auto second = run_scenarios(second_dir);
    int compared = 0, differing = 0;
    for (const auto& [name, run] : first) {
        const auto a = slurp(run.csv), b = slurp(second.at(name).csv);
        ++compared;
        if (a.empty() || a != b) {
            ++differing;
            v.note(name + " differs");
        }
    }
    v.require(differing == 0, fmt::format("{} of {} CSVs differ", differing, compared));
    v.note(fmt::format("{} CSVs byte-identical across two runs", compared - differing));
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path out = argc > 1 ? fs::path(argv[1]) : fs::current_path() / "acceptance_out";
    try {
        const SystemModel model =
            load_system_model(WDMVLC_DATA_DIR, fs::path(WDMVLC_DATA_DIR) / "reference");
        criterion_solver();
        criterion_model(model);
        criterion_colorimetry(model);
        criterion_calibration(model);
        const auto runs = run_scenarios(out / "run1");
        criterion_grid(runs.at("grid_desk"));
        criterion_modulation(runs.at("grid_desk"), runs.at("grid_desk_32qam"));
        criterion_frequency(runs.at("frequency_sweep"));
        criterion_illumination(runs.at("illuminance_sweep"), runs.at("cct_sweep"), model);
        criterion_verifier(runs);
        criterion_determinism(runs, out / "run2");
    } catch (const std::exception& e) {
        std::cout << "acceptance suite aborted: " << e.what() << "\n";
        return 1;
    }
    report(1, "solver correctness on analytic programs");
    report(2, "LED model self-consistency");
    report(3, "colorimetry identities");
    report(4, "calibration round trip");
    report(5, "location grid trends (6x6, 0.4 m, k = 4)");
    report(6, "modulation-order improvement ratio");
    report(7, "carrier-frequency sweep trends");
    report(8, "illuminance and CCT sweep trends");
    report(9, "independent constraint verification");
    report(10, "determinism");
    for (const auto& s : g_info) std::cout << "INFO " << s << "\n";
    bool all = true;
    for (int i = 1; i <= 10; ++i) all = all && g_verdicts[static_cast<std::size_t>(i)].pass;
    return all ? 0 : 1;
}
