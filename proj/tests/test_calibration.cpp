#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <fmt/format.h>

#include "support.hpp"
#include "wdmvlc/calibration.hpp"
#include "wdmvlc/error.hpp"
#include "wdmvlc/scenario.hpp"

using namespace wdmvlc;
using testing_support::reference_model;

namespace {

ReceiverParams bench_receiver() {
    ReceiverParams rx;
    rx.set_flat_responsivity(0.5);
    return rx;
}

/// Carrier-polynomial coefficients tolerate only small moves before the emission curve folds over,
/// so they start 1% off; amplitude and sweep parameters start 20% off.
LedParams perturbed(const LedParams& truth, const std::vector<std::string>& mask, std::uint64_t seed) {
    LedParams p = truth;
    SplitMix64 rng(seed);
    for (const auto& name : mask) {
        const double span = name.rfind("alpha", 0) == 0 ? 0.01 : 0.2;
        parameter_ref(p, name) *= 1.0 + span * (2.0 * rng.uniform() - 1.0);
    }
    return p;
}

double worst_relative_error(const FitResult& r, const LedParams& truth) {
    double worst = 0.0;
    for (std::size_t k = 0; k < r.free.size(); ++k)
        worst = std::max(worst, std::abs(r.values[k] / parameter_value(truth, r.free[k]) - 1.0));
    return worst;
}

std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("wdmvlc_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_SUITE("calibration") {

TEST_CASE("noiseless electroluminescence refit") {
    for (const auto& truth : reference_model().leds) {
        for (std::uint64_t seed : {1u, 2u, 3u}) {
            const auto data = synthetic_el(truth, 101, 0.0, seed);
            const auto fit = fit_electroluminescence(data, perturbed(truth, default_el_mask(), 1000 + seed), default_el_mask());
            CHECK(fit.status == SolveStatus::converged);
            CHECK(worst_relative_error(fit, truth) < 0.01);
            CHECK(fit.at_bound.empty());
            CHECK(fit.warnings.empty());
            // Residual RMS relative to the curve's own scale.
            double scale = 0.0;
            for (const auto& r : data.rows) scale = std::max(scale, r.irradiance);
            CHECK(fit.rms < 1e-6 * scale);
            for (std::size_t i = 1; i < fit.trace.size(); ++i) CHECK(fit.trace[i].f <= fit.trace[i - 1].f);
        }
    }
}

TEST_CASE("noisy electroluminescence refit") {
    for (const auto& truth : reference_model().leds) {
        const auto data = synthetic_el(truth, 101, 0.02, 5);
        const auto fit = fit_electroluminescence(data, perturbed(truth, default_el_mask(), 77), default_el_mask());
        CHECK(fit.status == SolveStatus::converged);
        CHECK(worst_relative_error(fit, truth) < 0.10);
        // Residuals relative to the data should look like the injected 2% noise.
        double rel = 0.0;
        for (std::size_t i = 0; i < data.rows.size(); ++i) rel += std::pow(fit.residuals[i] / data.rows[i].irradiance, 2);
        rel = std::sqrt(rel / static_cast<double>(data.rows.size()));
        CHECK(rel == doctest::Approx(0.02).epsilon(0.3));
    }
}

TEST_CASE("empty mask echoes the initial parameters") {
    const auto& truth = reference_model().leds[2];
    const auto data = synthetic_el(truth, 20, 0.0, 1);
    LedParams init = truth;
    init.gamma2 *= 1.1;
    const auto fit = fit_electroluminescence(data, init, {});
    CHECK(identical(fit.params, init));
    CHECK(fit.rms > 0.0);
    for (std::size_t i = 0; i < data.rows.size(); ++i)
        CHECK(fit.residuals[i] ==
              doctest::Approx(model_irradiance(init, data.rows[i].v_bias, {}) - data.rows[i].irradiance).epsilon(1e-9));
}

TEST_CASE("power-loss refit and measured trends") {
    const auto rx = bench_receiver();
    for (const auto& truth : reference_model().leds) {
        const auto data = synthetic_sweep(truth, rx, 8, 12, 0.0, 3);
        const auto fit = fit_power_loss(data, perturbed(truth, default_sweep_mask(), 42), rx, default_sweep_mask());
        CHECK(fit.status == SolveStatus::converged);
        CHECK(worst_relative_error(fit, truth) < 0.02);

        const auto& p = fit.params;
        const double v = 0.5 * (p.v_th + p.v_max);
        for (double f : {1e6, 5e6, 20e6})
            CHECK(model_power_loss_db(p, rx, v, 1.1 * f, {}) > model_power_loss_db(p, rx, v, f, {}));
        for (double f : {1e6, 10e6, 40e6})
            CHECK(model_power_loss_db(p, rx, p.v_max - 0.05, f, {}) > model_power_loss_db(p, rx, p.v_th + 0.05, f, {}));
    }
}

TEST_CASE("input validation") {
    const auto& truth = reference_model().leds[0];
    const auto rx = bench_receiver();
    auto single = synthetic_sweep(truth, rx, 4, 4, 0.0, 1);
    const double f0 = single.rows.front().frequency;
    std::erase_if(single.rows, [&](const SweepRow& r) { return r.frequency != f0; });
    CHECK_THROWS_WITH_AS(fit_power_loss(single, truth, rx, default_sweep_mask()),
                         doctest::Contains("insufficient identifiability"), ConfigError);

    auto few = synthetic_el(truth, 101, 0.0, 1);
    few.rows.resize(5);
    CHECK_THROWS_AS(fit_electroluminescence(few, truth, default_el_mask()), ConfigError);
    CHECK_THROWS_AS(fit_electroluminescence(synthetic_el(truth, 20, 0.0, 1), truth, {"R_s"}), ConfigError);
    CHECK_THROWS_AS(fit_electroluminescence(synthetic_el(reference_model().leds[1], 20, 0.0, 1), truth, {"gamma2"}),
                    ConfigError);
}

TEST_CASE("identifiability guard refuses degenerate masks") {
    // The three carrier coefficients and gamma2 are nearly collinear over the blue window.
    const auto& blue = reference_model().leds[2];
    FitOptions opt;
    opt.max_condition = 10.0;
    CHECK_THROWS_AS(fit_electroluminescence(synthetic_el(blue, 101, 0.0, 1), blue, el_fit_parameters(), opt),
                    DomainError);
}

TEST_CASE("CSV round trip") {
    const auto rx = bench_receiver();
    std::vector<ElMeasurement> el;
    std::vector<SweepMeasurement> sw;
    for (const auto& p : reference_model().leds) {
        el.push_back(synthetic_el(p, 12, 0.01, 4));
        sw.push_back(synthetic_sweep(p, rx, 2, 5, 0.01, 4));
    }
    const auto dir = scratch_dir("csv");
    {
        std::ofstream(dir / "el.csv") << format_el_csv(el);
        std::ofstream(dir / "sw.csv") << format_sweep_csv(sw);
    }
    const auto el2 = read_el_csv(dir / "el.csv");
    const auto sw2 = read_sweep_csv(dir / "sw.csv");
    REQUIRE(el2.size() == 4);
    REQUIRE(sw2.size() == 4);
    for (const auto& m : el) {
        const auto& back = el2.at(m.channel);
        REQUIRE(back.rows.size() == m.rows.size());
        for (std::size_t i = 0; i < m.rows.size(); ++i) {
            CHECK(back.rows[i].v_bias == m.rows[i].v_bias);
            CHECK(back.rows[i].irradiance == m.rows[i].irradiance);
        }
    }
    for (const auto& m : sw)
        for (std::size_t i = 0; i < m.rows.size(); ++i)
            CHECK(sw2.at(m.channel).rows[i].power_loss_db == m.rows[i].power_loss_db);
}

TEST_CASE("reference-set export") {
    const auto& leds = reference_model().leds;
    std::map<std::string, LedParams> set;
    for (const auto& p : leds) set[p.channel] = p;
    const auto dir = scratch_dir("export");
    export_reference_set(set, dir);
    for (const auto& p : leds) CHECK(identical(load_led_params(dir / (channel_file_stem(p.channel) + ".params")), p));

    auto partial = set;
    partial.erase("G");
    partial.erase("Y");
    CHECK_THROWS_WITH_AS(export_reference_set(partial, scratch_dir("partial")), doctest::Contains("G, Y"), ConfigError);

    // An exported set drives a scenario run directly.
    const auto cfg = parse_scenario(fmt::format("schema_version = 1\n[paths]\ndata_dir = {}\nparams_dir = {}\n"
                                                "[room]\ngrid_step = 2\n[solver]\nstarts = 1\n",
                                                WDMVLC_DATA_DIR, dir.string()),
                                    dir);
    CHECK_NOTHROW(cfg.validate());
    const auto res = run_scenario(build_model(cfg), cfg);
    CHECK(res.feasible_rows() == static_cast<int>(res.rows.size()));
}

TEST_CASE("bundled calibration data refits to the reference set") {
    const auto el = read_el_csv(std::string(WDMVLC_DATA_DIR) + "/calibration/el_curves.csv");
    const auto sw = read_sweep_csv(std::string(WDMVLC_DATA_DIR) + "/calibration/power_loss_sweep.csv");
    const auto rx = bench_receiver();
    for (const auto& truth : reference_model().leds) {
        const auto a = fit_electroluminescence(el.at(truth.channel), perturbed(truth, default_el_mask(), 9), default_el_mask());
        CHECK(a.status == SolveStatus::converged);
        CHECK(worst_relative_error(a, truth) < 0.10);
        const auto b = fit_power_loss(sw.at(truth.channel), a.params, rx, default_sweep_mask());
        CHECK(b.status == SolveStatus::converged);
        CHECK(worst_relative_error(b, truth) < 0.10);
    }
}

}
