#include "wdmvlc/ee_problem.hpp"

#include <cmath>

#include <fmt/format.h>

#include "wdmvlc/error.hpp"

namespace wdmvlc {

VectorXd SystemConfig::to_vector() const {
    VectorXd x(8);
    for (int i = 0; i < 4; ++i) {
        x(i) = v_bias[i];
        x(4 + i) = g_amp[i];
    }
    return x;
}

SystemConfig SystemConfig::from_vector(const VectorXd& x) {
    if (x.size() != 8) throw DomainError("system configuration needs 8 components");
    SystemConfig c;
    for (int i = 0; i < 4; ++i) {
        c.v_bias[i] = x(i);
        c.g_amp[i] = x(4 + i);
    }
    return c;
}

void ConstraintSpec::validate() const {
    if (!(phi_req > 0.0)) throw ConfigError("required illuminance must be positive");
    if (!(cct_req > 0.0)) throw ConfigError("CCT ceiling must be positive");
    if (!(ber_req > 0.0 && ber_req < 0.5)) throw ConfigError("BER requirement must lie in (0, 0.5)");
    for (int m : qam)
        if (m != 4 && m != 16 && m != 32 && m != 64)
            throw ConfigError(fmt::format("unsupported QAM order {}", m));
    for (double f : f_c)
        if (!(f > 0.0)) throw ConfigError("central frequencies must be positive");
}

void SystemModel::refresh() { rmat = receiver_matrix(rx, leds, cie.wavelength); }

VectorXd SystemModel::lower_bounds() const {
    VectorXd lo(8);
    for (int i = 0; i < 4; ++i) {
        lo(i) = leds[i].v_th;
        lo(4 + i) = g_min;
    }
    return lo;
}

VectorXd SystemModel::upper_bounds() const {
    VectorXd up(8);
    for (int i = 0; i < 4; ++i) {
        up(i) = leds[i].v_max;
        up(4 + i) = g_max;
    }
    return up;
}

SystemModel load_system_model(const std::filesystem::path& data_dir, const std::filesystem::path& params_dir) {
    SystemModel m;
    m.cie = load_cie_tables(data_dir / "cie");
    const char* names[4] = {"red", "green", "blue", "yellow"};
    for (int i = 0; i < 4; ++i) m.leds[i] = load_led_params(params_dir / (std::string(names[i]) + ".params"));
    m.rx.set_flat_responsivity(0.5);
    m.p0 = dbm_to_watts(2.0);
    m.refresh();
    return m;
}

Evaluation evaluate(const SystemModel& model, const ConstraintSpec& spec, const SystemConfig& cfg) {
    Evaluation ev;
    const auto& grid = model.cie.wavelength;
    Spectrum total{grid, std::vector<double>(grid.size(), 0.0)};
    std::array<SmallSignalElements, 4> el;
    for (int c = 0; c < 4; ++c) {
        ev.ops[c] = solve_dc(model.leds[c], cfg.v_bias[c]);
        el[c] = small_signal(model.leds[c], ev.ops[c]);
        const auto shape = spectral_shape(model.leds[c], grid);
        for (std::size_t k = 0; k < grid.size(); ++k) total.values[k] += el[c].a5 * shape[k];
    }
    const double hc = channel_gain(spec.geom);
    ev.illuminance = hc == 0.0 ? 0.0
                               : luminous_flux_to_illuminance(total.scaled(hc), spec.geom.a_rec, model.cie,
                                                              model.efficacy);
    ev.xy = chromaticity(total, model.cie);
    ev.cct = cct(ev.xy);

    for (int i = 0; i < 4; ++i) {
        std::complex<double> h = 0.0;
        for (int j = 0; j < 4; ++j)
            if (model.rmat(i, j) != 0.0) h += model.rmat(i, j) * transfer_function(el[j], spec.f_c[i]);
        ev.h_vlc[i] = h * hc;
    }
    SignalSpec sig;
    sig.p0.fill(model.p0);
    sig.g_amp = cfg.g_amp;
    sig.f_c = spec.f_c;
    sig.bandwidth.fill(model.bandwidth);
    sig.qam = spec.qam;
    ev.report = energy_report(ev.h_vlc, sig, model.noise, ev.ops);
    for (int i = 0; i < 4; ++i) {
        ev.ber[i] = ber(spec.qam[i], ev.report.snr[i]);
        ev.log10_ber[i] = log10_ber(spec.qam[i], ev.report.snr[i]);
    }
    return ev;
}

double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

double log_q_function(double x) {
    if (x < 30.0) return std::log(q_function(x));
    // Asymptotic tail: Q(x) = phi(x)/x (1 - 1/x^2 + 3/x^4 - 15/x^6 + ...).
    const double x2 = x * x;
    const double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
    return -0.5 * x2 - std::log(x * std::sqrt(2.0 * constants::pi)) + std::log(series);
}

namespace {

struct QamTerms {
    double prefactor;
    double argument;
};

QamTerms qam_terms(int qam, double snr) {
    if (qam != 4 && qam != 16 && qam != 32 && qam != 64)
        throw DomainError(fmt::format("unsupported QAM order {}", qam));
    if (!(snr >= 0.0)) throw DomainError("SNR must be non-negative");
    const double m = qam;
    const double bits = std::log2(m);
    return {4.0 / bits * (1.0 - 1.0 / std::sqrt(m)), std::sqrt(3.0 * bits * snr / (m - 1.0))};
}

}  // namespace

double ber(int qam, double snr) {
    const auto t = qam_terms(qam, snr);
    return t.prefactor * q_function(t.argument);
}

double log10_ber(int qam, double snr) {
    const auto t = qam_terms(qam, snr);
    return (std::log(t.prefactor) + log_q_function(t.argument)) / std::log(10.0);
}

VectorXd constraint_values(const Evaluation& ev, const ConstraintSpec& spec) {
    VectorXd g(6);
    g(0) = (spec.phi_req - ev.illuminance) / spec.phi_req;
    const double target = std::log10(spec.ber_req);
    for (int i = 0; i < 4; ++i) g(1 + i) = ev.log10_ber[i] - target;
    g(5) = (ev.cct - spec.cct_req) / spec.cct_req;
    return g;
}

NlpProblem build_problem(const SystemModel& model, const ConstraintSpec& spec, Objective objective,
                         const ObjectiveScaling& scaling) {
    spec.validate();
    for (const auto& led : model.leds)
        if (!(led.v_th < led.v_max))
            throw DomainError(fmt::format("LED {}: empty bias window", led.channel));
    if (!(model.g_min < model.g_max)) throw DomainError("empty amplifier gain window");
    NlpProblem p;
    p.n = 8;
    p.m = 6;
    p.lower = model.lower_bounds();
    p.upper = model.upper_bounds();
    p.evaluate = [&model, spec, objective, scaling](const VectorXd& x) {
        const Evaluation ev = evaluate(model, spec, SystemConfig::from_vector(x));
        NlpValues v;
        v.f = objective == Objective::max_ee ? -ev.report.ee / scaling.ee
                                             : (ev.report.p_ill + ev.report.p_com) / scaling.power;
        v.g = constraint_values(ev, spec);
        return v;
    };
    return p;
}

void gradient(const NlpProblem& problem, const VectorXd& x, VectorXd& grad, MatrixXd& jac) {
    fd_derivatives(problem, x, problem.evaluate(x), grad, jac);
}

}  // namespace wdmvlc
