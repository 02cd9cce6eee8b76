#include "wdmvlc/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "wdmvlc/csv.hpp"
#include "wdmvlc/error.hpp"

namespace wdmvlc {

namespace {

constexpr double kMinFrequency = 3e5;
constexpr double kMaxFrequency = 5e7;

void check_mask(const std::vector<std::string>& mask, const std::vector<std::string>& allowed, const char* fit) {
    std::set<std::string> seen;
    for (const auto& name : mask) {
        if (std::find(allowed.begin(), allowed.end(), name) == allowed.end())
            throw ConfigError(fmt::format("parameter '{}' cannot be freed in the {} fit", name, fit));
        if (!seen.insert(name).second) throw ConfigError(fmt::format("parameter '{}' listed twice", name));
    }
    if (mask.size() > 6) throw ConfigError("at most 6 parameters can be fitted at once");
}

/// Shared bounded least-squares driver. Free parameter k is value_k = initial_k (1 + z_k / c_k): c_k is the
/// RMS sensitivity of the residuals to a relative change, so every solver variable moves the fit equally.
struct LeastSquares {
    LedParams initial;
    std::vector<std::string> mask;
    std::function<VectorXd(const LedParams&)> residuals;  // scaled residual vector
    VectorXd sens = VectorXd();                           // c_k

    /// Relative factors value_k / initial_k for solver variables z.
    VectorXd factors(const VectorXd& z) const {
        VectorXd t = z;
        for (Eigen::Index k = 0; k < z.size(); ++k) t(k) = 1.0 + z(k) / sens(k);
        return t;
    }

    LedParams apply_factors(const VectorXd& t) const {
        LedParams p = initial;
        for (std::size_t k = 0; k < mask.size(); ++k)
            parameter_ref(p, mask[k]) = parameter_value(initial, mask[k]) * t(static_cast<Eigen::Index>(k));
        return p;
    }

    LedParams apply(const VectorXd& z) const { return apply_factors(factors(z)); }

    /// Residual Jacobian with respect to `x`, where `map` turns x into parameters.
    MatrixXd jacobian(const std::function<LedParams(const VectorXd&)>& map, const VectorXd& x, const VectorXd& r0,
                      const VectorXd& lo, const VectorXd& up) const {
        MatrixXd j(r0.size(), x.size());
        for (Eigen::Index k = 0; k < x.size(); ++k) {
            const double h = 1e-6 * std::max(1.0, std::abs(x(k)));
            const double hp = x(k) + h <= up(k) ? h : 0.0;
            const double hm = x(k) - h >= lo(k) ? h : 0.0;
            VectorXd xp = x, xm = x;
            xp(k) += hp;
            xm(k) -= hm;
            const VectorXd rp = hp > 0.0 ? residuals(map(xp)) : r0;
            const VectorXd rm = hm > 0.0 ? residuals(map(xm)) : r0;
            j.col(k) = (rp - rm) / (hp + hm);
        }
        return j;
    }
};

FitResult run_fit(LeastSquares& ls, const FitOptions& opt, double unit_scale) {
    FitResult res;
    res.free = ls.mask;
    const auto n = static_cast<Eigen::Index>(ls.mask.size());
    if (n == 0) {
        res.params = ls.initial;
        const VectorXd r = ls.residuals(ls.initial) * unit_scale;
        res.residuals.assign(r.data(), r.data() + r.size());
        res.rms = std::sqrt(r.squaredNorm() / static_cast<double>(r.size()));
        res.condition = 1.0;
        return res;
    }
    if (!(opt.lower_factor > 0.0) || !(opt.lower_factor < 1.0) || !(opt.upper_factor > 1.0))
        throw ConfigError("fit bounds must bracket the initial value");

    // Identifiability guard on the Jacobian with respect to relative parameter changes.
    const VectorXd r_start = ls.residuals(ls.initial);
    const double m = static_cast<double>(r_start.size());
    const MatrixXd j0 = ls.jacobian([&](const VectorXd& t) { return ls.apply_factors(t); }, VectorXd::Ones(n),
                                    r_start, VectorXd::Constant(n, opt.lower_factor),
                                    VectorXd::Constant(n, opt.upper_factor));
    const Eigen::JacobiSVD<MatrixXd> svd(j0);
    const auto sv = svd.singularValues();
    res.condition = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
    if (!(res.condition < opt.max_condition))
        throw DomainError(fmt::format("free parameters are not identifiable from this data "
                                      "(Jacobian condition number {:.3e})",
                                      res.condition));
    ls.sens.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) ls.sens(k) = j0.col(k).norm() / std::sqrt(m);

    VectorXd lo(n), up(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        lo(k) = ls.sens(k) * (opt.lower_factor - 1.0);
        up(k) = ls.sens(k) * (opt.upper_factor - 1.0);
    }
    NlpProblem prob;
    prob.n = n;
    prob.m = 0;
    prob.lower = lo;
    prob.upper = up;
    prob.evaluate = [&](const VectorXd& z) {
        const VectorXd r = ls.residuals(ls.apply(z));
        return NlpValues{r.squaredNorm() / m, VectorXd()};
    };
    // Gradient through the residual Jacobian stays accurate as the residual goes to zero,
    // which differencing the sum of squares directly does not.
    prob.derivatives = [&](const VectorXd& z, VectorXd& grad, MatrixXd& jac) {
        const VectorXd r = ls.residuals(ls.apply(z));
        grad = 2.0 / m * ls.jacobian([&](const VectorXd& x) { return ls.apply(x); }, z, r, lo, up).transpose() * r;
        jac.resize(0, n);
    };
    const SolveOutcome out = sqp_solve(prob, VectorXd::Zero(n), opt.solver);
    res.status = out.status;
    res.iterations = out.iterations;
    res.trace = out.trace;
    res.params = ls.apply(out.x);
    for (Eigen::Index k = 0; k < n; ++k) {
        res.values.push_back(parameter_value(res.params, ls.mask[static_cast<std::size_t>(k)]));
        const double tol = 1e-9 * std::max(1.0, up(k) - lo(k));
        if (out.x(k) <= lo(k) + tol || out.x(k) >= up(k) - tol)
            res.at_bound.push_back(ls.mask[static_cast<std::size_t>(k)]);
    }
    const VectorXd r = ls.residuals(res.params) * unit_scale;
    res.residuals.assign(r.data(), r.data() + r.size());
    res.rms = std::sqrt(r.squaredNorm() / m);
    if (!std::isfinite(res.rms)) throw NumericError("fit produced a non-finite residual");
    return res;
}

}  // namespace

LinkGeometry BenchGeometry::link() const {
    LinkGeometry g;
    g.tx = {0.0, 0.0, distance};
    g.rx = {0.0, 0.0, 0.0};
    g.psi = 0.0;
    g.theta = 0.0;
    g.distance = distance;
    g.mu = mu;
    g.a_rec = a_rec;
    return g;
}

void ElMeasurement::validate(const LedParams& led) const {
    if (rows.size() < 8)
        throw ConfigError(fmt::format("channel {}: EL fit needs at least 8 rows, got {}", channel, rows.size()));
    for (const auto& r : rows) {
        if (r.v_bias < led.v_th || r.v_bias > led.v_max)
            throw ConfigError(fmt::format("channel {}: bias {} V outside the window [{}, {}] V", channel,
                                          r.v_bias, led.v_th, led.v_max));
        if (!(r.irradiance >= 0.0)) throw ConfigError(fmt::format("channel {}: negative irradiance", channel));
    }
}

void SweepMeasurement::validate(const LedParams& led) const {
    std::set<double> vs, fs;
    std::set<std::pair<double, double>> cells;
    for (const auto& r : rows) {
        if (r.frequency < kMinFrequency || r.frequency > kMaxFrequency)
            throw ConfigError(fmt::format("channel {}: frequency {} Hz outside [{}, {}] Hz", channel, r.frequency,
                                          kMinFrequency, kMaxFrequency));
        if (r.v_bias < led.v_th || r.v_bias > led.v_max)
            throw ConfigError(fmt::format("channel {}: bias {} V outside the window [{}, {}] V", channel,
                                          r.v_bias, led.v_th, led.v_max));
        if (!std::isfinite(r.power_loss_db)) throw ConfigError(fmt::format("channel {}: non-finite loss", channel));
        vs.insert(r.v_bias);
        fs.insert(r.frequency);
        if (!cells.insert({r.v_bias, r.frequency}).second)
            throw ConfigError(fmt::format("channel {}: duplicate (V, f) point", channel));
    }
    if (fs.size() < 4)
        throw ConfigError(fmt::format("channel {}: insufficient identifiability, the sweep needs at least 4 "
                                      "frequencies (got {})",
                                      channel, fs.size()));
    if (cells.size() != vs.size() * fs.size())
        throw ConfigError(fmt::format("channel {}: sweep is not a rectangular (V, f) grid", channel));
}

const std::vector<std::string>& el_fit_parameters() {
    static const std::vector<std::string> p = {"alpha1", "alpha2", "alpha3", "gamma2"};
    return p;
}

const std::vector<std::string>& sweep_fit_parameters() {
    static const std::vector<std::string> p = {"C_ph", "R_ph", "A_eff", "L_c", "tau_b", "n_0"};
    return p;
}

std::vector<std::string> default_el_mask() { return {"alpha1", "gamma2"}; }
std::vector<std::string> default_sweep_mask() { return {"C_ph", "A_eff"}; }

double& parameter_ref(LedParams& p, const std::string& name) {
    if (name == "alpha1") return p.alpha1;
    if (name == "alpha2") return p.alpha2;
    if (name == "alpha3") return p.alpha3;
    if (name == "gamma2") return p.gamma2;
    if (name == "C_ph") return p.c_ph;
    if (name == "R_ph") return p.r_ph;
    if (name == "A_eff") return p.area_eff;
    if (name == "L_c") return p.len_c;
    if (name == "tau_b") return p.tau_b;
    if (name == "n_0") return p.n0;
    throw ConfigError(fmt::format("unknown fit parameter '{}'", name));
}

double parameter_value(const LedParams& p, const std::string& name) {
    return parameter_ref(const_cast<LedParams&>(p), name);
}

double model_irradiance(const LedParams& led, double v_bias, const BenchGeometry& bench) {
    const Spectrum s = spectrum(led, v_bias);
    return trapezoid(s.wavelength, s.values) * geometric_factor(bench.link());
}

int branch_of(const std::string& channel) {
    if (channel == "R") return 0;
    if (channel == "G") return 1;
    if (channel == "B") return 2;
    if (channel == "Y") return 3;
    throw ConfigError(fmt::format("unknown channel id '{}' (expected R, G, B or Y)", channel));
}

namespace {

double bench_gain(const LedParams& led, const ReceiverParams& rx, const BenchGeometry& bench) {
    const auto grid = canonical_grid();
    return receiver_channel_gain(rx, branch_of(led.channel), spectral_shape(led, grid), grid) *
           channel_gain(bench.link());
}

}  // namespace

double model_power_loss_db(const LedParams& led, const ReceiverParams& rx, double v_bias, double frequency,
                           const BenchGeometry& bench) {
    return -20.0 * std::log10(std::abs(transfer_function(led, v_bias, frequency)) * bench_gain(led, rx, bench));
}

FitResult fit_electroluminescence(const ElMeasurement& data, const LedParams& initial,
                                  const std::vector<std::string>& mask, const FitOptions& opt) {
    check_mask(mask, el_fit_parameters(), "electroluminescence");
    if (data.channel != initial.channel)
        throw ConfigError(fmt::format("EL data for channel {} given LED {}", data.channel, initial.channel));
    data.validate(initial);
    double scale = 0.0;
    for (const auto& r : data.rows) scale += r.irradiance * r.irradiance;
    scale = std::sqrt(scale / static_cast<double>(data.rows.size()));
    if (!(scale > 0.0)) throw ConfigError(fmt::format("channel {}: EL data is identically zero", data.channel));
    const double geo = geometric_factor(opt.bench.link());
    const auto grid = canonical_grid();
    const auto shape = spectral_shape(initial, grid);
    const double shape_area = trapezoid(grid, shape);
    std::vector<DcOperatingPoint> ops;
    for (const auto& r : data.rows) ops.push_back(solve_dc(initial, r.v_bias));

    LeastSquares ls;
    ls.initial = initial;
    ls.mask = mask;
    // The DC operating point and spectral shape do not depend on the EL parameters, so only a5 is recomputed.
    ls.residuals = [&, geo, shape_area, scale](const LedParams& p) {
        VectorXd r(static_cast<Eigen::Index>(data.rows.size()));
        for (std::size_t i = 0; i < data.rows.size(); ++i) {
            const double e = emission_amplitude(p, ops[i].v_j) * shape_area * geo;
            r(static_cast<Eigen::Index>(i)) = (e - data.rows[i].irradiance) / scale;
        }
        return r;
    };
    FitResult res = run_fit(ls, opt, scale);
    const double vj_lo = solve_dc(res.params, res.params.v_th).v_j;
    const double vj_hi = solve_dc(res.params, res.params.v_max).v_j;
    for (int k = 0; k <= 100; ++k) {
        const double vj = vj_lo + (vj_hi - vj_lo) * k / 100.0;
        if (!(carrier_poly_slope(res.params, vj) > 0.0)) {
            res.warnings.push_back(fmt::format("carrier polynomial slope is not positive at V_j = {:.4f} V; "
                                               "the small-signal model is undefined there",
                                               vj));
            break;
        }
    }
    return res;
}

FitResult fit_power_loss(const SweepMeasurement& data, const LedParams& initial, const ReceiverParams& rx,
                         const std::vector<std::string>& mask, const FitOptions& opt) {
    check_mask(mask, sweep_fit_parameters(), "power-loss");
    if (data.channel != initial.channel)
        throw ConfigError(fmt::format("sweep data for channel {} given LED {}", data.channel, initial.channel));
    data.validate(initial);
    const double gain_db = 20.0 * std::log10(bench_gain(initial, rx, opt.bench));
    std::vector<DcOperatingPoint> ops;
    for (const auto& r : data.rows) ops.push_back(solve_dc(initial, r.v_bias));

    LeastSquares ls;
    ls.initial = initial;
    ls.mask = mask;
    ls.residuals = [&, gain_db](const LedParams& p) {
        VectorXd r(static_cast<Eigen::Index>(data.rows.size()));
        for (std::size_t i = 0; i < data.rows.size(); ++i) {
            const auto e = small_signal(p, ops[i]);
            const double loss = -20.0 * std::log10(std::abs(transfer_function(e, data.rows[i].frequency))) - gain_db;
            r(static_cast<Eigen::Index>(i)) = loss - data.rows[i].power_loss_db;
        }
        return r;
    };
    return run_fit(ls, opt, 1.0);
}

double NormalSource::next() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1;
    do {
        u1 = rng_.uniform();
    } while (u1 <= 0.0);
    const double u2 = rng_.uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * constants::pi * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * constants::pi * u2);
}

ElMeasurement synthetic_el(const LedParams& led, int rows, double noise, std::uint64_t seed,
                           const BenchGeometry& bench) {
    if (rows < 2) throw DomainError("synthetic EL data needs at least 2 rows");
    NormalSource gauss(seed);
    ElMeasurement m;
    m.channel = led.channel;
    for (int i = 0; i < rows; ++i) {
        const double v = led.v_th + (led.v_max - led.v_th) * i / (rows - 1);
        const double e = model_irradiance(led, v, bench) * (1.0 + noise * gauss.next());
        m.rows.push_back({v, std::max(0.0, e)});
    }
    return m;
}

SweepMeasurement synthetic_sweep(const LedParams& led, const ReceiverParams& rx, int biases, int frequencies,
                                 double noise, std::uint64_t seed, const BenchGeometry& bench) {
    if (biases < 2 || frequencies < 2) throw DomainError("synthetic sweep needs at least a 2 x 2 grid");
    NormalSource gauss(seed);
    SweepMeasurement m;
    m.channel = led.channel;
    const double gain = bench_gain(led, rx, bench);
    for (int i = 0; i < biases; ++i) {
        const double v = led.v_th + (led.v_max - led.v_th) * i / (biases - 1);
        const auto e = small_signal(led, solve_dc(led, v));
        for (int k = 0; k < frequencies; ++k) {
            const double f = kMinFrequency * std::pow(kMaxFrequency / kMinFrequency,
                                                      static_cast<double>(k) / (frequencies - 1));
            const double mag = std::abs(transfer_function(e, f)) * gain * (1.0 + noise * gauss.next());
            m.rows.push_back({v, f, -20.0 * std::log10(mag)});
        }
    }
    return m;
}

std::map<std::string, ElMeasurement> read_el_csv(const std::filesystem::path& path) {
    const auto t = csv::read(path);
    const auto cc = t.column("channel"), cv = t.column("v_bias_volts"), ce = t.column("irradiance_w_m2");
    std::map<std::string, ElMeasurement> out;
    for (const auto& r : t.rows) {
        auto& m = out[r[cc]];
        m.channel = r[cc];
        m.rows.push_back({csv::to_double(r[cv], path.string()), csv::to_double(r[ce], path.string())});
    }
    return out;
}

std::map<std::string, SweepMeasurement> read_sweep_csv(const std::filesystem::path& path) {
    const auto t = csv::read(path);
    const auto cc = t.column("channel"), cv = t.column("v_bias_volts"), cf = t.column("frequency_hz"),
               cl = t.column("power_loss_db");
    std::map<std::string, SweepMeasurement> out;
    for (const auto& r : t.rows) {
        auto& m = out[r[cc]];
        m.channel = r[cc];
        m.rows.push_back({csv::to_double(r[cv], path.string()), csv::to_double(r[cf], path.string()),
                          csv::to_double(r[cl], path.string())});
    }
    return out;
}

std::string format_el_csv(const std::vector<ElMeasurement>& data) {
    std::string s = "channel,v_bias_volts,irradiance_w_m2\n";
    for (const auto& m : data)
        for (const auto& r : m.rows)
            s += fmt::format("{},{},{}\n", m.channel, csv::fmt_num(r.v_bias), csv::fmt_num(r.irradiance));
    return s;
}

std::string format_sweep_csv(const std::vector<SweepMeasurement>& data) {
    std::string s = "channel,v_bias_volts,frequency_hz,power_loss_db\n";
    for (const auto& m : data)
        for (const auto& r : m.rows)
            s += fmt::format("{},{},{},{}\n", m.channel, csv::fmt_num(r.v_bias), csv::fmt_num(r.frequency),
                             csv::fmt_num(r.power_loss_db));
    return s;
}

std::string channel_file_stem(const std::string& channel) {
    static const char* stems[4] = {"red", "green", "blue", "yellow"};
    return stems[branch_of(channel)];
}

void export_reference_set(const std::map<std::string, LedParams>& by_channel, const std::filesystem::path& dir) {
    std::string missing;
    for (const char* id : {"R", "G", "B", "Y"})
        if (!by_channel.count(id)) missing += std::string(missing.empty() ? "" : ", ") + id;
    if (!missing.empty()) throw ConfigError("reference set is missing channel(s): " + missing);
    for (const auto& [id, p] : by_channel) {
        if (p.channel != id) throw ConfigError(fmt::format("parameters filed under {} belong to {}", id, p.channel));
        branch_of(id);
        p.validate();
    }
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(fmt::format("cannot create '{}': {}", dir.string(), ec.message()));
    for (const auto& [id, p] : by_channel) {
        const auto path = dir / (channel_file_stem(id) + ".params");
        save_led_params(p, path);
        if (!identical(load_led_params(path), p))
            throw Error(fmt::format("round trip of '{}' is not bit-exact", path.string()));
    }
}

}  // namespace wdmvlc
