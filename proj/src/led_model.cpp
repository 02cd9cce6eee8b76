#include "wdmvlc/led_model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "wdmvlc/csv.hpp"
#include "wdmvlc/error.hpp"

namespace wdmvlc {

namespace {

constexpr double kExpLimit = 700.0;

// log(1 + e^x) without overflow.
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double logistic(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// log(e^a + e^b).
double log_add_exp(double a, double b) {
    const double m = std::max(a, b);
    if (m == -std::numeric_limits<double>::infinity()) return m;
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

double checked_exp(double x, const char* what) {
    if (x > kExpLimit) throw NumericError(fmt::format("exponent overflow evaluating {}", what));
    return std::exp(x);
}

using DoubleField = std::pair<const char*, double LedParams::*>;

const std::vector<DoubleField>& double_fields() {
    static const std::vector<DoubleField> f = {
        {"alpha1", &LedParams::alpha1},       {"alpha2", &LedParams::alpha2},
        {"alpha3", &LedParams::alpha3},       {"gamma1", &LedParams::gamma1},
        {"gamma2", &LedParams::gamma2},       {"gamma3", &LedParams::gamma3},
        {"A_c", &LedParams::area_c},          {"A_q", &LedParams::area_q},
        {"A_b", &LedParams::area_b},          {"A_eff", &LedParams::area_eff},
        {"L_c", &LedParams::len_c},           {"L_q", &LedParams::len_q},
        {"L_b", &LedParams::len_b},           {"beta_sp", &LedParams::beta_sp},
        {"eta_ph", &LedParams::eta_ph},       {"R_ph", &LedParams::r_ph},
        {"C_ph", &LedParams::c_ph},           {"tau_ph", &LedParams::tau_ph},
        {"tau_b", &LedParams::tau_b},         {"eta", &LedParams::ideality},
        {"I_s", &LedParams::i_s},             {"R_s", &LedParams::r_s},
        {"Z_s", &LedParams::z_s},             {"m_star", &LedParams::m_eff},
        {"T", &LedParams::temperature},       {"V_D", &LedParams::v_d},
        {"N_A", &LedParams::n_a},             {"N_D", &LedParams::n_d},
        {"eps_q", &LedParams::eps_q},         {"eps_b", &LedParams::eps_b},
        {"n_0", &LedParams::n0},              {"q", &LedParams::q},
        {"k_B", &LedParams::k_b},             {"hbar", &LedParams::hbar},
        {"lambda0_nm", &LedParams::lambda0},  {"delta_lambda_nm", &LedParams::delta_lambda},
        {"V_th", &LedParams::v_th},           {"V_max", &LedParams::v_max},
    };
    return f;
}

}  // namespace

void LedParams::validate() const {
    if (channel.empty()) throw ConfigError("LED parameters: empty channel name");
    for (const auto& [name, member] : double_fields()) {
        const double v = this->*member;
        if (!std::isfinite(v)) throw ConfigError(fmt::format("LED {}: {} is not finite", channel, name));
        const bool signed_ok = std::strncmp(name, "alpha", 5) == 0 || std::strcmp(name, "V_th") == 0;
        if (std::strcmp(name, "R_s") == 0 && v >= 0.0) continue;
        if (!signed_ok && !(v > 0.0))
            throw ConfigError(fmt::format("LED {}: {} must be positive (got {})", channel, name, v));
    }
    if (wells < 1) throw ConfigError(fmt::format("LED {}: well count must be >= 1", channel));
    if (lambda0 < constants::lambda_min || lambda0 > constants::lambda_max)
        throw ConfigError(fmt::format("LED {}: lambda0 outside 380..830 nm", channel));
    if (!(v_th < v_max)) throw ConfigError(fmt::format("LED {}: V_th must be below V_max", channel));
}

double carrier_poly(const LedParams& p, double vj) {
    return ((p.alpha3 * vj + p.alpha2) * vj + p.alpha1) * vj;
}

double carrier_poly_slope(const LedParams& p, double vj) {
    return (3.0 * p.alpha3 * vj + 2.0 * p.alpha2) * vj + p.alpha1;
}

double density_of_states(const LedParams& p) {
    return p.m_eff * p.kt() / (constants::pi * p.hbar * p.hbar * p.len_q);
}

DcOperatingPoint solve_dc(const LedParams& p, double v_bias) {
    if (v_bias < 0.0) throw DomainError(fmt::format("LED {}: negative bias {}", p.channel, v_bias));
    if (v_bias > p.v_max)
        throw DomainError(fmt::format("LED {}: bias {} V above V_max = {} V", p.channel, v_bias, p.v_max));
    const double vt = p.ideality * p.kt() / p.q;
    DcOperatingPoint op;
    op.v_bias = v_bias;
    if (p.r_s == 0.0) {
        if (v_bias / vt > kExpLimit) throw NumericError("diode current overflow");
        op.i_dc = p.i_s * std::expm1(v_bias / vt);
        op.v_j = v_bias;
        return op;
    }
    // f(I) = I - Is (exp((V - Rs I)/vt) - 1) is strictly increasing with a root in [0, V/Rs].
    auto residual = [&](double i) {
        const double arg = (v_bias - p.r_s * i) / vt;
        if (arg > kExpLimit) return -std::numeric_limits<double>::infinity();
        return i - p.i_s * std::expm1(arg);
    };
    double lo = 0.0, hi = v_bias / p.r_s;
    double i = 0.5 * (lo + hi);
    double f = residual(i);
    for (int it = 1; it <= 200; ++it) {
        op.iterations = it;
        if (f > 0.0) hi = i; else lo = i;
        const double arg = (v_bias - p.r_s * i) / vt;
        double next;
        if (std::isfinite(f) && arg <= kExpLimit) {
            const double df = 1.0 + p.i_s * p.r_s / vt * std::exp(arg);
            next = i - f / df;
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        } else {
            next = 0.5 * (lo + hi);
        }
        i = next;
        f = residual(i);
        if (std::abs(f) < 1e-12) {
            op.i_dc = i;
            op.v_j = v_bias - p.r_s * i;
            op.residual = f;
            return op;
        }
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(hi, 1e-300)) break;
    }
    throw NumericError(fmt::format("LED {}: DC solve did not converge at {} V (residual {:.3e} A)",
                                   p.channel, v_bias, f));
}

SmallSignalElements small_signal(const LedParams& p, const DcOperatingPoint& op) {
    const double vj = op.v_j;
    if (vj >= p.v_d)
        throw DomainError(fmt::format("LED {}: V_j = {} V reaches barrier potential {} V", p.channel,
                                      vj, p.v_d));
    const double kt = p.kt();
    const double q = p.q;
    const double n = static_cast<double>(p.wells);
    const double x = carrier_poly(p, vj) / kt;
    const double dp = carrier_poly_slope(p, vj);
    if (!(dp > 0.0))
        throw DomainError(fmt::format("LED {}: carrier polynomial not increasing at V_j = {}",
                                      p.channel, vj));
    const double sp = softplus(x);
    const double sg = logistic(x);
    const double u = q * vj / (p.ideality * kt);
    const double w = q * (vj - p.v_d) / kt;

    SmallSignalElements e;
    e.n_star = density_of_states(p);
    const double ns = e.n_star;

    // r_n in log form: the density n0 e^u and its square may be far outside double range.
    const double ln_dens = std::log(p.n0) + u;
    const double ln_rate = log_add_exp(std::log(p.gamma1), std::log(3.0 * p.gamma3) + 2.0 * ln_dens);
    e.r_n = checked_exp(std::log(p.ideality * kt / (q * q * p.area_c * p.len_c)) - ln_dens - ln_rate,
                        "r_n");

    const double bracket = sg * dp / kt + q / kt * sp;
    e.r_b = checked_exp(std::log(p.tau_b / (q * ns * p.area_b * p.len_b)) - w - std::log(bracket), "r_b");

    const double qw = q * ns * p.area_q * p.len_q * sg * dp;
    e.r_qn = kt / qw / (p.gamma1 + 3.0 * p.gamma3 * (ns * sp) * (ns * sp));
    e.r_qr = kt / (2.0 * ns * ns * qw) / sp;

    const double c_diff = checked_exp(std::log(q * q * p.n0 * p.area_c * p.len_c / (p.ideality * kt)) + u,
                                      "diffusion capacitance");
    const double c_qw = n * q * p.area_q * p.len_q * ns * sg * dp / kt;
    const double k_dep = q * p.eps_q * p.eps_b * p.n_a * p.n_d / (2.0 * (p.eps_q * p.n_d + p.eps_b * p.n_a));
    const double c_dep = p.area_eff * std::sqrt(k_dep / (p.v_d - vj));
    e.c_e = c_diff + c_qw + c_dep;

    e.z_n = e.r_qn / (n * (e.r_n + e.r_b) + e.r_qn);
    // The appendix writes r_q in a3/a4 without defining it; the QW recombination resistance is used.
    const double r_q = e.r_qn;
    const double zl = p.z_s + p.r_s;
    e.a1 = p.eta_ph * p.beta_sp * n * p.r_ph * e.z_n;
    e.a2 = p.r_ph * p.c_ph;
    e.a3 = (r_q + n * e.z_n) * zl + r_q * e.z_n;
    e.a4 = r_q * e.z_n * e.c_e * zl;
    e.a5 = emission_amplitude(p, vj);

    for (double v : {e.r_n, e.r_b, e.r_qn, e.r_qr, e.c_e, e.z_n, e.a1, e.a2, e.a3, e.a4, e.a5})
        if (!std::isfinite(v))
            throw NumericError(fmt::format("LED {}: non-finite small-signal element at V_j = {}",
                                           p.channel, vj));
    return e;
}

std::complex<double> transfer_function(const SmallSignalElements& e, double f) {
    const std::complex<double> s(0.0, 2.0 * constants::pi * f);
    return e.a1 / ((1.0 + e.a2 * s) * (e.a3 + e.a4 * s));
}

std::complex<double> transfer_function(const LedParams& p, double v_bias, double f) {
    return transfer_function(small_signal(p, solve_dc(p, v_bias)), f);
}

double impulse_response(const SmallSignalElements& e, double t) {
    if (t < 0.0) throw DomainError("impulse response requested at negative time");
    const double k1 = e.a3 / e.a4;  // radiative pole
    const double k2 = 1.0 / e.a2;   // photon pole
    // a1/(a4 - a2 a3) [e^{-k1 t} - e^{-k2 t}], rewritten with expm1 so nearly equal poles
    // do not cancel catastrophically; exactly coincident poles give the t e^{-k t} limit.
    double factor;
    if (std::abs(e.a4 - e.a2 * e.a3) < 1e-15 * e.a4) {
        factor = t;
    } else {
        const double d = k2 - k1;
        factor = -std::expm1(-d * t) / d;
    }
    return e.a1 / (e.a2 * e.a4) * std::exp(-k1 * t) * factor;
}

double impulse_response(const LedParams& p, double v_bias, double t) {
    return impulse_response(small_signal(p, solve_dc(p, v_bias)), t);
}

std::vector<double> spectral_shape(const LedParams& p, const std::vector<double>& grid) {
    std::vector<double> g(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double d = (grid[i] - p.lambda0) / p.delta_lambda;
        g[i] = std::exp(-4.0 * d * d);
    }
    return g;
}

double emission_amplitude(const LedParams& p, double vj) {
    const double ns = density_of_states(p);
    const double sp = softplus(carrier_poly(p, vj) / p.kt());
    return static_cast<double>(p.wells) * p.eta_ph * p.r_ph * p.beta_sp * p.q * p.area_q * p.len_q * p.gamma2 *
           ns * ns * sp * sp;
}

Spectrum spectrum(const LedParams& p, double v_bias, const std::vector<double>& grid) {
    // A channel driven at exactly 0 V is switched off; the softplus floor of a5 is not emission.
    if (v_bias == 0.0) return Spectrum{grid, std::vector<double>(grid.size(), 0.0)};
    const double a5 = small_signal(p, solve_dc(p, v_bias)).a5;
    Spectrum s{grid, spectral_shape(p, grid)};
    for (double& v : s.values) v *= a5;
    return s;
}

Spectrum spectrum(const LedParams& p, double v_bias) { return spectrum(p, v_bias, canonical_grid()); }

Spectrum rgby_spectrum(const LedSet& leds, const std::array<double, 4>& v_bias,
                       const std::vector<double>& grid) {
    Spectrum total{grid, std::vector<double>(grid.size(), 0.0)};
    for (std::size_t c = 0; c < leds.size(); ++c) total += spectrum(leds[c], v_bias[c], grid);
    return total;
}

LedParams parse_led_params(const std::string& text, const std::string& origin) {
    LedParams p;
    std::map<std::string, bool> seen;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = csv::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(fmt::format("{}:{}: expected 'name = value'", origin, lineno));
        const std::string key = csv::trim(line.substr(0, eq));
        const std::string val = csv::trim(line.substr(eq + 1));
        const std::string ctx = fmt::format("{}:{}", origin, lineno);
        if (seen.count(key)) throw ConfigError(ctx + ": duplicate key '" + key + "'");
        seen[key] = true;
        if (key == "channel") {
            p.channel = val;
            continue;
        }
        if (key == "n") {
            const double v = csv::to_double(val, ctx);
            if (v != std::floor(v) || v < 1.0) throw ConfigError(ctx + ": n must be a positive integer");
            p.wells = static_cast<int>(v);
            continue;
        }
        bool found = false;
        for (const auto& [name, member] : double_fields()) {
            if (key == name) {
                p.*member = csv::to_double(val, ctx);
                found = true;
                break;
            }
        }
        if (!found) throw ConfigError(ctx + ": unknown key '" + key + "'");
    }
    std::vector<std::string> missing;
    if (!seen.count("channel")) missing.emplace_back("channel");
    if (!seen.count("n")) missing.emplace_back("n");
    for (const auto& [name, member] : double_fields())
        if (!seen.count(name)) missing.emplace_back(name);
    if (!missing.empty()) {
        std::string list;
        for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
        throw ConfigError(origin + ": missing keys: " + list);
    }
    p.validate();
    return p;
}

LedParams load_led_params(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open LED parameter file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_led_params(ss.str(), path.string());
}

std::string format_led_params(const LedParams& p) {
    std::string out = "channel = " + p.channel + "\n";
    out += fmt::format("n = {}\n", p.wells);
    for (const auto& [name, member] : double_fields()) out += fmt::format("{} = {}\n", name, csv::fmt_num(p.*member));
    return out;
}

void save_led_params(const LedParams& p, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write LED parameter file '" + path.string() + "'");
    out << format_led_params(p);
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

bool identical(const LedParams& a, const LedParams& b) {
    if (a.channel != b.channel || a.wells != b.wells) return false;
    for (const auto& [name, member] : double_fields())
        if (std::memcmp(&(a.*member), &(b.*member), sizeof(double)) != 0) return false;
    return true;
}

}  // namespace wdmvlc
