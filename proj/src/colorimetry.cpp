#include "wdmvlc/colorimetry.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "wdmvlc/csv.hpp"
#include "wdmvlc/error.hpp"

namespace wdmvlc {

namespace {

void require_same_grid(const Spectrum& s, const CieTables& cie) {
    if (s.wavelength.size() != cie.wavelength.size() || s.values.size() != s.wavelength.size())
        throw DomainError("spectrum and CIE tables use different wavelength grids");
    for (std::size_t i = 0; i < s.wavelength.size(); ++i)
        if (s.wavelength[i] != cie.wavelength[i])
            throw DomainError("spectrum and CIE tables use different wavelength grids");
}

double weighted_integral(const Spectrum& s, const std::vector<double>& w) {
    std::vector<double> prod(s.values.size());
    for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = s.values[i] * w[i];
    return trapezoid(s.wavelength, prod);
}

std::vector<double> load_column(const std::filesystem::path& file, const std::vector<double>& grid,
                                double max_value) {
    const auto t = csv::read(file);
    const auto cw = t.column("wavelength_nm");
    const auto cv = t.column("value");
    std::vector<double> wl, val;
    for (const auto& r : t.rows) {
        wl.push_back(csv::to_double(r[cw], file.string()));
        val.push_back(csv::to_double(r[cv], file.string()));
    }
    if (wl.size() < 2) throw ConfigError(file.string() + ": too few rows");
    for (std::size_t i = 1; i < wl.size(); ++i)
        if (!(wl[i] > wl[i - 1]))
            throw ConfigError(file.string() + ": wavelength column is not strictly increasing");
    for (double v : val)
        if (!(v >= 0.0) || v > max_value)
            throw ConfigError(fmt::format("{}: value {} outside physical range [0, {}]",
                                          file.string(), v, max_value));
    if (wl.front() > grid.front() || wl.back() < grid.back())
        throw ConfigError(file.string() + ": table does not cover 380..830 nm");
    std::vector<double> out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) out[i] = interp(wl, val, grid[i]);
    return out;
}

}  // namespace

Spectrum& Spectrum::operator+=(const Spectrum& other) {
    if (values.empty()) {
        *this = other;
        return *this;
    }
    if (other.values.size() != values.size())
        throw DomainError("cannot add spectra on different grids");
    for (std::size_t i = 0; i < values.size(); ++i) values[i] += other.values[i];
    return *this;
}

Spectrum Spectrum::scaled(double k) const {
    Spectrum out = *this;
    for (double& v : out.values) v *= k;
    return out;
}

std::vector<double> uniform_grid(double lo, double hi, double step) {
    const auto n = static_cast<std::size_t>(std::llround((hi - lo) / step)) + 1;
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = lo + step * static_cast<double>(i);
    return g;
}

std::vector<double> canonical_grid() {
    return uniform_grid(constants::lambda_min, constants::lambda_max, 1.0);
}

double interp(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    if (xs.empty() || x < xs.front() || x > xs.back()) return 0.0;
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    if (it == xs.end()) return ys.back();
    const auto j = static_cast<std::size_t>(it - xs.begin());
    const auto i = j - 1;
    const double t = (x - xs[i]) / (xs[j] - xs[i]);
    return ys[i] + t * (ys[j] - ys[i]);
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
    double acc = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) acc += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    return acc;
}

CieTables load_cie_tables(const std::filesystem::path& dir) {
    CieTables t;
    t.wavelength = canonical_grid();
    t.v = load_column(dir / "photopic_v.csv", t.wavelength, 1.0 + 1e-9);
    t.xbar = load_column(dir / "cie1931_xbar.csv", t.wavelength, 10.0);
    t.ybar = load_column(dir / "cie1931_ybar.csv", t.wavelength, 10.0);
    t.zbar = load_column(dir / "cie1931_zbar.csv", t.wavelength, 10.0);
    return t;
}

CieTables resample(const CieTables& t, const std::vector<double>& grid) {
    CieTables out;
    out.wavelength = grid;
    for (double l : grid) {
        out.v.push_back(interp(t.wavelength, t.v, l));
        out.xbar.push_back(interp(t.wavelength, t.xbar, l));
        out.ybar.push_back(interp(t.wavelength, t.ybar, l));
        out.zbar.push_back(interp(t.wavelength, t.zbar, l));
    }
    return out;
}

double luminous_flux_to_illuminance(const Spectrum& s, double a_rec, const CieTables& cie,
                                    double efficacy) {
    if (!(a_rec > 0.0)) throw DomainError("receiver area must be positive");
    require_same_grid(s, cie);
    return efficacy / a_rec * weighted_integral(s, cie.v);
}

Chromaticity chromaticity(const Spectrum& s, const CieTables& cie) {
    require_same_grid(s, cie);
    const double X = weighted_integral(s, cie.xbar);
    const double Y = weighted_integral(s, cie.ybar);
    const double Z = weighted_integral(s, cie.zbar);
    const double sum = X + Y + Z;
    if (!(sum > 0.0)) throw DomainError("spectrum has zero total tristimulus value");
    return {X / sum, Y / sum};
}

double cct_from_n(double n) { return ((437.0 * n + 3601.0) * n + 6861.0) * n + 5517.0; }

double cct(const Chromaticity& c) {
    const double den = 0.1858 - c.y;
    if (std::abs(den) < 1e-12) throw DomainError("CCT undefined for y = 0.1858");
    return cct_from_n((c.x - 0.3320) / den);
}

}  // namespace wdmvlc
