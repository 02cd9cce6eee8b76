#include "wdmvlc/optics.hpp"

#include <cmath>

#include <fmt/format.h>

#include "wdmvlc/csv.hpp"
#include "wdmvlc/error.hpp"

namespace wdmvlc {

LinkGeometry geometry_from_positions(const std::array<double, 3>& tx, const std::array<double, 3>& rx,
                                     double mu, double fov, double a_rec) {
    LinkGeometry g;
    g.tx = tx;
    g.rx = rx;
    g.mu = mu;
    g.fov = fov;
    g.a_rec = a_rec;
    const double dx = tx[0] - rx[0], dy = tx[1] - rx[1], dz = tx[2] - rx[2];
    g.distance = std::sqrt(dx * dx + dy * dy + dz * dz);
    if (!(g.distance > 0.0)) throw DomainError("transmitter and receiver coincide");
    if (!(dz > 0.0)) throw DomainError("receiver must lie below the luminaire");
    g.psi = std::acos(std::min(1.0, dz / g.distance));
    g.theta = g.psi;
    return g;
}

double lambertian_order(double semi_angle) {
    if (!(semi_angle > 0.0) || !(semi_angle < constants::pi / 2.0))
        throw DomainError("semi-angle must lie strictly between 0 and pi/2");
    return -std::log(2.0) / std::log(std::cos(semi_angle));
}

double geometric_factor(const LinkGeometry& g) {
    if (!(g.distance > 0.0)) throw DomainError("link distance must be positive");
    if (g.psi > g.fov) return 0.0;
    return (g.mu + 1.0) * std::pow(std::cos(g.psi), g.mu) * std::cos(g.theta) /
           (2.0 * constants::pi * g.distance * g.distance);
}

double channel_gain(const LinkGeometry& g) { return g.a_rec * geometric_factor(g); }

std::vector<double> ReceiverParams::flat_responsivity(double value, std::vector<double>& wavelength) {
    wavelength = canonical_grid();
    return std::vector<double>(wavelength.size(), value);
}

void ReceiverParams::set_flat_responsivity(double value) {
    responsivity = flat_responsivity(value, responsivity_wavelength);
}

void ReceiverParams::validate() const {
    if (filter_loss < 0.0 || filter_loss > 1.0) throw ConfigError("filter loss must lie in [0, 1]");
    for (double w : filter_width)
        if (!(w > 0.0)) throw ConfigError("filter bandwidths must be positive");
    if (responsivity.size() != responsivity_wavelength.size() || responsivity.size() < 2)
        throw ConfigError("responsivity curve is missing or malformed");
    for (double k : responsivity)
        if (!(k >= 0.0)) throw ConfigError("responsivity must be non-negative");
    if (!(g_tia > 0.0) || !(g_opt > 0.0)) throw ConfigError("receiver gains must be positive");
}

void load_responsivity(const std::filesystem::path& path, ReceiverParams& rx) {
    const auto t = csv::read(path);
    const auto cw = t.column("wavelength_nm");
    const auto cr = t.column("responsivity_a_per_w");
    rx.responsivity_wavelength.clear();
    rx.responsivity.clear();
    for (const auto& r : t.rows) {
        rx.responsivity_wavelength.push_back(csv::to_double(r[cw], path.string()));
        rx.responsivity.push_back(csv::to_double(r[cr], path.string()));
    }
    for (std::size_t i = 1; i < rx.responsivity_wavelength.size(); ++i)
        if (!(rx.responsivity_wavelength[i] > rx.responsivity_wavelength[i - 1]))
            throw ConfigError(path.string() + ": wavelength column is not strictly increasing");
    rx.validate();
}

double receiver_channel_gain(const ReceiverParams& rx, int branch, const std::vector<double>& shape,
                             const std::vector<double>& grid) {
    if (branch < 0 || branch > 3) throw DomainError("receiver branch index out of range");
    const double lc = rx.filter_center[branch];
    const double half = 0.5 * rx.filter_width[branch];
    if (lc - half < constants::lambda_min || lc + half > constants::lambda_max)
        throw DomainError(fmt::format("filter band {}..{} nm leaves the 380..830 nm grid", lc - half,
                                      lc + half));
    std::vector<double> rect(grid.size()), weighted(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double d = std::abs(grid[i] - lc);
        // rect(x) = 1 inside, 1/2 on the edge, so the trapezoid rule integrates the band width exactly.
        rect[i] = d < half ? 1.0 : (d == half ? 0.5 : 0.0);
        weighted[i] = interp(rx.responsivity_wavelength, rx.responsivity, grid[i]) * rect[i] * shape[i];
    }
    if (!(trapezoid(grid, rect) > 0.0)) throw DomainError("filter band does not overlap the wavelength grid");
    return rx.g_tia * rx.g_opt * rx.filter_loss * trapezoid(grid, weighted);
}

Eigen::Matrix4d receiver_matrix(const ReceiverParams& rx, const LedSet& leds,
                                const std::vector<double>& grid) {
    Eigen::Matrix4d r = Eigen::Matrix4d::Zero();
    for (int j = 0; j < 4; ++j) {
        const auto shape = spectral_shape(leds[j], grid);
        for (int i = 0; i < 4; ++i)
            if (i == j || rx.crosstalk) r(i, j) = receiver_channel_gain(rx, i, shape, grid);
    }
    return r;
}

std::array<std::complex<double>, 4> system_response(const LedSet& leds, const Eigen::Matrix4d& rmat,
                                                     const LinkGeometry& geom,
                                                     const std::array<double, 4>& v_bias,
                                                     const std::array<double, 4>& freq) {
    std::array<std::complex<double>, 4> out{};
    const double hc = channel_gain(geom);
    if (hc == 0.0) return out;
    std::array<SmallSignalElements, 4> el;
    for (int j = 0; j < 4; ++j) el[j] = small_signal(leds[j], solve_dc(leds[j], v_bias[j]));
    for (int i = 0; i < 4; ++i) {
        std::complex<double> acc = 0.0;
        for (int j = 0; j < 4; ++j)
            if (rmat(i, j) != 0.0) acc += rmat(i, j) * transfer_function(el[j], freq[i]);
        out[i] = acc * hc;
    }
    return out;
}

std::array<std::complex<double>, 4> system_response(const LedSet& leds, const ReceiverParams& rx,
                                                     const LinkGeometry& geom,
                                                     const std::array<double, 4>& v_bias, double freq) {
    return system_response(leds, receiver_matrix(rx, leds, canonical_grid()), geom, v_bias,
                           {freq, freq, freq, freq});
}

double received_illuminance(const LedSet& leds, const LinkGeometry& geom,
                            const std::array<double, 4>& v_bias, const CieTables& cie, double efficacy) {
    const double hc = channel_gain(geom);
    if (hc == 0.0) return 0.0;
    double total = 0.0;
    for (int c = 0; c < 4; ++c) {
        total += luminous_flux_to_illuminance(spectrum(leds[c], v_bias[c], cie.wavelength).scaled(hc),
                                              geom.a_rec, cie, efficacy);
    }
    return total;
}

}  // namespace wdmvlc
