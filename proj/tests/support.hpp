#ifndef WDMVLC_TESTS_SUPPORT_HPP
#define WDMVLC_TESTS_SUPPORT_HPP

#include <cmath>
#include <functional>
#include <vector>

#include "wdmvlc/ee_problem.hpp"

namespace testing_support {

inline const wdmvlc::SystemModel& reference_model() {
    static const wdmvlc::SystemModel m =
        wdmvlc::load_system_model(WDMVLC_DATA_DIR, std::string(WDMVLC_DATA_DIR) + "/reference");
    return m;
}

/// Composite Simpson on [a, b] with n (even) intervals; independent of the library's trapezoid rule.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
    if (n % 2) ++n;
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

inline std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
    return v;
}

inline std::vector<double> logspace(double a, double b, int n) {
    std::vector<double> v = linspace(std::log10(a), std::log10(b), n);
    for (double& x : v) x = std::pow(10.0, x);
    return v;
}

/// Receiver straight below the luminaire at distance d.
inline wdmvlc::LinkGeometry on_axis(double d, double mu = 1.5, double a_rec = 7.6e-6) {
    return wdmvlc::geometry_from_positions({0.0, 0.0, d}, {0.0, 0.0, 0.0}, mu, wdmvlc::constants::pi / 3.0, a_rec);
}

}  // namespace testing_support

#endif
