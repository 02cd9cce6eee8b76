#ifndef WDMVLC_COLORIMETRY_HPP
#define WDMVLC_COLORIMETRY_HPP

#include <filesystem>
#include <vector>

#include "wdmvlc/constants.hpp"

namespace wdmvlc {

/// CIE photopic luminosity function and 1931 2-degree colour-matching functions
/// sampled on a common wavelength grid (nm).
struct CieTables {
    std::vector<double> wavelength;
    std::vector<double> v;
    std::vector<double> xbar;
    std::vector<double> ybar;
    std::vector<double> zbar;
};

/// Spectral power density (W/nm) on a wavelength grid (nm).
struct Spectrum {
    std::vector<double> wavelength;
    std::vector<double> values;

    Spectrum& operator+=(const Spectrum& other);
    Spectrum scaled(double k) const;
};

struct Chromaticity {
    double x = 0.0;
    double y = 0.0;
};

/// 380..830 nm, 1 nm step.
std::vector<double> canonical_grid();

/// Uniform grid from lo to hi (inclusive) with the given step.
std::vector<double> uniform_grid(double lo, double hi, double step);

/// Linear interpolation of (xs, ys) at x; zero outside the tabulated range.
double interp(const std::vector<double>& xs, const std::vector<double>& ys, double x);

/// Composite trapezoid rule.
double trapezoid(const std::vector<double>& x, const std::vector<double>& y);

/// Reads photopic_v.csv, cie1931_{x,y,z}bar.csv (header `wavelength_nm,value`)
/// from `dir` and resamples them onto the canonical grid.
CieTables load_cie_tables(const std::filesystem::path& dir);

/// Linearly resamples tables onto another grid (used for refinement checks).
CieTables resample(const CieTables& t, const std::vector<double>& grid);

/// (efficacy / A_rec) * integral V(l) P(l) dl, in lux.
double luminous_flux_to_illuminance(const Spectrum& s, double a_rec, const CieTables& cie,
                                    double efficacy = constants::photopic_efficacy);

/// CIE 1931 chromaticity coordinates of a spectrum.
Chromaticity chromaticity(const Spectrum& s, const CieTables& cie);

/// McCamy's cubic approximation of correlated colour temperature (K).
double cct(const Chromaticity& c);

/// The cubic in n = (x - 0.3320) / (0.1858 - y).
double cct_from_n(double n);

}  // namespace wdmvlc

#endif
