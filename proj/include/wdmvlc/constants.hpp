#ifndef WDMVLC_CONSTANTS_HPP
#define WDMVLC_CONSTANTS_HPP

namespace wdmvlc::constants {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double q = 1.602176634e-19;      // C
inline constexpr double k_b = 1.380649e-23;       // J/K
inline constexpr double hbar = 1.054571817e-34;   // J s
inline constexpr double m_e = 9.1093837015e-31;   // kg

/// Maximum luminous efficacy of photopic vision (lm/W).
inline constexpr double photopic_efficacy = 683.0;

/// Canonical wavelength grid: 380..830 nm in 1 nm steps.
inline constexpr double lambda_min = 380.0;
inline constexpr double lambda_max = 830.0;
inline constexpr int grid_points = 451;

}  // namespace wdmvlc::constants

#endif
