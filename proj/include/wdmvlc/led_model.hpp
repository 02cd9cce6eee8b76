#ifndef WDMVLC_LED_MODEL_HPP
#define WDMVLC_LED_MODEL_HPP

#include <array>
#include <complex>
#include <filesystem>
#include <string>

#include "wdmvlc/colorimetry.hpp"
#include "wdmvlc/constants.hpp"

namespace wdmvlc {

/// Physical and fitted parameters of one multi-quantum-well sub-LED (SI units,
/// wavelengths in nm).
struct LedParams {
    std::string channel = "red";

    // Carrier-density polynomial P(V) = alpha1 V + alpha2 V^2 + alpha3 V^3 (J).
    double alpha1 = 0.0, alpha2 = 0.0, alpha3 = 0.0;
    // Recombination coefficients: SRH (1/s), radiative (m^3/s), Auger (m^6/s).
    double gamma1 = 0.0, gamma2 = 0.0, gamma3 = 0.0;
    // Layer cross-sections and effective junction area (m^2).
    double area_c = 0.0, area_q = 0.0, area_b = 0.0, area_eff = 0.0;
    // Layer thicknesses (m).
    double len_c = 0.0, len_q = 0.0, len_b = 0.0;
    int wells = 1;
    double beta_sp = 0.0;   // spontaneous-emission coefficient
    double eta_ph = 0.0;    // photon extraction rate
    double r_ph = 0.0;      // photon-branch resistance (ohm)
    double c_ph = 0.0;      // photon-branch capacitance (F)
    double tau_ph = 0.0;    // photon lifetime (s), informational
    double tau_b = 0.0;     // barrier transport time (s)
    double ideality = 2.0;  // diode ideality factor eta
    double i_s = 0.0;       // saturation current (A)
    double r_s = 0.0;       // series resistance (ohm)
    double z_s = 50.0;      // source impedance (ohm)
    double m_eff = 0.0;     // effective mass (kg)
    double temperature = 300.0;
    double v_d = 0.0;       // barrier potential (V)
    double n_a = 0.0, n_d = 0.0;  // doping densities (1/m^3)
    double eps_q = 0.0, eps_b = 0.0;
    double n0 = 0.0;        // carrier reference density (1/m^3)
    double q = constants::q;
    double k_b = constants::k_b;
    double hbar = constants::hbar;
    double lambda0 = 550.0;       // emission peak (nm)
    double delta_lambda = 50.0;   // spectral width (nm)
    double v_th = 0.0, v_max = 0.0;  // valid bias window (V)

    double kt() const { return k_b * temperature; }
    /// Validates positivity and window invariants; throws ConfigError.
    void validate() const;
};

using LedSet = std::array<LedParams, 4>;

struct DcOperatingPoint {
    double v_bias = 0.0;
    double i_dc = 0.0;
    double v_j = 0.0;
    int iterations = 0;
    double residual = 0.0;
};

struct SmallSignalElements {
    double r_n = 0.0, r_b = 0.0, r_qn = 0.0, r_qr = 0.0;
    double c_e = 0.0;
    double z_n = 0.0;
    double n_star = 0.0;
    double a1 = 0.0, a2 = 0.0, a3 = 0.0, a4 = 0.0, a5 = 0.0;
};

/// Polynomial P(V_j) and its derivative.
double carrier_poly(const LedParams& p, double vj);
double carrier_poly_slope(const LedParams& p, double vj);

/// Sheet density of states n* = m* kT / (pi hbar^2 L_q).
double density_of_states(const LedParams& p);

/// Shockley diode with series resistance; Newton with bisection safeguard.
DcOperatingPoint solve_dc(const LedParams& p, double v_bias);

SmallSignalElements small_signal(const LedParams& p, const DcOperatingPoint& op);

/// Peak spectral power a5 at junction voltage vj. Unlike small_signal it needs no slope condition
/// on the carrier polynomial, so it stays defined for any alpha coefficients.
double emission_amplitude(const LedParams& p, double vj);

/// H(s) = a1 / ((1 + a2 s)(a3 + a4 s)), s = j 2 pi f.
std::complex<double> transfer_function(const SmallSignalElements& e, double f);
std::complex<double> transfer_function(const LedParams& p, double v_bias, double f);

/// Inverse Laplace transform of H(s) (1/s units).
double impulse_response(const SmallSignalElements& e, double t);
double impulse_response(const LedParams& p, double v_bias, double t);

/// Unit-peak Gaussian exp(-4 (l - l0)^2 / dl^2) on the given grid.
std::vector<double> spectral_shape(const LedParams& p, const std::vector<double>& grid);

/// a5 * unit-peak Gaussian, W/nm.
Spectrum spectrum(const LedParams& p, double v_bias, const std::vector<double>& grid);
Spectrum spectrum(const LedParams& p, double v_bias);

/// Element-wise sum of the four channel spectra.
Spectrum rgby_spectrum(const LedSet& leds, const std::array<double, 4>& v_bias,
                       const std::vector<double>& grid);

/// Flat `name = value` serialization (17 significant digits, round-trips exactly).
LedParams load_led_params(const std::filesystem::path& path);
LedParams parse_led_params(const std::string& text, const std::string& origin = "<string>");
std::string format_led_params(const LedParams& p);
void save_led_params(const LedParams& p, const std::filesystem::path& path);

/// Field-by-field bitwise equality.
bool identical(const LedParams& a, const LedParams& b);

}  // namespace wdmvlc

#endif
