#ifndef WDMVLC_OPTICS_HPP
#define WDMVLC_OPTICS_HPP

#include <array>
#include <complex>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "wdmvlc/colorimetry.hpp"
#include "wdmvlc/led_model.hpp"

namespace wdmvlc {

/// Line-of-sight link between a ceiling luminaire and a photodetector.
struct LinkGeometry {
    std::array<double, 3> tx{0.0, 0.0, 2.0};
    std::array<double, 3> rx{0.0, 0.0, 0.0};
    double psi = 0.0;       // transmit angle (rad)
    double theta = 0.0;     // receive angle (rad)
    double distance = 2.0;  // m
    double mu = 1.5;        // Lambertian order
    double fov = constants::pi / 3.0;  // receiver field of view (rad)
    double a_rec = 7.6e-6;  // receiver effective area (m^2)
};

/// Downward-facing LED at `tx`, upward-facing receiver at `rx`: cos(psi) = cos(theta) = h / D.
LinkGeometry geometry_from_positions(const std::array<double, 3>& tx, const std::array<double, 3>& rx,
                                     double mu, double fov, double a_rec);

/// mu = -ln 2 / ln(cos Psi) for the half-power semi-angle Psi.
double lambertian_order(double semi_angle);

/// (mu + 1) cos^mu(psi) cos(theta) / (2 pi D^2) inside the FOV, else 0 (per m^2 of receiver).
double geometric_factor(const LinkGeometry& g);

/// Lambertian DC gain h_c = A_rec * geometric_factor.
double channel_gain(const LinkGeometry& g);

/// Four-branch WDM receiver: rectangular filters, photodiode responsivity, TIA, concentrator.
struct ReceiverParams {
    std::array<double, 4> filter_center{629.0, 525.0, 460.0, 556.0};  // nm
    std::array<double, 4> filter_width{20.0, 20.0, 20.0, 20.0};       // nm
    double filter_loss = 0.8;   // transmission Gamma_p
    std::vector<double> responsivity_wavelength;  // nm
    std::vector<double> responsivity;             // A/W
    double g_tia = 27.0;        // V/A
    double g_opt = 100.0;       // concentrator gain
    bool crosstalk = true;      // full matrix vs diagonal only

    /// Flat responsivity curve over 380..830 nm.
    static std::vector<double> flat_responsivity(double value, std::vector<double>& wavelength);
    void set_flat_responsivity(double value);
    void validate() const;
};

/// Reads `wavelength_nm,responsivity_a_per_w`.
void load_responsivity(const std::filesystem::path& path, ReceiverParams& rx);

/// G_TIA G_opt Gamma_p * integral kappa(l) rect((l - lc)/dl) shape(l) dl for receiver branch `branch`.
double receiver_channel_gain(const ReceiverParams& rx, int branch, const std::vector<double>& shape,
                             const std::vector<double>& grid);

/// R(i, j): branch i's gain for source channel j (unit-peak Gaussian shapes).
Eigen::Matrix4d receiver_matrix(const ReceiverParams& rx, const LedSet& leds,
                                const std::vector<double>& grid);

/// H_vlc,i = sum_j R(i, j) H_led,j(f_i) h_c, with branch i evaluated at its own frequency f_i.
std::array<std::complex<double>, 4> system_response(const LedSet& leds, const Eigen::Matrix4d& rmat,
                                                     const LinkGeometry& geom,
                                                     const std::array<double, 4>& v_bias,
                                                     const std::array<double, 4>& freq);
std::array<std::complex<double>, 4> system_response(const LedSet& leds, const ReceiverParams& rx,
                                                     const LinkGeometry& geom,
                                                     const std::array<double, 4>& v_bias, double freq);

/// Illuminance at the receiver from all four channels (lx).
double received_illuminance(const LedSet& leds, const LinkGeometry& geom,
                            const std::array<double, 4>& v_bias, const CieTables& cie,
                            double efficacy = constants::photopic_efficacy);

}  // namespace wdmvlc

#endif
