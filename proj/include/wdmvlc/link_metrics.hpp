#ifndef WDMVLC_LINK_METRICS_HPP
#define WDMVLC_LINK_METRICS_HPP

#include <array>
#include <complex>

#include "wdmvlc/led_model.hpp"

namespace wdmvlc {

/// Per-channel modulation settings.
struct SignalSpec {
    std::array<double, 4> p0{};         // baseline average signal power (W)
    std::array<double, 4> g_amp{};      // amplifier gain (linear)
    std::array<double, 4> f_c{};        // central frequency (Hz)
    std::array<double, 4> bandwidth{};  // Hz
    std::array<int, 4> qam{16, 16, 16, 16};
};

struct NoiseModel {
    double sigma2 = 1e-15;  // total electrical noise power (W)
};

struct EnergyReport {
    std::array<double, 4> snr{};
    std::array<double, 4> capacity{};  // bit/s
    double capacity_total = 0.0;
    double p_ill = 0.0;  // W
    double p_com = 0.0;  // W
    double ee = 0.0;     // bit/J
};

double dbm_to_watts(double dbm);

/// |H|^2 G^2 P0 / sigma^2.
double channel_snr(std::complex<double> h_vlc, double g_amp, double p0, const NoiseModel& noise);

/// Sum of B log2(1 + SNR).
double total_capacity(const std::array<double, 4>& snr, const std::array<double, 4>& bandwidth);

/// Sum of V_bias I_DC.
double power_illumination(const std::array<DcOperatingPoint, 4>& ops);

/// Sum of P0 G^2.
double power_communication(const std::array<double, 4>& p0, const std::array<double, 4>& g_amp);

double energy_efficiency(double capacity, double p_ill, double p_com);

/// Assembles the report from per-channel responses and operating points.
EnergyReport energy_report(const std::array<std::complex<double>, 4>& h_vlc, const SignalSpec& sig,
                           const NoiseModel& noise, const std::array<DcOperatingPoint, 4>& ops);

}  // namespace wdmvlc

#endif
