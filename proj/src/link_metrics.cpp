#include "wdmvlc/link_metrics.hpp"

#include <cmath>

#include "wdmvlc/error.hpp"

namespace wdmvlc {

double dbm_to_watts(double dbm) { return std::pow(10.0, dbm / 10.0 - 3.0); }

double channel_snr(std::complex<double> h_vlc, double g_amp, double p0, const NoiseModel& noise) {
    if (!(noise.sigma2 > 0.0)) throw DomainError("noise power must be positive");
    return std::norm(h_vlc) * g_amp * g_amp * p0 / noise.sigma2;
}

double total_capacity(const std::array<double, 4>& snr, const std::array<double, 4>& bandwidth) {
    double c = 0.0;
    for (int i = 0; i < 4; ++i) {
        if (snr[i] < 0.0) throw DomainError("negative SNR");
        c += bandwidth[i] * std::log2(1.0 + snr[i]);
    }
    return c;
}

double power_illumination(const std::array<DcOperatingPoint, 4>& ops) {
    double p = 0.0;
    for (const auto& op : ops) p += op.v_bias * op.i_dc;
    return p;
}

double power_communication(const std::array<double, 4>& p0, const std::array<double, 4>& g_amp) {
    double p = 0.0;
    for (int i = 0; i < 4; ++i) p += p0[i] * g_amp[i] * g_amp[i];
    return p;
}

double energy_efficiency(double capacity, double p_ill, double p_com) {
    const double total = p_ill + p_com;
    if (!(total > 0.0)) throw DomainError("total power consumption must be positive");
    return capacity / total;
}

EnergyReport energy_report(const std::array<std::complex<double>, 4>& h_vlc, const SignalSpec& sig,
                           const NoiseModel& noise, const std::array<DcOperatingPoint, 4>& ops) {
    EnergyReport r;
    for (int i = 0; i < 4; ++i) {
        r.snr[i] = channel_snr(h_vlc[i], sig.g_amp[i], sig.p0[i], noise);
        r.capacity[i] = sig.bandwidth[i] * std::log2(1.0 + r.snr[i]);
    }
    r.capacity_total = total_capacity(r.snr, sig.bandwidth);
    r.p_ill = power_illumination(ops);
    r.p_com = power_communication(sig.p0, sig.g_amp);
    r.ee = energy_efficiency(r.capacity_total, r.p_ill, r.p_com);
    return r;
}

}  // namespace wdmvlc
