#ifndef WDMVLC_CALIBRATION_HPP
#define WDMVLC_CALIBRATION_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "wdmvlc/led_model.hpp"
#include "wdmvlc/optics.hpp"
#include "wdmvlc/sqp.hpp"

namespace wdmvlc {

struct ElRow {
    double v_bias = 0.0;      // V
    double irradiance = 0.0;  // W/m^2
};

/// DC electroluminescence curve of one channel.
struct ElMeasurement {
    std::string channel;
    std::vector<ElRow> rows;

    /// >= 8 rows, biases inside the LED's window, non-negative irradiance.
    void validate(const LedParams& led) const;
};

struct SweepRow {
    double v_bias = 0.0;         // V
    double frequency = 0.0;      // Hz
    double power_loss_db = 0.0;  // -20 log10 |H_vlc|
};

/// Frequency/bias signal-power-loss surface of one channel.
struct SweepMeasurement {
    std::string channel;
    std::vector<SweepRow> rows;

    /// Rectangular (V, f) grid, frequencies in [3e5, 5e7] Hz, >= 4 distinct frequencies.
    void validate(const LedParams& led) const;
};

/// On-axis test bench: LED facing the detector at `distance`.
struct BenchGeometry {
    double distance = 0.1;  // m
    double mu = 1.5;
    double a_rec = 7.6e-6;  // m^2

    LinkGeometry link() const;
};

struct FitOptions {
    double lower_factor = 0.2;  // bounds as multiples of the initial value
    double upper_factor = 5.0;
    double max_condition = 1e8; // identifiability guard on the scaled Jacobian
    SolverOptions solver{1e-8, 1e-6, 300, true};
    BenchGeometry bench;
};

struct FitResult {
    LedParams params;                  // initial params with fitted values substituted
    std::vector<std::string> free;     // fitted parameter names, mask order
    std::vector<double> values;        // fitted values
    std::vector<std::string> at_bound; // free parameters that ended on a bound
    std::vector<std::string> warnings; // non-fatal problems with the fitted model
    std::vector<double> residuals;     // model - measurement, measurement units
    double rms = 0.0;
    double condition = 0.0;            // scaled Jacobian condition number at the start
    SolveStatus status = SolveStatus::converged;
    int iterations = 0;
    std::vector<TraceRow> trace;
};

/// Parameters that may be freed in each fit.
const std::vector<std::string>& el_fit_parameters();
const std::vector<std::string>& sweep_fit_parameters();

/// Default masks: the pair each data set pins down under realistic noise.
std::vector<std::string> default_el_mask();
std::vector<std::string> default_sweep_mask();

double& parameter_ref(LedParams& p, const std::string& name);
double parameter_value(const LedParams& p, const std::string& name);

/// Irradiance on the bench detector: integral of the emitted spectrum times the Lambertian factor.
double model_irradiance(const LedParams& led, double v_bias, const BenchGeometry& bench);

/// Receiver branch matched to a channel id (R, G, B, Y).
int branch_of(const std::string& channel);

/// -20 log10 |R_ii H_led(V, f) h_c| for the channel's own receiver branch on the bench.
double model_power_loss_db(const LedParams& led, const ReceiverParams& rx, double v_bias, double frequency,
                           const BenchGeometry& bench);

FitResult fit_electroluminescence(const ElMeasurement& data, const LedParams& initial,
                                  const std::vector<std::string>& mask, const FitOptions& opt = {});

/// Run after the EL fit; the emission amplitude stays frozen.
FitResult fit_power_loss(const SweepMeasurement& data, const LedParams& initial, const ReceiverParams& rx,
                         const std::vector<std::string>& mask, const FitOptions& opt = {});

/// Normal deviates from SplitMix64 (Box-Muller), identical on every platform.
class NormalSource {
public:
    explicit NormalSource(std::uint64_t seed) : rng_(seed) {}
    double next();

private:
    SplitMix64 rng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Synthetic EL curve: `rows` equally spaced biases over the window, multiplicative noise.
ElMeasurement synthetic_el(const LedParams& led, int rows, double noise, std::uint64_t seed,
                           const BenchGeometry& bench = {});

/// Synthetic sweep on a bias x log-frequency grid; noise is multiplicative on |H| (additive in dB).
SweepMeasurement synthetic_sweep(const LedParams& led, const ReceiverParams& rx, int biases, int frequencies,
                                 double noise, std::uint64_t seed, const BenchGeometry& bench = {});

/// CSV I/O: `channel,v_bias_volts,irradiance_w_m2` and `channel,v_bias_volts,frequency_hz,power_loss_db`.
std::map<std::string, ElMeasurement> read_el_csv(const std::filesystem::path& path);
std::map<std::string, SweepMeasurement> read_sweep_csv(const std::filesystem::path& path);
std::string format_el_csv(const std::vector<ElMeasurement>& data);
std::string format_sweep_csv(const std::vector<SweepMeasurement>& data);

/// Writes {red,green,blue,yellow}.params and re-reads them to confirm a bit-exact round trip.
void export_reference_set(const std::map<std::string, LedParams>& by_channel, const std::filesystem::path& dir);

/// File stem for a channel id.
std::string channel_file_stem(const std::string& channel);

}  // namespace wdmvlc

#endif
