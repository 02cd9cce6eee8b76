#ifndef WDMVLC_EE_PROBLEM_HPP
#define WDMVLC_EE_PROBLEM_HPP

#include <array>
#include <complex>
#include <filesystem>

#include <Eigen/Dense>

#include "wdmvlc/colorimetry.hpp"
#include "wdmvlc/led_model.hpp"
#include "wdmvlc/link_metrics.hpp"
#include "wdmvlc/optics.hpp"
#include "wdmvlc/sqp.hpp"

namespace wdmvlc {

/// Decision vector X = (V_bias R,G,B,Y, G_amp R,G,B,Y).
struct SystemConfig {
    std::array<double, 4> v_bias{};
    std::array<double, 4> g_amp{};

    VectorXd to_vector() const;
    static SystemConfig from_vector(const VectorXd& x);
};

/// Right-hand sides of the illumination and QoS constraints.
struct ConstraintSpec {
    double phi_req = 200.0;  // lx
    double cct_req = 5000.0; // K
    double ber_req = 1e-5;
    std::array<int, 4> qam{16, 16, 16, 16};
    std::array<double, 4> f_c{10e6, 10e6, 10e6, 10e6};  // Hz
    LinkGeometry geom;

    void validate() const;
};

/// Everything the forward model needs apart from the decision vector.
struct SystemModel {
    LedSet leds;
    ReceiverParams rx;
    CieTables cie;
    double efficacy = constants::photopic_efficacy;
    double p0 = 0.0;             // W, per channel
    NoiseModel noise;
    double bandwidth = 3.84e6;   // Hz, per channel
    double g_min = 1.0;
    double g_max = 10.0;
    Eigen::Matrix4d rmat = Eigen::Matrix4d::Zero();  // receiver matrix, cached by refresh()

    /// Recomputes the receiver matrix after leds or rx change.
    void refresh();
    VectorXd lower_bounds() const;
    VectorXd upper_bounds() const;
};

/// Loads the CIE tables from `data_dir/cie`, the four LEDs from `params_dir/{red,green,blue,yellow}.params`
/// and applies the default receiver (flat 0.5 A/W responsivity) and a 2 dBm baseline signal power.
SystemModel load_system_model(const std::filesystem::path& data_dir, const std::filesystem::path& params_dir);

/// Forward-model outputs at one configuration.
struct Evaluation {
    std::array<DcOperatingPoint, 4> ops{};
    std::array<std::complex<double>, 4> h_vlc{};
    EnergyReport report;
    double illuminance = 0.0;  // lx
    Chromaticity xy;
    double cct = 0.0;          // K
    std::array<double, 4> ber{};
    std::array<double, 4> log10_ber{};
};

Evaluation evaluate(const SystemModel& model, const ConstraintSpec& spec, const SystemConfig& cfg);

/// Standard normal tail probability 0.5 erfc(x / sqrt 2).
double q_function(double x);
/// Natural log of Q(x); accurate where Q underflows.
double log_q_function(double x);

/// Square/cross QAM error probability; M must be 4, 16, 32 or 64.
double ber(int qam, double snr);
double log10_ber(int qam, double snr);

enum class Objective { max_ee, min_power };

/// Scales that keep the objective O(1) for the solver.
struct ObjectiveScaling {
    double ee = 1e9;     // bit/J
    double power = 0.1;  // W
};

/// Scaled constraint vector (illuminance, BER R, G, B, Y, CCT); feasible iff all <= 0.
VectorXd constraint_values(const Evaluation& ev, const ConstraintSpec& spec);

/// Eight variables, six constraints, bounds [V_th, V_max] and [g_min, g_max].
/// `model` is captured by reference and must outlive the returned problem.
NlpProblem build_problem(const SystemModel& model, const ConstraintSpec& spec,
                         Objective objective = Objective::max_ee, const ObjectiveScaling& scaling = {});

/// Finite-difference gradient of f and Jacobian of g (central; one-sided next to a bound).
void gradient(const NlpProblem& problem, const VectorXd& x, VectorXd& grad, MatrixXd& jac);

}  // namespace wdmvlc

#endif
