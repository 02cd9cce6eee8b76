#ifndef WDMVLC_SQP_HPP
#define WDMVLC_SQP_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace wdmvlc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Objective and inequality-constraint values (g <= 0 is feasible).
struct NlpValues {
    double f = 0.0;
    VectorXd g;
};

/// Dense nonlinear program: minimize f(x) s.t. g(x) <= 0, lower <= x <= upper.
struct NlpProblem {
    Eigen::Index n = 0;
    Eigen::Index m = 0;
    VectorXd lower;
    VectorXd upper;
    std::function<NlpValues(const VectorXd&)> evaluate;
    /// Optional analytic derivatives; finite differences are used when empty.
    std::function<void(const VectorXd&, VectorXd& grad, MatrixXd& jac)> derivatives;
};

/// Central differences with step 1e-6 max(1, |x_i|); one-sided next to a bound.
void fd_derivatives(const NlpProblem& p, const VectorXd& x, const NlpValues& at_x, VectorXd& grad,
                    MatrixXd& jac);

enum class QpStatus { optimal, infeasible, max_iterations };

struct QpResult {
    VectorXd p;
    VectorXd mu;        // multipliers of G p <= h
    VectorXd mu_lower;  // multipliers of p >= lower
    VectorXd mu_upper;  // multipliers of p <= upper
    QpStatus status = QpStatus::optimal;
    int iterations = 0;
    double relaxation = 0.0;  // uniform amount added to h by the elastic mode
};

/// Primal active-set solve of min 1/2 p'Hp + c'p s.t. G p <= h, lower <= p <= upper.
/// H must be symmetric positive definite. Infinite bounds are ignored.
QpResult solve_qp(const MatrixXd& H, const VectorXd& c, const MatrixXd& G, const VectorXd& h,
                  const VectorXd& lower, const VectorXd& upper, int max_iterations = 500);
QpResult solve_qp(const MatrixXd& H, const VectorXd& c, const MatrixXd& G, const VectorXd& h);

/// As solve_qp, but when the linearization is infeasible first minimizes the uniform violation t
/// and then solves the QP with h relaxed by t.
QpResult solve_qp_elastic(const MatrixXd& H, const VectorXd& c, const MatrixXd& G, const VectorXd& h,
                          const VectorXd& lower, const VectorXd& upper);

/// Damped BFGS (Powell damping when s'y < 0.2 s'Hs). Returns H unchanged if ||s|| < 1e-14.
MatrixXd bfgs_update(const MatrixXd& H, const VectorXd& s, const VectorXd& y, bool* skipped = nullptr,
                     bool* damped = nullptr);

struct LineSearchResult {
    double alpha = 1.0;
    double merit = 0.0;
    bool ok = true;
    bool not_descent = false;  // direction was not a descent direction; full step taken
    int evaluations = 0;
};

/// Backtracking Armijo search on phi over alpha in {1, 1/2, ..., 2^-20}.
LineSearchResult line_search(const std::function<double(double)>& phi_of_alpha, double phi0,
                             double dphi0);

enum class SolveStatus { converged, max_iterations, infeasible_subproblem, line_search_failure };

std::string to_string(SolveStatus s);

struct SolverOptions {
    double tolerance = 1e-6;
    double feasibility_tolerance = 1e-6;
    int max_iterations = 200;
    bool keep_trace = true;
};

struct TraceRow {
    int iter = 0;
    double f = 0.0;
    double kkt = 0.0;
    double alpha = 0.0;
    double max_violation = 0.0;
};

struct SolveOutcome {
    VectorXd x;
    VectorXd mu;        // constraint multipliers
    VectorXd mu_lower;  // bound multipliers
    VectorXd mu_upper;
    SolveStatus status = SolveStatus::max_iterations;
    double f = 0.0;
    VectorXd g;
    double max_violation = 0.0;
    double kkt = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool hessian_spd = true;   // every Cholesky of H succeeded
    bool merit_monotone = true;
    std::vector<TraceRow> trace;
};

/// max(||grad f + G' mu||_inf, max mu_i |g_i|, max g_i^+), bounds included as constraints.
double kkt_residual(const VectorXd& grad, const MatrixXd& jac, const VectorXd& g, const VectorXd& mu,
                    const VectorXd& x, const VectorXd& lower, const VectorXd& upper,
                    const VectorXd& mu_lower, const VectorXd& mu_upper);

SolveOutcome sqp_solve(const NlpProblem& problem, const VectorXd& x0, const SolverOptions& opt = {});

std::string trace_csv(const std::vector<TraceRow>& trace);

/// Deterministic 64-bit generator (splitmix64) so start points are identical on every platform.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next();
    /// Uniform in [0, 1) with 53 random bits.
    double uniform();
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

private:
    std::uint64_t state_;
};

/// Box center followed by k - 1 Latin-hypercube samples of the bounds box.
std::vector<VectorXd> start_points(const VectorXd& lower, const VectorXd& upper, int k, std::uint64_t seed);

struct MultiStartOutcome {
    std::optional<SolveOutcome> best;     // best feasible outcome by objective
    std::vector<SolveOutcome> runs;       // every start, in start order
    std::string failure_report;           // filled when no start is feasible
};

/// Runs sqp_solve from `extra_starts` followed by start_points(k, seed).
MultiStartOutcome multi_start(const NlpProblem& problem, int k, std::uint64_t seed,
                              const SolverOptions& opt = {}, const std::vector<VectorXd>& extra_starts = {});

struct KktCheck {
    bool passed = false;
    double stationarity = 0.0;
    double complementarity = 0.0;
    double violation = 0.0;
    VectorXd multipliers;  // constraint multipliers re-estimated by NNLS
};

/// Independent first-order check: own Richardson finite differences, active set from the point,
/// multipliers by non-negative least squares. Does not use solver state.
KktCheck verify_kkt(const NlpProblem& problem, const VectorXd& x, double tolerance);

/// Lawson-Hanson non-negative least squares: min ||A z - b|| s.t. z >= 0.
VectorXd nnls(const MatrixXd& A, const VectorXd& b);

}  // namespace wdmvlc

#endif
