#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "wdmvlc/error.hpp"

using namespace wdmvlc;
using testing_support::reference_model;

namespace {

ConstraintSpec centre_spec() {
    ConstraintSpec s;
    s.geom = testing_support::on_axis(2.0);
    return s;
}

}  // namespace

TEST_SUITE("ee-problem") {

TEST_CASE("QAM error probability") {
    CHECK(ber(4, 0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(ber(4, 100.0) < 1e-10);
    // erfc(2) from tables: Q(sqrt 8) = erfc(2) / 2.
    CHECK(ber(16, 10.0) == doctest::Approx(0.75 * 0.5 * 0.004677734981047266).epsilon(1e-12));
    CHECK_THROWS_AS(ber(8, 1.0), DomainError);
    CHECK_THROWS_AS(ber(16, -1.0), DomainError);

    for (int m : {4, 16, 32, 64}) {
        double prev = 1.0;
        for (double s : testing_support::linspace(0.0, 100.0, 201)) {
            const double b = ber(m, s);
            if (s > 0.0) CHECK(b < prev);
            prev = b;
        }
    }
    // The prefactor 4/log2(M)(1 - 1/sqrt M) falls with M, so below SNR ~0.5 (BER > 0.2, outside the
    // approximation's useful range) the ordering in M inverts; check it where the formula is meaningful.
    for (double s : testing_support::linspace(0.5, 100.0, 200)) {
        CHECK(ber(4, s) < ber(16, s));
        CHECK(ber(16, s) < ber(32, s));
        CHECK(ber(32, s) < ber(64, s));
    }
}

TEST_CASE("log-domain BER matches and extends the direct form") {
    for (int m : {4, 16, 32, 64})
        for (double s : {0.5, 5.0, 50.0, 200.0})
            CHECK(log10_ber(m, s) == doctest::Approx(std::log10(ber(m, s))).epsilon(1e-10));
    // Far tail where Q underflows: asymptotic Q(x) ~ phi(x)/x (1 - 1/x^2 + 3/x^4).
    const double x = 60.0;
    const double oracle = -x * x / 2.0 - std::log(x * std::sqrt(2.0 * constants::pi)) + std::log1p(-1.0 / (x * x) + 3.0 / std::pow(x, 4));
    CHECK(log_q_function(x) == doctest::Approx(oracle).epsilon(1e-9));
    CHECK(std::isfinite(log10_ber(16, 1e5)));
}

TEST_CASE("problem shape and signs") {
    const auto& m = reference_model();
    const auto spec = centre_spec();
    const auto prob = build_problem(m, spec);
    CHECK(prob.n == 8);
    CHECK(prob.m == 6);
    const auto at_max = prob.evaluate(prob.upper);
    CHECK(at_max.g.size() == 6);
    CHECK(at_max.g(0) < 0.0);

    // Feasible point => all g <= 0, and g(0) is the scaled illuminance shortfall.
    SystemConfig sc = SystemConfig::from_vector(prob.upper);
    const auto ev = evaluate(m, spec, sc);
    CHECK(at_max.g(0) == doctest::Approx((spec.phi_req - ev.illuminance) / spec.phi_req).epsilon(1e-14));
    CHECK(at_max.g(5) == doctest::Approx((ev.cct - spec.cct_req) / spec.cct_req).epsilon(1e-14));
    CHECK(at_max.f == doctest::Approx(-ev.report.ee / 1e9).epsilon(1e-14));
    CHECK_THROWS_AS(SystemConfig::from_vector(VectorXd::Zero(7)), DomainError);
}

TEST_CASE("illuminance constraint is non-increasing in every bias") {
    const auto& m = reference_model();
    const auto prob = build_problem(m, centre_spec());
    VectorXd x = 0.5 * (prob.lower + prob.upper);
    for (int c = 0; c < 4; ++c) {
        VectorXd y = x;
        double prev = std::numeric_limits<double>::infinity();
        for (double v : testing_support::linspace(prob.lower(c), prob.upper(c), 20)) {
            y(c) = v;
            const double g1 = prob.evaluate(y).g(0);
            CHECK(g1 <= prev);
            prev = g1;
        }
    }
}

TEST_CASE("values are finite over a Latin-hypercube sample of the box") {
    const auto& m = reference_model();
    const auto prob = build_problem(m, centre_spec());
    for (const auto& x : start_points(prob.lower, prob.upper, 10000, 42)) {
        const auto v = prob.evaluate(x);
        REQUIRE(std::isfinite(v.f));
        for (int i = 0; i < 6; ++i) REQUIRE(std::isfinite(v.g(i)));
    }
}

TEST_CASE("finite-difference derivatives") {
    NlpProblem quad;
    quad.n = 8;
    quad.m = 1;
    quad.lower = VectorXd::Constant(8, -5.0);
    quad.upper = VectorXd::Constant(8, 5.0);
    quad.evaluate = [](const VectorXd& x) { return NlpValues{x.squaredNorm(), VectorXd::Constant(1, x(0))}; };
    VectorXd grad;
    MatrixXd jac;
    gradient(quad, VectorXd::Ones(8), grad, jac);
    for (int i = 0; i < 8; ++i) CHECK(grad(i) == doctest::Approx(2.0).epsilon(1e-6));

    const auto& m = reference_model();
    const auto prob = build_problem(m, centre_spec());
    const VectorXd x = 0.5 * (prob.lower + prob.upper);
    gradient(prob, x, grad, jac);
    // Amplifier gains do not change the light output.
    for (int j = 4; j < 8; ++j) CHECK(std::abs(jac(0, j)) <= 1e-8);

    // Richardson-extrapolated central differences as the oracle.
    auto richardson = [&](int j, auto&& pick) {
        auto d = [&](double h) {
            VectorXd a = x, b = x;
            a(j) += h;
            b(j) -= h;
            return (pick(prob.evaluate(a)) - pick(prob.evaluate(b))) / (2.0 * h);
        };
        const double h = 1e-3 * std::max(1.0, std::abs(x(j)));
        return (4.0 * d(h / 2.0) - d(h)) / 3.0;
    };
    for (int j = 0; j < 8; ++j) {
        const double df = richardson(j, [](const NlpValues& v) { return v.f; });
        CHECK(std::abs(grad(j) - df) <= 1e-4 * std::max(std::abs(df), 1e-3));
        for (int i = 0; i < 6; ++i) {
            const double dg = richardson(j, [i](const NlpValues& v) { return v.g(i); });
            CHECK(std::abs(jac(i, j) - dg) <= 1e-4 * std::max(std::abs(dg), 1e-3));
        }
    }
}

TEST_CASE("solved centre point is feasible and certified") {
    const auto& m = reference_model();
    const auto prob = build_problem(m, centre_spec());
    const auto ms = multi_start(prob, 4, 1, SolverOptions{1e-6, 1e-7, 200, false});
    REQUIRE(ms.best.has_value());
    CHECK(ms.best->status == SolveStatus::converged);
    CHECK(ms.best->g.maxCoeff() <= 1e-6);
    CHECK(verify_kkt(prob, ms.best->x, 1e-5).passed);
}

}
