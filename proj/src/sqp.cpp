#include "wdmvlc/sqp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "wdmvlc/csv.hpp"
#include "wdmvlc/error.hpp"

namespace wdmvlc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double positive_part_sum(const VectorXd& g) { return g.cwiseMax(0.0).sum(); }

double max_positive(const VectorXd& g) { return g.size() == 0 ? 0.0 : std::max(0.0, g.maxCoeff()); }

/// Inequality system A p <= b with provenance of every row.
struct RowSet {
    MatrixXd a;
    VectorXd b;
    enum Kind { general, upper, lower };
    std::vector<Kind> kind;
    std::vector<Eigen::Index> index;
};

RowSet assemble_rows(const MatrixXd& G, const VectorXd& h, const VectorXd& lower, const VectorXd& upper) {
    const Eigen::Index n = G.cols() > 0 ? G.cols() : lower.size();
    std::vector<std::pair<VectorXd, double>> rows;
    RowSet rs;
    for (Eigen::Index i = 0; i < G.rows(); ++i) {
        rows.emplace_back(G.row(i).transpose(), h(i));
        rs.kind.push_back(RowSet::general);
        rs.index.push_back(i);
    }
    for (Eigen::Index k = 0; k < upper.size(); ++k) {
        if (!std::isfinite(upper(k))) continue;
        VectorXd e = VectorXd::Zero(n);
        e(k) = 1.0;
        rows.emplace_back(e, upper(k));
        rs.kind.push_back(RowSet::upper);
        rs.index.push_back(k);
    }
    for (Eigen::Index k = 0; k < lower.size(); ++k) {
        if (!std::isfinite(lower(k))) continue;
        VectorXd e = VectorXd::Zero(n);
        e(k) = -1.0;
        rows.emplace_back(e, -lower(k));
        rs.kind.push_back(RowSet::lower);
        rs.index.push_back(k);
    }
    rs.a.resize(static_cast<Eigen::Index>(rows.size()), n);
    rs.b.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        rs.a.row(static_cast<Eigen::Index>(r)) = rows[r].first.transpose();
        rs.b(static_cast<Eigen::Index>(r)) = rows[r].second;
    }
    return rs;
}

struct ActiveSetResult {
    VectorXd p;
    VectorXd lambda;  // one per row of the RowSet
    bool optimal = false;
    int iterations = 0;
};

/// Primal active-set iteration from a feasible p (Nocedal & Wright, Alg. 16.3). Each equality-constrained
/// subproblem is solved in the null space of the working set, so an ill-conditioned H does not leak
/// round-off into directions the working set pins down.
ActiveSetResult active_set(const MatrixXd& H, const VectorXd& c, const MatrixXd& A, const VectorXd& b,
                           VectorXd p, int max_iterations) {
    if (Eigen::LLT<MatrixXd>(H).info() != Eigen::Success) throw NumericError("QP Hessian is not positive definite");
    const Eigen::Index n = H.rows();
    const Eigen::Index nrows = A.rows();
    std::vector<Eigen::Index> work;
    std::vector<bool> in_work(static_cast<std::size_t>(nrows), false);
    ActiveSetResult res;
    res.lambda = VectorXd::Zero(nrows);
    VectorXd row_norm(nrows);
    for (Eigen::Index i = 0; i < nrows; ++i) row_norm(i) = A.row(i).norm();
    bool subspace_min = false;  // p minimizes the QP on the current working set

    for (int it = 0; it < max_iterations; ++it) {
        res.iterations = it + 1;
        const VectorXd grad = H * p + c;
        const auto nw = static_cast<Eigen::Index>(work.size());
        MatrixXd aw(nw, n);
        for (Eigen::Index k = 0; k < nw; ++k) aw.row(k) = A.row(work[static_cast<std::size_t>(k)]);
        Eigen::HouseholderQR<MatrixXd> qr;
        MatrixXd q = MatrixXd::Identity(n, n);
        if (nw > 0) {
            qr.compute(aw.transpose());
            q = qr.householderQ() * MatrixXd::Identity(n, n);
        }
        VectorXd d = VectorXd::Zero(n);
        if (!subspace_min && nw < n) {
            const MatrixXd z = q.rightCols(n - nw);
            const MatrixXd hz = z.transpose() * H * z;
            d = z * hz.llt().solve(-(z.transpose() * grad));
        }
        const double scale = 1.0 + p.lpNorm<Eigen::Infinity>();
        if (subspace_min || d.lpNorm<Eigen::Infinity>() <= 1e-12 * scale) {
            subspace_min = false;
            if (nw == 0) {
                res.p = p;
                res.optimal = true;
                return res;
            }
            // A_W' lambda = -grad, least squares through the QR of A_W'.
            const MatrixXd r = qr.matrixQR().topRows(nw).triangularView<Eigen::Upper>();
            const VectorXd lam = r.triangularView<Eigen::Upper>().solve(-(q.leftCols(nw).transpose() * grad));
            Eigen::Index worst = 0;
            const double lmin = lam.minCoeff(&worst);
            const double ltol = 1e-12 * (1.0 + grad.lpNorm<Eigen::Infinity>());
            if (lmin >= -ltol) {
                for (Eigen::Index k = 0; k < nw; ++k)
                    res.lambda(work[static_cast<std::size_t>(k)]) = std::max(0.0, lam(k));
                res.p = p;
                res.optimal = true;
                return res;
            }
            in_work[static_cast<std::size_t>(work[static_cast<std::size_t>(worst)])] = false;
            work.erase(work.begin() + worst);
            continue;
        }
        double alpha = 1.0;
        Eigen::Index block = -1;
        const double dnorm = d.norm();
        for (Eigen::Index i = 0; i < nrows; ++i) {
            if (in_work[static_cast<std::size_t>(i)]) continue;
            const double ad = A.row(i).dot(d);
            if (ad <= 1e-12 * row_norm(i) * dnorm) continue;
            const double slack = std::max(0.0, b(i) - A.row(i).dot(p));
            const double step = slack / ad;
            if (step < alpha) {
                alpha = step;
                block = i;
            }
        }
        p += alpha * d;
        if (block >= 0) {
            work.push_back(block);
            in_work[static_cast<std::size_t>(block)] = true;
        } else {
            subspace_min = true;
        }
    }
    res.p = p;
    return res;
}

/// Minimizes the uniform violation t of G p <= h + t subject to hard bounds on p.
std::pair<VectorXd, double> min_violation(const MatrixXd& G, const VectorXd& h, const VectorXd& lower,
                                          const VectorXd& upper, const VectorXd& p0) {
    const Eigen::Index n = p0.size();
    const Eigen::Index m = G.rows();
    MatrixXd g1(m + 1, n + 1);
    g1.setZero();
    g1.topLeftCorner(m, n) = G;
    g1.block(0, n, m, 1).setConstant(-1.0);
    g1(m, n) = -1.0;  // t >= 0
    VectorXd h1(m + 1);
    h1.head(m) = h;
    h1(m) = 0.0;
    VectorXd lo(n + 1), up(n + 1);
    lo.head(n) = lower;
    up.head(n) = upper;
    lo(n) = -kInf;
    up(n) = kInf;
    const double eps = 1e-8;
    const MatrixXd H1 = eps * MatrixXd::Identity(n + 1, n + 1);
    VectorXd c1 = VectorXd::Zero(n + 1);
    c1(n) = 1.0;
    VectorXd z0(n + 1);
    z0.head(n) = p0;
    z0(n) = std::max(0.0, m > 0 ? (G * p0 - h).maxCoeff() : 0.0);
    const RowSet rs = assemble_rows(g1, h1, lo, up);
    const auto r = active_set(H1, c1, rs.a, rs.b, z0, 50 * static_cast<int>(n + m + 2) + 100);
    const VectorXd p = r.p.head(n);
    const double t = m > 0 ? std::max(0.0, (G * p - h).maxCoeff()) : 0.0;
    return {p, t};
}

}  // namespace

void fd_derivatives(const NlpProblem& p, const VectorXd& x, const NlpValues& at_x, VectorXd& grad,
                    MatrixXd& jac) {
    grad.resize(p.n);
    jac.resize(p.m, p.n);
    for (Eigen::Index i = 0; i < p.n; ++i) {
        const double step = 1e-6 * std::max(1.0, std::abs(x(i)));
        VectorXd xp = x, xm = x;
        double hp = step, hm = step;
        if (x(i) + step > p.upper(i)) hp = 0.0;
        if (x(i) - step < p.lower(i)) hm = 0.0;
        if (hp == 0.0 && hm == 0.0) throw DomainError("bounds box narrower than the finite-difference step");
        xp(i) += hp;
        xm(i) -= hm;
        const NlpValues vp = hp > 0.0 ? p.evaluate(xp) : at_x;
        const NlpValues vm = hm > 0.0 ? p.evaluate(xm) : at_x;
        const double span = hp + hm;
        grad(i) = (vp.f - vm.f) / span;
        if (p.m > 0) jac.col(i) = (vp.g - vm.g) / span;
    }
}

namespace {

void check_qp_shapes(const MatrixXd& H, const VectorXd& c, const MatrixXd& G, const VectorXd& lo,
                     const VectorXd& up) {
    const Eigen::Index n = c.size();
    if (H.rows() != n || H.cols() != n) throw DomainError("QP Hessian has wrong shape");
    if (G.rows() > 0 && G.cols() != n) throw DomainError("QP constraint matrix has wrong shape");
    for (Eigen::Index k = 0; k < n; ++k)
        if (lo(k) > up(k)) throw DomainError("QP bounds are inconsistent");
}

QpResult solve_from(const MatrixXd& H, const VectorXd& c, const MatrixXd& G, const VectorXd& h,
                    const VectorXd& lo, const VectorXd& up, const VectorXd& p0, int max_iterations) {
    const Eigen::Index n = c.size();
    const RowSet rs = assemble_rows(G, h, lo, up);
    const auto r = active_set(H, c, rs.a, rs.b, p0, max_iterations);
    QpResult out;
    out.p = r.p;
    out.iterations = r.iterations;
    out.status = r.optimal ? QpStatus::optimal : QpStatus::max_iterations;
    out.mu = VectorXd::Zero(G.rows());
    out.mu_lower = VectorXd::Zero(n);
    out.mu_upper = VectorXd::Zero(n);
    for (std::size_t i = 0; i < rs.kind.size(); ++i) {
        const double l = r.lambda(static_cast<Eigen::Index>(i));
        switch (rs.kind[i]) {
            case RowSet::general: out.mu(rs.index[i]) = l; break;
            case RowSet::upper: out.mu_upper(rs.index[i]) = l; break;
            case RowSet::lower: out.mu_lower(rs.index[i]) = l; break;
        }
    }
    return out;
}

VectorXd or_infinite(const VectorXd& v, Eigen::Index n, double fill) {
    return v.size() == n ? v : VectorXd::Constant(n, fill);
}

}  // namespace

QpResult solve_qp(const MatrixXd& H, const VectorXd& c, const MatrixXd& G, const VectorXd& h,
                  const VectorXd& lower, const VectorXd& upper, int max_iterations) {
    const Eigen::Index n = c.size();
    const VectorXd lo = or_infinite(lower, n, -kInf);
    const VectorXd up = or_infinite(upper, n, kInf);
    check_qp_shapes(H, c, G, lo, up);
    VectorXd p0 = VectorXd::Zero(n).cwiseMax(lo).cwiseMin(up);
    const double hscale = 1.0 + (h.size() ? h.lpNorm<Eigen::Infinity>() : 0.0);
    if (G.rows() > 0 && (G * p0 - h).maxCoeff() > 1e-12 * hscale) {
        auto [p1, t] = min_violation(G, h, lo, up, p0);
        if (t > 1e-10 * hscale) {
            QpResult out;
            out.status = QpStatus::infeasible;
            out.p = p1;
            out.relaxation = t;
            out.mu = VectorXd::Zero(G.rows());
            out.mu_lower = VectorXd::Zero(n);
            out.mu_upper = VectorXd::Zero(n);
            return out;
        }
        p0 = p1;
    }
    return solve_from(H, c, G, h, lo, up, p0, max_iterations);
}

QpResult solve_qp(const MatrixXd& H, const VectorXd& c, const MatrixXd& G, const VectorXd& h) {
    return solve_qp(H, c, G, h, VectorXd(), VectorXd());
}

QpResult solve_qp_elastic(const MatrixXd& H, const VectorXd& c, const MatrixXd& G, const VectorXd& h,
                          const VectorXd& lower, const VectorXd& upper) {
    QpResult r = solve_qp(H, c, G, h, lower, upper);
    if (r.status != QpStatus::infeasible) return r;
    // The phase-1 point satisfies G p <= h + t, so it is a feasible start for the relaxed QP.
    const Eigen::Index n = c.size();
    const double t = r.relaxation * (1.0 + 1e-9) + 1e-12;
    QpResult relaxed = solve_from(H, c, G, (h.array() + t).matrix(), or_infinite(lower, n, -kInf),
                                  or_infinite(upper, n, kInf), r.p, 500);
    relaxed.relaxation = t;
    return relaxed;
}

MatrixXd bfgs_update(const MatrixXd& H, const VectorXd& s, const VectorXd& y, bool* skipped, bool* damped) {
    if (skipped) *skipped = false;
    if (damped) *damped = false;
    if (s.norm() < 1e-14) {
        if (skipped) *skipped = true;
        return H;
    }
    const VectorXd hs = H * s;
    const double shs = s.dot(hs);
    const double sy = s.dot(y);
    VectorXd r = y;
    if (sy < 0.2 * shs) {
        const double theta = 0.8 * shs / (shs - sy);
        r = theta * y + (1.0 - theta) * hs;
        if (damped) *damped = true;
    }
    const double sr = s.dot(r);
    MatrixXd out = H - hs * hs.transpose() / shs + r * r.transpose() / sr;
    return 0.5 * (out + out.transpose());
}

LineSearchResult line_search(const std::function<double(double)>& phi_of_alpha, double phi0, double dphi0) {
    LineSearchResult r;
    if (!(dphi0 < 0.0)) {
        r.not_descent = true;
        r.alpha = 1.0;
        r.merit = phi_of_alpha(1.0);
        r.evaluations = 1;
        return r;
    }
    double alpha = 1.0;
    for (int k = 0; k <= 20; ++k) {
        const double phi = phi_of_alpha(alpha);
        ++r.evaluations;
        if (std::isfinite(phi) && phi <= phi0 + 1e-4 * alpha * dphi0) {
            r.alpha = alpha;
            r.merit = phi;
            return r;
        }
        alpha *= 0.5;
    }
    r.ok = false;
    r.alpha = 0.0;
    r.merit = phi0;
    return r;
}

std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::converged: return "converged";
        case SolveStatus::max_iterations: return "max-iterations";
        case SolveStatus::infeasible_subproblem: return "infeasible-subproblem";
        case SolveStatus::line_search_failure: return "line-search-failure";
    }
    return "unknown";
}

double kkt_residual(const VectorXd& grad, const MatrixXd& jac, const VectorXd& g, const VectorXd& mu,
                    const VectorXd& x, const VectorXd& lower, const VectorXd& upper,
                    const VectorXd& mu_lower, const VectorXd& mu_upper) {
    VectorXd stat = grad + mu_upper - mu_lower;
    if (jac.rows() > 0) stat += jac.transpose() * mu;
    double r = stat.lpNorm<Eigen::Infinity>();
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        r = std::max(r, mu(i) * std::abs(g(i)));
        r = std::max(r, g(i));
    }
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        if (std::isfinite(upper(k))) r = std::max(r, mu_upper(k) * std::abs(x(k) - upper(k)));
        if (std::isfinite(lower(k))) r = std::max(r, mu_lower(k) * std::abs(lower(k) - x(k)));
    }
    return r;
}

SolveOutcome sqp_solve(const NlpProblem& problem, const VectorXd& x0, const SolverOptions& opt) {
    if (x0.size() != problem.n) throw DomainError("start point has wrong dimension");
    for (Eigen::Index k = 0; k < problem.n; ++k)
        if (problem.lower(k) > problem.upper(k)) throw DomainError("bounds box is empty");
    SolveOutcome out;
    auto eval = [&](const VectorXd& x) {
        ++out.evaluations;
        return problem.evaluate(x);
    };
    auto derivs = [&](const VectorXd& x, const NlpValues& v, VectorXd& gr, MatrixXd& jac) {
        if (problem.derivatives) {
            problem.derivatives(x, gr, jac);
        } else {
            fd_derivatives(problem, x, v, gr, jac);
            out.evaluations += static_cast<int>(2 * problem.n);
        }
    };

    VectorXd x = x0.cwiseMax(problem.lower).cwiseMin(problem.upper);
    NlpValues v = eval(x);
    VectorXd grad;
    MatrixXd jac;
    derivs(x, v, grad, jac);
    const double h_scale = std::max(1.0, std::abs(v.f));
    MatrixXd H = h_scale * MatrixXd::Identity(problem.n, problem.n);
    double rho = 1.0;
    bool reset_used = false;
    bool rescale = true;  // H is still the scaled identity
    VectorXd mu = VectorXd::Zero(problem.m);
    VectorXd mu_lo = VectorXd::Zero(problem.n), mu_up = VectorXd::Zero(problem.n);
    double kkt = kInf;
    double prev_merit = kInf;
    out.status = SolveStatus::max_iterations;

    int k = 0;
    for (; k < opt.max_iterations; ++k) {
        const VectorXd lo = problem.lower - x;
        const VectorXd up = problem.upper - x;
        QpResult qp = solve_qp_elastic(H, grad, jac, -v.g, lo, up);
        if (qp.status == QpStatus::max_iterations) {
            out.status = SolveStatus::infeasible_subproblem;
            break;
        }
        mu = qp.mu;
        mu_lo = qp.mu_lower;
        mu_up = qp.mu_upper;
        kkt = kkt_residual(grad, jac, v.g, mu, x, problem.lower, problem.upper, mu_lo, mu_up);
        const double viol = max_positive(v.g);
        if (kkt < opt.tolerance && viol <= opt.feasibility_tolerance) {
            out.status = SolveStatus::converged;
            if (opt.keep_trace) out.trace.push_back({k, v.f, kkt, 0.0, viol});
            break;
        }
        const VectorXd& p = qp.p;
        if (qp.relaxation > 0.0 && p.lpNorm<Eigen::Infinity>() <= 1e-14 * (1.0 + x.lpNorm<Eigen::Infinity>())) {
            out.status = SolveStatus::infeasible_subproblem;
            break;
        }
        rho = std::max(rho, 2.0 * (mu.size() ? mu.lpNorm<Eigen::Infinity>() : 0.0) + 1.0);
        const double phi0 = v.f + rho * positive_part_sum(v.g);
        const double dphi = grad.dot(p) +
                            rho * (positive_part_sum(v.g + (jac.rows() ? VectorXd(jac * p) : VectorXd())) -
                                   positive_part_sum(v.g));
        NlpValues trial;
        VectorXd xt;
        double last_alpha = -1.0;
        auto phi = [&](double alpha) {
            xt = (x + alpha * p).cwiseMax(problem.lower).cwiseMin(problem.upper);
            try {
                trial = eval(xt);
            } catch (const Error&) {
                return kInf;
            }
            last_alpha = alpha;
            return trial.f + rho * positive_part_sum(trial.g);
        };
        const LineSearchResult ls = line_search(phi, phi0, dphi);
        if (!ls.ok || !std::isfinite(ls.merit)) {
            if (!reset_used) {
                H = h_scale * MatrixXd::Identity(problem.n, problem.n);
                reset_used = true;
                rescale = true;
                continue;
            }
            out.status = SolveStatus::line_search_failure;
            break;
        }
        if (last_alpha != ls.alpha) phi(ls.alpha);
        if (ls.merit > prev_merit + 1e-12 * (1.0 + std::abs(prev_merit)) && !ls.not_descent) {
            // merit measured with a larger rho may exceed the previous value; only flag true increases
            if (ls.merit > phi0) out.merit_monotone = false;
        }
        prev_merit = ls.merit;
        const VectorXd x_new = xt;
        NlpValues v_new = trial;
        VectorXd grad_new;
        MatrixXd jac_new;
        derivs(x_new, v_new, grad_new, jac_new);
        const VectorXd s = x_new - x;
        VectorXd y = grad_new - grad;
        if (problem.m > 0) y += (jac_new - jac).transpose() * mu;
        // Before the first update, size the identity to the observed curvature (y'y / s'y).
        if (rescale && s.dot(y) > 0.0) {
            H = y.squaredNorm() / s.dot(y) * MatrixXd::Identity(problem.n, problem.n);
            rescale = false;
        }
        H = bfgs_update(H, s, y);
        if (Eigen::LLT<MatrixXd>(H).info() != Eigen::Success) {
            out.hessian_spd = false;
            H = h_scale * MatrixXd::Identity(problem.n, problem.n);
            rescale = true;
        }
        if (opt.keep_trace) out.trace.push_back({k, v.f, kkt, ls.alpha, viol});
        x = x_new;
        v = std::move(v_new);
        grad = std::move(grad_new);
        jac = std::move(jac_new);
    }
    out.iterations = k;
    out.x = x;
    out.f = v.f;
    out.g = v.g;
    out.mu = mu;
    out.mu_lower = mu_lo;
    out.mu_upper = mu_up;
    out.max_violation = max_positive(v.g);
    out.kkt = kkt;
    return out;
}

std::string trace_csv(const std::vector<TraceRow>& trace) {
    std::string s = "iter,f,kkt,alpha,max_violation\n";
    for (const auto& r : trace)
        s += fmt::format("{},{},{},{},{}\n", r.iter, csv::fmt_num(r.f), csv::fmt_num(r.kkt),
                         csv::fmt_num(r.alpha), csv::fmt_num(r.max_violation));
    return s;
}

std::uint64_t SplitMix64::next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double SplitMix64::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::uint64_t SplitMix64::below(std::uint64_t n) {
    // Rejection sampling keeps the draw unbiased.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t r;
    do {
        r = next();
    } while (r >= limit);
    return r % n;
}

std::vector<VectorXd> start_points(const VectorXd& lower, const VectorXd& upper, int k, std::uint64_t seed) {
    if (k < 1) throw DomainError("multi-start needs at least one start");
    std::vector<VectorXd> pts;
    pts.push_back(0.5 * (lower + upper));
    const int s = k - 1;
    if (s == 0) return pts;
    SplitMix64 rng(seed);
    const Eigen::Index n = lower.size();
    MatrixXd samples(s, n);
    for (Eigen::Index d = 0; d < n; ++d) {
        std::vector<int> perm(static_cast<std::size_t>(s));
        std::iota(perm.begin(), perm.end(), 0);
        for (int i = s - 1; i > 0; --i)
            std::swap(perm[static_cast<std::size_t>(i)],
                      perm[static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(i) + 1))]);
        for (int i = 0; i < s; ++i) {
            const double u = (perm[static_cast<std::size_t>(i)] + rng.uniform()) / s;
            samples(i, d) = lower(d) + u * (upper(d) - lower(d));
        }
    }
    for (int i = 0; i < s; ++i) pts.push_back(samples.row(i).transpose());
    return pts;
}

MultiStartOutcome multi_start(const NlpProblem& problem, int k, std::uint64_t seed, const SolverOptions& opt,
                              const std::vector<VectorXd>& extra_starts) {
    MultiStartOutcome res;
    std::vector<VectorXd> starts = extra_starts;
    for (auto& s : start_points(problem.lower, problem.upper, k, seed)) starts.push_back(std::move(s));
    for (const auto& x0 : starts) {
        SolveOutcome o;
        try {
            o = sqp_solve(problem, x0, opt);
        } catch (const Error& e) {
            o.x = x0;
            o.status = SolveStatus::line_search_failure;
            o.max_violation = kInf;
            o.f = kInf;
        }
        res.runs.push_back(std::move(o));
    }
    for (const auto& o : res.runs) {
        if (!(o.max_violation <= opt.feasibility_tolerance) || !std::isfinite(o.f)) continue;
        if (!res.best || o.f < res.best->f) res.best = o;
    }
    if (!res.best) {
        for (std::size_t i = 0; i < res.runs.size(); ++i)
            res.failure_report += fmt::format("start {}: {} (max violation {:.3e})\n", i,
                                              to_string(res.runs[i].status), res.runs[i].max_violation);
    }
    return res;
}

VectorXd nnls(const MatrixXd& A, const VectorXd& b) {
    const Eigen::Index n = A.cols();
    VectorXd z = VectorXd::Zero(n);
    if (n == 0) return z;
    std::vector<bool> passive(static_cast<std::size_t>(n), false);
    const double tol = 1e-12 * (1.0 + A.norm() * (1.0 + b.norm()));
    for (int outer = 0; outer < 3 * n + 10; ++outer) {
        const VectorXd w = A.transpose() * (b - A * z);
        Eigen::Index best = -1;
        double wmax = tol;
        for (Eigen::Index j = 0; j < n; ++j)
            if (!passive[static_cast<std::size_t>(j)] && w(j) > wmax) {
                wmax = w(j);
                best = j;
            }
        if (best < 0) break;
        passive[static_cast<std::size_t>(best)] = true;
        for (int inner = 0; inner < 3 * n + 10; ++inner) {
            std::vector<Eigen::Index> idx;
            for (Eigen::Index j = 0; j < n; ++j)
                if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
            MatrixXd ap(A.rows(), static_cast<Eigen::Index>(idx.size()));
            for (std::size_t k = 0; k < idx.size(); ++k) ap.col(static_cast<Eigen::Index>(k)) = A.col(idx[k]);
            const VectorXd sp = ap.colPivHouseholderQr().solve(b);
            bool all_pos = true;
            for (Eigen::Index k = 0; k < sp.size(); ++k)
                if (sp(k) <= 0.0) all_pos = false;
            if (all_pos) {
                z.setZero();
                for (std::size_t k = 0; k < idx.size(); ++k) z(idx[k]) = sp(static_cast<Eigen::Index>(k));
                break;
            }
            double alpha = 1.0;
            for (std::size_t k = 0; k < idx.size(); ++k) {
                const double s = sp(static_cast<Eigen::Index>(k));
                if (s <= 0.0) alpha = std::min(alpha, z(idx[k]) / (z(idx[k]) - s));
            }
            for (std::size_t k = 0; k < idx.size(); ++k)
                z(idx[k]) += alpha * (sp(static_cast<Eigen::Index>(k)) - z(idx[k]));
            for (std::size_t k = 0; k < idx.size(); ++k)
                if (z(idx[k]) <= 1e-15) {
                    z(idx[k]) = 0.0;
                    passive[static_cast<std::size_t>(idx[k])] = false;
                }
        }
    }
    return z;
}

KktCheck verify_kkt(const NlpProblem& problem, const VectorXd& x, double tolerance) {
    const Eigen::Index n = problem.n, m = problem.m;
    const NlpValues v0 = problem.evaluate(x);
    VectorXd grad(n);
    MatrixXd jac(m, n);
    // Richardson-extrapolated differences: central when there is room, one-sided 3-point otherwise.
    for (Eigen::Index i = 0; i < n; ++i) {
        const double h = 1e-4 * std::max(1.0, std::abs(x(i)));
        auto at = [&](double off) {
            VectorXd xs = x;
            xs(i) += off;
            return problem.evaluate(xs);
        };
        VectorXd col(m + 1);
        auto pack = [&](const NlpValues& v) {
            VectorXd r(m + 1);
            r(0) = v.f;
            if (m > 0) r.tail(m) = v.g;
            return r;
        };
        const VectorXd c0 = pack(v0);
        if (x(i) + h <= problem.upper(i) && x(i) - h >= problem.lower(i)) {
            const VectorXd d1 = (pack(at(h)) - pack(at(-h))) / (2.0 * h);
            const VectorXd d2 = (pack(at(h / 2)) - pack(at(-h / 2))) / h;
            col = (4.0 * d2 - d1) / 3.0;
        } else {
            const double s = (x(i) + 2.0 * h <= problem.upper(i)) ? 1.0 : -1.0;
            const double hs = s * h / 2.0;
            col = (-3.0 * c0 + 4.0 * pack(at(hs)) - pack(at(2.0 * hs))) / (2.0 * hs);
        }
        grad(i) = col(0);
        if (m > 0) jac.col(i) = col.tail(m);
    }
    KktCheck chk;
    const double act = 10.0 * tolerance;
    std::vector<VectorXd> cols;
    std::vector<int> gi;
    for (Eigen::Index i = 0; i < m; ++i) {
        chk.violation = std::max(chk.violation, v0.g(i));
        if (v0.g(i) >= -act) {
            cols.push_back(jac.row(i).transpose());
            gi.push_back(static_cast<int>(i));
        }
    }
    for (Eigen::Index k = 0; k < n; ++k) {
        chk.violation = std::max({chk.violation, x(k) - problem.upper(k), problem.lower(k) - x(k)});
        const double room = act * std::max(1.0, std::abs(x(k)));
        if (problem.upper(k) - x(k) <= room) {
            VectorXd e = VectorXd::Zero(n);
            e(k) = 1.0;
            cols.push_back(e);
            gi.push_back(-1);
        }
        if (x(k) - problem.lower(k) <= room) {
            VectorXd e = VectorXd::Zero(n);
            e(k) = -1.0;
            cols.push_back(e);
            gi.push_back(-1);
        }
    }
    MatrixXd A(n, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) A.col(static_cast<Eigen::Index>(j)) = cols[j];
    const VectorXd z = nnls(A, -grad);
    chk.stationarity = (grad + A * z).lpNorm<Eigen::Infinity>();
    chk.multipliers = VectorXd::Zero(m);
    for (std::size_t j = 0; j < gi.size(); ++j)
        if (gi[j] >= 0) {
            chk.multipliers(gi[j]) = z(static_cast<Eigen::Index>(j));
            chk.complementarity =
                std::max(chk.complementarity, z(static_cast<Eigen::Index>(j)) * std::abs(v0.g(gi[j])));
        }
    chk.violation = std::max(0.0, chk.violation);
    chk.passed = chk.stationarity <= tolerance && chk.complementarity <= tolerance && chk.violation <= tolerance;
    return chk;
}

}  // namespace wdmvlc
