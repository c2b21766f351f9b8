#pragma once

// Recovery of q, h, H from the first coefficient profiles g0(x), psi0(x).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "nsbf/common.hpp"
#include "nsbf/potential.hpp"
#include "nsbf/profilestep.hpp"

namespace nsbf {

namespace spline {

// Values and derivatives up to `nd` of the degree-p B-splines that are
// nonzero at t; returns the index of the first one. Knot vector U is
// clamped and nondecreasing.
inline int basis_derivatives(const std::vector<double>& U, int p, double t, int nd,
                             std::vector<std::vector<double>>& ders) {
    const int n = int(U.size()) - p - 2;  // last basis index
    int span;
    if (t >= U[n + 1]) {
        span = n;
    } else if (t <= U[p]) {
        span = p;
    } else {
        span = int(std::upper_bound(U.begin() + p, U.begin() + n + 2, t) - U.begin()) - 1;
    }
    std::vector<std::vector<double>> ndu(p + 1, std::vector<double>(p + 1));
    std::vector<double> left(p + 1), right(p + 1);
    ndu[0][0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = t - U[span + 1 - j];
        right[j] = U[span + j] - t;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            ndu[j][r] = right[r + 1] + left[j - r];
            const double temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }
    ders.assign(nd + 1, std::vector<double>(p + 1, 0.0));
    for (int j = 0; j <= p; ++j) ders[0][j] = ndu[j][p];
    std::vector<std::vector<double>> a(2, std::vector<double>(p + 1));
    for (int r = 0; r <= p; ++r) {
        int s1 = 0, s2 = 1;
        a[0][0] = 1.0;
        for (int k = 1; k <= nd; ++k) {
            double d = 0.0;
            const int rk = r - k, pk = p - k;
            if (r >= k) {
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
                d = a[s2][0] * ndu[rk][pk];
            }
            const int j1 = rk >= -1 ? 1 : -rk;
            const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
            for (int j = j1; j <= j2; ++j) {
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
                d += a[s2][j] * ndu[rk + j][pk];
            }
            if (r <= pk) {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            ders[k][r] = d;
            std::swap(s1, s2);
        }
    }
    double fac = p;
    for (int k = 1; k <= nd; ++k) {
        for (int j = 0; j <= p; ++j) ders[k][j] *= fac;
        fac *= p - k;
    }
    return span - p;
}

// Penalized regression spline: degree-5 B-splines on clamped uniform knots,
// third-difference penalty on the coefficients, penalty weight chosen by
// generalized cross-validation.
class PenalizedSpline {
public:
    static constexpr int degree = 5;

    PenalizedSpline(const std::vector<double>& x, const ComplexSeq& y, std::vector<double> weights = {},
                    int intervals = 0) {
        const std::size_t M = x.size();
        if (M < 7 || y.size() != M) throw DataError("differentiation: need at least 7 matching points");
        for (std::size_t i = 1; i < M; ++i)
            if (!(x[i] > x[i - 1])) throw DataError("differentiation: grid must be strictly increasing");
        if (weights.empty()) weights.assign(M, 1.0);
        a_ = x.front();
        b_ = x.back();
        if (intervals <= 0) intervals = std::max(2, int(M - 1) / 2);
        intervals = std::min(intervals, int(M) - degree - 1);
        intervals = std::max(intervals, 1);
        for (int i = 0; i < degree; ++i) knots_.push_back(a_);
        for (int i = 0; i <= intervals; ++i) knots_.push_back(a_ + (b_ - a_) * i / intervals);
        knots_.back() = b_;
        for (int i = 0; i < degree; ++i) knots_.push_back(b_);
        const int nb = intervals + degree;

        Eigen::MatrixXd B = Eigen::MatrixXd::Zero(Eigen::Index(M), nb);
        std::vector<std::vector<double>> d;
        for (std::size_t i = 0; i < M; ++i) {
            const int first = basis_derivatives(knots_, degree, x[i], 0, d);
            for (int j = 0; j <= degree; ++j) B(Eigen::Index(i), first + j) = d[0][j];
        }
        Eigen::MatrixXd D = Eigen::MatrixXd::Zero(std::max(nb - 3, 1), nb);
        for (int i = 0; i + 3 < nb; ++i) {
            D(i, i) = -1.0;
            D(i, i + 1) = 3.0;
            D(i, i + 2) = -3.0;
            D(i, i + 3) = 1.0;
        }
        Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(weights.data(), Eigen::Index(M));
        Eigen::VectorXd yr(static_cast<Eigen::Index>(M)), yi(static_cast<Eigen::Index>(M));
        for (std::size_t i = 0; i < M; ++i) {
            yr(Eigen::Index(i)) = y[i].real();
            yi(Eigen::Index(i)) = y[i].imag();
        }
        const Eigen::MatrixXd G = B.transpose() * w.asDiagonal() * B;
        const Eigen::MatrixXd P = D.transpose() * D;
        const Eigen::VectorXd br = B.transpose() * w.asDiagonal() * yr;
        const Eigen::VectorXd bi = B.transpose() * w.asDiagonal() * yi;
        const double n_eff = w.sum();
        const double scale = G.trace() / std::max(P.trace(), 1e-300);

        auto solve = [&](double lam, Eigen::VectorXd& cr, Eigen::VectorXd& ci) {
            const Eigen::MatrixXd A = G + lam * scale * P;
            Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
            cr = ldlt.solve(br);
            ci = ldlt.solve(bi);
            const double trace = ldlt.solve(G).trace();
            const Eigen::VectorXd rr = B * cr - yr, ri = B * ci - yi;
            const double rss = (w.array() * (rr.array().square() + ri.array().square())).sum();
            const double dof = std::max(n_eff - trace, 1e-3);
            return n_eff * rss / (dof * dof);
        };

        double best = std::numeric_limits<double>::infinity();
        Eigen::VectorXd cr, ci;
        for (double e = -14.0; e <= 4.0; e += 0.25) {
            const double lam = std::pow(10.0, e);
            const double g = solve(lam, cr, ci);
            if (g < best) {
                best = g;
                lambda_ = lam;
                coef_ = Eigen::VectorXcd(nb);
                for (int j = 0; j < nb; ++j) coef_(j) = complex(cr(j), ci(j));
            }
        }
    }

    complex derivative(double t, int order) const {
        if (order < 0 || order > degree) throw DataError("differentiation: order out of range");
        std::vector<std::vector<double>> d;
        const int first = basis_derivatives(knots_, degree, std::clamp(t, a_, b_), order, d);
        complex v{};
        for (int j = 0; j <= degree; ++j) v += d[order][j] * coef_(first + j);
        return v;
    }
    complex operator()(double t) const { return derivative(t, 0); }
    double penalty_weight() const { return lambda_; }

private:
    std::vector<double> knots_;
    Eigen::VectorXcd coef_;
    double a_ = 0.0, b_ = 1.0;
    double lambda_ = 0.0;
};

}  // namespace spline

// Derivative of a smoothed fit of the profile, on the same grid.
inline ComplexSeq differentiate_profile(const std::vector<double>& x, const ComplexSeq& values, int order,
                                        const std::vector<double>& weights = {}) {
    if (order != 1 && order != 2) throw DataError("differentiate_profile: order must be 1 or 2");
    const spline::PenalizedSpline s(x, values, weights);
    ComplexSeq out;
    out.reserve(x.size());
    for (double t : x) out.push_back(s.derivative(t, order));
    return out;
}

struct RecoveredProblem {
    std::vector<double> x_grid;
    ComplexSeq q_from_g0, q_from_psi0, q_blended;
    std::vector<bool> mask_g0, mask_psi0;  // true where the denominator was too small
    complex h{}, H{};
    struct Diagnostics {
        int N1 = -1, N3 = -1, J = 0;
        double residual_median = 0.0, residual_max = 0.0;
        double condition_max = 1.0;
        std::size_t failed_points = 0;
    } diagnostics;
};

namespace recovery {

inline std::vector<double> profile_weights(const ProfileSolution& p) {
    std::vector<double> w(p.x_grid.size(), 1.0);
    for (std::size_t i = 0; i < w.size(); ++i)
        if (p.failed[i]) w[i] = 0.0;
    return w;
}

inline RecoveredProblem recover(const ProfileSolution& p) {
    const auto w = profile_weights(p);
    const spline::PenalizedSpline sg(p.x_grid, p.g0, w);
    const spline::PenalizedSpline sp(p.x_grid, p.psi0, w);
    const double b = p.b();
    RecoveredProblem r;
    r.x_grid = p.x_grid;
    const std::size_t M = p.x_grid.size();
    r.q_from_g0.resize(M);
    r.q_from_psi0.resize(M);
    r.q_blended.resize(M);
    r.mask_g0.assign(M, false);
    r.mask_psi0.assign(M, false);
    for (std::size_t i = 0; i < M; ++i) {
        const double x = p.x_grid[i];
        const complex dg = sg(x) + 1.0, dp = sp(x) + 1.0;
        r.mask_g0[i] = std::abs(dg) <= 1e-8;
        r.mask_psi0[i] = std::abs(dp) <= 1e-8;
        const complex qg = r.mask_g0[i] ? complex{} : sg.derivative(x, 2) / dg;
        const complex qp = r.mask_psi0[i] ? complex{} : sp.derivative(x, 2) / dp;
        r.q_from_g0[i] = qg;
        r.q_from_psi0[i] = qp;
        double wt = (b - x) / b;
        if (r.mask_g0[i]) wt = 0.0;
        if (r.mask_psi0[i]) wt = 1.0;
        r.q_blended[i] = wt * qg + (1.0 - wt) * qp;
    }
    r.h = sg.derivative(0.0, 1);
    r.H = -sp.derivative(b, 1);

    std::vector<double> res;
    for (std::size_t i = 1; i + 1 < M; ++i)
        if (!p.failed[i]) res.push_back(p.residual_per_point[i]);
    if (!res.empty()) {
        std::nth_element(res.begin(), res.begin() + res.size() / 2, res.end());
        r.diagnostics.residual_median = res[res.size() / 2];
        r.diagnostics.residual_max = *std::max_element(res.begin(), res.end());
    }
    r.diagnostics.N3 = p.N3;
    r.diagnostics.failed_points = p.failure_count();
    for (double c : p.condition_per_point) r.diagnostics.condition_max = std::max(r.diagnostics.condition_max, c);
    return r;
}

inline RecoveredProblem recover_q(const ProfileSolution& p) { return recover(p); }

inline std::pair<complex, complex> recover_constants(const ProfileSolution& p) {
    const auto r = recover(p);
    return {r.h, r.H};
}

struct ErrorMetrics {
    double max_g0 = 0.0, max_psi0 = 0.0, max_blended = 0.0;
    double l2_g0 = 0.0, l2_psi0 = 0.0, l2_blended = 0.0;
    double argmax_blended = 0.0;
    double max_abs_q = 0.0;  // of the true potential, for relative errors
    double err_h = 0.0, err_H = 0.0;

    double relative_max() const { return max_blended / std::max(max_abs_q, 1e-300); }
};

inline ErrorMetrics error_report(const RecoveredProblem& r, const PotentialSpec& q, const BoundaryConstants& c) {
    ErrorMetrics m;
    const auto& x = r.x_grid;
    auto accumulate = [&](const ComplexSeq& est, const std::vector<bool>* mask, double& mx, double& l2, double* at) {
        double acc = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (mask && (*mask)[i]) continue;
            const double e = std::abs(est[i] - q(x[i]));
            if (e > mx) {
                mx = e;
                if (at) *at = x[i];
            }
            if (i > 0) {
                const double e0 = std::abs(est[i - 1] - q(x[i - 1]));
                acc += 0.5 * (e * e + e0 * e0) * (x[i] - x[i - 1]);
            }
        }
        l2 = std::sqrt(acc);
    };
    accumulate(r.q_from_g0, &r.mask_g0, m.max_g0, m.l2_g0, nullptr);
    accumulate(r.q_from_psi0, &r.mask_psi0, m.max_psi0, m.l2_psi0, nullptr);
    accumulate(r.q_blended, nullptr, m.max_blended, m.l2_blended, &m.argmax_blended);
    for (double t : x) m.max_abs_q = std::max(m.max_abs_q, std::abs(q(t)));
    m.err_h = std::abs(r.h - c.h);
    m.err_H = std::abs(r.H - c.H);
    return m;
}

inline void write_recovered_csv(const RecoveredProblem& r, std::ostream& out) {
    out << "x,q_g0_re,q_g0_im,q_psi0_re,q_psi0_im,q_re,q_im\n";
    char buf[256];
    for (std::size_t i = 0; i < r.x_grid.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n", r.x_grid[i],
                      r.q_from_g0[i].real(), r.q_from_g0[i].imag(), r.q_from_psi0[i].real(), r.q_from_psi0[i].imag(),
                      r.q_blended[i].real(), r.q_blended[i].imag());
        out << buf;
    }
}

inline nlohmann::json to_json(const ErrorMetrics& m) {
    return {{"max_error_q", m.max_blended},     {"max_error_q_from_g0", m.max_g0},
            {"max_error_q_from_psi0", m.max_psi0}, {"l2_error_q", m.l2_blended},
            {"l2_error_q_from_g0", m.l2_g0},   {"l2_error_q_from_psi0", m.l2_psi0},
            {"argmax_error_q", m.argmax_blended}, {"relative_max_error_q", m.relative_max()},
            {"error_h", m.err_h},               {"error_H", m.err_H}};
}

inline nlohmann::json summary_json(const RecoveredProblem& r) {
    const auto& d = r.diagnostics;
    return {{"h", {r.h.real(), r.h.imag()}},
            {"H", {r.H.real(), r.H.imag()}},
            {"diagnostics",
             {{"N1", d.N1},
              {"N3", d.N3},
              {"J", d.J},
              {"residual_median", d.residual_median},
              {"residual_max", d.residual_max},
              {"condition_max", d.condition_max},
              {"failed_points", d.failed_points}}}};
}

}  // namespace recovery
}  // namespace nsbf
