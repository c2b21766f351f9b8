#pragma once

// Step two and the problem-specific front ends: per-point least-squares
// solves for the Neumann-series coefficient profiles g_n(x), s_n(x), psi_n(x).

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <vector>

#include "nsbf/charstep.hpp"
#include "nsbf/common.hpp"
#include "nsbf/lstsq.hpp"
#include "nsbf/specfun.hpp"

namespace nsbf {

struct RhoSampling {
    enum class Scheme { log_spaced, uniform, custom };
    Scheme scheme = Scheme::log_spaced;
    int J = 1501;
    double r_lo = 0.01;
    double r_hi = 1000.0;
    double imag_offset = 0.0;  // shifts every point into the strip Im r = const
    ComplexSeq custom;

    ComplexSeq points() const {
        if (scheme == Scheme::custom) return custom;
        if (J < 1 || !(r_lo > 0.0) || !(r_hi >= r_lo)) throw DataError("RhoSampling: bad range");
        ComplexSeq r(static_cast<std::size_t>(J));
        for (int j = 0; j < J; ++j) {
            const double t = J == 1 ? 0.0 : double(j) / (J - 1);
            const double v = scheme == Scheme::log_spaced
                                 ? std::pow(10.0, std::log10(r_lo) + t * (std::log10(r_hi) - std::log10(r_lo)))
                                 : r_lo + t * (r_hi - r_lo);
            r[j] = complex(v, imag_offset);
        }
        return r;
    }
};

struct ProfileSolution {
    std::vector<double> x_grid;
    ComplexSeq g0;
    ComplexSeq psi0;
    std::vector<double> residual_per_point;
    std::vector<double> condition_per_point;
    std::vector<bool> failed;
    int N3 = 0;
    struct Endpoints {
        complex g0_at_0{}, psi0_at_b{}, g0_at_b{}, psi0_at_0{};
    } endpoint_values;

    double b() const { return x_grid.back(); }
    std::size_t failure_count() const { return std::size_t(std::count(failed.begin(), failed.end(), true)); }
};

inline std::vector<double> uniform_grid(double b, int points) {
    if (points < 3) throw DataError("x grid needs at least 3 points");
    std::vector<double> x(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) x[i] = b * i / (points - 1);
    x.back() = b;
    return x;
}

// CSV: x, Re g0, Im g0, Re psi0, Im psi0, residual.
inline void write_profile_csv(const ProfileSolution& p, std::ostream& out) {
    out << "x,g0_re,g0_im,psi0_re,psi0_im,residual\n";
    char buf[256];
    for (std::size_t i = 0; i < p.x_grid.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n", p.x_grid[i], p.g0[i].real(),
                      p.g0[i].imag(), p.psi0[i].real(), p.psi0[i].imag(), p.residual_per_point[i]);
        out << buf;
    }
}

namespace profilestep {

// Model values Delta0_N(r_j), Delta_N(r_j)/r_j at the sampling points,
// computed once and shared by every grid point.
struct SampledModel {
    ComplexSeq r;
    ComplexSeq delta0;
    ComplexSeq delta_over_r;
};

inline SampledModel sample_model(const CharFunApprox& a, const RhoSampling& sampling) {
    SampledModel m;
    m.r = sampling.points();
    for (auto r : m.r) {
        if (std::abs(r) == 0.0) throw DataError("sampling: r = 0 is not allowed");
        m.delta0.push_back(charstep::eval_delta0(a, r));
        m.delta_over_r.push_back(charstep::eval_delta(a, r) / r);
    }
    return m;
}

struct MainSystemSolution {
    ComplexSeq g, s, psi;  // coefficients n = 0..N3
    double residual = 0.0;
    double condition = 1.0;
    bool rank_deficient = false;
};

// Per-point system at an interior x: blocks for g_n(x), s_n(x), psi_n(x).
inline MainSystemSolution solve_main_system(const SampledModel& m, double b, double x, int N3) {
    const auto J = Eigen::Index(m.r.size());
    const int n = N3 + 1;
    if (N3 < 0) throw DataError("main system: N3 must be nonnegative");
    if (J < 3 * n) throw DataError("main system: need J >= 3(N3+1)");
    if (!(x > 0.0 && x < b)) throw DataError("main system: x must be strictly inside (0, b)");
    ComplexMatrix A(J, 3 * n);
    ComplexVector y(J);
    std::vector<complex> jx(std::size_t(2 * N3 + 2)), jb(std::size_t(2 * N3 + 1));
    for (Eigen::Index j = 0; j < J; ++j) {
        const complex r = m.r[j];
        specfun::sph_bessel_j(r * x, jx);
        specfun::sph_bessel_j(r * (x - b), jb);
        const complex d0 = m.delta0[j], dr = m.delta_over_r[j];
        for (int k = 0; k < n; ++k) {
            const double sign = k % 2 ? -1.0 : 1.0;
            A(j, k) = d0 * sign * jx[2 * k];
            A(j, n + k) = -dr * sign * jx[2 * k + 1];
            A(j, 2 * n + k) = -sign * jb[2 * k];
        }
        const auto [cx, sx] = specfun::trig_pair(r * x);
        y(j) = specfun::trig_pair(r * (x - b)).first - d0 * cx + dr * sx;
    }
    const auto rep = solve_least_squares(A, y);
    MainSystemSolution out;
    out.g = charstep::detail::to_seq(rep.solution, 0, n);
    out.s = charstep::detail::to_seq(rep.solution, n, n);
    out.psi = charstep::detail::to_seq(rep.solution, 2 * n, n);
    out.residual = rep.residual_norm;
    out.condition = rep.condition_estimate;
    out.rank_deficient = rep.rank_deficient;
    return out;
}

inline MainSystemSolution solve_main_system(const CharFunApprox& a, double x, const RhoSampling& sampling, int N3) {
    return solve_main_system(sample_model(a, sampling), a.b, x, N3);
}

// The x = b specialization (psi_n(b) = 0): the endpoint identity
// Delta0 phi(r, b) - Delta S(r, b) = 1 solved for g_n(b), s_n(b). When
// g_fixed is given only s_n(b) is solved for.
inline charstep::CoefficientFit solve_endpoint_s(const SampledModel& m, double b, int N, const ComplexSeq& g_fixed) {
    const auto J = Eigen::Index(m.r.size());
    ComplexMatrix A(J, N + 1);
    ComplexVector y(J);
    for (Eigen::Index j = 0; j < J; ++j) {
        const complex z = m.r[j] * b;
        const auto o = charstep::odd_basis(z, N);
        const auto e = charstep::even_basis(z, N);
        const auto [c, s] = specfun::trig_pair(z);
        complex phi = c;
        for (int k = 0; k <= N; ++k) phi += g_fixed[k] * e[k];
        for (int k = 0; k <= N; ++k) A(j, k) = -m.delta_over_r[j] * o[k];
        y(j) = 1.0 - m.delta0[j] * phi + m.delta_over_r[j] * s;
    }
    const auto rep = solve_least_squares_checked(A, y, "endpoint system");
    return {charstep::detail::to_seq(rep.solution, 0, N + 1), rep.residual_norm, rep.condition_estimate};
}

struct EndpointFit {
    ComplexSeq g, s;
    double residual = 0.0;
    double condition = 1.0;
};

inline EndpointFit solve_endpoint_system(const SampledModel& m, double b, int N) {
    const auto J = Eigen::Index(m.r.size());
    if (J < 2 * (N + 1)) throw DataError("endpoint system: too few sampling points");
    ComplexMatrix A(J, 2 * (N + 1));
    ComplexVector y(J);
    for (Eigen::Index j = 0; j < J; ++j) {
        const complex z = m.r[j] * b;
        const auto o = charstep::odd_basis(z, N);
        const auto e = charstep::even_basis(z, N);
        const auto [c, s] = specfun::trig_pair(z);
        for (int k = 0; k <= N; ++k) {
            A(j, k) = m.delta0[j] * e[k];
            A(j, N + 1 + k) = -m.delta_over_r[j] * o[k];
        }
        y(j) = 1.0 - m.delta0[j] * c + m.delta_over_r[j] * s;
    }
    const auto rep = solve_least_squares_checked(A, y, "endpoint system");
    return {charstep::detail::to_seq(rep.solution, 0, N + 1), charstep::detail::to_seq(rep.solution, N + 1, N + 1),
            rep.residual_norm, rep.condition_estimate};
}

// Runs the main system at every interior grid point. Endpoint values come
// from step one: g0(0) = psi0(b) = 0, g0(b) = g_0(b), psi0(0) = psi_0(0).
// Ill-conditioned rows still pin the leading coefficient, so a point only
// counts as failed when its residual is far above that of its neighbours.
inline void flag_residual_outliers(ProfileSolution& p, std::size_t first, std::size_t last,
                                   double factor = 1e3, std::size_t half_window = 5) {
    std::vector<bool> flag(p.failed.size(), false);
    for (std::size_t i = first; i < last; ++i) {
        if (p.failed[i]) continue;
        if (!std::isfinite(p.residual_per_point[i])) {
            flag[i] = true;
            continue;
        }
        std::vector<double> r;
        const std::size_t lo = i >= first + half_window ? i - half_window : first;
        const std::size_t hi = std::min(last, i + half_window + 1);
        for (std::size_t j = lo; j < hi; ++j)
            if (j != i && !p.failed[j] && std::isfinite(p.residual_per_point[j])) r.push_back(p.residual_per_point[j]);
        if (r.empty()) continue;
        std::nth_element(r.begin(), r.begin() + r.size() / 2, r.end());
        if (p.residual_per_point[i] > factor * std::max(r[r.size() / 2], 1e-14)) flag[i] = true;
    }
    for (std::size_t i = first; i < last; ++i)
        if (flag[i]) p.failed[i] = true;
}

inline ProfileSolution solve_profile(const CharFunApprox& a, const std::vector<double>& x_grid,
                                     const RhoSampling& sampling, int N3) {
    a.validate();
    if (x_grid.size() < 3) throw DataError("solve_profile: grid too small");
    if (std::abs(x_grid.front()) > 1e-14 || std::abs(x_grid.back() - a.b) > 1e-12 * a.b)
        throw DataError("solve_profile: grid must span [0, b]");
    const auto m = sample_model(a, sampling);

    ProfileSolution p;
    p.x_grid = x_grid;
    p.N3 = N3;
    const std::size_t M = x_grid.size();
    p.g0.assign(M, complex{});
    p.psi0.assign(M, complex{});
    p.residual_per_point.assign(M, 0.0);
    p.condition_per_point.assign(M, 1.0);
    p.failed.assign(M, false);

    complex g0b;
    if (!a.g_nb.empty()) {
        g0b = a.g_nb[0];
    } else {
        g0b = solve_endpoint_system(m, a.b, N3).g[0];
    }
    p.endpoint_values = {0.0, 0.0, g0b, a.psi_n0[0]};
    p.g0.front() = 0.0;
    p.psi0.front() = a.psi_n0[0];
    p.g0.back() = g0b;
    p.psi0.back() = 0.0;

    for (std::size_t i = 1; i + 1 < M; ++i) {
        try {
            const auto s = solve_main_system(m, a.b, x_grid[i], N3);
            p.g0[i] = s.g[0];
            p.psi0[i] = s.psi[0];
            p.residual_per_point[i] = s.residual;
            p.condition_per_point[i] = s.condition;
            p.failed[i] = !is_finite(s.g[0]) || !is_finite(s.psi[0]);
        } catch (const NumericalError&) {
            p.failed[i] = true;
            p.residual_per_point[i] = std::numeric_limits<double>::infinity();
        }
    }
    flag_residual_outliers(p, 1, M - 1);
    if (double(p.failure_count()) > 0.05 * double(M - 2))
        throw NumericalError("solve_profile: more than 5% of grid points failed");
    return p;
}

// ---------------------------------------------------------------------------
// Weyl-function data

struct WeylFit {
    CharFunApprox approx;  // psi_n(0), omega, h_n only
    double residual = 0.0;
    double condition = 1.0;
    std::size_t rows_used = 0;
};

inline constexpr double weyl_pole_cutoff = 1e8;

// sum (-1)^n psi_n(0) j_2n(zb) + M omega cos zb + M sum h_n j_2n(zb) = M z sin zb - cos zb.
inline WeylFit fit_weyl(const ComplexSeq& z, const ComplexSeq& M, double b, int N1) {
    if (z.size() != M.size()) throw DataError("fit_weyl: size mismatch");
    std::vector<std::size_t> keep;
    for (std::size_t k = 0; k < z.size(); ++k)
        if (std::abs(M[k]) <= weyl_pole_cutoff) keep.push_back(k);
    const int unknowns = 2 * (N1 + 1) + 1;
    if (N1 < 0 || std::size_t(unknowns) > keep.size())
        throw DataError("fit_weyl: not enough samples for N1=" + std::to_string(N1));
    ComplexMatrix A(Eigen::Index(keep.size()), unknowns);
    ComplexVector y(Eigen::Index(keep.size()));
    for (std::size_t row = 0; row < keep.size(); ++row) {
        const std::size_t k = keep[row];
        const complex w = z[k] * b;
        const auto j = specfun::sph_bessel_j_seq(2 * N1, w);
        const auto [c, s] = specfun::trig_pair(w);
        const auto r = Eigen::Index(row);
        for (int n = 0; n <= N1; ++n) {
            A(r, n) = (n % 2 ? -1.0 : 1.0) * j[2 * n];
            A(r, N1 + 2 + n) = M[k] * j[2 * n];
        }
        A(r, N1 + 1) = M[k] * c;
        y(r) = M[k] * z[k] * s - c;
    }
    const auto rep = solve_least_squares_checked(A, y, "Weyl system");
    WeylFit f;
    f.approx.N1 = N1;
    f.approx.b = b;
    f.approx.psi_n0 = charstep::detail::to_seq(rep.solution, 0, N1 + 1);
    f.approx.omega_hH = rep.solution(N1 + 1);
    f.approx.h_n = charstep::detail::to_seq(rep.solution, N1 + 2, N1 + 1);
    f.approx.residuals.delta0 = f.approx.residuals.delta = rep.residual_norm;
    f.approx.residuals.max_condition = rep.condition_estimate;
    f.residual = rep.residual_norm;
    f.condition = rep.condition_estimate;
    f.rows_used = keep.size();
    return f;
}

inline double functional_Q(const CharFunApprox& a, const ComplexSeq& z, const ComplexSeq& M) {
    double worst = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k)
        worst = std::max(worst, std::abs(charstep::eval_delta0(a, z[k]) + M[k] * charstep::eval_delta(a, z[k])));
    return worst;
}

struct WeylSelection {
    int N1 = -1;
    WeylFit fit;
    std::vector<charstep::SweepRow> table;  // score = Q
};

// Candidate orders for Weyl data: 2(N1+1) <= K1 - 1, capped at 64.
inline std::vector<int> default_weyl_candidates(std::size_t samples) {
    std::vector<int> c;
    for (int n = 0; n <= 64 && 2 * (n + 1) <= int(samples) - 1; ++n) c.push_back(n);
    return c;
}

inline WeylSelection select_order_weyl(const ComplexSeq& z, const ComplexSeq& M, const ComplexSeq& probe_z,
                                       const ComplexSeq& probe_M, double b, std::vector<int> candidates = {}) {
    if (probe_z.empty()) throw DataError("Weyl order selection needs probe points");
    if (candidates.empty()) candidates = default_weyl_candidates(z.size());
    WeylSelection sel;
    std::vector<WeylFit> fits;
    std::vector<double> scores;
    for (int N1 : candidates) {
        charstep::SweepRow row;
        row.N1 = N1;
        try {
            auto f = fit_weyl(z, M, b, N1);
            row.score = functional_Q(f.approx, probe_z, probe_M);
            row.max_condition = f.condition;
            row.ok = std::isfinite(row.score);
            fits.push_back(std::move(f));
        } catch (const NumericalError& e) {
            row.failure = e.what();
            fits.emplace_back();
        }
        scores.push_back(row.ok ? row.score : std::numeric_limits<double>::quiet_NaN());
        sel.table.push_back(row);
    }
    if (const auto i = charstep::pick_order(scores)) {
        sel.N1 = sel.table[*i].N1;
        sel.fit = std::move(fits[*i]);
    }
    if (sel.N1 < 0) throw RankDeficientError("Weyl order selection: every candidate failed; more data is needed");
    return sel;
}

// Probe points are held out of the fit. When the dataset carries none, every
// tenth sample is held out instead.
inline void split_weyl_probes(const ComplexSeq& z, const ComplexSeq& M, ComplexSeq& fit_z, ComplexSeq& fit_M,
                              ComplexSeq& probe_z, ComplexSeq& probe_M) {
    for (std::size_t k = 0; k < z.size(); ++k) {
        if (k % 10 == 5 && std::abs(M[k]) <= weyl_pole_cutoff) {
            probe_z.push_back(z[k]);
            probe_M.push_back(M[k]);
        } else {
            fit_z.push_back(z[k]);
            fit_M.push_back(M[k]);
        }
    }
}

// ---------------------------------------------------------------------------
// Eigenvalues with multiplier constants

// Two-step: Delta from the eigenvalues, psi_n(0) from psi_H(rho_k, 0) = 1/beta_k,
// g_n(b) from phi(rho_k, b) = beta_k, and s_n(b) from the endpoint identity.
inline CharFunApprox fit_eigen_multiplier(const ComplexSeq& rho_k, const ComplexSeq& beta_k, double b, int N1,
                                          const RhoSampling& sampling = {}) {
    if (rho_k.size() != beta_k.size()) throw DataError("rho_k and beta_k lengths differ");
    ComplexSeq rhs_psi, rhs_g;
    for (std::size_t k = 0; k < rho_k.size(); ++k) {
        if (beta_k[k] == complex{}) throw DataError("multiplier constants must be nonzero");
        const complex c = specfun::trig_pair(rho_k[k] * b).first;
        rhs_psi.push_back(1.0 / beta_k[k] - c);
        rhs_g.push_back(beta_k[k] - c);
    }
    CharFunApprox a;
    a.N1 = N1;
    a.b = b;
    const auto f = charstep::fit_delta(rho_k, b, N1);
    a.omega_hH = f.omega_hH;
    a.h_n = f.h_n;
    const auto fp = charstep::fit_even_series(rho_k, rhs_psi, b, N1, "psi_n(0) system");
    a.psi_n0 = fp.coeffs;
    const auto fg = charstep::fit_even_series(rho_k, rhs_g, b, N1, "g_n(b) system");
    a.g_nb = fg.coeffs;
    const auto fs = solve_endpoint_s(sample_model(a, sampling), b, N1, a.g_nb);
    a.s_nb = fs.coeffs;
    a.residuals = {fp.residual, f.residual, fs.residual, fg.residual,
                   std::max({f.condition, fp.condition, fg.condition, fs.condition})};
    return a;
}

// R is the rho -> 0 limit of the identity that s_n(b) is fitted from here, so it
// carries little information; P is the default.
inline charstep::OrderSelection solve_ip3_twostep(const ComplexSeq& rho_k, const ComplexSeq& beta_k, double b,
                                                  charstep::OrderCriterion criterion = charstep::OrderCriterion::P,
                                                  std::vector<int> candidates = {}, const RhoSampling& sampling = {}) {
    for (auto v : beta_k)
        if (v == complex{}) throw DataError("multiplier constants must be nonzero");
    if (candidates.empty()) candidates = charstep::default_candidates(rho_k.size());
    ComplexSeq probes;
    for (double r : charstep::default_probe_points()) probes.emplace_back(r);
    return charstep::select_order(
        candidates, [&](int N1) { return fit_eigen_multiplier(rho_k, beta_k, b, N1, sampling); }, criterion, probes,
        rho_k);
}

// Direct route: at each x, sum (-1)^n g_n(x) j_2n(rho_k x) - beta_k sum (-1)^n psi_n(x) j_2n(rho_k(x-b))
// = beta_k cos(rho_k(x-b)) - cos(rho_k x); the known zeros g_n(0), psi_n(b) are
// eliminated at the endpoints.
struct DirectPointSolution {
    complex g0{}, psi0{};
    double residual = 0.0;
    double condition = 1.0;
    bool rank_deficient = false;
};

inline DirectPointSolution solve_ip3_point(const ComplexSeq& rho_k, const ComplexSeq& beta_k, double b, double x,
                                           int N) {
    const bool at0 = x <= 0.0, atb = x >= b;
    const int n = N + 1;
    const int cols = (at0 || atb) ? n : 2 * n;
    const auto K = Eigen::Index(rho_k.size());
    if (K < cols) throw DataError("IP3 direct: too few pairs for N=" + std::to_string(N));
    ComplexMatrix A(K, cols);
    ComplexVector y(K);
    std::vector<complex> jx(std::size_t(2 * N + 1)), jb(std::size_t(2 * N + 1));
    for (Eigen::Index k = 0; k < K; ++k) {
        const complex r = rho_k[k], beta = beta_k[k];
        specfun::sph_bessel_j(r * x, jx);
        specfun::sph_bessel_j(r * (x - b), jb);
        int c = 0;
        if (!at0)
            for (int m = 0; m < n; ++m) A(k, c++) = (m % 2 ? -1.0 : 1.0) * jx[2 * m];
        if (!atb)
            for (int m = 0; m < n; ++m) A(k, c++) = -beta * (m % 2 ? -1.0 : 1.0) * jb[2 * m];
        y(k) = beta * specfun::trig_pair(r * (x - b)).first - specfun::trig_pair(r * x).first;
    }
    const auto rep = solve_least_squares(A, y);
    DirectPointSolution out;
    out.g0 = at0 ? complex{} : rep.solution(0);
    out.psi0 = atb ? complex{} : rep.solution(at0 ? 0 : n);
    out.residual = rep.residual_norm;
    out.condition = rep.condition_estimate;
    out.rank_deficient = rep.rank_deficient;

    return out;
}

struct DirectSelection {
    int N = -1;
    ProfileSolution profile;
    std::vector<std::pair<int, double>> table;  // (N, mean residual)
};

inline ProfileSolution solve_ip3_direct(const ComplexSeq& rho_k, const ComplexSeq& beta_k, double b,
                                        const std::vector<double>& x_grid, int N) {
    if (rho_k.size() != beta_k.size()) throw DataError("rho_k and beta_k lengths differ");
    if (2 * (N + 1) > int(rho_k.size())) throw DataError("IP3 direct: need 2(N+1) <= K+1");
    for (auto v : beta_k)
        if (v == complex{}) throw DataError("multiplier constants must be nonzero");
    ProfileSolution p;
    p.x_grid = x_grid;
    p.N3 = N;
    const std::size_t M = x_grid.size();
    p.g0.assign(M, complex{});
    p.psi0.assign(M, complex{});
    p.residual_per_point.assign(M, 0.0);
    p.condition_per_point.assign(M, 1.0);
    p.failed.assign(M, false);
    for (std::size_t i = 0; i < M; ++i) {
        const double x = i == 0 ? 0.0 : (i + 1 == M ? b : x_grid[i]);
        const auto s = solve_ip3_point(rho_k, beta_k, b, x, N);
        p.g0[i] = s.g0;
        p.psi0[i] = s.psi0;
        p.residual_per_point[i] = s.residual;
        p.condition_per_point[i] = s.condition;
        p.failed[i] = !is_finite(s.g0) || !is_finite(s.psi0);
    }
    flag_residual_outliers(p, 0, M);
    p.endpoint_values = {0.0, 0.0, p.g0.back(), p.psi0.front()};
    if (double(p.failure_count()) > 0.05 * double(M))
        throw NumericalError("IP3 direct: more than 5% of grid points failed");
    return p;
}

inline constexpr double direct_residual_factor = 10.0;

inline DirectSelection select_ip3_direct(const ComplexSeq& rho_k, const ComplexSeq& beta_k, double b,
                                         const std::vector<double>& x_grid) {
    DirectSelection sel;
    std::vector<double> scores;
    for (int N = 0; 2 * (N + 1) <= int(rho_k.size()); ++N) {
        double acc = 0.0;
        int used = 0;
        // Score on a coarse subset of the grid.
        const std::size_t stride = std::max<std::size_t>(1, x_grid.size() / 20);
        for (std::size_t i = 0; i < x_grid.size(); i += stride) {
            const auto s = solve_ip3_point(rho_k, beta_k, b, x_grid[i], N);
            acc += s.residual;
            ++used;
        }
        const double score = acc / used;
        sel.table.emplace_back(N, score);
        scores.push_back(score);
    }
    // Nested least-squares residuals only decrease with N, so the smallest order
    // within a decade of the minimum is taken.
    if (const auto i = charstep::pick_order(scores, direct_residual_factor)) sel.N = sel.table[*i].first;
    if (sel.N < 0) throw DataError("IP3 direct: not enough pairs");
    sel.profile = solve_ip3_direct(rho_k, beta_k, b, x_grid, sel.N);
    return sel;
}

// ---------------------------------------------------------------------------
// Eigenvalues with norming constants

// d/drho of the truncated Delta series; d/drho j_2n(rho b) = (2n/rho) j_2n(rho b) - b j_2n+1(rho b).
inline complex eval_delta_dot(complex omega, const ComplexSeq& h_n, double b, complex rho) {
    const int N = int(h_n.size()) - 1;
    const complex z = rho * b;
    const auto [c, s] = specfun::trig_pair(z);
    const auto j = specfun::sph_bessel_j_seq(2 * N + 1, z);
    complex v = -(1.0 + b * omega) * s - z * c;
    for (int n = 0; n <= N; ++n) {
        // (2n/rho) j_2n(rho b) -> 0 as rho -> 0 for n >= 1.
        const complex tail = (n == 0 || rho == complex{}) ? complex{} : (2.0 * n / rho) * j[2 * n];
        v += h_n[n] * (tail - b * j[2 * n + 1]);
    }
    return v;
}

struct Ip4Reduction {
    ComplexSeq beta_k;
    ComplexSeq delta_dot;
    int N2 = 0;
};

// d Delta / d lambda at lambda = 0, from the rho -> 0 expansion of the model.
inline complex delta_lambda_derivative_at_zero(complex omega, const ComplexSeq& h_n, double b) {
    complex d2 = -2.0 * b - omega * b * b;
    if (!h_n.empty()) d2 -= h_n[0] * b * b / 3.0;
    if (h_n.size() > 1) d2 += h_n[1] * b * b * (2.0 / 15.0);
    return 0.5 * d2;
}

// beta_k = -alpha_k / (d Delta / d lambda)(rho_k^2), i.e. -2 rho_k alpha_k / Delta_dot(rho_k)
// away from the origin. N2 defaults to the square-system maximum, count - 2.
inline Ip4Reduction reduce_ip4(const ComplexSeq& rho_k, const ComplexSeq& alpha_k, double b, int N2 = -1) {
    if (rho_k.size() != alpha_k.size()) throw DataError("rho_k and alpha_k lengths differ");
    if (N2 < 0) N2 = int(rho_k.size()) - 2;
    const auto f = charstep::fit_delta(rho_k, b, N2);
    Ip4Reduction out;
    out.N2 = N2;
    for (std::size_t k = 0; k < rho_k.size(); ++k) {
        const complex r = rho_k[k];
        const complex dd = eval_delta_dot(f.omega_hH, f.h_n, b, r);
        const complex dl = std::abs(r) * b < 1e-6 ? delta_lambda_derivative_at_zero(f.omega_hH, f.h_n, b) : dd / (2.0 * r);
        if (!std::isfinite(std::abs(dl)) || std::abs(dl) < 1e-12)
            throw PoleError("IP4: Delta_dot vanishes; eigenvalue not simple", int(k));
        out.delta_dot.push_back(dd);
        out.beta_k.push_back(-alpha_k[k] / dl);
    }
    return out;
}

}  // namespace profilestep
}  // namespace nsbf
