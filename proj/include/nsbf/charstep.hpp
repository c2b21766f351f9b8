#pragma once

// Step one: truncated Neumann-series models of the characteristic functions,
// endpoint coefficient fits, and truncation-order selection.

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nsbf/common.hpp"
#include "nsbf/lstsq.hpp"
#include "nsbf/specfun.hpp"

namespace nsbf {

// Delta0_N(rho) = cos(rho b) + sum (-1)^n psi_n(0) j_2n(rho b)
// Delta_N(rho)  = omega cos(rho b) - rho sin(rho b) + sum h_n j_2n(rho b)
// phi_N(rho, b) = cos(rho b) + sum (-1)^n g_n(b) j_2n(rho b)
// S_N(rho, b)   = (sin(rho b) + sum (-1)^n s_n(b) j_2n+1(rho b)) / rho
struct CharFunApprox {
    int N1 = 0;
    double b = 1.0;
    complex omega_hH{};
    ComplexSeq h_n;
    ComplexSeq psi_n0;
    ComplexSeq s_nb;  // empty when the endpoint sequences were not fitted
    ComplexSeq g_nb;

    struct Residuals {
        double delta0 = 0.0, delta = 0.0, s = 0.0, g = 0.0;
        double max_condition = 1.0;
    } residuals;

    bool has_endpoint_sequences() const {
        return s_nb.size() == std::size_t(N1) + 1 && g_nb.size() == std::size_t(N1) + 1;
    }

    void validate() const {
        const auto n = std::size_t(N1) + 1;
        if (N1 < 0 || h_n.size() != n || psi_n0.size() != n)
            throw DataError("CharFunApprox: coefficient sequences must have length N1+1");
        if (!s_nb.empty() && s_nb.size() != n) throw DataError("CharFunApprox: s_nb length");
        if (!g_nb.empty() && g_nb.size() != n) throw DataError("CharFunApprox: g_nb length");
        // A fitted model with non-finite entries means step one broke down.
        for (const auto* v : {&h_n, &psi_n0, &s_nb, &g_nb})
            for (auto z : *v)
                if (!is_finite(z)) throw NumericalError("CharFunApprox: non-finite coefficient");
        if (!is_finite(omega_hH)) throw NumericalError("CharFunApprox: non-finite omega");
    }
};

namespace charstep {

// (-1)^n j_2n(z) for n = 0..N.
inline ComplexSeq even_basis(complex z, int N) {
    const auto j = specfun::sph_bessel_j_seq(2 * N + 1, z);
    ComplexSeq out(std::size_t(N) + 1);
    for (int n = 0; n <= N; ++n) out[n] = (n % 2 ? -1.0 : 1.0) * j[2 * n];
    return out;
}

// (-1)^n j_2n+1(z) for n = 0..N.
inline ComplexSeq odd_basis(complex z, int N) {
    const auto j = specfun::sph_bessel_j_seq(2 * N + 1, z);
    ComplexSeq out(std::size_t(N) + 1);
    for (int n = 0; n <= N; ++n) out[n] = (n % 2 ? -1.0 : 1.0) * j[2 * n + 1];
    return out;
}

struct CoefficientFit {
    ComplexSeq coeffs;
    double residual = 0.0;
    double condition = 1.0;
};

namespace detail {

inline ComplexSeq to_seq(const ComplexVector& v, Eigen::Index from, Eigen::Index count) {
    return ComplexSeq(v.data() + from, v.data() + from + count);
}

inline void require_order(int N1, std::size_t rows, int unknowns, const char* context) {
    if (N1 < 0) throw DataError(std::string(context) + ": N1 must be nonnegative");
    if (std::size_t(unknowns) > rows)
        throw DataError(std::string(context) + ": not enough data for N1=" + std::to_string(N1));
}

}  // namespace detail

// sum (-1)^n c_n j_2n(nodes_k b) = rhs_k.
inline CoefficientFit fit_even_series(const ComplexSeq& nodes, const ComplexSeq& rhs, double b, int N,
                                      const char* context) {
    detail::require_order(N, nodes.size(), N + 1, context);
    ComplexMatrix A(Eigen::Index(nodes.size()), N + 1);
    ComplexVector y(Eigen::Index(nodes.size()));
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const auto e = even_basis(nodes[k] * b, N);
        for (int n = 0; n <= N; ++n) A(Eigen::Index(k), n) = e[n];
        y(Eigen::Index(k)) = rhs[k];
    }
    const auto r = solve_least_squares_checked(A, y, context);
    return {detail::to_seq(r.solution, 0, N + 1), r.residual_norm, r.condition_estimate};
}

inline CoefficientFit fit_delta0(const ComplexSeq& mu_k, double b, int N1) {
    ComplexSeq rhs;
    for (auto m : mu_k) rhs.push_back(-specfun::trig_pair(m * b).first);
    return fit_even_series(mu_k, rhs, b, N1, "sys1");
}

struct DeltaFit {
    complex omega_hH{};
    ComplexSeq h_n;
    double residual = 0.0;
    double condition = 1.0;
};

// omega cos(rho_k b) + sum h_n j_2n(rho_k b) = rho_k sin(rho_k b), with N2 = N1.
inline DeltaFit fit_delta(const ComplexSeq& rho_k, double b, int N1) {
    detail::require_order(N1, rho_k.size(), N1 + 2, "sys2");
    const auto K = Eigen::Index(rho_k.size());
    ComplexMatrix A(K, N1 + 2);
    ComplexVector y(K);
    for (Eigen::Index k = 0; k < K; ++k) {
        const complex z = rho_k[k] * b;
        const auto [c, s] = specfun::trig_pair(z);
        const auto j = specfun::sph_bessel_j_seq(2 * N1, z);
        A(k, 0) = c;
        for (int n = 0; n <= N1; ++n) A(k, n + 1) = j[2 * n];
        y(k) = rho_k[k] * s;
    }
    const auto r = solve_least_squares_checked(A, y, "sys2");
    return {r.solution(0), detail::to_seq(r.solution, 1, N1 + 1), r.residual_norm, r.condition_estimate};
}

inline complex eval_delta0(const CharFunApprox& a, complex rho) {
    const complex z = rho * a.b;
    const auto e = even_basis(z, a.N1);
    complex v = specfun::trig_pair(z).first;
    for (int n = 0; n <= a.N1; ++n) v += a.psi_n0[n] * e[n];
    return v;
}

inline complex eval_delta(const CharFunApprox& a, complex rho) {
    const complex z = rho * a.b;
    const auto [c, s] = specfun::trig_pair(z);
    const auto j = specfun::sph_bessel_j_seq(2 * a.N1, z);
    complex v = a.omega_hH * c - rho * s;
    for (int n = 0; n <= a.N1; ++n) v += a.h_n[n] * j[2 * n];
    return v;
}

inline complex eval_phi_b(const CharFunApprox& a, complex rho) {
    const complex z = rho * a.b;
    const auto e = even_basis(z, a.N1);
    complex v = specfun::trig_pair(z).first;
    for (int n = 0; n <= a.N1; ++n) v += a.g_nb[n] * e[n];
    return v;
}

inline complex eval_S_b(const CharFunApprox& a, complex rho) {
    if (rho == complex{}) return a.b * (1.0 + a.s_nb[0] / 3.0);
    const complex z = rho * a.b;
    const auto o = odd_basis(z, a.N1);
    complex v = specfun::trig_pair(z).second;
    for (int n = 0; n <= a.N1; ++n) v += a.s_nb[n] * o[n];
    return v / rho;
}

// sum (-1)^n s_n(b) j_2n+1(mu_k b) = -(sin(mu_k b) + mu_k / Delta_N(mu_k)).
inline CoefficientFit fit_s_nb(const ComplexSeq& mu_k, const CharFunApprox& a) {
    detail::require_order(a.N1, mu_k.size(), a.N1 + 1, "sys3");
    const auto K = Eigen::Index(mu_k.size());
    ComplexMatrix A(K, a.N1 + 1);
    ComplexVector y(K);
    for (Eigen::Index k = 0; k < K; ++k) {
        const complex d = eval_delta(a, mu_k[k]);
        if (std::abs(d) < 1e-12) throw PoleError("sys3: Delta_N vanishes at mu_k", int(k));
        const complex z = mu_k[k] * a.b;
        const auto o = odd_basis(z, a.N1);
        for (int n = 0; n <= a.N1; ++n) A(k, n) = o[n];
        y(k) = -(specfun::trig_pair(z).second + mu_k[k] / d);
    }
    const auto r = solve_least_squares_checked(A, y, "sys3");
    return {detail::to_seq(r.solution, 0, a.N1 + 1), r.residual_norm, r.condition_estimate};
}

// sum (-1)^n g_n(b) j_2n(rho_k b) = 1/Delta0_N(rho_k) - cos(rho_k b).
inline CoefficientFit fit_g_nb(const ComplexSeq& rho_k, const CharFunApprox& a) {
    ComplexSeq rhs;
    for (std::size_t k = 0; k < rho_k.size(); ++k) {
        const complex d0 = eval_delta0(a, rho_k[k]);
        if (std::abs(d0) < 1e-12) throw PoleError("sys4: Delta0_N vanishes at rho_k", int(k));
        rhs.push_back(1.0 / d0 - specfun::trig_pair(rho_k[k] * a.b).first);
    }
    return fit_even_series(rho_k, rhs, a.b, a.N1, "sys4");
}

// Full step-one fit from two spectra at one truncation order.
inline CharFunApprox fit_two_spectra(const ComplexSeq& rho_k, const ComplexSeq& mu_k, double b, int N1) {
    CharFunApprox a;
    a.N1 = N1;
    a.b = b;
    const auto f0 = fit_delta0(mu_k, b, N1);
    a.psi_n0 = f0.coeffs;
    const auto f = fit_delta(rho_k, b, N1);
    a.omega_hH = f.omega_hH;
    a.h_n = f.h_n;
    const auto fs = fit_s_nb(mu_k, a);
    a.s_nb = fs.coeffs;
    const auto fg = fit_g_nb(rho_k, a);
    a.g_nb = fg.coeffs;
    a.residuals = {f0.residual, f.residual, fs.residual, fg.residual,
                   std::max({f0.condition, f.condition, fs.condition, fg.condition})};
    return a;
}

inline std::vector<double> default_probe_points() {
    std::vector<double> r(20);
    for (int j = 0; j < 20; ++j) r[j] = 0.01 + (1000.0 - 0.01) * j / 19.0;
    return r;
}

// max_j |Delta0_N phi_N(b) - Delta_N S_N(b) - 1| over probes, skipping probes
// within 1e-6 of any fitted node.
inline double functional_P(const CharFunApprox& a, const ComplexSeq& probes, const ComplexSeq& nodes = {}) {
    if (!a.has_endpoint_sequences()) throw DataError("functional_P: endpoint sequences not fitted");
    double worst = 0.0;
    for (auto r : probes) {
        bool near = false;
        for (auto n : nodes) near = near || std::abs(r - n) < 1e-6 || std::abs(r + n) < 1e-6;
        if (near) continue;
        const complex v = eval_delta0(a, r) * eval_phi_b(a, r) - eval_delta(a, r) * eval_S_b(a, r) - 1.0;
        worst = std::max(worst, std::abs(v));
    }
    return worst;
}

// The rho = 0 specialization of the same identity.
inline double functional_R(const CharFunApprox& a) {
    if (!a.has_endpoint_sequences()) throw DataError("functional_R: endpoint sequences not fitted");
    const complex g0 = a.g_nb[0], p0 = a.psi_n0[0], s0 = a.s_nb[0];
    return std::abs(g0 * (1.0 + p0) + p0 - (a.b / 3.0) * (a.omega_hH + a.h_n[0]) * (3.0 + s0));
}

enum class OrderCriterion { R, P, Q, residual };

inline std::string to_string(OrderCriterion c) {
    switch (c) {
        case OrderCriterion::R: return "R";
        case OrderCriterion::P: return "P";
        case OrderCriterion::Q: return "Q";
        case OrderCriterion::residual: return "residual";
    }
    return "?";
}

inline OrderCriterion criterion_from_string(const std::string& s) {
    if (s == "R") return OrderCriterion::R;
    if (s == "P") return OrderCriterion::P;
    if (s == "Q") return OrderCriterion::Q;
    if (s == "residual") return OrderCriterion::residual;
    throw DataError("unknown order criterion '" + s + "'");
}

struct SweepRow {
    int N1 = 0;
    bool ok = false;
    std::string failure;
    double R = std::numeric_limits<double>::quiet_NaN();
    double P = std::numeric_limits<double>::quiet_NaN();
    double score = std::numeric_limits<double>::quiet_NaN();  // value of the criterion used
    double max_condition = std::numeric_limits<double>::quiet_NaN();
};

struct OrderSelection {
    int N1 = -1;
    CharFunApprox approx;
    OrderCriterion criterion_used = OrderCriterion::R;
    std::vector<SweepRow> table;
};

using Fitter = std::function<CharFunApprox(int)>;

// Scores within this factor of the minimum are indistinguishable at the data
// precision; among those the smallest order wins.
inline constexpr double near_tie_factor = 1.25;
// Scores below this are rounding noise and tie with each other.
inline constexpr double tie_floor = 1e-14;

// scores[i] belongs to the i-th candidate in increasing order; NaN marks a failure.
inline std::optional<std::size_t> pick_order(const std::vector<double>& scores, double factor = near_tie_factor) {
    double best = std::numeric_limits<double>::infinity();
    for (double v : scores)
        if (std::isfinite(v)) best = std::min(best, v);
    if (!std::isfinite(best)) return std::nullopt;
    for (std::size_t i = 0; i < scores.size(); ++i)
        if (std::isfinite(scores[i]) && scores[i] <= std::max(factor * best, tie_floor)) return i;
    return std::nullopt;
}

// Candidates 0..K-1 satisfy both the Delta0 fit (N1 <= K) and the Delta fit
// (N1 + 2 unknowns against K + 1 equations).
inline std::vector<int> default_candidates(std::size_t count) {
    std::vector<int> c;
    for (int n = 0; n + 1 < int(count); ++n) c.push_back(n);
    return c;
}

// Fits every candidate order, scores it by R (falling back to P when
// Delta_N(0) is nearly zero) or P, and keeps the minimizer; near-ties go to
// the smaller order.
inline OrderSelection select_order(const std::vector<int>& candidates, const Fitter& fit, OrderCriterion criterion,
                                   const ComplexSeq& probes, const ComplexSeq& nodes = {}) {
    if (criterion != OrderCriterion::R && criterion != OrderCriterion::P)
        throw DataError("select_order: criterion must be R or P");
    OrderSelection sel;
    sel.criterion_used = criterion;
    std::vector<CharFunApprox> fits;
    for (int N1 : candidates) {
        SweepRow row;
        row.N1 = N1;
        try {
            auto a = fit(N1);
            row.R = functional_R(a);
            row.P = functional_P(a, probes, nodes);
            row.max_condition = a.residuals.max_condition;
            row.ok = std::isfinite(row.R) && std::isfinite(row.P);
            if (!row.ok) row.failure = "non-finite functional";
            fits.push_back(std::move(a));
        } catch (const NumericalError& e) {
            row.failure = e.what();
            fits.emplace_back();
        }
        sel.table.push_back(row);
    }
    // R is degenerate when Delta(0) ~ 0 for the fitted model.
    if (criterion == OrderCriterion::R) {
        for (std::size_t i = 0; i < fits.size(); ++i) {
            if (!sel.table[i].ok) continue;
            if (std::abs(fits[i].omega_hH + fits[i].h_n[0]) < 1e-8) {
                sel.criterion_used = OrderCriterion::P;
                break;
            }
        }
    }
    std::vector<double> scores;
    for (auto& row : sel.table) {
        if (row.ok) row.score = sel.criterion_used == OrderCriterion::R ? row.R : row.P;
        scores.push_back(row.score);
    }
    if (const auto i = pick_order(scores)) {
        sel.N1 = sel.table[*i].N1;
        sel.approx = fits[*i];
    }
    if (sel.N1 < 0) throw RankDeficientError("order selection: every candidate failed; more spectral data is needed");
    return sel;
}

inline OrderSelection select_order_two_spectra(const ComplexSeq& rho_k, const ComplexSeq& mu_k, double b,
                                               OrderCriterion criterion = OrderCriterion::R,
                                               std::vector<int> candidates = {}) {
    if (rho_k.size() != mu_k.size() || rho_k.size() < 2) throw DataError("two spectra of equal length >= 2 required");
    if (candidates.empty()) candidates = default_candidates(rho_k.size());
    ComplexSeq probes;
    for (double r : default_probe_points()) probes.emplace_back(r);
    ComplexSeq nodes = rho_k;
    nodes.insert(nodes.end(), mu_k.begin(), mu_k.end());
    return select_order(
        candidates, [&](int N1) { return fit_two_spectra(rho_k, mu_k, b, N1); }, criterion, probes, nodes);
}

}  // namespace charstep

// JSON with coefficients as [re, im] pairs.
inline nlohmann::json to_json(const CharFunApprox& a) {
    auto seq = [](const ComplexSeq& v) {
        nlohmann::json j = nlohmann::json::array();
        for (auto z : v) j.push_back({z.real(), z.imag()});
        return j;
    };
    return {{"N1", a.N1},
            {"b", a.b},
            {"omega_hH", {a.omega_hH.real(), a.omega_hH.imag()}},
            {"h_n", seq(a.h_n)},
            {"psi_n0", seq(a.psi_n0)},
            {"s_nb", seq(a.s_nb)},
            {"g_nb", seq(a.g_nb)}};
}

inline CharFunApprox char_fun_approx_from_json(const nlohmann::json& j) {
    auto val = [](const nlohmann::json& v) {
        if (v.is_array()) return complex(v.at(0).get<double>(), v.at(1).get<double>());
        return complex(v.get<double>());
    };
    auto seq = [&](const char* key) {
        ComplexSeq out;
        if (j.contains(key))
            for (const auto& v : j.at(key)) out.push_back(val(v));
        return out;
    };
    CharFunApprox a;
    a.N1 = j.at("N1").get<int>();
    a.b = j.at("b").get<double>();
    a.omega_hH = val(j.at("omega_hH"));
    a.h_n = seq("h_n");
    a.psi_n0 = seq("psi_n0");
    a.s_nb = seq("s_nb");
    a.g_nb = seq("g_nb");
    a.validate();
    return a;
}

}  // namespace nsbf
