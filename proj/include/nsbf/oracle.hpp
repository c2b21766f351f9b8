#pragma once

// Forward problem engine. Integrates -y'' + q y = lambda y directly, evaluates
// the characteristic functions, locates eigenvalues and generates datasets.
// Nothing here touches the NSBF machinery, so it can serve as an oracle.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>

#include "nsbf/common.hpp"
#include "nsbf/dataset.hpp"
#include "nsbf/potential.hpp"

namespace nsbf::oracle {

enum class Which { phi_h, S, psi_H, T };

struct SolutionSample {
    complex value;
    complex derivative;
};

// A characteristic-function value together with the independent evaluation
// from the opposite endpoint.
struct TwoSided {
    complex value;
    complex crosscheck;
    double discrepancy() const { return std::abs(value - crosscheck) / std::max(1.0, std::abs(value)); }
};

struct MultiplierConstant {
    complex beta;
    double discrepancy = 0.0;
    bool flagged = false;  // two-sided values disagree beyond 1e-7
};

struct IntegrationTolerance {
    double rel = 1e-13;
    double abs = 1e-15;
    int fixed_steps = 1 << 14;  // tabulated potentials
    double modulated_from = 100.0;  // |rho| above which the amplitude-phase form is used
};

template <std::size_t N>
using State = std::array<complex, N>;

class ForwardProblem {
public:
    ForwardProblem(PotentialSpec q, BoundaryConstants c, IntegrationTolerance tol = {})
        : q_(std::move(q)), c_(c), tol_(tol) {}

    const PotentialSpec& potential() const { return q_; }
    const BoundaryConstants& constants() const { return c_; }
    double b() const { return q_.b(); }
    const IntegrationTolerance& tolerance() const { return tol_; }

    // Integrates an N-component first-order system from x0 through the
    // ordered points x_eval (all on one side of x0), recording each state.
    template <std::size_t N, class Rhs>
    std::vector<State<N>> integrate(Rhs&& rhs, double x0, State<N> y0, std::span<const double> x_eval,
                                    double max_step = 0.0, double tol_scale = 1.0) const {
        namespace ode = boost::numeric::odeint;
        std::vector<State<N>> out;
        out.reserve(x_eval.size());
        if (x_eval.empty()) return out;
        const double span_len = std::abs(x_eval.back() - x0);
        const double dir = x_eval.back() >= x0 ? 1.0 : -1.0;

        std::vector<double> times;
        times.reserve(x_eval.size() + 1);
        times.push_back(x0);
        for (double x : x_eval) {
            if ((x - times.back()) * dir < 0.0) throw DataError("integrate: x_eval not ordered away from start");
            times.push_back(x);
        }
        double last_x = x0;
        auto observer = [&](const State<N>& s, double x) {
            last_x = x;
            out.push_back(s);
        };
        auto system = [&](const State<N>& y, State<N>& dy, double x) { rhs(y, dy, x); };

        try {
            if (q_.kind() == PotentialSpec::Kind::tabulated) {
                ode::runge_kutta_fehlberg78<State<N>> stepper;
                State<N> y = y0;
                observer(y, x0);
                for (std::size_t i = 1; i < times.size(); ++i) {
                    const double seg = times[i] - times[i - 1];
                    const int n = std::max(1, int(std::ceil(std::abs(seg) / b() * tol_.fixed_steps)));
                    const double dx = seg / n;
                    double x = times[i - 1];
                    for (int k = 0; k < n; ++k, x += dx) stepper.do_step(system, y, x, dx);
                    observer(y, times[i]);
                }
            } else {
                // Stops at the potential's breakpoints too: the embedded error
                // estimate does not see a kink inside a step.
                std::vector<double> stops = times;
                std::vector<bool> keep(times.size(), true);
                for (double k : q_.breakpoints()) {
                    if ((k - x0) * dir <= 0.0 || (k - x_eval.back()) * dir >= 0.0) continue;
                    auto it = std::find_if(stops.begin() + 1, stops.end(), [&](double t) { return (t - k) * dir >= 0.0; });
                    if (*it == k) continue;
                    keep.insert(keep.begin() + (it - stops.begin()), false);
                    stops.insert(it, k);
                }
                std::vector<State<N>> all;
                auto record = [&](const State<N>& s, double x) {
                    last_x = x;
                    all.push_back(s);
                };
                const double cap = max_step > 0.0 ? max_step : std::max(span_len, 1.0);
                auto stepper = ode::make_controlled(tol_.abs * tol_scale, tol_.rel * tol_scale, dir * cap,
                                                    ode::runge_kutta_fehlberg78<State<N>>());
                const double dx0 = dir * std::min(std::max(span_len, 1e-3) * 1e-3, cap);
                ode::integrate_times(stepper, system, y0, stops.begin(), stops.end(), dx0, record,
                                     ode::max_step_checker(20'000'000));
                for (std::size_t i = 0; i < all.size(); ++i)
                    if (keep[i]) out.push_back(all[i]);
            }
        } catch (const std::runtime_error& e) {
            throw IntegrationError(std::string("integration failed: ") + e.what(), last_x);
        }
        out.erase(out.begin());  // drop the initial state
        for (const auto& s : out)
            for (auto v : s)
                if (!is_finite(v)) throw IntegrationError("integration produced non-finite values", last_x);
        return out;
    }

    // Solutions at spectral parameter lambda = rho^2.
    std::vector<SolutionSample> solution_lambda(complex lambda, Which which, std::span<const double> x_eval) const {
        auto [x0, y0] = initial_state(which);
        std::vector<double> xs(x_eval.begin(), x_eval.end());
        const bool from_right = (which == Which::psi_H || which == Which::T);
        for (double x : xs)
            if (x < -1e-14 || x > b() * (1 + 1e-14)) throw DataError("solution: x outside [0, b]");
        if (!std::is_sorted(xs.begin(), xs.end())) throw DataError("solution: x_eval must be sorted");
        if (from_right) std::reverse(xs.begin(), xs.end());
        std::vector<SolutionSample> out;
        out.reserve(xs.size());
        const complex rho = sqrt_upper(lambda);
        if (use_modulated(rho)) {
            // y = u cos(rho x) + v sin(rho x), y' = rho(-u sin + v cos): u, v vary on
            // the scale of q/rho, so accuracy does not degrade with the frequency.
            auto rhs = [&](const State<2>& w, State<2>& dw, double x) {
                const complex c = std::cos(rho * x), s = std::sin(rho * x);
                const complex f = q_(x) * (w[0] * c + w[1] * s) / rho;
                dw[0] = -f * s;
                dw[1] = f * c;
            };
            const complex c0 = std::cos(rho * x0), s0 = std::sin(rho * x0);
            const State<2> w0{y0[0] * c0 - y0[1] * s0 / rho, y0[0] * s0 + y0[1] * c0 / rho};
            // The embedded error estimate is unreliable once a step spans a period;
            // amplitude errors are relative to O(1) values, so the tolerance is tightened.
            const auto states = integrate<2>(rhs, x0, w0, xs, 1.0 / std::abs(rho), 1e-2);
            for (std::size_t i = 0; i < states.size(); ++i) {
                const complex c = std::cos(rho * xs[i]), s = std::sin(rho * xs[i]);
                const auto& w = states[i];
                out.push_back({w[0] * c + w[1] * s, rho * (w[1] * c - w[0] * s)});
            }
        } else {
            auto rhs = [&](const State<2>& y, State<2>& dy, double x) {
                dy[0] = y[1];
                dy[1] = (q_(x) - lambda) * y[0];
            };
            for (const auto& s : integrate<2>(rhs, x0, State<2>{y0[0], y0[1]}, xs)) out.push_back({s[0], s[1]});
        }
        if (from_right) std::reverse(out.begin(), out.end());
        return out;
    }

    std::vector<SolutionSample> solution(complex rho, Which which, std::span<const double> x_eval) const {
        return solution_lambda(rho * rho, which, x_eval);
    }

    SolutionSample solution_at_lambda(complex lambda, Which which, double x) const {
        const double xs[1] = {x};
        return solution_lambda(lambda, which, xs)[0];
    }

    // Delta = phi_h'(b) + H phi_h(b); crosscheck -(psi_H'(0) - h psi_H(0)).
    TwoSided char_delta_lambda(complex lambda) const {
        const auto phi = solution_at_lambda(lambda, Which::phi_h, b());
        const auto psi = solution_at_lambda(lambda, Which::psi_H, 0.0);
        return {phi.derivative + c_.H * phi.value, -(psi.derivative - c_.h * psi.value)};
    }

    // Delta0 = S'(b) + H S(b); crosscheck psi_H(0).
    TwoSided char_delta0_lambda(complex lambda) const {
        const auto s = solution_at_lambda(lambda, Which::S, b());
        const auto psi = solution_at_lambda(lambda, Which::psi_H, 0.0);
        return {s.derivative + c_.H * s.value, psi.value};
    }

    TwoSided char_delta(complex rho) const { return char_delta_lambda(rho * rho); }
    TwoSided char_delta0(complex rho) const { return char_delta0_lambda(rho * rho); }

    // One-sided evaluations, used inside root finders.
    complex delta_lambda(complex lambda) const {
        const auto phi = solution_at_lambda(lambda, Which::phi_h, b());
        return phi.derivative + c_.H * phi.value;
    }
    complex delta0_lambda(complex lambda) const {
        const auto s = solution_at_lambda(lambda, Which::S, b());
        return s.derivative + c_.H * s.value;
    }

    // dDelta/drho from the variational equation u'' = (q - lambda) u - y.
    complex delta_dot(complex rho) const {
        const complex lambda = rho * rho;
        auto rhs = [&](const State<4>& y, State<4>& dy, double x) {
            const complex w = q_(x) - lambda;
            dy[0] = y[1];
            dy[1] = w * y[0];
            dy[2] = y[3];
            dy[3] = w * y[2] - y[0];
        };
        const double xs[1] = {b()};
        const auto s = integrate<4>(rhs, 0.0, State<4>{1.0, c_.h, 0.0, 0.0}, xs)[0];
        return 2.0 * rho * (s[3] + c_.H * s[2]);
    }

    MultiplierConstant multiplier_constant(complex rho_k) const {
        const complex lambda = rho_k * rho_k;
        const complex phi_b = solution_at_lambda(lambda, Which::phi_h, b()).value;
        const complex psi_0 = solution_at_lambda(lambda, Which::psi_H, 0.0).value;
        MultiplierConstant m;
        m.beta = phi_b;
        m.discrepancy = std::abs(phi_b - 1.0 / psi_0) / std::abs(phi_b);
        m.flagged = !(m.discrepancy <= 1e-7);
        return m;
    }

    // alpha_k = int_0^b phi_h^2(rho_k, x) dx, integrated alongside the solution.
    complex norming_constant(complex rho_k) const {
        const complex lambda = rho_k * rho_k;
        auto rhs = [&](const State<3>& y, State<3>& dy, double x) {
            dy[0] = y[1];
            dy[1] = (q_(x) - lambda) * y[0];
            dy[2] = y[0] * y[0];
        };
        const double xs[1] = {b()};
        return integrate<3>(rhs, 0.0, State<3>{1.0, c_.h, 0.0}, xs)[0][2];
    }

    // M(rho) = -Delta0(rho)/Delta(rho).
    complex weyl_value(complex rho) const {
        const complex lambda = rho * rho;
        const complex d = delta_lambda(lambda);
        const complex d0 = delta0_lambda(lambda);
        // Integration error in Delta grows like |rho|^2.
        const double noise = 1e-12 * std::max(1.0, std::norm(rho));
        if (std::abs(d) < noise * std::max(1.0, std::abs(d0)))
            throw PoleError("weyl_value: rho is at an eigenvalue of L", 0);
        return -d0 / d;
    }

    // Amplitude-phase form is used at high frequency while the trig factors stay moderate.
    bool use_modulated(complex rho) const {
        return q_.kind() == PotentialSpec::Kind::closed_form && std::abs(rho) >= tol_.modulated_from &&
               std::abs(rho.imag()) * b() <= 20.0;
    }

private:
    std::pair<double, std::array<complex, 2>> initial_state(Which which) const {
        switch (which) {
            case Which::phi_h: return {0.0, {1.0, c_.h}};
            case Which::S: return {0.0, {0.0, 1.0}};
            case Which::psi_H: return {b(), {1.0, -c_.H}};
            case Which::T: return {b(), {0.0, 1.0}};
        }
        return {0.0, {1.0, 0.0}};
    }

    PotentialSpec q_;
    BoundaryConstants c_;
    IntegrationTolerance tol_;
};

// ---------------------------------------------------------------------------
// Eigenvalue search

struct SelfAdjointOptions {
    int max_refinements = 3;
};

// First `count` real zeros of f (a characteristic function in the lambda
// variable) above lambda_min_hint, for an interval of length b.
inline std::vector<double> find_eigenvalues_selfadjoint(const std::function<double(double)>& f, int count,
                                                        double lambda_min_hint, double b,
                                                        SelfAdjointOptions opt = {}) {
    if (count <= 0) return {};
    const double unit = pi / b;

    auto sweep = [&](double refine) {
        std::vector<double> roots;
        double lo = lambda_min_hint;
        double f_lo = f(lo);
        int guard = 0;
        while (int(roots.size()) < count) {
            if (++guard > 2'000'000) throw RootFindingError("eigenvalue sweep did not terminate");
            const double step = unit * std::sqrt(std::max(std::abs(lo), unit * unit)) / (4.0 * refine);
            const double hi = lo + step;
            const double f_hi = f(hi);
            if (f_hi == 0.0) {
                roots.push_back(hi);
            } else if (f_lo != 0.0 && std::signbit(f_lo) != std::signbit(f_hi)) {
                boost::uintmax_t iters = 200;
                auto tol = [](double a, double c) { return std::abs(c - a) <= 4e-16 * std::max(1.0, std::abs(a)); };
                const auto br = boost::math::tools::toms748_solve(f, lo, hi, f_lo, f_hi, tol, iters);
                roots.push_back(0.5 * (br.first + br.second));
            }
            lo = hi;
            f_lo = f_hi;
        }
        return roots;
    };

    // Spacing check: for large k consecutive gaps follow (pi/b)^2 (2k +- 1).
    auto suspicious = [&](const std::vector<double>& r) {
        for (std::size_t k = 2; k < r.size(); ++k) {
            const double expected = unit * unit * 2.0 * double(k);
            const double gap = r[k] - r[k - 1];
            const double scale = std::max(std::abs(r[k - 1] - lambda_min_hint), 1.0);
            if (scale > 16.0 * expected && std::abs(gap / expected - 1.0) > 0.6) return true;
        }
        return false;
    };

    double refine = 1.0;
    auto roots = sweep(refine);
    for (int attempt = 0; attempt < opt.max_refinements && suspicious(roots); ++attempt) {
        refine *= 2.0;
        auto again = sweep(refine);
        bool same = again.size() == roots.size();
        for (std::size_t i = 0; same && i < roots.size(); ++i)
            same = std::abs(again[i] - roots[i]) <= 1e-9 * std::max(1.0, std::abs(roots[i]));
        roots = std::move(again);
        if (same) return roots;
    }
    if (suspicious(roots) && opt.max_refinements > 0 && refine == 1.0)
        throw RootFindingError("eigenvalue spacing suggests a missed root");
    return roots;
}

struct Rect {
    double re_lo, re_hi, im_lo, im_hi;
    complex center() const { return {0.5 * (re_lo + re_hi), 0.5 * (im_lo + im_hi)}; }
    bool contains(complex z) const {
        return z.real() >= re_lo && z.real() < re_hi && z.imag() >= im_lo && z.imag() < im_hi;
    }
};

struct ComplexRootOptions {
    int points_per_side = 64;
    int max_depth = 40;
    double root_tol = 1e-13;
};

namespace detail {

struct BoundaryZero {};

class WindingCounter {
public:
    explicit WindingCounter(const std::function<complex(complex)>& f) : f_(f) {}

    double winding(const Rect& r, int per_side) {
        const complex c[4] = {{r.re_lo, r.im_lo}, {r.re_hi, r.im_lo}, {r.re_hi, r.im_hi}, {r.re_lo, r.im_hi}};
        double total = 0.0;
        scale_ = 0.0;
        for (int s = 0; s < 4; ++s) {
            const complex a = c[s], b = c[(s + 1) % 4];
            complex za = a, fa = eval(a);
            for (int i = 1; i <= per_side; ++i) {
                const complex zb = a + (b - a) * (double(i) / per_side);
                const complex fb = eval(zb);
                total += segment(za, fa, zb, fb, 0);
                za = zb;
                fa = fb;
            }
        }
        return total / (2.0 * pi);
    }

    double boundary_scale() const { return scale_; }

private:
    complex eval(complex z) {
        const complex v = f_(z);
        if (!is_finite(v) || v == complex{}) throw BoundaryZero{};
        scale_ = std::max(scale_, std::abs(v));
        return v;
    }

    double segment(complex za, complex fa, complex zb, complex fb, int depth) {
        const double d = std::arg(fb / fa);
        if (std::abs(d) <= pi / 4 || depth >= 24) return d;
        const complex zm = 0.5 * (za + zb);
        const complex fm = eval(zm);
        return segment(za, fa, zm, fm, depth + 1) + segment(zm, fm, zb, fb, depth + 1);
    }

    const std::function<complex(complex)>& f_;
    double scale_ = 0.0;
};

inline std::optional<complex> secant(const std::function<complex(complex)>& f, complex z0, complex z1, double tol) {
    complex f0 = f(z0), f1 = f(z1);
    for (int it = 0; it < 100; ++it) {
        if (f1 == complex{}) return z1;
        const complex den = f1 - f0;
        if (den == complex{}) return std::nullopt;
        const complex z2 = z1 - f1 * (z1 - z0) / den;
        if (!is_finite(z2)) return std::nullopt;
        z0 = z1;
        f0 = f1;
        z1 = z2;
        if (std::abs(z1 - z0) <= tol * std::max(1.0, std::abs(z1))) return z1;
        f1 = f(z1);
    }
    return std::nullopt;
}

}  // namespace detail

// Zeros of an analytic f inside rect, located by the argument principle and
// refined by complex secant iteration. Sorted by real part; if count > 0,
// the first `count` are returned and fewer is an error.
inline std::vector<complex> find_eigenvalues_complex(const std::function<complex(complex)>& f, Rect rect,
                                                     int count, ComplexRootOptions opt = {}) {
    std::vector<complex> roots;
    detail::WindingCounter counter(f);

    auto count_zeros = [&](Rect& r) -> int {
        for (int jitter = 0; jitter < 6; ++jitter) {
            try {
                int per_side = opt.points_per_side;
                for (int attempt = 0; attempt < 3; ++attempt, per_side *= 2) {
                    const double w = counter.winding(r, per_side);
                    const double n = std::round(w);
                    if (std::abs(w - n) < 0.2 && n >= 0) return int(n);
                }
                throw RootFindingError("argument principle: winding number not converging");
            } catch (const detail::BoundaryZero&) {
                const double dx = 1e-3 * (r.re_hi - r.re_lo), dy = 1e-3 * (r.im_hi - r.im_lo);
                r.re_lo -= dx * (jitter + 1);
                r.im_lo -= dy * (jitter + 1);
            }
        }
        throw RootFindingError("argument principle: zero on rectangle boundary");
    };

    std::function<void(Rect, int)> search = [&](Rect r, int depth) {
        const int n = count_zeros(r);
        if (n == 0) return;
        if (n == 1) {
            const double size = std::max(r.re_hi - r.re_lo, r.im_hi - r.im_lo);
            const complex c = r.center();
            if (auto z = detail::secant(f, c, c + complex(1e-3 * size, 1e-3 * size), opt.root_tol);
                z && r.contains(*z)) {
                roots.push_back(*z);
                return;
            }
        }
        if (depth >= opt.max_depth) throw RootFindingError("argument principle: subdivision depth exceeded");
        // Split slightly off-center so new edges are unlikely to hit zeros.
        const double xm = r.re_lo + 0.5007 * (r.re_hi - r.re_lo);
        const double ym = r.im_lo + 0.4993 * (r.im_hi - r.im_lo);
        search({r.re_lo, xm, r.im_lo, ym}, depth + 1);
        search({xm, r.re_hi, r.im_lo, ym}, depth + 1);
        search({xm, r.re_hi, ym, r.im_hi}, depth + 1);
        search({r.re_lo, xm, ym, r.im_hi}, depth + 1);
    };
    search(rect, 0);

    std::sort(roots.begin(), roots.end(), [](complex a, complex b) { return a.real() < b.real(); });
    if (count > 0) {
        if (int(roots.size()) < count) throw RootFindingError("fewer eigenvalues in the search rectangle than requested");
        roots.resize(std::size_t(count));
    }
    return roots;
}

// ---------------------------------------------------------------------------
// Spectra of L and L0

enum class Spectrum { L, L0 };

// Rayleigh-quotient lower bound for Re lambda.
inline double lambda_lower_bound(const ForwardProblem& fp, Spectrum which) {
    const auto& c = fp.constants();
    double neg = std::max(0.0, -c.H.real());
    if (which == Spectrum::L) neg += std::max(0.0, -c.h.real());
    return fp.potential().min_real() - neg / fp.b() - neg * neg - 1.0;
}

inline Rect default_search_rect(const ForwardProblem& fp, Spectrum which, int count) {
    const auto& q = fp.potential();
    const auto& c = fp.constants();
    const double b = fp.b();
    const double lo = lambda_lower_bound(fp, which);
    const double hi = std::pow((count + 1.0) * pi / b, 2) + q.max_abs() + 2.0 * (std::abs(c.h) + std::abs(c.H)) / b + 10.0;
    const double energy = hi - lo;
    const double imag_bc = std::abs(c.H.imag()) + (which == Spectrum::L ? std::abs(c.h.imag()) : 0.0);
    const double a = q.max_abs_imag() + imag_bc * (1.0 / b + 2.0 * std::sqrt(energy)) + 1.0;
    return {lo, hi, -a, a};
}

// First `count` eigenvalues of L or L0, chosen by the cheapest sound route:
// real bracketing for self-adjoint problems, a real solve plus a shift when
// Im q is constant and the boundary constants are real, else the argument
// principle.
inline std::vector<complex> eigenvalues(const ForwardProblem& fp, Spectrum which, int count) {
    const auto& c = fp.constants();
    const bool real_bc = c.H.imag() == 0.0 && (which == Spectrum::L0 || c.h.imag() == 0.0);
    const auto& q = fp.potential();
    auto real_search = [&](const ForwardProblem& p, double shift) {
        auto f = [&](double lambda) {
            return (which == Spectrum::L ? p.delta_lambda(lambda) : p.delta0_lambda(lambda)).real();
        };
        const auto r = find_eigenvalues_selfadjoint(f, count, lambda_lower_bound(p, which), p.b());
        std::vector<complex> out;
        for (double v : r) out.emplace_back(v, shift);
        return out;
    };
    if (real_bc && q.is_real()) return real_search(fp, 0.0);
    if (real_bc && q.imag_shift()) {
        const ForwardProblem re(q.real_part(), c, fp.tolerance());
        return real_search(re, *q.imag_shift());
    }
    auto f = [&](complex lambda) {
        return which == Spectrum::L ? fp.delta_lambda(lambda) : fp.delta0_lambda(lambda);
    };
    Rect rect = default_search_rect(fp, which, count);
    for (int grow = 0;; ++grow) {
        try {
            return find_eigenvalues_complex(f, rect, count);
        } catch (const RootFindingError&) {
            if (grow >= 3) throw;
            rect.re_hi += (rect.re_hi - rect.re_lo);
        }
    }
}

// ---------------------------------------------------------------------------
// Data generation

inline ComplexSeq singular_numbers(const std::vector<complex>& lambdas) {
    ComplexSeq out;
    out.reserve(lambdas.size());
    for (auto l : lambdas) out.push_back(sqrt_upper(l));
    return out;
}

// lambda_k -> lambda_k + sigma sin((k+1) pi / 37), for rho_k and (IP1) mu_k.
inline SpectralDataset add_noise(SpectralDataset data, double sigma) {
    if (sigma < 0.0) throw DataError("add_noise: sigma must be nonnegative");
    if (sigma == 0.0) return data;
    auto perturb = [sigma](ComplexSeq& rho) {
        for (std::size_t k = 0; k < rho.size(); ++k) {
            const complex lambda = rho[k] * rho[k] + sigma * std::sin(double(k + 1) * pi / 37.0);
            rho[k] = sqrt_upper(lambda);
        }
    };
    perturb(data.rho_k);
    if (data.problem_kind == ProblemKind::IP1) perturb(data.mu_k);
    data.noise_sigma = sigma;
    return data;
}

struct WeylSampling {
    int count = 2000;
    double lo = 0.01;
    double hi = 1000.0;
    int probes = 20;
};

inline std::vector<double> log_spaced(int n, double lo, double hi) {
    std::vector<double> r(std::size_t(std::max(n, 0)));
    const double a = std::log10(lo), c = std::log10(hi);
    for (int j = 0; j < n; ++j) r[std::size_t(j)] = std::pow(10.0, n == 1 ? a : a + (c - a) * j / (n - 1));
    return r;
}

inline std::vector<double> uniform_spaced(int n, double lo, double hi) {
    std::vector<double> r(std::size_t(std::max(n, 0)));
    for (int j = 0; j < n; ++j) r[std::size_t(j)] = n == 1 ? lo : lo + (hi - lo) * j / (n - 1);
    return r;
}

// Builds the dataset of the given kind from the first `count` eigenpairs
// (or, for IP2, from Weyl samples). Noise is not applied here.
inline SpectralDataset generate_dataset(const ForwardProblem& fp, ProblemKind kind, int count,
                                        WeylSampling weyl = {}) {
    SpectralDataset d;
    d.problem_kind = kind;
    d.b = fp.b();
    if (kind == ProblemKind::IP2) {
        for (double r : log_spaced(weyl.count, weyl.lo, weyl.hi)) {
            d.weyl_points.emplace_back(r);
            d.weyl_values.push_back(fp.weyl_value(r));
        }
        for (double r : uniform_spaced(weyl.probes, weyl.lo, weyl.hi)) {
            d.weyl_probe_points.emplace_back(r);
            d.weyl_probe_values.push_back(fp.weyl_value(r));
        }
        d.validate();
        return d;
    }
    d.rho_k = singular_numbers(eigenvalues(fp, Spectrum::L, count));
    if (kind == ProblemKind::IP1) d.mu_k = singular_numbers(eigenvalues(fp, Spectrum::L0, count));
    if (kind == ProblemKind::IP3) {
        for (std::size_t k = 0; k < d.rho_k.size(); ++k) {
            const auto m = fp.multiplier_constant(d.rho_k[k]);
            if (m.flagged) throw PoleError("multiplier constant two-sided mismatch: inaccurate eigenvalue", int(k));
            d.beta_k.push_back(m.beta);
        }
    }
    if (kind == ProblemKind::IP4)
        for (auto r : d.rho_k) d.alpha_k.push_back(fp.norming_constant(r));
    d.validate();
    return d;
}

}  // namespace nsbf::oracle
