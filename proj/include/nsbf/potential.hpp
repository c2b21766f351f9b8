#pragma once

// Ground-truth potentials q(x) on [0, b]: the built-in registry of test
// problems plus tabulated potentials interpolated by natural cubic splines.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nsbf/common.hpp"

namespace nsbf {

struct BoundaryConstants {
    complex h{};
    complex H{};
};

// Natural cubic spline through complex samples.
class NaturalSpline {
public:
    NaturalSpline() = default;
    NaturalSpline(std::vector<double> x, std::vector<complex> y) : x_(std::move(x)), y_(std::move(y)) {
        const std::size_t n = x_.size();
        if (n < 2 || y_.size() != n) throw DataError("NaturalSpline: need >= 2 matching samples");
        for (std::size_t i = 1; i < n; ++i)
            if (!(x_[i] > x_[i - 1])) throw DataError("NaturalSpline: abscissae must increase");
        m_.assign(n, complex{});
        if (n == 2) return;
        // Thomas algorithm for the interior second derivatives.
        std::vector<double> diag(n), upper(n);
        std::vector<complex> rhs(n);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
            diag[i] = 2.0 * (h0 + h1);
            upper[i] = h1;
            rhs[i] = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
        }
        for (std::size_t i = 2; i + 1 < n; ++i) {
            const double lower = x_[i] - x_[i - 1];
            const double w = lower / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        for (std::size_t i = n - 2; i >= 1; --i) {
            m_[i] = (rhs[i] - upper[i] * m_[i + 1]) / diag[i];
            if (i == 1) break;
        }
    }

    complex operator()(double x) const {
        const auto it = std::upper_bound(x_.begin(), x_.end(), x);
        std::size_t i = std::size_t(std::clamp<std::ptrdiff_t>(it - x_.begin() - 1, 0, std::ptrdiff_t(x_.size()) - 2));
        const double h = x_[i + 1] - x_[i];
        const double a = (x_[i + 1] - x) / h, b = (x - x_[i]) / h;
        return a * y_[i] + b * y_[i + 1] +
               ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * (h * h / 6.0);
    }

private:
    std::vector<double> x_;
    std::vector<complex> y_;
    std::vector<complex> m_;
};

class PotentialSpec {
public:
    enum class Kind { closed_form, tabulated };

    static PotentialSpec builtin(const std::string& id, double b) {
        if (!(b > 0.0)) throw DataError("potential: interval length must be positive");
        PotentialSpec p;
        p.kind_ = Kind::closed_form;
        p.id_ = id;
        p.b_ = b;
        if (id == "zero") {
            p.fn_ = [](double) { return complex{}; };
        } else if (id == "x^2") {
            p.fn_ = [](double x) { return complex{x * x}; };
        } else if (id == "exp(x)") {
            p.fn_ = [](double x) { return complex{std::exp(x)}; };
        } else if (id == "exp(x)+pi*i") {
            p.fn_ = [](double x) { return complex{std::exp(x), pi}; };
            p.imag_shift_ = pi;
        } else if (id == "ex3_cos8x") {
            p.fn_ = [](double x) {
                return complex{(std::pow(x, pi / 2) + pi) * std::cos(8 * x) + pi * pi, -std::sqrt(5.0)};
            };
            p.imag_shift_ = -std::sqrt(5.0);
        } else if (id.rfind("mathieu(", 0) == 0 && id.back() == ')') {
            const double s = std::stod(id.substr(8, id.size() - 9));
            p.fn_ = [s](double x) { return complex{0.0, s * std::cos(2 * x)}; };
            p.real_ = false;
        } else if (id == "paine2_imag") {
            p.fn_ = [](double x) { return complex{std::exp(x), 1.0 / ((x + 0.1) * (x + 0.1))}; };
            p.real_ = false;
        } else if (id == "nonsmooth_abs") {
            p.fn_ = [](double x) {
                return complex{std::abs(3.0 - std::abs(x * x - 3.0)), std::abs(std::cos(2 * x))};
            };
            p.real_ = false;
            for (double k : {pi / 4, std::sqrt(3.0), 3 * pi / 4, std::sqrt(6.0), 5 * pi / 4})
                if (k < b) p.breakpoints_.push_back(k);
        } else {
            throw DataError("potential: unknown built-in id '" + id + "'");
        }
        if (p.imag_shift_) p.real_ = false;
        return p;
    }

    static PotentialSpec tabulated(std::vector<double> x, std::vector<complex> q) {
        if (x.size() < 2 || x.size() != q.size()) throw DataError("potential: bad table");
        const double b = x.back();
        if (std::abs(x.front()) > 1e-12 || !(b > 0.0))
            throw DataError("potential: table must cover [0, b]");
        for (std::size_t i = 1; i < x.size(); ++i)
            if (x[i] - x[i - 1] > b / 256.0 * (1.0 + 1e-9))
                throw DataError("potential: table spacing exceeds b/256");
        for (auto v : q)
            if (!is_finite(v)) throw DataError("potential: non-finite table value");
        PotentialSpec p;
        p.kind_ = Kind::tabulated;
        p.id_ = "tabulated";
        p.b_ = b;
        p.real_ = std::all_of(q.begin(), q.end(), [](complex v) { return v.imag() == 0.0; });
        const double im0 = q.front().imag();
        if (!p.real_ && std::all_of(q.begin(), q.end(), [im0](complex v) { return v.imag() == im0; }))
            p.imag_shift_ = im0;
        p.table_x_ = x;
        p.table_q_ = q;
        auto spline = std::make_shared<NaturalSpline>(std::move(x), std::move(q));
        p.fn_ = [spline](double t) { return (*spline)(t); };
        return p;
    }

    complex operator()(double x) const { return fn_(x); }

    Kind kind() const { return kind_; }
    const std::string& id() const { return id_; }
    double b() const { return b_; }
    bool is_real() const { return real_; }
    // Set when Im q is a known constant c: the spectrum is that of Re q shifted by i c.
    std::optional<double> imag_shift() const { return imag_shift_; }
    // Interior points where q or q' jumps; integrators must not step across them.
    const std::vector<double>& breakpoints() const { return breakpoints_; }
    const std::vector<double>& table_x() const { return table_x_; }
    const std::vector<complex>& table_q() const { return table_q_; }

    // Real part with any constant imaginary shift removed.
    PotentialSpec real_part() const {
        PotentialSpec p = *this;
        auto f = fn_;
        p.fn_ = [f](double x) { return complex{f(x).real()}; };
        p.real_ = true;
        p.imag_shift_.reset();
        p.id_ = "Re[" + id_ + "]";
        return p;
    }

    double min_real(int samples = 2048) const {
        double m = std::numeric_limits<double>::infinity();
        for (int i = 0; i <= samples; ++i) m = std::min(m, fn_(b_ * i / samples).real());
        return m;
    }
    double max_abs(int samples = 2048) const {
        double m = 0.0;
        for (int i = 0; i <= samples; ++i) m = std::max(m, std::abs(fn_(b_ * i / samples)));
        return m;
    }
    double max_abs_imag(int samples = 2048) const {
        double m = 0.0;
        for (int i = 0; i <= samples; ++i) m = std::max(m, std::abs(fn_(b_ * i / samples).imag()));
        return m;
    }

private:
    Kind kind_ = Kind::closed_form;
    std::string id_;
    double b_ = 1.0;
    bool real_ = true;
    std::optional<double> imag_shift_;
    std::vector<double> breakpoints_;
    std::vector<double> table_x_;
    std::vector<complex> table_q_;
    std::function<complex(double)> fn_;
};

}  // namespace nsbf
