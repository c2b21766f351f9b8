#pragma once

// Spherical Bessel functions of the first kind for complex argument.

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "nsbf/common.hpp"

namespace nsbf::specfun {

// Largest |Im z| for which cosh/sinh stay inside the double range.
inline constexpr double max_imag_part = 709.0;

// Below this modulus the ascending series is used instead of recurrence.
inline constexpr double small_argument = 1e-4;

inline std::pair<complex, complex> trig_pair(complex z) {
    if (!(std::abs(z.imag()) <= max_imag_part) || !std::isfinite(z.real()))
        throw OverflowError("trig_pair: |Im z| out of range");
    return {std::cos(z), std::sin(z)};
}

namespace detail {

// Four terms of the ascending series
//   j_n(z) = z^n/(2n+1)!! * sum_k (-z^2/2)^k / (k! (2n+3)(2n+5)...(2n+2k+1)).
inline void small_series(complex z, std::span<complex> out) {
    const complex w = -0.5 * z * z;
    complex lead = 1.0;
    for (std::size_t n = 0; n < out.size(); ++n) {
        if (n > 0) lead *= z / double(2 * n + 1);
        const double m = 2.0 * double(n);
        complex term = 1.0, sum = 1.0;
        for (int k = 1; k <= 3; ++k) {
            term *= w / (double(k) * (m + 2.0 * k + 1.0));
            sum += term;
        }
        out[n] = lead * sum;
    }
}

// Starting order for the downward recurrence: run the three-term recurrence
// upward from (0, 1) at order n0 until the dominant solution has grown by
// 1e17, which bounds the relative contamination of the minimal solution.
inline int miller_start(int n0, complex z) {
    complex p_prev = 0.0, p = 1.0;
    int n = n0 + 1;
    const int cap = n0 + 64 + int(4.0 * std::abs(z)) + 20000;
    while (std::abs(p) < 1e17 && n < cap) {
        complex next = double(2 * n + 1) / z * p - p_prev;
        p_prev = p;
        p = next;
        ++n;
    }
    return std::max(n + 8, n0 + 16);
}

}  // namespace detail

// Writes j_0(z), ..., j_{out.size()-1}(z) into out.
inline void sph_bessel_j(complex z, std::span<complex> out) {
    if (out.empty()) return;
    if (!is_finite(z)) throw OverflowError("sph_bessel_j: non-finite argument", 0);
    if (std::abs(z.imag()) > max_imag_part)
        throw OverflowError("sph_bessel_j: |Im z| exceeds floating range", 0);

    const int n_max = int(out.size()) - 1;
    const double az = std::abs(z);
    if (az == 0.0) {
        std::fill(out.begin(), out.end(), complex{});
        out[0] = 1.0;
        return;
    }
    if (az < small_argument) {
        detail::small_series(z, out);
        return;
    }

    // Well inside the oscillatory range every order is dominant and the
    // forward recurrence is stable.
    if (double(n_max) <= 0.5 * az - 2.0) {
        const auto [c, s] = trig_pair(z);
        out[0] = s / z;
        if (n_max == 0) return;
        out[1] = s / (z * z) - c / z;
        for (int n = 1; n < n_max; ++n) out[n + 1] = double(2 * n + 1) / z * out[n] - out[n - 1];
        return;
    }

    // Miller: downward recurrence from an order where j_n is negligible,
    // normalized against the closed form of j_0 or j_1.
    std::array<complex, 2> spare{};
    std::span<complex> work = n_max >= 1 ? out : std::span<complex>(spare);
    const int n_keep = int(work.size()) - 1;
    const int start = detail::miller_start(n_keep, z);
    complex f1 = 0.0;     // f_{n+1}
    complex f0 = 1e-300;  // f_n
    for (int n = start; n >= 1; --n) {
        const complex fm = double(2 * n + 1) / z * f0 - f1;
        f1 = f0;
        f0 = fm;
        const int m = n - 1;
        if (m <= n_keep) work[m] = f0;
        if (std::abs(f0) > 1e200) {
            f0 *= 1e-200;
            f1 *= 1e-200;
            for (int k = std::min(m, n_keep + 1); k <= n_keep; ++k) work[k] *= 1e-200;
        }
    }

    const auto [c, s] = trig_pair(z);
    const complex j0 = s / z;
    const complex j1 = s / (z * z) - c / z;
    const bool use_j0 = std::abs(j0) >= std::abs(j1);
    const complex scale = use_j0 ? j0 / work[0] : j1 / work[1];
    for (auto& v : work) v *= scale;
    if (use_j0) work[0] = j0;
    else work[1] = j1;
    if (n_max == 0) out[0] = work[0];
}

inline std::vector<complex> sph_bessel_j_seq(int n_max, complex z) {
    if (n_max < 0) throw DataError("sph_bessel_j_seq: n_max must be nonnegative");
    std::vector<complex> out(std::size_t(n_max) + 1);
    sph_bessel_j(z, out);
    return out;
}

}  // namespace nsbf::specfun
