#pragma once

// Dense complex least squares: column-equilibrated, column-pivoted
// Householder QR with a rank check on the triangular factor.

#include <Eigen/Dense>
#include <Eigen/QR>

#include <algorithm>
#include <limits>
#include <string>

#include "nsbf/common.hpp"

namespace nsbf {

using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

struct LstsqReport {
    ComplexVector solution;
    double residual_norm = 0.0;
    double condition_estimate = 1.0;
    // Smallest scaled diagonal of R fell below rank_tolerance times the
    // largest; solution is then the minimum-norm one.
    bool rank_deficient = false;
};

inline constexpr double rank_tolerance = 1e-13;

inline LstsqReport solve_least_squares(const ComplexMatrix& A, const ComplexVector& b) {
    const Eigen::Index m = A.rows(), n = A.cols();
    if (m != b.size()) throw DataError("solve_least_squares: rows(A) != len(b)");
    if (n < 1 || m < n) throw DataError("solve_least_squares: need rows >= cols >= 1");
    if (!A.allFinite() || !b.allFinite())
        throw DataError("solve_least_squares: non-finite entries");

    Eigen::VectorXd scale = A.colwise().norm().transpose();
    for (Eigen::Index j = 0; j < n; ++j)
        if (scale[j] == 0.0) scale[j] = 1.0;
    const ComplexMatrix As = A * scale.cwiseInverse().asDiagonal();

    Eigen::ColPivHouseholderQR<ComplexMatrix> qr(As);
    const auto diag = qr.matrixR().diagonal().cwiseAbs();
    const double dmax = diag.maxCoeff();
    const double dmin = diag.minCoeff();

    LstsqReport report;
    report.condition_estimate = dmin > 0.0 ? std::max(1.0, dmax / dmin)
                                           : std::numeric_limits<double>::infinity();
    report.rank_deficient = !(dmin >= rank_tolerance * dmax);

    ComplexVector y;
    if (!report.rank_deficient) {
        y = qr.solve(b);
    } else {
        Eigen::CompleteOrthogonalDecomposition<ComplexMatrix> cod;
        cod.setThreshold(rank_tolerance);
        cod.compute(As);
        y = cod.solve(b);
    }
    report.solution = scale.cwiseInverse().asDiagonal() * y;
    report.residual_norm = (A * report.solution - b).norm();
    return report;
}

// Throws RankDeficientError tagged with the caller's context.
inline LstsqReport solve_least_squares_checked(const ComplexMatrix& A, const ComplexVector& b,
                                               const std::string& context) {
    LstsqReport r = solve_least_squares(A, b);
    if (r.rank_deficient)
        throw RankDeficientError(context + ": rank-deficient system (condition estimate " +
                                 std::to_string(r.condition_estimate) + ")");
    return r;
}

}  // namespace nsbf
