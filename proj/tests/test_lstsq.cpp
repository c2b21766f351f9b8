#include <gtest/gtest.h>

#include <random>

#include "nsbf/lstsq.hpp"

using namespace nsbf;

namespace {

ComplexMatrix random_matrix(int m, int n, std::mt19937& gen) {
    std::normal_distribution<double> d;
    ComplexMatrix A(m, n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = {d(gen), d(gen)};
    return A;
}

}  // namespace

TEST(Lstsq, Identity) {
    ComplexMatrix A = ComplexMatrix::Identity(2, 2);
    ComplexVector b(2);
    b << complex(3, 1), complex(-2, 0);
    const auto r = solve_least_squares(A, b);
    EXPECT_LT((r.solution - b).norm(), 1e-15);
    EXPECT_LT(r.residual_norm, 1e-15);
    EXPECT_DOUBLE_EQ(r.condition_estimate, 1.0);
    EXPECT_FALSE(r.rank_deficient);
}

TEST(Lstsq, MeanOfTwoObservations) {
    ComplexMatrix A(2, 1);
    A << 1.0, 1.0;
    ComplexVector b(2);
    b << 0.0, 2.0;
    const auto r = solve_least_squares(A, b);
    EXPECT_NEAR(std::abs(r.solution(0) - 1.0), 0.0, 1e-15);
    EXPECT_NEAR(r.residual_norm, std::sqrt(2.0), 1e-15);
}

TEST(Lstsq, RecoversExactSolution) {
    std::mt19937 gen(11);
    const ComplexMatrix A = random_matrix(40, 7, gen);
    const ComplexVector x = random_matrix(7, 1, gen);
    const auto r = solve_least_squares(A, A * x);
    EXPECT_LE((r.solution - x).norm(), 1e-10 * x.norm());
}

TEST(Lstsq, ResidualMatchesRecomputation) {
    std::mt19937 gen(3);
    const ComplexMatrix A = random_matrix(30, 5, gen);
    const ComplexVector b = random_matrix(30, 1, gen);
    const auto r = solve_least_squares(A, b);
    EXPECT_NEAR(r.residual_norm, (A * r.solution - b).norm(), 1e-10 * r.residual_norm);
    // Normal-equation residual vanishes at the minimizer.
    const double ortho = (A.adjoint() * (A * r.solution - b)).norm();
    EXPECT_LE(ortho, 1e-9 * A.norm() * b.norm());
    EXPECT_GE(r.condition_estimate, 1.0);
}

TEST(Lstsq, ScalingEquivariance) {
    std::mt19937 gen(5);
    const ComplexMatrix A = random_matrix(25, 6, gen);
    const ComplexVector b = random_matrix(25, 1, gen);
    Eigen::VectorXd d(6);
    d << 1e-4, 1.0, 1e3, 7.0, 1e-2, 50.0;
    const auto r1 = solve_least_squares(A, b);
    const auto r2 = solve_least_squares(A * d.asDiagonal(), b);
    const ComplexVector back = d.asDiagonal() * r2.solution;
    EXPECT_LE((back - r1.solution).norm(), 1e-10 * r1.solution.norm());
}

TEST(Lstsq, RankDeficiencySignalled) {
    std::mt19937 gen(9);
    ComplexMatrix A = random_matrix(12, 4, gen);
    A.col(3) = A.col(0) * complex(2.0, -1.0);
    const ComplexVector b = random_matrix(12, 1, gen);
    const auto r = solve_least_squares(A, b);
    EXPECT_TRUE(r.rank_deficient);
    EXPECT_TRUE(r.solution.allFinite());
    EXPECT_NEAR(r.residual_norm, (A * r.solution - b).norm(), 1e-10 * b.norm());
    EXPECT_THROW(solve_least_squares_checked(A, b, "ctx"), RankDeficientError);
}

TEST(Lstsq, InvalidInputs) {
    ComplexMatrix A = ComplexMatrix::Ones(2, 3);
    ComplexVector b = ComplexVector::Ones(2);
    EXPECT_THROW(solve_least_squares(A, b), DataError);
    ComplexMatrix B = ComplexMatrix::Ones(3, 2);
    EXPECT_THROW(solve_least_squares(B, b), DataError);
    B(0, 0) = complex(std::nan(""), 0.0);
    EXPECT_THROW(solve_least_squares(B, ComplexVector::Ones(3)), DataError);
}
