#include <gtest/gtest.h>

#include <random>

#include "nsbf/oracle.hpp"

using namespace nsbf;
using oracle::ForwardProblem;
using oracle::Spectrum;
using oracle::Which;

namespace {

ForwardProblem ex1() { return ForwardProblem(PotentialSpec::builtin("x^2", 1.0), {10.0, pi}); }
ForwardProblem ex2() { return ForwardProblem(PotentialSpec::builtin("exp(x)", pi), {10.0, pi}); }
ForwardProblem ex3() {
    return ForwardProblem(PotentialSpec::builtin("ex3_cos8x", pi), {std::sqrt(2.0), -std::exp(1.0)});
}
ForwardProblem ex4() { return ForwardProblem(PotentialSpec::builtin("mathieu(2)", pi), {0.7, I}); }
ForwardProblem zero(double b, complex h = 0.0, complex H = 0.0) {
    return ForwardProblem(PotentialSpec::builtin("zero", b), {h, H});
}

// Classical RK4 on a uniform grid, used as an independent reference.
std::array<complex, 2> rk4_phi(const PotentialSpec& q, complex h, complex lambda, double x_end, int steps) {
    std::array<complex, 2> y{1.0, h};
    const double dx = x_end / steps;
    auto f = [&](double x, const std::array<complex, 2>& v) {
        return std::array<complex, 2>{v[1], (q(x) - lambda) * v[0]};
    };
    for (int i = 0; i < steps; ++i) {
        const double x = i * dx;
        const auto k1 = f(x, y);
        const auto k2 = f(x + dx / 2, {y[0] + dx / 2 * k1[0], y[1] + dx / 2 * k1[1]});
        const auto k3 = f(x + dx / 2, {y[0] + dx / 2 * k2[0], y[1] + dx / 2 * k2[1]});
        const auto k4 = f(x + dx, {y[0] + dx * k3[0], y[1] + dx * k3[1]});
        for (int c = 0; c < 2; ++c) y[c] += dx / 6 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
    }
    return y;
}

double rel(complex a, complex b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST(Solutions, FreeClosedForms) {
    const auto fp = zero(pi);
    std::vector<double> xs;
    for (int i = 0; i <= 20; ++i) xs.push_back(pi * i / 20);
    const auto phi = fp.solution(1.0, Which::phi_h, xs);
    const auto s = fp.solution(1.0, Which::S, xs);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        EXPECT_LT(std::abs(phi[i].value - std::cos(xs[i])), 1e-10);
        EXPECT_LT(std::abs(phi[i].derivative + std::sin(xs[i])), 1e-10);
        EXPECT_LT(std::abs(s[i].value - std::sin(xs[i])), 1e-10);
    }
    const auto psi = fp.solution(2.0, Which::psi_H, xs);
    const auto t = fp.solution(2.0, Which::T, xs);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        EXPECT_LT(std::abs(psi[i].value - std::cos(2 * (pi - xs[i]))), 1e-10);
        EXPECT_LT(std::abs(t[i].value + std::sin(2 * (pi - xs[i])) / 2), 1e-10);
    }
}

TEST(Solutions, MatchesIndependentRk4) {
    const auto fp = ex1();
    const auto got = fp.solution_at_lambda(4.0, Which::phi_h, 1.0);
    const auto ref1 = rk4_phi(fp.potential(), 10.0, 4.0, 1.0, 4000);
    const auto ref2 = rk4_phi(fp.potential(), 10.0, 4.0, 1.0, 8000);
    EXPECT_LT(std::abs(ref1[0] - ref2[0]), 1e-9);  // reference converged
    EXPECT_LT(std::abs(got.value - ref2[0]), 1e-9);
    EXPECT_LT(std::abs(got.derivative - ref2[1]), 1e-9);
}

TEST(Solutions, RejectsBadGrid) {
    const auto fp = ex1();
    const std::vector<double> bad{0.5, 0.2};
    EXPECT_THROW(fp.solution(1.0, Which::phi_h, bad), DataError);
    const std::vector<double> outside{0.5, 1.5};
    EXPECT_THROW(fp.solution(1.0, Which::phi_h, outside), DataError);
}

TEST(CharFunctions, FreeClosedForms) {
    const auto fp = zero(pi);
    for (double r : {0.3, 1.0, 2.5, 7.25}) {
        EXPECT_LT(std::abs(fp.char_delta(r).value + r * std::sin(r * pi)), 1e-10);
        EXPECT_LT(std::abs(fp.char_delta0(r).value - std::cos(r * pi)), 1e-10);
    }
    for (int k = 1; k < 5; ++k) EXPECT_LT(std::abs(fp.char_delta(k).value), 1e-10);
    for (int k = 0; k < 5; ++k) EXPECT_LT(std::abs(fp.char_delta0(k + 0.5).value), 1e-10);
}

TEST(CharFunctions, TwoSidedAgreement) {
    const auto fp = ex1();
    EXPECT_LT(fp.char_delta(0.0).discrepancy(), 1e-9);
    std::mt19937 gen(1);
    std::uniform_real_distribution<double> u(0.0, 30.0);
    for (int i = 0; i < 20; ++i) {
        const double r = u(gen);
        EXPECT_LT(fp.char_delta0(r).discrepancy(), 1e-9) << r;
        EXPECT_LT(fp.char_delta(r).discrepancy(), 1e-9) << r;
    }
}

TEST(Identities, EndpointIdentityAllExamples) {
    std::mt19937 gen(2);
    std::uniform_real_distribution<double> u(0.1, 50.0);
    for (const auto& fp : {ex1(), ex2(), ex3(), ex4()}) {
        for (int i = 0; i < 25; ++i) {
            const double r = u(gen);
            const complex d0 = fp.char_delta0(r).value, d = fp.char_delta(r).value;
            const complex phi = fp.solution_at_lambda(r * r, Which::phi_h, fp.b()).value;
            const complex s = fp.solution_at_lambda(r * r, Which::S, fp.b()).value;
            const double scale = std::max({1.0, std::abs(d0 * phi), std::abs(d * s)});
            EXPECT_LT(std::abs(d0 * phi - d * s - 1.0) / scale, 1e-9) << fp.potential().id() << " rho=" << r;
        }
    }
}

TEST(Identities, WronskianAndRepresentations) {
    std::mt19937 gen(3);
    std::uniform_real_distribution<double> ur(0.1, 20.0), ux(0.0, 1.0);
    for (const auto& fp : {ex1(), ex4()}) {
        for (int i = 0; i < 10; ++i) {
            const complex rho(ur(gen), 0.3 * ux(gen));
            std::vector<double> xs{fp.b() * ux(gen), fp.b() * ux(gen)};
            std::sort(xs.begin(), xs.end());
            const auto phi = fp.solution(rho, Which::phi_h, xs);
            const auto psi = fp.solution(rho, Which::psi_H, xs);
            const auto s = fp.solution(rho, Which::S, xs);
            const auto t = fp.solution(rho, Which::T, xs);
            auto w = [&](int j) { return psi[j].value * phi[j].derivative - psi[j].derivative * phi[j].value; };
            EXPECT_LT(rel(w(0), w(1)), 1e-9);

            const complex d0 = fp.char_delta0(rho).value, d = fp.char_delta(rho).value;
            const complex phib = fp.solution(rho, Which::phi_h, std::vector<double>{fp.b()})[0].value;
            const complex sb = fp.solution(rho, Which::S, std::vector<double>{fp.b()})[0].value;
            for (int j = 0; j < 2; ++j) {
                const complex a = d0 * phi[j].value - d * s[j].value;
                EXPECT_LE(std::abs(psi[j].value - a), 1e-8 * std::max({1.0, std::abs(d0 * phi[j].value), std::abs(d * s[j].value)}));
                const complex b = phib * s[j].value - sb * phi[j].value;
                EXPECT_LE(std::abs(t[j].value - b), 1e-8 * std::max({1.0, std::abs(phib * s[j].value), std::abs(sb * phi[j].value)}));
            }
        }
    }
}

TEST(Eigenvalues, FreeClosedForms) {
    const auto fp = zero(pi);
    const auto l = oracle::eigenvalues(fp, Spectrum::L, 10);
    const auto l0 = oracle::eigenvalues(fp, Spectrum::L0, 10);
    for (int k = 0; k < 10; ++k) {
        EXPECT_NEAR(l[k].real(), double(k * k), 1e-10 * std::max(1, k * k));
        EXPECT_NEAR(l0[k].real(), (k + 0.5) * (k + 0.5), 1e-10 * (k + 0.5) * (k + 0.5));
        EXPECT_EQ(l[k].imag(), 0.0);
    }
}

TEST(Eigenvalues, SelfAdjointSelfConvergence) {
    const auto coarse = oracle::eigenvalues(ex1(), Spectrum::L, 10);
    const ForwardProblem fine(PotentialSpec::builtin("x^2", 1.0), {10.0, pi}, {1e-13, 1e-16, 1 << 15});
    const auto ref = oracle::eigenvalues(fine, Spectrum::L, 10);
    for (int k = 0; k < 10; ++k) EXPECT_LT(std::abs(coarse[k] - ref[k]), 1e-9 * std::max(1.0, std::abs(ref[k])));
}

TEST(Eigenvalues, RectangleAroundSingleRoot) {
    const auto fp = zero(pi);
    auto f = [&](complex l) { return fp.delta_lambda(l); };
    const auto r = oracle::find_eigenvalues_complex(f, {3.3, 4.9, -0.7, 0.6}, 0);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_LT(std::abs(r[0] - 4.0), 1e-10);
}

TEST(Eigenvalues, ConstantImaginaryShift) {
    // Argument principle on the complex potential against the real solve.
    const ForwardProblem shifted(PotentialSpec::builtin("exp(x)+pi*i", pi), {10.0, pi});
    auto f = [&](complex l) { return shifted.delta_lambda(l); };
    auto rect = oracle::default_search_rect(shifted, Spectrum::L, 6);
    const auto direct = oracle::find_eigenvalues_complex(f, rect, 6);
    const auto real = oracle::eigenvalues(ex2(), Spectrum::L, 6);
    for (int k = 0; k < 6; ++k) EXPECT_LT(std::abs(direct[k] - (real[k] + pi * I)), 1e-8);
}

TEST(Eigenvalues, MathieuSelfConvergence) {
    const auto coarse = oracle::eigenvalues(ex4(), Spectrum::L, 10);
    const ForwardProblem fine(PotentialSpec::builtin("mathieu(2)", pi), {0.7, I}, {5e-13, 1e-16, 1 << 15});
    const auto ref = oracle::eigenvalues(fine, Spectrum::L, 10);
    for (int k = 0; k < 10; ++k) {
        EXPECT_LT(std::abs(coarse[k] - ref[k]), 1e-8 * std::max(1.0, std::abs(ref[k])));
        EXPECT_LT(std::abs(ex4().delta_lambda(coarse[k])), 1e-8 * std::max(1.0, std::abs(coarse[k])));
    }
    for (int k = 1; k < 10; ++k) EXPECT_LT(coarse[k - 1].real(), coarse[k].real());
}

TEST(Eigenvalues, RealProblemsHaveRealSpectra) {
    for (const auto& fp : {ex1(), ex2()}) {
        for (auto l : oracle::eigenvalues(fp, Spectrum::L, 8)) EXPECT_LE(std::abs(l.imag()), 1e-10);
        for (auto l : oracle::eigenvalues(fp, Spectrum::L0, 8)) EXPECT_LE(std::abs(l.imag()), 1e-10);
    }
}

TEST(Eigenvalues, NegativeEigenvalueFound) {
    // h = H = -2 on (0,1) pushes the ground state below zero.
    const ForwardProblem fp(PotentialSpec::builtin("zero", 1.0), {-2.0, -2.0});
    const auto l = oracle::eigenvalues(fp, Spectrum::L, 3);
    EXPECT_LT(l[0].real(), 0.0);
    for (auto v : l) EXPECT_LT(std::abs(fp.delta_lambda(v)), 1e-9 * std::max(1.0, std::abs(v)));
    const auto rho = oracle::singular_numbers(l);
    EXPECT_GT(rho[0].imag(), 0.0);
}

TEST(Eigenvalues, SmukIdentity) {
    const auto fp = ex1();
    const auto mu = oracle::singular_numbers(oracle::eigenvalues(fp, Spectrum::L0, 10));
    for (auto m : mu) {
        const complex s = fp.solution(m, Which::S, std::vector<double>{1.0})[0].value;
        EXPECT_LT(std::abs(s * fp.char_delta(m).value + 1.0), 1e-8);
    }
}

TEST(Constants, MultiplierFree) {
    const auto fp = zero(pi);
    for (int k = 0; k < 6; ++k) {
        const auto m = fp.multiplier_constant(double(k));
        EXPECT_LT(std::abs(m.beta - (k % 2 ? -1.0 : 1.0)), 1e-10);
        EXPECT_FALSE(m.flagged);
    }
}

TEST(Constants, MultiplierTwoSided) {
    const auto rho2 = oracle::singular_numbers(oracle::eigenvalues(ex2(), Spectrum::L, 1));
    EXPECT_LE(ex2().multiplier_constant(rho2[0]).discrepancy, 1e-8);
    const auto fp = ex4();
    for (auto r : oracle::singular_numbers(oracle::eigenvalues(fp, Spectrum::L, 10))) {
        const auto m = fp.multiplier_constant(r);
        EXPECT_LE(m.discrepancy, 1e-7);
        EXPECT_FALSE(m.flagged);
    }
    // Away from an eigenvalue the two sides disagree.
    EXPECT_TRUE(fp.multiplier_constant(1.234).flagged);
}

TEST(Constants, NormingFree) {
    const auto fp = zero(pi);
    EXPECT_LT(std::abs(fp.norming_constant(0.0) - pi), 1e-10);
    for (int k = 1; k < 5; ++k) EXPECT_LT(std::abs(fp.norming_constant(double(k)) - pi / 2), 1e-10);
}

TEST(Constants, NormingMultiplierRelation) {
    const auto fp = ex2();
    const auto rho = oracle::singular_numbers(oracle::eigenvalues(fp, Spectrum::L, 6));
    for (auto r : rho) {
        const double step = 1e-6 * (1.0 + std::abs(r));
        const complex fd = (fp.char_delta(r + step).value - fp.char_delta(r - step).value) / (2 * step);
        const complex dd = fp.delta_dot(r);
        EXPECT_LT(std::abs(dd - fd) / std::abs(dd), 1e-7);
        const complex alpha = fp.norming_constant(r);
        const complex beta = fp.multiplier_constant(r).beta;
        EXPECT_LT(std::abs(alpha / beta + dd / (2.0 * r)) / std::abs(alpha / beta), 1e-8);
    }
}

TEST(Weyl, FreeClosedFormAndPole) {
    const auto fp = zero(pi);
    for (double r : {0.3, 1.7, 4.2}) {
        const complex expected = std::cos(r * pi) / (r * std::sin(r * pi));
        EXPECT_LT(rel(fp.weyl_value(r), expected), 1e-9);
    }
    EXPECT_THROW(fp.weyl_value(2.0), PoleError);
}

TEST(Weyl, MatchesRightEndpointConstruction) {
    const ForwardProblem fp(PotentialSpec::builtin("paine2_imag", pi), {complex(1, -1), std::polar(1.0, 1.0)});
    for (double r : oracle::uniform_spaced(20, 0.01, 1000.0)) {
        const auto psi = fp.solution(r, Which::psi_H, std::vector<double>{0.0})[0];
        const complex m = psi.value / (psi.derivative - fp.constants().h * psi.value);
        EXPECT_LT(rel(fp.weyl_value(r), m), 1e-8) << r;
    }
}

TEST(Noise, SigmaZeroIsIdentity) {
    const auto d = oracle::generate_dataset(ex1(), ProblemKind::IP1, 5);
    const auto n = oracle::add_noise(d, 0.0);
    EXPECT_EQ(n.rho_k, d.rho_k);
    EXPECT_EQ(n.mu_k, d.mu_k);
    EXPECT_EQ(n.noise_sigma, 0.0);
    EXPECT_THROW(oracle::add_noise(d, -1.0), DataError);
}

TEST(Noise, DeterministicFormula) {
    SpectralDataset d;
    d.problem_kind = ProblemKind::IP1;
    d.b = pi;
    for (int k = 0; k < 40; ++k) {
        d.rho_k.emplace_back(k + 1.0);
        d.mu_k.emplace_back(k + 0.5);
    }
    const auto n = oracle::add_noise(d, 0.001);
    EXPECT_NEAR(std::abs(n.rho_k[0] * n.rho_k[0] - (1.0 + 0.001 * std::sin(pi / 37))), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(n.mu_k[0] * n.mu_k[0] - (0.25 + 0.001 * std::sin(pi / 37))), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(n.rho_k[36] - d.rho_k[36]), 0.0, 1e-13);
    EXPECT_EQ(n.noise_sigma, 0.001);
    const auto again = oracle::add_noise(d, 0.001);
    EXPECT_EQ(again.rho_k, n.rho_k);
}

TEST(Generate, FreeDatasets) {
    const auto fp = zero(pi);
    const auto d1 = oracle::generate_dataset(fp, ProblemKind::IP1, 5);
    for (int k = 0; k < 5; ++k) {
        EXPECT_NEAR(d1.rho_k[k].real(), k, 1e-10);
        EXPECT_NEAR(d1.mu_k[k].real(), k + 0.5, 1e-10);
    }
    const auto d3 = oracle::generate_dataset(fp, ProblemKind::IP3, 5);
    for (int k = 0; k < 5; ++k) EXPECT_LT(std::abs(d3.beta_k[k] - (k % 2 ? -1.0 : 1.0)), 1e-8);
    const auto d4 = oracle::generate_dataset(fp, ProblemKind::IP4, 3);
    EXPECT_LT(std::abs(d4.alpha_k[0] - pi), 1e-8);
    EXPECT_LT(std::abs(d4.alpha_k[2] - pi / 2), 1e-8);
    const auto d2 = oracle::generate_dataset(fp, ProblemKind::IP2, 0, {50, 0.01, 9.5, 5});
    EXPECT_EQ(d2.weyl_points.size(), 50u);
    EXPECT_EQ(d2.weyl_probe_points.size(), 5u);
    EXPECT_NEAR(d2.weyl_points.front().real(), 0.01, 1e-15);
    EXPECT_NEAR(d2.weyl_points.back().real(), 9.5, 1e-12);
}

TEST(Generate, TabulatedPotentialAgreesWithClosedForm) {
    std::vector<double> x;
    std::vector<complex> q;
    for (int i = 0; i <= 1024; ++i) {
        x.push_back(i / 1024.0);
        q.emplace_back(x.back() * x.back());
    }
    const ForwardProblem tab(PotentialSpec::tabulated(x, q), {10.0, pi});
    const auto a = oracle::eigenvalues(tab, Spectrum::L, 5);
    const auto b = oracle::eigenvalues(ex1(), Spectrum::L, 5);
    for (int k = 0; k < 5; ++k) EXPECT_LT(std::abs(a[k] - b[k]), 1e-6);
}
