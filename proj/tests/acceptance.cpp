// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "nsbf/pipeline.hpp"

using namespace nsbf;
using oracle::Which;

namespace {

// Tolerances, fixed here and nowhere else.
namespace tol {
constexpr double a1_q = 1e-5, a1_hH = 1e-6, a1_omega = 1e-4, a1_seconds = 30.0;
constexpr int a1_order = 7;
constexpr double a2_q = 0.05, a2_hH = 1e-4, a2_q_noisy = 0.3, a2_sigma = 1e-3;
constexpr double a3_q = 1e-3, a3_q_noisy = 1.0, a3_sigma = 1e-2, a3_argmax_from = 0.75;
constexpr int a3_order = 13;
constexpr double a4_q = 1e-2, a4_hH = 1e-3, a4_q_low = 0.15, a4_q_high = 1.0, a4_sigma_low = 1e-3,
                 a4_sigma_high = 1e-2;
constexpr double a5_q_rel = 0.05, a5_hH = 0.02;
constexpr int a5_order_lo = 25, a5_order_hi = 45;
constexpr double a6_q = 1e-2, a6_hH = 1e-3;
constexpr double a7_beta = 1e-7, a7_q = 1e-3;
constexpr double a8_identity = 1e-9, a8_wronskian = 1e-9, a8_free = 1e-10, a8_conj = 1e-9;
constexpr double a8_recurrence = 1e-10, a8_parity = 1e-13, a8_conj_bessel = 1e-14;
}  // namespace tol

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void check(bool ok, const std::string& what) {
        pass = pass && ok;
        if (!ok) detail << " [failed: " << what << "]";
    }
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return buf;
}

RunConfig config(const std::string& name) { return read_config(std::string(NSBF_CONFIG_DIR) + "/" + name); }

struct Run {
    pipeline::InversionResult result;
    recovery::ErrorMetrics errors;
};

Run run(const RunConfig& c, const SpectralDataset& d) {
    Run r{pipeline::invert(d, pipeline::InversionOptions::from(c)), {}};
    r.errors = recovery::error_report(r.result.recovered, *c.potential, *c.constants);
    return r;
}

Run run(const RunConfig& c) { return run(c, pipeline::generate(c)); }

Run run_noisy(RunConfig c, double sigma) {
    c.noise_sigma = sigma;
    return run(c);
}

void a1(Outcome& o) {
    const auto c = config("ex1.json");
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = run(c);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double omega_err = std::abs(r.result.approx->omega_hH - (10.0 + pi + 1.0 / 6.0));
    o.detail << "N1=" << r.result.N1 << " q=" << fmt(r.errors.max_blended) << " h=" << fmt(r.errors.err_h)
             << " H=" << fmt(r.errors.err_H) << " omega=" << fmt(omega_err) << " time=" << fmt(seconds) << "s";
    o.check(r.result.N1 == tol::a1_order, "N1");
    o.check(r.errors.max_blended <= tol::a1_q, "q");
    o.check(r.errors.err_h <= tol::a1_hH && r.errors.err_H <= tol::a1_hH, "h, H");
    o.check(omega_err <= tol::a1_omega, "omega");
    o.check(seconds <= tol::a1_seconds, "runtime");
}

void a2(Outcome& o) {
    auto c = config("ex1.json");
    c.count = 5;
    const auto clean = run(c);
    const auto noisy = run_noisy(c, tol::a2_sigma);
    o.detail << "q=" << fmt(clean.errors.max_blended) << " h=" << fmt(clean.errors.err_h)
             << " H=" << fmt(clean.errors.err_H) << " noisy q=" << fmt(noisy.errors.max_blended);
    o.check(clean.errors.max_blended <= tol::a2_q, "q");
    o.check(clean.errors.err_h <= tol::a2_hH && clean.errors.err_H <= tol::a2_hH, "h, H");
    o.check(noisy.errors.max_blended <= tol::a2_q_noisy, "noisy q");
}

void a3(Outcome& o) {
    const auto c = config("ex2.json");
    const auto clean = run(c);
    const auto noisy = run_noisy(c, tol::a3_sigma);
    o.detail << "N1=" << clean.result.N1 << " q=" << fmt(clean.errors.max_blended)
             << " noisy q=" << fmt(noisy.errors.max_blended) << " at x=" << fmt(noisy.errors.argmax_blended);
    o.check(clean.result.N1 == tol::a3_order, "N1");
    o.check(clean.errors.max_blended <= tol::a3_q, "q");
    o.check(noisy.errors.max_blended <= tol::a3_q_noisy, "noisy q");
    o.check(noisy.errors.argmax_blended >= tol::a3_argmax_from * c.b, "noisy argmax");
}

void a4(Outcome& o) {
    const auto c = config("ex4.json");
    const auto clean = run(c);
    const auto low = run_noisy(c, tol::a4_sigma_low);
    const auto high = run_noisy(c, tol::a4_sigma_high);
    o.detail << "q=" << fmt(clean.errors.max_blended) << " h=" << fmt(clean.errors.err_h)
             << " H=" << fmt(clean.errors.err_H) << " q(1e-3)=" << fmt(low.errors.max_blended)
             << " q(1e-2)=" << fmt(high.errors.max_blended);
    o.check(clean.errors.max_blended <= tol::a4_q, "q");
    o.check(clean.errors.err_h <= tol::a4_hH && clean.errors.err_H <= tol::a4_hH, "h, H");
    o.check(low.errors.max_blended <= tol::a4_q_low, "q at sigma 1e-3");
    o.check(high.errors.max_blended <= tol::a4_q_high, "q at sigma 1e-2");
}

void a5(Outcome& o) {
    const auto r = run(config("ex5.json"));
    o.detail << "N1=" << r.result.N1 << " relative q=" << fmt(r.errors.relative_max()) << " h=" << fmt(r.errors.err_h)
             << " H=" << fmt(r.errors.err_H);
    o.check(r.errors.relative_max() <= tol::a5_q_rel, "relative q");
    o.check(r.errors.err_h <= tol::a5_hH && r.errors.err_H <= tol::a5_hH, "h, H");
    o.check(r.result.N1 >= tol::a5_order_lo && r.result.N1 <= tol::a5_order_hi, "N1 range");
}

void a6(Outcome& o) {
    const auto r = run(config("ex8.json"));
    o.detail << "N1=" << r.result.N1 << " q=" << fmt(r.errors.max_blended) << " h=" << fmt(r.errors.err_h)
             << " H=" << fmt(r.errors.err_H);
    o.check(r.errors.max_blended <= tol::a6_q, "q");
    o.check(r.errors.err_h <= tol::a6_hH && r.errors.err_H <= tol::a6_hH, "h, H");
}

void a7(Outcome& o) {
    const auto c = config("ex2_norming.json");
    const auto d = pipeline::generate(c);
    const auto r = run(c, d);
    const double beta = pipeline::beta_error(r.result, d, pipeline::forward_problem(c));
    o.detail << "beta=" << fmt(beta) << " q=" << fmt(r.errors.max_blended);
    o.check(beta <= tol::a7_beta, "beta");
    o.check(r.errors.max_blended <= tol::a7_q, "q");
}

oracle::ForwardProblem example(int k) {
    switch (k) {
        case 1: return {PotentialSpec::builtin("x^2", 1.0), {10.0, pi}};
        case 2: return {PotentialSpec::builtin("exp(x)", pi), {10.0, pi}};
        case 3: return {PotentialSpec::builtin("ex3_cos8x", pi), {std::sqrt(2.0), -std::exp(1.0)}};
        default: return {PotentialSpec::builtin("mathieu(2)", pi), {0.7, I}};
    }
}

void a8(Outcome& o) {
    std::mt19937 gen(2024);
    std::uniform_real_distribution<double> urho(0.1, 50.0), unit(0.0, 1.0);

    // (i) endpoint identity and (ii) Wronskian
    double identity = 0.0, wronskian = 0.0;
    for (int k = 1; k <= 4; ++k) {
        const auto fp = example(k);
        for (int i = 0; i < 25; ++i) {
            const double r = urho(gen);
            const complex d0 = fp.char_delta0(r).value, d = fp.char_delta(r).value;
            const complex phi = fp.solution_at_lambda(r * r, Which::phi_h, fp.b()).value;
            const complex s = fp.solution_at_lambda(r * r, Which::S, fp.b()).value;
            const double scale = std::max({1.0, std::abs(d0 * phi), std::abs(d * s)});
            identity = std::max(identity, std::abs(d0 * phi - d * s - 1.0) / scale);

            std::vector<double> xs{fp.b() * unit(gen), fp.b() * unit(gen)};
            std::sort(xs.begin(), xs.end());
            const auto ph = fp.solution(r, Which::phi_h, xs);
            const auto ps = fp.solution(r, Which::psi_H, xs);
            auto w = [&](int j) { return ps[j].value * ph[j].derivative - ps[j].derivative * ph[j].value; };
            wronskian = std::max(wronskian, std::abs(w(0) - w(1)) / std::max(1.0, std::abs(w(1))));
        }
    }

    // (iii) free spectra
    double free = 0.0;
    for (double b : {1.0, pi}) {
        const oracle::ForwardProblem fp(PotentialSpec::builtin("zero", b), {0.0, 0.0});
        const auto d = oracle::generate_dataset(fp, ProblemKind::IP1, 8);
        for (int k = 0; k < 8; ++k) {
            free = std::max(free, std::abs(d.rho_k[k] - k * pi / b));
            free = std::max(free, std::abs(d.mu_k[k] - (k + 0.5) * pi / b));
        }
    }

    // (iv) spherical Bessel recurrence, parity, conjugation
    double recurrence = 0.0, parity = 0.0, conj_bessel = 0.0;
    std::uniform_real_distribution<double> mod(std::log(0.1), std::log(100.0)), ang(-pi, pi);
    for (int trial = 0; trial < 100; ++trial) {
        const complex z = std::polar(std::exp(mod(gen)), ang(gen));
        if (std::abs(z.imag()) > 50) continue;
        const int n_max = 30;
        const auto j = specfun::sph_bessel_j_seq(n_max, z);
        const auto jm = specfun::sph_bessel_j_seq(n_max, -z);
        const auto jc = specfun::sph_bessel_j_seq(n_max, std::conj(z));
        for (int n = 1; n < n_max; ++n) {
            const double scale = std::max(std::abs(j[n - 1]), std::abs(j[n + 1]));
            recurrence = std::max(recurrence, std::abs(j[n - 1] + j[n + 1] - double(2 * n + 1) / z * j[n]) / scale);
        }
        for (int n = 0; n <= n_max; ++n) {
            if (j[n] == complex{}) continue;
            parity = std::max(parity, std::abs(jm[n] - (n % 2 ? -1.0 : 1.0) * j[n]) / std::abs(j[n]));
            conj_bessel = std::max(conj_bessel, std::abs(jc[n] - std::conj(j[n])) / std::abs(j[n]));
        }
    }

    // (v) zero noise
    const auto d4 = oracle::generate_dataset(example(4), ProblemKind::IP1, 10);
    const auto n4 = oracle::add_noise(d4, 0.0);
    const bool noise_identity = n4.rho_k == d4.rho_k && n4.mu_k == d4.mu_k;

    // (vi) conjugate data gives the conjugate reconstruction
    const auto c = config("ex4.json");
    const auto opt = pipeline::InversionOptions::from(c);
    const auto a = pipeline::invert(d4, opt);
    auto dc = d4;
    for (auto& r : dc.rho_k) r = -std::conj(r);
    for (auto& r : dc.mu_k) r = -std::conj(r);
    const auto b = pipeline::invert(dc, opt);
    double conj = std::max(std::abs(b.recovered.h - std::conj(a.recovered.h)),
                           std::abs(b.recovered.H - std::conj(a.recovered.H)));
    for (std::size_t i = 0; i < a.recovered.q_blended.size(); ++i)
        conj = std::max(conj, std::abs(b.recovered.q_blended[i] - std::conj(a.recovered.q_blended[i])));

    o.detail << "identity=" << fmt(identity) << " wronskian=" << fmt(wronskian) << " free=" << fmt(free)
             << " recurrence=" << fmt(recurrence) << " parity=" << fmt(parity) << " conj_j=" << fmt(conj_bessel)
             << " zero_noise=" << (noise_identity ? "identity" : "changed") << " conj=" << fmt(conj);
    o.check(identity <= tol::a8_identity, "identity");
    o.check(wronskian <= tol::a8_wronskian, "Wronskian");
    o.check(free <= tol::a8_free, "free spectra");
    o.check(recurrence <= tol::a8_recurrence && parity <= tol::a8_parity && conj_bessel <= tol::a8_conj_bessel,
            "Bessel invariants");
    o.check(noise_identity, "zero noise");
    o.check(conj <= tol::a8_conj, "conjugation");
}

}  // namespace

int main() {
    const std::pair<const char*, std::function<void(Outcome&)>> criteria[] = {
        {"A1", a1}, {"A2", a2}, {"A3", a3}, {"A4", a4}, {"A5", a5}, {"A6", a6}, {"A7", a7}, {"A8", a8}};
    int failures = 0;
    for (const auto& [name, body] : criteria) {
        Outcome o;
        try {
            body(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << " [exception: " << e.what() << "]";
        }
        std::printf("%s %s %s\n", name, o.pass ? "PASS" : "FAIL", o.detail.str().c_str());
        std::fflush(stdout);
        failures += o.pass ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
