// nsbf: forward data generation, inversion and order sweeps from a JSON config.
//
// Exit codes: 0 success, 2 bad input or configuration, 3 numerical failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nsbf/pipeline.hpp"

namespace {

using namespace nsbf;
namespace fs = std::filesystem;

constexpr int exit_data = 2;
constexpr int exit_numerical = 3;

struct Flags {
    std::string config;
    std::string data;
    std::string out;
    std::optional<double> sigma;
    std::optional<int> n1;
    std::optional<std::string> criterion;
    bool ip3_direct = false;
};

RunConfig load(const Flags& f, const std::string& command) {
    RunConfig c = read_config(f.config);
    c.command = command;
    if (f.sigma) c.noise_sigma = *f.sigma;
    if (f.n1) c.n1 = *f.n1;
    if (f.criterion) c.criterion = charstep::criterion_from_string(*f.criterion);
    if (f.ip3_direct) c.ip3_direct = true;
    if (!f.out.empty()) c.output_dir = f.out;
    c.validate();
    return c;
}

// Dataset from --data, or generated from the config. A clean file gets the
// configured noise; a file that is already noisy is used as is.
SpectralDataset obtain_dataset(const RunConfig& c, const Flags& f) {
    if (f.data.empty()) return pipeline::generate(c);
    SpectralDataset d = f.data.size() > 4 && f.data.substr(f.data.size() - 4) == ".csv"
                            ? [&] {
                                  std::ifstream in(f.data);
                                  if (!in) throw DataError("cannot read " + f.data);
                                  return read_dataset_csv(in);
                              }()
                            : read_dataset_json(f.data);
    if (d.problem_kind != c.problem_kind)
        throw DataError("dataset kind " + to_string(d.problem_kind) + " does not match config kind " +
                        to_string(c.problem_kind));
    if (std::abs(d.b - c.b) > 1e-12 * c.b) throw DataError("dataset b does not match config b");
    if (d.noise_sigma == 0.0 && c.noise_sigma > 0.0) d = oracle::add_noise(std::move(d), c.noise_sigma);
    return d;
}

void print_complex(const char* label, complex z) { std::printf("%-10s %.15g %+.15gi\n", label, z.real(), z.imag()); }

int cmd_forward(const Flags& f) {
    const auto c = load(f, "forward");
    const auto fp = pipeline::forward_problem(c);
    const auto d = pipeline::generate(c);
    pipeline::write_dataset_files(d, c.output_dir);
    std::printf("%s data, b=%.15g, noise sigma=%g\n", to_string(d.problem_kind).c_str(), d.b, d.noise_sigma);
    if (d.problem_kind == ProblemKind::IP2) {
        std::printf("%zu Weyl samples, %zu probes\n", d.weyl_points.size(), d.weyl_probe_points.size());
    } else {
        std::printf("%4s %22s %22s %12s\n", "k", "Re rho", "Im rho", "|Delta|");
        for (std::size_t k = 0; k < d.rho_k.size(); ++k) {
            const complex r = d.rho_k[k];
            std::printf("%4zu %22.15g %22.15g %12.3e\n", k, r.real(), r.imag(), std::abs(fp.char_delta(r).value));
        }
        if (!d.mu_k.empty()) {
            std::printf("%4s %22s %22s %12s\n", "k", "Re mu", "Im mu", "|Delta0|");
            for (std::size_t k = 0; k < d.mu_k.size(); ++k) {
                const complex m = d.mu_k[k];
                std::printf("%4zu %22.15g %22.15g %12.3e\n", k, m.real(), m.imag(),
                            std::abs(fp.delta0_lambda(m * m)));
            }
        }
    }
    std::printf("wrote %s\n", (fs::path(c.output_dir) / "dataset.json").string().c_str());
    return 0;
}

int cmd_invert(const Flags& f) {
    const auto c = load(f, "invert");
    const auto d = obtain_dataset(c, f);
    const auto r = pipeline::invert(d, pipeline::InversionOptions::from(c));
    std::optional<recovery::ErrorMetrics> err;
    std::optional<double> beta_err;
    if (c.has_truth()) {
        err = recovery::error_report(r.recovered, *c.potential, *c.constants);
        if (!r.beta_k.empty()) beta_err = pipeline::beta_error(r, d, pipeline::forward_problem(c));
    }
    pipeline::write_inversion_files(r, pipeline::summary(r, err, beta_err), c.output_dir);

    const auto& dg = r.recovered.diagnostics;
    std::printf("%s, route: %s\n", to_string(r.kind).c_str(), r.route.c_str());
    std::printf("N1* = %d (criterion %s)\n", r.N1, r.criterion.c_str());
    if (r.N2 >= 0) std::printf("N2 = %d\n", r.N2);
    if (r.approx) print_complex("omega", r.approx->omega_hH);
    print_complex("h", r.recovered.h);
    print_complex("H", r.recovered.H);
    std::printf("residual median %.3e, max %.3e; failed points %zu\n", dg.residual_median, dg.residual_max,
                dg.failed_points);
    if (err) {
        std::printf("max |q error| %.6e at x=%.6g (relative %.3e), L2 %.3e\n", err->max_blended, err->argmax_blended,
                    err->relative_max(), err->l2_blended);
        std::printf("|h error| %.3e, |H error| %.3e\n", err->err_h, err->err_H);
    }
    if (beta_err) std::printf("max |beta error| %.3e\n", *beta_err);
    std::printf("wrote %s\n", (fs::path(c.output_dir) / "summary.json").string().c_str());
    return 0;
}

int cmd_sweep(const Flags& f) {
    const auto c = load(f, "sweep");
    const auto d = obtain_dataset(c, f);
    const bool errors = c.has_truth() && c.sweep_errors;
    const auto t = errors ? pipeline::sweep(d, pipeline::InversionOptions::from(c), c.potential, c.constants)
                          : pipeline::sweep(d, pipeline::InversionOptions::from(c));
    fs::create_directories(c.output_dir);
    const auto path = fs::path(c.output_dir) / "sweep.csv";
    pipeline::write_text_file(path, [&](std::ostream& o) { pipeline::write_sweep_csv(t, o); });
    pipeline::write_sweep_csv(t, std::cout);
    auto show = [&](const char* name, const std::string& col) {
        if (const auto a = t.argmin(col)) std::printf("argmin %s: %d\n", name, *a);
    };
    if (t.criterion == "R" || t.criterion == "P") {
        show("R", "R");
        show("P", "P");
    } else {
        show(t.criterion.c_str(), "score");
    }
    std::printf("selected N1: %d\nwrote %s\n", t.selected, path.string().c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sturm-Liouville potential reconstruction from spectral data"};
    app.require_subcommand(1);
    Flags f;
    auto add_common = [&](CLI::App* sub, bool inversion) {
        sub->add_option("--config", f.config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", f.out, "output directory (overrides the config)");
        sub->add_option("--sigma", f.sigma, "eigenvalue noise level");
        if (!inversion) return;
        sub->add_option("--data", f.data, "dataset file (JSON or CSV); generated from the config when omitted")
            ->check(CLI::ExistingFile);
        sub->add_option("--n1", f.n1, "fixed truncation order");
        sub->add_option("--criterion", f.criterion, "order criterion")
            ->check(CLI::IsMember({"R", "P", "Q", "residual"}));
        sub->add_flag("--ip3-direct", f.ip3_direct, "direct route for multiplier data");
    };
    auto* forward = app.add_subcommand("forward", "generate a spectral dataset with the forward solver");
    auto* invert = app.add_subcommand("invert", "reconstruct q, h, H from a dataset");
    auto* sweep = app.add_subcommand("sweep", "tabulate order-selection functionals over candidate orders");
    add_common(forward, false);
    add_common(invert, true);
    add_common(sweep, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_data;
    }

    try {
        if (*forward) return cmd_forward(f);
        if (*invert) return cmd_invert(f);
        return cmd_sweep(f);
    } catch (const DataError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_data;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return exit_numerical;
    } catch (const std::filesystem::filesystem_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_data;
    }
}
