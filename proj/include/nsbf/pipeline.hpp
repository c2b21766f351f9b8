#pragma once

// Run configuration and end-to-end pipelines shared by the CLI and the tests.

#include <filesystem>
#include <fstream>
#include <optional>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "nsbf/charstep.hpp"
#include "nsbf/dataset.hpp"
#include "nsbf/oracle.hpp"
#include "nsbf/potential.hpp"
#include "nsbf/profilestep.hpp"
#include "nsbf/recovery.hpp"

namespace nsbf {

struct RunConfig {
    std::string name;
    std::string command = "invert";
    ProblemKind problem_kind = ProblemKind::IP1;
    double b = 1.0;
    std::optional<PotentialSpec> potential;  // ground truth, when known
    std::optional<BoundaryConstants> constants;
    int count = 10;
    double noise_sigma = 0.0;
    RhoSampling sampling;
    oracle::WeylSampling weyl;
    int grid_points = 201;
    std::optional<int> n1;
    std::optional<charstep::OrderCriterion> criterion;
    bool ip3_direct = false;
    bool sweep_errors = true;
    std::string output_dir = "out";

    bool has_truth() const { return potential.has_value() && constants.has_value(); }

    void validate() const {
        using charstep::OrderCriterion;
        if (!(b > 0.0)) throw DataError("config: b must be positive");
        if (command != "forward" && command != "invert" && command != "sweep")
            throw DataError("config: unknown command '" + command + "'");
        if (problem_kind != ProblemKind::IP2 && count < 2) throw DataError("config: count must be >= 2");
        if (noise_sigma < 0.0) throw DataError("config: noise_sigma must be nonnegative");
        if (grid_points < 7) throw DataError("config: grid_points must be >= 7");
        if (n1 && *n1 < 0) throw DataError("config: n1 must be nonnegative");
        if (ip3_direct && problem_kind != ProblemKind::IP3 && problem_kind != ProblemKind::IP4)
            throw DataError("config: the direct route applies to IP3/IP4 only");
        if (criterion) {
            const auto c = *criterion;
            const bool ok = problem_kind == ProblemKind::IP2
                                ? c == OrderCriterion::Q
                                : (ip3_direct ? c == OrderCriterion::residual
                                              : c == OrderCriterion::R || c == OrderCriterion::P);
            if (!ok)
                throw DataError("config: criterion " + charstep::to_string(c) + " is not valid for " +
                                to_string(problem_kind) + (ip3_direct ? " (direct)" : ""));
        }
        if (potential && std::abs(potential->b() - b) > 1e-12 * b)
            throw DataError("config: potential interval does not match b");
    }
};

namespace detail {

inline complex json_complex(const nlohmann::json& v) {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2) return {v[0].get<double>(), v[1].get<double>()};
    throw DataError("config: expected a number or [re, im]");
}

}  // namespace detail

inline RunConfig config_from_json(const nlohmann::json& j) {
    RunConfig c;
    try {
        c.name = j.value("name", std::string{});
        c.command = j.value("command", c.command);
        c.problem_kind = problem_kind_from_string(j.at("problem_kind").get<std::string>());
        c.b = j.at("b").get<double>();
        if (j.contains("potential")) {
            const auto& p = j.at("potential");
            if (p.is_string()) {
                c.potential = PotentialSpec::builtin(p.get<std::string>(), c.b);
            } else {
                std::vector<double> x = p.at("x").get<std::vector<double>>();
                ComplexSeq q;
                for (const auto& v : p.at("q")) q.push_back(detail::json_complex(v));
                c.potential = PotentialSpec::tabulated(std::move(x), std::move(q));
            }
        }
        if (j.contains("h") || j.contains("H"))
            c.constants = BoundaryConstants{detail::json_complex(j.at("h")), detail::json_complex(j.at("H"))};
        c.count = j.value("count", c.count);
        c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
        if (j.contains("sampling")) {
            const auto& s = j.at("sampling");
            const auto scheme = s.value("scheme", std::string("log_spaced"));
            if (scheme == "log_spaced") c.sampling.scheme = RhoSampling::Scheme::log_spaced;
            else if (scheme == "uniform") c.sampling.scheme = RhoSampling::Scheme::uniform;
            else throw DataError("config: unknown sampling scheme '" + scheme + "'");
            c.sampling.J = s.value("J", c.sampling.J);
            c.sampling.r_lo = s.value("r_lo", c.sampling.r_lo);
            c.sampling.r_hi = s.value("r_hi", c.sampling.r_hi);
            c.sampling.imag_offset = s.value("imag_offset", c.sampling.imag_offset);
        }
        if (j.contains("weyl")) {
            const auto& w = j.at("weyl");
            c.weyl.count = w.value("count", c.weyl.count);
            c.weyl.lo = w.value("lo", c.weyl.lo);
            c.weyl.hi = w.value("hi", c.weyl.hi);
            c.weyl.probes = w.value("probes", c.weyl.probes);
        }
        c.grid_points = j.value("grid_points", c.grid_points);
        if (j.contains("n1") && !j.at("n1").is_null()) c.n1 = j.at("n1").get<int>();
        if (j.contains("order_criterion") && !j.at("order_criterion").is_null())
            c.criterion = charstep::criterion_from_string(j.at("order_criterion").get<std::string>());
        c.ip3_direct = j.value("ip3_direct", false);
        c.sweep_errors = j.value("sweep_errors", true);
        c.output_dir = j.value("output_dir", c.output_dir);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

inline RunConfig read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": " + e.what());
    }
    return config_from_json(j);
}

namespace pipeline {

// Re-throws library errors with the failing stage prefixed, keeping the
// data/numerical distinction.
template <class F>
auto staged(const char* stage, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const DataError& e) {
        throw DataError(std::string(stage) + ": " + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(std::string(stage) + ": " + e.what());
    }
}

inline oracle::ForwardProblem forward_problem(const RunConfig& c) {
    if (!c.has_truth()) throw DataError("config: forward runs need a potential and h, H");
    return oracle::ForwardProblem(*c.potential, *c.constants);
}

// Clean dataset from the oracle, then the configured noise.
inline SpectralDataset generate(const RunConfig& c) {
    const auto fp = forward_problem(c);
    auto d = staged("oracle", [&] { return oracle::generate_dataset(fp, c.problem_kind, c.count, c.weyl); });
    return oracle::add_noise(std::move(d), c.noise_sigma);
}

struct InversionOptions {
    std::optional<int> n1;
    std::optional<charstep::OrderCriterion> criterion;
    bool ip3_direct = false;
    RhoSampling sampling;
    int grid_points = 201;

    static InversionOptions from(const RunConfig& c) { return {c.n1, c.criterion, c.ip3_direct, c.sampling, c.grid_points}; }
};

struct InversionResult {
    ProblemKind kind = ProblemKind::IP1;
    std::string route;
    int N1 = -1;
    std::string criterion;
    std::vector<charstep::SweepRow> table;
    std::optional<CharFunApprox> approx;
    ComplexSeq beta_k;  // IP4: multiplier constants rebuilt from the norming constants
    int N2 = -1;
    ProfileSolution profile;
    RecoveredProblem recovered;
};

// Order selection (and, for the direct route, the profile itself).
inline InversionResult select(const SpectralDataset& d, const InversionOptions& opt) {
    using charstep::OrderCriterion;
    d.validate();
    InversionResult out;
    out.kind = d.problem_kind;
    const double b = d.b;
    const auto grid = uniform_grid(b, opt.grid_points);
    std::vector<int> candidates;
    if (opt.n1) candidates.push_back(*opt.n1);

    auto use_selection = [&](charstep::OrderSelection sel) {
        out.N1 = sel.N1;
        out.criterion = charstep::to_string(sel.criterion_used);
        out.table = std::move(sel.table);
        out.approx = std::move(sel.approx);
    };

    ComplexSeq beta = d.beta_k;
    switch (d.problem_kind) {
        case ProblemKind::IP1:
            out.route = "two spectra";
            use_selection(staged("order selection", [&] {
                return charstep::select_order_two_spectra(d.rho_k, d.mu_k, b, opt.criterion.value_or(OrderCriterion::R),
                                                          candidates);
            }));
            break;
        case ProblemKind::IP2: {
            out.route = "Weyl function";
            ComplexSeq z = d.weyl_points, M = d.weyl_values, pz = d.weyl_probe_points, pM = d.weyl_probe_values;
            if (pz.empty()) {
                z.clear();
                M.clear();
                profilestep::split_weyl_probes(d.weyl_points, d.weyl_values, z, M, pz, pM);
            }
            auto sel = staged("order selection",
                              [&] { return profilestep::select_order_weyl(z, M, pz, pM, b, candidates); });
            out.N1 = sel.N1;
            out.criterion = "Q";
            out.table = std::move(sel.table);
            out.approx = std::move(sel.fit.approx);
            break;
        }
        case ProblemKind::IP4: {
            const auto red = staged("norming-constant reduction",
                                    [&] { return profilestep::reduce_ip4(d.rho_k, d.alpha_k, b); });
            beta = red.beta_k;
            out.beta_k = red.beta_k;
            out.N2 = red.N2;
            [[fallthrough]];
        }
        case ProblemKind::IP3:
            if (opt.ip3_direct) {
                out.route = "multipliers, direct";
                out.criterion = "residual";
                if (opt.n1) {
                    out.N1 = *opt.n1;
                    out.profile = staged("direct profile", [&] {
                        return profilestep::solve_ip3_direct(d.rho_k, beta, b, grid, *opt.n1);
                    });
                } else {
                    auto sel = staged("direct profile",
                                      [&] { return profilestep::select_ip3_direct(d.rho_k, beta, b, grid); });
                    out.N1 = sel.N;
                    for (const auto& [N, score] : sel.table) {
                        charstep::SweepRow row;
                        row.N1 = N;
                        row.ok = true;
                        row.score = score;
                        out.table.push_back(row);
                    }
                    out.profile = std::move(sel.profile);
                }
            } else {
                out.route = "multipliers, two-step";
                use_selection(staged("order selection", [&] {
                    return profilestep::solve_ip3_twostep(d.rho_k, beta, b, opt.criterion.value_or(OrderCriterion::P),
                                                          candidates, opt.sampling);
                }));
            }
            if (d.problem_kind == ProblemKind::IP4) out.route = "norming constants, " + out.route.substr(13);
            break;
    }
    return out;
}

inline InversionResult invert(const SpectralDataset& d, const InversionOptions& opt) {
    auto out = select(d, opt);
    const auto grid = uniform_grid(d.b, opt.grid_points);
    if (out.approx)
        out.profile =
            staged("profile", [&] { return profilestep::solve_profile(*out.approx, grid, opt.sampling, out.N1); });
    out.recovered = staged("recovery", [&] { return recovery::recover(out.profile); });
    out.recovered.diagnostics.N1 = out.N1;
    out.recovered.diagnostics.J = out.approx ? int(opt.sampling.points().size()) : 0;
    return out;
}

inline nlohmann::json complex_json(complex z) { return {z.real(), z.imag()}; }

// Deterministic JSON summary: no timings, doubles printed round-trip exact.
inline nlohmann::json summary(const InversionResult& r, const std::optional<recovery::ErrorMetrics>& err = {},
                              std::optional<double> beta_error = {}) {
    auto j = recovery::summary_json(r.recovered);
    j["problem_kind"] = to_string(r.kind);
    j["route"] = r.route;
    j["criterion"] = r.criterion;
    j["N1"] = r.N1;
    if (r.approx) j["omega_hH"] = complex_json(r.approx->omega_hH);
    if (r.N2 >= 0) j["N2"] = r.N2;
    nlohmann::json table = nlohmann::json::array();
    for (const auto& row : r.table) {
        nlohmann::json e{{"N1", row.N1}, {"ok", row.ok}};
        if (row.ok) e["score"] = row.score;
        if (!row.failure.empty()) e["failure"] = row.failure;
        table.push_back(e);
    }
    j["selection"] = table;
    if (err) j["errors"] = recovery::to_json(*err);
    if (beta_error) j["max_error_beta"] = *beta_error;
    return j;
}

// Largest |beta_k - oracle beta_k| for the rebuilt multiplier constants.
inline double beta_error(const InversionResult& r, const SpectralDataset& d, const oracle::ForwardProblem& fp) {
    double e = 0.0;
    for (std::size_t k = 0; k < r.beta_k.size(); ++k)
        e = std::max(e, std::abs(r.beta_k[k] - fp.multiplier_constant(d.rho_k[k]).beta));
    return e;
}

// ---------------------------------------------------------------------------
// Order sweep

// Step-one fit at a fixed order for the given (IP3: rebuilt) data.
inline CharFunApprox fit_at(const SpectralDataset& d, const ComplexSeq& beta, int N1, const RhoSampling& sampling) {
    switch (d.problem_kind) {
        case ProblemKind::IP1: return charstep::fit_two_spectra(d.rho_k, d.mu_k, d.b, N1);
        case ProblemKind::IP2: {
            ComplexSeq z = d.weyl_points, M = d.weyl_values, pz, pM;
            if (d.weyl_probe_points.empty()) {
                z.clear();
                M.clear();
                profilestep::split_weyl_probes(d.weyl_points, d.weyl_values, z, M, pz, pM);
            }
            return profilestep::fit_weyl(z, M, d.b, N1).approx;
        }
        case ProblemKind::IP3:
        case ProblemKind::IP4: return profilestep::fit_eigen_multiplier(d.rho_k, beta, d.b, N1, sampling);
    }
    throw DataError("unknown problem kind");
}

struct SweepEntry {
    charstep::SweepRow row;  // score is Q for Weyl data and the mean residual for the direct route
    std::optional<recovery::ErrorMetrics> errors;
    std::string error_failure;
};

struct SweepTable {
    ProblemKind kind = ProblemKind::IP1;
    std::string criterion;
    int selected = -1;
    std::vector<SweepEntry> rows;

    // Plain argmin of a column ("R", "P" or "score"); ties, including values at
    // rounding level, go to the smaller order.
    std::optional<int> argmin(const std::string& column) const {
        auto value = [&](const SweepEntry& e) { return column == "R" ? e.row.R : column == "P" ? e.row.P : e.row.score; };
        double v = std::numeric_limits<double>::infinity();
        for (const auto& e : rows)
            if (e.row.ok && std::isfinite(value(e))) v = std::min(v, value(e));
        for (const auto& e : rows)
            if (e.row.ok && std::isfinite(value(e)) && value(e) <= std::max(v, charstep::tie_floor)) return e.row.N1;
        return std::nullopt;
    }
};

// Every candidate order with its selection functionals and, when the truth is
// given, the errors of a full reconstruction at that order.
inline SweepTable sweep(const SpectralDataset& d, const InversionOptions& opt,
                        const std::optional<PotentialSpec>& q = {}, const std::optional<BoundaryConstants>& c = {}) {
    const auto sel = select(d, opt);
    SweepTable t;
    t.kind = d.problem_kind;
    t.criterion = sel.criterion;
    t.selected = sel.N1;
    const bool truth = q.has_value() && c.has_value();
    const auto grid = uniform_grid(d.b, opt.grid_points);
    const ComplexSeq& beta = d.problem_kind == ProblemKind::IP4 ? sel.beta_k : d.beta_k;
    const bool direct = sel.route.find("direct") != std::string::npos;
    for (const auto& row : sel.table) {
        SweepEntry e;
        e.row = row;
        if (truth && row.ok) {
            try {
                const auto p = direct ? profilestep::solve_ip3_direct(d.rho_k, beta, d.b, grid, row.N1)
                                      : profilestep::solve_profile(fit_at(d, beta, row.N1, opt.sampling), grid,
                                                                   opt.sampling, row.N1);
                e.errors = recovery::error_report(recovery::recover(p), *q, *c);
            } catch (const Error& ex) {
                e.error_failure = ex.what();
            }
        }
        t.rows.push_back(std::move(e));
    }
    return t;
}

// CSV: one row per candidate order; the marks column tags argmins and the
// selected order.
inline void write_sweep_csv(const SweepTable& t, std::ostream& out) {
    const bool weyl = t.kind == ProblemKind::IP2;
    const bool direct = t.criterion == "residual";
    const bool rp = !weyl && !direct;
    const auto aR = rp ? t.argmin("R") : std::nullopt;
    const auto aP = rp ? t.argmin("P") : std::nullopt;
    const auto aS = rp ? std::nullopt : t.argmin("score");
    out << "N1,ok";
    if (rp) out << ",R,P";
    else out << (weyl ? ",Q" : ",residual");
    out << ",max_condition,max_error_q,error_h,error_H,marks\n";
    char buf[64];
    auto num = [&](double v) {
        if (!std::isfinite(v)) return std::string();
        std::snprintf(buf, sizeof buf, "%.12g", v);
        return std::string(buf);
    };
    for (const auto& e : t.rows) {
        const auto& r = e.row;
        out << r.N1 << ',' << (r.ok ? 1 : 0);
        if (rp) out << ',' << num(r.R) << ',' << num(r.P);
        else out << ',' << num(r.score);
        out << ',' << num(r.max_condition);
        if (e.errors) out << ',' << num(e.errors->max_blended) << ',' << num(e.errors->err_h) << ',' << num(e.errors->err_H);
        else out << ",,,";
        std::string marks;
        auto tag = [&](bool on, const char* name) {
            if (!on) return;
            if (!marks.empty()) marks += ' ';
            marks += name;
        };
        tag(aR == r.N1, "argmin_R");
        tag(aP == r.N1, "argmin_P");
        tag(aS == r.N1, weyl ? "argmin_Q" : "argmin_residual");
        tag(t.selected == r.N1, "selected");
        out << ',' << marks << '\n';
    }
}

// ---------------------------------------------------------------------------
// File outputs

inline void write_json_file(const nlohmann::json& j, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

template <class Writer>
inline void write_text_file(const std::filesystem::path& path, Writer&& w) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    w(out);
}

inline void write_dataset_files(const SpectralDataset& d, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_dataset_json(d, (dir / "dataset.json").string());
    write_text_file(dir / "dataset.csv", [&](std::ostream& o) { write_dataset_csv(d, o); });
}

inline void write_inversion_files(const InversionResult& r, const nlohmann::json& summary_doc,
                                  const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_text_file(dir / "profile.csv", [&](std::ostream& o) { write_profile_csv(r.profile, o); });
    write_text_file(dir / "recovered.csv", [&](std::ostream& o) { recovery::write_recovered_csv(r.recovered, o); });
    if (r.approx) write_json_file(to_json(*r.approx), dir / "approx.json");
    write_json_file(summary_doc, dir / "summary.json");
}

}  // namespace pipeline
}  // namespace nsbf
