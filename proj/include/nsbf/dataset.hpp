#pragma once

// Spectral input data of the four inverse problems and their on-disk forms.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nsbf/common.hpp"

namespace nsbf {

enum class ProblemKind { IP1, IP2, IP3, IP4 };

inline std::string to_string(ProblemKind k) {
    switch (k) {
        case ProblemKind::IP1: return "IP1";
        case ProblemKind::IP2: return "IP2";
        case ProblemKind::IP3: return "IP3";
        case ProblemKind::IP4: return "IP4";
    }
    return "?";
}

inline ProblemKind problem_kind_from_string(const std::string& s) {
    if (s == "IP1") return ProblemKind::IP1;
    if (s == "IP2") return ProblemKind::IP2;
    if (s == "IP3") return ProblemKind::IP3;
    if (s == "IP4") return ProblemKind::IP4;
    throw DataError("unknown problem kind '" + s + "'");
}

struct SpectralDataset {
    ProblemKind problem_kind = ProblemKind::IP1;
    double b = 1.0;
    ComplexSeq rho_k;          // singular numbers of L
    ComplexSeq mu_k;           // singular numbers of L0 (IP1)
    ComplexSeq beta_k;         // multiplier constants (IP3)
    ComplexSeq alpha_k;        // norming constants (IP4)
    ComplexSeq weyl_points;    // IP2 sample nodes
    ComplexSeq weyl_values;
    ComplexSeq weyl_probe_points;  // IP2 held-out nodes for order selection
    ComplexSeq weyl_probe_values;
    double noise_sigma = 0.0;

    void validate() const {
        if (!(b > 0.0)) throw DataError("dataset: b must be positive");
        if (noise_sigma < 0.0) throw DataError("dataset: noise_sigma must be nonnegative");
        auto upper = [](const ComplexSeq& v, const char* name) {
            for (auto z : v)
                if (z.imag() < 0.0) throw DataError(std::string("dataset: ") + name + " has Im < 0");
        };
        auto finite = [](const ComplexSeq& v, const char* name) {
            for (auto z : v)
                if (!is_finite(z)) throw DataError(std::string("dataset: non-finite entry in ") + name);
        };
        finite(rho_k, "rho_k");
        finite(mu_k, "mu_k");
        finite(beta_k, "beta_k");
        finite(alpha_k, "alpha_k");
        finite(weyl_points, "weyl_points");
        finite(weyl_values, "weyl_values");
        upper(rho_k, "rho_k");
        upper(mu_k, "mu_k");
        switch (problem_kind) {
            case ProblemKind::IP1:
                if (rho_k.empty() || rho_k.size() != mu_k.size())
                    throw DataError("dataset: IP1 needs |rho_k| = |mu_k| > 0");
                break;
            case ProblemKind::IP2:
                if (weyl_points.size() < 2 || weyl_points.size() != weyl_values.size())
                    throw DataError("dataset: IP2 needs |weyl_points| = |weyl_values| >= 2");
                if (weyl_probe_points.size() != weyl_probe_values.size())
                    throw DataError("dataset: IP2 probe points/values length mismatch");
                break;
            case ProblemKind::IP3:
                if (rho_k.empty() || rho_k.size() != beta_k.size())
                    throw DataError("dataset: IP3 needs |rho_k| = |beta_k| > 0");
                for (auto z : beta_k)
                    if (z == complex{}) throw DataError("dataset: multiplier constants must be nonzero");
                break;
            case ProblemKind::IP4:
                if (rho_k.empty() || rho_k.size() != alpha_k.size())
                    throw DataError("dataset: IP4 needs |rho_k| = |alpha_k| > 0");
                break;
        }
    }
};

namespace detail {

inline nlohmann::json to_json_seq(const ComplexSeq& v) {
    nlohmann::json a = nlohmann::json::array();
    for (auto z : v) a.push_back({z.real(), z.imag()});
    return a;
}

inline ComplexSeq from_json_seq(const nlohmann::json& j, const char* key) {
    ComplexSeq out;
    if (!j.contains(key) || j.at(key).is_null()) return out;
    for (const auto& e : j.at(key)) {
        if (e.is_number()) out.emplace_back(e.get<double>(), 0.0);
        else if (e.is_array() && e.size() == 2) out.emplace_back(e[0].get<double>(), e[1].get<double>());
        else throw DataError(std::string("dataset: malformed entry in ") + key);
    }
    return out;
}

}  // namespace detail

inline nlohmann::json to_json(const SpectralDataset& d) {
    nlohmann::json j;
    j["problem_kind"] = to_string(d.problem_kind);
    j["b"] = d.b;
    j["rho_k"] = detail::to_json_seq(d.rho_k);
    j["mu_k"] = detail::to_json_seq(d.mu_k);
    j["beta_k"] = detail::to_json_seq(d.beta_k);
    j["alpha_k"] = detail::to_json_seq(d.alpha_k);
    j["weyl_points"] = detail::to_json_seq(d.weyl_points);
    j["weyl_values"] = detail::to_json_seq(d.weyl_values);
    if (!d.weyl_probe_points.empty()) {
        j["weyl_probe_points"] = detail::to_json_seq(d.weyl_probe_points);
        j["weyl_probe_values"] = detail::to_json_seq(d.weyl_probe_values);
    }
    j["noise_sigma"] = d.noise_sigma;
    return j;
}

inline SpectralDataset dataset_from_json(const nlohmann::json& j) {
    SpectralDataset d;
    try {
        d.problem_kind = problem_kind_from_string(j.at("problem_kind").get<std::string>());
        d.b = j.at("b").get<double>();
        d.rho_k = detail::from_json_seq(j, "rho_k");
        d.mu_k = detail::from_json_seq(j, "mu_k");
        d.beta_k = detail::from_json_seq(j, "beta_k");
        d.alpha_k = detail::from_json_seq(j, "alpha_k");
        d.weyl_points = detail::from_json_seq(j, "weyl_points");
        d.weyl_values = detail::from_json_seq(j, "weyl_values");
        d.weyl_probe_points = detail::from_json_seq(j, "weyl_probe_points");
        d.weyl_probe_values = detail::from_json_seq(j, "weyl_probe_values");
        d.noise_sigma = j.value("noise_sigma", 0.0);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("dataset: ") + e.what());
    }
    d.validate();
    return d;
}

inline void write_dataset_json(const SpectralDataset& d, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << to_json(d).dump(2) << '\n';
}

inline SpectralDataset read_dataset_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": " + e.what());
    }
    return dataset_from_json(j);
}

// CSV: a '#' metadata line, a header, then one row per index k with re/im
// columns for every non-empty sequence.
inline void write_dataset_csv(const SpectralDataset& d, std::ostream& out) {
    std::vector<std::pair<std::string, const ComplexSeq*>> cols;
    auto add = [&](const char* name, const ComplexSeq& v) {
        if (!v.empty()) cols.emplace_back(name, &v);
    };
    add("rho", d.rho_k);
    add("mu", d.mu_k);
    add("beta", d.beta_k);
    add("alpha", d.alpha_k);
    add("z", d.weyl_points);
    add("M", d.weyl_values);
    add("zp", d.weyl_probe_points);
    add("Mp", d.weyl_probe_values);
    out << "# problem_kind=" << to_string(d.problem_kind) << " b=" << std::setprecision(17) << d.b
        << " noise_sigma=" << d.noise_sigma << '\n';
    out << "k";
    for (const auto& [name, v] : cols) out << ',' << name << "_re," << name << "_im";
    out << '\n';
    std::size_t rows = 0;
    for (const auto& c : cols) rows = std::max(rows, c.second->size());
    char buf[64];
    for (std::size_t k = 0; k < rows; ++k) {
        out << k;
        for (const auto& c : cols) {
            if (k < c.second->size()) {
                const complex z = (*c.second)[k];
                std::snprintf(buf, sizeof buf, ",%.17g,%.17g", z.real(), z.imag());
                out << buf;
            } else {
                out << ",,";
            }
        }
        out << '\n';
    }
}

inline SpectralDataset read_dataset_csv(std::istream& in) {
    SpectralDataset d;
    std::string line;
    if (!std::getline(in, line) || line.rfind("# ", 0) != 0) throw DataError("dataset csv: missing metadata line");
    {
        std::istringstream meta(line.substr(2));
        std::string kv;
        while (meta >> kv) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
            if (key == "problem_kind") d.problem_kind = problem_kind_from_string(val);
            else if (key == "b") d.b = std::stod(val);
            else if (key == "noise_sigma") d.noise_sigma = std::stod(val);
        }
    }
    if (!std::getline(in, line)) throw DataError("dataset csv: missing header");
    std::vector<std::string> names;
    {
        std::istringstream hs(line);
        std::string cell;
        std::getline(hs, cell, ',');
        while (std::getline(hs, cell, ',')) {
            const auto us = cell.rfind('_');
            if (cell.substr(us) == "_re") names.push_back(cell.substr(0, us));
        }
    }
    auto target = [&](const std::string& n) -> ComplexSeq& {
        if (n == "rho") return d.rho_k;
        if (n == "mu") return d.mu_k;
        if (n == "beta") return d.beta_k;
        if (n == "alpha") return d.alpha_k;
        if (n == "z") return d.weyl_points;
        if (n == "M") return d.weyl_values;
        if (n == "zp") return d.weyl_probe_points;
        if (n == "Mp") return d.weyl_probe_values;
        throw DataError("dataset csv: unknown column " + n);
    };
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::istringstream rs(line);
        std::string cell;
        while (std::getline(rs, cell, ',')) cells.push_back(cell);
        while (cells.size() < 1 + 2 * names.size()) cells.emplace_back();
        for (std::size_t c = 0; c < names.size(); ++c) {
            const auto& re = cells[1 + 2 * c];
            const auto& im = cells[2 + 2 * c];
            if (re.empty()) continue;
            target(names[c]).emplace_back(std::stod(re), std::stod(im));
        }
    }
    d.validate();
    return d;
}

}  // namespace nsbf
