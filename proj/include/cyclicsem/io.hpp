#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "cyclicsem/control.hpp"
#include "cyclicsem/effects.hpp"
#include "cyclicsem/error.hpp"
#include "cyclicsem/estimation.hpp"
#include "cyclicsem/model.hpp"
#include "cyclicsem/simulation.hpp"

namespace cyclicsem::io {

using nlohmann::json;

namespace detail {

inline void reject_unknown_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) {
        throw Error(ErrorKind::ParseError, where + " must be a JSON object");
    }
    for (const auto& [key, _] : j.items()) {
        if (!allowed.contains(key)) {
            throw Error(ErrorKind::ParseError, "unknown key '" + key + "' in " + where);
        }
    }
}

inline const json& require(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) {
        throw Error(ErrorKind::ParseError, where + " is missing '" + key + "'");
    }
    return j.at(key);
}

inline double number(const json& j, const std::string& what) {
    if (!j.is_number()) {
        throw Error(ErrorKind::ParseError, what + " must be a number");
    }
    return j.get<double>();
}

inline std::vector<std::string> string_list(const json& j, const std::string& what) {
    if (!j.is_array()) {
        throw Error(ErrorKind::ParseError, what + " must be an array of names");
    }
    std::vector<std::string> out;
    for (const auto& v : j) {
        if (!v.is_string()) {
            throw Error(ErrorKind::ParseError, what + " must contain only strings");
        }
        out.push_back(v.get<std::string>());
    }
    return out;
}

inline std::map<std::string, double> named_numbers(const json& j, const std::string& what) {
    if (!j.is_object()) {
        throw Error(ErrorKind::ParseError, what + " must map names to numbers");
    }
    std::map<std::string, double> out;
    for (const auto& [key, value] : j.items()) {
        out[key] = number(value, what + "." + key);
    }
    return out;
}

inline json matrix_json(const MatrixXd& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index k = 0; k < m.cols(); ++k) {
            row.push_back(m(i, k));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace detail

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::ParseError, "cannot open " + path);
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::ParseError, path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Model files: {"variables", "edges": [{"from","to","coeff"}], "intercepts",
// "disturbance_variances"}.

inline StructuralModel parse_model(const json& j) {
    detail::reject_unknown_keys(j, {"variables", "edges", "intercepts", "disturbance_variances"}, "model");
    const auto vars = detail::string_list(detail::require(j, "variables", "model"), "variables");
    std::vector<PathSpec> paths;
    if (j.contains("edges")) {
        const auto& edges = j.at("edges");
        if (!edges.is_array()) {
            throw Error(ErrorKind::ParseError, "edges must be an array");
        }
        for (const auto& e : edges) {
            detail::reject_unknown_keys(e, {"from", "to", "coeff"}, "edge");
            const auto& from = detail::require(e, "from", "edge");
            const auto& to = detail::require(e, "to", "edge");
            if (!from.is_string() || !to.is_string()) {
                throw Error(ErrorKind::ParseError, "edge endpoints must be variable names");
            }
            paths.push_back({from.get<std::string>(), to.get<std::string>(),
                             detail::number(detail::require(e, "coeff", "edge"), "edge coeff")});
        }
    }
    std::map<std::string, double> intercepts;
    if (j.contains("intercepts")) {
        intercepts = detail::named_numbers(j.at("intercepts"), "intercepts");
    }
    const auto variances =
        detail::named_numbers(detail::require(j, "disturbance_variances", "model"), "disturbance_variances");
    for (const auto& v : vars) {
        if (!variances.contains(v)) {
            throw Error(ErrorKind::ParseError, "disturbance_variances has no entry for " + v);
        }
    }
    try {
        return build_model(vars, paths, intercepts, variances);
    } catch (const Error& e) {
        throw Error(ErrorKind::ParseError, e.what());
    }
}

inline json model_to_json(const StructuralModel& model) {
    const auto& names = model.variables();
    json edges = json::array();
    for (const auto& e : model.diagram.edges) {
        edges.push_back({{"from", names[static_cast<std::size_t>(e.from)]},
                         {"to", names[static_cast<std::size_t>(e.to)]},
                         {"coeff", model.coefficients(e.to, e.from)}});
    }
    json intercepts = json::object();
    json variances = json::object();
    for (std::size_t i = 0; i < names.size(); ++i) {
        intercepts[names[i]] = model.intercepts(static_cast<Index>(i));
        variances[names[i]] = model.disturbance_variances(static_cast<Index>(i));
    }
    return {{"variables", names}, {"edges", edges}, {"intercepts", intercepts}, {"disturbance_variances", variances}};
}

inline StructuralModel load_model(const std::string& path) { return parse_model(read_json_file(path)); }

/// 64-bit FNV-1a over the canonical JSON form, as 16 hex digits.
inline std::string model_hash(const StructuralModel& model) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : model_to_json(model).dump()) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

// ---------------------------------------------------------------------------
// Plan files: {"x", "a": {F: gain}, "b": {W: gain} | "optimal", "sigma_eps_star"}.

struct PlanFile {
    ControlPlan plan;
    bool optimal_b = false;
};

inline PlanFile parse_plan(const json& j) {
    detail::reject_unknown_keys(j, {"x", "a", "b", "sigma_eps_star"}, "plan");
    PlanFile out;
    out.plan.x = detail::number(detail::require(j, "x", "plan"), "x");
    std::map<std::string, double> a;
    if (j.contains("a")) {
        a = detail::named_numbers(j.at("a"), "a");
    }
    for (const auto& [name, gain] : a) {
        out.plan.f.push_back(name);
    }
    out.plan.a.resize(static_cast<Index>(a.size()));
    Index k = 0;
    for (const auto& [name, gain] : a) {
        out.plan.a(k++) = gain;
    }
    if (j.contains("b")) {
        const auto& b = j.at("b");
        if (b.is_string()) {
            if (b.get<std::string>() != "optimal") {
                throw Error(ErrorKind::ParseError, "b must be an object of gains or \"optimal\"");
            }
            out.optimal_b = true;
        } else {
            const auto gains = detail::named_numbers(b, "b");
            out.plan.b.resize(static_cast<Index>(gains.size()));
            k = 0;
            for (const auto& [name, gain] : gains) {
                out.plan.w.push_back(name);
                out.plan.b(k++) = gain;
            }
        }
    }
    out.plan.b.conservativeResize(static_cast<Index>(out.plan.w.size()));
    if (j.contains("sigma_eps_star")) {
        out.plan.sigma_eps_star = detail::number(j.at("sigma_eps_star"), "sigma_eps_star");
        if (out.plan.sigma_eps_star < 0.0) {
            throw Error(ErrorKind::ParseError, "sigma_eps_star must be nonnegative");
        }
    }
    return out;
}

inline json plan_to_json(const ControlPlan& plan) {
    json a = json::object();
    for (std::size_t i = 0; i < plan.f.size(); ++i) {
        a[plan.f[i]] = plan.a(static_cast<Index>(i));
    }
    json b = json::object();
    for (std::size_t i = 0; i < plan.w.size(); ++i) {
        b[plan.w[i]] = plan.b(static_cast<Index>(i));
    }
    return {{"x", plan.x}, {"a", a}, {"b", b}, {"sigma_eps_star", plan.sigma_eps_star}};
}

inline PlanFile load_plan(const std::string& path) { return parse_plan(read_json_file(path)); }

// ---------------------------------------------------------------------------
// Covariance files: {"variables", "matrix", "means"?, "n"?}.

inline MomentSummary parse_covariance(const json& j) {
    detail::reject_unknown_keys(j, {"variables", "matrix", "means", "n"}, "covariance");
    MomentSummary m;
    m.variables = detail::string_list(detail::require(j, "variables", "covariance"), "variables");
    m.source = MomentSource::Sample;
    const auto p = static_cast<Index>(m.variables.size());
    if (std::set<std::string>(m.variables.begin(), m.variables.end()).size() != m.variables.size()) {
        throw Error(ErrorKind::ParseError, "covariance variables must be unique");
    }
    const auto& rows = detail::require(j, "matrix", "covariance");
    if (!rows.is_array() || static_cast<Index>(rows.size()) != p) {
        throw Error(ErrorKind::ParseError, "matrix must have one row per variable");
    }
    m.covariance.resize(p, p);
    for (Index i = 0; i < p; ++i) {
        const auto& row = rows.at(static_cast<std::size_t>(i));
        if (!row.is_array() || static_cast<Index>(row.size()) != p) {
            throw Error(ErrorKind::ParseError, "matrix must be square");
        }
        for (Index k = 0; k < p; ++k) {
            m.covariance(i, k) = detail::number(row.at(static_cast<std::size_t>(k)), "matrix entry");
        }
    }
    if (!(m.covariance - m.covariance.transpose()).isZero(1e-12) || (m.covariance.diagonal().array() < 0.0).any()) {
        throw Error(ErrorKind::ParseError, "matrix must be symmetric with a nonnegative diagonal");
    }
    m.mean = VectorXd::Zero(p);
    if (j.contains("means")) {
        const auto& means = j.at("means");
        if (means.is_array()) {
            if (static_cast<Index>(means.size()) != p) {
                throw Error(ErrorKind::ParseError, "means must have one entry per variable");
            }
            for (Index i = 0; i < p; ++i) {
                m.mean(i) = detail::number(means.at(static_cast<std::size_t>(i)), "mean");
            }
        } else {
            for (const auto& [name, value] : detail::named_numbers(means, "means")) {
                m.mean(m.index_of(name)) = value;
            }
        }
    }
    if (j.contains("n")) {
        const auto& n = j.at("n");
        if (!n.is_number_integer() || n.get<long long>() < 2) {
            throw Error(ErrorKind::ParseError, "n must be an integer >= 2");
        }
        m.n = n.get<std::size_t>();
    }
    return m;
}

inline json moments_to_json(const MomentSummary& m) {
    json out = {{"variables", m.variables},
                {"matrix", detail::matrix_json(m.covariance)},
                {"means", std::vector<double>(m.mean.data(), m.mean.data() + m.mean.size())}};
    if (m.n) {
        out["n"] = *m.n;
    }
    return out;
}

inline MomentSummary load_covariance(const std::string& path) { return parse_covariance(read_json_file(path)); }

// ---------------------------------------------------------------------------
// CSV: header row of names, decimal reals, no missing cells.

inline Dataset read_csv(std::istream& in) {
    auto split = [](const std::string& line) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ss(line);
        while (std::getline(ss, cell, ',')) {
            const auto first = cell.find_first_not_of(" \t\r");
            const auto last = cell.find_last_not_of(" \t\r");
            cells.push_back(first == std::string::npos ? std::string{} : cell.substr(first, last - first + 1));
        }
        if (!line.empty() && line.back() == ',') {
            cells.emplace_back();
        }
        return cells;
    };
    Dataset data;
    std::string line;
    if (!std::getline(in, line)) {
        throw Error(ErrorKind::ParseError, "CSV input is empty");
    }
    data.columns = split(line);
    const std::size_t p = data.columns.size();
    std::vector<double> values;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const auto cells = split(line);
        if (cells.size() != p) {
            throw Error(ErrorKind::ParseError, "row " + std::to_string(n + 1) + " has " + std::to_string(cells.size()) +
                                                   " cells, expected " + std::to_string(p));
        }
        for (const auto& c : cells) {
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
            if (c.empty() || ec != std::errc{} || ptr != c.data() + c.size()) {
                throw Error(ErrorKind::ParseError, "row " + std::to_string(n + 1) + ": '" + c + "' is not a number");
            }
            values.push_back(v);
        }
        ++n;
    }
    data.rows = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        values.data(), static_cast<Index>(n), static_cast<Index>(p));
    check_dataset(data);
    return data;
}

inline Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::ParseError, "cannot open " + path);
    }
    return read_csv(in);
}

inline void write_csv(std::ostream& out, const Dataset& data) {
    for (std::size_t i = 0; i < data.columns.size(); ++i) {
        out << (i ? "," : "") << data.columns[i];
    }
    out << '\n';
    char buf[32];
    for (Index r = 0; r < data.rows.rows(); ++r) {
        for (Index c = 0; c < data.rows.cols(); ++c) {
            const auto res = std::to_chars(buf, buf + sizeof buf, data.rows(r, c));
            if (c) {
                out << ',';
            }
            out.write(buf, res.ptr - buf);
        }
        out << '\n';
    }
}

inline json simulation_metadata(const Simulation& sim, const StructuralModel& model) {
    return {{"seed", sim.seed},
            {"n", sim.data.n()},
            {"model_hash", model_hash(model)},
            {"rng", sim.rng},
            {"disturbance_law", std::string(to_string(sim.law))},
            {"spectral_radius", sim.spectral_radius},
            {"model_stable", sim.model_stable}};
}

} // namespace cyclicsem::io
