#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cyclicsem/error.hpp"
#include "cyclicsem/linalg.hpp"

namespace cyclicsem {

struct Edge {
    Index from = 0;
    Index to = 0;

    friend bool operator==(const Edge&, const Edge&) = default;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Named vertices plus directed arrows between them.
struct PathDiagram {
    std::vector<std::string> vertices;
    std::vector<Edge> edges;

    [[nodiscard]] Index size() const { return static_cast<Index>(vertices.size()); }

    [[nodiscard]] std::optional<Index> find(const std::string& name) const {
        const auto it = std::find(vertices.begin(), vertices.end(), name);
        if (it == vertices.end()) {
            return std::nullopt;
        }
        return static_cast<Index>(it - vertices.begin());
    }

    [[nodiscard]] Index index_of(const std::string& name) const {
        if (auto idx = find(name)) {
            return *idx;
        }
        throw Error(ErrorKind::UnknownVariable, "no vertex named '" + name + "'");
    }

    [[nodiscard]] std::vector<IndexList> children() const {
        std::vector<IndexList> out(vertices.size());
        for (const auto& e : edges) {
            out[static_cast<std::size_t>(e.from)].push_back(e.to);
        }
        return out;
    }

    [[nodiscard]] IndexList parents(Index v) const {
        IndexList out;
        for (const auto& e : edges) {
            if (e.to == v) {
                out.push_back(e.from);
            }
        }
        return out;
    }

    /// Vertices reachable from `source` along directed paths of length >= 1.
    /// `source` itself is included only when it lies on a cycle.
    [[nodiscard]] std::vector<bool> reachable_from(Index source) const {
        const auto adj = children();
        std::vector<bool> seen(vertices.size(), false);
        std::vector<Index> stack = adj[static_cast<std::size_t>(source)];
        while (!stack.empty()) {
            const Index v = stack.back();
            stack.pop_back();
            if (seen[static_cast<std::size_t>(v)]) {
                continue;
            }
            seen[static_cast<std::size_t>(v)] = true;
            for (Index c : adj[static_cast<std::size_t>(v)]) {
                if (!seen[static_cast<std::size_t>(c)]) {
                    stack.push_back(c);
                }
            }
        }
        return seen;
    }

    [[nodiscard]] bool has_cycle() const {
        for (Index v = 0; v < size(); ++v) {
            if (reachable_from(v)[static_cast<std::size_t>(v)]) {
                return true;
            }
        }
        return false;
    }
};

/// Linear structural equation system V = intercepts + A V + eps with
/// independent disturbances. Row i of `coefficients` holds the path
/// coefficients of the parents of vertex i.
struct StructuralModel {
    PathDiagram diagram;
    MatrixXd coefficients;
    VectorXd intercepts;
    VectorXd disturbance_variances;

    [[nodiscard]] Index size() const { return diagram.size(); }
    [[nodiscard]] const std::vector<std::string>& variables() const { return diagram.vertices; }
    [[nodiscard]] Index index_of(const std::string& name) const { return diagram.index_of(name); }
    [[nodiscard]] double coefficient(const std::string& from, const std::string& to) const {
        return coefficients(index_of(to), index_of(from));
    }
};

struct PathSpec {
    std::string from;
    std::string to;
    double coefficient = 0.0;
};

/// Assembles a model from named paths. Variables missing from `intercepts`
/// default to 0 and those missing from `variances` default to 1. Structural
/// problems (self-loops, duplicate or zero paths) are kept as given so that
/// validate_model can report them.
inline StructuralModel build_model(std::vector<std::string> vertices, const std::vector<PathSpec>& paths,
                                   const std::map<std::string, double>& intercepts = {},
                                   const std::map<std::string, double>& variances = {}) {
    StructuralModel model;
    model.diagram.vertices = std::move(vertices);
    const Index n = model.diagram.size();
    {
        std::set<std::string> unique(model.diagram.vertices.begin(), model.diagram.vertices.end());
        if (static_cast<Index>(unique.size()) != n) {
            throw Error(ErrorKind::InvalidModel, "vertex names must be unique");
        }
    }
    model.coefficients = MatrixXd::Zero(n, n);
    model.intercepts = VectorXd::Zero(n);
    model.disturbance_variances = VectorXd::Ones(n);
    for (const auto& p : paths) {
        const Edge e{model.diagram.index_of(p.from), model.diagram.index_of(p.to)};
        model.diagram.edges.push_back(e);
        model.coefficients(e.to, e.from) = p.coefficient;
    }
    for (const auto& [name, value] : intercepts) {
        model.intercepts(model.diagram.index_of(name)) = value;
    }
    for (const auto& [name, value] : variances) {
        model.disturbance_variances(model.diagram.index_of(name)) = value;
    }
    return model;
}

enum class ViolationKind {
    DimensionMismatch,
    DuplicateVertex,
    SelfLoop,
    DuplicateEdge,
    ZeroPathCoefficient,
    CoefficientWithoutEdge,
    NegativeVariance,
    NonFinite,
    TBlockNotZero,
    PartitionMismatch,
};

struct Violation {
    ViolationKind kind;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;

    [[nodiscard]] bool valid() const { return violations.empty(); }
    [[nodiscard]] bool has(ViolationKind kind) const {
        return std::any_of(violations.begin(), violations.end(), [kind](const Violation& v) { return v.kind == kind; });
    }
};

inline ValidationReport validate_model(const StructuralModel& model) {
    ValidationReport report;
    auto add = [&report](ViolationKind k, std::string msg) { report.violations.push_back({k, std::move(msg)}); };
    const Index n = model.size();
    const auto& names = model.diagram.vertices;

    if (model.coefficients.rows() != n || model.coefficients.cols() != n || model.intercepts.size() != n ||
        model.disturbance_variances.size() != n) {
        add(ViolationKind::DimensionMismatch, "coefficient matrix, intercepts and variances must match " +
                                                  std::to_string(n) + " vertices");
        return report;
    }
    {
        std::set<std::string> unique(names.begin(), names.end());
        if (static_cast<Index>(unique.size()) != n) {
            add(ViolationKind::DuplicateVertex, "vertex names must be unique");
        }
    }
    if (!model.coefficients.allFinite() || !model.intercepts.allFinite() || !model.disturbance_variances.allFinite()) {
        add(ViolationKind::NonFinite, "model contains non-finite values");
    }

    std::vector<std::vector<bool>> declared(static_cast<std::size_t>(n), std::vector<bool>(static_cast<std::size_t>(n), false));
    std::set<Edge> seen;
    for (const auto& e : model.diagram.edges) {
        if (e.from < 0 || e.from >= n || e.to < 0 || e.to >= n) {
            add(ViolationKind::DimensionMismatch, "edge refers to a vertex index out of range");
            continue;
        }
        if (e.from == e.to) {
            add(ViolationKind::SelfLoop, "self-loop at vertex " + names[static_cast<std::size_t>(e.from)]);
        }
        if (!seen.insert(e).second) {
            add(ViolationKind::DuplicateEdge, "duplicate edge " + names[static_cast<std::size_t>(e.from)] + " -> " +
                                                  names[static_cast<std::size_t>(e.to)]);
        }
        declared[static_cast<std::size_t>(e.to)][static_cast<std::size_t>(e.from)] = true;
    }

    for (Index i = 0; i < n; ++i) {
        const auto& vi = names[static_cast<std::size_t>(i)];
        if (model.coefficients(i, i) != 0.0) {
            if (!declared[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)]) {
                add(ViolationKind::SelfLoop, "self-loop at vertex " + vi);
            }
        }
        for (Index j = 0; j < n; ++j) {
            if (i == j) {
                continue;
            }
            const bool edge = declared[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            const double c = model.coefficients(i, j);
            const auto& vj = names[static_cast<std::size_t>(j)];
            if (edge && c == 0.0) {
                add(ViolationKind::ZeroPathCoefficient, "edge " + vj + " -> " + vi + " has a zero path coefficient");
            } else if (!edge && c != 0.0) {
                add(ViolationKind::CoefficientWithoutEdge,
                    "coefficient of " + vj + " on " + vi + " is nonzero but the diagram has no such edge");
            }
        }
        if (model.disturbance_variances(i) < 0.0) {
            add(ViolationKind::NegativeVariance, "disturbance variance of " + vi + " is negative");
        }
    }
    return report;
}

} // namespace cyclicsem
