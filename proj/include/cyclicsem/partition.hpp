#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "cyclicsem/error.hpp"
#include "cyclicsem/model.hpp"

namespace cyclicsem {

/// Split of the vertices around a treatment X.
///
/// S holds the descendants of X (F first, response Y first within F, then U);
/// T holds the non-descendants (W first, then Z). All index lists refer to the
/// model's vertex positions. Within F (after Y), U, W and Z vertices keep the
/// model's vertex order, so the partition does not depend on the order in
/// which control sets are supplied.
struct VertexPartition {
    Index treatment = 0;
    Index response = 0;
    IndexList f;
    IndexList u;
    IndexList w;
    IndexList z;

    [[nodiscard]] IndexList s() const {
        IndexList out = f;
        out.insert(out.end(), u.begin(), u.end());
        return out;
    }
    [[nodiscard]] IndexList t() const {
        IndexList out = w;
        out.insert(out.end(), z.begin(), z.end());
        return out;
    }
    /// S followed by X: the rows and columns of the feedback block A11.
    [[nodiscard]] IndexList sx() const {
        IndexList out = s();
        out.push_back(treatment);
        return out;
    }
    /// Full block order (S, X, T).
    [[nodiscard]] IndexList order() const {
        IndexList out = sx();
        const auto tt = t();
        out.insert(out.end(), tt.begin(), tt.end());
        return out;
    }

    [[nodiscard]] Index n_f() const { return static_cast<Index>(f.size()); }
    [[nodiscard]] Index n_u() const { return static_cast<Index>(u.size()); }
    [[nodiscard]] Index n_s() const { return n_f() + n_u(); }
    [[nodiscard]] Index n_w() const { return static_cast<Index>(w.size()); }
    [[nodiscard]] Index n_z() const { return static_cast<Index>(z.size()); }
    [[nodiscard]] Index n_t() const { return n_w() + n_z(); }

    friend bool operator==(const VertexPartition&, const VertexPartition&) = default;
};

inline std::vector<std::string> names_of(const StructuralModel& model, const IndexList& idx) {
    std::vector<std::string> out;
    out.reserve(idx.size());
    for (Index i : idx) {
        out.push_back(model.variables()[static_cast<std::size_t>(i)]);
    }
    return out;
}

/// Recomputes S from directed reachability and places the control sets.
/// `controls_f` may omit the response; it is always placed first in F.
inline VertexPartition partition_vertices(const StructuralModel& model, const std::string& treatment,
                                          const std::string& response,
                                          const std::vector<std::string>& controls_f = {},
                                          const std::vector<std::string>& controls_w = {}) {
    VertexPartition p;
    p.treatment = model.index_of(treatment);
    p.response = model.index_of(response);
    if (p.treatment == p.response) {
        throw Error(ErrorKind::ControlSetMismatch, "response and treatment must differ");
    }
    const auto reach = model.diagram.reachable_from(p.treatment);
    auto in_s = [&](Index v) { return v != p.treatment && reach[static_cast<std::size_t>(v)]; };
    if (!in_s(p.response)) {
        throw Error(ErrorKind::ResponseNotDescendant,
                    "response " + response + " is not reachable from treatment " + treatment);
    }

    const Index n = model.size();
    std::vector<bool> in_f(static_cast<std::size_t>(n), false);
    std::vector<bool> in_w(static_cast<std::size_t>(n), false);
    for (const auto& name : controls_f) {
        const Index v = model.index_of(name);
        if (!in_s(v)) {
            throw Error(ErrorKind::ControlSetMismatch, "feedback control " + name + " is not a descendant of " + treatment);
        }
        in_f[static_cast<std::size_t>(v)] = true;
    }
    for (const auto& name : controls_w) {
        const Index v = model.index_of(name);
        if (v == p.treatment || in_s(v)) {
            throw Error(ErrorKind::ControlSetMismatch, "covariate " + name + " is not a non-descendant of " + treatment);
        }
        in_w[static_cast<std::size_t>(v)] = true;
    }

    p.f.push_back(p.response);
    for (Index v = 0; v < n; ++v) {
        if (v == p.treatment) {
            continue;
        }
        const auto k = static_cast<std::size_t>(v);
        if (in_s(v)) {
            if (v == p.response) {
                continue;
            }
            (in_f[k] ? p.f : p.u).push_back(v);
        } else {
            (in_w[k] ? p.w : p.z).push_back(v);
        }
    }
    return p;
}

/// Checks a (possibly user-declared) partition against the model: set
/// membership must match reachability and the T rows must not load on S or X.
inline ValidationReport validate_model(const StructuralModel& model, const VertexPartition& partition) {
    ValidationReport report = validate_model(model);
    if (report.has(ViolationKind::DimensionMismatch)) {
        return report;
    }
    auto add = [&report](ViolationKind k, std::string msg) { report.violations.push_back({k, std::move(msg)}); };
    const auto& names = model.variables();
    const auto reach = model.diagram.reachable_from(partition.treatment);

    const auto s = partition.s();
    const auto t = partition.t();
    IndexList all = partition.order();
    std::sort(all.begin(), all.end());
    IndexList expected(static_cast<std::size_t>(model.size()));
    for (Index i = 0; i < model.size(); ++i) {
        expected[static_cast<std::size_t>(i)] = i;
    }
    if (all != expected) {
        add(ViolationKind::PartitionMismatch, "partition does not cover every vertex exactly once");
    }
    if (partition.f.empty() || partition.f.front() != partition.response) {
        add(ViolationKind::PartitionMismatch, "response must be the first feedback control");
    }
    for (Index v : s) {
        if (!reach[static_cast<std::size_t>(v)]) {
            add(ViolationKind::PartitionMismatch, names[static_cast<std::size_t>(v)] + " is declared a descendant but is not reachable");
        }
    }
    for (Index v : t) {
        if (reach[static_cast<std::size_t>(v)] && v != partition.treatment) {
            add(ViolationKind::PartitionMismatch, names[static_cast<std::size_t>(v)] + " is declared a non-descendant but is reachable");
        }
        const auto tv = names[static_cast<std::size_t>(v)];
        for (Index j : partition.sx()) {
            if (model.coefficients(v, j) != 0.0) {
                add(ViolationKind::TBlockNotZero, "T-block not zero: non-descendant " + tv + " loads on " +
                                                      names[static_cast<std::size_t>(j)]);
            }
        }
    }
    return report;
}

} // namespace cyclicsem
