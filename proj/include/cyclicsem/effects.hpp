#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cyclicsem/error.hpp"
#include "cyclicsem/linalg.hpp"
#include "cyclicsem/model.hpp"
#include "cyclicsem/partition.hpp"
#include "cyclicsem/stability.hpp"

namespace cyclicsem {

enum class MomentSource { Implied, Sample, PostPlan };

inline std::string_view to_string(MomentSource s) noexcept {
    switch (s) {
        case MomentSource::Implied: return "implied";
        case MomentSource::Sample: return "sample";
        case MomentSource::PostPlan: return "post-plan";
    }
    return "unknown";
}

/// Mean vector and covariance matrix over named variables.
struct MomentSummary {
    std::vector<std::string> variables;
    VectorXd mean;
    MatrixXd covariance;
    MomentSource source = MomentSource::Implied;
    std::optional<std::size_t> n;

    [[nodiscard]] Index index_of(const std::string& name) const {
        for (std::size_t i = 0; i < variables.size(); ++i) {
            if (variables[i] == name) {
                return static_cast<Index>(i);
            }
        }
        throw Error(ErrorKind::UnknownVariable, "moments have no variable '" + name + "'");
    }
    [[nodiscard]] IndexList indices(const std::vector<std::string>& names) const {
        IndexList out;
        out.reserve(names.size());
        for (const auto& name : names) {
            out.push_back(index_of(name));
        }
        return out;
    }
    [[nodiscard]] double mean_of(const std::string& name) const { return mean(index_of(name)); }
    [[nodiscard]] VectorXd means(const std::vector<std::string>& names) const { return mean(indices(names)); }
    [[nodiscard]] double cov(const std::string& a, const std::string& b) const {
        return covariance(index_of(a), index_of(b));
    }
    [[nodiscard]] MatrixXd block(const std::vector<std::string>& rows, const std::vector<std::string>& cols) const {
        return covariance(indices(rows), indices(cols));
    }
};

/// Reduced-form effects of the treatment on its descendants:
/// tau_sx = (I - A_ss)^-1 A_sx and tau_st = (I - A_ss)^-1 A_st.
struct EffectSummary {
    std::string treatment;
    std::vector<std::string> s_names;  // F first (response first), then U
    std::vector<std::string> t_names;  // W first, then Z
    Index n_f = 1;
    VectorXd tau_sx;
    MatrixXd tau_st;

    [[nodiscard]] const std::string& response() const { return s_names.front(); }
    [[nodiscard]] std::vector<std::string> f_names() const {
        return {s_names.begin(), s_names.begin() + n_f};
    }
    [[nodiscard]] std::vector<std::string> u_names() const {
        return {s_names.begin() + n_f, s_names.end()};
    }
    [[nodiscard]] VectorXd gamma_fx() const { return tau_sx.head(n_f); }
    [[nodiscard]] VectorXd gamma_ux() const { return tau_sx.tail(tau_sx.size() - n_f); }
    [[nodiscard]] double gamma_yx() const { return tau_sx(0); }

    /// Effects known only on F, e.g. from instrumental-variable estimates.
    static EffectSummary from_total_effects(std::string treatment, std::vector<std::string> f_names,
                                            VectorXd gamma_fx) {
        if (f_names.empty() || static_cast<Index>(f_names.size()) != gamma_fx.size()) {
            throw Error(ErrorKind::ControlSetMismatch, "one total effect is needed per feedback control");
        }
        EffectSummary e;
        e.treatment = std::move(treatment);
        e.n_f = static_cast<Index>(f_names.size());
        e.s_names = std::move(f_names);
        e.tau_sx = std::move(gamma_fx);
        e.tau_st = MatrixXd::Zero(e.n_f, 0);
        return e;
    }
};

inline EffectSummary total_effects(const StructuralModel& model, const VertexPartition& partition) {
    const auto s = partition.s();
    const auto t = partition.t();
    const IndexList x{partition.treatment};
    const MatrixXd a_ss = linalg::block(model.coefficients, s, s);
    const MatrixXd i_minus = MatrixXd::Identity(a_ss.rows(), a_ss.cols()) - a_ss;
    const auto lu = linalg::checked_lu(i_minus, ErrorKind::SingularSystem, "I - A_ss");

    EffectSummary e;
    e.treatment = model.variables()[static_cast<std::size_t>(partition.treatment)];
    e.s_names = names_of(model, s);
    e.t_names = names_of(model, t);
    e.n_f = partition.n_f();
    e.tau_sx = lu.solve(MatrixXd(linalg::block(model.coefficients, s, x))).col(0);
    e.tau_st = lu.solve(linalg::block(model.coefficients, s, t));
    return e;
}

/// Equilibrium moments mu = (I - A)^-1 intercepts and
/// Sigma = (I - A)^-1 Sigma_ee (I - A)^-T over all vertices.
inline MomentSummary implied_moments(const StructuralModel& model,
                                     double tolerance = kDefaultStabilityTolerance) {
    if (!is_convergent(model.coefficients, tolerance)) {
        throw Error(ErrorKind::UnstableModel, "spectral radius of the coefficient matrix is not below 1");
    }
    const Index n = model.size();
    const MatrixXd i_minus = MatrixXd::Identity(n, n) - model.coefficients;
    const auto lu = linalg::checked_lu(i_minus, ErrorKind::SingularSystem, "I - A");
    const MatrixXd g = lu.inverse();

    MomentSummary m;
    m.variables = model.variables();
    m.mean = lu.solve(model.intercepts);
    m.covariance = linalg::symmetrized(g * model.disturbance_variances.asDiagonal() * g.transpose());
    m.source = MomentSource::Implied;
    return m;
}

/// Regression coefficients Sigma_{rc.z} Sigma_{cc.z}^-1 with conditional
/// covariances formed by Schur complements on the conditioning set.
struct RegressionBlocks {
    std::vector<std::string> rows;
    std::vector<std::string> cols;
    std::vector<std::string> conditioning;
    MatrixXd coefficients;
    MatrixXd cov_rc;
    MatrixXd cov_cc;
};

inline RegressionBlocks regression_blocks(const MomentSummary& moments, const std::vector<std::string>& rows,
                                          const std::vector<std::string>& cols,
                                          const std::vector<std::string>& conditioning = {}) {
    RegressionBlocks out{rows, cols, conditioning, {}, {}, {}};
    MatrixXd s_rc = moments.block(rows, cols);
    MatrixXd s_cc = moments.block(cols, cols);
    if (!conditioning.empty()) {
        std::vector<std::string> joint = cols;
        joint.insert(joint.end(), conditioning.begin(), conditioning.end());
        linalg::checked_lu(moments.block(joint, joint), ErrorKind::SingularBlock, "covariance of regressors and conditioning set");
        const auto lu_zz = linalg::checked_lu(moments.block(conditioning, conditioning), ErrorKind::SingularBlock,
                                              "covariance of conditioning set");
        const MatrixXd s_zc = moments.block(conditioning, cols);
        const MatrixXd s_zr = moments.block(conditioning, rows);
        s_rc -= s_zr.transpose() * lu_zz.solve(s_zc);
        s_cc -= s_zc.transpose() * lu_zz.solve(s_zc);
    }
    out.cov_rc = s_rc;
    out.cov_cc = linalg::symmetrized(s_cc);
    if (cols.empty()) {
        out.coefficients = MatrixXd::Zero(static_cast<Index>(rows.size()), 0);
        return out;
    }
    const auto lu_cc = linalg::checked_lu(out.cov_cc, ErrorKind::SingularBlock, "covariance of regressors");
    out.coefficients = lu_cc.solve(s_rc.transpose()).transpose();
    return out;
}

} // namespace cyclicsem
