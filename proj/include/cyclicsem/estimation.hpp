#pragma once

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "cyclicsem/effects.hpp"
#include "cyclicsem/error.hpp"
#include "cyclicsem/linalg.hpp"

namespace cyclicsem {

/// Observations in rows, one named column per variable.
struct Dataset {
    std::vector<std::string> columns;
    MatrixXd rows;

    [[nodiscard]] Index n() const { return rows.rows(); }

    [[nodiscard]] Index column_index(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (columns[i] == name) {
                return static_cast<Index>(i);
            }
        }
        throw Error(ErrorKind::UnknownVariable, "dataset has no column '" + name + "'");
    }
    [[nodiscard]] auto column(const std::string& name) const { return rows.col(column_index(name)); }
};

inline void check_dataset(const Dataset& data) {
    if (static_cast<Index>(data.columns.size()) != data.rows.cols()) {
        throw Error(ErrorKind::ParseError, "column names do not match the data width");
    }
    if (std::set<std::string>(data.columns.begin(), data.columns.end()).size() != data.columns.size()) {
        throw Error(ErrorKind::ParseError, "column names must be unique");
    }
    if (!data.rows.allFinite()) {
        throw Error(ErrorKind::NonFiniteEntry, "dataset has missing or non-finite cells");
    }
}

/// Column means and the unbiased (n - 1) covariance.
inline MomentSummary sample_moments(const Dataset& data) {
    check_dataset(data);
    if (data.n() < 2) {
        throw Error(ErrorKind::TooFewRows, "at least two observations are needed");
    }
    MomentSummary m;
    m.variables = data.columns;
    m.mean = data.rows.colwise().mean().transpose();
    const MatrixXd centered = data.rows.rowwise() - m.mean.transpose();
    m.covariance = linalg::symmetrized(centered.transpose() * centered / static_cast<double>(data.n() - 1));
    m.source = MomentSource::Sample;
    m.n = static_cast<std::size_t>(data.n());
    return m;
}

inline constexpr double kDefaultWeakInstrumentThreshold = 1e-8;

struct IVEstimate {
    double gamma_hat = 0.0;
    std::vector<std::string> instruments;
    /// sigma_xz for a single instrument; the projected treatment variance
    /// Sigma_xz Sigma_zz^-1 Sigma_zx for two-stage least squares.
    double denominator = 0.0;
};

/// gamma = sigma_yz / sigma_xz. The instrument's exclusion from Y's equation is
/// the caller's assertion; only relevance is checked.
inline IVEstimate iv_estimate(const MomentSummary& moments, const std::string& x, const std::string& y,
                              const std::string& z, double threshold = kDefaultWeakInstrumentThreshold) {
    const double s_xz = moments.cov(x, z);
    const double scale = std::sqrt(moments.cov(x, x) * moments.cov(z, z));
    if (!(std::abs(s_xz) >= threshold * scale) || s_xz == 0.0) {
        throw Error(ErrorKind::WeakInstrument, z + " is too weakly correlated with " + x);
    }
    return {moments.cov(y, z) / s_xz, {z}, s_xz};
}

/// gamma = (Sigma_xz Sigma_zz^-1 Sigma_zy) / (Sigma_xz Sigma_zz^-1 Sigma_zx).
inline IVEstimate tsls_estimate(const MomentSummary& moments, const std::string& x, const std::string& y,
                                const std::vector<std::string>& instruments,
                                double threshold = kDefaultWeakInstrumentThreshold) {
    if (instruments.empty()) {
        throw Error(ErrorKind::WeakInstrument, "at least one instrument is required");
    }
    const auto lu = linalg::checked_lu(moments.block(instruments, instruments), ErrorKind::SingularInstrumentBlock,
                                       "instrument covariance");
    const VectorXd s_zx = moments.block(instruments, {x}).col(0);
    const VectorXd s_zy = moments.block(instruments, {y}).col(0);
    const VectorXd proj = lu.solve(s_zx);
    const double denom = s_zx.dot(proj);
    if (!(denom >= threshold * threshold * moments.cov(x, x)) || denom == 0.0) {
        throw Error(ErrorKind::WeakInstrument, "instruments explain too little of " + x);
    }
    return {proj.dot(s_zy) / denom, instruments, denom};
}

} // namespace cyclicsem
