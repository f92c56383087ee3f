#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cyclicsem/error.hpp"

namespace cyclicsem {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using IndexList = std::vector<Index>;

/// Matrices whose estimated condition number exceeds this are treated as singular.
inline constexpr double kConditionLimit = 1e12;

namespace linalg {

inline MatrixXd block(const MatrixXd& m, const IndexList& rows, const IndexList& cols) {
    return m(rows, cols);
}

inline VectorXd slice(const VectorXd& v, const IndexList& idx) {
    return v(idx);
}

inline MatrixXd symmetrized(const MatrixXd& m) {
    return 0.5 * (m + m.transpose());
}

inline bool all_finite(const MatrixXd& m) {
    return m.allFinite();
}

/// LU with partial pivoting that refuses numerically singular input.
inline Eigen::PartialPivLU<MatrixXd> checked_lu(const MatrixXd& m, ErrorKind kind, const std::string& what) {
    if (m.rows() != m.cols()) {
        throw Error(kind, what + " is not square");
    }
    if (!m.allFinite()) {
        throw Error(ErrorKind::NonFiniteEntry, what + " has non-finite entries");
    }
    Eigen::PartialPivLU<MatrixXd> lu(m);
    if (m.rows() > 0) {
        const double rcond = lu.rcond();
        if (!(rcond >= 1.0 / kConditionLimit)) {
            throw Error(kind, what + " is numerically singular (reciprocal condition " + std::to_string(rcond) + ")");
        }
    }
    return lu;
}

inline double min_symmetric_eigenvalue(const MatrixXd& m) {
    if (m.rows() == 0) {
        return 0.0;
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> solver(symmetrized(m), Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

} // namespace linalg
} // namespace cyclicsem
