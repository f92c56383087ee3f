#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "cyclicsem/error.hpp"
#include "cyclicsem/linalg.hpp"
#include "cyclicsem/model.hpp"
#include "cyclicsem/partition.hpp"

namespace cyclicsem {

inline constexpr double kDefaultStabilityTolerance = 1e-9;

/// Largest eigenvalue modulus of a square real matrix (dense QR iteration).
inline double spectral_radius(const MatrixXd& m) {
    if (m.rows() != m.cols()) {
        throw Error(ErrorKind::InvalidModel, "spectral radius needs a square matrix");
    }
    if (!m.allFinite()) {
        throw Error(ErrorKind::NonFiniteEntry, "matrix has non-finite entries");
    }
    if (m.rows() == 0) {
        return 0.0;
    }
    Eigen::EigenSolver<MatrixXd> solver(m, false);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorKind::NonFiniteEntry, "eigenvalue iteration did not converge");
    }
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

struct StabilityReport {
    double rho_tt = 0.0;
    double rho_11 = 0.0;
    bool stable = false;
    double margin = 0.0;
};

/// Since the T rows of A do not load on S or X, the characteristic polynomial
/// of A splits into those of A_tt and A11 = [[A_ss, A_sx], [A_xs, 0]]; the
/// model is stable exactly when both blocks are convergent.
inline StabilityReport check_stability(const StructuralModel& model, const VertexPartition& partition,
                                       double tolerance = kDefaultStabilityTolerance) {
    const auto t = partition.t();
    const auto sx = partition.sx();
    StabilityReport r;
    r.rho_tt = spectral_radius(linalg::block(model.coefficients, t, t));
    r.rho_11 = spectral_radius(linalg::block(model.coefficients, sx, sx));
    const double rho = std::max(r.rho_tt, r.rho_11);
    r.margin = 1.0 - rho;
    r.stable = rho < 1.0 - tolerance;
    return r;
}

/// Stability of the whole coefficient matrix, without a partition.
inline bool is_convergent(const MatrixXd& m, double tolerance = kDefaultStabilityTolerance) {
    return spectral_radius(m) < 1.0 - tolerance;
}

} // namespace cyclicsem
