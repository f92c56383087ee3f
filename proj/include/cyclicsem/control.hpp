#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cyclicsem/effects.hpp"
#include "cyclicsem/error.hpp"
#include "cyclicsem/linalg.hpp"
#include "cyclicsem/model.hpp"
#include "cyclicsem/partition.hpp"
#include "cyclicsem/stability.hpp"

namespace cyclicsem {

/// The planning formula X = x + a'F + b'W + eps*, with var(eps*) = sigma_eps_star.
/// Gains are keyed by variable name; `f` and `a` (and `w` and `b`) run in parallel.
struct ControlPlan {
    double x = 0.0;
    std::vector<std::string> f;
    VectorXd a;
    std::vector<std::string> w;
    VectorXd b;
    double sigma_eps_star = 0.0;

    /// Nonrecursive plans feed some descendant of the treatment back into it.
    [[nodiscard]] bool nonrecursive() const { return (a.array() != 0.0).any(); }
    [[nodiscard]] bool perfect() const { return sigma_eps_star == 0.0; }

    static ControlPlan unconditional(double x, double sigma_eps_star = 0.0) {
        ControlPlan p;
        p.x = x;
        p.sigma_eps_star = sigma_eps_star;
        return p;
    }
};

namespace detail {

inline void check_plan_shape(const ControlPlan& plan) {
    if (static_cast<Index>(plan.f.size()) != plan.a.size() || static_cast<Index>(plan.w.size()) != plan.b.size()) {
        throw Error(ErrorKind::ControlSetMismatch, "plan gains must match the number of control variables");
    }
    if (!(plan.sigma_eps_star >= 0.0) || !std::isfinite(plan.x) || !plan.a.allFinite() || !plan.b.allFinite()) {
        throw Error(ErrorKind::ControlSetMismatch, "plan needs finite gains and a nonnegative disturbance variance");
    }
}

/// Scatters named gains onto an ordered name list; names outside it are rejected.
inline VectorXd align_gains(const std::vector<std::string>& order, const std::vector<std::string>& names,
                            const VectorXd& gains, const char* role) {
    VectorXd out = VectorXd::Zero(static_cast<Index>(order.size()));
    for (std::size_t i = 0; i < names.size(); ++i) {
        const auto it = std::find(order.begin(), order.end(), names[i]);
        if (it == order.end()) {
            throw Error(ErrorKind::ControlSetMismatch, names[i] + " is not an admissible " + role + " variable");
        }
        out(it - order.begin()) = gains(static_cast<Index>(i));
    }
    return out;
}

} // namespace detail

/// Feedback gains a laid out over the effect summary's F.
inline VectorXd feedback_gains(const EffectSummary& effects, const ControlPlan& plan) {
    detail::check_plan_shape(plan);
    return detail::align_gains(effects.f_names(), plan.f, plan.a, "feedback");
}

struct PlanStability {
    bool stable = false;
    double loop_gain = 0.0;  // a' gamma_fx
    double margin = 0.0;     // 1 - |a' gamma_fx|
};

/// The planned system keeps an equilibrium only while |a' gamma_fx| < 1.
inline PlanStability plan_is_stable(const EffectSummary& effects, const ControlPlan& plan,
                                    double tolerance = kDefaultStabilityTolerance) {
    const VectorXd a = feedback_gains(effects, plan);
    PlanStability s;
    s.loop_gain = a.dot(effects.gamma_fx());
    s.margin = 1.0 - std::abs(s.loop_gain);
    s.stable = std::abs(s.loop_gain) < 1.0 - tolerance;
    return s;
}

inline void require_stable_plan(const EffectSummary& effects, const ControlPlan& plan, double tolerance) {
    const auto s = plan_is_stable(effects, plan, tolerance);
    if (!s.stable) {
        throw Error(ErrorKind::UnstablePlan, "plan violates |a'gamma_fx| < 1 (a'gamma_fx = " +
                                                 std::to_string(s.loop_gain) + ")");
    }
}

/// Replaces the treatment's structural equation by the planning formula.
inline StructuralModel apply_plan(const StructuralModel& model, const VertexPartition& partition,
                                  const ControlPlan& plan) {
    detail::check_plan_shape(plan);
    const auto f_names = names_of(model, partition.f);
    const auto w_names = names_of(model, partition.w);
    const VectorXd a = detail::align_gains(f_names, plan.f, plan.a, "feedback");
    const VectorXd b = detail::align_gains(w_names, plan.w, plan.b, "covariate");

    const Index x = partition.treatment;
    StructuralModel out = model;
    auto& edges = out.diagram.edges;
    edges.erase(std::remove_if(edges.begin(), edges.end(), [x](const Edge& e) { return e.to == x; }), edges.end());
    out.coefficients.row(x).setZero();
    auto wire = [&](const IndexList& parents, const VectorXd& gains) {
        for (std::size_t i = 0; i < parents.size(); ++i) {
            const double g = gains(static_cast<Index>(i));
            if (g != 0.0) {
                out.coefficients(x, parents[i]) = g;
                edges.push_back({parents[i], x});
            }
        }
    };
    wire(partition.f, a);
    wire(partition.w, b);
    out.intercepts(x) = plan.x;
    out.disturbance_variances(x) = plan.sigma_eps_star;
    return out;
}

/// Moment blocks over X, F and W that the closed forms consume.
struct PlanBlocks {
    std::string treatment;
    std::vector<std::string> f;
    std::vector<std::string> w;
    double sigma_xx = 0.0;
    MatrixXd sigma_ff;
    MatrixXd sigma_ww;
    VectorXd b_fx;  // regression of F on X
    MatrixXd b_fw;  // regression of F on W
    VectorXd b_xw;  // regression of X on W
};

inline PlanBlocks plan_blocks(const MomentSummary& moments, const EffectSummary& effects,
                              const std::vector<std::string>& w) {
    PlanBlocks pb;
    pb.treatment = effects.treatment;
    pb.f = effects.f_names();
    pb.w = w;
    const std::vector<std::string> x{effects.treatment};
    for (const auto& name : w) {
        if (name == effects.treatment ||
            std::find(effects.s_names.begin(), effects.s_names.end(), name) != effects.s_names.end()) {
            throw Error(ErrorKind::ControlSetMismatch, "covariate " + name + " is not a non-descendant of the treatment");
        }
    }
    pb.sigma_xx = moments.cov(effects.treatment, effects.treatment);
    pb.sigma_ff = moments.block(pb.f, pb.f);
    pb.sigma_ww = moments.block(w, w);
    pb.b_fx = regression_blocks(moments, pb.f, x).coefficients.col(0);
    pb.b_fw = regression_blocks(moments, pb.f, w).coefficients;
    pb.b_xw = regression_blocks(moments, x, w).coefficients.row(0).transpose();
    return pb;
}

/// Covariate gains b* solving gamma b' + B_fw - gamma B_xw = 0 in the
/// projection sense, with the leftover of that matrix equation.
struct OptimalCovariateGains {
    std::vector<std::string> w;
    VectorXd b;
    MatrixXd residual;
};

inline OptimalCovariateGains optimal_b(const EffectSummary& effects, const PlanBlocks& blocks) {
    const VectorXd gamma = effects.gamma_fx();
    OptimalCovariateGains out;
    out.w = blocks.w;
    if (blocks.w.empty()) {
        out.b = VectorXd::Zero(0);
        out.residual = MatrixXd::Zero(gamma.size(), 0);
        return out;
    }
    const double gg = gamma.squaredNorm();
    if (gg == 0.0) {
        throw Error(ErrorKind::ZeroTotalEffect, "total effect of the treatment on F is zero");
    }
    const MatrixXd target = gamma * blocks.b_xw.transpose() - blocks.b_fw;  // n_f x n_w
    out.b = (gamma.transpose() * target).transpose() / gg;
    out.residual = gamma * out.b.transpose() + blocks.b_fw - gamma * blocks.b_xw.transpose();
    return out;
}

/// The optimal plan for given set-point and feedback gains.
inline ControlPlan optimal_plan(const EffectSummary& effects, const PlanBlocks& blocks, double x,
                                std::vector<std::string> f, VectorXd a, double sigma_eps_star = 0.0) {
    const auto gains = optimal_b(effects, blocks);
    ControlPlan p;
    p.x = x;
    p.f = std::move(f);
    p.a = std::move(a);
    p.w = gains.w;
    p.b = gains.b;
    p.sigma_eps_star = sigma_eps_star;
    return p;
}

/// E(Y | set(X = x + a'F + b'W + eps*)) for arbitrary b.
inline double plan_mean(const MomentSummary& moments, const EffectSummary& effects, const ControlPlan& plan,
                        double tolerance = kDefaultStabilityTolerance) {
    require_stable_plan(effects, plan, tolerance);
    const VectorXd a = feedback_gains(effects, plan);
    const VectorXd gamma = effects.gamma_fx();
    const double gamma_y = effects.gamma_yx();
    const double shift = plan.x - moments.mean_of(effects.treatment) + plan.b.dot(moments.means(plan.w));
    const VectorXd mu_f = moments.means(effects.f_names());
    const double loop = a.dot(gamma);
    return gamma_y * shift + moments.mean_of(effects.response()) +
           gamma_y / (1.0 - loop) * a.dot(mu_f + gamma * shift);
}

struct PlanEffect {
    double mean_y = 0.0;
    MatrixXd var_f;
    double var_y = 0.0;
    bool stable = false;
    double feedback_factor = 1.0;  // 1 / (1 - a' gamma_fx)
};

/// var(F | set(X = x + a'F + b'W + eps*)) = D1 M D1' with D1 = I + gamma a'/(1 - a'gamma) and
///   M = Sigma_ff + gamma gamma' s* + (gamma - B_fx)(gamma - B_fx)' s_xx - B_fx B_fx' s_xx
///       + G Sigma_ww G' - R Sigma_ww R',
/// where R = B_fw - gamma B_xw and G = gamma b' + R. Only F, X and W enter.
inline PlanEffect plan_variance(const MomentSummary& moments, const EffectSummary& effects, const PlanBlocks& blocks,
                                const ControlPlan& plan, double tolerance = kDefaultStabilityTolerance) {
    require_stable_plan(effects, plan, tolerance);
    if (blocks.f != effects.f_names() || blocks.treatment != effects.treatment) {
        throw Error(ErrorKind::ControlSetMismatch, "moment blocks were built for a different treatment or F");
    }
    const VectorXd a = feedback_gains(effects, plan);
    const VectorXd b = detail::align_gains(blocks.w, plan.w, plan.b, "covariate");
    const VectorXd gamma = effects.gamma_fx();
    const Index nf = gamma.size();
    const double loop = a.dot(gamma);

    const VectorXd dev = gamma - blocks.b_fx;
    const MatrixXd r = blocks.b_fw - gamma * blocks.b_xw.transpose();
    const MatrixXd g = gamma * b.transpose() + r;
    MatrixXd m = blocks.sigma_ff + gamma * gamma.transpose() * plan.sigma_eps_star +
                 dev * dev.transpose() * blocks.sigma_xx - blocks.b_fx * blocks.b_fx.transpose() * blocks.sigma_xx;
    if (blocks.w.size() > 0) {
        m += g * blocks.sigma_ww * g.transpose() - r * blocks.sigma_ww * r.transpose();
    }
    const MatrixXd d1 = MatrixXd::Identity(nf, nf) + gamma * a.transpose() / (1.0 - loop);

    PlanEffect out;
    out.mean_y = plan_mean(moments, effects, plan, tolerance);
    out.var_f = linalg::symmetrized(d1 * m * d1.transpose());
    out.var_y = out.var_f(0, 0);
    out.stable = true;
    out.feedback_factor = 1.0 / (1.0 - loop);
    return out;
}

enum class CovariateOrdering { Equivalent, FirstNoWorse, SecondNoWorse, Incomparable };

struct CovariateComparison {
    MatrixXd delta;
    double min_eigenvalue = 0.0;
    double max_eigenvalue = 0.0;
    bool first_no_worse = false;
    bool second_no_worse = false;

    [[nodiscard]] CovariateOrdering ordering() const {
        if (first_no_worse && second_no_worse) return CovariateOrdering::Equivalent;
        if (first_no_worse) return CovariateOrdering::FirstNoWorse;
        if (second_no_worse) return CovariateOrdering::SecondNoWorse;
        return CovariateOrdering::Incomparable;
    }
};

inline constexpr double kPsdTolerance = 1e-9;

namespace detail {

inline MatrixXd covariate_gain_term(const MomentSummary& moments, const EffectSummary& effects,
                                    const std::vector<std::string>& w) {
    const Index nf = effects.n_f;
    if (w.empty()) {
        return MatrixXd::Zero(nf, nf);
    }
    const auto pb = plan_blocks(moments, effects, w);
    const MatrixXd r = pb.b_fw - effects.gamma_fx() * pb.b_xw.transpose();
    return r * pb.sigma_ww * r.transpose();
}

} // namespace detail

/// Compares the optimal plans built on covariate sets W1 and W2 for the same a:
/// W1 is no worse when Delta = R1 S11 R1' - R2 S22 R2' is positive semidefinite.
inline CovariateComparison covariate_compare(const MomentSummary& moments, const EffectSummary& effects,
                                             const std::vector<std::string>& w1, const std::vector<std::string>& w2,
                                             double psd_tolerance = kPsdTolerance) {
    CovariateComparison c;
    c.delta = linalg::symmetrized(detail::covariate_gain_term(moments, effects, w1) -
                                  detail::covariate_gain_term(moments, effects, w2));
    Eigen::SelfAdjointEigenSolver<MatrixXd> solver(c.delta, Eigen::EigenvaluesOnly);
    c.min_eigenvalue = solver.eigenvalues().minCoeff();
    c.max_eigenvalue = solver.eigenvalues().maxCoeff();
    c.first_no_worse = c.min_eigenvalue >= -psd_tolerance;
    c.second_no_worse = -c.max_eigenvalue >= -psd_tolerance;
    return c;
}

} // namespace cyclicsem
