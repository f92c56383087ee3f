#pragma once

// Random stable cyclic models and plans shared by the unit and acceptance suites,
// plus oracles that avoid the library's own code paths.

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "cyclicsem/cyclicsem.hpp"

namespace family {

using namespace cyclicsem;

struct Case {
    StructuralModel model;
    VertexPartition partition;
    MomentSummary moments;
    EffectSummary effects;
    PlanBlocks blocks;
    std::vector<std::string> w;
    std::uint64_t seed = 0;
};

/// X = vertex 0, Y = vertex 1, then descendants U1.., then non-descendants T1..
/// X -> Y always, at least one descendant loads on X (a cycle through X),
/// T vertices feed X, S and later T vertices. rho(A) is scaled to at most 0.8.
inline StructuralModel random_model(std::mt19937_64& rng, int n_vertices) {
    std::uniform_int_distribution<int> split(0, n_vertices - 3);
    const int n_u = split(rng);
    const int n_t = n_vertices - 2 - n_u;
    std::vector<std::string> names{"X", "Y"};
    for (int i = 0; i < n_u; ++i) names.push_back("U" + std::to_string(i + 1));
    for (int i = 0; i < n_t; ++i) names.push_back("T" + std::to_string(i + 1));

    std::uniform_real_distribution<double> mag(0.3, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto coef = [&] { return (unit(rng) < 0.5 ? -1.0 : 1.0) * mag(rng); };

    std::vector<PathSpec> paths{{"X", "Y", coef()}};
    auto has = [&](const std::string& a, const std::string& b) {
        for (const auto& p : paths) {
            if (p.from == a && p.to == b) return true;
        }
        return false;
    };
    auto add = [&](const std::string& a, const std::string& b) {
        if (a != b && !has(a, b)) paths.push_back({a, b, coef()});
    };
    // every U is reached from X or an earlier descendant
    for (int i = 0; i < n_u; ++i) {
        std::uniform_int_distribution<int> pick(0, i + 1);
        add(names[static_cast<std::size_t>(pick(rng))], names[static_cast<std::size_t>(2 + i)]);
    }
    const int n_s = 1 + n_u;
    for (int i = 1; i <= n_s; ++i) {
        for (int k = 1; k <= n_s; ++k) {
            if (i != k && unit(rng) < 0.3) add(names[static_cast<std::size_t>(i)], names[static_cast<std::size_t>(k)]);
        }
    }
    std::uniform_int_distribution<int> back(1, n_s);
    add(names[static_cast<std::size_t>(back(rng))], "X");
    for (int i = 1; i <= n_s; ++i) {
        if (unit(rng) < 0.3) add(names[static_cast<std::size_t>(i)], "X");
    }
    for (int j = 0; j < n_t; ++j) {
        const auto& t = names[static_cast<std::size_t>(2 + n_u + j)];
        for (int k = 0; k <= n_s; ++k) {
            if (unit(rng) < 0.45) add(t, names[static_cast<std::size_t>(k)]);
        }
        for (int k = 0; k < n_t; ++k) {
            if (k != j && unit(rng) < 0.25) add(t, names[static_cast<std::size_t>(2 + n_u + k)]);
        }
    }

    std::map<std::string, double> intercepts;
    std::map<std::string, double> variances;
    std::uniform_real_distribution<double> mu(-1.0, 1.0);
    std::uniform_real_distribution<double> var(0.5, 1.5);
    for (const auto& v : names) {
        intercepts[v] = mu(rng);
        variances[v] = var(rng);
    }
    auto model = build_model(names, paths, intercepts, variances);
    const double rho = spectral_radius(model.coefficients);
    if (rho > 0.8) {
        model.coefficients *= 0.8 / rho;
    }
    return model;
}

/// Model number `index` of the seeded family with a random nonempty W when T allows it.
inline Case make_case(std::uint64_t base_seed, int index) {
    Case c;
    c.seed = base_seed * 1000003ULL + static_cast<std::uint64_t>(index);
    std::mt19937_64 rng(c.seed);
    std::uniform_int_distribution<int> size(3, 8);
    c.model = random_model(rng, size(rng));
    const auto all = c.model.variables();
    std::vector<std::string> t;
    for (const auto& v : all) {
        if (v.front() == 'T') t.push_back(v);
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (const auto& v : t) {
        if (unit(rng) < 0.6) c.w.push_back(v);
    }
    if (c.w.empty() && !t.empty()) c.w.push_back(t.front());
    c.partition = partition_vertices(c.model, "X", "Y", {}, c.w);
    c.moments = implied_moments(c.model);
    c.effects = total_effects(c.model, c.partition);
    c.blocks = plan_blocks(c.moments, c.effects, c.w);
    return c;
}

/// Random plan over F = {Y} and the case's W with |a gamma| <= 0.8 and a
/// convergent post-plan feedback block.
inline ControlPlan random_plan(const Case& c, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const double gamma = c.effects.gamma_yx();
    ControlPlan p;
    p.f = {"Y"};
    p.w = c.w;
    p.x = 2.0 * unit(rng);
    p.sigma_eps_star = 0.5 * std::abs(unit(rng));
    p.b = VectorXd::NullaryExpr(static_cast<Index>(c.w.size()), [&] { return unit(rng); });
    const double bound = gamma == 0.0 ? 1.0 : 0.8 / std::abs(gamma);
    double scale = std::min(bound, 2.0);
    for (int attempt = 0; attempt < 200; ++attempt) {
        p.a = VectorXd::Constant(1, scale * unit(rng));
        const auto post = check_stability(apply_plan(c.model, c.partition, p), c.partition);
        if (post.rho_11 < 0.95 && post.rho_tt < 0.95) {
            return p;
        }
        scale *= 0.9;
    }
    p.a = VectorXd::Zero(1);
    return p;
}

// ---------------------------------------------------------------------------
// Oracles

/// Equilibrium moments from the Neumann series G = sum_k A^k, which converges
/// for rho(A) < 1 and never factorises I - A: mean G c, covariance G D G'.
inline MomentSummary fixed_point_moments(const StructuralModel& model, int max_iter = 20000) {
    const Index n = model.size();
    const MatrixXd& a = model.coefficients;
    MatrixXd g = MatrixXd::Identity(n, n);
    MatrixXd power = MatrixXd::Identity(n, n);
    for (int it = 0; it < max_iter; ++it) {
        power = power * a;
        g += power;
        if (power.cwiseAbs().maxCoeff() < 1e-18) break;
    }
    MomentSummary m;
    m.variables = model.variables();
    m.mean = g * model.intercepts;
    const MatrixXd sigma = g * model.disturbance_variances.asDiagonal() * g.transpose();
    m.covariance = 0.5 * (sigma + sigma.transpose());
    return m;
}

/// Gaussian elimination with full pivoting, for oracles that must not share Eigen's LU.
inline MatrixXd gauss_solve(MatrixXd a, MatrixXd b) {
    const Index n = a.rows();
    std::vector<Index> colperm(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) colperm[static_cast<std::size_t>(i)] = i;
    for (Index k = 0; k < n; ++k) {
        Index pr = k, pc = k;
        for (Index i = k; i < n; ++i) {
            for (Index j = k; j < n; ++j) {
                if (std::abs(a(i, j)) > std::abs(a(pr, pc))) {
                    pr = i;
                    pc = j;
                }
            }
        }
        a.row(k).swap(a.row(pr));
        b.row(k).swap(b.row(pr));
        a.col(k).swap(a.col(pc));
        std::swap(colperm[static_cast<std::size_t>(k)], colperm[static_cast<std::size_t>(pc)]);
        for (Index i = k + 1; i < n; ++i) {
            const double f = a(i, k) / a(k, k);
            a.row(i) -= f * a.row(k);
            b.row(i) -= f * b.row(k);
        }
    }
    MatrixXd y(n, b.cols());
    for (Index i = n - 1; i >= 0; --i) {
        VectorXd r = b.row(i).transpose();
        for (Index j = i + 1; j < n; ++j) r -= a(i, j) * y.row(j).transpose();
        y.row(i) = (r / a(i, i)).transpose();
    }
    MatrixXd x(n, b.cols());
    for (Index k = 0; k < n; ++k) x.row(colperm[static_cast<std::size_t>(k)]) = y.row(k);
    return x;
}

/// E(Y) with X clamped at x: solve the surgically modified system directly.
inline double clamped_mean(const StructuralModel& model, const std::string& x_name, const std::string& y_name,
                           double x) {
    MatrixXd a = model.coefficients;
    VectorXd c = model.intercepts;
    const Index xi = model.index_of(x_name);
    a.row(xi).setZero();
    c(xi) = x;
    const Index n = model.size();
    const MatrixXd v = gauss_solve(MatrixXd::Identity(n, n) - a, c);
    return v(model.index_of(y_name), 0);
}

} // namespace family
