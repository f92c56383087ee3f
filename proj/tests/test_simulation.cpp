#include "catch_amalgamated.hpp"

#include "cyclicsem/cyclicsem.hpp"
#include "support/family.hpp"

using namespace cyclicsem;
using Catch::Approx;

TEST_CASE("draws are identical for any thread count and chunking") {
    const auto c = family::make_case(5, 2);
    SimulationConfig cfg;
    cfg.n_draws = 5001;
    cfg.seed = 42;
    const auto one = draw_equilibrium(c.model, cfg);
    cfg.threads = 7;
    const auto many = draw_equilibrium(c.model, cfg);
    CHECK(one.data.rows == many.data.rows);
    const MatrixXd head = draw_equilibrium_rows(c.model, cfg, 0, 1234);
    const MatrixXd tail = draw_equilibrium_rows(c.model, cfg, 1234, 5001 - 1234);
    CHECK(head == one.data.rows.topRows(1234));
    CHECK(tail == one.data.rows.bottomRows(5001 - 1234));
    cfg.seed = 43;
    CHECK(draw_equilibrium(c.model, cfg).data.rows != one.data.rows);
    CHECK(one.rng == "splitmix64-row-keyed");
    CHECK(one.data.columns == c.model.variables());
}

TEST_CASE("each draw solves the structural equations for its own disturbance") {
    const auto c = family::make_case(5, 4);
    SimulationConfig cfg;
    cfg.n_draws = 50;
    cfg.seed = 3;
    const auto sim = draw_equilibrium(c.model, cfg);
    const Index n = c.model.size();
    for (Index r = 0; r < sim.data.n(); ++r) {
        auto rng = SplitMix64::for_row(cfg.seed, static_cast<std::uint64_t>(r));
        VectorXd z(n);
        detail::standard_draws(rng, cfg.law, z);
        const VectorXd eps = c.model.disturbance_variances.cwiseSqrt().cwiseProduct(z);
        const VectorXd v = sim.data.rows.row(r).transpose();
        CHECK((c.model.intercepts + c.model.coefficients * v + eps - v).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("empirical moments match implied moments for both disturbance laws") {
    for (auto law : {DisturbanceLaw::Gaussian, DisturbanceLaw::Uniform}) {
        const auto c = family::make_case(17, 1);
        SimulationConfig cfg;
        cfg.n_draws = 400000;
        cfg.seed = 9;
        cfg.law = law;
        cfg.threads = 4;
        const auto m = sample_moments(draw_equilibrium(c.model, cfg).data);
        const auto& truth = c.moments;
        const double n = static_cast<double>(cfg.n_draws);
        for (Index i = 0; i < truth.mean.size(); ++i) {
            CHECK(std::abs(m.mean(i) - truth.mean(i)) < 5.0 * std::sqrt(truth.covariance(i, i) / n));
            for (Index k = 0; k < truth.mean.size(); ++k) {
                const double se = std::sqrt((truth.covariance(i, i) * truth.covariance(k, k) +
                                             truth.covariance(i, k) * truth.covariance(i, k)) / n);
                CHECK(std::abs(m.covariance(i, k) - truth.covariance(i, k)) < 6.0 * se);
            }
        }
    }
}

TEST_CASE("iterate_equilibrium follows the partial-sum formula") {
    const auto c = family::make_case(23, 0);
    const Index n = c.model.size();
    const VectorXd eps = VectorXd::LinSpaced(n, -1.0, 1.0);
    const VectorXd v0 = VectorXd::Ones(n);
    const auto path = iterate_equilibrium(c.model, v0, eps, 20);
    REQUIRE(path.size() == 21);
    MatrixXd ak = MatrixXd::Identity(n, n);
    VectorXd acc = VectorXd::Zero(n);
    for (int k = 0; k <= 20; ++k) {
        CHECK((path[static_cast<std::size_t>(k)] - (ak * v0 + acc)).cwiseAbs().maxCoeff() < 1e-10);
        acc += ak * (c.model.intercepts + eps);
        ak = ak * c.model.coefficients;
    }
    CHECK_THROWS_AS(iterate_equilibrium(c.model, VectorXd::Zero(n + 1), eps, 3), Error);
}

TEST_CASE("simulate_plan refuses unstable plans unless asked") {
    const auto c = family::make_case(23, 1);
    ControlPlan plan;
    plan.f = {"Y"};
    plan.a = VectorXd::Constant(1, 2.0 / c.effects.gamma_yx());
    SimulationConfig cfg;
    cfg.n_draws = 10;
    CHECK_THROWS_AS(simulate_plan(c.model, c.partition, plan, cfg), Error);
    const auto sim = simulate_plan(c.model, c.partition, plan, cfg, true);
    CHECK(sim.data.n() == 10);
}
