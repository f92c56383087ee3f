// Builds a small cyclic model in code, picks the variance-minimising plan for a
// fixed feedback gain and checks the closed forms against simulated draws.
#include <iostream>

#include "cyclicsem/cyclicsem.hpp"

using namespace cyclicsem;

int main() {
    const auto model = build_model({"X", "Y", "U", "W", "Z"},
                                   {{"X", "Y", 0.6}, {"Y", "U", 0.5}, {"U", "X", 0.4}, {"W", "X", 0.7},
                                    {"W", "Y", 0.3}, {"Z", "W", 0.8}},
                                   {{"X", 1.0}, {"Y", 0.5}});
    const auto partition = partition_vertices(model, "X", "Y", {}, {"W"});
    const auto stability = check_stability(model, partition);
    std::cout << "rho(A_tt) = " << stability.rho_tt << ", rho(A_11) = " << stability.rho_11 << '\n';

    const auto moments = implied_moments(model);
    const auto effects = total_effects(model, partition);
    std::cout << "gamma_yx = " << effects.gamma_yx() << '\n';

    const auto blocks = plan_blocks(moments, effects, {"W"});
    VectorXd a(1);
    a << -0.8;
    const auto plan = optimal_plan(effects, blocks, 2.0, {"Y"}, a);
    const auto effect = plan_variance(moments, effects, blocks, plan);
    std::cout << "b* = " << plan.b.transpose() << ", E(Y) = " << effect.mean_y << ", var(Y) = " << effect.var_y
              << " (observational var(Y) = " << moments.cov("Y", "Y") << ")\n";

    SimulationConfig config;
    config.n_draws = 200000;
    config.seed = 7;
    const auto sim = simulate_plan(model, partition, plan, config);
    const auto empirical = sample_moments(sim.data);
    std::cout << "simulated E(Y) = " << empirical.mean_of("Y") << ", var(Y) = " << empirical.cov("Y", "Y") << '\n';
    std::cout << "cov(Y, W) after the plan = " << empirical.cov("Y", "W") << '\n';
}
