#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "cyclicsem/control.hpp"
#include "cyclicsem/error.hpp"
#include "cyclicsem/estimation.hpp"
#include "cyclicsem/linalg.hpp"
#include "cyclicsem/model.hpp"
#include "cyclicsem/partition.hpp"
#include "cyclicsem/stability.hpp"

namespace cyclicsem {

/// SplitMix64 (Steele, Lea, Flood). Each simulated row gets its own stream keyed
/// by (seed, row index), so any split of the rows into chunks reproduces the
/// single-pass output exactly.
class SplitMix64 {
public:
    static constexpr std::string_view name = "splitmix64-row-keyed";

    explicit SplitMix64(std::uint64_t state) noexcept : state_(state) {}

    static std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    static SplitMix64 for_row(std::uint64_t seed, std::uint64_t row) noexcept {
        return SplitMix64(mix(mix(seed) + row * 0xD1B54A32D192ED03ULL));
    }

    std::uint64_t next() noexcept {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix(state_);
    }

    /// Uniform on the open interval (0, 1).
    double uniform() noexcept { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

enum class DisturbanceLaw { Gaussian, Uniform };

inline std::string_view to_string(DisturbanceLaw law) noexcept {
    return law == DisturbanceLaw::Gaussian ? "gaussian" : "uniform";
}

struct SimulationConfig {
    std::size_t n_draws = 1000;
    std::uint64_t seed = 0;
    DisturbanceLaw law = DisturbanceLaw::Gaussian;
    unsigned threads = 1;
};

/// Generated data plus what is needed to reproduce it.
struct Simulation {
    Dataset data;
    std::uint64_t seed = 0;
    std::string rng{SplitMix64::name};
    DisturbanceLaw law = DisturbanceLaw::Gaussian;
    double spectral_radius = 0.0;
    /// False when the equilibrium exists but fixed-point iteration would not reach it.
    bool model_stable = true;
};

namespace detail {

/// Standardised disturbances for one row: mean 0, variance 1.
inline void standard_draws(SplitMix64& rng, DisturbanceLaw law, Eigen::Ref<VectorXd> out) {
    const Index n = out.size();
    if (law == DisturbanceLaw::Uniform) {
        for (Index i = 0; i < n; ++i) {
            out(i) = std::sqrt(3.0) * (2.0 * rng.uniform() - 1.0);
        }
        return;
    }
    for (Index i = 0; i < n; i += 2) {
        const double radius = std::sqrt(-2.0 * std::log(rng.uniform()));
        const double angle = 2.0 * std::numbers::pi * rng.uniform();
        out(i) = radius * std::cos(angle);
        if (i + 1 < n) {
            out(i + 1) = radius * std::sin(angle);
        }
    }
}

inline void fill_rows(const Eigen::PartialPivLU<MatrixXd>& lu, const StructuralModel& model,
                      const SimulationConfig& config, Index first, Eigen::Ref<MatrixXd> out) {
    const VectorXd sd = model.disturbance_variances.cwiseSqrt();
    VectorXd z(model.size());
    VectorXd v(model.size());
    for (Index r = 0; r < out.rows(); ++r) {
        auto rng = SplitMix64::for_row(config.seed, static_cast<std::uint64_t>(first + r));
        standard_draws(rng, config.law, z);
        v = lu.solve(model.intercepts + sd.cwiseProduct(z));
        out.row(r) = v.transpose();
    }
}

} // namespace detail

/// Rows [first, first + count) of the equilibrium sample; draw_equilibrium is
/// this over all rows. Useful for chunked generation.
inline MatrixXd draw_equilibrium_rows(const StructuralModel& model, const SimulationConfig& config, Index first,
                                      Index count) {
    const Index n = model.size();
    const auto lu = linalg::checked_lu(MatrixXd::Identity(n, n) - model.coefficients, ErrorKind::SingularSystem, "I - A");
    MatrixXd out(count, n);
    detail::fill_rows(lu, model, config, first, out);
    return out;
}

/// Independent draws of V solving (I - A) V = intercepts + eps, one
/// factorisation reused for every row.
inline Simulation draw_equilibrium(const StructuralModel& model, const SimulationConfig& config) {
    if (config.n_draws < 1) {
        throw Error(ErrorKind::InvalidArgument, "n_draws must be at least 1");
    }
    if ((model.disturbance_variances.array() < 0.0).any()) {
        throw Error(ErrorKind::InvalidModel, "disturbance variances must be nonnegative");
    }
    const Index n = model.size();
    const auto lu = linalg::checked_lu(MatrixXd::Identity(n, n) - model.coefficients, ErrorKind::SingularSystem, "I - A");

    Simulation sim;
    sim.seed = config.seed;
    sim.law = config.law;
    sim.spectral_radius = spectral_radius(model.coefficients);
    sim.model_stable = sim.spectral_radius < 1.0 - kDefaultStabilityTolerance;
    sim.data.columns = model.variables();
    sim.data.rows.resize(static_cast<Index>(config.n_draws), n);

    const Index total = static_cast<Index>(config.n_draws);
    const Index workers = std::clamp<Index>(static_cast<Index>(config.threads), 1, total);
    if (workers == 1) {
        detail::fill_rows(lu, model, config, 0, sim.data.rows);
        return sim;
    }
    std::vector<std::jthread> pool;
    const Index chunk = (total + workers - 1) / workers;
    for (Index begin = 0; begin < total; begin += chunk) {
        const Index count = std::min(chunk, total - begin);
        pool.emplace_back([&, begin, count] {
            detail::fill_rows(lu, model, config, begin, sim.data.rows.middleRows(begin, count));
        });
    }
    pool.clear();
    return sim;
}

/// Repeated substitution v <- intercepts + A v + eps with eps held fixed.
/// Returns v0 followed by k iterates.
inline std::vector<VectorXd> iterate_equilibrium(const StructuralModel& model, const VectorXd& v0, const VectorXd& eps,
                                                 int k) {
    if (v0.size() != model.size() || eps.size() != model.size() || k < 0) {
        throw Error(ErrorKind::InvalidArgument, "start vector and disturbance must match the model size");
    }
    std::vector<VectorXd> trajectory;
    trajectory.reserve(static_cast<std::size_t>(k) + 1);
    trajectory.push_back(v0);
    const VectorXd drive = model.intercepts + eps;
    for (int step = 0; step < k; ++step) {
        trajectory.push_back(drive + model.coefficients * trajectory.back());
    }
    return trajectory;
}

/// Equilibrium sample of the system after the plan replaces X's equation.
/// Plans with |a'gamma_fx| >= 1 are refused unless `allow_unstable` is set.
inline Simulation simulate_plan(const StructuralModel& model, const VertexPartition& partition, const ControlPlan& plan,
                                const SimulationConfig& config, bool allow_unstable = false) {
    if (!allow_unstable) {
        require_stable_plan(total_effects(model, partition), plan, kDefaultStabilityTolerance);
    }
    return draw_equilibrium(apply_plan(model, partition, plan), config);
}

} // namespace cyclicsem
