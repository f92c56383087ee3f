#include "catch_amalgamated.hpp"

#include "cyclicsem/cyclicsem.hpp"

using namespace cyclicsem;
using Catch::Approx;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::InvalidArgument;
}

/// X <-> Y loop with instruments Z1, Z2 on X only and a confounding path through U.
StructuralModel instrumented() {
    return build_model({"X", "Y", "Z1", "Z2", "Z3"},
                       {{"X", "Y", 0.7}, {"Y", "X", -0.3}, {"Z1", "X", 0.8}, {"Z2", "X", -0.5}, {"Z3", "Y", 0.6}},
                       {}, {{"X", 1.0}, {"Y", 2.0}});
}

} // namespace

TEST_CASE("sample moments use the n - 1 divisor") {
    Dataset d;
    d.columns = {"a", "b"};
    d.rows.resize(4, 2);
    d.rows << 1, 2, 2, 4, 3, 5, 6, 9;
    const auto m = sample_moments(d);
    CHECK(m.mean_of("a") == 3.0);
    CHECK(m.cov("a", "a") == Approx(14.0 / 3.0));
    CHECK(m.cov("a", "b") == Approx((-2 * -3 + -1 * -1 + 0 * 0 + 3 * 4) / 3.0));
    CHECK(m.n == 4u);
    CHECK(m.source == MomentSource::Sample);

    Dataset one = d;
    one.rows = d.rows.topRows(1);
    CHECK(kind_of([&] { sample_moments(one); }) == ErrorKind::TooFewRows);
    d.rows(0, 0) = std::nan("");
    CHECK(kind_of([&] { sample_moments(d); }) == ErrorKind::NonFiniteEntry);
}

TEST_CASE("IV and 2SLS recover the total effect from population moments") {
    const auto model = instrumented();
    const auto m = implied_moments(model);
    const double gamma = total_effects(model, partition_vertices(model, "X", "Y")).gamma_yx();
    CHECK(iv_estimate(m, "X", "Y", "Z1").gamma_hat == Approx(gamma).epsilon(1e-12));
    CHECK(iv_estimate(m, "X", "Y", "Z2").gamma_hat == Approx(gamma).epsilon(1e-12));
    CHECK(tsls_estimate(m, "X", "Y", {"Z1", "Z2"}).gamma_hat == Approx(gamma).epsilon(1e-12));
    // a single-instrument 2SLS is the IV ratio
    CHECK(tsls_estimate(m, "X", "Y", {"Z1"}).gamma_hat == Approx(iv_estimate(m, "X", "Y", "Z1").gamma_hat));
}

TEST_CASE("IV recovers the total effect from simulated data") {
    const auto model = instrumented();
    const double gamma = total_effects(model, partition_vertices(model, "X", "Y")).gamma_yx();
    SimulationConfig cfg;
    cfg.n_draws = 200000;
    cfg.seed = 4;
    cfg.threads = 4;
    const auto m = sample_moments(draw_equilibrium(model, cfg).data);
    const auto est = tsls_estimate(m, "X", "Y", {"Z1", "Z2"});
    CHECK(est.gamma_hat == Approx(gamma).margin(0.02));
    CHECK(est.denominator > 0.0);
}

TEST_CASE("weak and collinear instruments are refused") {
    const auto model = instrumented();
    const auto m = implied_moments(model);
    // Z3 loads only on Y, so it carries X's variation only through the loop
    CHECK_NOTHROW(iv_estimate(m, "X", "Y", "Z3"));
    MomentSummary flat = m;
    const Index z = flat.index_of("Z1"), x = flat.index_of("X");
    flat.covariance(z, x) = flat.covariance(x, z) = 0.0;
    CHECK(kind_of([&] { iv_estimate(flat, "X", "Y", "Z1"); }) == ErrorKind::WeakInstrument);

    MomentSummary dup;
    dup.variables = {"X", "Y", "A", "B"};
    dup.mean = VectorXd::Zero(4);
    dup.covariance = MatrixXd::Identity(4, 4);
    dup.covariance.bottomRightCorner(2, 2).setOnes();
    CHECK(kind_of([&] { tsls_estimate(dup, "X", "Y", {"A", "B"}); }) == ErrorKind::SingularInstrumentBlock);
    CHECK(kind_of([&] { tsls_estimate(dup, "X", "Y", {}); }) == ErrorKind::WeakInstrument);
}
