#include <complex>
#include <random>

#include "catch_amalgamated.hpp"

#include "cyclicsem/cyclicsem.hpp"
#include "support/family.hpp"

using namespace cyclicsem;
using Catch::Approx;

namespace {

/// Largest root modulus of the characteristic cubic of a 3x3 matrix, by Cardano.
double cubic_radius(const MatrixXd& m) {
    const double tr = m.trace();
    const double minors = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0) + m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0) +
                          m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1);
    const double det = m.determinant();
    // lambda^3 + b lambda^2 + c lambda + d
    const double b = -tr, c = minors, d = -det;
    const double p = c - b * b / 3.0;
    const double q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    using C = std::complex<double>;
    const C disc = std::sqrt(C(q * q / 4.0 + p * p * p / 27.0));
    C u = std::pow(C(-q / 2.0) + disc, 1.0 / 3.0);
    const C omega(-0.5, std::sqrt(3.0) / 2.0);
    double best = 0.0;
    for (int k = 0; k < 3; ++k) {
        const C v = std::abs(u) < 1e-300 ? C(0.0) : -p / (3.0 * u);
        best = std::max(best, std::abs(u + v - b / 3.0));
        u *= omega;
    }
    return best;
}

} // namespace

TEST_CASE("spectral radius agrees with the cubic-root oracle") {
    MatrixXd m(3, 3);
    m << 0.0, 0.3, 0.0, 0.2, 0.0, 0.4, 0.1, 0.0, 0.0;
    CHECK(spectral_radius(m) == Approx(cubic_radius(m)).margin(1e-12));
    CHECK(is_convergent(m));
    CHECK(spectral_radius(MatrixXd(0, 0)) == 0.0);

    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    for (int i = 0; i < 50; ++i) {
        const MatrixXd r = MatrixXd::NullaryExpr(3, 3, [&] { return g(rng); });
        CHECK(spectral_radius(r) == Approx(cubic_radius(r)).epsilon(1e-9));
    }
    MatrixXd bad = m;
    bad(0, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(spectral_radius(bad), Error);
}

TEST_CASE("convergence is strict at the unit circle") {
    MatrixXd rot(2, 2);
    rot << 0.0, -1.0, 1.0, 0.0;
    CHECK_FALSE(is_convergent(rot));
    CHECK(spectral_radius(rot) == Approx(1.0));
    CHECK(is_convergent(rot * 0.999));
}

TEST_CASE("characteristic polynomial factorises over the T and feedback blocks") {
    for (int i = 0; i < 20; ++i) {
        const auto c = family::make_case(77, i);
        const auto st = check_stability(c.model, c.partition);
        // T rows are zero on S and X, so the spectrum of A is the union of both blocks
        CHECK(std::max(st.rho_tt, st.rho_11) == Approx(spectral_radius(c.model.coefficients)).margin(1e-10));
        CHECK(st.stable);
        CHECK(st.margin == Approx(1.0 - std::max(st.rho_tt, st.rho_11)));
    }
}

TEST_CASE("unstable feedback block is reported") {
    const auto m = build_model({"X", "Y", "W"}, {{"X", "Y", 2.0}, {"Y", "X", 0.9}, {"W", "X", 1.0}});
    const auto st = check_stability(m, partition_vertices(m, "X", "Y"));
    CHECK_FALSE(st.stable);
    CHECK(st.rho_11 == Approx(std::sqrt(1.8)));
    CHECK(st.rho_tt == 0.0);
    CHECK_THROWS_AS(implied_moments(m), Error);
}

TEST_CASE("Neumann partial sums converge to the inverse") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    for (int rep = 0; rep < 10; ++rep) {
        const Index n = 2 + rep % 7;
        MatrixXd a = MatrixXd::NullaryExpr(n, n, [&] { return g(rng); });
        a *= 0.5 / spectral_radius(a);
        MatrixXd sum = MatrixXd::Identity(n, n), power = MatrixXd::Identity(n, n);
        for (int k = 0; k < 200; ++k) {
            power = power * a;
            sum += power;
        }
        const MatrixXd inv = family::gauss_solve(MatrixXd::Identity(n, n) - a, MatrixXd::Identity(n, n));
        CHECK((sum - inv).cwiseAbs().maxCoeff() < 1e-6);
    }
}
