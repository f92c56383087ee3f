#include <random>

#include "catch_amalgamated.hpp"

#include "cyclicsem/cyclicsem.hpp"

using namespace cyclicsem;
using Catch::Matchers::ContainsSubstring;

namespace {

StructuralModel loop_model() {
    return build_model({"X", "Y", "U", "W", "Z"},
                       {{"X", "Y", 0.5}, {"Y", "U", 0.4}, {"U", "X", 0.3}, {"W", "X", 0.6}, {"W", "Y", 0.2},
                        {"Z", "W", 0.7}});
}

/// Transitive closure by Floyd-Warshall on the adjacency matrix.
std::vector<std::vector<bool>> closure(const PathDiagram& d) {
    const auto n = static_cast<std::size_t>(d.size());
    std::vector<std::vector<bool>> r(n, std::vector<bool>(n, false));
    for (const auto& e : d.edges) r[static_cast<std::size_t>(e.from)][static_cast<std::size_t>(e.to)] = true;
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (r[i][k] && r[k][j]) r[i][j] = true;
    return r;
}

} // namespace

TEST_CASE("build_model places coefficients by child row and parent column") {
    const auto m = loop_model();
    CHECK(m.size() == 5);
    CHECK(m.coefficients(m.index_of("Y"), m.index_of("X")) == 0.5);
    CHECK(m.coefficient("U", "X") == 0.3);
    CHECK(m.disturbance_variances.isOnes());
    CHECK(m.intercepts.isZero());
    CHECK(validate_model(m).valid());
    CHECK(m.diagram.has_cycle());
    CHECK_THROWS_AS(build_model({"A", "A"}, {}), Error);
    CHECK_THROWS_AS(m.index_of("nope"), Error);
}

TEST_CASE("validation reports each structural defect") {
    auto self = build_model({"A", "B"}, {{"A", "A", 0.2}, {"A", "B", 1.0}});
    const auto r1 = validate_model(self);
    REQUIRE(r1.has(ViolationKind::SelfLoop));
    CHECK_THAT(r1.violations.front().message, ContainsSubstring("self-loop at vertex A"));

    CHECK(validate_model(build_model({"A", "B"}, {{"A", "B", 0.0}})).has(ViolationKind::ZeroPathCoefficient));
    CHECK(validate_model(build_model({"A", "B"}, {{"A", "B", 1.0}, {"A", "B", 1.0}})).has(ViolationKind::DuplicateEdge));
    CHECK(validate_model(build_model({"A", "B"}, {}, {}, {{"B", -1.0}})).has(ViolationKind::NegativeVariance));

    auto stray = build_model({"A", "B"}, {});
    stray.coefficients(1, 0) = 0.4;
    CHECK(validate_model(stray).has(ViolationKind::CoefficientWithoutEdge));
    stray.intercepts(0) = std::nan("");
    CHECK(validate_model(stray).has(ViolationKind::NonFinite));
    stray.intercepts.resize(3);
    CHECK(validate_model(stray).has(ViolationKind::DimensionMismatch));
}

TEST_CASE("reachability matches a Floyd-Warshall closure") {
    std::mt19937_64 rng(11);
    std::bernoulli_distribution edge(0.15);
    std::vector<std::string> names;
    for (int i = 0; i < 8; ++i) names.push_back("V" + std::to_string(i));
    std::vector<PathSpec> paths{{"V0", "V1", 1.0}, {"V1", "V2", 1.0}, {"V2", "V0", 1.0}};
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j)
            if (i != j && i > 2 && edge(rng)) paths.push_back({names[i], names[j], 0.5});
    const auto m = build_model(names, paths);
    const auto oracle = closure(m.diagram);
    for (Index s = 0; s < 8; ++s) {
        const auto got = m.diagram.reachable_from(s);
        for (std::size_t v = 0; v < 8; ++v) {
            CHECK(got[v] == oracle[static_cast<std::size_t>(s)][v]);
        }
    }
    CHECK(m.diagram.has_cycle());
    CHECK_FALSE(build_model({"A", "B"}, {{"A", "B", 1.0}}).diagram.has_cycle());
}

TEST_CASE("partition orders S as F then U and T as W then Z") {
    const auto m = loop_model();
    const auto p = partition_vertices(m, "X", "Y", {"U"}, {"W"});
    CHECK(names_of(m, p.f) == std::vector<std::string>{"Y", "U"});
    CHECK(p.u.empty());
    CHECK(names_of(m, p.w) == std::vector<std::string>{"W"});
    CHECK(names_of(m, p.z) == std::vector<std::string>{"Z"});
    CHECK(p.order().size() == 5);
    CHECK(validate_model(m, p).valid());

    const auto q = partition_vertices(m, "X", "Y");
    CHECK(names_of(m, q.u) == std::vector<std::string>{"U"});
    CHECK(names_of(m, q.z) == std::vector<std::string>{"W", "Z"});
}

TEST_CASE("partition rejects inadmissible roles") {
    const auto m = loop_model();
    auto kind_of = [](auto&& f) {
        try {
            f();
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::InvalidArgument;
    };
    CHECK(kind_of([&] { partition_vertices(m, "X", "W"); }) == ErrorKind::ResponseNotDescendant);
    CHECK(kind_of([&] { partition_vertices(m, "X", "X"); }) == ErrorKind::ControlSetMismatch);
    CHECK(kind_of([&] { partition_vertices(m, "X", "Y", {"W"}); }) == ErrorKind::ControlSetMismatch);
    CHECK(kind_of([&] { partition_vertices(m, "X", "Y", {}, {"U"}); }) == ErrorKind::ControlSetMismatch);
}

TEST_CASE("a declared partition is checked against the graph") {
    const auto m = loop_model();
    auto p = partition_vertices(m, "X", "Y", {}, {"W"});
    std::swap(p.u, p.z);
    const auto r = validate_model(m, p);
    CHECK(r.has(ViolationKind::PartitionMismatch));
    CHECK(r.has(ViolationKind::TBlockNotZero));
    bool named = false;
    for (const auto& v : r.violations) named = named || v.message.find("T-block not zero") != std::string::npos;
    CHECK(named);
}
