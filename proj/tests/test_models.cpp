#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "ergomix/experiment.hpp"
#include "ergomix/models.hpp"
#include "test_util.hpp"

using namespace ergomix;
using namespace ergomix::models;
using ergomix::testutil::random_unimodular;

TEST_CASE("spread-out criterion, deterministic linear part") {
    IntMatrix a(2, {2, 1, 1, 1});
    CHECK(check_spread_out_deterministic(a, {1, 0}));
    CHECK_FALSE(check_spread_out_deterministic(IntMatrix::identity(2), {1, 0}));
    IntMatrix rot(2, {0, -1, 1, 0});
    CHECK(check_spread_out_deterministic(rot, {1, 0}));

    CHECK_THROWS(check_spread_out_deterministic(a, {0, 0}));
    IntMatrix doubling(2, {2, 0, 0, 1});
    CHECK_THROWS(check_spread_out_deterministic(doubling, {1, 0}));
}

TEST_CASE("spread-out criterion is scale invariant in v") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        int n = trial % 2 == 0 ? 2 : 3;
        auto a = random_unimodular(rng, n);
        std::vector<std::int64_t> v(static_cast<std::size_t>(n));
        bool nonzero = false;
        for (auto& c : v) {
            c = static_cast<std::int64_t>(rng() % 5) - 2;
            if (c != 0) nonzero = true;
        }
        if (!nonzero) v[0] = 1;
        std::int64_t scale = 1 + static_cast<std::int64_t>(rng() % 4);
        std::vector<std::int64_t> cv = v;
        for (auto& c : cv) c *= scale;
        CHECK(check_spread_out_deterministic(a, v) == check_spread_out_deterministic(a, cv));
    }
}

TEST_CASE("spread-out criterion, independent linear part") {
    IntMatrix a(2, {2, 1, 1, 1}), b(2, {1, 1, 1, 2});
    CHECK(check_spread_out_independent({a, b}, {1, 0}));
    CHECK_FALSE(check_spread_out_independent({IntMatrix::identity(2)}, {1, 0}));
    // diag(1,-1) preserves the coordinate axes; v = e1 stays on its line.
    IntMatrix diag(2, {1, 0, 0, -1});
    CHECK_FALSE(check_spread_out_independent({diag}, {1, 0}));
}

TEST_CASE("single-generator independent criterion agrees with the deterministic one") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        int n = trial % 2 == 0 ? 2 : 3;
        auto a = random_unimodular(rng, n);
        std::vector<std::int64_t> v(static_cast<std::size_t>(n), 0);
        while (std::all_of(v.begin(), v.end(), [](std::int64_t c) { return c == 0; }))
            for (auto& c : v) c = static_cast<std::int64_t>(rng() % 5) - 2;
        CHECK(check_spread_out_independent({a}, v) == check_spread_out_deterministic(a, v));
    }
}

TEST_CASE("growth: 1d walk gives 2n+1 and degree about 1") {
    auto model = testutil::nn_walk(1);
    auto report = measure_growth(model, 50);
    for (int n = 1; n <= 50; ++n)
        CHECK(report.ball_sizes[static_cast<std::size_t>(n - 1)] == 2 * n + 1);
    CHECK(report.fitted_degree == doctest::Approx(1.0).epsilon(0.05));
    CHECK(report.classification == GrowthClass::at_most_quadratic);
}

TEST_CASE("growth: 2d nearest-neighbor gives the diamond count 2n^2+2n+1") {
    auto model = testutil::nn_walk(2);
    auto report = measure_growth(model, 50);
    for (int n = 1; n <= 50; ++n)
        CHECK(report.ball_sizes[static_cast<std::size_t>(n - 1)] ==
              2 * static_cast<std::int64_t>(n) * n + 2 * n + 1);
    CHECK(report.fitted_degree == doctest::Approx(2.0).epsilon(0.05));
    CHECK(report.classification == GrowthClass::at_most_quadratic);
}

TEST_CASE("growth: 3d nearest-neighbor is superquadratic, oracle by enumeration") {
    auto model = testutil::nn_walk(3);
    int n_max = 30;
    auto report = measure_growth(model, n_max);
    // Independent count of the L1 ball by brute-force enumeration.
    for (int n : {1, 2, 5, 17, 30}) {
        std::int64_t count = 0;
        for (int x = -n; x <= n; ++x)
            for (int y = -n; y <= n; ++y)
                for (int z = -n; z <= n; ++z)
                    if (std::abs(x) + std::abs(y) + std::abs(z) <= n) ++count;
        CHECK(report.ball_sizes[static_cast<std::size_t>(n - 1)] == count);
    }
    CHECK(report.fitted_degree > 2.3);
    CHECK(report.classification == GrowthClass::superquadratic);
}

TEST_CASE("growth: ball sizes are nondecreasing and submultiplicative") {
    for (auto model : {testutil::nn_walk(2), testutil::lazy_walk_1d()}) {
        auto sizes = ball_sizes(model, 24);
        for (std::size_t i = 1; i < sizes.size(); ++i) CHECK(sizes[i] >= sizes[i - 1]);
        for (int n : {2, 5, 8})
            for (int m : {3, 7, 12}) {
                CHECK(sizes[static_cast<std::size_t>(n + m - 1)] <=
                      sizes[static_cast<std::size_t>(n - 1)] * sizes[static_cast<std::size_t>(m - 1)]);
            }
    }
}

TEST_CASE("growth rejects non-generating supports with a witness") {
    CoverModel rank_deficient;
    rank_deficient.degree = 2;
    rank_deficient.step_law = {{{1, 0}, 0.5}, {{-1, 0}, 0.5}};
    CHECK_THROWS_WITH_AS(measure_growth(rank_deficient, 10),
                         doctest::Contains("rank"), std::invalid_argument);

    CoverModel sublattice;
    sublattice.degree = 1;
    sublattice.step_law = {{{2}, 0.5}, {{-2}, 0.5}};
    CHECK_THROWS_WITH_AS(measure_growth(sublattice, 10), doctest::Contains("index"),
                         std::invalid_argument);
}

TEST_CASE("aperiodicity of discretized torus models") {
    auto worked = cli::make_reference_torus_model(1.0);
    auto report = check_aperiodic_torus(worked, 8);
    REQUIRE(report.period.has_value());
    CHECK(*report.period == 1);
    CHECK(report.aperiodic);

    AffineTorusModel shift;  // identity linear part, deterministic half shift
    shift.dimension = 1;
    shift.linear_parts.push_back({IntMatrix::identity(1), 1.0});
    shift.displacement.direction = {1};
    shift.displacement.atoms.push_back({Rational(1, 2), 1.0});
    auto r2 = check_aperiodic_torus(shift, 2);
    REQUIRE(r2.period.has_value());
    CHECK(*r2.period == 2);
    CHECK_FALSE(r2.aperiodic);

    AffineTorusModel uniform_jump;
    uniform_jump.dimension = 1;
    uniform_jump.linear_parts.push_back({IntMatrix::identity(1), 1.0});
    uniform_jump.displacement.direction = {1};
    uniform_jump.displacement.pieces.push_back({Rational(0), Rational(1), 1.0});
    auto r3 = check_aperiodic_torus(uniform_jump, 4);
    REQUIRE(r3.period.has_value());
    CHECK(*r3.period == 1);
}

TEST_CASE("model validation enforces the mass and unimodularity invariants") {
    AffineTorusModel bad = cli::make_reference_torus_model(1.0);
    bad.linear_parts[0].weight = 0.7;  // weights now sum to 1.2
    CHECK_THROWS(bad.validate());

    AffineTorusModel bad_det = cli::make_reference_torus_model(1.0);
    bad_det.linear_parts[0].matrix = IntMatrix(2, {2, 0, 0, 1});
    CHECK_THROWS_WITH_AS(bad_det.validate(), doctest::Contains("det"), std::invalid_argument);

    AffineTorusModel bad_dir = cli::make_reference_torus_model(1.0);
    bad_dir.displacement.direction = {2, 0};
    CHECK_THROWS_WITH_AS(bad_dir.validate(), doctest::Contains("primitive"),
                         std::invalid_argument);

    AffineTorusModel bad_mass = cli::make_reference_torus_model(1.0);
    bad_mass.displacement.pieces[0].height = 0.9;
    CHECK_THROWS(bad_mass.validate());

    CoverModel cover = testutil::nn_walk(2);
    cover.step_law[0].mass += 0.1;
    CHECK_THROWS(cover.validate());
}

TEST_CASE("displacement cell masses are exact cell integrals") {
    auto law = cli::make_reference_torus_model(1.0).displacement;
    auto cells = law.cell_masses(8);
    for (double c : cells) CHECK(c == doctest::Approx(0.125).epsilon(1e-15));

    auto half = cli::make_reference_torus_model(0.5).displacement;
    auto hc = half.cell_masses(8);
    CHECK(hc[0] == doctest::Approx(0.5 + 0.0625).epsilon(1e-15));
    for (int k = 1; k < 8; ++k) CHECK(hc[static_cast<std::size_t>(k)] == doctest::Approx(0.0625));

    DisplacementLaw third;
    third.direction = {1};
    third.atoms.push_back({Rational(1, 3), 1.0});
    third.validate();
    CHECK_THROWS_WITH_AS(third.cell_masses(8), doctest::Contains("3"), std::invalid_argument);
}

TEST_CASE("cover model symmetry and period detection") {
    CHECK(testutil::nn_walk(1).symmetric());
    CHECK(testutil::nn_walk(1).walk_period() == 2);
    CHECK(testutil::lazy_walk_1d().walk_period() == 1);
    CHECK(testutil::nn_walk(2).walk_period() == 2);

    CoverModel skewed;
    skewed.degree = 1;
    skewed.step_law = {{{1}, 0.6}, {{-1}, 0.4}};
    CHECK_FALSE(skewed.symmetric());

    // {+-1, +-2} admits an odd cycle (1 + 1 - 2 = 0), hence period 1.
    CoverModel two_scale;
    two_scale.degree = 1;
    two_scale.step_law = {{{1}, 0.25}, {{-1}, 0.25}, {{2}, 0.25}, {{-2}, 0.25}};
    CHECK(two_scale.walk_period() == 1);
}
