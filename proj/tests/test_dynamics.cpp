#include "cellcheck/continuum.hpp"
#include "cellcheck/error.hpp"
#include "cellcheck/vcas.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace cellcheck;

namespace {

std::vector<double> sample(std::mt19937_64& rng, const Box& b) {
    std::vector<double> x;
    for (std::size_t i = 0; i < b.dim(); ++i) x.push_back(std::uniform_real_distribution<double>(b.lows[i], b.highs[i])(rng));
    return x;
}

Box random_cell(std::mt19937_64& rng, const Box& dom, double frac) {
    std::vector<double> lo, hi;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < dom.dim(); ++i) {
        const double w = dom.width(i) * frac * (0.05 + 0.95 * u(rng));
        const double a = dom.lows[i] + (dom.width(i) - w) * u(rng);
        lo.push_back(a);
        hi.push_back(a + w);
    }
    return Box(lo, hi);
}

// Every point successor lands in the matching outcome image.
void check_image_soundness(const DynamicsModel& m, std::size_t field, std::uint64_t seed, int cells, int points) {
    std::mt19937_64 rng(seed);
    for (int c = 0; c < cells; ++c) {
        const Box cell = random_cell(rng, m.domain(), rng() % 3 == 0 ? 1.0 : 0.1);
        for (std::size_t a = 0; a < m.action_count(); ++a) {
            const auto imgs = m.images(field, cell, 0, a);
            for (int k = 0; k < points; ++k) {
                const auto x = sample(rng, cell);
                const auto succ = m.successors(field, x, a);
                REQUIRE(succ.size() == imgs.size());
                for (std::size_t o = 0; o < succ.size(); ++o) {
                    CHECK((!imgs[o].exits || succ[o].exits));
                    CHECK(succ[o].target_field == imgs[o].target_field);
                    if (succ[o].exits) continue;
                    REQUIRE(imgs[o].image.contains(succ[o].state));
                }
            }
        }
    }
}

}  // namespace

TEST_CASE("continuum: up from the middle cell") {
    const ContinuumWorld w;
    const auto imgs = w.images(0, Box({5, 5}, {7.5, 7.5}), 0, ContinuumWorld::Up);
    REQUIRE(imgs.size() == 4);
    // Outcomes in action order: up, down, left, right.
    CHECK(imgs[0].probability == doctest::Approx(0.7));
    CHECK(imgs[0].image == Box({5, 6}, {7.5, 8.5}));
    CHECK(imgs[1].probability == doctest::Approx(0.1));
    CHECK(imgs[1].image == Box({5, 4}, {7.5, 6.5}));
    CHECK(imgs[2].probability == doctest::Approx(0.1));
    CHECK(imgs[2].image == Box({4, 5}, {6.5, 7.5}));
    CHECK(imgs[3].probability == doctest::Approx(0.1));
    CHECK(imgs[3].image == Box({6, 5}, {8.5, 7.5}));
}

TEST_CASE("continuum: clamping at the domain edge") {
    const ContinuumWorld w;
    const auto imgs = w.images(0, Box({0, 3}, {0.5, 4}), 0, ContinuumWorld::Left);
    CHECK(imgs[2].image == Box({0, 3}, {0, 4}));
    CHECK(!imgs[2].exits);
    const auto top = w.images(0, Box({3, 19.5}, {4, 20}), 0b10, ContinuumWorld::Up);
    CHECK(top[0].image == Box({3, 20}, {4, 20}));
    CHECK((top[0].closed_high & 0b10) != 0);
    std::vector<double> x{0.2, 3.5};
    const auto s = w.successors(0, x, ContinuumWorld::Left);
    CHECK(s[2].state == std::vector<double>{0.0, 3.5});
}

TEST_CASE("continuum: treat-as-safe exits") {
    ContinuumConfig cfg;
    cfg.boundary = BoundaryPolicy::TreatAsSafe;
    const ContinuumWorld w(cfg);
    const auto imgs = w.images(0, Box({0, 3}, {0.5, 4}), 0, ContinuumWorld::Left);
    CHECK(imgs[2].exits);
    CHECK(!imgs[0].exits);
    // A partially exiting image is kept and clipped.
    const auto part = w.images(0, Box({0, 3}, {2, 4}), 0, ContinuumWorld::Left);
    CHECK(!part[2].exits);
    CHECK(part[2].image == Box({0, 3}, {1, 4}));
}

TEST_CASE("continuum: regions") {
    const ContinuumWorld w;
    CHECK(w.unsafe(0, Box({7, 7}, {9, 9})));
    CHECK(!w.unsafe(0, Box({7, 7}, {8, 8})));
    CHECK(w.inside_unsafe(0, Box({9, 9}, {10, 10})));
    CHECK(!w.inside_unsafe(0, Box({7, 7}, {9, 9})));
    CHECK(w.absorbing_safe(0, Box({19, 19}, {20, 20})));
    CHECK(!w.absorbing_safe(0, Box({18, 19}, {20, 20})));
    CHECK(w.touches_absorbing(0, Box({18, 18}, {19.5, 19.5})));
    CHECK(w.point_unsafe(0, std::vector<double>{8.0, 8.0}));
    CHECK(!w.point_unsafe(0, std::vector<double>{12.0, 10.0}));
    CHECK(w.point_absorbing(0, std::vector<double>{19.5, 20.0}));
}

TEST_CASE("continuum: probabilities sum to one") {
    const ContinuumWorld w;
    for (std::size_t a = 0; a < 4; ++a) {
        double total = 0.0;
        for (const auto& o : w.outcomes(0, a)) total += o.probability;
        CHECK(std::abs(total - 1.0) <= 1e-12);
    }
    CHECK_THROWS_AS(w.outcomes(0, 4), ValidationError);
}

TEST_CASE("continuum: image soundness and exact translation") {
    const ContinuumWorld w;
    check_image_soundness(w, 0, 1, 100, 1000);
    ContinuumConfig cfg;
    cfg.boundary = BoundaryPolicy::TreatAsSafe;
    check_image_soundness(ContinuumWorld(cfg), 0, 2, 100, 200);
    const Box c({3, 4}, {5.5, 6.25});
    for (std::size_t a = 0; a < 4; ++a) {
        for (const auto& img : w.images(0, c, 0, a)) {
            CHECK(img.image.width(0) == c.width(0));
            CHECK(img.image.width(1) == c.width(1));
        }
    }
}

TEST_CASE("vcas: acceleration rows") {
    const double g = kStandardGravity;
    const auto coc = ownship_accelerations("COC");
    CHECK(coc.probabilities == std::array<double, 3>{0.34, 0.33, 0.33});
    CHECK(coc.accelerations[0] == 0.0);
    CHECK(coc.accelerations[1] == doctest::Approx(-g / 3));
    CHECK(coc.accelerations[2] == doctest::Approx(g / 3));
    for (const auto& name : vcas_advisory_names()) {
        const auto row = ownship_accelerations(name);
        double total = 0.0;
        for (double p : row.probabilities) total += p;
        CHECK(std::abs(total - 1.0) <= 1e-12);
    }
    CHECK_THROWS_AS(ownship_accelerations("CLIMB"), ValidationError);
}

TEST_CASE("vcas: direct substitution") {
    const VcasModel m;
    const double g = kStandardGravity;
    const std::size_t field = m.field_of(0, 10);  // previous advisory COC
    const std::vector<double> x{1000.0, 0.0, -90.0};
    const auto succ = m.successors(field, x, 0);
    REQUIRE(succ.size() == 9);
    // Ownship g/3 is row index 2, intruder 0 is column index 1.
    const auto& s = succ[2 * 3 + 1];
    CHECK(s.state[0] == doctest::Approx(904.633).epsilon(1e-6));
    CHECK(s.state[0] == doctest::Approx(1000.0 - 90.0 - 0.5 * g / 3).epsilon(1e-12));
    CHECK(s.state[1] == doctest::Approx(10.733).epsilon(1e-4));
    CHECK(s.state[2] == doctest::Approx(-90.0));
    CHECK(m.tau_of(s.target_field) == 9);
    CHECK(m.advisory_of(s.target_field) == 0);
    CHECK(s.probability == doctest::Approx(0.33 / 3));
}

TEST_CASE("vcas: probabilities sum to one for every row") {
    const VcasModel m;
    for (std::size_t adv = 0; adv < 9; ++adv) {
        for (std::size_t a = 0; a < 9; ++a) {
            const auto outs = m.outcomes(m.field_of(adv, 5), a);
            REQUIRE(outs.size() == 9);
            double total = 0.0;
            for (const auto& o : outs) {
                total += o.probability;
                CHECK(m.advisory_of(o.target_field) == a);
            }
            CHECK(std::abs(total - 1.0) <= 1e-12);
        }
    }
    CHECK(m.outcomes(m.field_of(0, 0), 0).empty());
    CHECK_THROWS_AS(m.outcomes(m.field_of(0, 3), 9), ValidationError);
}

TEST_CASE("vcas: image widths match interval arithmetic") {
    const VcasModel m;
    const Box c({100, -20, 30}, {300, 10, 35});
    for (const auto& img : m.images(m.field_of(2, 7), c, 0, 4)) {
        // h' depends on h (+1), hdot0 (-1) and hdot1 (+1).
        CHECK(std::abs(img.image.width(0) - (200.0 + 30.0 + 5.0)) <= 1e-9);
        CHECK(std::abs(img.image.width(1) - 30.0) <= 1e-9);
        CHECK(std::abs(img.image.width(2) - 5.0) <= 1e-9);
    }
}

TEST_CASE("vcas: velocities clamp to the rate range") {
    const VcasModel m;
    const std::vector<double> x{0.0, 99.0, -99.5};
    for (const auto& s : m.successors(m.field_of(4, 3), x, 0)) {
        CHECK(s.state[1] <= 100.0);
        CHECK(s.state[2] >= -100.0);
        CHECK(!s.exits);
    }
    check_image_soundness(m, m.field_of(3, 12), 5, 40, 1000);
    VcasConfig cfg;
    cfg.fixed_intruder_rate = -30.0;
    cfg.altitude_boundary = BoundaryPolicy::TreatAsSafe;
    const VcasModel slice(cfg);
    CHECK(slice.state_dim() == 2);
    check_image_soundness(slice, slice.field_of(1, 20), 6, 40, 1000);
}

TEST_CASE("vcas: NMAC region") {
    const VcasModel m;
    const std::size_t t0 = m.field_of(0, 0), t5 = m.field_of(0, 5);
    CHECK(m.unsafe(t0, Box({-50, -10, -10}, {50, 10, 10})));
    CHECK(m.inside_unsafe(t0, Box({-50, -10, -10}, {50, 10, 10})));
    CHECK(!m.unsafe(t0, Box({200, -10, -10}, {300, 10, 10})));
    CHECK(m.absorbing_safe(t0, Box({200, -10, -10}, {300, 10, 10})));
    CHECK(!m.unsafe(t5, Box({-50, -10, -10}, {50, 10, 10})));
    CHECK(!m.unsafe(t0, Box({100, -10, -10}, {300, 10, 10})));
    CHECK(m.point_unsafe(t0, std::vector<double>{-99.0, 0.0, 0.0}));
    CHECK(!m.point_unsafe(t0, std::vector<double>{100.0, 0.0, 0.0}));
}

TEST_CASE("vcas: fields and embedding") {
    VcasConfig cfg;
    cfg.fixed_intruder_rate = -30.0;
    const VcasModel m(cfg);
    CHECK(m.field_count() == 9 * 41);
    const std::size_t f = m.field_of(3, 17);
    CHECK(m.advisory_of(f) == 3);
    CHECK(m.tau_of(f) == 17);
    CHECK(m.field_layer(f) == std::optional<std::size_t>(17));
    CHECK(m.parse_field(m.field_label(f)) == std::optional<std::size_t>(f));
    const auto in = m.embedding(f).lift(std::vector<double>{10.0, 20.0});
    CHECK(in == std::vector<double>{10.0, 20.0, -30.0, 17.0});
    CHECK_THROWS_AS(m.field_of(9, 0), ValidationError);
    cfg.fixed_intruder_rate = 150.0;
    CHECK_THROWS_AS(VcasModel{cfg}, ValidationError);
}

TEST_CASE("affine map image") {
    const AffineMap map(2, {2.0, -1.0, 0.0, 0.5}, {1.0, 0.0});
    const auto img = map.image(Box({0, 0}, {1, 2}), 0b11);
    CHECK(img.box == Box({-1, 0}, {3, 1}));
    CHECK(img.closed_high == 0b11);
    CHECK(map.image(Box({0, 0}, {1, 2}), 0b10).closed_high == 0b10);
    CHECK(map.apply(std::vector<double>{1.0, 1.0}) == std::vector<double>{2.0, 0.5});
    CHECK_THROWS_AS(AffineMap(2, {1.0}, {0.0, 0.0}), DimensionError);
    CHECK(parse_boundary_policy("clamp") == BoundaryPolicy::Clamp);
    CHECK_THROWS_AS(parse_boundary_policy("wrap"), ValidationError);
}
