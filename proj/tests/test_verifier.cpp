#include "cellcheck/error.hpp"
#include "cellcheck/verifier.hpp"
#include "support/nets.hpp"

#include <doctest.h>

#include <random>

using namespace cellcheck;

namespace {

Box random_cell(std::mt19937_64& rng, const Box& domain, double max_frac) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> lo, hi;
    for (std::size_t i = 0; i < domain.dim(); ++i) {
        const double w = domain.width(i) * max_frac * u(rng);
        const double a = domain.lows[i] + (domain.width(i) - w) * u(rng);
        lo.push_back(a);
        hi.push_back(a + w);
    }
    return Box(lo, hi);
}

std::vector<double> sample(std::mt19937_64& rng, const Box& b) {
    std::vector<double> x;
    for (std::size_t i = 0; i < b.dim(); ++i) x.push_back(std::uniform_real_distribution<double>(b.lows[i], b.highs[i])(rng));
    return x;
}

}  // namespace

TEST_CASE("affine bounds") {
    SUBCASE("y = 2x + 1 through an identity ReLU") {
        // Hidden ReLU(x) is exact for x >= 0.
        Layer h{1, 1, {1.0}, {0.0}};
        Layer o{1, 2, {2.0, 0.0}, {1.0, 0.0}};
        const Network net({h, o}, {"y", "zero"});
        const auto b = propagate_bounds(net, Box({0.0}, {1.0}));
        CHECK(b.lows[0] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(b.highs[0] == doctest::Approx(3.0).epsilon(1e-12));
        CHECK(b.lows[0] <= 1.0);
        CHECK(b.highs[0] >= 3.0);
    }
    SUBCASE("y = x1 - x2") {
        Layer h{2, 2, {1, 0, 0, 1}, {0, 0}};
        Layer o{2, 2, {1, -1, 0, 0}, {0, 0}};
        const Network net({h, o}, {"d", "zero"});
        const auto b = propagate_bounds(net, Box({0, 0}, {1, 1}));
        CHECK(b.lows[0] == doctest::Approx(-1.0));
        CHECK(b.highs[0] == doctest::Approx(1.0));
    }
    SUBCASE("dimension mismatch") {
        const Network net = testing::constant_network(2, 2, 0);
        CHECK_THROWS_AS(propagate_bounds(net, Box({0.0}, {1.0})), DimensionError);
        CHECK_THROWS_AS(possible_actions(net, Box({0.0}, {1.0})), DimensionError);
    }
}

TEST_CASE("dominance filter") {
    const Box bounds({0.0, 0.5, -1.0}, {1.0, 2.0, 0.4});
    CHECK(undominated_actions(bounds, SelectionRule::Argmax, ActionSet::all(3)) == ActionSet(0b011));
    CHECK(undominated_actions(bounds, SelectionRule::Argmin, ActionSet::all(3)) == ActionSet(0b101));
    // Exact ties keep both actions.
    const Box tie({0.0, 1.0}, {1.0, 2.0});
    CHECK(undominated_actions(tie, SelectionRule::Argmax, ActionSet::all(2)) == ActionSet(0b11));
    // Only candidates are considered.
    CHECK(undominated_actions(bounds, SelectionRule::Argmax, ActionSet(0b101)) == ActionSet(0b001));
}

TEST_CASE("constant network gives a singleton") {
    const Network net = testing::constant_network(2, 3, 1);
    CHECK(possible_actions(net, Box({-5, -5}, {5, 5})) == ActionSet::single(1));
}

TEST_CASE("cell in one linear region with a strict winner") {
    const Network net = testing::threshold_network(0.5);
    // Corners and midpoint all agree on "high".
    const Box cell({0.6}, {0.9});
    for (double x : {0.6, 0.75, 0.9}) CHECK(net.best_action(std::vector<double>{x}) == 0);
    CHECK(possible_actions(net, cell) == ActionSet::single(0));
    CHECK(possible_actions(net, Box({0.1}, {0.4})) == ActionSet::single(1));
}

TEST_CASE("cell straddling a continuum-world decision boundary") {
    const Network net = load_network(testing::data_path("continuum_world.nnet"));
    // Find a boundary by dense scan, then verify a small cell around it.
    bool found = false;
    for (double x = 0.05; x < 20.0 && !found; x += 0.1) {
        for (double y = 0.05; y < 20.0 && !found; y += 0.1) {
            const auto a = net.best_action(std::vector<double>{x, y});
            const auto b = net.best_action(std::vector<double>{x + 0.1, y});
            if (a == b) continue;
            const Box cell({x, y}, {x + 0.1, y + 0.05});
            const ActionSet s = possible_actions(net, cell);
            CHECK(s.size() >= 2);
            CHECK(s.contains(a));
            CHECK(s.contains(b));
            found = true;
        }
    }
    CHECK(found);
}

TEST_CASE("soundness on random networks and cells") {
    std::mt19937_64 rng(17);
    for (int n = 0; n < 20; ++n) {
        const Network net = testing::random_network({3, 10, 10, 4}, 100 + n);
        const Box domain({-1, -1, -1}, {1, 1, 1});
        for (int c = 0; c < 50; ++c) {
            const Box cell = random_cell(rng, domain, 0.5);
            const ActionSet s = possible_actions(net, cell);
            const Box bounds = propagate_bounds(net, cell);
            REQUIRE(!s.empty());
            for (int k = 0; k < 200; ++k) {
                const auto x = sample(rng, cell);
                const auto y = net.evaluate(x);
                for (std::size_t o = 0; o < y.size(); ++o) {
                    REQUIRE(y[o] >= bounds.lows[o]);
                    REQUIRE(y[o] <= bounds.highs[o]);
                }
                REQUIRE(s.contains(net.best_action(x)));
            }
        }
    }
}

TEST_CASE("monotone under splitting and nested bounds") {
    std::mt19937_64 rng(23);
    const Network net = testing::random_network({2, 8, 8, 3}, 77);
    for (int c = 0; c < 200; ++c) {
        const Box cell = random_cell(rng, Box({-2, -2}, {2, 2}), 0.6);
        const ActionSet parent = possible_actions(net, cell);
        const Box pb = propagate_bounds(net, cell);
        const double mid = 0.5 * (cell.lows[0] + cell.highs[0]);
        Box left = cell, right = cell;
        left.highs[0] = mid;
        right.lows[0] = mid;
        CHECK((possible_actions(net, left) | possible_actions(net, right)).subset_of(parent));
        for (const Box& child : {left, right}) {
            const Box cb = propagate_bounds(net, child);
            for (std::size_t o = 0; o < 3; ++o) {
                CHECK(cb.lows[o] >= pb.lows[o] - 1e-9);
                CHECK(cb.highs[o] <= pb.highs[o] + 1e-9);
            }
        }
    }
}

TEST_CASE("refinement depth tightens the set") {
    const Network net = load_network(testing::data_path("continuum_world.nnet"));
    std::mt19937_64 rng(5);
    std::size_t shallow = 0, deep = 0;
    for (int c = 0; c < 300; ++c) {
        const Box cell = random_cell(rng, Box({0, 0}, {20, 20}), 0.2);
        const ActionSet a = possible_actions(net, cell, VerifierConfig{0});
        const ActionSet b = possible_actions(net, cell, VerifierConfig{4});
        CHECK(b.subset_of(a));
        shallow += a.size();
        deep += b.size();
    }
    CHECK(deep < shallow);
}

TEST_CASE("candidate mask restricts the result") {
    const Network net = load_network(testing::data_path("continuum_world.nnet"));
    const Box cell({5, 5}, {15, 15});
    const ActionSet all = possible_actions(net, cell);
    const ActionSet mask(0b0101);
    CHECK(possible_actions(net, cell, mask, {}).subset_of(mask));
    CHECK(possible_actions(net, cell, all, {}) == all);
}
