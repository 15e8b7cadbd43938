#include "cellcheck/adaptive.hpp"
#include "cellcheck/error.hpp"
#include "support/nets.hpp"

#include <doctest.h>

#include <random>

using namespace cellcheck;

namespace {

void check_sound(const Network& net, const PartitionTree& tree, std::uint64_t seed, int samples = 100) {
    std::mt19937_64 rng(seed);
    for (CellId id : tree.leaves()) {
        const Box& b = tree.cell(id).box;
        REQUIRE(!tree.cell(id).actions.empty());
        for (int k = 0; k < samples; ++k) {
            std::vector<double> x;
            for (std::size_t i = 0; i < b.dim(); ++i) {
                x.push_back(std::uniform_real_distribution<double>(b.lows[i], b.highs[i])(rng));
            }
            REQUIRE(tree.cell(id).actions.contains(net.best_action(x)));
        }
    }
}

void check_terminal(const PartitionTree& tree, const std::vector<double>& min_size) {
    for (CellId id : tree.leaves()) {
        const Cell& c = tree.cell(id);
        CHECK((c.actions.size() == 1 || splittable_dims(c.box, min_size).empty()));
    }
}

}  // namespace

TEST_CASE("informed split dimensions") {
    const std::size_t A = 0, B = 1;
    CHECK(strategy_dims(std::vector<std::size_t>{A, A, B, B}, 2) == std::vector<std::size_t>{1});
    CHECK(strategy_dims(std::vector<std::size_t>{A, B, A, B}, 2) == std::vector<std::size_t>{0});
    CHECK(strategy_dims(std::vector<std::size_t>{A, B, B, B}, 2) == std::vector<std::size_t>{0, 1});
    CHECK(strategy_dims(std::vector<std::size_t>{A, A, A, A}, 2).empty());
    CHECK(strategy_dims(std::vector<std::size_t>{A, B}, 1) == std::vector<std::size_t>{0});
    CHECK_THROWS_AS(strategy_dims(std::vector<std::size_t>{A, B, A}, 2), DimensionError);
}

TEST_CASE("splittable dimensions") {
    const Box b({0, 0, 0}, {1, 0.5, 0.25});
    CHECK(splittable_dims(b, std::vector<double>{0.5, 0.5, 0.1}) == std::vector<std::size_t>{0, 2});
    CHECK_THROWS_AS(splittable_dims(b, std::vector<double>{0.5}), DimensionError);
}

TEST_CASE("constant network needs one verifier call") {
    const Network net = testing::constant_network(2, 4, 3);
    for (auto s : {SplitStrategy::InformedSplit, SplitStrategy::AllSplit}) {
        const auto r = adaptive_verify(net, Box({0, 0}, {1, 1}), AdaptiveConfig{{0.01, 0.01}, s, {}});
        CHECK(r.tree.leaf_count() == 1);
        CHECK(r.stats.verifier_calls == 1);
        CHECK(r.tree.cell(r.tree.root()).actions == ActionSet::single(3));
    }
}

TEST_CASE("1-D boundary isolates at most two minimum-width leaves") {
    const double boundary = 0.3;
    const double w = 1.0 / 64.0;
    const Network net = testing::threshold_network(boundary);
    // Dense scan oracle for where the selected action changes.
    double found = -1.0;
    for (int k = 1; k <= 100000; ++k) {
        const double a = (k - 1) / 100000.0, b = k / 100000.0;
        if (net.best_action(std::vector<double>{a}) != net.best_action(std::vector<double>{b})) found = b;
    }
    REQUIRE(found > 0.0);
    for (auto s : {SplitStrategy::InformedSplit, SplitStrategy::AllSplit}) {
        const auto r = adaptive_verify(net, Box({0.0}, {1.0}), AdaptiveConfig{{w}, s, {}});
        std::size_t multi = 0;
        for (CellId id : r.tree.leaves()) {
            const Cell& c = r.tree.cell(id);
            if (c.actions.size() == 1) continue;
            ++multi;
            CHECK(c.box.width(0) == doctest::Approx(w));
            CHECK(c.box.lows[0] <= found + 1e-5);
            CHECK(c.box.highs[0] >= found - 1e-5);
        }
        CHECK(multi <= 2);
        check_sound(net, r.tree, 1);
    }
}

TEST_CASE("continuum network: informed uses fewer cells than all-split") {
    const Network net = load_network(testing::data_path("continuum_world.nnet"));
    const Box domain({0, 0}, {20, 20});
    const std::vector<double> min{0.625, 0.625};
    const auto informed = adaptive_verify(net, domain, {min, SplitStrategy::InformedSplit, {}});
    const auto all = adaptive_verify(net, domain, {min, SplitStrategy::AllSplit, {}});
    const auto uniform = uniform_verify(net, domain, {min, SplitStrategy::AllSplit, {}});
    CHECK(informed.tree.leaf_count() < all.tree.leaf_count());
    CHECK(informed.stats.verifier_calls < uniform.stats.verifier_calls);
    CHECK(uniform.tree.leaf_count() == 32 * 32);
    check_sound(net, informed.tree, 2);
    check_sound(net, all.tree, 3);
    check_sound(net, uniform.tree, 4, 20);
    check_terminal(informed.tree, min);
    check_terminal(all.tree, min);
    VerifierStats s = informed.stats;
    s.count_leaves(informed.tree);
    CHECK(s.leaves_total == informed.tree.leaf_count());
    CHECK(s.leaves_singleton + s.leaves_multi == s.leaves_total);
}

TEST_CASE("random networks terminate with sound leaves") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const Network net = testing::random_network({2, 12, 12, 3}, 400 + seed);
        const std::vector<double> min{0.125, 0.125};
        for (auto s : {SplitStrategy::InformedSplit, SplitStrategy::AllSplit}) {
            const auto r = adaptive_verify(net, Box({-1, -1}, {1, 1}), {min, s, {}});
            check_sound(net, r.tree, seed);
            check_terminal(r.tree, min);
        }
    }
}

TEST_CASE("embedding fixes extra network inputs") {
    // Network over (x, t); the partition only covers x with t pinned.
    const Network net = testing::random_network({2, 6, 3}, 12);
    const InputEmbedding emb(1, {{0, 0.0}, {InputEmbedding::Slot::kFixed, 0.7}});
    const auto r = adaptive_verify(net, Box({-1.0}, {1.0}), {{0.05}, SplitStrategy::InformedSplit, {}}, emb);
    std::mt19937_64 rng(1);
    for (CellId id : r.tree.leaves()) {
        const Box& b = r.tree.cell(id).box;
        for (int k = 0; k < 50; ++k) {
            const double x = std::uniform_real_distribution<double>(b.lows[0], b.highs[0])(rng);
            CHECK(r.tree.cell(id).actions.contains(net.best_action(std::vector<double>{x, 0.7})));
        }
    }
}

TEST_CASE("refining a subtree uses the existing mask") {
    const Network net = load_network(testing::data_path("continuum_world.nnet"));
    PartitionTree tree(Box({0, 0}, {20, 20}));
    tree.cell(tree.root()).actions = ActionSet::all(4);
    VerifierStats stats;
    adaptive_refine(tree, tree.root(), net, InputEmbedding::identity(2), {{2.5, 2.5}, SplitStrategy::AllSplit, {}},
                    stats);
    CHECK(stats.verifier_calls > 0);
    check_sound(net, tree, 5);
}

TEST_CASE("configuration errors") {
    const Network net = testing::constant_network(2, 2, 0);
    CHECK_THROWS_AS(adaptive_verify(net, Box({0, 0}, {1, 1}), {{0.1}, SplitStrategy::AllSplit, {}}), DimensionError);
    CHECK_THROWS_AS(adaptive_verify(net, Box({0, 0}, {1, 1}), {{0.1, 0.0}, SplitStrategy::AllSplit, {}}),
                    ValidationError);
    CHECK_THROWS_AS(adaptive_verify(net, Box({0}, {1}), {{0.1}, SplitStrategy::AllSplit, {}}), DimensionError);
    CHECK(parse_split_strategy("all") == SplitStrategy::AllSplit);
    CHECK(parse_split_strategy("informed") == SplitStrategy::InformedSplit);
    CHECK_THROWS_AS(parse_split_strategy("greedy"), ValidationError);
}
