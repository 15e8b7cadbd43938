#include "cellcheck/error.hpp"
#include "cellcheck/partition.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

using namespace cellcheck;

namespace {

bool owns(const PartitionTree& t, CellId id, const std::vector<double>& x) {
    const Box& b = t.cell(id).box;
    const Box& r = t.root_box();
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < b.lows[i]) return false;
        if (x[i] > b.highs[i]) return false;
        if (x[i] == b.highs[i] && b.highs[i] != r.highs[i]) return false;
    }
    return true;
}

bool intersects(const Box& leaf, const Box& q) {
    for (std::size_t i = 0; i < q.dim(); ++i) {
        if (q.width(i) > 0.0) {
            if (!(leaf.lows[i] < q.highs[i] && q.lows[i] < leaf.highs[i])) return false;
        } else if (q.lows[i] < leaf.lows[i] || q.lows[i] > leaf.highs[i]) {
            return false;
        }
    }
    return true;
}

PartitionTree random_tree(std::uint64_t seed, std::size_t splits) {
    std::mt19937_64 rng(seed);
    PartitionTree t(Box({0, -1, 2}, {4, 1, 3}));
    for (std::size_t s = 0; s < splits; ++s) {
        const auto leaves = t.leaves();
        const CellId id = leaves[rng() % leaves.size()];
        std::vector<std::size_t> dims;
        for (std::size_t k = 0; k < 3; ++k) {
            if (rng() % 2) dims.push_back(k);
        }
        if (dims.empty()) dims.push_back(rng() % 3);
        t.split(id, dims);
    }
    return t;
}

double sample_coord(std::mt19937_64& rng, double lo, double hi) {
    // Mix in exact face coordinates to exercise the boundary convention.
    if (rng() % 4 == 0) {
        const int k = int(rng() % 9);
        return lo + (hi - lo) * k / 8.0;
    }
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace

TEST_CASE("split examples") {
    PartitionTree t(Box({0, 0}, {1, 1}));
    SUBCASE("both dimensions gives four quarters") {
        const std::size_t dims[] = {0, 1};
        const auto kids = t.split(t.root(), dims);
        REQUIRE(kids.size() == 4);
        for (CellId k : kids) {
            CHECK(t.cell(k).box.width(0) == 0.5);
            CHECK(t.cell(k).box.width(1) == 0.5);
        }
        CHECK(t.cell(kids[1]).box.lows == std::vector<double>{0.5, 0.0});
        CHECK(t.cell(kids[2]).box.lows == std::vector<double>{0.0, 0.5});
        CHECK(t.leaf_count() == 4);
    }
    SUBCASE("one dimension gives two halves") {
        const std::size_t dims[] = {0};
        const auto kids = t.split(t.root(), dims);
        REQUIRE(kids.size() == 2);
        CHECK(t.cell(kids[0]).box == Box({0, 0}, {0.5, 1}));
        CHECK(t.cell(kids[1]).box == Box({0.5, 0}, {1, 1}));
        CHECK(t.split_dims(t.root()) == std::vector<std::size_t>{0});
    }
    SUBCASE("children inherit annotations") {
        t.cell(t.root()).actions = ActionSet(0b110);
        t.cell(t.root()).prob = 0.25;
        const std::size_t dims[] = {1};
        for (CellId k : t.split(t.root(), dims)) {
            CHECK(t.cell(k).actions == ActionSet(0b110));
            CHECK(t.cell(k).prob == 0.25);
            CHECK(t.parent(k) == t.root());
            CHECK(t.cell(k).id == k);
        }
    }
    SUBCASE("repeated halving eventually fails") {
        CellId id = t.root();
        bool threw = false;
        for (int i = 0; i < 2000 && !threw; ++i) {
            try {
                const std::size_t dims[] = {0};
                id = t.split(id, dims)[0];
            } catch (const PartitionError&) {
                threw = true;
            }
        }
        CHECK(threw);
    }
}

TEST_CASE("split errors") {
    PartitionTree t(Box({0, 0}, {1, 1}));
    const std::size_t d0[] = {0};
    t.split(t.root(), d0);
    CHECK_THROWS_AS(t.split(t.root(), d0), PartitionError);
    CHECK_THROWS_AS(t.split(1, std::span<const std::size_t>{}), PartitionError);
    const std::size_t bad[] = {5};
    CHECK_THROWS_AS(t.split(1, bad), PartitionError);
    const std::size_t rep[] = {1, 1};
    CHECK_THROWS_AS(t.split(1, rep), PartitionError);
    CHECK_THROWS_AS(PartitionTree(Box({0, 0}, {1, 0})), PartitionError);
}

TEST_CASE("locate examples") {
    PartitionTree t(Box({0, 0}, {1, 1}));
    const std::size_t d0[] = {0};
    const auto kids = t.split(t.root(), d0);
    CHECK(t.locate(std::vector<double>{0.5, 0.2}) == kids[1]);
    CHECK(t.locate(std::vector<double>{0.4999, 0.2}) == kids[0]);
    CHECK(t.locate(std::vector<double>{1.0, 1.0}) == kids[1]);
    CHECK(t.locate(std::vector<double>{0.0, 0.0}) == kids[0]);
    CHECK_THROWS_AS(t.locate(std::vector<double>{1.5, 0.2}), PartitionError);
    CHECK_THROWS_AS(t.locate(std::vector<double>{0.5}), DimensionError);
}

TEST_CASE("overlapping examples") {
    PartitionTree t(Box({0, 0}, {1, 1}));
    const std::size_t d0[] = {0};
    const auto kids = t.split(t.root(), d0);
    CHECK(t.overlapping(t.cell(kids[0]).box) == std::vector<CellId>{kids[0]});
    auto both = t.overlapping(Box({0.4, 0.1}, {0.6, 0.2}));
    std::sort(both.begin(), both.end());
    CHECK(both == std::vector<CellId>{kids[0], kids[1]});
    // A degenerate box on the shared face touches both children.
    CHECK(t.overlapping(Box({0.5, 0.1}, {0.5, 0.2})).size() == 2);
    // Closed-high extension picks up the neighbour whose low face is the query's high face.
    CHECK(t.overlapping(Box({0.2, 0.1}, {0.5, 0.2})) == std::vector<CellId>{kids[0]});
    CHECK(t.overlapping(Box({0.2, 0.1}, {0.5, 0.2}), 0b1).size() == 2);
    CHECK_THROWS_AS(t.overlapping(Box({2, 2}, {3, 3})), PartitionError);
}

TEST_CASE("tiling after random splits") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const PartitionTree t = random_tree(seed, 60);
        double vol = 0.0;
        std::set<CellId> ids;
        for (CellId id : t.leaves()) {
            vol += t.cell(id).box.volume();
            CHECK(ids.insert(t.cell(id).id).second);
            CHECK(t.is_descendant(id, t.root()));
            for (std::size_t i = 0; i < 3; ++i) CHECK(t.cell(id).box.lows[i] < t.cell(id).box.highs[i]);
        }
        CHECK(vol == doctest::Approx(t.root_box().volume()).epsilon(1e-9));
        CHECK(ids.size() == t.leaf_count());
    }
}

TEST_CASE("locate agrees with a linear scan") {
    std::mt19937_64 rng(99);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const PartitionTree t = random_tree(seed, 80);
        const Box& r = t.root_box();
        for (int k = 0; k < 500; ++k) {
            std::vector<double> x;
            for (std::size_t i = 0; i < 3; ++i) x.push_back(sample_coord(rng, r.lows[i], r.highs[i]));
            std::vector<CellId> owners;
            for (CellId id : t.leaves()) {
                if (owns(t, id, x)) owners.push_back(id);
            }
            REQUIRE(owners.size() == 1);
            CHECK(t.locate(x) == owners[0]);
        }
    }
}

TEST_CASE("overlapping agrees with a linear scan") {
    std::mt19937_64 rng(7);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const PartitionTree t = random_tree(seed, 80);
        const Box& r = t.root_box();
        for (int k = 0; k < 300; ++k) {
            std::vector<double> lo, hi;
            for (std::size_t i = 0; i < 3; ++i) {
                double a = sample_coord(rng, r.lows[i], r.highs[i]);
                double b = rng() % 5 == 0 ? a : sample_coord(rng, r.lows[i], r.highs[i]);
                if (a > b) std::swap(a, b);
                lo.push_back(a);
                hi.push_back(b);
            }
            const Box q(lo, hi);
            std::vector<CellId> expect;
            for (CellId id : t.leaves()) {
                if (intersects(t.cell(id).box, q)) expect.push_back(id);
            }
            auto got = t.overlapping(q);
            std::sort(got.begin(), got.end());
            CHECK(got == expect);
        }
    }
}

TEST_CASE("locate is stable under splits") {
    std::mt19937_64 rng(3);
    PartitionTree t(Box({0, 0}, {1, 1}));
    std::vector<std::vector<double>> pts;
    for (int k = 0; k < 200; ++k) pts.push_back({sample_coord(rng, 0, 1), sample_coord(rng, 0, 1)});
    for (int s = 0; s < 100; ++s) {
        std::vector<CellId> before;
        for (const auto& p : pts) before.push_back(t.locate(p));
        const auto leaves = t.leaves();
        const std::size_t dims[] = {rng() % 2};
        t.split(leaves[rng() % leaves.size()], dims);
        for (std::size_t k = 0; k < pts.size(); ++k) CHECK(t.is_descendant(t.locate(pts[k]), before[k]));
    }
}

TEST_CASE("closed high mask") {
    PartitionTree t(Box({0, 0}, {1, 1}));
    const std::size_t dims[] = {0, 1};
    const auto kids = t.split(t.root(), dims);
    CHECK(t.closed_high_mask(kids[0]) == 0);
    CHECK(t.closed_high_mask(kids[1]) == 0b01);
    CHECK(t.closed_high_mask(kids[2]) == 0b10);
    CHECK(t.closed_high_mask(kids[3]) == 0b11);
}
