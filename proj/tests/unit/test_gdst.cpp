#include <doctest.h>

#include "chmcts/chvi.hpp"
#include "chmcts/gdst.hpp"
#include "oracles.hpp"

using namespace chmcts;

namespace {

GdstInstance make(int c, double p, std::uint64_t seed = 0) {
    GdstConfig cfg;
    cfg.columns = c;
    cfg.noise = p;
    cfg.seed = seed;
    return generate(cfg);
}

} // namespace

TEST_SUITE("gdst") {

TEST_CASE("single column") {
    const auto inst = make(1, 0.0);
    CHECK(inst.cols == 1);
    REQUIRE(inst.treasures.size() == 1);
    CHECK(inst.treasures[0].row == 1);
    CHECK(inst.treasures[0].col == 0);
    CHECK(true_ccs(inst.normalized).size() == 1);
    CHECK(inst.horizon() == 100);
}

TEST_CASE("p = 0 is deterministic") {
    const auto inst = make(4, 0.0, 3);
    const Momdp& m = inst.normalized;
    for (StateId s = 0; s < m.num_states(); ++s) {
        if (m.is_terminal(s)) continue;
        for (ActionId a = 0; a < 4; ++a) CHECK(m.successors(s, a).size() == 1);
    }
}

TEST_CASE("layout") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto inst = make(5, 0.01, seed);
        CHECK(inst.treasures.size() == 5);
        CHECK(inst.depth.front() == 1);
        for (int c = 1; c < 5; ++c) {
            const int inc = inst.depth[c] - inst.depth[c - 1];
            CHECK(inc >= 0);
            CHECK(inc <= 3);
            CHECK(inst.treasures[c].value > inst.treasures[c - 1].value);
        }
        CHECK(inst.treasures.front().value >= 1.0);
        CHECK(inst.treasures.back().value <= 1000.0);
        CHECK(inst.horizon() == 500);
        CHECK(inst.normalized.num_states() == std::size_t(inst.rows * inst.cols));
    }
}

TEST_CASE("explicit layout and validation") {
    GdstConfig cfg;
    cfg.columns = 3;
    cfg.depth_increments = std::vector<int>{0, 2};
    cfg.treasure_values = std::vector<double>{1, 50, 1000};
    const auto inst = generate(cfg);
    CHECK(inst.depth == std::vector<int>{1, 1, 3});
    CHECK(inst.treasures[1].value == 50);

    cfg.depth_increments = std::vector<int>{0, 4};
    CHECK_THROWS(generate(cfg));
    cfg.depth_increments.reset();
    cfg.treasure_values = std::vector<double>{5, 4, 1000};
    CHECK_THROWS(generate(cfg));
    GdstConfig bad;
    bad.noise = 1.5;
    CHECK_THROWS(generate(bad));
}

TEST_CASE("slip transitions") {
    const auto inst = make(4, 0.01, 1);
    const Momdp& m = inst.normalized;
    for (StateId s = 0; s < m.num_states(); ++s) {
        if (m.is_terminal(s)) continue;
        for (ActionId a = 0; a < 4; ++a) {
            const auto succ = m.successors(s, a);
            CHECK(succ.size() <= 5);
            double sum = 0;
            for (const auto& x : succ) sum += x.probability;
            CHECK(sum == doctest::Approx(1.0));
        }
    }
    // from the start, moving right: 0.99 + 0.0025 intended, walls keep 2 * 0.0025 at start
    const StateId s0 = inst.state_of(0, 0);
    double right = 0, stay = 0;
    for (const auto& x : m.successors(s0, move_right)) {
        if (x.state == inst.state_of(0, 1)) right = x.probability;
        if (x.state == s0) stay = x.probability;
    }
    CHECK(right == doctest::Approx(0.9925));
    CHECK(stay == doctest::Approx(0.005));
}

TEST_CASE("normalization") {
    const auto inst = make(3, 0.0);
    const Momdp& m = inst.normalized;
    const int H = inst.horizon();
    const auto& last = inst.treasures.back();
    CHECK(last.value == 1000.0);
    CHECK(m.terminal_value(inst.state_of(last.row, last.col), 10)[0] == 1.0);
    // arriving at step H uses the whole budget, at H/2 leaves half of it
    CHECK(m.terminal_value(inst.state_of(last.row, last.col), H)[1] == 0.0);
    CHECK(m.terminal_value(inst.state_of(last.row, last.col), H / 2)[1] == doctest::Approx(0.5));

    const Point raw = to_raw_units(inst, Point{1.0, 0.5});
    CHECK(raw[0] == doctest::Approx(1000.0));
    CHECK(raw[1] == doctest::Approx(-H / 2.0));
    const Point back = to_normalized_units(inst, raw);
    CHECK(back[0] == doctest::Approx(1.0));
    CHECK(back[1] == doctest::Approx(0.5));
    CHECK(&normalize(inst) == &inst.normalized);
}

TEST_CASE("raw and normalized fronts correspond") {
    const auto inst = make(3, 0.1, 4);
    const auto raw = true_ccs(inst.raw);
    const auto norm = true_ccs(inst.normalized);
    REQUIRE(raw.size() == norm.size());
    std::vector<Point> mapped;
    for (std::size_t i = 0; i < raw.size(); ++i) mapped.push_back(to_normalized_units(inst, raw[i]));
    // the two solves prune near-degenerate mixtures at different scales
    const auto back = PointSet::from_points(mapped);
    CHECK(back.size() == norm.size());
    for (int k = 0; k <= 100; ++k) {
        const WeightVector w{k / 100.0, 1 - k / 100.0};
        CHECK(max_scalarized_value(back, w) == doctest::Approx(max_scalarized_value(norm, w)).epsilon(1e-9));
    }
}

TEST_CASE("deterministic front matches the test BFS") {
    for (int c : {2, 3, 5, 8}) {
        const auto inst = make(c, 0.0, 7);
        const auto want = oracle::interval_ccs(oracle::gdst_bfs_returns(inst));
        CHECK(oracle::same_points(oracle::as_points(deterministic_front(inst)), want, 1e-12));
    }
}

TEST_CASE("same seed, same bytes") {
    const auto a = make(6, 0.01, 9), b = make(6, 0.01, 9), c = make(6, 0.01, 10);
    CHECK(model_to_json(a.normalized) == model_to_json(b.normalized));
    CHECK(gdst_metadata_json(a) == gdst_metadata_json(b));
    CHECK(model_to_json(a.normalized) != model_to_json(c.normalized));
}

TEST_CASE("utopian point bounds the front") {
    for (int c : {2, 4, 6}) {
        const auto inst = make(c, 0.01, 1);
        const auto ccs = true_ccs(inst.normalized);
        for (std::size_t i = 0; i < ccs.size(); ++i) {
            CHECK(ccs[i][0] <= inst.utopia[0] + 1e-12);
            CHECK(ccs[i][1] <= inst.utopia[1] + 1e-12);
        }
    }
}

TEST_CASE("fixtures") {
    CHECK(true_ccs(fixture("example1")) == PointSet(2, {{0, 6}, {6, 0}}));
    const Momdp th = fixture("theorem1");
    CHECK(th.horizon() == 1);
    CHECK(th.num_actions() == 2);
    // exactly two deterministic policies
    for (ActionId a = 0; a < 2; ++a) {
        DeterministicPolicy pi(th.num_states(), 1);
        pi.set(th.initial_state(), 0, a);
        CHECK(evaluate_policy(th, pi) == (a == 0 ? Point{1, 0} : Point{0, 1}));
    }
    CHECK_THROWS(fixture("nope"));
    CHECK(fixture_names() == std::vector<std::string>{"example1", "theorem1"});
}

TEST_CASE("ascii dump") {
    const auto inst = make(3, 0.0);
    const auto s = ascii_dump(inst);
    CHECK(s.front() == 'S');
    CHECK(std::count(s.begin(), s.end(), '\n') == inst.rows);
}

} // TEST_SUITE
