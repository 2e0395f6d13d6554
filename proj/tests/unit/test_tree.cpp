#include <doctest.h>

#include <functional>

#include "chmcts/chvi.hpp"
#include "chmcts/gdst.hpp"
#include "chmcts/tree.hpp"

using namespace chmcts;

namespace {

// s0 -a0-> {s1 w.p. p, s2 w.p. 1-p}, reward (1,0); s1, s2 loop with zero reward.
Momdp split_model(double p, int horizon = 2) {
    ModelDescription d;
    d.num_states = 3;
    d.num_actions = 1;
    d.num_objectives = 2;
    d.horizon = horizon;
    d.rewards = {{0, 0, {1, 0}}, {1, 0, {0, 0}}, {2, 0, {0, 0}}};
    d.transitions = {{0, 0, {{1, p}, {2, 1 - p}}}, {1, 0, {{1, 1.0}}}, {2, 0, {{2, 1.0}}}};
    return Momdp(d);
}

// s0 -> s1 -> s2 -> s3 (terminal), one action, reward (1,2) per step.
Momdp chain_model() {
    ModelDescription d;
    d.num_states = 4;
    d.num_actions = 1;
    d.num_objectives = 2;
    d.horizon = 3;
    d.terminals = {3};
    for (StateId s = 0; s < 3; ++s) {
        d.rewards.push_back({s, 0, {1, 2}});
        d.transitions.push_back({s, 0, {{s + 1, 1.0}}});
    }
    return Momdp(d);
}

GdstInstance gdst(int c, double p, std::uint64_t seed = 0) {
    GdstConfig cfg;
    cfg.columns = c;
    cfg.noise = p;
    cfg.seed = seed;
    return generate(cfg);
}

} // namespace

TEST_SUITE("tree") {

TEST_CASE("example1 converges to the front with zooming") {
    const Momdp ex = fixture("example1");
    auto z = make_strategy("zooming", ex);
    Search s(ex, *z, SearchConfig::offline(), 7);
    Rng ctx(1);
    const auto& st = s.run(Budget::trials(1000), ctx);
    CHECK(extract_root_ccs(s) == PointSet(2, {{0, 6}, {6, 0}}));
    CHECK(st.root_labelled);
    CHECK(st.trials_run < 1000); // labelling stops early
}

TEST_CASE("one trial expands one root-to-leaf path") {
    const Momdp ex = fixture("example1");
    auto hv = make_strategy("hypervolume", ex);
    Search s(ex, *hv, SearchConfig::offline(), 0);
    s.run_trial(WeightVector{0.5, 0.5});
    // first unexpanded action is a1, which ends in a terminal state
    CHECK(s.tree().num_decisions() == 2);
    CHECK(s.tree().num_chances() == 1);
    CHECK(s.tree().decision(1).leaf);
    CHECK(s.root_ccs() == PointSet(2, {{0, 4}}));

    const auto g = gdst(3, 0.0);
    auto hv2 = make_strategy("hypervolume", g.normalized);
    Search t(g.normalized, *hv2, SearchConfig::offline(), 0);
    t.run_trial(WeightVector{0.5, 0.5});
    // every decision node but the root has exactly one parent on the path
    NodeId cur = 0;
    int len = 0;
    while (!t.tree().decision(cur).leaf) {
        int expanded = 0;
        NodeId next = kNoNode;
        for (NodeId c : t.tree().decision(cur).children) {
            if (c == kNoNode) continue;
            ++expanded;
            for (NodeId k : t.tree().chance(c).children) {
                if (k != kNoNode) next = k;
            }
        }
        CHECK(expanded == 1);
        cur = next;
        ++len;
    }
    CHECK(std::size_t(len + 1) == t.tree().num_decisions());
}

TEST_CASE("zero budget is an error") {
    const Momdp ex = fixture("example1");
    auto z = make_strategy("zooming", ex);
    Search s(ex, *z, SearchConfig::offline(), 0);
    Rng ctx(0);
    CHECK_THROWS_AS(s.run(Budget::trials(0), ctx), std::invalid_argument);
}

TEST_CASE("select_outcome frequencies and labelled restriction") {
    const Momdp m = split_model(0.99);
    SearchTree tree(m, PruneMode::ccs);
    tree.add_decision(0, 0, false);
    const NodeId ch = tree.add_chance(0, 0);
    Rng rng(3);
    int first = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) first += select_outcome(tree, ch, false, rng) == 0;
    CHECK(std::abs(first / double(n) - 0.99) <= 0.005);

    // child 0 labelled, child 1 absent: with labelling only slot 1 is drawn
    SearchTree t2(m, PruneMode::ccs);
    t2.add_decision(0, 0, true);
    const NodeId c2 = t2.add_chance(0, 0);
    const NodeId leaf = t2.add_decision(1, 2, true); // depth H: labelled leaf
    t2.link_outcome(c2, 0, leaf);
    for (int i = 0; i < 1000; ++i) CHECK(select_outcome(t2, c2, true, rng) == 1);

    const Momdp det = chain_model();
    SearchTree t3(det, PruneMode::ccs);
    t3.add_decision(0, 0, false);
    const NodeId c3 = t3.add_chance(0, 0);
    for (int i = 0; i < 100; ++i) CHECK(select_outcome(t3, c3, false, rng) == 0);
}

TEST_CASE("backup_decision") {
    const Momdp ex = fixture("example1");
    SearchTree tree(ex, PruneMode::ccs);
    tree.add_decision(0, 0, false);
    const PointSet qs[3] = {PointSet(2, {{0, 4}}), PointSet(2, {{4, 0}}), PointSet(2, {{0, 6}, {6, 0}})};
    for (ActionId a = 0; a < 3; ++a) tree.chance_mut(tree.add_chance(0, a)).q = qs[a];
    CHECK(tree.backup_decision(0, false));
    CHECK(tree.decision(0).value == PointSet(2, {{0, 6}, {6, 0}}));
    CHECK_FALSE(tree.backup_decision(0, false));

    SearchTree one(ex, PruneMode::ccs);
    one.add_decision(0, 0, false);
    one.chance_mut(one.add_chance(0, 1)).q = PointSet(2, {{4, 0}});
    one.backup_decision(0, false);
    CHECK(one.decision(0).value == PointSet(2, {{4, 0}}));

    SearchTree none(ex, PruneMode::ccs);
    none.add_decision(0, 0, false);
    CHECK_THROWS(none.backup_decision(0, false));
}

TEST_CASE("backup_chance") {
    const Momdp m = split_model(0.5);
    SearchTree tree(m, PruneMode::pareto);
    tree.add_decision(0, 0, false);
    const NodeId ch = tree.add_chance(0, 0);
    CHECK_THROWS(tree.backup_chance(ch, true, false));

    const NodeId a = tree.add_decision(1, 1, false);
    tree.decision_mut(a).value = PointSet(2, {{0, 2}});
    tree.link_outcome(ch, 0, a);
    CHECK(tree.backup_chance(ch, true, false));
    CHECK(tree.chance(ch).q == PointSet(2, {{1, 2}}));

    const NodeId b = tree.add_decision(2, 1, false);
    tree.decision_mut(b).value = PointSet(2, {{2, 0}, {0, 0}});
    tree.link_outcome(ch, 1, b);
    CHECK(tree.backup_chance(ch, true, false));
    CHECK(tree.chance(ch).q == PointSet(2, {{2, 1}}));
    CHECK_FALSE(tree.backup_chance(ch, true, false));

    // without renormalization a missing child counts as {0}
    SearchTree raw(m, PruneMode::pareto);
    raw.add_decision(0, 0, false);
    const NodeId rc = raw.add_chance(0, 0);
    const NodeId ra = raw.add_decision(1, 1, false);
    raw.decision_mut(ra).value = PointSet(2, {{0, 2}});
    raw.link_outcome(rc, 0, ra);
    raw.backup_chance(rc, false, false);
    CHECK(raw.chance(rc).q == PointSet(2, {{1, 1}}));
}

TEST_CASE("propagate_backups") {
    // fresh chain: all nodes labelled after one pass from the labelled leaf
    const Momdp chain = chain_model();
    auto hv = make_strategy("hypervolume", chain);
    SearchConfig cfg = SearchConfig::offline();
    Search s(chain, *hv, cfg, 0);
    const auto rec = s.run_trial(WeightVector{0.5, 0.5});
    CHECK(rec.backups == 6); // 3 chance + 3 decision
    CHECK(s.stats().root_labelled);
    CHECK(s.tree().labelled_count() == s.tree().size());
    CHECK(s.root_ccs() == PointSet(2, {{3, 6}}));

    // a converged subtree revisited: the first backup changes nothing
    const Momdp ex = fixture("example1");
    SearchConfig no_label = SearchConfig::offline();
    no_label.labelling = false;
    no_label.stop_when_labelled = false;
    auto z = make_strategy("hypervolume", ex);
    Search t(ex, *z, no_label, 0);
    for (int i = 0; i < 50; ++i) t.run_trial(WeightVector{0.5, 0.5});
    CHECK(t.run_trial(WeightVector{0.5, 0.5}).backups == 1);

    // without pruning every step is backed up
    SearchConfig full = no_label;
    full.backup_pruning = false;
    auto z2 = make_strategy("hypervolume", ex);
    Search u(ex, *z2, full, 0);
    for (int i = 0; i < 50; ++i) u.run_trial(WeightVector{0.5, 0.5});
    const auto r = u.run_trial(WeightVector{0.5, 0.5});
    CHECK((r.backups == 2 || r.backups == 4));
}

TEST_CASE("labelled root equals the exact ccs") {
    std::vector<std::pair<std::string, Momdp>> models{{"example1", fixture("example1")},
                                                      {"theorem1", fixture("theorem1")}};
    // the full tree has to be enumerated, so keep GDST horizons short
    auto cut = [](const GdstInstance& g, int h) {
        ModelDescription d = g.normalized.describe();
        d.horizon = h;
        return Momdp(d);
    };
    models.emplace_back("gdst2", cut(gdst(2, 0.0, 1), 5));
    models.emplace_back("gdst3", cut(gdst(3, 0.0, 1), 4));
    models.emplace_back("noisy", cut(gdst(2, 0.2, 1), 3));
    for (const auto& [name, m] : models) {
        for (const auto& strat : strategy_names()) {
            CAPTURE(name);
            CAPTURE(strat);
            auto st = make_strategy(strat, m);
            Search s(m, *st, SearchConfig::offline(), 11);
            Rng ctx(2);
            s.run(Budget::trials(200000), ctx);
            REQUIRE(s.stats().root_labelled);
            CHECK(approx_equal(extract_root_ccs(s), true_ccs(m), 1e-12));
        }
    }
}

TEST_CASE("estimates never exceed the exact sets") {
    const auto g = gdst(3, 0.3, 2);
    const Momdp& m = g.normalized;
    const auto sol = chvi_solve(m);
    SearchConfig cfg = SearchConfig::offline();
    cfg.renormalize = false;
    auto st = make_strategy("zooming", m);
    Search s(m, *st, cfg, 5);
    Rng ctx(9);
    for (int round = 0; round < 20; ++round) {
        s.run(Budget::trials(50), ctx);
        const auto& tree = s.tree();
        for (NodeId id = 0; id < tree.num_decisions(); ++id) {
            const auto& d = tree.decision(id);
            const auto& truth = sol.value_set(d.state, d.depth);
            for (std::size_t i = 0; i < d.value.size(); ++i) {
                // below the convex hull of the exact set: no weight prefers it
                double worst = -1e9;
                for (int k = 0; k <= 200; ++k) {
                    const WeightVector w{k / 200.0, 1 - k / 200.0};
                    worst = std::max(worst, linear_scalarize(d.value[i], w) - max_scalarized_value(truth, w));
                }
                CHECK(worst <= 1e-9);
            }
        }
        if (s.stats().root_labelled) break;
    }
}

TEST_CASE("node count and visit counts") {
    const auto g = gdst(3, 0.01, 3);
    const Momdp& m = g.normalized;
    for (const auto& strat : strategy_names()) {
        auto st = make_strategy(strat, m);
        Search s(m, *st, SearchConfig::online(), 4);
        Rng ctx(0);
        s.run(Budget::trials(300), ctx);
        const auto& t = s.tree();
        CHECK(t.num_decisions() <= std::size_t(300) * m.horizon() + 1);
        for (NodeId id = 0; id < t.num_decisions(); ++id) {
            const auto& d = t.decision(id);
            for (NodeId c : d.children) {
                if (c == kNoNode) continue;
                CHECK(t.chance(c).visits <= d.visits);
                for (NodeId k : t.chance(c).children) {
                    if (k != kNoNode) CHECK(t.decision(k).visits <= t.chance(c).visits);
                }
            }
        }
        CHECK(t.decision(0).visits == 300);
    }
}

TEST_CASE("node cap is respected") {
    const auto g = gdst(5, 0.01, 0);
    auto st = make_strategy("zooming", g.normalized);
    SearchConfig cfg = SearchConfig::online();
    cfg.node_cap = 500;
    Search s(g.normalized, *st, cfg, 1);
    Rng ctx(0);
    s.run(Budget::trials(200), ctx);
    CHECK(s.tree().size() <= 500);
    CHECK(s.stats().trials_run == 200);
}

TEST_CASE("backup and time budgets") {
    const auto g = gdst(4, 0.01, 0);
    auto st = make_strategy("hypervolume", g.normalized);
    Search s(g.normalized, *st, SearchConfig::offline(), 1);
    Rng ctx(0);
    const auto& stats = s.run(Budget::backups(5000), ctx);
    CHECK(stats.backups_performed >= 5000);
    CHECK(stats.backups_performed < 5000 + 4 * std::uint64_t(g.horizon()) + 2);

    auto st2 = make_strategy("hypervolume", g.normalized);
    Search t(g.normalized, *st2, SearchConfig::online(), 1);
    const auto& ts = t.run(Budget::seconds(0.05), ctx);
    CHECK(ts.trials_run > 0);
    CHECK(ts.wall_time >= 0.05);
}

TEST_CASE("trial hook and realized returns") {
    const Momdp th = fixture("theorem1");
    auto st = make_strategy("hypervolume", th);
    Search s(th, *st, SearchConfig::online(), 0);
    Rng ctx(0);
    std::vector<TrialRecord> log;
    s.run(Budget::trials(10), ctx, [&](const TrialRecord& r, const SearchStats&) { log.push_back(r); });
    REQUIRE(log.size() == 10);
    for (std::size_t i = 0; i < log.size(); ++i) {
        CHECK(log[i].index == i);
        CHECK((log[i].realized == Point{1, 0} || log[i].realized == Point{0, 1}));
    }
}

TEST_CASE("exploration value") {
    const Momdp th = fixture("theorem1");
    auto st = make_strategy("hypervolume", th);
    Search s(th, *st, SearchConfig::online(), 0);
    CHECK(s.exploration_value(WeightVector{0.5, 0.5}) == Point{1, 0});
    s.run_trial(WeightVector{0.5, 0.5});
    CHECK(s.exploration_value(WeightVector{0.5, 0.5}) == Point{0, 1});

    // outside the tree: uniformly random actions
    const Momdp ex = fixture("example1");
    auto z = make_strategy("hypervolume", ex);
    SearchConfig one_node = SearchConfig::online();
    one_node.node_cap = 1;
    Search u(ex, *z, one_node, 0);
    const Point v = u.exploration_value(WeightVector{0.5, 0.5});
    // a1 is chosen first at the root (unexpanded), a terminal (0,4)
    CHECK(v == Point{0, 4});
}

TEST_CASE("tree snapshot") {
    const Momdp ex = fixture("example1");
    auto z = make_strategy("zooming", ex);
    Search s(ex, *z, SearchConfig::offline(), 7);
    Rng ctx(1);
    s.run(Budget::trials(20), ctx);
    const auto j = s.tree().to_json(3);
    CHECK(j.find("\"truncated\": true") != std::string::npos);
    CHECK(s.tree().to_json(100).find("\"truncated\": false") != std::string::npos);
}

} // TEST_SUITE
