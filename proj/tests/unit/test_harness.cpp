#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "chmcts/chvi.hpp"
#include "chmcts/gdst.hpp"
#include "chmcts/harness.hpp"
#include "oracles.hpp"

using namespace chmcts;

namespace {

std::string temp_dir(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("chmcts_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p.string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ExperimentConfig fixture_config(const std::string& fx, std::vector<std::string> strategies) {
    ExperimentConfig c;
    c.instance.fixture = fx;
    c.strategies = std::move(strategies);
    return c;
}

} // namespace

TEST_SUITE("harness") {

TEST_CASE("lcr examples") {
    const PointSet front(2, {{1, 0}, {0, 1}});
    CHECK(lcr_per_trial(front, WeightVector{0.3, 0.7}, Point{0, 1}) == 0.0);
    for (double l : {0.0, 0.2, 0.5, 0.6, 0.9, 1.0}) {
        CHECK(lcr_per_trial(front, WeightVector{l, 1 - l}, Point{0, 1}) ==
              doctest::Approx(std::max(0.0, 2 * l - 1)));
    }
    Rng rng(1);
    double sum = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) sum += lcr_per_trial(front, WeightVector::sample(2, rng), Point{0, 1});
    CHECK(sum / n == doctest::Approx(0.25).epsilon(0.02));

    const Momdp th = fixture("theorem1");
    DeterministicPolicy pi(th.num_states(), 1);
    pi.set(th.initial_state(), 0, 1);
    CHECK(lcr_per_trial(front, WeightVector{0.8, 0.2}, th, pi) == doctest::Approx(0.6));
    CHECK_THROWS(lcr_per_trial(PointSet(2), WeightVector{0.5, 0.5}, Point{0, 0}));
}

TEST_CASE("pareto gap against the epsilon grid") {
    const PointSet f(2, {{0, 1}, {1, 0}});
    CHECK(pareto_gap(f, Point{1, 0}) == 0.0);
    CHECK(pareto_gap(f, Point{0, 0}) == 0.0);
    // the grid oracle bounds the infimum from above by one step
    CHECK(oracle::psg_eps_grid(f.points(), {0, 0}) <= 1e-3);
    CHECK(pareto_gap(PointSet(2, {{1, 1}}), Point{0.5, 0.5}) == 0.5);
    CHECK(oracle::psg_eps_grid({{1, 1}}, {0.5, 0.5}) == doctest::Approx(0.5));

    Rng rng(6);
    for (int t = 0; t < 300; ++t) {
        std::vector<Point> pts;
        for (std::size_t i = 0, n = 1 + rng.below(6); i < n; ++i) pts.push_back({rng.uniform(), rng.uniform()});
        const auto front = prune_pareto(PointSet::from_points(pts));
        const Point v{rng.uniform(), rng.uniform()};
        const double g = pareto_gap(front, v);
        const double o = oracle::psg_eps_grid(front.points(), v);
        CHECK(std::abs(g - o) <= 1e-3 + 1e-12);
    }
    CHECK(pareto_regret({{1, 1}, {0.5, 0.5}, {0, 0}}, PointSet(2, {{1, 1}})) == doctest::Approx(1.5));
    CHECK_THROWS(pareto_gap(PointSet(2), Point{0, 0}));
}

TEST_CASE("mean_ci and deciles") {
    const auto m = mean_ci({1, 2, 3, 4});
    CHECK(m.mean == 2.5);
    CHECK(m.half_width == doctest::Approx(1.96 * std::sqrt(5.0 / 3.0 / 4.0)));
    CHECK(mean_ci({}).n == 0);
    std::vector<double> xs(100);
    for (int i = 0; i < 100; ++i) xs[i] = i;
    const auto [f, l] = decile_means(xs);
    CHECK(f == 4.5);
    CHECK(l == 94.5);
}

TEST_CASE("config parsing") {
    const auto c = experiment_config_from_json(R"({"experiment":"offline","instance":{"columns":4,"noise":0.1,"seed":3},
        "strategies":["zooming","pareto-ucb"],"backup_budget":500,"replications":2,"estimator":"exact","out_dir":"x"})");
    CHECK(c.experiment == "offline");
    CHECK(c.instance.columns == 4);
    CHECK(c.instance.noise == 0.1);
    CHECK(c.strategies.size() == 2);
    CHECK(c.backup_budget == 500);
    CHECK(c.estimator == Estimator::exact);
    const auto back = experiment_config_from_json(experiment_config_to_json(c));
    CHECK(experiment_config_to_json(back) == experiment_config_to_json(c));

    CHECK_THROWS_WITH(experiment_config_from_json(R"({"trials":"many"})"), doctest::Contains("trials"));
    CHECK_THROWS_WITH(experiment_config_from_json(R"({"strategies":["greedy"]})"), doctest::Contains("greedy"));
    CHECK_THROWS_WITH(experiment_config_from_json("[1,2"), doctest::Contains("JSON"));
    CHECK_THROWS_WITH(load_experiment_config("/no/such/cfg.json"), doctest::Contains("/no/such/cfg.json"));
}

TEST_CASE("regret experiment output") {
    auto cfg = fixture_config("theorem1", {"zooming", "hypervolume"});
    cfg.trials = 200;
    cfg.replications = 2;
    cfg.out_dir = temp_dir("regret");
    const auto r = run_regret_experiment(cfg);
    CHECK(r.true_ccs == PointSet(2, {{1, 0}, {0, 1}}));
    CHECK(r.runs.size() == 4);
    CHECK(r.csv.rfind("trial,strategy,replication,context_w0,cum_regret\n", 0) == 0);
    CHECK(std::count(r.csv.begin(), r.csv.end(), '\n') == 1 + 4 * 200);
    CHECK(slurp(cfg.out_dir + "/regret.csv") == r.csv);
    CHECK(std::filesystem::exists(cfg.out_dir + "/regret.svg"));
    CHECK(std::filesystem::exists(cfg.out_dir + "/regret_summary.json"));
    // common random numbers: both strategies see the same contexts
    CHECK(r.runs[0].context_w0 == r.runs[2].context_w0);
    CHECK(r.runs[0].context_w0 != r.runs[1].context_w0);

    // same seed, same bytes; different seed, different bytes
    RunOptions two;
    two.workers = 2;
    two.write_files = false;
    CHECK(run_regret_experiment(cfg, two).csv == r.csv);
    cfg.seed = 99;
    CHECK(run_regret_experiment(cfg, two).csv != r.csv);

    // adding replications leaves earlier ones untouched
    cfg.seed = 0;
    cfg.replications = 3;
    const auto more = run_regret_experiment(cfg, two);
    CHECK(more.runs[0].cum_regret == r.runs[0].cum_regret);
    CHECK(more.runs[1].cum_regret == r.runs[1].cum_regret);
}

TEST_CASE("zero trials give an empty curve") {
    auto cfg = fixture_config("example1", {"zooming"});
    cfg.trials = 0;
    cfg.out_dir = temp_dir("empty");
    const auto r = run_regret_experiment(cfg);
    CHECK(r.runs.at(0).regret.empty());
    CHECK(r.csv == "trial,strategy,replication,context_w0,cum_regret\n");
}

TEST_CASE("exact estimator curves are nondecreasing") {
    auto cfg = fixture_config("example1", {"zooming", "hypervolume", "chebychev", "pareto-ucb"});
    cfg.trials = 300;
    cfg.estimator = Estimator::exact;
    RunOptions o;
    o.write_files = false;
    const auto r = run_regret_experiment(cfg, o);
    for (const auto& run : r.runs) {
        for (std::size_t k = 1; k < run.cum_regret.size(); ++k) CHECK(run.cum_regret[k] >= run.cum_regret[k - 1] - 1e-12);
    }
}

TEST_CASE("realized and exact estimators agree on theorem1") {
    auto cfg = fixture_config("theorem1", {"pareto-ucb"});
    cfg.trials = 100000;
    RunOptions o;
    o.write_files = false;
    const auto real = run_regret_experiment(cfg, o);
    cfg.estimator = Estimator::exact;
    const auto exact = run_regret_experiment(cfg, o);
    const auto& a = real.runs[0].regret;
    const auto& b = exact.runs[0].regret;
    double diff = 0, sq = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) / a.size();
        sq += (a[i] - b[i]) * (a[i] - b[i]) / a.size();
    }
    const double se = std::sqrt((sq - diff * diff) / a.size());
    CHECK(std::abs(diff) <= 3 * se + 1e-12);
}

TEST_CASE("infeasible ground truth") {
    ExperimentConfig cfg;
    cfg.instance.columns = 8;
    cfg.exact_limit = 10;
    cfg.trials = 1;
    CHECK_THROWS_WITH(run_regret_experiment(cfg), doctest::Contains("reduce the number of columns"));
}

TEST_CASE("offline experiment") {
    ExperimentConfig cfg;
    cfg.experiment = "offline";
    cfg.instance.columns = 3;
    cfg.instance.noise = 0.0;
    cfg.strategies = {"zooming", "hypervolume"};
    cfg.backup_budget = 3000;
    cfg.checkpoints = 20;
    cfg.out_dir = temp_dir("offline");
    const auto r = run_offline_experiment(cfg);
    CHECK(r.csv.rfind("backups,strategy,replication,hypervolume\n", 0) == 0);
    GdstConfig g;
    g.columns = 3;
    CHECK(r.true_hypervolume == doctest::Approx(hypervolume(true_ccs(generate(g).normalized), Point{0, 0})));
    std::map<std::string, double> last;
    for (const auto& row : r.rows) {
        if (row.strategy == "chvi") continue;
        if (last.count(row.strategy)) CHECK(row.hypervolume >= last[row.strategy] - 1e-12);
        last[row.strategy] = row.hypervolume;
        CHECK(row.hypervolume <= r.true_hypervolume + 1e-9);
    }
    CHECK(std::filesystem::exists(cfg.out_dir + "/offline.svg"));
}

TEST_CASE("offline smoke on a wide noisy instance") {
    ExperimentConfig cfg;
    cfg.experiment = "offline";
    cfg.instance.columns = 30;
    cfg.instance.noise = 0.01;
    cfg.strategies = {"zooming"};
    cfg.backup_budget = 25000;
    cfg.node_cap = 200000;
    cfg.chvi_rows = false; // an exact solve of this instance takes many minutes
    RunOptions o;
    o.write_files = false;
    const auto r = run_offline_experiment(cfg, o);
    REQUIRE(!r.rows.empty());
    CHECK(r.rows.back().backups >= 25000);
}

TEST_CASE("scalability experiment") {
    ExperimentConfig cfg;
    cfg.experiment = "scale";
    cfg.strategies = {"zooming", "pareto-ucb"};
    cfg.scale_columns = {3, 4};
    cfg.backup_budget = 2000;
    cfg.out_dir = temp_dir("scale");
    const auto r = run_scalability_experiment(cfg);
    CHECK(r.csv.rfind("columns,noise,strategy,ratio,replication\n", 0) == 0);
    int exact_rows = 0;
    for (const auto& row : r.rows) {
        CHECK(row.ratio >= 0.0);
        CHECK(row.ratio <= 1.0 + 1e-9);
        if (row.strategy == "chvi") {
            ++exact_rows;
            CHECK(row.ratio == doctest::Approx(1.0).epsilon(1e-6));
        }
    }
    CHECK(exact_rows == 2);
    CHECK(std::filesystem::exists(cfg.out_dir + "/scale.svg"));
}

TEST_CASE("format and svg helpers") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(-0.0) == "0");
    CHECK(format_number(1e-7) == "1e-07");
    const auto svg = line_chart_svg("t", "x", "y", {{"a", {1, 2}, {3, 4}}});
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(line_chart_svg("t", "x", "y", {}).find("</svg>") != std::string::npos);
    std::vector<int> hits(50, 0);
    parallel_for(50, 3, [&](std::size_t i) { hits[i] += 1; });
    CHECK(std::count(hits.begin(), hits.end(), 1) == 50);
    CHECK(name_hash("zooming") != name_hash("hypervolume"));
}

} // TEST_SUITE
