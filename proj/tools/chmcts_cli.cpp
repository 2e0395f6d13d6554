// chmcts: environment generation, exact solving, tree search and the three
// benchmark experiments.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "chmcts/chvi.hpp"
#include "chmcts/gdst.hpp"
#include "chmcts/harness.hpp"
#include "chmcts/tree.hpp"

using namespace chmcts;
using ojson = nlohmann::ordered_json;

namespace {

// Usage problems found after parsing (bad paths, bad values) exit with 1.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require_readable(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw UsageError(std::string("cannot read ") + what + " '" + path + "'");
}

void require_writable_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) throw UsageError("cannot create output directory '" + dir + "'");
}

std::string path_in(const std::string& dir, const std::string& file) {
    return (std::filesystem::path(dir) / file).string();
}

std::string with_suffix(const std::string& file, const std::string& suffix) {
    std::filesystem::path p(file);
    std::filesystem::path stem = p.parent_path() / p.stem();
    return stem.string() + suffix;
}

ojson manifest_base(const std::string& command, int argc, char** argv) {
    ojson m;
    m["command"] = command;
    std::vector<std::string> args(argv, argv + argc);
    m["argv"] = args;
    return m;
}

void write_manifest(const std::string& path, const ojson& m) { write_text_file(path, m.dump(1) + "\n"); }

// Rate-limited progress on stderr.
class Progress {
public:
    explicit Progress(bool quiet, double interval = 2.0) : quiet_(quiet), interval_(interval) {}

    std::function<void(const std::string&)> callback() {
        if (quiet_) return {};
        return [this](const std::string& msg) {
            std::lock_guard lock(mu_);
            const double t = elapsed();
            if (t - last_ < interval_) return;
            last_ = t;
            std::cerr << "[" << static_cast<long>(t) << "s] " << msg << "\n";
        };
    }

    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    bool quiet_;
    double interval_;
    std::mutex mu_;
    double last_ = -1e9;
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

Momdp model_from_arg(const std::string& model_path, const std::string& fixture_name) {
    if (!fixture_name.empty()) return fixture(fixture_name);
    return load_model(model_path);
}

ojson points_json(const PointSet& s) { return ojson::parse(to_json_string(s)); }

// ---- options shared by the bench commands ---------------------------------------

struct BenchArgs {
    std::string config_path;
    std::vector<std::string> strategies;
    std::optional<std::uint64_t> trials;
    std::optional<std::uint64_t> backup_budget;
    std::optional<std::uint64_t> seed;
    std::optional<int> replications;
    std::optional<std::string> out;
    std::optional<std::string> estimator;
    std::optional<std::string> prune;
    std::optional<std::string> model;
    std::optional<std::string> fixture;
    std::optional<int> columns;
    std::optional<double> noise;
    std::optional<std::uint64_t> env_seed;
    std::vector<int> scale_columns;
};

void add_bench_options(CLI::App* cmd, BenchArgs& a) {
    cmd->add_option("--config", a.config_path, "experiment config JSON");
    cmd->add_option("--strategy", a.strategies, "strategy name(s); repeat or comma separate")->delimiter(',');
    cmd->add_option("--trials", a.trials, "trials per run (regret)");
    cmd->add_option("--backup-budget", a.backup_budget, "backups per run (offline, scale)");
    cmd->add_option("--seed", a.seed, "master seed");
    cmd->add_option("--replications", a.replications, "replications per strategy");
    cmd->add_option("--out", a.out, "output directory");
    cmd->add_option("--estimator", a.estimator, "realized | exact")->check(CLI::IsMember({"realized", "exact"}));
    cmd->add_option("--prune", a.prune, "ccs | pareto")->check(CLI::IsMember({"ccs", "pareto"}));
    cmd->add_option("--model", a.model, "model JSON instead of a GDST instance");
    cmd->add_option("--fixture", a.fixture, "built-in fixture instead of a GDST instance");
    cmd->add_option("--columns", a.columns, "GDST columns");
    cmd->add_option("--noise", a.noise, "GDST slip probability");
    cmd->add_option("--env-seed", a.env_seed, "GDST layout seed");
    cmd->add_option("--scale-columns", a.scale_columns, "column counts for bench-scale")->delimiter(',');
}

ExperimentConfig resolve_config(const BenchArgs& a, const std::string& experiment) {
    ExperimentConfig cfg;
    if (!a.config_path.empty()) {
        require_readable(a.config_path, "config file");
        try {
            cfg = load_experiment_config(a.config_path);
        } catch (const std::invalid_argument& e) {
            throw UsageError(a.config_path + ": " + e.what());
        }
    }
    cfg.experiment = experiment;
    if (!a.strategies.empty()) cfg.strategies = a.strategies;
    if (a.trials) cfg.trials = *a.trials;
    if (a.backup_budget) cfg.backup_budget = *a.backup_budget;
    if (a.seed) cfg.seed = *a.seed;
    if (a.replications) cfg.replications = *a.replications;
    if (a.out) cfg.out_dir = *a.out;
    if (a.estimator) cfg.estimator = parse_estimator(*a.estimator);
    if (a.prune) cfg.prune = parse_prune_mode(*a.prune);
    if (a.model) {
        require_readable(*a.model, "model file");
        cfg.instance.model_path = *a.model;
    }
    if (a.fixture) cfg.instance.fixture = *a.fixture;
    if (a.columns) cfg.instance.columns = *a.columns;
    if (a.noise) cfg.instance.noise = *a.noise;
    if (a.env_seed) cfg.instance.seed = *a.env_seed;
    if (!a.scale_columns.empty()) cfg.scale_columns = a.scale_columns;

    const auto names = strategy_names();
    for (const auto& s : cfg.strategies) {
        if (std::find(names.begin(), names.end(), s) == names.end()) throw UsageError("unknown strategy '" + s + "'");
    }
    if (!cfg.instance.fixture.empty()) {
        const auto fx = fixture_names();
        if (std::find(fx.begin(), fx.end(), cfg.instance.fixture) == fx.end()) {
            throw UsageError("unknown fixture '" + cfg.instance.fixture + "'");
        }
    }
    if (!cfg.instance.model_path.empty()) require_readable(cfg.instance.model_path, "model file");
    if (cfg.replications < 1) throw UsageError("--replications must be >= 1");
    if (cfg.instance.columns < 1) throw UsageError("--columns must be >= 1");
    require_writable_dir(cfg.out_dir);
    return cfg;
}

ojson bench_manifest(const ExperimentConfig& cfg, const std::string& command, int workers, int argc, char** argv) {
    ojson m = manifest_base(command, argc, argv);
    m["config"] = ojson::parse(experiment_config_to_json(cfg));
    m["workers"] = workers;
    m["seed_scheme"] =
        "replication r: derive_seed(seed, r); contexts: derive_seed(rep, 0); search: derive_seed(rep, fnv1a(strategy))";
    ojson seeds = ojson::array();
    for (int r = 0; r < cfg.replications; ++r) {
        const std::uint64_t rep = derive_seed(cfg.seed, static_cast<std::uint64_t>(r));
        ojson e;
        e["replication"] = r;
        e["replication_seed"] = rep;
        e["context_seed"] = derive_seed(rep, 0);
        for (const auto& s : cfg.strategies) e["search_seed"][s] = derive_seed(rep, name_hash(s));
        seeds.push_back(e);
    }
    m["derived_seeds"] = seeds;
    return m;
}

int default_workers() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Convex hull Monte-Carlo tree search for multi-objective MDPs"};
    app.require_subcommand(1);
    bool quiet = false;
    app.add_flag("-q,--quiet", quiet, "no progress on stderr");

    // gen-env
    auto* gen = app.add_subcommand("gen-env", "generate a GDST instance");
    int g_columns = 3;
    double g_noise = 0.0;
    std::uint64_t g_seed = 0;
    std::string g_out;
    bool g_raw = false;
    gen->add_option("--columns", g_columns, "number of columns")->check(CLI::PositiveNumber);
    gen->add_option("--noise", g_noise, "slip probability")->check(CLI::Range(0.0, 1.0));
    gen->add_option("--seed", g_seed, "layout seed");
    gen->add_option("--out", g_out, "model JSON path")->required();
    gen->add_flag("--raw", g_raw, "write raw reward units instead of normalized ones");

    // fixtures
    auto* fix = app.add_subcommand("fixtures", "write the built-in fixtures as model files");
    std::string f_out = "data/fixtures";
    fix->add_option("--out", f_out, "output directory");

    // solve
    auto* solve = app.add_subcommand("solve", "exact CHVI solve");
    std::string s_model, s_fixture, s_out, s_prune = "ccs";
    bool s_table = false;
    solve->add_option("--model", s_model, "model JSON");
    solve->add_option("--fixture", s_fixture, "built-in fixture");
    solve->add_option("--out", s_out, "output directory for ccs.json and manifest.json");
    solve->add_option("--prune", s_prune, "ccs | pareto")->check(CLI::IsMember({"ccs", "pareto"}));
    solve->add_flag("--full-table", s_table, "include every V(s,t) in the JSON dump");

    // search
    auto* search = app.add_subcommand("search", "tree search from the initial state");
    std::string t_model, t_fixture, t_out, t_prune = "ccs", t_strategy = "zooming";
    std::optional<std::uint64_t> t_trials, t_backups;
    std::uint64_t t_seed = 0;
    bool t_online = false;
    search->add_option("--model", t_model, "model JSON");
    search->add_option("--fixture", t_fixture, "built-in fixture");
    search->add_option("--strategy", t_strategy, "zooming | hypervolume | chebychev | pareto-ucb");
    search->add_option("--trials", t_trials, "trial budget");
    search->add_option("--backup-budget", t_backups, "backup budget");
    search->add_option("--seed", t_seed, "seed");
    search->add_option("--out", t_out, "output directory for ccs.json and manifest.json");
    search->add_option("--prune", t_prune, "ccs | pareto")->check(CLI::IsMember({"ccs", "pareto"}));
    search->add_flag("--online", t_online, "online configuration (no labelling, rollouts)");

    // bench
    int workers = default_workers();
    BenchArgs regret_args, offline_args, scale_args;
    auto* b_regret = app.add_subcommand("bench-regret", "online regret experiment");
    auto* b_offline = app.add_subcommand("bench-offline", "hypervolume against backups");
    auto* b_scale = app.add_subcommand("bench-scale", "hypervolume ratio against columns");
    for (auto [cmd, args] : {std::pair{b_regret, &regret_args}, {b_offline, &offline_args}, {b_scale, &scale_args}}) {
        add_bench_options(cmd, *args);
        cmd->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    Progress progress(quiet);
    try {
        if (*gen) {
            GdstConfig cfg;
            cfg.columns = g_columns;
            cfg.noise = g_noise;
            cfg.seed = g_seed;
            const GdstInstance inst = generate(cfg);
            const std::string meta = with_suffix(g_out, ".meta.json");
            save_model(g_raw ? inst.raw : inst.normalized, g_out);
            write_text_file(meta, gdst_metadata_json(inst) + "\n");
            ojson m = manifest_base("gen-env", argc, argv);
            m["columns"] = g_columns;
            m["noise"] = g_noise;
            m["seed"] = g_seed;
            m["units"] = g_raw ? "raw" : "normalized";
            m["model"] = g_out;
            m["metadata"] = meta;
            write_manifest(with_suffix(g_out, ".manifest.json"), m);
            std::cerr << ascii_dump(inst);
            ojson summary{{"model", g_out},
                          {"metadata", meta},
                          {"states", inst.normalized.num_states()},
                          {"horizon", inst.horizon()}};
            std::cout << summary.dump() << "\n";
            return 0;
        }
        if (*fix) {
            if (!f_out.empty()) require_writable_dir(f_out);
            ojson m = manifest_base("fixtures", argc, argv);
            for (const auto& name : fixture_names()) {
                const std::string path = path_in(f_out, name + ".json");
                save_model(fixture(name), path);
                m["files"].push_back(path);
                std::cout << path << "\n";
            }
            write_manifest(path_in(f_out, "manifest.json"), m);
            return 0;
        }
        if (*solve) {
            if (s_model.empty() == s_fixture.empty()) throw UsageError("solve needs exactly one of --model or --fixture");
            if (!s_model.empty()) require_readable(s_model, "model file");
            if (!s_out.empty()) require_writable_dir(s_out);
            const Momdp model = model_from_arg(s_model, s_fixture);
            const auto t0 = std::chrono::steady_clock::now();
            const ChviSolution sol = chvi_solve(model, {parse_prune_mode(s_prune), s_table, std::nullopt});
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            ojson out = ojson::parse(solution_to_json(sol, s_table));
            out["seconds"] = secs;
            std::cout << out.dump(s_table ? 1 : -1) << "\n";
            if (!s_out.empty()) {
                write_text_file(path_in(s_out, "ccs.json"), out.dump(1) + "\n");
                ojson m = manifest_base("solve", argc, argv);
                m["model"] = s_model.empty() ? "fixture:" + s_fixture : s_model;
                m["prune"] = s_prune;
                write_manifest(path_in(s_out, "manifest.json"), m);
            }
            return 0;
        }
        if (*search) {
            if (t_model.empty() == t_fixture.empty()) throw UsageError("search needs exactly one of --model or --fixture");
            if (!t_model.empty()) require_readable(t_model, "model file");
            const auto names = strategy_names();
            if (std::find(names.begin(), names.end(), t_strategy) == names.end()) {
                throw UsageError("unknown strategy '" + t_strategy + "'");
            }
            if (t_trials && t_backups) throw UsageError("give --trials or --backup-budget, not both");
            if (!t_out.empty()) require_writable_dir(t_out);
            const Momdp model = model_from_arg(t_model, t_fixture);
            StrategyOptions so;
            so.reference.assign(model.num_objectives(), 0.0);
            auto strategy = make_strategy(t_strategy, model, so);
            SearchConfig sc = t_online ? SearchConfig::online() : SearchConfig::offline();
            sc.prune = parse_prune_mode(t_prune);
            sc.node_cap = 2000000;
            const std::uint64_t search_seed = derive_seed(t_seed, 1), context_seed = derive_seed(t_seed, 0);
            Search s(model, *strategy, sc, search_seed);
            Rng contexts(context_seed);
            const Budget budget = t_backups ? Budget::backups(*t_backups) : Budget::trials(t_trials.value_or(1000));
            auto report = progress.callback();
            const auto& stats = s.run(budget, contexts, [&](const TrialRecord& rec, const SearchStats& st) {
                if (report && (rec.index + 1) % 1000 == 0) {
                    report("trial " + std::to_string(rec.index + 1) + ", " + std::to_string(st.nodes_created) +
                           " nodes");
                }
            });
            const PointSet ccs = s.root_ccs();
            ojson out;
            out["strategy"] = t_strategy;
            out["ccs"] = points_json(ccs);
            out["hypervolume"] = hypervolume(ccs, so.reference);
            out["trials"] = stats.trials_run;
            out["backups"] = stats.backups_performed;
            out["nodes"] = stats.nodes_created;
            out["root_labelled"] = stats.root_labelled;
            out["seconds"] = stats.wall_time;
            std::cout << out.dump() << "\n";
            if (!t_out.empty()) {
                write_text_file(path_in(t_out, "ccs.json"), out.dump(1) + "\n");
                ojson m = manifest_base("search", argc, argv);
                m["model"] = t_model.empty() ? "fixture:" + t_fixture : t_model;
                m["strategy"] = t_strategy;
                m["seed"] = t_seed;
                m["search_seed"] = search_seed;
                m["context_seed"] = context_seed;
                m["budget"] = {{"kind", t_backups ? "backups" : "trials"},
                               {"amount", t_backups ? *t_backups : t_trials.value_or(1000)}};
                m["online"] = t_online;
                m["prune"] = t_prune;
                write_manifest(path_in(t_out, "manifest.json"), m);
            }
            return 0;
        }

        RunOptions ro;
        ro.workers = workers;
        ro.progress = progress.callback();
        if (*b_regret) {
            const ExperimentConfig cfg = resolve_config(regret_args, "regret");
            write_manifest(path_in(cfg.out_dir, "manifest.json"), bench_manifest(cfg, "bench-regret", workers, argc, argv));
            const RegretResult r = run_regret_experiment(cfg, ro);
            std::cout << r.summary_json << "\n";
            return 0;
        }
        if (*b_offline) {
            const ExperimentConfig cfg = resolve_config(offline_args, "offline");
            write_manifest(path_in(cfg.out_dir, "manifest.json"), bench_manifest(cfg, "bench-offline", workers, argc, argv));
            const OfflineResult r = run_offline_experiment(cfg, ro);
            ojson out{{"true_hypervolume", r.true_hypervolume}, {"rows", r.rows.size()}};
            std::cout << out.dump() << "\n";
            return 0;
        }
        if (*b_scale) {
            const ExperimentConfig cfg = resolve_config(scale_args, "scale");
            ojson m = bench_manifest(cfg, "bench-scale", workers, argc, argv);
            m["seed_scheme"] = "search: derive_seed(derive_seed(derive_seed(seed, r), fnv1a(strategy)), "
                               "columns * 1000003 + noise * 1e6); contexts: derive_seed(search, 0)";
            write_manifest(path_in(cfg.out_dir, "manifest.json"), m);
            const ScaleResult r = run_scalability_experiment(cfg, ro);
            ojson out = ojson::array();
            for (const auto& row : r.rows) {
                out.push_back({{"columns", row.columns},
                               {"noise", row.noise},
                               {"strategy", row.strategy},
                               {"replication", row.replication},
                               {"ratio", row.ratio}});
            }
            std::cout << out.dump() << "\n";
            return 0;
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
