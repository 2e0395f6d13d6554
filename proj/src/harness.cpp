#include "chmcts/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "chmcts/chvi.hpp"
#include "chmcts/gdst.hpp"
#include "chmcts/selection.hpp"
#include "chmcts/tree.hpp"

namespace chmcts {

// ---- metrics -----------------------------------------------------------------

double lcr_per_trial(const PointSet& ccs, const WeightVector& w, std::span<const double> achieved) {
    if (ccs.empty()) throw std::invalid_argument("lcr_per_trial: empty CCS");
    return max_scalarized_value(ccs, w) - linear_scalarize(achieved, w);
}

double lcr_per_trial(const PointSet& ccs, const WeightVector& w, const Momdp& model,
                     const DeterministicPolicy& policy) {
    return lcr_per_trial(ccs, w, evaluate_policy(model, policy));
}

double pareto_gap(const PointSet& front, std::span<const double> v) {
    if (front.empty()) throw std::invalid_argument("pareto_gap: empty front");
    double gap = 0.0;
    for (std::size_t i = 0; i < front.size(); ++i) {
        const auto q = front[i];
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < v.size(); ++j) m = std::min(m, q[j] - v[j]);
        gap = std::max(gap, m);
    }
    return gap;
}

double pareto_regret(const std::vector<Point>& values, const PointSet& front) {
    double total = 0.0;
    for (const Point& v : values) total += pareto_gap(front, v);
    return total;
}

MeanCi mean_ci(const std::vector<double>& xs) {
    MeanCi r;
    r.n = xs.size();
    if (xs.empty()) return r;
    for (double x : xs) r.mean += x;
    r.mean /= double(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - r.mean) * (x - r.mean);
        r.half_width = 1.96 * std::sqrt(ss / double(xs.size() - 1) / double(xs.size()));
    }
    return r;
}

double mean_of(const std::vector<double>& xs, std::size_t begin, std::size_t end) {
    end = std::min(end, xs.size());
    if (begin >= end) return 0.0;
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) s += xs[i];
    return s / double(end - begin);
}

std::pair<double, double> decile_means(const std::vector<double>& xs) {
    const std::size_t n = xs.size();
    const std::size_t tenth = std::max<std::size_t>(1, n / 10);
    return {mean_of(xs, 0, tenth), mean_of(xs, n - std::min(n, tenth), n)};
}

// ---- config ----------------------------------------------------------------------

std::string to_string(Estimator e) { return e == Estimator::exact ? "exact" : "realized"; }

Estimator parse_estimator(const std::string& name) {
    if (name == "realized") return Estimator::realized;
    if (name == "exact") return Estimator::exact;
    throw std::invalid_argument("unknown estimator '" + name + "' (expected realized or exact)");
}

namespace {

template <class T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw std::invalid_argument(std::string("config field '") + key + "' has the wrong type");
    }
}

} // namespace

ExperimentConfig experiment_config_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
    ExperimentConfig c;
    read_field(j, "experiment", c.experiment);
    if (c.experiment != "regret" && c.experiment != "offline" && c.experiment != "scale") {
        throw std::invalid_argument("config field 'experiment' must be regret, offline or scale");
    }
    if (j.contains("instance")) {
        const auto& in = j.at("instance");
        if (!in.is_object()) throw std::invalid_argument("config field 'instance' must be an object");
        read_field(in, "columns", c.instance.columns);
        read_field(in, "noise", c.instance.noise);
        read_field(in, "seed", c.instance.seed);
        read_field(in, "fixture", c.instance.fixture);
        read_field(in, "model", c.instance.model_path);
    }
    read_field(j, "strategies", c.strategies);
    read_field(j, "trials", c.trials);
    read_field(j, "backup_budget", c.backup_budget);
    read_field(j, "replications", c.replications);
    std::string est = to_string(c.estimator);
    read_field(j, "estimator", est);
    c.estimator = parse_estimator(est);
    read_field(j, "out_dir", c.out_dir);
    read_field(j, "seed", c.seed);
    std::string prune = to_string(c.prune);
    read_field(j, "prune", prune);
    c.prune = parse_prune_mode(prune);
    read_field(j, "record_every", c.record_every);
    read_field(j, "checkpoints", c.checkpoints);
    if (j.contains("node_cap")) {
        if (j["node_cap"].is_null()) c.node_cap.reset();
        else c.node_cap = j["node_cap"].get<std::size_t>();
    }
    read_field(j, "scale_columns", c.scale_columns);
    read_field(j, "scale_noise", c.scale_noise);
    read_field(j, "exact_limit", c.exact_limit);
    read_field(j, "chvi_rows", c.chvi_rows);

    if (c.replications < 1) throw std::invalid_argument("config field 'replications' must be >= 1");
    if (c.record_every < 1) throw std::invalid_argument("config field 'record_every' must be >= 1");
    if (c.strategies.empty() && c.experiment == "regret") {
        throw std::invalid_argument("config field 'strategies' must not be empty");
    }
    for (const auto& s : c.strategies) {
        const auto names = strategy_names();
        if (std::find(names.begin(), names.end(), s) == names.end()) {
            throw std::invalid_argument("unknown strategy '" + s + "' in config");
        }
    }
    return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return experiment_config_from_json(ss.str());
}

std::string experiment_config_to_json(const ExperimentConfig& c) {
    nlohmann::ordered_json j;
    j["experiment"] = c.experiment;
    nlohmann::ordered_json in;
    in["columns"] = c.instance.columns;
    in["noise"] = c.instance.noise;
    in["seed"] = c.instance.seed;
    if (!c.instance.fixture.empty()) in["fixture"] = c.instance.fixture;
    if (!c.instance.model_path.empty()) in["model"] = c.instance.model_path;
    j["instance"] = in;
    j["strategies"] = c.strategies;
    j["trials"] = c.trials;
    j["backup_budget"] = c.backup_budget;
    j["replications"] = c.replications;
    j["estimator"] = to_string(c.estimator);
    j["out_dir"] = c.out_dir;
    j["seed"] = c.seed;
    j["prune"] = to_string(c.prune);
    j["record_every"] = c.record_every;
    j["checkpoints"] = c.checkpoints;
    j["node_cap"] = c.node_cap ? nlohmann::ordered_json(*c.node_cap) : nlohmann::ordered_json(nullptr);
    j["scale_columns"] = c.scale_columns;
    j["scale_noise"] = c.scale_noise;
    j["exact_limit"] = c.exact_limit;
    j["chvi_rows"] = c.chvi_rows;
    return j.dump(1);
}

// ---- helpers ----------------------------------------------------------------------

std::string format_number(double x) {
    if (x == 0.0) return "0"; // also folds -0
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

void write_text_file(const std::string& path, const std::string& text) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
    if (!out) throw std::runtime_error("error writing '" + path + "'");
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& job) {
    const std::size_t w = std::max<std::size_t>(1, std::min<std::size_t>(n, static_cast<std::size_t>(std::max(workers, 1))));
    if (w <= 1) {
        for (std::size_t i = 0; i < n; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < w; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    job(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

std::uint64_t name_hash(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

struct Problem {
    std::unique_ptr<Momdp> model; // planning model
    std::optional<GdstInstance> gdst;
    StrategyOptions strategy_options;
};

Problem make_problem(const InstanceSpec& spec) {
    Problem p;
    if (!spec.fixture.empty()) {
        p.model = std::make_unique<Momdp>(fixture(spec.fixture));
    } else if (!spec.model_path.empty()) {
        p.model = std::make_unique<Momdp>(load_model(spec.model_path));
    } else {
        GdstConfig g;
        g.columns = spec.columns;
        g.noise = spec.noise;
        g.seed = spec.seed;
        p.gdst = generate(g);
        p.model = std::make_unique<Momdp>(p.gdst->normalized);
        p.strategy_options.utopia = p.gdst->utopia;
    }
    p.strategy_options.reference.assign(p.model->num_objectives(), 0.0);
    return p;
}

std::uint64_t exact_cost(const Momdp& m) {
    return static_cast<std::uint64_t>(m.num_states()) * static_cast<std::uint64_t>(std::max(m.horizon(), 1));
}

PointSet ground_truth(const Momdp& m, const ExperimentConfig& cfg) {
    if (exact_cost(m) > cfg.exact_limit) {
        throw std::runtime_error("exact ground truth needs " + std::to_string(m.num_states()) + " states x " +
                                 std::to_string(m.horizon()) + " steps, above the limit of " +
                                 std::to_string(cfg.exact_limit) + "; reduce the number of columns");
    }
    return true_ccs(m);
}

SearchConfig search_config(bool online, const ExperimentConfig& cfg) {
    SearchConfig s = online ? SearchConfig::online() : SearchConfig::offline();
    s.prune = cfg.prune;
    s.node_cap = cfg.node_cap;
    return s;
}

std::string join_path(const std::string& dir, const std::string& file) {
    return (std::filesystem::path(dir) / file).string();
}

std::vector<double> thin_indices(std::size_t n, std::size_t max_points) {
    std::vector<double> idx;
    if (n == 0) return idx;
    const std::size_t step = std::max<std::size_t>(1, n / max_points);
    for (std::size_t i = 0; i < n; i += step) idx.push_back(double(i));
    if (idx.back() != double(n - 1)) idx.push_back(double(n - 1));
    return idx;
}

} // namespace

// ---- regret --------------------------------------------------------------------------

RegretResult run_regret_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
    const Problem prob = make_problem(cfg.instance);
    const Momdp& model = *prob.model;
    RegretResult result;
    result.true_ccs = ground_truth(model, cfg);
    const std::size_t D = model.num_objectives();

    const std::size_t S = cfg.strategies.size(), R = static_cast<std::size_t>(cfg.replications);
    result.runs.resize(S * R);
    parallel_for(S * R, opts.workers, [&](std::size_t job) {
        const std::string& name = cfg.strategies[job / R];
        const int rep = static_cast<int>(job % R);
        RegretRun& run = result.runs[job];
        run.strategy = name;
        run.replication = rep;

        const std::uint64_t rep_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(rep));
        // Contexts come from a stream shared by every strategy in this replication.
        Rng contexts(derive_seed(rep_seed, 0));
        auto strategy = make_strategy(name, model, prob.strategy_options);
        Search search(model, *strategy, search_config(true, cfg), derive_seed(rep_seed, name_hash(name)));

        run.regret.reserve(cfg.trials);
        double cum = 0.0;
        const std::uint64_t report = std::max<std::uint64_t>(1, cfg.trials / 10);
        for (std::uint64_t k = 0; k < cfg.trials; ++k) {
            const WeightVector w = WeightVector::sample(D, contexts);
            double reg;
            if (cfg.estimator == Estimator::exact) {
                reg = lcr_per_trial(result.true_ccs, w, search.exploration_value(w));
                search.run_trial(w);
            } else {
                reg = lcr_per_trial(result.true_ccs, w, search.run_trial(w).realized);
            }
            cum += reg;
            run.regret.push_back(reg);
            run.context_w0.push_back(w[0]);
            run.cum_regret.push_back(cum);
            if (opts.progress && (k + 1) % report == 0) {
                opts.progress("regret " + name + " rep " + std::to_string(rep) + ": " + std::to_string(k + 1) +
                              "/" + std::to_string(cfg.trials) + " trials");
            }
        }
    });

    std::string csv = "trial,strategy,replication,context_w0,cum_regret\n";
    for (const RegretRun& run : result.runs) {
        const std::size_t n = run.regret.size();
        for (std::size_t k = 0; k < n; ++k) {
            if ((k + 1) % cfg.record_every != 0 && k + 1 != n) continue;
            csv += std::to_string(k + 1) + ',' + run.strategy + ',' + std::to_string(run.replication) + ',' +
                   format_number(run.context_w0[k]) + ',' + format_number(run.cum_regret[k]) + '\n';
        }
    }
    result.csv = std::move(csv);

    nlohmann::ordered_json summary;
    summary["estimator"] = to_string(cfg.estimator);
    summary["trials"] = cfg.trials;
    summary["replications"] = cfg.replications;
    summary["true_ccs"] = nlohmann::json::parse(to_json_string(result.true_ccs));
    std::vector<Series> chart;
    for (std::size_t s = 0; s < S; ++s) {
        std::vector<double> finals, firsts, lasts;
        for (std::size_t r = 0; r < R; ++r) {
            const RegretRun& run = result.runs[s * R + r];
            finals.push_back(run.cum_regret.empty() ? 0.0 : run.cum_regret.back());
            auto [f, l] = decile_means(run.regret);
            firsts.push_back(f);
            lasts.push_back(l);
        }
        const auto fin = mean_ci(finals), first = mean_ci(firsts), last = mean_ci(lasts);
        summary["strategies"][cfg.strategies[s]] = {
            {"final_cum_regret", {{"mean", fin.mean}, {"ci95", fin.half_width}}},
            {"first_decile_mean", {{"mean", first.mean}, {"ci95", first.half_width}}},
            {"last_decile_mean", {{"mean", last.mean}, {"ci95", last.half_width}}},
            {"per_replication_final", finals},
        };
        Series series{cfg.strategies[s], {}, {}};
        for (double i : thin_indices(cfg.trials, 400)) {
            double m = 0.0;
            for (std::size_t r = 0; r < R; ++r) m += result.runs[s * R + r].cum_regret[std::size_t(i)];
            series.x.push_back(i + 1);
            series.y.push_back(m / double(R));
        }
        chart.push_back(std::move(series));
    }
    result.summary_json = summary.dump(1);

    if (opts.write_files) {
        write_text_file(join_path(cfg.out_dir, "regret.csv"), result.csv);
        write_text_file(join_path(cfg.out_dir, "regret_summary.json"), result.summary_json);
        write_text_file(join_path(cfg.out_dir, "regret.svg"),
                        line_chart_svg("Cumulative linear contextual regret", "trial", "cumulative regret", chart));
    }
    return result;
}

// ---- offline ------------------------------------------------------------------------

OfflineResult run_offline_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
    const Problem prob = make_problem(cfg.instance);
    const Momdp& model = *prob.model;
    const Point ref(model.num_objectives(), 0.0);
    OfflineResult result;

    const std::size_t S = cfg.strategies.size(), R = static_cast<std::size_t>(cfg.replications);
    std::vector<std::vector<OfflineRow>> per_job(S * R);
    parallel_for(S * R, opts.workers, [&](std::size_t job) {
        const std::string& name = cfg.strategies[job / R];
        const int rep = static_cast<int>(job % R);
        const std::uint64_t rep_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(rep));
        Rng contexts(derive_seed(rep_seed, 0));
        auto strategy = make_strategy(name, model, prob.strategy_options);
        Search search(model, *strategy, search_config(false, cfg), derive_seed(rep_seed, name_hash(name)));

        auto& rows = per_job[job];
        rows.push_back({0, name, rep, 0.0});
        const std::uint64_t step = std::max<std::uint64_t>(1, cfg.backup_budget / std::max<std::uint64_t>(cfg.checkpoints, 1));
        std::uint64_t next = step;
        search.run(Budget::backups(cfg.backup_budget), contexts, [&](const TrialRecord&, const SearchStats& st) {
            if (st.backups_performed >= next) {
                rows.push_back({st.backups_performed, name, rep, hypervolume(search.tree().decision(0).value, ref)});
                while (next <= st.backups_performed) next += step;
            }
        });
        const auto& st = search.stats();
        if (rows.back().backups != st.backups_performed) {
            rows.push_back({st.backups_performed, name, rep, hypervolume(search.tree().decision(0).value, ref)});
        }
        if (opts.progress) {
            opts.progress("offline " + name + " rep " + std::to_string(rep) + ": " +
                          std::to_string(st.backups_performed) + " backups, " + std::to_string(st.trials_run) +
                          " trials" + (st.root_labelled ? ", root labelled" : ""));
        }
    });

    if (cfg.chvi_rows && exact_cost(model) <= cfg.exact_limit) {
        const auto sol = chvi_solve(model, {cfg.prune, false, std::nullopt});
        result.true_hypervolume = hypervolume(sol.root(), ref);
        result.rows.push_back({0, "chvi", 0, 0.0});
        result.rows.push_back({sol.backup_count(), "chvi", 0, result.true_hypervolume});
    }
    for (auto& rows : per_job) result.rows.insert(result.rows.end(), rows.begin(), rows.end());

    std::string csv = "backups,strategy,replication,hypervolume\n";
    for (const auto& r : result.rows) {
        csv += std::to_string(r.backups) + ',' + r.strategy + ',' + std::to_string(r.replication) + ',' +
               format_number(r.hypervolume) + '\n';
    }
    result.csv = std::move(csv);

    if (opts.write_files) {
        write_text_file(join_path(cfg.out_dir, "offline.csv"), result.csv);
        std::vector<Series> chart;
        for (const auto& r : result.rows) {
            if (r.replication != 0) continue;
            auto it = std::find_if(chart.begin(), chart.end(), [&](const Series& s) { return s.name == r.strategy; });
            if (it == chart.end()) {
                chart.push_back({r.strategy, {}, {}});
                it = chart.end() - 1;
            }
            it->x.push_back(double(r.backups));
            it->y.push_back(r.hypervolume);
        }
        write_text_file(join_path(cfg.out_dir, "offline.svg"),
                        line_chart_svg("Root hypervolume against backups (replication 0)", "backups", "hypervolume", chart));
    }
    return result;
}

// ---- scalability --------------------------------------------------------------------

ScaleResult run_scalability_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
    struct Job {
        int columns;
        double noise;
        std::string strategy;
        int replication;
    };
    std::vector<Job> jobs;
    for (int c : cfg.scale_columns) {
        for (double p : cfg.scale_noise) {
            if (cfg.chvi_rows) {
                if (p == 0.0) jobs.push_back({c, p, "chvi", 0});
                jobs.push_back({c, p, "chvi-budget", 0});
            }
            for (const auto& s : cfg.strategies) {
                for (int r = 0; r < cfg.replications; ++r) jobs.push_back({c, p, s, r});
            }
        }
    }

    // hv(c, 0) from the deterministic shortest-path front.
    std::vector<double> hv0(cfg.scale_columns.size());
    parallel_for(hv0.size(), opts.workers, [&](std::size_t i) {
        GdstConfig g;
        g.columns = cfg.scale_columns[i];
        g.seed = cfg.instance.seed;
        hv0[i] = hypervolume(deterministic_front(generate(g)), Point{0.0, 0.0});
    });
    auto hv0_of = [&](int c) {
        const auto it = std::find(cfg.scale_columns.begin(), cfg.scale_columns.end(), c);
        return hv0[static_cast<std::size_t>(it - cfg.scale_columns.begin())];
    };

    std::vector<std::optional<ScaleRow>> rows(jobs.size());
    parallel_for(jobs.size(), opts.workers, [&](std::size_t i) {
        const Job& job = jobs[i];
        GdstConfig g;
        g.columns = job.columns;
        g.noise = job.noise;
        g.seed = cfg.instance.seed;
        const GdstInstance inst = generate(g);
        const Momdp& model = inst.normalized;
        const Point ref{0.0, 0.0};
        double hv = 0.0;
        if (job.strategy == "chvi") {
            if (exact_cost(model) > cfg.exact_limit) return;
            hv = hypervolume(true_ccs(model), ref);
        } else if (job.strategy == "chvi-budget") {
            hv = hypervolume(chvi_solve(model, {cfg.prune, false, cfg.backup_budget}).root(), ref);
        } else {
            StrategyOptions so;
            so.reference = ref;
            so.utopia = inst.utopia;
            auto strategy = make_strategy(job.strategy, model, so);
            const std::uint64_t seed = derive_seed(
                derive_seed(derive_seed(cfg.seed, static_cast<std::uint64_t>(job.replication)), name_hash(job.strategy)),
                static_cast<std::uint64_t>(job.columns) * 1000003ULL + static_cast<std::uint64_t>(job.noise * 1e6));
            Search search(model, *strategy, search_config(false, cfg), seed);
            Rng contexts(derive_seed(seed, 0));
            search.run(Budget::backups(cfg.backup_budget), contexts);
            hv = hypervolume(search.tree().decision(0).value, ref);
        }
        const double ratio = hv0_of(job.columns) > 0 ? hv / hv0_of(job.columns) : 0.0;
        rows[i] = ScaleRow{job.columns, job.noise, job.strategy, ratio, job.replication};
        if (opts.progress) {
            opts.progress("scale c=" + std::to_string(job.columns) + " p=" + format_number(job.noise) + " " +
                          job.strategy + " rep " + std::to_string(job.replication) + ": ratio " + format_number(ratio));
        }
    });

    ScaleResult result;
    std::string csv = "columns,noise,strategy,ratio,replication\n";
    for (const auto& r : rows) {
        if (!r) continue;
        result.rows.push_back(*r);
        csv += std::to_string(r->columns) + ',' + format_number(r->noise) + ',' + r->strategy + ',' +
               format_number(r->ratio) + ',' + std::to_string(r->replication) + '\n';
    }
    result.csv = std::move(csv);

    if (opts.write_files) {
        write_text_file(join_path(cfg.out_dir, "scale.csv"), result.csv);
        std::vector<Series> chart;
        for (double p : cfg.scale_noise) {
            for (const std::string& s : cfg.strategies) {
                Series series{s + " p=" + format_number(p), {}, {}};
                for (int c : cfg.scale_columns) {
                    std::vector<double> xs;
                    for (const auto& r : result.rows) {
                        if (r.columns == c && r.noise == p && r.strategy == s) xs.push_back(r.ratio);
                    }
                    if (xs.empty()) continue;
                    series.x.push_back(c);
                    series.y.push_back(mean_ci(xs).mean);
                }
                chart.push_back(std::move(series));
            }
        }
        write_text_file(join_path(cfg.out_dir, "scale.svg"),
                        line_chart_svg("Hypervolume ratio ehv(c,p)/hv(c,0)", "columns", "ratio", chart));
    }
    return result;
}

// ---- svg ----------------------------------------------------------------------------

namespace {

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += ch;
        }
    }
    return out;
}

std::string tick_label(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

} // namespace

std::string line_chart_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<Series>& series) {
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};
    const double W = 720, H = 440, left = 70, right = 170, top = 40, bottom = 50;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    }
    if (!(x0 < x1)) {
        x0 = std::isfinite(x0) ? x0 - 1 : 0;
        x1 = x0 + 2;
    }
    if (!(y0 < y1)) {
        y0 = std::isfinite(y0) ? y0 - 1 : 0;
        y1 = y0 + 2;
    }
    y0 = std::min(y0, 0.0);
    const double pw = W - left - right, ph = H - top - bottom;
    auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return top + ph - (y - y0) / (y1 - y0) * ph; };

    std::ostringstream os;
    os.precision(6);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << xml_escape(title)
       << "</text>\n";
    os << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
       << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double xv = x0 + (x1 - x0) * i / 5.0, yv = y0 + (y1 - y0) * i / 5.0;
        os << "<text x=\"" << px(xv) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\" font-size=\"10\">"
           << tick_label(xv) << "</text>\n";
        os << "<text x=\"" << left - 6 << "\" y=\"" << py(yv) + 3 << "\" text-anchor=\"end\" font-size=\"10\">"
           << tick_label(yv) << "</text>\n";
    }
    os << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"12\">"
       << xml_escape(x_label) << "</text>\n";
    os << "<text x=\"16\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
       << top + ph / 2 << ")\">" << xml_escape(y_label) << "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = colors[k % 7];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) os << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
        os << "\"/>\n";
        const double ly = top + 14 + 18.0 * double(k);
        os << "<line x1=\"" << W - right + 12 << "\" y1=\"" << ly << "\" x2=\"" << W - right + 32 << "\" y2=\"" << ly
           << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << W - right + 38 << "\" y=\"" << ly + 4 << "\" font-size=\"11\">" << xml_escape(s.name)
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

} // namespace chmcts
