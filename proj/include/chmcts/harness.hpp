#pragma once

// Regret and hypervolume metrics and the three experiments (online regret,
// offline hypervolume against backups, scalability ratio).

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "chmcts/geometry.hpp"
#include "chmcts/momdp.hpp"

namespace chmcts {

// ---- metrics -----------------------------------------------------------------

/// max_{p in ccs} w.p - w.achieved.
double lcr_per_trial(const PointSet& ccs, const WeightVector& w, std::span<const double> achieved);
/// Same, with the achieved value from exact evaluation of `policy`.
double lcr_per_trial(const PointSet& ccs, const WeightVector& w, const Momdp& model,
                     const DeterministicPolicy& policy);

/// Smallest e >= 0 such that v + e*1 is not strictly dominated by the front:
/// max over q of min_i (q_i - v_i), floored at 0.
double pareto_gap(const PointSet& front, std::span<const double> v);
/// Sum of pareto_gap over the given policy values (one per trial).
double pareto_regret(const std::vector<Point>& values, const PointSet& front);

struct MeanCi {
    double mean = 0.0;
    double half_width = 0.0; // 95% normal approximation
    std::size_t n = 0;
};
MeanCi mean_ci(const std::vector<double>& xs);

// ---- experiment configuration ------------------------------------------------

enum class Estimator { realized, exact };
std::string to_string(Estimator e);
Estimator parse_estimator(const std::string& name);

struct InstanceSpec {
    int columns = 7;
    double noise = 0.01;
    std::uint64_t seed = 0;
    std::string fixture; // when set, use this fixture instead of a GDST instance
    std::string model_path; // or a model file
};

struct ExperimentConfig {
    std::string experiment = "regret"; // regret | offline | scale
    InstanceSpec instance;
    std::vector<std::string> strategies{"zooming"};
    std::uint64_t trials = 1000;        // regret
    std::uint64_t backup_budget = 25000; // offline, scale
    int replications = 1;
    Estimator estimator = Estimator::realized;
    std::string out_dir = "out";
    std::uint64_t seed = 0; // master seed
    PruneMode prune = PruneMode::ccs;

    std::uint64_t record_every = 1;     // regret.csv rows every n trials (and the last)
    std::uint64_t checkpoints = 50;     // offline.csv rows per run
    std::optional<std::size_t> node_cap = 2000000;
    std::vector<int> scale_columns{3, 4, 5};
    std::vector<double> scale_noise{0.0, 0.01};
    /// Largest |S|*H solved exactly for ground truth or for exact CHVI rows.
    std::uint64_t exact_limit = 4000000;
    bool chvi_rows = true;
};

/// Throws std::invalid_argument with the offending field.
ExperimentConfig experiment_config_from_json(const std::string& text);
ExperimentConfig load_experiment_config(const std::string& path);
std::string experiment_config_to_json(const ExperimentConfig& cfg);

struct RunOptions {
    int workers = 1;
    /// Called from worker threads with a short message; may be empty.
    std::function<void(const std::string&)> progress;
    bool write_files = true;
};

/// FNV-1a of a strategy name. Seeds: replication r uses derive_seed(seed, r);
/// its context stream derive_seed(that, 0), a strategy's search
/// derive_seed(that, name_hash(name)).
std::uint64_t name_hash(const std::string& s);

// ---- results -------------------------------------------------------------------

struct RegretRun {
    std::string strategy;
    int replication = 0;
    std::vector<double> regret;    // per trial
    std::vector<double> context_w0;
    std::vector<double> cum_regret;
};

struct RegretResult {
    PointSet true_ccs;
    std::vector<RegretRun> runs; // strategy-major, replication-minor
    std::string csv;             // regret.csv contents
    std::string summary_json;
};

struct OfflineRow {
    std::uint64_t backups;
    std::string strategy;
    int replication;
    double hypervolume;
};

struct OfflineResult {
    double true_hypervolume = 0.0;
    std::vector<OfflineRow> rows;
    std::string csv;
};

struct ScaleRow {
    int columns;
    double noise;
    std::string strategy;
    double ratio;
    int replication;
};

struct ScaleResult {
    std::vector<ScaleRow> rows;
    std::string csv;
};

/// Throws std::runtime_error when exact ground truth is too large (reduce c).
RegretResult run_regret_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});
OfflineResult run_offline_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});
ScaleResult run_scalability_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

/// Mean of xs[begin, end).
double mean_of(const std::vector<double>& xs, std::size_t begin, std::size_t end);
/// First and last decile means of a per-trial series.
std::pair<double, double> decile_means(const std::vector<double>& xs);

// ---- output helpers ------------------------------------------------------------

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};
/// Single-panel SVG line chart with axes and a legend.
std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<Series>& series);

/// Shortest round-trip decimal form used in every CSV.
std::string format_number(double x);

void write_text_file(const std::string& path, const std::string& text);

/// Runs jobs 0..n-1 on `workers` threads.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& job);

} // namespace chmcts
