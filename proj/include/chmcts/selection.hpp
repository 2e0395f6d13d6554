#pragma once

// Action selection at decision nodes: contextual zooming over (weight, action)
// pairs, plus hypervolume-UCB, Chebychev-UCB and ParetoUCB1 baselines.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chmcts/geometry.hpp"
#include "chmcts/momdp.hpp"

namespace chmcts {

// ---- similarity space ------------------------------------------------------

struct MetricConstants {
    double U = 1.0;
    std::vector<double> C; // per action, 0 <= C[a] <= 2U
};

/// C[a] * ||w - w'||_inf when the actions agree, U otherwise.
double metric_d(const WeightVector& w1, ActionId a1, const WeightVector& w2, ActionId a2,
                const MetricConstants& k);
double metric_d(std::span<const double> w1, ActionId a1, std::span<const double> w2, ActionId a2,
                const MetricConstants& k);

// ---- contextual zooming ----------------------------------------------------

struct Ball {
    Point center;        // weight vector
    ActionId action = 0; // centre action
    double radius = 1.0;
    std::uint64_t n = 0;
    double mean = 0.0;
};

/// 4 sqrt(ln k / (1 + n)).
double zooming_confidence(std::uint64_t k, std::uint64_t n);

/// Active balls of one zooming instance. Rewards are expected in [0, U].
class BallSet {
public:
    BallSet() = default;
    /// One ball per action centred on the uniform weight with radius C[a].
    BallSet(std::size_t num_actions, std::size_t dim, MetricConstants constants);

    std::size_t num_actions() const { return num_actions_; }
    std::uint64_t round() const { return k_; }
    const MetricConstants& constants() const { return constants_; }
    const std::vector<Ball>& balls() const { return balls_; }

    bool contains(const Ball& b, std::span<const double> w, ActionId a) const;
    double confidence(const Ball& b) const { return zooming_confidence(k_, b.n); }
    double pre_index(const Ball& b) const { return b.mean + b.radius + confidence(b); }
    /// r(B) + min over active B' of (pre_index(B') + d(centre(B), centre(B'))).
    double index(std::size_t ball) const;

    struct Selection {
        ActionId action;
        std::size_t ball;
    };
    /// Relevant ball with the largest index; ties to the smaller radius, then
    /// the lower action.
    Selection select(std::span<const double> w) const;
    /// Records `reward` for the selected ball and advances the round. Returns
    /// true when a new ball of half radius was activated at (w, action).
    bool update(const Selection& sel, std::span<const double> w, double reward);

    std::string to_csv() const;

private:
    std::size_t num_actions_ = 0;
    std::uint64_t k_ = 1;
    MetricConstants constants_;
    std::vector<Ball> balls_;
};

// ---- strategy interface ----------------------------------------------------

/// What a strategy may read about a decision node. q_sets[a] is null for
/// actions that have not been expanded yet.
struct NodeView {
    std::size_t num_actions = 0;
    std::size_t num_objectives = 0;
    int depth = 0;
    std::uint64_t visits = 0;
    std::span<const std::uint64_t> action_visits;
    std::span<const PointSet* const> q_sets;
};

struct Choice {
    ActionId action = 0;
    std::size_t token = 0; // strategy-private (zooming: ball index)
};

struct StrategyOptions {
    double exploration = 1.4142135623730951; // UCB constant
    Point reference;                         // hypervolume reference, default origin
    Point utopia;                            // Chebychev utopian point
};

/// Per-node state is kept inside the strategy, keyed by node id.
class ActionSelection {
public:
    virtual ~ActionSelection() = default;
    virtual std::string name() const = 0;
    virtual bool context_free() const = 0;
    /// Forget all per-node state (new tree).
    virtual void reset() {}
    virtual Choice select(std::size_t node, const NodeView& view, const WeightVector& w, Rng& rng) = 0;
    /// Called once per trial for every decision node the trial passed
    /// through. `ret` is the scalarized return-to-go from the node and
    /// `bound` an upper bound on it.
    virtual void update(std::size_t /*node*/, const NodeView& /*view*/, const Choice& /*choice*/,
                        const WeightVector& /*w*/, double /*ret*/, double /*bound*/) {}
    /// Probability of each action at the next select() call.
    virtual std::vector<double> action_distribution(std::size_t node, const NodeView& view,
                                                    const WeightVector& w) const = 0;
    virtual std::unique_ptr<ActionSelection> clone_fresh() const = 0;
};

class ZoomingSelection : public ActionSelection {
public:
    explicit ZoomingSelection(std::size_t num_actions, std::size_t dim);
    std::string name() const override { return "zooming"; }
    bool context_free() const override { return false; }
    void reset() override;
    Choice select(std::size_t node, const NodeView& view, const WeightVector& w, Rng& rng) override;
    void update(std::size_t node, const NodeView& view, const Choice& choice, const WeightVector& w,
                double ret, double bound) override;
    std::vector<double> action_distribution(std::size_t node, const NodeView& view,
                                            const WeightVector& w) const override;
    std::unique_ptr<ActionSelection> clone_fresh() const override;

    /// Ball set of a node, or null when the node was never visited.
    const BallSet* ball_set(std::size_t node) const;
    std::uint64_t clamped_rewards() const { return clamped_; }

private:
    BallSet& ensure(std::size_t node);
    std::size_t num_actions_;
    std::size_t dim_;
    std::vector<std::unique_ptr<BallSet>> sets_;
    std::uint64_t clamped_ = 0;
};

class HypervolumeSelection : public ActionSelection {
public:
    explicit HypervolumeSelection(StrategyOptions opts) : opts_(std::move(opts)) {}
    std::string name() const override { return "hypervolume"; }
    bool context_free() const override { return true; }
    Choice select(std::size_t node, const NodeView& view, const WeightVector& w, Rng& rng) override;
    std::vector<double> action_distribution(std::size_t node, const NodeView& view,
                                            const WeightVector& w) const override;
    std::unique_ptr<ActionSelection> clone_fresh() const override;

private:
    ActionId pick(const NodeView& view) const;
    StrategyOptions opts_;
};

class ChebychevSelection : public ActionSelection {
public:
    explicit ChebychevSelection(StrategyOptions opts) : opts_(std::move(opts)) {}
    std::string name() const override { return "chebychev"; }
    bool context_free() const override { return false; }
    Choice select(std::size_t node, const NodeView& view, const WeightVector& w, Rng& rng) override;
    std::vector<double> action_distribution(std::size_t node, const NodeView& view,
                                            const WeightVector& w) const override;
    std::unique_ptr<ActionSelection> clone_fresh() const override;

private:
    ActionId pick(const NodeView& view, const WeightVector& w) const;
    StrategyOptions opts_;
};

class ParetoUcbSelection : public ActionSelection {
public:
    explicit ParetoUcbSelection(StrategyOptions opts) : opts_(std::move(opts)) {}
    std::string name() const override { return "pareto-ucb"; }
    bool context_free() const override { return true; }
    Choice select(std::size_t node, const NodeView& view, const WeightVector& w, Rng& rng) override;
    std::vector<double> action_distribution(std::size_t node, const NodeView& view,
                                            const WeightVector& w) const override;
    std::unique_ptr<ActionSelection> clone_fresh() const override;

    /// Actions owning at least one point of the front of bonus-augmented
    /// q-set points, ascending.
    std::vector<ActionId> front_owners(const NodeView& view) const;

private:
    StrategyOptions opts_;
};

/// First unexpanded action, if any.
std::optional<ActionId> first_unexpanded(const NodeView& view);

std::vector<std::string> strategy_names();
/// zooming | hypervolume | chebychev | pareto-ucb
std::unique_ptr<ActionSelection> make_strategy(const std::string& name, const Momdp& model,
                                               const StrategyOptions& opts = {});

} // namespace chmcts
