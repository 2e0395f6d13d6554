#pragma once

// Trial-based tree search with point-set backups at every node.

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chmcts/geometry.hpp"
#include "chmcts/momdp.hpp"
#include "chmcts/selection.hpp"

namespace chmcts {

using NodeId = std::uint32_t;
constexpr NodeId kNoNode = 0xffffffffu;

struct DecisionNode {
    StateId state;
    int depth;
    PointSet value;
    std::uint64_t visits = 0;
    std::vector<NodeId> children; // per action, kNoNode when unexpanded
    bool labelled = false;
    bool leaf = false; // terminal state or depth == H
};

struct ChanceNode {
    StateId state;
    ActionId action;
    int depth;
    PointSet q;
    std::uint64_t visits = 0;
    std::vector<NodeId> children; // per successor slot of model.successors(state, action)
    std::size_t expanded = 0;
    bool labelled = false;
};

/// What a strategy's update() observes at each visited decision node.
enum class Feedback {
    return_to_go, // realized scalarized return from the node onward
    q_value,      // max over the chosen action's q-set, scalarized by w
};

struct SearchConfig {
    PruneMode prune = PruneMode::ccs;
    /// Chance backups renormalize probabilities over expanded successors.
    /// When false, unexpanded successors count as {0}.
    bool renormalize = true;
    bool labelling = true;
    bool stop_when_labelled = true;
    /// Stop a trial's backups at the first node whose value and label did
    /// not change.
    bool backup_pruning = true;
    /// Keep descending through newly created nodes until a terminal or
    /// horizon leaf. When false a trial stops at the first new node.
    bool expand_full_path = true;
    /// Complete each trial's return with uniformly random actions once it
    /// leaves the tree (first new node, or a full tree), so the realized
    /// return is a full episode.
    bool rollout = false;
    /// Maximum decision + chance nodes; the tree stops growing there.
    std::optional<std::size_t> node_cap;
    Feedback feedback = Feedback::return_to_go;

    /// Online regret runs: every trial is a full episode, no labelling.
    static SearchConfig online();
    /// Offline planning runs: labelling on, no rollouts.
    static SearchConfig offline();
};

struct Budget {
    enum class Kind { trials, backups, seconds };
    Kind kind = Kind::trials;
    double amount = 0;

    static Budget trials(std::uint64_t n) { return {Kind::trials, static_cast<double>(n)}; }
    static Budget backups(std::uint64_t n) { return {Kind::backups, static_cast<double>(n)}; }
    static Budget seconds(double s) { return {Kind::seconds, s}; }
};

struct SearchStats {
    std::uint64_t trials_run = 0;
    std::uint64_t backups_performed = 0;
    std::uint64_t nodes_created = 0;
    std::uint64_t labelled_count = 0;
    double wall_time = 0.0;
    bool root_labelled = false;
};

struct TrialRecord {
    std::uint64_t index = 0;
    WeightVector w;
    Point realized; // model units
    std::uint64_t backups = 0;
};

class SearchTree {
public:
    SearchTree(const Momdp& model, PruneMode prune);

    const Momdp& model() const { return *model_; }
    NodeId root() const { return 0; }
    const DecisionNode& decision(NodeId id) const { return decisions_[id]; }
    const ChanceNode& chance(NodeId id) const { return chances_[id]; }
    std::size_t num_decisions() const { return decisions_.size(); }
    std::size_t num_chances() const { return chances_.size(); }
    std::size_t size() const { return decisions_.size() + chances_.size(); }

    /// Recomputes a chance node's q-set from its expanded children. Returns
    /// whether the set or the label changed. Throws if no child is expanded.
    bool backup_chance(NodeId id, bool renormalize, bool labelling);
    /// Recomputes a decision node's value from its expanded actions.
    bool backup_decision(NodeId id, bool labelling);

    NodeId add_decision(StateId s, int depth, bool labelling);
    NodeId add_chance(NodeId parent, ActionId a);
    void link_outcome(NodeId chance, std::size_t slot, NodeId child);

    /// Strategy view of a decision node; the spans point into `scratch`.
    struct ViewScratch {
        std::vector<std::uint64_t> visits;
        std::vector<const PointSet*> sets;
    };
    NodeView view(NodeId id, ViewScratch& scratch) const;

    DecisionNode& decision_mut(NodeId id) { return decisions_[id]; }
    ChanceNode& chance_mut(NodeId id) { return chances_[id]; }
    std::uint64_t labelled_count() const { return labelled_; }

    /// Debug snapshot of at most `max_nodes` decision nodes (breadth first).
    std::string to_json(std::size_t max_nodes) const;

private:
    const Momdp* model_;
    PruneMode prune_;
    std::vector<DecisionNode> decisions_;
    std::vector<ChanceNode> chances_;
    std::uint64_t labelled_ = 0;
};

struct PathStep {
    NodeId decision;
    NodeId chance;
};

/// Backs up chance then decision node of each step, leaf to root. With
/// backup pruning the pass stops after the first backup that changed nothing.
/// Returns the number of backups executed.
std::uint64_t propagate_backups(SearchTree& tree, std::span<const PathStep> leaf_to_root,
                                const SearchConfig& config);

/// Samples a successor slot of a chance node. With labelling, slots whose
/// child is absent or unlabelled are preferred whenever any exist.
std::size_t select_outcome(const SearchTree& tree, NodeId chance, bool labelling, Rng& rng);

class Search {
public:
    /// The model and strategy must outlive the search. The strategy is reset.
    Search(const Momdp& model, ActionSelection& strategy, SearchConfig config, std::uint64_t seed);

    /// One trial for context w.
    TrialRecord run_trial(const WeightVector& w);

    using TrialHook = std::function<void(const TrialRecord&, const SearchStats&)>;
    /// Runs trials until the budget is spent or the root is labelled (when
    /// configured). Contexts are drawn uniformly from the simplex with
    /// `contexts`. Throws std::invalid_argument for a zero budget.
    const SearchStats& run(const Budget& budget, Rng& contexts, const TrialHook& hook = {});

    const SearchTree& tree() const { return tree_; }
    const SearchStats& stats() const { return stats_; }
    const SearchConfig& config() const { return config_; }
    ActionSelection& strategy() { return *strategy_; }

    /// Root value set, ccs-pruned.
    PointSet root_ccs() const;

    /// Exact value of the exploration policy the next trial would follow for
    /// context w: strategy action distributions inside the tree, uniformly
    /// random actions outside it.
    Point exploration_value(const WeightVector& w) const;

private:
    Point rollout(StateId s, int t, Rng& rng) const;
    std::span<const double> random_value(StateId s, int t) const;
    Point exploration_value_at(NodeId id, const WeightVector& w) const;

    const Momdp* model_;
    ActionSelection* strategy_;
    SearchConfig config_;
    Rng rng_;
    SearchTree tree_;
    SearchStats stats_;
    mutable std::vector<double> random_values_; // uniform policy, ((t * S + s) * D)
};

/// Root value set of a search that has run at least one trial, ccs-pruned.
PointSet extract_root_ccs(const Search& search);

} // namespace chmcts
