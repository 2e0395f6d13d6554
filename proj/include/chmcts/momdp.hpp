#pragma once

// Finite-horizon multi-objective MDPs: model storage, validation, trajectory
// simulation and exact policy evaluation.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "chmcts/geometry.hpp"
#include "chmcts/rng.hpp"

namespace chmcts {

using StateId = std::uint32_t;
using ActionId = std::uint32_t;

struct Successor {
    StateId state;
    double probability;
};

/// Raw, unvalidated model as read from a file or produced by a generator.
///
/// Terminal states absorb. A terminal state may carry a value collected on
/// arrival at timestep t: lump + (H - t) * per_step. States without an entry
/// are worth the zero vector.
struct ModelDescription {
    struct RewardEntry {
        StateId s;
        ActionId a;
        Point vector;
    };
    struct TransitionEntry {
        StateId s;
        ActionId a;
        std::vector<Successor> successors;
    };
    struct TerminalValueEntry {
        StateId s;
        Point lump;
        Point per_step;
    };

    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    std::size_t num_objectives = 0;
    int horizon = 0;
    StateId initial_state = 0;
    std::vector<StateId> terminals;
    std::vector<RewardEntry> rewards;
    std::vector<TransitionEntry> transitions;
    std::vector<TerminalValueEntry> terminal_values;
};

struct Violation {
    std::string message;
    std::optional<StateId> state;
    std::optional<ActionId> action;
};

/// Every invariant violation of the description; empty means valid.
std::vector<Violation> validate(const ModelDescription& desc);

class ModelError : public std::runtime_error {
public:
    explicit ModelError(std::vector<Violation> violations);
    const std::vector<Violation>& violations() const { return violations_; }

private:
    std::vector<Violation> violations_;
};

/// Immutable validated MOMDP. Non-terminal states define every action;
/// successor probabilities are renormalized once on construction.
class Momdp {
public:
    /// Throws ModelError listing every violation.
    explicit Momdp(const ModelDescription& desc);

    std::size_t num_states() const { return num_states_; }
    std::size_t num_actions() const { return num_actions_; }
    std::size_t num_objectives() const { return num_objectives_; }
    int horizon() const { return horizon_; }
    StateId initial_state() const { return initial_; }

    bool is_terminal(StateId s) const { return terminal_[s] != 0; }
    std::span<const double> reward(StateId s, ActionId a) const {
        return {rewards_.data() + (static_cast<std::size_t>(s) * num_actions_ + a) * num_objectives_,
                num_objectives_};
    }
    std::span<const Successor> successors(StateId s, ActionId a) const {
        const std::size_t k = static_cast<std::size_t>(s) * num_actions_ + a;
        return {succ_.data() + succ_offsets_[k], succ_offsets_[k + 1] - succ_offsets_[k]};
    }

    /// Value of arriving in terminal state s at timestep t (zero if s has no
    /// terminal value).
    Point terminal_value(StateId s, int t) const;
    /// Adds terminal_value(s, t) into `acc`.
    void add_terminal_value(StateId s, int t, std::span<double> acc) const;
    bool has_terminal_values() const { return !terminal_lump_.empty(); }

    /// Upper bound on the largest component of any return-to-go from a
    /// decision at timestep `depth`; bounds the linear scalarization for every
    /// simplex weight.
    double return_bound(int depth) const;

    ModelDescription describe() const;

private:
    std::size_t num_states_;
    std::size_t num_actions_;
    std::size_t num_objectives_;
    int horizon_;
    StateId initial_;
    std::vector<char> terminal_;
    std::vector<double> rewards_;
    std::vector<std::size_t> succ_offsets_;
    std::vector<Successor> succ_;
    std::vector<double> terminal_lump_;     // S * D when present
    std::vector<double> terminal_per_step_; // S * D when present
    double max_step_component_ = 0.0;
};

/// Deterministic finite-horizon policy: an action per (state, timestep).
class DeterministicPolicy {
public:
    DeterministicPolicy(std::size_t num_states, int horizon);

    void set(StateId s, int t, ActionId a);
    std::optional<ActionId> action(StateId s, int t) const;
    std::size_t num_states() const { return num_states_; }
    int horizon() const { return horizon_; }

private:
    std::size_t num_states_;
    int horizon_;
    std::vector<std::int64_t> table_;
};

struct Trajectory {
    struct Step {
        StateId state;
        ActionId action;
        Point reward; // includes the terminal value when next is terminal
        StateId next;
    };
    std::vector<Step> steps;
    Point cumulative_return;
};

/// Exploration policy: (state, timestep, context weight) -> action.
using ExplorationPolicy = std::function<ActionId(StateId, int, const WeightVector&)>;

/// Samples s' ~ T(s, a, .). Throws std::logic_error for terminal s.
StateId sample_transition(const Momdp& model, StateId s, ActionId a, Rng& rng);

/// Runs from the initial state for at most H steps, stopping at terminals.
Trajectory simulate(const Momdp& model, const ExplorationPolicy& policy, const WeightVector& w,
                    Rng& rng);

/// Exact expected cumulative reward from the initial state by backward
/// induction over the (state, timestep) pairs the policy can reach.
Point evaluate_policy(const Momdp& model, const DeterministicPolicy& policy);

/// Model file format (JSON).
std::string model_to_json(const Momdp& model);
Momdp model_from_json(const std::string& text);
Momdp load_model(const std::string& path);
void save_model(const Momdp& model, const std::string& path);

} // namespace chmcts
