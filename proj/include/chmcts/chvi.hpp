#pragma once

// Exact finite-horizon Convex Hull Value Iteration.

#include <cstdint>
#include <optional>
#include <vector>

#include "chmcts/geometry.hpp"
#include "chmcts/momdp.hpp"

namespace chmcts {

struct ChviOptions {
    PruneMode prune = PruneMode::ccs;
    /// Keep V(s, t) for every timestep (needed by extract_policy). When false
    /// only two layers are held in memory.
    bool keep_tables = true;
    /// Stop once this many backups have been performed. An interrupted solve
    /// reports complete() == false and a root value of {0}.
    std::optional<std::uint64_t> backup_budget;
};

/// Backup counting: one decision backup per V(s, t) recomputation and one
/// chance backup per Q(s, a, t) recomputation, both counted in backup_count.
class ChviSolution {
public:
    const Momdp& model() const { return *model_; }
    PruneMode prune_mode() const { return prune_; }
    bool complete() const { return complete_; }
    bool has_tables() const { return !values_.empty(); }
    std::uint64_t backup_count() const { return backups_; }
    std::uint64_t decision_backups() const { return decision_backups_; }
    std::uint64_t chance_backups() const { return chance_backups_; }

    /// V(s̄, 0), or {0} when the solve was interrupted by its budget.
    const PointSet& root() const { return root_; }
    /// V(s, t) for t in [0, H]; requires keep_tables.
    const PointSet& value_set(StateId s, int t) const;
    /// Q(s, a, t), recomputed from the stored value tables.
    PointSet q_set(StateId s, ActionId a, int t) const;

private:
    friend ChviSolution chvi_solve(const Momdp&, const ChviOptions&);
    const Momdp* model_ = nullptr;
    PruneMode prune_ = PruneMode::ccs;
    bool complete_ = false;
    std::uint64_t backups_ = 0;
    std::uint64_t decision_backups_ = 0;
    std::uint64_t chance_backups_ = 0;
    PointSet root_;
    std::vector<PointSet> values_; // (t * S + s), t in [0, H]
};

/// Backward induction t = H-1 ... 0. The model must outlive the solution.
ChviSolution chvi_solve(const Momdp& model, const ChviOptions& options = {});

/// Greedy policy for weight w: at each (s, t) the action whose Q-set attains
/// the largest w-scalarized value, lowest action id on ties.
DeterministicPolicy extract_policy(const ChviSolution& solution, const WeightVector& w);

/// V(s̄, 0) of a complete ccs-pruned solve.
PointSet true_ccs(const Momdp& model);

/// Root value as JSON; with `full_table` every stored V(s, t) is included.
std::string solution_to_json(const ChviSolution& solution, bool full_table);

} // namespace chmcts
