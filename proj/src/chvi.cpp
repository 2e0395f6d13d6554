#include "chmcts/chvi.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace chmcts {

namespace {

PointSet terminal_set(const Momdp& model, StateId s, int t) {
    return PointSet::singleton(model.terminal_value(s, t));
}

PointSet backup_q(const Momdp& model, StateId s, ActionId a, const std::vector<PointSet>& next,
                  std::size_t next_base, PruneMode mode) {
    const auto succ = model.successors(s, a);
    std::vector<WeightedSet> terms;
    terms.reserve(succ.size());
    for (const auto& x : succ) terms.push_back({x.probability, &next[next_base + x.state]});
    return expected_set(terms, model.reward(s, a), mode);
}

} // namespace

const PointSet& ChviSolution::value_set(StateId s, int t) const {
    if (values_.empty()) throw std::logic_error("value tables were not kept for this solve");
    if (!complete_) throw std::logic_error("CHVI solve did not complete");
    if (s >= model_->num_states() || t < 0 || t > model_->horizon()) {
        throw std::out_of_range("value_set: (state, t) out of range");
    }
    return values_[static_cast<std::size_t>(t) * model_->num_states() + s];
}

PointSet ChviSolution::q_set(StateId s, ActionId a, int t) const {
    if (t < 0 || t >= model_->horizon()) throw std::out_of_range("q_set: t out of range");
    if (model_->is_terminal(s)) throw std::invalid_argument("q_set: terminal state");
    (void)value_set(s, t); // range and completeness checks
    return backup_q(*model_, s, a, values_,
                    static_cast<std::size_t>(t + 1) * model_->num_states(), prune_);
}

ChviSolution chvi_solve(const Momdp& model, const ChviOptions& options) {
    const std::size_t S = model.num_states();
    const std::size_t A = model.num_actions();
    const std::size_t D = model.num_objectives();
    const int H = model.horizon();

    ChviSolution sol;
    sol.model_ = &model;
    sol.prune_ = options.prune;

    std::vector<PointSet> next(S), cur(S);
    if (options.keep_tables) sol.values_.resize(S * static_cast<std::size_t>(H + 1));

    for (StateId s = 0; s < S; ++s) {
        next[s] = model.is_terminal(s) ? terminal_set(model, s, H) : PointSet::zero(D);
    }
    if (options.keep_tables) {
        for (StateId s = 0; s < S; ++s) sol.values_[static_cast<std::size_t>(H) * S + s] = next[s];
    }

    auto out_of_budget = [&] {
        return options.backup_budget && sol.backups_ >= *options.backup_budget;
    };

    for (int t = H - 1; t >= 0; --t) {
        for (StateId s = 0; s < S; ++s) {
            if (out_of_budget()) {
                sol.complete_ = false;
                sol.root_ = PointSet::zero(D);
                sol.values_.clear();
                return sol;
            }
            if (model.is_terminal(s)) {
                cur[s] = terminal_set(model, s, t);
            } else {
                PointSet all(D);
                for (ActionId a = 0; a < A; ++a) {
                    all.append(backup_q(model, s, a, next, 0, options.prune));
                    ++sol.chance_backups_;
                }
                cur[s] = prune(all, options.prune);
            }
            ++sol.decision_backups_;
            sol.backups_ = sol.decision_backups_ + sol.chance_backups_;
        }
        std::swap(cur, next);
        if (options.keep_tables) {
            for (StateId s = 0; s < S; ++s) sol.values_[static_cast<std::size_t>(t) * S + s] = next[s];
        }
    }
    sol.complete_ = true;
    sol.root_ = next[model.initial_state()];
    return sol;
}

DeterministicPolicy extract_policy(const ChviSolution& sol, const WeightVector& w) {
    const Momdp& model = sol.model();
    if (!sol.complete() || !sol.has_tables()) {
        throw std::logic_error("extract_policy requires a complete solve with value tables");
    }
    const std::size_t S = model.num_states();
    const int H = model.horizon();
    DeterministicPolicy policy(S, H);

    // max_w over Q(s,a,t) = w.R(s,a) + sum_j p_j max_w V(s_j, t+1), because the
    // linear maximum distributes over Minkowski sums.
    std::vector<double> best_next(S), best_cur(S);
    for (StateId s = 0; s < S; ++s) best_next[s] = max_scalarized_value(sol.value_set(s, H), w);
    for (int t = H - 1; t >= 0; --t) {
        for (StateId s = 0; s < S; ++s) {
            if (model.is_terminal(s)) {
                best_cur[s] = max_scalarized_value(sol.value_set(s, t), w);
                continue;
            }
            ActionId best_a = 0;
            double best_v = -INFINITY;
            for (ActionId a = 0; a < model.num_actions(); ++a) {
                double v = linear_scalarize(model.reward(s, a), w);
                for (const auto& x : model.successors(s, a)) v += x.probability * best_next[x.state];
                if (a == 0 || v > best_v + 1e-12 * std::max(1.0, std::abs(best_v))) {
                    best_v = v;
                    best_a = a;
                }
            }
            policy.set(s, t, best_a);
            best_cur[s] = best_v;
        }
        std::swap(best_cur, best_next);
    }
    return policy;
}

PointSet true_ccs(const Momdp& model) {
    ChviOptions opts;
    opts.keep_tables = false;
    return chvi_solve(model, opts).root();
}

std::string solution_to_json(const ChviSolution& sol, bool full_table) {
    nlohmann::ordered_json j;
    j["complete"] = sol.complete();
    j["prune"] = to_string(sol.prune_mode());
    j["backups"] = sol.backup_count();
    j["ccs"] = nlohmann::json::parse(to_json_string(sol.root()));
    j["hypervolume"] = hypervolume(sol.root(), Point(sol.root().dim(), 0.0));
    if (full_table && sol.has_tables() && sol.complete()) {
        auto& table = j["values"] = nlohmann::ordered_json::array();
        const Momdp& m = sol.model();
        for (int t = 0; t <= m.horizon(); ++t) {
            for (StateId s = 0; s < m.num_states(); ++s) {
                table.push_back({{"s", s},
                                 {"t", t},
                                 {"set", nlohmann::json::parse(to_json_string(sol.value_set(s, t)))}});
            }
        }
    }
    return j.dump(1);
}

} // namespace chmcts
