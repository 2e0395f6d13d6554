#include "chmcts/tree.hpp"

#include <chrono>
#include <deque>
#include <stdexcept>

#include <json.hpp>

namespace chmcts {

SearchConfig SearchConfig::online() {
    SearchConfig c;
    c.labelling = false;
    c.stop_when_labelled = false;
    c.rollout = true;
    return c;
}

SearchConfig SearchConfig::offline() {
    SearchConfig c;
    c.labelling = true;
    c.stop_when_labelled = true;
    c.rollout = false;
    return c;
}

// ---- tree ----------------------------------------------------------------------

SearchTree::SearchTree(const Momdp& model, PruneMode prune) : model_(&model), prune_(prune) {}

NodeId SearchTree::add_decision(StateId s, int depth, bool labelling) {
    const bool terminal = model_->is_terminal(s);
    DecisionNode n{s, depth, {}, 0, {}, false, terminal || depth >= model_->horizon()};
    n.value = terminal ? PointSet::singleton(model_->terminal_value(s, depth))
                       : PointSet::zero(model_->num_objectives());
    if (!n.leaf) n.children.assign(model_->num_actions(), kNoNode);
    if (labelling && n.leaf) {
        n.labelled = true;
        ++labelled_;
    }
    decisions_.push_back(std::move(n));
    return static_cast<NodeId>(decisions_.size() - 1);
}

NodeId SearchTree::add_chance(NodeId parent, ActionId a) {
    const DecisionNode& d = decisions_[parent];
    if (d.leaf) throw std::logic_error("cannot expand a leaf decision node");
    ChanceNode c{d.state, a, d.depth, PointSet(model_->num_objectives()), 0, {}, 0, false};
    c.children.assign(model_->successors(d.state, a).size(), kNoNode);
    chances_.push_back(std::move(c));
    const auto id = static_cast<NodeId>(chances_.size() - 1);
    decisions_[parent].children[a] = id;
    return id;
}

void SearchTree::link_outcome(NodeId chance, std::size_t slot, NodeId child) {
    auto& c = chances_[chance];
    if (c.children[slot] == kNoNode) ++c.expanded;
    c.children[slot] = child;
}

bool SearchTree::backup_chance(NodeId id, bool renormalize, bool labelling) {
    ChanceNode& c = chances_[id];
    if (c.expanded == 0) throw std::logic_error("backup_chance: no expanded children");
    const auto succ = model_->successors(c.state, c.action);

    double total = 0.0;
    bool all_labelled = c.expanded == succ.size();
    for (std::size_t i = 0; i < succ.size(); ++i) {
        if (c.children[i] == kNoNode) continue;
        total += succ[i].probability;
        all_labelled = all_labelled && decisions_[c.children[i]].labelled;
    }

    std::vector<WeightedSet> terms;
    terms.reserve(succ.size() + 1);
    for (std::size_t i = 0; i < succ.size(); ++i) {
        if (c.children[i] == kNoNode) continue;
        const double p = renormalize ? succ[i].probability / total : succ[i].probability;
        terms.push_back({p, &decisions_[c.children[i]].value});
    }
    const PointSet zero = PointSet::zero(model_->num_objectives());
    if (!renormalize && 1.0 - total > 1e-12) terms.push_back({1.0 - total, &zero});
    if (!renormalize && terms.size() > 1) {
        // make the weights sum to one exactly
        double s = 0.0;
        for (const auto& t : terms) s += t.probability;
        for (auto& t : terms) t.probability /= s;
    }

    PointSet q = expected_set(terms, model_->reward(c.state, c.action), prune_);
    const bool label = labelling && all_labelled;
    const bool changed = !(q == c.q) || label != c.labelled;
    c.q = std::move(q);
    if (label && !c.labelled) ++labelled_;
    c.labelled = label;
    return changed;
}

bool SearchTree::backup_decision(NodeId id, bool labelling) {
    DecisionNode& d = decisions_[id];
    if (d.leaf) return false;
    PointSet all(model_->num_objectives());
    bool any = false;
    bool all_labelled = true;
    for (NodeId c : d.children) {
        if (c == kNoNode) {
            all_labelled = false;
            continue;
        }
        if (chances_[c].q.empty()) {
            all_labelled = false;
            continue;
        }
        any = true;
        all.append(chances_[c].q);
        all_labelled = all_labelled && chances_[c].labelled;
    }
    if (!any) throw std::logic_error("backup_decision: no expanded children");
    PointSet v = prune(all, prune_);
    const bool label = labelling && all_labelled;
    const bool changed = !(v == d.value) || label != d.labelled;
    d.value = std::move(v);
    if (label && !d.labelled) ++labelled_;
    d.labelled = label;
    return changed;
}

NodeView SearchTree::view(NodeId id, ViewScratch& scratch) const {
    const DecisionNode& d = decisions_[id];
    const std::size_t A = model_->num_actions();
    scratch.visits.assign(A, 0);
    scratch.sets.assign(A, nullptr);
    for (ActionId a = 0; a < d.children.size(); ++a) {
        const NodeId c = d.children[a];
        if (c == kNoNode || chances_[c].q.empty()) continue;
        scratch.visits[a] = chances_[c].visits;
        scratch.sets[a] = &chances_[c].q;
    }
    return {A, model_->num_objectives(), d.depth, d.visits, scratch.visits, scratch.sets};
}

std::string SearchTree::to_json(std::size_t max_nodes) const {
    using nlohmann::ordered_json;
    ordered_json nodes = ordered_json::array();
    std::deque<NodeId> queue;
    if (!decisions_.empty()) queue.push_back(0);
    std::size_t emitted = 0;
    while (!queue.empty() && emitted < max_nodes) {
        const NodeId id = queue.front();
        queue.pop_front();
        const DecisionNode& d = decisions_[id];
        ordered_json n;
        n["id"] = id;
        n["state"] = d.state;
        n["depth"] = d.depth;
        n["visits"] = d.visits;
        n["labelled"] = d.labelled;
        n["value"] = nlohmann::json::parse(to_json_string(d.value));
        auto& acts = n["actions"] = ordered_json::array();
        for (ActionId a = 0; a < d.children.size(); ++a) {
            const NodeId cid = d.children[a];
            if (cid == kNoNode) continue;
            const ChanceNode& c = chances_[cid];
            ordered_json outcomes = ordered_json::array();
            for (NodeId child : c.children) {
                if (child == kNoNode) continue;
                outcomes.push_back(child);
                queue.push_back(child);
            }
            acts.push_back({{"action", a},
                            {"visits", c.visits},
                            {"labelled", c.labelled},
                            {"q", nlohmann::json::parse(to_json_string(c.q))},
                            {"children", outcomes}});
        }
        nodes.push_back(std::move(n));
        ++emitted;
    }
    ordered_json j;
    j["decision_nodes"] = decisions_.size();
    j["chance_nodes"] = chances_.size();
    j["truncated"] = emitted < decisions_.size();
    j["nodes"] = std::move(nodes);
    return j.dump(1);
}

std::uint64_t propagate_backups(SearchTree& tree, std::span<const PathStep> path, const SearchConfig& cfg) {
    std::uint64_t count = 0;
    for (const PathStep& step : path) {
        ++count;
        if (!tree.backup_chance(step.chance, cfg.renormalize, cfg.labelling) && cfg.backup_pruning) break;
        ++count;
        if (!tree.backup_decision(step.decision, cfg.labelling) && cfg.backup_pruning) break;
    }
    return count;
}

std::size_t select_outcome(const SearchTree& tree, NodeId id, bool labelling, Rng& rng) {
    const ChanceNode& c = tree.chance(id);
    const auto succ = tree.model().successors(c.state, c.action);
    if (succ.size() == 1) return 0;

    std::vector<std::size_t> open;
    if (labelling) {
        for (std::size_t i = 0; i < succ.size(); ++i) {
            if (c.children[i] == kNoNode || !tree.decision(c.children[i]).labelled) open.push_back(i);
        }
    }
    if (open.empty() || open.size() == succ.size()) {
        double u = rng.uniform();
        for (std::size_t i = 0; i < succ.size(); ++i) {
            if (u < succ[i].probability) return i;
            u -= succ[i].probability;
        }
        return succ.size() - 1;
    }
    if (open.size() == 1) return open[0];
    double total = 0.0;
    for (std::size_t i : open) total += succ[i].probability;
    double u = rng.uniform() * total;
    for (std::size_t i : open) {
        if (u < succ[i].probability) return i;
        u -= succ[i].probability;
    }
    return open.back();
}

// ---- search ----------------------------------------------------------------------

Search::Search(const Momdp& model, ActionSelection& strategy, SearchConfig config, std::uint64_t seed)
    : model_(&model), strategy_(&strategy), config_(config), rng_(seed), tree_(model, config.prune) {
    strategy_->reset();
    tree_.add_decision(model.initial_state(), 0, config_.labelling);
    stats_.nodes_created = 1;
    stats_.labelled_count = tree_.labelled_count();
    stats_.root_labelled = tree_.decision(0).labelled;
}

Point Search::rollout(StateId s, int t, Rng& rng) const {
    Point ret(model_->num_objectives(), 0.0);
    const int H = model_->horizon();
    while (t < H && !model_->is_terminal(s)) {
        const auto a = static_cast<ActionId>(rng.below(model_->num_actions()));
        const auto r = model_->reward(s, a);
        for (std::size_t i = 0; i < ret.size(); ++i) ret[i] += r[i];
        s = sample_transition(*model_, s, a, rng);
        ++t;
        if (model_->is_terminal(s)) model_->add_terminal_value(s, t, ret);
    }
    return ret;
}

TrialRecord Search::run_trial(const WeightVector& w) {
    const std::size_t D = model_->num_objectives();
    struct Step {
        NodeId decision;
        NodeId chance;
        Choice choice;
        Point reward; // immediate reward, plus the terminal value on arrival
    };
    std::vector<Step> steps;
    SearchTree::ViewScratch scratch;
    Point tail(D, 0.0);

    NodeId cur = tree_.root();
    tree_.decision_mut(cur).visits += 1;
    auto room = [&](std::size_t n) { return !config_.node_cap || tree_.size() + n <= *config_.node_cap; };

    while (true) {
        const DecisionNode& d = tree_.decision(cur);
        if (d.leaf) break;
        const NodeView v = tree_.view(cur, scratch);
        const Choice choice = strategy_->select(cur, v, w, rng_);
        if (choice.action >= model_->num_actions()) throw std::logic_error("strategy returned an invalid action");

        NodeId ch = tree_.decision(cur).children[choice.action];
        if (ch == kNoNode) {
            if (!room(2)) {
                // Tree is full: finish the episode without growing it.
                steps.push_back({cur, kNoNode, choice, Point(D, 0.0)});
                const StateId s = d.state;
                const auto r = model_->reward(s, choice.action);
                std::copy(r.begin(), r.end(), steps.back().reward.begin());
                const StateId next = sample_transition(*model_, s, choice.action, rng_);
                if (model_->is_terminal(next)) model_->add_terminal_value(next, d.depth + 1, steps.back().reward);
                if (config_.rollout) tail = rollout(next, d.depth + 1, rng_);
                break;
            }
            ch = tree_.add_chance(cur, choice.action);
            ++stats_.nodes_created;
        }
        tree_.chance_mut(ch).visits += 1;

        const std::size_t slot = select_outcome(tree_, ch, config_.labelling, rng_);
        const ChanceNode& c = tree_.chance(ch);
        const StateId next = model_->successors(c.state, c.action)[slot].state;
        const int depth = c.depth + 1;
        Point reward(model_->reward(c.state, c.action).begin(), model_->reward(c.state, c.action).end());
        if (model_->is_terminal(next)) model_->add_terminal_value(next, depth, reward);
        steps.push_back({cur, ch, choice, std::move(reward)});

        NodeId child = c.children[slot];
        bool fresh = false;
        if (child == kNoNode) {
            if (!room(1)) {
                if (config_.rollout) tail = rollout(next, depth, rng_);
                steps.back().chance = kNoNode; // nothing new to back up
                break;
            }
            child = tree_.add_decision(next, depth, config_.labelling);
            tree_.link_outcome(ch, slot, child);
            ++stats_.nodes_created;
            fresh = true;
        }
        cur = child;
        tree_.decision_mut(cur).visits += 1;
        if (fresh && !config_.expand_full_path) {
            if (config_.rollout && !tree_.decision(cur).leaf) tail = rollout(next, depth, rng_);
            break;
        }
    }

    // Returns-to-go, leaf to root.
    std::vector<Point> to_go(steps.size() + 1, tail);
    for (std::size_t i = steps.size(); i-- > 0;) {
        to_go[i] = to_go[i + 1];
        for (std::size_t j = 0; j < D; ++j) to_go[i][j] += steps[i].reward[j];
    }

    std::vector<PathStep> path;
    for (std::size_t i = steps.size(); i-- > 0;) {
        if (steps[i].chance == kNoNode) {
            if (!path.empty()) break;
            continue;
        }
        path.push_back({steps[i].decision, steps[i].chance});
    }
    // Only a contiguous suffix ending at the root is backed up.
    const std::uint64_t backups = propagate_backups(tree_, path, config_);
    stats_.backups_performed += backups;

    for (const Step& s : steps) {
        const DecisionNode& d = tree_.decision(s.decision);
        const NodeView v = tree_.view(s.decision, scratch);
        const std::size_t idx = &s - steps.data();
        double signal = linear_scalarize(to_go[idx], w);
        if (config_.feedback == Feedback::q_value && s.chance != kNoNode && !tree_.chance(s.chance).q.empty()) {
            signal = max_scalarized_value(tree_.chance(s.chance).q, w);
        }
        strategy_->update(s.decision, v, s.choice, w, signal,
                          model_->return_bound(d.depth));
    }

    stats_.trials_run += 1;
    stats_.labelled_count = tree_.labelled_count();
    stats_.root_labelled = tree_.decision(0).labelled;
    return {stats_.trials_run - 1, w, to_go[0], backups};
}

const SearchStats& Search::run(const Budget& budget, Rng& contexts, const TrialHook& hook) {
    if (!(budget.amount > 0)) throw std::invalid_argument("search budget must be positive");
    const auto start = std::chrono::steady_clock::now();
    const double base_time = stats_.wall_time;
    const std::uint64_t base_trials = stats_.trials_run;
    const std::uint64_t base_backups = stats_.backups_performed;
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
    auto spent = [&] {
        switch (budget.kind) {
        case Budget::Kind::trials: return double(stats_.trials_run - base_trials) >= budget.amount;
        case Budget::Kind::backups: return double(stats_.backups_performed - base_backups) >= budget.amount;
        case Budget::Kind::seconds: return elapsed() >= budget.amount;
        }
        return true;
    };
    while (!spent()) {
        if (config_.stop_when_labelled && stats_.root_labelled) break;
        const WeightVector w = WeightVector::sample(model_->num_objectives(), contexts);
        const TrialRecord rec = run_trial(w);
        stats_.wall_time = base_time + elapsed();
        if (hook) hook(rec, stats_);
    }
    stats_.wall_time = base_time + elapsed();
    return stats_;
}

PointSet Search::root_ccs() const {
    const PointSet& v = tree_.decision(0).value;
    return v.dim() <= 2 ? prune_ccs(v) : v;
}

std::span<const double> Search::random_value(StateId s, int t) const {
    const std::size_t S = model_->num_states(), D = model_->num_objectives();
    const int H = model_->horizon();
    if (random_values_.empty()) {
        random_values_.assign(S * static_cast<std::size_t>(H + 1) * D, 0.0);
        auto at = [&](StateId x, int k) { return random_values_.data() + (static_cast<std::size_t>(k) * S + x) * D; };
        for (int k = H; k >= 0; --k) {
            for (StateId x = 0; x < S; ++x) {
                double* out = at(x, k);
                if (model_->is_terminal(x)) {
                    const Point tv = model_->terminal_value(x, k);
                    std::copy(tv.begin(), tv.end(), out);
                    continue;
                }
                if (k == H) continue;
                const double inv = 1.0 / double(model_->num_actions());
                for (ActionId a = 0; a < model_->num_actions(); ++a) {
                    const auto r = model_->reward(x, a);
                    for (std::size_t i = 0; i < D; ++i) out[i] += inv * r[i];
                    for (const auto& y : model_->successors(x, a)) {
                        const double* nv = at(y.state, k + 1);
                        for (std::size_t i = 0; i < D; ++i) out[i] += inv * y.probability * nv[i];
                    }
                }
            }
        }
    }
    return {random_values_.data() + (static_cast<std::size_t>(t) * S + s) * D, D};
}

Point Search::exploration_value_at(NodeId id, const WeightVector& w) const {
    const DecisionNode& d = tree_.decision(id);
    const std::size_t D = model_->num_objectives();
    if (d.leaf) return d.value.point(0);
    SearchTree::ViewScratch scratch;
    const NodeView v = tree_.view(id, scratch);
    const auto dist = strategy_->action_distribution(id, v, w);
    Point out(D, 0.0);
    for (ActionId a = 0; a < dist.size(); ++a) {
        if (dist[a] <= 0.0) continue;
        Point q(model_->reward(d.state, a).begin(), model_->reward(d.state, a).end());
        const auto succ = model_->successors(d.state, a);
        const NodeId ch = d.children[a];
        for (std::size_t i = 0; i < succ.size(); ++i) {
            const NodeId child = ch == kNoNode ? kNoNode : tree_.chance(ch).children[i];
            if (child != kNoNode) {
                const Point cv = exploration_value_at(child, w);
                for (std::size_t j = 0; j < D; ++j) q[j] += succ[i].probability * cv[j];
            } else {
                const auto rv = random_value(succ[i].state, d.depth + 1);
                for (std::size_t j = 0; j < D; ++j) q[j] += succ[i].probability * rv[j];
            }
        }
        for (std::size_t j = 0; j < D; ++j) out[j] += dist[a] * q[j];
    }
    return out;
}

Point Search::exploration_value(const WeightVector& w) const { return exploration_value_at(tree_.root(), w); }

PointSet extract_root_ccs(const Search& search) {
    if (search.stats().trials_run == 0) throw std::logic_error("extract_root_ccs: no trials have been run");
    return search.root_ccs();
}

} // namespace chmcts
