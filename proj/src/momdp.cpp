#include "chmcts/momdp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace chmcts {

namespace {

std::string loc(StateId s, ActionId a) {
    return "(" + std::to_string(s) + "," + std::to_string(a) + ")";
}

std::string format_number(double x) {
    std::ostringstream os;
    os.precision(12);
    os << x;
    return os.str();
}

std::string join_violations(const std::vector<Violation>& v) {
    std::string msg = "invalid model:";
    for (const auto& x : v) msg += "\n  - " + x.message;
    return msg;
}

} // namespace

ModelError::ModelError(std::vector<Violation> violations)
    : std::runtime_error(join_violations(violations)), violations_(std::move(violations)) {}

std::vector<Violation> validate(const ModelDescription& d) {
    std::vector<Violation> out;
    auto fail = [&](std::string msg, std::optional<StateId> s = {},
                    std::optional<ActionId> a = {}) { out.push_back({std::move(msg), s, a}); };

    if (d.num_states == 0) fail("num_states must be positive");
    if (d.num_actions == 0) fail("num_actions must be positive");
    if (d.num_objectives == 0) fail("num_objectives must be positive");
    if (d.horizon < 0) fail("horizon must be nonnegative");
    if (d.initial_state >= d.num_states) {
        fail("initial_state " + std::to_string(d.initial_state) + " out of range", d.initial_state);
    }
    if (!out.empty()) return out;

    std::vector<char> terminal(d.num_states, 0);
    for (StateId s : d.terminals) {
        if (s >= d.num_states) {
            fail("terminal state " + std::to_string(s) + " out of range", s);
        } else {
            terminal[s] = 1;
        }
    }

    const std::size_t sa = d.num_states * d.num_actions;
    std::vector<char> has_reward(sa, 0), has_trans(sa, 0);
    for (const auto& r : d.rewards) {
        if (r.s >= d.num_states || r.a >= d.num_actions) {
            fail("reward entry " + loc(r.s, r.a) + " out of range", r.s, r.a);
            continue;
        }
        if (r.vector.size() != d.num_objectives) {
            fail("reward at " + loc(r.s, r.a) + " has " + std::to_string(r.vector.size()) +
                     " components, expected " + std::to_string(d.num_objectives),
                 r.s, r.a);
        }
        for (double x : r.vector) {
            if (!std::isfinite(x)) fail("non-finite reward at " + loc(r.s, r.a), r.s, r.a);
        }
        auto& flag = has_reward[r.s * d.num_actions + r.a];
        if (flag) fail("duplicate reward entry at " + loc(r.s, r.a), r.s, r.a);
        flag = 1;
    }
    for (const auto& t : d.transitions) {
        if (t.s >= d.num_states || t.a >= d.num_actions) {
            fail("transition entry " + loc(t.s, t.a) + " out of range", t.s, t.a);
            continue;
        }
        auto& flag = has_trans[t.s * d.num_actions + t.a];
        if (flag) fail("duplicate transition entry at " + loc(t.s, t.a), t.s, t.a);
        flag = 1;
        if (t.successors.empty()) fail("no successors at " + loc(t.s, t.a), t.s, t.a);
        double sum = 0.0;
        for (const auto& succ : t.successors) {
            if (succ.state >= d.num_states) {
                fail("successor " + std::to_string(succ.state) + " out of range at " +
                         loc(t.s, t.a),
                     t.s, t.a);
            }
            if (!(succ.probability >= 0.0) || !std::isfinite(succ.probability)) {
                fail("negative or non-finite probability at " + loc(t.s, t.a), t.s, t.a);
            }
            sum += succ.probability;
        }
        if (!t.successors.empty() && std::abs(sum - 1.0) > 1e-9) {
            fail("probabilities sum " + format_number(sum) + " at " + loc(t.s, t.a), t.s, t.a);
        }
    }
    for (StateId s = 0; s < d.num_states; ++s) {
        if (terminal[s]) continue;
        for (ActionId a = 0; a < d.num_actions; ++a) {
            if (!has_trans[s * d.num_actions + a]) {
                fail("missing transitions at " + loc(s, a), s, a);
            }
        }
    }
    for (const auto& tv : d.terminal_values) {
        if (tv.s >= d.num_states || !terminal[tv.s]) {
            fail("terminal value for non-terminal state " + std::to_string(tv.s), tv.s);
            continue;
        }
        if (tv.lump.size() != d.num_objectives || tv.per_step.size() != d.num_objectives) {
            fail("terminal value at state " + std::to_string(tv.s) + " has wrong dimension", tv.s);
            continue;
        }
        for (double x : tv.lump) {
            if (!std::isfinite(x)) fail("non-finite terminal value", tv.s);
        }
        for (double x : tv.per_step) {
            if (!std::isfinite(x)) fail("non-finite terminal value", tv.s);
        }
    }
    return out;
}

// ---------------------------------------------------------------- Momdp

Momdp::Momdp(const ModelDescription& d) {
    if (auto v = validate(d); !v.empty()) throw ModelError(std::move(v));
    num_states_ = d.num_states;
    num_actions_ = d.num_actions;
    num_objectives_ = d.num_objectives;
    horizon_ = d.horizon;
    initial_ = d.initial_state;
    terminal_.assign(num_states_, 0);
    for (StateId s : d.terminals) terminal_[s] = 1;

    const std::size_t sa = num_states_ * num_actions_;
    rewards_.assign(sa * num_objectives_, 0.0);
    for (const auto& r : d.rewards) {
        std::copy(r.vector.begin(), r.vector.end(),
                  rewards_.begin() + (r.s * num_actions_ + r.a) * num_objectives_);
    }

    std::vector<std::vector<Successor>> lists(sa);
    for (const auto& t : d.transitions) {
        if (terminal_[t.s]) continue;
        // Merge repeated successors, drop zero-probability ones, renormalize.
        std::map<StateId, double> merged;
        double sum = 0.0;
        for (const auto& succ : t.successors) {
            if (succ.probability > 0.0) {
                merged[succ.state] += succ.probability;
                sum += succ.probability;
            }
        }
        auto& list = lists[t.s * num_actions_ + t.a];
        for (const auto& [s2, p] : merged) list.push_back({s2, p / sum});
    }
    succ_offsets_.assign(sa + 1, 0);
    for (std::size_t k = 0; k < sa; ++k) succ_offsets_[k + 1] = succ_offsets_[k] + lists[k].size();
    succ_.reserve(succ_offsets_.back());
    for (const auto& list : lists) succ_.insert(succ_.end(), list.begin(), list.end());

    if (!d.terminal_values.empty()) {
        terminal_lump_.assign(num_states_ * num_objectives_, 0.0);
        terminal_per_step_.assign(num_states_ * num_objectives_, 0.0);
        for (const auto& tv : d.terminal_values) {
            std::copy(tv.lump.begin(), tv.lump.end(),
                      terminal_lump_.begin() + tv.s * num_objectives_);
            std::copy(tv.per_step.begin(), tv.per_step.end(),
                      terminal_per_step_.begin() + tv.s * num_objectives_);
        }
    }

    max_step_component_ = 0.0;
    for (StateId s = 0; s < num_states_; ++s) {
        if (terminal_[s]) continue;
        for (ActionId a = 0; a < num_actions_; ++a) {
            for (double x : reward(s, a)) max_step_component_ = std::max(max_step_component_, x);
        }
    }
}

Point Momdp::terminal_value(StateId s, int t) const {
    Point v(num_objectives_, 0.0);
    add_terminal_value(s, t, v);
    return v;
}

void Momdp::add_terminal_value(StateId s, int t, std::span<double> acc) const {
    if (terminal_lump_.empty() || !terminal_[s]) return;
    const double remaining = static_cast<double>(horizon_ - t);
    const std::size_t base = static_cast<std::size_t>(s) * num_objectives_;
    for (std::size_t i = 0; i < num_objectives_; ++i) {
        acc[i] += terminal_lump_[base + i] + remaining * terminal_per_step_[base + i];
    }
}

double Momdp::return_bound(int depth) const {
    const double remaining = static_cast<double>(std::max(0, horizon_ - depth));
    double bound = remaining * max_step_component_;
    if (!terminal_lump_.empty()) {
        double best = 0.0;
        for (StateId s = 0; s < num_states_; ++s) {
            if (!terminal_[s]) continue;
            for (std::size_t i = 0; i < num_objectives_; ++i) {
                const std::size_t k = s * num_objectives_ + i;
                best = std::max(best, terminal_lump_[k] +
                                          remaining * std::max(0.0, terminal_per_step_[k]));
            }
        }
        bound += best;
    }
    return bound;
}

ModelDescription Momdp::describe() const {
    ModelDescription d;
    d.num_states = num_states_;
    d.num_actions = num_actions_;
    d.num_objectives = num_objectives_;
    d.horizon = horizon_;
    d.initial_state = initial_;
    for (StateId s = 0; s < num_states_; ++s) {
        if (terminal_[s]) {
            d.terminals.push_back(s);
            if (!terminal_lump_.empty()) {
                const auto b = terminal_lump_.begin() + s * num_objectives_;
                const auto c = terminal_per_step_.begin() + s * num_objectives_;
                Point lump(b, b + num_objectives_), per(c, c + num_objectives_);
                const bool zero = std::all_of(lump.begin(), lump.end(), [](double x) { return x == 0.0; }) &&
                                  std::all_of(per.begin(), per.end(), [](double x) { return x == 0.0; });
                if (!zero) d.terminal_values.push_back({s, std::move(lump), std::move(per)});
            }
            continue;
        }
        for (ActionId a = 0; a < num_actions_; ++a) {
            auto r = reward(s, a);
            d.rewards.push_back({s, a, Point(r.begin(), r.end())});
            auto succ = successors(s, a);
            d.transitions.push_back({s, a, std::vector<Successor>(succ.begin(), succ.end())});
        }
    }
    return d;
}

// ---------------------------------------------------------------- policies

DeterministicPolicy::DeterministicPolicy(std::size_t num_states, int horizon)
    : num_states_(num_states), horizon_(horizon),
      table_(num_states * static_cast<std::size_t>(std::max(horizon, 0)), -1) {}

void DeterministicPolicy::set(StateId s, int t, ActionId a) {
    if (s >= num_states_ || t < 0 || t >= horizon_) {
        throw std::out_of_range("policy entry (" + std::to_string(s) + "," + std::to_string(t) +
                                ") out of range");
    }
    table_[static_cast<std::size_t>(t) * num_states_ + s] = a;
}

std::optional<ActionId> DeterministicPolicy::action(StateId s, int t) const {
    if (s >= num_states_ || t < 0 || t >= horizon_) return std::nullopt;
    const auto a = table_[static_cast<std::size_t>(t) * num_states_ + s];
    if (a < 0) return std::nullopt;
    return static_cast<ActionId>(a);
}

// ---------------------------------------------------------------- dynamics

StateId sample_transition(const Momdp& model, StateId s, ActionId a, Rng& rng) {
    if (model.is_terminal(s)) throw std::logic_error("no transitions from terminal state " + std::to_string(s));
    const auto succ = model.successors(s, a);
    if (succ.size() == 1) return succ[0].state;
    double u = rng.uniform();
    for (const auto& x : succ) {
        if (u < x.probability) return x.state;
        u -= x.probability;
    }
    return succ.back().state;
}

Trajectory simulate(const Momdp& model, const ExplorationPolicy& policy, const WeightVector& w,
                    Rng& rng) {
    Trajectory traj;
    const std::size_t d = model.num_objectives();
    traj.cumulative_return.assign(d, 0.0);
    StateId s = model.initial_state();
    if (model.is_terminal(s)) {
        model.add_terminal_value(s, 0, traj.cumulative_return);
        return traj;
    }
    for (int t = 0; t < model.horizon(); ++t) {
        if (model.is_terminal(s)) break;
        const ActionId a = policy(s, t, w);
        if (a >= model.num_actions()) {
            throw std::runtime_error("policy returned invalid action " + std::to_string(a) +
                                     " at step " + std::to_string(t));
        }
        const StateId next = sample_transition(model, s, a, rng);
        auto r = model.reward(s, a);
        Point reward(r.begin(), r.end());
        if (model.is_terminal(next)) model.add_terminal_value(next, t + 1, reward);
        for (std::size_t i = 0; i < d; ++i) traj.cumulative_return[i] += reward[i];
        traj.steps.push_back({s, a, std::move(reward), next});
        s = next;
    }
    return traj;
}

Point evaluate_policy(const Momdp& model, const DeterministicPolicy& policy) {
    const std::size_t S = model.num_states();
    const int H = model.horizon();
    const std::size_t D = model.num_objectives();
    if (policy.num_states() != S || policy.horizon() != H) {
        throw std::invalid_argument("evaluate_policy: policy shape does not match model");
    }
    std::vector<char> reach(S * static_cast<std::size_t>(H + 1), 0);
    auto reached = [&](StateId s, int t) -> char& { return reach[static_cast<std::size_t>(t) * S + s]; };
    reached(model.initial_state(), 0) = 1;
    for (int t = 0; t < H; ++t) {
        for (StateId s = 0; s < S; ++s) {
            if (!reached(s, t) || model.is_terminal(s)) continue;
            const auto a = policy.action(s, t);
            if (!a) {
                throw std::runtime_error("evaluate_policy: policy undefined at reachable (state " +
                                         std::to_string(s) + ", t " + std::to_string(t) + ")");
            }
            for (const auto& succ : model.successors(s, *a)) reached(succ.state, t + 1) = 1;
        }
    }
    std::vector<double> next(S * D, 0.0), cur(S * D, 0.0);
    for (StateId s = 0; s < S; ++s) {
        if (reached(s, H) && model.is_terminal(s)) {
            model.add_terminal_value(s, H, std::span<double>(next.data() + s * D, D));
        }
    }
    for (int t = H - 1; t >= 0; --t) {
        std::fill(cur.begin(), cur.end(), 0.0);
        for (StateId s = 0; s < S; ++s) {
            if (!reached(s, t)) continue;
            std::span<double> v(cur.data() + s * D, D);
            if (model.is_terminal(s)) {
                model.add_terminal_value(s, t, v);
                continue;
            }
            const ActionId a = *policy.action(s, t);
            auto r = model.reward(s, a);
            for (std::size_t i = 0; i < D; ++i) v[i] = r[i];
            for (const auto& succ : model.successors(s, a)) {
                for (std::size_t i = 0; i < D; ++i) v[i] += succ.probability * next[succ.state * D + i];
            }
        }
        std::swap(cur, next);
    }
    const StateId s0 = model.initial_state();
    if (H == 0) {
        Point v(D, 0.0);
        if (model.is_terminal(s0)) model.add_terminal_value(s0, 0, v);
        return v;
    }
    return Point(next.begin() + s0 * D, next.begin() + (s0 + 1) * D);
}

// ---------------------------------------------------------------- JSON

std::string model_to_json(const Momdp& model) {
    const auto d = model.describe();
    nlohmann::ordered_json j;
    j["num_states"] = d.num_states;
    j["num_actions"] = d.num_actions;
    j["num_objectives"] = d.num_objectives;
    j["horizon"] = d.horizon;
    j["initial_state"] = d.initial_state;
    j["terminals"] = d.terminals;
    auto& rewards = j["rewards"] = nlohmann::ordered_json::array();
    for (const auto& r : d.rewards) rewards.push_back({{"s", r.s}, {"a", r.a}, {"vector", r.vector}});
    auto& trans = j["transitions"] = nlohmann::ordered_json::array();
    for (const auto& t : d.transitions) {
        auto succ = nlohmann::ordered_json::array();
        for (const auto& x : t.successors) succ.push_back({{"s2", x.state}, {"p", x.probability}});
        trans.push_back({{"s", t.s}, {"a", t.a}, {"successors", std::move(succ)}});
    }
    if (!d.terminal_values.empty()) {
        auto& tvs = j["terminal_values"] = nlohmann::ordered_json::array();
        for (const auto& tv : d.terminal_values) {
            tvs.push_back({{"s", tv.s}, {"lump", tv.lump}, {"per_step", tv.per_step}});
        }
    }
    return j.dump(1);
}

Momdp model_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ModelError({{std::string("malformed JSON: ") + e.what(), {}, {}}});
    }
    ModelDescription d;
    try {
        d.num_states = j.at("num_states").get<std::size_t>();
        d.num_actions = j.at("num_actions").get<std::size_t>();
        d.num_objectives = j.at("num_objectives").get<std::size_t>();
        d.horizon = j.at("horizon").get<int>();
        d.initial_state = j.at("initial_state").get<StateId>();
        d.terminals = j.value("terminals", std::vector<StateId>{});
        for (const auto& r : j.value("rewards", nlohmann::json::array())) {
            d.rewards.push_back({r.at("s").get<StateId>(), r.at("a").get<ActionId>(),
                                 r.at("vector").get<Point>()});
        }
        for (const auto& t : j.value("transitions", nlohmann::json::array())) {
            ModelDescription::TransitionEntry e{t.at("s").get<StateId>(), t.at("a").get<ActionId>(), {}};
            for (const auto& x : t.at("successors")) {
                e.successors.push_back({x.at("s2").get<StateId>(), x.at("p").get<double>()});
            }
            d.transitions.push_back(std::move(e));
        }
        for (const auto& tv : j.value("terminal_values", nlohmann::json::array())) {
            d.terminal_values.push_back({tv.at("s").get<StateId>(), tv.at("lump").get<Point>(),
                                         tv.at("per_step").get<Point>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw ModelError({{std::string("malformed model file: ") + e.what(), {}, {}}});
    }
    return Momdp(d);
}

Momdp load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read model file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return model_from_json(buf.str());
}

void save_model(const Momdp& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write model file '" + path + "'");
    out << model_to_json(model) << '\n';
}

} // namespace chmcts
