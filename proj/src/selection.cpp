#include "chmcts/selection.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace chmcts {

namespace {

constexpr double kTieTol = 1e-12;

double inf_norm_diff(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw GeometryError("weight dimension mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double ucb_bonus(double c, std::uint64_t n_parent, std::uint64_t n_child) {
    if (n_child == 0) return std::numeric_limits<double>::infinity();
    const double lg = std::log(static_cast<double>(std::max<std::uint64_t>(n_parent, 1)));
    return c * std::sqrt(lg / static_cast<double>(n_child));
}

std::vector<double> one_hot(std::size_t n, ActionId a) {
    std::vector<double> p(n, 0.0);
    p[a] = 1.0;
    return p;
}

template <class Score>
ActionId argmax_action(const NodeView& view, Score score) {
    ActionId best = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    for (ActionId a = 0; a < view.num_actions; ++a) {
        const double v = score(a);
        if (v > best_v + kTieTol) {
            best_v = v;
            best = a;
        }
    }
    return best;
}

} // namespace

double metric_d(std::span<const double> w1, ActionId a1, std::span<const double> w2, ActionId a2,
                const MetricConstants& k) {
    if (a1 != a2) return k.U;
    if (a1 >= k.C.size()) throw std::out_of_range("metric_d: no constant for action");
    return k.C[a1] * inf_norm_diff(w1, w2);
}

double metric_d(const WeightVector& w1, ActionId a1, const WeightVector& w2, ActionId a2,
                const MetricConstants& k) {
    return metric_d(w1.components(), a1, w2.components(), a2, k);
}

double zooming_confidence(std::uint64_t k, std::uint64_t n) {
    return 4.0 * std::sqrt(std::log(static_cast<double>(k)) / (1.0 + static_cast<double>(n)));
}

// ---- BallSet -----------------------------------------------------------------

BallSet::BallSet(std::size_t num_actions, std::size_t dim, MetricConstants constants)
    : num_actions_(num_actions), constants_(std::move(constants)) {
    if (num_actions == 0) throw std::invalid_argument("BallSet needs at least one action");
    if (!(constants_.U > 0)) throw std::invalid_argument("BallSet: U must be positive");
    if (constants_.C.size() != num_actions) throw std::invalid_argument("BallSet: one C per action");
    for (double c : constants_.C) {
        if (!(c > 0 && c <= 2 * constants_.U)) throw std::invalid_argument("BallSet: need 0 < C <= 2U");
    }
    const Point centre(dim, 1.0 / static_cast<double>(dim));
    for (ActionId a = 0; a < num_actions; ++a) {
        balls_.push_back({centre, a, constants_.C[a], 0, 0.0});
    }
}

bool BallSet::contains(const Ball& b, std::span<const double> w, ActionId a) const {
    return metric_d(b.center, b.action, w, a, constants_) <= b.radius + kTieTol;
}

double BallSet::index(std::size_t i) const {
    const Ball& b = balls_[i];
    double m = std::numeric_limits<double>::infinity();
    for (const Ball& o : balls_) {
        m = std::min(m, pre_index(o) + metric_d(b.center, b.action, o.center, o.action, constants_));
    }
    return b.radius + m;
}

BallSet::Selection BallSet::select(std::span<const double> w) const {
    // Per action, the smallest radius of any ball containing (w, a). A ball is
    // relevant when it attains that radius for some action.
    std::vector<double> min_r(num_actions_, std::numeric_limits<double>::infinity());
    for (const Ball& b : balls_) {
        for (ActionId a = 0; a < num_actions_; ++a) {
            if (b.radius < min_r[a] && contains(b, w, a)) min_r[a] = b.radius;
        }
    }

    bool found = false;
    Selection best{0, 0};
    double best_idx = 0.0, best_r = 0.0;
    for (std::size_t i = 0; i < balls_.size(); ++i) {
        const Ball& b = balls_[i];
        std::optional<ActionId> arm;
        if (b.radius == min_r[b.action] && contains(b, w, b.action)) {
            arm = b.action;
        } else {
            for (ActionId a = 0; a < num_actions_ && !arm; ++a) {
                if (b.radius == min_r[a] && contains(b, w, a)) arm = a;
            }
        }
        if (!arm) continue;
        const double idx = index(i);
        bool better = !found || idx > best_idx + kTieTol;
        if (!better && std::abs(idx - best_idx) <= kTieTol) {
            better = b.radius < best_r || (b.radius == best_r && *arm < best.action);
        }
        if (better) {
            found = true;
            best = {*arm, i};
            best_idx = idx;
            best_r = b.radius;
        }
    }
    if (!found) throw std::logic_error("zooming: no relevant ball covers the context");
    return best;
}

bool BallSet::update(const Selection& sel, std::span<const double> w, double reward) {
    Ball& b = balls_.at(sel.ball);
    b.n += 1;
    b.mean += (reward - b.mean) / static_cast<double>(b.n);
    k_ += 1;
    if (confidence(b) <= b.radius) {
        const double r = b.radius / 2.0;
        balls_.push_back({Point(w.begin(), w.end()), sel.action, r, 0, 0.0});
        return true;
    }
    return false;
}

std::string BallSet::to_csv() const {
    std::ostringstream os;
    os.precision(17);
    const std::size_t dim = balls_.empty() ? 0 : balls_.front().center.size();
    for (std::size_t i = 0; i < dim; ++i) os << "center_w" << i << ',';
    os << "action,radius,n,mean\n";
    for (const Ball& b : balls_) {
        for (double x : b.center) os << x << ',';
        os << b.action << ',' << b.radius << ',' << b.n << ',' << b.mean << '\n';
    }
    return os.str();
}

// ---- zooming ---------------------------------------------------------------

ZoomingSelection::ZoomingSelection(std::size_t num_actions, std::size_t dim)
    : num_actions_(num_actions), dim_(dim) {}

void ZoomingSelection::reset() {
    sets_.clear();
    clamped_ = 0;
}

BallSet& ZoomingSelection::ensure(std::size_t node) {
    if (node >= sets_.size()) sets_.resize(node + 1);
    if (!sets_[node]) {
        // Rewards arrive divided by the node's return bound, so U = C = 1.
        sets_[node] = std::make_unique<BallSet>(
            num_actions_, dim_, MetricConstants{1.0, std::vector<double>(num_actions_, 1.0)});
    }
    return *sets_[node];
}

const BallSet* ZoomingSelection::ball_set(std::size_t node) const {
    return node < sets_.size() ? sets_[node].get() : nullptr;
}

Choice ZoomingSelection::select(std::size_t node, const NodeView&, const WeightVector& w, Rng&) {
    const auto sel = ensure(node).select(w.components());
    return {sel.action, sel.ball};
}

void ZoomingSelection::update(std::size_t node, const NodeView&, const Choice& choice,
                              const WeightVector& w, double ret, double bound) {
    double r = bound > 0 ? ret / bound : 0.0;
    if (r < -1e-9 || r > 1.0 + 1e-9) {
        if (clamped_ == 0) {
            std::cerr << "warning: zooming reward " << r << " outside [0,1], clamping\n";
        }
        ++clamped_;
    }
    r = std::clamp(r, 0.0, 1.0);
    ensure(node).update({choice.action, choice.token}, w.components(), r);
}

std::vector<double> ZoomingSelection::action_distribution(std::size_t node, const NodeView& view,
                                                          const WeightVector& w) const {
    if (const BallSet* bs = ball_set(node)) return one_hot(view.num_actions, bs->select(w.components()).action);
    BallSet fresh(num_actions_, dim_, MetricConstants{1.0, std::vector<double>(num_actions_, 1.0)});
    return one_hot(view.num_actions, fresh.select(w.components()).action);
}

std::unique_ptr<ActionSelection> ZoomingSelection::clone_fresh() const {
    return std::make_unique<ZoomingSelection>(num_actions_, dim_);
}

// ---- baselines ---------------------------------------------------------------

std::optional<ActionId> first_unexpanded(const NodeView& view) {
    for (ActionId a = 0; a < view.num_actions; ++a) {
        if (view.q_sets[a] == nullptr) return a;
    }
    return std::nullopt;
}

ActionId HypervolumeSelection::pick(const NodeView& view) const {
    if (auto a = first_unexpanded(view)) return *a;
    const Point ref = opts_.reference.empty() ? Point(view.num_objectives, 0.0) : opts_.reference;
    const double n = static_cast<double>(std::max<std::uint64_t>(view.visits, 1));
    return argmax_action(view, [&](ActionId a) {
        return hypervolume(*view.q_sets[a], ref) / n +
               ucb_bonus(opts_.exploration, view.visits, view.action_visits[a]);
    });
}

Choice HypervolumeSelection::select(std::size_t, const NodeView& view, const WeightVector&, Rng&) {
    return {pick(view), 0};
}

std::vector<double> HypervolumeSelection::action_distribution(std::size_t, const NodeView& view,
                                                              const WeightVector&) const {
    return one_hot(view.num_actions, pick(view));
}

std::unique_ptr<ActionSelection> HypervolumeSelection::clone_fresh() const {
    return std::make_unique<HypervolumeSelection>(opts_);
}

ActionId ChebychevSelection::pick(const NodeView& view, const WeightVector& w) const {
    if (auto a = first_unexpanded(view)) return *a;
    return argmax_action(view, [&](ActionId a) {
        return -chebychev_scalarize(*view.q_sets[a], w, opts_.utopia) +
               ucb_bonus(opts_.exploration, view.visits, view.action_visits[a]);
    });
}

Choice ChebychevSelection::select(std::size_t, const NodeView& view, const WeightVector& w, Rng&) {
    return {pick(view, w), 0};
}

std::vector<double> ChebychevSelection::action_distribution(std::size_t, const NodeView& view,
                                                            const WeightVector& w) const {
    return one_hot(view.num_actions, pick(view, w));
}

std::unique_ptr<ActionSelection> ChebychevSelection::clone_fresh() const {
    return std::make_unique<ChebychevSelection>(opts_);
}

namespace {

// Actions owning a point that no other point strictly dominates.
std::vector<ActionId> owners_of_front(const std::vector<std::pair<Point, ActionId>>& pts,
                                      std::size_t num_actions) {
    std::vector<char> owns(num_actions, 0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (owns[pts[i].second]) continue;
        bool dominated = false;
        for (std::size_t j = 0; j < pts.size() && !dominated; ++j) {
            dominated = j != i && compare(pts[j].first, pts[i].first) == Dominance::strictly_dominates;
        }
        if (!dominated) owns[pts[i].second] = 1;
    }
    std::vector<ActionId> out;
    for (ActionId a = 0; a < num_actions; ++a) {
        if (owns[a]) out.push_back(a);
    }
    return out;
}

} // namespace

std::vector<ActionId> ParetoUcbSelection::front_owners(const NodeView& view) const {
    std::vector<std::pair<Point, ActionId>> pts;
    for (ActionId a = 0; a < view.num_actions; ++a) {
        if (!view.q_sets[a]) continue;
        for (std::size_t i = 0; i < view.q_sets[a]->size(); ++i) pts.emplace_back(view.q_sets[a]->point(i), a);
    }
    // |A*| is unknown; the owners of the un-augmented front stand in for it.
    const double a_star = std::max<std::size_t>(1, owners_of_front(pts, view.num_actions).size());
    const double n = static_cast<double>(std::max<std::uint64_t>(view.visits, 1));
    const double lg = std::log(n * std::pow(static_cast<double>(view.num_objectives) * a_star, 0.25));
    for (auto& [p, a] : pts) {
        const double bonus = std::sqrt(2.0 * std::max(lg, 0.0) / static_cast<double>(view.action_visits[a]));
        for (double& x : p) x += bonus;
    }
    return owners_of_front(pts, view.num_actions);
}

Choice ParetoUcbSelection::select(std::size_t, const NodeView& view, const WeightVector&, Rng& rng) {
    if (auto a = first_unexpanded(view)) return {*a, 0};
    const auto owners = front_owners(view);
    return {owners[owners.size() == 1 ? 0 : rng.below(owners.size())], 0};
}

std::vector<double> ParetoUcbSelection::action_distribution(std::size_t, const NodeView& view,
                                                            const WeightVector&) const {
    if (auto a = first_unexpanded(view)) return one_hot(view.num_actions, *a);
    const auto owners = front_owners(view);
    std::vector<double> p(view.num_actions, 0.0);
    for (ActionId a : owners) p[a] = 1.0 / static_cast<double>(owners.size());
    return p;
}

std::unique_ptr<ActionSelection> ParetoUcbSelection::clone_fresh() const {
    return std::make_unique<ParetoUcbSelection>(opts_);
}

// ---- factory -------------------------------------------------------------------

std::vector<std::string> strategy_names() { return {"zooming", "hypervolume", "chebychev", "pareto-ucb"}; }

std::unique_ptr<ActionSelection> make_strategy(const std::string& name, const Momdp& model,
                                               const StrategyOptions& given) {
    StrategyOptions opts = given;
    const std::size_t D = model.num_objectives();
    if (opts.reference.empty()) opts.reference.assign(D, 0.0);
    // Without a known utopian point fall back to the return bound, which no
    // return can exceed in any component.
    if (opts.utopia.empty()) opts.utopia.assign(D, model.return_bound(0));
    if (opts.reference.size() != D || opts.utopia.size() != D) {
        throw std::invalid_argument("strategy options: point dimension does not match the model");
    }
    if (name == "zooming") return std::make_unique<ZoomingSelection>(model.num_actions(), D);
    if (name == "hypervolume") return std::make_unique<HypervolumeSelection>(opts);
    if (name == "chebychev") return std::make_unique<ChebychevSelection>(opts);
    if (name == "pareto-ucb") return std::make_unique<ParetoUcbSelection>(opts);
    throw std::invalid_argument("unknown strategy '" + name +
                                "' (expected zooming, hypervolume, chebychev or pareto-ucb)");
}

} // namespace chmcts
