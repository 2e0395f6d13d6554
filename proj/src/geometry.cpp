#include "chmcts/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace chmcts {

namespace {

constexpr double kMergeTol = 1e-12;

void require_same_dim(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw GeometryError(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                            " vs " + std::to_string(b) + ")");
    }
}

void require_nonempty(const PointSet& s, const char* what) {
    if (s.empty()) throw GeometryError(std::string(what) + ": empty point set");
}

bool lex_greater(std::span<const double> a, std::span<const double> b) {
    return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
}

bool near_equal(std::span<const double> a, std::span<const double> b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::abs(a[i] - b[i]) > kMergeTol) return false;
    }
    return true;
}

} // namespace

// ---------------------------------------------------------------- WeightVector

WeightVector::WeightVector(std::vector<double> components) : w_(std::move(components)) {
    if (w_.empty()) throw GeometryError("weight vector must have at least one component");
    double sum = 0.0;
    for (double x : w_) {
        if (!(x >= 0.0) || !std::isfinite(x)) {
            throw GeometryError("weight components must be finite and nonnegative");
        }
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw GeometryError("weight components must sum to 1 (got " + std::to_string(sum) + ")");
    }
}

WeightVector WeightVector::uniform(std::size_t dim) {
    return WeightVector(std::vector<double>(dim, 1.0 / static_cast<double>(dim)));
}

WeightVector WeightVector::sample(std::size_t dim, Rng& rng) {
    if (dim == 0) throw GeometryError("weight dimension must be positive");
    if (dim == 1) return WeightVector({1.0});
    if (dim == 2) {
        const double lambda = rng.uniform();
        return WeightVector({lambda, 1.0 - lambda});
    }
    std::vector<double> cuts(dim - 1);
    for (auto& c : cuts) c = rng.uniform();
    std::sort(cuts.begin(), cuts.end());
    std::vector<double> w(dim);
    double prev = 0.0;
    for (std::size_t i = 0; i + 1 < dim; ++i) {
        w[i] = cuts[i] - prev;
        prev = cuts[i];
    }
    w[dim - 1] = 1.0 - prev;
    return WeightVector(std::move(w));
}

// ---------------------------------------------------------------- names

std::string to_string(Dominance d) {
    switch (d) {
    case Dominance::equal: return "equal";
    case Dominance::strictly_dominates: return "strictly_dominates";
    case Dominance::strictly_dominated: return "strictly_dominated";
    case Dominance::incomparable: return "incomparable";
    }
    return "?";
}

std::string to_string(PruneMode m) { return m == PruneMode::ccs ? "ccs" : "pareto"; }

PruneMode parse_prune_mode(const std::string& name) {
    if (name == "ccs") return PruneMode::ccs;
    if (name == "pareto") return PruneMode::pareto;
    throw GeometryError("unknown prune mode '" + name + "' (expected ccs or pareto)");
}

// ---------------------------------------------------------------- PointSet

PointSet::PointSet(std::size_t dim, std::initializer_list<Point> points) : dim_(dim) {
    for (const auto& p : points) push_back(p);
    canonicalize();
}

PointSet PointSet::from_points(std::span<const Point> points) {
    if (points.empty()) throw GeometryError("from_points: cannot infer dimension of empty list");
    PointSet s(points.front().size());
    for (const auto& p : points) s.push_back(p);
    s.canonicalize();
    return s;
}

PointSet PointSet::zero(std::size_t dim) {
    PointSet s(dim);
    s.coords_.assign(dim, 0.0);
    return s;
}

PointSet PointSet::singleton(std::span<const double> p) {
    PointSet s(p.size());
    s.coords_.assign(p.begin(), p.end());
    return s;
}

std::vector<Point> PointSet::points() const {
    std::vector<Point> out;
    out.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) out.push_back(point(i));
    return out;
}

void PointSet::push_back(std::span<const double> p) {
    require_same_dim(dim_, p.size(), "PointSet::push_back");
    for (double x : p) {
        if (!std::isfinite(x)) throw GeometryError("point components must be finite");
    }
    coords_.insert(coords_.end(), p.begin(), p.end());
}

void PointSet::append(const PointSet& other) {
    if (other.empty()) return;
    require_same_dim(dim_, other.dim_, "PointSet::append");
    coords_.insert(coords_.end(), other.coords_.begin(), other.coords_.end());
}

void PointSet::canonicalize() {
    const std::size_t n = size();
    if (n <= 1) return;
    if (dim_ == 2) {
        // Fast path for the common two-objective case.
        std::vector<std::pair<double, double>> pts(n);
        for (std::size_t i = 0; i < n; ++i) pts[i] = {coords_[2 * i], coords_[2 * i + 1]};
        std::sort(pts.begin(), pts.end(), std::greater<>());
        std::size_t kept = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (kept > 0 && std::abs(pts[i].first - pts[kept - 1].first) <= kMergeTol &&
                std::abs(pts[i].second - pts[kept - 1].second) <= kMergeTol) {
                continue;
            }
            pts[kept++] = pts[i];
        }
        coords_.resize(2 * kept);
        for (std::size_t i = 0; i < kept; ++i) {
            coords_[2 * i] = pts[i].first;
            coords_[2 * i + 1] = pts[i].second;
        }
        return;
    }
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return lex_greater((*this)[a], (*this)[b]); });
    std::vector<double> out;
    out.reserve(coords_.size());
    for (std::size_t i : idx) {
        auto p = (*this)[i];
        if (!out.empty() &&
            near_equal(p, std::span<const double>(out.data() + out.size() - dim_, dim_))) {
            continue;
        }
        out.insert(out.end(), p.begin(), p.end());
    }
    coords_ = std::move(out);
}

bool approx_equal(const PointSet& a, const PointSet& b, double tol) {
    if (a.dim() != b.dim() || a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        if (std::abs(a.data()[i] - b.data()[i]) > tol) return false;
    }
    return true;
}

// ---------------------------------------------------------------- dominance

bool weakly_dominates(std::span<const double> u, std::span<const double> v) {
    require_same_dim(u.size(), v.size(), "weakly_dominates");
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (u[i] < v[i]) return false;
    }
    return true;
}

Dominance compare(std::span<const double> u, std::span<const double> v) {
    require_same_dim(u.size(), v.size(), "compare");
    const bool uv = weakly_dominates(u, v);
    const bool vu = weakly_dominates(v, u);
    if (uv && vu) return Dominance::equal;
    if (uv) return Dominance::strictly_dominates;
    if (vu) return Dominance::strictly_dominated;
    return Dominance::incomparable;
}

// ---------------------------------------------------------------- pruning

PointSet prune_pareto(const PointSet& set) {
    require_nonempty(set, "prune_pareto");
    PointSet sorted = set;
    sorted.canonicalize();
    const std::size_t d = sorted.dim();
    PointSet out(d);
    if (d == 2) {
        // x descending, y descending within equal x: a point survives iff its
        // y beats every point seen before it.
        double best_y = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            auto p = sorted[i];
            if (p[1] > best_y) {
                out.push_back(p);
                best_y = p[1];
            }
        }
        return out;
    }
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < sorted.size() && !dominated; ++j) {
            if (i != j && compare(sorted[j], sorted[i]) == Dominance::strictly_dominates) {
                dominated = true;
            }
        }
        if (!dominated) out.push_back(sorted[i]);
    }
    return out;
}

constexpr double kCcsGain = 1e-9;

PointSet prune_ccs(const PointSet& set) {
    require_nonempty(set, "prune_ccs");
    const std::size_t d = set.dim();
    if (d == 1) {
        double best = set[0][0];
        for (std::size_t i = 1; i < set.size(); ++i) best = std::max(best, set[i][0]);
        return PointSet::singleton(std::span<const double>(&best, 1));
    }
    if (d != 2) {
        throw GeometryError("prune_ccs: only D <= 2 is supported (got D=" + std::to_string(d) +
                            "); use pareto pruning");
    }
    const PointSet front = prune_pareto(set); // x descending, y ascending
    const std::size_t n = front.size();
    if (n <= 2) return front;

    // Upper hull over the front walked in x-ascending order. The middle point b
    // of a triple (a, b, c) is dropped unless it beats segment a-c by more than
    // kCcsGain under the weight normal to a-c. Without the margin, noisy models
    // accumulate hull vertices that differ in the 12th digit.
    std::vector<std::pair<double, double>> hull;
    hull.reserve(n);
    for (std::size_t k = n; k-- > 0;) {
        const std::pair<double, double> c{front[k][0], front[k][1]};
        while (hull.size() >= 2) {
            const auto& a = hull[hull.size() - 2];
            const auto& b = hull.back();
            const double abx = b.first - a.first, aby = b.second - a.second;
            const double acx = c.first - a.first, acy = c.second - a.second;
            const double cross = abx * acy - aby * acx;
            const double l1 = std::abs(acx) + std::abs(acy);
            const double mag = std::max({1.0, std::abs(a.first), std::abs(a.second), std::abs(c.first),
                                         std::abs(c.second)});
            if (-cross <= kCcsGain * mag * l1) {
                hull.pop_back();
            } else {
                break;
            }
        }
        hull.push_back(c);
    }
    PointSet out(2);
    out.reserve(hull.size());
    for (auto it = hull.rbegin(); it != hull.rend(); ++it) {
        const double p[2] = {it->first, it->second};
        out.push_back(p);
    }
    return out;
}

PointSet prune(const PointSet& set, PruneMode mode) {
    return mode == PruneMode::ccs ? prune_ccs(set) : prune_pareto(set);
}

// ---------------------------------------------------------------- arithmetic

PointSet set_sum(const PointSet& p, const PointSet& q) {
    require_nonempty(p, "set_sum");
    require_nonempty(q, "set_sum");
    require_same_dim(p.dim(), q.dim(), "set_sum");
    const std::size_t d = p.dim();
    PointSet out(d);
    out.reserve(p.size() * q.size());
    Point tmp(d);
    for (std::size_t i = 0; i < p.size(); ++i) {
        for (std::size_t j = 0; j < q.size(); ++j) {
            for (std::size_t k = 0; k < d; ++k) tmp[k] = p[i][k] + q[j][k];
            out.push_back(tmp);
        }
    }
    out.canonicalize();
    return out;
}

PointSet affine(std::span<const double> b, double k, const PointSet& p) {
    require_nonempty(p, "affine");
    require_same_dim(b.size(), p.dim(), "affine");
    if (!(k >= 0.0)) throw GeometryError("affine: scale factor must be nonnegative");
    if (k == 0.0) return PointSet::singleton(b);
    const std::size_t d = p.dim();
    PointSet out(d);
    out.reserve(p.size());
    Point tmp(d);
    for (std::size_t i = 0; i < p.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) tmp[j] = b[j] + k * p[i][j];
        out.push_back(tmp);
    }
    out.canonicalize();
    return out;
}

PointSet expected_set(std::span<const WeightedSet> terms, std::span<const double> offset,
                      PruneMode mode) {
    double total = 0.0;
    for (const auto& t : terms) {
        if (!(t.probability >= 0.0)) throw GeometryError("expected_set: negative probability");
        total += t.probability;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw GeometryError("expected_set: probabilities sum to " + std::to_string(total));
    }
    const std::size_t d = offset.size();
    PointSet acc = PointSet::singleton(offset);
    const Point origin(d, 0.0);
    for (const auto& t : terms) {
        if (t.probability == 0.0) continue;
        if (t.set == nullptr || t.set->empty()) throw GeometryError("expected_set: empty term");
        require_same_dim(d, t.set->dim(), "expected_set");
        if (t.set->size() == 1) {
            // Translating by a single point needs no pairwise sum.
            PointSet shifted(d);
            shifted.reserve(acc.size());
            Point tmp(d);
            auto q = (*t.set)[0];
            for (std::size_t i = 0; i < acc.size(); ++i) {
                for (std::size_t k = 0; k < d; ++k) tmp[k] = acc[i][k] + t.probability * q[k];
                shifted.push_back(tmp);
            }
            acc = std::move(shifted);
            continue;
        }
        acc = prune(set_sum(acc, affine(origin, t.probability, *t.set)), mode);
    }
    return prune(acc, mode);
}

// ---------------------------------------------------------------- measures

double hypervolume(const PointSet& set, std::span<const double> ref) {
    if (set.empty()) return 0.0;
    require_same_dim(set.dim(), ref.size(), "hypervolume");
    if (set.dim() == 1) {
        double best = 0.0;
        for (std::size_t i = 0; i < set.size(); ++i) best = std::max(best, set[i][0] - ref[0]);
        return best;
    }
    if (set.dim() != 2) {
        throw GeometryError("hypervolume: only D <= 2 is supported (got D=" +
                            std::to_string(set.dim()) + ")");
    }
    std::vector<std::pair<double, double>> pts;
    pts.reserve(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
        if (set[i][0] >= ref[0] && set[i][1] >= ref[1]) pts.emplace_back(set[i][0], set[i][1]);
    }
    std::sort(pts.begin(), pts.end(), std::greater<>());
    double area = 0.0;
    double prev_y = ref[1];
    for (const auto& [x, y] : pts) {
        if (y > prev_y) {
            area += (x - ref[0]) * (y - prev_y);
            prev_y = y;
        }
    }
    return area;
}

double linear_scalarize(std::span<const double> v, const WeightVector& w) {
    require_same_dim(v.size(), w.dim(), "linear_scalarize");
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += w[i] * v[i];
    return s;
}

ScalarizedMax max_scalarized(const PointSet& set, const WeightVector& w) {
    require_nonempty(set, "max_scalarized");
    std::size_t best = 0;
    double best_v = linear_scalarize(set[0], w);
    for (std::size_t i = 1; i < set.size(); ++i) {
        const double v = linear_scalarize(set[i], w);
        const double tol = 1e-12 * std::max(1.0, std::abs(best_v));
        if (v > best_v + tol || (std::abs(v - best_v) <= tol && lex_greater(set[i], set[best]))) {
            best = i;
            best_v = v;
        }
    }
    return {set.point(best), best_v};
}

double max_scalarized_value(const PointSet& set, const WeightVector& w) {
    require_nonempty(set, "max_scalarized");
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < set.size(); ++i) best = std::max(best, linear_scalarize(set[i], w));
    return best;
}

double chebychev_scalarize(const PointSet& set, const WeightVector& w,
                           std::span<const double> utopia) {
    require_nonempty(set, "chebychev_scalarize");
    require_same_dim(set.dim(), w.dim(), "chebychev_scalarize");
    require_same_dim(set.dim(), utopia.size(), "chebychev_scalarize");
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < set.size(); ++i) {
        double worst = 0.0;
        for (std::size_t k = 0; k < set.dim(); ++k) {
            worst = std::max(worst, w[k] * std::abs(set[i][k] - utopia[k]));
        }
        best = std::min(best, worst);
    }
    return best;
}

// ---------------------------------------------------------------- I/O

std::string to_json_string(const PointSet& set) {
    nlohmann::json j = nlohmann::json::array();
    for (std::size_t i = 0; i < set.size(); ++i) j.push_back(set.point(i));
    return j.dump();
}

PointSet point_set_from_json_string(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_array() || j.empty()) throw GeometryError("point set JSON must be a nonempty array");
    std::vector<Point> pts;
    for (const auto& row : j) pts.push_back(row.get<Point>());
    return PointSet::from_points(pts);
}

std::string to_csv(const PointSet& set) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t k = 0; k < set.dim(); ++k) os << (k ? "," : "") << 'o' << k;
    os << '\n';
    for (std::size_t i = 0; i < set.size(); ++i) {
        for (std::size_t k = 0; k < set.dim(); ++k) os << (k ? "," : "") << set[i][k];
        os << '\n';
    }
    return os.str();
}

} // namespace chmcts
