#pragma once

// Point-set algebra over D-dimensional value vectors: dominance, Pareto and
// convex-coverage pruning, Minkowski-style set arithmetic, hypervolume and
// scalarizations.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "chmcts/rng.hpp"

namespace chmcts {

using Point = std::vector<double>;

class GeometryError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Element of the weight simplex: nonnegative components summing to one.
class WeightVector {
public:
    WeightVector() = default;
    /// Throws GeometryError unless every component is >= 0 and the sum is 1
    /// within 1e-9.
    explicit WeightVector(std::vector<double> components);
    WeightVector(std::initializer_list<double> components)
        : WeightVector(std::vector<double>(components)) {}

    /// Centre of the simplex, (1/D, ..., 1/D).
    static WeightVector uniform(std::size_t dim);
    /// Uniform sample from the simplex. D = 2 draws lambda ~ U[0,1] and returns
    /// (lambda, 1 - lambda); larger D uses sorted uniform spacings.
    static WeightVector sample(std::size_t dim, Rng& rng);

    std::size_t dim() const { return w_.size(); }
    double operator[](std::size_t i) const { return w_[i]; }
    std::span<const double> components() const { return w_; }

private:
    std::vector<double> w_;
};

enum class Dominance { equal, strictly_dominates, strictly_dominated, incomparable };
enum class PruneMode { pareto, ccs };

std::string to_string(Dominance d);
std::string to_string(PruneMode m);
PruneMode parse_prune_mode(const std::string& name);

/// Finite set of points of a fixed dimension, stored contiguously.
///
/// Every operation in this header returns sets in canonical form: sorted
/// lexicographically descending with points equal to within 1e-12 per
/// component merged, so results are reproducible and comparable with ==.
class PointSet {
public:
    PointSet() = default;
    explicit PointSet(std::size_t dim) : dim_(dim) {}
    PointSet(std::size_t dim, std::initializer_list<Point> points);
    static PointSet from_points(std::span<const Point> points);
    /// {0-vector} of the given dimension.
    static PointSet zero(std::size_t dim);
    static PointSet singleton(std::span<const double> p);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return dim_ == 0 ? 0 : coords_.size() / dim_; }
    bool empty() const { return coords_.empty(); }

    std::span<const double> operator[](std::size_t i) const {
        return {coords_.data() + i * dim_, dim_};
    }
    Point point(std::size_t i) const {
        auto p = (*this)[i];
        return {p.begin(), p.end()};
    }
    std::vector<Point> points() const;

    void push_back(std::span<const double> p);
    void append(const PointSet& other);
    void reserve(std::size_t n) { coords_.reserve(n * dim_); }
    /// Sort lexicographically descending and merge near-duplicates.
    void canonicalize();

    const std::vector<double>& data() const { return coords_; }

    friend bool operator==(const PointSet& a, const PointSet& b) {
        return a.dim_ == b.dim_ && a.coords_ == b.coords_;
    }

private:
    std::size_t dim_ = 0;
    std::vector<double> coords_;
};

/// Set equality up to a per-component tolerance; both sets canonical.
bool approx_equal(const PointSet& a, const PointSet& b, double tol);

Dominance compare(std::span<const double> u, std::span<const double> v);
/// u weakly dominates v (u_i >= v_i for all i).
bool weakly_dominates(std::span<const double> u, std::span<const double> v);

/// Points not strictly dominated by any other point of the set.
PointSet prune_pareto(const PointSet& set);
/// Minimal convex coverage set: the points that are the unique maximiser of
/// w^T p for some simplex weight w, by a margin above 1e-9 (relative to the
/// coordinate magnitude). D = 2 uses an upper-hull sweep; D = 1 keeps the
/// maximum. D > 2 is unsupported.
PointSet prune_ccs(const PointSet& set);
PointSet prune(const PointSet& set, PruneMode mode);

/// { p + q | p in P, q in Q }, deduplicated.
PointSet set_sum(const PointSet& p, const PointSet& q);
/// { b + k p | p in P }; k must be nonnegative.
PointSet affine(std::span<const double> b, double k, const PointSet& p);

struct WeightedSet {
    double probability;
    const PointSet* set;
};

/// offset + sum_i p_i P_i, pruned with `mode`. Intermediate sums are pruned
/// as they are accumulated, which preserves the final result for both modes.
PointSet expected_set(std::span<const WeightedSet> terms, std::span<const double> offset,
                      PruneMode mode);

/// Area of the union of boxes [o, p] for D = 2 (length for D = 1). Points that
/// do not weakly dominate o contribute nothing.
double hypervolume(const PointSet& set, std::span<const double> ref);

double linear_scalarize(std::span<const double> v, const WeightVector& w);

struct ScalarizedMax {
    Point point;
    double value;
};

/// argmax / max of w^T p over a nonempty set. Ties (within 1e-12) go to the
/// lexicographically largest point.
ScalarizedMax max_scalarized(const PointSet& set, const WeightVector& w);
/// Value-only variant of max_scalarized; no allocation.
double max_scalarized_value(const PointSet& set, const WeightVector& w);

/// min over p of max_i w_i |p_i - z_i|. Lower is better.
double chebychev_scalarize(const PointSet& set, const WeightVector& w,
                           std::span<const double> utopia);

/// JSON array of arrays, e.g. [[0,6],[6,0]].
std::string to_json_string(const PointSet& set);
PointSet point_set_from_json_string(const std::string& text);
/// One point per row, header o0,o1,...
std::string to_csv(const PointSet& set);

} // namespace chmcts
