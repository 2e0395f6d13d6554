#pragma once

// Generalised Deep Sea Treasure instances and the two small fixture models.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "chmcts/geometry.hpp"
#include "chmcts/momdp.hpp"

namespace chmcts {

enum GdstAction : ActionId { move_left = 0, move_right = 1, move_up = 2, move_down = 3 };

struct GdstConfig {
    int columns = 3;
    double noise = 0.0;
    std::uint64_t seed = 0;
    /// c - 1 values in {0,1,2,3}; drawn from the seed when absent.
    std::optional<std::vector<int>> depth_increments;
    /// c strictly increasing values in [1, 1000]; interpolated when absent.
    std::optional<std::vector<double>> treasure_values;
};

struct TreasureCell {
    int row;
    int col;
    double value;
};

/// raw = scale * normalized + shift, per objective.
struct AffineMap {
    double scale;
    double shift;
};

/// Grid layout: the submarine starts at (0, 0). Column j is sea above row
/// depth[j], holds its treasure at row depth[j], and is rock below. Rock cells
/// are unreachable terminal states.
///
/// Objectives are (treasure, time). `raw` pays (0, -1) per step plus the
/// treasure value on arrival. `normalized` pays nothing per step; arriving at a
/// treasure at timestep t pays (value / max_value, (H - t) / H), so every
/// return lies in [0,1]^2 and a trial that never finds treasure is worth (0,0).
struct GdstInstance {
    GdstConfig config;
    int rows = 0;
    int cols = 0;
    std::vector<int> depth;
    std::vector<TreasureCell> treasures;
    Momdp raw;
    Momdp normalized;
    std::vector<AffineMap> to_raw; // normalized -> raw
    Point utopia;                  // normalized units

    StateId state_of(int row, int col) const { return static_cast<StateId>(row * cols + col); }
    int horizon() const { return normalized.horizon(); }
};

/// Throws std::invalid_argument for an invalid config.
GdstInstance generate(const GdstConfig& cfg);

/// The planning copy (rewards in [0,1] per objective).
const Momdp& normalize(const GdstInstance& instance);

Point to_raw_units(const GdstInstance& instance, std::span<const double> normalized);
Point to_normalized_units(const GdstInstance& instance, std::span<const double> raw);

/// Normalized deterministic front: for each treasure the shortest path that
/// avoids other treasures, kept when it fits in the horizon, then ccs-pruned.
/// Only meaningful for noise 0.
PointSet deterministic_front(const GdstInstance& instance);

/// Sidecar metadata: grid, treasures, normalization maps and utopian point.
std::string gdst_metadata_json(const GdstInstance& instance);

/// '.' sea, digits/letters for treasure index, '#' rock, 'S' start.
std::string ascii_dump(const GdstInstance& instance);

/// "example1" or "theorem1"; throws std::invalid_argument otherwise.
Momdp fixture(const std::string& name);
std::vector<std::string> fixture_names();

} // namespace chmcts
