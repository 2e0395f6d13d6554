#include "chmcts/gdst.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace chmcts {

namespace {

constexpr int kDr[4] = {0, 0, -1, 1};
constexpr int kDc[4] = {-1, 1, 0, 0};

void check_config(const GdstConfig& cfg) {
    if (cfg.columns < 1) throw std::invalid_argument("columns must be >= 1");
    if (!(cfg.noise >= 0.0 && cfg.noise <= 1.0)) throw std::invalid_argument("noise must be in [0,1]");
    if (cfg.depth_increments) {
        if (static_cast<int>(cfg.depth_increments->size()) != cfg.columns - 1) {
            throw std::invalid_argument("depth_increments needs columns - 1 entries");
        }
        for (int d : *cfg.depth_increments) {
            if (d < 0 || d > 3) throw std::invalid_argument("depth increments must be in {0,1,2,3}");
        }
    }
    if (cfg.treasure_values) {
        const auto& v = *cfg.treasure_values;
        if (static_cast<int>(v.size()) != cfg.columns) {
            throw std::invalid_argument("treasure_values needs one entry per column");
        }
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!(v[i] >= 1.0 && v[i] <= 1000.0)) throw std::invalid_argument("treasure values must be in [1,1000]");
            if (i > 0 && !(v[i] > v[i - 1])) throw std::invalid_argument("treasure values must increase left to right");
        }
    }
}

std::vector<double> interpolate_treasures(const std::vector<int>& depth) {
    const int c = static_cast<int>(depth.size());
    std::vector<double> v(c);
    if (c == 1) return {1000.0};
    const double span = depth.back() - depth.front();
    for (int j = 0; j < c; ++j) {
        const double frac = span > 0 ? (depth[j] - depth.front()) / span : double(j) / (c - 1);
        v[j] = std::round(1.0 + 999.0 * frac);
    }
    for (int j = 1; j < c; ++j) v[j] = std::max(v[j], v[j - 1] + 1.0);
    v[c - 1] = std::min(v[c - 1], 1000.0);
    for (int j = c - 2; j >= 0; --j) v[j] = std::min(v[j], v[j + 1] - 1.0);
    return v;
}

enum class Cell { sea, treasure, rock };

Cell cell_kind(const std::vector<int>& depth, int r, int c) {
    if (r < depth[c]) return Cell::sea;
    return r == depth[c] ? Cell::treasure : Cell::rock;
}

Momdp build_model(const std::vector<int>& depth, int rows, double noise,
                  const std::vector<double>& values, bool normalized) {
    const int cols = static_cast<int>(depth.size());
    const int H = 100 * cols;
    const double vmax = *std::max_element(values.begin(), values.end());

    ModelDescription d;
    d.num_states = static_cast<std::size_t>(rows) * cols;
    d.num_actions = 4;
    d.num_objectives = 2;
    d.horizon = H;
    d.initial_state = 0;

    auto id = [cols](int r, int c) { return static_cast<StateId>(r * cols + c); };
    auto target = [&](int r, int c, int a) {
        const int nr = r + kDr[a], nc = c + kDc[a];
        if (nr < 0 || nr >= rows || nc < 0 || nc >= cols) return id(r, c);
        if (cell_kind(depth, nr, nc) == Cell::rock) return id(r, c);
        return id(nr, nc);
    };

    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const StateId s = id(r, c);
            const Cell kind = cell_kind(depth, r, c);
            if (kind != Cell::sea) {
                d.terminals.push_back(s);
                if (kind == Cell::treasure) {
                    if (normalized) {
                        d.terminal_values.push_back({s, {values[c] / vmax, 0.0}, {0.0, 1.0 / H}});
                    } else {
                        d.terminal_values.push_back({s, {values[c], 0.0}, {0.0, 0.0}});
                    }
                }
                continue;
            }
            for (ActionId a = 0; a < 4; ++a) {
                std::vector<Successor> succ;
                auto add = [&succ](StateId t, double p) {
                    if (p <= 0.0) return;
                    for (auto& x : succ) {
                        if (x.state == t) {
                            x.probability += p;
                            return;
                        }
                    }
                    succ.push_back({t, p});
                };
                add(target(r, c, static_cast<int>(a)), 1.0 - noise);
                for (int k = 0; k < 4; ++k) add(target(r, c, k), noise / 4.0);
                d.transitions.push_back({s, a, std::move(succ)});
                d.rewards.push_back({s, a, normalized ? Point{0.0, 0.0} : Point{0.0, -1.0}});
            }
        }
    }
    return Momdp(d);
}

} // namespace

GdstInstance generate(const GdstConfig& cfg) {
    check_config(cfg);
    const int c = cfg.columns;

    std::vector<int> inc;
    if (cfg.depth_increments) {
        inc = *cfg.depth_increments;
    } else {
        Rng rng(derive_seed(cfg.seed, 0x6d7374ULL));
        for (int j = 1; j < c; ++j) inc.push_back(static_cast<int>(rng.below(4)));
    }
    std::vector<int> depth(c);
    depth[0] = 1;
    for (int j = 1; j < c; ++j) depth[j] = depth[j - 1] + inc[j - 1];
    const int rows = depth.back() + 1;

    const std::vector<double> values =
        cfg.treasure_values ? *cfg.treasure_values : interpolate_treasures(depth);

    GdstInstance inst{
        .config = cfg,
        .rows = rows,
        .cols = c,
        .depth = depth,
        .treasures = {},
        .raw = build_model(depth, rows, cfg.noise, values, false),
        .normalized = build_model(depth, rows, cfg.noise, values, true),
        .to_raw = {},
        .utopia = {},
    };
    for (int j = 0; j < c; ++j) inst.treasures.push_back({depth[j], j, values[j]});
    const double vmax = *std::max_element(values.begin(), values.end());
    const double H = 100.0 * c;
    inst.to_raw = {{vmax, 0.0}, {H, -H}};
    // Best treasure, and the fastest possible arrival (one step).
    inst.utopia = {1.0, (H - 1.0) / H};
    return inst;
}

const Momdp& normalize(const GdstInstance& instance) { return instance.normalized; }

Point to_raw_units(const GdstInstance& inst, std::span<const double> v) {
    Point out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = inst.to_raw[i].scale * v[i] + inst.to_raw[i].shift;
    return out;
}

Point to_normalized_units(const GdstInstance& inst, std::span<const double> v) {
    Point out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - inst.to_raw[i].shift) / inst.to_raw[i].scale;
    return out;
}

PointSet deterministic_front(const GdstInstance& inst) {
    const int rows = inst.rows, cols = inst.cols, H = inst.horizon();
    std::vector<int> dist(static_cast<std::size_t>(rows) * cols, -1);
    std::deque<std::pair<int, int>> queue;
    dist[0] = 0;
    queue.emplace_back(0, 0);
    // Treasure cells end the episode, so they are reached but never expanded.
    while (!queue.empty()) {
        auto [r, c] = queue.front();
        queue.pop_front();
        if (cell_kind(inst.depth, r, c) != Cell::sea) continue;
        for (int a = 0; a < 4; ++a) {
            const int nr = r + kDr[a], nc = c + kDc[a];
            if (nr < 0 || nr >= rows || nc < 0 || nc >= cols) continue;
            if (cell_kind(inst.depth, nr, nc) == Cell::rock) continue;
            auto& d = dist[static_cast<std::size_t>(nr) * cols + nc];
            if (d >= 0) continue;
            d = dist[static_cast<std::size_t>(r) * cols + c] + 1;
            queue.emplace_back(nr, nc);
        }
    }
    const double vmax = inst.treasures.back().value;
    PointSet pts(2);
    pts.push_back(Point{0.0, 0.0});
    for (const auto& t : inst.treasures) {
        const int d = dist[static_cast<std::size_t>(t.row) * cols + t.col];
        if (d < 0 || d > H) continue;
        pts.push_back(Point{t.value / vmax, double(H - d) / H});
    }
    return prune_ccs(pts);
}

std::string gdst_metadata_json(const GdstInstance& inst) {
    nlohmann::ordered_json j;
    j["columns"] = inst.cols;
    j["rows"] = inst.rows;
    j["noise"] = inst.config.noise;
    j["seed"] = inst.config.seed;
    j["horizon"] = inst.horizon();
    j["depth"] = inst.depth;
    auto& ts = j["treasures"] = nlohmann::ordered_json::array();
    for (const auto& t : inst.treasures) ts.push_back({{"row", t.row}, {"col", t.col}, {"value", t.value}});
    auto& maps = j["normalization"] = nlohmann::ordered_json::array();
    const char* names[2] = {"treasure", "time"};
    for (std::size_t i = 0; i < inst.to_raw.size(); ++i) {
        maps.push_back({{"objective", names[i]}, {"raw_scale", inst.to_raw[i].scale}, {"raw_shift", inst.to_raw[i].shift}});
    }
    j["utopia"] = inst.utopia;
    j["reference_point"] = {0.0, 0.0};
    return j.dump(1);
}

std::string ascii_dump(const GdstInstance& inst) {
    static const char* glyphs = "0123456789abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ";
    std::ostringstream os;
    for (int r = 0; r < inst.rows; ++r) {
        for (int c = 0; c < inst.cols; ++c) {
            switch (cell_kind(inst.depth, r, c)) {
            case Cell::sea: os << (r == 0 && c == 0 ? 'S' : '.'); break;
            case Cell::treasure: os << (c < 62 ? glyphs[c] : '*'); break;
            case Cell::rock: os << '#'; break;
            }
        }
        os << '\n';
    }
    return os.str();
}

namespace {

Momdp example1() {
    // s0 --a1--> s1 (0,4); s0 --a2--> s2 (4,0); s0 --a3--> s3 (0,0)
    // s3 --a1--> s4 (6,0); s3 --a2--> s5 (0,6); s3 --a3--> s3 (0,0)
    ModelDescription d;
    d.num_states = 6;
    d.num_actions = 3;
    d.num_objectives = 2;
    d.horizon = 2;
    d.initial_state = 0;
    d.terminals = {1, 2, 4, 5};
    auto edge = [&d](StateId s, ActionId a, StateId t, Point r) {
        d.transitions.push_back({s, a, {{t, 1.0}}});
        d.rewards.push_back({s, a, std::move(r)});
    };
    edge(0, 0, 1, {0, 4});
    edge(0, 1, 2, {4, 0});
    edge(0, 2, 3, {0, 0});
    edge(3, 0, 4, {6, 0});
    edge(3, 1, 5, {0, 6});
    edge(3, 2, 3, {0, 0});
    return Momdp(d);
}

Momdp theorem1() {
    ModelDescription d;
    d.num_states = 3;
    d.num_actions = 2;
    d.num_objectives = 2;
    d.horizon = 1;
    d.initial_state = 0;
    d.terminals = {1, 2};
    d.transitions = {{0, 0, {{1, 1.0}}}, {0, 1, {{2, 1.0}}}};
    d.rewards = {{0, 0, {1, 0}}, {0, 1, {0, 1}}};
    return Momdp(d);
}

} // namespace

Momdp fixture(const std::string& name) {
    if (name == "example1") return example1();
    if (name == "theorem1") return theorem1();
    throw std::invalid_argument("unknown fixture '" + name + "' (expected example1 or theorem1)");
}

std::vector<std::string> fixture_names() { return {"example1", "theorem1"}; }

} // namespace chmcts
