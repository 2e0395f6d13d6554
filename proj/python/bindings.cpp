#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "chmcts/chvi.hpp"
#include "chmcts/gdst.hpp"
#include "chmcts/harness.hpp"
#include "chmcts/tree.hpp"

namespace py = pybind11;
using namespace chmcts;

namespace {

std::vector<Point> as_list(const PointSet& s) { return s.points(); }

PointSet as_set(const std::vector<Point>& pts) {
    if (pts.empty()) throw std::invalid_argument("empty point list");
    return PointSet::from_points(pts);
}

py::dict run_search(const Momdp& m, const std::string& strategy, std::uint64_t trials, std::uint64_t seed,
                    bool online) {
    auto strat = make_strategy(strategy, m);
    SearchConfig sc = online ? SearchConfig::online() : SearchConfig::offline();
    sc.node_cap = 2000000;
    Search s(m, *strat, sc, derive_seed(seed, 1));
    Rng contexts(derive_seed(seed, 0));
    {
        py::gil_scoped_release nogil;
        s.run(Budget::trials(trials), contexts);
    }
    py::dict out;
    out["ccs"] = as_list(extract_root_ccs(s));
    out["trials"] = s.stats().trials_run;
    out["backups"] = s.stats().backups_performed;
    out["nodes"] = s.stats().nodes_created;
    out["root_labelled"] = s.stats().root_labelled;
    return out;
}

} // namespace

PYBIND11_MODULE(_chmcts, m) {
    m.doc() = "Multi-objective tree search core";

    py::class_<Momdp>(m, "Momdp")
        .def_property_readonly("num_states", &Momdp::num_states)
        .def_property_readonly("num_actions", &Momdp::num_actions)
        .def_property_readonly("num_objectives", &Momdp::num_objectives)
        .def_property_readonly("horizon", &Momdp::horizon)
        .def_property_readonly("initial_state", &Momdp::initial_state)
        .def("to_json", [](const Momdp& x) { return model_to_json(x); });

    m.def("model_from_json", &model_from_json, py::arg("text"));
    m.def("load_model", &load_model, py::arg("path"));
    m.def("fixture", &fixture, py::arg("name"));
    m.def("fixture_names", &fixture_names);

    py::class_<GdstInstance>(m, "GdstInstance")
        .def_readonly("rows", &GdstInstance::rows)
        .def_readonly("cols", &GdstInstance::cols)
        .def_readonly("depth", &GdstInstance::depth)
        .def_readonly("utopia", &GdstInstance::utopia)
        .def_readonly("raw", &GdstInstance::raw)
        .def_readonly("normalized", &GdstInstance::normalized)
        .def_property_readonly("horizon", &GdstInstance::horizon)
        .def_property_readonly("treasures",
                               [](const GdstInstance& g) {
                                   std::vector<std::tuple<int, int, double>> t;
                                   for (const auto& x : g.treasures) t.emplace_back(x.row, x.col, x.value);
                                   return t;
                               })
        .def("metadata_json", [](const GdstInstance& g) { return gdst_metadata_json(g); })
        .def("ascii", [](const GdstInstance& g) { return ascii_dump(g); })
        .def("to_raw_units", [](const GdstInstance& g, const Point& p) { return to_raw_units(g, p); });

    m.def(
        "generate_gdst",
        [](int columns, double noise, std::uint64_t seed) {
            GdstConfig c;
            c.columns = columns;
            c.noise = noise;
            c.seed = seed;
            return generate(c);
        },
        py::arg("columns"), py::arg("noise") = 0.0, py::arg("seed") = 0);

    m.def(
        "prune",
        [](const std::vector<Point>& pts, const std::string& mode) {
            return as_list(prune(as_set(pts), parse_prune_mode(mode)));
        },
        py::arg("points"), py::arg("mode") = "ccs");
    m.def(
        "hypervolume", [](const std::vector<Point>& pts, const Point& ref) { return hypervolume(as_set(pts), ref); },
        py::arg("points"), py::arg("reference"));

    m.def(
        "true_ccs", [](const Momdp& x) { return as_list(true_ccs(x)); }, py::arg("model"),
        py::call_guard<py::gil_scoped_release>());
    m.def(
        "chvi_solve",
        [](const Momdp& x, const std::string& prune_mode, bool full_table) {
            ChviOptions o;
            o.prune = parse_prune_mode(prune_mode);
            o.keep_tables = full_table;
            return solution_to_json(chvi_solve(x, o), full_table);
        },
        py::arg("model"), py::arg("prune") = "ccs", py::arg("full_table") = false);

    m.def("strategy_names", &strategy_names);
    m.def("search", &run_search, py::arg("model"), py::arg("strategy") = "zooming", py::arg("trials") = 1000,
          py::arg("seed") = 0, py::arg("online") = false);

    auto run_json = [](auto fn) {
        return [fn](const std::string& config_json, int workers, bool write_files) {
            const ExperimentConfig cfg = experiment_config_from_json(config_json);
            RunOptions o;
            o.workers = workers;
            o.write_files = write_files;
            py::gil_scoped_release nogil;
            return fn(cfg, o).csv;
        };
    };
    m.def("run_regret", run_json([](const ExperimentConfig& c, const RunOptions& o) { return run_regret_experiment(c, o); }),
          py::arg("config_json"), py::arg("workers") = 1, py::arg("write_files") = false);
    m.def("run_offline",
          run_json([](const ExperimentConfig& c, const RunOptions& o) { return run_offline_experiment(c, o); }),
          py::arg("config_json"), py::arg("workers") = 1, py::arg("write_files") = false);
    m.def("run_scale",
          run_json([](const ExperimentConfig& c, const RunOptions& o) { return run_scalability_experiment(c, o); }),
          py::arg("config_json"), py::arg("workers") = 1, py::arg("write_files") = false);
}
