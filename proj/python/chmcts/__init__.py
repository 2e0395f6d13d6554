from ._chmcts import (
    GdstInstance,
    Momdp,
    chvi_solve,
    fixture,
    fixture_names,
    generate_gdst,
    hypervolume,
    load_model,
    model_from_json,
    prune,
    run_offline,
    run_regret,
    run_scale,
    search,
    strategy_names,
    true_ccs,
)

__all__ = [
    "GdstInstance",
    "Momdp",
    "chvi_solve",
    "fixture",
    "fixture_names",
    "generate_gdst",
    "hypervolume",
    "load_model",
    "model_from_json",
    "prune",
    "run_offline",
    "run_regret",
    "run_scale",
    "search",
    "strategy_names",
    "true_ccs",
]
