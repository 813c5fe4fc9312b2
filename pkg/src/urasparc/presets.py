"""Ready-made experiment configurations.

``fig2a`` .. ``fig3b`` reproduce the published setups at full scale (hours of
compute). The ``desk_*`` presets are scaled versions that finish on a single
core in minutes to a few hours; ``sanity`` is a seconds-long near-noiseless
round trip.
"""
from __future__ import annotations

import copy

from .errors import ConfigError
from .harness import SCHEMA_VERSION, ExperimentConfig

FIG3A_PARITY = [0] + [9] * 28 + [12, 12, 12]
FIG3B_PARITY = [0, 7] + [8] * 8 + [11, 12]

_PRESETS = {
    "sanity": {
        "name": "sanity",
        "codebook": {"kind": "fourier", "D": 32, "J": 8, "seed": 0},
        "tree": {"B": 20, "L": 4, "parity_alloc": [0, 0, 4, 8], "seed": 0},
        "K": 4, "K_delta": 0, "M": 32, "ebn0_db": [60.0],
        "decoders": [{"name": "accml", "rho": 1.0}],
        "trials": 5, "master_seed": 1,
    },
    "fig2a": {
        "name": "fig2a",
        "codebook": {"kind": "fourier", "D": 120, "J": 12, "seed": 0},
        "K": 300, "K_delta": 0, "M": [50, 100, 150, 200, 250, 300], "snr_db": [-10.0],
        "decoders": [{"name": "accml", "rho": 1.0}, {"name": "ml"},
                     {"name": "one_step_iht"}],
        "trials": 100, "master_seed": 2,
    },
    "fig2b": {
        "name": "fig2b",
        "codebook": {"kind": "fourier", "D": 120, "J": [9, 10, 11, 12], "seed": 0},
        "K": 300, "K_delta": 0, "M": 300, "snr_db": [-10.0],
        "decoders": [{"name": "accml", "rho": 1.0}, {"name": "ml"}],
        "trials": 20, "master_seed": 3,
    },
    "fig3a": {
        "name": "fig3a",
        "codebook": {"kind": "fourier", "D": 100, "J": 12, "seed": 0},
        "tree": {"B": 96, "L": 32, "parity_alloc": FIG3A_PARITY, "seed": 0},
        "K": 300, "K_delta": 50, "M": 300, "ebn0_db": [-14.0, -13.0, -12.0, -11.0, -10.0],
        "decoders": [{"name": "accml", "rho": 1.0}, {"name": "ml"}],
        "trials": 50, "master_seed": 4,
    },
    "fig3b": {
        "name": "fig3b",
        "codebook": {"kind": "fourier", "D": 120, "J": 12, "seed": 0},
        "tree": {"B": 50, "L": 12, "parity_alloc": FIG3B_PARITY, "seed": 0},
        "K": [50, 75, 100, 125, 150], "K_delta": 50, "M": 64,
        "ebn0_db": [-10.0, -8.0, -6.0, -4.0, -2.0, 0.0],
        "decoders": [{"name": "accml", "rho": 1.05}, {"name": "ml"}],
        "trials": 100, "master_seed": 5,
    },
    "desk_fig2a": {
        "name": "desk_fig2a",
        "codebook": {"kind": "fourier", "D": 60, "J": 10, "seed": 0},
        "K": 100, "K_delta": 0, "M": [40, 80, 120], "snr_db": [-10.0],
        "decoders": [{"name": "accml", "rho": 1.0}, {"name": "ml"}],
        "trials": 500, "master_seed": 12,
    },
    "desk_fig2b": {
        "name": "desk_fig2b",
        "codebook": {"kind": "fourier", "D": 60, "J": [8, 9, 10], "seed": 0},
        "K": 100, "K_delta": 0, "M": 120, "snr_db": [-10.0],
        "decoders": [{"name": "accml", "rho": 1.0}, {"name": "ml"}],
        "trials": 100, "master_seed": 13,
    },
    "desk_fig3b": {
        "name": "desk_fig3b",
        "codebook": {"kind": "fourier", "D": 120, "J": 12, "seed": 0},
        "tree": {"B": 50, "L": 12, "parity_alloc": FIG3B_PARITY, "seed": 0},
        "K": 50, "K_delta": 50, "M": 64, "ebn0_db": [-8.0, -6.0, -4.0],
        "decoders": [{"name": "accml", "rho": 1.05}, {"name": "ml"}],
        "trials": 200, "master_seed": 15,
    },
}

PRESET_NAMES = tuple(_PRESETS)


def preset_dict(name) -> dict:
    try:
        d = copy.deepcopy(_PRESETS[name])
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {PRESET_NAMES}") from None
    d["schema_version"] = SCHEMA_VERSION
    return d


def preset(name, **overrides) -> ExperimentConfig:
    """Build a preset configuration, optionally overriding top-level fields."""
    d = preset_dict(name)
    d.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_dict(d)
