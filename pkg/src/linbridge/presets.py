"""Bundled demo configurations."""

from .config import RunConfig
from .errors import UnknownPreset

_DOUBLE_INTEGRATOR = {
    "n": 2, "m": 1, "t0": 0.0, "tf": 1.0,
    "A": [[[0.0], [1.0]], [[0.0], [0.0]]],
    "B": [[[0.0]], [[1.0]]],
}

_PRESETS = {
    "brownian-bridge": {
        "system": {"n": 1, "m": 1, "t0": 0.0, "tf": 1.0, "A": [[[0.0]]], "B": [[[1.0]]]},
        "bridge": {"xi0": [0.0], "xi1": [0.0]},
    },
    "ou-bridge": {
        "system": _DOUBLE_INTEGRATOR,
        "bridge": {"xi0": [0.0, 0.0], "xi1": [0.0, 0.0]},
    },
    "ou-bridge-offcenter": {
        "system": _DOUBLE_INTEGRATOR,
        "bridge": {"xi0": [0.0, 0.0], "xi1": [1.0, 0.0]},
    },
    # two independent scalar Brownian bridges, viewed in the plane
    "brownian-2d": {
        "system": {
            "n": 2, "m": 2, "t0": 0.0, "tf": 1.0,
            "A": [[[0.0], [0.0]], [[0.0], [0.0]]],
            "B": [[[1.0], [0.0]], [[0.0], [1.0]]],
        },
        "bridge": {"xi0": [0.0, 0.0], "xi1": [0.0, 0.0]},
    },
}

PRESET_NAMES = tuple(_PRESETS)


def preset(name: str, directory: str = None) -> RunConfig:
    """Preset configuration: N = 1000, seed 1, two paths."""
    try:
        d = dict(_PRESETS[name])
    except KeyError:
        raise UnknownPreset(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}") from None
    d["grid"] = {"N": 1000}
    d["simulation"] = {"seed": 1, "n_paths": 2, "workers": 1}
    d["output"] = {"directory": directory or name, "formats": ["csv", "svg"]}
    return RunConfig.from_dict(d)
