"""Random unimodal maps with critical points of order s.

Every function takes an optional ``config`` dict in the same schema as the
``rovella`` command line tool; keyword arguments are merged into it.
"""

import json

from . import _rovella
from ._rovella import Family, RovellaError, hyperbolic_times, pliss_times, subcommands

__version__ = _rovella.__version__

__all__ = [
    "Family",
    "RovellaError",
    "build_partition",
    "ensemble_tails",
    "equivariant_density",
    "fit_exponential",
    "fixture",
    "hyperbolic_times",
    "iterate",
    "pliss_times",
    "quenched_correlation",
    "run",
    "subcommands",
    "validate_config",
]


def _merge(config, **sections):
    merged = json.loads(json.dumps(config or {}))
    for key, value in sections.items():
        if value is None:
            continue
        if isinstance(value, dict):
            merged.setdefault(key, {}).update({k: v for k, v in value.items() if v is not None})
        else:
            merged[key] = value
    return json.dumps(merged)


def fixture(s=2.0, eps_max=0.01):
    return Family(json.dumps({"kind": "fixture", "s": s, "eps_max": eps_max}))


def validate_config(config=None):
    """Returns the fully populated config, raising RovellaError when it is invalid."""
    return json.loads(_rovella.validate_config(_merge(config)))


def iterate(x0, n, config=None, seed=None, eps=None):
    return _rovella.iterate(_merge(config, noise={"seed": seed, "eps": eps}), x0, n)


def ensemble_tails(config=None, seed=None, eps=None, samples=None, n_max=None, workers=None):
    text = _merge(config, noise={"seed": seed, "eps": eps}, workers=workers, tails={"samples": samples, "n_max": n_max})
    return json.loads(_rovella.ensemble_tails(text))


def build_partition(config=None, seed=None, eps=None, delta_prime=None, n_max=None):
    """Element endpoints, return times and the tail measure of the return partition."""
    text = _merge(config, noise={"seed": seed, "eps": eps}, tower={"delta_prime": delta_prime, "n_max": n_max})
    return _rovella.build_partition(text)


def equivariant_density(config=None, seed=None, eps=None, m_past=None, grid=None, workers=None):
    text = _merge(config, noise={"seed": seed, "eps": eps}, workers=workers, measures={"m_past": m_past, "grid_m": grid})
    return _rovella.equivariant_density(text)


def quenched_correlation(config=None, seed=None, eps=None, phi=None, psi=None, n_max=None, method=None,
                         direction=None, workers=None):
    measures = {"phi": phi, "psi": psi, "n_max": n_max, "method": method, "direction": direction}
    text = _merge(config, noise={"seed": seed, "eps": eps}, workers=workers, measures=measures)
    return json.loads(_rovella.quenched_correlation(text))


def fit_exponential(series, burn_in=0):
    return json.loads(_rovella.fit_exponential(list(series), burn_in))


def run(subcommand, config=None):
    """Runs one command line subcommand in process; artifacts go to config["output"]["directory"]."""
    result = _rovella.run(subcommand, _merge(config))
    result["manifest"] = json.loads(result["manifest"])
    return result
