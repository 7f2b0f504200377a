"""Transmitted wavepackets at tilted avoided crossings.

Configurations are plain dicts in the same layout as the JSON config files;
missing fields take their defaults.
"""

import json

from . import _core
from ._core import Error, coupling_fourier as _coupling_fourier, select_n0

__all__ = [
    "Error",
    "compare",
    "coupling_fourier",
    "default_config",
    "fit_gaussians",
    "kappa_asymptotic",
    "run_formula",
    "run_reference",
    "select_n0",
    "stokes_data",
    "transmit",
]


def _text(config):
    return json.dumps(config or {})


def default_config():
    return json.loads(_core.default_config())


def stokes_data(config=None):
    return json.loads(_core.stokes_data(_text(config)))


def transmit(config=None, k=None):
    """Formula evaluation on `k` (default: the configured momentum grid)."""
    return _core.transmit(_text(config), k)


def run_formula(config=None):
    out = _core.run_formula(_text(config))
    if "fit" in out:
        out["fit"] = json.loads(out["fit"])
    return out


def run_reference(config=None):
    """Split-step reference; the lower-level state at the crossing in momentum space."""
    return _core.run_reference(_text(config))


def compare(k, formula, reference, threshold=1e-3):
    return json.loads(_core.compare(k, formula, reference, threshold))


def fit_gaussians(config, psi, n_terms):
    packet, residual = _core.fit_gaussians(_text(config), psi, n_terms)
    return json.loads(packet), residual


def kappa_asymptotic(config, n, q):
    return _core.kappa_asymptotic(_text(config), n, q)


def coupling_fourier(config, n, k):
    return _coupling_fourier(_text(config), n, k)
