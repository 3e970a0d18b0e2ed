"""Thermal compositional porous-media flow simulator with combustion kinetics.

Fully implicit molar formulation on structured grids: water, oil, and gas
flow, component transport, an energy balance, and Arrhenius reaction sources
are solved simultaneously by Newton's method over a block-sparse linear
system. Decks are plain-text keyword files; results go to CSV. Assembly and
preconditioning run thread-parallel through numba with results independent
of the thread count.
"""

import os

# The thread pool ceiling must be in place before numba is first imported
# anywhere in the process, otherwise requests above the detected core count
# are silently clamped.
os.environ.setdefault("NUMBA_NUM_THREADS", "8")

from . import units  # noqa: E402
from .errors import DeckError, PhysicsError, SolverError  # noqa: E402

__version__ = "0.1.0"

_LAZY = {
    "load_deck": ("iscsim.deck", "load_deck"),
    "parse_deck": ("iscsim.deck", "parse_deck"),
    "serialize_deck": ("iscsim.deck", "serialize_deck"),
    "Simulator": ("iscsim.newton", "Simulator"),
}

__all__ = [
    "DeckError",
    "PhysicsError",
    "SolverError",
    "Simulator",
    "load_deck",
    "parse_deck",
    "serialize_deck",
    "units",
    "__version__",
]


def __getattr__(name):
    try:
        modname, attr = _LAZY[name]
    except KeyError:
        raise AttributeError(f"module 'iscsim' has no attribute '{name}'")
    import importlib

    value = getattr(importlib.import_module(modname), attr)
    globals()[name] = value
    return value
