"""Backend selection for the decode/repair/evaluate kernel.

The compiled extension is used when it imports; ``MPDPTW_PURE=1`` forces the
pure-Python fallback. Both backends give bit-identical results.
"""

from __future__ import annotations

import os
from typing import Sequence

from . import _pykernel
from .instance_model import Instance
from .schedule_eval import Weights

try:
    if os.environ.get("MPDPTW_PURE"):
        raise ImportError("pure backend requested")
    from . import _ckernel
except ImportError:
    _ckernel = None

BACKEND = "cython" if _ckernel is not None else "python"


def backends() -> dict[str, type]:
    out = {"python": _pykernel.Kernel}
    if _ckernel is not None:
        out["cython"] = _ckernel.Kernel
    return out


def make_kernel(inst: Instance, weights: Weights, prefixes: Sequence[Sequence[int]] | None = None,
                backend: str | None = None):
    cls = backends()[backend or BACKEND]
    nodes = inst.nodes
    fl = inst.fleet
    return cls(
        inst.dist,
        [n.e for n in nodes],
        [n.l for n in nodes],
        [n.s for n in nodes],
        [n.q for n in nodes],
        list(inst.partner),
        list(fl.speed),
        list(fl.unit_cost),
        list(fl.capacity),
        weights.w1,
        weights.w2,
        None if prefixes is None else [list(p) for p in prefixes],
    )
