"""Central finite-difference check of the analytic gradients.

At step h a central difference of the loss J carries round-off of about
eps * |J| / h (eps = float64 machine epsilon): about 6e-10 for J = 256 and
h = 1e-4. Entries whose true gradient is smaller than that noise divided by
the relative tolerance cannot be resolved to that tolerance, whatever the
analytic code does. ``floor`` is the denominator guard of the relative error;
``floor=None`` uses the larger of 1e-8 and that round-off level.
"""
from __future__ import annotations

import numpy as np

from .model import MacModel
from .types import EdgeTagTable, SegmentTagTable, Sentence

EPS = float(np.finfo(np.float64).eps)


def relative_error(analytic, numeric, floor: float = 1e-8):
    return np.abs(analytic - numeric) / np.maximum(floor, np.abs(numeric))


def roundoff_floor(loss: float, step: float, rtol: float = 1e-4) -> float:
    """Smallest gradient a step-``step`` central difference resolves to ``rtol``."""
    return max(1e-8, EPS * abs(loss) / (step * rtol))


def finite_differences(model: MacModel, sentence: Sentence, seg: SegmentTagTable, edge: EdgeTagTable,
                       step: float = 1e-4, names=None):
    """(loss, analytic, numeric); gradients are dicts by name, parameters are restored afterwards."""
    loss, grads = model.loss_and_grads(sentence, seg, edge)
    numeric = {}
    for name in names or sorted(model.params):
        P = model.params[name]
        out = np.empty_like(P)
        for idx in np.ndindex(P.shape):
            old = P[idx]
            P[idx] = old + step
            up = model.loss(model.forward(sentence), seg, edge)
            P[idx] = old - step
            down = model.loss(model.forward(sentence), seg, edge)
            P[idx] = old
            out[idx] = (up - down) / (2 * step)
        numeric[name] = out
    return loss, {k: grads[k] for k in numeric}, numeric


def gradient_check(model: MacModel, sentence: Sentence, seg: SegmentTagTable, edge: EdgeTagTable,
                   step: float = 1e-4, names=None, floor: float | None = 1e-8) -> dict[str, float]:
    """Max relative error per parameter tensor, over every entry."""
    loss, analytic, numeric = finite_differences(model, sentence, seg, edge, step, names)
    if floor is None:
        floor = roundoff_floor(loss, step)
    return {k: float(relative_error(analytic[k], numeric[k], floor).max(initial=0.0)) for k in numeric}
