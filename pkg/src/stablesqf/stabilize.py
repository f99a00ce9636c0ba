"""Post-processing stabilization of forecast traces.

For every target period covered by consecutive origins, the newer forecast is
pulled toward the forecast the previous origin made for the same target.
'partial' interpolates with the previous raw forecast, 'full' with the
previous stabilized one (so strength 1 freezes each target at the first
forecast ever made for it).  The newest target at each origin has no
predecessor and passes through, as does the whole first trace.  Averages are
taken elementwise on quantile vectors, so monotone rows stay monotone.
"""

from __future__ import annotations

import numpy as np

from .evaluation import ForecastTrace, trace_stack

SCHEMES = ("partial", "full", "mean")


def stabilize_stack(q: np.ndarray, scheme: str = "partial", strength: float = 0.5) -> np.ndarray:
    """Apply one scheme to a (J, h, M) stack of consecutive-origin forecasts.

    The 'mean' scheme averages every forecast ever made for the target
    (ignoring strength); it is experimental and not part of the main method.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}, expected one of {SCHEMES}")
    if not 0.0 <= strength <= 1.0:
        raise ValueError("strength must lie in [0, 1]")
    q = np.asarray(q, dtype=float)
    j_n, h, _ = q.shape
    out = q.copy()
    for j in range(1, j_n):
        for i in range(h - 1):
            if scheme == "mean":
                k_max = min(j, h - 1 - i)
                out[j, i] = np.mean([q[j - k, i + k] for k in range(k_max + 1)], axis=0)
            else:
                prev = q[j - 1, i + 1] if scheme == "partial" else out[j - 1, i + 1]
                out[j, i] = (1.0 - strength) * q[j, i] + strength * prev
    return out


def stabilize_traces(traces: list[ForecastTrace], scheme: str = "partial",
                     strength: float = 0.5) -> list[ForecastTrace]:
    if not traces:
        return []
    for tr in traces[1:]:
        if tr.q.shape != traces[0].q.shape or not np.array_equal(tr.alphas, traces[0].alphas):
            raise ValueError("traces must share horizon and level grid")
    stacked = stabilize_stack(trace_stack(traces), scheme, strength)
    return [ForecastTrace(tr.sid, tr.origin, stacked[j], tr.alphas) for j, tr in enumerate(traces)]
