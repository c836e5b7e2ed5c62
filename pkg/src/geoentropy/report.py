"""Deterministic CSV and JSON artifacts.

Floats are written as their shortest round-trip decimal (``repr``) and JSON
keys are sorted, so reruns with the same inputs produce identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
import math

COUNT_COLUMNS = ("r", "epsilon", "N", "method", "ln_N_over_r")


def _num(x):
    if x is None:
        return None
    if isinstance(x, bool):
        return x
    if isinstance(x, int):
        return x
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return repr(x)
    return x


def counts_csv(counts) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COUNT_COLUMNS)
    for c in sorted(counts, key=lambda c: (c.epsilon, c.r)):
        w.writerow([repr(float(c.r)), repr(float(c.epsilon)), int(c.N), c.method, repr(math.log(c.N) / c.r)])
    return buf.getvalue()


def _fit_dict(fit):
    return {
        "slope": _num(fit.slope),
        "raw_slope": _num(fit.raw_slope),
        "intercept": _num(fit.intercept),
        "residual": _num(fit.residual),
        "fit_r": [_num(v) for v in fit.r_used],
        "fallback_window": fit.fallback,
    }


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        return _clean(obj.item())
    if isinstance(obj, float):
        return _num(obj)
    return obj


def summary_dict(est, extra: dict | None = None) -> dict:
    out = {
        "slopes": {repr(float(e)): _fit_dict(f) for e, f in est.slopes.items()},
        "h": _num(est.h),
        "H": _num(est.H),
        "diagnostics": _clean(est.diagnostics),
    }
    if est.H_slopes is not None:
        out["H_slopes"] = {repr(float(e)): _fit_dict(f) for e, f in est.H_slopes.items()}
    if est.local:
        out["local"] = True
    if extra:
        out.update(_clean(extra))
    return out


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def write_text(path, text: str):
    with open(path, "w", newline="") as fh:
        fh.write(text)
