"""Probabilistic identity testing over the admissible function class.

An expression counts as zero when it evaluates below a relative tolerance at
every trial, where each trial draws a fresh random point (kept away from the
singular loci r=0, rt=0, x1=0, x2=0, x3=0), fresh generic values for the
named parameters, and a fresh random realization of every opaque function
(a degree-<=4 polynomial with rational coefficients in [-1,1] times a
Gaussian envelope exp(-|u|^2/8)).  The tolerance is relative to the largest
intermediate magnitude seen while evaluating, so cancellation-heavy
expressions are judged fairly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product

import numpy as np

from . import expr as ex
from .evaluate import EvalContext, Realization, SingularPointError, eval_value

DEFAULT_TRIALS = 64
DEFAULT_TOL = 1e-9
_MAX_REDRAWS = 200


@dataclass
class ZeroVerdict:
    zero: bool
    trials: int
    max_residual: float
    witness: dict | None = None

    def __bool__(self):
        return self.zero


@dataclass
class TrialDraw:
    point: dict
    params: dict
    realizations: dict
    trial: int


def _draw_point(rng):
    for _ in range(_MAX_REDRAWS):
        x1 = rng.uniform(0.35, 2.0)
        x2 = rng.uniform(-2.0, 2.0)
        x3 = rng.uniform(0.35, 2.0)
        if abs(x2) < 0.35:
            continue
        rt2 = x1 * x1 + x2 * x2
        if rt2 < 0.25 or rt2 + x3 * x3 > 9.0:
            continue
        return {"t": rng.uniform(-1.2, 1.2), "x1": x1, "x2": x2, "x3": x3}
    raise SingularPointError("could not draw a regular sample point")


def _draw_param(rng):
    return float(rng.uniform(0.4, 1.6) * rng.choice([-1.0, 1.0]))


def _rand_fraction(rng):
    return Fraction(int(rng.integers(-10**6, 10**6 + 1)), 10**6)


def _poly_degrees(arity):
    return [m for m in product(range(5), repeat=arity) if sum(m) <= 4]


@lru_cache(maxsize=None)
def realization_template(name, arity):
    """Shared realization shape for an opaque: a degree-<=4 polynomial with
    formal coefficients times a Gaussian envelope.  Coefficients are drawn
    per trial; the symbolic shape (and its derivatives) is computed once."""
    slots = [ex.formal(f"u{i + 1}") for i in range(arity)]
    terms = []
    coeff_names = []
    for idx, m in enumerate(_poly_degrees(arity)):
        cname = f"_rc_{name}_{idx}"
        coeff_names.append(cname)
        factors = [ex.formal(cname)]
        for s, k in zip(slots, m):
            if k:
                factors.append(ex.powr(s, k))
        terms.append(ex.mul(*factors))
    poly = ex.add(*terms)
    envelope = ex.func("exp", ex.mul(ex.Const(Fraction(-1, 8)),
                                     ex.add(*[ex.mul(s, s) for s in slots])))
    return Realization(arity, ex.mul(poly, envelope)), tuple(coeff_names)


def draw_trial(seed, trial, param_names, opaque_arities):
    """Deterministic draw of point, parameter and realization coefficients."""
    rng = np.random.default_rng([int(seed) & 0x7FFFFFFF, trial])
    point = _draw_point(rng)
    params = {name: _draw_param(rng) for name in sorted(param_names)}
    realizations = {}
    for name, ar in sorted(opaque_arities.items()):
        template, coeff_names = realization_template(name, ar)
        realizations[name] = template
        for cname in coeff_names:
            params[cname] = float(_rand_fraction(rng))
    return TrialDraw(point, params, realizations, trial)


def _collect_signature(exprs, extra_opaques=None):
    params = set()
    opaques = dict(extra_opaques or {})
    for e in exprs:
        params |= ex.free_params(e)
        for name, (arity, _) in ex.opaque_signature(e).items():
            if name in opaques and opaques[name] != arity:
                raise ValueError(f"opaque {name!r} arity clash")
            opaques[name] = arity
    return params, opaques


def is_zero_all(exprs, trials=DEFAULT_TRIALS, tol=DEFAULT_TOL, seed=0,
                param_values=None, opaque_arities=None):
    """Test a batch of expressions for joint identical vanishing.

    All expressions are evaluated under the same trial draws; the verdict is
    zero iff every expression passes every trial.  param_values pins chosen
    parameters instead of drawing them.
    """
    exprs = list(exprs)
    if trials < 16:
        raise ValueError("at least 16 trials are required")
    live = [(i, e) for i, e in enumerate(exprs)
            if not (isinstance(e, ex.Const) and e.is_zero())]
    if not live:
        return ZeroVerdict(True, 0, 0.0)
    quick = [e for _, e in live]
    params, opaques = _collect_signature(quick, opaque_arities)
    pinned = dict(param_values or {})
    params -= set(pinned)
    max_res = 0.0
    for trial in range(trials):
        for attempt in range(8):
            draw = draw_trial(seed + 1009 * attempt, trial, params, opaques)
            env = dict(draw.point)
            env.update(draw.params)
            env.update({k: complex(v) for k, v in pinned.items()})
            ctx = EvalContext(env, draw.realizations)
            try:
                values = [eval_value(e, ctx) for e in quick]
            except SingularPointError:
                continue
            break
        else:
            raise SingularPointError("all sample redraws hit singular points")
        bound = tol * (1.0 + ctx.max_mag)
        for idx, v in enumerate(values):
            res = abs(v)
            max_res = max(max_res, res)
            if res > bound:
                witness = {
                    "point": draw.point,
                    "params": {**draw.params, **pinned},
                    "value": v,
                    "magnitude": res,
                    "bound": bound,
                    "expr_index": live[idx][0],
                    "trial": trial,
                }
                return ZeroVerdict(False, trial + 1, max_res, witness)
    return ZeroVerdict(True, trials, max_res)


def is_zero(e, trials=DEFAULT_TRIALS, tol=DEFAULT_TOL, seed=0,
            param_values=None, opaque_arities=None):
    """Probabilistic zero test for a single expression."""
    return is_zero_all([e], trials=trials, tol=tol, seed=seed,
                       param_values=param_values, opaque_arities=opaque_arities)
