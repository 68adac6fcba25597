"""Certify the hypotheses behind the monotone iteration.

Covers the kernel-sign conditions for both regimes, the slope inequalities
tying the Lipschitz data to the shift k, the combined negative-k bound with
its four components, the admissible-k scan with bisection-refined interval
endpoints, Lipschitz constant estimation from the source term, and the
Nagumo derivative bound P.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import NumericalError, ValidationError
from .expressions import Expression
from .kernel import PI2_OVER_4, BoundaryConfig, Regime, ShiftedOperator, normalization_value

SUP_SAMPLES = 2001
SCAN_REFINE_TOL = 1e-4


def _as_profile(fn):
    """Wrap an Expression in x (or a plain callable) as array -> array."""
    if isinstance(fn, Expression):
        expr = fn

        def profile(xs):
            xs = np.asarray(xs, float)
            return np.broadcast_to(np.asarray(expr.evaluate(x=xs), float), xs.shape).copy()

        return profile
    return lambda xs: np.broadcast_to(np.asarray(fn(np.asarray(xs, float)), float),
                                      np.shape(xs)).copy()


def _refined_extremum(vals, xs, sign=1.0):
    """Sampled max (sign=+1) or min (sign=-1) with 3-point parabolic refinement."""
    v = sign * np.asarray(vals, float)
    i = int(np.argmax(v))
    best = v[i]
    if 0 < i < len(v) - 1:
        y0, y1, y2 = v[i - 1], v[i], v[i + 1]
        denom = y0 - 2 * y1 + y2
        if denom < 0:
            delta = 0.5 * (y0 - y2) / denom
            if abs(delta) <= 1.0:
                best = max(best, y1 - 0.25 * (y0 - y2) * delta)
    return float(sign * best)


def _sup_on_unit_interval(profile, n=SUP_SAMPLES):
    xs = np.linspace(0.0, 1.0, n)
    return _refined_extremum(profile(xs), xs, sign=1.0)


@dataclass
class LipschitzData:
    """One-sided Lipschitz constant in u and the Lipschitz profile in u'.

    l2_fn and l2prime_fn map node arrays to L2(x) and L2'(x) values.
    notes holds sampled-invariant violations (nonzero at the origin,
    decreasing somewhere, negative somewhere) without rejecting the data.
    """

    l1: float
    l2_fn: object
    l2prime_fn: object
    l2_sup: float
    l2prime_sup: float
    l2_text: str | None = None
    notes: tuple = ()

    def __post_init__(self):
        if not np.isfinite(self.l1) or self.l1 < 0:
            raise ValidationError("L1 must be a nonnegative number, got %r" % self.l1)

    @classmethod
    def from_expression(cls, l1: float, l2_expr: Expression) -> "LipschitzData":
        extra = set(l2_expr.variables) - {"x"}
        if extra:
            raise ValidationError(
                "L2 may only depend on x, found %s" % sorted(extra)
            )
        l2_fn = _as_profile(l2_expr)
        l2p_fn = _as_profile(l2_expr.diff("x"))
        return cls._build(l1, l2_fn, l2p_fn, l2_text=l2_expr.text)

    @classmethod
    def from_callable(cls, l1: float, l2_callable) -> "LipschitzData":
        l2_fn = _as_profile(l2_callable)

        def l2p_fn(xs):
            xs = np.asarray(xs, float)
            return np.gradient(l2_fn(xs), xs)

        return cls._build(l1, l2_fn, l2p_fn, l2_text=None)

    @classmethod
    def _build(cls, l1, l2_fn, l2p_fn, l2_text):
        xs = np.linspace(0.0, 1.0, SUP_SAMPLES)
        vals = l2_fn(xs)
        notes = []
        if abs(vals[0]) > 1e-9:
            notes.append("L2(0) is not zero (%.3e)" % vals[0])
        if np.min(vals) < -1e-9:
            notes.append("L2 is negative somewhere (min %.3e)" % np.min(vals))
        if np.min(np.diff(vals)) < -1e-9:
            notes.append("L2 is not nondecreasing")
        return cls(
            l1=float(l1),
            l2_fn=l2_fn,
            l2prime_fn=l2p_fn,
            l2_sup=_refined_extremum(vals, xs),
            l2prime_sup=_refined_extremum(l2p_fn(xs), xs),
            l2_text=l2_text,
            notes=tuple(notes),
        )


@dataclass
class NagumoData:
    """Derivative bound data: majorant phi, gamma, diameter, and P.

    success False means the improper integral of s/phi could not reach the
    bracket diameter; tail then carries that integral's value and P is None.
    """

    phi: object
    gamma: float
    P: float | None
    diameter: float
    success: bool
    tail: float | None = None
    phi_text: str | None = None


@dataclass
class Condition:
    cid: str
    ok: bool
    margin: float

    def __post_init__(self):
        self.ok = bool(self.ok)
        self.margin = float(self.margin)

    def to_dict(self):
        return {"id": self.cid, "ok": bool(self.ok), "margin": float(self.margin)}


@dataclass
class AdmissibilityReport:
    k: float
    regime: Regime
    conditions: list
    admissible: bool
    extras: dict = field(default_factory=dict)

    def condition(self, cid):
        for c in self.conditions:
            if c.cid == cid:
                return c
        raise KeyError(cid)

    def to_dict(self):
        return {
            "k": self.k,
            "regime": self.regime.value,
            "admissible": bool(self.admissible),
            "conditions": [c.to_dict() for c in self.conditions],
            "extras": self.extras,
        }


def check_positive_k(config: BoundaryConfig, k: float, lip: LipschitzData) -> AdmissibilityReport:
    """Certify a positive shift: kernel-sign conditions plus slope conditions.

    Conditions (margin >= 0 means pass, strict ones need > 0):
      Dk>0     normalization positive
      A1-2     sqrt(k) cos sqrt(k) - lambda2 sin(sqrt(k) eta) >= 0
      A1-3     sqrt(k) - lambda1 sin(sqrt(k) xi) > 0
      L34a     sup_x [(L1-k) cos sqrt(k) + L2(x) sqrt(k) sin sqrt(k)] <= 0
      L34b     (L1-k) + sup L2' <= 0
    """
    if not (0.0 < k < PI2_OVER_4):
        raise ValidationError("k out of regime: positive checks need 0 < k < pi^2/4, got %r" % k)
    r = float(np.sqrt(k))
    l1b, l2b = config.lambda1, config.lambda2
    D = normalization_value(config, ShiftedOperator(k))
    v2 = r * np.cos(r) - l2b * np.sin(r * config.eta)
    v3 = r - l1b * np.sin(r * config.xi)
    xs = np.linspace(0.0, 1.0, SUP_SAMPLES)
    slope_a = (lip.l1 - k) * np.cos(r) + lip.l2_fn(xs) * r * np.sin(r)
    sup_a = _refined_extremum(slope_a, xs)
    val_b = (lip.l1 - k) + lip.l2prime_sup
    conditions = [
        Condition("Dk>0", D > 0, D),
        Condition("A1-2", v2 >= 0, float(v2)),
        Condition("A1-3", v3 > 0, float(v3)),
        Condition("L34a", sup_a <= 0, -sup_a),
        Condition("L34b", val_b <= 0, -float(val_b)),
    ]
    return AdmissibilityReport(
        k=k, regime=Regime.POSITIVE_K, conditions=conditions,
        admissible=all(c.ok for c in conditions),
    )


def check_negative_k(config: BoundaryConfig, k: float, lip: LipschitzData) -> AdmissibilityReport:
    """Certify a negative shift.

    Conditions:
      A'1-1    t sinh t - lambda2 cosh(t eta) >= 0, t = sqrt(|k|)
      A'1-2    t sinh(t xi) + (lambda1 - t) cosh(t xi) <= 0
      A'1-3    t - lambda1 cosh(t xi) > 0
      Dk'>0    normalization positive
      L55a     (L1 + k) + sup_x [L2'(x) + L2(x) t] <= 0
      A'2      k <= min{-L1, -lambda1^2, (L1 + lambda1 sup L2)/(1 - sup L2),
               -sup_x [L1 + L2' + L2^2/2 + (L2/2) sqrt(L2^2 + 4(L1 + L2'))]}
               (the ratio component only applies when 1 - sup L2 > 0)
    """
    if k >= 0:
        raise ValidationError("k out of regime: negative checks need k < 0, got %r" % k)
    t = float(np.sqrt(-k))
    l1b, l2b = config.lambda1, config.lambda2
    v1 = t * np.sinh(t) - l2b * np.cosh(t * config.eta)
    q2 = t * np.sinh(t * config.xi) + (l1b - t) * np.cosh(t * config.xi)
    v3 = t - l1b * np.cosh(t * config.xi)
    D = normalization_value(config, ShiftedOperator(k))
    xs = np.linspace(0.0, 1.0, SUP_SAMPLES)
    l2v = lip.l2_fn(xs)
    l2pv = lip.l2prime_fn(xs)
    sup_slope = _refined_extremum(l2pv + l2v * t, xs)
    val_55a = (lip.l1 + k) + sup_slope
    comb = lip.l1 + l2pv + 0.5 * l2v ** 2 \
        + 0.5 * l2v * np.sqrt(l2v ** 2 + 4 * (lip.l1 + l2pv))
    sup4 = _refined_extremum(comb, xs)
    components = {
        "neg_l1": -lip.l1,
        "neg_lambda1_sq": -l1b ** 2,
        "ratio": ((lip.l1 + l1b * lip.l2_sup) / (1 - lip.l2_sup)
                  if 1 - lip.l2_sup > 0 else None),
        "neg_sup_combined": -sup4,
    }
    bound = min(v for v in components.values() if v is not None)
    conditions = [
        Condition("A'1-1", v1 >= 0, float(v1)),
        Condition("A'1-2", q2 <= 0, -float(q2)),
        Condition("A'1-3", v3 > 0, float(v3)),
        Condition("Dk'>0", D > 0, D),
        Condition("L55a", val_55a <= 0, -float(val_55a)),
        Condition("A'2", k <= bound, float(bound - k)),
    ]
    return AdmissibilityReport(
        k=k, regime=Regime.NEGATIVE_K, conditions=conditions,
        admissible=all(c.ok for c in conditions),
        extras={"a2_components": components, "a2_bound": bound, "a2_sup_term": sup4},
    )


def _normalize_regime(regime) -> Regime:
    if isinstance(regime, Regime):
        return regime
    try:
        return Regime(regime)
    except ValueError:
        raise ValidationError("unknown regime %r" % (regime,)) from None


def scan_k(config: BoundaryConfig, lip: LipschitzData, regime, k_lo: float,
           k_hi: float, steps: int):
    """Uniform admissibility scan with bisection-refined interval endpoints.

    Returns a list of (lo, hi) pairs, the maximal admissible subintervals of
    [k_lo, k_hi] sampled at `steps` points and refined to 1e-4 in k.
    """
    regime = _normalize_regime(regime)
    if not (k_lo < k_hi):
        raise ValidationError("empty scan range: k_lo=%r k_hi=%r" % (k_lo, k_hi))
    if steps < 2:
        raise ValidationError("scan needs at least 2 steps, got %r" % steps)
    if regime is Regime.POSITIVE_K:
        if not (0.0 < k_lo and k_hi < PI2_OVER_4):
            raise ValidationError(
                "regime mismatch: positive scan range must lie in (0, pi^2/4)"
            )
        checker = check_positive_k
    else:
        if not (k_hi < 0.0):
            raise ValidationError("regime mismatch: negative scan range must lie below 0")
        checker = check_negative_k

    def admissible(k):
        return checker(config, k, lip).admissible

    ks = np.linspace(k_lo, k_hi, int(steps))
    flags = np.array([admissible(k) for k in ks])

    def refine(good, bad):
        # shrink [good, bad) toward the admissibility boundary
        while abs(bad - good) > SCAN_REFINE_TOL:
            mid = 0.5 * (good + bad)
            if admissible(mid):
                good = mid
            else:
                bad = mid
        return good

    intervals = []
    i = 0
    n = len(ks)
    while i < n:
        if not flags[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and flags[j + 1]:
            j += 1
        lo = float(ks[i]) if i == 0 else float(refine(ks[i], ks[i - 1]))
        hi = float(ks[j]) if j == n - 1 else float(refine(ks[j], ks[j + 1]))
        intervals.append((lo, hi))
        i = j + 1
    return intervals


def _initial_profiles(problem, n=SUP_SAMPLES):
    xs = np.linspace(0.0, 1.0, n)
    c0 = np.broadcast_to(np.asarray(problem.lower0.evaluate(x=xs), float), xs.shape)
    d0 = np.broadcast_to(np.asarray(problem.upper0.evaluate(x=xs), float), xs.shape)
    return xs, c0, d0


def estimate_l1(problem, sample_density: int = 121) -> float:
    """Estimate the one-sided Lipschitz constant of psi in u.

    Samples the signed partial d psi/du by central differences over the box
    between the initial solutions with |u'| bounded by the Nagumo P (or a
    crude derivative-range fallback when no P is available), then takes the
    positive part for the reverse ordering and the negative-part magnitude
    for the well ordering.
    """
    nx = int(sample_density)
    xs = np.linspace(0.0, 1.0, nx)
    c0 = np.broadcast_to(np.asarray(problem.lower0.evaluate(x=xs), float), xs.shape)
    d0 = np.broadcast_to(np.asarray(problem.upper0.evaluate(x=xs), float), xs.shape)
    lo = np.minimum(c0, d0)
    hi = np.maximum(c0, d0)
    nag = getattr(problem, "nagumo", None)
    if nag is not None and nag.success:
        W = nag.P
    else:
        dc = problem.lower0.diff("x")
        dd = problem.upper0.diff("x")
        sup_d = max(
            np.max(np.abs(np.broadcast_to(np.asarray(dc.evaluate(x=xs), float), xs.shape))),
            np.max(np.abs(np.broadcast_to(np.asarray(dd.evaluate(x=xs), float), xs.shape))),
        )
        W = 2.0 * float(sup_d) + 1.0
    frac = np.linspace(0.0, 1.0, nx)
    U = lo[:, None, None] + (hi - lo)[:, None, None] * frac[None, :, None]
    X = np.broadcast_to(xs[:, None, None], U.shape[:2] + (1,))
    Wgrid = np.linspace(-W, W, 41)[None, None, :]
    e = 1e-5 * np.maximum(1.0, np.abs(U))
    with np.errstate(over="ignore", invalid="ignore"):
        up_v = np.broadcast_to(Wgrid, (nx, nx, Wgrid.shape[-1]))
        plus = problem.psi.evaluate(x=X, u=U + e, up=up_v)
        minus = problem.psi.evaluate(x=X, u=U - e, up=up_v)
        d = (plus - minus) / (2 * e)
    if not np.all(np.isfinite(d)):
        raise NumericalError("non-finite psi samples in the Lipschitz box")
    if problem.ordering == "reverse":
        return float(max(np.max(d), 0.0))
    return float(max(np.max(-d), 0.0))


def estimate_lipschitz(problem, sample_density: int = 121) -> LipschitzData:
    """Estimate full Lipschitz data (L1 plus an L2 profile) from psi.

    The L2 profile is the per-x supremum of |d psi/du'| over the sample box,
    made nondecreasing by a running maximum. Prefer explicit overrides from
    the problem configuration when available; this estimator is a sampled
    stand-in.
    """
    l1 = estimate_l1(problem, sample_density)
    nx = int(sample_density)
    xs = np.linspace(0.0, 1.0, nx)
    c0 = np.broadcast_to(np.asarray(problem.lower0.evaluate(x=xs), float), xs.shape)
    d0 = np.broadcast_to(np.asarray(problem.upper0.evaluate(x=xs), float), xs.shape)
    lo = np.minimum(c0, d0)
    hi = np.maximum(c0, d0)
    nag = getattr(problem, "nagumo", None)
    W = nag.P if (nag is not None and nag.success) else 2.0 * float(
        np.max(np.abs(np.concatenate([c0, d0])))) + 1.0
    frac = np.linspace(0.0, 1.0, 41)
    U = lo[:, None, None] + (hi - lo)[:, None, None] * frac[None, :, None]
    X = np.broadcast_to(xs[:, None, None], U.shape[:2] + (1,))
    Wg = np.linspace(-W, W, 41)[None, None, :]
    e = 1e-5 * np.maximum(1.0, np.abs(Wg))
    with np.errstate(over="ignore", invalid="ignore"):
        up_b = np.broadcast_to(Wg, U.shape[:2] + (Wg.shape[-1],))
        plus = problem.psi.evaluate(x=X, u=U, up=up_b + e)
        minus = problem.psi.evaluate(x=X, u=U, up=up_b - e)
        d = np.abs((plus - minus) / (2 * e))
    if not np.all(np.isfinite(d)):
        raise NumericalError("non-finite psi samples in the Lipschitz box")
    profile = np.maximum.accumulate(d.max(axis=(1, 2)))
    sample_xs = xs.copy()
    sample_vals = profile.copy()

    def l2_fn(pts):
        return np.interp(np.asarray(pts, float), sample_xs, sample_vals)

    return LipschitzData.from_callable(l1, l2_fn)


def nagumo_bound(problem) -> NagumoData:
    """Compute the derivative bound P from the growth majorant phi.

    P is the smallest value >= gamma with int_gamma^P s/phi(s) ds >= diameter,
    where gamma is twice the sup-norm of the dominating initial solution and
    diameter spans the initial bracket. When the improper integral to
    infinity stays below the diameter the verdict is a failure carrying that
    integral (tail).
    """
    phi_spec = getattr(problem, "nagumo_phi", None)
    if phi_spec is None:
        raise ValidationError("no Nagumo majorant configured for this problem")
    xs, c0, d0 = _initial_profiles(problem)
    if problem.ordering == "reverse":
        dominating = c0
        diameter = _refined_extremum(c0, xs) - _refined_extremum(d0, xs, sign=-1.0)
    else:
        dominating = d0
        diameter = _refined_extremum(d0, xs) - _refined_extremum(c0, xs, sign=-1.0)
    gamma = 2.0 * _refined_extremum(np.abs(dominating), xs)
    if diameter <= 0:
        raise ValidationError("negative diameter: the initial bracket is inverted")

    phi_text = None
    if phi_spec == "auto":
        phi_fn = _auto_majorant(problem, gamma, diameter)
        phi_text = "auto"
    elif isinstance(phi_spec, Expression):
        expr = phi_spec
        extra = set(expr.variables) - {"s"}
        if extra:
            raise ValidationError("phi may only depend on s, found %s" % sorted(extra))

        def phi_fn(s):
            with np.errstate(over="ignore"):
                return np.asarray(expr.evaluate(s=np.asarray(s, float)), float)

        phi_text = expr.text
    else:
        phi_fn = phi_spec

    probe = phi_fn(np.linspace(0.0, gamma + 10.0 * (diameter + 1.0), 257))
    if np.min(probe) <= 0:
        raise ValidationError("phi must be positive on its sampling range")

    def integrand(s):
        with np.errstate(over="ignore", invalid="ignore"):
            v = s / phi_fn(s)
        return np.where(np.isfinite(v), v, 0.0)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            tail, terr = quad(integrand, gamma, np.inf, limit=200)
        except Exception:
            tail, terr = np.nan, np.nan

    def accumulated(P):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            val, _ = quad(integrand, gamma, P, limit=200)
        return val

    # trust the improper integral only when it is consistent with a finite
    # prefix of itself; on divergent integrands quad can return garbage with
    # a confident error estimate
    if np.isfinite(tail) and tail < diameter and terr < max(1e-8, 0.01 * (diameter - tail)):
        if tail >= max(0.0, accumulated(gamma + 1.0)) - 1e-9:
            return NagumoData(phi=phi_fn, gamma=gamma, P=None, diameter=diameter,
                              success=False, tail=float(tail), phi_text=phi_text)

    hi = gamma + 1.0
    cap = 1e12
    while accumulated(hi) < diameter:
        hi *= 2.0
        if hi > cap:
            reached = accumulated(cap)
            return NagumoData(phi=phi_fn, gamma=gamma, P=None, diameter=diameter,
                              success=False, tail=float(reached), phi_text=phi_text)
    P = brentq(lambda p: accumulated(p) - diameter, gamma, hi, xtol=1e-10)
    # keep the improper integral only when the quadrature actually resolved it
    reliable = np.isfinite(tail) and np.isfinite(terr) and terr < 0.01 * max(abs(tail), 1.0)
    return NagumoData(phi=phi_fn, gamma=gamma, P=float(P), diameter=diameter,
                      success=True, tail=float(tail) if reliable else None,
                      phi_text=phi_text)


def _auto_majorant(problem, gamma, diameter, density=121):
    """Sampled growth majorant: sup over the bracket of |psi| at each slope.

    Coarse by construction (nondecreasing envelope, constant beyond the
    sampling cap); prefer an explicit phi when certifying results.
    """
    xs = np.linspace(0.0, 1.0, density)
    c0 = np.broadcast_to(np.asarray(problem.lower0.evaluate(x=xs), float), xs.shape)
    d0 = np.broadcast_to(np.asarray(problem.upper0.evaluate(x=xs), float), xs.shape)
    lo = np.minimum(c0, d0)
    hi = np.maximum(c0, d0)
    frac = np.linspace(0.0, 1.0, 41)
    U = lo[:, None] + (hi - lo)[:, None] * frac[None, :]
    s_cap = 10.0 * (gamma + diameter + 1.0)
    sgrid = np.linspace(0.0, s_cap, 241)
    vals = np.empty_like(sgrid)
    X = np.broadcast_to(xs[:, None], U.shape)
    for j, s in enumerate(sgrid):
        with np.errstate(over="ignore", invalid="ignore"):
            a = np.abs(problem.psi.evaluate(x=X, u=U, up=np.full_like(U, s)))
            b = np.abs(problem.psi.evaluate(x=X, u=U, up=np.full_like(U, -s)))
        vals[j] = max(np.max(a), np.max(b))
    vals = np.maximum.accumulate(vals) + 1e-12

    def phi_fn(s):
        return np.interp(np.abs(np.asarray(s, float)), sgrid, vals)

    return phi_fn


def sign_table(config: BoundaryConfig, lip: LipschitzData, regime, k_lo: float,
               k_hi: float, samples: int = 2000):
    """Sign table for the plotted admissibility quantities over a k-window.

    Returns a list of rows {id, crossings, first_crossing}; crossings counts
    sign changes of the sampled quantity, first_crossing refines the first
    one by root bracketing (None when the sign never changes).
    """
    regime = _normalize_regime(regime)
    ks = np.linspace(k_lo, k_hi, int(samples))
    l1b, l2b = config.lambda1, config.lambda2
    rows = []
    if regime is Regime.POSITIVE_K:
        if not (0.0 < k_lo and k_hi < PI2_OVER_4):
            raise ValidationError("regime mismatch for the positive sign table")
        r = np.sqrt(ks)
        quantities = [
            ("L34a-sup", lambda rr, kk: (lip.l1 - kk) * np.cos(rr) + lip.l2_sup * rr * np.sin(rr)),
            ("A1-3", lambda rr, kk: rr - l1b * np.sin(rr * config.xi)),
            ("A1-2", lambda rr, kk: rr * np.cos(rr) - l2b * np.sin(rr * config.eta)),
            ("Dk", lambda rr, kk: kk * np.sin(rr) + l2b * rr * np.cos(rr * config.eta)
             + l1b * (l2b * np.sin(rr * (config.eta - config.xi))
                      - rr * np.cos(rr * (config.xi - 1)))),
        ]
        args = (r, ks)
    else:
        if not (k_hi < 0.0):
            raise ValidationError("regime mismatch for the negative sign table")
        t = np.sqrt(-ks)
        quantities = [
            ("A'1-1-endpoint", lambda tt, kk: tt * np.cosh(tt) - l2b * np.sinh(tt)),
            ("A'1-2", lambda tt, kk: tt * np.sinh(tt * config.xi)
             + (l1b - tt) * np.cosh(tt * config.xi)),
            ("A'1-3", lambda tt, kk: tt - l1b * np.cosh(tt * config.xi)),
        ]
        args = (t, ks)

    for cid, fn in quantities:
        vals = fn(*args)
        signs = np.sign(vals)
        changes = np.nonzero(np.diff(signs) != 0)[0]
        first = None
        if changes.size:
            i = changes[0]

            def scalar(k):
                rr = np.sqrt(abs(k))
                return float(fn(np.asarray(rr), np.asarray(k)))

            first = float(brentq(scalar, ks[i], ks[i + 1], xtol=1e-10))
        rows.append({"id": cid, "crossings": int(changes.size), "first_crossing": first})
    return rows
