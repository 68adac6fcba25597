"""Closed-form Green's kernels for the shifted operator -u'' - k u.

The boundary conditions couple endpoint derivatives to interior values,
u'(0) = lambda1*u(xi) and u'(1) = lambda2*u(eta). The kernel G(x,s) has six
branches, keyed by the s-region (s <= xi, xi <= s <= eta, eta <= s) crossed
with the side x <= s ("below" the diagonal) versus x >= s ("above"). Two
regimes exist: 0 < k < pi^2/4 uses trigonometric branches, k < 0 hyperbolic
ones. Branch values are continuous across x = s and across the s = xi and
s = eta seams; the x-derivative jumps by exactly +1 across x = s, consistent
with -G_xx - k G = delta(x - s).

The below branch satisfies the left boundary identity
G_x(0,s) = lambda1*G(xi,s) pointwise and the above branch the right one,
G_x(1,s) = lambda2*G(eta,s). Note that in the negative-k regime the
x-derivative is nonpositive only below the diagonal; above it, the unit jump
makes the slope positive over most of the region (see green_dx_sign_check).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DegenerateKernelError, ValidationError

PI2_OVER_4 = np.pi ** 2 / 4

DEGENERATE_TOL = 1e-12


@dataclass(frozen=True)
class BoundaryConfig:
    """The four boundary coupling parameters: u'(0)=lambda1*u(xi), u'(1)=lambda2*u(eta)."""

    xi: float
    eta: float
    lambda1: float
    lambda2: float

    def __post_init__(self):
        for name in ("xi", "eta", "lambda1", "lambda2"):
            if not np.isfinite(getattr(self, name)):
                raise ValidationError(
                    "%s must be finite, got %r" % (name, getattr(self, name))
                )
        if not (0.0 < self.xi <= self.eta < 1.0):
            raise ValidationError(
                "boundary points must satisfy 0 < xi <= eta < 1, got xi=%r eta=%r"
                % (self.xi, self.eta)
            )
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValidationError(
                "lambda1 and lambda2 must be nonnegative, got %r, %r"
                % (self.lambda1, self.lambda2)
            )


class Regime(enum.Enum):
    POSITIVE_K = "positive"
    NEGATIVE_K = "negative"


@dataclass(frozen=True)
class ShiftedOperator:
    """The shift k of -u'' - k u. The regime is a pure function of k."""

    k: float

    def __post_init__(self):
        if self.k == 0:
            raise ValidationError("k = 0 is rejected, the operator must be shifted")
        if self.k > 0 and self.k >= PI2_OVER_4:
            raise ValidationError(
                "positive k must lie in (0, pi^2/4), got %r" % self.k
            )
        if not np.isfinite(self.k):
            raise ValidationError("k must be finite, got %r" % self.k)

    @property
    def regime(self) -> Regime:
        return Regime.POSITIVE_K if self.k > 0 else Regime.NEGATIVE_K

    @property
    def root(self) -> float:
        """sqrt(|k|), precomputed once per operator."""
        return float(np.sqrt(abs(self.k)))


@dataclass(frozen=True)
class KernelSample:
    """One kernel evaluation. On the diagonal x = s the derivative stored is
    the one-sided limit from below (x -> s-), flagged by diagonal_left_limit."""

    x: float
    s: float
    value: float
    dvalue_dx: float
    diagonal_left_limit: bool = False


class KernelFunctions:
    """Vectorized kernel closures for one (config, operator) pair.

    value(x, s) evaluates G, dvalue_dx(x, s, below=...) the one-sided
    x-derivative, boundary_term(x) the complementary-function factor
    multiplying the boundary constant, boundary_term_dx its derivative.
    All share the precomputed root and normalization.
    """

    def __init__(self, config: BoundaryConfig, op: ShiftedOperator):
        self.config = config
        self.op = op
        self.normalization = normalization_value(config, op)
        xi, eta = config.xi, config.eta
        l1, l2 = config.lambda1, config.lambda2
        D = self.normalization

        if op.regime is Regime.POSITIVE_K:
            r = op.root
            k = op.k
            pref = 1.0 / (r * D)

            def value(x, s):
                X, S = np.broadcast_arrays(np.asarray(x, float), np.asarray(s, float))
                below = X <= S
                r1 = S <= xi
                r2 = (S >= xi) & (S <= eta)
                r3 = S >= eta
                f1b = r * np.cos(r * X) * (r * np.cos(r * (S - 1)) + l2 * np.sin(r * (S - eta))) \
                    + l1 * np.sin(r * (S - X)) * (l2 * np.sin(r * (eta - xi)) - r * np.cos(r * (xi - 1)))
                f1a = r * np.cos(r * S) * (r * np.cos(r * (X - 1)) + l2 * np.sin(r * (X - eta)))
                f2b = (r * np.cos(r * X) + l1 * np.sin(r * (X - xi))) \
                    * (r * np.cos(r * (S - 1)) + l2 * np.sin(r * (S - eta)))
                f2a = (r * np.cos(r * S) + l1 * np.sin(r * (S - xi))) \
                    * (r * np.cos(r * (X - 1)) + l2 * np.sin(r * (X - eta)))
                f3b = r * np.cos(r * (S - 1)) * (r * np.cos(r * X) + l1 * np.sin(r * (X - xi)))
                f3a = r * np.cos(r * (X - 1)) * (r * np.cos(r * S) + l1 * np.sin(r * (S - xi))) \
                    + l2 * np.sin(r * (X - S)) * (r * np.cos(r * eta) + l1 * np.sin(r * (eta - xi)))
                return pref * np.select(
                    [r1 & below, r1 & ~below, r2 & below, r2 & ~below, r3 & below, r3 & ~below],
                    [f1b, f1a, f2b, f2a, f3b, f3a])

            def dvalue_dx(x, s, below):
                X, S = np.broadcast_arrays(np.asarray(x, float), np.asarray(s, float))
                r1 = S <= xi
                r2 = (S >= xi) & (S <= eta)
                r3 = S >= eta
                if below:
                    d1 = -k * np.sin(r * X) * (r * np.cos(r * (S - 1)) + l2 * np.sin(r * (S - eta))) \
                        - l1 * r * np.cos(r * (S - X)) * (l2 * np.sin(r * (eta - xi)) - r * np.cos(r * (xi - 1)))
                    d2 = (-k * np.sin(r * X) + l1 * r * np.cos(r * (X - xi))) \
                        * (r * np.cos(r * (S - 1)) + l2 * np.sin(r * (S - eta)))
                    d3 = r * np.cos(r * (S - 1)) * (-k * np.sin(r * X) + l1 * r * np.cos(r * (X - xi)))
                else:
                    d1 = r * np.cos(r * S) * (-k * np.sin(r * (X - 1)) + l2 * r * np.cos(r * (X - eta)))
                    d2 = (r * np.cos(r * S) + l1 * np.sin(r * (S - xi))) \
                        * (-k * np.sin(r * (X - 1)) + l2 * r * np.cos(r * (X - eta)))
                    d3 = -k * np.sin(r * (X - 1)) * (r * np.cos(r * S) + l1 * np.sin(r * (S - xi))) \
                        + l2 * r * np.cos(r * (X - S)) * (r * np.cos(r * eta) + l1 * np.sin(r * (eta - xi)))
                return pref * np.select([r1, r2, r3], [d1, d2, d3])

            def boundary_term(x):
                X = np.asarray(x, float)
                return -(r * np.cos(r * X) + l1 * np.sin(r * (X - xi))) / D

            def boundary_term_dx(x):
                X = np.asarray(x, float)
                return -(-k * np.sin(r * X) + l1 * r * np.cos(r * (X - xi))) / D

        else:
            t = op.root
            absk = abs(op.k)
            pref = 1.0 / (t * D)

            def value(x, s):
                X, S = np.broadcast_arrays(np.asarray(x, float), np.asarray(s, float))
                below = X <= S
                r1 = S <= xi
                r2 = (S >= xi) & (S <= eta)
                r3 = S >= eta
                f1b = t * np.cosh(t * X) * (l2 * np.sinh(t * (eta - S)) - t * np.cosh(t * (S - 1))) \
                    + l1 * np.sinh(t * (S - X)) * (t * np.cosh(t * (xi - 1)) - l2 * np.sinh(t * (eta - xi)))
                f1a = -t * np.cosh(t * S) * (t * np.cosh(t * (X - 1)) + l2 * np.sinh(t * (X - eta)))
                f2b = -(t * np.cosh(t * X) + l1 * np.sinh(t * (X - xi))) \
                    * (t * np.cosh(t * (S - 1)) + l2 * np.sinh(t * (S - eta)))
                f2a = -(t * np.cosh(t * S) + l1 * np.sinh(t * (S - xi))) \
                    * (t * np.cosh(t * (X - 1)) + l2 * np.sinh(t * (X - eta)))
                f3b = -t * np.cosh(t * (S - 1)) * (t * np.cosh(t * X) + l1 * np.sinh(t * (X - xi)))
                f3a = t * np.cosh(t * (X - 1)) * (l1 * np.sinh(t * (xi - S)) - t * np.cosh(t * S)) \
                    + l2 * np.sinh(t * (S - X)) * (t * np.cosh(t * eta) + l1 * np.sinh(t * (eta - xi)))
                return pref * np.select(
                    [r1 & below, r1 & ~below, r2 & below, r2 & ~below, r3 & below, r3 & ~below],
                    [f1b, f1a, f2b, f2a, f3b, f3a])

            def dvalue_dx(x, s, below):
                X, S = np.broadcast_arrays(np.asarray(x, float), np.asarray(s, float))
                r1 = S <= xi
                r2 = (S >= xi) & (S <= eta)
                r3 = S >= eta
                if below:
                    d1 = absk * np.sinh(t * X) * (l2 * np.sinh(t * (eta - S)) - t * np.cosh(t * (S - 1))) \
                        - l1 * t * np.cosh(t * (S - X)) * (t * np.cosh(t * (xi - 1)) - l2 * np.sinh(t * (eta - xi)))
                    d2 = -(absk * np.sinh(t * X) + l1 * t * np.cosh(t * (X - xi))) \
                        * (t * np.cosh(t * (S - 1)) + l2 * np.sinh(t * (S - eta)))
                    d3 = -t * np.cosh(t * (S - 1)) * (absk * np.sinh(t * X) + l1 * t * np.cosh(t * (X - xi)))
                else:
                    d1 = -t * np.cosh(t * S) * (absk * np.sinh(t * (X - 1)) + l2 * t * np.cosh(t * (X - eta)))
                    d2 = -(t * np.cosh(t * S) + l1 * np.sinh(t * (S - xi))) \
                        * (absk * np.sinh(t * (X - 1)) + l2 * t * np.cosh(t * (X - eta)))
                    d3 = absk * np.sinh(t * (X - 1)) * (l1 * np.sinh(t * (xi - S)) - t * np.cosh(t * S)) \
                        - l2 * t * np.cosh(t * (S - X)) * (t * np.cosh(t * eta) + l1 * np.sinh(t * (eta - xi)))
                return pref * np.select([r1, r2, r3], [d1, d2, d3])

            def boundary_term(x):
                X = np.asarray(x, float)
                return (t * np.cosh(t * X) + l1 * np.sinh(t * (X - xi))) / D

            def boundary_term_dx(x):
                X = np.asarray(x, float)
                return (absk * np.sinh(t * X) + l1 * t * np.cosh(t * (X - xi))) / D

        self.value = value
        self.dvalue_dx = dvalue_dx
        self.boundary_term = boundary_term
        self.boundary_term_dx = boundary_term_dx


@lru_cache(maxsize=16)
def kernel_functions(config: BoundaryConfig, op: ShiftedOperator) -> KernelFunctions:
    """Build (and cache) the kernel closures for a (config, operator) pair."""
    return KernelFunctions(config, op)


def normalization_value(config: BoundaryConfig, op: ShiftedOperator) -> float:
    """The raw normalization scalar, without the degeneracy threshold.

    Positive regime: D = k sin(r) + lambda2 r cos(r eta)
    + lambda1 (lambda2 sin(r (eta-xi)) - r cos(r (xi-1))), r = sqrt(k).
    Negative regime: D' = |k| sinh(t) - lambda2 t cosh(t eta)
    - lambda1 lambda2 sinh(t (eta-xi)) + lambda1 t cosh(t (xi-1)), t = sqrt(|k|).
    """
    xi, eta = config.xi, config.eta
    l1, l2 = config.lambda1, config.lambda2
    if op.regime is Regime.POSITIVE_K:
        r = op.root
        k = op.k
        return float(
            k * np.sin(r) + l2 * r * np.cos(r * eta)
            + l1 * (l2 * np.sin(r * (eta - xi)) - r * np.cos(r * (xi - 1)))
        )
    t = op.root
    return float(
        abs(op.k) * np.sinh(t) - l2 * t * np.cosh(t * eta)
        - l1 * l2 * np.sinh(t * (eta - xi)) + l1 * t * np.cosh(t * (xi - 1))
    )


def normalization(config: BoundaryConfig, op: ShiftedOperator) -> float:
    """Normalization scalar; reports a degenerate (resonant) kernel.

    Raises DegenerateKernelError when |D| < 1e-12 rather than silently
    accepting it, since a vanishing normalization invalidates every sign
    certificate downstream.
    """
    D = normalization_value(config, op)
    if abs(D) < DEGENERATE_TOL:
        raise DegenerateKernelError(
            "kernel normalization is degenerate: |D| = %.3e < %.0e at k = %r"
            % (abs(D), DEGENERATE_TOL, op.k)
        )
    return D


def green_eval(config: BoundaryConfig, op: ShiftedOperator, x: float, s: float) -> KernelSample:
    """Evaluate G and its x-derivative at one point.

    Off the diagonal the derivative belongs to the active branch (below for
    x < s, above for x > s). On the diagonal the below limit is stored and
    flagged, because the solution-derivative quadrature splits at x.
    """
    if not (0.0 <= x <= 1.0 and 0.0 <= s <= 1.0):
        raise ValidationError("x and s must lie in [0, 1], got x=%r s=%r" % (x, s))
    normalization(config, op)
    fns = kernel_functions(config, op)
    value = float(fns.value(x, s))
    on_diag = x == s
    dvalue = float(fns.dvalue_dx(x, s, below=(x <= s)))
    return KernelSample(x=x, s=s, value=value, dvalue_dx=dvalue,
                        diagonal_left_limit=bool(on_diag))


@dataclass
class DxSignReport:
    """Result of the off-diagonal derivative sign check (negative regime).

    ok is the blanket verdict over all off-diagonal points. The two sides
    are reported separately because they behave differently: below the
    diagonal (x < s) the derivative is nonpositive, while above it the unit
    derivative jump at x = s makes the slope positive over most of the
    region, so the blanket claim fails there for typical data.
    """

    ok: bool
    ok_below: bool
    ok_above: bool
    max_below: float
    max_above: float
    worst_below: tuple
    worst_above: tuple
    tolerance: float

    def __bool__(self):
        return self.ok

    def to_dict(self):
        return {
            "ok": self.ok,
            "ok_below": self.ok_below,
            "ok_above": self.ok_above,
            "max_below": self.max_below,
            "max_above": self.max_above,
            "worst_below": list(self.worst_below),
            "worst_above": list(self.worst_above),
            "tolerance": self.tolerance,
        }


def green_dx_sign_check(config: BoundaryConfig, op: ShiftedOperator, grid,
                        tolerance: float = 1e-10) -> DxSignReport:
    """Check dG/dx <= tolerance at every off-diagonal point of grid x grid.

    Only meaningful in the negative-k regime (regime mismatch otherwise).
    """
    if op.regime is not Regime.NEGATIVE_K:
        raise ValidationError(
            "regime mismatch: the derivative sign check applies to negative k only, got k=%r" % op.k
        )
    normalization(config, op)
    nodes = np.asarray(grid, float)
    fns = kernel_functions(config, op)
    X = nodes[:, None]
    S = nodes[None, :]
    below_mask = X < S
    above_mask = X > S
    d_below = fns.dvalue_dx(X, S, below=True)
    d_above = fns.dvalue_dx(X, S, below=False)

    def side_max(d, mask):
        vals = np.where(mask, d, -np.inf)
        idx = np.unravel_index(np.argmax(vals), vals.shape)
        return float(vals[idx]), (float(nodes[idx[0]]), float(nodes[idx[1]]))

    max_b, worst_b = side_max(d_below, below_mask)
    max_a, worst_a = side_max(d_above, above_mask)
    ok_b = max_b <= tolerance
    ok_a = max_a <= tolerance
    return DxSignReport(
        ok=ok_b and ok_a, ok_below=ok_b, ok_above=ok_a,
        max_below=max_b, max_above=max_a,
        worst_below=worst_b, worst_above=worst_a,
        tolerance=tolerance,
    )
