"""Solve the shifted linear problem -u'' - k u = g with four-point coupling.

The solution is the boundary term times the shift constant minus the kernel
quadrature, u(x) = c*B(x) - int_0^1 G(x,s) g(s) ds, and its derivative uses
the analytically differentiated boundary term plus the one-sided kernel
derivatives with the integral split at s = x.

Quadrature is composite Simpson per grid panel. g is known only at the
nodes; the panel midpoint value is the mean of the endpoint samples, which
makes the integration exact for piecewise-linear g and keeps the whole
solve a pair of precomputed matrix-vector products.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .kernel import BoundaryConfig, ShiftedOperator, kernel_functions, normalization

NODE_MATCH_TOL = 1e-12


@dataclass
class GridFunction:
    """Samples of a function on a sorted grid over [0, 1]."""

    nodes: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, float)
        self.values = np.asarray(self.values, float)
        if self.nodes.ndim != 1 or self.nodes.shape != self.values.shape:
            raise ValidationError("nodes and values must be 1-d arrays of equal length")
        if self.nodes[0] != 0.0 or self.nodes[-1] != 1.0:
            raise ValidationError("grid must start at 0 and end at 1")
        if np.any(np.diff(self.nodes) <= 0):
            raise ValidationError("grid nodes must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValidationError("grid values must be finite")

    def node_index(self, p: float) -> int:
        """Index of the node equal to p, or raise."""
        i = int(np.argmin(np.abs(self.nodes - p)))
        if abs(self.nodes[i] - p) > NODE_MATCH_TOL:
            raise ValidationError("grid lacking required node at %r" % p)
        return i


@dataclass
class LinearRhs:
    """Right-hand data of the shifted linear problem.

    The boundary constant c_shift enters u'(1) = lambda2*u(eta) + c_shift.
    The solution formula is linear in c_shift so any finite value is
    accepted; the sign-certificate principles additionally need
    c_shift >= 0, which nonnegative_shift reports.
    """

    g: GridFunction
    c_shift: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.c_shift):
            raise ValidationError("c_shift must be finite")

    @property
    def nonnegative_shift(self) -> bool:
        return self.c_shift >= 0.0


def build_grid(n: int, xi: float, eta: float) -> np.ndarray:
    """Uniform n-node grid on [0,1] with xi and eta guaranteed to be nodes.

    A node within 1e-9 of xi or eta is snapped onto it exactly; otherwise
    the point is inserted (making the grid locally non-uniform).
    """
    if n < 5:
        raise ValidationError("grid needs at least 5 nodes, got %r" % n)
    xs = np.linspace(0.0, 1.0, int(n))
    for p in (xi, eta):
        i = int(np.argmin(np.abs(xs - p)))
        if abs(xs[i] - p) < 1e-9:
            xs[i] = p
        else:
            xs = np.sort(np.append(xs, p))
    return xs


class LinearSolver:
    """Precomputed quadrature matrices for one (config, operator, grid) triple.

    solve(g_values, c_shift) costs two matrix-vector products. The derivative
    matrix uses the above-diagonal kernel branch for panels left of each x_i
    and the below branch for panels right of it; x_i is always a panel
    endpoint so the split lands exactly on the derivative kink.
    """

    def __init__(self, config: BoundaryConfig, op: ShiftedOperator, nodes):
        self.config = config
        self.op = op
        self.nodes = np.asarray(nodes, float)
        normalization(config, op)
        for p in (config.xi, config.eta):
            if np.min(np.abs(self.nodes - p)) > NODE_MATCH_TOL:
                raise ValidationError("grid lacking required node at %r" % p)
        xs = self.nodes
        n = xs.size
        fns = kernel_functions(config, op)
        mids = 0.5 * (xs[:-1] + xs[1:])
        w = np.diff(xs)
        X = xs[:, None]
        Gv = fns.value(X, xs[None, :])
        Gm = fns.value(X, mids[None, :])
        Dav = fns.dvalue_dx(X, xs[None, :], below=False)
        Dbv = fns.dvalue_dx(X, xs[None, :], below=True)
        Dam = fns.dvalue_dx(X, mids[None, :], below=False)
        Dbm = fns.dvalue_dx(X, mids[None, :], below=True)
        co = w / 6.0
        Qn = np.zeros((n, n))
        Qd = np.zeros((n, n))
        # Simpson with midpoint = mean of endpoints: panel j contributes
        # (w/6)*(G(x, s_j) + 2 Gm) to column j and (w/6)*(G(x, s_{j+1}) + 2 Gm)
        # to column j+1.
        Qn[:, :-1] += co * (Gv[:, :-1] + 2 * Gm)
        Qn[:, 1:] += co * (Gv[:, 1:] + 2 * Gm)
        i_idx = np.arange(n)[:, None]
        j_idx = np.arange(n - 1)[None, :]
        above = j_idx < i_idx  # panel j lies entirely left of x_i
        Pl = np.where(above, Dav[:, :-1], Dbv[:, :-1])
        Pr = np.where(above, Dav[:, 1:], Dbv[:, 1:])
        Pm = np.where(above, Dam, Dbm)
        Qd[:, :-1] += co * (Pl + 2 * Pm)
        Qd[:, 1:] += co * (Pr + 2 * Pm)
        self.value_matrix = Qn
        self.derivative_matrix = Qd
        self.boundary_values = fns.boundary_term(xs)
        self.boundary_derivatives = fns.boundary_term_dx(xs)

    def solve(self, g_values, c_shift: float = 0.0):
        g = np.asarray(g_values, float)
        u = c_shift * self.boundary_values - self.value_matrix @ g
        du = c_shift * self.boundary_derivatives - self.derivative_matrix @ g
        return u, du


_SOLVER_CACHE: dict = {}


def get_solver(config: BoundaryConfig, op: ShiftedOperator, nodes) -> LinearSolver:
    """Memoized LinearSolver lookup (matrices are the expensive part)."""
    key = (config, op, np.asarray(nodes, float).tobytes())
    solver = _SOLVER_CACHE.get(key)
    if solver is None:
        if len(_SOLVER_CACHE) > 8:
            _SOLVER_CACHE.clear()
        solver = LinearSolver(config, op, nodes)
        _SOLVER_CACHE[key] = solver
    return solver


def solve_linear(config: BoundaryConfig, op: ShiftedOperator, rhs: LinearRhs):
    """Solve -u'' - k u = g, u'(0) = lambda1 u(xi), u'(1) = lambda2 u(eta) + c.

    Returns (u, du) as GridFunctions on rhs.g's grid.
    """
    solver = get_solver(config, op, rhs.g.nodes)
    u, du = solver.solve(rhs.g.values, rhs.c_shift)
    return (GridFunction(rhs.g.nodes.copy(), u),
            GridFunction(rhs.g.nodes.copy(), du))


def boundary_residuals(config: BoundaryConfig, u: GridFunction, du: GridFunction):
    """r0 = du(0) - lambda1 u(xi), r1 = du(1) - lambda2 u(eta).

    xi and eta must be grid nodes so no interpolation is involved.
    """
    if u.nodes.shape != du.nodes.shape or np.any(u.nodes != du.nodes):
        raise ValidationError("u and du must share one grid")
    i_xi = u.node_index(config.xi)
    i_eta = u.node_index(config.eta)
    r0 = float(du.values[0] - config.lambda1 * u.values[i_xi])
    r1 = float(du.values[-1] - config.lambda2 * u.values[i_eta])
    return r0, r1
