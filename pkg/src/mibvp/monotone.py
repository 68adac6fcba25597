"""Quasilinearized monotone iteration for the four-point problem.

Each step freezes the source at the current iterate and solves one shifted
linear problem per sequence: -u'' - k u = psi(x, u_n, u_n') - k u_n with
homogeneous multipoint boundary conditions. The lower and upper sequences
advance together; every ordering and monotonicity flag is recorded.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .admissibility import LipschitzData, NagumoData
from .errors import DivergenceError, NumericalError, ValidationError
from .expressions import Expression
from .kernel import BoundaryConfig, ShiftedOperator
from .linear_bvp import GridFunction, boundary_residuals, build_grid, get_solver

ORDERINGS = ("reverse", "well")
MONOTONE_SLACK = 1e-9
DIVERGENCE_FACTOR = 10.0
DERIVATIVE_SLACK = 1e-6


def _profile(expr: Expression, xs):
    return np.broadcast_to(np.asarray(expr.evaluate(x=xs), float), np.shape(xs)).copy()


@dataclass
class NonlinearProblem:
    """The nonlinear problem plus its initial bracket and certification data.

    psi depends on (x, u, up); lower0/upper0 are closed forms in x only.
    ordering "reverse" expects lower0 >= upper0 and a positive shift,
    "well" expects lower0 <= upper0 and a negative shift. nagumo_phi is the
    growth majorant specification ("auto", an expression in s, or None).
    """

    psi: Expression
    config: BoundaryConfig
    lower0: Expression
    upper0: Expression
    ordering: str
    lip: LipschitzData | None = None
    nagumo: NagumoData | None = None
    nagumo_phi: object = None
    name: str | None = None

    def __post_init__(self):
        if self.ordering not in ORDERINGS:
            raise ValidationError("ordering must be one of %s, got %r"
                                  % (ORDERINGS, self.ordering))
        extra = set(self.psi.variables) - {"x", "u", "up"}
        if extra:
            raise ValidationError("psi may depend on x, u, up only; found %s" % sorted(extra))
        for label, expr in (("lower0", self.lower0), ("upper0", self.upper0)):
            bad = set(expr.variables) - {"x"}
            if bad:
                raise ValidationError("%s must be a closed form in x, found %s"
                                      % (label, sorted(bad)))

    def initial_lower(self, nodes):
        return _profile(self.lower0, nodes), _profile(self.lower0.diff("x"), nodes)

    def initial_upper(self, nodes):
        return _profile(self.upper0, nodes), _profile(self.upper0.diff("x"), nodes)

    def psi_values(self, xs, u, du):
        with np.errstate(over="ignore", invalid="ignore"):
            vals = np.asarray(self.psi.evaluate(x=xs, u=u, up=du), float)
        return np.broadcast_to(vals, np.shape(xs))


@dataclass
class IterationTrace:
    """Everything the iteration produced, flags included.

    iterates_lower/upper hold (u, du) node arrays per level, level 0 being
    the initial closed forms sampled on the grid. Transition flags
    (monotone_*, step_moves_*, derivative_bound_*) have one entry per step;
    ordered has one entry per level. derivative_bound_* is None when no
    successful Nagumo bound was attached to the problem.
    """

    k: float
    nodes: np.ndarray
    iterates_lower: list = field(default_factory=list)
    iterates_upper: list = field(default_factory=list)
    gaps: list = field(default_factory=list)
    step_moves_lower: list = field(default_factory=list)
    step_moves_upper: list = field(default_factory=list)
    monotone_lower: list = field(default_factory=list)
    monotone_upper: list = field(default_factory=list)
    ordered: list = field(default_factory=list)
    derivative_bound_lower: list | None = None
    derivative_bound_upper: list | None = None
    final_residual: float = np.nan
    residual_lower: float = np.nan
    residual_upper: float = np.nan
    boundary_residual_lower: tuple = (np.nan, np.nan)
    boundary_residual_upper: tuple = (np.nan, np.nan)
    converged: bool = False
    diverged: bool = False
    iterations: int = 0

    @property
    def step_moves(self):
        return list(zip(self.step_moves_lower, self.step_moves_upper))

    def limit_lower(self):
        u, du = self.iterates_lower[-1]
        return GridFunction(self.nodes.copy(), u.copy()), GridFunction(self.nodes.copy(), du.copy())

    def limit_upper(self):
        u, du = self.iterates_upper[-1]
        return GridFunction(self.nodes.copy(), u.copy()), GridFunction(self.nodes.copy(), du.copy())

    def to_dict(self):
        return {
            "k": self.k,
            "iterations": self.iterations,
            "converged": bool(self.converged),
            "diverged": bool(self.diverged),
            "grid_n": int(self.nodes.size),
            "gaps": [float(g) for g in self.gaps],
            "step_moves_lower": [float(v) for v in self.step_moves_lower],
            "step_moves_upper": [float(v) for v in self.step_moves_upper],
            "monotone_lower": [bool(b) for b in self.monotone_lower],
            "monotone_upper": [bool(b) for b in self.monotone_upper],
            "ordered": [bool(b) for b in self.ordered],
            "derivative_bound_lower": (None if self.derivative_bound_lower is None
                                       else [bool(b) for b in self.derivative_bound_lower]),
            "derivative_bound_upper": (None if self.derivative_bound_upper is None
                                       else [bool(b) for b in self.derivative_bound_upper]),
            "final_residual": float(self.final_residual),
            "residual_lower": float(self.residual_lower),
            "residual_upper": float(self.residual_upper),
            "boundary_residual_lower": [float(v) for v in self.boundary_residual_lower],
            "boundary_residual_upper": [float(v) for v in self.boundary_residual_upper],
        }


def iterate_once(problem: NonlinearProblem, k: float, current, nodes=None):
    """One quasilinearization step from the (u, du) pair `current`.

    Builds g = psi(x, u, u') - k u on the grid and solves the shifted linear
    problem with zero boundary shift. Returns the next (u, du) pair.
    """
    if isinstance(current[0], GridFunction):
        nodes = current[0].nodes if nodes is None else nodes
        u, du = current[0].values, np.asarray(
            current[1].values if isinstance(current[1], GridFunction) else current[1],
            float)
    elif nodes is None:
        raise ValidationError("iterate_once needs grid nodes")
    else:
        u, du = np.asarray(current[0], float), np.asarray(current[1], float)
    nodes = np.asarray(nodes, float)
    g = problem.psi_values(nodes, u, du) - k * u
    if not np.all(np.isfinite(g)):
        bad = int(np.argmin(np.isfinite(g)))
        raise NumericalError("source evaluation produced a non-finite value at x=%r"
                             % nodes[bad])
    solver = get_solver(problem.config, ShiftedOperator(k), nodes)
    return solver.solve(g, 0.0)


def _interior_residual(problem, k, nodes, u, du):
    """sup | -u'' - psi(x,u,u') | on interior nodes via a 5-point second difference.

    Skips the two nodes nearest each boundary where the one-sided stencils
    would dominate the estimate; grids from build_grid are uniform.
    """
    h = nodes[1] - nodes[0]
    if np.max(np.abs(np.diff(nodes) - h)) > 1e-9 * max(h, 1.0):
        # non-uniform grid: fall back to the 3-point stencil on raw spacing
        d2 = np.empty_like(u)
        d2[1:-1] = (u[2:] - 2 * u[1:-1] + u[:-2]) / ((nodes[2:] - nodes[1:-1])
                                                     * (nodes[1:-1] - nodes[:-2]))
        res = -d2[1:-1] - problem.psi_values(nodes, u, du)[1:-1]
        return float(np.max(np.abs(res)))
    i = np.arange(2, len(nodes) - 2)
    d2 = (-u[i - 2] + 16 * u[i - 1] - 30 * u[i] + 16 * u[i + 1] - u[i + 2]) / (12 * h * h)
    res = -d2 - problem.psi_values(nodes[i], u[i], du[i])
    return float(np.max(np.abs(res)))


def run(problem: NonlinearProblem, k: float, max_iter: int, tol: float,
        grid_n: int = 501) -> IterationTrace:
    """Advance both sequences until the step movements drop below tol.

    converged requires, on top of the movement criterion, that the interior
    nonlinear residual of both limits stays within 10*tol and the boundary
    residuals within tol. Monotonicity, ordering, and (when a Nagumo bound
    is present) derivative-bound flags are recorded at every step with a
    1e-9 comparison slack; failures are recorded, not fatal. An iterate
    growing past 10x the initial bracket sup-norm raises DivergenceError
    with the partial trace attached.
    """
    if max_iter < 1:
        raise ValidationError("max_iter must be at least 1, got %r" % max_iter)
    if not (tol > 0):
        raise ValidationError("tol must be positive, got %r" % tol)
    nodes = build_grid(grid_n, problem.config.xi, problem.config.eta)
    op = ShiftedOperator(k)
    solver = get_solver(problem.config, op, nodes)

    cu, cdu = problem.initial_lower(nodes)
    du_, ddu = problem.initial_upper(nodes)
    bracket_sup = max(np.max(np.abs(cu)), np.max(np.abs(du_)))
    bound = DIVERGENCE_FACTOR * max(bracket_sup, 1e-12)

    nag = problem.nagumo
    track_p = nag is not None and nag.success
    trace = IterationTrace(k=k, nodes=nodes)
    trace.iterates_lower.append((cu, cdu))
    trace.iterates_upper.append((du_, ddu))
    if track_p:
        trace.derivative_bound_lower = []
        trace.derivative_bound_upper = []

    def ordered_now(c, d):
        if problem.ordering == "reverse":
            return bool(np.all(c >= d - MONOTONE_SLACK))
        return bool(np.all(c <= d + MONOTONE_SLACK))

    trace.gaps.append(float(np.max(np.abs(cu - du_))))
    trace.ordered.append(ordered_now(cu, du_))

    for _ in range(max_iter):
        g_c = problem.psi_values(nodes, cu, cdu) - k * cu
        g_d = problem.psi_values(nodes, du_, ddu) - k * du_
        if not (np.all(np.isfinite(g_c)) and np.all(np.isfinite(g_d))):
            raise NumericalError("source evaluation produced non-finite values at step %d"
                                 % (trace.iterations + 1))
        cu1, cdu1 = solver.solve(g_c, 0.0)
        du1, ddu1 = solver.solve(g_d, 0.0)
        trace.iterations += 1

        move_c = float(np.max(np.abs(cu1 - cu)))
        move_d = float(np.max(np.abs(du1 - du_)))
        trace.step_moves_lower.append(move_c)
        trace.step_moves_upper.append(move_d)
        if problem.ordering == "reverse":
            trace.monotone_lower.append(bool(np.all(cu1 <= cu + MONOTONE_SLACK)))
            trace.monotone_upper.append(bool(np.all(du1 >= du_ - MONOTONE_SLACK)))
        else:
            trace.monotone_lower.append(bool(np.all(cu1 >= cu - MONOTONE_SLACK)))
            trace.monotone_upper.append(bool(np.all(du1 <= du_ + MONOTONE_SLACK)))
        trace.ordered.append(ordered_now(cu1, du1))
        trace.gaps.append(float(np.max(np.abs(cu1 - du1))))
        if track_p:
            trace.derivative_bound_lower.append(
                bool(np.max(np.abs(cdu1)) <= nag.P + DERIVATIVE_SLACK))
            trace.derivative_bound_upper.append(
                bool(np.max(np.abs(ddu1)) <= nag.P + DERIVATIVE_SLACK))

        cu, cdu, du_, ddu = cu1, cdu1, du1, ddu1
        trace.iterates_lower.append((cu, cdu))
        trace.iterates_upper.append((du_, ddu))

        sup_now = max(np.max(np.abs(cu)), np.max(np.abs(du_)))
        if sup_now > bound or not np.isfinite(sup_now):
            trace.diverged = True
            raise DivergenceError(
                "iterate sup-norm %.3e exceeded 10x the initial bracket (%.3e) at step %d"
                % (sup_now, bracket_sup, trace.iterations), trace=trace)

        if move_c <= tol and move_d <= tol:
            break

    trace.residual_lower = _interior_residual(problem, k, nodes, cu, cdu)
    trace.residual_upper = _interior_residual(problem, k, nodes, du_, ddu)
    trace.final_residual = max(trace.residual_lower, trace.residual_upper)
    uc, duc = trace.limit_lower()
    ud, dud = trace.limit_upper()
    trace.boundary_residual_lower = boundary_residuals(problem.config, uc, duc)
    trace.boundary_residual_upper = boundary_residuals(problem.config, ud, dud)
    moves_ok = (trace.step_moves_lower and trace.step_moves_lower[-1] <= tol
                and trace.step_moves_upper[-1] <= tol)
    bres = trace.boundary_residual_lower + trace.boundary_residual_upper
    trace.converged = bool(
        moves_ok
        and trace.final_residual <= 10 * tol
        and all(abs(r) <= tol for r in bres)
    )
    return trace


@dataclass
class BracketCheck:
    cid: str
    ok: bool
    margin: float

    def to_dict(self):
        return {"id": self.cid, "ok": bool(self.ok), "margin": float(self.margin)}


@dataclass
class BracketReport:
    checks: list
    ok: bool

    def check(self, cid):
        for c in self.checks:
            if c.cid == cid:
                return c
        raise KeyError(cid)

    def to_dict(self):
        return {"ok": bool(self.ok), "checks": [c.to_dict() for c in self.checks]}


def verify_initial_bracket(problem: NonlinearProblem, k: float = None,
                           grid_n: int = 501, slack: float = MONOTONE_SLACK) -> BracketReport:
    """Check that lower0/upper0 really are lower/upper solutions.

    Lower side: psi(x,c,c') + c'' >= 0, c'(0) = lambda1 c(xi) (to 1e-9), and
    lambda2 c(eta) - c'(1) >= 0. Upper side mirrored. Also checks the
    declared ordering and, when k is given, the cross condition
    psi(x,d,d') - psi(x,c,c') - k (d - c) >= 0. Margins are the most
    negative slack observed (>= -slack passes). Pure report, never raises
    on a failed inequality.
    """
    cfg = problem.config
    nodes = build_grid(grid_n, cfg.xi, cfg.eta)
    i_xi = int(np.argmin(np.abs(nodes - cfg.xi)))
    i_eta = int(np.argmin(np.abs(nodes - cfg.eta)))

    c = _profile(problem.lower0, nodes)
    dc = _profile(problem.lower0.diff("x"), nodes)
    d2c = _profile(problem.lower0.diff("x").diff("x"), nodes)
    d = _profile(problem.upper0, nodes)
    dd = _profile(problem.upper0.diff("x"), nodes)
    d2d = _profile(problem.upper0.diff("x").diff("x"), nodes)

    psi_c = problem.psi_values(nodes, c, dc)
    psi_d = problem.psi_values(nodes, d, dd)

    checks = [
        BracketCheck("lower-interior", None, float(np.min(psi_c + d2c))),
        BracketCheck("lower-bc0", None, -abs(dc[0] - cfg.lambda1 * c[i_xi])),
        BracketCheck("lower-bc1", None, float(cfg.lambda2 * c[i_eta] - dc[-1])),
        BracketCheck("upper-interior", None, float(np.min(-(psi_d + d2d)))),
        BracketCheck("upper-bc0", None, -abs(dd[0] - cfg.lambda1 * d[i_xi])),
        BracketCheck("upper-bc1", None, float(dd[-1] - cfg.lambda2 * d[i_eta])),
    ]
    if problem.ordering == "reverse":
        checks.append(BracketCheck("ordering", None, float(np.min(c - d))))
    else:
        checks.append(BracketCheck("ordering", None, float(np.min(d - c))))
    if k is not None:
        cross = psi_d - psi_c - k * (d - c)
        checks.append(BracketCheck("cross", None, float(np.min(cross))))
    for chk in checks:
        chk.ok = chk.margin >= -slack
    return BracketReport(checks=checks, ok=all(chk.ok for chk in checks))
