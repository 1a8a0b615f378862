"""Numerical search for the strongest attack at a fixed disturbance.

The searches confirm two things about the closed-form bounds: no attack in
the searched family beats them (validity) and the best attack comes within
a few 1e-3 of them (sharpness).

For the Shannon mode the family is one canonical pair ``(eta, phi, theta)``;
for the collision mode it is one symmetric pair ``(eta, theta)`` with signed
``eta``. The disturbance constraint is solved exactly by a 1-D root search
on ``eta`` for every outer point, so the outer search is unconstrained: a
coarse grid followed by Nelder-Mead refinement of the best starts.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq, minimize

from . import bounds, metrics
from .attacks import AttackStrategy, CanonicalAttackOp, SymmetricAttackOp
from .quantum import signal_stack


class Mode(str, Enum):
    SHANNON = "shannon"
    COLLISION = "collision"


class InfeasibleTarget(ValueError):
    """No strategy in the searched family reaches the requested disturbance."""


@dataclass(frozen=True)
class SearchConfig:
    grid_size: int = 32
    eta_slices: int = 33
    n_refine: int = 4
    xatol: float = 1e-8
    fatol: float = 1e-10
    max_evaluations: int = 100_000
    disturbance_tol: float = 1e-6
    random_starts: int = 0
    seed: int = 0
    workers: int = 1


@dataclass(frozen=True)
class OptResult:
    mode: str
    target_d: float
    achieved_d: float
    best_value: float
    best_params: dict
    bound_value: float
    slack: float
    evaluations: int

    @property
    def tau1(self) -> float:
        """``1 + log2`` of the best collision probability (collision mode only)."""
        return 1.0 + math.log2(self.best_value)

    def as_dict(self) -> dict:
        return asdict(self)


# --- batched kernels ----------------------------------------------------------
# ops arrays have shape (..., L, 2, 2); every operator is its own outcome.

_RHOS = signal_stack()  # [alpha, psi, 2, 2]
_RHO4 = _RHOS.reshape(4, 2, 2)
_J = np.array([[0.0, 1.0], [-1.0, 0.0]])


def _proj(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([np.stack([c * c, c * s], -1), np.stack([c * s, s * s], -1)], -2)


def _rot(phi):
    c, s = np.cos(phi), np.sin(phi)
    return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)


def _ab(eta, total=1.0):
    eta = np.asarray(eta, dtype=float)
    b = total / (1.0 + eta * eta)
    return (total - b)[..., None, None], b[..., None, None]


def _canonical_ops(eta, phi, theta, total=1.0):
    eta, phi, theta = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (eta, phi, theta)))
    a, b = _ab(eta, total)
    o, p = _rot(phi), _proj(theta)
    sa, sb = np.sqrt(a), np.sqrt(b)
    op_ = o @ p
    first = sa * o + (sb - sa) * op_
    second = sa * o + (sb - sa) * (o - op_)
    return np.stack([first, second], axis=-3)


def _symmetric_ops(eta, theta, total=1.0):
    eta, theta = np.broadcast_arrays(np.asarray(eta, dtype=float), np.asarray(theta, dtype=float))
    a, b = _ab(eta, total)
    sa, sb = np.sqrt(a), np.sqrt(b)
    coef = np.where(eta[..., None, None] >= 0, sa - sb, sa + sb)
    p = _proj(theta)
    eye = np.eye(2)
    return np.stack([sa * eye - coef * p, sa * eye - coef * (eye - p)], axis=-3)


def _antisymmetric_ops(weight, shape=()):
    half = np.sqrt(0.5 * weight)
    pair = np.stack([half * _J, half * _J])
    return np.broadcast_to(pair, shape + pair.shape)


def _dfid(ops):
    overlaps = np.einsum("sij,...ljk,skm,...lim->...s", _RHO4, ops, _RHO4, ops)
    return 1.0 - overlaps.mean(axis=-1)


def _hsum(x, axes):
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.where(x > 0, -x * np.log2(np.where(x > 0, x, 1.0)), 0.0)
    return v.sum(axis=axes)


def _information(ops):
    effects = np.einsum("...lji,...ljk->...lik", ops, ops)
    table = 0.25 * np.einsum("apij,...lji->...pal", _RHOS, effects)
    p_bit = table.sum(axis=(-2, -1))
    p_out = table.sum(axis=-3)
    return _hsum(p_bit, -1) + _hsum(p_out, (-2, -1)) - _hsum(table, (-3, -2, -1))


def _collision(ops):
    table = np.einsum("...lij,apjk,...lmk,apmi->...pal", ops, _RHOS, ops, _RHOS)
    table = table / table.sum(axis=(-3, -2, -1), keepdims=True)
    marg = table.sum(axis=-3, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(marg > 0, table**2 / np.where(marg > 0, marg, 1.0), 0.0)
    return r.sum(axis=(-3, -2, -1))


# --- constrained evaluation ---------------------------------------------------


class _Counter:
    def __init__(self):
        self.n = 0


def _roots(fn: Callable, lo: float, hi: float, target: float, cfg: SearchConfig, counter) -> list[float]:
    """All points in [lo, hi] where the vectorized ``fn`` equals ``target``."""
    grid = np.linspace(lo, hi, cfg.eta_slices)
    vals = fn(grid) - target
    counter.n += len(grid)
    found = [float(x) for x, v in zip(grid, vals) if abs(v) <= 1e-13]
    for i in range(len(grid) - 1):
        v0, v1 = vals[i], vals[i + 1]
        if v0 * v1 < 0:
            def f(x):
                counter.n += 1
                return float(fn(np.array(x))) - target

            found.append(brentq(f, grid[i], grid[i + 1], xtol=1e-14, rtol=1e-15, maxiter=200))
    return sorted(set(found))


@dataclass
class _Problem:
    """Outer parameters -> best constrained value, for one mode and target."""

    mode: Mode
    target: float
    cfg: SearchConfig
    fixed_eta: float | None = None
    counter: _Counter = field(default_factory=_Counter)

    @property
    def outer_dim(self) -> int:
        if self.mode is Mode.COLLISION:
            return 1
        return 1 if self.fixed_eta is not None else 2

    def ops(self, eta, phi, theta):
        if self.mode is Mode.SHANNON:
            return _canonical_ops(eta, phi, theta)
        return _symmetric_ops(eta, theta)

    def value_of_ops(self, ops):
        return _information(ops) if self.mode is Mode.SHANNON else _collision(ops)

    def unpack(self, x):
        """Outer vector -> (phi, theta) with the free parameter chosen by mode."""
        if self.mode is Mode.COLLISION:
            return 0.0, float(x[0])
        if self.fixed_eta is not None:
            return None, float(x[0])
        return float(x[0]), float(x[1])

    def solve(self, x) -> list[tuple[float, float, float, float]]:
        """Feasible ``(value, eta, phi, theta)`` candidates for outer point ``x``."""
        phi, theta = self.unpack(x)
        out = []
        if self.fixed_eta is not None:
            eta = self.fixed_eta
            roots = _roots(lambda p: _dfid(self.ops(eta, p, theta)), -np.pi / 2, np.pi / 2,
                           self.target, self.cfg, self.counter)
            for p in roots:
                out.append((eta, p, theta))
        else:
            lo = 0.0 if self.mode is Mode.SHANNON else -1.0
            roots = _roots(lambda e: _dfid(self.ops(e, phi, theta)), lo, 1.0,
                           self.target, self.cfg, self.counter)
            for e in roots:
                out.append((e, phi, theta))
        if not out:
            return []
        params = np.array(out)
        vals = self.value_of_ops(self.ops(params[:, 0], params[:, 1], params[:, 2]))
        self.counter.n += len(out)
        return [(float(v), *map(float, p)) for v, p in zip(vals, params)]

    def objective(self, x) -> float:
        cands = self.solve(x)
        return -max(c[0] for c in cands) if cands else 1.0


def _key(cand):
    # larger value first; ties broken by the lexicographically smallest (eta, phi, theta)
    value, eta, phi, theta = cand
    return (-round(value, 12), eta, phi, theta)


def _outer_grid(problem: _Problem) -> np.ndarray:
    g = problem.cfg.grid_size
    thetas = np.linspace(0.0, np.pi, g, endpoint=False)
    if problem.outer_dim == 1:
        return thetas[:, None]
    phis = np.linspace(-np.pi / 2, np.pi / 2, g, endpoint=False)
    pp, tt = np.meshgrid(phis, thetas, indexing="ij")
    return np.stack([pp.ravel(), tt.ravel()], axis=1)


def _refine(problem: _Problem, x0) -> list[tuple]:
    cfg = problem.cfg
    res = minimize(
        problem.objective,
        np.asarray(x0, dtype=float),
        method="Nelder-Mead",
        options={
            "xatol": cfg.xatol,
            "fatol": cfg.fatol,
            "maxfev": cfg.max_evaluations,
            "initial_simplex": _simplex(x0, np.pi / cfg.grid_size),
        },
    )
    return problem.solve(res.x)


def _simplex(x0, step):
    x0 = np.asarray(x0, dtype=float)
    pts = [x0]
    for i in range(len(x0)):
        p = x0.copy()
        p[i] += step
        pts.append(p)
    return np.array(pts)


def _search(problem: _Problem) -> tuple[tuple, int]:
    cfg = problem.cfg
    starts = list(_outer_grid(problem))
    if cfg.random_starts:
        rng = np.random.default_rng(cfg.seed)
        lo = np.array([-np.pi / 2, 0.0])[-problem.outer_dim:]
        hi = np.array([np.pi / 2, np.pi])[-problem.outer_dim:]
        starts += list(rng.uniform(lo, hi, size=(cfg.random_starts, problem.outer_dim)))

    scored = []
    for x in starts:
        cands = problem.solve(x)
        if cands:
            best = min(cands, key=_key)
            scored.append((_key(best), tuple(float(v) for v in x), best))
    if not scored:
        raise InfeasibleTarget(f"no {problem.mode.value} attack reaches disturbance {problem.target!r}")
    scored.sort(key=lambda t: (t[0], t[1]))

    seeds, seen = [], set()
    for _, x, _ in scored:
        tag = tuple(round(v, 6) for v in x)
        if tag not in seen:
            seen.add(tag)
            seeds.append(x)
        if len(seeds) >= cfg.n_refine:
            break

    # each refinement gets its own counter so parallel runs are reproducible
    def run(x):
        sub = replace(problem, counter=_Counter())
        return _refine(sub, x), sub.counter.n

    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            refined = list(pool.map(run, seeds))
    else:
        refined = [run(x) for x in seeds]

    pool_cands = [s[2] for s in scored[: cfg.n_refine]]
    total = problem.counter.n
    for cands, n in refined:
        pool_cands.extend(cands)
        total += n
    return min(pool_cands, key=_key), total


def _canonical_phase(theta: float) -> float:
    return float(np.mod(theta, np.pi))


def _finish(mode: Mode, d_target: float, cand, evaluations: int, cfg: SearchConfig) -> OptResult:
    _, eta, phi, theta = cand
    theta = _canonical_phase(theta)
    if mode is Mode.SHANNON:
        strategy = AttackStrategy.canonical(CanonicalAttackOp.from_eta(min(max(eta, 0.0), 1.0), phi, theta))
        value = metrics.shannon_information(strategy)
        bound = bounds.shannon_sharp_bound(d_target)
    else:
        strategy = AttackStrategy.symmetric(SymmetricAttackOp.from_eta(min(max(eta, -1.0), 1.0), theta))
        value = metrics.collision_corrected(strategy).per_bit_collision
        bound = bounds.collision_bound(bounds.eta_bar_collision(d_target)) if d_target < 1 / 3 else 1.0
    achieved = metrics.disturbance_fid(strategy).d_fid
    if abs(achieved - d_target) > cfg.disturbance_tol:
        raise InfeasibleTarget(f"reached disturbance {achieved!r}, wanted {d_target!r}")
    return OptResult(
        mode=mode.value,
        target_d=float(d_target),
        achieved_d=achieved,
        best_value=value,
        best_params={"eta": eta, "phi": phi, "theta": theta, "weights": [1.0]},
        bound_value=bound,
        slack=bound - value,
        evaluations=evaluations,
    )


def _check_target(d_target: float) -> float:
    d = float(d_target)
    if not 0.0 <= d <= 0.5:
        raise ValueError(f"disturbance target must lie in [0, 0.5], got {d_target!r}")
    return d


def max_information_at_disturbance(
    d_target: float, config: SearchConfig | None = None, *, fixed_eta: float | None = None
) -> OptResult:
    """Largest Shannon information of a single canonical pair at disturbance ``d_target``.

    With ``fixed_eta`` the characteristic parameter is pinned and the
    constraint is solved over the rotation angle instead.
    """
    cfg = config or SearchConfig()
    d = _check_target(d_target)
    problem = _Problem(Mode.SHANNON, d, cfg, fixed_eta)
    best, n = _search(problem)
    return _finish(Mode.SHANNON, d, best, n, cfg)


def max_collision_at_disturbance(d_target: float, config: SearchConfig | None = None) -> OptResult:
    """Largest corrected-key collision probability of a single symmetric pair."""
    cfg = config or SearchConfig()
    d = _check_target(d_target)
    problem = _Problem(Mode.COLLISION, d, cfg)
    best, n = _search(problem)
    return _finish(Mode.COLLISION, d, best, n, cfg)


def sharpness_scan(d_grid: Sequence[float], mode="shannon", config: SearchConfig | None = None) -> list[OptResult]:
    """Run the maximizer for ``mode`` at every grid point."""
    mode = Mode(mode)
    grid = [float(d) for d in d_grid]
    if not grid:
        raise ValueError("empty disturbance grid")
    if any(not 0.0 <= d <= 1.0 / 3.0 for d in grid):
        raise ValueError("scan grid must lie within [0, 1/3]")
    run = max_information_at_disturbance if mode is Mode.SHANNON else max_collision_at_disturbance
    return [run(d, config) for d in grid]


def max_violation(results: Sequence[OptResult]) -> float:
    """Largest amount by which any result exceeds its bound (0 if none does)."""
    return max([0.0] + [-r.slack for r in results])


def max_gap(results: Sequence[OptResult]) -> float:
    """Largest distance below the bound, i.e. the worst sharpness gap."""
    return max([0.0] + [r.slack for r in results])


# --- extended families ----------------------------------------------------------


def _extended_search(value_fn, d_of_eta2, lo2, grid_axes, cfg, d_target):
    """Grid + Nelder-Mead over extra parameters with the second eta root-solved."""
    counter = _Counter()

    def solve(x):
        roots = _roots(lambda e: d_of_eta2(x, e), lo2, 1.0, d_target, cfg, counter)
        return [(float(value_fn(x, e)), e) for e in roots]

    def objective(x):
        cands = solve(x)
        return -max(c[0] for c in cands) if cands else 1.0

    mesh = np.stack([m.ravel() for m in np.meshgrid(*grid_axes, indexing="ij")], axis=1)
    scored = []
    for x in mesh:
        cands = solve(x)
        if cands:
            v, e = max(cands)
            scored.append((-v, tuple(x), e))
    if not scored:
        raise InfeasibleTarget(f"no extended attack reaches disturbance {d_target!r}")
    scored.sort()
    best = (-scored[0][0], scored[0][1], scored[0][2])
    for _, x, _ in scored[: cfg.n_refine]:
        res = minimize(objective, np.array(x), method="Nelder-Mead",
                       options={"xatol": cfg.xatol, "fatol": cfg.fatol, "maxfev": 4000})
        for v, e in solve(res.x):
            if v > best[0]:
                best = (v, tuple(res.x), e)
    return best, counter.n


def _clip_weight(w):
    return float(np.clip(w, 1e-6, 1.0 - 1e-6))


def max_value_two_pairs(d_target: float, mode="shannon", config: SearchConfig | None = None) -> OptResult:
    """Best two-pair attack ``w * pair(eta1) + (1 - w) * pair(eta2)`` at ``d_target``.

    Searched over ``(w, eta1, theta1, theta2)`` with ``eta2`` root-solved;
    rotations are left at zero since they never help the information or
    collision value but do add disturbance.
    """
    mode = Mode(mode)
    cfg = config or SearchConfig()
    d = _check_target(d_target)
    lo = 0.0 if mode is Mode.SHANNON else -1.0

    def ops(x, eta2):
        w, eta1, t1, t2 = _clip_weight(x[0]), float(np.clip(x[1], lo, 1.0)), x[2], x[3]
        eta2 = np.asarray(eta2, dtype=float)
        if mode is Mode.SHANNON:
            first = _canonical_ops(eta1, 0.0, t1, total=w)
            second = _canonical_ops(eta2, 0.0, t2, total=1.0 - w)
        else:
            first = _symmetric_ops(eta1, t1, total=w)
            second = _symmetric_ops(eta2, t2, total=1.0 - w)
        first = np.broadcast_to(first, second.shape)
        return np.concatenate([first, second], axis=-3)

    value = _information if mode is Mode.SHANNON else _collision
    axes = [
        np.linspace(0.1, 0.9, 5),
        np.linspace(lo, 1.0, 9),
        np.linspace(0.0, np.pi, 8, endpoint=False),
        np.linspace(0.0, np.pi, 8, endpoint=False),
    ]
    (best_v, x, eta2), n = _extended_search(
        lambda x, e: value(ops(x, e)), lambda x, e: _dfid(ops(x, e)), lo, axes, cfg, d
    )
    achieved = float(_dfid(ops(x, eta2)))
    if mode is Mode.SHANNON:
        bound = bounds.shannon_sharp_bound(d)
    else:
        bound = bounds.collision_bound(bounds.eta_bar_collision(d))
    w = _clip_weight(x[0])
    return OptResult(
        mode=mode.value,
        target_d=d,
        achieved_d=achieved,
        best_value=float(best_v),
        best_params={"eta": [float(np.clip(x[1], lo, 1.0)), eta2], "phi": 0.0,
                     "theta": [float(x[2]), float(x[3])], "weights": [w, 1.0 - w]},
        bound_value=bound,
        slack=bound - float(best_v),
        evaluations=n,
    )


def max_collision_with_antisymmetric(
    d_target: float, antisymmetric_weight: float, config: SearchConfig | None = None
) -> OptResult:
    """Best collision value when a fixed weight goes to antisymmetric operators.

    The strategy is ``(1 - w)`` symmetric pair plus ``w`` antisymmetric pair;
    ``eta`` of the symmetric part is root-solved and ``theta`` searched.
    """
    cfg = config or SearchConfig()
    d = _check_target(d_target)
    w = float(antisymmetric_weight)
    if not 0.0 < w < 1.0:
        raise ValueError("antisymmetric weight must lie in (0, 1)")

    def ops(x, eta):
        sym = _symmetric_ops(eta, x[0], total=1.0 - w)
        anti = _antisymmetric_ops(w, sym.shape[:-3])
        return np.concatenate([sym, anti], axis=-3)

    axes = [np.linspace(0.0, np.pi, cfg.grid_size, endpoint=False)]
    (best_v, x, eta), n = _extended_search(
        lambda x, e: _collision(ops(x, e)), lambda x, e: _dfid(ops(x, e)), -1.0, axes, cfg, d
    )
    bound = bounds.collision_bound(bounds.eta_bar_collision(d)) if d < 1 / 3 else 1.0
    return OptResult(
        mode=Mode.COLLISION.value,
        target_d=d,
        achieved_d=float(_dfid(ops(x, eta))),
        best_value=float(best_v),
        best_params={"eta": eta, "phi": 0.0, "theta": float(x[0]), "weights": [1.0 - w, w]},
        bound_value=bound,
        slack=bound - float(best_v),
        evaluations=n,
    )


def symmetric_strategy_from_result(result: OptResult) -> AttackStrategy:
    """Rebuild the single-pair strategy described by a collision-mode result."""
    p = result.best_params
    return AttackStrategy.symmetric(SymmetricAttackOp.from_eta(p["eta"], p["theta"]))


def canonical_strategy_from_result(result: OptResult) -> AttackStrategy:
    p = result.best_params
    return AttackStrategy.canonical(CanonicalAttackOp.from_eta(p["eta"], p["phi"], p["theta"]))
