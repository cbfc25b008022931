"""Terrain extraction by iteratively reweighted, constrained TV smoothing.

Each outer iteration refreshes a fuzzy terrain map ``t`` from the gap
between surface ``g`` and current terrain ``f``, linearises the absolute
values around the previous iterate ``f_hat`` into quadratic weights, solves
the resulting sparse SPD system with PCG/IC(0), and clamps ``f <= g``.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ShapeMismatch
from .raster import Grid
from .solver import SolveReport, ic0_factor, pcg_solve
from .sparse import CsrMatrix, assemble_stencil

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExtractionConfig:
    """Scalar parameters of the extraction.

    ``lam_p`` defaults to ``0.5 * lam``. Gradients are per-cell differences,
    so ``lam`` does not scale with ``cell_size`` and needs retuning when the
    raster resolution changes.
    """

    lam: float = 5.0
    lam_p: Optional[float] = None
    t_ng: float = 0.5
    epsilon: float = 0.1
    n_max: int = 10_000
    c_tolerance: float = 1e-3
    pcg_tol: float = 1e-3
    pcg_max_iter: int = 1000
    paper_literal_a: bool = False

    def __post_init__(self):
        if self.lam_p is None:
            object.__setattr__(self, "lam_p", 0.5 * self.lam)
        checks = {
            "lam": self.lam > 0,
            "lam_p": self.lam_p >= 0,
            "t_ng": self.t_ng > 0,
            "epsilon": self.epsilon > 0,
            "n_max": self.n_max >= 1,
            "c_tolerance": self.c_tolerance > 0,
            "pcg_tol": self.pcg_tol > 0,
            "pcg_max_iter": self.pcg_max_iter >= 1,
        }
        for name, ok in checks.items():
            if not ok:
                raise ValueError(f"invalid {name}: {getattr(self, name)!r}")

    def as_dict(self) -> dict:
        d = asdict(self)
        return {"lambda": d.pop("lam"), "lambda_p": d.pop("lam_p"), **d}


@dataclass(frozen=True, eq=False)
class WeightSet:
    d: np.ndarray
    wx: np.ndarray
    wy: np.ndarray
    h: np.ndarray


@dataclass(eq=False)
class ExtractionResult:
    dtm: Grid
    terrain: np.ndarray
    iterations_run: int
    converged: bool
    step_norms: list[float] = field(default_factory=list)
    solve_reports: list[SolveReport] = field(default_factory=list)


def _values(x) -> np.ndarray:
    if isinstance(x, Grid):
        return x.values
    x = np.asarray(x, dtype=np.float64)
    return x.reshape(1, -1) if x.ndim == 1 else x


def _same_shape(*arrays: np.ndarray) -> None:
    shapes = {a.shape for a in arrays}
    if len(shapes) != 1:
        raise ShapeMismatch(f"inconsistent grid shapes {sorted(shapes)}")


def gradients(f) -> tuple[np.ndarray, np.ndarray]:
    """Forward differences along x (columns) and y (rows), zero on the
    right/bottom boundary. Same result as the operators of
    :func:`dtmextract.sparse.build_diff_x` / ``build_diff_y``."""
    f = _values(f)
    dx = np.zeros_like(f)
    dy = np.zeros_like(f)
    dx[:, :-1] = f[:, 1:] - f[:, :-1]
    dy[:-1, :] = f[1:, :] - f[:-1, :]
    return dx, dy


def terrain_indicator(g, f, t_ng: float) -> np.ndarray:
    """t = 1 - min((g - f) / t_ng, 1), kept inside [0, 1]."""
    g, f = _values(g), _values(f)
    _same_shape(g, f)
    if not t_ng > 0:
        raise ValueError(f"t_ng must be positive, got {t_ng}")
    t = 1.0 - np.minimum((g - f) / t_ng, 1.0)
    return np.clip(t, 0.0, 1.0)


def fidelity_weights(f_hat, g, epsilon: float) -> np.ndarray:
    f_hat, g = _values(f_hat), _values(g)
    _same_shape(f_hat, g)
    return 1.0 / (np.abs(f_hat - g) + epsilon)


def tv_weights(f_hat, epsilon: float) -> tuple[np.ndarray, np.ndarray]:
    dx, dy = gradients(f_hat)
    return 1.0 / (np.abs(dx) + epsilon), 1.0 / (np.abs(dy) + epsilon)


def penalty_weights(f_hat, g, d) -> np.ndarray:
    """h = d where the previous iterate sits above the surface, else 0."""
    f_hat, g, d = _values(f_hat), _values(g), _values(d)
    _same_shape(f_hat, g, d)
    return np.where(f_hat > g, d, 0.0)


def compute_weights(f_hat, g, epsilon: float) -> WeightSet:
    d = fidelity_weights(f_hat, g, epsilon)
    wx, wy = tv_weights(f_hat, epsilon)
    return WeightSet(d=d, wx=wx, wy=wy, h=penalty_weights(f_hat, g, d))


def assemble_system(t, w: WeightSet, g, cfg: ExtractionConfig) -> tuple[CsrMatrix, np.ndarray]:
    """Return ``(A, b)`` with R = T(2D + I), b = (R + lam_p H) g."""
    t, g = _values(t), _values(g)
    _same_shape(t, g, w.d, w.wx, w.wy, w.h)
    rows, cols = g.shape
    r_diag = (t * (2.0 * w.d + 1.0)).reshape(-1)
    h = w.h.reshape(-1)
    a = assemble_stencil(
        w.wx,
        w.wy,
        r_diag,
        h,
        cfg.lam,
        cfg.lam_p,
        rows,
        cols,
        include_penalty=not cfg.paper_literal_a,
    )
    b = (r_diag + cfg.lam_p * h) * g.reshape(-1)
    return a, b


def tv_operator(f, wx, wy) -> np.ndarray:
    """Apply Cx' Wx Cx + Cy' Wy Cy to ``f`` (grid-shaped in and out)."""
    dx, dy = gradients(f)
    fx = wx * dx
    fy = wy * dy
    out = -fx - fy
    out[:, 1:] += fx[:, :-1]
    out[1:, :] += fy[:-1, :]
    return out


def system_residual(f, t, w: WeightSet, g, cfg: ExtractionConfig) -> np.ndarray:
    """``b - A f`` without forming ``A f``.

    Grouping the fidelity terms as ``(g - f)`` avoids cancellation between
    large diagonal products, so a flat ``f == g`` gives exactly zero.
    """
    f, t, g = _values(f), _values(t), _values(g)
    r_diag = t * (2.0 * w.d + 1.0)
    penalty = cfg.lam_p * w.h
    out = (r_diag + penalty) * (g - f) - cfg.lam * tv_operator(f, w.wx, w.wy)
    if cfg.paper_literal_a:
        out += penalty * f
    return out


def approx_cost(f, g, t, w: WeightSet, cfg: ExtractionConfig) -> float:
    """The reweighted quadratic cost minimised by one inner solve."""
    f, g, t = _values(f), _values(g), _values(t)
    _same_shape(f, g, t, w.d)
    e2 = (f - g) ** 2
    dx, dy = gradients(f)
    total = (
        t * (e2 + 2.0 * w.d * e2)
        + cfg.lam * (w.wx * dx**2 + w.wy * dy**2)
        + cfg.lam_p * w.h * e2
    )
    return float(total.sum())


def exact_cost(f, g, t, cfg: ExtractionConfig) -> float:
    """The non-smooth penalised cost (no epsilon smoothing); diagnostics only."""
    f, g, t = _values(f), _values(g), _values(t)
    _same_shape(f, g, t)
    e = f - g
    dx, dy = gradients(f)
    total = (
        t * (e**2 + 2.0 * np.abs(e))
        + cfg.lam * (np.abs(dx) + np.abs(dy))
        + cfg.lam_p * np.maximum(e, 0.0)
    )
    return float(total.sum())


IterationCallback = Callable[[int, np.ndarray, np.ndarray], None]


def extract_dtm(
    g: Grid,
    cfg: ExtractionConfig = ExtractionConfig(),
    callback: Optional[IterationCallback] = None,
) -> ExtractionResult:
    """Extract a terrain model from the surface model ``g``.

    ``callback(n, f, t)`` is invoked after every outer iteration with the
    clamped iterate and the terrain map used to produce it.
    """
    gv = g.values
    g_vec = gv.reshape(-1)
    f = gv.copy()
    t = np.ones_like(gv)
    steps: list[float] = []
    reports: list[SolveReport] = []
    converged = False
    n = 0
    for n in range(1, cfg.n_max + 1):
        t = terrain_indicator(gv, f, cfg.t_ng)
        f_hat = f
        w = compute_weights(f_hat, gv, cfg.epsilon)
        a, b = assemble_system(t, w, gv, cfg)
        precond = ic0_factor(a)
        # warm start as a correction solve: the tolerance is then relative
        # to the residual of f_hat, not to ||b||
        f_hat_vec = f_hat.reshape(-1)
        residual = system_residual(f_hat, t, w, gv, cfg).reshape(-1)
        delta, report = pcg_solve(
            a, residual, None, precond, cfg.pcg_tol, cfg.pcg_max_iter
        )
        reports.append(report)
        f = np.minimum(f_hat_vec + delta, g_vec).reshape(gv.shape)
        step = float(np.max(np.abs(f - f_hat)))
        steps.append(step)
        log.debug(
            "iter %d: step %.3e, pcg %d its (res %.2e)",
            n, step, report.iterations, report.final_relative_residual,
        )
        if callback is not None:
            callback(n, f, t)
        if step < cfg.c_tolerance:
            converged = True
            break
    dtm = g.with_values(f)
    return ExtractionResult(dtm, t, n, converged, steps, reports)
