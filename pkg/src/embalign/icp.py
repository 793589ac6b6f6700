"""Mini-batch cycle ICP: the core alternating matcher/optimizer.

Conventions used throughout:

* vectors are matrix rows; a transform T applies to a row matrix as
  ``M @ T.T`` (so the stored matrices act on column vectors, and the learned
  x-to-y map satisfies ``y ~= t_xy @ x``);
* the training objective has four terms, two matching terms and two
  cycle-consistency terms weighted by lambda:

      sum_j f(y_j - T_xy x_{f_y(j)}) + sum_i f(x_i - T_yx y_{f_x(i)})
      + lam * sum_i f(x_i - T_yx T_xy x_i) + lam * sum_j f(y_j - T_xy T_yx y_j)

  where f is the squared euclidean norm by default (plain norms are a config
  switch); matching maps f_y, f_x are refreshed once per epoch;
* the reconstruction criterion reported for run selection is the two
  matching terms with unsquared norms, divided by (n + m).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NonFiniteLoss
from .matching import CorrespondenceMap, nearest_neighbors, reciprocal_pairs

_MODES = ("mini_batch_cycle", "p_icp")


@dataclass
class TransformPair:
    """The two learned square maps, x-to-y and y-to-x."""

    t_xy: np.ndarray
    t_yx: np.ndarray

    def __post_init__(self):
        self.t_xy = np.asarray(self.t_xy, dtype=np.float64)
        self.t_yx = np.asarray(self.t_yx, dtype=np.float64)
        d = self.t_xy.shape[0]
        if self.t_xy.shape != (d, d) or self.t_yx.shape != (d, d):
            raise DimensionMismatch(
                f"transforms must be equal square matrices, got "
                f"{self.t_xy.shape} and {self.t_yx.shape}"
            )
        if not (np.isfinite(self.t_xy).all() and np.isfinite(self.t_yx).all()):
            raise NonFiniteLoss("non-finite transform entries")

    @classmethod
    def identity(cls, dim: int) -> "TransformPair":
        return cls(t_xy=np.eye(dim), t_yx=np.eye(dim))

    @property
    def dim(self) -> int:
        return self.t_xy.shape[0]

    def map_x(self, X: np.ndarray) -> np.ndarray:
        """Apply the x-to-y map to a row matrix of x vectors."""
        return X @ self.t_xy.T

    def map_y(self, Y: np.ndarray) -> np.ndarray:
        """Apply the y-to-x map to a row matrix of y vectors."""
        return Y @ self.t_yx.T

    def copy(self) -> "TransformPair":
        return TransformPair(t_xy=self.t_xy.copy(), t_yx=self.t_yx.copy())


@dataclass
class IcpConfig:
    """Hyperparameters for one optimization stage.

    ``reciprocal_from_epoch`` of None disables reciprocal-pair filtering;
    when set, epochs with index >= the threshold restrict the two matching
    terms (never the cycle terms) to mutually matched pairs.
    """

    lam: float = 0.1
    batch_size: int = 128
    epochs: int = 100
    reciprocal_from_epoch: int | None = None
    learning_rate: float = 0.5
    lr_decay: float = 0.98
    mode: str = "mini_batch_cycle"
    squared_loss: bool = True
    auto_scale: bool = True
    divergence_limit: float = 1e6

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if self.reciprocal_from_epoch is not None and (
            self.reciprocal_from_epoch > self.epochs
        ):
            raise ValueError("reciprocal_from_epoch must not exceed epochs")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0 < self.lr_decay <= 1:
            raise ValueError("lr_decay must be in (0, 1]")
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}")


@dataclass
class EpochReport:
    """State of one epoch, measured at its start with fresh matching maps."""

    epoch: int
    reconstruction_loss: float
    n_reciprocal: int
    match_xy: float
    match_yx: float
    cycle_x: float
    cycle_y: float

    @property
    def total(self) -> float:
        """Training objective: sum of the four components."""
        return self.match_xy + self.match_yx + self.cycle_x + self.cycle_y


@dataclass
class RunRecord:
    """Outcome of one seeded stage run."""

    seed: int
    stage: str
    transforms: TransformPair | None
    cmap: CorrespondenceMap | None
    final_loss: float
    converged: bool
    reports: list[EpochReport] = field(default_factory=list)


def _term(residual: np.ndarray, squared: bool) -> float:
    if squared:
        return float(np.einsum("ij,ij->", residual, residual))
    return float(np.sqrt(np.einsum("ij,ij->i", residual, residual)).sum())


def _scaled_residual(residual: np.ndarray, squared: bool) -> np.ndarray:
    """Residual rows weighted so that grad(term) = -coef * R_w.T @ inputs."""
    if squared:
        return 2.0 * residual
    norms = np.sqrt(np.einsum("ij,ij->i", residual, residual))
    norms[norms == 0.0] = 1.0
    return residual / norms[:, None]


def cycle_loss(
    state: TransformPair,
    X: np.ndarray,
    Y: np.ndarray,
    f_y: np.ndarray,
    f_x: np.ndarray,
    lam: float,
    mask_y: np.ndarray | None = None,
    mask_x: np.ndarray | None = None,
    squared: bool = True,
) -> tuple[float, tuple[float, float, float, float]]:
    """Four-term objective over the given maps; returns (total, components).

    Components are (match_xy, match_yx, cycle_x, cycle_y) with lambda folded
    into the cycle values. Masks restrict the matching terms only.
    """
    Xy = X[f_y] if mask_y is None else X[f_y[mask_y]]
    Yy = Y if mask_y is None else Y[mask_y]
    Yx = Y[f_x] if mask_x is None else Y[f_x[mask_x]]
    Xx = X if mask_x is None else X[mask_x]

    match_xy = _term(Yy - state.map_x(Xy), squared)
    match_yx = _term(Xx - state.map_y(Yx), squared)
    cycle_x = lam * _term(X - state.map_y(state.map_x(X)), squared)
    cycle_y = lam * _term(Y - state.map_x(state.map_y(Y)), squared)
    comps = (match_xy, match_yx, cycle_x, cycle_y)
    return float(sum(comps)), comps


def cycle_loss_grads(
    state: TransformPair,
    X: np.ndarray,
    Y: np.ndarray,
    f_y: np.ndarray,
    f_x: np.ndarray,
    lam: float,
    mask_y: np.ndarray | None = None,
    mask_x: np.ndarray | None = None,
    squared: bool = True,
    mean_terms: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradients of cycle_loss w.r.t. (t_xy, t_yx).

    ``mean_terms`` divides every term by its own row count, matching the
    per-batch mean objective used by the SGD steps.
    """
    t_xy, t_yx = state.t_xy, state.t_yx
    g_xy = np.zeros_like(t_xy)
    g_yx = np.zeros_like(t_yx)

    Xy = X[f_y] if mask_y is None else X[f_y[mask_y]]
    Yy = Y if mask_y is None else Y[mask_y]
    if len(Yy):
        r = _scaled_residual(Yy - Xy @ t_xy.T, squared)
        g_xy -= (r.T @ Xy) / (len(Yy) if mean_terms else 1.0)

    Yx = Y[f_x] if mask_x is None else Y[f_x[mask_x]]
    Xx = X if mask_x is None else X[mask_x]
    if len(Xx):
        r = _scaled_residual(Xx - Yx @ t_yx.T, squared)
        g_yx -= (r.T @ Yx) / (len(Xx) if mean_terms else 1.0)

    if lam > 0 and len(X):
        u = X @ t_xy.T
        r = _scaled_residual(X - u @ t_yx.T, squared)
        w = lam / (len(X) if mean_terms else 1.0)
        g_yx -= w * (r.T @ u)
        g_xy -= w * ((r @ t_yx).T @ X)

    if lam > 0 and len(Y):
        v = Y @ t_yx.T
        r = _scaled_residual(Y - v @ t_xy.T, squared)
        w = lam / (len(Y) if mean_terms else 1.0)
        g_xy -= w * (r.T @ v)
        g_yx -= w * ((r @ t_xy).T @ Y)

    return g_xy, g_yx


def reconstruction_loss(
    state: TransformPair, X: np.ndarray, Y: np.ndarray, cmap: CorrespondenceMap
) -> float:
    """Two-sided matching distance, unsquared, normalized by (n + m)."""
    r_y = Y - state.map_x(X[cmap.f_y])
    r_x = X - state.map_y(Y[cmap.f_x])
    total = (
        np.sqrt(np.einsum("ij,ij->i", r_y, r_y)).sum()
        + np.sqrt(np.einsum("ij,ij->i", r_x, r_x)).sum()
    )
    return float(total) / (len(X) + len(Y))


def _epoch_maps(state, X, Y):
    f_y = nearest_neighbors(Y, state.map_x(X), metric="euclidean")
    f_x = nearest_neighbors(X, state.map_y(Y), metric="euclidean")
    return CorrespondenceMap(f_y=f_y, f_x=f_x)


def _filter_masks(cmap: CorrespondenceMap, active: bool):
    if not active:
        return None, None
    m = len(cmap.f_y)
    n = len(cmap.f_x)
    mask_y = cmap.f_x[cmap.f_y] == np.arange(m)
    mask_x = cmap.f_y[cmap.f_x] == np.arange(n)
    return mask_y, mask_x


def _start_report(state, X, Y, cmap, config, epoch_index, mask_y, mask_x):
    _, comps = cycle_loss(
        state, X, Y, cmap.f_y, cmap.f_x, config.lam,
        mask_y=mask_y, mask_x=mask_x, squared=config.squared_loss,
    )
    return EpochReport(
        epoch=epoch_index,
        reconstruction_loss=reconstruction_loss(state, X, Y, cmap),
        n_reciprocal=len(reciprocal_pairs(cmap)),
        match_xy=comps[0],
        match_yx=comps[1],
        cycle_x=comps[2],
        cycle_y=comps[3],
    )


def _check_state(t_xy: np.ndarray, t_yx: np.ndarray, limit: float):
    if (
        not np.isfinite(t_xy).all()
        or not np.isfinite(t_yx).all()
        or max(np.abs(t_xy).max(), np.abs(t_yx).max()) > limit
    ):
        raise NonFiniteLoss("transform diverged during SGD")


def icp_epoch(
    state: TransformPair,
    X: np.ndarray,
    Y: np.ndarray,
    config: IcpConfig,
    epoch_index: int,
    rng: np.random.Generator,
) -> tuple[TransformPair, EpochReport]:
    """One epoch: refresh matches, then a shuffled mini-batch SGD pass.

    The report reflects the state at the start of the epoch. Raises
    NonFiniteLoss if the transforms diverge mid-pass.
    """
    n, m = len(X), len(Y)
    cmap = _epoch_maps(state, X, Y)
    filtering = (
        config.reciprocal_from_epoch is not None
        and epoch_index >= config.reciprocal_from_epoch
    )
    mask_y, mask_x = _filter_masks(cmap, filtering)
    report = _start_report(state, X, Y, cmap, config, epoch_index, mask_y, mask_x)

    t_xy = state.t_xy.copy()
    t_yx = state.t_yx.copy()
    x_of_y = X[cmap.f_y]  # source row matched to each target row
    y_of_x = Y[cmap.f_x]
    order_x = rng.permutation(n)
    order_y = rng.permutation(m)
    steps = math.ceil(max(n, m) / config.batch_size)
    lr = config.learning_rate * config.lr_decay**epoch_index
    lam = config.lam
    squared = config.squared_loss
    coef = 1.0  # _scaled_residual already carries the factor 2 when squared

    for step in range(steps):
        sl = np.arange(step * config.batch_size, (step + 1) * config.batch_size)
        bx = np.take(order_x, sl, mode="wrap")
        by = np.take(order_y, sl, mode="wrap")
        g_xy = np.zeros_like(t_xy)
        g_yx = np.zeros_like(t_yx)

        by_f = by if mask_y is None else by[mask_y[by]]
        if len(by_f):
            xb = x_of_y[by_f]
            r = _scaled_residual(Y[by_f] - xb @ t_xy.T, squared)
            g_xy -= (coef / len(by_f)) * (r.T @ xb)
        bx_f = bx if mask_x is None else bx[mask_x[bx]]
        if len(bx_f):
            yb = y_of_x[bx_f]
            r = _scaled_residual(X[bx_f] - yb @ t_yx.T, squared)
            g_yx -= (coef / len(bx_f)) * (r.T @ yb)

        if lam > 0:
            xc = X[bx]
            u = xc @ t_xy.T
            r = _scaled_residual(xc - u @ t_yx.T, squared)
            g_yx -= (lam * coef / len(bx)) * (r.T @ u)
            g_xy -= (lam * coef / len(bx)) * ((r @ t_yx).T @ xc)

            yc = Y[by]
            v = yc @ t_yx.T
            r = _scaled_residual(yc - v @ t_xy.T, squared)
            g_xy -= (lam * coef / len(by)) * (r.T @ v)
            g_yx -= (lam * coef / len(by)) * ((r @ t_xy).T @ yc)

        t_xy = t_xy - lr * g_xy
        t_yx = t_yx - lr * g_yx
        _check_state(t_xy, t_yx, config.divergence_limit)

    return TransformPair(t_xy=t_xy, t_yx=t_yx), report


def p_icp_epoch(
    state: TransformPair,
    X: np.ndarray,
    Y: np.ndarray,
    config: IcpConfig | None = None,
    epoch_index: int = 0,
) -> tuple[TransformPair, EpochReport]:
    """Ablation epoch: same matching step, then a closed-form orthonormal
    Procrustes refit per direction (full batch, no cycle term, no SGD)."""
    from .linalg import procrustes

    if config is None:
        config = IcpConfig(mode="p_icp")
    cmap = _epoch_maps(state, X, Y)
    filtering = (
        config.reciprocal_from_epoch is not None
        and epoch_index >= config.reciprocal_from_epoch
    )
    mask_y, mask_x = _filter_masks(cmap, filtering)
    report = _start_report(state, X, Y, cmap, config, epoch_index, mask_y, mask_x)

    t_xy = state.t_xy
    t_yx = state.t_yx
    src = X[cmap.f_y] if mask_y is None else X[cmap.f_y[mask_y]]
    dst = Y if mask_y is None else Y[mask_y]
    if len(dst):
        t_xy = procrustes(src, dst).T
    src = Y[cmap.f_x] if mask_x is None else Y[cmap.f_x[mask_x]]
    dst = X if mask_x is None else X[mask_x]
    if len(dst):
        t_yx = procrustes(src, dst).T
    return TransformPair(t_xy=t_xy, t_yx=t_yx), report


def _shared_scale(X: np.ndarray, Y: np.ndarray) -> float:
    """Largest per-coordinate std over both sets; the SGD defaults assume
    roughly unit-scale coordinates and a shared factor leaves the optimal
    transforms unchanged."""
    scale = float(max(X.std(axis=0).max(), Y.std(axis=0).max()))
    return scale if scale > 0 else 1.0


def fit_transforms_to_map(
    X: np.ndarray, Y: np.ndarray, cmap: CorrespondenceMap
) -> TransformPair:
    """Unconstrained least-squares transforms reproducing a correspondence map."""
    w_xy, *_ = np.linalg.lstsq(X[cmap.f_y], Y, rcond=None)
    w_yx, *_ = np.linalg.lstsq(Y[cmap.f_x], X, rcond=None)
    return TransformPair(t_xy=w_xy.T, t_yx=w_yx.T)


def run_stage(
    X: np.ndarray,
    Y: np.ndarray,
    init: TransformPair | CorrespondenceMap,
    config: IcpConfig,
    seed: int,
    stage: str = "pca",
) -> RunRecord:
    """Run config.epochs epochs from the given initialization.

    ``init`` is either a TransformPair (identity for the reduced-space stage)
    or a CorrespondenceMap, in which case initial transforms are fit to the
    correspondences by least squares first. A diverged run comes back with
    converged=False and an infinite loss instead of raising.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    Y = np.ascontiguousarray(Y, dtype=np.float64)
    if X.shape[1] != Y.shape[1]:
        raise DimensionMismatch("X and Y must share their vector dimension")
    if config.auto_scale:
        scale = _shared_scale(X, Y)
        X = X / scale
        Y = Y / scale

    if isinstance(init, CorrespondenceMap):
        state = fit_transforms_to_map(X, Y, init)
    else:
        state = init.copy()
    if state.dim != X.shape[1]:
        raise DimensionMismatch(
            f"init dimension {state.dim} != data dimension {X.shape[1]}"
        )

    rng = np.random.default_rng(seed)
    reports: list[EpochReport] = []
    converged = True
    for epoch in range(config.epochs):
        try:
            if config.mode == "p_icp":
                state, report = p_icp_epoch(state, X, Y, config, epoch)
            else:
                state, report = icp_epoch(state, X, Y, config, epoch, rng)
        except NonFiniteLoss:
            converged = False
            break
        reports.append(report)

    if converged:
        cmap = _epoch_maps(state, X, Y)
        final_loss = reconstruction_loss(state, X, Y, cmap)
        if not np.isfinite(final_loss):
            converged = False
    if not converged:
        return RunRecord(
            seed=seed, stage=stage, transforms=None, cmap=None,
            final_loss=float("inf"), converged=False, reports=reports,
        )
    return RunRecord(
        seed=seed, stage=stage, transforms=state, cmap=cmap,
        final_loss=final_loss, converged=True, reports=reports,
    )
