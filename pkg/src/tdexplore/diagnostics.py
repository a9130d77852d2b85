"""Post-run analysis: state visitations colored by TD error, at desk scale.

Reads a finished off-policy run's transition log, recomputes every
transition's TD error with the final networks (a single consistent
yardstick), projects the visited states to 2D with PCA, and estimates
visitation densities per training phase with a Gaussian kernel density
estimator on a grid. Outputs are plain CSV grids for external plotting.
"""

import json
import os
from dataclasses import dataclass

import numpy as np

from .nets import forward
from .noise import GreedyExploration

PHASES = ("early", "intermediate", "late")


@dataclass
class VisitationLog:
    """Visited states with recomputed TD errors and a training-phase label."""

    states: np.ndarray      # (n, state_dim)
    td_errors: np.ndarray   # (n,)
    phases: np.ndarray      # (n,) strings from PHASES


@dataclass
class GridSpec:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int = 50
    ny: int = 50

    @property
    def cell_area(self):
        return ((self.x_max - self.x_min) / self.nx
                * (self.y_max - self.y_min) / self.ny)

    def centers(self):
        dx = (self.x_max - self.x_min) / self.nx
        dy = (self.y_max - self.y_min) / self.ny
        xs = self.x_min + dx * (np.arange(self.nx) + 0.5)
        ys = self.y_min + dy * (np.arange(self.ny) + 0.5)
        return xs, ys


@dataclass
class DensityGrid:
    """Grid-normalized density values: Riemann sum times cell area is 1."""

    grid: GridSpec
    density: np.ndarray  # (ny, nx)


def phase_labels(n):
    """Contiguous early/intermediate/late thirds; remainder fills the later
    thirds so sizes differ by at most one."""
    base, rem = divmod(n, 3)
    sizes = [base, base, base]
    for i in range(rem):
        sizes[2 - i] += 1
    labels = np.empty(n, dtype=object)
    start = 0
    for phase, size in zip(PHASES, sizes):
        labels[start:start + size] = phase
        start += size
    return labels


def read_transitions(path):
    """Load a transitions.jsonl file into flat arrays."""
    states, executed, rewards, next_states, dones = [], [], [], [], []
    with open(path) as fh:
        for line in fh:
            rec = json.loads(line)
            states.append(rec["state"])
            executed.append(rec["executed_action"])
            rewards.append(rec["reward"])
            next_states.append(rec["next_state"])
            dones.append(1.0 if rec["done"] else 0.0)
    if not states:
        raise ValueError(f"no transitions in {path}")
    return (np.array(states), np.array(executed), np.array(rewards),
            np.array(next_states), np.array(dones))


def log_td_errors(run_dir) -> VisitationLog:
    """Recompute per-transition TD errors with a run's final networks.

    td_error = |y - Q1(s, executed_action)| where y bootstraps through the
    final target networks and, for explorer runs, the final target explorer.
    Deterministic: recomputation always yields the same log.
    """
    from .harness import load_run_networks

    tpath = os.path.join(run_dir, "transitions.jsonl")
    if not os.path.exists(tpath):
        raise FileNotFoundError(
            f"{tpath} not found; rerun with log_transitions enabled")
    states, executed, rewards, next_states, dones = read_transitions(tpath)
    cfg, agent, explorer = load_run_networks(run_dir)
    if not hasattr(agent, "critics"):
        raise ValueError("TD-error diagnostics require an off-policy run")
    # Gaussian smoothing is stochastic, so recomputation always uses the
    # deterministic target path: the target explorer when present, otherwise
    # the unperturbed target action.
    strategy = explorer if explorer is not None else GreedyExploration()
    y = agent.td_target(rewards, next_states, dones, strategy)
    x = np.concatenate([agent.normalize(states), executed], axis=1)
    q = forward(agent.critics[0], x)[:, 0]
    td = np.abs(y - q)
    return VisitationLog(states, td, phase_labels(len(td)))


def pca_project(states, out_dim=2):
    """Project mean-centered states onto the top principal axes.

    Returns (projected, explained_variance_ratio). The projection keeps the
    top `out_dim` eigenvectors of the sample covariance; each axis's sign is
    fixed so its largest-magnitude loading is positive.
    """
    states = np.asarray(states, dtype=float)
    n, dim = states.shape
    if out_dim < 1 or out_dim > dim:
        raise ValueError(f"out_dim must be in [1, {dim}], got {out_dim}")
    if n < out_dim:
        raise ValueError(f"need at least {out_dim} samples, got {n}")
    centered = states - states.mean(axis=0)
    cov = centered.T @ centered / max(n - 1, 1)
    total = float(np.trace(cov))
    if total < 1e-12:
        raise ValueError("degenerate data: all samples identical")
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    components = eigvecs[:, order[:out_dim]].T
    for comp in components:
        lead = np.argmax(np.abs(comp))
        if comp[lead] < 0:
            comp *= -1.0
    ratio = float(np.sum(eigvals[:out_dim]) / np.sum(eigvals))
    return centered @ components.T, ratio


def scott_bandwidth(points):
    """Scott's rule per axis: n^(-1/6) * sigma, floored away from zero."""
    points = np.asarray(points, dtype=float)
    n = points.shape[0]
    sigma = points.std(axis=0)
    sigma = np.where(sigma > 1e-12, sigma, 1e-3)
    return n ** (-1.0 / 6.0) * sigma


def kde_density(points, bandwidth=None, grid: GridSpec = None,
                weights=None) -> DensityGrid:
    """Gaussian kernel density estimate of 2D points, normalized on a grid.

    `bandwidth` may be a scalar or per-axis pair; None applies Scott's rule.
    Optional non-negative `weights` produce a weighted density (all-zero
    weights fall back to uniform). The returned grid integrates to 1.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[0] < 1 or points.shape[1] != 2:
        raise ValueError("points must be a non-empty (n, 2) array")
    if bandwidth is None:
        bw = scott_bandwidth(points)
    else:
        bw = np.broadcast_to(np.asarray(bandwidth, dtype=float), (2,)).copy()
    if np.any(bw <= 0):
        raise ValueError("bandwidth must be positive")
    if grid is None:
        pad = 3.0 * bw
        lo = points.min(axis=0) - pad
        hi = points.max(axis=0) + pad
        grid = GridSpec(float(lo[0]), float(hi[0]), float(lo[1]), float(hi[1]))
    if weights is None:
        w = np.ones(points.shape[0])
    else:
        w = np.asarray(weights, dtype=float)
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
        if w.sum() == 0.0:
            w = np.ones(points.shape[0])
    w = w / w.sum()

    xs, ys = grid.centers()
    # (ny, nx) accumulation, chunked over points to bound memory
    density = np.zeros((grid.ny, grid.nx))
    chunk = 2000
    for start in range(0, points.shape[0], chunk):
        px = points[start:start + chunk, 0]
        py = points[start:start + chunk, 1]
        pw = w[start:start + chunk]
        kx = np.exp(-0.5 * ((xs[None, :] - px[:, None]) / bw[0]) ** 2)
        ky = np.exp(-0.5 * ((ys[None, :] - py[:, None]) / bw[1]) ** 2)
        density += (ky * pw[:, None]).T @ kx
    total = density.sum() * grid.cell_area
    if total > 0:
        density /= total
    return DensityGrid(grid, density)


# ------------------------------------------------------------------ CSV output

def write_visitation_csv(path, projected, log: VisitationLog):
    lines = ["x,y,td_error,phase"]
    for (x, y), td, phase in zip(projected, log.td_errors, log.phases):
        lines.append(f"{float(x)!r},{float(y)!r},{float(td)!r},{phase}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_density_csv(path, plain: DensityGrid, weighted: DensityGrid):
    xs, ys = plain.grid.centers()
    lines = ["grid_x,grid_y,density,density_tderr_weighted"]
    for iy in range(plain.grid.ny):
        for ix in range(plain.grid.nx):
            lines.append(f"{float(xs[ix])!r},{float(ys[iy])!r},"
                         f"{float(plain.density[iy, ix])!r},"
                         f"{float(weighted.density[iy, ix])!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def run_diagnostics(run_dir, out_dir=None, grid_size=50, bandwidth=None):
    """The full pipeline: TD errors, PCA to 2D, per-phase KDE grids.

    Writes visitation.csv and density_{early,intermediate,late}.csv into
    `out_dir` (defaults to the run directory).
    """
    out_dir = run_dir if out_dir is None else out_dir
    os.makedirs(out_dir, exist_ok=True)
    log = log_td_errors(run_dir)
    out_dim = min(2, log.states.shape[1])
    projected, ratio = pca_project(log.states, out_dim)
    if projected.shape[1] == 1:
        projected = np.column_stack([projected, np.zeros(len(projected))])
    write_visitation_csv(os.path.join(out_dir, "visitation.csv"), projected, log)

    bw = scott_bandwidth(projected) if bandwidth is None else bandwidth
    pad = 3.0 * np.broadcast_to(np.asarray(bw, dtype=float), (2,))
    lo = projected.min(axis=0) - pad
    hi = projected.max(axis=0) + pad
    grid = GridSpec(float(lo[0]), float(hi[0]), float(lo[1]), float(hi[1]),
                    int(grid_size), int(grid_size))
    for phase in PHASES:
        mask = log.phases == phase
        if not np.any(mask):
            continue
        plain = kde_density(projected[mask], bw, grid)
        weighted = kde_density(projected[mask], bw, grid,
                               weights=log.td_errors[mask])
        write_density_csv(os.path.join(out_dir, f"density_{phase}.csv"),
                          plain, weighted)
    return {"explained_variance_ratio": ratio, "records": len(log.td_errors)}
