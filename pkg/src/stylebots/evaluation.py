"""Evaluation: rollout protocols, behavior statistics, and CSV reports.

Three protocols probe a trained policy:

  fixed-target   agent 0 chases one fixed behavior target across many
                 episodes (teammate/opponents chase random targets); its
                 achieved vectors summarize as per-dimension mean and
                 spread against the target.
  conditioned    all four agents chase random targets; per-dimension
                 |achieved - target| errors summarize as box statistics.
  contrast       the conditioned policy and an unconditioned one each roll
                 out in their own episodes; the final vectors of both
                 groups project into a shared PCA plane and feed diversity
                 measures.

All CSV values are written at six significant digits, and every summary
file is computed from the rounded values it ships with, so a reader can
recompute any summary bit-for-bit from the raw tables alone.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .arena import N_PLAYERS, EnvConfig, reset, step
from .behavior import (
    DIM_NAMES,
    N_DIMS,
    BehaviorAccumulator,
    BehaviorVector,
    TargetVector,
    sample_target,
)
from .observations import encode_observation


def sig6(x: float) -> float:
    """Round to the six significant digits used by every CSV export."""
    return float(f"{x:.6g}")


def fmt6(x: float) -> str:
    return f"{x:.6g}"


# --- rollout engine ----------------------------------------------------------

@dataclass
class AgentAssignment:
    """How one seat is played during evaluation."""

    policy: object  # anything with act_batch
    conditioned: bool
    fixed_target: TargetVector | None = None  # None: fresh random target per episode


@dataclass
class AgentOutcome:
    agent_id: int
    behavior: BehaviorVector
    target: TargetVector | None
    total_score: int


def run_episodes(
    env_cfg: EnvConfig,
    assignments: list[AgentAssignment],
    n_episodes: int,
    seed: int,
) -> list[list[AgentOutcome]]:
    """Roll out `n_episodes` and return per-episode, per-agent outcomes.

    Episode seeds and random targets derive from `seed`, so a protocol run
    is fully reproducible. Behavior accumulates for every seat, including
    unconditioned ones; unconditioned seats see zeroed behavior inputs.
    """
    if len(assignments) != N_PLAYERS:
        raise ValueError(f"need {N_PLAYERS} assignments, got {len(assignments)}")

    # Group seats sharing a policy object so each policy gets one batched
    # call per tick, in a deterministic first-seen order.
    groups: list[tuple[object, list[int]]] = []
    for agent_id, a in enumerate(assignments):
        for policy, ids in groups:
            if policy is a.policy:
                ids.append(agent_id)
                break
        else:
            groups.append((a.policy, [agent_id]))

    episodes = []
    for ep in range(n_episodes):
        ep_seed = int(
            np.random.SeedSequence(seed, spawn_key=(0, ep)).generate_state(1, np.uint64)[0]
        )
        target_rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0, ep, 1)))
        targets: list[TargetVector | None] = []
        for a in assignments:
            if not a.conditioned:
                targets.append(None)
            elif a.fixed_target is not None:
                targets.append(a.fixed_target)
            else:
                targets.append(sample_target(target_rng))

        state = reset(env_cfg, ep_seed)
        accs = [BehaviorAccumulator.start(state, i) for i in range(N_PLAYERS)]
        prev = [BehaviorVector.zero() for _ in range(N_PLAYERS)]
        zero = BehaviorVector.zero()

        for _ in range(env_cfg.episode_length):
            obs = [
                encode_observation(
                    state,
                    i,
                    prev[i],
                    targets[i] if targets[i] is not None else zero,
                    condition_on_behavior=assignments[i].conditioned,
                )
                for i in range(N_PLAYERS)
            ]
            actions = np.zeros(N_PLAYERS, dtype=np.int64)
            for policy, ids in groups:
                acts, _, _ = policy.act_batch([obs[i] for i in ids])
                for k, agent_id in enumerate(ids):
                    actions[agent_id] = acts[k]
            state, _ = step(state, actions)
            for i in range(N_PLAYERS):
                accs[i].observe_step(state)
                prev[i] = accs[i].current(state)

        episodes.append(
            [
                AgentOutcome(
                    agent_id=i,
                    behavior=prev[i],
                    target=targets[i],
                    total_score=state.player(i).score_book.total,
                )
                for i in range(N_PLAYERS)
            ]
        )
    return episodes


# --- statistics --------------------------------------------------------------

def quantile_linear(values, q: float) -> float:
    """Linearly interpolated quantile on sorted order statistics.

    With n points and h = (n-1)q, the result is
    x[k] + (h-k) * (x[k+1] - x[k]) for k = floor(h).
    """
    x = np.sort(np.asarray(values, dtype=np.float64))
    n = len(x)
    if n == 0:
        raise ValueError("quantile of empty data")
    if not (0.0 <= q <= 1.0):
        raise ValueError(f"q must lie in [0, 1], got {q}")
    h = (n - 1) * q
    k = int(math.floor(h))
    if k + 1 >= n:
        return float(x[n - 1])
    return float(x[k] + (h - k) * (x[k + 1] - x[k]))


@dataclass(frozen=True)
class BoxStats:
    q1: float
    median: float
    q3: float
    lo_whisker: float
    hi_whisker: float
    mean: float


def box_stats(values) -> BoxStats:
    """Quartiles plus whiskers at the most extreme points within 1.5 IQR."""
    x = np.asarray(values, dtype=np.float64)
    q1 = quantile_linear(x, 0.25)
    med = quantile_linear(x, 0.50)
    q3 = quantile_linear(x, 0.75)
    iqr = q3 - q1
    lo_fence = q1 - 1.5 * iqr
    hi_fence = q3 + 1.5 * iqr
    inside = x[(x >= lo_fence) & (x <= hi_fence)]
    # Fences always bracket the quartiles, so `inside` is never empty.
    return BoxStats(
        q1=q1,
        median=med,
        q3=q3,
        lo_whisker=float(inside.min()),
        hi_whisker=float(inside.max()),
        mean=float(x.mean()),
    )


def pca_fit(X) -> tuple[np.ndarray, np.ndarray]:
    """Fit a 2-component PCA. Returns (mean, components) with components
    of shape (2, n_features), largest variance first.

    Implemented as an eigendecomposition of the sample covariance. Each
    component's sign is fixed so its largest-magnitude loading is
    positive, making the projection deterministic.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("PCA needs at least two samples")
    mean = X.mean(axis=0)
    centered = X - mean
    cov = centered.T @ centered / (X.shape[0] - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1][:2]
    components = eigvecs[:, order].T.copy()
    for row in range(components.shape[0]):
        j = int(np.argmax(np.abs(components[row])))
        if components[row, j] < 0:
            components[row] = -components[row]
    return mean, components


def pca_project(X, mean: np.ndarray, components: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return (X - mean) @ components.T


def convex_hull(points) -> np.ndarray:
    """Convex hull by monotone chain; vertices in counterclockwise order.

    Collinear input degenerates to its two extreme points; fewer than
    three distinct points return as-is.
    """
    pts = sorted({(float(p[0]), float(p[1])) for p in np.asarray(points)})
    if len(pts) <= 2:
        return np.array(pts, dtype=np.float64)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1], dtype=np.float64)


def polygon_area(vertices) -> float:
    """Shoelace area of a simple polygon; degenerate inputs give 0."""
    v = np.asarray(vertices, dtype=np.float64)
    if len(v) < 3:
        return 0.0
    x, y = v[:, 0], v[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def mean_pairwise_distance(X) -> float:
    """Mean Euclidean distance over all unordered point pairs."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if n < 2:
        return 0.0
    total = 0.0
    for i in range(n - 1):
        diffs = X[i + 1 :] - X[i]
        total += float(np.sqrt((diffs * diffs).sum(axis=1)).sum())
    return total / (n * (n - 1) / 2)


# --- report assembly ---------------------------------------------------------

BEHAVIOR_COLS = list(DIM_NAMES)
TARGET_COLS = [f"target_{name}" for name in DIM_NAMES]


def _round_vec(arr) -> list[float]:
    return [sig6(float(x)) for x in arr]


def write_fixed_target_report(
    out_dir, episodes: list[list[AgentOutcome]], target: TargetVector
) -> tuple[Path, Path]:
    """Raw vectors + per-dimension mean/sigma for the fixed-target seat."""
    out_dir = Path(out_dir)
    raw_path = out_dir / "fixed_target_vectors.csv"
    summary_path = out_dir / "radar.csv"

    rows = []
    with raw_path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["episode"] + BEHAVIOR_COLS)
        for ep, outcomes in enumerate(episodes):
            vec = _round_vec(outcomes[0].behavior.as_array())
            rows.append(vec)
            w.writerow([ep] + [fmt6(v) for v in vec])

    data = np.array(rows, dtype=np.float64)
    target_r = _round_vec(target.as_array())
    with summary_path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["dimension", "target", "mean", "sigma"])
        for d, name in enumerate(DIM_NAMES):
            w.writerow(
                [
                    name,
                    fmt6(target_r[d]),
                    fmt6(float(data[:, d].mean())),
                    fmt6(float(data[:, d].std(ddof=0))),
                ]
            )
    return raw_path, summary_path


def write_error_report(out_dir, episodes: list[list[AgentOutcome]]) -> tuple[Path, Path]:
    """Raw (behavior, target) pairs + per-dimension error box statistics."""
    out_dir = Path(out_dir)
    raw_path = out_dir / "error_vectors.csv"
    summary_path = out_dir / "errors.csv"

    behaviors, targets = [], []
    with raw_path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["episode", "agent"] + BEHAVIOR_COLS + TARGET_COLS)
        for ep, outcomes in enumerate(episodes):
            for o in outcomes:
                if o.target is None:
                    continue
                b = _round_vec(o.behavior.as_array())
                t = _round_vec(o.target.as_array())
                behaviors.append(b)
                targets.append(t)
                w.writerow([ep, o.agent_id] + [fmt6(v) for v in b + t])

    errors = np.abs(np.array(behaviors) - np.array(targets))
    with summary_path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["dimension", "q1", "median", "q3", "lo_whisker", "hi_whisker", "mean"])
        for d, name in enumerate(DIM_NAMES):
            s = box_stats(errors[:, d])
            w.writerow(
                [name]
                + [fmt6(v) for v in (s.q1, s.median, s.q3, s.lo_whisker, s.hi_whisker, s.mean)]
            )
    return raw_path, summary_path


def write_contrast_report(
    out_dir,
    episodes: list[list[AgentOutcome]],
    conditioned_label: str = "conditioned",
    unconditioned_label: str = "unconditioned",
) -> tuple[Path, Path, Path]:
    """Raw contrast-protocol vectors, shared-plane PCA table, diversity table.

    `episodes` mixes outcomes from conditioned and unconditioned seats in
    any arrangement; seats are grouped by whether they carried a target.
    The PCA plane is fit on the union of both groups' (rounded) vectors;
    hull areas are measured in that plane from the rounded projections, so
    both are recomputable from the CSVs alone.
    """
    out_dir = Path(out_dir)
    raw_path = out_dir / "contrast_vectors.csv"
    pca_path = out_dir / "pca.csv"
    div_path = out_dir / "diversity.csv"

    rows = []  # (label, behavior list, error or None)
    with raw_path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["episode", "agent", "policy"] + BEHAVIOR_COLS + TARGET_COLS)
        for ep, outcomes in enumerate(episodes):
            for o in outcomes:
                b = _round_vec(o.behavior.as_array())
                if o.target is not None:
                    t = _round_vec(o.target.as_array())
                    err = float(np.linalg.norm(np.array(b) - np.array(t))) / math.sqrt(N_DIMS)
                    label = conditioned_label
                    t_cells = [fmt6(v) for v in t]
                else:
                    err = None
                    label = unconditioned_label
                    t_cells = [""] * N_DIMS
                rows.append((label, b, err))
                w.writerow([ep, o.agent_id, label] + [fmt6(v) for v in b] + t_cells)

    all_vecs = np.array([r[1] for r in rows], dtype=np.float64)
    mean, components = pca_fit(all_vecs)
    proj = pca_project(all_vecs, mean, components)
    proj_r = np.array([[sig6(x), sig6(y)] for x, y in proj])

    with pca_path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "error", "policy"])
        for (label, _, err), (x, y) in zip(rows, proj_r):
            w.writerow([fmt6(x), fmt6(y), fmt6(sig6(err)) if err is not None else "", label])

    with div_path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["policy", "n_vectors", "mean_pairwise_distance", "hull_area", "degenerate"])
        for label in (conditioned_label, unconditioned_label):
            mask = np.array([r[0] == label for r in rows])
            vecs = all_vecs[mask]
            pts = proj_r[mask]
            hull = convex_hull(pts)
            area = polygon_area(hull)
            degenerate = len(hull) < 3
            w.writerow(
                [
                    label,
                    int(mask.sum()),
                    fmt6(sig6(mean_pairwise_distance(vecs))),
                    fmt6(sig6(area)),
                    str(degenerate).lower(),
                ]
            )
    return raw_path, pca_path, div_path
