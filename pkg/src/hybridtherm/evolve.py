"""Time integration of hybrid master equations.

Two steppers: a fixed-step classic RK4 and an adaptive embedded
Dormand-Prince RK45.  Observables are sampled on a uniform grid; the
convergence monitor compares states one relaxation interval apart and stops
the run once a full window of comparisons sits below tolerance.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .generator import HybridGenerator, apply
from .state import HybridState, hybrid_trace_distance


class StiffIntegrationError(RuntimeError):
    """Adaptive step size collapsed; the problem looks stiff."""

    def __init__(self, time: float):
        self.time = time
        super().__init__(f"step size underflow at t = {time:.6g}")


class NonConvergedError(RuntimeError):
    """Trajectory ended before meeting the convergence criterion."""


@dataclass
class IntegratorConfig:
    t_max: float
    method: str = "rk45"
    dt: float | None = None          # fixed step; default 0.01 / max rate
    rel_tol: float = 1e-10
    abs_tol: float = 1e-13
    sample_dt: float | None = None   # observable grid; default one relaxation interval
    # the monitor tolerance must sit above the integrator noise floor
    convergence_tol: float = 1e-9
    convergence_window: int = 5
    record_eigenbasis: bool = False

    def __post_init__(self) -> None:
        if self.t_max <= 0:
            raise ValueError("t_max must be positive")
        if self.method not in ("rk4", "rk45"):
            raise ValueError(f"unknown method {self.method!r}")


@dataclass
class Trajectory:
    times: np.ndarray
    total_trace: np.ndarray
    entropy: np.ndarray
    classical: np.ndarray
    min_eigenvalue: np.ndarray
    dist_to_target: np.ndarray | None
    final_state: HybridState
    converged: bool
    converged_time: float | None
    eig_populations: np.ndarray | None = None
    eig_coherences: np.ndarray | None = None
    coherence_pairs: list[tuple[int, int]] = field(default_factory=list)


# Dormand-Prince 5(4) tableau
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)


def _rk4_segment(rhs, y: np.ndarray, t0: float, t1: float, dt: float) -> np.ndarray:
    t = t0
    while t < t1 - 1e-14 * max(1.0, abs(t1)):
        h = min(dt, t1 - t)
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += h
    return y


def _rk45_segment(
    rhs, y: np.ndarray, t0: float, t1: float, h: float, rtol: float, atol: float
) -> tuple[np.ndarray, float]:
    t = t0
    while t < t1 - 1e-14 * max(1.0, abs(t1)):
        h = min(h, t1 - t)
        if h < 1e-13 * max(1.0, abs(t)):
            raise StiffIntegrationError(t)
        k = []
        for stage in range(7):
            yi = y
            if stage:
                acc = sum(a * ki for a, ki in zip(_DP_A[stage], k))
                yi = y + h * acc
            k.append(rhs(yi))
        y5 = y + h * sum(b * ki for b, ki in zip(_DP_B5, k))
        y4 = y + h * sum(b * ki for b, ki in zip(_DP_B4, k))
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y5))
        err = float(np.sqrt(np.mean((np.abs(y5 - y4) / scale) ** 2)))
        if err <= 1.0:
            t += h
            y = y5
            h *= min(5.0, max(0.2, 0.9 * (max(err, 1e-16)) ** -0.2))
        else:
            h *= max(0.2, 0.9 * err**-0.2)
    return y, h


def _default_steps(gen: HybridGenerator, cfg: IntegratorConfig) -> tuple[float, float]:
    """Fixed step and sample spacing derived from the rate table."""
    max_rate = gen.max_rate()
    min_rate = gen.min_rate()
    # fastest coherent frequency: largest spread inside one block
    freq_scale = float(np.max(gen.eigenvalues[:, -1] - gen.eigenvalues[:, 0]))
    dt = cfg.dt if cfg.dt is not None else 0.01 / max(max_rate, freq_scale, 1e-12)
    if cfg.sample_dt is not None:
        sample_dt = cfg.sample_dt
    else:
        spacing = 1.0 / min_rate if min_rate > 0 else cfg.t_max / 50.0
        # keep at least a convergence window inside t_max
        spacing = min(spacing, cfg.t_max / (cfg.convergence_window + 2.0))
        sample_dt = max(spacing, cfg.t_max / 5000.0)
    return dt, sample_dt


def _entropy_clipped(blocks: np.ndarray) -> tuple[float, float]:
    """(entropy with negatives clipped, most negative eigenvalue)."""
    w = np.linalg.eigvalsh(blocks).reshape(-1)
    low = float(np.min(w))
    w = w[w > 0.0]
    return float(-np.sum(w * np.log(w))), low


def integrate(
    gen: HybridGenerator,
    initial: HybridState,
    cfg: IntegratorConfig,
    target: HybridState | None = None,
) -> Trajectory:
    """Evolve a hybrid state, sampling observables as the run proceeds.

    When a target state is supplied the trace distance to it is recorded at
    every sample.  The run stops early once the convergence monitor fires.
    """
    if initial.num_labels != gen.num_labels or initial.dim_s != gen.dim_s:
        raise ValueError("initial state shape does not match generator")
    dt, sample_dt = _default_steps(gen, cfg)
    stride_t = 1.0 / gen.min_rate() if gen.min_rate() > 0 else sample_dt
    # the comparison interval must fit a full window inside t_max
    stride_t = min(stride_t, cfg.t_max / (cfg.convergence_window + 2.0))
    stride = max(1, round(stride_t / sample_dt))

    def rhs(arr: np.ndarray) -> np.ndarray:
        return apply(gen, HybridState(arr)).blocks

    L, d = gen.num_labels, gen.dim_s
    pair_list = [(a, b) for a in range(d) for b in range(a + 1, d)]
    times = [0.0]
    records: dict[str, list] = {k: [] for k in ("trace", "entropy", "classical", "low")}
    dists: list[float] = []
    pops: list[np.ndarray] = []
    cohs: list[np.ndarray] = []

    def record(arr: np.ndarray) -> None:
        records["trace"].append(float(np.einsum("cii->", arr).real))
        ent, low = _entropy_clipped(arr)
        records["entropy"].append(ent)
        records["low"].append(low)
        records["classical"].append(np.einsum("cii->c", arr).real.copy())
        if target is not None:
            dists.append(hybrid_trace_distance(HybridState(arr), target))
        if cfg.record_eigenbasis:
            v = gen.eigenvectors
            s = np.einsum("cki,ckl,clj->cij", v.conj(), arr, v, optimize=True)
            pops.append(np.einsum("cii->ci", s).real.copy())
            cohs.append(np.array([[s[c, b, a] for (a, b) in pair_list] for c in range(L)]))

    y = np.array(initial.blocks, dtype=complex)
    record(y)
    recent: deque[np.ndarray] = deque(maxlen=stride + 1)
    recent.append(y.copy())
    converged = False
    converged_time = None
    passes = 0
    h_adapt = dt
    t = 0.0
    while t < cfg.t_max - 1e-12 * cfg.t_max:
        t_next = min(t + sample_dt, cfg.t_max)
        if cfg.method == "rk4":
            y = _rk4_segment(rhs, y, t, t_next, dt)
        else:
            y, h_adapt = _rk45_segment(
                rhs, y, t, t_next, h_adapt, cfg.rel_tol, cfg.abs_tol
            )
        t = t_next
        times.append(t)
        record(y)
        recent.append(y.copy())
        if len(recent) == stride + 1:
            gap = hybrid_trace_distance(
                HybridState(recent[-1]), HybridState(recent[0])
            )
            passes = passes + 1 if gap < cfg.convergence_tol else 0
            if passes >= cfg.convergence_window:
                converged = True
                converged_time = t
                break

    return Trajectory(
        times=np.array(times),
        total_trace=np.array(records["trace"]),
        entropy=np.array(records["entropy"]),
        classical=np.array(records["classical"]),
        min_eigenvalue=np.array(records["low"]),
        dist_to_target=np.array(dists) if target is not None else None,
        final_state=HybridState(y),
        converged=converged,
        converged_time=converged_time,
        eig_populations=np.array(pops) if cfg.record_eigenbasis else None,
        eig_coherences=np.array(cohs) if cfg.record_eigenbasis else None,
        coherence_pairs=pair_list if cfg.record_eigenbasis else [],
    )


def converged_state(traj: Trajectory) -> HybridState:
    """Final state of a converged run, renormalized."""
    if not traj.converged:
        raise NonConvergedError(
            f"trajectory did not converge by t = {traj.times[-1]:.6g}"
        )
    return traj.final_state.normalized()


def trajectory_csv(traj: Trajectory) -> str:
    """Deterministic CSV dump; floats keep full round-trip precision."""
    num_labels = traj.classical.shape[1]
    cols = ["t", "total_trace", "entropy", "dist_to_thermal"]
    cols += [f"p[{c}]" for c in range(num_labels)]
    cols += ["min_eig"]
    lines = [",".join(cols)]
    for i in range(traj.times.shape[0]):
        row = [repr(float(traj.times[i]))]
        row.append(repr(float(traj.total_trace[i])))
        row.append(repr(float(traj.entropy[i])))
        if traj.dist_to_target is not None:
            row.append(repr(float(traj.dist_to_target[i])))
        else:
            row.append("")
        row += [repr(float(x)) for x in traj.classical[i]]
        row.append(repr(float(traj.min_eigenvalue[i])))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"
