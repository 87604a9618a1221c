"""Invariant suite run by the command line and by the fault-injection tests.

Each check returns its measured residual next to the tolerance it was held
to, so a report stays useful when something fails.
"""

from __future__ import annotations

import numpy as np

from .generator import (
    DegenerateStationaryError,
    HybridGenerator,
    apply,
    bipartite_superoperator,
    classical_offdiagonal_norm,
    collisional_apply,
    embed_state,
    stationary_state,
    superoperator_apply,
)
from .linalg import frobenius
from .state import HybridState, hybrid_trace_distance
from .thermal import hybrid_thermal

BIPARTITE_CHECK_CAP = 24


def random_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (g + g.conj().T)


def random_hybrid_state(
    rng: np.random.Generator, num_labels: int, dim_s: int
) -> HybridState:
    """Random valid hybrid state with full-rank blocks."""
    weights = rng.random(num_labels) + 0.1
    weights /= weights.sum()
    blocks = np.empty((num_labels, dim_s, dim_s), dtype=complex)
    for c in range(num_labels):
        g = rng.normal(size=(dim_s, dim_s)) + 1j * rng.normal(size=(dim_s, dim_s))
        rho = g @ g.conj().T + 1e-6 * np.eye(dim_s)
        blocks[c] = weights[c] * rho / np.trace(rho).real
    return HybridState(blocks)


def random_hermitian_blocks(
    rng: np.random.Generator, num_labels: int, dim_s: int
) -> HybridState:
    """Hermitian but not necessarily positive block array."""
    blocks = np.stack([random_hermitian(rng, dim_s) for _ in range(num_labels)])
    return HybridState(blocks)


def _check(name, residual, tolerance, detail=""):
    return {
        "name": name,
        "passed": bool(residual <= tolerance),
        "skipped": False,
        "residual": float(residual),
        "tolerance": float(tolerance),
        "detail": detail,
    }


def _skip(name, detail):
    return {
        "name": name,
        "passed": True,
        "skipped": True,
        "residual": None,
        "tolerance": None,
        "detail": detail,
    }


def verification_report(
    gen: HybridGenerator,
    rng: np.random.Generator,
    num_states: int = 20,
) -> dict:
    """Run every generator invariant and collect a machine-readable report."""
    h = gen.hamiltonian
    checks = []
    rate_scale = max(1.0, gen.max_rate())

    checks.append(
        _check(
            "detailed_balance",
            gen.detailed_balance_residual(),
            1e-15,
            "uphill rates against the balance formula, relative",
        )
    )

    thermal = hybrid_thermal(h, gen.beta)
    resid = max(frobenius(b) for b in apply(gen, thermal).blocks)
    checks.append(
        _check(
            "thermal_stationarity",
            resid,
            1e-12 * rate_scale,
            "largest block Frobenius norm of the thermal derivative",
        )
    )

    worst_pair = 0.0
    worst_trace = 0.0
    worst_herm = 0.0
    for _ in range(num_states):
        state = random_hybrid_state(rng, gen.num_labels, gen.dim_s)
        fast = apply(gen, state)
        slow = collisional_apply(gen, state)
        worst_pair = max(
            worst_pair,
            max(frobenius(a - b) for a, b in zip(fast.blocks, slow.blocks)),
        )
        worst_trace = max(worst_trace, abs(fast.total_trace()))
        herm = random_hermitian_blocks(rng, gen.num_labels, gen.dim_s)
        out = apply(gen, herm)
        worst_herm = max(
            worst_herm,
            max(
                float(np.max(np.abs(b - b.conj().T))) for b in out.blocks
            ),
        )
    checks.append(
        _check(
            "collisional_equivalence",
            worst_pair,
            1e-12 * rate_scale,
            f"block routes compared on {num_states} random states",
        )
    )
    checks.append(
        _check(
            "trace_preservation",
            worst_trace,
            1e-12 * rate_scale,
            "total trace of the derivative",
        )
    )
    checks.append(
        _check(
            "hermiticity_preservation",
            worst_herm,
            1e-12 * rate_scale,
            "derivative of Hermitian non-positive inputs",
        )
    )

    dim = gen.num_labels * gen.dim_s
    if dim <= BIPARTITE_CHECK_CAP:
        sup = bipartite_superoperator(gen)
        worst_sup = 0.0
        worst_off = 0.0
        for _ in range(num_states):
            state = random_hybrid_state(rng, gen.num_labels, gen.dim_s)
            fast = apply(gen, state)
            full = superoperator_apply(sup, embed_state(state))
            worst_off = max(
                worst_off, classical_offdiagonal_norm(full, gen.num_labels)
            )
            diff = embed_state(fast) - full
            worst_sup = max(worst_sup, frobenius(diff))
        checks.append(
            _check(
                "bipartite_equivalence",
                worst_sup,
                1e-12 * rate_scale,
                f"embedded superoperator on {num_states} random states",
            )
        )
        checks.append(
            _check(
                "classical_closure",
                worst_off,
                1e-14 * rate_scale,
                "off-diagonal classical blocks after one application",
            )
        )
    else:
        checks.append(
            _skip(
                "bipartite_equivalence",
                f"embedded dimension {dim} above cap {BIPARTITE_CHECK_CAP}",
            )
        )
        checks.append(
            _skip("classical_closure", "see bipartite_equivalence")
        )

    try:
        stat = stationary_state(gen)
        checks.append(
            _check(
                "stationary_matches_thermal",
                hybrid_trace_distance(stat, thermal),
                1e-10,
                "trace distance between the fixed point and the thermal state",
            )
        )
    except DegenerateStationaryError as err:
        checks.append(
            _skip("stationary_matches_thermal", f"degenerate: {err}")
        )

    return {
        "all_passed": all(c["passed"] for c in checks),
        "checks": checks,
    }
