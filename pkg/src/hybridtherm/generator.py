"""Detailed-balance Lindblad generators on hybrid states.

Jump operators are rank-one flips between conditional eigenstates, either
within one classical label or between eigenstates of two different labels.
Each enabled transition carries a user-chosen downhill rate; the uphill
partner rate is fixed by detailed balance against the full conditional
eigenvalues (classical energy shifts included), which pins the canonical
thermal state as a fixed point.

Three equivalent evaluation routes are provided: apply (fast, works in the
local eigenbases), collisional_apply (direct operator products with explicit
basis-change unitaries), and bipartite_superoperator (a dense Lindblad
matrix on the embedded bipartite system).  Tests hold them together.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import HermitianEigensystem, eigh, frobenius
from .state import HybridHamiltonian, HybridState

DEGENERACY_RTOL = 1e-10


class DegenerateStationaryError(RuntimeError):
    """Stationary subspace has dimension > 1; no unique fixed point."""

    def __init__(self, dimension: int, detail: str = ""):
        self.dimension = dimension
        msg = f"stationary subspace has dimension {dimension}"
        super().__init__(msg + (f" ({detail})" if detail else ""))


@dataclass(frozen=True)
class TransitionSpec:
    """One enabled transition pair with its downhill base rate.

    Endpoints are (label, eigenstate index) pairs; equal labels give a
    thermal transition inside one block, distinct labels a classical jump.
    """

    label_a: int
    index_a: int
    label_b: int
    index_b: int
    base_rate: float

    @classmethod
    def within(cls, label: int, i: int, j: int, rate: float) -> "TransitionSpec":
        return cls(label, i, label, j, rate)

    @classmethod
    def between(
        cls, label_a: int, i: int, label_b: int, j: int, rate: float
    ) -> "TransitionSpec":
        return cls(label_a, i, label_b, j, rate)

    @property
    def is_diagonal(self) -> bool:
        return self.label_a == self.label_b


@dataclass(frozen=True)
class RatePair:
    """Resolved rates of one transition pair.

    hi/lo are (label, index) endpoints ordered by full conditional
    eigenvalue; gamma_down acts hi -> lo and gamma_up lo -> hi with
    gamma_up = gamma_down * exp(-beta * delta).
    """

    hi: tuple[int, int]
    lo: tuple[int, int]
    gamma_down: float
    gamma_up: float
    delta: float

    def directed(self):
        """Yield (source, target, rate) with zero rates dropped."""
        if self.gamma_down > 0.0:
            yield self.hi, self.lo, self.gamma_down
        if self.gamma_up > 0.0:
            yield self.lo, self.hi, self.gamma_up


@dataclass
class HybridGenerator:
    hamiltonian: HybridHamiltonian
    beta: float
    eigensystems: list[HermitianEigensystem]
    rate_pairs: list[RatePair]
    # caches filled at build time
    eigenvalues: np.ndarray = field(repr=False, default=None)
    eigenvectors: np.ndarray = field(repr=False, default=None)
    _multiplier: np.ndarray = field(repr=False, default=None)
    _gain_matrix: np.ndarray = field(repr=False, default=None)
    _outflow: np.ndarray = field(repr=False, default=None)

    @property
    def num_labels(self) -> int:
        return self.hamiltonian.num_labels

    @property
    def dim_s(self) -> int:
        return self.hamiltonian.dim_s

    def directed_transitions(self):
        for pair in self.rate_pairs:
            yield from pair.directed()

    def positive_rates(self) -> np.ndarray:
        return np.array([rate for _, _, rate in self.directed_transitions()])

    def max_rate(self) -> float:
        rates = self.positive_rates()
        return float(rates.max()) if rates.size else 0.0

    def min_rate(self) -> float:
        rates = self.positive_rates()
        return float(rates.min()) if rates.size else 0.0

    def detailed_balance_residual(self) -> float:
        """Worst relative defect of gamma_up against the balance formula.

        Recomputed from the stored eigenvalues, so a corrupted rate table
        shows up directly.
        """
        worst = 0.0
        for pair in self.rate_pairs:
            if pair.gamma_down == 0.0:
                continue
            delta = (
                self.eigenvalues[pair.hi[0], pair.hi[1]]
                - self.eigenvalues[pair.lo[0], pair.lo[1]]
            )
            expected = pair.gamma_down * math.exp(-self.beta * delta)
            denom = max(expected, np.finfo(float).tiny)
            worst = max(worst, abs(pair.gamma_up - expected) / denom)
        return worst


def _resolve_pair(
    spec: TransitionSpec, eigenvalues: np.ndarray, beta: float
) -> RatePair:
    ea = eigenvalues[spec.label_a, spec.index_a]
    eb = eigenvalues[spec.label_b, spec.index_b]
    if ea >= eb:
        hi, lo = (spec.label_a, spec.index_a), (spec.label_b, spec.index_b)
        delta = float(ea - eb)
    else:
        hi, lo = (spec.label_b, spec.index_b), (spec.label_a, spec.index_a)
        delta = float(eb - ea)
    kappa = float(spec.base_rate)
    return RatePair(
        hi=hi,
        lo=lo,
        gamma_down=kappa,
        gamma_up=kappa * math.exp(-beta * delta),
        delta=delta,
    )


def build_generator(
    h: HybridHamiltonian, specs: list[TransitionSpec], beta: float
) -> HybridGenerator:
    """Diagonalize the conditionals and resolve every transition pair."""
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta!r}")
    d = h.dim_s
    systems = [eigh(h.conditional(c), f"conditional {c}") for c in range(h.num_labels)]
    eps = np.stack([es.eigenvalues for es in systems])
    vecs = np.stack([es.eigenvectors for es in systems])

    pairs = []
    for spec in specs:
        for lab, idx in ((spec.label_a, spec.index_a), (spec.label_b, spec.index_b)):
            if not 0 <= lab < h.num_labels:
                raise ValueError(f"label {lab} outside 0..{h.num_labels - 1}")
            if not 0 <= idx < d:
                raise ValueError(f"eigenstate index {idx} outside 0..{d - 1}")
        if spec.base_rate < 0:
            raise ValueError(f"base rate must be >= 0, got {spec.base_rate!r}")
        if spec.is_diagonal and spec.index_a == spec.index_b:
            raise ValueError("transition endpoints must differ")
        if spec.base_rate == 0.0:
            continue
        pairs.append(_resolve_pair(spec, eps, beta))

    gen = HybridGenerator(
        hamiltonian=h,
        beta=beta,
        eigensystems=systems,
        rate_pairs=pairs,
        eigenvalues=eps,
        eigenvectors=vecs,
    )
    _build_caches(gen)
    return gen


def _flat(label: int, index: int, d: int) -> int:
    return label * d + index

def _build_caches(gen: HybridGenerator) -> None:
    L, d = gen.num_labels, gen.dim_s
    outflow = np.zeros((L, d))
    gain = np.zeros((L * d, L * d))
    for (cs, ks), (ct, kt), rate in gen.directed_transitions():
        outflow[cs, ks] += rate
        gain[_flat(ct, kt, d), _flat(cs, ks, d)] += rate
    freq = gen.eigenvalues[:, :, None] - gen.eigenvalues[:, None, :]
    decay = 0.5 * (outflow[:, :, None] + outflow[:, None, :])
    gen._multiplier = -1j * freq - decay
    gen._gain_matrix = gain
    gen._outflow = outflow


def apply(gen: HybridGenerator, state: HybridState) -> HybridState:
    """Time derivative of a hybrid state under the generator.

    Evaluated in the local eigenbases, where the commutator and every
    anticommutator are elementwise multipliers and the jump gains feed the
    diagonal; algebraically identical to the operator form used by
    collisional_apply.
    """
    if state.num_labels != gen.num_labels or state.dim_s != gen.dim_s:
        raise ValueError("state shape does not match generator")
    v = gen.eigenvectors
    s = np.einsum("cki,ckl,clj->cij", v.conj(), state.blocks, v, optimize=True)
    ds = gen._multiplier * s
    pops = np.einsum("cii->ci", s).real.reshape(-1)
    gains = (gen._gain_matrix @ pops).reshape(gen.num_labels, gen.dim_s)
    idx = np.arange(gen.dim_s)
    ds[:, idx, idx] += gains
    out = np.einsum("cki,cij,clj->ckl", v, ds, v.conj(), optimize=True)
    out = 0.5 * (out + out.conj().transpose(0, 2, 1))
    return HybridState(out)


def basis_change_unitary(
    a: HermitianEigensystem, b: HermitianEigensystem
) -> np.ndarray:
    """Unitary sending the k-th eigenvector of a to the k-th of b."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch {a.dim} vs {b.dim}")
    return b.eigenvectors @ a.eigenvectors.conj().T


def collisional_apply(gen: HybridGenerator, state: HybridState) -> HybridState:
    """Same derivative via explicit operator products.

    Cross-label gains are written with the basis-change unitary conjugating
    the source block, so every jump operator lives in the basis of the block
    it acts on.  Kept as an independent slow route for equivalence checks.
    """
    if state.num_labels != gen.num_labels or state.dim_s != gen.dim_s:
        raise ValueError("state shape does not match generator")
    L, d = gen.num_labels, gen.dim_s
    out = np.zeros_like(state.blocks)
    # conditional Hamiltonian commutators
    for c in range(L):
        hc = gen.hamiltonian.conditional(c)
        out[c] += -1j * (hc @ state.blocks[c] - state.blocks[c] @ hc)
    vecs = gen.eigenvectors
    for (cs, ks), (ct, kt), rate in gen.directed_transitions():
        src_vec = vecs[cs][:, ks]
        proj_src = np.outer(src_vec, src_vec.conj())
        rho_s = state.blocks[cs]
        out[cs] -= 0.5 * rate * (proj_src @ rho_s + rho_s @ proj_src)
        if cs == ct:
            a_op = np.outer(vecs[ct][:, kt], src_vec.conj())
            out[ct] += rate * (a_op @ rho_s @ a_op.conj().T)
        else:
            u_tilde = basis_change_unitary(gen.eigensystems[ct], gen.eigensystems[cs])
            a_op = np.outer(vecs[ct][:, kt], vecs[ct][:, ks].conj())
            moved = u_tilde.conj().T @ rho_s @ u_tilde
            out[ct] += rate * (a_op @ moved @ a_op.conj().T)
    return HybridState(out)


# ---------------------------------------------------------------------------
# bipartite embedding

def embed_state(state: HybridState) -> np.ndarray:
    """Full (d*L, d*L) matrix with the blocks on the classical diagonal."""
    L, d = state.num_labels, state.dim_s
    full = np.zeros((L * d, L * d), dtype=complex)
    for c in range(L):
        full[c * d : (c + 1) * d, c * d : (c + 1) * d] = state.blocks[c]
    return full


def extract_state(full: np.ndarray, num_labels: int) -> HybridState:
    d = full.shape[0] // num_labels
    blocks = np.stack(
        [full[c * d : (c + 1) * d, c * d : (c + 1) * d] for c in range(num_labels)]
    )
    return HybridState(blocks)


def classical_offdiagonal_norm(full: np.ndarray, num_labels: int) -> float:
    """Largest Frobenius norm among off-diagonal classical blocks."""
    d = full.shape[0] // num_labels
    worst = 0.0
    for c1 in range(num_labels):
        for c2 in range(num_labels):
            if c1 == c2:
                continue
            blk = full[c1 * d : (c1 + 1) * d, c2 * d : (c2 + 1) * d]
            worst = max(worst, frobenius(blk))
    return worst


def bipartite_superoperator(gen: HybridGenerator, max_dim: int = 256) -> np.ndarray:
    """Dense Lindblad matrix on row-major vec of the embedded state.

    Every jump operator becomes |target><source| between embedded
    eigenvectors.  Quadratic memory in (d*L)^2 keeps this to small systems;
    it exists as an oracle for the block routes, not as a production path.
    """
    L, d = gen.num_labels, gen.dim_s
    dim = L * d
    if dim > max_dim:
        raise ValueError(f"embedded dimension {dim} exceeds cap {max_dim}")
    eye = np.eye(dim)
    h_full = np.zeros((dim, dim), dtype=complex)
    for c in range(L):
        h_full[c * d : (c + 1) * d, c * d : (c + 1) * d] = gen.hamiltonian.conditional(c)
    sup = -1j * (np.kron(h_full, eye) - np.kron(eye, h_full.T))
    for (cs, ks), (ct, kt), rate in gen.directed_transitions():
        u_src = np.zeros(dim, dtype=complex)
        u_src[cs * d : (cs + 1) * d] = gen.eigenvectors[cs][:, ks]
        u_tgt = np.zeros(dim, dtype=complex)
        u_tgt[ct * d : (ct + 1) * d] = gen.eigenvectors[ct][:, kt]
        jump = np.outer(u_tgt, u_src.conj())
        jj = jump.conj().T @ jump
        sup += rate * (
            np.kron(jump, jump.conj())
            - 0.5 * (np.kron(jj, eye) + np.kron(eye, jj.T))
        )
    return sup


def superoperator_apply(sup: np.ndarray, full: np.ndarray) -> np.ndarray:
    dim = full.shape[0]
    return (sup @ full.reshape(-1)).reshape(dim, dim)


# ---------------------------------------------------------------------------
# stationary state

def _closed_classes(gen: HybridGenerator) -> list[list[int]]:
    """Strongly connected closed classes of the population jump graph."""
    L, d = gen.num_labels, gen.dim_s
    n = L * d
    adj = np.zeros((n, n), dtype=bool)
    for (cs, ks), (ct, kt), _ in gen.directed_transitions():
        adj[_flat(cs, ks, d), _flat(ct, kt, d)] = True
    reach = adj | np.eye(n, dtype=bool)
    while True:
        nxt = reach | (reach.astype(np.uint8) @ reach.astype(np.uint8) > 0)
        if np.array_equal(nxt, reach):
            break
        reach = nxt
    mutual = reach & reach.T
    seen = np.zeros(n, dtype=bool)
    classes = []
    for i in range(n):
        if seen[i]:
            continue
        members = np.flatnonzero(mutual[i])
        seen[members] = True
        # closed: nothing reachable outside the class
        outside = np.ones(n, dtype=bool)
        outside[members] = False
        if not np.any(reach[members][:, outside]):
            classes.append([int(m) for m in members])
    return classes


def _gth_stationary(rates: np.ndarray) -> np.ndarray:
    """Stationary law of an irreducible rate matrix (rates[i, j] = i -> j).

    Subtraction-free state elimination, so entries keep full relative
    accuracy even when the stationary law spans many orders of magnitude.
    """
    a = np.array(rates, dtype=float)
    n = a.shape[0]
    for k in range(n - 1, 0, -1):
        s = float(np.sum(a[k, :k]))
        if s <= 0.0:
            raise DegenerateStationaryError(2, "rate matrix is reducible")
        a[:k, k] /= s
        a[:k, :k] += np.outer(a[:k, k], a[k, :k])
    pi = np.zeros(n)
    pi[0] = 1.0
    for k in range(1, n):
        pi[k] = float(np.dot(pi[:k], a[:k, k]))
    return pi / np.sum(pi)


def _frozen_coherence_pairs(gen: HybridGenerator) -> int:
    """Count coherence components with exactly zero damping and frequency."""
    count = 0
    scale = max(1.0, float(np.max(np.abs(gen.eigenvalues))))
    for c in range(gen.num_labels):
        for a in range(gen.dim_s):
            for b in range(a + 1, gen.dim_s):
                damp = gen._outflow[c, a] + gen._outflow[c, b]
                freq = abs(gen.eigenvalues[c, a] - gen.eigenvalues[c, b])
                if damp == 0.0 and freq <= DEGENERACY_RTOL * scale:
                    count += 2
    return count


def stationary_state(gen: HybridGenerator) -> HybridState:
    """Unique stationary hybrid state of the generator.

    Coherences in the local eigenbases damp out, so the fixed point is
    diagonal there and is the stationary law of the population jump
    process.  Raises DegenerateStationaryError when that law is not
    unique (frozen labels, disconnected transition graph, undamped
    degenerate coherences).
    """
    L, d = gen.num_labels, gen.dim_s
    classes = _closed_classes(gen)
    null_dim = len(classes) + _frozen_coherence_pairs(gen)
    if null_dim != 1:
        raise DegenerateStationaryError(
            null_dim,
            f"{len(classes)} closed population classes, "
            f"{_frozen_coherence_pairs(gen)} frozen coherence components",
        )
    members = classes[0]
    n = L * d
    rates = np.zeros((n, n))
    for (cs, ks), (ct, kt), rate in gen.directed_transitions():
        rates[_flat(cs, ks, d), _flat(ct, kt, d)] += rate
    pi = np.zeros(n)
    sub = rates[np.ix_(members, members)]
    pi[members] = _gth_stationary(sub)
    pops = pi.reshape(L, d)
    v = gen.eigenvectors
    blocks = np.einsum("cki,ci,cli->ckl", v, pops, v.conj())
    result = HybridState(blocks)
    residual = max(
        frobenius(b) for b in apply(gen, result).blocks
    )
    tol = 1e-10 * max(1.0, gen.max_rate())
    if residual > tol:
        raise RuntimeError(
            f"stationary residual {residual:.3e} exceeds {tol:.1e}"
        )
    return result
