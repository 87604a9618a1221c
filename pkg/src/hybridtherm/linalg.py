"""Hermitian linear algebra primitives shared by the rest of the package.

All matrices are dense complex numpy arrays.  Eigenvector phases follow a
fixed convention so that repeated runs produce identical bases.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITICITY_RTOL = 1e-12
EXP_ARG_LIMIT = 700.0


class NonHermitianError(ValueError):
    """Input matrix fails the Hermiticity check."""


class ExpRangeError(ValueError):
    """Requested scaled exponential would leave double-precision range."""


def hermiticity_defect(mat: np.ndarray) -> tuple[float, tuple[int, int]]:
    """Largest |M - M^dag| entry and its index."""
    diff = np.abs(mat - mat.conj().T)
    idx = np.unravel_index(np.argmax(diff), diff.shape)
    return float(diff[idx]), (int(idx[0]), int(idx[1]))


def check_hermitian(mat: np.ndarray, name: str = "matrix") -> None:
    """Reject non-square or non-Hermitian input with a located diagnostic."""
    mat = np.asarray(mat)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise NonHermitianError(f"{name} must be square, got shape {mat.shape}")
    scale = max(float(np.max(np.abs(mat))), 1.0)
    defect, idx = hermiticity_defect(mat)
    if defect > HERMITICITY_RTOL * scale:
        raise NonHermitianError(
            f"{name} is not Hermitian: |M - M^dag| = {defect:.3e} at {idx} "
            f"(tolerance {HERMITICITY_RTOL:.1e} * {scale:.3e})"
        )


@dataclass(frozen=True)
class HermitianEigensystem:
    """Spectral decomposition H = V diag(w) V^dag.

    eigenvalues are real and ascending; eigenvectors are the columns of an
    orthonormal matrix with deterministic phases: in each column the
    largest-magnitude component (lowest index on ties) is real positive.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def reconstruct(self) -> np.ndarray:
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.conj().T


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    out = np.array(vectors, copy=True)
    mags = np.abs(out)
    for k in range(out.shape[1]):
        # argmax picks the lowest index among exact ties
        pivot = int(np.argmax(mags[:, k]))
        ref = out[pivot, k]
        if ref != 0:
            out[:, k] *= np.abs(ref) / ref
        # force the pivot exactly real
        out[pivot, k] = out[pivot, k].real
    return out


def eigh(mat: np.ndarray, name: str = "matrix") -> HermitianEigensystem:
    """Eigendecompose a Hermitian matrix with the package phase convention."""
    check_hermitian(mat, name)
    w, v = np.linalg.eigh(mat)
    return HermitianEigensystem(eigenvalues=w, eigenvectors=_fix_phases(v))


def herm_exp(mat: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """exp(scale * H) for Hermitian H via the spectral decomposition."""
    es = eigh(mat)
    args = scale * es.eigenvalues
    amax = float(np.max(np.abs(args))) if args.size else 0.0
    if amax > EXP_ARG_LIMIT:
        raise ExpRangeError(
            f"scaled spectrum reaches |{amax:.3e}| > {EXP_ARG_LIMIT:.0f}; "
            "exp would leave double range"
        )
    v = es.eigenvectors
    return (v * np.exp(args)) @ v.conj().T


def frobenius(mat: np.ndarray) -> float:
    return float(np.linalg.norm(mat))


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Half the trace norm of (a - b); both arguments must be Hermitian."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    check_hermitian(a, "first argument")
    check_hermitian(b, "second argument")
    w = np.linalg.eigvalsh(a - b)
    return 0.5 * float(np.sum(np.abs(w)))


def logsumexp(args: np.ndarray) -> float:
    """log(sum(exp(args))) with max-shift stabilization."""
    args = np.asarray(args, dtype=float)
    m = float(np.max(args))
    return m + float(np.log(np.sum(np.exp(args - m))))


def shifted_softmax(args: np.ndarray) -> np.ndarray:
    """exp(args) normalized to unit sum, computed after a max shift."""
    args = np.asarray(args, dtype=float)
    e = np.exp(args - np.max(args))
    return e / np.sum(e)


def log_cosh(x: float) -> float:
    """ln cosh(x), safe for large |x|."""
    ax = abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax)) - np.log(2.0)
