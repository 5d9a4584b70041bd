"""Minimal dense complex matrix kit.

Hermitian eigendecomposition with a fixed ordering/phase convention,
Haar-distributed random unitaries, complex Gaussian sampling, and a
deterministic streaming RNG that the Monte Carlo layers build on.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError

HERMITIAN_TOL = 1e-9


class Rng:
    """Deterministic random stream backed by the Philox counter-based generator.

    A stream is identified by the pair (seed, stream); the value of draw n
    depends only on (seed, stream, n), never on what other streams have done.
    This makes per-trial substreams safe to evaluate in any order or on any
    number of workers. Callers partition the flat 64-bit stream namespace.
    """

    def __init__(self, seed, stream=0):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.stream = int(stream) & 0xFFFFFFFFFFFFFFFF
        key = np.array([self.seed, self.stream], dtype=np.uint64)
        self.gen = np.random.Generator(np.random.Philox(key=key))

    def substream(self, index):
        """Fresh stream (seed, index), independent of this one's position."""
        return Rng(self.seed, index)

    def __repr__(self):
        return f"Rng(seed={self.seed}, stream={self.stream})"


@dataclass
class EigSystem:
    """Eigendecomposition of a Hermitian matrix.

    values are real and sorted non-increasing; column i of vectors pairs
    with values[i]. In each eigenvector the entry of largest magnitude is
    real and non-negative (ties broken by lowest index).
    """

    values: np.ndarray
    vectors: np.ndarray

    def reconstruct(self):
        return (self.vectors * self.values) @ self.vectors.conj().T


def hermitian_eig(m):
    """Eigendecomposition of a Hermitian matrix (n <= 8 in practice).

    The input is symmetrized before factoring; inputs further than
    1e-9 * ||M||_F from Hermitian are rejected.
    """
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise PreconditionError(f"hermitian_eig needs a square matrix, got shape {m.shape}")
    scale = np.linalg.norm(m)
    herm_resid = np.linalg.norm(m - m.conj().T)
    if herm_resid > HERMITIAN_TOL * max(scale, 1e-300):
        raise PreconditionError(
            f"matrix is not Hermitian: ||M - M^H|| = {herm_resid:.3e} vs ||M|| = {scale:.3e}"
        )
    sym = (m + m.conj().T) / 2.0
    w, v = np.linalg.eigh(sym)
    w = w[::-1].copy()
    v = v[:, ::-1].copy()
    # phase convention: largest-magnitude entry of each column real non-negative
    for j in range(v.shape[1]):
        idx = int(np.argmax(np.abs(v[:, j])))
        piv = v[idx, j]
        mag = abs(piv)
        if mag > 0:
            v[:, j] *= piv.conjugate() / mag
    return EigSystem(values=w, vectors=v)


def haar_unitary(n, rng):
    """Haar-distributed n x n unitary.

    QR of an i.i.d. complex Gaussian matrix with the column phases fixed so
    that diag(R) is real positive, which makes the distribution exactly Haar.
    """
    if n < 1:
        raise PreconditionError("haar_unitary needs n >= 1")
    z = (rng.gen.standard_normal((n, n)) + 1j * rng.gen.standard_normal((n, n))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    q = q * (d / np.abs(d))
    return q


def complex_gaussian(rng, variance):
    """One draw of a circularly-symmetric complex Gaussian CN(0, variance)."""
    if not (variance >= 0.0) or not math.isfinite(variance):
        raise PreconditionError(f"variance must be finite and >= 0, got {variance}")
    if variance == 0.0:
        return 0j
    s = math.sqrt(variance / 2.0)
    re, im = rng.gen.standard_normal(2)
    return complex(s * re, s * im)


def complex_gaussian_matrix(rng, variances):
    """Matrix with independent CN(0, variances[i, j]) entries.

    Zero-variance positions come out exactly zero.
    """
    variances = np.asarray(variances, dtype=float)
    if (variances < 0).any() or not np.isfinite(variances).all():
        raise PreconditionError("variances must be finite and >= 0")
    z = rng.gen.standard_normal((2,) + variances.shape)
    return (z[0] + 1j * z[1]) * np.sqrt(variances / 2.0)


def format_complex(z):
    """Render one complex entry as a+bi with 17 significant digits (round-trips float64)."""
    z = complex(z)
    return f"{z.real:.17g}{z.imag:+.17g}i"


def parse_complex(token):
    """Inverse of format_complex."""
    if not token.endswith("i"):
        raise ValueError(f"bad complex token {token!r}")
    return complex(token[:-1] + "j")


def matrix_to_lines(m):
    return [" ".join(format_complex(z) for z in row) for row in np.asarray(m)]


def matrix_from_lines(lines, rows, cols):
    if len(lines) != rows:
        raise ValueError(f"expected {rows} matrix lines, got {len(lines)}")
    out = np.empty((rows, cols), dtype=np.complex128)
    for i, line in enumerate(lines):
        toks = line.split()
        if len(toks) != cols:
            raise ValueError(f"expected {cols} entries on line {i}, got {len(toks)}")
        out[i] = [parse_complex(t) for t in toks]
    return out
