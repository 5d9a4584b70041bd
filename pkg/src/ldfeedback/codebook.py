"""Quantized feedback codebooks with the N1 x N2 eigen-split.

A B-bit codebook factors its 2^B covariance codewords as Q = U_i L_j U_i^H:
N1 candidate unitaries times N2 candidate diagonal power allocations. Two
receiver selection rules are provided (instantaneous mutual information and
received SNR), plus the gap quantities against the perfect-CSI benchmark.
"""

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError
from .infotheory import perfect_csi_mi
from .matkit import haar_unitary, hermitian_eig, matrix_from_lines, matrix_to_lines

UNITARY_TOL = 1e-12
TRACE_TOL = 1e-9


@dataclass
class QuantizedCodebook:
    b: int
    n1: int
    n2: int
    unitaries: list
    lambdas: list
    k: int
    nc: int
    nt: int

    def __post_init__(self):
        if self.n1 < 1 or self.n2 < 1:
            raise PreconditionError("codebook needs n1, n2 >= 1")
        if self.n1 * self.n2 != 2**self.b:
            raise PreconditionError(f"n1*n2 = {self.n1 * self.n2} must equal 2^B = {2 ** self.b}")
        if len(self.unitaries) != self.n1 or len(self.lambdas) != self.n2:
            raise PreconditionError("unitary/diagonal counts must match the split")
        self.unitaries = [np.asarray(u, dtype=np.complex128) for u in self.unitaries]
        self.lambdas = [np.asarray(l, dtype=float).reshape(-1) for l in self.lambdas]
        budget = self.nt * self.nc / self.k
        for u in self.unitaries:
            if u.shape != (self.nt, self.nt):
                raise PreconditionError("codebook unitaries must be Nt x Nt")
            resid = np.linalg.norm(u.conj().T @ u - np.eye(self.nt))
            if resid > UNITARY_TOL:
                raise PreconditionError(f"codebook unitary not unitary (residual {resid:.3e})")
        for lam in self.lambdas:
            if lam.size != self.nt:
                raise PreconditionError("power diagonals must have length Nt")
            if (lam < 0).any():
                raise PreconditionError("power diagonals must be non-negative")
            if lam.sum() > budget + TRACE_TOL:
                raise PreconditionError(
                    f"Tr(lambda) = {lam.sum()!r} exceeds the Nt*Nc/K = {budget!r} budget"
                )

    def lambda_matrix(self):
        """All diagonals stacked as an (N2, Nt) array."""
        return np.stack(self.lambdas)

    def alpha_matrix(self):
        """Normalized power weights alpha[j, m] = lambda_j[m] * K / (Nt*Nc)."""
        return self.lambda_matrix() * (self.k / (self.nt * self.nc))

    def covariance(self, i, j):
        u = self.unitaries[i]
        return (u * self.lambdas[j]) @ u.conj().T


@dataclass
class Selection:
    """Feedback decision: codeword indices and the selected objective value."""

    i: int
    j: int
    value: float


def rvq_codebook(b, n1, n2, lambda_spec, k, nc, nt, rng):
    """Codebook with Haar i.i.d. unitaries and the given power allocations.

    lambda_spec is either a sequence of mode indices (one per diagonal; mode m
    becomes the full-budget rank-one allocation (Nt*Nc/K) * e_m) or a sequence
    of explicit length-Nt diagonals.
    """
    if n1 * n2 != 2**b:
        raise PreconditionError(f"n1*n2 = {n1 * n2} must equal 2^B = {2 ** b}")
    if len(lambda_spec) != n2:
        raise PreconditionError(f"need {n2} power allocations, got {len(lambda_spec)}")
    budget = nt * nc / k
    lambdas = []
    for spec in lambda_spec:
        if isinstance(spec, (int, np.integer)):
            mode = int(spec)
            if not 0 <= mode < nt:
                raise PreconditionError(f"mode index {mode} out of range for Nt = {nt}")
            lam = np.zeros(nt)
            lam[mode] = budget
        else:
            lam = np.asarray(spec, dtype=float).reshape(-1)
        lambdas.append(lam)
    unitaries = [haar_unitary(nt, rng) for _ in range(n1)]
    return QuantizedCodebook(b=b, n1=n1, n2=n2, unitaries=unitaries, lambdas=lambdas, k=k, nc=nc, nt=nt)


def random_rank_two_lambdas(count, n2, nt, nc, k, rng):
    """count random sets of N2 rank-two diagonals.

    Each diagonal excites a uniformly chosen pair of modes with a uniform
    power split (w, 1-w) scaled to the full Nt*Nc/K budget.
    """
    if count < 1 or n2 < 1:
        raise PreconditionError("counts must be >= 1")
    if nt < 2:
        raise PreconditionError("rank-two allocations need Nt >= 2")
    budget = nt * nc / k
    pairs = list(itertools.combinations(range(nt), 2))
    sets = []
    for _ in range(count):
        diags = []
        for _ in range(n2):
            p0, p1 = pairs[int(rng.gen.integers(len(pairs)))]
            w = float(rng.gen.uniform())
            lam = np.zeros(nt)
            lam[p0] = w * budget
            lam[p1] = (1.0 - w) * budget
            diags.append(lam)
        sets.append(diags)
    return sets


def s_matrix(realization, u):
    """Per-mode received powers s_m = ||H u_m||^2 for the columns of a unitary.

    Equals the squared column norms of Lh^(1/2) Uh^H U where H^H H = Uh Lh Uh^H;
    they sum to Tr(H^H H) and never exceed its largest eigenvalue.
    """
    u = np.asarray(u, dtype=np.complex128)
    h = realization.h
    if u.shape != (h.shape[1], h.shape[1]):
        raise PreconditionError("u must be Nt x Nt")
    resid = np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0]))
    if resid > UNITARY_TOL:
        raise PreconditionError(f"u is not unitary (residual {resid:.3e})")
    hu = h @ u
    return (np.abs(hu) ** 2).sum(axis=0)


def _objective_args(cb, realization):
    """Received-power arguments Tr(H Q^{i,j} H^H) for every codeword, shape (N1, N2)."""
    h = realization.h
    if h.shape[1] != cb.nt:
        raise PreconditionError(f"channel has {h.shape[1]} tx antennas, codebook has {cb.nt}")
    smat = np.stack([(np.abs(h @ u) ** 2).sum(axis=0) for u in cb.unitaries])  # (N1, Nt)
    return smat @ cb.lambda_matrix().T, smat


def select_mi(cb, realization, rho, evaluator):
    """Receiver rule: argmax over (i, j) of K * I(rho/Nt * Tr(H Q^{i,j} H^H)).

    Ties break toward the smallest i, then the smallest j.
    """
    traces, _ = _objective_args(cb, realization)
    values = cb.k * evaluator.mi(np.maximum(traces, 0.0) * rho / cb.nt)
    flat = int(np.argmax(values))
    i, j = divmod(flat, cb.n2)
    return Selection(i=i, j=j, value=float(values[i, j]))


def select_snr(cb, realization):
    """Receiver rule: argmax over (i, j) of sum_m alpha[j, m] * s[i, m]."""
    _, smat = _objective_args(cb, realization)
    obj = smat @ cb.alpha_matrix().T  # (N1, N2)
    flat = int(np.argmax(obj))
    i, j = divmod(flat, cb.n2)
    return Selection(i=i, j=j, value=float(obj[i, j]))


def delta_snr(cb, realization, rho):
    """Per-symbol received-SNR gap rho*Nc/K * (lmax - selected weighted power).

    Uses the snr-rule selection; non-negative because lmax dominates every
    convex combination of the per-mode powers.
    """
    sel = select_snr(cb, realization)
    lam_max = hermitian_eig(realization.h.conj().T @ realization.h).values[0]
    return rho * cb.nc / cb.k * (lam_max - sel.value)


def delta_mi(cb, realization, rho, evaluator):
    """Per-symbol mutual-information gap against the perfect-CSI benchmark.

    Uses the mi-rule selection. Normalizing the block gap by K puts this on
    the same per-symbol scale as delta_snr, which is what makes the bound
    delta_mi <= delta_snr hold for every realization (the MMSE never
    exceeds the unit prior variance).
    """
    best = perfect_csi_mi(realization, rho, cb.k, cb.nc, evaluator)
    return (best - select_mi(cb, realization, rho, evaluator).value) / cb.k


def to_text(cb):
    """Header 'b n1 n2 nt nc k', N1 unitary blocks of Nt lines, then N2 diagonal lines."""
    lines = [f"{cb.b} {cb.n1} {cb.n2} {cb.nt} {cb.nc} {cb.k}"]
    for u in cb.unitaries:
        lines.extend(matrix_to_lines(u))
    for lam in cb.lambdas:
        lines.extend(matrix_to_lines(lam[None, :].astype(complex)))
    return "\n".join(lines) + "\n"


def from_text(text):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty codebook text")
    try:
        b, n1, n2, nt, nc, k = (int(t) for t in lines[0].split())
    except ValueError as exc:
        raise ValueError(f"bad header line {lines[0]!r}") from exc
    body = lines[1:]
    if len(body) != n1 * nt + n2:
        raise ValueError(f"expected {n1 * nt + n2} body lines, got {len(body)}")
    unitaries = [matrix_from_lines(body[i * nt : (i + 1) * nt], nt, nt) for i in range(n1)]
    lambdas = []
    for j in range(n2):
        row = matrix_from_lines([body[n1 * nt + j]], 1, nt)[0]
        if np.abs(row.imag).max(initial=0.0) != 0.0:
            raise ValueError("power diagonals must be real")
        lambdas.append(row.real)
    return QuantizedCodebook(b=b, n1=n1, n2=n2, unitaries=unitaries, lambdas=lambdas, k=k, nc=nc, nt=nt)
