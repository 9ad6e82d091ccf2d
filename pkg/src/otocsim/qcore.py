"""Dense linear-algebra primitives for small qubit registers.

Conventions used throughout the package:

* sites are 0-based and site 0 is the leftmost (most significant) tensor
  factor, so ``embed_local(X, [0], 4)`` is ``X (x) I (x) I (x) I``;
* basis index ``k`` of an ``n``-qubit register has binary digits
  ``b_0 b_1 ... b_{n-1}`` with ``b_0`` belonging to site 0.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

HERM_TOL = 1e-10
NORM_TOL = 1e-12
PSD_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H_GATE = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
S_GATE = np.diag([1, 1j]).astype(complex)
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)

PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}


def ry(angle: float) -> np.ndarray:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(angle: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])


def dagger(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def kron_all(mats: Iterable[np.ndarray]) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def is_hermitian(m: np.ndarray, tol: float = HERM_TOL) -> bool:
    return m.shape[0] == m.shape[1] and np.max(np.abs(m - dagger(m)), initial=0.0) <= tol


def is_unitary(m: np.ndarray, tol: float = HERM_TOL) -> bool:
    if m.shape[0] != m.shape[1]:
        return False
    return np.max(np.abs(dagger(m) @ m - np.eye(m.shape[0])), initial=0.0) <= tol


def n_qubits_of(dim: int) -> int:
    n = int(round(np.log2(dim))) if dim > 0 else -1
    if n < 0 or 2**n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


# ---------------------------------------------------------------------------
# states


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized amplitude vector of an ``n``-qubit register."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        n_qubits_of(amps.size)
        norm = np.linalg.norm(amps)
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {norm!r} differs from 1")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_qubits(self) -> int:
        return n_qubits_of(self.amplitudes.size)

    @classmethod
    def basis(cls, index: int | str, n: int | None = None) -> "PureState":
        if isinstance(index, str):
            n, index = len(index), int(index, 2)
        vec = np.zeros(2**n, dtype=complex)
        vec[index] = 1.0
        return cls(vec)

    @classmethod
    def from_vector(cls, vec) -> "PureState":
        vec = np.asarray(vec, dtype=complex)
        return cls(vec / np.linalg.norm(vec))

    def to_density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))

    def tensor(self, other: "PureState") -> "PureState":
        return PureState(np.kron(self.amplitudes, other.amplitudes))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite matrix."""

    matrix: np.ndarray
    check_psd: bool = field(default=True, repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density matrix must be square")
        n_qubits_of(m.shape[0])
        if not np.all(np.isfinite(m)):
            raise ValueError("density matrix has non-finite entries")
        if not is_hermitian(m, NORM_TOL):
            raise ValueError("density matrix is not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1.0) > NORM_TOL:
            raise ValueError(f"density matrix trace {tr!r} differs from 1")
        if self.check_psd and np.linalg.eigvalsh(m)[0] < -PSD_TOL:
            raise ValueError("density matrix has negative eigenvalues")
        object.__setattr__(self, "matrix", m)

    @property
    def n_qubits(self) -> int:
        return n_qubits_of(self.matrix.shape[0])

    @classmethod
    def maximally_mixed(cls, n: int) -> "DensityMatrix":
        return cls(np.eye(2**n, dtype=complex) / 2**n)

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "DensityMatrix":
        """Symmetrize and renormalize ``m`` before validation (for round-off)."""
        m = np.asarray(m, dtype=complex)
        m = 0.5 * (m + dagger(m))
        return cls(m / np.trace(m).real)

    def tensor(self, other: "DensityMatrix") -> "DensityMatrix":
        return DensityMatrix(np.kron(self.matrix, other.matrix))

    def expect(self, op: np.ndarray) -> complex:
        return complex(np.trace(op @ self.matrix))


QuantumState = PureState | DensityMatrix


def as_density(state: QuantumState) -> DensityMatrix:
    return state.to_density() if isinstance(state, PureState) else state


def _check_sites(sites: Sequence[int], n: int) -> list[int]:
    sites = [int(s) for s in sites]
    if len(set(sites)) != len(sites):
        raise ValueError(f"duplicate site index in {sites}")
    for s in sites:
        if not 0 <= s < n:
            raise ValueError(f"site {s} out of range for {n} qubits")
    return sites


def permute_qubits(state: QuantumState, order: Sequence[int]) -> QuantumState:
    """Reorder tensor factors: new site ``k`` is old site ``order[k]``."""
    n = state.n_qubits
    order = _check_sites(order, n)
    if len(order) != n:
        raise ValueError("order must list every site once")
    if isinstance(state, PureState):
        t = state.amplitudes.reshape([2] * n).transpose(order)
        return PureState(t.reshape(-1))
    t = state.matrix.reshape([2] * (2 * n)).transpose(order + [n + k for k in order])
    return DensityMatrix(t.reshape(2**n, 2**n), check_psd=False)


# ---------------------------------------------------------------------------
# operators


def embed_local(op: np.ndarray, sites: Sequence[int], n: int) -> np.ndarray:
    """Lift a ``2^k x 2^k`` operator on ``sites`` to the full ``n``-qubit space."""
    op = np.asarray(op, dtype=complex)
    sites = _check_sites(sites, n)
    k = len(sites)
    if op.shape != (2**k, 2**k):
        raise ValueError(f"operator shape {op.shape} does not act on {k} sites")
    rest = [s for s in range(n) if s not in sites]
    full = np.kron(op, np.eye(2 ** len(rest), dtype=complex))
    # full acts on (sites..., rest...); permute back to natural order
    current = sites + rest
    perm = [current.index(s) for s in range(n)]
    t = full.reshape([2] * (2 * n)).transpose(perm + [n + p for p in perm])
    return t.reshape(2**n, 2**n)


def partial_trace(rho: DensityMatrix | np.ndarray, keep: Sequence[int]) -> DensityMatrix:
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    n = n_qubits_of(m.shape[0])
    keep = _check_sites(keep, n)
    if not keep:
        raise ValueError("keep must name at least one site")
    drop = [s for s in range(n) if s not in keep]
    t = m.reshape([2] * (2 * n)).transpose(keep + drop + [n + s for s in keep] + [n + s for s in drop])
    dk, dd = 2 ** len(keep), 2 ** len(drop)
    reduced = np.einsum("ajbj->ab", t.reshape(dk, dd, dk, dd))
    return DensityMatrix(reduced, check_psd=False)


def herm_fn(op: np.ndarray, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Apply ``f`` to the spectrum of a Hermitian operator.

    ``f`` receives the real eigenvalue array and must return an array of the
    same length (real or complex).  A real-valued ``f`` gives a Hermitian
    result; ``lambda x: np.exp(-1j * t * x)`` gives the propagator.
    """
    op = np.asarray(op, dtype=complex)
    if not is_hermitian(op, HERM_TOL):
        raise ValueError("herm_fn requires a Hermitian operator")
    evals, evecs = np.linalg.eigh(0.5 * (op + dagger(op)))
    vals = np.asarray(f(evals))
    out = (evecs * vals) @ dagger(evecs)
    if np.isrealobj(vals):
        out = 0.5 * (out + dagger(out))
    return out


def psd_power(rho: np.ndarray, power: float, floor: float = 1e-14) -> np.ndarray:
    """``rho**power`` for a PSD matrix, eigenvalues below ``floor`` set to 0."""

    def f(x):
        x = np.where(x < floor, 0.0, x)
        if power == 0:
            return np.ones_like(x)
        return np.power(x, power)

    return herm_fn(rho, f)


def sqrtm_psd(rho: np.ndarray) -> np.ndarray:
    return herm_fn(rho, lambda x: np.sqrt(np.clip(x, 0.0, None)))


def von_neumann_entropy(rho: DensityMatrix | np.ndarray) -> float:
    m = rho.matrix if isinstance(rho, DensityMatrix) else rho
    return shannon_entropy(np.linalg.eigvalsh(m))


def shannon_entropy(p) -> float:
    p = np.clip(np.asarray(p, dtype=float), 0.0, None)
    p = p[p > 1e-300]
    return float(-np.sum(p * np.log(p)))


def uhlmann_fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """``Tr sqrt(sqrt(rho) sigma sqrt(rho))``, clipped to [0, 1].

    Evaluated as the trace norm of ``sqrt(rho) sqrt(sigma)``, which is the
    same quantity but symmetric in its arguments to machine precision.
    """
    a, b = as_density(rho).matrix, as_density(sigma).matrix
    if a.shape != b.shape:
        raise ValueError("fidelity of states with different dimensions")
    svals = np.linalg.svd(sqrtm_psd(a) @ sqrtm_psd(b), compute_uv=False)
    return float(min(1.0, np.sum(svals)))


def purified_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    f = uhlmann_fidelity(rho, sigma)
    return float(np.sqrt(max(0.0, 1.0 - f * f)))


# ---------------------------------------------------------------------------
# Pauli strings


@dataclass(frozen=True)
class PauliString:
    word: str
    coefficient: complex = 1.0

    def __post_init__(self):
        if not self.word or any(c not in PAULIS for c in self.word):
            raise ValueError(f"invalid Pauli word {self.word!r}")

    @property
    def n_qubits(self) -> int:
        return len(self.word)

    def support(self) -> list[int]:
        return [i for i, c in enumerate(self.word) if c != "I"]

    def matrix(self) -> np.ndarray:
        return self.coefficient * kron_all(PAULIS[c] for c in self.word)


def pauli_sum_matrix(terms: Iterable[PauliString]) -> np.ndarray:
    terms = list(terms)
    if not terms:
        raise ValueError("empty Pauli sum")
    n = terms[0].n_qubits
    out = np.zeros((2**n, 2**n), dtype=complex)
    for t in terms:
        if t.n_qubits != n:
            raise ValueError("Pauli words of different lengths")
        out += t.matrix()
    return out


def pauli_words(n: int) -> list[str]:
    return ["".join(w) for w in itertools.product("IXYZ", repeat=n)]


def pauli_decompose(op: np.ndarray, n: int, tol: float = 0.0) -> list[PauliString]:
    """Expand ``op`` over all ``4^n`` Pauli strings.

    Coefficients are ``Tr(P^dagger op) / 2^n``.  Terms with ``|c| <= tol`` are
    dropped; the default keeps all ``4^n`` of them.
    """
    op = np.asarray(op, dtype=complex)
    if op.shape != (2**n, 2**n):
        raise ValueError(f"operator shape {op.shape} is not {2**n}x{2**n}")
    # Tr(P op) factorizes site by site: contract op, viewed as a 2n-index
    # tensor, with one Pauli per site pair.
    paulis = np.stack([PAULIS[c] for c in "IXYZ"])  # (4, 2, 2)
    t = op.reshape([2] * (2 * n))
    for remaining in range(n, 0, -1):
        # leading row axis is 0, its column partner sits at `remaining`
        t = np.tensordot(paulis, t, axes=([2, 1], [0, remaining]))
        t = np.moveaxis(t, 0, -1)
    coeffs = t.reshape(-1) / 2**n
    # after n rounds the Pauli axes are in site order
    out = []
    for word, c in zip(pauli_words(n), coeffs):
        if abs(c) > tol or tol == 0.0:
            out.append(PauliString(word, complex(c)))
    return out


def reduce_support(op: np.ndarray, n: int, tol: float = 1e-12) -> tuple[list[int], np.ndarray]:
    """Smallest site set on which ``op`` acts non-trivially, and the reduced matrix.

    ``embed_local(small, sites, n)`` reproduces ``op``.
    """
    terms = [p for p in pauli_decompose(op, n) if abs(p.coefficient) > tol]
    sites = sorted({s for p in terms for s in p.support()}) or [0]
    small = np.zeros((2 ** len(sites),) * 2, dtype=complex)
    for p in terms:
        small += p.coefficient * kron_all(PAULIS[p.word[s]] for s in sites)
    return sites, small
