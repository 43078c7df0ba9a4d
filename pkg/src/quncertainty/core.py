"""Dense density-matrix primitives in a fixed computational basis.

States, pure vectors and operators are plain numpy arrays. The ``as_*``
helpers validate them and raise :class:`StructureError` naming the violated
bound; everything else assumes validated input.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "StructureError",
    "tol_struct",
    "TOL_RANK",
    "as_hermitian",
    "as_density_matrix",
    "as_pure_state",
    "probability_vector",
    "projector",
    "basis_projector",
    "eigendecompose",
    "matrix_sqrt",
    "fidelity",
    "dephase",
    "partial_trace",
    "purify",
    "sample_random",
    "load_state",
    "dump_state",
    "state_from_dict",
    "state_to_dict",
    "PureStateEnsemble",
]

_DEFAULT_TOL_STRUCT = 1e-9
TOL_RANK = 1e-10
_ROUNDOFF_EIG = 1e-14


class StructureError(ValueError):
    """An input violates a structural invariant (Hermiticity, trace, ...)."""


def tol_struct():
    """Structural tolerance; ``UNCERT_TOL`` in the environment overrides it."""
    raw = os.environ.get("UNCERT_TOL")
    if raw is None:
        return _DEFAULT_TOL_STRUCT
    try:
        value = float(raw)
    except ValueError:
        raise StructureError(f"UNCERT_TOL={raw!r} is not a number")
    if not value > 0:
        raise StructureError(f"UNCERT_TOL must be positive, got {value}")
    return value


def _square(m, name="matrix"):
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise StructureError(f"{name} must be a non-empty square matrix, got shape {m.shape}")
    return m


def as_hermitian(m, tol=None):
    tol = tol_struct() if tol is None else tol
    m = _square(m)
    asym = float(np.max(np.abs(m - m.conj().T)))
    if asym > tol:
        raise StructureError(f"matrix is not Hermitian: max |m - m^dag| = {asym:.3e} > {tol:.1e}")
    return (m + m.conj().T) / 2


def as_density_matrix(m, tol=None):
    """Validate ``m`` as a density matrix and return a Hermitian copy."""
    tol = tol_struct() if tol is None else tol
    rho = as_hermitian(m, tol)
    trace_err = abs(np.trace(rho).real - 1.0)
    if trace_err > tol:
        raise StructureError(f"trace deviates from 1 by {trace_err:.3e} > {tol:.1e}")
    lmin = float(np.linalg.eigvalsh(rho)[0])
    if lmin < -tol:
        raise StructureError(f"matrix is not positive semidefinite: min eigenvalue {lmin:.3e} < -{tol:.1e}")
    return rho


def as_pure_state(psi, tol=None):
    tol = tol_struct() if tol is None else tol
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1 or psi.size == 0:
        raise StructureError(f"pure state must be a non-empty vector, got shape {psi.shape}")
    norm_err = abs(np.vdot(psi, psi).real - 1.0)
    if norm_err > tol:
        raise StructureError(f"state norm deviates from 1 by {norm_err:.3e} > {tol:.1e}")
    return psi


def probability_vector(x, tol=None):
    """Validate a probability vector; entries in ``[-tol, 0)`` are clamped to 0."""
    tol = tol_struct() if tol is None else tol
    p = np.asarray(x, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise StructureError(f"probability vector must be a non-empty 1-d array, got shape {p.shape}")
    if np.any(p < -tol):
        raise StructureError(f"negative probability {p.min():.3e} < -{tol:.1e}")
    total_err = abs(p.sum() - 1.0)
    if total_err > tol:
        raise StructureError(f"probabilities sum to 1 + {p.sum() - 1.0:.3e}, tolerance {tol:.1e}")
    return np.clip(p, 0.0, None)


def projector(psi):
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def basis_projector(i, d):
    """The certain state ``|i><i|``."""
    out = np.zeros((d, d), dtype=complex)
    out[i, i] = 1.0
    return out


def _fix_phases(vecs):
    # first component with modulus above 1e-12 made real positive
    vecs = vecs.copy()
    for k in range(vecs.shape[1]):
        col = vecs[:, k]
        idx = int(np.argmax(np.abs(col) > 1e-12))
        phase = col[idx] / abs(col[idx])
        vecs[:, k] = col / phase
    return vecs


def eigendecompose(m, tol=None):
    """Eigenvalues in descending order and a unitary of eigenvectors.

    Each eigenvector is rotated so its first non-negligible component is real
    and positive, which makes decompositions reproducible across runs.
    """
    m = as_hermitian(m, tol)
    vals, vecs = np.linalg.eigh(m)
    order = np.argsort(-vals, kind="stable")
    return vals[order], _fix_phases(vecs[:, order])


def matrix_sqrt(rho, tol=None):
    """Positive square root of a density matrix.

    Eigenvalues in ``[-tol, 1e-14]`` are treated as roundoff and clamped to zero.
    """
    tol = tol_struct() if tol is None else tol
    rho = as_hermitian(rho, tol)
    vals, vecs = np.linalg.eigh(rho)
    if vals[0] < -tol:
        raise StructureError(f"matrix is not positive semidefinite: min eigenvalue {vals[0]:.3e}")
    # eigenvalues at roundoff level are zeroed: their square roots (~1e-8)
    # would otherwise leak into diagonal-sensitive quantities
    root = np.sqrt(np.where(vals > _ROUNDOFF_EIG, vals, 0.0))
    return (vecs * root) @ vecs.conj().T


def fidelity(rho, sigma):
    """Uhlmann-Jozsa fidelity ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))**2``."""
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rho.shape != sigma.shape:
        raise StructureError(f"dimension mismatch: {rho.shape} vs {sigma.shape}")
    # trace norm of sqrt(rho) sqrt(sigma); avoids square roots of roundoff
    # eigenvalues when either state is rank deficient
    sv = np.linalg.svd(matrix_sqrt(rho) @ matrix_sqrt(sigma), compute_uv=False)
    return min(float(np.sum(sv)) ** 2, 1.0)


def dephase(rho):
    """Complete dephasing in the reference basis: keep only the diagonal."""
    rho = np.asarray(rho, dtype=complex)
    return np.diag(np.diag(rho))


def partial_trace(rho_ab, dims, keep="A"):
    """Reduced state of a bipartite ``rho_ab`` on ``dims = (dA, dB)``.

    ``keep`` is ``"A"`` or ``"B"``.
    """
    rho_ab = _square(rho_ab, "bipartite state")
    d_a, d_b = (int(x) for x in dims)
    if d_a * d_b != rho_ab.shape[0]:
        raise StructureError(f"dims {d_a}x{d_b} do not factor a {rho_ab.shape[0]}-dimensional state")
    t = rho_ab.reshape(d_a, d_b, d_a, d_b)
    if keep == "A":
        return np.einsum("ijkj->ik", t)
    if keep == "B":
        return np.einsum("ijil->jl", t)
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


def purify(rho):
    """Purification ``sum_k sqrt(lam_k) |e_k> (x) |k>`` on a d x rank space.

    Returns ``(psi, rank)``; tracing out the second factor of dimension
    ``rank`` gives back ``rho``.
    """
    vals, vecs = eigendecompose(as_density_matrix(rho))
    keep = vals > TOL_RANK
    rank = int(keep.sum())
    vecs = vecs[:, keep]
    root = np.sqrt(vals[keep])
    d = vecs.shape[0]
    psi = np.zeros((d, rank), dtype=complex)
    for k in range(rank):
        psi[:, k] = root[k] * vecs[:, k]
    psi = psi.reshape(d * rank)
    return psi / np.linalg.norm(psi), rank


def _ginibre(rng, rows, cols):
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def _haar_unitary(rng, d):
    q, r = np.linalg.qr(_ginibre(rng, d, d))
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def sample_random(kind, dim, seed=None, rank=None):
    """Draw a random object for property tests.

    ``kind`` is one of ``"haar_pure"`` (unit vector), ``"ginibre_mixed"``
    (full-rank density matrix), ``"haar_unitary"`` or ``"rank_limited"``
    (density matrix of the given ``rank``). ``seed`` may be an int or a
    ``numpy.random.Generator``.
    """
    dim = int(dim)
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if kind == "haar_pure":
        v = _ginibre(rng, dim, 1)[:, 0]
        return v / np.linalg.norm(v)
    if kind == "haar_unitary":
        return _haar_unitary(rng, dim)
    if kind == "ginibre_mixed":
        rank = dim
    elif kind == "rank_limited":
        if rank is None or not 1 <= rank <= dim:
            raise ValueError(f"rank must be in [1, {dim}], got {rank}")
    else:
        raise ValueError(f"unknown sample kind {kind!r}")
    g = _ginibre(rng, dim, rank)
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2
    return rho / np.trace(rho).real


def load_state(path):
    """Read a state file; returns a density matrix (pure states are lifted)."""
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise StructureError(f"{path}: not valid JSON ({exc})") from None
    return state_from_dict(obj)


def state_from_dict(obj):
    try:
        d = int(obj["dim"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise StructureError(f"malformed state object: {exc}") from None
    if re.shape != im.shape:
        raise StructureError(f"re/im shape mismatch: {re.shape} vs {im.shape}")
    m = re + 1j * im
    if m.ndim == 1:
        if m.shape != (d,):
            raise StructureError(f"pure state has {m.size} amplitudes, expected dim={d}")
        return projector(as_pure_state(m))
    if m.shape != (d, d):
        raise StructureError(f"matrix shape {m.shape} does not match dim={d}")
    return as_density_matrix(m)


def state_to_dict(m):
    m = np.asarray(m, dtype=complex)
    return {"dim": int(m.shape[0]), "re": m.real.tolist(), "im": m.imag.tolist()}


def dump_state(m, path):
    Path(path).write_text(json.dumps(state_to_dict(m)))


@dataclass(frozen=True)
class PureStateEnsemble:
    """Weighted pure states ``{p_k, |psi_k>}``; row ``k`` of ``states`` is ``psi_k``."""

    weights: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        s = np.asarray(self.states, dtype=complex)
        if s.ndim != 2 or w.shape != (s.shape[0],):
            raise StructureError(f"{w.size} weights for states of shape {s.shape}")
        if abs(w.sum() - 1.0) > 1e-9:
            raise StructureError(f"ensemble weights sum to {w.sum():.12f}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "states", s)

    @property
    def dim(self):
        return self.states.shape[1]

    def __len__(self):
        return self.weights.size

    def mixture(self):
        return np.einsum("k,ki,kj->ij", self.weights, self.states, self.states.conj())

    def to_dict(self):
        return {
            "dim": self.dim,
            "weights": self.weights.tolist(),
            "states": [{"re": s.real.tolist(), "im": s.imag.tolist()} for s in self.states],
        }
