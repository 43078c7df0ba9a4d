"""Kraus channels, certainty predicates and constant-diagonal constructions."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .core import (
    PureStateEnsemble,
    StructureError,
    basis_projector,
    projector,
    sample_random,
    state_to_dict,
    tol_struct,
)
from .measures import builtin_functions, uncertainty

__all__ = [
    "KrausChannel",
    "ChannelVerdict",
    "apply",
    "compose",
    "unitary_channel",
    "permutation_channel",
    "dephasing_channel",
    "is_certain_state",
    "is_certain_operation",
    "is_uncertainty_preserving",
    "uniform_diagonal_twirl",
    "max_coherent_decomposition_of_uniform",
    "constant_diagonal_unitary",
    "ConstantDiagonal",
    "load_kraus",
    "sample_certain_channel",
    "sample_preserving_channel",
    "sample_random_channel",
]


@dataclass(frozen=True)
class KrausChannel:
    """``rho -> sum_l K_l rho K_l^dag`` with ``sum_l K_l^dag K_l = I``."""

    kraus: tuple
    tol: float | None = None

    def __post_init__(self):
        ops = [np.asarray(k, dtype=complex) for k in self.kraus]
        if not ops:
            raise StructureError("a channel needs at least one Kraus operator")
        d = ops[0].shape[0]
        for k, op in enumerate(ops):
            if op.shape != (d, d):
                raise StructureError(f"Kraus operator {k} has shape {op.shape}, expected {(d, d)}")
        tol = tol_struct() if self.tol is None else self.tol
        residual = self.completeness_residual(ops)
        if residual > tol:
            raise StructureError(f"completeness violated: max |sum K^dag K - I| = {residual:.3e} > {tol:.1e}")
        object.__setattr__(self, "kraus", tuple(ops))

    @staticmethod
    def completeness_residual(ops):
        total = sum(op.conj().T @ op for op in ops)
        return float(np.max(np.abs(total - np.eye(total.shape[0]))))

    @property
    def dim(self):
        return self.kraus[0].shape[0]

    def __call__(self, rho):
        return apply(self, rho)

    def to_dict(self):
        return {
            "dim": self.dim,
            "kraus": [{"re": k.real.tolist(), "im": k.imag.tolist()} for k in self.kraus],
        }

    @classmethod
    def from_dict(cls, obj, tol=None):
        try:
            d = int(obj["dim"])
            ops = []
            for entry in obj["kraus"]:
                re = np.asarray(entry["re"], dtype=float)
                im = np.asarray(entry.get("im", np.zeros_like(re)), dtype=float)
                ops.append(re + 1j * im)
        except (KeyError, TypeError, ValueError) as exc:
            raise StructureError(f"malformed Kraus object: {exc}") from None
        for k, op in enumerate(ops):
            if op.shape != (d, d):
                raise StructureError(f"Kraus operator {k} has shape {op.shape}, expected ({d}, {d})")
        return cls(tuple(ops), tol=tol)


def load_kraus(path, tol=None):
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise StructureError(f"{path}: not valid JSON ({exc})") from None
    return KrausChannel.from_dict(obj, tol=tol)


def apply(channel, rho):
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (channel.dim, channel.dim):
        raise StructureError(f"state of shape {rho.shape} for a {channel.dim}-dimensional channel")
    out = sum(k @ rho @ k.conj().T for k in channel.kraus)
    return (out + out.conj().T) / 2


def compose(second, first):
    """The channel ``second o first``."""
    return KrausChannel(tuple(b @ a for b in second.kraus for a in first.kraus), tol=1e-8)


def unitary_channel(u):
    return KrausChannel((np.asarray(u, dtype=complex),))


def permutation_channel(perm):
    """Channel of ``P_pi = sum_i |pi(i)><i|``."""
    d = len(perm)
    p = np.zeros((d, d), dtype=complex)
    p[list(perm), np.arange(d)] = 1.0
    return unitary_channel(p)


def dephasing_channel(d):
    return KrausChannel(tuple(basis_projector(i, d) for i in range(d)))


def is_certain_state(rho, tol=1e-8):
    """Top eigenvalue >= 1 - tol with an eigenvector that is a basis vector up to phase.

    Returns the basis index, or ``None`` if ``rho`` is not certain.
    """
    vals, vecs = np.linalg.eigh(np.asarray(rho, dtype=complex))
    if vals[-1] < 1 - tol:
        return None
    top = np.abs(vecs[:, -1]) ** 2
    j = int(np.argmax(top))
    return j if top[j] >= 1 - tol else None


@dataclass
class ChannelVerdict:
    is_certain: bool
    is_uncertainty_preserving: bool
    structure: dict | None = None
    counterexample: np.ndarray | None = None
    witness: dict | None = None
    checks: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.checks.get("verdict", self.is_certain)

    def to_dict(self):
        out = {
            "is_certain": self.is_certain,
            "is_uncertainty_preserving": self.is_uncertainty_preserving,
            "checks": self.checks,
            "structure": self.structure,
            "counterexample": None if self.counterexample is None else state_to_dict(self.counterexample),
            "witness": self.witness,
        }
        if self.witness and "state" in self.witness:
            out["witness"] = dict(self.witness, state=state_to_dict(self.witness["state"]))
        return out


def _uncertainty_witness(channel, rng, n_random=20):
    """State and measure maximising ``|U(channel(rho)) - U(rho)|`` over a probe set."""
    d = channel.dim
    probes = [basis_projector(i, d) for i in range(d)]
    for i in range(d):
        for j in range(i + 1, d):
            v = np.zeros(d, dtype=complex)
            v[[i, j]] = 1 / np.sqrt(2)
            probes.append(projector(v))
            probes.append((basis_projector(i, d) + basis_projector(j, d)) / 2)
    probes += [sample_random("ginibre_mixed", d, rng) for _ in range(n_random)]
    best = {"delta": -1.0}
    for rho in probes:
        out = apply(channel, rho)
        for f in builtin_functions():
            delta = abs(uncertainty(f, out) - uncertainty(f, rho))
            if delta > best["delta"]:
                best = {"delta": delta, "measure": f.name, "state": rho}
    return best


def is_certain_operation(channel, tol=1e-8):
    """Check that every certain state is mapped to a certain state.

    On success the structure ``K_l = sum_i sqrt(p_il) e^{i theta_il} |g(i)><i|``
    is extracted and its two constraints are verified. On failure the offending
    certain state is returned as ``counterexample``.
    """
    d = channel.dim
    g = []
    for i in range(d):
        j = is_certain_state(apply(channel, basis_projector(i, d)), tol)
        if j is None:
            return ChannelVerdict(
                False, False, counterexample=basis_projector(i, d), checks={"verdict": False}
            )
        g.append(j)

    ops = np.stack(channel.kraus)
    cols = ops[:, g, np.arange(d)]  # cols[l, i] = <g(i)|K_l|i>
    p = np.abs(cols) ** 2
    theta = np.where(p > tol, np.angle(cols), 0.0)
    amp = np.sqrt(p) * np.exp(1j * theta)
    weight_residual = float(np.max(np.abs(p.sum(axis=0) - 1.0)))
    same_image = np.equal.outer(g, g).astype(float)
    cross = (amp.conj().T @ amp) * same_image
    np.fill_diagonal(cross, 0.0)
    cross_residual = float(np.max(np.abs(cross)))
    rebuilt = np.zeros_like(ops)
    rebuilt[:, g, np.arange(d)] = amp
    rebuild_residual = float(np.max(np.abs(rebuilt - ops)))
    ok = max(weight_residual, cross_residual, rebuild_residual) <= max(tol, 1e-8)
    injective = len(set(g)) == d
    structure = {"g": g, "p": p.T.tolist(), "theta": theta.T.tolist()}
    checks = {
        "verdict": ok,
        "weight_residual": weight_residual,
        "cross_residual": cross_residual,
        "rebuild_residual": rebuild_residual,
    }
    return ChannelVerdict(ok, ok and injective, structure=structure, checks=checks)


def is_uncertainty_preserving(channel, tol=1e-8, seed=0, n_states=20):
    """Check the ``K_l = D_l P_pi`` form with ``sum_l D_l^dag D_l = I``.

    A positive verdict is confirmed by checking ``U(channel(rho)) == U(rho)``
    for every built-in measure on ``n_states`` random states. A negative
    verdict carries the probe state with the largest uncertainty change.
    """
    d = channel.dim
    rng = np.random.default_rng(seed)
    certain = is_certain_operation(channel, tol)
    ops = np.stack(channel.kraus)
    support = np.max(np.abs(ops), axis=0) > tol
    rows_per_col = support.sum(axis=0)
    perm = [int(np.argmax(support[:, i])) for i in range(d)]
    structural = bool(np.all(rows_per_col == 1)) and sorted(perm) == list(range(d))

    checks = {"structural": structural}
    structure = None
    if structural:
        diag = ops[:, perm, np.arange(d)]  # diag[l, i] = (D_l)_{pi(i), pi(i)}
        residual = float(np.max(np.abs(np.sum(np.abs(diag) ** 2, axis=0) - 1.0)))
        checks["diagonal_completeness_residual"] = residual
        structural = residual <= max(tol, 1e-8)
        structure = {
            "perm": perm,
            "D_re": [np.real(diag[l]).tolist() for l in range(len(ops))],
            "D_im": [np.imag(diag[l]).tolist() for l in range(len(ops))],
        }

    if structural:
        worst = 0.0
        for _ in range(n_states):
            rho = sample_random("ginibre_mixed", d, rng)
            out = apply(channel, rho)
            for f in builtin_functions():
                worst = max(worst, abs(uncertainty(f, out) - uncertainty(f, rho)))
        checks["max_uncertainty_change"] = worst
        ok = worst <= 1e-8
        checks["verdict"] = ok
        return ChannelVerdict(certain.is_certain, ok, structure=structure, checks=checks)

    checks["verdict"] = False
    witness = _uncertainty_witness(channel, rng)
    return ChannelVerdict(
        certain.is_certain, False, structure=certain.structure,
        counterexample=certain.counterexample, witness=witness, checks=checks,
    )


def _cyclic_shift(d):
    # Q = sum_i |i><i+1 mod d|
    q = np.zeros((d, d), dtype=complex)
    q[np.arange(d), (np.arange(d) + 1) % d] = 1.0
    return q


def uniform_diagonal_twirl(rho):
    """Average of ``Q^t rho Q^t^dag`` over the d cyclic shifts ``Q^t``."""
    rho = np.asarray(rho, dtype=complex)
    d = rho.shape[0]
    q = _cyclic_shift(d)
    out = np.zeros_like(rho)
    qt = np.eye(d, dtype=complex)
    for _ in range(d):
        qt = q @ qt
        out += qt @ rho @ qt.conj().T
    return out / d


def max_coherent_decomposition_of_uniform(d):
    """``I/d`` as the equal mixture of the d Fourier (maximally coherent) states."""
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    j, k = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    states = np.exp(2j * np.pi * j * k / d).T / np.sqrt(d)
    return PureStateEnsemble(np.full(d, 1.0 / d), states)


class ConstantDiagonal(NamedTuple):
    unitary: np.ndarray
    conjugated: np.ndarray
    rotations: int


def constant_diagonal_unitary(rho, tol=1e-12):
    """Unitary ``U`` such that ``U^dag rho U`` has every diagonal entry ``1/d``.

    Built from at most ``d - 1`` Givens rotations. Each one pairs the largest
    diagonal entry ``a`` with the smallest ``b`` and rotates so the first
    becomes exactly ``1/d``; the phase is chosen so the off-diagonal entry
    does not contribute.
    """
    m = np.asarray(rho, dtype=complex).copy()
    d = m.shape[0]
    target = 1.0 / d
    u = np.eye(d, dtype=complex)
    done = np.zeros(d, dtype=bool)
    rotations = 0
    while True:
        diag = np.real(np.diag(m))
        done |= np.abs(diag - target) <= tol
        if done.all() or rotations >= d - 1:
            break
        free = np.flatnonzero(~done)
        i = free[np.argmax(diag[free])]
        j = free[np.argmin(diag[free])]
        a, b = diag[i], diag[j]
        c2 = (target - b) / (a - b)
        c, s = np.sqrt(c2), np.sqrt(1.0 - c2)
        phi = np.pi / 2 - np.angle(m[i, j]) if abs(m[i, j]) > 0 else 0.0
        g = np.eye(d, dtype=complex)
        g[i, i] = c
        g[j, i] = s * np.exp(1j * phi)
        g[i, j] = -s * np.exp(-1j * phi)
        g[j, j] = c
        m = g.conj().T @ m @ g
        u = u @ g
        done[i] = True
        rotations += 1
    return ConstantDiagonal(u, (m + m.conj().T) / 2, rotations)


def sample_certain_channel(d, seed=None, n_kraus=None):
    """Random channel of the certain-operation form.

    Picks a random map ``g``; inside each preimage class of ``g`` the columns
    ``(sqrt(p_il) e^{i theta_il})_l`` are orthonormal, which is exactly the
    completeness condition.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    g = rng.integers(0, d, size=d)
    classes = [np.flatnonzero(g == v) for v in range(d)]
    biggest = max(len(c) for c in classes)
    n_kraus = n_kraus or int(rng.integers(biggest, biggest + 3))
    amp = np.zeros((n_kraus, d), dtype=complex)
    for members in classes:
        if len(members):
            iso = sample_random("haar_unitary", n_kraus, rng)[:, : len(members)]
            amp[:, members] = iso
    ops = np.zeros((n_kraus, d, d), dtype=complex)
    ops[:, g, np.arange(d)] = amp
    return KrausChannel(tuple(ops), tol=1e-10), g


def sample_preserving_channel(d, seed=None, n_kraus=None):
    """Random channel with ``K_l = D_l P_pi``."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    perm = rng.permutation(d)
    n_kraus = n_kraus or int(rng.integers(1, 4))
    z = rng.standard_normal((n_kraus, d)) + 1j * rng.standard_normal((n_kraus, d))
    z /= np.linalg.norm(z, axis=0)
    ops = np.zeros((n_kraus, d, d), dtype=complex)
    ops[:, perm, np.arange(d)] = z
    return KrausChannel(tuple(ops), tol=1e-10), perm


def sample_random_channel(d, seed=None, n_kraus=2):
    """Generic channel from a Haar isometry; almost surely not certain."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    iso = sample_random("haar_unitary", d * n_kraus, rng)[:, :d]
    return KrausChannel(tuple(iso.reshape(n_kraus, d, d)), tol=1e-10)
