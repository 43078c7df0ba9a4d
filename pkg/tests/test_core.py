import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quncertainty.core import (
    StructureError,
    as_density_matrix,
    basis_projector,
    dephase,
    eigendecompose,
    fidelity,
    load_state,
    matrix_sqrt,
    partial_trace,
    probability_vector,
    projector,
    purify,
    sample_random,
    state_to_dict,
)

from conftest import PLUS, random_states


def test_eigendecompose_identity():
    vals, vecs = eigendecompose(np.eye(2))
    np.testing.assert_allclose(vals, [1, 1])
    np.testing.assert_allclose(vecs @ vecs.conj().T, np.eye(2), atol=1e-12)


def test_eigendecompose_diagonal_and_projector():
    vals, vecs = eigendecompose(np.diag([0.3, 0.7]))
    np.testing.assert_allclose(vals, [0.7, 0.3])
    np.testing.assert_allclose(np.abs(vecs), [[0, 1], [1, 0]], atol=1e-12)
    vals, _ = eigendecompose(PLUS)
    np.testing.assert_allclose(vals, [1, 0], atol=1e-12)


def test_eigendecompose_phase_convention_and_reconstruction(rng):
    for d in (2, 3, 5):
        m = sample_random("ginibre_mixed", d, rng)
        vals, vecs = eigendecompose(m)
        assert np.all(np.diff(vals) <= 0)
        np.testing.assert_allclose((vecs * vals) @ vecs.conj().T, m, atol=1e-10)
        first = vecs[0]
        assert np.all(np.abs(first.imag) < 1e-12) and np.all(first.real > 0)


def test_eigendecompose_rejects_non_hermitian():
    with pytest.raises(StructureError, match="not Hermitian"):
        eigendecompose(np.array([[0, 1], [0, 0]]))


def test_matrix_sqrt_examples(rng):
    np.testing.assert_allclose(matrix_sqrt(np.eye(2) / 2), np.eye(2) / np.sqrt(2), atol=1e-12)
    np.testing.assert_allclose(matrix_sqrt(basis_projector(0, 2)), basis_projector(0, 2), atol=1e-12)
    rho = sample_random("rank_limited", 3, rng, rank=2)
    s = matrix_sqrt(rho)
    np.testing.assert_allclose(s, s.conj().T, atol=1e-12)
    assert np.linalg.eigvalsh(s).min() > -1e-12
    assert np.max(np.abs(s @ s - rho)) <= 1e-9


def test_matrix_sqrt_clamps_roundoff_but_rejects_negative():
    rho = np.diag([1 + 5e-10, -5e-10])
    np.testing.assert_allclose(matrix_sqrt(rho), np.diag([np.sqrt(1 + 5e-10), 0]))
    with pytest.raises(StructureError, match="positive semidefinite"):
        matrix_sqrt(np.diag([1.1, -0.1]))


def test_fidelity_examples():
    assert fidelity(basis_projector(0, 2), basis_projector(1, 2)) == pytest.approx(0, abs=1e-12)
    # sqrt(I/2) |+><+| sqrt(I/2) = |+><+| / 2, whose root trace is 1/sqrt(2)
    assert fidelity(np.eye(2) / 2, PLUS) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(StructureError):
        fidelity(np.eye(2) / 2, np.eye(3) / 3)


@pytest.mark.parametrize("d", [2, 3, 4, 5, 6])
def test_fidelity_with_certain_state_is_diagonal_entry(d):
    for rho in random_states(d, 200, seed=11):
        diag = np.real(np.diag(rho))
        for i in range(d):
            assert abs(fidelity(rho, basis_projector(i, d)) - diag[i]) <= 1e-8


def test_fidelity_symmetric_and_normalised(rng):
    for d in (2, 3, 4):
        for _ in range(20):
            rho = sample_random("ginibre_mixed", d, rng)
            sigma = sample_random("rank_limited", d, rng, rank=1 + d // 2)
            assert abs(fidelity(rho, sigma) - fidelity(sigma, rho)) <= 1e-8
            assert abs(fidelity(rho, rho) - 1) <= 1e-9


def test_dephase(rng):
    np.testing.assert_allclose(dephase(PLUS), np.eye(2) / 2)
    diag = np.diag([0.2, 0.5, 0.3]).astype(complex)
    np.testing.assert_array_equal(dephase(diag), diag)
    rho = sample_random("ginibre_mixed", 3, rng)
    out = dephase(rho)
    off = out - np.diag(np.diag(out))
    assert np.all(off == 0)
    assert np.trace(out).real == pytest.approx(1, abs=1e-12)
    np.testing.assert_array_equal(dephase(out), out)


def _partial_trace_loops(rho, d_a, d_b, keep):
    if keep == "A":
        out = np.zeros((d_a, d_a), dtype=complex)
        for i in range(d_a):
            for k in range(d_a):
                for j in range(d_b):
                    out[i, k] += rho[i * d_b + j, k * d_b + j]
    else:
        out = np.zeros((d_b, d_b), dtype=complex)
        for j in range(d_b):
            for l in range(d_b):
                for i in range(d_a):
                    out[j, l] += rho[i * d_b + j, i * d_b + l]
    return out


def test_partial_trace_examples(rng):
    r1 = sample_random("ginibre_mixed", 2, rng)
    r2 = sample_random("ginibre_mixed", 3, rng)
    np.testing.assert_allclose(partial_trace(np.kron(r1, r2), (2, 3), "A"), r1, atol=1e-12)
    np.testing.assert_allclose(partial_trace(np.kron(r1, r2), (2, 3), "B"), r2, atol=1e-12)
    bell = projector(np.array([1, 0, 0, 1]) / np.sqrt(2))
    np.testing.assert_allclose(partial_trace(bell, (2, 2)), np.eye(2) / 2, atol=1e-12)
    rho = sample_random("ginibre_mixed", 6, rng)
    for keep in "AB":
        np.testing.assert_allclose(
            partial_trace(rho, (2, 3), keep), _partial_trace_loops(rho, 2, 3, keep), atol=1e-12
        )
    with pytest.raises(StructureError, match="do not factor"):
        partial_trace(rho, (2, 2))


def test_purify_examples(rng):
    psi = sample_random("haar_pure", 3, rng)
    out, rank = purify(projector(psi))
    assert rank == 1
    assert abs(abs(np.vdot(out, psi)) - 1) < 1e-10
    out, rank = purify(np.eye(2) / 2)
    assert rank == 2
    np.testing.assert_allclose(np.abs(out), np.array([1, 0, 0, 1]) / np.sqrt(2), atol=1e-12)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_purify_round_trip(d):
    for rho in random_states(d, 30, seed=5) + random_states(d, 10, seed=6, kind="pure"):
        psi, rank = purify(rho)
        back = partial_trace(projector(psi), (d, rank), "A")
        assert np.max(np.abs(back - rho)) <= 1e-9


def test_sample_random_invariants_and_determinism():
    v = sample_random("haar_pure", 2, 7)
    assert abs(np.linalg.norm(v) - 1) < 1e-12
    rho = sample_random("ginibre_mixed", 3, 7)
    as_density_matrix(rho)
    u = sample_random("haar_unitary", 4, 7)
    assert np.max(np.abs(u @ u.conj().T - np.eye(4))) <= 1e-10
    np.testing.assert_array_equal(sample_random("ginibre_mixed", 3, 7), rho)
    r2 = sample_random("rank_limited", 4, 7, rank=2)
    assert np.sum(np.linalg.eigvalsh(r2) > 1e-10) == 2
    with pytest.raises(ValueError):
        sample_random("rank_limited", 2, 7, rank=3)


@settings(max_examples=60, deadline=None)
@given(d=st.integers(2, 6), seed=st.integers(0, 2**63 - 1))
def test_diagonal_is_probability_vector(d, seed):
    rho = sample_random("ginibre_mixed", d, seed)
    p = probability_vector(np.real(np.diag(rho)))
    assert p.sum() == pytest.approx(1, abs=1e-9)
    np.testing.assert_allclose(dephase(dephase(rho)), dephase(rho))


def test_probability_vector_clamps_and_rejects():
    np.testing.assert_array_equal(probability_vector([1 + 5e-10, -5e-10]), [1 + 5e-10, 0])
    with pytest.raises(StructureError, match="negative"):
        probability_vector([1.1, -0.1])
    with pytest.raises(StructureError, match="sum"):
        probability_vector([0.5, 0.4])


def test_state_file_round_trip(tmp_path, rng):
    rho = sample_random("ginibre_mixed", 3, rng)
    path = tmp_path / "s.json"
    path.write_text(json.dumps(state_to_dict(rho)))
    np.testing.assert_allclose(load_state(path), rho, atol=1e-15)
    path.write_text(json.dumps({"dim": 2, "re": [0.6, 0.8], "im": [0, 0]}))
    np.testing.assert_allclose(load_state(path), projector([0.6, 0.8]), atol=1e-15)


@pytest.mark.parametrize(
    "obj, message",
    [
        ({"dim": 2, "re": [[1, 0], [0, 1]], "im": [[0, 0], [0, 0]]}, "trace"),
        ({"dim": 2, "re": [[0.5, 1], [0, 0.5]], "im": [[0, 0], [0, 0]]}, "Hermitian"),
        ({"dim": 2, "re": [[1.5, 0], [0, -0.5]], "im": [[0, 0], [0, 0]]}, "positive semidefinite"),
        ({"dim": 2, "re": [1, 1], "im": [0, 0]}, "norm"),
        ({"dim": 3, "re": [[1, 0], [0, 0]], "im": [[0, 0], [0, 0]]}, "does not match"),
        ({"re": [[1]]}, "malformed"),
    ],
)
def test_state_loader_reports_violated_bound(tmp_path, obj, message):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(obj))
    with pytest.raises(StructureError, match=message):
        load_state(path)


def test_tolerance_env_override(monkeypatch):
    nearly = np.diag([0.5, 0.5 + 1e-6])
    with pytest.raises(StructureError):
        as_density_matrix(nearly)
    monkeypatch.setenv("UNCERT_TOL", "1e-5")
    as_density_matrix(nearly)
