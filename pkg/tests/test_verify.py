import numpy as np
import pytest
from hypothesis import given, strategies as st

from obsblock.blocker import algorithm1, algorithm2, mode_spectrum
from obsblock.errors import DimensionMismatch
from obsblock.generators import random_blocking_instance
from obsblock.netmodel import SystemMatrices, build_matrices
from obsblock.spectral import eig, pbh_observable
from obsblock.verify import (MAX_OBS_N, Claims, Stability,
                             VerificationReport, classify_stability,
                             match_spectra, observability_rank,
                             unobservable_subspace, verify_design)


def _obs_matrix_rank(A, C):
    # direct stacked observability matrix, only sensible at small n
    n = A.shape[0]
    blocks = [C]
    for _ in range(n - 1):
        blocks.append(blocks[-1] @ A)
    return np.linalg.matrix_rank(np.vstack(blocks), tol=1e-7)


def test_classify_stability():
    assert classify_stability(np.diag([1.0, 2.0]))[0] == Stability.STRICT
    v, bad = classify_stability(np.diag([0.0, 2.0]))
    assert v == Stability.MARGINAL and len(bad) == 1
    v, bad = classify_stability(np.diag([0.0, -1.0, 3.0]))
    assert v == Stability.UNSTABLE
    np.testing.assert_allclose(bad, [-1.0])
    v, bad = classify_stability(np.diag([0.0, 0.0, 3.0]))
    assert v == Stability.UNSTABLE


def test_match_spectra():
    pairs = match_spectra([0, 1, 2], [2.1, 0.0, 1.0])
    assert [round(d, 6) for _, _, d in pairs] == [0.0, 0.0, 0.1]


def test_open_loop_example_is_observable(block_mats):
    rep = verify_design(block_mats, np.zeros((3, 4)))
    assert not rep.passed
    assert "observable at all modes" in rep.failures
    assert "observability matrix has full rank" in rep.failures
    assert rep.obs_matrix_rank == 4
    assert unobservable_subspace(block_mats, np.zeros((3, 4))).shape == (4, 0)


def test_blocked_example(block_mats):
    d = algorithm1(block_mats, 2)
    rep = verify_design(block_mats, d.gain,
                        Claims(mode=-3.0, preserve_spectrum=True,
                               preserved=d.preserved, stability="Stable"))
    assert rep.passed, rep.failures
    assert rep.stability == Stability.MARGINAL
    assert rep.unobservable_modes == pytest.approx([-3.0])
    assert rep.obs_matrix_rank == 3
    assert rep.modified_vectors == d.modified
    U = unobservable_subspace(block_mats, d.gain)
    assert U.shape == (4, 1)
    assert abs(abs(U[:, 0] @ d.vhat_p) - 1) <= 1e-8


def test_failure_messages(block_mats):
    d = algorithm1(block_mats, 2)
    rep = verify_design(block_mats, d.gain,
                        Claims(mode=-2.4384471871911697, preserved=(2,),
                               stability=Stability.STRICT,
                               observable_mode=-3.0, zero_columns=(1,)))
    text = "; ".join(rep.failures)
    assert "is observable" in text
    assert "is unobservable" in text
    assert "preserved eigenvector residual" in text
    assert "expected Strict" in text
    assert "nonzero gain at inaccessible nodes" in text
    F = np.array(d.gain)
    F[0, 0] += 1.0
    rep = verify_design(block_mats, F, Claims(preserve_spectrum=True))
    assert any(f.startswith("spectrum moved") for f in rep.failures)


def test_rejects_bad_gain(block_mats):
    with pytest.raises(DimensionMismatch):
        verify_design(block_mats, np.zeros((4, 4)))
    with pytest.raises(DimensionMismatch):
        verify_design(block_mats, 1j * np.ones((3, 4)))


def test_large_network_skips_matrix_rank():
    n = MAX_OBS_N + 1
    L = 2 * np.eye(n) - np.roll(np.eye(n), 1, axis=1) - np.roll(np.eye(n), -1,
                                                                axis=1)
    mats = SystemMatrices(L, np.eye(n)[:, :1], np.eye(n)[:1])
    rep = verify_design(mats, np.zeros((1, n)), Claims(unobservable=False))
    assert rep.obs_matrix_rank == -1


def test_json_round_trip(block_mats):
    d = algorithm1(block_mats, 2)
    rep = verify_design(block_mats, d.gain,
                        Claims(mode=-3.0, preserved=d.preserved,
                               preserve_spectrum=True))
    again = VerificationReport.from_json(rep.to_json())
    assert again == rep
    assert rep.to_dict()["pass"] is True


@given(st.integers(0, 2**31 - 1), st.integers(0, 100))
def test_pbh_and_krylov_agree(seed, pick):
    mats = build_matrices(random_blocking_instance(seed, n_range=(4, 8)))
    p = pick % mats.n
    d = algorithm2(mats, p)
    A = mats.closed_loop(d.gain)
    U = unobservable_subspace(mats, d.gain)
    rep = verify_design(mats, d.gain)
    # PBH sees k distinct unobservable modes exactly when Krylov loses k
    assert U.shape[1] == mats.n - observability_rank(A, mats.C)
    assert len(rep.unobservable_modes) == U.shape[1]
    assert _obs_matrix_rank(-A, mats.C) == rep.obs_matrix_rank
    # the unobservable subspace is invariant and invisible at the outputs
    assert np.abs(mats.C @ U).max() <= 1e-8
    R = A @ U - U @ (U.T @ A @ U)
    assert np.abs(R).max() <= 1e-7 * np.linalg.norm(A, 2)
    lam = mode_spectrum(mats)[p]
    assert not pbh_observable(-A, mats.C, -lam)


@given(st.integers(0, 2**31 - 1))
def test_open_loop_observability_oracles_agree(seed):
    mats = build_matrices(random_blocking_instance(seed, n_range=(3, 8)))
    A = -mats.L
    pbh = all(pbh_observable(A, mats.C, lam)
              for lam in np.linalg.eigvals(A))
    assert pbh == (observability_rank(A, mats.C) == mats.n)
    assert observability_rank(A, mats.C) == _obs_matrix_rank(A, mats.C)
