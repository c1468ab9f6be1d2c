import math

import numpy as np
import pytest

import sparsewalk as sw
from sparsewalk.errors import (
    AlphaTooLarge,
    BSNotInvertible,
    EmptySupport,
    Epsilon0Zero,
    LambdaInSpectrum,
)


def test_single_site_assembly():
    k = sw.simple1d()
    spec = sw.single_delta(1, 1.0)
    asm = sw.assemble_bs(k, spec, 2.0, box=40)
    # oracle: 1x1 matrix [v (g(0) - 1)] with g(0) = 2/sqrt(3)
    expected = 2.0 / math.sqrt(3.0) - 1.0
    assert asm.matrix.shape == (1, 1)
    assert asm.matrix[0, 0] == pytest.approx(expected, abs=1e-10)
    assert asm.gamma == pytest.approx(expected, abs=1e-10)


def test_eigenvalue_condition_at_lambda_plus():
    k = sw.simple1d()
    spec = sw.single_delta(1, 1.0)
    lam_plus = sw.lambda_pm_1d(0.0, 1.0)[1]
    asm = sw.assemble_bs(k, spec, lam_plus, box=40)
    assert asm.matrix[0, 0] == pytest.approx(1.0, abs=1e-9)
    hit, dist = sw.bs_eigenvalue_test(asm, tol=1e-6)
    assert hit and dist < 1e-9
    asm_off = sw.assemble_bs(k, spec, 1.5, box=40)
    # oracle: g_1.5(0) = 1.5/sqrt(1.25), matrix = [g - 1], distance |g - 2|
    g15 = 1.5 / math.sqrt(1.25)
    hit, dist = sw.bs_eigenvalue_test(asm_off, tol=1e-6)
    assert not hit
    assert dist == pytest.approx(2.0 - g15, abs=1e-9)


def test_two_site_off_diagonal():
    k = sw.simple1d()
    v = 1.0
    spec = sw.make_potential(1, {(1,): v, (-1,): v}, tail="decaying")
    asm = sw.assemble_bs(k, spec, 1.25, box=40)
    # oracle: off-diagonal v * lambda * G(-1, 1) = v * g(2) = v * 5/12
    assert asm.off_diag[0, 1] == pytest.approx(v * 5.0 / 12.0, abs=1e-9)
    assert np.max(np.abs(asm.matrix - asm.matrix.T)) < 1e-12
    split = asm.matrix - asm.gamma * np.diag(asm.support_values) - asm.off_diag
    assert np.max(np.abs(split)) < 1e-12
    assert np.max(np.abs(np.diag(asm.off_diag))) == 0.0


def test_assembly_guards():
    k = sw.simple1d()
    with pytest.raises(LambdaInSpectrum):
        sw.assemble_bs(k, sw.single_delta(1, 1.0), 1.01, box=40)
    with pytest.raises(EmptySupport):
        sw.assemble_bs(k, sw.zero_potential(1), 2.0, box=40)


def test_crossing_scan_matches_dense_eigensolve():
    k = sw.lazy1d(0.25)
    spec = sw.single_delta(1, 2.0)
    op = sw.truncated_operator(k, spec, 60)
    top = float(np.linalg.eigvalsh(op.sym)[-1])
    crossing = sw.bs_crossing_scan(k, spec, 1.05, 4.0, box=60)
    assert crossing == pytest.approx(top, abs=1e-6)


def test_resolvent_via_bs_zero_potential():
    k = sw.simple1d()
    R, resid = sw.resolvent_via_bs(k, sw.zero_potential(1), 2.0, box=30)
    assert resid < 1e-8
    # formula collapses to the truncated Green matrix
    direct = sw.green_table(k, 2.0, [(x,) for x in range(-4, 5)])
    i = 30
    for x in range(-4, 5):
        assert R[i, i + x] == pytest.approx(direct[(x,)], abs=1e-10)


def test_resolvent_via_bs_matches_direct_inverse():
    k = sw.simple1d()
    spec = sw.single_delta(1, 1.0)
    R, resid = sw.resolvent_via_bs(k, spec, 2.0, box=40)
    assert resid < 1e-6
    op = sw.truncated_operator(k, spec, 40)
    direct = np.linalg.inv(2.0 * np.eye(op.volume) - op.matrix)
    interior = np.max(np.abs(op.sites), axis=1) <= 20
    assert np.max(np.abs((R - direct)[np.ix_(interior, interior)])) < 1e-6


def test_resolvent_via_bs_detects_eigenvalue():
    k = sw.simple1d()
    spec = sw.single_delta(1, 1.0)
    lam_plus = sw.lambda_pm_1d(0.0, 1.0)[1]
    with pytest.raises(BSNotInvertible):
        sw.resolvent_via_bs(k, spec, lam_plus, box=40)


def test_off_diag_tail_norm_profiles():
    k = sw.simple1d()
    asm = sw.assemble_bs(k, sw.build_geometric_sparse(1, 1.0, 3, box_radius=512), 2.0, box=512)
    bounds = [sw.off_diag_tail_norm(asm, N) for N in (8, 32, 128)]
    assert bounds[0] > bounds[1] > bounds[2]
    assert bounds[2] < 1e-3
    single = sw.assemble_bs(k, sw.single_delta(1, 1.0), 2.0, box=64)
    assert sw.off_diag_tail_norm(single, 8) == 0.0


def test_off_diag_tail_norm_dense_control():
    k = sw.simple1d()
    asm = sw.assemble_bs(k, sw.dense_level(1, 1.0, box_radius=128), 2.0, box=128)
    bounds = [sw.off_diag_tail_norm(asm, N) for N in (8, 32, 64)]
    assert min(bounds) > 0.05


def test_neumann_single_delta_excluded():
    k = sw.simple1d()
    cert = sw.neumann_invertibility(k, sw.single_delta(1, 1.0), [(0,)], 2.0, 0.6, box=64)
    assert cert.epsilon0 == 1.0
    assert cert.h_norm_plain == 0.0
    assert cert.valid


def test_neumann_geometric_empty_K():
    k = sw.simple1d()
    spec = sw.build_geometric_sparse(1, 1.0, 3, box_radius=512)
    cert = sw.neumann_invertibility(k, spec, (), 2.0, 0.6, box=512)
    # oracle: gamma = 2/sqrt(3) - 1, eps0 = 1 - gamma
    assert cert.epsilon0 == pytest.approx(1.0 - (2.0 / math.sqrt(3.0) - 1.0), abs=1e-9)
    assert cert.valid
    assert cert.contraction < 1.0


def test_neumann_epsilon0_zero_at_level():
    k = sw.simple1d()
    spec = sw.build_geometric_sparse(1, 1.0, 3, box_radius=512)
    lam_plus = sw.lambda_pm_1d(0.0, 1.0)[1]  # gamma = 1 there, so 1 - gamma*V = 0
    with pytest.raises(Epsilon0Zero):
        sw.neumann_invertibility(k, spec, (), lam_plus, 0.2, box=512)


def test_neumann_alpha_guard():
    k = sw.simple1d()
    spec = sw.build_geometric_sparse(1, 1.0, 3, box_radius=512)
    with pytest.raises(AlphaTooLarge):
        sw.neumann_invertibility(k, spec, (), 2.0, 5.0, box=512)


def test_grow_exclusion_set():
    k = sw.simple1d()
    spec = sw.build_geometric_sparse(1, 1.0, 3, box_radius=512)
    lam_plus = sw.lambda_pm_1d(0.0, 1.0)[1]
    cert = sw.grow_exclusion_set(k, spec, lam_plus, 0.2, box=512)
    assert cert.valid
    assert len(cert.excluded) > 0  # the v = 1 sites had to be screened


def test_bs_matrix_symmetry_sparse_spec():
    k = sw.lazy1d(0.25)
    spec = sw.build_geometric_sparse(1, 1.0, 3, box_radius=256)
    asm = sw.assemble_bs(k, spec, 1.8, box=256)
    assert np.max(np.abs(asm.matrix - asm.matrix.T)) < 1e-12
    split = asm.matrix - asm.gamma * np.diag(asm.support_values) - asm.off_diag
    assert np.max(np.abs(split)) < 1e-12
