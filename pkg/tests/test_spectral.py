import math

import numpy as np
import pytest

import sparsewalk as sw
from sparsewalk.errors import BoxTooLarge, GapNotCertified, NoRootAboveOne


def test_truncation_free_walk_ground_state():
    # oracle: Dirichlet eigenvalues of the path graph on 2L+1 vertices
    L = 100
    op = sw.truncated_operator(sw.simple1d(), None, L)
    top = np.linalg.eigvalsh(op.sym)[-1]
    assert top == pytest.approx(math.cos(math.pi / (2 * L + 2)), abs=1e-12)
    assert top < 1.0


def test_truncation_rows_and_entries():
    spec = sw.single_delta(1, 1.0)
    op = sw.truncated_operator(sw.simple1d(), spec, 20)
    i = op.box.index((0,))
    j = op.box.index((1,))
    assert op.matrix[i, j] == pytest.approx((1 + 1.0) * 0.5)
    assert op.matrix[j, i] == pytest.approx(1.0 * 0.5)
    free = sw.truncated_operator(sw.simple1d(), None, 20)
    sums = free.matrix.sum(axis=1)
    assert np.all(sums <= 1.0 + 1e-15)
    interior = np.max(np.abs(free.sites), axis=1) < 20
    assert np.allclose(sums[interior], 1.0)


def test_truncation_similarity():
    op = sw.truncated_operator(sw.lazy1d(0.25), sw.single_delta(1, 2.0), 30)
    assert np.max(np.abs(op.sym - op.sym.T)) < 1e-15
    w_sym = np.sort(np.linalg.eigvalsh(op.sym))
    w_mat = np.sort(np.linalg.eigvals(op.matrix).real)
    assert np.max(np.abs(w_sym - w_mat)) < 1e-10


def test_truncation_caps():
    with pytest.raises(BoxTooLarge):
        sw.truncated_operator(sw.simple1d(), None, 4000, dense_cap=100)
    with pytest.raises(ValueError):
        sw.truncated_operator(sw.simple1d(), None, 2)


def test_single_delta_eigenvalue():
    op = sw.truncated_operator(sw.simple1d(), sw.single_delta(1, 1.0), 60)
    sol = sw.eigensolve_top(op, count=2)
    lam_plus = sw.lambda_pm_1d(0.0, 1.0)[1]
    assert sol.by_value[0].value == pytest.approx(lam_plus, abs=1e-8)
    assert sol.by_value[0].residual < 1e-10


def test_eigenvector_ratio_matches_green_decay():
    op = sw.truncated_operator(sw.simple1d(), sw.single_delta(1, 1.0), 60)
    sol = sw.eigensolve_top(op, count=1)
    phi = sol.by_value[0].phi
    idx = [op.box.index((x,)) for x in range(1, 10)]
    ratios = phi[idx][1:] / phi[idx][:-1]
    assert np.allclose(ratios, 1 / math.sqrt(3.0), atol=1e-8)


def test_single_delta_truncation_error_decays_geometrically():
    lam_plus = sw.lambda_pm_1d(0.0, 1.0)[1]
    errs = []
    for L in (8, 12, 16):
        op = sw.truncated_operator(sw.simple1d(), sw.single_delta(1, 1.0), L)
        errs.append(abs(float(np.linalg.eigvalsh(op.sym)[-1]) - lam_plus))
    assert errs[1] < 0.1 * errs[0]
    assert errs[2] < 0.1 * errs[1]


def test_free_walk_top_vector_positive():
    op = sw.truncated_operator(sw.simple1d(), None, 40)
    sol = sw.eigensolve_top(op, count=1)
    assert sol.by_value[0].phi.min() > 0.0


def test_bipartite_spectrum_symmetric():
    op = sw.truncated_operator(sw.simple1d(), sw.single_delta(1, 1.0), 40)
    w = np.linalg.eigvalsh(op.sym)
    assert np.max(np.abs(w + w[::-1])) < 1e-10


def test_bipartite_bottom_vector_is_sign_flipped_top():
    op = sw.truncated_operator(sw.simple1d(), sw.single_delta(1, 1.0), 40)
    sol = sw.eigensolve_top(op, count=1)
    top = sol.by_value[0]
    w, U = np.linalg.eigh(op.sym)
    bottom_phi = np.sqrt(op.dvec) * U[:, 0]
    jvec = sw.bipartite_detect(sw.simple1d()).sign_on(op.sites)
    expected = jvec * top.phi
    expected /= np.linalg.norm(expected)
    bottom_phi /= np.linalg.norm(bottom_phi)
    assert w[0] == pytest.approx(-top.value, abs=1e-10)
    diff = min(
        np.max(np.abs(bottom_phi - expected)), np.max(np.abs(bottom_phi + expected))
    )
    assert diff < 1e-8


def test_edge_ordering_invariant_across_battery():
    # |ell| <= r for every truncation of the positivity-preserving operator
    for kernel in (sw.simple1d(), sw.lazy1d(0.3)):
        for spec in (None, sw.single_delta(1, 2.0), sw.build_geometric_sparse(1, 1.0, 3)):
            op = sw.truncated_operator(kernel, spec, 40)
            w = np.linalg.eigvalsh(op.sym)
            assert abs(w[0]) <= w[-1] + 1e-12


def test_dirichlet_monotone_in_L():
    spec = sw.single_delta(1, 0.5)
    tops = [
        np.linalg.eigvalsh(sw.truncated_operator(sw.simple1d(), spec, L).sym)[-1]
        for L in (10, 20, 40, 80)
    ]
    assert all(b >= a - 1e-14 for a, b in zip(tops, tops[1:]))


def test_abs_value_ordering():
    op = sw.truncated_operator(sw.simple1d(), sw.single_delta(1, 1.0), 40)
    sol = sw.eigensolve_top(op, count=4)
    values_abs = [abs(p.value) for p in sol.by_abs]
    assert values_abs == sorted(values_abs, reverse=True)
    assert {round(sol.by_abs[0].value, 6), round(sol.by_abs[1].value, 6)} == {
        round(sol.by_value[0].value, 6),
        -round(sol.by_value[0].value, 6),
    }


def test_perron_pair_positivity_and_value():
    anchor = sw.build_geometric_sparse(1, 1.0, 3, anchor=((0,), 2.0))
    op = sw.truncated_operator(sw.simple1d(), anchor, 60)
    r, phi = sw.perron_pair(op, tol=1e-10)
    ref = np.linalg.eigvalsh(op.sym)[-1]
    assert r == pytest.approx(ref, abs=1e-9)
    assert phi.min() > 0.0
    assert op.v_norm(phi) == pytest.approx(1.0, abs=1e-12)


def test_lambda_pm_examples():
    lam_minus, lam_plus = sw.lambda_pm_1d(0.0, 1.0)
    assert lam_plus == pytest.approx(2.0 / math.sqrt(3.0), rel=1e-14)
    assert lam_minus == pytest.approx(-2.0 / math.sqrt(3.0), rel=1e-14)
    # consistency: g at lambda_+ equals 1 + 1/v
    g = sw.g_lambda_closed_1d(0.0, lam_plus).value
    assert g == pytest.approx(2.0, rel=1e-12)
    for q in (0.0, 0.25, 0.6):
        for v in (0.5, 1.0, 3.0):
            lm, lp = sw.lambda_pm_1d(q, v)
            assert lm < 2 * q - 1 < 1 < lp


def test_predictor_1d_branches():
    spec = sw.build_geometric_sparse(1, 1.0, 3)
    pred = sw.essential_spectrum_predictor(sw.simple1d(), spec)
    lam = 2.0 / math.sqrt(3.0)
    assert pred.lambda0 == pytest.approx(lam, abs=1e-9)
    assert len(pred.lambda_v) == 2
    assert pred.lambda_v[0] == pytest.approx(-lam, abs=1e-9)
    pred6 = sw.essential_spectrum_predictor(sw.lazy1d(0.6), spec)
    assert len(pred6.lambda_v) == 1
    assert pred6.lambda0 == pytest.approx(sw.lambda_pm_1d(0.6, 1.0)[1], abs=1e-9)


def test_predictor_root_consistent_with_independent_oracle():
    # lambda0 must satisfy g(lambda0) = 1 + 1/v0 when re-evaluated by the
    # path-counting series, which shares nothing with the quadrature route
    spec = sw.build_geometric_sparse(1, 1.0, 3)
    pred = sw.essential_spectrum_predictor(sw.simple1d(), spec)
    g = sw.g_lambda_series(sw.simple1d(), pred.lambda0, tol=1e-13).value
    assert abs(g - 2.0) <= 1e-9


def test_predictor_rejects_dense():
    dense = sw.dense_level(1, 1.0, box_radius=128)
    with pytest.raises(ValueError):
        sw.essential_spectrum_predictor(sw.simple1d(), dense)


def test_predictor_d3_no_root():
    # oracle: g(1+) is finite in d = 3 (about 1.516 for the simple walk),
    # below 1 + 1/v0 = 2, so no root above 1 exists
    k3 = sw.validate_kernel(
        {
            (1, 0, 0): 1 / 6, (-1, 0, 0): 1 / 6,
            (0, 1, 0): 1 / 6, (0, -1, 0): 1 / 6,
            (0, 0, 1): 1 / 6, (0, 0, -1): 1 / 6,
        }
    )
    spec = sw.build_geometric_sparse(3, 1.0, 3, box_radius=16)
    with pytest.raises(NoRootAboveOne):
        sw.essential_spectrum_predictor(k3, spec, check_sparseness=False)


def test_bipartite_detect():
    assert sw.bipartite_detect(sw.simple1d()) is not None
    assert sw.bipartite_detect(sw.lazy1d(0.3)) is None
    sign2 = sw.bipartite_detect(sw.simple2d())
    assert sign2 is not None and sign2.axes == (0, 1)
    assert sign2.sign((1, 0)) == -1
    assert sign2.sign((1, 1)) == 1


def test_diag_dominance():
    assert sw.diag_dominance_check(sw.lazy1d(0.3)).margin == pytest.approx(0.3)
    res0 = sw.diag_dominance_check(sw.simple1d())
    assert res0.margin == pytest.approx(0.0)
    assert not res0.holds
    spread = sw.validate_kernel({2: 0.2, -2: 0.2, 0: 0.1, 1: 0.25, -1: 0.25})
    res = sw.diag_dominance_check(spread)
    assert res.margin == pytest.approx(0.1 - 0.4)
    assert not res.holds


def test_edge_inequality_cases():
    res = sw.edge_inequality_check(sw.simple1d(), sw.single_delta(1, 1.0), 40)
    assert res.slack >= -1e-8
    assert res.slack == pytest.approx(0.0, abs=1e-8)  # bipartite symmetry
    res3 = sw.edge_inequality_check(sw.lazy1d(0.3), sw.single_delta(1, 1.0), 40)
    assert res3.slack >= -1e-8
    free = sw.edge_inequality_check(sw.lazy1d(0.3), None, 40)
    assert free.slack >= -1e-8


def test_gap_projection_absorbs_top_vector():
    anchor = sw.build_geometric_sparse(1, 1.0, 3, anchor=((0,), 2.0))
    op = sw.truncated_operator(sw.simple1d(), anchor, 40)
    sol = sw.eigensolve_top(op, count=1)
    proj = sw.gap_projection_test(sw.simple1d(), anchor, 40, f=sol.by_value[0].phi)
    assert proj.eps_fit == 0.0


def test_gap_projection_rates():
    anchor = sw.build_geometric_sparse(1, 1.0, 3, anchor=((0,), 2.0))
    proj = sw.gap_projection_test(sw.simple1d(), anchor, 60)
    assert proj.branch == "bipartite"
    assert proj.eps_fit < 1.0
    assert abs(proj.eps_fit - proj.eps_pred) <= 0.1 * proj.eps_pred
    proj3 = sw.gap_projection_test(sw.lazy1d(0.3), anchor, 60)
    assert proj3.branch == "one_term"
    assert abs(proj3.eps_fit - proj3.eps_pred) <= 0.1 * proj3.eps_pred


def test_gap_projection_non_bipartite_spread_kernel():
    # support {+-1, +-2} is not bipartite (even offset present) but its
    # spectrum bottom sits strictly above -r, so the one-term route applies
    k = sw.validate_kernel({2: 0.25, -2: 0.25, 1: 0.25, -1: 0.25})
    spec = sw.single_delta(1, 1.0)
    op = sw.truncated_operator(k, spec, 30)
    w = np.linalg.eigvalsh(op.sym)
    if w[0] > -w[-1] + 1e-10:
        proj = sw.gap_projection_test(k, spec, 30)
        assert proj.branch == "one_term"
        assert proj.eps_fit < 1.0
    else:
        with pytest.raises(GapNotCertified):
            sw.gap_projection_test(k, spec, 30)


def test_spectral_report_bundle():
    anchor = sw.build_geometric_sparse(1, 1.0, 3, anchor=((0,), 2.0))
    bundle = sw.spectral_report(sw.simple1d(), anchor, [40, 60, 80])
    assert bundle.lambda0 == pytest.approx(2.0 / math.sqrt(3.0), abs=1e-9)
    rs = [rep.r for rep in bundle.reports]
    assert abs(rs[-1] - rs[-2]) < 1e-6
    assert bundle.discrete  # the anchored state is discrete and stabilized
    top = max(bundle.discrete)
    assert top == pytest.approx(rs[-1], abs=1e-9)
    assert bundle.reports[-1].positivity_min > 0.0
    assert bundle.reports[-1].decay is not None
    assert bundle.reports[-1].bipartite


def test_sturm_oracle_matches_eigh_at_small_scale():
    # cross-check the high-precision distance against dense eigh where the
    # spacing is fat enough for float64 to resolve
    spec = sw.single_delta(1, 1.0)
    k = sw.simple1d()
    op = sw.truncated_operator(k, spec, 40)
    w = np.linalg.eigvalsh(op.sym)
    target = 1.3
    expected = float(np.min(np.abs(w - target)))
    got, exact = sw.truncated_spectrum_distance_1d(k, spec, 40, target, dps=40)
    assert exact
    assert got == pytest.approx(expected, rel=1e-8)


def test_sturm_oracle_certifies_upper_bound():
    spec = sw.build_geometric_sparse(1, 1.0, 3)
    k = sw.simple1d()
    import mpmath as mp

    with mp.workdps(60):
        target = 2 / mp.sqrt(3)
        d256, exact256 = sw.truncated_spectrum_distance_1d(k, spec, 256, target, dps=60)
        assert exact256 and 0.0 < d256 < 1e-12
        d512, exact512 = sw.truncated_spectrum_distance_1d(k, spec, 512, target, dps=60)
        assert d512 <= d256 / 2
