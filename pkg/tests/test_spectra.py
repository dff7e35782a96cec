from __future__ import annotations

import math

import numpy as np
import pytest

from coalesce.models import (
    EP_COUPLING,
    INFINITE,
    ModelSpec,
    build_kspace_ring,
    build_ladder,
    build_ring,
    build_ring_with_hop,
    build_two_site,
    ring_pair_states,
)
from coalesce.numkit import EigenSystem, eig_full
from coalesce.spectra import (
    DP,
    EP,
    SCAN_COLUMNS,
    SIMPLE,
    biorthogonal_norm,
    classify,
    cluster_spectrum,
    ep_scan,
    ladder_bloch_spectrum,
    ladder_gap_closing,
    match_spectra,
)


def fake_system(values, norm=1.0):
    lam = np.asarray(values, dtype=complex)
    n = lam.shape[0]
    eye = np.eye(n, dtype=complex)
    return EigenSystem(lam, eye, eye, np.zeros(n), np.zeros(n), norm)


def up_to_phase(a, b):
    return abs(abs(np.vdot(a, b)) - np.linalg.norm(a) * np.linalg.norm(b))


# -- clustering --------------------------------------------------------------------


def test_cluster_examples():
    assert cluster_spectrum(fake_system([0, 0, 2]), 1e-6) == [[0, 1], [2]]
    assert cluster_spectrum(fake_system([0, 1e-9, 1]), 1e-6) == [[0, 1], [2]]


def test_cluster_scale_uses_norm():
    assert cluster_spectrum(fake_system([0, 5e-6], norm=10.0), 1e-6) == [[0, 1]]
    assert cluster_spectrum(fake_system([0, 5e-6], norm=1.0), 1e-6) == [[0], [1]]


def test_ring_census():
    report = classify(build_ring(6))
    sizes = sorted(c.algebraic for c in report.clusters)
    assert sizes == [1, 1, 2, 2, 2, 2, 2]
    assert all(c.classification == DP for c in report.clusters if c.algebraic == 2)
    simple = sorted(c.representative.real for c in report.by_class(SIMPLE))
    assert simple == pytest.approx([-2, 2])


# -- biorthogonality ---------------------------------------------------------------


def test_biorthogonal_examples():
    assert abs(biorthogonal_norm([1, 0], [1, 0])) == 1.0
    es = eig_full(np.array([[0, 0.5], [0, 0]], dtype=complex))
    assert abs(biorthogonal_norm(es.left[:, 0], es.right[:, 0])) < 1e-6
    eps = 0.01
    es = eig_full(np.array([[0, 1], [eps, 0]], dtype=complex))
    got = abs(biorthogonal_norm(es.left[:, 0], es.right[:, 0]))
    assert got == pytest.approx(2 * math.sqrt(eps) / (1 + eps), rel=1e-12)
    assert got == pytest.approx(0.199, abs=1e-3)


def test_phase_rigidity_shrinks_toward_ep():
    vals = []
    for eps in (1e-2, 1e-4, 1e-6):
        rep = classify(np.array([[0, 1], [eps, 0]], dtype=complex))
        vals.append(min(c.min_phase_rigidity for c in rep.clusters))
    assert vals[0] > vals[1] > vals[2]


# -- classification ----------------------------------------------------------------


def test_ring_hop_ep_and_vector():
    report = classify(build_ring_with_hop(6, 1, 1, 0.5))
    c = report.nearest(0.0)
    assert c.classification == EP
    assert abs(c.representative) < 1e-6
    plus, _ = ring_pair_states(6, np.pi / 2, 1)
    assert up_to_phase(c.coalescing_vector, plus.amplitudes) < 1e-8
    assert len(report.by_class(EP)) == 1


def test_ring_r3_eps():
    report = classify(build_ring_with_hop(6, 1, 3, 0.5))
    for E in (-math.sqrt(3), 0.0, math.sqrt(3)):
        c = report.nearest(E)
        assert abs(c.representative - E) < 1e-6
        assert c.classification == EP


def test_ring_r2_no_ep():
    # cos(2k) = 0 has no solution on the pi*n/6 grid
    assert classify(build_ring_with_hop(6, 1, 2, 0.5)).by_class(EP) == []


def test_two_site_classes():
    assert [c.classification for c in classify(build_two_site(0.5, 0.0)).clusters] == [EP]
    assert [c.classification for c in classify(build_two_site(0.0, 0.0)).clusters] == [DP]


def test_kspace_all_pairs_coalesce():
    report = classify(build_kspace_ring(12, 1.0))
    assert len(report.by_class(EP)) == 5
    assert report.by_class(DP) == []


def test_classify_deterministic():
    H = build_ring_with_hop(6, 1, 3, 0.9)
    a = classify(H).to_dict()
    b = classify(H).to_dict()
    assert a == b


HERMITIAN_SPECS = [
    ModelSpec("ring", {"N_half": 6}),
    ModelSpec("ring_with_hop", {"N_half": 6, "l0": 1, "r": 1, "kappa": 0.0}),
    ModelSpec("kspace_ring", {"N_sites": 12, "kappa": 0.0}),
    ModelSpec("ladder", {"N_rungs": 12, "J": 0.0, "n_max": 2}),
    ModelSpec("ssh_chain", {"N_cells": 8, "delta": 0.3, "kappa": 0.0}),
    ModelSpec("ssh_cylinder", {"M_rows": 4, "N_cells": 4, "delta": 0.3, "J_inter": 0.5, "kappa": 0.0}),
    ModelSpec("two_site", {"kappa": 0.0, "eps0": 1.0}),
]


@pytest.mark.parametrize("spec", HERMITIAN_SPECS, ids=lambda s: s.family)
def test_hermitian_never_ep(spec):
    assert classify(spec.build()).by_class(EP) == []


@pytest.mark.parametrize("J", [-1.3, 0.4, 2.0])
def test_ladder_hp_only_is_never_ep(J):
    # the power-law part alone is anti-Hermitian, hence normal
    m = build_ladder(12, J, 3)
    assert classify(m.Hp.to_dense()).by_class(EP) == []


@pytest.mark.parametrize("spec", HERMITIAN_SPECS[:3] + [ModelSpec("ring_with_hop", {"N_half": 6, "l0": 1, "r": 3, "kappa": 0.5})])
def test_biorthogonal_detector_consistency(spec):
    for c in classify(spec.build()).clusters:
        if c.min_biorthogonal_norm <= 1e-6:
            assert c.geometric < c.algebraic


def test_report_serializes():
    d = classify(build_two_site(0.5, 0.0), model={"family": "two_site"}).to_dict()
    assert d["clusters"][0]["class"] == EP
    assert d["model"] == {"family": "two_site"}


# -- scans -----------------------------------------------------------------------


def test_scan_robustness():
    spec = ModelSpec("ring_with_hop", {"N_half": 6, "l0": 1, "r": 1, "kappa": 0.5})
    rows = ep_scan(spec, [0.0, 0.1, 0.5, 1.0, 2.0], track=[0.0])
    assert [r.classification for r in rows] == [DP, EP, EP, EP, EP]
    assert list(rows[0].as_record()) == list(SCAN_COLUMNS)


def test_scan_parallel_matches_serial():
    spec = ModelSpec("ring_with_hop", {"N_half": 6, "l0": 1, "r": 3, "kappa": 0.5})
    ks = [0.05, 0.5, 5.0]
    assert ep_scan(spec, ks) == ep_scan(spec, ks, workers=3)


def test_scan_failed_row_continues():
    spec = ModelSpec("ring_with_hop", {"N_half": 6, "l0": 1, "r": 1, "kappa": 0.5})
    rows = ep_scan(spec, [0.5, float("nan"), 1.0], track=[0.0])
    assert [r.classification for r in rows] == [EP, "FAILED", EP]
    assert rows[1].error


def test_scan_needs_values():
    with pytest.raises(ValueError):
        ep_scan(ModelSpec("two_site", {"kappa": 1.0}), [])


# -- ladder gap ----------------------------------------------------------------------


def k_grid(n=40):
    pos = np.linspace(math.pi / 50, math.pi - math.pi / 50, n)
    return np.concatenate([-pos, pos])


def test_gap_closes_at_critical_coupling():
    gap, _ = ladder_gap_closing(EP_COUPLING, INFINITE, k_grid())
    assert gap == 0.0


def test_gap_half_coupling():
    gap, _ = ladder_gap_closing(0.5, INFINITE, k_grid())
    assert gap == pytest.approx(2 * math.sqrt(1 - (0.5 * math.pi / 4) ** 2), rel=1e-12)
    assert gap == pytest.approx(1.83933, abs=1e-5)


def test_gap_truncated_series_at_k_half_pi():
    # J=4/pi, 2000 terms: Delta = 1 - 1.59e-4, so the gap is 2 sqrt(1 - Delta^2), not below 1e-3
    gap, k = ladder_gap_closing(EP_COUPLING, 2000, [math.pi / 2])
    assert gap == pytest.approx(0.03568106141903565, rel=1e-9)


def test_gap_rejects_band_edges():
    with pytest.raises(ValueError):
        ladder_gap_closing(1.0, 10, [0.0])
    with pytest.raises(ValueError):
        ladder_gap_closing(1.0, 10, [math.pi - 0.01])


@pytest.mark.parametrize("J,n_max,tol", [(0.0, 1, 1e-10), (0.5, 16, 1e-8)])
def test_lattice_matches_bloch(J, n_max, tol):
    lam = eig_full(build_ladder(64, J, n_max).H.to_dense()).eigenvalues
    assert match_spectra(lam, ladder_bloch_spectrum(64, J, n_max)) <= tol
