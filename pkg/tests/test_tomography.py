"""Tests for the verification game: designs, provers, reconstruction, decision."""

import math

import numpy as np
import pytest

from metriq.channels import kraus_channel, superoperator
from metriq.dilation import embed
from metriq.errors import (
    DegenerateMetricError,
    DimMismatchError,
    MetricExceedsIdentityError,
    MetriqError,
    SingularDesignError,
)
from metriq.hilbert import validate_metric
from metriq.linalg import hermitian_eig, trace_norm
from metriq.rng import RngStream
from metriq.tomography import (
    ReconstructedChannel,
    _herm3_eigvals,
    default_design,
    dishonest_prover,
    embedded_metric_channel,
    honest_prover,
    one_to_one_norm,
    reconstruct,
    report_to_json,
    run_prover,
    sampled_one_to_one,
    threshold,
    verify,
)

ETA2 = np.array([[0.8, -0.2j], [0.2j, 0.8]])

# exact success ratios of the honest prover on the default design under ETA2,
# in design order: tr(eta * P sigma P) for each input
HONEST_RATIOS_ETA2 = [0.8, 0.8, 0.0, 0.8, 0.4, 0.4, 1.0, 0.4, 0.4]


def make_metric(seed, lo=0.05, hi=1.0):
    """Random qubit metric with norm <= 1 and a nondegenerate spectrum."""
    rng = RngStream(seed=seed)
    u = rng.haar_unitary(2)
    lam1 = float(lo + (hi - lo) * rng.uniforms(1, start=8)[0])
    lam2 = float(lam1 * (0.1 + 0.75 * rng.uniforms(1, start=9)[0]))
    mat = (u * np.array([lam2, lam1])) @ u.conj().T
    return validate_metric((mat + mat.conj().T) / 2)


def random_prover(seed, n_terms=None):
    rng = RngStream(seed=seed)
    if n_terms is None:
        n_terms = 1 + int(rng.words(1, start=777)[0] % 3)
    mats = [rng.haar_unitary(2, start=100 * j) for j in range(n_terms)]
    weights = rng.uniforms(n_terms, start=900) + 1e-3
    discard = float(0.99 * rng.uniforms(1, start=950)[0])
    probs = (1.0 - discard) * weights / weights.sum()
    return dishonest_prover(mats, probs), discard


# ---------------------------------------------------------------------------
# input design
# ---------------------------------------------------------------------------

def test_default_design_inputs_are_pure_unit_trace():
    design = default_design()
    assert len(design.input_states) == 9
    for sigma in design.input_states:
        assert sigma.shape == (3, 3)
        assert abs(np.trace(sigma) - 1.0) < 1e-14
        eig = hermitian_eig(sigma)
        assert eig.eigenvalues[0] > -1e-14
        # rank one
        assert abs(eig.eigenvalues[-1] - 1.0) < 1e-14


def test_default_design_spans_operator_space():
    design = default_design()
    stacked = np.stack([s.reshape(-1) for s in design.input_states])
    assert np.linalg.matrix_rank(stacked) == 9


# ---------------------------------------------------------------------------
# prover models
# ---------------------------------------------------------------------------

def test_honest_prover_shape():
    model = honest_prover()
    assert model.kind == "honest"
    assert model.unitaries == ()


def test_dishonest_prover_accepts_partial_discard():
    model = dishonest_prover([np.eye(2)], [0.6])
    assert model.kind == "dishonest"
    assert model.probs == (0.6,)


def test_dishonest_prover_rejections():
    eye = np.eye(2)
    with pytest.raises(MetriqError):
        dishonest_prover([], [])
    with pytest.raises(MetriqError):
        dishonest_prover([eye], [0.5, 0.5])
    with pytest.raises(DimMismatchError):
        dishonest_prover([np.eye(3)], [1.0])
    with pytest.raises(MetriqError):
        dishonest_prover([np.array([[1.0, 0.1], [0.0, 1.0]])], [1.0])
    with pytest.raises(MetriqError):
        dishonest_prover([eye, eye], [0.7, -0.1])
    with pytest.raises(MetriqError):
        dishonest_prover([eye], [0.0])
    with pytest.raises(MetriqError):
        dishonest_prover([eye, eye], [0.6, 0.6])
    # exactly one is allowed
    dishonest_prover([eye, eye], [0.4, 0.6])


# ---------------------------------------------------------------------------
# honest responses
# ---------------------------------------------------------------------------

def test_honest_exact_ratios_match_metric_weights():
    eta = validate_metric(ETA2)
    design = default_design()
    responses = run_prover(honest_prover(), eta, design, 10, RngStream(seed=0), exact=True)
    got = [r for r, _ in responses]
    assert np.allclose(got, HONEST_RATIOS_ETA2, atol=1e-12)
    for sigma, (ratio, _) in zip(design.input_states, responses):
        expected = float(np.trace(ETA2 @ sigma[:2, :2]).real)
        assert abs(ratio - expected) < 1e-12


def test_honest_exact_states_are_embedded_channel_outputs():
    eta = validate_metric(ETA2)
    design = default_design()
    root = eta.sqrt()
    responses = run_prover(honest_prover(), eta, design, 10, RngStream(seed=0), exact=True)
    for sigma, (ratio, state) in zip(design.input_states, responses):
        if ratio == 0.0:
            assert np.array_equal(state, np.zeros((3, 3)))
            continue
        y = root @ sigma[:2, :2] @ root
        assert np.max(np.abs(state - embed(y / np.trace(y).real))) < 1e-12
        assert abs(np.trace(state) - 1.0) < 1e-12


def test_honest_identity_metric_finite_run():
    """With eta = 1 the response is the projected input itself.

    Inputs supported on the qubit block succeed on every copy; the state
    estimate is exact because the channel is trivial there.
    """
    eta = validate_metric(np.eye(2))
    design = default_design()
    responses = run_prover(honest_prover(), eta, design, 500, RngStream(seed=11))
    qubit_supported = [0, 1, 3, 6]
    for i in qubit_supported:
        ratio, state = responses[i]
        assert ratio == 1.0
        assert np.max(np.abs(state - design.input_states[i])) < 1e-12
    # the all-|2> input never reaches the qubit block
    ratio2, state2 = responses[2]
    assert ratio2 == 0.0
    assert np.array_equal(state2, np.zeros((3, 3)))
    # half-supported inputs succeed on about half the copies
    for i in [4, 5, 7, 8]:
        ratio, state = responses[i]
        assert abs(ratio - 0.5) < 0.07
        block = design.input_states[i][:2, :2]
        assert np.max(np.abs(state - embed(block / np.trace(block).real))) < 1e-12


def test_honest_finite_ratio_concentrates():
    eta = validate_metric(ETA2)
    design = default_design()
    n = 20000
    responses = run_prover(honest_prover(), eta, design, n, RngStream(seed=5))
    ratio, _ = responses[0]
    sigma = 0.8 * math.sqrt(0.2 / n)
    assert abs(ratio - 0.8) < 4 * sigma


# ---------------------------------------------------------------------------
# dishonest responses
# ---------------------------------------------------------------------------

def test_dishonest_exact_identity_mixture():
    model = dishonest_prover([np.eye(2)], [0.5])
    eta = validate_metric(ETA2)
    design = default_design()
    responses = run_prover(model, eta, design, 10, RngStream(seed=0), exact=True)
    for sigma, (ratio, state) in zip(design.input_states, responses):
        assert abs(ratio - 0.5) < 1e-15
        assert np.max(np.abs(state - sigma)) < 1e-12


def test_dishonest_exact_matches_mixture_formula():
    rng = RngStream(seed=31)
    mats = [rng.haar_unitary(2, start=0), rng.haar_unitary(2, start=50)]
    probs = [0.3, 0.45]
    model = dishonest_prover(mats, probs)
    eta = validate_metric(ETA2)
    design = default_design()
    responses = run_prover(model, eta, design, 10, RngStream(seed=0), exact=True)
    for sigma, (ratio, state) in zip(design.input_states, responses):
        mix = np.zeros((3, 3), dtype=complex)
        for p, u in zip(probs, mats):
            w = np.eye(3, dtype=complex)
            w[:2, :2] = u
            mix += p * (w.conj().T @ sigma @ w)
        assert abs(ratio - np.trace(mix).real) < 1e-12
        assert np.max(np.abs(state - mix / np.trace(mix).real)) < 1e-12


def test_dishonest_finite_single_term():
    model = dishonest_prover([np.eye(2)], [0.6])
    eta = validate_metric(ETA2)
    design = default_design()
    n = 5000
    responses = run_prover(model, eta, design, n, RngStream(seed=17))
    sigma_ratio = 0.6 * math.sqrt(0.4 / n)
    for sigma, (ratio, state) in zip(design.input_states, responses):
        assert abs(ratio - 0.6) < 4 * sigma_ratio
        # one term only: the empirical state is the term itself
        assert np.max(np.abs(state - sigma)) < 1e-12
    again = run_prover(model, eta, design, n, RngStream(seed=17))
    for (r1, s1), (r2, s2) in zip(responses, again):
        assert r1 == r2
        assert np.array_equal(s1, s2)


def test_dishonest_finite_two_terms_is_count_mixture():
    rng = RngStream(seed=43)
    mats = [rng.haar_unitary(2, start=0), rng.haar_unitary(2, start=50)]
    probs = np.array([0.5, 0.25])
    model = dishonest_prover(mats, probs)
    eta = validate_metric(ETA2)
    design = default_design()
    n = 8000
    responses = run_prover(model, eta, design, n, RngStream(seed=3))
    terms = []
    for u in mats:
        w = np.eye(3, dtype=complex)
        w[:2, :2] = u
        terms.append(w.conj().T @ design.input_states[0] @ w)
    ratio, state = responses[0]
    assert abs(np.trace(state).real - 1.0) < 1e-12
    # recover the empirical weights by projecting onto the two terms
    basis = np.stack([t.reshape(-1) for t in terms]).T
    weights, *_ = np.linalg.lstsq(basis, state.reshape(-1), rcond=None)
    weights = weights.real
    expect = probs / probs.sum()
    sigma_w = math.sqrt(expect[0] * expect[1] / n)
    assert abs(weights[0] - expect[0]) < 5 * sigma_w
    assert abs(weights.sum() - 1.0) < 1e-10


# ---------------------------------------------------------------------------
# run_prover plumbing
# ---------------------------------------------------------------------------

def test_run_prover_validates_metric():
    design = default_design()
    with pytest.raises(DimMismatchError):
        run_prover(honest_prover(), validate_metric(np.eye(3)), design, 10, RngStream(seed=0))
    big = validate_metric(1.2 * np.eye(2))
    with pytest.raises(MetricExceedsIdentityError):
        run_prover(honest_prover(), big, design, 10, RngStream(seed=0))


def test_run_prover_thread_count_env(monkeypatch):
    eta = validate_metric(ETA2)
    design = default_design()
    monkeypatch.setenv("METRIQ_THREADS", "1")
    serial = run_prover(honest_prover(), eta, design, 300, RngStream(seed=9))
    monkeypatch.setenv("METRIQ_THREADS", "3")
    threaded = run_prover(honest_prover(), eta, design, 300, RngStream(seed=9))
    for (r1, s1), (r2, s2) in zip(serial, threaded):
        assert r1 == r2
        assert np.array_equal(s1, s2)


def test_run_prover_thread_env_rejections(monkeypatch):
    eta = validate_metric(ETA2)
    design = default_design()
    monkeypatch.setenv("METRIQ_THREADS", "two")
    with pytest.raises(MetriqError):
        run_prover(honest_prover(), eta, design, 10, RngStream(seed=0))
    monkeypatch.setenv("METRIQ_THREADS", "-1")
    with pytest.raises(MetriqError):
        run_prover(honest_prover(), eta, design, 10, RngStream(seed=0))


# ---------------------------------------------------------------------------
# reconstruction
# ---------------------------------------------------------------------------

def test_reconstruct_identity_channel():
    design = default_design()
    responses = [(1.0, s) for s in design.input_states]
    recon = reconstruct(responses, design)
    assert np.max(np.abs(recon.linear_map - np.eye(9))) < 1e-10
    v = np.eye(3, dtype=complex).reshape(-1)
    assert np.max(np.abs(recon.choi.matrix - np.outer(v, v.conj()))) < 1e-10


def test_reconstruct_exact_honest_matches_target():
    eta = validate_metric(ETA2)
    design = default_design()
    responses = run_prover(honest_prover(), eta, design, 10, RngStream(seed=0), exact=True)
    recon = reconstruct(responses, design, shots_per_input=0)
    target = superoperator(embedded_metric_channel(eta))
    assert np.max(np.abs(recon.linear_map - target)) < 1e-12
    # the recovered map reproduces the channel on states outside the design
    rng = RngStream(seed=77)
    kraus = embed(eta.sqrt())
    for i in range(10):
        psi = rng.haar_states(1, 3, start=6 * i)[0]
        rho = np.outer(psi, psi.conj())
        via_map = (recon.linear_map @ rho.reshape(-1)).reshape(3, 3)
        direct = kraus @ rho @ kraus.conj().T
        assert np.max(np.abs(via_map - direct)) < 1e-12


def test_reconstruct_choi_of_honest_target():
    eta = validate_metric(ETA2)
    design = default_design()
    responses = run_prover(honest_prover(), eta, design, 10, RngStream(seed=0), exact=True)
    recon = reconstruct(responses, design)
    choi = recon.choi.matrix
    assert abs(np.trace(choi).real - 1.6) < 1e-12
    eig = hermitian_eig(choi)
    assert eig.eigenvalues[0] > -1e-12
    assert sum(1 for lam in eig.eigenvalues if lam > 1e-10) == 1


def test_reconstruct_response_count_mismatch():
    design = default_design()
    with pytest.raises(MetriqError):
        reconstruct([(1.0, np.eye(3) / 3)] * 8, design)


def test_reconstruct_singular_design():
    from metriq.tomography import TomographyDesign

    state = default_design().input_states[0]
    bad = TomographyDesign(input_states=(state,) * 9, description="degenerate")
    with pytest.raises(SingularDesignError):
        reconstruct([(1.0, state)] * 9, bad)


def test_reconstruct_clips_choi_but_keeps_raw_map():
    """Transpose responses give a valid linear map with a non-PSD reshuffle."""
    design = default_design()
    responses = [(1.0, s.T.copy()) for s in design.input_states]
    recon = reconstruct(responses, design)
    rng = RngStream(seed=21)
    x = rng.normals(18, start=0).reshape(3, 6)
    x = x[:, :3] + 1j * x[:, 3:]
    via_map = (recon.linear_map @ x.reshape(-1)).reshape(3, 3)
    assert np.max(np.abs(via_map - x.T)) < 1e-10
    eig = hermitian_eig(recon.choi.matrix)
    assert eig.eigenvalues[0] > -1e-10
    # the raw reshuffle of the transpose map has eigenvalue -1; the clip
    # must not leak back into the distance computation
    raw = recon.linear_map.reshape(3, 3, 3, 3).transpose(2, 0, 3, 1).reshape(9, 9)
    assert hermitian_eig((raw + raw.conj().T) / 2).eigenvalues[0] < -0.9


# ---------------------------------------------------------------------------
# the (1->1) norm
# ---------------------------------------------------------------------------

def test_norm_of_zero_map():
    assert one_to_one_norm(np.zeros((9, 9))) == 0.0


def test_norm_of_identity_map():
    assert abs(one_to_one_norm(np.eye(9)) - 1.0) < 1e-9


def test_norm_of_depolarizing_difference():
    """Phi(rho) = rho - tr(rho) 1/3 has trace norm 4/3 on every pure state."""
    eye_vec = np.eye(3, dtype=complex).reshape(-1)
    depolarize = np.outer(eye_vec / 3.0, eye_vec)
    value = one_to_one_norm(np.eye(9) - depolarize)
    assert abs(value - 4.0 / 3.0) < 1e-8


def test_norm_is_absolutely_homogeneous():
    eta = validate_metric(ETA2)
    target = superoperator(embedded_metric_channel(eta))
    phi = target - np.eye(9)
    base = one_to_one_norm(phi)
    assert abs(one_to_one_norm(2.5 * phi) - 2.5 * base) < 1e-8
    assert abs(one_to_one_norm(-phi) - base) < 1e-8


def test_norm_on_game_difference_map():
    """Target minus the never-discarding identity prover, frozen value."""
    eta = validate_metric(ETA2)
    target = superoperator(embedded_metric_channel(eta))
    phi = target - np.eye(9)
    value = one_to_one_norm(phi)
    assert abs(value - 1.1547005383792526) < 1e-10
    floor = trace_norm((phi @ (np.eye(3, dtype=complex) / 3).reshape(-1)).reshape(3, 3))
    assert abs(floor - 1.4 / 3.0) < 1e-12
    assert value >= floor - 1e-12
    # comfortably above the decision threshold for this metric
    assert value >= 0.4 / 3.0


def test_norm_dominates_floor_and_sampling():
    for seed in range(5):
        rng = RngStream(seed=60 + seed)
        k1 = 0.8 * rng.haar_unitary(3, start=0)
        k2 = rng.haar_unitary(3, start=100)
        phi = superoperator(kraus_channel([k1])) - superoperator(kraus_channel([k2]))
        value = one_to_one_norm(phi)
        floor = trace_norm((phi @ (np.eye(3, dtype=complex) / 3).reshape(-1)).reshape(3, 3))
        assert value >= floor - 1e-12
        assert value >= sampled_one_to_one(phi, samples=2000) - 1e-9


def test_norm_rejects_bad_shapes():
    with pytest.raises(DimMismatchError):
        one_to_one_norm(np.zeros((9, 4)))
    with pytest.raises(DimMismatchError):
        one_to_one_norm(np.zeros((8, 8)))


# ---------------------------------------------------------------------------
# sampled oracle
# ---------------------------------------------------------------------------

def test_herm3_eigvals_against_lapack():
    rng = RngStream(seed=88)
    raw = rng.normals(1800, start=0).reshape(100, 18)
    mats = raw[:, :9].reshape(100, 3, 3) + 1j * raw[:, 9:].reshape(100, 3, 3)
    mats = (mats + mats.conj().transpose(0, 2, 1)) / 2
    ref = np.linalg.eigvalsh(mats)
    got = np.sort(_herm3_eigvals(mats), axis=1)
    assert np.max(np.abs(ref - got)) < 1e-12
    scalars = np.stack([2.5 * np.eye(3), np.zeros((3, 3))]).astype(complex)
    assert np.array_equal(_herm3_eigvals(scalars)[0], [2.5, 2.5, 2.5])
    assert np.array_equal(_herm3_eigvals(scalars)[1], [0.0, 0.0, 0.0])


def test_sampled_oracle_tracks_estimator_from_below():
    eta = validate_metric(ETA2)
    target = superoperator(embedded_metric_channel(eta))
    phi = target - np.eye(9)
    est = one_to_one_norm(phi)
    orc = sampled_one_to_one(phi, samples=20000)
    assert orc <= est + 1e-12
    assert est - orc < 1e-2


def test_sampled_oracle_matches_direct_evaluation():
    """The oracle is a plain max over a deterministic Haar sample."""
    from metriq.tomography import _ORACLE_SEED

    eta = validate_metric(ETA2)
    phi = superoperator(embedded_metric_channel(eta)) - np.eye(9)
    n = 1000
    psi = RngStream(seed=_ORACLE_SEED).haar_states(n, 3)
    best = 0.0
    for k in range(n):
        rho = np.outer(psi[k], psi[k].conj())
        out = (phi @ rho.reshape(-1)).reshape(3, 3)
        best = max(best, trace_norm((out + out.conj().T) / 2))
    got = sampled_one_to_one(phi, samples=n)
    assert abs(got - best) < 1e-12
    assert got == sampled_one_to_one(phi, samples=n)


def test_sampled_oracle_rejects_zero_samples():
    with pytest.raises(MetriqError):
        sampled_one_to_one(np.eye(9), samples=0)


# ---------------------------------------------------------------------------
# threshold and target channel
# ---------------------------------------------------------------------------

def test_threshold_examples():
    eta = validate_metric(ETA2)
    assert abs(threshold(eta) - 0.4 / 3.0) < 1e-12
    assert abs(threshold(validate_metric(np.diag([1.0, 0.7]))) - 0.1) < 1e-12


def test_threshold_rejections():
    with pytest.raises(DegenerateMetricError):
        threshold(validate_metric(np.eye(2)))
    with pytest.raises(DegenerateMetricError):
        threshold(validate_metric(np.diag([0.9, 0.9 + 5e-11])))
    with pytest.raises(DimMismatchError):
        threshold(validate_metric(np.eye(3)))


def test_embedded_metric_channel_kraus():
    eta = validate_metric(ETA2)
    ch = embedded_metric_channel(eta)
    assert ch.dim_in == 3 and ch.dim_out == 3
    assert len(ch.kraus_ops) == 1
    assert np.max(np.abs(ch.kraus_ops[0] - embed(eta.sqrt()))) < 1e-14
    with pytest.raises(DimMismatchError):
        embedded_metric_channel(validate_metric(np.eye(3)))
    with pytest.raises(MetricExceedsIdentityError):
        embedded_metric_channel(validate_metric(1.5 * np.eye(2)))


# ---------------------------------------------------------------------------
# end-to-end decision
# ---------------------------------------------------------------------------

def test_verify_exact_honest_accepts():
    eta = validate_metric(ETA2)
    design = default_design()
    responses = run_prover(honest_prover(), eta, design, 10, RngStream(seed=0), exact=True)
    report = verify(eta, reconstruct(responses, design))
    assert report.verdict == "accept"
    assert report.distance <= 1e-8
    assert abs(report.threshold - 0.4 / 3.0) < 1e-12
    assert abs(report.eta_eigenvalues[0] - 1.0) < 1e-12
    assert abs(report.eta_eigenvalues[1] - 0.6) < 1e-12


def test_verify_dishonest_identity_mixtures_reject():
    eta = validate_metric(ETA2)
    design = default_design()
    for discard in [0.0, 0.25, 0.5, 0.9]:
        model = dishonest_prover([np.eye(2)], [1.0 - discard])
        responses = run_prover(model, eta, design, 10, RngStream(seed=1), exact=True)
        report = verify(eta, reconstruct(responses, design))
        assert report.verdict == "reject"
        assert report.distance >= report.threshold
        s = 1.0 - discard
        floor = (abs(0.6 - s) + abs(1.0 - s) + s) / 3.0
        assert report.distance >= floor - 1e-10


def test_verify_finite_honest_accepts():
    eta = validate_metric(ETA2)
    design = default_design()
    for seed in [2, 12, 22]:
        responses = run_prover(honest_prover(), eta, design, 20000, RngStream(seed=seed))
        report = verify(eta, reconstruct(responses, design, shots_per_input=20000))
        assert report.verdict == "accept"
        assert report.distance < 0.02


def test_verify_shape_mismatch():
    from metriq.channels import ChoiMatrix

    eta = validate_metric(ETA2)
    bad = ReconstructedChannel(
        linear_map=np.eye(4),
        choi=ChoiMatrix(matrix=np.eye(4), dim_in=2, dim_out=2),
        shots_per_input=0,
    )
    with pytest.raises(DimMismatchError):
        verify(eta, bad)


def test_dishonest_provers_always_rejected():
    """Soundness on random metrics and random discarding mixtures."""
    design = default_design()
    for m in range(5):
        eta = make_metric(1000 + m)
        lam = eta.eig.eigenvalues
        for t in range(3):
            model, discard = random_prover(2000 + 10 * m + t)
            responses = run_prover(model, eta, design, 10, RngStream(seed=m + t), exact=True)
            report = verify(eta, reconstruct(responses, design))
            assert report.verdict == "reject"
            assert report.distance >= report.threshold - 1e-8
            s = 1.0 - discard
            floor = (abs(lam[0] - s) + abs(lam[1] - s) + s) / 3.0
            assert report.distance >= floor - 1e-8


def test_report_to_json_structure():
    eta = validate_metric(ETA2)
    design = default_design()
    responses = run_prover(honest_prover(), eta, design, 10, RngStream(seed=0), exact=True)
    report = verify(eta, reconstruct(responses, design))
    blob = report_to_json(report, shots_per_input=0, seed=42)
    assert set(blob) == {
        "distance",
        "threshold",
        "verdict",
        "eta_eigenvalues",
        "shots_per_input",
        "seed",
    }
    assert blob["verdict"] == "accept"
    assert blob["eta_eigenvalues"][0] >= blob["eta_eigenvalues"][1]
    assert blob["seed"] == 42
