"""The verification game between a verifier and a metric-channel prover.

The verifier hands the prover a fixed informationally complete set of nine
qutrit pure states, collects per-input success ratios and returned states,
reconstructs the prover's process by linear inversion, and accepts exactly
when the reconstruction is within D_th = (lambda_1 - lambda_2)/3 of the
target channel rho -> (eta^{1/2} + 0) rho (eta^{1/2} + 0) in the induced
(1->1) norm. An honest prover realizes the target through the dilation
procedure; the modeled dishonest prover mixes embedded qubit unitaries
(U + 1) and discards copies, and always lands at least D_th away.

The (1->1) norm of a Hermiticity-preserving map is attained on pure states,
and for a fixed input the trace norm is linear in the dual observable; the
estimator below alternates between the optimal observable for the current
state and the optimal state for the current observable, from many
deterministic starting points, and never returns less than the analytic
floor ||Phi(I/d)||_tr.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channels import ChoiMatrix, KrausChannel, kraus_channel, superoperator
from .dilation import embed
from .errors import (
    DegenerateMetricError,
    DimMismatchError,
    MetricExceedsIdentityError,
    MetriqError,
    SingularDesignError,
)
from .hilbert import MetricOperator, validate_density
from .linalg import as_matrix, hermitian_eig, trace_norm
from .montecarlo import simulate_g_eta
from .rng import RngStream

_ZERO_BLOCK_CUTOFF = 1e-12
_NORM_STARTS = 64
_NORM_SEED = 0x315A7C0FFEE
_NORM_TOL = 1e-8
_NORM_MAX_ITERS = 150


# ---------------------------------------------------------------------------
# input design
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TomographyDesign:
    input_states: tuple
    description: str


def default_design() -> TomographyDesign:
    """Nine pure qutrit states spanning the full operator space.

    Order: the three basis states |0>, |1>, |2>; the three equal
    superpositions (|j> + |k>)/sqrt2 for j < k; the three phased ones
    (|j> + i|k>)/sqrt2 for j < k.
    """
    kets = []
    basis = np.eye(3, dtype=complex)
    for j in range(3):
        kets.append(basis[j])
    pairs = [(0, 1), (0, 2), (1, 2)]
    for j, k in pairs:
        kets.append((basis[j] + basis[k]) / math.sqrt(2.0))
    for j, k in pairs:
        kets.append((basis[j] + 1j * basis[k]) / math.sqrt(2.0))
    states = tuple(np.outer(v, v.conj()) for v in kets)
    return TomographyDesign(
        input_states=states,
        description="basis states plus pairwise equal and i-phased superpositions",
    )


# ---------------------------------------------------------------------------
# prover models
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ProverModel:
    kind: str
    unitaries: tuple
    probs: tuple


def honest_prover() -> ProverModel:
    return ProverModel(kind="honest", unitaries=(), probs=())


def dishonest_prover(unitaries, probs) -> ProverModel:
    """A mixture of embedded qubit unitaries with a discard probability.

    The channel is sigma -> sum_j p_j (U_j + 1)^dagger sigma (U_j + 1),
    applied with probability sum p_j per copy and discarding otherwise.
    """
    mats = tuple(as_matrix(u) for u in unitaries)
    ps = tuple(float(p) for p in probs)
    if len(mats) != len(ps) or not mats:
        raise MetriqError("need one probability per unitary, at least one of each")
    for u in mats:
        if u.shape != (2, 2):
            raise DimMismatchError(f"dishonest unitaries act on the qubit block, got {u.shape}")
        if np.max(np.abs(u.conj().T @ u - np.eye(2))) > 1e-10:
            raise MetriqError("dishonest prover operators must be unitary")
    for p in ps:
        if p < 0.0:
            raise MetriqError(f"mixture probability {p:.6g} is negative")
    total = sum(ps)
    if total <= 1e-12:
        raise MetriqError("mixture probabilities sum to zero; the prover never responds")
    if total > 1.0 + 1e-12:
        raise MetriqError(f"mixture probabilities sum to {total:.12g} > 1")
    return ProverModel(kind="dishonest", unitaries=mats, probs=ps)


def _embed_unitary(u: np.ndarray) -> np.ndarray:
    out = np.eye(3, dtype=complex)
    out[:2, :2] = u
    return out


def _honest_response(eta, sigma, n, rng, exact):
    block = sigma[:2, :2]
    if float(np.trace(block).real) < _ZERO_BLOCK_CUTOFF:
        # the metric channel annihilates inputs outside the qubit block
        return 0.0, np.zeros((3, 3), dtype=complex)
    if exact:
        root = eta.sqrt()
        y = root @ block @ root
        ratio = float(np.trace(y).real)
        return ratio, embed(y / ratio)
    rec = simulate_g_eta(eta, block, n, rng)
    return rec.success_ratio, rec.output_state_estimate


_SAMPLE_CHUNK = 1 << 16


def _dishonest_response(model, sigma, n, rng, exact):
    probs = np.array(model.probs)
    terms = []
    for u in model.unitaries:
        w = _embed_unitary(u)
        terms.append(w.conj().T @ sigma @ w)
    terms = np.array(terms)
    if exact:
        mix = np.tensordot(probs, terms, axes=1)
        ratio = float(np.trace(mix).real)
        return ratio, mix / ratio

    cum = np.cumsum(probs)
    counts = np.zeros(len(probs), dtype=np.int64)
    total = 0
    succ = 0
    base = 0
    while succ < n:
        u = rng.uniforms(_SAMPLE_CHUNK, start=base)
        idx = np.searchsorted(cum, u, side="right")
        hits = idx < len(probs)
        hit_cum = np.cumsum(hits)
        need = n - succ
        if hit_cum[-1] >= need:
            stop = int(np.searchsorted(hit_cum, need))
            sel = idx[: stop + 1]
            counts += np.bincount(sel[sel < len(probs)], minlength=len(probs))
            total += stop + 1
            succ = n
        else:
            counts += np.bincount(idx[hits], minlength=len(probs))
            total += _SAMPLE_CHUNK
            succ += int(hit_cum[-1])
        base += _SAMPLE_CHUNK
    state = np.tensordot(counts / float(n), terms, axes=1)
    return n / total, state


def _worker_count(n_items: int) -> int:
    raw = os.environ.get("METRIQ_THREADS", "0")
    try:
        value = int(raw)
    except ValueError:
        raise MetriqError(f"METRIQ_THREADS must be an integer, got {raw!r}") from None
    if value < 0:
        raise MetriqError("METRIQ_THREADS must be >= 0 (0 means auto)")
    if value == 0:
        value = os.cpu_count() or 1
    return max(1, min(value, n_items))


def run_prover(
    model: ProverModel,
    eta: MetricOperator,
    design: TomographyDesign,
    n: int,
    rng: RngStream,
    exact: bool = False,
) -> list:
    """Collect (success_ratio, returned_state) for every design input.

    Each input gets its own derived random stream, so results do not depend
    on execution order; METRIQ_THREADS > 1 fans the inputs out over a
    thread pool.
    """
    if eta.dim != 2:
        raise DimMismatchError(f"the game is played over a qubit metric, got dim {eta.dim}")
    if not eta.subidentity:
        raise MetricExceedsIdentityError(f"metric norm {eta.norm:.12g} > 1")
    inputs = [validate_density(s, dim=3) for s in design.input_states]

    def one(i):
        sub_rng = rng.derive(i)
        if model.kind == "honest":
            return _honest_response(eta, inputs[i], n, sub_rng, exact)
        return _dishonest_response(model, inputs[i], n, sub_rng, exact)

    workers = _worker_count(len(inputs))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, range(len(inputs))))
    return [one(i) for i in range(len(inputs))]


# ---------------------------------------------------------------------------
# reconstruction
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ReconstructedChannel:
    linear_map: np.ndarray
    choi: ChoiMatrix
    shots_per_input: int


def reconstruct(responses, design: TomographyDesign, shots_per_input: int = 0) -> ReconstructedChannel:
    """Linear inversion of the prover's responses.

    The unnormalized outputs ratio_i * state_i are fitted by least squares
    to a single linear map on vectorized operators. The Choi matrix is kept
    in two forms: the raw linear map (used for the distance, where clipping
    would bias the verdict) and an eigenvalue-clipped PSD Choi for
    downstream consumers that need complete positivity.
    """
    inputs = design.input_states
    if len(responses) != len(inputs):
        raise MetriqError(f"got {len(responses)} responses for {len(inputs)} inputs")
    a = np.stack([np.asarray(s, dtype=complex).reshape(-1) for s in inputs])
    b = np.stack(
        [float(r) * np.asarray(s, dtype=complex).reshape(-1) for r, s in responses]
    )
    solution, _, rank, _ = np.linalg.lstsq(a, b, rcond=None)
    if rank < a.shape[1]:
        raise SingularDesignError(
            f"design spans rank {rank} < {a.shape[1]}; cannot invert"
        )
    linear_map = solution.T

    # reshuffle map indices into Choi indices: C[(i,a),(j,b)] = Phi(E_ij)[a,b]
    d = design.input_states[0].shape[0]
    choi_raw = linear_map.reshape(d, d, d, d).transpose(2, 0, 3, 1).reshape(d * d, d * d)
    choi_h = (choi_raw + choi_raw.conj().T) / 2.0
    eig = hermitian_eig(choi_h)
    if eig.eigenvalues[0] < -1e-8:
        clipped = np.clip(eig.eigenvalues, 0.0, None)
        v = eig.eigenvectors
        choi_h = (v * clipped) @ v.conj().T
    return ReconstructedChannel(
        linear_map=linear_map,
        choi=ChoiMatrix(matrix=choi_h, dim_in=d, dim_out=d),
        shots_per_input=int(shots_per_input),
    )


# ---------------------------------------------------------------------------
# the (1->1) distance and the decision
# ---------------------------------------------------------------------------

def _superop_dim(superop: np.ndarray) -> int:
    if superop.shape[0] != superop.shape[1]:
        raise DimMismatchError(f"superoperator must be square, got {superop.shape}")
    d = math.isqrt(superop.shape[0])
    if d * d != superop.shape[0]:
        raise DimMismatchError(f"superoperator side {superop.shape[0]} is not a square")
    return d


def one_to_one_norm(superop) -> float:
    """max over pure states of ||Phi(|psi><psi|)||_tr for Hermiticity-preserving Phi.

    Alternating maximization from 64 deterministic Haar starts. Each round
    picks the optimal trace-norm observable S = sign(Phi(psi psi*)) and then
    the best state for S, which is the top eigenvector of the pulled-back
    observable; the objective is nondecreasing, and iteration stops when
    every start is first-order stationary within 1e-8. The returned value is
    floored at ||Phi(I/d)||_tr, which the maximum always dominates.
    """
    lmap = as_matrix(superop)
    d = _superop_dim(lmap)

    eye_vec = (np.eye(d, dtype=complex) / d).reshape(-1)
    floor = trace_norm((lmap @ eye_vec).reshape(d, d))

    rng = RngStream(seed=_NORM_SEED)
    psi = rng.haar_states(_NORM_STARTS, d)
    adjoint = lmap.conj().T

    values = np.zeros(_NORM_STARTS)
    for _ in range(_NORM_MAX_ITERS):
        outer = psi[:, :, None] * psi.conj()[:, None, :]
        a = (lmap @ outer.reshape(_NORM_STARTS, d * d).T).T.reshape(_NORM_STARTS, d, d)
        a = (a + a.conj().transpose(0, 2, 1)) / 2.0
        lam, vec = np.linalg.eigh(a)
        values = np.abs(lam).sum(axis=1)
        sign = np.sign(lam)
        s = (vec * sign[:, None, :]) @ vec.conj().transpose(0, 2, 1)
        m = (adjoint @ s.reshape(_NORM_STARTS, d * d).T).T.reshape(_NORM_STARTS, d, d)
        m = (m + m.conj().transpose(0, 2, 1)) / 2.0

        grad = np.einsum("kab,kb->ka", m, psi)
        rayleigh = np.einsum("ka,ka->k", psi.conj(), grad).real
        resid = np.linalg.norm(grad - rayleigh[:, None] * psi, axis=1)
        if np.max(resid) <= _NORM_TOL:
            break
        _, mvec = np.linalg.eigh(m)
        psi = mvec[:, :, -1]
    else:
        # iteration cap: refresh the objective at the last iterate
        outer = psi[:, :, None] * psi.conj()[:, None, :]
        a = (lmap @ outer.reshape(_NORM_STARTS, d * d).T).T.reshape(_NORM_STARTS, d, d)
        a = (a + a.conj().transpose(0, 2, 1)) / 2.0
        values = np.abs(np.linalg.eigvalsh(a)).sum(axis=1)

    return float(max(values.max(), floor))


def _herm3_eigvals(a: np.ndarray) -> np.ndarray:
    """Eigenvalues of a batch of Hermitian 3x3 matrices, closed form.

    The trigonometric form of the cubic characteristic equation; adequate
    for bulk sampling where a relative 1e-12 suffices and LAPACK call
    overhead dominates.
    """
    tr = np.einsum("kii->k", a).real
    q = tr / 3.0
    d00 = a[:, 0, 0].real - q
    d11 = a[:, 1, 1].real - q
    d22 = a[:, 2, 2].real - q
    off = (
        np.abs(a[:, 0, 1]) ** 2 + np.abs(a[:, 0, 2]) ** 2 + np.abs(a[:, 1, 2]) ** 2
    )
    p2 = d00**2 + d11**2 + d22**2 + 2.0 * off
    p = np.sqrt(p2 / 6.0)
    safe = p > 1e-300
    ps = np.where(safe, p, 1.0)

    b = (a - q[:, None, None] * np.eye(3)) / ps[:, None, None]
    det = (
        b[:, 0, 0] * (b[:, 1, 1] * b[:, 2, 2] - b[:, 1, 2] * b[:, 2, 1])
        - b[:, 0, 1] * (b[:, 1, 0] * b[:, 2, 2] - b[:, 1, 2] * b[:, 2, 0])
        + b[:, 0, 2] * (b[:, 1, 0] * b[:, 2, 1] - b[:, 1, 1] * b[:, 2, 0])
    ).real
    phi = np.arccos(np.clip(det / 2.0, -1.0, 1.0)) / 3.0

    e1 = q + 2.0 * p * np.cos(phi)
    e3 = q + 2.0 * p * np.cos(phi + 2.0 * np.pi / 3.0)
    e2 = 3.0 * q - e1 - e3
    out = np.stack([e1, e2, e3], axis=1)
    return np.where(safe[:, None], out, q[:, None] * np.ones((1, 3)))


_ORACLE_SEED = 0xB07E57A7E5
_ORACLE_CHUNK = 1 << 17


def sampled_one_to_one(superop, samples: int = 1_000_000, seed: int = _ORACLE_SEED) -> float:
    """Brute-force statistical lower estimate of the (1->1) norm.

    Takes the max of ||Phi(|psi><psi|)||_tr over Haar-random pure states.
    Converges to the true norm from below as samples grow; used to
    cross-validate the iterative estimator, not to replace it.
    """
    lmap = as_matrix(superop)
    d = _superop_dim(lmap)
    if samples < 1:
        raise MetriqError("need at least one sample")
    rng = RngStream(seed=seed)
    best = 0.0
    done = 0
    while done < samples:
        count = min(_ORACLE_CHUNK, samples - done)
        psi = rng.haar_states(count, d, start=2 * d * done)
        outer = psi[:, :, None] * psi.conj()[:, None, :]
        out = (lmap @ outer.reshape(count, d * d).T).T.reshape(count, d, d)
        out = (out + out.conj().transpose(0, 2, 1)) / 2.0
        if d == 3:
            vals = np.abs(_herm3_eigvals(out)).sum(axis=1)
        else:
            vals = np.abs(np.linalg.eigvalsh(out)).sum(axis=1)
        best = max(best, float(vals.max()))
        done += count
    return best


def threshold(eta: MetricOperator) -> float:
    """(lambda_1 - lambda_2)/3 for a qubit metric with distinct eigenvalues."""
    if eta.dim != 2:
        raise DimMismatchError(f"threshold is defined for qubit metrics, got dim {eta.dim}")
    lam = eta.eig.eigenvalues
    gap = float(lam[-1] - lam[0])
    if gap <= 1e-10:
        raise DegenerateMetricError(
            f"metric eigenvalue gap {gap:.3e} too small; the game is undecidable"
        )
    return gap / 3.0


def embedded_metric_channel(eta: MetricOperator) -> KrausChannel:
    """The verification target: Kraus operator eta^{1/2} + 0 on the qutrit."""
    if eta.dim != 2:
        raise DimMismatchError(f"expected a qubit metric, got dim {eta.dim}")
    if not eta.subidentity:
        raise MetricExceedsIdentityError(f"metric norm {eta.norm:.12g} > 1")
    return kraus_channel([embed(eta.sqrt())])


@dataclass(frozen=True, eq=False)
class VerificationReport:
    distance: float
    threshold: float
    verdict: str
    eta_eigenvalues: tuple


def verify(eta: MetricOperator, recon: ReconstructedChannel) -> VerificationReport:
    """Compare the reconstruction to the target channel and decide."""
    th = threshold(eta)
    target = superoperator(embedded_metric_channel(eta))
    if recon.linear_map.shape != target.shape:
        raise DimMismatchError(
            f"reconstruction shape {recon.linear_map.shape} != {target.shape}"
        )
    distance = one_to_one_norm(target - recon.linear_map)
    lam = eta.eig.eigenvalues
    return VerificationReport(
        distance=distance,
        threshold=th,
        verdict="accept" if distance <= th else "reject",
        eta_eigenvalues=(float(lam[-1]), float(lam[0])),
    )


def report_to_json(report: VerificationReport, shots_per_input: int, seed: int) -> dict:
    return {
        "distance": report.distance,
        "threshold": report.threshold,
        "verdict": report.verdict,
        "eta_eigenvalues": [report.eta_eigenvalues[0], report.eta_eigenvalues[1]],
        "shots_per_input": int(shots_per_input),
        "seed": int(seed),
    }
