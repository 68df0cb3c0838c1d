"""Acceptance checks: every headline closed-form claim at its pinned tolerance.

Each criterion is a standalone function returning a CriterionResult, so the
same battery backs both the pytest acceptance module and the CLI report
command. All checks are analytic-oracle or property-based and run in well
under five minutes combined.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .deconv import fourier_deconvolve, gaussian_differential_deconvolve
from .hilbert import (
    GaussianProbe,
    Grid,
    StateVector,
    chirped_gaussian_state,
    coherent_state,
    default_grid,
    exact_moment,
    momentum_density,
    position_density,
    probe_variance,
)
from .husimi import DensityMatrix, husimi_q, polar_nodes, reconstruct_elements
from .inference import recover_moments
from .models import (
    ArthursKelly,
    EightPort,
    GeneratingOperator,
    SequentialVN,
    coefficient_table,
    detector_kernels,
    geometric_distance,
    intrinsic_noise_vn,
    measured_marginal_density,
    measured_moment,
    measured_moments,
    uncertainty_product,
)
from .povm import (
    adversarial_search,
    make_projective_product_pom,
    random_effect_resolution,
    random_projection_partition,
    verify_product_form,
)
from .sampling import MomentSequence, empirical_moments, sample_outcomes

__all__ = ["CriterionResult", "run_criterion", "run_all", "CRITERIA"]

STATISTICAL_SEED = 20260810
STATISTICAL_SAMPLES = 10**7


@dataclass
class CriterionResult:
    cid: int
    title: str
    passed: bool
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.cid}: {self.title}"


def _default_models():
    probe = GaussianProbe(1.0)
    return {
        "sequential_vn": SequentialVN(1.0, probe),
        "arthurs_kelly": ArthursKelly(1.0, 1.0, probe, probe),
        "eight_port": EightPort(GeneratingOperator.vacuum()),
    }


def _test_states():
    return {
        "fock0": StateVector.fock(0),
        "fock1": StateVector.fock(1),
        "fock2": StateVector.fock(2),
        "plus01": StateVector.normalized([1.0, 1.0]),
        "plus02": StateVector.normalized([1.0, 0.0, 1.0]),
    }


def criterion_1_distance_product() -> CriterionResult:
    """d1 * d2 = 1/pi for Gaussian probes, independent of width and coupling."""
    tol = 1e-9
    worst = 0.0
    for n in (1.0, 2.0, 5.0):
        for lam in (0.5, 1.0, 3.0):
            model = SequentialVN(lam, GaussianProbe(n))
            prod = geometric_distance(model, "Q") * geometric_distance(model, "P")
            worst = max(worst, abs(prod - 1.0 / math.pi))
    return CriterionResult(
        1,
        "geometric distance product equals 1/pi",
        worst <= tol,
        {"worst_abs_error": worst, "tolerance": tol},
    )


def criterion_2_analytic_recovery() -> CriterionResult:
    """Recovered moments equal exact moments, all models/states, k <= 8."""
    tol = 1e-8
    worst = 0.0
    for model in _default_models().values():
        table = coefficient_table(model, 8)
        for state in _test_states().values():
            for axis in ("Q", "P"):
                measured = MomentSequence(measured_moments(model, state, axis, 8))
                rec = recover_moments(measured, table, axis)
                exact = np.array([exact_moment(state, axis, k) for k in range(9)])
                worst = max(worst, float(np.abs(rec.m - exact).max()))
    return CriterionResult(
        2,
        "analytic moment recovery to 1e-8 for k <= 8",
        worst <= tol,
        {"worst_abs_error": worst, "tolerance": tol},
    )


def criterion_3_statistical_recovery(samples: int = STATISTICAL_SAMPLES,
                                     seed: int = STATISTICAL_SEED) -> CriterionResult:
    """Sampled recovery within 5 propagated standard errors, k <= 6, <= 60 s."""
    start = time.monotonic()
    model = EightPort(GeneratingOperator.vacuum())
    state = StateVector.normalized([1.0, 1.0])
    grid = default_grid(8)
    table = coefficient_table(model, 6)
    worst_pull = 0.0
    for axis in ("Q", "P"):
        density = measured_marginal_density(model, state, axis, grid)
        drawn = sample_outcomes(density, samples, seed=seed, source=f"acceptance3/{axis}")
        rec = recover_moments(empirical_moments(drawn, 6), table, axis)
        exact = np.array([exact_moment(state, axis, k) for k in range(7)])
        pulls = np.abs(rec.m[1:] - exact[1:]) / rec.se[1:]
        worst_pull = max(worst_pull, float(pulls.max()))
    elapsed = time.monotonic() - start
    return CriterionResult(
        3,
        "statistical recovery within 5 se at 1e7 samples",
        worst_pull < 5.0 and elapsed <= 60.0,
        {"worst_pull": worst_pull, "seed": seed, "samples": samples,
         "elapsed_seconds": elapsed},
    )


def criterion_4_noise_scaling() -> CriterionResult:
    """Intrinsic readout noise Var(Q0)/lam^2 equals the measured-variance excess."""
    tol = 1e-9
    probe = GaussianProbe(1.0)
    states = [StateVector.fock(1), StateVector.normalized([1.0, 0.0, 1.0])]
    worst = 0.0
    for lam in (1.0, 2.0, 4.0, 8.0):
        model = SequentialVN(lam, probe)
        noise = intrinsic_noise_vn(model)
        worst = max(worst, abs(noise - probe_variance(probe, "Q") / lam**2))
        for state in states:
            meas_var = measured_moment(model, state, "Q", 2) - measured_moment(
                model, state, "Q", 1
            ) ** 2
            true_var = exact_moment(state, "Q", 2) - exact_moment(state, "Q", 1) ** 2
            worst = max(worst, abs((meas_var - true_var) - noise))
    return CriterionResult(
        4,
        "readout noise matches measured-variance excess, lam in {1,2,4,8}",
        worst <= tol,
        {"worst_abs_error": worst, "tolerance": tol},
    )


def criterion_5_uncertainty_bounds() -> CriterionResult:
    """Homodyne variance products and the eight-port marginal bound."""
    tol_exact = 1e-12
    worst_exact = 0.0
    all_ok = True
    vac = StateVector.vacuum()
    one = StateVector.fock(1)
    for r in (1.0, 10.0, 100.0):
        prod, ok = uncertainty_product(vac, r)
        worst_exact = max(worst_exact, abs(prod - 0.25))
        all_ok &= ok
        prod, ok = uncertainty_product(one, r)
        expected = (1.5 + 0.5 / r**2) ** 2
        worst_exact = max(worst_exact, abs(prod - expected))
        all_ok &= ok and prod >= 0.25

    model = EightPort(GeneratingOperator.vacuum())

    def marginal_var_product(state):
        out = []
        for axis in ("Q", "P"):
            m1 = measured_moment(model, state, axis, 1)
            out.append(measured_moment(model, state, axis, 2) - m1 * m1)
        return out[0] * out[1]

    min_product = min(marginal_var_product(s) for s in _test_states().values())
    coherent_gap = max(
        abs(marginal_var_product(coherent_state(z, 48)) - 1.0)
        for z in (0.5, 1.2j, 2.0, -1.0 + 1.0j)
    )
    passed = (
        worst_exact <= tol_exact
        and all_ok
        and min_product >= 1.0 - 1e-9
        and coherent_gap <= 1e-6
    )
    return CriterionResult(
        5,
        "uncertainty products: homodyne closed form, eight-port bound 1",
        passed,
        {"worst_closed_form_error": worst_exact, "min_marginal_product": min_product,
         "coherent_equality_gap": coherent_gap},
    )


def criterion_6_counterexample() -> CriterionResult:
    """Conjugate chirped states: identical smeared marginals, distinct states."""
    dim = 120
    grid = Grid.centered(math.sqrt(2.0 * dim) + 8.0, 8192)
    s1 = chirped_gaussian_state(1.0, 1.0, dim, grid)
    s2 = chirped_gaussian_state(1.0, -1.0, dim, grid)
    model = EightPort(GeneratingOperator.vacuum())
    marg_gap = 0.0
    for axis in ("Q", "P"):
        d1 = measured_marginal_density(model, s1, axis, grid)
        d2 = measured_marginal_density(model, s2, axis, grid)
        marg_gap = max(marg_gap, float(np.abs(d1.values - d2.values).max()))
    r, th = polar_nodes(6.5, 128, 64)
    q1 = husimi_q(DensityMatrix.from_state(s1), r, th)
    q2 = husimi_q(DensityMatrix.from_state(s2), r, th)
    husimi_gap = float(np.abs(q1.values - q2.values).max())
    overlap = abs(s1.overlap(s2))
    passed = marg_gap <= 1e-10 and husimi_gap >= 1e-3 and overlap < 1.0
    return CriterionResult(
        6,
        "equal smeared marginals do not determine the state",
        passed,
        {"marginal_gap": marg_gap, "husimi_gap": husimi_gap, "overlap": overlap},
    )


def criterion_7_deconvolution() -> CriterionResult:
    """Fourier and derivative-series inversion of the Gaussian smearing."""
    model = EightPort(GeneratingOperator.vacuum())
    grid = default_grid(4)
    vac = StateVector.vacuum()
    kernel_q, _ = detector_kernels(model, grid)
    measured = measured_marginal_density(model, vac, "Q", grid)
    truth = position_density(vac, grid)
    l1_fourier = fourier_deconvolve(measured, kernel_q).l1_distance(truth)
    l1_diff = gaussian_differential_deconvolve(measured, order=20).l1_distance(truth)
    agreement = 0.0
    for state in (StateVector.normalized([1.0, 1.0]), StateVector.normalized([1.0, 0.0, 1.0])):
        meas = measured_marginal_density(model, state, "Q", grid)
        via_fourier = fourier_deconvolve(meas, kernel_q)
        via_series = gaussian_differential_deconvolve(meas, order=20)
        agreement = max(agreement, via_fourier.l1_distance(via_series))
    passed = l1_fourier <= 1e-3 and l1_diff <= 1e-2 and agreement <= 2e-2
    return CriterionResult(
        7,
        "deconvolution routes recover the sharp densities",
        passed,
        {"l1_fourier": l1_fourier, "l1_differential": l1_diff,
         "route_agreement": agreement},
    )


def criterion_8_husimi_round_trip() -> CriterionResult:
    """Matrix elements with 2n+k <= 6 reconstructed to 1e-3."""
    tol = 1e-3
    r, th = polar_nodes(4.5, 96, 64)
    worst = 0.0
    for vec in ([1.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0, 1.0]):
        padded = np.zeros(16, dtype=complex)
        padded[: len(vec)] = vec
        state = StateVector.normalized(padded)
        rho = DensityMatrix.from_state(state)
        q = husimi_q(rho, r, th)
        for (i, j), value in reconstruct_elements(q, 6).items():
            worst = max(worst, abs(value - rho.entries[i, j]))
    return CriterionResult(
        8,
        "Husimi radial-derivative round trip to 1e-3",
        worst <= tol,
        {"worst_elementwise_error": worst, "tolerance": tol},
    )


def criterion_9_product_form(seed: int = 99) -> CriterionResult:
    """Projective-marginal joints factorize; adversarial search finds nothing."""
    rng = np.random.default_rng(seed)
    worst_commute = worst_product = 0.0
    for _ in range(100):
        dim = int(rng.integers(2, 5))
        blocks = int(rng.integers(2, min(4, dim) + 1))
        outcomes = int(rng.integers(2, 5))
        pom = make_projective_product_pom(
            random_projection_partition(dim, blocks, rng),
            random_effect_resolution(dim, outcomes, rng),
        )
        rep = verify_product_form(pom)
        worst_commute = max(worst_commute, rep.commute_residual)
        worst_product = max(worst_product, rep.product_residual)
    search = adversarial_search(np.random.default_rng(seed + 1), attempts=1000)
    passed = (
        worst_commute <= 1e-9
        and worst_product <= 1e-9
        and search.counterexamples == 0
    )
    return CriterionResult(
        9,
        "projective-marginal factorization: 100 constructions + search",
        passed,
        {"worst_commute_residual": worst_commute,
         "worst_product_residual": worst_product,
         "search": {k: v for k, v in search.to_dict().items() if k != "failures"}},
    )


def criterion_10_coupling_convergence() -> CriterionResult:
    """|measured m2 - exact m2| follows the exact 1/lam^2 law (ratio 4)."""
    tol = 1e-6
    probe = GaussianProbe(1.0)
    state = StateVector.normalized([1.0, 1.0])
    errors = []
    for lam in (1.0, 2.0, 4.0, 8.0, 16.0):
        model = SequentialVN(lam, probe)
        errors.append(abs(measured_moment(model, state, "Q", 2) - exact_moment(state, "Q", 2)))
    ratios = [errors[i] / errors[i + 1] for i in range(len(errors) - 1)]
    worst = max(abs(r - 4.0) for r in ratios)
    return CriterionResult(
        10,
        "second-moment error quarters when the coupling doubles",
        worst <= tol,
        {"errors": errors, "ratios": ratios, "tolerance": tol},
    )


CRITERIA = {
    1: criterion_1_distance_product,
    2: criterion_2_analytic_recovery,
    3: criterion_3_statistical_recovery,
    4: criterion_4_noise_scaling,
    5: criterion_5_uncertainty_bounds,
    6: criterion_6_counterexample,
    7: criterion_7_deconvolution,
    8: criterion_8_husimi_round_trip,
    9: criterion_9_product_form,
    10: criterion_10_coupling_convergence,
}


def run_criterion(cid: int, **kwargs) -> CriterionResult:
    return CRITERIA[cid](**kwargs)


def run_all(overrides: dict | None = None) -> list[CriterionResult]:
    """Run every criterion; ``overrides`` maps criterion id to kwargs."""
    overrides = overrides or {}
    return [CRITERIA[cid](**overrides.get(cid, {})) for cid in sorted(CRITERIA)]
