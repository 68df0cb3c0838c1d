"""Command-line orchestration: simulate, recover, deconvolve, husimi, lemma,
report.

One JSON config drives everything; outputs are CSV/JSON (plus PNG figures on
the report path). With a fixed config and seed the CSV/JSON outputs are
byte-identical apart from the single generated_at line in each JSON file.
Exit codes: 0 success, 1 numerical/model failure (structured error JSON on
stdout), 2 usage or config error.
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import acceptance, plots
from .deconv import fourier_deconvolve, gaussian_differential_deconvolve
from .errors import ConfigError, PhaseMomentsError
from .hilbert import (
    ChirpedGaussianProbe,
    FockProbe,
    GaussianProbe,
    Grid,
    StateVector,
    chirped_gaussian_state,
    coherent_state,
    default_grid,
    exact_moment,
    momentum_density,
    position_density,
)
from .husimi import DensityMatrix, husimi_q, polar_nodes, reconstruct_elements
from .inference import determinacy_check, recover_moments
from .models import (
    ArthursKelly,
    BalancedHomodyne,
    EightPort,
    GeneratingOperator,
    SequentialVN,
    coefficient_table,
    detector_kernels,
    geometric_distance,
    homodyne_moment12,
    intrinsic_noise_vn,
    measured_marginal_density,
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

AXES = ("Q", "P")


# --- config ------------------------------------------------------------------

def _require(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise ConfigError(f"missing '{key}' in {context}")
    return mapping[key]


def _complex_from_pair(value, context: str) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    raise ConfigError(f"{context}: expected number or [re, im] pair, got {value!r}")


def build_state(spec: dict) -> StateVector:
    kind = _require(spec, "kind", "state")
    if kind == "fock":
        n = int(_require(spec, "n", "fock state"))
        return StateVector.fock(n, int(spec.get("dim", n + 1)))
    if kind == "coeffs":
        values = [_complex_from_pair(v, "state coeffs") for v in _require(spec, "values", "coeffs state")]
        return StateVector.normalized(values)
    if kind == "coherent":
        z = _complex_from_pair(_require(spec, "z", "coherent state"), "coherent z")
        return coherent_state(z, int(spec.get("dim", 48)))
    if kind == "chirped":
        return chirped_gaussian_state(
            float(_require(spec, "a", "chirped state")),
            float(_require(spec, "b", "chirped state")),
            int(spec.get("dim", 120)),
        )
    raise ConfigError(f"unknown state kind {kind!r}")


def build_probe(spec: dict):
    kind = _require(spec, "kind", "probe")
    if kind == "gaussian":
        return GaussianProbe(float(_require(spec, "n", "gaussian probe")))
    if kind == "chirped":
        return ChirpedGaussianProbe(float(_require(spec, "a", "chirped probe")),
                                    float(_require(spec, "b", "chirped probe")))
    if kind == "state":
        return FockProbe(build_state({"kind": "coeffs", "values": _require(spec, "values", "state probe")}))
    raise ConfigError(f"unknown probe kind {kind!r}")


def build_sigma(spec: dict) -> GeneratingOperator:
    kind = _require(spec, "kind", "sigma")
    if kind == "vacuum":
        return GeneratingOperator.vacuum()
    if kind == "fock":
        return GeneratingOperator.pure(StateVector.fock(int(_require(spec, "n", "fock sigma"))))
    if kind == "state":
        values = [_complex_from_pair(v, "sigma coeffs") for v in _require(spec, "values", "state sigma")]
        return GeneratingOperator.pure(StateVector.normalized(values))
    if kind == "mixture":
        weights = [float(w) for w in _require(spec, "weights", "mixture sigma")]
        states = [
            StateVector.normalized([_complex_from_pair(v, "sigma coeffs") for v in vals])
            for vals in _require(spec, "states", "mixture sigma")
        ]
        return GeneratingOperator.mixture(weights, states)
    raise ConfigError(f"unknown sigma kind {kind!r}")


def build_model(spec: dict):
    variant = _require(spec, "variant", "model")
    if variant == "sequential_vn":
        return SequentialVN(float(_require(spec, "lambda", "sequential_vn")),
                            build_probe(_require(spec, "probe", "sequential_vn")))
    if variant == "arthurs_kelly":
        return ArthursKelly(
            float(_require(spec, "lambda", "arthurs_kelly")),
            float(_require(spec, "mu", "arthurs_kelly")),
            build_probe(_require(spec, "probe1", "arthurs_kelly")),
            build_probe(_require(spec, "probe2", "arthurs_kelly")),
        )
    if variant == "eight_port":
        return EightPort(build_sigma(_require(spec, "sigma", "eight_port")))
    if variant == "balanced_homodyne":
        return BalancedHomodyne(float(_require(spec, "r", "balanced_homodyne")),
                                float(spec.get("theta", 0.0)))
    raise ConfigError(f"unknown model variant {variant!r}")


class Experiment:
    """Validated configuration plus derived objects."""

    def __init__(self, raw: dict, seed_override=None, out_override=None):
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a JSON object")
        self.raw = raw
        self.model = build_model(_require(raw, "model", "config"))
        self.state = build_state(_require(raw, "state", "config"))
        self.k_max = int(raw.get("k_max", 8))
        if not 0 < self.k_max <= 12:
            raise ConfigError("k_max must lie in 1..12")
        self.samples = int(raw.get("samples", 0))
        if self.samples < 0:
            raise ConfigError("samples must be nonnegative")
        self.seed = int(seed_override if seed_override is not None else raw.get("seed", 0))
        grid_spec = raw.get("grid", {}) or {}
        points = int(grid_spec.get("points", 4096))
        half_width = grid_spec.get("half_width")
        if half_width is None:
            half_width = math.sqrt(2.0 * self.state.dim) + 8.0
        self.grid = Grid.centered(float(half_width), points)
        husimi_spec = raw.get("husimi", {}) or {}
        self.husimi_r_max = float(husimi_spec.get("r_max", 4.5))
        self.husimi_r_points = int(husimi_spec.get("r_points", 96))
        self.husimi_theta_points = int(husimi_spec.get("theta_points", 64))
        outputs = out_override if out_override is not None else raw.get("outputs", "out")
        self.outdir = Path(outputs)

    def ensure_outdir(self) -> Path:
        self.outdir.mkdir(parents=True, exist_ok=True)
        return self.outdir


def load_experiment(args) -> Experiment:
    try:
        raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return Experiment(raw, seed_override=args.seed, out_override=args.out)


# --- writers -----------------------------------------------------------------

def _timestamp() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


def _json_default(obj):
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)!r}")


def write_json(path: Path, payload: dict) -> str:
    payload = dict(payload)
    payload["generated_at"] = _timestamp()
    path.write_text(
        json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n",
        encoding="utf-8",
    )
    return str(path)


def write_csv(path: Path, header: list[str], rows) -> str:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(x) for x in row) + "\n")
    return str(path)


def _cell(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


# --- commands ----------------------------------------------------------------

def cmd_simulate(exp: Experiment) -> list[str]:
    out = exp.ensure_outdir()
    written = []
    if isinstance(exp.model, BalancedHomodyne):
        m1, m2 = homodyne_moment12(exp.state, exp.model.r, exp.model.theta)
        product, ok = uncertainty_product(exp.state, exp.model.r)
        written.append(write_json(out / "moments.json", {
            "model": "balanced_homodyne",
            "r": exp.model.r,
            "theta": exp.model.theta,
            "moment1": m1,
            "moment2": m2,
            "uncertainty_product": product,
            "uncertainty_bound_ok": ok,
        }))
        return written

    grid = exp.grid
    f, g = detector_kernels(exp.model, grid)
    rho_q = position_density(exp.state, grid)
    rho_p = momentum_density(exp.state, grid)
    meas_q = measured_marginal_density(exp.model, exp.state, "Q", grid)
    meas_p = measured_marginal_density(exp.model, exp.state, "P", grid)
    written.append(write_csv(
        out / "densities.csv",
        ["x", "rho_q", "rho_p", "kernel_q", "kernel_p", "measured_q", "measured_p"],
        zip(grid.points.tolist(), rho_q.values.tolist(), rho_p.values.tolist(),
            f.values.tolist(), g.values.tolist(),
            meas_q.values.tolist(), meas_p.values.tolist()),
    ))

    payload = {
        "k_max": exp.k_max,
        "exact_moments": {ax: [exact_moment(exp.state, ax, k) for k in range(exp.k_max + 1)]
                          for ax in AXES},
        "measured_moments": {ax: measured_moments(exp.model, exp.state, ax, exp.k_max).tolist()
                             for ax in AXES},
    }
    if isinstance(exp.model, SequentialVN):
        d1 = geometric_distance(exp.model, "Q")
        d2 = geometric_distance(exp.model, "P")
        payload["geometric_distances"] = {"Q": d1, "P": d2, "product": d1 * d2}
        payload["intrinsic_noise"] = intrinsic_noise_vn(exp.model)
    written.append(write_json(out / "moments.json", payload))

    if exp.samples > 0:
        for axis, density in (("Q", meas_q), ("P", meas_p)):
            drawn = sample_outcomes(density, exp.samples, seed=exp.seed,
                                    source=f"simulate/{axis}")
            name = out / f"samples_{axis.lower()}.csv"
            drawn.write_csv(name)
            written.append(str(name))
    return written


def cmd_recover(exp: Experiment) -> list[str]:
    if isinstance(exp.model, BalancedHomodyne):
        raise ConfigError("recover needs a convolution model, not balanced_homodyne")
    out = exp.ensure_outdir()
    written = []
    table = coefficient_table(exp.model, exp.k_max)
    verdicts = {}
    for axis in AXES:
        measured = MomentSequence(measured_moments(exp.model, exp.state, axis, exp.k_max))
        recovered = recover_moments(measured, table, axis)
        exact = [exact_moment(exp.state, axis, k) for k in range(exp.k_max + 1)]
        emp = rec_emp = None
        if exp.samples > 0:
            density = measured_marginal_density(exp.model, exp.state, axis, exp.grid)
            drawn = sample_outcomes(density, exp.samples, seed=exp.seed,
                                    source=f"recover/{axis}")
            emp = empirical_moments(drawn, exp.k_max)
            rec_emp = recover_moments(emp, table, axis)
        rows = []
        for k in range(exp.k_max + 1):
            rows.append([
                k,
                float(measured.m[k]),
                float(emp.m[k]) if emp is not None else "",
                float(emp.se[k]) if emp is not None else "",
                float(recovered.m[k]),
                float(rec_emp.m[k]) if rec_emp is not None else "",
                float(rec_emp.se[k]) if rec_emp is not None else "",
                float(exact[k]),
            ])
        written.append(write_csv(
            out / f"moments_{axis.lower()}.csv",
            ["k", "measured", "empirical", "empirical_se",
             "recovered_analytic", "recovered_empirical", "recovered_se", "exact"],
            rows,
        ))
        if exp.k_max >= 6:
            verdicts[axis] = determinacy_check(recovered).to_dict()
    written.append(write_json(out / "determinacy.json", {"verdicts": verdicts}))
    return written


def cmd_deconvolve(exp: Experiment) -> list[str]:
    if isinstance(exp.model, BalancedHomodyne):
        raise ConfigError("deconvolve needs a convolution model, not balanced_homodyne")
    out = exp.ensure_outdir()
    written = []
    grid = exp.grid
    kernels = dict(zip(AXES, detector_kernels(exp.model, grid)))
    truths = {"Q": position_density(exp.state, grid), "P": momentum_density(exp.state, grid)}
    unit_gaussian_kernel = (
        isinstance(exp.model, EightPort)
        and float(np.abs(kernels["Q"].values
                         - np.exp(-grid.points**2) / math.sqrt(math.pi)).max()) < 1e-10
    )
    errors = {}
    for axis in AXES:
        measured = measured_marginal_density(exp.model, exp.state, axis, grid)
        via_fourier = fourier_deconvolve(measured, kernels[axis])
        rows = {
            "x": grid.points.tolist(),
            "truth": truths[axis].values.tolist(),
            "measured": measured.values.tolist(),
            "fourier": via_fourier.values.tolist(),
        }
        errors[axis] = {"fourier_l1": via_fourier.l1_distance(truths[axis])}
        if unit_gaussian_kernel:
            via_series = gaussian_differential_deconvolve(measured, order=20)
            rows["differential"] = via_series.values.tolist()
            errors[axis]["differential_l1"] = via_series.l1_distance(truths[axis])
            errors[axis]["route_agreement_l1"] = via_series.l1_distance(via_fourier)
        header = list(rows.keys())
        written.append(write_csv(
            out / f"densities_{axis.lower()}.csv", header,
            zip(*[rows[h] for h in header]),
        ))
    written.append(write_json(out / "errors.json", {
        "l1_errors": errors,
        "differential_route": "unit-gaussian kernel only" if unit_gaussian_kernel
        else "skipped: kernel is not the unit gaussian",
    }))
    return written


def cmd_husimi(exp: Experiment) -> list[str]:
    out = exp.ensure_outdir()
    # embed the state in a roomy basis so the polar grid stays inside coverage
    dim = max(exp.state.dim, 16)
    rho = DensityMatrix.from_state(StateVector(exp.state.padded(dim)))
    r, th = polar_nodes(exp.husimi_r_max, exp.husimi_r_points, exp.husimi_theta_points)
    q = husimi_q(rho, r, th)
    rows = []
    for i, rv in enumerate(q.r):
        for j, tv in enumerate(q.theta):
            rows.append([float(rv), float(tv), float(q.values[i, j])])
    written = [write_csv(out / "husimi_q.csv", ["r", "theta", "q"], rows)]
    elements = reconstruct_elements(q, 6)
    recon = []
    worst = 0.0
    for (i, j), value in sorted(elements.items()):
        true = complex(rho.entries[i, j])
        err = abs(value - true)
        worst = max(worst, err)
        recon.append({
            "n": i, "m": j,
            "re": value.real, "im": value.imag,
            "true_re": true.real, "true_im": true.imag,
            "abs_error": err,
        })
    written.append(write_json(out / "reconstruction.json", {
        "mass": q.mass,
        "elements": recon,
        "worst_abs_error": worst,
    }))
    return written


def cmd_lemma(exp: Experiment) -> list[str]:
    out = exp.ensure_outdir()
    spec = exp.raw.get("product_form", {}) or {}
    constructions = int(spec.get("constructions", 100))
    attempts = int(spec.get("adversarial_attempts", 1000))
    rng = np.random.default_rng(exp.seed)
    worst_commute = worst_product = 0.0
    for _ in range(constructions):
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
    search = adversarial_search(np.random.default_rng(exp.seed + 1), attempts=attempts)
    return [write_json(out / "lemma_report.json", {
        "constructions": constructions,
        "worst_commute_residual": worst_commute,
        "worst_product_residual": worst_product,
        "pass": worst_commute <= 1e-9 and worst_product <= 1e-9,
        "adversarial": search.to_dict(),
    })]


def cmd_report(exp: Experiment) -> list[str]:
    out = exp.ensure_outdir()
    spec = exp.raw.get("report", {}) or {}
    overrides = {3: {"samples": int(spec.get("samples", acceptance.STATISTICAL_SAMPLES)),
                     "seed": int(spec.get("seed", acceptance.STATISTICAL_SEED))}}
    results = acceptance.run_all(overrides)
    for res in results:
        print(res.line())
    written = [write_json(out / "report.json", {
        "all_pass": all(r.passed for r in results),
        "criteria": [
            {"id": r.cid, "title": r.title, "pass": r.passed, "details": r.details}
            for r in results
        ],
    })]
    written.append(write_csv(
        out / "report_criteria.csv",
        ["id", "title", "pass"],
        [[r.cid, r.title, "true" if r.passed else "false"] for r in results],
    ))
    written.extend(plots.render_report_figures(out))
    return written


COMMANDS = {
    "simulate": cmd_simulate,
    "recover": cmd_recover,
    "deconvolve": cmd_deconvolve,
    "husimi": cmd_husimi,
    "lemma": cmd_lemma,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phasemoments",
        description="Simulate joint smeared position/momentum measurements and "
                    "recover the sharp distributions from the statistics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to JSON config")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--out", default=None, help="override output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        exp = load_experiment(args)
        written = COMMANDS[args.command](exp)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except PhaseMomentsError as exc:
        print(json.dumps({"error": {"type": type(exc).__name__, "message": str(exc)}},
                         sort_keys=True))
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
