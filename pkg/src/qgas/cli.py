"""Command-line scenario runner, reproduction harness and parameter sweeps.

Exit codes: 0 success, 1 partial sweep failure, 2 configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Sequence

import jsonschema
import numpy as np
from referencing import Registry, Resource

from . import io as qio
from .channels import ExperimentConfig, oat_prepare, run_experiment
from .dicke import (
    DEFAULT_CONVENTION,
    JZ_CONVENTIONS,
    DickeKet,
    cat_state_analytic,
    optimal_state,
    polarized_state,
)
from .distributions import Panel, figure_data
from .feasibility import (
    AMU,
    REFERENCE_N_MIN,
    RB87_MASS,
    PhysicalConfig,
    alpha_magnitude,
    feasibility_report,
    kappa_monte_carlo,
    minimum_atom_number,
    peak_density,
)
from .fisher import (
    FIGURE_OFFSET,
    ParameterId,
    SingularFisherError,
    _base_value,
    _shifted,
    cfi_for_config,
    crb_invert,
    decoupling_report,
    parse_params,
    prob_derivatives_analytic,
    prob_derivatives_fd,
    qfi_parameters,
)

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
FD_STEP = 1e-7
DEFAULT_REPETITIONS = 100_000

log = logging.getLogger("qgas")


class ConfigError(ValueError):
    """Invalid user input; the message starts with the offending field."""


# ---------------------------------------------------------------------------
# Schemas
# ---------------------------------------------------------------------------


def load_schema(name: str) -> dict:
    text = resources.files("qgas.schemas").joinpath(f"{name}.schema.json").read_text()
    return json.loads(text)


def _registry() -> Registry:
    resources_ = [Resource.from_contents(load_schema(n)) for n in ("scenario", "sweep")]
    return Registry().with_resources((r.id(), r) for r in resources_)


def validate(doc, schema_name: str, where: str = "", ref: str | None = None) -> None:
    schema = {"$ref": f"urn:qgas:{schema_name}#{ref}"} if ref else load_schema(schema_name)
    validator = jsonschema.Draft202012Validator(schema, registry=_registry())
    error = jsonschema.exceptions.best_match(validator.iter_errors(doc))
    if error is not None:
        path = "/".join(str(p) for p in error.absolute_path)
        field = ".".join(x for x in (where, path.replace("/", ".")) if x) or "<root>"
        raise ConfigError(f"{field}: {error.message}")


def _read_json(path: Path, what: str):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"{what}: cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what}: {path} is not valid JSON ({exc})") from None


# ---------------------------------------------------------------------------
# Scenario model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Scenario:
    experiment: ExperimentConfig
    physical: PhysicalConfig | None
    outputs: tuple[dict, ...]
    initial: DickeKet | None
    initial_label: str
    seed: int


def _convention(override: str | None, doc: dict, experiment: dict) -> str:
    return override or doc.get("convention") or experiment.get("convention") or DEFAULT_CONVENTION


def build_experiment(data: dict, convention: str) -> ExperimentConfig:
    try:
        return ExperimentConfig.from_json({**data, "convention": convention})
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"experiment: {exc}") from None


def build_physical(data: dict | None) -> PhysicalConfig | None:
    if data is None:
        return None
    values = {k: float(v) for k, v in data.items()}
    values.setdefault("separation", 10 * values["sigma"])
    try:
        return PhysicalConfig(**values)
    except ValueError as exc:
        raise ConfigError(f"physical: {exc}") from None


def _initial_state(spec, n: int, base_dir: Path) -> tuple[DickeKet | None, str]:
    if spec is None or spec == "polarized":
        return None, "polarized"
    try:
        if spec == "optimal":
            return optimal_state(n), "optimal"
        if spec == "cat":
            return cat_state_analytic(n), "cat"
    except ValueError as exc:
        raise ConfigError(f"initial_state: {exc}") from None
    if "file" in spec:
        path = base_dir / spec["file"]
        snap = _read_json(path, "initial_state.file")
        validate(snap, "scenario", "initial_state.file", ref="/$defs/snapshot")
        label = f"file:{Path(spec['file']).name}"
    else:
        snap, label = spec, "snapshot"
    try:
        ket = DickeKet.from_json(snap)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"initial_state: {exc}") from None
    if ket.n != n:
        raise ConfigError(f"initial_state.n: snapshot has n={ket.n}, experiment has n={n}")
    return ket, label


def load_scenario(path: Path, convention: str | None = None) -> Scenario:
    doc = _read_json(path, "scenario")
    validate(doc, "scenario")
    conv = _convention(convention, doc, doc["experiment"])
    exp = build_experiment(doc["experiment"], conv)
    initial, label = _initial_state(doc.get("initial_state"), exp.n, Path(path).parent)
    return Scenario(exp, build_physical(doc.get("physical")), tuple(doc["outputs"]), initial, label, doc.get("seed", 0))


# ---------------------------------------------------------------------------
# Products
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunContext:
    out: Path
    fd_check: bool = False


def offset_zero_params(config: ExperimentConfig, params, offset: float) -> ExperimentConfig:
    """Shift every listed parameter sitting exactly at 0 to ``offset``; set values are kept."""
    if not offset:
        return config
    for p in parse_params(params):
        if _base_value(config, p) == 0:
            config = _shifted(config, p, offset)
    return config


def _meta(config: ExperimentConfig, spec: dict, extra: dict | None = None) -> dict:
    meta = dict(extra or {})
    meta.update(
        n=config.n,
        convention=config.convention,
        recombiner=config.recombiner,
        config_hash=qio.config_hash({"experiment": config.to_json(), "output": spec}),
    )
    return meta


def write_panels(panels: Sequence[Panel], out: Path, config_doc: dict, convention: str, n: int) -> list[Path]:
    files = []
    for p in panels:
        meta = {
            "figure": p.figure,
            "panel": p.panel,
            "description": p.description,
            "n": n,
            "convention": convention,
            "config_hash": qio.config_hash({"figure": p.figure, "panel": p.panel, "config": config_doc}),
        }
        files.append(qio.write_csv(out / p.filename, p.columns, meta, p.notes))
    return files


def _fd_notes(base: ExperimentConfig, params, pd, initial) -> list[str]:
    fd = prob_derivatives_fd(base, params, step=FD_STEP, initial=initial)
    return [
        f"finite-difference max deviation {p.value}: {float(np.abs(fd.column(p) - pd.column(p)).max()):.3e}"
        for p in pd.params
    ]


def _product_distribution(sc: Scenario, spec: dict, ctx: RunContext) -> list[Path]:
    cfg = sc.experiment
    probs = run_experiment(cfg, sc.initial).probabilities()
    cols = {"m": np.arange(cfg.n + 1) - cfg.n / 2, "P": probs}
    meta = _meta(cfg, spec, {"initial_state": sc.initial_label})
    return [qio.write_csv(ctx.out / "distribution.csv", cols, meta)]


def _product_derivatives(sc: Scenario, spec: dict, ctx: RunContext) -> list[Path]:
    params = parse_params(spec.get("params", [p.value for p in ParameterId]))
    base = offset_zero_params(sc.experiment, params, spec.get("offset", 0.0))
    pd = prob_derivatives_analytic(base, params, sc.initial)
    cols = {"m": pd.m, "P": pd.probs}
    for p in ParameterId:  # fixed column order
        if p in params:
            cols[p.column] = pd.column(p)
    notes = _fd_notes(base, params, pd, sc.initial) if ctx.fd_check else []
    meta = _meta(base, spec, {"initial_state": sc.initial_label})
    return [qio.write_csv(ctx.out / "derivatives.csv", cols, meta, notes)]


def _product_cfi(sc: Scenario, spec: dict, ctx: RunContext) -> list[Path]:
    params = parse_params(spec.get("params", ["alpha", "beta"]))
    base = offset_zero_params(sc.experiment, params, spec.get("offset", FIGURE_OFFSET))
    fm = cfi_for_config(base, params, initial=sc.initial)
    doc = {
        "fisher": fm.to_json(),
        "diagnostics": fm.diagnostics,
        "base_point": {p.value: _base_value(base, p) for p in params},
        "convention": base.convention,
        "config_hash": _meta(base, spec)["config_hash"],
    }
    path = ctx.out / "cfi.json"
    try:
        doc["crb"] = crb_invert(fm, spec.get("repetitions", 1), spec.get("allow_pinv", False)).to_json()
    except SingularFisherError as exc:
        doc["crb"] = None
        doc["error"] = {"kind": "singular_fisher", "directions": exc.directions}
        qio.write_json(path, doc)
        raise
    return [qio.write_json(path, doc)]


def _qfi_state(label: str, sc: Scenario) -> DickeKet:
    n = sc.experiment.n
    try:
        if label == "optimal":
            return optimal_state(n)
        if label == "cat":
            return cat_state_analytic(n)
    except ValueError as exc:
        raise ConfigError(f"outputs.qfi.state: {exc}") from None
    return oat_prepare(sc.initial or polarized_state(n), sc.experiment.twisting)


def _product_qfi(sc: Scenario, spec: dict, ctx: RunContext) -> list[Path]:
    label = spec.get("state", "prepared")
    params = parse_params(spec.get("params", ["alpha", "beta"]))
    fm = qfi_parameters(_qfi_state(label, sc), params, sc.experiment.convention)
    doc = {
        "state": label,
        "fisher": fm.to_json(),
        "convention": sc.experiment.convention,
        "config_hash": _meta(sc.experiment, spec)["config_hash"],
    }
    return [qio.write_json(ctx.out / f"qfi_{label}.json", doc)]


def _product_decoupling(sc: Scenario, spec: dict, ctx: RunContext) -> list[Path]:
    params = parse_params(spec.get("params", [p.value for p in ParameterId]))
    base = offset_zero_params(sc.experiment, params, spec.get("offset", FIGURE_OFFSET))
    fm = cfi_for_config(base, params, initial=sc.initial)
    rows = decoupling_report(base, params, spec.get("threshold", 0.01), fisher=fm)
    doc = {
        "recombiner": base.recombiner,
        "threshold": spec.get("threshold", 0.01),
        "rows": [{"param": r.param.value, "ratio": r.ratio, "correlation": r.correlation, "flagged": r.flagged} for r in rows],
        "fisher": fm.to_json(),
        "config_hash": _meta(base, spec)["config_hash"],
    }
    return [qio.write_json(ctx.out / "decoupling.json", doc)]


def _product_figure(sc: Scenario, spec: dict, ctx: RunContext) -> list[Path]:
    cfg = sc.experiment
    overrides = {"chi_tau": cfg.twisting.chi_tau, "convention": cfg.convention, "fd_check": ctx.fd_check}
    overrides.update(spec.get("overrides", {}))
    try:
        panels = figure_data(spec["figure"], cfg.n, overrides)
    except ValueError as exc:
        raise ConfigError(f"outputs.figure ({spec['figure']}): {exc}") from None
    config_doc = {"n": cfg.n, "overrides": overrides}
    return write_panels(panels, ctx.out, config_doc, cfg.convention, cfg.n)


def feasibility_document(config: PhysicalConfig, seed: int = 0, mc_samples: int = 0) -> dict:
    doc = feasibility_report(config).to_json()
    doc["config"] = config.to_json()
    doc["config_display"] = {
        "mass_amu": config.mass / AMU,
        "sigma_um": config.sigma * 1e6,
        "separation_um": config.separation * 1e6,
        "time_s": config.time,
        "repetitions": config.repetitions,
    }
    doc["n_min_within_factor_2_of_reference"] = bool(0.5 <= doc["n_min"] / REFERENCE_N_MIN <= 2)
    if mc_samples:
        est = kappa_monte_carlo(config, "a", "a", samples=mc_samples, seed=seed)
        doc["kappa_aa_monte_carlo"] = {"value": est.value, "stderr": est.stderr, "samples": est.samples, "seed": est.seed}
    return doc


def _product_feasibility(sc: Scenario, spec: dict, ctx: RunContext) -> list[Path]:
    if sc.physical is None:
        raise ConfigError("physical: a feasibility output needs a 'physical' section")
    doc = feasibility_document(sc.physical, sc.seed, spec.get("mc_samples", 0))
    return [qio.write_json(ctx.out / "feasibility.json", doc)]


def _product_state(sc: Scenario, spec: dict, ctx: RunContext) -> list[Path]:
    stage = spec.get("stage", "final")
    cfg = sc.experiment
    initial = sc.initial or polarized_state(cfg.n)
    if stage == "initial":
        ket = initial
    elif stage == "prepared":
        ket = oat_prepare(initial, cfg.twisting)
    else:
        if cfg.dephasing:
            raise ConfigError("outputs.state.stage: a final-state snapshot needs a pure state (remove dephasing)")
        ket = run_experiment(cfg, initial)
    return [qio.write_json(ctx.out / f"state_{stage}.json", ket.to_json())]


PRODUCTS: dict[str, Callable[[Scenario, dict, RunContext], list[Path]]] = {
    "distribution": _product_distribution,
    "derivatives": _product_derivatives,
    "cfi": _product_cfi,
    "qfi": _product_qfi,
    "decoupling": _product_decoupling,
    "figure": _product_figure,
    "feasibility": _product_feasibility,
    "state": _product_state,
}


# ---------------------------------------------------------------------------
# Output directory
# ---------------------------------------------------------------------------


def prepare_out(out: Path, force: bool) -> Path:
    out = Path(out)
    if out.exists() and not out.is_dir():
        raise ConfigError(f"--out: {out} exists and is not a directory")
    if out.exists() and any(out.iterdir()) and not force:
        raise ConfigError(f"--out: {out} is not empty; pass --force to overwrite")
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_run(args) -> int:
    sc = load_scenario(Path(args.scenario), args.convention)
    out = prepare_out(args.out, args.force)
    ctx = RunContext(out, args.fd_check)
    files: list[Path] = []
    status = EXIT_OK
    for i, spec in enumerate(sc.outputs):
        try:
            files += PRODUCTS[spec["kind"]](sc, spec, ctx)
        except SingularFisherError as exc:
            print(f"numerical error: outputs[{i}] ({spec['kind']}): {exc}", file=sys.stderr)
            status = EXIT_NUMERIC
            files.append(out / "cfi.json")
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"outputs[{i}] ({spec['kind']}): {exc}") from None
    qio.write_manifest(
        out,
        files,
        sc.seed,
        {"command": "run", "scenario": Path(args.scenario).name, "convention": sc.experiment.convention},
    )
    print(f"wrote {len(files)} file(s) + manifest to {out}")
    return status


CLAIMED_QFI = {
    # (state, quantity): (claimed value as a function of N, description, exact?)
    ("optimal", "F_alpha_alpha"): (lambda n: n**4 / 4, "N^4/4", True),
    ("optimal", "F_beta_beta"): (lambda n: 2 * n**2, "2N^2", True),
    ("optimal", "F_alpha_beta"): (lambda n: 0.0, "0", True),
    ("cat", "F_alpha_alpha"): (lambda n: n**4 / 4, "N^4/4 - O(N^3)", False),
    ("cat", "F_beta_beta"): (lambda n: 2 * (n**2 + n), "2(N^2+N)", True),
    ("cat", "F_alpha_beta"): (lambda n: 0.0, "0", True),
}


def qfi_table(n: int = 100, convention: str = DEFAULT_CONVENTION) -> list[dict]:
    """Computed QFI entries of the optimal and cat states next to the claimed closed forms."""
    states = {"optimal": optimal_state(n), "cat": cat_state_analytic(n)}
    rows = []
    for (label, quantity), (claim, formula, exact) in CLAIMED_QFI.items():
        fm = qfi_parameters(states[label], ("alpha", "beta"), convention)
        value = {"F_alpha_alpha": fm["alpha", "alpha"], "F_beta_beta": fm["beta", "beta"], "F_alpha_beta": fm["alpha", "beta"]}[
            quantity
        ]
        target = claim(n)
        if target:
            rel = abs(value - target) / abs(target)
        else:
            rel = abs(value) / (n**4)  # zero claims judged against the F_alpha_alpha scale
        if exact:
            match = rel < 1e-9
        else:
            deficit = target - value
            match = 0 < deficit < n**3
        rows.append(
            {
                "state": label,
                "quantity": quantity,
                "computed": value,
                "claimed": target,
                "claimed_formula": formula,
                "relative_error": rel,
                "match": bool(match),
            }
        )
    return rows


def _reproduce_figure(fig: str, args) -> list[Path]:
    overrides = {"convention": args.convention or DEFAULT_CONVENTION, "fd_check": args.fd_check}
    panels = figure_data(fig, 100, overrides)
    return write_panels(panels, args.out, {"n": 100, "overrides": overrides}, overrides["convention"], 100)


def cmd_reproduce(args) -> int:
    out = prepare_out(args.out, args.force)
    args.out = out
    target = args.target
    convention = args.convention or DEFAULT_CONVENTION
    if target in ("fig2", "fig3", "fig4"):
        files = _reproduce_figure(target.upper(), args)
    elif target == "qfi-table":
        rows = qfi_table(100, convention)
        cols = {k: [r[k] for r in rows] for k in rows[0]}
        meta = {"n": 100, "convention": convention, "config_hash": qio.config_hash({"qfi-table": 100, "convention": convention})}
        files = [
            qio.write_csv(out / "qfi_table.csv", cols, meta),
            qio.write_json(out / "qfi_table.json", {"n": 100, "convention": convention, "rows": rows}),
        ]
        for r in rows:
            flag = "match" if r["match"] else "MISMATCH"
            print(f"{r['state']:8s} {r['quantity']:14s} computed={r['computed']:.12g} claimed={r['claimed_formula']} [{flag}]")
    else:
        doc = feasibility_document(PhysicalConfig.rubidium())
        files = [qio.write_json(out / "feasibility.json", doc)]
        _print_feasibility(doc)
    qio.write_manifest(out, files, 0, {"command": f"reproduce {target}", "convention": convention})
    print(f"wrote {len(files)} file(s) + manifest to {out}")
    return EXIT_OK


def _print_feasibility(doc: dict) -> None:
    disp = doc["config_display"]
    cfg = doc["config"]
    print(
        f"mass {cfg['mass']:.6g} kg ({disp['mass_amu']:.6g} amu), sigma {cfg['sigma']:.6g} m ({disp['sigma_um']:.6g} um), "
        f"separation {cfg['separation']:.6g} m ({disp['separation_um']:.6g} um), t {cfg['time']:g} s, k {cfg['repetitions']:g}"
    )
    print(f"alpha (closed form) {doc['alpha_paper']:.6g}; alpha (from kappa) {doc['alpha_derived']:.6g}; ratio {doc['alpha_ratio_derived_over_formula']:.6f}")
    within = "within" if doc["n_min_within_factor_2_of_reference"] else "NOT within"
    print(f"N_min {doc['n_min']:.4g} ({within} a factor 2 of {REFERENCE_N_MIN:.0e}); from kappa {doc['n_min_derived']:.4g}")
    flag = " [FLAG: >10x from quoted 4e13 cm^-3]" if doc["density_flag"] else ""
    print(f"peak density {doc['density_peak']:.4g} m^-3 = {doc['density_peak_cm3']:.4g} cm^-3{flag}")


def cmd_feasibility(args) -> int:
    sigma = args.sigma_um * 1e-6
    separation = args.separation_um * 1e-6 if args.separation_um is not None else 10 * sigma
    try:
        config = PhysicalConfig(args.mass_amu * AMU, sigma, separation, args.time_s, args.reps)
    except ValueError as exc:
        raise ConfigError(f"feasibility: {exc}") from None
    out = prepare_out(args.out, args.force)
    doc = feasibility_document(config, args.seed, args.mc_samples)
    files = [qio.write_json(out / "feasibility.json", doc)]
    _print_feasibility(doc)
    qio.write_manifest(out, files, args.seed, {"command": "feasibility"})
    return EXIT_OK


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


def sweep_values(spec) -> list[float]:
    if isinstance(spec, list):
        values = [float(v) for v in spec]
    else:
        start, stop, count = float(spec["start"]), float(spec["stop"]), int(spec["count"])
        if spec.get("spacing", "linear") == "log":
            if start <= 0 or stop <= 0:
                raise ConfigError("values: log spacing needs start > 0 and stop > 0")
            values = np.geomspace(start, stop, count).tolist()
        else:
            values = np.linspace(start, stop, count).tolist()
    if not all(math.isfinite(v) for v in values):
        raise ConfigError("values: all sweep values must be finite")
    return values


def _apply_axis(exp: ExperimentConfig, phys: PhysicalConfig | None, axis: str, value: float):
    if axis == "n":
        if value != int(value):
            raise ConfigError(f"values: n must be integral, got {value}")
        exp = ExperimentConfig(int(value), exp.twisting, exp.gravity, exp.dephasing, exp.recombiner, exp.convention)
    elif axis == "chi_tau":
        exp = ExperimentConfig(exp.n, type(exp.twisting)(value), exp.gravity, exp.dephasing, exp.recombiner, exp.convention)
    elif axis in ("alpha", "beta"):
        exp = exp.with_gravity(**{axis: value})
    elif axis in ("delta_A", "delta_Jz"):
        exp = exp.with_dephasing(ParameterId(axis).generator, value)
    elif axis == "sigma":
        if phys is None:
            raise ConfigError("base.physical: a sigma sweep needs a 'physical' section")
        phys = PhysicalConfig(phys.mass, value, phys.separation, phys.time, phys.repetitions, phys.G, phys.hbar)
    return exp, phys


QFI_METRICS = {"qfi_alpha_alpha": ("alpha", "alpha"), "qfi_beta_beta": ("beta", "beta"), "qfi_alpha_beta": ("alpha", "beta")}
CFI_METRICS = {"cfi_alpha_alpha", "cfi_over_qfi_alpha", "inverse_cfi_alpha", "detectable_alpha", "max_decoupling_correlation"}
PHYSICAL_METRICS = {"alpha_paper", "alpha_derived", "n_min", "density_peak", "gravity_coeff", "contact_coeff"}


def sweep_point(task: dict) -> dict:
    """Evaluate every requested metric at one axis value; failures become an error tag."""
    result = {name: math.nan for name in task["outputs"]}
    try:
        exp, phys = _apply_axis(task["experiment"], task["physical"], task["axis"], task["value"])
        outputs = task["outputs"]
        conv = exp.convention
        n = exp.n
        need_qfi = any(o in QFI_METRICS or o == "cfi_over_qfi_alpha" for o in outputs)
        if need_qfi:
            label = task["state"]
            if label == "optimal":
                state = optimal_state(n)
            elif label == "cat":
                state = cat_state_analytic(n)
            else:
                state = oat_prepare(polarized_state(n), exp.twisting)
            qfi = qfi_parameters(state, ("alpha", "beta"), conv)
            for name, key in QFI_METRICS.items():
                if name in outputs:
                    result[name] = qfi[key]
        if CFI_METRICS & set(outputs):
            params = parse_params(task["params"])
            base = offset_zero_params(exp, params, task["offset"])
            fm = cfi_for_config(base, params)
            if "cfi_alpha_alpha" in outputs:
                result["cfi_alpha_alpha"] = fm["alpha", "alpha"]
            if "cfi_over_qfi_alpha" in outputs:
                result["cfi_over_qfi_alpha"] = fm["alpha", "alpha"] / qfi["alpha", "alpha"]
            if "max_decoupling_correlation" in outputs:
                rows = decoupling_report(base, params, fisher=fm)
                result["max_decoupling_correlation"] = max((abs(r.correlation) for r in rows), default=0.0)
            if {"inverse_cfi_alpha", "detectable_alpha"} & set(outputs):
                crb = crb_invert(fm, task["repetitions"])
                var_a = crb.variances[fm.params.index(ParameterId.ALPHA)] * task["repetitions"]
                if "inverse_cfi_alpha" in outputs:
                    result["inverse_cfi_alpha"] = 1 / var_a
                if "detectable_alpha" in outputs:
                    result["detectable_alpha"] = crb.detectable_alpha
        if PHYSICAL_METRICS & set(outputs):
            if phys is None:
                raise ConfigError("base.physical: physical metrics need a 'physical' section")
            alpha = alpha_magnitude(phys)
            nmin = minimum_atom_number(phys)
            ref = task["sigma0"] if task["sigma0"] is not None else phys.sigma
            derived = {
                "alpha_paper": alpha.formula,
                "alpha_derived": alpha.derived,
                "n_min": nmin.formula,
                "density_peak": peak_density(phys, nmin.formula),
                "gravity_coeff": ref / phys.sigma,
                "contact_coeff": (ref / phys.sigma) ** 3,
            }
            for name in PHYSICAL_METRICS & set(outputs):
                result[name] = derived[name]
        result["error"] = ""
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        result = {name: math.nan for name in task["outputs"]}
        result["error"] = f"{type(exc).__name__}: {exc}"
    return result


def build_sweep_tasks(doc: dict, convention: str | None) -> tuple[str, list[float], list[dict]]:
    base = doc["base"]
    conv = _convention(convention, base, base["experiment"])
    exp = build_experiment(base["experiment"], conv)
    phys = build_physical(base.get("physical"))
    axis = doc["axis"]
    values = sweep_values(doc["values"])
    if axis == "n" and any(v != int(v) or v < 1 for v in values):
        raise ConfigError("values: n sweep values must be positive integers")
    sigma0 = values[0] if axis == "sigma" else None
    common = {
        "experiment": exp,
        "physical": phys,
        "axis": axis,
        "outputs": list(doc["outputs"]),
        "state": doc.get("state", "prepared"),
        "params": doc.get("params", ["alpha", "beta"]),
        "offset": doc.get("offset", FIGURE_OFFSET),
        "repetitions": doc.get("repetitions", DEFAULT_REPETITIONS),
        "sigma0": sigma0,
    }
    parse_params(common["params"])
    return axis, values, [{**common, "value": v} for v in values]


def run_sweep(tasks: list[dict], jobs: int) -> list[dict]:
    if jobs <= 1 or len(tasks) <= 1:
        return [sweep_point(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
        return list(pool.map(sweep_point, tasks))  # map keeps axis order


def cmd_sweep(args) -> int:
    doc = _read_json(Path(args.spec), "sweep")
    validate(doc, "sweep")
    axis, values, tasks = build_sweep_tasks(doc, args.convention)
    out = prepare_out(args.out, args.force)
    results = run_sweep(tasks, args.jobs)
    cols = {axis: [int(v) if axis == "n" else v for v in values]}
    for name in doc["outputs"]:
        cols[name] = [r[name] for r in results]
    cols["error"] = [r["error"] for r in results]
    failed = sum(1 for r in results if r["error"])
    meta = {
        "axis": axis,
        "convention": tasks[0]["experiment"].convention,
        "config_hash": qio.config_hash(doc),
        "points": len(values),
        "failed": failed,
    }
    files = [qio.write_csv(out / "sweep.csv", cols, meta)]
    qio.write_manifest(out, files, 0, {"command": "sweep", "spec": Path(args.spec).name})
    print(f"sweep over {axis}: {len(values)} point(s), {failed} failed; wrote {files[0]}")
    return EXIT_PARTIAL if failed else EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _default_jobs() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory (default ./out)")
    common.add_argument("--jobs", type=int, default=_default_jobs(), help="worker processes for sweeps")
    common.add_argument("--convention", choices=sorted(JZ_CONVENTIONS), default=None, help="J_z normalization for beta")
    common.add_argument("--force", action="store_true", help="write into a non-empty output directory")
    common.add_argument("--fd-check", action="store_true", help="annotate derivative outputs with finite-difference deviations")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="qgas", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="run a scenario file")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("reproduce", parents=[common], help="regenerate a reference product")
    p.add_argument("target", choices=["fig2", "fig3", "fig4", "qfi-table", "feasibility"])
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("sweep", parents=[common], help="sweep one axis and tabulate scalar metrics")
    p.add_argument("spec")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("feasibility", parents=[common], help="laboratory-scale estimates")
    p.add_argument("--mass-amu", type=float, default=RB87_MASS / AMU)
    p.add_argument("--sigma-um", type=float, default=50.0)
    p.add_argument("--time-s", type=float, default=1.0)
    p.add_argument("--reps", type=float, default=1e5)
    p.add_argument("--separation-um", type=float, default=None, help="half-distance between the clouds (default 10 sigma)")
    p.add_argument("--mc-samples", type=int, default=0, help="also estimate kappa_aa by Monte Carlo")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_feasibility)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.jobs < 1:
        print("error: --jobs: must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
