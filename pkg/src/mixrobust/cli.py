"""mixrobust command line: design, simulate, run, analyze, shap, contour, report.

Every subcommand reads one JSON experiment config; stages exchange data
through the CSV/JSON files written under the output directory. Exit codes:
1 usage, 2 config, 3 I/O, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import sys
from dataclasses import replace
from pathlib import Path

from .classifiers import ClassifierKind
from .design import DesignError, TestScenario, build_run_plan, write_plan_csv
from .fileio import atomic_write_text
from .metrics import MetricsError, read_outcomes_csv, write_outcomes_csv
from .mixmodel import (ModelError, build_design_matrix, dataset_from_outcomes,
                       fit_ols, fit_report, write_fit_report)
from .pipeline import (ConfigError, ExperimentConfig, parse_experiment_config,
                       resolve_jobs, simulate_plan, with_master_seed)
from .shapley import shap_report, write_phi_csv, write_shap_json
from .ternary import (TernaryGrid, grid_predict, simplex_lattice, write_grid_csv,
                      write_ternary_svg)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERIC = 4

RESPONSES = ("mean_auc", "log_sd")


class CliFailure(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code
        self.message = message


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliFailure(EXIT_USAGE, message)


def build_parser():
    parser = _Parser(prog="mixrobust",
                     description="mixture-design experiments for classifier "
                                 "robustness under label imbalance and shift")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name, help_text in [
            ("design", "write the expanded run plan CSV"),
            ("simulate", "execute built-in classifiers and write outcomes"),
            ("run", "execute runs via the external-runner protocol"),
            ("analyze", "fit both responses per scenario, write fit reports"),
            ("shap", "write per-column attribution reports"),
            ("contour", "write prediction grids and ternary SVG plots"),
            ("report", "bundle fit reports into one text summary")]:
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="experiment config JSON")
        cmd.add_argument("--out", default=None, help="output directory override")
        cmd.add_argument("--seed", type=int, default=None, help="master seed override")
        cmd.add_argument("--jobs", type=int, default=None,
                         help="worker pool size (MIXROBUST_JOBS overrides)")
        cmd.add_argument("--scenario", default=None,
                         choices=[s.value for s in TestScenario],
                         help="restrict to one test scenario")
    return parser


def _load_config(args) -> ExperimentConfig:
    path = Path(args.config)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise CliFailure(EXIT_CONFIG, f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise CliFailure(EXIT_CONFIG, f"config {path} is not valid JSON: {exc}") from None
    try:
        config = parse_experiment_config(doc, base_dir=path.parent)
    except ConfigError as exc:
        raise CliFailure(EXIT_CONFIG, f"config {path}: {exc}") from None
    if args.seed is not None:
        config = with_master_seed(config, args.seed)
    if args.out is not None:
        config = replace(config, output_dir=Path(args.out))
    return config


def _scenarios(config, args):
    if args.scenario is None:
        return config.scenarios
    wanted = TestScenario.parse(args.scenario)
    if wanted not in config.scenarios:
        raise CliFailure(EXIT_CONFIG,
                         f"scenario {wanted.value} is not in the config's scenario list")
    return (wanted,)


def _build_plan(config, args):
    # the full plan fixes run ids and seeds; --scenario filters afterwards
    # so a partial run reproduces the matching subset of a full run
    plan = build_run_plan(config.design, config.scenarios)
    keep = set(_scenarios(config, args))
    if len(keep) != len(config.scenarios):
        plan = replace(plan, runs=[r for r in plan.runs if r.scenario in keep])
    return plan


def cmd_design(config, args):
    plan = _build_plan(config, args)
    path = config.output_dir / "plan.csv"
    write_plan_csv(plan, path)
    print(f"wrote {path} ({len(plan)} run instances)")
    return EXIT_OK


def _write_failures(failures, path):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["run_id", "replicate", "scenario", "reason"])
    for failure in failures:
        writer.writerow([failure.run_id, failure.replicate,
                         failure.scenario.value, failure.reason])
    atomic_write_text(path, buf.getvalue())


def _run_metadata(config):
    """Resolved settings snapshot so any run reproduces from the record."""
    from .classifiers import LOGISTIC_DEFAULTS, STUMP_DEFAULTS

    defaults = {ClassifierKind.LOGISTIC: LOGISTIC_DEFAULTS,
                ClassifierKind.BOOSTED_STUMPS: STUMP_DEFAULTS,
                ClassifierKind.EXTERNAL: {}}
    classifiers = {}
    for level, spec in sorted(config.classifiers.items()):
        entry = {"kind": spec.kind.value,
                 "hyper": {**defaults[spec.kind], **spec.hyper_dict}}
        if spec.command:
            entry["command"] = list(spec.command)
        classifiers[f"{level:g}"] = entry
    return {
        "master_seed": config.master_seed,
        "design": {"m": config.design.m, "min_prop": config.design.min_prop,
                   "replicates": config.design.replicates,
                   "covariate_levels": [list(lv) for lv in
                                        config.design.covariate_levels]},
        "sampling": {"train_frac": config.sampling.train_frac,
                     "test_frac": config.sampling.test_frac},
        "classifiers": classifiers,
        "scenarios": [s.value for s in config.scenarios],
    }


def _execute(config, args, allow_external):
    for level, spec in config.classifiers.items():
        if spec.kind is ClassifierKind.EXTERNAL and not allow_external:
            raise CliFailure(EXIT_CONFIG,
                             f"classifiers[{level:g}] is external; use `run`, "
                             "not `simulate`")
    plan = _build_plan(config, args)
    write_plan_csv(plan, config.output_dir / "plan.csv")
    atomic_write_text(config.output_dir / "run_metadata.json",
                      json.dumps(_run_metadata(config), indent=2) + "\n")
    try:
        outcomes, failures = simulate_plan(plan, config, jobs=resolve_jobs(args.jobs))
    except ConfigError as exc:
        raise CliFailure(EXIT_CONFIG, str(exc)) from None
    path = config.output_dir / "outcomes.csv"
    write_outcomes_csv(outcomes, config.design.m, config.design.h, path)
    print(f"wrote {path} ({len(outcomes)} outcomes)")
    if failures:
        failures_path = config.output_dir / "failures.csv"
        _write_failures(failures, failures_path)
        print(f"{len(failures)} runs failed; see {failures_path}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_simulate(config, args):
    return _execute(config, args, allow_external=False)


def cmd_run(config, args):
    return _execute(config, args, allow_external=True)


def _read_outcomes(config):
    path = config.output_dir / "outcomes.csv"
    try:
        return read_outcomes_csv(path)
    except OSError as exc:
        raise CliFailure(EXIT_IO, f"cannot read outcomes {path}: {exc}; "
                         "run `simulate` or `run` first") from None
    except MetricsError as exc:
        raise CliFailure(EXIT_IO, str(exc)) from None


def _grouped_outcomes(config, args):
    outcomes = _read_outcomes(config)
    groups = []
    for scenario in _scenarios(config, args):
        rows = [out for out in outcomes if out.scenario is scenario]
        if not rows:
            raise CliFailure(EXIT_IO, f"outcomes file has no rows for scenario "
                             f"{scenario.value}")
        groups.append((scenario, rows))
    return groups


def _fit_for(rows, response):
    try:
        data = dataset_from_outcomes(rows, response)
        matrix = build_design_matrix(data)
        return fit_ols(matrix, data.y), matrix
    except ModelError as exc:
        raise CliFailure(EXIT_NUMERIC, str(exc)) from None


def cmd_analyze(config, args):
    for scenario, rows in _grouped_outcomes(config, args):
        for response in RESPONSES:
            fit, _ = _fit_for(rows, response)
            report = fit_report(fit, scenario, response)
            path = config.output_dir / f"fit_{response}_{scenario.value}.json"
            write_fit_report(report, path)
            print(f"wrote {path}")
    return EXIT_OK


def cmd_shap(config, args):
    for scenario, rows in _grouped_outcomes(config, args):
        for response in RESPONSES:
            fit, matrix = _fit_for(rows, response)
            report = shap_report(fit, matrix)
            base = f"{response}_{scenario.value}"
            write_shap_json(report, config.output_dir / f"shap_{base}.json",
                            scenario=scenario.value, response=response)
            write_phi_csv(report, config.output_dir / f"shap_phi_{base}.csv")
            print(f"wrote {config.output_dir / f'shap_{base}.json'}")
    return EXIT_OK


def cmd_contour(config, args, q=100, levels=10):
    design = config.design
    ternary = design.m == 3
    if ternary:
        grid = TernaryGrid.build(q=q, min_prop=design.min_prop)
    else:
        # no ternary projection beyond 3 classes: coarse lattice, CSV only
        lattice_q = min(q, 20)
        grid = TernaryGrid(q=lattice_q, min_prop=design.min_prop,
                           points=simplex_lattice(lattice_q, design.m,
                                                  design.min_prop))
    for scenario, rows in _grouped_outcomes(config, args):
        for response in RESPONSES:
            fit, _ = _fit_for(rows, response)
            for z in itertools.product(*design.covariate_levels):
                z_tag = "".join(f"{v:g}" for v in z)
                base = f"{response}_{scenario.value}_z{z_tag}"
                surface = replace(grid_predict(fit, grid, z),
                                  response=response, scenario=scenario.value)
                write_grid_csv(surface, config.output_dir / f"grid_{base}.csv")
                if ternary:
                    write_ternary_svg(surface,
                                      config.output_dir / f"contour_{base}.svg",
                                      levels=levels)
            print(f"wrote contour outputs for {response} / {scenario.value}")
    return EXIT_OK


def _fmt_p(p):
    if p is None:
        return "   n/a"
    return "<0.001" if p < 0.001 else f"{p:6.3f}"


def _fmt_t(t):
    return "    n/a" if t is None else f"{t:8.3f}"


def _report_block(reports, scenario):
    lines = [f"== {scenario.value.capitalize()} scenario " + "=" * 50]
    header = (f"{'Term':<8}" + f"{'Est':>10}{'SE':>10}{'t':>9}{'p':>8}"
              + "   |" + f"{'Est':>10}{'SE':>10}{'t':>9}{'p':>8}")
    lines.append(f"{'':8}{'Mean AUC':>28}{'':9}{'Log SD':>31}")
    lines.append(header)
    by_response = {rep["response"]: rep for rep in reports}
    mean_rep, sd_rep = by_response["mean_auc"], by_response["log_sd"]

    def _row(name, left, right):
        return (f"{name:<8}"
                f"{left['estimate']:>10.4f}{left['se']:>10.4f}"
                f"{_fmt_t(left['t']):>9}{_fmt_p(left['p']):>8}   |"
                f"{right['estimate']:>10.4f}{right['se']:>10.4f}"
                f"{_fmt_t(right['t']):>9}{_fmt_p(right['p']):>8}")

    for left, right in zip(mean_rep["terms"], sd_rep["terms"]):
        lines.append(_row(left["label"], left, right))
    lines.append("-- Implied effect " + "-" * 75)
    for left, right in zip(mean_rep["implied_effects"], sd_rep["implied_effects"]):
        lines.append(_row(left["covariate"], left, right))
    lines.append(f"n = {mean_rep['n']}, residual df = {mean_rep['df']}")
    return lines


def cmd_report(config, args):
    lines = ["mixrobust experiment summary", ""]
    for scenario in _scenarios(config, args):
        reports = []
        for response in RESPONSES:
            path = config.output_dir / f"fit_{response}_{scenario.value}.json"
            try:
                reports.append(json.loads(path.read_text()))
            except OSError as exc:
                raise CliFailure(EXIT_IO, f"cannot read fit report {path}: {exc}; "
                                 "run `analyze` first") from None
        lines.extend(_report_block(reports, scenario))
        lines.append("")
        shap_path = config.output_dir / f"shap_mean_auc_{scenario.value}.json"
        if shap_path.exists():
            shap_doc = json.loads(shap_path.read_text())
            lines.append("Attribution (mean AUC), descending:")
            for entry in shap_doc["importances"]:
                lines.append(f"  {entry['label']:<8}{entry['importance']:>10.4f}")
            lines.append("")
    text = "\n".join(lines) + "\n"
    path = config.output_dir / "report.txt"
    atomic_write_text(path, text)
    sys.stdout.write(text)
    print(f"wrote {path}")
    return EXIT_OK


_COMMANDS = {
    "design": cmd_design,
    "simulate": cmd_simulate,
    "run": cmd_run,
    "analyze": cmd_analyze,
    "shap": cmd_shap,
    "contour": cmd_contour,
    "report": cmd_report,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise CliFailure(EXIT_USAGE, "missing subcommand; see mixrobust --help")
        config = _load_config(args)
        try:
            return _COMMANDS[args.command](config, args)
        except DesignError as exc:
            raise CliFailure(EXIT_CONFIG, str(exc)) from None
    except CliFailure as fail:
        print(f"mixrobust: error: {fail.message}", file=sys.stderr)
        return fail.code
    except SystemExit as exc:  # argparse --help
        code = exc.code
        return int(code) if code else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
