"""Command-line entry points: capacity, discover, use, full, synth.

Exit codes separate findings from failures: 0 means the audit ran (whatever
it found), 2 is a usage or configuration error, 3 is a runtime failure, and
``--fail-on-red-flag`` opts into exit 4 when red flags are present — so a CI
pipeline can distinguish "found discrimination" from "tool broke".

The config file is JSON::

    {
      "protected": ["sex"],                  # required
      "candidates": ["age", "retired"],      # may be empty
      "target": null,
      "seed": 0,
      "schema_path": "schema.json",          # or inline "schema": {...}
      "proxy_sets": [["age", "retired"]],    # predictive-capacity inputs
      "model_path": "model.json",            # --model overrides
      "decision_rule": {"threshold": 0.5,
                        "favourable_direction": "score_above"},
      "scan": {"normalization": "arithmetic", "bins": 10},
      "capacity": {"folds": 5},
      "discovery": {"beam_width": 10, "max_depth": 2, "min_support": 30,
                    "gamma": 0.25, "top_k": 20, "bins": 4,
                    "holdout_fraction": 0.4},
      "use": {"assignments": [{"column": "retired", "value": "false"}],
              "selector": null, "ice_columns": [], "ice_row": 0,
              "flip_rate_floor": 0.01, "score_floor_fraction": 0.05}
    }

Relative ``schema_path``/``model_path`` resolve against the config file's
directory.
"""

import json
import sys
from pathlib import Path

import click

from . import __version__, report, synth
from .capacity import RED_FLAG_CI_FLOOR, RED_FLAG_PURITY
from .data import (
    AuditConfig,
    load_csv,
    read_schema_json,
    schema_from_json,
    write_schema_json,
)
from .descriptors import SubgroupDescriptor
from .errors import (
    ParameterError,
    ParseError,
    ProxyAuditError,
    ValidationError,
)
from .intervention import Assignment
from .models import DecisionRule, ModelSpec, load_model

_FORMATS = ("json", "md")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_RED_FLAG = 4


def _fail(code, message):
    click.echo(f"proxyaudit: error: {message}", err=True)
    sys.exit(code)


def _guard(body):
    """Map exception classes onto the exit-code contract."""
    try:
        return body()
    except (ValidationError, ParseError, ParameterError) as exc:
        _fail(EXIT_CONFIG, str(exc))
    except FileNotFoundError as exc:
        _fail(EXIT_CONFIG, f"file not found: {exc.filename or exc}")
    except json.JSONDecodeError as exc:
        _fail(EXIT_CONFIG, f"malformed JSON: {exc}")
    except ProxyAuditError as exc:
        _fail(EXIT_RUNTIME, str(exc))
    except Exception as exc:  # tool broke: never report as a finding
        _fail(EXIT_RUNTIME, f"{type(exc).__name__}: {exc}")


class RunSettings:
    """Everything a command needs, resolved from config file + flags."""

    def __init__(self, config_path, data_path, model_path, seed, out_dir, formats):
        config_path = Path(config_path)
        with open(config_path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ValidationError("config file must hold a JSON object")
        self.raw = raw
        base = config_path.parent

        if "schema" in raw:
            schema = schema_from_json(raw["schema"])
        elif "schema_path" in raw:
            schema = read_schema_json(base / raw["schema_path"])
        else:
            raise ValidationError(
                "config needs a dataset schema ('schema' or 'schema_path')"
            )
        self.dataset = load_csv(data_path, schema)

        self.audit = AuditConfig(
            protected=tuple(raw.get("protected", ())),
            candidates=tuple(raw.get("candidates", ())),
            target=raw.get("target"),
            seed=int(raw.get("seed", 0)),
        )
        self.audit.check_against(self.dataset)
        self.seed = int(seed) if seed is not None else self.audit.seed

        self.decision_rule = (
            DecisionRule.from_json(raw["decision_rule"])
            if raw.get("decision_rule")
            else None
        )
        resolved_model = model_path or (
            base / raw["model_path"] if raw.get("model_path") else None
        )
        self.model_spec = (
            ModelSpec.load(resolved_model) if resolved_model else None
        )
        self.proxy_sets = [tuple(s) for s in raw.get("proxy_sets", [])]
        self.scan_opts = dict(raw.get("scan", {}))
        self.capacity_opts = dict(raw.get("capacity", {}))
        self.discovery_opts = dict(raw.get("discovery", {}))
        self.use_opts = dict(raw.get("use", {}))
        self.out_dir = Path(out_dir)
        self.formats = formats

    def config_echo(self):
        return {
            "protected": list(self.audit.protected),
            "candidates": list(self.audit.candidates),
            "target": self.audit.target,
            "proxy_sets": [list(s) for s in self.proxy_sets],
            "decision_rule": (
                self.decision_rule.to_json() if self.decision_rule else None
            ),
            "model": self.model_spec.kind if self.model_spec else None,
            "scan": self.scan_opts,
            "capacity": self.capacity_opts,
            "discovery": self.discovery_opts,
            "use": {k: v for k, v in self.use_opts.items() if k != "assignments"},
            "thresholds": {
                "red_flag_purity": RED_FLAG_PURITY,
                "red_flag_ci_floor": RED_FLAG_CI_FLOOR,
                "flip_rate_floor": self.use_opts.get("flip_rate_floor", 0.01),
                "score_floor_fraction": self.use_opts.get(
                    "score_floor_fraction", 0.05
                ),
            },
        }

    def open_model(self):
        if self.model_spec is None:
            raise ValidationError(
                "this command needs a model: pass --model or set model_path"
            )
        return load_model(self.model_spec)

    def assignments(self):
        return [
            Assignment(a["column"], a["value"])
            for a in self.use_opts.get("assignments", [])
        ]

    def selector(self):
        sel = self.use_opts.get("selector")
        return SubgroupDescriptor.from_json(sel) if sel else None

    def use_floors(self):
        return {
            "flip_rate_floor": self.use_opts.get("flip_rate_floor", 0.01),
            "score_floor_fraction": self.use_opts.get("score_floor_fraction", 0.05),
        }

    def write(self, rpt):
        report.validate_report(rpt)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        written = []
        if "json" in self.formats:
            path = self.out_dir / "report.json"
            path.write_bytes(report.report_json_bytes(rpt))
            written.append(path)
        if "md" in self.formats:
            path = self.out_dir / "report.md"
            path.write_text(report.render_markdown(rpt), encoding="utf-8")
            written.append(path)
        for path in written:
            click.echo(f"wrote {path}")
        click.echo(f"red flags: {rpt['red_flag_count']}")
        return rpt


def _settings_options(fn):
    for deco in reversed(
        (
            click.option(
                "--config", "config_path", required=True,
                type=click.Path(exists=True, dir_okay=False),
                help="Audit config JSON.",
            ),
            click.option(
                "--data", "data_path", required=True,
                type=click.Path(exists=True, dir_okay=False),
                help="Dataset CSV.",
            ),
            click.option(
                "--model", "model_path", default=None,
                type=click.Path(exists=True, dir_okay=False),
                help="Model spec JSON (overrides config model_path).",
            ),
            click.option("--out", "out_dir", default=".", help="Output directory."),
            click.option(
                "--seed", default=None, type=int,
                help="Override the config seed.",
            ),
            click.option(
                "--format", "formats", default="json,md",
                help="Comma list of output formats (json, md).",
            ),
        )
    ):
        fn = deco(fn)
    return fn


def _parse_formats(formats):
    chosen = tuple(f.strip() for f in formats.split(",") if f.strip())
    bad = [f for f in chosen if f not in _FORMATS]
    if bad or not chosen:
        raise ValidationError(f"unknown output format(s): {bad or formats!r}")
    return chosen


def _capacity_section(rs):
    return report.run_capacity(
        rs.dataset,
        rs.audit.protected,
        rs.audit.candidates,
        rs.proxy_sets,
        normalization=rs.scan_opts.get("normalization", "arithmetic"),
        bins=rs.scan_opts.get("bins", 10),
        folds=rs.capacity_opts.get("folds", 5),
        seed=rs.seed,
    )


def _discovery_section(rs):
    opts = rs.discovery_opts
    return report.run_discovery(
        rs.dataset,
        rs.audit,
        beam_width=opts.get("beam_width", 10),
        max_depth=opts.get("max_depth", 2),
        min_support=opts.get("min_support", 30),
        gamma=opts.get("gamma", 0.25),
        top_k=opts.get("top_k", 20),
        bins=opts.get("bins", 4),
        holdout_fraction=opts.get("holdout_fraction", 0.4),
        seed=rs.seed,
    )


@click.group()
@click.version_option(__version__, prog_name="proxyaudit")
def main():
    """Audit tabular decision models for proxy capacity and proxy use."""


@main.command("capacity")
@_settings_options
def cmd_capacity(config_path, data_path, model_path, out_dir, seed, formats):
    """Association scan, contingency drill-downs, predictive capacity."""

    def body():
        fmts = _parse_formats(formats)
        rs = RunSettings(config_path, data_path, model_path, seed, out_dir, fmts)
        sections = {"capacity": _capacity_section(rs)}
        rpt = report.assemble(rs.config_echo(), rs.dataset, sections, [], rs.seed)
        rs.write(rpt)

    _guard(body)


@main.command("discover")
@_settings_options
def cmd_discover(config_path, data_path, model_path, out_dir, seed, formats):
    """Beam-search subgroup discovery with holdout validation."""

    def body():
        fmts = _parse_formats(formats)
        rs = RunSettings(config_path, data_path, model_path, seed, out_dir, fmts)
        fragment, kept = _discovery_section(rs)
        findings = report.derive_red_flags(
            kept, None, None, rs.dataset, **rs.use_floors()
        )
        sections = {"discovery": fragment}
        rpt = report.assemble(
            rs.config_echo(), rs.dataset, sections, findings, rs.seed
        )
        rs.write(rpt)

    _guard(body)


@main.command("use")
@_settings_options
def cmd_use(config_path, data_path, model_path, out_dir, seed, formats):
    """Flip analysis and ICE curves for configured interventions."""

    def body():
        fmts = _parse_formats(formats)
        rs = RunSettings(config_path, data_path, model_path, seed, out_dir, fmts)
        assignments = rs.assignments()
        if not assignments:
            raise ValidationError("config use.assignments is empty")
        if rs.decision_rule is None:
            raise ValidationError("config needs a decision_rule for use analysis")
        with rs.open_model() as m:
            fragment = report.run_use(
                m, rs.decision_rule, rs.dataset, assignments, rs.selector(),
                ice_columns=rs.use_opts.get("ice_columns", ()),
                ice_row=rs.use_opts.get("ice_row"),
                ice_grid_size=rs.use_opts.get("ice_grid_size", 20),
                **rs.use_floors(),
            )
        sections = {"use": fragment}
        rpt = report.assemble(rs.config_echo(), rs.dataset, sections, [], rs.seed)
        rs.write(rpt)

    _guard(body)


@main.command("full")
@_settings_options
@click.option(
    "--fail-on-red-flag", is_flag=True,
    help="Exit 4 when the report contains at least one red flag.",
)
def cmd_full(
    config_path, data_path, model_path, out_dir, seed, formats, fail_on_red_flag
):
    """Capacity, discovery, then use; findings labeled by the two-part
    standard (validated near-deterministic proxy AND significant influence
    toward the unfavourable outcome)."""

    def body():
        fmts = _parse_formats(formats)
        rs = RunSettings(config_path, data_path, model_path, seed, out_dir, fmts)
        sections = {"capacity": _capacity_section(rs)}
        discovery_fragment, kept = _discovery_section(rs)
        sections["discovery"] = discovery_fragment
        if rs.model_spec is None:
            sections["use"] = report.USE_SKIPPED
            findings = report.derive_red_flags(
                kept, None, None, rs.dataset, **rs.use_floors()
            )
        else:
            if rs.decision_rule is None:
                raise ValidationError(
                    "config needs a decision_rule to audit model use"
                )
            with rs.open_model() as m:
                findings = report.derive_red_flags(
                    kept, m, rs.decision_rule, rs.dataset, **rs.use_floors()
                )
                assignments = rs.assignments()
                if assignments:
                    sections["use"] = report.run_use(
                        m, rs.decision_rule, rs.dataset, assignments,
                        rs.selector(),
                        ice_columns=rs.use_opts.get("ice_columns", ()),
                        ice_row=rs.use_opts.get("ice_row"),
                        ice_grid_size=rs.use_opts.get("ice_grid_size", 20),
                        **rs.use_floors(),
                    )
                else:
                    sections["use"] = {"summaries": [], "ice": []}
        rpt = report.assemble(
            rs.config_echo(), rs.dataset, sections, findings, rs.seed
        )
        rs.write(rpt)
        if fail_on_red_flag and rpt["red_flag_count"] > 0:
            sys.exit(EXIT_RED_FLAG)

    _guard(body)


@main.command("synth")
@click.option("--preset", "preset_name", required=True, help="Scenario name.")
@click.option("--rows", default=5000, show_default=True, help="Sample size.")
@click.option(
    "--seed", default=None, type=int,
    help="Sampling seed (defaults to the preset's frozen seed).",
)
@click.option("--out", "out_dir", default=".", help="Output directory.")
def cmd_synth(preset_name, rows, seed, out_dir):
    """Generate a scenario preset: data, schema, config, graph, models."""

    def body():
        try:
            scenario = synth.preset(preset_name)
        except LookupError as exc:
            raise ValidationError(str(exc)) from None
        if rows < 1:
            raise ParameterError("--rows must be at least 1")
        sample_seed = scenario.graph.seed if seed is None else int(seed)
        d = scenario.sample(rows, sample_seed)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)

        d.to_csv(out / "data.csv")
        write_schema_json(d.schema, out / "schema.json")
        scenario.graph.save(out / "graph.json")
        model_paths = {}
        for key, spec in scenario.models.items():
            path = out / f"model_{key}.json"
            spec.save(path)
            model_paths[key] = path.name

        roles = scenario.roles
        config = {
            "protected": list(roles.get("protected", ())),
            "candidates": list(roles.get("candidates", ())),
            "target": roles.get("outcome"),
            "seed": sample_seed,
            "schema_path": "schema.json",
            "proxy_sets": [list(roles.get("candidates", ()))]
            if roles.get("candidates")
            else [],
            "discovery": {
                "beam_width": 10, "max_depth": 2, "min_support": 30,
                "gamma": 0.25, "top_k": 20, "bins": 4,
                "holdout_fraction": 0.4,
            },
        }
        if scenario.decision_rule is not None:
            config["decision_rule"] = scenario.decision_rule.to_json()
        if "use" in model_paths:
            config["model_path"] = model_paths["use"]
        elif model_paths:
            config["model_path"] = sorted(model_paths.values())[0]
        with open(out / "config.json", "w", encoding="utf-8") as fh:
            json.dump(config, fh, indent=2, sort_keys=True)
            fh.write("\n")

        ground = out / "ground_truth.json"
        with open(ground, "w", encoding="utf-8") as fh:
            json.dump(scenario.ground_truth, fh, indent=2, sort_keys=True)
            fh.write("\n")
        for name in ("data.csv", "schema.json", "config.json", "graph.json",
                     "ground_truth.json", *sorted(model_paths.values())):
            click.echo(f"wrote {out / name}")

    _guard(body)


if __name__ == "__main__":
    main()
