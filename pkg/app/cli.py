"""Ligne de commande : scénarios, presets et sous-commandes."""

from __future__ import annotations

import argparse
import sys

from flask import current_app, has_app_context

from app.errors import CalibrationError, ContractError, DomainError, FitError, ConfigError, ScenarioValidationError
from app.pipeline.scenario import ENGINE_ALIASES, PRESETS, Scenario, load_preset, load_scenario

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INVALID = 2
EXIT_IO = 3

# sous-commande -> (preset par défaut, tâche imposée, mode imposé)
SUBCOMMANDS = {
    "simulate-histogram": ("fig2", "histogram", "quantum-pair"),
    "scan-fringe": ("fig3a", "fringe", "quantum-pair"),
    "classical-fringe": ("fig3b", "fringe", "classical-beam"),
    "pulse-profile": ("fig4", "profile", None),
    "report-table1": ("table1", "table1", None),
    "characterize-source": ("spdc", "spdc", "quantum-pair"),
    "run": (None, None, None),
    "calibrate": ("fig4", None, None),
}


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="fichier scénario (sections key = value)")
    p.add_argument("--preset", choices=PRESETS)
    p.add_argument("--seed", type=int, help="graine 64 bits")
    p.add_argument("--jobs", type=int, help="workers parallèles")
    p.add_argument("--out", help="dossier de sortie")
    p.add_argument("--engine", choices=sorted(ENGINE_ALIASES), help="analytic | mc")
    p.add_argument("--xlsx", action="store_true", help="écrire aussi report.xlsx")
    p.add_argument("--dump-tags", action="store_true", help="écrire tags.txt (histogramme MC)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="franson", description="Simulateur d'interférence somme-fréquence")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        _add_common(sub.add_parser(name))
    hist = sub.add_parser("history", help="derniers runs du ledger")
    hist.add_argument("--limit", type=int, default=20)
    return parser


def _presets_dir():
    return current_app.config.get("PRESETS_DIR") if has_app_context() else None


def scenario_from_args(args) -> Scenario:
    default_preset, task, mode = SUBCOMMANDS[args.command]
    if args.config:
        scenario = load_scenario(args.config)
    elif args.preset or default_preset:
        scenario = load_preset(args.preset or default_preset, _presets_dir())
    else:
        raise ScenarioValidationError([f"{args.command} : --config ou --preset requis"])

    changes = {}
    if task:
        changes["task"] = task
    if mode:
        changes["mode"] = mode
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.engine:
        changes["engine"] = ENGINE_ALIASES[args.engine]
    if args.jobs is not None:
        changes["jobs"] = args.jobs
    return scenario.replace(**changes).validate() if changes else scenario


def _print_sections(sections: dict[str, dict]):
    for name, values in sections.items():
        print(f"[{name}]")
        for k, v in values.items():
            print(f"{k} = {v}")


def _calibrate(scenario: Scenario):
    from app.pipeline.services import _calibration_section, resolve_scenario

    resolved = resolve_scenario(scenario)
    _print_sections({"calibration": {**_calibration_section(resolved), **{
        "bright_offset_nm": resolved.calibration.bright_offset,
        "dark_offset_nm": resolved.calibration.dark_offset,
    }}})


def _history(limit: int):
    from app.pipeline.services import list_runs

    for run in list_runs(limit):
        print(f"#{run.id} {run.created_at:%Y-%m-%d %H:%M} {run.name} {run.task}/{run.engine}/{run.mode} seed={run.seed or '-'} -> {run.output_dir}")
        for a in run.artifacts:
            print(f"    {a.kind:<12} {a.sha256[:12]} {a.path}")


def main(argv=None, app=None) -> int:
    args = build_parser().parse_args(argv)

    if app is None:
        from app import create_app

        app = create_app()

    with app.app_context():
        try:
            if args.command == "history":
                _history(args.limit)
                return EXIT_OK

            scenario = scenario_from_args(args)
            if args.command == "calibrate":
                _calibrate(scenario)
                return EXIT_OK

            from app.pipeline.services import run_scenario

            outcome = run_scenario(scenario, jobs=args.jobs, out=args.out, xlsx=args.xlsx, dump_tags=args.dump_tags)
        except ScenarioValidationError as e:
            print("=== SCENARIO INVALIDE ===", file=sys.stderr)
            for v in e.violations:
                print(f"  - {v}", file=sys.stderr)
            return EXIT_INVALID
        except OSError as e:
            print(f"Erreur d'écriture : {e}", file=sys.stderr)
            return EXIT_IO
        except (ConfigError, DomainError, ContractError, FitError, CalibrationError) as e:
            print(f"Erreur : {e}", file=sys.stderr)
            return EXIT_FAILURE

        print("=== RUN OK ===")
        print("output =", outcome.output_dir)
        _print_sections({"results": outcome.summary.get("results", {})})
        return EXIT_OK
