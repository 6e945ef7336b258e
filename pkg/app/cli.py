# app/cli.py
"""
Línea de comandos.

    python -m app.cli train <config.yaml>
    python -m app.cli eval <run_dir>
    python -m app.cli min-example --env quadrotor --out <dir> [--wiring sp --mitigation psl]
    python -m app.cli project <set> <x> <u>
    python -m app.cli report <run_dir>... [--out tabla.csv]

Códigos de salida: 0 ok, 2 error de configuración, 3 fallo numérico.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from app.domain.errors import ConfigError, DimensionError, SafeRLError
from app.domain.types import Mitigation, SafeActionSet, WiringMode
from app.infrastructure.sets_fs import parse_zonotope

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

REACH_ENVS = ("pendulum", "quadrotor")


def _vector(text: str, name: str) -> np.ndarray:
    try:
        vals = [float(t) for t in text.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"{name}: lista de números inválida {text!r}") from exc
    return np.array(vals, dtype=np.float64)


def _print(obj) -> None:
    print(json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=True, default=float))


# ------------------------------
# Subcomandos
# ------------------------------
def cmd_train(args) -> int:
    from app.application.pipeline import load_config, run_experiment

    summary = run_experiment(load_config(Path(args.config)))
    _print({"run_id": summary.run_id, "iqm": summary.iqm, "ci": [summary.ci_low, summary.ci_high],
            "violations": summary.violations})
    return EXIT_OK


def cmd_eval(args) -> int:
    from app.application.pipeline import evaluate_run

    df = evaluate_run(Path(args.run_dir))
    _print({"rows": len(df), "eval_csv": str(Path(args.run_dir) / "eval.csv")})
    return EXIT_OK


def cmd_min_example(args) -> int:
    from app.application.min_example import min_example, run_all

    out = Path(args.out)
    if args.wiring is None:
        res = run_all(args.env, out, steps=args.steps, seed=args.seed)
        _print({name: r.final[["u_0", "u_1", "signed_distance"]].to_dict() for name, r in res.items()})
        return EXIT_OK
    wiring = WiringMode(args.wiring)
    mit = Mitigation(args.mitigation)
    name = f"{args.env}-{wiring.value}-{mit.value}.csv"
    r = min_example(args.env, wiring, mit, steps=args.steps, seed=args.seed, out_csv=out / name)
    _print(r.final.to_dict())
    return EXIT_OK


def project_request(set_arg: str, x: np.ndarray, u: np.ndarray):
    """
    `set_arg` es un fichero de zonotopo de acciones (x se ignora) o el
    nombre de un entorno con conjunto por alcanzabilidad.
    """
    from app.application.envs.registry import make_env

    if set_arg in REACH_ENVS:
        env = make_env(set_arg)
        return env.safe_action_set(env.make_state(x)), x
    path = Path(set_arg)
    if not path.exists():
        raise ConfigError(f"ni entorno ni fichero de zonotopo: {set_arg}")
    return SafeActionSet.direct(parse_zonotope(path)), None


def cmd_project(args) -> int:
    from app.application.safety.projection import project
    from app.application.safety.sensitivity import safeguard_jacobian
    from app.application.safety.zonotope import constraints_for

    x = _vector(args.x, "x") if args.x not in ("", "-") else np.zeros(0)
    u = _vector(args.u, "u")
    ss, x_eval = project_request(args.set, x, u)
    sol = project(ss, x_eval, u)
    out = {
        "u_phi": sol.u_phi.tolist(),
        "status": sol.status.value,
        "active_set": sol.active_set,
        "kkt_residual": sol.kkt_residual,
    }
    if sol.solved:
        out["jacobian"] = safeguard_jacobian(sol, constraints_for(ss, x_eval)).J.tolist()
    _print(out)
    return EXIT_OK if sol.solved else EXIT_NUMERIC


def cmd_report(args) -> int:
    from app.application.report import report

    res = report([Path(d) for d in args.run_dirs], Path(args.out) if args.out else None)
    if res.missing:
        print("ejecuciones sin summary.json: " + ", ".join(res.missing), file=sys.stderr)
    if args.out is None:
        print(res.table.to_csv(index=False, lineterminator="\n"), end="")
    return EXIT_OK


# ------------------------------
# Parser
# ------------------------------
def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="safeprojrl", description="RL con safeguard de proyección (SE vs SP)")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="Entrena y evalúa una configuración")
    t.add_argument("config", help="YAML de ExperimentConfig")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="Re-evalúa los checkpoints de una ejecución")
    e.add_argument("run_dir")
    e.set_defaults(func=cmd_eval)

    m = sub.add_parser("min-example", help="Ejemplo mínimo en un estado fijo")
    m.add_argument("--env", choices=["quadrotor", "seeker"], default="quadrotor")
    m.add_argument("--wiring", choices=[w.value for w in WiringMode], default=None,
                   help="Si se omite se ejecutan todas las variantes")
    m.add_argument("--mitigation", choices=[x.value for x in Mitigation], default="none")
    m.add_argument("--steps", type=int, default=50)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--out", default="min_example")
    m.set_defaults(func=cmd_min_example)

    pr = sub.add_parser("project", help="Proyecta una acción sobre un conjunto seguro")
    pr.add_argument("set", help="Fichero de zonotopo de acciones o entorno (pendulum|quadrotor)")
    pr.add_argument("x", help="Estado, separado por comas ('-' si no aplica)")
    pr.add_argument("u", help="Acción, separada por comas")
    pr.set_defaults(func=cmd_project)

    r = sub.add_parser("report", help="Tabla comparativa de varias ejecuciones")
    r.add_argument("run_dirs", nargs="+")
    r.add_argument("--out", default=None)
    r.set_defaults(func=cmd_report)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DimensionError) as exc:
        print(f"error de configuración: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SafeRLError as exc:
        print(f"fallo numérico: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
