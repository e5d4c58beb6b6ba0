"""Command-line harness: constants, flow and verify subcommands.

Exit codes: 0 ok, 1 failed verification, 2 invalid topology or configuration,
3 integrator failure, 4 failed certificate.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import flow as fl
from . import io
from . import models as mo
from . import suites
from .errors import (
    DomainExit,
    InvalidTopology,
    PreconditionViolated,
    RestartNotDescending,
    StepFailure,
)
from .surface import EPS2, ConstantsLedger, SurfaceTopology

log = logging.getLogger("surgeflow")

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_CONFIG = 2
EXIT_INTEGRATOR = 3
EXIT_CERTIFICATE = 4

CONFIG_SECTION = "surgeflow"
DEFAULTS = {
    "model": "default",
    "genus": [2],
    "punctures": None,
    "epsilon": 0.3,
    "lam": 0.5,
    "delta0": 6.0,
    "cdrill": 1.0,
    "ldrill": EPS2,
    "seed": 0,
    "out": None,
    "suite": "all",
    "budget": 16,
    "method": "rk45",
    "x0": None,
}


@dataclass
class RunConfig:
    command: str
    model: str = "default"
    genus: list[int] = field(default_factory=lambda: [2])
    punctures: list[int] | None = None
    epsilon: float = 0.3
    lam: float = 0.5
    delta0: float = 6.0
    cdrill: float = 1.0
    ldrill: float = EPS2
    seed: int = 0
    out: Path | None = None
    suite: str = "all"
    budget: int = 16
    method: str = "rk45"
    x0: list[list[float]] | None = None

    def topology(self) -> SurfaceTopology:
        return SurfaceTopology.from_lists(self.genus, self.punctures)

    def ledger(self) -> ConstantsLedger:
        return ConstantsLedger(self.topology(), self.delta0, self.cdrill, self.ldrill, self.lam)


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.replace(",", " ").split()]


def _point(text: str) -> list[float]:
    return [float(v) for v in text.replace(",", " ").split()]


_CONVERTERS = {
    "genus": _ints,
    "punctures": _ints,
    "epsilon": float,
    "lam": float,
    "delta0": float,
    "cdrill": float,
    "ldrill": float,
    "seed": int,
    "budget": int,
    "out": Path,
}


def read_config(path: str | Path) -> dict:
    """INI file with a [surgeflow] section whose keys mirror the long flags."""
    cp = configparser.ConfigParser()
    if not cp.read(path, encoding="utf-8"):
        raise PreconditionViolated(f"cannot read config file {path}")
    if CONFIG_SECTION not in cp:
        raise PreconditionViolated(f"config file lacks a [{CONFIG_SECTION}] section")
    out = {}
    for key, raw in cp[CONFIG_SECTION].items():
        key = key.replace("-", "_")
        if key == "lambda":
            key = "lam"
        if key == "x0":
            out[key] = [_point(line) for line in raw.splitlines() if line.strip()]
            continue
        if key not in DEFAULTS:
            raise PreconditionViolated(f"unknown config key {key!r}")
        out[key] = _CONVERTERS.get(key, str)(raw)
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with a [surgeflow] section")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    topo = argparse.ArgumentParser(add_help=False)
    topo.add_argument("--genus", type=int, nargs="+", help="genus of each component")
    topo.add_argument("--punctures", type=int, nargs="+", help="punctures of each component")
    topo.add_argument("--delta0", type=float)
    topo.add_argument("--cdrill", type=float)
    topo.add_argument("--ldrill", type=float)
    topo.add_argument("--lambda", dest="lam", type=float)

    p = argparse.ArgumentParser(prog="surgeflow", description="Surgered gradient flow toolkit")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("constants", parents=[common, topo], help="print the constants ledger")

    f = sub.add_parser("flow", parents=[common], help="run surgered flows on a model space")
    f.add_argument("--model", help="built-in model name or JSON manifest path")
    f.add_argument("--epsilon", type=float)
    f.add_argument("--budget", type=int, help="maximum number of surgeries per run")
    f.add_argument("--method", choices=("rk45", "heun"))
    f.add_argument("--x0", type=_point, action="append", help="start point, comma separated; repeatable")

    v = sub.add_parser("verify", parents=[common], help="run property suites")
    v.add_argument("--suite", choices=(*suites.SUITES, "all"))
    return p


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values = dict(DEFAULTS)
    if getattr(args, "config", None):
        values.update(read_config(args.config))
    for key in DEFAULTS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    return RunConfig(command=args.command, **values)


# -- commands -----------------------------------------------------------------


def cmd_constants(cfg: RunConfig) -> int:
    ledger = cfg.ledger()
    width = max(len(e.name) for e in ledger.entries())
    print(f"topology {list(ledger.topology.components)}")
    for e in ledger.entries():
        print(f"{e.name:<{width}}  {e.value:<24.17g}  {e.provenance:<26}  {e.note}")
    if cfg.out is not None:
        io.write_json(ledger.to_dict(), Path(cfg.out) / "constants.json")
    return EXIT_OK


def default_starts(model: mo.ModelInstance) -> list[list[float]]:
    if model.name == "default":
        return [list(p) for p in suites.default_grid()]
    # midway between the box centre and its upper corner
    return [[0.25 * lo + 0.75 * hi for lo, hi in model.box]]


def cmd_flow(cfg: RunConfig) -> int:
    model = mo.get_model(cfg.model)
    problem = model.problem()
    eps = cfg.epsilon
    if eps > problem.eps_max:
        raise PreconditionViolated(f"epsilon {eps} exceeds the model's eps_max {problem.eps_max}")
    starts = cfg.x0 or default_starts(model)
    step = fl.StepConfig(method=cfg.method)
    v = fl.crossing_drop(problem, eps)
    n = max(0, math.ceil(math.log2(problem.N))) if problem.N > 0 else 0
    runs = []
    code = EXIT_OK
    for i, x0 in enumerate(starts):
        try:
            trace = fl.surgered_flow(problem, x0, eps, budget=cfg.budget, step=step)
        except (StepFailure, DomainExit, RestartNotDescending) as exc:
            print(f"run {i}: integrator failure: {exc}", file=sys.stderr)
            runs.append({"index": i, "x0": x0, "status": fl.STEP_FAILURE, "error": str(exc)})
            code = EXIT_INTEGRATOR
            continue
        cert = fl.lower_bound_certificate(trace, eps, problem)
        count_ok = fl.surgery_count_check(trace, v, n) if v > 0 else None
        if trace.status == fl.STEP_FAILURE:
            code = EXIT_INTEGRATOR
        elif code == EXIT_OK and (not cert.holds or count_ok is False):
            code = EXIT_CERTIFICATE
        print(
            f"run {i:3d} x0={np.array2string(np.asarray(x0), precision=4)} status={trace.status} "
            f"surgeries={len(trace.surgeries)} f_end={trace.f[-1]:.10g} "
            f"certificate={'ok' if cert.holds else 'FAIL'} count={'ok' if count_ok is not False else 'FAIL'}"
        )
        runs.append(
            {
                "index": i,
                "x0": x0,
                "status": trace.status,
                "surgeries": len(trace.surgeries),
                "f_start": trace.f[0],
                "f_end": trace.f[-1],
                "x_end": trace.x_end,
                "certificate": cert._asdict(),
                "surgery_count_ok": count_ok,
            }
        )
        if cfg.out is not None:
            io.write_trace_csv(trace, Path(cfg.out) / f"trace_{i:03d}.csv")
            io.write_json(io.trace_to_dict(trace), Path(cfg.out) / f"trace_{i:03d}.json")
    summary = {
        "schema": "surgeflow.flow/1",
        "model": model.name,
        "epsilon": eps,
        "A": problem.small_gradient_fn(eps),
        "v": v,
        "n": n,
        "budget": cfg.budget,
        "runs": runs,
        "exit_code": code,
    }
    if cfg.out is not None:
        io.write_json(summary, Path(cfg.out) / "flow.json")
    ok = sum(1 for r in runs if r.get("certificate", {}).get("holds"))
    print(f"{ok}/{len(runs)} certificates hold; exit {code}")
    return code


def cmd_verify(cfg: RunConfig) -> int:
    report = suites.run_suite(cfg.suite, cfg.seed)
    for name, res in report["results"].items():
        for c in res["checks"]:
            mark = "PASS" if c["passed"] else "FAIL"
            print(f"{mark} {name}.{c['name']} value={c['value']:.6g} threshold={c['threshold']:.6g} n={c['count']}")
    text = io.dumps(report)
    if cfg.out is not None:
        out = Path(cfg.out) / "verify.json"
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")
    print("all passed" if report["passed"] else "FAILURES present")
    return EXIT_OK if report["passed"] else EXIT_VERIFY


COMMANDS = {"constants": cmd_constants, "flow": cmd_flow, "verify": cmd_verify}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        if args.command != "constants":
            # topology overrides still have to be valid if supplied via config
            cfg.ledger()
        return COMMANDS[args.command](cfg)
    except InvalidTopology as exc:
        print(f"invalid topology: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PreconditionViolated as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
