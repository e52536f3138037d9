"""Command-line front end.

Exit codes: 0 when no anomaly is found (or a non-analysis command
succeeds), 1 when anomalies are found, 2 on any input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .anomalies import run_analysis
from .bench import DEFAULT_POINTS, quadratic_r2, run_sweep
from .ingest.generator import GenerationError, GenerationParams, generate_scenario
from .ingest.mappers import MappingContext, MappingError, map_openvpn, map_ssh, map_strongswan
from .network import NetworkError
from .paths import DEFAULT_PATH_CAP
from .policy import PolicyError
from .report import FORMATS, ReportError, dot_bundle, emit_report
from .scenario import ScenarioError, load_scenario, serialize_scenario

EXIT_CLEAN, EXIT_ANOMALIES, EXIT_INPUT = 0, 1, 2
INPUT_ERRORS = (ScenarioError, MappingError, GenerationError, ReportError, PolicyError, NetworkError, OSError, ValueError)


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cpp-anomalies", description="Find anomalies in communication protection policies.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="analyze a scenario file")
    a.add_argument("scenario", type=Path)
    a.add_argument("--format", choices=FORMATS, default="text")
    a.add_argument("--path-cap", type=int, default=DEFAULT_PATH_CAP)
    a.add_argument("--out", type=Path, help="directory for the report (stdout otherwise)")
    a.add_argument("--no-resolutions", action="store_true", help="omit suggested resolutions")

    g = sub.add_parser("generate", help="write a synthetic scenario")
    g.add_argument("--pis", type=int, required=True, help="non-conflicting PIs")
    g.add_argument("--conflicts", type=int, required=True, help="conflicting PIs")
    g.add_argument("--entities", type=int, required=True, help="network nodes")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--mix", default="1,1,1", help="end-to-end,site-to-site,remote-access weights")
    g.add_argument("--out", type=Path)

    m = sub.add_parser("map", help="turn configuration excerpts into PIs")
    m.add_argument("tool", choices=("strongswan", "openvpn", "ssh"))
    m.add_argument("files", nargs="+", type=Path)
    m.add_argument("--client", help="client address (OpenVPN and SSH excerpts do not carry it)")
    m.add_argument("--ciphers", type=Path, help="JSON object: cipher string -> coefficient triple")
    m.add_argument("--out", type=Path)

    b = sub.add_parser("bench", help="time analysis over generated scenarios")
    b.add_argument("--sweep", choices=("pis", "entities"), required=True)
    b.add_argument("--fixed", type=int, required=True, help="value of the dimension not swept")
    b.add_argument("--points", type=_ints, default=list(DEFAULT_POINTS))
    b.add_argument("--seeds", type=_ints, default=[0])
    b.add_argument("--conflict-ratio", type=float, default=0.5)
    b.add_argument("--out", type=Path)
    return p


def _write(data: bytes, out: Optional[Path]) -> None:
    if out is None:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_bytes(data)


def _analyze(args) -> int:
    if args.path_cap < 1:
        raise ValueError("--path-cap must be >= 1")
    scenario = load_scenario(args.scenario)
    for w in scenario.warnings:
        print(f"warning: {w}", file=sys.stderr)
    result = run_analysis(scenario, args.path_cap)
    with_res = not args.no_resolutions
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        if args.format == "dot-bundle":
            for name, text in dot_bundle(result, scenario).items():
                (args.out / name).write_text(text)
        else:
            ext = "json" if args.format == "json" else "txt"
            (args.out / f"report.{ext}").write_bytes(emit_report(result, args.format, scenario, resolutions=with_res))
    else:
        _write(emit_report(result, args.format, scenario, resolutions=with_res), None)
    return EXIT_ANOMALIES if result.anomalies else EXIT_CLEAN


def _generate(args) -> int:
    weights = [float(w) for w in args.mix.split(",")]
    if len(weights) != 3 or sum(weights) <= 0:
        raise ValueError("--mix needs three weights with a positive sum")
    mix = tuple(w / sum(weights) for w in weights)
    params = GenerationParams(args.pis, args.conflicts, args.entities, args.seed, mix)
    _write(serialize_scenario(generate_scenario(params)).encode("utf-8"), args.out)
    return EXIT_CLEAN


def _map(args) -> int:
    ctx = MappingContext()
    if args.ciphers is not None:
        table = dict(ctx.coefficient_map)
        table.update(json.loads(args.ciphers.read_text()))
        ctx = MappingContext(table)
    if args.client:
        ctx = MappingContext(ctx.coefficient_map, args.client)
    texts = [f.read_text() for f in args.files]
    if args.tool == "strongswan":
        pis = [pi for t in texts for pi in map_strongswan(t, ctx)]
    elif args.tool == "openvpn":
        if len(texts) > 2:
            raise MappingError("openvpn takes a client file and an optional server file")
        pis = map_openvpn(texts[0], texts[1] if len(texts) > 1 else None, ctx)
    else:
        pis = [pi for t in texts for pi in map_ssh(t, ctx)]
    doc = [pi.to_spec() for pi in pis]
    _write((json.dumps(doc, indent=2) + "\n").encode("utf-8"), args.out)
    return EXIT_CLEAN


def _bench(args) -> int:
    rows = run_sweep(args.sweep, args.fixed, args.points, seeds=args.seeds, conflict_ratio=args.conflict_ratio)
    xs = [r.value for r in rows]
    summary = {"rows": [r.to_dict() for r in rows]}
    if len(set(xs)) >= 3:
        summary["analysis_quadratic_r2"] = quadratic_r2(xs, [r.analysis_time for r in rows])
    if args.out is not None:
        _write((json.dumps(summary, indent=2) + "\n").encode("utf-8"), args.out)
    print(f"{'value':>8} {'seed':>5} {'PIs':>6} {'nodes':>6} {'pre (s)':>10} {'analysis (s)':>13} {'anomalies':>10}")
    for r in rows:
        print(
            f"{r.value:>8} {r.seed:>5} {r.n_pi + r.n_conflict:>6} {r.n_entities:>6} "
            f"{r.pre_computation_time:>10.4f} {r.analysis_time:>13.4f} {r.anomalies:>10}"
        )
    if "analysis_quadratic_r2" in summary:
        print(f"quadratic fit of analysis time: R^2 = {summary['analysis_quadratic_r2']:.4f}")
    return EXIT_CLEAN


COMMANDS = {"analyze": _analyze, "generate": _generate, "map": _map, "bench": _bench}


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CLEAN if exc.code == 0 else EXIT_INPUT
    try:
        return COMMANDS[args.command](args)
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
