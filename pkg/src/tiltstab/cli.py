"""Command line entry point: ``tiltstab analyze|oracle|check FILE``.

Exit codes: 0 ok, 1 parse or usage error, 2 candidate not stationary,
3 internal consistency failure, 4 oracle found a multivalued argmin.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .analysis import (
    EXIT_MULTIVALUED,
    EXIT_OK,
    EXIT_PARSE,
    AnalysisConfig,
    analyze,
    problem_echo,
    with_overrides,
)
from .oracle import DimensionTooHigh, NoFeasibleGridPoint, OracleConfig, verify_tilt_stability
from .problemfile import ProblemFileError, load_problem
from .serialize import canonical_dumps
from .stability import CQ_NAMES, UnknownCQName, run_cq_probes


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if x is None:
        return "-"
    x = float(x)
    return "inf" if not np.isfinite(x) else f"{x:.6g}"


def _line(name: str, v) -> str:
    return f"  {name:<14} {v}"


def _write_json(path: str | None, obj) -> None:
    if path:
        Path(path).write_text(canonical_dumps(obj), encoding="utf-8")


def _summary_cq(cq: dict) -> list[str]:
    out = ["constraint qualifications:"]
    for k in ("licq", "mfcq", "crcq"):
        if cq.get(k) is not None:
            out.append(_line(k, cq[k]))
    m = cq.get("mscq")
    if m is not None:
        out.append(_line("mscq", f"kappa~{_fmt(m.kappa)} diverging={m.diverging} radius={_fmt(m.radius)}"))
    b = cq.get("bepp")
    if b is not None:
        out.append(_line("bepp", f"{b} kappa~{_fmt(b.details.get('kappa'))}"))
    return out


def _summary_oracle(o) -> list[str]:
    if isinstance(o, str):
        return [f"oracle: {o}"]
    lines = [f"oracle: single_valued={o.single_valued} L_hat={_fmt(o.lipschitz)} tilts={len(o.tilts)}"]
    if o.witness:
        v = ", ".join(_fmt(t) for t in o.witness["v"])
        lines.append(f"  multivalued at v=({v}) with {len(o.witness['clusters'])} clusters")
    if o.not_local_min:
        lines.append("  candidate point is not in the untilted argmin")
    if o.growth is not None:
        lines.append(f"  growth at kappa={_fmt(o.growth['kappa'])}: {'Holds' if o.growth['holds'] else 'Fails'}")
    return lines


def cmd_analyze(args) -> int:
    try:
        pf = load_problem(args.file)
    except (ProblemFileError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    P = pf.to_problem()
    cfg = with_overrides(AnalysisConfig(), gamma=args.gamma, eta=args.eta, kappa=args.kappa,
                         radius=args.radius, directions=args.dirs)
    if args.no_oracle:
        cfg = with_overrides(cfg, oracle=False)
    code, rep = analyze(P, cfg, source=Path(args.file).name)
    st = rep["stationarity"]
    print(f"stationarity residual: {_fmt(st['residual'])}")
    if "cq" in rep:
        print("\n".join(_summary_cq(rep["cq"])))
        print(f"gamma: {_fmt(rep['gamma']['value'])} ({rep['gamma']['source']})")
        so = rep["second_order"]
        print("second-order conditions:")
        for k in ("ssosc", "pointbased", "kappa_free", "extreme_point", "rusosc"):
            print(_line(k, getattr(so, k) if not isinstance(so, dict) else so[k]))
        print(f"tilt bound: {_fmt(rep['tilt_bound'])}")
        print("\n".join(_summary_oracle(rep["oracle"])))
        print(f"consistency: {'passed' if rep['consistency']['passed'] else 'FAILED'}")
    print(f"exit code: {code}")
    _write_json(args.json, rep)
    return code


def cmd_oracle(args) -> int:
    try:
        pf = load_problem(args.file)
    except (ProblemFileError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    P = pf.to_problem()
    base = OracleConfig()
    cfg = OracleConfig(
        gamma=args.gamma if args.gamma is not None else base.gamma,
        tilt_radius=args.tilt_radius if args.tilt_radius is not None else base.tilt_radius,
        resolution=args.grid if args.grid is not None else base.resolution,
    )
    try:
        rep = verify_tilt_stability(P, None, cfg)
    except (DimensionTooHigh, NoFeasibleGridPoint) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    code = EXIT_OK if rep.single_valued else EXIT_MULTIVALUED
    print("\n".join(_summary_oracle(rep)))
    print(f"exit code: {code}")
    _write_json(args.json, {"problem": problem_echo(P, Path(args.file).name), "oracle": rep, "exit_code": code})
    return code


def cmd_check(args) -> int:
    try:
        pf = load_problem(args.file)
    except (ProblemFileError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    names = tuple(s.strip() for s in args.cq.split(",") if s.strip())
    P = pf.to_problem()
    try:
        rep = run_cq_probes(P, None, names)
    except UnknownCQName as exc:
        print(f"error: unknown constraint qualification: {exc} (choose from {', '.join(CQ_NAMES)})", file=sys.stderr)
        return EXIT_PARSE
    cq = {k: getattr(rep, k) for k in CQ_NAMES}
    print("\n".join(_summary_cq(cq)))
    b = rep.bepp
    if b is not None and b.fails:
        for r in b.details.get("probes", []):
            x = ", ".join(_fmt(t) for t in r["x"])
            print(f"    x=({x}) vertex norm {_fmt(r['norm'])}")
    _write_json(args.json, {"problem": problem_echo(P, Path(args.file).name), "cq": rep})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tiltstab", description="Tilt-stability analysis of smooth inequality-constrained programs.")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="full pipeline")
    a.add_argument("file")
    a.add_argument("--gamma", type=float, help="multiplier ball factor (default 1.5 x MSCQ estimate)")
    a.add_argument("--eta", type=float, help="neighborhood radius of the RUSOSC probe")
    a.add_argument("--kappa", type=float, help="modulus level for the threshold checks (default 1)")
    a.add_argument("--radius", type=float, help="MSCQ sample radius")
    a.add_argument("--dirs", type=int, help="critical-cone directions for the multiplier union")
    a.add_argument("--json", metavar="PATH")
    a.add_argument("--no-oracle", action="store_true")
    a.set_defaults(func=cmd_analyze)

    o = sub.add_parser("oracle", help="brute-force tilt oracle only")
    o.add_argument("file")
    o.add_argument("--gamma", type=float, help="ball radius around the candidate point")
    o.add_argument("--tilt-radius", type=float)
    o.add_argument("--grid", type=int, help="grid points per axis")
    o.add_argument("--json", metavar="PATH")
    o.set_defaults(func=cmd_oracle)

    c = sub.add_parser("check", help="selected constraint qualifications")
    c.add_argument("file")
    c.add_argument("--cq", default=",".join(CQ_NAMES), help="comma-separated subset of " + ",".join(CQ_NAMES))
    c.add_argument("--json", metavar="PATH")
    c.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
