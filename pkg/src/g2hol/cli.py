"""Command-line entry point.

    g2hol examples [--case 2c] [--points 20] [--seed 0] [--jobs 1] [--out report.json]
    g2hol verify --config case.json [--out cert.json]
    g2hol berger --algebra gl2_m12

Exit codes: 0 when everything passes, 1 for a verification failure, 2 for
usage, parse and domain errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

from .coframe import (
    CASE_IDS,
    DEFAULT_HI,
    DEFAULT_LO,
    CoframeError,
    build_case,
    paper_examples,
    sample_points,
)
from .expr import ExprSyntaxError
from .holonomy import Tolerances, certify

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    case_id: str
    slots: dict
    lo: float = DEFAULT_LO
    hi: float = DEFAULT_HI
    points: int = 20
    seed: int = 0
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        if self.points < 1:
            raise UsageError("point count must be at least 1")
        if not self.lo < self.hi:
            raise UsageError(f"empty domain [{self.lo}, {self.hi}]")

    @classmethod
    def from_json(cls, data: dict, tol: Tolerances) -> "RunConfig":
        if not isinstance(data, dict):
            raise UsageError("config must be a JSON object")
        extra = set(data) - {"case", "slots", "domain", "points", "seed"}
        if extra:
            raise UsageError(f"unknown config key(s): {', '.join(sorted(extra))}")
        if "case" not in data or "slots" not in data:
            raise UsageError("config needs 'case' and 'slots'")
        slots = data["slots"]
        if not isinstance(slots, dict) or not all(isinstance(v, str) for v in slots.values()):
            raise UsageError("'slots' must map slot names to expression strings")
        dom = data.get("domain", {})
        try:
            return cls(
                case_id=str(data["case"]),
                slots=dict(slots),
                lo=float(dom.get("lo", DEFAULT_LO)),
                hi=float(dom.get("hi", DEFAULT_HI)),
                points=int(data.get("points", 20)),
                seed=int(data.get("seed", 0)),
                tolerances=tol,
            )
        except (TypeError, ValueError, AttributeError) as err:
            raise UsageError(f"bad config value: {err}") from None


def _run(cfg: RunConfig) -> dict:
    case = build_case(cfg.case_id, cfg.slots)
    pts = sample_points(cfg.seed, cfg.points, cfg.lo, cfg.hi)
    cert = certify(case, pts, lo=cfg.lo, hi=cfg.hi, tol=cfg.tolerances)
    return cert.to_json()


def run_configs(cfgs: list, jobs: int = 1) -> list:
    """Certificates in input order; ``jobs > 1`` fans out over processes."""
    if jobs <= 1 or len(cfgs) <= 1:
        return [_run(c) for c in cfgs]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run, cfgs))


def _report(cfgs: list, certs: list) -> dict:
    c0 = cfgs[0]
    return {
        "seed": c0.seed,
        "points": c0.points,
        "domain": {"lo": c0.lo, "hi": c0.hi},
        "tolerances": asdict(c0.tolerances),
        "certificates": certs,
    }


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _fmt(x, spec=".1e"):
    return "-" if x is None else format(x, spec)


def table(certs: list) -> str:
    head = f"{'case':<5}{'algebra':<14}{'exp':>4}{'dimR':>6}{'dim':>5}{'gap':>10}{'pde':>10}{'theta':>10}{'memb':>10}{'loops':>10}  verdict"
    lines = [head, "-" * len(head)]
    for c in certs:
        verdict = c["verdict"] if not c["failures"] else f"{c['verdict']} ({', '.join(c['failures'])})"
        lines.append(
            f"{c['case']:<5}{c['expected_algebra']:<14}{c['expected_dim']:>4}{c['span_dim_R']:>6}"
            f"{c['span_dim_total']:>5}{_fmt(c['gap']):>10}{_fmt(c['pde_residual']):>10}"
            f"{_fmt(c['theta_residual']):>10}{_fmt(c['membership_residual']):>10}"
            f"{_fmt(c['transport_residual']):>10}  {verdict}"
        )
    n_ok = sum(c["verdict"] == "pass" for c in certs)
    lines.append(f"{n_ok}/{len(certs)} pass")
    return "\n".join(lines)


def _write(path: str | None, text: str) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _tolerances(args) -> Tolerances:
    kw = {f.name: getattr(args, f"tolerance_{f.name}") for f in fields(Tolerances)
          if getattr(args, f"tolerance_{f.name}") is not None}
    try:
        return Tolerances(**kw)
    except ValueError as err:
        raise UsageError(str(err)) from None


def cmd_examples(args) -> int:
    tol = _tolerances(args)
    ex = paper_examples()
    ids = [args.case] if args.case else list(CASE_IDS)
    for c in ids:
        if c not in ex:
            raise UsageError(f"unknown case {c!r}; expected one of {', '.join(CASE_IDS)}")
    cfgs = [RunConfig(c, ex[c].slots, points=args.points, seed=args.seed, tolerances=tol) for c in ids]
    certs = run_configs(cfgs, args.jobs)
    print(table(certs))
    _write(args.out, dumps(_report(cfgs, certs)))
    return EXIT_OK if all(c["verdict"] == "pass" for c in certs) else EXIT_FAIL


def cmd_verify(args) -> int:
    tol = _tolerances(args)
    try:
        with open(args.config, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as err:
        raise UsageError(f"cannot read config: {err}") from None
    except json.JSONDecodeError as err:
        raise UsageError(f"config is not valid JSON: {err}") from None
    cfg = RunConfig.from_json(data, tol)
    if args.points is not None:
        cfg.points = args.points
    if args.seed is not None:
        cfg.seed = args.seed
    cfg.__post_init__()
    cert = run_configs([cfg])[0]
    print(table([cert]))
    _write(args.out, dumps(_report([cfg], [cert])))
    return EXIT_OK if cert["verdict"] == "pass" else EXIT_FAIL


def cmd_berger(args) -> int:
    from .berger import berger_verdict

    try:
        verdict = berger_verdict(args.algebra)
    except (KeyError, ValueError) as err:
        raise UsageError(str(err.args[0]) if err.args else "unknown algebra") from None
    text = dumps(verdict)
    sys.stdout.write(text)
    _write(args.out, text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="g2hol", description="Holonomy certificates for G2* metrics of type III.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, defaults: bool):
        sp.add_argument("--out", help="write the JSON report here")
        sp.add_argument("--points", type=int, default=20 if defaults else None, help="sample points (default 20)")
        sp.add_argument("--seed", type=int, default=0 if defaults else None, help="point generator seed (default 0)")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes")
        for f in fields(Tolerances):
            sp.add_argument(f"--tolerance-{f.name}", type=float, default=None,
                            help=f"override (default {f.default:g})")

    ex = sub.add_parser("examples", help="certify the built-in examples")
    ex.add_argument("--case", help="run a single case, e.g. 2c")
    common(ex, True)
    ex.set_defaults(func=cmd_examples)

    ve = sub.add_parser("verify", help="certify user-supplied slot functions")
    ve.add_argument("--config", required=True, help="JSON {case, slots, domain{lo,hi}, points, seed}")
    common(ve, False)
    ve.set_defaults(func=cmd_verify)

    be = sub.add_parser("berger", help="Berger verdict for a registered subalgebra")
    be.add_argument("--algebra", required=True, help="registry name, e.g. gl2_m12 or r_Ca(1)")
    be.add_argument("--out")
    be.set_defaults(func=cmd_berger)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:  # argparse uses 2 for usage errors already
        return int(e.code or 0)
    try:
        return args.func(args)
    except ExprSyntaxError as err:
        print(f"error: {err}", file=sys.stderr)
    except CoframeError as err:  # covers dependence and domain (singular coframe) errors
        print(f"error: {err}", file=sys.stderr)
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
    return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
