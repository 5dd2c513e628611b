"""Command-line entry point: ``pairwalk run|sweep|validate``.

Exit codes: 0 success, 1 engine error (or failed validation / sweep point),
2 configuration error. Errors are also written to stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from pairwalk import __version__
from pairwalk.errors import ConfigError, PairwalkError

OUT_DIR_ENV = "PAIRWALK_OUT_DIR"
DEFAULT_OUT_DIR = "pairwalk-out"

EXIT_OK, EXIT_ENGINE, EXIT_CONFIG = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; add the JSON error line."""

    def error(self, message):
        _emit_error("UsageError", message, None, EXIT_CONFIG)
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _emit_error(kind, message, field, code):
    doc = {"error": {"type": kind, "message": message, "field": field}, "exit_code": code}
    print(json.dumps(doc), file=sys.stderr)


def _add_run_options(p):
    p.add_argument("spec", help="spec JSON file or preset name (fig1, fig2, fig3, fig4a, fig4b)")
    p.add_argument("--fast", action="store_true", help="halve n_sites and t_final")
    p.add_argument("--out-dir", type=Path, default=None,
                   help=f"output directory (default: ${OUT_DIR_ENV} or ./{DEFAULT_OUT_DIR})")
    p.add_argument("--threads", type=int, default=None,
                   help="worker processes for sweeps (default: available cores)")
    p.add_argument("--dt", type=float, default=None, help="override the time step")
    p.add_argument("--n-sites", type=int, default=None, help="override the lattice length")
    p.add_argument("--t-final", type=float, default=None, help="override the run length")
    p.add_argument("--resume", action="store_true",
                   help="skip sweep points whose report already matches the config")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pairwalk", description="Two-particle lattice pulse simulator.")
    parser.add_argument("--version", action="version", version=f"pairwalk {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _add_run_options(sub.add_parser("run", help="run one spec (sweeps are expanded)"))
    _add_run_options(sub.add_parser("sweep", help="run every point of a sweep spec"))
    v = sub.add_parser("validate", help="oracle cross-checks and invariants on small lattices")
    v.add_argument("--json", action="store_true", help="print the full JSON summary")
    v.add_argument("--mutate", choices=["rhs-sign"], default=None,
                   help="run the checks against a deliberately broken engine")
    return parser


def _out_dir(args) -> Path:
    if args.out_dir is not None:
        return args.out_dir
    return Path(os.environ.get(OUT_DIR_ENV) or DEFAULT_OUT_DIR)


def _load(args):
    from pairwalk.harness.config import load_spec

    spec = load_spec(args.spec)
    extra = {}
    if args.t_final is not None:
        extra["t_final"] = args.t_final
    return spec.with_overrides(fast=args.fast, dt=args.dt, n_sites=args.n_sites, **extra)


def _cmd_run(args) -> int:
    from pairwalk.harness.runner import json_safe, run_single

    spec = _load(args)
    if spec.is_sweep:
        return _sweep(spec, args)
    art = run_single(spec, _out_dir(args))
    out = {"status": "ok" if art.outcome.ok else "error",
           "files": {k: str(v) for k, v in art.paths.items()},
           "summary": art.outcome.summary}
    print(json.dumps(json_safe(out), default=str))
    if not art.outcome.ok:
        err = art.outcome.error
        _emit_error(err["type"], err["message"], None, EXIT_ENGINE)
        return EXIT_ENGINE
    return EXIT_OK


def _sweep(spec, args) -> int:
    from pairwalk.harness.runner import run_sweep

    result = run_sweep(spec, _out_dir(args), threads=args.threads, resume=args.resume)
    print(json.dumps({"status": "ok" if result.n_failed == 0 else "partial",
                      "table": str(result.table), "points": len(result.rows),
                      "failed": result.n_failed}))
    if result.n_failed:
        failed = [r["point"] for r in result.rows if r["status"] != "ok"]
        _emit_error("SweepPointsFailed", f"{len(failed)} point(s) failed: {failed}", None,
                    EXIT_ENGINE)
        return EXIT_ENGINE
    return EXIT_OK


def _cmd_sweep(args) -> int:
    return _sweep(_load(args), args)


def _cmd_validate(args) -> int:
    from pairwalk.harness.validate import MUTATIONS, summary, validate_suite

    hooks = MUTATIONS[args.mutate] if args.mutate else {}
    results = validate_suite(**hooks)
    doc = summary(results)
    if args.json:
        print(json.dumps(doc, indent=2))
    else:
        for r in results:
            mark = "PASS" if r.passed else "FAIL"
            print(f"{mark}  {r.name:<20} value={r.value:.3e} limit={r.limit:.3e} {r.detail}")
        print(f"{doc['n_checks'] - doc['n_failed']}/{doc['n_checks']} checks passed")
    return EXIT_OK if doc["passed"] else EXIT_ENGINE


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "sweep": _cmd_sweep, "validate": _cmd_validate}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        _emit_error(type(exc).__name__, str(exc), exc.field, EXIT_CONFIG)
        return EXIT_CONFIG
    except PairwalkError as exc:
        _emit_error(type(exc).__name__, str(exc), getattr(exc, "field", None), EXIT_ENGINE)
        return EXIT_ENGINE
    except OSError as exc:
        _emit_error(type(exc).__name__, str(exc), None, EXIT_ENGINE)
        return EXIT_ENGINE


if __name__ == "__main__":
    sys.exit(main())
