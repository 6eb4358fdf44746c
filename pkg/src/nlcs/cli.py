"""Command-line driver: ``nlcs sweep | verify | state | spectrum``.

Exit codes: 0 success, 1 invariant failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import NLCSError
from .nonclassicality import evaluate
from .nonlinearity import combined_nonlinearity, get_model, gk_combined_nonlinearity
from .sweep import PRESETS, VERIFY_MODELS, ConfigError, SweepConfig, run_figure_sweep, verify
from .states import StateSpec, build_state

EXIT_OK, EXIT_INVARIANT, EXIT_CONFIG = 0, 1, 2


def _load_json_arg(text: str) -> dict:
    """Accept inline JSON or a path to a JSON file."""
    path = Path(text)
    if not text.lstrip().startswith("{") and path.exists():
        text = path.read_text()
    return json.loads(text)


def _cmd_sweep(args) -> int:
    if args.config:
        config = SweepConfig.from_dict(_load_json_arg(args.config))
    else:
        config = PRESETS[args.preset]
    overrides = {}
    if args.format:
        overrides["output_format"] = args.format
    if args.source:
        overrides["source"] = args.source
    if overrides:
        config = SweepConfig.from_dict({**config.to_dict(), **_flatten(overrides, config)})
    out = args.out or config.output_path or str(Path("results") / config.name)
    for path in run_figure_sweep(config, out, workers=args.workers):
        print(path)
    return EXIT_OK


def _flatten(overrides: dict, config: SweepConfig) -> dict:
    d = dict(overrides)
    if "output_format" in d:
        d["output"] = {"path": config.output_path, "format": d.pop("output_format")}
    return d


def _cmd_verify(args) -> int:
    report = verify(args.model)
    print(json.dumps(report, indent=2))
    return EXIT_OK if report["passed"] else EXIT_INVARIANT


def _cmd_state(args) -> int:
    spec = StateSpec.from_dict(_load_json_arg(args.spec))
    state, norm = build_state(spec, tol=args.tol)
    report = evaluate(spec, tol=args.tol)
    out = {
        "spec": spec.to_dict(),
        "dim": state.dim,
        "tail_bound": state.tail_bound,
        "normalization": norm,
        "report": {
            "g2": report.g2, "I1": report.I1, "I2": report.I2, "I3": report.I3,
            "I4": report.I4, "mean_n": report.mean_n, "source": report.source,
            "statistics": report.statistics(),
        },
    }
    if args.dump_coeffs:
        out["coeffs"] = [[c.real, c.imag] for c in state.coeffs]
    print(json.dumps(out, indent=2))
    return EXIT_OK


def _cmd_spectrum(args) -> int:
    s, f = get_model(args.model, args.lam, args.kappa)
    n = np.arange(args.n_max + 1)
    if args.transform == "s1":
        f = combined_nonlinearity(f)
    elif args.transform == "gk-s1":
        if args.gamma is None:
            raise ConfigError("--transform gk-s1 needs --gamma")
        f = gk_combined_nonlinearity(s, args.gamma)
    fn = np.asarray(f(n), dtype=complex)
    e = n * np.abs(fn) ** 2
    print("n,f_re,f_im,e_n")
    for k in n:
        print(f"{k},{float(fn[k].real)!r},{float(fn[k].imag)!r},{float(e[k])!r}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nlcs", description="Nonlinear coherent states and their non-classicality.")
    sub = p.add_subparsers(dest="command", required=True)

    sw = sub.add_parser("sweep", help="compute figure datasets")
    src = sw.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=sorted(PRESETS))
    src.add_argument("--config", help="sweep config as JSON text or a path")
    sw.add_argument("--out", help="output directory (default results/<name>)")
    sw.add_argument("--format", choices=("csv", "json"))
    sw.add_argument("--source", choices=("auto", "oracle", "closed-form"))
    sw.add_argument("--workers", type=int, default=1)
    sw.set_defaults(func=_cmd_sweep)

    vf = sub.add_parser("verify", help="run invariant and double-entry checks")
    vf.add_argument("--model", choices=sorted(VERIFY_MODELS))
    vf.set_defaults(func=_cmd_verify)

    st = sub.add_parser("state", help="build one state and report its indicators")
    st.add_argument("--spec", required=True, help="state spec as JSON text or a path")
    st.add_argument("--dump-coeffs", action="store_true")
    st.add_argument("--tol", type=float, default=1e-12)
    st.set_defaults(func=_cmd_state)

    sp = sub.add_parser("spectrum", help="tabulate f(n) and the deformed spectrum n|f(n)|^2")
    sp.add_argument("--model", default="hydrogen")
    sp.add_argument("--lambda", dest="lam", type=float)
    sp.add_argument("--kappa", type=float)
    sp.add_argument("--n-max", type=int, default=20)
    sp.add_argument("--transform", choices=("none", "s1", "gk-s1"), default="none")
    sp.add_argument("--gamma", type=float)
    sp.set_defaults(func=_cmd_spectrum)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "workers", 1) < 1:
        print("error: --workers must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigError, NLCSError, KeyError, ValueError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
