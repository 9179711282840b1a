"""Command-line interface: a thin client over the HTTP service.

Commands: solve, curve, dissociate, fci, check, serve.  By default the
service runs in-process; ``--server URL`` targets a remote instance.  A
flat ``key = value`` config file can seed any long option; explicit flags
win.  Exit codes: 0 success, 1 check-suite failure, 2 input/parse error,
3 solver non-convergence (report still written), 4 numerical/internal
error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import sys
from pathlib import Path

import httpx

from .client import SolverClient

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT = 2
EXIT_NONCONVERGENCE = 3
EXIT_NUMERICAL = 4

_INPUT_CODES = {"parse_error", "data_error", "input_error", "bracket_error"}


class CliInputError(Exception):
    pass


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_config_value(raw: str):
    raw = raw.strip()
    low = raw.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    for cast in (int, float):
        try:
            return cast(raw)
        except ValueError:
            continue
    return raw


def load_config(path: str) -> dict:
    """Flat key = value file; '#' starts a comment; keys use flag names."""
    values = {}
    text = Path(path).read_text()
    for ln, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliInputError(f"{path}:{ln}: expected 'key = value'")
        key, raw = line.split("=", 1)
        values[key.strip().lower().replace("-", "_")] = _parse_config_value(raw)
    return values


def _add_source_options(p: argparse.ArgumentParser):
    p.add_argument("--fcidump", metavar="PATH", help="FCIDUMP integral file")
    p.add_argument("--toy", choices=("hubbard-dimer", "random"), help="built-in toy model")
    p.add_argument("--t", type=float, help="hubbard-dimer hopping (default 1)")
    p.add_argument("--U", dest="u", type=float, help="hubbard-dimer on-site repulsion (default 4)")
    p.add_argument("--seed", type=int, help="random toy seed (default 0)")
    p.add_argument("--r", type=int, help="random toy spin-orbital count (default 6)")
    p.add_argument("--n", type=int, help="random toy electron count (default 2)")
    p.add_argument("--scale", type=float, help="random toy integral scale (default 1)")


def _add_solver_options(p: argparse.ArgumentParser):
    p.add_argument("--mu0", type=float, help="initial dual variable (default: determinant bound)")
    p.add_argument("--damping", type=float, help="Newton damping fraction in (0,1] (default 0.8)")
    p.add_argument("--slope-tol", type=float, help="interpolation-slope stop tolerance (default 0.05)")
    p.add_argument("--max-outer", type=int, help="outer iteration limit (default 50)")
    p.add_argument("--no-confirm", action="store_true", help="skip the extrapolation probe")
    p.add_argument("--gradient-tol", type=float, help="projection gradient tolerance (absolute)")
    p.add_argument("--max-inner", type=int, help="projection iteration budget (default 20000)")
    p.add_argument("--memory", type=int, help="quasi-Newton history length (default 3)")
    p.add_argument("--distance-floor", type=float, help="distances below this count as zero (default 1e-9)")
    p.add_argument("--ortho-tol", type=float, help="residual/projection orthogonality tolerance (default 1e-5)")
    p.add_argument("--conditions", help="comma-separated condition tags (default P,Q,G)")


def _add_output_options(p: argparse.ArgumentParser):
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="output format (default csv)")
    p.add_argument("--output", metavar="PATH", help="write the report to a file instead of stdout")
    p.add_argument("--no-timestamp", action="store_true", help="suppress the timestamp header line")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rdmbound",
        description="Lower bounds to fermionic ground-state energies by dual cone projection",
    )
    parser.add_argument("--server", metavar="URL", help="use a running service instead of in-process")
    parser.add_argument("--config", metavar="PATH", help="flat key=value config file (flags override)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="dual lower-bound energy for one system")
    _add_source_options(p)
    _add_solver_options(p)
    _add_output_options(p)
    p.add_argument("--with-fci", action="store_true", help="also compute the FCI reference energy")
    p.add_argument("--reference-fci", type=float, help="externally known FCI energy")
    p.add_argument("--reference-hf", type=float, help="externally known HF energy (enables correlation %%)")

    p = sub.add_parser("curve", help="sample the cone distance over a mu grid")
    _add_source_options(p)
    _add_solver_options(p)
    _add_output_options(p)
    p.add_argument("--mu-min", type=float, required=False, help="grid start")
    p.add_argument("--mu-max", type=float, required=False, help="grid end")
    p.add_argument("--points", type=int, required=False, help="number of grid points (>= 2)")
    p.add_argument("--workers", type=int, help="concurrent projections (default: RDMBOUND_THREADS or CPU count)")

    p = sub.add_parser("dissociate", help="batch of independent solves, one row per geometry")
    p.add_argument("files", nargs="*", metavar="FCIDUMP", help="one FCIDUMP file per geometry")
    _add_solver_options(p)
    _add_output_options(p)
    p.add_argument("--labels", help="comma-separated labels matching the file list")
    p.add_argument("--hubbard-scan-u", metavar="U1,U2,...", help="toy batch: hubbard-dimer scan over U")
    p.add_argument("--t", type=float, help="hopping for --hubbard-scan-u (default 1)")
    p.add_argument("--with-fci", action="store_true", help="add an FCI reference column")

    p = sub.add_parser("fci", help="full CI oracle energy")
    _add_source_options(p)
    _add_output_options(p)
    p.add_argument("--cap", type=int, help="determinant-count cap (default 50000)")
    p.add_argument("--rdm-out", metavar="PATH", help="write the ground-state 2-RDM matrix as CSV")

    p = sub.add_parser("check", help="run the invariant suites")
    p.add_argument("--seed", type=int, default=2024, help="suite seed (default 2024)")
    p.add_argument("--corrupt", help="sabotage one named suite (negative control hook)")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


def _apply_config(args: argparse.Namespace, argv: list[str]) -> argparse.Namespace:
    if not getattr(args, "config", None):
        return args
    values = load_config(args.config)
    argv_flags = {a.split("=", 1)[0].lower() for a in argv if a.startswith("--")}
    for key, value in values.items():
        flag = "--" + key.replace("_", "-")
        if flag in argv_flags:
            continue  # explicit flag wins
        if hasattr(args, key):
            setattr(args, key, value)
    return args


def _source_payload(args) -> dict:
    fcidump = getattr(args, "fcidump", None)
    toy = getattr(args, "toy", None)
    if fcidump and toy:
        raise CliInputError("give either --fcidump or --toy, not both")
    if fcidump:
        path = Path(fcidump)
        if not path.is_file():
            raise CliInputError(f"FCIDUMP file not found: {path}")
        return {"fcidump": path.read_text()}
    if toy == "hubbard-dimer":
        return {
            "hubbard_dimer": {
                "t": args.t if args.t is not None else 1.0,
                "u": args.u if args.u is not None else 4.0,
            }
        }
    if toy == "random":
        return {
            "random": {
                "seed": args.seed if args.seed is not None else 0,
                "r": args.r if args.r is not None else 6,
                "n": args.n if args.n is not None else 2,
                "scale": args.scale if args.scale is not None else 1.0,
            }
        }
    raise CliInputError("no input source: give --fcidump PATH or --toy NAME")


def _solver_payload(args) -> dict:
    newton = {}
    for key in ("mu0", "damping", "slope_tol", "max_outer"):
        value = getattr(args, key, None)
        if value is not None:
            newton[key] = value
    if getattr(args, "no_confirm", False):
        newton["confirm_extrapolation"] = False
    proj = {}
    for src, dst in (
        ("gradient_tol", "gradient_tol"),
        ("max_inner", "max_iterations"),
        ("memory", "memory"),
        ("distance_floor", "distance_floor"),
        ("ortho_tol", "ortho_tol"),
    ):
        value = getattr(args, src, None)
        if value is not None:
            proj[dst] = value
    conditions = getattr(args, "conditions", None)
    if conditions:
        proj["conditions"] = [t.strip().upper() for t in conditions.split(",") if t.strip()]
    return {"newton": newton, "projection": proj}


def _open_output(args):
    if getattr(args, "output", None):
        return open(args.output, "w")
    return sys.stdout


def _timestamp_line(args) -> str | None:
    if getattr(args, "no_timestamp", False):
        return None
    return f"# generated {_dt.datetime.now().isoformat(timespec='seconds')}"


def _emit(args, lines: list[str]):
    stamp = _timestamp_line(args)
    out = _open_output(args)
    try:
        if stamp is not None:
            print(stamp, file=out)
        for line in lines:
            print(line, file=out)
    finally:
        if out is not sys.stdout:
            out.close()


def _http_error_exit(status: int, body: dict) -> int:
    code = body.get("code", "")
    message = body.get("message") or body.get("detail") or str(body)
    print(f"error: {message}", file=sys.stderr)
    if status == 422 or code in _INPUT_CODES:
        return EXIT_INPUT
    return EXIT_NUMERICAL


def cmd_solve(client: SolverClient, args) -> int:
    payload = {"source": _source_payload(args), **_solver_payload(args)}
    if getattr(args, "with_fci", False):
        payload["compute_fci"] = True
    if getattr(args, "reference_fci", None) is not None:
        payload["reference_fci"] = args.reference_fci
    if getattr(args, "reference_hf", None) is not None:
        payload["reference_hf"] = args.reference_hf
    status, body = client.post("/api/solve", payload)
    if status != 200:
        return _http_error_exit(status, body)

    if args.format == "json":
        lines = [json.dumps(body, indent=2, sort_keys=True)]
    else:
        lines = [
            f"# energy_hartree = {_fmt(body['energy'])}",
            f"# mu_star = {_fmt(body['mu_star'])}",
            f"# e_core = {_fmt(body['e_core'])}",
            f"# newton_iterations = {body['newton_iterations']}",
            f"# inner_iteration_total = {body['inner_iteration_total']}",
            f"# wall_time_s = {body['wall_time_s']:.3f}",
            f"# status = {body['status']}",
        ]
        if body.get("e_fci") is not None:
            lines.append(f"# e_fci = {_fmt(body['e_fci'])}")
        if body.get("correlation_percent") is not None:
            lines.append(f"# correlation_percent = {_fmt(body['correlation_percent'])}")
        lines.append("kind,mu,delta,derivative,slope,inner_iterations")
        for s in body["steps"]:
            lines.append(
                f"{s['kind']},{_fmt(s['mu'])},{_fmt(s['delta'])},{_fmt(s['derivative'])},"
                f"{_fmt(s.get('slope'))},{s['inner_iterations']}"
            )
    _emit(args, lines)
    if body["status"] != "converged":
        print(f"warning: {body.get('detail') or 'solver did not converge'}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    return EXIT_OK


def cmd_curve(client: SolverClient, args) -> int:
    if args.mu_min is None or args.mu_max is None or args.points is None:
        raise CliInputError("curve needs --mu-min, --mu-max and --points")
    payload = {
        "source": _source_payload(args),
        "mu_min": args.mu_min,
        "mu_max": args.mu_max,
        "points": args.points,
        "projection": _solver_payload(args)["projection"],
    }
    if getattr(args, "workers", None) is not None:
        payload["max_workers"] = args.workers
    status, body = client.post("/api/curve", payload)
    if status != 200:
        return _http_error_exit(status, body)
    points = body["points"]
    if args.format == "json":
        lines = [json.dumps(body, indent=2, sort_keys=True)]
    else:
        lines = ["mu,delta,derivative,error"]
        for p in points:
            lines.append(f"{_fmt(p['mu'])},{_fmt(p['delta'])},{_fmt(p['derivative'])},{p.get('error') or ''}")
    _emit(args, lines)
    n_ok = sum(1 for p in points if not p.get("error"))
    return EXIT_OK if n_ok >= 1 else EXIT_NUMERICAL


def cmd_dissociate(client: SolverClient, args) -> int:
    items = []
    labels = [s.strip() for s in args.labels.split(",")] if getattr(args, "labels", None) else None
    if labels and len(labels) != len(args.files):
        raise CliInputError(f"{len(labels)} labels for {len(args.files)} files")
    for idx, name in enumerate(args.files):
        path = Path(name)
        if not path.is_file():
            raise CliInputError(f"FCIDUMP file not found: {path}")
        label = labels[idx] if labels else path.stem
        items.append({"label": label, "source": {"fcidump": path.read_text()}})
    if getattr(args, "hubbard_scan_u", None):
        t = args.t if args.t is not None else 1.0
        for raw in args.hubbard_scan_u.split(","):
            u = float(raw)
            items.append({"label": f"U={raw.strip()}", "source": {"hubbard_dimer": {"t": t, "u": u}}})
    if not items:
        raise CliInputError("nothing to do: give FCIDUMP files and/or --hubbard-scan-u")
    payload = {"items": items, **_solver_payload(args)}
    if getattr(args, "with_fci", False):
        payload["compute_fci"] = True
    status, body = client.post("/api/dissociate", payload)
    if status != 200:
        return _http_error_exit(status, body)
    if args.format == "json":
        lines = [json.dumps(body, indent=2, sort_keys=True)]
    else:
        lines = ["label,e_app,e_fci,gap,error"]
        for row in body["rows"]:
            lines.append(
                f"{row['label']},{_fmt(row.get('e_app'))},{_fmt(row.get('e_fci'))},"
                f"{_fmt(row.get('gap'))},{row.get('error') or ''}"
            )
    _emit(args, lines)
    return EXIT_OK


def cmd_fci(client: SolverClient, args) -> int:
    payload = {"source": _source_payload(args)}
    if getattr(args, "cap", None) is not None:
        payload["determinant_cap"] = args.cap
    if getattr(args, "rdm_out", None):
        payload["with_rdm"] = True
    status, body = client.post("/api/fci", payload)
    if status != 200:
        return _http_error_exit(status, body)
    if args.format == "json":
        shown = {k: v for k, v in body.items() if k != "rdm"}
        lines = [json.dumps(shown, indent=2, sort_keys=True)]
    else:
        lines = [
            f"# energy_hartree = {_fmt(body['energy'])}",
            f"# determinants = {body['dimension']}",
            f"# n_spin_orbitals = {body['n_spin_orbitals']}",
            f"# n_electrons = {body['n_electrons']}",
            f"# wall_time_s = {body['wall_time_s']:.3f}",
        ]
    _emit(args, lines)
    if getattr(args, "rdm_out", None):
        rdm = body.get("rdm") or []
        with open(args.rdm_out, "w") as fh:
            fh.write("# two-body density matrix, ordered-pair basis (i<j, lexicographic)\n")
            for row in rdm:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
    return EXIT_OK


def cmd_check(client: SolverClient, args) -> int:
    payload = {"seed": args.seed}
    if getattr(args, "corrupt", None):
        payload["corrupt"] = args.corrupt
    status, body = client.post("/api/check", payload)
    if status != 200:
        return _http_error_exit(status, body)
    for suite in body["suites"]:
        verdict = "PASS" if suite["passed"] else "FAIL"
        print(f"{verdict} {suite['name']}: {suite['detail']}")
    if body["passed"]:
        print("all suites passed")
        return EXIT_OK
    failed = ", ".join(s["name"] for s in body["suites"] if not s["passed"])
    print(f"failing suites: {failed}", file=sys.stderr)
    return EXIT_CHECK_FAILED


def cmd_serve(args) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _apply_config(args, argv)
        if args.command == "serve":
            return cmd_serve(args)
        if args.server:
            client = SolverClient.remote(args.server)
        else:
            client = SolverClient.local()
        with client:
            handler = {
                "solve": cmd_solve,
                "curve": cmd_curve,
                "dissociate": cmd_dissociate,
                "fci": cmd_fci,
                "check": cmd_check,
            }[args.command]
            return handler(client, args)
    except CliInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (httpx.HTTPError, ConnectionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
