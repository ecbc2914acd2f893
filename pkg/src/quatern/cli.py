"""Command line front end: ``python -m quatern <command> [flags]``.

Every command writes a JSON-lines report and a CSV table into ``--out``.
Files are written to a temporary name and renamed into place; on failure the
outputs produced by the run are removed and the exit status is nonzero.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .cur import (CUR_BACKENDS, CurConfig, QuatImage, impute_reconstruct, missing_psnr,
                  planted_low_rank, random_mask, relative_error)
from .imaging import csv_psnr, read_mask, read_ppm, write_mask, write_ppm
from .krylov import SOLVERS, KrylovConfig, krylov_solve, precondition_qsai
from .mmio import build_saylr1_system, load_saylr1_or_surrogate
from .pinv import BACKENDS, pinv
from .qcore import QMat, fro_dist, frobenius, read_qmat, write_qmat
from .reference import (EXAMPLE1_ALPHA, EXAMPLE1_ITERATIONS, example1_matrix,
                        example1_pinv_rounded, matches_to_decimals)
from .signal import FILTER_BACKENDS, LorenzParams, build_filter_system, make_frame, solve_filter
from .spectral import qsvd_pinv


class CliError(Exception):
    pass


# ---------------------------------------------------------------------------
# output plumbing

class Outputs:
    """Tracks files written by one command so a failure can clean them up."""

    def __init__(self, out: Path):
        self.out = out
        self.written: list[Path] = []

    def path(self, name: str) -> Path:
        return self.out / name

    def write_bytes(self, name: str, payload: bytes) -> Path:
        dest = self.path(name)
        fd, tmp = tempfile.mkstemp(dir=self.out, prefix=f".{name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(payload)
            os.replace(tmp, dest)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        self.written.append(dest)
        return dest

    def csv(self, name: str, header: list[str], rows: list[list], seed, tol) -> Path:
        buf = io.StringIO()
        buf.write(f"# quatern {__version__} seed={seed} tol={tol}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
        return self.write_bytes(name, buf.getvalue().encode())

    def jsonl(self, name: str, records: list[dict]) -> Path:
        text = "".join(json.dumps(_jsonable(r), sort_keys=True) + "\n" for r in records)
        return self.write_bytes(name, text.encode())

    def track(self, dest: Path) -> None:
        self.written.append(dest)

    def cleanup(self) -> None:
        for p in self.written:
            try:
                p.unlink()
            except FileNotFoundError:
                pass


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def _threads() -> int:
    raw = os.environ.get("QUATERN_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise CliError(f"QUATERN_THREADS must be an integer, got {raw!r}") from None


def _alpha(text: str):
    if text in ("spectral", "frobenius"):
        return text
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--alpha expects spectral, frobenius or a number, got {text!r}")
    if not v > 0:
        raise argparse.ArgumentTypeError("--alpha must be positive")
    return v


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}")
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError("values must be positive")
    return vals


def _float_list(text: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}")
    if not vals or min(vals) <= 0:
        raise argparse.ArgumentTypeError("values must be positive")
    return vals


def _name_list(choices):
    def parse(text: str) -> list[str]:
        vals = [t.strip() for t in text.split(",") if t.strip()]
        bad = [v for v in vals if v not in choices]
        if bad or not vals:
            raise argparse.ArgumentTypeError(f"unknown names {bad}; choose from {', '.join(choices)}")
        return vals
    return parse


def _need_file(p: str | None, what: str) -> Path | None:
    if p is None:
        return None
    path = Path(p)
    if not path.is_file():
        raise CliError(f"{what} not found: {p}")
    return path


# ---------------------------------------------------------------------------
# commands

def cmd_pinv(args, out: Outputs) -> int:
    a = read_qmat(args.input)
    rep = pinv(a, args.method, tol=args.tol, max_iters=args.max_iters,
               alpha_mode=args.alpha, order=args.order)
    dest = out.path("pinv.qmat")
    write_qmat(dest, rep.X)
    out.track(dest)
    rec = rep.summary() | {"input": str(args.input), "shape": list(a.shape)}
    out.jsonl("pinv.jsonl", [rec])
    out.csv("pinv.csv", ["method", "iterations", "converged", "E1", "E2", "E3", "E4", "matmuls", "alpha", "time_s"],
            [[rep.method, rep.iterations, rep.converged, *rep.penrose, rep.matmuls, rep.alpha_used, rep.seconds]],
            args.seed, args.tol)
    print(f"{rep.method}: {rep.iterations} iterations, max Penrose error {rep.max_penrose:.3e}")
    return 0 if rep.converged or rep.stalled or args.method == "qsvd" else 1


def _bench_cell(method: str, n: int, seed: int, tol: float, max_iters: int, alpha) -> dict:
    rng = np.random.default_rng([seed, n])
    a = QMat.random(n, n, rng)
    rep = pinv(a, method, tol=tol, max_iters=max_iters, alpha_mode=alpha)
    oracle = qsvd_pinv(a)
    return {
        "method": rep.method, "n": n, "iterations": rep.iterations, "converged": rep.converged,
        "E1": rep.penrose[0], "E2": rep.penrose[1], "E3": rep.penrose[2], "E4": rep.penrose[3],
        "matmuls": rep.matmuls,
        "qsvd_dist": fro_dist(rep.X, oracle) / max(frobenius(oracle), 1e-300),
        "time_s": rep.seconds,
    }


def cmd_bench(args, out: Outputs) -> int:
    cells = [(m, n) for n in args.sizes for m in args.methods]
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        recs = list(pool.map(lambda c: _bench_cell(c[0], c[1], args.seed, args.tol, args.max_iters, args.alpha),
                             cells))
    cols = ["method", "n", "iterations", "converged", "E1", "E2", "E3", "E4", "matmuls", "qsvd_dist", "time_s"]
    out.csv("bench.csv", cols, [[r[c] for c in cols] for r in recs], args.seed, args.tol)
    out.jsonl("bench.jsonl", recs)
    for r in recs:
        print(f"{r['method']:>10} n={r['n']:<5} its={r['iterations']:<4} "
              f"maxE={max(r['E1'], r['E2'], r['E3'], r['E4']):.2e}")
    return 0


def cmd_precond(args, out: Outputs) -> int:
    a_s, source = load_saylr1_or_surrogate(args.input, seed=args.seed)
    precs = ["none", "qsai"] if args.precond is None else [args.precond]
    recs = []
    for m in args.m:
        a, b = build_saylr1_system(a_s, m, seed=args.seed)
        pre, build = None, 0.0
        if "qsai" in precs:
            t0 = time.perf_counter()
            pre, _ = precondition_qsai(a)
            build = time.perf_counter() - t0
        for solver in args.solvers:
            for p in precs:
                cfg = KrylovConfig(solver=solver, rr_tol=args.tol, k_max=args.max_iters,
                                   precond=None if p == "none" else p)
                rep = krylov_solve(a, b, cfg, pre if p == "qsai" else None)
                recs.append({
                    "matrix": source, "m": m, "solver": solver, "precond": p,
                    "iterations": rep.iterations, "converged": rep.converged,
                    "rr": rep.rr, "true_rr": rep.true_rr, "seed": args.seed,
                    "build_s": build if p == "qsai" else 0.0, "solve_s": rep.precond_time_split[1],
                })
                print(f"m={m} {solver:>9} precond={p:<4} its={rep.iterations:<5} rr={rep.rr:.2e} "
                      f"true_rr={rep.true_rr:.2e}")
    cols = ["matrix", "m", "solver", "precond", "iterations", "converged", "rr", "true_rr", "build_s", "solve_s"]
    out.csv("precond.csv", cols, [[r[c] for c in cols] for r in recs], args.seed, args.tol)
    out.jsonl("precond.jsonl", recs)
    return 0 if all(r["converged"] for r in recs) else 1


def cmd_cur(args, out: Outputs) -> int:
    if args.image is not None:
        truth = QuatImage.from_rgb(read_ppm(args.image))
    else:
        truth = planted_low_rank(seed=args.seed)
    if args.mask is not None:
        mask = read_mask(args.mask)
    else:
        mask = random_mask(truth.pixels.shape, args.missing_fraction, seed=args.seed)
    observed = QuatImage(truth.pixels)  # observed entries come from the image; mask hides the rest
    cfg = CurConfig(rank=args.rank, iters=args.iters, backend=args.method, u_mode=args.u_mode,
                    gaussian_sigma=args.sigma, seed=args.seed, redraw=args.redraw,
                    selection=args.selection)
    result, hist = impute_reconstruct(observed, mask, cfg, truth=truth)
    write_ppm(out.path("completed.ppm"), result.rgb())
    out.track(out.path("completed.ppm"))
    write_mask(out.path("mask.pgm"), mask)
    out.track(out.path("mask.pgm"))
    zero_fill = np.clip(truth.rgb() * mask[..., None], 0.0, 1.0)
    write_ppm(out.path("observed.ppm"), zero_fill)
    out.track(out.path("observed.ppm"))
    out.csv("metrics.csv", ["iter", "psnr_db", "ssim"],
            [[t, csv_psnr(p), s] for t, p, s in hist.rows()], args.seed, cfg.pinv_tol)
    rec = {"backend": cfg.backend, "rank": cfg.rank, "iters": cfg.iters, "u_mode": cfg.u_mode,
           "missing_psnr": missing_psnr(observed, mask, truth),
           "final_psnr": hist.psnr[-1], "final_ssim": hist.ssim[-1],
           "relative_error": relative_error(result, truth),
           "max_scalar_leak": max(hist.scalar_leak), "seed": args.seed}
    out.jsonl("cur.jsonl", [rec])
    print(f"{cfg.backend}: PSNR {hist.psnr[-1]:.3f} dB, SSIM {hist.ssim[-1]:.4f}, "
          f"relative error {rec['relative_error']:.3e}")
    return 0


def cmd_lorenz(args, out: Outputs) -> int:
    recs = []
    for dt in args.dt:
        frame = make_frame(LorenzParams(dt=dt), tau=1, noise=args.noise, seed=args.seed)
        x, s = build_filter_system(frame, order=args.order)
        for be in args.methods:
            res = solve_filter(x, s, be, tol=args.tol, max_iters=args.max_iters)
            recs.append({"dt": dt, "backend": be, "time_s": res.seconds, "epsilon": res.epsilon,
                         "iterations": res.iterations, "order": args.order, "seed": args.seed})
            print(f"dt={dt} {be:>5} eps={res.epsilon:.3e}")
        if args.dump_signal:
            rows = [[float(t), *map(float, v[1:])] for t, v in zip(frame.t, frame.s)]
            out.csv(f"signal_dt{dt}.csv", ["t", "u", "v", "w"], rows, args.seed, args.tol)
    out.csv("lorenz.csv", ["dt", "backend", "time_s", "epsilon"],
            [[r["dt"], r["backend"], r["time_s"], r["epsilon"]] for r in recs], args.seed, args.tol)
    out.jsonl("lorenz.jsonl", recs)
    return 0


def cmd_selftest(args, out: Outputs) -> int:
    a = example1_matrix()
    ref = example1_pinv_rounded()
    recs, ok = [], True
    for backend in ("qsai", "qrapid", "qhpi19", "qsvd"):
        rep = pinv(a, backend, tol=1e-10)
        match = matches_to_decimals(rep.X, ref)
        want = EXAMPLE1_ITERATIONS.get(backend)
        its_ok = want is None or rep.iterations == want
        alpha_ok = backend == "qsvd" or abs(rep.alpha_used / EXAMPLE1_ALPHA - 1.0) <= 1e-6
        good = match and its_ok and alpha_ok
        ok &= good
        recs.append({"backend": backend, "iterations": rep.iterations, "expected_iterations": want,
                     "entries_match": match, "alpha": rep.alpha_used, "max_penrose": rep.max_penrose,
                     "pass": good})
        print(f"{'PASS' if good else 'FAIL'} {backend:>7} iterations={rep.iterations} "
              f"entries_4dp={match} maxE={rep.max_penrose:.2e}")
    out.jsonl("selftest.jsonl", recs)
    out.csv("selftest.csv", ["backend", "iterations", "expected_iterations", "entries_match", "pass"],
            [[r["backend"], r["iterations"], r["expected_iterations"], r["entries_match"], r["pass"]]
             for r in recs], 0, 1e-10)
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="quatern", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"quatern {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, tol=1e-10, max_iters=500):
        sp.add_argument("--out", default="out", help="output directory (created if missing)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--tol", type=float, default=tol)
        sp.add_argument("--max-iters", type=int, default=max_iters)

    sp = sub.add_parser("pinv", help="pseudoinverse of a QMAT file")
    common(sp)
    sp.add_argument("input", help="QMAT input file")
    sp.add_argument("--method", choices=BACKENDS, default="qsai")
    sp.add_argument("--alpha", type=_alpha, default="spectral")
    sp.add_argument("--order", type=int, default=None, help="k, p or N for parametrized methods")

    sp = sub.add_parser("bench", help="methods x sizes sweep on seeded random matrices")
    common(sp)
    sp.add_argument("--sizes", type=_int_list, default=[20, 40])
    sp.add_argument("--methods", type=_name_list(BACKENDS), default=["qns", "qsai", "qhpi19"])
    sp.add_argument("--method", dest="methods", type=_name_list(BACKENDS), help="alias of --methods")
    sp.add_argument("--alpha", type=_alpha, default="spectral")

    sp = sub.add_parser("precond", help="global FOM/GMRES with and without QSAI preconditioning")
    common(sp, tol=1e-6, max_iters=3000)
    sp.add_argument("--input", default=None, help="Matrix Market file (default: saylr1 if found, else surrogate)")
    sp.add_argument("--m", type=_int_list, default=[3, 6], help="right-hand side counts")
    sp.add_argument("--precond", choices=["none", "qsai"], default=None, help="run only this variant")
    sp.add_argument("--solvers", type=_name_list(SOLVERS), default=list(SOLVERS))

    sp = sub.add_parser("cur", help="CUR image completion")
    common(sp)
    sp.add_argument("--image", default=None, help="PPM (P6) image; default is a planted low-rank image")
    sp.add_argument("--mask", default=None, help="PGM (P5) mask, 0 = missing")
    sp.add_argument("--missing-fraction", type=float, default=0.5)
    sp.add_argument("--rank", type=int, default=8)
    sp.add_argument("--iters", type=int, default=15)
    sp.add_argument("--method", choices=CUR_BACKENDS, default="qsvd")
    sp.add_argument("--u-mode", choices=["opt", "cross"], default="opt")
    sp.add_argument("--sigma", type=float, default=None, help="Gaussian smoothing after each sweep")
    sp.add_argument("--redraw", action="store_true", help="draw new rows and columns every sweep")
    sp.add_argument("--selection", choices=["uniform", "energy"], default="uniform")

    sp = sub.add_parser("lorenz", help="FIR filter identification on Lorenz signals")
    common(sp)
    sp.add_argument("--dt", type=_float_list, default=[0.02, 0.05])
    sp.add_argument("--order", type=int, default=31)
    sp.add_argument("--methods", type=_name_list(FILTER_BACKENDS), default=list(FILTER_BACKENDS))
    sp.add_argument("--method", dest="methods", type=_name_list(FILTER_BACKENDS), help="alias of --methods")
    sp.add_argument("--noise", type=float, default=1e-3, help="noise level relative to signal RMS")
    sp.add_argument("--dump-signal", action="store_true")

    sp = sub.add_parser("selftest", help="check the 3x3 worked example")
    sp.add_argument("--out", default="out")
    return p


COMMANDS = {"pinv": cmd_pinv, "bench": cmd_bench, "precond": cmd_precond, "cur": cmd_cur,
            "lorenz": cmd_lorenz, "selftest": cmd_selftest}


def _validate(args) -> None:
    if args.command == "pinv":
        _need_file(args.input, "QMAT input")
    if args.command == "precond":
        _need_file(args.input, "Matrix Market input")
    if args.command == "cur":
        _need_file(args.image, "image")
        _need_file(args.mask, "mask")
        if not 0.0 <= args.missing_fraction < 1.0:
            raise CliError("--missing-fraction must lie in [0, 1)")
    if args.command == "lorenz" and args.order < 0:
        raise CliError("--order must be nonnegative")
    _threads()


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _validate(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    out = Outputs(out_dir)
    try:
        code = COMMANDS[args.command](args, out)
    except Exception as e:  # report and clean up partial outputs
        out.cleanup()
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    if code != 0:
        print(f"{args.command}: checks failed", file=sys.stderr)
    return code
