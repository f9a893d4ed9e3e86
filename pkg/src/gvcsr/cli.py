"""Command-line driver.

Exit codes: 0 success, 2 usage, 3 data integrity, 4 internal error.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import logging
import os
import sys
import tempfile
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .admm import SparseCodingParams
from .codec.bitstream import (
    Bitstream,
    BitstreamError,
    decode_image,
    encode_image_full,
    psnr,
)
from .codec.blocks import to_patches
from .codec.image import PgmError, pgm_bytes, read_pgm
from .dictlearn import Dictionary, DictionaryFormatError, LearnParams, learn
from .experiments import (
    VARBITS_COLUMNS,
    VARBITS_SCHEMA,
    RD_COLUMNS,
    RD_SCHEMA,
    TRACE_COLUMNS,
    TRACE_SCHEMA,
    varbits_rows,
    parse_coder,
    rd_sweep,
    trace_rows,
)
from .pursuit import PursuitStop
from .setcoder import SetParams, decode_set, encode_set

log = logging.getLogger("gvcsr")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 2, 3, 4


class UsageError(Exception):
    pass


def default_dictionary_path():
    return resources.files("gvcsr") / "data" / "global_g4.gvcd"


def _float_list(text):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("list must not be empty")
    return vals


def _int_list(text):
    return [int(v) for v in _float_list(text)]


def _existing(paths):
    for p in paths:
        if not Path(p).is_file():
            raise UsageError(f"no such file: {p}")


def _load_dict(path):
    if path is None:
        with resources.as_file(default_dictionary_path()) as p:
            return Dictionary.load(p)
    _existing([path])
    return Dictionary.load(path)


def _atomic_write(path, data):
    """Write via a temporary file so a failure leaves no partial output."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=".gvcsr-")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def _write_csv(path, schema, columns, rows):
    out = open(path, "w", newline="") if path else contextlib.nullcontext(sys.stdout)
    with out as f:
        f.write(f"# schema={schema}\n")
        w = csv.writer(f, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([f"{v:.10g}" if isinstance(v, float) else v for v in r])


def _sparse_params(args):
    return SparseCodingParams(alpha=args.alpha, beta=args.beta, max_iters=args.max_iters)


def _coder(args):
    try:
        return parse_coder(args.coder, args.alpha, args.beta, args.max_iters)
    except ValueError as exc:
        raise UsageError(str(exc))


def cmd_train(args):
    if not args.corpus:
        raise UsageError("train needs at least one PGM image")
    _existing(args.corpus)
    images = [read_pgm(p) for p in args.corpus]
    s = np.hstack([to_patches(im, args.patch).residuals for im in images])
    m = int(round(args.gamma * args.patch * args.patch))
    params = LearnParams(_sparse_params(args), outer_iters=args.outer_iters, seed=args.seed)
    log.info("training %d atoms on %d patches", m, s.shape[1])
    d, _, report = learn(s, m, params)
    for r in report.rounds:
        print(
            f"round={r.round} fidelity={r.fidelity:.6g} l0={r.l0} variance={r.variance:.6g} "
            f"objective={r.objective:.6g} inner_iters={r.inner.iterations} "
            f"converged={int(r.inner.converged)} mu_above_bound={int(r.mu_exceeds_bound)}"
        )
    _atomic_write(args.out, d.to_bytes())
    print(f"dictionary={args.out} n={d.n} m={d.m} hash={d.hash.hex()}")


def cmd_encode(args):
    _existing([args.image])
    img = read_pgm(args.image)
    d = _load_dict(args.dict)
    res = encode_image_full(img, d, _coder(args), args.quant)
    _atomic_write(args.out, res.bitstream.to_bytes())
    if args.recon:
        _atomic_write(args.recon, pgm_bytes(res.reconstruction))
    bpp = res.bitstream.total_bits / (img.width * img.height)
    print(f"bpp={bpp:.6f} psnr={psnr(img, res.reconstruction):.4f} bits={res.bitstream.total_bits}")


def cmd_decode(args):
    _existing([args.stream])
    d = _load_dict(args.dict)
    with open(args.stream, "rb") as f:
        bs = Bitstream.from_bytes(f.read())
    img = decode_image(bs, d)
    _atomic_write(args.out, pgm_bytes(img))
    line = f"bpp={bs.total_bits / (img.width * img.height):.6f}"
    if args.reference:
        _existing([args.reference])
        line += f" psnr={psnr(read_pgm(args.reference), img):.4f}"
    print(line)


def cmd_rd_sweep(args):
    _existing(args.images)
    images = [read_pgm(p) for p in args.images]
    d = _load_dict(args.dict)
    coders = [
        SparseCodingParams(alpha=a, beta=b, max_iters=args.max_iters)
        for a in args.alpha_list for b in args.beta_list
    ]
    coders += [PursuitStop.L(n) for n in args.omp_l or []]
    coders += [PursuitStop.E(e) for e in args.omp_e or []]
    points = rd_sweep(images, d, coders, args.quant_list)
    _write_csv(args.out, RD_SCHEMA, RD_COLUMNS, [p.row() for p in points])


def cmd_trace(args):
    _existing([args.image])
    d = _load_dict(args.dict)
    s = to_patches(read_pgm(args.image), int(round(np.sqrt(d.n)))).residuals
    rows, report = trace_rows(s, d.atoms, _sparse_params(args))
    log.info("iterations=%d converged=%s", report.iterations, report.converged)
    _write_csv(args.out, TRACE_SCHEMA, TRACE_COLUMNS, rows)


def cmd_var_bits(args):
    variances = args.variances or list(np.logspace(0, 4, 10))
    rows = varbits_rows(variances, n=args.samples, step=args.quant, seed=args.seed)
    _write_csv(args.out, VARBITS_SCHEMA, VARBITS_COLUMNS, rows)


def cmd_set_encode(args):
    if not args.images:
        raise UsageError("set-encode needs at least one image")
    _existing(args.images)
    images = [read_pgm(p) for p in args.images]
    d = _load_dict(args.dict)
    params = SetParams(
        alpha=args.alpha, beta=args.beta, step=args.quant, gamma=int(args.gamma),
        outer_iters=args.outer_iters, max_iters=args.max_iters, seed=args.seed,
    )
    res = encode_set(images, d, params)
    _atomic_write(args.out, res.archive)
    rates, quals = [], []
    for i, (img, rec) in enumerate(zip(images, res.reconstructions)):
        b = res.bits[i] / (img.width * img.height)
        q = psnr(img, rec)
        rates.append(b)
        quals.append(q)
        print(f"image={i} parent={res.parents[i]} bpp={b:.6f} psnr={q:.4f} dict={res.dict_hashes[i].hex()}")
    print(f"average bpp={np.mean(rates):.6f} psnr={np.mean(quals):.4f}")


def cmd_set_decode(args):
    _existing([args.archive])
    d = _load_dict(args.dict)
    with open(args.archive, "rb") as f:
        images, hashes = decode_set(f.read(), d)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, img in enumerate(images):
        _atomic_write(out / f"image{i:03d}.pgm", pgm_bytes(img))
        print(f"image={i} dict={hashes[i].hex()} -> {out / f'image{i:03d}.pgm'}")


def _add_sparse(p, alpha=50.0, beta=1e-4):
    p.add_argument("--alpha", type=float, default=alpha, help="l0 weight")
    p.add_argument("--beta", type=float, default=beta, help="variance weight")
    p.add_argument("--max-iters", type=int, default=2000)


def build_parser():
    ap = argparse.ArgumentParser(prog="gvcsr", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="learn a dictionary from PGM images")
    p.add_argument("corpus", nargs="*")
    _add_sparse(p)
    p.add_argument("--gamma", type=float, default=4.0, help="completeness M/N")
    p.add_argument("--patch", type=int, default=8)
    p.add_argument("--outer-iters", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("encode", help="encode one PGM image")
    p.add_argument("image")
    p.add_argument("--dict", help="GVCD dictionary (default: shipped global dictionary)")
    p.add_argument("--coder", default="gvcsr", help="gvcsr | omp-l:L | omp-e:EPS")
    _add_sparse(p)
    p.add_argument("--quant", type=float, default=8.0)
    p.add_argument("--recon", help="also write the encoder-side reconstruction")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="decode a GVCB bitstream to PGM")
    p.add_argument("stream")
    p.add_argument("--dict")
    p.add_argument("--reference", help="original image, for PSNR")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("rd-sweep", help="rate-distortion sweep to CSV")
    p.add_argument("images", nargs="+")
    p.add_argument("--dict")
    p.add_argument("--alpha", dest="alpha_list", type=_float_list, default=[50.0])
    p.add_argument("--beta", dest="beta_list", type=_float_list, default=[1e-4])
    p.add_argument("--omp-l", type=_int_list)
    p.add_argument("--omp-e", type=_float_list)
    p.add_argument("--quant", dest="quant_list", type=_float_list, default=[8.0])
    p.add_argument("--max-iters", type=int, default=2000)
    p.add_argument("--out")
    p.set_defaults(func=cmd_rd_sweep)

    p = sub.add_parser("trace", help="per-iteration convergence trace to CSV")
    p.add_argument("image")
    p.add_argument("--dict")
    _add_sparse(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("var-bits", help="Laplacian variance vs coding bits to CSV")
    p.add_argument("--variances", type=_float_list)
    p.add_argument("--samples", type=int, default=20000)
    p.add_argument("--quant", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_var_bits)

    p = sub.add_parser("set-encode", help="encode an image set")
    p.add_argument("images", nargs="*")
    p.add_argument("--dict", help="global dictionary for the root image")
    _add_sparse(p)
    p.add_argument("--gamma", type=float, default=14.0)
    p.add_argument("--quant", type=float, default=8.0)
    p.add_argument("--outer-iters", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_set_encode)

    p = sub.add_parser("set-decode", help="decode an image-set archive")
    p.add_argument("archive")
    p.add_argument("--dict")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_set_decode)
    return ap


def _thread_limit():
    n = os.environ.get("GVCSR_THREADS")
    if not n:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=max(1, int(n)))


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
    )
    try:
        with _thread_limit():
            args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"gvcsr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BitstreamError, DictionaryFormatError, PgmError) as exc:
        print(f"gvcsr: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"gvcsr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - mapped to the internal exit code
        log.debug("internal error", exc_info=True)
        print(f"gvcsr: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
