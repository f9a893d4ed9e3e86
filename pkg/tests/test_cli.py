import csv
import subprocess
import sys

import pytest

from gvcsr.cli import main
from gvcsr.codec import read_pgm
from gvcsr.dictlearn import Dictionary


def run(argv):
    try:
        return main(argv)
    except SystemExit as exc:  # argparse-level usage errors
        return exc.code


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# schema=")
    return lines[0].split("=", 1)[1], list(csv.DictReader(lines[1:]))


def test_encode_decode_round_trip(tmp_path, data_dir, capsys):
    img = data_dir / "clock.pgm"
    bs, rec, dec = tmp_path / "c.gvcb", tmp_path / "rec.pgm", tmp_path / "dec.pgm"
    assert main(["encode", str(img), "--coder", "omp-l:3", "--quant", "6",
                 "--out", str(bs), "--recon", str(rec)]) == 0
    assert "bpp=" in capsys.readouterr().out
    assert main(["decode", str(bs), "--out", str(dec), "--reference", str(img)]) == 0
    assert "psnr=" in capsys.readouterr().out
    assert dec.read_bytes() == rec.read_bytes()


def test_train_writes_dictionary(tmp_path, data_dir):
    out = tmp_path / "d.gvcd"
    assert main(["train", str(data_dir / "moon.pgm"), "--gamma", "1", "--outer-iters", "1",
                 "--alpha", "20", "--out", str(out)]) == 0
    d = Dictionary.load(out)
    assert (d.n, d.m) == (64, 64)


def test_var_bits_csv(tmp_path):
    out = tmp_path / "varbits.csv"
    assert main(["var-bits", "--variances", "1,10,100", "--samples", "2000", "--out", str(out)]) == 0
    schema, rows = read_csv(out)
    assert schema == "gvcsr-varbits/1" and len(rows) == 3
    assert float(rows[0]["bits_per_sample"]) < float(rows[2]["bits_per_sample"])


def test_rd_sweep_tags_both_coders(tmp_path, data_dir):
    out = tmp_path / "rd.csv"
    assert main(["rd-sweep", str(data_dir / "clock.pgm"), "--alpha", "50", "--omp-l", "2",
                 "--omp-e", "500", "--quant", "8,16", "--out", str(out)]) == 0
    schema, rows = read_csv(out)
    assert schema == "gvcsr-rd/1"
    assert {r["coder"] for r in rows} == {"gvcsr", "omp-l", "omp-e"}
    assert len(rows) == 6


def test_trace_csv(tmp_path, data_dir):
    out = tmp_path / "trace.csv"
    assert main(["trace", str(data_dir / "text.pgm"), "--alpha", "50", "--max-iters", "30",
                 "--out", str(out)]) == 0
    schema, rows = read_csv(out)
    assert schema == "gvcsr-trace/1"
    assert [int(r["iteration"]) for r in rows] == list(range(1, len(rows) + 1))


def test_set_encode_decode(tmp_path, data_dir, capsys):
    imgs = [str(data_dir / f"set{i}.pgm") for i in (0, 1)]
    arc, outdir = tmp_path / "s.gvcs", tmp_path / "out"
    assert main(["set-encode", *imgs, "--gamma", "2", "--outer-iters", "1", "--out", str(arc)]) == 0
    assert "average bpp=" in capsys.readouterr().out
    assert main(["set-decode", str(arc), "--out", str(outdir)]) == 0
    assert read_pgm(outdir / "image000.pgm").width == 64


@pytest.mark.parametrize(
    "argv, code",
    [
        (["train", "--out", "x.gvcd"], 2),
        (["encode", "missing.pgm", "--out", "x.gvcb"], 2),
        (["encode", "IMG", "--coder", "lasso", "--out", "x.gvcb"], 2),
        (["var-bits", "--variances", ""], 2),
        (["set-encode", "--out", "x.gvcs"], 2),
    ],
)
def test_usage_errors(tmp_path, data_dir, monkeypatch, argv, code):
    monkeypatch.chdir(tmp_path)
    argv = [str(data_dir / "clock.pgm") if a == "IMG" else a for a in argv]
    assert run(argv) == code
    assert not (tmp_path / "x.gvcb").exists()


def test_corrupt_stream_is_data_error(tmp_path):
    bad = tmp_path / "bad.gvcb"
    bad.write_bytes(b"GVCB" + bytes(10))
    assert main(["decode", str(bad), "--out", str(tmp_path / "o.pgm")]) == 3
    assert not (tmp_path / "o.pgm").exists()


def test_wrong_dictionary_is_data_error(tmp_path, data_dir):
    bs = tmp_path / "c.gvcb"
    assert main(["encode", str(data_dir / "clock.pgm"), "--coder", "omp-l:1", "--out", str(bs)]) == 0
    other = tmp_path / "d.gvcd"
    assert main(["train", str(data_dir / "moon.pgm"), "--gamma", "4", "--outer-iters", "0",
                 "--out", str(other)]) == 0
    assert main(["decode", str(bs), "--dict", str(other), "--out", str(tmp_path / "o.pgm")]) == 3


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "gvcsr", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip()
