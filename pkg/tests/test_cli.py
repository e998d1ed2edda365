from __future__ import annotations

import csv

import numpy as np
import pytest

from pyrcodec.cli import main
from pyrcodec.image import Image
from pyrcodec.ppm import read_image, write_image


@pytest.fixture
def photo(tmp_path):
    rng = np.random.default_rng(0)
    yy, xx = np.mgrid[0:64, 0:64]
    px = np.stack([(yy * 3 + xx) % 256, (xx * 2) % 256, (yy + 40) % 256], axis=-1)
    px = np.clip(px + rng.integers(-3, 4, size=px.shape), 0, 255)
    path = tmp_path / "photo.ppm"
    write_image(path, Image(px.astype(np.uint16), 8))
    return path


def test_decompose_reconstruct(tmp_path, photo, capsys):
    pyr, out = tmp_path / "p.ppyr", tmp_path / "r.ppm"
    assert main(["decompose", str(photo), str(pyr), "--levels", "auto"]) == 0
    assert "levels: 8" in capsys.readouterr().out
    assert main(["reconstruct", str(pyr), str(out)]) == 0
    assert read_image(out) == read_image(photo)


def test_decompose_odd_input_exits_2(tmp_path, capsys):
    path = tmp_path / "odd.ppm"
    write_image(path, Image(np.zeros((5, 4, 1), np.uint16), 8))
    assert main(["decompose", str(path), str(tmp_path / "x")]) == 2
    assert "even" in capsys.readouterr().err


def test_encode_decode_with_report(tmp_path, photo, capsys):
    coded, out, rep = tmp_path / "c.ppyc", tmp_path / "d.ppm", tmp_path / "rep"
    assert main(["encode", str(photo), str(coded), "--n-squeeze", "1", "--report-dir", str(rep), "--verify"]) == 0
    printed = capsys.readouterr().out
    assert printed.startswith("total") and "F1" in printed
    with open(rep / "photo_rate.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert rows[-1]["level"] == "total" and int(rows[-1]["samples"]) == 64 * 64 * 3
    assert (rep / "photo_rate.png").stat().st_size > 0
    assert main(["decode", str(coded), str(out)]) == 0
    assert read_image(out) == read_image(photo)


def test_encode_ablation_flags(tmp_path, photo):
    for flags in (["--no-shift"], ["--no-modulo"], ["--mode", "static", "--mixtures", "2"]):
        coded = tmp_path / "c.ppyc"
        assert main(["encode", str(photo), str(coded), *flags]) == 0
        assert main(["decode", str(coded), str(tmp_path / "d.ppm")]) == 0
        assert read_image(tmp_path / "d.ppm") == read_image(photo)


def test_decode_corrupt_exit_codes(tmp_path, photo):
    coded = tmp_path / "c.ppyc"
    main(["encode", str(photo), str(coded)])
    data = coded.read_bytes()
    (tmp_path / "trunc").write_bytes(data[:-20])
    assert main(["decode", str(tmp_path / "trunc"), str(tmp_path / "o.ppm")]) == 3
    (tmp_path / "junk").write_bytes(b"garbage")
    assert main(["decode", str(tmp_path / "junk"), str(tmp_path / "o.ppm")]) == 2
    assert main(["decode", str(tmp_path / "missing"), str(tmp_path / "o.ppm")]) == 2


def test_stats_outputs(tmp_path, photo):
    d = tmp_path / "imgs"
    d.mkdir()
    for i in range(2):
        img = read_image(photo)
        write_image(d / f"{i}.ppm", Image(np.roll(img.pixels, i, axis=1), 8))
    out = tmp_path / "stats"
    assert main(["stats", str(d), "--max-distance", "8", "--output", str(out)]) == 0
    with open(out / "entropy_profile.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert rows[0]["level"] == "original" and rows[-1]["level"] == "I8"
    with open(out / "mi_curves.csv") as fh:
        header = next(csv.reader(fh))
    assert header == ["component", "distance", "mi_bits", "mi_horizontal_bits", "mi_vertical_bits"]
    assert (out / "entropy_profile.png").exists() and (out / "mi_curves.png").exists()


def test_stats_empty_dir_exits_2(tmp_path):
    (tmp_path / "empty").mkdir()
    assert main(["stats", str(tmp_path / "empty")]) == 2


def test_critical_path_command(capsys):
    assert main(["critical-path", "--n0", "1024", "--coarsest", "1", "--n-squeeze", "2"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[-1] == "T\t305" and lines[-2] == "L\t20"
    assert main(["critical-path", "--n0", "100"]) == 2


def test_despeckle_command(tmp_path, capsys):
    px = np.full((64, 64, 3), 120, np.uint16)
    px[10, 10] = 255
    px[40, 7] = 0
    src = tmp_path / "s.ppm"
    write_image(src, Image(px, 8))
    assert main(["despeckle", str(src), str(tmp_path / "o.ppm"), "--window", "3"]) == 0
    out = capsys.readouterr().out
    assert "changed=2" in out
    assert (read_image(tmp_path / "o.ppm").pixels == 120).all()


def test_usage_error_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["encode"])
    assert exc.value.code == 2
