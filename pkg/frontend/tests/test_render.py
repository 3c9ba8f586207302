"""Renderer contract: schema handling, PNG output, binned dumps."""

from __future__ import annotations

import csv
import struct
import subprocess
import sys
from pathlib import Path

import pytest

from render_map import (
    InputError,
    RenderJob,
    bin_map,
    detect_kind,
    infer_bin_width,
    main,
)

import numpy as np

MAP_HEADER = "lat,lon,lco2,lco2_ambient,cf_mean,cf_daily_std,dac_cf,flag"
SWEEP_HEADER = (
    "cp,cr,t_target,h_rated,pv_kw,battery_kwh,lco2,net_co2_t,"
    "capacity_factor,abatement_per_capex,profit,is_best"
)
PROFILE_HEADER = "hour,adsorb_frac,desorb_frac,idle_frac,co2_mean_t,storage_mean_mwh"


def png_size(path: Path) -> tuple[int, int]:
    # PNG: 8-byte signature, 4-byte length, b"IHDR", then width/height.
    blob = path.read_bytes()
    assert blob[:8] == b"\x89PNG\r\n\x1a\n"
    assert blob[12:16] == b"IHDR"
    return struct.unpack(">II", blob[16:24])


def write(path: Path, text: str) -> Path:
    path.write_text(text.strip() + "\n")
    return path


@pytest.fixture()
def global_csv(tmp_path):
    rows = [
        "30.0,-100.0,210.5,250.25,0.31,0.05,0.82,ok",
        "30.0,-90.0,190.0,232.5,0.33,0.04,0.85,ok",
        "40.0,-100.0,260.0,300.0,0.27,0.06,0.74,ok",
        "40.0,-90.0,240.0,280.0,0.29,0.05,0.78,ok",
        "50.0,-100.0,380.0,455.0,0.19,0.08,0.55,ok",
        "50.0,-90.0,,,0.02,0.01,0.0,no_capture",
    ]
    return write(tmp_path / "global.csv", MAP_HEADER + "\n" + "\n".join(rows))


@pytest.fixture()
def sweep_csv(tmp_path):
    rows = [
        "2.0,1.0,400.0,50.0,0.0,0.0,455.0,8000.0,0.76,21.0,100.0,0",
        "2.0,1.0,400.0,70.0,0.0,0.0,450.0,8100.0,0.77,21.5,120.0,0",
        "3.0,1.0,400.0,50.0,0.0,0.0,440.0,8600.0,0.80,22.0,150.0,0",
        "3.0,1.0,400.0,70.0,0.0,0.0,436.0,8700.0,0.81,22.5,170.0,1",
    ]
    return write(tmp_path / "sweep.csv", SWEEP_HEADER + "\n" + "\n".join(rows))


@pytest.fixture()
def profile_csv(tmp_path):
    rows = [
        f"{h},{0.5 + 0.01 * h},{0.3 - 0.01 * h},0.2,{0.001 * h},{30.0 + h}"
        for h in range(24)
    ]
    return write(tmp_path / "hourly_profile.csv", PROFILE_HEADER + "\n" + "\n".join(rows))


def read_csv(path: Path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


class TestKindDetection:
    def test_headers_map_to_kinds(self):
        assert detect_kind(MAP_HEADER.split(",")) == "map"
        assert detect_kind(SWEEP_HEADER.split(",")) == "sweep"
        assert detect_kind(PROFILE_HEADER.split(",")) == "profile"

    def test_unknown_header_names_the_columns(self):
        with pytest.raises(InputError, match="a,b,c"):
            detect_kind(["a", "b", "c"])

    def test_forced_kind_mismatch_diagnoses_columns(self, global_csv, tmp_path, capsys):
        out = tmp_path / "x.png"
        rc = main(["--in", str(global_csv), "--out", str(out), "--kind", "sweep"])
        assert rc == 2
        err = capsys.readouterr().err
        assert "sweep schema" in err
        assert "t_target" in err  # a missing column is named
        assert not out.exists()


class TestJobValidation:
    def test_bounds_must_be_finite_and_ordered(self, tmp_path):
        args = dict(in_path=tmp_path / "a.csv", out_path=tmp_path / "a.png", kind="map")
        with pytest.raises(InputError, match="finite"):
            RenderJob(**args, vmin=float("nan"))
        with pytest.raises(InputError, match="below"):
            RenderJob(**args, vmin=400.0, vmax=140.0)
        with pytest.raises(InputError, match="positive"):
            RenderJob(**args, bin_width=0.0)
        with pytest.raises(InputError, match="unknown kind"):
            RenderJob(in_path=tmp_path / "a.csv", out_path=tmp_path / "a.png", kind="pie")


class TestMapRender:
    def test_smoke_size_and_exit_code(self, global_csv, tmp_path):
        out = tmp_path / "map.png"
        rc = main(["--in", str(global_csv), "--out", str(out), "--vmin", "140", "--vmax", "400"])
        assert rc == 0
        w, h = png_size(out)
        assert w >= 800 and h >= 400

    def test_repeat_renders_are_byte_identical(self, global_csv, tmp_path):
        a, b = tmp_path / "a.png", tmp_path / "b.png"
        argv = ["--in", str(global_csv), "--vmin", "140", "--vmax", "400"]
        assert main(argv + ["--out", str(a)]) == 0
        assert main(argv + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_dump_binned_round_trips_within_tolerance(self, global_csv, tmp_path):
        dump = tmp_path / "binned.csv"
        rc = main(
            ["--in", str(global_csv), "--out", str(tmp_path / "m.png"),
             "--dump-binned", str(dump)]
        )
        assert rc == 0
        header, rows = read_csv(dump)
        assert header == ["lat", "lon", "lco2_ambient", "count"]
        binned = {(float(r[0]), float(r[1])): float(r[2]) for r in rows}
        # Native pitch of the sample grid is 10 degrees.
        width = 10.0
        _, src = read_csv(global_csv)
        usable = [r for r in src if r[3] != ""]
        assert len(binned) == len(usable)
        for r in usable:
            lat, lon, want = float(r[0]), float(r[1]), float(r[3])
            hit = [
                v for (by, bx), v in binned.items()
                if abs(by - lat) <= width / 2 and abs(bx - lon) <= width / 2
            ]
            assert len(hit) == 1
            assert hit[0] == pytest.approx(want, abs=1e-12)

    def test_colliding_points_average(self):
        lat = np.array([10.0, 10.2, 30.0])
        lon = np.array([4.0, 4.4, 4.0])
        val = np.array([100.0, 200.0, 50.0])
        b_lat, b_lon, b_val, count = bin_map(lat, lon, val, width=10.0)
        assert list(count) == [2, 1]
        assert b_val[0] == pytest.approx(150.0)
        assert (b_lat[1], b_lon[1]) == (30.0, 0.0)

    def test_bin_width_inferred_from_grid(self):
        assert infer_bin_width(np.array([30.0, 40.0, 50.0, 30.0])) == 10.0
        assert infer_bin_width(np.array([7.0, 7.0])) == 1.0

    def test_value_column_can_be_switched(self, global_csv, tmp_path):
        dump = tmp_path / "b.csv"
        rc = main(
            ["--in", str(global_csv), "--out", str(tmp_path / "m.png"),
             "--value", "cf_mean", "--dump-binned", str(dump)]
        )
        assert rc == 0
        header, rows = read_csv(dump)
        assert header[2] == "cf_mean"
        assert len(rows) == 6  # cf_mean present even where lco2 is not

    def test_unusable_value_column_rejected(self, global_csv, tmp_path, capsys):
        rc = main(["--in", str(global_csv), "--out", str(tmp_path / "m.png"), "--value", "flag"])
        assert rc == 2
        assert "flag" in capsys.readouterr().err

    def test_all_blank_values_rejected(self, tmp_path, capsys):
        path = write(
            tmp_path / "g.csv",
            MAP_HEADER + "\n10.0,20.0,,,0.1,0.0,0.0,no_capture",
        )
        out = tmp_path / "m.png"
        assert main(["--in", str(path), "--out", str(out)]) == 2
        assert "empty everywhere" in capsys.readouterr().err
        assert not out.exists()


class TestSweepRender:
    def test_smoke_and_dump_uses_first_varying_axis(self, sweep_csv, tmp_path):
        out = tmp_path / "sweep.png"
        dump = tmp_path / "points.csv"
        rc = main(["--in", str(sweep_csv), "--out", str(out), "--dump-binned", str(dump)])
        assert rc == 0
        assert png_size(out) >= (800, 400)
        header, rows = read_csv(dump)
        assert header == ["cp", "lco2", "is_best"]
        assert [r[0] for r in rows] == ["2.0", "2.0", "3.0", "3.0"]
        assert [r[1] for r in rows] == ["455.0", "450.0", "440.0", "436.0"]
        assert [r[2] for r in rows].count("1") == 1

    def test_single_axis_sweep_renders(self, tmp_path):
        rows = [
            f"3.0,1.0,400.0,{h},0.0,0.0,{500 - h},8000.0,0.8,20.0,10.0,{int(h == 70)}"
            for h in (50.0, 60.0, 70.0)
        ]
        path = write(tmp_path / "s.csv", SWEEP_HEADER + "\n" + "\n".join(rows))
        out = tmp_path / "s.png"
        assert main(["--in", str(path), "--out", str(out)]) == 0
        assert out.exists()

    def test_objective_column_validated(self, sweep_csv, tmp_path, capsys):
        rc = main(["--in", str(sweep_csv), "--out", str(tmp_path / "s.png"), "--value", "cp"])
        assert rc == 2
        assert "cp" in capsys.readouterr().err


class TestProfileRender:
    def test_smoke_and_dump_is_identity(self, profile_csv, tmp_path):
        out = tmp_path / "profile.png"
        dump = tmp_path / "again.csv"
        rc = main(["--in", str(profile_csv), "--out", str(out), "--dump-binned", str(dump)])
        assert rc == 0
        assert png_size(out) >= (800, 400)
        assert read_csv(dump) == read_csv(profile_csv)


class TestSampleArtifacts:
    """Real scheduler outputs, bundled verbatim under tests/data."""

    DATA = Path(__file__).parent / "data"

    def test_sample_global_renders(self, tmp_path):
        out = tmp_path / "map.png"
        dump = tmp_path / "binned.csv"
        rc = main(
            ["--in", str(self.DATA / "global.csv"), "--out", str(out),
             "--vmin", "140", "--vmax", "400", "--dump-binned", str(dump)]
        )
        assert rc == 0
        assert png_size(out) >= (800, 400)
        # Round trip: every site appears in exactly one bin, value intact.
        _, src = read_csv(self.DATA / "global.csv")
        header, rows = read_csv(dump)
        assert len(rows) == len(src)
        binned = {(float(r[0]), float(r[1])): float(r[2]) for r in rows}
        lats = sorted({float(r[0]) for r in src} | {float(r[1]) for r in src})
        width = min(b - a for a, b in zip(lats, lats[1:]) if b > a)
        for r in src:
            lat, lon, want = float(r[0]), float(r[1]), float(r[3])
            hit = [
                v for (by, bx), v in binned.items()
                if abs(by - lat) <= width / 2 and abs(bx - lon) <= width / 2
            ]
            assert hit == [pytest.approx(want)]

    def test_sample_sweep_renders(self, tmp_path):
        out = tmp_path / "sweep.png"
        rc = main(["--in", str(self.DATA / "sweep.csv"), "--out", str(out)])
        assert rc == 0
        assert png_size(out) >= (800, 400)

    def test_sample_profile_renders(self, tmp_path):
        out = tmp_path / "profile.png"
        rc = main(["--in", str(self.DATA / "hourly_profile.csv"), "--out", str(out)])
        assert rc == 0
        assert png_size(out) >= (800, 400)


class TestCliContract:
    def test_header_only_input_fails_without_output(self, tmp_path, capsys):
        path = write(tmp_path / "empty.csv", MAP_HEADER)
        out = tmp_path / "m.png"
        assert main(["--in", str(path), "--out", str(out)]) == 2
        assert "no data rows" in capsys.readouterr().err
        assert not out.exists()

    def test_zero_byte_input_fails_without_output(self, tmp_path):
        path = tmp_path / "void.csv"
        path.touch()
        out = tmp_path / "m.png"
        assert main(["--in", str(path), "--out", str(out)]) == 2
        assert not out.exists()

    def test_missing_input_is_io_error(self, tmp_path):
        rc = main(["--in", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "m.png")])
        assert rc == 1

    def test_bad_bounds_rejected(self, global_csv, tmp_path):
        argv = ["--in", str(global_csv), "--out", str(tmp_path / "m.png")]
        assert main(argv + ["--vmin", "400", "--vmax", "140"]) == 2
        assert main(argv + ["--vmin", "nan"]) == 2
        assert main(argv + ["--bin", "-1"]) == 2

    def test_argparse_contract(self, global_csv, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["--in", str(global_csv), "--out", str(tmp_path / "m.png"), "--kind", "pie"])
        assert exc.value.code == 2
        with pytest.raises(SystemExit) as exc:
            main(["--help"])
        assert exc.value.code == 0

    def test_script_entry_point(self, global_csv, tmp_path):
        script = Path(__file__).resolve().parents[1] / "render_map.py"
        proc = subprocess.run(
            [sys.executable, str(script), "--in", str(global_csv),
             "--out", str(tmp_path / "m.png"), "--vmin", "140", "--vmax", "400"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert (tmp_path / "m.png").exists()
