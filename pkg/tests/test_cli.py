"""Command-line harness: emission formats, config plumbing, subcommand runs.

Subcommand tests run main() in-process against tmp_path output directories
and read the manifests back; the heavier physics claims live in the
acceptance suite, so runs here use trimmed horizons where the full protocol
is not itself under test.
"""

import csv
import json
import math

import numpy as np
import pytest

from wavekit._emit import dumps_json, fmt, sha256_file, write_csv, write_dat
from wavekit.cli import ExperimentConfig, RunManifest, main, verify_manifest


def run_cli(*argv) -> int:
    return main(list(argv))


def manifest(outdir) -> RunManifest:
    return RunManifest.from_file(str(outdir / "manifest.json"))


class TestFmt:
    def test_round_trips_doubles_exactly(self):
        rng = np.random.default_rng(5)
        xs = np.concatenate(
            [
                rng.uniform(-1e6, 1e6, 200),
                10.0 ** rng.uniform(-300, 300, 200) * rng.choice([-1, 1], 200),
                [0.0, -0.0, 1e-320, 5.0, 2**53 - 1.0],
            ]
        )
        for x in xs:
            assert float(fmt(float(x))) == float(x)

    def test_integral_floats_print_compactly(self):
        assert fmt(1.0) == "1"
        assert fmt(0.5) == "0.5"


class TestDumpsJson:
    def test_sorted_keys_and_newline(self):
        text = dumps_json({"b": 1, "a": [1.5, 2]})
        assert text.index('"a"') < text.index('"b"')
        assert text.endswith("\n")

    def test_round_trip_through_stdlib(self):
        obj = {"x": 0.1 + 0.2, "y": [1e-17, 3], "s": "he said \"hi\"", "t": True, "n": None}
        back = json.loads(dumps_json(obj))
        assert back == obj

    def test_non_finite_tokens(self):
        text = dumps_json({"a": float("nan"), "b": float("inf"), "c": float("-inf")})
        assert "NaN" in text and "Infinity" in text and "-Infinity" in text
        back = json.loads(text)  # stdlib accepts the same tokens
        assert math.isnan(back["a"]) and back["b"] == float("inf")

    def test_rejects_non_string_keys(self):
        with pytest.raises(TypeError):
            dumps_json({1: 2})


class TestWriters:
    def test_dat_header_and_precision(self, tmp_path):
        path = tmp_path / "t.dat"
        x = np.array([0.1, 0.2])
        y = np.array([1.0 / 3.0, 2.0 / 3.0])
        write_dat(path, ["x", "y"], [x, y])
        lines = path.read_text().splitlines()
        assert lines[0] == "# x y"
        for line, xv, yv in zip(lines[1:], x, y):
            a, b = line.split()
            assert float(a) == xv and float(b) == yv

    def test_dat_validates_shapes(self, tmp_path):
        with pytest.raises(ValueError):
            write_dat(tmp_path / "bad.dat", ["x"], [np.arange(3), np.arange(3)])
        with pytest.raises(ValueError):
            write_dat(tmp_path / "bad.dat", ["x", "y"], [np.arange(3), np.arange(4)])

    def test_csv_is_rfc4180(self, tmp_path):
        path = tmp_path / "t.csv"
        write_csv(path, ["name", "v"], [["plain", 'quo"ted'], np.array([1.5, 2.5])])
        raw = path.read_bytes()
        assert b"\r\n" in raw and b'"quo""ted"' in raw
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["name", "v"]
        assert rows[1] == ["plain", "1.5"] and rows[2] == ['quo"ted', "2.5"]


class TestExperimentConfig:
    def test_round_trip(self):
        cfg = ExperimentConfig(command="spectrum", c=1.2, etas=(1.0, 2.0), scan_nu="0:1:0.5")
        assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg

    def test_round_trip_through_canonical_json(self):
        cfg = ExperimentConfig(command="lattice", mode="ensemble", occ0=0.25)
        back = ExperimentConfig.from_dict(json.loads(dumps_json(cfg.to_dict())))
        assert back == cfg

    def test_unknown_key_rejected(self):
        with pytest.raises(ValueError, match="unknown config"):
            ExperimentConfig.from_dict({"Di": 0.25})

    def test_choice_fields_validated(self):
        with pytest.raises(ValueError, match="ic must be one of"):
            ExperimentConfig(ic="ramp")
        with pytest.raises(ValueError, match="occ0"):
            ExperimentConfig(occ0=1.5)

    def test_hash_ignores_outdir_and_jobs_only(self):
        base = ExperimentConfig(command="simulate-pde")
        assert base.canonical_hash() == ExperimentConfig(
            command="simulate-pde", outdir="elsewhere", jobs=8
        ).canonical_hash()
        assert base.canonical_hash() != ExperimentConfig(
            command="simulate-pde", dt=0.005
        ).canonical_hash()


class TestMergePrecedence:
    def test_flag_overrides_config_file(self, tmp_path, capsys):
        cfg_file = tmp_path / "c.json"
        cfg_file.write_text('{"c": 0.4, "k_points": 5}\n')
        out = tmp_path / "r"
        assert run_cli("spectrum", "--config", str(cfg_file), "--c", "1.2", "--out", str(out)) == 0
        echoed = json.loads((out / "config.json").read_text())
        assert echoed["c"] == 1.2 and echoed["k_points"] == 5

    def test_env_var_sets_outdir(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("WAVEKIT_OUT", str(tmp_path / "env"))
        assert run_cli("spectrum", "--c", "1.0", "--k-points", "5") == 0
        assert (tmp_path / "env" / "manifest.json").exists()

    def test_out_flag_beats_env_var(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("WAVEKIT_OUT", str(tmp_path / "env"))
        out = tmp_path / "flag"
        assert run_cli("spectrum", "--c", "1.0", "--k-points", "5", "--out", str(out)) == 0
        assert (out / "manifest.json").exists()
        assert not (tmp_path / "env").exists()

    def test_roots_imply_general_kind(self, tmp_path, capsys):
        out = tmp_path / "r"
        assert run_cli("phase-plane", "--c", "0.7", "--roots", "0.1", "0.3", "--out", str(out)) == 0
        echoed = json.loads((out / "config.json").read_text())
        assert echoed["D_kind"] == "general"
        assert echoed["root1"] == 0.1 and echoed["root2"] == 0.3

    def test_no_subcommand_exits_2(self, capsys):
        assert run_cli() == 2


class TestSimulatePde:
    def test_flagship_speed_and_manifest(self, tmp_path, capsys):
        out = tmp_path / "run"
        code = run_cli(
            "simulate-pde", "--Di", "0.25", "--Dg", "0.05", "--lambda", "0.75",
            "--ic", "heaviside", "--out", str(out),
        )
        assert code == 0
        man = manifest(out)
        assert man.results["speed"] == pytest.approx(0.864, abs=0.01)
        assert man.results["clamp_events"] == 0
        listed = {f["path"] for f in man.files}
        assert listed == {"config.json", "snapshots.dat", "front_trace.dat"}
        assert verify_manifest(str(out))
        header = (out / "snapshots.dat").read_text().splitlines()[0]
        assert header.startswith("# x u_t0 ")
        assert manifest(out).config_hash == ExperimentConfig(
            command="simulate-pde", outdir=str(out)
        ).canonical_hash()

    def test_rerun_reproduces_data_files(self, tmp_path, capsys):
        out = tmp_path / "run"
        args = ("simulate-pde", "--t-end", "5", "--snapshots", "6", "--out", str(out))
        assert run_cli(*args) == 0
        first = {f["path"]: f["sha256"] for f in manifest(out).files}
        assert run_cli(*args) == 0
        assert {f["path"]: f["sha256"] for f in manifest(out).files} == first

    def test_general_roots_shock_speed(self, tmp_path, capsys):
        out = tmp_path / "run"
        with pytest.warns(UserWarning, match="stability heuristic"):
            code = run_cli("simulate-pde", "--D-kind", "general", "--roots", "0.1", "0.3",
                           "--out", str(out))
        assert code == 0
        man = manifest(out)
        assert man.results["speed"] == pytest.approx(0.3, abs=0.01)
        assert man.results["clamp_events"] > 0  # clamp is load-bearing in this regime

    def test_steep_tanh_outruns_domain_exit_1(self, tmp_path, capsys):
        code = run_cli("simulate-pde", "--ic", "tanh", "--eta", "0.2",
                       "--out", str(tmp_path / "r"))
        assert code == 1
        assert "wavekit: solver failure" in capsys.readouterr().err

    def test_unclamped_shock_blows_up_exit_1(self, tmp_path, capsys):
        with pytest.warns(UserWarning, match="stability heuristic"):
            code = run_cli("simulate-pde", "--D-kind", "general", "--roots", "0.1", "0.3",
                           "--no-clamp", "--out", str(tmp_path / "r"))
        assert code == 1
        assert "blew up" in capsys.readouterr().err


class TestPhasePlane:
    def run_case(self, tmp_path, *argv):
        out = tmp_path / "run"
        assert run_cli("phase-plane", *argv, "--out", str(out)) == 0
        return out, manifest(out)

    def test_flagship_smooth_monotone(self, tmp_path, capsys):
        out, man = self.run_case(tmp_path, "--c", "0.8660254037844386")
        r = man.results
        assert r["regime"] == "SmoothMonotone"
        assert all(v.startswith("ok") for v in r["segments"].values())
        assert (out / "profile.dat").exists()
        assert {f["path"] for f in man.files} >= {
            "analysis.json", "orbit_OneToBeta.dat", "orbit_AlphaToBeta.dat",
            "orbit_AlphaToZero.dat", "profile.dat",
        }
        analysis = json.loads((out / "analysis.json").read_text())
        assert analysis["all_slopes_negative"] is True
        # at the threshold speed R1's margin is zero up to rounding (the float
        # image of the speed sits a hair below the real threshold); R2 and R3
        # hold with room
        margins = {c["region"]: c["margin"] for c in analysis["certificates"]}
        assert margins["R1"] == pytest.approx(0.0, abs=1e-12)
        assert margins["R2"] > 0.1 and margins["R3"] > 0.1

    def test_oscillatory_at_low_speed(self, tmp_path, capsys):
        out, man = self.run_case(tmp_path, "--c", "0.4")
        assert man.results["regime"] == "OscillatoryTail"
        assert "entered spiral" in man.results["segments"]["AlphaToZero"]

    def test_below_threshold_reports_no_connection(self, tmp_path, capsys):
        out, man = self.run_case(tmp_path, "--c", "0.2")
        assert man.results["regime"] == "NoWaveConnection"
        assert man.results["diagnostic"]
        assert not (out / "profile.dat").exists()

    def test_general_shock_regime(self, tmp_path, capsys):
        out, man = self.run_case(tmp_path, "--c", "0.32", "--D-kind", "general",
                                 "--roots", "0.1", "0.3")
        assert man.results["regime"] == "ShockRegime"
        assert man.results["equilibrium_kinds"]["beta"] == "StableSpiral"
        # detection-only regime: the profile table is emitted header-only
        assert (out / "profile.dat").read_text().splitlines() == ["# z u dudz"]


class TestSpectrum:
    def test_boundary_speed_report(self, tmp_path, capsys):
        out = tmp_path / "run"
        assert run_cli("spectrum", "--c", "0.8660254037844386", "--out", str(out)) == 0
        r = manifest(out).results
        assert r["verdict"] == "TransientlyStableWithWeight"
        assert r["K_plus"] == pytest.approx(0.0, abs=1e-12)
        assert r["weight_range_kind"] == "Singleton"
        report = json.loads((out / "spectrum.json").read_text())
        assert report["K_minus"] == pytest.approx(-4.5, abs=1e-12)

    def test_unstable_speed(self, tmp_path, capsys):
        out = tmp_path / "run"
        assert run_cli("spectrum", "--c", "0.4", "--out", str(out)) == 0
        r = manifest(out).results
        assert r["verdict"] == "AbsolutelyUnstable"
        assert r["K_plus"] == pytest.approx(0.59, rel=1e-12)

    def test_nu_scan_minimum_at_vertex(self, tmp_path, capsys):
        out = tmp_path / "run"
        assert run_cli("spectrum", "--c", "1.2", "--scan-nu", "0:3:0.01",
                       "--out", str(out)) == 0
        r = manifest(out).results
        assert r["nu_scan_argmin"] == pytest.approx(2.4, abs=1e-9)
        assert r["nu_scan_min"] == pytest.approx(0.75 - 1.2**2 / (4.0 * 0.25), rel=1e-12)
        rows = (out / "nu_scan.dat").read_text().splitlines()
        assert rows[0] == "# nu K_plus_nu K_minus_nu"
        assert len(rows) == 1 + 301

    def test_custom_k_grid_shapes_tables(self, tmp_path, capsys):
        out = tmp_path / "run"
        assert run_cli("spectrum", "--c", "1.0", "--k-max", "3", "--k-points", "11",
                       "--out", str(out)) == 0
        rows = (out / "dispersion_plus.dat").read_text().splitlines()
        assert len(rows) == 1 + 11
        ks = [float(line.split()[0]) for line in rows[1:]]
        assert ks[0] == -3.0 and ks[-1] == 3.0

    def test_bad_span_exits_2(self, tmp_path, capsys):
        code = run_cli("spectrum", "--c", "1.0", "--scan-nu", "3:0:0.1",
                       "--out", str(tmp_path / "r"))
        assert code == 2
        assert "wavekit:" in capsys.readouterr().err


class TestLattice:
    def test_uniform_mean_field_growth_is_logistic(self, tmp_path, capsys):
        out = tmp_path / "run"
        assert run_cli("lattice", "--mode", "mean-field", "--occ0", "0.1",
                       "--sweeps", "40", "--samples", "5", "--out", str(out)) == 0
        lam, tau, u = 0.75, 0.25, 0.1
        expect = {0: u}
        for step in range(1, 41):
            u = u + tau * lam * u * (1.0 - u)
            expect[step] = u
        # interior sites follow the logistic map exactly; the vacant-ghost
        # boundary drags only the edge sites
        with open(out / "occupancy_mean_field.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        header, mid = rows[0], rows[100 + 1]
        for name, value in zip(header[2:], mid[2:]):
            step = int(name.removeprefix("occ_step"))
            assert float(value) == pytest.approx(expect[step], abs=1e-12)
        curve = manifest(out).results["mean_occupancy"]
        assert curve["40"] > curve["20"] > curve["0"]
        assert curve["40"] == pytest.approx(expect[40], abs=1e-2)

    def test_zero_rate_stochastic_snapshots_identical(self, tmp_path, capsys):
        out = tmp_path / "run"
        assert run_cli("lattice", "--mode", "stochastic", "--Di", "0", "--Dg", "0",
                       "--lambda", "0", "--sweeps", "60", "--samples", "3",
                       "--out", str(out)) == 0
        digests = {
            sha256_file(str(out / f"occupancy_step{s}.csv")) for s in (0, 30, 60)
        }
        assert len(digests) == 1  # static lattice: byte-identical snapshots

    def test_stochastic_run_is_seed_deterministic(self, tmp_path, capsys):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert run_cli("lattice", "--mode", "stochastic", "--sweeps", "40",
                           "--samples", "3", "--seed", "99", "--out", str(out)) == 0
            outs.append(sha256_file(str(out / "occupancy_step40.csv")))
        assert outs[0] == outs[1]

    def test_ensemble_reports_speed_comparison(self, tmp_path, capsys):
        out = tmp_path / "run"
        assert run_cli("lattice", "--mode", "ensemble", "--runs", "6",
                       "--sweeps", "120", "--samples", "4", "--out", str(out)) == 0
        man = manifest(out)
        r = man.results
        assert r["continuum_speed"] == pytest.approx(math.sqrt(3.0) / 2.0, rel=1e-12)
        assert math.isfinite(r["lattice_speed"]) and r["lattice_speed"] > 0.0
        listed = {f["path"] for f in man.files}
        assert "occupancy_ensemble.csv" in listed and "front_positions.csv" in listed
        assert verify_manifest(str(out))


class TestSpeedScan:
    def test_scan_table_and_failures(self, tmp_path, capsys):
        out = tmp_path / "run"
        assert run_cli("speed-scan", "--etas", "0.1,0.5,1", "--t-end", "30",
                       "--snapshots", "61", "--out", str(out)) == 0
        r = manifest(out).results
        assert set(r["speeds"]) == {fmt(0.1), fmt(0.5), fmt(1.0)}
        assert fmt(0.1) in r["failures"]  # steep front outruns the domain
        assert math.isnan(r["speeds"][fmt(0.1)])
        assert r["limiting_speed"] == r["speeds"][fmt(1.0)]
        rows = (out / "speed_scan.dat").read_text().splitlines()
        assert rows[0] == "# eta speed fit_residual"
        assert len(rows) == 4

    def test_parallel_scan_matches_serial(self, tmp_path, capsys):
        args = ("speed-scan", "--etas", "0.5,1,2", "--t-end", "20", "--snapshots", "41")
        out1, out2 = tmp_path / "serial", tmp_path / "pool"
        assert run_cli(*args, "--out", str(out1)) == 0
        assert run_cli(*args, "--jobs", "2", "--out", str(out2)) == 0
        assert (out1 / "speed_scan.dat").read_bytes() == (out2 / "speed_scan.dat").read_bytes()
        assert manifest(out1).results == manifest(out2).results


class TestManifestVerification:
    def test_tamper_detection(self, tmp_path, capsys):
        out = tmp_path / "run"
        assert run_cli("spectrum", "--c", "1.0", "--k-points", "5", "--out", str(out)) == 0
        assert verify_manifest(str(out))
        with open(out / "dispersion_plus.dat", "a") as fh:
            fh.write("0 0 0\n")
        with pytest.raises(ValueError, match="checksum mismatch"):
            verify_manifest(str(out))

    def test_missing_file_detected(self, tmp_path, capsys):
        out = tmp_path / "run"
        assert run_cli("spectrum", "--c", "1.0", "--k-points", "5", "--out", str(out)) == 0
        (out / "dispersion_minus.dat").unlink()
        with pytest.raises(ValueError, match="missing"):
            verify_manifest(str(out))
