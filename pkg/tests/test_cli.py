"""Command-line round trips: every subcommand through dispatch()."""

import json
import subprocess
import sys

import pytest

from foldsurf.cli import dispatch


def run(tmp_path, *argv):
    """dispatch() from inside tmp_path so default outputs land there."""
    import os

    prev = os.getcwd()
    os.chdir(tmp_path)
    try:
        return dispatch(list(argv))
    finally:
        os.chdir(prev)


@pytest.fixture
def spec_file(tmp_path):
    path = tmp_path / "spec.json"
    code = run(tmp_path, "sample", "amalgam", "--length", "30",
               "--seed", "7", "--out", str(path))
    assert code == 0
    return path


# a malnormal pair: both generators lift once and rigidly
MALNORMAL_WORDS = ("BAbaaaaaaBAB", "bABBAbABaBBa")


@pytest.fixture
def core_file(tmp_path):
    path = tmp_path / "core.json"
    code = run(tmp_path, "core", *MALNORMAL_WORDS, "--out", str(path))
    assert code == 0
    return path


class TestSample:
    def test_writes_spec_with_recorded_seed(self, tmp_path):
        path = tmp_path / "s.json"
        code = run(tmp_path, "sample", "hnn", "--length", "12",
                   "--seed", "3", "--out", str(path))
        assert code == 0
        d = json.loads(path.read_text())
        assert d["kind"] == "hnn"
        assert d["provenance"]["seed"] == 3

    def test_draws_and_records_seed_when_absent(self, tmp_path, capsys):
        path = tmp_path / "s.json"
        code = run(tmp_path, "sample", "--length", "10", "--out", str(path))
        assert code == 0
        recorded = json.loads(path.read_text())["provenance"]["seed"]
        assert f"seed={recorded}" in capsys.readouterr().out

    def test_identical_seeds_are_byte_identical(self, tmp_path):
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        run(tmp_path, "sample", "--length", "20", "--seed", "5", "--out", str(a))
        run(tmp_path, "sample", "--length", "20", "--seed", "5", "--out", str(b))
        assert a.read_bytes() == b.read_bytes()


class TestCoreAndFold:
    def test_core_reports_rank(self, tmp_path, capsys):
        code = run(tmp_path, "core", "ab", "ba", "--out",
                   str(tmp_path / "c.json"))
        assert code == 0
        assert "rank=2" in capsys.readouterr().out

    def test_fold_accepts_core_output(self, tmp_path, core_file):
        out = tmp_path / "folded.json"
        code = run(tmp_path, "fold", str(core_file), "--out", str(out))
        assert code == 0
        d = json.loads(out.read_text())
        assert d["format"].startswith("foldsurf")

    def test_fiber_product(self, tmp_path, core_file):
        out = tmp_path / "fp.json"
        code = run(tmp_path, "fiber-product", str(core_file), str(core_file),
                   "--out", str(out))
        assert code == 0
        d = json.loads(out.read_text())
        assert set(d) == {"product", "core"}


class TestMalnormal:
    def test_single_random_core_passes(self, tmp_path, core_file, capsys):
        code = run(tmp_path, "malnormal", "--cores", str(core_file),
                   "--out", str(tmp_path / "m.json"))
        assert code == 0
        assert "malnormal family of 1" in capsys.readouterr().out

    def test_repeated_core_fails_with_witness(self, tmp_path, core_file, capsys):
        out = tmp_path / "m.json"
        code = run(tmp_path, "malnormal", "--cores", str(core_file),
                   str(core_file), "--out", str(out))
        assert code == 1
        assert "NOT malnormal" in capsys.readouterr().out
        d = json.loads(out.read_text())
        assert d["malnormal"] is False
        assert d["witness"] is not None


class TestRigid:
    def test_rigid_loop(self, tmp_path, core_file, capsys):
        code = run(tmp_path, "rigid", "--loop", MALNORMAL_WORDS[0],
                   "--core", str(core_file), "--out", str(tmp_path / "r.json"))
        assert code == 0
        assert "1 lift; fully rigid" in capsys.readouterr().out

    def test_missing_loop_fails_loudly(self, tmp_path, core_file, capsys):
        out = tmp_path / "r.json"
        code = run(tmp_path, "rigid", "--loop", "abab",
                   "--core", str(core_file), "--out", str(out))
        captured = capsys.readouterr().out
        d = json.loads(out.read_text())
        assert (code == 0) == d["fully_rigid"]
        assert str(d["lifts"]) in captured


class TestPseudorandomAndChain:
    def test_commutator_chain(self, tmp_path, capsys):
        code = run(tmp_path, "chain-check", "abAB",
                   "--out", str(tmp_path / "c.json"))
        assert code == 0
        assert "homologically trivial" in capsys.readouterr().out

    def test_unbalanced_chain(self, tmp_path, capsys):
        code = run(tmp_path, "chain-check", "ab",
                   "--out", str(tmp_path / "c.json"))
        assert code == 1
        assert "NOT homologically trivial" in capsys.readouterr().out

    def test_power_word_is_not_pseudorandom(self, tmp_path):
        words = ["abababab", "ABABABAB"]
        code = run(tmp_path, "pseudorandom", *words, "--T", "2",
                   "--epsilon", "0.9", "--out", str(tmp_path / "p.json"))
        assert code == 1
        d = json.loads((tmp_path / "p.json").read_text())
        assert d["pseudorandom"] is False
        assert d["worst_ratio"] > 1 - 0.9


class TestBuildSurface:
    def test_commutator_piece(self, tmp_path, capsys):
        out = tmp_path / "piece.json"
        code = run(tmp_path, "build-surface", "abAB", "--seed", "0",
                   "--out", str(out))
        assert code == 0
        assert "chi=-1" in capsys.readouterr().out
        d = json.loads(out.read_text())
        assert d["seed"] == 0

    def test_oracle_flag_enumerates(self, tmp_path):
        code = run(tmp_path, "build-surface", "abAB", "--oracle",
                   "--seed", "0", "--out", str(tmp_path / "piece.json"))
        assert code == 0

    def test_impossible_chain_exits_one(self, tmp_path, capsys):
        code = run(tmp_path, "build-surface", "aa", "A", "A", "--seed", "0",
                   "--out", str(tmp_path / "piece.json"))
        assert code == 1
        assert "no surface piece" in capsys.readouterr().out

    def test_piece_verify_round_trip(self, tmp_path):
        piece = tmp_path / "piece.json"
        run(tmp_path, "build-surface", "abAB", "--seed", "0", "--out", str(piece))
        code = run(tmp_path, "verify", str(piece),
                   "--out", str(tmp_path / "v.json"))
        assert code == 0
        assert json.loads((tmp_path / "v.json").read_text())["valid"] is True


class TestCertify:
    def test_certify_writes_certificate(self, tmp_path, spec_file, capsys):
        out = tmp_path / "cert.json"
        code = run(tmp_path, "certify", "--spec", str(spec_file),
                   "--seed", "5", "--budget", "3000000", "--out", str(out))
        assert code == 0
        assert "genus=" in capsys.readouterr().out
        d = json.loads(out.read_text())
        assert d["format"] == "foldsurf-certificate/1"
        assert d["seed"] == 5
        assert d["checklist"]["euler_characteristic"] < 0

    def test_verify_round_trip_is_byte_identical(self, tmp_path, spec_file):
        cert = tmp_path / "cert.json"
        run(tmp_path, "certify", "--spec", str(spec_file), "--seed", "5",
            "--budget", "3000000", "--out", str(cert))
        v1 = tmp_path / "v1.json"
        v2 = tmp_path / "v2.json"
        assert run(tmp_path, "verify", str(cert), "--out", str(v1)) == 0
        assert run(tmp_path, "verify", str(cert), "--out", str(v2)) == 0
        assert v1.read_bytes() == v2.read_bytes()
        checklist = json.loads(v1.read_text())["checklist"]
        assert checklist == json.loads(cert.read_text())["checklist"]

    def test_tampered_certificate_is_rejected(self, tmp_path, spec_file, capsys):
        cert = tmp_path / "cert.json"
        run(tmp_path, "certify", "--spec", str(spec_file), "--seed", "5",
            "--budget", "3000000", "--out", str(cert))
        d = json.loads(cert.read_text())
        d["genus"] += 1
        cert.write_text(json.dumps(d))
        code = run(tmp_path, "verify", str(cert),
                   "--out", str(tmp_path / "v.json"))
        assert code == 1
        assert "FAILS re-verification" in capsys.readouterr().out

    def test_malnormality_failure_exits_one(self, tmp_path, capsys):
        spec = tmp_path / "bad.json"
        d = {"format": "foldsurf-spec-v1", "kind": "amalgam",
             "rank1": 2, "rank2": 2, "phi1": ["aa"], "phi2": ["bb"],
             "provenance": "explicit"}
        spec.write_text(json.dumps(d))
        code = run(tmp_path, "certify", "--spec", str(spec), "--seed", "0",
                   "--out", str(tmp_path / "cert.json"))
        assert code == 1
        assert "stage malnormal" in capsys.readouterr().out


class TestExperiment:
    def test_small_grid_to_csv(self, tmp_path, capsys):
        out = tmp_path / "exp.csv"
        code = run(tmp_path, "experiment", "--trials", "2",
                   "--length", "10,14", "--seed", "1", "--out", str(out))
        assert code == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0].startswith("n, trial, malnormal")
        assert len(lines) == 5
        assert "malnormal rates" in capsys.readouterr().out


class TestErrorPaths:
    def test_malformed_json_exits_two(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        code = run(tmp_path, "verify", str(bad),
                   "--out", str(tmp_path / "v.json"))
        assert code == 2
        assert "error:" in capsys.readouterr().err

    def test_missing_file_exits_two(self, tmp_path):
        code = run(tmp_path, "fold", str(tmp_path / "nowhere.json"))
        assert code == 2

    def test_bad_word_exits_two(self, tmp_path):
        code = run(tmp_path, "core", "ab!x", "--out", str(tmp_path / "c.json"))
        assert code == 2

    def test_unknown_subcommand_exits_two(self, tmp_path, capsys):
        assert run(tmp_path, "frobnicate") == 2
        capsys.readouterr()

    def test_unrecognized_record_format(self, tmp_path, capsys):
        f = tmp_path / "odd.json"
        f.write_text(json.dumps({"format": "mystery/9"}))
        code = run(tmp_path, "verify", str(f), "--out", str(tmp_path / "v.json"))
        assert code == 2
        capsys.readouterr()


def test_console_script_is_installed():
    proc = subprocess.run(["foldsurf", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "certify" in proc.stdout
