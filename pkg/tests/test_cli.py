import json

import numpy as np
import pytest

from rdmbound import cli

HUBBARD_EXACT = 2 - 2 * np.sqrt(2)

FCIDUMP_N2_SYSTEM = """&FCI NORB=2,NELEC=2,MS2=0,
&END
-1.25 1 1 0 0
-0.47 2 2 0 0
0.67 1 1 1 1
0.67 2 2 2 2
0.18 1 2 2 1
0.66 1 1 2 2
1.5 0 0 0 0
"""


def run_cli(args, capsys):
    code = cli.main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestSolve:
    def test_hubbard_defaults(self, capsys):
        code, out, err = run_cli(
            ["solve", "--toy", "hubbard-dimer", "--t", "1", "--U", "4", "--no-timestamp"],
            capsys,
        )
        assert code == 0
        energy = float(next(l for l in out.splitlines() if "energy_hartree" in l).split("=")[1])
        assert HUBBARD_EXACT - 1e-4 <= energy <= HUBBARD_EXACT + 1e-6

    def test_missing_file_exit_2(self, capsys):
        code, out, err = run_cli(["solve", "--fcidump", "/no/such/file.dump"], capsys)
        assert code == 2
        assert "not found" in err

    def test_bad_fcidump_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.dump"
        bad.write_text("this is not an fcidump\n")
        code, out, err = run_cli(["solve", "--fcidump", str(bad)], capsys)
        assert code == 2
        assert "error" in err

    def test_fcidump_solve(self, tmp_path, capsys):
        dump = tmp_path / "sys.dump"
        dump.write_text(FCIDUMP_N2_SYSTEM)
        code, out, err = run_cli(
            ["solve", "--fcidump", str(dump), "--with-fci", "--format", "json", "--no-timestamp"],
            capsys,
        )
        assert code == 0
        body = json.loads(out)
        assert body["energy"] == pytest.approx(body["e_fci"], abs=1e-6)

    def test_json_format(self, capsys):
        code, out, _ = run_cli(
            ["solve", "--toy", "hubbard-dimer", "--format", "json", "--no-timestamp"], capsys
        )
        assert code == 0
        body = json.loads(out)
        assert body["status"] == "converged"

    def test_nonconvergence_exit_3_report_written(self, tmp_path, capsys):
        out_file = tmp_path / "report.csv"
        code, out, err = run_cli(
            [
                "solve", "--toy", "random", "--seed", "105", "--r", "6", "--n", "3",
                "--damping", "0.05", "--slope-tol", "1e-9", "--max-outer", "2",
                "--no-confirm", "--no-timestamp", "--output", str(out_file),
            ],
            capsys,
        )
        assert code == 3
        assert out_file.exists()
        assert "kind,mu,delta" in out_file.read_text()

    def test_bracket_error_exit_2(self, capsys):
        code, out, err = run_cli(
            ["solve", "--toy", "hubbard-dimer", "--mu0", "-5.0"], capsys
        )
        assert code == 2
        assert "mu0" in err

    def test_timestamp_header_default_and_suppressed(self, capsys):
        code, out, _ = run_cli(["solve", "--toy", "hubbard-dimer"], capsys)
        assert out.startswith("# generated ")
        code, out, _ = run_cli(["solve", "--toy", "hubbard-dimer", "--no-timestamp"], capsys)
        assert not out.startswith("# generated ")


class TestCurve:
    def test_csv_schema_and_determinism(self, capsys):
        args = [
            "curve", "--toy", "hubbard-dimer", "--mu-min", "-1.0", "--mu-max", "0.2",
            "--points", "5", "--no-timestamp",
        ]
        code1, out1, _ = run_cli(args, capsys)
        code2, out2, _ = run_cli(args, capsys)
        assert code1 == code2 == 0
        assert out1 == out2  # byte-identical without the timestamp line
        lines = out1.strip().splitlines()
        assert lines[0] == "mu,delta,derivative,error"
        assert len(lines) == 6

    def test_grid_below_mu_star_all_zero(self, capsys):
        code, out, _ = run_cli(
            [
                "curve", "--toy", "hubbard-dimer", "--mu-min", "-2.0", "--mu-max", "-1.0",
                "--points", "4", "--no-timestamp",
            ],
            capsys,
        )
        assert code == 0
        for line in out.strip().splitlines()[1:]:
            assert float(line.split(",")[1]) == 0.0

    def test_missing_grid_exit_2(self, capsys):
        code, _, err = run_cli(["curve", "--toy", "hubbard-dimer"], capsys)
        assert code == 2


class TestDissociate:
    def test_hubbard_scan(self, capsys):
        code, out, _ = run_cli(
            [
                "dissociate", "--hubbard-scan-u", "0,2,4,8", "--t", "1",
                "--with-fci", "--no-timestamp",
            ],
            capsys,
        )
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "label,e_app,e_fci,gap,error"
        assert len(lines) == 5
        for line in lines[1:]:
            cells = line.split(",")
            assert float(cells[1]) <= float(cells[2]) + 1e-6  # lower bound per row

    def test_file_batch(self, tmp_path, capsys):
        d1 = tmp_path / "a.dump"
        d2 = tmp_path / "b.dump"
        d1.write_text(FCIDUMP_N2_SYSTEM)
        d2.write_text(FCIDUMP_N2_SYSTEM)
        code, out, _ = run_cli(
            ["dissociate", str(d1), str(d2), "--labels", "r1,r2", "--no-timestamp"], capsys
        )
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[1].startswith("r1,")
        assert lines[2].startswith("r2,")

    def test_label_count_mismatch(self, tmp_path, capsys):
        d1 = tmp_path / "a.dump"
        d1.write_text(FCIDUMP_N2_SYSTEM)
        code, _, err = run_cli(["dissociate", str(d1), "--labels", "x,y"], capsys)
        assert code == 2

    def test_empty_exit_2(self, capsys):
        code, _, err = run_cli(["dissociate"], capsys)
        assert code == 2


class TestFci:
    def test_hubbard(self, capsys):
        code, out, _ = run_cli(["fci", "--toy", "hubbard-dimer", "--no-timestamp"], capsys)
        assert code == 0
        energy = float(next(l for l in out.splitlines() if "energy_hartree" in l).split("=")[1])
        assert energy == pytest.approx(HUBBARD_EXACT, abs=1e-10)

    def test_cap_exit_2(self, capsys):
        code, _, err = run_cli(
            ["fci", "--toy", "random", "--r", "10", "--n", "4", "--cap", "10"], capsys
        )
        assert code == 2

    def test_rdm_out(self, tmp_path, capsys):
        rdm_file = tmp_path / "rdm.csv"
        code, _, _ = run_cli(
            ["fci", "--toy", "hubbard-dimer", "--rdm-out", str(rdm_file), "--no-timestamp"],
            capsys,
        )
        assert code == 0
        rows = [
            [float(v) for v in line.split(",")]
            for line in rdm_file.read_text().splitlines()
            if not line.startswith("#")
        ]
        m = np.array(rows)
        assert m.shape == (6, 6)
        assert np.trace(m) == pytest.approx(2.0, abs=1e-10)


class TestCheck:
    def test_passes(self, capsys):
        code, out, _ = run_cli(["check", "--seed", "12345"], capsys)
        assert code == 0
        assert "all suites passed" in out

    def test_reproducible(self, capsys):
        _, out1, _ = run_cli(["check", "--seed", "12345"], capsys)
        _, out2, _ = run_cli(["check", "--seed", "12345"], capsys)
        assert out1 == out2

    def test_corrupted_fails_with_name(self, capsys):
        code, out, err = run_cli(["check", "--corrupt", "energy-chain"], capsys)
        assert code == 1
        assert "energy-chain" in err


class TestConfigFile:
    def test_config_applies_and_flags_override(self, tmp_path, capsys):
        cfg = tmp_path / "run.conf"
        cfg.write_text("toy = hubbard-dimer\nU = 4.0\nt = 1.0\nno_timestamp = true\n")
        code, out, _ = run_cli(["--config", str(cfg), "solve"], capsys)
        assert code == 0
        assert not out.startswith("# generated")

        # explicit flag wins over the config value
        code, out, _ = run_cli(
            ["--config", str(cfg), "solve", "--U", "0.0", "--no-timestamp"], capsys
        )
        assert code == 0
        energy = float(next(l for l in out.splitlines() if "energy_hartree" in l).split("=")[1])
        assert energy == pytest.approx(-2.0, abs=1e-6)  # U = 0 dimer

    def test_malformed_config(self, tmp_path, capsys):
        cfg = tmp_path / "bad.conf"
        cfg.write_text("just a line without equals\n")
        code, _, err = run_cli(["--config", str(cfg), "check"], capsys)
        assert code == 2
