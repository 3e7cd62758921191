import dataclasses
import json
import subprocess
import sys

import pytest

from noninf.cli import EXIT_DIFF, EXIT_OK, EXIT_VALIDATION, main
from noninf.foundation import TwoArmData
from noninf.operating import OcScenario, exact_type1


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows_of(out):
    return {line.split()[0]: line.split()[1:] for line in out.splitlines()[2:]}


class TestAnalyze:
    def test_example_1(self, capsys):
        code, out, _ = run(capsys, "analyze", "--xt", "264", "--nt", "328", "--xc", "268",
                           "--nc", "317", "--margin", "0.1")
        assert code == EXIT_OK
        els = rows_of(out)["ELS"]
        assert els[:4] == ["-9.94", "1.84", "0.0239", "reject_inferiority"]
        assert rows_of(out)["Wald"][:2] == ["-9.91", "1.80"]

    def test_zero_score_pvalue(self, capsys):
        code, out, _ = run(capsys, "analyze", "--xt", "4", "--nt", "10", "--xc", "5", "--nc", "10",
                           "--margin", "0.1", "--methods", "als")
        assert code == EXIT_OK and rows_of(out)["ALS"][2] == "0.5000"

    def test_example_3_decisions(self, capsys):
        code, out, _ = run(capsys, "analyze", "--xt", "411", "--nt", "435", "--xc", "426",
                           "--nc", "441", "--margin", "0.05", "--methods", "ha,els,als,ncc")
        r = rows_of(out)
        assert r["HA"][-1] == "reject_inferiority" and r["ELS"][-2] == "reject_inferiority"
        assert r["ALS"][-1] == "fail_to_reject" and r["NCC"][-1] == "fail_to_reject"

    def test_json_matches_library(self, capsys):
        code, out, _ = run(capsys, "analyze", "--xt", "30", "--nt", "40", "--xc", "28", "--nc", "40",
                           "--margin", "0.15", "--methods", "als,els,es", "--json")
        doc = json.loads(out)
        assert doc["schema"] == "noninf.analyze" and doc["version"] == 1
        from noninf.analysis import analyze
        lib = analyze(TwoArmData.from_counts(30, 40, 28, 40), 0.15, methods=("als", "els", "es"))
        for got, want in zip(doc["results"], lib):
            assert got["method"] == want.method
            assert got["p_value"] == want.p_value
            if want.interval is not None:
                assert (got["lower"], got["upper"]) == (want.interval.lower, want.interval.upper)

    def test_full_precision(self, capsys):
        code, out, _ = run(capsys, "analyze", "--xt", "4", "--nt", "10", "--xc", "5", "--nc", "10",
                           "--margin", "0.1", "--methods", "wald", "--precision", "full")
        lower = float(rows_of(out)["Wald"][0])
        assert -1 < lower < 0 and len(rows_of(out)["Wald"][0]) > 8

    @pytest.mark.parametrize("argv,field", [
        (["--xt", "11", "--nt", "10", "--xc", "1", "--nc", "10", "--margin", "0.1"], "--xt"),
        (["--xt", "1", "--nt", "10", "--xc", "1", "--nc", "0", "--margin", "0.1"], "--nc"),
        (["--xt", "1", "--nt", "10", "--xc", "1", "--nc", "10", "--margin", "1.5"], "margin"),
        (["--xt", "1", "--nt", "10", "--xc", "1", "--nc", "10", "--margin", "0.1", "--methods", ","],
         "--methods"),
        (["--xt", "1", "--nt", "10", "--xc", "1", "--nc", "10", "--margin", "0.1", "--methods", "foo"],
         "foo"),
    ])
    def test_validation(self, capsys, argv, field):
        code, _, err = run(capsys, "analyze", *argv)
        assert code == EXIT_VALIDATION and field in err

    def test_es_size_guard(self, capsys):
        base = ["analyze", "--xt", "150", "--nt", "200", "--xc", "150", "--nc", "200", "--margin", "0.1",
                "--methods", "es"]
        code, _, err = run(capsys, *base)
        assert code == EXIT_VALIDATION and "150" in err

    def test_bad_usage_is_validation(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["analyze", "--xt", "1"])
        assert exc.value.code == EXIT_VALIDATION
        capsys.readouterr()


SWEEP = """delta0,ratio_t,ratio_c,p_control,power,alpha,n_test
0.10,1,2,0.25,0.80,0.05,207
0.10,1,1,0.40,0.80,0.05,
"""


class TestType1:
    def test_csv_output(self, tmp_path, capsys):
        cfg = tmp_path / "sweep.csv"
        cfg.write_text(SWEEP)
        code, out, _ = run(capsys, "type1", "--config", str(cfg))
        assert code == EXIT_OK
        lines = out.splitlines()
        assert lines[0] == "delta0,ratio,p_control,n_test,n_control,wald,ac,ha,ncc,nc,als,els"
        first = lines[1].split(",")
        assert first[:5] == ["0.1", "1:2", "0.25", "207", "414"]
        assert first[5] == "2.21" and first[-1] == "2.49"
        assert lines[2].split(",")[3:5] == ["375", "375"]
        assert "summary,wald,ac,ha,ncc,nc,als,els" in lines
        assert any(line.startswith("mean_above,") for line in lines)

    def test_json_round_trip(self, tmp_path, capsys):
        cfg = tmp_path / "sweep.csv"
        cfg.write_text(SWEEP)
        code, out, _ = run(capsys, "type1", "--config", str(cfg), "--methods", "als,els", "--json")
        doc = json.loads(out)
        assert code == EXIT_OK and doc["schema"] == "noninf.type1"
        row = doc["rows"][0]
        s = OcScenario(row["n_test"], row["n_control"], row["delta0"], row["p_control"])
        assert row["type1"]["els"] == exact_type1("els", s).type1_error
        assert set(doc["summary"]) == {"als", "els"}

    def test_json_config(self, tmp_path, capsys):
        cfg = tmp_path / "sweep.json"
        cfg.write_text(json.dumps({"rows": [{"delta0": 0.2, "ratio_t": 1, "ratio_c": 1, "p_control": 0.5,
                                             "power": 0.8, "alpha": 0.05, "n_test": 12}]}))
        code, out, _ = run(capsys, "type1", "--config", str(cfg), "--methods", "wald")
        assert code == EXIT_OK and out.splitlines()[1].startswith("0.2,1:1,0.5,12,12,")

    def test_infeasible_row_skipped(self, tmp_path, capsys):
        cfg = tmp_path / "sweep.csv"
        cfg.write_text("delta0,ratio_t,ratio_c,p_control,power,alpha,n_test\n"
                       "0.2,1,1,0.1,0.8,0.05,10\n0.1,1,1,0.5,0.8,0.05,10\n")
        code, out, err = run(capsys, "type1", "--config", str(cfg), "--methods", "als")
        assert code == EXIT_VALIDATION and "row 2" in err
        assert len([x for x in out.splitlines()[1:] if x.startswith("0.1,")]) == 1

    def test_missing_column(self, tmp_path, capsys):
        cfg = tmp_path / "sweep.csv"
        cfg.write_text("delta0,ratio_t,p_control\n0.1,1,0.5\n")
        code, _, err = run(capsys, "type1", "--config", str(cfg))
        assert code == EXIT_VALIDATION and "ratio_c" in err

    def test_output_independent_of_jobs(self, tmp_path, capsys):
        cfg = tmp_path / "sweep.csv"
        lines = ["delta0,ratio_t,ratio_c,p_control,power,alpha,n_test"]
        for k in range(10):
            lines.append(f"{(0.1, 0.15, 0.2)[k % 3]},{1 + k % 2},1,{0.3 + 0.05 * k:.2f},0.8,0.05,{15 + k}")
        cfg.write_text("\n".join(lines) + "\n")
        outs = []
        for jobs in ("1", "8"):
            dest = tmp_path / f"out{jobs}.csv"
            assert main(["type1", "--config", str(cfg), "--jobs", jobs, "-o", str(dest)]) == EXIT_OK
            outs.append(dest.read_bytes())
        assert outs[0] == outs[1]


class TestSampleSizeAndPower:
    @pytest.mark.parametrize("power,printed", [("0.8", 374), ("0.9", 502)])
    def test_samplesize(self, capsys, power, printed):
        code, out, _ = run(capsys, "samplesize", "--margin", "0.1", "--pc", "0.6", "--power", power,
                           "--json")
        doc = json.loads(out)
        assert code == EXIT_OK and abs(doc["n_test"] - printed) <= 2
        assert doc["exact_power"]["als"] >= float(power) - 0.01

    def test_power_text(self, capsys):
        code, out, _ = run(capsys, "power", "--nt", "100", "--nc", "100", "--margin", "0.1",
                           "--pt", "0.5", "--pc", "0.5")
        assert code == EXIT_OK
        assert [line.split()[0] for line in out.splitlines()] == ["ALS", "ELS"]

    def test_bad_ratio(self, capsys):
        code, _, err = run(capsys, "samplesize", "--margin", "0.1", "--pc", "0.6", "--ratio", "2-1")
        assert code == EXIT_VALIDATION and "--ratio" in err


class TestTables:
    def test_table4_reproduces(self, capsys):
        code, out, _ = run(capsys, "tables", "--which", "4")
        assert code == EXIT_OK and out.strip().endswith("values reproduced")

    def test_diff_exit_code(self, capsys, monkeypatch):
        import noninf.reproduce as rep
        ex = rep.TABLE4[0]
        wrong = dataclasses.replace(ex, intervals=ex.intervals | {"wald": (-9.0, 1.80)})
        monkeypatch.setattr(rep, "TABLE4", (wrong,))
        code, out, _ = run(capsys, "tables", "--which", "4")
        assert code == EXIT_DIFF and "wald" in out.lower()


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "noninf.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "noninf" in res.stdout
