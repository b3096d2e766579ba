import io
import json
import subprocess
import sys

import pytest

from cpdcert.cli import JobSpec, main, run

from conftest import DATA

W5 = str(DATA / "example_w5.json")
W2 = str(DATA / "example_w2.json")
COMPOUND = str(DATA / "compound_3x4.json")


def invoke(*args):
    out, err = io.StringIO(), io.StringIO()
    sys_out, sys_err = sys.stdout, sys.stderr
    sys.stdout, sys.stderr = out, err
    try:
        code = main(list(args))
    finally:
        sys.stdout, sys.stderr = sys_out, sys_err
    return code, out.getvalue(), err.getvalue()


def test_certify_third_on_w5():
    code, out, _ = invoke("--input", W5, "--command", "certify-third")
    assert code == 0
    cert = json.loads(out)
    assert cert["conclusion"] == "third_factor_unique"
    assert cert["m"] == 5
    assert cert["chain"][-1]["rule"] == "W5-route"


def test_certify_overall_on_w5():
    code, out, _ = invoke("--input", W5, "--command", "certify-overall")
    assert code == 0 and json.loads(out)["conclusion"] == "not_unique"


def test_krank_of_third_factor():
    code, out, _ = invoke("--input", W5, "--command", "krank", "--target", "3")
    assert code == 0 and json.loads(out)["k_rank"] == 1


def test_compound_of_bare_matrix():
    code, out, _ = invoke("--input", COMPOUND, "--command", "compound", "--m", "2")
    res = json.loads(out)
    assert code == 0
    assert res["compound"] == [["-3", "2", "0", "1", "0", "0"], ["-5", "0", "2", "0", "1", "0"],
                               ["0", "-5", "3", "0", "0", "1"]]
    assert res["column_labels"][0] == [1, 2]


def test_hprofile_and_analyze():
    code, out, _ = invoke("--input", W5, "--command", "hprofile")
    assert code == 0 and len(json.loads(out)["H"]) == 7
    code, out, _ = invoke("--input", W2, "--command", "analyze")
    res = json.loads(out)
    assert code == 0
    assert res["m"] == 4 and res["verdicts"]["W"]["status"] == "not_applicable"
    code, out, _ = invoke("--input", W2, "--command", "analyze", "--m", "2")
    assert json.loads(out)["verdicts"]["W"]["status"] == "holds"


def test_text_format():
    code, out, _ = invoke("--input", W5, "--command", "certify-third", "--format", "text")
    assert code == 0 and "conclusion: third_factor_unique" in out


def test_match_command(tmp_path):
    other = tmp_path / "permuted.json"
    d = json.loads((DATA / "example_w2.json").read_text())
    perm = [2, 0, 3, 1]
    other.write_text(json.dumps({k: [[row[j] for j in perm] for row in v] for k, v in d.items()}))
    code, out, _ = invoke("--input", W2, "--input", str(other), "--command", "match")
    # A has a zero column, so rank-1 terms vanish and the triples are rejected
    assert code == 1
    d["A"] = [[1, 0, 2, 1], [0, 1, 1, 1]]
    base = tmp_path / "base.json"
    base.write_text(json.dumps(d))
    other.write_text(json.dumps({k: [[row[j] for j in perm] for row in v] for k, v in d.items()}))
    code, out, _ = invoke("--input", str(base), "--input", str(other), "--command", "match")
    res = json.loads(out)
    assert code == 0 and res["matched"] and res["permutation"] == [3, 1, 4, 2]


def test_csv_inputs(tmp_path):
    d = json.loads((DATA / "example_w2.json").read_text())
    paths = []
    for k in "ABC":
        p = tmp_path / f"{k}.csv"
        p.write_text("\n".join(",".join(str(v) for v in row) for row in d[k]) + "\n")
        paths += ["--input", str(p)]
    code, out, _ = invoke(*paths, "--command", "certify-third")
    assert code == 0 and json.loads(out)["conclusion"] == "not_unique"


def test_csv_diagnostics(tmp_path):
    p = tmp_path / "M.csv"
    p.write_text("1,2\n3,oops\n")
    code, _, err = invoke("--input", str(p), "--command", "krank")
    assert code == 1 and "line 2, column 2" in err


def test_json_diagnostics(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"A": [[1, 2],\n [3 4]]}')
    code, _, err = invoke("--input", str(p), "--command", "krank")
    assert code == 1 and "line 2, column" in err
    p.write_text('{"A": [[1, 2],\n [3, "x"]]}')
    code, _, err = invoke("--input", str(p), "--command", "krank")
    assert code == 1 and "row 2, column 2" in err and "line 2" in err
    p.write_text('{"A": [[1, 2], [3]]}')
    code, _, err = invoke("--input", str(p), "--command", "krank")
    assert code == 1 and "row 2 has 1 entries" in err


def test_validation_errors():
    assert invoke("--input", W5, "--command", "analyze", "--m", "9")[0] == 1
    assert invoke("--input", "/nonexistent.json")[0] == 1
    assert invoke("--command", "analyze")[0] == 1
    assert invoke("--input", COMPOUND, "--command", "compound")[0] == 1


def test_cap_refusal(monkeypatch):
    code, _, err = invoke("--input", W5, "--command", "analyze", "--cap", "5")
    assert code == 2 and "C(7," in err
    monkeypatch.setenv("CPDCERT_CAP", "5")
    code, _, err = invoke("--input", W5, "--command", "krank")
    assert code == 2


def test_float_inputs_select_float_backend(tmp_path):
    p = tmp_path / "f.json"
    p.write_text(json.dumps({"A": [[1.0, 0.5], [0.0, 1.0]], "B": [[1.0, 0.0], [0.0, 1.0]],
                             "C": [[1.0, 0.0], [0.0, 1.0]]}))
    code, out, _ = invoke("--input", str(p), "--command", "certify-overall")
    res = json.loads(out)
    assert code == 0 and res["reproducibility"]["backend"] == "float"
    code, out, _ = invoke("--input", str(p), "--command", "certify-overall", "--backend", "exact")
    assert json.loads(out)["reproducibility"]["backend"] == "exact"


def test_replay_round_trip(tmp_path):
    code, out, _ = invoke("--input", W5, "--command", "certify-third")
    p = tmp_path / "cert.json"
    p.write_text(out)
    code, out, _ = invoke("--replay", str(p))
    res = json.loads(out)
    assert code == 0 and res["identical"] and res["replayed"] == "third_factor_unique"


def test_run_with_jobspec():
    out, err = io.StringIO(), io.StringIO()
    assert run(JobSpec(inputs=[W5], command="krank", target=1), out, err) == 0
    assert json.loads(out.getvalue())["k_rank"] == 4


@pytest.mark.slow
def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "cpdcert", "--input", W5, "--command", "krank"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and json.loads(res.stdout)["k_rank"] == 1
