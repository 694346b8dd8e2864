import json

import pytest

from primechain.cli import RunConfig, ConfigError, main, parse_int, verify_document


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse_int():
    assert parse_int("1e6") == 10**6
    assert parse_int("10**7") == 10**7
    assert parse_int("1_000") == 1000
    with pytest.raises(ConfigError):
        parse_int("1.5")
    with pytest.raises(ConfigError):
        parse_int("abc")


def test_admissible_check_exit_codes(capsys):
    assert run(capsys, "admissible", "check", "--offsets", "0,2,6")[0] == 0
    code, out, _ = run(capsys, "admissible", "check", "--offsets", "0,2,4")
    assert code == 1 and json.loads(out)["admissible"] is False


def test_usage_errors(capsys, tmp_path):
    assert run(capsys, "admissible", "check")[0] == 2
    assert run(capsys, "admissible", "check", "--offsets", "2,0")[0] == 2
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"J": [2], "theta": [0.5], "N": "1e5", "bogus": 1}))
    code, _, err = run(capsys, "sieve", "verify", "--config", str(cfg))
    assert code == 2 and "bogus" in err
    cfg.write_text(json.dumps({"J": [2], "theta": [1.5], "N": "1e5"}))
    code, _, err = run(capsys, "sieve", "verify", "--config", str(cfg))
    assert code == 2 and "theta" in err
    assert run(capsys, "verify", str(tmp_path / "missing.json"))[0] == 2


def test_goodtuple_roundtrip(capsys, tmp_path):
    out = tmp_path / "g.json"
    code, _, _ = run(capsys, "goodtuple", "build", "--seed", "5", "--len", "4", "--bound", "1e6",
                     "--out", str(out))
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["kind"] == "goodtuple" and doc["primes"] == [5, 11, 17, 41]
    assert run(capsys, "verify", str(out))[0] == 0
    assert run(capsys, "goodtuple", "verify", "--in", str(out))[0] == 0
    assert run(capsys, "goodtuple", "verify", "--primes", "5,13")[0] == 1
    assert run(capsys, "goodtuple", "build", "--len", "6", "--bound", "1000")[0] == 1


def test_tampered_certificates_fail(capsys, tmp_path):
    out = tmp_path / "s.json"
    assert run(capsys, "sumset", "build", "--a", "1,9,25,49", "--count", "4", "--bound", "1000",
               "--out", str(out))[0] == 0
    doc = json.loads(out.read_text())
    assert doc["b"] == [1, 2, 4, 22, 58]
    doc["b"][3] = 23
    out.write_text(json.dumps(doc))
    code, text, _ = run(capsys, "sumset", "verify", "--in", str(out))
    assert code == 1 and "FAIL" in text
    w = tmp_path / "w.json"
    assert run(capsys, "admissible", "witness", "--offsets", "0,2", "--hi", "100", "--out", str(w))[0] == 0
    doc = json.loads(w.read_text())
    doc["witnesses"].append(97)
    w.write_text(json.dumps(doc))
    assert run(capsys, "verify", str(w))[0] == 1


def test_verify_document_detects_kind():
    assert verify_document({"offsets": [0, 2], "witnesses": [3, 5], "searched_up_to": 5}) == []
    assert verify_document({"what": 1}) == ["unrecognised certificate"]
    assert verify_document({"kind": "goodtuple", "primes": [5, 11]})  # missing step witnesses


def test_sumset_csv(capsys):
    code, out, _ = run(capsys, "sumset", "build", "--a", "1,9", "--count", "2", "--bound", "100",
                       "--format", "csv")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "i,j,a_i,b_j,sum,prime"
    assert len(lines) == 4


def test_sieve_verify_csv_and_json(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"J": [2], "offsets": [[0, 2]], "N": ["1e5"], "z": 7}))
    code, out, _ = run(capsys, "sieve", "verify", "--config", str(cfg))
    assert code == 0 and json.loads(out)["reports"][0]["k"] == 2
    code, out, _ = run(capsys, "sieve", "verify", "--config", str(cfg), "--format", "csv")
    assert code == 0 and out.startswith("N,quantity,empirical,predicted,ratio")


def test_sieve_functionals(capsys, tmp_path):
    code, out, _ = run(capsys, "sieve", "functionals", "--J", "4")
    assert code == 0 and json.loads(out)["c"] > 0
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"J": [2, 1], "theta": [0.5, 0.25], "N": 10**5}))
    code, out, _ = run(capsys, "sieve", "functionals", "--config", str(cfg))
    assert code == 0 and json.loads(out)["kind"] == "functionals"


def test_run_config_defaults():
    cfg = RunConfig.from_dict({"J": [2, 3], "N": "1e6"})
    assert cfg.theta == [0.5, 0.5] and cfg.N == [10**6] and cfg.z == 7
    assert cfg.grid().flat.offsets == (1, 9, 25, 49, 81)
    with pytest.raises(ConfigError) as exc:
        RunConfig.from_dict({"J": [2], "N": 10, "offsets": [[0, 2, 4]]})
    assert exc.value.field == "offsets"


def test_chain_run(capsys, tmp_path):
    out = tmp_path / "c.json"
    code, _, _ = run(capsys, "chain", "run", "--shape", "2,3", "--theta", "0.5,0.25", "--N", "1e5",
                     "--depth", "2", "--out", str(out))
    assert code == 0
    assert run(capsys, "verify", str(out))[0] == 0


def test_chain_run_needs_theta(capsys):
    code, _, err = run(capsys, "chain", "run", "--shape", "2,3", "--N", "1e5", "--depth", "2")
    assert code == 2 and "theta" in err
