from __future__ import annotations

import json
from pathlib import Path

import pytest

from omniperm.cli import EXIT_BUDGET, EXIT_INPUT, EXIT_NEGATIVE, EXIT_OK, main, run
from omniperm.config import ConfigError, load_config, params_from_dict, parse_config, parse_int_list
from omniperm.report import ReportDocument

ROOT = Path(__file__).resolve().parent.parent
CFG = ROOT / "configs" / "z2_z3.cfg"
DEPENDENT = ROOT / "configs" / "dependent.cfg"
TEXT = CFG.read_text()


def _edit(text, key, value):
    lines = [ln for ln in text.splitlines() if not ln.startswith(key + " ")]
    return "\n".join(lines + [f"{key} = {value}"]) + "\n"


def _drop(text, key):
    return "\n".join(ln for ln in text.splitlines() if not ln.startswith(key + " ")) + "\n"


# -- config ----------------------------------------------------------------------

def test_parse_acceptance_config():
    cfg = load_config(CFG)
    assert list(cfg.words) == ["u1", "u2"] and cfg.targets == {"u1": 1, "u2": 1}
    assert cfg.params.seed == 0 and cfg.params.girth_target == 6
    product = cfg.product()
    assert product.A.order == 2 and product.B.order == 3
    assert cfg.parsed_words()["u2"] == product.parse("a b a B")


@pytest.mark.parametrize("text,expected", [
    ("1 2 3", (1, 2, 3)), ("1,2,4", (1, 2, 4)), ("2-5", (2, 3, 4, 5)), (" 7 ", (7,))])
def test_int_lists(text, expected):
    assert parse_int_list(text) == expected


@pytest.mark.parametrize("text", ["", "5-2", "a b"])
def test_int_list_errors(text):
    with pytest.raises(ValueError):
        parse_int_list(text)


@pytest.mark.parametrize("mutate,line,key", [
    (lambda t: t.replace("word.u1 = a b", "word.u1 = a q"), 13, "word.u1"),
    (lambda t: t.replace("target.u1 = 1", "target.u1 = zero"), 15, "target.u1"),
    (lambda t: t.replace("target.u1 = 1", "target.u1 = 0"), 15, "target.u1"),
    (lambda t: t.replace("group.B.row.b = b B 1", "group.B.row.b = b B"), 10, "group.B.row.b"),
    (lambda t: t.replace("group.B.row.b = b B 1", "group.B.row.b = b B x"), 10, "group.B.row.b"),
    (lambda t: t.replace("param.seed = 0", "param.sed = 0"), 18, "param.sed"),
    (lambda t: t.replace("param.seed = 0", "param.seed = x"), 18, "param.seed"),
    (lambda t: t.replace("param.seed = 0", "param.seed = 0\nparam.seed = 1"), 19, "param.seed"),
    (lambda t: t.replace("param.seed = 0", "oops"), 18, None),
    (lambda t: t.replace("param.seed = 0", "word.u1.x = a"), 18, "word.u1.x"),
])
def test_parse_errors_name_line_and_field(mutate, line, key):
    with pytest.raises(ConfigError) as info:
        parse_config(mutate(TEXT))
    err = info.value
    assert err.line == line and err.key == key
    assert str(err).startswith(f"line {line}")
    if key:
        assert repr(key) in str(err)


def test_semantic_group_errors():
    # identity not first
    bad = TEXT.replace("group.A.row.1 = 1 a", "group.A.row.1 = a 1").replace("group.A.row.a = a 1", "group.A.row.a = 1 a")
    with pytest.raises(ConfigError, match="identity"):
        parse_config(bad)
    # closed but not associative / no inverses: constant table
    bad = TEXT.replace("group.B.row.b = b B 1", "group.B.row.b = b b b")
    with pytest.raises(ConfigError, match="not a group|identity"):
        parse_config(bad)
    with pytest.raises(ConfigError, match="undeclared word"):
        parse_config(TEXT + "target.u9 = 2\n")
    with pytest.raises(ConfigError, match="m_range"):
        parse_config(TEXT + "param.m_range = 1 2\n")
    with pytest.raises(ConfigError, match="no words"):
        parse_config(_drop(_drop(_drop(_drop(TEXT, "word.u1"), "word.u2"), "target.u1"), "target.u2"))


def test_overrides_and_defaults():
    cfg = parse_config(_drop(TEXT, "target.u2"), {"seed": 9, "k_prime": 2})
    assert cfg.targets["u2"] == 1 and cfg.params.seed == 9 and cfg.params.k_prime == 2
    cfg = parse_config(TEXT + "param.k_prime = auto\nparam.m_range = 1-4\nparam.proposition_mode = yes\n")
    assert cfg.params.k_prime is None and cfg.params.m_range == (1, 2, 3, 4) and cfg.params.proposition


def test_config_dict_round_trip():
    cfg = load_config(CFG)
    d = json.loads(json.dumps(cfg.to_dict()))
    assert params_from_dict(d["params"]) == cfg.params
    assert d["groups"]["B"]["rows"]["b"] == ["b", "B", "1"]


def test_report_round_trip():
    doc = ReportDocument("check", "success", 0, {"a": 1}, {"orders": [{"element": "u1", "order": 4}]},
                         {"seconds": 1.5})
    back = ReportDocument.from_json(doc.to_json())
    assert back == doc and back.to_json() == doc.to_json()
    assert "u1" in back.render()
    with pytest.raises(ValueError):
        ReportDocument.from_json(json.dumps({"format": "other"}))


# -- commands --------------------------------------------------------------------

def test_check_exit_codes(tmp_path):
    assert main(["check", str(CFG), "--report", str(tmp_path / "ok.json")]) == EXIT_OK
    code, doc = run(["check", str(DEPENDENT), "--report", str(tmp_path / "dep.json")])
    assert code == EXIT_NEGATIVE and doc.status == "negative"
    hyp = doc.result["hypothesis"]
    assert not hyp["passed"] and hyp["failures"]


def test_missing_and_malformed_inputs(tmp_path):
    assert main(["check", str(tmp_path / "nope.cfg")]) == EXIT_INPUT
    bad = tmp_path / "bad.cfg"
    bad.write_text("group.A.name = Z2\nthis is not valid\n")
    code, doc = run(["check", str(bad), "--report", str(tmp_path / "r.json")])
    assert code == EXIT_INPUT and "line 2" in doc.result["error"]


def test_budget_exit(tmp_path):
    code, doc = run(["base", str(CFG), "--max-vertices", "6", "--girth", "50",
                     "--report", str(tmp_path / "b.json")])
    assert code == EXIT_BUDGET and doc.status == "budget-exceeded"


def test_base_and_surgery(tmp_path):
    code, doc = run(["base", str(CFG), "--report", str(tmp_path / "b.json"), "--export-dot", str(tmp_path / "b.dot")])
    assert code == EXIT_OK and doc.result["certificate"]["passed"]
    assert (tmp_path / "b.dot").read_text().startswith("digraph")
    code, doc = run(["surgery", str(CFG), "--k-prime", "2", "--copies", "4", "--report", str(tmp_path / "s.json")])
    assert code == EXIT_OK
    st = doc.result["structure"]
    assert st["valid"] and st["spliced_length"] == st["expected_spliced_length"]
    assert st["vertices"] == st["expected_vertices"] and st["region_adjacency_violations"] == []
    assert doc.result["confinement"]["u2"]["passed"]


def test_export(tmp_path):
    dot = tmp_path / "d.dot"
    code, _ = run(["export", str(CFG), "--stage", "surgery", "--k-prime", "2", "--export-dot", str(dot),
                   "--report", str(tmp_path / "e.json")])
    assert code == EXIT_OK
    assert dot.read_text().count("subgraph cluster") == 3


@pytest.fixture(scope="module")
def omni(tmp_path_factory):
    d = tmp_path_factory.mktemp("omni")
    code, doc = run(["omnipotence", str(CFG), "--report", str(d / "run.json")])
    return code, doc, d


def test_omnipotence_run(omni):
    code, doc, d = omni
    assert code == EXIT_OK
    K = doc.result["K"]
    assert [r["order"] for r in doc.result["orders"]] == [K, K]
    assert (d / "run.hom.npz").exists()


def test_verify_accepts_and_detects_tamper(omni, tmp_path):
    _, _, d = omni
    code, doc = run(["verify", str(d / "run.json"), "--report", str(tmp_path / "v.json")])
    assert code == EXIT_OK and doc.result["mismatches"] == []
    tampered = json.loads((d / "run.json").read_text())
    tampered["result"]["orders"][1]["order"] += 1
    bad = d / "tampered.json"
    bad.write_text(json.dumps(tampered))
    code, doc = run(["verify", str(bad), "--report", str(tmp_path / "v2.json")])
    assert code == EXIT_NEGATIVE
    fields = {(m.get("element"), m["field"]) for m in doc.result["mismatches"]}
    assert ("u2", "order") in fields and all(e != "u1" for e, _ in fields)


def test_verify_missing_hom(omni, tmp_path):
    _, _, d = omni
    assert main(["verify", str(d / "run.json"), "--hom", str(tmp_path / "none.npz"),
                 "--report", str(tmp_path / "v.json")]) == EXIT_INPUT


def test_reports_are_deterministic(omni, tmp_path):
    _, doc, _ = omni
    code, again = run(["omnipotence", str(CFG), "--report", str(tmp_path / "again.json")])
    assert code == EXIT_OK
    a, b = doc.to_dict(with_timing=False), again.to_dict(with_timing=False)
    a["result"].pop("hom"), b["result"].pop("hom")
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
