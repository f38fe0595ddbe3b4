"""Command line behaviour: examples, exit codes, determinism, schemas."""

import io
import json
import subprocess
import sys

import pytest

import cobord.limit
import cobord.zpn
from cobord.cli import format_group, parse_degrees, parse_group_string, pretty_series, run


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def test_fgl_example():
    code, out, _ = call("fgl", "nseries", "--law", "multiplicative", "--k", "2", "--order", "3")
    assert code == 0
    assert out.strip() == "2x + βx²"


def test_poset_example():
    code, out, _ = call("poset", "--group", "Z/4", "--flavor", "P")
    assert code == 0
    assert "7 nodes" in out.splitlines()[0]


def test_crosscheck_example():
    code, out, _ = call("crosscheck", "--p", "2", "--n", "1", "--degrees", "-8..8")
    assert code == 0, out


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "cobord", "poset", "--group", "Z/2xZ/2", "--flavor", "P''"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert "11 nodes" in proc.stdout


@pytest.mark.parametrize(
    "argv",
    [
        ("poset", "--group", "Z/100"),
        ("poset", "--group", "Q/2"),
        ("limit", "--group", "Z/2", "--degrees", "3..1"),
        ("limit", "--group", "Z/2", "--fgl", "universal-rational", "--degrees", "0..0"),
        ("zpn", "--p", "4", "--n", "1", "--degrees", "0..0"),
        ("gamma", "--group", "Z/2", "--chain", "[nope]"),
        ("fgl", "nseries", "--law", "bogus", "--k", "2"),
    ],
)
def test_validation_exit_code(argv):
    code, _, err = call(*argv)
    assert code == 2, err


def test_group_order_env(monkeypatch):
    monkeypatch.setenv("COBORD_MAX_GROUP_ORDER", "3")
    assert call("poset", "--group", "Z/4")[0] == 2
    monkeypatch.setenv("COBORD_MAX_GROUP_ORDER", "4")
    assert call("poset", "--group", "Z/4")[0] == 0


def _unstable(real):
    def wrapped(*a, **kw):
        out = real(*a, **kw)
        for r in out:
            r.stable = False
        return out

    return wrapped


def test_unstable_refused(monkeypatch):
    monkeypatch.setattr(cobord.limit, "stabilize", _unstable(cobord.limit.stabilize))
    argv = ("limit", "--group", "Z/2", "--degrees", "0..0", "--D", "2")
    assert call(*argv)[0] == 2
    code, out, _ = call(*argv, "--allow-unstable")
    assert code == 0 and "unstable" in out


def test_crosscheck_mismatch(monkeypatch):
    real = cobord.zpn.crosscheck_zpn

    def broken(*a, **kw):
        rep = real(*a, **kw)
        rep["agree"] = False
        rep["degrees"][0]["agree"] = False
        return rep

    monkeypatch.setattr(cobord.zpn, "crosscheck_zpn", broken)
    assert call("crosscheck", "--p", "2", "--n", "1", "--degrees", "0..0", "--D", "2")[0] == 3


def test_deterministic_output():
    argv = ("limit", "--group", "Z/4", "--degrees", "-2..0", "--D", "2", "--format", "json")
    a, b = call(*argv)[1], call(*argv)[1]
    assert a == b
    doc = json.loads(a)
    assert doc["config"]["group"] == "Z/4"
    assert doc["config"]["degrees"] == [-2, 0]


def test_jobs_do_not_change_output():
    argv = ("limit", "--group", "Z/2", "--degrees", "-2..2", "--D", "2", "--format", "json")
    one = json.loads(call(*argv)[1])
    two = json.loads(call(*argv, "--jobs", "2")[1])
    assert one["results"] == two["results"]


@pytest.mark.parametrize(
    "argv,schema",
    [
        (("fgl", "nseries", "--law", "multiplicative", "--k", "2", "--order", "3"), "series-output"),
        (("fgl", "sum", "--law", "additive", "--order", "3"), "series-output"),
        (("poset", "--group", "Z/2xZ/2"), "poset"),
        (("gamma", "--group", "Z/2", "--degrees", "-2..0", "--D", "1"), "gamma"),
        (("limit", "--group", "Z/2", "--degrees", "0..0", "--D", "2", "--witnesses"), "limit"),
        (("zpn", "--p", "2", "--n", "1", "--degrees", "0..0", "--D", "2"), "limit"),
        (("crosscheck", "--p", "2", "--n", "1", "--degrees", "0..0", "--D", "2"), "crosscheck"),
    ],
)
def test_json_matches_schema(argv, schema, validate_schema):
    code, out, err = call(*argv, "--format", "json")
    assert code == 0, err
    doc = json.loads(out)
    assert doc["$schema"] == "urn:cobord:schema:" + schema
    validate_schema(doc, "urn:cobord:schema:" + schema)
    assert "config" in doc


def test_table_round_trip():
    code, out, _ = call("limit", "--group", "Z/2", "--degrees", "-2..2", "--D", "2")
    _, js, _ = call("limit", "--group", "Z/2", "--degrees", "-2..2", "--D", "2", "--format", "json")
    rows = [line.split("\t") for line in out.splitlines() if not line.startswith("#")]
    results = json.loads(js)["results"]
    assert [int(r[0]) for r in rows] == [r["degree"] for r in results]
    assert [parse_group_string(r[1]) for r in rows] == [r["invariant_factors"] for r in results]


@pytest.mark.parametrize("inv", [[], [0], [2], [2, 4, 0, 0], [3, 0, 0, 0, 0]])
def test_format_group_round_trip(inv):
    assert parse_group_string(format_group(inv)) == inv


def test_parse_degrees():
    assert parse_degrees("-8..8") == list(range(-8, 9))
    assert parse_degrees("2") == [2]
    assert parse_degrees("-2..-2") == [-2]


def test_pretty_series():
    from cobord.fgl import make_law, n_series

    assert pretty_series(n_series(make_law("multiplicative", 4, 4), 3, 4)) == "3x + 3βx² + β²x³"
    # beta^2 has degree 4 and is cut by a degree-2 base
    assert pretty_series(n_series(make_law("multiplicative", 2, 4), 3, 4)) == "3x + 3βx²"
    assert pretty_series(n_series(make_law("universal-integral", 4, 3), 2, 3)) == "2x - x₁x² - 2x₂x³"
