import os

import numpy as np
import pytest

import tjgen

CORPUS = os.environ.get("TJGEN_CORPUS", os.path.join(os.path.dirname(__file__), "..", "..", "corpus"))

AND2 = """
module m (a, b, y);
  input a, b;
  output y;
  and U1 (y, a, b);
endmodule
"""


def test_parse_and_emit():
    n = tjgen.parse_netlist(AND2)
    assert n.name == "m"
    assert n.inputs == ["a", "b"]
    assert n.outputs == ["y"]
    assert n.num_cells == 1
    again = tjgen.parse_netlist(n.to_verilog())
    assert again.nets == n.nets


def test_features_and_scoap():
    n = tjgen.parse_netlist(AND2)
    f = tjgen.extract_features(n, vectors=20000, seed=3)
    assert f.shape == (len(n.nets), len(tjgen.feature_names()))
    y = n.net_id("y")
    assert abs(f[y, 0] - 0.25) < 0.02
    s = tjgen.scoap(n)
    assert s[y].tolist() == [2.0, 3.0, 0.0]
    p = tjgen.simulate(n, vectors=1000, seed=3)
    assert np.all((p >= 0) & (p <= 1))


def test_justify_and_errors():
    n = tjgen.parse_netlist(AND2)
    j = tjgen.justify(n, [("y", True)])
    assert j["status"] == "SAT"
    assert j["witness"]["inputs"] == {"a": True, "b": True}
    with pytest.raises(tjgen.TjgenError) as err:
        tjgen.justify(n, [("nope", True)])
    assert err.value.code == "UndeclaredNet"
    with pytest.raises(tjgen.TjgenError):
        tjgen.parse_netlist("module broken (")


def test_pipeline_on_corpus():
    host = tjgen.read_netlist(os.path.join(CORPUS, "syn300.v"))
    t = tjgen.load_template("c2")
    assert t.r == 5 and not t.sequential
    assert set(tjgen.template_ids()) == {"c1", "c2", "s1", "s2"}

    base = tjgen.baseline_insert(host, t, count=12, vectors=20000, verify_vectors=1000)
    assert len(base) == 12
    for tj in base:
        assert tj.verification["passed"]
        assert tj.netlist.inputs == host.inputs
        assert tjgen.report(tj)["template_id"] == "c2"

    trained = tjgen.train(base, vectors=20000, trees=20)
    assert trained["bundles"]
    assert len(trained["labels"]) == 12

    r = tjgen.insert_trojans(host, t, trained["bundles"][0], vectors=20000, verify_vectors=1000)
    assert r["ledger"]["virtual_evaluated"] == 20
    assert r["shortfall"] == ""
    (tj,) = r["trojans"]
    v = tjgen.verify_inserted(host, tj.netlist, tj.condition, vectors=2000, seed=5,
                              trigger_net=tj.final_trigger_net)
    assert v["passed"] and v["mismatches"] == 0
    # Same seed, same Trojan.
    again = tjgen.insert_trojans(host, t, trained["bundles"][0], vectors=20000, verify_vectors=1000)
    assert again["trojans"][0].netlist.to_verilog() == tj.netlist.to_verilog()


def test_generator():
    n = tjgen.generate_netlist(gates=200, dff_fraction=0.05, seed=4)
    assert n.is_sequential
    assert "clk" in n.inputs
    assert n.num_cells > 200
