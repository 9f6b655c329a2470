import json
import math
import pathlib

import pytest

import pmflow

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "fixtures"


def test_decompose_worked():
    res = pmflow.decompose([str(FIXTURES / "worked_fills.jsonl")], str(FIXTURES / "worked_markets.json"))
    assert res["units"] == 4
    assert not res["quarantined"]
    by_kind = {r["kind"]: r for r in res["rows"]}
    assert by_kind["PureExchange"]["no_trade"] == 123_900_000
    assert by_kind["ShareMinting"]["yes_mint"] == 2_040_000_000
    assert by_kind["ShareMinting"]["no_mint"] == 3_960_000_000
    assert by_kind["ShareBurning"]["yes_burn"] == 82_476_000
    assert by_kind["ShareBurning"]["no_burn"] == 123_714_000
    mixed = by_kind["MixedMint"]
    assert (mixed["yes_trade"], mixed["yes_mint"], mixed["no_mint"]) == (84_000_000, 15_999_999, 22_095_238)


def test_measures_identity():
    m = pmflow.measures(5, 3, 1)
    assert m == {"exchange_equivalent_volume": 6, "net_inflow": 2, "gross_activity": 8}


def test_log_odds_and_impact():
    assert pmflow.log_odds(0.7) == pytest.approx(math.log(7 / 3), abs=1e-12)
    assert pmflow.inverse_log_odds(pmflow.log_odds(0.3)) == pytest.approx(0.3, abs=1e-12)
    assert pmflow.price_impact(0.518, 0.5, 1.0) == pytest.approx(0.1295, abs=1e-15)
    assert pmflow.price_impact(0.01, 0.5, 1.0) == pytest.approx(0.0025, abs=1e-15)


def test_rolling_lambda_noiseless():
    flow = [math.sin(i) for i in range(744)]
    est = pmflow.rolling_kyle_lambda([0.2 * q for q in flow], flow, first_hour=1709251200)
    assert len(est) == 2
    assert est[0]["lambda"] == pytest.approx(0.2, rel=1e-10)
    zero = pmflow.rolling_kyle_lambda([0.0] * 720, [0.0] * 720, first_hour=1709251200)
    assert zero[0]["lambda"] is None


def test_ols_exact_line():
    x = [float(i) for i in range(10)]
    r = pmflow.ols(x, [1 - 0.05 * v for v in x])
    assert r["slope"] == pytest.approx(-0.05)
    assert r["r2"] == pytest.approx(1.0)


def test_correlation():
    a = [math.sin(i / 3.0) for i in range(120)]
    assert all(v == pytest.approx(-1.0, abs=1e-9) for v in pmflow.rolling_correlation(a, [-x for x in a]))
    assert all(v is None for v in pmflow.rolling_correlation(a, [1.0] * 120))


def test_conversion_preserves_payoff():
    holdings = {(0, "NO"): 1_000_000, (1, "NO"): 1_000_000}
    converted, cash = pmflow.convert_positions(3, holdings, 0, [0, 1], 1_000_000)
    assert converted == {(2, "YES"): 1_000_000}
    assert cash == 1_000_000
    for w in range(3):
        assert pmflow.payoff(3, holdings, 0, w) == pmflow.payoff(3, converted, cash, w)


def test_simulate_is_deterministic(tmp_path):
    a = pmflow.simulate(str(FIXTURES / "scenario.json"), seed=7, transactions=300)
    b = pmflow.simulate(str(FIXTURES / "scenario.json"), seed=7, transactions=300)
    assert a["fills_jsonl"] == b["fills_jsonl"]
    assert len(a["truth"]) >= 300
    path = tmp_path / "fills.jsonl"
    path.write_text(a["fills_jsonl"])
    res = pmflow.decompose([str(path)], str(FIXTURES / "scenario.json"))
    truth = {(t["block"], t["tx_index"]): t for t in a["truth"]}
    for row in res["rows"]:
        t = truth[(row["block"], row["tx_index"])]
        assert row["kind"] == t["kind"]
        assert row["yes_mint"] == t["yes_mint"] and row["no_burn"] == t["no_burn"]


def test_cli_round_trip(tmp_path):
    code, out, err = pmflow.run_cli([
        "decompose", "--input", str(FIXTURES / "worked_fills.jsonl"),
        "--markets", str(FIXTURES / "worked_markets.json"), "--out", str(tmp_path / "out"),
    ])
    assert code == 0, err
    assert "decomposed 4" in out
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["subcommand"] == "decompose"
    code, _, _ = pmflow.run_cli(["decompose", "--markets", str(tmp_path / "missing.json"), "--out", str(tmp_path / "x")])
    assert code == 2
    assert not (tmp_path / "x").exists()


def test_config_error_maps_to_value_error(tmp_path):
    with pytest.raises(ValueError):
        pmflow.decompose([str(FIXTURES / "worked_fills.jsonl")], str(tmp_path / "absent.json"))
