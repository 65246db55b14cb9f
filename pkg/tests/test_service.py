"""HTTP layer: request models, endpoints and error mapping."""

import pytest
from fastapi.testclient import TestClient

from ringsim.config import default_config
from ringsim.service import ConfigModel, create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def _tiny_run(**extra):
    run = {"duration_s": 5.0, "seed": 3, "powers_mw": [0.01]}
    run.update(extra)
    return run


def test_health(client):
    resp = client.get("/health")
    assert resp.status_code == 200
    assert resp.json() == {"status": "ok"}


def test_pgr_endpoint(client):
    resp = client.post("/pgr", json={"config": {"run": _tiny_run(powers_mw=[0.5, 1.0])}})
    assert resp.status_code == 200
    body = resp.json()
    assert body["pgr_per_mw2"] == pytest.approx(20e9, rel=1e-9)
    assert body["fwhm_pm"] == pytest.approx(1.25612, rel=1e-5)
    assert body["fsr_nm"] == pytest.approx(7.50235, rel=1e-5)
    assert body["brightness_pairs_per_s_per_ghz"] == pytest.approx(1.28850e11, rel=1e-5)
    assert [r["power_mw"] for r in body["rows"]] == [0.5, 1.0]
    assert body["rows"][1]["pgr_pairs_per_s"] == pytest.approx(20e9, rel=1e-9)


def test_pgr_zero_power_row(client):
    resp = client.post("/pgr", json={"config": {"run": _tiny_run(powers_mw=[0.0])}})
    assert resp.json()["rows"][0]["pgr_pairs_per_s"] == 0.0


def test_simulate_endpoint_files_and_rows(client):
    resp = client.post("/simulate", json={"config": {"run": _tiny_run()}})
    assert resp.status_code == 200
    body = resp.json()
    assert len(body["rows"]) == 1
    row = body["rows"][0]
    assert row["singles_signal_hz"] > row["singles_idler_hz"]
    assert len(body["files"]) == 1
    name, text = next(iter(body["files"].items()))
    assert name.startswith("timetags_00_") and text.startswith("# timetag v1")


def test_simulate_endpoint_skip_timetags(client):
    resp = client.post("/simulate", json={"config": {"run": _tiny_run()}, "include_timetags": False})
    assert resp.json()["files"] == {}


def test_config_error_maps_to_400(client):
    resp = client.post(
        "/pgr", json={"config": {"resonator": {"radius_um": -1.0}, "run": _tiny_run()}}
    )
    assert resp.status_code == 400
    assert "radius" in resp.json()["detail"]


def test_validation_error_maps_to_422(client):
    resp = client.post("/pgr", json={"config": {"run": {"duration_s": "not-a-number"}}})
    assert resp.status_code == 422


def test_compare_endpoint(client):
    resp = client.get("/compare")
    assert resp.status_code == 200
    body = resp.json()
    assert body["platforms_csv"].splitlines()[1].startswith("AlGaAsOI,SFWM")
    assert body["brightness_ratios"]["SOI"] == pytest.approx(2816.9014, rel=1e-6)
    assert "isolines_csv" in body
    resp = client.get("/compare", params={"isolines": False})
    assert "isolines_csv" not in resp.json()


def test_replay_round_trip(client):
    sim = client.post("/simulate", json={"config": {"run": _tiny_run(duration_s=20.0)}})
    text = next(iter(sim.json()["files"].values()))
    resp = client.post("/replay", json={"config": {"run": _tiny_run(duration_s=20.0)}, "file_text": text})
    assert resp.status_code == 200
    body = resp.json()
    assert body["channels"] == [0, 1]
    assert body["summary"]["coincidences"] > 0
    # replayed inference agrees with the rate the simulate run analyzed
    sim_row = sim.json()["rows"][0]
    assert body["summary"]["pgr_onchip"] == pytest.approx(sim_row["pgr_onchip"], rel=1e-9)


def test_replay_bad_file_maps_to_400(client):
    resp = client.post("/replay", json={"config": {"run": _tiny_run()}, "file_text": "garbage"})
    assert resp.status_code == 400


def test_config_model_round_trip():
    cfg = default_config(seed=11, duration=42.0)
    model = ConfigModel.from_config(cfg)
    back = model.to_config()
    assert back.resonator == cfg.resonator
    assert back.signal_chain == cfg.signal_chain
    assert back.idler_chain == cfg.idler_chain
    assert back.third_chain == cfg.third_chain
    assert back.run == cfg.run
    assert back.franson == cfg.franson
