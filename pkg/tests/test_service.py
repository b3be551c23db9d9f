import io

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from radiopage import corpus
from radiopage.service import build_app
from radiopage.uplink import BroadcastSim


@pytest.fixture()
def client(mini_pages):
    sim = BroadcastSim(mini_pages, rates_bps=[10000.0],
                       denylist=corpus.DENYLIST)
    app = build_app(sim)
    return TestClient(app), sim


def test_catalog_lists_corpus(client):
    http, _ = client
    resp = http.get("/catalog")
    assert resp.status_code == 200
    urls = {p["url"] for p in resp.json()["pages"]}
    assert "mini.example/a" in urls and "mini.example/b" in urls


def test_request_ack_and_delivery_flow(client, mini_pages):
    http, sim = client
    page = mini_pages[0]
    resp = http.post("/request", json={"url": page.url, "lat": 24.8, "lon": 67.0,
                                       "client_id": "c1"})
    assert resp.status_code == 200
    ack = resp.json()
    assert ack["status"] == "accepted" and ack["eta_seconds"] > 0

    # nothing cached until the broadcast finishes
    assert http.get("/client/c1/page", params={"url": page.url}).status_code == 404

    ticks = 0
    while ticks < 1000:
        out = http.post("/sim/advance", json={"seconds": 1.0}).json()
        ticks += 1
        if out["deliveries"]:
            break
    assert abs(ticks - ack["eta_seconds"]) <= 1.0

    cache = http.get("/client/c1/cache").json()
    assert [p["url"] for p in cache["pages"]] == [page.url]

    img = http.get("/client/c1/page", params={"url": page.url})
    assert img.status_code == 200
    assert img.headers["content-type"] == "image/png"
    arr = np.asarray(Image.open(io.BytesIO(img.content)))
    assert arr.shape == (page.height_px, page.width_px, 3)

    cmap = http.get("/client/c1/page", params={"url": page.url,
                                               "part": "clickmap"}).json()
    assert "regions" in cmap

    meta = http.get("/client/c1/page", params={"url": page.url,
                                               "part": "meta"}).json()
    assert meta["width_px"] == page.width_px


def test_denylisted_request_403(client):
    http, _ = client
    resp = http.post("/request", json={"url": "bank.example/login",
                                       "client_id": "c1"})
    assert resp.status_code == 403
    assert resp.json()["reason"] == "auth_required"


def test_unknown_url_404(client):
    http, _ = client
    resp = http.post("/request", json={"url": "nowhere.example",
                                       "client_id": "c1"})
    assert resp.status_code == 404


def test_downlink_only_client_gets_403(client):
    http, sim = client
    http.post("/client/radio", json={"downlink_only": True})
    resp = http.post("/request", json={"url": "mini.example/a",
                                       "client_id": "radio"})
    assert resp.status_code == 403
    assert sim.client("radio").requests_sent == 0


def test_timeline_csv(client):
    http, _ = client
    http.post("/request", json={"url": "mini.example/a", "client_id": "c1"})
    resp = http.get("/schedule/timeline")
    assert resp.status_code == 200
    lines = resp.text.strip().splitlines()
    assert lines[0] == "t_seconds,backlog_bytes"
    assert len(lines) >= 2


def test_expiry_visible_in_cache_listing(client, mini_pages):
    http, sim = client
    sim.ttl = 30.0
    http.post("/request", json={"url": mini_pages[0].url, "client_id": "c1"})
    http.post("/sim/advance", json={"seconds": 10.0})
    assert http.get("/client/c1/cache").json()["pages"][0]["fresh"] is True
    http.post("/sim/advance", json={"seconds": 60.0})
    assert http.get("/client/c1/cache").json()["pages"][0]["fresh"] is False
    assert http.get("/client/c1/page",
                    params={"url": mini_pages[0].url}).status_code == 404


def test_sim_clock_endpoint(client):
    http, _ = client
    resp = http.get("/sim/clock")
    assert resp.json()["clock"] == 0.0
    http.post("/sim/advance", json={"seconds": 5.0})
    assert http.get("/sim/clock").json()["clock"] == 5.0
    assert http.post("/sim/advance", json={"seconds": -1}).status_code == 400
