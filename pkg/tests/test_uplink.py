import numpy as np
import pytest

from radiopage import scheduler, uplink
from radiopage.channel import ChannelSpec
from radiopage.uplink import (AckStatus, BroadcastSim, Client, NoUplinkError,
                              PageRequest, UplinkError, format_ack,
                              format_request, parse_request)


@pytest.fixture()
def sim(mini_pages):
    return BroadcastSim(mini_pages, rates_bps=[10000.0],
                        denylist=("bank.example",))


def test_sms_grammar_roundtrip():
    req = PageRequest("news.example/front", 24.8607, 67.0011, "c1")
    line = format_request(req)
    assert line == "REQ news.example/front LOC 24.8607,67.0011"
    back = parse_request(line, "c1")
    assert back.url == req.url
    assert back.lat == pytest.approx(req.lat)


def test_sms_malformed_lines_rejected():
    with pytest.raises(UplinkError):
        parse_request("GET news.example", "c1")
    with pytest.raises(UplinkError):
        parse_request("REQ news.example LOC charlie", "c1")
    with pytest.raises(UplinkError):
        parse_request("REQ " + "x" * 200 + " LOC 0,0", "c1")


def test_request_accepted_eta_is_airtime(sim, mini_pages):
    page = mini_pages[0]
    ack = sim.handle_request(PageRequest(page.url, 0, 0, "c1"))
    assert ack.status == AckStatus.accepted
    assert ack.eta_seconds == pytest.approx(page.compressed_size_bytes * 8 / 10000)


def test_second_request_hits_broadcast_queue(sim, mini_pages):
    url = mini_pages[0].url
    first = sim.handle_request(PageRequest(url, 0, 0, "c1"))
    sim.advance(first.eta_seconds / 4)
    second = sim.handle_request(PageRequest(url, 0, 0, "c2"))
    assert second.status == AckStatus.cached_broadcast_soon
    assert second.eta_seconds < first.eta_seconds


def test_denylisted_rejected(sim):
    ack = sim.handle_request(PageRequest("bank.example/login", 0, 0, "c1"))
    assert ack.status == AckStatus.rejected and ack.reason == "auth_required"


def test_unknown_url_rejected(sim):
    ack = sim.handle_request(PageRequest("missing.example", 0, 0, "c1"))
    assert ack.status == AckStatus.rejected and ack.reason == "not_available"


def test_malformed_request_rejected(sim):
    ack = sim.handle_request(PageRequest("news.example", 95.0, 0, "c1"))
    assert ack.status == AckStatus.rejected and ack.reason == "location out of range"
    ack = sim.handle_request(PageRequest("", 0, 0, "c1"))
    assert ack.status == AckStatus.rejected


def test_ack_line_format(sim, mini_pages):
    line = sim.submit_sms(format_request(
        PageRequest(mini_pages[0].url, 1.5, 2.5, "c1")), "c1")
    assert line.startswith(f"ACK {mini_pages[0].url} ETA ")
    assert "STATUS accepted" in line
    assert len(line) <= uplink.SMS_MAX_CHARS


def test_delivery_matches_eta_exactly(sim, mini_pages):
    url = mini_pages[1].url
    t0 = sim.clock
    ack = sim.handle_request(PageRequest(url, 0, 0, "c1"))
    deliveries = sim.advance(3600.0)
    assert [d.url for d in deliveries] == [url]
    assert deliveries[0].t == pytest.approx(t0 + ack.eta_seconds, abs=1e-9)


def test_broadcast_reaches_all_listening_clients(sim, mini_pages):
    sim.client("uplink-user")
    sim.client("radio-only", downlink_only=True)
    sim.handle_request(PageRequest(mini_pages[0].url, 0, 0, "uplink-user"))
    sim.advance(3600.0)
    for cid in ("uplink-user", "radio-only"):
        assert sim.client(cid).cache.lookup(mini_pages[0].url, sim.clock) is not None


def test_client_click_cache_flow(mini_pages):
    client = Client("c9")
    page = mini_pages[0]
    with_cache = client.cache
    with_cache.deliver(page, now=0.0, ttl=100.0)
    assert client.click(page.url, now=50.0) is page          # fresh: local hit
    out = client.click(page.url, now=150.0)                  # expired
    assert isinstance(out, PageRequest) and out.url == page.url


def test_downlink_only_client_cannot_request(mini_pages):
    client = Client("radio", downlink_only=True)
    with pytest.raises(NoUplinkError):
        client.click("news.example/front", now=0.0)
    assert client.requests_sent == 0


def test_downlink_only_sms_refused(sim):
    sim.client("radio", downlink_only=True)
    with pytest.raises(NoUplinkError):
        sim.submit_sms("REQ news.example LOC 0,0", "radio")


def test_deliver_newer_version_wins(mini_pages):
    cache = uplink.ClientCache()
    old = mini_pages[0]
    new = mini_pages[1]
    new.url = old.url  # same url, newer content
    cache.deliver(old, now=0.0)
    cache.deliver(new, now=10.0)
    assert cache.lookup(old.url, 20.0) is new
    new.url = "mini.example/b"


def test_cache_never_serves_expired(mini_pages):
    cache = uplink.ClientCache()
    cache.deliver(mini_pages[0], now=0.0, ttl=60.0)
    assert cache.lookup(mini_pages[0].url, 59.9) is not None
    assert cache.lookup(mini_pages[0].url, 60.0) is None
    listing = cache.listing(61.0)
    assert listing[0]["fresh"] is False


def test_lossy_channel_delivers_repaired_page(mini_pages):
    sim = BroadcastSim(mini_pages, rates_bps=[10000.0],
                       channel_spec=ChannelSpec(mode="rssi", rssi_db=-88, seed=1))
    sim.client("c1")
    sim.handle_request(PageRequest(mini_pages[0].url, 0, 0, "c1"))
    deliveries = sim.advance(3600.0)
    assert deliveries and 0.02 <= deliveries[0].frame_loss_rate <= 0.16
    got = sim.client("c1").cache.lookup(mini_pages[0].url, sim.clock)
    assert got is not None
    assert got.pixels.shape == mini_pages[0].pixels.shape


def test_push_preloads_catalog_page(sim, mini_pages):
    sim.client("c1")
    sim.push(mini_pages[0].url)
    assert sim.schedule.backlog_bytes == mini_pages[0].compressed_size_bytes
    sim.advance(3600.0)
    assert sim.client("c1").cache.lookup(mini_pages[0].url, sim.clock) is not None
