"""SMS-style request uplink and the broadcast dispatch simulation.

Requests arrive as 160-character-max text lines ("REQ <url> LOC <lat>,<lon>"),
are acknowledged immediately with a queue-derived ETA, and the page is
rendered (from the bundled corpus), queued on the carousel, and -- once its
bytes finish airing -- delivered to every listening client at once.  Client
caches expire at a server-assigned TTL; downlink-only clients can browse
deliveries but can never emit a request.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from . import framing, recovery, scheduler
from .channel import ChannelSpec, apply_frames
from .raster import RasterPage
from .scheduler import CatalogEntry, ScheduleState

SMS_MAX_CHARS = 160
DEFAULT_TTL = 24 * 3600.0
SERVER_CACHE_FRESH = 3600.0  # re-render corpus pages older than this


class UplinkError(Exception):
    pass


class NoUplinkError(UplinkError):
    """Raised when a downlink-only client would need to send a request."""


class AckStatus(str, Enum):
    accepted = "accepted"
    cached_broadcast_soon = "cached_broadcast_soon"
    rejected = "rejected"


@dataclass
class PageRequest:
    url: str
    lat: float
    lon: float
    client_id: str
    ts: float = 0.0

    def validate(self) -> str | None:
        if not self.url:
            return "empty url"
        if not -90.0 <= self.lat <= 90.0 or not -180.0 <= self.lon <= 180.0:
            return "location out of range"
        if len(format_request(self)) > SMS_MAX_CHARS:
            return "oversize"
        return None


@dataclass
class RequestAck:
    url: str
    eta_seconds: float
    status: AckStatus
    reason: str = ""


@dataclass
class CacheEntry:
    page: RasterPage
    received_ts: float
    expires_ts: float

    def fresh(self, now: float) -> bool:
        return now < self.expires_ts


@dataclass
class ClientCache:
    entries: dict[str, CacheEntry] = field(default_factory=dict)

    def lookup(self, url: str, now: float) -> RasterPage | None:
        entry = self.entries.get(url)
        if entry is not None and entry.fresh(now):
            return entry.page
        return None

    def deliver(self, page: RasterPage, now: float, ttl: float = DEFAULT_TTL) -> None:
        self.entries[page.url] = CacheEntry(page, now, now + ttl)

    def listing(self, now: float) -> list[dict]:
        return [{"url": url, "received_ts": e.received_ts, "expires_ts": e.expires_ts,
                 "fresh": e.fresh(now)}
                for url, e in sorted(self.entries.items())]


@dataclass
class Client:
    client_id: str
    downlink_only: bool = False
    lat: float = 0.0
    lon: float = 0.0
    cache: ClientCache = field(default_factory=ClientCache)
    requests_sent: int = 0

    def click(self, target_url: str, now: float):
        """Resolve a click-map hit locally or produce an uplink request."""
        page = self.cache.lookup(target_url, now)
        if page is not None:
            return page
        if self.downlink_only:
            raise NoUplinkError(f"client {self.client_id} has no SMS uplink")
        self.requests_sent += 1
        return PageRequest(url=target_url, lat=self.lat, lon=self.lon,
                           client_id=self.client_id, ts=now)


# --- SMS line grammar -------------------------------------------------------

def format_request(req: PageRequest) -> str:
    return f"REQ {req.url} LOC {req.lat:.4f},{req.lon:.4f}"


def parse_request(line: str, client_id: str, ts: float = 0.0) -> PageRequest:
    if len(line) > SMS_MAX_CHARS:
        raise UplinkError("oversize")
    parts = line.split()
    if len(parts) != 4 or parts[0] != "REQ" or parts[2] != "LOC":
        raise UplinkError("malformed request line")
    try:
        lat_s, lon_s = parts[3].split(",")
        lat, lon = float(lat_s), float(lon_s)
    except ValueError as exc:
        raise UplinkError("malformed location") from exc
    return PageRequest(url=parts[1], lat=lat, lon=lon, client_id=client_id, ts=ts)


def format_ack(ack: RequestAck) -> str:
    status = ack.status.value if ack.status != AckStatus.rejected \
        else f"rejected({ack.reason})"
    return f"ACK {ack.url} ETA {ack.eta_seconds:.0f} STATUS {status}"


# --- broadcast dispatch -----------------------------------------------------

@dataclass
class Delivery:
    url: str
    t: float
    frame_loss_rate: float


class BroadcastSim:
    """Server + carousel + clients under one simulated clock.

    The airing itself runs at frame level: pages are partitioned into real
    frames, passed through the configured channel spec, reassembled, and
    column-repaired before entering client caches.  The audio layer is
    exercised separately; composing it here would only slow the control-loop
    tests without changing what they check.
    """

    def __init__(self, catalog_pages: list[RasterPage],
                 rates_bps: list[float] | None = None,
                 channel_spec: ChannelSpec | None = None,
                 denylist: tuple[str, ...] = (),
                 ttl: float = DEFAULT_TTL):
        self.clock = 0.0
        self.schedule = ScheduleState(rates_bps=list(rates_bps or [10000.0]))
        self.channel_spec = channel_spec or ChannelSpec(mode="cable")
        self.denylist = denylist
        self.ttl = ttl
        self.catalog: dict[str, CatalogEntry] = {}
        for page in catalog_pages:
            self.catalog[page.url] = CatalogEntry(
                url=page.url, size_bytes=page.compressed_size_bytes,
                last_update_ts=0.0, page_ref=page)
        self.clients: dict[str, Client] = {}
        self.server_cache: dict[str, tuple[RasterPage, float]] = {}
        self.deliveries: list[Delivery] = []
        self.acks: list[RequestAck] = []

    # -- clients ------------------------------------------------------------

    def client(self, client_id: str, downlink_only: bool = False) -> Client:
        if client_id not in self.clients:
            self.clients[client_id] = Client(client_id, downlink_only=downlink_only)
        return self.clients[client_id]

    # -- request path ---------------------------------------------------------

    def submit_sms(self, line: str, client_id: str) -> str:
        client = self.client(client_id)
        if client.downlink_only:
            raise NoUplinkError(f"client {client_id} has no SMS uplink")
        try:
            req = parse_request(line, client_id, ts=self.clock)
        except UplinkError as exc:
            ack = RequestAck(url="?", eta_seconds=-1.0,
                             status=AckStatus.rejected, reason=str(exc))
            self.acks.append(ack)
            return format_ack(ack)
        return format_ack(self.handle_request(req))

    def handle_request(self, req: PageRequest) -> RequestAck:
        """Immediate ack; rendering and queueing happen before it returns."""
        client = self.client(req.client_id)
        if client.downlink_only:
            raise NoUplinkError(f"client {req.client_id} has no SMS uplink")
        client.requests_sent += 1

        problem = req.validate()
        if problem:
            return self._ack(RequestAck(req.url, -1.0, AckStatus.rejected, problem))
        if any(req.url.startswith(d) for d in self.denylist):
            return self._ack(RequestAck(req.url, -1.0, AckStatus.rejected,
                                        "auth_required"))
        queued = any(qp.url == req.url for qp in self.schedule.queue)
        if queued:
            # someone else already asked; it is on its way
            return self._ack(RequestAck(req.url, scheduler.eta(self.schedule, req.url),
                                        AckStatus.cached_broadcast_soon))
        page = self._render(req.url)
        if page is None:
            return self._ack(RequestAck(req.url, -1.0, AckStatus.rejected,
                                        "not_available"))
        scheduler.enqueue_update(self.schedule, CatalogEntry(
            url=req.url, size_bytes=page.compressed_size_bytes,
            last_update_ts=self.clock, page_ref=page))
        return self._ack(RequestAck(req.url, scheduler.eta(self.schedule, req.url),
                                    AckStatus.accepted))

    def _ack(self, ack: RequestAck) -> RequestAck:
        self.acks.append(ack)
        return ack

    def _render(self, url: str) -> RasterPage | None:
        cached = self.server_cache.get(url)
        if cached is not None and self.clock - cached[1] < SERVER_CACHE_FRESH:
            return cached[0]
        entry = self.catalog.get(url)
        if entry is None or entry.page_ref is None:
            return None
        self.server_cache[url] = (entry.page_ref, self.clock)
        return entry.page_ref

    # -- push (carousel preload) ---------------------------------------------

    def push(self, url: str) -> None:
        page = self._render(url)
        if page is None:
            raise UplinkError(f"{url!r} not in corpus")
        scheduler.enqueue_update(self.schedule, CatalogEntry(
            url=url, size_bytes=page.compressed_size_bytes,
            last_update_ts=self.clock, page_ref=page))

    # -- time -----------------------------------------------------------------

    def advance(self, dt: float) -> list[Delivery]:
        """Advance the shared clock; air and deliver any pages that finish."""
        completions = scheduler.advance(self.schedule, dt)
        self.clock = self.schedule.clock
        out = []
        for done in completions:
            page = self.server_cache.get(done.url, (None, 0.0))[0]
            if page is None:
                continue
            aired = self._air(page)
            if aired is None:
                continue  # channel ate the whole page; best-effort medium
            delivered, loss = aired
            d = Delivery(done.url, done.t, loss)
            self.deliveries.append(d)
            out.append(d)
            for client in self.clients.values():
                client.cache.deliver(delivered, done.t, self.ttl)
        return out

    def _air(self, page: RasterPage) -> tuple[RasterPage, float] | None:
        frames = framing.partition(page)
        kept = apply_frames(self.channel_spec, frames)
        state = framing.ReassemblyState()
        for fr in kept:
            state.ingest_frame(fr)
        if state.accepted == 0:
            return None
        result = framing.finalize(state, quality=page.quality_q, url=page.url)
        gapped = recovery.GappedPage(result.page, result.missing_columns)
        repaired = recovery.interpolate(gapped)
        repaired.click_map = page.click_map
        repaired.version_ts = page.version_ts
        return repaired, result.frame_loss_rate
