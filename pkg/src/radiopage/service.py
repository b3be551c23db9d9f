"""HTTP facade over the broadcast simulation for viewers and tests.

JSON field names here are the documented wire contract for the browser
viewer.  Simulated time only moves through POST /sim/advance (or the
real-time pump in `cli serve`), which keeps end-to-end tests deterministic.
"""

from __future__ import annotations

import io

from fastapi import FastAPI, HTTPException, Response
from fastapi.responses import JSONResponse
from pydantic import BaseModel
from PIL import Image

from .raster import rgb565_to_rgb888
from .uplink import AckStatus, BroadcastSim, NoUplinkError, PageRequest


class RequestBody(BaseModel):
    url: str
    lat: float = 0.0
    lon: float = 0.0
    client_id: str = "anon"


class ClientConfig(BaseModel):
    downlink_only: bool = False


class AdvanceBody(BaseModel):
    seconds: float


def build_app(sim: BroadcastSim) -> FastAPI:
    app = FastAPI(title="radiopage broadcast service")
    app.state.sim = sim

    @app.post("/request")
    def post_request(body: RequestBody):
        try:
            ack = sim.handle_request(PageRequest(
                url=body.url, lat=body.lat, lon=body.lon,
                client_id=body.client_id, ts=sim.clock))
        except NoUplinkError as exc:
            raise HTTPException(status_code=403, detail=str(exc))
        code = 200
        if ack.status == AckStatus.rejected:
            code = {"auth_required": 403, "not_available": 404}.get(ack.reason, 400)
        return JSONResponse(status_code=code, content={
            "url": ack.url, "eta_seconds": ack.eta_seconds,
            "status": ack.status.value, "reason": ack.reason})

    @app.get("/catalog")
    def get_catalog():
        return {"pages": [{"url": e.url, "size_bytes": e.size_bytes,
                           "last_update_ts": e.last_update_ts}
                          for e in sim.catalog.values()]}

    @app.get("/client/{client_id}/cache")
    def get_cache(client_id: str):
        client = sim.client(client_id)
        return {"client_id": client_id,
                "downlink_only": client.downlink_only,
                "pages": client.cache.listing(sim.clock)}

    @app.get("/client/{client_id}/page")
    def get_page(client_id: str, url: str, part: str = "image"):
        client = sim.client(client_id)
        page = client.cache.lookup(url, sim.clock)
        if page is None:
            raise HTTPException(status_code=404, detail="page not cached or expired")
        if part == "clickmap":
            return page.click_map.to_dict()
        if part == "meta":
            return {"url": page.url, "width_px": page.width_px,
                    "height_px": page.height_px, "version_ts": page.version_ts}
        buf = io.BytesIO()
        Image.fromarray(rgb565_to_rgb888(page.pixels), "RGB").save(buf, format="PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    @app.post("/client/{client_id}")
    def post_client(client_id: str, cfg: ClientConfig):
        client = sim.client(client_id, downlink_only=cfg.downlink_only)
        client.downlink_only = cfg.downlink_only
        return {"client_id": client_id, "downlink_only": client.downlink_only}

    @app.get("/schedule/timeline")
    def get_timeline():
        rows = ["t_seconds,backlog_bytes"]
        rows += [f"{t:.3f},{b:.0f}" for t, b in sim.schedule.timeline]
        return Response(content="\n".join(rows) + "\n", media_type="text/csv")

    @app.post("/sim/advance")
    def post_advance(body: AdvanceBody):
        if body.seconds <= 0:
            raise HTTPException(status_code=400, detail="seconds must be positive")
        deliveries = sim.advance(body.seconds)
        return {"clock": sim.clock,
                "deliveries": [{"url": d.url, "t": d.t,
                                "frame_loss_rate": d.frame_loss_rate}
                               for d in deliveries]}

    @app.get("/sim/clock")
    def get_clock():
        return {"clock": sim.clock,
                "backlog_bytes": sim.schedule.backlog_bytes}

    return app
