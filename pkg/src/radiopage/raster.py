"""Page rasterization: normalize screenshots to the on-air format.

Pages travel as RGB565 pixel grids at a canonical width of 1080 px,
optionally cropped in height.  A click map (rectangular hotspots in
canonical coordinates) makes the static image interactive.  WebP at a
configurable quality is used for size accounting and for whole-file
transport mode.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

CANONICAL_WIDTH = 1080
DEFAULT_CROP_PX = 10_000
DEFAULT_QUALITY = 10
QUALITY_MAX = 95


class RasterError(ValueError):
    pass


def round_half_up(v: float) -> int:
    return math.floor(v + 0.5)


@dataclass
class ClickRegion:
    x: int
    y: int
    w: int
    h: int
    target_url: str

    def contains(self, px: int, py: int) -> bool:
        return self.x <= px < self.x + self.w and self.y <= py < self.y + self.h


@dataclass
class ClickMap:
    regions: list[ClickRegion] = field(default_factory=list)

    def validate(self, width: int, height: int) -> None:
        for r in self.regions:
            if not r.target_url:
                raise RasterError("click region with empty target url")
            if r.x < 0 or r.y < 0 or r.w <= 0 or r.h <= 0 \
                    or r.x + r.w > width or r.y + r.h > height:
                raise RasterError(f"click region {r} outside page {width}x{height}")

    def to_dict(self) -> dict:
        return {"regions": [{"x": r.x, "y": r.y, "w": r.w, "h": r.h, "url": r.target_url}
                            for r in self.regions]}

    @classmethod
    def from_dict(cls, d: dict) -> "ClickMap":
        return cls(regions=[ClickRegion(int(e["x"]), int(e["y"]), int(e["w"]), int(e["h"]),
                                        str(e["url"]))
                            for e in d.get("regions", [])])


@dataclass
class RasterPage:
    """A normalized page: RGB565 pixels at canonical width plus metadata."""

    page_id: int
    url: str
    pixels: np.ndarray  # uint16 (height, width), RGB565
    quality_q: int
    crop_limit_ph: int | None
    compressed_size_bytes: int
    version_ts: float = 0.0
    click_map: ClickMap = field(default_factory=ClickMap)

    @property
    def width_px(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height_px(self) -> int:
        return int(self.pixels.shape[0])


def rgb888_to_rgb565(rgb: np.ndarray) -> np.ndarray:
    rgb = np.asarray(rgb, dtype=np.uint16)
    return ((rgb[..., 0] >> 3) << 11) | ((rgb[..., 1] >> 2) << 5) | (rgb[..., 2] >> 3)


def rgb565_to_rgb888(px: np.ndarray) -> np.ndarray:
    """Expand with bit replication; exact round trip back to RGB565."""
    px = np.asarray(px, dtype=np.uint16)
    r = (px >> 11) & 0x1F
    g = (px >> 5) & 0x3F
    b = px & 0x1F
    out = np.empty(px.shape + (3,), dtype=np.uint8)
    out[..., 0] = (r << 3) | (r >> 2)
    out[..., 1] = (g << 2) | (g >> 4)
    out[..., 2] = (b << 3) | (b >> 2)
    return out


def encode_webp(rgb888: np.ndarray, quality: int) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(rgb888, mode="RGB").save(buf, format="WEBP", quality=quality)
    return buf.getvalue()


def decode_webp(data: bytes) -> np.ndarray:
    img = Image.open(io.BytesIO(data)).convert("RGB")
    return np.asarray(img)


def page_webp_bytes(page: RasterPage) -> bytes:
    """Compressed bitstream for whole-file transport; deterministic per page."""
    return encode_webp(rgb565_to_rgb888(page.pixels), page.quality_q)


def normalize(image: np.ndarray, crop_limit: int | None = DEFAULT_CROP_PX,
              quality: int = DEFAULT_QUALITY, *, page_id: int = 0, url: str = "",
              version_ts: float = 0.0, click_map: ClickMap | None = None) -> RasterPage:
    """Resample a raw RGB888 grid to canonical width, crop, and size it.

    The resample is aspect-preserving box (area) averaging.  The click map,
    if given, must already be in canonical 1080-wide coordinates.
    """
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise RasterError(f"expected (h, w, 3) RGB888 grid, got {image.shape}")
    h, w = image.shape[:2]
    if h == 0 or w == 0:
        raise RasterError("empty image")
    if not 0 <= quality <= QUALITY_MAX:
        raise RasterError(f"quality {quality} outside [0, {QUALITY_MAX}]")

    if w != CANONICAL_WIDTH:
        new_h = max(1, round_half_up(h * CANONICAL_WIDTH / w))
        img = Image.fromarray(image.astype(np.uint8), mode="RGB")
        image = np.asarray(img.resize((CANONICAL_WIDTH, new_h), Image.BOX))
    if crop_limit is not None and image.shape[0] > crop_limit:
        image = image[:crop_limit]

    pixels = rgb888_to_rgb565(image)
    size = len(encode_webp(rgb565_to_rgb888(pixels), quality))
    cmap = click_map or ClickMap()
    height = pixels.shape[0]
    cmap = ClickMap([r for r in cmap.regions
                     if r.x >= 0 and r.y >= 0
                     and r.x + r.w <= CANONICAL_WIDTH and r.y + r.h <= height])
    page = RasterPage(page_id=page_id, url=url, pixels=pixels, quality_q=quality,
                      crop_limit_ph=crop_limit, compressed_size_bytes=size,
                      version_ts=version_ts, click_map=cmap)
    page.click_map.validate(page.width_px, page.height_px)
    return page


def scale_for_display(page: RasterPage, screen_width: int) -> tuple[np.ndarray, ClickMap]:
    """Nearest-neighbor resize of the grid plus click-map coordinate scaling.

    Factor is screen_width / 1080; coordinates round half-up and are clamped
    so regions stay inside the scaled page.
    """
    if screen_width < 1:
        raise RasterError("screen width must be >= 1")
    factor = screen_width / CANONICAL_WIDTH
    new_w = screen_width
    new_h = max(1, round_half_up(page.height_px * factor))
    rows = np.minimum((np.arange(new_h) / factor).astype(np.int64), page.height_px - 1)
    cols = np.minimum((np.arange(new_w) / factor).astype(np.int64), page.width_px - 1)
    grid = page.pixels[np.ix_(rows, cols)]

    regions = []
    for r in page.click_map.regions:
        x = min(round_half_up(r.x * factor), new_w - 1)
        y = min(round_half_up(r.y * factor), new_h - 1)
        w = max(1, min(round_half_up(r.w * factor), new_w - x))
        h = max(1, min(round_half_up(r.h * factor), new_h - y))
        regions.append(ClickRegion(x, y, w, h, r.target_url))
    return grid, ClickMap(regions)


def hit_test(click_map: ClickMap, x: int, y: int) -> str | None:
    """Target of the topmost (last listed) region containing the point."""
    hit = None
    for r in click_map.regions:
        if r.contains(x, y):
            hit = r.target_url
    return hit


# --- file I/O -----------------------------------------------------------

def load_png(path) -> np.ndarray:
    img = Image.open(path).convert("RGB")
    arr = np.asarray(img)
    if arr.size == 0:
        raise RasterError(f"empty image: {path}")
    return arr


def save_png(path, rgb888: np.ndarray) -> None:
    Image.fromarray(np.asarray(rgb888, dtype=np.uint8), mode="RGB").save(path, format="PNG")


def save_page_png(path, page: RasterPage) -> None:
    save_png(path, rgb565_to_rgb888(page.pixels))


def load_clickmap(path) -> ClickMap:
    with open(path, "r", encoding="utf-8") as fh:
        return ClickMap.from_dict(json.load(fh))


def save_clickmap(path, cmap: ClickMap) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(cmap.to_dict(), fh, indent=1)
