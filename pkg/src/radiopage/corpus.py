"""Deterministic synthetic screenshot corpus.

Real crawled screenshots cannot ship with the repo, so the corpus is
generated: each "page" is a procedurally drawn webpage-like raster (header
band, nav row, text paragraphs, photo-ish blocks, buttons) with a click map
wiring nav and links to other corpus pages.  Everything derives from a seed,
so tests and the demo service see identical bytes on every run.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import raster
from .raster import ClickMap, ClickRegion, RasterPage

W = raster.CANONICAL_WIDTH

# (url, raw_width, raw_height, theme_seed); heights pre-normalization
PAGE_SPECS = [
    ("news.example/front", 1080, 3600, 11),
    ("news.example/world", 1080, 2800, 12),
    ("news.example/sports", 2160, 5600, 13),   # downscales 2:1
    ("wiki.example/solar-power", 1080, 4200, 14),
    ("wiki.example/irrigation", 1080, 12000, 15),  # exercises the crop limit
    ("market.example/prices", 1080, 2200, 16),
    ("market.example/jobs", 1440, 3000, 17),
    ("weather.example/today", 1080, 1600, 18),
    ("health.example/clinic", 1080, 2600, 19),
    ("transit.example/routes", 1080, 2000, 20),
    ("school.example/exams", 1080, 3200, 21),
    ("gov.example/forms", 1080, 11000, 22),    # also beyond the crop limit
]

DENYLIST = ("bank.example", "social.example/login")

MINI_PAGE_SPECS = [  # small pages for fast end-to-end runs
    ("mini.example/a", 1080, 320, 31),
    ("mini.example/b", 1080, 280, 32),
]


@dataclass
class CorpusPage:
    url: str
    rgb: np.ndarray
    click_map: ClickMap


def _paragraph(rng, img, y0, y1, x0, x1, ink, line_h):
    """Rows of dark segments with ragged right edges: text texture."""
    y = y0
    while y + line_h <= y1:
        length = int((x1 - x0) * rng.uniform(0.55, 1.0))
        seg_x = x0
        while seg_x < x0 + length:
            word = int(rng.uniform(18, 70))
            end = min(seg_x + word, x0 + length)
            img[y:y + line_h - 2, seg_x:end] = ink + rng.integers(-15, 15, 3)
            seg_x = end + rng.integers(6, 14)
        y += line_h
    return y


def _photo_block(rng, img, y0, y1, x0, x1):
    """Smooth gradient plus noise: compresses like a photograph."""
    h, w = y1 - y0, x1 - x0
    gy = np.linspace(0, 1, h)[:, None]
    gx = np.linspace(0, 1, w)[None, :]
    base = rng.integers(40, 200, 3)
    tilt = rng.integers(-80, 80, 3)
    block = base + (gy * gx)[:, :, None] * tilt + rng.normal(0, 14, (h, w, 1))
    for c in range(3):
        block[..., c] += 30 * np.sin(gy * rng.uniform(2, 9) + c)
    img[y0:y1, x0:x1] = np.clip(block, 0, 255)


def synth_page(url: str, width: int, height: int, theme_seed: int,
               link_targets: list[str]) -> CorpusPage:
    rng = np.random.default_rng(theme_seed)
    img = np.full((height, width, 3), rng.integers(235, 252, 3), dtype=np.int32)
    accent = rng.integers(30, 160, 3)
    ink = rng.integers(15, 60, 3)
    scale = width / W  # geometry in canonical units, drawn at raw size

    def sx(v):
        return int(v * scale)

    regions: list[ClickRegion] = []
    # header band + nav buttons
    img[: sx(140)] = accent
    img[sx(20):sx(110), sx(30):sx(330)] = np.clip(accent + 70, 0, 255)
    nav_y, nav_h, nav_w = 160, 70, 190
    for i, target in enumerate(link_targets[:5]):
        x = 30 + i * (nav_w + 20)
        img[sx(nav_y):sx(nav_y + nav_h), sx(x):sx(x + nav_w)] = np.clip(accent + 40, 0, 255)
        regions.append(ClickRegion(x, nav_y, nav_w, nav_h, target))

    y = sx(270)
    body_end = height - sx(160)
    kinds = rng.random(64)
    k = 0
    while y < body_end - sx(240):
        kind = kinds[k % kinds.size]
        k += 1
        if kind < 0.5:
            blk_h = int(rng.uniform(180, 420) * scale)
            y = _paragraph(rng, img, y, min(y + blk_h, body_end),
                           sx(60), sx(rng.uniform(820, 1020)), ink, sx(22))
            y += sx(30)
        elif kind < 0.8:
            blk_h = int(rng.uniform(260, 520) * scale)
            x0 = sx(rng.uniform(60, 200))
            x1 = sx(rng.uniform(700, 1020))
            _photo_block(rng, img, y, min(y + blk_h, body_end), x0, x1)
            y += blk_h + sx(36)
        else:
            # link list: short colored lines, each a click region
            n = rng.integers(3, 7)
            for _ in range(int(n)):
                ly = int(y / scale)
                lw = int(rng.uniform(260, 620))
                if y + sx(26) >= body_end:
                    break
                img[y:y + sx(18), sx(80):sx(80 + lw)] = (30, 60, 150)
                if link_targets:
                    regions.append(ClickRegion(80, ly, lw, 24,
                                               link_targets[int(rng.integers(len(link_targets)))]))
                y += sx(34)
            y += sx(26)
    img[height - sx(120):] = np.clip(accent // 2 + 40, 0, 255)

    cmap = ClickMap([r for r in regions
                     if r.y + r.h <= height / scale and r.x + r.w <= W])
    return CorpusPage(url, img.astype(np.uint8), cmap)


def build_corpus(specs=PAGE_SPECS) -> list[CorpusPage]:
    urls = [s[0] for s in specs]
    pages = []
    for i, (url, width, height, theme) in enumerate(specs):
        targets = [u for u in urls if u != url][:5] or [url]
        pages.append(synth_page(url, width, height, theme, targets))
    return pages


def normalize_corpus(pages: list[CorpusPage], quality: int = raster.DEFAULT_QUALITY,
                     crop: int | None = raster.DEFAULT_CROP_PX) -> list[RasterPage]:
    out = []
    for i, cp in enumerate(pages):
        out.append(raster.normalize(cp.rgb, crop, quality, page_id=i, url=cp.url,
                                    click_map=cp.click_map))
    return out


# --- on-disk corpus -------------------------------------------------------

def write_corpus(directory, pages: list[CorpusPage]) -> Path:
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    manifest = {}
    for i, cp in enumerate(pages):
        stem = f"page{i:03d}"
        raster.save_png(root / f"{stem}.png", cp.rgb)
        raster.save_clickmap(root / f"{stem}.clickmap.json", cp.click_map)
        manifest[cp.url] = {"screenshot": f"{stem}.png",
                            "clickmap": f"{stem}.clickmap.json"}
    with open(root / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1)
    return root / "manifest.json"


def load_corpus(directory) -> list[CorpusPage]:
    root = Path(directory)
    with open(root / "manifest.json", encoding="utf-8") as fh:
        manifest = json.load(fh)
    pages = []
    for url, files in manifest.items():
        rgb = raster.load_png(root / files["screenshot"])
        cmap = raster.load_clickmap(root / files["clickmap"])
        pages.append(CorpusPage(url, rgb, cmap))
    return pages
