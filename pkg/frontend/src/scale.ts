// Coordinate scaling for click maps. Must stay numerically identical to the
// server's display scaling (round half-up, then clamp into the scaled page);
// shared/scale_vectors.json pins the two implementations together.

export const CANONICAL_WIDTH = 1080;

export interface Region {
  x: number;
  y: number;
  w: number;
  h: number;
  url: string;
}

export interface ScaledMap {
  gridWidth: number;
  gridHeight: number;
  regions: Region[];
}

export function roundHalfUp(v: number): number {
  return Math.floor(v + 0.5);
}

export function scaleMap(pageHeight: number, regions: Region[],
                         screenWidth: number): ScaledMap {
  if (screenWidth < 1) {
    throw new Error("screen width must be >= 1");
  }
  const factor = screenWidth / CANONICAL_WIDTH;
  const gridWidth = screenWidth;
  const gridHeight = Math.max(1, roundHalfUp(pageHeight * factor));
  const scaled = regions.map((r) => {
    const x = Math.min(roundHalfUp(r.x * factor), gridWidth - 1);
    const y = Math.min(roundHalfUp(r.y * factor), gridHeight - 1);
    const w = Math.max(1, Math.min(roundHalfUp(r.w * factor), gridWidth - x));
    const h = Math.max(1, Math.min(roundHalfUp(r.h * factor), gridHeight - y));
    return { x, y, w, h, url: r.url };
  });
  return { gridWidth, gridHeight, regions: scaled };
}

// Topmost (last listed) region containing the point; edges are half-open.
export function hitTest(regions: Region[], x: number, y: number): string | null {
  let hit: string | null = null;
  for (const r of regions) {
    if (x >= r.x && x < r.x + r.w && y >= r.y && y < r.y + r.h) {
      hit = r.url;
    }
  }
  return hit;
}
