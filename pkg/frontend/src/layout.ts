/** Deterministic force-directed layout. Initial positions are derived from a
 * hash of each node id, so the same graph always lays out the same way and a
 * node keeps its place across the expansion panels. */

import type { GraphJson } from "./types.js";

export interface Point {
  x: number;
  y: number;
}

/** 32-bit integer mix; plain arithmetic so the result is stable everywhere. */
function hashId(id: number, salt: number): number {
  let h = (id + 0x9e3779b9 + salt) >>> 0;
  h = Math.imul(h ^ (h >>> 16), 0x45d9f3b) >>> 0;
  h = Math.imul(h ^ (h >>> 16), 0x45d9f3b) >>> 0;
  h = (h ^ (h >>> 16)) >>> 0;
  return h / 0x100000000;
}

export function layoutGraph(
  g: GraphJson,
  width: number,
  height: number,
  iterations = 120,
): Map<number, Point> {
  // Canonical iteration order: positions must not depend on how the caller
  // happened to order the node and edge arrays.
  const ids = g.nodes.map((n) => n.id).sort((a, b) => a - b);
  const pos = new Map<number, Point>();
  const cx = width / 2;
  const cy = height / 2;
  const radius = Math.min(width, height) * 0.35;
  for (const id of ids) {
    const angle = hashId(id, 1) * 2 * Math.PI;
    const r = radius * (0.4 + 0.6 * hashId(id, 2));
    pos.set(id, { x: cx + r * Math.cos(angle), y: cy + r * Math.sin(angle) });
  }
  if (ids.length < 2) {
    return pos;
  }

  const springLength = radius * 0.8;
  const neighbors: Array<[number, number]> = g.edges
    .map((e): [number, number] => [e.src, e.dst])
    .sort((a, b) => a[0] - b[0] || a[1] - b[1]);
  for (let iter = 0; iter < iterations; iter++) {
    const temp = 0.1 * (1 - iter / iterations) * radius;
    const force = new Map<number, Point>(ids.map((id) => [id, { x: 0, y: 0 }]));
    for (let i = 0; i < ids.length; i++) {
      for (let j = i + 1; j < ids.length; j++) {
        const a = pos.get(ids[i])!;
        const b = pos.get(ids[j])!;
        const dx = a.x - b.x;
        const dy = a.y - b.y;
        const d2 = Math.max(dx * dx + dy * dy, 1e-6);
        const push = (springLength * springLength) / d2;
        force.get(ids[i])!.x += dx * push;
        force.get(ids[i])!.y += dy * push;
        force.get(ids[j])!.x -= dx * push;
        force.get(ids[j])!.y -= dy * push;
      }
    }
    for (const [src, dst] of neighbors) {
      const a = pos.get(src)!;
      const b = pos.get(dst)!;
      const dx = b.x - a.x;
      const dy = b.y - a.y;
      const d = Math.max(Math.sqrt(dx * dx + dy * dy), 1e-3);
      const pull = (d - springLength) / d;
      force.get(src)!.x += dx * pull;
      force.get(src)!.y += dy * pull;
      force.get(dst)!.x -= dx * pull;
      force.get(dst)!.y -= dy * pull;
    }
    for (const id of ids) {
      const p = pos.get(id)!;
      const f = force.get(id)!;
      const mag = Math.max(Math.sqrt(f.x * f.x + f.y * f.y), 1e-9);
      const step = Math.min(mag, temp);
      p.x += (f.x / mag) * step;
      p.y += (f.y / mag) * step;
      p.x = Math.min(Math.max(p.x, 20), width - 20);
      p.y = Math.min(Math.max(p.y, 20), height - 20);
    }
  }
  return pos;
}
