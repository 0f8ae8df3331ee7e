/** SVG node-link rendering. Seed nodes are drawn with a distinct class so
 * every expansion panel highlights what was conditioned on. */

import { layoutGraph } from "./layout.js";
import type { GraphJson } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

function el<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string>,
): SVGElementTagNameMap[K] {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) {
    node.setAttribute(k, v);
  }
  return node;
}

export interface RenderOptions {
  width: number;
  height: number;
  seedIds?: Set<number>;
  selectedNode?: number | null;
  onNodeClick?: (id: number) => void;
}

export function renderGraph(g: GraphJson, opts: RenderOptions): SVGSVGElement {
  const { width, height } = opts;
  const seedIds = opts.seedIds ?? new Set<number>();
  const pos = layoutGraph(g, width, height);
  const svg = el("svg", {
    viewBox: `0 0 ${width} ${height}`,
    class: "graph-canvas",
  });

  const defs = el("defs", {});
  const marker = el("marker", {
    id: "arrow",
    viewBox: "0 0 10 10",
    refX: "22",
    refY: "5",
    markerWidth: "7",
    markerHeight: "7",
    orient: "auto-start-reverse",
  });
  marker.appendChild(el("path", { d: "M 0 0 L 10 5 L 0 10 z", class: "arrowhead" }));
  defs.appendChild(marker);
  svg.appendChild(defs);

  for (const edge of g.edges) {
    const a = pos.get(edge.src);
    const b = pos.get(edge.dst);
    if (!a || !b) {
      continue;
    }
    svg.appendChild(
      el("line", {
        x1: String(a.x),
        y1: String(a.y),
        x2: String(b.x),
        y2: String(b.y),
        class: "edge-line",
        "marker-end": "url(#arrow)",
      }),
    );
    svg.appendChild(
      Object.assign(
        el("text", {
          x: String((a.x + b.x) / 2),
          y: String((a.y + b.y) / 2 - 4),
          class: "edge-label",
        }),
        { textContent: edge.label },
      ),
    );
  }

  for (const node of g.nodes) {
    const p = pos.get(node.id)!;
    const group = el("g", { class: "node-group" });
    const classes = ["node-circle"];
    if (seedIds.has(node.id)) {
      classes.push("seed-node");
    }
    if (opts.selectedNode === node.id) {
      classes.push("selected-node");
    }
    group.appendChild(
      el("circle", {
        cx: String(p.x),
        cy: String(p.y),
        r: "16",
        class: classes.join(" "),
      }),
    );
    group.appendChild(
      Object.assign(
        el("text", { x: String(p.x), y: String(p.y + 30), class: "node-label" }),
        { textContent: `${node.label} (${node.id})` },
      ),
    );
    if (opts.onNodeClick) {
      group.addEventListener("click", () => opts.onNodeClick!(node.id));
    }
    svg.appendChild(group);
  }
  return svg;
}
