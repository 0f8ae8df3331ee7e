/** Pure editor-state transitions. All functions return a new state; invalid
 * actions leave the graph untouched and surface an inline message. */

import type { Expansion, GraphJson, VocabResponse } from "./types.js";

export interface EditorState {
  graph: GraphJson;
  selectedNode: number | null;
  vocab: VocabResponse | null;
  expansions: Expansion[];
  /** Seeds replaced by promotions, oldest first. Append-only; entries past
   * historyDepth have been undone and are kept only as a log. */
  history: GraphJson[];
  historyDepth: number;
  message: string | null;
}

export type EditAction =
  | { kind: "add-node"; label: string }
  | { kind: "add-edge"; src: number; dst: number; label: string }
  | { kind: "delete-node"; id: number }
  | { kind: "delete-edge"; index: number }
  | { kind: "relabel-node"; id: number; label: string }
  | { kind: "relabel-edge"; index: number; label: string };

export function initialState(): EditorState {
  return {
    graph: { nodes: [], edges: [] },
    selectedNode: null,
    vocab: null,
    expansions: [],
    history: [],
    historyDepth: 0,
    message: null,
  };
}

export function cloneGraph(g: GraphJson): GraphJson {
  return {
    nodes: g.nodes.map((n) => ({ ...n })),
    edges: g.edges.map((e) => ({ ...e })),
  };
}

/** Canonical JSON: nodes sorted by id, edges by (src, dst, label), compact
 * separators. Matches the service's own serialization byte for byte. */
export function serializeGraph(g: GraphJson): string {
  const nodes = [...g.nodes].sort((a, b) => a.id - b.id);
  const edges = [...g.edges].sort(
    (a, b) => a.src - b.src || a.dst - b.dst || a.label.localeCompare(b.label),
  );
  const nodePart = nodes
    .map((n) => `{"id":${n.id},"label":${JSON.stringify(n.label)}}`)
    .join(",");
  const edgePart = edges
    .map(
      (e) =>
        `{"src":${e.src},"dst":${e.dst},"label":${JSON.stringify(e.label)}}`,
    )
    .join(",");
  return `{"nodes":[${nodePart}],"edges":[${edgePart}]}`;
}

export function parseGraph(text: string): GraphJson {
  const raw = JSON.parse(text);
  if (!raw || !Array.isArray(raw.nodes) || !Array.isArray(raw.edges)) {
    throw new Error("graph JSON must contain 'nodes' and 'edges' arrays");
  }
  const nodes = raw.nodes.map((n: unknown) => {
    const rec = n as Record<string, unknown>;
    if (typeof rec.id !== "number" || typeof rec.label !== "string") {
      throw new Error("each node needs a numeric id and a string label");
    }
    return { id: rec.id, label: rec.label };
  });
  const edges = raw.edges.map((e: unknown) => {
    const rec = e as Record<string, unknown>;
    if (
      typeof rec.src !== "number" ||
      typeof rec.dst !== "number" ||
      typeof rec.label !== "string"
    ) {
      throw new Error("each edge needs numeric src/dst and a string label");
    }
    return { src: rec.src, dst: rec.dst, label: rec.label };
  });
  return { nodes, edges };
}

function reject(state: EditorState, message: string): EditorState {
  return { ...state, message };
}

function nextNodeId(g: GraphJson): number {
  return g.nodes.reduce((m, n) => Math.max(m, n.id + 1), 0);
}

export function editGraph(state: EditorState, action: EditAction): EditorState {
  const g = state.graph;
  const objectLabels = state.vocab?.object_labels ?? null;
  const relationLabels = state.vocab?.relation_labels ?? null;

  switch (action.kind) {
    case "add-node": {
      if (objectLabels && !objectLabels.includes(action.label)) {
        return reject(state, `unknown object label: ${action.label}`);
      }
      const node = { id: nextNodeId(g), label: action.label };
      return {
        ...state,
        graph: { nodes: [...g.nodes, node], edges: g.edges },
        selectedNode: node.id,
        message: null,
      };
    }
    case "add-edge": {
      if (action.src === action.dst) {
        return reject(state, "self-loops are not allowed");
      }
      const ids = new Set(g.nodes.map((n) => n.id));
      if (!ids.has(action.src) || !ids.has(action.dst)) {
        return reject(state, "both endpoints must exist");
      }
      if (g.edges.some((e) => e.src === action.src && e.dst === action.dst)) {
        return reject(state, "an edge in that direction already exists");
      }
      if (relationLabels && !relationLabels.includes(action.label)) {
        return reject(state, `unknown relation label: ${action.label}`);
      }
      const edge = { src: action.src, dst: action.dst, label: action.label };
      return {
        ...state,
        graph: { nodes: g.nodes, edges: [...g.edges, edge] },
        message: null,
      };
    }
    case "delete-node": {
      if (!g.nodes.some((n) => n.id === action.id)) {
        return reject(state, "no such node");
      }
      return {
        ...state,
        graph: {
          nodes: g.nodes.filter((n) => n.id !== action.id),
          edges: g.edges.filter(
            (e) => e.src !== action.id && e.dst !== action.id,
          ),
        },
        selectedNode:
          state.selectedNode === action.id ? null : state.selectedNode,
        message: null,
      };
    }
    case "delete-edge": {
      if (action.index < 0 || action.index >= g.edges.length) {
        return reject(state, "no such edge");
      }
      return {
        ...state,
        graph: {
          nodes: g.nodes,
          edges: g.edges.filter((_, i) => i !== action.index),
        },
        message: null,
      };
    }
    case "relabel-node": {
      if (objectLabels && !objectLabels.includes(action.label)) {
        return reject(state, `unknown object label: ${action.label}`);
      }
      if (!g.nodes.some((n) => n.id === action.id)) {
        return reject(state, "no such node");
      }
      return {
        ...state,
        graph: {
          nodes: g.nodes.map((n) =>
            n.id === action.id ? { ...n, label: action.label } : n,
          ),
          edges: g.edges,
        },
        message: null,
      };
    }
    case "relabel-edge": {
      if (relationLabels && !relationLabels.includes(action.label)) {
        return reject(state, `unknown relation label: ${action.label}`);
      }
      if (action.index < 0 || action.index >= g.edges.length) {
        return reject(state, "no such edge");
      }
      return {
        ...state,
        graph: {
          nodes: g.nodes,
          edges: g.edges.map((e, i) =>
            i === action.index ? { ...e, label: action.label } : e,
          ),
        },
        message: null,
      };
    }
  }
}

export function setVocab(state: EditorState, vocab: VocabResponse): EditorState {
  return { ...state, vocab };
}

export function setExpansions(
  state: EditorState,
  expansions: Expansion[],
): EditorState {
  return { ...state, expansions, message: null };
}

/** Replace the working seed with a received expansion; the old seed goes onto
 * the history stack so undo can restore it exactly. */
export function promoteExpansion(
  state: EditorState,
  index: number,
): EditorState {
  if (index < 0 || index >= state.expansions.length) {
    return reject(state, "that expansion is no longer available");
  }
  const history = [...state.history, cloneGraph(state.graph)];
  return {
    ...state,
    graph: cloneGraph(state.expansions[index].graph),
    history,
    historyDepth: history.length,
    expansions: [],
    selectedNode: null,
    message: null,
  };
}

export function undoPromotion(state: EditorState): EditorState {
  if (state.historyDepth === 0) {
    return reject(state, "nothing to undo");
  }
  return {
    ...state,
    graph: cloneGraph(state.history[state.historyDepth - 1]),
    historyDepth: state.historyDepth - 1,
    expansions: [],
    selectedNode: null,
    message: null,
  };
}
