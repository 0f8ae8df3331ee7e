/** Wires the editor state to the DOM: vocabulary pickers, the seed editor,
 * the expansion panels with promote buttons, and undo/import/export. */

import { ApiClient, ApiError } from "./api.js";
import { renderGraph } from "./render.js";
import {
  EditorState,
  editGraph,
  initialState,
  parseGraph,
  promoteExpansion,
  serializeGraph,
  setExpansions,
  setVocab,
  undoPromotion,
} from "./state.js";

const api = new ApiClient();
let state: EditorState = initialState();

function byId<T extends HTMLElement>(id: string): T {
  return document.getElementById(id) as T;
}

function update(next: EditorState): void {
  state = next;
  draw();
}

function fillSelect(select: HTMLSelectElement, options: string[]): void {
  select.replaceChildren(
    ...options.map((label) => {
      const o = document.createElement("option");
      o.value = label;
      o.textContent = label;
      return o;
    }),
  );
}

function draw(): void {
  const message = byId<HTMLDivElement>("message");
  message.textContent = state.message ?? "";
  message.hidden = !state.message;

  const editor = byId<HTMLDivElement>("editor-canvas");
  editor.replaceChildren(
    renderGraph(state.graph, {
      width: 420,
      height: 320,
      selectedNode: state.selectedNode,
      onNodeClick: (id) => update({ ...state, selectedNode: id, message: null }),
    }),
  );
  byId<HTMLPreElement>("serialized").textContent = serializeGraph(state.graph);
  byId<HTMLButtonElement>("undo").disabled = state.historyDepth === 0;

  const seedIds = new Set(state.graph.nodes.map((n) => n.id));
  const panels = byId<HTMLDivElement>("panels");
  panels.replaceChildren(
    ...state.expansions.map((exp, index) => {
      const panel = document.createElement("div");
      panel.className = "panel";
      const header = document.createElement("div");
      header.className = "panel-header";
      header.textContent = `expansion ${index + 1}`;
      if (exp.novel) {
        const badge = document.createElement("span");
        badge.className = "novel-badge";
        badge.textContent = "novel";
        header.appendChild(badge);
      }
      panel.appendChild(header);
      panel.appendChild(renderGraph(exp.graph, { width: 320, height: 260, seedIds }));
      const promote = document.createElement("button");
      promote.textContent = "promote to seed";
      promote.addEventListener("click", () => update(promoteExpansion(state, index)));
      panel.appendChild(promote);
      return panel;
    }),
  );
}

function showError(err: unknown): void {
  if (err instanceof DOMException && err.name === "AbortError") {
    return; // superseded by a newer request
  }
  const detail = err instanceof ApiError ? `${err.status}: ${err.message}` : String(err);
  update({ ...state, message: detail });
}

async function init(): Promise<void> {
  try {
    const vocab = await api.fetchVocab();
    update(setVocab(state, vocab));
    fillSelect(byId("node-label"), vocab.object_labels);
    fillSelect(byId("edge-label"), vocab.relation_labels);
  } catch (err) {
    showError(err);
  }

  byId<HTMLButtonElement>("add-node").addEventListener("click", () => {
    const label = byId<HTMLSelectElement>("node-label").value;
    update(editGraph(state, { kind: "add-node", label }));
  });

  byId<HTMLButtonElement>("add-edge").addEventListener("click", () => {
    const src = Number(byId<HTMLInputElement>("edge-src").value);
    const dst = Number(byId<HTMLInputElement>("edge-dst").value);
    const label = byId<HTMLSelectElement>("edge-label").value;
    update(editGraph(state, { kind: "add-edge", src, dst, label }));
  });

  byId<HTMLButtonElement>("delete-node").addEventListener("click", () => {
    if (state.selectedNode === null) {
      update({ ...state, message: "select a node first" });
      return;
    }
    update(editGraph(state, { kind: "delete-node", id: state.selectedNode }));
  });

  byId<HTMLButtonElement>("expand").addEventListener("click", async () => {
    if (state.graph.nodes.length === 0) {
      update({ ...state, message: "the seed graph is empty" });
      return;
    }
    try {
      const { payload } = await api.expand({
        seed: state.graph,
        num_samples: Number(byId<HTMLInputElement>("num-samples").value),
        max_new_nodes: Number(byId<HTMLInputElement>("max-new").value),
        temperature: Number(byId<HTMLInputElement>("temperature").value),
        rng_seed: Number(byId<HTMLInputElement>("rng-seed").value),
        vocab_hash: state.vocab?.vocab_hash,
      });
      update(setExpansions(state, payload.expansions));
    } catch (err) {
      showError(err);
    }
  });

  byId<HTMLButtonElement>("undo").addEventListener("click", () =>
    update(undoPromotion(state)),
  );

  byId<HTMLButtonElement>("export").addEventListener("click", () => {
    const blob = new Blob([serializeGraph(state.graph) + "\n"], {
      type: "application/json",
    });
    const a = document.createElement("a");
    a.href = URL.createObjectURL(blob);
    a.download = "seed.json";
    a.click();
    URL.revokeObjectURL(a.href);
  });

  byId<HTMLInputElement>("import").addEventListener("change", async (event) => {
    const input = event.target as HTMLInputElement;
    const file = input.files?.[0];
    if (!file) {
      return;
    }
    try {
      const graph = parseGraph(await file.text());
      update({ ...state, graph, expansions: [], selectedNode: null, message: null });
    } catch (err) {
      update({ ...state, message: `import failed: ${err}` });
    } finally {
      input.value = "";
    }
  });

  draw();
}

init();
