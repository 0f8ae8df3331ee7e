/** Thin client for the three service endpoints. At most one expansion request
 * is in flight; a newer request aborts the previous one. */

import type {
  ExpandRequest,
  ExpandResponse,
  GraphJson,
  VocabResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
  }
}

async function readError(res: Response): Promise<ApiError> {
  let detail = res.statusText;
  try {
    const body = await res.json();
    if (typeof body.detail === "string") {
      detail = body.detail;
    }
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(res.status, detail);
}

export class ApiClient {
  private expandController: AbortController | null = null;

  constructor(private readonly baseUrl: string = "") {}

  async fetchVocab(): Promise<VocabResponse> {
    const res = await fetch(`${this.baseUrl}/api/vocab`);
    if (!res.ok) {
      throw await readError(res);
    }
    return res.json();
  }

  /** Raw response text is returned alongside the parsed payload so the UI can
   * render exactly what the server sent. */
  async expand(
    request: ExpandRequest,
  ): Promise<{ payload: ExpandResponse; raw: string }> {
    this.expandController?.abort();
    const controller = new AbortController();
    this.expandController = controller;
    const res = await fetch(`${this.baseUrl}/api/expand`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(request),
      signal: controller.signal,
    });
    if (!res.ok) {
      throw await readError(res);
    }
    const raw = await res.text();
    return { payload: JSON.parse(raw), raw };
  }

  async seedExtract(
    graph: GraphJson,
    seedsPerComponent: number,
    maxSubgraphNodes: number,
    seed: number,
  ): Promise<GraphJson[]> {
    const res = await fetch(`${this.baseUrl}/api/seed-extract`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({
        graph,
        seeds_per_component: seedsPerComponent,
        max_subgraph_nodes: maxSubgraphNodes,
        seed,
      }),
    });
    if (!res.ok) {
      throw await readError(res);
    }
    return (await res.json()).seeds;
  }
}
