/** Wire types shared with the sceneexpand HTTP service. */

export interface NodeJson {
  id: number;
  label: string;
}

export interface EdgeJson {
  src: number;
  dst: number;
  label: string;
}

export interface GraphJson {
  nodes: NodeJson[];
  edges: EdgeJson[];
}

export interface Expansion {
  graph: GraphJson;
  novel: boolean;
}

export interface ExpandResponse {
  expansions: Expansion[];
}

export interface VocabResponse {
  object_labels: string[];
  relation_labels: string[];
  vocab_hash: string;
}

export interface ExpandRequest {
  seed: GraphJson;
  num_samples: number;
  max_new_nodes: number;
  temperature: number;
  rng_seed: number;
  vocab_hash?: string;
}
