// Wire types mirroring the gateway API (docs/FORMATS.md in the repo root).

export type Mode = "base" | "rag" | "grg";

export interface WireFact {
  text: string;
  subject_id: string;
  subject_name: string;
  predicate: string;
  object_id: string;
  object_name: string;
  sources: string[];
}

export interface WireChunk {
  chunk_id: string;
  doc_id: string;
  span: [number, number];
  score: number;
  rank: number;
  text: string;
}

export interface QueryContext {
  facts: WireFact[];
  chunks: WireChunk[];
  total_chars: number;
  budget_chars: number;
  truncation_report: string[];
}

export interface QueryResponse {
  answer: string;
  context: QueryContext;
  diagnostics: Record<string, unknown>;
}

export interface GraphEntity {
  entity_id: string;
  canonical_name: string;
  type: string;
  aliases: string[];
  provenance: string[];
}

export interface GraphRelation {
  subject_id: string;
  predicate: string;
  object_id: string;
  confidence: number;
  provenance: string[];
}

export interface Subgraph {
  schema_version: number;
  entities: GraphEntity[];
  relations: GraphRelation[];
  center?: string;
  depth?: number;
}

export interface ErrorEnvelope {
  error: { code: string; message: string };
}
