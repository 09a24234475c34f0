// Mirrors the JSON shapes published by the question-answering API.

export interface Citation {
  chunk_id: string;
  source: string;
  contract: string;
  clause: string;
}

export interface ResultTable {
  columns: [string, string][];
  rows: (string | number | null)[][];
  truncated: boolean;
}

export interface ChartSpec {
  kind: string;
  title: string;
  labels: string[];
  values: number[];
  value_axis_label: string;
}

export interface QueryRoute {
  target: string;
  filter: Record<string, unknown>;
  matched_rule: string;
}

export interface AnswerEnvelope {
  question: string;
  answer_text: string;
  route: QueryRoute;
  citations: Citation[];
  table: ResultTable | null;
  chart: ChartSpec | null;
  executed_sql: string | null;
  sql_attempts: string[];
  warnings: string[];
  error: string | null;
  timings_ms: Record<string, number>;
}

export interface AskResponse {
  request: { session_id: string; question: string };
  envelope: AnswerEnvelope;
  server_timings_ms: Record<string, number>;
}

export interface HistoryTurn {
  question: string;
  answer: string;
}

export interface ChunkDetail {
  chunk_id: string;
  text: string;
  source: string;
  contract: string;
  clause: string;
}
