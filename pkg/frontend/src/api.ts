/**
 * Typed client for the corex HTTP API.
 *
 * Every interface here mirrors one server payload field for field; the
 * client adds no derived values, so anything rendered from these types is
 * traceable to an API response. Errors carry the server's status code and
 * the JSON `detail` message when one is present.
 */

export type Truth = "positive" | "negative";

export interface SampleSummary {
  sample_id: string;
  ground_truth: Truth;
  model_truth: Truth;
  explainer_truth: Truth;
}

export interface SampleListResponse {
  class_name: string;
  samples: SampleSummary[];
}

export interface ConceptGrid {
  concept_id: number;
  label: string | null;
  total_relevance: number;
  sign: "pos" | "neg" | "zero";
  kept: boolean;
  grid: number[][];
}

export interface RegionPayload {
  concept_id: number;
  sign: "pos" | "neg";
  size: number;
  centroid: [number, number];
  /* closed rectilinear outline on the pixel-corner lattice, [x, y] pairs */
  boundary: [number, number][];
}

export interface SampleDetail {
  sample_id: string;
  ground_truth: Truth;
  model_truth: Truth;
  explainer_truth: Truth;
  height: number;
  width: number;
  concepts: ConceptGrid[];
  regions: RegionPayload[];
  facts: string[];
}

export interface LiteralPayload {
  predicate: string;
  args: [number, "pos" | "neg"][];
}

export interface ClausePayload {
  index: number;
  text: string;
  verbalized: string;
  body: LiteralPayload[];
  ground_sample: string | null;
  covered_pos: string[];
  covered_neg: string[];
}

export interface ConstraintsPayload {
  forbidden_concepts: number[];
  forbidden_relations: string[];
  forbidden_literals: LiteralPayload[];
}

export interface TheoryPayload {
  class_name: string;
  text: string;
  clauses: ClausePayload[];
  uncovered_pos: string[];
  constraints: ConstraintsPayload;
}

export interface ClusterGroup {
  clause_indices: number[];
  count: number;
  samples: string[];
}

export interface ClustersPayload {
  groups: ClusterGroup[];
}

export interface RanksPayload {
  top_rules: number;
  /* concept id (as string key) -> [rank, count] pairs */
  histograms: Record<string, [number, number][]>;
}

export interface ExplanationPayload {
  sample_id: string;
  clause_index: number;
  clause_text: string;
  clause_verbalized: string;
  covered: boolean;
  failing_literals: LiteralPayload[];
  verbalization: string;
}

export interface HistoryEntry {
  seq: number;
  action: string;
  fidelity: number;
  f1: number;
  timestamp: string;
}

export interface Confusion {
  tp: number;
  tn: number;
  fp: number;
  fn: number;
}

export interface MetricsPayload {
  fidelity: number;
  f1: number;
  confusion: Confusion;
  class_name: string;
  n_samples: number;
  n_clauses: number;
  history: HistoryEntry[];
}

export interface ConstraintRequest {
  forbidden_concepts?: number[];
  forbidden_relations?: string[];
  forbidden_literals?: LiteralPayload[];
}

export interface MaskRequest {
  label: "rule_plus_nonbk" | "nonbk_only" | "custom";
  concepts?: number[];
}

export interface MaskResponse {
  fidelity: number;
  f1: number;
  confusion: Confusion;
  mask: { label: string; masked_concepts: number[] };
}

export class ApiError extends Error {
  constructor(readonly status: number, readonly detail: string) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function asError(res: Response): Promise<ApiError> {
  let detail = res.statusText || "request failed";
  try {
    const body = (await res.json()) as { detail?: unknown };
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    /* non-JSON error body; keep the status text */
  }
  return new ApiError(res.status, detail);
}

export class ApiClient {
  private readonly fetchImpl: FetchLike;

  constructor(readonly baseUrl: string = "", fetchImpl?: FetchLike) {
    // bind: the global fetch of browsers rejects unbound calls
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchImpl(this.baseUrl + path, init);
    if (!res.ok) throw await asError(res);
    return (await res.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  listSamples(): Promise<SampleListResponse> {
    return this.request("/samples");
  }

  getSample(id: string): Promise<SampleDetail> {
    return this.request(`/samples/${encodeURIComponent(id)}`);
  }

  getTheory(): Promise<TheoryPayload> {
    return this.request("/theory");
  }

  getClusters(): Promise<ClustersPayload> {
    return this.request("/clusters");
  }

  getRanks(topRules?: number): Promise<RanksPayload> {
    const query = topRules === undefined ? "" : `?top_rules=${topRules}`;
    return this.request(`/ranks${query}`);
  }

  getExplanation(id: string): Promise<ExplanationPayload> {
    return this.request(`/explanations/${encodeURIComponent(id)}`);
  }

  getMetrics(): Promise<MetricsPayload> {
    return this.request("/metrics");
  }

  induce(constraints: ConstraintRequest): Promise<TheoryPayload> {
    return this.post("/induce", constraints);
  }

  mask(spec: MaskRequest): Promise<MaskResponse> {
    return this.post("/mask", spec);
  }
}

/** Concept ids mentioned anywhere in a theory's clause bodies. */
export function theoryConceptIds(theory: TheoryPayload): number[] {
  const ids = new Set<number>();
  for (const clause of theory.clauses)
    for (const lit of clause.body) for (const [cid] of lit.args) ids.add(cid);
  return [...ids].sort((a, b) => a - b);
}
