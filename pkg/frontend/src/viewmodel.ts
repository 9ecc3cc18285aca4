/**
 * UI state for the explorer: a mirror of the latest API responses plus an
 * error banner and a single-mutation guard.
 *
 * Nothing in here derives analysis results client-side; every field is a
 * stored server payload, so clearing and re-fetching against an unchanged
 * server reproduces the identical view. Mutations (re-induce, mask) run
 * one at a time: while one is pending, further mutation calls are refused
 * without touching the server. A failed request leaves every panel as it
 * was and only raises the banner.
 */

import {
  ApiClient,
  ApiError,
  ClustersPayload,
  ConstraintRequest,
  ExplanationPayload,
  MaskRequest,
  MaskResponse,
  MetricsPayload,
  RanksPayload,
  SampleDetail,
  SampleListResponse,
  TheoryPayload,
} from "./api.js";

export type Listener = (vm: ViewModel) => void;

function message(err: unknown): string {
  if (err instanceof ApiError) return err.detail;
  if (err instanceof Error) return err.message;
  return String(err);
}

export class ViewModel {
  samples: SampleListResponse | null = null;
  selected: SampleDetail | null = null;
  explanation: ExplanationPayload | null = null;
  theory: TheoryPayload | null = null;
  clusters: ClustersPayload | null = null;
  ranks: RanksPayload | null = null;
  metrics: MetricsPayload | null = null;
  lastMask: MaskResponse | null = null;
  error: string | null = null;
  pending = false;

  private listeners = new Set<Listener>();

  constructor(readonly api: ApiClient) {}

  subscribe(fn: Listener): () => void {
    this.listeners.add(fn);
    return () => this.listeners.delete(fn);
  }

  private notify(): void {
    for (const fn of this.listeners) fn(this);
  }

  dismissError(): void {
    this.error = null;
    this.notify();
  }

  /** Drop all panels; refreshAll() afterwards rebuilds the identical view. */
  clear(): void {
    this.samples = null;
    this.selected = null;
    this.explanation = null;
    this.theory = null;
    this.clusters = null;
    this.ranks = null;
    this.metrics = null;
    this.lastMask = null;
    this.error = null;
    this.notify();
  }

  async refreshAll(): Promise<void> {
    try {
      const [samples, theory, clusters, ranks, metrics] = await Promise.all([
        this.api.listSamples(),
        this.api.getTheory(),
        this.api.getClusters(),
        this.api.getRanks(),
        this.api.getMetrics(),
      ]);
      this.samples = samples;
      this.theory = theory;
      this.clusters = clusters;
      this.ranks = ranks;
      this.metrics = metrics;
      this.error = null;
    } catch (err) {
      this.error = message(err);
    }
    this.notify();
  }

  async selectSample(id: string): Promise<void> {
    try {
      const [detail, explanation] = await Promise.all([
        this.api.getSample(id),
        this.api.getExplanation(id),
      ]);
      this.selected = detail;
      this.explanation = explanation;
      this.error = null;
    } catch (err) {
      this.error = message(err);
    }
    this.notify();
  }

  /**
   * Re-induce under extra constraints. Returns false if another mutation
   * is still pending (the request is not sent). On success the theory,
   * cluster, rank, and metrics panels are re-fetched; on failure the view
   * is left unchanged apart from the error banner.
   */
  async forbid(constraints: ConstraintRequest): Promise<boolean> {
    if (this.pending) return false;
    this.pending = true;
    this.notify();
    try {
      await this.api.induce(constraints);
      const [theory, clusters, ranks, metrics] = await Promise.all([
        this.api.getTheory(),
        this.api.getClusters(),
        this.api.getRanks(),
        this.api.getMetrics(),
      ]);
      this.theory = theory;
      this.clusters = clusters;
      this.ranks = ranks;
      this.metrics = metrics;
      this.error = null;
      return true;
    } catch (err) {
      this.error = message(err);
      return false;
    } finally {
      this.pending = false;
      this.notify();
    }
  }

  /** Masking probe; refreshes metrics so the history entry shows up. */
  async maskProbe(spec: MaskRequest): Promise<boolean> {
    if (this.pending) return false;
    this.pending = true;
    this.notify();
    try {
      this.lastMask = await this.api.mask(spec);
      this.metrics = await this.api.getMetrics();
      this.error = null;
      return true;
    } catch (err) {
      this.error = message(err);
      return false;
    } finally {
      this.pending = false;
      this.notify();
    }
  }
}
