/**
 * Typed client for the uptake HTTP service.
 *
 * Every response body is appended to a traffic log; end-to-end tests use
 * it to prove that each number the UI displays came from the service
 * rather than from local computation.
 */

import type {
  DatasetUploadResponse,
  GraphDoc,
  JobRecord,
  PosteriorSummary,
  RankResponse,
  ScenarioDraft,
  SimulateResponse,
} from './types.js';

export interface TrafficRecord {
  method: string;
  url: string;
  status: number;
  body: unknown;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`${status}: ${detail}`);
  }
}

export class ApiClient {
  readonly traffic: TrafficRecord[] = [];

  constructor(
    private baseUrl: string,
    private fetchImpl: typeof fetch = fetch,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const url = `${this.baseUrl}${path}`;
    const response = await this.fetchImpl(url, {
      method,
      headers: body === undefined ? {} : { 'content-type': 'application/json' },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    let parsed: unknown = null;
    const text = await response.text();
    try {
      parsed = text ? JSON.parse(text) : null;
    } catch {
      parsed = text;
    }
    this.traffic.push({ method, url, status: response.status, body: parsed });
    if (!response.ok) {
      const detail =
        parsed && typeof parsed === 'object' && 'error' in parsed
          ? String((parsed as { error: unknown }).error)
          : response.statusText;
      throw new ApiError(response.status, detail);
    }
    return parsed as T;
  }

  getGraph(): Promise<GraphDoc> {
    return this.request('GET', '/model/graph');
  }

  uploadDataset(content: string, format: 'csv' | 'json' = 'csv'): Promise<DatasetUploadResponse> {
    return this.request('POST', '/datasets', { v: 1, content, format });
  }

  submitFit(datasetId: string, priorId?: string, samplerConfig?: Record<string, number>): Promise<{ jobId: string }> {
    return this.request('POST', '/jobs/fit', { v: 1, datasetId, priorId, samplerConfig });
  }

  getJob(jobId: string): Promise<JobRecord> {
    return this.request('GET', `/jobs/${jobId}`);
  }

  async pollJob(jobId: string, intervalMs = 250, timeoutMs = 300_000): Promise<JobRecord> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const record = await this.getJob(jobId);
      if (record.status === 'done' || record.status === 'failed') return record;
      if (Date.now() > deadline) throw new ApiError(408, `job ${jobId} timed out`);
      await new Promise((resolve) => setTimeout(resolve, intervalMs));
    }
  }

  getSummary(posteriorId: string): Promise<PosteriorSummary> {
    return this.request('GET', `/posteriors/${posteriorId}/summary`);
  }

  simulate(posteriorId: string, scenario: ScenarioDraft, draws = 1, seed = 0): Promise<SimulateResponse> {
    return this.request('POST', '/simulate', { v: 1, posteriorId, scenario, draws, seed });
  }

  rank(posteriorId: string, scenarios: ScenarioDraft[], draws = 1, seed = 0): Promise<RankResponse> {
    return this.request('POST', '/rank', { v: 1, posteriorId, scenarios, draws, seed });
  }

  compress(posteriorId: string): Promise<{ priorId: string }> {
    return this.request('POST', `/posteriors/${posteriorId}/compress`);
  }
}
