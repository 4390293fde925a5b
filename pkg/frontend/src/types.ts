/**
 * Wire types mirroring the service's JSON schemas (v1).
 * The UI renders these verbatim; it never derives statistics of its own.
 */

export interface ScaleDoc {
  min: number;
  max: number;
}

export interface ConstructDoc {
  id: string;
  name: string;
  definition?: string;
  role: 'predictor' | 'intention' | 'use';
  theory: string;
}

export interface EdgeDoc {
  from: string;
  to: string;
  theory: string;
}

export interface GraphDoc {
  v: number;
  scale: ScaleDoc;
  constructs: ConstructDoc[];
  items: { id: string; construct: string; reverse: boolean; prompt: string }[];
  edges: EdgeDoc[];
}

export interface ParameterStat {
  name: string;
  mean: number;
  sd: number;
  ci90: [number, number];
  rhat: number | null;
  ess: number | null;
}

export interface SummaryEdge {
  from: string;
  to: string;
  theory: string;
  coef: { mean: number; ci90: [number, number] };
}

export interface PosteriorSummary {
  v: number;
  posteriorId: string;
  parameters: ParameterStat[];
  edges: SummaryEdge[];
  constructMeans: Record<string, number>;
  scale: ScaleDoc;
  diagnostics: {
    rhatMax: number | null;
    essMin: number | null;
    converged: boolean;
    acceptanceRates: number[];
    degenerate: string[];
  };
  respondents: number;
}

export interface InterventionDraft {
  value: number;
  scale: 'raw' | 'z';
}

/** Serializes to exactly the service scenario schema. */
export interface ScenarioDraft {
  name: string;
  set: Record<string, InterventionDraft>;
}

export interface PredictiveSummaryDoc {
  target: string;
  mean: number;
  sd: number;
  ci90: [number, number];
  drawCount: number;
  scenario: string;
}

export interface SimulateResponse {
  v: number;
  scenario: string;
  targets: Record<string, PredictiveSummaryDoc>;
}

export interface RankedScenarioDoc {
  scenario: string;
  gain: number;
  gainCi90: [number, number];
  probImprove: number;
  use: PredictiveSummaryDoc;
  bi: PredictiveSummaryDoc;
}

export interface RankResponse {
  v: number;
  baseline: Record<string, PredictiveSummaryDoc>;
  ranking: RankedScenarioDoc[];
  posteriorId?: string;
}

export interface DatasetUploadResponse {
  v: number;
  datasetId: string;
  respondents: number;
  instrumentHash: string;
  warnings: string[];
}

export interface JobRecord {
  v: number;
  jobId: string;
  kind: 'fit';
  status: 'queued' | 'running' | 'done' | 'failed';
  submitted: string;
  finished: string | null;
  posteriorId: string | null;
  error: string | null;
}

export interface DecisionLogEntry {
  at: string;
  kind: 'scenario' | 'model-updated' | 'note';
  note: string;
  scenario?: ScenarioDraft;
  snapshot?: { gain: number; probImprove: number };
}

export interface ServiceError {
  v: number;
  error: string;
}
