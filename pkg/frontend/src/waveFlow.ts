/**
 * Wave-update flow: upload a new survey wave, compress the current
 * posterior into a chained prior, refit, poll to completion, then swap
 * the session posterior and append a decision-log entry.  The server
 * enforces instrument compatibility (409 on mismatch).
 */

import { ApiClient, ApiError } from './api.js';
import { UiSession } from './session.js';

export interface WaveUpdateResult {
  posteriorId: string;
  datasetId: string;
  priorId: string;
}

export async function runWaveUpdate(
  session: UiSession,
  api: ApiClient,
  csvContent: string,
  samplerConfig?: Record<string, number>,
): Promise<WaveUpdateResult> {
  if (!session.posteriorId) throw new Error('no posterior selected');
  const upload = await api.uploadDataset(csvContent, 'csv');
  const { priorId } = await api.compress(session.posteriorId);
  const { jobId } = await api.submitFit(upload.datasetId, priorId, samplerConfig);
  const job = await api.pollJob(jobId);
  if (job.status !== 'done' || !job.posteriorId) {
    throw new ApiError(500, job.error ?? 'fit job failed');
  }
  const summary = await api.getSummary(job.posteriorId);
  session.setPosterior(job.posteriorId, summary);
  session.appendLog({
    at: new Date().toISOString(),
    kind: 'model-updated',
    note: `model updated: wave of ${upload.respondents} respondents, chained prior ${priorId.slice(0, 8)}, posterior ${job.posteriorId.slice(0, 8)}`,
  });
  return { posteriorId: job.posteriorId, datasetId: upload.datasetId, priorId };
}

/** Human-facing explanation for wave-update failures. */
export function explainWaveError(error: unknown): string {
  if (error instanceof ApiError) {
    if (error.status === 409) {
      return `instrument or graph mismatch: ${error.detail} (the new wave must use the same questionnaire)`;
    }
    if (error.status === 422) {
      return `the uploaded wave failed validation: ${error.detail}`;
    }
    return error.message;
  }
  return error instanceof Error ? error.message : String(error);
}
