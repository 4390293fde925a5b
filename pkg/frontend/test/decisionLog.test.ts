/** Decision log rendering and API error mapping. */

import { describe, expect, it } from 'vitest';

import { ApiClient, ApiError } from '../src/api.js';
import { renderDecisionLog } from '../src/decisionLog.js';
import { UiSession } from '../src/session.js';
import { explainWaveError } from '../src/waveFlow.js';

describe('decision log', () => {
  it('renders entries in insertion order with snapshots', () => {
    const session = new UiSession();
    session.appendLog({ at: '2026-01-01T00:00:00Z', kind: 'scenario', note: 'pinned scenario a', snapshot: { gain: 0.42, probImprove: 0.9 } });
    session.appendLog({ at: '2026-01-02T00:00:00Z', kind: 'model-updated', note: 'model updated: wave of 50' });
    const host = document.createElement('div');
    renderDecisionLog(host, session);
    const items = [...host.querySelectorAll('li')];
    expect(items.length).toBe(2);
    expect(items[0]!.textContent).toContain('pinned scenario a');
    expect(items[0]!.textContent).toContain('+0.420');
    expect(items[1]!.dataset.kind).toBe('model-updated');
  });
});

describe('api error handling', () => {
  it('maps service error bodies onto ApiError', async () => {
    const fetchImpl = (async () =>
      new Response(JSON.stringify({ v: 1, error: 'dataset zzz not found' }), {
        status: 404,
      })) as unknown as typeof fetch;
    const api = new ApiClient('http://svc', fetchImpl);
    await expect(api.getSummary('zzz')).rejects.toMatchObject({ status: 404, detail: 'dataset zzz not found' });
  });

  it('records traffic for successful and failed calls', async () => {
    let call = 0;
    const fetchImpl = (async () => {
      call += 1;
      return call === 1
        ? new Response(JSON.stringify({ v: 1, jobId: 'j1' }), { status: 200 })
        : new Response(JSON.stringify({ v: 1, error: 'queue full' }), { status: 503 });
    }) as unknown as typeof fetch;
    const api = new ApiClient('http://svc', fetchImpl);
    await api.submitFit('d1');
    await expect(api.submitFit('d2')).rejects.toBeInstanceOf(ApiError);
    expect(api.traffic.length).toBe(2);
    expect(api.traffic[1]!.status).toBe(503);
  });

  it('explains wave-flow failures in user terms', () => {
    expect(explainWaveError(new ApiError(409, 'chained prior was compressed under a different instrument'))).toContain(
      'same questionnaire',
    );
    expect(explainWaveError(new ApiError(422, 'row 3: unknown item id'))).toContain('failed validation');
    expect(explainWaveError(new Error('boom'))).toBe('boom');
  });
});
