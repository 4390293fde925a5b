/**
 * Comparison tray: pinned scenarios side by side, backed by one /rank
 * call so gains and probability-of-improvement come from the service.
 */

import { ApiClient } from './api.js';
import { fmt, fmtPercent, fmtSigned } from './format.js';
import { UiSession, scenarioToWire } from './session.js';
import type { RankResponse } from './types.js';

export interface Tray {
  element: HTMLElement;
  pinCurrentDraft(name: string): Promise<RankResponse | null>;
  refresh(): Promise<RankResponse | null>;
  last(): RankResponse | null;
}

export function createTray(
  container: HTMLElement,
  session: UiSession,
  api: ApiClient,
  onError?: (message: string) => void,
): Tray {
  const root = document.createElement('div');
  root.className = 'tray';
  const heading = document.createElement('h3');
  heading.textContent = 'Scenario comparison';
  root.appendChild(heading);
  const body = document.createElement('div');
  body.dataset.role = 'tray-body';
  root.appendChild(body);
  container.appendChild(root);
  let lastResponse: RankResponse | null = null;

  function render(response: RankResponse): void {
    body.textContent = '';
    const baseline = response.baseline['USE'];
    if (baseline) {
      const base = document.createElement('p');
      base.dataset.field = 'tray-baseline';
      base.textContent = `baseline USE mean ${fmt(baseline.mean)}`;
      body.appendChild(base);
    }
    const table = document.createElement('table');
    table.className = 'tray-table';
    const head = document.createElement('tr');
    for (const column of ['scenario', 'USE gain', 'P(improve)', 'USE mean']) {
      const th = document.createElement('th');
      th.textContent = column;
      head.appendChild(th);
    }
    table.appendChild(head);
    for (const entry of response.ranking) {
      const tr = document.createElement('tr');
      tr.dataset.scenario = entry.scenario;
      const cells = [
        entry.scenario,
        fmtSigned(entry.gain),
        fmtPercent(entry.probImprove),
        fmt(entry.use.mean),
      ];
      cells.forEach((text, i) => {
        const td = document.createElement('td');
        td.dataset.col = String(i);
        td.textContent = text;
        tr.appendChild(td);
      });
      table.appendChild(tr);
    }
    body.appendChild(table);
  }

  async function refresh(): Promise<RankResponse | null> {
    if (!session.posteriorId || session.pinned.length === 0) return null;
    try {
      const response = await api.rank(
        session.posteriorId,
        session.pinned.map(scenarioToWire),
        1,
        session.seed,
      );
      lastResponse = response;
      render(response);
      return response;
    } catch (error) {
      onError?.(error instanceof Error ? error.message : String(error));
      return null;
    }
  }

  return {
    element: root,
    async pinCurrentDraft(name: string): Promise<RankResponse | null> {
      const pinnedScenario = session.pinDraft(name);
      const response = await refresh();
      if (response) {
        const entry = response.ranking.find((r) => r.scenario === pinnedScenario.name);
        session.appendLog({
          at: new Date().toISOString(),
          kind: 'scenario',
          note: `pinned scenario ${name}`,
          scenario: pinnedScenario,
          snapshot: entry ? { gain: entry.gain, probImprove: entry.probImprove } : undefined,
        });
      }
      return response;
    },
    refresh,
    last: () => lastResponse,
  };
}
