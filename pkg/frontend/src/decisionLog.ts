/**
 * Decision log rendering: the append-only record of what the session's
 * human saw and decided.
 */

import { fmtPercent, fmtSigned } from './format.js';
import { UiSession } from './session.js';

export function renderDecisionLog(container: HTMLElement, session: UiSession): void {
  container.textContent = '';
  const heading = document.createElement('h3');
  heading.textContent = 'Decision log';
  container.appendChild(heading);
  const list = document.createElement('ol');
  list.className = 'decision-log';
  for (const entry of session.decisionLog) {
    const item = document.createElement('li');
    item.dataset.kind = entry.kind;
    let text = `${entry.at} — ${entry.note}`;
    if (entry.snapshot) {
      text += ` (gain ${fmtSigned(entry.snapshot.gain)}, P(improve) ${fmtPercent(entry.snapshot.probImprove)})`;
    }
    item.textContent = text;
    list.appendChild(item);
  }
  container.appendChild(list);
}
