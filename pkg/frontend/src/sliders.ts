/**
 * What-if slider panel: one slider per predictor construct on the raw
 * Likert scale, population mean marked.  Changes debounce into a
 * /simulate call (distribution cards) plus a /rank call (expected USE
 * gain and probability of improvement); stale responses are discarded by
 * request sequence number.
 */

import { ApiClient } from './api.js';
import { fmt, fmtInterval, fmtPercent, fmtSigned } from './format.js';
import { UiSession, scenarioToWire } from './session.js';
import type { PredictiveSummaryDoc, RankResponse, SimulateResponse } from './types.js';

export const DEBOUNCE_MS = 300;

export interface SliderPanel {
  element: HTMLElement;
  /** set a slider programmatically (same path as user input) */
  setValue(constructId: string, value: number | null): void;
  /** resolves after the in-flight debounced refresh settles */
  flush(): Promise<void>;
  lastDisplayed(): { simulate: SimulateResponse | null; rank: RankResponse | null };
}

interface Deps {
  session: UiSession;
  api: ApiClient;
  onError?: (message: string) => void;
  debounceMs?: number;
}

export function createSliderPanel(container: HTMLElement, deps: Deps): SliderPanel {
  const { session, api } = deps;
  const debounceMs = deps.debounceMs ?? DEBOUNCE_MS;
  if (!session.summary || !session.graph) throw new Error('load a posterior before building sliders');
  const summary = session.summary;
  const scale = summary.scale;

  const root = document.createElement('div');
  root.className = 'slider-panel';
  container.appendChild(root);

  const predictors = session.graph.constructs.filter((c) => c.role === 'predictor');
  const sliders = new Map<string, HTMLInputElement>();
  const actives = new Map<string, HTMLInputElement>();

  let seq = 0;
  let rendered = 0;
  let timer: ReturnType<typeof setTimeout> | null = null;
  let inFlight: Promise<void> = Promise.resolve();
  let lastSimulate: SimulateResponse | null = null;
  let lastRank: RankResponse | null = null;

  const cards = document.createElement('div');
  cards.className = 'prediction-cards';

  function card(target: string, doc: PredictiveSummaryDoc, baselineDoc: PredictiveSummaryDoc | null): HTMLElement {
    const el = document.createElement('div');
    el.className = 'card';
    el.dataset.target = target;
    const title = document.createElement('h4');
    title.textContent = target;
    el.appendChild(title);
    const mean = document.createElement('p');
    mean.dataset.field = 'mean';
    mean.textContent = `mean ${fmt(doc.mean)} · 90% ${fmtInterval(doc.ci90)}`;
    el.appendChild(mean);
    if (baselineDoc) {
      const base = document.createElement('p');
      base.dataset.field = 'baseline';
      base.className = 'baseline-line';
      base.textContent = `baseline ${fmt(baselineDoc.mean)} · 90% ${fmtInterval(baselineDoc.ci90)}`;
      el.appendChild(base);
    }
    return el;
  }

  const gainLine = document.createElement('p');
  gainLine.className = 'gain-line';
  gainLine.dataset.field = 'gain';
  gainLine.textContent = 'move a slider to simulate';

  async function refresh(currentSeq: number): Promise<void> {
    const draft = scenarioToWire(session.draft);
    const problems = session.validateDraft(draft);
    if (problems.length > 0) {
      deps.onError?.(problems.join('; '));
      return;
    }
    if (!session.posteriorId) return;
    try {
      const [sim, ranked] = await Promise.all([
        api.simulate(session.posteriorId, draft, 1, session.seed),
        api.rank(session.posteriorId, [draft], 1, session.seed),
      ]);
      if (currentSeq < rendered) return; // a newer request already rendered
      rendered = currentSeq;
      lastSimulate = sim;
      lastRank = ranked;
      cards.textContent = '';
      for (const target of Object.keys(sim.targets).sort()) {
        const doc = sim.targets[target]!;
        cards.appendChild(card(target, doc, ranked.baseline[target] ?? null));
      }
      const top = ranked.ranking[0];
      if (top) {
        gainLine.textContent = `expected USE gain ${fmtSigned(top.gain)} · P(improve) ${fmtPercent(top.probImprove)}`;
      }
    } catch (error) {
      deps.onError?.(error instanceof Error ? error.message : String(error));
    }
  }

  function schedule(): void {
    if (timer !== null) clearTimeout(timer);
    const ticket = ++seq;
    timer = setTimeout(() => {
      timer = null;
      inFlight = refresh(ticket);
    }, debounceMs);
  }

  function applySlider(constructId: string, value: number | null): void {
    if (value === null) {
      delete session.draft.set[constructId];
    } else {
      session.draft.set[constructId] = { value, scale: 'raw' };
    }
    schedule();
  }

  for (const construct of predictors) {
    const row = document.createElement('div');
    row.className = 'slider-row';
    row.dataset.construct = construct.id;

    const label = document.createElement('label');
    label.textContent = construct.id;
    label.title = construct.name;
    row.appendChild(label);

    const active = document.createElement('input');
    active.type = 'checkbox';
    active.dataset.role = 'active';
    row.appendChild(active);
    actives.set(construct.id, active);

    const slider = document.createElement('input');
    slider.type = 'range';
    slider.min = String(scale.min);
    slider.max = String(scale.max);
    slider.step = '0.5';
    const popMean = summary.constructMeans[construct.id];
    slider.value = popMean !== undefined ? String(popMean) : String((scale.min + scale.max) / 2);
    slider.disabled = true;
    row.appendChild(slider);
    sliders.set(construct.id, slider);

    const meanMark = document.createElement('span');
    meanMark.className = 'pop-mean';
    meanMark.dataset.field = 'pop-mean';
    meanMark.textContent = popMean !== undefined ? `pop ${fmt(popMean, 2)}` : '';
    row.appendChild(meanMark);

    const valueOut = document.createElement('output');
    valueOut.textContent = slider.value;
    row.appendChild(valueOut);

    active.addEventListener('change', () => {
      slider.disabled = !active.checked;
      applySlider(construct.id, active.checked ? Number(slider.value) : null);
    });
    slider.addEventListener('input', () => {
      valueOut.textContent = slider.value;
      if (active.checked) applySlider(construct.id, Number(slider.value));
    });

    root.appendChild(row);
  }

  root.appendChild(gainLine);
  root.appendChild(cards);

  return {
    element: root,
    setValue(constructId: string, value: number | null): void {
      const slider = sliders.get(constructId);
      const active = actives.get(constructId);
      if (!slider || !active) throw new Error(`no slider for ${constructId}`);
      if (value === null) {
        active.checked = false;
        slider.disabled = true;
      } else {
        active.checked = true;
        slider.disabled = false;
        slider.value = String(value);
      }
      applySlider(constructId, value);
    },
    async flush(): Promise<void> {
      if (timer !== null) {
        clearTimeout(timer);
        timer = null;
        inFlight = refresh(seq);
      }
      await inFlight;
    },
    lastDisplayed() {
      return { simulate: lastSimulate, rank: lastRank };
    },
  };
}
