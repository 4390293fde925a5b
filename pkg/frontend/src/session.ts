/**
 * Single-user session state: the selected posterior, scenario drafts,
 * and an append-only decision log.  The seed is fixed per session so
 * repeated identical queries render identical distributions.
 */

import type { DecisionLogEntry, GraphDoc, PosteriorSummary, ScenarioDraft } from './types.js';

export class UiSession {
  posteriorId: string | null = null;
  summary: PosteriorSummary | null = null;
  graph: GraphDoc | null = null;
  readonly seed: number;
  draft: ScenarioDraft = { name: 'draft', set: {} };
  pinned: ScenarioDraft[] = [];
  private log: DecisionLogEntry[] = [];

  constructor(seed = 2718) {
    this.seed = seed;
  }

  get decisionLog(): readonly DecisionLogEntry[] {
    return this.log;
  }

  appendLog(entry: DecisionLogEntry): void {
    // append-only: no removal or mutation API exists
    this.log.push(entry);
  }

  /** Drafts must reference predictor constructs known to the graph. */
  validateDraft(draft: ScenarioDraft): string[] {
    const problems: string[] = [];
    if (!this.graph) return ['graph not loaded'];
    const roles = new Map(this.graph.constructs.map((c) => [c.id, c.role]));
    for (const [constructId, intervention] of Object.entries(draft.set)) {
      const role = roles.get(constructId);
      if (role === undefined) problems.push(`unknown construct ${constructId}`);
      else if (role !== 'predictor') problems.push(`${constructId} is not a predictor`);
      if (intervention.scale === 'raw') {
        const { min, max } = this.graph.scale;
        if (intervention.value < min || intervention.value > max) {
          problems.push(`${constructId}=${intervention.value} outside scale [${min}, ${max}]`);
        }
      }
    }
    return problems;
  }

  setPosterior(posteriorId: string, summary: PosteriorSummary): void {
    this.posteriorId = posteriorId;
    this.summary = summary;
  }

  pinDraft(name: string): ScenarioDraft {
    const copy: ScenarioDraft = { name, set: { ...this.draft.set } };
    if (this.pinned.some((s) => s.name === name)) {
      throw new Error(`scenario name ${name} already pinned`);
    }
    this.pinned.push(copy);
    return copy;
  }
}

/** Serialize a draft to exactly the service scenario schema. */
export function scenarioToWire(draft: ScenarioDraft): ScenarioDraft {
  const set: ScenarioDraft['set'] = {};
  for (const [constructId, intervention] of Object.entries(draft.set)) {
    set[constructId] = { value: intervention.value, scale: intervention.scale };
  }
  return { name: draft.name, set };
}
