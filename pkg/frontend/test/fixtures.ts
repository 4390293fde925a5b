/** Shared fixture documents shaped like real service responses. */

import type { GraphDoc, PosteriorSummary, SummaryEdge } from '../src/types.js';

export const PREDICTORS = ['PE', 'EE', 'SI', 'FC', 'HM', 'HB', 'TC', 'PI', 'CT', 'TR'];

export function fixtureGraph(): GraphDoc {
  const constructs = PREDICTORS.map((id) => ({
    id,
    name: id,
    role: 'predictor' as const,
    theory: 'utaut',
  }));
  constructs.push({ id: 'BI', name: 'Behavioral Intention', role: 'intention' as any, theory: 'outcome' });
  constructs.push({ id: 'USE', name: 'Actual Use', role: 'use' as any, theory: 'outcome' });
  const edges = PREDICTORS.map((id) => ({ from: id, to: 'BI', theory: 'utaut' }));
  edges.push({ from: 'BI', to: 'USE', theory: 'utaut' });
  edges.push({ from: 'FC', to: 'USE', theory: 'utaut' });
  edges.push({ from: 'HB', to: 'USE', theory: 'utaut2' });
  return { v: 1, scale: { min: 1, max: 7 }, constructs, items: [], edges };
}

export function fixtureSummary(overrides: Partial<PosteriorSummary> = {}): PosteriorSummary {
  const edges: SummaryEdge[] = [];
  for (const id of PREDICTORS) {
    const mean = id === 'TC' ? 0.6 : id === 'CT' ? -0.05 : 0.15;
    const ci: [number, number] =
      id === 'TC' ? [0.5, 0.7] : id === 'CT' ? [-0.15, 0.05] : [0.05, 0.25];
    edges.push({ from: id, to: 'BI', theory: 'utaut', coef: { mean, ci90: ci } });
  }
  edges.push({ from: 'BI', to: 'USE', theory: 'utaut', coef: { mean: 0.7, ci90: [0.6, 0.8] } });
  edges.push({ from: 'FC', to: 'USE', theory: 'utaut', coef: { mean: 0.1, ci90: [0.02, 0.18] } });
  edges.push({ from: 'HB', to: 'USE', theory: 'utaut2', coef: { mean: 0.2, ci90: [0.1, 0.3] } });

  const constructMeans: Record<string, number> = {};
  for (const id of [...PREDICTORS, 'BI', 'USE']) constructMeans[id] = 4.1;
  constructMeans['TC'] = 3.1;
  constructMeans['FC'] = 3.3;
  constructMeans['CT'] = 3.2; // low but uncertain edge: not a candidate

  return {
    v: 1,
    posteriorId: 'fixture-posterior',
    parameters: [],
    edges,
    constructMeans,
    scale: { min: 1, max: 7 },
    diagnostics: { rhatMax: 1.01, essMin: 400, converged: true, acceptanceRates: [0.3], degenerate: [] },
    respondents: 200,
    ...overrides,
  };
}
