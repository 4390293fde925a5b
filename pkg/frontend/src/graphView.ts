/**
 * Acceptance-graph rendering: predictors in a left column, BI centre,
 * USE right.  Edge thickness tracks the posterior coefficient magnitude;
 * an edge whose 90% interval spans zero is styled "uncertain".
 * Constructs whose raw-score mean sits below the threshold are
 * highlighted, and those that are both low-scoring and high-impact are
 * listed in the intervention-candidates panel.
 */

import { fmt, fmtInterval } from './format.js';
import type { PosteriorSummary, SummaryEdge } from './types.js';

export interface ModelViewOptions {
  lowScoreThreshold?: number; // raw-scale mean below this counts as "low"
  highImpactThreshold?: number; // |coef mean| at or above this counts as "high impact"
}

export interface CandidateRow {
  constructId: string;
  mean: number;
  coef: number;
  edge: string;
}

const SVG_NS = 'http://www.w3.org/2000/svg';
const WIDTH = 760;
const HEIGHT = 560;
const NODE_W = 130;
const NODE_H = 34;

function svgEl<K extends keyof SVGElementTagNameMap>(tag: K): SVGElementTagNameMap[K] {
  return document.createElementNS(SVG_NS, tag);
}

function nodePositions(predictors: string[]): Map<string, { x: number; y: number }> {
  const pos = new Map<string, { x: number; y: number }>();
  const step = (HEIGHT - 60) / Math.max(predictors.length - 1, 1);
  predictors.forEach((id, i) => pos.set(id, { x: 90, y: 30 + i * step }));
  pos.set('BI', { x: 420, y: HEIGHT / 2 });
  pos.set('USE', { x: 650, y: HEIGHT / 2 + 80 });
  return pos;
}

export function edgeIsUncertain(edge: SummaryEdge): boolean {
  const [lo, hi] = edge.coef.ci90;
  return lo <= 0 && hi >= 0;
}

export function edgeThickness(edge: SummaryEdge): number {
  return Math.max(1, Math.min(10, Math.abs(edge.coef.mean) * 12));
}

export function interventionCandidates(
  summary: PosteriorSummary,
  options: ModelViewOptions = {},
): CandidateRow[] {
  const low = options.lowScoreThreshold ?? 3.5;
  const high = options.highImpactThreshold ?? 0.3;
  const rows: CandidateRow[] = [];
  const predictorIds = new Set(
    summary.edges.filter((e) => e.to === 'BI' || e.to === 'USE').map((e) => e.from),
  );
  predictorIds.delete('BI');
  for (const constructId of predictorIds) {
    const mean = summary.constructMeans[constructId];
    if (mean === undefined || mean >= low) continue;
    let best: SummaryEdge | null = null;
    for (const edge of summary.edges) {
      if (edge.from !== constructId) continue;
      if (!best || Math.abs(edge.coef.mean) > Math.abs(best.coef.mean)) best = edge;
    }
    if (best && Math.abs(best.coef.mean) >= high && !edgeIsUncertain(best)) {
      rows.push({
        constructId,
        mean,
        coef: best.coef.mean,
        edge: `${best.from}->${best.to}`,
      });
    }
  }
  rows.sort((a, b) => Math.abs(b.coef) - Math.abs(a.coef));
  return rows;
}

export function renderModelView(
  container: HTMLElement,
  summary: PosteriorSummary,
  options: ModelViewOptions = {},
): void {
  const low = options.lowScoreThreshold ?? 3.5;
  container.textContent = '';

  const svg = svgEl('svg');
  svg.setAttribute('viewBox', `0 0 ${WIDTH} ${HEIGHT}`);
  svg.setAttribute('class', 'model-graph');
  svg.setAttribute('role', 'img');

  const predictorIds = [
    ...new Set(summary.edges.filter((e) => e.to === 'BI' && e.from !== 'BI').map((e) => e.from)),
  ];
  const pos = nodePositions(predictorIds);

  for (const edge of summary.edges) {
    const from = pos.get(edge.from);
    const to = pos.get(edge.to);
    if (!from || !to) continue;
    const line = svgEl('line');
    line.setAttribute('x1', String(from.x + NODE_W / 2));
    line.setAttribute('y1', String(from.y));
    line.setAttribute('x2', String(to.x - NODE_W / 2));
    line.setAttribute('y2', String(to.y));
    line.setAttribute('stroke-width', String(edgeThickness(edge)));
    line.setAttribute('stroke', edge.coef.mean >= 0 ? '#2a6fb0' : '#c0392b');
    const uncertain = edgeIsUncertain(edge);
    line.setAttribute('class', uncertain ? 'edge uncertain' : 'edge');
    if (uncertain) line.setAttribute('stroke-dasharray', '6 4');
    line.dataset.edge = `${edge.from}->${edge.to}`;
    line.dataset.coefMean = fmt(edge.coef.mean);
    const title = svgEl('title');
    title.textContent = `${edge.from} -> ${edge.to}: ${fmt(edge.coef.mean)} ${fmtInterval(edge.coef.ci90)}`;
    line.appendChild(title);
    svg.appendChild(line);
  }

  for (const [id, point] of pos) {
    const group = svgEl('g');
    group.setAttribute('class', 'node');
    group.dataset.construct = id;
    const mean = summary.constructMeans[id];
    const isLow = mean !== undefined && mean < low;
    const rect = svgEl('rect');
    rect.setAttribute('x', String(point.x - NODE_W / 2));
    rect.setAttribute('y', String(point.y - NODE_H / 2));
    rect.setAttribute('width', String(NODE_W));
    rect.setAttribute('height', String(NODE_H));
    rect.setAttribute('rx', '6');
    rect.setAttribute('class', isLow ? 'node-box low-score' : 'node-box');
    group.appendChild(rect);
    const label = svgEl('text');
    label.setAttribute('x', String(point.x));
    label.setAttribute('y', String(point.y - 2));
    label.setAttribute('text-anchor', 'middle');
    label.textContent = id;
    group.appendChild(label);
    if (mean !== undefined) {
      const meanText = svgEl('text');
      meanText.setAttribute('x', String(point.x));
      meanText.setAttribute('y', String(point.y + 13));
      meanText.setAttribute('text-anchor', 'middle');
      meanText.setAttribute('class', 'node-mean');
      meanText.textContent = fmt(mean, 2);
      group.appendChild(meanText);
    }
    svg.appendChild(group);
  }
  container.appendChild(svg);

  // coefficient list with interval whiskers rendered as text
  const coefList = document.createElement('ul');
  coefList.className = 'coef-list';
  for (const edge of summary.edges) {
    const item = document.createElement('li');
    item.dataset.edge = `${edge.from}->${edge.to}`;
    item.textContent = `${edge.from} -> ${edge.to}: ${fmt(edge.coef.mean)} ${fmtInterval(edge.coef.ci90)}${
      edgeIsUncertain(edge) ? ' (uncertain)' : ''
    }`;
    coefList.appendChild(item);
  }
  container.appendChild(coefList);

  const panel = document.createElement('div');
  panel.className = 'candidates-panel';
  const heading = document.createElement('h3');
  heading.textContent = 'Intervention candidates';
  panel.appendChild(heading);
  const rows = interventionCandidates(summary, options);
  if (rows.length === 0) {
    const none = document.createElement('p');
    none.textContent = 'No low-scoring high-impact constructs.';
    panel.appendChild(none);
  } else {
    const list = document.createElement('ul');
    for (const row of rows) {
      const item = document.createElement('li');
      item.dataset.candidate = row.constructId;
      item.textContent = `${row.constructId}: raw mean ${fmt(row.mean, 2)}, effect ${fmt(row.coef)} via ${row.edge}`;
      list.appendChild(item);
    }
    panel.appendChild(list);
  }
  container.appendChild(panel);
}
