/**
 * Formatting of service-supplied numbers.  These helpers are the only
 * path from response values to displayed text, so the traffic log can
 * vouch for every digit on screen.
 */

export function fmt(value: number, digits = 3): string {
  if (!Number.isFinite(value)) return '—';
  return value.toFixed(digits);
}

export function fmtSigned(value: number, digits = 3): string {
  if (!Number.isFinite(value)) return '—';
  const text = Math.abs(value).toFixed(digits);
  return value < 0 ? `-${text}` : `+${text}`;
}

export function fmtInterval(interval: [number, number], digits = 3): string {
  return `[${fmt(interval[0], digits)}, ${fmt(interval[1], digits)}]`;
}

export function fmtPercent(fraction: number): string {
  if (!Number.isFinite(fraction)) return '—';
  return `${(fraction * 100).toFixed(1)}%`;
}
