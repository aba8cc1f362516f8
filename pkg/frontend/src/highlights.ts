/** Segmentation of a tutor reply into in-list / out-of-list runs.
 *
 * Span offsets from the API are code-point indices (the server indexes by
 * character, not UTF-16 unit), so segmentation works over a code-point array
 * and re-joins — this keeps astral-plane characters from shifting offsets.
 */

export interface Span {
  start: number;
  end: number;
  char: string;
}

export interface Segment {
  text: string;
  out: boolean;
}

/** Split `text` at span boundaries. Concatenating the segments in order
 *  always reproduces `text` exactly; `out` marks out-of-list runs. */
export function segmentText(text: string, spans: Span[]): Segment[] {
  const points = Array.from(text);
  const sorted = [...spans].sort((a, b) => a.start - b.start);
  const segments: Segment[] = [];
  let cursor = 0;
  for (const span of sorted) {
    if (span.start < cursor || span.end > points.length || span.end <= span.start) {
      throw new Error(`invalid span ${span.start}..${span.end}`);
    }
    if (span.start > cursor) {
      segments.push({ text: points.slice(cursor, span.start).join(""), out: false });
    }
    const run = points.slice(span.start, span.end).join("");
    if (run !== span.char) {
      throw new Error(`span text mismatch at ${span.start}: ${run} != ${span.char}`);
    }
    segments.push({ text: run, out: true });
    cursor = span.end;
  }
  if (cursor < points.length) {
    segments.push({ text: points.slice(cursor).join(""), out: false });
  }
  return segments;
}

/** Render segments to HTML, escaping everything and wrapping out-of-list
 *  runs in <mark class="oov">. */
export function renderHighlights(text: string, spans: Span[]): string {
  return segmentText(text, spans)
    .map((s) => (s.out ? `<mark class="oov">${escapeHtml(s.text)}</mark>` : escapeHtml(s.text)))
    .join("");
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}
