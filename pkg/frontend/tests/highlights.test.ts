import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { renderHighlights, segmentText, Span } from "../src/highlights.js";

const fixture = JSON.parse(readFileSync(
  join(dirname(fileURLToPath(import.meta.url)), "fixtures", "email_annotation.json"),
  "utf-8",
)) as { reply: string; spans: Span[]; deviation: { out_unique: string[] } };

describe("segmentText", () => {
  it("reproduces the API reply losslessly on the email fixture", () => {
    const segments = segmentText(fixture.reply, fixture.spans);
    expect(segments.map((s) => s.text).join("")).toBe(fixture.reply);
  });

  it("marks exactly the spanned characters as out-of-list", () => {
    const segments = segmentText(fixture.reply, fixture.spans);
    const out = segments.filter((s) => s.out);
    expect(out.length).toBe(fixture.spans.length);
    expect(out.map((s) => s.text)).toEqual(fixture.spans.map((s) => s.char));
    const unique = [...new Set(out.map((s) => s.text))].sort();
    expect(unique).toEqual([...fixture.deviation.out_unique].sort());
  });

  it("is lossless on arbitrary spans over code points", () => {
    const text = "abc\u{20000}你好x愉";
    const points = Array.from(text);
    const spans: Span[] = [
      { start: 3, end: 4, char: "\u{20000}" },
      { start: 7, end: 8, char: "愉" },
    ];
    const segments = segmentText(text, spans);
    expect(segments.map((s) => s.text).join("")).toBe(text);
    expect(segments.filter((s) => s.out).map((s) => s.text))
      .toEqual(spans.map((s) => points.slice(s.start, s.end).join("")));
  });

  it("handles empty span list and empty text", () => {
    expect(segmentText("hello", [])).toEqual([{ text: "hello", out: false }]);
    expect(segmentText("", [])).toEqual([]);
  });

  it("rejects inconsistent spans", () => {
    expect(() => segmentText("你好", [{ start: 0, end: 1, char: "好" }])).toThrow();
    expect(() => segmentText("你好", [{ start: 1, end: 3, char: "好" }])).toThrow();
  });
});

describe("renderHighlights", () => {
  it("wraps only out-of-list runs and escapes HTML", () => {
    const html = renderHighlights("你<b>愉", [{ start: 4, end: 5, char: "愉" }]);
    expect(html).toBe('你&lt;b&gt;<mark class="oov">愉</mark>');
  });

  it("stripping the markup from the email rendering recovers the reply", () => {
    const html = renderHighlights(fixture.reply, fixture.spans);
    const stripped = html
      .replace(/<\/?mark[^>]*>/g, "")
      .replace(/&lt;/g, "<").replace(/&gt;/g, ">")
      .replace(/&quot;/g, '"').replace(/&amp;/g, "&");
    expect(stripped).toBe(fixture.reply);
  });
});
