// AU vocabulary and text-scanning rules mirrored from the backend contract.

export const AU_TOKENS = [
  "AU1", "AU2", "AU4", "AU5", "AU6", "AU7", "AU9", "AU10", "AU11", "AU12",
  "AU13", "AU14", "AU15", "AU16", "AU17", "AU18", "AU19", "AU20", "AU22",
  "AU23", "AU24", "AU25", "AU26", "AU27", "AU28", "AU29", "AU30", "AU31",
  "AU32", "AU43",
] as const;

const AU_SET = new Set<string>(AU_TOKENS);

const AU_SCAN = /\bAU(\d{1,2})\b/gi;
const NEGATIVE_SCAN = /\b(no|not|without|maybe)\b/gi;

/** Word-boundary AU mentions in reasoning text, uppercased, vocabulary-filtered, first-occurrence order. */
export function extractAus(text: string): string[] {
  const seen: string[] = [];
  for (const match of text.matchAll(AU_SCAN)) {
    const token = `AU${match[1]}`;
    if (AU_SET.has(token) && !seen.includes(token)) seen.push(token);
  }
  return seen;
}

export type ChipKind = "matched" | "missing" | "extra";

export interface AuChip {
  token: string;
  kind: ChipKind;
}

/** Partition detected-vs-gold AUs into matched / missing / extra chips (gold order first). */
export function partitionAus(goldAus: string[], detected: string[]): AuChip[] {
  const detectedSet = new Set(detected);
  const goldSet = new Set(goldAus);
  const chips: AuChip[] = goldAus.map((token) => ({
    token,
    kind: detectedSet.has(token) ? "matched" : "missing",
  }));
  for (const token of detected) {
    if (!goldSet.has(token)) chips.push({ token, kind: "extra" });
  }
  return chips;
}

export interface TextSpan {
  text: string;
  negative: boolean;
}

/** Split reasoning text into spans, marking whole-word negative/uncertain terms. */
export function markNegativeTerms(text: string): TextSpan[] {
  const spans: TextSpan[] = [];
  let cursor = 0;
  for (const match of text.matchAll(NEGATIVE_SCAN)) {
    const start = match.index ?? 0;
    if (start > cursor) spans.push({ text: text.slice(cursor, start), negative: false });
    spans.push({ text: match[0], negative: true });
    cursor = start + match[0].length;
  }
  if (cursor < text.length) spans.push({ text: text.slice(cursor), negative: false });
  return spans;
}
