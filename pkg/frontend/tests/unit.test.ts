// Unit tests for scanning, chip partitioning, store transitions and error surfaces.

import { afterEach, describe, expect, it, vi } from "vitest";

import { ItemFull, ReviewApi } from "../src/api";
import { Store } from "../src/state";
import { renderApp } from "../src/view";
import { extractAus, markNegativeTerms, partitionAus } from "../src/vocab";

describe("extractAus", () => {
  it("uppercases, deduplicates and keeps first-occurrence order", () => {
    expect(extractAus("brow (au2), again (AU2), jaw (AU26)")).toEqual(["AU2", "AU26"]);
  });

  it("drops out-of-vocabulary tokens like AU3", () => {
    expect(extractAus("mystery (AU3) but brow (AU4)")).toEqual(["AU4"]);
  });

  it("respects word boundaries", () => {
    expect(extractAus("BAU4 AU456 AU12")).toEqual(["AU12"]);
  });
});

describe("partitionAus", () => {
  it("splits chips into matched, missing and extra", () => {
    const chips = partitionAus(["AU4", "AU7"], ["AU4", "AU9"]);
    expect(chips).toEqual([
      { token: "AU4", kind: "matched" },
      { token: "AU7", kind: "missing" },
      { token: "AU9", kind: "extra" },
    ]);
  });

  it("covers every token exactly once", () => {
    const gold = ["AU1", "AU4", "AU12"];
    const detected = ["AU4", "AU26"];
    const chips = partitionAus(gold, detected);
    const tokens = chips.map((c) => c.token).sort();
    expect(tokens).toEqual([...new Set([...gold, ...detected])].sort());
  });
});

describe("markNegativeTerms", () => {
  it("marks whole-word negative terms", () => {
    const spans = markNegativeTerms("maybe not");
    expect(spans.filter((s) => s.negative).map((s) => s.text)).toEqual(["maybe", "not"]);
  });

  it("does not mark nose as no", () => {
    const spans = markNegativeTerms("the nose wrinkles (AU9)");
    expect(spans.every((s) => !s.negative)).toBe(true);
  });

  it("reassembles to the original text", () => {
    const text = "maybe there is no tension without a frown";
    expect(markNegativeTerms(text).map((s) => s.text).join("")).toBe(text);
  });
});

// -------------------------------------------------------------- fake service

interface FakeItem extends ItemFull {}

function fakeService(items: FakeItem[], options: { failDecisions?: boolean } = {}) {
  const byId = new Map(items.map((item) => [item.id, item]));
  const stats = () => ({
    pending: items.filter((i) => i.status === "pending").length,
    accepted: items.filter((i) => i.status === "accepted").length,
    rejected: items.filter((i) => i.status === "rejected").length,
    total: items.length,
  });
  return vi.fn(async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input);
    const json = (payload: unknown, status = 200) =>
      new Response(JSON.stringify(payload), { status, headers: { "Content-Type": "application/json" } });
    const decisionMatch = url.match(/\/api\/items\/([0-9a-f]+)\/decision$/);
    if (decisionMatch && init?.method === "POST") {
      if (options.failDecisions) throw new TypeError("fetch failed");
      const item = byId.get(decisionMatch[1]!);
      if (!item) return json({ error: "unknown" }, 404);
      item.status = JSON.parse(String(init.body)).decision;
      item.decided_at = "2026-01-01T00:00:00+00:00";
      return json(item);
    }
    const itemMatch = url.match(/\/api\/items\/([0-9a-f]+)$/);
    if (itemMatch) {
      const item = byId.get(itemMatch[1]!);
      return item ? json(item) : json({ error: "unknown" }, 404);
    }
    if (url.includes("/api/items")) {
      const status = new URL(url, "http://x").searchParams.get("status");
      const filtered = status ? items.filter((i) => i.status === status) : items;
      return json({ items: filtered, total: filtered.length, page: 1, page_size: 200, stats: stats() });
    }
    if (url.includes("/api/stats")) return json(stats());
    return json({ error: "no route" }, 404);
  });
}

function makeItem(suffix: string, status: FakeItem["status"] = "pending"): FakeItem {
  return {
    id: suffix.repeat(32).slice(0, 32),
    dataset: "FABA",
    image: `${suffix}.jpg`,
    question: "What emotion is shown?",
    labels: ["Anger"],
    status,
    decided_at: null,
    AUs: ["AU4", "AU7"],
    description: "lowered brows (AU4) with tight lids (AU7)",
    meta_info: {},
    note: null,
    reviewer: null,
  };
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("Store", () => {
  it("loads the pending queue and selects the first item", async () => {
    vi.stubGlobal("fetch", fakeService([makeItem("a"), makeItem("b")]));
    const store = new Store(new ReviewApi());
    await store.load();
    expect(store.state.queue).toHaveLength(2);
    expect(store.state.current?.id).toBe("a".repeat(32));
    expect(store.state.error).toBeNull();
  });

  it("advances to the next pending item in ascending id order", async () => {
    vi.stubGlobal("fetch", fakeService([makeItem("a"), makeItem("b"), makeItem("c")]));
    const store = new Store(new ReviewApi());
    await store.load();
    await store.decide("accepted");
    expect(store.state.current?.id).toBe("b".repeat(32));
    expect(store.state.stats?.accepted).toBe(1);
  });

  it("wraps to the first pending item at the end of the queue", async () => {
    vi.stubGlobal("fetch", fakeService([makeItem("a"), makeItem("b")]));
    const store = new Store(new ReviewApi());
    await store.load();
    await store.select("b".repeat(32));
    await store.decide("rejected");
    expect(store.state.current?.id).toBe("a".repeat(32));
  });

  it("surfaces a retryable error banner state when the service is down", async () => {
    vi.stubGlobal("fetch", vi.fn(async () => {
      throw new TypeError("fetch failed");
    }));
    const store = new Store(new ReviewApi());
    await store.load();
    expect(store.state.error).toContain("unreachable");
    expect(store.state.queue).toHaveLength(0);
  });

  it("keeps a failed decision buffered and flushes it on retry", async () => {
    const items = [makeItem("a"), makeItem("b")];
    vi.stubGlobal("fetch", fakeService(items, { failDecisions: true }));
    const store = new Store(new ReviewApi());
    await store.load();
    await store.decide("accepted", "good sample");
    expect(store.state.unsaved?.id).toBe("a".repeat(32));
    expect(store.state.error).not.toBeNull();

    vi.stubGlobal("fetch", fakeService(items));
    await store.flushUnsaved();
    expect(store.state.unsaved).toBeNull();
    expect(items[0]!.status).toBe("accepted");
  });

  it("filter=accepted lists only accepted rows", async () => {
    vi.stubGlobal("fetch", fakeService([makeItem("a", "accepted"), makeItem("b")]));
    const store = new Store(new ReviewApi());
    await store.load("accepted");
    expect(store.state.queue).toHaveLength(1);
    expect(store.state.queue[0]!.status).toBe("accepted");
  });
});

describe("renderApp", () => {
  const noop = { onSelect: () => {}, onDecision: () => {}, onRetry: () => {}, onFilter: () => {} };

  it("renders queue rows with statuses", async () => {
    vi.stubGlobal("fetch", fakeService([makeItem("a"), makeItem("b", "accepted")]));
    const store = new Store(new ReviewApi());
    await store.load("");
    const root = document.createElement("div");
    renderApp(root, store.state, store.api, noop);
    expect(root.querySelectorAll(".queue-row")).toHaveLength(2);
    expect(root.querySelectorAll(".queue-status.status-accepted")).toHaveLength(1);
  });

  it("renders an error banner when the service is down", () => {
    const store = new Store(new ReviewApi());
    store.state.error = "service unreachable: connect ECONNREFUSED";
    const root = document.createElement("div");
    renderApp(root, store.state, store.api, noop);
    expect(root.querySelector(".error-banner")?.textContent).toContain("unreachable");
    expect(root.querySelectorAll(".queue-row")).toHaveLength(0);
  });

  it("styles extra AUs as extra chips and highlights lint terms", async () => {
    const item = makeItem("a");
    item.description = "maybe lowered brows (AU4), tight lids (AU7), plus nose wrinkle (AU9)";
    vi.stubGlobal("fetch", fakeService([item]));
    const store = new Store(new ReviewApi());
    await store.load();
    const root = document.createElement("div");
    renderApp(root, store.state, store.api, noop);
    const extra = [...root.querySelectorAll(".au-chip.au-extra")].map((n) => n.textContent);
    expect(extra).toEqual(["AU9"]);
    expect(root.querySelector("mark.negative-term")?.textContent).toBe("maybe");
  });

  it("shows the unsaved badge while a decision is buffered", async () => {
    vi.stubGlobal("fetch", fakeService([makeItem("a")], { failDecisions: true }));
    const store = new Store(new ReviewApi());
    await store.load();
    await store.decide("accepted");
    const root = document.createElement("div");
    renderApp(root, store.state, store.api, noop);
    expect(root.querySelector(".unsaved-badge")).not.toBeNull();
  });

  it("image failure swaps in a placeholder naming the path", async () => {
    vi.stubGlobal("fetch", fakeService([makeItem("a")]));
    const store = new Store(new ReviewApi());
    await store.load();
    const root = document.createElement("div");
    renderApp(root, store.state, store.api, noop);
    root.querySelector("img")!.dispatchEvent(new Event("error"));
    expect(root.querySelector(".image-placeholder")?.textContent).toContain("FABA/a.jpg");
    expect(root.querySelector(".accept-button")).not.toBeNull();
  });
});
