// DOM rendering: queue list, item detail with AU chips and lint highlights, banners.

import { ItemFull, ItemSummary, ReviewApi, Stats } from "./api";
import { AppState } from "./state";
import { extractAus, markNegativeTerms, partitionAus } from "./vocab";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderStats(stats: Stats | null): HTMLElement {
  const bar = el("div", "stats-bar");
  if (!stats) return bar;
  for (const key of ["pending", "accepted", "rejected", "total"] as const) {
    const chip = el("span", `stat stat-${key}`, `${key}: ${stats[key]}`);
    chip.dataset.stat = key;
    bar.appendChild(chip);
  }
  return bar;
}

export function renderErrorBanner(message: string, onRetry: () => void): HTMLElement {
  const banner = el("div", "error-banner");
  banner.setAttribute("role", "alert");
  banner.appendChild(el("span", "error-text", message));
  const retry = el("button", "retry-button", "Retry");
  retry.addEventListener("click", onRetry);
  banner.appendChild(retry);
  return banner;
}

export function renderQueue(
  items: ItemSummary[],
  currentId: string | null,
  onSelect: (id: string) => void,
): HTMLElement {
  const list = el("ul", "queue-list");
  for (const item of items) {
    const row = el("li", `queue-row status-${item.status}${item.id === currentId ? " selected" : ""}`);
    row.dataset.id = item.id;
    row.appendChild(el("span", "queue-image", `${item.dataset}/${item.image}`));
    row.appendChild(el("span", "queue-label", item.labels.join(", ")));
    row.appendChild(el("span", `queue-status status-${item.status}`, item.status));
    row.addEventListener("click", () => onSelect(item.id));
    list.appendChild(row);
  }
  return list;
}

function renderThinkText(description: string): HTMLElement {
  const box = el("p", "think-text");
  for (const span of markNegativeTerms(description)) {
    if (span.negative) {
      box.appendChild(el("mark", "negative-term", span.text));
    } else {
      box.appendChild(document.createTextNode(span.text));
    }
  }
  return box;
}

export function renderItem(item: ItemFull, api: ReviewApi, unsaved: boolean): HTMLElement {
  const panel = el("section", "item-detail");
  panel.dataset.id = item.id;

  const header = el("header", "item-header");
  header.appendChild(el("h2", "item-title", `${item.dataset} / ${item.image}`));
  const badge = el("span", `status-badge status-${item.status}`, item.status);
  header.appendChild(badge);
  if (unsaved) header.appendChild(el("span", "unsaved-badge", "unsaved"));
  panel.appendChild(header);

  const figure = el("figure", "item-figure");
  const img = el("img", "item-image");
  img.src = api.imageUrl(item.dataset, item.image);
  img.alt = `${item.dataset}/${item.image}`;
  img.addEventListener("error", () => {
    const placeholder = el("div", "image-placeholder", `image unavailable: ${item.dataset}/${item.image}`);
    figure.replaceChildren(placeholder);
  });
  figure.appendChild(img);
  panel.appendChild(figure);

  panel.appendChild(el("p", "item-question", item.question));

  const chips = el("div", "au-chips");
  const detected = extractAus(item.description);
  for (const chip of partitionAus(item.AUs, detected)) {
    const node = el("span", `au-chip au-${chip.kind}`, chip.token);
    node.dataset.kind = chip.kind;
    node.title = chip.kind;
    chips.appendChild(node);
  }
  panel.appendChild(chips);

  panel.appendChild(renderThinkText(item.description));
  panel.appendChild(el("p", "item-answer", `answer: ${item.labels.join(", ")}`));
  if (item.note) panel.appendChild(el("p", "item-note", `note: ${item.note}`));
  return panel;
}

export function renderDecisionBar(onDecision: (decision: "accepted" | "rejected", note: string) => void): HTMLElement {
  const bar = el("div", "decision-bar");
  const note = el("input", "note-input");
  note.placeholder = "optional note";
  note.dataset.role = "note";
  const accept = el("button", "accept-button", "Accept (A)");
  accept.addEventListener("click", () => onDecision("accepted", note.value));
  const reject = el("button", "reject-button", "Reject (R)");
  reject.addEventListener("click", () => onDecision("rejected", note.value));
  bar.append(accept, reject, note);
  return bar;
}

export function renderApp(
  root: HTMLElement,
  state: AppState,
  api: ReviewApi,
  handlers: {
    onSelect: (id: string) => void;
    onDecision: (decision: "accepted" | "rejected", note: string) => void;
    onRetry: () => void;
    onFilter: (filter: string) => void;
  },
): void {
  const app = el("div", "review-app");

  const toolbar = el("div", "toolbar");
  const filter = el("select", "filter-select");
  for (const value of ["pending", "accepted", "rejected", ""]) {
    const option = el("option", undefined, value || "all");
    option.value = value;
    if (value === state.filter) option.selected = true;
    filter.appendChild(option);
  }
  filter.addEventListener("change", () => handlers.onFilter(filter.value));
  toolbar.appendChild(filter);
  toolbar.appendChild(renderStats(state.stats));
  app.appendChild(toolbar);

  if (state.error) {
    app.appendChild(renderErrorBanner(state.error, handlers.onRetry));
  }

  const main = el("div", "main-split");
  main.appendChild(renderQueue(state.queue, state.current?.id ?? null, handlers.onSelect));

  const right = el("div", "right-pane");
  if (state.current) {
    right.appendChild(renderItem(state.current, api, state.unsaved?.id === state.current.id));
    right.appendChild(renderDecisionBar(handlers.onDecision));
  } else if (!state.error) {
    right.appendChild(el("p", "empty-message", state.loading ? "loading..." : "queue is empty"));
  }
  main.appendChild(right);
  app.appendChild(main);

  root.replaceChildren(app);
}
