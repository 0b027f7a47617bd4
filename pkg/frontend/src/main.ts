// Bootstrap: wire the store to the DOM and the keyboard.

import { ItemStatus, ReviewApi } from "./api";
import { Store } from "./state";
import { renderApp } from "./view";

export interface App {
  store: Store;
  destroy: () => void;
}

/** Mount the review app under root, talking to the service at baseUrl. */
export function createApp(root: HTMLElement, baseUrl = ""): App {
  const api = new ReviewApi(baseUrl);
  const store = new Store(api);

  const handlers = {
    onSelect: (id: string) => void store.select(id),
    onDecision: (decision: "accepted" | "rejected", note: string) => void store.decide(decision, note),
    onRetry: () => void (store.state.unsaved ? store.flushUnsaved() : store.load()),
    onFilter: (filter: string) => void store.load(filter as ItemStatus | ""),
  };

  store.subscribe((state) => renderApp(root, state, api, handlers));

  const onKeydown = (event: KeyboardEvent) => {
    const target = event.target as HTMLElement | null;
    if (target && (target.tagName === "INPUT" || target.tagName === "TEXTAREA" || target.tagName === "SELECT")) {
      return;
    }
    const key = event.key.toLowerCase();
    if (key === "a") void store.decide("accepted");
    else if (key === "r") void store.decide("rejected");
    else if (key === "n") void store.skip();
  };
  root.ownerDocument.addEventListener("keydown", onKeydown);

  void store.load();

  return {
    store,
    destroy: () => {
      root.ownerDocument.removeEventListener("keydown", onKeydown);
      root.replaceChildren();
    },
  };
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  createApp(document.getElementById("app")!);
}
