// Typed client for the review service JSON API (the only network surface).

export interface ItemSummary {
  id: string;
  dataset: string;
  image: string;
  question: string;
  labels: string[];
  status: ItemStatus;
  decided_at: string | null;
}

export interface ItemFull extends ItemSummary {
  AUs: string[];
  description: string;
  meta_info: Record<string, string>;
  note: string | null;
  reviewer: string | null;
}

export type ItemStatus = "pending" | "accepted" | "rejected";
export type Decision = "accepted" | "rejected";

export interface Stats {
  pending: number;
  accepted: number;
  rejected: number;
  total: number;
}

export interface QueuePage {
  items: ItemSummary[];
  total: number;
  page: number;
  page_size: number;
  stats: Stats;
}

export class ApiError extends Error {
  constructor(message: string, readonly status?: number) {
    super(message);
  }
}

async function getJson<T>(url: string): Promise<T> {
  let response: Response;
  try {
    response = await fetch(url);
  } catch (err) {
    throw new ApiError(`service unreachable: ${String(err)}`);
  }
  if (!response.ok) {
    throw new ApiError(`GET ${url} failed with ${response.status}`, response.status);
  }
  return (await response.json()) as T;
}

export class ReviewApi {
  constructor(readonly baseUrl: string = "") {}

  fetchQueue(status: ItemStatus | "" = "pending", page = 1, pageSize = 200): Promise<QueuePage> {
    const filter = status ? `status=${status}&` : "";
    return getJson<QueuePage>(`${this.baseUrl}/api/items?${filter}page=${page}&page_size=${pageSize}`);
  }

  fetchItem(id: string): Promise<ItemFull> {
    return getJson<ItemFull>(`${this.baseUrl}/api/items/${id}`);
  }

  fetchStats(): Promise<Stats> {
    return getJson<Stats>(`${this.baseUrl}/api/stats`);
  }

  async submitDecision(id: string, decision: Decision, note?: string): Promise<ItemFull> {
    let response: Response;
    try {
      response = await fetch(`${this.baseUrl}/api/items/${id}/decision`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ decision, note: note || null }),
      });
    } catch (err) {
      throw new ApiError(`service unreachable: ${String(err)}`);
    }
    if (!response.ok) {
      throw new ApiError(`decision on ${id} failed with ${response.status}`, response.status);
    }
    return (await response.json()) as ItemFull;
  }

  imageUrl(dataset: string, image: string): string {
    return `${this.baseUrl}/api/images/${encodeURIComponent(dataset)}/${encodeURIComponent(image)}`;
  }
}
