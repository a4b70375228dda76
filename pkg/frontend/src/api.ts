/** Thin typed client for the /api/* endpoints. */
import type { CvDoc, MetaDoc, ModelDoc, PathDoc, SelectResponse } from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function getJson<T>(url: string, fetchFn: FetchLike): Promise<T> {
  const resp = await fetchFn(url);
  if (!resp.ok) {
    throw new Error(`GET ${url} failed: ${resp.status}`);
  }
  return (await resp.json()) as T;
}

export function fetchMeta(fetchFn: FetchLike = fetch): Promise<MetaDoc> {
  return getJson<MetaDoc>("/api/meta", fetchFn);
}

export function fetchPath(fetchFn: FetchLike = fetch): Promise<PathDoc> {
  return getJson<PathDoc>("/api/path", fetchFn);
}

export function fetchCv(fetchFn: FetchLike = fetch): Promise<CvDoc> {
  return getJson<CvDoc>("/api/cv", fetchFn);
}

export function fetchModel(lambda: number, fetchFn: FetchLike = fetch): Promise<ModelDoc> {
  return getJson<ModelDoc>(`/api/model?lambda=${encodeURIComponent(lambda)}`, fetchFn);
}

export async function postSelect(
  lambda: number,
  fetchFn: FetchLike = fetch,
): Promise<SelectResponse> {
  const resp = await fetchFn("/api/select", {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({ lambda }),
  });
  if (!resp.ok) {
    let detail = `${resp.status}`;
    try {
      const body = (await resp.json()) as { error?: string };
      if (body.error) detail = body.error;
    } catch {
      // keep the status text
    }
    throw new Error(`selection rejected: ${detail}`);
  }
  return (await resp.json()) as SelectResponse;
}
