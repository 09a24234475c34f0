import type { AskResponse, ChunkDetail, HistoryTurn } from "./types";

const API_BASE = "";

async function getJson<T>(path: string): Promise<T> {
  const response = await fetch(API_BASE + path);
  if (!response.ok) {
    throw new Error(`${path} failed: ${response.status}`);
  }
  return (await response.json()) as T;
}

export async function askQuestion(
  sessionId: string,
  question: string,
): Promise<AskResponse> {
  const response = await fetch(API_BASE + "/ask", {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({ session_id: sessionId, question }),
  });
  if (!response.ok) {
    const body = await response.json().catch(() => ({ error: response.statusText }));
    throw new Error(body.error ?? `ask failed: ${response.status}`);
  }
  return (await response.json()) as AskResponse;
}

export async function fetchHistory(sessionId: string): Promise<HistoryTurn[]> {
  const body = await getJson<{ turns: HistoryTurn[] }>(
    `/sessions/${encodeURIComponent(sessionId)}/history`,
  );
  return body.turns;
}

// chunk ids contain '#', which a raw URL would treat as a fragment
export function fetchChunk(chunkId: string): Promise<ChunkDetail> {
  return getJson<ChunkDetail>(`/chunks/${encodeURIComponent(chunkId)}`);
}

export async function serverUp(): Promise<boolean> {
  try {
    await getJson<unknown>("/health");
    return true;
  } catch {
    return false;
  }
}
