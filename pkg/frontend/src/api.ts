// HTTP client for the documented API surface; nothing here touches private
// endpoints, and all numbers rendered by the UI come from these responses.

import { ParsedFrame, parseSseStream } from "./sse.js";
import { ConversationIndex } from "./types.js";

export async function listConversations(baseUrl = ""): Promise<ConversationIndex[]> {
  const resp = await fetch(`${baseUrl}/api/conversations`);
  if (!resp.ok) {
    throw new Error(`listing conversations failed: ${resp.status}`);
  }
  const doc = (await resp.json()) as { conversations: ConversationIndex[] };
  return doc.conversations;
}

export async function createConversation(firstMessage: string, baseUrl = ""): Promise<string> {
  const resp = await fetch(`${baseUrl}/api/conversations`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({ first_message: firstMessage }),
  });
  if (!resp.ok) {
    throw new Error(`creating conversation failed: ${resp.status}`);
  }
  const doc = (await resp.json()) as { conversation_id: string };
  return doc.conversation_id;
}

export async function* streamMessage(
  conversationId: string,
  text: string,
  baseUrl = "",
): AsyncGenerator<ParsedFrame> {
  const resp = await fetch(`${baseUrl}/api/conversations/${conversationId}/messages`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({ text }),
  });
  if (!resp.ok || !resp.body) {
    throw new Error(`message stream failed: ${resp.status}`);
  }
  yield* parseSseStream(resp.body);
}
