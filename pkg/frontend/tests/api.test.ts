import { readFileSync } from "node:fs";
import { join } from "node:path";

import { afterEach, describe, expect, it, vi } from "vitest";

import { createConversation, listConversations, streamMessage } from "../src/api.js";

const DOCUMENTED_PATHS = [
  "/api/conversations",
  "/api/conversations/${conversationId}/messages",
];

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("api client contract", () => {
  it("talks only to documented endpoints", () => {
    const source = readFileSync(join(process.cwd(), "src", "api.ts"), "utf-8");
    const called = [...source.matchAll(/fetch\(`\$\{baseUrl\}([^`]*)`/g)].map((m) => m[1]);
    expect(called.length).toBeGreaterThan(0);
    for (const path of called) {
      expect(DOCUMENTED_PATHS).toContain(path);
    }
  });

  it("createConversation posts the first message and returns the id", async () => {
    const calls: Array<{ url: string; init: RequestInit | undefined }> = [];
    vi.stubGlobal("fetch", async (url: string, init?: RequestInit) => {
      calls.push({ url, init });
      return new Response(JSON.stringify({ conversation_id: "conv-000042" }), {
        status: 201,
        headers: { "content-type": "application/json" },
      });
    });
    const id = await createConversation("hello data");
    expect(id).toBe("conv-000042");
    expect(calls[0].url).toBe("/api/conversations");
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({ first_message: "hello data" });
  });

  it("streamMessage parses the response body as SSE frames", async () => {
    const body = 'event: plan\ndata: {"steps":[]}\n\nevent: done\ndata: {}\n\n';
    vi.stubGlobal("fetch", async () => new Response(body, { status: 200 }));
    const frames = [];
    for await (const frame of streamMessage("conv-000001", "go")) {
      frames.push(frame.event);
    }
    expect(frames).toEqual(["plan", "done"]);
  });

  it("listConversations unwraps the conversation array", async () => {
    vi.stubGlobal(
      "fetch",
      async () =>
        new Response(
          JSON.stringify({
            conversations: [
              { conversation_id: "conv-000001", title: "t", created_at: "", event_count: 1 },
            ],
          }),
          { status: 200 },
        ),
    );
    const conversations = await listConversations();
    expect(conversations).toHaveLength(1);
    expect(conversations[0].conversation_id).toBe("conv-000001");
  });
});
