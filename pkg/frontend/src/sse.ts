// Incremental parser for the server's SSE frame grammar:
//   event: <type>\n
//   data: <single-line JSON>\n
//   \n
// Frames that deviate from the grammar surface as "malformed" results so the
// UI can show an error card; the parser itself never throws.

export type ParsedFrame =
  | { event: string; data: unknown }
  | { event: "malformed"; raw: string };

export type SseParser = (chunk: string) => ParsedFrame[];

export function createSseParser(): SseParser {
  let buffer = "";
  return (chunk: string): ParsedFrame[] => {
    buffer += chunk;
    const frames: ParsedFrame[] = [];
    let boundary: number;
    while ((boundary = buffer.indexOf("\n\n")) !== -1) {
      const block = buffer.slice(0, boundary);
      buffer = buffer.slice(boundary + 2);
      if (!block.trim()) continue;
      let event = "";
      let data: string | null = null;
      let malformed = false;
      for (const line of block.split("\n")) {
        if (line.startsWith("event: ")) {
          event = line.slice("event: ".length);
        } else if (line.startsWith("data: ")) {
          data = line.slice("data: ".length);
        } else if (line.startsWith(":")) {
          continue; // SSE comment line, permitted
        } else {
          malformed = true;
        }
      }
      if (malformed || !event || data === null) {
        frames.push({ event: "malformed", raw: block });
        continue;
      }
      try {
        frames.push({ event, data: JSON.parse(data) });
      } catch {
        frames.push({ event: "malformed", raw: block });
      }
    }
    return frames;
  };
}

/** Drain a streaming response body through the parser. */
export async function* parseSseStream(
  body: ReadableStream<Uint8Array>,
): AsyncGenerator<ParsedFrame> {
  const parser = createSseParser();
  const decoder = new TextDecoder();
  const reader = body.getReader();
  while (true) {
    const { done, value } = await reader.read();
    if (done) break;
    for (const frame of parser(decoder.decode(value, { stream: true }))) {
      yield frame;
    }
  }
  for (const frame of parser(decoder.decode())) {
    yield frame;
  }
}
