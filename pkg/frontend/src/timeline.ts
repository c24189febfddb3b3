// Timeline construction from SSE frames, and chart cards whose display type
// can be switched live without touching the server or copying the data.

import { renderChart, validChartTypes } from "./charts.js";
import { ParsedFrame } from "./sse.js";
import { ChartSpec, ChartType, TaskPlan } from "./types.js";

export class ChartCard {
  readonly spec: ChartSpec; // spec.data is never copied: switching reuses it
  readonly element: HTMLElement;
  displayType: ChartType;
  private chartHost: HTMLElement;

  constructor(spec: ChartSpec) {
    this.spec = spec;
    this.displayType = spec.chart_type;
    this.element = document.createElement("div");
    this.element.className = "card card-chart";
    this.chartHost = renderChart(spec, this.displayType);
    this.element.appendChild(this.chartHost);
    this.element.appendChild(this.buildSwitcher());
  }

  private buildSwitcher(): HTMLElement {
    const valid = new Set(validChartTypes(this.spec));
    const bar = document.createElement("div");
    bar.className = "chart-switcher";
    const all: ChartType[] = ["donut", "bar", "area", "line", "table"];
    for (const type of all) {
      const button = document.createElement("button");
      button.type = "button";
      button.textContent = type;
      button.dataset.targetType = type;
      if (!valid.has(type)) {
        button.disabled = true;
      } else {
        button.addEventListener("click", () => this.switchType(type));
      }
      bar.appendChild(button);
    }
    return bar;
  }

  /** Re-render the same data under another chart type; no server call. */
  switchType(target: ChartType): boolean {
    if (!validChartTypes(this.spec).includes(target)) {
      return false;
    }
    this.displayType = target;
    const fresh = renderChart(this.spec, target);
    this.element.replaceChild(fresh, this.chartHost);
    this.chartHost = fresh;
    return true;
  }
}

export type TimelineItem =
  | { key: string; kind: "message"; role: "user" | "assistant"; text: string; element: HTMLElement }
  | { key: string; kind: "plan"; plan: TaskPlan; element: HTMLElement }
  | { key: string; kind: "chart"; card: ChartCard; element: HTMLElement }
  | { key: string; kind: "error"; message: string; element: HTMLElement };

function messageElement(role: string, text: string): HTMLElement {
  const div = document.createElement("div");
  div.className = `card card-message card-${role}`;
  div.textContent = text;
  return div;
}

function planElement(plan: TaskPlan): HTMLElement {
  const div = document.createElement("div");
  div.className = "card card-plan";
  const heading = document.createElement("h3");
  heading.textContent = "Plan";
  div.appendChild(heading);
  const list = document.createElement("ol");
  for (const step of plan.steps) {
    const item = document.createElement("li");
    item.value = step.index;
    item.textContent = `${step.description} [${step.agent_role}]`;
    list.appendChild(item);
  }
  div.appendChild(list);
  return div;
}

function errorElement(message: string): HTMLElement {
  const div = document.createElement("div");
  div.className = "card card-error";
  div.textContent = message;
  return div;
}

/** Orders frames into cards; items are keyed by (turn, seq) so replaying a
 * stream after a disconnect never duplicates cards. */
export class Timeline {
  readonly items: TimelineItem[] = [];
  done = false;
  private turn: number;
  private seq = 0;
  private seen = new Set<string>();
  private streamingText: { key: string; item: TimelineItem } | null = null;

  constructor(turn = 1) {
    this.turn = turn;
  }

  /** Begin consuming the next turn's stream (after user input). */
  nextTurn(): void {
    this.turn += 1;
    this.seq = 0;
    this.done = false;
    this.streamingText = null;
  }

  /** A reconnect replays the current turn's stream from its first frame;
   * frames already consumed dedupe by their (turn, seq) key. */
  resumeTurn(): void {
    this.seq = 0;
    this.streamingText = null;
  }

  addUserMessage(text: string): TimelineItem {
    const key = `${this.turn}:user`;
    const item: TimelineItem = {
      key, kind: "message", role: "user", text, element: messageElement("user", text),
    };
    this.items.push(item);
    return item;
  }

  consume(frame: ParsedFrame): TimelineItem | null {
    this.seq += 1;
    const key = `${this.turn}:${this.seq}`;
    if (this.seen.has(key)) {
      return null; // replayed frame after a resume
    }
    this.seen.add(key);
    const item = this.frameToItem(frame, key);
    if (item) {
      this.items.push(item);
    }
    return item;
  }

  private frameToItem(frame: ParsedFrame, key: string): TimelineItem | null {
    switch (frame.event) {
      case "plan": {
        const plan = frame.data as TaskPlan;
        return { key, kind: "plan", plan, element: planElement(plan) };
      }
      case "chart": {
        const card = new ChartCard(frame.data as ChartSpec);
        return { key, kind: "chart", card, element: card.element };
      }
      case "step_result": {
        const data = frame.data as { step: number; value: { kind: string; text?: string } };
        const text = data.value.kind === "text" ? data.value.text ?? "" : JSON.stringify(data.value);
        return { key, kind: "message", role: "assistant", text, element: messageElement("assistant", text) };
      }
      case "delta": {
        const text = (frame.data as { text: string }).text;
        if (this.streamingText) {
          const existing = this.streamingText.item;
          if (existing.kind === "message") {
            existing.text += text;
            existing.element.textContent = existing.text;
          }
          return null; // accumulated into the open streaming card
        }
        const item: TimelineItem = {
          key, kind: "message", role: "assistant", text,
          element: messageElement("assistant", text),
        };
        this.streamingText = { key, item };
        return item;
      }
      case "final": {
        const text = (frame.data as { text: string }).text;
        this.streamingText = null;
        return { key, kind: "message", role: "assistant", text, element: messageElement("assistant", text) };
      }
      case "malformed": {
        const message = "received a malformed stream frame";
        return { key, kind: "error", message, element: errorElement(message) };
      }
      case "error": {
        const data = frame.data as { message?: string };
        const message = String(data.message ?? "unknown error");
        return { key, kind: "error", message, element: errorElement(message) };
      }
      case "done":
        this.done = true;
        return null;
      case "step_start":
        return null; // progress only; no card
      default:
        return { key, kind: "error", message: `unknown event ${frame.event}`, element: errorElement(`unknown event ${frame.event}`) };
    }
  }
}
