// Page shell: conversation sidebar (polled), message timeline (pushed over
// SSE), and the input box, disabled while a stream is open.

import { createConversation, listConversations, streamMessage } from "./api.js";
import { Timeline } from "./timeline.js";
import { ConversationIndex } from "./types.js";

const SIDEBAR_POLL_MS = 5000;

export interface ViewState {
  conversations: ConversationIndex[];
  active: string | null;
  timeline: Timeline;
  pending: boolean;
}

export class App {
  readonly state: ViewState = {
    conversations: [],
    active: null,
    timeline: new Timeline(),
    pending: false,
  };
  private sidebar!: HTMLElement;
  private feed!: HTMLElement;
  private input!: HTMLInputElement;
  private sendButton!: HTMLButtonElement;
  private banner!: HTMLElement;

  mount(root: HTMLElement): void {
    root.innerHTML = "";
    const layout = document.createElement("div");
    layout.className = "layout";
    this.sidebar = document.createElement("nav");
    this.sidebar.className = "sidebar";
    const mainPane = document.createElement("main");
    this.banner = document.createElement("div");
    this.banner.className = "banner hidden";
    this.feed = document.createElement("div");
    this.feed.className = "feed";
    const form = document.createElement("form");
    form.className = "composer";
    this.input = document.createElement("input");
    this.input.placeholder = "Describe a data task…";
    this.sendButton = document.createElement("button");
    this.sendButton.type = "submit";
    this.sendButton.textContent = "Send";
    form.append(this.input, this.sendButton);
    form.addEventListener("submit", (e) => {
      e.preventDefault();
      void this.send();
    });
    this.input.addEventListener("input", () => this.syncControls());
    mainPane.append(this.banner, this.feed, form);
    layout.append(this.sidebar, mainPane);
    root.appendChild(layout);
    this.syncControls();
    void this.refreshSidebar();
    setInterval(() => void this.refreshSidebar(), SIDEBAR_POLL_MS);
  }

  private syncControls(): void {
    const empty = this.input.value.trim().length === 0;
    this.sendButton.disabled = this.state.pending || empty;
    this.input.disabled = this.state.pending;
  }

  private async refreshSidebar(): Promise<void> {
    try {
      this.state.conversations = await listConversations();
    } catch {
      return; // poll again later
    }
    this.sidebar.innerHTML = "";
    for (const conversation of this.state.conversations) {
      const entry = document.createElement("a");
      entry.className = "conversation";
      entry.textContent = conversation.title || conversation.conversation_id;
      entry.dataset.conversationId = conversation.conversation_id;
      this.sidebar.appendChild(entry);
    }
  }

  async send(): Promise<void> {
    const text = this.input.value.trim();
    if (!text || this.state.pending) return;
    this.input.value = "";
    if (this.state.active === null) {
      this.state.active = await createConversation(text);
      void this.refreshSidebar();
    } else {
      this.state.timeline.nextTurn();
    }
    const userItem = this.state.timeline.addUserMessage(text);
    this.feed.appendChild(userItem.element);
    await this.drainStream(text);
  }

  private async drainStream(text: string): Promise<void> {
    if (this.state.active === null) return;
    this.state.pending = true;
    this.syncControls();
    this.banner.classList.add("hidden");
    try {
      for await (const frame of streamMessage(this.state.active, text)) {
        const item = this.state.timeline.consume(frame);
        if (item) {
          this.feed.appendChild(item.element);
        }
        this.feed.scrollTop = this.feed.scrollHeight;
      }
    } catch {
      this.showRetryBanner(text);
    } finally {
      this.state.pending = false;
      this.syncControls();
    }
  }

  private showRetryBanner(text: string): void {
    this.banner.innerHTML = "";
    this.banner.append("Connection lost. ");
    const retry = document.createElement("button");
    retry.type = "button";
    retry.textContent = "Retry";
    retry.addEventListener("click", () => {
      // replayed frames dedupe by (turn, seq), so no cards duplicate
      this.state.timeline.resumeTurn();
      void this.drainStream(text);
    });
    this.banner.appendChild(retry);
    this.banner.classList.remove("hidden");
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  new App().mount(document.getElementById("app")!);
}
