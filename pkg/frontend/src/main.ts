/** Browser entry point: minimal tutor chat with out-of-list highlighting. */

import { ApiClient } from "./api.js";
import { renderHighlights } from "./highlights.js";
import { SessionController } from "./state.js";

const api = new ApiClient();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function ratioLabel(ratio: number | null): string {
  return ratio === null ? "no Han characters" : `${(ratio * 100).toFixed(2)}% out of list`;
}

async function boot(): Promise<void> {
  const levelSelect = el<HTMLSelectElement>("level");
  const conditionSelect = el<HTMLSelectElement>("condition");
  const taskSelect = el<HTMLSelectElement>("task");
  const startButton = el<HTMLButtonElement>("start");
  const sendButton = el<HTMLButtonElement>("send");
  const input = el<HTMLInputElement>("message");
  const log = el<HTMLDivElement>("log");
  const status = el<HTMLSpanElement>("status");

  for (const task of await api.getTasks()) {
    const option = document.createElement("option");
    option.value = task.code;
    option.textContent = `${task.code} — ${task.title}`;
    taskSelect.appendChild(option);
  }

  let controller: SessionController | null = null;

  function append(role: string, html: string): void {
    const entry = document.createElement("div");
    entry.className = `turn ${role}`;
    entry.innerHTML = html;
    log.appendChild(entry);
    log.scrollTop = log.scrollHeight;
  }

  startButton.addEventListener("click", async () => {
    const session = await api.createSession(levelSelect.value, conditionSelect.value);
    controller = new SessionController(api, session.id);
    log.innerHTML = "";
    status.textContent = `session ${session.id.slice(0, 8)} · ${session.level} · ${session.condition}`;
    input.value = taskSelect.value;
  });

  async function submit(): Promise<void> {
    if (!controller) return;
    const text = input.value;
    sendButton.disabled = true;
    try {
      const result = await controller.send(text);
      if (result === null) return;
      append("user", text);
      append("assistant", renderHighlights(result.reply, result.spans));
      append("meta", ratioLabel(result.deviation.out_ratio));
      input.value = "";
    } catch (err) {
      append("meta", `error: ${(err as Error).message}`);
    } finally {
      sendButton.disabled = false;
    }
  }

  sendButton.addEventListener("click", submit);
  input.addEventListener("keydown", (e) => {
    if (e.key === "Enter") void submit();
  });
}

void boot();
