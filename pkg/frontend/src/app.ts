/**
 * DOM wiring: binds the pure state/render modules to the page and the API
 * client. The session id is kept in sessionStorage so a reload refetches the
 * same transcript from the server.
 */

import { ApiClient, newClientKey } from "./api.js";
import {
  beginSend,
  canSend,
  ChatState,
  connectionFailed,
  failSend,
  initialState,
  sessionStarted,
  stageImage,
  syncTranscript,
} from "./state.js";
import {
  renderErrorBanner,
  renderPendingUploads,
  renderTranscript,
  renderUserOptions,
} from "./render.js";

const api = new ApiClient(
  (window as unknown as { OUTFITKIT_API?: string }).OUTFITKIT_API ?? "",
);

let state: ChatState = initialState();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function paint(): void {
  el("error-area").innerHTML = renderErrorBanner(state.error);
  el("chat-area").innerHTML = renderTranscript(state.transcript, (ref) => api.imageUrl(ref));
  el("pending-area").innerHTML = renderPendingUploads(state.pendingImages);
  const sendBtn = el<HTMLButtonElement>("send-btn");
  sendBtn.disabled = !canSend(state);
  el<HTMLButtonElement>("start-btn").disabled = state.inFlight !== null;
  const retry = document.getElementById("retry-btn");
  if (retry) retry.addEventListener("click", () => void retrySend());
  el("chat-area").scrollTop = el("chat-area").scrollHeight;
}

async function refreshUsers(): Promise<void> {
  try {
    const users = await api.listUsers();
    el<HTMLSelectElement>("user-picker").innerHTML = renderUserOptions(users);
  } catch (error) {
    state = connectionFailed(state, `Could not reach the server: ${String(error)}`);
    paint();
  }
}

async function startSession(): Promise<void> {
  const userId = el<HTMLSelectElement>("user-picker").value || null;
  try {
    const sessionId = await api.createSession(userId);
    state = sessionStarted(state, sessionId, userId);
    sessionStorage.setItem("outfitkit-session", sessionId);
    await refetchTranscript();
  } catch (error) {
    state = connectionFailed(state, `Could not start a session: ${String(error)}`);
    paint();
  }
}

async function refetchTranscript(): Promise<void> {
  if (!state.sessionId) return;
  try {
    const transcript = await api.getSession(state.sessionId);
    state = syncTranscript(state, transcript.turns);
  } catch (error) {
    state = connectionFailed(state, `Could not fetch the transcript: ${String(error)}`);
  }
  paint();
}

async function performSend(): Promise<void> {
  const pending = state.inFlight;
  if (!pending || !state.sessionId) return;
  try {
    await api.sendMessage(state.sessionId, pending.text, pending.images, pending.clientKey);
    await refetchTranscript(); // server is the source of truth
  } catch (error) {
    state = failSend(state, `Send failed: ${String(error)}`);
    paint();
  }
}

async function submitMessage(): Promise<void> {
  const input = el<HTMLInputElement>("message-input");
  const text = input.value.trim();
  if (!text) return;
  const staged = beginSend(state, {
    text,
    images: state.pendingImages,
    clientKey: newClientKey(),
  });
  if (!staged) return; // one in-flight message per session
  state = staged;
  input.value = "";
  paint();
  await performSend();
}

async function retrySend(): Promise<void> {
  if (!state.lastFailed) return;
  const staged = beginSend(state, state.lastFailed); // same client key: no duplication
  if (!staged) return;
  state = staged;
  paint();
  await performSend();
}

function bindUpload(): void {
  el<HTMLInputElement>("image-input").addEventListener("change", (event) => {
    const files = (event.target as HTMLInputElement).files;
    if (!files) return;
    for (const file of Array.from(files)) {
      const reader = new FileReader();
      reader.onload = () => {
        state = stageImage(state, String(reader.result));
        paint();
      };
      reader.readAsDataURL(file);
    }
    (event.target as HTMLInputElement).value = "";
  });
}

async function boot(): Promise<void> {
  await refreshUsers();
  el("start-btn").addEventListener("click", () => void startSession());
  el("send-btn").addEventListener("click", () => void submitMessage());
  el<HTMLInputElement>("message-input").addEventListener("keydown", (event) => {
    if (event.key === "Enter") void submitMessage();
  });
  bindUpload();

  const existing = sessionStorage.getItem("outfitkit-session");
  if (existing) {
    state = sessionStarted(state, existing, null);
    await refetchTranscript();
  } else {
    paint();
  }
}

void boot();
