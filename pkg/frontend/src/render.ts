/**
 * Pure HTML-string renderers for the chat view.
 *
 * Kept free of DOM access so tests can assert on output directly; app.ts
 * assigns the results to innerHTML. Only images justified by a tool-trace
 * entry are ever rendered.
 */

import type { AssistantReply, ToolCall, Turn, UserInfo } from "./api.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

/** Refs from the reply that a tool-trace entry vouches for, in reply order. */
export function justifiedImageRefs(reply: AssistantReply): string[] {
  const traced = new Set<string>();
  for (const call of reply.tool_trace) {
    for (const ref of call.image_refs) {
      traced.add(ref);
    }
  }
  return reply.image_refs.filter((ref) => traced.has(ref));
}

export function renderGallery(refs: string[], imageUrl: (ref: string) => string): string {
  if (refs.length === 0) return "";
  const imgs = refs
    .map(
      (ref) =>
        `<img class="gallery-img" src="${escapeHtml(imageUrl(ref))}" alt="${escapeHtml(ref)}">`,
    )
    .join("");
  return `<div class="gallery">${imgs}</div>`;
}

export function renderToolTrace(trace: ToolCall[]): string {
  if (trace.length === 0) return "";
  const rows = trace
    .map((call) => {
      const status = call.ok ? "ok" : "failed";
      const error = call.error ? ` — ${escapeHtml(call.error)}` : "";
      return (
        `<li class="trace-entry trace-${status}">` +
        `<code>${escapeHtml(call.tool)}</code> ${status}: ${escapeHtml(call.note)}${error}` +
        ` <span class="digest">args ${escapeHtml(call.args_digest)} → ${escapeHtml(
          call.outcome_digest,
        )}</span></li>`
      );
    })
    .join("");
  return (
    `<details class="tool-trace"><summary>${trace.length} tool call` +
    `${trace.length === 1 ? "" : "s"}</summary><ul>${rows}</ul></details>`
  );
}

export function renderTurn(turn: Turn, imageUrl: (ref: string) => string): string {
  const uploads = renderGallery(turn.user.image_refs, imageUrl);
  const replyImages = renderGallery(justifiedImageRefs(turn.reply), imageUrl);
  return (
    `<div class="bubble user"><p>${escapeHtml(turn.user.text)}</p>${uploads}</div>` +
    `<div class="bubble assistant"><p>${escapeHtml(turn.reply.text)}</p>` +
    `${replyImages}${renderToolTrace(turn.reply.tool_trace)}</div>`
  );
}

export function renderTranscript(turns: Turn[], imageUrl: (ref: string) => string): string {
  if (turns.length === 0) {
    return `<p class="empty-note">No messages yet — say hello!</p>`;
  }
  return turns.map((turn) => renderTurn(turn, imageUrl)).join("");
}

export function renderUserOptions(users: UserInfo[]): string {
  const anonymous = `<option value="">anonymous</option>`;
  return (
    anonymous +
    users
      .map(
        (user) =>
          `<option value="${escapeHtml(user.id)}">${escapeHtml(user.id)} ` +
          `(${user.n_outfits} outfits)</option>`,
      )
      .join("")
  );
}

export function renderErrorBanner(message: string | null): string {
  if (!message) return "";
  return `<div class="error-banner">${escapeHtml(message)} <button id="retry-btn">retry</button></div>`;
}

export function renderPendingUploads(dataUris: string[]): string {
  if (dataUris.length === 0) return "";
  const thumbs = dataUris
    .map((uri) => `<img class="pending-thumb" src="${escapeHtml(uri)}" alt="upload">`)
    .join("");
  return `<div class="pending-uploads">${thumbs}</div>`;
}
