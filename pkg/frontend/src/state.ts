/**
 * Chat view state and its transitions.
 *
 * The transcript always mirrors the server's; after every round-trip the
 * caller stores the refetched transcript here rather than mutating locally.
 * One message may be in flight per session; `beginSend` refuses a second.
 */

import type { Turn } from "./api.js";

export interface PendingSend {
  text: string;
  images: string[];
  clientKey: string;
}

export interface ChatState {
  sessionId: string | null;
  userId: string | null;
  transcript: Turn[];
  pendingImages: string[]; // data URIs staged for the next message
  inFlight: PendingSend | null;
  lastFailed: PendingSend | null; // retryable with the same client key
  error: string | null;
}

export function initialState(): ChatState {
  return {
    sessionId: null,
    userId: null,
    transcript: [],
    pendingImages: [],
    inFlight: null,
    lastFailed: null,
    error: null,
  };
}

export function sessionStarted(state: ChatState, sessionId: string, userId: string | null): ChatState {
  return {
    ...initialState(),
    sessionId,
    userId,
  };
}

export function canSend(state: ChatState): boolean {
  return state.sessionId !== null && state.inFlight === null;
}

/**
 * Stage a send. Returns null when another message is already in flight
 * (the one-in-flight rule) or no session exists.
 */
export function beginSend(state: ChatState, send: PendingSend): ChatState | null {
  if (!canSend(state)) {
    return null;
  }
  return { ...state, inFlight: send, lastFailed: null, error: null, pendingImages: [] };
}

/** A send failed: keep it for retry under the same idempotency key. */
export function failSend(state: ChatState, message: string): ChatState {
  return {
    ...state,
    inFlight: null,
    lastFailed: state.inFlight,
    error: message,
  };
}

/** The round-trip finished; adopt the server's transcript wholesale. */
export function syncTranscript(state: ChatState, transcript: Turn[]): ChatState {
  return { ...state, transcript, inFlight: null, lastFailed: null, error: null };
}

export function stageImage(state: ChatState, dataUri: string): ChatState {
  return { ...state, pendingImages: [...state.pendingImages, dataUri] };
}

export function clearError(state: ChatState): ChatState {
  return { ...state, error: null };
}

export function connectionFailed(state: ChatState, message: string): ChatState {
  return { ...state, error: message, inFlight: null };
}
