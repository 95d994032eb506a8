/**
 * HTTP client for the assistant service.
 *
 * Speaks only the documented endpoints: POST /session, POST
 * /session/{id}/message, GET /session/{id}, GET /users. Image refs returned
 * by the server are opaque; `imageUrl` converts one into a fetchable URL.
 */

export interface UserInfo {
  id: string;
  n_outfits: number;
}

export interface ToolCall {
  tool: string;
  args_digest: string;
  outcome_digest: string;
  ok: boolean;
  note: string;
  image_refs: string[];
  error?: string;
}

export interface AssistantReply {
  text: string;
  image_refs: string[];
  tool_trace: ToolCall[];
}

export interface Turn {
  user: { text: string; image_refs: string[] };
  reply: AssistantReply;
  client_key?: string;
}

export interface SessionTranscript {
  id: string;
  user_id: string | null;
  created_at: number;
  turns: Turn[];
}

export class ApiError extends Error {
  constructor(
    message: string,
    public readonly status: number,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function parseOrThrow<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let message = `HTTP ${response.status}`;
    try {
      const body = (await response.json()) as { message?: string };
      if (body && body.message) message = body.message;
    } catch {
      // keep the status-based message
    }
    throw new ApiError(message, response.status);
  }
  return (await response.json()) as T;
}

export class ApiClient {
  constructor(
    public readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.fetchFn(this.baseUrl + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    }).then((response) => parseOrThrow<T>(response));
  }

  private get<T>(path: string): Promise<T> {
    return this.fetchFn(this.baseUrl + path).then((response) => parseOrThrow<T>(response));
  }

  listUsers(): Promise<UserInfo[]> {
    return this.get<{ users: UserInfo[] }>("/users").then((body) => body.users);
  }

  createSession(userId: string | null): Promise<string> {
    const body = userId ? { user_id: userId } : {};
    return this.post<{ id: string }>("/session", body).then((reply) => reply.id);
  }

  sendMessage(
    sessionId: string,
    text: string,
    images: string[],
    clientKey: string,
  ): Promise<AssistantReply> {
    return this.post<AssistantReply>(`/session/${sessionId}/message`, {
      text,
      images,
      client_key: clientKey,
    });
  }

  getSession(sessionId: string): Promise<SessionTranscript> {
    return this.get<SessionTranscript>(`/session/${sessionId}`);
  }

  imageUrl(ref: string): string {
    return `${this.baseUrl}/image?ref=${encodeURIComponent(ref)}`;
  }
}

let keyCounter = 0;

/** Client-side idempotency key: reused verbatim when a send is retried. */
export function newClientKey(): string {
  keyCounter += 1;
  return `ck-${Date.now().toString(36)}-${keyCounter}-${Math.random().toString(36).slice(2, 8)}`;
}
