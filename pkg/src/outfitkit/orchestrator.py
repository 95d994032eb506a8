"""Multiround assistant service: session state, context assembly with
preference injection, and a tool registry (recommend, image generation,
retrieval, try-on) exposed over a JSON-RPC dispatch.

Every assistant turn runs the same pipeline: retrieve the user's preference
summary, inject it after the query, call the recommend tool, then invoke
visual tools when the query asks for them. All stub backends are
deterministic, so a scripted session against a fixed catalog replays
identically.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import re
import time
import uuid
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .catalog import Catalog, CatalogError
from .embedding import EmbeddingError, cosine
from .text import preference_summary, truncate_tokens

__all__ = [
    "ToolError",
    "SessionNotFound",
    "ToolCall",
    "AssistantReply",
    "Session",
    "ToolDescriptor",
    "ToolRegistry",
    "OrchestratorConfig",
    "Assistant",
    "SessionStore",
    "StubRecommender",
    "HttpRecommender",
    "try_on_composite",
    "handle_rpc",
    "TEXT_TOKEN_BUDGET",
]

TEXT_TOKEN_BUDGET = 381

RPC_PARSE_ERROR = -32700
RPC_INVALID_REQUEST = -32600
RPC_METHOD_NOT_FOUND = -32601
RPC_INVALID_PARAMS = -32602
RPC_INTERNAL_ERROR = -32603

_WORD_RE = re.compile(r"[a-z0-9']+")


class ToolError(Exception):
    """Tool execution failure; surfaces in the trace, never drops a turn."""


class SessionNotFound(Exception):
    """Lookup of a session id that was never created."""


def _digest(payload) -> str:
    canonical = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


@dataclass(frozen=True)
class ToolCall:
    tool: str
    args_digest: str
    outcome_digest: str
    ok: bool
    note: str
    image_refs: tuple[str, ...] = ()
    error: Optional[str] = None

    def as_dict(self) -> dict:
        record = {
            "tool": self.tool,
            "args_digest": self.args_digest,
            "outcome_digest": self.outcome_digest,
            "ok": self.ok,
            "note": self.note,
            "image_refs": list(self.image_refs),
        }
        if self.error is not None:
            record["error"] = self.error
        return record


@dataclass(frozen=True)
class AssistantReply:
    text: str
    image_refs: tuple[str, ...]
    tool_trace: tuple[ToolCall, ...]

    def as_dict(self) -> dict:
        return {
            "text": self.text,
            "image_refs": list(self.image_refs),
            "tool_trace": [c.as_dict() for c in self.tool_trace],
        }


@dataclass
class Turn:
    text: str
    image_refs: tuple[str, ...]
    reply: AssistantReply
    client_key: Optional[str] = None

    def as_dict(self) -> dict:
        record = {
            "user": {"text": self.text, "image_refs": list(self.image_refs)},
            "reply": self.reply.as_dict(),
        }
        if self.client_key is not None:
            record["client_key"] = self.client_key
        return record


@dataclass
class Session:
    id: str
    user_id: Optional[str]
    created_at: float
    turns: list[Turn] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "id": self.id,
            "user_id": self.user_id,
            "created_at": self.created_at,
            "turns": [t.as_dict() for t in self.turns],
        }


@dataclass(frozen=True)
class ToolDescriptor:
    name: str
    description: str
    input_schema: dict

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "inputSchema": self.input_schema,
        }


class ToolRegistry:
    """Named tools with input schemas; names are unique."""

    def __init__(self):
        self._tools: dict[str, tuple[ToolDescriptor, Callable[[dict], dict]]] = {}

    def register(self, descriptor: ToolDescriptor, handler: Callable[[dict], dict]) -> None:
        if descriptor.name in self._tools:
            raise ValueError(f"tool {descriptor.name!r} already registered")
        self._tools[descriptor.name] = (descriptor, handler)

    def list_tools(self) -> list[ToolDescriptor]:
        return [descriptor for descriptor, _ in self._tools.values()]

    def call_tool(self, name: str, args: dict) -> dict:
        if name not in self._tools:
            raise KeyError(name)
        descriptor, handler = self._tools[name]
        required = descriptor.input_schema.get("required", [])
        missing = [key for key in required if key not in args]
        if missing:
            raise ValueError(f"tool {name!r} missing required arguments: {missing}")
        return handler(args)


# ----------------------------------------------------------------------
# Tool backends
# ----------------------------------------------------------------------


class StubRecommender:
    """Deterministic stand-in for the recommendation model.

    Picks the catalog item maximizing cosine similarity between its feature
    and the mean feature of the context items (falling back to the query text
    embedding when there is no context), restricted to the requested category
    or, absent one, to categories not already present. Ties break on item id.
    """

    name = "stub"

    def __init__(self, catalog: Catalog, embedder):
        self.catalog = catalog
        self.embedder = embedder

    def recommend(
        self,
        context_item_ids: list[str],
        query: str,
        preference: str = "",
        category: Optional[str] = None,
        exclude: tuple[str, ...] = (),
    ) -> dict:
        if not self.catalog.items:
            raise ToolError("catalog is empty")
        features = self.catalog.features(self.embedder)
        context_items = [self.catalog.items[i] for i in context_item_ids if i in self.catalog.items]
        if context_items:
            anchor = np.mean(
                [features.feature(item) for item in context_items], axis=0
            )
        else:
            seed_text = query if query else (preference or "outfit")
            anchor = self.embedder.embed_text(seed_text)
        if float(np.linalg.norm(anchor)) == 0.0:
            anchor = self.embedder.embed_text(query or "outfit")

        present = {item.category for item in context_items}
        excluded = set(exclude) | set(context_item_ids)

        def candidates_in(predicate) -> list[str]:
            return [
                item_id
                for item_id in sorted(self.catalog.items)
                if item_id not in excluded and predicate(self.catalog.items[item_id])
            ]

        if category is not None:
            pool = candidates_in(lambda it: it.category == category)
        else:
            pool = candidates_in(lambda it: it.category not in present)
        if not pool:
            pool = candidates_in(lambda it: True)
        if not pool:
            raise ToolError("no candidate items to recommend")

        best_id = min(
            pool,
            key=lambda item_id: (
                -cosine(features.feature(self.catalog.items[item_id]), anchor),
                item_id,
            ),
        )
        item = self.catalog.items[best_id]
        text = f"I recommend {item.description}. It pairs well with the rest of your outfit."
        return {"item_id": item.id, "text": text, "image_ref": item.image_ref}


class HttpRecommender:
    """Remote recommendation model honoring the stub's contract."""

    name = "http"

    def __init__(self, endpoint: str, timeout: float = 60.0):
        self.endpoint = endpoint
        self.timeout = timeout

    def recommend(self, context_item_ids, query, preference="", category=None, exclude=()) -> dict:
        import httpx

        try:
            resp = httpx.post(
                self.endpoint,
                json={
                    "context_items": list(context_item_ids),
                    "query": query,
                    "preference_summary": preference,
                    "category": category,
                    "exclude": list(exclude),
                },
                timeout=self.timeout,
            )
            resp.raise_for_status()
            body = resp.json()
        except httpx.HTTPError as exc:
            raise ToolError(f"recommendation backend unreachable: {exc}") from exc
        except ValueError as exc:
            raise ToolError(f"recommendation backend returned invalid JSON: {exc}") from exc
        if "text" not in body or "item_id" not in body:
            raise ToolError("recommendation backend response missing text/item_id")
        return body


def try_on_composite(
    item_refs: list[str],
    out_dir: str,
    person_ref: Optional[str] = None,
    canvas_size: int = 512,
) -> str:
    """Deterministic placeholder composite: item images tiled on a white canvas.

    The output filename is derived from the input locators, so identical
    inputs land on an identical file with identical bytes.
    """
    from PIL import Image

    if not item_refs:
        raise ToolError("try-on needs at least one item image")
    refs = ([person_ref] if person_ref else []) + list(item_refs)
    tiles = []
    for ref in refs:
        try:
            with Image.open(ref) as img:
                tiles.append(img.convert("RGB"))
        except OSError as exc:
            raise ToolError(f"unreadable image ref {ref!r}: {exc}") from exc

    cols = math.ceil(math.sqrt(len(tiles)))
    rows = math.ceil(len(tiles) / cols)
    tile_w = canvas_size // cols
    tile_h = canvas_size // rows
    canvas = Image.new("RGB", (canvas_size, canvas_size), (255, 255, 255))
    for index, tile in enumerate(tiles):
        resized = tile.resize((tile_w, tile_h), Image.NEAREST)
        x = (index % cols) * tile_w
        y = (index // cols) * tile_h
        canvas.paste(resized, (x, y))

    os.makedirs(out_dir, exist_ok=True)
    name = "tryon-" + _digest({"refs": refs, "canvas": canvas_size}) + ".png"
    path = os.path.join(out_dir, name)
    canvas.save(path, format="PNG")
    return path


# ----------------------------------------------------------------------
# Assistant
# ----------------------------------------------------------------------


@dataclass
class OrchestratorConfig:
    allow_anonymous: bool = True
    strict_users: bool = False
    retrieve_k: int = 3
    token_budget: int = TEXT_TOKEN_BUDGET
    state_dir: Optional[str] = None


class SessionStore:
    """In-memory sessions with an optional append-only JSONL journal."""

    def __init__(self, state_dir: Optional[str] = None):
        self.sessions: dict[str, Session] = {}
        self._path = None
        if state_dir:
            os.makedirs(state_dir, exist_ok=True)
            self._path = os.path.join(state_dir, "sessions.jsonl")
            if os.path.exists(self._path):
                self._replay()

    def _replay(self) -> None:
        with open(self._path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                event = json.loads(line)
                if event["type"] == "created":
                    self.sessions[event["session"]] = Session(
                        id=event["session"],
                        user_id=event.get("user"),
                        created_at=event.get("created_at", 0.0),
                    )
                elif event["type"] == "turn":
                    session = self.sessions.get(event["session"])
                    if session is None:
                        continue
                    record = event["turn"]
                    reply = AssistantReply(
                        text=record["reply"]["text"],
                        image_refs=tuple(record["reply"]["image_refs"]),
                        tool_trace=tuple(
                            ToolCall(
                                tool=c["tool"],
                                args_digest=c["args_digest"],
                                outcome_digest=c["outcome_digest"],
                                ok=c["ok"],
                                note=c["note"],
                                image_refs=tuple(c.get("image_refs", ())),
                                error=c.get("error"),
                            )
                            for c in record["reply"]["tool_trace"]
                        ),
                    )
                    session.turns.append(
                        Turn(
                            text=record["user"]["text"],
                            image_refs=tuple(record["user"]["image_refs"]),
                            reply=reply,
                            client_key=record.get("client_key"),
                        )
                    )

    def _append(self, event: dict) -> None:
        if self._path:
            with open(self._path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(event) + "\n")

    def create(self, user_id: Optional[str]) -> Session:
        session = Session(id=uuid.uuid4().hex, user_id=user_id, created_at=time.time())
        self.sessions[session.id] = session
        self._append(
            {
                "type": "created",
                "session": session.id,
                "user": user_id,
                "created_at": session.created_at,
            }
        )
        return session

    def get(self, session_id: str) -> Session:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise SessionNotFound(f"unknown session {session_id!r}") from None

    def record_turn(self, session: Session, turn: Turn) -> None:
        session.turns.append(turn)
        self._append({"type": "turn", "session": session.id, "turn": turn.as_dict()})


class Assistant:
    """Owns the tool registry and the per-turn orchestration pipeline."""

    def __init__(
        self,
        catalog: Catalog,
        embedder,
        config: OrchestratorConfig = OrchestratorConfig(),
        recommender=None,
    ):
        self.catalog = catalog
        self.embedder = embedder
        self.config = config
        self.recommender = recommender or StubRecommender(catalog, embedder)
        self.store = SessionStore(config.state_dir)
        self._output_dir = (
            os.path.join(config.state_dir, "outputs") if config.state_dir else "outputs"
        )
        self.registry = ToolRegistry()
        self._register_tools()

    # -- tool registration ---------------------------------------------

    def _register_tools(self) -> None:
        self.registry.register(
            ToolDescriptor(
                name="recommend",
                description="Recommend a catalog item that completes the given context.",
                input_schema={
                    "type": "object",
                    "properties": {
                        "context_items": {"type": "array", "items": {"type": "string"}},
                        "query": {"type": "string"},
                        "preference_summary": {"type": "string"},
                        "category": {"type": ["string", "null"]},
                        "exclude": {"type": "array", "items": {"type": "string"}},
                    },
                    "required": ["query"],
                },
            ),
            self._tool_recommend,
        )
        self.registry.register(
            ToolDescriptor(
                name="generate_image",
                description="Produce an image for an item (stub returns the catalog image).",
                input_schema={
                    "type": "object",
                    "properties": {"item_id": {"type": "string"}},
                    "required": ["item_id"],
                },
            ),
            self._tool_generate_image,
        )
        self.registry.register(
            ToolDescriptor(
                name="retrieve_similar",
                description="Find catalog items most similar to a given item or text.",
                input_schema={
                    "type": "object",
                    "properties": {
                        "item_id": {"type": "string"},
                        "query_text": {"type": "string"},
                        "k": {"type": "integer"},
                        "category": {"type": ["string", "null"]},
                    },
                    "required": [],
                },
            ),
            self._tool_retrieve_similar,
        )
        self.registry.register(
            ToolDescriptor(
                name="try_on",
                description="Compose a deterministic try-on preview of the given items.",
                input_schema={
                    "type": "object",
                    "properties": {
                        "item_refs": {"type": "array", "items": {"type": "string"}},
                        "person_ref": {"type": ["string", "null"]},
                    },
                    "required": ["item_refs"],
                },
            ),
            self._tool_try_on,
        )

    def _tool_recommend(self, args: dict) -> dict:
        return self.recommender.recommend(
            context_item_ids=list(args.get("context_items", [])),
            query=args.get("query", ""),
            preference=args.get("preference_summary", ""),
            category=args.get("category"),
            exclude=tuple(args.get("exclude", [])),
        )

    def _tool_generate_image(self, args: dict) -> dict:
        item = self.catalog.item(args["item_id"])
        return {"image_ref": item.image_ref, "item_id": item.id}

    def _tool_retrieve_similar(self, args: dict) -> dict:
        k = int(args.get("k", self.config.retrieve_k))
        exclude: list[str] = []
        if "item_id" in args and args["item_id"]:
            item = self.catalog.item(args["item_id"])
            query = self.catalog.features(self.embedder).feature(item)
            exclude = [item.id]
        elif args.get("query_text"):
            query = self.embedder.embed_text(args["query_text"])
        else:
            raise ToolError("retrieve_similar needs item_id or query_text")
        hits = self.catalog.nearest_items(
            query, self.embedder, k=k, category=args.get("category"), exclude=exclude
        )
        return {
            "items": [
                {
                    "id": item_id,
                    "similarity": sim,
                    "description": self.catalog.items[item_id].description,
                    "image_ref": self.catalog.items[item_id].image_ref,
                }
                for item_id, sim in hits
            ]
        }

    def _tool_try_on(self, args: dict) -> dict:
        path = try_on_composite(
            item_refs=list(args["item_refs"]),
            out_dir=self._output_dir,
            person_ref=args.get("person_ref"),
        )
        return {"image_ref": path}

    # -- sessions --------------------------------------------------------

    def create_session(self, user_id: Optional[str] = None) -> Session:
        if user_id:
            if user_id not in self.catalog.users and self.config.strict_users:
                raise CatalogError(f"unknown user {user_id!r}")
        elif not self.config.allow_anonymous:
            raise CatalogError("anonymous sessions are disabled")
        return self.store.create(user_id or None)

    def _preference(self, user_id: Optional[str]) -> str:
        if not user_id or user_id not in self.catalog.users:
            return ""
        user = self.catalog.users[user_id]
        seen: dict[str, None] = {}
        for outfit_id in user.outfit_ids:
            for item_id in self.catalog.outfits[outfit_id].item_ids:
                seen.setdefault(item_id, None)
        items = [self.catalog.items[i] for i in seen]
        return preference_summary(items)

    def _extract_category(self, text: str) -> Optional[str]:
        """First catalog category named in the text (loose singular/plural match)."""
        tokens = _WORD_RE.findall(text.lower())
        categories = {c.lower(): c for c in self.catalog.categories()}
        for token in tokens:
            for lowered, category in categories.items():
                if token == lowered or token == lowered + "s" or token + "s" == lowered:
                    return category
        return None

    def _traced_call(self, trace: list[ToolCall], name: str, args: dict) -> Optional[dict]:
        args_digest = _digest(args)
        try:
            outcome = self.registry.call_tool(name, args)
        except (ToolError, CatalogError, KeyError, ValueError) as exc:
            trace.append(
                ToolCall(
                    tool=name,
                    args_digest=args_digest,
                    outcome_digest="",
                    ok=False,
                    note=f"{name} failed",
                    error=str(exc),
                )
            )
            return None
        image_refs = []
        if "image_ref" in outcome:
            image_refs.append(outcome["image_ref"])
        for entry in outcome.get("items", []):
            if entry.get("image_ref"):
                image_refs.append(entry["image_ref"])
        note = outcome.get("item_id") or outcome.get("image_ref") or f"{name} ok"
        trace.append(
            ToolCall(
                tool=name,
                args_digest=args_digest,
                outcome_digest=_digest(outcome),
                ok=True,
                note=str(note),
                image_refs=tuple(image_refs),
            )
        )
        return outcome

    def _context_items(self, session: Session, uploads: list[str]) -> list[str]:
        """Catalog items the conversation has put on the table, oldest first:
        matches for every uploaded image plus previously recommended items."""
        ordered: dict[str, None] = {}

        def match_upload(ref: str) -> Optional[str]:
            try:
                query = self.embedder.embed_image(ref)
            except EmbeddingError:
                return None
            hits = self.catalog.nearest_items(query, self.embedder, k=1)
            return hits[0][0] if hits else None

        for turn in session.turns:
            for ref in turn.image_refs:
                matched = match_upload(ref)
                if matched:
                    ordered.setdefault(matched, None)
            for call in turn.reply.tool_trace:
                if call.tool == "recommend" and call.ok:
                    ordered.setdefault(call.note, None)
        for ref in uploads:
            matched = match_upload(ref)
            if matched:
                ordered.setdefault(matched, None)
        return [i for i in ordered if i in self.catalog.items]

    def handle_message(
        self,
        session_id: str,
        text: str,
        image_refs: list[str] | None = None,
        client_key: Optional[str] = None,
    ) -> AssistantReply:
        """One assistant turn; never drops the turn on tool failure."""
        session = self.store.get(session_id)
        uploads = list(image_refs or [])
        if client_key:
            for turn in session.turns:
                if turn.client_key == client_key:
                    return turn.reply

        tokens = set(_WORD_RE.findall(text.lower()))
        replace_mode = bool(tokens & {"replace", "change", "swap", "instead"})
        requested_category = self._extract_category(text)

        context_items = self._context_items(session, uploads)
        exclude: list[str] = []
        if replace_mode and requested_category:
            removed = [
                i
                for i in context_items
                if self.catalog.items[i].category == requested_category
            ]
            context_items = [i for i in context_items if i not in removed]
            exclude = removed

        preference = self._preference(session.user_id)
        augmented = text + (f" ({preference})" if preference else "")
        model_context = truncate_tokens(
            " ".join(
                [augmented]
                + [self.catalog.items[i].description for i in context_items]
            ),
            self.config.token_budget,
        )

        trace: list[ToolCall] = []
        recommend_args = {
            "context_items": context_items,
            "query": model_context,
            "preference_summary": preference,
            "category": requested_category,
            "exclude": exclude,
        }
        recommendation = self._traced_call(trace, "recommend", recommend_args)

        segments: list[str] = []
        image_out: list[str] = []
        recommended_id: Optional[str] = None
        if recommendation is not None:
            segments.append(recommendation["text"])
            recommended_id = recommendation["item_id"]
        else:
            segments.append(
                "I couldn't produce a recommendation right now; please try again."
            )

        wants_generate = bool(tokens & {"generate", "show", "visualize"})
        wants_similar = bool(tokens & {"similar", "find"})
        wants_try_on = "try" in tokens

        if wants_generate and recommended_id:
            outcome = self._traced_call(trace, "generate_image", {"item_id": recommended_id})
            if outcome is not None:
                segments.append("Here's an image of the suggestion.")
                image_out.append(outcome["image_ref"])

        if wants_similar:
            focus = self._similar_focus(session, recommended_id, requested_category)
            if focus is not None:
                retrieve_args = {"item_id": focus, "k": self.config.retrieve_k}
                if requested_category:
                    retrieve_args["category"] = requested_category
                outcome = self._traced_call(trace, "retrieve_similar", retrieve_args)
                if outcome is not None and outcome["items"]:
                    listing = "; ".join(e["description"] for e in outcome["items"])
                    segments.append(f"I found similar items in the catalog: {listing}.")
                    image_out.extend(
                        e["image_ref"] for e in outcome["items"] if e.get("image_ref")
                    )

        if wants_try_on:
            outfit_items = context_items + (
                [recommended_id] if recommended_id and recommended_id not in context_items else []
            )
            refs = [
                self.catalog.items[i].image_ref
                for i in outfit_items
                if i in self.catalog.items
            ]
            outcome = self._traced_call(trace, "try_on", {"item_refs": refs})
            if outcome is not None:
                segments.append("Here's a try-on preview of the full look.")
                image_out.append(outcome["image_ref"])

        reply = AssistantReply(
            text=" ".join(segments),
            image_refs=tuple(image_out),
            tool_trace=tuple(trace),
        )
        self.store.record_turn(
            session,
            Turn(text=text, image_refs=tuple(uploads), reply=reply, client_key=client_key),
        )
        return reply

    def _similar_focus(
        self, session: Session, recommended_id: Optional[str], category: Optional[str]
    ) -> Optional[str]:
        """Item whose neighbours the user wants: prefer a recommendation in the
        named category (this turn first, then history), else the latest one."""
        candidates: list[str] = []
        if recommended_id:
            candidates.append(recommended_id)
        for turn in reversed(session.turns):
            for call in reversed(turn.reply.tool_trace):
                if call.tool == "recommend" and call.ok and call.note in self.catalog.items:
                    candidates.append(call.note)
        if category:
            for item_id in candidates:
                if self.catalog.items[item_id].category == category:
                    return item_id
        return candidates[0] if candidates else None


# ----------------------------------------------------------------------
# JSON-RPC dispatch
# ----------------------------------------------------------------------


def _rpc_error(request_id, code: int, message: str) -> dict:
    return {"jsonrpc": "2.0", "id": request_id, "error": {"code": code, "message": message}}


def _rpc_result(request_id, result) -> dict:
    return {"jsonrpc": "2.0", "id": request_id, "result": result}


def handle_rpc(assistant: Assistant, request) -> dict:
    """Dispatch one JSON-RPC 2.0 request; always answers with a well-formed
    response object, even for malformed input."""
    if not isinstance(request, dict):
        return _rpc_error(None, RPC_INVALID_REQUEST, "request must be a JSON object")
    request_id = request.get("id")
    if request.get("jsonrpc") != "2.0" or "method" not in request or "id" not in request:
        return _rpc_error(
            request_id, RPC_INVALID_REQUEST, "request needs jsonrpc='2.0', id, and method"
        )
    method = request["method"]
    params = request.get("params") or {}

    if method == "initialize":
        return _rpc_result(
            request_id,
            {
                "protocolVersion": "2025-06-18",
                "serverInfo": {"name": "outfitkit", "version": "0.1.0"},
                "capabilities": {"tools": {}},
            },
        )
    if method == "tools/list":
        return _rpc_result(
            request_id, {"tools": [d.as_dict() for d in assistant.registry.list_tools()]}
        )
    if method == "tools/call":
        if not isinstance(params, dict) or "name" not in params:
            return _rpc_error(request_id, RPC_INVALID_PARAMS, "params need a tool name")
        name = params["name"]
        args = params.get("arguments") or {}
        if not isinstance(args, dict):
            return _rpc_error(request_id, RPC_INVALID_PARAMS, "arguments must be an object")
        try:
            outcome = assistant.registry.call_tool(name, args)
        except KeyError:
            return _rpc_error(request_id, RPC_METHOD_NOT_FOUND, f"unknown tool {name!r}")
        except ValueError as exc:
            return _rpc_error(request_id, RPC_INVALID_PARAMS, str(exc))
        except (ToolError, CatalogError) as exc:
            return _rpc_error(request_id, RPC_INTERNAL_ERROR, str(exc))
        return _rpc_result(request_id, {"content": outcome})
    return _rpc_error(request_id, RPC_METHOD_NOT_FOUND, f"unknown method {method!r}")
