"""HTTP surface for the assistant: JSON-RPC tool endpoint plus session
endpoints consumed by the chat UI.

All error responses carry {"code", "message"}; the /rpc endpoint always
answers with a well-formed JSON-RPC object even for unparseable bodies.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import FileResponse, JSONResponse

from .catalog import CatalogError
from .orchestrator import (
    Assistant,
    RPC_PARSE_ERROR,
    SessionNotFound,
    handle_rpc,
)

__all__ = ["create_app"]


def _error(status: int, code: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


def _decode_uploads(assistant: Assistant, images: list) -> list[str]:
    """Turn the request's image entries into locator strings.

    Data URIs are written to the uploads directory under a content hash;
    anything else is passed through as a ref.
    """
    uploads_dir = (
        os.path.join(assistant.config.state_dir, "uploads")
        if assistant.config.state_dir
        else "uploads"
    )
    refs: list[str] = []
    for entry in images or []:
        if not isinstance(entry, str) or not entry:
            continue
        if entry.startswith("data:"):
            try:
                header, payload = entry.split(",", 1)
                raw = base64.b64decode(payload)
            except (ValueError, base64.binascii.Error):
                continue
            ext = ".png"
            if "image/jpeg" in header:
                ext = ".jpg"
            os.makedirs(uploads_dir, exist_ok=True)
            name = hashlib.sha256(raw).hexdigest()[:16] + ext
            path = os.path.join(uploads_dir, name)
            if not os.path.exists(path):
                with open(path, "wb") as fh:
                    fh.write(raw)
            refs.append(path)
        else:
            refs.append(entry)
    return refs


def create_app(assistant: Assistant, ui_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="outfitkit", docs_url=None, redoc_url=None)

    try:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=["*"],
            allow_methods=["*"],
            allow_headers=["*"],
        )
    except ImportError:
        pass

    @app.get("/health")
    def health():
        return {"ok": True, "items": len(assistant.catalog.items)}

    @app.get("/users")
    def users():
        listing = [
            {"id": user.id, "n_outfits": len(user.outfit_ids)}
            for user in assistant.catalog.users.values()
        ]
        listing.sort(key=lambda u: u["id"])
        return {"users": listing}

    @app.post("/rpc")
    async def rpc(request: Request):
        try:
            body = json.loads(await request.body())
        except (ValueError, UnicodeDecodeError):
            return JSONResponse(
                content={
                    "jsonrpc": "2.0",
                    "id": None,
                    "error": {"code": RPC_PARSE_ERROR, "message": "unparseable JSON body"},
                }
            )
        return JSONResponse(content=handle_rpc(assistant, body))

    @app.post("/session")
    async def create_session(request: Request):
        try:
            body = json.loads(await request.body() or b"{}")
        except ValueError:
            return _error(400, 400, "unparseable JSON body")
        user_id = body.get("user_id") if isinstance(body, dict) else None
        try:
            session = assistant.create_session(user_id)
        except CatalogError as exc:
            return _error(400, 400, str(exc))
        return {"id": session.id}

    @app.post("/session/{session_id}/message")
    async def post_message(session_id: str, request: Request):
        try:
            body = json.loads(await request.body())
        except ValueError:
            return _error(400, 400, "unparseable JSON body")
        if not isinstance(body, dict) or not isinstance(body.get("text"), str):
            return _error(400, 400, "body needs a text field")
        refs = _decode_uploads(assistant, body.get("images") or [])
        try:
            reply = assistant.handle_message(
                session_id,
                body["text"],
                image_refs=refs,
                client_key=body.get("client_key"),
            )
        except SessionNotFound as exc:
            return _error(404, 404, str(exc))
        return reply.as_dict()

    @app.get("/session/{session_id}")
    def get_session(session_id: str):
        try:
            session = assistant.store.get(session_id)
        except SessionNotFound as exc:
            return _error(404, 404, str(exc))
        return session.as_dict()

    @app.get("/image")
    def get_image(ref: str):
        # Only serve files that actually exist on disk; refs are opaque
        # locators, so remote URLs have nothing to serve here.
        if not ref or not os.path.isfile(ref):
            return _error(404, 404, f"no such image {ref!r}")
        return FileResponse(ref)

    if ui_dir and os.path.isdir(ui_dir):
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
