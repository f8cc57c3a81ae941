"""HTTP/WebSocket bridge in front of the shared-variable engine.

Browsers cannot speak the UDP protocol, so the dashboard reads the cache
over ``GET /api/vars``, writes through ``POST /api/vars/{name}`` (an
internally issued publish) and follows live updates on the ``/api/stream``
WebSocket, which forwards every accepted publish as one JSON object.
"""

from __future__ import annotations

import asyncio
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .sharedvar import SharedVarEngine, VarRecord


class VarWrite(BaseModel):
    value: float


def record_json(record: VarRecord) -> dict:
    return {"value": record.value, "timestamp_us": record.timestamp_us,
            "seq": record.seq}


def create_bridge_app(engine: SharedVarEngine,
                      static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="meshmon bridge")

    @app.get("/api/vars")
    def get_vars() -> dict:
        return {record.name: record_json(record)
                for record in engine.snapshot_vars("*")}

    @app.get("/api/vars/{name}")
    def get_var(name: str):
        record = engine.get(name)
        if record is None:
            return JSONResponse({"error": f"unknown variable {name!r}"}, status_code=404)
        return {"name": record.name, **record_json(record)}

    @app.post("/api/vars/{name}")
    def post_var(name: str, body: VarWrite):
        record = engine.publish_value(name, body.value)
        return {"name": record.name, **record_json(record)}

    @app.websocket("/api/stream")
    async def stream(ws: WebSocket) -> None:
        await ws.accept()
        loop = asyncio.get_running_loop()
        queue: asyncio.Queue[VarRecord] = asyncio.Queue()

        def on_publish(record: VarRecord) -> None:
            loop.call_soon_threadsafe(queue.put_nowait, record)

        engine.add_listener(on_publish)
        try:
            while True:
                record = await queue.get()
                await ws.send_json({"name": record.name, **record_json(record)})
        except (WebSocketDisconnect, RuntimeError):
            pass
        finally:
            engine.remove_listener(on_publish)

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="static")
    return app
