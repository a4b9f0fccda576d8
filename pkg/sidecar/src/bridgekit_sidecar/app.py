"""HTTP surface of the annotation sidecar.

POST /annotate takes raw UTF-8 text and a model selector and returns
tokens, per-token POS tags, mention spans with coreference chain ids
(singletons included), and a flat dependency sketch — the same schema
the corpus loader validates. GET /health is 503 until at least one
model is loaded, 200 after. The service is stateless per request and
never caches; clients are expected to re-validate responses.
"""

from __future__ import annotations

from contextlib import asynccontextmanager

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .annotate import AnnotatorRegistry, ModelUnavailable

DEFAULT_MODEL = "rule"


class AnnotateRequest(BaseModel):
    text: str
    model: str = Field(default=DEFAULT_MODEL)


def create_app(preload: tuple[str, ...] = (DEFAULT_MODEL,)) -> FastAPI:
    """Build the service; models in ``preload`` are loaded at startup.

    With ``preload=()`` the service starts unhealthy (503) until a model
    is loaded through ``app.state.registry`` — that is the warmup window
    clients observe.
    """
    registry = AnnotatorRegistry()

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        for name in preload:
            registry.load(name)
        yield

    app = FastAPI(title="bridgekit-sidecar", version=__version__, lifespan=lifespan)
    app.state.registry = registry

    @app.get("/health")
    def health():
        loaded = registry.loaded_models
        if not loaded:
            raise HTTPException(status_code=503, detail="no annotation model loaded")
        return {"status": "ok", "models": list(loaded), "version": __version__}

    @app.post("/annotate")
    def annotate(request: AnnotateRequest):
        if not request.text.strip():
            raise HTTPException(status_code=400, detail="empty text")
        try:
            annotator = registry.get(request.model)
        except KeyError:
            raise HTTPException(
                status_code=400, detail=f"unknown model {request.model!r}"
            ) from None
        except ModelUnavailable as exc:
            raise HTTPException(status_code=503, detail=str(exc)) from None
        return annotator(request.text).to_response_dict()

    return app


def main():
    import uvicorn

    uvicorn.run(create_app(), host="127.0.0.1", port=8750)


if __name__ == "__main__":
    main()
