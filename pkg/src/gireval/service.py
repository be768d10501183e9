"""HTTP audit service: blinded item delivery, label intake, reporting.

The API is the only surface the audit UI consumes:

- ``GET /api/batch?assessor=ID`` returns the items that assessor has not
  labeled yet, blinded (no judge outcome in the payload).
- ``POST /api/labels`` with ``{item_id, label, assessor_id}`` stores a
  label; the response may reveal the judge outcome for calibration,
  which is fine because the human has already committed.
- ``GET /api/report`` returns the agreement report.

Set AUDIT_TOKEN to require ``Authorization: Bearer <token>`` on /api.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Union

from fastapi import Depends, FastAPI, HTTPException, Query, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .audit import AuditError, AuditStore, audit_report, human_matches_llm, record_human_label

AUDIT_TOKEN_VAR = "AUDIT_TOKEN"


class LabelSubmission(BaseModel):
    item_id: str
    label: Union[int, str, list[str]]
    assessor_id: str


def create_app(
    store: AuditStore,
    reveal: bool = True,
    token: str | None = None,
    embedder=None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    """Build the audit service around one audit store."""
    app = FastAPI(title="audit service")
    required_token = token if token is not None else os.environ.get(AUDIT_TOKEN_VAR)

    def check_token(request: Request) -> None:
        if not required_token:
            return
        header = request.headers.get("Authorization", "")
        if header != f"Bearer {required_token}":
            raise HTTPException(status_code=401, detail="missing or bad bearer token")

    @app.get("/api/batch", dependencies=[Depends(check_token)])
    def get_batch(assessor: str = Query(min_length=1)):
        items = store.pending_for(assessor)
        return {"assessor_id": assessor, "items": [item.to_public_dict() for item in items]}

    @app.post("/api/labels", dependencies=[Depends(check_token)])
    def post_label(submission: LabelSubmission):
        try:
            label = record_human_label(
                store, submission.item_id, submission.label, submission.assessor_id
            )
        except AuditError as exc:
            status = 404 if "unknown audit item" in str(exc) else 400
            raise HTTPException(status_code=status, detail=str(exc))
        response = {"status": "ok", "item_id": label.item_id}
        if reveal:
            item = store.get_item(label.item_id)
            response["reveal"] = {
                "llm_outcome": list(item.llm_outcome)
                if isinstance(item.llm_outcome, tuple)
                else item.llm_outcome,
                "match": human_matches_llm(item, label.label),
            }
        return response

    @app.get("/api/report", dependencies=[Depends(check_token)])
    def get_report():
        return audit_report(store, embedder=embedder).to_dict()

    @app.exception_handler(AuditError)
    def audit_error_handler(request: Request, exc: AuditError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    return app
