# cli/fast_endpoint.py
"""
HTTP surface for the toolkit.

Run with:

    uvicorn cli.fast_endpoint:app --port 8000

Request bodies embed detection documents in the same schema as the JSON
files (see :mod:`tsl.formats`).
"""
import json
import logging
import os
from typing import List, Optional, Tuple

from fastapi import FastAPI, Header, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from tsl import __version__
from tsl.config import ConfType, FusionConfig, RescaleMode
from tsl.core import DetectionSet, EventSet
from tsl.errors import TSLError
from tsl.formats import DocumentModel, document_from_dict, dumps_detections
from tsl.fusion import fuse_dataset, nms_1d
from tsl.metrics import TiouThresholds, evaluate

logger = logging.getLogger(__name__)

app = FastAPI(title="TSL Evaluation and Fusion API", version=__version__)

# ----- CORS (reads comma-separated origins from env) -----
allow_origins = [o.strip() for o in os.getenv("CORS_ALLOW_ORIGINS", "").split(",") if o.strip()]
if allow_origins:
    app.add_middleware(
        CORSMiddleware,
        allow_origins=allow_origins,
        allow_credentials=False,
        allow_methods=["POST", "GET", "OPTIONS"],
        allow_headers=["*"],
    )

# ----- Simple API key auth -----
API_KEY = os.getenv("TSL_API_KEY", "")

def require_api_key(x_api_key: str) -> None:
    if API_KEY and x_api_key != API_KEY:
        raise HTTPException(status_code=401, detail="Invalid API key")

# ----- Models -----
class EvaluateRequest(BaseModel):
    ground_truth: DocumentModel
    predictions: DocumentModel
    thresholds: str = "0.1:0.5:0.1"

class FuseRequest(BaseModel):
    inputs: List[DocumentModel]
    weights: Optional[Tuple[float, ...]] = None
    cluster_tiou: float = 0.55
    rescale_mode: RescaleMode = RescaleMode.BY_COUNT_CLAMPED
    score_floor: float = 0.0
    conf_type: ConfType = ConfType.AVG

class NmsRequest(BaseModel):
    input: DocumentModel
    tiou_threshold: float = 0.5

def _document(body: DocumentModel):
    return document_from_dict(body.model_dump(exclude_none=True))

def _predictions(doc) -> List[DetectionSet]:
    if not doc.has_scores and any(len(s) for s in doc.sets):
        raise HTTPException(status_code=422, detail="prediction records need a score")
    return [s if isinstance(s, DetectionSet) else DetectionSet(s.video_id) for s in doc.sets]

def _as_json(vocabulary, sets) -> dict:
    return json.loads(dumps_detections(vocabulary, sets))

# ----- Meta endpoints -----
@app.get("/")
def root():
    return {"ok": True, "message": "TSL endpoint ready"}

@app.get("/version")
def version():
    return {"version": app.version}

@app.get("/health")
def health():
    # light probe: the thresholds grammar and the metric stack import fine
    TiouThresholds.parse("0.1:0.5:0.1")
    return {"status": "ok"}

# ----- Core endpoints -----
@app.post("/evaluate")
def evaluate_endpoint(req: EvaluateRequest, x_api_key: str = Header(default="")):
    require_api_key(x_api_key)
    try:
        gt = _document(req.ground_truth)
        preds = _document(req.predictions)
        if gt.has_scores and any(len(s) for s in gt.sets):
            raise HTTPException(status_code=422, detail="ground-truth records must not carry scores")
        gt_sets = [s if isinstance(s, EventSet) else EventSet(s.video_id) for s in gt.sets]
        pred_sets = _predictions(preds)
        report = evaluate(pred_sets, gt_sets, TiouThresholds.parse(req.thresholds))
    except TSLError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    return report.to_dict()

@app.post("/fuse")
def fuse_endpoint(req: FuseRequest, x_api_key: str = Header(default="")):
    require_api_key(x_api_key)
    try:
        config = FusionConfig(
            weights=req.weights,
            cluster_tiou=req.cluster_tiou,
            rescale_mode=req.rescale_mode,
            score_floor=req.score_floor,
            conf_type=req.conf_type,
        )
        docs = [_document(d) for d in req.inputs]
        if not docs:
            raise HTTPException(status_code=422, detail="at least one input is required")
        vocabulary = docs[0].vocabulary
        if any(d.vocabulary != vocabulary for d in docs):
            raise HTTPException(status_code=422, detail="inputs use different vocabularies")
        fused = fuse_dataset([(f"model_{k}", _predictions(d)) for k, d in enumerate(docs)], config)
    except TSLError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    return _as_json(vocabulary, fused)

@app.post("/nms")
def nms_endpoint(req: NmsRequest, x_api_key: str = Header(default="")):
    require_api_key(x_api_key)
    try:
        doc = _document(req.input)
        kept = [nms_1d(s, req.tiou_threshold) for s in _predictions(doc)]
    except TSLError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    return _as_json(doc.vocabulary, kept)
