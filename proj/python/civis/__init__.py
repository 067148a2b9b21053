"""Python bindings for the contrastive missing-data engine."""

import json as _json

from . import _civ
from ._civ import (
    cosine_similarity,
    info_nce,
    positive_score,
    negative_score,
    project2d,
    synth_csv,
)


class Service:
    """In-process session service; methods take and return plain dicts."""

    def __init__(self, log_dir=None, seed=None):
        self._svc = _civ.Service(log_dir, seed)

    def _call(self, name, *args):
        return _json.loads(getattr(self._svc, name)(*args))

    def create_session(self, body):
        return self._call("create_session", _json.dumps(body))

    def session_info(self, sid):
        return self._call("session_info", sid)

    def select_features(self, sid, selected, **extra):
        return self._call("select_features", sid, _json.dumps({"selected": selected, **extra}))

    def embeddings(self, sid, **query):
        return self._call("embeddings", sid, {k: str(v) for k, v in query.items()})

    def set_negative(self, sid, **body):
        return self._call("set_negative", sid, _json.dumps(body))

    def set_positive(self, sid, **body):
        return self._call("set_positive", sid, _json.dumps(body))

    def train(self, sid, wait=True, **config):
        out = self._call("start_training", sid, _json.dumps(config))
        if wait:
            self._svc.wait_idle(sid)
        return out

    def events(self, sid, run_id):
        return self._svc.events(sid, run_id)

    def metrics(self, sid):
        return self._call("metrics", sid)

    def save_log(self, sid):
        return self._call("save_log", sid)

    def switch_log(self, sid, lid):
        return self._call("switch_log", sid, lid)

    def infer(self, sid, **body):
        return self._call("infer", sid, _json.dumps(body))


def run_bench(config):
    """Run the imputation benchmark; `config` mirrors the CLI config sections."""
    return _json.loads(_civ.run_bench(_json.dumps(config)))


def detect_collapse(stream, window=5, mean_threshold=0.995, variance_threshold=1e-4):
    return _civ.detect_collapse(_json.dumps(stream), window, mean_threshold, variance_threshold)
