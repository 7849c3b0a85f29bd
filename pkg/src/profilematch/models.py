"""Binary match/non-match classifiers over similarity vectors.

Four kinds behind one train/predict contract: Gaussian naive Bayes,
k-nearest-neighbours, a CART-style decision tree, and a linear SVM
trained by deterministic batch subgradient descent. Every decision tie
breaks to NonMatch: in this domain a false link is the costly error.

Missing slot values (propagate_missing vectors) are handled per kind:
naive Bayes drops the feature's likelihood term, the other three impute
the neutral score 0.5. Training uses the same treatment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ModelFormatError
from .pipeline import NEUTRAL_SCORE, MetricConfig, SimilarityVector
from .profiles import Label

KINDS = ("nb", "knn", "dt", "svm")
VARIANCE_FLOOR = 1e-9
MODEL_MAGIC = "profilematch-model"
MODEL_VERSION = 1

DEFAULT_HYPERPARAMS = {
    "nb": {},
    "knn": {"k": 5},
    "dt": {"min_leaf": 2},
    "svm": {"lam": 1e-3, "epochs": 200, "lr0": 1.0},
}


@dataclass(frozen=True, eq=False)
class TrainedModel:
    kind: str
    config_id: str
    n_trained: int
    seed: int
    params: dict

    @property
    def feature_slots(self) -> tuple:
        cfg = MetricConfig.from_config_id(self.config_id)
        return tuple(slot for slot, _ in cfg.selectors())


def _labels_to_int(labels) -> np.ndarray:
    out = np.empty(len(labels), dtype=np.int8)
    for i, lab in enumerate(labels):
        if lab is Label.MATCH:
            out[i] = 1
        elif lab is Label.NONMATCH:
            out[i] = 0
        else:
            raise ValueError("training vectors must be labeled")
    return out


def vectors_to_arrays(vectors) -> tuple[np.ndarray, np.ndarray, str]:
    """(X with NaN for missing, int labels, shared config_id)."""
    vectors = list(vectors)
    if not vectors:
        raise ValueError("no training vectors")
    config_id = vectors[0].config_id
    for v in vectors:
        if v.config_id != config_id:
            raise ConfigurationError(
                f"mixed config_ids in training data: {config_id!r} "
                f"vs {v.config_id!r}")
    slots = [s for s, _ in
             MetricConfig.from_config_id(config_id).selectors()]
    X = np.array([[np.nan if getattr(v, s) is None else getattr(v, s)
                   for s in slots] for v in vectors], dtype=np.float64)
    y = _labels_to_int([v.label for v in vectors])
    return X, y, config_id


def _impute(X: np.ndarray) -> np.ndarray:
    if np.isnan(X).any():
        X = np.where(np.isnan(X), NEUTRAL_SCORE, X)
    return X


# ---------------------------------------------------------------- nb --

def _train_nb(X, y, hp, seed):
    d = X.shape[1]
    priors = np.empty(2)
    means = np.full((2, d), NEUTRAL_SCORE)
    variances = np.full((2, d), VARIANCE_FLOOR)
    for cls in (0, 1):
        rows = X[y == cls]
        priors[cls] = len(rows) / len(X)
        for j in range(d):
            col = rows[:, j]
            col = col[~np.isnan(col)]
            if len(col):
                means[cls, j] = col.mean()
                variances[cls, j] = max(col.var(), VARIANCE_FLOOR)
    return {"priors": priors, "means": means, "variances": variances}


def _nb_proba(params, X):
    valid = ~np.isnan(X)
    Xf = np.where(valid, X, 0.0)
    log_post = np.empty((len(X), 2))
    for cls in (0, 1):
        mu = params["means"][cls]
        var = params["variances"][cls]
        ll = -0.5 * (np.log(2 * np.pi * var) + (Xf - mu) ** 2 / var)
        log_post[:, cls] = (np.log(params["priors"][cls])
                            + np.where(valid, ll, 0.0).sum(axis=1))
    # normalize in log space
    diff = log_post[:, 0] - log_post[:, 1]
    return 1.0 / (1.0 + np.exp(np.clip(diff, -700, 700)))


# --------------------------------------------------------------- knn --

def _train_knn(X, y, hp, seed):
    return {"k": int(hp["k"]), "X": _impute(X).copy(), "y": y.copy()}


def _knn_proba(params, X):
    train = params["X"]
    k = params["k"]
    if k > len(train):
        # cap at the training size, made odd so the cap itself never
        # introduces vote ties (explicitly chosen even k still can)
        k = len(train)
        if k % 2 == 0 and k > 1:
            k -= 1
    out = np.empty(len(X))
    for i, row in enumerate(_impute(X)):
        dist = ((train - row) ** 2).sum(axis=1)
        nearest = np.argsort(dist, kind="stable")[:k]
        out[i] = params["y"][nearest].sum() / k
    return out


# ---------------------------------------------------------------- dt --

def _gini_counts(n0, n1):
    n = n0 + n1
    if n == 0:
        return 0.0
    p0 = n0 / n
    p1 = n1 / n
    return 1.0 - p0 * p0 - p1 * p1


def _train_dt(X, y, hp, seed):
    X = _impute(X)
    min_leaf = int(hp["min_leaf"])
    nodes = []

    def leaf(idx):
        nodes.append({"leaf": True,
                      "n0": int((y[idx] == 0).sum()),
                      "n1": int((y[idx] == 1).sum())})
        return len(nodes) - 1

    def build(idx):
        labels = y[idx]
        n = len(idx)
        n1 = int(labels.sum())
        if n1 == 0 or n1 == n or n < 2 * min_leaf:
            return leaf(idx)
        parent = _gini_counts(n - n1, n1)
        best = None
        for f in range(X.shape[1]):
            values = X[idx, f]
            order = np.argsort(values, kind="stable")
            sv = values[order]
            sy = labels[order]
            ones = np.cumsum(sy)
            for i in range(min_leaf, n - min_leaf + 1):
                if sv[i - 1] == sv[i]:
                    continue
                threshold = (sv[i - 1] + sv[i]) / 2.0
                l1 = int(ones[i - 1])
                r1 = n1 - l1
                weighted = (i * _gini_counts(i - l1, l1)
                            + (n - i) * _gini_counts(n - i - r1, r1)) / n
                reduction = parent - weighted
                key = (-reduction, f, threshold)
                if best is None or key < best[0]:
                    best = (key, f, threshold)
        if best is None or -best[0][0] <= 1e-12:
            return leaf(idx)
        _, f, threshold = best
        left_mask = X[idx, f] <= threshold
        node_pos = len(nodes)
        nodes.append({"leaf": False, "feature": f, "threshold": threshold,
                      "left": -1, "right": -1})
        left = build(idx[left_mask])
        right = build(idx[~left_mask])
        nodes[node_pos]["left"] = left
        nodes[node_pos]["right"] = right
        return node_pos

    build(np.arange(len(X)))
    return {"min_leaf": min_leaf, "nodes": nodes}


def _dt_proba(params, X):
    nodes = params["nodes"]
    out = np.empty(len(X))
    for i, row in enumerate(_impute(X)):
        pos = 0
        while not nodes[pos]["leaf"]:
            node = nodes[pos]
            pos = node["left"] if row[node["feature"]] <= node["threshold"] \
                else node["right"]
        n0, n1 = nodes[pos]["n0"], nodes[pos]["n1"]
        out[i] = n1 / (n0 + n1) if n0 + n1 else 0.0
    return out


# --------------------------------------------------------------- svm --

def _svm_objective(w, b, X, ysigned, lam):
    margins = 1.0 - ysigned * (X @ w + b)
    return float(np.maximum(margins, 0.0).mean() + lam * (w @ w))


def _train_svm(X, y, hp, seed):
    X = _impute(X)
    lam = float(hp["lam"])
    epochs = int(hp["epochs"])
    lr0 = float(hp["lr0"])
    ysigned = np.where(y == 1, 1.0, -1.0)
    n, d = X.shape
    # deterministic warm start: least-squares fit to the signed labels
    # puts the separator near the data before hinge descent refines it
    aug = np.hstack([X, np.ones((n, 1))])
    coef = np.linalg.lstsq(aug, ysigned, rcond=None)[0]
    w = coef[:d].copy()
    b = float(coef[d])
    obj = _svm_objective(w, b, X, ysigned, lam)
    for t in range(epochs):
        active = ysigned * (X @ w + b) < 1.0
        g_w = 2.0 * lam * w - (ysigned[active, None] * X[active]).sum(axis=0) / n
        g_b = -ysigned[active].sum() / n
        # line search along the subgradient: grow the step while it
        # improves, shrink when it does not; a step is only ever taken
        # when the objective does not increase
        lr = lr0 / (1.0 + t)
        best_step = None
        for _ in range(40):
            obj_try = _svm_objective(w - lr * g_w, b - lr * g_b, X,
                                     ysigned, lam)
            if obj_try <= obj:
                best_step = (lr, obj_try)
                break
            lr /= 2.0
        if best_step is not None:
            lr, obj_try = best_step
            grown = lr * 2.0
            for _ in range(20):
                obj_grow = _svm_objective(w - grown * g_w, b - grown * g_b,
                                          X, ysigned, lam)
                if obj_grow < obj_try:
                    lr, obj_try = grown, obj_grow
                    grown *= 2.0
                else:
                    break
            w = w - lr * g_w
            b = b - lr * g_b
            obj = obj_try
    return {"lam": lam, "epochs": epochs, "lr0": lr0,
            "w": w, "b": float(b)}


def _svm_proba(params, X):
    margin = _impute(X) @ params["w"] + params["b"]
    return 1.0 / (1.0 + np.exp(-np.clip(margin, -700, 700)))


# ------------------------------------------------------------ public --

_TRAINERS = {"nb": _train_nb, "knn": _train_knn, "dt": _train_dt,
             "svm": _train_svm}
_SCORERS = {"nb": _nb_proba, "knn": _knn_proba, "dt": _dt_proba,
            "svm": _svm_proba}


def train(kind: str, vectors, hyperparams: dict | None = None,
          seed: int = 0) -> TrainedModel:
    """Fit one classifier kind on labeled vectors sharing a config_id."""
    if kind not in KINDS:
        raise ValueError(f"unknown classifier kind {kind!r}, "
                         f"choose from {KINDS}")
    X, y, config_id = vectors_to_arrays(vectors)
    return train_arrays(kind, X, y, config_id, hyperparams, seed)


def train_arrays(kind: str, X: np.ndarray, y: np.ndarray, config_id: str,
                 hyperparams: dict | None = None,
                 seed: int = 0) -> TrainedModel:
    """Array-level training entry; X may contain NaN for missing."""
    if kind not in KINDS:
        raise ValueError(f"unknown classifier kind {kind!r}")
    y = np.asarray(y)
    if len(np.unique(y)) < 2:
        raise ValueError("training data must contain both classes")
    hp = dict(DEFAULT_HYPERPARAMS[kind])
    hp.update(hyperparams or {})
    params = _TRAINERS[kind](np.asarray(X, dtype=np.float64), y, hp, seed)
    return TrainedModel(kind=kind, config_id=config_id, n_trained=len(y),
                        seed=seed, params=params)


def _vector_to_row(model: TrainedModel, v: SimilarityVector) -> np.ndarray:
    if v.config_id != model.config_id:
        raise ConfigurationError(
            f"vector config {v.config_id!r} does not match model "
            f"config {model.config_id!r}")
    return np.array([[np.nan if getattr(v, s) is None else getattr(v, s)
                      for s in model.feature_slots]], dtype=np.float64)


def predict_proba(model: TrainedModel, v: SimilarityVector) -> float:
    """P(Match | v). SVM probabilities are uncalibrated margins."""
    return float(_SCORERS[model.kind](model.params,
                                      _vector_to_row(model, v))[0])


def predict(model: TrainedModel, v: SimilarityVector) -> Label:
    return Label.MATCH if predict_proba(model, v) > 0.5 else Label.NONMATCH


def predict_proba_arrays(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    return _SCORERS[model.kind](model.params,
                                np.asarray(X, dtype=np.float64))


def predict_arrays(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    """1 = Match, 0 = NonMatch; ties at 0.5 go to NonMatch."""
    return (predict_proba_arrays(model, X) > 0.5).astype(np.int8)


# ------------------------------------------------------------ file IO --

def _fmt_floats(arr) -> str:
    return ",".join(repr(float(x)) for x in np.asarray(arr).ravel())


def _parse_floats(text: str) -> np.ndarray:
    if not text:
        return np.empty(0)
    return np.array([float(x) for x in text.split(",")], dtype=np.float64)


def save_model(model: TrainedModel, path) -> None:
    """Versioned self-describing text format; floats round-trip exactly.

    Layout: a `profilematch-model v<N>` magic line, `key: value` header
    lines (kind, config_id, n, seed), a `params:` marker followed by
    kind-specific `key: comma-floats` lines (dt nodes are one line per
    node), and a closing `end` line.
    """
    lines = [f"{MODEL_MAGIC} v{MODEL_VERSION}",
             f"kind: {model.kind}",
             f"config_id: {model.config_id}",
             f"n: {model.n_trained}",
             f"seed: {model.seed}",
             "params:"]
    p = model.params
    if model.kind == "nb":
        lines.append(f"priors: {_fmt_floats(p['priors'])}")
        for cls in (0, 1):
            lines.append(f"mean.{cls}: {_fmt_floats(p['means'][cls])}")
            lines.append(f"var.{cls}: {_fmt_floats(p['variances'][cls])}")
    elif model.kind == "knn":
        lines.append(f"k: {p['k']}")
        lines.append(f"y: {','.join(str(int(v)) for v in p['y'])}")
        for row in p["X"]:
            lines.append(f"x: {_fmt_floats(row)}")
    elif model.kind == "dt":
        lines.append(f"min_leaf: {p['min_leaf']}")
        for node in p["nodes"]:
            if node["leaf"]:
                lines.append(f"leaf: {node['n0']},{node['n1']}")
            else:
                lines.append(f"node: {node['feature']},"
                             f"{repr(float(node['threshold']))},"
                             f"{node['left']},{node['right']}")
    elif model.kind == "svm":
        lines.append(f"lam: {repr(p['lam'])}")
        lines.append(f"epochs: {p['epochs']}")
        lines.append(f"lr0: {repr(p['lr0'])}")
        lines.append(f"w: {_fmt_floats(p['w'])}")
        lines.append(f"b: {repr(p['b'])}")
    lines.append("end")
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


def _header_value(lines, key):
    prefix = f"{key}: "
    for line in lines:
        if line.startswith(prefix):
            return line[len(prefix):]
    raise ModelFormatError(f"missing {key!r} line")


def load_model(path) -> TrainedModel:
    with open(path, encoding="utf-8") as f:
        lines = [line.rstrip("\n") for line in f]
    if not lines or not lines[0].startswith(MODEL_MAGIC):
        raise ModelFormatError(f"{path}: not a model file")
    version_tag = lines[0][len(MODEL_MAGIC):].strip()
    if version_tag != f"v{MODEL_VERSION}":
        raise ModelFormatError(
            f"{path}: unsupported model version {version_tag!r} "
            f"(this build reads v{MODEL_VERSION})")
    if "end" not in lines:
        raise ModelFormatError(f"{path}: truncated model file (no end line)")
    lines = lines[:lines.index("end")]
    try:
        kind = _header_value(lines, "kind")
        config_id = _header_value(lines, "config_id")
        n = int(_header_value(lines, "n"))
        seed = int(_header_value(lines, "seed"))
        if kind not in KINDS:
            raise ModelFormatError(f"unknown model kind {kind!r}")
        if kind == "nb":
            params = {
                "priors": _parse_floats(_header_value(lines, "priors")),
                "means": np.stack([
                    _parse_floats(_header_value(lines, f"mean.{c}"))
                    for c in (0, 1)]),
                "variances": np.stack([
                    _parse_floats(_header_value(lines, f"var.{c}"))
                    for c in (0, 1)]),
            }
        elif kind == "knn":
            rows = [_parse_floats(line[3:]) for line in lines
                    if line.startswith("x: ")]
            params = {
                "k": int(_header_value(lines, "k")),
                "y": np.array([int(v) for v in
                               _header_value(lines, "y").split(",")],
                              dtype=np.int8),
                "X": np.vstack(rows) if rows else np.empty((0, 0)),
            }
        elif kind == "dt":
            nodes = []
            for line in lines:
                if line.startswith("leaf: "):
                    n0, n1 = line[6:].split(",")
                    nodes.append({"leaf": True, "n0": int(n0), "n1": int(n1)})
                elif line.startswith("node: "):
                    f_, t, l, r = line[6:].split(",")
                    nodes.append({"leaf": False, "feature": int(f_),
                                  "threshold": float(t), "left": int(l),
                                  "right": int(r)})
            if not nodes:
                raise ModelFormatError("decision tree has no nodes")
            params = {"min_leaf": int(_header_value(lines, "min_leaf")),
                      "nodes": nodes}
        else:
            params = {
                "lam": float(_header_value(lines, "lam")),
                "epochs": int(_header_value(lines, "epochs")),
                "lr0": float(_header_value(lines, "lr0")),
                "w": _parse_floats(_header_value(lines, "w")),
                "b": float(_header_value(lines, "b")),
            }
    except ModelFormatError:
        raise
    except (ValueError, IndexError) as exc:
        raise ModelFormatError(f"{path}: corrupt model file: {exc}") from None
    return TrainedModel(kind=kind, config_id=config_id, n_trained=n,
                        seed=seed, params=params)
