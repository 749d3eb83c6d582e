"""Binary title-vs-not classifiers over the five typographic features.

Six classical models trained from scratch: logistic regression, Gaussian
naive Bayes, linear SVM, k-nearest-neighbors (k=8, inverse-distance
weights), a Gini decision tree (depth <= 8), and AdaBoost over decision
stumps (<= 100 learners). All models standardize features with training
statistics and share the same 0.5 score threshold.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from tenq.candidates import FeatureVector
from tenq.metrics import Metrics, confusion_metrics

MODEL_FORMAT_VERSION = 1

KNN_K = 8
TREE_MAX_DEPTH = 8
TREE_MIN_LEAF = 2
ADABOOST_MAX_LEARNERS = 100
LOGISTIC_EPOCHS = 500
LOGISTIC_LR = 0.1
LOGISTIC_L2 = 1e-4
SVM_EPOCHS = 20
SVM_L2 = 1e-4
NB_VAR_FLOOR = 1e-9


class TooFewExamples(Exception):
    """Dataset too small to split 8:1:1."""


class DegenerateData(Exception):
    """Training data contains a single class."""


class ModelKind(Enum):
    LOGISTIC = "logistic"
    NAIVE_BAYES = "naive_bayes"
    LINEAR_SVM = "linear_svm"
    KNN = "knn"
    DECISION_TREE = "decision_tree"
    ADABOOST = "adaboost"


@dataclass(frozen=True)
class LabeledExample:
    features: FeatureVector
    label: bool
    source_filing: str = ""
    snippet_ref: str | None = None

    def to_dict(self) -> dict:
        return {
            "features": self.features.to_dict(),
            "label": self.label,
            "source_filing": self.source_filing,
            "snippet_ref": self.snippet_ref,
        }

    @staticmethod
    def from_dict(d: dict) -> "LabeledExample":
        return LabeledExample(
            features=FeatureVector.from_dict(d["features"]),
            label=bool(d["label"]),
            source_filing=d.get("source_filing", ""),
            snippet_ref=d.get("snippet_ref"),
        )


def load_labeled_jsonl(path: Path | str) -> list[LabeledExample]:
    out = []
    with open(path, encoding="utf-8") as fp:
        for line in fp:
            line = line.strip()
            if line:
                out.append(LabeledExample.from_dict(json.loads(line)))
    return out


def save_labeled_jsonl(examples: Iterable[LabeledExample], path: Path | str) -> None:
    with open(path, "w", encoding="utf-8") as fp:
        for ex in examples:
            fp.write(json.dumps(ex.to_dict()) + "\n")


@dataclass(frozen=True)
class Prediction:
    label: bool
    score: float  # in [0, 1]; label == (score >= 0.5)


@dataclass
class Model:
    kind: ModelKind
    hyperparameters: dict
    parameters: dict
    feature_scaling: tuple[list[float], list[float]]  # per-feature (mean, sd)


# --- dataset split ----------------------------------------------------------


def _quota(class_sizes: list[int], total_take: int, n: int) -> list[int]:
    """Largest-remainder allocation of total_take across classes."""
    exact = [c * total_take / n for c in class_sizes]
    base = [int(math.floor(e)) for e in exact]
    short = total_take - sum(base)
    order = sorted(range(len(class_sizes)), key=lambda i: (-(exact[i] - base[i]), i))
    for i in order[:short]:
        base[i] += 1
    return base


def split_dataset(
    data: Sequence[LabeledExample], seed: int
) -> tuple[list[LabeledExample], list[LabeledExample], list[LabeledExample]]:
    """Deterministic stratified 8:1:1 split.

    Validation and test each get floor(n/10) examples, remainder to
    train; class proportions are preserved within one example.
    """
    n = len(data)
    if n < 10:
        raise TooFewExamples(f"need at least 10 examples, got {n}")
    rng = random.Random(seed)
    classes: dict[bool, list[LabeledExample]] = {False: [], True: []}
    for ex in data:
        classes[ex.label].append(ex)
    labels = [lbl for lbl in (False, True) if classes[lbl]]
    sizes = [len(classes[lbl]) for lbl in labels]
    n_take = n // 10
    val_quota = _quota(sizes, n_take, n)
    test_quota = _quota(sizes, n_take, n)
    train: list[LabeledExample] = []
    val: list[LabeledExample] = []
    test: list[LabeledExample] = []
    for lbl, nv, nt in zip(labels, val_quota, test_quota):
        members = list(classes[lbl])
        rng.shuffle(members)
        val.extend(members[:nv])
        test.extend(members[nv : nv + nt])
        train.extend(members[nv + nt :])
    return train, val, test


# --- training ----------------------------------------------------------------


def _as_matrix(examples: Sequence[LabeledExample]) -> tuple[np.ndarray, np.ndarray]:
    X = np.array([ex.features.as_tuple() for ex in examples], dtype=np.float64)
    y = np.array([1.0 if ex.label else 0.0 for ex in examples])
    return X, y


def _scaling(X: np.ndarray) -> tuple[list[float], list[float]]:
    mean = X.mean(axis=0)
    sd = X.std(axis=0)
    sd = np.where(sd == 0.0, 1.0, sd)
    return mean.tolist(), sd.tolist()


def _standardize(X: np.ndarray, scaling: tuple[list[float], list[float]]) -> np.ndarray:
    mean, sd = scaling
    return (X - np.asarray(mean)) / np.asarray(sd)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))


def _train_logistic(Xs: np.ndarray, y: np.ndarray) -> dict:
    n, d = Xs.shape
    w = np.zeros(d)
    b = 0.0
    for _ in range(LOGISTIC_EPOCHS):
        p = _sigmoid(Xs @ w + b)
        grad_w = Xs.T @ (p - y) / n + LOGISTIC_L2 * w
        grad_b = float(np.mean(p - y))
        w -= LOGISTIC_LR * grad_w
        b -= LOGISTIC_LR * grad_b
    return {"weights": w.tolist(), "bias": b}


def _train_naive_bayes(Xs: np.ndarray, y: np.ndarray) -> dict:
    params: dict = {"priors": [], "means": [], "vars": []}
    n = len(y)
    for cls in (0.0, 1.0):
        Xc = Xs[y == cls]
        params["priors"].append(len(Xc) / n)
        params["means"].append(Xc.mean(axis=0).tolist())
        params["vars"].append(np.maximum(Xc.var(axis=0), NB_VAR_FLOOR).tolist())
    return params


def _train_svm(Xs: np.ndarray, y: np.ndarray, seed: int) -> dict:
    """Pegasos-style hinge-loss subgradient descent; the bias rides along
    as a constant feature so the learning-rate schedule stays stable."""
    n, d = Xs.shape
    ypm = np.where(y > 0.5, 1.0, -1.0)
    Xa = np.hstack([Xs, np.ones((n, 1))])
    w = np.zeros(d + 1)
    rng = np.random.default_rng(seed)
    t = 0
    for _ in range(SVM_EPOCHS):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (SVM_L2 * t)
            margin = ypm[i] * (Xa[i] @ w)
            w *= 1.0 - eta * SVM_L2
            if margin < 1.0:
                w += eta * ypm[i] * Xa[i]
    return {"weights": w[:d].tolist(), "bias": float(w[d])}


def _gini_split(x: np.ndarray, y: np.ndarray) -> tuple[float, float] | None:
    """Best (threshold, weighted-impurity) split of one feature; None when
    no split leaves at least TREE_MIN_LEAF samples per side."""
    n = len(x)
    if n < 2 * TREE_MIN_LEAF:
        return None
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    cum_pos = np.cumsum(ys)
    total_pos = cum_pos[-1]
    # candidate split after position i (left = [0..i])
    i = np.arange(TREE_MIN_LEAF - 1, n - TREE_MIN_LEAF)
    valid = xs[i] != xs[i + 1]
    i = i[valid]
    if len(i) == 0:
        return None
    wl = (i + 1).astype(np.float64)
    wr = n - wl
    pl = cum_pos[i] / wl
    pr = (total_pos - cum_pos[i]) / wr
    gini = wl * (1 - pl**2 - (1 - pl) ** 2) + wr * (1 - pr**2 - (1 - pr) ** 2)
    k = int(np.argmin(gini))
    thr = (xs[i[k]] + xs[i[k] + 1]) / 2.0
    return float(thr), float(gini[k])


def _build_tree(Xs: np.ndarray, y: np.ndarray, depth: int) -> dict:
    n = len(y)
    pos = float(y.mean()) if n else 0.0
    if depth >= TREE_MAX_DEPTH or n < 2 * TREE_MIN_LEAF or pos in (0.0, 1.0):
        return {"leaf": True, "value": pos, "n": n}
    best_feat, best_thr, best_score = -1, 0.0, None
    for f in range(Xs.shape[1]):
        res = _gini_split(Xs[:, f], y)
        if res is None:
            continue
        thr, score = res
        if best_score is None or score < best_score:
            best_feat, best_thr, best_score = f, thr, score
    if best_score is None:
        return {"leaf": True, "value": pos, "n": n}
    mask = Xs[:, best_feat] <= best_thr
    return {
        "leaf": False,
        "feature": best_feat,
        "threshold": best_thr,
        "left": _build_tree(Xs[mask], y[mask], depth + 1),
        "right": _build_tree(Xs[~mask], y[~mask], depth + 1),
    }


def _train_tree(Xs: np.ndarray, y: np.ndarray) -> dict:
    return {"tree": _build_tree(Xs, y, 0)}


def _best_stump(Xs: np.ndarray, ypm: np.ndarray, w: np.ndarray) -> tuple[int, float, int, float]:
    """Minimum weighted-error decision stump (feature, threshold, polarity).
    Polarity +1 predicts positive when the feature exceeds the threshold."""
    best = (0, 0.0, 1, float("inf"))
    total_w = float(w.sum())
    n = len(ypm)
    for f in range(Xs.shape[1]):
        x = Xs[:, f]
        order = np.argsort(x, kind="stable")
        xs, ys, ws = x[order], ypm[order], w[order]
        neg_total = float(ws[ys < 0].sum())
        # moving sample i to the "<= thr" (predicted -1) side changes the
        # error of the +1-polarity stump by +w if positive, -w if negative
        delta = np.where(ys > 0, ws, -ws)
        err_pos = neg_total + np.cumsum(delta)  # err after split at position i
        i = np.arange(n - 1)
        valid = xs[i] != xs[i + 1]
        i = i[valid]
        if len(i) == 0:
            continue
        thr = (xs[i] + xs[i + 1]) / 2.0
        for polarity, errs in ((1, err_pos[i]), (-1, total_w - err_pos[i])):
            k = int(np.argmin(errs))
            if errs[k] < best[3]:
                best = (f, float(thr[k]), polarity, float(errs[k]))
    return best


def _train_adaboost(Xs: np.ndarray, y: np.ndarray) -> dict:
    n = len(y)
    ypm = np.where(y > 0.5, 1.0, -1.0)
    w = np.full(n, 1.0 / n)
    stumps: list[dict] = []
    for _ in range(ADABOOST_MAX_LEARNERS):
        f, thr, pol, err = _best_stump(Xs, ypm, w)
        if err >= 0.5:
            break
        err = max(err, 1e-12)
        alpha = 0.5 * math.log((1.0 - err) / err)
        pred = np.where(Xs[:, f] > thr, 1.0, -1.0) * pol
        stumps.append({"feature": f, "threshold": thr, "polarity": pol, "alpha": alpha})
        if err <= 1e-12:
            break
        w = w * np.exp(-alpha * ypm * pred)
        w = w / w.sum()
    return {"stumps": stumps}


def train(train_set: Sequence[LabeledExample], kind: ModelKind, seed: int = 0) -> Model:
    """Fit one model kind on the training set (features standardized with
    training statistics). Raises DegenerateData on single-class input."""
    X, y = _as_matrix(train_set)
    if len(set(y.tolist())) < 2:
        raise DegenerateData("training data contains a single class")
    scaling = _scaling(X)
    Xs = _standardize(X, scaling)
    hyper: dict
    if kind is ModelKind.LOGISTIC:
        params = _train_logistic(Xs, y)
        hyper = {"epochs": LOGISTIC_EPOCHS, "lr": LOGISTIC_LR, "l2": LOGISTIC_L2}
    elif kind is ModelKind.NAIVE_BAYES:
        params = _train_naive_bayes(Xs, y)
        hyper = {"var_floor": NB_VAR_FLOOR}
    elif kind is ModelKind.LINEAR_SVM:
        params = _train_svm(Xs, y, seed)
        hyper = {"epochs": SVM_EPOCHS, "l2": SVM_L2}
    elif kind is ModelKind.KNN:
        params = {"X": Xs.tolist(), "y": y.tolist()}
        hyper = {"k": KNN_K, "weighting": "inverse_distance"}
    elif kind is ModelKind.DECISION_TREE:
        params = _train_tree(Xs, y)
        hyper = {"max_depth": TREE_MAX_DEPTH, "min_leaf": TREE_MIN_LEAF}
    elif kind is ModelKind.ADABOOST:
        params = _train_adaboost(Xs, y)
        hyper = {"max_learners": ADABOOST_MAX_LEARNERS, "base": "stump"}
    else:  # pragma: no cover
        raise ValueError(f"unknown model kind: {kind}")
    return Model(kind=kind, hyperparameters=hyper, parameters=params, feature_scaling=scaling)


# --- prediction ---------------------------------------------------------------


def _tree_score(node: dict, x: np.ndarray) -> float:
    while not node["leaf"]:
        node = node["left"] if x[node["feature"]] <= node["threshold"] else node["right"]
    return float(node["value"])


def knn_neighbors(model: Model, features: FeatureVector) -> list[int]:
    """Indices of the k nearest training points, nearest first (stable)."""
    Xs = np.asarray(model.parameters["X"])
    x = _standardize(np.array([features.as_tuple()], dtype=np.float64), model.feature_scaling)[0]
    d = np.sqrt(((Xs - x) ** 2).sum(axis=1))
    k = model.hyperparameters["k"]
    return np.argsort(d, kind="stable")[:k].tolist()


def _score_one(model: Model, x_raw: np.ndarray) -> float:
    kind = model.kind
    x = _standardize(x_raw.reshape(1, -1), model.feature_scaling)[0]
    p = model.parameters
    if kind is ModelKind.LOGISTIC:
        return float(_sigmoid(np.asarray([x @ np.asarray(p["weights"]) + p["bias"]]))[0])
    if kind is ModelKind.NAIVE_BAYES:
        logs = []
        for c in (0, 1):
            mean = np.asarray(p["means"][c])
            var = np.asarray(p["vars"][c])
            ll = -0.5 * (np.log(2 * math.pi * var) + (x - mean) ** 2 / var)
            logs.append(math.log(p["priors"][c]) + float(ll.sum()))
        m = max(logs)
        e0, e1 = math.exp(logs[0] - m), math.exp(logs[1] - m)
        return e1 / (e0 + e1)
    if kind is ModelKind.LINEAR_SVM:
        margin = float(x @ np.asarray(p["weights"]) + p["bias"])
        return float(_sigmoid(np.asarray([margin]))[0])
    if kind is ModelKind.KNN:
        Xs = np.asarray(p["X"])
        y = np.asarray(p["y"])
        d = np.sqrt(((Xs - x) ** 2).sum(axis=1))
        order = np.argsort(d, kind="stable")[: model.hyperparameters["k"]]
        dk, yk = d[order], y[order]
        zero = dk == 0.0
        if zero.any():
            return float(yk[zero].mean())
        wts = 1.0 / dk
        return float((wts * yk).sum() / wts.sum())
    if kind is ModelKind.DECISION_TREE:
        return _tree_score(p["tree"], x)
    if kind is ModelKind.ADABOOST:
        total = 0.0
        for s in p["stumps"]:
            h = 1.0 if x[s["feature"]] > s["threshold"] else -1.0
            total += s["alpha"] * h * s["polarity"]
        return float(_sigmoid(np.asarray([total]))[0])
    raise ValueError(f"unknown model kind: {kind}")  # pragma: no cover


def predict(model: Model, features: FeatureVector) -> Prediction:
    score = _score_one(model, np.array(features.as_tuple(), dtype=np.float64))
    return Prediction(label=score >= 0.5, score=score)


def evaluate(model: Model, test_set: Sequence[LabeledExample]) -> Metrics:
    """Confusion-count metrics of the model on a labeled set."""
    if not test_set:
        raise ValueError("test_set must be non-empty")
    tp = fp = fn = tn = 0
    for ex in test_set:
        got = predict(model, ex.features).label
        if got and ex.label:
            tp += 1
        elif got and not ex.label:
            fp += 1
        elif not got and ex.label:
            fn += 1
        else:
            tn += 1
    return confusion_metrics(tp, fp, fn, tn)


# --- persistence ----------------------------------------------------------------


def save_model(model: Model, path: Path | str) -> None:
    """Versioned, self-describing text format; floats as shortest decimal
    strings so models round-trip bit-identically."""
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": model.kind.value,
        "hyperparameters": model.hyperparameters,
        "parameters": model.parameters,
        "feature_scaling": list(model.feature_scaling),
    }
    Path(path).write_text(json.dumps(doc, indent=1), encoding="utf-8")


def load_model(path: Path | str) -> Model:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format: {doc.get('format_version')}")
    scaling = doc["feature_scaling"]
    return Model(
        kind=ModelKind(doc["kind"]),
        hyperparameters=doc["hyperparameters"],
        parameters=doc["parameters"],
        feature_scaling=(list(scaling[0]), list(scaling[1])),
    )


def tree_depth(node: dict) -> int:
    if node["leaf"]:
        return 0
    return 1 + max(tree_depth(node["left"]), tree_depth(node["right"]))
