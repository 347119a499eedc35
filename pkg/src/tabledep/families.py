"""Layout families: cell masking, header detection, features and a naive Bayes classifier."""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .model import CompactTable


class FamilyError(ValueError):
    pass


class TrainingError(FamilyError):
    pass


# ---------------------------------------------------------------- masking

def _char_class(ch: str) -> str:
    if ch.isdigit():
        return "D"
    if ch.isalpha():
        return "A"
    return "N"


def mask_cell(text: str) -> str:
    """Abstract a cell to runs of Alphabetic, Digit and Non-alphanumeric chars.

    Whitespace is dropped before the runs are formed, so "Eng FNU-52X"
    becomes "ANDA".
    """
    out: list[str] = []
    for ch in text:
        if ch.isspace():
            continue
        cls = _char_class(ch)
        if not out or out[-1] != cls:
            out.append(cls)
    return "".join(out)


# ------------------------------------------------------ header boundaries

@dataclass(frozen=True)
class BoundaryConfig:
    max_patterns: int = 2
    min_coverage: float = 0.8


@dataclass(frozen=True)
class DataStart:
    row: int
    confident: bool
    votes: dict = field(default_factory=dict, compare=False)

    def __int__(self):
        return self.row


def _line_boundary(masks: Sequence[str], cfg: BoundaryConfig) -> int | None:
    """Smallest b >= 1 where masks[b:] settle into a repeating pattern.

    The repeating set is the (at most ``max_patterns``) most frequent nonempty
    masks of the suffix that occur at least twice (once for a one-cell
    suffix). It must cover ``min_coverage`` of the suffix, contain masks[b],
    and exclude masks[b-1] so the boundary marks an actual pattern change.
    """
    n = len(masks)
    for b in range(1, n):
        suffix = masks[b:]
        if not masks[b]:
            continue
        need = min(2, len(suffix))
        counts = Counter(m for m in suffix if m)
        ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        pattern = {m for m, k in ranked[:cfg.max_patterns] if k >= need}
        if masks[b] not in pattern or masks[b - 1] in pattern:
            continue
        covered = sum(1 for m in suffix if m in pattern)
        if covered >= cfg.min_coverage * len(suffix):
            return b
    return None


def _vote(lines: Iterable[Sequence[str]], cfg: BoundaryConfig) -> tuple[int | None, dict]:
    votes: Counter = Counter()
    for masks in lines:
        b = _line_boundary(masks, cfg)
        if b is not None:
            votes[b] += 1
    if not votes:
        return None, {}
    best = min(votes, key=lambda b: (-votes[b], b))
    return best, dict(votes)


def mask_grid(table: CompactTable) -> list[list[str]]:
    return [[mask_cell(c) for c in row] for row in table.grid]


def detect_data_start(table: CompactTable, cfg: BoundaryConfig = BoundaryConfig()) -> DataStart:
    """Row index where the data area begins, decided by a per-column vote."""
    if table.n_rows < 2:
        raise FamilyError(f"{table.table_id}: need at least two rows to find a header boundary")
    masks = mask_grid(table)
    columns = ([masks[r][c] for r in range(table.n_rows)] for c in range(table.n_cols))
    best, votes = _vote(columns, cfg)
    if best is None:
        return DataStart(1, False, {})
    return DataStart(best, True, votes)


def detect_header_columns(table: CompactTable, header_rows: int,
                          cfg: BoundaryConfig = BoundaryConfig()) -> int:
    """Number of leading row-header columns.

    Runs the same boundary rule left to right along each header row; data
    rows are excluded since their leading values often share the masks of
    the plain area. Returns 0 when no header row shows a boundary.
    """
    if table.n_cols < 2:
        return 0
    masks = mask_grid(table)
    rows = masks[:max(header_rows, 1)]
    best, _ = _vote(rows, cfg)
    return best or 0


# -------------------------------------------------------------- features

FEATURE_NAMES = (
    "header_rows",
    "header_cols",
    "repeated_header_groups",
    "spanning_headers",
    "empty_corner_cells",
    "n_rows",
    "n_cols",
    "digit_fraction",
    "header_mask_patterns",
)
BINARY_FEATURES = (3,)


def _repeated_groups(row: Sequence[str]) -> int:
    """Count maximal runs where a block of >=2 cells with >=2 distinct
    nonempty values repeats back to back at least twice."""
    n = len(row)
    count = 0
    i = 0
    while i < n:
        found = 0
        for size in range(2, (n - i) // 2 + 1):
            block = row[i:i + size]
            if len({v for v in block if v}) < 2:
                continue
            if row[i + size:i + 2 * size] == block:
                reps = 2
                while row[i + reps * size:i + (reps + 1) * size] == block:
                    reps += 1
                found = reps * size
                break
        if found:
            count += 1
            i += found
        else:
            i += 1
    return count


def _digit_dominant(mask: str) -> bool:
    return mask.count("D") > mask.count("A")


@dataclass(frozen=True)
class FeatureVector:
    header_rows: float
    header_cols: float
    repeated_header_groups: float
    spanning_headers: float
    empty_corner_cells: float
    n_rows: float
    n_cols: float
    digit_fraction: float
    header_mask_patterns: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f) for f in FEATURE_NAMES], dtype=float)


def extract_features(table: CompactTable, cfg: BoundaryConfig = BoundaryConfig()) -> FeatureVector:
    grid = table.grid
    if table.n_rows >= 2:
        h = detect_data_start(table, cfg).row
    else:
        h = 0
    header = [list(r) for r in grid[:h]]
    v = detect_header_columns(table, h, cfg)
    groups = sum(_repeated_groups(r) for r in header)
    spanning = any(
        r[c] and r[c] == r[c + 1] for r in header for c in range(len(r) - 1)
    )
    corner = sum(1 for r in range(h) for c in range(v) if not grid[r][c])
    masks = mask_grid(table)
    data = [masks[r][c] for r in range(h, table.n_rows) for c in range(v, table.n_cols)]
    digit = sum(1 for m in data if _digit_dominant(m)) / len(data) if data else 0.0
    patterns = len({tuple(masks[r]) for r in range(h)})
    return FeatureVector(
        float(h), float(v), float(groups), float(spanning), float(corner),
        float(table.n_rows), float(table.n_cols), float(digit), float(patterns),
    )


# -------------------------------------------------------- family params

@dataclass(frozen=True)
class FamilyParams:
    family_name: str
    h_rows: int
    v_cols: int
    pivot_width: int
    horizontal_side: str = "top"
    vertical_side: str = "left"

    def __post_init__(self):
        if self.h_rows < 0 or self.v_cols < 0:
            raise FamilyError(f"{self.family_name}: window sizes must be >= 0")
        if self.pivot_width < 1:
            raise FamilyError(f"{self.family_name}: pivot_width must be >= 1")
        if self.horizontal_side not in ("top", "bottom"):
            raise FamilyError(f"{self.family_name}: horizontal_side must be top or bottom")
        if self.vertical_side not in ("left", "right"):
            raise FamilyError(f"{self.family_name}: vertical_side must be left or right")

    @classmethod
    def plain(cls, n_cols: int, name: str = "plain") -> "FamilyParams":
        return cls(name, 1, 0, n_cols)

    def to_json(self) -> dict:
        d = asdict(self)
        d["name"] = d.pop("family_name")
        return d

    @classmethod
    def from_json(cls, obj: dict) -> "FamilyParams":
        return cls(obj["name"], int(obj["h_rows"]), int(obj["v_cols"]), int(obj["pivot_width"]),
                   obj.get("horizontal_side", "top"), obj.get("vertical_side", "left"))


def load_registry(path: Path) -> dict[str, FamilyParams]:
    obj = json.loads(Path(path).read_text())
    return {p.family_name: p for p in map(FamilyParams.from_json, obj["families"])}


def save_registry(registry: dict[str, FamilyParams], path: Path) -> None:
    obj = {"families": [p.to_json() for p in registry.values()]}
    Path(path).write_text(json.dumps(obj, indent=2) + "\n")


# ------------------------------------------------------------ classifier

MODEL_FORMAT = "tabledep-family-model"
MODEL_VERSION = 1


@dataclass
class FamilyModel:
    """Naive Bayes over the nine layout features.

    Continuous features use Gaussian likelihoods; the spanning-header flag
    is Bernoulli with Laplace smoothing. Variances get an additive floor of
    ``var_smoothing`` times the largest per-feature variance.
    """

    classes: list[str]
    priors: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    bernoulli: np.ndarray
    epsilon: float
    var_smoothing: float = 1e-9
    registry: dict[str, FamilyParams] = field(default_factory=dict)

    @classmethod
    def fit(cls, X, y: Sequence[str], var_smoothing: float = 1e-9,
            registry: dict[str, FamilyParams] | None = None) -> "FamilyModel":
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[0] != len(y):
            raise TrainingError("feature matrix and labels disagree in length")
        counts = Counter(y)
        if len(counts) < 2:
            raise TrainingError(f"need at least two families, got {sorted(counts)}")
        for name, k in sorted(counts.items()):
            if k < 2:
                raise TrainingError(f"family {name!r} has {k} example(s); need at least 2")
        classes = sorted(counts)
        labels = np.array(y)
        cont = _continuous_mask(X.shape[1])
        epsilon = var_smoothing * float(np.var(X[:, cont], axis=0).max(initial=0.0))
        means = np.zeros((len(classes), X.shape[1]))
        variances = np.zeros_like(means)
        bern = np.zeros_like(means)
        for i, name in enumerate(classes):
            Xc = X[labels == name]
            means[i] = Xc.mean(axis=0)
            variances[i] = Xc.var(axis=0) + epsilon
            bern[i] = ((Xc != 0).sum(axis=0) + 1.0) / (len(Xc) + 2.0)
        priors = np.array([counts[c] for c in classes], dtype=float) / len(labels)
        return cls(classes, priors, means, variances, bern, epsilon, var_smoothing, dict(registry or {}))

    def joint_log_likelihood(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        cont = _continuous_mask(X.shape[1])
        out = np.tile(np.log(self.priors), (X.shape[0], 1))
        for i in range(len(self.classes)):
            var = self.variances[i, cont]
            diff = X[:, cont] - self.means[i, cont]
            with np.errstate(divide="ignore"):
                ll = -0.5 * np.log(2.0 * math.pi * var) - 0.5 * diff * diff / var
            # zero-variance features (epsilon 0): exact match is neutral, mismatch impossible
            zero = var == 0
            if zero.any():
                ll[:, zero] = np.where(diff[:, zero] == 0, 0.0, -np.inf)
            out[:, i] += ll.sum(axis=1)
            for j in BINARY_FEATURES:
                if j < X.shape[1]:
                    p = self.bernoulli[i, j]
                    out[:, i] += np.where(X[:, j] != 0, np.log(p), np.log1p(-p))
        return out

    def predict_proba(self, X) -> np.ndarray:
        jll = self.joint_log_likelihood(X)
        top = jll.max(axis=1, keepdims=True)
        top = np.where(np.isfinite(top), top, 0.0)
        p = np.exp(jll - top)
        total = p.sum(axis=1, keepdims=True)
        uniform = np.full_like(p, 1.0 / p.shape[1])
        return np.where(total > 0, p / np.where(total > 0, total, 1.0), uniform)

    def predict(self, X) -> list[tuple[str, float]]:
        out = []
        for row in self.predict_proba(X):
            # argmax over sorted class names breaks ties lexicographically
            k = int(np.argmax(row))
            out.append((self.classes[k], float(row[k])))
        return out

    def classify(self, table: CompactTable) -> tuple[str, float]:
        return self.predict(extract_features(table).as_array())[0]

    def params_for(self, family: str) -> FamilyParams | None:
        return self.registry.get(family)

    # persistence
    def to_json(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "features": list(FEATURE_NAMES),
            "classes": self.classes,
            "priors": self.priors.tolist(),
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
            "bernoulli": self.bernoulli.tolist(),
            "epsilon": self.epsilon,
            "var_smoothing": self.var_smoothing,
            "registry": [p.to_json() for p in self.registry.values()],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "FamilyModel":
        if obj.get("format") != MODEL_FORMAT:
            raise FamilyError("not a family model file")
        if obj.get("version") != MODEL_VERSION:
            raise FamilyError(f"unsupported model version {obj.get('version')}")
        return cls(
            list(obj["classes"]),
            np.array(obj["priors"], dtype=float),
            np.array(obj["means"], dtype=float),
            np.array(obj["variances"], dtype=float),
            np.array(obj["bernoulli"], dtype=float),
            float(obj["epsilon"]),
            float(obj.get("var_smoothing", 1e-9)),
            {p.family_name: p for p in map(FamilyParams.from_json, obj.get("registry", []))},
        )

    def save(self, path: Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1) + "\n")

    @classmethod
    def load(cls, path: Path) -> "FamilyModel":
        return cls.from_json(json.loads(Path(path).read_text()))


def _continuous_mask(n_features: int) -> np.ndarray:
    mask = np.ones(n_features, dtype=bool)
    for j in BINARY_FEATURES:
        if j < n_features:
            mask[j] = False
    return mask


def train(labeled: Sequence[tuple[CompactTable, str]], var_smoothing: float = 1e-9,
          registry: dict[str, FamilyParams] | None = None) -> FamilyModel:
    if not labeled:
        raise TrainingError("no training examples")
    X = np.stack([extract_features(t).as_array() for t, _ in labeled])
    y = [name for _, name in labeled]
    return FamilyModel.fit(X, y, var_smoothing, registry)


def classify(model: FamilyModel, table: CompactTable) -> tuple[str, float]:
    return model.classify(table)


def kfold_accuracy(X, y: Sequence[str], k: int = 5, seed: int = 0) -> dict[str, float]:
    """Per-family and overall accuracy from stratified k-fold cross validation."""
    X = np.asarray(X, dtype=float)
    labels = np.array(y)
    rng = np.random.default_rng(seed)
    folds = np.zeros(len(labels), dtype=int)
    for name in sorted(set(y)):
        idx = np.flatnonzero(labels == name)
        rng.shuffle(idx)
        folds[idx] = np.arange(len(idx)) % k
    hits = np.zeros(len(labels), dtype=bool)
    for f in range(k):
        test = folds == f
        if not test.any():
            continue
        model = FamilyModel.fit(X[~test], labels[~test].tolist())
        pred = [name for name, _ in model.predict(X[test])]
        hits[test] = np.array(pred) == labels[test]
    report = {name: float(hits[labels == name].mean()) for name in sorted(set(y))}
    report["overall"] = float(hits.mean())
    return report
