import enum
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, PrivateAttr

ENCODING_VERSION = 1


class MaxFeatures(str, enum.Enum):
    SQRT = "sqrt"
    LOG2 = "log2"
    ALL = "all"


class ForestParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_trees: int = 300
    max_depth: Optional[int] = None
    max_features: MaxFeatures = MaxFeatures.SQRT

    @property
    def depth_key(self) -> float:
        """Unlimited depth sorts as deepest"""
        return float("inf") if self.max_depth is None else float(self.max_depth)


class FeatureKind(str, enum.Enum):
    NUMERIC = "numeric"
    ONEHOT = "onehot"


class FeatureEncoding(BaseModel):
    name: str
    kind: FeatureKind
    categories: List[str] = []

    @property
    def width(self) -> int:
        return 1 if self.kind is FeatureKind.NUMERIC else len(self.categories)


class DatasetEncoding(BaseModel):
    version: int = ENCODING_VERSION
    features: List[FeatureEncoding]

    @property
    def width(self) -> int:
        return sum(f.width for f in self.features)

    @property
    def feature_names(self) -> List[str]:
        return [f.name for f in self.features]

    def column_names(self) -> List[str]:
        names: List[str] = []
        for feature in self.features:
            if feature.kind is FeatureKind.NUMERIC:
                names.append(feature.name)
            else:
                names.extend(f"{feature.name}={c}" for c in feature.categories)
        return names

    def groups(self) -> List[str]:
        """Owning feature name of every encoded column"""
        owners: List[str] = []
        for feature in self.features:
            owners.extend([feature.name] * feature.width)
        return owners


class Dataset(BaseModel):
    """Encoded rows; y is 1 for notional, 0 for strict"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    X: np.ndarray
    y: np.ndarray
    encoding: DatasetEncoding
    doc_ids: List[str] = []
    genres: List[str] = []
    type_iii: List[Optional[bool]] = []

    def __len__(self) -> int:
        return int(self.y.shape[0])


LEAF = -1


class Tree(BaseModel):
    """
    Flat node arrays in pre-order; leaves have feature == -1 and
    left == right == -1
    """
    feature: List[int] = []
    threshold: List[float] = []
    left: List[int] = []
    right: List[int] = []
    value: List[List[int]] = []
    impurity: List[float] = []
    n_samples: List[int] = []

    _arrays: Optional[Dict[str, np.ndarray]] = PrivateAttr(default=None)

    @property
    def node_count(self) -> int:
        return len(self.feature)

    @property
    def split_count(self) -> int:
        return sum(1 for f in self.feature if f != LEAF)

    def arrays(self) -> Dict[str, np.ndarray]:
        if self._arrays is None:
            value = np.asarray(self.value, dtype=float).reshape(-1, 2)
            self._arrays = {
                "feature": np.asarray(self.feature, dtype=np.int64),
                "threshold": np.asarray(self.threshold, dtype=float),
                "left": np.asarray(self.left, dtype=np.int64),
                "right": np.asarray(self.right, dtype=np.int64),
                "proba": value[:, 1] / value.sum(axis=1),
            }
        return self._arrays


class Forest(BaseModel):
    params: ForestParams
    seed: int
    encoding: DatasetEncoding
    trees: List[Tree]


class ClassScores(BaseModel):
    precision: float
    recall: float


class EvalReport(BaseModel):
    """Confusion rows are actual, columns predicted, classes (strict, notional)"""
    accuracy: float
    confusion: List[List[int]]
    majority_baseline: float
    strict: ClassScores
    notional: ClassScores
    n: int
    corpus_baseline: Optional[float] = None
    type_iii_total: Optional[int] = None
    type_iii_errors: Optional[int] = None


class ImportanceEntry(BaseModel):
    feature: str
    mean: float
    std: float


class ImportanceReport(BaseModel):
    grouped: List[ImportanceEntry]
    encoded: List[ImportanceEntry]
    trees_with_splits: int
    flagged: bool = False


class CVRow(BaseModel):
    n_trees: int
    max_depth: Optional[int]
    max_features: MaxFeatures
    fold_accuracies: List[float]
    mean_accuracy: float


class GridSearchResult(BaseModel):
    best: ForestParams
    table: List[CVRow]
    forest: Forest
