import enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict


class Direction(str, enum.Enum):
    LEFT = "left"           # each priority in turn, children left to right
    RIGHT = "right"         # each priority in turn, children right to left
    LEFT_DIS = "leftdis"    # first child from the left matching any priority
    RIGHT_DIS = "rightdis"  # first child from the right matching any priority

    @property
    def from_left(self) -> bool:
        return self in (Direction.LEFT, Direction.LEFT_DIS)

    @property
    def any_priority(self) -> bool:
        return self in (Direction.LEFT_DIS, Direction.RIGHT_DIS)


class HeadRule(BaseModel):
    """One ordered search pass for a phrase label"""
    model_config = ConfigDict(frozen=True)

    direction: Direction
    priorities: Tuple[str, ...]


class HeadRuleTable(BaseModel):
    rules: Dict[str, List[HeadRule]] = {}

    def passes(self, label: str) -> List[HeadRule]:
        return self.rules.get(label.split("-")[0].split("=")[0], [])


class FineFunction(str, enum.Enum):
    NSUBJ = "nsubj"
    NSUBJPASS = "nsubjpass"
    CSUBJ = "csubj"
    DOBJ = "dobj"
    IOBJ = "iobj"
    POBJ = "pobj"
    POSS = "poss"
    CCOMP = "ccomp"
    ADVCL = "advcl"
    CONJ = "conj"
    APPOS = "appos"
    ROOT = "root"
    OTHER = "other"


class CoarseFunction(str, enum.Enum):
    SUBJ = "subj"
    OBJ = "obj"
    POSS = "poss"
    CLAUSAL = "clausal"
    ROOT = "root"
    OTHER = "other"


COARSE_OF: Dict[FineFunction, CoarseFunction] = {
    FineFunction.NSUBJ: CoarseFunction.SUBJ,
    FineFunction.NSUBJPASS: CoarseFunction.SUBJ,
    FineFunction.CSUBJ: CoarseFunction.SUBJ,
    FineFunction.DOBJ: CoarseFunction.OBJ,
    FineFunction.IOBJ: CoarseFunction.OBJ,
    FineFunction.POBJ: CoarseFunction.OBJ,
    FineFunction.POSS: CoarseFunction.POSS,
    FineFunction.CCOMP: CoarseFunction.CLAUSAL,
    FineFunction.ADVCL: CoarseFunction.CLAUSAL,
    FineFunction.ROOT: CoarseFunction.ROOT,
}


def coarsen(function: FineFunction) -> CoarseFunction:
    return COARSE_OF.get(function, CoarseFunction.OTHER)


ROOT_POS = "ROOT"


class GovernorInfo(BaseModel):
    """Governing word of a mention head and the relation it holds"""
    model_config = ConfigDict(frozen=True)

    governor_index: Optional[int] = None
    governor_pos: str = ROOT_POS
    governor_form: str = ""
    governor_lemma: str = ""
    function_fine: FineFunction = FineFunction.ROOT

    @property
    def function_coarse(self) -> CoarseFunction:
        return coarsen(self.function_fine)

    @property
    def is_root(self) -> bool:
        return self.governor_index is None
