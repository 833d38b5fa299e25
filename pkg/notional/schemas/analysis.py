from typing import List, Optional

from pydantic import BaseModel


class ContingencyRow(BaseModel):
    category: str
    notional: int
    strict: int

    @property
    def total(self) -> int:
        return self.notional + self.strict

    @property
    def pct_notional(self) -> float:
        """Two-decimal percentage, 0.00 for an empty row"""
        return round(100.0 * self.notional / self.total, 2) if self.total else 0.0


class ContingencyTable(BaseModel):
    by: str
    rows: List[ContingencyRow]
    subtotals: List[ContingencyRow] = []

    @property
    def total(self) -> ContingencyRow:
        return ContingencyRow(
            category="total",
            notional=sum(r.notional for r in self.rows),
            strict=sum(r.strict for r in self.rows),
        )


class ResidualCell(BaseModel):
    category: str
    agreement: str
    observed: int
    expected: float
    residual: float


class ResidualTable(BaseModel):
    by: str
    cells: List[ResidualCell]
    chi2: float
    dof: int
    p_value: float


class BinProfile(BaseModel):
    variable: str
    edges: List[float]
    counts: List[int]
    notional: List[int]
    fractions: List[Optional[float]]
    mass_widths: List[float]

    @property
    def total(self) -> int:
        return sum(self.counts)
