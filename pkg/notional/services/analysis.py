"""
Descriptive statistics over featurized pairs: agreement tables, Pearson
residuals and binned notional-rate profiles
"""

import logging
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.stats import chi2_contingency
from scipy.stats.contingency import expected_freq

from notional.core.exceptions import ConfigurationError, DegenerateTableError
from notional.schemas.analysis import (
    BinProfile,
    ContingencyRow,
    ContingencyTable,
    ResidualCell,
    ResidualTable,
)
from notional.schemas.corpus import Genre
from notional.schemas.pairs import AgreementLabel

logger = logging.getLogger(__name__)

AGREEMENTS = (AgreementLabel.NOTIONAL.value, AgreementLabel.STRICT.value)
WRITTEN_ORDER = [Genre.BIBLE, Genre.NEWS, Genre.TRANSLATIONS, Genre.WEB]
SPOKEN_ORDER = [Genre.BC_CONV, Genre.BC_NEWS, Genre.PHONE]
BIN_VARIABLES = {
    "log_distance": "distance_tokens",
    "anaphor_position_pct": "n_position_pct",
}


def contingency_from_counts(
    by: str, counts: Dict[str, Tuple[int, int]], min_count: int = 0
) -> ContingencyTable:
    """
    Table from (notional, strict) counts per category; rows rarer than
    min_count are left out
    """
    if by == "genre":
        order = [g.value for g in WRITTEN_ORDER + SPOKEN_ORDER if g.value in counts]
        order += sorted(c for c in counts if c not in order)
    else:
        order = sorted(counts)
    rows = [
        ContingencyRow(category=c, notional=counts[c][0], strict=counts[c][1])
        for c in order
        if sum(counts[c]) >= min_count
    ]
    dropped = len(order) - len(rows)
    if dropped:
        logger.info(f"Dropped {dropped} {by} categories with fewer than {min_count} pairs")

    subtotals: List[ContingencyRow] = []
    if by == "genre":
        for name, members in (("written", WRITTEN_ORDER), ("spoken", SPOKEN_ORDER)):
            selected = [r for r in rows if r.category in {g.value for g in members}]
            subtotals.append(
                ContingencyRow(
                    category=name,
                    notional=sum(r.notional for r in selected),
                    strict=sum(r.strict for r in selected),
                )
            )
    return ContingencyTable(by=by, rows=rows, subtotals=subtotals)


def contingency(frame: pd.DataFrame, by: str, min_count: int = 0) -> ContingencyTable:
    """Notional and strict counts per value of one feature column"""
    if by not in frame.columns:
        raise ConfigurationError(f"Unknown feature: {by}")
    grouped = pd.crosstab(frame[by], frame["label"]).reindex(columns=list(AGREEMENTS), fill_value=0)
    counts = {
        str(category): (int(row[AGREEMENTS[0]]), int(row[AGREEMENTS[1]]))
        for category, row in grouped.iterrows()
    }
    return contingency_from_counts(by, counts, min_count)


def residuals(table: ContingencyTable) -> ResidualTable:
    """Pearson residuals (O - E) / sqrt(E) with the chi-square test"""
    observed = np.array([[r.notional, r.strict] for r in table.rows], dtype=float)
    if observed.size == 0:
        raise DegenerateTableError(table.by)
    for row, total in zip(table.rows, observed.sum(axis=1)):
        if total == 0:
            raise DegenerateTableError(row.category)
    for agreement, total in zip(AGREEMENTS, observed.sum(axis=0)):
        if total == 0:
            raise DegenerateTableError(agreement)

    expected = expected_freq(observed)
    pearson = (observed - expected) / np.sqrt(expected)
    if observed.shape[0] > 1:
        chi2, p_value, dof, _ = chi2_contingency(observed, correction=False)
    else:
        chi2, p_value, dof = 0.0, 1.0, 0

    cells = [
        ResidualCell(
            category=row.category,
            agreement=agreement,
            observed=int(observed[i, j]),
            expected=float(expected[i, j]),
            residual=float(pearson[i, j]),
        )
        for i, row in enumerate(table.rows)
        for j, agreement in enumerate(AGREEMENTS)
    ]
    return ResidualTable(by=table.by, cells=cells, chi2=float(chi2), dof=int(dof), p_value=float(p_value))


def bin_profile(frame: pd.DataFrame, var: str, n_bins: int = 10) -> BinProfile:
    """
    Equal-width bins over the observed range with the notional fraction
    per bin and mass-proportional widths for spine plots
    """
    if n_bins < 2:
        raise ConfigurationError(f"Need at least 2 bins, got {n_bins}")
    if var not in BIN_VARIABLES:
        raise ConfigurationError(f"Unknown binning variable: {var}")
    values = pd.to_numeric(frame[BIN_VARIABLES[var]]).to_numpy(dtype=float)
    if var == "log_distance":
        values = np.log(values)
    notional = (frame["label"] == AgreementLabel.NOTIONAL.value).to_numpy(dtype=float)
    if values.size == 0:
        raise ConfigurationError("No pairs to bin")

    edges = np.histogram_bin_edges(values, bins=n_bins)
    counts, _ = np.histogram(values, bins=edges)
    hits, _ = np.histogram(values, bins=edges, weights=notional)
    total = counts.sum()
    fractions: List[Optional[float]] = [
        float(h / c) if c else None for h, c in zip(hits, counts)
    ]
    return BinProfile(
        variable=var,
        edges=[float(e) for e in edges],
        counts=[int(c) for c in counts],
        notional=[int(round(h)) for h in hits],
        fractions=fractions,
        mass_widths=[float(c / total) for c in counts],
    )

