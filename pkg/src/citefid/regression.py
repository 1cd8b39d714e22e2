"""Regression of fidelity on proximity, team, and accessibility factors.

Feature derivation from pair records, dummy encoding with explicit reference
categories, ordinary least squares with classical standard errors, and
equal-width binning for visualization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields as dataclass_fields
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import linalg as sla
from scipy import stats as sstats

from .corpus import Paper
from .errors import ConfigError, InsufficientDataError, SingularDesignError
from .fidelity import PairRecord

# Main predictor set; the first/last-author variant swaps author_seniority
# for the two position-specific seniorities.
MAIN_CONTINUOUS = (
    "context_length",
    "reference_frequency",
    "publication_interval",
    "paper_citation",
    "author_seniority",
    "team_size",
)
ALT_SENIORITY_CONTINUOUS = (
    "context_length",
    "reference_frequency",
    "publication_interval",
    "paper_citation",
    "first_author_seniority",
    "last_author_seniority",
    "team_size",
)
MAIN_BOOLEANS = ("open_access", "self_citation", "within_field")
MAIN_REFERENCES = {
    "field_of_study": "Physics",
    "publication_year": "2000",
    "publication_type": "other",
}


@dataclass
class FeatureRow:
    fidelity: float
    field_of_study: str
    publication_year: str
    publication_type: str
    open_access: bool
    context_length: float
    reference_frequency: int
    publication_interval: float
    paper_citation: float
    team_size: int | None
    self_citation: bool
    within_field: bool
    author_seniority: float | None
    first_author_seniority: float | None
    last_author_seniority: float | None


@dataclass
class RegressionSpec:
    """Names the response, predictors, reference levels, and bin counts."""

    response: str = "fidelity"
    continuous: tuple[str, ...] = MAIN_CONTINUOUS
    booleans: tuple[str, ...] = MAIN_BOOLEANS
    references: dict[str, str] = field(default_factory=lambda: dict(MAIN_REFERENCES))
    levels: dict[str, list[str]] = field(default_factory=dict)
    bins: dict[str, int] = field(default_factory=dict)

    def predictors(self) -> tuple[str, ...]:
        return tuple(self.references) + self.booleans + self.continuous

    def with_levels_from(self, rows: Sequence[FeatureRow]) -> "RegressionSpec":
        """Fill the level registry from observed rows plus reference levels."""
        levels: dict[str, list[str]] = {}
        for var, reference in self.references.items():
            seen = {str(getattr(row, var)) for row in rows}
            seen.add(reference)
            levels[var] = sorted(seen)
        return RegressionSpec(
            response=self.response,
            continuous=self.continuous,
            booleans=self.booleans,
            references=dict(self.references),
            levels=levels,
            bins=dict(self.bins),
        )


_KNOWN_FIELDS = {f.name for f in dataclass_fields(FeatureRow)}


def parse_spec_config(text: str) -> RegressionSpec:
    """Parse the plain-text key = value regression spec format.

    Recognized keys: response, continuous, booleans (comma-separated lists),
    categorical.<var> = <reference level>, bins.<var> = <n>.
    """
    response = "fidelity"
    continuous: tuple[str, ...] | None = None
    booleans: tuple[str, ...] | None = None
    references: dict[str, str] = {}
    bins: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"regression spec line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key == "response":
            response = value
        elif key == "continuous":
            continuous = tuple(v.strip() for v in value.split(",") if v.strip())
        elif key == "booleans":
            booleans = tuple(v.strip() for v in value.split(",") if v.strip())
        elif key.startswith("categorical."):
            references[key.split(".", 1)[1]] = value
        elif key.startswith("bins."):
            bins[key.split(".", 1)[1]] = int(value)
        else:
            raise ConfigError(f"regression spec line {lineno}: unknown key {key!r}")
    spec = RegressionSpec(
        response=response,
        continuous=continuous if continuous is not None else MAIN_CONTINUOUS,
        booleans=booleans if booleans is not None else MAIN_BOOLEANS,
        references=references or dict(MAIN_REFERENCES),
        bins=bins,
    )
    for name in spec.predictors() + (spec.response,):
        if name not in _KNOWN_FIELDS:
            raise ConfigError(f"regression spec names unknown variable {name!r}")
    return spec


def derive_features(
    record: PairRecord,
    citing: Paper,
    cited: Paper,
    reference_frequency: int,
) -> FeatureRow:
    """Compute one row of regression variables from a scored pair.

    ``reference_frequency`` is the number of extracted reporting instances of
    this cited paper within the citing paper, an aggregate the caller holds.
    Seniority and team size are None when author metadata is missing; such
    rows are excluded listwise from fits that use them.
    """
    sentence = citing.body_sentences[record.citing_sentence_index]
    if not sentence:
        raise ValueError("citing sentence is empty")
    citing_ids = {a.author_id for a in citing.authors}
    cited_ids = {a.author_id for a in cited.authors}
    if citing.authors:
        seniority = float(max(a.h_index for a in citing.authors))
        first = float(citing.authors[0].h_index)
        last = float(citing.authors[-1].h_index)
        team: int | None = len(citing.authors)
    else:
        seniority = first = last = None
        team = None
    return FeatureRow(
        fidelity=record.fidelity,
        field_of_study=citing.field,
        publication_year=str(citing.year),
        publication_type=citing.publication_type,
        open_access=cited.is_open_access,
        context_length=float(len(sentence)),
        reference_frequency=reference_frequency,
        publication_interval=float(citing.year - cited.year),
        paper_citation=float(cited.citation_count),
        team_size=team,
        self_citation=bool(citing_ids & cited_ids),
        within_field=citing.field == cited.field,
        author_seniority=seniority,
        first_author_seniority=first,
        last_author_seniority=last,
    )


@dataclass
class DesignMatrix:
    columns: list[str]
    rows: np.ndarray
    response: np.ndarray
    n_dropped: int = 0


def _complete(row: FeatureRow, names: Iterable[str]) -> bool:
    return all(getattr(row, name) is not None for name in names)


def complete_rows(
    rows: Sequence[FeatureRow], spec: RegressionSpec
) -> tuple[list[FeatureRow], int]:
    """Listwise-complete rows for the spec's variables, plus the dropped count."""
    needed = spec.predictors() + (spec.response,)
    kept = [row for row in rows if _complete(row, needed)]
    return kept, len(rows) - len(kept)


def encode_design_matrix(rows: Sequence[FeatureRow], spec: RegressionSpec) -> DesignMatrix:
    """Dummy-encode features against the spec's reference categories.

    Intercept column of ones first, then one 0/1 column per non-reference
    categorical level, booleans as 0/1, continuous passed through. Rows with
    missing values in used predictors are dropped listwise and counted.
    Raises SingularDesignError naming the collinear columns when the result
    is rank deficient.
    """
    used = spec.predictors()
    kept = [row for row in rows if _complete(row, used + (spec.response,))]
    n_dropped = len(rows) - len(kept)
    if len(kept) < 2:
        raise InsufficientDataError(f"need at least 2 complete rows, have {len(kept)}")
    if not spec.levels:
        spec = spec.with_levels_from(kept)
    columns = ["intercept"]
    dummy_slots: list[tuple[str, str]] = []
    for var, reference in spec.references.items():
        registry = spec.levels.get(var)
        if registry is None:
            raise ConfigError(f"no level registry for categorical {var!r}")
        for level in registry:
            if level == reference:
                continue
            columns.append(f"{var}={level}")
            dummy_slots.append((var, level))
    columns.extend(spec.booleans)
    columns.extend(spec.continuous)

    matrix = np.zeros((len(kept), len(columns)))
    response = np.empty(len(kept))
    for i, row in enumerate(kept):
        response[i] = float(getattr(row, spec.response))
        matrix[i, 0] = 1.0
        j = 1
        for var, level in dummy_slots:
            value = str(getattr(row, var))
            if value not in spec.levels[var]:
                raise ConfigError(f"unregistered level {value!r} for {var!r}")
            matrix[i, j] = 1.0 if value == level else 0.0
            j += 1
        for name in spec.booleans:
            matrix[i, j] = 1.0 if getattr(row, name) else 0.0
            j += 1
        for name in spec.continuous:
            matrix[i, j] = float(getattr(row, name))
            j += 1
    _check_full_rank(matrix, columns)
    return DesignMatrix(columns=columns, rows=matrix, response=response, n_dropped=n_dropped)


def _check_full_rank(matrix: np.ndarray, columns: list[str]) -> None:
    n, k = matrix.shape
    r, pivots = sla.qr(matrix, mode="r", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = diag.max() * max(n, k) * np.finfo(float).eps if diag.size else 0.0
    rank = int((diag > tol).sum())
    if rank < k:
        names = sorted(columns[p] for p in pivots[rank:])
        raise SingularDesignError(names)


@dataclass
class FitResult:
    coefficients: dict[str, float]
    standard_errors: dict[str, float]
    t_values: dict[str, float]
    p_values: dict[str, float]
    r_squared: float
    adjusted_r_squared: float
    n_observations: int


def fit_ols(m: DesignMatrix) -> FitResult:
    """Least squares via QR factorization with classical standard errors.

    sigma^2 = RSS / (n - k); cov(beta) = sigma^2 (X'X)^-1 computed from the
    R factor; two-sided p-values from Student-t with n - k df.
    """
    X, y = m.rows, m.response
    n, k = X.shape
    if n <= k:
        raise InsufficientDataError(f"{n} rows for {k} columns")
    _check_full_rank(X, m.columns)
    q, r = np.linalg.qr(X)
    beta = sla.solve_triangular(r, q.T @ y)
    residuals = y - X @ beta
    rss = float(residuals @ residuals)
    dof = n - k
    sigma2 = rss / dof
    r_inv = sla.solve_triangular(r, np.eye(k))
    xtx_inv_diag = np.sum(r_inv * r_inv, axis=1)
    se = np.sqrt(np.maximum(sigma2 * xtx_inv_diag, 0.0))
    t_vals = np.empty(k)
    p_vals = np.empty(k)
    for i in range(k):
        if se[i] > 0.0:
            t_vals[i] = beta[i] / se[i]
            p_vals[i] = 2.0 * float(sstats.t.sf(abs(t_vals[i]), dof))
        else:
            t_vals[i] = 0.0 if beta[i] == 0.0 else math.copysign(math.inf, beta[i])
            p_vals[i] = 1.0 if beta[i] == 0.0 else 0.0
    centered = y - y.mean()
    tss = float(centered @ centered)
    if tss > 0.0:
        r2 = 1.0 - rss / tss
    else:
        r2 = 1.0 if rss <= 1e-12 else 0.0
    adj = 1.0 - (1.0 - r2) * (n - 1) / dof
    names = m.columns
    return FitResult(
        coefficients={c: float(b) for c, b in zip(names, beta)},
        standard_errors={c: float(s) for c, s in zip(names, se)},
        t_values={c: float(t) for c, t in zip(names, t_vals)},
        p_values={c: float(p) for c, p in zip(names, p_vals)},
        r_squared=r2,
        adjusted_r_squared=adj,
        n_observations=n,
    )


def significance_stars(p: float) -> str:
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


def summarize(fit: FitResult) -> str:
    """Coefficient table as TSV with significance stars, 6-decimal fixed."""
    lines = ["variable\tcoefficient\tstd_error\tt\tp\tstars"]
    for name in fit.coefficients:
        p = fit.p_values[name]
        lines.append(
            f"{name}\t{fit.coefficients[name]:.6f}\t{fit.standard_errors[name]:.6f}"
            f"\t{fit.t_values[name]:.6f}\t{p:.6f}\t{significance_stars(p)}"
        )
    return "\n".join(lines) + "\n"


def bin_continuous(
    rows: Sequence[FeatureRow], variable: str, n_bins: int
) -> list[tuple[str, int, float | None]]:
    """Equal-width bins over the observed range with per-bin mean fidelity.

    Bins are ascending; counts sum to len(rows); empty bins report mean None.
    """
    if n_bins < 2:
        raise ValueError("n_bins must be >= 2")
    if not rows:
        raise ValueError("no rows to bin")
    values = []
    for row in rows:
        value = getattr(row, variable)
        if value is None:
            raise ValueError(f"{variable} missing in a row; filter before binning")
        values.append(float(value))
    lo, hi = min(values), max(values)
    if lo == hi:
        raise ValueError(f"{variable} is constant at {lo}; cannot bin")
    width = (hi - lo) / n_bins
    counts = [0] * n_bins
    sums = [0.0] * n_bins
    for row, value in zip(rows, values):
        index = min(int((value - lo) / width), n_bins - 1)
        counts[index] += 1
        sums[index] += row.fidelity
    out = []
    for i in range(n_bins):
        left, right = lo + i * width, lo + (i + 1) * width
        closer = ")" if i < n_bins - 1 else "]"
        label = f"[{left:.6g}, {right:.6g}{closer}"
        mean = sums[i] / counts[i] if counts[i] else None
        out.append((label, counts[i], mean))
    return out


def feature_to_record(row: FeatureRow) -> dict:
    return {f.name: getattr(row, f.name) for f in dataclass_fields(FeatureRow)}


def feature_from_record(record: Mapping) -> FeatureRow:
    kwargs = {}
    for f in dataclass_fields(FeatureRow):
        kwargs[f.name] = record[f.name]
    return FeatureRow(**kwargs)
