"""Fitting beta to observed spectra and author clustering of phoneme profiles.

Two views of author-dependency are offered. The parametric one fits the
Dirichlet concentration beta to each text and asks whether the fitted values
cluster by author. The parameter-free one compares texts directly through
half-L1 distances, either between phoneme-aligned frequency vectors (rho0)
or between rank-sorted spectra (rho1). In both cases an author's cluster
margin is the smallest difference to a foreign text minus the largest
difference within the author's own texts; a positive margin means the
author's texts separate from everyone else's.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np

from .corpus import FrequencyVector, Lexicon, Mode, PhonemeProfile, common_fraction, exclusive_profile, \
    rank_spectrum, to_frequency_vector
from .model import DirichletModel, RankedSpectrum, expected_spectrum
from .numerics import Tolerance, minimize_scalar

log = logging.getLogger(__name__)

BETA_RANGE = (0.1, 2.0)
GRID_STEP = 0.01
FIT_TOL = Tolerance(rel=1e-12, abs=1e-6, max_iter=200)
# two quantities closer than this are reported as a tie
TIE_ATOL = 1e-9


class FitError(RuntimeError):
    pass


class InsufficientTextsError(ValueError):
    pass


def _as_array(x) -> np.ndarray:
    if isinstance(x, RankedSpectrum):
        return x.freqs
    if isinstance(x, FrequencyVector):
        return x.freqs
    return np.asarray(x, dtype=float)


# ---------------------------------------------------------------------------
# goodness of fit


def ss_err(observed, predicted) -> float:
    """Sum of squared rank-wise differences."""
    f, g = _as_array(observed), _as_array(predicted)
    if f.shape != g.shape:
        raise ValueError(f"length mismatch: {len(f)} vs {len(g)}")
    return float(np.sum((f - g) ** 2))


def r_squared(observed, predicted) -> float:
    """Squared Pearson correlation between observed and predicted spectra."""
    f, g = _as_array(observed), _as_array(predicted)
    if f.shape != g.shape:
        raise ValueError(f"length mismatch: {len(f)} vs {len(g)}")
    if len(f) < 2:
        raise ValueError("need at least two ranks")
    df, dg = f - f.mean(), g - g.mean()
    denom = np.sum(df * df) * np.sum(dg * dg)
    if denom == 0:
        raise ValueError("R^2 undefined for a constant vector")
    return float(np.sum(df * dg) ** 2 / denom)


@dataclass(frozen=True)
class FitResult:
    beta_hat: float
    ss_err: float
    r_squared: float
    predicted: RankedSpectrum
    observed: RankedSpectrum
    mode: str | None = None
    grid_warning: bool = False
    text_id: str | None = None
    grid_beta: float = math.nan


def fit_beta(observed: RankedSpectrum, beta_range: tuple[float, float] = BETA_RANGE,
             tol: Tolerance = FIT_TOL, mode: str | None = None,
             text_id: str | None = None, grid_step: float = GRID_STEP) -> FitResult:
    """Least-squares fit of beta: minimize SS_err against the model's mean spectrum.

    A coarse grid scan runs first; if its minimum and the golden-section
    result disagree by more than one grid step the fit is flagged with
    ``grid_warning``. A minimum on the edge of ``beta_range`` raises
    :class:`FitError` instead of being clamped.
    """
    lo, hi = beta_range
    if not 0 < lo < hi:
        raise ValueError(f"bad beta range {beta_range}")
    n = len(observed)
    f = observed.freqs

    def objective(beta: float) -> float:
        return float(np.sum((f - expected_spectrum(DirichletModel(n, beta)).freqs) ** 2))

    steps = int(math.floor((hi - lo) / grid_step + 1e-9))
    grid = [round(lo + k * grid_step, 10) for k in range(steps + 1)]
    values = [objective(b) for b in grid]
    grid_beta = grid[int(np.argmin(values))]

    best = minimize_scalar(objective, lo, hi, tol)
    if not best.converged:
        log.warning("golden-section search hit max_iter for %s", text_id or "spectrum")
    beta_hat = best.argmin
    grid_warning = abs(beta_hat - grid_beta) > grid_step
    if grid_warning:
        log.warning("%s: grid minimum %.3f disagrees with golden section %.5f",
                    text_id or "spectrum", grid_beta, beta_hat)
    edge = max(grid_step, 10 * tol.abs)
    if beta_hat - lo < edge or hi - beta_hat < edge:
        raise FitError(f"{text_id or 'spectrum'}: best beta {beta_hat:.4f} lies on the edge of "
                       f"{beta_range}; widen the range")
    predicted = expected_spectrum(DirichletModel(n, beta_hat))
    return FitResult(
        beta_hat=beta_hat,
        ss_err=ss_err(observed, predicted),
        r_squared=r_squared(observed, predicted),
        predicted=predicted,
        observed=observed,
        mode=mode,
        grid_warning=grid_warning,
        text_id=text_id,
        grid_beta=grid_beta,
    )


# ---------------------------------------------------------------------------
# distances


def rho0(fv_i, fv_j) -> float:
    """Half-L1 (total variation) distance between phoneme-aligned frequencies."""
    if isinstance(fv_i, FrequencyVector) and isinstance(fv_j, FrequencyVector):
        if fv_i.inventory != fv_j.inventory:
            raise ValueError("frequency vectors use different phoneme inventories")
    p, q = _as_array(fv_i), _as_array(fv_j)
    if p.shape != q.shape:
        raise ValueError(f"length mismatch: {len(p)} vs {len(q)}")
    return 0.5 * float(np.sum(np.abs(p - q)))


def rho1(spec_i, spec_j) -> float:
    """Half-L1 distance between rank-sorted spectra."""
    p, q = _as_array(spec_i), _as_array(spec_j)
    if p.shape != q.shape:
        raise ValueError(f"length mismatch: {len(p)} vs {len(q)}")
    return 0.5 * float(np.sum(np.abs(p - q)))


@dataclass(frozen=True)
class DistancePair:
    text_i: str
    text_j: str
    rho0: float
    rho1: float
    mode: str | None = None

    def rho(self, lam: int) -> float:
        if lam == 0:
            return self.rho0
        if lam == 1:
            return self.rho1
        raise ValueError(f"lambda must be 0 or 1, got {lam}")


def distance_pair(text_i: str, text_j: str, fv_i: FrequencyVector, fv_j: FrequencyVector,
                  mode: str | None = None) -> DistancePair:
    return DistancePair(text_i, text_j, rho0(fv_i, fv_j),
                        rho1(rank_spectrum(fv_i), rank_spectrum(fv_j)), mode)


@dataclass
class DistanceMatrix:
    """Symmetric pairwise distances over a fixed list of texts."""

    ids: tuple[str, ...]
    mode: str | None = None
    pairs: dict[frozenset, DistancePair] = field(default_factory=dict)

    def add(self, pair: DistancePair) -> None:
        self.pairs[frozenset((pair.text_i, pair.text_j))] = pair

    def pair(self, i: str, j: str) -> DistancePair:
        if i == j:
            return DistancePair(i, j, 0.0, 0.0, self.mode)
        return self.pairs[frozenset((i, j))]

    def rho(self, i: str, j: str, lam: int) -> float:
        return self.pair(i, j).rho(lam)

    def __iter__(self):
        for i, j in itertools.combinations(self.ids, 2):
            yield self.pair(i, j)


def distance_matrix(vectors: Mapping[str, FrequencyVector], mode: str | None = None) -> DistanceMatrix:
    ids = tuple(vectors)
    if len(set(ids)) < len(ids):
        raise ValueError("duplicate text ids")
    matrix = DistanceMatrix(ids, mode)
    for i, j in itertools.combinations(ids, 2):
        matrix.add(distance_pair(i, j, vectors[i], vectors[j], mode))
    return matrix


def exclusive_distance_matrix(type_profiles: Mapping[str, PhonemeProfile], lexicon: Lexicon) -> DistanceMatrix:
    """Distances after removing, pair by pair, the word types both texts share."""
    ids = tuple(type_profiles)
    matrix = DistanceMatrix(ids, Mode.EXCLUSIVE.value)
    for i, j in itertools.combinations(ids, 2):
        pi, pj = exclusive_profile(type_profiles[i], type_profiles[j], lexicon)
        matrix.add(distance_pair(i, j, to_frequency_vector(pi), to_frequency_vector(pj),
                                 Mode.EXCLUSIVE.value))
    return matrix


def common_fractions(type_profiles: Mapping[str, PhonemeProfile]) -> dict[frozenset, float]:
    return {
        frozenset((i, j)): common_fraction(type_profiles[i], type_profiles[j])
        for i, j in itertools.combinations(type_profiles, 2)
    }


# ---------------------------------------------------------------------------
# cluster margins


@dataclass(frozen=True)
class Margin:
    inter_min: float
    intra_max: float

    @property
    def value(self) -> float:
        return self.inter_min - self.intra_max


def _group(authorship: Mapping[str, str], min_texts: int = 2) -> dict[str, list[str]]:
    groups: dict[str, list[str]] = {}
    for text, author in authorship.items():
        groups.setdefault(author, []).append(text)
    if len(groups) < 2:
        raise InsufficientTextsError("need at least two authors")
    thin = [a for a, texts in groups.items() if len(texts) < min_texts]
    if thin:
        raise InsufficientTextsError(f"need at least {min_texts} texts per author: {thin}")
    return groups


def margin(difference: Callable[[str, str], float], authorship: Mapping[str, str], author: str) -> Margin:
    """min difference to foreign texts minus max difference among own texts.

    A single-text author has no own pairs; its intra maximum is 0.
    """
    own = [t for t, a in authorship.items() if a == author]
    foreign = [t for t, a in authorship.items() if a != author]
    if not own or not foreign:
        raise InsufficientTextsError(f"author {author!r} needs own and foreign texts")
    inter = min(difference(i, k) for i in own for k in foreign)
    intra = max((difference(i, j) for i, j in itertools.combinations(own, 2)), default=0.0)
    return Margin(inter, intra)


@dataclass(frozen=True)
class ClusterMargins:
    author: str
    mode: str | None = None
    b: float | None = None
    z0: float | None = None
    z1: float | None = None


def cluster_margins_beta(fits: Mapping[str, FitResult | float], authorship: Mapping[str, str],
                         mode: str | None = None) -> list[ClusterMargins]:
    groups = _group(authorship)
    beta = {t: (f.beta_hat if isinstance(f, FitResult) else float(f)) for t, f in fits.items()}
    diff = lambda i, j: abs(beta[i] - beta[j])  # noqa: E731
    return [ClusterMargins(a, mode, b=margin(diff, authorship, a).value) for a in groups]


def cluster_margins_distance(matrix: DistanceMatrix, authorship: Mapping[str, str]) -> list[ClusterMargins]:
    groups = _group(authorship, min_texts=1)
    out = []
    for a in groups:
        z0 = margin(lambda i, j: matrix.rho(i, j, 0), authorship, a).value
        z1 = margin(lambda i, j: matrix.rho(i, j, 1), authorship, a).value
        out.append(ClusterMargins(a, matrix.mode, z0=z0, z1=z1))
    return out


def cluster_margins_common(fractions: Mapping[frozenset, float], authorship: Mapping[str, str]) -> dict[str, float]:
    """Author margins with 1 - p(ij) in place of a distance."""
    groups = _group(authorship)
    diff = lambda i, j: 1.0 - fractions[frozenset((i, j))]  # noqa: E731
    return {a: margin(diff, authorship, a).value for a in groups}


# ---------------------------------------------------------------------------
# attribution


@dataclass(frozen=True)
class AttributionVerdict:
    lam: int
    candidate_max: float
    reference_max: float

    @property
    def evidence(self) -> bool:
        return self.candidate_max <= self.reference_max

    @property
    def label(self) -> str:
        return "EVIDENCE" if self.evidence else "NO_EVIDENCE"


def attribute(candidate: str, references: Iterable[str], matrix: DistanceMatrix,
              lams: Iterable[int] = (0, 1)) -> dict[int, AttributionVerdict]:
    """Is ``candidate`` no farther from the references than they are from each other?"""
    refs = [r for r in references if r != candidate]
    if len(refs) < 2:
        raise InsufficientTextsError("attribution needs at least two reference texts")
    verdicts = {}
    for lam in lams:
        cand = max(matrix.rho(candidate, r, lam) for r in refs)
        intra = max(matrix.rho(i, j, lam) for i, j in itertools.combinations(refs, 2))
        verdicts[lam] = AttributionVerdict(lam, cand, intra)
    return verdicts


@dataclass(frozen=True)
class LeaveOneOut:
    text_id: str
    true_author: str
    verdicts: dict[str, dict[int, AttributionVerdict]]

    def correct(self, lam: int) -> bool:
        """Evidence for the true author and none for any other."""
        return all(v[lam].evidence == (a == self.true_author) for a, v in self.verdicts.items())


def leave_one_out(matrix: DistanceMatrix, authorship: Mapping[str, str],
                  lams: Iterable[int] = (0, 1)) -> list[LeaveOneOut]:
    """Attribute every text against each author's remaining texts."""
    groups = _group(authorship)
    lams = tuple(lams)
    results = []
    for text, author in authorship.items():
        verdicts = {a: attribute(text, [t for t in texts if t != text], matrix, lams)
                    for a, texts in groups.items()}
        results.append(LeaveOneOut(text, author, verdicts))
    return results


# ---------------------------------------------------------------------------
# cross-mode comparison


@dataclass(frozen=True)
class Relation:
    """One inequality lhs > rhs with its signed margin."""

    group: str
    label: str
    lhs: float
    rhs: float

    @property
    def margin(self) -> float:
        return self.lhs - self.rhs

    @property
    def status(self) -> str:
        if abs(self.margin) <= TIE_ATOL:
            return "tie"
        return "holds" if self.margin > 0 else "violated"


@dataclass
class ModeComparisonReport:
    relations: list[Relation] = field(default_factory=list)

    def group(self, name: str) -> list[Relation]:
        return [r for r in self.relations if r.group == name]

    def counts(self) -> dict[str, tuple[int, int]]:
        """group -> (relations holding, total)."""
        out: dict[str, tuple[int, int]] = {}
        for r in self.relations:
            held, total = out.get(r.group, (0, 0))
            out[r.group] = (held + (r.status == "holds"), total + 1)
        return out

    def exceptions(self) -> list[Relation]:
        return [r for r in self.relations if r.status != "holds"]


GROUPS = {
    "beta_diff_gt_all": "beta(types) > beta(all) per text",
    "b_diff_gt_all": "b(types) > b(all) per author",
    "z_positive": "z_lambda > 0 per author, mode and lambda",
    "z_diff_gt_all": "z(types) > z(all) per author and lambda",
    "rho_all_gt_diff": "rho(all) > rho(types) for same-author pairs",
    "z_excl_positive": "z(exclusive) > 0 per author and lambda",
    "rho_excl_gt_diff": "rho(exclusive) > rho(types) for same-author pairs",
    "z_excl_gt_diff": "z(exclusive) > z(types) per author and lambda",
    "common_positive": "margin of 1 - p(ij) > 0 per author",
}


def mode_comparison_report(authorship: Mapping[str, str],
                           matrices: Mapping[str, DistanceMatrix],
                           betas: Mapping[str, Mapping[str, float]] | None = None,
                           fractions: Mapping[frozenset, float] | None = None) -> ModeComparisonReport:
    """Score the cross-mode inequalities relating all-token, type and exclusive analyses.

    ``matrices`` and ``betas`` are keyed by mode value (``"all"``,
    ``"types"``, ``"exclusive-types"``). The all-token and type matrices are
    required; relations needing absent inputs are skipped. Ties and
    violations are reported, never raised.
    """
    all_m, types_m = Mode.ALL.value, Mode.TYPES.value
    excl_m = Mode.EXCLUSIVE.value
    missing = [m for m in (all_m, types_m) if m not in matrices]
    if missing:
        raise ValueError(f"mode set incomplete, missing {missing}")
    groups = _group(authorship)
    same_author = [(i, j) for texts in groups.values() for i, j in itertools.combinations(texts, 2)]
    report = ModeComparisonReport()
    add = report.relations.append

    z = {mode: {(m.author, lam): getattr(m, f"z{lam}")
                for m in cluster_margins_distance(matrix, authorship) for lam in (0, 1)}
         for mode, matrix in matrices.items()}

    if betas and all_m in betas and types_m in betas:
        for t in authorship:
            add(Relation("beta_diff_gt_all", t, betas[types_m][t], betas[all_m][t]))
        b = {mode: {m.author: m.b for m in cluster_margins_beta(betas[mode], authorship)}
             for mode in (all_m, types_m)}
        for a in groups:
            add(Relation("b_diff_gt_all", a, b[types_m][a], b[all_m][a]))

    for mode in (all_m, types_m):
        for (a, lam), value in z[mode].items():
            add(Relation("z_positive", f"{mode} z{lam}({a})", value, 0.0))
    for (a, lam), value in z[types_m].items():
        add(Relation("z_diff_gt_all", f"z{lam}({a})", value, z[all_m][(a, lam)]))
    for i, j in same_author:
        for lam in (0, 1):
            add(Relation("rho_all_gt_diff", f"rho{lam}({i},{j})",
                         matrices[all_m].rho(i, j, lam), matrices[types_m].rho(i, j, lam)))

    if excl_m in matrices:
        for (a, lam), value in z[excl_m].items():
            add(Relation("z_excl_positive", f"z{lam}({a})", value, 0.0))
            add(Relation("z_excl_gt_diff", f"z{lam}({a})", value, z[types_m][(a, lam)]))
        for i, j in same_author:
            for lam in (0, 1):
                add(Relation("rho_excl_gt_diff", f"rho{lam}({i},{j})",
                             matrices[excl_m].rho(i, j, lam), matrices[types_m].rho(i, j, lam)))

    if fractions is not None:
        for a, value in cluster_margins_common(fractions, authorship).items():
            add(Relation("common_positive", a, value, 0.0))
    return report


def fit_profile(profile: PhonemeProfile, **kwargs) -> FitResult:
    """Fit beta to the ranked spectrum of one profile."""
    spectrum = rank_spectrum(to_frequency_vector(profile))
    return fit_beta(spectrum, mode=profile.mode.value, text_id=profile.text_id, **kwargs)
