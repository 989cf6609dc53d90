"""Readers and writers for the files the command line produces.

Every writer emits deterministic bytes (sorted keys, shortest round-trip
float repr, '\\n' line endings) so identical inputs give identical files.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import Mode, PhonemeInventory, PhonemeProfile
from .model import RankedSpectrum
from .stylometry import DistanceMatrix, DistancePair, FitResult


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return "nan" if math.isnan(x) else repr(float(x))
    return str(x)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(x) for x in row])
    path = Path(path)
    path.write_bytes(buf.getvalue().encode("utf-8"))
    return path


def read_csv(path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_bytes(dumps(obj).encode("utf-8"))
    return path


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# spectra


def spectrum_rows(spectrum: RankedSpectrum):
    labels = spectrum.labels or ("",) * len(spectrum)
    return [(r, f, lab) for r, (f, lab) in enumerate(zip(spectrum.freqs.tolist(), labels), start=1)]


def write_spectrum_csv(path, spectrum: RankedSpectrum) -> Path:
    return write_csv(path, ("rank", "frequency", "label"), spectrum_rows(spectrum))


def read_spectrum_csv(path) -> RankedSpectrum:
    rows = read_csv(path)
    labels = tuple(r["label"] for r in rows)
    return RankedSpectrum(np.array([float(r["frequency"]) for r in rows]),
                          labels if all(labels) else None)


def spectrum_to_json(spectrum: RankedSpectrum) -> dict:
    return {"frequencies": spectrum.freqs.tolist(),
            "labels": list(spectrum.labels) if spectrum.labels else None}


def spectrum_from_json(obj: dict) -> RankedSpectrum:
    labels = obj.get("labels")
    return RankedSpectrum(np.array(obj["frequencies"]), tuple(labels) if labels else None)


# ---------------------------------------------------------------------------
# profiles


def profile_to_json(profile: PhonemeProfile, include_words: bool = True) -> dict:
    out = {
        "text_id": profile.text_id,
        "mode": profile.mode.value,
        "inventory": list(profile.inventory.symbols),
        "counts": {s: profile.counts.get(s, 0) for s in profile.inventory.symbols},
        "total": profile.total,
        "token_count": profile.token_count,
        "type_count": profile.type_count,
        "oov_count": len(profile.oov),
        "coverage": profile.coverage,
        "in_lexicon_tokens": profile.in_lexicon_tokens,
    }
    if profile.vs is not None:
        out["vs"] = profile.vs
    if include_words:
        out["word_types"] = sorted(profile.word_types)
        out["oov"] = sorted(profile.oov)
    return out


def profile_from_json(obj: dict) -> PhonemeProfile:
    if "word_types" not in obj:
        raise ValueError(f"{obj.get('text_id')}: profile JSON lacks word_types; cannot rebuild")
    inventory = PhonemeInventory(tuple(obj["inventory"]))
    counts = {s: int(c) for s, c in obj["counts"].items() if int(c)}
    return PhonemeProfile(
        text_id=obj["text_id"],
        mode=Mode(obj["mode"]),
        inventory=inventory,
        counts=counts,
        total=int(obj["total"]),
        word_types=frozenset(obj["word_types"]),
        token_count=int(obj["token_count"]),
        in_lexicon_tokens=int(obj["in_lexicon_tokens"]),
        oov=frozenset(obj.get("oov", ())),
        vs=obj.get("vs"),
    )


# ---------------------------------------------------------------------------
# fits

FIT_HEADER = ("text_id", "author", "mode", "beta", "ss_err_x1e7", "r_squared", "grid_warning")


def fit_row(fit: FitResult, author: str = "") -> tuple:
    return (fit.text_id, author, fit.mode, fit.beta_hat, fit.ss_err * 1e7, fit.r_squared, fit.grid_warning)


def fit_to_json(fit: FitResult) -> dict:
    return {
        "text_id": fit.text_id,
        "mode": fit.mode,
        "beta": fit.beta_hat,
        "grid_beta": fit.grid_beta,
        "ss_err": fit.ss_err,
        "r_squared": fit.r_squared,
        "grid_warning": fit.grid_warning,
        "observed": spectrum_to_json(fit.observed),
        "predicted": spectrum_to_json(fit.predicted),
    }


def fit_from_json(obj: dict) -> FitResult:
    return FitResult(
        beta_hat=obj["beta"],
        ss_err=obj["ss_err"],
        r_squared=obj["r_squared"],
        predicted=spectrum_from_json(obj["predicted"]),
        observed=spectrum_from_json(obj["observed"]),
        mode=obj["mode"],
        grid_warning=obj["grid_warning"],
        text_id=obj["text_id"],
        grid_beta=obj.get("grid_beta", math.nan),
    )


def read_fit_csv(path) -> dict[str, float]:
    """text_id -> fitted beta from a fit table."""
    return {r["text_id"]: float(r["beta"]) for r in read_csv(path)}


# ---------------------------------------------------------------------------
# distances

DISTANCE_HEADER = ("text_i", "text_j", "rho0", "rho1", "mode")


def distance_rows(matrix: DistanceMatrix):
    return [(p.text_i, p.text_j, p.rho0, p.rho1, p.mode or "") for p in matrix]


def write_distance_csv(path, matrix: DistanceMatrix) -> Path:
    return write_csv(path, DISTANCE_HEADER, distance_rows(matrix))


def read_distance_csv(path) -> DistanceMatrix:
    rows = read_csv(path)
    ids: dict[str, None] = {}
    pairs = []
    for r in rows:
        ids.setdefault(r["text_i"])
        ids.setdefault(r["text_j"])
        pairs.append(DistancePair(r["text_i"], r["text_j"], float(r["rho0"]), float(r["rho1"]),
                                  r["mode"] or None))
    matrix = DistanceMatrix(tuple(ids), pairs[0].mode if pairs else None)
    for p in pairs:
        matrix.add(p)
    return matrix


def distance_to_json(matrix: DistanceMatrix) -> dict:
    return {"mode": matrix.mode, "ids": list(matrix.ids),
            "pairs": [dict(zip(DISTANCE_HEADER, row)) for row in distance_rows(matrix)]}


def distance_from_json(obj: dict) -> DistanceMatrix:
    matrix = DistanceMatrix(tuple(obj["ids"]), obj["mode"])
    for p in obj["pairs"]:
        matrix.add(DistancePair(p["text_i"], p["text_j"], p["rho0"], p["rho1"], p["mode"] or None))
    return matrix
