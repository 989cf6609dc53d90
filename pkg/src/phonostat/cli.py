"""Command-line driver: ``phonostat {model,profile,fit,distance,cluster}``.

Exit status is 0 on success, 1 when some texts failed but the rest were
processed, and 2 for usage or configuration errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import logging
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io as pio
from .corpus import (
    Lexicon,
    LowCoverageWarning,
    Mode,
    PhonemeProfile,
    ProfileError,
    build_profile,
    read_lexicon,
    text_statistics,
    to_frequency_vector,
    tokenize,
)
from .model import (
    DirichletModel,
    approx_spectrum,
    expected_spectrum,
    relative_fluctuation_asymptotic,
    relative_fluctuations,
)
from .numerics import Tolerance
from .stylometry import (
    FIT_TOL,
    GROUPS,
    FitError,
    FitResult,
    attribute,
    cluster_margins_beta,
    cluster_margins_common,
    cluster_margins_distance,
    common_fractions,
    distance_matrix,
    exclusive_distance_matrix,
    fit_profile,
    leave_one_out,
    mode_comparison_report,
)

log = logging.getLogger("phonostat")

EXIT_OK, EXIT_PARTIAL, EXIT_USAGE = 0, 1, 2
UNKNOWN_AUTHORS = {"", "?", "unknown"}


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class TextSpec:
    text_id: str
    author: str
    path: Path

    @property
    def held_out(self) -> bool:
        return self.author.strip().lower() in UNKNOWN_AUTHORS


@dataclass
class RunConfig:
    lexicon_path: Path | None = None
    lexicon_format: str | None = None
    strip_stress: bool = True
    texts: list[TextSpec] = field(default_factory=list)
    modes: tuple[Mode, ...] = (Mode.ALL, Mode.TYPES)
    beta_range: tuple[float, float] = (0.1, 2.0)
    tol: float = FIT_TOL.abs
    out_dir: Path = Path("out")
    fmt: str = "csv"
    seed: int = 0
    jobs: int = 4

    def __post_init__(self):
        ids = [t.text_id for t in self.texts]
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        if dupes:
            raise UsageError(f"duplicate text ids: {dupes}")
        if self.fmt not in ("csv", "json"):
            raise UsageError(f"unknown format {self.fmt!r}")

    @property
    def authorship(self) -> dict[str, str]:
        return {t.text_id: t.author for t in self.texts if not t.held_out}


def read_authors(path) -> list[TextSpec]:
    """CSV with columns text_id,author,path; paths are relative to the file."""
    path = Path(path)
    rows = pio.read_csv(path)
    if rows and not {"text_id", "author", "path"} <= set(rows[0]):
        raise UsageError(f"{path}: expected columns text_id,author,path")
    return [TextSpec(r["text_id"].strip(), r["author"].strip(), path.parent / r["path"].strip())
            for r in rows]


def read_config_file(path) -> dict[str, str]:
    """``key = value`` lines; ``#`` comments; surrounding quotes are dropped."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line or line.startswith("["):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value.strip("'\"")
    return out


# ---------------------------------------------------------------------------
# shared pipeline


def _sha(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()[:16]


class Pipeline:
    """Loads the lexicon once and builds (or reuses cached) profiles."""

    def __init__(self, cfg: RunConfig):
        if cfg.lexicon_path is None:
            raise UsageError("--lexicon is required")
        if not cfg.texts:
            raise UsageError("no input texts (use --authors FILE)")
        self.cfg = cfg
        self.lexicon: Lexicon = read_lexicon(cfg.lexicon_path, cfg.lexicon_format, cfg.strip_stress)
        self.lexicon_key = _sha(Path(cfg.lexicon_path).read_bytes() + str(cfg.strip_stress).encode())
        self.cache_dir = cfg.out_dir / ".cache"
        self.failures: dict[str, str] = {}
        self._tokens: dict[str, list[str]] = {}

    def tokens(self, spec: TextSpec) -> list[str]:
        if spec.text_id not in self._tokens:
            self._tokens[spec.text_id] = tokenize(spec.path.read_bytes())
        return self._tokens[spec.text_id]

    def _profile(self, spec: TextSpec, mode: Mode) -> PhonemeProfile:
        raw = spec.path.read_bytes()
        cache = self.cache_dir / f"{_sha(raw)}_{self.lexicon_key}_{mode.value}.json"
        if cache.exists():
            return dataclasses.replace(pio.profile_from_json(pio.read_json(cache)), text_id=spec.text_id)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LowCoverageWarning)
            profile = build_profile(spec.text_id, self.tokens(spec), self.lexicon, mode)
        if profile.coverage < 0.95:
            log.warning("%s: lexicon covers %.1f%% of tokens", spec.text_id, 100 * profile.coverage)
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        pio.write_json(cache, pio.profile_to_json(profile))
        return profile

    def profiles(self, mode: Mode, texts=None) -> dict[str, PhonemeProfile]:
        texts = list(texts if texts is not None else self.cfg.texts)

        def work(spec):
            try:
                return spec.text_id, self._profile(spec, mode), None
            except (OSError, ProfileError) as exc:
                return spec.text_id, None, str(exc)

        out = {}
        with ThreadPoolExecutor(max_workers=max(1, self.cfg.jobs)) as pool:
            for text_id, profile, error in pool.map(work, texts):
                if error is not None:
                    log.error("%s: %s", text_id, error)
                    self.failures[text_id] = error
                else:
                    out[text_id] = profile
        return out

    def fits(self, mode: Mode) -> dict[str, FitResult]:
        fits = {}
        tol = Tolerance(rel=FIT_TOL.rel, abs=self.cfg.tol, max_iter=FIT_TOL.max_iter)
        for text_id, profile in self.profiles(mode).items():
            try:
                fits[text_id] = fit_profile(profile, beta_range=self.cfg.beta_range, tol=tol)
            except (FitError, ArithmeticError) as exc:
                log.error("%s: %s", text_id, exc)
                self.failures[text_id] = str(exc)
        return fits

    def matrix(self, mode: Mode):
        if mode is Mode.EXCLUSIVE:
            return exclusive_distance_matrix(self.profiles(Mode.TYPES), self.lexicon)
        vectors = {t: to_frequency_vector(p) for t, p in self.profiles(mode).items()}
        return distance_matrix(vectors, mode.value)

    @property
    def exit_code(self) -> int:
        return EXIT_PARTIAL if self.failures else EXIT_OK


def _out(cfg: RunConfig, name: str) -> Path:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    return cfg.out_dir / f"{name}.{cfg.fmt}"


# ---------------------------------------------------------------------------
# subcommands


def cmd_model(cfg: RunConfig, n: int, beta: float, curves=("exact", "approx", "fluctuations")) -> int:
    """Rank-frequency curves of the model: exact means, closed-form estimate, fluctuations."""
    model = DirichletModel(n, beta)
    columns: dict[str, list] = {"rank": list(range(1, n + 1))}
    if "exact" in curves:
        columns["exact"] = expected_spectrum(model).freqs.tolist()
    if "approx" in curves:
        columns["approx"] = approx_spectrum(model).tolist()
    if "fluctuations" in curves:
        columns["epsilon"] = relative_fluctuations(model).tolist()
        columns["epsilon_asymptotic"] = [
            relative_fluctuation_asymptotic(model, r) if r < n else None for r in range(1, n + 1)
        ]
    name = f"model_n{n}_beta{beta:g}"
    if cfg.fmt == "json":
        pio.write_json(_out(cfg, name), {"n": n, "beta": beta, **columns})
    else:
        rows = zip(*columns.values())
        pio.write_csv(_out(cfg, name), tuple(columns), rows)
    return EXIT_OK


def cmd_profile(cfg: RunConfig) -> int:
    pipe = Pipeline(cfg)
    modes = [m for m in cfg.modes if m is not Mode.EXCLUSIVE] or [Mode.ALL]
    pdir = cfg.out_dir / "profiles"
    pdir.mkdir(parents=True, exist_ok=True)
    for mode in modes:
        for text_id, profile in pipe.profiles(mode).items():
            pio.write_json(pdir / f"{text_id}.{mode.value}.json", pio.profile_to_json(profile))
    rows = []
    for spec in cfg.texts:
        if spec.text_id in pipe.failures:
            continue
        try:
            st = text_statistics(spec.text_id, pipe.tokens(spec), pipe.lexicon)
        except (OSError, ProfileError) as exc:
            pipe.failures[spec.text_id] = str(exc)
            continue
        rows.append((spec.text_id, spec.author, st.n_tokens, st.n_token_phonemes, st.n_types,
                     st.n_type_phonemes, st.coverage))
    header = ("text_id", "author", "N_tw", "N_pht", "N_dw", "N_phd", "coverage")
    if cfg.fmt == "json":
        pio.write_json(_out(cfg, "profile_summary"), [dict(zip(header, r)) for r in rows])
    else:
        pio.write_csv(_out(cfg, "profile_summary"), header, rows)
    return pipe.exit_code


def cmd_fit(cfg: RunConfig) -> int:
    pipe = Pipeline(cfg)
    authors = {t.text_id: t.author for t in cfg.texts}
    for mode in cfg.modes:
        if mode is Mode.EXCLUSIVE:
            raise UsageError("fitting is defined for 'all' and 'types' modes only")
        fits = pipe.fits(mode)
        if cfg.fmt == "json":
            pio.write_json(_out(cfg, f"fits_{mode.value}"),
                           [{**pio.fit_to_json(f), "author": authors[t]} for t, f in fits.items()])
        else:
            pio.write_csv(_out(cfg, f"fits_{mode.value}"), pio.FIT_HEADER,
                          [pio.fit_row(f, authors[t]) for t, f in fits.items()])
            sdir = cfg.out_dir / "spectra"
            sdir.mkdir(parents=True, exist_ok=True)
            for t, f in fits.items():
                pio.write_csv(sdir / f"{t}.{mode.value}.csv", ("rank", "observed", "predicted", "phoneme"),
                              [(r, o, p, lab) for r, o, p, lab in zip(
                                  range(1, len(f.observed) + 1), f.observed.freqs.tolist(),
                                  f.predicted.freqs.tolist(), f.observed.labels or [""] * len(f.observed))])
    return pipe.exit_code


def cmd_distance(cfg: RunConfig) -> int:
    pipe = Pipeline(cfg)
    if len(cfg.texts) < 2:
        raise UsageError("distances need at least two texts")
    for mode in cfg.modes:
        matrix = pipe.matrix(mode)
        if cfg.fmt == "json":
            pio.write_json(_out(cfg, f"distances_{mode.value}"), pio.distance_to_json(matrix))
        else:
            pio.write_distance_csv(_out(cfg, f"distances_{mode.value}"), matrix)
    return pipe.exit_code


def cmd_cluster(cfg: RunConfig) -> int:
    pipe = Pipeline(cfg)
    authorship = cfg.authorship
    if len(set(authorship.values())) < 2:
        raise UsageError("clustering needs author labels for at least two authors")
    modes = list(dict.fromkeys(list(cfg.modes) + [Mode.ALL, Mode.TYPES]))
    matrices = {m.value: pipe.matrix(m) for m in modes}
    fits = {m.value: pipe.fits(m) for m in (Mode.ALL, Mode.TYPES)}
    # texts that failed anywhere drop out of every table
    authorship = {t: a for t, a in authorship.items() if t not in pipe.failures}
    if len(set(authorship.values())) < 2:
        raise UsageError("fewer than two authors left after failures")
    betas = {m: {t: f.beta_hat for t, f in fs.items() if t in authorship} for m, fs in fits.items()}

    margin_rows = []
    for mode in modes:
        b = {}
        if mode.value in betas:
            b = {m.author: m.b for m in cluster_margins_beta(betas[mode.value], authorship)}
        for m in cluster_margins_distance(matrices[mode.value], authorship):
            margin_rows.append((m.author, mode.value, b.get(m.author), m.z0, m.z1))

    fractions = common_fractions(pipe.profiles(Mode.TYPES))
    frac_rows = [(*sorted(k, key=list(matrices["types"].ids).index), v) for k, v in fractions.items()]
    common_margin = cluster_margins_common({k: v for k, v in fractions.items() if k <= set(authorship)},
                                           authorship)

    attribution_rows = []
    for mode in modes:
        matrix = matrices[mode.value]
        for res in leave_one_out(matrix, authorship):
            for ref_author, verdicts in res.verdicts.items():
                for lam, v in verdicts.items():
                    attribution_rows.append((mode.value, res.text_id, res.true_author, ref_author, lam,
                                             v.candidate_max, v.reference_max, v.label))
        for spec in cfg.texts:
            if not spec.held_out or spec.text_id in pipe.failures:
                continue
            for ref_author in sorted(set(authorship.values())):
                refs = [t for t, a in authorship.items() if a == ref_author]
                for lam, v in attribute(spec.text_id, refs, matrix).items():
                    attribution_rows.append((mode.value, spec.text_id, "", ref_author, lam,
                                             v.candidate_max, v.reference_max, v.label))

    report = mode_comparison_report(authorship, matrices, betas, fractions)
    score_rows = [(r.group, r.label, r.lhs, r.rhs, r.margin, r.status) for r in report.relations]

    tables = {
        "margins": (("author", "mode", "b", "z0", "z1"), margin_rows),
        "common_fractions": (("text_i", "text_j", "p"), frac_rows),
        "common_margins": (("author", "margin"), sorted(common_margin.items())),
        "attribution": (("mode", "candidate", "true_author", "reference_author", "lambda",
                         "candidate_max", "reference_max", "verdict"), attribution_rows),
        "scorecard": (("group", "label", "lhs", "rhs", "margin", "status"), score_rows),
        "scorecard_summary": (("group", "description", "holds", "total"),
                              [(g, GROUPS[g], h, n) for g, (h, n) in report.counts().items()]),
    }
    if cfg.fmt == "json":
        pio.write_json(_out(cfg, "cluster"),
                       {name: [dict(zip(h, map(_jsonable, row))) for row in rows]
                        for name, (h, rows) in tables.items()})
    else:
        for name, (header, rows) in tables.items():
            pio.write_csv(_out(cfg, name), header, rows)
    return pipe.exit_code


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    return x


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file supplying defaults for the flags below")
    common.add_argument("--lexicon", help="pronunciation lexicon (word<TAB>PH1 PH2 ... or cmudict format)")
    common.add_argument("--lexicon-format", choices=("tsv", "cmudict"))
    common.add_argument("--keep-stress", action="store_true", help="keep stress digits on phoneme symbols")
    common.add_argument("--authors", help="CSV with columns text_id,author,path")
    common.add_argument("--mode", action="append", choices=[m.value for m in Mode],
                        help="word set(s) to analyse; repeatable (default: all and types)")
    common.add_argument("--beta-min", type=float)
    common.add_argument("--beta-max", type=float)
    common.add_argument("--tol", type=float, help="absolute tolerance on fitted beta")
    common.add_argument("--out", help="output directory (default: out)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--seed", type=int)
    common.add_argument("--jobs", type=int, help="worker threads for profiling")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="phonostat", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    model = sub.add_parser("model", parents=[common], help="model rank-frequency curves")
    model.add_argument("--n", type=int, default=44)
    model.add_argument("--beta", type=float, default=0.8)
    model.add_argument("--curves", nargs="+", choices=("exact", "approx", "fluctuations"),
                       default=["exact", "approx", "fluctuations"])
    sub.add_parser("profile", parents=[common], help="phoneme profiles and text statistics")
    sub.add_parser("fit", parents=[common], help="fit beta per text and mode")
    sub.add_parser("distance", parents=[common], help="pairwise rho0/rho1 distances")
    sub.add_parser("cluster", parents=[common], help="author margins, attribution and mode comparison")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    file_cfg = read_config_file(args.config) if args.config else {}

    def pick(name, convert=str, default=None):
        value = getattr(args, name, None)
        if value is None and name in file_cfg:
            try:
                value = convert(file_cfg[name])
            except ValueError as exc:
                raise UsageError(f"config value for {name}: {exc}") from None
        return default if value is None else value

    modes = args.mode or ([m.strip() for m in file_cfg["mode"].split(",")] if "mode" in file_cfg else None)
    authors = pick("authors")
    texts = read_authors(authors) if authors else []
    lexicon = pick("lexicon")
    return RunConfig(
        lexicon_path=Path(lexicon) if lexicon else None,
        lexicon_format=pick("lexicon_format"),
        strip_stress=not (args.keep_stress or file_cfg.get("keep_stress", "").lower() in ("1", "true", "yes")),
        texts=texts,
        modes=tuple(Mode(m) for m in modes) if modes else (Mode.ALL, Mode.TYPES),
        beta_range=(pick("beta_min", float, 0.1), pick("beta_max", float, 2.0)),
        tol=pick("tol", float, FIT_TOL.abs),
        out_dir=Path(pick("out", default="out")),
        fmt=pick("format", default="csv"),
        seed=pick("seed", int, 0),
        jobs=pick("jobs", int, 4),
    )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        if args.command == "model":
            return cmd_model(cfg, args.n, args.beta, tuple(args.curves))
        command = {"profile": cmd_profile, "fit": cmd_fit, "distance": cmd_distance,
                   "cluster": cmd_cluster}[args.command]
        return command(cfg)
    except (UsageError, FileNotFoundError) as exc:
        print(f"phonostat: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        # bad lexicon, inconsistent inputs
        print(f"phonostat: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
