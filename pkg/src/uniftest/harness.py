"""Seeded Monte-Carlo runner: instances x testers -> rejection statistics.

Randomness layout for master seed ``s`` (see :func:`substream`):

* ``(s, 0, t)``  tester seed for trial ``t``
* ``(s, 1, t)``  instance for trial ``t`` (random generators only)
* ``(s, 2)``     the Kneser matching shared by every hard-distribution draw

Because substreams are addressed by trial index, splitting trials across
worker processes gives the same statistics as a serial run.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from statistics import NormalDist
from typing import Sequence

from .combinatorics import substream, substream_seed
from .distance import DEFAULT_MAX_EDGES, exact_distance, matching_certificate
from .errors import BudgetExceeded, ValidationError
from .family import (
    ExplicitFamily,
    FamilyOracle,
    Junta,
    _check_family_params,
    junta_family,
    kneser_matching_ranks,
    random_family,
    read_family,
    sample_dno,
    dno_size,
    star_family,
)
from .rational import as_fraction, exceeds, fmt_decimal
from .testers import (
    canonical_sample_size,
    canonical_tester,
    density_sample_size,
    density_tester,
    disjoint_pair_sample_size,
    disjoint_pair_tester,
    junta_sample_size,
    junta_tester,
)

TESTERS = ("canonical", "junta", "density", "disjoint_pair")
GENERATORS = ("star", "junta", "full", "dno", "random", "file")
SHARED_GENERATORS = frozenset({"star", "junta", "full", "file"})

Z95 = NormalDist().inv_cdf(0.975)


def parse_junta(text: str) -> tuple[tuple[int, ...], tuple[tuple[int, ...], ...]]:
    """``"1,2:1;1,2"`` -> J = {1,2}, S = {{1}, {1,2}}.

    Traces are separated by ``;`` and ``-`` stands for the empty trace.
    Nothing after the colon means S is empty.
    """
    if ":" not in text:
        raise ValidationError(f"junta must look like 'J:S', got {text!r}")
    left, right = text.split(":", 1)
    try:
        coords = tuple(int(x) for x in left.split(",") if x.strip())
        traces = []
        for item in right.split(";"):
            item = item.strip()
            if not item:
                continue
            traces.append(() if item == "-" else tuple(int(x) for x in item.split(",")))
    except ValueError as exc:
        raise ValidationError(f"bad junta spec {text!r}") from exc
    return coords, tuple(traces)


def format_junta(coords: Sequence[int], traces: Sequence[Sequence[int]]) -> str:
    body = ";".join(",".join(map(str, t)) if t else "-" for t in traces)
    return ",".join(map(str, coords)) + ":" + body


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    k: int
    tester: str
    generator: str
    trials: int
    seed: int
    eps: Fraction | None = None
    eps1: Fraction | None = None
    eps2: Fraction | None = None
    m: int | None = None
    r: int = 2
    j: int = 1
    c: Fraction | None = None
    center: int = 1
    p: Fraction | None = None
    family: str | None = None
    junta: str | None = None
    dedupe: bool = False
    validate: bool = False

    def __post_init__(self) -> None:
        for name in ("eps", "eps1", "eps2", "c", "p"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, as_fraction(value))
        if self.tester not in TESTERS:
            raise ValidationError(f"unknown tester {self.tester!r}; expected one of {TESTERS}")
        if self.generator not in GENERATORS:
            raise ValidationError(
                f"unknown generator {self.generator!r}; expected one of {GENERATORS}"
            )
        if self.generator != "file":
            _check_family_params(self.n, self.k)
        elif not self.family:
            raise ValidationError("generator 'file' needs a family path")
        if self.trials < 1:
            raise ValidationError(f"trials must be >= 1, got {self.trials}")
        if not 0 <= self.seed < 2**64:
            raise ValidationError(f"seed must fit in 64 unsigned bits, got {self.seed}")
        if self.m is not None and self.m < 0:
            raise ValidationError(f"m must be >= 0, got {self.m}")
        if self.generator == "dno" and self.eps is None:
            raise ValidationError("generator 'dno' needs eps")
        if self.generator == "junta" and self.junta is not None:
            parse_junta(self.junta)
        if self.p is not None and not 0 <= self.p <= 1:
            raise ValidationError(f"p must lie in [0, 1], got {self.p}")

    @property
    def tester_eps2(self) -> Fraction:
        e2 = self.eps2 if self.eps2 is not None else self.eps
        if e2 is None:
            raise ValidationError(f"tester {self.tester!r} needs eps2 (or eps)")
        return e2

    def sample_size(self) -> int:
        """Resolved per-trial sample count: explicit ``m`` or the tester's formula."""
        if self.m is not None:
            return self.m
        if self.tester == "junta":
            return junta_sample_size(self.tester_eps2, self.j, self.n)
        if self.tester == "density":
            if self.c is None:
                return density_sample_size(self.tester_eps2)
            return density_sample_size(self.tester_eps2, self.c)
        if self.eps is None:
            raise ValidationError(f"tester {self.tester!r} needs eps or m")
        c = 1 if self.c is None else self.c
        if self.tester == "canonical":
            return canonical_sample_size(self.r, self.eps, c, self.k)
        return disjoint_pair_sample_size(self.eps, c)

    def query_budget(self) -> int:
        m = self.sample_size()
        return 2 * m if self.tester == "disjoint_pair" else m


@dataclass(frozen=True)
class InstanceValidation:
    """Distance evidence for one instance.

    ``method`` is ``"exact"`` (``distance`` is the true distance) or
    ``"matching"`` (``distance`` is a planted-matching lower bound).
    """

    distance: int
    far: bool
    method: str = "exact"

    @property
    def classification(self) -> str:
        return "far" if self.far else "close"


def validate_instance(
    family: ExplicitFamily, eps, max_edges: int | None = DEFAULT_MAX_EDGES
) -> InstanceValidation:
    """Exact distance and whether it exceeds ``eps * C(n, k)``.

    Raises :class:`BudgetExceeded` when the instance is too large.
    """
    d = exact_distance(family, max_edges)
    return InstanceValidation(d, exceeds(d, as_fraction(eps), family.total))


def certify_instance(
    family: ExplicitFamily,
    eps,
    planted: Sequence[tuple[int, int]] | None = None,
    max_edges: int | None = DEFAULT_MAX_EDGES,
) -> InstanceValidation | None:
    """Exact validation, falling back to the planted matching when over budget.

    A matching certificate only ever proves farness; if it does not, or no
    matching is known, the instance is uncertified and ``None`` is returned.
    """
    try:
        return validate_instance(family, eps, max_edges)
    except BudgetExceeded:
        if planted is None:
            return None
    lower = matching_certificate(family, planted)
    if exceeds(lower, as_fraction(eps), family.total):
        return InstanceValidation(lower, True, "matching")
    return None


def wilson_interval(successes: int, trials: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValidationError("wilson interval needs at least one trial")
    if not 0 <= successes <= trials:
        raise ValidationError(f"successes {successes} outside [0, {trials}]")
    p = successes / trials
    z2 = z * z
    denom = 1 + z2 / trials
    centre = (p + z2 / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return lo, hi


@dataclass
class TrialStats:
    config: ExperimentConfig
    trials: int
    rejections: int
    acceptances: int
    rejection_rate: Fraction
    wilson: tuple[float, float]
    mean_queries: Fraction
    budget: int
    validated_distance: int | None = None
    certification: str | None = None
    certified_far: bool | None = None
    elapsed: float = field(default=0.0, compare=False)

    @property
    def acceptance_rate(self) -> Fraction:
        return 1 - self.rejection_rate


# -- trial execution ---------------------------------------------------------------


class _Context:
    """Per-process state rebuilt deterministically from the config."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.shared: ExplicitFamily | None = None
        self.matching: list[tuple[int, int]] | None = None
        if cfg.generator in SHARED_GENERATORS:
            self.shared = _shared_instance(cfg)
        elif cfg.generator == "dno":
            self.matching = kneser_matching_ranks(
                cfg.n, cfg.k, dno_size(cfg.n, cfg.k, cfg.eps), substream(cfg.seed, 2)
            )
        self.m = cfg.sample_size()

    def instance(self, t: int) -> tuple[ExplicitFamily, list[tuple[int, int]] | None]:
        cfg = self.cfg
        if self.shared is not None:
            return self.shared, None
        rng = substream(cfg.seed, 1, t)
        if cfg.generator == "dno":
            return sample_dno(cfg.n, cfg.k, cfg.eps, rng, self.matching)
        p = Fraction(1, 2) if cfg.p is None else cfg.p
        return random_family(cfg.n, cfg.k, float(p), rng), None

    def run_one(self, t: int):
        cfg = self.cfg
        family, planted = self.instance(t)
        oracle = FamilyOracle.of(family)
        seed = substream_seed(cfg.seed, 0, t)
        n, k = family.n, family.k
        if cfg.tester == "canonical":
            report = canonical_tester(oracle, n, k, self.m, seed, dedupe=cfg.dedupe)
        elif cfg.tester == "disjoint_pair":
            report = disjoint_pair_tester(oracle, n, k, self.m, seed)
        elif cfg.tester == "density":
            report = density_tester(oracle, n, k, cfg.tester_eps2, self.m, seed)
        else:
            eps1 = Fraction(0) if cfg.eps1 is None else cfg.eps1
            report = junta_tester(oracle, n, k, eps1, cfg.tester_eps2, cfg.j, self.m, seed)
        cert = None
        if cfg.validate and self.shared is None:
            cert = _certify(cfg, family, planted)
        return report.rejected, report.queries_used, cert


def _shared_instance(cfg: ExperimentConfig) -> ExplicitFamily:
    if cfg.generator == "star":
        return star_family(cfg.n, cfg.k, cfg.center)
    if cfg.generator == "full":
        return ExplicitFamily.full(cfg.n, cfg.k)
    if cfg.generator == "junta":
        coords, traces = parse_junta(cfg.junta) if cfg.junta else ((1,), ((1,),))
        return junta_family(cfg.n, cfg.k, Junta(coords, traces))
    family = read_family(cfg.family)
    if (family.n, family.k) != (cfg.n, cfg.k):
        raise ValidationError(
            f"{cfg.family}: family is over ({family.n}, {family.k}), config says ({cfg.n}, {cfg.k})"
        )
    return family


def _certify(cfg: ExperimentConfig, family: ExplicitFamily, planted) -> InstanceValidation | None:
    eps = cfg.eps if cfg.eps is not None else cfg.eps2
    if eps is None:
        raise ValidationError("validation needs eps")
    return certify_instance(family, eps, planted)


def _run_chunk(cfg: ExperimentConfig, indices: Sequence[int]):
    ctx = _Context(cfg)
    return [ctx.run_one(t) for t in indices]


def _aggregate_certs(certs) -> tuple[int | None, str | None, bool | None]:
    if any(c is None for c in certs):
        return None, "uncertified", None
    methods = {c.method for c in certs}
    label = "exact" if methods == {"exact"} else "matching"
    return min(c.distance for c in certs), label, all(c.far for c in certs)


def run_trials(cfg: ExperimentConfig, workers: int = 1) -> TrialStats:
    """Run ``cfg.trials`` independent trials and aggregate them.

    ``workers > 1`` spreads trials over processes; results are identical to
    the serial run.
    """
    start = time.perf_counter()
    ctx = _Context(cfg)
    indices = range(cfg.trials)
    if workers <= 1 or cfg.trials < 2:
        results = [ctx.run_one(t) for t in indices]
    else:
        chunks = [list(indices[w::workers]) for w in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, [cfg] * len(chunks), chunks))
        by_trial = {}
        for chunk, part in zip(chunks, parts):
            by_trial.update(zip(chunk, part))
        results = [by_trial[t] for t in indices]

    rejections = sum(1 for rej, _, _ in results if rej)
    queries = sum(q for _, q, _ in results)

    distance = label = far = None
    if cfg.validate:
        if ctx.shared is not None:
            certs = [_certify(cfg, ctx.shared, None)]
        else:
            certs = [c for _, _, c in results]
        distance, label, far = _aggregate_certs(certs)

    return TrialStats(
        config=cfg,
        trials=cfg.trials,
        rejections=rejections,
        acceptances=cfg.trials - rejections,
        rejection_rate=Fraction(rejections, cfg.trials),
        wilson=wilson_interval(rejections, cfg.trials),
        mean_queries=Fraction(queries, cfg.trials),
        budget=ctx.m if cfg.tester != "disjoint_pair" else 2 * ctx.m,
        validated_distance=distance,
        certification=label,
        certified_far=far,
        elapsed=time.perf_counter() - start,
    )


def run_grid(cfg: ExperimentConfig, eps_values: Sequence, workers: int = 1) -> list[TrialStats]:
    """One run per eps value, ordered by increasing eps.

    Every run reuses the master seed, so points differ only in eps.
    """
    values = sorted({as_fraction(e) for e in eps_values})
    return [run_trials(replace(cfg, eps=e), workers) for e in values]


# -- reports ------------------------------------------------------------------------------

# (column, kind); kinds: int, str, bool, frac, float
_CONFIG_COLUMNS = [
    ("tester", "str"),
    ("generator", "str"),
    ("n", "int"),
    ("k", "int"),
    ("eps", "frac"),
    ("eps1", "frac"),
    ("eps2", "frac"),
    ("m", "int"),
    ("r", "int"),
    ("j", "int"),
    ("c", "frac"),
    ("center", "int"),
    ("p", "frac"),
    ("family", "str"),
    ("junta", "str"),
    ("dedupe", "bool"),
    ("validate", "bool"),
    ("seed", "int"),
]
_STATS_COLUMNS = [
    ("trials", "int"),
    ("rejections", "int"),
    ("acceptances", "int"),
    ("rejection_rate", "frac"),
    ("wilson_lo", "float"),
    ("wilson_hi", "float"),
    ("mean_queries", "frac"),
    ("budget", "int"),
    ("validated_distance", "int"),
    ("certification", "str"),
    ("certified_far", "bool"),
    ("elapsed_s", "float"),
]
TIMING_COLUMNS = frozenset({"elapsed_s"})


def _columns() -> list[str]:
    out = []
    for name, kind in _CONFIG_COLUMNS + _STATS_COLUMNS:
        out.append(name)
        if kind == "frac":
            out += [f"{name}_num", f"{name}_den"]
    return out


def _stats_values(stats: TrialStats) -> dict:
    return {
        "trials": stats.trials,
        "rejections": stats.rejections,
        "acceptances": stats.acceptances,
        "rejection_rate": stats.rejection_rate,
        "wilson_lo": stats.wilson[0],
        "wilson_hi": stats.wilson[1],
        "mean_queries": stats.mean_queries,
        "budget": stats.budget,
        "validated_distance": stats.validated_distance,
        "certification": stats.certification,
        "certified_far": stats.certified_far,
        "elapsed_s": stats.elapsed,
    }


def stats_to_row(stats: TrialStats) -> dict:
    """Flat, ordered record; rationals carry a 6-digit decimal and num/den."""
    values = {name: getattr(stats.config, name) for name, _ in _CONFIG_COLUMNS}
    values.update(_stats_values(stats))
    row: dict = {}
    for name, kind in _CONFIG_COLUMNS + _STATS_COLUMNS:
        v = values[name]
        if kind == "frac":
            row[name] = None if v is None else fmt_decimal(v)
            row[f"{name}_num"] = None if v is None else v.numerator
            row[f"{name}_den"] = None if v is None else v.denominator
        else:
            row[name] = v
    return row


def _decode(kind: str, value):
    if value is None or value == "":
        return None
    if kind == "int":
        return int(value)
    if kind == "float":
        return float(value)
    if kind == "bool":
        return value if isinstance(value, bool) else value == "true"
    return str(value)


def row_to_stats(row: dict) -> TrialStats:
    def get(name: str, kind: str):
        if kind == "frac":
            num, den = row.get(f"{name}_num"), row.get(f"{name}_den")
            if num is None or num == "":
                return None
            return Fraction(int(num), int(den))
        return _decode(kind, row.get(name))

    cfg_kwargs = {name: get(name, kind) for name, kind in _CONFIG_COLUMNS}
    for name in ("r", "j", "center"):
        if cfg_kwargs[name] is None:
            cfg_kwargs.pop(name)
    for name in ("dedupe", "validate"):
        cfg_kwargs[name] = bool(cfg_kwargs[name])
    cfg_kwargs["trials"] = get("trials", "int")
    cfg = ExperimentConfig(**cfg_kwargs)
    s = {name: get(name, kind) for name, kind in _STATS_COLUMNS}
    return TrialStats(
        config=cfg,
        trials=s["trials"],
        rejections=s["rejections"],
        acceptances=s["acceptances"],
        rejection_rate=s["rejection_rate"],
        wilson=(s["wilson_lo"], s["wilson_hi"]),
        mean_queries=s["mean_queries"],
        budget=s["budget"],
        validated_distance=s["validated_distance"],
        certification=s["certification"],
        certified_far=s["certified_far"],
        elapsed=s["elapsed_s"] or 0.0,
    )


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_report(stats: TrialStats | Sequence[TrialStats], fmt: str) -> str:
    rows = [stats_to_row(s) for s in ([stats] if isinstance(stats, TrialStats) else stats)]
    if fmt == "json":
        return json.dumps({"rows": rows}, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        cols = _columns()
        writer.writerow(cols)
        for row in rows:
            writer.writerow([_csv_cell(row[c]) for c in cols])
        return buf.getvalue()
    raise ValidationError(f"unknown report format {fmt!r}; expected csv or json")


def emit_report(
    stats: TrialStats | Sequence[TrialStats], fmt: str, path: str | os.PathLike | None
) -> str:
    """Render and write the report (``path=None`` or ``"-"`` means no file)."""
    text = render_report(stats, fmt)
    if path is not None and str(path) != "-":
        try:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(exc.errno, f"cannot write report: {exc.strerror}", str(path)) from exc
    return text


def parse_report(text: str, fmt: str) -> list[TrialStats]:
    if fmt == "json":
        rows = json.loads(text)["rows"]
    elif fmt == "csv":
        rows = list(csv.DictReader(io.StringIO(text)))
    else:
        raise ValidationError(f"unknown report format {fmt!r}; expected csv or json")
    return [row_to_stats(r) for r in rows]


def load_report(path: str | os.PathLike) -> list[TrialStats]:
    fmt = "json" if str(path).endswith(".json") else "csv"
    with open(path, encoding="utf-8") as fh:
        return parse_report(fh.read(), fmt)

