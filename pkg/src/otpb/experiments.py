"""Reproducible data tables and protocol runs, written as CSV.

Every experiment is fully determined by its name, parameter overrides and
seed.  The CSV starts with one ``#`` provenance line (experiment, config
hash, seed), then a header row, then data rows with floats written via
``repr`` so that reruns are byte-identical.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .adversary import BitDensities, NumericalFailure, bayes_error_prob, mutual_information_table, renyi_entropy_per_bit
from .noise import BasisGrid, ChannelParams, detector_counts
from .pa import eve_bound_corollary5, eve_bound_corollary5_log2, eve_entropy_gap, eve_entropy_gap_log2
from .protocol import ProtocolError, SessionConfig, export_key, run_session
from .stokes import extrema_table
from .transport import TransportError, make_inproc_pair, make_stream_pair, unpack_phases

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


class ExperimentError(Exception):
    exit_code = EXIT_USAGE


class SpecError(ExperimentError):
    """Unknown experiment, unknown parameter, or a value that fails validation."""

    exit_code = EXIT_USAGE


class OutputError(ExperimentError):
    """Output could not be written, or the protocol's channel failed."""

    exit_code = EXIT_IO


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, ExperimentError):
        return exc.exit_code
    if isinstance(exc, (NumericalFailure, ArithmeticError)):
        return EXIT_NUMERIC
    if isinstance(exc, (OSError, ProtocolError)):
        return EXIT_IO
    if isinstance(exc, ValueError):
        return EXIT_USAGE
    return 1


# --- parameter schema --------------------------------------------------------

@dataclass(frozen=True)
class Param:
    kind: type
    default: object
    doc: str


_SESSION_PARAMS = {
    "n_mean": Param(float, 100.0, "mean photon number <n>"),
    "M": Param(int, 256, "number of bases (power of two)"),
    "s": Param(int, 64, "bits sent per round"),
    "lambda": Param(int, 8, "security parameter"),
    "rounds": Param(int, 100, "protocol rounds"),
    "t_mode": Param(str, "rate", "leak estimate: rate = s*t_bit, literal = s*(1-P_e)"),
    "noise_scale": Param(float, 1.0, "phase variance multiplier"),
    "transport": Param(str, "inproc", "inproc or stream (socketpair)"),
}

SCHEMAS: dict[str, dict[str, Param]] = {
    "fig5-leak": {
        "n_mean": Param(float, 1000.0, "mean photon number <n>"),
        "m_min": Param(int, 3, "smallest log2 M"),
        "m_max": Param(int, 12, "largest log2 M"),
    },
    "fig6-currents": {
        "alpha": Param(float, 10.0, "coherent amplitude |alpha|"),
        "delta": Param(float, math.pi / 2, "interferometer phase Delta"),
        "points": Param(int, 360, "phase samples on [0, 2 pi)"),
        "gain": Param(float, 1.0, "detector gain"),
        "efficiency": Param(float, 1.0, "detector efficiency"),
    },
    "fig7-renyi": {
        "n_mean": Param(float, 100.0, "mean photon number <n>"),
        "m_min": Param(int, 1, "smallest log2 M"),
        "m_max": Param(int, 12, "largest log2 M"),
    },
    "fig8-gap": {
        "r_min": Param(int, 1, "smallest hashed-output length r"),
        "r_max": Param(int, 32, "largest r"),
        "n_min": Param(int, 1, "smallest input length n"),
        "n_max": Param(int, 32, "largest n"),
    },
    "fig9-bound": {
        "lambda_min": Param(int, 0, "smallest security parameter"),
        "lambda_max": Param(int, 64, "largest security parameter"),
    },
    "fig10-mi": {
        "n_mean": Param(float, 100.0, "mean photon number <n>"),
        "M": Param(int, 100, "number of bases"),
        "k": Param(int, 20, "legitimate basis"),
        "entropy": Param(str, "uniform", "normaliser: uniform (log2 M) or per-symbol ((1/M) log2 M)"),
    },
    "fig12-14-extrema": {
        "n_mean": Param(float, 700.0, "mean photon number <n>"),
        "M": Param(int, 1000, "number of bases"),
        "k_step": Param(int, 1, "stride through k = 0..M-1"),
    },
    "session": dict(_SESSION_PARAMS),
    "eve-capture": {
        **_SESSION_PARAMS,
        "n_mean": Param(float, 1000.0, "mean photon number <n>"),
        "M": Param(int, 1024, "number of bases (power of two)"),
        "s": Param(int, 1000, "bits sent per round"),
        "tap": Param(int, 1, "1 to attach the eavesdropper tap, 0 to run without it"),
        "independent_tap": Param(int, 0, "1 gives the tap its own noise draw"),
    },
}

EXPERIMENTS = tuple(SCHEMAS)


def _convert(name: str, key: str, raw, p: Param):
    if isinstance(raw, p.kind) and not isinstance(raw, bool):
        return raw
    try:
        if p.kind is int:
            value = float(raw)
            if not value.is_integer():
                raise ValueError
            return int(value)
        return p.kind(raw)
    except (TypeError, ValueError):
        raise SpecError(f"{name}: bad value for {key}: {raw!r} (expected {p.kind.__name__})") from None


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment run.

    ``overrides`` maps parameter names to values (strings are converted per
    the experiment's schema); ``out`` is the CSV path.
    """

    name: str
    overrides: dict = field(default_factory=dict)
    out: Path | str = "out.csv"
    seed: int = 1

    def resolved(self) -> dict:
        """Defaults merged with the converted overrides."""
        if self.name not in SCHEMAS:
            raise SpecError(f"unknown experiment {self.name!r}; choose from {', '.join(EXPERIMENTS)}")
        schema = SCHEMAS[self.name]
        values = {k: p.default for k, p in schema.items()}
        for key, raw in self.overrides.items():
            if key not in schema:
                raise SpecError(f"{self.name}: unknown parameter {key!r}; expected one of {', '.join(schema)}")
            values[key] = _convert(self.name, key, raw, schema[key])
        return values

    def config_hash(self) -> str:
        text = json.dumps({"name": self.name, "params": self.resolved(), "seed": self.seed},
                          sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    columns: list[str]
    rows: list[tuple]
    files: list[Path]
    summary: str
    extra: dict = field(default_factory=dict)


# --- CSV -----------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path, spec: ExperimentSpec, columns, rows):
    buf = io.StringIO()
    buf.write(f"# experiment={spec.name} config_hash={spec.config_hash()} seed={spec.seed}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    try:
        Path(path).write_text(buf.getvalue())
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def read_csv(path) -> tuple[dict, list[str], list[dict]]:
    """Parse a CSV written by :func:`write_csv`: (provenance, header, rows)."""
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first.startswith("#"):
            raise ValueError("missing provenance line")
        prov = dict(item.split("=", 1) for item in first[1:].split())
        reader = csv.DictReader(fh)
        rows = list(reader)
        return prov, list(reader.fieldnames or []), rows


# --- figure tables ---------------------------------------------------------

def _dyadic(p) -> list[int]:
    if p["m_min"] < 1 or p["m_max"] < p["m_min"]:
        raise SpecError("need 1 <= m_min <= m_max")
    return [2 ** m for m in range(p["m_min"], p["m_max"] + 1)]


def _fig5(p, seed):
    rows = []
    for M in _dyadic(p):
        pe = bayes_error_prob(ChannelParams(p["n_mean"], M))
        t = 0.5 - pe
        rows.append((M, pe, t, math.log10(t) if t > 0 else -math.inf))
    return ["M", "p_e", "t_bit", "log10_t_bit"], rows, "log10_t_bit"


def _fig6(p, seed):
    if p["points"] < 2:
        raise SpecError("points must be >= 2")
    phi = 2 * math.pi * np.arange(p["points"]) / p["points"]
    dc = detector_counts(phi, p["delta"], p["alpha"] ** 2, p["gain"], p["efficiency"])
    rows = list(zip(phi.tolist(), dc.n_e.tolist(), dc.n_f.tolist(), dc.delta_i.tolist()))
    return ["phi", "i_e", "i_f", "delta_i"], rows, "delta_i"


def _fig7(p, seed):
    rows = []
    for M in _dyadic(p):
        pe = bayes_error_prob(ChannelParams(p["n_mean"], M))
        rows.append((M, pe, renyi_entropy_per_bit(pe)))
    return ["M", "p_e", "renyi_per_bit"], rows, "renyi_per_bit"


def _fig8(p, seed):
    if not (0 <= p["r_min"] <= p["r_max"] and 1 <= p["n_min"] <= p["n_max"]):
        raise SpecError("need 0 <= r_min <= r_max and 1 <= n_min <= n_max")
    rows = [(r, n, eve_entropy_gap(r, n), eve_entropy_gap_log2(r, n))
            for r in range(p["r_min"], p["r_max"] + 1)
            for n in range(p["n_min"], p["n_max"] + 1)]
    return ["r", "n", "gap", "log2_gap"], rows, "log2_gap"


def _fig9(p, seed):
    if not 0 <= p["lambda_min"] <= p["lambda_max"]:
        raise SpecError("need 0 <= lambda_min <= lambda_max")
    rows = [(lam, eve_bound_corollary5(lam), eve_bound_corollary5_log2(lam))
            for lam in range(p["lambda_min"], p["lambda_max"] + 1)]
    return ["lambda", "bound", "log2_bound"], rows, "log2_bound"


def _fig10(p, seed):
    grid = BasisGrid(p["n_mean"], p["M"])
    table = mutual_information_table(p["k"], grid, entropy=p["entropy"])
    rows = list(zip(table.k_e.tolist(), table.p_unnorm.tolist(), table.p_norm.tolist(),
                    table.mutual_info.tolist(), table.ratio.tolist()))
    return ["k_e", "p_unnorm", "p_norm", "mutual_info", "ratio"], rows, "ratio"


def _fig12(p, seed):
    if p["k_step"] < 1:
        raise SpecError("k_step must be >= 1")
    grid = BasisGrid(p["n_mean"], p["M"])
    table = extrema_table(grid, range(0, grid.num_bases, p["k_step"]))
    cols = ["k", "tan_phi", "tan_max", "tan_min", "delta_k"]
    return cols, [tuple(r[c] for c in cols) for r in table], "delta_k"


_TABLES: dict[str, Callable] = {
    "fig5-leak": _fig5, "fig6-currents": _fig6, "fig7-renyi": _fig7, "fig8-gap": _fig8,
    "fig9-bound": _fig9, "fig10-mi": _fig10, "fig12-14-extrema": _fig12,
}


def _summary(name, rows, columns, col, out) -> str:
    if not rows:
        return f"{name}: 0 rows -> {out}"
    vals = [r[columns.index(col)] for r in rows]
    return f"{name}: {len(rows)} rows -> {out}; {col} min={min(vals):.6g} max={max(vals):.6g}"


# --- sessions ----------------------------------------------------------------

def _session_config(p, seed) -> SessionConfig:
    keys = ("n_mean", "M", "s", "lambda", "rounds", "t_mode", "noise_scale")
    try:
        return SessionConfig.from_mapping({**{k: p[k] for k in keys}, "seed": seed})
    except ValueError as exc:
        raise SpecError(f"invalid session parameters: {exc}") from exc


def _make_link(p, *, tap=False, capture_path=None, independent_tap=False):
    if p["transport"] == "inproc":
        return make_inproc_pair(tap=tap, capture_path=capture_path, independent_tap=independent_tap)
    if p["transport"] == "stream":
        return make_stream_pair(tap=tap, capture_path=capture_path, independent_tap=independent_tap)
    raise SpecError(f"transport must be 'inproc' or 'stream', got {p['transport']!r}")


def _run(config, link):
    try:
        return run_session(config, link)
    except (ProtocolError, TransportError) as exc:
        raise OutputError(f"session failed: {exc}") from exc
    finally:
        link.close()


def _session(spec: ExperimentSpec, p) -> ExperimentResult:
    config = _session_config(p, spec.seed)
    out = Path(spec.out)
    link = _make_link(p)
    result = _run(config, link)
    key_path = out.with_suffix(".key")
    try:
        manifest = export_key(result.alice, key_path, config)
    except OSError as exc:
        raise OutputError(f"cannot write {key_path}: {exc}") from exc
    audit = result.audit
    columns = ["run_index", "key_bits", "equal"]
    rows = [(r, k, eq) for r, k, eq in audit.rounds]
    write_csv(out, spec, columns, rows)
    summary = (f"session: {len(rows)} rows -> {out}; key {audit.key_lengths[0]} bits -> {key_path}; "
               + audit.summary())
    return ExperimentResult(spec, columns, rows, [out, key_path, manifest], summary,
                            {"audit": audit, "session": result})


@dataclass(frozen=True)
class EveReport:
    bits: int
    correct: int
    accuracy: float
    expected: float
    std_error: float
    z: float

    @property
    def consistent(self) -> bool:
        """Empirical accuracy within 3 binomial standard errors of ``1 - P_e``."""
        if self.std_error == 0.0:
            return self.correct == round(self.expected * self.bits)
        return abs(self.z) <= 3.0


def capture_eve(spec: ExperimentSpec) -> ExperimentResult:
    """Run a tapped session and let Eve guess every bit from the tap alone.

    Eve applies the Bayes decision of :class:`~otpb.adversary.BitDensities`
    (no basis knowledge) to each captured phase; her guesses are scored
    against Alice's transmitted bits.  All frames go to ``<out>.frames``.
    """
    p = spec.resolved() if spec.name == "eve-capture" else ExperimentSpec(
        "eve-capture", spec.overrides, spec.out, spec.seed).resolved()
    if not p["tap"]:
        raise SpecError("tap required: capture_eve needs a session with the eavesdropper tap enabled")
    config = _session_config(p, spec.seed)
    out = Path(spec.out)
    capture_path = out.with_name(out.name + ".frames")
    try:
        link = _make_link(p, tap=True, capture_path=capture_path, independent_tap=bool(p["independent_tap"]))
    except OSError as exc:
        raise OutputError(f"cannot write {capture_path}: {exc}") from exc
    result = _run(config, link)
    frames = {f.run_index: unpack_phases(f.payload) for f in link.tap.drain()}
    densities = BitDensities(config.params)
    rows = []
    for rec in result.alice.ledger:
        guess = densities.decide(frames[rec.run_index])
        correct = int(np.count_nonzero(guess == rec.channel_bits))
        rows.append((rec.run_index, rec.channel_bits.size, correct, correct / rec.channel_bits.size))
    bits = sum(r[1] for r in rows)
    correct = sum(r[2] for r in rows)
    expected = 1.0 - bayes_error_prob(config.params)
    se = math.sqrt(expected * (1 - expected) / bits) if bits else 0.0
    acc = correct / bits if bits else math.nan
    z = (acc - expected) / se if se > 0 else 0.0
    report = EveReport(bits, correct, acc, expected, se, z)
    columns = ["run_index", "bits", "correct", "accuracy"]
    write_csv(out, spec, columns, rows)
    summary = (f"eve-capture: {len(rows)} rows -> {out}; accuracy {acc:.6f} vs 1-P_e {expected:.6f} "
               f"(z={z:+.2f}, {'consistent' if report.consistent else 'INCONSISTENT'})")
    return ExperimentResult(spec, columns, rows, [out, capture_path], summary,
                            {"report": report, "session": result})


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Run ``spec`` and write its CSV (plus key/capture files for sessions)."""
    p = spec.resolved()
    if spec.name == "session":
        return _session(spec, p)
    if spec.name == "eve-capture":
        return capture_eve(spec)
    try:
        columns, rows, col = _TABLES[spec.name](p, spec.seed)
    except (NumericalFailure, ExperimentError):
        raise
    except ValueError as exc:
        raise SpecError(f"{spec.name}: {exc}") from exc
    write_csv(spec.out, spec, columns, rows)
    return ExperimentResult(spec, columns, rows, [Path(spec.out)],
                            _summary(spec.name, rows, columns, col, spec.out))
