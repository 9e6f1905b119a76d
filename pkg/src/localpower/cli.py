"""Experiment harness: ``localpower sweep`` and ``localpower summarize``.

Configuration is a flat ``key = value`` file (lists comma-separated); every
key can also be given as ``--key value`` and the flag wins.  Each sweep cell
``(m, schedule, seed)`` writes ``traces/<cell>.csv`` plus a
``traces/<cell>.meta.json`` sidecar, and the whole sweep ends with
``summary.json`` and ``summary.txt``.
"""
import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import data, engine, schedules
from .diagnostics import DEFAULT_EPS, DEFAULT_TAU, error_floor_scale
from .errors import ConfigError, InvalidParameter, LocalPowerError, ParseError, SchemaMismatch
from .linalg_core import condition_number, gram, reference_topk

log = logging.getLogger("localpower")

TRACE_HEADER = ["t", "comms", "words_sent", "dist", "H_norm", "W_norm", "G_norm", "eps0", "noise_ok"]

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2

_BOOL_KEYS = {"diagnostics", "record_every_step", "on_the_fly_gram"}
_KEYS = [
    "dataset", "expected_dim", "synthetic", "n", "d", "ratio", "sigmas", "data_seed",
    "k", "r", "T", "schedules", "m_values", "seeds", "eps_targets", "output_dir",
    "diagnostics", "record_every_step", "on_the_fly_gram", "eps", "tau",
]


@dataclass
class ExperimentConfig:
    k: int
    r: int
    T: int
    schedules: list
    m_values: list
    seeds: list
    output_dir: Path
    dataset: str = None
    expected_dim: int = None
    synthetic: str = None
    n: int = None
    d: int = None
    ratio: float = 0.8
    sigmas: list = None
    data_seed: int = 0
    eps_targets: list = field(default_factory=list)
    diagnostics: bool = False
    record_every_step: bool = False
    on_the_fly_gram: bool = False
    eps: float = DEFAULT_EPS
    tau: float = DEFAULT_TAU

    def validate(self):
        if not (self.schedules and self.m_values and self.seeds):
            raise ConfigError("schedules, m_values and seeds must all be nonempty")
        if not 1 <= self.k <= self.r:
            raise ConfigError(f"need 1 <= k <= r, got k={self.k} r={self.r}")
        if self.T < 1:
            raise ConfigError("T must be >= 1")
        if any(not 0 < e <= 1 for e in self.eps_targets):
            raise ConfigError("eps_targets must lie in (0, 1]")
        if any(m < 1 for m in self.m_values):
            raise ConfigError("m_values must be >= 1")
        if (self.dataset is None) == (self.synthetic is None):
            raise ConfigError("give exactly one of dataset= or synthetic=")
        for desc in self.schedules:
            schedules.parse_schedule(desc, self.T)

    @property
    def source_name(self):
        if self.dataset is not None:
            return Path(self.dataset).name
        if self.synthetic == "sigmas":
            return f"synthetic-sigmas-n{self.n}-s{self.data_seed}"
        return f"synthetic-{self.synthetic}{self.ratio}-n{self.n}-d{self.d}-s{self.data_seed}"


def read_config_file(path):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        out[key.strip()] = value.strip()
    return out


def _split_schedules(text):
    # "steps:3,5,10, every:4" -> the bare integers belong to the preceding steps: entry
    items = []
    for tok in (t.strip() for t in text.split(",")):
        if not tok:
            continue
        if tok.isdigit() and items and items[-1].lower().startswith("steps:"):
            items[-1] += "," + tok
        else:
            items.append(tok)
    return items


def _to_bool(value):
    v = str(value).strip().lower()
    if v in {"1", "true", "yes", "on"}:
        return True
    if v in {"0", "false", "no", "off", ""}:
        return False
    raise ConfigError(f"not a boolean: {value!r}")


def build_config(raw):
    """Turn string key/values into a validated :class:`ExperimentConfig`."""
    unknown = set(raw) - set(_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    ints = {"expected_dim", "n", "d", "data_seed", "k", "r", "T"}
    floats = {"ratio", "eps", "tau"}
    kw = {}
    try:
        for key, value in raw.items():
            if value is None:
                continue
            if key == "schedules":
                kw[key] = _split_schedules(value)
            elif key in ("m_values", "seeds"):
                kw[key] = [int(x) for x in value.split(",") if x.strip()]
            elif key in ("eps_targets", "sigmas"):
                kw[key] = [float(x) for x in value.split(",") if x.strip()]
            elif key in ints:
                kw[key] = int(value)
            elif key in floats:
                kw[key] = float(value)
            elif key in _BOOL_KEYS:
                kw[key] = _to_bool(value)
            elif key == "output_dir":
                kw[key] = Path(value)
            else:
                kw[key] = value
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    kw.setdefault("output_dir", Path("localpower-out"))
    if "sigmas" in kw and "synthetic" not in kw:
        kw["synthetic"] = "sigmas"
    missing = [k for k in ("k", "r", "T", "schedules", "m_values", "seeds") if k not in kw]
    if missing:
        raise ConfigError(f"missing required keys: {missing}")
    cfg = ExperimentConfig(**kw)
    cfg.validate()
    return cfg


def load_source(cfg):
    if cfg.dataset is not None:
        path = Path(cfg.dataset)
        if not path.is_file():
            raise ConfigError(f"dataset not found: {path}")
        return data.load_libsvm(path, cfg.expected_dim)
    if cfg.synthetic == "sigmas":
        if not cfg.sigmas:
            raise ConfigError("synthetic=sigmas needs sigmas=")
        n = cfg.n if cfg.n is not None else 10 * len(cfg.sigmas)
        spec = data.SpectrumSpec(tuple(cfg.sigmas), n, cfg.data_seed)
    elif cfg.synthetic == "geometric":
        if cfg.n is None or cfg.d is None:
            raise ConfigError("synthetic=geometric needs n= and d=")
        spec = data.SpectrumSpec(data.geometric_sigmas(cfg.d, cfg.ratio), cfg.n, cfg.data_seed)
    else:
        raise ConfigError(f"unknown synthetic kind {cfg.synthetic!r}")
    return data.synthetic_spectrum(spec)


def matrix_hash(A):
    h = hashlib.sha256()
    h.update(np.asarray(A.shape, dtype=np.int64).tobytes())
    h.update(np.ascontiguousarray(A, dtype=np.float64).tobytes())
    return h.hexdigest()[:16]


def cached_topk(A, k, cache_dir):
    """Top-``k`` eigenpairs of ``gram(A)``, cached by matrix content hash."""
    cache_dir.mkdir(parents=True, exist_ok=True)
    path = cache_dir / f"topk-{matrix_hash(A)}-k{k}.npz"
    if path.exists():
        with np.load(path) as z:
            return z["U_k"], z["sigmas"]
    U_k, sigmas = reference_topk(gram(A), k)
    tmp = path.with_suffix(".tmp.npz")
    np.savez(tmp, U_k=U_k, sigmas=sigmas)
    os.replace(tmp, path)
    return U_k, sigmas


def schedule_slug(desc):
    head, _, arg = desc.strip().partition(":")
    head = head.lower()
    if head == "steps":
        return "steps-" + hashlib.sha256(arg.replace(" ", "").encode()).hexdigest()[:8]
    return f"{head}-{arg}" if arg else head


def cell_id(m, desc, seed):
    return f"m{m}_{schedule_slug(desc)}_s{seed}"


def _fmt(x):
    return "" if x is None else repr(float(x))


def _atomic_write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def trace_csv(trace):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for rec in trace.records:
        nz = rec.noise
        w.writerow([
            rec.t, rec.comms, rec.words_sent, _fmt(rec.dist),
            _fmt(nz.H_norm) if nz else "", _fmt(nz.W_norm) if nz else "",
            _fmt(nz.G_norm) if nz else "", _fmt(nz.epsilon0) if nz else "",
            ("1" if nz.satisfied else "0") if nz else "",
        ])
    return buf.getvalue()


def read_trace(path):
    """Read a trace CSV into a list of dicts with numeric fields."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaMismatch(f"{path}: empty trace") from None
        if header != TRACE_HEADER:
            raise SchemaMismatch(f"{path}: unexpected header {header}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(TRACE_HEADER):
                raise SchemaMismatch(f"{path}:{lineno}: expected {len(TRACE_HEADER)} fields")
            try:
                rows.append({
                    "t": int(row[0]),
                    "comms": int(row[1]),
                    "words_sent": int(row[2]),
                    "dist": float(row[3]),
                    **{k: (float(v) if v else None) for k, v in zip(TRACE_HEADER[4:8], row[4:8])},
                    "noise_ok": None if not row[8] else row[8] == "1",
                })
            except ValueError as exc:
                raise SchemaMismatch(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise SchemaMismatch(f"{path}: no records")
    return rows


def _eps_key(e):
    return repr(float(e))


def summarize(trace_files, eps_targets=()):
    """One summary row per trace; metadata comes from the ``.meta.json`` sidecar when present."""
    if not trace_files:
        raise SchemaMismatch("no trace files given")
    table = []
    for path in map(Path, trace_files):
        rows = read_trace(path)
        meta_path = path.with_suffix(".meta.json")
        meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
        row = {
            "cell": path.stem,
            "final_dist": rows[-1]["dist"],
            "comms_total": rows[-1]["comms"],
            "gap": meta.get("gap"),
            "eta": meta.get("eta"),
            "floor_scale": meta.get("floor_scale"),
        }
        if eps_targets:
            row["comms_to_eps"] = {
                _eps_key(e): next((r["comms"] for r in rows if r["dist"] <= e), None) for e in eps_targets
            }
        table.append(row)
    return table


def format_table(table):
    eps_cols = list(table[0].get("comms_to_eps", {})) if table else []
    header = ["cell", "final_dist", "|I_T|", "gap", "eta", "floor_scale"] + [f"comms@{e}" for e in eps_cols]

    def cell(v):
        if v is None:
            return "-"
        if isinstance(v, float):
            return f"{v:.3e}"
        return str(v)

    body = []
    for row in table:
        vals = [row["cell"], row["final_dist"], row["comms_total"], row["gap"], row["eta"], row["floor_scale"]]
        vals += [row["comms_to_eps"][e] for e in eps_cols]
        body.append([cell(v) for v in vals])
    widths = [max(len(h), *(len(r[i]) for r in body)) if body else len(h) for i, h in enumerate(header)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    lines += ["  ".join(v.ljust(w) for v, w in zip(r, widths)) for r in body]
    return "\n".join(lines) + "\n"


def run_sweep(cfg):
    """Run every ``(m, schedule, seed)`` cell; returns ``(exit_status, summary)``.

    Configuration and input problems raise before anything is written.
    """
    cfg.validate()
    A = load_source(cfg)
    n, d = A.shape
    if cfg.r > d:
        raise ConfigError(f"r={cfg.r} exceeds d={d}")
    if max(cfg.m_values) > n:
        raise ConfigError(f"m={max(cfg.m_values)} exceeds n={n}")
    sched_objs = [(desc, schedules.parse_schedule(desc, cfg.T)) for desc in cfg.schedules]

    out = Path(cfg.output_dir)
    trace_dir = out / "traces"
    U_k, sigmas = cached_topk(A, cfg.k, out / "cache")
    kappa = condition_number(gram(A))

    summary = []
    status = EXIT_OK
    for m in cfg.m_values:
        for seed in cfg.seeds:
            P = data.partition_uniform(A, m, seed)
            eta = data.measured_eta(P)
            for desc, sched in sched_objs:
                cid = cell_id(m, desc, seed)
                entry = {
                    "cell": cid, "dataset": cfg.source_name, "m": m, "schedule": desc, "seed": seed,
                    "k": cfg.k, "r": cfg.r, "T": cfg.T, "gap": schedules.gap(sched), "eta": eta,
                }
                try:
                    rc = engine.RunConfig(
                        cfg.k, cfg.r, cfg.T, sched, seed=seed,
                        record_every_step=cfg.record_every_step, diagnostics=cfg.diagnostics,
                        on_the_fly_gram=cfg.on_the_fly_gram, eps=cfg.eps, tau=cfg.tau,
                    )
                    trace = engine.run(P, rc, U_k, sigmas=sigmas)
                    entry.update(
                        final_dist=trace.final_dist,
                        comms_total=trace.comms_total,
                        comms_to_eps={_eps_key(e): engine.comm_rounds_to_reach(trace, e) for e in cfg.eps_targets},
                        floor_scale=_floor(entry["gap"], kappa, eta),
                        status="ok",
                        trace=f"traces/{cid}.csv",
                    )
                    _atomic_write(trace_dir / f"{cid}.csv", trace_csv(trace))
                    meta = {k: v for k, v in entry.items() if k != "comms_to_eps"}
                    _atomic_write(trace_dir / f"{cid}.meta.json", json.dumps(meta, indent=1, sort_keys=True) + "\n")
                except LocalPowerError as exc:
                    log.error("cell %s failed: %s", cid, exc)
                    entry.update(final_dist=None, comms_total=None,
                                 comms_to_eps={_eps_key(e): None for e in cfg.eps_targets},
                                 floor_scale=None, status="failed", error=str(exc))
                    status = EXIT_RUNTIME
                summary.append(entry)
                log.info("cell %s: %s", cid, entry.get("final_dist"))

    _atomic_write(out / "summary.json", json.dumps(summary, indent=1, sort_keys=True) + "\n")
    done = [trace_dir / f"{e['cell']}.csv" for e in summary if e["status"] == "ok"]
    if done:
        _atomic_write(out / "summary.txt", format_table(summarize(done, cfg.eps_targets)))
    return status, summary


def _floor(Delta, kappa, eta):
    value = error_floor_scale(Delta, kappa, eta)
    return value if math.isfinite(value) else None


def _add_config_flags(p):
    for key in _KEYS:
        p.add_argument(f"--{key}", dest=key, default=None)


def main(argv=None):
    parser = argparse.ArgumentParser(prog="localpower", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sweep", help="run an experiment sweep")
    sp.add_argument("--config", type=Path, help="key = value config file")
    _add_config_flags(sp)

    sm = sub.add_parser("summarize", help="tabulate trace CSVs")
    sm.add_argument("traces", nargs="+", type=Path)
    sm.add_argument("--eps_targets", default="")
    sm.add_argument("--json", type=Path, help="also write the table as JSON here")

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    if args.command == "summarize":
        try:
            eps = [float(x) for x in args.eps_targets.split(",") if x.strip()]
            table = summarize(args.traces, eps)
        except (SchemaMismatch, OSError, ValueError) as exc:
            print(f"localpower: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        sys.stdout.write(format_table(table))
        if args.json:
            _atomic_write(args.json, json.dumps(table, indent=1) + "\n")
        return EXIT_OK

    try:
        raw = read_config_file(args.config) if args.config else {}
        raw.update({k: getattr(args, k) for k in _KEYS if getattr(args, k) is not None})
        cfg = build_config(raw)
        status, _ = run_sweep(cfg)
    except (ConfigError, ParseError, InvalidParameter, OSError) as exc:
        print(f"localpower: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LocalPowerError as exc:
        print(f"localpower: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return status


if __name__ == "__main__":
    sys.exit(main())
