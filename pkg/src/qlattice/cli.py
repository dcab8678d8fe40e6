"""Command-line front end: config parsing, dispatch and report writers.

A run is described by a JSON document::

    {
      "command": "scan",
      "coupling": {"m": 1, "a": 1.0, "S_upper": [[2, 0]], "T": [[1, 0], [1, 0], [1, 0]]},
      "scan": {"k_min": 0.05, "k_max": 20.0},
      "outputs": [{"format": "csv", "path": "bands.csv"}]
    }

``coupling`` may instead hold ``{"preset": {"name": "delta", "params": [2.0]}}``
or, for ``validate`` only, raw ``A`` and ``B`` matrices.  The coupling keys may
also sit at the top level.  Complex numbers are ``[re, im]`` pairs (a bare
number is read as real).

Exit status: 0 success, 1 invalid input or failed validation, 2 I/O
failure, 3 closed-form oracle mismatch.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .asymptotics import AsymptoticsError, classify, compare_asymptotics
from .coupling import (PRESET_NAMES, CouplingError, STCoupling,
                       classify_coupling, preset, st_to_ab, validate_ab)
from .polynomial import NoPolynomialForm, OracleMismatch, oracle_match
from .spectrum import ScanConfig, ScanError, scan_bands

__all__ = [
    "ABPair",
    "CompareOptions",
    "ConfigError",
    "OutputSpec",
    "PresetRef",
    "RunConfig",
    "main",
    "parse_config",
    "run",
    "serialize",
]

COMMANDS = ("validate", "scan", "classify", "compare", "presets")
TABLE_FORMATS = ("json", "csv", "plot-data")
FIGURE_FORMATS = ("png", "pdf", "svg")
FORMATS = TABLE_FORMATS + FIGURE_FORMATS
SUFFIX_FORMATS = {".json": "json", ".csv": "csv", ".dat": "plot-data", ".txt": "plot-data",
                  ".png": "png", ".pdf": "pdf", ".svg": "svg"}
EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_ORACLE = 0, 1, 2, 3

# diagnostics that depend on the environment rather than on the config
_VOLATILE = ("threads", "traces")


class ConfigError(ValueError):
    """Schema violation; the message starts with the offending field."""

    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")
        self.field = where


@dataclass(frozen=True)
class OutputSpec:
    format: str
    path: str


@dataclass(frozen=True)
class PresetRef:
    """Named coupling, resolved lazily so configs round-trip unchanged."""

    name: str
    params: tuple = ()
    a: float = 1.0

    def build(self) -> STCoupling:
        return preset(self.name, self.a, self.params)


@dataclass(frozen=True)
class ABPair:
    """Raw ``(A, B)`` pair, accepted by ``validate`` only."""

    A: tuple
    B: tuple
    a: float = 1.0

    def matrices(self):
        return np.array(self.A, dtype=complex), np.array(self.B, dtype=complex)


@dataclass(frozen=True)
class CompareOptions:
    n_min: int = 20
    n_max: int = 30
    regime: int | None = None


@dataclass(frozen=True)
class RunConfig:
    command: str
    coupling: STCoupling | PresetRef | ABPair | None = None
    scan: ScanConfig | None = None
    outputs: tuple = ()
    compare: CompareOptions = field(default_factory=CompareOptions)
    include_negative: bool = True
    oracle_check: bool = False

    def st_coupling(self) -> STCoupling:
        if isinstance(self.coupling, PresetRef):
            return self.coupling.build()
        if isinstance(self.coupling, STCoupling):
            return self.coupling
        raise ConfigError("coupling", f"command {self.command!r} needs an ST-form coupling or preset")


# ------------------------------------------------------------------ parsing


def _complex(x, where: str) -> complex:
    if isinstance(x, bool):
        raise ConfigError(where, "expected a number or [re, im] pair")
    if isinstance(x, (int, float)):
        z = complex(x)
    elif isinstance(x, (list, tuple)) and len(x) == 2 and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in x):
        z = complex(x[0], x[1])
    else:
        raise ConfigError(where, "expected a number or [re, im] pair")
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ConfigError(where, "non-finite value")
    return z


def _real(x, where: str, positive: bool = False) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigError(where, "expected a number")
    v = float(x)
    if not math.isfinite(v):
        raise ConfigError(where, "non-finite value")
    if positive and v <= 0:
        raise ConfigError(where, "must be positive")
    return v


def _int(x, where: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise ConfigError(where, "expected an integer")
    return int(x)


def _p(where: str) -> str:
    return f"{where}." if where else ""


def _check_keys(d, allowed, where):
    if not isinstance(d, dict):
        raise ConfigError(where, "expected an object")
    extra = sorted(set(d) - set(allowed))
    if extra:
        raise ConfigError(f"{_p(where)}{extra[0]}", "unknown field")


def _parse_coupling(d: dict, where: str):
    _check_keys(d, ("m", "a", "S_upper", "T", "preset", "A", "B"), where)
    a = _real(d.get("a", 1.0), f"{_p(where)}a", positive=True)
    if "preset" in d:
        if any(k in d for k in ("m", "S_upper", "T", "A", "B")):
            raise ConfigError(f"{_p(where)}preset", "cannot be combined with explicit matrices")
        p = d["preset"]
        _check_keys(p, ("name", "params"), f"{_p(where)}preset")
        name = p.get("name")
        if not isinstance(name, str):
            raise ConfigError(f"{_p(where)}preset.name", "expected a string")
        params = p.get("params", [])
        if not isinstance(params, list):
            raise ConfigError(f"{_p(where)}preset.params", "expected a list")
        params = tuple(_real(v, f"{_p(where)}preset.params[{i}]") for i, v in enumerate(params))
        ref = PresetRef(name, params, a)
        try:
            ref.build()
        except CouplingError as exc:
            raise ConfigError(f"{_p(where)}preset", str(exc)) from None
        return ref
    if "A" in d or "B" in d:
        if any(k in d for k in ("m", "S_upper", "T")):
            raise ConfigError(f"{_p(where)}A", "cannot be combined with ST-form fields")
        mats = []
        for key in ("A", "B"):
            rows = d.get(key)
            if not isinstance(rows, list) or len(rows) != 4 or any(
                    not isinstance(r, list) or len(r) != 4 for r in rows):
                raise ConfigError(f"{_p(where)}{key}", "expected a 4x4 matrix")
            mats.append(tuple(tuple(_complex(z, f"{_p(where)}{key}[{i}][{j}]") for j, z in enumerate(r))
                              for i, r in enumerate(rows)))
        return ABPair(mats[0], mats[1], a)
    if "m" not in d:
        raise ConfigError(f"{_p(where)}m", "missing (or give a preset)")
    m = _int(d["m"], f"{_p(where)}m")
    if not 0 <= m <= 4:
        raise ConfigError(f"{_p(where)}m", "m out of range (0..4)")
    su = d.get("S_upper", [])
    if not isinstance(su, list):
        raise ConfigError(f"{_p(where)}S_upper", "expected a list")
    su = [_complex(z, f"{_p(where)}S_upper[{i}]") for i, z in enumerate(su)]
    if len(su) != m * (m + 1) // 2:
        raise ConfigError(f"{_p(where)}S_upper", f"needs {m * (m + 1) // 2} entries for m={m}, got {len(su)}")
    idx = 0
    for i in range(m):
        for j in range(i, m):
            if i == j and su[idx].imag != 0.0:
                raise ConfigError(f"{_p(where)}S_upper[{idx}]",
                                  f"diagonal entry S[{i}][{i}] must be real (S is Hermitian)")
            idx += 1
    tv = d.get("T", [])
    if not isinstance(tv, list):
        raise ConfigError(f"{_p(where)}T", "expected a list")
    if tv and all(isinstance(r, list) and r and isinstance(r[0], list) for r in tv):
        tv = [z for r in tv for z in r]  # nested rows
    tv = [_complex(z, f"{_p(where)}T[{i}]") for i, z in enumerate(tv)]
    need = m * (4 - m)
    if len(tv) != need:
        raise ConfigError(f"{_p(where)}T", f"needs {need} entries (row-major {m}x{4 - m}), got {len(tv)}")
    rows = tuple(tuple(tv[i * (4 - m):(i + 1) * (4 - m)]) for i in range(m))
    try:
        return STCoupling(m, tuple(su), rows, a)
    except CouplingError as exc:
        raise ConfigError(where or "coupling", str(exc)) from None


_SCAN_TYPES = {f.name: f.type for f in fields(ScanConfig)}


def _parse_scan(d: dict) -> ScanConfig:
    _check_keys(d, _SCAN_TYPES, "scan")
    kw = {}
    for key, val in d.items():
        where = f"scan.{key}"
        if val is None and key in ("k_max", "k_steps", "negative_kappa_max"):
            kw[key] = None
        elif key in ("k_steps", "theta_grid", "max_theta_grid", "negative_steps"):
            kw[key] = _int(val, where)
        elif key == "adaptive_theta":
            if not isinstance(val, bool):
                raise ConfigError(where, "expected true or false")
            kw[key] = val
        elif key == "mode":
            if not isinstance(val, str):
                raise ConfigError(where, "expected a string")
            kw[key] = val
        else:
            kw[key] = _real(val, where)
    try:
        return ScanConfig(**kw)
    except ScanError as exc:
        raise ConfigError("scan", str(exc)) from None


def _parse_output(o, i: int) -> OutputSpec:
    where = f"outputs[{i}]"
    if isinstance(o, str):
        o = {"path": o}
    _check_keys(o, ("format", "path"), where)
    path = o.get("path")
    if not isinstance(path, str) or not path:
        raise ConfigError(f"{_p(where)}path", "expected a non-empty string")
    fmt = o.get("format")
    if fmt is None:
        fmt = SUFFIX_FORMATS.get(Path(path).suffix.lower())
        if fmt is None:
            raise ConfigError(f"{_p(where)}format", f"cannot infer a format from {path!r}")
    if fmt not in FORMATS:
        raise ConfigError(f"{_p(where)}format", f"unknown format {fmt!r}; use one of {', '.join(FORMATS)}")
    return OutputSpec(fmt, path)


def parse_config(text: str, command: str | None = None, extra_outputs=()) -> RunConfig:
    """Validated :class:`RunConfig` from a JSON document.

    ``command`` and ``extra_outputs`` (paths or :class:`OutputSpec`) come from
    the command line and take precedence over the document.
    """
    try:
        doc = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON ({exc.msg} at line {exc.lineno})") from None
    if not isinstance(doc, dict):
        raise ConfigError("config", "expected a JSON object")
    coupling_keys = ("m", "a", "S_upper", "T", "preset", "A", "B")
    _check_keys(doc, ("command", "coupling", "scan", "outputs", "compare", "include_negative",
                      "oracle_check") + coupling_keys, "")
    cmd = command or doc.get("command")
    if cmd not in COMMANDS:
        raise ConfigError("command", f"expected one of {', '.join(COMMANDS)}, got {cmd!r}")

    top = {k: doc[k] for k in coupling_keys if k in doc}
    if top and "coupling" in doc:
        raise ConfigError("coupling", "given both nested and at top level")
    coupling = None
    if "coupling" in doc:
        coupling = _parse_coupling(doc["coupling"], "coupling")
    elif top:
        coupling = _parse_coupling(top, "")
    if cmd != "presets" and coupling is None:
        raise ConfigError("coupling", "missing")
    if isinstance(coupling, ABPair) and cmd != "validate":
        raise ConfigError("coupling.A", f"raw (A, B) input is accepted by validate only, not {cmd}")

    scan = _parse_scan(doc["scan"]) if doc.get("scan") is not None else None

    comp = doc.get("compare", {})
    _check_keys(comp, ("n_min", "n_max", "regime"), "compare")
    n_min = _int(comp.get("n_min", 20), "compare.n_min")
    n_max = _int(comp.get("n_max", 30), "compare.n_max")
    if n_min < 1 or n_max < n_min:
        raise ConfigError("compare", "need 1 <= n_min <= n_max")
    reg = comp.get("regime")
    if reg is not None:
        reg = _int(reg, "compare.regime")
        if reg < 0:
            raise ConfigError("compare.regime", "must be >= 0")

    outs = doc.get("outputs", [])
    if not isinstance(outs, list):
        raise ConfigError("outputs", "expected a list")
    outputs = [_parse_output(o, i) for i, o in enumerate(outs)]
    for j, o in enumerate(extra_outputs):
        outputs.append(o if isinstance(o, OutputSpec) else _parse_output(o, len(outs) + j))
    if cmd in ("scan", "classify", "compare") and not outputs:
        raise ConfigError("outputs", f"{cmd} needs at least one output (--out PATH)")

    flags = {}
    for key in ("include_negative", "oracle_check"):
        if key in doc:
            if not isinstance(doc[key], bool):
                raise ConfigError(key, "expected true or false")
            flags[key] = doc[key]
    return RunConfig(cmd, coupling, scan, tuple(outputs), CompareOptions(n_min, n_max, reg), **flags)


# ---------------------------------------------------------------- serializing


def _num(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    # keep floats recognisable as floats
    return s if any(ch in s for ch in ".en") else s + ".0"


def _to_json(obj, indent: int = 0) -> str:
    pad, inner = "  " * indent, "  " * (indent + 1)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return f"[{_num(obj.real)}, {_num(obj.imag)}]"
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k), ensure_ascii=False)}: {_to_json(v, indent + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        parts = [_to_json(v, indent + 1) for v in obj]
        if all(isinstance(v, (int, float, complex, bool, np.number)) or v is None for v in obj):
            return "[" + ", ".join(parts) + "]"
        return "[\n" + ",\n".join(inner + p for p in parts) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    """Deterministic JSON with 17 significant digits and a trailing newline."""
    return _to_json(obj) + "\n"


def _pair(z: complex) -> list:
    return [z.real, z.imag]


def coupling_dict(c) -> dict:
    if isinstance(c, PresetRef):
        return {"a": c.a, "preset": {"name": c.name, "params": list(c.params)}}
    if isinstance(c, ABPair):
        return {"a": c.a, "A": [[_pair(z) for z in r] for r in c.A],
                "B": [[_pair(z) for z in r] for r in c.B]}
    return {"m": c.m, "a": c.a, "S_upper": [_pair(z) for z in c.s_upper],
            "T": [_pair(z) for r in c.t for z in r]}


def serialize(cfg: RunConfig) -> str:
    """Canonical JSON text of a run config; :func:`parse_config` inverts it."""
    doc = {"command": cfg.command}
    if cfg.coupling is not None:
        doc["coupling"] = coupling_dict(cfg.coupling)
    if cfg.scan is not None:
        doc["scan"] = {f.name: getattr(cfg.scan, f.name) for f in fields(ScanConfig)}
    doc["compare"] = {"n_min": cfg.compare.n_min, "n_max": cfg.compare.n_max,
                      "regime": cfg.compare.regime}
    doc["outputs"] = [{"format": o.format, "path": o.path} for o in cfg.outputs]
    doc["include_negative"] = cfg.include_negative
    doc["oracle_check"] = cfg.oracle_check
    return dumps(doc)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else (_num(v) if isinstance(v, float) else v) for v in row])
    return buf.getvalue()


# ------------------------------------------------------------------ commands


def _scan_payload(c: STCoupling, rep) -> dict:
    d = rep.as_dict()
    d["diagnostics"] = {k: v for k, v in d["diagnostics"].items() if k not in _VOLATILE}
    return {"coupling": coupling_dict(c), "coupling_class": classify_coupling(c).tag, **d}


BAND_COLUMNS = ("e_lo", "e_hi", "kind", "index_hint", "k_lo", "k_hi")


def band_rows(rep) -> list:
    """Negative bands then positive bands, as CSV rows."""
    out = []
    for b in list(rep.negative_bands) + list(rep.bands):
        k_lo = None if math.isnan(b.k_lo) else float(b.k_lo)
        k_hi = None if math.isnan(b.k_hi) else float(b.k_hi)
        out.append((float(b.e_lo), float(b.e_hi), b.kind, b.index_hint, k_lo, k_hi))
    return out


def _trace_text(tr) -> str:
    lines = ["# k f_min (torus minimum of the determinant)"]
    lines += [f"{_num(k)} {_num(v)}" for k, v in zip(tr["k"], tr["f_min"])]
    lines += ["", "", "# k f_max (torus maximum of the determinant)"]
    lines += [f"{_num(k)} {_num(v)}" for k, v in zip(tr["k"], tr["f_max"])]
    return "\n".join(lines) + "\n"


COMPARE_COLUMNS = ("n", "numeric", "predicted", "ratio", "fitted_exponent", "predicted_exponent")


def _compare_rows(comp) -> list:
    fe = comp.fitted_exponent
    return [(row["n"], row["numeric"], row["predicted"], row["ratio"], fe, comp.predicted_exponent)
            for row in comp.rows]


def _regime_rows(rep) -> list:
    out = []
    for i, r in enumerate(rep.regimes):
        consts = ";".join(f"{k}={_num(v)}" for k, v in r.constants.items())
        out.append((i, r.anchor, r.measure, r.band_law, r.gap_law, r.coefficient, r.exponent,
                    r.shift, consts, r.case))
    return out


REGIME_COLUMNS = ("index", "anchor", "measure", "band_law", "gap_law", "coefficient", "exponent",
                  "shift", "constants", "case")


def _regime_text(rep, n_range=(1, 40)) -> str:
    lines = []
    for i, r in enumerate(rep.regimes):
        if r.coefficient is None:
            continue
        if lines:
            lines += ["", ""]
        lines.append(f"# regime {i}: n predicted_{r.measure}_width ({r.case})")
        lines += [f"{n} {_num(r.width(n))}" for n in range(n_range[0], n_range[1] + 1)]
    return "\n".join(lines) + "\n" if lines else "# no regime with a width constant\n"


def _write_text(path: str, text: str):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_figure(path: str, fig):
    from .plotting import save_figure
    save_figure(fig, path)


def _presets_payload() -> list:
    aliases = {}
    for alias, tag in PRESET_NAMES.items():
        aliases.setdefault(tag, []).append(alias)
    from .coupling import _ARITY
    out = []
    for tag, names in aliases.items():
        out.append({"name": names[0], "class": tag, "aliases": names[1:],
                    "parameters": _ARITY[tag]})
    return out


def _oracle_check(c: STCoupling):
    try:
        oracle_match(c)
    except NoPolynomialForm:
        pass


def run(cfg: RunConfig, stdout=None) -> int:
    """Execute ``cfg``; returns the exit status.

    Raises ``OSError`` for unwritable outputs and :class:`OracleMismatch` when
    the closed-form check is requested and fails; :func:`main` maps those to
    exit codes 2 and 3.
    """
    stdout = stdout or sys.stdout
    cmd = cfg.command
    if cmd == "presets":
        payload = _presets_payload()
        stdout.write(dumps(payload))
        for o in cfg.outputs:
            if o.format == "json":
                _write_text(o.path, dumps(payload))
            elif o.format == "csv":
                _write_text(o.path, _csv_text(("name", "class", "aliases", "parameters"), [
                    (p["name"], p["class"], " ".join(p["aliases"]),
                     "" if p["parameters"] is None else p["parameters"]) for p in payload]))
            else:
                raise ConfigError("outputs", f"presets cannot be written as {o.format}")
        return EXIT_OK

    if cmd == "validate":
        if isinstance(cfg.coupling, ABPair):
            A, B = cfg.coupling.matrices()
        else:
            ab = st_to_ab(cfg.st_coupling())
            A, B = ab.A, ab.B
        rep = validate_ab(A, B)
        text = dumps(rep.as_dict())
        stdout.write(text)
        for o in cfg.outputs:
            if o.format != "json":
                raise ConfigError("outputs", f"validate writes json only, not {o.format}")
            _write_text(o.path, text)
        return EXIT_OK if rep.ok else EXIT_INVALID

    c = cfg.st_coupling()
    if cfg.oracle_check:
        _oracle_check(c)

    if cmd == "scan":
        want_traces = any(o.format in ("plot-data",) + FIGURE_FORMATS for o in cfg.outputs)
        rep = scan_bands(c, cfg.scan, include_negative=cfg.include_negative, keep_traces=want_traces)
        for o in cfg.outputs:
            if o.format == "json":
                _write_text(o.path, dumps(_scan_payload(c, rep)))
            elif o.format == "csv":
                _write_text(o.path, _csv_text(BAND_COLUMNS, band_rows(rep)))
            elif o.format == "plot-data":
                _write_text(o.path, _trace_text(rep.diagnostics["traces"]))
            else:
                from .plotting import band_diagram, trace_plot
                tr = rep.diagnostics["traces"]
                fig = trace_plot(tr["k"], tr["f_min"], tr["f_max"]) if "trace" in Path(o.path).stem \
                    else band_diagram(rep)
                _write_figure(o.path, fig)
        return EXIT_OK

    if cmd == "classify":
        rep = classify(c)
        for o in cfg.outputs:
            if o.format == "json":
                _write_text(o.path, dumps({"coupling": coupling_dict(c), **rep.as_dict()}))
            elif o.format == "csv":
                _write_text(o.path, _csv_text(REGIME_COLUMNS, _regime_rows(rep)))
            elif o.format == "plot-data":
                _write_text(o.path, _regime_text(rep))
            else:
                from .plotting import regime_plot
                _write_figure(o.path, regime_plot(rep))
        for w in rep.warnings:
            print(f"warning: {w}", file=sys.stderr)
        return EXIT_OK

    # compare
    opts = cfg.compare
    rep = classify(c)
    if opts.regime is not None and opts.regime >= len(rep.regimes):
        raise ConfigError("compare.regime", f"only {len(rep.regimes)} regime(s) for this coupling")
    comp = compare_asymptotics(c, cfg.scan, (opts.n_min, opts.n_max), opts.regime)
    for o in cfg.outputs:
        if o.format == "json":
            _write_text(o.path, dumps({"coupling": coupling_dict(c), **comp.as_dict()}))
        elif o.format == "csv":
            _write_text(o.path, _csv_text(COMPARE_COLUMNS, _compare_rows(comp)))
        elif o.format == "plot-data":
            lines = [f"# n {comp.regime.measure}_width_numeric {comp.regime.measure}_width_predicted"]
            lines += [f"{row['n']} {_num(row['numeric']) if row['numeric'] is not None else 'nan'} "
                      f"{_num(row['predicted']) if row['predicted'] is not None else 'nan'}"
                      for row in comp.rows]
            _write_text(o.path, "\n".join(lines) + "\n")
        else:
            from .plotting import comparison_plot
            _write_figure(o.path, comparison_plot(comp))
    return EXIT_OK


def _read_config(path: str) -> str:
    if path == "-":
        return sys.stdin.buffer.read().decode("utf-8")
    with open(path, "rb") as fh:
        return fh.read().decode("utf-8")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="qlattice",
        description="Band spectra and high-energy asymptotics of square-lattice quantum graphs.",
        epilog="Exit status: 0 ok, 1 invalid input or failed validation, 2 I/O error, "
               "3 closed-form oracle mismatch. QLATTICE_THREADS caps worker threads.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", "-c", help="JSON run config ('-' reads stdin)")
    p.add_argument("--out", "-o", action="append", default=[], metavar="PATH",
                   help="output file; format from the suffix (.json .csv .dat/.txt .png .pdf .svg). "
                        "Repeatable.")
    p.add_argument("--preset", help="use a named coupling instead of --config (e.g. delta)")
    p.add_argument("--param", action="append", type=float, default=[],
                   help="preset parameter (repeatable)")
    p.add_argument("-a", "--edge-length", type=float, default=None, help="edge length for --preset")
    p.add_argument("--oracle-check", action="store_true",
                   help="check the closed-form dispersion polynomial before running")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = _read_config(args.config) if args.config else ""
    except (OSError, UnicodeDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        if args.preset:
            doc = json.loads(text) if text.strip() else {}
            if not isinstance(doc, dict):
                raise ConfigError("config", "expected a JSON object")
            doc.pop("coupling", None)
            doc["coupling"] = {"preset": {"name": args.preset, "params": args.param}}
            if args.edge_length is not None:
                doc["coupling"]["a"] = args.edge_length
            text = json.dumps(doc)
        cfg = parse_config(text, args.command, args.out)
        if args.oracle_check:
            cfg = replace(cfg, oracle_check=True)
        return run(cfg)
    except (ConfigError, CouplingError, ScanError, AsymptoticsError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OracleMismatch as exc:
        diag = exc.report.as_dict() if getattr(exc, "report", None) is not None else {}
        print(f"oracle mismatch: {exc}", file=sys.stderr)
        sys.stderr.write(dumps(diag))
        return EXIT_ORACLE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
