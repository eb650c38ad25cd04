"""Run configuration: a TOML document with flat ``[model]``, ``[priors]``,
``[run]`` and ``[output]`` sections.

Matrices are written as row lists, ``p0 = [[1000.0, 0.0], [0.0, 1000.0]]``.
Every key is optional; omitted priors are filled from the model dimensions
when the run starts (m0 = 0, P0 = I, V0 = I, K0 = 0, eta0 = 1).

    [model]
    family = "LT"               # LL | LT | LS, for simulate / reproduce-tables
    data = "us.csv"             # filter input; must exist
    columns = ["invest", "inventory"]
    b = [[1.0, 0.0], [0.0, 1.0]]
    c = [[1.0, 1.0], [0.0, 1.0]]
    discounts = [0.2, 0.4]      # or w = [[...]]

    [priors]
    m0 = [80.622, 4.047]
    eta0 = 1.0

    [run]
    seed = 0
    n_series = 200

    [output]
    path = "out/us"
    format = "json"             # json | csv | both
"""

import math
import re
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import tomli
import tomli_w

from .errors import ConfigError
from .simulation import FAMILIES, MODELS

FORMATS = ("json", "csv", "both")


@dataclass
class ModelConfig:
    family: str = "LL"
    data: str | None = None
    columns: list | None = None
    time_column: str | None = None
    b: list | None = None
    c: list | None = None
    w: list | None = None
    discounts: list | None = None


@dataclass
class PriorConfig:
    m0: list | None = None
    p0: list | None = None
    v0: list | None = None
    k0: list | None = None
    eta0: float = 1.0


@dataclass
class RunSection:
    seed: int = 0
    n_series: int = 200
    length: int = 500
    snapshot_times: list = field(default_factory=lambda: [100, 200, 500])
    models: list = field(default_factory=lambda: list(MODELS))
    families: list = field(default_factory=lambda: list(FAMILIES))
    index: int = 0
    burn_in: int = 0
    workers: int = 1
    draws: int = 1_000_000
    bins: int = 10
    cases: int = 1000


@dataclass
class OutputConfig:
    path: str | None = None
    format: str = "json"


@dataclass
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    priors: PriorConfig = field(default_factory=PriorConfig)
    run: RunSection = field(default_factory=RunSection)
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self):
        """Nested plain dict with unset (None) keys dropped."""
        return {sec: {k: v for k, v in asdict(getattr(self, sec)).items() if v is not None}
                for sec in _SECTIONS}

    def matrix(self, section, name):
        val = getattr(getattr(self, section), name)
        return None if val is None else np.array(val, dtype=float)


_SECTIONS = {"model": ModelConfig, "priors": PriorConfig, "run": RunSection, "output": OutputConfig}

# key -> kind; kinds drive coercion and checking
FIELD_KINDS = {
    "model": {"family": "str", "data": "str", "columns": "strs", "time_column": "str",
              "b": "matrix", "c": "matrix", "w": "matrix", "discounts": "vector"},
    "priors": {"m0": "vector", "p0": "matrix", "v0": "matrix", "k0": "matrix", "eta0": "float"},
    "run": {"seed": "int", "n_series": "int", "length": "int", "snapshot_times": "ints",
            "models": "strs", "families": "strs", "index": "int", "burn_in": "int",
            "workers": "int", "draws": "int", "bins": "int", "cases": "int"},
    "output": {"path": "str", "format": "str"},
}


def _locate(text, section, key=None):
    """1-based line of ``[section]`` or of ``key`` inside it, else None."""
    if text is None:
        return None
    current = None
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"^\[\s*([A-Za-z0-9_.-]+)\s*\]", s)
        if m:
            current = m.group(1)
            if key is None and current == section:
                return lineno
            continue
        if key is not None and current == section and re.match(rf"^{re.escape(key)}\s*=", s):
            return lineno
    return None


def _fail(msg, text, section, key=None):
    line = _locate(text, section, key)
    fld = f"{section}.{key}" if key else section
    raise ConfigError(msg, line=line, column=1 if line else None, field=fld)


def _is_num(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _coerce(kind, val):
    """Return the coerced value or raise ValueError with a short reason."""
    if kind == "str":
        if not isinstance(val, str):
            raise ValueError("expected a string")
        return val
    if kind == "int":
        if isinstance(val, bool) or not isinstance(val, int):
            raise ValueError("expected an integer")
        return val
    if kind == "float":
        if not _is_num(val):
            raise ValueError("expected a finite number")
        return float(val)
    if kind in ("strs", "ints", "vector"):
        if not isinstance(val, list) or not val:
            raise ValueError("expected a non-empty list")
        item = {"strs": "str", "ints": "int", "vector": "float"}[kind]
        return [_coerce(item, v) for v in val]
    if kind == "matrix":
        if not isinstance(val, list) or not val or not all(isinstance(r, list) for r in val):
            raise ValueError("expected a list of rows")
        rows = [[_coerce("float", v) for v in r] for r in val]
        if len({len(r) for r in rows}) != 1:
            raise ValueError("rows have different lengths")
        return rows
    raise AssertionError(kind)


def _check_square_psd(name, mat, text, section, strict=False):
    a = np.array(mat)
    if a.shape[0] != a.shape[1]:
        _fail(f"{name} must be square, got {a.shape[0]}x{a.shape[1]}", text, section, name)
    if not np.allclose(a, a.T, rtol=1e-12, atol=0.0):
        _fail(f"{name} must be symmetric", text, section, name)
    w = np.linalg.eigvalsh(a)
    if (w[0] <= 0) if strict else (w[0] < -1e-10 * max(np.abs(w).max(), 1.0)):
        kind = "positive definite" if strict else "positive semi-definite"
        _fail(f"{name} must be {kind}", text, section, name)


def config_from_dict(raw, text=None, base_dir=None):
    """Validate a nested dict into a RunConfig.

    ``text`` is the source document, used only to attach line numbers to
    errors.  ``base_dir`` resolves a relative data path.
    """
    if not isinstance(raw, dict):
        raise ConfigError("config must be a table of sections")
    sections = {}
    for sec, body in raw.items():
        if sec not in _SECTIONS:
            _fail(f"unknown section [{sec}]; expected one of {sorted(_SECTIONS)}", text, sec)
        if not isinstance(body, dict):
            _fail(f"[{sec}] must be a table", text, sec)
        vals = {}
        for key, val in body.items():
            kind = FIELD_KINDS[sec].get(key)
            if kind is None:
                _fail(f"unknown key {key!r} in [{sec}]", text, sec, key)
            try:
                vals[key] = _coerce(kind, val)
            except ValueError as exc:
                _fail(f"bad value for {key}: {exc}", text, sec, key)
        sections[sec] = _SECTIONS[sec](**vals)
    cfg = RunConfig(**sections)
    _validate(cfg, text, base_dir)
    return cfg


def _validate(cfg, text, base_dir):
    mdl, pri, run, out = cfg.model, cfg.priors, cfg.run, cfg.output
    if mdl.family not in FAMILIES:
        _fail(f"family must be one of {sorted(FAMILIES)}", text, "model", "family")
    for fam in run.families:
        if fam not in FAMILIES:
            _fail(f"unknown family {fam!r}", text, "run", "families")
    for mod in run.models:
        if mod not in MODELS:
            _fail(f"unknown model {mod!r}; expected {list(MODELS)}", text, "run", "models")
    if mdl.data is not None:
        path = Path(mdl.data)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        if not path.is_file():
            _fail(f"data file not found: {path}", text, "model", "data")
        mdl.data = str(path)
    if mdl.discounts is not None:
        if any(not 0.0 < d <= 1.0 for d in mdl.discounts):
            _fail("discount out of (0,1]", text, "model", "discounts")
        if mdl.w is not None:
            _fail("give either w or discounts, not both", text, "model", "w")
    if mdl.c is not None:
        _check_square_only(mdl.c, text)
    if mdl.w is not None:
        _check_square_psd("w", mdl.w, text, "model")
    for name in ("p0", "k0"):
        if getattr(pri, name) is not None:
            _check_square_psd(name, getattr(pri, name), text, "priors")
    if pri.v0 is not None:
        _check_square_psd("v0", pri.v0, text, "priors", strict=True)
    if pri.eta0 <= 0:
        _fail("eta0 must be positive", text, "priors", "eta0")
    _check_dims(cfg, text)
    if run.n_series < 1 or run.length < 1:
        _fail("n_series and length must be at least 1", text, "run",
              "n_series" if run.n_series < 1 else "length")
    if any(t < 1 for t in run.snapshot_times):
        _fail("snapshot times must be positive", text, "run", "snapshot_times")
    if run.index < 0 or run.index >= run.n_series:
        _fail("index must lie in [0, n_series)", text, "run", "index")
    if run.burn_in < 0 or run.seed < 0:
        _fail("burn_in and seed must be >= 0", text, "run",
              "burn_in" if run.burn_in < 0 else "seed")
    for key in ("workers", "draws", "bins", "cases"):
        if getattr(run, key) < 1:
            _fail(f"{key} must be at least 1", text, "run", key)
    if out.format not in FORMATS:
        _fail(f"format must be one of {list(FORMATS)}", text, "output", "format")


def _check_square_only(mat, text):
    a = np.array(mat)
    if a.shape[0] != a.shape[1]:
        _fail(f"c must be square, got {a.shape[0]}x{a.shape[1]}", text, "model", "c")


def _check_dims(cfg, text):
    """Cross-field dimension agreement among the matrices that are set."""
    mdl, pri = cfg.model, cfg.priors
    m_dims, p_dims = {}, {}
    if mdl.b is not None:
        p_dims["model.b"], m_dims["model.b"] = len(mdl.b), len(mdl.b[0])
    for sec, name, target in (("model", "c", m_dims), ("model", "w", m_dims),
                              ("priors", "p0", m_dims), ("priors", "v0", p_dims)):
        val = getattr(getattr(cfg, sec), name)
        if val is not None:
            target[f"{sec}.{name}"] = len(val)
    if pri.m0 is not None:
        m_dims["priors.m0"] = len(pri.m0)
    if mdl.discounts is not None:
        m_dims["model.discounts"] = len(mdl.discounts)
    if mdl.columns is not None:
        p_dims["model.columns"] = len(mdl.columns)
    for dims, what in ((m_dims, "state"), (p_dims, "observation")):
        if len(set(dims.values())) > 1:
            key = sorted(dims)[-1]
            sec, name = key.split(".")
            _fail(f"{what} dimensions disagree: {dims}", text, sec, name)
    if pri.k0 is not None and p_dims:
        p = next(iter(p_dims.values()))
        if len(pri.k0) != p * (p + 1) // 2:
            _fail(f"k0 must be {p * (p + 1) // 2}x{p * (p + 1) // 2}", text, "priors", "k0")


def parse_config(text, base_dir=None):
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        m = re.search(r"line (\d+), column (\d+)", str(exc))
        line, col = (int(m.group(1)), int(m.group(2))) if m else (None, None)
        raise ConfigError(f"parse error: {str(exc).split(' (at')[0]}", line=line,
                          column=col) from None
    return config_from_dict(raw, text, base_dir)


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, base_dir=path.parent)


def serialize_config(cfg):
    return tomli_w.dumps(cfg.to_dict())


def config_fields():
    """(section, key) pairs in declaration order; used by the CLI flags."""
    return [(sec, f.name) for sec, cls in _SECTIONS.items() for f in fields(cls)]
