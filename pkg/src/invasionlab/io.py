"""Configuration, run-directory persistence, and delimited/raster outputs.

Formats are deliberately language-neutral:

* config: strict JSON (unknown keys rejected, errors name the field path);
* snapshots: one header JSON line followed by raw little-endian float64,
  u row then w row;
* time series: CSV with full round-trip float formatting;
* heatmaps: 16-bit binary PGM (P5) with a JSON sidecar recording the
  value mapping.
"""

from __future__ import annotations

import json
import os
import time
import zlib
from dataclasses import asdict

import numpy as np

from .core import Grid, Params, State
from .stepper import PerturbationEvent, SchemeConfig

TOOL_VERSION = "0.1.0"


class ConfigError(ValueError):
    """Config schema violation; `field_path` names the offending entry."""

    def __init__(self, field_path: str, message: str):
        self.field_path = field_path
        super().__init__(f"{field_path}: {message}")


class MissingData(RuntimeError):
    """A run directory lacks files the requested operation needs."""


# ---------------------------------------------------------------------------
# config schema


def _require_mapping(obj, path):
    if not isinstance(obj, dict):
        raise ConfigError(path, f"expected an object, got {type(obj).__name__}")


def _check_keys(obj, path, required, optional=()):
    _require_mapping(obj, path)
    allowed = set(required) | set(optional)
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}", "unknown key")
    for key in required:
        if key not in obj:
            raise ConfigError(f"{path}.{key}", "missing required key")


def _number(obj, path, positive=False, integer=False):
    val = obj
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(path, f"expected a number, got {val!r}")
    if integer and int(val) != val:
        raise ConfigError(path, f"expected an integer, got {val!r}")
    if positive and not val > 0:
        raise ConfigError(path, f"must be positive, got {val!r}")
    return int(val) if integer else float(val)


_INIT_KEYS = {
    "zero": (),
    "bump": ("center", "width", "amplitude", "component"),
    "noise": ("amplitude", "seed"),
    "file": ("path",),
}


def validate_config(cfg: dict) -> dict:
    """Validate a parsed config dict against the schema; returns it.

    Schema: {params:{a,gamma,eps}, grid:{x_min,x_max,n},
    scheme:{dt,frame_speed,bc,record_every,t_end},
    init:{kind: zero|bump|noise|file, ...}, events:[...]}.
    Unknown keys anywhere are rejected with the offending field path.
    """
    _check_keys(cfg, "config", ("params", "grid", "scheme"),
                ("init", "events", "wavetrain", "eikonal", "seed"))

    p = cfg["params"]
    _check_keys(p, "params", ("a", "gamma", "eps"))
    _number(p["a"], "params.a")
    _number(p["gamma"], "params.gamma")
    _number(p["eps"], "params.eps", positive=True)

    g = cfg["grid"]
    _check_keys(g, "grid", ("x_min", "x_max", "n"))
    _number(g["x_min"], "grid.x_min")
    _number(g["x_max"], "grid.x_max")
    _number(g["n"], "grid.n", positive=True, integer=True)
    if not g["x_max"] > g["x_min"]:
        raise ConfigError("grid.x_max", "must exceed grid.x_min")

    s = cfg["scheme"]
    _check_keys(s, "scheme", ("dt", "t_end"),
                ("frame_speed", "bc", "record_every"))
    _number(s["dt"], "scheme.dt", positive=True)
    _number(s["t_end"], "scheme.t_end", positive=True)
    if "frame_speed" in s:
        _number(s["frame_speed"], "scheme.frame_speed")
    if "record_every" in s:
        _number(s["record_every"], "scheme.record_every",
                positive=True, integer=True)
    if s.get("bc", "neumann") not in ("neumann", "periodic"):
        raise ConfigError("scheme.bc", f"unknown value {s.get('bc')!r}")

    init = cfg.get("init", {"kind": "zero"})
    _require_mapping(init, "init")
    kind = init.get("kind")
    if kind not in _INIT_KEYS:
        raise ConfigError("init.kind",
                          f"expected one of {sorted(_INIT_KEYS)}, got {kind!r}")
    _check_keys(init, "init", ("kind",), _INIT_KEYS[kind])
    if kind == "bump":
        _number(init.get("center", 0.0), "init.center")
        _number(init.get("width", 1.0), "init.width", positive=True)
        _number(init.get("amplitude", 0.0), "init.amplitude")
        if init.get("component", "u") not in ("u", "w"):
            raise ConfigError("init.component", "must be 'u' or 'w'")
    elif kind == "noise":
        _number(init.get("amplitude", 0.0), "init.amplitude")
        if "seed" in init:
            _number(init["seed"], "init.seed", integer=True)
    elif kind == "file":
        if not isinstance(init.get("path"), str):
            raise ConfigError("init.path", "must be a string path")

    events = cfg.get("events", [])
    if not isinstance(events, list):
        raise ConfigError("events", "expected a list")
    for i, ev in enumerate(events):
        _check_keys(ev, f"events[{i}]",
                    ("t_fire", "center", "width", "amplitude"), ("component",))
        _number(ev["t_fire"], f"events[{i}].t_fire")
        _number(ev["center"], f"events[{i}].center")
        _number(ev["width"], f"events[{i}].width", positive=True)
        _number(ev["amplitude"], f"events[{i}].amplitude")
        if ev.get("component", "u") not in ("u", "w"):
            raise ConfigError(f"events[{i}].component", "must be 'u' or 'w'")
    if "seed" in cfg:
        _number(cfg["seed"], "seed", integer=True)

    if "wavetrain" in cfg:
        wt = cfg["wavetrain"]
        _check_keys(wt, "wavetrain", (), ("c", "window", "m"))
        if "c" in wt:
            _number(wt["c"], "wavetrain.c")
        if "m" in wt:
            _number(wt["m"], "wavetrain.m", positive=True, integer=True)
        if "window" in wt:
            if (not isinstance(wt["window"], list)
                    or len(wt["window"]) != 2):
                raise ConfigError("wavetrain.window",
                                  "expected [lo, hi]")
            _number(wt["window"][0], "wavetrain.window[0]")
            _number(wt["window"][1], "wavetrain.window[1]")

    if "eikonal" in cfg:
        ek = cfg["eikonal"]
        _check_keys(ek, "eikonal", ("d_eff", "c_g", "dt", "t_end"),
                    ("beta", "amplitude", "width"))
        _number(ek["d_eff"], "eikonal.d_eff", positive=True)
        _number(ek["c_g"], "eikonal.c_g")
        _number(ek["dt"], "eikonal.dt", positive=True)
        _number(ek["t_end"], "eikonal.t_end", positive=True)
        for opt in ("beta", "amplitude"):
            if opt in ek:
                _number(ek[opt], f"eikonal.{opt}")
        if "width" in ek:
            _number(ek["width"], "eikonal.width", positive=True)
    return cfg


def load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise ConfigError("config", f"file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}")
    return validate_config(cfg)


def build_params(cfg: dict) -> Params:
    p = cfg["params"]
    return Params(float(p["a"]), float(p["gamma"]), float(p["eps"]))


def build_grid(cfg: dict) -> Grid:
    g = cfg["grid"]
    return Grid(float(g["x_min"]), float(g["x_max"]), int(g["n"]))


def build_scheme(cfg: dict) -> SchemeConfig:
    s = cfg["scheme"]
    return SchemeConfig(dt=float(s["dt"]),
                        frame_speed=float(s.get("frame_speed", 0.0)),
                        bc=s.get("bc", "neumann"),
                        record_every=int(s.get("record_every", 50)),
                        t_end=float(s["t_end"]))


def build_events(cfg: dict) -> list[PerturbationEvent]:
    return [PerturbationEvent(t_fire=float(e["t_fire"]),
                              center=float(e["center"]),
                              width=float(e["width"]),
                              amplitude=float(e["amplitude"]),
                              component=e.get("component", "u"))
            for e in cfg.get("events", [])]


def build_initial_state(cfg: dict, seed: int | None = None) -> State:
    """Initial State from the config's init section.

    `seed` (CLI flag) overrides init.seed for the noise kind.  Noise uses the
    counter-based Philox generator so identical seeds give identical fields.
    """
    grid = build_grid(cfg)
    init = cfg.get("init", {"kind": "zero"})
    kind = init.get("kind", "zero")
    u = np.zeros(grid.n)
    w = np.zeros(grid.n)
    if kind == "bump":
        bump = float(init.get("amplitude", 0.0)) * np.exp(
            -(((grid.x - float(init.get("center", 0.0)))
               / float(init.get("width", 1.0))) ** 2))
        if init.get("component", "u") == "u":
            u = bump
        else:
            w = bump
    elif kind == "noise":
        if seed is None:
            seed = int(init.get("seed", 0))
        rng = np.random.Generator(np.random.Philox(seed))
        u = float(init.get("amplitude", 0.0)) * rng.standard_normal(grid.n)
    elif kind == "file":
        state = read_snapshot(init["path"])
        if state.grid != grid:
            raise ConfigError("init.path",
                              "snapshot grid does not match config grid")
        u, w = state.u, state.w
    return State(grid, 0.0, u, w)


# ---------------------------------------------------------------------------
# snapshots


def write_snapshot(path: str, state: State) -> None:
    """Header JSON line + raw little-endian float64 rows, u then w."""
    header = {
        "grid": {"x_min": state.grid.x_min, "x_max": state.grid.x_max,
                 "n": state.grid.n},
        "t": state.t,
        "components": ["u", "w"],
        "dtype": "<f8",
    }
    with open(path, "wb") as fh:
        fh.write((json.dumps(header) + "\n").encode("utf-8"))
        fh.write(np.ascontiguousarray(state.u, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(state.w, dtype="<f8").tobytes())


def read_snapshot(path: str) -> State:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        g = header["grid"]
        grid = Grid(float(g["x_min"]), float(g["x_max"]), int(g["n"]))
        n = grid.n
        raw = fh.read(2 * 8 * n)
    if len(raw) != 2 * 8 * n:
        raise MissingData(f"snapshot {path} is truncated")
    u = np.frombuffer(raw[: 8 * n], dtype="<f8").copy()
    w = np.frombuffer(raw[8 * n:], dtype="<f8").copy()
    return State(grid, float(header["t"]), u, w)


# ---------------------------------------------------------------------------
# CSV and PGM


def write_csv(path: str, header: list[str], columns: list[np.ndarray]) -> None:
    """CSV with full float64 round-trip formatting (repr)."""
    cols = [np.asarray(c) for c in columns]
    n = cols[0].size
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(n):
            fh.write(",".join(repr(float(c[i])) for c in cols) + "\n")


def read_csv(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = [[float(v) for v in line.strip().split(",")]
                for line in fh if line.strip()]
    data = np.array(rows) if rows else np.empty((0, len(header)))
    return header, [data[:, j] for j in range(len(header))]


def write_heatmap(path: str, values: np.ndarray, sidecar: dict | None = None):
    """16-bit binary PGM: one row per snapshot, one column per sample.

    Values are mapped linearly to [0, 65535] by the global min/max, which is
    recorded (with the shape) in `path + '.json'`.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 2:
        raise ValueError("heatmap expects a 2-D array (time x space)")
    vmin = float(np.min(values))
    vmax = float(np.max(values))
    scale = 65535.0 / (vmax - vmin) if vmax > vmin else 0.0
    pix = np.round((values - vmin) * scale).astype(">u2")
    rows, cols = values.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n65535\n".encode("ascii"))
        fh.write(pix.tobytes())
    meta = {"rows": rows, "cols": cols, "vmin": vmin, "vmax": vmax}
    if sidecar:
        meta.update(sidecar)
    with open(path + ".json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=1)
        fh.write("\n")


def read_heatmap(path: str) -> np.ndarray:
    """Read a P5 16-bit PGM back into the float array via the sidecar map."""
    with open(path, "rb") as fh:
        magic = fh.readline().split()[0]
        if magic != b"P5":
            raise ValueError("not a binary PGM file")
        cols, rows = (int(v) for v in fh.readline().split())
        maxval = int(fh.readline())
        pix = np.frombuffer(fh.read(rows * cols * 2), dtype=">u2")
    pix = pix.reshape(rows, cols).astype(float)
    with open(path + ".json", "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    return meta["vmin"] + pix * (meta["vmax"] - meta["vmin"]) / maxval


# ---------------------------------------------------------------------------
# run directories and manifests


def _crc32(path: str) -> int:
    crc = 0
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            crc = zlib.crc32(chunk, crc)
    return crc


class RunWriter:
    """Streams a simulation into a run directory and finalizes the manifest."""

    def __init__(self, run_dir: str, config: dict):
        self.run_dir = run_dir
        self.config = config
        self.files: list[str] = []
        self._t0 = time.monotonic()
        os.makedirs(run_dir, exist_ok=True)
        os.makedirs(os.path.join(run_dir, "snapshots"), exist_ok=True)
        self._count = 0

    def sink(self, state: State) -> None:
        rel = os.path.join("snapshots", f"snap_{self._count:06d}.bin")
        write_snapshot(os.path.join(self.run_dir, rel), state)
        self.files.append(rel)
        self._count += 1

    def add_file(self, rel: str) -> None:
        self.files.append(rel)

    def finalize(self, traj=None) -> dict:
        index = []
        for rel in self.files:
            full = os.path.join(self.run_dir, rel)
            index.append({"path": rel, "bytes": os.path.getsize(full),
                          "crc32": _crc32(full)})
        manifest = {
            "tool_version": TOOL_VERSION,
            "config": self.config,
            "params": self.config["params"],
            "grid": self.config["grid"],
            "scheme": self.config["scheme"],
            "events_fired": traj.events_fired if traj is not None else [],
            "files": index,
            "wall_clock_seconds": time.monotonic() - self._t0,
        }
        with open(os.path.join(self.run_dir, "manifest.json"), "w",
                  encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=1, default=_jsonable)
            fh.write("\n")
        return manifest


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "__dataclass_fields__"):
        return asdict(obj)
    raise TypeError(f"not JSON-serializable: {type(obj)}")


def load_manifest(run_dir: str, verify: bool = True) -> dict:
    path = os.path.join(run_dir, "manifest.json")
    if not os.path.exists(path):
        raise MissingData(f"no manifest at {path}")
    with open(path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    if verify:
        for entry in manifest.get("files", []):
            full = os.path.join(run_dir, entry["path"])
            if not os.path.exists(full):
                raise MissingData(f"manifest references missing file "
                                  f"{entry['path']}")
            if os.path.getsize(full) != entry["bytes"]:
                raise MissingData(f"size mismatch for {entry['path']}")
            if _crc32(full) != entry["crc32"]:
                raise MissingData(f"checksum mismatch for {entry['path']}")
    return manifest


def load_snapshots(run_dir: str, manifest: dict | None = None) -> list[State]:
    if manifest is None:
        manifest = load_manifest(run_dir, verify=False)
    snaps = []
    for entry in manifest.get("files", []):
        if entry["path"].startswith("snapshots/"):
            snaps.append(read_snapshot(os.path.join(run_dir, entry["path"])))
    if not snaps:
        raise MissingData(f"run directory {run_dir} holds no snapshots")
    snaps.sort(key=lambda s: s.t)
    return snaps


def write_wavetrain(path: str, wt) -> None:
    """Wave-train record as JSON (profiles are small, one period each)."""
    record = {"m": wt.m, "L": wt.L, "c": wt.c, "k_wt": wt.k_wt,
              "residual": None if np.isnan(wt.residual) else wt.residual,
              "profile_u": wt.profile_u.tolist(),
              "profile_w": wt.profile_w.tolist()}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(record, fh)
        fh.write("\n")


def read_wavetrain(path: str):
    from .wavetrain import WaveTrain
    if not os.path.exists(path):
        raise MissingData(f"no wave-train record at {path}")
    with open(path, "r", encoding="utf-8") as fh:
        rec = json.load(fh)
    return WaveTrain(m=int(rec["m"]),
                     profile_u=np.array(rec["profile_u"]),
                     profile_w=np.array(rec["profile_w"]),
                     L=float(rec["L"]), c=float(rec["c"]),
                     residual=(np.nan if rec.get("residual") is None
                               else float(rec["residual"])))


def default_out_root() -> str:
    return os.environ.get("INVASIONLAB_OUT", "runs")
