"""Config-driven experiment runner.

Usage: ``optosqueeze <config-path>``.  The config is plain ``key = value``
text: one pair per line, ``#`` starts a comment, blank lines are ignored,
unknown keys are errors (no silent typo tolerance).  Every run writes one
CSV file: ``#``-prefixed metadata lines carrying the complete parameter
set (so the run is reproducible from the file alone), a header row, then
comma-separated numeric rows with 12 significant digits and LF endings.
Identical configs produce byte-identical files.

Exit codes: 0 success; 1 physics-domain error (unstable regime, overdamped
doublet, truncation cap), named on stderr; 2 config error, with the line
number on stderr.

Commands and their required keys (``output`` is always required; model
parameters default to zero, ``omega_m`` to one):

* ``smax-sweep``: geff_start, geff_stop, geff_count
* ``time-trace``: geff, time_start, time_stop, time_count
* ``spectrum``: geff (omega grid optional, default 801 points over
  [-4, 4] omega_m)
* ``spectrum-vs-g``: omega, geff_start, geff_stop, geff_count
* ``validate-adiabatic``: horizon, delta, Delta
* ``eigenmodes``: delta, Delta

All frequencies and rates are in units of omega_m with hbar = 1.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, fields as dc_fields

import numpy as np

from . import __version__
from .analytic import position_variance, s_max, spectrum_analytic
from .dynamics import effective_variance_series, validate_adiabatic_chain
from .model import ModelParams, atomic_coupling_spectrum
from .spectrum import default_omega_grid, spectrum_numeric, trend_vs_geff

__all__ = ["ConfigError", "RunConfig", "parse_config", "run", "main"]

COMMANDS = (
    "smax-sweep",
    "time-trace",
    "spectrum",
    "spectrum-vs-g",
    "validate-adiabatic",
    "eigenmodes",
)

_PARAM_KEYS = tuple(f.name for f in dc_fields(ModelParams))

# key -> declared type; parsing is strict (ints reject decimals, bools
# accept only true/false)
_KEY_TYPES = {
    "command": str,
    "output": str,
    "geff": float,
    "geff_start": float,
    "geff_stop": float,
    "geff_count": int,
    "time_start": float,
    "time_stop": float,
    "time_count": int,
    "omega": float,
    "omega_start": float,
    "omega_stop": float,
    "omega_count": int,
    "horizon": float,
    "n_times": int,
    "d_cav": int,
    "d_mech": int,
    "d_cav_lindblad": int,
    "d_mech_lindblad": int,
    "lindblad_rtol": float,
    "include_lindblad": bool,
    "atom_state": str,
    "seed": int,
}
_KEY_TYPES.update({name: float for name in _PARAM_KEYS})

_REQUIRED = {
    "smax-sweep": ("geff_start", "geff_stop", "geff_count"),
    "time-trace": ("geff", "time_start", "time_stop", "time_count"),
    "spectrum": ("geff",),
    "spectrum-vs-g": ("omega", "geff_start", "geff_stop", "geff_count"),
    "validate-adiabatic": ("horizon", "delta", "Delta"),
    "eigenmodes": ("delta", "Delta"),
}

_GRIDS = (("geff_start", "geff_stop", "geff_count"),
          ("time_start", "time_stop", "time_count"),
          ("omega_start", "omega_stop", "omega_count"))


class ConfigError(Exception):
    """Config rejected; `line` is the 1-based offending line when known."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line


@dataclass
class RunConfig:
    command: str
    output: str
    params: ModelParams
    options: dict = field(default_factory=dict)
    key_lines: dict = field(default_factory=dict)


def _convert(key: str, raw: str, line: int):
    want = _KEY_TYPES[key]
    if want is str:
        return raw
    if want is bool:
        if raw in ("true", "false"):
            return raw == "true"
        raise ConfigError(f"expected true/false for '{key}', got '{raw}'", line)
    if want is int:
        try:
            return int(raw, 10)
        except ValueError:
            raise ConfigError(f"expected integer for '{key}', got '{raw}'", line) from None
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"expected number for '{key}', got '{raw}'", line) from None


def parse_config(text: str) -> RunConfig:
    """Parse and validate ``key = value`` config text into a RunConfig.

    Raises ConfigError, carrying the offending line number, for unknown or
    duplicate keys, malformed lines, bad value types, out-of-domain
    parameter values, degenerate grids, and keys missing for the chosen
    command (the command line is cited for those).
    """
    entries: dict = {}
    lines: dict = {}
    for lineno, rawline in enumerate(text.splitlines(), start=1):
        s = rawline.split("#", 1)[0].strip()
        if not s:
            continue
        if "=" not in s:
            raise ConfigError(f"expected 'key = value', got '{s}'", lineno)
        key, _, value = s.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _KEY_TYPES:
            raise ConfigError(f"unknown key '{key}'", lineno)
        if key in entries:
            raise ConfigError(f"duplicate key '{key}' (first set on line {lines[key]})", lineno)
        if value == "":
            raise ConfigError(f"empty value for '{key}'", lineno)
        entries[key] = _convert(key, value, lineno)
        lines[key] = lineno
        # model-parameter domain checks, reported at the offending line
        if key in _PARAM_KEYS:
            try:
                ModelParams(**{key: entries[key]})
            except ValueError as e:
                raise ConfigError(str(e), lineno) from None
        if key == "atom_state":
            try:
                _parse_atom_state(value)
            except ValueError as e:
                raise ConfigError(str(e), lineno) from None
        if key == "command" and value not in COMMANDS:
            raise ConfigError(
                f"unknown command '{value}' (choose from {', '.join(COMMANDS)})", lineno
            )

    if "command" not in entries:
        raise ConfigError("missing key 'command'")
    command = entries["command"]
    if "output" not in entries:
        raise ConfigError(f"command '{command}' requires key 'output'", lines["command"])
    for key in _REQUIRED[command]:
        if key not in entries:
            raise ConfigError(f"command '{command}' requires key '{key}'", lines["command"])

    for start, stop, count in _GRIDS:
        if count in entries and entries[count] < 2:
            raise ConfigError(f"'{count}' must be >= 2, got {entries[count]}", lines[count])
        present = [k for k in (start, stop, count) if k in entries]
        if present and len(present) < 3:
            missing = next(k for k in (start, stop, count) if k not in entries)
            raise ConfigError(f"grid key '{missing}' missing (have {', '.join(present)})",
                              lines[present[0]])
        if len(present) == 3 and not entries[stop] > entries[start]:
            raise ConfigError(f"'{stop}' must exceed '{start}'", lines[stop])

    params = ModelParams(**{k: entries[k] for k in _PARAM_KEYS if k in entries})
    options = {k: v for k, v in entries.items() if k not in _PARAM_KEYS and k not in ("command", "output")}
    return RunConfig(command=command, output=entries["output"], params=params,
                     options=options, key_lines=lines)


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return f"{float(x):.12g}"


def _write_csv(path: str, meta: dict, extra: list, header: list, rows: list):
    out = [f"# optosqueeze {__version__}",
           "# units: hbar = 1; frequencies and rates in units of omega_m"]
    out += [f"# {k} = {_fmt(v)}" for k, v in sorted(meta.items())]
    out += extra
    out.append(",".join(header))
    out += [",".join(_fmt(v) for v in row) for row in rows]
    with open(path, "w", newline="\n") as f:
        f.write("\n".join(out) + "\n")


def _base_meta(cfg: RunConfig) -> dict:
    meta = {"command": cfg.command, "output": cfg.output}
    for f in dc_fields(ModelParams):
        meta[f.name] = getattr(cfg.params, f.name)
    for k, v in cfg.options.items():
        meta[k] = v
    return meta


def _run_smax_sweep(cfg: RunConfig):
    o = cfg.options
    grid = np.linspace(o["geff_start"], o["geff_stop"], o["geff_count"])
    rows = [(g, s_max(g, cfg.params.omega_m)) for g in grid]
    return ["g_eff", "s_max_db"], rows, {}, []


def _run_time_trace(cfg: RunConfig):
    p, o = cfg.params, cfg.options
    times = np.linspace(o["time_start"], o["time_stop"], o["time_count"])
    closed = [position_variance(o["geff"], p.omega_m, p.nbar, t) for t in times]
    ts = effective_variance_series(o["geff"], p.omega_m, p.nbar, times,
                                   d_start=o.get("d_mech"))
    rows = list(zip(times, ts.values, closed))
    meta = {"d_mech_used": ts.meta["d_mech"],
            "tail_max": max(ts.meta["tail_max"].values())}
    return ["t", "variance_numeric", "variance_closed_form"], rows, meta, []


def _run_spectrum(cfg: RunConfig):
    p, o = cfg.params, cfg.options
    if "omega_count" in o:
        omegas = np.linspace(o["omega_start"], o["omega_stop"], o["omega_count"])
    else:
        omegas = default_omega_grid(p.omega_m)
    series = spectrum_numeric(p, o["geff"], omegas)
    closed = [spectrum_analytic(p, o["geff"], w) for w in omegas]
    rows = [(w, v, c.variance, c.P, c.Q)
            for w, v, c in zip(omegas, series.variances, closed)]
    meta = {"n_peaks": len(series.peaks)}
    extra = [f"# peak = {_fmt(w)},{_fmt(v)}" for w, v in series.peaks]
    return ["omega", "variance_numeric", "variance_closed_form", "P", "Q"], rows, meta, extra


def _run_spectrum_vs_g(cfg: RunConfig):
    p, o = cfg.params, cfg.options
    grid = np.linspace(o["geff_start"], o["geff_stop"], o["geff_count"])
    series = trend_vs_geff(p, o["omega"], grid)
    rows = list(zip(series.omegas, series.variances))
    return ["g_eff", "variance_numeric"], rows, {"monotone": series.meta["monotone"]}, []


def _parse_atom_state(raw: str):
    if raw in ("e1", "e2"):
        return raw
    try:
        comps = [float(x) for x in raw.split(",")]
    except ValueError:
        raise ValueError(f"atom_state must be e1, e2, or comma-separated reals, got '{raw}'") from None
    if len(comps) not in (2, 3):
        raise ValueError(f"atom_state vector needs 2 or 3 components, got {len(comps)}")
    return np.array(comps)


def _run_validate_adiabatic(cfg: RunConfig):
    p, o = cfg.params, cfg.options
    atom = _parse_atom_state(o.get("atom_state", "e1"))
    kwargs = {}
    if "n_times" in o:
        kwargs["n_times"] = o["n_times"]
    if "d_cav" in o:
        kwargs["d_cav"] = o["d_cav"]
    if "d_mech" in o:
        kwargs["d_mech"] = o["d_mech"]
    if "d_cav_lindblad" in o or "d_mech_lindblad" in o:
        kwargs["lindblad_dims"] = (o.get("d_cav_lindblad", min(o.get("d_cav", 8), 4)),
                                   o.get("d_mech_lindblad", o.get("d_mech", 16)))
    if "lindblad_rtol" in o:
        kwargs["lindblad_rtol"] = o["lindblad_rtol"]
        kwargs["lindblad_atol"] = o["lindblad_rtol"] * 1e-2
    rep = validate_adiabatic_chain(p, atom, o["horizon"],
                                   include_lindblad=o.get("include_lindblad", False), **kwargs)
    rows = []
    for k in sorted(rep.ratios):
        rows.append((f"ratio_{k}", rep.ratios[k]))
    for k in sorted(rep.deviations):
        rows.append((f"deviation_{k}", rep.deviations[k]))
    rows.append(("stark_winner", rep.stark_winner))
    rows.append(("atom_weight_e1", rep.atom_weights[0]))
    rows.append(("atom_weight_e2", rep.atom_weights[1]))
    rows.append(("d_cav_used", rep.dims["d_cav"]))
    rows.append(("d_mech_used", rep.dims["d_mech"]))
    if "lindblad" in rep.dims:
        rows.append(("d_cav_lindblad", rep.dims["lindblad"][0]))
        rows.append(("d_mech_lindblad", rep.dims["lindblad"][1]))
    for leg in sorted(rep.tails):
        rows.append((f"tail_{leg}", max(rep.tails[leg].values())))
    if rep.smax_closed is not None:
        rows.append(("smax_closed_db", rep.smax_closed))
        rows.append(("smax_open_db", rep.smax_open))
        rows.append(("smax_degradation", rep.smax_degradation))
    return ["quantity", "value"], rows, {}, []


def _run_eigenmodes(cfg: RunConfig):
    spec = atomic_coupling_spectrum(cfg.params)
    rows = [
        (1, spec.lambda1, spec.g_eff_1, spec.e1[0], spec.e1[1]),
        (2, spec.lambda2, spec.g_eff_2, spec.e2[0], spec.e2[1]),
    ]
    meta = {"alpha": spec.alpha}
    return ["branch", "lambda", "g_eff", "e_component_0", "e_component_1"], rows, meta, []


_RUNNERS = {
    "smax-sweep": _run_smax_sweep,
    "time-trace": _run_time_trace,
    "spectrum": _run_spectrum,
    "spectrum-vs-g": _run_spectrum_vs_g,
    "validate-adiabatic": _run_validate_adiabatic,
    "eigenmodes": _run_eigenmodes,
}


def run(cfg: RunConfig) -> str:
    """Execute a parsed config and write its CSV; returns the output path.

    Physics-domain violations (unstable regime, overdamped doublet,
    truncation cap) propagate as exceptions; `main` maps them to exit
    status 1.
    """
    header, rows, run_meta, extra = _RUNNERS[cfg.command](cfg)
    meta = _base_meta(cfg)
    meta.update(run_meta)
    meta["rows"] = len(rows)
    _write_csv(cfg.output, meta, extra, header, rows)
    return cfg.output


def main(argv=None) -> int:
    args = sys.argv[1:] if argv is None else list(argv)
    if args and args[0] in ("-h", "--help"):
        print(f"usage: optosqueeze <config-path>\n\n{__doc__}")
        return 0
    if len(args) != 1:
        print("usage: optosqueeze <config-path>", file=sys.stderr)
        return 2
    try:
        with open(args[0], encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    try:
        cfg = parse_config(text)
        path = run(cfg)
    except ConfigError as e:
        where = f"line {e.line}: " if e.line is not None else ""
        print(f"config error: {where}{e}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
