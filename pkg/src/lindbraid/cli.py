"""Command-line front end.

One JSON configuration file drives every subcommand; ``--set key=value``
overrides individual entries with dotted paths (``--set model.omega_d=0.009``).
Environment variables are never consulted.  Each invocation writes exactly
one output file into the configured directory, named
``<command>_<hash>.<ext>`` where the hash digests the effective
configuration, so identical runs land on identical files.

Exit codes: 0 success, 1 configuration error, 2 numerical/tracking error.
Only ``simulate`` consumes randomness (from the configured seed); every
other command is bit-reproducible.
"""

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import fcs, reduce as reduce_mod, retrieve, trajectories
from .braid import classify, format_word, sweep
from .ep import duality_scan, find_ep, scan_transitions
from .errors import ConfigError, LindbraidError
from .model import ModelParams, lindbladian

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2

_MODEL_KEYS = {"gamma_b", "gamma_d", "omega_b", "omega_d", "r", "k"}
_GRID_KEYS = {"k_points", "omega_range", "time_grid", "k_list", "gamma_d_values"}
_TIME_GRID_KEYS = {"kind", "start", "stop", "num", "values"}
_SIM_KEYS = {"n_trajectories", "dt", "seed"}
_OUTPUT_KEYS = {"directory", "format"}
_TOP_KEYS = {"model", "grid", "simulate", "output"}

_DEFAULTS = {
    "model": {},
    "grid": {"k_points": 512, "omega_range": [0.001, 0.05],
             "time_grid": {"kind": "tcl", "values": [3.0, 5.0, 8.0]}},
    "simulate": {"n_trajectories": 1000, "dt": 0.02, "seed": 1},
    "output": {"directory": ".", "format": "csv"},
}


class RunConfig:
    """Validated run configuration (strict: unknown keys are rejected)."""

    def __init__(self, data: dict):
        _check_keys(data, _TOP_KEYS, "top level")
        merged = {k: dict(_DEFAULTS[k]) for k in _TOP_KEYS}
        for section, content in data.items():
            if not isinstance(content, dict):
                raise ConfigError(f"section {section!r} must be an object")
            merged[section].update(content)
        _check_keys(merged["model"], _MODEL_KEYS, "model")
        _check_keys(merged["grid"], _GRID_KEYS, "grid")
        _check_keys(merged["grid"].get("time_grid", {}), _TIME_GRID_KEYS, "grid.time_grid")
        _check_keys(merged["simulate"], _SIM_KEYS, "simulate")
        _check_keys(merged["output"], _OUTPUT_KEYS, "output")
        if merged["output"]["format"] not in ("csv", "json"):
            raise ConfigError(f"unknown output format {merged['output']['format']!r}")
        self.model = ModelParams(**merged["model"])  # validates physics bounds
        self.grid = merged["grid"]
        self.simulate = merged["simulate"]
        self.output = merged["output"]
        self._digest = hashlib.sha256(
            json.dumps(merged, sort_keys=True).encode()
        ).hexdigest()[:12]

    @property
    def digest(self) -> str:
        return self._digest

    def times(self) -> np.ndarray:
        spec = self.grid["time_grid"]
        t_cl = fcs.Rates.from_params(self.model).t_cl
        return fcs.time_grid(
            spec.get("kind", "tcl"), t_cl,
            **{k: v for k, v in spec.items() if k != "kind"},
        )


def _check_keys(data, allowed, where):
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def _coerce(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _apply_overrides(data: dict, overrides):
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        path, value = item.split("=", 1)
        keys = path.split(".")
        node = data
        for key in keys[:-1]:
            node = node.setdefault(key, {})
            if not isinstance(node, dict):
                raise ConfigError(f"cannot descend into {path!r}")
        node[keys[-1]] = _coerce(value)
    return data


# --- serialization --------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    if isinstance(value, (np.floating,)):
        return f"{float(value):.17g}"
    return str(value)


def _write_rows(cfg: RunConfig, command: str, header, rows) -> Path:
    outdir = Path(cfg.output["directory"])
    outdir.mkdir(parents=True, exist_ok=True)
    ext = cfg.output["format"]
    path = outdir / f"{command}_{cfg.digest}.{ext}"
    if ext == "csv":
        lines = [",".join(header)]
        lines += [",".join(_fmt(v) for v in row) for row in rows]
        path.write_text("\n".join(lines) + "\n")
    else:
        records = [
            {name: (float(v) if isinstance(v, (float, np.floating)) else v)
             for name, v in zip(header, row)}
            for row in rows
        ]
        path.write_text(json.dumps(records, indent=1) + "\n")
    return path


# --- subcommands -----------------------------------------------------------

def cmd_spectrum(cfg: RunConfig) -> Path:
    band_set = sweep(cfg.model, grid_size=int(cfg.grid["k_points"]))
    rows = []
    for band in range(band_set.strands.shape[1]):
        for k, lam in zip(band_set.k_grid, band_set.strands[:, band]):
            rows.append((k, band, lam.real, lam.imag))
    return _write_rows(cfg, "spectrum", ("k", "band", "re_lambda", "im_lambda"), rows)


def cmd_classify(cfg: RunConfig) -> Path:
    result = classify(cfg.model, grid_size=int(cfg.grid["k_points"]))

    def pair_index(value):
        # mixed-periodicity pairs carry no meaningful pairwise index
        return int(value) if np.isfinite(value) else "nan"

    row = (
        cfg.model.omega_d,
        result.nu_total,
        pair_index(result.nu_ab[0, 1]),
        pair_index(result.nu_ab[0, 2]),
        pair_index(result.nu_ab[1, 2]),
        format_word(result.word),
        result.class_label,
    )
    return _write_rows(
        cfg, "classify",
        ("omega_d", "nu_total", "nu_12", "nu_13", "nu_23", "word", "class"),
        [row],
    )


def cmd_epscan(cfg: RunConfig) -> Path:
    lo, hi = cfg.grid["omega_range"]
    records = scan_transitions(cfg.model, (float(lo), float(hi)))
    rows = [
        (r.omega_d_star, r.k_star, r.gap, r.order, r.transition_label or "")
        for r in records
    ]
    return _write_rows(cfg, "epscan", ("omega_d", "k", "gap", "order", "transition"), rows)


def cmd_duality(cfg: RunConfig) -> Path:
    gamma_values = cfg.grid.get("gamma_d_values") or [0.0, 0.0005, 0.001, 0.002]
    rows = []
    for gd, rec0, recpi, d0, dpi in duality_scan(cfg.model, gamma_values):
        rows.append((gd, d0, dpi))
    return _write_rows(
        cfg, "duality", ("gamma_d", "delta_omega_k0", "delta_omega_kpi"), rows
    )


def cmd_dynamics(cfg: RunConfig) -> Path:
    times = cfg.times()
    k = cfg.model.k
    series = fcs.pk(cfg.model, k, "G", times)
    rows = [
        (t, ttcl, v.real, v.imag)
        for t, ttcl, v in zip(series.times, series.times_tcl, series.values)
    ]
    return _write_rows(cfg, "dynamics", ("t", "t_over_tcl", "re_pk", "im_pk"), rows)


def cmd_pn(cfg: RunConfig) -> Path:
    times = cfg.times()
    hist = fcs.pn(cfg.model, "G", float(times[-1]))
    rows = [(n, p) for n, p in enumerate(hist.probs)]
    return _write_rows(cfg, "pn", ("n", "p_n"), rows)


def cmd_simulate(cfg: RunConfig) -> Path:
    times = cfg.times()
    t_max = float(times[-1])
    sim = cfg.simulate
    rows = []
    for idx in range(int(sim["n_trajectories"])):
        record = trajectories.simulate(
            cfg.model, "G", t_max, float(sim["dt"]), int(sim["seed"]), trajectory=idx
        )
        for t in record.jump_times:
            rows.append((idx, t))
    return _write_rows(cfg, "simulate", ("trajectory_id", "jump_time"), rows)


def cmd_retrieve(cfg: RunConfig) -> Path:
    k_list = cfg.grid.get("k_list") or [
        np.pi - 0.4, np.pi - 0.2, np.pi + 0.2, np.pi + 0.4
    ]
    t_cl = fcs.Rates.from_params(cfg.model).t_cl
    times = np.linspace(0.2 * t_cl, 140.0 * t_cl, 600)
    records, verdict = retrieve.reconstruct(cfg.model, k_list, times=times)
    rows = []
    for rec in records:
        rows.append((
            rec.k,
            rec.lambda1.real, rec.lambda1.imag,
            rec.lambda2.real, rec.lambda2.imag,
            rec.err_lambda1.real, rec.err_lambda1.imag,
            rec.err_lambda2.real, rec.err_lambda2.imag,
            rec.fit_window[0], rec.fit_window[1],
            verdict,
        ))
    return _write_rows(
        cfg, "retrieve",
        ("k", "re_l1", "im_l1", "re_l2", "im_l2",
         "err_re_l1", "err_im_l1", "err_re_l2", "err_im_l2",
         "window_lo", "window_hi", "verdict"),
        rows,
    )


def cmd_reduce(cfg: RunConfig) -> Path:
    reduced = reduce_mod.eliminate(lindbladian(cfg.model))
    rows = []
    for i in range(reduced.shape[0]):
        for j in range(reduced.shape[1]):
            rows.append((i, j, reduced[i, j].real, reduced[i, j].imag))
    return _write_rows(cfg, "reduce", ("row", "col", "re", "im"), rows)


_COMMANDS = {
    "spectrum": cmd_spectrum,
    "classify": cmd_classify,
    "epscan": cmd_epscan,
    "duality": cmd_duality,
    "dynamics": cmd_dynamics,
    "pn": cmd_pn,
    "simulate": cmd_simulate,
    "retrieve": cmd_retrieve,
    "reduce": cmd_reduce,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lbr",
        description="counting-field spectra, braids, exceptional points and "
                    "jump statistics of the monitored three-level system",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", type=Path, default=None,
                         help="JSON configuration file")
        cmd.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                         help="override a configuration entry (dotted path)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        data = {}
        if args.config is not None:
            try:
                data = json.loads(Path(args.config).read_text())
            except FileNotFoundError as exc:
                raise ConfigError(f"config file not found: {args.config}") from exc
            except json.JSONDecodeError as exc:
                raise ConfigError(f"malformed JSON in {args.config}: {exc}") from exc
        data = _apply_overrides(data, getattr(args, "set"))
        cfg = RunConfig(data)
    except (ConfigError, TypeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        path = _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LindbraidError as exc:
        print(f"{args.command} failed: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
