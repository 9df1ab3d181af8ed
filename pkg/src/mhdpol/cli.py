"""Command-line front end.

Every command reads one JSON scenario, writes CSV (17 significant digits)
preceded by ``#`` header lines, and maps failures to exit codes:
0 ok, 1 verification failure, 2 invalid physics or config, 3 ray stopped
early, 64 usage.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import shlex
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .background import BackgroundField, equilibrium_residual, equilibrium_tolerance, eval_background
from .classify import classify_point
from .errors import MhdpolError, RayStopped
from .geometry import dencker_transport, initial_polarization, sheet_q, trace_ray
from .spectra import wave_speeds
from .symbols import PhasePoint, q_scale
from .verify import run_identity_suite

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_INVALID = 2
EXIT_STOPPED = 3
EXIT_USAGE = 64

DEFAULT_SAMPLES = 64


class ConfigError(MhdpolError):
    """The scenario document is malformed."""


class UsageError(Exception):
    pass


@dataclass
class Scenario:
    """Parsed scenario document.

    Missing sections fall back to the defaults below; unknown keys are an
    error so typos do not pass silently.
    """

    background: BackgroundField
    t: float = 0.0
    x: np.ndarray = field(default_factory=lambda: np.zeros(3))
    tau: float | None = None
    xi: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))
    xis: list = field(default_factory=list)
    sheet: int = 3
    span: float = 1.0
    tol: float = 1e-9
    samples: int = DEFAULT_SAMPLES
    project: bool = True
    initial: object = "auto"
    nTheta: int = 360
    normal: np.ndarray | None = None
    csv: str | None = None
    svg: str | None = None
    seed: int = 42
    verifySamples: int = 1000
    digest: str = ""

    def point(self) -> PhasePoint:
        return PhasePoint(self.t, self.x, 0.0 if self.tau is None else self.tau, self.xi)


_SECTIONS = {
    "background": {"rho", "p", "H", "gamma"},
    "point": {"t", "x", "tau", "xi"},
    "xi": None,
    "ray": {"sheet", "span", "tol", "samples", "project"},
    "transport": {"initial"},
    "friedrichs": {"nTheta", "normal"},
    "output": {"csv", "svg"},
    "verify": {"seed", "samples"},
}

_DEFAULT_BACKGROUND = {"rho": 1.0, "p": 1.0, "H": [1.0, 0.0, 0.0], "gamma": 5.0 / 3.0}


def _vector(v, n, what):
    try:
        arr = np.asarray(v, dtype=float).reshape(n)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{what} must be {n} numbers") from exc
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{what} must be finite")
    return arr


def _check_keys(doc, allowed, where):
    extra = set(doc) - allowed
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(extra))}")


def scenario_digest(doc: dict) -> str:
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def parse_scenario(doc: dict) -> Scenario:
    """Build a :class:`Scenario` from a decoded JSON document."""
    if not isinstance(doc, dict):
        raise ConfigError("scenario must be a JSON object")
    _check_keys(doc, set(_SECTIONS), "scenario")
    for key, allowed in _SECTIONS.items():
        if allowed is not None and key in doc:
            if not isinstance(doc[key], dict):
                raise ConfigError(f"'{key}' must be an object")
            _check_keys(doc[key], allowed, key)
    b = dict(_DEFAULT_BACKGROUND, **doc.get("background", {}))
    H = b["H"]
    if not isinstance(H, (list, tuple)) or len(H) != 3:
        raise ConfigError("background.H must have three components")
    sc = Scenario(BackgroundField.from_values(b["rho"], b["p"], H, b["gamma"]))
    pt = doc.get("point", {})
    sc.t = float(pt.get("t", 0.0))
    sc.x = _vector(pt.get("x", [0, 0, 0]), 3, "point.x")
    sc.tau = None if pt.get("tau") is None else float(pt["tau"])
    sc.xi = _vector(pt.get("xi", [1, 0, 0]), 3, "point.xi")
    sc.xis = [_vector(v, 3, "xi") for v in doc.get("xi", [])]
    ray = doc.get("ray", {})
    sc.sheet = int(ray.get("sheet", 3))
    sc.span = float(ray.get("span", 1.0))
    sc.tol = float(ray.get("tol", 1e-9))
    sc.samples = int(ray.get("samples", DEFAULT_SAMPLES))
    sc.project = bool(ray.get("project", True))
    if sc.sheet not in (1, 2, 3):
        raise ConfigError("ray.sheet must be 1, 2 or 3")
    if not (sc.span > 0 and sc.tol > 0):
        raise ConfigError("ray.span and ray.tol must be positive")
    sc.initial = doc.get("transport", {}).get("initial", "auto")
    fr = doc.get("friedrichs", {})
    sc.nTheta = int(fr.get("nTheta", 360))
    sc.normal = None if fr.get("normal") is None else _vector(fr["normal"], 3, "friedrichs.normal")
    out = doc.get("output", {})
    sc.csv, sc.svg = out.get("csv"), out.get("svg")
    ver = doc.get("verify", {})
    sc.seed = int(ver.get("seed", 42))
    sc.verifySamples = int(ver.get("samples", 1000))
    sc.digest = scenario_digest(doc)
    return sc


def load_scenario(path: str | None) -> Scenario:
    if path is None:
        return parse_scenario({})
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return parse_scenario(doc)


# ---------------------------------------------------------------------------
# output


def fmt(v) -> str:
    return f"{float(v):.17g}"


class Table:
    """CSV rows with a ``#`` header block."""

    def __init__(self, header_lines, columns):
        self.header = list(header_lines)
        self.columns = list(columns)
        self.rows = []

    def add(self, values):
        self.rows.append(",".join(fmt(v) for v in values))

    def note(self, line):
        self.header.append(line)

    def render(self) -> str:
        lines = [f"# {h}" for h in self.header]
        lines.append(",".join(self.columns))
        lines.extend(self.rows)
        return "\n".join(lines) + "\n"


def _header(argv, sc: Scenario) -> list:
    return [f"mhdpol {__version__}", "command: mhdpol " + shlex.join(argv), f"scenario-sha256: {sc.digest}"]


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _equilibrium_warning(sc: Scenario, pt: PhasePoint):
    bg = eval_background(sc.background, pt.t, pt.x)
    r = float(np.linalg.norm(equilibrium_residual(sc.background, pt.x, pt.t)))
    if r > equilibrium_tolerance(bg):
        return (f"warning: background is not a static equilibrium at the start point "
                f"(|grad p + H x curl H| = {r:.3g}); the first-order symbol assumes equilibrium")
    return None


# ---------------------------------------------------------------------------
# commands


def cmd_speeds(sc: Scenario, argv) -> tuple:
    bg = eval_background(sc.background, sc.t, sc.x)
    table = Table(_header(argv, sc), ["xi_hat1", "xi_hat2", "xi_hat3", "c_s", "c_f", "c_A", "c", "h"])
    for xi in sc.xis or [sc.xi]:
        n = float(np.linalg.norm(xi))
        if n == 0.0:
            raise ConfigError("xi must be non-zero")
        ws = wave_speeds(bg, xi)
        table.add([*(xi / n), ws.cs, ws.cf, ws.ca, math.sqrt(ws.c2), math.sqrt(ws.h2)])
    return table.render(), EXIT_OK


def _plane_normal(H, normal):
    Hh = H / np.linalg.norm(H)
    if normal is None:
        normal = np.eye(3)[int(np.argmin(np.abs(Hh)))]
    n = normal - (normal @ Hh) * Hh
    if np.linalg.norm(n) < 1e-12:
        raise ConfigError("friedrichs.normal is parallel to H")
    return Hh, n / np.linalg.norm(n)


def friedrichs_table(sc: Scenario):
    """Speeds over ``xi_hat(theta) = cos(theta) H_hat + sin(theta) n``."""
    bg = eval_background(sc.background, sc.t, sc.x)
    if float(np.linalg.norm(bg.H)) == 0.0:
        raise ConfigError("the Friedrichs diagram needs a non-zero field H")
    Hh, n = _plane_normal(bg.H, sc.normal)
    theta = 2.0 * np.pi * np.arange(sc.nTheta) / sc.nTheta
    rows = []
    for th in theta:
        ws = wave_speeds(bg, math.cos(th) * Hh + math.sin(th) * n)
        rows.append((th, ws.cs, ws.ca, ws.cf))
    return np.array(rows)


def write_friedrichs_svg(rows, path: str) -> None:
    """Polar plot of the three phase-speed curves, deterministic SVG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "mhdpol"
    th = np.append(rows[:, 0], rows[0, 0] + 2.0 * np.pi)
    fig = plt.figure(figsize=(5, 5))
    ax = fig.add_subplot(projection="polar")
    for col, label in ((1, "slow"), (2, "Alfven"), (3, "fast")):
        ax.plot(th, np.append(rows[:, col], rows[0, col]), label=label)
    ax.set_title("phase speed, theta from H")
    ax.legend(loc="lower left", fontsize="small")
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def cmd_friedrichs(sc: Scenario, argv) -> tuple:
    if sc.nTheta < 1:
        raise ConfigError("friedrichs.nTheta must be positive")
    rows = friedrichs_table(sc)
    table = Table(_header(argv, sc), ["theta", "c_s", "c_A", "c_f"])
    for r in rows:
        table.add(r)
    if sc.svg:
        write_friedrichs_svg(rows, sc.svg)
        table.note(f"svg: {sc.svg}")
    return table.render(), EXIT_OK


def cmd_classify(sc: Scenario, argv) -> tuple:
    if sc.tau is None:
        raise ConfigError("classify needs point.tau")
    pt = sc.point()
    rep = classify_point(pt, eval_background(sc.background, pt.t, pt.x))
    lines = [f"# {h}" for h in _header(argv, sc)]
    lines.append(f"regime: {rep.regime.value}")
    lines.append(f"sheets: {' '.join(f'S{k}' for k in rep.sheets) if rep.sheets else '-'}")
    lines.append(f"kernel_dim: {rep.kernelDim}")
    lines.append(f"vanishing_order: {'-' if rep.vanishingOrder is None else rep.vanishingOrder}")
    for k in sorted(rep.witnesses):
        lines.append(f"witness {k}: {fmt(rep.witnesses[k])}")
    return "\n".join(lines) + "\n", EXIT_OK


_RAY_COLUMNS = ["s", "t", "x1", "x2", "x3", "tau", "xi1", "xi2", "xi3", "q_residual"]


def _start(sc: Scenario) -> PhasePoint:
    pt = sc.point()
    if sc.tau is None:
        if not sc.project:
            raise ConfigError("point.tau is required when ray.project is false")
        pt = pt.replace(tau=1.0)
    return pt


def _ray_or_partial(sc: Scenario, pt: PhasePoint):
    try:
        return trace_ray(pt, sc.sheet, sc.background, span=sc.span, tol=sc.tol,
                         nSamples=sc.samples, project=sc.project), None
    except RayStopped as exc:
        return exc.ray, exc


def _q_residual(sheet, z, B):
    pt = PhasePoint.from_array(z)
    bg = eval_background(B, pt.t, pt.x)
    return abs(sheet_q(sheet, pt, bg)) / q_scale(bg, pt.tau, pt.xi)


def _stopped(table: Table, stop: RayStopped) -> int:
    table.note(f"stopped: {stop.reason} at s = {fmt(stop.s_reached)}")
    return EXIT_STOPPED


def cmd_ray(sc: Scenario, argv) -> tuple:
    pt = _start(sc)
    table = Table(_header(argv, sc), _RAY_COLUMNS)
    ray, stop = _ray_or_partial(sc, pt)
    code = EXIT_OK
    if ray is not None:
        table.note(f"sheet: {ray.sheet} q_drift: {fmt(ray.qDrift)}")
        for s, z in zip(ray.s, ray.points):
            table.add([s, *z, _q_residual(ray.sheet, z, sc.background)])
    if stop is not None:
        code = _stopped(table, stop)
    return table.render(), code


def _initial(sc: Scenario, ray):
    if sc.initial == "auto":
        pt = PhasePoint.from_array(ray.points[0])
        return initial_polarization(pt, eval_background(sc.background, pt.t, pt.x))
    w = sc.initial
    if not isinstance(w, list) or len(w) != 3:
        raise ConfigError("transport.initial must be \"auto\" or three numbers or [re, im] pairs")
    try:
        return np.array([complex(*c) if isinstance(c, list) else complex(c) for c in w])
    except TypeError as exc:
        raise ConfigError("transport.initial entries must be numbers or [re, im] pairs") from exc


def cmd_transport(sc: Scenario, argv) -> tuple:
    pt = _start(sc)
    cols = _RAY_COLUMNS + [f"w{k}_{part}" for k in (1, 2, 3) for part in ("re", "im")]
    cols += ["kernel_residual"] + [f"dir{k}_{part}" for k in (1, 2, 3) for part in ("re", "im")]
    table = Table(_header(argv, sc), cols)
    warn = _equilibrium_warning(sc, pt)
    if warn:
        table.note(warn)
        print(warn, file=sys.stderr)
    ray, stop = _ray_or_partial(sc, pt)
    code = EXIT_OK
    if ray is not None and len(ray.s) > 1 and ray.s[-1] > 0.0:
        try:
            frame = dencker_transport(ray, w0=_initial(sc, ray))
        except RayStopped as exc:
            frame, stop = None, stop or exc
        if frame is not None:
            table.note(f"sheet: {ray.sheet} q_drift: {fmt(ray.qDrift)} "
                       f"max_kernel_residual: {fmt(frame.maxKernelResidual)}")
            for i, z in enumerate(frame.points):
                w, d = frame.w[i], frame.direction[i]
                table.add([frame.s[i], *z, _q_residual(ray.sheet, z, sc.background),
                           *np.column_stack([w.real, w.imag]).ravel(), frame.kernelResidual[i],
                           *np.column_stack([d.real, d.imag]).ravel()])
    if stop is not None:
        code = _stopped(table, stop)
    return table.render(), code


def cmd_verify(sc: Scenario, argv, seed, samples) -> tuple:
    rep = run_identity_suite(samples, seed)
    header = "".join(f"# {h}\n" for h in _header(argv, sc))
    return header + rep.to_text() + "\n", rep, (EXIT_OK if rep.passed else EXIT_VERIFY)


# ---------------------------------------------------------------------------
# entry point


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _floats(n):
    def parse(text):
        try:
            vals = [float(v) for v in text.split(",")]
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected {n} comma-separated numbers")
        if len(vals) != n or not all(math.isfinite(v) for v in vals):
            raise argparse.ArgumentTypeError(f"expected {n} comma-separated finite numbers")
        return vals
    return parse


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mhdpol", description="Characteristic structure of linearized ideal MHD.")
    p.add_argument("--version", action="version", version=f"mhdpol {__version__}")
    p.add_argument("command", choices=["speeds", "friedrichs", "classify", "ray", "transport", "verify"])
    p.add_argument("--config", help="JSON scenario file")
    p.add_argument("--xi", type=_floats(3), action="append", help="frequency a,b,c (repeatable for speeds)")
    p.add_argument("--point", type=_floats(8), help="t,x1,x2,x3,tau,xi1,xi2,xi3")
    p.add_argument("--sheet", type=int, choices=[1, 2, 3])
    p.add_argument("--seed", type=int)
    p.add_argument("--samples", type=int, help="ray samples, or suite samples for verify")
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--svg", help="SVG path for friedrichs")
    p.add_argument("--ntheta", type=int, help="angles for friedrichs")
    return p


def _apply_overrides(sc: Scenario, args) -> None:
    if args.xi:
        sc.xis = [np.array(v) for v in args.xi]
        sc.xi = sc.xis[0]
    if args.point:
        sc.t, sc.x, sc.tau, sc.xi = args.point[0], np.array(args.point[1:4]), args.point[4], np.array(args.point[5:8])
    if args.sheet is not None:
        sc.sheet = args.sheet
    if args.samples is not None:
        sc.samples = args.samples if args.samples > 0 else DEFAULT_SAMPLES
    if args.ntheta is not None:
        sc.nTheta = args.ntheta
    if args.svg is not None:
        sc.svg = args.svg
    if args.out is not None:
        sc.csv = args.out


def run(argv) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command == "verify" and args.samples is not None and args.samples < 1:
            raise UsageError("--samples must be at least 1 for verify")
    except UsageError as exc:
        print(f"mhdpol: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        sc = load_scenario(args.config)
        if args.command == "verify":
            seed = sc.seed if args.seed is None else args.seed
            samples = sc.verifySamples if args.samples is None else args.samples
            text, rep, code = cmd_verify(sc, argv, seed, samples)
            sys.stdout.write(text)
            if args.out:
                _emit(rep.to_csv(), args.out)
            return code
        _apply_overrides(sc, args)
        cmd = {"speeds": cmd_speeds, "friedrichs": cmd_friedrichs, "classify": cmd_classify,
               "ray": cmd_ray, "transport": cmd_transport}[args.command]
        text, code = cmd(sc, argv)
        _emit(text, sc.csv)
        return code
    except MhdpolError as exc:
        print(f"mhdpol: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ValueError, TypeError, KeyError) as exc:
        print(f"mhdpol: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main(argv=None) -> int:
    return run(sys.argv[1:] if argv is None else list(argv))


if __name__ == "__main__":
    sys.exit(main())
