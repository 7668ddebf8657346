"""Command-line front end.

Every subcommand reads an optional JSON ``--config`` whose keys are the long
flag names (``k_re``, ``bc``, ...); flags given on the command line override
it.  Outputs go to ``--out`` (a directory) and start with a metadata header
holding the package version and a hash of the resolved configuration.  CSV
files carry it as ``#`` comment lines, JSON files under a ``"header"`` key.

Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure.
"""

import argparse
import hashlib
import json
import logging
import math
import os
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__, diffeo, fields, panels, solver
from .errors import CornerwaveError, InvalidArgumentError
from .geometry import Polygon, SmoothingKernel, round_polygon

logger = logging.getLogger("cornerwave")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

# keys that do not change results and are left out of the config hash
_UNHASHED = ("out", "jobs", "config", "verbose", "deterministic")


class UsageError(Exception):
    """Bad configuration; maps to exit code 2."""


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------
@dataclass
class ExperimentConfig:
    geometry: str = None
    h: list = field(default_factory=list)
    kernel: str = "poly:8"
    k_re: float = None
    k_im: float = 0.0
    bc: str = "dirichlet"
    phi: float = 0.0
    kind: str = "bi"
    radius: float = 10.0
    samples: int = fields.DEFAULT_SAMPLES
    tol: float = panels.DEFAULT_TOL
    jobs: int = 1
    out: str = "."
    reference: bool = False
    verify: bool = False
    source: list = None
    method: str = "harmonic"
    deterministic: bool = False

    def validate(self, command):
        if self.h and any(b >= a for a, b in zip(self.h, self.h[1:])):
            raise UsageError(f"--h values must be strictly decreasing, got {self.h}")
        if any(not (x > 0) for x in self.h):
            raise UsageError("--h values must be positive")
        if command != "diffeo" or self.geometry is not None:
            if self.geometry is None:
                raise UsageError("--geometry is required")
            if not os.path.isfile(self.geometry):
                raise UsageError(f"geometry file not found: {self.geometry}")
        if command in ("discretize", "solve", "xsection", "converge") and self.k_re is None:
            raise UsageError("--k-re is required")
        if self.bc not in ("dirichlet", "neumann"):
            raise UsageError(f"--bc must be dirichlet or neumann, got {self.bc!r}")
        if self.kind not in ("bi", "mono", "far"):
            raise UsageError(f"--kind must be bi, mono or far, got {self.kind!r}")
        if self.jobs < 1:
            raise UsageError("--jobs must be at least 1")
        if self.samples < 8:
            raise UsageError("--samples must be at least 8")
        try:
            SmoothingKernel.parse(self.kernel)
        except InvalidArgumentError as exc:
            raise UsageError(str(exc)) from exc

    @property
    def k(self):
        return complex(self.k_re, self.k_im)

    def hashed(self):
        d = {k: v for k, v in asdict(self).items() if k not in _UNHASHED}
        if self.geometry and os.path.isfile(self.geometry):
            with open(self.geometry, "rb") as fh:
                d["geometry_sha256"] = hashlib.sha256(fh.read()).hexdigest()
            d["geometry"] = os.path.basename(self.geometry)
        return d

    def digest(self):
        blob = json.dumps(self.hashed(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _parse_floats(text):
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def load_config(args):
    """Merge ``--config`` file values with explicit flags."""
    cfg = ExperimentConfig()
    names = {f.name for f in cfg.__dataclass_fields__.values()}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"config is not valid JSON: {exc}") from exc
        unknown = set(data) - names
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        for key, val in data.items():
            setattr(cfg, key, val)
        if "h" in data:
            cfg.h = _parse_floats(data["h"])
    for key in names:
        val = getattr(args, key, None)
        if val is not None:
            setattr(cfg, key, val)
    cfg.validate(args.command)
    return cfg


# ---------------------------------------------------------------------------
# Geometry files
# ---------------------------------------------------------------------------
def read_geometry(path):
    """Parse a geometry JSON file.

    Accepted shapes: ``{"vertices": [[x, y], ...]}``, ``{"circle": {"radius": r,
    "center": [x, y]}}``, ``{"ellipse": {"a": a, "b": b}}`` and
    ``{"support": {"cosines": {"n": a_n}}}`` or ``{"support": "smoothed-square"}``.
    The last three are only meaningful for ``diffeo``.
    """
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read geometry: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"geometry is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("geometry JSON must be an object")
    if "vertices" in data:
        return "polygon", Polygon(np.asarray(data["vertices"], dtype=float))
    for key in ("circle", "ellipse", "support"):
        if key in data:
            return key, data[key]
    raise UsageError('geometry JSON needs one of "vertices", "circle", "ellipse", "support"')


def _circle_args(spec):
    return float(spec.get("radius", 1.0)), tuple(spec.get("center", (0.0, 0.0)))


def _geometry_source(cfg, h):
    kind, geo = read_geometry(cfg.geometry)
    if kind == "circle":
        return solver.GeometrySource.circle(*_circle_args(geo))
    if kind != "polygon":
        raise UsageError(f"{kind} geometry is only supported by the diffeo subcommand")
    if cfg.reference or h is None:
        return solver.GeometrySource.corner_reference(geo)
    return solver.GeometrySource.smoothed(geo, h, SmoothingKernel.parse(cfg.kernel))


def _single_h(cfg):
    if cfg.reference:
        return None
    if len(cfg.h) > 1:
        raise UsageError("this subcommand takes a single --h value")
    return cfg.h[0] if cfg.h else None


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------
def header(cfg, command, extra=None):
    meta = {"tool": "cornerwave", "version": __version__, "command": command,
            "config_sha256": cfg.digest(), "config": cfg.hashed()}
    if extra:
        meta.update(extra)
    return meta


def _clean(obj):
    """JSON-ready copy: complex -> [re, im], numpy scalars -> Python, non-finite -> strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [_clean(obj.real), _clean(obj.imag)]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def write_atomic(path, text):
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, meta, payload):
    if "header" in payload:
        raise ValueError("payload must not use the reserved key 'header'")
    body = {"header": _clean(meta), **_clean(payload)}
    write_atomic(path, json.dumps(body, indent=2, sort_keys=True) + "\n")
    logger.info("wrote %s", path)


def write_csv(path, meta, csv_text):
    head = "".join(f"# {line}\n" for line in json.dumps(_clean(meta), sort_keys=True, indent=1).splitlines())
    write_atomic(path, head + csv_text)
    logger.info("wrote %s", path)


def _h_tag(h):
    """File-name tag: ``h0.1`` for a rounded polygon, ``exact`` otherwise."""
    return "exact" if h is None else f"h{h:g}"


def _strip_timings(info, cfg):
    if cfg.deterministic:
        return {k: v for k, v in info.items() if not k.endswith("seconds")}
    return info


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------
def cmd_smooth(cfg):
    kind, poly = read_geometry(cfg.geometry)
    if kind != "polygon":
        raise UsageError("smooth needs a polygon geometry")
    if not cfg.h:
        raise UsageError("smooth needs at least one --h value")
    kernel = SmoothingKernel.parse(cfg.kernel)
    for h in cfg.h:
        curve = round_polygon(poly, h, kernel)
        meta = header(cfg, "smooth", {"h": h})
        write_json(os.path.join(cfg.out, f"curve_{_h_tag(h)}.json"), meta, curve.to_dict())
        write_csv(os.path.join(cfg.out, f"polyline_{_h_tag(h)}.csv"), meta, curve.polyline_csv(cfg.samples))
    return EXIT_OK


def cmd_discretize(cfg):
    h = _single_h(cfg)
    prob = solver.ScatteringProblem(_geometry_source(cfg, h), cfg.bc, cfg.k, solver.PlaneWave(cfg.phi), tol=cfg.tol)
    mesh = solver.build_mesh(prob)
    meta = header(cfg, "discretize", {"h": h, "n_nodes": mesh.n_nodes, "n_panels": mesh.n_panels,
                                      "perimeter": mesh.perimeter})
    write_csv(os.path.join(cfg.out, f"mesh_{_h_tag(h)}.csv"), meta, mesh.to_csv())
    return EXIT_OK


def _problem(cfg, h, incidence=None):
    return solver.ScatteringProblem(_geometry_source(cfg, h), cfg.bc, cfg.k, incidence or solver.PlaneWave(cfg.phi),
                                    tol=cfg.tol)


def cmd_solve(cfg):
    h = _single_h(cfg)
    prob = _problem(cfg, h)
    t0 = time.perf_counter()
    fac = solver.factorize(prob, jobs=cfg.jobs)
    dens = fac.solve()
    extra = {"h": h}
    if cfg.verify:
        x0 = tuple(cfg.source) if cfg.source else tuple(panels.interior_point(fac.mesh))
        vprob = prob.with_incidence(solver.PointSource(x0))
        extra["verification"] = {"source": list(x0),
                                 "max_relative_error": solver.verify_known_solution(vprob, mesh=fac.mesh,
                                                                                    jobs=cfg.jobs)}
    extra["wall_seconds"] = time.perf_counter() - t0
    info = _strip_timings({**dens.info, **extra}, cfg)
    meta = header(cfg, "solve", {"h": h})
    write_csv(os.path.join(cfg.out, f"density_{_h_tag(h)}.csv"), meta, dens.to_csv())
    write_json(os.path.join(cfg.out, f"solve_{_h_tag(h)}.json"), meta,
               {"problem": prob.to_dict(), "result": info})
    return EXIT_OK


def cmd_xsection(cfg):
    h = _single_h(cfg)
    prob = _problem(cfg, h)
    if cfg.kind == "mono":
        cs = fields.cross_section_mono(prob, cfg.radius, cfg.samples, jobs=cfg.jobs)
    else:
        dens = solver.solve(prob, jobs=cfg.jobs)
        if cfg.kind == "bi":
            cs = fields.cross_section_near(dens, cfg.radius, cfg.samples, jobs=cfg.jobs)
        else:
            cs = fields.cross_section_far(dens, cfg.samples)
    meta = header(cfg, "xsection", {"h": h, "kind": cs.kind, "radius": cs.radius, **cs.metadata})
    write_csv(os.path.join(cfg.out, f"xsection_{cfg.kind}_{_h_tag(h)}.csv"), meta, cs.to_csv())
    return EXIT_OK


def cmd_converge(cfg):
    kind, poly = read_geometry(cfg.geometry)
    if kind != "polygon":
        raise UsageError("converge needs a polygon geometry")
    if len(cfg.h) < 1:
        raise UsageError("converge needs a list of --h values")
    path = os.path.join(cfg.out, "convergence.json")
    meta = header(cfg, "converge")

    def save(record, status):
        d = record.to_dict()
        d["status"] = status
        write_json(path, meta, d)

    state = {"record": fields.ConvergenceRecord([])}

    def on_row(record):
        state["record"] = record
        save(record, "partial")

    try:
        record = fields.convergence_study(poly, cfg.bc, cfg.k, cfg.phi, cfg.h, SmoothingKernel.parse(cfg.kernel),
                                          d=cfg.radius, m=cfg.samples, tol=cfg.tol, jobs=cfg.jobs, on_row=on_row)
    except Exception:
        save(state["record"], "failed")
        raise
    save(record, "complete")
    return EXIT_OK


def _diffeo_map(cfg):
    """Boundary map and, for the Gauss-map method, the support function."""
    if cfg.geometry is None:
        raise UsageError("diffeo needs --geometry")
    kind, geo = read_geometry(cfg.geometry)
    if cfg.method == "gauss-map":
        if kind == "support":
            if geo == "smoothed-square":
                g = diffeo.smoothed_square_support()
            else:
                g = diffeo.SupportFunction.from_cosines({int(n): float(a) for n, a in geo["cosines"].items()})
        elif kind == "circle":
            g = diffeo.SupportFunction.constant(_circle_args(geo)[0])
        elif kind == "ellipse":
            g = diffeo.ellipse_support(float(geo["a"]), float(geo["b"]))
        else:
            raise UsageError("the gauss-map method needs a support, circle or ellipse geometry")
        g.check_convex()
        return g.boundary_map(), g
    if kind == "circle":
        r, c = _circle_args(geo)
        return diffeo.circle_map(r, c), None
    if kind == "ellipse":
        return diffeo.ellipse_map(float(geo["a"]), float(geo["b"])), None
    if kind == "polygon":
        if not cfg.h:
            raise UsageError("a polygon boundary needs --h for rounding")
        return diffeo.arclength_map(round_polygon(geo, _single_h(cfg), SmoothingKernel.parse(cfg.kernel))), None
    raise UsageError("the harmonic method needs a circle, ellipse or polygon geometry")


def cmd_diffeo(cfg):
    if cfg.method not in ("harmonic", "gauss-map"):
        raise UsageError(f"--method must be harmonic or gauss-map, got {cfg.method!r}")
    bmap, g = _diffeo_map(cfg)
    n_r = max(2, int(round(math.sqrt(cfg.samples))))
    n_t = max(8, cfg.samples // n_r)
    r = np.linspace(0.0, 1.0, n_r)
    th = 2 * math.pi * np.arange(n_t) / n_t
    rr, tt = np.meshgrid(r, th, indexing="ij")
    pts = diffeo.harmonic_extension(bmap, rr, tt)
    meta = header(cfg, "diffeo", {"order": bmap.order})
    payload = {"boundary_map": json.loads(bmap.to_json())}
    if g is not None:
        payload["support_function"] = json.loads(g.to_json())
    write_json(os.path.join(cfg.out, f"diffeo_{cfg.method}.json"), meta, payload)
    write_csv(os.path.join(cfg.out, f"diffeo_{cfg.method}.csv"), meta, diffeo.sample_csv(pts, rr, tt))
    return EXIT_OK


COMMANDS = {
    "smooth": cmd_smooth,
    "discretize": cmd_discretize,
    "solve": cmd_solve,
    "xsection": cmd_xsection,
    "converge": cmd_converge,
    "diffeo": cmd_diffeo,
}


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------
class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file of defaults; flags override it")
    common.add_argument("--geometry", help="geometry JSON file")
    common.add_argument("--h", type=_parse_floats, help="rounding length(s), comma separated, decreasing")
    common.add_argument("--kernel", help="smoothing kernel: poly:k or gauss")
    common.add_argument("--k-re", dest="k_re", type=float, help="real part of the wavenumber")
    common.add_argument("--k-im", dest="k_im", type=float, help="imaginary part of the wavenumber")
    common.add_argument("--bc", choices=("dirichlet", "neumann"))
    common.add_argument("--phi", type=float, help="incidence angle in radians")
    common.add_argument("--radius", type=float, help="radius of the evaluation circle")
    common.add_argument("--samples", type=int, help="number of samples")
    common.add_argument("--tol", type=float, help="panel resolution tolerance")
    common.add_argument("--jobs", type=int, help="worker threads")
    common.add_argument("--out", help="output directory")
    common.add_argument("--deterministic", action="store_const", const=True,
                        help="omit wall-clock timings so reruns are byte-identical")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="cornerwave", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"cornerwave {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("smooth", parents=[common], help="round polygon corners")
    p = sub.add_parser("discretize", parents=[common], help="build a panel mesh")
    p.add_argument("--reference", action="store_const", const=True, help="corner-refined mesh of the exact polygon")
    p = sub.add_parser("solve", parents=[common], help="solve one scattering problem")
    p.add_argument("--reference", action="store_const", const=True)
    p.add_argument("--verify", action="store_const", const=True, help="also run the point-source check")
    p.add_argument("--source", type=_parse_floats, help="interior point source x,y for --verify")
    p = sub.add_parser("xsection", parents=[common], help="cross section")
    p.add_argument("--reference", action="store_const", const=True)
    p.add_argument("--kind", choices=("bi", "mono", "far"))
    sub.add_parser("converge", parents=[common], help="h-sweep against the corner reference")
    p = sub.add_parser("diffeo", parents=[common], help="harmonic extension of a boundary map")
    p.add_argument("--method", choices=("harmonic", "gauss-map"))
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](cfg)
    except (UsageError, InvalidArgumentError) as exc:
        print(f"cornerwave {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CornerwaveError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"cornerwave {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
