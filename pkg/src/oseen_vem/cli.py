"""Command-line entry point: ``oseen-vem {mesh,solve,convergence,spurious}``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from . import study
from .assembly import ProblemConfig, assemble
from .eigensolver import EigenRequest, Solver, solve_gevp
from .errors import EmptyDirichlet, InvalidDomain, OseenVEMError
from .mesh import DOMAINS, FamilyTag, MeshFamily, check_assumptions, generate_mesh, read_mesh, side_rule, write_mesh
from .vem_local import PhysicalParams

EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 1, 2, 3

SIDES = ("left", "right", "bottom", "top")


class ConfigError(ValueError):
    pass


@dataclass
class ProblemSection:
    domain: Optional[str] = None  # square, or (0,1)^2 for the spurious sweep
    gamma_neumann: Optional[list] = None  # Neumann sides; none means all-Dirichlet


@dataclass
class PhysicsSection:
    nu: float = 1.0
    beta: list = field(default_factory=lambda: [1.0, 0.0])
    alphaE: list = field(default_factory=lambda: [1.0])


@dataclass
class DiscretizationSection:
    family: str = "distorted"
    n: int = 16
    ns: list = field(default_factory=lambda: [16, 32, 64])
    seed: int = 0
    mesh: Optional[str] = None  # read this mesh file instead of generating


@dataclass
class SolveSection:
    k: Optional[int] = None  # 4, or 10 for the spurious sweep
    shift: Optional[list] = None  # 1, or 0.5 for the spurious sweep
    solver: str = "shift-invert"
    tau: float = 0.5
    refinement: bool = True


@dataclass
class OutputSection:
    out_dir: str = "."
    out: Optional[str] = None
    format: str = "csv"
    export: Optional[int] = None
    threads: Optional[int] = None


@dataclass
class RunConfig:
    """Effective configuration; defaults reproduce the convex all-Dirichlet test."""

    problem: ProblemSection = field(default_factory=ProblemSection)
    physics: PhysicsSection = field(default_factory=PhysicsSection)
    discretization: DiscretizationSection = field(default_factory=DiscretizationSection)
    solve: SolveSection = field(default_factory=SolveSection)
    output: OutputSection = field(default_factory=OutputSection)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        sections = {f.name: f.type for f in fields(cls)}
        out = cls()
        for name, values in (d or {}).items():
            if name not in sections:
                raise ConfigError(f"unknown config section {name!r}")
            sec = getattr(out, name)
            known = {f.name for f in fields(sec)}
            bad = set(values) - known
            if bad:
                raise ConfigError(f"unknown key(s) {sorted(bad)} in section {name!r}")
            setattr(out, name, replace(sec, **values))
        return out

    def resolved(self, command):
        """Fill command-dependent defaults and validate."""
        spurious = command == "spurious"
        p = self.problem
        domain = p.domain or ("square01" if spurious else "square")
        gamma = p.gamma_neumann
        if gamma is None:
            gamma = list(study.MIXED_NEUMANN_SIDES) if spurious else []
        k = self.solve.k or (10 if spurious else 4)
        shift = self.solve.shift or ([0.5, 0.0] if spurious else [1.0, 0.0])
        cfg = replace(
            self,
            problem=replace(p, domain=domain, gamma_neumann=sorted(set(gamma), key=SIDES.index)),
            solve=replace(self.solve, k=k, shift=shift),
        )
        cfg.validate()
        return cfg

    def validate(self):
        if self.problem.domain not in DOMAINS:
            raise ConfigError(f"unknown domain {self.problem.domain!r}; choose from {sorted(DOMAINS)}")
        bad = set(self.problem.gamma_neumann or []) - set(SIDES)
        if bad:
            raise ConfigError(f"unknown Neumann side(s) {sorted(bad)}")
        try:
            FamilyTag(self.discretization.family)
        except ValueError:
            raise ConfigError(f"unknown mesh family {self.discretization.family!r}") from None
        if self.discretization.n < 1 or any(n < 1 for n in self.discretization.ns):
            raise ConfigError("mesh resolution must be positive")
        if len(self.physics.beta) != 2:
            raise ConfigError("beta needs two components")
        if self.physics.nu <= 0 or any(a <= 0 for a in self.physics.alphaE):
            raise ConfigError("nu and alphaE must be positive")
        if self.solve.k < 1:
            raise ConfigError("k must be positive")
        if self.solve.solver not in {s.value for s in Solver}:
            raise ConfigError(f"unknown solver {self.solve.solver!r}")
        if self.output.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")

    # convenience views
    def params(self, alphaE=None):
        ph = self.physics
        return PhysicalParams(nu=ph.nu, beta=tuple(ph.beta), alphaE=ph.alphaE[0] if alphaE is None else alphaE)

    @property
    def shift(self):
        re, im = self.solve.shift
        return complex(re, im) if im else float(re)

    @property
    def family(self):
        return MeshFamily(self.discretization.family, seed=self.discretization.seed)

    @property
    def threads(self):
        return self.output.threads or os.cpu_count() or 1

    def bc(self):
        sides = self.problem.gamma_neumann
        if not sides:
            return None
        return side_rule(sides, DOMAINS[self.problem.domain])


# ---------------------------------------------------------------- parsing


def _floats(text, n=None):
    try:
        vals = [eval_fraction(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise argparse.ArgumentTypeError(f"expected {n} numbers, got {text!r}")
    return vals


def eval_fraction(token):
    token = token.strip()
    if "/" in token:
        num, den = token.split("/", 1)
        return float(num) / float(den)
    return float(token)


def _ints(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _shift(text):
    vals = _floats(text)
    if len(vals) == 1:
        return [vals[0], 0.0]
    if len(vals) != 2:
        raise argparse.ArgumentTypeError("shift is re or re,im")
    return vals


def _sides(text):
    if text.strip() in ("none", ""):
        return []
    return [s.strip() for s in text.split(",")]


# flag -> (section, key, type)
FLAGS = {
    "domain": ("problem", "domain", str),
    "gamma_neumann": ("problem", "gamma_neumann", _sides),
    "nu": ("physics", "nu", float),
    "beta": ("physics", "beta", lambda t: _floats(t, 2)),
    "alphaE": ("physics", "alphaE", _floats),
    "family": ("discretization", "family", str),
    "n": ("discretization", "n", int),
    "ns": ("discretization", "ns", _ints),
    "seed": ("discretization", "seed", int),
    "mesh": ("discretization", "mesh", str),
    "k": ("solve", "k", int),
    "shift": ("solve", "shift", _shift),
    "solver": ("solve", "solver", str),
    "tau": ("solve", "tau", float),
    "out_dir": ("output", "out_dir", str),
    "out": ("output", "out", str),
    "format": ("output", "format", str),
    "export": ("output", "export", int),
    "threads": ("output", "threads", int),
}


class _Parser(argparse.ArgumentParser):
    # unparseable flags are configuration errors (exit 1), not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON config file (or a JSON report); flags override it")
    common.add_argument("--save-config", dest="save_config", default=None,
                        help="write the effective configuration as JSON before running")
    for name, (_, _, typ) in FLAGS.items():
        common.add_argument("--" + name.replace("_", "-"), dest=name, type=typ, default=argparse.SUPPRESS)
    common.add_argument("--no-refinement", dest="no_refinement", action="store_true", default=argparse.SUPPRESS,
                        help="spurious: use only the stabilization-energy flag")
    parser = _Parser(prog="oseen-vem", description="Virtual element Oseen eigenvalue solver")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("mesh", parents=[common], help="generate and write a mesh")
    sub.add_parser("solve", parents=[common], help="compute eigenpairs on one mesh")
    sub.add_parser("convergence", parents=[common], help="refinement study with order fits")
    sub.add_parser("spurious", parents=[common], help="stabilization sweep on the mixed problem")
    return parser


def config_from_args(args):
    base = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fp:
                base = json.load(fp)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {args.config}: {exc}") from exc
        if "meta" in base:  # a JSON report carries its effective config
            base = base["meta"].get("config", {})
    cfg = RunConfig.from_dict(base)
    ns = vars(args)
    for name, (section, key, _) in FLAGS.items():
        if name in ns:
            setattr(cfg, section, replace(getattr(cfg, section), **{key: ns[name]}))
    if ns.get("no_refinement"):
        cfg.solve = replace(cfg.solve, refinement=False)
    return cfg.resolved(args.command)


# ---------------------------------------------------------------- commands


def _out_path(cfg, default_name):
    out_dir = Path(cfg.output.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return Path(cfg.output.out) if cfg.output.out else out_dir / default_name


def _meta(cfg, command):
    return {"command": command, "config": cfg.to_dict(), "seed": cfg.discretization.seed}


def _mesh(cfg):
    if cfg.discretization.mesh:
        return read_mesh(cfg.discretization.mesh)
    return generate_mesh(cfg.family, cfg.discretization.n, cfg.problem.domain)


def cmd_mesh(cfg):
    mesh = _mesh(cfg)
    path = _out_path(cfg, f"mesh_{cfg.discretization.family}_{cfg.discretization.n}.txt")
    write_mesh(mesh, path)
    rep = check_assumptions(mesh, gamma=0.01)
    print(f"polygons {mesh.n_polygons}  vertices {mesh.n_vertices}  edges {mesh.n_edges}  h {mesh.h:.6g}")
    print(f"min star ratio {rep.min_star_ratio:.4g}  min vertex distance ratio {rep.min_vertex_distance_ratio:.4g}")
    print(f"wrote {path}")
    return path


def cmd_solve(cfg):
    mesh = _mesh(cfg)
    system = assemble(mesh, ProblemConfig(cfg.params(), cfg.bc()))
    sol = solve_gevp(system, EigenRequest(k=cfg.solve.k, shift=cfg.shift, solver=cfg.solve.solver))
    header = ["i", "re", "im", "residual", "divergence", "rho"]
    rows = [
        [str(i + 1), f"{v.real:.10f}", f"{v.imag:.10f}", f"{r:.2e}", f"{d:.2e}", f"{q:.3f}"]
        for i, (v, r, d, q) in enumerate(zip(sol.values, sol.residual, sol.divergence, sol.stab_fraction))
    ]
    print(study.format_table(header, rows))
    stem = f"solve_{cfg.discretization.family}_{cfg.discretization.n}"
    path = _out_path(cfg, f"{stem}.{cfg.output.format}")
    if cfg.output.format == "csv":
        study._write_csv(path, header, rows)
    else:
        doc = {"eigenvalues": study._cpx(sol.values), "residual": sol.residual.tolist(),
               "divergence": sol.divergence.tolist(), "rho": sol.stab_fraction.tolist(),
               "meta": _meta(cfg, "solve")}
        with open(path, "w") as fp:
            json.dump(doc, fp, indent=2)
    if cfg.output.export is not None:
        vtk = Path(cfg.output.out_dir) / f"{stem}_mode{cfg.output.export}.vtk"
        study.export_eigenfunction(sol, cfg.output.export, system, vtk)
        print(f"wrote {vtk}")
    return sol


def cmd_convergence(cfg):
    st = study.run_convergence(
        cfg.family, cfg.discretization.ns, cfg.params(), k=cfg.solve.k, domain=cfg.problem.domain,
        bc=cfg.bc(), shift=cfg.shift, threads=cfg.threads, seed=cfg.discretization.seed,
    )
    print(study.format_table(*study.convergence_table(st)))
    path = _out_path(cfg, f"convergence_{cfg.discretization.family}.{cfg.output.format}")
    if cfg.output.format == "csv":
        study.write_convergence_csv(st, path)
    else:
        study.write_json(st, path, _meta(cfg, "convergence"))
    return st


def cmd_spurious(cfg):
    criteria = study.SpuriousCriteria(tau=cfg.solve.tau, refinement=cfg.solve.refinement)
    sw = study.run_spurious_sweep(
        cfg.family, cfg.discretization.n, cfg.physics.alphaE, cfg.params(), k=cfg.solve.k, criteria=criteria,
        neumann_sides=cfg.problem.gamma_neumann, domain=cfg.problem.domain, shift=cfg.shift,
        threads=cfg.threads, seed=cfg.discretization.seed,
    )
    print(study.format_table(*study.sweep_table(sw)))
    print("flags per alphaE: " + " ".join(str(c) for c in sw.counts))
    path = _out_path(cfg, f"spurious_{cfg.discretization.family}_{cfg.discretization.n}.{cfg.output.format}")
    if cfg.output.format == "csv":
        study.write_sweep_csv(sw, path)
    else:
        study.write_json(sw, path, _meta(cfg, "spurious"))
    return sw


COMMANDS = {"mesh": cmd_mesh, "solve": cmd_solve, "convergence": cmd_convergence, "spurious": cmd_spurious}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
    except (ConfigError, InvalidDomain, ValueError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        if args.save_config:
            with open(args.save_config, "w") as fp:
                json.dump(cfg.to_dict(), fp, indent=2)
        COMMANDS[args.command](cfg)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (EmptyDirichlet, InvalidDomain) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OseenVEMError as exc:
        level = getattr(exc, "level", None)
        where = f" (level n={level})" if level is not None else ""
        print(f"solver failure{where}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return 0


if __name__ == "__main__":
    sys.exit(main())
