"""liftsvd command line.

Subcommands: decompose, certify, fig2, fig3, estimate-norms.
Exit codes: 0 ok, 1 certificate failure, 2 usage/config error, 3 bound violation.
Set LIFTSVD_LOG=error|info|debug for log verbosity.
"""

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import certify
from .errors import BoundViolationError, DomainError, EstimationError, SpecError
from .expr import BUILTINS, FunctionSpec, eval_f_batch
from .factor import compose_K, kernel_analysis, random_unitary
from .liftcore import admissibility_sum, decompose, reconstruct_batch
from .norms import estimate_norms, validate_bounds

log = logging.getLogger("liftsvd")

EXIT_OK, EXIT_CERT_FAILED, EXIT_CONFIG, EXIT_BOUND = 0, 1, 2, 3
FIG2_POINTS = 2001
FIG3_POINTS = 201


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    builtin: str = None
    spec: str = None
    eta: float = 0.1
    seed: int = 0
    samples: int = 10_000
    out: Path = Path(".")
    fmt: str = "csv"

    def validate(self):
        if (self.builtin is None) == (self.spec is None):
            raise ConfigError("give exactly one of --builtin or --spec")
        if not 0 < self.eta < 1:
            raise ConfigError(f"--eta must lie in (0, 1), got {self.eta}")
        if self.samples < 1:
            raise ConfigError(f"--samples must be >= 1, got {self.samples}")
        if self.seed < 0:
            raise ConfigError("--seed must be non-negative")

    def load_function(self) -> FunctionSpec:
        if self.builtin is not None:
            return BUILTINS[self.builtin]()
        return FunctionSpec.load(self.spec)


def _fmt(value):
    return "" if value is None else repr(float(value))


def _write_table(path_stem: Path, columns, rows, fmt):
    """rows: list of sequences whose entries are floats or None (empty cell)."""
    if fmt == "json":
        path = path_stem.with_suffix(".json")
        payload = {"columns": list(columns),
                   "rows": [[None if v is None else float(v) for v in row] for row in rows]}
        path.write_text(json.dumps(payload) + "\n")
    else:
        path = path_stem.with_suffix(".csv")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
    return path


def cmd_decompose(cfg: RunConfig) -> int:
    f = cfg.load_function()
    dec = decompose(f, cfg.eta)
    estimates = estimate_norms(f, budget=cfg.samples, seed=cfg.seed)
    violations = validate_bounds(f, estimates)
    if violations:
        for est in violations:
            print(f"bound violation: component {est.component} reaches "
                  f"{est.lower_bound!r} > declared {est.declared_bound!r} "
                  f"at x={list(est.witness)}", file=sys.stderr)
        return EXIT_BOUND
    payload = dec.to_dict()
    payload["norm_estimates"] = [e.to_dict() for e in estimates]
    path = cfg.out / "decomposition.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")

    ranked = dec.sigma_spec.ordering.apply(np.array(f.norm_bounds))
    print(f"function: {f.name} (n={f.n}, p={f.p}, m={dec.m})")
    for i, s in enumerate(dec.sigma_spec.sigma, start=1):
        print(f"sigma_{i} = {s:.6f}")
    print(f"admissibility sum = {admissibility_sum(ranked, dec.sigma_spec.sigma):.12f} "
          f"(limit {1 - cfg.eta:.12f})")
    print(f"m = {dec.m}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_certify(cfg: RunConfig) -> int:
    f = cfg.load_function()
    dec = decompose(f, cfg.eta)
    certs = certify.run_all(dec, samples=cfg.samples, seed=cfg.seed)
    path = cfg.out / "certificates.json"
    path.write_text(certify.dumps(certs))
    for c in certs:
        status = "PASS" if c.passed else "FAIL"
        print(f"{status} {c.name}: max_violation={c.max_violation:.3e} "
              f"threshold={c.threshold:.1e} samples={c.samples}")
    print(f"wrote {path}")
    return EXIT_OK if all(c.passed for c in certs) else EXIT_CERT_FAILED


def cmd_fig2(cfg: RunConfig) -> int:
    f = cfg.load_function()
    if f.n != 1 or f.p != 1:
        raise ConfigError(f"fig2 needs n = p = 1, got n={f.n}, p={f.p}")
    dec = decompose(f, cfg.eta)
    lo, hi = f.domain_box[0]
    X = np.linspace(lo, hi, FIG2_POINTS).reshape(-1, 1)
    F, ok = eval_f_batch(f, X)
    zero = X[:, 0] == 0
    F[zero] = 0.0
    ok |= zero
    batch = dec.lift_batch(X[ok], F=F[ok])
    recon = reconstruct_batch(batch, dec)
    sigma1 = dec.sigma1

    rows = []
    j = 0
    for k in range(X.shape[0]):
        x = X[k, 0]
        env = sigma1 * abs(x)
        if ok[k]:
            rows.append([x, F[k, 0], recon[j, 0], env, -env, batch.V[j, 0], batch.V[j, 1]])
            j += 1
        else:
            rows.append([x, None, None, env, -env, None, None])
    columns = ["x", "f", "reconstruction", "envelope_upper", "envelope_lower", "v_1", "v_2"]
    path = _write_table(cfg.out / "fig2", columns, rows, cfg.fmt)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_fig3(cfg: RunConfig) -> int:
    f = cfg.load_function()
    if f.n != 2 or f.p != 1:
        raise ConfigError(f"fig3 needs n = 2, p = 1, got n={f.n}, p={f.p}")
    dec = decompose(f, cfg.eta)
    kf = compose_K(dec, random_unitary(dec.m, cfg.seed))
    basis = kernel_analysis(kf).basis

    (lo1, hi1), (lo2, hi2) = f.domain_box
    g1, g2 = np.meshgrid(np.linspace(lo1, hi1, FIG3_POINTS),
                         np.linspace(lo2, hi2, FIG3_POINTS), indexing="ij")
    X = np.column_stack([g1.ravel(), g2.ravel()])
    F, ok = eval_f_batch(f, X)
    proj = kf.g_batch(X[ok], F=F[ok]) @ basis

    rows = []
    j = 0
    for k in range(X.shape[0]):
        if ok[k]:
            rows.append([X[k, 0], X[k, 1], F[k, 0], *proj[j]])
            j += 1
        else:
            rows.append([X[k, 0], X[k, 1], None, None, None, None])
    columns = ["x_1", "x_2", "f", "proj_1", "proj_2", "proj_3"]
    path = _write_table(cfg.out / "fig3", columns, rows, cfg.fmt)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_estimate_norms(cfg: RunConfig) -> int:
    f = cfg.load_function()
    estimates = estimate_norms(f, budget=cfg.samples, seed=cfg.seed)
    if cfg.fmt == "json":
        path = cfg.out / "norm_estimates.json"
        path.write_text(json.dumps([e.to_dict() for e in estimates], indent=2,
                                   sort_keys=True) + "\n")
    else:
        path = cfg.out / "norm_estimates.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["component", "lower_bound", "declared_bound", "samples_used", "valid"]
                       + [f"witness_{i + 1}" for i in range(f.n)])
            for e in estimates:
                w.writerow([e.component, repr(e.lower_bound), repr(e.declared_bound),
                            e.samples_used, e.valid] + [repr(t) for t in e.witness])
    for e in estimates:
        flag = "ok" if e.valid else "VIOLATED"
        print(f"component {e.component}: lower bound {e.lower_bound:.6f} "
              f"vs declared {e.declared_bound:.6f} [{flag}]")
    print(f"wrote {path}")
    return EXIT_OK if all(e.valid for e in estimates) else EXIT_BOUND


COMMANDS = {
    "decompose": cmd_decompose,
    "certify": cmd_certify,
    "fig2": cmd_fig2,
    "fig3": cmd_fig3,
    "estimate-norms": cmd_estimate_norms,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group(required=True)
    src.add_argument("--builtin", choices=sorted(BUILTINS))
    src.add_argument("--spec", help="JSON function spec file")
    common.add_argument("--eta", type=float, default=0.1, help="admissibility margin")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--samples", type=int, default=10_000)
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("--format", dest="fmt", choices=["csv", "json"], default="csv")

    parser = argparse.ArgumentParser(prog="liftsvd",
                                     description="SVD-like decompositions of BIBO functions")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _setup_logging():
    level = os.environ.get("LIFTSVD_LOG", "error").upper()
    logging.basicConfig(level=getattr(logging, level, logging.ERROR),
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    cfg = RunConfig(builtin=args.builtin, spec=args.spec, eta=args.eta, seed=args.seed,
                    samples=args.samples, out=args.out, fmt=args.fmt)
    try:
        cfg.validate()
        cfg.out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg)
    except BoundViolationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(f"witness: {exc.witness.tolist()}", file=sys.stderr)
        return EXIT_BOUND
    except (ConfigError, SpecError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, EstimationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def run():
    sys.exit(main())
