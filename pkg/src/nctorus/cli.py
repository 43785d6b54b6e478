"""``nctorus`` command-line driver.

Exit codes: 0 all checks pass, 1 some check failed (failing anchors on stderr),
2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .algebra import TorusElement
from .config import EXPERIMENTS, ConfigError, ExperimentConfig, load_config
from .connections import (
    compatibility_scan,
    connection_report,
    find_compatibility_counterexample,
    horizontal_part,
    lifted_dirac,
    sample_connection,
    twisted_dirac,
    vertical_part,
)
from .dirac import (
    ALGEBRA_TOL,
    FluctuationA,
    base_triple,
    build_dirac,
    build_fluctuated,
    decompose,
    interior,
    parity_residuals,
    spectral_triple_report,
)
from .hopf import hopf_galois_report
from .reports import AxiomReport, CheckResult
from .representation import ENUMERATION_ORDER, PAULI_CONVENTION, TruncatedWindow, commutator, represent
from .spectral import EIGEN_TOL, fibre_length_check, spectrum, spectrum_relation_check


def _window(cfg: ExperimentConfig) -> TruncatedWindow:
    return TruncatedWindow(cfg.window, cfg.spin, cfg.theta)


def _header(cfg: ExperimentConfig) -> dict:
    return {"config": cfg.to_json(), "pauli": PAULI_CONVENTION, "enumeration": ENUMERATION_ORDER,
            "version": __version__}


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(x):
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x).__name__}")


def _finish(report: AxiomReport, extra: dict | None = None) -> tuple[str, int]:
    doc = report.to_json()
    doc.update(extra or {})
    return _dumps(doc), 0 if report.all_passed else 1


# commands ---------------------------------------------------------------------------------


def cmd_verify_axioms(cfg: ExperimentConfig) -> tuple[str, int]:
    w = _window(cfg)
    A = cfg.A or FluctuationA.zero(cfg.theta)
    report = spectral_triple_report(w, A, seed=cfg.seed, ell=cfg.ell)
    report.title = "verify-axioms"
    ce = find_compatibility_counterexample(A, degree=1)
    report.add(CheckResult.evaluate("calculus compatibility", "sum p [D, q] = 0 => sum p delta(q) = 0",
                                    0.0 if ce is None else vertical_part(ce).max_abs(), 1e-8))
    conn = cfg.omega or sample_connection(cfg.theta, cfg.seed)
    report.extend(connection_report(w, conn, seed=cfg.seed).rows)
    report.metadata.update(_header(cfg))
    report.metadata["connection"] = conn.to_json()
    report.metadata["connection_rows_use"] = "unfluctuated D"
    return _finish(report)


def cmd_decompose(cfg: ExperimentConfig) -> tuple[str, int]:
    w = _window(cfg)
    D = build_fluctuated(cfg.A, w) if cfg.A is not None else build_dirac(w)
    decomp = decompose(D, ell=cfg.ell)
    report = AxiomReport("decompose", metadata=_header(cfg))
    parity = parity_residuals(decomp)
    report.add(CheckResult.evaluate("reassembly", "D = D_h + D_v + Z", parity["reassembly"], ALGEBRA_TOL))
    report.add(CheckResult.evaluate("D_h odd", "Gamma D_h = -D_h Gamma", parity["D_h odd"], ALGEBRA_TOL))
    report.add(CheckResult.evaluate("D_v even", "Gamma D_v = D_v Gamma", parity["D_v even"], ALGEBRA_TOL))
    report.add(CheckResult.evaluate("Z even", "Gamma Z = Z Gamma", parity["Z even"], ALGEBRA_TOL))
    triples = {}
    for k in range(-min(cfg.window, 3), min(cfg.window, 3) + 1):
        triples[str(k)] = base_triple(decomp, k).relation_residuals()
    worst = max(max(v.values()) for v in triples.values())
    report.add(CheckResult.evaluate("base triples", "Gamma_k D_k = -D_k Gamma_k, j_k D_k = D_-k j_k", worst, ALGEBRA_TOL))
    # size of Z and of its failure to commute with the algebra (bounded perturbation, reported only)
    z_comm = 0.0
    sub = interior(w, decomp.Z.margin + 1)
    for j in (1, 2, 3):
        u = TorusElement.generator(cfg.theta, j)
        if not sub.empty:
            z_comm = max(z_comm, sub.residual(commutator(decomp.Z, represent(u, w))))
    conn = cfg.omega or sample_connection(cfg.theta, cfg.seed)
    lift = lifted_dirac(conn, decomp)
    mismatch = horizontal_part(lift, decomp.gamma) - twisted_dirac(conn, decomp)
    extra = {
        "norms": {
            "D_h_max_entry": decomp.D_h.max_abs(),
            "D_v_max_entry": decomp.D_v.max_abs(),
            "Z_max_entry": decomp.Z.max_abs(),
            "Z_operator_norm": float(np.linalg.norm(decomp.Z.dense(), 2)) if w.dim <= 4000 else None,
            "Z_commutator_with_generators": z_comm,
            "horizontal_lift_minus_D_omega": mismatch.max_abs(),
        },
        "base_triples": triples,
    }
    return _finish(report, extra)


def cmd_spectrum(cfg: ExperimentConfig) -> tuple[str, int]:
    w = _window(cfg)
    D = build_fluctuated(cfg.A, w) if cfg.A is not None else build_dirac(w)
    decomp = decompose(D, ell=cfg.ell)
    label = "D_A" if cfg.A is not None else "D"
    rep = spectrum(D, label)
    for k in range(0, min(5, cfg.window) + 1):
        rep.relation[k] = spectrum_relation_check(decomp, None, k, cfg.ell)
    doc = rep.to_json()
    doc["metadata"] = _header(cfg)
    if cfg.omega is not None:
        # connections are taken on the circle of length 1 whatever ell is
        doc["relation_mismatch_lifted_omega"] = {
            str(k): spectrum_relation_check(decomp, cfg.omega, k, 1.0)
            for k in range(0, min(5, cfg.window) + 1)
        }
    worst = max(rep.relation.values())
    worst = max([worst] + list(doc.get("relation_mismatch_lifted_omega", {}).values()))
    doc["all_passed"] = worst < EIGEN_TOL
    return _dumps(doc), 0 if doc["all_passed"] else 1


def cmd_connection_scan(cfg: ExperimentConfig) -> tuple[str, int]:
    report = compatibility_scan(_window(cfg))
    return report.to_csv(), 0 if report.unique_zero_at_origin else 1


def cmd_nc_integral(cfg: ExperimentConfig) -> tuple[str, int]:
    if cfg.A is not None and not cfg.A.A3.is_zero():
        raise ConfigError("A: nc-integral requires A3 = 0")
    result = fibre_length_check(cfg.A, cfg.theta, N=cfg.window, spin=cfg.spin, cutoffs=cfg.integral_cutoffs())
    result.report.metadata.update(_header(cfg))
    doc = result.to_json()
    return _dumps(doc), 0 if result.report.all_passed else 1


def cmd_hopf_galois(cfg: ExperimentConfig) -> tuple[str, int]:
    report = hopf_galois_report(cfg.theta, n_max=5, degree=min(cfg.window, 3), seed=cfg.seed)
    report.metadata.update(_header(cfg))
    return _finish(report)


COMMANDS = {
    "verify-axioms": cmd_verify_axioms,
    "decompose": cmd_decompose,
    "spectrum": cmd_spectrum,
    "connection-scan": cmd_connection_scan,
    "nc-integral": cmd_nc_integral,
    "hopf-galois": cmd_hopf_galois,
}


# argument handling ------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nctorus", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON experiment configuration")
    common.add_argument("--theta21", type=str)
    common.add_argument("--theta31", type=str)
    common.add_argument("--theta32", type=str)
    common.add_argument("--window", type=str, help="cutoff N of the index window")
    common.add_argument("--spin", type=str, help='spin offsets, e.g. "0,0" or "1/2,0"')
    common.add_argument("--ell", type=str, help="fibre length")
    common.add_argument("--seed", type=str)
    common.add_argument("--out", help="output file (default: stdout)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in EXPERIMENTS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {
        "t21": args.theta21, "t31": args.theta31, "t32": args.theta32,
        "window": args.window, "spin": args.spin, "ell": args.ell, "seed": args.seed, "out": args.out,
    }
    try:
        cfg = load_config(args.config, overrides)
        text, code = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"nctorus: config error: {exc}", file=sys.stderr)
        return 2
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    if code == 1:
        _report_failures(text)
    return code


def _report_failures(text: str) -> None:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        print("nctorus: checks failed", file=sys.stderr)
        return
    for row in doc.get("checks", []):
        if not row.get("pass", True):
            print(f"FAIL {row['check']}: {row['anchor']} (residual {row['residual']:.3e})", file=sys.stderr)
    if "checks" not in doc:
        print("nctorus: checks failed", file=sys.stderr)


if __name__ == "__main__":
    raise SystemExit(main())
