"""Command line front end: validate metrics, run simulations, play the game.

Exit codes are part of the interface: 0 success (or accept), 1 reject,
2 domain error, 3 unreadable input or config, 64 usage. Runs are always
seeded; identical configs produce byte-identical output files.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .errors import BrokenPtRegimeError, MetriqError, NegativeParameterError
from .hilbert import matrix_from_json, validate_metric
from .montecarlo import (
    chained_success_probability,
    simulate_g_eta,
    simulate_pt,
    summary,
)
from .ptsym import build_pt_system, pt_params_from_json
from .rng import RngStream
from .tomography import (
    default_design,
    dishonest_prover,
    honest_prover,
    reconstruct,
    report_to_json,
    run_prover,
    threshold,
    verify,
)

EXIT_OK = 0
EXIT_REJECT = 1
EXIT_DOMAIN = 2
EXIT_PARSE = 3
EXIT_USAGE = 64

CSV_HEADER = "seed,N,total_copies,success_ratio,analytic_prob,abs_error"


class ConfigError(Exception):
    """A file or config that cannot be understood; maps to exit code 3."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# config plumbing
# ---------------------------------------------------------------------------

def _read_json(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None


def _decode_matrix(blob, what):
    """Accept a bare [[re, im], ...] matrix or a {'dim', 'matrix'} wrapper."""
    if isinstance(blob, dict):
        if "dim" not in blob or "matrix" not in blob:
            raise ConfigError(f"{what}: object form needs 'dim' and 'matrix'")
        try:
            mat = matrix_from_json(blob["matrix"])
            dim = int(blob["dim"])
        except (MetriqError, TypeError, ValueError) as exc:
            raise ConfigError(f"{what}: {exc}") from None
        if mat.shape != (dim, dim):
            raise ConfigError(f"{what}: dim {dim} does not match matrix shape {mat.shape}")
        return mat
    try:
        return matrix_from_json(blob)
    except MetriqError as exc:
        raise ConfigError(f"{what}: {exc}") from None


def _merged_int(flag_value, cfg, key, minimum):
    """Flag wins over config; the value must be present in one of them."""
    value = flag_value if flag_value is not None else cfg.get(key)
    if value is None:
        raise ConfigError(f"'{key}' must be given via --{key} or the config file")
    try:
        value = int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"'{key}' must be an integer, got {value!r}") from None
    if value < minimum:
        raise ConfigError(f"'{key}' must be >= {minimum}, got {value}")
    return value


def _decode_pt(cfg):
    try:
        return pt_params_from_json(cfg)
    except (BrokenPtRegimeError, NegativeParameterError):
        # regime violations are domain errors, not config syntax
        raise
    except MetriqError as exc:
        raise ConfigError(str(exc)) from None


def _decode_prover(blob):
    if blob == "honest":
        return honest_prover()
    if isinstance(blob, dict) and blob.get("kind") == "dishonest":
        if "unitaries" not in blob or "probs" not in blob:
            raise ConfigError("dishonest prover needs 'unitaries' and 'probs'")
        mats = []
        for i, entry in enumerate(blob["unitaries"]):
            try:
                mats.append(matrix_from_json(entry))
            except MetriqError as exc:
                raise ConfigError(f"unitaries[{i}]: {exc}") from None
        try:
            return dishonest_prover(mats, blob["probs"])
        except (MetriqError, TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
    raise ConfigError(
        'prover must be "honest" or {"kind": "dishonest", "unitaries": [...], "probs": [...]}'
    )


def _render(row, fmt):
    if fmt == "json":
        return json.dumps(row, indent=2, sort_keys=True) + "\n"
    cells = [
        str(row["seed"]),
        str(row["N"]),
        str(row["total_copies"]),
        format(row["success_ratio"], ".17g"),
        format(row["analytic_prob"], ".17g"),
        format(row["abs_error"], ".17g"),
    ]
    return CSV_HEADER + "\n" + ",".join(cells) + "\n"


def _emit(text, out_path):
    if out_path is None:
        sys.stdout.write(text)
        return
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _cmd_metric_validate(args) -> int:
    blob = _read_json(args.path)
    mat = _decode_matrix(blob, "metric")
    try:
        eta = validate_metric(mat)
    except MetriqError as exc:
        print(f"invalid: {exc}")
        return EXIT_DOMAIN
    eigs = ", ".join(format(v, ".12g") for v in eta.eig.eigenvalues)
    flag = "subidentity" if eta.subidentity else "exceeds identity"
    print(f"valid, eigenvalues [{eigs}], norm {eta.norm:.12g}, {flag}")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    cfg = _read_json(args.config)
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    seed = _merged_int(args.seed, cfg, "seed", minimum=0)
    shots = _merged_int(args.shots, cfg, "shots", minimum=1)
    rng = RngStream(seed=seed)

    if args.procedure == "g-eta":
        if "metric" not in cfg or "state" not in cfg:
            raise ConfigError("g-eta config needs 'metric' and 'state'")
        eta = validate_metric(_decode_matrix(cfg["metric"], "metric"))
        rho = _decode_matrix(cfg["state"], "state")
        record = simulate_g_eta(eta, rho, shots, rng)
        analytic = float(np.trace(eta.matrix @ rho).real)
    else:
        ham, t = _decode_pt(cfg)
        system = build_pt_system(ham)
        if "state" in cfg:
            rho = _decode_matrix(cfg["state"], "state")
        else:
            rho = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)
        record = simulate_pt(system, rho, t, shots, rng)
        analytic = chained_success_probability(system, rho, t)

    _emit(_render(summary(record, analytic), args.format), args.out)
    return EXIT_OK


def _cmd_verify(args) -> int:
    cfg = _read_json(args.config)
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    if "metric" not in cfg or "prover" not in cfg:
        raise ConfigError("verify config needs 'metric' and 'prover'")
    seed = _merged_int(args.seed, cfg, "seed", minimum=0)
    exact = bool(cfg.get("exact", False))
    if exact and args.shots is None and "shots" not in cfg:
        shots = 0
    else:
        shots = _merged_int(args.shots, cfg, "shots", minimum=1)
    model = _decode_prover(cfg["prover"])
    eta = validate_metric(_decode_matrix(cfg["metric"], "metric"))
    threshold(eta)  # degenerate metrics are undecidable; fail before sampling

    design = default_design()
    responses = run_prover(model, eta, design, shots, RngStream(seed=seed), exact=exact)
    report = verify(eta, reconstruct(responses, design, shots_per_input=shots))
    blob = report_to_json(report, shots_per_input=shots, seed=seed)
    _emit(json.dumps(blob, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK if report.verdict == "accept" else EXIT_REJECT


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="metriq", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    mv = sub.add_parser("metric-validate", help="check a metric operator JSON file")
    mv.add_argument("path", help="JSON file: [[re, im], ...] rows or {'dim', 'matrix'}")

    sim = sub.add_parser("simulate", help="run a seeded sampling procedure")
    proc = sim.add_subparsers(dest="procedure", required=True)
    sim_ge = proc.add_parser("g-eta", help="dilate-and-postselect metric channel")
    sim_pt = proc.add_parser("pt", help="full evolution under a PT-symmetric Hamiltonian")
    for p in (sim_ge, sim_pt):
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        p.add_argument("--shots", type=int, default=None, help="successes to collect")
        p.add_argument("--out", default=None, help="output file (default stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    ver = sub.add_parser("verify", help="play the tomographic verification game")
    ver.add_argument("--config", required=True, help="JSON config with 'metric' and 'prover'")
    ver.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    ver.add_argument("--shots", type=int, default=None, help="copies per design input")
    ver.add_argument("--out", default=None, help="report file (default stdout)")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0

    try:
        if args.command == "metric-validate":
            return _cmd_metric_validate(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
        return _cmd_verify(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except MetriqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
