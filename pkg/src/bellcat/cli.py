"""Command-line entry point: ``bellcat <subcommand> [options]``.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure
(a JSON error record is printed to stderr).
"""
import argparse
import json
import math
import sys

import numpy as np

from . import bell, files, hilbert as hs, logical, protocol as pr, tomography as tm
from .config import ConfigError, ExperimentConfig, load_config, with_overrides

GRID_COLUMNS = ["re_alpha", "im_alpha", "W_I", "W_X", "W_Y", "W_Z", "shots"]
BELL_COLUMNS = ["beta", "param", "setting", "AA", "AB", "BA", "BB", "O", "sigma", "shots"]
SETTING_CODES = {"pooled": 0, "q+r+": 1, "q+r-": 2, "q-r+": 3, "q-r-": 4}


class UsageError(Exception):
    pass


class NumericalFailure(Exception):
    def __init__(self, kind, message, **details):
        super().__init__(message)
        self.kind = kind
        self.details = details


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# states and grids

def build_state(cfg, name, beta, m=None, noisy=False):
    n = cfg.truncation.n_sim
    if name == "bell-cat":
        if noisy:
            noise = cfg.noise_model()
            rho = pr.prepare_bell_cat(beta, n, noise=noise, chi=cfg.chi)
            return pr.idle_until_detection(rho, noise, cfg.chi)
        return pr.prepare_bell_cat(beta, n, chi=cfg.chi)
    if name == "coherent":
        return hs.joint_state([1, 0], hs.coherent_state(beta, n))
    if name == "vacuum":
        return hs.joint_state([1, 0], hs.fock(n, 0))
    if name == "fock-entangled":
        if m is None:
            raise UsageError("fock-entangled needs --m")
        return pr.prepare_fock_entangled(beta, m, n)
    raise UsageError(f"unknown state {name!r}")


def grid_rows(grid):
    a = grid.spec.alphas().ravel()
    vals = grid.values.reshape(4, -1)
    return np.column_stack([a.real, a.imag, vals.T, np.full(a.size, grid.shots)])


def grid_from_table(columns, meta, rows):
    if columns != GRID_COLUMNS:
        raise UsageError("input is not a joint Wigner grid file")
    cfg = ExperimentConfig.from_dict(meta["config"])
    spec = cfg.grid_spec()
    if rows.shape[0] != spec.size ** 2:
        raise UsageError("grid file does not match its embedded grid spec")
    vals = rows[:, 2:6].T.reshape(4, spec.size, spec.size)
    return tm.WignerGrid(spec, vals, int(rows[0, 6])), cfg


def _grid(cfg, state, exact, noisy, stream=0):
    spec = cfg.grid_spec()
    noise = cfg.noise_model()
    if exact:
        if noisy:
            return tm.joint_wigner_expected(state, spec, noise, cfg.chi)
        return tm.joint_wigner_exact(state, spec)
    shots = cfg.shots_per_setting - cfg.shots_per_setting % 4
    return tm.joint_wigner_sampled(state, spec, max(shots, 4), noise,
                                   seed=cfg.master_seed + stream, chi=cfg.chi)


def _meta(cfg, **extra):
    return dict(extra, config=cfg.to_dict())


# ---------------------------------------------------------------------------
# subcommands

def run_wigner(cfg, args):
    noisy = args.exact and not args.ideal_detection
    state = build_state(cfg, args.state, args.beta, args.m, noisy=not args.ideal_state)
    grid = _grid(cfg, state, args.exact, noisy)
    meta = _meta(cfg, state=args.state, beta=args.beta, m=args.m, exact=args.exact,
                 visibility=grid.visibility)
    files.write_table(args.out, "wigner", GRID_COLUMNS, grid_rows(grid), meta)
    return {"out": args.out, "visibility": grid.visibility}


def run_bell(cfg, args):
    betas = bell.DEFAULT_BETAS if args.betas is None else args.betas
    rows = []
    noise = cfg.noise_model()
    cell = 0
    for beta in betas:
        if args.params is not None:
            params = args.params
        elif args.test == 1:
            params = [-math.pi / 4]
        else:
            params = [bell.optimal_displacement(beta) if beta > 0 else 0.0]
        for p in params:
            if args.exact:
                r = bell.bell_expected(args.test, beta, p, noise, cfg.truncation.n_sim, cfg.chi)
                results = [r]
            else:
                (r,) = bell.bell_sweep(args.test, [beta], [p], cfg.shots_per_setting, noise,
                                       seed=cfg.master_seed, n_cav=cfg.truncation.n_sim,
                                       chi=cfg.chi, first_cell=cell)
                results = [r] + r.sub_results
            cell += 1
            for x in results:
                c = x.correlations
                rows.append([x.beta, x.param, SETTING_CODES[x.setting], c["AA"], c["AB"],
                             c["BA"], c["BB"], x.value, x.sigma, x.shots])
    meta = _meta(cfg, test=args.test, exact=args.exact,
                 setting_codes=SETTING_CODES)
    files.write_table(args.out, "bell", BELL_COLUMNS, rows, meta)
    return {"out": args.out, "rows": len(rows)}


def run_reconstruct(cfg, args):
    if not args.input:
        raise UsageError("reconstruct needs --input GRID_FILE")
    try:
        kind, columns, meta, rows = files.read_table(args.input)
    except (OSError, files.DataFileError, KeyError, ValueError) as exc:
        raise UsageError(f"cannot read grid: {exc}") from None
    grid, file_cfg = grid_from_table(columns, meta, rows)
    n_max = cfg.truncation.n_mle
    beta = meta.get("beta") if args.beta is None else args.beta
    target = None
    if beta is not None and meta.get("state", "bell-cat") == "bell-cat":
        target = pr.bell_cat_target(beta, max(n_max, cfg.truncation.n_sim))
    if args.bootstrap and target is not None:
        fit, ci, _ = tm.bootstrap_ci(grid, target, args.bootstrap, cfg.master_seed, n_max=n_max)
    else:
        fit = tm.mle_reconstruct(grid, n_max, target=target)
        ci = None
    d = fit.rho.shape[0]
    i, j = np.divmod(np.arange(d * d), d)
    rho_rows = np.column_stack([i, j, fit.rho.real.ravel(), fit.rho.imag.ravel()])
    files.write_table(args.out, "density", ["row", "col", "re", "im"], rho_rows,
                      _meta(cfg, source=args.input, n_max=n_max))
    report = {
        "fidelity": fit.fidelity, "fidelity_ci": ci, "scale": fit.scale,
        "residual_sigma": fit.residual_sigma, "residual_mean": fit.residual_mean,
        "iterations": fit.iterations, "converged": fit.converged, "cost": fit.cost,
        "grid_visibility": grid.visibility,
    }
    files.write_json(args.out + ".json", {"kind": "reconstruction", "config": cfg.to_dict(),
                                          "data": report})
    if not fit.converged:
        raise NumericalFailure("non_convergence", "reconstruction hit the iteration cap",
                               iterations=fit.iterations, cost=fit.cost)
    return report


def run_entropy(cfg, args):
    betas = np.linspace(args.beta_min, args.beta_max, args.points)
    rows = [[b, logical.encoded_entropy(b)] for b in betas]
    files.write_table(args.out, "entropy", ["beta", "entropy_bits"], rows, _meta(cfg))
    return {"out": args.out, "S_first": rows[0][1], "S_last": rows[-1][1]}


def run_backaction(cfg, args):
    if args.m is not None:
        state = pr.prepare_fock_entangled(args.beta, args.m, cfg.truncation.n_sim)
    else:
        state = pr.prepare_bell_cat(args.beta, cfg.truncation.n_sim, chi=cfg.chi)
    out = {}
    for outcome, tag in ((1, "plus"), (-1, "minus")):
        p, post = pr.project_qubit(state, args.axis, outcome)
        if p < 1e-12:
            continue
        grid = tm.joint_wigner_exact(post, cfg.grid_spec(), warn=False)
        path = f"{args.out}.{tag}"
        files.write_table(path, "wigner", GRID_COLUMNS, grid_rows(grid),
                          _meta(cfg, state="backaction", beta=args.beta, m=args.m,
                                axis=args.axis, outcome=outcome, probability=p))
        out[tag] = {"out": path, "probability": p}
    return out


def run_models(cfg, args):
    betas = np.linspace(args.beta_min, args.beta_max, args.points)
    v, g = cfg.model_visibility, cfg.loss_gamma
    t1 = bell.model_curves_test1(betas, v, g)
    t2 = bell.model_curves_test2(betas, v, g)
    rows = np.column_stack([betas, t1["O_ideal"], t1["O_vis"], t1["O_loss"], t1["O_pred"],
                            t2["alpha0"], t2["O_ideal"], t2["O_pred"]])
    cols = ["beta", "t1_O_ideal", "t1_O_vis", "t1_O_loss", "t1_O_pred",
            "t2_alpha0", "t2_O_ideal", "t2_O_pred"]
    files.write_table(args.out, "models", cols, rows, _meta(cfg, visibility=v, gamma=g))
    return {"out": args.out}


def run_selftest(cfg, args):
    """Fast closed-form and noiseless checks; exits 2 when any fails."""
    checks = {}
    b = math.sqrt(3)
    psi = pr.prepare_bell_cat(b, 40)
    checks["bell_cat_fidelity"] = hs.fidelity(psi, pr.bell_cat_target(b, 40)) >= 1 - 1e-6
    rng = np.random.default_rng(cfg.master_seed)
    worst = 0.0
    for _ in range(10):
        v = rng.normal(size=20) + 1j * rng.normal(size=20)
        v /= np.linalg.norm(v)
        a = complex(*rng.uniform(-2, 2, 2))
        res = pr.parity_map_circuit(np.concatenate([v, np.zeros(20)]), a)
        ref = hs.parity_expectations(np.outer(v, v.conj()), np.array([a]))[0].real
        worst = max(worst, abs(res.p_parity[-1] - (1 - ref) / 2))
    checks["parity_circuit"] = worst < 1e-8
    m1 = bell.model_curves_test1(1.0, 0.85, 1.24 / 55)["O_pred"]
    checks["model_test1"] = abs(m1 - 2.35) <= 0.05
    checks["optimal_displacement"] = abs(bell.optimal_displacement(1.0) - 0.15) < 0.01
    ent = [logical.encoded_entropy(x) for x in np.linspace(0, 2, 50)]
    checks["entropy"] = ent[0] == 0 and ent[-1] > 0.999 and bool(np.all(np.diff(ent) > 0))
    checks = {k: bool(v) for k, v in checks.items()}
    ok = all(checks.values())
    if not ok:
        raise NumericalFailure("selftest", "self-test failed",
                               failed=[k for k, v in checks.items() if not v])
    return checks


COMMANDS = {
    "wigner": run_wigner, "bell": run_bell, "reconstruct": run_reconstruct,
    "entropy": run_entropy, "backaction": run_backaction, "models": run_models,
    "selftest": run_selftest,
}


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def make_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", help="preset name (paper, paper_quoted_pc, ideal) or JSON file")
    common.add_argument("--seed", type=int, help="master seed override")
    common.add_argument("--shots", type=int, help="shots per detector setting")
    common.add_argument("--exact", action="store_true", help="infinite-shot expectations")
    common.add_argument("--out", help="output file")

    parser = _Parser(prog="bellcat", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("wigner", parents=[common], help="joint Wigner grid of a state")
    p.add_argument("--state", default="bell-cat",
                   choices=["bell-cat", "coherent", "vacuum", "fock-entangled"])
    p.add_argument("--beta", type=float, default=math.sqrt(3))
    p.add_argument("--m", type=int)
    p.add_argument("--ideal-state", action="store_true", help="skip preparation noise")
    p.add_argument("--ideal-detection", action="store_true",
                   help="with --exact, ideal operator expectations")

    p = sub.add_parser("bell", parents=[common], help="CHSH sweep")
    p.add_argument("--test", type=int, choices=[1, 2], default=1)
    p.add_argument("--betas", type=_float_list)
    p.add_argument("--params", type=_float_list, help="theta (test 1) or alpha (test 2)")

    p = sub.add_parser("reconstruct", parents=[common], help="density matrix from a grid file")
    p.add_argument("--input")
    p.add_argument("--beta", type=float, help="Bell-cat target amplitude")
    p.add_argument("--bootstrap", type=int, default=0, help="bootstrap resamples")

    for name, help_text in (("entropy", "encoded entropy table"),
                            ("models", "analytic CHSH model curves")):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--beta-min", type=float, default=0.0)
        p.add_argument("--beta-max", type=float, default=2.0)
        p.add_argument("--points", type=int, default=50 if name == "entropy" else 81)

    p = sub.add_parser("backaction", parents=[common], help="post-measurement Wigner grids")
    p.add_argument("--beta", type=float, default=math.sqrt(3))
    p.add_argument("--axis", choices=["X", "Y", "Z"], default="X")
    p.add_argument("--m", type=int, help="use the Fock-entangled state with level m")

    sub.add_parser("selftest", parents=[common], help="quick internal checks")
    return parser


def _error(code, kind, message, **details):
    record = {"status": "error", "exit_code": code, "kind": kind, "message": message}
    record.update(details)
    print(json.dumps(record, sort_keys=True, default=str), file=sys.stderr)
    return code


def main(argv=None):
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
        cfg = with_overrides(load_config(args.config), args.seed, args.shots)
        if args.out is None and args.command != "selftest":
            raise UsageError("--out is required")
        result = COMMANDS[args.command](cfg, args)
    except (UsageError, ConfigError) as exc:
        return _error(1, "usage", str(exc))
    except NumericalFailure as exc:
        return _error(2, exc.kind, str(exc), **exc.details)
    except hs.TruncationError as exc:
        return _error(2, "truncation", str(exc))
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        return _error(2, "numerical", str(exc))
    except ValueError as exc:
        return _error(1, "usage", str(exc))
    print(json.dumps(result, sort_keys=True, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
