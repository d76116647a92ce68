"""Command-line interface: configuration parsing, experiment dispatch,
report emission.

Subcommands: classify, phi, limitlaw, simulate, experiment, suite.
Exit codes: 0 pass (including qualitative passes), 1 fail, 2 configuration
error, 3 I/O error.  Result files are written atomically; a fixed seed
gives byte-identical CSV regardless of --workers.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
from dataclasses import dataclass, field

from . import csbp, experiments, limit_laws, mechanisms, suite
from .errors import ConfigError, NlcsbpError
from .mechanisms import (LogCriticalSubordinator, LogTailSubordinator, Model,
                         NeveuMechanism, PureDriftSubordinator, RateFunction,
                         StableMinusDrift, StableSubordinator)
from .rng import RngStream

EXPERIMENT_NAMES = ("rho", "overshoot", "regime_case1", "regime_case2",
                    "regime_case3", "classical_cdf", "exit", "classification")

_FAMILY_FIELDS = {
    "stable": ("c0", "alpha"),
    "drift": ("delta",),
    "logtail": ("r",),
    "logcritical": ("gamma", "eps_cut"),
    "smd": ("c0", "alpha", "c"),
    "neveu": (),
}

_SECTION_KEYS = {
    "experiment": {"name"},
    "mechanism": {"family", "c0", "alpha", "delta", "r", "gamma", "eps_cut", "c"},
    "rate": {"kappa", "beta"},
    "run": {"n", "seed", "workers", "tail_tol", "level", "t_grid", "x0", "a",
            "renorm_x0s", "scale"},
    "output": {"csv", "json"},
}


@dataclass
class RunConfig:
    experiment: str
    mechanism: dict = field(default_factory=dict)
    rate: dict = field(default_factory=dict)
    run: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)


def _build_mechanism(block, errors):
    fam = block.get("family")
    if fam not in _FAMILY_FIELDS:
        errors.append(f"mechanism.family: expected one of {sorted(_FAMILY_FIELDS)}, "
                      f"got {fam!r}")
        return None
    kwargs = {}
    for key in _FAMILY_FIELDS[fam]:
        if key in block:
            kwargs[key] = block[key]
    extra = set(block) - set(_FAMILY_FIELDS[fam]) - {"family"}
    if extra:
        errors.append(f"mechanism: keys {sorted(extra)} not valid for family "
                      f"{fam!r}")
        return None
    ctor = {"stable": StableSubordinator, "drift": PureDriftSubordinator,
            "logtail": LogTailSubordinator, "logcritical": LogCriticalSubordinator,
            "smd": StableMinusDrift, "neveu": NeveuMechanism}[fam]
    try:
        return ctor(**kwargs)
    except NlcsbpError as exc:
        errors.append(f"mechanism: {exc}")
        return None
    except TypeError as exc:
        errors.append(f"mechanism: {exc}")
        return None


def validate_config(text):
    """Parse and fully validate a sectioned key-value config document."""
    parser = configparser.ConfigParser()
    errors = []
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"malformed config: {exc}"])
    cfg = RunConfig(experiment="")
    for section in parser.sections():
        if section not in _SECTION_KEYS:
            errors.append(f"unknown section [{section}]")
            continue
        for key, raw in parser.items(section):
            if key not in _SECTION_KEYS[section]:
                errors.append(f"unknown key {section}.{key}")
                continue
            target = {"experiment": None, "mechanism": cfg.mechanism,
                      "rate": cfg.rate, "run": cfg.run,
                      "output": cfg.output}[section]
            if section == "experiment":
                cfg.experiment = raw.strip()
                continue
            if key in ("family",):
                target[key] = raw.strip()
            elif key in ("t_grid", "renorm_x0s"):
                try:
                    target[key] = tuple(float(v) for v in raw.split(","))
                except ValueError:
                    errors.append(f"{section}.{key}: expected comma-separated "
                                  f"numbers, got {raw!r}")
            elif key in ("n", "seed", "workers"):
                try:
                    target[key] = int(raw)
                except ValueError:
                    errors.append(f"{section}.{key}: expected an integer, got {raw!r}")
            else:
                try:
                    target[key] = float(raw)
                except ValueError:
                    errors.append(f"{section}.{key}: expected a number, got {raw!r}")
    if cfg.experiment not in EXPERIMENT_NAMES:
        errors.append(f"experiment.name: expected one of {EXPERIMENT_NAMES}, "
                      f"got {cfg.experiment!r}")
    _validate_ranges(cfg, errors)
    if errors:
        raise ConfigError(errors)
    return cfg


def _validate_ranges(cfg, errors):
    run = cfg.run
    if run.get("n", 1) < 1:
        errors.append("run.n: must be >= 1")
    if run.get("workers", 1) < 1:
        errors.append("run.workers: must be >= 1")
    if run.get("tail_tol", 1e-3) <= 0:
        errors.append("run.tail_tol: must be > 0")
    if cfg.experiment == "rho":
        alpha = cfg.mechanism.get("alpha")
        beta = cfg.rate.get("beta")
        if alpha is not None and not 0 < alpha < 1:
            errors.append("mechanism.alpha: must lie in (0, 1)")
        if alpha is not None and beta is not None and not beta > alpha:
            errors.append("rate.beta: constraint beta > alpha violated")
    if cfg.rate.get("beta", 1.0) <= 0:
        errors.append("rate.beta: must be > 0")
    if cfg.rate.get("kappa", 1.0) <= 0:
        errors.append("rate.kappa: must be > 0")
    if cfg.experiment == "exit":
        x0, a = run.get("x0"), run.get("a")
        if x0 is not None and a is not None and not x0 > a > 0:
            errors.append("run.x0/run.a: need x0 > a > 0")


def _mech_from_cfg(cfg, errors=None):
    errs = [] if errors is None else errors
    mech = _build_mechanism(cfg.mechanism, errs)
    if errors is None and errs:
        raise ConfigError(errs)
    return mech


def dispatch(cfg):
    """Run the configured experiment; returns the process exit code."""
    run = dict(cfg.run)
    n = run.get("n", 1000)
    seed = run.get("seed", suite.DEFAULT_SEED)
    workers = run.get("workers", int(os.environ.get("NLCSBP_WORKERS", "1")))
    tail_tol = run.get("tail_tol", 1e-3)
    name = cfg.experiment
    try:
        if name == "rho":
            rep = experiments.run_rho_experiment(
                cfg.mechanism.get("alpha", 0.5), cfg.rate.get("beta", 1.5),
                cfg.mechanism.get("c0", 1.0), n, seed, tail_tol=tail_tol,
                workers=workers)
        elif name == "overshoot":
            rep = experiments.run_overshoot_experiment(
                _mech_from_cfg(cfg), run.get("level", 1e3), n, seed,
                workers=workers)
        elif name in ("regime_case1", "regime_case2", "regime_case3"):
            tag = {"regime_case1": experiments.CASE1,
                   "regime_case2": experiments.CASE2,
                   "regime_case3": experiments.CASE3}[name]
            model = Model(_mech_from_cfg(cfg),
                          RateFunction(cfg.rate.get("kappa", 1.0),
                                       cfg.rate.get("beta", 1.0)),
                          run.get("x0", 1.0))
            rep = experiments.run_regime_experiment(
                model, tag, run.get("t_grid", (0.1, 0.05)), n, seed,
                tail_tol=tail_tol, workers=workers)
        elif name == "classical_cdf":
            rep = experiments.run_classical_cdf_experiment(
                cfg.mechanism.get("alpha", 0.5), cfg.mechanism.get("c0", 1.0),
                run.get("x0", 1.0), run.get("t_grid", (0.5, 1.0, 2.0)), n,
                seed, tail_tol=tail_tol, workers=workers,
                renorm_x0s=run.get("renorm_x0s", (10.0, 100.0)))
        elif name == "exit":
            rep = experiments.run_exit_experiment(
                _mech_from_cfg(cfg), run.get("x0", 2.0), run.get("a", 1.0),
                n, seed, workers=workers)
        elif name == "classification":
            rep = experiments.run_classification_suite(
                suite.classification_table(), seed)
        else:
            raise ConfigError([f"unknown experiment {name!r}"])
    except ConfigError:
        raise
    except NlcsbpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    reports = [rep]
    try:
        if "csv" in cfg.output:
            suite.write_csv(reports, cfg.output["csv"])
        if "json" in cfg.output:
            suite.write_json(reports, cfg.output["json"])
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    print(f"{rep.name}: {rep.verdict}")
    return 0 if rep.passed else 1


# ---------------------------------------------------------------------------
# argparse wiring


def _add_mech_args(p):
    p.add_argument("--family", default="stable", choices=sorted(_FAMILY_FIELDS))
    p.add_argument("--c0", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--r", type=float, default=2.0)
    p.add_argument("--gamma", type=float, default=2.0)
    p.add_argument("--eps-cut", type=float, default=1e-3)
    p.add_argument("--c", type=float, default=1.0)


def _mech_from_args(args):
    fam = args.family
    block = {"family": fam}
    vals = {"c0": args.c0, "alpha": args.alpha, "delta": args.delta,
            "r": args.r, "gamma": args.gamma, "eps_cut": args.eps_cut,
            "c": args.c}
    for key in _FAMILY_FIELDS[fam]:
        block[key] = vals[key]
    errors = []
    mech = _build_mechanism(block, errors)
    if errors:
        raise ConfigError(errors)
    return mech


def build_parser():
    ap = argparse.ArgumentParser(
        prog="nlcsbp",
        description="Explosion of nonlinear branching processes: criteria, "
                    "limit laws, Monte Carlo verification.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="explosion classification by the "
                                        "regular-variation indices")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--family", default=None, choices=sorted(_FAMILY_FIELDS),
                   help="required when alpha == beta (critical verdict "
                        "depends on the slowly varying parts)")
    p.add_argument("--gamma", type=float, default=2.0)
    p.add_argument("--r", type=float, default=2.0)
    p.add_argument("--c0", type=float, default=1.0)

    p = sub.add_parser("phi", help="tail integral phi and its inverse")
    _add_mech_args(p)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--x", type=float, help="evaluate phi(x)")
    p.add_argument("--inv", type=float, help="evaluate phi^-1(t)")

    p = sub.add_parser("limitlaw", help="closed-form limit laws")
    p.add_argument("what", choices=["chi-tail", "chi-laplace", "rho-moment",
                                    "rho-mgf", "weibull-cdf", "ldp-rate"])
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--c0", type=float, default=1.0)
    p.add_argument("--z", type=float, default=2.0)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--n", type=int, default=1)

    p = sub.add_parser("simulate", help="draw explosion times, passages, or "
                                        "pre-explosion values")
    p.add_argument("what", choices=["explosion", "passage", "lookback", "exit"])
    _add_mech_args(p)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.5)
    p.add_argument("--x0", type=float, default=1.0)
    p.add_argument("--level", type=float, default=100.0)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--t", type=float, default=0.05)
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--seed", type=int, default=suite.DEFAULT_SEED)
    p.add_argument("--tail-tol", type=float, default=1e-3)
    p.add_argument("--horizon", type=float, default=1e6)
    p.add_argument("--dump", help="debug: write the event path of the first "
                                  "draw to this file (binary)")

    p = sub.add_parser("experiment", help="run one experiment from a config "
                                          "file or flags")
    p.add_argument("--config", help="path to a sectioned key=value config")
    p.add_argument("--name", choices=EXPERIMENT_NAMES)
    _add_mech_args(p)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.5)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--seed", type=int, default=suite.DEFAULT_SEED)
    p.add_argument("--workers", type=int,
                   default=int(os.environ.get("NLCSBP_WORKERS", "1")))
    p.add_argument("--level", type=float, default=1e3)
    p.add_argument("--x0", type=float, default=2.0)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--t-grid", default="0.1,0.05")
    p.add_argument("--tail-tol", type=float, default=1e-3)
    p.add_argument("--out", help="directory for result files")
    p.add_argument("--csv")
    p.add_argument("--json")

    p = sub.add_parser("suite", help="run the full verification battery")
    p.add_argument("--seed", type=int, default=suite.DEFAULT_SEED)
    p.add_argument("--workers", type=int,
                   default=int(os.environ.get("NLCSBP_WORKERS", "1")))
    p.add_argument("--scale", type=float, default=1.0,
                   help="shrink sample sizes (1.0 = declared sizes)")
    p.add_argument("--out", default=".", help="output directory")
    return ap


def _cmd_classify(args):
    if args.alpha > args.beta:
        print("non-explosive (rate index below branching index)")
        return 0
    if args.alpha < args.beta:
        print("explosive (rate index above branching index)")
        return 0
    fam = args.family
    if fam is None:
        print("critical (equal indices): pass --family to evaluate the "
              "test integral", file=sys.stderr)
        return 2
    block = {"family": fam}
    for key in _FAMILY_FIELDS[fam]:
        block[key] = {"gamma": args.gamma, "r": args.r, "c0": args.c0,
                      "alpha": args.alpha, "eps_cut": 1e-3, "delta": 1.0,
                      "c": 1.0}[key]
    errors = []
    mech = _build_mechanism(block, errors)
    if errors:
        print("; ".join(errors), file=sys.stderr)
        return 2
    model = Model(mech, RateFunction(args.kappa, args.beta), 1.0)
    regime = mechanisms.classify_regime(model)
    verdict = "explosive" if regime.critical_explosive else "non-explosive"
    print(f"critical (equal indices): {verdict} by the test integral")
    return 0


def _cmd_phi(args):
    model = Model(_mech_from_args(args), RateFunction(args.kappa, args.beta), 1.0)
    if args.x is None and args.inv is None:
        print("need --x or --inv", file=sys.stderr)
        return 2
    if args.x is not None:
        print(f"phi({args.x}) = {mechanisms.phi_integral(model, args.x)!r}")
    if args.inv is not None:
        print(f"phi_inverse({args.inv}) = "
              f"{mechanisms.phi_integral_inverse(model, args.inv)!r}")
    return 0


def _cmd_limitlaw(args):
    if args.what == "chi-tail":
        out = limit_laws.chi_tail(args.alpha, args.z)
    elif args.what == "chi-laplace":
        out = limit_laws.chi_laplace(args.alpha, args.a)
    elif args.what == "rho-moment":
        out = limit_laws.rho_moment(args.alpha, args.beta, args.c0, args.n)
    elif args.what == "rho-mgf":
        out = limit_laws.rho_mgf(args.alpha, args.beta, args.theta)
    elif args.what == "weibull-cdf":
        out = limit_laws.weibull_cdf(args.alpha, args.t)
    else:
        out = limit_laws.rho_ldp_rate(args.alpha, args.beta, args.c0)
    print(repr(out))
    return 0


def _cmd_simulate(args):
    from . import levy_sim

    mech = _mech_from_args(args)
    rng = RngStream(args.seed, 0)
    if args.what == "explosion":
        model = Model(mech, RateFunction(args.kappa, args.beta), args.x0)
        for i in range(args.n):
            s = csbp.simulate_explosion(model, rng.spawn(i),
                                        tail_tol=args.tail_tol)
            print(f"{s.t_inf_estimate!r},{s.tail_bound!r},{s.events_used},"
                  f"{s.final_level!r}")
    elif args.what == "lookback":
        model = Model(mech, RateFunction(args.kappa, args.beta), args.x0)
        for i in range(args.n):
            pe = csbp.pre_explosion_value(model, args.t, rng.spawn(i),
                                          tail_tol=args.tail_tol)
            print(f"{pe.x_value!r},{pe.renormalized!r}")
    elif args.what == "passage":
        record = [] if args.dump else None
        for i in range(args.n):
            rec = record if i == 0 else None
            tau, pre, post = levy_sim.simulate_until_level(
                mech, args.x0, args.level, rng.spawn(i), record=rec)
            print(f"{tau!r},{pre!r},{post!r}")
        if args.dump:
            with open(args.dump, "wb") as fh:
                levy_sim.dump_events(fh, record)
    else:
        for i in range(args.n):
            try:
                tau = levy_sim.first_passage_down(mech, args.x0, args.a,
                                                  args.horizon, rng.spawn(i))
            except NlcsbpError as exc:
                print(f"undecided: {exc}")
                continue
            print("inf" if tau is None else repr(tau))
    return 0


def _cmd_experiment(args):
    if args.config:
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as exc:
            print(f"i/o error: {exc}", file=sys.stderr)
            return 3
        cfg = validate_config(text)
    else:
        if not args.name:
            print("need --config or --name", file=sys.stderr)
            return 2
        block = {"family": args.family}
        for key in _FAMILY_FIELDS[args.family]:
            block[key] = {"c0": args.c0, "alpha": args.alpha, "delta": args.delta,
                          "r": args.r, "gamma": args.gamma,
                          "eps_cut": args.eps_cut, "c": args.c}[key]
        cfg = RunConfig(
            experiment=args.name, mechanism=block,
            rate={"kappa": args.kappa, "beta": args.beta},
            run={"n": args.n, "seed": args.seed, "workers": args.workers,
                 "level": args.level, "x0": args.x0, "a": args.a,
                 "tail_tol": args.tail_tol,
                 "t_grid": tuple(float(v) for v in args.t_grid.split(","))},
            output={})
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        cfg.output.setdefault("csv", os.path.join(args.out, f"{cfg.experiment}.csv"))
        cfg.output.setdefault("json", os.path.join(args.out, f"{cfg.experiment}.json"))
    if args.csv:
        cfg.output["csv"] = args.csv
    if args.json:
        cfg.output["json"] = args.json
    return dispatch(cfg)


def _cmd_suite(args):
    reports = suite.run_all(seed=args.seed, workers=args.workers,
                            scale=args.scale)
    os.makedirs(args.out, exist_ok=True)
    try:
        suite.write_csv(reports, os.path.join(args.out, "suite.csv"))
        suite.write_json(reports, os.path.join(args.out, "suite.json"))
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    for rep in reports:
        print(f"{rep.name}: {rep.verdict}")
    verdict = suite.worst_verdict(reports)
    print(f"suite: {verdict}")
    return 0 if verdict != "Fail" else 1


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "classify":
            return _cmd_classify(args)
        if args.command == "phi":
            return _cmd_phi(args)
        if args.command == "limitlaw":
            return _cmd_limitlaw(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "experiment":
            return _cmd_experiment(args)
        if args.command == "suite":
            return _cmd_suite(args)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return 2
    except NlcsbpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
