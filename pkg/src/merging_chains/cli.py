"""Command-line experiment runner.

Verbs:

* ``run <config.yaml>``  -- build an environment from a generator preset,
  evaluate the requested bound curves against the exact evolution, and write
  a CSV report plus a JSON summary (and optional plot-data files).  Exit
  status 0 on success, 2 when a dominance violation (bound below exact by
  more than the slack) is detected, 1 on configuration errors.
* ``describe <generator>`` -- hypotheses and parameter schema of a preset.
* ``validate <environment.json>`` -- structural validation of a serialized
  environment (0 ok, 2 violations, 1 unreadable).

The config file is YAML (comment-capable, round-trips all fields).  A single
seed drives all randomness; ``--seed`` overrides the config.  The
``MERGING_CHAINS_THREADS`` environment variable caps BLAS thread counts (it
must be set before numpy loads, which is why this module imports the library
lazily).
"""

import argparse
import json
import os
import sys

_THREAD_VAR = "MERGING_CHAINS_THREADS"

DESCRIPTIONS = {
    "stick": """\
stick: lazy conductance walk on the ring Z/NZ.
Hypotheses: schedule supported on ring edges (self-loops allowed), pointwise
non-decreasing in t, every ring-edge conductance >= 1.  With conductances
bounded by M, comparison with the unit-conductance ring gives
gamma_t >= gamma_ref/(2M); merging then happens within order
M N^2 (log N + log M + log(1/eta)) steps.
Params: N (states), laziness (default 0.5), schedule (see below).
""",
    "two-state": """\
two-state: the no-merging construction.  Self-loop conductances grow like
t^(1+epsilon) against a fixed unit edge, so the invariant mass grows faster
than the spectral product decays and the exact distance between the two
starts stays bounded away from zero; crossing searches report not-reached.
Params: epsilon > 0, horizon, laziness (default 0.5).
""",
    "interpolation": """\
interpolation: convex interpolation c_t = (1/t) c1 + (1 - 1/t) c2 between
two simple random walks on connected graphs over the same vertices.
Hypothesis: degree measures satisfy nu2(x) >= nu1(x) everywhere (then the
invariant measures are non-decreasing even though individual edges are not
monotone).  Params: n, edges1, edges2 (edge lists), laziness.
""",
    "birth-death-hub": """\
birth-death-hub: a birth-death chain on the truncated path 0..L whose hub 0
gains an extra edge to x_t with weight u(x_t) w_t at each step t.
Hypotheses: base invariant probability u peaks at the hub (u(0) = max u);
hub targets x_t >= 1; weights w_t >= 0.  Bounded total weight keeps the
masses within (1 + sum w) of u.  Params: L, xs, ws, base_edges (optional
[x, y, weight] list; default geometric path with a hub self-loop), laziness.
""",
    "torus": """\
torus: lazy conductance walk on (Z/NZ)^d with a monotone nearest-neighbour
schedule, 1 <= c_t <= M.  The normalize flag divides conductances by
(N+1)^d (kept verbatim from the source construction), putting the total
mass in [1, (2d+1)M] so the Nash route (C, D = d/4, T = d N^2) applies.
Params: N, d, schedule, normalize (default true), laziness.
""",
    "hypercube": """\
hypercube: lazy conductance walk on {0,1}^N with a monotone schedule on
Hamming edges, 1 <= c_t <= M.  The normalize flag divides the measures by
2^N, giving masses in [1, M] and min_x pi~_t(x) >= 1/(M 2^N), the setting
for the log-Sobolev route.  Params: N, schedule, normalize (default true),
laziness.
""",
    "explicit-environment-file": """\
explicit-environment-file: load a serialized environment (JSON with fields
horizon, kernels, measures) instead of generating one.  Params: path.
""",
}

SCHEDULE_HELP = """\
Schedules (params.schedule):
  kind: random-monotone   params c_min, c_max  (seeded per-edge ramps)
  kind: uniform           one expression for every graph edge:
                          expression in {constant, linear-capped, power-law,
                          custom-table} with its params
  kind: edges             explicit list [[x, y, expression, params], ...]
"""


class ConfigError(Exception):
    pass


def _need(cfg, key, where="config"):
    if key not in cfg:
        raise ConfigError(f"{where} is missing required field {key!r}")
    return cfg[key]


def _build_schedule(n, edge_list, spec, horizon, rng, where):
    from . import networks

    kind = _need(spec, "kind", where)
    if kind == "random-monotone":
        return networks.random_monotone_schedule(
            n, edge_list, horizon, rng,
            c_min=float(spec.get("c_min", 1.0)),
            c_max=float(spec.get("c_max", 3.0)))
    if kind == "uniform":
        expr = _need(spec, "expression", where)
        params = dict(_need(spec, "params", where))
        edges = [(x, y, expr, params) for (x, y) in edge_list]
        return networks.schedule_from_edges(n, edges, horizon, monotone=True)
    if kind == "edges":
        edges = [(int(x), int(y), str(e), dict(p))
                 for (x, y, e, p) in _need(spec, "edges", where)]
        return networks.schedule_from_edges(
            n, edges, horizon, monotone=bool(spec.get("monotone", True)))
    raise ConfigError(f"{where}.kind {kind!r} unknown")


def _unit_conductances(n, edges):
    import numpy as np

    c = np.zeros((n, n))
    for e in edges:
        x, y = int(e[0]), int(e[1])
        w = float(e[2]) if len(e) > 2 else 1.0
        c[x, y] += w
        if x != y:
            c[y, x] += w
    return c


def build_environment(cfg, rng):
    """Generator dispatch; returns (environment, context dict)."""
    from . import networks
    from .core import load_environment

    gen = _need(cfg, "generator")
    params = dict(cfg.get("params", {}))
    horizon = int(_need(cfg, "horizon")) if gen != "explicit-environment-file" \
        else None
    laziness = float(params.get("laziness", 0.5))
    ctx = {"generator": gen}

    if gen == "stick":
        N = int(_need(params, "N", "params"))
        sched = _build_schedule(N, networks.cycle_edges(N),
                                _need(params, "schedule", "params"),
                                horizon, rng, "params.schedule")
        return networks.gen_stick(N, sched, laziness), ctx
    if gen == "two-state":
        eps = float(_need(params, "epsilon", "params"))
        return networks.gen_two_state_no_merging(eps, horizon, laziness), ctx
    if gen == "interpolation":
        n = int(_need(params, "n", "params"))
        c1 = _unit_conductances(n, _need(params, "edges1", "params"))
        c2 = _unit_conductances(n, _need(params, "edges2", "params"))
        return networks.gen_interpolation(c1, c2, horizon, laziness), ctx
    if gen == "birth-death-hub":
        L = int(_need(params, "L", "params"))
        if "base_edges" in params:
            base = _unit_conductances(L + 1, params["base_edges"])
        else:
            base = _unit_conductances(
                L + 1,
                [(0, 0, 1.0)] + [(x, x + 1, 2.0 ** -x) for x in range(L)])
        xs = list(params.get("xs", []))
        ws = list(params.get("ws", []))
        return networks.gen_birth_death_hub(base, xs, ws, horizon, laziness), ctx
    if gen == "torus":
        N = int(_need(params, "N", "params"))
        d = int(_need(params, "d", "params"))
        n = N ** d
        sched = _build_schedule(n, networks.torus_edges(N, d),
                                _need(params, "schedule", "params"),
                                horizon, rng, "params.schedule")
        return networks.gen_torus(N, d, sched, laziness,
                                  normalize=bool(params.get("normalize", True))), ctx
    if gen == "hypercube":
        N = int(_need(params, "N", "params"))
        n = 2 ** N
        sched = _build_schedule(n, networks.hypercube_edges(N),
                                _need(params, "schedule", "params"),
                                horizon, rng, "params.schedule")
        return networks.gen_hypercube(N, sched, laziness,
                                      normalize=bool(params.get("normalize", True))), ctx
    if gen == "explicit-environment-file":
        return load_environment(_need(params, "path", "params")), ctx
    raise ConfigError(f"unknown generator {gen!r}; valid: "
                      + ", ".join(sorted(DESCRIPTIONS)))


def _resolve_gammas(cfg, env, seed):
    import numpy as np

    from . import networks, spectral

    constants = dict(cfg.get("constants", {}))
    policy = constants.get("gammas", "exact-eigen")
    if policy == "exact-eigen":
        return spectral.environment_gammas(env), policy
    if policy == "supplied":
        g = np.asarray(_need(constants, "supplied_gammas", "constants"),
                       dtype=float)
        return g, policy
    if policy == "comparison":
        comp = dict(_need(constants, "comparison", "constants"))
        M = float(_need(comp, "M", "constants.comparison"))
        a = float(comp.get("a", 2.0))
        gen = cfg.get("generator")
        params = dict(cfg.get("params", {}))
        if gen == "stick":
            ref_c = _unit_conductances(
                int(params["N"]), networks.cycle_edges(int(params["N"])))
        elif gen == "torus":
            ref_c = _unit_conductances(
                int(params["N"]) ** int(params["d"]),
                networks.torus_edges(int(params["N"]), int(params["d"])))
        elif gen == "hypercube":
            ref_c = _unit_conductances(
                2 ** int(params["N"]), networks.hypercube_edges(int(params["N"])))
        else:
            raise ConfigError(
                "constants.gammas = comparison needs a stick/torus/hypercube "
                "generator (the reference walk is the unit-conductance graph)")
        R, u = networks.kernel_from_conductances(ref_c)
        t_probe = 1
        K = env.kernel(t_probe)
        Q = spectral.symmetrization(K, env.measure(t_probe), check=False)
        report = spectral.comparison_gamma(
            (Q, env.measure(t_probe)), (R, u), M, a, seed=seed)
        return np.full(env.horizon, report.gamma), policy
    raise ConfigError(f"constants.gammas policy {policy!r} unknown")


def run(config_path, seed_override=None) -> int:
    import yaml

    with open(config_path) as fh:
        cfg = yaml.safe_load(fh)
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a mapping")

    import numpy as np

    from . import bounds, spectral
    from .core import validate_environment

    seed = int(cfg.get("seed", 0)) if seed_override is None else int(seed_override)
    rng = np.random.default_rng(seed)

    env, ctx = build_environment(cfg, rng)
    report_v = validate_environment(env)
    if not report_v.ok:
        print(str(report_v), file=sys.stderr)
        print("error: generated environment failed validation", file=sys.stderr)
        return 1

    queries = dict(cfg.get("queries", {}))
    pairs_cfg = queries.get("pairs", "all-pairs")
    if pairs_cfg == "all-pairs":
        n = env.n_states
        if n > 128:
            raise ConfigError("all-pairs queries are capped at 128 states; "
                              "list explicit pairs")
        pairs = [(x, y) for x in range(n) for y in range(x + 1, n)]
    else:
        pairs = [(int(x), int(y)) for (x, y) in pairs_cfg]
    etas = [float(e) for e in queries.get("etas", [0.25])]
    for eta in etas:
        if not 0 < eta < 1:
            raise ConfigError(f"queries.etas entry {eta!r} outside (0, 1)")
    theorems = list(cfg.get("theorems", ["T3"]))

    gammas, gamma_policy = _resolve_gammas(cfg, env, seed)
    constants = dict(cfg.get("constants", {}))

    nash = None
    if any(t.startswith("T4") for t in theorems):
        spec = dict(_need(constants, "nash", "constants"))
        D = float(_need(spec, "D", "constants.nash"))
        T = int(_need(spec, "T", "constants.nash"))
        if spec.get("fit"):
            nash = spectral.fit_nash_C(env, D, T, seed=seed)
        else:
            nash = spectral.NashParams(C=float(_need(spec, "C",
                                                     "constants.nash")),
                                       D=D, T=T)
    alphas = None
    if "T5" in theorems:
        spec = constants.get("alphas")
        if spec is None:
            raise ConfigError("theorem T5 needs constants.alphas")
        if isinstance(spec, dict) and "uniform" in spec:
            alphas = np.full(env.horizon, float(spec["uniform"]))
        else:
            alphas = np.asarray(spec, dtype=float)
    alpha_uniform = constants.get("alpha_uniform")
    if "T6" in theorems and alpha_uniform is None:
        raise ConfigError("theorem T6 needs constants.alpha_uniform")
    rho = constants.get("rho")

    report = bounds.bound_vs_exact_sweep(
        env, pairs, etas, theorems, gammas, nash=nash, alphas=alphas,
        alpha_uniform=None if alpha_uniform is None else float(alpha_uniform),
        rho=None if rho is None else float(rho), seed=seed,
        extra_params={"generator": ctx["generator"],
                      "gamma-policy": gamma_policy, "config": cfg})

    output = dict(cfg.get("output", {}))
    csv_path = output.get("csv", "report.csv")
    summary_path = output.get("summary", "summary.json")
    report.to_csv(csv_path)
    report.to_json(summary_path)
    if output.get("plot_data"):
        report.write_plot_data(output["plot_data"])
    print(f"wrote {csv_path} and {summary_path}")
    if not report.dominance_ok:
        print(f"error: dominance violation, min margin "
              f"{report.dominance_min:.3e} at slack {bounds.DOMINANCE_SLACK}",
              file=sys.stderr)
        return 2
    return 0


def describe(generator) -> int:
    if generator not in DESCRIPTIONS:
        print(f"error: unknown generator {generator!r}; valid ids: "
              + ", ".join(sorted(DESCRIPTIONS)), file=sys.stderr)
        return 1
    print(DESCRIPTIONS[generator])
    print(SCHEDULE_HELP)
    return 0


def validate(env_path) -> int:
    from .core import load_environment, validate_environment

    try:
        env = load_environment(env_path)
    except Exception as exc:  # unreadable file is a usage error
        print(f"error: cannot load environment: {exc}", file=sys.stderr)
        return 1
    report = validate_environment(env)
    print(str(report))
    return 0 if report.ok else 2


def main(argv=None) -> int:
    threads = os.environ.get(_THREAD_VAR)
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ.setdefault(var, threads)

    parser = argparse.ArgumentParser(
        prog="merging-chains",
        description="Merging-time bound experiments for time-inhomogeneous "
                    "Markov chains")
    sub = parser.add_subparsers(dest="verb", required=True)
    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
    p_desc = sub.add_parser("describe", help="describe a generator preset")
    p_desc.add_argument("generator")
    p_val = sub.add_parser("validate", help="validate an environment file")
    p_val.add_argument("environment")

    args = parser.parse_args(argv)
    try:
        if args.verb == "run":
            return run(args.config, args.seed)
        if args.verb == "describe":
            return describe(args.generator)
        return validate(args.environment)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
