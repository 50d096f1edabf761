"""Command-line surface: score, winners, check-metric, taxonomy, robust,
counterexample, hierarchy, sample, converge, mle-check.

Exit codes: 0 ok, 2 parse/input error, 3 enumeration cap, 4 invalid
metric, 5 no witness exists, 6 bad model parameter. Exact rationals
cross this boundary as "p/q" strings; --approx switches to decimals.
Every command that writes result files appends a run manifest.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import re
import sys
import time
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

from . import __version__
from .core import (
    Committee,
    default_universe,
    format_profile,
    frac_str,
    parse_frac,
    parse_profile,
)
from .errors import (
    AbccError,
    CapExceededError,
    InvalidCommitteeSizeError,
    InvalidNoiseParamError,
    InvalidRuleError,
    MetricAxiomError,
    NoCounterexampleError,
    NotMonotonicError,
    NotNormalizedError,
    PreconditionError,
    ProfileParseError,
    SizeMismatchError,
)
from .experiments import (
    TrialConfig,
    convergence_curve,
    curve_to_csv,
    curve_to_json,
    hierarchy_report,
    hierarchy_to_csv,
    hierarchy_to_json,
    mle_equivalence_check,
)
from .metrics import (
    METRIC_KINDS,
    check_metric_axioms,
    load_metric_file,
    make_metric,
    metric_to_json,
    taxonomy_report,
)
from .noise import (
    RNG_SCHEME,
    audit_d_monotonic,
    load_model_file,
    make_level_model,
    make_mp,
    model_to_json,
    sample_profile,
    jump_counterexample,
)
from .oracle import expected_gap, robustness_verdict, verdict_to_json
from .rules import RULE_KINDS, load_rule_file, make_rule, profile_score, winners

EXIT_PARSE = 2
EXIT_CAPS = 3
EXIT_BAD_METRIC = 4
EXIT_NO_WITNESS = 5
EXIT_BAD_MODEL = 6


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_-]+", "-", name).strip("-")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class Runner:
    """Output directory, manifest bookkeeping, and format flags for one command."""

    def __init__(self, args):
        self.args = args
        self.out = Path(getattr(args, "out", ".") or ".")
        self.approx = getattr(args, "approx", False)
        self.outputs: list[str] = []
        self.inputs: dict[str, str] = {}
        self.started = datetime.now(timezone.utc).isoformat()
        self.t0 = time.monotonic()

    def fmt(self, value: Fraction) -> str:
        return repr(float(value)) if self.approx else frac_str(value)

    def track_input(self, path) -> Path:
        path = Path(path)
        self.inputs[str(path)] = _sha256(path)
        return path

    def write(self, name: str, text: str) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        path = self.out / name
        path.write_text(text, encoding="utf-8")
        self.outputs.append(str(path))
        return path

    def write_json(self, name: str, doc) -> Path:
        return self.write(name, json.dumps(doc, indent=2, sort_keys=True) + "\n")

    def finish_manifest(self):
        """Append one manifest record; called only by commands that wrote files."""
        config = {
            key: value
            for key, value in sorted(vars(self.args).items())
            if key != "func" and value is not None
        }
        canonical = json.dumps(config, sort_keys=True, default=str)
        record = {
            "command": " ".join(sys.argv),
            "config": json.loads(canonical),
            "config_hash": hashlib.sha256(canonical.encode()).hexdigest(),
            "seed": getattr(self.args, "seed", None),
            "tool_version": __version__,
            "rng": RNG_SCHEME,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "started": self.started,
            "finished": datetime.now(timezone.utc).isoformat(),
            "wall_seconds": round(time.monotonic() - self.t0, 6),
        }
        self.out.mkdir(parents=True, exist_ok=True)
        with open(self.out / "manifest.jsonl", "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Shared argument resolution.

def _resolve_rule(args, m: int, k: int, runner: Runner | None = None):
    if getattr(args, "rule_file", None):
        if runner:
            runner.track_input(args.rule_file)
        return load_rule_file(args.rule_file)
    spec = args.rule
    if spec is None:
        raise ProfileParseError("no rule given (use --rule or --rule-file)")
    kind, _, param = spec.partition(":")
    if kind == "p_geometric":
        return make_rule(kind, m, k, p=parse_frac(param or "1/2"))
    if kind == "thiele":
        weights_arg = param or getattr(args, "weights", None)
        if not weights_arg:
            raise ProfileParseError("thiele requires --weights or thiele:w1;w2;...")
        weights = [parse_frac(w) for w in re.split(r"[;,]", weights_arg)]
        return make_rule(kind, m, k, weights=weights)
    if kind == "custom":
        raise ProfileParseError("custom rules need --rule-file")
    return make_rule(kind, m, k)


def _resolve_metric(args, m: int, runner: Runner | None = None):
    if getattr(args, "metric_file", None):
        if runner:
            runner.track_input(args.metric_file)
        return load_metric_file(args.metric_file)
    if getattr(args, "metric", None) is None:
        raise ProfileParseError("no metric given (use --metric or --metric-file)")
    return make_metric(args.metric, m)


def _resolve_model(args, runner: Runner | None = None):
    if getattr(args, "model_file", None):
        if runner:
            runner.track_input(args.model_file)
        return load_model_file(args.model_file, getattr(args, "m", None))
    universe = default_universe(args.m)
    ground_set = universe.set_of(args.ground.split(","))
    ground = Committee(ground_set, ground_set.size)
    if args.k is not None and ground.k != args.k:
        raise ProfileParseError(f"ground has {ground.k} members but --k {args.k}")
    if args.model == "mp":
        if args.p is None:
            raise ProfileParseError("model mp requires --p")
        return make_mp(parse_frac(args.p), universe, ground)
    if args.model == "level":
        metric = _resolve_metric(args, args.m, runner)
        if not getattr(args, "probs", None):
            raise ProfileParseError("model level requires --probs p0,p1,...")
        probs = [parse_frac(q) for q in args.probs.split(",")]
        return make_level_model(metric, ground, probs, universe)
    raise ProfileParseError(f"unknown model {args.model!r}")


def _load_profile(args, runner: Runner | None = None):
    path = Path(args.profile)
    if runner:
        runner.track_input(path)
    return parse_profile(path.read_text(encoding="utf-8"))


def _labels(committee, universe):
    return list(committee.labels(universe))


# ---------------------------------------------------------------------------
# Commands.

def cmd_score(args):
    runner = Runner(args)
    universe, profile = _load_profile(args, runner)
    members = universe.set_of(args.committee.split(","))
    committee = Committee(members, members.size)
    rule = _resolve_rule(args, universe.m, committee.k, runner)
    breakdown = profile_score(rule, committee, profile)
    print(runner.fmt(breakdown.total))
    return 0


def cmd_winners(args):
    runner = Runner(args)
    universe, profile = _load_profile(args, runner)
    rule = _resolve_rule(args, universe.m, args.k, runner)
    result = winners(rule, profile)
    print(json.dumps({"winners": [_labels(c, universe) for c in result]}))
    return 0


def cmd_check_metric(args):
    runner = Runner(args)
    universe = default_universe(args.m)
    try:
        metric = _resolve_metric(args, args.m, runner)
    except MetricAxiomError as exc:
        doc = {"is_metric": False, "reason": str(exc)}
        if exc.witness:
            doc["witness"] = [list(s.labels(universe)) for s in exc.witness]
        print(json.dumps(doc, sort_keys=True))
        raise
    check = check_metric_axioms(metric)
    doc = {"is_metric": check.ok, "metric": metric.name, "m": metric.m}
    if not check.ok:
        doc["axiom"] = check.axiom
        doc["witness"] = [list(s.labels(universe)) for s in check.witness]
        print(json.dumps(doc, sort_keys=True))
        raise MetricAxiomError(f"{metric.name} violates the {check.axiom} axiom")
    print(json.dumps(doc, sort_keys=True))
    return 0


def cmd_taxonomy(args):
    runner = Runner(args)
    universe = default_universe(args.m)
    try:
        metric = _resolve_metric(args, args.m, runner)
    except MetricAxiomError as exc:
        doc = {"is_metric": False, "reason": str(exc)}
        if exc.witness:
            doc["witness"] = [list(s.labels(universe)) for s in exc.witness]
        print(json.dumps(doc, sort_keys=True))
        raise
    report = taxonomy_report(metric, args.k)
    doc = {"metric": report.metric_name, "m": report.m, "k": report.k}
    doc.update(report.flags())
    doc["witnesses"] = {
        flag: _witness_doc(witness, universe)
        for flag, witness in report.witnesses.items()
    }
    runner.write_json(f"taxonomy_{_slug(metric.name)}_m{args.m}k{args.k}.json", doc)
    runner.finish_manifest()
    print(json.dumps(doc, sort_keys=True))
    return 0


def _witness_doc(witness, universe):
    def encode(obj):
        if isinstance(obj, Committee):
            return _labels(obj, universe)
        if hasattr(obj, "labels"):
            return list(obj.labels(universe))
        if isinstance(obj, tuple):
            return [encode(x) for x in obj]
        if isinstance(obj, Fraction):
            return frac_str(obj)
        return obj

    return encode(witness)


def cmd_robust(args):
    runner = Runner(args)
    universe = default_universe(args.m)
    rule = _resolve_rule(args, args.m, args.k, runner)
    metric = _resolve_metric(args, args.m, runner)
    verdict = robustness_verdict(rule, metric)
    doc = verdict_to_json(verdict, universe)
    stem = f"robust_{_slug(rule.name)}_{_slug(metric.name)}_m{args.m}k{args.k}"
    runner.write_json(stem + ".json", doc)
    if verdict.witness is not None:
        runner.write_json(stem + "_witness_model.json", model_to_json(verdict.witness.model))
    runner.finish_manifest()
    print(json.dumps({"status": verdict.status}, sort_keys=True))
    return 0


def cmd_counterexample(args):
    runner = Runner(args)
    universe = default_universe(args.m)
    rule = _resolve_rule(args, args.m, args.k, runner)
    package = jump_counterexample(rule)
    # re-verify the package before writing anything
    gap = expected_gap(rule, package.model, package.ground, package.rival)
    ok, _ = audit_d_monotonic(package.model, package.metric)
    if gap != package.expected_gap or gap >= 0 or not ok:
        raise RuntimeError("counterexample failed re-verification")
    doc = {
        "rule": rule.name,
        "m": args.m,
        "k": args.k,
        "jump": list(package.jump),
        "delta": frac_str(package.delta),
        "expected_gap": frac_str(package.expected_gap),
        "ground": _labels(package.ground, universe),
        "rival": _labels(package.rival, universe),
        "metric": metric_to_json(package.metric, universe),
        "model": model_to_json(package.model),
    }
    runner.write_json(f"counterexample_{_slug(rule.name)}_m{args.m}k{args.k}.json", doc)
    runner.finish_manifest()
    print(json.dumps({"expected_gap": frac_str(package.expected_gap)}, sort_keys=True))
    return 0


def cmd_hierarchy(args):
    runner = Runner(args)
    rules = [
        _resolve_rule(argparse.Namespace(rule=token, rule_file=None), args.m, args.k)
        for token in args.rules.split(",")
    ]
    metrics = [make_metric(token, args.m) for token in args.metrics.split(",")]
    report = hierarchy_report(rules, metrics, threads=args.threads)
    stem = f"hierarchy_m{args.m}k{args.k}"
    runner.write(stem + ".csv", hierarchy_to_csv(report))
    runner.write_json(stem + ".json", hierarchy_to_json(report))
    runner.finish_manifest()
    print(hierarchy_to_csv(report), end="")
    return 0


def cmd_sample(args):
    runner = Runner(args)
    model = _resolve_model(args, runner)
    profile = sample_profile(model, args.n, args.seed)
    text = format_profile(model.universe, profile)
    path = runner.write(f"sample_n{args.n}_seed{args.seed}.txt", text)
    runner.finish_manifest()
    print(str(path))
    return 0


def cmd_converge(args):
    runner = Runner(args)
    model = _resolve_model(args, runner)
    rule = _resolve_rule(args, args.m or model.m, model.ground.k, runner)
    n_grid = tuple(int(tok) for tok in args.n_grid.split(","))
    config = TrialConfig(rule, model, n_grid, args.trials, args.seed)
    curve = convergence_curve(config)
    stem = f"converge_{_slug(rule.name)}_seed{args.seed}"
    runner.write(stem + ".csv", curve_to_csv(curve, runner.approx))
    runner.write_json(stem + ".json", curve_to_json(curve, runner.approx))
    runner.finish_manifest()
    print(curve_to_csv(curve, runner.approx), end="")
    return 0


def cmd_mle_check(args):
    runner = Runner(args)
    agree, total = mle_equivalence_check(
        parse_frac(args.p), args.m, args.k, args.profiles, args.seed, args.n_max
    )
    doc = {
        "p": args.p,
        "m": args.m,
        "k": args.k,
        "profiles": total,
        "equivalent": agree,
    }
    runner.write_json(f"mle_check_m{args.m}k{args.k}_seed{args.seed}.json", doc)
    runner.finish_manifest()
    print(f"equivalent: {agree}/{total}")
    return 0


# ---------------------------------------------------------------------------
# Parser.

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="abcc",
        description="Approval-based committee rules, noise models, and robustness verdicts",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(func=func)
        p.add_argument("--out", default=".", help="output directory for result files")
        p.add_argument("--approx", action="store_true", help="decimal output instead of p/q")
        p.add_argument("--threads", type=int, default=1, help="worker cap for parallel cells")
        return p

    p = add("score", cmd_score, help="exact score of a committee over a profile")
    p.add_argument("--rule", help=f"rule kind: {', '.join(RULE_KINDS)}")
    p.add_argument("--rule-file", help="custom rule JSON file")
    p.add_argument("--weights", help="thiele weights, comma-separated rationals")
    p.add_argument("--committee", required=True, help="comma-separated labels")
    p.add_argument("--profile", required=True, help="profile text file")

    p = add("winners", cmd_winners, help="all max-score committees (ties preserved)")
    p.add_argument("--rule", help="rule kind")
    p.add_argument("--rule-file")
    p.add_argument("--weights")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--profile", required=True)

    p = add("check-metric", cmd_check_metric, help="verify the four metric axioms")
    p.add_argument("--metric", help=f"metric kind: {', '.join(METRIC_KINDS)}")
    p.add_argument("--metric-file", help="custom metric JSON file")
    p.add_argument("--m", type=int, required=True)

    p = add("taxonomy", cmd_taxonomy, help="metric taxonomy flags and witnesses")
    p.add_argument("--metric")
    p.add_argument("--metric-file")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--k", type=int, required=True)

    p = add("robust", cmd_robust, help="exact robustness verdict for rule vs metric")
    p.add_argument("--rule")
    p.add_argument("--rule-file")
    p.add_argument("--weights")
    p.add_argument("--metric")
    p.add_argument("--metric-file")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--k", type=int, required=True)

    p = add("counterexample", cmd_counterexample, help="adversarial metric+model for a rule")
    p.add_argument("--rule")
    p.add_argument("--rule-file")
    p.add_argument("--weights")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--k", type=int, required=True)

    p = add("hierarchy", cmd_hierarchy, help="verdict matrix over rules x metrics")
    p.add_argument("--rules", required=True, help="comma-separated rule kinds")
    p.add_argument("--metrics", required=True, help="comma-separated metric kinds")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--k", type=int, required=True)

    p = add("sample", cmd_sample, help="sample a profile from a noise model")
    p.add_argument("--model", choices=["mp", "level"])
    p.add_argument("--model-file")
    p.add_argument("--p", help="mp parameter in (1/2, 1], e.g. 3/4")
    p.add_argument("--metric")
    p.add_argument("--metric-file")
    p.add_argument("--probs", help="level probabilities p0,p1,...")
    p.add_argument("--ground", help="comma-separated ground committee labels")
    p.add_argument("--m", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)

    p = add("converge", cmd_converge, help="recovery-rate curve over a vote-count grid")
    p.add_argument("--rule")
    p.add_argument("--rule-file")
    p.add_argument("--weights")
    p.add_argument("--model", choices=["mp", "level"])
    p.add_argument("--model-file")
    p.add_argument("--p")
    p.add_argument("--metric")
    p.add_argument("--metric-file")
    p.add_argument("--probs")
    p.add_argument("--ground")
    p.add_argument("--m", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--n-grid", default="10,30,100,300,1000")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, required=True)

    p = add("mle-check", cmd_mle_check, help="distance-minimizers vs score-winners agreement")
    p.add_argument("--p", required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--profiles", type=int, required=True)
    p.add_argument("--n-max", type=int, default=12)
    p.add_argument("--seed", type=int, required=True)

    return parser


_EXIT_CODES = [
    ((ProfileParseError, InvalidRuleError, PreconditionError, SizeMismatchError), EXIT_PARSE),
    ((CapExceededError, InvalidCommitteeSizeError), EXIT_CAPS),
    ((MetricAxiomError,), EXIT_BAD_METRIC),
    ((NoCounterexampleError,), EXIT_NO_WITNESS),
    ((InvalidNoiseParamError, NotMonotonicError, NotNormalizedError), EXIT_BAD_MODEL),
]


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AbccError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for types, code in _EXIT_CODES:
            if isinstance(exc, types):
                return code
        return 1


if __name__ == "__main__":
    sys.exit(main())
