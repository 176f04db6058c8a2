"""Command-line interface: ``rmd <subcommand>``.

Exit codes: 0 success, 2 usage or input error, 3 provider error,
4 internal invariant violation.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .agents.decompose import decompose_k
from .agents.providers import ChatCompletionsLLM, FixtureLLM
from .config import EngineConfig, resolve_config
from .corpus.build import build_database
from .corpus.embedders import RemoteEmbedder, StubEmbedder, TableEmbedder
from .corpus.index import load_index, save_index
from .diffusion.models import load_score_model
from .errors import IndexFormatError, InvalidArgumentError, RMDError
from .metrics.report import evaluate, load_feature_file
from .motion import load_features, load_masks, load_skeleton, save_features, save_motion
from .pipeline import FeatureNormalizer, compose_plan, generate, refine_features, stage, stage_seeds
from .retrieval.retrieve import Query, RetrievalPlan, hierarchical_retrieve

log = logging.getLogger("rmd")
SIDECAR_SCHEMA = 1


class UsageError(InvalidArgumentError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, ensure_ascii=False, allow_nan=False) + "\n"


def _parent(path) -> Path:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return Path(path)


def _write(path, text: str) -> None:
    _parent(path).write_text(text, "utf-8")


# ---------------------------------------------------------------- providers

def make_llm(cfg: EngineConfig):
    if cfg.llm == "fixture":
        return FixtureLLM.from_file(cfg.require_path("llm_fixture"))
    return ChatCompletionsLLM.from_env(cfg.llm_base_url, cfg.llm_model)


def make_embedder(cfg: EngineConfig):
    if cfg.embedder == "stub":
        return StubEmbedder(cfg.embed_dim)
    if cfg.embedder == "table":
        return TableEmbedder.from_file(cfg.require_path("embed_table"))
    return RemoteEmbedder.from_env(cfg.embed_base_url, cfg.embed_model)


def _skeleton_and_masks(cfg: EngineConfig):
    skeleton = load_skeleton(cfg.require_path("skeleton") if cfg.skeleton else None)
    masks = load_masks(cfg.require_path("masks") if cfg.masks else None, skeleton, cfg.fine_root_rotation)
    return skeleton, masks


def _prompt_dir(cfg: EngineConfig):
    return cfg.require_path("prompts") if cfg.prompts else None


def _load_db(cfg: EngineConfig):
    return load_index(cfg.require_path("index"))


# ---------------------------------------------------------------- commands

def cmd_db_build(args, cfg: EngineConfig) -> int:
    for p in (args.motion_dir, args.annotations):
        if not Path(p).exists():
            raise InvalidArgumentError(f"not found: {p}")
    llm = make_llm(cfg)
    embedder = make_embedder(cfg)
    cache = None
    out = Path(args.out)
    if out.exists() and not args.no_cache:
        try:
            cache = load_index(out)
        except IndexFormatError as exc:
            log.warning("ignoring unreadable cache %s: %s", out, exc)
    db = build_database(args.motion_dir, args.annotations, llm, embedder, seed=cfg.seed, cache=cache,
                        max_retries=cfg.max_retries, max_in_flight=cfg.max_in_flight,
                        prompt_dir=_prompt_dir(cfg))
    save_index(db, _parent(out))
    calls = getattr(llm, "call_count", None)
    sys.stdout.write(_dumps({"index": str(out), "entries": len(db), "embedding_dim": db.embedding_dim,
                             "provider_tag": db.provider_tag, "llm_calls": calls}))
    return 0


def cmd_decompose(args, cfg: EngineConfig) -> int:
    sets = decompose_k(make_llm(cfg), args.text, cfg.agent, seed=cfg.seed, prompt_dir=_prompt_dir(cfg))
    sys.stdout.write(_dumps([s.to_dict() for s in sets]))
    return 0


def _retrieve(args, cfg, db):
    return hierarchical_retrieve(db, Query(args.prompt, args.length), cfg.retrieval, make_llm(cfg),
                                 make_embedder(cfg), cfg.agent, seed=stage_seeds(cfg.seed)["retrieve"],
                                 prompt_dir=_prompt_dir(cfg), force_level=args.level)


def cmd_retrieve(args, cfg: EngineConfig) -> int:
    plan = _retrieve(args, cfg, _load_db(cfg))
    text = _dumps(plan.to_dict())
    if args.out:
        _write(args.out, text)
    sys.stdout.write(text)
    return 0


def cmd_compose(args, cfg: EngineConfig) -> int:
    try:
        plan = RetrievalPlan.from_dict(json.loads(Path(args.plan).read_text("utf-8")))
    except OSError as exc:
        raise InvalidArgumentError(f"cannot read plan {args.plan}: {exc.strerror or exc}") from None
    except ValueError as exc:
        raise InvalidArgumentError(f"{args.plan}: invalid JSON ({exc})") from None
    skeleton, masks = _skeleton_and_masks(cfg)
    clip = compose_plan(_load_db(cfg), plan, args.length, skeleton, masks)
    save_motion(_parent(args.out), clip, skeleton)
    if args.features_out:
        from .motion import to_pose_features
        save_features(_parent(args.features_out), to_pose_features(clip, skeleton))
    return 0


def cmd_refine(args, cfg: EngineConfig) -> int:
    x = load_features(args.features)
    model = load_score_model(cfg.require_path("score_model"), cfg.schedule) if cfg.t0 > 0 else None
    normalizer = None
    if cfg.index and cfg.t0 > 0:
        db = _load_db(cfg)
        if db.feature_mean is not None:
            normalizer = FeatureNormalizer.from_database(db)
    sd = cfg.sdedit
    out = refine_features(x, type(sd)(sd.t0, sd.steps, sd.mode, stage_seeds(cfg.seed)["sdedit"]), cfg.schedule,
                          model, normalizer, condition=args.prompt or "")
    save_features(_parent(args.out), out)
    return 0


def cmd_generate(args, cfg: EngineConfig) -> int:
    with stage("load"):
        db = _load_db(cfg)
        skeleton, masks = _skeleton_and_masks(cfg)
        model = None
        if not args.dry_run and cfg.t0 > 0:
            model = load_score_model(cfg.require_path("score_model"), cfg.schedule)
        llm, embedder = make_llm(cfg), make_embedder(cfg)
    result = generate(db, args.prompt, args.length, llm=llm, embedder=embedder,
                      score_model=model if model is not None else _NullScore(),
                      retrieval=cfg.retrieval, agent=cfg.agent, sdedit_config=cfg.sdedit, schedule=cfg.schedule,
                      seed=cfg.seed, skeleton=skeleton, masks=masks, prompt_dir=_prompt_dir(cfg),
                      dry_run=args.dry_run, force_level=args.level)
    sidecar = {
        "schema_version": SIDECAR_SCHEMA,
        "prompt": args.prompt,
        "length": args.length,
        "seed": cfg.seed,
        "stage_seeds": result.seeds,
        "plan": result.plan.to_dict(),
        "index_provider_tag": db.provider_tag,
        "sdedit": {"t0": cfg.t0, "steps": cfg.steps, "mode": cfg.mode,
                   "sigma_min": cfg.sigma_min, "sigma_max": cfg.sigma_max},
        "dry_run": bool(args.dry_run),
    }
    if args.dry_run:
        sys.stdout.write(_dumps(sidecar))
        return 0
    if not args.out_motion:
        raise InvalidArgumentError("generate needs --out-motion unless --dry-run is given")
    with stage("write"):
        save_motion(_parent(args.out_motion), result.motion, skeleton)
        if args.out_features:
            save_features(_parent(args.out_features), result.features)
        _write(args.sidecar or f"{args.out_motion}.plan.json", _dumps(sidecar))
    return 0


class _NullScore:
    """Placeholder used when t0 == 0, where the score model is never called."""

    def score(self, x, t, condition=""):
        raise InvalidArgumentError("score model required for t0 > 0")


def cmd_eval(args, cfg: EngineConfig) -> int:
    generated = load_feature_file(args.generated)
    real = load_feature_file(args.real).motion_features if args.real else None
    report = evaluate(generated, real, repetitions=args.repetitions, seed=cfg.seed, batch_size=args.batch_size,
                      diversity_pairs=args.diversity_pairs, n_per_group=args.n_per_group)
    sys.stdout.write(_dumps(report.to_dict()))
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    # SUPPRESS keeps a flag given before the subcommand from being reset by the subparser's default
    common = _Parser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--seed", type=int, help="base seed for every stochastic stage")
    common.add_argument("--json-errors", action="store_true", help="print errors as JSON on stderr")
    common.add_argument("--index", help="index JSONL path")
    common.add_argument("--llm", choices=("fixture", "remote"))
    common.add_argument("--llm-fixture", help="fixture reply table (JSON)")
    common.add_argument("--embedder", choices=("stub", "table", "remote"))
    common.add_argument("--embed-table", help="precomputed embedding table (JSON)")
    common.add_argument("--prompts", help="directory overriding the bundled prompt templates")
    common.add_argument("--skeleton", help="skeleton definition JSON")
    common.add_argument("--masks", help="body-part mask JSON")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="rmd", description=__doc__.splitlines()[0], parents=[common])
    p.add_argument("--version", action="version", version=f"rmd {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    db = sub.add_parser("db", help="retrieval database commands", parents=[common])
    dbsub = db.add_subparsers(dest="db_command", required=True, parser_class=_Parser)
    b = dbsub.add_parser("build", help="ingest, decompose and embed a corpus", parents=[common])
    b.add_argument("--motion-dir", required=True)
    b.add_argument("--annotations", required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--no-cache", action="store_true", help="ignore an existing index at --out")
    b.set_defaults(func=cmd_db_build)

    d = sub.add_parser("decompose", help="sample k decompositions of a description", parents=[common])
    d.add_argument("--text", required=True)
    d.add_argument("--k", type=int)
    d.add_argument("--temperature", type=float)
    d.set_defaults(func=cmd_decompose)

    def retrieval_flags(sp):
        sp.add_argument("--prompt", required=True)
        sp.add_argument("--length", type=int, required=True, help="target length in frames")
        sp.add_argument("--k", type=int)
        sp.add_argument("--lam", type=float, help="length-penalty weight")
        sp.add_argument("--tau-full", type=float)
        sp.add_argument("--tau-half", type=float)
        sp.add_argument("--score-rule", choices=("max", "selected"))
        sp.add_argument("--level", choices=("full", "half", "fine"), help="force a level")

    r = sub.add_parser("retrieve", help="print the retrieval plan as JSON", parents=[common])
    retrieval_flags(r)
    r.add_argument("--out", help="also write the plan here")
    r.set_defaults(func=cmd_retrieve)

    c = sub.add_parser("compose", help="splice the clips named by a plan", parents=[common])
    c.add_argument("--plan", required=True)
    c.add_argument("--length", type=int, help="defaults to the plan's length")
    c.add_argument("--out", required=True)
    c.add_argument("--features-out")
    c.add_argument("--fine-root-rotation", choices=("trajectory", "lower_body"))
    c.set_defaults(func=cmd_compose)

    def refine_flags(sp):
        sp.add_argument("--t0", type=float)
        sp.add_argument("--steps", type=int)
        sp.add_argument("--mode", choices=("deterministic", "stochastic_sde"))
        sp.add_argument("--score-model")

    f = sub.add_parser("refine", help="SDEdit-refine a feature file", parents=[common])
    f.add_argument("--features", required=True)
    f.add_argument("--out", required=True)
    f.add_argument("--prompt", help="condition passed to the score model")
    refine_flags(f)
    f.set_defaults(func=cmd_refine)

    g = sub.add_parser("generate", help="retrieve, compose, refine and write a motion", parents=[common])
    retrieval_flags(g)
    refine_flags(g)
    g.add_argument("--out-motion")
    g.add_argument("--out-features")
    g.add_argument("--sidecar", help="plan/seed record (default: <out-motion>.plan.json)")
    g.add_argument("--dry-run", action="store_true", help="print the plan; skip refinement")
    g.add_argument("--fine-root-rotation", choices=("trajectory", "lower_body"))
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("eval", help="compute metrics from feature files", parents=[common])
    e.add_argument("--generated", required=True)
    e.add_argument("--real")
    e.add_argument("--repetitions", type=int, default=20)
    e.add_argument("--batch-size", type=int, default=32)
    e.add_argument("--diversity-pairs", type=int, default=300)
    e.add_argument("--n-per-group", type=int, default=10)
    e.set_defaults(func=cmd_eval)
    return p


CLI_SETTINGS = ("seed", "index", "llm", "llm_fixture", "embedder", "embed_table", "prompts", "skeleton", "masks",
                "k", "temperature", "lam", "tau_full", "tau_half", "score_rule", "t0", "steps", "mode",
                "score_model", "fine_root_rotation")


def _report(exc: BaseException, code: int, json_errors: bool) -> None:
    if json_errors:
        payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
        if getattr(exc, "stage", None):
            payload["stage"] = exc.stage
        sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")
    else:
        where = f" [{exc.stage}]" if getattr(exc, "stage", None) else ""
        sys.stderr.write(f"rmd: error{where}: {exc}\n")


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    json_errors = "--json-errors" in argv
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        cli = {k: getattr(args, k, None) for k in CLI_SETTINGS}
        cfg = resolve_config(getattr(args, "config", None), cli)
        return args.func(args, cfg)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except RMDError as exc:
        _report(exc, exc.exit_code, json_errors)
        return exc.exit_code
    except OSError as exc:
        _report(exc, 2, json_errors)
        return 2
    except Exception as exc:  # unexpected: report as an invariant violation, not a traceback
        log.debug("unexpected error", exc_info=True)
        _report(exc, 4, json_errors)
        return 4


if __name__ == "__main__":
    sys.exit(main())
