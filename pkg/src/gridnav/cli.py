"""Command-line entry point for the navigation data pipeline.

Subcommands cover the whole flow: generate houses, sample episodes, build
and postprocess traces, generate house descriptions, train the behavior
cloning policy, evaluate agents, compute corpus statistics, and render
trajectories. Every randomized command takes --seed; when omitted, the
auto-chosen seed is echoed to stderr so the run can be replayed.

Exit codes: 0 success, 2 usage, 3 missing input, 4 schema/validation
error, 5 runtime failure. Errors print one JSON object per line on
stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import bc
from .descriptions import (
    HttpTextGenerator,
    OfflineTemplateGenerator,
    generate_descriptions,
    write_descriptions,
)
from .episodes import (
    corpus_stats,
    read_episodes,
    sample_episodes,
    write_episodes,
)
from .evaluation import (
    ExternalProcessAgent,
    GreedyAgent,
    OracleAgent,
    PolicyAgent,
    RandomAgent,
    evaluate,
)
from .housegen import DEFAULT_CATEGORY_POOL, GenerationError, GenerationSpec, generate_house
from .planner import NoPathFound
from .render import RenderSpec, render
from .scene import House, SceneError, load_house, save_house
from .traces import UnclassifiableRotation, build_traces, histogram_report, postprocess, read_traces, write_traces

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MISSING_INPUT = 3
EXIT_SCHEMA = 4
EXIT_RUNTIME = 5


def _error(kind: str, detail: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "detail": detail}) + "\n")


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    seed = random.SystemRandom().randrange(2 ** 32)
    sys.stderr.write(json.dumps({"auto_seed": seed}) + "\n")
    return seed


def _load_houses(paths: list[str]) -> dict[str, House]:
    houses: dict[str, House] = {}
    for raw in paths:
        path = Path(raw)
        if path.is_dir():
            files = sorted(path.glob("*.json"))
            if not files:
                raise FileNotFoundError(f"no house files in directory {path}")
        elif path.exists():
            files = [path]
        else:
            raise FileNotFoundError(f"house path {path} does not exist")
        for file in files:
            house = load_house(file)
            houses[house.id] = house
    return houses


def _spec_from_args(args) -> GenerationSpec:
    pool = DEFAULT_CATEGORY_POOL
    if args.categories:
        with open(args.categories, "r", encoding="utf-8") as fh:
            pool = tuple(line.strip() for line in fh if line.strip())
    return GenerationSpec(
        room_count=args.rooms,
        cells_per_room_range=(args.cells_min, args.cells_max),
        object_density=args.density,
        category_pool=pool,
        furniture_density=args.furniture_density,
        height_range=(args.height_min, args.height_max),
        opaque_prob=args.opaque_prob,
    )


def _gen_house_worker(payload):
    seed, spec = payload
    return generate_house(seed, spec)


def cmd_gen_house(args) -> int:
    seed = _resolve_seed(args)
    spec = _spec_from_args(args)
    if args.count == 1 and args.out:
        save_house(generate_house(seed, spec), args.out)
        return EXIT_OK
    if not args.out_dir:
        _error("usage", "--out-dir is required when --count > 1")
        return EXIT_USAGE
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    payloads = [(seed + i, spec) for i in range(args.count)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            houses = list(pool.map(_gen_house_worker, payloads))
    else:
        houses = [_gen_house_worker(p) for p in payloads]
    for house in houses:
        save_house(house, out_dir / f"{house.id}.json")
    return EXIT_OK


def _episode_seed(seed: int, house_id: str) -> int:
    import hashlib
    digest = hashlib.sha256(f"{seed}:{house_id}".encode("utf-8")).hexdigest()
    return int(digest[:8], 16)


def _sample_worker(payload):
    house, n, seed, max_steps, retry_budget = payload
    return sample_episodes(house, n, seed, max_steps=max_steps,
                           retry_budget=retry_budget)


def cmd_gen_episodes(args) -> int:
    seed = _resolve_seed(args)
    houses = _load_houses(args.houses)
    ordered = [houses[k] for k in sorted(houses)]
    payloads = [(h, args.n, _episode_seed(seed, h.id), args.max_steps,
                 args.retry_budget) for h in ordered]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sample_worker, payloads))
    else:
        results = [_sample_worker(p) for p in payloads]
    episodes = [e for r in results for e in r.episodes]
    failures = [f for r in results for f in r.failures]
    write_episodes(args.out, episodes)
    if failures:
        _error("sampling_incomplete",
               f"{len(failures)} episode slots unfilled "
               f"({sorted({f.reason for f in failures})})")
    return EXIT_OK


def cmd_build_traces(args) -> int:
    houses = _load_houses(args.houses)
    episodes = read_episodes(args.episodes)
    corpus = build_traces(houses, episodes, gold_label=args.gold_label,
                          diff_eq=args.diff_eq)
    write_traces(args.out, corpus)
    return EXIT_OK


def cmd_postprocess(args) -> int:
    seed = _resolve_seed(args)
    corpus = read_traces(args.traces)
    filtered = postprocess(corpus, keep_rate=args.keep_rate, seed=seed)
    write_traces(args.out, filtered)
    sys.stdout.write(json.dumps(histogram_report(corpus, filtered), indent=1) + "\n")
    return EXIT_OK


def cmd_gen_descriptions(args) -> int:
    seed = _resolve_seed(args)
    generator = HttpTextGenerator() if args.remote else OfflineTemplateGenerator(seed)
    records = generate_descriptions(args.n, seed, generator)
    write_descriptions(args.out, records)
    counts: dict[str, int] = {"accepted": 0}
    for record in records:
        if record.accepted:
            counts["accepted"] += 1
        else:
            counts[record.rejection_reason] = counts.get(record.rejection_reason, 0) + 1
    sys.stdout.write(json.dumps(counts, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_train_bc(args) -> int:
    seed = _resolve_seed(args)
    houses = _load_houses(args.houses)
    episodes = read_episodes(args.episodes)
    corpus = read_traces(args.traces)
    features, labels = bc.training_set(houses, episodes, corpus)
    config = bc.TrainConfig(
        learning_rate=args.lr, batch_size=args.batch_size, epochs=args.epochs,
        seed=seed, l2_penalty=args.l2, data_fraction=args.data_fraction)
    result = bc.train(features, labels, config)
    bc.save_params(args.params_out, result.params)
    if args.curve_out:
        bc.save_loss_curve(args.curve_out, result.loss_curve)
    sys.stdout.write(json.dumps({
        "examples": int(features.shape[0]),
        "final_loss": result.loss_curve[-1],
    }) + "\n")
    return EXIT_OK


def _make_agent(args, seed: int):
    if args.agent == "oracle":
        return OracleAgent()
    if args.agent == "random":
        return RandomAgent(seed)
    if args.agent == "greedy":
        return GreedyAgent()
    if args.agent == "policy":
        if not args.params:
            raise FileNotFoundError("--params is required for the policy agent")
        return PolicyAgent(bc.load_params(args.params))
    if args.agent == "external":
        if not args.command:
            raise FileNotFoundError("--command is required for the external agent")
        return ExternalProcessAgent(args.command,
                                    time_budget_s=args.time_budget or 10.0)
    raise ValueError(f"unknown agent {args.agent!r}")


def cmd_eval(args) -> int:
    seed = _resolve_seed(args)
    houses = _load_houses(args.houses)
    episodes = read_episodes(args.episodes)
    agent = _make_agent(args, seed)
    split_of = None
    if args.splits:
        with open(args.splits, "r", encoding="utf-8") as fh:
            split_of = json.load(fh)
    try:
        report = evaluate(agent, episodes, houses, max_steps=args.max_steps,
                          require_visible=not args.distance_only,
                          time_budget_s=args.time_budget, split_of=split_of)
    finally:
        if isinstance(agent, ExternalProcessAgent):
            agent.close()
    if args.report:
        report.write_json(args.report)
    if args.csv:
        report.write_csv(args.csv)
    sys.stdout.write(json.dumps(report.aggregates, indent=1, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_stats(args) -> int:
    houses = _load_houses(args.houses)
    episodes = read_episodes(args.episodes) if args.episodes else []
    report = corpus_stats([houses[k] for k in sorted(houses)], episodes)
    payload = json.dumps(report.to_dict(), indent=1)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload + "\n")
    else:
        sys.stdout.write(payload + "\n")
    return EXIT_OK


def cmd_render(args) -> int:
    house = load_house(args.house)
    spec = RenderSpec(format=args.format,
                      overlays=frozenset(args.overlays.split(",")))
    demo_path = agent_path = start_cell = target_cell = None
    if args.episodes:
        episodes = read_episodes(args.episodes)
        matches = [e for e in episodes if e.house_id == house.id]
        if args.episode_id:
            matches = [e for e in matches if e.id == args.episode_id]
        if not matches:
            raise FileNotFoundError("no matching episode for this house")
        episode = matches[args.index]
        demo_path = list(episode.path.cells)
        start_cell = episode.initial_pose.cell
        target = house.objects_by_id[episode.target_object_id]
        target_cell = house.grid.containing_cell(target.position)
    if args.agent_cells:
        with open(args.agent_cells, "r", encoding="utf-8") as fh:
            agent_path = [tuple(c) for c in json.load(fh)]
    document = render(house, spec, demo_path=demo_path, agent_path=agent_path,
                      start_cell=start_cell, target_cell=target_cell)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(document)
    else:
        sys.stdout.write(document)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridnav",
        description="Grid-world object navigation data pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-house", help="generate procedural houses")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--rooms", type=int, default=3)
    p.add_argument("--cells-min", type=int, default=36)
    p.add_argument("--cells-max", type=int, default=100)
    p.add_argument("--density", type=float, default=0.3)
    p.add_argument("--furniture-density", type=float, default=0.08)
    p.add_argument("--height-min", type=float, default=0.05)
    p.add_argument("--height-max", type=float, default=2.4)
    p.add_argument("--opaque-prob", type=float, default=0.5)
    p.add_argument("--categories", help="file with one object category per line")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--out", help="output file for a single house")
    p.add_argument("--out-dir", help="output directory when --count > 1")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.set_defaults(func=cmd_gen_house)

    p = sub.add_parser("gen-episodes", help="sample navigation episodes")
    p.add_argument("--houses", "--house", nargs="+", required=True,
                   help="house files or directories")
    p.add_argument("--n", type=int, default=5, help="episodes per house")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--max-steps", type=int, default=200)
    p.add_argument("--retry-budget", type=int, default=20)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.set_defaults(func=cmd_gen_episodes)

    p = sub.add_parser("build-traces", help="compile instruction/response traces")
    p.add_argument("--episodes", required=True)
    p.add_argument("--houses", "--house", nargs="+", required=True)
    p.add_argument("--gold-label", action="store_true",
                   help="append the target-difference sentence to instructions")
    p.add_argument("--diff-eq", action="store_true",
                   help="write position differences as explicit equations")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_traces)

    p = sub.add_parser("postprocess", help="rebalance and conflict-filter traces")
    p.add_argument("--traces", required=True)
    p.add_argument("--keep-rate", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_postprocess)

    p = sub.add_parser("gen-descriptions", help="generate house descriptions")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--remote", action="store_true",
                   help="use the HTTP text-generation client (env-configured)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_descriptions)

    p = sub.add_parser("train-bc", help="train the behavior-cloning policy")
    p.add_argument("--episodes", required=True)
    p.add_argument("--houses", "--house", nargs="+", required=True)
    p.add_argument("--traces", required=True)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--l2", type=float, default=0.0)
    p.add_argument("--data-fraction", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--params-out", required=True)
    p.add_argument("--curve-out")
    p.set_defaults(func=cmd_train_bc)

    p = sub.add_parser("eval", help="evaluate an agent over episodes")
    p.add_argument("--agent", required=True,
                   choices=("oracle", "random", "greedy", "policy", "external"))
    p.add_argument("--episodes", required=True)
    p.add_argument("--houses", "--house", nargs="+", required=True)
    p.add_argument("--params", help="policy parameters file (policy agent)")
    p.add_argument("--command", nargs="+", help="external agent command line")
    p.add_argument("--max-steps", type=int, default=200)
    p.add_argument("--distance-only", action="store_true",
                   help="relax success to the distance test only")
    p.add_argument("--time-budget", type=float, default=None)
    p.add_argument("--splits", help="JSON file mapping house id to split name")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--report", help="write the full JSON report here")
    p.add_argument("--csv", help="write the per-episode CSV here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("stats", help="dataset statistics")
    p.add_argument("--houses", "--house", nargs="+", required=True)
    p.add_argument("--episodes")
    p.add_argument("--out")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("render", help="render a house map with overlays")
    p.add_argument("--house", required=True)
    p.add_argument("--episodes", help="episode file to pull the demo path from")
    p.add_argument("--episode-id")
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--agent-cells", help="JSON file with an agent path [[col,row],...]")
    p.add_argument("--format", choices=("ascii", "svg"), default="ascii")
    p.add_argument("--overlays", default="demo,agent,start,target")
    p.add_argument("--out")
    p.set_defaults(func=cmd_render)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        _error("missing_input", str(exc))
        return EXIT_MISSING_INPUT
    except SceneError as exc:
        _error("schema", str(exc))
        return EXIT_SCHEMA
    except (GenerationError, NoPathFound, UnclassifiableRotation) as exc:
        _error("runtime", f"{type(exc).__name__}: {exc}")
        return EXIT_RUNTIME
    except (ValueError, RuntimeError) as exc:
        _error("runtime", f"{type(exc).__name__}: {exc}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
