#!/usr/bin/env python3
"""
Max-linear DAG estimation - CLI Entry Point

Estimate the causal order, coefficient matrix and thresholded DAGs of a
recursive max-linear model from heavy-tailed observations.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

from src.coefficients import estimate_coefficients, estimated_dag
from src.config import PipelineConfig, ValidationConfig
from src.errors import ConfigError, IngestError, RmlmError, StageError
from src.exporter import DataExporter
from src.metrics import DagEnsemble, centroid, centroid_scores, nshd, shd, stability
from src.model import RmlmModel, random_model, simulate
from src.pipeline import PipelineRunner, delta_tag, describe_name, ingest
from src.structure import OrderResult, causal_order
from src.tail import EmpiricalScalings, frechet_transform
from src.tropical import Dag, MaxLinearMatrix, default_names, minimum_dag, reachability
from src.validation import ModelValidator, generate_validation_report


def parse_arguments(argv=None):
    """Parse command line arguments"""
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument('--input', help='CSV file with a header row of node names')
    shared.add_argument('--output-dir', help='Directory for all artifacts (default: output)')
    shared.add_argument('--config', help='JSON file with PipelineConfig fields')
    shared.add_argument('--seed', type=int, help='Random seed (default: 0)')
    shared.add_argument('--k', type=int,
                        help='Exceedance count (order stage for order/pipeline, '
                             'coefficient stage for estimate)')
    shared.add_argument('--a', type=float, help='Scaling multiplier a > 1 (default: 1.3)')
    shared.add_argument('--epsilon', type=float, help='Step selection tolerance (default: 0.1)')
    shared.add_argument('--delta', type=float, nargs='+',
                        help='Threshold grid (default: 0 0.025 0.05 0.1)')
    shared.add_argument('--negate', action='store_true',
                        help='Use the loss side max(-X, 0) of the input')
    shared.add_argument('--date-column', action='store_true',
                        help='Drop the leading date column of the input')
    shared.add_argument('-v', '--verbose', action='store_true', help='Enable verbose output')

    parser = argparse.ArgumentParser(
        description="Causal order and max-linear DAG estimation for heavy-tailed data",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Full run on daily returns, loss side, first column is the date
  python main.py pipeline --input returns.csv --date-column --negate

  # Only the causal order, with 300 exceedances and per-step details
  python main.py order --input returns.csv --negate --k 300 -v

  # Coefficient matrix at k=92 reusing a stored order
  python main.py estimate --input returns.csv --negate --order output/order.json --k 92

  # Simulate a random 6-node model and check the estimator on it
  python main.py simulate --d 6 --n 100000 --output-dir sim
  python main.py pipeline --input sim/sample.csv --output-dir sim/run

  # Exact-arithmetic self check without the Monte-Carlo part
  python main.py validate --mc-n 0
        """
    )
    sub = parser.add_subparsers(dest='command', required=True)

    sub.add_parser('transform', parents=[shared],
                   help='Rank-transform the input to standard Frechet(2) margins')
    sub.add_parser('order', parents=[shared], help='Estimate a causal order')

    p = sub.add_parser('estimate', parents=[shared], help='Estimate the coefficient matrix')
    p.add_argument('--order', help='order.json from a previous run (default: estimate one)')
    p.add_argument('--route', choices=['linear', 'recursive'], help='A^2 recovery route')

    p = sub.add_parser('dag', parents=[shared], help='Thresholded DAGs of a stored matrix')
    p.add_argument('--matrix', required=True, help='Matrix JSON written by estimate')

    p = sub.add_parser('compare', parents=[shared], help='SHD and nSHD between two DAGs')
    p.add_argument('--dags', nargs=2, required=True, metavar='DAG_JSON')

    p = sub.add_parser('stability', parents=[shared],
                       help='Centroid and edge stability of a DAG ensemble')
    p.add_argument('--dags', nargs='+', required=True, metavar='DAG_JSON',
                   help='DAG JSON files carrying their exceedance count "k"')

    p = sub.add_parser('pipeline', parents=[shared], help='Run the complete workflow')
    p.add_argument('--jobs', type=int, help='Worker threads for the coefficient grid')

    p = sub.add_parser('simulate', parents=[shared], help='Sample from a max-linear model')
    p.add_argument('--model', help='Model JSON (default: random model)')
    p.add_argument('--d', type=int, default=5, help='Nodes of the random model (default: 5)')
    p.add_argument('--n', type=int, default=10000, help='Observations (default: 10000)')
    p.add_argument('--edge-prob', type=float, default=0.5,
                   help='Edge probability of the random model (default: 0.5)')

    p = sub.add_parser('validate', parents=[shared], help='Run the invariant suite')
    p.add_argument('--dims', type=int, nargs='+', help='Model sizes (default: 3 4 5 6)')
    p.add_argument('--models', type=int, help='Random models per size (default: 50)')
    p.add_argument('--mc-n', type=int, help='Monte-Carlo sample size, 0 to skip')
    p.add_argument('--mc-k', type=int, help='Monte-Carlo exceedances')
    p.add_argument('--mc-seeds', type=int, help='Seeds of the empirical order check, 0 to skip')

    return parser.parse_args(argv)


def build_config(args) -> PipelineConfig:
    """Defaults, then the config file, then explicit flags"""
    config = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    config = config.merged(
        input=args.input,
        output_dir=args.output_dir,
        seed=args.seed,
        a=args.a,
        epsilon=args.epsilon,
        delta_grid=args.delta,
        negate=True if args.negate else None,
        date_column=True if args.date_column else None,
        jobs=getattr(args, 'jobs', None),
        route=getattr(args, 'route', None),
        k_order=args.k if args.command in ('order', 'pipeline') else None,
    )
    return config


def load_sample(config: PipelineConfig):
    if not config.input:
        raise IngestError("--input is required for this command")
    raw, names = ingest(config.input, config.date_column, config.negate)
    print(f"✓ Loaded {raw.shape[0]} observations of {raw.shape[1]} variables")
    return frechet_transform(raw), names


def print_order(order: OrderResult, names):
    for s, step in enumerate(order.steps, start=1):
        print(f"  {s:>2}. {', '.join(describe_name(names[v]) for v in step)}")
    print(f"  Order: {' > '.join(names[v] for v in order.order)}")


def cmd_transform(args, config, exporter):
    sample, names = load_sample(config)
    exporter.save_sample(sample, names, "transformed.csv")
    print(f"✓ Saved transformed data to {exporter.output_dir / 'transformed.csv'}")


def cmd_order(args, config, exporter):
    sample, names = load_sample(config)
    config.validate(n=sample.shape[0])
    print(f"\n🔍 Estimating causal order (k={config.k_order}, a={config.a}, "
          f"epsilon={config.epsilon})...")
    order = causal_order(EmpiricalScalings(sample, config.k_order), config.a, config.epsilon)
    exporter.save_json(order.to_dict(names), "order.json")
    print(f"✓ Order found in {len(order.steps)} steps")
    print_order(order, names)


def cmd_estimate(args, config, exporter):
    sample, names = load_sample(config)
    config.validate(n=sample.shape[0])
    if args.order:
        with open(args.order, 'r', encoding='utf-8') as f:
            order = OrderResult.from_dict(json.load(f), names)
        print(f"✓ Loaded order from {args.order}")
    else:
        order = causal_order(EmpiricalScalings(sample, config.k_order), config.a, config.epsilon)
        exporter.save_json(order.to_dict(names), "order.json")
        print(f"✓ Order estimated at k={config.k_order} in {len(order.steps)} steps")

    k = args.k if args.k is not None else config.all_counts()[-1]
    matrix = estimate_coefficients(EmpiricalScalings(sample, k), order,
                                   linear=config.route == 'linear')
    exporter.save_matrix(matrix, names, f"A_r{k}.json", extra={"k": k, "order": order.to_dict(names)})
    print(f"✓ Coefficient matrix at k={k} saved to {exporter.output_dir / f'A_r{k}.json'}")


def cmd_dag(args, config, exporter):
    with open(args.matrix, 'r', encoding='utf-8') as f:
        data = json.load(f)
    matrix = MaxLinearMatrix.from_dict(data)
    names = data.get("names") or default_names(matrix.d)
    stem = Path(args.matrix).stem
    for delta in config.delta_grid:
        dag = estimated_dag(matrix, delta)
        exporter.save_dag(dag, names, f"dag_{stem}_delta{delta_tag(delta)}",
                          extra={"delta": delta, "k": data.get("k")})
        print(f"  ✓ delta={delta:g}: {len(dag.edges)} edges")


def _load_dag(path):
    with open(path, 'r', encoding='utf-8') as f:
        data = json.load(f)
    return Dag.from_dict(data), data


def cmd_compare(args, config, exporter):
    (g1, _), (g2, _) = (_load_dag(path) for path in args.dags)
    result = {"dags": list(args.dags), "shd": shd(g1, g2), "nshd": nshd(g1, g2),
              "edges": [len(g1.edges), len(g2.edges)]}
    exporter.save_json(result, "compare.json")
    print(f"✓ SHD = {result['shd']}, nSHD = {result['nshd']:.4f} "
          f"({result['edges'][0]} vs {result['edges'][1]} edges)")


def cmd_stability(args, config, exporter):
    members, names, deltas = [], None, set()
    for path in args.dags:
        dag, data = _load_dag(path)
        if data.get("k") is None:
            raise ConfigError(f"{path} has no exceedance count 'k'")
        members.append((dag, int(data["k"])))
        names = names or data.get("names")
        if data.get("delta") is not None:
            deltas.add(float(data["delta"]))
    if len(deltas) > 1:
        raise ConfigError(f"ensemble members were thresholded at different deltas: {sorted(deltas)}")
    delta = deltas.pop() if deltas else config.delta_grid[0]
    ensemble = DagEnsemble(tuple(members), delta=delta)
    names = names or default_names(ensemble.d)
    dag, r = centroid(ensemble)
    scores = centroid_scores(ensemble)
    exporter.save_csv([{"r": k, "nshd_sum": s, "centroid": k == r} for k, s in scores.items()],
                      "nshd_scores.csv")
    exporter.save_dag(dag, names, "centroid", extra={"delta": delta, "k": r, "score": scores[r]})
    score = stability(ensemble)
    exporter.save_csv(score.to_frame(names), "stability.csv")
    print(f"✓ Centroid at delta={delta:g}, r={r} (nSHD sum {scores[r]:.4f}, {len(dag.edges)} edges)")
    for count, edges in sorted(score.edges_by_count().items(), reverse=True):
        if edges:
            print(f"  {count}/{score.size}: {len(edges)} edges")


def cmd_pipeline(args, config, exporter):
    print(f"Input: {config.input}")
    print(f"Order exceedances: {config.k_order}, a={config.a}, epsilon={config.epsilon}")
    print(f"Exceedance grids: {config.grids()}")
    print(f"Delta grid: {config.delta_grid}\n")
    report = PipelineRunner(config, verbose=args.verbose).run()
    exporter.print_summary(report.to_dict())


def cmd_simulate(args, config, exporter):
    if args.model:
        with open(args.model, 'r', encoding='utf-8') as f:
            model = RmlmModel.from_dict(json.load(f))
        seed = config.seed
    else:
        model = random_model(args.d, seed=config.seed, edge_prob=args.edge_prob,
                             well_ordered=False)
        seed = model.seed
    names = default_names(model.d)
    X = simulate(model, args.n, seed=seed)
    exporter.save_sample(X, names, "sample.csv")
    exporter.save_json(model.to_dict(names), "model.json")
    exporter.save_dag(reachability(model.matrix), names, "true_reachability")
    exporter.save_dag(minimum_dag(model.matrix), names, "true_minimum_dag")
    print(f"✓ Simulated {args.n} rows from a {model.d}-node model into {exporter.output_dir}")


def cmd_validate(args, config, exporter):
    vconfig = ValidationConfig().merged(
        dims=args.dims, models_per_dim=args.models, mc_n=args.mc_n, mc_k=args.mc_k,
        mc_order_seeds=args.mc_seeds,
        seed=args.seed, a=args.a, epsilon=args.epsilon,
    )
    report = ModelValidator(vconfig, verbose=args.verbose).run()
    text = generate_validation_report(report)
    exporter.save_json(report.to_dict(), "validation.json")
    exporter.save_markdown(text, "validation.txt")
    print(text)
    if not report.passed:
        sys.exit(1)


HANDLERS = {
    "transform": cmd_transform,
    "order": cmd_order,
    "estimate": cmd_estimate,
    "dag": cmd_dag,
    "compare": cmd_compare,
    "stability": cmd_stability,
    "pipeline": cmd_pipeline,
    "simulate": cmd_simulate,
    "validate": cmd_validate,
}


def main(argv=None):
    """Main execution function"""
    args = parse_arguments(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )
    config = build_config(args)

    print("\n" + "="*60)
    print(f"Max-linear DAG estimation: {args.command}")
    print("="*60 + "\n")

    exporter = DataExporter(output_dir=config.output_dir, verbose=args.verbose)
    HANDLERS[args.command](args, config, exporter)

    print("\n✅ Done!\n")


if __name__ == "__main__":
    try:
        main()
    except KeyboardInterrupt:
        print("\n\n⚠️  Interrupted by user. Exiting...")
        sys.exit(0)
    except ConfigError as e:
        print(f"\n❌ [config] {e}", file=sys.stderr)
        sys.exit(2)
    except StageError as e:
        print(f"\n❌ {e}", file=sys.stderr)
        sys.exit(1)
    except RmlmError as e:
        print(f"\n❌ [{type(e).__name__}] {e}", file=sys.stderr)
        sys.exit(1)
    except Exception as e:
        print(f"\n❌ Error: {e}")
        print("\nRun with -v for verbose output to debug the issue.")
        sys.exit(1)
