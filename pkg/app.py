"""
qlslab command line: binary linear least squares solved with QAOA,
its classical baselines, and the experiment plumbing around them.

    python app.py <subcommand> [flags]

Every file written is echoed on standard output.
"""

import argparse
import json
import logging
import os
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path

import pandas as pd
from dotenv import load_dotenv

from analysis.curve_fit import fit_power_law, fit_success_model
from backends.noisy import NoisyBackend
from backends.shots import ShotBackend
from backends.statevector import ExactBackend
from baselines.annealing import SaConfig, sa_success_table, success_curve_from_table
from circuits.basis import rewrite_basis
from circuits.builder import build_qaoa_circuit
from circuits.coupling import CouplingMap
from circuits.report import depth_and_counts
from circuits.routing import route
from data_sources.files import DirectorySource, write_dataset
from data_sources.generator import DEFAULT_N_VALUES, DatasetSpec, GeneratedSource, generate
from nbmf.als import NbmfProblem, nbmf_solve
from nbmf.solvers import backend_by_name
from optimizer.imfil import OptimizerConfig
from problems.blls import load_instance, three_variable_example
from problems.ising import SpinConvention, brute_force_solve, instance_to_ising
from qaoa.driver import DEFAULT_FINAL_SHOTS, default_schedule, run_qaoa
from qaoa.experiment import NOISE_SCAN_SHOTS, ExperimentPlan, run_experiment, write_experiment_tables
from qaoa.params import QaoaParams
from simulator.noise import NoiseModel
from utils.error_handling import ValidationError, cli_error_handler, validate_experiment_params
from utils.parallel import default_jobs
from utils.tables import read_table, write_table

# Load environment variables from .env file
load_dotenv()

logger = logging.getLogger('qlslab')

DEFAULT_OUT = './qlslab_out'


def setup_logging(out_dir: Path, verbose: bool = False) -> None:
    """Attach a rotating file handler under <out>/logs and a console handler to the 'qlslab' logger"""
    log_dir = out_dir / 'logs'
    os.makedirs(log_dir, exist_ok=True)

    level_name = 'DEBUG' if verbose else os.getenv('QLSLAB_LOG_LEVEL', 'INFO').upper()
    logger.setLevel(getattr(logging, level_name, logging.INFO))

    # main() may run more than once in one process
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    file_handler = RotatingFileHandler(
        log_dir / 'qlslab.log',
        maxBytes=10485760,  # 10MB
        backupCount=10
    )
    console_handler = logging.StreamHandler()

    formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')
    file_handler.setFormatter(formatter)
    console_handler.setFormatter(formatter)

    logger.addHandler(file_handler)
    logger.addHandler(console_handler)


def emit(path) -> None:
    print(str(path))


def _write_json(data, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w') as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write('\n')
    return path


def _qaoa_mode(args, n: int):
    if args.mode == 'exact':
        return ExactBackend()
    shots = args.shots or 2 ** n
    if args.mode == 'shots':
        return ShotBackend(shots)
    return NoisyBackend(NoiseModel(scale=args.noise_scale), shots, coupling=CouplingMap.by_name(args.coupling, n))


@cli_error_handler
def cmd_gen_dataset(args: argparse.Namespace) -> int:
    spec = DatasetSpec(n_values=tuple(args.n), m=args.m, density=args.density, problems_per_n=args.count,
                       consistent_fraction=args.consistent_fraction, master_seed=args.seed,
                       sparse_b=args.sparse_b)
    for path in write_dataset(generate(spec, args.jobs), args.out):
        emit(path)
    return 0


@cli_error_handler
def cmd_solve(args: argparse.Namespace) -> int:
    instance = load_instance(args.instance)
    p_ising = instance_to_ising(instance)
    energy, ground_bits = brute_force_solve(p_ising)
    x = SpinConvention.bits_to_variables(min(ground_bits))
    solution = {
        'instance_id': instance.instance_id,
        'n': instance.n,
        'ground_energy': energy,
        'ground_bits': sorted(SpinConvention.format_bits(b) for b in ground_bits),
        'x': [int(v) for v in x],
        'residual_sq': instance.residual_sq(x),
    }

    if args.qaoa:
        starts, budget = default_schedule(args.p)
        record = run_qaoa(p_ising, args.p, _qaoa_mode(args, instance.n), OptimizerConfig(budget=args.budget or budget),
                          args.starts or starts, args.seed, instance_id=instance.instance_id)
        trace_path = write_table([{'eval_index': i, 'value': v} for i, v in record.trace],
                                 args.out / f"{instance.instance_id}_trace.csv", 'trace',
                                 columns=['eval_index', 'value'])
        record.trace_csv_path = trace_path.name
        solution['qaoa'] = record.to_json_dict()
        emit(trace_path)

    emit(_write_json(solution, args.out / f"{instance.instance_id}_solution.json"))
    return 0


@cli_error_handler
def cmd_experiment(args: argparse.Namespace) -> int:
    params = {
        'p_values': args.p, 'modes': args.mode, 'shots': args.shots, 'repetitions': args.repetitions,
        'budget': args.budget, 'starts': args.starts, 'noise_scales': args.noise_scale, 'jobs': args.jobs,
    }
    is_valid, error_message = validate_experiment_params(params)
    if not is_valid:
        raise ValidationError(error_message)

    if args.dataset:
        source = DirectorySource(args.dataset)
    else:
        source = GeneratedSource(DatasetSpec(n_values=tuple(args.n), problems_per_n=args.count, m=args.m,
                                             density=args.density, master_seed=args.seed), args.jobs)
    instances = source.to_list()
    logger.info(f"Experiment over {len(instances)} instance(s) from {source.source_name}")

    plan = ExperimentPlan(p_values=tuple(args.p), modes=tuple(args.mode), shots=tuple(args.shots or ()),
                          repetitions=args.repetitions, budget=args.budget, starts=args.starts,
                          coupling=args.coupling, noise_scales=tuple(args.noise_scale), master_seed=args.seed,
                          basis=args.basis, energy_reference=args.energy_reference,
                          final_shots=args.final_shots, noise_scan=args.noise_scan, out_dir=str(args.out))
    records = run_experiment(plan, instances, args.out, args.jobs)
    for path in write_experiment_tables(records, args.out):
        emit(path)
    return 0


@cli_error_handler
def cmd_sa_baseline(args: argparse.Namespace) -> int:
    if args.n_min > args.n_max:
        raise ValidationError("--n-min must not exceed --n-max", field='n_min')
    spec = DatasetSpec(n_values=tuple(range(args.n_min, args.n_max + 1)), m=args.m, density=args.density,
                       problems_per_n=args.count, master_seed=args.seed)
    cfg = SaConfig(t0=args.t0, tf=args.tf, k=args.steps, seed=args.seed)
    table = sa_success_table(generate(spec, args.jobs), args.runs, cfg, args.jobs)
    emit(write_table(table, args.out / 'sa_problems.csv', 'sa_problems'))
    emit(write_table(success_curve_from_table(table), args.out / 'sa_success.csv', 'sa_success'))
    return 0


@cli_error_handler
def cmd_fit_curves(args: argparse.Namespace) -> int:
    df = read_table(args.input)
    column = args.column or ('rel_error_median' if args.model == 'power' else 'success')
    for key in ('p', 'mode'):
        value = getattr(args, key)
        if value is not None and key in df.columns:
            df = df[df[key] == value]
    if 'n' not in df.columns or column not in df.columns:
        raise ValidationError(f"{args.input} needs columns 'n' and '{column}'", field='column')

    observed = df.dropna(subset=[column]).groupby('n', sort=True)[column].median()
    points = list(zip(observed.index.astype(int), observed.to_numpy(dtype=float)))
    if args.model == 'power':
        fit = fit_power_law(points, fixed_b=args.fixed_b)
    else:
        fit = fit_success_model(points, args.k, fix_a_to_one=args.fix_a)

    n_values = observed.index.to_numpy(dtype=float)
    curve = pd.DataFrame({'n': observed.index.astype(int), 'observed': observed.to_numpy(dtype=float),
                          'model': fit.predict(n_values)})
    if args.model == 'success':
        curve['per_query'] = fit.per_query(n_values)
    emit(_write_json(fit.to_json_dict(), args.out / f"fit_{args.model}.json"))
    emit(write_table(curve, args.out / f"fit_{args.model}_curve.csv", 'fit_curve'))
    return 0


@cli_error_handler
def cmd_transpile_report(args: argparse.Namespace) -> int:
    instance = load_instance(args.instance) if args.instance else three_variable_example()
    p_ising = instance_to_ising(instance)
    gamma = args.gamma or [0.5] * args.p
    beta = args.beta or [0.5] * args.p
    if len(gamma) != args.p or len(beta) != args.p:
        raise ValidationError(f"--gamma and --beta need {args.p} value(s) each", field='params')

    circuit = build_qaoa_circuit(p_ising, QaoaParams(gamma, beta), zz_threshold=args.zz_threshold)
    coupling = CouplingMap.by_name(args.coupling, instance.n)
    circuit = route(circuit, coupling, swap_back=args.swap_back)
    if args.basis:
        circuit = rewrite_basis(circuit)

    report = depth_and_counts(circuit)
    report.update({'instance_id': instance.instance_id, 'p': args.p, 'coupling': coupling.name,
                   'basis': 'u1_u3_cx' if args.basis else 'native', 'swap_back': args.swap_back,
                   'layout': list(circuit.layout)})
    print(json.dumps(report, indent=2, sort_keys=True))

    circuit_path = args.out / 'circuit.txt'
    circuit_path.parent.mkdir(parents=True, exist_ok=True)
    circuit_path.write_text(circuit.to_text())
    emit(circuit_path)
    emit(_write_json(report, args.out / 'transpile_report.json'))
    return 0


@cli_error_handler
def cmd_nbmf(args: argparse.Namespace) -> int:
    v = pd.read_csv(args.input, header=None, comment='#').to_numpy(dtype=float)
    problem = NbmfProblem(v, args.rank, max_outer_iters=args.max_iters, tolerance=args.tol, seed=args.seed,
                          restarts=args.restarts, flip_search=args.flip_search)
    backend = backend_by_name(args.backend, seed=args.seed)
    result = nbmf_solve(problem, backend)

    w_columns = [f"w{k}" for k in range(args.rank)]
    h_columns = [f"h{j}" for j in range(result.h.shape[1])]
    emit(write_table(pd.DataFrame(result.w, columns=w_columns), args.out / 'W.csv', 'nbmf_w'))
    emit(write_table(pd.DataFrame(result.h, columns=h_columns), args.out / 'H.csv', 'nbmf_h'))
    trace = [{'iteration': i, 'objective': value} for i, value in enumerate(result.objective_trace)]
    emit(write_table(trace, args.out / 'trace.csv', 'nbmf_trace', columns=['iteration', 'objective']))
    return 0


def _add_common(parser: argparse.ArgumentParser, jobs: bool = False) -> None:
    parser.add_argument("--seed", type=int, default=0, help="Master seed")
    parser.add_argument("--out", type=Path, default=None, help="Output directory (default $QLSLAB_OUT)")
    parser.add_argument("--verbose", action="store_true", help="Log at DEBUG level")
    if jobs:
        parser.add_argument("--jobs", type=int, default=None, help="Worker processes (default $QLSLAB_JOBS or CPUs)")


def _add_qaoa_flags(parser: argparse.ArgumentParser, sweep: bool) -> None:
    nargs = '+' if sweep else None
    parser.add_argument("--p", type=int, nargs=nargs, default=[1] if sweep else 1, help="QAOA depth(s)")
    parser.add_argument("--mode", nargs=nargs, choices=['exact', 'shots', 'noisy'],
                        default=['exact'] if sweep else 'exact', help="Expectation backend(s)")
    parser.add_argument("--shots", type=int, nargs=nargs, default=None,
                        help="Shots per evaluation (default 2^(n-2)..2^(n+2) in sweeps, 2^n otherwise)")
    parser.add_argument("--budget", type=int, default=None, help="Evaluations per start (default per depth)")
    parser.add_argument("--starts", type=int, default=None, help="Random starts (default per depth)")
    parser.add_argument("--coupling", choices=['all', 'line', 't'], default='all', help="Coupling map for noisy mode")
    parser.add_argument("--noise-scale", type=float, nargs=nargs, default=[1.0] if sweep else 1.0,
                        help="Multiplier on the default noise rates")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog='qlslab', description=__doc__.strip().splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)

    apg = sub.add_parser("gen-dataset", help="Generate a seeded BLLS dataset with manifest.")
    apg.add_argument("--n", type=int, nargs='+', default=list(DEFAULT_N_VALUES))
    apg.add_argument("--count", type=int, default=100, help="Problems per n")
    apg.add_argument("--m", type=int, default=40, help="Rows of A")
    apg.add_argument("--density", type=float, default=0.2)
    apg.add_argument("--consistent-fraction", type=float, default=0.4)
    apg.add_argument("--sparse-b", action="store_true", help="Draw b of inconsistent cases with the density of A")
    _add_common(apg, jobs=True)
    apg.set_defaults(func=cmd_gen_dataset)

    aps = sub.add_parser("solve", help="Solve one instance by brute force and optionally QAOA.")
    aps.add_argument("instance", type=Path, help="Instance JSON file")
    aps.add_argument("--qaoa", action="store_true")
    _add_qaoa_flags(aps, sweep=False)
    _add_common(aps)
    aps.set_defaults(func=cmd_solve)

    ape = sub.add_parser("experiment", help="Run a resumable QAOA sweep.")
    source = ape.add_mutually_exclusive_group()
    source.add_argument("--dataset", type=Path, default=None, help="Dataset directory from gen-dataset")
    source.add_argument("--n", type=int, nargs='+', default=[3, 4, 5])
    ape.add_argument("--count", type=int, default=5, help="Generated problems per n")
    ape.add_argument("--m", type=int, default=40)
    ape.add_argument("--density", type=float, default=0.2)
    _add_qaoa_flags(ape, sweep=True)
    ape.add_argument("--repetitions", type=int, default=1)
    ape.add_argument("--basis", action="store_true", help="Rewrite to {U1, U3, CNOT} before noise")
    ape.add_argument("--energy-reference", choices=['hamiltonian', 'residual'], default='hamiltonian')
    ape.add_argument("--final-shots", type=int, default=None,
                     help=f"Shots of the final measurement (default the run's shots or {DEFAULT_FINAL_SHOTS})")
    ape.add_argument("--noise-scan", action="store_true",
                     help=f"Re-measure the exact-mode angles under each noise scale instead of optimizing noisily "
                          f"(final shots default {NOISE_SCAN_SHOTS})")
    _add_common(ape, jobs=True)
    ape.set_defaults(func=cmd_experiment)

    apa = sub.add_parser("sa-baseline", help="Simulated-annealing success curve over n.")
    apa.add_argument("--n-min", type=int, default=3)
    apa.add_argument("--n-max", type=int, default=10)
    apa.add_argument("--count", type=int, default=10, help="Problems per n")
    apa.add_argument("--runs", type=int, default=1000, help="Annealing runs per problem")
    apa.add_argument("--t0", type=float, default=100.0)
    apa.add_argument("--tf", type=float, default=0.01)
    apa.add_argument("--steps", type=int, default=10, help="Temperature steps k")
    apa.add_argument("--m", type=int, default=40)
    apa.add_argument("--density", type=float, default=0.2)
    _add_common(apa, jobs=True)
    apa.set_defaults(func=cmd_sa_baseline)

    apf = sub.add_parser("fit-curves", help="Fit a n^b or 1-(1-a/2^(bn))^k to a results table.")
    apf.add_argument("--input", type=Path, required=True)
    apf.add_argument("--model", choices=['power', 'success'], default='power')
    apf.add_argument("--column", default=None,
                     help="Value column (default rel_error_median for power, success for success)")
    apf.add_argument("--p", type=int, default=None, help="Keep rows with this depth")
    apf.add_argument("--mode", default=None, help="Keep rows with this mode")
    apf.add_argument("--fixed-b", type=float, default=None)
    apf.add_argument("--k", type=int, default=10, help="Queries behind each success value")
    apf.add_argument("--fix-a", action="store_true", help="Fix a = 1 in the success model")
    _add_common(apf)
    apf.set_defaults(func=cmd_fit_curves)

    apt = sub.add_parser("transpile-report", help="Gate counts and depth of a routed QAOA circuit.")
    apt.add_argument("--instance", type=Path, default=None, help="Instance JSON (default the 3x3 worked example)")
    apt.add_argument("--p", type=int, default=1)
    apt.add_argument("--gamma", type=float, nargs='+', default=None)
    apt.add_argument("--beta", type=float, nargs='+', default=None)
    apt.add_argument("--coupling", choices=['all', 'line', 't'], default='all')
    apt.add_argument("--basis", action="store_true", help="Rewrite to {U1, U3, CNOT}")
    apt.add_argument("--swap-back", action="store_true", help="Undo every routing SWAP after its gate")
    apt.add_argument("--zz-threshold", type=float, default=0.0, help="Drop couplings with |J| below this")
    _add_common(apt)
    apt.set_defaults(func=cmd_transpile_report)

    apn = sub.add_parser("nbmf", help="Non-negative binary matrix factorization V ~ W H.")
    apn.add_argument("--input", type=Path, required=True, help="V as headerless CSV")
    apn.add_argument("--rank", type=int, required=True)
    apn.add_argument("--backend", choices=['brute', 'sa', 'qaoa'], default='brute')
    apn.add_argument("--max-iters", type=int, default=50)
    apn.add_argument("--tol", type=float, default=1e-5)
    apn.add_argument("--restarts", type=int, default=10, help="Random starting H matrices (first exact fit stops)")
    apn.add_argument("--no-flip-search", dest="flip_search", action="store_false",
                     help="Stop at the first stall instead of trying single bit flips of H")
    _add_common(apn)
    apn.set_defaults(func=cmd_nbmf)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args.out = Path(args.out or os.getenv('QLSLAB_OUT', DEFAULT_OUT))
    if hasattr(args, 'jobs') and args.jobs is None:
        args.jobs = default_jobs()
    setup_logging(args.out, args.verbose)
    logger.debug(f"qlslab {args.cmd}: {vars(args)}")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
