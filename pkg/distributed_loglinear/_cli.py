import argparse
import logging
import os
from dataclasses import replace
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import List, Optional

from ._errors import (
    DistributedLoglinearException,
    InvalidExperimentSpec,
    TheoremCheckFailed,
)
from ._estimators import METHODS, estimate, model_jset
from ._files import (
    decode_cell,
    format_graph,
    format_records,
    format_table,
    format_theta,
    read_data,
    read_graph,
    read_theta,
    write_text,
)
from ._graphs import Graph, parse_generator
from ._harness import (
    SAMPLE_STREAM,
    SWEEP_METHODS,
    THETA_STREAM,
    ExperimentSpec,
    run_comparison,
    run_mse_sweep,
    run_variance_sweep,
    run_verification,
    verification_failures,
)
from ._model import CellSpace, ContingencyTable
from ._sampling import EXACT, GIBBS, draw_samples, make_rng, random_theta
from ._settings import (
    DEFAULT_BURN_IN,
    DEFAULT_SWEEP_EPSILON,
    DEFAULT_THINNING,
    ENV_PREFIX,
    EXIT_FAILURE,
    EXIT_MLE_DOES_NOT_EXIST,
    EXIT_OK,
)
from .config import LOCAL_FITTERS, SolverConfig
from .formatters import FormatterLoader

logger = logging.getLogger(__name__)

PACKAGE_LOGGER = "distributed_loglinear"

SOLVER_FLAGS = {
    "ipf_tolerance": float,
    "ipf_max_cycles": int,
    "newton_tolerance": float,
    "newton_max_iterations": int,
    "newton_max_halvings": int,
    "epsilon_smoothing": float,
    "divergence_threshold": float,
    "enumeration_guard": int,
    "local_enumeration_guard": int,
    "sparse_threshold": int,
    "max_cliques": int,
}

SWEEP_COMMANDS = ("mse-sweep", "variance-sweep")


class DistributedLoglinearCli:
    def __init__(self, args: List[str]):
        self._args = args
        self.exit_code = EXIT_OK

    def run(self) -> str:
        parsed_args = self._parse_args()
        if parsed_args.verbose:
            logging.getLogger(PACKAGE_LOGGER).setLevel(logging.DEBUG)

        handler = {
            "gen-graph": self._gen_graph,
            "gen-data": self._gen_data,
            "estimate": self._estimate,
            "mse-sweep": self._mse_sweep,
            "variance-sweep": self._variance_sweep,
            "verify": self._verify,
            "compare": self._compare,
        }[parsed_args.command]

        try:
            output = handler(parsed_args)
        except DistributedLoglinearException as exception:
            self.exit_code = EXIT_FAILURE
            return str(exception)

        if parsed_args.output:
            write_text(output, parsed_args.output)
            return f"Wrote {parsed_args.output}"
        return output

    def _solver_config(self, parsed_args) -> SolverConfig:
        cfg = SolverConfig.from_env(parsed_args.env_file)
        overrides = {name: getattr(parsed_args, name) for name in SOLVER_FLAGS}
        overrides["local_fitter"] = parsed_args.local_fitter
        if (
            parsed_args.command in SWEEP_COMMANDS
            and overrides["epsilon_smoothing"] is None
            and os.getenv(ENV_PREFIX + "EPSILON_SMOOTHING") is None
        ):
            overrides["epsilon_smoothing"] = DEFAULT_SWEEP_EPSILON
        return cfg.with_overrides(**overrides)

    def _graph(self, source: str, seed: Optional[int]) -> Graph:
        if Path(source).is_file():
            return read_graph(source)
        return parse_generator(source, seed)

    def _space(self, graph: Graph, levels: Optional[List[int]]) -> CellSpace:
        if not levels:
            return CellSpace.binary(graph.vertex_count)
        if len(levels) == 1:
            return CellSpace(tuple(levels) * graph.vertex_count)
        if len(levels) != graph.vertex_count:
            raise InvalidExperimentSpec(
                f"{len(levels)} levels given for {graph.vertex_count} vertices"
            )
        return CellSpace(tuple(levels))

    def _data(self, parsed_args, graph: Graph, cfg: SolverConfig) -> ContingencyTable:
        levels = None
        if parsed_args.levels:
            levels = self._space(graph, parsed_args.levels).levels
        return read_data(parsed_args.data, levels, cfg.sparse_threshold)

    def _format(self, parsed_args, result) -> str:
        return FormatterLoader().load(parsed_args.format).format_result(result)

    def _gen_graph(self, parsed_args) -> str:
        return format_graph(self._graph(parsed_args.source, parsed_args.seed))

    def _gen_data(self, parsed_args) -> str:
        cfg = self._solver_config(parsed_args)
        graph = self._graph(parsed_args.graph, parsed_args.seed)
        space = self._space(graph, parsed_args.levels)
        jset = model_jset(space, graph, cfg)
        if parsed_args.theta:
            theta = read_theta(parsed_args.theta, space, jset)
        else:
            theta = random_theta(
                jset,
                make_rng(parsed_args.seed, THETA_STREAM),
                parsed_args.theta_low,
                parsed_args.theta_high,
            )
        if parsed_args.theta_output:
            write_text(format_theta(theta), parsed_args.theta_output)
        samples = draw_samples(
            theta,
            graph,
            parsed_args.n,
            make_rng(parsed_args.seed, SAMPLE_STREAM, parsed_args.n, 0),
            cfg.enumeration_guard,
            parsed_args.burn_in,
            parsed_args.thinning,
            parsed_args.sampler,
            cfg.sparse_threshold,
        )
        if parsed_args.records:
            return format_records(samples.records, space.levels)
        return format_table(samples.table)

    def _estimate(self, parsed_args) -> str:
        cfg = self._solver_config(parsed_args)
        graph = self._graph(parsed_args.graph, None)
        table = self._data(parsed_args, graph, cfg)
        report = replace(
            estimate(table, graph, parsed_args.method, cfg),
            provenance={
                "graph": parsed_args.graph,
                "data": parsed_args.data,
                "method": parsed_args.method,
                "levels": list(table.space.levels),
                "total": table.total,
                "solver": cfg.to_raw_data(),
            },
        )
        if not report.existence_flag:
            self.exit_code = EXIT_MLE_DOES_NOT_EXIST
        return self._format(parsed_args, report)

    def _spec(self, parsed_args) -> ExperimentSpec:
        cfg = self._solver_config(parsed_args)
        graph = self._graph(parsed_args.graph, parsed_args.seed)
        space = self._space(graph, parsed_args.levels)
        theta = None
        if parsed_args.theta:
            theta = read_theta(parsed_args.theta, space, model_jset(space, graph, cfg))
        return ExperimentSpec(
            graph=graph,
            graph_source=parsed_args.graph,
            seed=parsed_args.seed,
            levels=space.levels,
            sample_sizes=tuple(parsed_args.sizes),
            replications=parsed_args.replications,
            methods=tuple(parsed_args.methods),
            cfg=cfg,
            theta=theta,
            theta_source=parsed_args.theta or "random",
            theta_range=(parsed_args.theta_low, parsed_args.theta_high),
            burn_in=parsed_args.burn_in,
            thinning=parsed_args.thinning,
            sampler=parsed_args.sampler,
        )

    def _mse_sweep(self, parsed_args) -> str:
        return self._format(parsed_args, run_mse_sweep(self._spec(parsed_args)))

    def _variance_sweep(self, parsed_args) -> str:
        spec = self._spec(parsed_args)
        try:
            cell = decode_cell(parsed_args.cell, spec.graph.vertex_count)
        except ValueError as error:
            raise InvalidExperimentSpec(f"Could not read the target cell: {error}")
        return self._format(
            parsed_args, run_variance_sweep(spec, parsed_args.vertex, cell)
        )

    def _verify(self, parsed_args) -> str:
        cfg = self._solver_config(parsed_args)
        graph = self._graph(parsed_args.graph, parsed_args.seed)
        space = self._space(graph, parsed_args.levels)
        result = run_verification(
            graph, parsed_args.seed, parsed_args.draws, space.levels, cfg, parsed_args.graph
        )
        output = self._format(parsed_args, result)
        failures = verification_failures(result)
        if failures:
            self.exit_code = EXIT_FAILURE
            logger.error("%s", TheoremCheckFailed(failures))
        return output

    def _compare(self, parsed_args) -> str:
        cfg = self._solver_config(parsed_args)
        graph = self._graph(parsed_args.graph, None)
        table = self._data(parsed_args, graph, cfg)
        result = run_comparison(
            table,
            graph,
            parsed_args.methods,
            cfg,
            {"graph": parsed_args.graph, "data": parsed_args.data},
        )
        return self._format(parsed_args, result)

    def _get_version(self):
        try:
            return version("distributed-loglinear")
        except PackageNotFoundError:
            return "unknown"

    def _solver_parser(self) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(add_help=False)
        group = parser.add_argument_group("solver")
        for name, kind in SOLVER_FLAGS.items():
            flag = "--epsilon" if name == "epsilon_smoothing" else "--" + name.replace("_", "-")
            group.add_argument(
                flag,
                dest=name,
                type=kind,
                default=None,
                help=f"Overrides {ENV_PREFIX}{name.upper()} and the built-in default.",
            )
        group.add_argument("--local-fitter", choices=LOCAL_FITTERS, default=None)
        group.add_argument(
            "--env-file",
            default=None,
            metavar="PATH",
            help="A .env file with DLL_* settings; defaults to ./.env if present.",
        )
        return parser

    def _output_parser(self, default_format: str) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(add_help=False)
        parser.add_argument(
            "--format",
            type=str,
            default=default_format,
            choices=tuple(FormatterLoader.TYPES.keys()),
        )
        return parser

    def _model_parser(self, seed_required: bool) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(add_help=False)
        parser.add_argument(
            "--graph",
            required=True,
            help=(
                "A graph file (`#vertices n` header, one `u v` edge per line) or one of "
                "lattice:K, star:L, path:N, cycle:N, complete:N, empty:N, random:N:P[:SEED]."
            ),
        )
        parser.add_argument(
            "--levels",
            nargs="+",
            type=int,
            default=None,
            help="Levels per vertex, or a single value for every vertex. Defaults to binary.",
        )
        parser.add_argument("--seed", type=int, required=seed_required, default=None)
        return parser

    def _sampling_parser(self) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(add_help=False)
        parser.add_argument(
            "--theta", default=None, metavar="PATH", help="True parameter as JSON."
        )
        parser.add_argument("--theta-low", type=float, default=-1.0)
        parser.add_argument("--theta-high", type=float, default=1.0)
        parser.add_argument(
            "--sampler",
            choices=(EXACT, GIBBS),
            default=None,
            help="Defaults to exact sampling within the enumeration guard, Gibbs beyond.",
        )
        parser.add_argument("--burn-in", type=int, default=DEFAULT_BURN_IN)
        parser.add_argument("--thinning", type=int, default=DEFAULT_THINNING)
        return parser

    def _sweep_parser(self) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(add_help=False)
        parser.add_argument("--sizes", nargs="+", type=int, required=True)
        parser.add_argument("--replications", type=int, default=100)
        parser.add_argument(
            "--methods", nargs="+", choices=METHODS, default=list(SWEEP_METHODS)
        )
        return parser

    def _parse_args(self):
        parser = argparse.ArgumentParser(
            description=(
                "Distributed maximum likelihood estimation of discrete hierarchical "
                "log-linear models: global, one-hop and two-hop local and pseudo-likelihood "
                "estimators, simulation sweeps and exact checks of the variance ordering."
            )
        )
        parser.add_argument(
            "--version",
            action="version",
            version=f"%(prog)s, version {self._get_version()}",
        )
        common = argparse.ArgumentParser(add_help=False)
        common.add_argument("--output", default=None, metavar="PATH")
        common.add_argument("--verbose", action="store_true", default=False)

        subparsers = parser.add_subparsers(dest="command", required=True)
        solver = self._solver_parser()

        gen_graph = subparsers.add_parser(
            "gen-graph", parents=[common], help="Write a generated graph as an edge list."
        )
        gen_graph.add_argument("source")
        gen_graph.add_argument("--seed", type=int, default=None)

        gen_data = subparsers.add_parser(
            "gen-data",
            parents=[common, self._model_parser(True), self._sampling_parser(), solver],
            help="Sample a contingency table from a model.",
        )
        gen_data.add_argument("--n", type=int, required=True)
        gen_data.add_argument(
            "--records",
            action="store_true",
            default=False,
            help="Write one cell per individual instead of a `cell,count` table.",
        )
        gen_data.add_argument("--theta-output", default=None, metavar="PATH")

        estimate_parser = subparsers.add_parser(
            "estimate",
            parents=[common, self._model_parser(False), self._output_parser("json"), solver],
            help="Estimate the canonical parameters from a data file.",
        )
        estimate_parser.add_argument("--data", required=True)
        estimate_parser.add_argument("--method", choices=METHODS, default="one-hop")

        subparsers.add_parser(
            "mse-sweep",
            parents=[
                common,
                self._model_parser(True),
                self._sampling_parser(),
                self._sweep_parser(),
                self._output_parser("csv"),
                solver,
            ],
            help="Relative mean squared error per method and sample size.",
        )

        variance_sweep = subparsers.add_parser(
            "variance-sweep",
            parents=[
                common,
                self._model_parser(True),
                self._sampling_parser(),
                self._sweep_parser(),
                self._output_parser("csv"),
                solver,
            ],
            help="Sample variance of one parameter estimate per method and sample size.",
        )
        variance_sweep.add_argument("--vertex", type=int, required=True)
        variance_sweep.add_argument("--cell", required=True)

        verify = subparsers.add_parser(
            "verify",
            parents=[common, self._model_parser(True), self._output_parser("csv"), solver],
            help="Exact checks of the marginal parameter formulas and the variance ordering.",
        )
        verify.add_argument("--draws", type=int, default=10)

        compare = subparsers.add_parser(
            "compare",
            parents=[common, self._model_parser(False), self._output_parser("csv"), solver],
            help="Distance of every method's estimate to the global MLE on one dataset.",
        )
        compare.add_argument("--data", required=True)
        compare.add_argument(
            "--methods",
            nargs="+",
            choices=METHODS,
            default=["global", "one-hop", "two-hop", "pseudo"],
        )

        return parser.parse_args(self._args)
