import io
import json
import logging
import os
import tempfile
from contextlib import redirect_stdout
from importlib.metadata import PackageNotFoundError
from pathlib import Path
from unittest import TestCase
from unittest.mock import patch

from distributed_loglinear._cli import DistributedLoglinearCli
from distributed_loglinear._settings import DEFAULT_SWEEP_EPSILON


def get_asset_path(filename: str) -> str:
    return "{dirname}/assets/{filename}".format(
        dirname=os.path.dirname(__file__), filename=filename
    )


def run_cli(command: str):
    cli = DistributedLoglinearCli(command.split())
    output = cli.run()
    return cli.exit_code, output


class TestDistributedLoglinearCli(TestCase):
    def setUp(self):
        self.env = patch.dict(os.environ, {}, clear=True)
        self.env.start()
        self.addCleanup(self.env.stop)

    def test_argument_parsing(self):
        parsed_args = DistributedLoglinearCli(
            "estimate --graph lattice:2 --data table.csv".split()
        )._parse_args()

        self.assertEqual(parsed_args.command, "estimate")
        self.assertEqual(parsed_args.graph, "lattice:2")
        self.assertEqual(parsed_args.data, "table.csv")
        self.assertEqual(parsed_args.method, "one-hop")
        self.assertEqual(parsed_args.format, "json")
        self.assertEqual(parsed_args.levels, None)
        self.assertEqual(parsed_args.epsilon_smoothing, None)
        self.assertEqual(parsed_args.local_fitter, None)
        self.assertEqual(parsed_args.output, None)

    def test_argument_parsing__sweep(self):
        parsed_args = DistributedLoglinearCli(
            (
                "mse-sweep --graph star:3 --seed 3 --sizes 100 200 --epsilon 0.5 "
                "--methods global pseudo --levels 3 2 2 2 --newton-max-iterations 40"
            ).split()
        )._parse_args()

        self.assertEqual(parsed_args.sizes, [100, 200])
        self.assertEqual(parsed_args.seed, 3)
        self.assertEqual(parsed_args.epsilon_smoothing, 0.5)
        self.assertEqual(parsed_args.newton_max_iterations, 40)
        self.assertEqual(parsed_args.methods, ["global", "pseudo"])
        self.assertEqual(parsed_args.levels, [3, 2, 2, 2])
        self.assertEqual(parsed_args.replications, 100)
        self.assertEqual(parsed_args.format, "csv")

    def test_argument_parsing__sweep_needs_a_seed(self):
        with self.assertRaises(SystemExit):
            DistributedLoglinearCli(
                "mse-sweep --graph lattice:2 --sizes 100".split()
            )._parse_args()

    def test_argument_parsing__unknown_method(self):
        with self.assertRaises(SystemExit):
            DistributedLoglinearCli(
                "estimate --graph lattice:2 --data t.csv --method bayes".split()
            )._parse_args()

    def test_run__gen_graph(self):
        exit_code, output = run_cli("gen-graph lattice:2")

        self.assertEqual(exit_code, 0)
        self.assertEqual(output, "#vertices 4\n0 1\n0 2\n1 3\n2 3\n")

    def test_run__gen_graph_random_needs_a_seed(self):
        exit_code, output = run_cli("gen-graph random:6:0.5")

        self.assertEqual(exit_code, 1)
        self.assertIn("seed", output)

        exit_code, output = run_cli("gen-graph random:6:0.5 --seed 2")
        self.assertEqual(exit_code, 0)
        self.assertTrue(output.startswith("#vertices 6\n"))

    def test_run__gen_graph_from_file(self):
        exit_code, output = run_cli(f"gen-graph {get_asset_path('path3.graph')}")

        self.assertEqual(exit_code, 0)
        self.assertEqual(output, "#vertices 3\n0 1\n1 2\n")

    def test_run__output_file(self):
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / "lattice.graph"

            exit_code, output = run_cli(f"gen-graph lattice:2 --output {path}")

            self.assertEqual(exit_code, 0)
            self.assertEqual(output, f"Wrote {path}")
            self.assertEqual(path.read_text(), "#vertices 4\n0 1\n0 2\n1 3\n2 3\n")

    def test_run__gen_data(self):
        exit_code, output = run_cli("gen-data --graph path:3 --seed 4 --n 50")

        self.assertEqual(exit_code, 0)
        lines = output.strip().split("\n")
        self.assertEqual(lines[0], "cell,count")
        self.assertEqual(sum(int(line.split(",")[1]) for line in lines[1:]), 50)
        self.assertEqual(output, run_cli("gen-data --graph path:3 --seed 4 --n 50")[1])

    def test_run__gen_data_records(self):
        exit_code, output = run_cli(
            "gen-data --graph path:3 --seed 4 --n 20 --records --levels 3"
        )

        self.assertEqual(exit_code, 0)
        records = output.strip().split("\n")
        self.assertEqual(len(records), 20)
        self.assertTrue(all(len(record) == 3 for record in records))

    def test_run__gen_data_with_theta(self):
        with tempfile.TemporaryDirectory() as directory:
            theta_output = Path(directory) / "theta.json"

            exit_code, _ = run_cli(
                f"gen-data --graph {get_asset_path('path3.graph')} --seed 1 --n 10 "
                f"--theta {get_asset_path('path3_theta.json')} "
                f"--theta-output {theta_output}"
            )

            self.assertEqual(exit_code, 0)
            written = json.loads(theta_output.read_text())
        self.assertEqual(
            [entry["cell"] for entry in written["entries"]],
            ["001", "010", "011", "100", "110"],
        )
        self.assertEqual(written["entries"][2]["value"], 0.75)

    def test_run__estimate(self):
        exit_code, output = run_cli(
            f"estimate --graph {get_asset_path('cycle4.graph')} "
            f"--data {get_asset_path('cycle4_table.csv')}"
        )

        self.assertEqual(exit_code, 0)
        report = json.loads(output)
        self.assertEqual(report["method"], "one-hop")
        self.assertTrue(report["existence_flag"])
        self.assertEqual(len(report["entries"]), 8)
        self.assertEqual(report["entries"][0]["cell"], "0001")
        provenance = report["provenance"]
        self.assertTrue(provenance["graph"].endswith("cycle4.graph"))
        self.assertTrue(provenance["data"].endswith("cycle4_table.csv"))
        self.assertEqual(provenance["method"], "one-hop")
        self.assertEqual(provenance["levels"], [2, 2, 2, 2])
        self.assertEqual(provenance["solver"]["epsilon_smoothing"], 0.0)

    def test_run__estimate_csv(self):
        exit_code, output = run_cli(
            f"estimate --graph lattice:2 --method pseudo --format csv "
            f"--data {get_asset_path('cycle4_table.csv')}"
        )

        self.assertEqual(exit_code, 0)
        self.assertEqual(output.split("\n")[1], "cell,value,sources")
        provenance = json.loads(output.split("\n")[0][len("# provenance: ") :])
        self.assertEqual(provenance["provenance"]["method"], "pseudo")

    def test_run__estimate_does_not_exist(self):
        exit_code, output = run_cli(
            f"estimate --graph {get_asset_path('path3.graph')} --method global "
            f"--levels 2 --data {get_asset_path('path3_boundary_table.csv')}"
        )

        self.assertEqual(exit_code, 2)
        report = json.loads(output)
        self.assertFalse(report["existence_flag"])
        self.assertIn("empty cell", report["failure"])

    def test_run__estimate_malformed_data(self):
        exit_code, output = run_cli(
            f"estimate --graph path:3 --data {get_asset_path('malformed_table.csv')}"
        )

        self.assertEqual(exit_code, 1)
        self.assertIn("line 3", output)

    def test_run__levels_mismatch(self):
        exit_code, output = run_cli("gen-data --graph path:3 --seed 1 --n 5 --levels 2 2")

        self.assertEqual(exit_code, 1)
        self.assertIn("2 levels given for 3 vertices", output)

    def test_run__verify(self):
        exit_code, output = run_cli("verify --graph lattice:2 --seed 1 --draws 1")

        self.assertEqual(exit_code, 0)
        lines = output.split("\n")
        self.assertTrue(lines[0].startswith("# provenance: "))
        self.assertTrue(lines[1].startswith("check,draw,vertex,hop,max_abs_diff,pass"))
        self.assertNotIn(",false", output)

    def test_run__mse_sweep(self):
        exit_code, output = run_cli(
            "mse-sweep --graph lattice:2 --seed 2 --sizes 200 --replications 2 "
            "--methods one-hop two-hop --format json"
        )

        self.assertEqual(exit_code, 0)
        result = json.loads(output)
        self.assertEqual(result["kind"], "mse-sweep")
        self.assertEqual([row["method"] for row in result["rows"]], ["one-hop", "two-hop"])
        self.assertEqual(
            result["provenance"]["solver"]["epsilon_smoothing"], DEFAULT_SWEEP_EPSILON
        )

    def test_run__mse_sweep_epsilon(self):
        exit_code, output = run_cli(
            "mse-sweep --graph lattice:2 --seed 2 --sizes 200 --replications 2 "
            "--methods one-hop --format json --epsilon 0.5"
        )

        self.assertEqual(exit_code, 0)
        self.assertEqual(
            json.loads(output)["provenance"]["solver"]["epsilon_smoothing"], 0.5
        )

    def test_run__mse_sweep_epsilon_from_env(self):
        with patch.dict(os.environ, {"DLL_EPSILON_SMOOTHING": "0.25"}):
            exit_code, output = run_cli(
                "mse-sweep --graph lattice:2 --seed 2 --sizes 200 --replications 2 "
                "--methods one-hop --format json"
            )

        self.assertEqual(exit_code, 0)
        self.assertEqual(
            json.loads(output)["provenance"]["solver"]["epsilon_smoothing"], 0.25
        )

    def test_run__variance_sweep(self):
        exit_code, output = run_cli(
            "variance-sweep --graph lattice:2 --seed 2 --sizes 300 --replications 3 "
            "--methods global one-hop --vertex 0 --cell 1100 --format json"
        )

        self.assertEqual(exit_code, 0)
        result = json.loads(output)
        self.assertEqual(result["provenance"]["target_cell"], "1100")
        self.assertEqual(len(result["rows"]), 2)

    def test_run__variance_sweep_buffered_cell(self):
        exit_code, output = run_cli(
            "variance-sweep --graph lattice:2 --seed 2 --sizes 300 --replications 3 "
            "--vertex 0 --cell 0100"
        )

        self.assertEqual(exit_code, 1)
        self.assertIn("buffered at vertex 0", output)

    def test_run__variance_sweep_unreadable_cell(self):
        exit_code, output = run_cli(
            "variance-sweep --graph lattice:2 --seed 2 --sizes 300 --replications 3 "
            "--vertex 0 --cell 11"
        )

        self.assertEqual(exit_code, 1)
        self.assertIn("target cell", output)

    def test_run__compare(self):
        exit_code, output = run_cli(
            f"compare --graph lattice:2 --data {get_asset_path('cycle4_table.csv')}"
        )

        self.assertEqual(exit_code, 0)
        lines = output.strip().split("\n")
        self.assertEqual(lines[1], "method,existence_flag,sum_abs_difference")
        self.assertEqual(lines[2], "global,true,0.0")
        self.assertEqual([line.split(",")[0] for line in lines[2:]], [
            "global", "one-hop", "two-hop", "pseudo"
        ])

    def test_run__verbose(self):
        package_logger = logging.getLogger("distributed_loglinear")
        self.addCleanup(package_logger.setLevel, package_logger.level)

        run_cli("gen-graph lattice:2 --verbose")

        self.assertEqual(package_logger.level, logging.DEBUG)

    def test_version(self):
        stdout = io.StringIO()
        with patch("distributed_loglinear._cli.version", return_value="1.2.3"):
            with redirect_stdout(stdout), self.assertRaises(SystemExit):
                DistributedLoglinearCli(["--version"])._parse_args()

        self.assertTrue(stdout.getvalue().strip().endswith(", version 1.2.3"))

    def test_get_version_package_not_found(self):
        with patch(
            "distributed_loglinear._cli.version", side_effect=PackageNotFoundError
        ):
            cli = DistributedLoglinearCli([])
            assert cli._get_version() == "unknown"
