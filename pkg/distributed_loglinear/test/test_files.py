import os
import tempfile
from pathlib import Path
from unittest import TestCase

import numpy as np

from distributed_loglinear import (
    CellSpace,
    ContingencyTable,
    ThetaVector,
    make_lattice,
    DataFileUnparsable,
    DistributedLoglinearException,
)
from distributed_loglinear._estimators import model_jset
from distributed_loglinear._files import (
    decode_cell,
    encode_cell,
    format_graph,
    format_records,
    format_table,
    format_theta,
    read_data,
    read_graph,
    read_records,
    read_table,
    read_theta,
    write_graph,
    write_table,
    write_text,
)
from distributed_loglinear._graphs import make_path


def get_asset_path(filename: str) -> Path:
    return Path(
        "{dirname}/assets/{filename}".format(
            dirname=os.path.dirname(__file__), filename=filename
        )
    )


class TestCellEncoding(TestCase):
    def test_digits(self):
        self.assertEqual(encode_cell((1, 0, 2), (2, 2, 3)), "102")
        self.assertEqual(decode_cell("102"), (1, 0, 2))
        self.assertEqual(decode_cell(" 0010 ", 4), (0, 0, 1, 0))

    def test_separator_beyond_ten_levels(self):
        self.assertEqual(encode_cell((11, 0), (12, 2)), "11:0")
        self.assertEqual(decode_cell("11:0"), (11, 0))

    def test_single_vertex(self):
        self.assertEqual(decode_cell("7", 1), (7,))

    def test_invalid(self):
        for text, vertex_count in (("", None), ("1a0", None), ("010", 4)):
            with self.subTest(text=text):
                with self.assertRaises(ValueError):
                    decode_cell(text, vertex_count)


class TestTables(TestCase):
    def test_read_table(self):
        table = read_table(get_asset_path("cycle4_table.csv"))

        self.assertEqual(table.space.levels, (2, 2, 2, 2))
        self.assertEqual(table.total, 139)
        self.assertEqual(table.count((0, 0, 1, 1)), 14)
        self.assertEqual(table.count((1, 1, 1, 1)), 15)

    def test_read_table__explicit_levels(self):
        table = read_table(get_asset_path("path3_boundary_table.csv"), levels=(2, 3, 2))

        self.assertEqual(table.space.levels, (2, 3, 2))
        self.assertEqual(table.total, 43)
        self.assertEqual(table.count((1, 1, 0)), 0)

    def test_read_table__malformed(self):
        with self.assertRaises(DataFileUnparsable) as context:
            read_table(get_asset_path("malformed_table.csv"))

        self.assertEqual(context.exception.line_number, 3)
        self.assertIn("line 3", str(context.exception))

    def test_read_table__level_out_of_range(self):
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / "table.csv"
            write_text("cell,count\n020,1\n", path)

            with self.assertRaises(DataFileUnparsable):
                read_table(path, levels=(2, 2, 2))

    def test_table_round_trip(self):
        table = read_table(get_asset_path("cycle4_table.csv"))

        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / "table.csv"
            write_table(table, path)

            np.testing.assert_array_equal(
                read_table(path).dense_counts(), table.dense_counts()
            )

    def test_format_table_skips_empty_cells(self):
        table = ContingencyTable.from_mapping(CellSpace.binary(2), {(1, 0): 3})

        self.assertEqual(format_table(table), "cell,count\n10,3\n")


class TestRecords(TestCase):
    def test_read_records(self):
        table = read_records(get_asset_path("path3_records.txt"))

        self.assertEqual(table.space.levels, (2, 2, 2))
        self.assertEqual(table.total, 8)
        self.assertEqual(table.count((0, 0, 0)), 2)
        self.assertEqual(table.count((1, 1, 1)), 2)
        self.assertEqual(table.count((0, 0, 1)), 0)

    def test_format_records(self):
        self.assertEqual(
            format_records(np.array([[0, 1], [1, 1]]), (2, 2)), "01\n11\n"
        )

    def test_read_data_detects_the_format(self):
        self.assertEqual(read_data(get_asset_path("cycle4_table.csv")).total, 139)
        self.assertEqual(read_data(get_asset_path("path3_records.txt")).total, 8)

    def test_empty_file_needs_levels(self):
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / "records.txt"
            write_text("# nothing observed\n", path)

            with self.assertRaises(DistributedLoglinearException):
                read_records(path)
            self.assertEqual(read_records(path, levels=(2, 2)).total, 0)


class TestGraphFiles(TestCase):
    def test_read_graph(self):
        self.assertEqual(read_graph(get_asset_path("cycle4.graph")), make_lattice(2))
        self.assertEqual(read_graph(get_asset_path("path3.graph")), make_path(3))

    def test_format_graph(self):
        self.assertEqual(format_graph(make_path(3)), "#vertices 3\n0 1\n1 2\n")

    def test_graph_round_trip(self):
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / "lattice.graph"
            write_graph(make_lattice(3), path)

            self.assertEqual(read_graph(path), make_lattice(3))

    def test_malformed_graphs(self):
        for text in ("0 1\n", "#vertices x\n", "#vertices 2\n0 1 2\n", "#vertices 2\n0 2\n"):
            with self.subTest(text=text):
                with tempfile.TemporaryDirectory() as directory:
                    path = Path(directory) / "broken.graph"
                    write_text(text, path)

                    with self.assertRaises(DataFileUnparsable):
                        read_graph(path)


class TestThetaFiles(TestCase):
    def test_read_theta(self):
        theta = read_theta(get_asset_path("path3_theta.json"), CellSpace.binary(3))

        self.assertIsNone(theta.theta0)
        self.assertEqual(len(theta), 5)
        self.assertEqual(theta[(0, 1, 1)], 0.75)
        self.assertEqual(theta[(1, 0, 1)], 0.0)

    def test_read_theta__onto_a_model(self):
        jset = model_jset(CellSpace.binary(3), make_path(3))

        theta = read_theta(get_asset_path("path3_theta.json"), CellSpace.binary(3), jset)

        self.assertEqual(theta.jset, jset)
        self.assertEqual(theta[(1, 1, 0)], -0.3)

    def test_theta_round_trip(self):
        jset = model_jset(CellSpace((2, 3)), make_path(2))
        theta = ThetaVector(jset, np.linspace(-1, 1, len(jset)), theta0=-1.5)

        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / "theta.json"
            write_text(format_theta(theta), path)
            loaded = read_theta(path, CellSpace((2, 3)), jset)

        np.testing.assert_allclose(loaded.values, theta.values)
        self.assertEqual(loaded.theta0, -1.5)

    def test_cell_outside_of_the_model(self):
        jset = model_jset(CellSpace.binary(3), make_path(3))

        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / "theta.json"
            write_text('{"entries": [{"cell": "101", "value": 1.0}]}', path)

            with self.assertRaises(DataFileUnparsable):
                read_theta(path, CellSpace.binary(3), jset)

    def test_not_a_parameter_document(self):
        with self.assertRaises(DataFileUnparsable):
            read_theta(get_asset_path("cycle4.graph"), CellSpace.binary(4))
