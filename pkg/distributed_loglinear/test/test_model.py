from unittest import TestCase

import numpy as np

from distributed_loglinear import (
    CellSpace,
    GeneratingClass,
    JSet,
    ThetaVector,
    ProbabilityVector,
    ContingencyTable,
    build_jset,
    theta_from_p,
    p_from_theta,
    cumulant,
    support,
    triangleleft,
    triangleleft_zero,
    CapacityExceeded,
    CellSpaceMismatch,
    InvalidCellSpace,
    InvalidContingencyTable,
    InvalidGeneratingClass,
    InvalidProbabilityVector,
    InvalidThetaVector,
)
from distributed_loglinear._model import (
    canonical_statistics,
    loglik,
    marginal_probabilities,
    mean_parameters,
    normalized,
    pad_cell,
    restrict_cell,
    subcells,
)
from distributed_loglinear._sampling import random_theta


class TestCellSpace(TestCase):
    def test_size_and_zero_cell(self):
        space = CellSpace((2, 3, 2))

        self.assertEqual(space.vertex_count, 3)
        self.assertEqual(space.size, 12)
        self.assertEqual(space.zero_cell, (0, 0, 0))

    def test_size_is_exact_for_large_spaces(self):
        self.assertEqual(CellSpace.binary(100).size, 2**100)

    def test_rejects_vertices_with_one_level(self):
        with self.assertRaises(InvalidCellSpace):
            CellSpace((2, 1))
        with self.assertRaises(InvalidCellSpace):
            CellSpace(())

    def test_validate_cell(self):
        space = CellSpace((2, 3))

        self.assertEqual(space.validate_cell([1, 2]), (1, 2))
        with self.assertRaises(InvalidCellSpace):
            space.validate_cell((2, 0))
        with self.assertRaises(CellSpaceMismatch):
            space.validate_cell((1, 0, 0))

    def test_enumerate__lexicographic(self):
        cells = CellSpace((2, 3)).enumerate()

        self.assertEqual(cells.shape, (6, 2))
        self.assertEqual(cells[0].tolist(), [0, 0])
        self.assertEqual(cells[1].tolist(), [0, 1])
        self.assertEqual(cells[-1].tolist(), [1, 2])
        self.assertEqual(
            [tuple(cell) for cell in cells.tolist()], list(CellSpace((2, 3)).cells())
        )

    def test_enumerate__guard(self):
        with self.assertRaises(CapacityExceeded) as context:
            CellSpace.binary(30).enumerate(limit=2**22)

        self.assertIn("exceeds the limit", str(context.exception))

    def test_index_of_matches_enumeration(self):
        space = CellSpace((3, 2, 2))
        for index, cell in enumerate(space.cells()):
            self.assertEqual(space.index_of(cell), index)

    def test_restrict(self):
        self.assertEqual(CellSpace((2, 3, 4)).restrict({2, 0}).levels, (2, 4))


class TestCellRelations(TestCase):
    def test_support(self):
        self.assertEqual(support((1, 0, 2)), frozenset({0, 2}))
        self.assertEqual(support((0, 0)), frozenset())

    def test_triangleleft(self):
        self.assertTrue(triangleleft((1, 0, 1), (1, 1, 1)))
        self.assertTrue(triangleleft((0, 2, 0), (1, 2, 0)))
        self.assertFalse(triangleleft((1, 0, 2), (1, 1, 1)))
        self.assertFalse(triangleleft((0, 1, 0), (1, 0, 0)))

    def test_triangleleft__zero_cell(self):
        self.assertFalse(triangleleft((0, 0), (1, 1)))
        self.assertTrue(triangleleft_zero((0, 0), (1, 1)))
        self.assertTrue(triangleleft_zero((0, 0), (0, 0)))

    def test_triangleleft__length_mismatch(self):
        with self.assertRaises(CellSpaceMismatch):
            triangleleft((1, 0), (1, 0, 0))
        with self.assertRaises(CellSpaceMismatch):
            triangleleft_zero((1,), (1, 0))

    def test_subcells(self):
        self.assertEqual(
            sorted(subcells((1, 0, 2))),
            [((0, 0, 0), 1), ((0, 0, 2), -1), ((1, 0, 0), -1), ((1, 0, 2), 1)],
        )

    def test_pad_and_restrict(self):
        self.assertEqual(pad_cell((1, 2), [3, 1], 4), (0, 1, 0, 2))
        self.assertEqual(restrict_cell((0, 1, 0, 2), [3, 1]), (1, 2))


class TestGeneratingClass(TestCase):
    def test_keeps_only_maximal_sets(self):
        generating_class = GeneratingClass.from_sets([{0}, {0, 1}, {1, 2}, {2}])

        self.assertEqual(
            generating_class.maximal_sets, (frozenset({0, 1}), frozenset({1, 2}))
        )
        self.assertEqual(generating_class.vertices, frozenset({0, 1, 2}))

    def test_contains(self):
        generating_class = GeneratingClass.from_sets([{0, 1}, {1, 2}])

        self.assertIn({1}, generating_class)
        self.assertIn({0, 1}, generating_class)
        self.assertNotIn({0, 2}, generating_class)
        self.assertNotIn(set(), generating_class)

    def test_members(self):
        members = GeneratingClass.from_sets([{0, 1}, {1, 2}]).members()

        self.assertEqual(
            members,
            [
                frozenset({0}),
                frozenset({1}),
                frozenset({2}),
                frozenset({0, 1}),
                frozenset({1, 2}),
            ],
        )

    def test_rejects_empty(self):
        with self.assertRaises(InvalidGeneratingClass):
            GeneratingClass.from_sets([set()])


class TestJSet(TestCase):
    def test_build_jset__binary_path(self):
        jset = build_jset(
            CellSpace.binary(3), GeneratingClass.from_sets([{0, 1}, {1, 2}])
        )

        self.assertEqual(
            jset.cells,
            ((0, 0, 1), (0, 1, 0), (0, 1, 1), (1, 0, 0), (1, 1, 0)),
        )
        self.assertNotIn((1, 0, 1), jset)

    def test_build_jset__multilevel(self):
        jset = JSet.saturated(CellSpace((3, 2)))

        self.assertEqual(len(jset), 5)
        self.assertEqual(jset.cells, ((0, 1), (1, 0), (1, 1), (2, 0), (2, 1)))

    def test_build_jset__must_cover_every_vertex(self):
        with self.assertRaises(InvalidGeneratingClass):
            build_jset(CellSpace.binary(3), GeneratingClass.from_sets([{0, 1}]))

    def test_rejects_zero_cell(self):
        with self.assertRaises(InvalidGeneratingClass):
            JSet(CellSpace.binary(2), [(0, 0), (1, 0)])

    def test_generating_class_round_trip(self):
        generating_class = GeneratingClass.from_sets([{0, 1}, {1, 2}])
        jset = build_jset(CellSpace((2, 3, 2)), generating_class)

        self.assertEqual(jset.generating_class(), generating_class)

    def test_design_matrix(self):
        jset = JSet.saturated(CellSpace.binary(2))
        design = jset.design_matrix()

        # rows: 00, 01, 10, 11; columns: 01, 10, 11
        np.testing.assert_array_equal(
            design, [[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 1]]
        )


class TestThetaVector(TestCase):
    def setUp(self):
        self.jset = build_jset(
            CellSpace.binary(3), GeneratingClass.from_sets([{0, 1}, {1, 2}])
        )

    def test_getitem_is_zero_outside_of_jset(self):
        theta = ThetaVector.from_mapping(self.jset, {(0, 1, 1): 0.5})

        self.assertEqual(theta[(0, 1, 1)], 0.5)
        self.assertEqual(theta[(1, 0, 1)], 0.0)
        self.assertEqual(theta[(1, 0, 0)], 0.0)

    def test_values_are_read_only(self):
        theta = ThetaVector.zeros(self.jset)

        with self.assertRaises(ValueError):
            theta.values[0] = 1.0

    def test_rejects_wrong_shape_and_non_finite_values(self):
        with self.assertRaises(InvalidThetaVector):
            ThetaVector(self.jset, [0.0, 1.0])
        with self.assertRaises(InvalidThetaVector):
            ThetaVector(self.jset, [0.0, 1.0, np.inf, 0.0, 0.0])
        with self.assertRaises(InvalidThetaVector):
            ThetaVector.from_mapping(self.jset, {(1, 0, 1): 1.0})


class TestProbabilityVector(TestCase):
    def test_rejects_zero_probabilities(self):
        with self.assertRaises(InvalidProbabilityVector):
            ProbabilityVector(CellSpace.binary(1), [1.0, 0.0])

    def test_rejects_unnormalized(self):
        with self.assertRaises(InvalidProbabilityVector):
            ProbabilityVector(CellSpace.binary(1), [0.5, 0.6])

    def test_from_weights(self):
        p = ProbabilityVector.from_weights(CellSpace.binary(1), [1, 3])

        self.assertAlmostEqual(p[(1,)], 0.75)

    def test_marginal_probabilities(self):
        space = CellSpace((2, 3))
        p = ProbabilityVector.from_weights(space, [1, 2, 3, 4, 5, 6])
        marginal = marginal_probabilities(p, [1])

        np.testing.assert_allclose(marginal.values, np.array([5, 7, 9]) / 21)


class TestParameterMaps(TestCase):
    def setUp(self):
        space = CellSpace((2, 3, 2))
        self.jset = build_jset(space, GeneratingClass.from_sets([{0, 1}, {1, 2}]))
        self.theta = random_theta(self.jset, 11)

    def test_theta_from_p_inverts_p_from_theta(self):
        recovered = theta_from_p(p_from_theta(self.theta), self.jset)

        np.testing.assert_allclose(recovered.values, self.theta.values, atol=1e-12)
        self.assertAlmostEqual(recovered.theta0, -cumulant(self.theta), places=12)

    def test_uniform_has_zero_parameters(self):
        uniform = ProbabilityVector.uniform(self.jset.space)

        np.testing.assert_allclose(
            theta_from_p(uniform, self.jset).values, 0.0, atol=1e-15
        )

    def test_log_p_is_theta0_plus_sum_of_subcell_parameters(self):
        p = p_from_theta(self.theta)
        theta0 = -cumulant(self.theta)

        cell = (1, 2, 1)
        expected = theta0 + sum(
            self.theta[j] for j in self.jset.cells if triangleleft(j, cell)
        )
        self.assertAlmostEqual(np.log(p[cell]), expected, places=12)

    def test_normalized(self):
        self.assertAlmostEqual(
            normalized(self.theta).theta0, -cumulant(self.theta), places=14
        )

    def test_mean_parameters_are_event_probabilities(self):
        p = p_from_theta(self.theta)
        means = mean_parameters(self.theta)

        cell = (0, 2, 1)
        expected = sum(
            p[i] for i in self.jset.space.cells() if triangleleft(cell, i)
        )
        self.assertAlmostEqual(means[self.jset.position(cell)], expected, places=12)

    def test_loglik(self):
        table = ContingencyTable.from_mapping(
            self.jset.space, {(0, 0, 0): 3, (1, 2, 1): 2, (0, 1, 1): 1}
        )
        p = p_from_theta(self.theta)

        expected = 3 * np.log(p[(0, 0, 0)]) + 2 * np.log(p[(1, 2, 1)]) + np.log(
            p[(0, 1, 1)]
        )
        self.assertAlmostEqual(loglik(self.theta, table), expected, places=10)


class TestContingencyTable(TestCase):
    def setUp(self):
        self.space = CellSpace((2, 3))
        self.counts = {(0, 0): 4, (0, 2): 1, (1, 1): 3, (1, 2): 2}

    def test_from_mapping(self):
        table = ContingencyTable.from_mapping(self.space, self.counts)

        self.assertFalse(table.is_sparse)
        self.assertEqual(table.total, 10)
        self.assertEqual(table.count((1, 1)), 3)
        self.assertEqual(table.count((1, 0)), 0)
        self.assertEqual(dict(table.items()), self.counts)

    def test_sparse_above_threshold(self):
        table = ContingencyTable.from_mapping(self.space, self.counts, sparse_threshold=4)
        dense = ContingencyTable.from_mapping(self.space, self.counts)

        self.assertTrue(table.is_sparse)
        self.assertEqual(table.total, 10)
        np.testing.assert_array_equal(table.dense_counts(), dense.dense_counts())
        self.assertEqual(dict(table.items()), dict(dense.items()))

    def test_marginal(self):
        for sparse_threshold in (2, 100):
            table = ContingencyTable.from_mapping(
                self.space, self.counts, sparse_threshold=sparse_threshold
            )
            marginal = table.marginal([1])

            self.assertEqual(marginal.space.levels, (3,))
            self.assertEqual(dict(marginal.items()), {(0,): 4, (1,): 3, (2,): 3})

    def test_from_records(self):
        records = np.array([[0, 0], [1, 2], [0, 0], [1, 1]])
        table = ContingencyTable.from_records(self.space, records)

        self.assertEqual(table.total, 4)
        self.assertEqual(table.count((0, 0)), 2)
        np.testing.assert_array_equal(
            np.sort(table.to_records(), axis=0), np.sort(records, axis=0)
        )

    def test_from_records__out_of_range(self):
        with self.assertRaises(InvalidContingencyTable):
            ContingencyTable.from_records(self.space, np.array([[0, 3]]))

    def test_rejects_negative_counts(self):
        with self.assertRaises(InvalidContingencyTable):
            ContingencyTable(self.space, dense=np.array([1, -1, 0, 0, 0, 0]))
        with self.assertRaises(InvalidContingencyTable):
            ContingencyTable(self.space)

    def test_smoothed_counts(self):
        table = ContingencyTable.from_mapping(self.space, self.counts)

        smoothed = table.smoothed_counts(0.5)
        self.assertAlmostEqual(smoothed.sum(), 13.0)
        self.assertEqual(smoothed[1], 0.5)

    def test_canonical_statistics(self):
        space = CellSpace.binary(2)
        jset = JSet.saturated(space)
        table = ContingencyTable.from_mapping(space, {(0, 1): 2, (1, 0): 3, (1, 1): 4})

        # t_j = number of observations i with j ◁ i
        np.testing.assert_array_equal(canonical_statistics(table, jset), [6, 7, 4])
