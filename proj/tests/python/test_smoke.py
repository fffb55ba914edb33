import json
import os

import pytest

import ciu

DATA = os.environ.get("CIU_DATA_DIR", os.path.join(os.path.dirname(__file__), "..", "..", "data"))


def nonlinear_problem():
    return ciu.Problem(ciu.NonlinearDemoModel(), ciu.unit_box_inputs(2), ciu.unit_outputs(1))


def test_walkthrough_values():
    r = ciu.explain(nonlinear_problem(), [0.1, 0.2], [[0], [1]])
    assert [round(x.ci, 3) for x in r] == [0.5, 0.5]
    assert abs(r[0].cu - 0.316) < 0.005
    assert abs(r[1].cu - 0.04) < 0.005
    assert r[0].n == 1000 and r[0].seed == 42


def test_ci_cu_functions():
    assert ciu.contextual_importance(0.2, 0.7, 0.0, 1.0) == pytest.approx(0.5)
    assert ciu.contextual_utility(0.45, 0.2, 0.7) == pytest.approx(0.5)
    assert ciu.contextual_utility(0.3, 0.3, 0.3) == 0.5


def test_python_callable_matches_builtin():
    fn = ciu.CallableModel(lambda x: [0.3 * x[0] + 0.7 * x[1]], 2, 1)
    a = ciu.explain(ciu.Problem(fn, ciu.unit_box_inputs(2), ciu.unit_outputs(1)), [0.2, 0.6], [[0], [1], [0, 1]], n=300)
    b = ciu.explain(
        ciu.Problem(ciu.LinearModel([0.3, 0.7]), ciu.unit_box_inputs(2), ciu.unit_outputs(1)),
        [0.2, 0.6],
        [[0], [1], [0, 1]],
        n=300,
    )
    for x, y in zip(a, b):
        assert x.ci == pytest.approx(y.ci, abs=1e-12)
        assert x.cu == pytest.approx(y.cu, abs=1e-12)


def test_errors_become_python_exceptions():
    with pytest.raises(ciu.CiuError):
        ciu.Problem(ciu.NonlinearDemoModel(), ciu.unit_box_inputs(3), ciu.unit_outputs(1))
    with pytest.raises(ValueError):
        ciu.explain(nonlinear_problem(), [0.1, 0.2], [[5]])
    with pytest.raises(ciu.CiuError):
        ciu.OutputDescriptor("y", 0, 1.0, 1.0)


def test_iris_training_and_concepts():
    ds = ciu.load_csv(os.path.join(DATA, "iris.csv"), ["species"])
    assert len(ds) == 150 and ds.target_names == ["setosa", "versicolor", "virginica"]
    net, info = ciu.train_mlp(ds.features, ds.targets)
    assert info["accuracy"] >= 0.95
    problem = ciu.Problem(net, ds.input_descriptors(), ds.output_descriptors())
    vocab = ciu.ConceptVocabulary()
    vocab.add("Sepal size and shape", [0, 1])
    vocab.add("Petal size and shape", [2, 3])
    r = ciu.explain(problem, [7, 3.2, 6, 1.8], ["Sepal size and shape", "Petal size and shape"], output_index=2,
                    vocabulary=vocab)
    assert r[1].ci > r[0].ci
    parts = ciu.explain_concept_decomposition(problem, "Petal size and shape", [7, 3.2, 6, 1.8], 2, vocabulary=vocab)
    assert len(parts) == 2 and all(0 < p.ci <= 1 for p in parts)


def test_knn_boston_bounds():
    ds = ciu.load_csv(os.path.join(DATA, "boston.csv"), ["medv"])
    knn = ciu.KnnModel(ds.features, ds.targets, 5)
    problem = ciu.Problem(knn, ds.input_descriptors(), ds.output_descriptors())
    r = ciu.explain(problem, ds.features[369], [[i] for i in range(13)])
    assert all(0.0 <= x.cu <= 1.0 and x.ci >= 0.0 for x in r)
    assert all(5.0 <= x.cmin <= x.y <= x.cmax <= 50.0 for x in r)


def test_rendering_and_structured_output():
    assert ciu.cu_color(0.0) == (220, 50, 32)
    assert ciu.cu_color(0.25) == (237.5, 125, 16)
    r = ciu.explain(nonlinear_problem(), [0.1, 0.2], [[0], [1]])
    svg = ciu.render_barplot(r, "y")
    assert svg == ciu.render_barplot(r, "y") and "<svg" in svg
    doc = json.loads(ciu.results_to_json(r))
    assert doc["schema"] == "ciu-results"
    back = ciu.results_from_json(ciu.results_to_json(r))
    assert [x.to_dict() for x in back] == [x.to_dict() for x in r]
    assert "because" in ciu.textual_explanation(r)


def test_curve():
    points, ctx = ciu.input_output_curve(nonlinear_problem(), [0.1, 0.2], 0, 0, 11)
    assert len(points) == 11 and points[0][0] == 0.0 and points[-1][0] == 1.0
    assert ctx[0] == 0.1 and ctx[1] == pytest.approx((0.1 ** 0.5 + 0.04) / 2)
