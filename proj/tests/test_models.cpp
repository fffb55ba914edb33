#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "ciu/dataset.hpp"
#include "ciu/models.hpp"

using namespace ciu;

TEST_CASE("closed-form models") {
  NonlinearDemoModel nonlinear;
  CHECK(nonlinear.eval(std::vector<double>{0.1, 0.2})[0] == doctest::Approx((std::sqrt(0.1) + 0.04) / 2).epsilon(1e-15));
  CHECK(std::abs(nonlinear.eval(std::vector<double>{0.1, 0.2})[0] - 0.1781) < 1e-4);
  CHECK(nonlinear.eval(std::vector<double>{0.0, 0.0})[0] == 0.0);
  for (int a = 0; a < 100; ++a) {
    for (int b = 0; b < 100; ++b) {
      const double x1 = a / 99.0, x2 = b / 99.0;
      CHECK(std::abs(nonlinear.eval(std::vector<double>{x1, x2})[0] - (std::pow(x1, 0.5) + x2 * x2) / 2.0) <= 1e-12);
    }
  }
  CHECK_THROWS_AS(nonlinear.eval(std::vector<double>{0.1}), CiuError);

  LinearModel linear({0.3, 0.7});
  CHECK(linear.eval(std::vector<double>{1.0, 1.0})[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(linear.eval(std::vector<double>{1.0, 1.0, 1.0}), CiuError);

  RuleStepModel rule({{0.5}, {0.3, 0.6}}, {0, 1, 2, 3, 4, 5});
  CHECK(rule.eval(std::vector<double>{0.2, 0.1})[0] == 0.0);
  CHECK(rule.eval(std::vector<double>{0.2, 0.3})[0] == 1.0);
  CHECK(rule.eval(std::vector<double>{0.7, 0.9})[0] == 5.0);
  CHECK_THROWS_AS(RuleStepModel({{0.5}}, {1.0}), CiuError);
}

TEST_CASE("mlp outputs stay strictly inside (0,1) far outside the box") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-80.0, 80.0);
  for (int k = 0; k < 20; ++k) {
    auto mlp = SmallMlp::random({4, 6, 3}, rng());
    // Exaggerated weights push pre-activations to saturation.
    auto layers = mlp.layers();
    for (auto& l : layers)
      for (auto& w : l.weights) w *= 50.0;
    SmallMlp big(layers, mlp.input_offset(), mlp.input_scale());
    for (int s = 0; s < 200; ++s) {
      for (double y : big.eval(std::vector<double>{u(rng), u(rng), u(rng), u(rng)})) {
        CHECK(y > 0.0);
        CHECK(y < 1.0);
      }
    }
  }
}

TEST_CASE("train_mlp contracts") {
  TrainingSet data{Matrix::from_rows({{0, 0}, {1, 1}}), Matrix::from_rows({{1, 0}, {0, 1}})};
  MlpTrainingOptions opt;
  opt.epochs = 1;
  opt.learning_rate = 0.0;
  opt.hidden = {3};
  opt.seed = 9;
  opt.normalize_inputs = false;
  const auto net = train_mlp(data, opt);
  const auto init = SmallMlp::random({2, 3, 2}, 9);
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    CHECK(net.layers()[l].weights == init.layers()[l].weights);
    CHECK(net.layers()[l].bias == init.layers()[l].bias);
  }
  CHECK_THROWS_AS(train_mlp({Matrix(0, 2), Matrix(0, 2)}, opt), CiuError);

  opt.learning_rate = 1e308;
  opt.epochs = 5;
  TrainingSet wild{Matrix::from_rows({{1e200, -1e200}}), Matrix::from_rows({{1e300, -1e300}})};
  CHECK_THROWS_WITH_AS(train_mlp(wild, opt), doctest::Contains("epoch"), CiuError);
}

TEST_CASE("mlp training is deterministic and learns iris") {
  const auto ds = load_csv(std::string(CIU_DATA_DIR) + "/iris.csv", {"species"});
  MlpTrainingOptions opt;
  MlpTrainingReport report;
  const auto a = train_mlp(ds.training_set(), opt, &report);
  const auto b = train_mlp(ds.training_set(), opt);
  CHECK(a.layers()[0].weights == b.layers()[0].weights);
  CHECK(report.accuracy >= 0.95);
  CHECK(report.epochs == opt.epochs);
}

TEST_CASE("knn predictions") {
  const Matrix x = Matrix::from_rows({{0, 0}, {1, 0}, {0, 1}, {1, 1}});
  const Matrix y = Matrix::from_rows({{1}, {2}, {3}, {10}});
  KnnModel one(x, y, 1, KnnTask::regression);
  CHECK(one.eval(std::vector<double>{1, 1})[0] == 10.0);
  CHECK(one.eval(std::vector<double>{0.1, 0.9})[0] == 3.0);
  KnnModel all(x, y, 4, KnnTask::regression);
  CHECK(all.eval(std::vector<double>{0.3, 0.3})[0] == 4.0);
  CHECK_THROWS_AS(KnnModel(x, y, 0, KnnTask::regression), CiuError);
  CHECK_THROWS_AS(KnnModel(x, y, 5, KnnTask::regression), CiuError);

  const Matrix cls = Matrix::from_rows({{1, 0}, {1, 0}, {0, 1}, {0, 1}});
  KnnModel c(x, cls, 3, KnnTask::classification);
  const auto p = c.eval(std::vector<double>{0, 0});
  CHECK(p[0] + p[1] == doctest::Approx(1.0));
}

TEST_CASE("knn on boston stays within the target range") {
  const auto ds = load_csv(std::string(CIU_DATA_DIR) + "/boston.csv", {"medv"});
  KnnModel knn(ds.features, ds.targets, 5, KnnTask::regression);
  std::mt19937_64 rng(8);
  const auto inputs = ds.input_descriptors();
  for (int k = 0; k < 200; ++k) {
    std::vector<double> x;
    for (const auto& d : inputs) {
      const double span = d.max_value - d.min_value;
      x.push_back(std::uniform_real_distribution<double>(d.min_value - 5 * span, d.max_value + 5 * span)(rng));
    }
    const double y = knn.eval(x)[0];
    CHECK(y >= 5.0);
    CHECK(y <= 50.0);
  }
  const double y370 = knn.eval(ds.features.row(369))[0];
  CHECK(y370 >= 5.0);
  CHECK(y370 <= 50.0);
}

TEST_CASE("model files round-trip") {
  const auto dir = std::filesystem::temp_directory_path() / "ciu_model_test";
  std::filesystem::create_directories(dir);
  std::vector<ModelPtr> models{
      std::make_shared<LinearModel>(std::vector<double>{0.3, 0.7}, 0.1),
      std::make_shared<RuleStepModel>(std::vector<std::vector<double>>{{0.5}, {0.5}}, std::vector<double>{0, 0.7, 0.3, 1}),
      std::make_shared<NonlinearDemoModel>(),
      std::make_shared<SmallMlp>(SmallMlp::random({2, 4, 1}, 3)),
      std::make_shared<KnnModel>(Matrix::from_rows({{0, 0}, {1, 1}, {0.2, 0.9}}), Matrix::from_rows({{0.1}, {0.9}, {0.4}}), 2,
                                 KnnTask::regression)};
  for (const auto& m : models) {
    SavedModel saved{m, unit_box_inputs(2), unit_outputs(1), {}};
    saved.vocabulary.add("both", IndexSet{0, 1}, std::nullopt, {"everything"});
    const auto path = (dir / (m->kind() + ".json")).string();
    save_model(path, saved);
    const auto loaded = load_model(path);
    CHECK(loaded.model->kind() == m->kind());
    CHECK(loaded.inputs == saved.inputs);
    CHECK(loaded.outputs == saved.outputs);
    CHECK(loaded.vocabulary == saved.vocabulary);
    for (double a : {0.0, 0.25, 0.8}) {
      for (double b : {0.1, 0.5, 1.0}) {
        const std::vector<double> x{a, b};
        CHECK(loaded.model->eval(x) == m->eval(x));
      }
    }
  }
  CHECK_THROWS_AS(saved_model_from_json(json{{"format", "other"}}), CiuError);
  CHECK_THROWS_AS(saved_model_from_json(json{{"format", "ciu-model"}, {"version", 2}}), CiuError);
  std::filesystem::remove_all(dir);
}
