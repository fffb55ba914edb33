#include <doctest.h>

#include <atomic>
#include <chrono>
#include <random>
#include <thread>

#include "ciu/engine.hpp"
#include "ciu/models.hpp"
#include "oracles.hpp"

using namespace ciu;

namespace {

class ConstantModel final : public BlackBoxModel {
 public:
  explicit ConstantModel(double v) : v_(v) {}
  std::size_t input_count() const override { return 2; }
  std::size_t output_count() const override { return 1; }
  std::vector<double> eval(std::span<const double>) const override { return {v_}; }
  std::string kind() const override { return "constant"; }

 private:
  double v_;
};

// Counts how many evaluations overlap in time.
class ProbeModel final : public BlackBoxModel {
 public:
  explicit ProbeModel(bool safe) : safe_(safe) {}
  std::size_t input_count() const override { return 4; }
  std::size_t output_count() const override { return 1; }
  std::vector<double> eval(std::span<const double> x) const override {
    return {x[0] + x[1] + x[2] + x[3]};
  }
  Matrix eval_batch(const Matrix& rows) const override {
    const int now = ++active_;
    int seen = max_active_.load();
    while (now > seen && !max_active_.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    auto out = BlackBoxModel::eval_batch(rows);
    --active_;
    return out;
  }
  bool concurrent_safe() const override { return safe_; }
  std::string kind() const override { return "probe"; }
  int max_active() const { return max_active_.load(); }

 private:
  bool safe_;
  mutable std::atomic<int> active_{0};
  mutable std::atomic<int> max_active_{0};
};

Problem nonlinear_problem() {
  return validate_problem(std::make_shared<NonlinearDemoModel>(), unit_box_inputs(2), unit_outputs(1));
}

Problem linear_problem() {
  return validate_problem(std::make_shared<LinearModel>(std::vector<double>{0.3, 0.7}),
                          unit_box_inputs(2), unit_outputs(1));
}

Problem rule_problem() {
  // Step surface: 0.3 when x1 >= 0.5, plus 0.7 when x2 >= 0.5.
  return validate_problem(std::make_shared<RuleStepModel>(std::vector<std::vector<double>>{{0.5}, {0.5}},
                                                          std::vector<double>{0.0, 0.7, 0.3, 1.0}),
                          unit_box_inputs(2), unit_outputs(1));
}

ExplanationRequest request_for(Context c, std::vector<Target> targets, std::size_t n = 1000,
                               std::uint64_t seed = 42) {
  ExplanationRequest r;
  r.context = std::move(c);
  r.targets = std::move(targets);
  r.sampling.n = n;
  r.sampling.seed = seed;
  return r;
}

constexpr double kY = 0.17811388300841896;           // (sqrt(0.1) + 0.04) / 2
constexpr double kX2Low = 0.15811388300841897;       // sqrt(0.1) / 2
constexpr double kX2High = 0.658113883008419;        // (sqrt(0.1) + 1) / 2

}  // namespace

TEST_CASE("grid oracle reproduces the closed-form nonlinear ranges") {
  const std::vector<std::pair<double, double>> box{{0, 1}, {0, 1}};
  const auto r1 = oracle::grid_range(oracle::nonlinear, {0.1, 0.2}, {0}, box, 10000);
  CHECK(r1.lo == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(r1.hi == doctest::Approx(0.52).epsilon(1e-12));
  CHECK(r1.y_context == doctest::Approx(kY).epsilon(1e-12));
  const auto r2 = oracle::grid_range(oracle::nonlinear, {0.1, 0.2}, {1}, box, 10000);
  CHECK(r2.lo == doctest::Approx(kX2Low).epsilon(1e-12));
  CHECK(r2.hi == doctest::Approx(kX2High).epsilon(1e-12));
}

TEST_CASE("estimate_output_range on the nonlinear demo model") {
  NonlinearDemoModel model;
  SamplingConfig cfg;
  const auto r1 = estimate_output_range(model, generate_samples({{0.1, 0.2}}, IndexSet{0}, unit_box_inputs(2), cfg), 0);
  CHECK(r1.cmin == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(r1.cmax == doctest::Approx(0.52).epsilon(1e-12));
  CHECK(r1.contains_context);
  CHECK(*r1.y_context == doctest::Approx(kY).epsilon(1e-12));
  CHECK(r1.n_samples == 1003);

  const auto r2 = estimate_output_range(model, generate_samples({{0.1, 0.2}}, IndexSet{1}, unit_box_inputs(2), cfg), 0);
  CHECK(std::abs(r2.cmin - 0.1581) < 1e-4);
  CHECK(std::abs(r2.cmax - 0.6581) < 1e-4);

  ConstantModel constant(0.7);
  const auto rc = estimate_output_range(constant, generate_samples({{0.1, 0.2}}, IndexSet{0, 1}, unit_box_inputs(2), cfg), 0);
  CHECK(rc.cmin == 0.7);
  CHECK(rc.cmax == 0.7);
  CHECK_THROWS_AS(estimate_output_range(constant, generate_samples({{0.1, 0.2}}, IndexSet{0}, unit_box_inputs(2), cfg), 1), CiuError);
}

TEST_CASE("model failures carry the sample row") {
  NonlinearDemoModel model;
  auto inputs = unit_box_inputs(2);
  inputs[0].min_value = -1.0;
  SamplingConfig cfg;
  cfg.n = 10;
  const auto s = generate_samples({{0.1, 0.2}}, IndexSet{0}, inputs, cfg);
  // Row 1 is the min extreme, x1 = -1.
  CHECK_THROWS_WITH_AS(estimate_output_range(model, s, 0), doctest::Contains("sample row 1"), CiuError);
}

TEST_CASE("contextual importance") {
  const OutputDescriptor unit{"y", 0, 0.0, 1.0};
  CHECK(contextual_importance({0.02, 0.52, 10, true, 0.1, IndexSet{0}}, unit) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(contextual_importance({0.3, 0.3, 10, true, 0.3, IndexSet{0}}, unit) == 0.0);
  CHECK(contextual_importance({10, 60, 10, true, 20, IndexSet{0}}, {"y", 0, 0.0, 100.0}) == 0.5);
}

TEST_CASE("contextual utility") {
  const OutputRangeEstimate r1{0.02, 0.52, 10, true, kY, IndexSet{0}};
  CHECK(std::abs(contextual_utility(kY, r1) - 0.3162) < 1e-4);
  const OutputRangeEstimate r2{kX2Low, kX2High, 10, true, kY, IndexSet{1}};
  CHECK(std::abs(contextual_utility(kY, r2) - 0.04) < 1e-4);
  CHECK(contextual_utility(0.02, r1) == 0.0);
  CHECK(contextual_utility(0.52, r1) == 1.0);
  CHECK(contextual_utility(0.3, {0.3, 0.3, 5, true, 0.3, IndexSet{0}}) == 0.5);
  CHECK_THROWS_AS(contextual_utility(0.1, {0.02, 0.52, 10, false, std::nullopt, IndexSet{0}}), CiuError);
}

TEST_CASE("generalized contextual importance") {
  const OutputRangeEstimate parent{0.0, 1.0, 10, true, 0.5, IndexSet{0, 1}};
  const OutputRangeEstimate child{0.02, 0.52, 10, true, 0.5, IndexSet{0}};
  CHECK(generalized_contextual_importance(child, parent) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(generalized_contextual_importance(parent, parent) == 1.0);
  // Two CI values sharing an absolute denominator: the ratio is the generalized CI.
  const OutputRangeEstimate petal{0.1, 0.1 + 0.638, 10, true, 0.5, IndexSet{2}};
  const OutputRangeEstimate all{0.05, 0.05 + 0.920, 10, true, 0.5, IndexSet{0, 1, 2, 3}};
  CHECK(generalized_contextual_importance(petal, all) == doctest::Approx(0.6934782608695652).epsilon(1e-9));
  CHECK_THROWS_AS(generalized_contextual_importance(child, {0.4, 0.4, 10, true, 0.4, IndexSet{0, 1}}), CiuError);
  CHECK_THROWS_AS(generalized_contextual_importance(parent, child), CiuError);
}

TEST_CASE("explain reproduces the nonlinear walk-through") {
  const auto results = explain(nonlinear_problem(), request_for({{0.1, 0.2}}, {IndexSet{0}, IndexSet{1}}));
  REQUIRE(results.size() == 2);
  CHECK(results[0].ci == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(results[1].ci == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(results[0].cu - 0.316) < 0.01);
  CHECK(std::abs(results[1].cu - 0.04) < 0.01);
  CHECK(results[0].target == "x1");
  CHECK(results[0].n == 1000);
  CHECK(results[0].seed == 42);
  CHECK(results[0].y_context == doctest::Approx(kY).epsilon(1e-12));
  CHECK_FALSE(results[0].overshoot);
}

TEST_CASE("linear model: CI equals the weight and CU the feature value") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 25; ++k) {
    const Context c{{u(rng), u(rng)}};
    const auto res = explain(linear_problem(), request_for(c, {IndexSet{0}, IndexSet{1}}, 200, rng()));
    CHECK(std::abs(res[0].ci - 0.3) < 1e-9);
    CHECK(std::abs(res[1].ci - 0.7) < 1e-9);
    CHECK(std::abs(res[0].cu - c.values[0]) < 1e-9);
    CHECK(std::abs(res[1].cu - c.values[1]) < 1e-9);
  }
}

TEST_CASE("engine matches the grid oracle on the three archetypes") {
  const std::vector<std::pair<double, double>> box{{0, 1}, {0, 1}};
  struct Case {
    Problem problem;
    oracle::Fn fn;
    double tol_1000;
  };
  std::vector<Case> cases{
      {linear_problem(), [](const std::vector<double>& x) { return 0.3 * x[0] + 0.7 * x[1]; }, 1e-9},
      {rule_problem(),
       [](const std::vector<double>& x) { return (x[0] >= 0.5 ? 0.3 : 0.0) + (x[1] >= 0.5 ? 0.7 : 0.0); },
       1e-2},
      {nonlinear_problem(), oracle::nonlinear, 1e-2}};
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& tc : cases) {
    for (int k = 0; k < 5; ++k) {
      const Context c{{u(rng), u(rng)}};
      for (std::size_t i = 0; i < 2; ++i) {
        const auto g = oracle::grid_range(tc.fn, c.values, {i}, box, 10000);
        const auto r = explain(tc.problem, request_for(c, {IndexSet{i}}, 1000, rng()));
        CHECK(std::abs(r[0].ci - oracle::ci(g, 0, 1)) <= tc.tol_1000);
        CHECK(std::abs(r[0].cu - oracle::cu(g)) <= tc.tol_1000);
      }
      const auto g = oracle::grid_range(tc.fn, c.values, {0, 1}, box, 1000);
      const auto r = explain(tc.problem, request_for(c, {IndexSet{0, 1}}, 10000, rng()));
      // Joint corners are reached by random rows only: at N = 1e4 the tail of
      // min + max shortfall stays below 0.06 with probability > 1 - 1e-3.
      CHECK(std::abs(r[0].ci - oracle::ci(g, 0, 1)) <= 6e-2);
    }
  }
  // Without extreme rows the nonlinear estimate converges with N.
  for (int k = 0; k < 5; ++k) {
    const Context c{{u(rng), u(rng)}};
    auto req = request_for(c, {IndexSet{1}}, 10000, rng());
    req.sampling.include_extremes = false;
    const auto g = oracle::grid_range(oracle::nonlinear, c.values, {1}, box, 10000);
    const auto r = explain(nonlinear_problem(), req);
    CHECK(std::abs(r[0].ci - oracle::ci(g, 0, 1)) <= 1e-3);
  }
}

TEST_CASE("chain identity between absolute and generalized CI") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto problem = nonlinear_problem();
  const auto& out = problem.outputs()[0];
  for (int k = 0; k < 50; ++k) {
    const Context c{{u(rng), u(rng)}};
    SamplingConfig cfg{200, rng(), true, k % 2 == 0, std::nullopt};
    const auto all = estimate_output_range(problem.model(), generate_samples(c, IndexSet{0, 1}, problem.inputs(), cfg), 0);
    for (std::size_t i = 0; i < 2; ++i) {
      const auto child = estimate_output_range(problem.model(), generate_samples(c, IndexSet{i}, problem.inputs(), cfg), 0);
      const auto parent = merge_ranges(all, child);
      CHECK(std::abs(contextual_importance(child, out) -
                     generalized_contextual_importance(child, parent) * contextual_importance(parent, out)) <= 1e-12);
    }
  }
}

TEST_CASE("explain is deterministic") {
  const auto req = request_for({{0.4, 0.9}}, {IndexSet{0}, IndexSet{1}, IndexSet{0, 1}}, 500, 7);
  CHECK(explain(nonlinear_problem(), req) == explain(nonlinear_problem(), req));
}

TEST_CASE("ranges nest for monotone models") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& problem : {linear_problem(), nonlinear_problem()}) {
    for (int k = 0; k < 20; ++k) {
      const Context c{{u(rng), u(rng)}};
      SamplingConfig cfg{300, rng(), true, true, std::nullopt};
      const auto big = estimate_output_range(problem.model(), generate_samples(c, IndexSet{0, 1}, problem.inputs(), cfg), 0);
      for (std::size_t i = 0; i < 2; ++i) {
        const auto small = estimate_output_range(problem.model(), generate_samples(c, IndexSet{i}, problem.inputs(), cfg), 0);
        CHECK(small.cmin >= big.cmin);
        CHECK(small.cmax <= big.cmax);
      }
    }
  }
}

TEST_CASE("CU stays in [0,1] over random models and contexts") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    auto mlp = std::make_shared<SmallMlp>(SmallMlp::random({3, 4, 2}, rng()));
    const auto problem = validate_problem(mlp, unit_box_inputs(3), unit_outputs(2));
    auto req = request_for({{u(rng), u(rng), u(rng)}}, {IndexSet{static_cast<std::size_t>(k % 3)}, IndexSet{0, 2}}, 50, rng());
    req.output_index = k % 2;
    for (const auto& r : explain(problem, req)) {
      CHECK(r.cu >= 0.0);
      CHECK(r.cu <= 1.0);
      CHECK(r.ci >= 0.0);
    }
  }
}

TEST_CASE("degenerate ranges give neutral CU and a flag") {
  const auto problem = validate_problem(std::make_shared<ConstantModel>(0.7), unit_box_inputs(2), unit_outputs(1));
  const auto res = explain(problem, request_for({{0.5, 0.5}}, {IndexSet{0}}, 20));
  CHECK(res[0].ci == 0.0);
  CHECK(res[0].cu == 0.5);
  CHECK(res[0].degenerate_range);
}

TEST_CASE("overshooting models report CI unclamped") {
  const auto problem = validate_problem(std::make_shared<LinearModel>(std::vector<double>{3.0, 0.0}),
                                        unit_box_inputs(2), unit_outputs(1));
  const auto res = explain(problem, request_for({{0.5, 0.5}}, {IndexSet{0}}, 20));
  CHECK(res[0].ci == doctest::Approx(3.0));
  CHECK(res[0].overshoot);
}

TEST_CASE("explain without the context row cannot produce CU") {
  auto req = request_for({{0.1, 0.2}}, {IndexSet{0}}, 20);
  req.sampling.include_context = false;
  CHECK_THROWS_AS(explain(nonlinear_problem(), req), CiuError);
}

TEST_CASE("parent concepts select the generalized CI") {
  ConceptVocabulary vocab;
  vocab.add("both", IndexSet{0, 1});
  vocab.add("first", IndexSet{0}, std::string("both"));
  auto req = request_for({{0.1, 0.2}}, {IndexSet{0}, std::string("first")}, 1000);
  req.parent = std::string("both");
  const auto res = explain(nonlinear_problem(), req, vocab);
  REQUIRE(res.size() == 2);
  CHECK(res[1].target == "first");
  CHECK(res[0].ci == res[1].ci);
  CHECK(res[0].ci > 0.0);
  CHECK(res[0].ci <= 1.0);

  auto same = request_for({{0.1, 0.2}}, {IndexSet{0, 1}}, 1000);
  same.parent = AllInputs{};
  CHECK(explain(nonlinear_problem(), same)[0].ci == 1.0);

  auto outside = request_for({{0.1, 0.2}}, {IndexSet{1}}, 10);
  outside.parent = std::string("first");
  CHECK_THROWS_AS(explain(nonlinear_problem(), outside, vocab), CiuError);
  auto unknown = request_for({{0.1, 0.2}}, {std::string("nope")}, 10);
  CHECK_THROWS_AS(explain(nonlinear_problem(), unknown, vocab), CiuError);
}

TEST_CASE("concept decomposition") {
  const auto problem = validate_problem(std::make_shared<LinearModel>(std::vector<double>{0.1, 0.2, 0.3, 0.4}),
                                        unit_box_inputs(4), unit_outputs(1));
  ConceptVocabulary vocab;
  vocab.add("low", IndexSet{0, 1});
  vocab.add("high", IndexSet{2, 3});
  vocab.add("single", IndexSet{3});
  SamplingConfig cfg;
  const Context c{{0.5, 0.5, 0.5, 0.5}};

  const auto parts = explain_concept_decomposition(problem, "high", c, 0, cfg, vocab);
  REQUIRE(parts.size() == 2);
  CHECK(parts[0].target == "x3");
  // Child ranges are exact (extreme rows); the joint parent range can only
  // fall short of 0.7, so each ratio sits at or slightly above 0.3/0.7, 0.4/0.7.
  CHECK(parts[0].ci >= 0.3 / 0.7 - 1e-12);
  CHECK(parts[0].ci <= 0.3 / 0.65);
  CHECK(parts[1].ci >= 0.4 / 0.7 - 1e-12);
  CHECK(parts[1].ci <= 0.4 / 0.65);
  CHECK(parts[1].ci > parts[0].ci);

  const auto top = explain_concept_decomposition(problem, "ALL", c, 0, cfg, vocab);
  REQUIRE(top.size() == 3);
  for (const auto& r : top) {
    CHECK(r.ci <= 1.0);
    CHECK(r.ci >= 0.0);
  }
  CHECK_THROWS_AS(explain_concept_decomposition(problem, "single", c, 0, cfg, vocab), CiuError);
  CHECK_THROWS_AS(explain_concept_decomposition(problem, "missing", c, 0, cfg, vocab), CiuError);
}

TEST_CASE("targets run sequentially unless the model allows concurrency") {
  const auto req = request_for({{0.5, 0.5, 0.5, 0.5}}, {IndexSet{0}, IndexSet{1}, IndexSet{2}, IndexSet{3}}, 10);
  auto serial = std::make_shared<ProbeModel>(false);
  (void)explain(validate_problem(serial, unit_box_inputs(4), {{"y", 0, 0, 4}}), req);
  CHECK(serial->max_active() == 1);
  if (std::thread::hardware_concurrency() > 1) {
    auto parallel = std::make_shared<ProbeModel>(true);
    const auto a = explain(validate_problem(parallel, unit_box_inputs(4), {{"y", 0, 0, 4}}), req);
    CHECK(parallel->max_active() > 1);
    CHECK(a == explain(validate_problem(serial, unit_box_inputs(4), {{"y", 0, 0, 4}}), req));
  }
}

TEST_CASE("input/output curves") {
  const auto curve = input_output_curve(nonlinear_problem(), {{0.1, 0.2}}, 0, 0, 11);
  REQUIRE(curve.points.size() == 11);
  CHECK(curve.points.front().y == doctest::Approx(0.02));
  CHECK(curve.points.back().y == doctest::Approx(0.52));
  for (std::size_t k = 1; k < curve.points.size(); ++k) CHECK(curve.points[k].y > curve.points[k - 1].y);
  CHECK(curve.context_point.x == 0.1);
  CHECK(curve.context_point.y == doctest::Approx(kY));

  const auto two = input_output_curve(nonlinear_problem(), {{0.1, 0.2}}, 1, 0, 2);
  REQUIRE(two.points.size() == 2);
  CHECK(two.points[0].x == 0.0);
  CHECK(two.points[1].x == 1.0);

  const auto flat_problem = validate_problem(std::make_shared<ConstantModel>(0.7), unit_box_inputs(2), unit_outputs(1));
  for (const auto& p : input_output_curve(flat_problem, {{0.1, 0.2}}, 0, 0, 5).points) CHECK(p.y == 0.7);

  CHECK_THROWS_AS(input_output_curve(nonlinear_problem(), {{0.1, 0.2}}, 0, 0, 1), CiuError);
  CHECK_THROWS_AS(input_output_curve(nonlinear_problem(), {{0.1, 0.2}}, 2, 0, 5), CiuError);
  CHECK_THROWS_AS(input_output_curve(nonlinear_problem(), {{0.1, 0.2}}, 0, 1, 5), CiuError);
}
