#include <doctest.h>

#include <sstream>

#include "ciu/dataset.hpp"

using namespace ciu;

TEST_CASE("iris loads with one-hot class outputs") {
  const auto ds = load_csv(std::string(CIU_DATA_DIR) + "/iris.csv", {"species"});
  CHECK(ds.rows() == 150);
  CHECK(ds.feature_names.size() == 4);
  CHECK(ds.target_names == std::vector<std::string>{"setosa", "versicolor", "virginica"});
  CHECK(ds.classification);
  for (std::size_t r = 0; r < ds.rows(); ++r) CHECK(ds.targets(r, 0) + ds.targets(r, 1) + ds.targets(r, 2) == 1.0);
  const auto in = ds.input_descriptors();
  CHECK(in[2].min_value == 1.0);
  CHECK(in[2].max_value == 6.9);
  for (const auto& o : ds.output_descriptors()) {
    CHECK(o.absmin == 0.0);
    CHECK(o.absmax == 1.0);
  }
  REQUIRE(ds.encodings.size() == 1);
  CHECK(ds.encodings[0].column == "species");
}

TEST_CASE("boston loads 13 features and medv") {
  const auto ds = load_csv(std::string(CIU_DATA_DIR) + "/boston.csv", {"medv"});
  CHECK(ds.rows() == 506);
  CHECK(ds.feature_names.size() == 13);
  CHECK(ds.target_names == std::vector<std::string>{"medv"});
  const auto out = ds.output_descriptors();
  CHECK(out[0].absmin == 5.0);
  CHECK(out[0].absmax == 50.0);
  // 1-based instance numbers as in the original data.
  CHECK(ds.targets(369, 0) == 50.0);
  CHECK(ds.targets(405, 0) == 5.0);
}

TEST_CASE("csv errors") {
  std::istringstream ragged("a,b,c\n1,2,3\n4,5\n");
  CHECK_THROWS_WITH_AS(parse_csv(ragged, {"c"}), doctest::Contains("ragged"), CiuError);
  std::istringstream bad("a,b\n1,2\nx,3\n");
  CHECK_THROWS_WITH_AS(parse_csv(bad, {"b"}), doctest::Contains("row 2"), CiuError);
  std::istringstream missing("a,b\n1,2\n");
  CHECK_THROWS_WITH_AS(parse_csv(missing, {"medv"}), doctest::Contains("medv"), CiuError);
  CHECK_THROWS_AS(load_csv("/nonexistent/file.csv", {"y"}), CiuError);
}

TEST_CASE("quoted fields and categorical encoding") {
  std::istringstream in("\"size, cm\",colour,y\r\n1.5,\"red\",0.1\r\n2,blue,0.2\r\n3,\"re\"\"d\",0.3\r\n");
  const auto ds = parse_csv(in, {"y"}, {"colour"});
  CHECK(ds.feature_names == std::vector<std::string>{"size, cm", "colour"});
  REQUIRE(ds.encodings.size() == 1);
  CHECK(ds.encodings[0].labels == std::vector<std::string>{"blue", "re\"d", "red"});
  CHECK(ds.features(0, 1) == 2.0);
  CHECK(ds.features(1, 1) == 0.0);
  const auto desc = ds.input_descriptors();
  CHECK(desc[1].kind == FeatureKind::categorical);
  CHECK(desc[1].categories == std::vector<double>{0, 1, 2});
  CHECK_NOTHROW(desc[1].validate());
}
