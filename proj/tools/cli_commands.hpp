#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ciu::cli {

struct DataOptions {
  std::string path;
  /// Defaults to the last CSV column.
  std::vector<std::string> targets;
  std::vector<std::string> categorical;
};

struct ModelOptions {
  std::string kind;  // mlp, knn, linear-demo, rule-demo, nonlinear-demo
  std::string load;
  std::string external_cmd;
  long timeout_ms = 30000;
  std::size_t inputs = 0;  // external model without --data
  std::size_t outputs = 1;
  std::size_t k = 5;
  std::vector<std::size_t> hidden{8};
  std::size_t epochs = 2000;
  double learning_rate = 0.1;
  std::uint64_t train_seed = 1;
};

struct InstanceOptions {
  std::string instance;
  std::optional<std::size_t> row;  // 1-based
};

struct ExplainOptions {
  DataOptions data;
  ModelOptions model;
  InstanceOptions instance;
  std::string vocab;
  std::string output = "ALL";
  std::vector<std::string> targets;
  std::vector<std::string> concepts;
  std::string parent = "abs";
  std::string decompose;
  std::size_t n = 1000;
  std::uint64_t seed = 42;
  bool no_extremes = false;
  std::optional<double> filter_distance;
  std::vector<std::string> formats{"text"};
  std::string out_dir = ".";
  std::optional<double> cu_neutral;
  std::string render_config;
  std::size_t top_k = 0;  // 0 = all
};

struct CurveOptions {
  DataOptions data;
  ModelOptions model;
  InstanceOptions instance;
  std::string input;
  std::string output = "0";
  std::size_t resolution = 101;
  std::vector<std::string> formats{"text"};
  std::string out_dir = ".";
};

struct TrainOptions {
  DataOptions data;
  ModelOptions model;
  std::string vocab;
  std::string save;
};

struct VocabOptions {
  std::string file;
  DataOptions data;
  std::string load;
};

int run_explain(const ExplainOptions& options);
int run_curve(const CurveOptions& options);
int run_train(const TrainOptions& options);
int run_vocab_validate(const VocabOptions& options);

}  // namespace ciu::cli
