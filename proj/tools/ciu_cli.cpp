#include <CLI11.hpp>

#include <iostream>

#include "ciu/types.hpp"
#include "cli_commands.hpp"

using namespace ciu::cli;

namespace {

void add_data_options(CLI::App* app, DataOptions& d) {
  app->add_option("--data", d.path, "CSV file with one header row");
  app->add_option("--target", d.targets, "Target column(s); defaults to the last column")->delimiter(',');
  app->add_option("--categorical", d.categorical, "Text feature columns to integer-encode")->delimiter(',');
}

void add_model_options(CLI::App* app, ModelOptions& m) {
  app->add_option("--model", m.kind, "mlp, knn, linear-demo, rule-demo or nonlinear-demo");
  app->add_option("--load", m.load, "Saved model file");
  app->add_option("--external-cmd", m.external_cmd, "Shell command that evaluates CSV rows on stdin");
  app->add_option("--timeout", m.timeout_ms, "External model timeout in milliseconds")->check(CLI::PositiveNumber);
  app->add_option("--inputs", m.inputs, "External model input count when no --data is given");
  app->add_option("--outputs", m.outputs, "External model output count when no --data is given");
  app->add_option("--k", m.k, "Neighbours for knn");
  app->add_option("--hidden", m.hidden, "Hidden layer sizes for mlp")->delimiter(',');
  app->add_option("--epochs", m.epochs, "Training epochs for mlp");
  app->add_option("--learning-rate", m.learning_rate, "Learning rate for mlp");
  app->add_option("--train-seed", m.train_seed, "Weight initialisation and shuffling seed for mlp");
}

void add_instance_options(CLI::App* app, InstanceOptions& i) {
  app->add_option("--instance", i.instance, "Comma-separated input values");
  app->add_option("--row", i.row, "1-based data row to explain");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contextual importance and utility explanations"};
  app.require_subcommand(1);

  ExplainOptions ex;
  auto* explain = app.add_subcommand("explain", "CI and CU of inputs or concepts for one instance");
  add_data_options(explain, ex.data);
  add_model_options(explain, ex.model);
  add_instance_options(explain, ex.instance);
  explain->add_option("--vocab", ex.vocab, "Vocabulary config file");
  explain->add_option("--output", ex.output, "Output name, index or ALL");
  explain->add_option("--targets", ex.targets, "Inputs to study; join names with + for a joint set")
      ->delimiter(',');
  explain->add_option("--concepts", ex.concepts, "Vocabulary concepts to study")->delimiter(',');
  explain->add_option("--parent", ex.parent, "CI reference: abs, ALL or a concept name");
  explain->add_option("--decompose", ex.decompose, "Explain the parts of a concept (or ALL) relative to it");
  explain->add_option("--n", ex.n, "Random samples per target")->check(CLI::PositiveNumber);
  explain->add_option("--seed", ex.seed, "Sampling seed");
  explain->add_flag("--no-extremes", ex.no_extremes, "Do not add min/max rows");
  explain->add_option("--filter-distance", ex.filter_distance, "Drop samples this far from all data rows");
  explain->add_option("--format", ex.formats, "text, json, svg")->delimiter(',');
  explain->add_option("--out-dir", ex.out_dir, "Directory for json and svg files");
  explain->add_option("--cu-neutral", ex.cu_neutral, "CU value drawn in yellow");
  explain->add_option("--render-config", ex.render_config, "Colors and word tables");
  explain->add_option("--top-k", ex.top_k, "Features named in the text explanation (0 = all)");

  CurveOptions cu;
  auto* curve = app.add_subcommand("curve", "Output as a function of one input");
  add_data_options(curve, cu.data);
  add_model_options(curve, cu.model);
  add_instance_options(curve, cu.instance);
  curve->add_option("--input", cu.input, "Input name or index")->required();
  curve->add_option("--output", cu.output, "Output name or index");
  curve->add_option("--resolution", cu.resolution, "Points on the curve");
  curve->add_option("--format", cu.formats, "text, json, svg")->delimiter(',');
  curve->add_option("--out-dir", cu.out_dir, "Directory for json and svg files");

  TrainOptions tr;
  auto* train = app.add_subcommand("train", "Train a model on a CSV file and save it");
  add_data_options(train, tr.data);
  add_model_options(train, tr.model);
  train->add_option("--vocab", tr.vocab, "Vocabulary config stored with the model");
  train->add_option("--save", tr.save, "Model file to write")->required();

  VocabOptions vo;
  auto* vocab = app.add_subcommand("vocab-validate", "Check a vocabulary config and print its concept tree");
  vocab->add_option("file", vo.file, "Vocabulary config file")->required();
  add_data_options(vocab, vo.data);
  vocab->add_option("--load", vo.load, "Saved model supplying the input names");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*explain) return run_explain(ex);
    if (*curve) return run_curve(cu);
    if (*train) return run_train(tr);
    if (*vocab) return run_vocab_validate(vo);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
