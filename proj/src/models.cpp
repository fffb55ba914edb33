#include "ciu/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ciu/sampling.hpp"

namespace ciu {

namespace {

void check_arity(std::span<const double> x, std::size_t expected) {
  if (x.size() != expected)
    throw CiuError("model takes " + std::to_string(expected) + " inputs, got " +
                   std::to_string(x.size()));
}

}  // namespace

LinearModel::LinearModel(std::vector<double> weights, double bias)
    : weights_(std::move(weights)), bias_(bias) {
  if (weights_.empty()) throw CiuError("linear model needs at least one weight");
}

std::vector<double> LinearModel::eval(std::span<const double> x) const {
  check_arity(x, weights_.size());
  double y = bias_;
  for (std::size_t i = 0; i < x.size(); ++i) y += weights_[i] * x[i];
  return {y};
}

RuleStepModel::RuleStepModel(std::vector<std::vector<double>> thresholds,
                             std::vector<double> levels)
    : thresholds_(std::move(thresholds)), levels_(std::move(levels)) {
  if (thresholds_.empty()) throw CiuError("rule model needs at least one input");
  std::size_t cells = 1;
  for (auto& t : thresholds_) {
    if (!std::is_sorted(t.begin(), t.end()))
      throw CiuError("rule model thresholds must be sorted");
    cells *= t.size() + 1;
  }
  if (levels_.size() != cells)
    throw CiuError("rule model needs " + std::to_string(cells) + " levels, got " +
                   std::to_string(levels_.size()));
}

std::vector<double> RuleStepModel::eval(std::span<const double> x) const {
  check_arity(x, thresholds_.size());
  std::size_t cell = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto& t = thresholds_[i];
    const auto bin = static_cast<std::size_t>(std::upper_bound(t.begin(), t.end(), x[i]) - t.begin());
    cell = cell * (t.size() + 1) + bin;
  }
  return {levels_[cell]};
}

std::vector<double> NonlinearDemoModel::eval(std::span<const double> x) const {
  check_arity(x, 2);
  if (x[0] < 0.0) throw CiuError("nonlinear demo model is undefined for x1 < 0");
  return {(std::sqrt(x[0]) + x[1] * x[1]) / 2.0};
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-std::clamp(z, -30.0, 30.0))); }

SmallMlp::SmallMlp(std::vector<Layer> layers, std::vector<double> input_offset,
                   std::vector<double> input_scale)
    : layers_(std::move(layers)),
      input_offset_(std::move(input_offset)),
      input_scale_(std::move(input_scale)) {
  if (layers_.empty()) throw CiuError("network needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.in == 0 || layer.out == 0) throw CiuError("network layer with zero width");
    if (layer.weights.size() != layer.in * layer.out || layer.bias.size() != layer.out)
      throw CiuError("network layer " + std::to_string(l) + " has inconsistent parameter sizes");
    if (l > 0 && layers_[l - 1].out != layer.in)
      throw CiuError("network layer " + std::to_string(l) + " does not match the previous layer");
  }
  if (input_offset_.size() != input_count() || input_scale_.size() != input_count())
    throw CiuError("network input scaling has the wrong length");
}

SmallMlp SmallMlp::random(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed) {
  if (layer_sizes.size() < 2) throw CiuError("network needs an input and an output size");
  SampleRng rng(seed);
  std::vector<Layer> layers;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    Layer layer;
    layer.in = layer_sizes[l];
    layer.out = layer_sizes[l + 1];
    layer.weights.resize(layer.in * layer.out);
    layer.bias.resize(layer.out);
    for (auto& w : layer.weights) w = rng.uniform(-0.5, 0.5);
    for (auto& b : layer.bias) b = rng.uniform(-0.5, 0.5);
    layers.push_back(std::move(layer));
  }
  const auto n_in = layer_sizes.front();
  return SmallMlp(std::move(layers), std::vector<double>(n_in, 0.0), std::vector<double>(n_in, 1.0));
}

std::vector<std::vector<double>> SmallMlp::forward(std::span<const double> x) const {
  check_arity(x, input_count());
  std::vector<std::vector<double>> acts;
  acts.reserve(layers_.size() + 1);
  std::vector<double> a(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) a[i] = (x[i] - input_offset_[i]) * input_scale_[i];
  acts.push_back(std::move(a));
  for (const auto& layer : layers_) {
    const auto& prev = acts.back();
    std::vector<double> next(layer.out);
    for (std::size_t o = 0; o < layer.out; ++o) {
      double z = layer.bias[o];
      const double* w = layer.weights.data() + o * layer.in;
      for (std::size_t i = 0; i < layer.in; ++i) z += w[i] * prev[i];
      next[o] = sigmoid(z);
    }
    acts.push_back(std::move(next));
  }
  return acts;
}

std::vector<double> SmallMlp::eval(std::span<const double> x) const {
  return std::move(forward(x).back());
}

double classification_accuracy(const BlackBoxModel& model, const TrainingSet& data) {
  if (data.features.rows() == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < data.features.rows(); ++r) {
    const auto y = model.eval(data.features.row(r));
    const auto t = data.targets.row(r);
    const auto predicted = std::max_element(y.begin(), y.end()) - y.begin();
    const auto actual = std::max_element(t.begin(), t.end()) - t.begin();
    if (predicted == actual) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.features.rows());
}

SmallMlp train_mlp(const TrainingSet& data, const MlpTrainingOptions& options,
                   MlpTrainingReport* report) {
  const auto rows = data.features.rows();
  if (rows == 0) throw CiuError("cannot train on an empty dataset");
  if (data.targets.rows() != rows)
    throw CiuError("feature and target row counts differ");
  if (data.targets.cols() == 0) throw CiuError("dataset has no target columns");

  std::vector<std::size_t> sizes{data.features.cols()};
  sizes.insert(sizes.end(), options.hidden.begin(), options.hidden.end());
  sizes.push_back(data.targets.cols());
  SmallMlp random = SmallMlp::random(sizes, options.seed);

  std::vector<double> offset(data.features.cols(), 0.0), scale(data.features.cols(), 1.0);
  if (options.normalize_inputs) {
    for (std::size_t c = 0; c < data.features.cols(); ++c) {
      const auto col = data.features.column(c);
      const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
      offset[c] = *lo;
      scale[c] = *hi > *lo ? 1.0 / (*hi - *lo) : 1.0;
    }
  }
  SmallMlp net(random.layers(), offset, scale);
  auto& layers = net.mutable_layers();

  std::vector<std::size_t> order(rows);
  std::iota(order.begin(), order.end(), 0);
  SampleRng shuffle_rng(options.seed + 1);
  std::vector<std::vector<double>> deltas(layers.size());

  double mse = 0.0;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    for (std::size_t k = rows; k > 1; --k) std::swap(order[k - 1], order[shuffle_rng.index(k)]);
    double sq = 0.0;
    for (auto r : order) {
      const auto acts = net.forward(data.features.row(r));
      const auto target = data.targets.row(r);
      // Output deltas for 1/2 (y - t)^2 through the sigmoid.
      const auto& y = acts.back();
      auto& d_out = deltas.back();
      d_out.assign(y.size(), 0.0);
      for (std::size_t o = 0; o < y.size(); ++o) {
        const double err = y[o] - target[o];
        sq += err * err;
        d_out[o] = err * y[o] * (1.0 - y[o]);
      }
      for (std::size_t l = layers.size() - 1; l > 0; --l) {
        const auto& layer = layers[l];
        const auto& a = acts[l];
        auto& d = deltas[l - 1];
        d.assign(layer.in, 0.0);
        for (std::size_t o = 0; o < layer.out; ++o) {
          const double* w = layer.weights.data() + o * layer.in;
          for (std::size_t i = 0; i < layer.in; ++i) d[i] += w[i] * deltas[l][o];
        }
        for (std::size_t i = 0; i < layer.in; ++i) d[i] *= a[i] * (1.0 - a[i]);
      }
      for (std::size_t l = 0; l < layers.size(); ++l) {
        auto& layer = layers[l];
        const auto& a = acts[l];
        for (std::size_t o = 0; o < layer.out; ++o) {
          const double g = options.learning_rate * deltas[l][o];
          double* w = layer.weights.data() + o * layer.in;
          for (std::size_t i = 0; i < layer.in; ++i) w[i] -= g * a[i];
          layer.bias[o] -= g;
        }
      }
    }
    mse = sq / static_cast<double>(rows * data.targets.cols());
    if (!std::isfinite(mse))
      throw CiuError("training diverged: non-finite loss at epoch " + std::to_string(epoch + 1));
  }

  if (report) {
    report->epochs = options.epochs;
    report->final_mse = mse;
    report->accuracy = classification_accuracy(net, data);
  }
  return net;
}

KnnModel::KnnModel(Matrix features, Matrix targets, std::size_t k, KnnTask task)
    : features_(std::move(features)), targets_(std::move(targets)), k_(k), task_(task) {
  if (features_.rows() == 0) throw CiuError("k-NN model needs training rows");
  if (targets_.rows() != features_.rows()) throw CiuError("feature and target row counts differ");
  if (k_ < 1 || k_ > features_.rows())
    throw CiuError("k must lie in [1, " + std::to_string(features_.rows()) + "]");
  inv_span_.resize(features_.cols(), 0.0);
  for (std::size_t c = 0; c < features_.cols(); ++c) {
    const auto col = features_.column(c);
    const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
    inv_span_[c] = *hi > *lo ? 1.0 / (*hi - *lo) : 0.0;
  }
}

std::vector<double> KnnModel::eval(std::span<const double> x) const {
  check_arity(x, features_.cols());
  std::vector<std::pair<double, std::size_t>> dist(features_.rows());
  for (std::size_t r = 0; r < features_.rows(); ++r) {
    double sum = 0.0;
    const auto row = features_.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      const double d = (x[c] - row[c]) * inv_span_[c];
      sum += d * d;
    }
    dist[r] = {sum, r};
  }
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_), dist.end());
  std::vector<double> y(targets_.cols(), 0.0);
  for (std::size_t n = 0; n < k_; ++n) {
    const auto t = targets_.row(dist[n].second);
    for (std::size_t c = 0; c < y.size(); ++c) y[c] += t[c];
  }
  for (auto& v : y) v /= static_cast<double>(k_);
  return y;
}

namespace {

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r)
    rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  return rows;
}

Matrix matrix_from_json(const json& j) {
  return Matrix::from_rows(j.get<std::vector<std::vector<double>>>());
}

}  // namespace

json model_to_json(const BlackBoxModel& model) {
  if (const auto* m = dynamic_cast<const LinearModel*>(&model)) {
    return {{"kind", "linear"}, {"weights", m->weights()}, {"bias", m->bias()}};
  }
  if (const auto* m = dynamic_cast<const RuleStepModel*>(&model)) {
    return {{"kind", "rule"}, {"thresholds", m->thresholds()}, {"levels", m->levels()}};
  }
  if (dynamic_cast<const NonlinearDemoModel*>(&model)) {
    return {{"kind", "nonlinear"}};
  }
  if (const auto* m = dynamic_cast<const SmallMlp*>(&model)) {
    json layers = json::array();
    for (const auto& l : m->layers()) {
      layers.push_back({{"in", l.in}, {"out", l.out}, {"weights", l.weights}, {"bias", l.bias}});
    }
    return {{"kind", "mlp"},
            {"activation", "sigmoid"},
            {"input_offset", m->input_offset()},
            {"input_scale", m->input_scale()},
            {"layers", layers}};
  }
  if (const auto* m = dynamic_cast<const KnnModel*>(&model)) {
    return {{"kind", "knn"},
            {"k", m->k()},
            {"task", m->task() == KnnTask::regression ? "regression" : "classification"},
            {"features", matrix_to_json(m->features())},
            {"targets", matrix_to_json(m->targets())}};
  }
  throw CiuError("model kind '" + model.kind() + "' cannot be saved");
}

ModelPtr model_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "linear")
    return std::make_shared<LinearModel>(j.at("weights").get<std::vector<double>>(),
                                         j.value("bias", 0.0));
  if (kind == "rule")
    return std::make_shared<RuleStepModel>(j.at("thresholds").get<std::vector<std::vector<double>>>(),
                                           j.at("levels").get<std::vector<double>>());
  if (kind == "nonlinear") return std::make_shared<NonlinearDemoModel>();
  if (kind == "mlp") {
    std::vector<SmallMlp::Layer> layers;
    for (const auto& l : j.at("layers")) {
      layers.push_back({l.at("in").get<std::size_t>(), l.at("out").get<std::size_t>(),
                        l.at("weights").get<std::vector<double>>(),
                        l.at("bias").get<std::vector<double>>()});
    }
    return std::make_shared<SmallMlp>(std::move(layers),
                                      j.at("input_offset").get<std::vector<double>>(),
                                      j.at("input_scale").get<std::vector<double>>());
  }
  if (kind == "knn") {
    const auto task = j.at("task").get<std::string>();
    return std::make_shared<KnnModel>(matrix_from_json(j.at("features")),
                                      matrix_from_json(j.at("targets")), j.at("k").get<std::size_t>(),
                                      task == "regression" ? KnnTask::regression
                                                           : KnnTask::classification);
  }
  throw CiuError("unknown model kind '" + kind + "'");
}

json saved_model_to_json(const SavedModel& saved) {
  return {{"format", "ciu-model"},
          {"version", 1},
          {"model", model_to_json(*saved.model)},
          {"inputs", saved.inputs},
          {"outputs", saved.outputs},
          {"vocabulary", saved.vocabulary}};
}

SavedModel saved_model_from_json(const json& j) {
  if (j.value("format", std::string{}) != "ciu-model")
    throw CiuError("not a ciu model file (missing format tag)");
  if (j.value("version", 0) != 1)
    throw CiuError("unsupported model file version " + j.value("version", json(0)).dump());
  SavedModel saved;
  try {
    saved.model = model_from_json(j.at("model"));
    saved.inputs = j.at("inputs").get<std::vector<InputDescriptor>>();
    saved.outputs = j.at("outputs").get<std::vector<OutputDescriptor>>();
    if (j.contains("vocabulary")) saved.vocabulary = j["vocabulary"].get<ConceptVocabulary>();
  } catch (const json::exception& e) {
    throw CiuError(std::string("malformed model file: ") + e.what());
  }
  // Validates arities and descriptor invariants.
  (void)Problem(saved.model, saved.inputs, saved.outputs);
  return saved;
}

void save_model(const std::string& path, const SavedModel& saved) {
  write_text_file(path, saved_model_to_json(saved).dump(2) + "\n");
}

SavedModel load_model(const std::string& path) { return saved_model_from_json(read_json_file(path)); }

std::vector<InputDescriptor> unit_box_inputs(std::size_t count) {
  std::vector<InputDescriptor> inputs;
  for (std::size_t i = 0; i < count; ++i) {
    InputDescriptor d;
    d.name = "x" + std::to_string(i + 1);
    d.index = i;
    inputs.push_back(d);
  }
  return inputs;
}

std::vector<OutputDescriptor> unit_outputs(std::size_t count) {
  std::vector<OutputDescriptor> outputs;
  for (std::size_t j = 0; j < count; ++j) outputs.push_back({"y" + std::to_string(j + 1), j, 0.0, 1.0});
  return outputs;
}

}  // namespace ciu
