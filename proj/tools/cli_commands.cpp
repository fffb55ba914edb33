#include "cli_commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>

#include "ciu/dataset.hpp"
#include "ciu/engine.hpp"
#include "ciu/external.hpp"
#include "ciu/json_io.hpp"
#include "ciu/models.hpp"
#include "ciu/render.hpp"

namespace ciu::cli {

namespace {

struct Session {
  std::optional<Dataset> dataset;
  std::unique_ptr<Problem> problem;
  ConceptVocabulary vocabulary;
};

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : text) {
    if (ch == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  parts.push_back(cur);
  return parts;
}

std::optional<std::size_t> parse_index(const std::string& text) {
  if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos) return std::nullopt;
  return static_cast<std::size_t>(std::stoull(text));
}

double parse_number(const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw CiuError("not a number: '" + text + "'");
  return v;
}

std::string fmt(double v, const char* spec = "%.3f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

Dataset load_dataset(const DataOptions& opt) {
  auto targets = opt.targets;
  if (targets.empty()) {
    std::ifstream in(opt.path);
    if (!in) throw CiuError("cannot open '" + opt.path + "'");
    std::string header;
    std::getline(in, header);
    std::istringstream line(header);
    const auto records = read_csv_records(line);
    if (records.empty() || records[0].empty()) throw CiuError("CSV has no header row");
    targets = {records[0].back()};
  }
  return load_csv(opt.path, targets, opt.categorical);
}

ModelPtr build_model(const ModelOptions& opt, const Dataset& ds) {
  const auto data = ds.training_set();
  if (opt.kind == "mlp") {
    MlpTrainingOptions t;
    t.hidden = opt.hidden;
    t.epochs = opt.epochs;
    t.learning_rate = opt.learning_rate;
    t.seed = opt.train_seed;
    MlpTrainingReport report;
    auto net = std::make_shared<SmallMlp>(train_mlp(data, t, &report));
    std::cerr << "trained mlp: mse=" << fmt(report.final_mse, "%.6f");
    if (ds.classification) std::cerr << " accuracy=" << fmt(report.accuracy);
    std::cerr << "\n";
    return net;
  }
  if (opt.kind == "knn")
    return std::make_shared<KnnModel>(data.features, data.targets, opt.k,
                                      ds.classification ? KnnTask::classification : KnnTask::regression);
  throw CiuError("unknown model kind '" + opt.kind + "' for --data");
}

ModelPtr demo_model(const std::string& kind) {
  if (kind == "linear-demo") return std::make_shared<LinearModel>(std::vector<double>{0.3, 0.7});
  if (kind == "rule-demo")
    return std::make_shared<RuleStepModel>(std::vector<std::vector<double>>{{0.5}, {0.5}},
                                           std::vector<double>{0.0, 0.7, 0.3, 1.0});
  if (kind == "nonlinear-demo") return std::make_shared<NonlinearDemoModel>();
  return nullptr;
}

Session open_session(const DataOptions& data, const ModelOptions& model, const std::string& vocab_path) {
  const int sources = int(!model.kind.empty()) + int(!model.load.empty()) + int(!model.external_cmd.empty());
  if (sources != 1) throw CiuError("give exactly one of --model, --load and --external-cmd");
  Session s;
  if (!data.path.empty()) s.dataset = load_dataset(data);

  if (!model.load.empty()) {
    auto saved = load_model(model.load);
    s.vocabulary = saved.vocabulary;
    s.problem = std::make_unique<Problem>(saved.model, saved.inputs, saved.outputs);
    if (s.dataset && s.dataset->features.cols() != s.problem->input_count())
      throw CiuError("--data has " + std::to_string(s.dataset->features.cols()) + " features, model takes " +
                     std::to_string(s.problem->input_count()));
  } else if (!model.external_cmd.empty()) {
    ExternalCommand cmd{model.external_cmd, std::chrono::milliseconds(model.timeout_ms)};
    if (s.dataset) {
      s.problem = std::make_unique<Problem>(
          std::make_shared<ExternalModel>(cmd, s.dataset->features.cols(), s.dataset->targets.cols()),
          s.dataset->input_descriptors(), s.dataset->output_descriptors());
    } else {
      if (model.inputs == 0) throw CiuError("--external-cmd without --data needs --inputs");
      s.problem = std::make_unique<Problem>(std::make_shared<ExternalModel>(cmd, model.inputs, model.outputs),
                                            unit_box_inputs(model.inputs), unit_outputs(model.outputs));
    }
  } else if (auto demo = demo_model(model.kind)) {
    if (s.dataset) throw CiuError("--model " + model.kind + " does not take --data");
    s.problem = std::make_unique<Problem>(demo, unit_box_inputs(demo->input_count()),
                                          unit_outputs(demo->output_count()));
  } else {
    if (!s.dataset) throw CiuError("--model " + model.kind + " needs --data");
    s.problem = std::make_unique<Problem>(build_model(model, *s.dataset), s.dataset->input_descriptors(),
                                          s.dataset->output_descriptors());
  }

  if (!vocab_path.empty()) {
    s.vocabulary = vocabulary_from_config(read_json_file(vocab_path), s.problem->inputs());
  }
  s.vocabulary.validate(s.problem->input_count());
  return s;
}

Context read_instance(const InstanceOptions& opt, const Session& s) {
  if (opt.instance.empty() == !opt.row.has_value()) throw CiuError("give exactly one of --instance and --row");
  Context c;
  if (opt.row) {
    if (!s.dataset) throw CiuError("--row needs --data");
    if (*opt.row < 1 || *opt.row > s.dataset->rows())
      throw CiuError("--row " + std::to_string(*opt.row) + " outside 1.." + std::to_string(s.dataset->rows()));
    const auto row = s.dataset->features.row(*opt.row - 1);
    c.values.assign(row.begin(), row.end());
  } else {
    for (const auto& part : split(opt.instance, ',')) c.values.push_back(parse_number(part));
  }
  if (c.size() != s.problem->input_count())
    throw CiuError("instance has " + std::to_string(c.size()) + " values, model takes " +
                   std::to_string(s.problem->input_count()));
  for (const auto& w : s.problem->check_context(c)) std::cerr << "warning: " << w << "\n";
  return c;
}

std::size_t resolve_input(const std::string& token, const Problem& problem) {
  if (auto idx = problem.find_input(token)) return *idx;
  if (auto idx = parse_index(token); idx && *idx < problem.input_count()) return *idx;
  throw CiuError("unknown input '" + token + "'");
}

std::vector<std::size_t> resolve_outputs(const std::string& token, const Problem& problem) {
  if (token == "ALL") {
    std::vector<std::size_t> all(problem.output_count());
    for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;
    return all;
  }
  if (auto idx = problem.find_output(token)) return {*idx};
  if (auto idx = parse_index(token); idx && *idx < problem.output_count()) return {*idx};
  throw CiuError("unknown output '" + token + "'");
}

std::string file_stem(const std::string& name) {
  std::string out;
  for (char ch : name) out += std::isalnum(static_cast<unsigned char>(ch)) ? ch : '_';
  return out;
}

std::filesystem::path prepare_out_dir(const std::string& dir) {
  std::filesystem::path p(dir);
  std::filesystem::create_directories(p);
  return p;
}

bool wants(const std::vector<std::string>& formats, const std::string& name) {
  for (const auto& f : formats) {
    if (f == name) return true;
  }
  return false;
}

void check_formats(const std::vector<std::string>& formats) {
  for (const auto& f : formats) {
    if (f != "text" && f != "json" && f != "svg") throw CiuError("unknown format '" + f + "'");
  }
}

}  // namespace

int run_explain(const ExplainOptions& opt) {
  check_formats(opt.formats);
  auto session = open_session(opt.data, opt.model, opt.vocab);
  const Problem& problem = *session.problem;
  const Context context = read_instance(opt.instance, session);

  SamplingConfig sampling;
  sampling.n = opt.n;
  sampling.seed = opt.seed;
  sampling.include_extremes = !opt.no_extremes;
  sampling.filter_distance = opt.filter_distance;

  RenderConfig render;
  if (!opt.render_config.empty()) render = render_config_from_json(read_json_file(opt.render_config));
  if (opt.cu_neutral) render.colors.cu_neutral = *opt.cu_neutral;
  render.colors.validate();

  std::vector<Target> targets;
  for (const auto& t : opt.targets) {
    std::vector<std::size_t> idx;
    for (const auto& name : split(t, '+')) idx.push_back(resolve_input(name, problem));
    targets.emplace_back(IndexSet(idx));
  }
  for (const auto& c : opt.concepts) targets.emplace_back(c);
  if (targets.empty() && opt.decompose.empty()) {
    for (std::size_t i = 0; i < problem.input_count(); ++i) targets.emplace_back(IndexSet{i});
  }

  ParentSpec parent = AbsoluteRange{};
  if (opt.parent == "ALL") {
    parent = AllInputs{};
  } else if (opt.parent != "abs") {
    parent = opt.parent;
  }

  std::vector<std::size_t> outputs = resolve_outputs(opt.output, problem);
  std::vector<CiuResult> all;
  std::map<std::size_t, std::vector<CiuResult>> by_output;
  for (std::size_t j : outputs) {
    std::vector<CiuResult> results;
    if (!opt.decompose.empty()) {
      if (!targets.empty() || opt.parent != "abs")
        throw CiuError("--decompose does not combine with --targets, --concepts or --parent");
      results = explain_concept_decomposition(problem, opt.decompose, context, j, sampling, session.vocabulary);
    } else {
      ExplanationRequest req;
      req.context = context;
      req.targets = targets;
      req.output_index = j;
      req.parent = parent;
      req.sampling = sampling;
      if (sampling.filter_distance) {
        if (!session.dataset) throw CiuError("--filter-distance needs --data");
        req.training_data = session.dataset->features;
      }
      results = explain(problem, req, session.vocabulary);
    }
    all.insert(all.end(), results.begin(), results.end());
    by_output[j] = std::move(results);
  }

  std::cout << "seed=" << opt.seed << " N=" << opt.n << "\n";
  if (wants(opt.formats, "text")) {
    for (const auto& [j, results] : by_output) {
      const auto& out = problem.outputs()[j];
      std::cout << "\noutput " << out.name << " y=" << fmt(results.front().y_context, "%.4f") << "\n";
      for (const auto& r : results) {
        std::cout << "  " << session.vocabulary.display_name(r.target) << "  CI=" << fmt(r.ci) << " CU="
                  << fmt(r.cu) << "  range=[" << fmt(r.cmin, "%.4f") << ", " << fmt(r.cmax, "%.4f") << "]";
        if (r.degenerate_range) std::cout << " (flat)";
        if (r.overshoot) std::cout << " (CI>1)";
        std::cout << "\n";
      }
      std::cout << textual_explanation(results, session.vocabulary, render.words,
                                       opt.top_k == 0 ? results.size() : opt.top_k)
                << "\n";
    }
  }
  if (wants(opt.formats, "json") || wants(opt.formats, "svg")) {
    const auto dir = prepare_out_dir(opt.out_dir);
    if (wants(opt.formats, "json")) {
      const auto path = dir / "ciu_results.json";
      write_text_file(path.string(), results_document(all).dump(2) + "\n");
      std::cerr << "wrote " << path.string() << "\n";
    }
    if (wants(opt.formats, "svg")) {
      for (const auto& [j, results] : by_output) {
        const auto& name = problem.outputs()[j].name;
        const auto path = dir / ("ciu_" + file_stem(name) + ".svg");
        const auto spec = make_barplot(results, render.colors, BarOrder::by_ci, "CIU for " + name, &session.vocabulary);
        write_text_file(path.string(), render_barplot_svg(spec));
        std::cerr << "wrote " << path.string() << "\n";
      }
    }
  }
  return 0;
}

int run_curve(const CurveOptions& opt) {
  check_formats(opt.formats);
  auto session = open_session(opt.data, opt.model, {});
  const Problem& problem = *session.problem;
  const Context context = read_instance(opt.instance, session);
  if (opt.input.empty()) throw CiuError("curve needs --input");
  const std::size_t i = resolve_input(opt.input, problem);
  const auto outs = resolve_outputs(opt.output, problem);
  if (outs.size() != 1) throw CiuError("curve takes a single --output");
  const std::size_t j = outs.front();
  const auto curve = input_output_curve(problem, context, i, j, opt.resolution);
  const auto& in_name = problem.inputs()[i].name;
  const auto& out_name = problem.outputs()[j].name;

  if (wants(opt.formats, "text")) {
    std::cout << in_name << "," << out_name << "\n";
    for (const auto& p : curve.points) std::cout << fmt(p.x, "%.6g") << "," << fmt(p.y, "%.6g") << "\n";
  }
  if (wants(opt.formats, "json") || wants(opt.formats, "svg")) {
    const auto dir = prepare_out_dir(opt.out_dir);
    const auto stem = "curve_" + file_stem(in_name) + "_" + file_stem(out_name);
    if (wants(opt.formats, "json")) {
      json doc{{"input", in_name},
               {"output", out_name},
               {"context", {{"x", curve.context_point.x}, {"y", curve.context_point.y}}},
               {"points", json::array()}};
      for (const auto& p : curve.points) doc["points"].push_back({p.x, p.y});
      write_text_file((dir / (stem + ".json")).string(), doc.dump(2) + "\n");
    }
    if (wants(opt.formats, "svg")) {
      write_text_file((dir / (stem + ".svg")).string(), render_curve(curve, in_name, out_name));
    }
  }
  return 0;
}

int run_train(const TrainOptions& opt) {
  if (opt.data.path.empty()) throw CiuError("train needs --data");
  if (opt.save.empty()) throw CiuError("train needs --save");
  if (!opt.model.load.empty() || !opt.model.external_cmd.empty())
    throw CiuError("train takes --model mlp or --model knn");
  if (opt.model.kind != "mlp" && opt.model.kind != "knn") throw CiuError("train takes --model mlp or --model knn");
  auto session = open_session(opt.data, opt.model, opt.vocab);
  const Problem& problem = *session.problem;
  const auto data = session.dataset->training_set();
  if (session.dataset->classification)
    std::cout << "training accuracy=" << fmt(classification_accuracy(problem.model(), data)) << "\n";
  save_model(opt.save, SavedModel{problem.model_ptr(), problem.inputs(), problem.outputs(), session.vocabulary});
  std::cout << "saved " << opt.model.kind << " model to " << opt.save << "\n";
  return 0;
}

int run_vocab_validate(const VocabOptions& opt) {
  const json config = read_json_file(opt.file);
  std::vector<InputDescriptor> inputs;
  if (!opt.load.empty()) {
    inputs = load_model(opt.load).inputs;
  } else if (!opt.data.path.empty()) {
    inputs = load_dataset(opt.data).input_descriptors();
  } else if (config.contains("inputs")) {
    for (const auto& name : config.at("inputs")) {
      InputDescriptor d;
      d.name = name.get<std::string>();
      d.index = inputs.size();
      inputs.push_back(d);
    }
  } else {
    throw CiuError("vocabulary has no \"inputs\" list; give --data or --load");
  }
  const auto vocab = vocabulary_from_config(config, inputs);
  vocab.validate(inputs.size());

  std::cout << "OK: " << vocab.concepts().size() << " concepts\n";
  auto print = [&](auto&& self, const ConceptVocabulary::Concept& c, int depth) -> void {
    std::cout << std::string(2 * depth + 2, ' ') << c.name << " {";
    bool first = true;
    for (std::size_t i : c.indices.indices()) {
      std::cout << (first ? "" : ", ") << inputs[i].name;
      first = false;
    }
    std::cout << "}";
    if (!c.synonyms.empty()) std::cout << " aka " << c.synonyms.front();
    std::cout << "\n";
    for (const auto* child : vocab.children_of(c.name)) self(self, *child, depth + 1);
  };
  for (const auto* c : vocab.top_level()) print(print, *c, 0);
  return 0;
}

}  // namespace ciu::cli
