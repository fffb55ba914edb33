#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ciu/dataset.hpp"
#include "ciu/engine.hpp"
#include "ciu/models.hpp"
#include "ciu/render.hpp"

namespace py = pybind11;
using namespace ciu;

namespace {

// Wraps a Python callable taking a list of floats and returning a list of floats.
class CallableModel final : public BlackBoxModel {
 public:
  CallableModel(py::function fn, std::size_t inputs, std::size_t outputs)
      : fn_(std::move(fn)), inputs_(inputs), outputs_(outputs) {
    if (inputs_ == 0 || outputs_ == 0) throw CiuError("model needs positive arities");
  }
  ~CallableModel() override {
    py::gil_scoped_acquire gil;
    fn_ = py::function();
  }

  std::size_t input_count() const override { return inputs_; }
  std::size_t output_count() const override { return outputs_; }
  std::vector<double> eval(std::span<const double> x) const override {
    py::gil_scoped_acquire gil;
    return fn_(std::vector<double>(x.begin(), x.end())).cast<std::vector<double>>();
  }
  bool concurrent_safe() const override { return false; }
  std::string kind() const override { return "python"; }

 private:
  py::function fn_;
  std::size_t inputs_;
  std::size_t outputs_;
};

Matrix to_matrix(const std::vector<std::vector<double>>& rows) { return Matrix::from_rows(rows); }

std::vector<std::vector<double>> to_rows(const Matrix& m) {
  std::vector<std::vector<double>> out;
  for (std::size_t r = 0; r < m.rows(); ++r) out.emplace_back(m.row(r).begin(), m.row(r).end());
  return out;
}

Target to_target(const py::handle& h) {
  if (py::isinstance<py::str>(h)) return h.cast<std::string>();
  if (py::isinstance<IndexSet>(h)) return h.cast<IndexSet>();
  if (py::isinstance<py::int_>(h)) return IndexSet{h.cast<std::size_t>()};
  return IndexSet(h.cast<std::vector<std::size_t>>());
}

ParentSpec to_parent(const std::string& parent) {
  if (parent == "abs") return AbsoluteRange{};
  if (parent == "ALL") return AllInputs{};
  return parent;
}

py::dict result_dict(const CiuResult& r) { return py::module_::import("json").attr("loads")(json(r).dump()); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Contextual importance and utility";
  py::register_exception<CiuError>(m, "CiuError", PyExc_ValueError);

  py::enum_<FeatureKind>(m, "FeatureKind")
      .value("continuous", FeatureKind::continuous)
      .value("categorical", FeatureKind::categorical)
      .value("one_hot_member", FeatureKind::one_hot_member);

  py::class_<InputDescriptor>(m, "InputDescriptor")
      .def(py::init([](std::string name, std::size_t index, double lo, double hi, FeatureKind kind,
                       std::vector<double> categories, int group_id) {
             InputDescriptor d{std::move(name), index, kind, lo, hi, std::move(categories), group_id};
             d.validate();
             return d;
           }),
           py::arg("name"), py::arg("index"), py::arg("min_value"), py::arg("max_value"),
           py::arg("kind") = FeatureKind::continuous, py::arg("categories") = std::vector<double>{},
           py::arg("group_id") = -1)
      .def_readonly("name", &InputDescriptor::name)
      .def_readonly("index", &InputDescriptor::index)
      .def_readonly("kind", &InputDescriptor::kind)
      .def_readonly("min_value", &InputDescriptor::min_value)
      .def_readonly("max_value", &InputDescriptor::max_value)
      .def_readonly("categories", &InputDescriptor::categories);

  py::class_<OutputDescriptor>(m, "OutputDescriptor")
      .def(py::init([](std::string name, std::size_t index, double absmin, double absmax) {
             OutputDescriptor d{std::move(name), index, absmin, absmax};
             d.validate();
             return d;
           }),
           py::arg("name"), py::arg("index"), py::arg("absmin"), py::arg("absmax"))
      .def_readonly("name", &OutputDescriptor::name)
      .def_readonly("index", &OutputDescriptor::index)
      .def_readonly("absmin", &OutputDescriptor::absmin)
      .def_readonly("absmax", &OutputDescriptor::absmax);

  py::class_<IndexSet>(m, "IndexSet")
      .def(py::init<std::vector<std::size_t>>())
      .def_property_readonly("indices", &IndexSet::indices)
      .def("__repr__", [](const IndexSet& s) { return "IndexSet(" + json(s.indices()).dump() + ")"; });

  py::class_<ConceptVocabulary>(m, "ConceptVocabulary")
      .def(py::init<>())
      .def(
          "add",
          [](ConceptVocabulary& v, std::string name, std::vector<std::size_t> indices, std::optional<std::string> parent,
             std::vector<std::string> synonyms) {
            v.add(std::move(name), IndexSet(std::move(indices)), std::move(parent), std::move(synonyms));
          },
          py::arg("name"), py::arg("indices"), py::arg("parent") = std::nullopt,
          py::arg("synonyms") = std::vector<std::string>{})
      .def("validate", &ConceptVocabulary::validate)
      .def("__contains__", &ConceptVocabulary::contains)
      .def("__len__", [](const ConceptVocabulary& v) { return v.concepts().size(); });

  py::class_<CiuResult>(m, "CiuResult")
      .def_readonly("target", &CiuResult::target)
      .def_property_readonly("indices", [](const CiuResult& r) { return r.indices.indices(); })
      .def_readonly("output_index", &CiuResult::output_index)
      .def_readonly("output_name", &CiuResult::output_name)
      .def_readonly("ci", &CiuResult::ci)
      .def_readonly("cu", &CiuResult::cu)
      .def_readonly("cmin", &CiuResult::cmin)
      .def_readonly("cmax", &CiuResult::cmax)
      .def_readonly("y", &CiuResult::y_context)
      .def_readonly("n", &CiuResult::n)
      .def_readonly("seed", &CiuResult::seed)
      .def_readonly("degenerate_range", &CiuResult::degenerate_range)
      .def_readonly("overshoot", &CiuResult::overshoot)
      .def("to_dict", &result_dict)
      .def("__repr__", [](const CiuResult& r) {
        return "CiuResult(target='" + r.target + "', ci=" + std::to_string(r.ci) + ", cu=" + std::to_string(r.cu) + ")";
      });

  py::class_<BlackBoxModel, std::shared_ptr<BlackBoxModel>>(m, "BlackBoxModel")
      .def_property_readonly("input_count", &BlackBoxModel::input_count)
      .def_property_readonly("output_count", &BlackBoxModel::output_count)
      .def_property_readonly("kind", &BlackBoxModel::kind)
      .def("eval", [](const BlackBoxModel& model, const std::vector<double>& x) { return model.eval(x); })
      .def("eval_batch", [](const BlackBoxModel& model, const std::vector<std::vector<double>>& rows) {
        return to_rows(model.eval_batch(to_matrix(rows)));
      });

  py::class_<CallableModel, BlackBoxModel, std::shared_ptr<CallableModel>>(m, "CallableModel")
      .def(py::init<py::function, std::size_t, std::size_t>(), py::arg("fn"), py::arg("inputs"), py::arg("outputs"));
  py::class_<LinearModel, BlackBoxModel, std::shared_ptr<LinearModel>>(m, "LinearModel")
      .def(py::init<std::vector<double>, double>(), py::arg("weights"), py::arg("bias") = 0.0);
  py::class_<RuleStepModel, BlackBoxModel, std::shared_ptr<RuleStepModel>>(m, "RuleStepModel")
      .def(py::init<std::vector<std::vector<double>>, std::vector<double>>(), py::arg("thresholds"), py::arg("levels"));
  py::class_<NonlinearDemoModel, BlackBoxModel, std::shared_ptr<NonlinearDemoModel>>(m, "NonlinearDemoModel")
      .def(py::init<>());
  py::class_<SmallMlp, BlackBoxModel, std::shared_ptr<SmallMlp>>(m, "SmallMlp")
      .def_static("random", &SmallMlp::random, py::arg("layer_sizes"), py::arg("seed"));
  py::enum_<KnnTask>(m, "KnnTask").value("regression", KnnTask::regression).value("classification", KnnTask::classification);
  py::class_<KnnModel, BlackBoxModel, std::shared_ptr<KnnModel>>(m, "KnnModel")
      .def(py::init([](const std::vector<std::vector<double>>& x, const std::vector<std::vector<double>>& y,
                       std::size_t k, KnnTask task) { return KnnModel(to_matrix(x), to_matrix(y), k, task); }),
           py::arg("features"), py::arg("targets"), py::arg("k"), py::arg("task") = KnnTask::regression);

  m.def(
      "train_mlp",
      [](const std::vector<std::vector<double>>& x, const std::vector<std::vector<double>>& y,
         std::vector<std::size_t> hidden, std::size_t epochs, double learning_rate, std::uint64_t seed) {
        MlpTrainingOptions opt;
        opt.hidden = std::move(hidden);
        opt.epochs = epochs;
        opt.learning_rate = learning_rate;
        opt.seed = seed;
        MlpTrainingReport report;
        auto net = std::make_shared<SmallMlp>(train_mlp({to_matrix(x), to_matrix(y)}, opt, &report));
        py::dict info;
        info["final_mse"] = report.final_mse;
        info["accuracy"] = report.accuracy;
        info["epochs"] = report.epochs;
        return py::make_tuple(net, info);
      },
      py::arg("features"), py::arg("targets"), py::arg("hidden") = std::vector<std::size_t>{8},
      py::arg("epochs") = 2000, py::arg("learning_rate") = 0.1, py::arg("seed") = 1);

  m.def("unit_box_inputs", &unit_box_inputs);
  m.def("unit_outputs", &unit_outputs);

  py::class_<Problem>(m, "Problem")
      .def(py::init<ModelPtr, std::vector<InputDescriptor>, std::vector<OutputDescriptor>>(), py::arg("model"),
           py::arg("inputs"), py::arg("outputs"))
      .def_property_readonly("inputs", &Problem::inputs)
      .def_property_readonly("outputs", &Problem::outputs)
      .def("check_context", [](const Problem& p, std::vector<double> c) { return p.check_context(Context{std::move(c)}); });

  m.def(
      "explain",
      [](const Problem& problem, std::vector<double> context, py::list targets, std::size_t output_index,
         const std::string& parent, std::size_t n, std::uint64_t seed, bool include_extremes,
         std::optional<double> filter_distance, std::optional<std::vector<std::vector<double>>> training_data,
         const ConceptVocabulary& vocabulary) {
        ExplanationRequest req;
        req.context = Context{std::move(context)};
        for (const auto& t : targets) req.targets.push_back(to_target(t));
        req.output_index = output_index;
        req.parent = to_parent(parent);
        req.sampling.n = n;
        req.sampling.seed = seed;
        req.sampling.include_extremes = include_extremes;
        req.sampling.filter_distance = filter_distance;
        if (training_data) req.training_data = to_matrix(*training_data);
        return explain(problem, req, vocabulary);
      },
      py::arg("problem"), py::arg("context"), py::arg("targets"), py::arg("output_index") = 0,
      py::arg("parent") = "abs", py::arg("n") = 1000, py::arg("seed") = 42, py::arg("include_extremes") = true,
      py::arg("filter_distance") = std::nullopt, py::arg("training_data") = std::nullopt,
      py::arg("vocabulary") = ConceptVocabulary{});

  m.def(
      "explain_concept_decomposition",
      [](const Problem& problem, const std::string& concept_name, std::vector<double> context, std::size_t output_index,
         std::size_t n, std::uint64_t seed, const ConceptVocabulary& vocabulary) {
        SamplingConfig cfg;
        cfg.n = n;
        cfg.seed = seed;
        return explain_concept_decomposition(problem, concept_name, Context{std::move(context)}, output_index, cfg,
                                             vocabulary);
      },
      py::arg("problem"), py::arg("concept_name"), py::arg("context"), py::arg("output_index") = 0,
      py::arg("n") = 1000, py::arg("seed") = 42, py::arg("vocabulary") = ConceptVocabulary{});

  m.def(
      "contextual_importance",
      [](double cmin, double cmax, double absmin, double absmax) {
        OutputRangeEstimate r;
        r.cmin = cmin;
        r.cmax = cmax;
        return contextual_importance(r, OutputDescriptor{"y", 0, absmin, absmax});
      },
      py::arg("cmin"), py::arg("cmax"), py::arg("absmin"), py::arg("absmax"));
  m.def(
      "contextual_utility",
      [](double y, double cmin, double cmax) {
        OutputRangeEstimate r;
        r.cmin = cmin;
        r.cmax = cmax;
        r.contains_context = cmin <= y && y <= cmax;
        return contextual_utility(y, r);
      },
      py::arg("y"), py::arg("cmin"), py::arg("cmax"));

  m.def(
      "input_output_curve",
      [](const Problem& problem, std::vector<double> context, std::size_t input_index, std::size_t output_index,
         std::size_t resolution) {
        const auto c = input_output_curve(problem, Context{std::move(context)}, input_index, output_index, resolution);
        std::vector<std::pair<double, double>> pts;
        for (const auto& p : c.points) pts.emplace_back(p.x, p.y);
        return py::make_tuple(pts, std::make_pair(c.context_point.x, c.context_point.y));
      },
      py::arg("problem"), py::arg("context"), py::arg("input_index"), py::arg("output_index") = 0,
      py::arg("resolution") = 101);

  m.def(
      "cu_color",
      [](double cu, double cu_neutral) {
        ColorSpec spec;
        spec.cu_neutral = cu_neutral;
        const auto c = cu_color(cu, spec);
        return py::make_tuple(c.r, c.g, c.b);
      },
      py::arg("cu"), py::arg("cu_neutral") = 0.5);

  m.def(
      "render_barplot",
      [](const std::vector<CiuResult>& results, const std::string& title, double cu_neutral, bool sort_by_ci) {
        ColorSpec spec;
        spec.cu_neutral = cu_neutral;
        return render_barplot(results, spec, sort_by_ci ? BarOrder::by_ci : BarOrder::input_order, title);
      },
      py::arg("results"), py::arg("title") = "", py::arg("cu_neutral") = 0.5, py::arg("sort_by_ci") = true);

  m.def(
      "textual_explanation",
      [](const std::vector<CiuResult>& results, std::size_t top_k, const ConceptVocabulary& vocabulary) {
        return textual_explanation(results, vocabulary, WordTable::defaults(), top_k == 0 ? results.size() : top_k);
      },
      py::arg("results"), py::arg("top_k") = 0, py::arg("vocabulary") = ConceptVocabulary{});

  m.def("results_to_json", [](const std::vector<CiuResult>& r) { return results_document(r).dump(2); });
  m.def("results_from_json", [](const std::string& text) { return results_from_structured(json::parse(text)); });

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("feature_names", &Dataset::feature_names)
      .def_readonly("target_names", &Dataset::target_names)
      .def_readonly("classification", &Dataset::classification)
      .def_property_readonly("features", [](const Dataset& d) { return to_rows(d.features); })
      .def_property_readonly("targets", [](const Dataset& d) { return to_rows(d.targets); })
      .def("input_descriptors", &Dataset::input_descriptors)
      .def("output_descriptors", &Dataset::output_descriptors)
      .def("__len__", &Dataset::rows);

  m.def(
      "load_csv",
      [](const std::string& path, std::vector<std::string> targets, std::vector<std::string> categorical) {
        return load_csv(path, targets, categorical);
      },
      py::arg("path"), py::arg("targets"), py::arg("categorical") = std::vector<std::string>{});
}
