#include "hm3/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>

#include "hm3/checkpoint_io.hpp"
#include "hm3/errors.hpp"
#include "hm3/runtime.hpp"
#include "hm3/threading.hpp"

namespace hm3 {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start)
      .count();
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string safe_filename(std::string s) {
  for (char& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '-')
      c = '_';
  return s;
}

// Pure counting pass over precomputed predictions; order-independent.
SegmentResult score_segment(const std::string& dataset_name,
                            const Segment& seg,
                            const std::vector<std::size_t>& expected,
                            const std::vector<std::size_t>& predicted,
                            const std::vector<std::vector<double>>& probs,
                            bool exclude_zero_support) {
  const std::size_t c = seg.width();
  SegmentResult r;
  r.dataset = dataset_name;
  r.segment = seg.model_id;
  r.labels = seg.labels;
  r.confusion.assign(c, std::vector<std::int64_t>(c, 0));
  r.samples = expected.size();

  for (std::size_t i = 0; i < expected.size(); ++i)
    ++r.confusion[expected[i]][predicted[i]];

  std::int64_t correct = 0;
  for (std::size_t k = 0; k < c; ++k) correct += r.confusion[k][k];
  r.accuracy = r.samples
                   ? static_cast<double>(correct) / static_cast<double>(r.samples)
                   : 0.0;

  r.per_class_f1.assign(c, 0.0);
  double f1_sum = 0.0;
  std::size_t f1_count = 0;
  for (std::size_t k = 0; k < c; ++k) {
    std::int64_t tp = r.confusion[k][k];
    std::int64_t support = 0, predicted_k = 0;
    for (std::size_t j = 0; j < c; ++j) {
      support += r.confusion[k][j];
      predicted_k += r.confusion[j][k];
    }
    const std::int64_t fp = predicted_k - tp;
    const std::int64_t fn = support - tp;
    const std::int64_t denom = 2 * tp + fp + fn;
    r.per_class_f1[k] =
        denom ? 2.0 * static_cast<double>(tp) / static_cast<double>(denom) : 0.0;
    if (support == 0) r.zero_support_classes.push_back(seg.labels[k]);
    if (!(exclude_zero_support && support == 0)) {
      f1_sum += r.per_class_f1[k];
      ++f1_count;
    }
  }
  r.macro_f1 = f1_count ? f1_sum / static_cast<double>(f1_count) : 0.0;

  if (!probs.empty()) {
    std::vector<double> mean(c, 0.0);
    for (const std::vector<double>& p : probs)
      for (std::size_t k = 0; k < c; ++k) mean[k] += p[k];
    for (double& m : mean) m /= static_cast<double>(probs.size());
    r.mean_probabilities = std::move(mean);
  }
  return r;
}

std::size_t label_index(const Segment& seg, const std::string& label,
                        const std::string& context) {
  for (std::size_t k = 0; k < seg.labels.size(); ++k)
    if (seg.labels[k] == label) return k;
  throw ValidationError(context + ": label '" + label +
                        "' not in segment '" + seg.model_id + "'");
}

} // namespace

void EvalReport::recompute_mean() {
  double sum = 0.0;
  for (const SegmentResult& r : results) sum += r.macro_f1;
  mean_macro_f1 = results.empty() ? 0.0 : sum / static_cast<double>(results.size());
}

void EvalReport::validate() const {
  for (const SegmentResult& r : results) {
    const std::size_t c = r.labels.size();
    if (c == 0)
      throw ValidationError("eval report result has no labels");
    if (r.confusion.size() != c)
      throw ValidationError("confusion matrix is not square for dataset '" +
                            r.dataset + "'");
    std::int64_t total = 0;
    for (const auto& row : r.confusion) {
      if (row.size() != c)
        throw ValidationError("confusion matrix is not square for dataset '" +
                              r.dataset + "'");
      for (std::int64_t v : row) {
        if (v < 0)
          throw ValidationError("negative confusion count for dataset '" +
                                r.dataset + "'");
        total += v;
      }
    }
    if (total != static_cast<std::int64_t>(r.samples))
      throw ValidationError("confusion entries sum to " + std::to_string(total) +
                            " but sample count is " + std::to_string(r.samples) +
                            " for dataset '" + r.dataset + "'");
    if (r.accuracy < 0.0 || r.accuracy > 1.0 + 1e-12)
      throw ValidationError("accuracy out of [0,1] for dataset '" + r.dataset +
                            "'");
    if (r.per_class_f1.size() != c)
      throw ValidationError("per_class_f1 size mismatch for dataset '" +
                            r.dataset + "'");
    for (double f : r.per_class_f1)
      if (f < 0.0 || f > 1.0 + 1e-12)
        throw ValidationError("per-class F1 out of [0,1] for dataset '" +
                              r.dataset + "'");
    if (r.mean_probabilities) {
      if (r.mean_probabilities->size() != c)
        throw ValidationError("mean_probabilities size mismatch for dataset '" +
                              r.dataset + "'");
      double sum = 0.0;
      for (double p : *r.mean_probabilities) {
        if (p < -1e-12)
          throw ValidationError("negative probability in report for dataset '" +
                                r.dataset + "'");
        sum += p;
      }
      if (std::fabs(sum - 1.0) > 1e-4)
        throw ValidationError("probabilities do not sum to 1 for dataset '" +
                              r.dataset + "' (got " + fmt_double(sum) + ")");
    }
  }
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json results_json = nlohmann::json::array();
  for (const SegmentResult& r : results) {
    nlohmann::json jr{{"dataset", r.dataset},
                      {"segment", r.segment},
                      {"labels", r.labels},
                      {"confusion", r.confusion},
                      {"accuracy", r.accuracy},
                      {"per_class_f1", r.per_class_f1},
                      {"zero_support_classes", r.zero_support_classes},
                      {"macro_f1", r.macro_f1},
                      {"samples", r.samples}};
    if (r.mean_probabilities) jr["mean_probabilities"] = *r.mean_probabilities;
    results_json.push_back(std::move(jr));
  }
  return nlohmann::json{{"results", std::move(results_json)},
                        {"timings",
                         {{"load_ms", timings.load_ms},
                          {"inference_ms", timings.inference_ms}}},
                        {"mean_macro_f1", mean_macro_f1}};
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  EvalReport report;
  try {
    for (const auto& jr : j.at("results")) {
      SegmentResult r;
      r.dataset = jr.at("dataset").get<std::string>();
      r.segment = jr.at("segment").get<std::string>();
      r.labels = jr.at("labels").get<std::vector<std::string>>();
      r.confusion =
          jr.at("confusion").get<std::vector<std::vector<std::int64_t>>>();
      r.accuracy = jr.at("accuracy").get<double>();
      r.per_class_f1 = jr.at("per_class_f1").get<std::vector<double>>();
      if (jr.contains("zero_support_classes"))
        r.zero_support_classes =
            jr.at("zero_support_classes").get<std::vector<std::string>>();
      r.macro_f1 = jr.at("macro_f1").get<double>();
      r.samples = jr.at("samples").get<std::size_t>();
      if (jr.contains("mean_probabilities"))
        r.mean_probabilities =
            jr.at("mean_probabilities").get<std::vector<double>>();
      report.results.push_back(std::move(r));
    }
    if (j.contains("timings")) {
      report.timings.load_ms = j.at("timings").value("load_ms", 0.0);
      report.timings.inference_ms = j.at("timings").value("inference_ms", 0.0);
    }
    report.recompute_mean();
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(std::string("malformed eval report: ") + ex.what());
  }
  report.validate();
  return report;
}

std::vector<CrossCheck> load_cross_check_plan(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("cannot open plan file '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError("malformed plan file '" + path.string() + "': " +
                      ex.what());
  }
  if (!j.is_array())
    throw FormatError("plan file must be a JSON array");
  std::vector<CrossCheck> plan;
  for (const auto& e : j) {
    try {
      plan.push_back(CrossCheck{e.at("dataset").get<std::string>(),
                                e.at("segment").get<std::string>(),
                                e.at("expected_label").get<std::string>()});
    } catch (const nlohmann::json::exception& ex) {
      throw FormatError(std::string("malformed plan entry: ") + ex.what());
    }
  }
  return plan;
}

void validate_plan(const std::vector<CrossCheck>& plan,
                   const SegmentLayout& layout,
                   const std::vector<LabeledDataset>& datasets) {
  for (const CrossCheck& cc : plan) {
    const Segment& seg = layout.segment(cc.segment);
    label_index(seg, cc.expected_label, "cross-check plan");
    const bool known = std::any_of(
        datasets.begin(), datasets.end(),
        [&](const LabeledDataset& ds) { return ds.name == cc.dataset; });
    if (!known)
      throw ValidationError("cross-check plan references unknown dataset '" +
                            cc.dataset + "'");
  }
}

std::vector<LabeledDataset> derive_cross_datasets(
    const std::vector<LabeledDataset>& datasets,
    const std::vector<CrossCheck>& plan) {
  std::vector<LabeledDataset> out = datasets;
  for (const CrossCheck& cc : plan) {
    const LabeledDataset* src = nullptr;
    for (const LabeledDataset& ds : datasets)
      if (ds.name == cc.dataset) src = &ds;
    if (!src)
      throw ValidationError("cross-check plan references unknown dataset '" +
                            cc.dataset + "'");
    LabeledDataset derived;
    derived.name = cc.dataset + "__on__" + cc.segment;
    derived.examples.reserve(src->examples.size());
    for (const Example& ex : src->examples)
      derived.examples.push_back(Example{ex.text, cc.expected_label});
    out.push_back(std::move(derived));
  }
  return out;
}

EvalReport evaluate(const Checkpoint& cp, const SegmentLayout& layout,
                    const std::vector<LabeledDataset>& datasets,
                    const std::vector<CrossCheck>& plan,
                    const EvalOptions& options) {
  layout.validate();
  validate_plan(plan, layout, datasets);

  EvalReport report;
  const auto t0 = Clock::now();

  // (dataset, segment, fixed expected label or per-example labels)
  struct Pair {
    const LabeledDataset* ds;
    const Segment* seg;
    std::optional<std::string> fixed_label;
  };
  std::vector<Pair> pairs;
  for (const LabeledDataset& ds : datasets) {
    const Segment& seg = layout.segment(resolve_home_segment(ds, layout));
    pairs.push_back(Pair{&ds, &seg, std::nullopt});
  }
  for (const CrossCheck& cc : plan) {
    auto it = std::find_if(
        datasets.begin(), datasets.end(),
        [&](const LabeledDataset& ds) { return ds.name == cc.dataset; });
    pairs.push_back(Pair{&*it, &layout.segment(cc.segment), cc.expected_label});
  }

  for (const Pair& pair : pairs) {
    const LabeledDataset subset =
        sample_dataset(*pair.ds, options.sample_cap, options.seed);
    const Segment& seg = *pair.seg;
    const std::size_t n = subset.examples.size();

    std::vector<std::size_t> expected(n), predicted(n);
    std::vector<std::vector<double>> probs(n);
    std::string error_context;
    std::mutex error_mutex;

    parallel_for(n, options.threads, [&](std::size_t i) {
      try {
        const Example& ex = subset.examples[i];
        const std::string& want =
            pair.fixed_label ? *pair.fixed_label : ex.expected_label;
        expected[i] = label_index(seg, want, "dataset '" + subset.name + "'");
        const auto toks = tokenize(ex.text, cp.arch.vocab_size);
        const auto logits = forward(cp, toks);
        const auto dist = softmax_star(logits, layout);
        std::size_t seg_index = 0;
        for (std::size_t s = 0; s < layout.segments.size(); ++s)
          if (&layout.segments[s] == &seg) seg_index = s;
        const std::vector<double>& p = dist.per_segment[seg_index];
        std::size_t best = 0;
        for (std::size_t k = 1; k < p.size(); ++k)
          if (p[k] > p[best]) best = k;
        predicted[i] = best;
        probs[i] = p;
      } catch (const std::exception& ex) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (error_context.empty())
          error_context = "dataset '" + subset.name + "' example " +
                          std::to_string(i) + " on segment '" + seg.model_id +
                          "': " + ex.what();
      }
    });
    if (!error_context.empty()) throw ValidationError(error_context);

    report.results.push_back(score_segment(subset.name, seg, expected,
                                           predicted, probs,
                                           options.exclude_zero_support));
  }

  report.timings.inference_ms = ms_since(t0);
  report.recompute_mean();
  report.validate();
  return report;
}

double RuntimeComparison::load_reduction_pct() const {
  return individual.load_ms > 0.0
             ? 100.0 * (1.0 - merged.load_ms / individual.load_ms)
             : 0.0;
}

double RuntimeComparison::inference_reduction_pct() const {
  return individual.inference_ms > 0.0
             ? 100.0 * (1.0 - merged.inference_ms / individual.inference_ms)
             : 0.0;
}

double RuntimeComparison::total_reduction_pct() const {
  return individual.total_ms() > 0.0
             ? 100.0 * (1.0 - merged.total_ms() / individual.total_ms())
             : 0.0;
}

nlohmann::json RuntimeComparison::to_json() const {
  nlohmann::json per_model_json = nlohmann::json::array();
  for (const auto& [name, arm] : per_model)
    per_model_json.push_back({{"model", name},
                              {"load_ms", arm.load_ms},
                              {"inference_ms", arm.inference_ms},
                              {"total_ms", arm.total_ms()}});
  return nlohmann::json{
      {"individual",
       {{"load_ms", individual.load_ms},
        {"inference_ms", individual.inference_ms},
        {"total_ms", individual.total_ms()}}},
      {"merged",
       {{"load_ms", merged.load_ms},
        {"inference_ms", merged.inference_ms},
        {"total_ms", merged.total_ms()}}},
      {"reduction_pct",
       {{"load", load_reduction_pct()},
        {"inference", inference_reduction_pct()},
        {"total", total_reduction_pct()}}},
      {"per_model", std::move(per_model_json)},
      {"inferences_per_model", inferences_per_model}};
}

namespace {

RuntimeArm timed_pass(const std::filesystem::path& checkpoint_path,
                      const std::vector<const std::string*>& texts,
                      unsigned threads) {
  RuntimeArm arm;
  const auto t_load = Clock::now();
  const Checkpoint cp = load_checkpoint(checkpoint_path);
  arm.load_ms = ms_since(t_load);

  const SegmentLayout layout =
      effective_layout(cp, checkpoint_path.stem().string());
  std::vector<std::size_t> sink(texts.size());
  const auto t_inf = Clock::now();
  parallel_for(texts.size(), threads, [&](std::size_t i) {
    const auto toks = tokenize(*texts[i], cp.arch.vocab_size);
    const auto logits = forward(cp, toks);
    const auto preds = predict_from_logits(logits, layout);
    sink[i] = preds.front().class_index; // keep the work observable
  });
  arm.inference_ms = ms_since(t_inf);
  return arm;
}

} // namespace

RuntimeComparison compare_runtime(
    const std::vector<std::filesystem::path>& individual_paths,
    const std::filesystem::path& merged_path,
    const std::vector<LabeledDataset>& datasets, unsigned threads) {
  std::vector<const std::string*> texts;
  for (const LabeledDataset& ds : datasets)
    for (const Example& ex : ds.examples) texts.push_back(&ex.text);

  RuntimeComparison cmp;
  cmp.inferences_per_model = texts.size();
  for (const auto& path : individual_paths) {
    RuntimeArm arm = timed_pass(path, texts, threads);
    cmp.individual.load_ms += arm.load_ms;
    cmp.individual.inference_ms += arm.inference_ms;
    cmp.per_model.emplace_back(path.stem().string(), arm);
  }
  cmp.merged = timed_pass(merged_path, texts, threads);
  return cmp;
}

void emit_report(const EvalReport& report, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);

  {
    std::ofstream out(out_dir / "report.json", std::ios::binary);
    if (!out)
      throw Error("cannot write report.json in '" + out_dir.string() + "'");
    out << report.to_json().dump(2) << "\n";
  }

  {
    std::ofstream out(out_dir / "scores.csv", std::ios::binary);
    if (!out)
      throw Error("cannot write scores.csv in '" + out_dir.string() + "'");
    out << "dataset,segment,accuracy,macro_f1\n";
    for (const SegmentResult& r : report.results)
      out << r.dataset << "," << r.segment << "," << fmt_double(r.accuracy)
          << "," << fmt_double(r.macro_f1) << "\n";
  }

  for (const SegmentResult& r : report.results) {
    const std::string name = "confusion_" + safe_filename(r.dataset) + "_" +
                             safe_filename(r.segment) + ".csv";
    std::ofstream out(out_dir / name, std::ios::binary);
    if (!out)
      throw Error("cannot write '" + name + "' in '" + out_dir.string() + "'");
    out << "expected\\predicted";
    for (const std::string& l : r.labels) out << "," << l;
    out << "\n";
    for (std::size_t row = 0; row < r.labels.size(); ++row) {
      out << r.labels[row];
      for (std::size_t col = 0; col < r.labels.size(); ++col)
        out << "," << r.confusion[row][col];
      out << "\n";
    }
  }
}

} // namespace hm3
