#include "qll/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "qll/io_util.hpp"
#include "qll/model.hpp"

namespace qll {

namespace {

std::string fmt_g9(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename F>
auto as_usage(F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

}  // namespace

std::filesystem::path output_root() {
  const char* env = std::getenv("QLL_OUT");
  if (env != nullptr && *env != '\0') return env;
  return ".";
}

std::filesystem::path resolve_output(const std::filesystem::path& p) {
  if (p.is_absolute()) return p;
  return output_root() / p;
}

double resolve_pi2(const std::string& text, const AmbiguousDataset& train_set) {
  if (text == "auto") {
    const GenMeta& meta = train_set.gen_meta;
    if (meta.kind == MixKind::kNone || meta.m == 0) {
      throw UsageError("--pi2 auto needs a mixed dataset (m is taken from its metadata)");
    }
    return static_cast<double>(meta.m) / static_cast<double>(train_set.class_count);
  }
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || !(v > 0.0 && v <= 1.0)) {
    throw UsageError("--pi2 must be 'auto' or a number in (0, 1], got '" + text + "'");
  }
  return v;
}

TrainConfig build_train_config(const TrainOptions& opts, const AmbiguousDataset& train_set) {
  const MethodPreset preset = as_usage([&] { return method_preset(opts.method); });
  TrainConfig cfg;
  cfg.epochs = opts.epochs;
  cfg.batch_size = opts.batch_size;
  cfg.lr = opts.lr.value_or(preset.lr);
  cfg.momentum = opts.momentum;
  cfg.weight_decay = opts.weight_decay.value_or(preset.weight_decay);
  cfg.seed = opts.seed;
  cfg.model_kind = as_usage([&] { return parse_model_kind(opts.model); });
  cfg.hidden = opts.hidden;
  cfg.u_mode = as_usage([&] { return parse_u_mode(opts.u_mode); });
  cfg.loss = preset.loss;

  if (auto* pu = std::get_if<BinaryLossKind>(&cfg.loss)) {
    if (opts.alpha) {
      if (pu->variant == BinaryLossKind::Variant::kKl) throw UsageError("--alpha does not apply to cpu-kl");
      pu->alpha_source = AlphaSource::kFixed;
      pu->fixed_alpha = *opts.alpha;
    }
    cfg.priors = as_usage([&] { return ClassPriors(opts.pi1, resolve_pi2(opts.pi2, train_set)); });
  } else {
    auto& mc = std::get<MulticlassLossKind>(cfg.loss);
    if (opts.beta) mc.beta = *opts.beta;
    if (opts.gce_q) mc.q = *opts.gce_q;
    if (opts.sce_a) mc.a = *opts.sce_a;
    if (opts.sce_b) mc.b = *opts.sce_b;
    if (opts.js_pi1) mc.pi1 = *opts.js_pi1;
  }
  as_usage([&] {
    cfg.validate();
    return 0;
  });
  return cfg;
}

std::string dataset_variant(const AmbiguousDataset& ds) {
  const GenMeta& meta = ds.gen_meta;
  if (meta.kind == MixKind::kNone) return "clean";
  return std::string(mix_kind_name(meta.kind)) + "-m" + std::to_string(meta.m) + "-r" + std::to_string(meta.r);
}

std::string render_run_meta(const RunRecord& identity, const TrainConfig& cfg, const TrainReport& report) {
  std::ostringstream o;
  o << "method = " << identity.method << "\n";
  o << "label = " << identity.label << "\n";
  o << "variant = " << identity.variant << "\n";
  o << "seed = " << identity.seed << "\n";
  o << "epochs = " << cfg.epochs << "\n";
  o << "batch_size = " << cfg.batch_size << "\n";
  o << "lr = " << fmt_g9(cfg.lr) << "\n";
  o << "momentum = " << fmt_g9(cfg.momentum) << "\n";
  o << "weight_decay = " << fmt_g9(cfg.weight_decay) << "\n";
  o << "model = " << model_kind_name(cfg.model_kind) << "\n";
  if (cfg.model_kind == ModelKind::kMlp) o << "hidden = " << cfg.hidden << "\n";
  if (const auto* pu = std::get_if<BinaryLossKind>(&cfg.loss)) {
    o << "pi1 = " << fmt_g9(cfg.priors.pi1()) << "\n";
    o << "pi2 = " << fmt_g9(cfg.priors.pi2()) << "\n";
    o << "u_mode = " << u_mode_name(cfg.u_mode) << "\n";
    o << "alpha = " << (pu->stochastic() ? std::string("sampled") : fmt_g9(pu->fixed_alpha)) << "\n";
    o << "skipped_batches = " << report.skipped_batches << "\n";
  }
  o << "best_test_accuracy = " << fmt_g9(report.best_test_accuracy) << "\n";
  o << "last5_test_accuracy = " << fmt_g9(report.last5_test_accuracy) << "\n";
  return o.str();
}

TrainReport execute_run(const AmbiguousDataset& train_set, const AmbiguousDataset& test_set, const TrainConfig& cfg,
                        const RunRecord& identity, const std::filesystem::path& run_dir) {
  TrainReport report = train(train_set, test_set, cfg);
  write_metrics_csv(run_dir / "metrics.csv", report.epochs);
  save_model(run_dir / "model.qllm", report.final_model);
  atomic_write_file(run_dir / "run.meta", render_run_meta(identity, cfg, report));
  return report;
}

std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw FormatError("expected 'key = value', got '" + t + "'");
    out.emplace_back(trim(std::string_view(t).substr(0, eq)), trim(std::string_view(t).substr(eq + 1)));
  }
  return out;
}

void ExperimentConfig::validate() const {
  if (methods.empty()) throw UsageError("experiment: method list is empty");
  for (const auto& m : methods) {
    const auto& known = known_methods();
    if (std::find(known.begin(), known.end(), m) == known.end()) {
      throw UsageError("experiment: unknown method '" + m + "'");
    }
  }
  if (seeds.empty()) throw UsageError("experiment: seed list is empty");
  if (pi1_grid.empty() || pi2_grid.empty()) throw UsageError("experiment: prior grids must be nonempty");
  for (double p : pi1_grid) {
    if (!(p > 0.0 && p <= 1.0)) throw UsageError("experiment: pi1 values must lie in (0, 1]");
  }
}

}  // namespace qll
