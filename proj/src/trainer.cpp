#include "qll/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "qll/io_util.hpp"
#include "qll/rng.hpp"

namespace qll {

namespace {

bool same_shape(const Parameters& a, const Parameters& b) {
  if (a.layers.size() != b.layers.size()) return false;
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    const auto& x = a.layers[i];
    const auto& y = b.layers[i];
    if (x.weight.rows != y.weight.rows || x.weight.cols != y.weight.cols || x.bias.size() != y.bias.size()) {
      return false;
    }
  }
  return true;
}

struct BatchStep {
  double objective = 0.0;
  Matrix dlogits;
};

// Mean multi-class loss over the batch and its logit gradient.
BatchStep multiclass_step(const MulticlassLossKind& kind, const Matrix& logits, std::span<const ClassIndex> labels) {
  BatchStep s;
  s.dlogits = Matrix(logits.rows, logits.cols);
  const double inv_n = 1.0 / static_cast<double>(logits.rows);
  for (std::size_t i = 0; i < logits.rows; ++i) {
    auto g = s.dlogits.row(i);
    s.objective += baseline_loss(kind, logits.row(i), labels[i], g);
    for (double& v : g) v *= inv_n;
  }
  s.objective *= inv_n;
  return s;
}

bool spans_two_classes(std::span<const ClassIndex> labels) {
  return std::any_of(labels.begin(), labels.end(), [&](ClassIndex y) { return y != labels.front(); });
}

std::string fmt_g9(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (batch_size < 2) throw std::invalid_argument("TrainConfig: batch_size must be >= 2");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw std::invalid_argument("TrainConfig: lr must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("TrainConfig: momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
    throw std::invalid_argument("TrainConfig: weight_decay must be >= 0");
  }
  if (model_kind == ModelKind::kMlp && hidden < 1) throw std::invalid_argument("TrainConfig: hidden must be >= 1");
  std::visit([](const auto& k) { k.validate(); }, loss);
}

void sgd_step(Parameters& params, const Parameters& grads, Parameters& velocity, double lr, double momentum,
              double weight_decay) {
  if (!same_shape(params, grads) || !same_shape(params, velocity)) {
    throw std::invalid_argument("sgd_step: parameter, gradient and velocity shapes differ");
  }
  auto p = params.blocks();
  auto v = velocity.blocks();
  const auto g = grads.blocks();
  for (std::size_t b = 0; b < p.size(); ++b) {
    for (std::size_t k = 0; k < p[b].size(); ++k) {
      v[b][k] = momentum * v[b][k] + g[b][k] + weight_decay * p[b][k];
      p[b][k] -= lr * v[b][k];
    }
  }
}

double lr_at_epoch(double base_lr, std::uint32_t epoch, std::uint32_t total_epochs) noexcept {
  const std::uint64_t e = epoch;
  const std::uint64_t n = total_epochs;
  if (2 * e < n) return base_lr;
  if (4 * e < 3 * n) return base_lr * 0.1;
  return base_lr * 0.01;
}

std::vector<std::size_t> batch_order(std::uint64_t seed, std::uint32_t epoch, std::size_t n) {
  RngStream rng = RngStream(seed, streams::kBatching).substream(epoch);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(i));
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

Matrix feature_matrix(const AmbiguousDataset& data) {
  Matrix x(data.size(), data.feature_dim);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& f = data.examples[i].features;
    if (f.size() != data.feature_dim) throw std::invalid_argument("feature_matrix: ragged feature vectors");
    std::copy(f.begin(), f.end(), x.row(i).begin());
  }
  return x;
}

double evaluate(const Model& model, const AmbiguousDataset& test_set, Exec exec) {
  if (test_set.size() == 0) throw std::invalid_argument("evaluate: empty test set");
  if (test_set.feature_dim != model.dims().input || test_set.class_count != model.dims().classes) {
    throw std::invalid_argument("evaluate: test set dimensions do not match the model");
  }
  const BatchCache cache = forward_batch(model, feature_matrix(test_set), exec);
  std::vector<ClassIndex> predictions(test_set.size());
  std::vector<ClassIndex> labels(test_set.size());
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    predictions[i] = predict(cache.logits.row(i));
    labels[i] = test_set.examples[i].label;
  }
  return 1.0 - zero_one_test_risk(predictions, labels);
}

TrainReport train(const AmbiguousDataset& train_set, const AmbiguousDataset& test_set, const TrainConfig& cfg) {
  const auto started = std::chrono::steady_clock::now();
  cfg.validate();
  if (train_set.size() == 0 || test_set.size() == 0) throw std::invalid_argument("train: empty dataset");
  if (train_set.class_count != test_set.class_count || train_set.feature_dim != test_set.feature_dim) {
    throw std::invalid_argument("train: train and test sets differ in class count or feature dimension");
  }
  if (test_set.diagnostics) {
    for (const auto& s : *test_set.diagnostics) {
      if (!s.is_one_hot()) throw std::invalid_argument("train: test set labels must be clean");
    }
  }

  RngStream init_rng(cfg.seed, streams::kInit);
  RngStream alpha_rng(cfg.seed, streams::kAlpha);

  const ModelDims dims{train_set.feature_dim, cfg.hidden, train_set.class_count};
  Model model = init_model(cfg.model_kind, dims, init_rng);
  Parameters velocity = model.params().zeros_like();

  const Matrix x = feature_matrix(train_set);
  const std::size_t n = train_set.size();

  TrainReport report{{}, 0.0, 0.0, 0, model, 0.0};
  for (std::uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::vector<std::size_t> order = batch_order(cfg.seed, epoch, n);
    const double lr = lr_at_epoch(cfg.lr, epoch, cfg.epochs);
    double objective_sum = 0.0;
    std::size_t steps = 0;

    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t stop = std::min(n, start + cfg.batch_size);
      const std::size_t b = stop - start;
      Matrix xb(b, dims.input);
      std::vector<ClassIndex> yb(b);
      for (std::size_t r = 0; r < b; ++r) {
        const std::size_t src = order[start + r];
        std::copy(x.row(src).begin(), x.row(src).end(), xb.row(r).begin());
        yb[r] = train_set.examples[src].label;
      }

      BatchStep step;
      if (const auto* pu = std::get_if<BinaryLossKind>(&cfg.loss)) {
        const double alpha = pu->stochastic() ? sample_alpha(alpha_rng) : pu->fixed_alpha;
        if (b < 2 || !spans_two_classes(yb)) {
          ++report.skipped_batches;
          continue;
        }
        const BatchCache cache = forward_batch(model, xb, cfg.exec);
        CpuRiskWithGrad r = cpu_risk_with_grad(cache.logits, yb, cfg.priors, *pu, alpha, cfg.u_mode, cfg.exec);
        step.objective = r.report.objective_value;
        step.dlogits = std::move(r.grad);
        const Parameters grads = backward_batch(model, xb, cache, step.dlogits, cfg.exec);
        sgd_step(model.params(), grads, velocity, lr, cfg.momentum, cfg.weight_decay);
      } else {
        const auto& mc = std::get<MulticlassLossKind>(cfg.loss);
        const BatchCache cache = forward_batch(model, xb, cfg.exec);
        step = multiclass_step(mc, cache.logits, yb);
        const Parameters grads = backward_batch(model, xb, cache, step.dlogits, cfg.exec);
        sgd_step(model.params(), grads, velocity, lr, cfg.momentum, cfg.weight_decay);
      }
      objective_sum += step.objective;
      ++steps;
    }

    EpochMetrics m;
    m.epoch = epoch + 1;
    m.train_objective = steps ? objective_sum / static_cast<double>(steps) : 0.0;
    m.test_accuracy = evaluate(model, test_set, cfg.exec);
    report.epochs.push_back(m);
    report.best_test_accuracy = std::max(report.best_test_accuracy, m.test_accuracy);
  }

  const std::size_t tail = std::min<std::size_t>(5, report.epochs.size());
  double tail_sum = 0.0;
  for (std::size_t i = report.epochs.size() - tail; i < report.epochs.size(); ++i) {
    tail_sum += report.epochs[i].test_accuracy;
  }
  report.last5_test_accuracy = tail_sum / static_cast<double>(tail);
  report.final_model = std::move(model);
  report.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

std::string render_metrics_csv(const std::vector<EpochMetrics>& epochs) {
  std::string out = "epoch,train_objective,test_accuracy\n";
  for (const auto& e : epochs) {
    out += std::to_string(e.epoch) + "," + fmt_g9(e.train_objective) + "," + fmt_g9(e.test_accuracy) + "\n";
  }
  return out;
}

std::vector<EpochMetrics> parse_metrics_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "epoch,train_objective,test_accuracy") {
    throw FormatError("metrics: missing or unexpected header");
  }
  std::vector<EpochMetrics> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    EpochMetrics m;
    char c1 = 0;
    char c2 = 0;
    std::istringstream row(line);
    if (!(row >> m.epoch >> c1 >> m.train_objective >> c2 >> m.test_accuracy) || c1 != ',' || c2 != ',') {
      throw FormatError("metrics: malformed line '" + line + "'");
    }
    out.push_back(m);
  }
  return out;
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<EpochMetrics>& epochs) {
  atomic_write_file(path, render_metrics_csv(epochs));
}

MethodPreset method_preset(const std::string& name) {
  if (name == "ce") return {name, MulticlassLossKind::ce(), 0.1, 1e-4};
  if (name == "bs") return {name, MulticlassLossKind::bootstrap(0.4), 0.1, 1e-4};
  if (name == "gce") return {name, MulticlassLossKind::gce(0.7), 0.01, 1e-4};
  if (name == "sce") return {name, MulticlassLossKind::sce(0.1, 1.0), 0.1, 5e-4};
  if (name == "js") return {name, MulticlassLossKind::js(0.1), 0.1, 1e-3};
  if (name == "cpu-sjs") return {name, BinaryLossKind::scaled_sjs(), 0.1, 1e-4};
  if (name == "cpu-kl") return {name, BinaryLossKind::kl(), 0.1, 1e-4};
  if (name == "cpu-js") return {name, BinaryLossKind::js_fixed(0.5), 0.1, 1e-4};
  throw std::invalid_argument("unknown method '" + name + "'");
}

const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> names{"ce", "bs", "gce", "sce", "js", "cpu-sjs", "cpu-kl", "cpu-js"};
  return names;
}

bool is_pu_method(const TrainLoss& loss) noexcept { return std::holds_alternative<BinaryLossKind>(loss); }

}  // namespace qll
