#include "qll/model.hpp"

#include <cmath>
#include <cstdint>

#include "qll/io_util.hpp"

namespace qll {

namespace {

DenseLayer make_layer(std::uint32_t out, std::uint32_t in) { return {Matrix(out, in), std::vector<double>(out, 0.0)}; }

void dense_forward(const DenseLayer& layer, std::span<const double> x, std::span<double> y) noexcept {
  for (std::size_t j = 0; j < layer.weight.rows; ++j) {
    double acc = layer.bias[j];
    const auto w = layer.weight.row(j);
    for (std::size_t k = 0; k < w.size(); ++k) acc += w[k] * x[k];
    y[j] = acc;
  }
}

// dW(j, :) = sum_i g(i, j) * x(i, :), db(j) = sum_i g(i, j); parallel over j.
void dense_weight_grad(const Matrix& g, const Matrix& x, DenseLayer& out, bool par) {
  const auto rows = static_cast<std::int64_t>(out.weight.rows);
  const std::size_t n = g.rows;
#pragma omp parallel for schedule(static) if (par)
  for (std::int64_t jj = 0; jj < rows; ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    auto dw = out.weight.row(j);
    double db = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double gij = g(i, j);
      if (gij == 0.0) continue;
      const auto xi = x.row(i);
      for (std::size_t k = 0; k < dw.size(); ++k) dw[k] += gij * xi[k];
      db += gij;
    }
    out.bias[j] = db;
  }
}

}  // namespace

ModelKind parse_model_kind(const std::string& name) {
  if (name == "linear") return ModelKind::kLinear;
  if (name == "mlp") return ModelKind::kMlp;
  throw std::invalid_argument("unknown model kind '" + name + "' (expected linear|mlp)");
}

const char* model_kind_name(ModelKind kind) noexcept { return kind == ModelKind::kMlp ? "mlp" : "linear"; }

std::size_t Parameters::count() const noexcept {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.data.size() + l.bias.size();
  return n;
}

Parameters Parameters::zeros_like() const {
  Parameters z;
  for (const auto& l : layers) z.layers.push_back(make_layer(static_cast<std::uint32_t>(l.weight.rows),
                                                             static_cast<std::uint32_t>(l.weight.cols)));
  return z;
}

double Parameters::squared_norm() const noexcept {
  double s = 0.0;
  for (const auto& block : blocks()) {
    for (double v : block) s += v * v;
  }
  return s;
}

std::vector<std::span<double>> Parameters::blocks() {
  std::vector<std::span<double>> out;
  for (auto& l : layers) {
    out.emplace_back(l.weight.data);
    out.emplace_back(l.bias);
  }
  return out;
}

std::vector<std::span<const double>> Parameters::blocks() const {
  std::vector<std::span<const double>> out;
  for (const auto& l : layers) {
    out.emplace_back(l.weight.data);
    out.emplace_back(l.bias);
  }
  return out;
}

Model::Model(ModelKind kind, ModelDims dims) : kind_(kind), dims_(dims) {
  if (dims.input == 0 || dims.classes == 0) throw std::invalid_argument("Model: input and class dims must be positive");
  if (kind == ModelKind::kLinear) {
    dims_.hidden = 0;
    params_.layers.push_back(make_layer(dims.classes, dims.input));
  } else {
    if (dims.hidden == 0) throw std::invalid_argument("Model: MLP hidden width must be positive");
    params_.layers.push_back(make_layer(dims.hidden, dims.input));
    params_.layers.push_back(make_layer(dims.classes, dims.hidden));
  }
}

Model init_model(ModelKind kind, ModelDims dims, RngStream& rng) {
  Model model(kind, dims);
  for (auto& layer : model.params().layers) {
    const double sd = std::sqrt(2.0 / static_cast<double>(layer.weight.cols));
    for (double& w : layer.weight.data) w = sd * rng.normal();
  }
  return model;
}

ForwardResult forward(const Model& model, std::span<const double> x) {
  if (x.size() != model.dims().input) throw std::invalid_argument("forward: input length mismatch");
  ForwardResult r;
  r.cache.input.assign(x.begin(), x.end());
  r.logits.resize(model.dims().classes);
  const auto& layers = model.params().layers;
  if (model.kind() == ModelKind::kLinear) {
    dense_forward(layers[0], x, r.logits);
    return r;
  }
  r.cache.hidden_pre.resize(model.dims().hidden);
  dense_forward(layers[0], x, r.cache.hidden_pre);
  r.cache.hidden_act.resize(model.dims().hidden);
  for (std::size_t k = 0; k < r.cache.hidden_pre.size(); ++k) {
    r.cache.hidden_act[k] = r.cache.hidden_pre[k] > 0.0 ? r.cache.hidden_pre[k] : 0.0;
  }
  dense_forward(layers[1], r.cache.hidden_act, r.logits);
  return r;
}

Parameters backward(const Model& model, const ForwardCache& cache, std::span<const double> dlogits) {
  const ModelDims& dims = model.dims();
  if (dlogits.size() != dims.classes) throw std::invalid_argument("backward: dlogits length mismatch");
  if (cache.input.size() != dims.input) throw std::invalid_argument("backward: cache input length mismatch");
  Parameters grad = model.params().zeros_like();

  const auto outer = [](DenseLayer& g, std::span<const double> delta, std::span<const double> in) {
    for (std::size_t j = 0; j < delta.size(); ++j) {
      auto row = g.weight.row(j);
      for (std::size_t k = 0; k < in.size(); ++k) row[k] = delta[j] * in[k];
      g.bias[j] = delta[j];
    }
  };

  if (model.kind() == ModelKind::kLinear) {
    outer(grad.layers[0], dlogits, cache.input);
    return grad;
  }
  if (cache.hidden_pre.size() != dims.hidden || cache.hidden_act.size() != dims.hidden) {
    throw std::invalid_argument("backward: cache hidden width mismatch");
  }
  outer(grad.layers[1], dlogits, cache.hidden_act);
  const Matrix& w2 = model.params().layers[1].weight;
  std::vector<double> dpre(dims.hidden, 0.0);
  for (std::size_t k = 0; k < dims.hidden; ++k) {
    if (cache.hidden_pre[k] <= 0.0) continue;
    double acc = 0.0;
    for (std::size_t j = 0; j < dims.classes; ++j) acc += dlogits[j] * w2(j, k);
    dpre[k] = acc;
  }
  outer(grad.layers[0], dpre, cache.input);
  return grad;
}

BatchCache forward_batch(const Model& model, const Matrix& inputs, Exec exec) {
  const ModelDims& dims = model.dims();
  if (inputs.cols != dims.input) throw std::invalid_argument("forward_batch: input width mismatch");
  const bool par = exec == Exec::kParallel;
  const std::size_t n = inputs.rows;
  const auto ni = static_cast<std::int64_t>(n);
  const auto& layers = model.params().layers;

  BatchCache cache;
  cache.logits = Matrix(n, dims.classes);
  if (model.kind() == ModelKind::kLinear) {
#pragma omp parallel for schedule(static) if (par)
    for (std::int64_t i = 0; i < ni; ++i) {
      const auto row = static_cast<std::size_t>(i);
      dense_forward(layers[0], inputs.row(row), cache.logits.row(row));
    }
    return cache;
  }
  cache.hidden_pre = Matrix(n, dims.hidden);
  cache.hidden_act = Matrix(n, dims.hidden);
#pragma omp parallel for schedule(static) if (par)
  for (std::int64_t i = 0; i < ni; ++i) {
    const auto row = static_cast<std::size_t>(i);
    auto pre = cache.hidden_pre.row(row);
    auto act = cache.hidden_act.row(row);
    dense_forward(layers[0], inputs.row(row), pre);
    for (std::size_t k = 0; k < pre.size(); ++k) act[k] = pre[k] > 0.0 ? pre[k] : 0.0;
    dense_forward(layers[1], act, cache.logits.row(row));
  }
  return cache;
}

Parameters backward_batch(const Model& model, const Matrix& inputs, const BatchCache& cache, const Matrix& dlogits,
                          Exec exec) {
  const ModelDims& dims = model.dims();
  if (dlogits.rows != inputs.rows || dlogits.cols != dims.classes || inputs.cols != dims.input) {
    throw std::invalid_argument("backward_batch: shape mismatch");
  }
  const bool par = exec == Exec::kParallel;
  Parameters grad = model.params().zeros_like();
  if (model.kind() == ModelKind::kLinear) {
    dense_weight_grad(dlogits, inputs, grad.layers[0], par);
    return grad;
  }
  if (cache.hidden_pre.rows != inputs.rows || cache.hidden_pre.cols != dims.hidden) {
    throw std::invalid_argument("backward_batch: cache does not match inputs");
  }
  dense_weight_grad(dlogits, cache.hidden_act, grad.layers[1], par);

  const Matrix& w2 = model.params().layers[1].weight;
  const std::size_t n = inputs.rows;
  Matrix dpre(n, dims.hidden);
  const auto ni = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) if (par)
  for (std::int64_t i = 0; i < ni; ++i) {
    const auto row = static_cast<std::size_t>(i);
    for (std::size_t k = 0; k < dims.hidden; ++k) {
      if (cache.hidden_pre(row, k) <= 0.0) continue;
      double acc = 0.0;
      for (std::size_t j = 0; j < dims.classes; ++j) acc += dlogits(row, j) * w2(j, k);
      dpre(row, k) = acc;
    }
  }
  dense_weight_grad(dpre, inputs, grad.layers[0], par);
  return grad;
}

ClassIndex predict(std::span<const double> logits) noexcept {
  std::size_t best = 0;
  for (std::size_t k = 1; k < logits.size(); ++k) {
    if (logits[k] > logits[best]) best = k;
  }
  return static_cast<ClassIndex>(best);
}

std::string encode_model(const Model& model) {
  ByteWriter w;
  w.raw(kModelMagic);
  w.u8(static_cast<std::uint8_t>(model.kind()));
  w.u32(model.dims().input);
  w.u32(model.dims().hidden);
  w.u32(model.dims().classes);
  for (const auto& block : model.params().blocks()) {
    for (double v : block) w.f32(static_cast<float>(v));
  }
  return w.take();
}

Model decode_model(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.remaining() < kModelMagic.size() || r.raw(kModelMagic.size()) != kModelMagic) {
    throw FormatError("checkpoint: bad magic (expected QLLM)");
  }
  const std::uint8_t kind = r.u8();
  if (kind > 1) throw FormatError("checkpoint: unknown model kind " + std::to_string(kind));
  ModelDims dims;
  dims.input = r.u32();
  dims.hidden = r.u32();
  dims.classes = r.u32();
  Model model = [&] {
    try {
      return Model(static_cast<ModelKind>(kind), dims);
    } catch (const std::invalid_argument& e) {
      throw FormatError(std::string("checkpoint: ") + e.what());
    }
  }();
  if (r.remaining() != model.params().count() * 4) throw FormatError("checkpoint: parameter block size mismatch");
  for (auto& block : model.params().blocks()) {
    for (double& v : block) v = r.f32();
  }
  return model;
}

void save_model(const std::filesystem::path& path, const Model& model) { atomic_write_file(path, encode_model(model)); }

Model load_model(const std::filesystem::path& path) { return decode_model(read_file(path)); }

}  // namespace qll
