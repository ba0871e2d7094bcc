#include <algorithm>

#include "qll/reference.hpp"

namespace qll::reference {

Matrix forward_batch(const Model& model, const Matrix& inputs) {
  Matrix logits(inputs.rows, model.dims().classes);
  for (std::size_t i = 0; i < inputs.rows; ++i) {
    const ForwardResult r = forward(model, inputs.row(i));
    std::copy(r.logits.begin(), r.logits.end(), logits.row(i).begin());
  }
  return logits;
}

Parameters backward_batch(const Model& model, const Matrix& inputs, const Matrix& dlogits) {
  Parameters total = model.params().zeros_like();
  auto dst = total.blocks();
  for (std::size_t i = 0; i < inputs.rows; ++i) {
    const ForwardResult r = forward(model, inputs.row(i));
    const Parameters g = backward(model, r.cache, dlogits.row(i));
    const auto src = g.blocks();
    for (std::size_t b = 0; b < dst.size(); ++b) {
      for (std::size_t k = 0; k < dst[b].size(); ++k) dst[b][k] += src[b][k];
    }
  }
  return total;
}

}  // namespace qll::reference
