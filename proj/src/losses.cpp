#include "rgc/losses.hpp"

#include <stdexcept>

namespace rgc {

LossKind loss_from_string(const std::string& s) {
  if (s == "mse") return LossKind::mse;
  if (s == "mae") return LossKind::mae;
  if (s == "poisson") return LossKind::poisson;
  throw std::invalid_argument("unknown loss: " + s);
}

std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::mse:
      return "mse";
    case LossKind::mae:
      return "mae";
    case LossKind::poisson:
      return "poisson";
  }
  return "?";
}

namespace {

void check_pair(const char* op, const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                shape_str(pred.shape()) + " vs " +
                                shape_str(target.shape()));
  }
}

}  // namespace

Tensor loss_mse(const Tensor& pred, const Tensor& target) {
  check_pair("loss_mse", pred, target);
  const Tensor d = sub(pred, target);
  return mean(mul(d, d));
}

Tensor loss_mae(const Tensor& pred, const Tensor& target) {
  check_pair("loss_mae", pred, target);
  return mean(abs_op(sub(pred, target)));
}

Tensor loss_poisson(const Tensor& pred, const Tensor& target, double eps) {
  check_pair("loss_poisson", pred, target);
  const Tensor p = clamp_min(pred, eps);
  const Tensor term = sub(p, mul(target, log_op(p)));
  return scale(sum(term), 1.0 / static_cast<double>(pred.dim(0)));
}

Tensor compute_loss(LossKind kind, const Tensor& pred, const Tensor& target) {
  switch (kind) {
    case LossKind::mse:
      return loss_mse(pred, target);
    case LossKind::mae:
      return loss_mae(pred, target);
    case LossKind::poisson:
      return loss_poisson(pred, target);
  }
  throw std::invalid_argument("compute_loss: bad kind");
}

}  // namespace rgc
