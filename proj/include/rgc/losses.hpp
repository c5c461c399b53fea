#pragma once

#include <string>

#include "rgc/tensor.hpp"

namespace rgc {

enum class LossKind { mse, mae, poisson };
LossKind loss_from_string(const std::string& s);
std::string to_string(LossKind k);

// All losses take pred and target of equal shape [B, n] and return a scalar.
Tensor loss_mse(const Tensor& pred, const Tensor& target);
Tensor loss_mae(const Tensor& pred, const Tensor& target);
// (1/B)·Σ ŷ − y·log ŷ with ŷ clamped at eps so the log stays finite.
Tensor loss_poisson(const Tensor& pred, const Tensor& target,
                    double eps = 1e-8);

Tensor compute_loss(LossKind kind, const Tensor& pred, const Tensor& target);

}  // namespace rgc
