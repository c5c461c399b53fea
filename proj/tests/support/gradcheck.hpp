#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "rgc/rng.hpp"
#include "rgc/tensor.hpp"

namespace testsupport {

inline double rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), 1e-5});
}

struct GradCheckResult {
  double max_rel = 0.0;
  int64_t probes = 0;
};

// Central finite differences against the analytic gradient of a scalar
// graph.  `fn` must rebuild the graph from the live parameter tensors on
// every call.  Small parameters are probed exhaustively, larger ones on
// `probes_per_param` random coordinates.
inline GradCheckResult gradcheck(const std::vector<rgc::Tensor>& params,
                                 const std::function<rgc::Tensor()>& fn,
                                 rgc::Rng& rng,
                                 int64_t probes_per_param = 20,
                                 double h = 1e-5) {
  for (const rgc::Tensor& p : params) {
    rgc::Tensor t = p;
    t.zero_grad();
  }
  rgc::Tensor loss = fn();
  rgc::backward(loss);

  GradCheckResult res;
  for (const rgc::Tensor& p : params) {
    rgc::Tensor t = p;
    auto w = t.mutable_data();
    const auto g = t.grad();
    const int64_t n = t.size();
    const bool exhaustive = n <= probes_per_param;
    const int64_t probes = exhaustive ? n : probes_per_param;
    for (int64_t k = 0; k < probes; ++k) {
      const size_t i = exhaustive ? static_cast<size_t>(k)
                                  : static_cast<size_t>(rng.below(
                                        static_cast<uint64_t>(n)));
      const double orig = w[i];
      double fp = 0.0, fm = 0.0;
      {
        rgc::NoGradGuard ng;
        w[i] = orig + h;
        fp = fn().item();
        w[i] = orig - h;
        fm = fn().item();
        w[i] = orig;
      }
      const double fd = (fp - fm) / (2.0 * h);
      res.max_rel = std::max(res.max_rel, rel_err(g[i], fd));
      ++res.probes;
    }
  }
  return res;
}

}  // namespace testsupport
