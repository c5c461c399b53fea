#include "rgc/optim.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace rgc {

Adam::Adam(std::vector<ParamGroup> groups, double beta1, double beta2,
           double eps)
    : groups_(std::move(groups)), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const ParamGroup& g : groups_) {
    if (g.lr <= 0.0) throw std::invalid_argument("Adam: lr must be positive");
    int64_t n = 0;
    for (const Tensor& p : g.params) n += p.size();
    m_.emplace_back(static_cast<size_t>(n), 0.0);
    v_.emplace_back(static_cast<size_t>(n), 0.0);
  }
}

void Adam::step() {
  ++step_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  for (size_t gi = 0; gi < groups_.size(); ++gi) {
    ParamGroup& group = groups_[gi];
    size_t off = 0;
    for (Tensor& p : group.params) {
      auto w = p.mutable_data();
      const auto g = p.grad();
      if (g.empty()) {
        off += static_cast<size_t>(p.size());
        continue;
      }
      for (size_t i = 0; i < g.size(); ++i) {
        if (std::isnan(g[i])) {
          throw std::runtime_error("adam_step: NaN gradient");
        }
        double& m = m_[gi][off + i];
        double& v = v_[gi][off + i];
        m = beta1_ * m + (1.0 - beta1_) * g[i];
        v = beta2_ * v + (1.0 - beta2_) * g[i] * g[i];
        const double mhat = m / bc1;
        const double vhat = v / bc2;
        w[i] -= group.lr * mhat / (std::sqrt(vhat) + eps_);
      }
      off += g.size();
    }
  }
}

void Adam::zero_grad() {
  for (ParamGroup& g : groups_) {
    for (Tensor& p : g.params) p.zero_grad();
  }
}

void Adam::save_state(std::ostream& os) const {
  os.write(reinterpret_cast<const char*>(&step_), sizeof(step_));
  for (size_t gi = 0; gi < groups_.size(); ++gi) {
    const double lr = groups_[gi].lr;
    os.write(reinterpret_cast<const char*>(&lr), sizeof(lr));
    const uint64_t n = m_[gi].size();
    os.write(reinterpret_cast<const char*>(&n), sizeof(n));
    os.write(reinterpret_cast<const char*>(m_[gi].data()),
             static_cast<std::streamsize>(n * sizeof(double)));
    os.write(reinterpret_cast<const char*>(v_[gi].data()),
             static_cast<std::streamsize>(n * sizeof(double)));
  }
}

void Adam::load_state(std::istream& is) {
  is.read(reinterpret_cast<char*>(&step_), sizeof(step_));
  for (size_t gi = 0; gi < groups_.size(); ++gi) {
    double lr = 0.0;
    is.read(reinterpret_cast<char*>(&lr), sizeof(lr));
    uint64_t n = 0;
    is.read(reinterpret_cast<char*>(&n), sizeof(n));
    if (!is || n != m_[gi].size()) {
      throw std::runtime_error("Adam::load_state: buffer size mismatch");
    }
    groups_[gi].lr = lr;
    is.read(reinterpret_cast<char*>(m_[gi].data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    is.read(reinterpret_cast<char*>(v_[gi].data()),
            static_cast<std::streamsize>(n * sizeof(double)));
  }
  if (!is) throw std::runtime_error("Adam::load_state: truncated state");
}

double clip_global_norm(const std::vector<Tensor>& params, double max_norm) {
  double sq = 0.0;
  for (const Tensor& p : params) {
    for (const double g : p.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (const Tensor& p : params) {
      for (double& g : p.node()->grad) g *= s;
    }
  }
  return norm;
}

bool PlateauScheduler::observe(double metric, Adam& opt) {
  const bool improved = !std::isnan(metric) &&
                        (!seen_ || metric > best_ + min_delta);
  if (improved) {
    best_ = metric;
    seen_ = true;
    bad_ = 0;
    return false;
  }
  if (++bad_ < patience) return false;
  bad_ = 0;
  bool reduced = false;
  for (size_t g = 0; g < opt.group_count(); ++g) {
    const double next = std::max(opt.lr(g) * factor, min_lr);
    if (next < opt.lr(g)) {
      opt.set_lr(g, next);
      reduced = true;
    }
  }
  return reduced;
}

bool EarlyStopper::should_stop(double metric) {
  if (!std::isnan(metric) && (!seen_ || metric > best_)) {
    best_ = metric;
    seen_ = true;
    bad_ = 0;
    return false;
  }
  return ++bad_ >= patience;
}

}  // namespace rgc
