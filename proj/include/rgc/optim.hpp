#pragma once

#include <iosfwd>
#include <vector>

#include "rgc/tensor.hpp"

namespace rgc {

struct ParamGroup {
  std::vector<Tensor> params;
  double lr = 1e-3;
};

// Adam with bias correction; each group has its own learning rate.
class Adam {
 public:
  explicit Adam(std::vector<ParamGroup> groups, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);

  void step();       // throws on NaN gradients
  void zero_grad();  // also allocates missing grad buffers

  size_t group_count() const { return groups_.size(); }
  double lr(size_t g) const { return groups_[g].lr; }
  void set_lr(size_t g, double lr) { groups_[g].lr = lr; }
  int64_t step_count() const { return step_; }

  // Moment buffers and step count, for checkpointing.
  void save_state(std::ostream& os) const;
  void load_state(std::istream& is);

 private:
  std::vector<ParamGroup> groups_;
  std::vector<std::vector<double>> m_, v_;  // flattened per group order
  double beta1_, beta2_, eps_;
  int64_t step_ = 0;
};

// Scales gradients so their global L2 norm is at most max_norm.
// Returns the pre-clip norm.
double clip_global_norm(const std::vector<Tensor>& params, double max_norm);

// ReduceLROnPlateau on a maximized metric (validation ρ).
struct PlateauScheduler {
  double factor = 0.5;
  int64_t patience = 3;
  double min_delta = 1e-4;
  double min_lr = 1e-6;

  // Returns true when the learning rates were reduced this observation.
  // NaN metrics count as no improvement.
  bool observe(double metric, Adam& opt);

 private:
  double best_ = -1e300;
  int64_t bad_ = 0;
  bool seen_ = false;
};

struct EarlyStopper {
  int64_t patience = 7;

  // True once `patience` consecutive validations brought no improvement.
  bool should_stop(double metric);
  double best() const { return best_; }

 private:
  double best_ = -1e300;
  int64_t bad_ = 0;
  bool seen_ = false;
};

}  // namespace rgc
