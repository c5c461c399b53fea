#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace rgc {

using Shape = std::vector<int64_t>;

int64_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct Node;
using NodePtr = std::shared_ptr<Node>;

// One vertex of the dynamically recorded computation graph.  `value` is the
// forward result; `grad` is allocated lazily on first accumulation.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<NodePtr> inputs;
  // Propagates this node's grad into its inputs' grads.
  std::function<void(Node&)> backward;

  int64_t size() const { return static_cast<int64_t>(value.size()); }
  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
  void accumulate(std::span<const double> g) {
    ensure_grad();
    for (size_t i = 0; i < g.size(); ++i) grad[i] += g[i];
  }
};

// Dense 64-bit float tensor; a shared handle to a graph node.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double v, bool requires_grad = false);
  static Tensor from_vector(Shape shape, std::vector<double> v,
                            bool requires_grad = false);
  static Tensor scalar(double v);

  // Builds an op node.  `backward` may be empty for non-differentiable ops;
  // inputs are only retained while gradients are being recorded.
  static Tensor from_op(const char* op, Shape shape, std::vector<double> value,
                        std::vector<Tensor> inputs,
                        std::function<void(Node&)> backward);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int64_t size() const { return node_->size(); }
  int64_t dim(int i) const { return node_->shape[static_cast<size_t>(i)]; }
  int ndim() const { return static_cast<int>(node_->shape.size()); }

  std::span<const double> data() const { return node_->value; }
  // Mutating values after the tensor participates in a graph is on the
  // caller; only optimizers touch this.
  std::span<double> mutable_data() { return node_->value; }
  std::span<const double> grad() const { return node_->grad; }
  bool has_grad() const { return !node_->grad.empty(); }

  bool requires_grad() const { return node_->requires_grad; }
  Tensor& set_requires_grad(bool v) {
    node_->requires_grad = v;
    return *this;
  }
  void zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

  double item() const;

  Node* node() const { return node_.get(); }
  const NodePtr& node_ptr() const { return node_; }

 private:
  explicit Tensor(NodePtr n) : node_(std::move(n)) {}
  NodePtr node_;
};

// While alive, newly created ops record no inputs and no backward functions.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};
bool grad_enabled();

// Elementwise binary ops.  Broadcasting accepts: equal shapes, a scalar on
// either side, a length-C vector against the columns of [R, C], or an [R, 1]
// column against [R, C].  Anything else throws with both shapes named.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

// Elementwise unary ops.
Tensor neg(const Tensor& a);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor tanh_op(const Tensor& a);
Tensor exp_op(const Tensor& a);
Tensor log_op(const Tensor& a);
Tensor softplus(const Tensor& a);
Tensor abs_op(const Tensor& a);
Tensor clamp_min(const Tensor& a, double lo);

// [R, K] x [K, C] -> [R, C].
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor sum(const Tensor& a);   // -> scalar
Tensor mean(const Tensor& a);  // -> scalar

// Column-wise concat/slice of 2-d tensors.
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor slice_cols(const Tensor& a, int64_t from, int64_t to);

Tensor reshape(const Tensor& a, Shape shape);

// Reverse-mode sweep from a scalar root.  Re-zeroes every non-leaf grad
// reachable from `root`, seeds the root with 1, then runs the tape in
// reverse topological order.  Leaf grads accumulate across calls.
void backward(const Tensor& root);

// Topological order (inputs before consumers) of the graph below `root`.
std::vector<Node*> topo_order(const Tensor& root);

// Binary serialization: u32 rank, i64 dims, f64 payload, all little-endian.
void write_tensor(std::ostream& os, const Tensor& t);
Tensor read_tensor(std::istream& is);

}  // namespace rgc
