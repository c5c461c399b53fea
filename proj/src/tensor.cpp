#include "rgc/tensor.hpp"

#include <cblas.h>

#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace rgc {

int64_t numel(const Shape& shape) {
  int64_t n = 1;
  for (const int64_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {

thread_local int g_no_grad_depth = 0;

void check_shape(const char* op, const Shape& shape) {
  for (const int64_t d : shape) {
    if (d <= 0) {
      throw std::invalid_argument(std::string(op) +
                                  ": non-positive dim in " + shape_str(shape));
    }
  }
}

}  // namespace

NoGradGuard::NoGradGuard() { ++g_no_grad_depth; }
NoGradGuard::~NoGradGuard() { --g_no_grad_depth; }
bool grad_enabled() { return g_no_grad_depth == 0; }

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double v, bool requires_grad) {
  check_shape("full", shape);
  auto n = std::make_shared<Node>();
  n->value.assign(static_cast<size_t>(numel(shape)), v);
  n->shape = std::move(shape);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::from_vector(Shape shape, std::vector<double> v,
                           bool requires_grad) {
  check_shape("from_vector", shape);
  if (numel(shape) != static_cast<int64_t>(v.size())) {
    throw std::invalid_argument("from_vector: " + shape_str(shape) +
                                " does not hold " + std::to_string(v.size()) +
                                " values");
  }
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(v);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::scalar(double v) { return from_vector({1}, {v}); }

Tensor Tensor::from_op(const char* op, Shape shape, std::vector<double> value,
                       std::vector<Tensor> inputs,
                       std::function<void(Node&)> backward) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->op = op;
  bool needs = false;
  if (grad_enabled()) {
    for (const Tensor& t : inputs) needs = needs || t.requires_grad();
  }
  if (needs) {
    n->requires_grad = true;
    n->inputs.reserve(inputs.size());
    for (Tensor& t : inputs) n->inputs.push_back(t.node_ptr());
    n->backward = std::move(backward);
  }
  return Tensor(std::move(n));
}

double Tensor::item() const {
  if (size() != 1) {
    throw std::invalid_argument("item: tensor has shape " + shape_str(shape()));
  }
  return node_->value[0];
}

// ---------------------------------------------------------------------------
// Broadcasting

namespace {

enum class Map : uint8_t { id, one, row, col };

struct BcPlan {
  Shape out;
  int64_t rows = 1;
  int64_t cols = 1;
  Map ma = Map::id;
  Map mb = Map::id;
};

inline int64_t map_index(Map m, int64_t i, int64_t cols) {
  switch (m) {
    case Map::id:
      return i;
    case Map::one:
      return 0;
    case Map::row:
      return i % cols;
    case Map::col:
      return i / cols;
  }
  return 0;
}

bool is_row_of(const Shape& v, const Shape& m) {
  if (m.size() != 2) return false;
  if (v.size() == 1 && v[0] == m[1]) return true;
  if (v.size() == 2 && v[0] == 1 && v[1] == m[1]) return true;
  return false;
}

bool is_col_of(const Shape& v, const Shape& m) {
  return m.size() == 2 && v.size() == 2 && v[0] == m[0] && v[1] == 1;
}

BcPlan broadcast_plan(const char* op, const Shape& a, const Shape& b) {
  BcPlan p;
  if (a == b) {
    p.out = a;
    p.cols = numel(a);
    return p;
  }
  if (numel(b) == 1) {
    p.out = a;
    p.cols = numel(a);
    p.mb = Map::one;
    return p;
  }
  if (numel(a) == 1) {
    p.out = b;
    p.cols = numel(b);
    p.ma = Map::one;
    return p;
  }
  if (is_row_of(b, a)) {
    p.out = a;
    p.rows = a[0];
    p.cols = a[1];
    p.mb = Map::row;
    return p;
  }
  if (is_row_of(a, b)) {
    p.out = b;
    p.rows = b[0];
    p.cols = b[1];
    p.ma = Map::row;
    return p;
  }
  if (is_col_of(b, a)) {
    p.out = a;
    p.rows = a[0];
    p.cols = a[1];
    p.mb = Map::col;
    return p;
  }
  if (is_col_of(a, b)) {
    p.out = b;
    p.rows = b[0];
    p.cols = b[1];
    p.ma = Map::col;
    return p;
  }
  throw std::invalid_argument(std::string(op) + ": cannot broadcast " +
                              shape_str(a) + " and " + shape_str(b));
}

// dfa/dfb take (a, b, out) at one element and return the local partial.
template <class F, class DFA, class DFB>
Tensor binary_op(const char* name, const Tensor& ta, const Tensor& tb, F f,
                 DFA dfa, DFB dfb) {
  const BcPlan p = broadcast_plan(name, ta.shape(), tb.shape());
  const int64_t n = numel(p.out);
  std::vector<double> out(static_cast<size_t>(n));
  const auto a = ta.data();
  const auto b = tb.data();
  if (p.ma == Map::id && p.mb == Map::id) {
    for (int64_t i = 0; i < n; ++i) out[i] = f(a[i], b[i]);
  } else {
    for (int64_t i = 0; i < n; ++i) {
      out[i] = f(a[map_index(p.ma, i, p.cols)], b[map_index(p.mb, i, p.cols)]);
    }
  }
  return Tensor::from_op(
      name, p.out, std::move(out), {ta, tb}, [p, dfa, dfb](Node& node) {
        Node* na = node.inputs[0].get();
        Node* nb = node.inputs[1].get();
        const int64_t n = node.size();
        if (na->requires_grad) {
          na->ensure_grad();
          for (int64_t i = 0; i < n; ++i) {
            const int64_t ia = map_index(p.ma, i, p.cols);
            const int64_t ib = map_index(p.mb, i, p.cols);
            na->grad[ia] +=
                node.grad[i] * dfa(na->value[ia], nb->value[ib], node.value[i]);
          }
        }
        if (nb->requires_grad) {
          nb->ensure_grad();
          for (int64_t i = 0; i < n; ++i) {
            const int64_t ia = map_index(p.ma, i, p.cols);
            const int64_t ib = map_index(p.mb, i, p.cols);
            nb->grad[ib] +=
                node.grad[i] * dfb(na->value[ia], nb->value[ib], node.value[i]);
          }
        }
      });
}

// dydx takes (x, y) and returns dy/dx.
template <class F, class DF>
Tensor unary_op(const char* name, const Tensor& ta, F f, DF dydx) {
  const int64_t n = ta.size();
  std::vector<double> out(static_cast<size_t>(n));
  const auto a = ta.data();
  for (int64_t i = 0; i < n; ++i) out[i] = f(a[i]);
  return Tensor::from_op(name, ta.shape(), std::move(out), {ta},
                         [dydx](Node& node) {
                           Node* na = node.inputs[0].get();
                           if (!na->requires_grad) return;
                           na->ensure_grad();
                           const int64_t n = node.size();
                           for (int64_t i = 0; i < n; ++i) {
                             na->grad[i] += node.grad[i] *
                                            dydx(na->value[i], node.value[i]);
                           }
                         });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double, double, double) { return 1.0; },
      [](double, double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double, double) { return 1.0; },
      [](double, double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double, double y, double) { return y; },
      [](double x, double, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary_op(
      "div", a, b, [](double x, double y) { return x / y; },
      [](double, double y, double) { return 1.0 / y; },
      [](double, double y, double out) { return -out / y; });
}

Tensor neg(const Tensor& a) {
  return unary_op(
      "neg", a, [](double x) { return -x; },
      [](double, double) { return -1.0; });
}

Tensor scale(const Tensor& a, double s) {
  return unary_op(
      "scale", a, [s](double x) { return s * x; },
      [s](double, double) { return s; });
}

Tensor add_scalar(const Tensor& a, double s) {
  return unary_op(
      "add_scalar", a, [s](double x) { return x + s; },
      [](double, double) { return 1.0; });
}

Tensor relu(const Tensor& a) {
  return unary_op(
      "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& a) {
  return unary_op(
      "sigmoid", a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh_op(const Tensor& a) {
  return unary_op(
      "tanh", a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor exp_op(const Tensor& a) {
  return unary_op(
      "exp", a, [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

Tensor log_op(const Tensor& a) {
  return unary_op(
      "log", a, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Tensor softplus(const Tensor& a) {
  return unary_op(
      "softplus", a,
      [](double x) {
        return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
      },
      [](double x, double) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      });
}

Tensor abs_op(const Tensor& a) {
  return unary_op(
      "abs", a, [](double x) { return std::fabs(x); },
      [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Tensor clamp_min(const Tensor& a, double lo) {
  return unary_op(
      "clamp_min", a, [lo](double x) { return x > lo ? x : lo; },
      [lo](double x, double) { return x > lo ? 1.0 : 0.0; });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.dim(1) != b.dim(0)) {
    throw std::invalid_argument("matmul: incompatible shapes " +
                                shape_str(a.shape()) + " and " +
                                shape_str(b.shape()));
  }
  const int64_t r = a.dim(0), k = a.dim(1), c = b.dim(1);
  std::vector<double> out(static_cast<size_t>(r * c));
  cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, static_cast<int>(r),
              static_cast<int>(c), static_cast<int>(k), 1.0, a.data().data(),
              static_cast<int>(k), b.data().data(), static_cast<int>(c), 0.0,
              out.data(), static_cast<int>(c));
  return Tensor::from_op(
      "matmul", {r, c}, std::move(out), {a, b}, [r, k, c](Node& node) {
        Node* na = node.inputs[0].get();
        Node* nb = node.inputs[1].get();
        if (na->requires_grad) {
          na->ensure_grad();
          // dA += G * B^T
          cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans,
                      static_cast<int>(r), static_cast<int>(k),
                      static_cast<int>(c), 1.0, node.grad.data(),
                      static_cast<int>(c), nb->value.data(),
                      static_cast<int>(c), 1.0, na->grad.data(),
                      static_cast<int>(k));
        }
        if (nb->requires_grad) {
          nb->ensure_grad();
          // dB += A^T * G
          cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans,
                      static_cast<int>(k), static_cast<int>(c),
                      static_cast<int>(r), 1.0, na->value.data(),
                      static_cast<int>(k), node.grad.data(),
                      static_cast<int>(c), 1.0, nb->grad.data(),
                      static_cast<int>(c));
        }
      });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (const double v : a.data()) s += v;
  return Tensor::from_op("sum", {1}, {s}, {a}, [](Node& node) {
    Node* na = node.inputs[0].get();
    if (!na->requires_grad) return;
    na->ensure_grad();
    const double g = node.grad[0];
    for (double& v : na->grad) v += g;
  });
}

Tensor mean(const Tensor& a) {
  const double inv = 1.0 / static_cast<double>(a.size());
  double s = 0.0;
  for (const double v : a.data()) s += v;
  return Tensor::from_op("mean", {1}, {s * inv}, {a}, [inv](Node& node) {
    Node* na = node.inputs[0].get();
    if (!na->requires_grad) return;
    na->ensure_grad();
    const double g = node.grad[0] * inv;
    for (double& v : na->grad) v += g;
  });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.dim(0) != b.dim(0)) {
    throw std::invalid_argument("concat_cols: incompatible shapes " +
                                shape_str(a.shape()) + " and " +
                                shape_str(b.shape()));
  }
  const int64_t r = a.dim(0), ca = a.dim(1), cb = b.dim(1);
  std::vector<double> out(static_cast<size_t>(r * (ca + cb)));
  const auto va = a.data();
  const auto vb = b.data();
  for (int64_t i = 0; i < r; ++i) {
    std::memcpy(&out[static_cast<size_t>(i * (ca + cb))], &va[i * ca],
                static_cast<size_t>(ca) * sizeof(double));
    std::memcpy(&out[static_cast<size_t>(i * (ca + cb) + ca)], &vb[i * cb],
                static_cast<size_t>(cb) * sizeof(double));
  }
  return Tensor::from_op(
      "concat_cols", {r, ca + cb}, std::move(out), {a, b},
      [r, ca, cb](Node& node) {
        Node* na = node.inputs[0].get();
        Node* nb = node.inputs[1].get();
        for (int64_t i = 0; i < r; ++i) {
          if (na->requires_grad) {
            na->ensure_grad();
            for (int64_t j = 0; j < ca; ++j) {
              na->grad[i * ca + j] += node.grad[i * (ca + cb) + j];
            }
          }
          if (nb->requires_grad) {
            nb->ensure_grad();
            for (int64_t j = 0; j < cb; ++j) {
              nb->grad[i * cb + j] += node.grad[i * (ca + cb) + ca + j];
            }
          }
        }
      });
}

Tensor slice_cols(const Tensor& a, int64_t from, int64_t to) {
  if (a.ndim() != 2 || from < 0 || to > a.dim(1) || from >= to) {
    throw std::invalid_argument(
        "slice_cols: range [" + std::to_string(from) + ", " +
        std::to_string(to) + ") invalid for " + shape_str(a.shape()));
  }
  const int64_t r = a.dim(0), c = a.dim(1), w = to - from;
  std::vector<double> out(static_cast<size_t>(r * w));
  const auto va = a.data();
  for (int64_t i = 0; i < r; ++i) {
    std::memcpy(&out[static_cast<size_t>(i * w)], &va[i * c + from],
                static_cast<size_t>(w) * sizeof(double));
  }
  return Tensor::from_op("slice_cols", {r, w}, std::move(out), {a},
                         [r, c, w, from](Node& node) {
                           Node* na = node.inputs[0].get();
                           if (!na->requires_grad) return;
                           na->ensure_grad();
                           for (int64_t i = 0; i < r; ++i) {
                             for (int64_t j = 0; j < w; ++j) {
                               na->grad[i * c + from + j] +=
                                   node.grad[i * w + j];
                             }
                           }
                         });
}

Tensor reshape(const Tensor& a, Shape shape) {
  check_shape("reshape", shape);
  if (numel(shape) != a.size()) {
    throw std::invalid_argument("reshape: " + shape_str(a.shape()) +
                                " to " + shape_str(shape) +
                                " changes element count");
  }
  std::vector<double> out(a.data().begin(), a.data().end());
  return Tensor::from_op("reshape", std::move(shape), std::move(out), {a},
                         [](Node& node) {
                           Node* na = node.inputs[0].get();
                           if (!na->requires_grad) return;
                           na->accumulate(node.grad);
                         });
}

std::vector<Node*> topo_order(const Tensor& root) {
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  // Iterative DFS; recurrent graphs are deep enough to overflow the stack.
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(root.node(), 0);
  seen.insert(root.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;
}

void backward(const Tensor& root) {
  if (root.size() != 1) {
    throw std::invalid_argument("backward: root has shape " +
                                shape_str(root.shape()) +
                                ", expected a scalar");
  }
  std::vector<Node*> order = topo_order(root);
  for (Node* n : order) {
    if (n->backward) n->grad.assign(n->value.size(), 0.0);
  }
  Node* r = root.node();
  r->ensure_grad();
  r->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && n->requires_grad) n->backward(*n);
  }
}

// Little-endian host assumed (x86-64).
void write_tensor(std::ostream& os, const Tensor& t) {
  const uint32_t rank = static_cast<uint32_t>(t.ndim());
  os.write(reinterpret_cast<const char*>(&rank), sizeof(rank));
  for (const int64_t d : t.shape()) {
    os.write(reinterpret_cast<const char*>(&d), sizeof(d));
  }
  os.write(reinterpret_cast<const char*>(t.data().data()),
           static_cast<std::streamsize>(t.size() * sizeof(double)));
  if (!os) throw std::runtime_error("write_tensor: stream write failed");
}

Tensor read_tensor(std::istream& is) {
  uint32_t rank = 0;
  is.read(reinterpret_cast<char*>(&rank), sizeof(rank));
  if (!is) throw std::runtime_error("read_tensor: truncated header");
  if (rank > 8) {
    throw std::runtime_error("read_tensor: implausible rank " +
                             std::to_string(rank));
  }
  Shape shape(rank);
  for (uint32_t i = 0; i < rank; ++i) {
    is.read(reinterpret_cast<char*>(&shape[i]), sizeof(int64_t));
    if (!is || shape[i] <= 0) {
      throw std::runtime_error("read_tensor: bad dim " + std::to_string(i));
    }
  }
  const int64_t n = numel(shape);
  std::vector<double> v(static_cast<size_t>(n));
  is.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) {
    throw std::runtime_error("read_tensor: truncated payload, expected " +
                             std::to_string(n) + " doubles");
  }
  return Tensor::from_vector(std::move(shape), std::move(v));
}

}  // namespace rgc
