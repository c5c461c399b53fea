#include "rgc/nn.hpp"

#include <cblas.h>

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace rgc {

Tensor xavier_uniform(Shape shape, int64_t fan_in, int64_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> v(static_cast<size_t>(numel(shape)));
  for (double& x : v) x = rng.uniform(-bound, bound);
  return Tensor::from_vector(std::move(shape), std::move(v), true);
}

Tensor orthogonal(int64_t n, Rng& rng) {
  std::vector<double> a(static_cast<size_t>(n * n));
  for (double& x : a) x = rng.normal();
  // Modified Gram-Schmidt with one re-orthogonalization pass per column.
  for (int64_t j = 0; j < n; ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (int64_t i = 0; i < j; ++i) {
        double r = 0.0;
        for (int64_t k = 0; k < n; ++k) r += a[k * n + i] * a[k * n + j];
        for (int64_t k = 0; k < n; ++k) a[k * n + j] -= r * a[k * n + i];
      }
    }
    double norm = 0.0;
    for (int64_t k = 0; k < n; ++k) norm += a[k * n + j] * a[k * n + j];
    norm = std::sqrt(norm);
    if (norm < 1e-12) {
      for (int64_t k = 0; k < n; ++k) a[k * n + j] = rng.normal();
      --j;
      continue;
    }
    for (int64_t k = 0; k < n; ++k) a[k * n + j] /= norm;
  }
  return Tensor::from_vector({n, n}, std::move(a), true);
}

Activation activation_from_string(const std::string& s) {
  if (s == "none") return Activation::none;
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  throw std::invalid_argument("unknown activation: " + s);
}

DenseLayer::DenseLayer(int64_t in, int64_t out, Activation act, Rng& rng)
    : weight(xavier_uniform({in, out}, in, out, rng)),
      bias(Tensor::zeros({out}, true)),
      activation(act) {}

Tensor DenseLayer::forward(const Tensor& x) const {
  Tensor y = add(matmul(x, weight), bias);
  switch (activation) {
    case Activation::none:
      return y;
    case Activation::relu:
      return relu(y);
    case Activation::tanh:
      return tanh_op(y);
  }
  return y;
}

void DenseLayer::collect(const std::string& prefix, NamedParams& out) const {
  out.emplace_back(prefix + ".weight", weight);
  out.emplace_back(prefix + ".bias", bias);
}

Conv2dLayer::Conv2dLayer(int64_t in_c, int64_t out_c, int64_t kh, int64_t kw,
                         int stride_, int padding_, Rng& rng)
    : kernels(xavier_uniform({out_c, in_c, kh, kw}, in_c * kh * kw,
                             out_c * kh * kw, rng)),
      bias(Tensor::zeros({out_c}, true)),
      stride(stride_),
      padding(padding_) {}

void Conv2dLayer::collect(const std::string& prefix, NamedParams& out) const {
  out.emplace_back(prefix + ".kernels", kernels);
  out.emplace_back(prefix + ".bias", bias);
}

namespace {

struct ConvDims {
  int64_t B, C, H, W, OC, KH, KW, OH, OW;
  int64_t stride, pad;
  int64_t Hp() const { return H + 2 * pad; }
  int64_t Wp() const { return W + 2 * pad; }
  // Column count of the stride-1 full-row product: all starting positions
  // from the first window to the last, including the wrap-around ones whose
  // results are discarded on extraction.
  int64_t Nfull() const { return (OH - 1) * Wp() + OW; }
};

void pad_sample(const double* xs, const ConvDims& d, double* xpad) {
  const int64_t Hp = d.Hp(), Wp = d.Wp();
  std::memset(xpad, 0, static_cast<size_t>(d.C * Hp * Wp) * sizeof(double));
  for (int64_t c = 0; c < d.C; ++c) {
    for (int64_t y = 0; y < d.H; ++y) {
      std::memcpy(&xpad[(c * Hp + y + d.pad) * Wp + d.pad],
                  &xs[(c * d.H + y) * d.W],
                  static_cast<size_t>(d.W) * sizeof(double));
    }
  }
}

// kernels [OC, C, KH, KW] -> per-offset slices [KH*KW][OC, C].
std::vector<double> pack_kernels(const double* k, const ConvDims& d) {
  std::vector<double> pack(static_cast<size_t>(d.KH * d.KW * d.OC * d.C));
  for (int64_t o = 0; o < d.OC; ++o) {
    for (int64_t c = 0; c < d.C; ++c) {
      for (int64_t t = 0; t < d.KH * d.KW; ++t) {
        pack[(t * d.OC + o) * d.C + c] = k[(o * d.C + c) * d.KH * d.KW + t];
      }
    }
  }
  return pack;
}

// Stride-1 path: one dgemm per kernel offset over a padded full-row layout.
// Wrap-around columns are computed and discarded; they never overflow the
// per-channel slab because the last window starts at the bottom-right corner.
void conv_fwd_wrap(const double* x, const double* pack, const double* bias,
                   double* out, const ConvDims& d) {
  const int64_t Hp = d.Hp(), Wp = d.Wp(), Nf = d.Nfull();
  std::vector<double> xpad(d.pad > 0 ? static_cast<size_t>(d.C * Hp * Wp) : 0);
  std::vector<double> out_full(static_cast<size_t>(d.OC * Nf));
  for (int64_t b = 0; b < d.B; ++b) {
    const double* xs = &x[b * d.C * d.H * d.W];
    const double* xp = xs;
    if (d.pad > 0) {
      pad_sample(xs, d, xpad.data());
      xp = xpad.data();
    }
    for (int64_t t = 0; t < d.KH * d.KW; ++t) {
      const int64_t off = (t / d.KW) * Wp + (t % d.KW);
      cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans,
                  static_cast<int>(d.OC), static_cast<int>(Nf),
                  static_cast<int>(d.C), 1.0, &pack[t * d.OC * d.C],
                  static_cast<int>(d.C), xp + off, static_cast<int>(Hp * Wp),
                  t == 0 ? 0.0 : 1.0, out_full.data(), static_cast<int>(Nf));
    }
    double* os = &out[b * d.OC * d.OH * d.OW];
    for (int64_t o = 0; o < d.OC; ++o) {
      for (int64_t y = 0; y < d.OH; ++y) {
        for (int64_t xi = 0; xi < d.OW; ++xi) {
          os[(o * d.OH + y) * d.OW + xi] =
              out_full[o * Nf + y * Wp + xi] + bias[o];
        }
      }
    }
  }
}

void conv_bwd_wrap(const double* x, const double* pack, const double* g,
                   double* dx, double* dk, double* db, const ConvDims& d) {
  const int64_t Hp = d.Hp(), Wp = d.Wp(), Nf = d.Nfull();
  std::vector<double> xpad(d.pad > 0 ? static_cast<size_t>(d.C * Hp * Wp) : 0);
  std::vector<double> gfull(static_cast<size_t>(d.OC * Nf));
  std::vector<double> dxpad(dx ? static_cast<size_t>(d.C * Hp * Wp) : 0);
  std::vector<double> dpack(dk ? static_cast<size_t>(d.KH * d.KW * d.OC * d.C)
                               : 0);
  for (int64_t b = 0; b < d.B; ++b) {
    const double* gs = &g[b * d.OC * d.OH * d.OW];
    std::fill(gfull.begin(), gfull.end(), 0.0);
    for (int64_t o = 0; o < d.OC; ++o) {
      for (int64_t y = 0; y < d.OH; ++y) {
        for (int64_t xi = 0; xi < d.OW; ++xi) {
          gfull[o * Nf + y * Wp + xi] = gs[(o * d.OH + y) * d.OW + xi];
        }
      }
      if (db) {
        double s = 0.0;
        for (int64_t i = 0; i < d.OH * d.OW; ++i) s += gs[o * d.OH * d.OW + i];
        db[o] += s;
      }
    }
    if (dk) {
      const double* xs = &x[b * d.C * d.H * d.W];
      const double* xp = xs;
      if (d.pad > 0) {
        pad_sample(xs, d, xpad.data());
        xp = xpad.data();
      }
      for (int64_t t = 0; t < d.KH * d.KW; ++t) {
        const int64_t off = (t / d.KW) * Wp + (t % d.KW);
        cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans,
                    static_cast<int>(d.OC), static_cast<int>(d.C),
                    static_cast<int>(Nf), 1.0, gfull.data(),
                    static_cast<int>(Nf), xp + off, static_cast<int>(Hp * Wp),
                    1.0, &dpack[t * d.OC * d.C], static_cast<int>(d.C));
      }
    }
    if (dx) {
      std::fill(dxpad.begin(), dxpad.end(), 0.0);
      for (int64_t t = 0; t < d.KH * d.KW; ++t) {
        const int64_t off = (t / d.KW) * Wp + (t % d.KW);
        cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans,
                    static_cast<int>(d.C), static_cast<int>(Nf),
                    static_cast<int>(d.OC), 1.0, &pack[t * d.OC * d.C],
                    static_cast<int>(d.C), gfull.data(), static_cast<int>(Nf),
                    1.0, dxpad.data() + off, static_cast<int>(Hp * Wp));
      }
      double* dxs = &dx[b * d.C * d.H * d.W];
      for (int64_t c = 0; c < d.C; ++c) {
        for (int64_t y = 0; y < d.H; ++y) {
          for (int64_t xi = 0; xi < d.W; ++xi) {
            dxs[(c * d.H + y) * d.W + xi] +=
                dxpad[(c * Hp + y + d.pad) * Wp + xi + d.pad];
          }
        }
      }
    }
  }
  if (dk) {
    for (int64_t o = 0; o < d.OC; ++o) {
      for (int64_t c = 0; c < d.C; ++c) {
        for (int64_t t = 0; t < d.KH * d.KW; ++t) {
          dk[(o * d.C + c) * d.KH * d.KW + t] += dpack[(t * d.OC + o) * d.C + c];
        }
      }
    }
  }
}

// Generic strided path via im2col.
void im2col(const double* xp, const ConvDims& d, double* col) {
  const int64_t Hp = d.Hp(), Wp = d.Wp(), P = d.OH * d.OW;
  for (int64_t c = 0; c < d.C; ++c) {
    for (int64_t ky = 0; ky < d.KH; ++ky) {
      for (int64_t kx = 0; kx < d.KW; ++kx) {
        double* row = &col[((c * d.KH + ky) * d.KW + kx) * P];
        for (int64_t y = 0; y < d.OH; ++y) {
          const double* src = &xp[(c * Hp + y * d.stride + ky) * Wp + kx];
          for (int64_t xi = 0; xi < d.OW; ++xi) {
            row[y * d.OW + xi] = src[xi * d.stride];
          }
        }
      }
    }
  }
}

void conv_fwd_im2col(const double* x, const double* k, const double* bias,
                     double* out, const ConvDims& d) {
  const int64_t Hp = d.Hp(), Wp = d.Wp(), P = d.OH * d.OW;
  const int64_t KK = d.C * d.KH * d.KW;
  std::vector<double> xpad(d.pad > 0 ? static_cast<size_t>(d.C * Hp * Wp) : 0);
  std::vector<double> col(static_cast<size_t>(KK * P));
  for (int64_t b = 0; b < d.B; ++b) {
    const double* xs = &x[b * d.C * d.H * d.W];
    const double* xp = xs;
    if (d.pad > 0) {
      pad_sample(xs, d, xpad.data());
      xp = xpad.data();
    }
    im2col(xp, d, col.data());
    double* os = &out[b * d.OC * P];
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans,
                static_cast<int>(d.OC), static_cast<int>(P),
                static_cast<int>(KK), 1.0, k, static_cast<int>(KK), col.data(),
                static_cast<int>(P), 0.0, os, static_cast<int>(P));
    for (int64_t o = 0; o < d.OC; ++o) {
      for (int64_t i = 0; i < P; ++i) os[o * P + i] += bias[o];
    }
  }
}

void conv_bwd_im2col(const double* x, const double* k, const double* g,
                     double* dx, double* dk, double* db, const ConvDims& d) {
  const int64_t Hp = d.Hp(), Wp = d.Wp(), P = d.OH * d.OW;
  const int64_t KK = d.C * d.KH * d.KW;
  std::vector<double> xpad(d.pad > 0 ? static_cast<size_t>(d.C * Hp * Wp) : 0);
  std::vector<double> col(static_cast<size_t>(KK * P));
  std::vector<double> dcol(dx ? static_cast<size_t>(KK * P) : 0);
  for (int64_t b = 0; b < d.B; ++b) {
    const double* gs = &g[b * d.OC * P];
    if (db) {
      for (int64_t o = 0; o < d.OC; ++o) {
        double s = 0.0;
        for (int64_t i = 0; i < P; ++i) s += gs[o * P + i];
        db[o] += s;
      }
    }
    if (dk) {
      const double* xs = &x[b * d.C * d.H * d.W];
      const double* xp = xs;
      if (d.pad > 0) {
        pad_sample(xs, d, xpad.data());
        xp = xpad.data();
      }
      im2col(xp, d, col.data());
      cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans,
                  static_cast<int>(d.OC), static_cast<int>(KK),
                  static_cast<int>(P), 1.0, gs, static_cast<int>(P), col.data(),
                  static_cast<int>(P), 1.0, dk, static_cast<int>(KK));
    }
    if (dx) {
      cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans,
                  static_cast<int>(KK), static_cast<int>(P),
                  static_cast<int>(d.OC), 1.0, k, static_cast<int>(KK), gs,
                  static_cast<int>(P), 0.0, dcol.data(), static_cast<int>(P));
      double* dxs = &dx[b * d.C * d.H * d.W];
      for (int64_t c = 0; c < d.C; ++c) {
        for (int64_t ky = 0; ky < d.KH; ++ky) {
          for (int64_t kx = 0; kx < d.KW; ++kx) {
            const double* row = &dcol[((c * d.KH + ky) * d.KW + kx) * P];
            for (int64_t y = 0; y < d.OH; ++y) {
              const int64_t iy = y * d.stride + ky - d.pad;
              if (iy < 0 || iy >= d.H) continue;
              for (int64_t xi = 0; xi < d.OW; ++xi) {
                const int64_t ix = xi * d.stride + kx - d.pad;
                if (ix < 0 || ix >= d.W) continue;
                dxs[(c * d.H + iy) * d.W + ix] += row[y * d.OW + xi];
              }
            }
          }
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& kernels, const Tensor& bias,
              int stride, int padding) {
  if (x.ndim() != 4 || kernels.ndim() != 4) {
    throw std::invalid_argument("conv2d: expected 4-d input and kernels, got " +
                                shape_str(x.shape()) + " and " +
                                shape_str(kernels.shape()));
  }
  if (stride < 1 || padding < 0) {
    throw std::invalid_argument("conv2d: bad stride/padding");
  }
  ConvDims d{x.dim(0), x.dim(1), x.dim(2), x.dim(3), kernels.dim(0),
             kernels.dim(2), kernels.dim(3), 0, 0, stride, padding};
  if (kernels.dim(1) != d.C) {
    throw std::invalid_argument(
        "conv2d: input has " + std::to_string(d.C) + " channels, kernels " +
        shape_str(kernels.shape()) + " expect " +
        std::to_string(kernels.dim(1)));
  }
  d.OH = (d.H + 2 * d.pad - d.KH) / d.stride + 1;
  d.OW = (d.W + 2 * d.pad - d.KW) / d.stride + 1;
  if (d.H + 2 * d.pad < d.KH || d.W + 2 * d.pad < d.KW) {
    throw std::invalid_argument("conv2d: kernel larger than padded input");
  }
  std::vector<double> out(static_cast<size_t>(d.B * d.OC * d.OH * d.OW));
  if (stride == 1) {
    const std::vector<double> pack = pack_kernels(kernels.data().data(), d);
    conv_fwd_wrap(x.data().data(), pack.data(), bias.data().data(), out.data(),
                  d);
  } else {
    conv_fwd_im2col(x.data().data(), kernels.data().data(),
                    bias.data().data(), out.data(), d);
  }
  return Tensor::from_op(
      "conv2d", {d.B, d.OC, d.OH, d.OW}, std::move(out), {x, kernels, bias},
      [d](Node& node) {
        Node* nx = node.inputs[0].get();
        Node* nk = node.inputs[1].get();
        Node* nb = node.inputs[2].get();
        double* dx = nullptr;
        double* dk = nullptr;
        double* db = nullptr;
        if (nx->requires_grad) {
          nx->ensure_grad();
          dx = nx->grad.data();
        }
        if (nk->requires_grad) {
          nk->ensure_grad();
          dk = nk->grad.data();
        }
        if (nb->requires_grad) {
          nb->ensure_grad();
          db = nb->grad.data();
        }
        if (d.stride == 1) {
          const std::vector<double> pack = pack_kernels(nk->value.data(), d);
          conv_bwd_wrap(nx->value.data(), pack.data(), node.grad.data(), dx,
                        dk, db, d);
        } else {
          conv_bwd_im2col(nx->value.data(), nk->value.data(), node.grad.data(),
                          dx, dk, db, d);
        }
      });
}

Tensor layer_norm_chw(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                      double eps) {
  if (x.ndim() != 4 || gamma.ndim() != 1 || gamma.dim(0) != x.dim(1) ||
      beta.shape() != gamma.shape()) {
    throw std::invalid_argument("layer_norm_chw: bad shapes " +
                                shape_str(x.shape()) + ", " +
                                shape_str(gamma.shape()) + ", " +
                                shape_str(beta.shape()));
  }
  const int64_t B = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
  const int64_t n = C * HW;
  const auto xv = x.data();
  const auto gv = gamma.data();
  const auto bv = beta.data();
  std::vector<double> out(static_cast<size_t>(B * n));
  auto xhat = std::make_shared<std::vector<double>>(static_cast<size_t>(B * n));
  auto inv_std = std::make_shared<std::vector<double>>(static_cast<size_t>(B));
  for (int64_t b = 0; b < B; ++b) {
    const double* xs = &xv[b * n];
    double m = 0.0;
    for (int64_t i = 0; i < n; ++i) m += xs[i];
    m /= static_cast<double>(n);
    double var = 0.0;
    for (int64_t i = 0; i < n; ++i) var += (xs[i] - m) * (xs[i] - m);
    var /= static_cast<double>(n);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[b] = is;
    for (int64_t c = 0; c < C; ++c) {
      for (int64_t i = 0; i < HW; ++i) {
        const int64_t idx = b * n + c * HW + i;
        const double xh = (xv[idx] - m) * is;
        (*xhat)[idx] = xh;
        out[idx] = gv[c] * xh + bv[c];
      }
    }
  }
  return Tensor::from_op(
      "layer_norm_chw", x.shape(), std::move(out), {x, gamma, beta},
      [B, C, HW, n, xhat, inv_std](Node& node) {
        Node* nx = node.inputs[0].get();
        Node* ng = node.inputs[1].get();
        Node* nb = node.inputs[2].get();
        const auto& xh = *xhat;
        if (ng->requires_grad) {
          ng->ensure_grad();
          for (int64_t b = 0; b < B; ++b) {
            for (int64_t c = 0; c < C; ++c) {
              double s = 0.0;
              const int64_t base = b * n + c * HW;
              for (int64_t i = 0; i < HW; ++i) {
                s += node.grad[base + i] * xh[base + i];
              }
              ng->grad[c] += s;
            }
          }
        }
        if (nb->requires_grad) {
          nb->ensure_grad();
          for (int64_t b = 0; b < B; ++b) {
            for (int64_t c = 0; c < C; ++c) {
              double s = 0.0;
              const int64_t base = b * n + c * HW;
              for (int64_t i = 0; i < HW; ++i) s += node.grad[base + i];
              nb->grad[c] += s;
            }
          }
        }
        if (!nx->requires_grad) return;
        nx->ensure_grad();
        const auto gv = ng->value.data();
        for (int64_t b = 0; b < B; ++b) {
          double s1 = 0.0, s2 = 0.0;
          for (int64_t c = 0; c < C; ++c) {
            const int64_t base = b * n + c * HW;
            for (int64_t i = 0; i < HW; ++i) {
              const double dxh = node.grad[base + i] * gv[c];
              s1 += dxh;
              s2 += dxh * xh[base + i];
            }
          }
          s1 /= static_cast<double>(n);
          s2 /= static_cast<double>(n);
          const double is = (*inv_std)[b];
          for (int64_t c = 0; c < C; ++c) {
            const int64_t base = b * n + c * HW;
            for (int64_t i = 0; i < HW; ++i) {
              const double dxh = node.grad[base + i] * gv[c];
              nx->grad[base + i] += is * (dxh - s1 - xh[base + i] * s2);
            }
          }
        }
      });
}

Tensor max_pool2x2(const Tensor& x) {
  if (x.ndim() != 4) {
    throw std::invalid_argument("max_pool2x2: expected 4-d input, got " +
                                shape_str(x.shape()));
  }
  const int64_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int64_t OH = H / 2, OW = W / 2;
  if (OH == 0 || OW == 0) {
    throw std::invalid_argument("max_pool2x2: input " + shape_str(x.shape()) +
                                " too small");
  }
  const auto xv = x.data();
  std::vector<double> out(static_cast<size_t>(B * C * OH * OW));
  auto argmax =
      std::make_shared<std::vector<int64_t>>(static_cast<size_t>(B * C * OH * OW));
  int64_t oi = 0;
  for (int64_t bc = 0; bc < B * C; ++bc) {
    const double* plane = &xv[bc * H * W];
    for (int64_t y = 0; y < OH; ++y) {
      for (int64_t xi = 0; xi < OW; ++xi) {
        int64_t best = (2 * y) * W + 2 * xi;
        double bv = plane[best];
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const int64_t idx = (2 * y + dy) * W + 2 * xi + dx;
            if (plane[idx] > bv) {
              bv = plane[idx];
              best = idx;
            }
          }
        }
        out[oi] = bv;
        (*argmax)[oi] = bc * H * W + best;
        ++oi;
      }
    }
  }
  return Tensor::from_op("max_pool2x2", {B, C, OH, OW}, std::move(out), {x},
                         [argmax](Node& node) {
                           Node* nx = node.inputs[0].get();
                           if (!nx->requires_grad) return;
                           nx->ensure_grad();
                           const auto& am = *argmax;
                           for (size_t i = 0; i < am.size(); ++i) {
                             nx->grad[am[i]] += node.grad[i];
                           }
                         });
}

Encoder::Encoder(EncoderConfig cfg_, Rng& rng) : cfg(std::move(cfg_)) {
  if (cfg.channels.size() != 4) {
    throw std::invalid_argument("Encoder: expected 4 block channel counts");
  }
  int64_t in_c = cfg.frames;
  int64_t h = cfg.height, w = cfg.width;
  for (size_t i = 0; i < cfg.channels.size(); ++i) {
    EncodingBlock blk;
    blk.conv = Conv2dLayer(in_c, cfg.channels[i], 3, 3, 1, 1, rng);
    blk.gamma = Tensor::full({cfg.channels[i]}, 1.0, true);
    blk.beta = Tensor::zeros({cfg.channels[i]}, true);
    blk.pool = i < 3;
    if (blk.pool) {
      h /= 2;
      w /= 2;
    }
    in_c = cfg.channels[i];
    blocks.push_back(std::move(blk));
  }
  head = DenseLayer(in_c * h * w, cfg.latent, Activation::none, rng);
}

Tensor Encoder::forward(const Tensor& frames) const {
  if (frames.ndim() != 4 || frames.dim(1) != cfg.frames ||
      frames.dim(2) != cfg.height || frames.dim(3) != cfg.width) {
    throw std::invalid_argument(
        "encoder_forward: expected [B, " + std::to_string(cfg.frames) + ", " +
        std::to_string(cfg.height) + ", " + std::to_string(cfg.width) +
        "], got " + shape_str(frames.shape()));
  }
  Tensor x = frames;
  for (const EncodingBlock& blk : blocks) {
    x = relu(layer_norm_chw(blk.conv.forward(x), blk.gamma, blk.beta));
    if (blk.pool) x = max_pool2x2(x);
  }
  x = reshape(x, {x.dim(0), x.dim(1) * x.dim(2) * x.dim(3)});
  return head.forward(x);
}

int64_t Encoder::param_count() const {
  int64_t n = head.param_count();
  for (const EncodingBlock& blk : blocks) {
    n += blk.conv.param_count() + blk.gamma.size() + blk.beta.size();
  }
  return n;
}

void Encoder::collect(const std::string& prefix, NamedParams& out) const {
  for (size_t i = 0; i < blocks.size(); ++i) {
    const std::string p = prefix + ".block" + std::to_string(i);
    blocks[i].conv.collect(p + ".conv", out);
    out.emplace_back(p + ".gamma", blocks[i].gamma);
    out.emplace_back(p + ".beta", blocks[i].beta);
  }
  head.collect(prefix + ".head", out);
}

namespace {

// [L+H, H]: input rows Xavier, hidden rows orthogonal.
Tensor lstm_gate_matrix(int64_t input, int64_t hidden, Rng& rng) {
  Tensor w = xavier_uniform({input + hidden, hidden}, input + hidden, hidden,
                            rng);
  const Tensor q = orthogonal(hidden, rng);
  auto wv = w.mutable_data();
  const auto qv = q.data();
  for (int64_t i = 0; i < hidden; ++i) {
    for (int64_t j = 0; j < hidden; ++j) {
      wv[(input + i) * hidden + j] = qv[i * hidden + j];
    }
  }
  return w;
}

}  // namespace

LstmCell::LstmCell(int64_t input, int64_t hidden, Rng& rng)
    : wi(lstm_gate_matrix(input, hidden, rng)),
      wf(lstm_gate_matrix(input, hidden, rng)),
      wg(lstm_gate_matrix(input, hidden, rng)),
      wo(lstm_gate_matrix(input, hidden, rng)),
      bi(Tensor::zeros({hidden}, true)),
      bf(Tensor::zeros({hidden}, true)),
      bg(Tensor::zeros({hidden}, true)),
      bo(Tensor::zeros({hidden}, true)),
      input_size(input),
      hidden_size(hidden) {}

std::pair<Tensor, Tensor> LstmCell::step(const Tensor& x, const Tensor& h,
                                         const Tensor& c) const {
  const Tensor z = concat_cols(x, h);
  const Tensor i = sigmoid(add(matmul(z, wi), bi));
  const Tensor f = sigmoid(add(matmul(z, wf), bf));
  const Tensor g = tanh_op(add(matmul(z, wg), bg));
  const Tensor o = sigmoid(add(matmul(z, wo), bo));
  const Tensor c_next = add(mul(f, c), mul(i, g));
  const Tensor h_next = mul(o, tanh_op(c_next));
  return {h_next, c_next};
}

int64_t LstmCell::param_count() const {
  return wi.size() + wf.size() + wg.size() + wo.size() + bi.size() +
         bf.size() + bg.size() + bo.size();
}

void LstmCell::collect(const std::string& prefix, NamedParams& out) const {
  out.emplace_back(prefix + ".wi", wi);
  out.emplace_back(prefix + ".wf", wf);
  out.emplace_back(prefix + ".wg", wg);
  out.emplace_back(prefix + ".wo", wo);
  out.emplace_back(prefix + ".bi", bi);
  out.emplace_back(prefix + ".bf", bf);
  out.emplace_back(prefix + ".bg", bg);
  out.emplace_back(prefix + ".bo", bo);
}

}  // namespace rgc
