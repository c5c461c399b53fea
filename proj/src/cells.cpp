#include "rgc/cells.hpp"

#include <cmath>
#include <stdexcept>

namespace rgc {

namespace {

double sigm(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void check_drive_shapes(const char* op, const Tensor& pre, const Tensor& slope,
                        const Tensor& mask) {
  if (pre.ndim() != 2 || slope.ndim() != 2 || pre.dim(1) != slope.dim(0) ||
      slope.shape() != mask.shape()) {
    throw std::invalid_argument(std::string(op) + ": bad shapes " +
                                shape_str(pre.shape()) + " and " +
                                shape_str(slope.shape()));
  }
}

// Shared triple loop for the two drive sums.  `use_a` distinguishes the
// numerator (s·w·a) from the denominator (s·w).
template <bool use_a>
Tensor ltc_drive(const char* name, const Tensor& pre, const Tensor& slope,
                 const Tensor& offset, const Tensor& w, const Tensor& a,
                 const Tensor& mask) {
  check_drive_shapes(name, pre, slope, mask);
  const int64_t B = pre.dim(0), P = pre.dim(1), H = slope.dim(1);
  const auto pv = pre.data();
  const auto sv = slope.data();
  const auto ov = offset.data();
  const auto wv = w.data();
  const double* av = use_a ? a.data().data() : nullptr;
  const auto mv = mask.data();
  std::vector<double> out(static_cast<size_t>(B * H), 0.0);
  for (int64_t b = 0; b < B; ++b) {
    for (int64_t p = 0; p < P; ++p) {
      const double x = pv[b * P + p];
      for (int64_t h = 0; h < H; ++h) {
        const int64_t ph = p * H + h;
        if (mv[ph] == 0.0) continue;
        const double s = sigm(sv[ph] * (x - ov[ph]));
        const double sw = s * wv[ph];
        out[b * H + h] += use_a ? sw * av[ph] : sw;
      }
    }
  }
  std::vector<Tensor> inputs = use_a
                                   ? std::vector<Tensor>{pre, slope, offset, w, a, mask}
                                   : std::vector<Tensor>{pre, slope, offset, w, mask};
  return Tensor::from_op(
      name, {B, H}, std::move(out), std::move(inputs), [B, P, H](Node& node) {
        Node* npre = node.inputs[0].get();
        Node* nslope = node.inputs[1].get();
        Node* noffset = node.inputs[2].get();
        Node* nw = node.inputs[3].get();
        Node* na = use_a ? node.inputs[4].get() : nullptr;
        Node* nmask = node.inputs[use_a ? 5 : 4].get();
        if (npre->requires_grad) npre->ensure_grad();
        if (nslope->requires_grad) nslope->ensure_grad();
        if (noffset->requires_grad) noffset->ensure_grad();
        if (nw->requires_grad) nw->ensure_grad();
        if (na && na->requires_grad) na->ensure_grad();
        for (int64_t b = 0; b < B; ++b) {
          for (int64_t p = 0; p < P; ++p) {
            const double x = npre->value[b * P + p];
            for (int64_t h = 0; h < H; ++h) {
              const int64_t ph = p * H + h;
              if (nmask->value[ph] == 0.0) continue;
              const double g = node.grad[b * H + h];
              if (g == 0.0) continue;
              const double sl = nslope->value[ph];
              const double arg = sl * (x - noffset->value[ph]);
              const double s = sigm(arg);
              const double ds = s * (1.0 - s);
              const double wa =
                  nw->value[ph] * (use_a ? na->value[ph] : 1.0);
              if (npre->requires_grad) {
                npre->grad[b * P + p] += g * wa * ds * sl;
              }
              if (nslope->requires_grad) {
                nslope->grad[ph] += g * wa * ds * (x - noffset->value[ph]);
              }
              if (noffset->requires_grad) {
                noffset->grad[ph] += g * wa * ds * (-sl);
              }
              if (nw->requires_grad) {
                nw->grad[ph] += g * s * (use_a ? na->value[ph] : 1.0);
              }
              if (na && na->requires_grad) {
                na->grad[ph] += g * s * nw->value[ph];
              }
            }
          }
        }
      });
}

double inverse_softplus(double y) {
  if (y <= 0.0) {
    throw std::invalid_argument("inverse_softplus: value must be positive");
  }
  return y > 20.0 ? y : std::log(std::expm1(y));
}

}  // namespace

Tensor ltc_drive_num(const Tensor& pre, const Tensor& slope,
                     const Tensor& offset, const Tensor& w, const Tensor& a,
                     const Tensor& mask) {
  return ltc_drive<true>("ltc_drive_num", pre, slope, offset, w, a, mask);
}

Tensor ltc_drive_den(const Tensor& pre, const Tensor& slope,
                     const Tensor& offset, const Tensor& w,
                     const Tensor& mask) {
  return ltc_drive<false>("ltc_drive_den", pre, slope, offset, w, {}, mask);
}

std::pair<Tensor, Tensor> wiring_mask(const Wiring& w) {
  const int64_t P = w.total(), H = w.hidden(), S = w.sensory();
  std::vector<double> mask(static_cast<size_t>(P * H), 0.0);
  std::vector<double> pol(static_cast<size_t>(P * H), 1.0);
  for (const Edge& e : w.edges) {
    const int64_t dst_local = e.dst - S;
    if (e.src < 0 || e.src >= P || dst_local < 0 || dst_local >= H) {
      throw std::invalid_argument("wiring_mask: edge outside neuron range");
    }
    mask[e.src * H + dst_local] = 1.0;
    pol[e.src * H + dst_local] = static_cast<double>(e.polarity);
  }
  return {Tensor::from_vector({P, H}, std::move(mask)),
          Tensor::from_vector({P, H}, std::move(pol))};
}

LtcCell::LtcCell(const Wiring& wiring_, int64_t unfold_steps_, double dt_,
                 double init_tau, Rng& rng)
    : wiring(wiring_), unfold_steps(unfold_steps_), dt(dt_) {
  if (unfold_steps < 1) {
    throw std::invalid_argument("LtcCell: unfold_steps must be >= 1");
  }
  if (dt <= 0.0) throw std::invalid_argument("LtcCell: dt must be positive");
  if (init_tau <= 0.0) {
    throw std::invalid_argument("LtcCell: tau must be strictly positive");
  }
  const int64_t P = pre_size(), H = hidden();
  auto [m, pol] = wiring_mask(wiring);
  mask = m;
  tau_raw = Tensor::full({H}, inverse_softplus(init_tau), true);
  bias = Tensor::zeros({H}, true);
  // Init ranges follow common LTC practice: mild sigmoid slopes and
  // sub-unit weights keep the dynamics well inside the stable regime.
  std::vector<double> wv(static_cast<size_t>(P * H));
  std::vector<double> av(static_cast<size_t>(P * H));
  std::vector<double> sv(static_cast<size_t>(P * H));
  std::vector<double> ov(static_cast<size_t>(P * H));
  const auto polv = pol.data();
  for (int64_t i = 0; i < P * H; ++i) {
    wv[i] = inverse_softplus(rng.uniform(0.1, 1.0));
    av[i] = polv[i];
    sv[i] = rng.uniform(3.0, 8.0);
    ov[i] = rng.uniform(0.3, 0.8);
  }
  w_raw = Tensor::from_vector({P, H}, std::move(wv), true);
  a = Tensor::from_vector({P, H}, std::move(av), true);
  slope = Tensor::from_vector({P, H}, std::move(sv), true);
  offset = Tensor::from_vector({P, H}, std::move(ov), true);
}

Tensor ltc_fused_step(const LtcCell& cell, const Tensor& x, const Tensor& u) {
  const Tensor pre = concat_cols(u, x);
  const Tensor w = softplus(cell.w_raw);
  const Tensor tau = cell.tau();
  const Tensor num =
      ltc_drive_num(pre, cell.slope, cell.offset, w, cell.a, cell.mask);
  const Tensor den =
      ltc_drive_den(pre, cell.slope, cell.offset, w, cell.mask);
  const Tensor inv_tau = div(Tensor::scalar(1.0), tau);
  const Tensor numer =
      add(x, scale(add(num, div(cell.bias, tau)), cell.dt));
  const Tensor denom = add_scalar(scale(add(den, inv_tau), cell.dt), 1.0);
  return div(numer, denom);
}

Tensor LtcCell::step(const Tensor& x, const Tensor& u) const {
  Tensor s = x;
  for (int64_t i = 0; i < unfold_steps; ++i) s = ltc_fused_step(*this, s, u);
  return s;
}

int64_t LtcCell::param_count() const {
  const int64_t edges = static_cast<int64_t>(wiring.edges.size());
  return 4 * edges + tau_raw.size() + bias.size();
}

void LtcCell::collect(const std::string& prefix, NamedParams& out) const {
  out.emplace_back(prefix + ".tau_raw", tau_raw);
  out.emplace_back(prefix + ".bias", bias);
  out.emplace_back(prefix + ".w_raw", w_raw);
  out.emplace_back(prefix + ".a", a);
  out.emplace_back(prefix + ".slope", slope);
  out.emplace_back(prefix + ".offset", offset);
}

CfcCell::CfcCell(const Wiring& wiring_, double t_, Rng& rng)
    : wiring(wiring_), t(t_) {
  if (t < 0.0) throw std::invalid_argument("CfcCell: t must be >= 0");
  const int64_t P = pre_size(), H = hidden();
  mask = wiring_mask(wiring).first;
  wf = xavier_uniform({P, H}, P, H, rng);
  wg = xavier_uniform({P, H}, P, H, rng);
  wh = xavier_uniform({P, H}, P, H, rng);
  bf = Tensor::zeros({H}, true);
  bg = Tensor::zeros({H}, true);
  bh = Tensor::zeros({H}, true);
  timescale = Tensor::full({H}, 1.0, true);
}

Tensor cfc_step(const CfcCell& cell, const Tensor& x, const Tensor& u,
                double t) {
  if (t < 0.0) throw std::invalid_argument("cfc_step: t must be >= 0");
  const Tensor z = concat_cols(u, x);
  const Tensor f = add(matmul(z, mul(cell.wf, cell.mask)), cell.bf);
  const Tensor g = tanh_op(add(matmul(z, mul(cell.wg, cell.mask)), cell.bg));
  const Tensor h = tanh_op(add(matmul(z, mul(cell.wh, cell.mask)), cell.bh));
  const Tensor gate = sigmoid(scale(mul(f, cell.timescale), -t));
  return add(mul(gate, g), mul(sub(Tensor::scalar(1.0), gate), h));
}

Tensor CfcCell::step(const Tensor& x, const Tensor& u) const {
  return cfc_step(*this, x, u, t);
}

int64_t CfcCell::param_count() const {
  const int64_t edges = static_cast<int64_t>(wiring.edges.size());
  return 3 * (edges + hidden()) + timescale.size();
}

void CfcCell::collect(const std::string& prefix, NamedParams& out) const {
  out.emplace_back(prefix + ".wf", wf);
  out.emplace_back(prefix + ".wg", wg);
  out.emplace_back(prefix + ".wh", wh);
  out.emplace_back(prefix + ".bf", bf);
  out.emplace_back(prefix + ".bg", bg);
  out.emplace_back(prefix + ".bh", bh);
  out.emplace_back(prefix + ".timescale", timescale);
}

}  // namespace rgc
