#pragma once

#include <cstdint>
#include <utility>

#include "rgc/nn.hpp"
#include "rgc/rng.hpp"
#include "rgc/tensor.hpp"
#include "rgc/wiring.hpp"

namespace rgc {

// Synapse drive sums for the LTC update.  pre [B, P] holds [u ⊕ x]; the
// per-synapse matrices are [P, H]; mask zeroes non-edges.
// num[b,h] = Σ_p mask·σ(slope·(pre−offset))·w·a
// den[b,h] = Σ_p mask·σ(slope·(pre−offset))·w
Tensor ltc_drive_num(const Tensor& pre, const Tensor& slope,
                     const Tensor& offset, const Tensor& w, const Tensor& a,
                     const Tensor& mask);
Tensor ltc_drive_den(const Tensor& pre, const Tensor& slope,
                     const Tensor& offset, const Tensor& w, const Tensor& mask);

// Liquid time-constant cell over an NCP wiring.  τ and the synapse weights
// are stored through softplus so they stay strictly positive under training,
// which keeps the fused semi-implicit step unconditionally stable.
struct LtcCell {
  Wiring wiring;
  Tensor tau_raw;  // [H], τ = softplus(tau_raw)
  Tensor bias;     // [H]
  Tensor w_raw;    // [P, H], w = softplus(w_raw)
  Tensor a;        // [P, H] synaptic target/reversal value
  Tensor slope;    // [P, H]
  Tensor offset;   // [P, H]
  Tensor mask;     // [P, H], constant 0/1
  int64_t unfold_steps = 6;
  double dt = 1.0;

  LtcCell() = default;
  LtcCell(const Wiring& wiring, int64_t unfold_steps, double dt,
          double init_tau, Rng& rng);

  int64_t hidden() const { return wiring.hidden(); }
  int64_t pre_size() const { return wiring.total(); }
  Tensor tau() const { return softplus(tau_raw); }

  // unfold_steps applications of the fused update on a held input frame.
  Tensor step(const Tensor& x, const Tensor& u) const;
  int64_t param_count() const;  // counts only synapses present in the wiring
  void collect(const std::string& prefix, NamedParams& out) const;
};

// One fused semi-implicit update:
// x' = (x + dt·(num + bias/τ)) / (1 + dt·(1/τ + den)).
Tensor ltc_fused_step(const LtcCell& cell, const Tensor& x, const Tensor& u);

// Closed-form continuous-time cell: x' = σ(−f·t·timescale)⊙g + (1−σ)⊙h with
// linear head f and tanh heads g, h over [u ⊕ x], all masked by the wiring.
struct CfcCell {
  Wiring wiring;
  Tensor wf, wg, wh;  // [P, H]
  Tensor bf, bg, bh;  // [H]
  Tensor timescale;   // [H], learnable, init 1
  Tensor mask;        // [P, H], constant 0/1
  double t = 1.0;     // elapsed time per step

  CfcCell() = default;
  CfcCell(const Wiring& wiring, double t, Rng& rng);

  int64_t hidden() const { return wiring.hidden(); }
  int64_t pre_size() const { return wiring.total(); }

  Tensor step(const Tensor& x, const Tensor& u) const;  // uses this->t
  int64_t param_count() const;
  void collect(const std::string& prefix, NamedParams& out) const;
};

Tensor cfc_step(const CfcCell& cell, const Tensor& x, const Tensor& u,
                double t);

// 0/1 mask and polarity (+1/-1 on edges, +1 elsewhere) as [P, H] tensors.
std::pair<Tensor, Tensor> wiring_mask(const Wiring& w);

}  // namespace rgc
