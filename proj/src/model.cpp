#include "rgc/model.hpp"

#include <cstring>
#include <stdexcept>

#include "rgc/rng.hpp"

namespace rgc {

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "convnet") return ModelKind::convnet;
  if (s == "lstm") return ModelKind::lstm;
  if (s == "ltc") return ModelKind::ltc;
  if (s == "cfc") return ModelKind::cfc;
  throw std::invalid_argument("unknown model kind: " + s);
}

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::convnet:
      return "convnet";
    case ModelKind::lstm:
      return "lstm";
    case ModelKind::ltc:
      return "ltc";
    case ModelKind::cfc:
      return "cfc";
  }
  return "?";
}

void SequencePlan::validate() const {
  if (m < 1 || n < 1 || w < 0 || w > n - 1) {
    throw std::invalid_argument(
        "SequencePlan: need m >= 1, n >= 1, 0 <= w <= n-1; got m=" +
        std::to_string(m) + " n=" + std::to_string(n) +
        " w=" + std::to_string(w));
  }
}

Tensor extract_subsequence(const Tensor& frames, int64_t start, int64_t n) {
  const int64_t B = frames.dim(0), T = frames.dim(1);
  const int64_t HW = frames.dim(2) * frames.dim(3);
  if (start < 0 || start + n > T) {
    throw std::invalid_argument("extract_subsequence: window [" +
                                std::to_string(start) + ", " +
                                std::to_string(start + n) + ") outside T=" +
                                std::to_string(T));
  }
  const auto src = frames.data();
  std::vector<double> out(static_cast<size_t>(B * n * HW));
  for (int64_t b = 0; b < B; ++b) {
    std::memcpy(&out[b * n * HW], &src[(b * T + start) * HW],
                static_cast<size_t>(n * HW) * sizeof(double));
  }
  return Tensor::from_vector({B, n, frames.dim(2), frames.dim(3)},
                             std::move(out));
}

namespace {

void check_frames(const Tensor& frames, const ModelConfig& cfg) {
  const int64_t want = cfg.plan.total_frames();
  if (frames.ndim() != 4 || frames.dim(2) != cfg.height ||
      frames.dim(3) != cfg.width) {
    throw std::invalid_argument("forward: expected frames [B, " +
                                std::to_string(want) + ", " +
                                std::to_string(cfg.height) + ", " +
                                std::to_string(cfg.width) + "], got " +
                                shape_str(frames.shape()));
  }
  if (frames.dim(1) != want) {
    throw std::invalid_argument(
        "forward: plan " + std::to_string(cfg.plan.m) + "x" +
        std::to_string(cfg.plan.n) + " overlap " + std::to_string(cfg.plan.w) +
        " expects " + std::to_string(want) + " frames, got " +
        std::to_string(frames.dim(1)));
  }
}

std::vector<Tensor> values_of(const NamedParams& named) {
  std::vector<Tensor> v;
  v.reserve(named.size());
  for (const auto& [name, t] : named) v.push_back(t);
  return v;
}

class ConvNetModel final : public Model {
 public:
  ConvNetModel(ModelConfig cfg, uint64_t seed) : Model(std::move(cfg)) {
    cfg_.plan.validate();
    if (cfg_.plan.m != 1) {
      throw std::invalid_argument(
          "convnet processes a single frame stack; use plan M=1");
    }
    Rng rng = Rng(seed).derive("convnet");
    conv1_ = Conv2dLayer(cfg_.plan.n, 8, 15, 15, 1, 0, rng);
    conv2_ = Conv2dLayer(8, 8, 11, 11, 1, 0, rng);
    const int64_t h = cfg_.height - 15 + 1 - 11 + 1;
    const int64_t w = cfg_.width - 15 + 1 - 11 + 1;
    if (h < 1 || w < 1) {
      throw std::invalid_argument("convnet: input smaller than kernel stack");
    }
    flat_ = 8 * h * w;
    dense_ = DenseLayer(flat_, cfg_.outputs, Activation::none, rng);
  }

  Tensor forward(const Tensor& frames, bool inference) override {
    check_frames(frames, cfg_);
    Tensor x = relu(conv1_.forward(frames));
    x = relu(conv2_.forward(x));
    x = reshape(x, {x.dim(0), flat_});
    x = dense_.forward(x);
    return inference ? relu(x) : x;
  }

  NamedParams named_params() const override {
    NamedParams p;
    conv1_.collect("conv1", p);
    conv2_.collect("conv2", p);
    dense_.collect("dense", p);
    return p;
  }

  std::vector<Tensor> encoder_group() const override {
    return values_of(named_params());
  }
  std::vector<Tensor> predictor_group() const override { return {}; }

  int64_t param_count() const override {
    return conv1_.param_count() + conv2_.param_count() + dense_.param_count();
  }

 private:
  Conv2dLayer conv1_, conv2_;
  DenseLayer dense_;
  int64_t flat_ = 0;
};

// Shared encode-then-step loop for the recurrent models.
template <class State, class StepFn, class ReadFn>
Tensor run_sequence(const ModelConfig& cfg, const Encoder& encoder,
                    const Tensor& frames, bool inference, State state,
                    StepFn step, ReadFn read) {
  check_frames(frames, cfg);
  const SequencePlan& plan = cfg.plan;
  for (int64_t k = 0; k < plan.m; ++k) {
    const Tensor sub =
        extract_subsequence(frames, k * (plan.n - plan.w), plan.n);
    const Tensor latent = encoder.forward(sub);
    state = step(std::move(state), latent);
  }
  Tensor out = read(state);
  return inference ? relu(out) : out;
}

class LstmModel final : public Model {
 public:
  LstmModel(ModelConfig cfg, uint64_t seed) : Model(std::move(cfg)) {
    cfg_.plan.validate();
    Rng root(seed);
    Rng enc_rng = root.derive("encoder");
    encoder_ = Encoder(encoder_config(cfg_), enc_rng);
    Rng cell_rng = root.derive("cell");
    cell_ = LstmCell(cfg_.latent, cfg_.hidden, cell_rng);
    Rng head_rng = root.derive("readout");
    readout1_ =
        DenseLayer(cfg_.hidden, cfg_.hidden, Activation::relu, head_rng);
    readout2_ =
        DenseLayer(cfg_.hidden, cfg_.outputs, Activation::none, head_rng);
  }

  Tensor forward(const Tensor& frames, bool inference) override {
    const int64_t B = frames.dim(0);
    struct HC {
      Tensor h, c;
    };
    HC init{Tensor::zeros({B, cfg_.hidden}), Tensor::zeros({B, cfg_.hidden})};
    return run_sequence(
        cfg_, encoder_, frames, inference, init,
        [this](HC s, const Tensor& u) {
          auto [h, c] = cell_.step(u, s.h, s.c);
          return HC{h, c};
        },
        [this](const HC& s) { return readout2_.forward(readout1_.forward(s.h)); });
  }

  NamedParams named_params() const override {
    NamedParams p;
    encoder_.collect("encoder", p);
    cell_.collect("cell", p);
    readout1_.collect("readout1", p);
    readout2_.collect("readout2", p);
    return p;
  }

  std::vector<Tensor> encoder_group() const override {
    NamedParams p;
    encoder_.collect("encoder", p);
    return values_of(p);
  }

  std::vector<Tensor> predictor_group() const override {
    NamedParams p;
    cell_.collect("cell", p);
    readout1_.collect("readout1", p);
    readout2_.collect("readout2", p);
    return values_of(p);
  }

  int64_t param_count() const override {
    return encoder_.param_count() + cell_.param_count() +
           readout1_.param_count() + readout2_.param_count();
  }

 private:
  static EncoderConfig encoder_config(const ModelConfig& cfg) {
    return EncoderConfig{cfg.plan.n, cfg.height, cfg.width,
                         cfg.encoder_channels, cfg.latent};
  }

  Encoder encoder_;
  LstmCell cell_;
  DenseLayer readout1_, readout2_;
};

WiringSpec ncp_spec(const ModelConfig& cfg) {
  WiringSpec s;
  s.sensory_count = cfg.latent;
  s.inter_count = (cfg.hidden * 6 + 9) / 10;  // ceil(0.6 H)
  s.command_count = cfg.hidden - s.inter_count;
  s.motor_count = cfg.outputs;
  if (s.inter_count < 1 || s.command_count < 1) {
    throw std::invalid_argument("hidden size too small to split inter/command");
  }
  return s;
}

template <class Cell>
class CtrnnModel final : public Model {
 public:
  CtrnnModel(ModelConfig cfg, uint64_t seed) : Model(std::move(cfg)) {
    cfg_.plan.validate();
    Rng root(seed);
    Rng enc_rng = root.derive("encoder");
    encoder_ = Encoder(
        EncoderConfig{cfg_.plan.n, cfg_.height, cfg_.width,
                      cfg_.encoder_channels, cfg_.latent},
        enc_rng);
    const Wiring wiring = build_ncp(ncp_spec(cfg_), root.derive("wiring").state());
    Rng cell_rng = root.derive("cell");
    if constexpr (std::is_same_v<Cell, LtcCell>) {
      cell_ = LtcCell(wiring, cfg_.unfold_steps, cfg_.dt, 1.0, cell_rng);
    } else {
      cell_ = CfcCell(wiring, cfg_.cfc_time, cell_rng);
    }
  }

  Tensor forward(const Tensor& frames, bool inference) override {
    const int64_t B = frames.dim(0);
    const int64_t H = cell_.hidden();
    return run_sequence(
        cfg_, encoder_, frames, inference, Tensor::zeros({B, H}),
        [this](Tensor x, const Tensor& u) { return cell_.step(x, u); },
        [this, H](const Tensor& x) {
          return slice_cols(x, cell_.wiring.motor_begin(), H);
        });
  }

  NamedParams named_params() const override {
    NamedParams p;
    encoder_.collect("encoder", p);
    cell_.collect("cell", p);
    return p;
  }

  std::vector<Tensor> encoder_group() const override {
    NamedParams p;
    encoder_.collect("encoder", p);
    return values_of(p);
  }

  std::vector<Tensor> predictor_group() const override {
    NamedParams p;
    cell_.collect("cell", p);
    return values_of(p);
  }

  int64_t param_count() const override {
    return encoder_.param_count() + cell_.param_count();
  }

  const Cell& cell() const { return cell_; }

 private:
  Encoder encoder_;
  Cell cell_;
};

}  // namespace

std::unique_ptr<Model> make_model(const ModelConfig& cfg, uint64_t seed) {
  switch (cfg.kind) {
    case ModelKind::convnet:
      return std::make_unique<ConvNetModel>(cfg, seed);
    case ModelKind::lstm:
      return std::make_unique<LstmModel>(cfg, seed);
    case ModelKind::ltc:
      return std::make_unique<CtrnnModel<LtcCell>>(cfg, seed);
    case ModelKind::cfc:
      return std::make_unique<CtrnnModel<CfcCell>>(cfg, seed);
  }
  throw std::invalid_argument("make_model: bad kind");
}

}  // namespace rgc
