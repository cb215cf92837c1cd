#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "neutral/ops.hpp"
#include "neutral/rng.hpp"

namespace neutral {

// How a mask M_k is combined with the input to form the view T_k(x).
enum class Parametrization { feed_forward, residual, multiplicative };

inline std::string_view to_string(Parametrization p) {
  switch (p) {
    case Parametrization::feed_forward: return "feed_forward";
    case Parametrization::residual: return "residual";
    case Parametrization::multiplicative: return "multiplicative";
  }
  return "?";
}

inline Parametrization parse_parametrization(std::string_view s) {
  if (s == "feed_forward" || s == "feedforward" || s == "ff") return Parametrization::feed_forward;
  if (s == "residual" || s == "res") return Parametrization::residual;
  if (s == "multiplicative" || s == "mul") return Parametrization::multiplicative;
  throw ConfigError("unknown parametrization '" + std::string(s) +
                    "' (expected feed_forward, residual or multiplicative)");
}

// Owns an ordered list of named weight tensors. No biases exist anywhere in
// the networks built on top of this.
class ParameterList {
 public:
  std::span<Tensor> parameters() { return params_; }
  std::span<const Tensor> parameters() const { return params_; }
  const std::vector<std::string>& parameter_names() const { return names_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.size();
    return n;
  }

  // Detached copy whose weights no longer take gradients.
  void freeze() {
    for (auto& p : params_) p = p.detach(false);
  }

 protected:
  std::size_t add_parameter(std::string name, Shape shape) {
    names_.push_back(std::move(name));
    params_.push_back(Tensor::zeros(std::move(shape), true));
    return params_.size() - 1;
  }
  const Tensor& param(std::size_t i) const { return params_[i]; }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> params_;
};

// Kaiming-style fan-in scaled normal init: std = sqrt(2 / fan_in), where
// fan_in is the product of all but the leading extent.
template <class Net>
void init_params(Net& net, std::uint64_t seed) {
  CounterRng rng(seed, 0x1417);
  for (auto& p : net.parameters()) {
    const std::size_t fan_in = p.size() / p.dim(0);
    const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
    std::vector<double> v(p.size());
    for (auto& x : v) x = rng.normal(0.0, sd);
    p = Tensor(p.shape(), std::move(v), true);
  }
}

template <class Net>
void zero_params(Net& net) {
  for (auto& p : net.parameters()) p = Tensor::zeros(p.shape(), true);
}

// Learnable mask M_k: X -> X.
//   conv: bottom conv, three residual blocks
//         relu(IN(conv(relu(IN(conv(x)))))) + x, top conv; all width 3,
//         stride 1, C -> C channels.
//   mlp:  linear(D->D), relu, linear(D->D).
// Multiplicative stacks append a sigmoid.
class MaskNet : public ParameterList {
 public:
  enum class Kind { conv, mlp };

  static MaskNet conv(std::size_t channels, bool sigmoid_final) {
    MaskNet m(Kind::conv, channels, sigmoid_final);
    const Shape k{channels, channels, 3};
    m.add_parameter("bottom.weight", k);
    for (int b = 0; b < 3; ++b) {
      m.add_parameter("block" + std::to_string(b) + ".conv1.weight", k);
      m.add_parameter("block" + std::to_string(b) + ".conv2.weight", k);
    }
    m.add_parameter("top.weight", k);
    return m;
  }

  // hidden = 0 keeps the hidden layer at the input width.
  static MaskNet mlp(std::size_t features, bool sigmoid_final, std::size_t hidden = 0) {
    MaskNet m(Kind::mlp, features, sigmoid_final);
    if (hidden == 0) hidden = features;
    m.add_parameter("fc1.weight", {hidden, features});
    m.add_parameter("fc2.weight", {features, hidden});
    return m;
  }

  Kind kind() const { return kind_; }
  std::size_t width() const { return width_; }
  bool sigmoid_final() const { return sigmoid_final_; }

  // x is one sample ([C x L] / [D]) or a batch ([B x C x L] / [B x D]).
  Tensor forward(const Tensor& x) const {
    check_input(x);
    Tensor h;
    if (kind_ == Kind::conv) {
      h = conv1d(x, param(0));
      for (std::size_t b = 0; b < 3; ++b) {
        auto inner = relu(instance_norm(conv1d(h, param(1 + 2 * b))));
        h = add(relu(instance_norm(conv1d(inner, param(2 + 2 * b)))), h);
      }
      h = conv1d(h, param(7));
    } else {
      h = linear(relu(linear(x, param(0))), param(1));
    }
    return sigmoid_final_ ? sigmoid(h) : h;
  }

 private:
  MaskNet(Kind k, std::size_t w, bool s) : kind_(k), width_(w), sigmoid_final_(s) {}

  void check_input(const Tensor& x) const {
    const bool ok = kind_ == Kind::conv ? ((x.rank() == 2 && x.dim(0) == width_) || (x.rank() == 3 && x.dim(1) == width_))
                                        : ((x.rank() == 1 || x.rank() == 2) && x.shape().back() == width_);
    if (!ok)
      throw DimensionError("mask expects " + std::string(kind_ == Kind::conv ? "channels " : "features ") +
                           std::to_string(width_) + ", got input " + to_string(x.shape()));
  }

  Kind kind_;
  std::size_t width_;
  bool sigmoid_final_;
};

// Architecture of the feature extractor f: X -> Z.
struct EncoderSpec {
  enum class Kind { conv, mlp };
  struct Block {
    std::size_t out_channels;
    std::size_t stride;
  };

  Kind kind = Kind::mlp;
  // conv: input [in_channels x length], residual blocks, then one top conv
  // of width top_kernel producing embedding_dim channels at length 1.
  std::size_t in_channels = 0;
  std::size_t length = 0;
  std::vector<Block> blocks;
  std::size_t top_kernel = 0;
  // mlp: input [in_features], one bias-free linear layer per entry of widths.
  std::size_t in_features = 0;
  std::vector<std::size_t> widths;
  std::size_t embedding_dim = 0;

  Shape input_shape() const { return kind == Kind::conv ? Shape{in_channels, length} : Shape{in_features}; }
};

// One stride-1 block to `first_width`, then stride-2 blocks.
inline EncoderSpec conv_encoder_spec(std::size_t channels, std::size_t length, std::size_t first_width,
                                     std::vector<std::size_t> stride2_widths, std::size_t top_kernel,
                                     std::size_t embedding_dim) {
  EncoderSpec s;
  s.kind = EncoderSpec::Kind::conv;
  s.in_channels = channels;
  s.length = length;
  s.blocks.push_back({first_width, 1});
  for (auto w : stride2_widths) s.blocks.push_back({w, 2});
  s.top_kernel = top_kernel;
  s.embedding_dim = embedding_dim;
  return s;
}

// Five bias-free layers whose widths interpolate geometrically from the
// input dimension to the embedding dimension.
inline EncoderSpec mlp_encoder_spec(std::size_t features, std::size_t embedding_dim, std::size_t layers = 5) {
  EncoderSpec s;
  s.kind = EncoderSpec::Kind::mlp;
  s.in_features = features;
  s.embedding_dim = embedding_dim;
  const double ratio = static_cast<double>(embedding_dim) / static_cast<double>(features);
  for (std::size_t i = 1; i <= layers; ++i) {
    const double w = static_cast<double>(features) * std::pow(ratio, static_cast<double>(i) / static_cast<double>(layers));
    s.widths.push_back(i == layers ? embedding_dim : std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(w))));
  }
  return s;
}

// Length after the residual stack of a conv spec.
inline std::size_t encoder_final_length(const EncoderSpec& s) {
  std::size_t len = s.length;
  for (const auto& b : s.blocks) len = conv1d_output_length(len, 3, b.stride, 1);
  return len;
}

// Zero padding that lets the top kernel cover a residual output shorter
// than itself.
inline std::size_t top_padding(std::size_t length, std::size_t kernel) {
  return kernel > length ? (kernel - length + 1) / 2 : 0;
}

class EncoderNet : public ParameterList {
 public:
  explicit EncoderNet(EncoderSpec spec) : spec_(std::move(spec)) {
    if (spec_.embedding_dim == 0) throw ConfigError("encoder embedding_dim must be positive");
    if (spec_.kind == EncoderSpec::Kind::conv) {
      std::size_t c = spec_.in_channels;
      for (std::size_t i = 0; i < spec_.blocks.size(); ++i) {
        const auto& b = spec_.blocks[i];
        const std::string p = "block" + std::to_string(i);
        add_parameter(p + ".conv1.weight", {b.out_channels, c, 3});
        add_parameter(p + ".conv2.weight", {b.out_channels, b.out_channels, 3});
        if (b.out_channels != c || b.stride != 1) add_parameter(p + ".skip.weight", {b.out_channels, c, 1});
        c = b.out_channels;
      }
      add_parameter("top.weight", {spec_.embedding_dim, c, spec_.top_kernel});
      const std::size_t len = encoder_final_length(spec_);
      if (conv1d_output_length(len, spec_.top_kernel, 1, top_padding(len, spec_.top_kernel)) != 1)
        throw ConfigError("encoder top kernel " + std::to_string(spec_.top_kernel) + " does not reduce length " +
                          std::to_string(len) + " to 1");
    } else {
      if (spec_.widths.empty() || spec_.widths.back() != spec_.embedding_dim)
        throw ConfigError("mlp encoder widths must end at embedding_dim");
      std::size_t in = spec_.in_features;
      for (std::size_t i = 0; i < spec_.widths.size(); ++i) {
        add_parameter("fc" + std::to_string(i) + ".weight", {spec_.widths[i], in});
        in = spec_.widths[i];
      }
    }
  }

  const EncoderSpec& spec() const { return spec_; }
  std::size_t embedding_dim() const { return spec_.embedding_dim; }
  Shape input_shape() const { return spec_.input_shape(); }

  // One sample -> [E]; batch of B samples -> [B x E].
  Tensor forward(const Tensor& x) const {
    const Shape in = spec_.input_shape();
    const bool single = x.shape() == in;
    if (!single && !(x.rank() == in.size() + 1 && std::equal(in.begin(), in.end(), x.shape().begin() + 1)))
      throw DimensionError("encoder expects samples of shape " + to_string(in) + ", got " + to_string(x.shape()));
    const Tensor batch = single ? reshape(x, prepend(1, in)) : x;
    const std::size_t B = batch.dim(0);

    Tensor h = batch;
    if (spec_.kind == EncoderSpec::Kind::conv) {
      std::size_t idx = 0, c = spec_.in_channels;
      for (const auto& b : spec_.blocks) {
        const Tensor& w1 = param(idx++);
        const Tensor& w2 = param(idx++);
        auto inner = relu(conv1d(relu(conv1d(h, w1, b.stride, 1)), w2, 1, 1));
        Tensor skip = h;
        if (b.out_channels != c || b.stride != 1) skip = conv1d(h, param(idx++), b.stride, 0);
        h = add(inner, skip);
        c = b.out_channels;
      }
      const std::size_t len = h.dim(2);
      h = conv1d(h, param(idx), 1, top_padding(len, spec_.top_kernel));
      h = reshape(h, {B, spec_.embedding_dim});
    } else {
      for (std::size_t i = 0; i < spec_.widths.size(); ++i) {
        h = linear(h, param(i));
        if (i + 1 < spec_.widths.size()) h = relu(h);
      }
    }
    return single ? reshape(h, {spec_.embedding_dim}) : h;
  }

 private:
  static Shape prepend(std::size_t n, const Shape& s) {
    Shape out{n};
    out.insert(out.end(), s.begin(), s.end());
    return out;
  }

  EncoderSpec spec_;
};

// K learnable transformations sharing one parametrization mode.
class TransformStack {
 public:
  TransformStack(std::vector<MaskNet> masks, Parametrization mode) : masks_(std::move(masks)), mode_(mode) {
    if (masks_.size() < 2) throw ConfigError("a transform stack needs K >= 2 transformations");
    for (const auto& m : masks_) {
      if (mode_ == Parametrization::multiplicative && !m.sigmoid_final())
        throw ConfigError("multiplicative parametrization needs sigmoid-final masks");
      if (m.kind() != masks_.front().kind() || m.width() != masks_.front().width())
        throw ConfigError("all masks in a stack must share one architecture");
    }
  }

  static TransformStack conv(std::size_t K, std::size_t channels, Parametrization mode) {
    return make(K, mode, [&](bool s) { return MaskNet::conv(channels, s); });
  }
  static TransformStack mlp(std::size_t K, std::size_t features, Parametrization mode, std::size_t hidden = 0) {
    return make(K, mode, [&](bool s) { return MaskNet::mlp(features, s, hidden); });
  }

  std::size_t size() const { return masks_.size(); }
  Parametrization mode() const { return mode_; }
  const MaskNet& mask(std::size_t k) const { return masks_.at(k); }
  MaskNet& mask(std::size_t k) { return masks_.at(k); }
  std::vector<MaskNet>& masks() { return masks_; }
  const std::vector<MaskNet>& masks() const { return masks_; }

  // T_k(x) for 0 <= k < K.
  Tensor transform(const Tensor& x, std::size_t k) const {
    if (k >= masks_.size())
      throw IndexError("transformation index " + std::to_string(k) + " outside [0, " + std::to_string(masks_.size()) + ")");
    auto m = masks_[k].forward(x);
    switch (mode_) {
      case Parametrization::feed_forward: return m;
      case Parametrization::residual: return add(m, x);
      case Parametrization::multiplicative: return mul(m, x);
    }
    return m;
  }

  std::vector<Tensor> apply_all(const Tensor& x) const {
    std::vector<Tensor> out;
    out.reserve(masks_.size());
    for (std::size_t k = 0; k < masks_.size(); ++k) out.push_back(transform(x, k));
    return out;
  }

  void freeze() {
    for (auto& m : masks_) m.freeze();
  }

 private:
  template <class F>
  static TransformStack make(std::size_t K, Parametrization mode, F&& build) {
    std::vector<MaskNet> masks;
    for (std::size_t k = 0; k < K; ++k) masks.push_back(build(mode == Parametrization::multiplicative));
    return TransformStack(std::move(masks), mode);
  }

  std::vector<MaskNet> masks_;
  Parametrization mode_;
};

inline void init_params(TransformStack& stack, std::uint64_t seed) {
  for (std::size_t k = 0; k < stack.size(); ++k) init_params(stack.mask(k), seed * 1000003ULL + k + 1);
}

inline void zero_params(TransformStack& stack) {
  for (auto& m : stack.masks()) zero_params(m);
}

// The 12 hand-crafted time-series views: time flip x channel flip x shift
// by floor(L/4) (none, forward, backward), vacated steps zero-filled.
class FixedTransforms {
 public:
  static constexpr std::size_t kCount = 12;

  std::size_t size() const { return kCount; }

  static std::string describe(std::size_t k) {
    static const char* shifts[] = {"none", "forward", "backward"};
    return std::string("time_flip=") + ((k / 6) ? "1" : "0") + ",channel_flip=" + (((k / 3) % 2) ? "1" : "0") +
           ",shift=" + shifts[k % 3];
  }

  // x: [C x L] or [B x C x L]; returns 12 tensors of the same shape.
  std::vector<Tensor> apply_all(const Tensor& x) const {
    if (x.rank() != 2 && x.rank() != 3) throw DimensionError("fixed transforms need [C x L] or [B x C x L] input");
    const std::size_t B = x.rank() == 3 ? x.dim(0) : 1;
    const std::size_t C = x.dim(x.rank() - 2), L = x.dim(x.rank() - 1);
    const std::size_t s = L / 4;
    auto d = x.data();
    std::vector<Tensor> out;
    for (std::size_t k = 0; k < kCount; ++k) {
      const bool tflip = k / 6, cflip = (k / 3) % 2;
      const int shift = static_cast<int>(k % 3);  // 0 none, 1 forward, 2 backward
      std::vector<double> v(x.size(), 0.0);
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t c = 0; c < C; ++c)
          for (std::size_t t = 0; t < L; ++t) {
            long src_t = static_cast<long>(t);
            if (shift == 1) src_t -= static_cast<long>(s);
            if (shift == 2) src_t += static_cast<long>(s);
            if (src_t < 0 || src_t >= static_cast<long>(L)) continue;
            const std::size_t st = tflip ? L - 1 - static_cast<std::size_t>(src_t) : static_cast<std::size_t>(src_t);
            const std::size_t sc = cflip ? C - 1 - c : c;
            v[(b * C + c) * L + t] = d[(b * C + sc) * L + st];
          }
      out.emplace_back(x.shape(), std::move(v));
    }
    return out;
  }
};

inline std::vector<Tensor> fixed_transforms(const Tensor& x) { return FixedTransforms{}.apply_all(x); }

// Canonical lowercase key for the known benchmark datasets.
inline std::string canonical_dataset_name(std::string_view name) {
  std::string s;
  for (char c : name)
    if (c != '_' && c != '-' && c != ' ') s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (s == "spokenarabicdigits") return "sad";
  if (s == "charactertrajectories") return "ct";
  if (s == "racketsports") return "rs";
  if (s == "kddcup" || s == "kddcup99") return "kdd";
  if (s == "kddcuprev") return "kddrev";
  return s;
}

// Encoder architecture per dataset. Unknown time series get a generic
// stack: stride-2 blocks until the length is at most 4, then a top conv
// spanning what is left.
inline EncoderSpec default_encoder_spec(std::string_view dataset, const Shape& sample_shape) {
  const std::string key = canonical_dataset_name(dataset);
  if (sample_shape.size() == 1) {
    if (key == "synthetic") {
      // 2-D toy data: a geometric 2 -> 32 ramp starts with 3 ReLUs, too few
      // to survive random init reliably.
      auto s = mlp_encoder_spec(sample_shape[0], 32);
      s.widths = {32, 32, 32, 32, 32};
      return s;
    }
    return mlp_encoder_spec(sample_shape[0], key == "thyroid" ? 24 : 32);
  }
  if (sample_shape.size() != 2) throw DimensionError("samples must be [D] or [C x L], got " + to_string(sample_shape));
  const std::size_t C = sample_shape[0], L = sample_shape[1];
  const std::vector<std::size_t> four{32, 64, 128, 256}, six{32, 64, 128, 256, 512, 1024}, three{32, 64, 128};
  if (key == "sad") return conv_encoder_spec(C, L, 32, four, 6, 32);
  if (key == "natops") return conv_encoder_spec(C, L, 32, four, 4, 64);
  if (key == "ct") return conv_encoder_spec(C, L, 32, six, 3, 64);
  if (key == "epilepsy") return conv_encoder_spec(C, L, 32, six, 4, 128);
  if (key == "rs") return conv_encoder_spec(C, L, 32, three, 4, 64);
  std::vector<std::size_t> widths;
  std::size_t len = L, w = 32;
  while (len > 4) {
    widths.push_back(w);
    w = std::min<std::size_t>(w * 2, 256);
    len = conv1d_output_length(len, 3, 2, 1);
  }
  return conv_encoder_spec(C, L, 32, widths, len, 64);
}

}  // namespace neutral
