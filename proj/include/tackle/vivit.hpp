#pragma once

// Desk-scale video vision transformer: tubelet embedding, pre-norm encoder,
// class-token head, and hand-written reverse-mode gradients.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tackle/clipstore.hpp"

namespace tackle {

struct ModelConfig {
  int frames = 8;
  int height = 32;
  int width = 32;
  int channels = 3;
  int tubelet_t = 2;
  int patch = 8;
  int hidden = 64;
  int layers = 2;
  int heads = 4;
  int ffn = 256;
  int classes = 2;

  static ModelConfig desk() { return {}; }
  // ViViT-B 16x2 at 32 x 224 x 224.
  static ModelConfig reference() { return {32, 224, 224, 3, 2, 16, 768, 12, 12, 3072, 2}; }

  void validate() const;  // throws ConfigError
  int token_count() const noexcept {
    return (frames / tubelet_t) * (height / patch) * (width / patch);
  }
  int sequence_length() const noexcept { return token_count() + 1; }
  int patch_dim() const noexcept { return tubelet_t * patch * patch * channels; }
  int head_dim() const noexcept { return hidden / heads; }
  std::size_t input_size() const noexcept {
    return static_cast<std::size_t>(frames) * height * width * channels;
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

nlohmann::ordered_json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig defaults = {});

template <typename Real>
struct LayerParameters {
  std::vector<Real> ln1_gamma, ln1_beta;
  std::vector<Real> wq, wk, wv, wo;  // D x D, y = W x
  std::vector<Real> ln2_gamma, ln2_beta;
  std::vector<Real> w1, b1;  // ffn x D, ffn
  std::vector<Real> w2, b2;  // D x ffn, D
};

template <typename Real>
struct ModelParameters {
  ModelConfig config;
  std::vector<Real> patch_embedding;  // D x patch_dim
  std::vector<Real> cls_token;        // D
  std::vector<Real> pos_embedding;    // (N+1) x D
  std::vector<LayerParameters<Real>> layers;
  std::vector<Real> final_gamma, final_beta;  // D
  std::vector<Real> head_w;                   // classes x D
  std::vector<Real> head_b;                   // classes

  static ModelParameters zeros(const ModelConfig& config);

  // f(name, tensor, rows, cols) over every tensor in a fixed canonical order.
  template <typename F>
  void visit(F&& f) {
    visit_impl(*this, f);
  }
  template <typename F>
  void visit(F&& f) const {
    visit_impl(*this, f);
  }

  std::size_t parameter_count() const;
  void set_zero();

  template <typename Other>
  ModelParameters<Other> cast() const;

 private:
  template <typename Self, typename F>
  static void visit_impl(Self& p, F& f) {
    const int d = p.config.hidden, ffn = p.config.ffn;
    f(std::string_view("patch_embedding"), p.patch_embedding, d, p.config.patch_dim());
    f(std::string_view("cls_token"), p.cls_token, 1, d);
    f(std::string_view("pos_embedding"), p.pos_embedding, p.config.sequence_length(), d);
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
      auto& L = p.layers[l];
      const std::string pre = "layers." + std::to_string(l) + ".";
      f(std::string_view(pre + "ln1_gamma"), L.ln1_gamma, 1, d);
      f(std::string_view(pre + "ln1_beta"), L.ln1_beta, 1, d);
      f(std::string_view(pre + "wq"), L.wq, d, d);
      f(std::string_view(pre + "wk"), L.wk, d, d);
      f(std::string_view(pre + "wv"), L.wv, d, d);
      f(std::string_view(pre + "wo"), L.wo, d, d);
      f(std::string_view(pre + "ln2_gamma"), L.ln2_gamma, 1, d);
      f(std::string_view(pre + "ln2_beta"), L.ln2_beta, 1, d);
      f(std::string_view(pre + "w1"), L.w1, ffn, d);
      f(std::string_view(pre + "b1"), L.b1, 1, ffn);
      f(std::string_view(pre + "w2"), L.w2, d, ffn);
      f(std::string_view(pre + "b2"), L.b2, 1, d);
    }
    f(std::string_view("final_gamma"), p.final_gamma, 1, d);
    f(std::string_view("final_beta"), p.final_beta, 1, d);
    f(std::string_view("head_w"), p.head_w, p.config.classes, d);
    f(std::string_view("head_b"), p.head_b, 1, p.config.classes);
  }
};

// Truncated normal (std 0.02, cut at 2 std) for projections and embeddings;
// zeros for biases, LN beta and the class token; ones for LN gamma.
template <typename Real>
ModelParameters<Real> init_parameters(const ModelConfig& config, std::uint64_t seed);

template <typename Real>
struct LayerCache {
  std::vector<Real> x_in;                      // S x D
  std::vector<Real> ln1, ln1_mean, ln1_rstd;   // S x D, S, S
  std::vector<Real> q, k, v;                   // S x D
  std::vector<Real> probs;                     // heads x S x S
  std::vector<Real> ctx;                       // S x D
  std::vector<Real> z_mid;                     // S x D
  std::vector<Real> ln2, ln2_mean, ln2_rstd;
  std::vector<Real> pre, act;                  // S x ffn
};

template <typename Real>
struct ForwardCache {
  std::vector<Real> patches;  // N x patch_dim
  std::vector<LayerCache<Real>> layers;
  std::vector<Real> z_final;  // S x D
  std::vector<Real> cls_norm;  // D
  Real final_mean = 0, final_rstd = 0;
  std::vector<Real> logits, probs;  // classes
};

// Flattens non-overlapping tubelets in (t, y, x, c) order; tubelets are ordered
// time-major, then row, then column. `input` is T x H x W x C.
template <typename Real>
void extract_tubelets(std::span<const Real> input, const ModelConfig& config, std::vector<Real>& patches);

// z0 = [cls; E p_1; ...; E p_N] + E_pos, returned as (N+1) x D.
template <typename Real>
std::vector<Real> tokenize(std::span<const Real> input, const ModelParameters<Real>& params);

// softmax(Q K^T / sqrt(d_k)) V for one head; Q is rows_q x d_k, K and V rows_kv x d_k.
template <typename Real>
std::vector<Real> attention(std::span<const Real> q, std::span<const Real> k, std::span<const Real> v,
                            int rows_q, int rows_kv, int d_k);

// One pre-norm encoder layer on an S x D token matrix (in place).
template <typename Real>
void encoder_layer(std::vector<Real>& z, const LayerParameters<Real>& layer, const ModelConfig& config,
                   LayerCache<Real>* cache = nullptr);

template <typename Real>
struct ForwardResult {
  std::vector<Real> logits;
  std::vector<Real> probs;
};

// Throws NumericError on non-finite logits.
template <typename Real>
ForwardResult<Real> forward(std::span<const Real> input, const ModelParameters<Real>& params,
                            ForwardCache<Real>& cache);

template <typename Real>
ForwardResult<Real> forward(std::span<const Real> input, const ModelParameters<Real>& params);

// Accumulates d(loss)/d(params) into `grads`, given d(loss)/d(logits) and the cache
// of the matching forward call.
template <typename Real>
void backward(const ModelParameters<Real>& params, const ForwardCache<Real>& cache,
              std::span<const Real> dlogits, ModelParameters<Real>& grads);

// u8 clip -> model input. Samples /255 then (x - 0.5) / 0.5. When the clip has
// more frames than the model, frames are taken at a uniform stride ending on
// the last frame (for 32 -> 8: 3, 7, ..., 31, which keeps the contact frame 15).
// Spatial size is matched with bilinear resize.
template <typename Real>
std::vector<Real> prepare_input(const Clip& clip, const ModelConfig& config);

inline constexpr double kNormMean = 0.5;
inline constexpr double kNormStd = 0.5;
inline constexpr double kLayerNormEps = 1e-5;

}  // namespace tackle
