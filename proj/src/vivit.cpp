#include "tackle/vivit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "tackle/error.hpp"
#include "tackle/kernels.hpp"
#include "tackle/rng.hpp"

namespace tackle {

namespace k = kernels;

void ModelConfig::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("model config: ") + what);
  };
  need(frames >= 1 && height >= 1 && width >= 1, "frames/height/width must be >= 1");
  need(channels == 3, "channels must be 3");
  need(tubelet_t >= 1 && patch >= 1, "tubelet and patch sizes must be >= 1");
  need(frames % tubelet_t == 0, "frames must be divisible by tubelet_t");
  need(height % patch == 0 && width % patch == 0, "height and width must be divisible by patch");
  need(hidden >= 1 && heads >= 1 && hidden % heads == 0, "hidden must be divisible by heads");
  need(layers >= 0, "layers must be >= 0");
  need(ffn >= 1, "ffn must be >= 1");
  need(classes >= 2, "classes must be >= 2");
}

nlohmann::ordered_json to_json(const ModelConfig& c) {
  return {{"frames", c.frames}, {"height", c.height},       {"width", c.width},   {"channels", c.channels},
          {"tubelet_t", c.tubelet_t}, {"patch", c.patch},   {"hidden", c.hidden}, {"layers", c.layers},
          {"heads", c.heads},   {"ffn", c.ffn},             {"classes", c.classes}};
}

ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig c) {
  try {
    if (j.contains("frames")) c.frames = j.at("frames").get<int>();
    if (j.contains("height")) c.height = j.at("height").get<int>();
    if (j.contains("width")) c.width = j.at("width").get<int>();
    if (j.contains("channels")) c.channels = j.at("channels").get<int>();
    if (j.contains("tubelet_t")) c.tubelet_t = j.at("tubelet_t").get<int>();
    if (j.contains("patch")) c.patch = j.at("patch").get<int>();
    if (j.contains("hidden")) {
      c.hidden = j.at("hidden").get<int>();
      if (!j.contains("ffn")) c.ffn = 4 * c.hidden;
    }
    if (j.contains("layers")) c.layers = j.at("layers").get<int>();
    if (j.contains("heads")) c.heads = j.at("heads").get<int>();
    if (j.contains("ffn")) c.ffn = j.at("ffn").get<int>();
    if (j.contains("classes")) c.classes = j.at("classes").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

template <typename Real>
ModelParameters<Real> ModelParameters<Real>::zeros(const ModelConfig& config) {
  config.validate();
  ModelParameters p;
  p.config = config;
  p.layers.resize(config.layers);
  p.visit([](std::string_view, std::vector<Real>& t, int rows, int cols) {
    t.assign(static_cast<std::size_t>(rows) * cols, Real(0));
  });
  return p;
}

template <typename Real>
std::size_t ModelParameters<Real>::parameter_count() const {
  std::size_t n = 0;
  visit([&](std::string_view, const std::vector<Real>& t, int, int) { n += t.size(); });
  return n;
}

template <typename Real>
void ModelParameters<Real>::set_zero() {
  visit([](std::string_view, std::vector<Real>& t, int, int) { std::fill(t.begin(), t.end(), Real(0)); });
}

template <typename Real>
template <typename Other>
ModelParameters<Other> ModelParameters<Real>::cast() const {
  auto out = ModelParameters<Other>::zeros(config);
  std::vector<const std::vector<Real>*> src;
  visit([&](std::string_view, const std::vector<Real>& t, int, int) { src.push_back(&t); });
  std::size_t i = 0;
  out.visit([&](std::string_view, std::vector<Other>& t, int, int) {
    const auto& s = *src[i++];
    for (std::size_t j = 0; j < t.size(); ++j) t[j] = static_cast<Other>(s[j]);
  });
  return out;
}

template <typename Real>
ModelParameters<Real> init_parameters(const ModelConfig& config, std::uint64_t seed) {
  auto p = ModelParameters<Real>::zeros(config);
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto trunc_normal = [&](std::vector<Real>& t) {
    for (auto& x : t) {
      double v;
      do v = normal(rng);
      while (std::fabs(v) > 2.0);
      x = static_cast<Real>(0.02 * v);
    }
  };
  p.visit([&](std::string_view name, std::vector<Real>& t, int, int) {
    const bool gamma = name.ends_with("gamma");
    const bool zero = name.ends_with("beta") || name == "cls_token" || name.ends_with("b1") ||
                      name.ends_with("b2") || name == "head_b";
    if (gamma) std::fill(t.begin(), t.end(), Real(1));
    else if (!zero) trunc_normal(t);
  });
  return p;
}

namespace {

template <typename Real>
void layer_norm_forward(const Real* x, std::size_t rows, std::size_t d, const Real* gamma, const Real* beta,
                        Real* y, Real* mean_out, Real* rstd_out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* xr = x + r * d;
    Real* yr = y + r * d;
    Real mean = 0;
    for (std::size_t i = 0; i < d; ++i) mean += xr[i];
    mean /= static_cast<Real>(d);
    Real var = 0;
    for (std::size_t i = 0; i < d; ++i) var += (xr[i] - mean) * (xr[i] - mean);
    var /= static_cast<Real>(d);
    const Real rstd = Real(1) / std::sqrt(var + static_cast<Real>(kLayerNormEps));
    for (std::size_t i = 0; i < d; ++i) yr[i] = (xr[i] - mean) * rstd * gamma[i] + beta[i];
    if (mean_out) mean_out[r] = mean;
    if (rstd_out) rstd_out[r] = rstd;
  }
}

// dx += LN'(dy); dgamma, dbeta accumulate.
template <typename Real>
void layer_norm_backward(const Real* x, std::size_t rows, std::size_t d, const Real* gamma, const Real* mean,
                         const Real* rstd, const Real* dy, Real* dx, Real* dgamma, Real* dbeta) {
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* xr = x + r * d;
    const Real* dyr = dy + r * d;
    Real* dxr = dx + r * d;
    Real sum_dxhat = 0, sum_dxhat_xhat = 0;
    for (std::size_t i = 0; i < d; ++i) {
      const Real xhat = (xr[i] - mean[r]) * rstd[r];
      const Real dxhat = dyr[i] * gamma[i];
      dgamma[i] += dyr[i] * xhat;
      dbeta[i] += dyr[i];
      sum_dxhat += dxhat;
      sum_dxhat_xhat += dxhat * xhat;
    }
    const Real inv_d = Real(1) / static_cast<Real>(d);
    for (std::size_t i = 0; i < d; ++i) {
      const Real xhat = (xr[i] - mean[r]) * rstd[r];
      const Real dxhat = dyr[i] * gamma[i];
      dxr[i] += rstd[r] * (dxhat - sum_dxhat * inv_d - xhat * sum_dxhat_xhat * inv_d);
    }
  }
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

template <typename Real>
Real gelu(Real x) {
  const Real u = static_cast<Real>(kGeluC) * (x + static_cast<Real>(kGeluA) * x * x * x);
  return Real(0.5) * x * (Real(1) + std::tanh(u));
}

template <typename Real>
Real gelu_grad(Real x) {
  const Real u = static_cast<Real>(kGeluC) * (x + static_cast<Real>(kGeluA) * x * x * x);
  const Real th = std::tanh(u);
  const Real du = static_cast<Real>(kGeluC) * (Real(1) + Real(3) * static_cast<Real>(kGeluA) * x * x);
  return Real(0.5) * (Real(1) + th) + Real(0.5) * x * (Real(1) - th * th) * du;
}

template <typename Real>
void softmax_rows(Real* m, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    Real* row = m + r * cols;
    const Real mx = *std::max_element(row, row + cols);
    Real sum = 0;
    for (std::size_t j = 0; j < cols; ++j) {
      row[j] = std::exp(row[j] - mx);
      sum += row[j];
    }
    const Real inv = Real(1) / sum;
    for (std::size_t j = 0; j < cols; ++j) row[j] *= inv;
  }
}

// One head: probs (rq x rkv) and out (rq x dk, row stride ldo).
template <typename Real>
void attention_head(const Real* q, const Real* kk, const Real* v, std::size_t rq, std::size_t rkv, std::size_t dk,
                    std::size_t ld, Real* probs, Real* out, std::size_t ldo) {
  k::gemm_nt<Real>(rq, rkv, dk, q, ld, kk, ld, probs, rkv, false);
  const Real scale = Real(1) / std::sqrt(static_cast<Real>(dk));
  for (std::size_t i = 0; i < rq * rkv; ++i) probs[i] *= scale;
  softmax_rows(probs, rq, rkv);
  k::gemm_nn<Real>(rq, dk, rkv, probs, rkv, v, ld, out, ldo, false);
}

template <typename Real>
void add_bias_rows(Real* m, std::size_t rows, std::size_t cols, const Real* bias) {
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < cols; ++j) m[r * cols + j] += bias[j];
}

template <typename Real>
void col_sum_acc(const Real* m, std::size_t rows, std::size_t cols, Real* out) {
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < cols; ++j) out[j] += m[r * cols + j];
}

}  // namespace

template <typename Real>
void extract_tubelets(std::span<const Real> input, const ModelConfig& c, std::vector<Real>& patches) {
  if (input.size() != c.input_size()) throw ConfigError("input size does not match model config");
  const int nt = c.frames / c.tubelet_t, ny = c.height / c.patch, nx = c.width / c.patch;
  const std::size_t pd = c.patch_dim();
  patches.resize(static_cast<std::size_t>(c.token_count()) * pd);
  std::size_t n = 0;
  for (int tt = 0; tt < nt; ++tt)
    for (int ty = 0; ty < ny; ++ty)
      for (int tx = 0; tx < nx; ++tx, ++n) {
        Real* dst = patches.data() + n * pd;
        std::size_t e = 0;
        for (int dt = 0; dt < c.tubelet_t; ++dt)
          for (int dy = 0; dy < c.patch; ++dy) {
            const std::size_t t = static_cast<std::size_t>(tt) * c.tubelet_t + dt;
            const std::size_t y = static_cast<std::size_t>(ty) * c.patch + dy;
            const std::size_t x0 = static_cast<std::size_t>(tx) * c.patch;
            const Real* src = input.data() + ((t * c.height + y) * c.width + x0) * c.channels;
            const std::size_t run = static_cast<std::size_t>(c.patch) * c.channels;
            std::copy(src, src + run, dst + e);
            e += run;
          }
      }
}

namespace {

template <typename Real>
void embed(const std::vector<Real>& patches, const ModelParameters<Real>& p, std::vector<Real>& z0) {
  const auto& c = p.config;
  const std::size_t d = c.hidden, n = c.token_count(), pd = c.patch_dim();
  z0.assign((n + 1) * d, Real(0));
  std::copy(p.cls_token.begin(), p.cls_token.end(), z0.begin());
  k::gemm_nt<Real>(n, d, pd, patches.data(), pd, p.patch_embedding.data(), pd, z0.data() + d, d, false);
  for (std::size_t i = 0; i < z0.size(); ++i) z0[i] += p.pos_embedding[i];
}

}  // namespace

template <typename Real>
std::vector<Real> tokenize(std::span<const Real> input, const ModelParameters<Real>& params) {
  std::vector<Real> patches, z0;
  extract_tubelets(input, params.config, patches);
  embed(patches, params, z0);
  return z0;
}

template <typename Real>
std::vector<Real> attention(std::span<const Real> q, std::span<const Real> kmat, std::span<const Real> v,
                            int rows_q, int rows_kv, int d_k) {
  if (q.size() != static_cast<std::size_t>(rows_q) * d_k || kmat.size() != static_cast<std::size_t>(rows_kv) * d_k ||
      v.size() != kmat.size())
    throw ConfigError("attention operand shapes disagree");
  std::vector<Real> probs(static_cast<std::size_t>(rows_q) * rows_kv);
  std::vector<Real> out(static_cast<std::size_t>(rows_q) * d_k);
  attention_head(q.data(), kmat.data(), v.data(), rows_q, rows_kv, d_k, d_k, probs.data(), out.data(), d_k);
  return out;
}

template <typename Real>
void encoder_layer(std::vector<Real>& z, const LayerParameters<Real>& L, const ModelConfig& c,
                   LayerCache<Real>* cache) {
  const std::size_t d = c.hidden, f = c.ffn, h = c.heads, dk = c.head_dim();
  if (z.size() % d != 0) throw ConfigError("token matrix width does not match hidden size");
  const std::size_t s = z.size() / d;

  LayerCache<Real> local;
  LayerCache<Real>& lc = cache ? *cache : local;
  lc.x_in = z;
  lc.ln1.resize(s * d);
  lc.ln1_mean.resize(s);
  lc.ln1_rstd.resize(s);
  layer_norm_forward(z.data(), s, d, L.ln1_gamma.data(), L.ln1_beta.data(), lc.ln1.data(), lc.ln1_mean.data(),
                     lc.ln1_rstd.data());
  lc.q.resize(s * d);
  lc.k.resize(s * d);
  lc.v.resize(s * d);
  k::gemm_nt<Real>(s, d, d, lc.ln1.data(), d, L.wq.data(), d, lc.q.data(), d, false);
  k::gemm_nt<Real>(s, d, d, lc.ln1.data(), d, L.wk.data(), d, lc.k.data(), d, false);
  k::gemm_nt<Real>(s, d, d, lc.ln1.data(), d, L.wv.data(), d, lc.v.data(), d, false);
  lc.probs.resize(h * s * s);
  lc.ctx.resize(s * d);
  for (std::size_t hh = 0; hh < h; ++hh)
    attention_head(lc.q.data() + hh * dk, lc.k.data() + hh * dk, lc.v.data() + hh * dk, s, s, dk, d,
                   lc.probs.data() + hh * s * s, lc.ctx.data() + hh * dk, d);
  // z' = z + ctx Wo^T
  k::gemm_nt<Real>(s, d, d, lc.ctx.data(), d, L.wo.data(), d, z.data(), d, true);
  lc.z_mid = z;

  lc.ln2.resize(s * d);
  lc.ln2_mean.resize(s);
  lc.ln2_rstd.resize(s);
  layer_norm_forward(z.data(), s, d, L.ln2_gamma.data(), L.ln2_beta.data(), lc.ln2.data(), lc.ln2_mean.data(),
                     lc.ln2_rstd.data());
  lc.pre.resize(s * f);
  lc.act.resize(s * f);
  k::gemm_nt<Real>(s, f, d, lc.ln2.data(), d, L.w1.data(), d, lc.pre.data(), f, false);
  add_bias_rows(lc.pre.data(), s, f, L.b1.data());
  for (std::size_t i = 0; i < s * f; ++i) lc.act[i] = gelu(lc.pre[i]);
  k::gemm_nt<Real>(s, d, f, lc.act.data(), f, L.w2.data(), f, z.data(), d, true);
  add_bias_rows(z.data(), s, d, L.b2.data());
}

template <typename Real>
ForwardResult<Real> forward(std::span<const Real> input, const ModelParameters<Real>& p, ForwardCache<Real>& cache) {
  const auto& c = p.config;
  const std::size_t d = c.hidden;
  extract_tubelets(input, c, cache.patches);
  std::vector<Real> z;
  embed(cache.patches, p, z);
  cache.layers.resize(p.layers.size());
  for (std::size_t l = 0; l < p.layers.size(); ++l) encoder_layer(z, p.layers[l], c, &cache.layers[l]);
  cache.z_final = std::move(z);
  cache.cls_norm.resize(d);
  layer_norm_forward(cache.z_final.data(), 1, d, p.final_gamma.data(), p.final_beta.data(), cache.cls_norm.data(),
                     &cache.final_mean, &cache.final_rstd);
  const std::size_t nc = c.classes;
  cache.logits.resize(nc);
  for (std::size_t j = 0; j < nc; ++j)
    cache.logits[j] = k::dot<Real>(p.head_w.data() + j * d, cache.cls_norm.data(), d) + p.head_b[j];
  for (Real v : cache.logits)
    if (!std::isfinite(v)) throw NumericError("non-finite logit in forward pass");
  cache.probs = cache.logits;
  softmax_rows(cache.probs.data(), 1, nc);
  return {cache.logits, cache.probs};
}

template <typename Real>
ForwardResult<Real> forward(std::span<const Real> input, const ModelParameters<Real>& params) {
  ForwardCache<Real> cache;
  return forward(input, params, cache);
}

template <typename Real>
void backward(const ModelParameters<Real>& p, const ForwardCache<Real>& cache, std::span<const Real> dlogits,
              ModelParameters<Real>& g) {
  const auto& c = p.config;
  const std::size_t d = c.hidden, f = c.ffn, h = c.heads, dk = c.head_dim(), s = c.sequence_length(),
                    n = c.token_count(), pd = c.patch_dim(), nc = c.classes;
  if (dlogits.size() != nc) throw ConfigError("dlogits size does not match class count");

  // Head and final LN on the class token.
  std::vector<Real> dcls(d, Real(0));
  for (std::size_t j = 0; j < nc; ++j) {
    k::axpy<Real>(dlogits[j], cache.cls_norm.data(), g.head_w.data() + j * d, d);
    g.head_b[j] += dlogits[j];
    k::axpy<Real>(dlogits[j], p.head_w.data() + j * d, dcls.data(), d);
  }
  std::vector<Real> dz(s * d, Real(0));
  layer_norm_backward(cache.z_final.data(), 1, d, p.final_gamma.data(), &cache.final_mean, &cache.final_rstd,
                      dcls.data(), dz.data(), g.final_gamma.data(), g.final_beta.data());

  std::vector<Real> dmid(s * d), dln(s * d), dact(s * f), dq(s * d), dkk(s * d), dv(s * d), dctx(s * d),
      dprobs(s * s);
  const Real scale = Real(1) / std::sqrt(static_cast<Real>(dk));

  for (std::size_t li = p.layers.size(); li-- > 0;) {
    const auto& L = p.layers[li];
    auto& G = g.layers[li];
    const auto& lc = cache.layers[li];

    // FFN branch: z = z_mid + W2 gelu(W1 ln2 + b1) + b2.
    col_sum_acc(dz.data(), s, d, G.b2.data());
    k::gemm_tn_acc<Real>(d, f, s, dz.data(), d, lc.act.data(), f, G.w2.data(), f);
    k::gemm_nn<Real>(s, f, d, dz.data(), d, L.w2.data(), f, dact.data(), f, false);
    for (std::size_t i = 0; i < s * f; ++i) dact[i] *= gelu_grad(lc.pre[i]);
    col_sum_acc(dact.data(), s, f, G.b1.data());
    k::gemm_tn_acc<Real>(f, d, s, dact.data(), f, lc.ln2.data(), d, G.w1.data(), d);
    k::gemm_nn<Real>(s, d, f, dact.data(), f, L.w1.data(), d, dln.data(), d, false);
    dmid = dz;
    layer_norm_backward(lc.z_mid.data(), s, d, L.ln2_gamma.data(), lc.ln2_mean.data(), lc.ln2_rstd.data(),
                        dln.data(), dmid.data(), G.ln2_gamma.data(), G.ln2_beta.data());

    // Attention branch: z_mid = x_in + Wo ctx.
    k::gemm_tn_acc<Real>(d, d, s, dmid.data(), d, lc.ctx.data(), d, G.wo.data(), d);
    k::gemm_nn<Real>(s, d, d, dmid.data(), d, L.wo.data(), d, dctx.data(), d, false);
    std::fill(dkk.begin(), dkk.end(), Real(0));
    std::fill(dv.begin(), dv.end(), Real(0));
    for (std::size_t hh = 0; hh < h; ++hh) {
      const Real* probs = lc.probs.data() + hh * s * s;
      const std::size_t off = hh * dk;
      k::gemm_nt<Real>(s, s, dk, dctx.data() + off, d, lc.v.data() + off, d, dprobs.data(), s, false);
      k::gemm_tn_acc<Real>(s, dk, s, probs, s, dctx.data() + off, d, dv.data() + off, d);
      for (std::size_t i = 0; i < s; ++i) {
        Real* dr = dprobs.data() + i * s;
        const Real* pr = probs + i * s;
        const Real rowdot = k::dot<Real>(dr, pr, s);
        for (std::size_t j = 0; j < s; ++j) dr[j] = pr[j] * (dr[j] - rowdot) * scale;
      }
      k::gemm_nn<Real>(s, dk, s, dprobs.data(), s, lc.k.data() + off, d, dq.data() + off, d, false);
      k::gemm_tn_acc<Real>(s, dk, s, dprobs.data(), s, lc.q.data() + off, d, dkk.data() + off, d);
    }
    k::gemm_tn_acc<Real>(d, d, s, dq.data(), d, lc.ln1.data(), d, G.wq.data(), d);
    k::gemm_tn_acc<Real>(d, d, s, dkk.data(), d, lc.ln1.data(), d, G.wk.data(), d);
    k::gemm_tn_acc<Real>(d, d, s, dv.data(), d, lc.ln1.data(), d, G.wv.data(), d);
    k::gemm_nn<Real>(s, d, d, dq.data(), d, L.wq.data(), d, dln.data(), d, false);
    k::gemm_nn<Real>(s, d, d, dkk.data(), d, L.wk.data(), d, dln.data(), d, true);
    k::gemm_nn<Real>(s, d, d, dv.data(), d, L.wv.data(), d, dln.data(), d, true);
    dz = dmid;
    layer_norm_backward(lc.x_in.data(), s, d, L.ln1_gamma.data(), lc.ln1_mean.data(), lc.ln1_rstd.data(), dln.data(),
                        dz.data(), G.ln1_gamma.data(), G.ln1_beta.data());
  }

  // Embedding.
  for (std::size_t i = 0; i < s * d; ++i) g.pos_embedding[i] += dz[i];
  for (std::size_t i = 0; i < d; ++i) g.cls_token[i] += dz[i];
  k::gemm_tn_acc<Real>(d, pd, n, dz.data() + d, d, cache.patches.data(), pd, g.patch_embedding.data(), pd);
}

template <typename Real>
std::vector<Real> prepare_input(const Clip& clip, const ModelConfig& c) {
  c.validate();
  if (clip.frames() < c.frames) throw ConfigError("clip has fewer frames than the model expects");
  if (clip.frames() % c.frames != 0) throw ConfigError("clip frame count must be a multiple of model frames");
  const Clip* src = &clip;
  Clip resized;
  if (clip.height() != c.height || clip.width() != c.width) {
    resized = resize_clip(clip, c.height, c.width);
    src = &resized;
  }
  const int stride = clip.frames() / c.frames;
  std::vector<Real> out(c.input_size());
  const std::size_t fs = src->frame_size();
  for (int t = 0; t < c.frames; ++t) {
    const auto frame = src->frame(t * stride + stride - 1);
    for (std::size_t i = 0; i < fs; ++i)
      out[t * fs + i] = static_cast<Real>((frame[i] / 255.0 - kNormMean) / kNormStd);
  }
  return out;
}

#define TACKLE_INSTANTIATE(R)                                                                                   \
  template struct ModelParameters<R>;                                                                           \
  template ModelParameters<R> init_parameters<R>(const ModelConfig&, std::uint64_t);                          \
  template void extract_tubelets<R>(std::span<const R>, const ModelConfig&, std::vector<R>&);                 \
  template std::vector<R> tokenize<R>(std::span<const R>, const ModelParameters<R>&);                         \
  template std::vector<R> attention<R>(std::span<const R>, std::span<const R>, std::span<const R>, int, int,  \
                                       int);                                                                    \
  template void encoder_layer<R>(std::vector<R>&, const LayerParameters<R>&, const ModelConfig&,              \
                                 LayerCache<R>*);                                                               \
  template ForwardResult<R> forward<R>(std::span<const R>, const ModelParameters<R>&, ForwardCache<R>&);      \
  template ForwardResult<R> forward<R>(std::span<const R>, const ModelParameters<R>&);                        \
  template void backward<R>(const ModelParameters<R>&, const ForwardCache<R>&, std::span<const R>,            \
                            ModelParameters<R>&);                                                               \
  template std::vector<R> prepare_input<R>(const Clip&, const ModelConfig&);

TACKLE_INSTANTIATE(float)
TACKLE_INSTANTIATE(double)

#undef TACKLE_INSTANTIATE

template ModelParameters<double> ModelParameters<float>::cast<double>() const;
template ModelParameters<float> ModelParameters<double>::cast<float>() const;
template ModelParameters<float> ModelParameters<float>::cast<float>() const;
template ModelParameters<double> ModelParameters<double>::cast<double>() const;

}  // namespace tackle
