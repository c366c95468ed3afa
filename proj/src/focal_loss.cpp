#include "tackle/focal_loss.hpp"

#include <algorithm>
#include <cmath>

#include "tackle/error.hpp"

namespace tackle {

void FocalLossConfig::validate() const {
  if (!(gamma >= 0)) throw ConfigError("focal loss gamma must be >= 0");
  if (!(alpha_risky > 0 && alpha_risky < 1)) throw ConfigError("focal loss alpha must be in (0, 1)");
}

double modulating_factor(double p_true, double gamma) { return std::pow(1.0 - p_true, gamma); }

FocalLossResult focal_loss(std::span<const double> probs, int true_class, const FocalLossConfig& cfg) {
  if (true_class < 0 || true_class >= static_cast<int>(probs.size())) throw ConfigError("true class out of range");
  const double alpha = cfg.alpha_for(true_class);
  const double p = std::max(probs[true_class], kProbabilityFloor);
  // 1 - p_y as the mass on the other classes, which keeps precision near p_y = 1.
  double q = 0;
  for (std::size_t j = 0; j < probs.size(); ++j)
    if (static_cast<int>(j) != true_class) q += probs[j];
  const double logp = std::log(p);

  FocalLossResult r;
  r.loss = -alpha * std::pow(q, cfg.gamma) * logp;

  // dL/dp_y * p_y = alpha [gamma q^(gamma-1) p log p - q^gamma]; dp_y/dz_j = p_y (delta - p_j).
  double factor = 0;
  if (q > 0) factor = alpha * (cfg.gamma * std::pow(q, cfg.gamma - 1.0) * p * logp - std::pow(q, cfg.gamma));
  else if (cfg.gamma == 0) factor = -alpha;
  r.dlogits.resize(probs.size());
  for (std::size_t j = 0; j < probs.size(); ++j)
    r.dlogits[j] = factor * ((static_cast<int>(j) == true_class ? 1.0 : 0.0) - probs[j]);
  return r;
}

}  // namespace tackle
