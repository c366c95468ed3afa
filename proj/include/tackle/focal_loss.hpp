#pragma once

#include <span>
#include <vector>

namespace tackle {

struct FocalLossConfig {
  double gamma = 1.6;
  double alpha_risky = 0.6;  // alpha_safe = 1 - alpha_risky

  void validate() const;
  double alpha_for(int true_class) const { return true_class == 1 ? alpha_risky : 1.0 - alpha_risky; }
};

inline constexpr double kProbabilityFloor = 1e-12;

struct FocalLossResult {
  double loss = 0;
  std::vector<double> dlogits;
};

// -alpha_y (1 - p_y)^gamma log p_y with p_y floored at 1e-12, and its exact
// gradient with respect to the logits that produced `probs` through softmax.
// Class 1 is Risky.
FocalLossResult focal_loss(std::span<const double> probs, int true_class, const FocalLossConfig& cfg);

// (1 - p)^gamma
double modulating_factor(double p_true, double gamma);

}  // namespace tackle
