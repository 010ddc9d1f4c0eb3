#pragma once

#include <cstdint>
#include <span>

#include "afp/fingerprint.hpp"

namespace afp {

enum class LossKind { kWhitebox, kRobust, kRemix };

// Shared knobs of the pooled losses. w1 is the large pool half-width
// (the same width used in fingerprint generation), w2 < w1 the small
// one, margin_c the hinge margin, alpha the smooth-max sharpness, and
// lambda the weight of the remix term in the combined objective.
struct LossParams {
  int w1 = 10;
  int w2 = 3;
  double margin_c = 0.05;
  double alpha = 1.0;
  double lambda = 1.0;

  void validate() const;
};

struct LossValue {
  double value = 0.0;
  std::vector<double> gradient;  // w.r.t. the raw input samples
};

// Smoothed max: sum x_i e^{a x_i} / sum e^{a x_i}, computed with
// max-subtraction so large inputs cannot overflow. Bounded above by the
// true max and exact on constant inputs.
double smooth_max(std::span<const double> values, double alpha);

// Masked spectral energy: the sum of phi(x) over positions that are
// peaks of both psi(x) and psi_y. Both binary masks are recomputed per
// call and treated as constants, so the gradient flows through phi only.
LossValue whitebox_loss(const AudioSignal& x, const Fingerprint& psi_y,
                        const FrontendConfig& config, const PeakParams& peaks);

// Two-pool margin loss: for every peak of psi_y, a hinge on the gap
// between the smoothed max over the w1 neighborhood of phi(x) and the
// one over the w2 neighborhood. Gradients are exact through the pools,
// the hinge (subgradient 0 at the kink), the magnitude, and both
// convolutions.
LossValue robust_loss(const AudioSignal& x, const Fingerprint& psi_y,
                      const FrontendConfig& config, const LossParams& params);

// Same hinge with the two pooled terms swapped; pulls spectral maxima
// into the small neighborhoods of psi_y's peaks instead of out of them.
LossValue remix_loss(const AudioSignal& x, const Fingerprint& psi_y,
                     const FrontendConfig& config, const LossParams& params);

// robust_loss(x, psi_x) + lambda * remix_loss(x, psi_y) evaluated on a
// single forward pass. With lambda == 0 this is bit-identical to
// robust_loss alone.
LossValue remix_objective(const AudioSignal& x, const Fingerprint& psi_x,
                          const Fingerprint& psi_y,
                          const FrontendConfig& config,
                          const LossParams& params);

// Central-difference gradient oracle: perturbs a random subset of at
// least min_coords coordinates and reports the max relative error
// against the analytic gradient. Coordinates where both values are
// below 1e-10 are skipped. For the whitebox loss the psi(x) mask is
// frozen at the base point, matching the level at which that loss is
// differentiable.
double finite_diff_check(LossKind kind, const AudioSignal& x,
                         const Fingerprint& psi_y,
                         const FrontendConfig& config,
                         const PeakParams& peaks, const LossParams& params,
                         double h = 1e-4, int min_coords = 64,
                         std::uint64_t seed = 0);

}  // namespace afp
