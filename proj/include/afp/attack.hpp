#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>

#include "afp/loss.hpp"
#include "afp/matcher.hpp"

namespace afp {

enum class AttackMode { kDefault, kRemix };

// Loss driven by the default attack. kRobust is the two-pool margin
// objective; kWhitebox optimizes the masked-energy loss directly and is
// the strongest choice against this model itself. Remix mode always
// uses the robust base term.
enum class AttackObjective { kRobust, kWhitebox };

struct AttackConfig {
  // l-inf budget on the [0,1] reporting scale; the per-sample bound on
  // the internal [-1,+1] scale is 2*epsilon.
  double epsilon = 0.05;
  int iterations = 2000;
  double learning_rate = 2e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  LossParams loss;
  // The hinge margin is derived per attack as
  // margin_ratio * global_max(phi(clean x)); loss.margin_c is ignored.
  double margin_ratio = 0.05;
  AttackMode mode = AttackMode::kDefault;
  AttackObjective objective = AttackObjective::kRobust;
  std::uint64_t seed = 0;

  void validate() const;
};

struct AttackReport {
  NormReport norms;
  double removal_rate = 0.0;
  std::vector<double> loss_trajectory;
  std::optional<MatchResult> match_before;  // filled by callers with a db
  std::optional<MatchResult> match_after;
  int iterations_run = 0;
  std::optional<long> overlap_with_target_before;  // remix mode only
  std::optional<long> overlap_with_target;
};

// Bias-corrected Adam. The state owns the moments and the step counter;
// adam_step returns the update to subtract from the variable.
struct AdamState {
  std::vector<double> m, v;
  long t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamState(std::size_t n, double beta1 = 0.9, double beta2 = 0.999,
                     double eps = 1e-8);
};

std::vector<double> adam_step(AdamState& state, std::span<const double> gradient,
                              double learning_rate);

// Projected gradient descent against the clean signal's own fingerprint:
// delta starts at zero, each iteration takes an Adam step on the chosen
// objective, clamps delta to [-2e, +2e] and the perturbed samples to
// [-1, +1]. psi(x) is computed once from the clean signal and held fixed.
std::pair<AudioSignal, AttackReport> default_attack(
    const AudioSignal& x, const AttackConfig& config,
    const FrontendConfig& frontend, const PeakParams& peaks);

// Same loop on robust_loss(x+d, psi(x)) + lambda * remix_loss(x+d, psi(y)).
// y must be at least as long as x; its fingerprint is cut to x's frame
// count. The report carries overlap(psi(x+d), psi(y)) before and after.
std::pair<AudioSignal, AttackReport> remix_attack(
    const AudioSignal& x, const AudioSignal& y, const AttackConfig& config,
    const FrontendConfig& frontend, const PeakParams& peaks);

// Uniform noise in [-2e, +2e] per sample with the same clamping and
// metrics as the attacks. Deterministic for a fixed seed.
std::pair<AudioSignal, AttackReport> random_noise_baseline(
    const AudioSignal& x, double epsilon, std::uint64_t seed,
    const FrontendConfig& frontend, const PeakParams& peaks);

// Report JSON with the documented keys: mode, epsilon, iterations, linf,
// l2_rms, removal_rate, loss_first, loss_last, match_before, match_after,
// overlap_with_target_before, overlap_with_target.
std::string report_json(const AttackReport& report, const AttackConfig& config);

}  // namespace afp
