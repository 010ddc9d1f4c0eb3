#include "afp/attack.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "json.hpp"

namespace afp {

void AttackConfig::validate() const {
  if (epsilon < 0.0 || epsilon > 0.5) {
    throw std::invalid_argument("epsilon must be in [0, 0.5]");
  }
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (learning_rate <= 0.0) throw std::invalid_argument("learning_rate must be > 0");
  if (adam_beta1 < 0.0 || adam_beta1 >= 1.0 || adam_beta2 < 0.0 ||
      adam_beta2 >= 1.0) {
    throw std::invalid_argument("adam betas must be in [0, 1)");
  }
  if (margin_ratio <= 0.0) throw std::invalid_argument("margin_ratio must be > 0");
}

AdamState::AdamState(std::size_t n, double beta1, double beta2, double eps)
    : m(n, 0.0), v(n, 0.0), beta1(beta1), beta2(beta2), eps(eps) {}

std::vector<double> adam_step(AdamState& state, std::span<const double> gradient,
                              double learning_rate) {
  if (gradient.size() != state.m.size()) {
    throw std::invalid_argument("gradient size does not match Adam state");
  }
  ++state.t;
  const double corr1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double corr2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  std::vector<double> step(gradient.size());
  for (std::size_t i = 0; i < gradient.size(); ++i) {
    const double g = gradient[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double m_hat = state.m[i] / corr1;
    const double v_hat = state.v[i] / corr2;
    step[i] = learning_rate * m_hat / (std::sqrt(v_hat) + state.eps);
  }
  return step;
}

namespace {

// One PGD run; the loss closure evaluates the objective at x + delta.
template <typename LossFn>
AudioSignal run_pgd(const AudioSignal& x, const AttackConfig& config,
                    std::vector<double>& trajectory, LossFn&& loss_at) {
  const std::size_t n = x.samples.size();
  const double bound = 2.0 * config.epsilon;  // [-1,1]-scale sample bound

  std::vector<double> delta(n, 0.0);
  AudioSignal probe = x;
  AdamState adam(n, config.adam_beta1, config.adam_beta2, config.adam_eps);
  trajectory.clear();
  trajectory.reserve(config.iterations);

  for (int iter = 0; iter < config.iterations; ++iter) {
    for (std::size_t i = 0; i < n; ++i) probe.samples[i] = x.samples[i] + delta[i];
    const LossValue lv = loss_at(probe);
    trajectory.push_back(lv.value);

    const auto step = adam_step(adam, lv.gradient, config.learning_rate);
    for (std::size_t i = 0; i < n; ++i) {
      double d = std::clamp(delta[i] - step[i], -bound, bound);
      // Amplitude projection folded back into delta.
      d = std::clamp(x.samples[i] + d, -1.0, 1.0) - x.samples[i];
      delta[i] = d;
    }
  }

  AudioSignal adv = x;
  for (std::size_t i = 0; i < n; ++i) adv.samples[i] = x.samples[i] + delta[i];
  return adv;
}

}  // namespace

std::pair<AudioSignal, AttackReport> default_attack(
    const AudioSignal& x, const AttackConfig& config,
    const FrontendConfig& frontend, const PeakParams& peaks) {
  config.validate();

  const Spectrogram clean_spec = features(x, frontend);
  const Fingerprint psi_x =
      extract_peaks(clean_spec, peaks, config_digest(frontend, peaks));
  if (psi_x.peaks.empty()) {
    throw std::invalid_argument("clean signal has an empty fingerprint");
  }

  LossParams params = config.loss;
  params.margin_c = config.margin_ratio * clean_spec.global_max();

  AttackReport report;
  const auto loss_at = [&](const AudioSignal& probe) {
    if (config.objective == AttackObjective::kWhitebox) {
      return whitebox_loss(probe, psi_x, frontend, peaks);
    }
    return robust_loss(probe, psi_x, frontend, params);
  };
  AudioSignal adv = run_pgd(x, config, report.loss_trajectory, loss_at);

  report.iterations_run = config.iterations;
  report.norms = perturbation_norms(x, adv);
  report.removal_rate = removal_rate(psi_x, fingerprint(adv, frontend, peaks));
  return {std::move(adv), std::move(report)};
}

std::pair<AudioSignal, AttackReport> remix_attack(
    const AudioSignal& x, const AudioSignal& y, const AttackConfig& config,
    const FrontendConfig& frontend, const PeakParams& peaks) {
  config.validate();
  if (x.sample_rate != y.sample_rate) {
    throw std::invalid_argument("remix target must share the sample rate");
  }

  const Spectrogram clean_spec = features(x, frontend);
  const Fingerprint psi_x =
      extract_peaks(clean_spec, peaks, config_digest(frontend, peaks));
  if (psi_x.peaks.empty()) {
    throw std::invalid_argument("clean signal has an empty fingerprint");
  }

  Fingerprint psi_y = fingerprint(y, frontend, peaks);
  if (psi_y.frames < psi_x.frames) {
    throw std::invalid_argument("remix target is shorter than the input");
  }
  if (psi_y.frames > psi_x.frames) {
    psi_y = sub_fingerprint(psi_y, 0, psi_x.frames);
  }

  LossParams params = config.loss;
  params.margin_c = config.margin_ratio * clean_spec.global_max();

  AttackReport report;
  report.overlap_with_target_before = overlap(psi_x, psi_y);
  const auto loss_at = [&](const AudioSignal& probe) {
    return remix_objective(probe, psi_x, psi_y, frontend, params);
  };
  AudioSignal adv = run_pgd(x, config, report.loss_trajectory, loss_at);

  report.iterations_run = config.iterations;
  report.norms = perturbation_norms(x, adv);
  const Fingerprint psi_adv = fingerprint(adv, frontend, peaks);
  report.removal_rate = removal_rate(psi_x, psi_adv);
  report.overlap_with_target = overlap(psi_adv, psi_y);
  return {std::move(adv), std::move(report)};
}

std::pair<AudioSignal, AttackReport> random_noise_baseline(
    const AudioSignal& x, double epsilon, std::uint64_t seed,
    const FrontendConfig& frontend, const PeakParams& peaks) {
  if (epsilon < 0.0 || epsilon > 0.5) {
    throw std::invalid_argument("epsilon must be in [0, 0.5]");
  }
  const Fingerprint psi_x = fingerprint(x, frontend, peaks);
  if (psi_x.peaks.empty()) {
    throw std::invalid_argument("clean signal has an empty fingerprint");
  }

  const double bound = 2.0 * epsilon;
  std::mt19937_64 rng(seed);
  AudioSignal adv = x;
  for (double& s : adv.samples) {
    // Portable uniform in [0,1): top 53 bits of the generator output.
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    const double noise = bound * (2.0 * u - 1.0);
    s = std::clamp(s + std::clamp(noise, -bound, bound), -1.0, 1.0);
  }

  AttackReport report;  // no optimization ran, so no trajectory
  report.iterations_run = 0;
  report.norms = perturbation_norms(x, adv);
  report.removal_rate = removal_rate(psi_x, fingerprint(adv, frontend, peaks));
  return {std::move(adv), std::move(report)};
}

std::string report_json(const AttackReport& report, const AttackConfig& config) {
  nlohmann::json j;
  j["mode"] = config.mode == AttackMode::kRemix ? "remix" : "default";
  j["epsilon"] = config.epsilon;
  j["iterations"] = report.iterations_run;
  j["linf"] = report.norms.linf;
  j["l2_rms"] = report.norms.l2_rms;
  j["removal_rate"] = report.removal_rate;
  j["loss_first"] =
      report.loss_trajectory.empty() ? 0.0 : report.loss_trajectory.front();
  j["loss_last"] =
      report.loss_trajectory.empty() ? 0.0 : report.loss_trajectory.back();

  const auto match_json = [](const std::optional<MatchResult>& m) {
    nlohmann::json out;
    if (!m) {
      out["matched"] = false;
      out["score"] = 0.0;
    } else {
      out["matched"] = true;
      out["track_id"] = m->track_id;
      out["offset_frames"] = m->offset_frames;
      out["score"] = m->score;
    }
    return out;
  };
  j["match_before"] = match_json(report.match_before);
  j["match_after"] = match_json(report.match_after);

  if (report.overlap_with_target) {
    j["overlap_with_target"] = *report.overlap_with_target;
    j["overlap_with_target_before"] = *report.overlap_with_target_before;
  } else {
    j["overlap_with_target"] = nullptr;
    j["overlap_with_target_before"] = nullptr;
  }
  return j.dump(2);
}

}  // namespace afp
