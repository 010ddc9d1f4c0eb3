#include "afp/loss.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace afp {

void LossParams::validate() const {
  if (w2 < 1 || w2 >= w1) throw std::invalid_argument("need 1 <= w2 < w1");
  if (margin_c <= 0.0) throw std::invalid_argument("margin_c must be > 0");
  if (alpha <= 0.0) throw std::invalid_argument("alpha must be > 0");
  if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
}

namespace {

// Smoothed max of v with optional dS/dv_j. Weights come from a softmax
// with max-subtraction; dS/dv_j = w_j (1 + alpha (v_j - S)).
double smooth_max_grad(std::span<const double> v, double alpha,
                       std::span<double> dv) {
  double vmax = v[0];
  for (double x : v) vmax = std::max(vmax, x);
  double sum_w = 0.0, sum_wv = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    const double w = std::exp(alpha * (v[j] - vmax));
    sum_w += w;
    sum_wv += w * v[j];
  }
  const double s = sum_wv / sum_w;
  if (!dv.empty()) {
    for (std::size_t j = 0; j < v.size(); ++j) {
      const double w = std::exp(alpha * (v[j] - vmax)) / sum_w;
      dv[j] = w * (1.0 + alpha * (v[j] - s));
    }
  }
  return s;
}

struct Window {
  int t_lo, t_hi, k_lo, k_hi;  // inclusive bounds
};

Window clipped_window(const Spectrogram& spec, int t, int k, int w) {
  return {std::max(0, t - w), std::min(spec.frames - 1, t + w),
          std::max(0, k - w), std::min(spec.bins - 1, k + w)};
}

// Accumulates scale * sum_{i in psi} ReLU(c - (S_big - S_small)) into
// value (remix_order swaps the pools). When d_spec is non-empty the
// exact gradient w.r.t. the spectrogram is accumulated as well.
void accumulate_pooled(const Spectrogram& spec, const Fingerprint& psi,
                       const LossParams& params, bool remix_order, double scale,
                       double& value, std::span<double> d_spec) {
  const bool want_grad = !d_spec.empty();
  const int cells1 = (2 * params.w1 + 1) * (2 * params.w1 + 1);
  std::vector<double> v1, v2, g1(want_grad ? cells1 : 0), g2(want_grad ? cells1 : 0);
  v1.reserve(cells1);
  v2.reserve(cells1);

  for (const Peak& p : psi.peaks) {
    const int t = static_cast<int>(p.frame);
    const int k = static_cast<int>(p.bin);
    const Window w1 = clipped_window(spec, t, k, params.w1);
    const Window w2 = clipped_window(spec, t, k, params.w2);

    v1.clear();
    for (int tt = w1.t_lo; tt <= w1.t_hi; ++tt) {
      for (int kk = w1.k_lo; kk <= w1.k_hi; ++kk) v1.push_back(spec.at(tt, kk));
    }
    v2.clear();
    for (int tt = w2.t_lo; tt <= w2.t_hi; ++tt) {
      for (int kk = w2.k_lo; kk <= w2.k_hi; ++kk) v2.push_back(spec.at(tt, kk));
    }

    const auto d1 = want_grad ? std::span<double>(g1.data(), v1.size())
                              : std::span<double>();
    const auto d2 = want_grad ? std::span<double>(g2.data(), v2.size())
                              : std::span<double>();
    const double s1 = smooth_max_grad(v1, params.alpha, d1);
    const double s2 = smooth_max_grad(v2, params.alpha, d2);

    const double inner = remix_order ? s2 - s1 : s1 - s2;
    const double hinge = params.margin_c - inner;
    if (hinge <= 0.0) continue;  // subgradient 0 at and past the kink
    value += scale * hinge;
    if (!want_grad) continue;

    // d(hinge)/d(inner) = -1; the big pool carries the inner's +1 in the
    // default order and -1 in remix order.
    const double sign1 = remix_order ? scale : -scale;
    const double sign2 = -sign1;
    std::size_t j = 0;
    for (int tt = w1.t_lo; tt <= w1.t_hi; ++tt) {
      for (int kk = w1.k_lo; kk <= w1.k_hi; ++kk, ++j) {
        d_spec[static_cast<std::size_t>(tt) * spec.bins + kk] += sign1 * d1[j];
      }
    }
    j = 0;
    for (int tt = w2.t_lo; tt <= w2.t_hi; ++tt) {
      for (int kk = w2.k_lo; kk <= w2.k_hi; ++kk, ++j) {
        d_spec[static_cast<std::size_t>(tt) * spec.bins + kk] += sign2 * d2[j];
      }
    }
  }
}

void check_dims(const Spectrogram& spec, const Fingerprint& psi) {
  if (static_cast<std::uint32_t>(spec.frames) != psi.frames ||
      static_cast<std::uint32_t>(spec.bins) != psi.bins) {
    throw std::invalid_argument("fingerprint does not match feature dimensions");
  }
}

// Sorted list of (frame, bin) cells shared by both peak sets.
std::vector<std::pair<std::uint32_t, std::uint32_t>> shared_cells(
    const Fingerprint& a, const Fingerprint& b) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> cells;
  auto ia = a.peaks.begin();
  auto ib = b.peaks.begin();
  while (ia != a.peaks.end() && ib != b.peaks.end()) {
    const auto ka = std::make_pair(ia->frame, ia->bin);
    const auto kb = std::make_pair(ib->frame, ib->bin);
    if (ka == kb) {
      cells.push_back(ka);
      ++ia;
      ++ib;
    } else if (ka < kb) {
      ++ia;
    } else {
      ++ib;
    }
  }
  return cells;
}

double sum_over_cells(
    const Spectrogram& spec,
    const std::vector<std::pair<std::uint32_t, std::uint32_t>>& cells) {
  double v = 0.0;
  for (const auto& [t, k] : cells) v += spec.at(static_cast<int>(t), static_cast<int>(k));
  return v;
}

}  // namespace

double smooth_max(std::span<const double> values, double alpha) {
  if (values.empty()) throw std::invalid_argument("smooth_max of empty input");
  return smooth_max_grad(values, alpha, {});
}

LossValue whitebox_loss(const AudioSignal& x, const Fingerprint& psi_y,
                        const FrontendConfig& config, const PeakParams& peaks) {
  const FrontendTape tape = features_with_tape(x, config);
  check_dims(tape.spec, psi_y);
  const Fingerprint psi_x = extract_peaks(tape.spec, peaks, psi_y.config_digest);
  const auto cells = shared_cells(psi_x, psi_y);

  LossValue result;
  result.value = sum_over_cells(tape.spec, cells);
  if (cells.empty()) {
    result.gradient.assign(x.samples.size(), 0.0);
    return result;
  }
  std::vector<double> d_spec(tape.spec.values.size(), 0.0);
  for (const auto& [t, k] : cells) {
    d_spec[static_cast<std::size_t>(t) * tape.spec.bins + k] = 1.0;
  }
  result.gradient = tape.backprop(d_spec);
  return result;
}

LossValue robust_loss(const AudioSignal& x, const Fingerprint& psi_y,
                      const FrontendConfig& config, const LossParams& params) {
  params.validate();
  const FrontendTape tape = features_with_tape(x, config);
  check_dims(tape.spec, psi_y);

  LossValue result;
  std::vector<double> d_spec(tape.spec.values.size(), 0.0);
  accumulate_pooled(tape.spec, psi_y, params, /*remix_order=*/false, 1.0,
                    result.value, d_spec);
  result.gradient = tape.backprop(d_spec);
  return result;
}

LossValue remix_loss(const AudioSignal& x, const Fingerprint& psi_y,
                     const FrontendConfig& config, const LossParams& params) {
  params.validate();
  const FrontendTape tape = features_with_tape(x, config);
  check_dims(tape.spec, psi_y);

  LossValue result;
  std::vector<double> d_spec(tape.spec.values.size(), 0.0);
  accumulate_pooled(tape.spec, psi_y, params, /*remix_order=*/true, 1.0,
                    result.value, d_spec);
  result.gradient = tape.backprop(d_spec);
  return result;
}

LossValue remix_objective(const AudioSignal& x, const Fingerprint& psi_x,
                          const Fingerprint& psi_y,
                          const FrontendConfig& config,
                          const LossParams& params) {
  params.validate();
  const FrontendTape tape = features_with_tape(x, config);
  check_dims(tape.spec, psi_x);
  check_dims(tape.spec, psi_y);

  LossValue result;
  std::vector<double> d_spec(tape.spec.values.size(), 0.0);
  accumulate_pooled(tape.spec, psi_x, params, /*remix_order=*/false, 1.0,
                    result.value, d_spec);
  if (params.lambda > 0.0) {
    accumulate_pooled(tape.spec, psi_y, params, /*remix_order=*/true,
                      params.lambda, result.value, d_spec);
  }
  result.gradient = tape.backprop(d_spec);
  return result;
}

double finite_diff_check(LossKind kind, const AudioSignal& x,
                         const Fingerprint& psi_y, const FrontendConfig& config,
                         const PeakParams& peaks, const LossParams& params,
                         double h, int min_coords, std::uint64_t seed) {
  if (h <= 0.0) throw std::invalid_argument("finite_diff_check needs h > 0");

  // Analytic gradient at the base point.
  LossValue base;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> frozen_cells;
  switch (kind) {
    case LossKind::kWhitebox: {
      base = whitebox_loss(x, psi_y, config, peaks);
      const Fingerprint psi_x =
          extract_peaks(features(x, config), peaks, psi_y.config_digest);
      frozen_cells = shared_cells(psi_x, psi_y);
      break;
    }
    case LossKind::kRobust:
      base = robust_loss(x, psi_y, config, params);
      break;
    case LossKind::kRemix:
      base = remix_loss(x, psi_y, config, params);
      break;
  }

  // The whitebox mask is frozen at the base point: that is the level at
  // which the loss is differentiable.
  const auto value_at = [&](const AudioSignal& probe) {
    if (kind == LossKind::kWhitebox) {
      return sum_over_cells(features(probe, config), frozen_cells);
    }
    const Spectrogram spec = features(probe, config);
    double value = 0.0;
    accumulate_pooled(spec, psi_y, params, kind == LossKind::kRemix, 1.0, value,
                      {});
    return value;
  };

  const std::size_t n = x.samples.size();
  const std::size_t count = std::min<std::size_t>(n, static_cast<std::size_t>(min_coords));
  std::vector<std::size_t> coords(n);
  for (std::size_t i = 0; i < n; ++i) coords[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < count; ++i) {  // partial Fisher-Yates
    const std::size_t j = i + rng() % (n - i);
    std::swap(coords[i], coords[j]);
  }

  double max_rel = 0.0;
  AudioSignal probe = x;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t c = coords[i];
    const double saved = probe.samples[c];
    probe.samples[c] = saved + h;
    const double plus = value_at(probe);
    probe.samples[c] = saved - h;
    const double minus = value_at(probe);
    probe.samples[c] = saved;

    const double numeric = (plus - minus) / (2.0 * h);
    const double analytic = base.gradient[c];
    if (std::abs(numeric) < 1e-10 && std::abs(analytic) < 1e-10) continue;
    const double rel = std::abs(numeric - analytic) /
                       std::max(std::abs(numeric), std::abs(analytic));
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

}  // namespace afp
