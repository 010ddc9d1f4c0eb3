#include "afp/frontend.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "dft.hpp"

namespace afp {

void FrontendConfig::validate() const {
  if (hann_width < 2) throw std::invalid_argument("hann_width must be >= 2");
  if (fft_size < 2) throw std::invalid_argument("fft_size must be >= 2");
  if (fft_size % 2 != 0) throw std::invalid_argument("fft_size must be even");
  if (hop < 1 || hop > fft_size) {
    throw std::invalid_argument("hop must be in [1, fft_size]");
  }
}

double Spectrogram::global_max() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, v);
  return m;
}

std::vector<double> hann_kernel(const FrontendConfig& config) {
  config.validate();
  const int width = config.hann_width;
  std::vector<double> taps(width + 1);
  double sum = 0.0;
  for (int n = 0; n <= width; ++n) {
    const double s = std::sin(std::numbers::pi * n / width);
    taps[n] = s * s;
    sum += taps[n];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

std::vector<double> smooth(const AudioSignal& x, const FrontendConfig& config) {
  const auto taps = hann_kernel(config);
  if (x.samples.size() < taps.size()) {
    throw std::invalid_argument("signal shorter than the smoothing kernel");
  }
  const std::size_t out_len = x.samples.size() - config.hann_width;
  std::vector<double> out(out_len);
  for (std::size_t m = 0; m < out_len; ++m) {
    double acc = 0.0;
    for (std::size_t n = 0; n < taps.size(); ++n) {
      acc += x.samples[m + n] * taps[n];
    }
    out[m] = acc;
  }
  return out;
}

namespace {

int frame_count(std::size_t smoothed_len, const FrontendConfig& config) {
  if (smoothed_len < static_cast<std::size_t>(config.fft_size)) {
    throw std::invalid_argument("input shorter than one analysis frame");
  }
  return static_cast<int>((smoothed_len - config.fft_size) / config.hop) + 1;
}

// Shared forward pass; re/im receive the half-spectrum when non-null.
Spectrogram run_frames(std::span<const double> smoothed,
                       const FrontendConfig& config, std::vector<double>* re,
                       std::vector<double>* im) {
  const int frames = frame_count(smoothed.size(), config);
  const int n = config.fft_size;
  const int bins = n / 2 + 1;

  Spectrogram spec;
  spec.frames = frames;
  spec.bins = bins;
  spec.values.resize(static_cast<std::size_t>(frames) * bins);
  if (re != nullptr) {
    re->resize(spec.values.size());
    im->resize(spec.values.size());
  }

  const detail::Dft dft(n);
  std::vector<double> out_re(n), out_im(n);
  for (int t = 0; t < frames; ++t) {
    dft.forward(smoothed.subspan(static_cast<std::size_t>(t) * config.hop, n),
                out_re, out_im);
    const std::size_t row = static_cast<std::size_t>(t) * bins;
    for (int k = 0; k < bins; ++k) {
      spec.values[row + k] = std::hypot(out_re[k], out_im[k]);
      if (re != nullptr) {
        (*re)[row + k] = out_re[k];
        (*im)[row + k] = out_im[k];
      }
    }
  }
  return spec;
}

}  // namespace

Spectrogram spectrogram(std::span<const double> smoothed,
                        const FrontendConfig& config) {
  config.validate();
  return run_frames(smoothed, config, nullptr, nullptr);
}

Spectrogram features(const AudioSignal& x, const FrontendConfig& config) {
  return spectrogram(smooth(x, config), config);
}

FrontendTape features_with_tape(const AudioSignal& x,
                                const FrontendConfig& config) {
  config.validate();
  FrontendTape tape;
  tape.config = config;
  tape.input_len = x.samples.size();
  tape.smoothed = smooth(x, config);
  tape.spec = run_frames(tape.smoothed, config, &tape.re, &tape.im);
  return tape;
}

std::vector<double> FrontendTape::backprop(std::span<const double> d_spec) const {
  if (d_spec.size() != spec.values.size()) {
    throw std::invalid_argument("d_spec size does not match the spectrogram");
  }
  const int n = config.fft_size;
  const int bins = spec.bins;
  const detail::Dft dft(n);

  std::vector<double> d_smoothed(smoothed.size(), 0.0);
  std::vector<double> g_re(n), g_im(n), frame_grad(n);
  for (int t = 0; t < spec.frames; ++t) {
    const std::size_t row = static_cast<std::size_t>(t) * bins;
    bool any = false;
    std::fill(g_re.begin(), g_re.end(), 0.0);
    std::fill(g_im.begin(), g_im.end(), 0.0);
    for (int k = 0; k < bins; ++k) {
      const double g = d_spec[row + k];
      const double mag = spec.values[row + k];
      if (g == 0.0 || mag == 0.0) continue;  // d|z|/dz is fixed to 0 at z = 0
      g_re[k] = g * re[row + k] / mag;
      g_im[k] = g * im[row + k] / mag;
      any = true;
    }
    if (!any) continue;
    dft.adjoint_real(g_re, g_im, frame_grad);
    const std::size_t base = static_cast<std::size_t>(t) * config.hop;
    for (int j = 0; j < n; ++j) d_smoothed[base + j] += frame_grad[j];
  }

  const auto taps = hann_kernel(config);
  std::vector<double> d_input(input_len, 0.0);
  for (std::size_t m = 0; m < d_smoothed.size(); ++m) {
    const double g = d_smoothed[m];
    if (g == 0.0) continue;
    for (std::size_t j = 0; j < taps.size(); ++j) {
      d_input[m + j] += g * taps[j];
    }
  }
  return d_input;
}

void write_spectrogram_csv(const Spectrogram& spec,
                           const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  char buf[32];
  for (int t = 0; t < spec.frames; ++t) {
    for (int k = 0; k < spec.bins; ++k) {
      std::snprintf(buf, sizeof(buf), "%.9g", spec.at(t, k));
      if (k > 0) out << ',';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed to write: " + path.string());
}

void write_spectrogram_pgm(const Spectrogram& spec,
                           const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << "P5\n" << spec.frames << ' ' << spec.bins << "\n255\n";
  const double scale = spec.global_max();
  std::vector<unsigned char> row(spec.frames);
  for (int k = 0; k < spec.bins; ++k) {
    for (int t = 0; t < spec.frames; ++t) {
      const double v = scale > 0.0 ? spec.at(t, k) / scale : 0.0;
      row[t] = static_cast<unsigned char>(std::lround(255.0 * v));
    }
    out.write(reinterpret_cast<const char*>(row.data()), row.size());
  }
  if (!out) throw std::runtime_error("failed to write: " + path.string());
}

}  // namespace afp
