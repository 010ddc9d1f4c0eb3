#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "afp/audio.hpp"

namespace afp {

// Analysis parameters for the two convolutional layers: a normalized
// Hann smoothing kernel of hann_width + 1 taps followed by a strided
// bank of Fourier kernels of length fft_size.
struct FrontendConfig {
  int hann_width = 64;
  int fft_size = 1024;  // must be even; bins 0..fft_size/2 are kept
  int hop = 256;        // samples between frames, 1 <= hop <= fft_size

  void validate() const;
};

// Time x frequency magnitude array, row-major [frame * bins + bin].
struct Spectrogram {
  std::vector<double> values;
  int frames = 0;
  int bins = 0;

  double at(int frame, int bin) const {
    return values[static_cast<std::size_t>(frame) * bins + bin];
  }
  double& at(int frame, int bin) {
    return values[static_cast<std::size_t>(frame) * bins + bin];
  }
  double global_max() const;
};

// Taps of the normalized Hann kernel: sin^2(pi n / W) scaled so the
// taps sum to one. Symmetric, ends at zero.
std::vector<double> hann_kernel(const FrontendConfig& config);

// Valid-mode convolution of the samples with the Hann kernel; output
// length is len(x) - hann_width.
std::vector<double> smooth(const AudioSignal& x, const FrontendConfig& config);

// Magnitude spectrum per frame: frame t, bin k holds
// |sum_n x[t*hop + n] e^{-i 2 pi k n / N}| for k = 0..N/2.
Spectrogram spectrogram(std::span<const double> smoothed,
                        const FrontendConfig& config);

// The full feature representation: spectrogram(smooth(x)).
Spectrogram features(const AudioSignal& x, const FrontendConfig& config);

// Forward pass of features() with the intermediates needed to run the
// chain rule back to the raw samples.
struct FrontendTape {
  FrontendConfig config;
  std::size_t input_len = 0;
  std::vector<double> smoothed;
  std::vector<double> re, im;  // frames x bins, pre-magnitude DFT output
  Spectrogram spec;

  // Maps d(loss)/d(spectrogram) to d(loss)/d(input samples). The
  // gradient of the magnitude at zero is taken to be zero.
  std::vector<double> backprop(std::span<const double> d_spec) const;
};

FrontendTape features_with_tape(const AudioSignal& x,
                                const FrontendConfig& config);

// Exports for the CLI plot command: CSV has one row per frame; the PGM
// is bins x frames (row i = bin i), 8-bit, scaled by the global max.
void write_spectrogram_csv(const Spectrogram& spec,
                           const std::filesystem::path& path);
void write_spectrogram_pgm(const Spectrogram& spec,
                           const std::filesystem::path& path);

}  // namespace afp
