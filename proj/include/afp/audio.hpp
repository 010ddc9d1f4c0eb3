#pragma once

#include <filesystem>
#include <stdexcept>
#include <vector>

namespace afp {

// File is not in a format this toolkit handles (wrong container, codec,
// bit depth, magic number, ...).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File looked right at first but its contents are truncated or
// internally inconsistent.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mono waveform, samples in [-1, +1]. The canonical working rate is
// 8 kHz; load_audio resamples everything to the requested rate.
struct AudioSignal {
  std::vector<double> samples;
  int sample_rate = 0;
};

inline constexpr int kDefaultSampleRate = 8000;

// Perturbation sizes on the [0,1] reporting scale: amplitude differences
// on the internal [-1,+1] scale are halved before the norms are taken.
// l2_rms is the root-mean-square (length-normalized l2), so
// l2_rms <= linf always holds.
struct NormReport {
  double linf = 0.0;
  double l2_rms = 0.0;
};

// Reads a RIFF/WAVE file (PCM, 16-bit, mono or stereo). Stereo is
// downmixed by channel average, integer samples are divided by 32768,
// and the result is resampled to target_rate.
AudioSignal load_audio(const std::filesystem::path& path, int target_rate);

// Writes signal as a 16-bit PCM mono WAV. Samples are clamped to
// [-1, +1] and rounded; a reload differs by at most 1/32768 per sample.
void save_audio(const AudioSignal& signal, const std::filesystem::path& path);

// Linear-interpolation resampling. Output length is
// ceil(len * new_rate / old_rate); same-rate calls return a copy.
AudioSignal resample(const AudioSignal& signal, int new_rate);

NormReport perturbation_norms(const AudioSignal& x, const AudioSignal& x_adv);

}  // namespace afp
