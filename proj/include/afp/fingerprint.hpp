#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "afp/frontend.hpp"

namespace afp {

// Peak extraction parameters: a position is a peak when it equals the
// max of its (2*w1+1)^2 neighborhood and clears the magnitude floor
// (relative to the clip's global max).
struct PeakParams {
  int w1 = 10;
  double magnitude_floor_ratio = 0.01;

  void validate() const;
};

struct Peak {
  std::uint32_t frame = 0;
  std::uint32_t bin = 0;
  float magnitude = 0.0f;

  friend bool operator==(const Peak& a, const Peak& b) {
    return a.frame == b.frame && a.bin == b.bin && a.magnitude == b.magnitude;
  }
};

// Sparse binary peak map of a spectrogram. Peaks are sorted by
// (frame, bin) with no duplicates. config_digest ties the fingerprint
// to the (FrontendConfig, PeakParams) pair that produced it; zero means
// unbound (fingerprints built straight from a raw spectrogram).
struct Fingerprint {
  std::vector<Peak> peaks;
  std::uint32_t frames = 0;
  std::uint32_t bins = 0;
  std::uint64_t config_digest = 0;
};

std::uint64_t config_digest(const FrontendConfig& config,
                            const PeakParams& params);

// Maxpool-equality peaks: ties all count, neighborhoods are truncated
// at the borders, and an all-zero spectrogram has no peaks.
Fingerprint extract_peaks(const Spectrogram& spec, const PeakParams& params,
                          std::uint64_t digest = 0);

// End-to-end fingerprint of a signal.
Fingerprint fingerprint(const AudioSignal& x, const FrontendConfig& config,
                        const PeakParams& params);

// Count of exactly coincident (frame, bin) pairs. Requires matching
// dimensions and digests.
long overlap(const Fingerprint& a, const Fingerprint& b);

// 1 - overlap/|original|; the fraction of the original's peaks missing
// from the adversarial fingerprint at exact coordinates.
double removal_rate(const Fingerprint& original, const Fingerprint& adversarial);

// Peaks with frame in [frame_begin, frame_end), re-indexed to start at
// frame zero. Digest and bins are preserved.
Fingerprint sub_fingerprint(const Fingerprint& fp, std::uint32_t frame_begin,
                            std::uint32_t frame_end);

// .afp file: magic "AFP1", u32 frames, u32 bins, u64 config_digest,
// u64 peak_count, then (u32 frame, u32 bin, f32 magnitude) records
// sorted by (frame, bin). Everything little-endian.
void serialize(const Fingerprint& fp, const std::filesystem::path& path);
Fingerprint deserialize(const std::filesystem::path& path);

// JSON text mirroring the .afp fields; the digest is rendered as a
// decimal string to survive 64-bit values.
std::string fingerprint_json(const Fingerprint& fp);

}  // namespace afp
