#include "afp/fingerprint.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace afp {

void PeakParams::validate() const {
  if (w1 < 1) throw std::invalid_argument("w1 must be >= 1");
  if (magnitude_floor_ratio < 0.0 || magnitude_floor_ratio >= 1.0) {
    throw std::invalid_argument("magnitude_floor_ratio must be in [0, 1)");
  }
}

namespace {

constexpr char kMagic[4] = {'A', 'F', 'P', '1'};

std::uint64_t fnv1a(const unsigned char* data, std::size_t len,
                    std::uint64_t h = 1469598103934665603ull) {
  for (std::size_t i = 0; i < len; ++i) {
    h ^= data[i];
    h *= 1099511628211ull;
  }
  return h;
}

template <typename T>
std::uint64_t fnv1a_value(T v, std::uint64_t h) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  return fnv1a(bytes, sizeof(T), h);
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

float get_f32(const unsigned char* p) {
  const std::uint32_t bits = get_u32(p);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

// Sliding max over [i - w, i + w] per row element, borders truncated.
void sliding_max_rows(const std::vector<double>& in, int rows, int cols, int w,
                      std::vector<double>& out) {
  for (int r = 0; r < rows; ++r) {
    const std::size_t base = static_cast<std::size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) {
      const int lo = std::max(0, c - w);
      const int hi = std::min(cols - 1, c + w);
      double m = in[base + lo];
      for (int j = lo + 1; j <= hi; ++j) m = std::max(m, in[base + j]);
      out[base + c] = m;
    }
  }
}

void sliding_max_cols(const std::vector<double>& in, int rows, int cols, int w,
                      std::vector<double>& out) {
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) {
      const int lo = std::max(0, r - w);
      const int hi = std::min(rows - 1, r + w);
      double m = in[static_cast<std::size_t>(lo) * cols + c];
      for (int j = lo + 1; j <= hi; ++j) {
        m = std::max(m, in[static_cast<std::size_t>(j) * cols + c]);
      }
      out[static_cast<std::size_t>(r) * cols + c] = m;
    }
  }
}

}  // namespace

std::uint64_t config_digest(const FrontendConfig& config,
                            const PeakParams& params) {
  std::uint64_t h = 1469598103934665603ull;
  h = fnv1a_value(static_cast<std::uint32_t>(config.hann_width), h);
  h = fnv1a_value(static_cast<std::uint32_t>(config.fft_size), h);
  h = fnv1a_value(static_cast<std::uint32_t>(config.hop), h);
  h = fnv1a_value(static_cast<std::uint32_t>(params.w1), h);
  h = fnv1a_value(params.magnitude_floor_ratio, h);
  return h;
}

Fingerprint extract_peaks(const Spectrogram& spec, const PeakParams& params,
                          std::uint64_t digest) {
  params.validate();
  if (spec.frames <= 0 || spec.bins <= 0) {
    throw std::invalid_argument("extract_peaks needs a non-empty spectrogram");
  }

  Fingerprint fp;
  fp.frames = static_cast<std::uint32_t>(spec.frames);
  fp.bins = static_cast<std::uint32_t>(spec.bins);
  fp.config_digest = digest;

  const double floor = params.magnitude_floor_ratio * spec.global_max();
  if (spec.global_max() <= 0.0) return fp;  // silence has no peaks

  // Separable two-pass maxpool equals the square-neighborhood max.
  std::vector<double> tmp(spec.values.size()), pooled(spec.values.size());
  sliding_max_rows(spec.values, spec.frames, spec.bins, params.w1, tmp);
  sliding_max_cols(tmp, spec.frames, spec.bins, params.w1, pooled);

  for (int t = 0; t < spec.frames; ++t) {
    for (int k = 0; k < spec.bins; ++k) {
      const std::size_t i = static_cast<std::size_t>(t) * spec.bins + k;
      const double v = spec.values[i];
      if (v == pooled[i] && v >= floor && v > 0.0) {
        fp.peaks.push_back({static_cast<std::uint32_t>(t),
                            static_cast<std::uint32_t>(k),
                            static_cast<float>(v)});
      }
    }
  }
  return fp;
}

Fingerprint fingerprint(const AudioSignal& x, const FrontendConfig& config,
                        const PeakParams& params) {
  return extract_peaks(features(x, config), params,
                       config_digest(config, params));
}

namespace {

void check_compatible(const Fingerprint& a, const Fingerprint& b) {
  if (a.frames != b.frames || a.bins != b.bins) {
    throw std::invalid_argument("fingerprint dimension mismatch");
  }
  if (a.config_digest != b.config_digest) {
    throw std::invalid_argument("fingerprint config digest mismatch");
  }
}

}  // namespace

long overlap(const Fingerprint& a, const Fingerprint& b) {
  check_compatible(a, b);
  long count = 0;
  auto ia = a.peaks.begin();
  auto ib = b.peaks.begin();
  while (ia != a.peaks.end() && ib != b.peaks.end()) {
    const auto ka = std::make_pair(ia->frame, ia->bin);
    const auto kb = std::make_pair(ib->frame, ib->bin);
    if (ka == kb) {
      ++count;
      ++ia;
      ++ib;
    } else if (ka < kb) {
      ++ia;
    } else {
      ++ib;
    }
  }
  return count;
}

double removal_rate(const Fingerprint& original, const Fingerprint& adversarial) {
  if (original.peaks.empty()) {
    throw std::invalid_argument("removal_rate needs a non-empty original");
  }
  return 1.0 - static_cast<double>(overlap(original, adversarial)) /
                   static_cast<double>(original.peaks.size());
}

Fingerprint sub_fingerprint(const Fingerprint& fp, std::uint32_t frame_begin,
                            std::uint32_t frame_end) {
  if (frame_begin >= frame_end || frame_end > fp.frames) {
    throw std::invalid_argument("sub_fingerprint: bad frame range");
  }
  Fingerprint out;
  out.frames = frame_end - frame_begin;
  out.bins = fp.bins;
  out.config_digest = fp.config_digest;
  for (const Peak& p : fp.peaks) {
    if (p.frame >= frame_begin && p.frame < frame_end) {
      out.peaks.push_back({p.frame - frame_begin, p.bin, p.magnitude});
    }
  }
  return out;
}

void serialize(const Fingerprint& fp, const std::filesystem::path& path) {
  std::string out;
  out.reserve(28 + fp.peaks.size() * 12);
  out.append(kMagic, 4);
  put_u32(out, fp.frames);
  put_u32(out, fp.bins);
  put_u64(out, fp.config_digest);
  put_u64(out, static_cast<std::uint64_t>(fp.peaks.size()));
  for (const Peak& p : fp.peaks) {
    put_u32(out, p.frame);
    put_u32(out, p.bin);
    put_f32(out, p.magnitude);
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file || !file.write(out.data(), static_cast<std::streamsize>(out.size()))) {
    throw std::runtime_error("failed to write fingerprint: " + path.string());
  }
}

Fingerprint deserialize(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open fingerprint file: " + path.string());
  std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());

  if (data.size() < 28) throw ParseError("fingerprint file truncated");
  if (std::memcmp(data.data(), kMagic, 4) != 0) {
    if (std::memcmp(data.data(), "AFP", 3) == 0) {
      throw FormatError("unsupported fingerprint version");
    }
    throw FormatError("bad magic in fingerprint file: " + path.string());
  }

  Fingerprint fp;
  fp.frames = get_u32(data.data() + 4);
  fp.bins = get_u32(data.data() + 8);
  fp.config_digest = get_u64(data.data() + 12);
  const std::uint64_t count = get_u64(data.data() + 20);
  if (data.size() != 28 + count * 12) {
    throw ParseError("fingerprint file size does not match its peak count");
  }

  fp.peaks.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const unsigned char* rec = data.data() + 28 + i * 12;
    Peak p{get_u32(rec), get_u32(rec + 4), get_f32(rec + 8)};
    if (p.frame >= fp.frames || p.bin >= fp.bins) {
      throw ParseError("peak coordinate out of declared bounds");
    }
    if (!fp.peaks.empty()) {
      const auto prev = std::make_pair(fp.peaks.back().frame, fp.peaks.back().bin);
      if (std::make_pair(p.frame, p.bin) <= prev) {
        throw ParseError("peaks are not strictly sorted by (frame, bin)");
      }
    }
    fp.peaks.push_back(p);
  }
  return fp;
}

std::string fingerprint_json(const Fingerprint& fp) {
  std::ostringstream out;
  out << "{\"frames\":" << fp.frames << ",\"bins\":" << fp.bins
      << ",\"config_digest\":\"" << fp.config_digest << "\""
      << ",\"peak_count\":" << fp.peaks.size() << ",\"peaks\":[";
  for (std::size_t i = 0; i < fp.peaks.size(); ++i) {
    const Peak& p = fp.peaks[i];
    if (i > 0) out << ',';
    char buf[64];
    std::snprintf(buf, sizeof(buf), "[%u,%u,%.9g]", p.frame, p.bin,
                  static_cast<double>(p.magnitude));
    out << buf;
  }
  out << "]}";
  return out.str();
}

}  // namespace afp
