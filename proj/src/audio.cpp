#include "afp/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

namespace afp {
namespace {

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open file: " + path.string());
  std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return data;
}

}  // namespace

AudioSignal load_audio(const std::filesystem::path& path, int target_rate) {
  if (target_rate <= 0) throw std::invalid_argument("target_rate must be > 0");
  const auto data = read_file(path);

  if (data.size() < 12 || std::memcmp(data.data(), "RIFF", 4) != 0 ||
      std::memcmp(data.data() + 8, "WAVE", 4) != 0) {
    throw FormatError("not a RIFF/WAVE file: " + path.string());
  }

  bool have_fmt = false;
  std::uint16_t format_code = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* pcm = nullptr;
  std::size_t pcm_bytes = 0;

  std::size_t pos = 12;
  while (pos + 8 <= data.size()) {
    const unsigned char* id = data.data() + pos;
    const std::uint32_t chunk_size = read_u32(data.data() + pos + 4);
    pos += 8;
    if (chunk_size > data.size() - pos) {
      throw ParseError("truncated chunk in WAV file: " + path.string());
    }
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (chunk_size < 16) throw ParseError("fmt chunk too small");
      const unsigned char* f = data.data() + pos;
      format_code = read_u16(f);
      channels = read_u16(f + 2);
      rate = read_u32(f + 4);
      bits = read_u16(f + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      pcm = data.data() + pos;
      pcm_bytes = chunk_size;
    }
    pos += chunk_size + (chunk_size & 1);  // chunks are word-aligned
  }

  if (!have_fmt || pcm == nullptr) {
    throw ParseError("WAV file missing fmt or data chunk: " + path.string());
  }
  if (format_code != 1) {
    throw FormatError("unsupported WAV codec (PCM required), format code " +
                      std::to_string(format_code));
  }
  if (bits != 16) {
    throw FormatError("unsupported bit depth " + std::to_string(bits) +
                      " (16-bit PCM required)");
  }
  if (channels != 1 && channels != 2) {
    throw FormatError("unsupported channel count " + std::to_string(channels));
  }
  if (rate == 0) throw ParseError("sample rate zero in fmt chunk");
  const std::size_t frame_bytes = 2u * channels;
  if (pcm_bytes % frame_bytes != 0) {
    throw ParseError("data chunk size is not a whole number of frames");
  }
  const std::size_t frame_count = pcm_bytes / frame_bytes;
  if (frame_count == 0) throw ParseError("WAV file holds no samples");

  AudioSignal signal;
  signal.sample_rate = static_cast<int>(rate);
  signal.samples.resize(frame_count);
  for (std::size_t i = 0; i < frame_count; ++i) {
    const unsigned char* f = pcm + i * frame_bytes;
    double v = static_cast<std::int16_t>(read_u16(f)) / 32768.0;
    if (channels == 2) {
      v = (v + static_cast<std::int16_t>(read_u16(f + 2)) / 32768.0) / 2.0;
    }
    signal.samples[i] = v;
  }
  return resample(signal, target_rate);
}

void save_audio(const AudioSignal& signal, const std::filesystem::path& path) {
  if (signal.samples.empty() || signal.sample_rate <= 0) {
    throw std::invalid_argument("cannot save an empty or rate-less signal");
  }
  const std::uint32_t n = static_cast<std::uint32_t>(signal.samples.size());
  const std::uint32_t data_bytes = n * 2;

  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put_u32(out, 36 + data_bytes);
  out += "WAVE";
  out += "fmt ";
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(signal.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(signal.sample_rate) * 2);
  put_u16(out, 2);   // block align
  put_u16(out, 16);  // bits
  out += "data";
  put_u32(out, data_bytes);
  for (double s : signal.samples) {
    const double scaled = std::lrint(std::clamp(s, -1.0, 1.0) * 32768.0);
    const auto q = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    put_u16(out, static_cast<std::uint16_t>(q));
  }

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file || !file.write(out.data(), static_cast<std::streamsize>(out.size()))) {
    throw std::runtime_error("failed to write WAV file: " + path.string());
  }
}

AudioSignal resample(const AudioSignal& signal, int new_rate) {
  if (new_rate <= 0) throw std::invalid_argument("new_rate must be > 0");
  if (signal.sample_rate <= 0 || signal.samples.empty()) {
    throw std::invalid_argument("resample needs a non-empty signal");
  }
  if (new_rate == signal.sample_rate) return signal;

  const std::size_t len = signal.samples.size();
  const auto old_rate = static_cast<std::uint64_t>(signal.sample_rate);
  const auto rate = static_cast<std::uint64_t>(new_rate);
  const std::uint64_t out_len = (len * rate + old_rate - 1) / old_rate;

  AudioSignal out;
  out.sample_rate = new_rate;
  out.samples.resize(out_len);
  for (std::uint64_t i = 0; i < out_len; ++i) {
    // Source position i * old/new held as an exact rational.
    const std::uint64_t num = i * old_rate;
    const std::uint64_t idx = num / rate;
    const double frac = static_cast<double>(num % rate) / static_cast<double>(rate);
    const double a = signal.samples[std::min<std::uint64_t>(idx, len - 1)];
    const double b = signal.samples[std::min<std::uint64_t>(idx + 1, len - 1)];
    out.samples[i] = a + frac * (b - a);
  }
  return out;
}

NormReport perturbation_norms(const AudioSignal& x, const AudioSignal& x_adv) {
  if (x.samples.size() != x_adv.samples.size() ||
      x.sample_rate != x_adv.sample_rate) {
    throw std::invalid_argument("perturbation_norms: length or rate mismatch");
  }
  NormReport report;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < x.samples.size(); ++i) {
    const double d = (x_adv.samples[i] - x.samples[i]) / 2.0;
    report.linf = std::max(report.linf, std::abs(d));
    sum_sq += d * d;
  }
  report.l2_rms = std::sqrt(sum_sq / static_cast<double>(x.samples.size()));
  return report;
}

}  // namespace afp
