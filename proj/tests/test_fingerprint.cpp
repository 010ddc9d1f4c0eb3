#include <fstream>
#include <random>
#include <set>

#include "doctest.h"

#include "afp/fingerprint.hpp"
#include "support/testsupport.hpp"

using namespace afp;

namespace {

Spectrogram make_spec(int frames, int bins, double fill = 0.0) {
  Spectrogram s;
  s.frames = frames;
  s.bins = bins;
  s.values.assign(static_cast<std::size_t>(frames) * bins, fill);
  return s;
}

std::set<std::pair<int, int>> peak_cells(const Fingerprint& fp) {
  std::set<std::pair<int, int>> cells;
  for (const Peak& p : fp.peaks) cells.emplace(p.frame, p.bin);
  return cells;
}

}  // namespace

TEST_CASE("extract_peaks finds a lone maximum and nothing in silence") {
  Spectrogram s = make_spec(8, 8);
  PeakParams params;
  params.w1 = 2;

  CHECK(extract_peaks(s, params).peaks.empty());

  s.at(3, 5) = 1.0;
  const Fingerprint fp = extract_peaks(s, params);
  REQUIRE(fp.peaks.size() == 1);
  CHECK(fp.peaks[0].frame == 3);
  CHECK(fp.peaks[0].bin == 5);
  CHECK(fp.peaks[0].magnitude == 1.0f);
}

TEST_CASE("extract_peaks equals the exhaustive scan on random matrices") {
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 60; ++trial) {
    const int frames = 4 + static_cast<int>(rng() % 29);
    const int bins = 4 + static_cast<int>(rng() % 29);
    Spectrogram s = make_spec(frames, bins);
    for (double& v : s.values) {
      v = static_cast<double>(rng() >> 11) * 0x1.0p-53 * 12.0;
    }
    PeakParams params;
    params.w1 = 1 + static_cast<int>(rng() % 4);
    params.magnitude_floor_ratio = (trial % 4) * 0.03;

    const auto got = peak_cells(extract_peaks(s, params));
    const auto oracle = ts::naive_peaks(s, params);
    CHECK(got == std::set<std::pair<int, int>>(oracle.begin(), oracle.end()));
  }
}

TEST_CASE("equality ties all count as peaks") {
  Spectrogram s = make_spec(5, 5, 0.0);
  s.at(1, 1) = 2.0;
  s.at(1, 3) = 2.0;  // tie inside one neighborhood
  PeakParams params;
  params.w1 = 2;
  const auto cells = peak_cells(extract_peaks(s, params));
  CHECK(cells.count({1, 1}) == 1);
  CHECK(cells.count({1, 3}) == 1);
}

TEST_CASE("raising the floor never adds peaks") {
  const AudioSignal x = ts::synth_music(31, 3.0);
  FrontendConfig c;
  const Spectrogram spec = features(x, c);
  PeakParams lo, hi;
  lo.magnitude_floor_ratio = 0.0;
  hi.magnitude_floor_ratio = 0.05;
  const auto big = peak_cells(extract_peaks(spec, lo));
  const auto small = peak_cells(extract_peaks(spec, hi));
  for (const auto& cell : small) CHECK(big.count(cell) == 1);
  CHECK(small.size() <= big.size());
}

TEST_CASE("hop-aligned delays shift interior peaks by whole frames") {
  FrontendConfig c;
  PeakParams params;
  const AudioSignal x = ts::synth_music(57, 4.0);
  const int shift = 2;

  AudioSignal delayed;
  delayed.sample_rate = x.sample_rate;
  delayed.samples.assign(static_cast<std::size_t>(shift) * c.hop, 0.0);
  delayed.samples.insert(delayed.samples.end(), x.samples.begin(), x.samples.end());

  const Fingerprint fa = fingerprint(x, c, params);
  const Fingerprint fb = fingerprint(delayed, c, params);
  const auto cells_b = peak_cells(fb);

  // Compare away from the temporal borders, where pooling truncation
  // differs between the two signals.
  int checked = 0;
  for (const Peak& p : fa.peaks) {
    const int t = static_cast<int>(p.frame);
    if (t < params.w1 || t + shift + params.w1 >= static_cast<int>(fb.frames)) {
      continue;
    }
    CHECK(cells_b.count({t + shift, static_cast<int>(p.bin)}) == 1);
    ++checked;
  }
  CHECK(checked > 0);
}

TEST_CASE("zero signal fingerprints to nothing") {
  AudioSignal zero;
  zero.sample_rate = 8000;
  zero.samples.assign(4000, 0.0);
  const Fingerprint fp = fingerprint(zero, FrontendConfig{}, PeakParams{});
  CHECK(fp.peaks.empty());
}

TEST_CASE("music clip peak count regression") {
  // Frozen from the first correct run; guards the whole frontend+peak
  // pipeline against accidental drift.
  const AudioSignal x = ts::synth_music(42, 10.0);
  const Fingerprint fp = fingerprint(x, FrontendConfig{}, PeakParams{});
  CHECK(fp.peaks.size() == 25);
}

TEST_CASE("overlap counts exact coincidences and checks compatibility") {
  Fingerprint a, b;
  a.frames = b.frames = 10;
  a.bins = b.bins = 10;
  a.peaks = {{0, 0, 1.f}, {1, 1, 1.f}, {2, 2, 1.f}};
  b.peaks = {{1, 1, 2.f}, {2, 2, 2.f}, {3, 3, 2.f}};
  CHECK(overlap(a, b) == 2);
  CHECK(overlap(b, a) == 2);
  CHECK(overlap(a, a) == 3);

  Fingerprint disjoint = b;
  disjoint.peaks = {{5, 5, 1.f}, {6, 6, 1.f}};
  CHECK(overlap(a, disjoint) == 0);

  Fingerprint wrong_dims = b;
  wrong_dims.frames = 11;
  CHECK_THROWS_AS(overlap(a, wrong_dims), std::invalid_argument);
  Fingerprint wrong_digest = b;
  wrong_digest.config_digest = 99;
  CHECK_THROWS_AS(overlap(a, wrong_digest), std::invalid_argument);
}

TEST_CASE("overlap is bounded by the smaller peak set") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Fingerprint a, b;
    a.frames = b.frames = 20;
    a.bins = b.bins = 20;
    std::set<std::pair<std::uint32_t, std::uint32_t>> cells_a, cells_b;
    while (cells_a.size() < 8) cells_a.insert({static_cast<std::uint32_t>(rng() % 20), static_cast<std::uint32_t>(rng() % 20)});
    while (cells_b.size() < 12) cells_b.insert({static_cast<std::uint32_t>(rng() % 20), static_cast<std::uint32_t>(rng() % 20)});
    for (auto [t, k] : cells_a) a.peaks.push_back({t, k, 1.f});
    for (auto [t, k] : cells_b) b.peaks.push_back({t, k, 1.f});
    const long o = overlap(a, b);
    CHECK(o == overlap(b, a));
    CHECK(o <= 8);
    CHECK(o >= 0);
  }
}

TEST_CASE("removal_rate endpoints") {
  Fingerprint a;
  a.frames = a.bins = 10;
  a.peaks = {{0, 0, 1.f}, {1, 1, 1.f}, {2, 2, 1.f}, {3, 3, 1.f}};
  CHECK(removal_rate(a, a) == 0.0);

  Fingerprint moved = a;
  moved.peaks = {{4, 4, 1.f}, {5, 5, 1.f}};
  CHECK(removal_rate(a, moved) == 1.0);

  Fingerprint half = a;
  half.peaks = {{0, 0, 1.f}, {1, 1, 1.f}, {7, 7, 1.f}};
  CHECK(removal_rate(a, half) == doctest::Approx(0.5));

  Fingerprint empty;
  empty.frames = empty.bins = 10;
  CHECK_THROWS_AS(removal_rate(empty, a), std::invalid_argument);
}

TEST_CASE("sub_fingerprint slices and re-indexes frames") {
  Fingerprint fp;
  fp.frames = 100;
  fp.bins = 10;
  fp.config_digest = 77;
  fp.peaks = {{5, 1, 1.f}, {20, 2, 2.f}, {50, 3, 3.f}, {99, 4, 4.f}};

  const Fingerprint cut = sub_fingerprint(fp, 20, 60);
  CHECK(cut.frames == 40);
  CHECK(cut.bins == 10);
  CHECK(cut.config_digest == 77);
  REQUIRE(cut.peaks.size() == 2);
  CHECK(cut.peaks[0].frame == 0);
  CHECK(cut.peaks[1].frame == 30);

  CHECK_THROWS_AS(sub_fingerprint(fp, 60, 20), std::invalid_argument);
  CHECK_THROWS_AS(sub_fingerprint(fp, 0, 101), std::invalid_argument);
}

TEST_CASE("afp files round trip exactly") {
  ts::TempDir dir("fp");
  const auto p = dir.path / "x.afp";

  Fingerprint fp;
  fp.frames = 300;
  fp.bins = 513;
  fp.config_digest = config_digest(FrontendConfig{}, PeakParams{});
  fp.peaks = {{0, 12, 1.25f}, {0, 80, 3.5f}, {17, 12, 0.7f}, {299, 512, 9.0f}};

  serialize(fp, p);
  const Fingerprint back = deserialize(p);
  CHECK(back.frames == fp.frames);
  CHECK(back.bins == fp.bins);
  CHECK(back.config_digest == fp.config_digest);
  CHECK(back.peaks == fp.peaks);

  Fingerprint empty;
  empty.frames = 4;
  empty.bins = 4;
  serialize(empty, p);
  CHECK(deserialize(p).peaks.empty());
}

TEST_CASE("deserialize rejects malformed files") {
  ts::TempDir dir("fp");
  const auto p = dir.path / "bad.afp";

  std::ofstream(p, std::ios::binary) << "GARBAGEGARBAGEGARBAGEGARBAGEGARBAGE";
  CHECK_THROWS_AS(deserialize(p), FormatError);

  std::ofstream(p, std::ios::binary | std::ios::trunc) << "AFP"
                                                       << '\x02'
                                                       << std::string(24, '\0');
  CHECK_THROWS_AS(deserialize(p), FormatError);  // version mismatch

  Fingerprint fp;
  fp.frames = 10;
  fp.bins = 10;
  fp.peaks = {{1, 1, 1.f}, {2, 2, 1.f}};
  serialize(fp, p);
  std::string bytes = ts::read_file(p);

  std::ofstream(dir.path / "cut.afp", std::ios::binary)
      << bytes.substr(0, bytes.size() - 5);
  CHECK_THROWS_AS(deserialize(dir.path / "cut.afp"), ParseError);

  // Out-of-bounds coordinate: frame 1 -> 11 in the first record.
  bytes[28] = 11;
  std::ofstream(dir.path / "oob.afp", std::ios::binary) << bytes;
  CHECK_THROWS_AS(deserialize(dir.path / "oob.afp"), ParseError);

  CHECK_THROWS_AS(deserialize(dir.path / "missing.afp"), FormatError);
}

TEST_CASE("config digest separates configurations") {
  FrontendConfig c1, c2;
  c2.hop = 128;
  PeakParams p1, p2;
  p2.w1 = 5;
  CHECK(config_digest(c1, p1) != config_digest(c2, p1));
  CHECK(config_digest(c1, p1) != config_digest(c1, p2));
  CHECK(config_digest(c1, p1) == config_digest(FrontendConfig{}, PeakParams{}));
}

TEST_CASE("fingerprint json mirrors the binary fields") {
  Fingerprint fp;
  fp.frames = 2;
  fp.bins = 3;
  fp.config_digest = 18446744073709551615ull;  // needs string rendering
  fp.peaks = {{0, 1, 1.5f}, {1, 2, 2.5f}};
  const std::string json = fingerprint_json(fp);
  CHECK(json.find("\"frames\":2") != std::string::npos);
  CHECK(json.find("\"bins\":3") != std::string::npos);
  CHECK(json.find("\"config_digest\":\"18446744073709551615\"") != std::string::npos);
  CHECK(json.find("\"peak_count\":2") != std::string::npos);
  CHECK(json.find("[0,1,1.5]") != std::string::npos);
}
