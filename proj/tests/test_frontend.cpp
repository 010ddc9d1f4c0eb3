#include <cmath>
#include <numbers>

#include "doctest.h"

#include "afp/frontend.hpp"
#include "support/testsupport.hpp"

using namespace afp;

TEST_CASE("hann kernel matches the closed forms") {
  FrontendConfig c;
  c.hann_width = 2;
  auto taps = hann_kernel(c);
  REQUIRE(taps.size() == 3);
  CHECK(taps[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(taps[1] == doctest::Approx(1.0));
  CHECK(taps[2] == doctest::Approx(0.0).epsilon(1e-12));

  c.hann_width = 4;
  taps = hann_kernel(c);
  REQUIRE(taps.size() == 5);
  CHECK(taps[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(taps[1] == doctest::Approx(0.25));
  CHECK(taps[2] == doctest::Approx(0.5));
  CHECK(taps[3] == doctest::Approx(0.25));
  CHECK(taps[4] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("hann kernel sums to one and is symmetric") {
  FrontendConfig c;
  for (int width : {2, 4, 16, 63, 64, 100}) {
    c.hann_width = width;
    const auto taps = hann_kernel(c);
    double sum = 0.0;
    for (double t : taps) sum += t;
    CHECK(sum == doctest::Approx(1.0));
    for (std::size_t i = 0; i < taps.size(); ++i) {
      CHECK(taps[i] == doctest::Approx(taps[taps.size() - 1 - i]));
    }
  }
}

TEST_CASE("smooth preserves constants and reproduces an impulse") {
  FrontendConfig c;
  c.hann_width = 4;

  AudioSignal flat;
  flat.sample_rate = 8000;
  flat.samples.assign(50, 0.3);
  for (double v : smooth(flat, c)) CHECK(v == doctest::Approx(0.3));

  AudioSignal zero;
  zero.sample_rate = 8000;
  zero.samples.assign(50, 0.0);
  for (double v : smooth(zero, c)) CHECK(v == 0.0);

  AudioSignal imp;
  imp.sample_rate = 8000;
  imp.samples.assign(21, 0.0);
  imp.samples[10] = 1.0;
  const auto out = smooth(imp, c);
  REQUIRE(out.size() == 17);
  const auto taps = hann_kernel(c);
  // Valid-mode correlation of an impulse reads the kernel out reversed;
  // it is symmetric, so this is a centered copy.
  for (int i = 0; i < 5; ++i) CHECK(out[6 + i] == doctest::Approx(taps[4 - i]));
  CHECK(out[0] == 0.0);
  CHECK(out[16] == 0.0);

  AudioSignal tiny;
  tiny.sample_rate = 8000;
  tiny.samples.assign(4, 0.1);
  CHECK_THROWS_AS(smooth(tiny, c), std::invalid_argument);
}

TEST_CASE("spectrogram matches closed-form single-frame cases") {
  FrontendConfig c;
  c.fft_size = 64;
  c.hop = 64;

  std::vector<double> frame(64, 0.0);
  Spectrogram zero = spectrogram(frame, c);
  CHECK(zero.frames == 1);
  CHECK(zero.bins == 33);
  for (double v : zero.values) CHECK(v == 0.0);

  for (int k0 : {1, 5, 16, 31}) {
    for (int i = 0; i < 64; ++i) {
      frame[i] = std::cos(2.0 * std::numbers::pi * k0 * i / 64.0);
    }
    const Spectrogram spec = spectrogram(frame, c);
    for (int k = 0; k < spec.bins; ++k) {
      if (k == k0) {
        CHECK(spec.at(0, k) == doctest::Approx(32.0));
      } else {
        CHECK(spec.at(0, k) == doctest::Approx(0.0).epsilon(1e-9));
      }
    }
  }

  std::fill(frame.begin(), frame.end(), 1.0);
  const Spectrogram dc = spectrogram(frame, c);
  CHECK(dc.at(0, 0) == doctest::Approx(64.0));
  for (int k = 1; k < dc.bins; ++k) {
    CHECK(dc.at(0, k) == doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("dft path equals the naive oracle, including non-power-of-two") {
  for (int n : {8, 12, 64, 250, 1024}) {
    FrontendConfig c;
    c.fft_size = n;
    c.hop = n;
    c.hann_width = 2;
    const AudioSignal x = ts::random_signal(n, 3 * n + 2, 0.7);
    const Spectrogram spec = features(x, c);
    const Spectrogram oracle = ts::naive_features(x, c);
    REQUIRE(spec.frames == oracle.frames);
    REQUIRE(spec.bins == oracle.bins);
    const double scale = oracle.global_max();
    for (std::size_t i = 0; i < spec.values.size(); ++i) {
      CHECK(std::abs(spec.values[i] - oracle.values[i]) <= 1e-9 * (1.0 + scale));
    }
  }
}

TEST_CASE("frame count follows the hop formula") {
  FrontendConfig c;  // 1024 / 256 defaults
  const AudioSignal x = ts::random_signal(1, 8000, 0.5);
  const Spectrogram spec = features(x, c);
  const std::size_t smoothed = 8000 - c.hann_width;
  CHECK(spec.frames == static_cast<int>((smoothed - c.fft_size) / c.hop) + 1);
  CHECK(spec.bins == c.fft_size / 2 + 1);

  std::vector<double> short_input(c.fft_size - 1, 0.1);
  CHECK_THROWS_AS(spectrogram(short_input, c), std::invalid_argument);
}

TEST_CASE("features shift by whole frames under hop-aligned delays") {
  FrontendConfig c;
  const AudioSignal x = ts::random_signal(17, 6000, 0.6);
  const int shift_frames = 3;

  AudioSignal delayed;
  delayed.sample_rate = x.sample_rate;
  delayed.samples.assign(static_cast<std::size_t>(shift_frames) * c.hop, 0.0);
  delayed.samples.insert(delayed.samples.end(), x.samples.begin(), x.samples.end());

  const Spectrogram a = features(x, c);
  const Spectrogram b = features(delayed, c);
  REQUIRE(b.frames >= a.frames + shift_frames);
  for (int t = 0; t < a.frames; ++t) {
    for (int k = 0; k < a.bins; ++k) {
      CHECK(b.at(t + shift_frames, k) ==
            doctest::Approx(a.at(t, k)).epsilon(1e-12));
    }
  }
}

TEST_CASE("magnitudes scale linearly with input gain") {
  FrontendConfig c;
  c.fft_size = 128;
  c.hop = 32;
  c.hann_width = 8;
  const AudioSignal x = ts::random_signal(23, 1000, 0.4);
  AudioSignal scaled = x;
  for (double& v : scaled.samples) v *= -2.5;

  const Spectrogram a = features(x, c);
  const Spectrogram b = features(scaled, c);
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    CHECK(b.values[i] == doctest::Approx(2.5 * a.values[i]).epsilon(1e-9));
  }
  for (double v : a.values) CHECK(v >= 0.0);
}

TEST_CASE("tape backprop agrees with features on the forward pass") {
  FrontendConfig c;
  c.fft_size = 256;
  c.hop = 64;
  c.hann_width = 16;
  const AudioSignal x = ts::random_signal(29, 2000, 0.5);
  const FrontendTape tape = features_with_tape(x, c);
  const Spectrogram direct = features(x, c);
  CHECK(tape.spec.values == direct.values);
  CHECK(tape.input_len == x.samples.size());

  std::vector<double> d_spec(direct.values.size(), 0.0);
  const auto grad = tape.backprop(d_spec);
  CHECK(grad.size() == x.samples.size());
  for (double g : grad) CHECK(g == 0.0);
}

TEST_CASE("config validation rejects bad shapes") {
  FrontendConfig c;
  c.fft_size = 15;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.fft_size = 1024;
  c.hop = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.hop = 2048;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.hop = 256;
  c.hann_width = 1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("spectrogram exports render csv and pgm") {
  ts::TempDir dir("frontend");
  Spectrogram spec;
  spec.frames = 2;
  spec.bins = 3;
  spec.values = {0.0, 1.0, 2.0, 3.0, 4.0, 5.0};

  const auto csv = dir.path / "s.csv";
  write_spectrogram_csv(spec, csv);
  CHECK(ts::read_file(csv) == "0,1,2\n3,4,5\n");

  const auto pgm = dir.path / "s.pgm";
  write_spectrogram_pgm(spec, pgm);
  const std::string bytes = ts::read_file(pgm);
  REQUIRE(bytes.size() == 11 + 6);
  CHECK(bytes.substr(0, 11) == "P5\n2 3\n255\n");
  const unsigned char expect[6] = {0, 153, 51, 204, 102, 255};  // bin rows
  for (int i = 0; i < 6; ++i) {
    CHECK(static_cast<unsigned char>(bytes[11 + i]) == expect[i]);
  }

  Spectrogram silent;
  silent.frames = 2;
  silent.bins = 2;
  silent.values = {0, 0, 0, 0};
  write_spectrogram_pgm(silent, pgm);
  const std::string dark = ts::read_file(pgm);
  for (std::size_t i = dark.size() - 4; i < dark.size(); ++i) {
    CHECK(dark[i] == '\0');
  }
}
