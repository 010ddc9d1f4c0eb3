#include "dft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace afp::detail {

namespace {
bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }
}  // namespace

Dft::Dft(int n) : n_(n), pow2_(is_pow2(n)) {
  if (n < 2) throw std::invalid_argument("Dft size must be >= 2");
  const double step = 2.0 * std::numbers::pi / n;
  if (pow2_) {
    rev_.resize(n);
    int bits = 0;
    while ((1 << bits) < n) ++bits;
    for (int i = 0; i < n; ++i) {
      std::uint32_t r = 0;
      for (int b = 0; b < bits; ++b) {
        r = (r << 1) | ((static_cast<std::uint32_t>(i) >> b) & 1u);
      }
      rev_[i] = r;
    }
    root_re_.resize(n / 2);
    root_im_.resize(n / 2);
    for (int j = 0; j < n / 2; ++j) {
      root_re_[j] = std::cos(step * j);
      root_im_[j] = -std::sin(step * j);
    }
  } else {
    tab_re_.resize(n);
    tab_im_.resize(n);
    for (int j = 0; j < n; ++j) {
      tab_re_[j] = std::cos(step * j);
      tab_im_[j] = -std::sin(step * j);
    }
  }
}

void Dft::fft_core(std::vector<double>& re, std::vector<double>& im,
                   bool inverse) const {
  const int n = n_;
  for (int len = 2; len <= n; len <<= 1) {
    const int half = len >> 1;
    const int stride = n / len;
    for (int start = 0; start < n; start += len) {
      for (int j = 0; j < half; ++j) {
        const double wr = root_re_[static_cast<std::size_t>(j) * stride];
        const double wi = inverse ? -root_im_[static_cast<std::size_t>(j) * stride]
                                  : root_im_[static_cast<std::size_t>(j) * stride];
        const int a = start + j;
        const int b = a + half;
        const double tr = re[b] * wr - im[b] * wi;
        const double ti = re[b] * wi + im[b] * wr;
        re[b] = re[a] - tr;
        im[b] = im[a] - ti;
        re[a] += tr;
        im[a] += ti;
      }
    }
  }
}

void Dft::forward(std::span<const double> input, std::span<double> out_re,
                  std::span<double> out_im) const {
  const int n = n_;
  if (pow2_) {
    std::vector<double> re(n), im(n, 0.0);
    for (int i = 0; i < n; ++i) re[rev_[i]] = input[i];
    fft_core(re, im, /*inverse=*/false);
    for (int k = 0; k < n; ++k) {
      out_re[k] = re[k];
      out_im[k] = im[k];
    }
    return;
  }
  for (int k = 0; k < n; ++k) {
    double sr = 0.0, si = 0.0;
    std::size_t idx = 0;
    for (int j = 0; j < n; ++j) {
      sr += input[j] * tab_re_[idx];
      si += input[j] * tab_im_[idx];
      idx += k;
      if (idx >= static_cast<std::size_t>(n)) idx -= n;
    }
    out_re[k] = sr;
    out_im[k] = si;
  }
}

void Dft::adjoint_real(std::span<const double> g_re, std::span<const double> g_im,
                       std::span<double> out) const {
  const int n = n_;
  if (pow2_) {
    std::vector<double> re(n), im(n);
    for (int i = 0; i < n; ++i) {
      re[rev_[i]] = g_re[i];
      im[rev_[i]] = g_im[i];
    }
    fft_core(re, im, /*inverse=*/true);
    for (int j = 0; j < n; ++j) out[j] = re[j];
    return;
  }
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    std::size_t idx = 0;
    for (int k = 0; k < n; ++k) {
      // e^{+i 2 pi k j / N} has real part tab_re_ and imag part -tab_im_.
      s += g_re[k] * tab_re_[idx] + g_im[k] * tab_im_[idx];
      idx += j;
      if (idx >= static_cast<std::size_t>(n)) idx -= n;
    }
    out[j] = s;
  }
}

}  // namespace afp::detail
