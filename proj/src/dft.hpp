#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace afp::detail {

// Length-N discrete Fourier transform used by the spectral frontend.
// Power-of-two sizes run through an iterative radix-2 FFT; other even
// sizes fall back to direct summation with precomputed tables.
class Dft {
 public:
  explicit Dft(int n);

  int size() const { return n_; }

  // X_k = sum_n input[n] e^{-i 2 pi k n / N} for k = 0..N-1.
  void forward(std::span<const double> input, std::span<double> out_re,
               std::span<double> out_im) const;

  // out[n] = Re( sum_k (g_re[k] + i g_im[k]) e^{+i 2 pi k n / N} ),
  // the adjoint of forward() restricted to real inputs.
  void adjoint_real(std::span<const double> g_re, std::span<const double> g_im,
                    std::span<double> out) const;

 private:
  void fft_core(std::vector<double>& re, std::vector<double>& im,
                bool inverse) const;

  int n_;
  bool pow2_;
  std::vector<std::uint32_t> rev_;           // bit-reversal permutation
  std::vector<double> root_re_, root_im_;    // e^{-i 2 pi j / N}, j < N/2
  std::vector<double> tab_re_, tab_im_;      // full tables for the naive path
};

}  // namespace afp::detail
