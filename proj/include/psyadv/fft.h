// Copyright 2026 The PsyAdv Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PSYADV_FFT_H_
#define PSYADV_FFT_H_

#include <vector>

namespace psyadv {

// Iterative radix-2 FFT over doubles with precomputed twiddles and bit
// reversal.  Sized at construction; n must be a power of two.
//
// RealForward computes the n/2+1 non-redundant bins of the DFT of a real
// signal, packed as interleaved (re, im) pairs.  RealAdjoint applies the
// exact transpose of that linear map, which is what reverse-mode
// differentiation through a spectrogram needs:
//
//   out_k = sum_n in_n exp(-2*pi*i*k*n/N),  k = 0..N/2
//   (adjoint g)_n = sum_k [g_re_k cos(2*pi*k*n/N) - g_im_k sin(2*pi*k*n/N)]
class FftPlan {
 public:
  explicit FftPlan(int n);

  int size() const { return n_; }
  int bins() const { return n_ / 2 + 1; }

  // In-place complex transform with exponent sign -1 (forward) or +1.  No
  // scaling is applied in either direction.
  void Complex(double* re, double* im, bool positive_exponent) const;

  // in: n real samples.  out: 2*(n/2+1) doubles, interleaved re/im.
  void RealForward(const double* in, double* out) const;

  // dout: 2*(n/2+1) doubles (cotangents of RealForward's output).
  // din: n doubles, overwritten with the adjoint image.
  void RealAdjoint(const double* dout, double* din) const;

 private:
  int n_;
  std::vector<int> bitrev_;
  std::vector<double> cos_, sin_;  // exp(2*pi*i*j/n) tables, j < n/2
  mutable std::vector<double> work_re_, work_im_;
};

}  // namespace psyadv

#endif  // PSYADV_FFT_H_
