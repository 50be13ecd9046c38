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

#include "psyadv/fft.h"

#include <algorithm>
#include <cmath>

#include "psyadv/log.h"

namespace psyadv {

FftPlan::FftPlan(int n) : n_(n) {
  if (n < 2 || (n & (n - 1)) != 0) {
    throw std::invalid_argument(
        StrCat("FftPlan: size must be a power of two >= 2, got ", n));
  }
  int log2n = 0;
  while ((1 << log2n) < n) ++log2n;
  bitrev_.resize(n);
  for (int i = 0; i < n; ++i) {
    int r = 0;
    for (int b = 0; b < log2n; ++b) r = (r << 1) | ((i >> b) & 1);
    bitrev_[i] = r;
  }
  cos_.resize(n / 2);
  sin_.resize(n / 2);
  for (int j = 0; j < n / 2; ++j) {
    cos_[j] = std::cos(2.0 * M_PI * j / n);
    sin_[j] = std::sin(2.0 * M_PI * j / n);
  }
}

void FftPlan::Complex(double* re, double* im, bool positive_exponent) const {
  for (int i = 0; i < n_; ++i) {
    int r = bitrev_[i];
    if (r > i) {
      std::swap(re[i], re[r]);
      std::swap(im[i], im[r]);
    }
  }
  const double sign = positive_exponent ? 1.0 : -1.0;
  for (int len = 2; len <= n_; len <<= 1) {
    int half = len >> 1;
    int stride = n_ / len;
    for (int base = 0; base < n_; base += len) {
      for (int j = 0; j < half; ++j) {
        double wr = cos_[j * stride];
        double wi = sign * sin_[j * stride];
        int u = base + j;
        int v = u + half;
        double tr = re[v] * wr - im[v] * wi;
        double ti = re[v] * wi + im[v] * wr;
        re[v] = re[u] - tr;
        im[v] = im[u] - ti;
        re[u] += tr;
        im[u] += ti;
      }
    }
  }
}

void FftPlan::RealForward(const double* in, double* out) const {
  std::vector<double> re(in, in + n_);
  std::vector<double> im(n_, 0.0);
  Complex(re.data(), im.data(), false);
  for (int k = 0; k <= n_ / 2; ++k) {
    out[2 * k] = re[k];
    out[2 * k + 1] = im[k];
  }
}

void FftPlan::RealAdjoint(const double* dout, double* din) const {
  std::vector<double> re(n_, 0.0);
  std::vector<double> im(n_, 0.0);
  for (int k = 0; k <= n_ / 2; ++k) {
    re[k] = dout[2 * k];
    im[k] = dout[2 * k + 1];
  }
  Complex(re.data(), im.data(), true);
  std::copy(re.begin(), re.end(), din);
}

}  // namespace psyadv
