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
//
// Reference kernel implementations.  These define the semantics the SIMD
// variants are tested against; keep them simple.

#include <cmath>

#include "psyadv/kernels.h"

namespace psyadv {
namespace kernels {
namespace {

void MatmulNTScalar(const double* a, const double* b, double* c, int m, int n,
                    int k) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<int64_t>(i) * k;
    for (int j = 0; j < n; ++j) {
      const double* bj = b + static_cast<int64_t>(j) * k;
      double acc = 0.0;
      for (int t = 0; t < k; ++t) acc += ai[t] * bj[t];
      c[static_cast<int64_t>(i) * n + j] += acc;
    }
  }
}

void MatmulNNScalar(const double* a, const double* b, double* c, int m, int n,
                    int p) {
  for (int i = 0; i < m; ++i) {
    double* ci = c + static_cast<int64_t>(i) * n;
    const double* ai = a + static_cast<int64_t>(i) * p;
    for (int t = 0; t < p; ++t) {
      double av = ai[t];
      const double* bt = b + static_cast<int64_t>(t) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bt[j];
    }
  }
}

void MatmulTNScalar(const double* a, const double* b, double* c, int m, int n,
                    int p) {
  for (int t = 0; t < p; ++t) {
    const double* at = a + static_cast<int64_t>(t) * m;
    const double* bt = b + static_cast<int64_t>(t) * n;
    for (int i = 0; i < m; ++i) {
      double av = at[i];
      double* ci = c + static_cast<int64_t>(i) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bt[j];
    }
  }
}

void AxpyScalar(double alpha, const double* x, double* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double DotScalar(const double* x, const double* y, int64_t n) {
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void AdamStepScalar(double* p, const double* g, double* m, double* v,
                    int64_t n, double lr, double beta1, double beta2,
                    double eps, double bc1, double bc2) {
  for (int64_t i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    double mhat = m[i] / bc1;
    double vhat = v[i] / bc2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

void SignStepClipScalar(double* delta, const double* g, double lr,
                        double bound, int64_t n) {
  for (int64_t i = 0; i < n; ++i) {
    double s = (g[i] > 0.0) ? 1.0 : (g[i] < 0.0 ? -1.0 : 0.0);
    double d = delta[i] - lr * s;
    if (d > bound) d = bound;
    if (d < -bound) d = -bound;
    delta[i] = d;
  }
}

}  // namespace

const Backend& Scalar() {
  static const Backend backend = {
      "scalar",        MatmulNTScalar, MatmulNNScalar,
      MatmulTNScalar,  AxpyScalar,     DotScalar,
      AdamStepScalar,  SignStepClipScalar,
  };
  return backend;
}

}  // namespace kernels
}  // namespace psyadv
