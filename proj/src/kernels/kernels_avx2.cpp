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
// AVX2/FMA kernel variants.  This file is the only one compiled with
// -mavx2 -mfma; Avx2() returns nullptr unless the CPU reports both features,
// so none of these functions run on unsupported hardware.

#include <immintrin.h>

#include <cmath>

#include "psyadv/kernels.h"

namespace psyadv {
namespace kernels {
namespace {

// Reduces four independent 4-lane accumulators into one vector holding
// [sum(v0), sum(v1), sum(v2), sum(v3)].
inline __m256d HorizontalSum4(__m256d v0, __m256d v1, __m256d v2, __m256d v3) {
  __m256d t01 = _mm256_hadd_pd(v0, v1);
  __m256d t23 = _mm256_hadd_pd(v2, v3);
  __m256d lo = _mm256_permute2f128_pd(t01, t23, 0x20);
  __m256d hi = _mm256_permute2f128_pd(t01, t23, 0x31);
  return _mm256_add_pd(lo, hi);
}

inline double HorizontalSum1(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(lo) + _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo));
}

void MatmulNTAvx2(const double* a, const double* b, double* c, int m, int n,
                  int k) {
  int i = 0;
  for (; i + 2 <= m; i += 2) {
    const double* a0 = a + static_cast<int64_t>(i) * k;
    const double* a1 = a0 + k;
    double* c0 = c + static_cast<int64_t>(i) * n;
    double* c1 = c0 + n;
    int j = 0;
    for (; j + 4 <= n; j += 4) {
      const double* b0 = b + static_cast<int64_t>(j) * k;
      const double* b1 = b0 + k;
      const double* b2 = b1 + k;
      const double* b3 = b2 + k;
      __m256d s00 = _mm256_setzero_pd(), s01 = _mm256_setzero_pd();
      __m256d s02 = _mm256_setzero_pd(), s03 = _mm256_setzero_pd();
      __m256d s10 = _mm256_setzero_pd(), s11 = _mm256_setzero_pd();
      __m256d s12 = _mm256_setzero_pd(), s13 = _mm256_setzero_pd();
      int t = 0;
      for (; t + 4 <= k; t += 4) {
        __m256d av0 = _mm256_loadu_pd(a0 + t);
        __m256d av1 = _mm256_loadu_pd(a1 + t);
        __m256d bv0 = _mm256_loadu_pd(b0 + t);
        __m256d bv1 = _mm256_loadu_pd(b1 + t);
        __m256d bv2 = _mm256_loadu_pd(b2 + t);
        __m256d bv3 = _mm256_loadu_pd(b3 + t);
        s00 = _mm256_fmadd_pd(av0, bv0, s00);
        s01 = _mm256_fmadd_pd(av0, bv1, s01);
        s02 = _mm256_fmadd_pd(av0, bv2, s02);
        s03 = _mm256_fmadd_pd(av0, bv3, s03);
        s10 = _mm256_fmadd_pd(av1, bv0, s10);
        s11 = _mm256_fmadd_pd(av1, bv1, s11);
        s12 = _mm256_fmadd_pd(av1, bv2, s12);
        s13 = _mm256_fmadd_pd(av1, bv3, s13);
      }
      double t0[4] = {0.0, 0.0, 0.0, 0.0};
      double t1[4] = {0.0, 0.0, 0.0, 0.0};
      for (; t < k; ++t) {
        t0[0] += a0[t] * b0[t];
        t0[1] += a0[t] * b1[t];
        t0[2] += a0[t] * b2[t];
        t0[3] += a0[t] * b3[t];
        t1[0] += a1[t] * b0[t];
        t1[1] += a1[t] * b1[t];
        t1[2] += a1[t] * b2[t];
        t1[3] += a1[t] * b3[t];
      }
      __m256d sum0 = _mm256_add_pd(HorizontalSum4(s00, s01, s02, s03),
                                   _mm256_loadu_pd(t0));
      __m256d sum1 = _mm256_add_pd(HorizontalSum4(s10, s11, s12, s13),
                                   _mm256_loadu_pd(t1));
      _mm256_storeu_pd(c0 + j, _mm256_add_pd(_mm256_loadu_pd(c0 + j), sum0));
      _mm256_storeu_pd(c1 + j, _mm256_add_pd(_mm256_loadu_pd(c1 + j), sum1));
    }
    for (; j < n; ++j) {
      const double* bj = b + static_cast<int64_t>(j) * k;
      __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
      int t = 0;
      for (; t + 4 <= k; t += 4) {
        __m256d bv = _mm256_loadu_pd(bj + t);
        s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a0 + t), bv, s0);
        s1 = _mm256_fmadd_pd(_mm256_loadu_pd(a1 + t), bv, s1);
      }
      double acc0 = HorizontalSum1(s0);
      double acc1 = HorizontalSum1(s1);
      for (; t < k; ++t) {
        acc0 += a0[t] * bj[t];
        acc1 += a1[t] * bj[t];
      }
      c0[j] += acc0;
      c1[j] += acc1;
    }
  }
  if (i < m) {
    const double* ai = a + static_cast<int64_t>(i) * k;
    double* ci = c + static_cast<int64_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* bj = b + static_cast<int64_t>(j) * k;
      __m256d s = _mm256_setzero_pd();
      int t = 0;
      for (; t + 4 <= k; t += 4)
        s = _mm256_fmadd_pd(_mm256_loadu_pd(ai + t), _mm256_loadu_pd(bj + t),
                            s);
      double acc = HorizontalSum1(s);
      for (; t < k; ++t) acc += ai[t] * bj[t];
      ci[j] += acc;
    }
  }
}

void MatmulNNAvx2(const double* a, const double* b, double* c, int m, int n,
                  int p) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<int64_t>(i) * p;
    double* ci = c + static_cast<int64_t>(i) * n;
    int j = 0;
    for (; j + 16 <= n; j += 16) {
      __m256d c0 = _mm256_loadu_pd(ci + j);
      __m256d c1 = _mm256_loadu_pd(ci + j + 4);
      __m256d c2 = _mm256_loadu_pd(ci + j + 8);
      __m256d c3 = _mm256_loadu_pd(ci + j + 12);
      for (int t = 0; t < p; ++t) {
        __m256d av = _mm256_set1_pd(ai[t]);
        const double* bt = b + static_cast<int64_t>(t) * n + j;
        c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bt), c0);
        c1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bt + 4), c1);
        c2 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bt + 8), c2);
        c3 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bt + 12), c3);
      }
      _mm256_storeu_pd(ci + j, c0);
      _mm256_storeu_pd(ci + j + 4, c1);
      _mm256_storeu_pd(ci + j + 8, c2);
      _mm256_storeu_pd(ci + j + 12, c3);
    }
    for (; j + 4 <= n; j += 4) {
      __m256d c0 = _mm256_loadu_pd(ci + j);
      for (int t = 0; t < p; ++t) {
        c0 = _mm256_fmadd_pd(
            _mm256_set1_pd(ai[t]),
            _mm256_loadu_pd(b + static_cast<int64_t>(t) * n + j), c0);
      }
      _mm256_storeu_pd(ci + j, c0);
    }
    for (; j < n; ++j) {
      double acc = ci[j];
      for (int t = 0; t < p; ++t)
        acc += ai[t] * b[static_cast<int64_t>(t) * n + j];
      ci[j] = acc;
    }
  }
}

void MatmulTNAvx2(const double* a, const double* b, double* c, int m, int n,
                  int p) {
  for (int i = 0; i < m; ++i) {
    double* ci = c + static_cast<int64_t>(i) * n;
    int j = 0;
    for (; j + 16 <= n; j += 16) {
      __m256d c0 = _mm256_loadu_pd(ci + j);
      __m256d c1 = _mm256_loadu_pd(ci + j + 4);
      __m256d c2 = _mm256_loadu_pd(ci + j + 8);
      __m256d c3 = _mm256_loadu_pd(ci + j + 12);
      for (int t = 0; t < p; ++t) {
        __m256d av = _mm256_set1_pd(a[static_cast<int64_t>(t) * m + i]);
        const double* bt = b + static_cast<int64_t>(t) * n + j;
        c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bt), c0);
        c1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bt + 4), c1);
        c2 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bt + 8), c2);
        c3 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bt + 12), c3);
      }
      _mm256_storeu_pd(ci + j, c0);
      _mm256_storeu_pd(ci + j + 4, c1);
      _mm256_storeu_pd(ci + j + 8, c2);
      _mm256_storeu_pd(ci + j + 12, c3);
    }
    for (; j + 4 <= n; j += 4) {
      __m256d c0 = _mm256_loadu_pd(ci + j);
      for (int t = 0; t < p; ++t) {
        c0 = _mm256_fmadd_pd(
            _mm256_set1_pd(a[static_cast<int64_t>(t) * m + i]),
            _mm256_loadu_pd(b + static_cast<int64_t>(t) * n + j), c0);
      }
      _mm256_storeu_pd(ci + j, c0);
    }
    for (; j < n; ++j) {
      double acc = ci[j];
      for (int t = 0; t < p; ++t)
        acc += a[static_cast<int64_t>(t) * m + i] *
               b[static_cast<int64_t>(t) * n + j];
      ci[j] = acc;
    }
  }
}

void AxpyAvx2(double alpha, const double* x, double* y, int64_t n) {
  __m256d av = _mm256_set1_pd(alpha);
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d yv = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i),
                                 _mm256_loadu_pd(y + i));
    _mm256_storeu_pd(y + i, yv);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double DotAvx2(const double* x, const double* y, int64_t n) {
  __m256d s = _mm256_setzero_pd();
  int64_t i = 0;
  for (; i + 4 <= n; i += 4)
    s = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), s);
  double acc = HorizontalSum1(s);
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void AdamStepAvx2(double* p, const double* g, double* m, double* v, int64_t n,
                  double lr, double beta1, double beta2, double eps, double bc1,
                  double bc2) {
  __m256d b1 = _mm256_set1_pd(beta1);
  __m256d ob1 = _mm256_set1_pd(1.0 - beta1);
  __m256d b2 = _mm256_set1_pd(beta2);
  __m256d ob2 = _mm256_set1_pd(1.0 - beta2);
  __m256d bc1v = _mm256_set1_pd(bc1);
  __m256d bc2v = _mm256_set1_pd(bc2);
  __m256d epsv = _mm256_set1_pd(eps);
  __m256d lrv = _mm256_set1_pd(lr);
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d gv = _mm256_loadu_pd(g + i);
    __m256d mv = _mm256_fmadd_pd(ob1, gv, _mm256_mul_pd(b1, _mm256_loadu_pd(m + i)));
    __m256d g2 = _mm256_mul_pd(gv, gv);
    __m256d vv = _mm256_fmadd_pd(ob2, g2, _mm256_mul_pd(b2, _mm256_loadu_pd(v + i)));
    _mm256_storeu_pd(m + i, mv);
    _mm256_storeu_pd(v + i, vv);
    __m256d mhat = _mm256_div_pd(mv, bc1v);
    __m256d vhat = _mm256_div_pd(vv, bc2v);
    __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), epsv);
    __m256d upd = _mm256_div_pd(mhat, denom);
    __m256d pv = _mm256_fnmadd_pd(lrv, upd, _mm256_loadu_pd(p + i));
    _mm256_storeu_pd(p + i, pv);
  }
  for (; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
  }
}

void SignStepClipAvx2(double* delta, const double* g, double lr, double bound,
                      int64_t n) {
  __m256d zero = _mm256_setzero_pd();
  __m256d one = _mm256_set1_pd(1.0);
  __m256d none = _mm256_set1_pd(-1.0);
  __m256d lrv = _mm256_set1_pd(lr);
  __m256d bhi = _mm256_set1_pd(bound);
  __m256d blo = _mm256_set1_pd(-bound);
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d gv = _mm256_loadu_pd(g + i);
    __m256d pos = _mm256_cmp_pd(gv, zero, _CMP_GT_OQ);
    __m256d neg = _mm256_cmp_pd(gv, zero, _CMP_LT_OQ);
    __m256d s = _mm256_or_pd(_mm256_and_pd(pos, one), _mm256_and_pd(neg, none));
    __m256d d = _mm256_fnmadd_pd(lrv, s, _mm256_loadu_pd(delta + i));
    d = _mm256_min_pd(d, bhi);
    d = _mm256_max_pd(d, blo);
    _mm256_storeu_pd(delta + i, d);
  }
  for (; i < n; ++i) {
    double s = (g[i] > 0.0) ? 1.0 : (g[i] < 0.0 ? -1.0 : 0.0);
    double d = delta[i] - lr * s;
    if (d > bound) d = bound;
    if (d < -bound) d = -bound;
    delta[i] = d;
  }
}

}  // namespace

const Backend* Avx2() {
  static const Backend backend = {
      "avx2",        MatmulNTAvx2, MatmulNNAvx2,
      MatmulTNAvx2,  AxpyAvx2,     DotAvx2,
      AdamStepAvx2,  SignStepClipAvx2,
  };
  static const bool supported =
      __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &backend : nullptr;
}

}  // namespace kernels
}  // namespace psyadv
