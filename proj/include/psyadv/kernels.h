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
// Hot numeric kernels behind a runtime-dispatched backend.  Every entry point
// has a portable scalar implementation (the reference semantics) and an AVX2
// variant selected once at startup when the CPU supports it.  Set
// PSYADV_KERNELS=scalar in the environment to force the reference path.

#ifndef PSYADV_KERNELS_H_
#define PSYADV_KERNELS_H_

#include <cstdint>

namespace psyadv {
namespace kernels {

// All matrices are dense row-major doubles.  Matmul kernels accumulate into
// C (callers zero-fill when they need a plain product).
struct Backend {
  const char* name;

  // C[m x n] += A[m x k] * B[n x k]^T
  void (*matmul_nt)(const double* a, const double* b, double* c, int m, int n,
                    int k);
  // C[m x n] += A[m x p] * B[p x n]
  void (*matmul_nn)(const double* a, const double* b, double* c, int m, int n,
                    int p);
  // C[m x n] += A[p x m]^T * B[p x n]
  void (*matmul_tn)(const double* a, const double* b, double* c, int m, int n,
                    int p);

  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, int64_t n);
  double (*dot)(const double* x, const double* y, int64_t n);

  // Adam update with bias correction:
  //   m = beta1*m + (1-beta1)*g;  v = beta2*v + (1-beta2)*g*g
  //   p -= lr * (m/bc1) / (sqrt(v/bc2) + eps)
  void (*adam_step)(double* p, const double* g, double* m, double* v,
                    int64_t n, double lr, double beta1, double beta2,
                    double eps, double bc1, double bc2);

  // delta = clamp(delta - lr * sign(g), -bound, bound); sign(0) == 0.
  void (*sign_step_clip)(double* delta, const double* g, double lr,
                         double bound, int64_t n);
};

const Backend& Scalar();
// nullptr when the CPU lacks AVX2/FMA.
const Backend* Avx2();
// The backend in use, resolved once (thread safe).
const Backend& Active();

inline void MatmulNT(const double* a, const double* b, double* c, int m, int n,
                     int k) {
  Active().matmul_nt(a, b, c, m, n, k);
}
inline void MatmulNN(const double* a, const double* b, double* c, int m, int n,
                     int p) {
  Active().matmul_nn(a, b, c, m, n, p);
}
inline void MatmulTN(const double* a, const double* b, double* c, int m, int n,
                     int p) {
  Active().matmul_tn(a, b, c, m, n, p);
}
inline void Axpy(double alpha, const double* x, double* y, int64_t n) {
  Active().axpy(alpha, x, y, n);
}
inline double Dot(const double* x, const double* y, int64_t n) {
  return Active().dot(x, y, n);
}
inline void AdamStep(double* p, const double* g, double* m, double* v,
                     int64_t n, double lr, double beta1, double beta2,
                     double eps, double bc1, double bc2) {
  Active().adam_step(p, g, m, v, n, lr, beta1, beta2, eps, bc1, bc2);
}
inline void SignStepClip(double* delta, const double* g, double lr,
                         double bound, int64_t n) {
  Active().sign_step_clip(delta, g, lr, bound, n);
}

}  // namespace kernels
}  // namespace psyadv

#endif  // PSYADV_KERNELS_H_
