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

#include "psyadv/tape.h"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "psyadv/rng.h"

namespace psyadv {
namespace {

// Central-difference gradient check of a scalar function against the tape's
// reverse-mode gradient at the same point.
void CheckGradient(std::function<Tensor(Tape&, Tensor)> build,
                   std::vector<double> x, std::vector<int> shape,
                   double h = 1e-6, double tol = 1e-6) {
  std::vector<double> grad(x.size(), 0.0);
  {
    Tape tape;
    Tensor leaf = tape.Leaf(x.data(), shape, grad.data());
    Tensor loss = build(tape, leaf);
    tape.Backward(loss);
  }
  for (size_t i = 0; i < x.size(); ++i) {
    double saved = x[i];
    x[i] = saved + h;
    double fp;
    {
      Tape tape;
      fp = build(tape, tape.Leaf(x.data(), shape, nullptr)).scalar();
    }
    x[i] = saved - h;
    double fm;
    {
      Tape tape;
      fm = build(tape, tape.Leaf(x.data(), shape, nullptr)).scalar();
    }
    x[i] = saved;
    double fd = (fp - fm) / (2.0 * h);
    double scale = std::max({std::abs(fd), std::abs(grad[i]), 1.0});
    CHECK(std::abs(fd - grad[i]) <= tol * scale);
  }
}

std::vector<double> RandomVector(Rng& rng, int64_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * rng.Normal();
  return v;
}

TEST_CASE("elementwise op values") {
  Tape tape;
  Tensor a = tape.Value({1.0, -2.0, 3.0}, {3});
  Tensor b = tape.Value({0.5, 0.5, 0.5}, {3});
  CHECK(tape.Add(a, b).values()[1] == doctest::Approx(-1.5));
  CHECK(tape.Scale(a, -2.0).values()[2] == doctest::Approx(-6.0));
  CHECK(tape.Relu(a).values()[1] == 0.0);
  CHECK(tape.Relu(a).values()[2] == doctest::Approx(3.0));
  CHECK(tape.Mean(a).scalar() == doctest::Approx(2.0 / 3.0));
  const double c[3] = {1.0, 1.0, 1.0};
  CHECK(tape.SubConst(a, c).values()[0] == doctest::Approx(0.0));
  CHECK(tape.LogEps(b, 0.5).values()[0] == doctest::Approx(0.0));
}

TEST_CASE("elementwise op gradients") {
  Rng rng(1);
  std::vector<double> x = RandomVector(rng, 9);
  std::vector<double> c = RandomVector(rng, 9);

  CheckGradient(
      [&](Tape& t, Tensor a) {
        return t.Mean(t.Add(a, t.Value(c, {9})));
      },
      x, {9});
  CheckGradient([&](Tape& t, Tensor a) { return t.Mean(t.Scale(a, -2.5)); },
                x, {9});
  CheckGradient(
      [&](Tape& t, Tensor a) { return t.Mean(t.Relu(t.SubConst(a, c.data()))); },
      x, {9});
  std::vector<double> pos(9);
  for (int i = 0; i < 9; ++i) pos[i] = 1.0 + std::abs(x[i]);
  CheckGradient([&](Tape& t, Tensor a) { return t.Mean(t.LogEps(a, 1e-3)); },
                pos, {9});
}

TEST_CASE("frames slices with hop and zero padding") {
  Tape tape;
  std::vector<double> wave = {1, 2, 3, 4, 5, 6, 7};
  Tensor w = tape.Value(wave, {7});
  Tensor frames = tape.Frames(w, 3, 2, 5);
  REQUIRE(frames.shape() == std::vector<int>{3, 5});
  auto v = frames.values();
  // Frame 1 covers samples 2..4, padded with two zeros.
  CHECK(v[5] == 3.0);
  CHECK(v[6] == 4.0);
  CHECK(v[7] == 5.0);
  CHECK(v[8] == 0.0);
  CHECK(v[9] == 0.0);

  CHECK_THROWS_AS(tape.Frames(w, 8, 2, 8), std::invalid_argument);
  CHECK_THROWS_AS(tape.Frames(w, 4, 2, 3), std::invalid_argument);
}

TEST_CASE("frames and mul_row gradients") {
  Rng rng(2);
  std::vector<double> x = RandomVector(rng, 20);
  std::vector<double> row = RandomVector(rng, 8);
  CheckGradient(
      [&](Tape& t, Tensor a) {
        Tensor f = t.Frames(a, 6, 3, 8);
        return t.Mean(t.MulRow(f, row));
      },
      x, {20});
}

TEST_CASE("spectral power psd chain gradient") {
  Rng rng(3);
  const int n = 16;
  FftPlan plan(n);
  std::vector<double> window(n);
  for (int i = 0; i < n; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / n);
  }
  std::vector<double> x = RandomVector(rng, 40, 10.0);
  CheckGradient(
      [&](Tape& t, Tensor a) {
        Tensor f = t.Frames(a, n, 8, n);
        Tensor w = t.MulRow(f, window);
        Tensor p = t.SpectralPower(w, &plan);
        return t.Mean(t.PsdDb(p, 3.0, 1e-30));
      },
      x, {40}, 1e-5, 1e-3);
}

TEST_CASE("spectral power values match the fft") {
  const int n = 8;
  FftPlan plan(n);
  Rng rng(4);
  std::vector<double> x = RandomVector(rng, n);
  Tape tape;
  Tensor rows = tape.Value(x, {1, n});
  Tensor power = tape.SpectralPower(rows, &plan);
  std::vector<double> packed(2 * plan.bins());
  plan.RealForward(x.data(), packed.data());
  for (int k = 0; k < plan.bins(); ++k) {
    double expected =
        packed[2 * k] * packed[2 * k] + packed[2 * k + 1] * packed[2 * k + 1];
    CHECK(power.values()[k] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("matmul, bias and splice gradients") {
  Rng rng(5);
  std::vector<double> a = RandomVector(rng, 12);  // [3, 4]
  std::vector<double> b = RandomVector(rng, 20);  // [5, 4]
  std::vector<double> mask = RandomVector(rng, 5);

  CheckGradient(
      [&](Tape& t, Tensor x) {
        Tensor bb = t.Value(b, {5, 4});
        return t.Mean(t.MulRow(t.MatmulNT(x, bb), mask));
      },
      a, {3, 4});
  CheckGradient(
      [&](Tape& t, Tensor x) {
        Tensor aa = t.Value(a, {3, 4});
        return t.Mean(t.MulRow(t.MatmulNT(aa, x), mask));
      },
      b, {5, 4});

  std::vector<double> bias = RandomVector(rng, 4);
  CheckGradient(
      [&](Tape& t, Tensor x) {
        return t.Mean(t.AddBias(x, t.Value(bias, {4})));
      },
      a, {3, 4});
  CheckGradient(
      [&](Tape& t, Tensor x) {
        Tensor rows = t.Value(a, {3, 4});
        return t.Mean(t.AddBias(rows, x));
      },
      bias, {4});

  std::vector<double> rows6 = RandomVector(rng, 18);  // [6, 3]
  const std::vector<int> offsets = {-1, 0, 2};
  std::vector<double> mask9 = RandomVector(rng, 9);
  CheckGradient(
      [&](Tape& t, Tensor x) {
        Tensor s = t.Splice(x, offsets);
        return t.Mean(t.MulRow(s, mask9));
      },
      rows6, {6, 3});
}

TEST_CASE("splice values concatenate shifted rows") {
  Tape tape;
  Tensor rows = tape.Value({1, 2, 3, 4, 5, 6, 7, 8}, {4, 2});
  const std::vector<int> offsets = {-1, 1};
  Tensor s = tape.Splice(rows, offsets);
  REQUIRE(s.shape() == std::vector<int>{2, 4});
  auto v = s.values();
  // Output row 0 is input rows 0 and 2; output row 1 is rows 1 and 3.
  CHECK(v[0] == 1.0);
  CHECK(v[1] == 2.0);
  CHECK(v[2] == 5.0);
  CHECK(v[3] == 6.0);
  CHECK(v[4] == 3.0);
  CHECK(v[7] == 8.0);
}

TEST_CASE("batchnorm training normalizes with batch statistics") {
  Tape tape;
  Tensor rows = tape.Value({1.0, 10.0, 2.0, 20.0, 3.0, 30.0, 6.0, 60.0},
                           {4, 2});
  Tensor gamma = tape.Value({1.0, 1.0}, {2});
  Tensor beta = tape.Value({0.0, 0.0}, {2});
  std::vector<double> rm = {5.0, 5.0}, rv = {2.0, 2.0};
  Tensor out =
      tape.BatchNorm(rows, gamma, beta, rm, rv, true, 1e-5, 0.1);

  // Column means of the output are zero, biased variance is one.
  for (int j = 0; j < 2; ++j) {
    double mean = 0.0, var = 0.0;
    for (int t = 0; t < 4; ++t) mean += out.values()[t * 2 + j];
    mean /= 4;
    for (int t = 0; t < 4; ++t) {
      double d = out.values()[t * 2 + j] - mean;
      var += d * d;
    }
    var /= 4;
    CHECK(mean == doctest::Approx(0.0));
    CHECK(var == doctest::Approx(1.0).epsilon(1e-4));
  }

  // Running buffers follow the momentum EMA with unbiased variance.
  double batch_mean = 3.0, batch_var = 3.5;  // first column
  CHECK(rm[0] == doctest::Approx(0.9 * 5.0 + 0.1 * batch_mean));
  CHECK(rv[0] ==
        doctest::Approx(0.9 * 2.0 + 0.1 * batch_var * (4.0 / 3.0)));
}

TEST_CASE("batchnorm eval uses the running statistics") {
  Tape tape;
  Tensor rows = tape.Value({4.0, 9.0}, {1, 2});
  Tensor gamma = tape.Value({2.0, 1.0}, {2});
  Tensor beta = tape.Value({1.0, 0.0}, {2});
  std::vector<double> rm = {2.0, 5.0}, rv = {4.0, 16.0};
  Tensor out = tape.BatchNorm(rows, gamma, beta, rm, rv, false, 1e-12, 0.1);
  CHECK(out.values()[0] == doctest::Approx(1.0 + 2.0 * (4.0 - 2.0) / 2.0));
  CHECK(out.values()[1] == doctest::Approx((9.0 - 5.0) / 4.0));
  // Eval mode leaves the running buffers untouched.
  CHECK(rm[0] == 2.0);
  CHECK(rv[1] == 16.0);
}

TEST_CASE("batchnorm training rejects single-row batches") {
  Tape tape;
  Tensor rows = tape.Value({1.0, 2.0}, {1, 2});
  Tensor gamma = tape.Value({1.0, 1.0}, {2});
  Tensor beta = tape.Value({0.0, 0.0}, {2});
  std::vector<double> rm = {0.0, 0.0}, rv = {1.0, 1.0};
  CHECK_THROWS_AS(tape.BatchNorm(rows, gamma, beta, rm, rv, true, 1e-5, 0.1),
                  std::invalid_argument);
}

TEST_CASE("batchnorm gradients in both modes") {
  Rng rng(6);
  std::vector<double> x = RandomVector(rng, 15);  // [5, 3]
  std::vector<double> g = {1.2, 0.8, -0.5};
  std::vector<double> b = {0.1, -0.2, 0.3};
  std::vector<double> mask = RandomVector(rng, 3);

  for (bool training : {true, false}) {
    CheckGradient(
        [&](Tape& t, Tensor rows) {
          std::vector<double> rm = {0.5, -0.5, 1.0};
          std::vector<double> rv = {1.5, 2.0, 0.5};
          Tensor out = t.BatchNorm(rows, t.Value(g, {3}), t.Value(b, {3}), rm,
                                   rv, training, 1e-5, 0.1);
          return t.Mean(t.MulRow(out, mask));
        },
        x, {5, 3}, 1e-6, 1e-5);
    CheckGradient(
        [&](Tape& t, Tensor gamma) {
          std::vector<double> rm = {0.5, -0.5, 1.0};
          std::vector<double> rv = {1.5, 2.0, 0.5};
          Tensor out = t.BatchNorm(t.Value(x, {5, 3}), gamma, t.Value(b, {3}),
                                   rm, rv, training, 1e-5, 0.1);
          return t.Mean(t.MulRow(out, mask));
        },
        g, {3}, 1e-6, 1e-5);
    CheckGradient(
        [&](Tape& t, Tensor beta) {
          std::vector<double> rm = {0.5, -0.5, 1.0};
          std::vector<double> rv = {1.5, 2.0, 0.5};
          Tensor out = t.BatchNorm(t.Value(x, {5, 3}), t.Value(g, {3}), beta,
                                   rm, rv, training, 1e-5, 0.1);
          return t.Mean(t.MulRow(out, mask));
        },
        b, {3}, 1e-6, 1e-5);
  }
}

TEST_CASE("stats pool values and gradient") {
  Tape tape;
  Tensor rows = tape.Value({1.0, 4.0, 3.0, 8.0}, {2, 2});
  Tensor pooled = tape.StatsPool(rows, 1e-9);
  REQUIRE(pooled.shape() == std::vector<int>{4});
  CHECK(pooled.values()[0] == doctest::Approx(2.0));
  CHECK(pooled.values()[1] == doctest::Approx(6.0));
  CHECK(pooled.values()[2] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(pooled.values()[3] == doctest::Approx(2.0).epsilon(1e-6));

  Rng rng(7);
  std::vector<double> x = RandomVector(rng, 18);  // [6, 3]
  std::vector<double> c = RandomVector(rng, 6);
  CheckGradient(
      [&](Tape& t, Tensor r) {
        Tensor p = t.StatsPool(r, 1e-9);
        return t.Mean(t.Relu(t.SubConst(p, c.data())));
      },
      x, {6, 3}, 1e-6, 1e-5);
}

TEST_CASE("concat_rows stacks matrices and vectors") {
  Tape tape;
  Tensor a = tape.Value({1, 2, 3, 4, 5, 6}, {2, 3});
  Tensor b = tape.Value({7, 8, 9}, {3});
  std::vector<Tensor> parts = {a, b};
  Tensor joined = tape.ConcatRows(parts);
  REQUIRE(joined.shape() == std::vector<int>{3, 3});
  CHECK(joined.values()[0] == 1.0);
  CHECK(joined.values()[6] == 7.0);
  CHECK(joined.values()[8] == 9.0);

  Tensor c = tape.Value({1, 2}, {1, 2});
  std::vector<Tensor> bad = {a, c};
  CHECK_THROWS_AS(tape.ConcatRows(bad), std::invalid_argument);
}

TEST_CASE("concat_rows and rows gradients") {
  Rng rng(8);
  std::vector<double> a = RandomVector(rng, 6);
  std::vector<double> b = RandomVector(rng, 9);
  std::vector<double> mask = RandomVector(rng, 3);
  CheckGradient(
      [&](Tape& t, Tensor x) {
        Tensor other = t.Value(b, {3, 3});
        std::vector<Tensor> parts = {x, other};
        return t.Mean(t.MulRow(t.ConcatRows(parts), mask));
      },
      a, {2, 3});
  CheckGradient(
      [&](Tape& t, Tensor x) {
        return t.Mean(t.MulRow(t.Rows(x, 1, 2), mask));
      },
      b, {3, 3});
}

TEST_CASE("rows and row extract slices") {
  Tape tape;
  Tensor a = tape.Value({1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12}, {4, 3});
  Tensor slice = tape.Rows(a, 1, 2);
  REQUIRE(slice.shape() == std::vector<int>{2, 3});
  CHECK(slice.values()[0] == 4.0);
  CHECK(slice.values()[5] == 9.0);
  CHECK_THROWS_AS(tape.Rows(a, 3, 2), std::invalid_argument);

  Tensor r = tape.Row(a, 2);
  REQUIRE(r.shape() == std::vector<int>{3});
  CHECK(r.values()[0] == 7.0);
  CHECK_THROWS_AS(tape.Row(a, 4), std::invalid_argument);

  Rng rng(9);
  std::vector<double> x = RandomVector(rng, 12);
  CheckGradient([&](Tape& t, Tensor m) { return t.Mean(t.Row(m, 2)); }, x,
                {4, 3});
}

TEST_CASE("softmax and cross entropy from logits") {
  Tape tape;
  Tensor logits = tape.Value({1.0, 2.0, 3.0}, {3});
  Tensor probs = tape.Softmax(logits);
  double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  CHECK(probs.values()[0] == doctest::Approx(std::exp(1.0) / z));
  CHECK(probs.values()[2] == doctest::Approx(std::exp(3.0) / z));
  double sum = probs.values()[0] + probs.values()[1] + probs.values()[2];
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

  Tensor ce = tape.CrossEntropyLogits(logits, 1);
  CHECK(ce.scalar() == doctest::Approx(-std::log(std::exp(2.0) / z)));
  CHECK_THROWS_AS(tape.CrossEntropyLogits(logits, 3), std::invalid_argument);
  CHECK_THROWS_AS(tape.CrossEntropyLogits(logits, -1), std::invalid_argument);
}

TEST_CASE("softmax gradient matches finite differences") {
  Rng rng(31);
  std::vector<double> x = RandomVector(rng, 5);
  CheckGradient(
      [](Tape& t, Tensor logits) {
        return t.Mean(t.LogEps(t.Softmax(logits), 1e-12));
      },
      x, {5});
}

TEST_CASE("cross entropy gradient is probs minus one-hot") {
  std::vector<double> logits = {0.3, -1.2, 0.7, 2.0};
  std::vector<double> grad(4, 0.0);
  Tape tape;
  Tensor leaf = tape.Leaf(logits.data(), {4}, grad.data());
  Tensor probs = tape.Softmax(leaf);
  Tensor ce = tape.CrossEntropyLogits(leaf, 2);
  tape.Backward(ce);
  for (int i = 0; i < 4; ++i) {
    double expected = probs.values()[i] - (i == 2 ? 1.0 : 0.0);
    CHECK(grad[i] == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("cross entropy keeps its gradient under saturation") {
  std::vector<double> logits = {1000.0, 0.0};
  std::vector<double> grad(2, 0.0);
  Tape tape;
  Tensor leaf = tape.Leaf(logits.data(), {2}, grad.data());
  Tensor ce = tape.CrossEntropyLogits(leaf, 1);
  CHECK(ce.scalar() == doctest::Approx(1000.0).epsilon(1e-12));
  tape.Backward(ce);
  CHECK(grad[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(grad[1] == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("ops reject non-finite forward values") {
  Tape tape;
  Tensor a = tape.Value({1e308}, {1});
  CHECK_THROWS_WITH_AS(tape.Add(a, a), doctest::Contains("non-finite"),
                       std::runtime_error);
}

TEST_CASE("backward reports non-finite gradients") {
  // log(x + eps) at x = 0 with a denormal eps is finite, but its gradient
  // 1 / eps overflows, which Backward must catch.
  std::vector<double> x = {0.0};
  std::vector<double> grad = {0.0};
  Tape tape;
  Tensor leaf = tape.Leaf(x.data(), {1}, grad.data());
  Tensor loss = tape.Mean(tape.LogEps(leaf, 1e-320));
  CHECK_THROWS_WITH_AS(tape.Backward(loss),
                       doctest::Contains("non-finite gradient"),
                       std::runtime_error);
}

TEST_CASE("backward flushes leaf gradients additively into sinks") {
  std::vector<double> x = {2.0, 4.0};
  std::vector<double> grad = {10.0, 10.0};  // pre-existing content survives
  Tape tape;
  Tensor leaf = tape.Leaf(x.data(), {2}, grad.data());
  Tensor loss = tape.Mean(leaf);
  tape.Backward(loss);
  CHECK(grad[0] == doctest::Approx(10.5));
  CHECK(grad[1] == doctest::Approx(10.5));
}

TEST_CASE("backward validates the loss node") {
  Tape tape;
  Tensor v = tape.Value({1.0, 2.0}, {2}, true);
  CHECK_THROWS_AS(tape.Backward(v), std::invalid_argument);  // not scalar
  Tensor c = tape.Value({1.0}, {1});
  CHECK_THROWS_AS(tape.Backward(c), std::invalid_argument);  // no leaf
}

}  // namespace
}  // namespace psyadv
