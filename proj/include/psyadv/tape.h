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
// Reverse-mode automatic differentiation over a flat operation tape.
// Values are computed eagerly in double precision; Backward replays the tape
// in reverse, accumulating cotangents.  The op set is exactly what the
// speaker model and the attack losses need; every op validates shapes and
// checks its outputs for non-finite values.

#ifndef PSYADV_TAPE_H_
#define PSYADV_TAPE_H_

#include <functional>
#include <span>
#include <vector>

#include "psyadv/fft.h"

namespace psyadv {

class Tape;

// Cheap handle to a tape node.  Valid as long as its tape is alive and not
// cleared.
class Tensor {
 public:
  Tensor() = default;

  bool defined() const { return tape_ != nullptr; }
  const std::vector<int>& shape() const;
  int64_t size() const;
  bool requires_grad() const;
  std::span<const double> values() const;
  // Accumulated cotangent; empty when this node never received gradient.
  std::span<const double> grad() const;
  double scalar() const;

 private:
  friend class Tape;
  Tensor(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf over external storage.  `grad_sink`, when non-null, receives the
  // leaf's accumulated gradient at the end of Backward (added in place, so
  // callers zero it between passes); it also marks the leaf as requiring
  // gradient.  The data pointer must stay valid for the life of the tape.
  Tensor Leaf(const double* data, std::vector<int> shape,
              double* grad_sink = nullptr);
  // Leaf that copies the given values into tape-owned storage.
  Tensor Value(std::vector<double> values, std::vector<int> shape,
               bool requires_grad = false);

  Tensor Add(Tensor a, Tensor b);
  Tensor Scale(Tensor a, double c);
  // Elementwise a - c for a constant vector of matching size.  The pointer
  // must stay valid for the life of the tape.
  Tensor SubConst(Tensor a, const double* c);
  Tensor Relu(Tensor a);
  Tensor Mean(Tensor a);
  // Natural log of (a + eps).
  Tensor LogEps(Tensor a, double eps);

  // [S] -> [T, frame_length] slicing with hop; trailing partial frames are
  // dropped.  Columns >= frame_length (zero padding up to padded_width) are
  // constant zero.
  Tensor Frames(Tensor wave, int frame_length, int hop, int padded_width);
  // Multiplies every row of [T, W] by a constant row of width W.
  Tensor MulRow(Tensor rows, std::span<const double> row);
  // [T, n] windowed rows -> [T, n/2+1] squared DFT magnitudes.  The plan must
  // outlive the tape.  Output is |X_k|^2 (no 1/n scaling).
  Tensor SpectralPower(Tensor rows, const FftPlan* plan);
  // 10*log10(max(power, floor)) + add_db, elementwise.
  Tensor PsdDb(Tensor power, double add_db, double floor);

  // C[m, n] = A[m, k] * B[n, k]^T.
  Tensor MatmulNT(Tensor a, Tensor b);
  // rows[m, n] + bias[n], broadcast over rows.
  Tensor AddBias(Tensor rows, Tensor bias);
  // Frame splicing: out[t, :] is the concatenation of rows t + off - min_off
  // for each offset.  [T, C] -> [T - span + 1, C * offsets.size()].
  Tensor Splice(Tensor rows, std::span<const int> offsets);
  // Per-channel batch normalization over rows.  In training mode the batch
  // statistics normalize and the running buffers are updated in place
  // (momentum EMA with unbiased running variance); otherwise the running
  // statistics normalize.  Training requires at least 2 rows.
  Tensor BatchNorm(Tensor rows, Tensor gamma, Tensor beta,
                   std::span<double> running_mean,
                   std::span<double> running_var, bool training, double eps,
                   double momentum);
  // [T, C] -> [2C]: per-channel mean and epsilon-stabilized standard
  // deviation, concatenated.
  Tensor StatsPool(Tensor rows, double var_eps);
  // Stacks same-width inputs along rows into [sum of rows, C]; a 1-D input
  // of size C counts as one row.
  Tensor ConcatRows(std::span<const Tensor> rows);
  // Contiguous row slice [begin, begin + count) of [m, n] as [count, n].
  Tensor Rows(Tensor a, int begin, int count);
  // Extracts row r of [m, n] as [n].
  Tensor Row(Tensor a, int r);

  Tensor Softmax(Tensor logits);
  // logsumexp(logits) - logits[target], computed without forming the
  // probabilities.  The gradient softmax(logits) - onehot(target) stays
  // informative even where the softmax saturates to exact zeros.
  Tensor CrossEntropyLogits(Tensor logits, int target);

  // Seeds d(loss)/d(loss) = 1 and accumulates gradients for every node that
  // influences `loss`, then flushes leaf gradients into their sinks.  The
  // first non-finite gradient raises std::runtime_error naming the op.
  void Backward(Tensor loss);

  int num_nodes() const { return static_cast<int>(nodes_.size()); }

 private:
  friend class Tensor;

  struct Node {
    std::vector<int> shape;
    int64_t size = 0;
    std::vector<double> storage;     // owned values; empty for external leaves
    const double* values = nullptr;  // points into storage or external data
    std::vector<double> grad;        // lazily allocated on first accumulation
    double* grad_sink = nullptr;
    bool requires_grad = false;
    const char* op = "leaf";
    std::function<void(Tape&)> backward;  // empty for leaves
  };

  int NewNode(std::vector<int> shape, const char* op, bool requires_grad);
  Node& node(int id) { return nodes_[id]; }
  std::span<const double> ValuesOf(int id) const;
  // Gradient buffer of `id`, allocated and zeroed on first use.
  std::span<double> GradOf(int id);
  bool HasGrad(int id) const { return !nodes_[id].grad.empty(); }
  void CheckFinite(int id) const;
  static int64_t ShapeSize(const std::vector<int>& shape);

  std::vector<Node> nodes_;
};

}  // namespace psyadv

#endif  // PSYADV_TAPE_H_
