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
#include <stdexcept>

#include "psyadv/kernels.h"
#include "psyadv/log.h"

namespace psyadv {
namespace {

constexpr double kDbPerNat = 10.0 / 2.302585092994045684;  // 10 / ln(10)

}  // namespace

const std::vector<int>& Tensor::shape() const { return tape_->node(id_).shape; }
int64_t Tensor::size() const { return tape_->node(id_).size; }
bool Tensor::requires_grad() const { return tape_->node(id_).requires_grad; }

std::span<const double> Tensor::values() const {
  const Tape::Node& n = tape_->node(id_);
  return {n.values, static_cast<size_t>(n.size)};
}

std::span<const double> Tensor::grad() const {
  const Tape::Node& n = tape_->node(id_);
  return {n.grad.data(), n.grad.size()};
}

double Tensor::scalar() const {
  if (size() != 1) {
    throw std::invalid_argument("scalar(): tensor does not have size 1");
  }
  return values()[0];
}

int64_t Tape::ShapeSize(const std::vector<int>& shape) {
  int64_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw std::invalid_argument("tape: non-positive dimension");
    n *= d;
  }
  return n;
}

int Tape::NewNode(std::vector<int> shape, const char* op, bool requires_grad) {
  Node n;
  n.size = ShapeSize(shape);
  n.shape = std::move(shape);
  n.op = op;
  n.requires_grad = requires_grad;
  n.storage.assign(static_cast<size_t>(n.size), 0.0);
  n.values = n.storage.data();
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

std::span<const double> Tape::ValuesOf(int id) const {
  const Node& n = nodes_[id];
  return {n.values, static_cast<size_t>(n.size)};
}

std::span<double> Tape::GradOf(int id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad.assign(static_cast<size_t>(n.size), 0.0);
  return {n.grad.data(), n.grad.size()};
}

void Tape::CheckFinite(int id) const {
  const Node& n = nodes_[id];
  for (int64_t i = 0; i < n.size; ++i) {
    if (!std::isfinite(n.values[i])) {
      throw std::runtime_error(
          StrCat("tape: non-finite value produced by op '", n.op, "'"));
    }
  }
}

Tensor Tape::Leaf(const double* data, std::vector<int> shape,
                  double* grad_sink) {
  Node n;
  n.size = ShapeSize(shape);
  n.shape = std::move(shape);
  n.op = "leaf";
  n.requires_grad = grad_sink != nullptr;
  n.grad_sink = grad_sink;
  n.values = data;
  nodes_.push_back(std::move(n));
  return Tensor(this, static_cast<int>(nodes_.size()) - 1);
}

Tensor Tape::Value(std::vector<double> values, std::vector<int> shape,
                   bool requires_grad) {
  int64_t size = ShapeSize(shape);
  if (size != static_cast<int64_t>(values.size())) {
    throw std::invalid_argument("tape: value size does not match shape");
  }
  Node n;
  n.size = size;
  n.shape = std::move(shape);
  n.op = "value";
  n.requires_grad = requires_grad;
  n.storage = std::move(values);
  n.values = n.storage.data();
  nodes_.push_back(std::move(n));
  return Tensor(this, static_cast<int>(nodes_.size()) - 1);
}

Tensor Tape::Add(Tensor a, Tensor b) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument("add: shape mismatch");
  }
  int id = NewNode(a.shape(), "add", a.requires_grad() || b.requires_grad());
  Node& out = nodes_[id];
  auto av = ValuesOf(a.id_);
  auto bv = ValuesOf(b.id_);
  for (int64_t i = 0; i < out.size; ++i) out.storage[i] = av[i] + bv[i];
  CheckFinite(id);
  if (out.requires_grad) {
    out.backward = [id, aid = a.id_, bid = b.id_, ar = a.requires_grad(),
                    br = b.requires_grad()](Tape& t) {
      auto g = t.GradOf(id);
      if (ar) {
        auto ga = t.GradOf(aid);
        for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (br) {
        auto gb = t.GradOf(bid);
        for (size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
      }
    };
  }
  return Tensor(this, id);
}

Tensor Tape::Scale(Tensor a, double c) {
  int id = NewNode(a.shape(), "scale", a.requires_grad());
  Node& out = nodes_[id];
  auto av = ValuesOf(a.id_);
  for (int64_t i = 0; i < out.size; ++i) out.storage[i] = c * av[i];
  CheckFinite(id);
  if (out.requires_grad) {
    out.backward = [id, aid = a.id_, c](Tape& t) {
      auto g = t.GradOf(id);
      auto ga = t.GradOf(aid);
      kernels::Axpy(c, g.data(), ga.data(), static_cast<int64_t>(g.size()));
    };
  }
  return Tensor(this, id);
}

Tensor Tape::SubConst(Tensor a, const double* c) {
  int id = NewNode(a.shape(), "sub_const", a.requires_grad());
  Node& out = nodes_[id];
  auto av = ValuesOf(a.id_);
  for (int64_t i = 0; i < out.size; ++i) out.storage[i] = av[i] - c[i];
  CheckFinite(id);
  if (out.requires_grad) {
    out.backward = [id, aid = a.id_](Tape& t) {
      auto g = t.GradOf(id);
      auto ga = t.GradOf(aid);
      for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    };
  }
  return Tensor(this, id);
}

Tensor Tape::Relu(Tensor a) {
  int id = NewNode(a.shape(), "relu", a.requires_grad());
  Node& out = nodes_[id];
  auto av = ValuesOf(a.id_);
  for (int64_t i = 0; i < out.size; ++i)
    out.storage[i] = av[i] > 0.0 ? av[i] : 0.0;
  CheckFinite(id);
  if (out.requires_grad) {
    out.backward = [id, aid = a.id_](Tape& t) {
      auto g = t.GradOf(id);
      auto av = t.ValuesOf(aid);
      auto ga = t.GradOf(aid);
      for (size_t i = 0; i < g.size(); ++i) {
        if (av[i] > 0.0) ga[i] += g[i];
      }
    };
  }
  return Tensor(this, id);
}

Tensor Tape::Mean(Tensor a) {
  int id = NewNode({1}, "mean", a.requires_grad());
  Node& out = nodes_[id];
  auto av = ValuesOf(a.id_);
  double sum = 0.0;
  for (double v : av) sum += v;
  out.storage[0] = sum / static_cast<double>(av.size());
  CheckFinite(id);
  if (out.requires_grad) {
    out.backward = [id, aid = a.id_](Tape& t) {
      double g = t.GradOf(id)[0];
      auto ga = t.GradOf(aid);
      double inv = g / static_cast<double>(ga.size());
      for (size_t i = 0; i < ga.size(); ++i) ga[i] += inv;
    };
  }
  return Tensor(this, id);
}

Tensor Tape::LogEps(Tensor a, double eps) {
  int id = NewNode(a.shape(), "log_eps", a.requires_grad());
  Node& out = nodes_[id];
  auto av = ValuesOf(a.id_);
  for (int64_t i = 0; i < out.size; ++i) out.storage[i] = std::log(av[i] + eps);
  CheckFinite(id);
  if (out.requires_grad) {
    out.backward = [id, aid = a.id_, eps](Tape& t) {
      auto g = t.GradOf(id);
      auto av = t.ValuesOf(aid);
      auto ga = t.GradOf(aid);
      for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / (av[i] + eps);
    };
  }
  return Tensor(this, id);
}

Tensor Tape::Frames(Tensor wave, int frame_length, int hop, int padded_width) {
  if (wave.shape().size() != 1) {
    throw std::invalid_argument("frames: input must be 1-D");
  }
  if (padded_width < frame_length) {
    throw std::invalid_argument("frames: padded width below frame length");
  }
  int64_t s = wave.size();
  if (s < frame_length) {
    throw std::invalid_argument(
        StrCat("frames: signal of ", s, " samples shorter than one frame (",
               frame_length, ")"));
  }
  int frames = static_cast<int>((s - frame_length) / hop + 1);
  int id = NewNode({frames, padded_width}, "frames", wave.requires_grad());
  Node& out = nodes_[id];
  auto wv = ValuesOf(wave.id_);
  for (int t = 0; t < frames; ++t) {
    const double* src = wv.data() + static_cast<int64_t>(t) * hop;
    double* dst = out.storage.data() + static_cast<int64_t>(t) * padded_width;
    for (int j = 0; j < frame_length; ++j) dst[j] = src[j];
  }
  CheckFinite(id);
  if (out.requires_grad) {
    out.backward = [id, wid = wave.id_, frames, frame_length, hop,
                    padded_width](Tape& t) {
      auto g = t.GradOf(id);
      auto gw = t.GradOf(wid);
      for (int f = 0; f < frames; ++f) {
        const double* gr = g.data() + static_cast<int64_t>(f) * padded_width;
        double* dst = gw.data() + static_cast<int64_t>(f) * hop;
        for (int j = 0; j < frame_length; ++j) dst[j] += gr[j];
      }
    };
  }
  return Tensor(this, id);
}

Tensor Tape::MulRow(Tensor rows, std::span<const double> row) {
  if (rows.shape().size() != 2 ||
      rows.shape()[1] != static_cast<int>(row.size())) {
    throw std::invalid_argument("mul_row: width mismatch");
  }
  int id = NewNode(rows.shape(), "mul_row", rows.requires_grad());
  Node& out = nodes_[id];
  auto rv = ValuesOf(rows.id_);
  int t_rows = rows.shape()[0];
  int width = rows.shape()[1];
  for (int t = 0; t < t_rows; ++t) {
    for (int j = 0; j < width; ++j) {
      out.storage[static_cast<int64_t>(t) * width + j] =
          rv[static_cast<int64_t>(t) * width + j] * row[j];
    }
  }
  CheckFinite(id);
  if (out.requires_grad) {
    std::vector<double> saved(row.begin(), row.end());
    out.backward = [id, rid = rows.id_, saved = std::move(saved), t_rows,
                    width](Tape& t) {
      auto g = t.GradOf(id);
      auto gr = t.GradOf(rid);
      for (int f = 0; f < t_rows; ++f) {
        for (int j = 0; j < width; ++j) {
          gr[static_cast<int64_t>(f) * width + j] +=
              g[static_cast<int64_t>(f) * width + j] * saved[j];
        }
      }
    };
  }
  return Tensor(this, id);
}

Tensor Tape::SpectralPower(Tensor rows, const FftPlan* plan) {
  if (rows.shape().size() != 2 || rows.shape()[1] != plan->size()) {
    throw std::invalid_argument("spec_power: rows must match FFT size");
  }
  int t_rows = rows.shape()[0];
  int bins = plan->bins();
  int id = NewNode({t_rows, bins}, "spec_power", rows.requires_grad());
  Node& out = nodes_[id];
  auto rv = ValuesOf(rows.id_);
  int n = plan->size();
  std::vector<double> spectra(static_cast<size_t>(t_rows) * 2 * bins);
  for (int t = 0; t < t_rows; ++t) {
    double* packed = spectra.data() + static_cast<int64_t>(t) * 2 * bins;
    plan->RealForward(rv.data() + static_cast<int64_t>(t) * n, packed);
    for (int k = 0; k < bins; ++k) {
      double re = packed[2 * k];
      double im = packed[2 * k + 1];
      out.storage[static_cast<int64_t>(t) * bins + k] = re * re + im * im;
    }
  }
  CheckFinite(id);
  if (out.requires_grad) {
    out.backward = [id, rid = rows.id_, plan, t_rows, bins, n,
                    spectra = std::move(spectra)](Tape& t) {
      auto g = t.GradOf(id);
      auto gr = t.GradOf(rid);
      std::vector<double> dpacked(2 * bins);
      std::vector<double> dframe(n);
      for (int f = 0; f < t_rows; ++f) {
        const double* packed = spectra.data() + static_cast<int64_t>(f) * 2 * bins;
        for (int k = 0; k < bins; ++k) {
          double gk = g[static_cast<int64_t>(f) * bins + k];
          dpacked[2 * k] = 2.0 * gk * packed[2 * k];
          dpacked[2 * k + 1] = 2.0 * gk * packed[2 * k + 1];
        }
        plan->RealAdjoint(dpacked.data(), dframe.data());
        double* dst = gr.data() + static_cast<int64_t>(f) * n;
        for (int i = 0; i < n; ++i) dst[i] += dframe[i];
      }
    };
  }
  return Tensor(this, id);
}

Tensor Tape::PsdDb(Tensor power, double add_db, double floor) {
  if (floor <= 0.0) throw std::invalid_argument("psd_db: floor must be > 0");
  int id = NewNode(power.shape(), "psd_db", power.requires_grad());
  Node& out = nodes_[id];
  auto pv = ValuesOf(power.id_);
  for (int64_t i = 0; i < out.size; ++i) {
    double p = pv[i] > floor ? pv[i] : floor;
    out.storage[i] = 10.0 * std::log10(p) + add_db;
  }
  CheckFinite(id);
  if (out.requires_grad) {
    out.backward = [id, pid = power.id_, floor](Tape& t) {
      auto g = t.GradOf(id);
      auto pv = t.ValuesOf(pid);
      auto gp = t.GradOf(pid);
      for (size_t i = 0; i < g.size(); ++i) {
        if (pv[i] > floor) gp[i] += g[i] * kDbPerNat / pv[i];
      }
    };
  }
  return Tensor(this, id);
}

Tensor Tape::MatmulNT(Tensor a, Tensor b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 ||
      a.shape()[1] != b.shape()[1]) {
    throw std::invalid_argument("matmul_nt: inner dimension mismatch");
  }
  int m = a.shape()[0], n = b.shape()[0], k = a.shape()[1];
  int id = NewNode({m, n}, "matmul_nt",
                   a.requires_grad() || b.requires_grad());
  Node& out = nodes_[id];
  kernels::MatmulNT(ValuesOf(a.id_).data(), ValuesOf(b.id_).data(),
                    out.storage.data(), m, n, k);
  CheckFinite(id);
  if (out.requires_grad) {
    out.backward = [id, aid = a.id_, bid = b.id_, m, n, k,
                    ar = a.requires_grad(), br = b.requires_grad()](Tape& t) {
      auto g = t.GradOf(id);
      if (ar) {
        kernels::MatmulNN(g.data(), t.ValuesOf(bid).data(),
                          t.GradOf(aid).data(), m, k, n);
      }
      if (br) {
        kernels::MatmulTN(g.data(), t.ValuesOf(aid).data(),
                          t.GradOf(bid).data(), n, k, m);
      }
    };
  }
  return Tensor(this, id);
}

Tensor Tape::AddBias(Tensor rows, Tensor bias) {
  if (rows.shape().size() != 2 || bias.shape().size() != 1 ||
      rows.shape()[1] != bias.shape()[0]) {
    throw std::invalid_argument("add_bias: width mismatch");
  }
  int m = rows.shape()[0], n = rows.shape()[1];
  int id = NewNode(rows.shape(), "add_bias",
                   rows.requires_grad() || bias.requires_grad());
  Node& out = nodes_[id];
  auto rv = ValuesOf(rows.id_);
  auto bv = ValuesOf(bias.id_);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      out.storage[static_cast<int64_t>(i) * n + j] =
          rv[static_cast<int64_t>(i) * n + j] + bv[j];
    }
  }
  CheckFinite(id);
  if (out.requires_grad) {
    out.backward = [id, rid = rows.id_, bid = bias.id_, m, n,
                    rr = rows.requires_grad(),
                    br = bias.requires_grad()](Tape& t) {
      auto g = t.GradOf(id);
      if (rr) {
        auto gr = t.GradOf(rid);
        for (size_t i = 0; i < g.size(); ++i) gr[i] += g[i];
      }
      if (br) {
        auto gb = t.GradOf(bid);
        for (int i = 0; i < m; ++i) {
          for (int j = 0; j < n; ++j)
            gb[j] += g[static_cast<int64_t>(i) * n + j];
        }
      }
    };
  }
  return Tensor(this, id);
}

Tensor Tape::Splice(Tensor rows, std::span<const int> offsets) {
  if (rows.shape().size() != 2 || offsets.empty()) {
    throw std::invalid_argument("splice: need 2-D rows and offsets");
  }
  int t_in = rows.shape()[0], c = rows.shape()[1];
  int min_off = offsets[0], max_off = offsets[0];
  for (int o : offsets) {
    min_off = std::min(min_off, o);
    max_off = std::max(max_off, o);
  }
  int t_out = t_in - (max_off - min_off);
  if (t_out < 1) {
    throw std::invalid_argument(
        StrCat("splice: ", t_in, " rows too few for context span ",
               max_off - min_off + 1));
  }
  int w = static_cast<int>(offsets.size());
  int id = NewNode({t_out, c * w}, "splice", rows.requires_grad());
  Node& out = nodes_[id];
  auto rv = ValuesOf(rows.id_);
  for (int t = 0; t < t_out; ++t) {
    for (int o = 0; o < w; ++o) {
      const double* src =
          rv.data() + static_cast<int64_t>(t + offsets[o] - min_off) * c;
      double* dst =
          out.storage.data() + (static_cast<int64_t>(t) * w + o) * c;
      for (int j = 0; j < c; ++j) dst[j] = src[j];
    }
  }
  CheckFinite(id);
  if (out.requires_grad) {
    std::vector<int> offs(offsets.begin(), offsets.end());
    out.backward = [id, rid = rows.id_, offs = std::move(offs), t_out, c,
                    min_off](Tape& t) {
      auto g = t.GradOf(id);
      auto gr = t.GradOf(rid);
      int w = static_cast<int>(offs.size());
      for (int f = 0; f < t_out; ++f) {
        for (int o = 0; o < w; ++o) {
          const double* src = g.data() + (static_cast<int64_t>(f) * w + o) * c;
          double* dst =
              gr.data() + static_cast<int64_t>(f + offs[o] - min_off) * c;
          for (int j = 0; j < c; ++j) dst[j] += src[j];
        }
      }
    };
  }
  return Tensor(this, id);
}

Tensor Tape::BatchNorm(Tensor rows, Tensor gamma, Tensor beta,
                       std::span<double> running_mean,
                       std::span<double> running_var, bool training,
                       double eps, double momentum) {
  if (rows.shape().size() != 2) {
    throw std::invalid_argument("batchnorm: rows must be 2-D");
  }
  int t_rows = rows.shape()[0], c = rows.shape()[1];
  if (gamma.size() != c || beta.size() != c ||
      static_cast<int>(running_mean.size()) != c ||
      static_cast<int>(running_var.size()) != c) {
    throw std::invalid_argument("batchnorm: channel count mismatch");
  }
  if (training && t_rows < 2) {
    throw std::invalid_argument(
        "batchnorm: training mode needs at least 2 rows");
  }
  bool any_grad =
      rows.requires_grad() || gamma.requires_grad() || beta.requires_grad();
  int id = NewNode(rows.shape(), "batchnorm", any_grad);
  Node& out = nodes_[id];
  auto rv = ValuesOf(rows.id_);
  auto gv = ValuesOf(gamma.id_);
  auto bv = ValuesOf(beta.id_);

  std::vector<double> invstd(c);
  std::vector<double> xhat(static_cast<size_t>(t_rows) * c);
  if (training) {
    std::vector<double> mean(c, 0.0), var(c, 0.0);
    for (int t = 0; t < t_rows; ++t) {
      for (int j = 0; j < c; ++j) mean[j] += rv[static_cast<int64_t>(t) * c + j];
    }
    for (int j = 0; j < c; ++j) mean[j] /= t_rows;
    for (int t = 0; t < t_rows; ++t) {
      for (int j = 0; j < c; ++j) {
        double d = rv[static_cast<int64_t>(t) * c + j] - mean[j];
        var[j] += d * d;
      }
    }
    for (int j = 0; j < c; ++j) var[j] /= t_rows;
    for (int j = 0; j < c; ++j) invstd[j] = 1.0 / std::sqrt(var[j] + eps);
    for (int t = 0; t < t_rows; ++t) {
      for (int j = 0; j < c; ++j) {
        int64_t i = static_cast<int64_t>(t) * c + j;
        xhat[i] = (rv[i] - mean[j]) * invstd[j];
        out.storage[i] = gv[j] * xhat[i] + bv[j];
      }
    }
    double unbias = static_cast<double>(t_rows) / (t_rows - 1);
    for (int j = 0; j < c; ++j) {
      running_mean[j] =
          (1.0 - momentum) * running_mean[j] + momentum * mean[j];
      running_var[j] =
          (1.0 - momentum) * running_var[j] + momentum * var[j] * unbias;
    }
  } else {
    for (int j = 0; j < c; ++j)
      invstd[j] = 1.0 / std::sqrt(running_var[j] + eps);
    for (int t = 0; t < t_rows; ++t) {
      for (int j = 0; j < c; ++j) {
        int64_t i = static_cast<int64_t>(t) * c + j;
        xhat[i] = (rv[i] - running_mean[j]) * invstd[j];
        out.storage[i] = gv[j] * xhat[i] + bv[j];
      }
    }
  }
  CheckFinite(id);
  if (out.requires_grad) {
    out.backward = [id, rid = rows.id_, gid = gamma.id_, bid = beta.id_,
                    t_rows, c, training, invstd = std::move(invstd),
                    xhat = std::move(xhat), rr = rows.requires_grad(),
                    gr_ = gamma.requires_grad(),
                    br = beta.requires_grad()](Tape& t) {
      auto g = t.GradOf(id);
      auto gv = t.ValuesOf(gid);
      if (gr_) {
        auto gg = t.GradOf(gid);
        for (int f = 0; f < t_rows; ++f) {
          for (int j = 0; j < c; ++j) {
            int64_t i = static_cast<int64_t>(f) * c + j;
            gg[j] += g[i] * xhat[i];
          }
        }
      }
      if (br) {
        auto gb = t.GradOf(bid);
        for (int f = 0; f < t_rows; ++f) {
          for (int j = 0; j < c; ++j) gb[j] += g[static_cast<int64_t>(f) * c + j];
        }
      }
      if (!rr) return;
      auto gx = t.GradOf(rid);
      if (training) {
        // dx = invstd * (dxhat - mean(dxhat) - xhat * mean(dxhat * xhat))
        std::vector<double> m1(c, 0.0), m2(c, 0.0);
        for (int f = 0; f < t_rows; ++f) {
          for (int j = 0; j < c; ++j) {
            int64_t i = static_cast<int64_t>(f) * c + j;
            double dxh = g[i] * gv[j];
            m1[j] += dxh;
            m2[j] += dxh * xhat[i];
          }
        }
        for (int j = 0; j < c; ++j) {
          m1[j] /= t_rows;
          m2[j] /= t_rows;
        }
        for (int f = 0; f < t_rows; ++f) {
          for (int j = 0; j < c; ++j) {
            int64_t i = static_cast<int64_t>(f) * c + j;
            double dxh = g[i] * gv[j];
            gx[i] += invstd[j] * (dxh - m1[j] - xhat[i] * m2[j]);
          }
        }
      } else {
        for (int f = 0; f < t_rows; ++f) {
          for (int j = 0; j < c; ++j) {
            int64_t i = static_cast<int64_t>(f) * c + j;
            gx[i] += g[i] * gv[j] * invstd[j];
          }
        }
      }
    };
  }
  return Tensor(this, id);
}

Tensor Tape::StatsPool(Tensor rows, double var_eps) {
  if (rows.shape().size() != 2) {
    throw std::invalid_argument("stats_pool: rows must be 2-D");
  }
  int t_rows = rows.shape()[0], c = rows.shape()[1];
  int id = NewNode({2 * c}, "stats_pool", rows.requires_grad());
  Node& out = nodes_[id];
  auto rv = ValuesOf(rows.id_);
  std::vector<double> mean(c, 0.0), std(c, 0.0);
  for (int t = 0; t < t_rows; ++t) {
    for (int j = 0; j < c; ++j) mean[j] += rv[static_cast<int64_t>(t) * c + j];
  }
  for (int j = 0; j < c; ++j) mean[j] /= t_rows;
  for (int t = 0; t < t_rows; ++t) {
    for (int j = 0; j < c; ++j) {
      double d = rv[static_cast<int64_t>(t) * c + j] - mean[j];
      std[j] += d * d;
    }
  }
  for (int j = 0; j < c; ++j) std[j] = std::sqrt(std[j] / t_rows + var_eps);
  for (int j = 0; j < c; ++j) {
    out.storage[j] = mean[j];
    out.storage[c + j] = std[j];
  }
  CheckFinite(id);
  if (out.requires_grad) {
    out.backward = [id, rid = rows.id_, t_rows, c, mean = std::move(mean),
                    std = std::move(std)](Tape& t) {
      auto g = t.GradOf(id);
      auto rv = t.ValuesOf(rid);
      auto gx = t.GradOf(rid);
      for (int f = 0; f < t_rows; ++f) {
        for (int j = 0; j < c; ++j) {
          int64_t i = static_cast<int64_t>(f) * c + j;
          double centered = rv[i] - mean[j];
          gx[i] += g[j] / t_rows +
                   g[c + j] * centered / (t_rows * std[j]);
        }
      }
    };
  }
  return Tensor(this, id);
}

Tensor Tape::ConcatRows(std::span<const Tensor> rows) {
  if (rows.empty()) throw std::invalid_argument("concat_rows: no inputs");
  auto width_of = [](const Tensor& r) {
    return r.shape().size() == 2 ? static_cast<int64_t>(r.shape()[1]) : r.size();
  };
  auto rows_of = [](const Tensor& r) {
    return r.shape().size() == 2 ? static_cast<int64_t>(r.shape()[0])
                                 : static_cast<int64_t>(1);
  };
  int64_t width = width_of(rows[0]);
  int64_t total_rows = 0;
  bool any_grad = false;
  for (const Tensor& r : rows) {
    if (width_of(r) != width) {
      throw std::invalid_argument("concat_rows: width mismatch");
    }
    total_rows += rows_of(r);
    any_grad = any_grad || r.requires_grad();
  }
  int id = NewNode({static_cast<int>(total_rows), static_cast<int>(width)},
                   "concat_rows", any_grad);
  Node& out = nodes_[id];
  std::vector<int> ids;
  std::vector<char> wants;
  ids.reserve(rows.size());
  int64_t offset = 0;
  for (const Tensor& r : rows) {
    auto rv = ValuesOf(r.id_);
    std::copy(rv.begin(), rv.end(), out.storage.begin() + offset);
    offset += r.size();
    ids.push_back(r.id_);
    wants.push_back(r.requires_grad() ? 1 : 0);
  }
  CheckFinite(id);
  if (out.requires_grad) {
    out.backward = [id, ids = std::move(ids), wants = std::move(wants)](Tape& t) {
      auto g = t.GradOf(id);
      int64_t offset = 0;
      for (size_t r = 0; r < ids.size(); ++r) {
        int64_t count = t.nodes_[ids[r]].size;
        if (wants[r]) {
          auto gr = t.GradOf(ids[r]);
          const double* src = g.data() + offset;
          for (int64_t j = 0; j < count; ++j) gr[j] += src[j];
        }
        offset += count;
      }
    };
  }
  return Tensor(this, id);
}

Tensor Tape::Rows(Tensor a, int begin, int count) {
  if (a.shape().size() != 2 || begin < 0 || count < 1 ||
      begin + count > a.shape()[0]) {
    throw std::invalid_argument("rows: slice out of range");
  }
  int n = a.shape()[1];
  int id = NewNode({count, n}, "rows", a.requires_grad());
  Node& out = nodes_[id];
  auto av = ValuesOf(a.id_);
  std::copy(av.begin() + static_cast<int64_t>(begin) * n,
            av.begin() + static_cast<int64_t>(begin + count) * n,
            out.storage.begin());
  CheckFinite(id);
  if (out.requires_grad) {
    out.backward = [id, aid = a.id_, begin, count, n](Tape& t) {
      auto g = t.GradOf(id);
      auto ga = t.GradOf(aid);
      double* dst = ga.data() + static_cast<int64_t>(begin) * n;
      for (int64_t j = 0; j < static_cast<int64_t>(count) * n; ++j) {
        dst[j] += g[j];
      }
    };
  }
  return Tensor(this, id);
}

Tensor Tape::Row(Tensor a, int r) {
  if (a.shape().size() != 2 || r < 0 || r >= a.shape()[0]) {
    throw std::invalid_argument("row: index out of range");
  }
  int n = a.shape()[1];
  int id = NewNode({n}, "row", a.requires_grad());
  Node& out = nodes_[id];
  auto av = ValuesOf(a.id_);
  std::copy(av.begin() + static_cast<int64_t>(r) * n,
            av.begin() + static_cast<int64_t>(r + 1) * n, out.storage.begin());
  CheckFinite(id);
  if (out.requires_grad) {
    out.backward = [id, aid = a.id_, r, n](Tape& t) {
      auto g = t.GradOf(id);
      auto ga = t.GradOf(aid);
      double* dst = ga.data() + static_cast<int64_t>(r) * n;
      for (int j = 0; j < n; ++j) dst[j] += g[j];
    };
  }
  return Tensor(this, id);
}

Tensor Tape::Softmax(Tensor logits) {
  if (logits.shape().size() != 1) {
    throw std::invalid_argument("softmax: input must be 1-D");
  }
  int id = NewNode(logits.shape(), "softmax", logits.requires_grad());
  Node& out = nodes_[id];
  auto lv = ValuesOf(logits.id_);
  double max = lv[0];
  for (double v : lv) max = std::max(max, v);
  double sum = 0.0;
  for (int64_t i = 0; i < out.size; ++i) {
    out.storage[i] = std::exp(lv[i] - max);
    sum += out.storage[i];
  }
  for (int64_t i = 0; i < out.size; ++i) out.storage[i] /= sum;
  CheckFinite(id);
  if (out.requires_grad) {
    out.backward = [id, lid = logits.id_](Tape& t) {
      auto g = t.GradOf(id);
      auto y = t.ValuesOf(id);
      auto gl = t.GradOf(lid);
      double dot = 0.0;
      for (size_t i = 0; i < g.size(); ++i) dot += g[i] * y[i];
      for (size_t i = 0; i < g.size(); ++i) gl[i] += y[i] * (g[i] - dot);
    };
  }
  return Tensor(this, id);
}

Tensor Tape::CrossEntropyLogits(Tensor logits, int target) {
  if (logits.shape().size() != 1 || target < 0 ||
      target >= logits.shape()[0]) {
    throw std::invalid_argument("cross_entropy_logits: target out of range");
  }
  int id = NewNode({1}, "cross_entropy_logits", logits.requires_grad());
  Node& out = nodes_[id];
  auto lv = ValuesOf(logits.id_);
  double max = lv[0];
  for (double v : lv) max = std::max(max, v);
  double sum = 0.0;
  for (double v : lv) sum += std::exp(v - max);
  out.storage[0] = max + std::log(sum) - lv[target];
  CheckFinite(id);
  if (out.requires_grad) {
    out.backward = [id, lid = logits.id_, target](Tape& t) {
      double g = t.GradOf(id)[0];
      auto lv = t.ValuesOf(lid);
      auto gl = t.GradOf(lid);
      double max = lv[0];
      for (double v : lv) max = std::max(max, v);
      double sum = 0.0;
      for (double v : lv) sum += std::exp(v - max);
      for (size_t i = 0; i < lv.size(); ++i) {
        double p = std::exp(lv[i] - max) / sum;
        gl[i] += g * (p - (static_cast<int>(i) == target ? 1.0 : 0.0));
      }
    };
  }
  return Tensor(this, id);
}

void Tape::Backward(Tensor loss) {
  if (loss.tape_ != this) {
    throw std::invalid_argument("backward: tensor belongs to another tape");
  }
  Node& ln = nodes_[loss.id_];
  if (ln.size != 1) {
    throw std::invalid_argument("backward: loss must be a scalar");
  }
  if (!ln.requires_grad) {
    throw std::invalid_argument(
        "backward: loss does not depend on a differentiable leaf");
  }
  GradOf(loss.id_)[0] += 1.0;
  for (int id = loss.id_; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.empty()) continue;
    for (double v : n.grad) {
      if (!std::isfinite(v)) {
        throw std::runtime_error(
            StrCat("backward: non-finite gradient at op '", n.op, "'"));
      }
    }
    if (n.backward) n.backward(*this);
  }
  for (int id = 0; id <= loss.id_; ++id) {
    Node& n = nodes_[id];
    if (n.grad_sink != nullptr && !n.grad.empty()) {
      for (int64_t i = 0; i < n.size; ++i) n.grad_sink[i] += n.grad[i];
    }
  }
}

}  // namespace psyadv
