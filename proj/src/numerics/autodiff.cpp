/*
 * Copyright 2026 The EDS Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "eds/numerics/autodiff.hpp"

#include <cmath>
#include <memory>
#include <numbers>

#include "eds/errors.hpp"

namespace eds {

namespace {

constexpr double kLn2 = std::numbers::ln2;

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shapes " + shape_string(a.shape()) +
                     " and " + shape_string(b.shape()) + " differ");
  }
}

Tape& common_tape(Var a, Var b) {
  if (!a.valid() || !b.valid()) throw StateError("use of an unrecorded Var");
  if (&a.tape() != &b.tape()) throw StateError("Vars from different tapes");
  return a.tape();
}

void accumulate(Tape& t, std::size_t id, const Eigen::Ref<const Eigen::VectorXd>& g) {
  if (t.requires_grad(id)) t.accumulate(id, g);
}

}  // namespace

Tape& Var::tape() const {
  if (!tape_) throw StateError("Var is not attached to a tape");
  return *tape_;
}

const Tensor& Var::value() const { return tape().value(id_); }

Tensor Var::grad() const {
  const Tape& t = tape();
  if (t.has_grad(id_)) return t.grad(id_);
  return Tensor(t.value(id_).shape());
}

Var Tape::variable(Tensor value) {
  nodes_.push_back({std::move(value), {}, {}, {}, true});
  return {this, nodes_.size() - 1};
}

Var Tape::constant(Tensor value) {
  nodes_.push_back({std::move(value), {}, {}, {}, false});
  return {this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::vector<std::size_t> parents, BackwardFn fn) {
  bool needs = false;
  for (std::size_t p : parents) needs = needs || nodes_[p].requires_grad;
  Node node{std::move(value), {}, {}, {}, needs};
  if (needs) {
    node.parents = std::move(parents);
    node.backward = std::move(fn);
  }
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

Tensor& Tape::grad_accumulator(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.size() != n.value.size()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

void Tape::accumulate(std::size_t id, const Eigen::Ref<const Eigen::VectorXd>& g) {
  Node& n = nodes_[id];
  if (n.grad.size() != n.value.size()) {
    n.grad = Tensor(n.value.shape(), g);
  } else {
    n.grad.values() += g;
  }
}

void Tape::backward(Var root) {
  if (!root.valid() || &root.tape() != this || root.id() >= nodes_.size()) {
    throw StateError("backward called without a recorded forward pass");
  }
  if (nodes_[root.id()].value.size() != 1) {
    throw ShapeError("backward root must hold a single value, got " +
                     shape_string(nodes_[root.id()].value.shape()));
  }
  for (Node& n : nodes_) n.grad = Tensor();
  grad_accumulator(root.id())[0] = 1.0;
  for (std::size_t id = root.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (n.backward && n.grad.size() > 0) n.backward(*this, id);
  }
}

void Tape::clear() { nodes_.clear(); }

Var add(Var a, Var b) {
  Tape& t = common_tape(a, b);
  require_same_shape(a.value(), b.value(), "add");
  Tensor out(a.value().shape(), a.value().values() + b.value().values());
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    const auto& g = tp.grad(self).values();
    accumulate(tp, ia, g);
    accumulate(tp, ib, g);
  });
}

Var sub(Var a, Var b) {
  Tape& t = common_tape(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out(a.value().shape(), a.value().values() - b.value().values());
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    const auto& g = tp.grad(self).values();
    accumulate(tp, ia, g);
    accumulate(tp, ib, -g);
  });
}

Var mul(Var a, Var b) {
  Tape& t = common_tape(a, b);
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out(a.value().shape(),
             a.value().values().cwiseProduct(b.value().values()));
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    const auto& g = tp.grad(self).values();
    accumulate(tp, ia, g.cwiseProduct(tp.value(ib).values()));
    accumulate(tp, ib, g.cwiseProduct(tp.value(ia).values()));
  });
}

Var scale(Var a, double factor) {
  Tape& t = a.tape();
  Tensor out(a.value().shape(), a.value().values() * factor);
  const std::size_t ia = a.id();
  return t.record(std::move(out), {ia}, [ia, factor](Tape& tp, std::size_t self) {
    accumulate(tp, ia, tp.grad(self).values() * factor);
  });
}

Var square(Var a) { return mul(a, a); }

Var relu(Var a) {
  Tape& t = a.tape();
  Tensor out(a.value().shape(), a.value().values().cwiseMax(0.0));
  const std::size_t ia = a.id();
  return t.record(std::move(out), {ia}, [ia](Tape& tp, std::size_t self) {
    const auto& x = tp.value(ia).values();
    const auto& g = tp.grad(self).values();
    accumulate(tp, ia, (x.array() > 0.0).select(g.array(), 0.0).matrix());
  });
}

Var sigmoid(Var a) {
  Tape& t = a.tape();
  Eigen::VectorXd s =
      (1.0 / (1.0 + (-a.value().values().array()).exp())).matrix();
  Tensor out(a.value().shape(), s);
  const std::size_t ia = a.id();
  return t.record(std::move(out), {ia}, [ia](Tape& tp, std::size_t self) {
    const auto& y = tp.value(self).values().array();
    accumulate(tp, ia, (tp.grad(self).values().array() * y * (1.0 - y)).matrix());
  });
}

Var sum(Var a) {
  Tape& t = a.tape();
  const std::size_t ia = a.id();
  return t.record(Tensor::scalar(a.value().values().sum()), {ia},
                  [ia](Tape& tp, std::size_t self) {
                    const double g = tp.grad(self)[0];
                    if (tp.requires_grad(ia)) {
                      tp.grad_accumulator(ia).values().array() += g;
                    }
                  });
}

Var matmul(Var a, Var b) {
  Tape& t = common_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() < 1 || bv.rank() != 2) {
    throw ShapeError("matmul expects a rank>=1 left operand and a matrix");
  }
  const Index rows = av.dim(0);
  const Index inner = bv.dim(0);
  const Index cols = bv.dim(1);
  if (rows == 0 || av.size() != rows * inner) {
    throw ShapeError("matmul: " + shape_string(av.shape()) + " x " +
                     shape_string(bv.shape()));
  }
  Tensor out = Tensor::uninitialized({rows, cols});
  out.matrix(rows).noalias() = av.matrix(rows) * bv.matrix(inner);
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), {ia, ib},
                  [ia, ib, rows, inner](Tape& tp, std::size_t self) {
                    const auto g = tp.grad(self).matrix(rows);
                    if (tp.requires_grad(ia)) {
                      tp.grad_accumulator(ia).matrix(rows).noalias() +=
                          g * tp.value(ib).matrix(inner).transpose();
                    }
                    if (tp.requires_grad(ib)) {
                      tp.grad_accumulator(ib).matrix(inner).noalias() +=
                          tp.value(ia).matrix(rows).transpose() * g;
                    }
                  });
}

Var add_bias(Var x, Var bias) {
  Tape& t = common_tape(x, bias);
  const Tensor& xv = x.value();
  const Index width = bias.value().size();
  if (xv.rank() < 1 || xv.shape().back() != width) {
    throw ShapeError("add_bias: bias of " + std::to_string(width) +
                     " values for input " + shape_string(xv.shape()));
  }
  const Index rows = xv.size() / width;
  Tensor out = xv;
  out.matrix(rows).rowwise() += bias.value().values().transpose();
  const std::size_t ix = x.id(), ib = bias.id();
  return t.record(std::move(out), {ix, ib},
                  [ix, ib, rows](Tape& tp, std::size_t self) {
                    const auto g = tp.grad(self).matrix(rows);
                    accumulate(tp, ix, tp.grad(self).values());
                    if (tp.requires_grad(ib)) {
                      tp.grad_accumulator(ib).values() +=
                          g.colwise().sum().transpose();
                    }
                  });
}

Var flatten(Var x) {
  Tape& t = x.tape();
  const Tensor& xv = x.value();
  const Index n = xv.dim(0);
  Tensor out = xv.reshaped({n, n == 0 ? 0 : xv.size() / n});
  const std::size_t ix = x.id();
  return t.record(std::move(out), {ix}, [ix](Tape& tp, std::size_t self) {
    accumulate(tp, ix, tp.grad(self).values());
  });
}

namespace {

// Output channels as a compile-time count (0: runtime) so the per-pixel
// accumulator lives in registers.
template <int C>
void single_channel_forward(const Tensor& xv, const Tensor& weight, const Tensor& bias, Index kh,
                            Index kw, Tensor& out) {
  const Index n = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
  const Index cout = C > 0 ? C : weight.dim(3);
  const Index oh = h - kh + 1, ow = w - kw + 1, taps = kh * kw;
  constexpr int K = C > 0 ? C : Eigen::Dynamic;
  using Row = Eigen::Matrix<double, 1, K>;
  const Eigen::Matrix<double, Eigen::Dynamic, K, Eigen::RowMajor> wt =
      weight.matrix(taps);
  const Row bs = bias.values().transpose();
  Row acc(cout);
  double* o = out.data();
  for (Index img = 0; img < n; ++img) {
    for (Index oy = 0; oy < oh; ++oy) {
      const double* base = xv.data() + (img * h + oy) * w;
      for (Index ox = 0; ox < ow; ++ox, o += cout) {
        acc = bs;
        for (Index ky = 0; ky < kh; ++ky) {
          for (Index kx = 0; kx < kw; ++kx) {
            acc.noalias() += base[ky * w + ox + kx] * wt.row(ky * kw + kx);
          }
        }
        Eigen::Map<Row>(o, cout) = acc;
      }
    }
  }
}

// dw and dx may each be null when that gradient is not wanted.
template <int C>
void single_channel_backward(const Tensor& xv, const Tensor& weight, const Tensor& g, Index kh,
                             Index kw, double* dw, double* dx) {
  const Index n = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
  const Index cout = C > 0 ? C : weight.dim(3);
  const Index oh = h - kh + 1, ow = w - kw + 1, taps = kh * kw;
  constexpr int K = C > 0 ? C : Eigen::Dynamic;
  using Row = Eigen::Matrix<double, 1, K>;
  using Rows = Eigen::Matrix<double, Eigen::Dynamic, K, Eigen::RowMajor>;
  const Rows wt = weight.matrix(taps);
  Rows dwl = Rows::Zero(taps, cout);
  const double* in = xv.data();
  const double* go = g.data();
  for (Index img = 0; img < n; ++img) {
    for (Index oy = 0; oy < oh; ++oy) {
      const Index row0 = (img * h + oy) * w;
      for (Index ox = 0; ox < ow; ++ox, go += cout) {
        const Eigen::Map<const Row> gr(go, cout);
        for (Index ky = 0; ky < kh; ++ky) {
          for (Index kx = 0; kx < kw; ++kx) {
            const Index k = ky * kw + kx;
            const Index at = row0 + ky * w + ox + kx;
            if (dw) dwl.row(k).noalias() += in[at] * gr;
            if (dx) dx[at] += gr.dot(wt.row(k));
          }
        }
      }
    }
  }
  if (dw) Eigen::Map<Rows>(dw, taps, cout) += dwl;
}

// Single input channel: each output pixel accumulates kh*kw broadcast
// multiply-adds into its cout outputs. An im2col matrix for a patch this small
// costs more in memory traffic than the arithmetic it feeds.
Var conv2d_single_channel(Var x, Var weight, Var bias, Index kh, Index kw) {
  Tape& t = x.tape();
  const Tensor& xv = x.value();
  const Index n = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
  const Index cout = weight.value().dim(3);
  const Index oh = h - kh + 1, ow = w - kw + 1, taps = kh * kw;

  Tensor out = Tensor::uninitialized({n, oh, ow, cout});
  switch (cout) {
    case 4: single_channel_forward<4>(xv, weight.value(), bias.value(), kh, kw, out); break;
    case 8: single_channel_forward<8>(xv, weight.value(), bias.value(), kh, kw, out); break;
    case 16: single_channel_forward<16>(xv, weight.value(), bias.value(), kh, kw, out); break;
    default: single_channel_forward<0>(xv, weight.value(), bias.value(), kh, kw, out);
  }

  const std::size_t ix = x.id(), iw = weight.id(), ib = bias.id();
  return t.record(std::move(out), {ix, iw, ib}, [=](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    if (tp.requires_grad(ib)) {
      tp.grad_accumulator(ib).values() += g.matrix(n * oh * ow).colwise().sum().transpose();
    }
    const bool need_w = tp.requires_grad(iw), need_x = tp.requires_grad(ix);
    if (!need_w && !need_x) return;
    const Tensor& xin = tp.value(ix);
    const Tensor& wk = tp.value(iw);
    RowMatrixXd dw = RowMatrixXd::Zero(taps, cout);
    double* dx = need_x ? tp.grad_accumulator(ix).data() : nullptr;
    double* dwp = need_w ? dw.data() : nullptr;
    switch (cout) {
      case 4: single_channel_backward<4>(xin, wk, g, kh, kw, dwp, dx); break;
      case 8: single_channel_backward<8>(xin, wk, g, kh, kw, dwp, dx); break;
      case 16: single_channel_backward<16>(xin, wk, g, kh, kw, dwp, dx); break;
      default: single_channel_backward<0>(xin, wk, g, kh, kw, dwp, dx);
    }
    if (need_w) tp.grad_accumulator(iw).matrix(taps) += dw;
  });
}

}  // namespace

Var conv2d(Var x, Var weight, Var bias) {
  Tape& t = common_tape(x, weight);
  const Tensor& xv = x.value();
  const Tensor& wv = weight.value();
  if (xv.rank() != 4 || wv.rank() != 4) {
    throw ShapeError("conv2d expects (n,h,w,c) input and (kh,kw,cin,cout) kernel");
  }
  const Index n = xv.dim(0), h = xv.dim(1), w = xv.dim(2), c = xv.dim(3);
  const Index kh = wv.dim(0), kw = wv.dim(1), cout = wv.dim(3);
  if (wv.dim(2) != c || kh > h || kw > w || bias.value().size() != cout) {
    throw ShapeError("conv2d: kernel " + shape_string(wv.shape()) +
                     " incompatible with input " + shape_string(xv.shape()));
  }
  const Index oh = h - kh + 1, ow = w - kw + 1;
  const Index patch = kh * kw * c;
  const Index rows = n * oh * ow;
  const Index span = kw * c;
  if (c == 1) return conv2d_single_channel(x, weight, bias, kh, kw);

  auto cols = std::make_shared<RowMatrixXd>(rows, patch);
  const double* src = xv.data();
  for (Index b = 0; b < n; ++b) {
    for (Index oy = 0; oy < oh; ++oy) {
      for (Index ox = 0; ox < ow; ++ox) {
        double* dst = cols->data() + ((b * oh + oy) * ow + ox) * patch;
        for (Index ky = 0; ky < kh; ++ky) {
          const double* row = src + ((b * h + oy + ky) * w + ox) * c;
          std::copy(row, row + span, dst + ky * span);
        }
      }
    }
  }

  Tensor out = Tensor::uninitialized({n, oh, ow, cout});
  auto om = out.matrix(rows);
  om.noalias() = *cols * wv.matrix(patch);
  om.rowwise() += bias.value().values().transpose();

  const std::size_t ix = x.id(), iw = weight.id(), ib = bias.id();
  return t.record(
      std::move(out), {ix, iw, ib},
      [=](Tape& tp, std::size_t self) {
        const auto g = tp.grad(self).matrix(rows);
        if (tp.requires_grad(iw)) {
          tp.grad_accumulator(iw).matrix(patch).noalias() += cols->transpose() * g;
        }
        if (tp.requires_grad(ib)) {
          tp.grad_accumulator(ib).values() += g.colwise().sum().transpose();
        }
        if (tp.requires_grad(ix)) {
          RowMatrixXd dcols = g * tp.value(iw).matrix(patch).transpose();
          double* dx = tp.grad_accumulator(ix).data();
          for (Index b = 0; b < n; ++b) {
            for (Index oy = 0; oy < oh; ++oy) {
              for (Index ox = 0; ox < ow; ++ox) {
                const double* s = dcols.data() + ((b * oh + oy) * ow + ox) * patch;
                for (Index ky = 0; ky < kh; ++ky) {
                  double* row = dx + ((b * h + oy + ky) * w + ox) * c;
                  const double* sp = s + ky * span;
                  for (Index j = 0; j < span; ++j) row[j] += sp[j];
                }
              }
            }
          }
        }
      });
}

Var max_pool2d(Var x, Index window) {
  Tape& t = x.tape();
  const Tensor& xv = x.value();
  if (xv.rank() != 4 || window < 1) {
    throw ShapeError("max_pool2d expects (n,h,w,c) input");
  }
  const Index n = xv.dim(0), h = xv.dim(1), w = xv.dim(2), c = xv.dim(3);
  const Index oh = h / window, ow = w / window;
  if (oh == 0 || ow == 0) {
    throw ShapeError("max_pool2d: window " + std::to_string(window) +
                     " larger than input " + shape_string(xv.shape()));
  }
  Tensor out = Tensor::uninitialized({n, oh, ow, c});
  auto argmax = std::make_shared<std::vector<Index>>(static_cast<std::size_t>(out.size()));
  const double* src = xv.data();
  double* dst = out.data();
  Index* arg = argmax->data();
  const Index row_stride = w * c;
  for (Index b = 0; b < n; ++b) {
    for (Index oy = 0; oy < oh; ++oy) {
      const Index top = (b * h + oy * window) * row_stride;
      for (Index ox = 0; ox < ow; ++ox) {
        const Index corner = top + ox * window * c;
        // Scan the window in row-major order; the first maximum wins.
        for (Index ch = 0; ch < c; ++ch) {
          dst[ch] = src[corner + ch];
          arg[ch] = corner + ch;
        }
        for (Index dy = 0; dy < window; ++dy) {
          for (Index dx = 0; dx < window; ++dx) {
            const Index at = corner + dy * row_stride + dx * c;
            for (Index ch = 0; ch < c; ++ch) {
              if (src[at + ch] > dst[ch]) {
                dst[ch] = src[at + ch];
                arg[ch] = at + ch;
              }
            }
          }
        }
        dst += c;
        arg += c;
      }
    }
  }
  const std::size_t ix = x.id();
  return t.record(std::move(out), {ix}, [ix, argmax](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(ix)) return;
    const Tensor& g = tp.grad(self);
    Tensor& dx = tp.grad_accumulator(ix);
    for (Index i = 0; i < g.size(); ++i) {
      dx[(*argmax)[static_cast<std::size_t>(i)]] += g[i];
    }
  });
}

RowMatrixXd softmax_rows(const Eigen::Ref<const RowMatrixXd>& logits) {
  RowMatrixXd p = logits;
  for (Index i = 0; i < p.rows(); ++i) {
    p.row(i).array() -= p.row(i).maxCoeff();
    p.row(i) = p.row(i).array().exp().matrix();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

Var softmax_cross_entropy_bits(Var logits, std::span<const int> labels) {
  Tape& t = logits.tape();
  const Tensor& lv = logits.value();
  if (lv.rank() != 2 || lv.dim(0) != static_cast<Index>(labels.size()) ||
      labels.empty()) {
    throw ShapeError("cross entropy: logits " + shape_string(lv.shape()) +
                     " for " + std::to_string(labels.size()) + " labels");
  }
  const Index n = lv.dim(0), k = lv.dim(1);
  for (int y : labels) {
    if (y < 0 || y >= k) {
      throw DomainError("label " + std::to_string(y) + " outside [0, " +
                        std::to_string(k) + ")");
    }
  }
  const auto z = lv.matrix(n);
  double loss = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double m = z.row(i).maxCoeff();
    const double lse = m + std::log((z.row(i).array() - m).exp().sum());
    loss += (lse - z(i, labels[static_cast<std::size_t>(i)])) / kLn2;
  }
  loss /= static_cast<double>(n);
  std::vector<int> ys(labels.begin(), labels.end());
  const std::size_t il = logits.id();
  return t.record(Tensor::scalar(loss), {il},
                  [il, ys = std::move(ys), n](Tape& tp, std::size_t self) {
                    if (!tp.requires_grad(il)) return;
                    const double g = tp.grad(self)[0];
                    RowMatrixXd p = softmax_rows(tp.value(il).matrix(n));
                    for (Index i = 0; i < n; ++i) p(i, ys[static_cast<std::size_t>(i)]) -= 1.0;
                    tp.grad_accumulator(il).matrix(n) +=
                        p * (g / (kLn2 * static_cast<double>(n)));
                  });
}

Var sigmoid_cross_entropy_bits(Var logits, std::span<const int> targets) {
  Tape& t = logits.tape();
  const Tensor& lv = logits.value();
  const Index n = static_cast<Index>(targets.size());
  if (n == 0 || lv.size() != n) {
    throw ShapeError("binary cross entropy: logits " + shape_string(lv.shape()) +
                     " for " + std::to_string(targets.size()) + " targets");
  }
  double loss = 0.0;
  for (Index i = 0; i < n; ++i) {
    const int y = targets[static_cast<std::size_t>(i)];
    if (y != 0 && y != 1) throw DomainError("binary target must be 0 or 1");
    const double z = lv[i];
    // log(1 + exp(-|z|)) + max(z, 0) - y z, stable for large |z|.
    loss += (std::log1p(std::exp(-std::abs(z))) + std::max(z, 0.0) - y * z) / kLn2;
  }
  loss /= static_cast<double>(n);
  std::vector<int> ys(targets.begin(), targets.end());
  const std::size_t il = logits.id();
  return t.record(Tensor::scalar(loss), {il},
                  [il, ys = std::move(ys), n](Tape& tp, std::size_t self) {
                    if (!tp.requires_grad(il)) return;
                    const double g = tp.grad(self)[0] / (kLn2 * static_cast<double>(n));
                    const Tensor& z = tp.value(il);
                    Tensor& dz = tp.grad_accumulator(il);
                    for (Index i = 0; i < n; ++i) {
                      const double p = 1.0 / (1.0 + std::exp(-z[i]));
                      dz[i] += g * (p - ys[static_cast<std::size_t>(i)]);
                    }
                  });
}

Var pick_sum(Var logits, std::span<const int> columns) {
  Tape& t = logits.tape();
  const Tensor& lv = logits.value();
  const Index n = static_cast<Index>(columns.size());
  if (lv.rank() != 2 || lv.dim(0) != n) {
    throw ShapeError("pick_sum: logits " + shape_string(lv.shape()) + " for " +
                     std::to_string(columns.size()) + " columns");
  }
  const Index k = lv.dim(1);
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    const int col = columns[static_cast<std::size_t>(i)];
    if (col < 0 || col >= k) throw DomainError("pick_sum column out of range");
    total += lv[i * k + col];
  }
  std::vector<int> cs(columns.begin(), columns.end());
  const std::size_t il = logits.id();
  return t.record(Tensor::scalar(total), {il},
                  [il, cs = std::move(cs), k](Tape& tp, std::size_t self) {
                    if (!tp.requires_grad(il)) return;
                    const double g = tp.grad(self)[0];
                    Tensor& dz = tp.grad_accumulator(il);
                    for (std::size_t i = 0; i < cs.size(); ++i) {
                      dz[static_cast<Index>(i) * k + cs[i]] += g;
                    }
                  });
}

}  // namespace eds
