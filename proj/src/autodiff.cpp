#include "loadfc/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "loadfc/error.hpp"
#include "loadfc/kernels.hpp"

namespace loadfc::ad {

using kernels::Trans;

const Tensor& Var::value() const {
  if (!graph) throw GraphError("unbound variable");
  return graph->value(*this);
}

Var Graph::push(Node node) {
  for (std::size_t in : node.inputs)
    if (in >= nodes_.size())
      throw GraphError("operation input does not precede it on the tape");
  if (!record_) node.backward = nullptr;
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Var Graph::constant(Tensor value) {
  return push(Node{"constant", std::move(value), {}, {}, nullptr, nullptr});
}

Var Graph::param(Tensor& p) {
  Tensor value(p.shape(), std::vector<double>(p.data().begin(), p.data().end()));
  return push(Node{"param", std::move(value), {}, {}, nullptr,
                   record_ ? &p : nullptr});
}

Var Graph::record(std::string_view op, Tensor value,
                  std::vector<std::size_t> inputs, Backward backward) {
  return push(Node{op, std::move(value), std::move(inputs), {},
                   std::move(backward), nullptr});
}

std::span<double> Graph::grad_buffer(std::size_t id) {
  Node& n = nodes_.at(id);
  if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
  return n.grad;
}

Tensor Graph::grad(Var v) const {
  const Node& n = nodes_.at(v.id);
  if (n.grad.empty()) return Tensor::zeros(n.value.shape());
  return Tensor(n.value.shape(), n.grad);
}

void Graph::backward(Var loss) {
  if (loss.graph != this) throw GraphError("loss belongs to another graph");
  if (!record_) throw GraphError("graph was built without recording");
  if (differentiated_)
    throw GraphError("backward already ran on this graph; rebuild it");
  if (value(loss).size() != 1)
    throw GraphError("backward needs a scalar loss, got shape " +
                     shape_string(value(loss).shape()));
  differentiated_ = true;
  grad_buffer(loss.id)[0] = 1.0;

  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (n.grad.empty()) continue;
    if (n.param) {
      auto pg = n.param->ensure_grad();
      for (std::size_t i = 0; i < pg.size(); ++i) pg[i] += n.grad[i];
    } else if (n.backward) {
      n.backward(*this, n.grad);
    }
  }
  for (Node& n : nodes_)
    if (n.param) n.param->ensure_grad();
}

namespace {

Graph& same_graph(Var a, Var b) {
  if (!a.graph || a.graph != b.graph)
    throw GraphError("operands belong to different graphs");
  return *a.graph;
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
}

void require_matrix(const char* op, const Tensor& a) {
  if (a.rank() != 2)
    throw DimensionError(std::string(op) + ": expected a matrix, got " +
                         shape_string(a.shape()));
}

}  // namespace

Var matmul(Var a, Var b) {
  Graph& g = same_graph(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out = loadfc::matmul(av, bv);
  const std::size_t m = av.shape()[0], k = av.shape()[1], n = bv.shape()[1];
  return g.record("matmul", std::move(out), {a.id, b.id},
                  [=](Graph& g, std::span<const double> dc) {
                    kernels::gemm(Trans::No, Trans::Yes, m, k, n, dc,
                                  g.value(b).data(), g.grad_buffer(a.id), true);
                    kernels::gemm(Trans::Yes, Trans::No, k, n, m,
                                  g.value(a).data(), dc, g.grad_buffer(b.id),
                                  true);
                  });
}

Var transpose(Var a) {
  Graph& g = *a.graph;
  require_matrix("transpose", a.value());
  const std::size_t m = a.value().rows(), n = a.value().cols();
  return g.record("transpose", loadfc::transpose(a.value()), {a.id},
                  [=](Graph& g, std::span<const double> dy) {
                    auto da = g.grad_buffer(a.id);
                    for (std::size_t i = 0; i < m; ++i)
                      for (std::size_t j = 0; j < n; ++j)
                        da[i * n + j] += dy[j * m + i];
                  });
}

Var add(Var a, Var b) {
  Graph& g = same_graph(a, b);
  require_same_shape("add", a.value(), b.value());
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return g.record("add", std::move(out), {a.id, b.id},
                  [=](Graph& g, std::span<const double> dy) {
                    auto da = g.grad_buffer(a.id);
                    for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i];
                    auto db = g.grad_buffer(b.id);
                    for (std::size_t i = 0; i < dy.size(); ++i) db[i] += dy[i];
                  });
}

Var sub(Var a, Var b) {
  Graph& g = same_graph(a, b);
  require_same_shape("sub", a.value(), b.value());
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return g.record("sub", std::move(out), {a.id, b.id},
                  [=](Graph& g, std::span<const double> dy) {
                    auto da = g.grad_buffer(a.id);
                    for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i];
                    auto db = g.grad_buffer(b.id);
                    for (std::size_t i = 0; i < dy.size(); ++i) db[i] -= dy[i];
                  });
}

Var mul(Var a, Var b) {
  Graph& g = same_graph(a, b);
  require_same_shape("mul", a.value(), b.value());
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return g.record("mul", std::move(out), {a.id, b.id},
                  [=](Graph& g, std::span<const double> dy) {
                    const Tensor& av = g.value(a);
                    const Tensor& bv = g.value(b);
                    auto da = g.grad_buffer(a.id);
                    for (std::size_t i = 0; i < dy.size(); ++i)
                      da[i] += dy[i] * bv[i];
                    auto db = g.grad_buffer(b.id);
                    for (std::size_t i = 0; i < dy.size(); ++i)
                      db[i] += dy[i] * av[i];
                  });
}

Var scale(Var a, double s) {
  Tensor out = a.value();
  for (double& x : out.data()) x *= s;
  return a.graph->record("scale", std::move(out), {a.id},
                         [=](Graph& g, std::span<const double> dy) {
                           auto da = g.grad_buffer(a.id);
                           for (std::size_t i = 0; i < dy.size(); ++i)
                             da[i] += s * dy[i];
                         });
}

Var add_bias(Var x, Var bias) {
  Graph& g = same_graph(x, bias);
  const std::size_t d = x.value().cols();
  if (bias.value().size() != d)
    throw DimensionError("add_bias: bias " + shape_string(bias.shape()) +
                         " does not match last axis of " +
                         shape_string(x.shape()));
  Tensor out = x.value();
  const Tensor& bv = bias.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i % d];
  return g.record("add_bias", std::move(out), {x.id, bias.id},
                  [=](Graph& g, std::span<const double> dy) {
                    auto dx = g.grad_buffer(x.id);
                    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i];
                    auto db = g.grad_buffer(bias.id);
                    for (std::size_t i = 0; i < dy.size(); ++i)
                      db[i % d] += dy[i];
                  });
}

Var relu(Var x) {
  Tensor out = x.value();
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return x.graph->record("relu", std::move(out), {x.id},
                         [=](Graph& g, std::span<const double> dy) {
                           const Tensor& xv = g.value(x);
                           auto dx = g.grad_buffer(x.id);
                           for (std::size_t i = 0; i < dy.size(); ++i)
                             if (xv[i] > 0.0) dx[i] += dy[i];
                         });
}

Var tanh(Var x) {
  Tensor out = x.value();
  for (double& v : out.data()) v = std::tanh(v);
  const std::size_t self = x.graph->size();
  return x.graph->record("tanh", std::move(out), {x.id},
                         [=](Graph& g, std::span<const double> dy) {
                           const Tensor& y = g.value(Var{&g, self});
                           auto dx = g.grad_buffer(x.id);
                           for (std::size_t i = 0; i < dy.size(); ++i)
                             dx[i] += dy[i] * (1.0 - y[i] * y[i]);
                         });
}

Var sigmoid(Var x) {
  Tensor out = x.value();
  for (double& v : out.data()) v = 1.0 / (1.0 + std::exp(-v));
  const std::size_t self = x.graph->size();
  return x.graph->record("sigmoid", std::move(out), {x.id},
                         [=](Graph& g, std::span<const double> dy) {
                           const Tensor& y = g.value(Var{&g, self});
                           auto dx = g.grad_buffer(x.id);
                           for (std::size_t i = 0; i < dy.size(); ++i)
                             dx[i] += dy[i] * y[i] * (1.0 - y[i]);
                         });
}

Var softmax(Var x, int axis) {
  Tensor out = loadfc::softmax(x.value(), axis);
  const auto& s = x.value().shape();
  const int rank = static_cast<int>(s.size());
  const int ax = axis < 0 ? axis + rank : axis;
  std::size_t outer = 1, inner = 1;
  for (int d = 0; d < ax; ++d) outer *= s[d];
  for (int d = ax + 1; d < rank; ++d) inner *= s[d];
  const std::size_t len = s[ax];
  const std::size_t self = x.graph->size();
  return x.graph->record(
      "softmax", std::move(out), {x.id},
      [=](Graph& g, std::span<const double> dy) {
        const Tensor& y = g.value(Var{&g, self});
        auto dx = g.grad_buffer(x.id);
        for (std::size_t o = 0; o < outer; ++o) {
          for (std::size_t in = 0; in < inner; ++in) {
            const std::size_t base = o * len * inner + in;
            double dot = 0.0;
            for (std::size_t j = 0; j < len; ++j)
              dot += dy[base + j * inner] * y[base + j * inner];
            for (std::size_t j = 0; j < len; ++j) {
              const std::size_t idx = base + j * inner;
              dx[idx] += y[idx] * (dy[idx] - dot);
            }
          }
        }
      });
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  Graph& g = same_graph(x, gamma);
  same_graph(x, beta);
  Tensor out = loadfc::layer_norm(x.value(), gamma.value(), beta.value(), eps);
  const std::size_t d = x.value().cols();
  return g.record(
      "layer_norm", std::move(out), {x.id, gamma.id, beta.id},
      [=](Graph& g, std::span<const double> dy) {
        const Tensor& xv = g.value(x);
        const Tensor& gv = g.value(gamma);
        auto dx = g.grad_buffer(x.id);
        auto dgamma = g.grad_buffer(gamma.id);
        auto dbeta = g.grad_buffer(beta.id);
        const std::size_t slices = xv.size() / d;
        const double inv_d = 1.0 / static_cast<double>(d);
        std::vector<double> xhat(d), dxhat(d);
        for (std::size_t r = 0; r < slices; ++r) {
          const double* xr = xv.raw() + r * d;
          const double* gr = dy.data() + r * d;
          double mu = 0.0;
          for (std::size_t j = 0; j < d; ++j) mu += xr[j];
          mu *= inv_d;
          double var = 0.0;
          for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mu) * (xr[j] - mu);
          var *= inv_d;
          const double rstd = 1.0 / std::sqrt(var + eps);
          double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            xhat[j] = (xr[j] - mu) * rstd;
            dxhat[j] = gr[j] * gv[j];
            dgamma[j] += gr[j] * xhat[j];
            dbeta[j] += gr[j];
            mean_dxhat += dxhat[j];
            mean_dxhat_xhat += dxhat[j] * xhat[j];
          }
          mean_dxhat *= inv_d;
          mean_dxhat_xhat *= inv_d;
          for (std::size_t j = 0; j < d; ++j)
            dx[r * d + j] +=
                rstd * (dxhat[j] - mean_dxhat - xhat[j] * mean_dxhat_xhat);
        }
      });
}

Var slice_cols(Var x, std::size_t begin, std::size_t end) {
  const Tensor& xv = x.value();
  require_matrix("slice_cols", xv);
  const std::size_t m = xv.rows(), n = xv.cols();
  if (begin >= end || end > n)
    throw DimensionError("slice_cols: range [" + std::to_string(begin) + ", " +
                         std::to_string(end) + ") invalid for " +
                         shape_string(xv.shape()));
  const std::size_t w = end - begin;
  Tensor out({m, w});
  for (std::size_t i = 0; i < m; ++i)
    std::copy_n(xv.raw() + i * n + begin, w, out.raw() + i * w);
  return x.graph->record("slice_cols", std::move(out), {x.id},
                         [=](Graph& g, std::span<const double> dy) {
                           auto dx = g.grad_buffer(x.id);
                           for (std::size_t i = 0; i < m; ++i)
                             for (std::size_t j = 0; j < w; ++j)
                               dx[i * n + begin + j] += dy[i * w + j];
                         });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: nothing to concatenate");
  Graph& g = *parts[0].graph;
  const std::size_t m = parts[0].value().rows();
  std::vector<std::size_t> widths, ids;
  std::size_t total = 0;
  for (const Var& p : parts) {
    same_graph(parts[0], p);
    require_matrix("concat_cols", p.value());
    if (p.value().rows() != m)
      throw DimensionError("concat_cols: row mismatch " +
                           shape_string(parts[0].shape()) + " vs " +
                           shape_string(p.shape()));
    widths.push_back(p.value().cols());
    ids.push_back(p.id);
    total += p.value().cols();
  }
  Tensor out({m, total});
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const std::size_t w = p.value().cols();
    for (std::size_t i = 0; i < m; ++i)
      std::copy_n(p.value().raw() + i * w, w, out.raw() + i * total + offset);
    offset += w;
  }
  return g.record("concat_cols", std::move(out), ids,
                  [=](Graph& g, std::span<const double> dy) {
                    std::size_t off = 0;
                    for (std::size_t p = 0; p < ids.size(); ++p) {
                      auto dp = g.grad_buffer(ids[p]);
                      const std::size_t w = widths[p];
                      for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t j = 0; j < w; ++j)
                          dp[i * w + j] += dy[i * total + off + j];
                      off += w;
                    }
                  });
}

Var reshape(Var x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  return x.graph->record("reshape", std::move(out), {x.id},
                         [=](Graph& g, std::span<const double> dy) {
                           auto dx = g.grad_buffer(x.id);
                           for (std::size_t i = 0; i < dy.size(); ++i)
                             dx[i] += dy[i];
                         });
}

Var sum(Var x) {
  double total = 0.0;
  for (double v : x.value().data()) total += v;
  return x.graph->record("sum", Tensor({1}, {total}), {x.id},
                         [=](Graph& g, std::span<const double> dy) {
                           auto dx = g.grad_buffer(x.id);
                           for (double& v : dx) v += dy[0];
                         });
}

Var mean(Var x) {
  return scale(sum(x), 1.0 / static_cast<double>(x.value().size()));
}

Var dropout(Var x, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0))
    throw DomainError("dropout rate must lie in [0, 1)");
  if (rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(x.value().size());
  for (double& m : mask) m = rng.uniform() >= rate ? keep_scale : 0.0;
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return x.graph->record("dropout", std::move(out), {x.id},
                         [=, mask = std::move(mask)](
                             Graph& g, std::span<const double> dy) {
                           auto dx = g.grad_buffer(x.id);
                           for (std::size_t i = 0; i < dy.size(); ++i)
                             dx[i] += dy[i] * mask[i];
                         });
}

AttentionMask AttentionMask::causal(std::size_t len) {
  AttentionMask m(len, len);
  for (std::size_t i = 0; i < len; ++i)
    for (std::size_t j = i + 1; j < len; ++j) m.block(i, j);
  return m;
}

AttentionOutput attention(Var q, Var k, Var v, const AttentionLayout& layout,
                          const AttentionMask* mask) {
  Graph& g = same_graph(q, k);
  same_graph(q, v);
  const Tensor& qv = q.value();
  const Tensor& kv = k.value();
  const Tensor& vv = v.value();
  require_matrix("attention", qv);
  require_matrix("attention", kv);
  require_matrix("attention", vv);
  const auto [B, Lq, Lk, H] = layout;
  const std::size_t D = qv.cols(), Dv = vv.cols();
  if (H == 0 || D % H != 0 || Dv % H != 0)
    throw DimensionError("attention: " + std::to_string(H) +
                         " heads do not divide widths " + std::to_string(D) +
                         "/" + std::to_string(Dv));
  if (qv.rows() != B * Lq || kv.rows() != B * Lk || vv.rows() != B * Lk ||
      kv.cols() != D)
    throw DimensionError("attention: q " + shape_string(qv.shape()) + ", k " +
                         shape_string(kv.shape()) + ", v " +
                         shape_string(vv.shape()) + " disagree with layout");
  if (mask) {
    if (mask->q_len() != Lq || mask->kv_len() != Lk)
      throw DimensionError("attention: mask is " +
                           std::to_string(mask->q_len()) + "x" +
                           std::to_string(mask->kv_len()) + ", expected " +
                           std::to_string(Lq) + "x" + std::to_string(Lk));
    for (std::size_t i = 0; i < Lq; ++i) {
      bool any = false;
      for (std::size_t j = 0; j < Lk && !any; ++j) any = !mask->blocked(i, j);
      if (!any)
        throw AttentionError("attention: query row " + std::to_string(i) +
                             " has every key masked");
    }
  }
  const std::size_t dk = D / H, dv = Dv / H;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  auto blocked = [mask](std::size_t i, std::size_t j) {
    return mask && mask->blocked(i, j);
  };

  Tensor weights({B, H, Lq, Lk});
  Tensor out({B * Lq, Dv});
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t h = 0; h < H; ++h) {
      for (std::size_t i = 0; i < Lq; ++i) {
        const double* qi = qv.raw() + (b * Lq + i) * D + h * dk;
        double* w = weights.raw() + ((b * H + h) * Lq + i) * Lk;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < Lk; ++j) {
          if (blocked(i, j)) continue;
          const double* kj = kv.raw() + (b * Lk + j) * D + h * dk;
          double s = 0.0;
          for (std::size_t c = 0; c < dk; ++c) s += qi[c] * kj[c];
          w[j] = s * scale;
          mx = std::max(mx, w[j]);
        }
        double total = 0.0;
        for (std::size_t j = 0; j < Lk; ++j) {
          if (blocked(i, j)) {
            w[j] = 0.0;
            continue;
          }
          w[j] = std::exp(w[j] - mx);
          total += w[j];
        }
        double* oi = out.raw() + (b * Lq + i) * Dv + h * dv;
        for (std::size_t j = 0; j < Lk; ++j) {
          if (blocked(i, j)) continue;
          w[j] /= total;
          const double* vj = vv.raw() + (b * Lk + j) * Dv + h * dv;
          for (std::size_t c = 0; c < dv; ++c) oi[c] += w[j] * vj[c];
        }
      }
    }
  }

  Tensor saved = weights;
  Var result = g.record(
      "attention", std::move(out), {q.id, k.id, v.id},
      [=, w_all = std::move(saved)](Graph& g, std::span<const double> dout) {
        const Tensor& qv = g.value(q);
        const Tensor& kv = g.value(k);
        const Tensor& vv = g.value(v);
        auto dq = g.grad_buffer(q.id);
        auto dkk = g.grad_buffer(k.id);
        auto dvv = g.grad_buffer(v.id);
        std::vector<double> dw(Lk);
        for (std::size_t b = 0; b < B; ++b) {
          for (std::size_t h = 0; h < H; ++h) {
            for (std::size_t i = 0; i < Lq; ++i) {
              const double* w = w_all.raw() + ((b * H + h) * Lq + i) * Lk;
              const double* doi = dout.data() + (b * Lq + i) * Dv + h * dv;
              double dot = 0.0;
              for (std::size_t j = 0; j < Lk; ++j) {
                const double* vj = vv.raw() + (b * Lk + j) * Dv + h * dv;
                double acc = 0.0;
                for (std::size_t c = 0; c < dv; ++c) acc += doi[c] * vj[c];
                dw[j] = acc;
                dot += acc * w[j];
                double* dvj = dvv.data() + (b * Lk + j) * Dv + h * dv;
                for (std::size_t c = 0; c < dv; ++c) dvj[c] += w[j] * doi[c];
              }
              const double* qi = qv.raw() + (b * Lq + i) * D + h * dk;
              double* dqi = dq.data() + (b * Lq + i) * D + h * dk;
              for (std::size_t j = 0; j < Lk; ++j) {
                const double ds = w[j] * (dw[j] - dot) * scale;
                if (ds == 0.0) continue;
                const double* kj = kv.raw() + (b * Lk + j) * D + h * dk;
                double* dkj = dkk.data() + (b * Lk + j) * D + h * dk;
                for (std::size_t c = 0; c < dk; ++c) {
                  dqi[c] += ds * kj[c];
                  dkj[c] += ds * qi[c];
                }
              }
            }
          }
        }
      });
  return AttentionOutput{result, std::move(weights)};
}

}  // namespace loadfc::ad
