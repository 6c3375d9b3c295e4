#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "loadfc/rng.hpp"
#include "loadfc/tensor.hpp"

// Define-by-run reverse-mode differentiation.
//
// A Graph is an append-only tape. Every recorded operation stores its value,
// the ids of its inputs (which always precede it) and a closure that pushes the
// output gradient back to those inputs. Graphs are single-owner and hold no
// global state, so independent graphs can run on separate threads.
namespace loadfc::ad {

class Graph;

// Handle to a node in a Graph. Cheap to copy; valid while the Graph lives.
struct Var {
  Graph* graph = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

class Graph {
 public:
  using Backward = std::function<void(Graph&, std::span<const double>)>;

  // With record == false no backward closures are kept (inference mode).
  explicit Graph(bool record = true) : record_(record) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool recording() const { return record_; }

  Var constant(Tensor value);
  // Leaf bound to a parameter tensor; backward accumulates into p's grad.
  Var param(Tensor& p);

  Var record(std::string_view op, Tensor value, std::vector<std::size_t> inputs,
             Backward backward);

  // Seeds d(loss)/d(loss) = 1 and walks the tape once in reverse. Every
  // parameter bound with param() ends up with an allocated grad (zero when the
  // loss does not depend on it). A graph can be differentiated only once;
  // a second call throws GraphError.
  void backward(Var loss);
  bool differentiated() const { return differentiated_; }

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  // Gradient of the last backward() w.r.t. v; zeros for unreachable nodes.
  Tensor grad(Var v) const;
  std::string_view op(Var v) const { return nodes_.at(v.id).op; }
  const std::vector<std::size_t>& inputs(Var v) const {
    return nodes_.at(v.id).inputs;
  }
  std::size_t size() const { return nodes_.size(); }

  // Gradient accumulator of node `id`, allocated on first use.
  std::span<double> grad_buffer(std::size_t id);

 private:
  struct Node {
    std::string_view op;
    Tensor value;
    std::vector<std::size_t> inputs;
    std::vector<double> grad;
    Backward backward;
    Tensor* param = nullptr;
  };

  Var push(Node node);

  std::deque<Node> nodes_;
  bool record_;
  bool differentiated_ = false;
};

Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
// x[.., d] + bias[d], broadcast over every leading index.
Var add_bias(Var x, Var bias);
Var relu(Var x);
Var tanh(Var x);
Var sigmoid(Var x);
Var softmax(Var x, int axis);
Var layer_norm(Var x, Var gamma, Var beta, double eps);
Var slice_cols(Var x, std::size_t begin, std::size_t end);
Var concat_cols(std::span<const Var> parts);
Var reshape(Var x, Shape shape);
Var sum(Var x);
Var mean(Var x);
// Inverted dropout; the keep mask is drawn from rng.
Var dropout(Var x, double rate, Rng& rng);

// Boolean q_len × kv_len matrix; blocked entries receive exactly zero weight.
class AttentionMask {
 public:
  AttentionMask(std::size_t q_len, std::size_t kv_len)
      : q_len_(q_len), kv_len_(kv_len), blocked_(q_len * kv_len, 0) {}

  // Query t may attend to keys 0..t only.
  static AttentionMask causal(std::size_t len);

  std::size_t q_len() const { return q_len_; }
  std::size_t kv_len() const { return kv_len_; }
  bool blocked(std::size_t q, std::size_t k) const {
    return blocked_[q * kv_len_ + k] != 0;
  }
  void block(std::size_t q, std::size_t k, bool on = true) {
    blocked_[q * kv_len_ + k] = on ? 1 : 0;
  }

 private:
  std::size_t q_len_, kv_len_;
  std::vector<std::uint8_t> blocked_;
};

// Rows of q are (batch, position) pairs: row b*q_len + i. Head h owns columns
// [h*d_head, (h+1)*d_head) of q, k and v.
struct AttentionLayout {
  std::size_t batch = 1;
  std::size_t q_len = 1;
  std::size_t kv_len = 1;
  std::size_t heads = 1;
};

struct AttentionOutput {
  Var out;
  // [batch, heads, q_len, kv_len]
  Tensor weights;
};

// softmax(q_h·k_hᵀ/√d_head)·v_h for every batch element and head, heads
// concatenated along columns. Throws AttentionError when a mask row blocks
// every key.
AttentionOutput attention(Var q, Var k, Var v, const AttentionLayout& layout,
                          const AttentionMask* mask = nullptr);

}  // namespace loadfc::ad
