#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <string>
#include <vector>

#include "anticipatr/errors.hpp"

namespace anticipatr {

// Dense row-major tensor of 64-bit floats. Feature files store 32-bit values;
// everything in memory is widened to double so gradient checks can use tight
// tolerances.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::vector<std::size_t> s, std::vector<double> d);

  static Tensor zeros(std::vector<std::size_t> s);
  static Tensor full(std::vector<std::size_t> s, double v);
  static Tensor scalar(double v);
  // Construction from external input: rejects NaN/Inf.
  static Tensor from_external(std::vector<std::size_t> s, std::vector<double> d);

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  double at(std::size_t i) const { return data[i]; }
  double& at(std::size_t i) { return data[i]; }
  double at2(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }
  double& at2(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

std::string shape_str(const std::vector<std::size_t>& s);

double sigmoid_scalar(double x);

// Two-class softmax, returns the probability of the first score. Uses
// max-subtraction so it never overflows; result is in (0,1) for finite input.
double softmax2(double score_c, double score_not_c);

// Elementwise mean of M same-shaped tensors (M >= 1).
Tensor avgpool_rows(const std::vector<Tensor>& rows);

// Corner-aligned bilinear resampling of a 2-D grid to out_h x out_w: source
// corners map exactly to target corners, and constant grids stay constant.
Tensor bilinear_resize(const Tensor& grid, std::size_t out_h, std::size_t out_w);

enum class Op : std::uint8_t {
  leaf,
  matvec,
  add,
  mul,
  sigmoid,
  tanh,
  relu,
  exp,
  log,
  sum,
  mean,
};

struct ValueId {
  std::size_t idx = std::numeric_limits<std::size_t>::max();
  bool valid() const { return idx != std::numeric_limits<std::size_t>::max(); }
};

// Eager computation record over the closed primitive set. Every network, loss,
// and CAM computation compiles to these ops, so one reverse sweep covers all
// gradients. A Tape is confined to a single pipeline execution.
class Tape {
 public:
  ValueId leaf(Tensor t, bool needs_grad = true);
  ValueId constant(Tensor t) { return leaf(std::move(t), false); }

  ValueId matvec(ValueId m, ValueId v);
  ValueId add(ValueId a, ValueId b);
  ValueId mul(ValueId a, ValueId b);
  ValueId sigmoid(ValueId a);
  ValueId tanh(ValueId a);
  ValueId relu(ValueId a);
  ValueId exp(ValueId a);
  ValueId log(ValueId a);
  ValueId sum(ValueId a);
  ValueId mean(ValueId a);

  // Elementwise mean of the given rows; empty list is a contract violation.
  ValueId avgpool_rows(const std::vector<ValueId>& rows);

  const Tensor& value(ValueId id) const { return nodes_[id.idx].val; }
  std::size_t node_count() const { return nodes_.size(); }

  // Gradients of a scalar output with respect to every node, indexed by node
  // id. Nodes not on any path to the output receive exact zeros, as do nodes
  // recorded without gradient tracking.
  std::vector<Tensor> backward(ValueId output) const;

 private:
  struct Node {
    Op op = Op::leaf;
    std::array<std::size_t, 2> in{};
    std::size_t arity = 0;
    Tensor val;
    bool needs_grad = false;
  };

  ValueId push(Op op, Tensor val, std::initializer_list<std::size_t> ins);
  const Tensor& val_of(ValueId id) const;

  std::vector<Node> nodes_;
};

}  // namespace anticipatr
