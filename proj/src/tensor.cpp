#include "anticipatr/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace anticipatr {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> s, std::vector<double> d)
    : shape(std::move(s)), data(std::move(d)) {
  if (shape_product(shape) != data.size()) {
    throw ShapeError("tensor: shape " + shape_str(shape) + " does not match " +
                     std::to_string(data.size()) + " values");
  }
}

Tensor Tensor::zeros(std::vector<std::size_t> s) {
  std::size_t n = shape_product(s);
  return Tensor(std::move(s), std::vector<double>(n, 0.0));
}

Tensor Tensor::full(std::vector<std::size_t> s, double v) {
  std::size_t n = shape_product(s);
  return Tensor(std::move(s), std::vector<double>(n, v));
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::from_external(std::vector<std::size_t> s, std::vector<double> d) {
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!std::isfinite(d[i])) {
      throw FormatError("tensor: non-finite value at flat index " + std::to_string(i));
    }
  }
  return Tensor(std::move(s), std::move(d));
}

std::string shape_str(const std::vector<std::size_t>& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << "x";
    os << s[i];
  }
  os << "]";
  return os.str();
}

double sigmoid_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

double softmax2(double score_c, double score_not_c) {
  double m = std::max(score_c, score_not_c);
  double ec = std::exp(score_c - m);
  double en = std::exp(score_not_c - m);
  return ec / (ec + en);
}

Tensor avgpool_rows(const std::vector<Tensor>& rows) {
  if (rows.empty()) throw ContractError("avgpool_rows: empty row list");
  for (const Tensor& r : rows) {
    if (!r.same_shape(rows.front())) {
      throw ShapeError("avgpool_rows: mismatched shapes " + shape_str(rows.front().shape) +
                       " vs " + shape_str(r.shape));
    }
  }
  Tensor out = Tensor::zeros(rows.front().shape);
  for (const Tensor& r : rows) {
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += r.data[i];
  }
  double inv = 1.0 / static_cast<double>(rows.size());
  for (double& v : out.data) v *= inv;
  return out;
}

Tensor bilinear_resize(const Tensor& grid, std::size_t out_h, std::size_t out_w) {
  if (grid.rank() != 2) throw ShapeError("bilinear_resize: grid must be 2-D, got " + shape_str(grid.shape));
  std::size_t in_h = grid.shape[0], in_w = grid.shape[1];
  if (in_h < 1 || in_w < 1 || out_h < 1 || out_w < 1) {
    throw ContractError("bilinear_resize: all dimensions must be >= 1");
  }
  Tensor out = Tensor::zeros({out_h, out_w});
  double sy = (out_h > 1 && in_h > 1) ? double(in_h - 1) / double(out_h - 1) : 0.0;
  double sx = (out_w > 1 && in_w > 1) ? double(in_w - 1) / double(out_w - 1) : 0.0;
  for (std::size_t r = 0; r < out_h; ++r) {
    double fy = double(r) * sy;
    std::size_t y0 = std::min<std::size_t>(std::size_t(fy), in_h - 1);
    std::size_t y1 = std::min<std::size_t>(y0 + 1, in_h - 1);
    double ty = fy - double(y0);
    for (std::size_t c = 0; c < out_w; ++c) {
      double fx = double(c) * sx;
      std::size_t x0 = std::min<std::size_t>(std::size_t(fx), in_w - 1);
      std::size_t x1 = std::min<std::size_t>(x0 + 1, in_w - 1);
      double tx = fx - double(x0);
      // lerp form keeps constants exactly constant
      double top = grid.at2(y0, x0) + tx * (grid.at2(y0, x1) - grid.at2(y0, x0));
      double bot = grid.at2(y1, x0) + tx * (grid.at2(y1, x1) - grid.at2(y1, x0));
      out.at2(r, c) = top + ty * (bot - top);
    }
  }
  return out;
}

const Tensor& Tape::val_of(ValueId id) const {
  if (!id.valid() || id.idx >= nodes_.size()) {
    throw ContractError("tape: value id not on this record");
  }
  return nodes_[id.idx].val;
}

ValueId Tape::push(Op op, Tensor val, std::initializer_list<std::size_t> ins) {
  Node n;
  n.op = op;
  n.val = std::move(val);
  n.arity = ins.size();
  std::size_t i = 0;
  for (std::size_t in : ins) n.in[i++] = in;
  n.needs_grad = false;
  for (std::size_t k = 0; k < n.arity; ++k) n.needs_grad |= nodes_[n.in[k]].needs_grad;
  nodes_.push_back(std::move(n));
  return ValueId{nodes_.size() - 1};
}

ValueId Tape::leaf(Tensor t, bool needs_grad) {
  Node n;
  n.op = Op::leaf;
  n.val = std::move(t);
  n.needs_grad = needs_grad;
  nodes_.push_back(std::move(n));
  return ValueId{nodes_.size() - 1};
}

ValueId Tape::matvec(ValueId m, ValueId v) {
  const Tensor& mt = val_of(m);
  const Tensor& vt = val_of(v);
  if (mt.rank() != 2 || vt.rank() != 1 || mt.shape[1] != vt.shape[0]) {
    throw ShapeError("matvec: incompatible shapes " + shape_str(mt.shape) + " and " +
                     shape_str(vt.shape));
  }
  std::size_t rows = mt.shape[0], cols = mt.shape[1];
  Tensor out = Tensor::zeros({rows});
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    const double* mrow = mt.data.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc += mrow[c] * vt.data[c];
    out.data[r] = acc;
  }
  return push(Op::matvec, std::move(out), {m.idx, v.idx});
}

ValueId Tape::add(ValueId a, ValueId b) {
  const Tensor& at = val_of(a);
  const Tensor& bt = val_of(b);
  if (!at.same_shape(bt)) {
    throw ShapeError("add: mismatched shapes " + shape_str(at.shape) + " and " + shape_str(bt.shape));
  }
  Tensor out = at;
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += bt.data[i];
  return push(Op::add, std::move(out), {a.idx, b.idx});
}

ValueId Tape::mul(ValueId a, ValueId b) {
  const Tensor& at = val_of(a);
  const Tensor& bt = val_of(b);
  if (!at.same_shape(bt)) {
    throw ShapeError("mul: mismatched shapes " + shape_str(at.shape) + " and " + shape_str(bt.shape));
  }
  Tensor out = at;
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= bt.data[i];
  return push(Op::mul, std::move(out), {a.idx, b.idx});
}

ValueId Tape::sigmoid(ValueId a) {
  Tensor out = val_of(a);
  for (double& v : out.data) v = sigmoid_scalar(v);
  return push(Op::sigmoid, std::move(out), {a.idx});
}

ValueId Tape::tanh(ValueId a) {
  Tensor out = val_of(a);
  for (double& v : out.data) v = std::tanh(v);
  return push(Op::tanh, std::move(out), {a.idx});
}

ValueId Tape::relu(ValueId a) {
  Tensor out = val_of(a);
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  return push(Op::relu, std::move(out), {a.idx});
}

ValueId Tape::exp(ValueId a) {
  Tensor out = val_of(a);
  for (double& v : out.data) v = std::exp(v);
  return push(Op::exp, std::move(out), {a.idx});
}

ValueId Tape::log(ValueId a) {
  Tensor out = val_of(a);
  for (double& v : out.data) v = std::log(v);
  return push(Op::log, std::move(out), {a.idx});
}

ValueId Tape::sum(ValueId a) {
  const Tensor& at = val_of(a);
  double acc = 0.0;
  for (double v : at.data) acc += v;
  return push(Op::sum, Tensor::scalar(acc), {a.idx});
}

ValueId Tape::mean(ValueId a) {
  const Tensor& at = val_of(a);
  double acc = 0.0;
  for (double v : at.data) acc += v;
  return push(Op::mean, Tensor::scalar(acc / double(at.size())), {a.idx});
}

ValueId Tape::avgpool_rows(const std::vector<ValueId>& rows) {
  if (rows.empty()) throw ContractError("avgpool_rows: empty row list");
  ValueId acc = rows.front();
  for (std::size_t i = 1; i < rows.size(); ++i) acc = add(acc, rows[i]);
  Tensor inv = Tensor::full(val_of(acc).shape, 1.0 / double(rows.size()));
  return mul(acc, constant(std::move(inv)));
}

std::vector<Tensor> Tape::backward(ValueId output) const {
  const Tensor& out_val = val_of(output);
  if (out_val.size() != 1) {
    throw ContractError("backward: output must be scalar, got shape " + shape_str(out_val.shape));
  }
  std::vector<Tensor> grads(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) grads[i] = Tensor::zeros(nodes_[i].val.shape);
  grads[output.idx].data[0] = 1.0;

  for (std::size_t i = output.idx + 1; i-- > 0;) {
    const Node& n = nodes_[i];
    if (n.op == Op::leaf || !n.needs_grad) continue;
    const Tensor& g = grads[i];
    switch (n.op) {
      case Op::matvec: {
        const Node& mn = nodes_[n.in[0]];
        const Node& vn = nodes_[n.in[1]];
        std::size_t rows = mn.val.shape[0], cols = mn.val.shape[1];
        if (mn.needs_grad) {
          Tensor& gm = grads[n.in[0]];
          for (std::size_t r = 0; r < rows; ++r) {
            double gr = g.data[r];
            if (gr == 0.0) continue;
            double* gm_row = gm.data.data() + r * cols;
            for (std::size_t c = 0; c < cols; ++c) gm_row[c] += gr * vn.val.data[c];
          }
        }
        if (vn.needs_grad) {
          Tensor& gv = grads[n.in[1]];
          for (std::size_t r = 0; r < rows; ++r) {
            double gr = g.data[r];
            if (gr == 0.0) continue;
            const double* mrow = mn.val.data.data() + r * cols;
            for (std::size_t c = 0; c < cols; ++c) gv.data[c] += gr * mrow[c];
          }
        }
        break;
      }
      case Op::add:
        for (std::size_t k = 0; k < 2; ++k) {
          if (!nodes_[n.in[k]].needs_grad) continue;
          Tensor& gi = grads[n.in[k]];
          for (std::size_t j = 0; j < g.size(); ++j) gi.data[j] += g.data[j];
        }
        break;
      case Op::mul:
        for (std::size_t k = 0; k < 2; ++k) {
          if (!nodes_[n.in[k]].needs_grad) continue;
          const Tensor& other = nodes_[n.in[1 - k]].val;
          Tensor& gi = grads[n.in[k]];
          for (std::size_t j = 0; j < g.size(); ++j) gi.data[j] += g.data[j] * other.data[j];
        }
        break;
      case Op::sigmoid: {
        Tensor& gi = grads[n.in[0]];
        for (std::size_t j = 0; j < g.size(); ++j) {
          double s = n.val.data[j];
          gi.data[j] += g.data[j] * s * (1.0 - s);
        }
        break;
      }
      case Op::tanh: {
        Tensor& gi = grads[n.in[0]];
        for (std::size_t j = 0; j < g.size(); ++j) {
          double t = n.val.data[j];
          gi.data[j] += g.data[j] * (1.0 - t * t);
        }
        break;
      }
      case Op::relu: {
        const Tensor& x = nodes_[n.in[0]].val;
        Tensor& gi = grads[n.in[0]];
        for (std::size_t j = 0; j < g.size(); ++j) {
          if (x.data[j] > 0.0) gi.data[j] += g.data[j];
        }
        break;
      }
      case Op::exp: {
        Tensor& gi = grads[n.in[0]];
        for (std::size_t j = 0; j < g.size(); ++j) gi.data[j] += g.data[j] * n.val.data[j];
        break;
      }
      case Op::log: {
        const Tensor& x = nodes_[n.in[0]].val;
        Tensor& gi = grads[n.in[0]];
        for (std::size_t j = 0; j < g.size(); ++j) gi.data[j] += g.data[j] / x.data[j];
        break;
      }
      case Op::sum: {
        Tensor& gi = grads[n.in[0]];
        double gs = g.data[0];
        for (std::size_t j = 0; j < gi.size(); ++j) gi.data[j] += gs;
        break;
      }
      case Op::mean: {
        Tensor& gi = grads[n.in[0]];
        double gs = g.data[0] / double(gi.size());
        for (std::size_t j = 0; j < gi.size(); ++j) gi.data[j] += gs;
        break;
      }
      case Op::leaf:
        break;
    }
  }
  return grads;
}

}  // namespace anticipatr
