#include "mstgnn/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "eigen_view.hpp"

namespace mstgnn {

using detail::view;

// ---------------------------------------------------------------------------
// Parameter / ParameterStore

Parameter::Parameter(std::string name, Tensor value)
    : name_(std::move(name)), value_(std::move(value)), grad_(value_.shape()) {}

void Parameter::set_mask(Tensor mask) {
  if (mask.shape() != value_.shape())
    throw DimensionError("mask shape " + shape_string(mask.shape()) + " does not match parameter " +
                         name_ + " " + shape_string(value_.shape()));
  mask_ = std::move(mask);
  apply_mask();
}

void Parameter::zero_grad() { std::fill(grad_.values().begin(), grad_.values().end(), 0.0); }

void Parameter::apply_mask() {
  if (!mask_) return;
  for (std::size_t i = 0; i < value_.size(); ++i) {
    if ((*mask_)[i] == 0.0) {
      value_[i] = 0.0;
      grad_[i] = 0.0;
    }
  }
}

ParamId ParameterStore::add(std::string name, Tensor value) {
  if (find(name)) throw Error("duplicate parameter name: " + name);
  params_.emplace_back(std::move(name), std::move(value));
  return params_.size() - 1;
}

Parameter* ParameterStore::find(std::string_view name) {
  for (auto& p : params_)
    if (p.name() == name) return &p;
  return nullptr;
}

const Parameter* ParameterStore::find(std::string_view name) const {
  for (const auto& p : params_)
    if (p.name() == name) return &p;
  return nullptr;
}

void ParameterStore::zero_grads() {
  for (auto& p : params_) p.zero_grad();
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value().size();
  return n;
}

// ---------------------------------------------------------------------------
// Tape

const Tensor& Var::value() const { return tape->value(id); }

Var Tape::constant(Tensor value) { return record("constant", std::move(value), false, nullptr); }

Var Tape::variable(Tensor value) { return record("variable", std::move(value), true, nullptr); }

Var Tape::parameter(Parameter& p) {
  if (!p.value().all_finite()) throw NumericError("parameter " + p.name() + " holds non-finite values");
  Node n;
  n.ref = &p.value();
  n.requires_grad = grad_enabled_ && p.trainable();
  if (n.requires_grad) {
    // Upstream nodes accumulate directly into the parameter gradient.
    n.grad_ref = &p.grad();
    Parameter* target = &p;
    n.backward = [target](Tape&, std::size_t) {
      if (const auto& mask = target->mask()) {
        Tensor& acc = target->grad();
        for (std::size_t i = 0; i < acc.size(); ++i)
          if ((*mask)[i] == 0.0) acc[i] = 0.0;
      }
    };
  }
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

Var Tape::record(const char* op, Tensor value, bool requires_grad, Backward fn) {
  if (!value.all_finite())
    throw NumericError(std::string("non-finite value produced by ") + op);
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

Tensor& Tape::grad_buffer(std::size_t id) {
  Node& n = node(id);
  if (n.grad_ref) return *n.grad_ref;
  if (n.grad.empty()) n.grad = Tensor(n.value_ref().shape(), 0.0);
  return n.grad;
}

const Tensor& Tape::grad(Var v) const {
  const Node& n = node(v.id);
  if (!n.requires_grad) throw Error("grad() requested for a node that does not require gradients");
  if (n.grad_ref) return *n.grad_ref;
  if (n.grad.empty()) throw Error("grad() requested before backward() reached the node");
  return n.grad;
}

void Tape::backward(Var root) {
  if (root.tape != this) throw Error("backward() on a foreign variable");
  if (root.value().size() != 1) throw DimensionError("backward() needs a scalar root");
  for (auto& n : nodes_) n.grad = Tensor();
  grad_buffer(root.id)[0] = 1.0;
  for (std::size_t id = root.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.requires_grad || (!n.grad_ref && n.grad.empty())) continue;
    if (n.backward) n.backward(*this, id);
  }
}

// ---------------------------------------------------------------------------
// Primitives

namespace {

Tape& same_tape(Var a, Var b) {
  if (!a.tape || a.tape != b.tape) throw Error("operands recorded on different tapes");
  return *a.tape;
}

bool needs(Var v) { return v.tape->requires_grad(v.id); }

void require_same_shape(const char* op, Var a, Var b) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
}

void require_rank(const char* op, Var x, std::size_t rank) {
  if (x.value().rank() != rank)
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_string(x.shape()));
}

template <typename Fwd, typename Deriv>
Var unary(const char* op, Var x, Fwd fwd, Deriv deriv) {
  const Tensor& in = x.value();
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = fwd(in[i]);
  const std::size_t xi = x.id;
  return x.tape->record(op, std::move(out), needs(x), [xi, deriv](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    const Tensor& xv = t.value(xi);
    const Tensor& yv = t.value(self);
    Tensor& gx = t.grad_buffer(xi);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * deriv(xv[i], yv[i]);
  });
}

/// Leading extent and trailing extent of a tensor viewed as [rows x last].
std::pair<std::size_t, std::size_t> rows_last(const Tensor& t) {
  const std::size_t last = t.shape().back();
  return {t.size() / last, last};
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  Tensor out = matmul(a.value(), b.value());
  const std::size_t ai = a.id, bi = b.id;
  return tape.record("matmul", std::move(out), needs(a) || needs(b), [ai, bi](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    if (t.requires_grad(ai)) view(t.grad_buffer(ai)).noalias() += view(g) * view(t.value(bi)).transpose();
    if (t.requires_grad(bi)) view(t.grad_buffer(bi)).noalias() += view(t.value(ai)).transpose() * view(g);
  });
}

Var transpose(Var a) {
  require_rank("transpose", a, 2);
  const std::size_t ai = a.id;
  return a.tape->record("transpose", transpose(a.value()), needs(a), [ai](Tape& t, std::size_t self) {
    view(t.grad_buffer(ai)) += view(t.grad_buffer(self)).transpose();
  });
}

Var add(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  require_same_shape("add", a, b);
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  const std::size_t ai = a.id, bi = b.id;
  return tape.record("add", std::move(out), needs(a) || needs(b), [ai, bi](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    for (std::size_t id : {ai, bi}) {
      if (!t.requires_grad(id)) continue;
      Tensor& gx = t.grad_buffer(id);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
  });
}

Var sub(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  require_same_shape("sub", a, b);
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  const std::size_t ai = a.id, bi = b.id;
  return tape.record("sub", std::move(out), needs(a) || needs(b), [ai, bi](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    if (t.requires_grad(ai)) {
      Tensor& ga = t.grad_buffer(ai);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (t.requires_grad(bi)) {
      Tensor& gb = t.grad_buffer(bi);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  require_same_shape("mul", a, b);
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  const std::size_t ai = a.id, bi = b.id;
  return tape.record("mul", std::move(out), needs(a) || needs(b), [ai, bi](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    if (t.requires_grad(ai)) {
      Tensor& ga = t.grad_buffer(ai);
      const Tensor& bv = t.value(bi);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (t.requires_grad(bi)) {
      Tensor& gb = t.grad_buffer(bi);
      const Tensor& av = t.value(ai);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var affine(Var x, double a, double b) {
  return unary("affine", x, [a, b](double v) { return a * v + b; }, [a](double, double) { return a; });
}

Var relu(Var x) {
  return unary("relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
               [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Var x) {
  return unary("sigmoid", x,
               [](double v) {
                 if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
                 const double e = std::exp(v);
                 return e / (1.0 + e);
               },
               [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var x) {
  return unary("tanh", x, [](double v) { return std::tanh(v); },
               [](double, double y) { return 1.0 - y * y; });
}

Var abs(Var x) {
  return unary("abs", x, [](double v) { return std::abs(v); },
               [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Var square(Var x) {
  return unary("square", x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Var log_clamped(Var x, double eps) {
  return unary("log_clamped", x, [eps](double v) { return std::log(std::max(v, eps)); },
               [eps](double v, double) { return v > eps ? 1.0 / v : 0.0; });
}

Var softmax_rows(Var x) {
  require_rank("softmax_rows", x, 2);
  const Tensor& in = x.value();
  const std::size_t m = in.dim(0), n = in.dim(1);
  Tensor out(in.shape());
  for (std::size_t i = 0; i < m; ++i) {
    double mx = in(i, 0);
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, in(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += (out(i, j) = std::exp(in(i, j) - mx));
    for (std::size_t j = 0; j < n; ++j) out(i, j) /= z;
  }
  const std::size_t xi = x.id;
  return x.tape->record("softmax_rows", std::move(out), needs(x), [xi, m, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    const Tensor& y = t.value(self);
    Tensor& gx = t.grad_buffer(xi);
    for (std::size_t i = 0; i < m; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += g(i, j) * y(i, j);
      for (std::size_t j = 0; j < n; ++j) gx(i, j) += y(i, j) * (g(i, j) - dot);
    }
  });
}

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  const std::size_t xi = x.id;
  return x.tape->record("sum", Tensor::scalar(s), needs(x), [xi](Tape& t, std::size_t self) {
    const double g = t.grad_buffer(self)[0];
    for (double& v : t.grad_buffer(xi).values()) v += g;
  });
}

Var reshape(Var x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  const std::size_t xi = x.id;
  return x.tape->record("reshape", std::move(out), needs(x), [xi](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    Tensor& gx = t.grad_buffer(xi);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

Var swap_leading(Var x) {
  require_rank("swap_leading", x, 3);
  const Tensor& in = x.value();
  const std::size_t T = in.dim(0), M = in.dim(1), D = in.dim(2);
  Tensor out({M, T, D});
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t m = 0; m < M; ++m)
      std::copy_n(in.data() + (t * M + m) * D, D, out.data() + (m * T + t) * D);
  const std::size_t xi = x.id;
  return x.tape->record("swap_leading", std::move(out), needs(x), [xi, T, M, D](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    Tensor& gx = t.grad_buffer(xi);
    for (std::size_t f = 0; f < T; ++f)
      for (std::size_t m = 0; m < M; ++m) {
        const double* src = g.data() + (m * T + f) * D;
        double* dst = gx.data() + (f * M + m) * D;
        for (std::size_t c = 0; c < D; ++c) dst[c] += src[c];
      }
  });
}

Var merge_dims_13(Var x) {
  require_rank("merge_dims_13", x, 3);
  const std::size_t T = x.dim(0), M = x.dim(1), D = x.dim(2);
  return reshape(swap_leading(x), {M, T * D});
}

Var unmerge_dims_13(Var x, std::size_t frames) {
  require_rank("unmerge_dims_13", x, 2);
  if (frames == 0 || x.dim(1) % frames != 0)
    throw DimensionError("unmerge_dims_13: " + std::to_string(x.dim(1)) + " columns not divisible by " +
                         std::to_string(frames) + " frames");
  const std::size_t M = x.dim(0), D = x.dim(1) / frames;
  return swap_leading(reshape(x, {M, frames, D}));
}

Var frame_left_mul(Var a, Var x) {
  Tape& tape = same_tape(a, x);
  require_rank("frame_left_mul", a, 2);
  require_rank("frame_left_mul", x, 3);
  const std::size_t P = a.dim(0), M = a.dim(1), T = x.dim(0), D = x.dim(2);
  if (x.dim(1) != M)
    throw DimensionError("frame_left_mul: " + shape_string(a.shape()) + " applied to frames of " +
                         shape_string(x.shape()));
  Tensor out({T, P, D});
  const auto A = view(a.value());
  for (std::size_t t = 0; t < T; ++t) {
    detail::MatrixView o(out.data() + t * P * D, P, D);
    detail::ConstMatrixView xi(x.value().data() + t * M * D, M, D);
    o.noalias() = A * xi;
  }
  const std::size_t ai = a.id, xi = x.id;
  return tape.record("frame_left_mul", std::move(out), needs(a) || needs(x),
                     [ai, xi, P, M, T, D](Tape& t, std::size_t self) {
                       const Tensor& g = t.grad_buffer(self);
                       const Tensor& av = t.value(ai);
                       const Tensor& xv = t.value(xi);
                       const bool ga_on = t.requires_grad(ai), gx_on = t.requires_grad(xi);
                       for (std::size_t f = 0; f < T; ++f) {
                         detail::ConstMatrixView gf(g.data() + f * P * D, P, D);
                         if (ga_on) {
                           detail::ConstMatrixView xf(xv.data() + f * M * D, M, D);
                           view(t.grad_buffer(ai)).noalias() += gf * xf.transpose();
                         }
                         if (gx_on) {
                           detail::MatrixView gxf(t.grad_buffer(xi).data() + f * M * D, M, D);
                           gxf.noalias() += view(av).transpose() * gf;
                         }
                       }
                     });
}

Var time_left_mul(Var a, Var x) {
  Tape& tape = same_tape(a, x);
  require_rank("time_left_mul", a, 2);
  if (x.value().rank() < 2 || x.dim(0) != a.dim(1))
    throw DimensionError("time_left_mul: " + shape_string(a.shape()) + " applied to " +
                         shape_string(x.shape()));
  const std::size_t T = x.dim(0), P = a.dim(0), rest = x.value().size() / T;
  Shape shape = x.shape();
  shape[0] = P;
  Tensor out(shape);
  view(out, P, rest).noalias() = view(a.value()) * view(x.value(), T, rest);
  const std::size_t ai = a.id, xi = x.id;
  return tape.record("time_left_mul", std::move(out), needs(a) || needs(x),
                     [ai, xi, T, P, rest](Tape& t, std::size_t self) {
                       const auto g = view(t.grad_buffer(self), P, rest);
                       if (t.requires_grad(ai))
                         view(t.grad_buffer(ai)).noalias() += g * view(t.value(xi), T, rest).transpose();
                       if (t.requires_grad(xi))
                         view(t.grad_buffer(xi), T, rest).noalias() += view(t.value(ai)).transpose() * g;
                     });
}

Var matmul_last(Var x, Var w) {
  Tape& tape = same_tape(x, w);
  if (w.value().rank() < 2) throw DimensionError("matmul_last: weight " + shape_string(w.shape()) + " is not a matrix");
  const auto [K, Dout] = rows_last(w.value());
  if (x.value().rank() < 1 || x.shape().back() != K)
    throw DimensionError("matmul_last: " + shape_string(x.shape()) + " x " + shape_string(w.shape()));
  const std::size_t rows = x.value().size() / K;
  Shape shape = x.shape();
  shape.back() = Dout;
  Tensor out(shape);
  view(out, rows, Dout).noalias() = view(x.value(), rows, K) * view(w.value(), K, Dout);
  const std::size_t xi = x.id, wi = w.id;
  return tape.record("matmul_last", std::move(out), needs(x) || needs(w),
                     [xi, wi, rows, K, Dout](Tape& t, std::size_t self) {
                       const auto g = view(t.grad_buffer(self), rows, Dout);
                       if (t.requires_grad(wi))
                         view(t.grad_buffer(wi), K, Dout).noalias() += view(t.value(xi), rows, K).transpose() * g;
                       if (t.requires_grad(xi))
                         view(t.grad_buffer(xi), rows, K).noalias() += g * view(t.value(wi), K, Dout).transpose();
                     });
}

Var concat_last(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_last: no operands");
  Tape& tape = *parts.front().tape;
  const Shape& first = parts.front().shape();
  if (first.empty()) throw DimensionError("concat_last: scalar operand");
  Shape lead(first.begin(), first.end() - 1);
  std::size_t total = 0;
  std::vector<std::size_t> widths, ids;
  bool any_grad = false;
  for (Var p : parts) {
    same_tape(parts.front(), p);
    const Shape& s = p.shape();
    if (s.size() != first.size() || !std::equal(lead.begin(), lead.end(), s.begin()))
      throw DimensionError("concat_last: " + shape_string(first) + " vs " + shape_string(s));
    widths.push_back(s.back());
    ids.push_back(p.id);
    total += s.back();
    any_grad = any_grad || needs(p);
  }
  const std::size_t rows = shape_size(lead);
  Shape shape = lead;
  shape.push_back(total);
  Tensor out(shape);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& v = parts[k].value();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(v.data() + r * widths[k], widths[k], out.data() + r * total + offset);
    offset += widths[k];
  }
  return tape.record("concat_last", std::move(out), any_grad,
                     [ids, widths, rows, total](Tape& t, std::size_t self) {
                       const Tensor& g = t.grad_buffer(self);
                       std::size_t off = 0;
                       for (std::size_t k = 0; k < ids.size(); ++k) {
                         if (t.requires_grad(ids[k])) {
                           Tensor& gx = t.grad_buffer(ids[k]);
                           for (std::size_t r = 0; r < rows; ++r)
                             for (std::size_t c = 0; c < widths[k]; ++c)
                               gx[r * widths[k] + c] += g[r * total + off + c];
                         }
                         off += widths[k];
                       }
                     });
}

Var add_row(Var x, Var b) {
  Tape& tape = same_tape(x, b);
  const std::size_t n = b.value().size();
  const bool row_shaped = b.value().rank() == 1 || (b.value().rank() == 2 && b.dim(0) == 1);
  if (!row_shaped || x.value().rank() < 1 || x.shape().back() != n)
    throw DimensionError("add_row: cannot broadcast " + shape_string(b.shape()) + " over rows of " +
                         shape_string(x.shape()));
  const std::size_t rows = x.value().size() / n;
  Tensor out = x.value();
  view(out, rows, n).rowwise() += view(b.value(), 1, n).row(0);
  const std::size_t xi = x.id, bi = b.id;
  return tape.record("add_row", std::move(out), needs(x) || needs(b), [xi, bi, rows, n](Tape& t, std::size_t self) {
    const auto g = view(t.grad_buffer(self), rows, n);
    if (t.requires_grad(xi)) view(t.grad_buffer(xi), rows, n) += g;
    if (t.requires_grad(bi)) view(t.grad_buffer(bi), 1, n) += g.colwise().sum();
  });
}

Var scale_rows(Var x, Var s) {
  Tape& tape = same_tape(x, s);
  require_rank("scale_rows", x, 2);
  const std::size_t m = x.dim(0), n = x.dim(1);
  if (s.value().size() != m || (s.value().rank() == 2 && s.dim(1) != 1))
    throw DimensionError("scale_rows: scores " + shape_string(s.shape()) + " for rows of " +
                         shape_string(x.shape()));
  Tensor out = x.value();
  const Tensor& sv = s.value();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) *= sv[i];
  const std::size_t xi = x.id, si = s.id;
  return tape.record("scale_rows", std::move(out), needs(x) || needs(s), [xi, si, m, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    const Tensor& xv = t.value(xi);
    const Tensor& sv = t.value(si);
    if (t.requires_grad(xi)) {
      Tensor& gx = t.grad_buffer(xi);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gx(i, j) += g(i, j) * sv[i];
    }
    if (t.requires_grad(si)) {
      Tensor& gs = t.grad_buffer(si);
      for (std::size_t i = 0; i < m; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += g(i, j) * xv(i, j);
        gs[i] += acc;
      }
    }
  });
}

Var slice_leading(Var x, std::size_t index) {
  const Tensor& in = x.value();
  if (in.rank() < 2 || index >= in.dim(0))
    throw DimensionError("slice_leading: index " + std::to_string(index) + " of " + shape_string(in.shape()));
  Shape shape(in.shape().begin() + 1, in.shape().end());
  const std::size_t block = shape_size(shape);
  std::vector<double> vals(in.data() + index * block, in.data() + (index + 1) * block);
  const std::size_t xi = x.id;
  return x.tape->record("slice_leading", Tensor(shape, std::move(vals)), needs(x),
                        [xi, index, block](Tape& t, std::size_t self) {
                          const Tensor& g = t.grad_buffer(self);
                          double* dst = t.grad_buffer(xi).data() + index * block;
                          for (std::size_t i = 0; i < block; ++i) dst[i] += g[i];
                        });
}

Var stack_leading(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("stack_leading: no operands");
  Tape& tape = *parts.front().tape;
  const Shape inner = parts.front().shape();
  const std::size_t block = shape_size(inner);
  std::vector<std::size_t> ids;
  std::vector<double> vals;
  vals.reserve(block * parts.size());
  bool any_grad = false;
  for (Var p : parts) {
    same_tape(parts.front(), p);
    if (p.shape() != inner)
      throw DimensionError("stack_leading: " + shape_string(inner) + " vs " + shape_string(p.shape()));
    vals.insert(vals.end(), p.value().values().begin(), p.value().values().end());
    ids.push_back(p.id);
    any_grad = any_grad || needs(p);
  }
  Shape shape{parts.size()};
  shape.insert(shape.end(), inner.begin(), inner.end());
  return tape.record("stack_leading", Tensor(shape, std::move(vals)), any_grad,
                     [ids, block](Tape& t, std::size_t self) {
                       const Tensor& g = t.grad_buffer(self);
                       for (std::size_t k = 0; k < ids.size(); ++k) {
                         if (!t.requires_grad(ids[k])) continue;
                         Tensor& gx = t.grad_buffer(ids[k]);
                         for (std::size_t i = 0; i < block; ++i) gx[i] += g[k * block + i];
                       }
                     });
}

Var mean_leading(Var x) {
  const Tensor& in = x.value();
  if (in.rank() < 2) throw DimensionError("mean_leading: rank >= 2 required, got " + shape_string(in.shape()));
  const std::size_t T = in.dim(0), rest = in.size() / T;
  Shape shape(in.shape().begin() + 1, in.shape().end());
  Tensor out(shape);
  view(out, 1, rest) = view(in, T, rest).colwise().mean();
  const std::size_t xi = x.id;
  return x.tape->record("mean_leading", std::move(out), needs(x), [xi, T, rest](Tape& t, std::size_t self) {
    const auto g = view(t.grad_buffer(self), 1, rest);
    view(t.grad_buffer(xi), T, rest).rowwise() += g.row(0) / static_cast<double>(T);
  });
}

Var row_outer(Var x) {
  require_rank("row_outer", x, 2);
  const std::size_t m = x.dim(0), c = x.dim(1);
  const Tensor& in = x.value();
  Tensor out({m, c * c});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t a = 0; a < c; ++a)
      for (std::size_t b = 0; b < c; ++b) out(i, a * c + b) = in(i, a) * in(i, b);
  const std::size_t xi = x.id;
  return x.tape->record("row_outer", std::move(out), needs(x), [xi, m, c](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    const Tensor& xv = t.value(xi);
    Tensor& gx = t.grad_buffer(xi);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t a = 0; a < c; ++a)
        for (std::size_t b = 0; b < c; ++b) {
          const double gi = g(i, a * c + b);
          gx(i, a) += gi * xv(i, b);
          gx(i, b) += gi * xv(i, a);
        }
  });
}

}  // namespace mstgnn
