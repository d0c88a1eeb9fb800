#include "ocvl/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ocvl/kernels.hpp"

namespace ocvl {

const Matrix& Var::value() const { return tape->value(id); }
const Matrix& Var::grad() const { return tape->grad(id); }

// ---- Tape ------------------------------------------------------------------

void Tape::add_live(std::size_t bytes) {
  live_bytes_ += bytes;
  peak_bytes_ = std::max(peak_bytes_, live_bytes_);
}

Var Tape::leaf(Matrix value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

Var Tape::record(Matrix value, std::initializer_list<Var> parents, BackwardFn backward,
                 std::size_t cache_bytes) {
  return record(std::move(value), std::vector<Var>(parents), std::move(backward), cache_bytes);
}

Var Tape::record(Matrix value, const std::vector<Var>& parents, BackwardFn backward,
                 std::size_t cache_bytes) {
  Node n;
  n.is_op = true;
  for (const Var& p : parents) {
    if (p.tape != this) throw ArgumentError("op mixes variables from different tapes");
    n.requires_grad = n.requires_grad || nodes_[p.id].requires_grad;
  }
  if (n.requires_grad) {
    n.backward = std::move(backward);
    n.cache_bytes = cache_bytes;
  }
  add_live(value.bytes() + n.cache_bytes);
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

const Matrix& Tape::grad(std::size_t id) const {
  const Node& n = nodes_[id];
  if (!n.has_grad) throw ArgumentError("node " + std::to_string(id) + " has no gradient");
  return n.grad;
}

Matrix& Tape::grad_ref(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    n.grad = Matrix(n.value.rows(), n.value.cols());
    n.has_grad = true;
    if (n.is_op) add_live(n.grad.bytes());
  }
  return n.grad;
}

void Tape::backward(Var root, bool release) {
  if (root.tape != this) throw ArgumentError("backward on a foreign variable");
  const Matrix& rv = nodes_[root.id].value;
  if (rv.rows() != 1 || rv.cols() != 1) {
    throw ShapeError("backward root must be 1x1, got " + rv.shape_string());
  }
  if (!nodes_[root.id].requires_grad) return;
  grad_ref(root.id)(0, 0) = 1.0;
  for (std::size_t i = root.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.has_grad && n.backward) n.backward(*this, i);
    if (release && n.is_op) {
      std::size_t freed = n.value.bytes() + n.cache_bytes;
      if (n.has_grad) freed += n.grad.bytes();
      live_bytes_ -= std::min(live_bytes_, freed);
      n.backward = nullptr;
      n.value = Matrix();
      n.grad = Matrix();
      n.has_grad = false;
      n.cache_bytes = 0;
    }
  }
}

// ---- ops -------------------------------------------------------------------

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

std::string shapes(const char* op, Var a, Var b) {
  return std::string(op) + ": " + a.value().shape_string() + " vs " + b.value().shape_string();
}

template <typename F>
Matrix map(const Matrix& a, F f) {
  Matrix out(a.rows(), a.cols());
  const double* in = a.data();
  double* o = out.data();
  for (std::size_t i = 0; i < a.size(); ++i) o[i] = f(in[i]);
  return out;
}

}  // namespace

Var matmul(Var a, Var b) {
  require(a.cols() == b.rows(), shapes("matmul", a, b));
  Matrix y;
  kernels::gemm_nn(a.value(), b.value(), y);
  return a.tape->record(std::move(y), {a, b}, [ia = a.id, ib = b.id](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(ia)) kernels::gemm_nt(g, t.value(ib), t.grad_ref(ia), true);
    if (t.requires_grad(ib)) kernels::gemm_tn(t.value(ia), g, t.grad_ref(ib), true);
  });
}

Var matmul_nt(Var a, Var b) {
  require(a.cols() == b.cols(), shapes("matmul_nt", a, b));
  Matrix y;
  kernels::gemm_nt(a.value(), b.value(), y);
  return a.tape->record(std::move(y), {a, b}, [ia = a.id, ib = b.id](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(ia)) kernels::gemm_nn(g, t.value(ib), t.grad_ref(ia), true);
    if (t.requires_grad(ib)) kernels::gemm_tn(g, t.value(ia), t.grad_ref(ib), true);
  });
}

Var matmul_tn(Var a, Var b) {
  require(a.rows() == b.rows(), shapes("matmul_tn", a, b));
  Matrix y;
  kernels::gemm_tn(a.value(), b.value(), y);
  return a.tape->record(std::move(y), {a, b}, [ia = a.id, ib = b.id](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(ia)) kernels::gemm_nt(t.value(ib), g, t.grad_ref(ia), true);
    if (t.requires_grad(ib)) kernels::gemm_nn(t.value(ia), g, t.grad_ref(ib), true);
  });
}

namespace {

void accumulate(Tape& t, std::size_t id, const Matrix& g, double s = 1.0) {
  if (!t.requires_grad(id)) return;
  Matrix& dst = t.grad_ref(id);
  double* d = dst.data();
  const double* src = g.data();
  for (std::size_t i = 0; i < g.size(); ++i) d[i] += s * src[i];
}

}  // namespace

Var add(Var a, Var b) {
  require(a.value().same_shape(b.value()), shapes("add", a, b));
  Matrix y = a.value();
  const double* pb = b.value().data();
  for (std::size_t i = 0; i < y.size(); ++i) y.data()[i] += pb[i];
  return a.tape->record(std::move(y), {a, b}, [ia = a.id, ib = b.id](Tape& t, std::size_t self) {
    accumulate(t, ia, t.grad(self));
    accumulate(t, ib, t.grad(self));
  });
}

Var sub(Var a, Var b) {
  require(a.value().same_shape(b.value()), shapes("sub", a, b));
  Matrix y = a.value();
  const double* pb = b.value().data();
  for (std::size_t i = 0; i < y.size(); ++i) y.data()[i] -= pb[i];
  return a.tape->record(std::move(y), {a, b}, [ia = a.id, ib = b.id](Tape& t, std::size_t self) {
    accumulate(t, ia, t.grad(self));
    accumulate(t, ib, t.grad(self), -1.0);
  });
}

Var mul(Var a, Var b) {
  require(a.value().same_shape(b.value()), shapes("mul", a, b));
  Matrix y = a.value();
  const double* pb = b.value().data();
  for (std::size_t i = 0; i < y.size(); ++i) y.data()[i] *= pb[i];
  return a.tape->record(std::move(y), {a, b}, [ia = a.id, ib = b.id](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    for (auto [dst, other] : {std::pair{ia, ib}, std::pair{ib, ia}}) {
      if (!t.requires_grad(dst)) continue;
      double* d = t.grad_ref(dst).data();
      const double* o = t.value(other).data();
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g.data()[i] * o[i];
    }
  });
}

Var add_n(const std::vector<Var>& terms) {
  if (terms.empty()) throw ArgumentError("add_n of no terms");
  Matrix y = terms.front().value();
  for (std::size_t k = 1; k < terms.size(); ++k) {
    require(terms[k].value().same_shape(y), shapes("add_n", terms.front(), terms[k]));
    const double* p = terms[k].value().data();
    for (std::size_t i = 0; i < y.size(); ++i) y.data()[i] += p[i];
  }
  std::vector<std::size_t> ids;
  for (const Var& v : terms) ids.push_back(v.id);
  return terms.front().tape->record(std::move(y), terms, [ids](Tape& t, std::size_t self) {
    for (std::size_t id : ids) accumulate(t, id, t.grad(self));
  });
}

Var add_row(Var a, Var row) {
  require(row.rows() == 1 && row.cols() == a.cols(), shapes("add_row", a, row));
  Matrix y = a.value();
  const double* r = row.value().data();
  for (std::size_t i = 0; i < y.rows(); ++i) {
    double* yr = y.data() + i * y.cols();
    for (std::size_t j = 0; j < y.cols(); ++j) yr[j] += r[j];
  }
  return a.tape->record(std::move(y), {a, row},
                        [ia = a.id, ir = row.id](Tape& t, std::size_t self) {
                          const Matrix& g = t.grad(self);
                          accumulate(t, ia, g);
                          if (t.requires_grad(ir)) {
                            double* d = t.grad_ref(ir).data();
                            for (std::size_t i = 0; i < g.rows(); ++i) {
                              const double* gr = g.data() + i * g.cols();
                              for (std::size_t j = 0; j < g.cols(); ++j) d[j] += gr[j];
                            }
                          }
                        });
}

Var mul_col(Var a, Var col) {
  require(col.cols() == 1 && col.rows() == a.rows(), shapes("mul_col", a, col));
  Matrix y = a.value();
  const double* c = col.value().data();
  for (std::size_t i = 0; i < y.rows(); ++i) {
    double* yr = y.data() + i * y.cols();
    for (std::size_t j = 0; j < y.cols(); ++j) yr[j] *= c[i];
  }
  return a.tape->record(std::move(y), {a, col},
                        [ia = a.id, ic = col.id](Tape& t, std::size_t self) {
                          const Matrix& g = t.grad(self);
                          const std::size_t n = g.cols();
                          if (t.requires_grad(ia)) {
                            double* d = t.grad_ref(ia).data();
                            const double* c = t.value(ic).data();
                            for (std::size_t i = 0; i < g.rows(); ++i)
                              for (std::size_t j = 0; j < n; ++j) d[i * n + j] += g.data()[i * n + j] * c[i];
                          }
                          if (t.requires_grad(ic)) {
                            double* d = t.grad_ref(ic).data();
                            const double* av = t.value(ia).data();
                            for (std::size_t i = 0; i < g.rows(); ++i) {
                              double s = 0.0;
                              for (std::size_t j = 0; j < n; ++j) s += g.data()[i * n + j] * av[i * n + j];
                              d[i] += s;
                            }
                          }
                        });
}

Var affine(Var a, double s, double shift) {
  Matrix y = map(a.value(), [=](double v) { return s * v + shift; });
  return a.tape->record(std::move(y), {a}, [ia = a.id, s](Tape& t, std::size_t self) {
    accumulate(t, ia, t.grad(self), s);
  });
}

Var scale(Var a, double s) { return affine(a, s, 0.0); }

Var relu(Var a) {
  Matrix y = map(a.value(), [](double v) { return v > 0.0 ? v : 0.0; });
  return a.tape->record(std::move(y), {a}, [ia = a.id](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const double* y = t.value(self).data();
    double* d = t.grad_ref(ia).data();
    for (std::size_t i = 0; i < g.size(); ++i)
      if (y[i] > 0.0) d[i] += g.data()[i];
  });
}

Var sigmoid(Var a) {
  Matrix y = map(a.value(), [](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  return a.tape->record(std::move(y), {a}, [ia = a.id](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const double* y = t.value(self).data();
    double* d = t.grad_ref(ia).data();
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g.data()[i] * y[i] * (1.0 - y[i]);
  });
}

Var tanh(Var a) {
  Matrix y = map(a.value(), [](double v) { return std::tanh(v); });
  return a.tape->record(std::move(y), {a}, [ia = a.id](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const double* y = t.value(self).data();
    double* d = t.grad_ref(ia).data();
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g.data()[i] * (1.0 - y[i] * y[i]);
  });
}

Var softmax_rows(Var logits) {
  require(logits.cols() > 0, "softmax_rows over zero columns");
  Matrix y;
  kernels::softmax_rows(logits.value(), y);
  return logits.tape->record(std::move(y), {logits}, [ia = logits.id](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& y = t.value(self);
    Matrix& d = t.grad_ref(ia);
    const std::size_t n = y.cols();
    for (std::size_t i = 0; i < y.rows(); ++i) {
      const double* yr = y.data() + i * n;
      const double* gr = g.data() + i * n;
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += gr[j] * yr[j];
      double* dr = d.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) dr[j] += yr[j] * (gr[j] - dot);
    }
  });
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  require(gamma.rows() == 1 && beta.rows() == 1 && gamma.cols() == x.cols() &&
              beta.cols() == x.cols(),
          shapes("layer_norm", x, gamma));
  Matrix y;
  Matrix normalized;
  std::vector<double> inv_std;
  kernels::layer_norm_rows(x.value(), gamma.value().values(), beta.value().values(), eps, y,
                           normalized, inv_std);
  const std::size_t cache = normalized.bytes() + inv_std.size() * sizeof(double);
  return x.tape->record(
      std::move(y), {x, gamma, beta},
      [ix = x.id, ig = gamma.id, ib = beta.id, normalized = std::move(normalized),
       inv_std = std::move(inv_std)](Tape& t, std::size_t self) {
        const Matrix& g = t.grad(self);
        const std::size_t rows = g.rows();
        const std::size_t n = g.cols();
        if (t.requires_grad(ib)) {
          double* d = t.grad_ref(ib).data();
          for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < n; ++j) d[j] += g(i, j);
        }
        if (t.requires_grad(ig)) {
          double* d = t.grad_ref(ig).data();
          for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < n; ++j) d[j] += g(i, j) * normalized(i, j);
        }
        if (t.requires_grad(ix)) {
          const double* gam = t.value(ig).data();
          Matrix& d = t.grad_ref(ix);
          std::vector<double> gn(n);
          for (std::size_t i = 0; i < rows; ++i) {
            double mean_gn = 0.0;
            double mean_gn_n = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
              gn[j] = g(i, j) * gam[j];
              mean_gn += gn[j];
              mean_gn_n += gn[j] * normalized(i, j);
            }
            mean_gn /= static_cast<double>(n);
            mean_gn_n /= static_cast<double>(n);
            for (std::size_t j = 0; j < n; ++j) {
              d(i, j) += inv_std[i] * (gn[j] - mean_gn - normalized(i, j) * mean_gn_n);
            }
          }
        }
      },
      cache);
}

Var normalize_cols(Var a, double eps) {
  const Matrix& av = a.value();
  std::vector<double> sums(av.cols(), 0.0);
  for (std::size_t i = 0; i < av.rows(); ++i)
    for (std::size_t j = 0; j < av.cols(); ++j) sums[j] += av(i, j) + eps;
  Matrix y(av.rows(), av.cols());
  for (std::size_t i = 0; i < av.rows(); ++i)
    for (std::size_t j = 0; j < av.cols(); ++j) y(i, j) = (av(i, j) + eps) / sums[j];
  const std::size_t cache = sums.size() * sizeof(double);
  return a.tape->record(
      std::move(y), {a},
      [ia = a.id, sums = std::move(sums)](Tape& t, std::size_t self) {
        const Matrix& g = t.grad(self);
        const Matrix& y = t.value(self);
        Matrix& d = t.grad_ref(ia);
        std::vector<double> dot(y.cols(), 0.0);
        for (std::size_t i = 0; i < y.rows(); ++i)
          for (std::size_t j = 0; j < y.cols(); ++j) dot[j] += g(i, j) * y(i, j);
        for (std::size_t i = 0; i < y.rows(); ++i)
          for (std::size_t j = 0; j < y.cols(); ++j) d(i, j) += (g(i, j) - dot[j]) / sums[j];
      },
      cache);
}

Var mean_rows(Var a) {
  const Matrix& av = a.value();
  require(av.rows() > 0, "mean_rows of an empty matrix");
  Matrix y(1, av.cols());
  for (std::size_t i = 0; i < av.rows(); ++i)
    for (std::size_t j = 0; j < av.cols(); ++j) y(0, j) += av(i, j);
  const double inv = 1.0 / static_cast<double>(av.rows());
  for (double& v : y.values()) v *= inv;
  return a.tape->record(std::move(y), {a}, [ia = a.id, inv](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    Matrix& d = t.grad_ref(ia);
    for (std::size_t i = 0; i < d.rows(); ++i)
      for (std::size_t j = 0; j < d.cols(); ++j) d(i, j) += g(0, j) * inv;
  });
}

Var mse(Var pred, const Matrix& target) {
  require_same_shape(pred.value(), target, "mse");
  require(!target.empty(), "mse of empty tensors");
  Matrix diff(target.rows(), target.cols());
  double s = 0.0;
  for (std::size_t i = 0; i < diff.size(); ++i) {
    diff.data()[i] = pred.value().data()[i] - target.data()[i];
    s += diff.data()[i] * diff.data()[i];
  }
  const double n = static_cast<double>(diff.size());
  const std::size_t cache = diff.bytes();
  return pred.tape->record(
      Matrix(1, 1, s / n), {pred},
      [ip = pred.id, diff = std::move(diff), n](Tape& t, std::size_t self) {
        const double g = t.grad(self)(0, 0) * 2.0 / n;
        double* d = t.grad_ref(ip).data();
        for (std::size_t i = 0; i < diff.size(); ++i) d[i] += g * diff.data()[i];
      },
      cache);
}

Var sum_all(Var a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return a.tape->record(Matrix(1, 1, s), {a}, [ia = a.id](Tape& t, std::size_t self) {
    const double g = t.grad(self)(0, 0);
    for (double& v : t.grad_ref(ia).values()) v += g;
  });
}

Var slice_rows(Var a, std::size_t start, std::size_t count) {
  require(start + count <= a.rows(), "slice_rows out of range for " + a.value().shape_string());
  const std::size_t n = a.cols();
  Matrix y(count, n);
  std::copy_n(a.value().data() + start * n, count * n, y.data());
  return a.tape->record(std::move(y), {a}, [ia = a.id, start](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    double* d = t.grad_ref(ia).data() + start * g.cols();
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g.data()[i];
  });
}

Var slice_cols(Var a, std::size_t start, std::size_t count) {
  require(start + count <= a.cols(), "slice_cols out of range for " + a.value().shape_string());
  Matrix y(a.rows(), count);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < count; ++j) y(i, j) = a.value()(i, start + j);
  return a.tape->record(std::move(y), {a}, [ia = a.id, start](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    Matrix& d = t.grad_ref(ia);
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) d(i, start + j) += g(i, j);
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ArgumentError("concat_rows of nothing");
  const std::size_t n = parts.front().cols();
  std::size_t rows = 0;
  for (const Var& p : parts) {
    require(p.cols() == n, shapes("concat_rows", parts.front(), p));
    rows += p.rows();
  }
  Matrix y(rows, n);
  std::vector<std::size_t> ids;
  std::size_t off = 0;
  for (const Var& p : parts) {
    std::copy_n(p.value().data(), p.value().size(), y.data() + off * n);
    off += p.rows();
    ids.push_back(p.id);
  }
  return parts.front().tape->record(std::move(y), parts, [ids](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    std::size_t off = 0;
    for (std::size_t id : ids) {
      const std::size_t count = t.value(id).size();
      if (t.requires_grad(id)) {
        double* d = t.grad_ref(id).data();
        for (std::size_t i = 0; i < count; ++i) d[i] += g.data()[off + i];
      }
      off += count;
    }
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ArgumentError("concat_cols of nothing");
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  for (const Var& p : parts) {
    require(p.rows() == rows, shapes("concat_cols", parts.front(), p));
    cols += p.cols();
  }
  Matrix y(rows, cols);
  std::vector<std::size_t> ids;
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Matrix& v = p.value();
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < v.cols(); ++j) y(i, off + j) = v(i, j);
    off += v.cols();
    ids.push_back(p.id);
  }
  return parts.front().tape->record(std::move(y), parts, [ids](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    std::size_t off = 0;
    for (std::size_t id : ids) {
      const std::size_t c = t.value(id).cols();
      if (t.requires_grad(id)) {
        Matrix& d = t.grad_ref(id);
        for (std::size_t i = 0; i < g.rows(); ++i)
          for (std::size_t j = 0; j < c; ++j) d(i, j) += g(i, off + j);
      }
      off += c;
    }
  });
}

Var stop_gradient(Var a) { return a.tape->constant(a.value()); }

}  // namespace ocvl
