#include "graphst/tape.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "graphst/errors.hpp"

namespace graphst {

namespace {

double stable_softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

constexpr double kNormFloor = 1e-12;

}  // namespace

const Matrix& Var::value() const { return tape_->node(*this).value; }

bool Var::requires_grad() const { return tape_->node(*this).requires_grad; }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw ShapeError("scalar(): node is not 1x1");
  return v[0];
}

const Tape::Node& Tape::node(Var v) const {
  if (v.tape() != this || v.id() < 0 || v.id() >= static_cast<int>(nodes_.size()))
    throw ShapeError("Var does not belong to this tape");
  return nodes_[v.id()];
}

int Tape::push(Matrix value, bool requires_grad, BackwardFn backward, const char* op) {
  if (!value.all_finite())
    throw NumericalError(std::string(op) + ": non-finite values in result");
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.backward = requires_grad ? std::move(backward) : BackwardFn();
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

void Tape::accumulate(int node, const Matrix& g) {
  if (!nodes_[node].requires_grad) return;
  Matrix& slot = grads_[node];
  if (slot.empty()) {
    slot = g;
    return;
  }
  if (!slot.same_shape(g)) throw ShapeError("gradient shape mismatch during accumulation");
  for (std::size_t i = 0; i < slot.size(); ++i) slot[i] += g[i];
}

Var Tape::leaf(Matrix value, bool requires_grad) {
  const int id = push(std::move(value), requires_grad, BackwardFn(), "leaf");
  return Var(this, id);
}

Var Tape::matmul(Var a, Var b) {
  const Matrix& av = node(a).value;
  const Matrix& bv = node(b).value;
  if (av.cols() != bv.rows()) throw ShapeError("matmul: inner dimensions disagree");
  Matrix out = matmul_value(av, bv);
  const int ai = a.id(), bi = b.id();
  const int id = push(std::move(out), any_grad(a, b),
                      [this, ai, bi](const Matrix& g) {
                        accumulate(ai, matmul_nt(g, value_of(bi)));
                        accumulate(bi, matmul_tn(value_of(ai), g));
                      },
                      "matmul");
  return Var(this, id);
}

Var Tape::transpose(Var a) {
  Matrix out = node(a).value.transposed();
  const int ai = a.id();
  const int id = push(std::move(out), any_grad(a),
                      [this, ai](const Matrix& g) { accumulate(ai, g.transposed()); },
                      "transpose");
  return Var(this, id);
}

Var Tape::add(Var a, Var b) {
  const Matrix& av = node(a).value;
  const Matrix& bv = node(b).value;
  if (!av.same_shape(bv)) throw ShapeError("add: shape mismatch");
  Matrix out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  const int ai = a.id(), bi = b.id();
  const int id = push(std::move(out), any_grad(a, b),
                      [this, ai, bi](const Matrix& g) {
                        accumulate(ai, g);
                        accumulate(bi, g);
                      },
                      "add");
  return Var(this, id);
}

Var Tape::sub(Var a, Var b) {
  const Matrix& av = node(a).value;
  const Matrix& bv = node(b).value;
  if (!av.same_shape(bv)) throw ShapeError("sub: shape mismatch");
  Matrix out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  const int ai = a.id(), bi = b.id();
  const int id = push(std::move(out), any_grad(a, b),
                      [this, ai, bi](const Matrix& g) {
                        accumulate(ai, g);
                        Matrix neg = g;
                        for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -neg[i];
                        accumulate(bi, neg);
                      },
                      "sub");
  return Var(this, id);
}

Var Tape::hadamard(Var a, Var b) {
  const Matrix& av = node(a).value;
  const Matrix& bv = node(b).value;
  if (!av.same_shape(bv)) throw ShapeError("hadamard: shape mismatch");
  Matrix out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  const int ai = a.id(), bi = b.id();
  const int id = push(std::move(out), any_grad(a, b),
                      [this, ai, bi](const Matrix& g) {
                        const Matrix& av2 = value_of(ai);
                        const Matrix& bv2 = value_of(bi);
                        Matrix da = g, db = g;
                        for (std::size_t i = 0; i < g.size(); ++i) {
                          da[i] *= bv2[i];
                          db[i] *= av2[i];
                        }
                        accumulate(ai, da);
                        accumulate(bi, db);
                      },
                      "hadamard");
  return Var(this, id);
}

Var Tape::affine(Var a, double scale, double shift) {
  Matrix out = node(a).value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = scale * out[i] + shift;
  const int ai = a.id();
  const int id = push(std::move(out), any_grad(a),
                      [this, ai, scale](const Matrix& g) {
                        Matrix da = g;
                        for (std::size_t i = 0; i < da.size(); ++i) da[i] *= scale;
                        accumulate(ai, da);
                      },
                      "affine");
  return Var(this, id);
}

Var Tape::add_rowvec(Var a, Var row) {
  const Matrix& av = node(a).value;
  const Matrix& rv = node(row).value;
  if (rv.rows() != 1 || rv.cols() != av.cols())
    throw ShapeError("add_rowvec: row vector must be 1 x cols");
  Matrix out = av;
  for (int i = 0; i < out.rows(); ++i)
    for (int j = 0; j < out.cols(); ++j) out.at(i, j) += rv.at(0, j);
  const int ai = a.id(), ri = row.id();
  const int id = push(std::move(out), any_grad(a, row),
                      [this, ai, ri](const Matrix& g) {
                        accumulate(ai, g);
                        Matrix dr(1, g.cols());
                        for (int i = 0; i < g.rows(); ++i)
                          for (int j = 0; j < g.cols(); ++j) dr.at(0, j) += g.at(i, j);
                        accumulate(ri, dr);
                      },
                      "add_rowvec");
  return Var(this, id);
}

Var Tape::relu(Var a) {
  Matrix out = node(a).value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
  const int ai = a.id();
  const int id = push(std::move(out), any_grad(a),
                      [this, ai](const Matrix& g) {
                        const Matrix& av = value_of(ai);
                        Matrix da = g;
                        for (std::size_t i = 0; i < da.size(); ++i)
                          if (av[i] <= 0.0) da[i] = 0.0;
                        accumulate(ai, da);
                      },
                      "relu");
  return Var(this, id);
}

Var Tape::sigmoid(Var a) {
  Matrix out = node(a).value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = stable_sigmoid(out[i]);
  const int ai = a.id();
  const int out_id = push(std::move(out), any_grad(a), BackwardFn(), "sigmoid");
  nodes_[out_id].backward = [this, ai, out_id](const Matrix& g) {
    const Matrix& y = value_of(out_id);
    Matrix da = g;
    for (std::size_t i = 0; i < da.size(); ++i) da[i] *= y[i] * (1.0 - y[i]);
    accumulate(ai, da);
  };
  return Var(this, out_id);
}

Var Tape::softplus(Var a) {
  Matrix out = node(a).value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = stable_softplus(out[i]);
  const int ai = a.id();
  const int id = push(std::move(out), any_grad(a),
                      [this, ai](const Matrix& g) {
                        const Matrix& av = value_of(ai);
                        Matrix da = g;
                        for (std::size_t i = 0; i < da.size(); ++i)
                          da[i] *= stable_sigmoid(av[i]);
                        accumulate(ai, da);
                      },
                      "softplus");
  return Var(this, id);
}

Var Tape::exp(Var a) {
  Matrix out = node(a).value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(out[i]);
  const int ai = a.id();
  const int out_id = push(std::move(out), any_grad(a), BackwardFn(), "exp");
  nodes_[out_id].backward = [this, ai, out_id](const Matrix& g) {
    const Matrix& y = value_of(out_id);
    Matrix da = g;
    for (std::size_t i = 0; i < da.size(); ++i) da[i] *= y[i];
    accumulate(ai, da);
  };
  return Var(this, out_id);
}

Var Tape::log(Var a) {
  Matrix out = node(a).value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(out[i]);
  const int ai = a.id();
  const int id = push(std::move(out), any_grad(a),
                      [this, ai](const Matrix& g) {
                        const Matrix& av = value_of(ai);
                        Matrix da = g;
                        for (std::size_t i = 0; i < da.size(); ++i) da[i] /= av[i];
                        accumulate(ai, da);
                      },
                      "log");
  return Var(this, id);
}

Var Tape::pow(Var a, double p) {
  Matrix out = node(a).value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::pow(out[i], p);
  const int ai = a.id();
  const int id = push(std::move(out), any_grad(a),
                      [this, ai, p](const Matrix& g) {
                        const Matrix& av = value_of(ai);
                        Matrix da = g;
                        for (std::size_t i = 0; i < da.size(); ++i)
                          da[i] *= p * std::pow(av[i], p - 1.0);
                        accumulate(ai, da);
                      },
                      "pow");
  return Var(this, id);
}

Var Tape::clamp(Var a, double lo, double hi) {
  if (lo > hi) throw ConfigError("clamp: lo > hi");
  Matrix out = node(a).value;
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = out[i] < lo ? lo : (out[i] > hi ? hi : out[i]);
  const int ai = a.id();
  const int id = push(std::move(out), any_grad(a),
                      [this, ai, lo, hi](const Matrix& g) {
                        const Matrix& av = value_of(ai);
                        Matrix da = g;
                        for (std::size_t i = 0; i < da.size(); ++i)
                          if (av[i] <= lo || av[i] >= hi) da[i] = 0.0;
                        accumulate(ai, da);
                      },
                      "clamp");
  return Var(this, id);
}

Var Tape::row_sum(Var a) {
  const Matrix& av = node(a).value;
  Matrix out(av.rows(), 1);
  for (int i = 0; i < av.rows(); ++i) {
    double s = 0.0;
    for (int j = 0; j < av.cols(); ++j) s += av.at(i, j);
    out.at(i, 0) = s;
  }
  const int ai = a.id();
  const int id = push(std::move(out), any_grad(a),
                      [this, ai](const Matrix& g) {
                        const Matrix& av2 = value_of(ai);
                        Matrix da(av2.rows(), av2.cols());
                        for (int i = 0; i < da.rows(); ++i)
                          for (int j = 0; j < da.cols(); ++j) da.at(i, j) = g.at(i, 0);
                        accumulate(ai, da);
                      },
                      "row_sum");
  return Var(this, id);
}

Var Tape::row_normalize(Var a) {
  const Matrix& av = node(a).value;
  std::vector<double> norms(av.rows());
  Matrix out = av;
  for (int i = 0; i < av.rows(); ++i) {
    double s = 0.0;
    for (int j = 0; j < av.cols(); ++j) s += av.at(i, j) * av.at(i, j);
    norms[i] = std::max(std::sqrt(s), kNormFloor);
    for (int j = 0; j < av.cols(); ++j) out.at(i, j) /= norms[i];
  }
  const int ai = a.id();
  const int out_id = push(std::move(out), any_grad(a), BackwardFn(), "row_normalize");
  nodes_[out_id].backward = [this, ai, out_id, norms](const Matrix& g) {
    const Matrix& y = value_of(out_id);
    Matrix da = g;
    for (int i = 0; i < g.rows(); ++i) {
      double gy = 0.0;
      for (int j = 0; j < g.cols(); ++j) gy += g.at(i, j) * y.at(i, j);
      for (int j = 0; j < g.cols(); ++j)
        da.at(i, j) = (g.at(i, j) - gy * y.at(i, j)) / norms[i];
    }
    accumulate(ai, da);
  };
  return Var(this, out_id);
}

Var Tape::row_dot(Var a, Var b) {
  const Matrix& av = node(a).value;
  const Matrix& bv = node(b).value;
  if (!av.same_shape(bv)) throw ShapeError("row_dot: shape mismatch");
  Matrix out(av.rows(), 1);
  for (int i = 0; i < av.rows(); ++i) {
    double s = 0.0;
    for (int j = 0; j < av.cols(); ++j) s += av.at(i, j) * bv.at(i, j);
    out.at(i, 0) = s;
  }
  const int ai = a.id(), bi = b.id();
  const int id = push(std::move(out), any_grad(a, b),
                      [this, ai, bi](const Matrix& g) {
                        const Matrix& av2 = value_of(ai);
                        const Matrix& bv2 = value_of(bi);
                        Matrix da(av2.rows(), av2.cols());
                        Matrix db(av2.rows(), av2.cols());
                        for (int i = 0; i < da.rows(); ++i)
                          for (int j = 0; j < da.cols(); ++j) {
                            da.at(i, j) = g.at(i, 0) * bv2.at(i, j);
                            db.at(i, j) = g.at(i, 0) * av2.at(i, j);
                          }
                        accumulate(ai, da);
                        accumulate(bi, db);
                      },
                      "row_dot");
  return Var(this, id);
}

Var Tape::row_softmax(Var a) {
  const Matrix& av = node(a).value;
  Matrix out = av;
  for (int i = 0; i < av.rows(); ++i) {
    double mx = av.at(i, 0);
    for (int j = 1; j < av.cols(); ++j) mx = std::max(mx, av.at(i, j));
    double z = 0.0;
    for (int j = 0; j < av.cols(); ++j) {
      out.at(i, j) = std::exp(av.at(i, j) - mx);
      z += out.at(i, j);
    }
    for (int j = 0; j < av.cols(); ++j) out.at(i, j) /= z;
  }
  const int ai = a.id();
  const int out_id = push(std::move(out), any_grad(a), BackwardFn(), "row_softmax");
  nodes_[out_id].backward = [this, ai, out_id](const Matrix& g) {
    const Matrix& y = value_of(out_id);
    Matrix da = g;
    for (int i = 0; i < g.rows(); ++i) {
      double gy = 0.0;
      for (int j = 0; j < g.cols(); ++j) gy += g.at(i, j) * y.at(i, j);
      for (int j = 0; j < g.cols(); ++j) da.at(i, j) = y.at(i, j) * (g.at(i, j) - gy);
    }
    accumulate(ai, da);
  };
  return Var(this, out_id);
}

Var Tape::logsumexp_rows(Var a) {
  const Matrix& av = node(a).value;
  if (av.cols() < 1) throw ShapeError("logsumexp_rows: empty rows");
  Matrix out(av.rows(), 1);
  for (int i = 0; i < av.rows(); ++i) {
    double mx = av.at(i, 0);
    for (int j = 1; j < av.cols(); ++j) mx = std::max(mx, av.at(i, j));
    double z = 0.0;
    for (int j = 0; j < av.cols(); ++j) z += std::exp(av.at(i, j) - mx);
    out.at(i, 0) = mx + std::log(z);
  }
  const int ai = a.id();
  const int out_id = push(std::move(out), any_grad(a), BackwardFn(), "logsumexp_rows");
  nodes_[out_id].backward = [this, ai, out_id](const Matrix& g) {
    const Matrix& av2 = value_of(ai);
    const Matrix& y = value_of(out_id);
    Matrix da(av2.rows(), av2.cols());
    for (int i = 0; i < da.rows(); ++i)
      for (int j = 0; j < da.cols(); ++j)
        da.at(i, j) = g.at(i, 0) * std::exp(av2.at(i, j) - y.at(i, 0));
    accumulate(ai, da);
  };
  return Var(this, out_id);
}

Var Tape::diagonal(Var a) {
  const Matrix& av = node(a).value;
  if (av.rows() != av.cols()) throw ShapeError("diagonal: matrix must be square");
  Matrix out(av.rows(), 1);
  for (int i = 0; i < av.rows(); ++i) out.at(i, 0) = av.at(i, i);
  const int ai = a.id();
  const int id = push(std::move(out), any_grad(a),
                      [this, ai](const Matrix& g) {
                        const int n = g.rows();
                        Matrix da(n, n);
                        for (int i = 0; i < n; ++i) da.at(i, i) = g.at(i, 0);
                        accumulate(ai, da);
                      },
                      "diagonal");
  return Var(this, id);
}

Var Tape::zero_diagonal(Var a) {
  const Matrix& av = node(a).value;
  if (av.rows() != av.cols()) throw ShapeError("zero_diagonal: matrix must be square");
  Matrix out = av;
  for (int i = 0; i < out.rows(); ++i) out.at(i, i) = 0.0;
  const int ai = a.id();
  const int id = push(std::move(out), any_grad(a),
                      [this, ai](const Matrix& g) {
                        Matrix da = g;
                        for (int i = 0; i < da.rows(); ++i) da.at(i, i) = 0.0;
                        accumulate(ai, da);
                      },
                      "zero_diagonal");
  return Var(this, id);
}

Var Tape::symmetrize(Var a) {
  const Matrix& av = node(a).value;
  if (av.rows() != av.cols()) throw ShapeError("symmetrize: matrix must be square");
  Matrix out(av.rows(), av.cols());
  for (int i = 0; i < av.rows(); ++i)
    for (int j = 0; j < av.cols(); ++j) out.at(i, j) = 0.5 * (av.at(i, j) + av.at(j, i));
  const int ai = a.id();
  const int id = push(std::move(out), any_grad(a),
                      [this, ai](const Matrix& g) {
                        Matrix da(g.rows(), g.cols());
                        for (int i = 0; i < g.rows(); ++i)
                          for (int j = 0; j < g.cols(); ++j)
                            da.at(i, j) = 0.5 * (g.at(i, j) + g.at(j, i));
                        accumulate(ai, da);
                      },
                      "symmetrize");
  return Var(this, id);
}

Var Tape::slice_rows(Var a, int begin, int end) {
  const Matrix& av = node(a).value;
  if (begin < 0 || end > av.rows() || begin > end)
    throw ShapeError("slice_rows: range out of bounds");
  Matrix out(end - begin, av.cols());
  for (int i = begin; i < end; ++i)
    for (int j = 0; j < av.cols(); ++j) out.at(i - begin, j) = av.at(i, j);
  const int ai = a.id();
  const int rows = av.rows();
  const int id = push(std::move(out), any_grad(a),
                      [this, ai, begin, rows](const Matrix& g) {
                        Matrix da(rows, g.cols());
                        for (int i = 0; i < g.rows(); ++i)
                          for (int j = 0; j < g.cols(); ++j) da.at(begin + i, j) = g.at(i, j);
                        accumulate(ai, da);
                      },
                      "slice_rows");
  return Var(this, id);
}

Var Tape::sum_all(Var a) {
  const Matrix& av = node(a).value;
  Matrix out(1, 1);
  out[0] = av.sum();
  const int ai = a.id();
  const int id = push(std::move(out), any_grad(a),
                      [this, ai](const Matrix& g) {
                        const Matrix& av2 = value_of(ai);
                        accumulate(ai, Matrix(av2.rows(), av2.cols(), g[0]));
                      },
                      "sum_all");
  return Var(this, id);
}

Var Tape::mean_all(Var a) {
  const Matrix& av = node(a).value;
  if (av.size() == 0) throw ShapeError("mean_all: empty matrix");
  const double inv = 1.0 / static_cast<double>(av.size());
  Matrix out(1, 1);
  out[0] = av.sum() * inv;
  const int ai = a.id();
  const int id = push(std::move(out), any_grad(a),
                      [this, ai, inv](const Matrix& g) {
                        const Matrix& av2 = value_of(ai);
                        accumulate(ai, Matrix(av2.rows(), av2.cols(), g[0] * inv));
                      },
                      "mean_all");
  return Var(this, id);
}

void Tape::backward(Var loss) {
  const Matrix& lv = node(loss).value;
  if (lv.rows() != 1 || lv.cols() != 1) throw ShapeError("backward: loss must be 1x1");
  grads_.assign(nodes_.size(), Matrix());
  grads_[loss.id()] = Matrix(1, 1, 1.0);
  for (int i = loss.id(); i >= 0; --i) {
    if (grads_[i].empty() || !nodes_[i].backward) continue;
    nodes_[i].backward(grads_[i]);
  }
}

Matrix Tape::grad(Var v) const {
  const Node& n = node(v);
  if (v.id() < static_cast<int>(grads_.size()) && !grads_[v.id()].empty())
    return grads_[v.id()];
  return Matrix(n.value.rows(), n.value.cols());
}

Var info_nce(Var anchors, Var candidates, double tau) {
  if (tau <= 0.0) throw ConfigError("info_nce: temperature must be positive");
  Tape& t = *anchors.tape();
  const Matrix& av = anchors.value();
  const Matrix& cv = candidates.value();
  if (!av.same_shape(cv)) throw ShapeError("info_nce: anchors/candidates shape mismatch");
  if (av.rows() < 1) throw ShapeError("info_nce: need at least one row");
  for (int i = 0; i < av.rows(); ++i) {
    double na = 0.0, nc = 0.0;
    for (int j = 0; j < av.cols(); ++j) {
      na += av.at(i, j) * av.at(i, j);
      nc += cv.at(i, j) * cv.at(i, j);
    }
    if (na == 0.0 || nc == 0.0)
      throw DegenerateInputError("info_nce: zero-norm row at index " + std::to_string(i));
  }
  Var sims = t.affine(
      t.matmul(t.row_normalize(anchors), t.transpose(t.row_normalize(candidates))),
      1.0 / tau);
  Var loss_per_row = t.sub(t.logsumexp_rows(sims), t.diagonal(sims));
  return t.mean_all(loss_per_row);
}

}  // namespace graphst
