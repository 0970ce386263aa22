#include "egovos/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Core>

#include "egovos/errors.hpp"

namespace egovos::ops {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

MapMat as_matrix(Tensor& t, int rows, int cols) { return MapMat(t.data(), rows, cols); }
ConstMapMat as_matrix(const Tensor& t, int rows, int cols) {
  return ConstMapMat(t.data(), rows, cols);
}

// Grad buffer of the i-th parent, or nullptr when it does not need one.
Tensor* parent_grad(detail::Node& self, std::size_t i) {
  auto& p = self.parents[i];
  return p->requires_grad ? &p->grad_buffer() : nullptr;
}

void require(bool cond, const std::string& what) {
  if (!cond) throw ShapeError(what);
}

struct Taps {
  std::vector<int> i0, i1;
  std::vector<double> w0, w1;
};

Taps bilinear_taps(int in, int out) {
  Taps t;
  t.i0.resize(out);
  t.i1.resize(out);
  t.w0.resize(out);
  t.w1.resize(out);
  const double ratio = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    double src = (o + 0.5) * ratio - 0.5;
    if (src < 0) src = 0;
    int lo = static_cast<int>(std::floor(src));
    if (lo > in - 1) lo = in - 1;
    const int hi = std::min(lo + 1, in - 1);
    const double frac = src - lo;
    t.i0[o] = lo;
    t.i1[o] = hi;
    t.w0[o] = 1.0 - frac;
    t.w1[o] = frac;
  }
  return t;
}

Tensor resize_forward(const Tensor& x, const Taps& ty, const Taps& tx, int out_h, int out_w) {
  const int c = x.dim(0), h = x.dim(1);
  Tensor rows({c, h, out_w});
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y)
      for (int ox = 0; ox < out_w; ++ox)
        rows.at(ch, y, ox) = tx.w0[ox] * x.at(ch, y, tx.i0[ox]) + tx.w1[ox] * x.at(ch, y, tx.i1[ox]);
  Tensor out({c, out_h, out_w});
  for (int ch = 0; ch < c; ++ch)
    for (int oy = 0; oy < out_h; ++oy)
      for (int ox = 0; ox < out_w; ++ox)
        out.at(ch, oy, ox) =
            ty.w0[oy] * rows.at(ch, ty.i0[oy], ox) + ty.w1[oy] * rows.at(ch, ty.i1[oy], ox);
  return out;
}

void resize_backward(const Tensor& gout, const Taps& ty, const Taps& tx, Tensor& gin) {
  const int c = gin.dim(0), h = gin.dim(1);
  const int out_h = gout.dim(1), out_w = gout.dim(2);
  Tensor rows({c, h, out_w});
  for (int ch = 0; ch < c; ++ch)
    for (int oy = 0; oy < out_h; ++oy)
      for (int ox = 0; ox < out_w; ++ox) {
        const double g = gout.at(ch, oy, ox);
        rows.at(ch, ty.i0[oy], ox) += ty.w0[oy] * g;
        rows.at(ch, ty.i1[oy], ox) += ty.w1[oy] * g;
      }
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y)
      for (int ox = 0; ox < out_w; ++ox) {
        const double g = rows.at(ch, y, ox);
        gin.at(ch, y, tx.i0[ox]) += tx.w0[ox] * g;
        gin.at(ch, y, tx.i1[ox]) += tx.w1[ox] * g;
      }
}

}  // namespace

Var add(const Var& a, const Var& b) {
  require(a.value().same_shape(b.value()), "add: shape mismatch " + shape_string(a.shape()) +
                                               " vs " + shape_string(b.shape()));
  Tensor out = a.value();
  out += b.value();
  return Var::from_op(std::move(out), {a, b}, [](detail::Node& self) {
    for (std::size_t i = 0; i < 2; ++i)
      if (Tensor* g = parent_grad(self, i)) *g += self.grad;
  });
}

Var scale(const Var& a, double s) {
  Tensor out = a.value();
  out *= s;
  return Var::from_op(std::move(out), {a}, [s](detail::Node& self) {
    Tensor* g = parent_grad(self, 0);
    for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += s * self.grad[i];
  });
}

Var relu(const Var& x) {
  Tensor out = x.value();
  for (double& v : out.values()) v = v > 0 ? v : 0.0;
  return Var::from_op(std::move(out), {x}, [](detail::Node& self) {
    Tensor* g = parent_grad(self, 0);
    const Tensor& in = self.parents[0]->value;
    for (std::size_t i = 0; i < g->size(); ++i)
      if (in[i] > 0) (*g)[i] += self.grad[i];
  });
}

Var sum(const std::vector<Var>& scalars) {
  require(!scalars.empty(), "sum: no terms");
  double total = 0;
  for (const Var& s : scalars) {
    require(s.value().size() == 1, "sum: terms must be scalars");
    total += s.value()[0];
  }
  return Var::from_op(Tensor({1}, total), scalars, [](detail::Node& self) {
    for (std::size_t i = 0; i < self.parents.size(); ++i)
      if (Tensor* g = parent_grad(self, i)) (*g)[0] += self.grad[0];
  });
}

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad, Padding mode) {
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  require(xv.rank() == 3 && wv.rank() == 4, "conv2d: expects x [C,H,W] and w [O,C,k,k]");
  const int cin = xv.dim(0), h = xv.dim(1), wd = xv.dim(2);
  const int cout = wv.dim(0), k = wv.dim(2);
  require(wv.dim(1) == cin && wv.dim(3) == k,
          "conv2d: weight " + shape_string(wv.shape()) + " does not match input " +
              shape_string(xv.shape()));
  require(!b.defined() || (b.value().rank() == 1 && b.value().dim(0) == cout),
          "conv2d: bias shape mismatch");
  const int oh = (h + 2 * pad - k) / stride + 1;
  const int ow = (wd + 2 * pad - k) / stride + 1;
  require(oh > 0 && ow > 0, "conv2d: input " + shape_string(xv.shape()) + " too small");
  const int rows = cin * k * k, cols = oh * ow;
  const bool replicate = mode == Padding::kReplicate;

  auto col = std::make_shared<Tensor>(std::vector<int>{rows, cols});
  for (int ci = 0; ci < cin; ++ci)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        double* dst = col->data() + static_cast<std::size_t>((ci * k + ky) * k + kx) * cols;
        for (int oy = 0; oy < oh; ++oy) {
          int iy = oy * stride + ky - pad;
          if (replicate) iy = std::clamp(iy, 0, h - 1);
          for (int ox = 0; ox < ow; ++ox) {
            int ix = ox * stride + kx - pad;
            if (replicate) ix = std::clamp(ix, 0, wd - 1);
            dst[oy * ow + ox] =
                (iy >= 0 && iy < h && ix >= 0 && ix < wd) ? xv.at(ci, iy, ix) : 0.0;
          }
        }
      }

  Tensor out({cout, oh, ow});
  auto om = as_matrix(out, cout, cols);
  om.noalias() = as_matrix(wv, cout, rows) * as_matrix(*col, rows, cols);
  if (b.defined()) om.colwise() += Eigen::Map<const Eigen::VectorXd>(b.value().data(), cout);

  std::vector<Var> parents{x, w};
  if (b.defined()) parents.push_back(b);
  return Var::from_op(
      std::move(out), std::move(parents),
      [col, cin, h, wd, cout, k, stride, pad, oh, ow, rows, cols, replicate](detail::Node& self) {
        auto gy = as_matrix(static_cast<const Tensor&>(self.grad), cout, cols);
        if (Tensor* gw = parent_grad(self, 1))
          as_matrix(*gw, cout, rows).noalias() += gy * as_matrix(*col, rows, cols).transpose();
        if (self.parents.size() > 2)
          if (Tensor* gb = parent_grad(self, 2))
            Eigen::Map<Eigen::VectorXd>(gb->data(), cout) += gy.rowwise().sum();
        if (Tensor* gx = parent_grad(self, 0)) {
          Tensor gcol({rows, cols});
          as_matrix(gcol, rows, cols).noalias() =
              as_matrix(static_cast<const Tensor&>(self.parents[1]->value), cout, rows)
                  .transpose() *
              gy;
          for (int ci = 0; ci < cin; ++ci)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const double* src =
                    gcol.data() + static_cast<std::size_t>((ci * k + ky) * k + kx) * cols;
                for (int oy = 0; oy < oh; ++oy) {
                  int iy = oy * stride + ky - pad;
                  if (replicate) iy = std::clamp(iy, 0, h - 1);
                  if (iy < 0 || iy >= h) continue;
                  for (int ox = 0; ox < ow; ++ox) {
                    int ix = ox * stride + kx - pad;
                    if (replicate) ix = std::clamp(ix, 0, wd - 1);
                    if (ix >= 0 && ix < wd) gx->at(ci, iy, ix) += src[oy * ow + ox];
                  }
                }
              }
        }
      });
}

Var pointwise_linear(const Var& x, const Var& w, const Var& b) {
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  require(xv.rank() >= 2 && wv.rank() == 2, "pointwise_linear: expects x [C,...], w [O,C]");
  const int cin = xv.dim(0), cout = wv.dim(0);
  require(wv.dim(1) == cin, "pointwise_linear: weight " + shape_string(wv.shape()) +
                                " does not match input channels " + std::to_string(cin));
  require(!b.defined() || (b.value().rank() == 1 && b.value().dim(0) == cout),
          "pointwise_linear: bias shape mismatch");
  const int cols = static_cast<int>(xv.size() / cin);
  std::vector<int> shape = xv.shape();
  shape[0] = cout;
  Tensor out(shape);
  auto om = as_matrix(out, cout, cols);
  om.noalias() = as_matrix(wv, cout, cin) * as_matrix(xv, cin, cols);
  if (b.defined()) om.colwise() += Eigen::Map<const Eigen::VectorXd>(b.value().data(), cout);

  std::vector<Var> parents{x, w};
  if (b.defined()) parents.push_back(b);
  return Var::from_op(std::move(out), std::move(parents), [cin, cout, cols](detail::Node& self) {
    auto gy = as_matrix(static_cast<const Tensor&>(self.grad), cout, cols);
    const Tensor& xin = self.parents[0]->value;
    const Tensor& wv = self.parents[1]->value;
    if (Tensor* gw = parent_grad(self, 1))
      as_matrix(*gw, cout, cin).noalias() += gy * as_matrix(xin, cin, cols).transpose();
    if (self.parents.size() > 2)
      if (Tensor* gb = parent_grad(self, 2))
        Eigen::Map<Eigen::VectorXd>(gb->data(), cout) += gy.rowwise().sum();
    if (Tensor* gx = parent_grad(self, 0))
      as_matrix(*gx, cin, cols).noalias() += as_matrix(wv, cout, cin).transpose() * gy;
  });
}

Var resize_bilinear(const Var& x, int out_h, int out_w) {
  const Tensor& xv = x.value();
  require(xv.rank() == 3, "resize_bilinear: expects [C,H,W]");
  require(out_h > 0 && out_w > 0, "resize_bilinear: empty output size");
  if (xv.dim(1) == out_h && xv.dim(2) == out_w) return x;
  auto ty = std::make_shared<Taps>(bilinear_taps(xv.dim(1), out_h));
  auto tx = std::make_shared<Taps>(bilinear_taps(xv.dim(2), out_w));
  Tensor out = resize_forward(xv, *ty, *tx, out_h, out_w);
  return Var::from_op(std::move(out), {x}, [ty, tx](detail::Node& self) {
    resize_backward(self.grad, *ty, *tx, *parent_grad(self, 0));
  });
}

Var avg_pool2(const Var& x) {
  const Tensor& xv = x.value();
  require(xv.rank() == 3 && xv.dim(1) % 2 == 0 && xv.dim(2) % 2 == 0,
          "avg_pool2: expects [C,H,W] with even H and W, got " + shape_string(xv.shape()));
  const int c = xv.dim(0), h = xv.dim(1) / 2, w = xv.dim(2) / 2;
  Tensor out({c, h, w});
  for (int k = 0; k < c; ++k)
    for (int y = 0; y < h; ++y)
      for (int i = 0; i < w; ++i)
        out.at(k, y, i) = 0.25 * (xv.at(k, 2 * y, 2 * i) + xv.at(k, 2 * y, 2 * i + 1) +
                                  xv.at(k, 2 * y + 1, 2 * i) + xv.at(k, 2 * y + 1, 2 * i + 1));
  return Var::from_op(std::move(out), {x}, [c, h, w](detail::Node& self) {
    Tensor* g = parent_grad(self, 0);
    if (!g) return;
    for (int k = 0; k < c; ++k)
      for (int y = 0; y < h; ++y)
        for (int i = 0; i < w; ++i) {
          const double d = 0.25 * self.grad.at(k, y, i);
          g->at(k, 2 * y, 2 * i) += d;
          g->at(k, 2 * y, 2 * i + 1) += d;
          g->at(k, 2 * y + 1, 2 * i) += d;
          g->at(k, 2 * y + 1, 2 * i + 1) += d;
        }
  });
}

Var concat(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat: no inputs");
  std::vector<int> shape = parts[0].shape();
  int total = 0;
  for (const Var& p : parts) {
    std::vector<int> s = p.shape();
    require(s.size() == shape.size() && std::equal(s.begin() + 1, s.end(), shape.begin() + 1),
            "concat: trailing dims differ: " + shape_string(s) + " vs " + shape_string(shape));
    total += s[0];
  }
  shape[0] = total;
  Tensor out(shape);
  std::size_t offset = 0;
  std::vector<std::size_t> offsets;
  for (const Var& p : parts) {
    offsets.push_back(offset);
    std::copy(p.value().data(), p.value().data() + p.value().size(), out.data() + offset);
    offset += p.value().size();
  }
  return Var::from_op(std::move(out), parts, [offsets](detail::Node& self) {
    for (std::size_t i = 0; i < self.parents.size(); ++i)
      if (Tensor* g = parent_grad(self, i))
        for (std::size_t j = 0; j < g->size(); ++j) (*g)[j] += self.grad[offsets[i] + j];
  });
}

Var concat_columns(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_columns: no inputs");
  const int rows = parts[0].dim(0);
  int total = 0;
  for (const Var& p : parts) {
    require(p.value().rank() == 2 && p.dim(0) == rows, "concat_columns: row count mismatch");
    total += p.dim(1);
  }
  Tensor out({rows, total});
  std::vector<int> starts;
  int start = 0;
  for (const Var& p : parts) {
    starts.push_back(start);
    as_matrix(out, rows, total).middleCols(start, p.dim(1)) = as_matrix(p.value(), rows, p.dim(1));
    start += p.dim(1);
  }
  return Var::from_op(std::move(out), parts, [starts, rows, total](detail::Node& self) {
    for (std::size_t i = 0; i < self.parents.size(); ++i)
      if (Tensor* g = parent_grad(self, i)) {
        const int c = g->dim(1);
        as_matrix(*g, rows, c) +=
            as_matrix(static_cast<const Tensor&>(self.grad), rows, total).middleCols(starts[i], c);
      }
  });
}

Var slice(const Var& x, int begin, int count) {
  const Tensor& xv = x.value();
  require(xv.rank() >= 1 && begin >= 0 && count >= 0 && begin + count <= xv.dim(0),
          "slice: range out of bounds for " + shape_string(xv.shape()));
  std::vector<int> shape = xv.shape();
  const std::size_t inner = xv.size() / std::max(1, shape[0]);
  shape[0] = count;
  Tensor out(shape);
  const std::size_t offset = static_cast<std::size_t>(begin) * inner;
  std::copy(xv.data() + offset, xv.data() + offset + out.size(), out.data());
  return Var::from_op(std::move(out), {x}, [offset](detail::Node& self) {
    Tensor* g = parent_grad(self, 0);
    for (std::size_t j = 0; j < self.grad.size(); ++j) (*g)[offset + j] += self.grad[j];
  });
}

Var reshape(const Var& x, std::vector<int> shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  return Var::from_op(std::move(out), {x}, [](detail::Node& self) {
    Tensor* g = parent_grad(self, 0);
    for (std::size_t j = 0; j < self.grad.size(); ++j) (*g)[j] += self.grad[j];
  });
}

namespace {

// Scaled similarity logits [Q, M].
RowMat similarity_logits(const Tensor& qk, const Tensor& mk, Similarity sim) {
  const int ck = qk.dim(0), q = qk.dim(1), m = mk.dim(1);
  const double s = 1.0 / std::sqrt(static_cast<double>(ck));
  auto qm = as_matrix(qk, ck, q);
  auto mm = as_matrix(mk, ck, m);
  RowMat logits = qm.transpose() * mm;
  if (sim == Similarity::kDot) {
    logits *= s;
  } else {
    // -|q - m|^2 with the per-row |q|^2 term dropped (softmax-invariant).
    Eigen::RowVectorXd msq = mm.colwise().squaredNorm();
    logits = (2.0 * logits).rowwise() - msq;
    logits *= s;
  }
  return logits;
}

RowMat softmax_rows(const RowMat& logits, int top_k) {
  const int q = static_cast<int>(logits.rows()), m = static_cast<int>(logits.cols());
  RowMat a = RowMat::Zero(q, m);
  std::vector<int> idx(m);
  for (int r = 0; r < q; ++r) {
    std::iota(idx.begin(), idx.end(), 0);
    int keep = m;
    if (top_k > 0 && top_k < m) {
      keep = top_k;
      std::partial_sort(idx.begin(), idx.begin() + keep, idx.end(), [&](int i, int j) {
        return logits(r, i) > logits(r, j) || (logits(r, i) == logits(r, j) && i < j);
      });
    }
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < keep; ++j) mx = std::max(mx, logits(r, idx[j]));
    double z = 0;
    for (int j = 0; j < keep; ++j) {
      const double e = std::exp(logits(r, idx[j]) - mx);
      a(r, idx[j]) = e;
      z += e;
    }
    a.row(r) /= z;
  }
  return a;
}

void check_attention_shapes(const Tensor& qk, const Tensor& mk) {
  require(qk.rank() == 2 && mk.rank() == 2 && qk.dim(0) == mk.dim(0),
          "attention: key shapes " + shape_string(qk.shape()) + " and " +
              shape_string(mk.shape()) + " are incompatible");
  require(mk.dim(1) > 0, "attention: memory is empty");
}

}  // namespace

Tensor affinity(const Tensor& query_keys, const Tensor& memory_keys, const AttentionOptions& opts) {
  check_attention_shapes(query_keys, memory_keys);
  RowMat a = softmax_rows(similarity_logits(query_keys, memory_keys, opts.similarity), opts.top_k);
  Tensor out({static_cast<int>(a.rows()), static_cast<int>(a.cols())});
  as_matrix(out, out.dim(0), out.dim(1)) = a;
  return out;
}

Var attention_read(const Var& query_keys, const Var& memory_keys, const Var& memory_values,
                   const AttentionOptions& opts) {
  const Tensor& qk = query_keys.value();
  const Tensor& mk = memory_keys.value();
  const Tensor& mv = memory_values.value();
  check_attention_shapes(qk, mk);
  require(mv.rank() == 2 && mv.dim(1) == mk.dim(1),
          "attention: values " + shape_string(mv.shape()) + " do not match keys " +
              shape_string(mk.shape()));
  const int ck = qk.dim(0), q = qk.dim(1), m = mk.dim(1), d = mv.dim(0);
  auto a = std::make_shared<RowMat>(
      softmax_rows(similarity_logits(qk, mk, opts.similarity), opts.top_k));
  Tensor out({d, q});
  as_matrix(out, d, q).noalias() = as_matrix(mv, d, m) * a->transpose();

  const Similarity sim = opts.similarity;
  return Var::from_op(
      std::move(out), {query_keys, memory_keys, memory_values},
      [a, ck, q, m, d, sim](detail::Node& self) {
        auto gout = as_matrix(static_cast<const Tensor&>(self.grad), d, q);
        const Tensor& qk = self.parents[0]->value;
        const Tensor& mk = self.parents[1]->value;
        const Tensor& mv = self.parents[2]->value;
        if (Tensor* gv = parent_grad(self, 2)) as_matrix(*gv, d, m).noalias() += gout * (*a);
        Tensor* gq = parent_grad(self, 0);
        Tensor* gk = parent_grad(self, 1);
        if (!gq && !gk) return;
        RowMat ga = gout.transpose() * as_matrix(mv, d, m);  // [Q, M]
        Eigen::VectorXd rowdot = (ga.cwiseProduct(*a)).rowwise().sum();
        RowMat gs = a->cwiseProduct(ga.colwise() - rowdot);  // d logits
        const double s = 1.0 / std::sqrt(static_cast<double>(ck));
        const double f = sim == Similarity::kDot ? s : 2.0 * s;
        if (gq) as_matrix(*gq, ck, q).noalias() += f * as_matrix(mk, ck, m) * gs.transpose();
        if (gk) {
          auto gkm = as_matrix(*gk, ck, m);
          gkm.noalias() += f * as_matrix(qk, ck, q) * gs;
          if (sim == Similarity::kNegL2) {
            Eigen::RowVectorXd colsum = gs.colwise().sum();
            gkm -= (2.0 * s) * (as_matrix(mk, ck, m).array().rowwise() * colsum.array()).matrix();
          }
        }
      });
}

Var soft_aggregate(const Var& logits) {
  const Tensor& lv = logits.value();
  require(lv.rank() == 3, "soft_aggregate: expects [N,H,W]");
  const int n = lv.dim(0), h = lv.dim(1), w = lv.dim(2);
  const std::size_t px = static_cast<std::size_t>(h) * w;
  Tensor out({n + 1, h, w});
  for (std::size_t p = 0; p < px; ++p) {
    double mx = 0.0;
    for (int i = 0; i < n; ++i)
      mx = std::max(mx, std::clamp(lv[i * px + p], -kMaxOddsLogit, kMaxOddsLogit));
    double z = std::exp(-mx);
    out[p] = z;
    for (int i = 0; i < n; ++i) {
      const double e = std::exp(std::clamp(lv[i * px + p], -kMaxOddsLogit, kMaxOddsLogit) - mx);
      out[(i + 1) * px + p] = e;
      z += e;
    }
    for (int c = 0; c <= n; ++c) out[c * px + p] /= z;
  }
  return Var::from_op(std::move(out), {logits}, [n, px](detail::Node& self) {
    Tensor* g = parent_grad(self, 0);
    const Tensor& lv = self.parents[0]->value;
    const Tensor& pv = self.value;
    for (std::size_t p = 0; p < px; ++p) {
      double dot = 0;
      for (int c = 0; c <= n; ++c) dot += pv[c * px + p] * self.grad[c * px + p];
      for (int i = 0; i < n; ++i) {
        const double l = lv[i * px + p];
        if (l <= -kMaxOddsLogit || l >= kMaxOddsLogit) continue;
        const std::size_t k = (i + 1) * px + p;
        (*g)[i * px + p] += pv[k] * (self.grad[k] - dot);
      }
    }
  });
}

Var segmentation_loss(const Var& probs, const std::vector<int>& labels) {
  const Tensor& pv = probs.value();
  require(pv.rank() == 3, "segmentation_loss: expects [(N+1),H,W]");
  const int channels = pv.dim(0);
  const std::size_t px = static_cast<std::size_t>(pv.dim(1)) * pv.dim(2);
  require(labels.size() == px, "segmentation_loss: label count does not match probabilities");
  constexpr double kFloor = 1e-12;

  double ce = 0;
  for (std::size_t p = 0; p < px; ++p) {
    const int l = labels[p];
    require(l >= 0 && l < channels, "segmentation_loss: label out of range");
    ce -= std::log(std::max(pv[l * px + p], kFloor));
  }
  ce /= static_cast<double>(px);

  const int n = channels - 1;
  std::vector<double> inter(n + 1, 0.0), sp(n + 1, 0.0), sg(n + 1, 0.0);
  for (int i = 1; i <= n; ++i)
    for (std::size_t p = 0; p < px; ++p) {
      const double pr = pv[i * px + p];
      const double gt = labels[p] == i ? 1.0 : 0.0;
      inter[i] += pr * gt;
      sp[i] += pr;
      sg[i] += gt;
    }
  double dice = 0;
  for (int i = 1; i <= n; ++i) dice += 1.0 - (2.0 * inter[i] + 1.0) / (sp[i] + sg[i] + 1.0);
  if (n > 0) dice /= n;

  return Var::from_op(
      Tensor({1}, ce + dice), {probs},
      [labels, channels, px, n, inter, sp, sg](detail::Node& self) {
        Tensor* g = parent_grad(self, 0);
        const Tensor& pv = self.parents[0]->value;
        const double up = self.grad[0];
        for (std::size_t p = 0; p < px; ++p) {
          const std::size_t k = labels[p] * px + p;
          if (pv[k] > kFloor) (*g)[k] -= up / (pv[k] * static_cast<double>(px));
        }
        for (int i = 1; i <= n; ++i) {
          const double den = sp[i] + sg[i] + 1.0;
          const double num = 2.0 * inter[i] + 1.0;
          for (std::size_t p = 0; p < px; ++p) {
            const double gt = labels[p] == i ? 1.0 : 0.0;
            (*g)[i * px + p] -= up * (2.0 * gt * den - num) / (den * den) / n;
          }
        }
        (void)channels;
      });
}

}  // namespace egovos::ops
