#include "rentcast/autograd.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "rentcast/errors.hpp"
#include "rentcast/kernels.hpp"

namespace rentcast::ag {

Matrix::Matrix(int r, int c, double fill) : rows(r), cols(c), data(std::size_t(r) * c, fill) {}

void Parameter::zero_grad() {
    if (!grad.same_shape(value)) grad = Matrix(value.rows, value.cols);
    std::fill(grad.data.begin(), grad.data.end(), 0.0);
}

Var Graph::input(Matrix m) {
    Node n;
    n.value = std::move(m);
    nodes_.push_back(std::move(n));
    return Var{int(nodes_.size()) - 1};
}

Var Graph::input_ref(const Matrix& m) {
    Node n;
    n.ref = &m;
    nodes_.push_back(std::move(n));
    return Var{int(nodes_.size()) - 1};
}

Var Graph::param(Parameter& p) {
    Node n;
    n.ref = &p.value;
    n.param = &p;
    n.requires_grad = grad_enabled_;
    nodes_.push_back(std::move(n));
    return Var{int(nodes_.size()) - 1};
}

const Matrix& Graph::value(Var v) const {
    const Node& n = nodes_.at(v.id);
    return n.ref ? *n.ref : n.value;
}

Var Graph::emit(Matrix value, bool requires_grad, BackwardFn backward) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad && grad_enabled_;
    if (n.requires_grad) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return Var{int(nodes_.size()) - 1};
}

Matrix& Graph::grad_slot(int id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0) {
        const Matrix& v = n.ref ? *n.ref : n.value;
        n.grad = Matrix(v.rows, v.cols);
    }
    return n.grad;
}

void Graph::backward(Var scalar) {
    const Matrix& out = value(scalar);
    if (out.rows != 1 || out.cols != 1) throw ShapeError("backward() needs a 1x1 result");
    for (Node& n : nodes_) n.grad = Matrix();
    if (!nodes_[scalar.id].requires_grad) return;
    grad_slot(scalar.id).data[0] = 1.0;
    for (int id = scalar.id; id >= 0; --id) {
        Node& n = nodes_[id];
        if (!n.requires_grad || n.grad.size() == 0) continue;
        if (n.param) {
            Matrix& pg = n.param->grad;
            if (!pg.same_shape(n.param->value)) pg = Matrix(n.param->value.rows, n.param->value.cols);
            for (std::size_t i = 0; i < pg.size(); ++i) pg.data[i] += n.grad.data[i];
        } else if (n.backward) {
            n.backward(*this, id);
        }
    }
}

namespace {

void require_same(const Matrix& a, const Matrix& b, const char* op) {
    if (!a.same_shape(b))
        throw ShapeError(fmt::format("{}: shape mismatch {}x{} vs {}x{}", op, a.rows, a.cols, b.rows, b.cols));
}

template <typename F>
Var unary(Graph& g, Var a, F f, Graph::BackwardFn bw) {
    const Matrix& av = g.value(a);
    Matrix out(av.rows, av.cols);
    for (std::size_t i = 0; i < av.size(); ++i) out.data[i] = f(av.data[i]);
    return g.emit(std::move(out), g.requires_grad(a), std::move(bw));
}

}  // namespace

Var linear(Graph& g, Var x, Var w, Var b) {
    const Matrix& xv = g.value(x);
    const Matrix& wv = g.value(w);
    if (xv.cols != wv.cols)
        throw ShapeError(fmt::format("linear: input width {} but weight expects {}", xv.cols, wv.cols));
    const int m = xv.rows, n = wv.rows, k = xv.cols;
    Matrix out(m, n);
    kernels::gemm_nt(m, n, k, xv.data, wv.data, out.data, false);
    if (b.valid()) {
        const Matrix& bv = g.value(b);
        if (bv.rows != 1 || bv.cols != n) throw ShapeError("linear: bias shape");
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) out(i, j) += bv.data[j];
    }
    bool rg = g.requires_grad(x) || g.requires_grad(w) || (b.valid() && g.requires_grad(b));
    return g.emit(std::move(out), rg, [x, w, b, m, n, k](Graph& gr, int self) {
        const Matrix& dy = gr.grad_in(self);
        if (gr.requires_grad(x))
            kernels::gemm_nn(m, k, n, dy.data, gr.value(w).data, gr.grad_slot(x.id).data, true);
        if (gr.requires_grad(w))
            kernels::gemm_tn(m, n, k, dy.data, gr.value(x).data, gr.grad_slot(w.id).data, true);
        if (b.valid() && gr.requires_grad(b)) {
            Matrix& db = gr.grad_slot(b.id);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) db.data[j] += dy(i, j);
        }
    });
}

Var add(Graph& g, Var a, Var b) {
    const Matrix& av = g.value(a);
    const Matrix& bv = g.value(b);
    require_same(av, bv, "add");
    Matrix out = av;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += bv.data[i];
    return g.emit(std::move(out), g.requires_grad(a) || g.requires_grad(b), [a, b](Graph& gr, int self) {
        const Matrix& dy = gr.grad_in(self);
        for (Var v : {a, b})
            if (gr.requires_grad(v)) {
                Matrix& d = gr.grad_slot(v.id);
                for (std::size_t i = 0; i < d.size(); ++i) d.data[i] += dy.data[i];
            }
    });
}

Var sub(Graph& g, Var a, Var b) {
    const Matrix& av = g.value(a);
    const Matrix& bv = g.value(b);
    require_same(av, bv, "sub");
    Matrix out = av;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] -= bv.data[i];
    return g.emit(std::move(out), g.requires_grad(a) || g.requires_grad(b), [a, b](Graph& gr, int self) {
        const Matrix& dy = gr.grad_in(self);
        if (gr.requires_grad(a)) {
            Matrix& d = gr.grad_slot(a.id);
            for (std::size_t i = 0; i < d.size(); ++i) d.data[i] += dy.data[i];
        }
        if (gr.requires_grad(b)) {
            Matrix& d = gr.grad_slot(b.id);
            for (std::size_t i = 0; i < d.size(); ++i) d.data[i] -= dy.data[i];
        }
    });
}

Var mul(Graph& g, Var a, Var b) {
    const Matrix& av = g.value(a);
    const Matrix& bv = g.value(b);
    require_same(av, bv, "mul");
    Matrix out = av;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= bv.data[i];
    return g.emit(std::move(out), g.requires_grad(a) || g.requires_grad(b), [a, b](Graph& gr, int self) {
        const Matrix& dy = gr.grad_in(self);
        if (gr.requires_grad(a)) {
            Matrix& d = gr.grad_slot(a.id);
            const Matrix& bv = gr.value(b);
            for (std::size_t i = 0; i < d.size(); ++i) d.data[i] += dy.data[i] * bv.data[i];
        }
        if (gr.requires_grad(b)) {
            Matrix& d = gr.grad_slot(b.id);
            const Matrix& av = gr.value(a);
            for (std::size_t i = 0; i < d.size(); ++i) d.data[i] += dy.data[i] * av.data[i];
        }
    });
}

Var scale(Graph& g, Var a, double s) {
    return unary(g, a, [s](double x) { return s * x; }, [a, s](Graph& gr, int self) {
        const Matrix& dy = gr.grad_in(self);
        Matrix& d = gr.grad_slot(a.id);
        for (std::size_t i = 0; i < d.size(); ++i) d.data[i] += s * dy.data[i];
    });
}

Var relu(Graph& g, Var a) {
    if (g.recording_relu()) {
        const Matrix& av = g.value(a);
        auto& pattern = g.relu_pattern();
        for (double x : av.data) pattern.push_back(x > 0.0);
    }
    return unary(g, a, [](double x) { return x > 0.0 ? x : 0.0; }, [a](Graph& gr, int self) {
        const Matrix& dy = gr.grad_in(self);
        const Matrix& av = gr.value(a);
        Matrix& d = gr.grad_slot(a.id);
        for (std::size_t i = 0; i < d.size(); ++i)
            if (av.data[i] > 0.0) d.data[i] += dy.data[i];
    });
}

Var tanh(Graph& g, Var a) {
    return unary(g, a, [](double x) { return std::tanh(x); }, [a](Graph& gr, int self) {
        const Matrix& dy = gr.grad_in(self);
        const Matrix& y = gr.value(Var{self});
        Matrix& d = gr.grad_slot(a.id);
        for (std::size_t i = 0; i < d.size(); ++i) d.data[i] += dy.data[i] * (1.0 - y.data[i] * y.data[i]);
    });
}

Var sigmoid(Graph& g, Var a) {
    return unary(g, a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); }, [a](Graph& gr, int self) {
        const Matrix& dy = gr.grad_in(self);
        const Matrix& y = gr.value(Var{self});
        Matrix& d = gr.grad_slot(a.id);
        for (std::size_t i = 0; i < d.size(); ++i) d.data[i] += dy.data[i] * y.data[i] * (1.0 - y.data[i]);
    });
}

Var concat_cols(Graph& g, std::span<const Var> parts) {
    if (parts.empty()) throw ShapeError("concat_cols: no parts");
    const int rows = g.value(parts[0]).rows;
    int cols = 0;
    bool rg = false;
    for (Var p : parts) {
        if (g.value(p).rows != rows) throw ShapeError("concat_cols: row mismatch");
        cols += g.value(p).cols;
        rg = rg || g.requires_grad(p);
    }
    Matrix out(rows, cols);
    int offset = 0;
    for (Var p : parts) {
        const Matrix& pv = g.value(p);
        for (int r = 0; r < rows; ++r) std::copy(pv.row(r).begin(), pv.row(r).end(), out.row(r).begin() + offset);
        offset += pv.cols;
    }
    std::vector<Var> saved(parts.begin(), parts.end());
    return g.emit(std::move(out), rg, [saved, rows](Graph& gr, int self) {
        const Matrix& dy = gr.grad_in(self);
        int off = 0;
        for (Var p : saved) {
            const int pc = gr.value(p).cols;
            if (gr.requires_grad(p)) {
                Matrix& d = gr.grad_slot(p.id);
                for (int r = 0; r < rows; ++r)
                    for (int c = 0; c < pc; ++c) d(r, c) += dy(r, off + c);
            }
            off += pc;
        }
    });
}

Var slice_cols(Graph& g, Var a, int begin, int count) {
    const Matrix& av = g.value(a);
    if (begin < 0 || count < 0 || begin + count > av.cols) throw ShapeError("slice_cols: out of range");
    Matrix out(av.rows, count);
    for (int r = 0; r < av.rows; ++r)
        for (int c = 0; c < count; ++c) out(r, c) = av(r, begin + c);
    return g.emit(std::move(out), g.requires_grad(a), [a, begin, count](Graph& gr, int self) {
        const Matrix& dy = gr.grad_in(self);
        Matrix& d = gr.grad_slot(a.id);
        for (int r = 0; r < dy.rows; ++r)
            for (int c = 0; c < count; ++c) d(r, begin + c) += dy(r, c);
    });
}

Var gather_rows(Graph& g, Var a, std::vector<int> rows) {
    const Matrix& av = g.value(a);
    Matrix out(int(rows.size()), av.cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] < 0 || rows[i] >= av.rows) throw ShapeError("gather_rows: index out of range");
        auto src = av.row(rows[i]);
        std::copy(src.begin(), src.end(), out.row(int(i)).begin());
    }
    return g.emit(std::move(out), g.requires_grad(a), [a, rows = std::move(rows)](Graph& gr, int self) {
        const Matrix& dy = gr.grad_in(self);
        Matrix& d = gr.grad_slot(a.id);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            auto src = dy.row(int(i));
            auto dst = d.row(rows[i]);
            for (int c = 0; c < dy.cols; ++c) dst[c] += src[c];
        }
    });
}

Var add_positional(Graph& g, Var x, Var pos, int seq) {
    const Matrix& xv = g.value(x);
    const Matrix& pv = g.value(pos);
    if (pv.rows < seq || pv.cols != xv.cols || xv.rows % seq != 0) throw ShapeError("add_positional: shape");
    Matrix out = xv;
    for (int r = 0; r < out.rows; ++r)
        for (int c = 0; c < out.cols; ++c) out(r, c) += pv(r % seq, c);
    return g.emit(std::move(out), g.requires_grad(x) || g.requires_grad(pos), [x, pos, seq](Graph& gr, int self) {
        const Matrix& dy = gr.grad_in(self);
        if (gr.requires_grad(x)) {
            Matrix& d = gr.grad_slot(x.id);
            for (std::size_t i = 0; i < d.size(); ++i) d.data[i] += dy.data[i];
        }
        if (gr.requires_grad(pos)) {
            Matrix& d = gr.grad_slot(pos.id);
            for (int r = 0; r < dy.rows; ++r)
                for (int c = 0; c < dy.cols; ++c) d(r % seq, c) += dy(r, c);
        }
    });
}

Var layer_norm(Graph& g, Var x, Var gain, Var bias, double eps) {
    const Matrix& xv = g.value(x);
    const Matrix& gv = g.value(gain);
    const Matrix& bv = g.value(bias);
    const int n = xv.cols;
    if (gv.cols != n || bv.cols != n || gv.rows != 1 || bv.rows != 1) throw ShapeError("layer_norm: gain/bias shape");
    Matrix out(xv.rows, n);
    Matrix xhat(xv.rows, n);
    std::vector<double> inv_std(xv.rows);
    for (int r = 0; r < xv.rows; ++r) {
        double mean = 0.0;
        for (double v : xv.row(r)) mean += v;
        mean /= n;
        double var = 0.0;
        for (double v : xv.row(r)) var += (v - mean) * (v - mean);
        var /= n;
        inv_std[r] = 1.0 / std::sqrt(var + eps);
        for (int c = 0; c < n; ++c) {
            xhat(r, c) = (xv(r, c) - mean) * inv_std[r];
            out(r, c) = gv.data[c] * xhat(r, c) + bv.data[c];
        }
    }
    bool rg = g.requires_grad(x) || g.requires_grad(gain) || g.requires_grad(bias);
    return g.emit(std::move(out), rg,
                  [x, gain, bias, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](Graph& gr, int self) {
                      const Matrix& dy = gr.grad_in(self);
                      const Matrix& gv = gr.value(gain);
                      if (gr.requires_grad(gain) || gr.requires_grad(bias)) {
                          Matrix& dg = gr.grad_slot(gain.id);
                          Matrix& db = gr.grad_slot(bias.id);
                          for (int r = 0; r < dy.rows; ++r)
                              for (int c = 0; c < n; ++c) {
                                  dg.data[c] += dy(r, c) * xhat(r, c);
                                  db.data[c] += dy(r, c);
                              }
                      }
                      if (gr.requires_grad(x)) {
                          Matrix& dx = gr.grad_slot(x.id);
                          for (int r = 0; r < dy.rows; ++r) {
                              double mean_d = 0.0, mean_dx = 0.0;
                              for (int c = 0; c < n; ++c) {
                                  double dxh = dy(r, c) * gv.data[c];
                                  mean_d += dxh;
                                  mean_dx += dxh * xhat(r, c);
                              }
                              mean_d /= n;
                              mean_dx /= n;
                              for (int c = 0; c < n; ++c) {
                                  double dxh = dy(r, c) * gv.data[c];
                                  dx(r, c) += inv_std[r] * (dxh - mean_d - xhat(r, c) * mean_dx);
                              }
                          }
                      }
                  });
}

Var self_attention(Graph& g, Var q, Var k, Var v, int batch, int seq, int heads) {
    const Matrix& qv = g.value(q);
    const Matrix& kv = g.value(k);
    const Matrix& vv = g.value(v);
    require_same(qv, kv, "self_attention");
    require_same(qv, vv, "self_attention");
    const int width = qv.cols;
    if (qv.rows != batch * seq || width % heads != 0) throw ShapeError("self_attention: shape");
    const int dk = width / heads;
    const double inv_sqrt = 1.0 / std::sqrt(double(dk));
    // probs[((b*heads + h)*seq + t)*seq + s]
    std::vector<double> probs(std::size_t(batch) * heads * seq * seq);
    Matrix out(qv.rows, width);
#pragma omp parallel for schedule(static) if (batch > 64)
    for (int b = 0; b < batch; ++b)
        for (int h = 0; h < heads; ++h) {
            const int c0 = h * dk;
            for (int t = 0; t < seq; ++t) {
                double* p = &probs[((std::size_t(b) * heads + h) * seq + t) * seq];
                double mx = -1e300;
                for (int s = 0; s < seq; ++s) {
                    double dot = 0.0;
                    for (int c = 0; c < dk; ++c) dot += qv(b * seq + t, c0 + c) * kv(b * seq + s, c0 + c);
                    p[s] = dot * inv_sqrt;
                    mx = std::max(mx, p[s]);
                }
                double z = 0.0;
                for (int s = 0; s < seq; ++s) {
                    p[s] = std::exp(p[s] - mx);
                    z += p[s];
                }
                for (int s = 0; s < seq; ++s) p[s] /= z;
                for (int s = 0; s < seq; ++s)
                    for (int c = 0; c < dk; ++c) out(b * seq + t, c0 + c) += p[s] * vv(b * seq + s, c0 + c);
            }
        }
    bool rg = g.requires_grad(q) || g.requires_grad(k) || g.requires_grad(v);
    return g.emit(std::move(out), rg,
                  [q, k, v, batch, seq, heads, dk, inv_sqrt, probs = std::move(probs)](Graph& gr, int self) {
                      const Matrix& dy = gr.grad_in(self);
                      const Matrix& qv = gr.value(q);
                      const Matrix& kv = gr.value(k);
                      const Matrix& vv = gr.value(v);
                      Matrix& dq = gr.grad_slot(q.id);
                      Matrix& dk_ = gr.grad_slot(k.id);
                      Matrix& dv = gr.grad_slot(v.id);
                      std::vector<double> dp(seq);
                      for (int b = 0; b < batch; ++b)
                          for (int h = 0; h < heads; ++h) {
                              const int c0 = h * dk;
                              for (int t = 0; t < seq; ++t) {
                                  const double* p = &probs[((std::size_t(b) * heads + h) * seq + t) * seq];
                                  double pdp = 0.0;
                                  for (int s = 0; s < seq; ++s) {
                                      double acc = 0.0;
                                      for (int c = 0; c < dk; ++c) {
                                          acc += dy(b * seq + t, c0 + c) * vv(b * seq + s, c0 + c);
                                          dv(b * seq + s, c0 + c) += p[s] * dy(b * seq + t, c0 + c);
                                      }
                                      dp[s] = acc;
                                      pdp += p[s] * acc;
                                  }
                                  for (int s = 0; s < seq; ++s) {
                                      double ds = p[s] * (dp[s] - pdp) * inv_sqrt;
                                      for (int c = 0; c < dk; ++c) {
                                          dq(b * seq + t, c0 + c) += ds * kv(b * seq + s, c0 + c);
                                          dk_(b * seq + s, c0 + c) += ds * qv(b * seq + t, c0 + c);
                                      }
                                  }
                              }
                          }
                  });
}

Var sum(Graph& g, Var a) {
    const Matrix& av = g.value(a);
    double s = 0.0;
    for (double x : av.data) s += x;
    return g.emit(Matrix(1, 1, s), g.requires_grad(a), [a](Graph& gr, int self) {
        const double dy = gr.grad_in(self).data[0];
        Matrix& d = gr.grad_slot(a.id);
        for (double& x : d.data) x += dy;
    });
}

Var weighted_sum(Graph& g, std::span<const Var> scalars, std::span<const double> weights) {
    if (scalars.size() != weights.size()) throw ShapeError("weighted_sum: size mismatch");
    double total = 0.0;
    bool rg = false;
    for (std::size_t i = 0; i < scalars.size(); ++i) {
        const Matrix& s = g.value(scalars[i]);
        if (s.rows != 1 || s.cols != 1) throw ShapeError("weighted_sum: operands must be 1x1");
        total += weights[i] * s.data[0];
        rg = rg || g.requires_grad(scalars[i]);
    }
    std::vector<Var> sv(scalars.begin(), scalars.end());
    std::vector<double> wv(weights.begin(), weights.end());
    return g.emit(Matrix(1, 1, total), rg, [sv, wv](Graph& gr, int self) {
        const double dy = gr.grad_in(self).data[0];
        for (std::size_t i = 0; i < sv.size(); ++i)
            if (gr.requires_grad(sv[i])) gr.grad_slot(sv[i].id).data[0] += wv[i] * dy;
    });
}

Var column_group_mse(Graph& g, Var pred, Var target, std::span<const int> cols) {
    const Matrix& pv = g.value(pred);
    const Matrix& tv = g.value(target);
    require_same(pv, tv, "column_group_mse");
    if (pv.rows == 0 || cols.empty()) throw ShapeError("column_group_mse: empty");
    double s = 0.0;
    for (int r = 0; r < pv.rows; ++r)
        for (int c : cols) {
            double e = pv(r, c) - tv(r, c);
            s += e * e;
        }
    const double denom = double(pv.rows) * double(cols.size());
    std::vector<int> cv(cols.begin(), cols.end());
    return g.emit(Matrix(1, 1, s / denom), g.requires_grad(pred), [pred, target, cv, denom](Graph& gr, int self) {
        const double dy = gr.grad_in(self).data[0];
        const Matrix& pv = gr.value(pred);
        const Matrix& tv = gr.value(target);
        Matrix& d = gr.grad_slot(pred.id);
        for (int r = 0; r < pv.rows; ++r)
            for (int c : cv) d(r, c) += dy * 2.0 * (pv(r, c) - tv(r, c)) / denom;
    });
}

}  // namespace rentcast::ag
