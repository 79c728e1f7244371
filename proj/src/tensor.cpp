#include "ddm/tensor.hpp"

#include <cmath>
#include <cstring>
#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ddm::nn {

Shape::Shape(std::initializer_list<int> dims) {
  if (dims.size() == 0 || dims.size() > 4) throw ConfigError("tensor rank must be between 1 and 4");
  rank = static_cast<int>(dims.size());
  int i = 0;
  for (int v : dims) {
    if (v <= 0) throw ConfigError("tensor dimensions must be positive");
    dim[i++] = v;
  }
}

bool Shape::operator==(const Shape& o) const {
  if (rank != o.rank) return false;
  for (int i = 0; i < rank; ++i)
    if (dim[i] != o.dim[i]) return false;
  return true;
}

std::string Shape::str() const {
  std::string s = "[";
  for (int i = 0; i < rank; ++i) {
    if (i) s += ",";
    s += std::to_string(dim[i]);
  }
  return s + "]";
}

const Shape& Tensor::shape() const { return tape->shape_of(id); }
std::span<double> Tensor::value() { return tape->val(id); }
std::span<const double> Tensor::value() const { return static_cast<const Tape*>(tape)->val(id); }
std::span<const double> Tensor::grad() const { return tape->grad_buf(id); }
bool Tensor::requires_grad() const { return tape->rg(id); }

Tensor Tape::leaf(const Shape& s, bool requires_grad) {
  Node n;
  n.shape = s;
  n.val.assign(static_cast<size_t>(s.numel()), 0.0);
  n.rg = requires_grad;
  nodes_.push_back(std::move(n));
  return Tensor{this, static_cast<int>(nodes_.size()) - 1};
}

Tensor Tape::leaf(const Shape& s, std::span<const double> data, bool requires_grad) {
  if (static_cast<int>(data.size()) != s.numel())
    throw ConfigError("leaf data size does not match shape " + s.str());
  Tensor t = leaf(s, requires_grad);
  std::memcpy(nodes_[t.id].val.data(), data.data(), data.size() * sizeof(double));
  return t;
}

Tensor Tape::make_node(const Shape& s, std::initializer_list<Tensor> parents) {
  bool rg = false;
  for (const Tensor& p : parents) {
    if (p.tape != this) throw ConfigError("op arguments must live on the same tape");
    rg = rg || nodes_[p.id].rg;
  }
  Tensor t = leaf(s, rg);
  return t;
}

void Tape::set_backward(int id, std::function<void()> fn) { nodes_[id].back = std::move(fn); }

std::span<double> Tape::val(int id) { return nodes_[id].val; }
std::span<const double> Tape::val(int id) const { return nodes_[id].val; }

std::span<double> Tape::grad_buf(int id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad.assign(n.val.size(), 0.0);
  return n.grad;
}

bool Tape::rg(int id) const { return nodes_[id].rg; }
const Shape& Tape::shape_of(int id) const { return nodes_[id].shape; }

void Tape::backward(Tensor root) {
  if (root.tape != this) throw ConfigError("backward root lives on a different tape");
  if (nodes_[root.id].shape.numel() != 1) throw ConfigError("backward root must be a scalar");
  for (Node& n : nodes_) {
    if (n.rg) n.grad.assign(n.val.size(), 0.0);
  }
  grad_buf(root.id)[0] = 1.0;
  for (int id = root.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.rg && n.back) n.back();
  }
}

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!(a.shape() == b.shape()))
    throw ConfigError(std::string(op) + ": shape mismatch " + a.shape().str() + " vs " +
                      b.shape().str());
}

}  // namespace

Tensor add(Tensor a, Tensor b) {
  check_same_shape(a, b, "add");
  Tape& t = *a.tape;
  Tensor out = t.make_node(a.shape(), {a, b});
  const int n = out.numel();
  {
    std::span<const double> av = t.val(a.id), bv = t.val(b.id);
    std::span<double> ov = t.val(out.id);
    for (int i = 0; i < n; ++i) ov[i] = av[i] + bv[i];
  }
  if (out.requires_grad()) {
    t.set_backward(out.id, [&t, oa = a.id, ob = b.id, oo = out.id, n]() {
      std::span<const double> g = t.grad_buf(oo);
      if (t.rg(oa)) {
        std::span<double> ga = t.grad_buf(oa);
        for (int i = 0; i < n; ++i) ga[i] += g[i];
      }
      if (t.rg(ob)) {
        std::span<double> gb = t.grad_buf(ob);
        for (int i = 0; i < n; ++i) gb[i] += g[i];
      }
    });
  }
  return out;
}

Tensor sub(Tensor a, Tensor b) {
  check_same_shape(a, b, "sub");
  Tape& t = *a.tape;
  Tensor out = t.make_node(a.shape(), {a, b});
  const int n = out.numel();
  {
    std::span<const double> av = t.val(a.id), bv = t.val(b.id);
    std::span<double> ov = t.val(out.id);
    for (int i = 0; i < n; ++i) ov[i] = av[i] - bv[i];
  }
  if (out.requires_grad()) {
    t.set_backward(out.id, [&t, oa = a.id, ob = b.id, oo = out.id, n]() {
      std::span<const double> g = t.grad_buf(oo);
      if (t.rg(oa)) {
        std::span<double> ga = t.grad_buf(oa);
        for (int i = 0; i < n; ++i) ga[i] += g[i];
      }
      if (t.rg(ob)) {
        std::span<double> gb = t.grad_buf(ob);
        for (int i = 0; i < n; ++i) gb[i] -= g[i];
      }
    });
  }
  return out;
}

Tensor mul(Tensor a, Tensor b) {
  check_same_shape(a, b, "mul");
  Tape& t = *a.tape;
  Tensor out = t.make_node(a.shape(), {a, b});
  const int n = out.numel();
  {
    std::span<const double> av = t.val(a.id), bv = t.val(b.id);
    std::span<double> ov = t.val(out.id);
    for (int i = 0; i < n; ++i) ov[i] = av[i] * bv[i];
  }
  if (out.requires_grad()) {
    t.set_backward(out.id, [&t, oa = a.id, ob = b.id, oo = out.id, n]() {
      std::span<const double> g = t.grad_buf(oo);
      std::span<const double> av = t.val(oa), bv = t.val(ob);
      if (t.rg(oa)) {
        std::span<double> ga = t.grad_buf(oa);
        for (int i = 0; i < n; ++i) ga[i] += g[i] * bv[i];
      }
      if (t.rg(ob)) {
        std::span<double> gb = t.grad_buf(ob);
        for (int i = 0; i < n; ++i) gb[i] += g[i] * av[i];
      }
    });
  }
  return out;
}

Tensor scale(Tensor a, double c) {
  Tape& t = *a.tape;
  Tensor out = t.make_node(a.shape(), {a});
  const int n = out.numel();
  {
    std::span<const double> av = t.val(a.id);
    std::span<double> ov = t.val(out.id);
    for (int i = 0; i < n; ++i) ov[i] = c * av[i];
  }
  if (out.requires_grad()) {
    t.set_backward(out.id, [&t, oa = a.id, oo = out.id, n, c]() {
      std::span<const double> g = t.grad_buf(oo);
      std::span<double> ga = t.grad_buf(oa);
      for (int i = 0; i < n; ++i) ga[i] += c * g[i];
    });
  }
  return out;
}

Tensor relu(Tensor a) {
  Tape& t = *a.tape;
  Tensor out = t.make_node(a.shape(), {a});
  const int n = out.numel();
  {
    std::span<const double> av = t.val(a.id);
    std::span<double> ov = t.val(out.id);
    for (int i = 0; i < n; ++i) ov[i] = av[i] > 0.0 ? av[i] : 0.0;
  }
  if (out.requires_grad()) {
    // Subgradient 0 at the kink.
    t.set_backward(out.id, [&t, oa = a.id, oo = out.id, n]() {
      std::span<const double> g = t.grad_buf(oo);
      std::span<const double> av = t.val(oa);
      std::span<double> ga = t.grad_buf(oa);
      for (int i = 0; i < n; ++i)
        if (av[i] > 0.0) ga[i] += g[i];
    });
  }
  return out;
}

Tensor linear(Tensor x, Tensor w, Tensor bias) {
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  const Shape& bs = bias.shape();
  if (xs.rank != 2 || ws.rank != 2 || bs.rank != 1 || xs.dim[1] != ws.dim[0] ||
      ws.dim[1] != bs.dim[0])
    throw ConfigError("linear: incompatible shapes " + xs.str() + ", " + ws.str() + ", " +
                      bs.str());
  const int b = xs.dim[0], n = xs.dim[1], p = ws.dim[1];
  Tape& t = *x.tape;
  Tensor out = t.make_node(Shape{b, p}, {x, w, bias});
  {
    std::span<const double> xv = t.val(x.id), wv = t.val(w.id), bv = t.val(bias.id);
    std::span<double> ov = t.val(out.id);
    // Tiled over the output dimension with the whole batch in flight, so the
    // weight matrix streams through memory once per call, not once per row.
    constexpr int kTile = 128;
    const int tiles = (p + kTile - 1) / kTile;
#pragma omp parallel
    {
      std::vector<double> acc(static_cast<std::size_t>(b) * kTile);
#pragma omp for
      for (int tj = 0; tj < tiles; ++tj) {
        const int j0 = tj * kTile;
        const int tw = std::min(kTile, p - j0);
        for (int i = 0; i < b; ++i)
          for (int j = 0; j < tw; ++j) acc[static_cast<std::size_t>(i) * kTile + j] = bv[j0 + j];
        for (int l = 0; l < n; ++l) {
          const double* wrow = wv.data() + static_cast<std::size_t>(l) * p + j0;
          for (int i = 0; i < b; ++i) {
            const double xi = xv[i * n + l];
            double* arow = acc.data() + static_cast<std::size_t>(i) * kTile;
            for (int j = 0; j < tw; ++j) arow[j] += xi * wrow[j];
          }
        }
        for (int i = 0; i < b; ++i) {
          double* orow = ov.data() + static_cast<std::size_t>(i) * p + j0;
          const double* arow = acc.data() + static_cast<std::size_t>(i) * kTile;
          for (int j = 0; j < tw; ++j) orow[j] = arow[j];
        }
      }
    }
  }
  if (out.requires_grad()) {
    t.set_backward(out.id, [&t, ox = x.id, ow = w.id, ob = bias.id, oo = out.id, b, n, p]() {
      std::span<const double> g = t.grad_buf(oo);
      std::span<const double> xv = t.val(ox), wv = t.val(ow);
      if (t.rg(ox)) {
        std::span<double> gx = t.grad_buf(ox);
        // One pass over w: its row stays hot while every batch row uses it.
        // Four independent partial sums let the dot product vectorize.
#pragma omp parallel for
        for (int l = 0; l < n; ++l) {
          const double* wrow = wv.data() + static_cast<std::size_t>(l) * p;
          for (int i = 0; i < b; ++i) {
            const double* grow = g.data() + static_cast<std::size_t>(i) * p;
            double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
            int j = 0;
            for (; j + 4 <= p; j += 4) {
              a0 += grow[j] * wrow[j];
              a1 += grow[j + 1] * wrow[j + 1];
              a2 += grow[j + 2] * wrow[j + 2];
              a3 += grow[j + 3] * wrow[j + 3];
            }
            double acc = (a0 + a1) + (a2 + a3);
            for (; j < p; ++j) acc += grow[j] * wrow[j];
            gx[i * n + l] += acc;
          }
        }
      }
      if (t.rg(ow)) {
        std::span<double> gw = t.grad_buf(ow);
        // Row accumulator keeps the read-modify-write traffic on gw to one
        // pass regardless of batch size.
#pragma omp parallel
        {
          std::vector<double> acc(p);
#pragma omp for
          for (int l = 0; l < n; ++l) {
            std::fill(acc.begin(), acc.end(), 0.0);
            for (int i = 0; i < b; ++i) {
              const double xli = xv[i * n + l];
              const double* grow = g.data() + static_cast<std::size_t>(i) * p;
              for (int j = 0; j < p; ++j) acc[j] += xli * grow[j];
            }
            double* gwrow = gw.data() + static_cast<std::size_t>(l) * p;
            for (int j = 0; j < p; ++j) gwrow[j] += acc[j];
          }
        }
      }
      if (t.rg(ob)) {
        std::span<double> gb = t.grad_buf(ob);
#pragma omp parallel for
        for (int j = 0; j < p; ++j) {
          double acc = 0.0;
          for (int i = 0; i < b; ++i) acc += g[i * p + j];
          gb[j] += acc;
        }
      }
    });
  }
  return out;
}

Tensor conv3x3(Tensor x, Tensor w, Tensor bias) {
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  const Shape& bs = bias.shape();
  if (xs.rank != 4 || ws.rank != 4 || bs.rank != 1 || ws.dim[1] != xs.dim[1] || ws.dim[2] != 3 ||
      ws.dim[3] != 3 || bs.dim[0] != ws.dim[0])
    throw ConfigError("conv3x3: incompatible shapes " + xs.str() + ", " + ws.str() + ", " +
                      bs.str());
  const int b = xs.dim[0], ci = xs.dim[1], h = xs.dim[2], wd = xs.dim[3], co = ws.dim[0];
  Tape& t = *x.tape;
  Tensor out = t.make_node(Shape{b, co, h, wd}, {x, w, bias});
  auto xat = [ci, h, wd](std::span<const double> v, int nb, int c, int i, int j) {
    return v[((nb * ci + c) * h + i) * wd + j];
  };
  {
    std::span<const double> xv = t.val(x.id), wv = t.val(w.id), bv = t.val(bias.id);
    std::span<double> ov = t.val(out.id);
#pragma omp parallel for collapse(2)
    for (int nb = 0; nb < b; ++nb) {
      for (int o = 0; o < co; ++o) {
        for (int i = 0; i < h; ++i) {
          for (int j = 0; j < wd; ++j) {
            double acc = bv[o];
            for (int c = 0; c < ci; ++c) {
              for (int ky = 0; ky < 3; ++ky) {
                const int si = i + ky - 1;
                if (si < 0 || si >= h) continue;
                for (int kx = 0; kx < 3; ++kx) {
                  const int sj = j + kx - 1;
                  if (sj < 0 || sj >= wd) continue;
                  acc += xat(xv, nb, c, si, sj) * wv[((o * ci + c) * 3 + ky) * 3 + kx];
                }
              }
            }
            ov[((nb * co + o) * h + i) * wd + j] = acc;
          }
        }
      }
    }
  }
  if (out.requires_grad()) {
    t.set_backward(out.id, [&t, ox = x.id, ow = w.id, ob = bias.id, oo = out.id, b, ci, co, h,
                            wd]() {
      std::span<const double> g = t.grad_buf(oo);
      std::span<const double> xv = t.val(ox), wv = t.val(ow);
      auto gat = [co, h, wd](std::span<const double> v, int nb, int o, int i, int j) {
        return v[((nb * co + o) * h + i) * wd + j];
      };
      if (t.rg(ox)) {
        std::span<double> gx = t.grad_buf(ox);
#pragma omp parallel for collapse(2)
        for (int nb = 0; nb < b; ++nb) {
          for (int c = 0; c < ci; ++c) {
            for (int i = 0; i < h; ++i) {
              for (int j = 0; j < wd; ++j) {
                double acc = 0.0;
                for (int o = 0; o < co; ++o) {
                  for (int ky = 0; ky < 3; ++ky) {
                    const int di = i - ky + 1;
                    if (di < 0 || di >= h) continue;
                    for (int kx = 0; kx < 3; ++kx) {
                      const int dj = j - kx + 1;
                      if (dj < 0 || dj >= wd) continue;
                      acc += gat(g, nb, o, di, dj) * wv[((o * ci + c) * 3 + ky) * 3 + kx];
                    }
                  }
                }
                gx[((nb * ci + c) * h + i) * wd + j] += acc;
              }
            }
          }
        }
      }
      if (t.rg(ow)) {
        std::span<double> gw = t.grad_buf(ow);
#pragma omp parallel for collapse(2)
        for (int o = 0; o < co; ++o) {
          for (int c = 0; c < ci; ++c) {
            for (int ky = 0; ky < 3; ++ky) {
              for (int kx = 0; kx < 3; ++kx) {
                double acc = 0.0;
                for (int nb = 0; nb < b; ++nb) {
                  for (int i = 0; i < h; ++i) {
                    const int si = i + ky - 1;
                    if (si < 0 || si >= h) continue;
                    for (int j = 0; j < wd; ++j) {
                      const int sj = j + kx - 1;
                      if (sj < 0 || sj >= wd) continue;
                      acc += xv[((nb * ci + c) * h + si) * wd + sj] * gat(g, nb, o, i, j);
                    }
                  }
                }
                gw[((o * ci + c) * 3 + ky) * 3 + kx] += acc;
              }
            }
          }
        }
      }
      if (t.rg(ob)) {
        std::span<double> gb = t.grad_buf(ob);
#pragma omp parallel for
        for (int o = 0; o < co; ++o) {
          double acc = 0.0;
          for (int nb = 0; nb < b; ++nb)
            for (int i = 0; i < h; ++i)
              for (int j = 0; j < wd; ++j) acc += gat(g, nb, o, i, j);
          gb[o] += acc;
        }
      }
    });
  }
  return out;
}

Tensor batchnorm2d(Tensor x, Tensor gamma, Tensor beta, std::vector<double>& running_mean,
                   std::vector<double>& running_var, bool train, double momentum, double eps) {
  const Shape& xs = x.shape();
  if (xs.rank != 4) throw ConfigError("batchnorm2d expects a rank-4 input, got " + xs.str());
  const int b = xs.dim[0], c = xs.dim[1], h = xs.dim[2], w = xs.dim[3];
  if (gamma.shape().rank != 1 || gamma.shape().dim[0] != c || beta.shape().rank != 1 ||
      beta.shape().dim[0] != c)
    throw ConfigError("batchnorm2d: gamma/beta must have one entry per channel");
  if (static_cast<int>(running_mean.size()) != c || static_cast<int>(running_var.size()) != c)
    throw ConfigError("batchnorm2d: running statistics must have one entry per channel");
  const int per = h * w;
  const long cnt = static_cast<long>(b) * per;
  if (train && b < 2) throw ConfigError("batchnorm2d: training mode needs a batch of at least 2");

  Tape& t = *x.tape;
  Tensor out = t.make_node(xs, {x, gamma, beta});

  std::vector<double> mean(c), istd(c);
  {
    std::span<const double> xv = t.val(x.id), gv = t.val(gamma.id), bv = t.val(beta.id);
    std::span<double> ov = t.val(out.id);
    if (train) {
#pragma omp parallel for
      for (int ch = 0; ch < c; ++ch) {
        double s = 0.0;
        for (int nb = 0; nb < b; ++nb) {
          const double* base = &xv[(nb * c + ch) * per];
          for (int i = 0; i < per; ++i) s += base[i];
        }
        const double mu = s / static_cast<double>(cnt);
        double v = 0.0;
        for (int nb = 0; nb < b; ++nb) {
          const double* base = &xv[(nb * c + ch) * per];
          for (int i = 0; i < per; ++i) {
            const double d = base[i] - mu;
            v += d * d;
          }
        }
        const double var = v / static_cast<double>(cnt);
        mean[ch] = mu;
        istd[ch] = 1.0 / std::sqrt(var + eps);
        running_mean[ch] = (1.0 - momentum) * running_mean[ch] + momentum * mu;
        running_var[ch] = (1.0 - momentum) * running_var[ch] +
                          momentum * var * static_cast<double>(cnt) / static_cast<double>(cnt - 1);
      }
    } else {
      for (int ch = 0; ch < c; ++ch) {
        mean[ch] = running_mean[ch];
        istd[ch] = 1.0 / std::sqrt(running_var[ch] + eps);
      }
    }
#pragma omp parallel for collapse(2)
    for (int nb = 0; nb < b; ++nb) {
      for (int ch = 0; ch < c; ++ch) {
        const double mu = mean[ch], is = istd[ch], ga = gv[ch], be = bv[ch];
        const double* base = &xv[(nb * c + ch) * per];
        double* obase = &ov[(nb * c + ch) * per];
        for (int i = 0; i < per; ++i) obase[i] = ga * (base[i] - mu) * is + be;
      }
    }
  }
  if (out.requires_grad()) {
    t.set_backward(out.id, [&t, ox = x.id, og = gamma.id, obt = beta.id, oo = out.id, b, c, per,
                            cnt, train, mean = std::move(mean), istd = std::move(istd)]() {
      std::span<const double> g = t.grad_buf(oo);
      std::span<const double> xv = t.val(ox), gv = t.val(og);
#pragma omp parallel for
      for (int ch = 0; ch < c; ++ch) {
        const double mu = mean[ch], is = istd[ch], ga = gv[ch];
        // Per-channel sums in a fixed order; all downstream grads derive from
        // them so the parallel split over channels stays deterministic.
        double sg = 0.0, sgx = 0.0;
        for (int nb = 0; nb < b; ++nb) {
          const double* gb = &g[(nb * c + ch) * per];
          const double* xb = &xv[(nb * c + ch) * per];
          for (int i = 0; i < per; ++i) {
            sg += gb[i];
            sgx += gb[i] * (xb[i] - mu) * is;
          }
        }
        if (t.rg(og)) t.grad_buf(og)[ch] += sgx;
        if (t.rg(obt)) t.grad_buf(obt)[ch] += sg;
        if (t.rg(ox)) {
          std::span<double> gx = t.grad_buf(ox);
          const double n = static_cast<double>(cnt);
          for (int nb = 0; nb < b; ++nb) {
            const double* gb = &g[(nb * c + ch) * per];
            const double* xb = &xv[(nb * c + ch) * per];
            double* gxb = &gx[(nb * c + ch) * per];
            for (int i = 0; i < per; ++i) {
              const double xhat = (xb[i] - mu) * is;
              if (train) {
                gxb[i] += ga * is * (gb[i] - sg / n - xhat * sgx / n);
              } else {
                gxb[i] += ga * is * gb[i];
              }
            }
          }
        }
      }
    });
  }
  return out;
}

namespace {

Tensor copy_with_shape(Tensor x, const Shape& s, const char* op) {
  if (s.numel() != x.numel())
    throw ConfigError(std::string(op) + ": element count mismatch " + x.shape().str() + " -> " +
                      s.str());
  Tape& t = *x.tape;
  Tensor out = t.make_node(s, {x});
  const int n = x.numel();
  std::memcpy(t.val(out.id).data(), t.val(x.id).data(), static_cast<size_t>(n) * sizeof(double));
  if (out.requires_grad()) {
    t.set_backward(out.id, [&t, ox = x.id, oo = out.id, n]() {
      std::span<const double> g = t.grad_buf(oo);
      std::span<double> gx = t.grad_buf(ox);
      for (int i = 0; i < n; ++i) gx[i] += g[i];
    });
  }
  return out;
}

}  // namespace

Tensor flatten(Tensor x) {
  const Shape& s = x.shape();
  const int b = s.dim[0];
  return copy_with_shape(x, Shape{b, s.numel() / b}, "flatten");
}

Tensor reshape(Tensor x, const Shape& s) { return copy_with_shape(x, s, "reshape"); }

Tensor sum_all(Tensor x) {
  Tape& t = *x.tape;
  Tensor out = t.make_node(Shape{1}, {x});
  const int n = x.numel();
  {
    std::span<const double> xv = t.val(x.id);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += xv[i];
    t.val(out.id)[0] = acc;
  }
  if (out.requires_grad()) {
    t.set_backward(out.id, [&t, ox = x.id, oo = out.id, n]() {
      const double g = t.grad_buf(oo)[0];
      std::span<double> gx = t.grad_buf(ox);
      for (int i = 0; i < n; ++i) gx[i] += g;
    });
  }
  return out;
}

Tensor mean_all(Tensor x) { return scale(sum_all(x), 1.0 / x.numel()); }

Tensor sqnorm_rows(Tensor x, double weight) {
  const Shape& s = x.shape();
  const int b = s.dim[0];
  const int per = s.numel() / b;
  Tape& t = *x.tape;
  Tensor out = t.make_node(Shape{b}, {x});
  {
    std::span<const double> xv = t.val(x.id);
    std::span<double> ov = t.val(out.id);
#pragma omp parallel for
    for (int i = 0; i < b; ++i) {
      double acc = 0.0;
      const double* base = &xv[i * per];
      for (int j = 0; j < per; ++j) acc += base[j] * base[j];
      ov[i] = weight * acc;
    }
  }
  if (out.requires_grad()) {
    t.set_backward(out.id, [&t, ox = x.id, oo = out.id, b, per, weight]() {
      std::span<const double> g = t.grad_buf(oo);
      std::span<const double> xv = t.val(ox);
      std::span<double> gx = t.grad_buf(ox);
#pragma omp parallel for
      for (int i = 0; i < b; ++i) {
        const double gi = 2.0 * weight * g[i];
        const double* base = &xv[i * per];
        double* gbase = &gx[i * per];
        for (int j = 0; j < per; ++j) gbase[j] += gi * base[j];
      }
    });
  }
  return out;
}

}  // namespace ddm::nn
