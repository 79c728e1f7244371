#include "ddm/physics.hpp"

#include <cmath>
#include <vector>

#include "ddm/specfun.hpp"

namespace ddm {

namespace {

constexpr double kMinSourceDistance = 1e-6;

void check_points(const nn::Tensor& points, const char* op) {
  const nn::Shape& s = points.shape();
  if (s.rank != 3 || s.dim[2] != 2)
    throw ConfigError(std::string(op) + ": points must be [batch, n, 2], got " + s.str());
}

void check_g(const nn::Tensor& g, int m, const char* op) {
  const nn::Shape& s = g.shape();
  if (s.rank != 2 || s.dim[1] != 4 * m)
    throw ConfigError(std::string(op) + ": herglotz coefficients must be [batch, 4m], got " +
                      s.str());
}

}  // namespace

Complex phi_fundamental(Vec2 x, const SourcePoint& z, double k) {
  const double r = (x - z.z).norm();
  if (r < kMinSourceDistance) throw NumericalError("fundamental solution evaluated at its source");
  return Complex(0.0, 0.25) * hankel1(0, k * r);
}

Complex phi_farfield(Vec2 xhat, const SourcePoint& z, double k) {
  const Complex lead = std::polar(1.0 / std::sqrt(8.0 * pi * k), pi / 4.0);
  return lead * std::polar(1.0, -k * xhat.dot(z.z));
}

nn::Tensor curve_points(nn::Tensor q_coeffs, double s, int n_t, double radial_scale) {
  const nn::Shape& qs = q_coeffs.shape();
  if (qs.rank != 2 || qs.dim[1] % 2 == 0)
    throw ConfigError("curve_points: coefficients must be [batch, 2*n_lambda+1], got " + qs.str());
  if (n_t < 1) throw ConfigError("curve_points: n_t must be positive");
  const int b = qs.dim[0], nc = qs.dim[1], nl = (nc - 1) / 2;

  // Fourier basis evaluated on the uniform grid, row l ~ node t_l.
  std::vector<double> basis(static_cast<size_t>(n_t) * nc);
  std::vector<double> ct(n_t), st(n_t);
  for (int l = 0; l < n_t; ++l) {
    const double t = 2.0 * pi * l / n_t;
    ct[l] = std::cos(t);
    st[l] = std::sin(t);
    double* row = &basis[static_cast<size_t>(l) * nc];
    row[0] = 1.0 / std::sqrt(2.0 * pi);
    for (int n = 1; n <= nl; ++n) {
      const double decay = std::pow(static_cast<double>(n), s) * std::sqrt(pi);
      row[2 * n - 1] = std::cos(n * t) / decay;
      row[2 * n] = std::sin(n * t) / decay;
    }
  }

  nn::Tape& t = *q_coeffs.tape;
  nn::Tensor out = t.make_node(nn::Shape{b, n_t, 2}, {q_coeffs});
  // radius per (batch, node); reused by the backward pass
  std::vector<double> radius(static_cast<size_t>(b) * n_t);
  {
    std::span<const double> qv = t.val(q_coeffs.id);
    std::span<double> ov = t.val(out.id);
#pragma omp parallel for collapse(2)
    for (int ib = 0; ib < b; ++ib) {
      for (int l = 0; l < n_t; ++l) {
        const double* row = &basis[static_cast<size_t>(l) * nc];
        double q = 0.0;
        for (int j = 0; j < nc; ++j) q += qv[ib * nc + j] * row[j];
        const double r = radial_scale * std::exp(q);
        radius[static_cast<size_t>(ib) * n_t + l] = r;
        ov[(ib * n_t + l) * 2 + 0] = r * ct[l];
        ov[(ib * n_t + l) * 2 + 1] = r * st[l];
      }
    }
  }
  if (out.requires_grad()) {
    t.set_backward(out.id, [&t, oq = q_coeffs.id, oo = out.id, b, n_t, nc,
                            basis = std::move(basis), ct = std::move(ct), st = std::move(st),
                            radius = std::move(radius)]() {
      std::span<const double> g = t.grad_buf(oo);
      std::span<double> gq = t.grad_buf(oq);
#pragma omp parallel for
      for (int ib = 0; ib < b; ++ib) {
        for (int j = 0; j < nc; ++j) {
          double acc = 0.0;
          for (int l = 0; l < n_t; ++l) {
            // d point / d q = point itself, since r = scale * exp(q)
            const double dq = (g[(ib * n_t + l) * 2 + 0] * ct[l] +
                               g[(ib * n_t + l) * 2 + 1] * st[l]) *
                              radius[static_cast<size_t>(ib) * n_t + l];
            acc += dq * basis[static_cast<size_t>(l) * nc + j];
          }
          gq[ib * nc + j] += acc;
        }
      }
    });
  }
  return out;
}

nn::Tensor herglotz_field(nn::Tensor points, nn::Tensor g, double k, int m, int i_lo, int i_hi) {
  check_points(points, "herglotz_field");
  check_g(g, m, "herglotz_field");
  if (i_lo < 1 || i_hi > 2 * m || i_lo > i_hi)
    throw ConfigError("herglotz_field: direction range outside [1, 2m]");
  const nn::Shape& ps = points.shape();
  const int b = ps.dim[0], np = ps.dim[1];
  if (g.shape().dim[0] != b) throw ConfigError("herglotz_field: batch mismatch");
  const double w = pi / m;

  std::vector<double> dx(i_hi - i_lo + 1), dy(i_hi - i_lo + 1);
  for (int i = i_lo; i <= i_hi; ++i) {
    const double a = direction_angle(m, i);
    dx[i - i_lo] = std::cos(a);
    dy[i - i_lo] = std::sin(a);
  }

  nn::Tape& t = *points.tape;
  nn::Tensor out = t.make_node(nn::Shape{b, np, 2}, {points, g});
  {
    std::span<const double> pv = t.val(points.id), gv = t.val(g.id);
    std::span<double> ov = t.val(out.id);
#pragma omp parallel for collapse(2)
    for (int ib = 0; ib < b; ++ib) {
      for (int l = 0; l < np; ++l) {
        const double px = pv[(ib * np + l) * 2 + 0], py = pv[(ib * np + l) * 2 + 1];
        double re = 0.0, im = 0.0;
        for (int i = i_lo; i <= i_hi; ++i) {
          const double phase = k * (px * dx[i - i_lo] + py * dy[i - i_lo]);
          const double c = std::cos(phase), sn = std::sin(phase);
          const double gr = gv[ib * 4 * m + 2 * (i - 1)], gi = gv[ib * 4 * m + 2 * (i - 1) + 1];
          re += c * gr - sn * gi;
          im += sn * gr + c * gi;
        }
        ov[(ib * np + l) * 2 + 0] = w * re;
        ov[(ib * np + l) * 2 + 1] = w * im;
      }
    }
  }
  if (out.requires_grad()) {
    t.set_backward(out.id, [&t, op = points.id, og = g.id, oo = out.id, b, np, m, k, w, i_lo,
                            i_hi, dx = std::move(dx), dy = std::move(dy)]() {
      std::span<const double> gr_out = t.grad_buf(oo);
      std::span<const double> pv = t.val(op), gv = t.val(og);
      if (t.rg(og)) {
        std::span<double> gg = t.grad_buf(og);
#pragma omp parallel for collapse(2)
        for (int ib = 0; ib < b; ++ib) {
          for (int i = i_lo; i <= i_hi; ++i) {
            double accr = 0.0, acci = 0.0;
            for (int l = 0; l < np; ++l) {
              const double px = pv[(ib * np + l) * 2 + 0], py = pv[(ib * np + l) * 2 + 1];
              const double phase = k * (px * dx[i - i_lo] + py * dy[i - i_lo]);
              const double c = std::cos(phase), sn = std::sin(phase);
              const double dre = gr_out[(ib * np + l) * 2 + 0],
                           dim = gr_out[(ib * np + l) * 2 + 1];
              accr += dre * c + dim * sn;
              acci += -dre * sn + dim * c;
            }
            gg[ib * 4 * m + 2 * (i - 1)] += w * accr;
            gg[ib * 4 * m + 2 * (i - 1) + 1] += w * acci;
          }
        }
      }
      if (t.rg(op)) {
        std::span<double> gp = t.grad_buf(op);
#pragma omp parallel for collapse(2)
        for (int ib = 0; ib < b; ++ib) {
          for (int l = 0; l < np; ++l) {
            const double px = pv[(ib * np + l) * 2 + 0], py = pv[(ib * np + l) * 2 + 1];
            const double dre = gr_out[(ib * np + l) * 2 + 0], dim = gr_out[(ib * np + l) * 2 + 1];
            double ax = 0.0, ay = 0.0;
            for (int i = i_lo; i <= i_hi; ++i) {
              const double phase = k * (px * dx[i - i_lo] + py * dy[i - i_lo]);
              const double c = std::cos(phase), sn = std::sin(phase);
              const double grc = gv[ib * 4 * m + 2 * (i - 1)],
                           gic = gv[ib * 4 * m + 2 * (i - 1) + 1];
              // d(re)/d(phase) = -sn*gr - c*gi ; d(im)/d(phase) = c*gr - sn*gi
              const double dphase = dre * (-sn * grc - c * gic) + dim * (c * grc - sn * gic);
              ax += dphase * k * dx[i - i_lo];
              ay += dphase * k * dy[i - i_lo];
            }
            gp[(ib * np + l) * 2 + 0] += w * ax;
            gp[(ib * np + l) * 2 + 1] += w * ay;
          }
        }
      }
    });
  }
  return out;
}

nn::Tensor far_operator_apply(nn::Tensor f_pred, nn::Tensor g, int m) {
  const nn::Shape& fs = f_pred.shape();
  if (fs.rank != 4 || fs.dim[1] != 2 || fs.dim[2] != 2 * m || fs.dim[3] != 2 * m)
    throw ConfigError("far_operator_apply: matrix must be [batch, 2, 2m, 2m], got " + fs.str());
  check_g(g, m, "far_operator_apply");
  const int b = fs.dim[0], n = 2 * m;
  if (g.shape().dim[0] != b) throw ConfigError("far_operator_apply: batch mismatch");
  const double w = pi / m;

  nn::Tape& t = *f_pred.tape;
  nn::Tensor out = t.make_node(nn::Shape{b, n, 2}, {f_pred, g});
  auto fidx = [n](int ib, int ch, int j, int i) { return ((ib * 2 + ch) * n + j) * n + i; };
  {
    std::span<const double> fv = t.val(f_pred.id), gv = t.val(g.id);
    std::span<double> ov = t.val(out.id);
#pragma omp parallel for collapse(2)
    for (int ib = 0; ib < b; ++ib) {
      for (int j = 0; j < n; ++j) {
        double re = 0.0, im = 0.0;
        for (int i = 0; i < n; ++i) {
          const double fr = fv[fidx(ib, 0, j, i)], fi = fv[fidx(ib, 1, j, i)];
          const double gr = gv[ib * 2 * n + 2 * i], gi = gv[ib * 2 * n + 2 * i + 1];
          re += fr * gr - fi * gi;
          im += fr * gi + fi * gr;
        }
        ov[(ib * n + j) * 2 + 0] = w * re;
        ov[(ib * n + j) * 2 + 1] = w * im;
      }
    }
  }
  if (out.requires_grad()) {
    t.set_backward(out.id, [&t, of = f_pred.id, og = g.id, oo = out.id, b, n, w, fidx]() {
      std::span<const double> gout = t.grad_buf(oo);
      std::span<const double> fv = t.val(of), gv = t.val(og);
      if (t.rg(of)) {
        std::span<double> gf = t.grad_buf(of);
#pragma omp parallel for collapse(2)
        for (int ib = 0; ib < b; ++ib) {
          for (int j = 0; j < n; ++j) {
            const double dre = gout[(ib * n + j) * 2 + 0], dim = gout[(ib * n + j) * 2 + 1];
            for (int i = 0; i < n; ++i) {
              const double gr = gv[ib * 2 * n + 2 * i], gi = gv[ib * 2 * n + 2 * i + 1];
              gf[fidx(ib, 0, j, i)] += w * (dre * gr + dim * gi);
              gf[fidx(ib, 1, j, i)] += w * (-dre * gi + dim * gr);
            }
          }
        }
      }
      if (t.rg(og)) {
        std::span<double> gg = t.grad_buf(og);
#pragma omp parallel for collapse(2)
        for (int ib = 0; ib < b; ++ib) {
          for (int i = 0; i < n; ++i) {
            double ar = 0.0, ai = 0.0;
            for (int j = 0; j < n; ++j) {
              const double dre = gout[(ib * n + j) * 2 + 0], dim = gout[(ib * n + j) * 2 + 1];
              const double fr = fv[fidx(ib, 0, j, i)], fi = fv[fidx(ib, 1, j, i)];
              ar += dre * fr + dim * fi;
              ai += -dre * fi + dim * fr;
            }
            gg[ib * 2 * n + 2 * i] += w * ar;
            gg[ib * 2 * n + 2 * i + 1] += w * ai;
          }
        }
      }
    });
  }
  return out;
}

nn::Tensor far_apply_measured(const LimitedAperture& data, nn::Tensor g) {
  const int m = data.m;
  check_g(g, m, "far_apply_measured");
  if (g.shape().dim[0] != 1)
    throw ConfigError("far_apply_measured: measured data carries no batch; expected batch 1");
  const int rows = data.obs_count(), cols = data.inc_count();
  const double w = pi / m;

  nn::Tape& t = *g.tape;
  nn::Tensor out = t.make_node(nn::Shape{1, rows, 2}, {g});
  // snapshot of the measured block; the tape must not alias caller storage
  std::vector<Complex> f(data.entries.data);
  {
    std::span<const double> gv = t.val(g.id);
    std::span<double> ov = t.val(out.id);
    for (int j = 0; j < rows; ++j) {
      Complex acc(0.0, 0.0);
      for (int c = 0; c < cols; ++c) {
        const int gi = data.n_inc - 1 + c;  // global direction index, 0-based
        acc += f[static_cast<size_t>(j) * cols + c] * Complex(gv[2 * gi], gv[2 * gi + 1]);
      }
      ov[2 * j] = w * acc.real();
      ov[2 * j + 1] = w * acc.imag();
    }
  }
  if (out.requires_grad()) {
    t.set_backward(out.id, [&t, og = g.id, oo = out.id, rows, cols, w, n_inc = data.n_inc,
                            f = std::move(f)]() {
      std::span<const double> gout = t.grad_buf(oo);
      std::span<double> gg = t.grad_buf(og);
      for (int c = 0; c < cols; ++c) {
        const int gi = n_inc - 1 + c;
        double ar = 0.0, ai = 0.0;
        for (int j = 0; j < rows; ++j) {
          const Complex fv = f[static_cast<size_t>(j) * cols + c];
          const double dre = gout[2 * j], dim = gout[2 * j + 1];
          ar += dre * fv.real() + dim * fv.imag();
          ai += -dre * fv.imag() + dim * fv.real();
        }
        gg[2 * gi] += w * ar;
        gg[2 * gi + 1] += w * ai;
      }
    });
  }
  return out;
}

nn::Tensor phi_at_points(nn::Tensor points, const SourcePoint& z, double k) {
  check_points(points, "phi_at_points");
  const nn::Shape& ps = points.shape();
  const int b = ps.dim[0], np = ps.dim[1];

  nn::Tape& t = *points.tape;
  nn::Tensor out = t.make_node(ps, {points});
  {
    std::span<const double> pv = t.val(points.id);
    std::span<double> ov = t.val(out.id);
    for (int ib = 0; ib < b; ++ib) {
      for (int l = 0; l < np; ++l) {
        const double ux = pv[(ib * np + l) * 2 + 0] - z.z.x;
        const double uy = pv[(ib * np + l) * 2 + 1] - z.z.y;
        const double r = std::hypot(ux, uy);
        if (r < kMinSourceDistance)
          throw NumericalError("phi_at_points: collocation point touches the source");
        ov[(ib * np + l) * 2 + 0] = -0.25 * bessel_y(0, k * r);
        ov[(ib * np + l) * 2 + 1] = 0.25 * bessel_j(0, k * r);
      }
    }
  }
  if (out.requires_grad()) {
    t.set_backward(out.id, [&t, op = points.id, oo = out.id, b, np, k, zx = z.z.x, zy = z.z.y]() {
      std::span<const double> g = t.grad_buf(oo);
      std::span<const double> pv = t.val(op);
      std::span<double> gp = t.grad_buf(op);
#pragma omp parallel for collapse(2)
      for (int ib = 0; ib < b; ++ib) {
        for (int l = 0; l < np; ++l) {
          const double ux = pv[(ib * np + l) * 2 + 0] - zx;
          const double uy = pv[(ib * np + l) * 2 + 1] - zy;
          const double r = std::hypot(ux, uy);
          // d re / d r = (k/4) Y1(kr), d im / d r = -(k/4) J1(kr)
          const double dr = g[(ib * np + l) * 2 + 0] * 0.25 * k * bessel_y(1, k * r) -
                            g[(ib * np + l) * 2 + 1] * 0.25 * k * bessel_j(1, k * r);
          gp[(ib * np + l) * 2 + 0] += dr * ux / r;
          gp[(ib * np + l) * 2 + 1] += dr * uy / r;
        }
      }
    });
  }
  return out;
}

nn::Tensor j_dc(nn::Tensor f_pred, nn::Tensor f_exact, int m) {
  const double w = (pi / m) * (pi / m);
  return nn::sqnorm_rows(nn::sub(f_pred, f_exact), w);
}

namespace {

// Constant leaf holding phi_farfield at observation directions j_lo..j_hi
// (1-based), replicated across the batch.
nn::Tensor phi_farfield_leaf(nn::Tape& tape, int b, int m, int j_lo, int j_hi,
                             const SourcePoint& z, double k) {
  const int rows = j_hi - j_lo + 1;
  std::vector<double> vals(static_cast<size_t>(b) * rows * 2);
  for (int j = 0; j < rows; ++j) {
    const Complex p = phi_farfield(unit_vector(direction_angle(m, j_lo + j)), z, k);
    for (int ib = 0; ib < b; ++ib) {
      vals[(static_cast<size_t>(ib) * rows + j) * 2 + 0] = p.real();
      vals[(static_cast<size_t>(ib) * rows + j) * 2 + 1] = p.imag();
    }
  }
  return tape.leaf(nn::Shape{b, rows, 2}, vals, false);
}

// The three physics terms shared by the deep and classical objectives. The
// far-field residual tensor is supplied by the caller; the direction range
// [i_lo, i_hi] restricts the Herglotz sums.
nn::Tensor physics_terms(nn::Tensor far_residual, nn::Tensor g, nn::Tensor q_coeffs,
                         const PhysicsConfig& cfg, int i_lo, int i_hi) {
  const LossWeights& w = cfg.weights;
  nn::Tensor t1 = nn::sqnorm_rows(far_residual, pi / cfg.m);

  nn::Tensor pts_outer = curve_points(q_coeffs, cfg.s, cfg.n_t, cfg.outer_scale);
  nn::Tensor hg_outer = herglotz_field(pts_outer, g, cfg.k, cfg.m, i_lo, i_hi);
  nn::Tensor t2 = nn::sqnorm_rows(hg_outer, w.alpha * 2.0 * pi / cfg.n_t);

  nn::Tensor pts = curve_points(q_coeffs, cfg.s, cfg.n_t, 1.0);
  nn::Tensor hg = herglotz_field(pts, g, cfg.k, cfg.m, i_lo, i_hi);
  nn::Tensor phi = phi_at_points(pts, cfg.source, cfg.k);
  nn::Tensor t3 = nn::sqnorm_rows(nn::add(hg, phi), w.gamma * 2.0 * pi / cfg.n_t);

  return nn::add(nn::add(t1, t2), t3);
}

}  // namespace

nn::Tensor j_phy(nn::Tensor f_pred, nn::Tensor g, nn::Tensor q_coeffs, const PhysicsConfig& cfg) {
  const int b = f_pred.shape().dim[0];
  nn::Tensor far = far_operator_apply(f_pred, g, cfg.m);
  nn::Tensor target =
      phi_farfield_leaf(*f_pred.tape, b, cfg.m, 1, 2 * cfg.m, cfg.source, cfg.k);
  return physics_terms(nn::sub(far, target), g, q_coeffs, cfg, 1, 2 * cfg.m);
}

nn::Tensor j_ddm(nn::Tensor f_pred, nn::Tensor f_exact, nn::Tensor g, nn::Tensor q_coeffs,
                 const PhysicsConfig& cfg) {
  return nn::add(j_phy(f_pred, g, q_coeffs, cfg),
                 nn::scale(j_dc(f_pred, f_exact, cfg.m), cfg.weights.beta_dc));
}

nn::Tensor j_cdm(const LimitedAperture& data, nn::Tensor g, nn::Tensor q_coeffs,
                 const PhysicsConfig& cfg) {
  if (data.m != cfg.m) throw ConfigError("j_cdm: aperture grid does not match the configuration");
  nn::Tensor far = far_apply_measured(data, g);
  nn::Tensor target = phi_farfield_leaf(*g.tape, 1, cfg.m, data.n_obs, data.big_n_obs, cfg.source,
                                        cfg.k);
  return physics_terms(nn::sub(far, target), g, q_coeffs, cfg, data.n_inc, data.big_n_inc);
}

double cdm_objective(const std::vector<double>& x, std::vector<double>& grad,
                     const LimitedAperture& data, const PhysicsConfig& cfg, int n_lambda) {
  const int ng = 4 * cfg.m, nq = 2 * n_lambda + 1;
  if (static_cast<int>(x.size()) != ng + nq)
    throw ConfigError("cdm_objective: unknown vector must have 4m + 2*n_lambda + 1 entries");
  nn::Tape tape;
  nn::Tensor g = tape.leaf(nn::Shape{1, ng}, std::span<const double>(x).first(ng), true);
  nn::Tensor q =
      tape.leaf(nn::Shape{1, nq}, std::span<const double>(x).subspan(ng), true);
  nn::Tensor loss = nn::sum_all(j_cdm(data, g, q, cfg));
  tape.backward(loss);
  grad.resize(x.size());
  std::copy(g.grad().begin(), g.grad().end(), grad.begin());
  std::copy(q.grad().begin(), q.grad().end(), grad.begin() + ng);
  return loss.value()[0];
}

}  // namespace ddm
