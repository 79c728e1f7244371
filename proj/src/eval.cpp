#include "ddm/eval.hpp"

#include <algorithm>
#include <cmath>

namespace ddm {

BoundaryError boundary_error(const ParametricShape& exact, const FourierCurve& recovered,
                             int n_t) {
  if (n_t < 1) throw ConfigError("boundary_error: n_t must be positive");
  BoundaryError out;
  out.exact_tag = exact.tag;
  out.residuals.resize(n_t);
  double num = 0.0, den = 0.0;
  double prev_zeta = -1.0;
  for (int l = 0; l < n_t; ++l) {
    const double t = 2.0 * pi * l / n_t;
    double zeta = t;
    double r_exact;
    if (exact.tag == ShapeTag::rounded_square) {
      auto [z, r] = polar_angle_radius(exact, t);
      if (l > 0 && z <= prev_zeta)
        throw NumericalError("boundary_error: polar angle is not monotone along the curve");
      prev_zeta = z;
      zeta = z;
      r_exact = r;
    } else {
      r_exact = exact.point(t).norm();
    }
    const double r_rec = std::exp(q_eval(recovered, zeta));
    out.residuals[l] = r_exact - r_rec;
    num += out.residuals[l] * out.residuals[l];
    den += r_exact * r_exact;
  }
  out.value = std::sqrt(num) / std::sqrt(den);
  return out;
}

namespace {

// One objective evaluation on a single sample, mirroring the training loss:
// physics terms alone at full aperture, plus the weighted completion term
// against the exact full matrix otherwise. Forward only, no backward sweep.
double ddm_loss_value(DdmNetwork& net, const LimitedAperture& data, const Msrm& exact_full,
                      const PhysicsConfig& cfg) {
  nn::Tape tape;
  std::vector<const LimitedAperture*> batch{&data};
  DdmNetwork::Outputs out = net.forward(tape, batch, false);
  nn::Tensor jphy = j_phy(out.f_pred, out.g, out.q, cfg);
  if (data.full()) return nn::mean_all(jphy).value()[0];

  const int n = 2 * net.m();
  std::vector<double> fe(2 * static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      fe[(0 * static_cast<std::size_t>(n) + j) * n + i] = exact_full.entries.at(j, i).real();
      fe[(1 * static_cast<std::size_t>(n) + j) * n + i] = exact_full.entries.at(j, i).imag();
    }
  nn::Tensor fx = tape.leaf(nn::Shape{1, 2, n, n}, fe, false);
  nn::Tensor jdc = j_dc(out.f_pred, fx, net.m());
  return nn::mean_all(nn::add(jphy, nn::scale(jdc, cfg.weights.beta_dc))).value()[0];
}

}  // namespace

NoiseStudy noise_scaling_study(DdmNetwork& net, const LimitedAperture& data,
                               const Msrm& exact_full, const PhysicsConfig& cfg,
                               const std::vector<double>& sigmas, int trials,
                               std::uint64_t seed) {
  if (net.m() != data.m || net.m() != exact_full.m || net.m() != cfg.m)
    throw ConfigError("noise_scaling_study: network, data and config disagree on m");
  if (trials < 2) throw ConfigError("noise_scaling_study: need at least two trials");
  if (sigmas.empty()) throw ConfigError("noise_scaling_study: empty sigma list");
  int positive = 0;
  for (double s : sigmas) {
    if (s < 0.0) throw ConfigError("noise_scaling_study: negative sigma");
    if (s > 0.0) ++positive;
  }
  if (positive < 2)
    throw ConfigError("noise_scaling_study: need at least two positive sigmas for the fit");

  NoiseStudy study;
  study.trials = trials;
  const double base_j = ddm_loss_value(net, data, exact_full, cfg);
  const std::size_t entries = data.entries.data.size();
  const std::uint64_t base_seed = splitmix64(seed);

  // Trials run serially; the tensor kernels inside each evaluation carry the
  // parallelism, and the network's per-forward binding state stays unshared.
  double delta_sq_sum = 0.0;
  std::size_t delta_draws = 0;
  std::vector<double> delta(entries), dj(trials);
  LimitedAperture noisy = data;
  for (std::size_t si = 0; si < sigmas.size(); ++si) {
    const double sigma = sigmas[si];
    for (int t = 0; t < trials; ++t) {
      StableRng rng(splitmix64(base_seed + si * static_cast<std::uint64_t>(trials) + t));
      for (std::size_t e = 0; e < entries; ++e) {
        delta[e] = rng.uniform(-1.0, 1.0);
        delta_sq_sum += delta[e] * delta[e];
      }
      delta_draws += entries;
      for (std::size_t e = 0; e < entries; ++e)
        noisy.entries.data[e] = data.entries.data[e] * (1.0 + sigma * delta[e]);
      const double j_plus = ddm_loss_value(net, noisy, exact_full, cfg);
      for (std::size_t e = 0; e < entries; ++e)
        noisy.entries.data[e] = data.entries.data[e] * (1.0 - sigma * delta[e]);
      const double j_minus = ddm_loss_value(net, noisy, exact_full, cfg);
      dj[t] = 0.5 * (j_plus + j_minus) - base_j;
    }
    NoisePoint pt;
    pt.sigma = sigma;
    double mean = 0.0;
    for (double v : dj) mean += v;
    mean /= trials;
    double var = 0.0;
    for (double v : dj) var += (v - mean) * (v - mean);
    var /= trials - 1;
    pt.mean_dj = mean;
    pt.std_err = std::sqrt(var / trials);
    pt.warned = pt.std_err > 0.2 * std::abs(pt.mean_dj);
    study.points.push_back(pt);
  }
  study.delta_sq_mean = delta_sq_sum / static_cast<double>(delta_draws);

  // log-log least squares over the positive-sigma points
  std::vector<double> xs, ys;
  for (const NoisePoint& pt : study.points) {
    if (pt.sigma == 0.0) continue;
    if (pt.mean_dj == 0.0)
      throw NumericalError("noise_scaling_study: zero mean response at a positive sigma");
    xs.push_back(std::log(pt.sigma));
    ys.push_back(std::log(std::abs(pt.mean_dj)));
  }
  const std::size_t n = xs.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  study.slope = sxy / sxx;
  if (n > 2) {
    const double intercept = my - study.slope * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = ys[i] - (intercept + study.slope * xs[i]);
      rss += r * r;
    }
    study.slope_se = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
  }
  return study;
}

}  // namespace ddm
