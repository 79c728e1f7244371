#include "ddm/network.hpp"

#include <cmath>
#include <cstring>

namespace ddm {

void adam_update(Param& p, std::span<const double> grad, const AdamConfig& cfg, long step) {
  if (grad.size() != p.value.size())
    throw ConfigError("adam_update: gradient size does not match parameter " + p.name);
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  const int n = static_cast<int>(p.value.size());
#pragma omp parallel for
  for (int i = 0; i < n; ++i) {
    p.m1[i] = cfg.beta1 * p.m1[i] + (1.0 - cfg.beta1) * grad[i];
    p.m2[i] = cfg.beta2 * p.m2[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    const double mhat = p.m1[i] / bc1;
    const double vhat = p.m2[i] / bc2;
    p.value[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

nn::Tensor embed_aperture(nn::Tape& tape, const std::vector<const LimitedAperture*>& batch) {
  if (batch.empty()) throw ConfigError("embed_aperture: empty batch");
  const int m = batch[0]->m, n = 2 * m;
  for (const LimitedAperture* s : batch)
    if (s == nullptr || s->m != m)
      throw ConfigError("embed_aperture: samples must share one direction grid");
  const int b = static_cast<int>(batch.size());
  nn::Tensor canvas = tape.leaf(nn::Shape{b, 3, n, n}, false);
  std::span<double> v = canvas.value();
  for (int ib = 0; ib < b; ++ib) {
    const LimitedAperture& s = *batch[ib];
    for (int j = s.n_obs; j <= s.big_n_obs; ++j) {
      for (int i = s.n_inc; i <= s.big_n_inc; ++i) {
        const Complex e = s.entries.at(j - s.n_obs, i - s.n_inc);
        const size_t base = ((static_cast<size_t>(ib) * 3 + 0) * n + (j - 1)) * n + (i - 1);
        const size_t plane = static_cast<size_t>(n) * n;
        v[base] = e.real();
        v[base + plane] = e.imag();
        v[base + 2 * plane] = 1.0;
      }
    }
  }
  return canvas;
}

DdmNetwork::DdmNetwork(int m, int n_lambda, StableRng& rng) {
  m_ = m;
  n_lambda_ = n_lambda;
  build_layout();
  for (Param& p : params_) {
    const bool is_weight = p.name.ends_with(".w");
    const bool is_gamma = p.name.ends_with(".gamma");
    for (double& x : p.value) {
      if (is_weight)
        x = rng.normal(0.0, 0.02);
      else
        x = is_gamma ? 1.0 : 0.0;
    }
  }
}

DdmNetwork DdmNetwork::empty(int m, int n_lambda) {
  DdmNetwork net;
  net.m_ = m;
  net.n_lambda_ = n_lambda;
  net.build_layout();
  return net;
}

void DdmNetwork::build_layout() {
  if (m_ < 1 || n_lambda_ < 1) throw ConfigError("network requires m >= 1 and n_lambda >= 1");
  params_.clear();
  bn_.clear();
  const int n = 2 * m_;
  const int img = n * n;
  auto param = [this](const std::string& name, nn::Shape shape) {
    Param p;
    p.name = name;
    p.shape = shape;
    p.value.assign(static_cast<size_t>(shape.numel()), 0.0);
    p.m1 = p.value;
    p.m2 = p.value;
    params_.push_back(std::move(p));
  };
  auto bnbuf = [this](const std::string& name, int c) {
    BnBuffers buf;
    buf.name = name;
    buf.mean.assign(c, 0.0);
    buf.var.assign(c, 1.0);
    bn_.push_back(std::move(buf));
  };
  auto conv_bn = [&](const std::string& net, int ci, int c1) {
    param(net + ".conv1.w", nn::Shape{c1, ci, 3, 3});
    param(net + ".conv1.b", nn::Shape{c1});
    param(net + ".bn1.gamma", nn::Shape{c1});
    param(net + ".bn1.beta", nn::Shape{c1});
    param(net + ".conv2.w", nn::Shape{1, c1, 3, 3});
    param(net + ".conv2.b", nn::Shape{1});
    param(net + ".bn2.gamma", nn::Shape{1});
    param(net + ".bn2.beta", nn::Shape{1});
    bnbuf(net + ".bn1", c1);
    bnbuf(net + ".bn2", 1);
  };
  conv_bn("dc", 3, 16);
  param("dc.fc.w", nn::Shape{img, 2 * img});
  param("dc.fc.b", nn::Shape{2 * img});
  conv_bn("hk", 2, 4);
  param("hk.fc1.w", nn::Shape{img, 512});
  param("hk.fc1.b", nn::Shape{512});
  param("hk.fc2.w", nn::Shape{512, 4 * m_});
  param("hk.fc2.b", nn::Shape{4 * m_});
  conv_bn("br", 2, 4);
  param("br.fc1.w", nn::Shape{img, 512});
  param("br.fc1.b", nn::Shape{512});
  param("br.fc2.w", nn::Shape{512, 128});
  param("br.fc2.b", nn::Shape{128});
  param("br.fc3.w", nn::Shape{128, 2 * n_lambda_ + 1});
  param("br.fc3.b", nn::Shape{2 * n_lambda_ + 1});
}

long DdmNetwork::parameter_count() const {
  long total = 0;
  for (const Param& p : params_) total += p.shape.numel();
  return total;
}

DdmNetwork::Outputs DdmNetwork::forward(nn::Tape& tape,
                                        const std::vector<const LimitedAperture*>& batch,
                                        bool train) {
  if (batch.empty()) throw ConfigError("forward: empty batch");
  const LimitedAperture& first = *batch[0];
  for (const LimitedAperture* s : batch)
    if (s->m != m_ || s->n_obs != first.n_obs || s->big_n_obs != first.big_n_obs ||
        s->n_inc != first.n_inc || s->big_n_inc != first.big_n_inc)
      throw ConfigError("forward: batch must share one aperture window matching the network");
  const int b = static_cast<int>(batch.size());
  const int n = 2 * m_;

  // Bind every parameter in layout order; adam_step reads these gradients.
  bound_.clear();
  for (Param& p : params_) bound_.push_back(tape.leaf(p.shape, p.value, true));
  auto bp = [this](const char* name) -> nn::Tensor {
    for (size_t i = 0; i < params_.size(); ++i)
      if (params_[i].name == name) return bound_[i];
    throw ConfigError(std::string("forward: unknown parameter ") + name);
  };
  auto buf = [this](const char* name) -> BnBuffers& {
    for (BnBuffers& x : bn_)
      if (x.name == name) return x;
    throw ConfigError(std::string("forward: unknown batchnorm buffer ") + name);
  };
  auto trunk = [&](nn::Tensor x, const std::string& net) {
    BnBuffers& b1 = buf((net + ".bn1").c_str());
    BnBuffers& b2 = buf((net + ".bn2").c_str());
    auto c1 = nn::relu(nn::batchnorm2d(
        nn::conv3x3(x, bp((net + ".conv1.w").c_str()), bp((net + ".conv1.b").c_str())),
        bp((net + ".bn1.gamma").c_str()), bp((net + ".bn1.beta").c_str()), b1.mean, b1.var,
        train));
    auto c2 = nn::relu(nn::batchnorm2d(
        nn::conv3x3(c1, bp((net + ".conv2.w").c_str()), bp((net + ".conv2.b").c_str())),
        bp((net + ".bn2.gamma").c_str()), bp((net + ".bn2.beta").c_str()), b2.mean, b2.var,
        train));
    return nn::flatten(c2);
  };

  Outputs out;
  if (first.full()) {
    // Full aperture: nothing to complete; the measured matrix passes through
    // as a constant and only the kernel and reconstruction networks act.
    nn::Tensor f = tape.leaf(nn::Shape{b, 2, n, n}, false);
    std::span<double> v = f.value();
    for (int ib = 0; ib < b; ++ib)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          const Complex e = batch[ib]->entries.at(j, i);
          v[((static_cast<size_t>(ib) * 2 + 0) * n + j) * n + i] = e.real();
          v[((static_cast<size_t>(ib) * 2 + 1) * n + j) * n + i] = e.imag();
        }
    out.f_pred = f;
  } else {
    nn::Tensor input = embed_aperture(tape, batch);
    nn::Tensor fc = nn::linear(trunk(input, "dc"), bp("dc.fc.w"), bp("dc.fc.b"));
    out.f_pred = nn::reshape(fc, nn::Shape{b, 2, n, n});
  }

  nn::Tensor hk = trunk(out.f_pred, "hk");
  out.g = nn::linear(nn::linear(hk, bp("hk.fc1.w"), bp("hk.fc1.b")), bp("hk.fc2.w"),
                     bp("hk.fc2.b"));
  nn::Tensor br = trunk(out.f_pred, "br");
  out.q = nn::linear(
      nn::linear(nn::linear(br, bp("br.fc1.w"), bp("br.fc1.b")), bp("br.fc2.w"), bp("br.fc2.b")),
      bp("br.fc3.w"), bp("br.fc3.b"));
  out.bound_params = bound_;
  return out;
}

void DdmNetwork::adam_step(const AdamConfig& cfg) {
  if (bound_.size() != params_.size())
    throw ConfigError("adam_step: no bound forward pass to read gradients from");
  ++step_;
  for (size_t i = 0; i < params_.size(); ++i)
    adam_update(params_[i], bound_[i].grad(), cfg, step_);
}

DdmNetwork::Inversion DdmNetwork::infer(const LimitedAperture& data, double s) {
  nn::Tape tape;
  Outputs out = forward(tape, {&data}, false);
  const int n = 2 * m_;
  Inversion inv;
  inv.f_pred = CMatrix(n, n);
  std::span<const double> fv = out.f_pred.value();
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      inv.f_pred.at(j, i) = Complex(fv[(static_cast<size_t>(0) * n + j) * n + i],
                                    fv[((static_cast<size_t>(1)) * n + j) * n + i]);
  inv.g.values.resize(n);
  std::span<const double> gv = out.g.value();
  for (int i = 0; i < n; ++i) inv.g.values[i] = Complex(gv[2 * i], gv[2 * i + 1]);
  std::span<const double> qv = out.q.value();
  inv.q = FourierCurve::from_coeffs(std::vector<double>(qv.begin(), qv.end()), s);
  return inv;
}

}  // namespace ddm
