#include "ddm/train.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

namespace ddm {

Dataset generate_dataset(const DataConfig& cfg) {
  if (cfg.n_s < 1) throw ConfigError("generate_dataset: n_s must be positive");
  if (cfg.train_fraction < 0.0 || cfg.train_fraction > 1.0)
    throw ConfigError("generate_dataset: train fraction outside [0, 1]");
  aperture_indices(cfg.obs, cfg.m);  // validate alignment up front
  aperture_indices(cfg.inc, cfg.m);

  Dataset out;
  out.config = cfg;
  out.samples.resize(cfg.n_s);
  out.n_train = static_cast<int>(std::floor(cfg.train_fraction * cfg.n_s + 1e-9));

  const unsigned long long base = splitmix64(cfg.seed);
  long retries = 0;
  int exhausted = 0;  // throwing out of a parallel region is not allowed
#pragma omp parallel for schedule(dynamic) reduction(+ : retries, exhausted)
  for (int i = 0; i < cfg.n_s; ++i) {
    for (unsigned long long attempt = 0; attempt <= 50; ++attempt) {
      // Each (sample, attempt) pair owns an independent stream, so results
      // do not depend on scheduling.
      StableRng rng(splitmix64(base + static_cast<unsigned long long>(i) +
                               attempt * 0x9E3779B97F4A7C15ULL));
      FourierCurve curve = sample_random_curve(rng, cfg.n_lambda, cfg.s);
      try {
        Msrm full = assemble_msrm(ParametricShape::from_curve(curve), cfg.k, cfg.m, cfg.solver);
        LimitedAperture block = extract_limited(full, cfg.obs, cfg.inc);
        Sample& s = out.samples[i];
        s.f_l = add_noise(block, cfg.sigma, rng);
        s.f_f = std::move(full);
        s.q_true = curve;
        break;
      } catch (const NumericalError&) {
        if (attempt == 50) {
          ++exhausted;
          break;
        }
        ++retries;
      }
    }
  }
  if (exhausted > 0) throw NumericalError("generate_dataset: persistent forward-solver failures");
  out.retries = retries;
  return out;
}

PhysicsConfig physics_config(const DataConfig& data, const TrainConfig& train) {
  PhysicsConfig pc;
  pc.k = data.k;
  pc.m = data.m;
  pc.n_t = train.n_t;
  pc.s = data.s;
  pc.source = train.source;
  pc.weights = train.weights;
  return pc;
}

double err_batch(const std::vector<std::vector<double>>& q_pred,
                 const std::vector<std::vector<double>>& q_true) {
  if (q_pred.size() != q_true.size() || q_pred.empty())
    throw ConfigError("err_batch: prediction and truth lists must match and be nonempty");
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < q_pred.size(); ++i) {
    if (q_pred[i].size() != q_true[i].size())
      throw ConfigError("err_batch: coefficient vectors must have equal length");
    for (size_t j = 0; j < q_pred[i].size(); ++j) {
      const double d = q_pred[i][j] - q_true[i][j];
      num += d * d;
      den += q_true[i][j] * q_true[i][j];
    }
  }
  if (den == 0.0) throw NumericalError("err_batch: all reference coefficients vanish");
  return std::sqrt(num) / std::sqrt(den);
}

namespace {

struct EpochAccumulator {
  double l_ddm = 0.0, l_phy = 0.0, l_dc = 0.0;
  double err_num = 0.0, err_den = 0.0;
  int iterations = 0;

  EpochStats finish() const {
    EpochStats s;
    if (iterations > 0) {
      s.l_ddm = l_ddm / iterations;
      s.l_phy = l_phy / iterations;
      s.l_dc = l_dc / iterations;
    }
    s.err = err_den > 0.0 ? std::sqrt(err_num) / std::sqrt(err_den) : 0.0;
    return s;
  }
};

std::vector<double> pack_exact(const std::vector<const Sample*>& batch, int n) {
  std::vector<double> fe(batch.size() * 2 * static_cast<size_t>(n) * n);
  for (size_t ib = 0; ib < batch.size(); ++ib) {
    const CMatrix& f = batch[ib]->f_f.entries;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        fe[((ib * 2 + 0) * n + j) * n + i] = f.at(j, i).real();
        fe[((ib * 2 + 1) * n + j) * n + i] = f.at(j, i).imag();
      }
  }
  return fe;
}

}  // namespace

TrainResult train_ddm(DdmNetwork& net, const Dataset& data, const TrainConfig& cfg,
                      const std::function<void(int, const EpochStats&)>& on_epoch) {
  if (data.samples.empty()) throw ConfigError("train_ddm: empty dataset");
  if (data.config.m != net.m() || data.config.n_lambda != net.n_lambda())
    throw ConfigError("train_ddm: dataset and network disagree on m or n_lambda");
  if (data.n_train < 1) throw ConfigError("train_ddm: no training samples");
  if (cfg.batch < 2) throw ConfigError("train_ddm: batch size must be at least 2");
  if (cfg.batch > std::max(1, data.n_train / 4))
    throw ConfigError("train_ddm: batch size must not exceed a quarter of the training split");
  if (cfg.epochs < 1) throw ConfigError("train_ddm: epochs must be positive");

  const int n = 2 * net.m();
  const int nq = 2 * net.n_lambda() + 1;
  const PhysicsConfig pc = physics_config(data.config, cfg);
  const bool full = data.samples[0].f_l.full();

  TrainResult result;
  result.history.reserve(cfg.epochs);
  StableRng rng(cfg.seed);
  std::vector<int> order(data.n_train);
  std::iota(order.begin(), order.end(), 0);
  const int iters = (data.n_train + cfg.batch - 1) / cfg.batch;
  double initial_loss = 0.0;
  bool have_initial = false;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle) rng.shuffle(order);
    EpochAccumulator acc;
    for (int it = 0; it < iters; ++it) {
      const int lo = it * cfg.batch;
      const int hi = std::min(lo + cfg.batch, data.n_train);
      if (hi - lo < 2) {
        // batchnorm cannot train on one sample; only possible on the tail
        ++result.skipped_iterations;
        continue;
      }
      std::vector<const Sample*> batch;
      std::vector<const LimitedAperture*> inputs;
      for (int idx = lo; idx < hi; ++idx) {
        batch.push_back(&data.samples[order[idx]]);
        inputs.push_back(&data.samples[order[idx]].f_l);
      }
      const int b = static_cast<int>(batch.size());

      nn::Tape tape;
      DdmNetwork::Outputs out = net.forward(tape, inputs, true);
      nn::Tensor jphy = j_phy(out.f_pred, out.g, out.q, pc);
      double l_phy = 0.0, l_dc = 0.0;
      nn::Tensor loss{};
      if (full) {
        loss = nn::mean_all(jphy);
      } else {
        nn::Tensor fx = tape.leaf(nn::Shape{b, 2, n, n}, pack_exact(batch, n), false);
        nn::Tensor jdc = j_dc(out.f_pred, fx, net.m());
        for (int ib = 0; ib < b; ++ib) l_dc += jdc.value()[ib];
        l_dc /= b;
        loss = nn::mean_all(nn::add(jphy, nn::scale(jdc, pc.weights.beta_dc)));
      }
      for (int ib = 0; ib < b; ++ib) l_phy += jphy.value()[ib];
      l_phy /= b;
      const double l_total = loss.value()[0];
      if (!std::isfinite(l_total)) throw NumericalError("train_ddm: loss diverged");
      if (!have_initial) {
        initial_loss = l_total;
        have_initial = true;
      }
      if (l_total > 10.0 * initial_loss) ++result.warnings;

      tape.backward(loss);
      net.adam_step(cfg.adam);

      acc.l_ddm += l_total;
      acc.l_phy += l_phy;
      acc.l_dc += l_dc;
      ++acc.iterations;
      for (int ib = 0; ib < b; ++ib) {
        const std::vector<double> truth = batch[ib]->q_true.coeffs();
        for (int j = 0; j < nq; ++j) {
          const double d = out.q.value()[ib * nq + j] - truth[j];
          acc.err_num += d * d;
          acc.err_den += truth[j] * truth[j];
        }
      }
    }
    const EpochStats stats = acc.finish();
    result.history.push_back(stats);
    if (result.best_epoch < 0 || stats.l_ddm < result.best_l_ddm) {
      result.best_epoch = epoch;
      result.best_l_ddm = stats.l_ddm;
      result.best_params = net.params();
      result.best_bn = net.bn_buffers();
      result.best_step = net.step();
    }
    if (on_epoch) on_epoch(epoch, stats);
  }
  return result;
}

double terr(DdmNetwork& net, const Dataset& data) {
  const int n_test = data.test_count();
  if (n_test < 1) throw ConfigError("terr: empty test split");
  const int nq = 2 * net.n_lambda() + 1;
  double num = 0.0, den = 0.0;
  const int chunk = 64;
  for (int lo = data.n_train; lo < static_cast<int>(data.samples.size()); lo += chunk) {
    const int hi = std::min(lo + chunk, static_cast<int>(data.samples.size()));
    std::vector<const LimitedAperture*> inputs;
    for (int i = lo; i < hi; ++i) inputs.push_back(&data.samples[i].f_l);
    nn::Tape tape;
    DdmNetwork::Outputs out = net.forward(tape, inputs, false);
    for (int i = lo; i < hi; ++i) {
      const std::vector<double> truth = data.samples[i].q_true.coeffs();
      for (int j = 0; j < nq; ++j) {
        const double d = out.q.value()[(i - lo) * nq + j] - truth[j];
        num += d * d;
        den += truth[j] * truth[j];
      }
    }
  }
  if (den == 0.0) throw NumericalError("terr: all reference coefficients vanish");
  return std::sqrt(num) / std::sqrt(den);
}

InvertResult invert(DdmNetwork& net, const LimitedAperture& input, const DataConfig& trained_on) {
  const auto [obs_lo, obs_hi] = aperture_indices(trained_on.obs, trained_on.m);
  const auto [inc_lo, inc_hi] = aperture_indices(trained_on.inc, trained_on.m);
  if (input.m != trained_on.m || input.n_obs != obs_lo || input.big_n_obs != obs_hi ||
      input.n_inc != inc_lo || input.big_n_inc != inc_hi)
    throw ConfigError("invert: input aperture differs from the training configuration");
  const auto start = std::chrono::steady_clock::now();
  DdmNetwork::Inversion inv = net.infer(input, trained_on.s);
  InvertResult out;
  out.q = inv.q;
  out.g = std::move(inv.g);
  out.f_pred = std::move(inv.f_pred);
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace ddm
