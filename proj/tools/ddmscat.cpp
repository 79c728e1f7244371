// ddmscat: command-line workbench around the ddm library. One binary with
// subcommands for data generation, training, inversion, the classical
// baselines, evaluation, and the noise-scaling study. All file outputs are
// deterministic for a fixed --seed with --threads 1; wall-clock timings go to
// stderr only.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "ddm/baselines.hpp"
#include "ddm/eval.hpp"
#include "ddm/serialize.hpp"
#include "ddm/svg.hpp"
#include "ddm/train.hpp"
#include "json.hpp"

namespace {

using json = nlohmann::ordered_json;
using ddm::ConfigError;
using ddm::IoError;

struct RunConfig {
  double k = 3.0;
  int m = 16;
  int n_t = 64;
  int n_lambda = 8;
  double s = 1.0;
  double z_x = 0.0, z_y = 0.0;
  double alpha = 1e-8;
  double gamma = 1.0;
  double beta_dc = 10.0;
  std::string obs = "0:2";  // observation arc as fractions of pi, "lo:hi"
  std::string inc = "0:2";  // incidence arc
  double sigma = 0.0;
  int n_s = 500;
  int epochs = 200;
  int batch = 64;
  double lr = 1e-4;
  double train_fraction = 0.8;
  int n_q = 128;
  unsigned long long seed = 1;
  std::string out_dir = "out";
};

// "0", "2", "1/2", "0.25" -> multiples of pi.
double parse_pi_token(const std::string& tok) {
  try {
    std::size_t used = 0;
    const std::size_t slash = tok.find('/');
    if (slash == std::string::npos) {
      const double v = std::stod(tok, &used);
      if (used != tok.size()) throw ConfigError("");
      return v;
    }
    const double num = std::stod(tok.substr(0, slash), &used);
    if (used != slash) throw ConfigError("");
    const std::string den_s = tok.substr(slash + 1);
    const double den = std::stod(den_s, &used);
    if (used != den_s.size() || den == 0.0) throw ConfigError("");
    return num / den;
  } catch (const std::exception&) {
    throw ConfigError("aperture: cannot parse '" + tok + "' as a fraction of pi");
  }
}

ddm::ApertureArc parse_arc(const std::string& spec) {
  const std::size_t colon = spec.find(':');
  if (colon == std::string::npos || spec.find(':', colon + 1) != std::string::npos)
    throw ConfigError("aperture: expected 'lo:hi' in fractions of pi, got '" + spec + "'");
  ddm::ApertureArc arc;
  arc.lo_pi = parse_pi_token(spec.substr(0, colon));
  arc.hi_pi = parse_pi_token(spec.substr(colon + 1));
  return arc;
}

std::vector<double> parse_sigma_list(const std::string& spec) {
  std::vector<double> out;
  std::size_t at = 0;
  while (at <= spec.size()) {
    const std::size_t comma = std::min(spec.find(',', at), spec.size());
    const std::string tok = spec.substr(at, comma - at);
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw ConfigError("");
    } catch (const std::exception&) {
      throw ConfigError("sigmas: cannot parse '" + tok + "'");
    }
    at = comma + 1;
  }
  return out;
}

ddm::DataConfig to_data_config(const RunConfig& rc) {
  ddm::DataConfig cfg;
  cfg.n_s = rc.n_s;
  cfg.k = rc.k;
  cfg.m = rc.m;
  cfg.n_lambda = rc.n_lambda;
  cfg.s = rc.s;
  cfg.sigma = rc.sigma;
  cfg.obs = parse_arc(rc.obs);
  cfg.inc = parse_arc(rc.inc);
  cfg.seed = rc.seed;
  cfg.train_fraction = rc.train_fraction;
  cfg.solver.n_q = rc.n_q;
  return cfg;
}

ddm::TrainConfig to_train_config(const RunConfig& rc) {
  ddm::TrainConfig cfg;
  cfg.epochs = rc.epochs;
  cfg.batch = rc.batch;
  cfg.adam.lr = rc.lr;
  cfg.weights.alpha = rc.alpha;
  cfg.weights.gamma = rc.gamma;
  cfg.weights.beta_dc = rc.beta_dc;
  cfg.n_t = rc.n_t;
  cfg.source.z = {rc.z_x, rc.z_y};
  cfg.seed = rc.seed;
  return cfg;
}

json config_json(const RunConfig& rc) {
  return json{{"k", rc.k},
              {"m", rc.m},
              {"n_t", rc.n_t},
              {"n_lambda", rc.n_lambda},
              {"s", rc.s},
              {"z", {rc.z_x, rc.z_y}},
              {"alpha", rc.alpha},
              {"gamma", rc.gamma},
              {"beta_dc", rc.beta_dc},
              {"obs", rc.obs},
              {"inc", rc.inc},
              {"sigma", rc.sigma},
              {"n_s", rc.n_s},
              {"epochs", rc.epochs},
              {"batch", rc.batch},
              {"lr", rc.lr},
              {"train_fraction", rc.train_fraction},
              {"n_q", rc.n_q},
              {"seed", rc.seed},
              {"out_dir", rc.out_dir}};
}

json data_config_json(const ddm::DataConfig& c) {
  return json{{"n_s", c.n_s},
              {"k", c.k},
              {"m", c.m},
              {"n_lambda", c.n_lambda},
              {"s", c.s},
              {"sigma", c.sigma},
              {"obs_pi", {c.obs.lo_pi, c.obs.hi_pi}},
              {"inc_pi", {c.inc.lo_pi, c.inc.hi_pi}},
              {"seed", c.seed},
              {"train_fraction", c.train_fraction},
              {"n_q", c.solver.n_q}};
}

std::filesystem::path out_path(const RunConfig& rc, const std::string& name) {
  std::filesystem::create_directories(rc.out_dir);
  return std::filesystem::path(rc.out_dir) / name;
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << j.dump(2) << '\n';
  os.flush();
  if (!os.good()) throw IoError("failed writing " + path.string());
}

// Default probe: the first held-out sample, falling back to sample 0 when the
// dataset has no test split.
int resolve_sample(const ddm::Dataset& ds, int requested) {
  if (ds.samples.empty()) throw ConfigError("dataset holds no samples");
  if (requested < 0) return ds.test_count() > 0 ? ds.n_train : 0;
  if (requested >= static_cast<int>(ds.samples.size()))
    throw ConfigError("sample index " + std::to_string(requested) + " out of range (" +
                      std::to_string(ds.samples.size()) + " samples)");
  return requested;
}

void require_compatible(const ddm::DataConfig& trained, const ddm::DataConfig& data) {
  if (trained.m != data.m || trained.n_lambda != data.n_lambda || trained.k != data.k ||
      trained.s != data.s || trained.obs.lo_pi != data.obs.lo_pi ||
      trained.obs.hi_pi != data.obs.hi_pi || trained.inc.lo_pi != data.inc.lo_pi ||
      trained.inc.hi_pi != data.inc.hi_pi)
    throw ConfigError("checkpoint and dataset disagree on geometry or aperture");
}

// Checkpoints carry the final state plus the best-epoch snapshot; inversion
// defaults to the snapshot.
void select_weights(ddm::Checkpoint& ck, bool use_final) {
  if (use_final || !ck.has_best()) return;
  ck.net.params() = ck.best_params;
  ck.net.bn_buffers() = ck.best_bn;
  ck.net.set_step(ck.best_step);
}

std::vector<ddm::Vec2> sample_shape(const ddm::ParametricShape& shape, int n = 256) {
  std::vector<ddm::Vec2> pts;
  pts.reserve(n);
  for (int i = 0; i < n; ++i) pts.push_back(shape.point(2.0 * ddm::pi * i / n));
  return pts;
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

void report_time(const std::string& what, const Timer& timer) {
  std::cerr << "[time] " << what << ": " << timer.seconds() << " s\n";
}

int cmd_gen_data(const RunConfig& rc, const std::string& out_name) {
  Timer timer;
  const ddm::DataConfig cfg = to_data_config(rc);
  const ddm::Dataset ds = ddm::generate_dataset(cfg);
  const std::filesystem::path file = out_path(rc, out_name);
  ddm::save_dataset(ds, file.string());
  write_json_file(out_path(rc, "dataset.json"),
                  json{{"config", config_json(rc)},
                       {"file", out_name},
                       {"bytes", ddm::dataset_file_size(cfg)},
                       {"samples", ds.samples.size()},
                       {"n_train", ds.n_train},
                       {"test_count", ds.test_count()},
                       {"retries", ds.retries}});
  std::cout << "wrote " << file.string() << ": " << ds.samples.size() << " samples ("
            << ds.n_train << " train), " << ddm::dataset_file_size(cfg) << " bytes, "
            << ds.retries << " retries\n";
  report_time("gen-data", timer);
  return 0;
}

int cmd_train(const RunConfig& rc, const std::string& data_path) {
  Timer timer;
  const ddm::Dataset ds = ddm::load_dataset(data_path);
  const ddm::TrainConfig tc = to_train_config(rc);
  ddm::StableRng rng(rc.seed);
  ddm::DdmNetwork net(ds.config.m, ds.config.n_lambda, rng);
  const ddm::TrainResult r =
      ddm::train_ddm(net, ds, tc, [&](int epoch, const ddm::EpochStats& st) {
        std::cerr << "epoch " << epoch + 1 << '/' << tc.epochs << " l_ddm=" << st.l_ddm
                  << " err=" << st.err << '\n';
      });
  const double test_err = ds.test_count() > 0 ? ddm::terr(net, ds) : -1.0;

  ddm::Checkpoint ck;
  ck.data = ds.config;
  ck.train = tc;
  ck.net = net;
  ck.best_params = r.best_params;
  ck.best_bn = r.best_bn;
  ck.best_step = r.best_step;
  ck.best_l_ddm = r.best_l_ddm;
  ck.best_epoch = r.best_epoch;
  ddm::save_checkpoint(ck, out_path(rc, "model.ckpt").string());
  ddm::write_history_csv(out_path(rc, "history.csv").string(), r.history);
  ddm::svg::write_loss_curves(out_path(rc, "loss.svg").string(), r.history);

  const ddm::EpochStats& first = r.history.front();
  const ddm::EpochStats& last = r.history.back();
  json j{{"config", config_json(rc)},
         {"data", data_config_json(ds.config)},
         {"data_file", data_path},
         {"parameter_count", net.parameter_count()},
         {"epochs", rc.epochs},
         {"first", {{"l_ddm", first.l_ddm}, {"l_phy", first.l_phy}, {"l_dc", first.l_dc}, {"err", first.err}}},
         {"final", {{"l_ddm", last.l_ddm}, {"l_phy", last.l_phy}, {"l_dc", last.l_dc}, {"err", last.err}}},
         {"best_epoch", r.best_epoch},
         {"best_l_ddm", r.best_l_ddm},
         {"terr", test_err},
         {"warnings", r.warnings},
         {"skipped_iterations", r.skipped_iterations},
         {"outputs", {{"checkpoint", "model.ckpt"}, {"history", "history.csv"}, {"loss_svg", "loss.svg"}}}};
  write_json_file(out_path(rc, "train.json"), j);
  std::cout << "trained " << rc.epochs << " epochs: l_ddm " << first.l_ddm << " -> " << last.l_ddm
            << ", err " << first.err << " -> " << last.err << ", terr " << test_err << '\n';
  report_time("train", timer);
  return 0;
}

int cmd_invert(const RunConfig& rc, const std::string& ckpt_path, const std::string& data_path,
               int sample, bool use_final) {
  Timer timer;
  ddm::Checkpoint ck = ddm::load_checkpoint(ckpt_path);
  const ddm::Dataset ds = ddm::load_dataset(data_path);
  require_compatible(ck.data, ds.config);
  select_weights(ck, use_final);
  const int idx = resolve_sample(ds, sample);
  const ddm::Sample& probe = ds.samples[idx];

  const ddm::InvertResult res = ddm::invert(ck.net, probe.f_l, ck.data);
  const ddm::ParametricShape exact = ddm::ParametricShape::from_curve(probe.q_true);
  const ddm::BoundaryError be = ddm::boundary_error(exact, res.q, ck.train.n_t);

  ddm::svg::write_overlay(out_path(rc, "boundary.svg").string(), "recovered boundary",
                          {{"exact", "#000000", sample_shape(exact), true, false},
                           {"ddm", "#d62728",
                            sample_shape(ddm::ParametricShape::from_curve(res.q)), true, true}});
  json gj = json::array();
  for (const ddm::Complex& c : res.g.values) gj.push_back({c.real(), c.imag()});
  write_json_file(out_path(rc, "invert.json"), json{{"config", config_json(rc)},
                                                    {"data", data_config_json(ds.config)},
                                                    {"sample", idx},
                                                    {"e_bar", be.value},
                                                    {"q", res.q.coeffs()},
                                                    {"g", gj},
                                                    {"outputs", {{"boundary_svg", "boundary.svg"}}}});
  std::cout << "sample " << idx << ": e_bar = " << be.value << '\n';
  std::cerr << "[time] inversion forward pass: " << res.wall_seconds << " s\n";
  report_time("invert", timer);
  return 0;
}

int cmd_cdm(const RunConfig& rc, const std::string& data_path, int sample, int max_iters) {
  Timer timer;
  const ddm::Dataset ds = ddm::load_dataset(data_path);
  const int idx = resolve_sample(ds, sample);
  const ddm::Sample& probe = ds.samples[idx];
  const ddm::PhysicsConfig pc = ddm::physics_config(ds.config, to_train_config(rc));

  ddm::CdmOptions opt;
  opt.bfgs.max_iters = max_iters;
  const ddm::CdmResult r = ddm::run_cdm(probe.f_l, pc, ds.config.n_lambda, opt);
  const ddm::ParametricShape exact = ddm::ParametricShape::from_curve(probe.q_true);
  const ddm::BoundaryError be = ddm::boundary_error(exact, r.q, rc.n_t);

  ddm::write_objective_csv(out_path(rc, "cdm_history.csv").string(), r.history);
  ddm::svg::write_overlay(out_path(rc, "cdm_boundary.svg").string(), "cdm boundary",
                          {{"exact", "#000000", sample_shape(exact), true, false},
                           {"cdm", "#1f77b4",
                            sample_shape(ddm::ParametricShape::from_curve(r.q)), true, true}});
  write_json_file(out_path(rc, "cdm.json"),
                  json{{"config", config_json(rc)},
                       {"data", data_config_json(ds.config)},
                       {"sample", idx},
                       {"iterations", r.iterations},
                       {"degraded", r.degraded},
                       {"objective", r.history.back()},
                       {"e_bar", be.value},
                       {"q", r.q.coeffs()},
                       {"outputs", {{"history", "cdm_history.csv"}, {"boundary_svg", "cdm_boundary.svg"}}}});
  std::cout << "sample " << idx << ": cdm e_bar = " << be.value << " after " << r.iterations
            << " iterations (objective " << r.history.back() << ")\n";
  report_time("baseline-cdm", timer);
  return 0;
}

int cmd_dsm(const RunConfig& rc, const std::string& data_path, int sample) {
  Timer timer;
  const ddm::Dataset ds = ddm::load_dataset(data_path);
  const int idx = resolve_sample(ds, sample);
  const ddm::SamplingGrid grid = ddm::run_dsm(ds.samples[idx].f_l, ds.config.k);

  int best = 0;
  for (int i = 1; i < static_cast<int>(grid.values.size()); ++i)
    if (grid.values[i] > grid.values[best]) best = i;
  const double bx = grid.coord(best % grid.resolution);
  const double by = grid.coord(best / grid.resolution);

  ddm::write_grid_csv(out_path(rc, "dsm_grid.csv").string(), grid);
  write_json_file(out_path(rc, "dsm.json"), json{{"config", config_json(rc)},
                                                 {"data", data_config_json(ds.config)},
                                                 {"sample", idx},
                                                 {"resolution", grid.resolution},
                                                 {"max_indicator", grid.values[best]},
                                                 {"argmax", {bx, by}},
                                                 {"outputs", {{"grid", "dsm_grid.csv"}}}});
  std::cout << "sample " << idx << ": indicator max " << grid.values[best] << " at (" << bx
            << ", " << by << ")\n";
  report_time("baseline-dsm", timer);
  return 0;
}

int cmd_eval(const RunConfig& rc, const std::string& ckpt_path, const std::string& data_path,
             int sample, int limit, bool with_cdm, bool use_final) {
  Timer timer;
  ddm::Checkpoint ck = ddm::load_checkpoint(ckpt_path);
  const ddm::Dataset ds = ddm::load_dataset(data_path);
  require_compatible(ck.data, ds.config);
  select_weights(ck, use_final);
  if (ds.test_count() < 1) throw ConfigError("eval requires a dataset with a test split");
  const int count = limit < 0 ? ds.test_count() : std::min(limit, ds.test_count());
  if (count < 1) throw ConfigError("eval: --limit must leave at least one sample");

  std::ofstream csv(out_path(rc, "eval.csv"), std::ios::trunc);
  if (!csv) throw IoError("cannot open eval.csv for writing");
  csv << std::setprecision(17) << "sample,e_bar\n";
  std::vector<double> errors;
  errors.reserve(count);
  for (int t = 0; t < count; ++t) {
    const int idx = ds.n_train + t;
    const ddm::Sample& probe = ds.samples[idx];
    const ddm::InvertResult res = ddm::invert(ck.net, probe.f_l, ck.data);
    const ddm::BoundaryError be =
        ddm::boundary_error(ddm::ParametricShape::from_curve(probe.q_true), res.q, ck.train.n_t);
    errors.push_back(be.value);
    csv << idx << ',' << be.value << '\n';
    std::cout << "sample " << idx << ": e_bar = " << be.value << '\n';
  }
  csv.flush();
  if (!csv.good()) throw IoError("failed writing eval.csv");

  std::vector<double> sorted = errors;
  std::sort(sorted.begin(), sorted.end());
  const double mean =
      std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(count);
  const double median = count % 2 ? sorted[count / 2]
                                  : 0.5 * (sorted[count / 2 - 1] + sorted[count / 2]);
  const double test_err = ddm::terr(ck.net, ds);

  const int overlay_idx = resolve_sample(ds, sample);
  const ddm::Sample& probe = ds.samples[overlay_idx];
  const ddm::ParametricShape exact = ddm::ParametricShape::from_curve(probe.q_true);
  const ddm::InvertResult res = ddm::invert(ck.net, probe.f_l, ck.data);
  std::vector<ddm::svg::Series> overlay{
      {"exact", "#000000", sample_shape(exact), true, false},
      {"ddm", "#d62728", sample_shape(ddm::ParametricShape::from_curve(res.q)), true, true}};
  json cdm_j;
  if (with_cdm) {
    const ddm::PhysicsConfig pc = ddm::physics_config(ds.config, ck.train);
    const ddm::CdmResult cr = ddm::run_cdm(probe.f_l, pc, ds.config.n_lambda);
    overlay.push_back({"cdm", "#1f77b4",
                       sample_shape(ddm::ParametricShape::from_curve(cr.q)), true, true});
    const ddm::BoundaryError cbe = ddm::boundary_error(exact, cr.q, ck.train.n_t);
    cdm_j = json{{"e_bar", cbe.value}, {"iterations", cr.iterations}, {"degraded", cr.degraded}};
  }
  ddm::svg::write_overlay(out_path(rc, "eval_boundary.svg").string(), "recovered boundary",
                          overlay);

  json j{{"config", config_json(rc)},
         {"data", data_config_json(ds.config)},
         {"evaluated", count},
         {"e_bar_mean", mean},
         {"e_bar_median", median},
         {"e_bar_max", sorted.back()},
         {"terr", test_err},
         {"overlay_sample", overlay_idx},
         {"outputs", {{"per_sample", "eval.csv"}, {"boundary_svg", "eval_boundary.svg"}}}};
  if (!cdm_j.is_null()) j["cdm"] = cdm_j;
  write_json_file(out_path(rc, "eval.json"), j);
  std::cout << "e_bar mean " << mean << ", median " << median << ", terr " << test_err << '\n';
  report_time("eval", timer);
  return 0;
}

int cmd_noise(const RunConfig& rc, const std::string& ckpt_path, const std::string& data_path,
              const std::string& sigma_spec, int trials, int sample, bool use_final) {
  Timer timer;
  ddm::Checkpoint ck = ddm::load_checkpoint(ckpt_path);
  const ddm::Dataset ds = ddm::load_dataset(data_path);
  require_compatible(ck.data, ds.config);
  select_weights(ck, use_final);
  const int idx = resolve_sample(ds, sample);
  const ddm::Sample& probe = ds.samples[idx];

  const ddm::PhysicsConfig pc = ddm::physics_config(ck.data, ck.train);
  const ddm::NoiseStudy study = ddm::noise_scaling_study(
      ck.net, probe.f_l, probe.f_f, pc, parse_sigma_list(sigma_spec), trials, rc.seed);

  ddm::write_noise_csv(out_path(rc, "noise.csv").string(), study);
  json points = json::array();
  bool warned_any = false;
  for (const ddm::NoisePoint& p : study.points) {
    points.push_back({{"sigma", p.sigma},
                      {"mean_dj", p.mean_dj},
                      {"std_err", p.std_err},
                      {"warned", p.warned}});
    warned_any = warned_any || p.warned;
  }
  write_json_file(out_path(rc, "noise.json"),
                  json{{"config", config_json(rc)},
                       {"data", data_config_json(ds.config)},
                       {"sample", idx},
                       {"trials", study.trials},
                       {"slope", study.slope},
                       {"slope_se", study.slope_se},
                       {"ci95", {study.slope - 1.96 * study.slope_se,
                                 study.slope + 1.96 * study.slope_se}},
                       {"delta_sq_mean", study.delta_sq_mean},
                       {"warned_any", warned_any},
                       {"points", points},
                       {"outputs", {{"points", "noise.csv"}}}});
  std::cout << "slope = " << study.slope << " (se " << study.slope_se << "), E[delta^2] = "
            << study.delta_sq_mean << " over " << study.trials << " trials\n";
  report_time("noise-study", timer);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"limited-aperture inverse scattering workbench"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "read options from a TOML/INI file");

  RunConfig rc;
  app.add_option("--k", rc.k, "wavenumber")->capture_default_str();
  app.add_option("--m", rc.m, "directions per half circle")->capture_default_str();
  app.add_option("--n-t", rc.n_t, "boundary quadrature nodes")->capture_default_str();
  app.add_option("--n-lambda", rc.n_lambda, "curve Fourier order")->capture_default_str();
  app.add_option("--s", rc.s, "Fourier decay exponent")->capture_default_str();
  app.add_option("--z-x", rc.z_x, "interior source x")->capture_default_str();
  app.add_option("--z-y", rc.z_y, "interior source y")->capture_default_str();
  app.add_option("--alpha", rc.alpha, "exterior regularization weight")->capture_default_str();
  app.add_option("--gamma", rc.gamma, "boundary-condition weight")->capture_default_str();
  app.add_option("--beta-dc", rc.beta_dc, "data-completion weight")->capture_default_str();
  app.add_option("--obs", rc.obs, "observation arc, fractions of pi 'lo:hi'")
      ->capture_default_str();
  app.add_option("--inc", rc.inc, "incidence arc, fractions of pi 'lo:hi'")
      ->capture_default_str();
  app.add_option("--sigma", rc.sigma, "relative noise level")->capture_default_str();
  auto* n_s_opt = app.add_option("--n-s", rc.n_s, "sample count")->capture_default_str();
  auto* epochs_opt = app.add_option("--epochs", rc.epochs, "training epochs")
                         ->capture_default_str();
  app.add_option("--batch", rc.batch, "mini-batch size")->capture_default_str();
  app.add_option("--lr", rc.lr, "Adam learning rate")->capture_default_str();
  app.add_option("--train-fraction", rc.train_fraction, "train split fraction")
      ->capture_default_str();
  app.add_option("--n-q", rc.n_q, "forward-solver quadrature nodes")->capture_default_str();
  app.add_option("--seed", rc.seed, "master seed")->capture_default_str();
  app.add_option("--out-dir", rc.out_dir, "output directory")
      ->envname("DDMSCAT_OUT_DIR")
      ->capture_default_str();
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (1 = bit-reproducible)")
      ->capture_default_str();
  bool full_scale = false;
  app.add_flag("--full-scale", full_scale,
               "paper-scale run: n_s=5000, epochs=1000 unless set explicitly");

  auto* gen = app.add_subcommand("gen-data", "generate a dataset of forward solves");
  std::string gen_out = "dataset.bin";
  gen->add_option("--out", gen_out, "dataset file name inside --out-dir")
      ->capture_default_str();

  std::string data_path = "out/dataset.bin";
  std::string ckpt_path = "out/model.ckpt";
  int sample = -1;
  bool use_final = false;

  auto* train = app.add_subcommand("train", "train the decomposition networks");
  train->add_option("--data", data_path, "dataset file")->capture_default_str();

  auto* invert = app.add_subcommand("invert", "recover one boundary with the trained model");
  invert->add_option("--ckpt", ckpt_path, "checkpoint file")->capture_default_str();
  invert->add_option("--data", data_path, "dataset file")->capture_default_str();
  invert->add_option("--sample", sample, "sample index (default: first test sample)");
  invert->add_flag("--final", use_final, "use final weights instead of the best snapshot");

  auto* cdm = app.add_subcommand("baseline-cdm", "classical decomposition via BFGS");
  cdm->add_option("--data", data_path, "dataset file")->capture_default_str();
  cdm->add_option("--sample", sample, "sample index (default: first test sample)");
  int cdm_iters = 500;
  cdm->add_option("--max-iters", cdm_iters, "BFGS iteration cap")->capture_default_str();

  auto* dsm = app.add_subcommand("baseline-dsm", "direct sampling indicator grid");
  dsm->add_option("--data", data_path, "dataset file")->capture_default_str();
  dsm->add_option("--sample", sample, "sample index (default: first test sample)");

  auto* eval = app.add_subcommand("eval", "boundary-error metrics over the test split");
  eval->add_option("--ckpt", ckpt_path, "checkpoint file")->capture_default_str();
  eval->add_option("--data", data_path, "dataset file")->capture_default_str();
  eval->add_option("--sample", sample, "overlay sample (default: first test sample)");
  int eval_limit = -1;
  eval->add_option("--limit", eval_limit, "evaluate at most this many test samples");
  bool with_cdm = false;
  eval->add_flag("--with-cdm", with_cdm, "add a CDM curve to the overlay");
  eval->add_flag("--final", use_final, "use final weights instead of the best snapshot");

  auto* noise = app.add_subcommand("noise-study", "loss response to input noise");
  noise->add_option("--ckpt", ckpt_path, "checkpoint file")->capture_default_str();
  noise->add_option("--data", data_path, "dataset file")->capture_default_str();
  noise->add_option("--sample", sample, "probe sample (default: first test sample)");
  std::string sigma_spec = "0.01,0.02,0.04,0.08";
  noise->add_option("--sigmas", sigma_spec, "comma-separated noise levels")
      ->capture_default_str();
  int trials = 2000;
  noise->add_option("--trials", trials, "Monte Carlo trials per level")->capture_default_str();
  noise->add_flag("--final", use_final, "use final weights instead of the best snapshot");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (full_scale) {
    if (n_s_opt->count() == 0) rc.n_s = 5000;
    if (epochs_opt->count() == 0) rc.epochs = 1000;
  }
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif

  try {
    if (gen->parsed()) return cmd_gen_data(rc, gen_out);
    if (train->parsed()) return cmd_train(rc, data_path);
    if (invert->parsed()) return cmd_invert(rc, ckpt_path, data_path, sample, use_final);
    if (cdm->parsed()) return cmd_cdm(rc, data_path, sample, cdm_iters);
    if (dsm->parsed()) return cmd_dsm(rc, data_path, sample);
    if (eval->parsed())
      return cmd_eval(rc, ckpt_path, data_path, sample, eval_limit, with_cdm, use_final);
    if (noise->parsed())
      return cmd_noise(rc, ckpt_path, data_path, sigma_spec, trials, sample, use_final);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const ddm::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
