#pragma once

// Dataset pipeline, the joint training loop, inference, and the relative
// coefficient-error metrics.

#include <functional>
#include <vector>

#include "ddm/forward.hpp"
#include "ddm/geometry.hpp"
#include "ddm/network.hpp"
#include "ddm/physics.hpp"

namespace ddm {

struct DataConfig {
  int n_s = 500;             // total sample count
  double k = 3.0;
  int m = 16;
  int n_lambda = 8;
  double s = 1.0;
  double sigma = 0.0;        // relative noise level on the limited block
  ApertureArc obs{0.0, 2.0};
  ApertureArc inc{0.0, 2.0};
  unsigned long long seed = 1;
  double train_fraction = 0.8;
  SolverOptions solver;
};

struct Sample {
  LimitedAperture f_l;   // noisy limited block (network input)
  Msrm f_f;              // exact full matrix (completion target)
  FourierCurve q_true;   // generating curve; evaluation only, never in the loss
};

struct Dataset {
  DataConfig config;
  std::vector<Sample> samples;
  int n_train = 0;
  long retries = 0;  // solver rejections replaced by fresh curve draws
  int test_count() const { return static_cast<int>(samples.size()) - n_train; }
};

// Draws n_s random curves, solves the forward problem for each, restricts to
// the aperture and applies noise. Deterministic for a fixed seed regardless
// of thread count: every sample owns a derived rng stream.
Dataset generate_dataset(const DataConfig& cfg);

struct TrainConfig {
  int epochs = 200;
  int batch = 64;
  AdamConfig adam;
  LossWeights weights;
  int n_t = 64;
  SourcePoint source;
  unsigned long long seed = 1;
  bool shuffle = true;
};

struct EpochStats {
  double l_ddm = 0.0;
  double l_phy = 0.0;
  double l_dc = 0.0;
  double err = 0.0;  // relative coefficient error aggregated over the epoch
};

struct TrainResult {
  std::vector<EpochStats> history;
  std::vector<Param> best_params;  // snapshot after the lowest-loss epoch
  std::vector<BnBuffers> best_bn;
  long best_step = 0;
  double best_l_ddm = 0.0;
  int best_epoch = -1;
  long warnings = 0;             // epochs whose loss exceeded 10x the initial
  long skipped_iterations = 0;   // single-sample tail batches (batchnorm needs 2)
};

PhysicsConfig physics_config(const DataConfig& data, const TrainConfig& train);

// Joint minimization of the physics loss plus (for limited apertures) the
// completion term. Mutates the network in place; the returned snapshot holds
// the best epoch by training loss.
TrainResult train_ddm(DdmNetwork& net, const Dataset& data, const TrainConfig& cfg,
                      const std::function<void(int, const EpochStats&)>& on_epoch = {});

// sqrt(sum ||q_pred - q_true||^2) / sqrt(sum ||q_true||^2)
double err_batch(const std::vector<std::vector<double>>& q_pred,
                 const std::vector<std::vector<double>>& q_true);

// err_batch over the test split in eval mode.
double terr(DdmNetwork& net, const Dataset& data);

struct InvertResult {
  FourierCurve q;
  HerglotzKernel g;
  CMatrix f_pred;
  double wall_seconds = 0.0;
};

// Single eval-mode pass; rejects input whose aperture differs from the
// configuration the network was trained on.
InvertResult invert(DdmNetwork& net, const LimitedAperture& input, const DataConfig& trained_on);

}  // namespace ddm
