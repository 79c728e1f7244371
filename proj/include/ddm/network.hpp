#pragma once

// The three-network decomposition: a completion network fills the unmeasured
// part of the far-field matrix, a kernel network maps the completed matrix to
// a Herglotz density, and a reconstruction network maps it to boundary curve
// coefficients. All parameters live here together with their Adam moments and
// the batchnorm running statistics, so a checkpoint is this object plus a
// step counter.

#include <span>
#include <string>
#include <vector>

#include "ddm/forward.hpp"
#include "ddm/geometry.hpp"
#include "ddm/rng.hpp"
#include "ddm/tensor.hpp"

namespace ddm {

struct HerglotzKernel {
  std::vector<Complex> values;  // one coefficient per direction, length 2m
};

struct Param {
  std::string name;
  nn::Shape shape;
  std::vector<double> value;
  std::vector<double> m1;  // Adam first moment
  std::vector<double> m2;  // Adam second moment
};

struct BnBuffers {
  std::string name;
  std::vector<double> mean;
  std::vector<double> var;
};

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Standard bias-corrected Adam update of one parameter in place; step counts
// from 1 for the first call.
void adam_update(Param& p, std::span<const double> grad, const AdamConfig& cfg, long step);

// Zero-embeds limited blocks into a 3-channel 2m x 2m canvas: channels 0/1
// carry the real/imaginary parts at their native (observation, incidence)
// index positions, channel 2 is a binary mask of observed entries.
nn::Tensor embed_aperture(nn::Tape& tape, const std::vector<const LimitedAperture*>& batch);

class DdmNetwork {
 public:
  // Fresh network: weights N(0, 0.02^2) drawn in parameter order, biases 0,
  // batchnorm scale 1 / shift 0, running statistics (0, 1).
  DdmNetwork(int m, int n_lambda, StableRng& rng);

  // Shapes allocated, values zero; for loading a checkpoint.
  static DdmNetwork empty(int m, int n_lambda);

  int m() const { return m_; }
  int n_lambda() const { return n_lambda_; }
  long parameter_count() const;
  long step() const { return step_; }
  void set_step(long s) { step_ = s; }

  std::vector<Param>& params() { return params_; }
  const std::vector<Param>& params() const { return params_; }
  std::vector<BnBuffers>& bn_buffers() { return bn_; }
  const std::vector<BnBuffers>& bn_buffers() const { return bn_; }

  struct Outputs {
    nn::Tensor f_pred;  // [b, 2, 2m, 2m]; constant leaf when the aperture is full
    nn::Tensor g;       // [b, 4m] interleaved herglotz coefficients
    nn::Tensor q;       // [b, 2*n_lambda+1] curve coefficients
    std::vector<nn::Tensor> bound_params;  // parameter leaves, in params() order
  };

  // Runs the full composition on a batch sharing one aperture window. A full
  // aperture bypasses the completion network: the measured matrix itself is
  // passed through as a constant. Parameters are bound onto the tape, so a
  // subsequent backward() fills the gradients read by adam_step().
  Outputs forward(nn::Tape& tape, const std::vector<const LimitedAperture*>& batch, bool train);

  // Applies one Adam step using the gradients of the tensors bound by the
  // most recent forward(); the tape must still be alive and swept.
  void adam_step(const AdamConfig& cfg);

  // Single-sample eval-mode pass unpacked into domain types.
  struct Inversion {
    CMatrix f_pred;        // completed 2m x 2m matrix
    HerglotzKernel g;
    FourierCurve q;
  };
  Inversion infer(const LimitedAperture& data, double s);

 private:
  DdmNetwork() = default;
  void build_layout();

  int m_ = 0;
  int n_lambda_ = 0;
  long step_ = 0;
  std::vector<Param> params_;
  std::vector<BnBuffers> bn_;
  std::vector<nn::Tensor> bound_;  // param leaves of the latest forward
};

}  // namespace ddm
