#pragma once

// Reverse-mode autodiff on a define-by-run tape. Nodes are dense real arrays
// of rank 1..4; an op records a closure that scatters the output gradient to
// its parents. Creation order is a topological order, so backward() is a
// single reverse sweep. Parallel loops only ever split over distinct output
// elements with fixed-order inner reductions, which keeps results bitwise
// identical for any thread count.

#include <array>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "ddm/common.hpp"

namespace ddm::nn {

struct Shape {
  std::array<int, 4> dim{1, 1, 1, 1};
  int rank = 1;

  Shape() = default;
  Shape(std::initializer_list<int> dims);

  int numel() const {
    int n = 1;
    for (int i = 0; i < rank; ++i) n *= dim[i];
    return n;
  }
  bool operator==(const Shape& o) const;
  std::string str() const;
};

class Tape;

// Cheap handle; storage lives on the tape.
struct Tensor {
  Tape* tape = nullptr;
  int id = -1;

  const Shape& shape() const;
  int numel() const { return shape().numel(); }
  std::span<double> value();
  std::span<const double> value() const;
  std::span<const double> grad() const;  // valid after Tape::backward
  bool requires_grad() const;
};

class Tape {
 public:
  Tensor leaf(const Shape& s, bool requires_grad = false);
  Tensor leaf(const Shape& s, std::span<const double> data, bool requires_grad = false);

  // Op-author surface: create an output node whose requires-grad flag is the
  // OR of the parents', then attach a backward closure if it is set.
  Tensor make_node(const Shape& s, std::initializer_list<Tensor> parents);
  void set_backward(int id, std::function<void()> fn);

  std::span<double> val(int id);
  std::span<const double> val(int id) const;
  std::span<double> grad_buf(int id);
  bool rg(int id) const;
  const Shape& shape_of(int id) const;

  // Seeds the scalar root with gradient 1 and sweeps the tape in reverse.
  void backward(Tensor root);

  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    Shape shape;
    std::vector<double> val;
    std::vector<double> grad;
    std::function<void()> back;
    bool rg = false;
  };
  std::vector<Node> nodes_;
};

// elementwise
Tensor add(Tensor a, Tensor b);
Tensor sub(Tensor a, Tensor b);
Tensor mul(Tensor a, Tensor b);
Tensor scale(Tensor a, double c);
Tensor relu(Tensor a);

// affine layers
Tensor linear(Tensor x, Tensor w, Tensor bias);     // [b,n] x [n,p] + [p] -> [b,p]
Tensor conv3x3(Tensor x, Tensor w, Tensor bias);    // [b,ci,h,w], [co,ci,3,3], [co]

// Batch normalization over (batch, height, width) per channel. Training mode
// uses batch statistics and updates the caller-owned running buffers with
// momentum 0.1 (running variance stored unbiased); eval mode reads them.
Tensor batchnorm2d(Tensor x, Tensor gamma, Tensor beta, std::vector<double>& running_mean,
                   std::vector<double>& running_var, bool train, double momentum = 0.1,
                   double eps = 1e-5);

// shape plumbing
Tensor flatten(Tensor x);                 // [b,...] -> [b, rest]
Tensor reshape(Tensor x, const Shape& s); // numel-preserving

// reductions
Tensor sum_all(Tensor x);                      // -> scalar [1]
Tensor mean_all(Tensor x);                     // -> scalar [1]
Tensor sqnorm_rows(Tensor x, double weight);   // [b,...] -> [b], w * sum of squares per batch row

}  // namespace ddm::nn
