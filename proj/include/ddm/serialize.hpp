#pragma once

// Versioned little-endian binary containers for datasets and checkpoints,
// plus the CSV emitters shared by the command-line tools. Every reader
// validates magic, version, and structural redundancy (dimensions stored next
// to the payload they describe) and throws IoError on any mismatch.

#include <cstdint>
#include <string>
#include <vector>

#include "ddm/baselines.hpp"
#include "ddm/eval.hpp"
#include "ddm/network.hpp"
#include "ddm/train.hpp"

namespace ddm {

void save_dataset(const Dataset& data, const std::string& path);
Dataset load_dataset(const std::string& path);

// Closed-form byte size of a dataset file with this configuration; the record
// layout is fixed, so the size is pure arithmetic in (n_s, m, n_lambda,
// aperture window).
std::uint64_t dataset_file_size(const DataConfig& cfg);

// A trained model bundle: generation and training configuration, the final
// network (parameters, Adam moments, batchnorm statistics, step), and the
// best-epoch snapshot when one was recorded.
struct Checkpoint {
  DataConfig data;
  TrainConfig train;
  DdmNetwork net = DdmNetwork::empty(1, 1);
  std::vector<Param> best_params;
  std::vector<BnBuffers> best_bn;
  long best_step = 0;
  double best_l_ddm = 0.0;
  int best_epoch = -1;

  bool has_best() const { return !best_params.empty(); }
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// CSV emitters; every file starts with a header row naming the columns.
void write_history_csv(const std::string& path, const std::vector<EpochStats>& history);
void write_objective_csv(const std::string& path, const std::vector<double>& objective);
void write_grid_csv(const std::string& path, const SamplingGrid& grid);
void write_noise_csv(const std::string& path, const NoiseStudy& study);

}  // namespace ddm
