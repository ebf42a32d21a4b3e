#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ucat/model.hpp"

namespace ucat {

struct DatasetSpec {
  int classes = 10;
  int input_dim = 32;
  int n_train = 2000;
  int n_test = 500;
  double class_separation = 1.0;  // length of the orthonormal class directions
  double noise_sigma = 0.20;      // isotropic Gaussian noise, pre-squash units
  std::uint64_t seed = 1;

  void validate() const;  // classes in [2, input_dim] so the means can be orthonormal
};

// x' = clamp(scale * x_raw + shift, 0, 1); one scalar map for every coordinate
// so the l_inf budget stays comparable across dimensions.
struct AffineSquash {
  double scale = 1.0;
  double shift = 0.0;
};

struct Dataset {
  DatasetSpec spec;
  std::string split;  // "train" | "test"
  std::vector<Sample> samples;
  AffineSquash squash;
  std::vector<std::vector<double>> class_means;  // squashed means, C x m
  double centroid_accuracy = 0.0;  // nearest-squashed-mean accuracy on this split

  void validate() const;
};

struct GeneratedData {
  Dataset train;
  Dataset test;
};

// Gaussian blobs on orthonormal class directions, squashed into [0,1]^m with
// the same affine map for both splits. Deterministic per spec.seed.
GeneratedData generate_dataset(const DatasetSpec& spec);

void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace ucat
