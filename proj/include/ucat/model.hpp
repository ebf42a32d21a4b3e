#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ucat/evidence.hpp"

namespace ucat {

struct Sample {
  std::vector<double> x;  // inputs in [0, 1]^m
  int label = 0;
};

// ||W x|| fell below the degeneracy threshold; normalization is undefined there.
struct DegenerateEmbeddingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Linear encoder + frozen unit-norm class prototypes + cosine/tau logits.
// Small enough that gradients are hand-derived (no autodiff dependency).
struct ContrastiveModel {
  int input_dim = 0;    // m
  int embed_dim = 0;    // d
  int num_classes = 0;  // C
  double tau = 0.07;
  std::vector<double> weights;     // d x m, row-major
  std::vector<double> prototypes;  // C x d, row-major, unit rows
  std::uint64_t init_seed = 0;
  std::string config_digest;       // opaque provenance tag carried in checkpoints

  struct Forward {
    std::vector<double> embedding;  // v = Wx/||Wx||
    double feat_norm = 0.0;         // ||Wx||
    LogitVector logits;             // cosines/tau, cosine_origin
  };

  // Throws DegenerateEmbeddingError when ||Wx|| <= 1e-12.
  Forward forward(std::span<const double> x) const;

  // Given upstream = dL/dlogits, pull back through logits -> v -> f=Wx.
  // The normalization Jacobian is (I - v v^T)/||f||.
  std::vector<double> grad_input(const Forward& fw, std::span<const double> x,
                                 std::span<const double> upstream) const;   // length m
  std::vector<double> grad_weights(const Forward& fw, std::span<const double> x,
                                   std::span<const double> upstream) const;  // length d*m

  void validate() const;
};

// Random init: Gaussian weights scaled by 1/sqrt(m), prototypes drawn as
// independent random unit vectors, both from the given seed.
ContrastiveModel make_model(int input_dim, int embed_dim, int num_classes, double tau,
                            std::uint64_t seed);

// Versioned self-describing checkpoint; doubles round-trip bit-exactly.
void save_checkpoint(const ContrastiveModel& model, const std::filesystem::path& path);
ContrastiveModel load_checkpoint(const std::filesystem::path& path);

}  // namespace ucat
