#include "ucat/model.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "ucat/rng.hpp"

namespace ucat {
namespace {

constexpr double kDegenerateNorm = 1e-12;
constexpr int kCheckpointMajor = 1;
constexpr int kCheckpointMinor = 0;

using json = nlohmann::ordered_json;

}  // namespace

void ContrastiveModel::validate() const {
  if (input_dim <= 0 || embed_dim <= 0 || num_classes <= 0)
    throw std::invalid_argument("ContrastiveModel: dimensions must be positive");
  if (!(tau > 0.0) || !std::isfinite(tau))
    throw std::invalid_argument("ContrastiveModel: tau must be positive and finite");
  if (weights.size() != static_cast<std::size_t>(embed_dim) * input_dim)
    throw std::invalid_argument("ContrastiveModel: weight shape mismatch");
  if (prototypes.size() != static_cast<std::size_t>(num_classes) * embed_dim)
    throw std::invalid_argument("ContrastiveModel: prototype shape mismatch");
}

ContrastiveModel::Forward ContrastiveModel::forward(std::span<const double> x) const {
  if (x.size() != static_cast<std::size_t>(input_dim))
    throw std::invalid_argument("forward: input dimension mismatch");
  Forward fw;
  fw.embedding.assign(embed_dim, 0.0);
  for (int i = 0; i < embed_dim; ++i) {
    const double* row = &weights[static_cast<std::size_t>(i) * input_dim];
    double acc = 0.0;
    for (int j = 0; j < input_dim; ++j) acc += row[j] * x[j];
    fw.embedding[i] = acc;
  }
  double norm2 = 0.0;
  for (double v : fw.embedding) norm2 += v * v;
  fw.feat_norm = std::sqrt(norm2);
  if (fw.feat_norm <= kDegenerateNorm)
    throw DegenerateEmbeddingError("forward: embedding norm below 1e-12");
  for (double& v : fw.embedding) v /= fw.feat_norm;

  std::vector<double> cos(num_classes);
  for (int k = 0; k < num_classes; ++k) {
    cos[k] = unit_cosine(fw.embedding,
                         std::span<const double>(&prototypes[static_cast<std::size_t>(k) * embed_dim],
                                                 static_cast<std::size_t>(embed_dim)));
  }
  fw.logits = LogitVector::from_cosines(std::move(cos), tau);
  return fw;
}

// Shared pullback: g_f = (I - v v^T)/||f|| * (sum_k u_k t_k / tau).
static std::vector<double> embedding_grad(const ContrastiveModel& m,
                                          const ContrastiveModel::Forward& fw,
                                          std::span<const double> upstream) {
  if (upstream.size() != static_cast<std::size_t>(m.num_classes))
    throw std::invalid_argument("grad: upstream dimension mismatch");
  std::vector<double> gv(m.embed_dim, 0.0);
  for (int k = 0; k < m.num_classes; ++k) {
    const double* t = &m.prototypes[static_cast<std::size_t>(k) * m.embed_dim];
    const double u = upstream[k] / m.tau;
    for (int i = 0; i < m.embed_dim; ++i) gv[i] += u * t[i];
  }
  double vdot = 0.0;
  for (int i = 0; i < m.embed_dim; ++i) vdot += fw.embedding[i] * gv[i];
  std::vector<double> gf(m.embed_dim);
  for (int i = 0; i < m.embed_dim; ++i) {
    gf[i] = (gv[i] - fw.embedding[i] * vdot) / fw.feat_norm;
  }
  return gf;
}

std::vector<double> ContrastiveModel::grad_input(const Forward& fw, std::span<const double> x,
                                                 std::span<const double> upstream) const {
  (void)x;
  const std::vector<double> gf = embedding_grad(*this, fw, upstream);
  std::vector<double> gx(input_dim, 0.0);
  for (int i = 0; i < embed_dim; ++i) {
    const double* row = &weights[static_cast<std::size_t>(i) * input_dim];
    for (int j = 0; j < input_dim; ++j) gx[j] += row[j] * gf[i];
  }
  return gx;
}

std::vector<double> ContrastiveModel::grad_weights(const Forward& fw, std::span<const double> x,
                                                   std::span<const double> upstream) const {
  if (x.size() != static_cast<std::size_t>(input_dim))
    throw std::invalid_argument("grad_weights: input dimension mismatch");
  const std::vector<double> gf = embedding_grad(*this, fw, upstream);
  std::vector<double> gw(weights.size());
  for (int i = 0; i < embed_dim; ++i) {
    for (int j = 0; j < input_dim; ++j) {
      gw[static_cast<std::size_t>(i) * input_dim + j] = gf[i] * x[j];
    }
  }
  return gw;
}

ContrastiveModel make_model(int input_dim, int embed_dim, int num_classes, double tau,
                            std::uint64_t seed) {
  ContrastiveModel m;
  m.input_dim = input_dim;
  m.embed_dim = embed_dim;
  m.num_classes = num_classes;
  m.tau = tau;
  m.init_seed = seed;
  Rng rng(seed);
  m.weights.resize(static_cast<std::size_t>(embed_dim) * input_dim);
  const double wscale = 1.0 / std::sqrt(static_cast<double>(input_dim));
  for (double& w : m.weights) w = wscale * rng.normal();
  m.prototypes.resize(static_cast<std::size_t>(num_classes) * embed_dim);
  for (int k = 0; k < num_classes; ++k) {
    double* row = &m.prototypes[static_cast<std::size_t>(k) * embed_dim];
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (int i = 0; i < embed_dim; ++i) {
        row[i] = rng.normal();
        norm2 += row[i] * row[i];
      }
    } while (norm2 < 1e-12);
    const double inv = 1.0 / std::sqrt(norm2);
    for (int i = 0; i < embed_dim; ++i) row[i] *= inv;
  }
  m.validate();
  return m;
}

void save_checkpoint(const ContrastiveModel& model, const std::filesystem::path& path) {
  model.validate();
  json j;
  j["format"] = "ucat-model";
  j["version"] = {{"major", kCheckpointMajor}, {"minor", kCheckpointMinor}};
  j["input_dim"] = model.input_dim;
  j["embed_dim"] = model.embed_dim;
  j["num_classes"] = model.num_classes;
  j["tau"] = model.tau;
  j["init_seed"] = model.init_seed;
  j["config_digest"] = model.config_digest;
  j["weights"] = model.weights;
  j["prototypes"] = model.prototypes;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path.string());
}

ContrastiveModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path.string());
  json j = json::parse(in);
  if (j.value("format", "") != "ucat-model")
    throw std::runtime_error("load_checkpoint: not a model checkpoint");
  if (j.at("version").at("major").get<int>() != kCheckpointMajor)
    throw std::runtime_error("load_checkpoint: unsupported format major version");
  ContrastiveModel m;
  m.input_dim = j.at("input_dim").get<int>();
  m.embed_dim = j.at("embed_dim").get<int>();
  m.num_classes = j.at("num_classes").get<int>();
  m.tau = j.at("tau").get<double>();
  m.init_seed = j.at("init_seed").get<std::uint64_t>();
  m.config_digest = j.at("config_digest").get<std::string>();
  m.weights = j.at("weights").get<std::vector<double>>();
  m.prototypes = j.at("prototypes").get<std::vector<double>>();
  m.validate();
  return m;
}

}  // namespace ucat
