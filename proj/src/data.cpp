#include "ucat/data.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "ucat/rng.hpp"

namespace ucat {
namespace {

constexpr int kDatasetMajor = 1;

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);  // shortest round-trip
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, const char* what) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::runtime_error(std::string("dataset parse: bad ") + what + " '" + s + "'");
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  return out;
}

int nearest_mean(const std::vector<std::vector<double>>& means, const std::vector<double>& x) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < means.size(); ++k) {
    double d = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double t = x[j] - means[k][j];
      d += t * t;
    }
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(k);
    }
  }
  return best;
}

double centroid_accuracy_of(const Dataset& ds) {
  if (ds.samples.empty()) return 0.0;
  std::size_t hit = 0;
  for (const Sample& s : ds.samples) {
    if (nearest_mean(ds.class_means, s.x) == s.label) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(ds.samples.size());
}

}  // namespace

void DatasetSpec::validate() const {
  if (classes < 2) throw std::invalid_argument("DatasetSpec: need at least two classes");
  if (input_dim < classes)
    throw std::invalid_argument("DatasetSpec: input_dim must be >= classes for orthonormal means");
  if (n_train < 1 || n_test < 1)
    throw std::invalid_argument("DatasetSpec: split sizes must be positive");
  if (!(class_separation > 0.0) || !std::isfinite(class_separation))
    throw std::invalid_argument("DatasetSpec: class_separation must be positive and finite");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
    throw std::invalid_argument("DatasetSpec: noise_sigma must be non-negative and finite");
}

void Dataset::validate() const {
  spec.validate();
  if (split != "train" && split != "test")
    throw std::invalid_argument("Dataset: split must be train or test");
  if (class_means.size() != static_cast<std::size_t>(spec.classes))
    throw std::invalid_argument("Dataset: class mean count mismatch");
  for (const Sample& s : samples) {
    if (s.x.size() != static_cast<std::size_t>(spec.input_dim))
      throw std::invalid_argument("Dataset: sample dimension mismatch");
    if (s.label < 0 || s.label >= spec.classes)
      throw std::invalid_argument("Dataset: label out of range");
  }
}

GeneratedData generate_dataset(const DatasetSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);

  // Orthonormal class directions via Gram-Schmidt on Gaussian draws.
  std::vector<std::vector<double>> dirs(spec.classes, std::vector<double>(spec.input_dim));
  for (int k = 0; k < spec.classes; ++k) {
    for (;;) {
      for (double& v : dirs[k]) v = rng.normal();
      for (int p = 0; p < k; ++p) {
        double dot = 0.0;
        for (int j = 0; j < spec.input_dim; ++j) dot += dirs[k][j] * dirs[p][j];
        for (int j = 0; j < spec.input_dim; ++j) dirs[k][j] -= dot * dirs[p][j];
      }
      double norm2 = 0.0;
      for (double v : dirs[k]) norm2 += v * v;
      if (norm2 > 1e-8) {
        const double inv = 1.0 / std::sqrt(norm2);
        for (double& v : dirs[k]) v *= inv;
        break;
      }
    }
  }

  const auto draw_raw = [&](int n, std::vector<Sample>& out) {
    out.resize(n);
    for (int i = 0; i < n; ++i) {
      const int label = i % spec.classes;  // balanced splits
      out[i].label = label;
      out[i].x.resize(spec.input_dim);
      for (int j = 0; j < spec.input_dim; ++j) {
        out[i].x[j] = spec.class_separation * dirs[label][j] + spec.noise_sigma * rng.normal();
      }
    }
  };

  GeneratedData data;
  draw_raw(spec.n_train, data.train.samples);
  draw_raw(spec.n_test, data.test.samples);

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  const auto scan = [&](const std::vector<Sample>& samples) {
    for (const Sample& s : samples) {
      for (double v : s.x) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  };
  scan(data.train.samples);
  scan(data.test.samples);
  if (!(hi > lo)) throw std::runtime_error("generate_dataset: degenerate value range");

  const AffineSquash squash{1.0 / (hi - lo), -lo / (hi - lo)};
  const auto apply = [&](std::vector<double>& x) {
    for (double& v : x) v = std::clamp(v * squash.scale + squash.shift, 0.0, 1.0);
  };
  for (auto& s : data.train.samples) apply(s.x);
  for (auto& s : data.test.samples) apply(s.x);

  std::vector<std::vector<double>> means(spec.classes, std::vector<double>(spec.input_dim));
  for (int k = 0; k < spec.classes; ++k) {
    for (int j = 0; j < spec.input_dim; ++j) {
      means[k][j] = std::clamp(spec.class_separation * dirs[k][j] * squash.scale + squash.shift,
                               0.0, 1.0);
    }
  }

  for (Dataset* ds : {&data.train, &data.test}) {
    ds->spec = spec;
    ds->squash = squash;
    ds->class_means = means;
  }
  data.train.split = "train";
  data.test.split = "test";
  data.train.centroid_accuracy = centroid_accuracy_of(data.train);
  data.test.centroid_accuracy = centroid_accuracy_of(data.test);
  data.train.validate();
  data.test.validate();
  return data;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  ds.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_dataset: cannot open " + path.string());
  out << "# ucat-dataset v" << kDatasetMajor << ".0\n";
  out << "# split=" << ds.split << " classes=" << ds.spec.classes
      << " input_dim=" << ds.spec.input_dim << " count=" << ds.samples.size()
      << " seed=" << ds.spec.seed << " n_train=" << ds.spec.n_train
      << " n_test=" << ds.spec.n_test << '\n';
  out << "# class_separation=" << format_double(ds.spec.class_separation)
      << " noise_sigma=" << format_double(ds.spec.noise_sigma) << '\n';
  out << "# squash_scale=" << format_double(ds.squash.scale)
      << " squash_shift=" << format_double(ds.squash.shift) << '\n';
  out << "# centroid_accuracy=" << format_double(ds.centroid_accuracy) << '\n';
  for (int k = 0; k < ds.spec.classes; ++k) {
    out << "# class_mean," << k;
    for (double v : ds.class_means[k]) out << ',' << format_double(v);
    out << '\n';
  }
  out << "# columns: id,label,x0..x" << (ds.spec.input_dim - 1) << '\n';
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    out << i << ',' << ds.samples[i].label;
    for (double v : ds.samples[i].x) out << ',' << format_double(v);
    out << '\n';
  }
  if (!out) throw std::runtime_error("save_dataset: write failed for " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_dataset: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ucat-dataset v", 0) != 0)
    throw std::runtime_error("load_dataset: missing format line");
  {
    const std::string ver = line.substr(std::string("# ucat-dataset v").size());
    const int major = std::stoi(ver.substr(0, ver.find('.')));
    if (major != kDatasetMajor)
      throw std::runtime_error("load_dataset: unsupported format major version");
  }

  Dataset ds;
  const auto header_kv = [&](const std::string& l) {
    std::istringstream ss(l.substr(1));
    std::string tok;
    while (ss >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = tok.substr(0, eq);
      const std::string val = tok.substr(eq + 1);
      if (key == "split") ds.split = val;
      else if (key == "classes") ds.spec.classes = std::stoi(val);
      else if (key == "input_dim") ds.spec.input_dim = std::stoi(val);
      else if (key == "seed") ds.spec.seed = std::stoull(val);
      else if (key == "n_train") ds.spec.n_train = std::stoi(val);
      else if (key == "n_test") ds.spec.n_test = std::stoi(val);
      else if (key == "class_separation") ds.spec.class_separation = parse_double(val, "class_separation");
      else if (key == "noise_sigma") ds.spec.noise_sigma = parse_double(val, "noise_sigma");
      else if (key == "squash_scale") ds.squash.scale = parse_double(val, "squash_scale");
      else if (key == "squash_shift") ds.squash.shift = parse_double(val, "squash_shift");
      else if (key == "centroid_accuracy") ds.centroid_accuracy = parse_double(val, "centroid_accuracy");
    }
  };

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# class_mean,", 0) == 0) {
        const auto cells = split_csv(line.substr(2));
        std::vector<double> mean;
        for (std::size_t i = 2; i < cells.size(); ++i) mean.push_back(parse_double(cells[i], "class_mean"));
        ds.class_means.push_back(std::move(mean));
      } else if (line.find('=') != std::string::npos) {
        header_kv(line);
      }
      continue;
    }
    const auto cells = split_csv(line);
    if (cells.size() < 3) throw std::runtime_error("load_dataset: malformed row '" + line + "'");
    Sample s;
    s.label = std::stoi(cells[1]);
    for (std::size_t i = 2; i < cells.size(); ++i) s.x.push_back(parse_double(cells[i], "feature"));
    ds.samples.push_back(std::move(s));
  }
  ds.validate();
  return ds;
}

}  // namespace ucat
