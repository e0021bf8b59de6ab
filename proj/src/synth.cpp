#include "defnet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "defnet/errors.hpp"

namespace defnet {

namespace {

constexpr double kRegionSpread = 0.05;
constexpr double kQualityGain = 3.0;
constexpr double kFeatureNoise = 0.25;
constexpr double kGlobalNoise = 0.15;

std::vector<double> random_direction(std::mt19937_64& rng, int dim, double norm) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(dim));
  double sq = 0.0;
  for (double& x : v) {
    x = gauss(rng);
    sq += x * x;
  }
  for (double& x : v) x *= norm / std::sqrt(sq);
  return v;
}

std::string fmt_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

void SynthConfig::validate() const {
  if (n_samples <= 0 || n_subregions <= 0 || feature_dim <= 0 || scenes <= 0 || distortions <= 0) {
    throw InvalidInput("synth config: sizes must be positive");
  }
  if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale)) {
    throw InvalidInput("synth config: noise_scale must be >= 0");
  }
}

std::vector<Sample> generate_dataset(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> pick_scene(0, cfg.scenes - 1);
  std::uniform_int_distribution<int> pick_distortion(0, cfg.distortions - 1);

  const auto quality_dir = random_direction(rng, cfg.feature_dim, 1.0);
  std::vector<std::vector<double>> scene_emb;
  std::vector<std::vector<double>> distortion_emb;
  for (int s = 0; s < cfg.scenes; ++s) scene_emb.push_back(random_direction(rng, cfg.feature_dim, 1.5));
  for (int d = 0; d < cfg.distortions; ++d) {
    distortion_emb.push_back(random_direction(rng, cfg.feature_dim, 1.5));
  }

  const auto dim = static_cast<std::size_t>(cfg.feature_dim);
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(cfg.n_samples));
  for (int n = 0; n < cfg.n_samples; ++n) {
    Sample s;
    s.latent = unit(rng);
    s.scene = pick_scene(rng);
    s.distortion = pick_distortion(rng);

    std::vector<double> region_quality(static_cast<std::size_t>(cfg.n_subregions));
    double mean_quality = 0.0;
    for (double& q : region_quality) {
      q = s.latent + kRegionSpread * gauss(rng);
      mean_quality += q / static_cast<double>(cfg.n_subregions);
    }

    const auto view = [&](double quality, double noise) {
      std::vector<double> f(dim);
      for (std::size_t k = 0; k < dim; ++k) {
        f[k] = kQualityGain * (quality - 0.5) * quality_dir[k] + scene_emb[s.scene][k] +
               distortion_emb[s.distortion][k] + noise * gauss(rng);
      }
      return f;
    };
    for (double q : region_quality) s.local_features.push_back(view(q, kFeatureNoise));
    s.global_features = view(mean_quality, kGlobalNoise);

    // Heteroscedastic: rating noise grows with latent quality.
    const double noise_sd = cfg.noise_scale * (0.5 + s.latent);
    const double eps = gauss(rng);
    s.mos = std::clamp(1.0 + 4.0 * mean_quality + noise_sd * eps, 1.0, 5.0);
    out.push_back(std::move(s));
  }
  return out;
}

void write_dataset_csv(std::ostream& out, const std::vector<Sample>& samples) {
  if (samples.empty()) throw InvalidInput("write_dataset_csv: empty dataset");
  const std::size_t dim = samples.front().global_features.size();
  out << "sample_id,view_id";
  for (std::size_t k = 0; k < dim; ++k) out << ",f" << k;
  out << ",mos,scene,distortion\n";

  const auto row = [&](std::size_t id, int view, const std::vector<double>& f, const Sample& s) {
    out << id << ',' << view;
    for (double x : f) out << ',' << fmt_double(x);
    out << ',' << fmt_double(s.mos) << ',' << s.scene << ',' << s.distortion << '\n';
  };
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    for (std::size_t v = 0; v < s.local_features.size(); ++v) {
      row(i, static_cast<int>(v), s.local_features[v], s);
    }
    row(i, -1, s.global_features, s);
  }
}

void write_dataset_csv(const std::filesystem::path& path, const std::vector<Sample>& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot open " + path.string() + " for writing");
  write_dataset_csv(out, samples);
  if (!out) throw InvalidInput("failed writing " + path.string());
}

std::vector<Sample> read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("dataset: missing header");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 6 || header[0] != "sample_id" || header[1] != "view_id" ||
      header[header.size() - 3] != "mos" || header[header.size() - 2] != "scene" ||
      header.back() != "distortion") {
    throw InvalidInput("dataset: unexpected header");
  }
  const std::size_t dim = header.size() - 5;
  for (std::size_t k = 0; k < dim; ++k) {
    if (header[2 + k] != "f" + std::to_string(k)) throw InvalidInput("dataset: unexpected header");
  }

  std::map<long, Sample> by_id;
  std::map<long, std::map<int, std::vector<double>>> locals;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != header.size()) {
      throw InvalidInput("dataset: wrong column count on line " + std::to_string(line_no));
    }
    try {
      const long id = std::stol(cells[0]);
      const int view = std::stoi(cells[1]);
      std::vector<double> f(dim);
      for (std::size_t k = 0; k < dim; ++k) f[k] = std::stod(cells[2 + k]);
      Sample& s = by_id[id];
      s.mos = std::stod(cells[2 + dim]);
      s.scene = std::stoi(cells[3 + dim]);
      s.distortion = std::stoi(cells[4 + dim]);
      if (view == -1) {
        s.global_features = std::move(f);
      } else if (view >= 0) {
        locals[id][view] = std::move(f);
      } else {
        throw InvalidInput("dataset: bad view_id on line " + std::to_string(line_no));
      }
    } catch (const std::logic_error& e) {
      if (dynamic_cast<const InvalidInput*>(&e)) throw;
      throw InvalidInput("dataset: unparsable value on line " + std::to_string(line_no));
    }
  }

  std::vector<Sample> out;
  out.reserve(by_id.size());
  for (auto& [id, s] : by_id) {
    for (auto& [view, f] : locals[id]) {
      if (view != static_cast<int>(s.local_features.size())) {
        throw InvalidInput("dataset: non-contiguous view ids for sample " + std::to_string(id));
      }
      s.local_features.push_back(std::move(f));
    }
    if (s.global_features.empty() || s.local_features.empty()) {
      throw InvalidInput("dataset: sample " + std::to_string(id) + " lacks local or global views");
    }
    s.latent = (s.mos - 1.0) / 4.0;
    out.push_back(std::move(s));
  }
  if (out.empty()) throw InvalidInput("dataset: no rows");
  return out;
}

std::vector<Sample> read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open dataset " + path.string());
  return read_dataset_csv(in);
}

}  // namespace defnet
