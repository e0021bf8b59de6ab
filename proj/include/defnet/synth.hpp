#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace defnet {

struct SynthConfig {
  int n_samples = 2000;
  int n_subregions = 4;
  int feature_dim = 16;
  int scenes = 3;
  int distortions = 3;
  double noise_scale = 0.05;
  std::uint64_t seed = 1;

  void validate() const;
};

// One synthetic "image": per-crop features, a downsampled global feature vector and labels.
struct Sample {
  std::vector<std::vector<double>> local_features;  // n_subregions x feature_dim
  std::vector<double> global_features;
  double mos = 3.0;
  int scene = 0;
  int distortion = 0;
  // Shared quality factor in [0, 1]; not serialized.
  double latent = 0.5;
};

// Each crop carries its own quality (the shared factor plus a small per-region offset)
// along a fixed feature direction, plus scene and distortion embeddings.
// MOS = clamp(1 + 4 * mean crop quality + heteroscedastic noise, 1, 5).
std::vector<Sample> generate_dataset(const SynthConfig& cfg);

// CSV: sample_id,view_id,f0..f{dim-1},mos,scene,distortion; view_id -1 is the global view.
void write_dataset_csv(std::ostream& out, const std::vector<Sample>& samples);
void write_dataset_csv(const std::filesystem::path& path, const std::vector<Sample>& samples);
std::vector<Sample> read_dataset_csv(std::istream& in);
std::vector<Sample> read_dataset_csv(const std::filesystem::path& path);

}  // namespace defnet
