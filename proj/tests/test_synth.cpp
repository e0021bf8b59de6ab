#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <vector>

#include "defnet/errors.hpp"
#include "defnet/metrics.hpp"
#include "defnet/synth.hpp"
#include "doctest.h"

using namespace defnet;

namespace {

SynthConfig small(int n = 200) {
  SynthConfig c;
  c.n_samples = n;
  return c;
}

}  // namespace

TEST_CASE("dataset shape and determinism") {
  const auto a = generate_dataset(small());
  const auto b = generate_dataset(small());
  REQUIRE(a.size() == 200);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].local_features == b[i].local_features);
    CHECK(a[i].global_features == b[i].global_features);
    CHECK(a[i].mos == b[i].mos);
    CHECK(a[i].scene == b[i].scene);
    CHECK(a[i].distortion == b[i].distortion);
  }
  CHECK(a[0].local_features.size() == 4);
  CHECK(a[0].local_features[0].size() == 16);
  CHECK(a[0].global_features.size() == 16);
  for (const auto& s : a) {
    CHECK(s.mos >= 1.0);
    CHECK(s.mos <= 5.0);
    CHECK(s.scene >= 0);
    CHECK(s.scene < 3);
    CHECK(s.distortion >= 0);
    CHECK(s.distortion < 3);
  }

  SynthConfig other = small();
  other.seed = 2;
  CHECK(generate_dataset(other)[0].mos != a[0].mos);
}

TEST_CASE("noise-free MOS follows the mean crop quality") {
  SynthConfig c = small();
  c.noise_scale = 0.0;
  const auto clean = generate_dataset(c);
  const auto noisy = generate_dataset(small());
  double max_gap = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    CHECK(clean[i].latent == noisy[i].latent);
    max_gap = std::max(max_gap, std::abs(clean[i].mos - noisy[i].mos));
  }
  CHECK(max_gap > 0.0);
  // without observation noise the score sits on the affine latent map up to the crop offsets
  std::vector<double> latent, mos;
  for (const auto& s : clean) {
    latent.push_back(s.latent);
    mos.push_back(s.mos);
  }
  CHECK(plcc(latent, mos) > 0.995);
}

TEST_CASE("latent factor drives MOS") {
  const auto data = generate_dataset(SynthConfig{});
  std::vector<double> latent, mos;
  for (const auto& s : data) {
    latent.push_back(s.latent);
    mos.push_back(s.mos);
  }
  CHECK(plcc(latent, mos) > 0.99);
}

TEST_CASE("csv round trip") {
  const auto data = generate_dataset(small(25));
  std::stringstream ss;
  write_dataset_csv(ss, data);
  const std::string text = ss.str();
  CHECK(text.rfind("sample_id,view_id,f0,", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 25 * 5);

  const auto back = read_dataset_csv(ss);
  REQUIRE(back.size() == data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(back[i].local_features == data[i].local_features);
    CHECK(back[i].global_features == data[i].global_features);
    CHECK(back[i].mos == data[i].mos);
    CHECK(back[i].scene == data[i].scene);
    CHECK(back[i].distortion == data[i].distortion);
  }

  std::stringstream again;
  write_dataset_csv(again, back);
  CHECK(again.str() == text);
}

TEST_CASE("csv reader rejects malformed input") {
  std::stringstream bad_header("id,view,f0\n");
  CHECK_THROWS_AS(read_dataset_csv(bad_header), InvalidInput);
  CHECK_THROWS_AS(read_dataset_csv(std::filesystem::path("/nonexistent/data.csv")), InvalidInput);

  const auto data = generate_dataset(small(2));
  std::stringstream ss;
  write_dataset_csv(ss, data);
  std::string text = ss.str();
  text.resize(text.size() / 2);
  std::stringstream truncated(text);
  CHECK_THROWS(read_dataset_csv(truncated));
}

TEST_CASE("synth config validation") {
  SynthConfig c;
  c.n_samples = 0;
  CHECK_THROWS_AS(generate_dataset(c), InvalidInput);
  c = SynthConfig{};
  c.noise_scale = -1.0;
  CHECK_THROWS_AS(generate_dataset(c), InvalidInput);
}
