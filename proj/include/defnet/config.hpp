#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "defnet/fusion.hpp"
#include "defnet/synth.hpp"
#include "defnet/train.hpp"

namespace defnet {

struct RunConfig {
  SynthConfig synth;
  FusionConfig fusion;
  TrainConfig train;
  std::filesystem::path out_dir = ".";
  std::filesystem::path dataset;  // empty: <out_dir>/dataset.csv

  std::filesystem::path dataset_path() const;
  void validate() const;
};

// Flat `key = value` lines; `#` starts a comment. Unknown keys and malformed values
// throw InvalidInput naming the offending line.
RunConfig parse_run_config(std::istream& in);
RunConfig load_run_config(const std::filesystem::path& path);

// Canonical key=value rendering accepted by parse_run_config.
std::string format_run_config(const RunConfig& cfg);

}  // namespace defnet
