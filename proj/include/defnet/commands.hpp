#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace defnet {

enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitUsage = 2,
  kExitDiverged = 3,
};

struct CommandOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> dataset;
  std::optional<std::filesystem::path> model;
  std::vector<std::string> nig;  // "delta,v,alpha,beta"
  std::string split = "test";    // eval: all | train | test
  bool corrupt_grad = false;
};

// Each command prints to `out`, diagnostics to `err`, and returns an ExitCode.
int cmd_datagen(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_train(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_eval(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_gradcheck(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_fusedemo(const CommandOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace defnet
