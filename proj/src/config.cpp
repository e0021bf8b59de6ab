#include "defnet/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "defnet/errors.hpp"

namespace defnet {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& text) {
  T value{};
  const auto* end = text.data() + text.size();
  if constexpr (std::is_floating_point_v<T>) {
    // from_chars for doubles is incomplete on older toolchains.
    std::size_t used = 0;
    value = static_cast<T>(std::stod(text, &used));
    if (used != text.size()) throw std::invalid_argument(text);
  } else {
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) throw std::invalid_argument(text);
  }
  return value;
}

bool parse_bool(const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw std::invalid_argument(text);
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"n_samples", [](RunConfig& c, const std::string& v) { c.synth.n_samples = parse_number<int>(v); }},
      {"n_subregions", [](RunConfig& c, const std::string& v) { c.synth.n_subregions = parse_number<int>(v); }},
      {"feature_dim", [](RunConfig& c, const std::string& v) { c.synth.feature_dim = parse_number<int>(v); }},
      {"scenes", [](RunConfig& c, const std::string& v) { c.synth.scenes = parse_number<int>(v); }},
      {"distortions", [](RunConfig& c, const std::string& v) { c.synth.distortions = parse_number<int>(v); }},
      {"noise_scale", [](RunConfig& c, const std::string& v) { c.synth.noise_scale = parse_number<double>(v); }},
      {"seed", [](RunConfig& c, const std::string& v) {
         c.synth.seed = parse_number<std::uint64_t>(v);
         c.train.seed = c.synth.seed;
       }},
      {"lambda1", [](RunConfig& c, const std::string& v) { c.fusion.lambda1 = parse_number<double>(v); }},
      {"lambda2", [](RunConfig& c, const std::string& v) { c.fusion.lambda2 = parse_number<double>(v); }},
      {"tau", [](RunConfig& c, const std::string& v) { c.fusion.tau = parse_number<double>(v); }},
      {"n_fuse", [](RunConfig& c, const std::string& v) { c.fusion.n_fuse = parse_number<int>(v); }},
      {"lr", [](RunConfig& c, const std::string& v) { c.train.lr = parse_number<double>(v); }},
      {"epochs", [](RunConfig& c, const std::string& v) { c.train.epochs = parse_number<int>(v); }},
      {"batch_size", [](RunConfig& c, const std::string& v) { c.train.batch_size = parse_number<int>(v); }},
      {"train_fraction", [](RunConfig& c, const std::string& v) { c.train.train_fraction = parse_number<double>(v); }},
      {"enable_LU", [](RunConfig& c, const std::string& v) { c.fusion.use_cross_region = parse_bool(v); }},
      {"enable_LF", [](RunConfig& c, const std::string& v) { c.fusion.use_local_global = parse_bool(v); }},
      {"enable_scene_task", [](RunConfig& c, const std::string& v) { c.train.enable_scene_task = parse_bool(v); }},
      {"enable_distortion_task",
       [](RunConfig& c, const std::string& v) { c.train.enable_distortion_task = parse_bool(v); }},
      {"out_dir", [](RunConfig& c, const std::string& v) { c.out_dir = v; }},
      {"dataset", [](RunConfig& c, const std::string& v) { c.dataset = v; }},
  };
  return table;
}

}  // namespace

std::filesystem::path RunConfig::dataset_path() const {
  return dataset.empty() ? out_dir / "dataset.csv" : dataset;
}

void RunConfig::validate() const {
  synth.validate();
  fusion.validate();
  train.validate();
}

RunConfig parse_run_config(std::istream& in) {
  RunConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidInput("config line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) {
      throw InvalidInput("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    try {
      it->second(cfg, value);
    } catch (const std::exception&) {
      throw InvalidInput("config line " + std::to_string(line_no) + ": bad value '" + value + "' for " + key);
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config " + path.string());
  return parse_run_config(in);
}

std::string format_run_config(const RunConfig& c) {
  std::ostringstream out;
  const auto b = [](bool x) { return x ? "true" : "false"; };
  char buf[64];
  const auto d = [&](double x) {
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return std::string(buf);
  };
  out << "n_samples = " << c.synth.n_samples << '\n'
      << "n_subregions = " << c.synth.n_subregions << '\n'
      << "feature_dim = " << c.synth.feature_dim << '\n'
      << "scenes = " << c.synth.scenes << '\n'
      << "distortions = " << c.synth.distortions << '\n'
      << "noise_scale = " << d(c.synth.noise_scale) << '\n'
      << "seed = " << c.synth.seed << '\n'
      << "lambda1 = " << d(c.fusion.lambda1) << '\n'
      << "lambda2 = " << d(c.fusion.lambda2) << '\n'
      << "tau = " << d(c.fusion.tau) << '\n'
      << "n_fuse = " << c.fusion.n_fuse << '\n'
      << "lr = " << d(c.train.lr) << '\n'
      << "epochs = " << c.train.epochs << '\n'
      << "batch_size = " << c.train.batch_size << '\n'
      << "train_fraction = " << d(c.train.train_fraction) << '\n'
      << "enable_LU = " << b(c.fusion.use_cross_region) << '\n'
      << "enable_LF = " << b(c.fusion.use_local_global) << '\n'
      << "enable_scene_task = " << b(c.train.enable_scene_task) << '\n'
      << "enable_distortion_task = " << b(c.train.enable_distortion_task) << '\n'
      << "out_dir = " << c.out_dir.string() << '\n';
  if (!c.dataset.empty()) out << "dataset = " << c.dataset.string() << '\n';
  return out.str();
}

}  // namespace defnet
