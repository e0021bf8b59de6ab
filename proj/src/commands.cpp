#include "defnet/commands.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "defnet/config.hpp"
#include "defnet/errors.hpp"
#include "defnet/metrics.hpp"
#include "defnet/nig.hpp"
#include "defnet/scorer.hpp"
#include "defnet/synth.hpp"
#include "defnet/train.hpp"

namespace defnet {

namespace {

constexpr double kLossGradTolerance = 1e-5;
constexpr double kEndToEndGradTolerance = 1e-4;

RunConfig resolve_config(const CommandOptions& opts) {
  RunConfig cfg = opts.config ? load_run_config(*opts.config) : RunConfig{};
  if (opts.seed) {
    cfg.synth.seed = *opts.seed;
    cfg.train.seed = *opts.seed;
  }
  if (opts.out) cfg.out_dir = *opts.out;
  if (opts.dataset) cfg.dataset = *opts.dataset;
  return cfg;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw InvalidInput("cannot create output directory " + dir.string());
  }
}

std::string fmt(const char* pattern, double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, x);
  return buf;
}

std::string describe(const NigParams& p) {
  std::ostringstream os;
  os << '(' << fmt("%.6g", p.delta) << ", " << fmt("%.6g", p.v) << ", " << fmt("%.6g", p.alpha) << ", "
     << fmt("%.6g", p.beta) << ')';
  return os.str();
}

NigParams parse_nig(const std::string& text) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(cell, &used);
    } catch (const std::exception&) {
      throw InvalidInput("--nig: cannot parse '" + text + "'");
    }
    if (used != cell.size()) throw InvalidInput("--nig: cannot parse '" + text + "'");
    vals.push_back(x);
  }
  if (vals.size() != 4) throw InvalidInput("--nig expects delta,v,alpha,beta; got '" + text + "'");
  NigParams p{vals[0], vals[1], vals[2], vals[3]};
  validate(p);
  return p;
}

void check_compatible(const TinyScorer& model, const std::vector<Sample>& data) {
  for (const auto& s : data) {
    if (static_cast<int>(s.global_features.size()) != model.feature_dim) {
      throw InvalidInput("dataset feature width " + std::to_string(s.global_features.size()) +
                         " does not match model width " + std::to_string(model.feature_dim));
    }
    sample_targets(s, model.shape);
  }
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace

int cmd_datagen(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = resolve_config(opts);
    const auto samples = generate_dataset(cfg.synth);
    const auto path = cfg.dataset_path();
    if (path.has_parent_path()) ensure_dir(path.parent_path());
    write_dataset_csv(path, samples);
    out << "wrote " << samples.size() << " samples ("
        << samples.size() * static_cast<std::size_t>(cfg.synth.n_subregions + 1) << " rows) to "
        << path.string() << '\n';
    return kExitOk;
  });
}

int cmd_train(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = resolve_config(opts);
    const auto path = cfg.dataset_path();
    if (!std::filesystem::exists(path)) throw InvalidInput("dataset not found: " + path.string());
    const auto data = read_dataset_csv(path);
    const JointShape shape = shape_for(cfg.synth);
    for (const auto& s : data) sample_targets(s, shape);

    const auto [train_set, val_set] = split_dataset(data, cfg.train.train_fraction);
    const TrainResult result = train(train_set, val_set, shape, cfg.train, cfg.fusion);

    ensure_dir(cfg.out_dir);
    save_model(cfg.out_dir / "model.txt", result.scorer);
    std::ofstream hist(cfg.out_dir / "history.csv", std::ios::binary);
    if (!hist) throw InvalidInput("cannot write history to " + cfg.out_dir.string());
    write_history_csv(hist, result.history);

    const auto& last = result.history.back();
    out << "epochs=" << result.history.size() << '\n'
        << "final_total=" << fmt("%.6f", last.loss.total) << '\n'
        << "final_val_srcc=" << fmt("%.6f", last.val_srcc) << '\n'
        << "model=" << (cfg.out_dir / "model.txt").string() << '\n'
        << "history=" << (cfg.out_dir / "history.csv").string() << '\n';
    return kExitOk;
  });
}

int cmd_eval(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = resolve_config(opts);
    const auto model_path = opts.model.value_or(cfg.out_dir / "model.txt");
    const auto data_path = cfg.dataset_path();
    if (!std::filesystem::exists(model_path)) throw InvalidInput("model not found: " + model_path.string());
    if (!std::filesystem::exists(data_path)) throw InvalidInput("dataset not found: " + data_path.string());
    const TinyScorer model = load_model(model_path);
    const auto data = read_dataset_csv(data_path);
    check_compatible(model, data);

    const auto [train_set, test_set] = split_dataset(data, cfg.train.train_fraction);
    std::span<const Sample> chosen;
    if (opts.split == "all") {
      chosen = data;
    } else if (opts.split == "train") {
      chosen = train_set;
    } else if (opts.split == "test") {
      chosen = test_set;
    } else {
      throw InvalidInput("--split must be all, train or test");
    }
    if (chosen.size() < 2) throw InvalidInput("evaluation split has fewer than two samples");

    const MetricsReport m = evaluate(model, chosen, cfg.fusion);
    const TinyScorer baseline = TinyScorer::random(model.shape, model.feature_dim, cfg.train.seed);
    const MetricsReport b = evaluate(baseline, chosen, cfg.fusion);

    std::ostringstream report;
    report << "split=" << opts.split << '\n' << format_metrics(m)
           << "random_baseline_srcc=" << fmt("%.6f", b.srcc) << '\n'
           << "random_baseline_plcc=" << fmt("%.6f", b.plcc) << '\n';
    ensure_dir(cfg.out_dir);
    std::ofstream file(cfg.out_dir / "metrics.txt", std::ios::binary);
    if (!file) throw InvalidInput("cannot write metrics to " + cfg.out_dir.string());
    file << report.str();
    out << report.str();
    return kExitOk;
  });
}

int cmd_gradcheck(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    RunConfig cfg = resolve_config(opts);
    SynthConfig small = cfg.synth;
    small.n_samples = 2;
    const auto batch = generate_dataset(small);
    const TinyScorer scorer = TinyScorer::random(shape_for(small), small.feature_dim, cfg.train.seed);
    const TaskWeights weights = TaskWeights::with_tasks(cfg.train.enable_scene_task, cfg.train.enable_distortion_task);

    const GradcheckReport loss_report = gradcheck_evidential(100, cfg.train.seed);
    GradcheckReport e2e = gradcheck_end_to_end(scorer, batch, weights, cfg.fusion, 1e-6, opts.corrupt_grad);

    bool ok = true;
    out << "# evidential loss (100 draws, tolerance " << fmt("%g", kLossGradTolerance) << ")\n";
    for (const auto& g : loss_report.groups) {
      const bool pass = g.max_rel_error < kLossGradTolerance;
      ok = ok && pass;
      out << g.name << " max_rel_error=" << fmt("%.3e", g.max_rel_error) << (pass ? " ok" : " FAIL") << '\n';
    }
    out << "# end-to-end overall loss (2-sample batch, tolerance " << fmt("%g", kEndToEndGradTolerance) << ")\n";
    for (const auto& g : e2e.groups) {
      const bool pass = g.max_rel_error < kEndToEndGradTolerance;
      ok = ok && pass;
      out << g.name << " n=" << g.count << " max_rel_error=" << fmt("%.3e", g.max_rel_error)
          << (pass ? " ok" : " FAIL") << '\n';
    }
    out << (ok ? "PASS" : "FAIL") << '\n';
    return ok ? kExitOk : kExitCheckFailed;
  });
}

int cmd_fusedemo(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opts.nig.empty()) throw InvalidInput("fusedemo needs at least one --nig delta,v,alpha,beta");
    std::vector<NigParams> params;
    for (const auto& text : opts.nig) params.push_back(parse_nig(text));

    NigParams acc = params.front();
    out << "input[0] = " << describe(acc) << '\n';
    for (std::size_t i = 1; i < params.size(); ++i) {
      const NigParams next = nig_fuse(acc, params[i]);
      out << "step " << i << ": " << describe(acc) << " + " << describe(params[i]) << " -> " << describe(next)
          << '\n';
      acc = next;
    }
    const Interval ci = predictive_interval(acc, 0.95);
    out << "fused = " << describe(acc) << '\n'
        << "total_evidence = " << fmt("%.6g", total_evidence(acc)) << '\n'
        << "aleatoric = " << fmt("%.6g", aleatoric(acc)) << '\n'
        << "epistemic = " << fmt("%.6g", epistemic(acc)) << '\n'
        << "interval95 = [" << fmt("%.6g", ci.lo) << ", " << fmt("%.6g", ci.hi) << "]\n";
    return kExitOk;
  });
}

}  // namespace defnet
