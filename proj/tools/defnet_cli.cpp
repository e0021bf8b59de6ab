#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "defnet/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Evidential multitask quality-assessment toolkit"};
  app.require_subcommand(1);
  defnet::CommandOptions opts;
  std::string config;
  std::string out;
  std::string dataset;
  std::string model;
  std::uint64_t seed = 0;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "key=value run configuration");
    sub->add_option("--seed", seed, "override the configured seed");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--dataset", dataset, "dataset CSV path");
  };

  auto* datagen = app.add_subcommand("datagen", "generate the synthetic benchmark CSV");
  add_common(datagen);
  auto* train = app.add_subcommand("train", "train the scorer; writes model.txt and history.csv");
  add_common(train);
  auto* eval = app.add_subcommand("eval", "evaluate a model; writes metrics.txt");
  add_common(eval);
  eval->add_option("--model", model, "model file");
  eval->add_option("--split", opts.split, "all | train | test")->check(CLI::IsMember({"all", "train", "test"}));
  auto* gradcheck = app.add_subcommand("gradcheck", "analytic vs finite-difference gradients");
  add_common(gradcheck);
  gradcheck->add_flag("--corrupt-grad", opts.corrupt_grad, "inject a gradient error (must fail)");
  auto* fusedemo = app.add_subcommand("fusedemo", "print a NIG fusion trace");
  fusedemo->add_option("--nig", opts.nig, "delta,v,alpha,beta (repeatable)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : defnet::kExitUsage;
  }

  if (!config.empty()) opts.config = config;
  if (!out.empty()) opts.out = out;
  if (!dataset.empty()) opts.dataset = dataset;
  if (!model.empty()) opts.model = model;
  for (auto* sub : {datagen, train, eval, gradcheck}) {
    if (sub->parsed() && sub->count("--seed") > 0) opts.seed = seed;
  }

  if (datagen->parsed()) return defnet::cmd_datagen(opts, std::cout, std::cerr);
  if (train->parsed()) return defnet::cmd_train(opts, std::cout, std::cerr);
  if (eval->parsed()) return defnet::cmd_eval(opts, std::cout, std::cerr);
  if (gradcheck->parsed()) return defnet::cmd_gradcheck(opts, std::cout, std::cerr);
  return defnet::cmd_fusedemo(opts, std::cout, std::cerr);
}
