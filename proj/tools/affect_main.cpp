#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "affect/pipeline.hpp"
#include "affect/serialization.hpp"

using namespace affect;

int main(int argc, char** argv) {
  CLI::App app{"affect: emotion-distribution modeling over precomputed image features"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_path;
  app.add_option("--seed", cfg.seed, "top-level random seed");
  app.add_option("--threads", cfg.threads, "worker cap for parallel training");
  app.add_option("--out", cfg.out_dir, "output directory");
  app.add_option("--config", config_path, "JSON file with configuration overrides");

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "validate a dataset and print a summary");
  c_ingest->add_option("manifest", ingest.manifest, "dataset manifest JSON")->required();

  AdmixtureArgs admix;
  auto* c_admix = app.add_subcommand("admixture", "solve the concept-profile admixture model");
  c_admix->add_option("manifest", admix.manifest, "dataset manifest JSON")->required();
  c_admix->add_option("--family", admix.family, "HLC family to analyze (imagenet|places)");
  c_admix->add_option("--topk", admix.topk, "top concepts per class for the heat map");
  c_admix->add_option("--truth", admix.truth, "ground-truth sidecar to compare against");

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "split, preprocess and train an ensemble");
  c_train->add_option("manifest", train.manifest, "dataset manifest JSON")->required();
  c_train->add_option("--task", train.task, "distribution | va | artphoto")->required();
  c_train->add_flag("--report", train.report, "write per-cell grid-search reports");

  PredictArgs predict;
  auto* c_predict = app.add_subcommand("predict", "predict with a trained bundle");
  c_predict->add_option("bundle", predict.bundle, "trained bundle JSON")->required();
  c_predict->add_option("manifest", predict.manifest, "dataset manifest JSON")->required();

  EvaluateArgs evaluate;
  auto* c_eval = app.add_subcommand("evaluate", "score predictions against ground truth");
  c_eval->add_option("predictions", evaluate.predictions, "predictions CSV")->required();
  c_eval->add_option("manifest", evaluate.manifest, "dataset manifest JSON")->required();
  c_eval->add_option("--ids", evaluate.ids, "evaluate only ids listed in this file");
  c_eval->add_flag("--reference", evaluate.reference,
                   "print published Emotion6 reference results next to the measured values");

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "generate a synthetic dataset with ground truth");
  c_synth->add_option("--kind", synth.kind, "admixture | hybrid")->required();
  c_synth->add_option("--d", synth.d, "concept dimension (admixture)");
  c_synth->add_option("--n", synth.n, "record count (admixture)");
  c_synth->add_option("--noise", synth.noise_std, "observation noise scale (admixture)");
  c_synth->add_option("--records", synth.records, "record count (hybrid)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!config_path.empty()) {
      RunConfig loaded = run_config_from_json(read_json_file(config_path));
      loaded.threads = cfg.threads;
      loaded.out_dir = cfg.out_dir;
      // Explicit command-line flags win over the config file.
      if (app.count("--seed") > 0) loaded.seed = cfg.seed;
      cfg = loaded;
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  if (c_ingest->parsed()) return cmd_ingest(ingest, cfg, std::cout, std::cerr);
  if (c_admix->parsed()) return cmd_admixture(admix, cfg, std::cout, std::cerr);
  if (c_train->parsed()) return cmd_train(train, cfg, std::cout, std::cerr);
  if (c_predict->parsed()) return cmd_predict(predict, cfg, std::cout, std::cerr);
  if (c_eval->parsed()) return cmd_evaluate(evaluate, cfg, std::cout, std::cerr);
  if (c_synth->parsed()) return cmd_synth(synth, cfg, std::cout, std::cerr);
  return kExitValidation;
}
