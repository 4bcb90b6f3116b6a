// Command-line front end: corpus generation, training, evaluation,
// prediction, ensembling, and gradient audits.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "mmseq/checkpoint.hpp"
#include "mmseq/dataset.hpp"
#include "mmseq/ensemble.hpp"
#include "mmseq/error.hpp"
#include "mmseq/train.hpp"

namespace {

using namespace mmseq;

const std::map<std::string, CellKind> kCellNames = {
    {"lstm", CellKind::lstm},
    {"gru", CellKind::gru},
};

const std::map<std::string, FusionMode> kFusionNames = {
    {"concat", FusionMode::concat},
    {"shared", FusionMode::shared_space},
    {"project", FusionMode::projection},
};

const std::map<std::string, FileFormat> kFormatNames = {
    {"text", FileFormat::text},
    {"binary", FileFormat::binary},
};

struct GenerateArgs {
  std::string out;
  DatasetSpec spec;
  FileFormat format = FileFormat::text;
};

int run_generate(const GenerateArgs& args) {
  const SyntheticDataset data = generate_synthetic(args.spec);
  const DatasetHeader header{args.spec.num_classes, args.spec.frames, args.spec.visual_dim,
                             args.spec.audio_dim};
  const std::string ext = args.format == FileFormat::binary ? ".bin" : ".txt";
  const std::string train_path = args.out + ".train" + ext;
  const std::string test_path = args.out + ".test" + ext;
  write_dataset(data.train, header, train_path, args.format);
  write_dataset(data.test, header, test_path, args.format);
  std::printf("wrote %zu train videos to %s\n", data.train.size(), train_path.c_str());
  std::printf("wrote %zu test videos to %s\n", data.test.size(), test_path.c_str());
  return 0;
}

struct ModelArgs {
  std::string cell = "gru";
  bool bidirectional = true;
  std::size_t layers = 2;
  std::size_t hidden = 16;
  std::string fusion = "concat";
  std::size_t shared_dim = 8;
  double lambda_align = 0.1;
  bool attention = false;
  bool video_level = false;
  std::size_t max_frames = 300;
};

void add_model_flags(CLI::App* cmd, ModelArgs& args) {
  cmd->add_option("--cell", args.cell, "Recurrent cell")
      ->check(CLI::IsMember({"lstm", "gru"}));
  cmd->add_option("--bidirectional", args.bidirectional, "Encode both directions");
  cmd->add_option("--layers", args.layers, "Stacked encoder layers");
  cmd->add_option("--hidden", args.hidden, "Hidden state width");
  cmd->add_option("--fusion", args.fusion, "Modality fusion strategy")
      ->check(CLI::IsMember({"concat", "shared", "project"}));
  cmd->add_option("--shared-dim", args.shared_dim, "Fusion shared-space width");
  cmd->add_option("--lambda-align", args.lambda_align, "Alignment penalty weight");
  cmd->add_option("--attention", args.attention, "Attention pooling");
  cmd->add_flag("--video-level", args.video_level,
                "Logistic-regression baseline over mean features");
  cmd->add_option("--max-frames", args.max_frames, "Truncate sequences beyond this length");
}

ModelConfig model_config_of(const ModelArgs& args, const DatasetHeader& header) {
  ModelConfig cfg;
  cfg.cell = kCellNames.at(args.cell);
  cfg.bidirectional = args.bidirectional;
  cfg.num_layers = args.layers;
  cfg.hidden_dim = args.hidden;
  cfg.fusion.mode = kFusionNames.at(args.fusion);
  cfg.fusion.shared_dim = args.shared_dim;
  cfg.fusion.lambda_align = args.lambda_align;
  cfg.attention = args.attention;
  cfg.video_level = args.video_level;
  cfg.num_classes = header.num_classes;
  cfg.visual_dim = header.visual_dim;
  cfg.audio_dim = header.audio_dim;
  cfg.max_frames = args.max_frames;
  return cfg;
}

struct TrainArgs {
  std::string data;
  std::string val;
  ModelArgs model;
  double lr = 0.01;
  double decay = 0.95;
  std::size_t decay_steps = 1000;
  std::size_t batch = 32;
  std::size_t epochs = 10;
  std::uint64_t seed = 1;
  std::string checkpoint;
  int threads = 1;
};

int run_train(const TrainArgs& args) {
  DatasetHeader header;
  const auto train_set = load_dataset(args.data, &header);
  std::vector<FrameExample> val_set;
  if (!args.val.empty()) {
    DatasetHeader val_header;
    val_set = load_dataset(args.val, &val_header);
    if (val_header.visual_dim != header.visual_dim ||
        val_header.audio_dim != header.audio_dim ||
        val_header.num_classes != header.num_classes) {
      throw DataError("train: validation set schema does not match the training set");
    }
  }

  Model model = build_model(model_config_of(args.model, header), args.seed);
  AdamState state(model.params);

  TrainOptions opts;
  opts.epochs = args.epochs;
  opts.batch_size = args.batch;
  opts.seed = args.seed;
  opts.schedule.base_lr = args.lr;
  opts.schedule.decay_factor = args.decay;
  opts.schedule.decay_steps = args.decay_steps;
  opts.threads = args.threads;
  opts.checkpoint_path = args.checkpoint;
  opts.verbose = true;

  train(model, state, train_set, val_set, opts);
  if (!args.checkpoint.empty()) {
    save_checkpoint(args.checkpoint, model, state, state.t);
    std::printf("checkpoint written to %s\n", args.checkpoint.c_str());
  }
  return 0;
}

struct EvaluateArgs {
  std::string data;
  std::string checkpoint;
  std::size_t k = 20;
  std::string report;
};

int run_evaluate(const EvaluateArgs& args) {
  const Checkpoint ckpt = load_checkpoint(args.checkpoint);
  const auto examples = load_dataset(args.data);
  const GapReport report =
      gap_at_k(predict_all(ckpt.model, examples), ground_truth_of(examples), args.k);
  std::printf("GAP@%zu = %.12f\n", args.k, report.gap);
  std::printf("retained %zu predictions over %zu ground-truth pairs\n", report.retained,
              report.positives);
  if (!args.report.empty()) {
    std::ofstream out(args.report);
    if (!out) {
      throw DataError("evaluate: cannot open '" + args.report + "' for writing");
    }
    out << "confidence,video_id,class_id,correct\n";
    char buf[64];
    for (const auto& e : report.ledger) {
      std::snprintf(buf, sizeof(buf), "%.17g", e.confidence);
      out << buf << ',' << e.video_id << ',' << e.class_id << ',' << (e.correct ? 1 : 0)
          << '\n';
    }
    std::printf("ledger written to %s\n", args.report.c_str());
  }
  return 0;
}

struct PredictArgs {
  std::string data;
  std::string checkpoint;
  std::size_t k = 20;
  std::string out;
};

int run_predict(const PredictArgs& args) {
  const Checkpoint ckpt = load_checkpoint(args.checkpoint);
  const auto examples = load_dataset(args.data);
  const PredictionSet preds = predict_top_k(ckpt.model, examples, args.k);
  write_predictions(preds, args.out);
  std::printf("wrote predictions for %zu videos to %s\n", preds.size(), args.out.c_str());
  return 0;
}

struct EnsembleArgs {
  std::vector<std::string> preds;
  std::vector<double> gaps;
  std::size_t k = 20;
  std::string out;
};

int run_ensemble(const EnsembleArgs& args) {
  std::vector<PredictionSet> sets;
  sets.reserve(args.preds.size());
  for (const std::string& path : args.preds) sets.push_back(read_predictions(path));
  const PredictionSet combined = ensemble_combine(sets, args.gaps, args.k);
  write_predictions(combined, args.out);
  std::printf("wrote combined predictions for %zu videos to %s\n", combined.size(),
              args.out.c_str());
  return 0;
}

struct GradcheckArgs {
  std::string config;
  ModelArgs model;
  std::size_t classes = 4;
  std::size_t dv = 5;
  std::size_t da = 3;
  std::size_t frames = 6;
  std::size_t batch = 2;
  std::uint64_t seed = 1;
  double step = 1e-6;
  double tolerance = 1e-4;
};

void apply_json_config(GradcheckArgs& args) {
  std::ifstream in(args.config);
  if (!in) {
    throw DataError("gradcheck: cannot open config '" + args.config + "'");
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("gradcheck: config '" + args.config + "': " + e.what());
  }
  if (j.contains("cell")) args.model.cell = j["cell"].get<std::string>();
  if (j.contains("bidirectional")) args.model.bidirectional = j["bidirectional"].get<bool>();
  if (j.contains("layers")) args.model.layers = j["layers"].get<std::size_t>();
  if (j.contains("hidden")) args.model.hidden = j["hidden"].get<std::size_t>();
  if (j.contains("fusion")) args.model.fusion = j["fusion"].get<std::string>();
  if (j.contains("shared_dim")) args.model.shared_dim = j["shared_dim"].get<std::size_t>();
  if (j.contains("lambda_align")) args.model.lambda_align = j["lambda_align"].get<double>();
  if (j.contains("attention")) args.model.attention = j["attention"].get<bool>();
  if (j.contains("video_level")) args.model.video_level = j["video_level"].get<bool>();
  if (j.contains("classes")) args.classes = j["classes"].get<std::size_t>();
  if (j.contains("dv")) args.dv = j["dv"].get<std::size_t>();
  if (j.contains("da")) args.da = j["da"].get<std::size_t>();
  if (j.contains("frames")) args.frames = j["frames"].get<std::size_t>();
  if (j.contains("batch")) args.batch = j["batch"].get<std::size_t>();
  if (j.contains("seed")) args.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("step")) args.step = j["step"].get<double>();
  if (!kCellNames.count(args.model.cell)) {
    throw ConfigError("gradcheck: unknown cell '" + args.model.cell + "'");
  }
  if (!kFusionNames.count(args.model.fusion)) {
    throw ConfigError("gradcheck: unknown fusion '" + args.model.fusion + "'");
  }
}

int run_gradcheck(GradcheckArgs& args) {
  if (!args.config.empty()) apply_json_config(args);

  DatasetSpec spec;
  spec.num_videos = std::max<std::size_t>(args.batch + 1, 4);
  spec.num_classes = args.classes;
  spec.frames = args.frames;
  spec.visual_dim = args.dv;
  spec.audio_dim = args.da;
  spec.labels_per_video = std::min(2.0, static_cast<double>(args.classes));
  spec.seed = args.seed;
  SyntheticDataset data = generate_synthetic(spec);
  std::vector<FrameExample> batch(
      data.train.begin(),
      data.train.begin() +
          static_cast<std::ptrdiff_t>(std::min(args.batch, data.train.size())));

  const DatasetHeader header{args.classes, args.frames, args.dv, args.da};
  Model model = build_model(model_config_of(args.model, header), args.seed);
  FdOptions opts;
  opts.step = args.step;
  const FdReport report = finite_diff_check(model, batch, opts);

  std::printf("%-24s %12s %8s\n", "parameter", "max_rel_err", "coords");
  for (const auto& g : report.groups) {
    std::printf("%-24s %12.3e %8zu\n", g.name.c_str(), g.max_rel_err, g.coords_checked);
  }
  std::printf("max relative error: %.3e (tolerance %.3e)\n", report.max_rel_err,
              args.tolerance);
  if (report.max_rel_err > args.tolerance) {
    std::fprintf(stderr, "gradcheck FAILED\n");
    return 3;
  }
  std::printf("gradcheck passed\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multimodal sequence classification toolkit"};
  app.require_subcommand(1);

  GenerateArgs gen;
  std::string gen_format = "text";
  CLI::App* generate = app.add_subcommand("generate", "Write a planted-signal corpus");
  generate->add_option("--out", gen.out, "Output path prefix")->required();
  generate->add_option("--videos", gen.spec.num_videos, "Total videos (train + test)");
  generate->add_option("--classes", gen.spec.num_classes, "Number of classes");
  generate->add_option("--frames", gen.spec.frames, "Frames per video");
  generate->add_option("--dv", gen.spec.visual_dim, "Visual feature width");
  generate->add_option("--da", gen.spec.audio_dim, "Audio feature width");
  generate->add_option("--labels-per-video", gen.spec.labels_per_video,
                       "Mean labels per video");
  generate->add_option("--signal", gen.spec.signal_strength, "Planted signal strength");
  generate->add_option("--seed", gen.spec.seed, "Generator seed");
  generate->add_option("--train-fraction", gen.spec.train_fraction, "Train split fraction");
  generate->add_option("--format", gen_format, "File format")
      ->check(CLI::IsMember({"text", "binary"}));

  TrainArgs tr;
  CLI::App* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--data", tr.data, "Training dataset")->required();
  train_cmd->add_option("--val", tr.val, "Validation dataset for per-epoch GAP");
  add_model_flags(train_cmd, tr.model);
  train_cmd->add_option("--lr", tr.lr, "Base learning rate");
  train_cmd->add_option("--decay", tr.decay, "Learning-rate decay factor");
  train_cmd->add_option("--decay-steps", tr.decay_steps, "Steps per decay interval");
  train_cmd->add_option("--batch", tr.batch, "Minibatch size");
  train_cmd->add_option("--epochs", tr.epochs, "Training epochs");
  train_cmd->add_option("--seed", tr.seed, "Init and shuffle seed");
  train_cmd->add_option("--checkpoint", tr.checkpoint, "Checkpoint output path");
  train_cmd->add_option("--threads", tr.threads, "Worker threads (1 = serial reference)");

  EvaluateArgs ev;
  CLI::App* evaluate = app.add_subcommand("evaluate", "Score a checkpoint with GAP@k");
  evaluate->add_option("--data", ev.data, "Evaluation dataset")->required();
  evaluate->add_option("--checkpoint", ev.checkpoint, "Model checkpoint")->required();
  evaluate->add_option("--k", ev.k, "Predictions retained per video");
  evaluate->add_option("--report", ev.report, "Write the sorted prediction ledger here");

  PredictArgs pr;
  CLI::App* predict = app.add_subcommand("predict", "Write top-k predictions as CSV");
  predict->add_option("--data", pr.data, "Input dataset")->required();
  predict->add_option("--checkpoint", pr.checkpoint, "Model checkpoint")->required();
  predict->add_option("--k", pr.k, "Predictions kept per video");
  predict->add_option("--out", pr.out, "Output CSV path")->required();

  EnsembleArgs en;
  CLI::App* ensemble = app.add_subcommand("ensemble", "Combine prediction files");
  ensemble->add_option("--preds", en.preds, "Prediction CSV paths")->required();
  ensemble->add_option("--gaps", en.gaps, "GAP weight per prediction file")->required();
  ensemble->add_option("--k", en.k, "Classes kept per video");
  ensemble->add_option("--out", en.out, "Output CSV path")->required();

  GradcheckArgs gc;
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient audit");
  gradcheck->add_option("--config", gc.config, "JSON model/audit config");
  add_model_flags(gradcheck, gc.model);
  gradcheck->add_option("--classes", gc.classes, "Number of classes");
  gradcheck->add_option("--dv", gc.dv, "Visual feature width");
  gradcheck->add_option("--da", gc.da, "Audio feature width");
  gradcheck->add_option("--frames", gc.frames, "Frames per synthetic video");
  gradcheck->add_option("--batch", gc.batch, "Audit batch size");
  gradcheck->add_option("--seed", gc.seed, "Model and data seed");
  gradcheck->add_option("--step", gc.step, "Central-difference step");
  gradcheck->add_option("--tolerance", gc.tolerance, "Maximum relative error accepted");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*generate) {
      gen.format = kFormatNames.at(gen_format);
      return run_generate(gen);
    }
    if (*train_cmd) return run_train(tr);
    if (*evaluate) return run_evaluate(ev);
    if (*predict) return run_predict(pr);
    if (*ensemble) return run_ensemble(en);
    if (*gradcheck) return run_gradcheck(gc);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const ShapeError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
