#include "hsigan/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "hsigan/checkpoint.hpp"
#include "hsigan/errors.hpp"
#include "hsigan/prob_map.hpp"

namespace hsigan {

namespace fs = std::filesystem;

PipelineData load_pipeline_data(const PipelineConfig& cfg) {
  PipelineData data;
  if (cfg.data_cube.empty()) {
    SynthSpec spec = cfg.synth;
    spec.seed = cfg.seed;
    auto [cube, labels] = synth_scene(spec);
    data.raw = std::move(cube);
    data.labels = std::move(labels);
  } else {
    data.raw = load_cube(cfg.data_cube);
    data.labels = load_labels_pgm(cfg.data_labels);
    if (data.labels.height != data.raw.height || data.labels.width != data.raw.width)
      throw DataError("pipeline: label map " + std::to_string(data.labels.width) + "x" +
                      std::to_string(data.labels.height) + " does not match cube " +
                      std::to_string(data.raw.width) + "x" + std::to_string(data.raw.height));
  }
  if (!std::all_of(data.raw.values.begin(), data.raw.values.end(),
                   [](float v) { return std::isfinite(v); }))
    throw DataError("pipeline: cube contains non-finite values");
  data.normalized = normalize(data.raw, cfg.normalize_enum());
  return data;
}

ParamSet merge_params(const ParamSet& disc, const ParamSet& gen) {
  ParamSet merged;
  for (int i = 0; i < disc.size(); ++i)
    merged.add(disc.names[static_cast<std::size_t>(i)], disc[i]);
  for (int i = 0; i < gen.size(); ++i) merged.add(gen.names[static_cast<std::size_t>(i)], gen[i]);
  return merged;
}

void split_params(const ParamSet& merged, ParamSet& disc, ParamSet& gen) {
  if (merged.size() != disc.size() + gen.size())
    throw ShapeError("split_params: merged parameter count mismatch");
  for (int i = 0; i < disc.size(); ++i) disc[i] = merged[i];
  for (int i = 0; i < gen.size(); ++i) gen[i] = merged[disc.size() + i];
}

void cmd_synth(const PipelineConfig& cfg) {
  cfg.validate();
  const OutPaths paths(cfg.out_dir);
  fs::create_directories(paths.data_dir());
  const PipelineData data = load_pipeline_data(cfg);
  write_cube(data.raw, paths.cube());
  write_labels_pgm(data.labels, paths.labels());
}

void cmd_train(const PipelineConfig& cfg) {
  cfg.validate();
  const OutPaths paths(cfg.out_dir);
  fs::create_directories(paths.train_dir());

  const PipelineData data = load_pipeline_data(cfg);
  const DatasetSplit split = make_split(data.labels, cfg.n_per_class, cfg.seed);
  write_split_csv(split, paths.split());

  TrainConfig tc = cfg.train;
  tc.seed = cfg.seed;
  const int ckpt_every = std::max(1, tc.epochs / 10);
  const auto on_epoch = [&](int epoch, const Discriminator& disc, const Generator& gen) {
    if (epoch % ckpt_every == 0 || epoch == tc.epochs)
      save_checkpoint(merge_params(disc.params, gen.params), paths.checkpoint(tc.variant, epoch));
  };

  const TrainResult result =
      train(data.normalized, split, data.labels.num_classes, tc, on_epoch);
  write_train_log_csv(result.log, paths.train_log());
  if (tc.epochs == 0) {
    // Nothing trained, but refine still needs a loadable model.
    save_checkpoint(merge_params(result.disc.params, result.gen.params),
                    paths.checkpoint(tc.variant, 0));
  }
}

RefineResult cmd_refine(const PipelineConfig& cfg, const std::string& checkpoint_path) {
  cfg.validate();
  const OutPaths paths(cfg.out_dir);
  fs::create_directories(paths.refine_dir());

  const PipelineData data = load_pipeline_data(cfg);
  const DatasetSplit split = load_split_csv(paths.split());

  // Rebuild the architecture from config, then overwrite with the trained
  // parameters; mismatches surface as shape diagnostics.
  Rng init_rng(cfg.seed);
  Rng disc_rng = init_rng.fork(1);
  Discriminator disc = build_discriminator(cfg.train.variant, data.labels.num_classes,
                                           cfg.train.patch_size, data.raw.bands, disc_rng,
                                           cfg.train.lrelu_slope);
  Generator gen = build_generator(cfg.train.noise_dim, cfg.train.patch_size, data.raw.bands,
                                  disc_rng);
  ParamSet merged = merge_params(disc.params, gen.params);
  const std::string ckpt = checkpoint_path.empty()
                               ? paths.checkpoint(cfg.train.variant, cfg.train.epochs)
                               : checkpoint_path;
  load_checkpoint(merged, ckpt);
  split_params(merged, disc.params, gen.params);

  const ProbabilityMap probs = predict_map(disc, data.normalized);
  write_prob_map(probs, paths.refine_dir() + "/probs.hsi");

  const FeatureField features = features_from_cube(data.normalized);
  const ProbabilityMap refined = mean_field_infer(probs, features, cfg.crf);
  write_prob_map(refined, paths.refine_dir() + "/probs_crf.hsi");

  const LabelMap map_before = map_labeling(probs);
  const LabelMap map_after = map_labeling(refined);
  render_map(map_before, default_palette(), paths.refine_dir() + "/map.ppm");
  render_map(map_after, default_palette(), paths.refine_dir() + "/map_crf.ppm");

  std::vector<std::int64_t> eval_indices;
  eval_indices.reserve(split.test.size());
  for (const auto& [idx, label] : split.test) eval_indices.push_back(idx);

  const ConfusionMatrix cm_before = confusion(map_before, data.labels, eval_indices);
  const ConfusionMatrix cm_after = confusion(map_after, data.labels, eval_indices);
  const std::string hash = cfg.hash();

  std::ofstream(paths.refine_dir() + "/metrics.json")
      << metrics_json(cm_before, split.seed, hash);
  std::ofstream(paths.refine_dir() + "/metrics_crf.json")
      << metrics_json(cm_after, split.seed, hash);

  RefineResult r;
  r.oa_before = overall_accuracy(cm_before);
  r.oa_after = overall_accuracy(cm_after);
  return r;
}

std::string cmd_eval(const PipelineConfig& cfg, const std::string& pred_path,
                     const std::string& split_path) {
  cfg.validate();
  const OutPaths paths(cfg.out_dir);
  const PipelineData data = load_pipeline_data(cfg);
  const LabelMap pred = load_labels_pgm(pred_path);
  const DatasetSplit split =
      load_split_csv(split_path.empty() ? paths.split() : split_path);
  std::vector<std::int64_t> eval_indices;
  eval_indices.reserve(split.test.size());
  for (const auto& [idx, label] : split.test) eval_indices.push_back(idx);
  const ConfusionMatrix cm = confusion(pred, data.labels, eval_indices);
  return metrics_json(cm, split.seed, cfg.hash());
}

}  // namespace hsigan
