#include "hsigan/gan.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "hsigan/errors.hpp"
#include "hsigan/parallel.hpp"

namespace hsigan {

Variant variant_from_string(const std::string& s) {
  if (s == "CONV" || s == "conv") return Variant::CONV;
  if (s == "SPA" || s == "spa") return Variant::SPA;
  if (s == "SPC" || s == "spc") return Variant::SPC;
  if (s == "SS" || s == "ss") return Variant::SS;
  throw ConfigError("unknown variant \"" + s + "\" (expected CONV, SPA, SPC or SS)");
}

std::string variant_to_string(Variant v) {
  switch (v) {
    case Variant::CONV: return "CONV";
    case Variant::SPA: return "SPA";
    case Variant::SPC: return "SPC";
    case Variant::SS: return "SS";
  }
  return "?";
}

namespace {

Tensor init_kernel(Rng& rng, std::vector<int> shape, double fan_in) {
  Tensor t(std::move(shape));
  const double std = std::sqrt(2.0 / std::max(fan_in, 1.0));
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = rng.normal(0.0, std);
  return t;
}

Tensor init_head(Rng& rng, std::vector<int> shape, double fan_in) {
  Tensor t(std::move(shape));
  const double std = std::sqrt(1.0 / std::max(fan_in, 1.0));
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = rng.normal(0.0, std);
  return t;
}

// Registry helper: append one conv layer's parameters.
ConvLayerDef add_conv_layer(ParamSet& params, Rng& rng, const std::string& name, int kh, int kw,
                            int kb, int ci, int co, Stride3 stride, Act act,
                            ConvLayerParams::Mode mode) {
  ConvLayerDef def;
  def.name = name;
  def.stride = stride;
  def.act = act;
  def.mode = mode;
  const bool transposed = mode == ConvLayerParams::Mode::Transposed;
  // Transposed layers run c_out -> c_in, so their op-level fan-in counts the
  // c_out channels spread over the stride volume.
  const double fan_in = transposed
                            ? static_cast<double>(kh) * kw * kb * co / (stride.sh * stride.sw * stride.sb)
                            : static_cast<double>(kh) * kw * kb * ci;
  def.kernel_idx = params.add(name + ".kernel", init_kernel(rng, {kh, kw, kb, ci, co}, fan_in));
  def.bias_idx = params.add(name + ".bias", Tensor({transposed ? ci : co}));
  return def;
}

Tensor conv_layer_pure(const Tensor& x, const ParamSet& params, const ConvLayerDef& def,
                       double slope) {
  Tensor out;
  if (def.mode == ConvLayerParams::Mode::Conv) {
    out = conv3d(x, params[def.kernel_idx], params[def.bias_idx], def.stride);
  } else {
    out = transposed_conv3d(x, params[def.kernel_idx], params[def.bias_idx], def.stride);
  }
  apply_activation(out, def.act, slope);
  return out;
}

int conv_layer_tape(Tape& tape, int x, const ConvLayerDef& def,
                    const Discriminator::TapeIds& ids, double slope) {
  const int k = ids.param_slots[static_cast<std::size_t>(def.kernel_idx)];
  const int b = ids.param_slots[static_cast<std::size_t>(def.bias_idx)];
  const int lin = def.mode == ConvLayerParams::Mode::Conv ? tape.conv(x, k, b, def.stride)
                                                          : tape.transposed_conv(x, k, b, def.stride);
  return def.act == Act::None ? lin : tape.activation(lin, def.act, slope);
}

}  // namespace

Tensor Discriminator::patch_input(const Tensor& patch) const {
  if (patch.rank() != 3 || patch.dim(0) != patch_size || patch.dim(1) != patch_size ||
      patch.dim(2) != bands)
    throw ShapeError("discriminator: patch shape " + patch.shape_str() + ", expected (" +
                     std::to_string(patch_size) + "," + std::to_string(patch_size) + "," +
                     std::to_string(bands) + ")");
  return bands_as_channels ? patch.reshaped({patch_size, patch_size, 1, bands})
                           : patch.reshaped({patch_size, patch_size, bands, 1});
}

Tensor Discriminator::logits(const Tensor& patch) const {
  Tensor x = patch_input(patch);
  for (const auto& def : layers) x = conv_layer_pure(x, params, def, lrelu_slope);
  Tensor feat = pool == Pool::GlobalAvg ? global_avg_pool(x) : center_spectral_pool(x);
  return dense(feat, params[head_w_idx], params[head_b_idx]);
}

Tensor Discriminator::pooled_features(const Tensor& patch) const {
  Tensor x = patch_input(patch);
  for (const auto& def : layers) x = conv_layer_pure(x, params, def, lrelu_slope);
  return pool == Pool::GlobalAvg ? global_avg_pool(x) : center_spectral_pool(x);
}

Discriminator::TapeIds Discriminator::register_params(Tape& tape, bool trainable) const {
  TapeIds ids;
  ids.param_slots.reserve(static_cast<std::size_t>(params.size()));
  for (int i = 0; i < params.size(); ++i) {
    ids.param_slots.push_back(trainable ? tape.param(i, params[i]) : tape.input(params[i]));
  }
  return ids;
}

Discriminator::TapeOut Discriminator::forward(Tape& tape, int input_id, const TapeIds& ids) const {
  int x = input_id;
  for (const auto& def : layers) x = conv_layer_tape(tape, x, def, ids, lrelu_slope);
  const int feat = pool == Pool::GlobalAvg ? tape.global_pool(x) : tape.center_pool(x);
  const int head_w = ids.param_slots[static_cast<std::size_t>(head_w_idx)];
  const int head_b = ids.param_slots[static_cast<std::size_t>(head_b_idx)];
  TapeOut out;
  out.features = feat;
  out.logits = tape.dense_op(feat, head_w, head_b);
  return out;
}

Discriminator build_discriminator(Variant variant, int num_classes, int patch_size, int bands,
                                  Rng& init_rng, double lrelu_slope) {
  if (num_classes < 1) throw ParamError("build_discriminator: need K >= 1");
  if (patch_size < 1 || patch_size % 2 == 0)
    throw ParamError("build_discriminator: patch size must be odd and positive");

  Discriminator d;
  d.variant = variant;
  d.num_classes = num_classes;
  d.patch_size = patch_size;
  d.bands = bands;
  d.lrelu_slope = lrelu_slope;

  const bool spectral_stack = variant == Variant::SS || variant == Variant::SPC || variant == Variant::CONV;
  if (spectral_stack && bands < 4)
    throw ShapeError("build_discriminator: layer " + variant_to_string(variant) +
                     "/spectral1 needs >= 4 bands, got " + std::to_string(bands));
  if ((variant == Variant::SS || variant == Variant::SPA || variant == Variant::CONV) &&
      patch_size < 3)
    throw ShapeError("build_discriminator: layer " + variant_to_string(variant) +
                     "/spatial1 needs patch size >= 3, got " + std::to_string(patch_size));

  int feat_dim = 0;
  switch (variant) {
    case Variant::SS:
      d.layers.push_back(add_conv_layer(d.params, init_rng, "disc.spectral1", 1, 1, 7, 1, 32,
                                        {1, 1, 2}, Act::Lrelu, ConvLayerParams::Mode::Conv));
      d.layers.push_back(add_conv_layer(d.params, init_rng, "disc.spectral2", 1, 1, 7, 32, 32,
                                        {1, 1, 2}, Act::Lrelu, ConvLayerParams::Mode::Conv));
      d.layers.push_back(add_conv_layer(d.params, init_rng, "disc.spatial1", 3, 3, 1, 32, 64,
                                        {1, 1, 1}, Act::Lrelu, ConvLayerParams::Mode::Conv));
      d.layers.push_back(add_conv_layer(d.params, init_rng, "disc.spatial2", 3, 3, 1, 64, 64,
                                        {1, 1, 1}, Act::Lrelu, ConvLayerParams::Mode::Conv));
      d.pool = Discriminator::Pool::GlobalAvg;
      feat_dim = 64;
      break;
    case Variant::SPC:
      d.layers.push_back(add_conv_layer(d.params, init_rng, "disc.spectral1", 1, 1, 7, 1, 32,
                                        {1, 1, 2}, Act::Lrelu, ConvLayerParams::Mode::Conv));
      d.layers.push_back(add_conv_layer(d.params, init_rng, "disc.spectral2", 1, 1, 7, 32, 32,
                                        {1, 1, 2}, Act::Lrelu, ConvLayerParams::Mode::Conv));
      // Center pooling keeps SPC blind to spatial neighbors: 1x1 kernels
      // never mix positions and only the center column is read out.
      d.pool = Discriminator::Pool::CenterSpectralAvg;
      feat_dim = 32;
      break;
    case Variant::SPA:
      d.bands_as_channels = true;
      d.layers.push_back(add_conv_layer(d.params, init_rng, "disc.collapse", 1, 1, 1, bands, 32,
                                        {1, 1, 1}, Act::Lrelu, ConvLayerParams::Mode::Conv));
      d.layers.push_back(add_conv_layer(d.params, init_rng, "disc.spatial1", 3, 3, 1, 32, 64,
                                        {1, 1, 1}, Act::Lrelu, ConvLayerParams::Mode::Conv));
      d.layers.push_back(add_conv_layer(d.params, init_rng, "disc.spatial2", 3, 3, 1, 64, 64,
                                        {1, 1, 1}, Act::Lrelu, ConvLayerParams::Mode::Conv));
      d.pool = Discriminator::Pool::GlobalAvg;
      feat_dim = 64;
      break;
    case Variant::CONV:
      d.layers.push_back(add_conv_layer(d.params, init_rng, "disc.conv1", 3, 3, 7, 1, 32,
                                        {1, 1, 2}, Act::Lrelu, ConvLayerParams::Mode::Conv));
      d.layers.push_back(add_conv_layer(d.params, init_rng, "disc.conv2", 3, 3, 7, 32, 64,
                                        {1, 1, 2}, Act::Lrelu, ConvLayerParams::Mode::Conv));
      d.pool = Discriminator::Pool::GlobalAvg;
      feat_dim = 64;
      break;
  }
  d.feature_layer_index = static_cast<int>(d.layers.size());
  d.head_w_idx = d.params.add("disc.head.weight",
                              init_head(init_rng, {feat_dim, num_classes + 1}, feat_dim));
  d.head_b_idx = d.params.add("disc.head.bias", Tensor({num_classes + 1}));
  return d;
}

Tensor Generator::synth(const Tensor& noise) const {
  if (noise.numel() != noise_dim)
    throw ShapeError("generator: noise length " + std::to_string(noise.numel()) + " != " +
                     std::to_string(noise_dim));
  Tensor x = dense(noise, params[seed_w_idx], params[seed_b_idx]);
  apply_activation(x, Act::Relu, 0.0);
  x = x.reshaped(seed_shape);
  for (const auto& def : layers) x = conv_layer_pure(x, params, def, 0.2);
  return x.reshaped({patch_size, patch_size, bands});
}

Discriminator::TapeIds Generator::register_params(Tape& tape, bool trainable) const {
  Discriminator::TapeIds ids;
  ids.param_slots.reserve(static_cast<std::size_t>(params.size()));
  for (int i = 0; i < params.size(); ++i) {
    ids.param_slots.push_back(trainable ? tape.param(i, params[i]) : tape.input(params[i]));
  }
  return ids;
}

int Generator::forward(Tape& tape, int noise_id, const Discriminator::TapeIds& ids) const {
  const int w = ids.param_slots[static_cast<std::size_t>(seed_w_idx)];
  const int b = ids.param_slots[static_cast<std::size_t>(seed_b_idx)];
  int x = tape.dense_op(noise_id, w, b);
  x = tape.activation(x, Act::Relu);
  x = tape.reshape(x, seed_shape);
  for (const auto& def : layers) x = conv_layer_tape(tape, x, def, ids, 0.2);
  return tape.reshape(x, {patch_size, patch_size, bands, 1});
}

Generator build_generator(int noise_dim, int patch_size, int bands, Rng& init_rng) {
  if (noise_dim < 1) throw ParamError("build_generator: need noise_dim >= 1");
  if (patch_size != 9)
    throw ParamError("build_generator: the transposed stack is laid out for 9x9 patches, got " +
                     std::to_string(patch_size));
  if (bands % 4 != 0 || bands < 4)
    throw ParamError("build_generator: bands must be a positive multiple of 4, got " +
                     std::to_string(bands));

  Generator g;
  g.noise_dim = noise_dim;
  g.patch_size = patch_size;
  g.bands = bands;
  g.seed_shape = {3, 3, bands / 4, 64};

  const int seed_n = 3 * 3 * (bands / 4) * 64;
  g.seed_w_idx = g.params.add("gen.seed.weight",
                              init_kernel(init_rng, {noise_dim, seed_n}, noise_dim));
  g.seed_b_idx = g.params.add("gen.seed.bias", Tensor({seed_n}));
  // Transposed layers mirror the discriminator's spectral strides: spatial
  // x3 then x1, spectral x2 twice, landing exactly on (9, 9, B).
  g.layers.push_back(add_conv_layer(g.params, init_rng, "gen.deconv1", 3, 3, 7, 32, 64, {3, 3, 2},
                                    Act::Relu, ConvLayerParams::Mode::Transposed));
  g.layers.push_back(add_conv_layer(g.params, init_rng, "gen.deconv2", 3, 3, 7, 1, 32, {1, 1, 2},
                                    Act::Tanh, ConvLayerParams::Mode::Transposed));
  return g;
}

namespace {

void check_split_for_training(const DatasetSplit& split, int num_classes) {
  if (split.train.empty()) throw DataError("train: split has no labeled training pixels");
  std::vector<bool> in_train(static_cast<std::size_t>(num_classes) + 1, false);
  std::vector<bool> present(static_cast<std::size_t>(num_classes) + 1, false);
  for (const auto& [idx, label] : split.train) {
    if (label < 1 || label > num_classes) throw DataError("train: split label out of range");
    in_train[static_cast<std::size_t>(label)] = true;
    present[static_cast<std::size_t>(label)] = true;
  }
  for (const auto& [idx, label] : split.test) present[static_cast<std::size_t>(label)] = true;
  for (int c = 1; c <= num_classes; ++c) {
    if (present[static_cast<std::size_t>(c)] && !in_train[static_cast<std::size_t>(c)])
      throw DataError("train: class " + std::to_string(c) + " present but has no training sample");
  }
}

Tensor noise_vector(Rng& rng, int dim) {
  Tensor z({dim});
  for (int i = 0; i < dim; ++i) z[i] = rng.normal();
  return z;
}

}  // namespace

TrainResult train(const HyperCube& cube, const DatasetSplit& split, int num_classes,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
  if (cfg.batch_size < 2) throw ParamError("train: batch_size must be >= 2");
  if (cfg.labeled_fraction <= 0.0 || cfg.labeled_fraction >= 1.0)
    throw ParamError("train: labeled_fraction must be in (0,1)");
  if (cfg.epochs < 0) throw ParamError("train: epochs must be >= 0");
  check_split_for_training(split, num_classes);

  Rng master(cfg.seed);
  Rng init_rng = master.fork(1);
  Rng shuffle_rng = master.fork(2);
  Rng pool_rng = master.fork(3);
  Rng noise_rng = master.fork(4);

  TrainResult result;
  result.disc = build_discriminator(cfg.variant, num_classes, cfg.patch_size, cube.bands,
                                    init_rng, cfg.lrelu_slope);
  result.gen = build_generator(cfg.noise_dim, cfg.patch_size, cube.bands, init_rng);
  Discriminator& disc = result.disc;
  Generator& gen = result.gen;

  const int n_lab = std::max(1, static_cast<int>(std::lround(cfg.batch_size * cfg.labeled_fraction)));
  const int n_unl = std::max(1, cfg.batch_size - n_lab);
  const int n_gen = n_unl;

  // The unsupervised-real pool is every pixel of the scene; unlabeled data
  // needs no ground truth.
  const std::int64_t n_pixels = cube.pixel_count();

  std::vector<std::pair<std::int64_t, int>> labeled = split.train;
  const int steps_per_epoch =
      static_cast<int>((labeled.size() + static_cast<std::size_t>(n_lab) - 1) /
                       static_cast<std::size_t>(n_lab));

  Adam opt_disc(cfg.adam);
  Adam opt_gen(cfg.adam);

  auto patch_at = [&](std::int64_t pixel) {
    const int r = static_cast<int>(pixel / cube.width);
    const int c = static_cast<int>(pixel % cube.width);
    return extract_patch(cube, r, c, cfg.patch_size).data;
  };

  int step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(labeled);
    for (int s = 0; s < steps_per_epoch; ++s, ++step) {
      LossReport report;

      // Generated patches for the discriminator step are constants; the
      // generator is not updated through L3.
      std::vector<Tensor> fake_patches;
      fake_patches.reserve(static_cast<std::size_t>(n_gen));
      for (int i = 0; i < n_gen; ++i)
        fake_patches.push_back(gen.synth(noise_vector(noise_rng, gen.noise_dim)));

      {  // --- discriminator update ---
        Tape tape;
        const auto ids = disc.register_params(tape, true);
        std::vector<int> sup_ids, real_ids, fake_ids;
        for (int i = 0; i < n_lab; ++i) {
          const auto& [pixel, label] = labeled[static_cast<std::size_t>((s * n_lab + i) % static_cast<int>(labeled.size()))];
          const int in = tape.input(disc.patch_input(patch_at(pixel)));
          sup_ids.push_back(tape.loss_supervised_op(disc.forward(tape, in, ids).logits, label,
                                                    num_classes));
        }
        for (int i = 0; i < n_unl; ++i) {
          const std::int64_t pixel = static_cast<std::int64_t>(pool_rng.uniform_index(
              static_cast<std::uint64_t>(n_pixels)));
          const int in = tape.input(disc.patch_input(patch_at(pixel)));
          real_ids.push_back(tape.loss_unsup_real_op(disc.forward(tape, in, ids).logits,
                                                     num_classes));
        }
        for (const Tensor& fp : fake_patches) {
          const int in = tape.input(disc.patch_input(fp));
          fake_ids.push_back(tape.loss_unsup_fake_op(disc.forward(tape, in, ids).logits,
                                                     num_classes));
        }
        const int l1 = tape.mean_scalars(sup_ids);
        const int l2 = tape.mean_scalars(real_ids);
        const int l3 = tape.mean_scalars(fake_ids);
        const int total = tape.sum_scalars({l1, l2, l3});
        report.l1 = tape.value(l1)[0];
        report.l2 = tape.value(l2)[0];
        report.l3 = tape.value(l3)[0];
        report.total = tape.value(total)[0];
        if (!std::isfinite(report.total))
          throw NumericError("train: non-finite discriminator loss at step " + std::to_string(step));
        tape.backward(total);
        std::vector<const Tensor*> grads;
        for (int i = 0; i < disc.params.size(); ++i)
          grads.push_back(tape.grad_for_key(i));
        opt_disc.step(disc.params, grads);
      }

      {  // --- generator update ---
        Tape tape;
        const auto disc_ids = disc.register_params(tape, false);
        const auto gen_ids = gen.register_params(tape, true);
        std::vector<int> fake_feat_ids, fake_loss_ids;
        for (int i = 0; i < n_gen; ++i) {
          const int z = tape.input(noise_vector(noise_rng, gen.noise_dim));
          const int patch = gen.forward(tape, z, gen_ids);
          const auto out = disc.forward(tape, patch, disc_ids);
          fake_feat_ids.push_back(out.features);
          fake_loss_ids.push_back(tape.loss_unsup_real_op(out.logits, num_classes));
        }

        // Mean feature of a fresh real batch, with the just-updated
        // discriminator; constant w.r.t. the generator.
        Tensor real_mean;
        {
          Tensor acc;
          for (int i = 0; i < n_unl; ++i) {
            const std::int64_t pixel = static_cast<std::int64_t>(pool_rng.uniform_index(
                static_cast<std::uint64_t>(n_pixels)));
            Tensor f = disc.pooled_features(patch_at(pixel));
            if (acc.numel() == 0) {
              acc = std::move(f);
            } else {
              for (std::int64_t j = 0; j < acc.numel(); ++j) acc[j] += f[j];
            }
          }
          for (std::int64_t j = 0; j < acc.numel(); ++j) acc[j] /= n_unl;
          real_mean = std::move(acc);
        }

        const int fm = tape.squared_distance(tape.mean_tensors(fake_feat_ids),
                                             tape.input(real_mean));
        report.feature_match = tape.value(fm)[0];
        const int objective = cfg.gen_objective == TrainConfig::GenObjective::FeatureMatching
                                  ? fm
                                  : tape.mean_scalars(fake_loss_ids);
        if (!std::isfinite(tape.value(objective)[0]))
          throw NumericError("train: non-finite generator loss at step " + std::to_string(step));
        tape.backward(objective);
        std::vector<const Tensor*> grads;
        for (int i = 0; i < gen.params.size(); ++i)
          grads.push_back(tape.grad_for_key(i));
        opt_gen.step(gen.params, grads);
      }

      result.log.push_back(report);
    }
    if (on_epoch) on_epoch(epoch, disc, gen);
  }
  return result;
}

ProbabilityMap predict_map(const Discriminator& disc, const HyperCube& cube) {
  ProbabilityMap probs(cube.height, cube.width, disc.num_classes);
  const int k = disc.num_classes;
  parallel_for(cube.pixel_count(), [&](std::int64_t pixel) {
    const int r = static_cast<int>(pixel / cube.width);
    const int c = static_cast<int>(pixel % cube.width);
    const Tensor patch = extract_patch(cube, r, c, disc.patch_size).data;
    const Tensor logits = disc.logits(patch);
    // Condition on "not generated": renormalize over the K real classes.
    Tensor real_logits({k});
    for (int i = 0; i < k; ++i) real_logits[i] = logits[i];
    const Tensor p = softmax(real_logits);
    double* row = probs.row(pixel);
    for (int i = 0; i < k; ++i) row[i] = p[i];
  });
  return probs;
}

void write_train_log_csv(const std::vector<LossReport>& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("write_train_log_csv: cannot open " + path + " for writing");
  out << "step,l1,l2,l3,total,feature_match\n";
  char buf[256];
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto& r = log[i];
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", i, r.l1, r.l2, r.l3,
                  r.total, r.feature_match);
    out << buf;
  }
  if (!out) throw DataError("write_train_log_csv: write failed for " + path);
}

}  // namespace hsigan
