#include "hsigan/hsi_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "hsigan/errors.hpp"
#include "hsigan/rng.hpp"

namespace hsigan {

namespace {

// f32 <-> little-endian bytes. Host is assumed little-endian (checked once).
bool host_is_little_endian() {
  const std::uint32_t probe = 1;
  return *reinterpret_cast<const unsigned char*>(&probe) == 1;
}

void write_f32_le(std::ostream& out, const float* src, std::size_t n) {
  static const bool le = host_is_little_endian();
  if (le) {
    out.write(reinterpret_cast<const char*>(src), static_cast<std::streamsize>(n * 4));
    return;
  }
  for (std::size_t i = 0; i < n; ++i) {
    unsigned char b[4];
    std::memcpy(b, &src[i], 4);
    std::swap(b[0], b[3]);
    std::swap(b[1], b[2]);
    out.write(reinterpret_cast<const char*>(b), 4);
  }
}

void read_f32_le(std::istream& in, float* dst, std::size_t n) {
  static const bool le = host_is_little_endian();
  in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n * 4));
  if (!le) {
    for (std::size_t i = 0; i < n; ++i) {
      unsigned char b[4];
      std::memcpy(b, &dst[i], 4);
      std::swap(b[0], b[3]);
      std::swap(b[1], b[2]);
      std::memcpy(&dst[i], b, 4);
    }
  }
}

}  // namespace

void HyperCube::recompute_band_range() {
  band_range.assign(static_cast<std::size_t>(bands),
                    {std::numeric_limits<float>::max(), std::numeric_limits<float>::lowest()});
  for (std::int64_t p = 0; p < pixel_count(); ++p) {
    const float* v = values.data() + p * bands;
    for (int b = 0; b < bands; ++b) {
      auto& r = band_range[static_cast<std::size_t>(b)];
      r.first = std::min(r.first, v[b]);
      r.second = std::max(r.second, v[b]);
    }
  }
}

HyperCube load_cube(const std::string& path, CubeFormat format) {
  if (format != CubeFormat::HsiRawV1) throw ParamError("load_cube: unknown format");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("load_cube: cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw DataError("load_cube: empty file " + path);
  std::istringstream hdr(line);
  std::string magic;
  long h = 0, w = 0, b = 0;
  if (!(hdr >> magic >> h >> w >> b) || magic != "HSI1" || h < 1 || w < 1 || b < 1) {
    throw DataError("load_cube: malformed hsi-raw-v1 header in " + path + ": \"" + line + "\"");
  }
  std::string trailing;
  if (hdr >> trailing) throw DataError("load_cube: trailing tokens in header of " + path);

  HyperCube cube;
  cube.height = static_cast<int>(h);
  cube.width = static_cast<int>(w);
  cube.bands = static_cast<int>(b);
  const std::int64_t n = static_cast<std::int64_t>(h) * w * b;
  cube.values.resize(static_cast<std::size_t>(n));
  read_f32_le(in, cube.values.data(), static_cast<std::size_t>(n));
  if (in.gcount() != static_cast<std::streamsize>(n * 4)) {
    throw DataError("load_cube: truncated payload in " + path + ", expected " +
                    std::to_string(n) + " floats");
  }
  cube.recompute_band_range();
  return cube;
}

void write_cube(const HyperCube& cube, const std::string& path, CubeFormat format) {
  if (format != CubeFormat::HsiRawV1) throw ParamError("write_cube: unknown format");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("write_cube: cannot open " + path + " for writing");
  out << "HSI1 " << cube.height << " " << cube.width << " " << cube.bands << "\n";
  write_f32_le(out, cube.values.data(), cube.values.size());
  if (!out) throw DataError("write_cube: write failed for " + path);
}

LabelMap load_labels_pgm(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("load_labels_pgm: cannot open " + path);
  std::string magic;
  in >> magic;
  if (magic != "P2") throw DataError("load_labels_pgm: expected P2 PGM, got \"" + magic + "\"");

  auto next_int = [&](const char* what) {
    // Skip whitespace and '#' comment lines, then read one integer.
    while (true) {
      const int ch = in.peek();
      if (ch == '#') {
        std::string comment;
        std::getline(in, comment);
      } else if (std::isspace(ch)) {
        in.get();
      } else {
        break;
      }
    }
    long v = 0;
    if (!(in >> v)) throw DataError(std::string("load_labels_pgm: missing ") + what);
    return v;
  };

  const long w = next_int("width");
  const long h = next_int("height");
  const long maxval = next_int("maxval");
  if (w < 1 || h < 1 || maxval < 1) throw DataError("load_labels_pgm: bad dimensions");

  LabelMap lm;
  lm.width = static_cast<int>(w);
  lm.height = static_cast<int>(h);
  lm.num_classes = static_cast<int>(maxval);
  lm.labels.resize(static_cast<std::size_t>(w * h));
  for (auto& v : lm.labels) {
    long x = next_int("pixel value");
    if (x < 0 || x > maxval) throw DataError("load_labels_pgm: pixel value out of range");
    v = static_cast<int>(x);
  }
  return lm;
}

void write_labels_pgm(const LabelMap& labels, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("write_labels_pgm: cannot open " + path + " for writing");
  out << "P2\n" << labels.width << " " << labels.height << "\n"
      << std::max(labels.num_classes, 1) << "\n";
  for (int r = 0; r < labels.height; ++r) {
    for (int c = 0; c < labels.width; ++c) {
      if (c) out << ' ';
      out << labels.at(r, c);
    }
    out << '\n';
  }
  if (!out) throw DataError("write_labels_pgm: write failed for " + path);
}

void write_split_csv(const DatasetSplit& split, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("write_split_csv: cannot open " + path + " for writing");
  out << "pixel_index,label,role\n";
  for (const auto& [idx, label] : split.train) out << idx << ',' << label << ",train\n";
  for (const auto& [idx, label] : split.test) out << idx << ',' << label << ",test\n";
  for (std::int64_t idx : split.unlabeled) out << idx << ",0,unlabeled\n";
  if (!out) throw DataError("write_split_csv: write failed for " + path);
}

DatasetSplit load_split_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("load_split_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "pixel_index,label,role")
    throw DataError("load_split_csv: bad header in " + path);
  DatasetSplit split;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string idx_s, label_s, role;
    if (!std::getline(row, idx_s, ',') || !std::getline(row, label_s, ',') ||
        !std::getline(row, role)) {
      throw DataError("load_split_csv: malformed row \"" + line + "\"");
    }
    const std::int64_t idx = std::stoll(idx_s);
    const int label = std::stoi(label_s);
    if (role == "train") {
      split.train.emplace_back(idx, label);
    } else if (role == "test") {
      split.test.emplace_back(idx, label);
    } else if (role == "unlabeled") {
      split.unlabeled.push_back(idx);
    } else {
      throw DataError("load_split_csv: unknown role \"" + role + "\"");
    }
  }
  return split;
}

HyperCube normalize(const HyperCube& cube, NormalizeMode mode) {
  HyperCube out = cube;
  const std::int64_t npix = cube.pixel_count();
  if (npix == 0 || cube.bands == 0) return out;

  for (int b = 0; b < cube.bands; ++b) {
    if (mode == NormalizeMode::PerBandMinMax) {
      float lo = std::numeric_limits<float>::max();
      float hi = std::numeric_limits<float>::lowest();
      for (std::int64_t p = 0; p < npix; ++p) {
        const float v = cube.values[static_cast<std::size_t>(p * cube.bands + b)];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      const double span = static_cast<double>(hi) - static_cast<double>(lo);
      for (std::int64_t p = 0; p < npix; ++p) {
        auto& v = out.values[static_cast<std::size_t>(p * cube.bands + b)];
        v = span > 0.0 ? static_cast<float>(2.0 * (static_cast<double>(v) - lo) / span - 1.0)
                       : 0.0f;
      }
    } else {
      double mean = 0.0;
      for (std::int64_t p = 0; p < npix; ++p)
        mean += cube.values[static_cast<std::size_t>(p * cube.bands + b)];
      mean /= static_cast<double>(npix);
      double var = 0.0;
      for (std::int64_t p = 0; p < npix; ++p) {
        const double d = cube.values[static_cast<std::size_t>(p * cube.bands + b)] - mean;
        var += d * d;
      }
      var /= static_cast<double>(npix);
      const double inv_std = var > 0.0 ? 1.0 / std::sqrt(var) : 0.0;
      for (std::int64_t p = 0; p < npix; ++p) {
        auto& v = out.values[static_cast<std::size_t>(p * cube.bands + b)];
        v = static_cast<float>((static_cast<double>(v) - mean) * inv_std);
      }
    }
  }
  out.recompute_band_range();
  return out;
}

int mirror_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i = ((i % period) + period) % period;
  return i < n ? i : period - i;
}

Patch extract_patch(const HyperCube& cube, int center_row, int center_col, int size) {
  if (size < 1 || size % 2 == 0)
    throw ParamError("extract_patch: size must be odd and positive, got " + std::to_string(size));
  if (center_row < 0 || center_row >= cube.height || center_col < 0 || center_col >= cube.width)
    throw ParamError("extract_patch: center outside cube");

  Patch patch;
  patch.center_row = center_row;
  patch.center_col = center_col;
  patch.size = size;
  patch.data = Tensor({size, size, cube.bands});
  const int half = size / 2;
  std::int64_t k = 0;
  for (int dr = -half; dr <= half; ++dr) {
    const int r = mirror_index(center_row + dr, cube.height);
    for (int dc = -half; dc <= half; ++dc) {
      const int c = mirror_index(center_col + dc, cube.width);
      const float* v = cube.values.data() + (static_cast<std::int64_t>(r) * cube.width + c) * cube.bands;
      for (int b = 0; b < cube.bands; ++b) patch.data[k++] = static_cast<double>(v[b]);
    }
  }
  return patch;
}

DatasetSplit make_split(const LabelMap& labels, int n_per_class, std::uint64_t seed) {
  if (n_per_class < 1) throw ParamError("make_split: n_per_class must be >= 1");

  DatasetSplit split;
  split.seed = seed;
  Rng rng(seed);

  std::vector<std::vector<std::int64_t>> by_class(static_cast<std::size_t>(labels.num_classes) + 1);
  for (std::int64_t p = 0; p < labels.pixel_count(); ++p) {
    const int label = labels.labels[static_cast<std::size_t>(p)];
    if (label == 0) {
      split.unlabeled.push_back(p);
    } else {
      by_class[static_cast<std::size_t>(label)].push_back(p);
    }
  }

  for (int c = 1; c <= labels.num_classes; ++c) {
    auto& pix = by_class[static_cast<std::size_t>(c)];
    if (pix.empty()) {
      split.warnings.push_back("class " + std::to_string(c) + " has no labeled pixels");
      continue;
    }
    rng.shuffle(pix);
    const std::int64_t count = static_cast<std::int64_t>(pix.size());
    const std::int64_t take = count >= n_per_class ? n_per_class : (count + 1) / 2;
    for (std::int64_t i = 0; i < count; ++i) {
      if (i < take) {
        split.train.emplace_back(pix[static_cast<std::size_t>(i)], c);
      } else {
        split.test.emplace_back(pix[static_cast<std::size_t>(i)], c);
      }
    }
  }
  // Canonical order: pixels ascending within each role. Sampling already
  // happened; ordering is presentation only.
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

std::pair<HyperCube, LabelMap> synth_scene(const SynthSpec& spec) {
  if (spec.classes < 2) throw ParamError("synth_scene: need K >= 2");
  if (spec.bands < 2) throw ParamError("synth_scene: need B >= 2");
  if (spec.height < 1 || spec.width < 1) throw ParamError("synth_scene: empty scene");
  const std::int64_t npix = static_cast<std::int64_t>(spec.height) * spec.width;
  if (npix < spec.classes) throw ParamError("synth_scene: fewer pixels than classes");

  Rng rng(spec.seed);
  Rng site_rng = rng.fork(1);
  Rng sig_rng = rng.fork(2);
  Rng noise_rng = rng.fork(3);

  // Distinct Voronoi sites, one per class.
  std::vector<std::int64_t> all(static_cast<std::size_t>(npix));
  for (std::int64_t i = 0; i < npix; ++i) all[static_cast<std::size_t>(i)] = i;
  site_rng.shuffle(all);
  std::vector<std::pair<int, int>> sites;
  for (int k = 0; k < spec.classes; ++k) {
    const std::int64_t p = all[static_cast<std::size_t>(k)];
    sites.emplace_back(static_cast<int>(p / spec.width), static_cast<int>(p % spec.width));
  }

  LabelMap lm;
  lm.height = spec.height;
  lm.width = spec.width;
  lm.num_classes = spec.classes;
  lm.labels.resize(static_cast<std::size_t>(npix));
  for (int r = 0; r < spec.height; ++r) {
    for (int c = 0; c < spec.width; ++c) {
      std::int64_t best = std::numeric_limits<std::int64_t>::max();
      int best_class = 1;
      for (int k = 0; k < spec.classes; ++k) {
        const std::int64_t dr = r - sites[static_cast<std::size_t>(k)].first;
        const std::int64_t dc = c - sites[static_cast<std::size_t>(k)].second;
        const std::int64_t d2 = dr * dr + dc * dc;
        if (d2 < best) {
          best = d2;
          best_class = k + 1;
        }
      }
      lm.at(r, c) = best_class;
    }
  }

  // Smooth per-class signatures: 3 Gaussian bumps over the band axis. Bump
  // centers are spread per class so signatures stay well separated.
  const int bumps = 3;
  std::vector<std::vector<double>> signature(static_cast<std::size_t>(spec.classes),
                                             std::vector<double>(static_cast<std::size_t>(spec.bands), 0.0));
  for (int k = 0; k < spec.classes; ++k) {
    auto& sig = signature[static_cast<std::size_t>(k)];
    for (int m = 0; m < bumps; ++m) {
      const double amp = sig_rng.uniform(0.4, 1.0);
      const double center = sig_rng.uniform(0.0, static_cast<double>(spec.bands - 1));
      const double width = sig_rng.uniform(0.08, 0.25) * spec.bands;
      for (int b = 0; b < spec.bands; ++b) {
        const double d = (b - center) / width;
        sig[static_cast<std::size_t>(b)] += amp * std::exp(-0.5 * d * d);
      }
    }
  }

  HyperCube cube;
  cube.height = spec.height;
  cube.width = spec.width;
  cube.bands = spec.bands;
  cube.values.resize(static_cast<std::size_t>(npix * spec.bands));
  for (std::int64_t p = 0; p < npix; ++p) {
    const auto& sig = signature[static_cast<std::size_t>(lm.labels[static_cast<std::size_t>(p)] - 1)];
    for (int b = 0; b < spec.bands; ++b) {
      const double noise = spec.noise_sigma > 0.0 ? noise_rng.normal(0.0, spec.noise_sigma) : 0.0;
      cube.values[static_cast<std::size_t>(p * spec.bands + b)] =
          static_cast<float>(sig[static_cast<std::size_t>(b)] + noise);
    }
  }
  cube.recompute_band_range();
  return {std::move(cube), std::move(lm)};
}

}  // namespace hsigan
