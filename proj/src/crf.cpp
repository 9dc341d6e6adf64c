#include "hsigan/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hsigan/errors.hpp"
#include "hsigan/parallel.hpp"
#include "hsigan/rng.hpp"

namespace hsigan {

void CrfParams::validate(int num_classes) const {
  if (w1 < 0.0 || w2 < 0.0) throw ParamError("crf: kernel weights must be >= 0");
  if (theta_alpha <= 0.0 || theta_beta <= 0.0 || theta_gamma <= 0.0)
    throw ParamError("crf: bandwidths must be > 0");
  if (iterations < 0) throw ParamError("crf: iterations must be >= 0");
  if (unary_floor <= 0.0 || unary_floor > 1e-2)
    throw ParamError("crf: unary floor must be in (0, 1e-2]");
  if (!compat.empty()) {
    const std::size_t k = static_cast<std::size_t>(num_classes);
    if (compat.size() != k * k) throw ShapeError("crf: compatibility matrix must be K x K");
    for (int a = 0; a < num_classes; ++a) {
      if (compat[static_cast<std::size_t>(a) * k + static_cast<std::size_t>(a)] != 0.0)
        throw ParamError("crf: compatibility diagonal must be zero");
      for (int b = 0; b < num_classes; ++b) {
        if (compat[static_cast<std::size_t>(a) * k + static_cast<std::size_t>(b)] !=
            compat[static_cast<std::size_t>(b) * k + static_cast<std::size_t>(a)])
          throw ParamError("crf: compatibility matrix must be symmetric");
      }
    }
  }
}

double CrfParams::mu(int la, int lb, int num_classes) const {
  if (compat.empty()) return la == lb ? 0.0 : 1.0;
  return compat[static_cast<std::size_t>(la) * static_cast<std::size_t>(num_classes) +
                static_cast<std::size_t>(lb)];
}

PixelFeature FeatureField::feature(std::int64_t pixel) const {
  PixelFeature f;
  f.row = static_cast<double>(pixel / width);
  f.col = static_cast<double>(pixel % width);
  f.intensity.assign(row(pixel), row(pixel) + dim);
  return f;
}

namespace {

// Shared by the PixelFeature-level API and the bulk inference loops.
inline double gauss_spatial(double dr, double dc, double theta) {
  return std::exp(-(dr * dr + dc * dc) / (2.0 * theta * theta));
}

inline double spectral_sq_dist(const double* a, const double* b, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

FeatureField features_from_cube(const HyperCube& cube, int max_direct_bands, int pca_components) {
  FeatureField field;
  field.height = cube.height;
  field.width = cube.width;
  const std::int64_t n = cube.pixel_count();

  if (cube.bands <= max_direct_bands) {
    field.dim = cube.bands;
    field.intensity.resize(static_cast<std::size_t>(n * cube.bands));
    for (std::size_t i = 0; i < field.intensity.size(); ++i)
      field.intensity[i] = static_cast<double>(cube.values[i]);
    return field;
  }

  // Reduce O(B) spectral distances to a handful of principal components.
  const int B = cube.bands;
  const int comps = std::min(pca_components, B);
  std::vector<double> mean(static_cast<std::size_t>(B), 0.0);
  for (std::int64_t p = 0; p < n; ++p) {
    const float* v = cube.pixel(p);
    for (int b = 0; b < B; ++b) mean[static_cast<std::size_t>(b)] += v[b];
  }
  for (auto& m : mean) m /= static_cast<double>(n);

  std::vector<double> cov(static_cast<std::size_t>(B) * B, 0.0);
  for (std::int64_t p = 0; p < n; ++p) {
    const float* v = cube.pixel(p);
    for (int a = 0; a < B; ++a) {
      const double da = v[a] - mean[static_cast<std::size_t>(a)];
      for (int b = a; b < B; ++b) {
        cov[static_cast<std::size_t>(a) * B + b] += da * (v[b] - mean[static_cast<std::size_t>(b)]);
      }
    }
  }
  for (int a = 0; a < B; ++a)
    for (int b = a; b < B; ++b) {
      const double c = cov[static_cast<std::size_t>(a) * B + b] / static_cast<double>(n);
      cov[static_cast<std::size_t>(a) * B + b] = c;
      cov[static_cast<std::size_t>(b) * B + a] = c;
    }

  // Power iteration with deflation; fixed 300 rounds keeps it deterministic.
  std::vector<std::vector<double>> pcs;
  Rng rng(0x9c5fu);
  for (int k = 0; k < comps; ++k) {
    std::vector<double> v(static_cast<std::size_t>(B));
    for (auto& x : v) x = rng.normal();
    for (int it = 0; it < 300; ++it) {
      std::vector<double> w(static_cast<std::size_t>(B), 0.0);
      for (int a = 0; a < B; ++a) {
        double s = 0.0;
        for (int b = 0; b < B; ++b) s += cov[static_cast<std::size_t>(a) * B + b] * v[static_cast<std::size_t>(b)];
        w[static_cast<std::size_t>(a)] = s;
      }
      double norm = 0.0;
      for (double x : w) norm += x * x;
      norm = std::sqrt(norm);
      if (norm < 1e-30) break;  // zero-variance leftover
      for (int a = 0; a < B; ++a) v[static_cast<std::size_t>(a)] = w[static_cast<std::size_t>(a)] / norm;
    }
    double lambda = 0.0;
    for (int a = 0; a < B; ++a) {
      double s = 0.0;
      for (int b = 0; b < B; ++b) s += cov[static_cast<std::size_t>(a) * B + b] * v[static_cast<std::size_t>(b)];
      lambda += v[static_cast<std::size_t>(a)] * s;
    }
    for (int a = 0; a < B; ++a)
      for (int b = 0; b < B; ++b)
        cov[static_cast<std::size_t>(a) * B + b] -= lambda * v[static_cast<std::size_t>(a)] * v[static_cast<std::size_t>(b)];
    pcs.push_back(std::move(v));
  }

  field.dim = comps;
  field.intensity.resize(static_cast<std::size_t>(n * comps));
  for (std::int64_t p = 0; p < n; ++p) {
    const float* v = cube.pixel(p);
    for (int k = 0; k < comps; ++k) {
      double s = 0.0;
      for (int b = 0; b < B; ++b)
        s += (v[b] - mean[static_cast<std::size_t>(b)]) * pcs[static_cast<std::size_t>(k)][static_cast<std::size_t>(b)];
      field.intensity[static_cast<std::size_t>(p * comps + k)] = s;
    }
  }
  return field;
}

UnaryCosts unary_from_probs(const ProbabilityMap& probs, double floor) {
  if (floor <= 0.0 || floor > 1e-2) throw ParamError("unary_from_probs: floor must be in (0, 1e-2]");
  UnaryCosts u;
  u.height = probs.height;
  u.width = probs.width;
  u.num_classes = probs.num_classes;
  u.u.resize(probs.q.size());
  for (std::size_t i = 0; i < probs.q.size(); ++i)
    u.u[i] = -std::log(std::max(probs.q[i], floor));
  return u;
}

double kernel_f1(const PixelFeature& a, const PixelFeature& b, double theta_alpha,
                 double theta_beta) {
  if (theta_alpha <= 0.0 || theta_beta <= 0.0) throw ParamError("kernel_f1: bandwidths must be > 0");
  if (a.intensity.size() != b.intensity.size())
    throw ShapeError("kernel_f1: feature dimension mismatch");
  const double spatial = (a.row - b.row) * (a.row - b.row) + (a.col - b.col) * (a.col - b.col);
  const double spectral =
      spectral_sq_dist(a.intensity.data(), b.intensity.data(), static_cast<int>(a.intensity.size()));
  return std::exp(-spatial / (2.0 * theta_alpha * theta_alpha) -
                  spectral / (2.0 * theta_beta * theta_beta));
}

double kernel_f2(const PixelFeature& a, const PixelFeature& b, double theta_gamma) {
  if (theta_gamma <= 0.0) throw ParamError("kernel_f2: bandwidth must be > 0");
  return gauss_spatial(a.row - b.row, a.col - b.col, theta_gamma);
}

double pairwise_potential(const PixelFeature& a, const PixelFeature& b, int la, int lb,
                          const CrfParams& params, int num_classes) {
  if (la < 0 || lb < 0 || la >= num_classes || lb >= num_classes)
    throw ParamError("pairwise_potential: labels must be 0-based and < K");
  return params.mu(la, lb, num_classes) *
         (params.w1 * kernel_f1(a, b, params.theta_alpha, params.theta_beta) +
          params.w2 * kernel_f2(a, b, params.theta_gamma));
}

double energy(const LabelMap& labels, const FeatureField& features, const UnaryCosts& unary,
              const CrfParams& params) {
  if (labels.height != unary.height || labels.width != unary.width)
    throw ShapeError("energy: label/unary dimension mismatch");
  const int k = unary.num_classes;
  params.validate(k);
  const std::int64_t n = labels.pixel_count();

  double e = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const int li = labels.labels[static_cast<std::size_t>(i)];
    if (li < 1 || li > k) throw ParamError("energy: all pixels must be labeled 1..K");
    e += unary.row(i)[li - 1];
  }

  const double inv_2a = 1.0 / (2.0 * params.theta_alpha * params.theta_alpha);
  const double inv_2b = 1.0 / (2.0 * params.theta_beta * params.theta_beta);
  const double inv_2g = 1.0 / (2.0 * params.theta_gamma * params.theta_gamma);
  for (std::int64_t i = 0; i < n; ++i) {
    const int li = labels.labels[static_cast<std::size_t>(i)] - 1;
    const double ri = static_cast<double>(i / labels.width);
    const double ci = static_cast<double>(i % labels.width);
    for (std::int64_t j = i + 1; j < n; ++j) {
      const int lj = labels.labels[static_cast<std::size_t>(j)] - 1;
      const double m = params.mu(li, lj, k);
      if (m == 0.0) continue;
      const double dr = ri - static_cast<double>(j / labels.width);
      const double dc = ci - static_cast<double>(j % labels.width);
      const double spatial = dr * dr + dc * dc;
      const double spectral = spectral_sq_dist(features.row(i), features.row(j), features.dim);
      const double f1 = std::exp(-spatial * inv_2a - spectral * inv_2b);
      const double f2 = std::exp(-spatial * inv_2g);
      e += m * (params.w1 * f1 + params.w2 * f2);
    }
  }
  return e;
}

ProbabilityMap mean_field_infer(const ProbabilityMap& probs, const FeatureField& features,
                                const CrfParams& params, std::vector<double>* residuals) {
  const int k = probs.num_classes;
  params.validate(k);
  if (features.height != probs.height || features.width != probs.width)
    throw ShapeError("mean_field_infer: feature/probability dimension mismatch");
  if (residuals) residuals->clear();
  if (params.iterations == 0) return probs;

  const std::int64_t n = probs.pixel_count();
  const UnaryCosts unary = unary_from_probs(probs, params.unary_floor);

  const double inv_2a = 1.0 / (2.0 * params.theta_alpha * params.theta_alpha);
  const double inv_2b = 1.0 / (2.0 * params.theta_beta * params.theta_beta);
  const double inv_2g = 1.0 / (2.0 * params.theta_gamma * params.theta_gamma);

  ProbabilityMap q = probs;
  ProbabilityMap q_next(probs.height, probs.width, k);
  std::vector<double> iter_residual(static_cast<std::size_t>(n));

  for (int it = 0; it < params.iterations; ++it) {
    parallel_for(n, [&](std::int64_t i) {
      const double ri = static_cast<double>(i / probs.width);
      const double ci = static_cast<double>(i % probs.width);
      const double* fi = features.row(i);

      // Kernel-weighted class mass from every other pixel.
      std::vector<double> s(static_cast<std::size_t>(k), 0.0);
      for (std::int64_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double dr = ri - static_cast<double>(j / probs.width);
        const double dc = ci - static_cast<double>(j % probs.width);
        const double spatial = dr * dr + dc * dc;
        const double spectral = spectral_sq_dist(fi, features.row(j), features.dim);
        const double w = params.w1 * std::exp(-spatial * inv_2a - spectral * inv_2b) +
                         params.w2 * std::exp(-spatial * inv_2g);
        const double* qj = q.row(j);
        for (int l = 0; l < k; ++l) s[static_cast<std::size_t>(l)] += w * qj[l];
      }

      double* out = q_next.row(i);
      const double* ui = unary.row(i);
      double best = -std::numeric_limits<double>::infinity();
      for (int l = 0; l < k; ++l) {
        double msg = 0.0;
        for (int lp = 0; lp < k; ++lp) msg += params.mu(l, lp, k) * s[static_cast<std::size_t>(lp)];
        out[l] = -ui[l] - msg;
        best = std::max(best, out[l]);
      }
      double z = 0.0;
      for (int l = 0; l < k; ++l) {
        out[l] = std::exp(out[l] - best);
        z += out[l];
      }
      double res = 0.0;
      const double* qi = q.row(i);
      for (int l = 0; l < k; ++l) {
        out[l] /= z;
        res = std::max(res, std::abs(out[l] - qi[l]));
      }
      iter_residual[static_cast<std::size_t>(i)] = res;
    });
    std::swap(q.q, q_next.q);
    if (residuals) {
      double r = 0.0;
      for (std::int64_t i = 0; i < n; ++i) r = std::max(r, iter_residual[static_cast<std::size_t>(i)]);
      residuals->push_back(r);
    }
  }
  return q;
}

}  // namespace hsigan
