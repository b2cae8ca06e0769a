#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <string>

#include "dare/dataio.hpp"
#include "dare/error.hpp"
#include "dare/random.hpp"

namespace dare {
namespace {

constexpr std::size_t kGrid = 4;
constexpr std::size_t kCellsPerClass = 4;

double quantize8(double v) { return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0; }

double distance(const Vector1& a, const Vector1& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(sum);
}

}  // namespace

SynthFeatures synth_features(const SynthFeatureSpec& spec) {
  if (!(spec.margin > 0.0)) fail(ErrorCode::ContractViolation, "synthetic margin must be positive");
  if (spec.classes == 0 || spec.classes > kClassCount || spec.dim == 0) {
    fail(ErrorCode::ContractViolation, "synthetic dataset needs 1..20 classes and dim >= 1");
  }
  Rng rng(spec.seed);
  SynthFeatures out;
  // The cube grows slowly if rejection keeps failing (tiny dims).
  double side = spec.margin;
  std::size_t attempts = 0;
  while (out.centroids.size() < spec.classes) {
    Vector1 c(spec.dim);
    for (Scalar& v : c) v = rng.uniform(0.0, side);
    const bool clear = std::all_of(out.centroids.begin(), out.centroids.end(),
                                   [&](const Vector1& other) { return distance(c, other) >= spec.margin; });
    if (clear) {
      out.centroids.push_back(std::move(c));
      attempts = 0;
    } else if (++attempts == 1000) {
      side *= 1.25;
      attempts = 0;
    }
  }
  out.data.dim = spec.dim;
  out.data.class_count = spec.classes;
  Vector1 row(spec.dim);
  for (std::size_t k = 0; k < spec.classes; ++k) {
    for (std::size_t n = 0; n < spec.per_class; ++n) {
      for (std::size_t d = 0; d < spec.dim; ++d) row[d] = out.centroids[k][d] + spec.noise * rng.normal();
      out.data.push_back(row, k);
    }
  }
  return out;
}

std::vector<StereoImage> synth_images(const SynthImageSpec& spec) {
  if (spec.classes == 0 || spec.classes > kClassCount) {
    fail(ErrorCode::ContractViolation, "synthetic images need 1..20 classes");
  }
  if (spec.side < 2 * kGrid) fail(ErrorCode::ContractViolation, "synthetic images need side >= 8");
  Rng rng(spec.seed);

  struct Pattern {
    std::set<std::size_t> cells;
    double rgb[3];
  };
  std::vector<Pattern> patterns;
  std::set<std::set<std::size_t>> used;
  while (patterns.size() < spec.classes) {
    Pattern p;
    while (p.cells.size() < kCellsPerClass) p.cells.insert(rng.below(kGrid * kGrid));
    for (double& c : p.rgb) c = rng.uniform(0.4, 1.0);
    if (used.insert(p.cells).second) patterns.push_back(std::move(p));
  }

  const std::size_t cell = spec.side / kGrid;
  std::vector<StereoImage> pairs;
  for (std::size_t k = 0; k < spec.classes; ++k) {
    for (std::size_t n = 0; n < spec.per_class; ++n) {
      Image left{spec.side, spec.side, std::vector<Scalar>(spec.side * spec.side * 3)};
      for (std::size_t r = 0; r < spec.side; ++r) {
        for (std::size_t c = 0; c < spec.side; ++c) {
          const std::size_t gr = std::min(r / cell, kGrid - 1);
          const std::size_t gc = std::min(c / cell, kGrid - 1);
          const bool inset = r % cell != 0 && c % cell != 0;
          const bool lit = inset && patterns[k].cells.count(gr * kGrid + gc) > 0;
          for (std::size_t ch = 0; ch < 3; ++ch) {
            const double base = lit ? patterns[k].rgb[ch] : 0.1;
            left(r, c, ch) = quantize8(base + rng.uniform(-spec.noise, spec.noise));
          }
        }
      }
      Image right = left;
      for (std::size_t r = 0; r < spec.side; ++r) {
        for (std::size_t c = 0; c < spec.side; ++c) {
          for (std::size_t ch = 0; ch < 3; ++ch) right(r, c, ch) = left(r, (c + 1) % spec.side, ch);
        }
      }
      pairs.push_back({std::move(left), std::move(right), k});
    }
  }
  return pairs;
}

Manifest write_image_dataset(const std::vector<StereoImage>& pairs, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "images");
  Manifest manifest;
  char name[32];
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    std::snprintf(name, sizeof(name), "%06zu", i);
    StereoSample s{dir / "images" / (std::string(name) + "_L.ppm"), dir / "images" / (std::string(name) + "_R.ppm"),
                   pairs[i].label, "synthetic"};
    encode_ppm(pairs[i].left, s.left);
    encode_ppm(pairs[i].right, s.right);
    manifest.samples.push_back(std::move(s));
  }
  write_manifest(manifest, dir / "manifest.csv");
  return manifest;
}

}  // namespace dare
