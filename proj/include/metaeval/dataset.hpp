#pragma once

// Datasets: IDX ingestion, seeded Gaussian blobs, and ground-truth mask
// construction for the localisation estimators.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <numeric>
#include <tuple>
#include <utility>
#include <string>
#include <vector>

#include "metaeval/error.hpp"
#include "metaeval/rng.hpp"
#include "metaeval/tensor.hpp"

namespace metaeval {

/// Elementwise range and mean of a dataset's inputs. Perturbations and
/// baselines are clipped to / drawn from this range.
struct Bounds {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;

  bool operator==(const Bounds&) const = default;
};

struct Dataset {
  Matrix inputs;            // N x D, values in [0, 1]
  std::vector<int> labels;  // N ground-truth labels
  Bounds bounds;
  std::size_t image_rows = 1;  // image_rows * image_cols == D
  std::size_t image_cols = 0;
  Matrix masks;  // N x D binary, or 0 x 0 when absent

  std::size_t size() const { return inputs.rows; }
  std::size_t dim() const { return inputs.cols; }
  bool has_masks() const { return masks.rows == inputs.rows && masks.rows > 0; }
  int num_classes() const {
    return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  }
};

inline Bounds compute_bounds(const Matrix& inputs) {
  if (inputs.data.empty()) return {};
  const auto [lo, hi] = std::minmax_element(inputs.data.begin(), inputs.data.end());
  const double sum = std::accumulate(inputs.data.begin(), inputs.data.end(), 0.0);
  return {*lo, *hi, sum / static_cast<double>(inputs.data.size())};
}

/// Square image geometry when D is a perfect square, otherwise a 1 x D strip.
inline std::pair<std::size_t, std::size_t> infer_geometry(std::size_t d) {
  const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(d))));
  if (side * side == d && d > 0) return {side, side};
  return {1, d};
}

inline Dataset make_dataset(Matrix inputs, std::vector<int> labels, std::size_t rows = 0,
                            std::size_t cols = 0) {
  if (labels.size() != inputs.rows) {
    throw ShapeError("make_dataset: " + std::to_string(inputs.rows) + " inputs but " +
                     std::to_string(labels.size()) + " labels");
  }
  for (int y : labels) {
    if (y < 0) throw IndexError("make_dataset: negative label");
  }
  Dataset ds;
  if (rows == 0 || cols == 0) std::tie(rows, cols) = infer_geometry(inputs.cols);
  if (rows * cols != inputs.cols) throw ShapeError("make_dataset: image geometry does not match D");
  ds.image_rows = rows;
  ds.image_cols = cols;
  ds.bounds = compute_bounds(inputs);
  ds.inputs = std::move(inputs);
  ds.labels = std::move(labels);
  return ds;
}

/// Seeded subset of `count` samples (without replacement, original order kept).
inline Dataset subset(const Dataset& ds, std::size_t count, std::uint64_t seed) {
  if (count >= ds.size()) return ds;
  std::vector<std::size_t> idx(ds.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  Matrix x(count, ds.dim());
  Matrix m;
  if (ds.has_masks()) m = Matrix(count, ds.dim());
  std::vector<int> y(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::copy_n(ds.inputs.row(idx[i]).begin(), ds.dim(), x.row(i).begin());
    if (ds.has_masks()) std::copy_n(ds.masks.row(idx[i]).begin(), ds.dim(), m.row(i).begin());
    y[i] = ds.labels[idx[i]];
  }
  Dataset out = make_dataset(std::move(x), std::move(y), ds.image_rows, ds.image_cols);
  out.masks = std::move(m);
  return out;
}

namespace idx_detail {

inline std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint32_t be32(const std::vector<std::uint8_t>& bytes, std::size_t offset,
                          const std::string& path) {
  if (offset + 4 > bytes.size()) {
    throw FormatError(path + ": truncated header at byte offset " + std::to_string(offset));
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

}  // namespace idx_detail

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

/// Loads an uncompressed IDX image/label pair. Pixels are flattened row-major
/// and scaled by 1/255.
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  const auto img = idx_detail::read_file(images_path);
  const auto lab = idx_detail::read_file(labels_path);

  const std::uint32_t img_magic = idx_detail::be32(img, 0, images_path);
  if (img_magic != kIdxImagesMagic) {
    throw FormatError(images_path + ": bad image magic at byte offset 0");
  }
  const std::uint32_t lab_magic = idx_detail::be32(lab, 0, labels_path);
  if (lab_magic != kIdxLabelsMagic) {
    throw FormatError(labels_path + ": bad label magic at byte offset 0");
  }
  const std::size_t n = idx_detail::be32(img, 4, images_path);
  const std::size_t rows = idx_detail::be32(img, 8, images_path);
  const std::size_t cols = idx_detail::be32(img, 12, images_path);
  const std::size_t n_labels = idx_detail::be32(lab, 4, labels_path);
  if (n != n_labels) {
    throw FormatError(labels_path + ": item count " + std::to_string(n_labels) +
                      " at byte offset 4 does not match image count " + std::to_string(n));
  }
  const std::size_t d = rows * cols;
  if (img.size() < 16 + n * d) {
    throw FormatError(images_path + ": truncated pixel data at byte offset " +
                      std::to_string(img.size()));
  }
  if (lab.size() < 8 + n) {
    throw FormatError(labels_path + ": truncated label data at byte offset " +
                      std::to_string(lab.size()));
  }
  Matrix x(n, d);
  for (std::size_t i = 0; i < n * d; ++i) x.data[i] = static_cast<double>(img[16 + i]) / 255.0;
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = lab[8 + i];
  if (n == 0) {
    Dataset ds;
    ds.inputs = Matrix(0, d);
    ds.image_rows = rows;
    ds.image_cols = cols;
    return ds;
  }
  return make_dataset(std::move(x), std::move(y), rows, cols);
}

/// Seeded Gaussian blobs. Class means are drawn uniformly from [0.2, 0.8]^d,
/// samples get isotropic noise of `cluster_std` and are clipped to [0, 1].
/// Labels cycle through the classes so every class is equally represented.
inline Dataset synth_blobs(std::size_t n, std::size_t d, int classes, std::uint64_t seed,
                           double cluster_std = 0.05) {
  if (classes < 1) throw ConfigError("synth_blobs: classes must be >= 1");
  if (d == 0) throw ConfigError("synth_blobs: d must be >= 1");
  Rng rng(derive_seed(seed, StreamTag::kBlobs));
  Matrix means(static_cast<std::size_t>(classes), d);
  for (double& m : means.data) m = rng.uniform(0.2, 0.8);
  Matrix x(n, d);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<int>(i % static_cast<std::size_t>(classes));
    for (std::size_t j = 0; j < d; ++j) {
      x(i, j) = std::clamp(means(static_cast<std::size_t>(y[i]), j) + rng.normal(0.0, cluster_std),
                           0.0, 1.0);
    }
  }
  if (n == 0) {
    Dataset ds;
    ds.inputs = Matrix(0, d);
    std::tie(ds.image_rows, ds.image_cols) = infer_geometry(d);
    return ds;
  }
  return make_dataset(std::move(x), std::move(y));
}

struct MaskPolicy {
  enum class Kind { kCenterBox, kThreshold };
  Kind kind = Kind::kCenterBox;
  double value = 0.25;  // box coverage fraction, or quantile for thresholding

  static MaskPolicy center_box(double fraction) { return {Kind::kCenterBox, fraction}; }
  static MaskPolicy threshold(double q) { return {Kind::kThreshold, q}; }

  bool operator==(const MaskPolicy&) const = default;
};

/// Builds one binary mask per sample.
///
/// center_box(f): a centred box whose sides are scaled by sqrt(f), so it
/// covers a fraction f of the image (for 1 x D strips, a centred run of
/// round(f * D) features). threshold(q): features strictly above the q-quantile
/// of that sample; an empty result falls back to the first maximal feature.
inline Matrix make_masks(const Dataset& ds, const MaskPolicy& policy) {
  const std::size_t n = ds.size();
  const std::size_t d = ds.dim();
  Matrix masks(n, d);
  if (policy.kind == MaskPolicy::Kind::kCenterBox) {
    if (!(policy.value > 0.0 && policy.value <= 1.0)) {
      throw ConfigError("make_masks: center_box fraction must be in (0, 1]");
    }
    const std::size_t rows = ds.image_rows;
    const std::size_t cols = ds.image_cols;
    std::size_t box_r;
    std::size_t box_c;
    if (rows == 1) {
      box_r = 1;
      box_c = static_cast<std::size_t>(std::llround(static_cast<double>(cols) * policy.value));
    } else {
      const double s = std::sqrt(policy.value);
      box_r = static_cast<std::size_t>(std::llround(static_cast<double>(rows) * s));
      box_c = static_cast<std::size_t>(std::llround(static_cast<double>(cols) * s));
    }
    box_r = std::clamp<std::size_t>(box_r, 1, rows);
    box_c = std::clamp<std::size_t>(box_c, 1, cols);
    const std::size_t r0 = (rows - box_r) / 2;
    const std::size_t c0 = (cols - box_c) / 2;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t r = r0; r < r0 + box_r; ++r) {
        for (std::size_t c = c0; c < c0 + box_c; ++c) masks(i, r * cols + c) = 1.0;
      }
    }
    return masks;
  }
  if (!(policy.value >= 0.0 && policy.value <= 1.0)) {
    throw ConfigError("make_masks: threshold quantile must be in [0, 1]");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = ds.inputs.row(i);
    std::vector<double> sorted(x.begin(), x.end());
    std::sort(sorted.begin(), sorted.end());
    // Linear-interpolation quantile.
    const double pos = policy.value * static_cast<double>(d - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, d - 1);
    const double q = sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
    bool any = false;
    for (std::size_t j = 0; j < d; ++j) {
      if (x[j] > q) {
        masks(i, j) = 1.0;
        any = true;
      }
    }
    if (!any) {
      const auto it = std::max_element(x.begin(), x.end());
      masks(i, static_cast<std::size_t>(it - x.begin())) = 1.0;
    }
  }
  return masks;
}

}  // namespace metaeval
