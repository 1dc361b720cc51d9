#pragma once

// Attribution methods and second-moment normalisation.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "metaeval/error.hpp"
#include "metaeval/net.hpp"
#include "metaeval/rng.hpp"

namespace metaeval {

enum class ExplainMethod {
  kGradient,
  kSaliency,
  kInputXGradient,
  kIntegratedGradients,
  kOcclusion,
  kGradientShap,
  kRandom,  // seeded noise map, used as a synthetic method in sanity runs
};

inline constexpr ExplainMethod kAllExplainMethods[] = {
    ExplainMethod::kGradient,  ExplainMethod::kSaliency,     ExplainMethod::kInputXGradient,
    ExplainMethod::kIntegratedGradients, ExplainMethod::kOcclusion, ExplainMethod::kGradientShap,
    ExplainMethod::kRandom,
};

inline std::string_view to_string(ExplainMethod m) {
  switch (m) {
    case ExplainMethod::kGradient: return "gradient";
    case ExplainMethod::kSaliency: return "saliency";
    case ExplainMethod::kInputXGradient: return "input_x_gradient";
    case ExplainMethod::kIntegratedGradients: return "integrated_gradients";
    case ExplainMethod::kOcclusion: return "occlusion";
    case ExplainMethod::kGradientShap: return "gradient_shap";
    case ExplainMethod::kRandom: return "random";
  }
  return "unknown";
}

inline std::optional<ExplainMethod> parse_explain_method(std::string_view s) {
  for (ExplainMethod m : kAllExplainMethods) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

struct Attribution {
  Vector values;
  ExplainMethod method = ExplainMethod::kGradient;
  bool normalized = false;
};

struct ExplainerConfig {
  int ig_steps = 32;
  double ig_baseline = 0.0;
  int occlusion_patch = 4;
  double occlusion_baseline = 0.0;
  int shap_samples = 5;
  double shap_noise_std = 0.1;
  // Range the GradientSHAP baselines are drawn from; normally the dataset bounds.
  double shap_baseline_min = 0.0;
  double shap_baseline_max = 1.0;
  // Image width for square occlusion patches; 0 treats the input as a 1-D strip.
  std::size_t image_cols = 0;
  bool normalize = true;
  std::uint64_t seed = 0;

  void validate() const {
    if (ig_steps < 1) throw ConfigError("explainer: ig_steps must be >= 1");
    if (occlusion_patch < 1) throw ConfigError("explainer: occlusion_patch must be >= 1");
    if (shap_samples < 1) throw ConfigError("explainer: shap_samples must be >= 1");
    if (shap_noise_std < 0) throw ConfigError("explainer: shap_noise_std must be >= 0");
    if (shap_baseline_min > shap_baseline_max) throw ConfigError("explainer: shap baseline range inverted");
  }

  bool operator==(const ExplainerConfig&) const = default;
};

/// Divides by the root of the mean squared attribution. All-zero maps are
/// returned unchanged with normalized = false.
inline Attribution normalize(Attribution a) {
  if (a.values.empty()) return a;
  double ss = 0.0;
  for (double v : a.values) ss += v * v;
  if (ss == 0.0) {
    a.normalized = false;
    return a;
  }
  const double denom = std::sqrt(ss / static_cast<double>(a.values.size()));
  for (double& v : a.values) v /= denom;
  a.normalized = true;
  return a;
}

inline Attribution explain_gradient(const Net& net, std::span<const double> x, int label) {
  return {input_gradient(net, x, label), ExplainMethod::kGradient, false};
}

inline Attribution explain_saliency(const Net& net, std::span<const double> x, int label) {
  Vector g = input_gradient(net, x, label);
  for (double& v : g) v = std::fabs(v);
  return {std::move(g), ExplainMethod::kSaliency, false};
}

inline Attribution explain_input_x_gradient(const Net& net, std::span<const double> x, int label) {
  Vector g = input_gradient(net, x, label);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= x[i];
  return {std::move(g), ExplainMethod::kInputXGradient, false};
}

/// Midpoint Riemann approximation of the straight-line path integral of the
/// gradient from a constant baseline to x.
inline Attribution explain_integrated_gradients(const Net& net, std::span<const double> x, int label,
                                                const ExplainerConfig& cfg) {
  cfg.validate();
  require_size(x, net.input_dim(), "integrated_gradients");
  const std::size_t d = x.size();
  Vector total(d, 0.0);
  Vector point(d);
  const int steps = cfg.ig_steps;
  for (int s = 0; s < steps; ++s) {
    const double alpha = (static_cast<double>(s) + 0.5) / static_cast<double>(steps);
    for (std::size_t i = 0; i < d; ++i) point[i] = cfg.ig_baseline + alpha * (x[i] - cfg.ig_baseline);
    const Vector g = input_gradient(net, point, label);
    for (std::size_t i = 0; i < d; ++i) total[i] += g[i];
  }
  for (std::size_t i = 0; i < d; ++i) total[i] *= (x[i] - cfg.ig_baseline) / static_cast<double>(steps);
  return {std::move(total), ExplainMethod::kIntegratedGradients, false};
}

/// Index sets of the occlusion patches: p x p squares with stride p over a
/// (D / image_cols) x image_cols image, or runs of p features for 1-D inputs.
/// Edge patches may be smaller.
inline std::vector<std::vector<std::size_t>> occlusion_patches(std::size_t d, std::size_t image_cols,
                                                               std::size_t patch) {
  std::vector<std::vector<std::size_t>> patches;
  if (image_cols == 0 || image_cols >= d || d % image_cols != 0) {
    for (std::size_t start = 0; start < d; start += patch) {
      std::vector<std::size_t> p;
      for (std::size_t i = start; i < std::min(d, start + patch); ++i) p.push_back(i);
      patches.push_back(std::move(p));
    }
    return patches;
  }
  const std::size_t rows = d / image_cols;
  for (std::size_t r0 = 0; r0 < rows; r0 += patch) {
    for (std::size_t c0 = 0; c0 < image_cols; c0 += patch) {
      std::vector<std::size_t> p;
      for (std::size_t r = r0; r < std::min(rows, r0 + patch); ++r) {
        for (std::size_t c = c0; c < std::min(image_cols, c0 + patch); ++c) p.push_back(r * image_cols + c);
      }
      patches.push_back(std::move(p));
    }
  }
  return patches;
}

inline Attribution explain_occlusion(const Net& net, std::span<const double> x, int label,
                                     const ExplainerConfig& cfg) {
  cfg.validate();
  require_size(x, net.input_dim(), "occlusion");
  if (label < 0 || static_cast<std::size_t>(label) >= net.num_classes()) {
    throw IndexError("occlusion: class index out of range");
  }
  const auto cls = static_cast<std::size_t>(label);
  const double reference = logits(net, x)[cls];
  Vector out(x.size(), 0.0);
  Vector occluded(x.begin(), x.end());
  for (const auto& patch : occlusion_patches(x.size(), cfg.image_cols,
                                             static_cast<std::size_t>(cfg.occlusion_patch))) {
    for (std::size_t i : patch) occluded[i] = cfg.occlusion_baseline;
    const double delta = reference - logits(net, occluded)[cls];
    for (std::size_t i : patch) {
      out[i] = delta;
      occluded[i] = x[i];
    }
  }
  return {std::move(out), ExplainMethod::kOcclusion, false};
}

/// Expected-gradients form of GradientSHAP: for each of cfg.shap_samples draws,
/// a baseline b uniform over [shap_baseline_min, shap_baseline_max] plus
/// Gaussian jitter and a coefficient a ~ U(0, 1); the map averages
/// (x - b) * grad f(b + a (x - b)). Draws depend only on cfg.seed.
inline Attribution explain_gradient_shap(const Net& net, std::span<const double> x, int label,
                                         const ExplainerConfig& cfg) {
  cfg.validate();
  require_size(x, net.input_dim(), "gradient_shap");
  const std::size_t d = x.size();
  Rng rng(derive_seed(cfg.seed, StreamTag::kExplainer, {static_cast<std::uint64_t>(ExplainMethod::kGradientShap)}));
  Vector total(d, 0.0);
  Vector baseline(d);
  Vector point(d);
  for (int s = 0; s < cfg.shap_samples; ++s) {
    for (std::size_t i = 0; i < d; ++i) {
      baseline[i] = rng.uniform(cfg.shap_baseline_min, cfg.shap_baseline_max) + rng.normal(0.0, cfg.shap_noise_std);
    }
    const double alpha = rng.uniform();
    for (std::size_t i = 0; i < d; ++i) point[i] = baseline[i] + alpha * (x[i] - baseline[i]);
    const Vector g = input_gradient(net, point, label);
    for (std::size_t i = 0; i < d; ++i) total[i] += (x[i] - baseline[i]) * g[i];
  }
  for (double& v : total) v /= static_cast<double>(cfg.shap_samples);
  return {std::move(total), ExplainMethod::kGradientShap, false};
}

/// Standard-normal map keyed on (seed, input bits, label); model-blind.
inline Attribution explain_random(const Net& net, std::span<const double> x, int label,
                                  const ExplainerConfig& cfg) {
  require_size(x, net.input_dim(), "random");
  std::uint64_t h = mix64(cfg.seed ^ 0x5851f42d4c957f2dULL);
  for (double v : x) h = mix64(h ^ std::bit_cast<std::uint64_t>(v));
  h = mix64(h ^ static_cast<std::uint64_t>(label));
  Rng rng(h);
  Vector out(x.size());
  for (double& v : out) v = rng.normal();
  return {std::move(out), ExplainMethod::kRandom, false};
}

inline Attribution explain(ExplainMethod method, const Net& net, std::span<const double> x, int label,
                           const ExplainerConfig& cfg) {
  switch (method) {
    case ExplainMethod::kGradient: return explain_gradient(net, x, label);
    case ExplainMethod::kSaliency: return explain_saliency(net, x, label);
    case ExplainMethod::kInputXGradient: return explain_input_x_gradient(net, x, label);
    case ExplainMethod::kIntegratedGradients: return explain_integrated_gradients(net, x, label, cfg);
    case ExplainMethod::kOcclusion: return explain_occlusion(net, x, label, cfg);
    case ExplainMethod::kGradientShap: return explain_gradient_shap(net, x, label, cfg);
    case ExplainMethod::kRandom: return explain_random(net, x, label, cfg);
  }
  throw ConfigError("explain: unknown method");
}

/// Callable explanation function Phi(x, f, y). Estimators that re-explain
/// (robustness, randomisation) call it on perturbed inputs or models.
using ExplainFn = std::function<Attribution(const Net&, std::span<const double>, int)>;

struct Explainer {
  std::string name;
  ExplainFn fn;

  Attribution operator()(const Net& net, std::span<const double> x, int label) const {
    return fn(net, x, label);
  }
};

/// Explainer for a built-in method, normalised when cfg.normalize is set.
inline Explainer make_explainer(ExplainMethod method, ExplainerConfig cfg, std::string name = {}) {
  cfg.validate();
  if (name.empty()) name = std::string(to_string(method));
  return {std::move(name), [method, cfg](const Net& net, std::span<const double> x, int label) {
            Attribution a = explain(method, net, x, label, cfg);
            return cfg.normalize ? normalize(std::move(a)) : a;
          }};
}

}  // namespace metaeval
