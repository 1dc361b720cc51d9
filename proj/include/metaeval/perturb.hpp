#pragma once

// Minor / disruptive perturbations of inputs (additive uniform noise) and
// models (multiplicative Gaussian weight noise), and collection of the
// unperturbed and perturbed estimate matrices.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "metaeval/dataset.hpp"
#include "metaeval/error.hpp"
#include "metaeval/estimators.hpp"
#include "metaeval/explain.hpp"
#include "metaeval/net.hpp"
#include "metaeval/rng.hpp"

namespace metaeval {

enum class PerturbSpace { kInput, kModel };
enum class Strength { kMinor, kDisruptive };

inline std::string_view to_string(PerturbSpace s) { return s == PerturbSpace::kInput ? "IPT" : "MPT"; }
inline std::string_view to_string(Strength s) { return s == Strength::kMinor ? "minor" : "disruptive"; }

/// Perturbation parameters. A sample's perturbation is compliant when its
/// predicted label is preserved (minor) or changed (disruptive).
struct PerturbSpec {
  PerturbSpace space = PerturbSpace::kInput;
  Strength strength = Strength::kMinor;
  double ipt_alpha = -0.001;
  double ipt_beta = 0.001;
  double mpt_sigma = 0.001;
  double mpt_mu = 1.0;
  int max_resamples = 100;
  double min_retained_fraction = 0.8;
  std::uint64_t seed = 0;

  /// Defaults for the noise-resilience (minor) test.
  static PerturbSpec noise_resilience(PerturbSpace space) {
    PerturbSpec s;
    s.space = space;
    s.strength = Strength::kMinor;
    return s;
  }

  /// Defaults for the adversary-reactivity (disruptive) test.
  static PerturbSpec adversary_reactivity(PerturbSpace space) {
    PerturbSpec s;
    s.space = space;
    s.strength = Strength::kDisruptive;
    s.ipt_alpha = 0.0;
    s.ipt_beta = 1.0;
    s.mpt_sigma = 2.0;
    return s;
  }

  void validate() const {
    if (ipt_alpha > ipt_beta) throw ConfigError("perturb: ipt_alpha must be <= ipt_beta");
    if (mpt_sigma < 0.0) throw ConfigError("perturb: mpt_sigma must be >= 0");
    if (max_resamples < 1) throw ConfigError("perturb: max_resamples must be >= 1");
    if (!(min_retained_fraction > 0.0 && min_retained_fraction <= 1.0)) {
      throw ConfigError("perturb: min_retained_fraction must be in (0, 1]");
    }
  }

  bool operator==(const PerturbSpec&) const = default;
};

inline bool is_compliant(Strength strength, int original_label, int perturbed_label) {
  return strength == Strength::kMinor ? perturbed_label == original_label : perturbed_label != original_label;
}

struct InputCase {
  Vector x;
  bool compliant = false;
  int attempts = 0;
};

/// x' = clip(x + delta, bounds.min, bounds.max), delta ~ U(alpha, beta) i.i.d.,
/// redrawn up to max_resamples times until the requested strength holds. The
/// last draw is returned (compliant = false) when none qualified.
inline InputCase ipt_sample(const Net& net, std::span<const double> x, int label, const Bounds& bounds,
                            const PerturbSpec& spec, std::uint64_t draw_seed) {
  spec.validate();
  require_size(x, net.input_dim(), "ipt_sample");
  InputCase out;
  out.x.resize(x.size());
  for (int attempt = 0; attempt < spec.max_resamples; ++attempt) {
    Rng rng(derive_seed(draw_seed, StreamTag::kIpt, {static_cast<std::uint64_t>(attempt)}));
    for (std::size_t i = 0; i < x.size(); ++i) {
      out.x[i] = std::clamp(x[i] + rng.uniform(spec.ipt_alpha, spec.ipt_beta), bounds.min, bounds.max);
    }
    out.attempts = attempt + 1;
    if (is_compliant(spec.strength, label, predict_label(net, out.x))) {
      out.compliant = true;
      return out;
    }
  }
  return out;
}

struct ModelCase {
  Net net;
  std::vector<std::uint8_t> compliant;  // per sample, against this model draw
  int attempts = 0;
  double compliant_fraction = 0.0;
};

/// theta' = theta * nu, nu ~ N(mu, sigma^2) i.i.d. over every dense parameter
/// (biases included). Compliance is judged per sample against the shared draw.
/// The model is redrawn (up to max_resamples times) only when the draw is
/// globally unusable: for minor strength when fewer than min_retained_fraction
/// of the samples keep their label, for disruptive strength when no sample
/// changes label. Exhausting the redraws raises PerturbationInfeasibleError.
inline ModelCase mpt_sample(const Net& net, const Matrix& inputs, std::span<const int> labels,
                            const PerturbSpec& spec, std::uint64_t draw_seed) {
  spec.validate();
  if (labels.size() != inputs.rows) throw ShapeError("mpt_sample: labels and inputs differ in length");
  const Vector theta = get_weights(net);
  Vector scaled(theta.size());
  double best = 0.0;
  for (int attempt = 0; attempt < spec.max_resamples; ++attempt) {
    Rng rng(derive_seed(draw_seed, StreamTag::kMpt, {static_cast<std::uint64_t>(attempt)}));
    for (std::size_t p = 0; p < theta.size(); ++p) scaled[p] = theta[p] * rng.normal(spec.mpt_mu, spec.mpt_sigma);
    ModelCase out{set_weights(net, scaled), std::vector<std::uint8_t>(inputs.rows, 0), attempt + 1, 0.0};
    std::size_t hits = 0;
    for (std::size_t i = 0; i < inputs.rows; ++i) {
      if (is_compliant(spec.strength, labels[i], predict_label(out.net, inputs.row(i)))) {
        out.compliant[i] = 1;
        ++hits;
      }
    }
    out.compliant_fraction = inputs.rows ? static_cast<double>(hits) / static_cast<double>(inputs.rows) : 0.0;
    best = std::max(best, out.compliant_fraction);
    const bool usable = spec.strength == Strength::kMinor ? out.compliant_fraction >= spec.min_retained_fraction
                                                          : hits > 0;
    if (usable) return out;
  }
  throw PerturbationInfeasibleError(
      "mpt_sample: no " + std::string(to_string(spec.strength)) + " model draw within " +
          std::to_string(spec.max_resamples) + " attempts (best compliant fraction " + std::to_string(best) + ")",
      best);
}

/// Scores of one explanation method: N unperturbed estimates and an N x K
/// table of perturbed ones. Cells that are not retained (non-compliant
/// perturbation or undefined estimate) never enter aggregation.
struct EstimateMatrix {
  std::vector<std::optional<double>> unperturbed;
  Matrix perturbed;
  std::vector<std::uint8_t> retained;

  std::size_t samples() const { return unperturbed.size(); }
  std::size_t draws() const { return perturbed.cols; }
  bool is_retained(std::size_t i, std::size_t k) const { return retained[i * perturbed.cols + k] != 0; }
};

/// Shared inputs of one estimator evaluation over a dataset.
struct EvaluationSetup {
  const Net& net;
  const Dataset& data;
  const std::vector<Explainer>& methods;
  EstimatorConfig estimator;
  std::uint64_t estimator_seed = 0;
};

/// Predicted labels, explanations and unperturbed scores, computed once per
/// (sample, method) and reused by the minor and disruptive collections.
struct UnperturbedScores {
  std::vector<int> predicted;
  std::vector<std::vector<Attribution>> explanations;           // [method][sample]
  std::vector<std::vector<std::optional<double>>> scores;       // [method][sample]
};

struct CollectStats {
  std::size_t evaluations = 0;        // unperturbed + retained perturbed evaluations
  std::size_t undefined = 0;          // of which undefined
  std::size_t compliant_cells = 0;    // (sample, k) pairs with a compliant perturbation
  std::size_t dropped_samples = 0;    // samples without any compliant draw
  int model_attempts = 0;             // MPT: total model draws
};

struct CollectResult {
  std::vector<EstimateMatrix> per_method;
  std::vector<std::uint8_t> sample_kept;  // at least one compliant draw
  CollectStats stats;
};

namespace perturb_detail {

inline bool uses_explanations(EstimatorId id) { return category_of(id) != Category::kAdversarial; }

inline std::span<const double> mask_row(const Dataset& data, std::size_t i) {
  if (!data.has_masks()) return {};
  return data.masks.row(i);
}

inline std::uint64_t draw_tag(Strength s, std::size_t k) {
  return (static_cast<std::uint64_t>(s == Strength::kMinor ? 1 : 2) << 32) | (k + 1);
}

}  // namespace perturb_detail

inline UnperturbedScores compute_unperturbed(const EvaluationSetup& setup) {
  const Dataset& data = setup.data;
  if (needs_mask(setup.estimator.id) && !data.has_masks()) {
    throw ConfigError(std::string(to_string(setup.estimator.id)) + " requires ground-truth masks");
  }
  UnperturbedScores out;
  out.predicted.resize(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out.predicted[i] = predict_label(setup.net, data.inputs.row(i));
  const bool explain_needed = perturb_detail::uses_explanations(setup.estimator.id);
  out.explanations.resize(setup.methods.size());
  out.scores.resize(setup.methods.size());
  for (std::size_t j = 0; j < setup.methods.size(); ++j) {
    auto& ex = out.explanations[j];
    ex.resize(data.size());
    out.scores[j].resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto x = data.inputs.row(i);
      if (explain_needed) ex[i] = setup.methods[j](setup.net, x, out.predicted[i]);
      const EvalContext ctx{setup.net, x, out.predicted[i], ex[i], perturb_detail::mask_row(data, i),
                            data.bounds, setup.methods[j], setup.estimator_seed, i, j, false, 0};
      out.scores[j][i] = evaluate(ctx, setup.estimator).value;
    }
  }
  return out;
}

/// Perturbs every sample K times under `spec` and re-scores every method on
/// each compliant payload. Perturbed scores use the same predicted class as
/// the unperturbed ones. Deterministic for fixed seeds.
inline CollectResult collect(const EvaluationSetup& setup, const UnperturbedScores& base,
                             const PerturbSpec& spec, int k_draws) {
  spec.validate();
  const Dataset& data = setup.data;
  const std::size_t n = data.size();
  const std::size_t methods = setup.methods.size();
  if (k_draws < 1) throw ConfigError("collect: K must be >= 1");
  if (n < 2) throw ConfigError("collect: need at least 2 samples");
  const auto K = static_cast<std::size_t>(k_draws);

  CollectResult out;
  out.per_method.resize(methods);
  for (std::size_t j = 0; j < methods; ++j) {
    out.per_method[j].unperturbed = base.scores[j];
    out.per_method[j].perturbed = Matrix(n, K);
    out.per_method[j].retained.assign(n * K, 0);
    for (const auto& s : base.scores[j]) {
      ++out.stats.evaluations;
      if (!s) ++out.stats.undefined;
    }
  }
  std::vector<std::uint8_t> any_compliant(n, 0);
  const bool explain_needed = perturb_detail::uses_explanations(setup.estimator.id);

  auto score_cell = [&](const Net& model, std::span<const double> x, std::size_t i, std::size_t k) {
    for (std::size_t j = 0; j < methods; ++j) {
      Attribution fresh;
      if (explain_needed) fresh = setup.methods[j](model, x, base.predicted[i]);
      const EvalContext ctx{model, x, base.predicted[i], explain_needed ? fresh : base.explanations[j][i],
                            perturb_detail::mask_row(data, i), data.bounds, setup.methods[j],
                            setup.estimator_seed, i, j, true, perturb_detail::draw_tag(spec.strength, k)};
      const Estimate e = evaluate(ctx, setup.estimator);
      ++out.stats.evaluations;
      if (!e.value) {
        ++out.stats.undefined;
        continue;
      }
      out.per_method[j].perturbed(i, k) = *e.value;
      out.per_method[j].retained[i * K + k] = 1;
    }
  };

  for (std::size_t k = 0; k < K; ++k) {
    if (spec.space == PerturbSpace::kInput) {
      for (std::size_t i = 0; i < n; ++i) {
        const InputCase c = ipt_sample(setup.net, data.inputs.row(i), base.predicted[i], data.bounds, spec,
                                       derive_seed(spec.seed, StreamTag::kIpt, {k, i}));
        if (!c.compliant) continue;
        any_compliant[i] = 1;
        ++out.stats.compliant_cells;
        score_cell(setup.net, c.x, i, k);
      }
    } else {
      const ModelCase c = mpt_sample(setup.net, data.inputs, base.predicted, spec,
                                     derive_seed(spec.seed, StreamTag::kMpt, {k}));
      out.stats.model_attempts += c.attempts;
      for (std::size_t i = 0; i < n; ++i) {
        if (!c.compliant[i]) continue;
        any_compliant[i] = 1;
        ++out.stats.compliant_cells;
        score_cell(c.net, data.inputs.row(i), i, k);
      }
    }
  }
  out.sample_kept = any_compliant;
  out.stats.dropped_samples = static_cast<std::size_t>(std::count(any_compliant.begin(), any_compliant.end(), 0));
  if (static_cast<double>(out.stats.dropped_samples) > 0.2 * static_cast<double>(n)) {
    throw RunError("collect: " + std::to_string(out.stats.dropped_samples) + " of " + std::to_string(n) +
                   " samples have no compliant " + std::string(to_string(spec.strength)) + " " +
                   std::string(to_string(spec.space)) + " perturbation within " +
                   std::to_string(spec.max_resamples) + " resamples (limit 20%)");
  }
  return out;
}

/// Convenience overload computing the unperturbed scores itself.
inline CollectResult collect(const EvaluationSetup& setup, const PerturbSpec& spec, int k_draws) {
  return collect(setup, compute_unperturbed(setup), spec, k_draws);
}

}  // namespace metaeval
