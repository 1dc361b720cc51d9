#pragma once

// Quality estimators: each maps one explanation of one sample to one scalar.
// Two adversarial estimators (deterministic and distribution-shifting) serve
// as sanity baselines for the meta-evaluation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "metaeval/dataset.hpp"
#include "metaeval/error.hpp"
#include "metaeval/explain.hpp"
#include "metaeval/net.hpp"
#include "metaeval/rng.hpp"
#include "metaeval/stats.hpp"

namespace metaeval {

enum class EstimatorId {
  kFaithfulnessCorrelation,
  kPixelFlipping,
  kMaxSensitivity,
  kLocalLipschitz,
  kModelParameterRandomisation,
  kRandomLogit,
  kSparseness,
  kComplexity,
  kPointingGame,
  kRelevanceMassAccuracy,
  kTopKIntersection,
  kRelevanceRankAccuracy,
  kAdversarialDeterministic,
  kAdversarialShift,
};

inline constexpr EstimatorId kAllEstimators[] = {
    EstimatorId::kFaithfulnessCorrelation, EstimatorId::kPixelFlipping,
    EstimatorId::kMaxSensitivity,          EstimatorId::kLocalLipschitz,
    EstimatorId::kModelParameterRandomisation, EstimatorId::kRandomLogit,
    EstimatorId::kSparseness,              EstimatorId::kComplexity,
    EstimatorId::kPointingGame,            EstimatorId::kRelevanceMassAccuracy,
    EstimatorId::kTopKIntersection,        EstimatorId::kRelevanceRankAccuracy,
    EstimatorId::kAdversarialDeterministic, EstimatorId::kAdversarialShift,
};

enum class Direction { kHigherBetter, kLowerBetter };

enum class Category { kFaithfulness, kRobustness, kRandomisation, kComplexity, kLocalisation, kAdversarial };

inline Direction direction_of(EstimatorId id) {
  switch (id) {
    case EstimatorId::kPixelFlipping:
    case EstimatorId::kMaxSensitivity:
    case EstimatorId::kLocalLipschitz:
    case EstimatorId::kModelParameterRandomisation:
    case EstimatorId::kRandomLogit:
    case EstimatorId::kComplexity:
      return Direction::kLowerBetter;
    default:
      return Direction::kHigherBetter;
  }
}

inline Category category_of(EstimatorId id) {
  switch (id) {
    case EstimatorId::kFaithfulnessCorrelation:
    case EstimatorId::kPixelFlipping: return Category::kFaithfulness;
    case EstimatorId::kMaxSensitivity:
    case EstimatorId::kLocalLipschitz: return Category::kRobustness;
    case EstimatorId::kModelParameterRandomisation:
    case EstimatorId::kRandomLogit: return Category::kRandomisation;
    case EstimatorId::kSparseness:
    case EstimatorId::kComplexity: return Category::kComplexity;
    case EstimatorId::kPointingGame:
    case EstimatorId::kRelevanceMassAccuracy:
    case EstimatorId::kTopKIntersection:
    case EstimatorId::kRelevanceRankAccuracy: return Category::kLocalisation;
    case EstimatorId::kAdversarialDeterministic:
    case EstimatorId::kAdversarialShift: return Category::kAdversarial;
  }
  return Category::kAdversarial;
}

inline std::string_view to_string(EstimatorId id) {
  switch (id) {
    case EstimatorId::kFaithfulnessCorrelation: return "faithfulness_correlation";
    case EstimatorId::kPixelFlipping: return "pixel_flipping";
    case EstimatorId::kMaxSensitivity: return "max_sensitivity";
    case EstimatorId::kLocalLipschitz: return "local_lipschitz";
    case EstimatorId::kModelParameterRandomisation: return "model_parameter_randomisation";
    case EstimatorId::kRandomLogit: return "random_logit";
    case EstimatorId::kSparseness: return "sparseness";
    case EstimatorId::kComplexity: return "complexity";
    case EstimatorId::kPointingGame: return "pointing_game";
    case EstimatorId::kRelevanceMassAccuracy: return "relevance_mass_accuracy";
    case EstimatorId::kTopKIntersection: return "top_k_intersection";
    case EstimatorId::kRelevanceRankAccuracy: return "relevance_rank_accuracy";
    case EstimatorId::kAdversarialDeterministic: return "adversarial_deterministic";
    case EstimatorId::kAdversarialShift: return "adversarial_shift";
  }
  return "unknown";
}

inline std::string_view to_string(Direction d) {
  return d == Direction::kHigherBetter ? "higher_better" : "lower_better";
}

inline std::string_view to_string(Category c) {
  switch (c) {
    case Category::kFaithfulness: return "faithfulness";
    case Category::kRobustness: return "robustness";
    case Category::kRandomisation: return "randomisation";
    case Category::kComplexity: return "complexity";
    case Category::kLocalisation: return "localisation";
    case Category::kAdversarial: return "adversarial";
  }
  return "unknown";
}

inline std::optional<EstimatorId> parse_estimator_id(std::string_view s) {
  for (EstimatorId id : kAllEstimators) {
    if (to_string(id) == s) return id;
  }
  return std::nullopt;
}

inline bool needs_mask(EstimatorId id) { return category_of(id) == Category::kLocalisation; }

enum class Baseline { kBlack, kUniform, kMean };

inline std::string_view to_string(Baseline b) {
  switch (b) {
    case Baseline::kBlack: return "black";
    case Baseline::kUniform: return "uniform";
    case Baseline::kMean: return "mean";
  }
  return "unknown";
}

inline std::optional<Baseline> parse_baseline(std::string_view s) {
  for (Baseline b : {Baseline::kBlack, Baseline::kUniform, Baseline::kMean}) {
    if (to_string(b) == s) return b;
  }
  return std::nullopt;
}

/// Estimator parameters. Zero / negative sizes mean "derive from the input":
/// subset and step sizes default to 2 * round(sqrt(D)), the robustness radius
/// to 0.1 * (max - min) of the dataset, top-k to the mask cardinality.
struct EstimatorConfig {
  EstimatorId id = EstimatorId::kSparseness;
  std::size_t fc_subset_size = 0;
  int fc_runs = 100;
  Baseline fc_baseline = Baseline::kUniform;
  std::size_t pf_step_size = 0;
  Baseline pf_baseline = Baseline::kUniform;
  int robustness_runs = 10;
  double robustness_radius = -1.0;
  std::size_t topk_k = 0;

  Direction direction() const { return direction_of(id); }

  void validate() const {
    if (fc_runs < 1) throw ConfigError("estimator: fc_runs must be >= 1");
    if (robustness_runs < 1) throw ConfigError("estimator: robustness_runs must be >= 1");
  }

  bool operator==(const EstimatorConfig&) const = default;
};

struct Estimate {
  std::optional<double> value;  // nullopt: undefined (zero variance, zero mass, ...)
  EstimatorId estimator_id = EstimatorId::kSparseness;
  Direction direction = Direction::kHigherBetter;

  bool defined() const { return value.has_value(); }
};

/// Everything an estimator may look at for one (sample, explanation) pair.
///
/// `seed` is the per-run estimator seed. Stochastic estimators draw from a
/// stream keyed on (seed, sample_index, method_index) only, so the unperturbed
/// and perturbed evaluations of a sample share their random numbers and differ
/// only by the perturbation. `perturbed` and `draw` identify the call for the
/// adversarial estimators.
struct EvalContext {
  const Net& net;
  std::span<const double> x;
  int label;  // predicted class of the unperturbed sample
  const Attribution& attribution;
  std::span<const double> mask;  // empty when the dataset has no masks
  Bounds bounds;
  const Explainer& explainer;
  std::uint64_t seed = 0;
  std::size_t sample_index = 0;
  std::size_t method_index = 0;
  bool perturbed = false;
  std::uint64_t draw = 0;
};

namespace est_detail {

inline Rng stream(const EvalContext& ctx, std::uint64_t salt = 0) {
  return Rng(derive_seed(ctx.seed, StreamTag::kEstimator, {ctx.sample_index, ctx.method_index, salt}));
}

inline std::size_t default_width(std::size_t d) {
  const auto w = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(d))));
  return std::max<std::size_t>(w, 1);
}

inline std::size_t resolve_size(std::size_t requested, std::size_t d, const char* what) {
  const std::size_t s = requested == 0 ? std::min(d, 2 * default_width(d)) : requested;
  if (s < 1 || s > d) {
    throw ConfigError(std::string("estimator: ") + what + " " + std::to_string(s) + " outside [1, " +
                      std::to_string(d) + "]");
  }
  return s;
}

inline double baseline_value(Baseline b, const Bounds& bounds, Rng& rng) {
  switch (b) {
    case Baseline::kBlack: return bounds.min;
    case Baseline::kMean: return bounds.mean;
    case Baseline::kUniform: return rng.uniform(bounds.min, bounds.max);
  }
  return bounds.min;
}

inline Vector magnitudes(const Attribution& a) {
  Vector m(a.values.size());
  std::transform(a.values.begin(), a.values.end(), m.begin(), [](double v) { return std::fabs(v); });
  return m;
}

inline double l2_distance(std::span<const double> a, std::span<const double> b) {
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) ss += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(ss);
}

inline double l2_norm(std::span<const double> a) {
  double ss = 0.0;
  for (double v : a) ss += v * v;
  return std::sqrt(ss);
}

inline std::span<const double> checked_mask(const EvalContext& ctx, const char* who) {
  if (ctx.mask.size() != ctx.x.size()) {
    throw ConfigError(std::string(who) + ": a ground-truth mask of length D is required");
  }
  if (std::none_of(ctx.mask.begin(), ctx.mask.end(), [](double m) { return m > 0.0; })) {
    throw ConfigError(std::string(who) + ": mask has no positive entry");
  }
  return ctx.mask;
}

// Indices of the k largest values (descending, lowest index first on ties).
inline std::vector<std::size_t> top_indices(std::span<const double> v, std::size_t k) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return v[i] > v[j]; });
  order.resize(std::min(k, order.size()));
  return order;
}

inline Estimate make(EstimatorId id, std::optional<double> v) {
  if (v && !std::isfinite(*v)) v.reset();  // never let NaN/inf reach aggregation
  return {v, id, direction_of(id)};
}

inline double radius(const EstimatorConfig& cfg, const Bounds& b) {
  return cfg.robustness_radius >= 0.0 ? cfg.robustness_radius : 0.1 * (b.max - b.min);
}

inline void check_context(const EvalContext& ctx) {
  require_size(ctx.x, ctx.net.input_dim(), "estimator input");
  require_size(ctx.attribution.values, ctx.x.size(), "estimator attribution");
  if (ctx.label < 0 || static_cast<std::size_t>(ctx.label) >= ctx.net.num_classes()) {
    throw IndexError("estimator: label outside [0, C)");
  }
}

}  // namespace est_detail

/// Pearson correlation between subset attribution sums and the logit drop
/// when the subset is replaced by the baseline, over fc_runs random subsets.
inline Estimate evaluate_faithfulness_correlation(const EvalContext& ctx, const EstimatorConfig& cfg) {
  est_detail::check_context(ctx);
  const std::size_t d = ctx.x.size();
  const std::size_t s = est_detail::resolve_size(cfg.fc_subset_size, d, "fc_subset_size");
  const auto cls = static_cast<std::size_t>(ctx.label);
  const double reference = logits(ctx.net, ctx.x)[cls];
  Rng rng = est_detail::stream(ctx);
  std::vector<std::size_t> idx(d);
  Vector masked(d);
  Vector attr_sums;
  Vector drops;
  for (int run = 0; run < cfg.fc_runs; ++run) {
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < s; ++i) std::swap(idx[i], idx[i + rng.below(d - i)]);
    std::copy(ctx.x.begin(), ctx.x.end(), masked.begin());
    double sum = 0.0;
    for (std::size_t i = 0; i < s; ++i) {
      masked[idx[i]] = est_detail::baseline_value(cfg.fc_baseline, ctx.bounds, rng);
      sum += ctx.attribution.values[idx[i]];
    }
    attr_sums.push_back(sum);
    drops.push_back(reference - logits(ctx.net, masked)[cls]);
  }
  if (attr_sums.size() < 2) return est_detail::make(EstimatorId::kFaithfulnessCorrelation, std::nullopt);
  return est_detail::make(EstimatorId::kFaithfulnessCorrelation, stats::pearson(attr_sums, drops));
}

/// Area under the predicted-class probability curve while the most attributed
/// features are replaced, pf_step_size at a time. x-axis: fraction flipped.
inline Estimate evaluate_pixel_flipping(const EvalContext& ctx, const EstimatorConfig& cfg) {
  est_detail::check_context(ctx);
  const std::size_t d = ctx.x.size();
  const std::size_t step = est_detail::resolve_size(cfg.pf_step_size, d, "pf_step_size");
  const auto cls = static_cast<std::size_t>(ctx.label);
  const std::vector<std::size_t> order = est_detail::top_indices(ctx.attribution.values, d);
  Rng rng = est_detail::stream(ctx);
  Vector current(ctx.x.begin(), ctx.x.end());
  Vector xs{0.0};
  Vector ys{softmax(logits(ctx.net, current))[cls]};
  for (std::size_t pos = 0; pos < d; pos += step) {
    const std::size_t end = std::min(d, pos + step);
    for (std::size_t k = pos; k < end; ++k) {
      current[order[k]] = est_detail::baseline_value(cfg.pf_baseline, ctx.bounds, rng);
    }
    xs.push_back(static_cast<double>(end) / static_cast<double>(d));
    ys.push_back(softmax(logits(ctx.net, current))[cls]);
  }
  return est_detail::make(EstimatorId::kPixelFlipping, stats::trapezoid_auc(xs, ys));
}

namespace est_detail {

// Shared Monte-Carlo loop of the two robustness estimators. `lipschitz`
// selects the denominator: ||delta|| (local Lipschitz) or ||x|| (max sensitivity).
inline Estimate robustness(const EvalContext& ctx, const EstimatorConfig& cfg, bool lipschitz) {
  check_context(ctx);
  const EstimatorId id = lipschitz ? EstimatorId::kLocalLipschitz : EstimatorId::kMaxSensitivity;
  const double x_norm = l2_norm(ctx.x);
  if (!lipschitz && x_norm == 0.0) return make(id, std::nullopt);
  const double r = radius(cfg, ctx.bounds);
  Rng rng = stream(ctx);
  const std::size_t d = ctx.x.size();
  Vector moved(d);
  std::optional<double> best;
  constexpr int kMaxRedraws = 100;
  for (int run = 0; run < cfg.robustness_runs; ++run) {
    double step_norm = 0.0;
    bool accepted = false;
    for (int attempt = 0; attempt < kMaxRedraws && !accepted; ++attempt) {
      for (std::size_t i = 0; i < d; ++i) {
        moved[i] = std::clamp(ctx.x[i] + rng.uniform(-r, r), ctx.bounds.min, ctx.bounds.max);
      }
      step_norm = l2_distance(moved, ctx.x);
      accepted = !lipschitz || step_norm >= 1e-12;
    }
    if (!accepted) continue;
    const Attribution other = ctx.explainer(ctx.net, moved, ctx.label);
    require_size(other.values, d, "robustness re-explanation");
    const double num = l2_distance(ctx.attribution.values, other.values);
    const double ratio = num / (lipschitz ? step_norm : x_norm);
    best = best ? std::max(*best, ratio) : ratio;
  }
  return make(id, best);
}

}  // namespace est_detail

/// Largest relative explanation change ||Phi(x) - Phi(x + delta)|| / ||x||
/// over robustness_runs draws of delta ~ U(-r, r)^D (clipped to the bounds).
inline Estimate evaluate_max_sensitivity(const EvalContext& ctx, const EstimatorConfig& cfg) {
  return est_detail::robustness(ctx, cfg, false);
}

/// Largest ratio ||Phi(x) - Phi(x')|| / ||x - x'|| over the same kind of draws.
/// Draws with ||x - x'|| < 1e-12 (after clipping) are rejected and redrawn.
inline Estimate evaluate_local_lipschitz(const EvalContext& ctx, const EstimatorConfig& cfg) {
  return est_detail::robustness(ctx, cfg, true);
}

/// Mean Spearman correlation between the explanation and the explanation of a
/// net whose dense layer v alone is redrawn from a normal fitted to that
/// layer's parameters, over all dense layers v.
inline Estimate evaluate_model_parameter_randomisation(const EvalContext& ctx, const EstimatorConfig&) {
  est_detail::check_context(ctx);
  const auto dense = ctx.net.dense_layer_indices();
  double sum = 0.0;
  int defined = 0;
  for (std::size_t v = 0; v < dense.size(); ++v) {
    Layer layer = ctx.net.layers()[dense[v]];
    Vector params(layer.weights);
    params.insert(params.end(), layer.bias.begin(), layer.bias.end());
    const double mu = stats::mean(params);
    double var = 0.0;
    for (double p : params) var += (p - mu) * (p - mu);
    const double sd = std::sqrt(var / static_cast<double>(params.size()));
    Rng rng = est_detail::stream(ctx, 1 + v);
    for (double& w : layer.weights) w = rng.normal(mu, sd);
    for (double& b : layer.bias) b = rng.normal(mu, sd);
    const Net randomised = ctx.net.with_layer(dense[v], std::move(layer));
    const Attribution other = ctx.explainer(randomised, ctx.x, ctx.label);
    const auto corr = stats::spearman(ctx.attribution.values, other.values);
    if (corr) {
      sum += *corr;
      ++defined;
    }
  }
  if (defined == 0) return est_detail::make(EstimatorId::kModelParameterRandomisation, std::nullopt);
  return est_detail::make(EstimatorId::kModelParameterRandomisation, sum / defined);
}

/// Spearman correlation between the explanation of the predicted class and
/// that of a uniformly drawn other class.
inline Estimate evaluate_random_logit(const EvalContext& ctx, const EstimatorConfig&) {
  est_detail::check_context(ctx);
  const std::size_t classes = ctx.net.num_classes();
  if (classes < 2) throw ConfigError("random_logit: needs at least 2 classes");
  Rng rng = est_detail::stream(ctx);
  const auto r = static_cast<int>(rng.below(classes - 1));
  const int other_class = r < ctx.label ? r : r + 1;
  const Attribution other = ctx.explainer(ctx.net, ctx.x, other_class);
  return est_detail::make(EstimatorId::kRandomLogit, stats::spearman(ctx.attribution.values, other.values));
}

/// Gini index of |e|: sum_i (2i - D - 1) v_(i) / (D sum v), v ascending.
inline Estimate evaluate_sparseness(const EvalContext& ctx, const EstimatorConfig&) {
  est_detail::check_context(ctx);
  Vector v = est_detail::magnitudes(ctx.attribution);
  std::sort(v.begin(), v.end());
  const double total = std::accumulate(v.begin(), v.end(), 0.0);
  if (total <= 0.0) return est_detail::make(EstimatorId::kSparseness, std::nullopt);
  const auto d = static_cast<double>(v.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) acc += (2.0 * static_cast<double>(i + 1) - d - 1.0) * v[i];
  return est_detail::make(EstimatorId::kSparseness, acc / (d * total));
}

/// Shannon entropy of |e| / sum |e| (0 ln 0 := 0).
inline Estimate evaluate_complexity(const EvalContext& ctx, const EstimatorConfig&) {
  est_detail::check_context(ctx);
  const Vector v = est_detail::magnitudes(ctx.attribution);
  const double total = std::accumulate(v.begin(), v.end(), 0.0);
  if (total <= 0.0) return est_detail::make(EstimatorId::kComplexity, std::nullopt);
  double h = 0.0;
  for (double m : v) {
    if (m > 0.0) {
      const double p = m / total;
      h -= p * std::log(p);
    }
  }
  return est_detail::make(EstimatorId::kComplexity, h);
}

inline Estimate evaluate_pointing_game(const EvalContext& ctx, const EstimatorConfig&) {
  est_detail::check_context(ctx);
  const auto mask = est_detail::checked_mask(ctx, "pointing_game");
  const Vector v = est_detail::magnitudes(ctx.attribution);
  const auto top = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
  return est_detail::make(EstimatorId::kPointingGame, mask[top] > 0.0 ? 1.0 : 0.0);
}

inline Estimate evaluate_relevance_mass_accuracy(const EvalContext& ctx, const EstimatorConfig&) {
  est_detail::check_context(ctx);
  const auto mask = est_detail::checked_mask(ctx, "relevance_mass_accuracy");
  const Vector v = est_detail::magnitudes(ctx.attribution);
  double inside = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    total += v[i];
    if (mask[i] > 0.0) inside += v[i];
  }
  if (total <= 0.0) return est_detail::make(EstimatorId::kRelevanceMassAccuracy, std::nullopt);
  return est_detail::make(EstimatorId::kRelevanceMassAccuracy, inside / total);
}

namespace est_detail {

inline double top_k_hit_rate(const EvalContext& ctx, std::span<const double> mask, std::size_t k) {
  const Vector v = magnitudes(ctx.attribution);
  std::size_t hits = 0;
  for (std::size_t i : top_indices(v, k)) {
    if (mask[i] > 0.0) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(k);
}

inline std::size_t mask_size(std::span<const double> mask) {
  return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](double m) { return m > 0.0; }));
}

}  // namespace est_detail

inline Estimate evaluate_top_k_intersection(const EvalContext& ctx, const EstimatorConfig& cfg) {
  est_detail::check_context(ctx);
  const auto mask = est_detail::checked_mask(ctx, "top_k_intersection");
  const std::size_t k = cfg.topk_k == 0 ? est_detail::mask_size(mask) : cfg.topk_k;
  if (k > ctx.x.size()) throw ConfigError("top_k_intersection: topk_k exceeds D");
  return est_detail::make(EstimatorId::kTopKIntersection, est_detail::top_k_hit_rate(ctx, mask, k));
}

inline Estimate evaluate_relevance_rank_accuracy(const EvalContext& ctx, const EstimatorConfig&) {
  est_detail::check_context(ctx);
  const auto mask = est_detail::checked_mask(ctx, "relevance_rank_accuracy");
  return est_detail::make(EstimatorId::kRelevanceRankAccuracy,
                          est_detail::top_k_hit_rate(ctx, mask, est_detail::mask_size(mask)));
}

/// One fixed U(0, 1) draw per (sample, method), returned for the unperturbed
/// and every perturbed call alike.
inline Estimate adversarial_deterministic(const EvalContext& ctx) {
  Rng rng(derive_seed(ctx.seed, StreamTag::kAdversarial, {ctx.sample_index, ctx.method_index}));
  return est_detail::make(EstimatorId::kAdversarialDeterministic, rng.uniform());
}

/// N(mu, 1) with mu ~ U(-100000, -1) for unperturbed calls and mu ~ U(0, 1)
/// for perturbed ones; a fresh draw per call.
inline Estimate adversarial_distribution_shift(const EvalContext& ctx) {
  Rng rng(derive_seed(ctx.seed, StreamTag::kAdversarial,
                      {ctx.sample_index, ctx.method_index, ctx.draw, ctx.perturbed ? 1u : 0u, 0xad5ULL}));
  const double mu = ctx.perturbed ? rng.uniform(0.0, 1.0) : rng.uniform(-100000.0, -1.0);
  return est_detail::make(EstimatorId::kAdversarialShift, rng.normal(mu, 1.0));
}

inline Estimate evaluate(const EvalContext& ctx, const EstimatorConfig& cfg) {
  cfg.validate();
  switch (cfg.id) {
    case EstimatorId::kFaithfulnessCorrelation: return evaluate_faithfulness_correlation(ctx, cfg);
    case EstimatorId::kPixelFlipping: return evaluate_pixel_flipping(ctx, cfg);
    case EstimatorId::kMaxSensitivity: return evaluate_max_sensitivity(ctx, cfg);
    case EstimatorId::kLocalLipschitz: return evaluate_local_lipschitz(ctx, cfg);
    case EstimatorId::kModelParameterRandomisation: return evaluate_model_parameter_randomisation(ctx, cfg);
    case EstimatorId::kRandomLogit: return evaluate_random_logit(ctx, cfg);
    case EstimatorId::kSparseness: return evaluate_sparseness(ctx, cfg);
    case EstimatorId::kComplexity: return evaluate_complexity(ctx, cfg);
    case EstimatorId::kPointingGame: return evaluate_pointing_game(ctx, cfg);
    case EstimatorId::kRelevanceMassAccuracy: return evaluate_relevance_mass_accuracy(ctx, cfg);
    case EstimatorId::kTopKIntersection: return evaluate_top_k_intersection(ctx, cfg);
    case EstimatorId::kRelevanceRankAccuracy: return evaluate_relevance_rank_accuracy(ctx, cfg);
    case EstimatorId::kAdversarialDeterministic: return adversarial_deterministic(ctx);
    case EstimatorId::kAdversarialShift: return adversarial_distribution_shift(ctx);
  }
  throw ConfigError("evaluate: unknown estimator");
}

}  // namespace metaeval
