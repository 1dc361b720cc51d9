#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <set>
#include <vector>

#include "metaeval/estimators.hpp"

using namespace metaeval;

namespace {

Explainer fixed_explainer(Vector v) {
  return {"fixed", [v](const Net&, std::span<const double>, int) { return Attribution{v}; }};
}

Explainer identity_explainer() {
  return {"identity", [](const Net&, std::span<const double> x, int) { return Attribution{Vector(x.begin(), x.end())}; }};
}

Explainer raw_gradient() {
  ExplainerConfig cfg;
  cfg.normalize = false;
  return make_explainer(ExplainMethod::kGradient, cfg);
}

// Owns everything an EvalContext refers to.
struct Case {
  Case(Net n, Vector input, Attribution a, Vector m = {})
      : net(std::move(n)), x(std::move(input)), attr(std::move(a)), mask(std::move(m)) {}

  Net net;
  Vector x;
  Attribution attr;
  Vector mask;
  Explainer explainer = fixed_explainer({});
  Bounds bounds{0.0, 1.0, 0.5};
  std::uint64_t seed = 11;
  int label = 0;
  std::size_t sample = 0;

  EvalContext ctx() const { return {net, x, label, attr, mask, bounds, explainer, seed, sample, 0}; }
  Estimate run(const EstimatorConfig& cfg) const { return evaluate(ctx(), cfg); }
};

// Attribution-only estimators ignore the model; any net with the right D works.
Case map_case(Vector attr, Vector mask = {}) {
  const std::size_t d = attr.size();
  Case c{init_net({d, {}, 2}, 1), Vector(d, 0.5), Attribution{std::move(attr)}, std::move(mask)};
  return c;
}

std::optional<double> score(EstimatorId id, Vector attr, Vector mask = {}) {
  EstimatorConfig cfg;
  cfg.id = id;
  return map_case(std::move(attr), std::move(mask)).run(cfg).value;
}

Vector one_hot_mask(std::size_t d, std::initializer_list<std::size_t> on) {
  Vector m(d, 0.0);
  for (std::size_t i : on) m[i] = 1.0;
  return m;
}

// Gini via mean absolute difference.
double gini_oracle(const Vector& v) {
  double num = 0.0, total = 0.0;
  for (double a : v) {
    total += std::fabs(a);
    for (double b : v) num += std::fabs(std::fabs(a) - std::fabs(b));
  }
  return num / (2.0 * static_cast<double>(v.size()) * total);
}

Rng estimator_stream(const Case& c, std::uint64_t salt = 0) {
  return Rng(derive_seed(c.seed, StreamTag::kEstimator, {c.sample, 0, salt}));
}

Net sum_model(std::size_t d) { return Net({Layer::dense(d, 1, Vector(d, 1.0), {0.0})}); }

}  // namespace

TEST(Registry, DirectionsAreTotalAndMatchDeclaredSet) {
  const std::set<EstimatorId> lower{EstimatorId::kPixelFlipping,    EstimatorId::kMaxSensitivity,
                                    EstimatorId::kLocalLipschitz,   EstimatorId::kModelParameterRandomisation,
                                    EstimatorId::kRandomLogit,      EstimatorId::kComplexity};
  for (EstimatorId id : kAllEstimators) {
    EXPECT_EQ(direction_of(id) == Direction::kLowerBetter, lower.count(id) == 1) << to_string(id);
    EXPECT_EQ(parse_estimator_id(to_string(id)), id);
    EstimatorConfig cfg;
    cfg.id = id;
    EXPECT_EQ(cfg.direction(), direction_of(id));
  }
  EXPECT_FALSE(parse_estimator_id("irof").has_value());
}

TEST(Registry, LocalisationNeedsMasks) {
  for (EstimatorId id : kAllEstimators) {
    EXPECT_EQ(needs_mask(id), category_of(id) == Category::kLocalisation);
  }
  EXPECT_THROW(score(EstimatorId::kPointingGame, {1, 2}), ConfigError);
  EXPECT_THROW(score(EstimatorId::kPointingGame, {1, 2}, {0, 0}), ConfigError);
}

TEST(Sparseness, Examples) {
  EXPECT_NEAR(*score(EstimatorId::kSparseness, {0.3, 0.3, 0.3, 0.3}), 0.0, 1e-15);
  EXPECT_NEAR(*score(EstimatorId::kSparseness, {0, 0, 0, 1}), 0.75, 1e-15);
  EXPECT_FALSE(score(EstimatorId::kSparseness, {0, 0, 0}).has_value());
}

TEST(Sparseness, MatchesMeanDifferenceGini) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    Vector v(2 + rng.below(40));
    for (double& x : v) x = rng.normal();
    const double s = *score(EstimatorId::kSparseness, v);
    EXPECT_NEAR(s, gini_oracle(v), 1e-12);
    EXPECT_GE(s, 0.0);
    EXPECT_LT(s, 1.0);
  }
}

TEST(Complexity, Examples) {
  EXPECT_NEAR(*score(EstimatorId::kComplexity, {1, 1, 1, 1}), std::log(4.0), 1e-12);
  EXPECT_NEAR(*score(EstimatorId::kComplexity, {1, 1, 1, 1}), 1.38629, 1e-5);
  EXPECT_EQ(*score(EstimatorId::kComplexity, {0, 0, 5, 0}), 0.0);
  EXPECT_NEAR(*score(EstimatorId::kComplexity, {0.5, 0.5, 0, 0}), std::log(2.0), 1e-12);
  EXPECT_NEAR(*score(EstimatorId::kComplexity, {0.5, 0.5, 0, 0}), 0.69315, 1e-5);
  EXPECT_FALSE(score(EstimatorId::kComplexity, {0, 0}).has_value());
}

TEST(Complexity, WithinZeroAndLogD) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    Vector v(1 + rng.below(30));
    for (double& x : v) x = rng.normal();
    const double h = *score(EstimatorId::kComplexity, v);
    EXPECT_GE(h, -1e-15);
    EXPECT_LE(h, std::log(static_cast<double>(v.size())) + 1e-12);
  }
}

TEST(PointingGame, Examples) {
  EXPECT_EQ(*score(EstimatorId::kPointingGame, {0.1, 0.9, 0.2}, {0, 1, 0}), 1.0);
  EXPECT_EQ(*score(EstimatorId::kPointingGame, {0.1, 0.9, 0.2}, {1, 0, 1}), 0.0);
  // Tie at indices 1 and 5; lowest index wins, and it is outside the mask.
  EXPECT_EQ(*score(EstimatorId::kPointingGame, {0, 3, 0, 0, 0, 3}, one_hot_mask(6, {5})), 0.0);
}

TEST(RelevanceMassAccuracy, Examples) {
  EXPECT_DOUBLE_EQ(*score(EstimatorId::kRelevanceMassAccuracy, {0, 2, 3}, {0, 1, 1}), 1.0);
  EXPECT_DOUBLE_EQ(*score(EstimatorId::kRelevanceMassAccuracy, {1, 1, 2}, {0, 0, 1}), 0.5);
  EXPECT_EQ(*score(EstimatorId::kRelevanceMassAccuracy, {1, 1, 0}, {0, 0, 1}), 0.0);
  EXPECT_FALSE(score(EstimatorId::kRelevanceMassAccuracy, {0, 0, 0}, {0, 0, 1}).has_value());
}

TEST(TopKIntersection, Examples) {
  EstimatorConfig cfg;
  cfg.id = EstimatorId::kTopKIntersection;
  cfg.topk_k = 2;
  EXPECT_EQ(*map_case({5, 4, 1, 0}, {1, 1, 0, 0}).run(cfg).value, 1.0);
  EXPECT_EQ(*map_case({5, 1, 4, 0}, {1, 1, 0, 0}).run(cfg).value, 0.5);
  cfg.topk_k = 5;
  EXPECT_DOUBLE_EQ(*map_case({1, 2, 3, 4, 5}, {0, 1, 0, 1, 0}).run(cfg).value, 2.0 / 5.0);
  cfg.topk_k = 6;
  EXPECT_THROW(map_case({1, 2, 3, 4, 5}, {0, 1, 0, 1, 0}).run(cfg), ConfigError);
  // Default K is the mask size.
  EXPECT_EQ(*score(EstimatorId::kTopKIntersection, {5, 4, 1, 0}, {1, 1, 0, 0}), 1.0);
}

TEST(RelevanceRankAccuracy, Examples) {
  EXPECT_EQ(*score(EstimatorId::kRelevanceRankAccuracy, {0, 1, 1, 0}, {0, 1, 1, 0}), 1.0);
  EXPECT_EQ(*score(EstimatorId::kRelevanceRankAccuracy, {5, 0, 0, 4}, {0, 1, 1, 0}), 0.0);
  EXPECT_NEAR(*score(EstimatorId::kRelevanceRankAccuracy, {9, 8, 1, 7, 0, 0}, one_hot_mask(6, {0, 1, 2})),
              2.0 / 3.0, 1e-15);
}

TEST(MapEstimators, PositiveScalingInvarianceAndRanges) {
  const EstimatorId ids[] = {EstimatorId::kSparseness,       EstimatorId::kComplexity,
                             EstimatorId::kPointingGame,     EstimatorId::kRelevanceMassAccuracy,
                             EstimatorId::kTopKIntersection, EstimatorId::kRelevanceRankAccuracy};
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 4 + rng.below(20);
    Vector v(d), mask(d, 0.0);
    for (double& x : v) x = rng.normal();
    mask[rng.below(d)] = 1.0;
    for (double& m : mask) m = m > 0 || rng.uniform() < 0.3 ? 1.0 : 0.0;
    Vector scaled = v;
    const double k = 0.5 + 10 * rng.uniform();
    for (double& x : scaled) x *= k;
    for (EstimatorId id : ids) {
      const double a = *score(id, v, mask), b = *score(id, scaled, mask);
      EXPECT_NEAR(a, b, 1e-12) << to_string(id);
      if (id != EstimatorId::kComplexity) {
        EXPECT_GE(a, 0.0);
        EXPECT_LE(a, 1.0);
      }
    }
    const double pg = *score(EstimatorId::kPointingGame, v, mask);
    EXPECT_TRUE(pg == 0.0 || pg == 1.0);
  }
}

TEST(FaithfulnessCorrelation, SumModelCases) {
  const std::size_t d = 16;
  Vector x(d);
  for (std::size_t i = 0; i < d; ++i) x[i] = 0.05 * static_cast<double>(i + 1);
  EstimatorConfig cfg;
  cfg.id = EstimatorId::kFaithfulnessCorrelation;
  cfg.fc_baseline = Baseline::kBlack;
  Case c{sum_model(d), x, Attribution{x}};
  EXPECT_NEAR(*c.run(cfg).value, 1.0, 1e-12);
  Vector neg = x;
  for (double& v : neg) v = -v;
  c.attr = Attribution{neg};
  EXPECT_NEAR(*c.run(cfg).value, -1.0, 1e-12);
  Case constant{Net({Layer::dense(d, 1, Vector(d, 0.0), {1.0})}), x, Attribution{x}};
  EXPECT_FALSE(constant.run(cfg).defined());
}

TEST(FaithfulnessCorrelation, DeterministicForSeed) {
  const Net net = init_net({9, {5}, 3}, 2);
  Vector x(9, 0.4);
  Rng rng(1);
  Vector attr(9);
  for (double& v : attr) v = rng.normal();
  EstimatorConfig cfg;
  cfg.id = EstimatorId::kFaithfulnessCorrelation;
  Case c{net, x, Attribution{attr}};
  EXPECT_EQ(c.run(cfg).value, c.run(cfg).value);
  const double v = *c.run(cfg).value;
  EXPECT_GE(v, -1.0);
  EXPECT_LE(v, 1.0);
}

TEST(PixelFlipping, ConstantProbabilityModel) {
  const std::size_t d = 9;
  const Net net({Layer::dense(d, 2, Vector(2 * d, 0.0), {0.3, -0.5})});
  const double p0 = 1.0 / (1.0 + std::exp(-0.8));
  EstimatorConfig cfg;
  cfg.id = EstimatorId::kPixelFlipping;
  Case c{net, Vector(d, 0.2), Attribution{Vector{3, 1, 4, 1, 5, 9, 2, 6, 5}}};
  EXPECT_NEAR(*c.run(cfg).value, p0, 1e-12);
  c.label = 1;
  EXPECT_NEAR(*c.run(cfg).value, 1.0 - p0, 1e-12);
}

TEST(PixelFlipping, MatchesReplayedCurve) {
  const std::size_t d = 10;
  Rng rng(5);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Net net = init_net({d, {6}, 3}, seed);
    Vector x(d), attr(d);
    for (double& v : x) v = rng.uniform();
    for (double& v : attr) v = rng.normal();
    EstimatorConfig cfg;
    cfg.id = EstimatorId::kPixelFlipping;
    cfg.pf_baseline = Baseline::kBlack;
    cfg.pf_step_size = 3;
    Case c{net, x, Attribution{attr}};
    c.label = predict_label(net, x);
    // Replay: flip by descending attribution, 3 at a time, to the dataset minimum.
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return attr[a] > attr[b]; });
    Vector cur = x;
    std::vector<double> fx{0.0}, fy{softmax(logits(net, cur))[c.label]};
    for (std::size_t start = 0; start < d; start += 3) {
      for (std::size_t k = start; k < std::min(d, start + 3); ++k) cur[order[k]] = 0.0;
      fx.push_back(static_cast<double>(std::min(d, start + 3)) / static_cast<double>(d));
      fy.push_back(softmax(logits(net, cur))[c.label]);
    }
    double auc = 0.0;
    for (std::size_t i = 1; i < fx.size(); ++i) auc += (fx[i] - fx[i - 1]) * (fy[i] + fy[i - 1]) / 2.0;
    const double got = *c.run(cfg).value;
    EXPECT_NEAR(got, auc, 1e-12);
    EXPECT_GE(got, 0.0);
    EXPECT_LE(got, 1.0);
  }
}

TEST(MaxSensitivity, ZeroCasesAndUndefined) {
  EstimatorConfig cfg;
  cfg.id = EstimatorId::kMaxSensitivity;
  Case c{init_net({4, {3}, 2}, 3), Vector{0.1, 0.2, 0.3, 0.4}, Attribution{Vector{1, 2, 3, 4}}};
  c.explainer = fixed_explainer({1, 2, 3, 4});
  EXPECT_EQ(*c.run(cfg).value, 0.0);
  const Net linear({Layer::dense(4, 2, {1, -2, 3, 0.5, 0, 1, -1, 2}, {0, 0})});
  Case lin{linear, c.x, Attribution{Vector{1, -2, 3, 0.5}}};
  lin.explainer = raw_gradient();
  EXPECT_EQ(*lin.run(cfg).value, 0.0);
  Case origin{linear, Vector(4, 0.0), Attribution{Vector{1, -2, 3, 0.5}}};
  origin.explainer = raw_gradient();
  EXPECT_FALSE(origin.run(cfg).defined());
}

TEST(MaxSensitivity, SingleDrawOracle) {
  const Net net = init_net({5, {8}, 3}, 7);
  const Vector x{0.2, 0.9, 0.4, 0.6, 0.1};
  Case c{net, x, Attribution{}};
  c.explainer = raw_gradient();
  c.attr = c.explainer(net, x, 0);
  EstimatorConfig cfg;
  cfg.id = EstimatorId::kMaxSensitivity;
  cfg.robustness_runs = 1;
  cfg.robustness_radius = 0.3;
  Rng rng = estimator_stream(c);
  Vector moved(5);
  for (std::size_t i = 0; i < 5; ++i) moved[i] = std::clamp(x[i] + rng.uniform(-0.3, 0.3), 0.0, 1.0);
  const Vector other = c.explainer(net, moved, 0).values;
  double num = 0, den = 0;
  for (std::size_t i = 0; i < 5; ++i) {
    num += (c.attr.values[i] - other[i]) * (c.attr.values[i] - other[i]);
    den += x[i] * x[i];
  }
  EXPECT_NEAR(*c.run(cfg).value, std::sqrt(num) / std::sqrt(den), 1e-12);
}

TEST(LocalLipschitz, ConstantAndIdentity) {
  EstimatorConfig cfg;
  cfg.id = EstimatorId::kLocalLipschitz;
  const Vector x{0.1, 0.5, 0.95};
  Case c{init_net({3, {3}, 2}, 1), x, Attribution{Vector{1, 1, 2}}};
  c.explainer = fixed_explainer({1, 1, 2});
  EXPECT_EQ(*c.run(cfg).value, 0.0);
  c.explainer = identity_explainer();
  c.attr = Attribution{x};
  EXPECT_NEAR(*c.run(cfg).value, 1.0, 1e-12);
}

TEST(LocalLipschitz, PerDrawOracle) {
  const Net net = init_net({4, {6}, 2}, 12);
  const Vector x{0.3, 0.7, 0.5, 0.2};
  Case c{net, x, Attribution{}};
  c.explainer = raw_gradient();
  c.attr = c.explainer(net, x, 1);
  c.label = 1;
  EstimatorConfig cfg;
  cfg.id = EstimatorId::kLocalLipschitz;
  cfg.robustness_runs = 4;
  cfg.robustness_radius = 0.25;
  Rng rng = estimator_stream(c);
  double best = -1.0;
  for (int run = 0; run < 4; ++run) {
    Vector moved(4);
    for (std::size_t i = 0; i < 4; ++i) moved[i] = std::clamp(x[i] + rng.uniform(-0.25, 0.25), 0.0, 1.0);
    const Vector other = c.explainer(net, moved, 1).values;
    double num = 0, den = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      num += (c.attr.values[i] - other[i]) * (c.attr.values[i] - other[i]);
      den += (moved[i] - x[i]) * (moved[i] - x[i]);
    }
    best = std::max(best, std::sqrt(num) / std::sqrt(den));
  }
  EXPECT_NEAR(*c.run(cfg).value, best, 1e-12);
}

TEST(ModelParameterRandomisation, ModelBlindExplainerScoresOne) {
  EstimatorConfig cfg;
  cfg.id = EstimatorId::kModelParameterRandomisation;
  const Vector x{0.1, 0.4, 0.3, 0.8};
  Case c{init_net({4, {5}, 2}, 4), x, Attribution{x}};
  c.explainer = identity_explainer();
  EXPECT_NEAR(*c.run(cfg).value, 1.0, 1e-12);
}

TEST(ModelParameterRandomisation, FreshNoiseIsUncorrelated) {
  const std::size_t d = 784;
  auto counter = std::make_shared<std::uint64_t>(0);
  Explainer noise{"noise", [counter](const Net&, std::span<const double> x, int) {
                    Rng rng(derive_seed(99, StreamTag::kExplainer, {(*counter)++}));
                    Vector v(x.size());
                    for (double& e : v) e = rng.normal();
                    return Attribution{v};
                  }};
  const Net net = init_net({d, {8}, 2}, 5);
  EstimatorConfig cfg;
  cfg.id = EstimatorId::kModelParameterRandomisation;
  double total = 0.0;
  for (std::size_t s = 0; s < 20; ++s) {
    Case c{net, Vector(d, 0.5), noise(net, Vector(d, 0.5), 0)};
    c.explainer = noise;
    c.sample = s;
    total += std::fabs(*c.run(cfg).value);
  }
  EXPECT_LE(total / 20.0, 0.1);
}

TEST(ModelParameterRandomisation, OneLayerNetEqualsSingleCorrelation) {
  const Net net({Layer::dense(5, 2, {1, -2, 0.5, 3, -1, 0.2, 0.1, -0.3, 0.4, 2}, {0.1, -0.1})});
  const Vector x{0.3, 0.1, 0.9, 0.5, 0.7};
  Case c{net, x, Attribution{}};
  c.explainer = raw_gradient();
  c.attr = c.explainer(net, x, 0);
  // Redraw the only layer the way the estimator does: N(mean, population sd).
  const Layer& l = net.layers()[0];
  Vector params(l.weights);
  params.insert(params.end(), l.bias.begin(), l.bias.end());
  const double mu = std::accumulate(params.begin(), params.end(), 0.0) / static_cast<double>(params.size());
  double var = 0.0;
  for (double p : params) var += (p - mu) * (p - mu);
  const double sd = std::sqrt(var / static_cast<double>(params.size()));
  Rng rng = estimator_stream(c, 1);
  Layer redrawn = l;
  for (double& w : redrawn.weights) w = rng.normal(mu, sd);
  for (double& b : redrawn.bias) b = rng.normal(mu, sd);
  const Vector row(redrawn.weights.begin(), redrawn.weights.begin() + 5);
  EstimatorConfig cfg;
  cfg.id = EstimatorId::kModelParameterRandomisation;
  EXPECT_NEAR(*c.run(cfg).value, *stats::spearman(c.attr.values, row), 1e-12);
}

TEST(RandomLogit, ClassIndependentExplainerScoresOne) {
  EstimatorConfig cfg;
  cfg.id = EstimatorId::kRandomLogit;
  const Vector x{0.1, 0.4, 0.3, 0.8};
  Case c{init_net({4, {5}, 3}, 4), x, Attribution{x}};
  c.explainer = identity_explainer();
  EXPECT_NEAR(*c.run(cfg).value, 1.0, 1e-12);
}

TEST(RandomLogit, OrthogonalRowsHandSpearman) {
  // rows [1,0,2,0] and [0,3,0,1]: ranks [3,1.5,4,1.5] vs [1.5,4,1.5,3] -> -4 / 4.5
  const Net net({Layer::dense(4, 2, {1, 0, 2, 0, 0, 3, 0, 1}, {0, 0})});
  Case c{net, Vector{0.5, 0.5, 0.5, 0.5}, Attribution{Vector{1, 0, 2, 0}}};
  c.explainer = raw_gradient();
  EstimatorConfig cfg;
  cfg.id = EstimatorId::kRandomLogit;
  EXPECT_NEAR(*c.run(cfg).value, -4.0 / 4.5, 1e-12);
}

TEST(RandomLogit, OtherClassNeverThePredictedOne) {
  auto asked = std::make_shared<std::vector<int>>();
  Explainer recorder{"recorder", [asked](const Net&, std::span<const double> x, int label) {
                       asked->push_back(label);
                       return Attribution{Vector(x.begin(), x.end())};
                     }};
  EstimatorConfig cfg;
  cfg.id = EstimatorId::kRandomLogit;
  std::set<int> seen;
  for (std::size_t s = 0; s < 200; ++s) {
    Case c{init_net({3, {}, 4}, 1), Vector{0.1, 0.2, 0.3}, Attribution{Vector{0.1, 0.2, 0.3}}};
    c.explainer = recorder;
    c.label = static_cast<int>(s % 4);
    c.sample = s;
    asked->clear();
    c.run(cfg);
    ASSERT_EQ(asked->size(), 1u);
    EXPECT_NE(asked->front(), c.label);
    seen.insert(asked->front());
  }
  EXPECT_EQ(seen.size(), 4u);
}

TEST(RandomLogit, SingleClassIsConfigError) {
  EstimatorConfig cfg;
  cfg.id = EstimatorId::kRandomLogit;
  Case c{init_net({2, {}, 1}, 1), Vector{0.1, 0.2}, Attribution{Vector{1, 2}}};
  c.explainer = identity_explainer();
  EXPECT_THROW(c.run(cfg), ConfigError);
}

TEST(StochasticEstimators, DeterministicForFixedSeed) {
  const Net net = init_net({6, {5}, 3}, 8);
  const Vector x{0.1, 0.9, 0.4, 0.3, 0.6, 0.8};
  Case c{net, x, Attribution{}};
  c.explainer = raw_gradient();
  c.attr = c.explainer(net, x, 2);
  c.label = 2;
  for (EstimatorId id : {EstimatorId::kFaithfulnessCorrelation, EstimatorId::kMaxSensitivity,
                         EstimatorId::kLocalLipschitz, EstimatorId::kModelParameterRandomisation,
                         EstimatorId::kRandomLogit, EstimatorId::kPixelFlipping}) {
    EstimatorConfig cfg;
    cfg.id = id;
    EXPECT_EQ(c.run(cfg).value, c.run(cfg).value) << to_string(id);
  }
}

TEST(Estimators, NeverLeakNaN) {
  Rng rng(31);
  const std::size_t d = 9;
  for (int trial = 0; trial < 30; ++trial) {
    const Net net = init_net({d, {4}, 2}, static_cast<std::uint64_t>(trial));
    Vector x(d), attr(d), mask(d, 0.0);
    for (double& v : x) v = rng.uniform();
    for (double& v : attr) v = rng.uniform() < 0.5 ? 0.0 : rng.normal();
    mask[rng.below(d)] = 1.0;
    Case c{net, x, Attribution{attr}, mask};
    c.explainer = raw_gradient();
    for (EstimatorId id : kAllEstimators) {
      EstimatorConfig cfg;
      cfg.id = id;
      const Estimate e = c.run(cfg);
      EXPECT_EQ(e.estimator_id, id);
      EXPECT_EQ(e.direction, direction_of(id));
      if (e.defined()) {
        EXPECT_TRUE(std::isfinite(*e.value)) << to_string(id);
      }
    }
  }
}

TEST(AdversarialDeterministic, SameValueForEveryCall) {
  Case c = map_case({1, 2, 3});
  for (std::size_t s = 0; s < 100; ++s) {
    c.sample = s;
    EvalContext a = c.ctx();
    EvalContext b = c.ctx();
    b.perturbed = true;
    b.draw = 7;
    const double va = *adversarial_deterministic(a).value;
    EXPECT_EQ(va, *adversarial_deterministic(b).value);
    EXPECT_GE(va, 0.0);
    EXPECT_LT(va, 1.0);
  }
}

TEST(AdversarialShift, UnperturbedFarBelowPerturbed) {
  Case c = map_case({1, 2, 3});
  double perturbed_sum = 0.0;
  for (std::size_t s = 0; s < 1000; ++s) {
    c.sample = s;
    EvalContext ctx = c.ctx();
    EXPECT_LT(*adversarial_distribution_shift(ctx).value, -0.5);
    ctx.perturbed = true;
    ctx.draw = 1 + s % 5;
    perturbed_sum += *adversarial_distribution_shift(ctx).value;
  }
  EXPECT_GE(perturbed_sum / 1000, -1.0);
  EXPECT_LE(perturbed_sum / 1000, 2.0);
}

TEST(EstimatorConfig, RejectsInvalid) {
  EstimatorConfig cfg;
  cfg.fc_runs = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.robustness_runs = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.id = EstimatorId::kPixelFlipping;
  cfg.pf_step_size = 20;
  EXPECT_THROW(map_case({1, 2, 3}).run(cfg), ConfigError);
}
