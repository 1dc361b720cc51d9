#pragma once

// Intra- and inter-consistency criteria, the meta-evaluation vector, and the
// iteration driver that runs every estimator under every perturbation test.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "metaeval/dataset.hpp"
#include "metaeval/error.hpp"
#include "metaeval/estimators.hpp"
#include "metaeval/explain.hpp"
#include "metaeval/net.hpp"
#include "metaeval/perturb.hpp"
#include "metaeval/rng.hpp"
#include "metaeval/stats.hpp"

namespace metaeval {

/// Mean over the K columns of the two-sided Wilcoxon signed-rank p-value
/// between the unperturbed scores and column k, using retained pairs with a
/// defined unperturbed score. Columns with fewer than two such pairs are
/// skipped; a run error is raised when every column is skipped.
inline double iac(std::span<const std::optional<double>> unperturbed, const Matrix& perturbed,
                  std::span<const std::uint8_t> retained) {
  if (unperturbed.size() != perturbed.rows) throw ShapeError("iac: unperturbed and perturbed differ in N");
  if (retained.size() != perturbed.rows * perturbed.cols) throw ShapeError("iac: retained mask has wrong size");
  double total = 0.0;
  std::size_t columns = 0;
  Vector a;
  Vector b;
  for (std::size_t k = 0; k < perturbed.cols; ++k) {
    a.clear();
    b.clear();
    for (std::size_t i = 0; i < perturbed.rows; ++i) {
      if (!unperturbed[i] || !retained[i * perturbed.cols + k]) continue;
      a.push_back(*unperturbed[i]);
      b.push_back(perturbed(i, k));
    }
    if (a.size() < 2) continue;
    total += stats::wilcoxon_signed_rank(a, b).p_value;
    ++columns;
  }
  if (columns == 0) throw RunError("iac: no column has two retained pairs");
  return total / static_cast<double>(columns);
}

inline double iac(std::span<const double> unperturbed, const Matrix& perturbed) {
  std::vector<std::optional<double>> u(unperturbed.begin(), unperturbed.end());
  std::vector<std::uint8_t> all(perturbed.rows * perturbed.cols, 1);
  return iac(u, perturbed, all);
}

inline double iac(const EstimateMatrix& m) { return iac(m.unperturbed, m.perturbed, m.retained); }

namespace consistency_detail {

inline void check_pair(const Matrix& a, const Matrix& b, const char* who) {
  if (a.rows != b.rows || a.cols != b.cols) throw ShapeError(std::string(who) + ": matrices differ in shape");
  if (a.rows == 0 || a.cols == 0) throw InputError(std::string(who) + ": empty matrix");
}

}  // namespace consistency_detail

/// Fraction of (sample, method) cells whose descending rank within the row is
/// the same in both matrices. Ties resolve to the lower method index.
inline double iec_minor(const Matrix& qbar, const Matrix& qbar_m) {
  consistency_detail::check_pair(qbar, qbar_m, "iec_minor");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < qbar.rows; ++i) {
    const auto r0 = stats::rank_descending(qbar.row(i));
    const auto r1 = stats::rank_descending(qbar_m.row(i));
    for (std::size_t j = 0; j < qbar.cols; ++j) hits += r0[j] == r1[j] ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(qbar.rows * qbar.cols);
}

/// Fraction of cells where the perturbed mean is strictly worse than the
/// unperturbed score: lower for higher_better estimators, higher otherwise.
inline double iec_disruptive(const Matrix& qbar, const Matrix& qbar_d, Direction direction) {
  consistency_detail::check_pair(qbar, qbar_d, "iec_disruptive");
  std::size_t hits = 0;
  for (std::size_t c = 0; c < qbar.data.size(); ++c) {
    const bool worse = direction == Direction::kHigherBetter ? qbar_d.data[c] < qbar.data[c]
                                                             : qbar_d.data[c] > qbar.data[c];
    hits += worse ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(qbar.data.size());
}

/// [IAC_NR, IAC_AR, IEC_NR, IEC_AR] with IAC_AR stored reverse-scored.
struct MetaVector {
  double iac_nr = 0.0;
  double iac_ar = 0.0;
  double iec_nr = 0.0;
  double iec_ar = 0.0;

  double mc() const { return (iac_nr + iac_ar + iec_nr + iec_ar) / 4.0; }
  std::array<double, 4> entries() const { return {iac_nr, iac_ar, iec_nr, iec_ar}; }
  bool operator==(const MetaVector&) const = default;
};

inline MetaVector meta_vector(double iac_nr, double iac_ar_raw, double iec_nr, double iec_ar) {
  return {iac_nr, 1.0 - iac_ar_raw, iec_nr, iec_ar};
}

/// Per-sample score tables used by the inter-consistency criteria.
struct ScoreTables {
  Matrix qbar;       // unperturbed, N' x L
  Matrix qbar_pert;  // mean over retained draws, N' x L
  std::size_t dropped = 0;
};

/// Builds Qbar and the perturbed means from one EstimateMatrix per method.
/// A sample enters only if every method has a defined unperturbed score and
/// at least one retained draw.
inline ScoreTables score_tables(std::span<const EstimateMatrix> per_method) {
  if (per_method.empty()) throw InputError("score_tables: no methods");
  const std::size_t n = per_method.front().samples();
  const std::size_t l = per_method.size();
  std::vector<std::size_t> keep;
  Matrix means(n, l);
  for (std::size_t i = 0; i < n; ++i) {
    bool ok = true;
    for (std::size_t j = 0; j < l && ok; ++j) {
      const EstimateMatrix& m = per_method[j];
      if (!m.unperturbed[i]) {
        ok = false;
        break;
      }
      // Running mean: identical draws reproduce their value bit-for-bit.
      double mean = 0.0;
      std::size_t count = 0;
      for (std::size_t k = 0; k < m.draws(); ++k) {
        if (!m.is_retained(i, k)) continue;
        ++count;
        mean += (m.perturbed(i, k) - mean) / static_cast<double>(count);
      }
      if (count == 0) ok = false;
      else means(i, j) = mean;
    }
    if (ok) keep.push_back(i);
  }
  ScoreTables t{Matrix(keep.size(), l), Matrix(keep.size(), l), n - keep.size()};
  for (std::size_t r = 0; r < keep.size(); ++r) {
    for (std::size_t j = 0; j < l; ++j) {
      t.qbar(r, j) = *per_method[j].unperturbed[keep[r]];
      t.qbar_pert(r, j) = means(keep[r], j);
    }
  }
  return t;
}

/// IAC averaged over the explanation methods.
inline double mean_iac(std::span<const EstimateMatrix> per_method) {
  double total = 0.0;
  for (const auto& m : per_method) total += iac(m);
  return total / static_cast<double>(per_method.size());
}

struct CellDiagnostics {
  std::size_t evaluations = 0;
  std::size_t undefined = 0;
  std::size_t dropped_nr = 0;  // samples excluded from IEC_NR
  std::size_t dropped_ar = 0;  // samples excluded from IEC_AR
  std::size_t compliant_nr = 0;
  std::size_t compliant_ar = 0;
  int model_attempts = 0;
};

struct IterationResult {
  MetaVector m;
  std::uint64_t seed = 0;
  CellDiagnostics diagnostics;
};

/// One estimator under one perturbation test, aggregated over iterations.
struct MetaSummary {
  std::string label;
  EstimatorConfig estimator;
  PerturbSpace test = PerturbSpace::kInput;
  std::vector<IterationResult> iterations;
  MetaVector mean;
  MetaVector stdev;
  double mc_mean = 0.0;
  double mc_std = 0.0;
};

struct MetaOptions {
  std::vector<PerturbSpace> tests{PerturbSpace::kInput, PerturbSpace::kModel};
  // Noise parameters; `space`, `strength` and `seed` are filled in per cell.
  PerturbSpec nr = PerturbSpec::noise_resilience(PerturbSpace::kInput);
  PerturbSpec ar = PerturbSpec::adversary_reactivity(PerturbSpace::kInput);
  int k = 5;
  int iterations = 3;
  std::uint64_t master_seed = 0;
  int jobs = 1;
  double max_undefined_fraction = 0.1;
  double max_dropped_fraction = 0.2;

  void validate() const {
    if (tests.empty()) throw ConfigError("meta-evaluation: no tests selected");
    if (k < 1) throw ConfigError("meta-evaluation: K must be >= 1");
    if (iterations < 1) throw ConfigError("meta-evaluation: iterations must be >= 1");
    if (jobs < 1) throw ConfigError("meta-evaluation: jobs must be >= 1");
    nr.validate();
    ar.validate();
  }
};

struct EstimatorEntry {
  std::string label;
  EstimatorConfig config;

  bool operator==(const EstimatorEntry&) const = default;
};

namespace consistency_detail {

inline std::string cell_label(const std::string& estimator, PerturbSpace test) {
  return estimator + "/" + std::string(to_string(test));
}

/// Rethrows the active exception prefixed with the cell label, keeping
/// configuration errors distinguishable from runtime ones.
[[noreturn]] inline void rethrow_labelled(const std::string& label) {
  try {
    throw;
  } catch (const ConfigError& e) {
    throw ConfigError(label + ": " + e.what());
  } catch (const PerturbationInfeasibleError& e) {
    throw PerturbationInfeasibleError(label + ": " + e.what(), e.achieved_fraction);
  } catch (const std::exception& e) {
    throw RunError(label + ": " + e.what());
  }
}

}  // namespace consistency_detail

inline std::uint64_t iteration_seed(std::uint64_t master, int iteration, PerturbSpace test) {
  return derive_seed(master, StreamTag::kIteration,
                     {static_cast<std::uint64_t>(iteration), static_cast<std::uint64_t>(test)});
}

/// One outer repetition: unperturbed scores, minor and disruptive collections,
/// then IAC/IEC for both failure modes.
inline IterationResult run_iteration(const Net& net, const Dataset& data, const std::vector<Explainer>& methods,
                                     const EstimatorConfig& estimator, PerturbSpace test,
                                     const MetaOptions& opts, int iteration) {
  if (methods.size() < 2) throw ConfigError("meta-evaluation: at least two explanation methods are required");
  IterationResult out;
  out.seed = iteration_seed(opts.master_seed, iteration, test);
  const EvaluationSetup setup{net, data, methods, estimator,
                              derive_seed(out.seed, StreamTag::kEstimator, {static_cast<std::uint64_t>(estimator.id)})};
  PerturbSpec nr = opts.nr;
  nr.space = test;
  nr.strength = Strength::kMinor;
  nr.seed = derive_seed(out.seed, test == PerturbSpace::kInput ? StreamTag::kIpt : StreamTag::kMpt, {0});
  PerturbSpec ar = opts.ar;
  ar.space = test;
  ar.strength = Strength::kDisruptive;
  ar.seed = derive_seed(out.seed, test == PerturbSpace::kInput ? StreamTag::kIpt : StreamTag::kMpt, {1});

  const UnperturbedScores base = compute_unperturbed(setup);
  const CollectResult minor = collect(setup, base, nr, opts.k);
  const CollectResult disruptive = collect(setup, base, ar, opts.k);

  CellDiagnostics& dg = out.diagnostics;
  // Unperturbed evaluations are counted by both collections; count them once.
  const std::size_t base_evals = data.size() * methods.size();
  std::size_t base_undefined = 0;
  for (const auto& col : base.scores) base_undefined += static_cast<std::size_t>(std::count(col.begin(), col.end(), std::nullopt));
  dg.evaluations = minor.stats.evaluations + disruptive.stats.evaluations - base_evals;
  dg.undefined = minor.stats.undefined + disruptive.stats.undefined - base_undefined;
  dg.compliant_nr = minor.stats.compliant_cells;
  dg.compliant_ar = disruptive.stats.compliant_cells;
  dg.model_attempts = minor.stats.model_attempts + disruptive.stats.model_attempts;
  if (static_cast<double>(dg.undefined) > opts.max_undefined_fraction * static_cast<double>(dg.evaluations)) {
    throw RunError(std::to_string(dg.undefined) + " of " + std::to_string(dg.evaluations) +
                   " estimates are undefined (limit " + std::to_string(opts.max_undefined_fraction) + ")");
  }

  const ScoreTables t_nr = score_tables(minor.per_method);
  const ScoreTables t_ar = score_tables(disruptive.per_method);
  dg.dropped_nr = t_nr.dropped;
  dg.dropped_ar = t_ar.dropped;
  const double limit = opts.max_dropped_fraction * static_cast<double>(data.size());
  if (static_cast<double>(t_nr.dropped) > limit || static_cast<double>(t_ar.dropped) > limit) {
    throw RunError("too many samples excluded from inter-consistency (minor " + std::to_string(t_nr.dropped) +
                   ", disruptive " + std::to_string(t_ar.dropped) + " of " + std::to_string(data.size()) + ")");
  }
  out.m = meta_vector(mean_iac(minor.per_method), mean_iac(disruptive.per_method),
                      iec_minor(t_nr.qbar, t_nr.qbar_pert),
                      iec_disruptive(t_ar.qbar, t_ar.qbar_pert, estimator.direction()));
  return out;
}

inline void summarise(MetaSummary& s) {
  const std::size_t n = s.iterations.size();
  std::array<Vector, 5> cols;
  for (const auto& it : s.iterations) {
    const auto e = it.m.entries();
    for (std::size_t c = 0; c < 4; ++c) cols[c].push_back(e[c]);
    cols[4].push_back(it.m.mc());
  }
  auto sd = [n](const Vector& v) { return n > 1 ? stats::sample_std(v) : 0.0; };
  s.mean = {stats::mean(cols[0]), stats::mean(cols[1]), stats::mean(cols[2]), stats::mean(cols[3])};
  s.stdev = {sd(cols[0]), sd(cols[1]), sd(cols[2]), sd(cols[3])};
  s.mc_mean = stats::mean(cols[4]);
  s.mc_std = sd(cols[4]);
}

/// Runs every estimator under every requested test for opts.iterations
/// repetitions. Cells are distributed over opts.jobs threads; results do not
/// depend on the thread count. Output order: estimators in input order, tests
/// in opts.tests order within each estimator.
inline std::vector<MetaSummary> run_meta_evaluation(const Net& net, const Dataset& data,
                                                    const std::vector<Explainer>& methods,
                                                    const std::vector<EstimatorEntry>& estimators,
                                                    const MetaOptions& opts) {
  opts.validate();
  if (methods.size() < 2) throw ConfigError("meta-evaluation: at least two explanation methods are required");
  if (estimators.empty()) throw ConfigError("meta-evaluation: no estimators configured");
  for (const auto& e : estimators) e.config.validate();

  std::vector<MetaSummary> out;
  for (const auto& e : estimators) {
    for (PerturbSpace t : opts.tests) {
      MetaSummary s;
      s.label = e.label.empty() ? std::string(to_string(e.config.id)) : e.label;
      s.estimator = e.config;
      s.test = t;
      s.iterations.resize(static_cast<std::size_t>(opts.iterations));
      out.push_back(std::move(s));
    }
  }
  const std::size_t tasks = out.size() * static_cast<std::size_t>(opts.iterations);
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(tasks);
  auto worker = [&] {
    for (std::size_t t = next++; t < tasks; t = next++) {
      MetaSummary& s = out[t / static_cast<std::size_t>(opts.iterations)];
      const int it = static_cast<int>(t % static_cast<std::size_t>(opts.iterations));
      try {
        try {
          s.iterations[static_cast<std::size_t>(it)] = run_iteration(net, data, methods, s.estimator, s.test, opts, it);
        } catch (...) {
          consistency_detail::rethrow_labelled(consistency_detail::cell_label(s.label, s.test));
        }
      } catch (...) {
        errors[t] = std::current_exception();
      }
    }
  };
  const auto threads = std::min<std::size_t>(static_cast<std::size_t>(opts.jobs), tasks);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  // First failure in task order, so the reported error does not depend on scheduling.
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (auto& s : out) summarise(s);
  return out;
}

}  // namespace metaeval
