#pragma once

// Command implementations behind the CLI verbs. Each returns an exit code;
// errors propagate as exceptions and are mapped to codes by run_command.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "metaeval/config.hpp"
#include "metaeval/consistency.hpp"
#include "metaeval/error.hpp"
#include "metaeval/model_io.hpp"
#include "metaeval/pipeline.hpp"
#include "metaeval/report.hpp"
#include "metaeval/stats.hpp"

namespace metaeval {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitRuntime = 2, kExitSanity = 3 };

struct CommandIo {
  std::ostream& out;  // human-readable results
  std::ostream& log;  // progress
};

inline std::string output_dir(const RunConfig& c, const std::string& override_dir) {
  return override_dir.empty() ? c.output : override_dir;
}

inline std::vector<MetaSummary> run_benchmark(const RunConfig& c, const Workspace& w, CommandIo io) {
  if (c.estimators.empty()) throw ConfigError("no estimators configured");
  if (w.methods.size() < 2) throw ConfigError("at least two explanation methods are required");
  io.log << "meta-evaluating " << c.estimators.size() << " estimators x " << c.tests.size() << " tests, K=" << c.k
         << ", iterations=" << c.iterations << "\n";
  return run_meta_evaluation(w.net, w.data.eval, w.methods, c.estimators, meta_options(c));
}

inline void print_table(const std::vector<MetaSummary>& results, std::ostream& out) {
  const auto bars = mc_bar(results);
  char line[256];
  std::snprintf(line, sizeof line, "%-36s %-4s %7s %15s %15s %15s %15s %15s\n", "estimator", "test", "MCbar", "MC",
                "IAC_NR", "IAC_AR", "IEC_NR", "IEC_AR");
  out << line;
  auto cell = [](double m, double s) {
    char b[32];
    std::snprintf(b, sizeof b, "%.3f +- %.3f", m, s);
    return std::string(b);
  };
  for (const auto& s : results) {
    std::snprintf(line, sizeof line, "%-36s %-4s %7.3f %15s %15s %15s %15s %15s\n", s.label.c_str(),
                  std::string(to_string(s.test)).c_str(), bars.at(s.label), cell(s.mc_mean, s.mc_std).c_str(),
                  cell(s.mean.iac_nr, s.stdev.iac_nr).c_str(), cell(s.mean.iac_ar, s.stdev.iac_ar).c_str(),
                  cell(s.mean.iec_nr, s.stdev.iec_nr).c_str(), cell(s.mean.iec_ar, s.stdev.iec_ar).c_str());
    out << line;
  }
}

inline int cmd_benchmark(const RunConfig& c, const std::string& out_dir, CommandIo io) {
  const Workspace w = prepare(c, io.log, "benchmark");
  Report r{w.info, c, run_benchmark(c, w, io)};
  const std::string dir = output_dir(c, out_dir);
  write_report(r, dir);
  print_table(r.results, io.out);
  io.log << "wrote " << dir << "/results.json, summary.csv, areagraph.csv\n";
  return kExitOk;
}

// ---------------------------------------------------------------- sanity

struct SanityCheck {
  std::string name;
  double achieved = 0.0;
  std::string expected;
  bool pass = false;
};

struct SanityOutcome {
  std::vector<MetaSummary> results;
  std::vector<SanityCheck> checks;
  bool pass = true;
};

/// Deterministic and shifted adversarial estimators, `sanity.methods`
/// synthetic explainers, both tests. The deterministic estimator must hit
/// [1, 0, 1, 0] exactly in every iteration; the shifted one must stay within
/// IAC_NR <= 0.05, IAC_AR >= 0.95, IEC_NR in [0.23, 0.27], IEC_AR == 0.
inline SanityOutcome run_sanity(const RunConfig& c, const Net& net, const Dataset& data, CommandIo io) {
  RunConfig sc = c;
  sc.k = c.sanity.k;
  sc.iterations = c.sanity.iterations;
  sc.tests = {PerturbSpace::kInput, PerturbSpace::kModel};
  const std::vector<EstimatorEntry> estimators{
      {"adversarial_deterministic", {.id = EstimatorId::kAdversarialDeterministic}},
      {"adversarial_shift", {.id = EstimatorId::kAdversarialShift}}};
  const auto methods = synthetic_explainers(c.sanity.methods, c.master_seed);
  io.log << "sanity: " << methods.size() << " synthetic methods, K=" << sc.k << ", iterations=" << sc.iterations
         << ", N=" << data.size() << "\n";
  SanityOutcome o;
  o.results = run_meta_evaluation(net, data, methods, estimators, meta_options(sc));
  for (const auto& s : o.results) {
    const std::string t(to_string(s.test));
    auto add = [&](const std::string& what, double v, const std::string& expected, bool ok) {
      o.checks.push_back({s.label + "/" + t + " " + what, v, expected, ok});
      o.pass = o.pass && ok;
    };
    if (s.estimator.id == EstimatorId::kAdversarialDeterministic) {
      bool exact = true;
      for (const auto& it : s.iterations) exact = exact && it.m == MetaVector{1.0, 0.0, 1.0, 0.0};
      add("IAC_NR", s.mean.iac_nr, "1.0 exactly", exact && s.mean.iac_nr == 1.0);
      add("IAC_AR", s.mean.iac_ar, "0.0 exactly", exact && s.mean.iac_ar == 0.0);
      add("IEC_NR", s.mean.iec_nr, "1.0 exactly", exact && s.mean.iec_nr == 1.0);
      add("IEC_AR", s.mean.iec_ar, "0.0 exactly", exact && s.mean.iec_ar == 0.0);
    } else {
      add("IAC_NR", s.mean.iac_nr, "<= 0.05", s.mean.iac_nr <= 0.05);
      add("IAC_AR", s.mean.iac_ar, ">= 0.95", s.mean.iac_ar >= 0.95);
      add("IEC_NR", s.mean.iec_nr, "in [0.23, 0.27]", s.mean.iec_nr >= 0.23 && s.mean.iec_nr <= 0.27);
      add("IEC_AR", s.mean.iec_ar, "0.0 exactly", s.mean.iec_ar == 0.0);
    }
  }
  return o;
}

inline int cmd_sanity(const RunConfig& c, const std::string& out_dir, CommandIo io) {
  DataSplits data = load_data(c);
  const Net net = obtain_model(c, data, io.log);
  const SanityOutcome o = run_sanity(c, net, data.eval, io);
  print_table(o.results, io.out);
  io.out << "\n";
  char line[256];
  for (const auto& ch : o.checks) {
    std::snprintf(line, sizeof line, "%-4s %-40s achieved %.6f expected %s\n", ch.pass ? "PASS" : "FAIL",
                  ch.name.c_str(), ch.achieved, ch.expected.c_str());
    io.out << line;
  }
  RunConfig echo = c;
  echo.k = c.sanity.k;
  echo.iterations = c.sanity.iterations;
  RunInfo info;
  info.command = "sanity";
  info.master_seed = c.master_seed;
  info.dataset_seed = data.seed;
  info.model_seed = model_seed(c);
  info.samples = data.eval.size();
  info.features = data.eval.dim();
  info.bounds = data.eval.bounds;
  info.model_accuracy = accuracy(net, data.eval);
  write_report({info, echo, o.results}, output_dir(c, out_dir));
  return o.pass ? kExitOk : kExitSanity;
}

// ---------------------------------------------------------------- hpo

struct HpoRow {
  std::size_t rank = 0;
  std::size_t cell = 0;
  std::string label;
  double mc_bar = 0.0;
};

struct HpoOutcome {
  std::vector<MetaSummary> results;
  std::vector<HpoRow> ranked;  // best first
};

/// Ranks cells by MC averaged over the configured tests, descending; ties keep
/// grid order.
inline std::vector<HpoRow> rank_cells(const std::vector<EstimatorEntry>& cells,
                                      const std::vector<MetaSummary>& results) {
  const auto bars = mc_bar(results);
  std::vector<HpoRow> rows;
  for (std::size_t i = 0; i < cells.size(); ++i) rows.push_back({0, i, cells[i].label, bars.at(cells[i].label)});
  std::stable_sort(rows.begin(), rows.end(), [](const HpoRow& a, const HpoRow& b) { return a.mc_bar > b.mc_bar; });
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].rank = i + 1;
  return rows;
}

inline HpoOutcome run_hpo(const RunConfig& c, const Workspace& w, CommandIo io) {
  if (!c.hpo) throw ConfigError("hpo: missing 'hpo' table with 'base' and 'grid'");
  const auto cells = hpo_cells(*c.hpo);
  io.log << "hpo: " << cells.size() << " grid cells\n";
  HpoOutcome o;
  o.results = run_meta_evaluation(w.net, w.data.eval, w.methods, cells, meta_options(c));
  o.ranked = rank_cells(cells, o.results);
  return o;
}

inline int cmd_hpo(const RunConfig& c, const std::string& out_dir, CommandIo io) {
  const Workspace w = prepare(c, io.log, "hpo");
  const HpoOutcome o = run_hpo(c, w, io);
  const std::string dir = output_dir(c, out_dir);
  write_report({w.info, c, o.results}, dir);
  std::ostringstream csv;
  csv << "rank,cell,mc_bar\n";
  for (const auto& r : o.ranked) {
    csv << r.rank << ',' << report_detail::csv_field(r.label) << ',' << report_detail::num(r.mc_bar) << '\n';
    io.out << r.rank << "  " << report_detail::num(r.mc_bar) << "  " << r.label << "\n";
  }
  report_detail::write_file(std::filesystem::path(dir) / "hpo.csv", csv.str());
  io.out << "best: " << o.ranked.front().label << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- convergence

struct PairCorrelation {
  std::string a, b;
  Category category_a, category_b;
  std::optional<double> spearman;
};

struct ConvergenceOutcome {
  std::vector<MetaSummary> results;
  std::vector<PairCorrelation> pairs;
  std::optional<double> within_mean;
  std::optional<double> cross_mean;
};

/// Concatenated mean meta-vectors (tests in run order) per estimator label.
inline std::vector<std::pair<std::string, Vector>> meta_profiles(const std::vector<MetaSummary>& results) {
  std::vector<std::pair<std::string, Vector>> out;
  for (const auto& s : results) {
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& p) { return p.first == s.label; });
    if (it == out.end()) {
      out.emplace_back(s.label, Vector{});
      it = out.end() - 1;
    }
    const auto e = s.mean.entries();
    it->second.insert(it->second.end(), e.begin(), e.end());
  }
  return out;
}

/// Spearman correlation of every estimator pair's meta-evaluation profile,
/// averaged within and across categories. Pairs with a constant profile have
/// no correlation and are left out of the averages.
inline ConvergenceOutcome convergence(const std::vector<EstimatorEntry>& estimators,
                                      std::vector<MetaSummary> results) {
  ConvergenceOutcome o;
  const auto profiles = meta_profiles(results);
  auto category = [&](const std::string& label) {
    for (const auto& e : estimators) {
      if (e.label == label) return category_of(e.config.id);
    }
    return Category::kAdversarial;
  };
  Vector within, cross;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    for (std::size_t j = i + 1; j < profiles.size(); ++j) {
      PairCorrelation p{profiles[i].first, profiles[j].first, category(profiles[i].first),
                        category(profiles[j].first), stats::spearman(profiles[i].second, profiles[j].second)};
      if (p.spearman) (p.category_a == p.category_b ? within : cross).push_back(*p.spearman);
      o.pairs.push_back(std::move(p));
    }
  }
  if (!within.empty()) o.within_mean = stats::mean(within);
  if (!cross.empty()) o.cross_mean = stats::mean(cross);
  o.results = std::move(results);
  return o;
}

inline int cmd_convergence(const RunConfig& c, const std::string& out_dir, CommandIo io) {
  const Workspace w = prepare(c, io.log, "convergence");
  if (c.estimators.size() < 2) throw ConfigError("convergence: at least two estimators are required");
  ConvergenceOutcome o = convergence(c.estimators, run_benchmark(c, w, io));
  const std::string dir = output_dir(c, out_dir);
  write_report({w.info, c, o.results}, dir);
  auto opt = [](const std::optional<double>& v) { return v ? report_detail::num(*v) : std::string(); };
  std::ostringstream csv;
  csv << "estimator_a,estimator_b,category_a,category_b,same_category,spearman\n";
  for (const auto& p : o.pairs) {
    csv << report_detail::csv_field(p.a) << ',' << report_detail::csv_field(p.b) << ',' << to_string(p.category_a)
        << ',' << to_string(p.category_b) << ',' << (p.category_a == p.category_b ? 1 : 0) << ','
        << opt(p.spearman) << '\n';
  }
  csv << "# within_category_mean," << opt(o.within_mean) << "\n# cross_category_mean," << opt(o.cross_mean) << '\n';
  report_detail::write_file(std::filesystem::path(dir) / "convergence.csv", csv.str());
  io.out << "within-category mean spearman: " << (o.within_mean ? opt(o.within_mean) : "n/a") << "\n";
  io.out << "cross-category mean spearman:  " << (o.cross_mean ? opt(o.cross_mean) : "n/a") << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- train

inline int cmd_train(const RunConfig& c, const std::string& out_dir, CommandIo io) {
  if (!c.model.train) throw ConfigError("train: model.train is required");
  const DataSplits data = load_data(c);
  io.log << "training on " << data.train.size() << " samples for " << c.model.train->options.epochs << " epochs\n";
  const Net net = train_model(c, data);
  std::string path = c.model.path;
  if (path.empty() || !out_dir.empty()) {
    const std::string dir = output_dir(c, out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw RunError("cannot create output directory '" + dir + "': " + ec.message());
    path = (std::filesystem::path(dir) / "model.net").string();
  }
  save_model(net, path, {model_seed(c), "dataset " + c.dataset.kind + " seed " + std::to_string(data.seed)});
  char line[128];
  std::snprintf(line, sizeof line, "train accuracy %.4f\neval accuracy %.4f\n", accuracy(net, data.train),
                accuracy(net, data.eval));
  io.out << line;
  io.log << "wrote " << path << "\n";
  return kExitOk;
}

/// Runs `fn`, mapping exceptions to the documented exit codes.
inline int run_command(const std::function<int()>& fn, std::ostream& err) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace metaeval
