#pragma once

// Report files: results.json (everything), summary.csv (one row per
// estimator x test) and areagraph.csv (2-D polygon coordinates).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "metaeval/config.hpp"
#include "metaeval/consistency.hpp"
#include "metaeval/error.hpp"

namespace metaeval {

struct RunInfo {
  std::string command = "benchmark";
  std::uint64_t master_seed = 0;
  std::uint64_t dataset_seed = 0;
  std::uint64_t model_seed = 0;
  std::size_t samples = 0;
  std::size_t features = 0;
  Bounds bounds;
  double model_accuracy = 0.0;
};

struct Report {
  RunInfo info;
  RunConfig config;
  std::vector<MetaSummary> results;
};

/// Vertices of the area polygon: IAC_NR up, IEC_NR right, IAC_AR down,
/// IEC_AR left.
struct AreaGraph {
  double iac_nr_x, iac_nr_y, iec_nr_x, iec_nr_y, iac_ar_x, iac_ar_y, iec_ar_x, iec_ar_y;
  double area;
};

inline AreaGraph area_graph(const MetaVector& m) {
  const double a = m.iac_nr, b = m.iec_nr, c = m.iac_ar, d = m.iec_ar;
  return {0.0, a, b, 0.0, 0.0, -c, -d, 0.0, 0.5 * (a * b + b * c + c * d + d * a)};
}

/// Mean MC over the tests run for each estimator label.
inline std::map<std::string, double> mc_bar(const std::vector<MetaSummary>& results) {
  std::map<std::string, std::pair<double, int>> acc;
  for (const auto& s : results) {
    auto& [sum, n] = acc[s.label];
    sum += s.mc_mean;
    ++n;
  }
  std::map<std::string, double> out;
  for (const auto& [k, v] : acc) out[k] = v.first / v.second;
  return out;
}

namespace report_detail {

inline std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string s = buf;
  return s == "-0.000000" ? "0.000000" : s;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline Json meta_json(const MetaVector& m) {
  return {{"iac_nr", m.iac_nr}, {"iac_ar", m.iac_ar}, {"iec_nr", m.iec_nr}, {"iec_ar", m.iec_ar}, {"mc", m.mc()}};
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw RunError("cannot write '" + p.string() + "'");
  out << content;
  if (!out) throw RunError("failed writing '" + p.string() + "'");
}

}  // namespace report_detail

inline Json results_json(const Report& r) {
  using namespace report_detail;
  Json j;
  j["command"] = r.info.command;
  j["seeds"] = {{"master", r.info.master_seed}, {"dataset", r.info.dataset_seed}, {"model", r.info.model_seed}};
  j["dataset"] = {{"samples", r.info.samples},
                  {"features", r.info.features},
                  {"min", r.info.bounds.min},
                  {"max", r.info.bounds.max},
                  {"mean", r.info.bounds.mean}};
  j["model_accuracy"] = r.info.model_accuracy;
  const auto bars = mc_bar(r.results);
  j["results"] = Json::array();
  for (const auto& s : r.results) {
    Json e;
    e["estimator"] = s.label;
    e["config"] = estimator_json({s.label, s.estimator});
    e["category"] = std::string(to_string(category_of(s.estimator.id)));
    e["direction"] = std::string(to_string(s.estimator.direction()));
    e["test"] = std::string(to_string(s.test));
    e["mean"] = meta_json(s.mean);
    e["mean"]["mc"] = s.mc_mean;
    e["std"] = meta_json(s.stdev);
    e["std"]["mc"] = s.mc_std;
    e["mc_bar"] = bars.at(s.label);
    e["iterations"] = Json::array();
    for (const auto& it : s.iterations) {
      const CellDiagnostics& d = it.diagnostics;
      e["iterations"].push_back({{"seed", it.seed},
                                 {"meta_vector", meta_json(it.m)},
                                 {"exclusions",
                                  {{"evaluations", d.evaluations},
                                   {"undefined", d.undefined},
                                   {"dropped_nr", d.dropped_nr},
                                   {"dropped_ar", d.dropped_ar},
                                   {"compliant_nr", d.compliant_nr},
                                   {"compliant_ar", d.compliant_ar},
                                   {"model_attempts", d.model_attempts}}}});
    }
    j["results"].push_back(std::move(e));
  }
  j["config"] = to_json(r.config);
  return j;
}

inline std::string summary_csv(const std::vector<MetaSummary>& results) {
  using namespace report_detail;
  std::ostringstream os;
  os << "estimator,test,mc_bar,mc,mc_std,iac_nr,iac_nr_std,iac_ar,iac_ar_std,iec_nr,iec_nr_std,iec_ar,iec_ar_std\n";
  const auto bars = mc_bar(results);
  for (const auto& s : results) {
    os << csv_field(s.label) << ',' << to_string(s.test) << ',' << num(bars.at(s.label)) << ',' << num(s.mc_mean)
       << ',' << num(s.mc_std) << ',' << num(s.mean.iac_nr) << ',' << num(s.stdev.iac_nr) << ','
       << num(s.mean.iac_ar) << ',' << num(s.stdev.iac_ar) << ',' << num(s.mean.iec_nr) << ','
       << num(s.stdev.iec_nr) << ',' << num(s.mean.iec_ar) << ',' << num(s.stdev.iec_ar) << '\n';
  }
  return os.str();
}

inline std::string areagraph_csv(const std::vector<MetaSummary>& results) {
  using namespace report_detail;
  std::ostringstream os;
  os << "estimator,test,iac_nr_x,iac_nr_y,iec_nr_x,iec_nr_y,iac_ar_x,iac_ar_y,iec_ar_x,iec_ar_y,area\n";
  for (const auto& s : results) {
    const AreaGraph g = area_graph(s.mean);
    os << csv_field(s.label) << ',' << to_string(s.test) << ',' << num(g.iac_nr_x) << ',' << num(g.iac_nr_y) << ','
       << num(g.iec_nr_x) << ',' << num(g.iec_nr_y) << ',' << num(g.iac_ar_x) << ',' << num(g.iac_ar_y) << ','
       << num(g.iec_ar_x) << ',' << num(g.iec_ar_y) << ',' << num(g.area) << '\n';
  }
  return os.str();
}

/// Writes results.json, summary.csv and areagraph.csv into `dir`, creating it
/// if needed. Output bytes depend only on the report contents.
inline void write_report(const Report& r, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw RunError("cannot create output directory '" + dir + "': " + ec.message());
  const std::filesystem::path base(dir);
  report_detail::write_file(base / "results.json", results_json(r).dump(2) + "\n");
  report_detail::write_file(base / "summary.csv", summary_csv(r.results));
  report_detail::write_file(base / "areagraph.csv", areagraph_csv(r.results));
}

}  // namespace metaeval
