#pragma once

// Run configuration: a JSON document of nested tables, loaded with strict key
// checking, dotted-path overrides and a canonical serialisation.

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "metaeval/consistency.hpp"
#include "metaeval/dataset.hpp"
#include "metaeval/error.hpp"
#include "metaeval/estimators.hpp"
#include "metaeval/explain.hpp"
#include "metaeval/net.hpp"
#include "metaeval/perturb.hpp"

namespace metaeval {

using Json = nlohmann::json;

struct DatasetConfig {
  std::string kind = "blobs";  // "blobs" or "idx"
  std::string images;
  std::string labels;
  std::string train_images;  // optional separate training split (idx)
  std::string train_labels;
  std::size_t n = 256;
  std::size_t d = 16;
  int classes = 3;
  double cluster_std = 0.05;
  std::size_t sample_count = 0;  // 0: use every sample
  std::optional<std::uint64_t> seed;
  MaskPolicy masks = MaskPolicy::center_box(0.25);

  bool operator==(const DatasetConfig&) const = default;
};

struct TrainConfig {
  std::vector<std::size_t> hidden{16};
  TrainOptions options;
  std::optional<std::uint64_t> seed;

  bool operator==(const TrainConfig&) const = default;
};

struct ModelConfig {
  std::string path;
  std::optional<TrainConfig> train;

  bool operator==(const ModelConfig&) const = default;
};

struct ExplainerEntry {
  ExplainMethod method = ExplainMethod::kGradient;
  std::string name;
  ExplainerConfig config;

  bool operator==(const ExplainerEntry&) const = default;
};

struct SanityConfig {
  int methods = 4;
  int k = 10;
  int iterations = 5;

  bool operator==(const SanityConfig&) const = default;
};

/// Estimator grid: every combination of the axis values applied on top of
/// `base`. Axes are kept in key order.
struct HpoConfig {
  Json base = Json::object();
  std::vector<std::pair<std::string, std::vector<Json>>> axes;

  bool operator==(const HpoConfig&) const = default;
};

struct RunConfig {
  DatasetConfig dataset;
  ModelConfig model;
  std::vector<ExplainerEntry> explanations;
  std::vector<EstimatorEntry> estimators;
  std::vector<PerturbSpace> tests{PerturbSpace::kInput, PerturbSpace::kModel};
  PerturbSpec nr = PerturbSpec::noise_resilience(PerturbSpace::kInput);
  PerturbSpec ar = PerturbSpec::adversary_reactivity(PerturbSpace::kInput);
  int k = 5;
  int iterations = 3;
  std::uint64_t master_seed = 0;
  int jobs = 1;
  std::string output = "out";
  SanityConfig sanity;
  std::optional<HpoConfig> hpo;

  bool operator==(const RunConfig&) const = default;
};

namespace config_detail {

/// Collects problems across the whole document so a malformed file yields
/// one error listing everything.
struct Problems {
  std::vector<std::string> missing;
  std::vector<std::string> unknown;
  std::vector<std::string> invalid;

  void raise_if_any() const {
    if (missing.empty() && unknown.empty() && invalid.empty()) return;
    std::ostringstream os;
    os << "invalid configuration";
    auto list = [&os](const char* what, const std::vector<std::string>& v) {
      if (v.empty()) return;
      os << "\n  " << what << ":";
      for (const auto& s : v) os << ' ' << s;
    };
    list("missing required keys", missing);
    list("unknown keys", unknown);
    list("invalid values", invalid);
    throw ConfigError(os.str());
  }
};

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

class Table {
 public:
  Table(const Json& j, std::string path, Problems& p) : j_(j), path_(std::move(path)), p_(p) {
    if (!j_.is_object()) p_.invalid.push_back((path_.empty() ? "<root>" : path_) + " (expected a table)");
  }

  bool has(const std::string& key) const { return j_.is_object() && j_.contains(key) && !j_.at(key).is_null(); }

  const Json* child(const std::string& key) {
    seen_.insert(key);
    if (!j_.is_object() || !j_.contains(key)) return nullptr;
    return &j_.at(key);
  }

  template <typename T>
  void opt(const std::string& key, T& out) {
    const Json* c = child(key);
    if (!c) return;
    convert(*c, key, out);
  }

  template <typename T>
  void req(const std::string& key, T& out) {
    const Json* c = child(key);
    if (!c || c->is_null()) {
      p_.missing.push_back(join(path_, key));
      return;
    }
    convert(*c, key, out);
  }

  void invalid(const std::string& key, const std::string& why) {
    const std::string where = key.empty() ? (path_.empty() ? "<root>" : path_) : join(path_, key);
    p_.invalid.push_back(where + " (" + why + ")");
  }

  const std::string& path() const { return path_; }
  Problems& problems() { return p_; }

  void finish() {
    if (!j_.is_object()) return;
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) p_.unknown.push_back(join(path_, k));
    }
  }

 private:
  template <typename T>
  void convert(const Json& c, const std::string& key, T& out) {
    try {
      if constexpr (std::is_same_v<T, std::optional<std::uint64_t>>) {
        if (c.is_null()) out.reset();
        else out = checked_unsigned(c);
      } else if constexpr (std::is_same_v<T, std::uint64_t> || std::is_same_v<T, std::size_t>) {
        out = static_cast<T>(checked_unsigned(c));
      } else if constexpr (std::is_same_v<T, int>) {
        if (!c.is_number_integer()) throw std::invalid_argument("expected an integer");
        out = c.get<int>();
      } else if constexpr (std::is_same_v<T, double>) {
        if (!c.is_number()) throw std::invalid_argument("expected a number");
        out = c.get<double>();
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!c.is_boolean()) throw std::invalid_argument("expected true or false");
        out = c.get<bool>();
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!c.is_string()) throw std::invalid_argument("expected a string");
        out = c.get<std::string>();
      } else {
        out = c.get<T>();
      }
    } catch (const std::exception& e) {
      p_.invalid.push_back(join(path_, key) + " (" + e.what() + ")");
    }
  }

  static std::uint64_t checked_unsigned(const Json& c) {
    if (!c.is_number_integer()) throw std::invalid_argument("expected a non-negative integer");
    if (c.is_number_unsigned()) return c.get<std::uint64_t>();
    const auto v = c.get<std::int64_t>();
    if (v < 0) throw std::invalid_argument("expected a non-negative integer");
    return static_cast<std::uint64_t>(v);
  }

  const Json& j_;
  std::string path_;
  Problems& p_;
  std::set<std::string> seen_;
};

inline DatasetConfig parse_dataset(const Json& j, Problems& p) {
  DatasetConfig d;
  Table t(j, "dataset", p);
  t.req("kind", d.kind);
  if (d.kind == "idx") {
    t.req("images", d.images);
    t.req("labels", d.labels);
  } else if (d.kind == "blobs") {
    t.opt("images", d.images);
    t.opt("labels", d.labels);
  } else {
    t.invalid("kind", "expected 'blobs' or 'idx', got '" + d.kind + "'");
  }
  t.opt("train_images", d.train_images);
  t.opt("train_labels", d.train_labels);
  t.opt("n", d.n);
  t.opt("d", d.d);
  t.opt("classes", d.classes);
  t.opt("cluster_std", d.cluster_std);
  t.opt("sample_count", d.sample_count);
  t.opt("seed", d.seed);
  if (const Json* m = t.child("masks")) {
    Table mt(*m, "dataset.masks", p);
    std::string policy = "center_box";
    double value = 0.25;
    mt.opt("policy", policy);
    mt.opt("value", value);
    if (policy == "center_box") d.masks = MaskPolicy::center_box(value);
    else if (policy == "threshold") d.masks = MaskPolicy::threshold(value);
    else mt.invalid("policy", "expected 'center_box' or 'threshold'");
    mt.finish();
  }
  if (d.classes < 1) t.invalid("classes", "must be >= 1");
  if (d.d < 1) t.invalid("d", "must be >= 1");
  if (d.cluster_std < 0) t.invalid("cluster_std", "must be >= 0");
  t.finish();
  return d;
}

inline ModelConfig parse_model(const Json& j, Problems& p) {
  ModelConfig m;
  Table t(j, "model", p);
  t.opt("path", m.path);
  if (const Json* tr = t.child("train"); tr && !tr->is_null()) {
    TrainConfig c;
    Table tt(*tr, "model.train", p);
    tt.opt("hidden", c.hidden);
    tt.opt("epochs", c.options.epochs);
    tt.opt("learning_rate", c.options.learning_rate);
    tt.opt("momentum", c.options.momentum);
    tt.opt("batch_size", c.options.batch_size);
    tt.opt("seed", c.seed);
    if (c.options.batch_size < 1) tt.invalid("batch_size", "must be >= 1");
    if (!(c.options.learning_rate > 0)) tt.invalid("learning_rate", "must be > 0");
    tt.finish();
    m.train = c;
  }
  if (m.path.empty() && !m.train) p.missing.push_back("model.path|model.train");
  t.finish();
  return m;
}

inline ExplainerEntry parse_explainer(const Json& j, const std::string& path, Problems& p) {
  ExplainerEntry e;
  Table t(j, path, p);
  std::string method;
  t.req("method", method);
  if (!method.empty()) {
    if (auto m = parse_explain_method(method)) e.method = *m;
    else t.invalid("method", "unknown explanation method '" + method + "'");
  }
  t.opt("name", e.name);
  ExplainerConfig& c = e.config;
  t.opt("ig_steps", c.ig_steps);
  t.opt("ig_baseline", c.ig_baseline);
  t.opt("occlusion_patch", c.occlusion_patch);
  t.opt("occlusion_baseline", c.occlusion_baseline);
  t.opt("shap_samples", c.shap_samples);
  t.opt("shap_noise_std", c.shap_noise_std);
  t.opt("normalize", c.normalize);
  t.opt("seed", c.seed);
  try {
    c.validate();
  } catch (const ConfigError& err) {
    t.invalid("", err.what());
  }
  if (e.name.empty()) e.name = std::string(to_string(e.method));
  t.finish();
  return e;
}

inline EstimatorEntry parse_estimator(const Json& j, const std::string& path, Problems& p) {
  EstimatorEntry e;
  Table t(j, path, p);
  std::string id;
  t.req("id", id);
  if (!id.empty()) {
    if (auto v = parse_estimator_id(id)) e.config.id = *v;
    else t.invalid("id", "unknown estimator '" + id + "'");
  }
  t.opt("name", e.label);
  EstimatorConfig& c = e.config;
  auto baseline = [&](const std::string& key, Baseline& out) {
    std::string s;
    t.opt(key, s);
    if (s.empty()) return;
    if (auto b = parse_baseline(s)) out = *b;
    else t.invalid(key, "expected black, uniform or mean");
  };
  t.opt("fc_subset_size", c.fc_subset_size);
  t.opt("fc_runs", c.fc_runs);
  baseline("fc_baseline", c.fc_baseline);
  t.opt("pf_step_size", c.pf_step_size);
  baseline("pf_baseline", c.pf_baseline);
  t.opt("robustness_runs", c.robustness_runs);
  t.opt("robustness_radius", c.robustness_radius);
  t.opt("topk_k", c.topk_k);
  try {
    c.validate();
  } catch (const ConfigError& err) {
    t.invalid("", err.what());
  }
  if (e.label.empty()) e.label = std::string(to_string(c.id));
  t.finish();
  return e;
}

inline void parse_noise(const Json& j, const std::string& path, PerturbSpec& s, Problems& p) {
  Table t(j, path, p);
  t.opt("ipt_alpha", s.ipt_alpha);
  t.opt("ipt_beta", s.ipt_beta);
  t.opt("mpt_sigma", s.mpt_sigma);
  t.opt("mpt_mu", s.mpt_mu);
  t.opt("max_resamples", s.max_resamples);
  t.opt("min_retained_fraction", s.min_retained_fraction);
  try {
    s.validate();
  } catch (const ConfigError& err) {
    t.invalid("", err.what());
  }
  t.finish();
}

}  // namespace config_detail

/// Strictly parses a configuration document. All missing, unknown and invalid
/// keys are reported together in a single ConfigError.
inline RunConfig parse_config(const Json& j) {
  using namespace config_detail;
  Problems p;
  RunConfig c;
  Table t(j, "", p);
  if (const Json* d = t.child("dataset")) c.dataset = parse_dataset(*d, p);
  else p.missing.push_back("dataset");
  if (const Json* m = t.child("model")) c.model = parse_model(*m, p);
  else p.missing.push_back("model");
  if (const Json* e = t.child("explanations")) {
    if (!e->is_array()) {
      t.invalid("explanations", "expected a list");
    } else {
      for (std::size_t i = 0; i < e->size(); ++i) {
        c.explanations.push_back(parse_explainer((*e)[i], "explanations." + std::to_string(i), p));
      }
      if (c.explanations.size() < 2) t.invalid("explanations", "at least two explanation methods are required");
    }
  } else {
    p.missing.push_back("explanations");
  }
  if (const Json* e = t.child("estimators")) {
    if (!e->is_array()) {
      t.invalid("estimators", "expected a list");
    } else {
      for (std::size_t i = 0; i < e->size(); ++i) {
        c.estimators.push_back(parse_estimator((*e)[i], "estimators." + std::to_string(i), p));
      }
    }
  }
  std::string test = "both";
  t.opt("test", test);
  if (test == "IPT") c.tests = {PerturbSpace::kInput};
  else if (test == "MPT") c.tests = {PerturbSpace::kModel};
  else if (test == "both") c.tests = {PerturbSpace::kInput, PerturbSpace::kModel};
  else t.invalid("test", "expected IPT, MPT or both");
  if (const Json* n = t.child("nr")) parse_noise(*n, "nr", c.nr, p);
  if (const Json* a = t.child("ar")) parse_noise(*a, "ar", c.ar, p);
  t.opt("K", c.k);
  t.opt("iterations", c.iterations);
  t.opt("master_seed", c.master_seed);
  t.opt("jobs", c.jobs);
  t.opt("output", c.output);
  if (c.k < 1) t.invalid("K", "must be >= 1");
  if (c.iterations < 1) t.invalid("iterations", "must be >= 1");
  if (c.jobs < 1) t.invalid("jobs", "must be >= 1");
  if (const Json* s = t.child("sanity")) {
    Table st(*s, "sanity", p);
    st.opt("methods", c.sanity.methods);
    st.opt("K", c.sanity.k);
    st.opt("iterations", c.sanity.iterations);
    if (c.sanity.methods < 2) st.invalid("methods", "must be >= 2");
    if (c.sanity.k < 1) st.invalid("K", "must be >= 1");
    if (c.sanity.iterations < 1) st.invalid("iterations", "must be >= 1");
    st.finish();
  }
  if (const Json* h = t.child("hpo"); h && !h->is_null()) {
    HpoConfig hc;
    Table ht(*h, "hpo", p);
    if (const Json* b = ht.child("base")) hc.base = *b;
    else p.missing.push_back("hpo.base");
    if (const Json* g = ht.child("grid")) {
      if (!g->is_object() || g->empty()) {
        ht.invalid("grid", "expected a non-empty table of value lists");
      } else {
        for (const auto& [key, values] : g->items()) {
          if (!values.is_array() || values.empty()) {
            ht.invalid("grid." + key, "expected a non-empty list");
            continue;
          }
          hc.axes.emplace_back(key, std::vector<Json>(values.begin(), values.end()));
        }
      }
    } else {
      p.missing.push_back("hpo.grid");
    }
    ht.finish();
    if (hc.base.is_object()) parse_estimator(hc.base, "hpo.base", p);
    c.hpo = std::move(hc);
  }
  t.finish();
  p.raise_if_any();
  return c;
}

namespace config_detail {

inline Json seed_json(const std::optional<std::uint64_t>& s) { return s ? Json(*s) : Json(nullptr); }

inline Json noise_json(const PerturbSpec& s) {
  return {{"ipt_alpha", s.ipt_alpha},         {"ipt_beta", s.ipt_beta},
          {"mpt_sigma", s.mpt_sigma},         {"mpt_mu", s.mpt_mu},
          {"max_resamples", s.max_resamples}, {"min_retained_fraction", s.min_retained_fraction}};
}

}  // namespace config_detail

inline Json estimator_json(const EstimatorEntry& e) {
  const EstimatorConfig& c = e.config;
  return {{"id", std::string(to_string(c.id))},
          {"name", e.label},
          {"fc_subset_size", c.fc_subset_size},
          {"fc_runs", c.fc_runs},
          {"fc_baseline", std::string(to_string(c.fc_baseline))},
          {"pf_step_size", c.pf_step_size},
          {"pf_baseline", std::string(to_string(c.pf_baseline))},
          {"robustness_runs", c.robustness_runs},
          {"robustness_radius", c.robustness_radius},
          {"topk_k", c.topk_k}};
}

/// Canonical form with every key present; parse_config(to_json(c)) == c.
inline Json to_json(const RunConfig& c) {
  using namespace config_detail;
  Json j;
  const DatasetConfig& d = c.dataset;
  j["dataset"] = {{"kind", d.kind},
                  {"images", d.images},
                  {"labels", d.labels},
                  {"train_images", d.train_images},
                  {"train_labels", d.train_labels},
                  {"n", d.n},
                  {"d", d.d},
                  {"classes", d.classes},
                  {"cluster_std", d.cluster_std},
                  {"sample_count", d.sample_count},
                  {"seed", seed_json(d.seed)},
                  {"masks",
                   {{"policy", d.masks.kind == MaskPolicy::Kind::kCenterBox ? "center_box" : "threshold"},
                    {"value", d.masks.value}}}};
  Json model = {{"path", c.model.path}};
  if (c.model.train) {
    const TrainConfig& t = *c.model.train;
    model["train"] = {{"hidden", t.hidden},
                      {"epochs", t.options.epochs},
                      {"learning_rate", t.options.learning_rate},
                      {"momentum", t.options.momentum},
                      {"batch_size", t.options.batch_size},
                      {"seed", seed_json(t.seed)}};
  } else {
    model["train"] = nullptr;
  }
  j["model"] = model;
  j["explanations"] = Json::array();
  for (const auto& e : c.explanations) {
    const ExplainerConfig& x = e.config;
    j["explanations"].push_back({{"method", std::string(to_string(e.method))},
                                 {"name", e.name},
                                 {"ig_steps", x.ig_steps},
                                 {"ig_baseline", x.ig_baseline},
                                 {"occlusion_patch", x.occlusion_patch},
                                 {"occlusion_baseline", x.occlusion_baseline},
                                 {"shap_samples", x.shap_samples},
                                 {"shap_noise_std", x.shap_noise_std},
                                 {"normalize", x.normalize},
                                 {"seed", x.seed}});
  }
  j["estimators"] = Json::array();
  for (const auto& e : c.estimators) j["estimators"].push_back(estimator_json(e));
  j["test"] = c.tests.size() == 2 ? "both" : std::string(to_string(c.tests.front()));
  j["nr"] = noise_json(c.nr);
  j["ar"] = noise_json(c.ar);
  j["K"] = c.k;
  j["iterations"] = c.iterations;
  j["master_seed"] = c.master_seed;
  j["jobs"] = c.jobs;
  j["output"] = c.output;
  j["sanity"] = {{"methods", c.sanity.methods}, {"K", c.sanity.k}, {"iterations", c.sanity.iterations}};
  if (c.hpo) {
    Json grid = Json::object();
    for (const auto& [key, values] : c.hpo->axes) grid[key] = values;
    j["hpo"] = {{"base", c.hpo->base}, {"grid", grid}};
  } else {
    j["hpo"] = nullptr;
  }
  return j;
}

inline std::string serialize_config(const RunConfig& c) { return to_json(c).dump(2) + "\n"; }

/// Applies `a.b.c=value` to a document. Numeric path segments index lists.
/// The value is read as JSON when it parses as JSON, otherwise as a string.
inline void apply_override(Json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  Json value = Json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  Json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string seg = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (seg.empty()) throw ConfigError("override '" + assignment + "' has an empty path segment");
    const bool last = dot == std::string::npos;
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        std::size_t used = 0;
        idx = std::stoul(seg, &used);
        if (used != seg.size()) throw std::invalid_argument(seg);
      } catch (const std::exception&) {
        throw ConfigError("override '" + assignment + "': '" + seg + "' is not a list index");
      }
      if (idx >= node->size()) throw ConfigError("override '" + assignment + "': index " + seg + " out of range");
      node = &(*node)[idx];
    } else {
      if (node->is_null()) *node = Json::object();
      if (!node->is_object()) throw ConfigError("override '" + assignment + "': '" + seg + "' is not a table");
      node = &(*node)[seg];
    }
    if (last) {
      *node = value;
      return;
    }
    start = dot + 1;
  }
}

inline Json read_config_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  Json doc = Json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("config file '" + path + "' is not valid JSON");
  return doc;
}

inline RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
  Json doc = read_config_document(path);
  for (const auto& o : overrides) apply_override(doc, o);
  return parse_config(doc);
}

/// Estimator entries for every cell of the grid, labelled `key=value,...`.
inline std::vector<EstimatorEntry> hpo_cells(const HpoConfig& h) {
  std::vector<EstimatorEntry> out;
  std::vector<std::size_t> pos(h.axes.size(), 0);
  while (true) {
    Json cell = h.base;
    std::string label;
    for (std::size_t a = 0; a < h.axes.size(); ++a) {
      const auto& [key, values] = h.axes[a];
      cell[key] = values[pos[a]];
      if (!label.empty()) label += ",";
      label += key + "=" + (values[pos[a]].is_string() ? values[pos[a]].get<std::string>() : values[pos[a]].dump());
    }
    cell["name"] = label;
    config_detail::Problems p;
    EstimatorEntry e = config_detail::parse_estimator(cell, "hpo cell " + label, p);
    p.raise_if_any();
    out.push_back(std::move(e));
    std::size_t a = h.axes.size();
    while (a > 0) {
      --a;
      if (++pos[a] < h.axes[a].second.size()) break;
      pos[a] = 0;
      if (a == 0) return out;
    }
    if (h.axes.empty()) return out;
  }
}

}  // namespace metaeval
