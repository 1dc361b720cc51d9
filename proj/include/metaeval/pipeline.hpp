#pragma once

// Turns a RunConfig into the concrete objects a run needs: evaluation data
// with masks, a model (loaded or trained), and the explanation methods.

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "metaeval/config.hpp"
#include "metaeval/consistency.hpp"
#include "metaeval/dataset.hpp"
#include "metaeval/explain.hpp"
#include "metaeval/model_io.hpp"
#include "metaeval/net.hpp"
#include "metaeval/report.hpp"
#include "metaeval/rng.hpp"

namespace metaeval {

struct DataSplits {
  Dataset eval;
  Dataset train;
  std::uint64_t seed = 0;
  int classes = 0;
};

inline std::uint64_t dataset_seed(const RunConfig& c) {
  return c.dataset.seed ? *c.dataset.seed : derive_seed(c.master_seed, StreamTag::kBlobs);
}

inline std::uint64_t model_seed(const RunConfig& c) {
  if (c.model.train && c.model.train->seed) return *c.model.train->seed;
  return derive_seed(c.master_seed, StreamTag::kInit);
}

/// Evaluation split (optionally subsampled, with masks) and training split.
/// Without a separate training split the model is fitted on the full set.
inline DataSplits load_data(const RunConfig& c) {
  const DatasetConfig& d = c.dataset;
  DataSplits s;
  s.seed = dataset_seed(c);
  Dataset full;
  if (d.kind == "blobs") {
    full = synth_blobs(d.n, d.d, d.classes, s.seed, d.cluster_std);
    s.classes = d.classes;
    s.train = full;
  } else if (d.kind == "idx") {
    if (d.images.empty() || d.labels.empty()) throw ConfigError("dataset.images and dataset.labels are required");
    full = load_idx(d.images, d.labels);
    if (!d.train_images.empty() || !d.train_labels.empty()) {
      if (d.train_images.empty() || d.train_labels.empty()) {
        throw ConfigError("dataset.train_images and dataset.train_labels must be given together");
      }
      s.train = load_idx(d.train_images, d.train_labels);
    } else {
      s.train = full;
    }
    s.classes = std::max(full.num_classes(), s.train.num_classes());
  } else {
    throw ConfigError("dataset.kind must be 'blobs' or 'idx'");
  }
  if (full.size() < 2) throw InputError("dataset has fewer than two samples");
  s.eval = d.sample_count > 0 ? subset(full, d.sample_count, derive_seed(s.seed, StreamTag::kShuffle)) : full;
  s.eval.masks = make_masks(s.eval, d.masks);
  return s;
}

inline Architecture architecture(const RunConfig& c, const DataSplits& s) {
  const TrainConfig t = c.model.train.value_or(TrainConfig{});
  return {s.eval.dim(), t.hidden, static_cast<std::size_t>(s.classes)};
}

inline Net train_model(const RunConfig& c, const DataSplits& s) {
  if (!c.model.train) throw ConfigError("model.train is required for training");
  return train_tiny(architecture(c, s), s.train, c.model.train->options, model_seed(c));
}

/// Loads model.path when set, otherwise trains from model.train.
inline Net obtain_model(const RunConfig& c, const DataSplits& s, std::ostream& log) {
  Net net;
  if (!c.model.path.empty()) {
    log << "loading model " << c.model.path << "\n";
    net = load_model(c.model.path);
  } else {
    log << "training model on " << s.train.size() << " samples\n";
    net = train_model(c, s);
  }
  if (net.input_dim() != s.eval.dim()) {
    throw ShapeError("model expects " + std::to_string(net.input_dim()) + " features, dataset has " +
                     std::to_string(s.eval.dim()));
  }
  return net;
}

inline Explainer build_explainer(const ExplainerEntry& e, const Dataset& data) {
  ExplainerConfig cfg = e.config;
  cfg.image_cols = data.image_rows > 1 ? data.image_cols : 0;
  cfg.shap_baseline_min = data.bounds.min;
  cfg.shap_baseline_max = data.bounds.max;
  return make_explainer(e.method, cfg, e.name);
}

inline std::vector<Explainer> build_explainers(const std::vector<ExplainerEntry>& entries, const Dataset& data) {
  std::vector<Explainer> out;
  for (const auto& e : entries) out.push_back(build_explainer(e, data));
  return out;
}

/// `count` model-blind random explainers with distinct seeds.
inline std::vector<Explainer> synthetic_explainers(int count, std::uint64_t seed) {
  std::vector<Explainer> out;
  for (int i = 0; i < count; ++i) {
    ExplainerConfig cfg;
    cfg.seed = derive_seed(seed, StreamTag::kExplainer, {static_cast<std::uint64_t>(i)});
    out.push_back(make_explainer(ExplainMethod::kRandom, cfg, "random_" + std::to_string(i)));
  }
  return out;
}

inline MetaOptions meta_options(const RunConfig& c) {
  MetaOptions o;
  o.tests = c.tests;
  o.nr = c.nr;
  o.ar = c.ar;
  o.k = c.k;
  o.iterations = c.iterations;
  o.master_seed = c.master_seed;
  o.jobs = c.jobs;
  return o;
}

struct Workspace {
  DataSplits data;
  Net net;
  std::vector<Explainer> methods;
  RunInfo info;
};

inline Workspace prepare(const RunConfig& c, std::ostream& log, const std::string& command) {
  Workspace w;
  w.data = load_data(c);
  log << "dataset: " << w.data.eval.size() << " samples x " << w.data.eval.dim() << " features\n";
  w.net = obtain_model(c, w.data, log);
  w.methods = build_explainers(c.explanations, w.data.eval);
  w.info.command = command;
  w.info.master_seed = c.master_seed;
  w.info.dataset_seed = w.data.seed;
  w.info.model_seed = model_seed(c);
  w.info.samples = w.data.eval.size();
  w.info.features = w.data.eval.dim();
  w.info.bounds = w.data.eval.bounds;
  w.info.model_accuracy = accuracy(w.net, w.data.eval);
  log << "model accuracy on evaluation split: " << w.info.model_accuracy << "\n";
  return w;
}

}  // namespace metaeval
