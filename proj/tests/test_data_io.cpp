#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "metaeval/metaeval.hpp"

using namespace metaeval;
namespace fs = std::filesystem;

namespace {

using Bytes = std::vector<std::uint8_t>;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("metaeval_data_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_bytes(const fs::path& p, const Bytes& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void put32(Bytes& b, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<std::uint8_t>(v >> s));
}

Bytes idx_images(std::uint32_t n, std::uint32_t rows, std::uint32_t cols, const Bytes& pixels) {
  Bytes b;
  put32(b, 0x803);
  put32(b, n);
  put32(b, rows);
  put32(b, cols);
  b.insert(b.end(), pixels.begin(), pixels.end());
  return b;
}

Bytes idx_labels(const Bytes& labels) {
  Bytes b;
  put32(b, 0x801);
  put32(b, static_cast<std::uint32_t>(labels.size()));
  b.insert(b.end(), labels.begin(), labels.end());
  return b;
}

// Minimal stand-alone reader used as an oracle for the loader.
struct RawIdx {
  std::uint32_t n = 0, rows = 0, cols = 0;
  std::vector<unsigned char> pixels, labels;
};

RawIdx oracle_idx(const fs::path& images, const fs::path& labels) {
  RawIdx r;
  std::ifstream im(images, std::ios::binary), lb(labels, std::ios::binary);
  auto word = [](std::ifstream& in) {
    unsigned char c[4];
    in.read(reinterpret_cast<char*>(c), 4);
    return std::uint32_t(c[0]) << 24 | std::uint32_t(c[1]) << 16 | std::uint32_t(c[2]) << 8 | c[3];
  };
  word(im);
  r.n = word(im);
  r.rows = word(im);
  r.cols = word(im);
  r.pixels.resize(std::size_t{r.n} * r.rows * r.cols);
  im.read(reinterpret_cast<char*>(r.pixels.data()), static_cast<std::streamsize>(r.pixels.size()));
  word(lb);
  r.labels.resize(word(lb));
  lb.read(reinterpret_cast<char*>(r.labels.data()), static_cast<std::streamsize>(r.labels.size()));
  return r;
}

void expect_format_error(const std::function<void()>& f, const std::string& fragment) {
  try {
    f();
    ADD_FAILURE() << "expected FormatError containing '" << fragment << "'";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
  }
}

Json minimal_config() {
  return Json::parse(R"({
    "dataset": {"kind": "blobs", "n": 40, "d": 4, "classes": 2},
    "model": {"train": {"hidden": [8], "epochs": 5}},
    "explanations": [{"method": "gradient"}, {"method": "saliency"}],
    "estimators": [{"id": "sparseness"}, {"id": "complexity"}]
  })");
}

}  // namespace

TEST(Idx, HandEncodedFixture) {
  const fs::path dir = scratch("hand");
  write_bytes(dir / "img", idx_images(2, 2, 2, {0, 255, 51, 102, 204, 0, 0, 255}));
  write_bytes(dir / "lab", idx_labels({3, 7}));
  const Dataset ds = load_idx((dir / "img").string(), (dir / "lab").string());
  ASSERT_EQ(ds.size(), 2u);
  ASSERT_EQ(ds.dim(), 4u);
  const std::vector<double> expected{0.0, 1.0, 0.2, 0.4, 0.8, 0.0, 0.0, 1.0};
  for (std::size_t i = 0; i < 8; ++i) EXPECT_DOUBLE_EQ(ds.inputs.data[i], expected[i]);
  EXPECT_EQ(ds.labels, (std::vector<int>{3, 7}));
  EXPECT_EQ(ds.image_rows, 2u);
  EXPECT_EQ(ds.image_cols, 2u);
  EXPECT_EQ(ds.bounds.min, 0.0);
  EXPECT_EQ(ds.bounds.max, 1.0);
  EXPECT_DOUBLE_EQ(ds.bounds.mean, 3.4 / 8);
}

TEST(Idx, EmptyItemCount) {
  const fs::path dir = scratch("empty");
  write_bytes(dir / "img", idx_images(0, 28, 28, {}));
  write_bytes(dir / "lab", idx_labels({}));
  const Dataset ds = load_idx((dir / "img").string(), (dir / "lab").string());
  EXPECT_EQ(ds.size(), 0u);
  EXPECT_EQ(ds.dim(), 784u);
}

TEST(Idx, MalformedFilesReportByteOffsets) {
  const fs::path dir = scratch("bad");
  const std::string img = (dir / "img").string(), lab = (dir / "lab").string();
  write_bytes(dir / "lab", idx_labels({1, 2}));

  Bytes wrong = idx_images(2, 2, 2, Bytes(8, 0));
  wrong[3] = 0x01;
  write_bytes(img, wrong);
  expect_format_error([&] { load_idx(img, lab); }, "magic at byte offset 0");

  write_bytes(img, Bytes{0, 0, 8, 3, 0, 0});
  expect_format_error([&] { load_idx(img, lab); }, "truncated header at byte offset 4");

  write_bytes(img, idx_images(2, 2, 2, Bytes(7, 0)));
  expect_format_error([&] { load_idx(img, lab); }, "truncated pixel data at byte offset 23");

  write_bytes(img, idx_images(3, 2, 2, Bytes(12, 0)));
  expect_format_error([&] { load_idx(img, lab); }, "byte offset 4");

  write_bytes(img, idx_images(2, 2, 2, Bytes(8, 0)));
  Bytes short_labels = idx_labels({1, 2});
  short_labels.pop_back();
  write_bytes(dir / "lab", short_labels);
  expect_format_error([&] { load_idx(img, lab); }, "truncated label data at byte offset 9");

  expect_format_error([&] { load_idx((dir / "missing").string(), lab); }, "cannot open");
}

TEST(Idx, MatchesIndependentParser) {
  const fs::path dir = scratch("ten");
  Rng rng(5);
  Bytes pixels(10 * 5 * 3), labels(10);
  for (auto& p : pixels) p = static_cast<std::uint8_t>(rng.below(256));
  for (auto& l : labels) l = static_cast<std::uint8_t>(rng.below(10));
  write_bytes(dir / "img", idx_images(10, 5, 3, pixels));
  write_bytes(dir / "lab", idx_labels(labels));
  const Dataset ds = load_idx((dir / "img").string(), (dir / "lab").string());
  const RawIdx raw = oracle_idx(dir / "img", dir / "lab");
  ASSERT_EQ(ds.size(), raw.n);
  EXPECT_EQ(ds.image_rows, raw.rows);
  EXPECT_EQ(ds.image_cols, raw.cols);
  for (std::size_t i = 0; i < raw.pixels.size(); ++i) EXPECT_EQ(ds.inputs.data[i], raw.pixels[i] / 255.0);
  for (std::size_t i = 0; i < raw.n; ++i) EXPECT_EQ(ds.labels[i], raw.labels[i]);
}

TEST(Idx, BundledDigitsFixture) {
  const std::string dir = METAEVAL_TEST_DATA;
  const Dataset ds = load_idx(dir + "/digits-images.idx", dir + "/digits-labels.idx");
  EXPECT_EQ(ds.size(), 1797u);
  EXPECT_EQ(ds.dim(), 64u);
  EXPECT_EQ(ds.num_classes(), 10);
  const RawIdx raw = oracle_idx(dir + "/digits-images.idx", dir + "/digits-labels.idx");
  for (std::size_t i = 0; i < 10 * 64; ++i) EXPECT_EQ(ds.inputs.data[i], raw.pixels[i] / 255.0);
}

TEST(Blobs, DeterministicAndBounded) {
  const Dataset a = synth_blobs(100, 6, 3, 9), b = synth_blobs(100, 6, 3, 9), c = synth_blobs(100, 6, 3, 10);
  EXPECT_EQ(a.inputs.data, b.inputs.data);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_NE(a.inputs.data, c.inputs.data);
  for (double v : a.inputs.data) {
    EXPECT_GE(v, a.bounds.min);
    EXPECT_LE(v, a.bounds.max);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_EQ(synth_blobs(0, 6, 3, 9).size(), 0u);
  EXPECT_THROW(synth_blobs(10, 0, 3, 9), ConfigError);
  EXPECT_THROW(synth_blobs(10, 4, 0, 9), ConfigError);
}

TEST(Blobs, NearestCentroidSeparatesClasses) {
  const std::size_t n = 600, d = 16;
  const int classes = 5;
  const double sigma = 0.05;
  const Dataset ds = synth_blobs(n, d, classes, 21, sigma);
  std::vector<std::vector<double>> centroid(classes, std::vector<double>(d, 0.0));
  std::vector<int> count(classes, 0);
  for (std::size_t i = 0; i < n; ++i) {
    ++count[ds.labels[i]];
    for (std::size_t j = 0; j < d; ++j) centroid[ds.labels[i]][j] += ds.inputs(i, j);
  }
  for (int c = 0; c < classes; ++c) {
    for (double& v : centroid[c]) v /= count[c];
  }
  auto dist2 = [&](std::span<const double> x, const std::vector<double>& m) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += (x[j] - m[j]) * (x[j] - m[j]);
    return s;
  };
  for (int a = 0; a < classes; ++a) {
    for (int b = a + 1; b < classes; ++b) EXPECT_GE(std::sqrt(dist2(centroid[a], centroid[b])), 10 * sigma);
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    int best = 0;
    for (int c = 1; c < classes; ++c) {
      if (dist2(ds.inputs.row(i), centroid[c]) < dist2(ds.inputs.row(i), centroid[best])) best = c;
    }
    correct += best == ds.labels[i];
  }
  EXPECT_GE(static_cast<double>(correct) / n, 0.99);
}

TEST(Masks, CenterBoxGeometry) {
  const Dataset img = make_dataset(Matrix(2, 784), {0, 1});
  const Matrix full = make_masks(img, MaskPolicy::center_box(1.0));
  for (double v : full.data) EXPECT_EQ(v, 1.0);

  const Matrix quarter = make_masks(img, MaskPolicy::center_box(0.25));
  for (std::size_t i = 0; i < 2; ++i) {
    std::size_t positives = 0;
    for (std::size_t r = 0; r < 28; ++r) {
      for (std::size_t c = 0; c < 28; ++c) {
        const bool inside = r >= 7 && r < 21 && c >= 7 && c < 21;
        EXPECT_EQ(quarter(i, r * 28 + c), inside ? 1.0 : 0.0);
        positives += quarter(i, r * 28 + c) == 1.0;
      }
    }
    EXPECT_EQ(positives, 196u);
  }

  const Dataset strip = make_dataset(Matrix(1, 10), {0});
  const Matrix run = make_masks(strip, MaskPolicy::center_box(0.3));
  EXPECT_EQ(run.data, (std::vector<double>{0, 0, 0, 1, 1, 1, 0, 0, 0, 0}));

  EXPECT_THROW(make_masks(img, MaskPolicy::center_box(0.0)), ConfigError);
  EXPECT_THROW(make_masks(img, MaskPolicy::center_box(1.5)), ConfigError);
}

TEST(Masks, ThresholdPolicy) {
  Matrix x(2, 4);
  x.data = {0.1, 0.4, 0.3, 0.2, 0, 0, 0, 0};
  const Dataset ds = make_dataset(x, {0, 0}, 2, 2);
  const Matrix m = make_masks(ds, MaskPolicy::threshold(0.5));
  // Median of {0.1, 0.2, 0.3, 0.4} is 0.25.
  EXPECT_EQ(std::vector<double>(m.data.begin(), m.data.begin() + 4), (std::vector<double>{0, 1, 1, 0}));
  // All-zero image falls back to the first maximal feature.
  EXPECT_EQ(std::vector<double>(m.data.begin() + 4, m.data.end()), (std::vector<double>{1, 0, 0, 0}));
  EXPECT_THROW(make_masks(ds, MaskPolicy::threshold(-0.1)), ConfigError);
}

TEST(Masks, EveryRowHasAPositive) {
  const Dataset ds = synth_blobs(50, 25, 3, 4);
  for (const MaskPolicy& p : {MaskPolicy::threshold(0.0), MaskPolicy::threshold(0.9), MaskPolicy::threshold(1.0),
                              MaskPolicy::center_box(0.01), MaskPolicy::center_box(0.5)}) {
    const Matrix m = make_masks(ds, p);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      double s = 0.0;
      for (double v : m.row(i)) {
        EXPECT_TRUE(v == 0.0 || v == 1.0);
        s += v;
      }
      EXPECT_GE(s, 1.0);
    }
  }
}

TEST(Subset, SeededWithoutReplacement) {
  Dataset ds = synth_blobs(30, 4, 3, 1);
  ds.masks = make_masks(ds, MaskPolicy::center_box(0.5));
  const Dataset a = subset(ds, 10, 7), b = subset(ds, 10, 7);
  EXPECT_EQ(a.inputs.data, b.inputs.data);
  EXPECT_EQ(a.size(), 10u);
  EXPECT_TRUE(a.has_masks());
  EXPECT_EQ(subset(ds, 30, 7).inputs.data, ds.inputs.data);
  // Rows appear in their original order.
  std::size_t pos = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    while (pos < ds.size() && !std::equal(a.inputs.row(i).begin(), a.inputs.row(i).end(), ds.inputs.row(pos).begin())) {
      ++pos;
    }
    ASSERT_LT(pos, ds.size());
    EXPECT_EQ(a.labels[i], ds.labels[pos]);
    ++pos;
  }
}

TEST(ModelFile, RoundTripIsBitExact) {
  const Net net = init_net({5, {7, 3}, 4}, 13);
  const fs::path dir = scratch("model");
  const std::string path = (dir / "net.txt").string();
  save_model(net, path, {42, "unit\ntest"});
  const ModelFile back = load_model_file(path);
  EXPECT_EQ(back.provenance.seed, 42u);
  EXPECT_EQ(back.provenance.note, "unit test");
  ASSERT_EQ(back.net.layers().size(), net.layers().size());
  const Vector w0 = get_weights(net), w1 = get_weights(back.net);
  ASSERT_EQ(w0.size(), w1.size());
  for (std::size_t i = 0; i < w0.size(); ++i) {
    EXPECT_EQ(std::bit_cast<std::uint64_t>(w0[i]), std::bit_cast<std::uint64_t>(w1[i]));
  }
  EXPECT_EQ(serialize_model(back.net, back.provenance), read_text(path));
}

TEST(ModelFile, ChecksumAndFirstWeightMatchHeader) {
  const Net net = init_net({3, {4}, 2}, 8);
  const std::string text = serialize_model(net, {1, ""});
  std::istringstream in(text);
  std::string line, checksum, payload;
  while (std::getline(in, line)) {
    if (line.rfind("fnv1a64 ", 0) == 0) checksum = line.substr(8);
    payload = line;
  }
  // Independent FNV-1a over the little-endian weight bytes.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double w : get_weights(net)) {
    std::uint64_t bits;
    std::memcpy(&bits, &w, 8);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  EXPECT_EQ(checksum, hex);

  // First 12 base64 characters carry the first 9 bytes.
  const std::string alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::vector<std::uint8_t> bytes;
  for (std::size_t i = 0; i < 12; i += 4) {
    std::uint32_t n = 0;
    for (std::size_t k = 0; k < 4; ++k) n = n << 6 | static_cast<std::uint32_t>(alphabet.find(payload[i + k]));
    for (int s = 16; s >= 0; s -= 8) bytes.push_back(static_cast<std::uint8_t>(n >> s));
  }
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= std::uint64_t{bytes[b]} << (8 * b);
  EXPECT_EQ(std::bit_cast<double>(bits), get_weights(net)[0]);
}

TEST(ModelFile, CorruptionIsRejected) {
  const Net net = init_net({3, {4}, 2}, 8);
  const std::string good = serialize_model(net);
  auto parse = [](const std::string& s) {
    std::istringstream in(s);
    return parse_model(in);
  };
  auto replace = [&](std::string from, std::string to) {
    std::string s = good;
    const auto at = s.find(from);
    EXPECT_NE(at, std::string::npos) << from;
    return s.replace(at, from.size(), to);
  };
  const auto payload_at = good.rfind('\n', good.size() - 2) + 1;

  std::string shorter = good;
  shorter.erase(payload_at, 4);
  expect_format_error([&] { parse(shorter); }, "header declares");

  std::string flipped = good;
  flipped[payload_at + 5] = flipped[payload_at + 5] == 'A' ? 'B' : 'A';
  expect_format_error([&] { parse(flipped); }, "checksum mismatch");

  std::string bad_char = good;
  bad_char[payload_at + 2] = '*';
  expect_format_error([&] { parse(bad_char); }, "invalid base64");

  expect_format_error([&] { parse(replace("metaeval-net 1", "metaeval-net 2")); }, "unsupported model version");
  expect_format_error([&] { parse(replace("metaeval-net", "something")); }, "expected 'metaeval-net'");
  expect_format_error([&] { parse(replace("relu 4", "tanh 4")); }, "unknown layer kind");
  expect_format_error([&] { parse(replace("dense 4 2", "dense 4 3")); }, "parameters");
  expect_format_error([&] { parse(good.substr(0, payload_at)); }, "missing payload");
  expect_format_error([&] { parse(""); }, "unexpected end of file");
  expect_format_error([&] { load_model_file("/nonexistent/net.txt"); }, "cannot open");
}

TEST(Config, DefaultRoundTrip) {
  const RunConfig c = parse_config(minimal_config());
  EXPECT_EQ(c.k, 5);
  EXPECT_EQ(c.iterations, 3);
  EXPECT_EQ(c.tests.size(), 2u);
  EXPECT_EQ(c.explanations[1].name, "saliency");
  const std::string text = serialize_config(c);
  const RunConfig back = parse_config(Json::parse(text));
  EXPECT_EQ(back, c);
  EXPECT_EQ(serialize_config(back), text);
}

TEST(Config, ProblemsAreAggregated) {
  Json j = minimal_config();
  j.erase("model");
  j["dataset"].erase("kind");
  j["colour"] = "blue";
  j["dataset"]["shape"] = 3;
  j["K"] = 0;
  j["estimators"][0]["id"] = "no_such";
  try {
    parse_config(j);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    for (const char* key : {"missing required keys", "dataset.kind", "model", "unknown keys", "colour",
                            "dataset.shape", "K (must be >= 1)", "estimators.0.id"}) {
      EXPECT_NE(msg.find(key), std::string::npos) << key << " in " << msg;
    }
  }
}

TEST(Config, SingleExplanationIsRejected) {
  Json j = minimal_config();
  j["explanations"].erase(1);
  EXPECT_THROW(parse_config(j), ConfigError);
}

TEST(Config, OverridesAndFileLoading) {
  const fs::path dir = scratch("config");
  {
    std::ofstream out(dir / "run.json");
    out << minimal_config().dump();
  }
  const RunConfig c = load_config((dir / "run.json").string(),
                                  {"K=7", "estimators.1.id=pointing_game", "nr.ipt_beta=0.01", "test=IPT"});
  EXPECT_EQ(c.k, 7);
  EXPECT_EQ(c.estimators[1].config.id, EstimatorId::kPointingGame);
  EXPECT_EQ(c.nr.ipt_beta, 0.01);
  EXPECT_EQ(c.tests, (std::vector<PerturbSpace>{PerturbSpace::kInput}));

  Json doc = minimal_config();
  EXPECT_THROW(apply_override(doc, "K"), ConfigError);
  EXPECT_THROW(apply_override(doc, "explanations.5.method=gradient"), ConfigError);
  EXPECT_THROW(apply_override(doc, "explanations.x=1"), ConfigError);
  EXPECT_THROW(apply_override(doc, "a..b=1"), ConfigError);
  EXPECT_THROW(load_config((dir / "run.json").string(), {"bogus=1"}), ConfigError);

  {
    std::ofstream out(dir / "broken.json");
    out << "{ not json";
  }
  EXPECT_THROW(load_config((dir / "broken.json").string()), ConfigError);
  EXPECT_THROW(load_config((dir / "absent.json").string()), ConfigError);
}

TEST(Config, HpoGridCells) {
  Json j = minimal_config();
  j["hpo"] = Json::parse(R"({"base": {"id": "faithfulness_correlation"},
                             "grid": {"fc_baseline": ["black", "uniform", "mean"], "fc_subset_size": [2, 4]}})");
  const RunConfig c = parse_config(j);
  const auto cells = hpo_cells(*c.hpo);
  ASSERT_EQ(cells.size(), 6u);
  EXPECT_EQ(cells[0].label, "fc_baseline=black,fc_subset_size=2");
  EXPECT_EQ(cells[1].label, "fc_baseline=black,fc_subset_size=4");
  EXPECT_EQ(cells[5].label, "fc_baseline=mean,fc_subset_size=4");
  EXPECT_EQ(cells[5].config.fc_baseline, Baseline::kMean);
  EXPECT_EQ(cells[5].config.fc_subset_size, 4u);

  j["hpo"]["grid"] = Json::parse(R"({"fc_runs": [9]})");
  const auto single = hpo_cells(*parse_config(j).hpo);
  ASSERT_EQ(single.size(), 1u);
  EXPECT_EQ(single[0].config.fc_runs, 9);

  j["hpo"]["grid"] = Json::parse(R"({"fc_runs": []})");
  EXPECT_THROW(parse_config(j), ConfigError);
}

namespace {

MetaSummary summary(const std::string& label, EstimatorId id, PerturbSpace test, MetaVector m) {
  MetaSummary s;
  s.label = label;
  s.estimator = {.id = id};
  s.test = test;
  IterationResult it;
  it.m = m;
  it.seed = 5;
  s.iterations = {it};
  summarise(s);
  return s;
}

std::map<std::string, std::string> csv_row(const std::string& csv, std::size_t row) {
  std::istringstream in(csv);
  std::string header, line;
  std::getline(in, header);
  for (std::size_t r = 0; r <= row; ++r) std::getline(in, line);
  std::map<std::string, std::string> out;
  std::istringstream h(header), l(line);
  std::string key, value;
  while (std::getline(h, key, ',') && std::getline(l, value, ',')) out[key] = value;
  return out;
}

}  // namespace

TEST(Report, SanityRowAndColumns) {
  const std::vector<MetaSummary> results{
      summary("adversarial_deterministic", EstimatorId::kAdversarialDeterministic, PerturbSpace::kInput, {1, 0, 1, 0}),
      summary("sparseness", EstimatorId::kSparseness, PerturbSpace::kInput, {0.5, 0.25, 1.0, 0.75}),
      summary("sparseness", EstimatorId::kSparseness, PerturbSpace::kModel, {1, 1, 1, 1})};
  const std::string csv = summary_csv(results);
  auto row = csv_row(csv, 0);
  EXPECT_EQ(row["iac_nr"], "1.000000");
  EXPECT_EQ(row["iac_ar"], "0.000000");
  EXPECT_EQ(row["iec_nr"], "1.000000");
  EXPECT_EQ(row["iec_ar"], "0.000000");
  EXPECT_EQ(row["mc"], "0.500000");
  EXPECT_EQ(row["mc_bar"], "0.500000");
  EXPECT_EQ(row["test"], "IPT");
  row = csv_row(csv, 1);
  EXPECT_EQ(row["mc"], "0.625000");
  EXPECT_EQ(row["mc_bar"], "0.812500");
  for (const char* col : {"mc_std", "iac_nr_std", "iac_ar_std", "iec_nr_std", "iec_ar_std"}) EXPECT_EQ(row[col], "0.000000");

  auto area = csv_row(areagraph_csv(results), 1);
  EXPECT_EQ(area["iac_nr_y"], "0.500000");
  EXPECT_EQ(area["iec_nr_x"], "1.000000");
  EXPECT_EQ(area["iac_ar_y"], "-0.250000");
  EXPECT_EQ(area["iec_ar_x"], "-0.750000");
  // 0.5 * (0.5*1 + 1*0.25 + 0.25*0.75 + 0.75*0.5)
  EXPECT_EQ(area["area"], "0.656250");
  EXPECT_DOUBLE_EQ(area_graph({1, 1, 1, 1}).area, 2.0);
}

TEST(Report, FilesAreDeterministic) {
  Report r;
  r.config = parse_config(minimal_config());
  r.info.master_seed = 3;
  r.info.samples = 40;
  r.results = {summary("a,b \"quoted\"", EstimatorId::kComplexity, PerturbSpace::kModel, {0.1, 0.2, 0.3, 0.4})};
  const fs::path d1 = scratch("report1"), d2 = scratch("report2");
  write_report(r, d1.string());
  write_report(r, d2.string());
  for (const char* f : {"results.json", "summary.csv", "areagraph.csv"}) {
    const std::string a = read_text(d1 / f);
    EXPECT_FALSE(a.empty()) << f;
    EXPECT_EQ(a, read_text(d2 / f)) << f;
  }
  EXPECT_NE(read_text(d1 / "summary.csv").find("\"a,b \"\"quoted\"\"\",MPT,"), std::string::npos);

  const Json j = Json::parse(read_text(d1 / "results.json"));
  EXPECT_EQ(j["seeds"]["master"], 3);
  EXPECT_EQ(j["results"][0]["test"], "MPT");
  EXPECT_EQ(j["results"][0]["category"], "complexity");
  EXPECT_DOUBLE_EQ(j["results"][0]["mean"]["iac_ar"].get<double>(), 0.2);
  EXPECT_TRUE(j["results"][0]["iterations"][0].contains("exclusions"));
  EXPECT_EQ(parse_config(j["config"]), r.config);
}

TEST(Config, ShippedExamplesParse) {
  const fs::path root = METAEVAL_SOURCE_DIR;
  std::size_t count = 0;
  for (const auto& entry : fs::directory_iterator(root / "configs")) {
    if (entry.path().extension() != ".json") continue;
    ++count;
    RunConfig c;
    ASSERT_NO_THROW(c = load_config(entry.path().string())) << entry.path();
    EXPECT_EQ(parse_config(to_json(c)), c) << entry.path();
    for (const std::string& p : {c.dataset.images, c.dataset.labels}) {
      if (!p.empty()) {
        EXPECT_TRUE(fs::exists(root / p)) << p;
      }
    }
  }
  EXPECT_GE(count, 6u);
}
