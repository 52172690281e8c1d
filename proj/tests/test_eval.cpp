#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "vroc/errors.hpp"
#include "vroc/eval.hpp"

using namespace vroc;

namespace fs = std::filesystem;

namespace {

AccuracyReport table_report(const std::string& id, double overall, std::array<double, 4> b) {
  AccuracyReport r;
  r.model_id = id;
  r.overall = overall;
  r.buckets = b;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_substr(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t pos = hay.find(needle); pos != std::string::npos;
       pos = hay.find(needle, pos + needle.size()))
    ++n;
  return n;
}

ModelConfig tiny_model() {
  ModelConfig cfg;
  cfg.image_size = 64;
  cfg.patch_size = 16;
  cfg.d_model = 32;
  cfg.n_layers = 1;
  cfg.n_heads = 2;
  cfg.mlp_ratio = 2;
  return cfg;
}

const RoundDataset& tiny_dataset() {
  static const RoundDataset* ds = [] {
    const fs::path p = fs::temp_directory_path() / "vroc_eval_tiny";
    fs::remove_all(p);
    SimConfig cfg;
    cfg.seed = 61;
    cfg.duel_p = 0.25;
    cfg.plant_p = 0.08;
    cfg.attacker_site_bias = 0.6;
    cfg.defender_site_bias = 0.6;
    GenerateOptions opt;
    opt.frames = FramesMode::none;
    generate_dataset(cfg, 6, p.string(), opt);
    DatasetConfig dcfg;
    dcfg.dir = p.string();
    return new RoundDataset(dcfg);
  }();
  return *ds;
}

// Same rounds as the base dataset with every event after `cutoff`
// deleted, for the causality check.
class TruncatedEvents : public ClipDataset {
 public:
  TruncatedEvents(const ClipDataset& base, double cutoff) : base_(base), cutoff_(cutoff) {}

  int n_rounds() const override { return base_.n_rounds(); }
  std::vector<int> split_indices(const std::string& s) const override {
    return base_.split_indices(s);
  }
  int max_t(int r) const override { return base_.max_t(r); }
  int label(int r) const override { return base_.label(r); }
  Clip clip(int r, int t) const override { return base_.clip(r, t); }
  std::vector<EventLabel> events_until(int r, double t) const override {
    return base_.events_until(r, std::min(t, cutoff_));
  }
  const EventVocab& vocab() const override { return base_.vocab(); }
  ClipMode mode() const override { return base_.mode(); }
  double fps() const override { return base_.fps(); }

 private:
  const ClipDataset& base_;
  double cutoff_;
};

}  // namespace

TEST_SUITE("eval-report") {

TEST_CASE("accuracy_curve matches a hand-counted toy set") {
  // Durations 2, 2, 3; labels attacker, defender, attacker.
  const std::vector<std::vector<int>> preds{{0, 1}, {1, 1}, {1, 0, 0}};
  const std::vector<int> labels{0, 1, 0};
  const AccuracyReport r = accuracy_curve(preds, labels, "Model A");

  CHECK(r.model_id == "Model A");
  REQUIRE(r.seconds == std::vector<int>{1, 2, 3});
  CHECK(r.alive == std::vector<int>{3, 3, 1});
  CHECK(r.accuracy[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(r.accuracy[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(r.accuracy[2] == 1.0);
  CHECK(r.overall == doctest::Approx(7.0 / 9.0).epsilon(1e-12));
  CHECK(r.buckets[0] == doctest::Approx(7.0 / 9.0).epsilon(1e-12));
  for (int b : {1, 2, 3}) CHECK(std::isnan(r.buckets[static_cast<std::size_t>(b)]));
}

TEST_CASE("accuracy_curve: all-correct predictions give a flat 1.0 curve") {
  const std::vector<std::vector<int>> preds{{1, 1, 1, 1}, {1, 1}};
  const std::vector<int> labels{1, 1};
  const AccuracyReport r = accuracy_curve(preds, labels, "m");
  for (double a : r.accuracy) CHECK(a == 1.0);
  CHECK(r.overall == 1.0);
  CHECK(r.buckets[0] == 1.0);
}

TEST_CASE("accuracy_curve never evaluates beyond second 99") {
  std::vector<std::vector<int>> preds{std::vector<int>(100, 0)};
  const std::vector<int> labels{0};
  const AccuracyReport r = accuracy_curve(preds, labels, "m");
  CHECK(r.seconds.size() == 99);
  CHECK(r.seconds.back() == 99);
  // Bucket boundaries: 24 -> first, 25 -> second, 75 -> last.
  CHECK(r.buckets[0] == 1.0);
  CHECK(r.buckets[3] == 1.0);
}

TEST_CASE("accuracy_curve rejects empty or misaligned input") {
  CHECK_THROWS_AS(accuracy_curve({}, std::vector<int>{}, "m"), EmptySetError);
  const std::vector<std::vector<int>> no_seconds{{}, {}};
  CHECK_THROWS_AS(accuracy_curve(no_seconds, std::vector<int>{0, 1}, "m"), EmptySetError);
  const std::vector<std::vector<int>> one{{0}};
  CHECK_THROWS_AS(accuracy_curve(one, std::vector<int>{0, 1}, "m"), ShapeMismatchError);
}

TEST_CASE("report csv renders the published comparison row verbatim") {
  const AccuracyReport a =
      table_report("Model A", 0.7228, {0.6248, 0.7288, 0.7388, 0.7988});
  const AccuracyReport b =
      table_report("Model B", 0.8055, {0.5632, 0.8580, 0.9064, 0.8944});
  const std::string csv = report_csv(a, b);
  CHECK(csv.find("model,overall,0-24s,25-49s,50-74s,75-99s\n") == 0);
  CHECK(csv.find("Model A,72.28,62.48,72.88,73.88,79.88\n") != std::string::npos);
  CHECK(csv.find("Model B,80.55,56.32,85.80,90.64,89.44\n") != std::string::npos);
}

TEST_CASE("curve csv round-trips its values to 1e-9") {
  const std::vector<std::vector<int>> pa{{0, 1, 0}, {1, 1}};
  const std::vector<std::vector<int>> pb{{0, 0, 0}, {0, 1}};
  const std::vector<int> labels{0, 1};
  const AccuracyReport a = accuracy_curve(pa, labels, "Model A");
  const AccuracyReport b = accuracy_curve(pb, labels, "Model B");

  const std::string csv = curve_csv(a, b);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,acc_A,acc_B,alive");
  std::size_t i = 0;
  while (std::getline(in, line)) {
    int t = 0, alive = 0;
    double acc_a = 0.0, acc_b = 0.0;
    REQUIRE(std::sscanf(line.c_str(), "%d,%lf,%lf,%d", &t, &acc_a, &acc_b, &alive) == 4);
    REQUIRE(i < a.seconds.size());
    CHECK(t == a.seconds[i]);
    CHECK(alive == a.alive[i]);
    CHECK(acc_a == doctest::Approx(a.accuracy[i]).epsilon(1e-9));
    CHECK(acc_b == doctest::Approx(b.accuracy[i]).epsilon(1e-9));
    ++i;
  }
  CHECK(i == a.seconds.size());

  // Identical reports produce identical columns.
  const std::string same = curve_csv(a, a);
  std::istringstream in2(same);
  std::getline(in2, line);
  while (std::getline(in2, line)) {
    int t = 0, alive = 0;
    double acc_a = 0.0, acc_b = 0.0;
    REQUIRE(std::sscanf(line.c_str(), "%d,%lf,%lf,%d", &t, &acc_a, &acc_b, &alive) == 4);
    CHECK(acc_a == acc_b);
  }
}

TEST_CASE("svg has one polyline per model with one point per second") {
  const std::vector<std::vector<int>> pa{{0, 1, 0, 1, 0}};
  const std::vector<std::vector<int>> pb{{1, 1, 0, 0, 1}};
  const std::vector<int> labels{0};
  const AccuracyReport a = accuracy_curve(pa, labels, "Model A");
  const AccuracyReport b = accuracy_curve(pb, labels, "Model B");

  const std::string svg = curves_svg(a, b);
  CHECK(svg.find("<svg ") == 0);
  CHECK(svg.rfind("</svg>\n") == svg.size() - 7);
  CHECK(count_substr(svg, "<polyline") == 2);
  // Each polyline carries seconds.size() "x,y" pairs.
  std::size_t pos = 0;
  for (int k = 0; k < 2; ++k) {
    pos = svg.find("points=\"", pos);
    REQUIRE(pos != std::string::npos);
    pos += 8;
    const std::size_t end = svg.find('"', pos);
    const std::string pts = svg.substr(pos, end - pos);
    CHECK(count_substr(pts, ",") == a.seconds.size());
    CHECK(count_substr(pts, " ") == a.seconds.size() - 1);
  }
  CHECK(svg.find(">Model A</text>") != std::string::npos);
  CHECK(svg.find(">Model B</text>") != std::string::npos);

  // Reports over different evaluation sets cannot be charted together.
  const std::vector<std::vector<int>> shorter{{1, 1}};
  const AccuracyReport c = accuracy_curve(shorter, labels, "Model B");
  CHECK_THROWS_AS(curves_svg(a, c), ShapeMismatchError);
  CHECK_THROWS_AS(curve_csv(a, c), ShapeMismatchError);
}

TEST_CASE("emit_report writes the three artifacts") {
  const std::vector<std::vector<int>> pa{{0, 1}, {1, 0}};
  const std::vector<std::vector<int>> pb{{0, 0}, {1, 1}};
  const std::vector<int> labels{0, 1};
  const AccuracyReport a = accuracy_curve(pa, labels, "Model A");
  const AccuracyReport b = accuracy_curve(pb, labels, "Model B");

  const fs::path dir = fs::temp_directory_path() / "vroc_eval_report";
  fs::remove_all(dir);
  emit_report(a, b, dir.string());
  CHECK(slurp(dir / "report.csv") == report_csv(a, b));
  CHECK(slurp(dir / "curve.csv") == curve_csv(a, b));
  CHECK(slurp(dir / "curves.svg") == curves_svg(a, b));
  fs::remove_all(dir);
}

TEST_CASE("predict_round: one causal prediction per second") {
  const RoundDataset& ds = tiny_dataset();
  const ModelConfig mcfg = tiny_model();
  const AttentionLayout layout = AttentionLayout::build(mcfg);
  const ModelWeights w = ModelWeights::init(mcfg, 17);
  const FusionWeights fw =
      FusionWeights::init(16, mcfg.d_model, static_cast<int>(ds.vocab().agents.size()),
                          static_cast<int>(ds.vocab().areas.size()), 18);

  const int round = 0;
  const std::vector<int> visual = predict_round(ds, round, w, layout, nullptr);
  REQUIRE(static_cast<int>(visual.size()) == ds.max_t(round));
  for (int p : visual) CHECK((p == 0 || p == 1));
  CHECK(predict_round(ds, round, w, layout, nullptr) == visual);  // deterministic

  const std::vector<int> fused = predict_round(ds, round, w, layout, &fw);
  REQUIRE(fused.size() == visual.size());

  // Causality: deleting all events after second `cut` cannot change any
  // prediction at or before `cut`.
  const int cut = std::max(1, ds.max_t(round) / 2);
  const TruncatedEvents truncated(ds, static_cast<double>(cut));
  const std::vector<int> cut_preds = predict_round(truncated, round, w, layout, &fw);
  for (int t = 1; t <= cut; ++t)
    CHECK(cut_preds[static_cast<std::size_t>(t - 1)] == fused[static_cast<std::size_t>(t - 1)]);
}

TEST_CASE("predict_rounds matches per-round calls") {
  const RoundDataset& ds = tiny_dataset();
  const ModelConfig mcfg = tiny_model();
  const AttentionLayout layout = AttentionLayout::build(mcfg);
  const ModelWeights w = ModelWeights::init(mcfg, 23);

  std::vector<int> rounds{0, 2, 4};
  const auto batch = predict_rounds(ds, rounds, w, layout, nullptr);
  REQUIRE(batch.size() == 3);
  for (std::size_t i = 0; i < rounds.size(); ++i)
    CHECK(batch[i] == predict_round(ds, rounds[i], w, layout, nullptr));
}

}  // TEST_SUITE
