#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "vroc/dataset.hpp"
#include "vroc/fusion.hpp"
#include "vroc/model.hpp"

namespace vroc {

// Per-second predictions for one round: entry i is the class predicted
// at second t = i+1, assembled from frames and events at or before t
// only. Pass fusion = nullptr for the visual-only model.
std::vector<int> predict_round(const ClipDataset& ds, int round_index, const ModelWeights& w,
                               const AttentionLayout& layout, const FusionWeights* fusion);

// predict_round over a round set, fanned out on the process worker
// pool. Results are index-aligned with `rounds` and identical for any
// thread count.
std::vector<std::vector<int>> predict_rounds(const ClipDataset& ds, std::span<const int> rounds,
                                             const ModelWeights& w, const AttentionLayout& layout,
                                             const FusionWeights* fusion);

struct AccuracyReport {
  std::string model_id;
  std::vector<int> seconds;         // evaluated seconds, ascending
  std::vector<double> accuracy;     // correct/alive at seconds[i]
  std::vector<int> alive;           // rounds still in progress at seconds[i]
  std::array<double, 4> buckets{};  // means over [1,24],[25,49],[50,74],[75,99]; NaN if empty
  double overall = 0.0;             // unweighted mean of the per-second accuracies
};

// Aggregates per-round prediction vectors against true labels.
// accuracy(t) counts only rounds still in progress at second t; the
// overall figure is the unweighted mean over evaluated seconds.
// Seconds beyond 99 are not evaluated, so the four buckets partition
// the evaluated seconds exactly. Throws EmptySetError when nothing is
// evaluated.
AccuracyReport accuracy_curve(const std::vector<std::vector<int>>& predictions,
                              std::span<const int> labels, const std::string& model_id);

// Comparison table in percent (model, overall, four time buckets); one
// data row per report.
std::string report_csv(std::span<const AccuracyReport> reports);
// Per-second curves: t, one acc_<suffix> column per model (suffix =
// last word of the model id, so "Model A"/"Model B" give the canonical
// acc_A/acc_B pair), then alive. All reports must come from the same
// evaluation set.
std::string curve_csv(std::span<const AccuracyReport> reports);
// Self-contained line chart, one polyline per model.
std::string curves_svg(std::span<const AccuracyReport> reports);

// Writes report.csv, curve.csv and curves.svg into out_dir.
void emit_report(std::span<const AccuracyReport> reports, const std::string& out_dir);

// Two-model conveniences for the standard A/B comparison.
std::string report_csv(const AccuracyReport& a, const AccuracyReport& b);
std::string curve_csv(const AccuracyReport& a, const AccuracyReport& b);
std::string curves_svg(const AccuracyReport& a, const AccuracyReport& b);
void emit_report(const AccuracyReport& a, const AccuracyReport& b, const std::string& out_dir);

}  // namespace vroc
