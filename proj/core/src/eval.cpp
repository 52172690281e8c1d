#include "vroc/eval.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>

#include "vroc/errors.hpp"
#include "vroc/thread_pool.hpp"

namespace vroc {

namespace {

// The furthest second any report aggregates; keeps the four 25-second
// buckets an exact partition of the evaluated range.
constexpr int kMaxEvalSecond = 99;

std::string format_double(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

}  // namespace

std::vector<int> predict_round(const ClipDataset& ds, int round_index, const ModelWeights& w,
                               const AttentionLayout& layout, const FusionWeights* fusion) {
  const int mt = ds.max_t(round_index);
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(mt));
  for (int t = 1; t <= mt; ++t) {
    Tape tape(TapeOptions{.recording = false, .train_mode = false, .check_finite = true});
    const Clip clip = ds.clip(round_index, t);
    std::optional<Tensor> fused;
    if (fusion != nullptr) {
      const std::vector<EventLabel> events = ds.events_until(round_index, t);
      const std::vector<int> idx = clip_frame_indices(ds.mode(), t);
      fused = fused_for_clip(tape, *fusion, ds.vocab(), events, t, idx, ds.fps());
    }
    out.push_back(predicted_class(forward_classify(tape, w, layout, clip, fused, 0)));
  }
  return out;
}

std::vector<std::vector<int>> predict_rounds(const ClipDataset& ds, std::span<const int> rounds,
                                             const ModelWeights& w, const AttentionLayout& layout,
                                             const FusionWeights* fusion) {
  std::vector<std::vector<int>> out(rounds.size());
  ThreadPool::instance().for_each_index(rounds.size(), [&](std::size_t i) {
    out[i] = predict_round(ds, rounds[i], w, layout, fusion);
  });
  return out;
}

AccuracyReport accuracy_curve(const std::vector<std::vector<int>>& predictions,
                              std::span<const int> labels, const std::string& model_id) {
  if (predictions.empty()) throw EmptySetError("accuracy_curve: no rounds to aggregate");
  if (predictions.size() != labels.size())
    throw ShapeMismatchError("accuracy_curve: " + std::to_string(predictions.size()) +
                             " prediction vectors for " + std::to_string(labels.size()) +
                             " labels");

  std::map<int, std::pair<int, int>> by_t;  // t -> (correct, alive)
  for (std::size_t r = 0; r < predictions.size(); ++r) {
    const std::vector<int>& p = predictions[r];
    const int last = std::min(static_cast<int>(p.size()), kMaxEvalSecond);
    for (int i = 0; i < last; ++i) {
      auto& [correct, alive] = by_t[i + 1];
      alive += 1;
      correct += p[static_cast<std::size_t>(i)] == labels[r] ? 1 : 0;
    }
  }
  if (by_t.empty()) throw EmptySetError("accuracy_curve: no evaluated seconds");

  AccuracyReport rep;
  rep.model_id = model_id;
  double sum = 0.0;
  std::array<double, 4> bucket_sum{};
  std::array<int, 4> bucket_n{};
  for (const auto& [t, ca] : by_t) {
    const double acc = static_cast<double>(ca.first) / static_cast<double>(ca.second);
    rep.seconds.push_back(t);
    rep.accuracy.push_back(acc);
    rep.alive.push_back(ca.second);
    sum += acc;
    const std::size_t b = static_cast<std::size_t>(t / 25);
    bucket_sum[b] += acc;
    bucket_n[b] += 1;
  }
  rep.overall = sum / static_cast<double>(rep.seconds.size());
  for (std::size_t b = 0; b < 4; ++b)
    rep.buckets[b] = bucket_n[b] > 0 ? bucket_sum[b] / bucket_n[b]
                                     : std::numeric_limits<double>::quiet_NaN();
  return rep;
}

std::string report_csv(std::span<const AccuracyReport> reports) {
  if (reports.empty()) throw EmptySetError("report_csv: no reports");
  std::string out = "model,overall,0-24s,25-49s,50-74s,75-99s\n";
  for (const AccuracyReport& r : reports) {
    out += r.model_id;
    out += "," + format_double("%.2f", 100.0 * r.overall);
    for (double v : r.buckets) out += "," + format_double("%.2f", 100.0 * v);
    out += "\n";
  }
  return out;
}

namespace {

void require_same_eval_set(std::span<const AccuracyReport> reports) {
  if (reports.empty()) throw EmptySetError("no reports");
  for (std::size_t i = 1; i < reports.size(); ++i) {
    if (reports[i].seconds != reports[0].seconds || reports[i].alive != reports[0].alive)
      throw ShapeMismatchError("reports cover different evaluation sets (" +
                               reports[0].model_id + " vs " + reports[i].model_id + ")");
  }
}

// Column suffix for a model's accuracy column: the last
// space-separated word of the id, commas stripped.
std::string column_suffix(const std::string& model_id) {
  const std::size_t pos = model_id.find_last_of(' ');
  std::string s = pos == std::string::npos ? model_id : model_id.substr(pos + 1);
  std::erase(s, ',');
  return s.empty() ? "model" : s;
}

}  // namespace

std::string curve_csv(std::span<const AccuracyReport> reports) {
  require_same_eval_set(reports);
  const AccuracyReport& first = reports.front();
  std::string out = "t";
  for (const AccuracyReport& r : reports) out += ",acc_" + column_suffix(r.model_id);
  out += ",alive\n";
  for (std::size_t i = 0; i < first.seconds.size(); ++i) {
    out += std::to_string(first.seconds[i]);
    for (const AccuracyReport& r : reports) out += "," + format_double("%.9f", r.accuracy[i]);
    out += "," + std::to_string(first.alive[i]) + "\n";
  }
  return out;
}

namespace {

constexpr int kSvgW = 720, kSvgH = 440;
constexpr int kMarL = 60, kMarR = 20, kMarT = 24, kMarB = 48;

double svg_x(double t) {
  return kMarL + (t / 100.0) * (kSvgW - kMarL - kMarR);
}

double svg_y(double acc) {
  return kSvgH - kMarB - acc * (kSvgH - kMarT - kMarB);
}

std::string polyline(const AccuracyReport& r, const char* color) {
  std::string pts;
  for (std::size_t i = 0; i < r.seconds.size(); ++i) {
    if (!pts.empty()) pts += " ";
    pts += format_double("%.2f", svg_x(static_cast<double>(r.seconds[i])));
    pts += "," + format_double("%.2f", svg_y(r.accuracy[i]));
  }
  return "  <polyline fill=\"none\" stroke=\"" + std::string(color) +
         "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
}

constexpr const char* kLineColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                       "#9467bd", "#8c564b"};

const char* line_color(std::size_t i) {
  return kLineColors[i % (sizeof(kLineColors) / sizeof(kLineColors[0]))];
}

}  // namespace

std::string curves_svg(std::span<const AccuracyReport> reports) {
  require_same_eval_set(reports);
  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(kSvgW) +
       "\" height=\"" + std::to_string(kSvgH) + "\" viewBox=\"0 0 " + std::to_string(kSvgW) +
       " " + std::to_string(kSvgH) + "\">\n";
  s += "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // Grid and axis labels.
  for (int t = 0; t <= 100; t += 25) {
    const std::string x = format_double("%.2f", svg_x(t));
    s += "  <line x1=\"" + x + "\" y1=\"" + std::to_string(kMarT) + "\" x2=\"" + x +
         "\" y2=\"" + std::to_string(kSvgH - kMarB) + "\" stroke=\"#dddddd\"/>\n";
    s += "  <text x=\"" + x + "\" y=\"" + std::to_string(kSvgH - kMarB + 18) +
         "\" font-size=\"12\" text-anchor=\"middle\">" + std::to_string(t) + "</text>\n";
  }
  for (int pct = 0; pct <= 100; pct += 25) {
    const std::string y = format_double("%.2f", svg_y(pct / 100.0));
    s += "  <line x1=\"" + std::to_string(kMarL) + "\" y1=\"" + y + "\" x2=\"" +
         std::to_string(kSvgW - kMarR) + "\" y2=\"" + y + "\" stroke=\"#dddddd\"/>\n";
    s += "  <text x=\"" + std::to_string(kMarL - 8) + "\" y=\"" + y +
         "\" font-size=\"12\" text-anchor=\"end\" dominant-baseline=\"middle\">" +
         std::to_string(pct) + "%</text>\n";
  }
  s += "  <text x=\"" + format_double("%.2f", svg_x(50)) + "\" y=\"" +
       std::to_string(kSvgH - 10) +
       "\" font-size=\"13\" text-anchor=\"middle\">round time (s)</text>\n";

  for (std::size_t i = 0; i < reports.size(); ++i) s += polyline(reports[i], line_color(i));

  // Legend, top-left inside the plot.
  const int lx = kMarL + 12;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const int ly = kMarT + 16 + 18 * static_cast<int>(i);
    s += "  <line x1=\"" + std::to_string(lx) + "\" y1=\"" + std::to_string(ly) + "\" x2=\"" +
         std::to_string(lx + 24) + "\" y2=\"" + std::to_string(ly) + "\" stroke=\"" +
         line_color(i) + "\" stroke-width=\"1.5\"/>\n";
    s += "  <text x=\"" + std::to_string(lx + 30) + "\" y=\"" + std::to_string(ly) +
         "\" font-size=\"12\" dominant-baseline=\"middle\">" + reports[i].model_id +
         "</text>\n";
  }

  s += "</svg>\n";
  return s;
}

void emit_report(std::span<const AccuracyReport> reports, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  const auto write = [&](const char* name, const std::string& body) {
    const fs::path p = fs::path(out_dir) / name;
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + p.string() + " for writing");
    f.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!f) throw IoError("short write on " + p.string());
  };
  write("report.csv", report_csv(reports));
  write("curve.csv", curve_csv(reports));
  write("curves.svg", curves_svg(reports));
}

namespace {

std::array<AccuracyReport, 2> pair_of(const AccuracyReport& a, const AccuracyReport& b) {
  return {a, b};
}

}  // namespace

std::string report_csv(const AccuracyReport& a, const AccuracyReport& b) {
  return report_csv(std::span<const AccuracyReport>(pair_of(a, b)));
}

std::string curve_csv(const AccuracyReport& a, const AccuracyReport& b) {
  return curve_csv(std::span<const AccuracyReport>(pair_of(a, b)));
}

std::string curves_svg(const AccuracyReport& a, const AccuracyReport& b) {
  return curves_svg(std::span<const AccuracyReport>(pair_of(a, b)));
}

void emit_report(const AccuracyReport& a, const AccuracyReport& b, const std::string& out_dir) {
  emit_report(std::span<const AccuracyReport>(pair_of(a, b)), out_dir);
}

}  // namespace vroc
