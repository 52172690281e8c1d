#include "vroc/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace vroc {

namespace {

double eval_loss(const std::function<Tensor(Tape&)>& f, bool train_mode) {
  Tape tape(TapeOptions{.recording = false, .train_mode = train_mode, .check_finite = true});
  return f(tape).item();
}

}  // namespace

GradCheckResult grad_check(const std::function<Tensor(Tape&)>& f, std::vector<Tensor> params,
                           const GradCheckOptions& opts) {
  const double l0 = eval_loss(f, opts.train_mode);
  const double l1 = eval_loss(f, opts.train_mode);
  if (l0 != l1)
    throw NonDeterministicError("loss changed between identical forward passes (" +
                                std::to_string(l0) + " vs " + std::to_string(l1) + ")");

  // Analytic pass.
  for (Tensor& p : params) p.zero_grad();
  Tape tape(TapeOptions{.recording = true, .train_mode = opts.train_mode, .check_finite = true});
  Tensor loss = f(tape);
  tape.backward(loss);

  GradCheckResult res;
  Rng rng(opts.seed);
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& p = params[pi];
    const std::size_t n = p.numel();
    if (n == 0) continue;
    std::vector<std::size_t> entries;
    if (opts.max_entries_per_param <= 0 ||
        static_cast<std::size_t>(opts.max_entries_per_param) >= n) {
      entries.resize(n);
      for (std::size_t i = 0; i < n; ++i) entries[i] = i;
    } else {
      entries.push_back(0);
      while (entries.size() < static_cast<std::size_t>(opts.max_entries_per_param))
        entries.push_back(static_cast<std::size_t>(rng.below(n)));
      std::sort(entries.begin(), entries.end());
      entries.erase(std::unique(entries.begin(), entries.end()), entries.end());
    }

    auto vals = p.mutable_data();
    const auto grad = p.has_grad() ? p.grad() : std::span<const double>();
    for (std::size_t e : entries) {
      const double saved = vals[e];
      vals[e] = saved + opts.step;
      const double lp = eval_loss(f, opts.train_mode);
      vals[e] = saved - opts.step;
      const double lm = eval_loss(f, opts.train_mode);
      vals[e] = saved;
      const double numeric = (lp - lm) / (2.0 * opts.step);
      const double analytic = grad.empty() ? 0.0 : grad[e];
      const double rel =
          std::abs(analytic - numeric) /
          std::max({1.0, std::abs(analytic), std::abs(numeric)});
      ++res.entries_checked;
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        res.worst_param = static_cast<int>(pi);
        res.worst_entry = e;
        res.analytic = analytic;
        res.numeric = numeric;
      }
    }
  }
  return res;
}

}  // namespace vroc
