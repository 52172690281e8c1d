#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "vroc/tensor.hpp"

namespace vroc {

struct GradCheckOptions {
  double step = 1e-5;  // central-difference half-step
  // 0 checks every entry; otherwise at most this many entries per
  // parameter tensor, chosen by a seeded draw (always including entry 0).
  int max_entries_per_param = 0;
  std::uint64_t seed = 0x5eedc0de;
  // Run f on train-mode tapes (stochastic ops must then take fixed
  // seeds, or the determinism precheck fails).
  bool train_mode = false;
};

struct GradCheckResult {
  double max_rel_err = 0.0;
  int worst_param = -1;
  std::size_t worst_entry = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t entries_checked = 0;
};

// Compares the analytic gradient of the scalar `f(tape)` with a central
// finite difference, perturbing the listed parameters in place.
// Relative error per entry is |a - n| / max(1, |a|, |n|).
//
// The loss is evaluated twice up front; if the two values differ at all
// the function is not a fixed deterministic map of its parameters
// (e.g. an unseeded source of randomness) and NonDeterministicError is
// thrown, since finite differences would be meaningless.
GradCheckResult grad_check(const std::function<Tensor(Tape&)>& f, std::vector<Tensor> params,
                           const GradCheckOptions& opts = {});

}  // namespace vroc
