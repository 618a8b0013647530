#pragma once

#include <functional>
#include <string>
#include <vector>

#include "zsnlu/graph.hpp"
#include "zsnlu/model.hpp"

namespace zsnlu {

struct ParamGradError {
  std::string name;
  ParamGroup group = ParamGroup::kRest;
  std::size_t entries = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
};

struct GradCheckReport {
  std::vector<ParamGradError> params;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
};

// Relative error per entry is |a - n| / max(|a|, |n|, floor), with n the
// central difference (f(x + h) - f(x - h)) / 2h. `build` must construct the
// same scalar loss on every call.
GradCheckReport check_gradients(ParamStore& params, const std::function<Var(Graph&)>& build,
                                double step = 1e-5, double floor = 1e-8);

struct GradCheckShape {
  std::size_t dim = 8;
  std::size_t dim_enc = 12;
  std::size_t tokens = 5;          // T
  std::size_t intent_words = 3;    // Q
  std::size_t slot_words = 2;      // S
  std::size_t exemplars = 2;       // K
  std::size_t intent_slots = 3;    // L
};

// Random joint-loss fixture of the given shape, checked for one head/gamma
// combination.
GradCheckReport grad_check_model(const GradCheckShape& shape, IntentHead head, bool use_gamma,
                                 std::uint64_t seed, double step = 1e-5);

}  // namespace zsnlu
