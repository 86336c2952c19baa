#pragma once

// Finite-difference check of the whole network on a scaled-down input.

#include "selfhar/model.hpp"
#include "selfhar/ndtensor.hpp"
#include "selfhar/rng.hpp"

namespace gradcheck {

using namespace selfhar;

// Narrow filters and short kernels so a 40-step window passes the valid-padding
// core; hidden sizes are shrunk to keep the check fast.
inline Architecture scaled_architecture() {
  Architecture a;
  a.conv = {{{4, 8}, {6, 6}, {8, 4}}};
  a.har_hidden = 16;
  a.td_hidden = 8;
  return a;
}

inline nd::GradientCheckReport check_tpn(std::uint64_t seed, Objective objective = Objective::Multitask,
                                         std::size_t time = 40, std::size_t classes = 3) {
  Rng rng = make_rng(seed, 0);
  TpnModel model = build_multitask_model(classes, seed, scaled_architecture(),
                                         {InitScheme::FanIn, 0.0}, true);
  if (objective == Objective::Linear) attach_linear_head(model, derive_seed(seed, 1));
  // Fan-in weights plus non-zero biases keep most units away from ReLU kinks.
  for (auto& p : parameter_refs(model)) {
    if (!p.is_weight) *p.value = Tensor::uniform(p.value->shape(), -0.1, 0.1, rng);
  }
  const Tensor window = Tensor::gaussian({time, 3}, 1.0, rng);
  Tensor target({classes});
  target[std::uniform_int_distribution<std::size_t>(0, classes - 1)(rng)] = 1.0;
  TransformLabels td{};
  td[std::uniform_int_distribution<std::size_t>(0, kTransformTaskCount - 1)(rng)] = 1;
  const Example ex{&window, &target, &td};

  TpnModel grads = zeros_like(model);
  ForwardTrace trace;
  forward_loss(model, ex, objective, nullptr, trace);
  backward(model, trace, ex, objective, grads);

  auto probe = [&] {
    ForwardTrace t;
    const TaskLosses l = forward_loss(model, ex, objective, nullptr, t);
    nd::LossProbe out{l.total(), regime_signature(t), {l.har}};
    if (objective == Objective::Transform || objective == Objective::Multitask) {
      for (std::size_t k = 0; k < kTransformTaskCount; ++k) {
        out.terms.push_back(nd::binary_cross_entropy_logit(t.td_logits[k], td[k]));
      }
    } else {
      out.terms.push_back(l.transform);
    }
    return out;
  };
  const auto params = parameter_refs(model, grads);
  return nd::finite_difference_check(params, probe);
}

}  // namespace gradcheck
