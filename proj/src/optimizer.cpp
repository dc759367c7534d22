#include "drtune/optimizer.hpp"

#include <cmath>

namespace drtune {

double grad_global_norm(const std::vector<Array>& grads) {
  double sq = 0.0;
  for (const Array& g : grads) sq += g.square().sum();
  return std::sqrt(sq);
}

void clip_and_step(const std::vector<ParamBlock*>& params,
                   std::vector<Array> grads, AdamWState& state,
                   const AdamWConfig& cfg) {
  if (params.size() != grads.size())
    throw ValueError("clip_and_step: params/grads size mismatch");
  for (const Array& g : grads)
    if (!g.isFinite().all())
      throw ValueError("clip_and_step: non-finite gradient");

  const double norm = grad_global_norm(grads);
  if (cfg.clip_norm > 0.0 && norm > cfg.clip_norm) {
    const double s = cfg.clip_norm / norm;
    for (Array& g : grads) g *= s;
  }

  if (state.m.empty()) {
    for (const ParamBlock* p : params) {
      state.m.push_back(Array::Zero(p->value.size()));
      state.v.push_back(Array::Zero(p->value.size()));
    }
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Array& m = state.m[i];
    Array& v = state.v[i];
    const Array& g = grads[i];
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.square();
    const Array mhat = m / bc1;
    const Array vhat = v / bc2;
    Array& p = params[i]->value;
    p -= cfg.lr * (mhat / (vhat.sqrt() + cfg.eps) + cfg.weight_decay * p);
  }
}

}  // namespace drtune
