#include "drtune/pretrain.hpp"

#include "drtune/optimizer.hpp"
#include "drtune/sampler.hpp"

namespace drtune {

PretrainLog pretrain(Denoiser& model, const ToyDataset& ds,
                     const NoiseSchedule& sched, const PretrainOptions& opt,
                     Rng& rng) {
  if (ds.images.empty()) throw ValueError("pretrain: empty dataset");
  if (ds.height != model.height || ds.width != model.width)
    throw ShapeError("pretrain: dataset resolution differs from model");

  const int npix = model.npix();
  const int n = static_cast<int>(ds.images.size());
  AdamWConfig adam;
  adam.lr = opt.lr;
  adam.weight_decay = 0.0;
  adam.clip_norm = 0.0;
  AdamWState state;
  PretrainLog log;
  log.loss.reserve(opt.iters);

  for (int it = 0; it < opt.iters; ++it) {
    const int t = rng.randint(1, sched.T);
    Array xb(static_cast<Eigen::Index>(opt.batch) * npix);
    for (int i = 0; i < opt.batch; ++i)
      xb.segment(static_cast<Eigen::Index>(i) * npix, npix) =
          ds.images[rng.randint(0, n - 1)];
    Tensor x0 = constant({opt.batch, npix}, std::move(xb));
    Tensor eps = constant(
        {opt.batch, npix},
        rng.normal_array(static_cast<Eigen::Index>(opt.batch) * npix));

    Tape tape;
    Binding bind = bind_base(&tape, model.mlp);
    Tensor x_t = forward_diffuse(x0, t, eps, sched);
    Tensor eps_hat = model.forward(bind, x_t, t);
    Tensor loss = mean(square(sub(eps_hat, eps)));
    const double lv = loss.scalar();
    if (!std::isfinite(lv))
      throw ValueError("pretrain: loss diverged at iteration " +
                       std::to_string(it));
    log.loss.push_back(lv);

    tape.backward(loss);
    std::vector<Array> grads;
    grads.reserve(bind.leaves.size());
    for (const Tensor& leaf : bind.leaves) grads.push_back(tape.grad(leaf));
    clip_and_step(bind.trainable, std::move(grads), state, adam);
  }
  return log;
}

}  // namespace drtune
