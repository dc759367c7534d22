#include "drtune/dataset.hpp"

#include "drtune/error.hpp"

namespace drtune {

double ToyDataset::pixel_mean() const {
  double s = 0.0;
  for (const Array& im : images) s += im.mean();
  return s / static_cast<double>(images.size());
}

DatasetKind parse_dataset_kind(const std::string& s) {
  if (s == "shapes") return DatasetKind::shapes;
  if (s == "blobs") return DatasetKind::blobs;
  if (s == "checkers") return DatasetKind::checkers;
  throw ConfigError("unknown dataset kind: " + s);
}

std::string to_string(DatasetKind k) {
  switch (k) {
    case DatasetKind::shapes: return "shapes";
    case DatasetKind::blobs: return "blobs";
    case DatasetKind::checkers: return "checkers";
  }
  return "?";
}

namespace {

void draw_rect(Array& im, int res, int x0, int y0, int w, int h, double v) {
  for (int y = y0; y < y0 + h && y < res; ++y)
    for (int x = x0; x < x0 + w && x < res; ++x)
      im[static_cast<Eigen::Index>(y) * res + x] = v;
}

void draw_disc(Array& im, int res, double cx, double cy, double r, double v) {
  for (int y = 0; y < res; ++y)
    for (int x = 0; x < res; ++x)
      if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r)
        im[static_cast<Eigen::Index>(y) * res + x] = v;
}

Array gen_shapes(int res, Rng& rng, int& label) {
  Array im = Array::Constant(static_cast<Eigen::Index>(res) * res, -1.0);
  const int count = rng.randint(1, 3);
  label = count - 1;
  for (int s = 0; s < count; ++s) {
    const double v = 0.5 + 0.5 * rng.uniform();
    // Off-center placement: keep shape centers in the left 40% or the
    // right-of-center band, never straddling the vertical midline.
    const bool left = rng.uniform() < 0.5;
    const int lo = left ? 0 : res * 55 / 100;
    const int hi = left ? res * 35 / 100 : res - res / 4;
    const int cx = rng.randint(lo, std::max(lo, hi));
    const int cy = rng.randint(res / 8, res - 1 - res / 8);
    if (rng.uniform() < 0.5) {
      const int w = rng.randint(2, std::max(2, res / 3));
      const int h = rng.randint(2, std::max(2, res / 3));
      draw_rect(im, res, cx, std::max(0, cy - h / 2), w, h, v);
    } else {
      const double r = 1.0 + rng.uniform() * res / 6.0;
      draw_disc(im, res, cx, cy, r, v);
    }
  }
  return im;
}

Array gen_blobs(int res, Rng& rng, int& label) {
  Array im = Array::Constant(static_cast<Eigen::Index>(res) * res, -1.0);
  const int count = rng.randint(1, 2);
  label = count - 1;
  for (int s = 0; s < count; ++s) {
    const double cx = rng.uniform() * (res - 1);
    const double cy = rng.uniform() * (res - 1);
    const double sigma = 1.0 + rng.uniform() * res / 5.0;
    const double amp = 1.0 + rng.uniform();
    for (int y = 0; y < res; ++y)
      for (int x = 0; x < res; ++x) {
        const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        double& p = im[static_cast<Eigen::Index>(y) * res + x];
        p = std::min(1.0, p + amp * std::exp(-d2 / (2.0 * sigma * sigma)));
      }
  }
  return im;
}

Array gen_checkers(int res, Rng& rng, int& label) {
  const int cell = 1 << rng.randint(0, 2);
  label = cell == 1 ? 0 : (cell == 2 ? 1 : 2);
  const int phase = rng.randint(0, 1);
  Array im(static_cast<Eigen::Index>(res) * res);
  for (int y = 0; y < res; ++y)
    for (int x = 0; x < res; ++x)
      im[static_cast<Eigen::Index>(y) * res + x] =
          (((x / cell) + (y / cell) + phase) % 2 == 0) ? 1.0 : -1.0;
  return im;
}

}  // namespace

ToyDataset gen_toy_dataset(DatasetKind kind, int n, int res,
                           std::uint64_t seed) {
  if (n < 1) throw ValueError("gen_toy_dataset: n must be >= 1");
  if (res != 8 && res != 16 && res != 32)
    throw ValueError("gen_toy_dataset: res must be one of 8, 16, 32");
  Rng rng(seed);
  ToyDataset ds;
  ds.height = res;
  ds.width = res;
  ds.num_classes = 3;
  ds.images.reserve(n);
  ds.labels.reserve(n);
  for (int i = 0; i < n; ++i) {
    int label = 0;
    Array im;
    switch (kind) {
      case DatasetKind::shapes: im = gen_shapes(res, rng, label); break;
      case DatasetKind::blobs: im = gen_blobs(res, rng, label); break;
      case DatasetKind::checkers: im = gen_checkers(res, rng, label); break;
    }
    ds.images.push_back(std::move(im));
    ds.labels.push_back(label);
  }
  return ds;
}

}  // namespace drtune
