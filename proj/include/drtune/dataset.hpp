#pragma once

#include <string>
#include <vector>

#include "drtune/rng.hpp"
#include "drtune/tape.hpp"

namespace drtune {

// Toy image corpus, pixels in [-1, 1]. Labels are class ids used by the
// classifier reward (for "shapes": shape count - 1).
struct ToyDataset {
  int height = 0;
  int width = 0;
  int num_classes = 1;
  std::vector<Array> images;  // flattened h*w
  std::vector<int> labels;

  int npix() const { return height * width; }
  double pixel_mean() const;
};

enum class DatasetKind { shapes, blobs, checkers };

DatasetKind parse_dataset_kind(const std::string& s);
std::string to_string(DatasetKind k);

// Deterministic in seed. "shapes" draws 1-3 axis-aligned rectangles and
// discs at off-center positions, so the corpus is left-right asymmetric.
ToyDataset gen_toy_dataset(DatasetKind kind, int n, int res, std::uint64_t seed);

}  // namespace drtune
