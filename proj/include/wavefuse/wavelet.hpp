#pragma once

#include <cstddef>
#include <vector>

#include "wavefuse/feature_map.hpp"

namespace wavefuse {

// One-level 2D Haar decomposition. Naming follows (row filter, column filter):
// lh is low-pass across rows and high-pass across columns, so it responds to
// horizontal changes within a row.
struct SubBands {
  FeatureMap ll, lh, hl, hh;
};

// Detail sub-bands only; the high-frequency half of SubBands.
struct DetailBands {
  FeatureMap lh, hl, hh;
};

inline DetailBands details(const SubBands& s) { return {s.lh, s.hl, s.hh}; }

// Orthonormal Haar analysis with filters L = [1, 1]/sqrt(2), H = [1, -1]/sqrt(2)
// and stride 2, per channel. Height and width must be even and nonzero.
SubBands dwt2_haar(const FeatureMap& x);

// Exact inverse of dwt2_haar. Output is channels x 2h x 2w.
FeatureMap idwt2_haar(const SubBands& s);

// Level k+1 decomposes the ll band of level k. Element 0 is the finest level.
std::vector<SubBands> dwt2_multilevel(const FeatureMap& x, std::size_t levels);

// Inverse of dwt2_multilevel; uses the ll band of the coarsest level and the
// detail bands of every level.
FeatureMap idwt2_multilevel(const std::vector<SubBands>& levels);

}  // namespace wavefuse
