#include "wavefuse/wavelet.hpp"

#include "wavefuse/parallel.hpp"

namespace wavefuse {

SubBands dwt2_haar(const FeatureMap& x) {
  const Shape& in = x.shape();
  if (in.size() == 0) throw Error("dwt2_haar: zero-sized feature map");
  if (in.height % 2 != 0 || in.width % 2 != 0) {
    throw Error("dwt2_haar: height and width must be even, got " +
                to_string(in));
  }
  require_finite(x, "dwt2_haar input");

  const Shape half{in.channels, in.height / 2, in.width / 2};
  SubBands out{FeatureMap(half), FeatureMap(half), FeatureMap(half),
               FeatureMap(half)};

  // The 2x2 separable product of L and H is 1/2 times a sign pattern.
  parallel_for(in.channels, [&](std::size_t c) {
    auto src = x.channel(c);
    auto ll = out.ll.channel(c);
    auto lh = out.lh.channel(c);
    auto hl = out.hl.channel(c);
    auto hh = out.hh.channel(c);
    for (std::size_t y = 0; y < half.height; ++y) {
      const float* r0 = src.data() + 2 * y * in.width;
      const float* r1 = r0 + in.width;
      const std::size_t row = y * half.width;
      for (std::size_t i = 0; i < half.width; ++i) {
        const float a = r0[2 * i], b = r0[2 * i + 1];
        const float cc = r1[2 * i], d = r1[2 * i + 1];
        ll[row + i] = 0.5f * ((a + b) + (cc + d));
        lh[row + i] = 0.5f * ((a - b) + (cc - d));
        hl[row + i] = 0.5f * ((a + b) - (cc + d));
        hh[row + i] = 0.5f * ((a - b) - (cc - d));
      }
    }
  });
  return out;
}

FeatureMap idwt2_haar(const SubBands& s) {
  const Shape& half = s.ll.shape();
  if (s.lh.shape() != half || s.hl.shape() != half || s.hh.shape() != half) {
    throw Error("idwt2_haar: sub-band shapes differ (" + to_string(half) + ", " +
                to_string(s.lh.shape()) + ", " + to_string(s.hl.shape()) +
                ", " + to_string(s.hh.shape()) + ")");
  }
  if (half.size() == 0) throw Error("idwt2_haar: zero-sized sub-bands");

  const Shape full{half.channels, half.height * 2, half.width * 2};
  FeatureMap out(full);
  parallel_for(half.channels, [&](std::size_t c) {
    auto ll = s.ll.channel(c);
    auto lh = s.lh.channel(c);
    auto hl = s.hl.channel(c);
    auto hh = s.hh.channel(c);
    auto dst = out.channel(c);
    for (std::size_t y = 0; y < half.height; ++y) {
      float* r0 = dst.data() + 2 * y * full.width;
      float* r1 = r0 + full.width;
      const std::size_t row = y * half.width;
      for (std::size_t i = 0; i < half.width; ++i) {
        const float p = ll[row + i], q = lh[row + i];
        const float r = hl[row + i], t = hh[row + i];
        r0[2 * i] = 0.5f * ((p + q) + (r + t));
        r0[2 * i + 1] = 0.5f * ((p - q) + (r - t));
        r1[2 * i] = 0.5f * ((p + q) - (r + t));
        r1[2 * i + 1] = 0.5f * ((p - q) - (r - t));
      }
    }
  });
  return out;
}

std::vector<SubBands> dwt2_multilevel(const FeatureMap& x, std::size_t levels) {
  if (levels == 0) throw Error("dwt2_multilevel: levels must be positive");
  if (levels >= 8 * sizeof(std::size_t)) {
    throw Error("dwt2_multilevel: too many levels");
  }
  const std::size_t step = std::size_t{1} << levels;
  if (x.height() % step != 0 || x.width() % step != 0) {
    throw Error("dwt2_multilevel: " + to_string(x.shape()) +
                " is not divisible by 2^" + std::to_string(levels));
  }
  std::vector<SubBands> out;
  out.reserve(levels);
  out.push_back(dwt2_haar(x));
  for (std::size_t k = 1; k < levels; ++k) {
    out.push_back(dwt2_haar(out.back().ll));
  }
  return out;
}

FeatureMap idwt2_multilevel(const std::vector<SubBands>& levels) {
  if (levels.empty()) throw Error("idwt2_multilevel: no levels");
  FeatureMap current = levels.back().ll;
  for (auto it = levels.rbegin(); it != levels.rend(); ++it) {
    current = idwt2_haar(SubBands{std::move(current), it->lh, it->hl, it->hh});
  }
  return current;
}

}  // namespace wavefuse
