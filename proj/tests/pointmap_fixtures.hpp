// Copyright 2026 The wbc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#ifndef WBC_TESTS_POINTMAP_FIXTURES_HPP_
#define WBC_TESTS_POINTMAP_FIXTURES_HPP_

#include <random>

#include "wbc/frames.hpp"

namespace wbc::testing {

// Pinhole back-projection of a random depth field (optical axis +z).
inline Pointmap SyntheticPointmap(int width, int height, std::mt19937_64& rng,
                                  double invalid_fraction = 0.0) {
  std::uniform_real_distribution<double> depth(0.3, 3.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double f = 0.8 * width;
  Pointmap pm;
  pm.width = width;
  pm.height = height;
  pm.frame = FrameTag::kCamera;
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const double z = depth(rng);
      pm.points.emplace_back((c + 0.5 - 0.5 * width) * z / f, (r + 0.5 - 0.5 * height) * z / f, z);
      pm.valid.push_back(u01(rng) >= invalid_fraction ? 1 : 0);
    }
  }
  return pm;
}

// Pointmap whose samples encode their own (row, col) for index checks.
inline Pointmap IndexPointmap(int width, int height) {
  Pointmap pm;
  pm.width = width;
  pm.height = height;
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      pm.points.emplace_back(r, c, 1.0);
      pm.valid.push_back(1);
    }
  }
  return pm;
}

}  // namespace wbc::testing

#endif  // WBC_TESTS_POINTMAP_FIXTURES_HPP_
