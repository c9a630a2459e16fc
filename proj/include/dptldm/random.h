// Copyright 2026 The DP-TLDM Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DPTLDM_RANDOM_H_
#define DPTLDM_RANDOM_H_

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace dptldm {

// Seeded pseudo-random stream. Every random quantity in the library is drawn
// from an Rng, so a run is reproducible from its master seed. Substreams
// obtained with Fork() are independent of the parent's consumption state:
// Fork("train") returns the same stream no matter how many draws the parent
// has already made.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t seed() const { return seed_; }

  // Uniform on [0, 1).
  double Uniform();
  // Standard normal.
  double Normal();
  // Uniform on {0, ..., n - 1}; n must be positive.
  uint64_t UniformInt(uint64_t n);
  bool Bernoulli(double p);

  // Fisher-Yates permutation of {0, ..., n - 1}.
  std::vector<size_t> Permutation(size_t n);

  Rng Fork(std::string_view name) const;
  Rng Fork(uint64_t index) const;

 private:
  uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
  std::uniform_real_distribution<double> uniform_;
};

// Mixes a 64-bit value; used to derive substream seeds.
uint64_t SplitMix64(uint64_t x);

}  // namespace dptldm

#endif  // DPTLDM_RANDOM_H_
