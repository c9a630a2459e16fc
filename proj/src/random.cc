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

#include "dptldm/random.h"

#include <numeric>
#include <utility>

namespace dptldm {
namespace {

// 64-bit FNV-1a; stable across platforms, unlike std::hash.
uint64_t Fnv1a(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng::Rng(uint64_t seed) : seed_(seed), engine_(SplitMix64(seed)) {}

double Rng::Uniform() { return uniform_(engine_); }

double Rng::Normal() { return normal_(engine_); }

uint64_t Rng::UniformInt(uint64_t n) {
  std::uniform_int_distribution<uint64_t> dist(0, n - 1);
  return dist(engine_);
}

bool Rng::Bernoulli(double p) { return Uniform() < p; }

std::vector<size_t> Rng::Permutation(size_t n) {
  std::vector<size_t> perm(n);
  std::iota(perm.begin(), perm.end(), size_t{0});
  for (size_t i = n; i > 1; --i) {
    std::swap(perm[i - 1], perm[UniformInt(i)]);
  }
  return perm;
}

Rng Rng::Fork(std::string_view name) const {
  return Rng(SplitMix64(seed_ ^ Fnv1a(name)));
}

Rng Rng::Fork(uint64_t index) const {
  return Rng(SplitMix64(SplitMix64(seed_) + 0x632be59bd9b4e019ULL * (index + 1)));
}

}  // namespace dptldm
