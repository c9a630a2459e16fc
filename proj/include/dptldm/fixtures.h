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

// Synthetic tables with known dependence structure, used by tests, the
// acceptance suite and the benchmark when no CSV is supplied.

#ifndef DPTLDM_FIXTURES_H_
#define DPTLDM_FIXTURES_H_

#include <cstdint>

#include "dptldm/table.h"

namespace dptldm {

// Columns age, income, segment, flag, score. income rises with age, segment
// is a noisy income tier, flag and score depend on segment. Independent
// draws for distinct seeds.
TableSchema MixedFixtureSchema();
Dataset MixedFixture(size_t n, uint64_t seed);

}  // namespace dptldm

#endif  // DPTLDM_FIXTURES_H_
