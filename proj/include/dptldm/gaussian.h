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

#ifndef DPTLDM_GAUSSIAN_H_
#define DPTLDM_GAUSSIAN_H_

namespace dptldm {

// Standard normal CDF. Uses erfc so both tails keep full relative precision.
double NormalCdf(double x);

// log(NormalCdf(x)), finite for very negative x.
double LogNormalCdf(double x);

// Inverse of NormalCdf on [0, 1]; returns -inf / +inf at the endpoints and NaN
// outside. Wichura's AS241 rational approximation followed by one Newton step
// on NormalCdf.
double NormalQuantile(double p);

}  // namespace dptldm

#endif  // DPTLDM_GAUSSIAN_H_
