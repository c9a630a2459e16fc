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

// f-DP accounting for subsampled Gaussian DP-SGD.
//
// Under the central-limit approximation, E epochs of DP-SGD with noise
// multiplier sigma and expected batch b out of N records are mu-GDP with
//
//   mu = sqrt(b E / N) * h(sigma),
//   h(sigma) = sqrt(2 (e^{1/sigma^2} Phi(3 / (2 sigma))
//                      + 3 Phi(-1 / (2 sigma)) - 2)).
//
// The strength of a mu-GDP guarantee is summarized by its separation: the
// Euclidean distance between the trade-off curve G_mu(alpha) =
// Phi(Phi^{-1}(1 - alpha) - mu) and the random-guess line 1 - alpha, measured
// at the fixed point G_mu(a) = a. By the symmetry of G_mu the fixed point is
// a = Phi(-mu / 2), so sep = sqrt(2) (Phi(mu / 2) - 1/2).

#ifndef DPTLDM_FDP_ACCOUNTANT_H_
#define DPTLDM_FDP_ACCOUNTANT_H_

#include <cstdint>

#include "absl/status/statusor.h"
#include "json.hpp"

namespace dptldm {

// sqrt(2) / 2: the supremum of the separation.
inline constexpr double kMaxSeparation = 0.70710678118654752440;

struct PrivacyBudget {
  double noise_scale = 1.0;    // sigma
  double dataset_size = 1.0;   // N
  double batch_size = 1.0;     // b, expected
  double epochs = 1.0;         // E
  // Gradient releases per round counted against the budget; scales the
  // effective epoch count.
  double release_multiplier = 1.0;

  absl::Status Validate() const;
};

struct AccountantReport {
  PrivacyBudget budget;
  double c = 0.0;  // sqrt(m b E / N)
  double h = 0.0;  // h(sigma)
  double mu = 0.0;
  double fixed_point = 0.5;  // a with G_mu(a) = a
  double separation = 0.0;

  nlohmann::json ToJson() const;
};

struct Separation {
  double separation = 0.0;
  double fixed_point = 0.5;
};

absl::StatusOr<double> HSigma(double noise_scale);

absl::StatusOr<double> MuOf(const PrivacyBudget& budget);

// G_mu(alpha) = Phi(Phi^{-1}(1 - alpha) - mu).
absl::StatusOr<double> GaussianTradeoff(double mu, double alpha);

// Closed form a = Phi(-mu / 2).
absl::StatusOr<Separation> SeparationOf(double mu);

// Fixed point of G_mu found by bisection on G_mu(a) - a over [0, 1/2].
absl::StatusOr<double> FixedPointByBisection(double mu, double tolerance = 1e-13);

// mu = 2 Phi^{-1}(sep / sqrt(2) + 1/2).
absl::StatusOr<double> MuOfSeparation(double separation);

// Largest E with MuOf({sigma, N, b, E, m}) <= MuOfSeparation(sep).
// FailedPrecondition if not even one epoch fits.
absl::StatusOr<int64_t> MaxEpochs(double separation, double noise_scale,
                                  double dataset_size, double batch_size,
                                  double release_multiplier = 1.0);

absl::StatusOr<AccountantReport> Account(const PrivacyBudget& budget);

// f_{eps,delta}(alpha) = max{0, 1 - delta - e^eps alpha,
//                             (1 - delta - alpha) e^-eps}.
absl::StatusOr<double> EpsDeltaTradeoff(double epsilon, double delta,
                                        double alpha);

}  // namespace dptldm

#endif  // DPTLDM_FDP_ACCOUNTANT_H_
