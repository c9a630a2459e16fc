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

#include "dptldm/fdp_accountant.h"

#include <cmath>
#include <limits>
#include <numbers>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "dptldm/gaussian.h"
#include "dptldm/status_macros.h"

namespace dptldm {
namespace {

bool InUnitInterval(double x) { return x >= 0.0 && x <= 1.0; }

}  // namespace

absl::Status PrivacyBudget::Validate() const {
  if (!(noise_scale > 0.0)) {
    return absl::InvalidArgumentError("budget: sigma must be positive");
  }
  if (!(batch_size >= 1.0) || !(dataset_size >= batch_size)) {
    return absl::InvalidArgumentError("budget: need 1 <= b <= N");
  }
  if (!(epochs >= 1.0)) return absl::InvalidArgumentError("budget: need E >= 1");
  if (!(release_multiplier > 0.0)) {
    return absl::InvalidArgumentError("budget: release multiplier must be positive");
  }
  return absl::OkStatus();
}

nlohmann::json AccountantReport::ToJson() const {
  return {{"sigma", budget.noise_scale},
          {"N", budget.dataset_size},
          {"b", budget.batch_size},
          {"E", budget.epochs},
          {"release_multiplier", budget.release_multiplier},
          {"c", c},
          {"h", h},
          {"mu", mu},
          {"a", fixed_point},
          {"separation", separation}};
}

absl::StatusOr<double> HSigma(double noise_scale) {
  if (!(noise_scale > 0.0)) {
    return absl::InvalidArgumentError("h(sigma): sigma must be positive");
  }
  const double s = 1.0 / (noise_scale * noise_scale);
  const double u = 1.5 / noise_scale;
  const double v = 0.5 / noise_scale;
  if (s > 50.0) {
    // e^s Phi(u) dwarfs the remaining O(1) terms; stay in log space.
    const double log_h = 0.5 * (std::log(2.0) + s + LogNormalCdf(u));
    return std::exp(log_h);
  }
  // e^s Phi(u) + 3 Phi(-v) - 2
  //   = expm1(s) Phi(u) + erf(u / sqrt2) / 2 - 3 erf(v / sqrt2) / 2,
  // which avoids cancelling O(1) terms for large sigma.
  const double bracket = std::expm1(s) * NormalCdf(u) +
                         0.5 * std::erf(u / std::numbers::sqrt2) -
                         1.5 * std::erf(v / std::numbers::sqrt2);
  return std::sqrt(2.0 * std::max(0.0, bracket));
}

absl::StatusOr<double> MuOf(const PrivacyBudget& budget) {
  RETURN_IF_ERROR(budget.Validate());
  ASSIGN_OR_RETURN(const double h, HSigma(budget.noise_scale));
  const double c = std::sqrt(budget.release_multiplier * budget.batch_size *
                             budget.epochs / budget.dataset_size);
  return c * h;
}

absl::StatusOr<double> GaussianTradeoff(double mu, double alpha) {
  if (!(mu >= 0.0)) return absl::InvalidArgumentError("G_mu: need mu >= 0");
  if (!InUnitInterval(alpha)) {
    return absl::InvalidArgumentError("G_mu: alpha must lie in [0, 1]");
  }
  if (alpha == 0.0) return 1.0;
  if (alpha == 1.0) return 0.0;
  return NormalCdf(NormalQuantile(1.0 - alpha) - mu);
}

absl::StatusOr<Separation> SeparationOf(double mu) {
  if (!(mu >= 0.0)) return absl::InvalidArgumentError("separation: need mu >= 0");
  Separation out;
  out.fixed_point = NormalCdf(-0.5 * mu);
  // sqrt(2) |a - 1/2| with a = Phi(-mu/2) = 1 - Phi(mu/2); evaluated through
  // erf to keep precision for small mu.
  out.separation = std::numbers::sqrt2 * 0.5 *
                   std::erf(0.5 * mu / std::numbers::sqrt2);
  return out;
}

absl::StatusOr<double> FixedPointByBisection(double mu, double tolerance) {
  if (!(mu >= 0.0)) return absl::InvalidArgumentError("fixed point: need mu >= 0");
  double lo = 0.0;
  double hi = 0.5;
  // G_mu(a) - a is strictly decreasing: positive at 0, non-positive at 1/2.
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    ASSIGN_OR_RETURN(const double g, GaussianTradeoff(mu, mid));
    if (g - mid > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

absl::StatusOr<double> MuOfSeparation(double separation) {
  if (!(separation >= 0.0 && separation < kMaxSeparation)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "separation must lie in [0, sqrt(2)/2), got ", separation));
  }
  return 2.0 * NormalQuantile(separation / std::numbers::sqrt2 + 0.5);
}

absl::StatusOr<int64_t> MaxEpochs(double separation, double noise_scale,
                                  double dataset_size, double batch_size,
                                  double release_multiplier) {
  ASSIGN_OR_RETURN(const double target, MuOfSeparation(separation));
  PrivacyBudget budget{noise_scale, dataset_size, batch_size, 1.0,
                       release_multiplier};
  RETURN_IF_ERROR(budget.Validate());
  ASSIGN_OR_RETURN(const double h, HSigma(noise_scale));
  if (!(h > 0.0) || !std::isfinite(h)) {
    return absl::FailedPreconditionError(
        absl::StrCat("max_epochs: h(sigma) = ", h, " admits no epochs"));
  }
  const double ratio = target / h;
  const double estimate = std::floor(ratio * ratio * dataset_size /
                                     (batch_size * release_multiplier));
  if (estimate > 1e15) {
    return absl::OutOfRangeError("max_epochs: budget allows unbounded epochs");
  }
  auto fits = [&](int64_t epochs) -> absl::StatusOr<bool> {
    if (epochs == 0) return true;
    budget.epochs = static_cast<double>(epochs);
    ASSIGN_OR_RETURN(const double mu, MuOf(budget));
    return mu <= target;
  };
  int64_t epochs = static_cast<int64_t>(estimate);
  while (true) {
    ASSIGN_OR_RETURN(const bool next_fits, fits(epochs + 1));
    if (!next_fits) break;
    ++epochs;
  }
  while (epochs > 0) {
    ASSIGN_OR_RETURN(const bool current_fits, fits(epochs));
    if (current_fits) break;
    --epochs;
  }
  if (epochs == 0) {
    return absl::FailedPreconditionError(absl::StrCat(
        "max_epochs: separation ", separation, " with sigma=", noise_scale,
        ", N=", dataset_size, ", b=", batch_size,
        " does not allow a single epoch; raise sigma or lower b/N"));
  }
  return epochs;
}

absl::StatusOr<AccountantReport> Account(const PrivacyBudget& budget) {
  RETURN_IF_ERROR(budget.Validate());
  AccountantReport report;
  report.budget = budget;
  ASSIGN_OR_RETURN(report.h, HSigma(budget.noise_scale));
  report.c = std::sqrt(budget.release_multiplier * budget.batch_size *
                       budget.epochs / budget.dataset_size);
  ASSIGN_OR_RETURN(report.mu, MuOf(budget));
  ASSIGN_OR_RETURN(const Separation sep, SeparationOf(report.mu));
  report.fixed_point = sep.fixed_point;
  report.separation = sep.separation;
  return report;
}

absl::StatusOr<double> EpsDeltaTradeoff(double epsilon, double delta,
                                        double alpha) {
  if (!(epsilon >= 0.0) || !InUnitInterval(delta) || !InUnitInterval(alpha)) {
    return absl::InvalidArgumentError(
        "f_{eps,delta}: need eps >= 0 and delta, alpha in [0, 1]");
  }
  const double e = std::exp(epsilon);
  return std::max({0.0, 1.0 - delta - e * alpha, (1.0 - delta - alpha) / e});
}

}  // namespace dptldm
