#include "sgmcmc/oracle.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "sgmcmc/numerics.hpp"

namespace sgmcmc {

double TargetDistribution::cdf(double x) const {
  const double z = (x - loc) / scale;
  switch (kind) {
    case Kind::kGaussian:
      return norm_cdf(z);
    case Kind::kLogistic:
      return 1.0 / (1.0 + std::exp(-z));
    case Kind::kGumbel:
      return std::exp(-std::exp(-z));
  }
  return 0.0;
}

double TargetDistribution::pdf(double x) const {
  const double z = (x - loc) / scale;
  switch (kind) {
    case Kind::kGaussian:
      return std::exp(-0.5 * z * z) / (scale * std::sqrt(2.0 * std::numbers::pi));
    case Kind::kLogistic: {
      const double e = std::exp(-std::fabs(z));
      const double denom = (1.0 + e) * (1.0 + e);
      return e / (scale * denom);
    }
    case Kind::kGumbel:
      return std::exp(-(z + std::exp(-z))) / scale;
  }
  return 0.0;
}

double TargetDistribution::quantile(double q) const {
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("quantile: q must be in (0,1)");
  switch (kind) {
    case Kind::kGaussian:
      return loc + scale * norm_quantile(q);
    case Kind::kLogistic:
      return loc + scale * std::log(q / (1.0 - q));
    case Kind::kGumbel:
      return loc - scale * std::log(-std::log(q));
  }
  return 0.0;
}

double TargetDistribution::density_sup() const {
  switch (kind) {
    case Kind::kGaussian:
      return 1.0 / (scale * std::sqrt(2.0 * std::numbers::pi));
    case Kind::kLogistic:
      return 1.0 / (4.0 * scale);
    case Kind::kGumbel:
      return std::exp(-1.0) / scale;
  }
  return 0.0;
}

double TargetDistribution::sigma_equivalent() const {
  switch (kind) {
    case Kind::kGaussian:
      return scale;
    case Kind::kLogistic:
      return scale * std::numbers::pi / std::sqrt(3.0);
    case Kind::kGumbel:
      return scale * std::numbers::pi / std::sqrt(6.0);
  }
  return scale;
}

double TargetDistribution::mean() const {
  switch (kind) {
    case Kind::kGaussian:
    case Kind::kLogistic:
      return loc;
    case Kind::kGumbel:
      return loc + scale * 0.57721566490153286;  // Euler-Mascheroni
  }
  return loc;
}

std::string TargetDistribution::name() const {
  const char* family = "unknown";
  switch (kind) {
    case Kind::kGaussian:
      family = "gaussian";
      break;
    case Kind::kLogistic:
      family = "logistic";
      break;
    case Kind::kGumbel:
      family = "gumbel";
      break;
  }
  char buf[80];
  std::snprintf(buf, sizeof(buf), "%s(%g,%g)", family, loc, scale);
  return buf;
}

double sample_dist(const TargetDistribution& dist, RngStream& rng) {
  const double u = rng.next_uniform_open();
  return dist.quantile(u < 1.0 ? u : 1.0 - 0x1.0p-53);
}

double true_quantile(const TargetDistribution& dist, double q) { return dist.quantile(q); }

}  // namespace sgmcmc
