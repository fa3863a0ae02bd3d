#include "multimag/material.hpp"

#include "multimag/types.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace multimag {

MaterialLaw::MaterialLaw(LawKind kind, double c1, double c2, double c3, double c4)
    : kind_(kind), c1_(c1), c2_(c2), c3_(c3), c4_(c4) {}

MaterialLaw MaterialLaw::zero() { return {LawKind::Zero, 0, 0, 0, 0}; }

MaterialLaw MaterialLaw::linear(double chi) {
  if (!std::isfinite(chi) || 1.0 + chi <= 0.0) throw ConfigError(fmt::format("linear law needs 1 + chi > 0, got chi = {}", chi));
  MaterialLaw law{LawKind::Linear, chi, 0, 0, 0};
  law.gamma_ = law.lip_ = 1.0 + chi;
  return law;
}

MaterialLaw MaterialLaw::tanh(double c1, double c2) {
  if (!(c1 > 0.0) || !(c2 > 0.0)) throw ConfigError(fmt::format("tanh law needs c1, c2 > 0, got {}, {}", c1, c2));
  MaterialLaw law{LawKind::Tanh, c1, c2, 0, 0};
  law.gamma_ = 1.0;
  law.lip_ = 1.0 + c1 * c2;
  return law;
}

MaterialLaw MaterialLaw::rational(double c1, double c2, double c3, double c4) {
  MaterialLaw law{LawKind::Rational, c1, c2, c3, c4};
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  auto sample = [&](double t) {
    if (1.0 + c3 * t + c4 * t * t <= 0.0)
      throw ConfigError(fmt::format("rational law denominator vanishes at t = {:.6g}", t));
    const double gp = law.g_prime(t);
    if (!std::isfinite(gp)) throw ConfigError(fmt::format("rational law g' not finite at t = {:.6g}", t));
    lo = std::min(lo, gp);
    hi = std::max(hi, gp);
  };
  sample(0.0);
  constexpr int n = 4000;
  for (int i = 0; i <= n; ++i) sample(std::pow(10.0, -8.0 + 14.0 * i / n));
  const double margin = 0.01 * (hi - lo) + 1e-6 * std::abs(hi);
  law.gamma_ = lo - margin;
  law.lip_ = hi + margin;
  if (!(law.gamma_ > 0.0))
    throw ConfigError(fmt::format("rational law is not strongly monotone: sampled min g' = {:.6g}", lo));
  return law;
}

double MaterialLaw::chi(double t) const {
  switch (kind_) {
    case LawKind::Zero: return 0.0;
    case LawKind::Linear: return c1_;
    case LawKind::Tanh: {
      const double s = c2_ * t;
      if (s < 1e-6) return c1_ * c2_ * (1.0 - s * s / 3.0);
      return c1_ * std::tanh(s) / t;
    }
    case LawKind::Rational: return (c1_ + c2_ * t) / (1.0 + c3_ * t + c4_ * t * t);
  }
  return 0.0;
}

double MaterialLaw::g(double t) const { return t + chi(t) * t; }

double MaterialLaw::g_prime(double t) const {
  switch (kind_) {
    case LawKind::Zero: return 1.0;
    case LawKind::Linear: return 1.0 + c1_;
    case LawKind::Tanh: {
      const double c = std::cosh(c2_ * t);
      return 1.0 + c1_ * c2_ / (c * c);
    }
    case LawKind::Rational: {
      // g = t + (c1 t + c2 t^2) / q with q = 1 + c3 t + c4 t^2
      const double q = 1.0 + c3_ * t + c4_ * t * t;
      const double p = c1_ * t + c2_ * t * t;
      const double dp = c1_ + 2.0 * c2_ * t;
      const double dq = c3_ + 2.0 * c4_ * t;
      return 1.0 + (dp * q - p * dq) / (q * q);
    }
  }
  return 1.0;
}

std::string MaterialLaw::describe() const {
  switch (kind_) {
    case LawKind::Zero: return "zero";
    case LawKind::Linear: return fmt::format("linear(chi={})", c1_);
    case LawKind::Tanh: return fmt::format("tanh(c1={}, c2={})", c1_, c2_);
    case LawKind::Rational: return fmt::format("rational(c1={}, c2={}, c3={}, c4={})", c1_, c2_, c3_, c4_);
  }
  return "?";
}

double material_g(const MaterialLaw& law, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument(fmt::format("material_g: t must be non-negative, got {}", t));
  return law.g(t);
}

}  // namespace multimag
