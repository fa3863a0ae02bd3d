#pragma once

#include <string>

namespace multimag {

enum class LawKind { Zero, Linear, Tanh, Rational };

/// Scalar susceptibility law chi~ with g(t) = t + chi~(t) t and g'(t) in [gamma, lip].
class MaterialLaw {
 public:
  static MaterialLaw zero();
  static MaterialLaw linear(double chi);
  static MaterialLaw tanh(double c1, double c2);
  /// chi~(t) = (c1 + c2 t) / (1 + c3 t + c4 t^2); bounds estimated by sampling.
  static MaterialLaw rational(double c1, double c2, double c3, double c4);

  [[nodiscard]] LawKind kind() const { return kind_; }
  [[nodiscard]] bool is_linear() const { return kind_ == LawKind::Zero || kind_ == LawKind::Linear; }
  [[nodiscard]] double chi(double t) const;
  [[nodiscard]] double g(double t) const;
  [[nodiscard]] double g_prime(double t) const;
  [[nodiscard]] double gamma() const { return gamma_; }
  [[nodiscard]] double lip() const { return lip_; }
  [[nodiscard]] std::string describe() const;

 private:
  MaterialLaw(LawKind kind, double c1, double c2, double c3, double c4);
  LawKind kind_;
  double c1_, c2_, c3_, c4_;
  double gamma_ = 1.0;
  double lip_ = 1.0;
};

/// g(t) = t + chi~(t) t; throws std::invalid_argument for t < 0.
double material_g(const MaterialLaw& law, double t);

}  // namespace multimag
