#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dbe/rng.hpp"

namespace dbe {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// One weighted support point of a discrete distribution.
struct Atom {
  double value = 0.0;
  double prob = 0.0;
};

// ---------------------------------------------------------------------------
// Reward law variants. Each is a one-dimensional probability law with closed
// form CDF, tails and quantile function.
// ---------------------------------------------------------------------------

struct PointMass {
  double value = 0.0;
};

/// Finitely many atoms; values strictly increasing, probabilities sum to 1.
struct DiscreteAtoms {
  std::vector<Atom> atoms;
};

struct Uniform {
  double lo = 0.0;
  double hi = 1.0;
};

struct Normal {
  double mean = 0.0;
  double stddev = 1.0;
};

/// Exponential law on [0,inf) (sign=+1) or its mirror on (-inf,0] (sign=-1).
struct Exponential {
  double rate = 1.0;
  int sign = +1;
};

/// Two-sided Pareto: P[R>x] = q*(scale/x)^alpha and P[R<-x] = (1-q)*(scale/x)^alpha
/// for x >= scale; no mass inside (-scale, scale).
struct TwoSidedPareto {
  double alpha = 1.0;
  double scale = 1.0;
  double right_weight = 0.5;
};

struct Cauchy {
  double location = 0.0;
  double scale = 1.0;
};

/// Symmetric law with logarithmic tails: |R| = exp(1/U) with U uniform on
/// (0, 1/log(threshold)] and a fair sign, hence
///   P[|R| > x] = log(threshold)/log(x),  x >= threshold,
/// which is 1/log(x) at the canonical threshold e. E[log+|R|] is infinite,
/// so this law violates the fixed-point existence criterion on essential
/// states no matter how it is discounted.
struct SuperHeavy {
  double threshold = std::numbers::e;
};

class RewardLaw;

/// Finite convex combination of reward laws. Produced by the MDP reductions
/// (policies mix actions, rewards may depend on the successor state).
struct Mixture {
  std::vector<double> weights;
  std::vector<RewardLaw> components;
};

/// A parametric one-dimensional reward law. Immutable after construction;
/// construction validates the variant's parameter invariants.
class RewardLaw {
public:
  using Variant = std::variant<PointMass, DiscreteAtoms, Uniform, Normal,
                               Exponential, TwoSidedPareto, Cauchy, SuperHeavy,
                               Mixture>;

  RewardLaw() : v_(PointMass{0.0}) {}

  RewardLaw(PointMass x) : v_(std::move(x)) { validate(); }
  RewardLaw(DiscreteAtoms x) : v_(std::move(x)) { validate(); }
  RewardLaw(Uniform x) : v_(std::move(x)) { validate(); }
  RewardLaw(Normal x) : v_(std::move(x)) { validate(); }
  RewardLaw(Exponential x) : v_(std::move(x)) { validate(); }
  RewardLaw(TwoSidedPareto x) : v_(std::move(x)) { validate(); }
  RewardLaw(Cauchy x) : v_(std::move(x)) { validate(); }
  RewardLaw(SuperHeavy x) : v_(std::move(x)) { validate(); }
  RewardLaw(Mixture x) : v_(std::move(x)) { validate(); }

  const Variant& raw() const { return v_; }

  template <class T>
  bool is() const {
    return std::holds_alternative<T>(v_);
  }

  template <class T>
  const T& as() const {
    return std::get<T>(v_);
  }

  template <class Visitor>
  decltype(auto) visit(Visitor&& vis) const {
    return std::visit(std::forward<Visitor>(vis), v_);
  }

private:
  void validate() const;

  Variant v_;
};

inline RewardLaw point_mass(double v) { return RewardLaw(PointMass{v}); }

// ---------------------------------------------------------------------------
// Analytic metadata
// ---------------------------------------------------------------------------

/// Extended-real supremum with boundary semantics. value == kInf means the
/// property holds for every finite parameter (the flag is then meaningless
/// and kept true).
struct ExtendedSup {
  double value = 0.0;
  bool inclusive = false;

  friend bool operator==(const ExtendedSup&, const ExtendedSup&) = default;
};

inline ExtendedSup sup_min(const ExtendedSup& a, const ExtendedSup& b) {
  if (a.value < b.value) return a;
  if (b.value < a.value) return b;
  return ExtendedSup{a.value, a.inclusive && b.inclusive};
}

/// Moment metadata of a reward law:
///  - log_moment_finite: E[log+|R|] < inf (the existence criterion),
///  - p_moment_sup:      sup{p > 0 : E|R|^p < inf},
///  - exp_moment_beta_sup: sup{beta > 0 : E exp(beta|R|) < inf}.
/// Invariants: exp_moment_beta_sup > 0 implies p_moment_sup = inf, and
/// p_moment_sup > 0 implies log_moment_finite.
struct MomentProfile {
  bool log_moment_finite = true;
  ExtendedSup p_moment_sup{kInf, true};
  ExtendedSup exp_moment_beta_sup{kInf, true};
};

/// Power-law tail descriptor: P[R>x] -> q*c*x^(-alpha) and
/// P[R<-x] -> (1-q)*c*x^(-alpha) as x -> inf (constant slowly varying factor
/// absorbed into c). c == 0 encodes a tail lighter than x^(-alpha).
struct RegVarDescriptor {
  double alpha = 1.0;
  double c = 0.0;
  double q = 0.5;
};

// ---------------------------------------------------------------------------
// Implementation details
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr double kProbSumTol = 1e-12;

/// Standard normal CDF via erfc (stable in both tails).
inline double normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

inline double normal_upper(double z) {
  return 0.5 * std::erfc(z / std::numbers::sqrt2);
}

/// Standard normal quantile: Acklam's rational approximation polished with
/// one Halley step against erfc; accurate to full double precision on (0,1).
inline double normal_quantile(double u) {
  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (u < p_low) {
    const double t = std::sqrt(-2.0 * std::log(u));
    x = (((((c[0] * t + c[1]) * t + c[2]) * t + c[3]) * t + c[4]) * t + c[5]) /
        ((((d[0] * t + d[1]) * t + d[2]) * t + d[3]) * t + 1.0);
  } else if (u <= 1.0 - p_low) {
    const double t = u - 0.5;
    const double r = t * t;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * t /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double t = std::sqrt(-2.0 * std::log1p(-u));
    x = -(((((c[0] * t + c[1]) * t + c[2]) * t + c[3]) * t + c[4]) * t + c[5]) /
        ((((d[0] * t + d[1]) * t + d[2]) * t + d[3]) * t + 1.0);
  }

  const double err = normal_cdf(x) - u;
  const double pdf =
      std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  if (pdf > 0.0) {
    const double f = err / pdf;
    x -= f / (1.0 + 0.5 * x * f);  // Halley step
  }
  return x;
}

}  // namespace detail

inline void RewardLaw::validate() const {
  struct Checker {
    void operator()(const PointMass& l) const {
      if (!std::isfinite(l.value)) throw std::invalid_argument("PointMass: value must be finite");
    }
    void operator()(const DiscreteAtoms& l) const {
      if (l.atoms.empty()) throw std::invalid_argument("DiscreteAtoms: no atoms");
      double sum = 0.0;
      for (std::size_t k = 0; k < l.atoms.size(); ++k) {
        const Atom& a = l.atoms[k];
        if (!std::isfinite(a.value)) throw std::invalid_argument("DiscreteAtoms: non-finite value");
        if (a.prob < 0.0 || a.prob > 1.0) throw std::invalid_argument("DiscreteAtoms: prob outside [0,1]");
        if (k > 0 && !(l.atoms[k - 1].value < a.value))
          throw std::invalid_argument("DiscreteAtoms: values must be strictly increasing");
        sum += a.prob;
      }
      if (std::abs(sum - 1.0) > detail::kProbSumTol)
        throw std::invalid_argument("DiscreteAtoms: probabilities must sum to 1");
    }
    void operator()(const Uniform& l) const {
      if (!(l.lo < l.hi)) throw std::invalid_argument("Uniform: requires lo < hi");
      if (!std::isfinite(l.lo) || !std::isfinite(l.hi))
        throw std::invalid_argument("Uniform: bounds must be finite");
    }
    void operator()(const Normal& l) const {
      if (!(l.stddev > 0.0)) throw std::invalid_argument("Normal: stddev must be > 0");
      if (!std::isfinite(l.mean) || !std::isfinite(l.stddev))
        throw std::invalid_argument("Normal: parameters must be finite");
    }
    void operator()(const Exponential& l) const {
      if (!(l.rate > 0.0) || !std::isfinite(l.rate))
        throw std::invalid_argument("Exponential: rate must be > 0");
      if (l.sign != 1 && l.sign != -1) throw std::invalid_argument("Exponential: sign must be +1 or -1");
    }
    void operator()(const TwoSidedPareto& l) const {
      if (!(l.alpha > 0.0)) throw std::invalid_argument("TwoSidedPareto: alpha must be > 0");
      if (!(l.scale > 0.0)) throw std::invalid_argument("TwoSidedPareto: scale must be > 0");
      if (l.right_weight < 0.0 || l.right_weight > 1.0)
        throw std::invalid_argument("TwoSidedPareto: right_weight outside [0,1]");
    }
    void operator()(const Cauchy& l) const {
      if (!(l.scale > 0.0)) throw std::invalid_argument("Cauchy: scale must be > 0");
      if (!std::isfinite(l.location)) throw std::invalid_argument("Cauchy: location must be finite");
    }
    void operator()(const SuperHeavy& l) const {
      if (!(l.threshold >= std::numbers::e))
        throw std::invalid_argument("SuperHeavy: threshold must be >= e");
    }
    void operator()(const Mixture& l) const {
      if (l.components.empty() || l.weights.size() != l.components.size())
        throw std::invalid_argument("Mixture: weights/components mismatch or empty");
      double sum = 0.0;
      for (double w : l.weights) {
        if (w < 0.0) throw std::invalid_argument("Mixture: negative weight");
        sum += w;
      }
      if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("Mixture: weights must sum to 1");
    }
  };
  std::visit(Checker{}, v_);
}

// ---------------------------------------------------------------------------
// CDF / tails / quantile
// ---------------------------------------------------------------------------

/// P[R <= x].
inline double cdf(const RewardLaw& law, double x);
/// P[R > x]. Computed with tail-stable formulas per variant.
inline double upper_tail(const RewardLaw& law, double x);
/// P[R < -x].
inline double lower_tail(const RewardLaw& law, double x);
/// Generalized inverse CDF (left-continuous), u in (0,1).
inline double quantile(const RewardLaw& law, double u);

inline double cdf(const RewardLaw& law, double x) {
  struct V {
    double x;
    double operator()(const PointMass& l) const { return x >= l.value ? 1.0 : 0.0; }
    double operator()(const DiscreteAtoms& l) const {
      double s = 0.0;
      for (const Atom& a : l.atoms) {
        if (a.value > x) break;
        s += a.prob;
      }
      return s;
    }
    double operator()(const Uniform& l) const {
      if (x <= l.lo) return 0.0;
      if (x >= l.hi) return 1.0;
      return (x - l.lo) / (l.hi - l.lo);
    }
    double operator()(const Normal& l) const {
      return detail::normal_cdf((x - l.mean) / l.stddev);
    }
    double operator()(const Exponential& l) const {
      if (l.sign > 0) return x < 0.0 ? 0.0 : -std::expm1(-l.rate * x);
      return x >= 0.0 ? 1.0 : std::exp(l.rate * x);
    }
    double operator()(const TwoSidedPareto& l) const {
      if (x >= l.scale) return 1.0 - l.right_weight * std::pow(l.scale / x, l.alpha);
      if (x > -l.scale) return 1.0 - l.right_weight;
      return (1.0 - l.right_weight) * std::pow(l.scale / -x, l.alpha);
    }
    double operator()(const Cauchy& l) const {
      const double z = (x - l.location) / l.scale;
      if (z < 0.0) return std::atan(-1.0 / z) / std::numbers::pi;
      return 0.5 + std::atan(z) / std::numbers::pi;
    }
    double operator()(const SuperHeavy& l) const {
      const double lt = std::log(l.threshold);
      if (x >= l.threshold) return 1.0 - 0.5 * lt / std::log(x);
      if (x > -l.threshold) return 0.5;
      return 0.5 * lt / std::log(-x);
    }
    double operator()(const Mixture& l) const {
      double s = 0.0;
      for (std::size_t k = 0; k < l.components.size(); ++k)
        s += l.weights[k] * cdf(l.components[k], x);
      return s;
    }
  };
  return law.visit(V{x});
}

inline double upper_tail(const RewardLaw& law, double x) {
  struct V {
    double x;
    double operator()(const PointMass& l) const { return x < l.value ? 1.0 : 0.0; }
    double operator()(const DiscreteAtoms& l) const {
      double s = 0.0;
      for (auto it = l.atoms.rbegin(); it != l.atoms.rend(); ++it) {
        if (it->value <= x) break;
        s += it->prob;
      }
      return s;
    }
    double operator()(const Uniform& l) const {
      if (x <= l.lo) return 1.0;
      if (x >= l.hi) return 0.0;
      return (l.hi - x) / (l.hi - l.lo);
    }
    double operator()(const Normal& l) const {
      return detail::normal_upper((x - l.mean) / l.stddev);
    }
    double operator()(const Exponential& l) const {
      if (l.sign > 0) return x < 0.0 ? 1.0 : std::exp(-l.rate * x);
      return x >= 0.0 ? 0.0 : -std::expm1(l.rate * x);
    }
    double operator()(const TwoSidedPareto& l) const {
      if (x >= l.scale) return l.right_weight * std::pow(l.scale / x, l.alpha);
      if (x > -l.scale) return l.right_weight;
      return 1.0 - (1.0 - l.right_weight) * std::pow(l.scale / -x, l.alpha);
    }
    double operator()(const Cauchy& l) const {
      const double z = (x - l.location) / l.scale;
      if (z > 0.0) return std::atan(1.0 / z) / std::numbers::pi;
      return 0.5 + std::atan(-z) / std::numbers::pi;
    }
    double operator()(const SuperHeavy& l) const {
      const double lt = std::log(l.threshold);
      if (x >= l.threshold) return 0.5 * lt / std::log(x);
      if (x > -l.threshold) return 0.5;
      return 1.0 - 0.5 * lt / std::log(-x);
    }
    double operator()(const Mixture& l) const {
      double s = 0.0;
      for (std::size_t k = 0; k < l.components.size(); ++k)
        s += l.weights[k] * upper_tail(l.components[k], x);
      return s;
    }
  };
  return law.visit(V{x});
}

inline double lower_tail(const RewardLaw& law, double x) {
  struct V {
    double x;
    double operator()(const PointMass& l) const { return l.value < -x ? 1.0 : 0.0; }
    double operator()(const DiscreteAtoms& l) const {
      double s = 0.0;
      for (const Atom& a : l.atoms) {
        if (a.value >= -x) break;
        s += a.prob;
      }
      return s;
    }
    double operator()(const Uniform& l) const {
      if (-x <= l.lo) return 0.0;
      if (-x >= l.hi) return 1.0;
      return (-x - l.lo) / (l.hi - l.lo);
    }
    double operator()(const Normal& l) const {
      return detail::normal_upper((x + l.mean) / l.stddev);
    }
    double operator()(const Exponential& l) const {
      if (l.sign > 0) return x >= 0.0 ? 0.0 : -std::expm1(l.rate * x);
      return x < 0.0 ? 1.0 : std::exp(-l.rate * x);
    }
    double operator()(const TwoSidedPareto& l) const {
      if (x >= l.scale) return (1.0 - l.right_weight) * std::pow(l.scale / x, l.alpha);
      if (x > -l.scale) return 1.0 - l.right_weight;
      return 1.0 - l.right_weight * std::pow(l.scale / -x, l.alpha);
    }
    double operator()(const Cauchy& l) const {
      const double z = (x + l.location) / l.scale;
      if (z > 0.0) return std::atan(1.0 / z) / std::numbers::pi;
      return 0.5 + std::atan(-z) / std::numbers::pi;
    }
    double operator()(const SuperHeavy& l) const {
      const double lt = std::log(l.threshold);
      if (x >= l.threshold) return 0.5 * lt / std::log(x);
      if (x > -l.threshold) return 0.5;
      return 1.0 - 0.5 * lt / std::log(-x);
    }
    double operator()(const Mixture& l) const {
      double s = 0.0;
      for (std::size_t k = 0; k < l.components.size(); ++k)
        s += l.weights[k] * lower_tail(l.components[k], x);
      return s;
    }
  };
  return law.visit(V{x});
}

inline double quantile(const RewardLaw& law, double u) {
  if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("quantile: u must be in (0,1)");
  struct V {
    double u;
    const RewardLaw& self;
    double operator()(const PointMass& l) const { return l.value; }
    double operator()(const DiscreteAtoms& l) const {
      double c = 0.0;
      for (const Atom& a : l.atoms) {
        c += a.prob;
        if (c >= u) return a.value;
      }
      return l.atoms.back().value;
    }
    double operator()(const Uniform& l) const { return l.lo + u * (l.hi - l.lo); }
    double operator()(const Normal& l) const {
      return l.mean + l.stddev * detail::normal_quantile(u);
    }
    double operator()(const Exponential& l) const {
      if (l.sign > 0) return -std::log1p(-u) / l.rate;
      return std::log(u) / l.rate;
    }
    double operator()(const TwoSidedPareto& l) const {
      const double left = 1.0 - l.right_weight;
      if (u < left) return -l.scale * std::pow(left / u, 1.0 / l.alpha);
      return l.scale * std::pow(l.right_weight / (1.0 - u), 1.0 / l.alpha);
    }
    double operator()(const Cauchy& l) const {
      return l.location + l.scale * std::tan(std::numbers::pi * (u - 0.5));
    }
    double operator()(const SuperHeavy& l) const {
      const double lt = std::log(l.threshold);
      if (u < 0.5) return -std::exp(0.5 * lt / u);
      return std::exp(0.5 * lt / (1.0 - u));
    }
    double operator()(const Mixture& l) const {
      // Bisection on the monotone mixture CDF; bracket from component quantiles.
      double lo = kInf, hi = -kInf;
      for (const RewardLaw& c : l.components) {
        lo = std::min(lo, quantile(c, u));
        hi = std::max(hi, quantile(c, u));
      }
      if (lo >= hi) return lo;
      for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(lo) + std::abs(hi));
           ++it) {
        const double mid = 0.5 * (lo + hi);
        if (cdf(self, mid) >= u)
          hi = mid;
        else
          lo = mid;
      }
      return hi;
    }
  };
  return law.visit(V{u, law});
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// One draw. All non-composite variants consume exactly one uniform (inverse
/// CDF); a Mixture consumes one uniform to pick the component, then recurses.
/// Identical stream state gives identical draws.
inline double sample(const RewardLaw& law, RngStream& rng) {
  if (law.is<Mixture>()) {
    const Mixture& m = law.as<Mixture>();
    const double u = rng.uniform01();
    double c = 0.0;
    std::size_t pick = m.components.size() - 1;
    for (std::size_t k = 0; k < m.components.size(); ++k) {
      c += m.weights[k];
      if (u <= c) {
        pick = k;
        break;
      }
    }
    return sample(m.components[pick], rng);
  }
  return quantile(law, rng.uniform01());
}

// ---------------------------------------------------------------------------
// Moment / tail metadata
// ---------------------------------------------------------------------------

inline MomentProfile moment_profile(const RewardLaw& law) {
  struct V {
    MomentProfile operator()(const PointMass&) const { return {}; }
    MomentProfile operator()(const DiscreteAtoms&) const { return {}; }
    MomentProfile operator()(const Uniform&) const { return {}; }
    MomentProfile operator()(const Normal&) const { return {}; }
    MomentProfile operator()(const Exponential& l) const {
      return {true, {kInf, true}, {l.rate, false}};
    }
    MomentProfile operator()(const TwoSidedPareto& l) const {
      return {true, {l.alpha, false}, {0.0, false}};
    }
    MomentProfile operator()(const Cauchy&) const {
      return {true, {1.0, false}, {0.0, false}};
    }
    MomentProfile operator()(const SuperHeavy&) const {
      return {false, {0.0, false}, {0.0, false}};
    }
    MomentProfile operator()(const Mixture& m) const {
      MomentProfile out{true, {kInf, true}, {kInf, true}};
      for (const RewardLaw& c : m.components) {
        const MomentProfile p = moment_profile(c);
        out.log_moment_finite = out.log_moment_finite && p.log_moment_finite;
        out.p_moment_sup = sup_min(out.p_moment_sup, p.p_moment_sup);
        out.exp_moment_beta_sup = sup_min(out.exp_moment_beta_sup, p.exp_moment_beta_sup);
      }
      return out;
    }
  };
  return law.visit(V{});
}

inline bool log_moment_finite(const RewardLaw& law) {
  return moment_profile(law).log_moment_finite;
}

/// Tail descriptor at the requested index alpha, or nullopt when the law's
/// tail is strictly heavier than x^(-alpha) (then the power-law asymptotics
/// at alpha do not exist). Laws lighter than x^(-alpha) report c = 0.
inline std::optional<RegVarDescriptor> reg_var(const RewardLaw& law, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("reg_var: alpha must be > 0");
  struct V {
    double alpha;
    std::optional<RegVarDescriptor> light() const {
      return RegVarDescriptor{alpha, 0.0, 0.5};
    }
    std::optional<RegVarDescriptor> at_index(double law_alpha, double c, double q) const {
      constexpr double tol = 1e-12;
      if (law_alpha < alpha * (1.0 - tol) - tol) return std::nullopt;  // heavier
      if (law_alpha > alpha * (1.0 + tol) + tol) return light();       // lighter
      return RegVarDescriptor{alpha, c, q};
    }
    std::optional<RegVarDescriptor> operator()(const PointMass&) const { return light(); }
    std::optional<RegVarDescriptor> operator()(const DiscreteAtoms&) const { return light(); }
    std::optional<RegVarDescriptor> operator()(const Uniform&) const { return light(); }
    std::optional<RegVarDescriptor> operator()(const Normal&) const { return light(); }
    std::optional<RegVarDescriptor> operator()(const Exponential&) const { return light(); }
    std::optional<RegVarDescriptor> operator()(const TwoSidedPareto& l) const {
      return at_index(l.alpha, std::pow(l.scale, l.alpha), l.right_weight);
    }
    std::optional<RegVarDescriptor> operator()(const Cauchy& l) const {
      return at_index(1.0, 2.0 * l.scale / std::numbers::pi, 0.5);
    }
    std::optional<RegVarDescriptor> operator()(const SuperHeavy&) const {
      return std::nullopt;  // heavier than every power law
    }
    std::optional<RegVarDescriptor> operator()(const Mixture& m) const {
      // Finite mixture tails add: c = sum of weighted component constants.
      double c = 0.0, qc = 0.0;
      for (std::size_t k = 0; k < m.components.size(); ++k) {
        const auto d = reg_var(m.components[k], alpha);
        if (!d) return std::nullopt;
        c += m.weights[k] * d->c;
        qc += m.weights[k] * d->c * d->q;
      }
      return RegVarDescriptor{alpha, c, c > 0.0 ? qc / c : 0.5};
    }
  };
  return law.visit(V{alpha});
}

/// Exact mean when E|R|^p < inf for some p > 1; absent otherwise.
inline std::optional<double> mean(const RewardLaw& law) {
  struct V {
    std::optional<double> operator()(const PointMass& l) const { return l.value; }
    std::optional<double> operator()(const DiscreteAtoms& l) const {
      double s = 0.0;
      for (const Atom& a : l.atoms) s += a.prob * a.value;
      return s;
    }
    std::optional<double> operator()(const Uniform& l) const { return 0.5 * (l.lo + l.hi); }
    std::optional<double> operator()(const Normal& l) const { return l.mean; }
    std::optional<double> operator()(const Exponential& l) const { return l.sign / l.rate; }
    std::optional<double> operator()(const TwoSidedPareto& l) const {
      if (l.alpha <= 1.0) return std::nullopt;
      return (2.0 * l.right_weight - 1.0) * l.alpha * l.scale / (l.alpha - 1.0);
    }
    std::optional<double> operator()(const Cauchy&) const { return std::nullopt; }
    std::optional<double> operator()(const SuperHeavy&) const { return std::nullopt; }
    std::optional<double> operator()(const Mixture& m) const {
      double s = 0.0;
      for (std::size_t k = 0; k < m.components.size(); ++k) {
        const auto mu = mean(m.components[k]);
        if (!mu) return std::nullopt;
        s += m.weights[k] * *mu;
      }
      return s;
    }
  };
  return law.visit(V{});
}

/// [min, max] of the support for bounded laws, absent otherwise.
inline std::optional<std::pair<double, double>> support_bounds(const RewardLaw& law) {
  using Bounds = std::optional<std::pair<double, double>>;
  return law.visit([](const auto& l) -> Bounds {
    using T = std::decay_t<decltype(l)>;
    if constexpr (std::is_same_v<T, PointMass>) {
      return std::pair{l.value, l.value};
    } else if constexpr (std::is_same_v<T, DiscreteAtoms>) {
      return std::pair{l.atoms.front().value, l.atoms.back().value};
    } else if constexpr (std::is_same_v<T, Uniform>) {
      return std::pair{l.lo, l.hi};
    } else if constexpr (std::is_same_v<T, Mixture>) {
      double lo = kInf, hi = -kInf;
      for (const RewardLaw& c : l.components) {
        const Bounds b = support_bounds(c);
        if (!b) return std::nullopt;
        lo = std::min(lo, b->first);
        hi = std::max(hi, b->second);
      }
      return std::pair{lo, hi};
    } else {
      return std::nullopt;
    }
  });
}

/// sup|R| when the law is bounded, absent otherwise.
inline std::optional<double> abs_bound(const RewardLaw& law) {
  const auto b = support_bounds(law);
  if (!b) return std::nullopt;
  return std::max(std::abs(b->first), std::abs(b->second));
}

// ---------------------------------------------------------------------------
// Discretization (quadrature of the reward integral)
// ---------------------------------------------------------------------------

/// Finite atom approximation used by the Bellman operator: exact atoms for
/// discrete laws, m quantile midpoints u = (k-0.5)/m for continuous ones.
/// The rule is mass-preserving and distribution-free.
inline std::vector<Atom> reward_atoms(const RewardLaw& law, int m) {
  if (m < 1) throw std::invalid_argument("reward_atoms: m must be >= 1");
  return law.visit([&](const auto& l) -> std::vector<Atom> {
    using T = std::decay_t<decltype(l)>;
    if constexpr (std::is_same_v<T, PointMass>) {
      return {{l.value, 1.0}};
    } else if constexpr (std::is_same_v<T, DiscreteAtoms>) {
      return l.atoms;
    } else if constexpr (std::is_same_v<T, Mixture>) {
      std::vector<Atom> out;
      for (std::size_t k = 0; k < l.components.size(); ++k) {
        if (l.weights[k] == 0.0) continue;
        for (Atom a : reward_atoms(l.components[k], m)) {
          a.prob *= l.weights[k];
          out.push_back(a);
        }
      }
      return out;
    } else {
      std::vector<Atom> out;
      out.reserve(static_cast<std::size_t>(m));
      const double w = 1.0 / m;
      for (int k = 1; k <= m; ++k) out.push_back({quantile(law, (k - 0.5) * w), w});
      return out;
    }
  });
}

// ---------------------------------------------------------------------------
// Mixture construction with normalization
// ---------------------------------------------------------------------------

/// Convex combination of laws, simplified: nested mixtures are flattened,
/// purely discrete combinations collapse into DiscreteAtoms (merging equal
/// values), and single-component results unwrap.
inline RewardLaw make_mixture(std::vector<double> weights, std::vector<RewardLaw> laws) {
  if (laws.empty() || weights.size() != laws.size())
    throw std::invalid_argument("make_mixture: weights/laws mismatch or empty");
  double sum = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw std::invalid_argument("make_mixture: negative weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("make_mixture: weights must sum to 1");

  // Flatten nested mixtures and drop zero-weight parts.
  std::vector<double> ws;
  std::vector<RewardLaw> ls;
  for (std::size_t k = 0; k < laws.size(); ++k) {
    if (weights[k] == 0.0) continue;
    if (laws[k].is<Mixture>()) {
      const Mixture& m = laws[k].as<Mixture>();
      for (std::size_t j = 0; j < m.components.size(); ++j) {
        if (m.weights[j] == 0.0) continue;
        ws.push_back(weights[k] * m.weights[j]);
        ls.push_back(m.components[j]);
      }
    } else {
      ws.push_back(weights[k]);
      ls.push_back(std::move(laws[k]));
    }
  }
  if (ls.empty()) throw std::invalid_argument("make_mixture: all weights zero");
  const double total = [&] {
    double t = 0.0;
    for (double w : ws) t += w;
    return t;
  }();
  for (double& w : ws) w /= total;

  if (ls.size() == 1) return ls.front();

  const bool all_discrete = std::all_of(ls.begin(), ls.end(), [](const RewardLaw& l) {
    return l.is<PointMass>() || l.is<DiscreteAtoms>();
  });
  if (all_discrete) {
    std::vector<Atom> atoms;
    for (std::size_t k = 0; k < ls.size(); ++k) {
      if (ls[k].is<PointMass>()) {
        atoms.push_back({ls[k].as<PointMass>().value, ws[k]});
      } else {
        for (const Atom& a : ls[k].as<DiscreteAtoms>().atoms)
          atoms.push_back({a.value, ws[k] * a.prob});
      }
    }
    std::sort(atoms.begin(), atoms.end(),
              [](const Atom& a, const Atom& b) { return a.value < b.value; });
    std::vector<Atom> merged;
    for (const Atom& a : atoms) {
      if (!merged.empty() && merged.back().value == a.value)
        merged.back().prob += a.prob;
      else
        merged.push_back(a);
    }
    if (merged.size() == 1) return RewardLaw(PointMass{merged.front().value});
    return RewardLaw(DiscreteAtoms{std::move(merged)});
  }
  return RewardLaw(Mixture{std::move(ws), std::move(ls)});
}

}  // namespace dbe
