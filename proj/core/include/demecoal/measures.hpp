#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "demecoal/rng.hpp"

namespace demecoal {

struct PointMass {
  double location = 0.0;
  double weight = 0.0;
};

struct BetaComponent {
  double alpha = 1.0;
  double beta = 1.0;
  double weight = 0.0;
};

/// Finite measure on [0,1]: a mixture of point masses and Beta densities.
///
/// Used both as a probability measure (the within-deme and extinction-size
/// laws of the metapopulation model) and as the unnormalized measure of a
/// plain Lambda-coalescent.
struct UnitIntervalMeasure {
  std::vector<PointMass> atoms;
  std::vector<BetaComponent> betas;

  static UnitIntervalMeasure dirac(double x, double weight = 1.0);
  static UnitIntervalMeasure beta(double alpha, double beta, double weight = 1.0);
  static UnitIntervalMeasure uniform() { return beta(1.0, 1.0); }

  double total_mass() const;
};

inline constexpr int kMaxMomentOrder = 64;

/// Integral of x^j (1-x)^l against the measure, in closed form.
double moment(const UnitIntervalMeasure& m, int j, int l);

/// Draws from the normalized measure. Throws if the measure is not a
/// probability measure (total mass off 1 by more than 1e-9).
double sample(const UnitIntervalMeasure& m, Rng& rng);

enum class MeasureRole {
  /// Arbitrary finite measure (Lambda of a Lambda-coalescent).
  kFinite,
  /// Probability measure with no atom at zero (within-deme or extinction law).
  kModelProbability,
};

struct MeasureDiagnostics {
  double total_mass = 0.0;
  bool atom_at_zero = false;
  bool location_out_of_range = false;
  bool bad_weight = false;
  bool bad_shape = false;
  bool not_normalized = false;
  std::vector<std::string> messages;

  bool ok() const { return messages.empty(); }
};

MeasureDiagnostics validate(const UnitIntervalMeasure& m, MeasureRole role);

/// Finite measure on the ordered simplex, Xi = Xi0 + a * delta_0, with Xi0 a
/// finite sum of weighted atoms. Each atom keeps only its nonzero coordinates.
struct XiMeasure {
  struct Atom {
    std::vector<double> coordinates;
    double weight = 0.0;
  };

  double kingman_mass = 0.0;
  std::vector<Atom> atoms;

  static XiMeasure kingman(double a = 1.0);
};

/// Sorts coordinates descending, drops zeros and checks the simplex
/// constraints. Throws std::invalid_argument on a violation.
XiMeasure normalized(XiMeasure xi);

// JSON schema: {"atoms": [[x, w], ...], "beta": [[alpha, beta, w], ...]}
UnitIntervalMeasure measure_from_json(const nlohmann::json& j);
nlohmann::json to_json(const UnitIntervalMeasure& m);
// JSON schema: {"kingman": a, "atoms": [[[x1, x2, ...], w], ...]}
XiMeasure xi_from_json(const nlohmann::json& j);
nlohmann::json to_json(const XiMeasure& xi);

}  // namespace demecoal
