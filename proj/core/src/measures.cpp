#include "demecoal/measures.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace demecoal {

namespace {

double power(double base, int exponent) {
  // 0^0 = 1, as the moment integrands require.
  double r = 1.0;
  for (int i = 0; i < exponent; ++i) r *= base;
  return r;
}

// B(a + j, b + l) / B(a, b) as a finite product of rising factorials.
double beta_ratio(double a, double b, int j, int l) {
  double num = 1.0;
  double den = 1.0;
  for (int i = 0; i < j; ++i) num *= a + i;
  for (int i = 0; i < l; ++i) num *= b + i;
  for (int i = 0; i < j + l; ++i) den *= a + b + i;
  return num / den;
}

double sample_beta(double a, double b, Rng& rng) {
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  const double x = ga(rng.engine());
  const double y = gb(rng.engine());
  return x / (x + y);
}

}  // namespace

UnitIntervalMeasure UnitIntervalMeasure::dirac(double x, double weight) {
  return UnitIntervalMeasure{{PointMass{x, weight}}, {}};
}

UnitIntervalMeasure UnitIntervalMeasure::beta(double alpha, double beta, double weight) {
  return UnitIntervalMeasure{{}, {BetaComponent{alpha, beta, weight}}};
}

double UnitIntervalMeasure::total_mass() const {
  double total = 0.0;
  for (const auto& a : atoms) total += a.weight;
  for (const auto& b : betas) total += b.weight;
  return total;
}

double moment(const UnitIntervalMeasure& m, int j, int l) {
  if (j < 0 || l < 0) throw std::invalid_argument("moment orders must be nonnegative");
  if (j + l > kMaxMomentOrder) throw std::invalid_argument("moment order above 64");
  double total = 0.0;
  for (const auto& a : m.atoms) total += a.weight * power(a.location, j) * power(1.0 - a.location, l);
  for (const auto& b : m.betas) total += b.weight * beta_ratio(b.alpha, b.beta, j, l);
  return total;
}

double sample(const UnitIntervalMeasure& m, Rng& rng) {
  const double mass = m.total_mass();
  if (std::abs(mass - 1.0) > 1e-9) {
    throw std::invalid_argument("cannot sample from a measure of total mass " +
                                std::to_string(mass));
  }
  double u = rng.uniform() * mass;
  for (const auto& a : m.atoms) {
    if (u < a.weight) return a.location;
    u -= a.weight;
  }
  for (const auto& b : m.betas) {
    if (u < b.weight) return sample_beta(b.alpha, b.beta, rng);
    u -= b.weight;
  }
  // Rounding at the far end of the cumulative sum.
  if (!m.betas.empty()) {
    const auto& b = m.betas.back();
    return sample_beta(b.alpha, b.beta, rng);
  }
  return m.atoms.back().location;
}

MeasureDiagnostics validate(const UnitIntervalMeasure& m, MeasureRole role) {
  MeasureDiagnostics d;
  d.total_mass = m.total_mass();
  for (const auto& a : m.atoms) {
    if (!(a.weight > 0.0) || !std::isfinite(a.weight)) d.bad_weight = true;
    if (!(a.location >= 0.0 && a.location <= 1.0)) d.location_out_of_range = true;
    if (a.location == 0.0 && a.weight > 0.0) d.atom_at_zero = true;
  }
  for (const auto& b : m.betas) {
    if (!(b.weight > 0.0) || !std::isfinite(b.weight)) d.bad_weight = true;
    if (!(b.alpha > 0.0) || !(b.beta > 0.0)) d.bad_shape = true;
  }
  if (m.atoms.empty() && m.betas.empty()) d.messages.push_back("measure has no components");
  if (d.bad_weight) d.messages.push_back("component weights must be positive and finite");
  if (d.bad_shape) d.messages.push_back("Beta shapes must be positive");
  if (d.location_out_of_range) d.messages.push_back("atom location outside [0,1]");
  if (role == MeasureRole::kModelProbability) {
    if (std::abs(d.total_mass - 1.0) > 1e-9) {
      d.not_normalized = true;
      d.messages.push_back("total mass " + std::to_string(d.total_mass) + " is not 1");
    }
    if (d.atom_at_zero) d.messages.push_back("atom at 0 is not allowed in the model measures");
  }
  return d;
}

XiMeasure XiMeasure::kingman(double a) { return XiMeasure{a, {}}; }

XiMeasure normalized(XiMeasure xi) {
  if (!(xi.kingman_mass >= 0.0)) throw std::invalid_argument("Kingman mass must be >= 0");
  for (auto& atom : xi.atoms) {
    if (!(atom.weight > 0.0)) throw std::invalid_argument("Xi atom weights must be positive");
    double sum = 0.0;
    for (double c : atom.coordinates) {
      if (!(c >= 0.0)) throw std::invalid_argument("Xi atom coordinates must be >= 0");
      sum += c;
    }
    if (sum > 1.0 + 1e-12) throw std::invalid_argument("Xi atom coordinates sum above 1");
    std::erase(atom.coordinates, 0.0);
    std::sort(atom.coordinates.begin(), atom.coordinates.end(), std::greater<>());
    if (atom.coordinates.empty()) {
      throw std::invalid_argument("Xi0 atom at zero; use the Kingman mass instead");
    }
  }
  return xi;
}

UnitIntervalMeasure measure_from_json(const nlohmann::json& j) {
  UnitIntervalMeasure m;
  if (j.contains("atoms")) {
    for (const auto& a : j.at("atoms")) {
      m.atoms.push_back({a.at(0).get<double>(), a.at(1).get<double>()});
    }
  }
  if (j.contains("beta")) {
    for (const auto& b : j.at("beta")) {
      m.betas.push_back({b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>()});
    }
  }
  return m;
}

nlohmann::json to_json(const UnitIntervalMeasure& m) {
  nlohmann::json atoms = nlohmann::json::array();
  for (const auto& a : m.atoms) atoms.push_back({a.location, a.weight});
  nlohmann::json betas = nlohmann::json::array();
  for (const auto& b : m.betas) betas.push_back({b.alpha, b.beta, b.weight});
  return {{"atoms", atoms}, {"beta", betas}};
}

XiMeasure xi_from_json(const nlohmann::json& j) {
  XiMeasure xi;
  xi.kingman_mass = j.value("kingman", 0.0);
  if (j.contains("atoms")) {
    for (const auto& a : j.at("atoms")) {
      xi.atoms.push_back({a.at(0).get<std::vector<double>>(), a.at(1).get<double>()});
    }
  }
  return normalized(std::move(xi));
}

nlohmann::json to_json(const XiMeasure& xi) {
  nlohmann::json atoms = nlohmann::json::array();
  for (const auto& a : xi.atoms) atoms.push_back({a.coordinates, a.weight});
  return {{"kingman", xi.kingman_mass}, {"atoms", atoms}};
}

}  // namespace demecoal
