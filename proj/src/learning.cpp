#include "cldnav/learning.hpp"

#include <cmath>

#include "cldnav/errors.hpp"

namespace cldnav {

void validate_model_spec(const ModelSpec& spec) {
  if (spec.a <= 0.0) throw ValidationError("model '" + spec.name + "': a must be positive");
  if (spec.b <= 0.0) throw ValidationError("model '" + spec.name + "': b must be positive");
  if (spec.historical_samples < 0.0) {
    throw ValidationError("model '" + spec.name + "': historical sample count must be >= 0");
  }
  if (spec.bits_per_sample <= 0.0) {
    throw ValidationError("model '" + spec.name + "': bits per sample must be positive");
  }
  if (spec.sensor_group.empty()) {
    throw ValidationError("model '" + spec.name + "': sensor group must be nonempty");
  }
}

double classification_error(const ModelSpec& spec, double new_samples) {
  if (new_samples < 0.0) throw InvalidPoint("sample count must be nonnegative");
  const double total = spec.historical_samples + new_samples;
  if (total <= 0.0) {
    throw EmptyTrainingSet("model '" + spec.name + "' has no historical or new samples");
  }
  return spec.a * std::pow(total, -spec.b);
}

double samples_from_bits(const ModelSpec& spec, const std::map<int, double>& collected) {
  double bits = 0.0;
  for (int id : spec.sensor_group) {
    auto it = collected.find(id);
    if (it == collected.end()) {
      throw UnknownSensor("model '" + spec.name + "' references sensor id " +
                          std::to_string(id) + " with no collected bits entry");
    }
    if (it->second < 0.0) throw InvalidPoint("collected bits must be nonnegative");
    bits += it->second;
  }
  return bits / spec.bits_per_sample;
}

PowerLawFit fit_error_curve(std::span<const std::pair<double, double>> points) {
  if (points.size() < 2) {
    throw DegenerateFit("need at least two (sample_count, error) points");
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& [n, err] : points) {
    if (n <= 0.0 || err <= 0.0) {
      throw InvalidPoint("sample counts and errors must be positive for a log-log fit");
    }
    const double x = std::log(n);
    const double y = std::log(err);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double m = static_cast<double>(points.size());
  const double det = m * sxx - sx * sx;
  if (std::abs(det) < 1e-12 * std::max(1.0, m * sxx)) {
    throw DegenerateFit("all sample counts are equal; slope is unidentifiable");
  }
  // log(err) = log(a) - b log(n): slope = -b, intercept = log(a).
  const double slope = (m * sxy - sx * sy) / det;
  const double intercept = (sy - slope * sx) / m;
  PowerLawFit fit;
  fit.a = std::exp(intercept);
  fit.b = -slope;
  fit.decaying = fit.b > 0.0;
  return fit;
}

}  // namespace cldnav
