#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cldnav {

/// Edge-model description: error curve hyperparameters (a, b), historical
/// sample count, bits per training sample, and the sensor group feeding it.
struct ModelSpec {
  std::string name;
  double a = 1.0;                   // scale, > 0
  double b = 0.5;                   // decay, > 0
  double historical_samples = 0.0;  // >= 0
  double bits_per_sample = 1.0;     // > 0
  std::vector<int> sensor_group;    // nonempty
};

void validate_model_spec(const ModelSpec& spec);

/// Predicted classification error a * (A + n)^{-b}; strictly decreasing in n.
/// Throws EmptyTrainingSet when A + n == 0.
double classification_error(const ModelSpec& spec, double new_samples);

/// Fractional sample count: total group bits divided by bits_per_sample.
/// Throws UnknownSensor when a group id has no entry in `collected`.
double samples_from_bits(const ModelSpec& spec, const std::map<int, double>& collected);

struct PowerLawFit {
  double a = 0.0;
  double b = 0.0;
  bool decaying = true;  // false flags a fitted b <= 0 (validity warning)
};

/// Least-squares fit of log(err) = log(a) - b log(n). Requires at least two
/// points with distinct positive sample counts and positive errors.
PowerLawFit fit_error_curve(std::span<const std::pair<double, double>> points);

}  // namespace cldnav
