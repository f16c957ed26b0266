#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "wban/rng.hpp"
#include "wban/time.hpp"

namespace wban {

/// Single-hidden-layer tanh network with a linear output, trained online.
///
/// Flat parameter order (used by parameters(), set_parameters() and
/// loss_gradient()): weights_in row-major (hidden x inputs), bias_hidden,
/// weights_out, bias_out.
struct PredictorModel {
  std::size_t n_inputs = 1;
  std::size_t n_hidden = 4;
  std::vector<double> weights_in;
  std::vector<double> bias_hidden;
  std::vector<double> weights_out;
  double bias_out = 0.0;
  double learning_rate = 0.01;

  static PredictorModel zeros(std::size_t n_inputs, std::size_t n_hidden = 4,
                              double learning_rate = 0.01);
  /// Weights uniform in [-scale, scale]; biases zero.
  static PredictorModel random(std::size_t n_inputs, std::size_t n_hidden,
                               Rng& rng, double scale = 0.5,
                               double learning_rate = 0.01);

  std::size_t parameter_count() const;
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> flat);

  /// Throws std::invalid_argument on bad shapes or non-finite weights.
  void validate() const;

  bool operator==(const PredictorModel&) const = default;
};

/// bias_out + weights_out . tanh(weights_in * x + bias_hidden).
/// Throws std::invalid_argument on a length mismatch and std::domain_error on
/// non-finite input.
double predict(const PredictorModel& model, std::span<const double> inputs);

/// d/dtheta of (predict(x) - target)^2, in flat parameter order.
std::vector<double> loss_gradient(const PredictorModel& model,
                                  std::span<const double> inputs, double target);

struct TrainResult {
  PredictorModel model;
  double loss = 0.0;  // squared error before the update
};

TrainResult train_step(PredictorModel model, std::span<const double> inputs,
                       double target);

/// |reading - prediction| / (hi - lo).
double error_rate(double reading, double prediction, double lo, double hi);

enum class Verdict { kValid, kConflict, kFaulty };

std::string_view to_string(Verdict v);

/// Countdown armed on the first conflicting reading. Idle when no deadline.
struct FaultTimer {
  Duration duration{5000};
  std::optional<VirtualTime> deadline;

  bool counting() const { return deadline.has_value(); }
  bool operator==(const FaultTimer&) const = default;
};

struct SensorHealth {
  double lo = 0.0;
  double hi = 1.0;
  double eps_max = 0.1;
  FaultTimer timer;
  bool faulty = false;
  Verdict last_verdict = Verdict::kValid;

  void validate() const;
  /// Operator reset: clears the latch and the timer.
  void reset();

  bool operator==(const SensorHealth&) const = default;
};

struct CheckResult {
  Verdict verdict = Verdict::kValid;
  SensorHealth health;
  bool train = false;
};

/// Range check, then prediction agreement, then the confirmation timer.
/// Faulty is latched until SensorHealth::reset().
CheckResult check_reading(SensorHealth health, double reading, double prediction,
                          VirtualTime now);

}  // namespace wban
