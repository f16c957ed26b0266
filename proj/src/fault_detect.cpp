#include "wban/fault_detect.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace wban {

namespace {

void check_inputs(const PredictorModel& model, std::span<const double> inputs) {
  if (inputs.size() != model.n_inputs) {
    throw std::invalid_argument("predictor expects " +
                                std::to_string(model.n_inputs) + " inputs, got " +
                                std::to_string(inputs.size()));
  }
  for (double x : inputs) {
    if (!std::isfinite(x)) throw std::domain_error("non-finite predictor input");
  }
}

// Hidden activations for one input vector.
std::vector<double> hidden_layer(const PredictorModel& m,
                                 std::span<const double> x) {
  std::vector<double> h(m.n_hidden);
  for (std::size_t j = 0; j < m.n_hidden; ++j) {
    double a = m.bias_hidden[j];
    for (std::size_t k = 0; k < m.n_inputs; ++k)
      a += m.weights_in[j * m.n_inputs + k] * x[k];
    h[j] = std::tanh(a);
  }
  return h;
}

double output(const PredictorModel& m, const std::vector<double>& h) {
  double y = m.bias_out;
  for (std::size_t j = 0; j < m.n_hidden; ++j) y += m.weights_out[j] * h[j];
  return y;
}

}  // namespace

PredictorModel PredictorModel::zeros(std::size_t n_inputs, std::size_t n_hidden,
                                     double learning_rate) {
  PredictorModel m;
  m.n_inputs = n_inputs;
  m.n_hidden = n_hidden;
  m.weights_in.assign(n_inputs * n_hidden, 0.0);
  m.bias_hidden.assign(n_hidden, 0.0);
  m.weights_out.assign(n_hidden, 0.0);
  m.learning_rate = learning_rate;
  m.validate();
  return m;
}

PredictorModel PredictorModel::random(std::size_t n_inputs, std::size_t n_hidden,
                                      Rng& rng, double scale,
                                      double learning_rate) {
  auto m = zeros(n_inputs, n_hidden, learning_rate);
  for (auto& w : m.weights_in) w = rng.uniform(-scale, scale);
  for (auto& w : m.weights_out) w = rng.uniform(-scale, scale);
  return m;
}

std::size_t PredictorModel::parameter_count() const {
  return n_hidden * n_inputs + 2 * n_hidden + 1;
}

std::vector<double> PredictorModel::parameters() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  flat.insert(flat.end(), weights_in.begin(), weights_in.end());
  flat.insert(flat.end(), bias_hidden.begin(), bias_hidden.end());
  flat.insert(flat.end(), weights_out.begin(), weights_out.end());
  flat.push_back(bias_out);
  return flat;
}

void PredictorModel::set_parameters(std::span<const double> flat) {
  if (flat.size() != parameter_count())
    throw std::invalid_argument("parameter vector has wrong length");
  auto it = flat.begin();
  for (auto& w : weights_in) w = *it++;
  for (auto& b : bias_hidden) b = *it++;
  for (auto& w : weights_out) w = *it++;
  bias_out = *it;
}

void PredictorModel::validate() const {
  if (n_inputs < 1 || n_hidden < 1)
    throw std::invalid_argument("predictor needs at least one input and hidden unit");
  if (weights_in.size() != n_inputs * n_hidden || bias_hidden.size() != n_hidden ||
      weights_out.size() != n_hidden)
    throw std::invalid_argument("predictor parameter shapes are inconsistent");
  for (double p : parameters()) {
    if (!std::isfinite(p)) throw std::invalid_argument("non-finite predictor weight");
  }
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw std::invalid_argument("learning rate must be positive");
}

double predict(const PredictorModel& model, std::span<const double> inputs) {
  check_inputs(model, inputs);
  return output(model, hidden_layer(model, inputs));
}

std::vector<double> loss_gradient(const PredictorModel& m,
                                  std::span<const double> x, double target) {
  check_inputs(m, x);
  if (!std::isfinite(target)) throw std::domain_error("non-finite training target");

  const auto h = hidden_layer(m, x);
  const double dy = 2.0 * (output(m, h) - target);

  std::vector<double> grad(m.parameter_count());
  const std::size_t off_bh = m.n_hidden * m.n_inputs;
  const std::size_t off_wo = off_bh + m.n_hidden;
  for (std::size_t j = 0; j < m.n_hidden; ++j) {
    const double da = dy * m.weights_out[j] * (1.0 - h[j] * h[j]);
    for (std::size_t k = 0; k < m.n_inputs; ++k)
      grad[j * m.n_inputs + k] = da * x[k];
    grad[off_bh + j] = da;
    grad[off_wo + j] = dy * h[j];
  }
  grad.back() = dy;
  return grad;
}

TrainResult train_step(PredictorModel model, std::span<const double> inputs,
                       double target) {
  const double err = predict(model, inputs) - target;
  const auto grad = loss_gradient(model, inputs, target);
  auto params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i)
    params[i] -= model.learning_rate * grad[i];
  model.set_parameters(params);
  return {std::move(model), err * err};
}

double error_rate(double reading, double prediction, double lo, double hi) {
  return std::abs(reading - prediction) / (hi - lo);
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kValid: return "valid";
    case Verdict::kConflict: return "conflict";
    case Verdict::kFaulty: return "faulty";
  }
  return "unknown";
}

void SensorHealth::validate() const {
  if (!(lo < hi)) throw std::invalid_argument("sensor range requires lo < hi");
  if (!(eps_max > 0.0 && eps_max <= 1.0))
    throw std::invalid_argument("eps_max must be in (0, 1]");
  if (timer.duration.count() <= 0)
    throw std::invalid_argument("fault timer duration must be positive");
}

void SensorHealth::reset() {
  faulty = false;
  timer.deadline.reset();
  last_verdict = Verdict::kValid;
}

CheckResult check_reading(SensorHealth health, double reading, double prediction,
                          VirtualTime now) {
  if (health.faulty) {
    health.last_verdict = Verdict::kFaulty;
    return {Verdict::kFaulty, std::move(health), false};
  }

  // NaN fails the range test.
  const bool in_range = reading >= health.lo && reading <= health.hi;
  const bool agrees =
      in_range && error_rate(reading, prediction, health.lo, health.hi) <= health.eps_max;

  Verdict verdict;
  if (agrees) {
    health.timer.deadline.reset();
    verdict = Verdict::kValid;
  } else if (!health.timer.counting()) {
    health.timer.deadline = now + health.timer.duration;
    verdict = Verdict::kConflict;
  } else if (now < *health.timer.deadline) {
    verdict = Verdict::kConflict;
  } else {
    health.faulty = true;
    health.timer.deadline.reset();
    verdict = Verdict::kFaulty;
  }
  health.last_verdict = verdict;
  return {verdict, std::move(health), verdict == Verdict::kValid};
}

}  // namespace wban
