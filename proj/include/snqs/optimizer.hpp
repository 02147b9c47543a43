#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>

#include "snqs/errors.hpp"

namespace snqs {

struct AdamWOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;

  friend bool operator==(const AdamWOptions&, const AdamWOptions&) = default;
};

// AdamW over a flat real parameter vector (complex tensors are viewed as
// interleaved re/im pairs). Decoupled weight decay multiplies the
// parameters before the moment update is applied.
class AdamW {
 public:
  AdamW(Eigen::Index n, AdamWOptions options)
      : options_(options),
        first_moment_(Eigen::VectorXd::Zero(n)),
        second_moment_(Eigen::VectorXd::Zero(n)) {}

  long step_count() const { return step_count_; }
  const AdamWOptions& options() const { return options_; }

  void step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& grad,
            double learning_rate) {
    if (params.size() != first_moment_.size() || grad.size() != first_moment_.size()) {
      throw DimensionError("AdamW: parameter/gradient shape mismatch");
    }
    if (!grad.allFinite()) {
      throw NumericError("AdamW: non-finite gradient at step " +
                         std::to_string(step_count_ + 1));
    }
    ++step_count_;
    first_moment_ = options_.beta1 * first_moment_ + (1.0 - options_.beta1) * grad;
    second_moment_ =
        options_.beta2 * second_moment_ + (1.0 - options_.beta2) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(options_.beta1, double(step_count_));
    const double bc2 = 1.0 - std::pow(options_.beta2, double(step_count_));
    if (options_.weight_decay != 0.0) {
      params *= 1.0 - learning_rate * options_.weight_decay;
    }
    params -= (learning_rate / bc1) * first_moment_.cwiseQuotient(
                  ((second_moment_ / bc2).cwiseSqrt().array() + options_.epsilon).matrix());
  }

  void step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& grad) {
    step(params, grad, options_.learning_rate);
  }

 private:
  AdamWOptions options_;
  Eigen::VectorXd first_moment_;
  Eigen::VectorXd second_moment_;
  long step_count_ = 0;
};

enum class LrPolicy { constant, cosine };

// Cosine decays from base at epoch 0 to base/100 at the final epoch.
inline double lr_schedule(int epoch, double base, LrPolicy policy, int total_epochs = 1) {
  if (epoch < 0) throw ConfigError("lr_schedule: epoch must be >= 0");
  if (policy == LrPolicy::constant) return base;
  const double floor = base / 100.0;
  if (total_epochs <= 1) return epoch == 0 ? base : floor;
  const double phase = double(epoch) / double(total_epochs - 1);
  return floor + 0.5 * (base - floor) * (1.0 + std::cos(3.14159265358979323846 * phase));
}

// Real view of a complex tensor: interleaved (re, im) pairs, zero copy.
inline Eigen::Map<Eigen::VectorXd> real_view(Eigen::MatrixXcd& m) {
  return {reinterpret_cast<double*>(m.data()), 2 * m.size()};
}

// Real gradient matching the real view layout: for a real-valued loss,
// d/dRe = 2 Re(G) and d/dIm = -2 Im(G) where G is the Wirtinger gradient.
inline Eigen::VectorXd wirtinger_to_real(const Eigen::MatrixXcd& g) {
  Eigen::VectorXd out(2 * g.size());
  const std::complex<double>* data = g.data();
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    out[2 * i] = 2.0 * data[i].real();
    out[2 * i + 1] = -2.0 * data[i].imag();
  }
  return out;
}

}  // namespace snqs
