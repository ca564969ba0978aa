#pragma once

#include <Eigen/Dense>
#include <string>
#include <string_view>

namespace pcc {

enum class Activation { Identity, ReLU, Tanh, ELU, GELU };

/// Elementwise f(x). ReLU'(0) = 0, ELU uses alpha = 1, GELU is the exact
/// Gaussian-CDF form x * Phi(x).
double activate(Activation act, double x);
double activate_derivative(Activation act, double x);

Eigen::MatrixXd activate(Activation act, const Eigen::MatrixXd& x);
Eigen::MatrixXd activate_derivative(Activation act, const Eigen::MatrixXd& x);

std::string_view to_string(Activation act);
Activation activation_from_string(std::string_view name);

inline constexpr Activation kAllActivations[] = {Activation::Identity, Activation::ReLU,
                                                 Activation::Tanh, Activation::ELU,
                                                 Activation::GELU};

}  // namespace pcc
