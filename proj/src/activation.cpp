#include "pcc/activation.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "pcc/error.hpp"

namespace pcc {

double activate(Activation act, double x) {
    switch (act) {
        case Activation::Identity: return x;
        case Activation::ReLU: return x > 0.0 ? x : 0.0;
        case Activation::Tanh: return std::tanh(x);
        case Activation::ELU: return x > 0.0 ? x : std::expm1(x);
        case Activation::GELU: return 0.5 * x * std::erfc(-x / std::numbers::sqrt2);
    }
    return x;
}

double activate_derivative(Activation act, double x) {
    switch (act) {
        case Activation::Identity: return 1.0;
        case Activation::ReLU: return x > 0.0 ? 1.0 : 0.0;
        case Activation::Tanh: {
            const double t = std::tanh(x);
            return 1.0 - t * t;
        }
        case Activation::ELU: return x > 0.0 ? 1.0 : std::exp(x);
        case Activation::GELU: {
            const double cdf = 0.5 * std::erfc(-x / std::numbers::sqrt2);
            const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
            return cdf + x * pdf;
        }
    }
    return 1.0;
}

Eigen::MatrixXd activate(Activation act, const Eigen::MatrixXd& x) {
    if (act == Activation::Identity) return x;
    return x.unaryExpr([act](double v) { return activate(act, v); });
}

Eigen::MatrixXd activate_derivative(Activation act, const Eigen::MatrixXd& x) {
    if (act == Activation::Identity) return Eigen::MatrixXd::Ones(x.rows(), x.cols());
    return x.unaryExpr([act](double v) { return activate_derivative(act, v); });
}

std::string_view to_string(Activation act) {
    switch (act) {
        case Activation::Identity: return "identity";
        case Activation::ReLU: return "relu";
        case Activation::Tanh: return "tanh";
        case Activation::ELU: return "elu";
        case Activation::GELU: return "gelu";
    }
    return "identity";
}

Activation activation_from_string(std::string_view name) {
    for (auto act : kAllActivations) {
        if (to_string(act) == name) return act;
    }
    throw ConfigError("unknown activation: " + std::string(name));
}

}  // namespace pcc
