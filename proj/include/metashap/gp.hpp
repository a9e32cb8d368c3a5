#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "metashap/matrix.hpp"

namespace metashap {

struct GPPrediction {
    double mean = 0.0;
    double variance = 0.0;
};

/**
 * Zero-mean GP on standardized targets with a squared-exponential ARD kernel.
 * Inputs live in the unit cube.
 */
class GPModel {
public:
    GPPrediction predict(std::span<const double> x) const;

    const std::vector<double>& length_scales() const { return length_scales_; }
    double signal_variance() const { return signal_variance_ * y_scale_ * y_scale_; }
    // Learned noise plus jitter, in the units of y.
    double noise_variance() const { return (noise_ + jitter_) * y_scale_ * y_scale_; }
    double log_marginal_likelihood() const { return lml_; }

    friend GPModel gp_fit(const RowMatrix& X, std::span<const double> y, std::uint64_t seed);

private:
    RowMatrix X_;
    double y_mean_ = 0.0;
    double y_scale_ = 1.0;
    std::vector<double> length_scales_;
    double signal_variance_ = 1.0;
    double noise_ = 1e-6;
    double jitter_ = 1e-6;
    double lml_ = 0.0;
    Eigen::MatrixXd L_;
    Eigen::VectorXd alpha_;
};

inline constexpr double kGPJitter = 1e-6;
inline constexpr double kGPNoiseMin = 1e-6;
inline constexpr double kGPNoiseMax = 1e-2;

// Maximizes the log marginal likelihood with 8 seeded Nelder-Mead restarts.
GPModel gp_fit(const RowMatrix& X, std::span<const double> y, std::uint64_t seed);

double expected_improvement(double mean, double sigma, double best);
double expected_improvement(const GPModel& model, std::span<const double> x, double best);

} // namespace metashap
