#include "metashap/gp.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <numbers>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "metashap/error.hpp"
#include "metashap/random.hpp"

namespace metashap {

namespace {

constexpr double kLogLengthLo = -4.605170185988091; // ln 0.01
constexpr double kLogLengthHi = 2.302585092994046;  // ln 10
constexpr double kLogSignalLo = -2.995732273553991; // ln 0.05
constexpr double kLogSignalHi = 2.995732273553991;  // ln 20
constexpr int kRestarts = 8;
constexpr int kMaxIterations = 400;

double squash(double u, double lo, double hi) { return lo + (hi - lo) / (1.0 + std::exp(-u)); }

struct Hyper {
    std::vector<double> length_scales;
    double signal = 1.0;
    double noise = kGPNoiseMin;
};

Hyper unpack(const gsl_vector* u, std::size_t d) {
    Hyper h;
    h.length_scales.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
        h.length_scales[j] = std::exp(squash(gsl_vector_get(u, j), kLogLengthLo, kLogLengthHi));
    }
    h.signal = std::exp(squash(gsl_vector_get(u, d), kLogSignalLo, kLogSignalHi));
    h.noise = std::exp(squash(gsl_vector_get(u, d + 1), std::log(kGPNoiseMin), std::log(kGPNoiseMax)));
    return h;
}

Eigen::MatrixXd kernel_matrix(const RowMatrix& X, const Hyper& h, double diag) {
    const auto n = X.rows();
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
        K(a, a) = h.signal + diag;
        for (Eigen::Index b = a + 1; b < n; ++b) {
            double r2 = 0.0;
            for (Eigen::Index j = 0; j < X.cols(); ++j) {
                const double t = (X(a, j) - X(b, j)) / h.length_scales[static_cast<std::size_t>(j)];
                r2 += t * t;
            }
            K(a, b) = K(b, a) = h.signal * std::exp(-0.5 * r2);
        }
    }
    return K;
}

struct FitData {
    const RowMatrix* X;
    Eigen::VectorXd y;
};

double negative_lml(const gsl_vector* u, void* params) {
    const auto* data = static_cast<const FitData*>(params);
    const auto h = unpack(u, static_cast<std::size_t>(data->X->cols()));
    Eigen::LLT<Eigen::MatrixXd> llt(kernel_matrix(*data->X, h, h.noise + kGPJitter));
    if (llt.info() != Eigen::Success) return 1e25;
    const Eigen::VectorXd alpha = llt.solve(data->y);
    const Eigen::MatrixXd& L = llt.matrixLLT();
    const double log_det = 2.0 * L.diagonal().array().log().sum();
    const double n = static_cast<double>(data->y.size());
    const double value = 0.5 * data->y.dot(alpha) + 0.5 * log_det + 0.5 * n * std::log(2.0 * std::numbers::pi);
    return std::isfinite(value) ? value : 1e25;
}

struct MinimizerDeleter {
    void operator()(gsl_multimin_fminimizer* m) const { gsl_multimin_fminimizer_free(m); }
};
struct VectorDeleter {
    void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};
using VectorPtr = std::unique_ptr<gsl_vector, VectorDeleter>;

} // namespace

GPModel gp_fit(const RowMatrix& X, std::span<const double> y, std::uint64_t seed) {
    const auto n = static_cast<std::size_t>(X.rows());
    const auto d = static_cast<std::size_t>(X.cols());
    if (n < 2) throw ValidationError("gp_fit needs at least 2 points");
    if (y.size() != n) throw ValidationError("gp_fit: X and y sizes differ");
    if (d == 0) throw ValidationError("gp_fit: zero-dimensional inputs");

    gsl_set_error_handler_off();
    GPModel model;
    model.X_ = X;
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : y) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    model.y_mean_ = mean;
    model.y_scale_ = sd > 1e-12 ? sd : 1.0;

    FitData data{&X, Eigen::VectorXd(static_cast<Eigen::Index>(n))};
    for (std::size_t i = 0; i < n; ++i) data.y(static_cast<Eigen::Index>(i)) = (y[i] - mean) / model.y_scale_;

    const std::size_t dim = d + 2;
    gsl_multimin_function fn{&negative_lml, dim, &data};
    std::unique_ptr<gsl_multimin_fminimizer, MinimizerDeleter> minimizer(
        gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, dim));
    VectorPtr start(gsl_vector_alloc(dim)), step(gsl_vector_alloc(dim)), best(gsl_vector_alloc(dim));
    gsl_vector_set_all(step.get(), 1.0);
    double best_value = std::numeric_limits<double>::infinity();

    Rng rng(derive_seed(seed, "gp-restarts"));
    std::normal_distribution<double> normal(0.0, 1.5);
    for (int r = 0; r < kRestarts; ++r) {
        for (std::size_t j = 0; j < dim; ++j) gsl_vector_set(start.get(), j, r == 0 ? 0.0 : normal(rng));
        if (r == 0) gsl_vector_set(start.get(), d + 1, -2.0);
        gsl_multimin_fminimizer_set(minimizer.get(), &fn, start.get(), step.get());
        for (int it = 0; it < kMaxIterations; ++it) {
            if (gsl_multimin_fminimizer_iterate(minimizer.get()) != GSL_SUCCESS) break;
            if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(minimizer.get()), 1e-4) == GSL_SUCCESS) break;
        }
        const double value = gsl_multimin_fminimizer_minimum(minimizer.get());
        if (value < best_value) {
            best_value = value;
            gsl_vector_memcpy(best.get(), gsl_multimin_fminimizer_x(minimizer.get()));
        }
    }

    const auto h = unpack(best.get(), d);
    model.length_scales_ = h.length_scales;
    model.signal_variance_ = h.signal;
    model.noise_ = h.noise;
    for (double jitter = kGPJitter; jitter <= 1e-1; jitter *= 10.0) {
        Eigen::LLT<Eigen::MatrixXd> llt(kernel_matrix(X, h, h.noise + jitter));
        if (llt.info() != Eigen::Success) continue;
        model.jitter_ = jitter;
        model.L_ = llt.matrixL();
        model.alpha_ = llt.solve(data.y);
        model.lml_ = -best_value;
        return model;
    }
    throw Error("gp_fit: kernel matrix is singular after jitter escalation");
}

GPPrediction GPModel::predict(std::span<const double> x) const {
    if (x.size() != static_cast<std::size_t>(X_.cols())) throw ValidationError("GP predict: dimension mismatch");
    const auto n = X_.rows();
    Eigen::VectorXd kstar(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double r2 = 0.0;
        for (Eigen::Index j = 0; j < X_.cols(); ++j) {
            const double t = (x[static_cast<std::size_t>(j)] - X_(i, j)) / length_scales_[static_cast<std::size_t>(j)];
            r2 += t * t;
        }
        kstar(i) = signal_variance_ * std::exp(-0.5 * r2);
    }
    const Eigen::VectorXd v = L_.triangularView<Eigen::Lower>().solve(kstar);
    GPPrediction out;
    out.mean = y_mean_ + y_scale_ * kstar.dot(alpha_);
    out.variance = std::max(0.0, signal_variance_ - v.squaredNorm()) * y_scale_ * y_scale_;
    return out;
}

double expected_improvement(double mean, double sigma, double best) {
    const double gap = mean - best;
    if (!(sigma >= 1e-12)) return std::max(0.0, gap);
    const double z = gap / sigma;
    const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
    const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    return std::max(0.0, gap * cdf + sigma * pdf);
}

double expected_improvement(const GPModel& model, std::span<const double> x, double best) {
    const auto p = model.predict(x);
    return expected_improvement(p.mean, std::sqrt(p.variance), best);
}

} // namespace metashap
