#include "metashap/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include <gsl/gsl_qrng.h>

#include "metashap/error.hpp"

namespace metashap {

namespace {

struct QrngDeleter {
    void operator()(gsl_qrng* q) const { gsl_qrng_free(q); }
};

RowMatrix qrng_points(const gsl_qrng_type* type, std::size_t n, std::size_t d) {
    std::unique_ptr<gsl_qrng, QrngDeleter> q(gsl_qrng_alloc(type, static_cast<unsigned>(d)));
    if (!q) throw Error("cannot allocate quasi-random generator");
    RowMatrix out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < n; ++i) gsl_qrng_get(q.get(), row_span(out, static_cast<Eigen::Index>(i)).data());
    return out;
}

} // namespace

RowMatrix latin_hypercube(std::size_t n, std::size_t d, Rng& rng) {
    RowMatrix out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<std::size_t> strata(n);
    for (std::size_t j = 0; j < d; ++j) {
        std::iota(strata.begin(), strata.end(), 0);
        std::shuffle(strata.begin(), strata.end(), rng);
        for (std::size_t i = 0; i < n; ++i) {
            const double u = (static_cast<double>(strata[i]) + unif(rng)) / static_cast<double>(n);
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = std::min(u, std::nextafter(1.0, 0.0));
        }
    }
    return out;
}

RowMatrix halton(std::size_t n, std::size_t d) {
    if (d == 0 || d > 1229) throw ValidationError("halton: dimension must be in 1..1229");
    return qrng_points(gsl_qrng_halton, n, d);
}

RowMatrix shifted_sobol(std::size_t n, std::size_t d, std::uint64_t shift_seed) {
    if (d == 0) throw ValidationError("sobol: dimension must be >= 1");
    RowMatrix out = d <= 40 ? qrng_points(gsl_qrng_sobol, n, d) : halton(n, d);
    Rng rng(shift_seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        const double shift = unif(rng);
        for (Eigen::Index i = 0; i < out.rows(); ++i) {
            double v = out(i, j) + shift;
            if (v >= 1.0) v -= 1.0;
            out(i, j) = v;
        }
    }
    return out;
}

} // namespace metashap
