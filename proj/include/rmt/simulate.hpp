#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "rmt/errors.hpp"
#include "rmt/panel.hpp"
#include "rmt/rng.hpp"

namespace rmt {

enum class SimMode { gaussian, stochvol };

struct SimConfig {
    int t_steps = 0;
    double nu = 3.0;       // tail index, > 2
    std::uint64_t seed = 0;
    SimMode mode = SimMode::gaussian;
};

/// Lower-triangular L with L·Lᵀ = C (Cholesky).
inline Eigen::MatrixXd correlation_factor(const CorrelationMatrix& c) {
    Eigen::LLT<Eigen::MatrixXd> llt(c.entries);
    if (llt.info() != Eigen::Success)
        throw NotPositiveDefinite(
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(c.entries, Eigen::EigenvaluesOnly)
                .eigenvalues()
                .minCoeff());
    return llt.matrixL();
}

namespace detail {

/// Rows x_t = scale_t · L z_t, z drawn row-major (t outer, asset inner).
/// `vol` draws the per-step volatility multiplier before the step's normals.
template <typename VolFn>
Eigen::MatrixXd sample_factor_panel(const Eigen::MatrixXd& factor, int t_steps,
                                    SplitMix64& gen, VolFn&& vol) {
    const Eigen::Index n = factor.rows();
    Eigen::MatrixXd z(t_steps, n);
    Eigen::VectorXd scale(t_steps);
    for (int t = 0; t < t_steps; ++t) {
        scale[t] = vol(gen);
        for (Eigen::Index i = 0; i < n; ++i)
            z(t, i) = gen.normal();
    }
    Eigen::MatrixXd x = z * factor.transpose();
    x.array().colwise() *= scale.array();
    return x;
}

} // namespace detail

/// Multivariate Gaussian panel with population correlation C.
inline ReturnPanel gaussian_panel(const CorrelationMatrix& c, int t_steps,
                                  std::uint64_t seed) {
    if (t_steps < 2)
        throw InvalidParameter("panel length must be at least 2");
    const Eigen::MatrixXd factor = correlation_factor(c);
    SplitMix64 gen = SplitMix64::stream(seed, 0);
    Eigen::MatrixXd x = detail::sample_factor_panel(factor, t_steps, gen,
                                                    [](SplitMix64&) { return 1.0; });
    return make_panel(std::move(x), c.assets);
}

/// One-factor stochastic-volatility panel: a single per-step variance
/// s_t² ~ InvGamma(ν/2, (ν−2)/2) (so E[s²] = 1) multiplies the whole
/// cross-section, giving unit-variance Student-t marginals with ν degrees
/// of freedom and cross-correlation C in expectation.
inline ReturnPanel stochvol_panel(const CorrelationMatrix& c, const SimConfig& cfg) {
    if (!(cfg.nu > 2.0))
        throw InvalidNu(cfg.nu);
    if (cfg.t_steps < 2)
        throw InvalidParameter("panel length must be at least 2");
    if (cfg.mode == SimMode::gaussian)
        return gaussian_panel(c, cfg.t_steps, cfg.seed);

    const Eigen::MatrixXd factor = correlation_factor(c);
    SplitMix64 gen = SplitMix64::stream(cfg.seed, 0);
    const double shape = cfg.nu / 2.0;
    const double scale = (cfg.nu - 2.0) / 2.0;
    Eigen::MatrixXd x = detail::sample_factor_panel(
        factor, cfg.t_steps, gen,
        [&](SplitMix64& g) { return std::sqrt(g.inverse_gamma(shape, scale)); });
    return make_panel(std::move(x), c.assets);
}

/// Pure-noise i.i.d. standard normal panel (MP calibration input).
inline ReturnPanel mp_null_panel(int n_assets, int t_steps, std::uint64_t seed) {
    if (n_assets < 2 || t_steps < 2)
        throw InvalidParameter("null panel needs n, t >= 2");
    SplitMix64 gen = SplitMix64::stream(seed, 0);
    Eigen::MatrixXd x(t_steps, n_assets);
    for (int t = 0; t < t_steps; ++t)
        for (int i = 0; i < n_assets; ++i)
            x(t, i) = gen.normal();
    return make_panel(std::move(x));
}

} // namespace rmt
