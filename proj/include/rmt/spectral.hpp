#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "rmt/errors.hpp"
#include "rmt/panel.hpp"

namespace rmt {

/// Spectral decomposition of a correlation matrix.
/// Eigenvalues sorted descending; column k of `eigenvectors` belongs to
/// eigenvalues[k]. Sign convention: the entry sum of every eigenvector is
/// non-negative; exact-zero sums are resolved by making the first nonzero
/// entry positive.
struct EigenSystem {
    Eigen::VectorXd eigenvalues;  // N, descending
    Eigen::MatrixXd eigenvectors; // N × N

    Eigen::Index size() const { return eigenvalues.size(); }
};

inline EigenSystem eigendecompose(const CorrelationMatrix& c) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(c.entries);
    if (solver.info() != Eigen::Success)
        throw ConvergenceFailure("symmetric eigensolver failed");

    const Eigen::Index n = c.entries.rows();
    EigenSystem es;
    es.eigenvalues = solver.eigenvalues().reverse();
    es.eigenvectors = solver.eigenvectors().rowwise().reverse();
    for (Eigen::Index k = 0; k < n; ++k) {
        const double s = es.eigenvectors.col(k).sum();
        bool flip = s < 0.0;
        if (s == 0.0) {
            for (Eigen::Index i = 0; i < n; ++i) {
                if (es.eigenvectors(i, k) != 0.0) {
                    flip = es.eigenvectors(i, k) < 0.0;
                    break;
                }
            }
        }
        if (flip)
            es.eigenvectors.col(k) = -es.eigenvectors.col(k);
    }
    return es;
}

inline Eigen::MatrixXd reconstruct(const EigenSystem& es) {
    return es.eigenvectors * es.eigenvalues.asDiagonal() * es.eigenvectors.transpose();
}

namespace detail {
inline void check_mp_params(double q, double sigma) {
    if (!(q > 1.0))
        throw InvalidParameter("MP ratio q must exceed 1, got " + std::to_string(q));
    if (!(sigma > 0.0))
        throw InvalidParameter("MP sigma must be positive, got " + std::to_string(sigma));
}
} // namespace detail

/// Hard band edges λ± = σ²(1 ± √(1/q))².
inline std::pair<double, double> mp_band_edges(double q, double sigma) {
    detail::check_mp_params(q, sigma);
    const double u = std::sqrt(1.0 / q);
    const double s2 = sigma * sigma;
    return {s2 * (1.0 - u) * (1.0 - u), s2 * (1.0 + u) * (1.0 + u)};
}

/// Marcenko–Pastur density (q/(2πσ²))·√((λ₊−λ)(λ−λ₋))/λ on [λ₋, λ₊], 0 outside.
inline double mp_density(double lambda, double q, double sigma) {
    const auto [lo, hi] = mp_band_edges(q, sigma);
    if (lambda <= lo || lambda >= hi)
        return 0.0;
    return q / (2.0 * M_PI * sigma * sigma) *
           std::sqrt((hi - lambda) * (lambda - lo)) / lambda;
}

/// Closed-form MP distribution function, the antiderivative of mp_density:
///   ∫ √((b−t)(t−a))/t dt = √((b−x)(x−a)) + (a+b)/2·asin((2x−a−b)/(b−a))
///                          − √(ab)·asin(((a+b)x − 2ab)/((b−a)x))
/// evaluated between a and x, scaled by q/(2πσ²).
inline double mp_cdf(double lambda, double q, double sigma) {
    const auto [a, b] = mp_band_edges(q, sigma);
    if (lambda <= a)
        return 0.0;
    if (lambda >= b)
        return 1.0;
    const auto clamp1 = [](double v) { return std::clamp(v, -1.0, 1.0); };
    const auto primitive = [&](double x) {
        const double inner = std::sqrt(std::max((b - x) * (x - a), 0.0));
        return inner + 0.5 * (a + b) * std::asin(clamp1((2.0 * x - a - b) / (b - a))) -
               std::sqrt(a * b) * std::asin(clamp1(((a + b) * x - 2.0 * a * b) / ((b - a) * x)));
    };
    return q / (2.0 * M_PI * sigma * sigma) * (primitive(lambda) - primitive(a));
}

/// Fitted MP parameters. λ± always recomputed from (σ_eff, q_eff).
struct MpFit {
    double sigma_eff = 0.0;
    double q_eff = 0.0;
    double lambda_minus = 0.0;
    double lambda_plus = 0.0;
    int n_signal = 0;
    double objective = 0.0;
};

struct MpFitOptions {
    double sigma_min = 0.2, sigma_max = 1.5, sigma_step = 0.01;
    double q_min = 1.05, q_max = 10.0, q_step = 0.05;
    double refine_tol = 1e-4;
    int max_auto_iterations = 10;
    long min_eigenvalues = 20;
};

namespace detail {

/// RMS distance between the sample CDF (midpoint plotting positions) and the
/// MP CDF at the sample points.
inline double mp_cdf_objective(const std::vector<double>& sorted_asc, double q, double sigma) {
    const std::size_t m = sorted_asc.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double emp = (static_cast<double>(i) + 0.5) / static_cast<double>(m);
        const double diff = mp_cdf(sorted_asc[i], q, sigma) - emp;
        acc += diff * diff;
    }
    return std::sqrt(acc / static_cast<double>(m));
}

/// Nelder–Mead on (σ, q), objective +∞ outside the valid domain.
inline std::array<double, 3> refine_mp_fit(const std::vector<double>& sorted_asc,
                                           double sigma0, double q0,
                                           const MpFitOptions& opt) {
    using Point = std::array<double, 2>;
    const auto eval = [&](const Point& p) {
        if (!(p[0] > 1e-6) || !(p[1] > 1.0 + 1e-9))
            return 1e18;
        return mp_cdf_objective(sorted_asc, p[1], p[0]);
    };
    std::array<Point, 3> pts = {Point{sigma0, q0},
                                Point{sigma0 + opt.sigma_step, q0},
                                Point{sigma0, q0 + opt.q_step}};
    std::array<double, 3> vals = {eval(pts[0]), eval(pts[1]), eval(pts[2])};
    const auto order = [&] {
        std::array<int, 3> idx = {0, 1, 2};
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return vals[a] < vals[b]; });
        std::array<Point, 3> p2 = {pts[idx[0]], pts[idx[1]], pts[idx[2]]};
        std::array<double, 3> v2 = {vals[idx[0]], vals[idx[1]], vals[idx[2]]};
        pts = p2;
        vals = v2;
    };
    for (int it = 0; it < 200; ++it) {
        order();
        const double diam = std::max(
            {std::abs(pts[0][0] - pts[2][0]), std::abs(pts[0][1] - pts[2][1]),
             std::abs(pts[1][0] - pts[2][0]), std::abs(pts[1][1] - pts[2][1])});
        if (diam < opt.refine_tol)
            break;
        const Point centroid = {0.5 * (pts[0][0] + pts[1][0]), 0.5 * (pts[0][1] + pts[1][1])};
        const auto at = [&](double coef) {
            return Point{centroid[0] + coef * (centroid[0] - pts[2][0]),
                         centroid[1] + coef * (centroid[1] - pts[2][1])};
        };
        const Point xr = at(1.0);
        const double fr = eval(xr);
        if (fr < vals[0]) {
            const Point xe = at(2.0);
            const double fe = eval(xe);
            if (fe < fr) {
                pts[2] = xe;
                vals[2] = fe;
            } else {
                pts[2] = xr;
                vals[2] = fr;
            }
        } else if (fr < vals[1]) {
            pts[2] = xr;
            vals[2] = fr;
        } else {
            const Point xc = at(-0.5);
            const double fc = eval(xc);
            if (fc < vals[2]) {
                pts[2] = xc;
                vals[2] = fc;
            } else {
                for (int j = 1; j < 3; ++j) {
                    pts[j] = {0.5 * (pts[j][0] + pts[0][0]), 0.5 * (pts[j][1] + pts[0][1])};
                    vals[j] = eval(pts[j]);
                }
            }
        }
    }
    order();
    return {pts[0][0], pts[0][1], vals[0]};
}

inline MpFit fit_mp_fixed_signal(const std::vector<double>& desc, int n_signal,
                                 const MpFitOptions& opt) {
    const long m = static_cast<long>(desc.size()) - n_signal;
    if (m < opt.min_eigenvalues)
        throw TooFewEigenvalues(m, opt.min_eigenvalues);

    std::vector<double> noise(desc.begin() + n_signal, desc.end());
    std::sort(noise.begin(), noise.end());

    // coarse grid; ties broken toward smaller sigma, then smaller q
    double best_obj = std::numeric_limits<double>::infinity();
    double best_sigma = opt.sigma_min, best_q = opt.q_min;
    const int ns = static_cast<int>(std::round((opt.sigma_max - opt.sigma_min) / opt.sigma_step));
    const int nq = static_cast<int>(std::round((opt.q_max - opt.q_min) / opt.q_step));
    int best_is = 0, best_iq = 0;
    for (int is = 0; is <= ns; ++is) {
        const double sigma = opt.sigma_min + is * opt.sigma_step;
        for (int iq = 0; iq <= nq; ++iq) {
            const double q = opt.q_min + iq * opt.q_step;
            const double obj = mp_cdf_objective(noise, q, sigma);
            if (obj < best_obj) {
                best_obj = obj;
                best_sigma = sigma;
                best_q = q;
                best_is = is;
                best_iq = iq;
            }
        }
    }
    if (best_is == 0 || best_is == ns || best_iq == 0 || best_iq == nq)
        throw FitDegenerate("grid search pinned to boundary at sigma = " +
                            std::to_string(best_sigma) + ", q = " + std::to_string(best_q));

    const auto refined = refine_mp_fit(noise, best_sigma, best_q, opt);
    MpFit fit;
    fit.sigma_eff = refined[0];
    fit.q_eff = refined[1];
    fit.objective = refined[2];
    fit.n_signal = n_signal;
    std::tie(fit.lambda_minus, fit.lambda_plus) = mp_band_edges(fit.q_eff, fit.sigma_eff);
    return fit;
}

} // namespace detail

/// Fit (σ_eff, q_eff) by matching the MP CDF to the empirical CDF of the
/// noise eigenvalues (coarse grid search, then Nelder–Mead refinement).
/// Without a hint, the signal count is auto-detected by iterating
/// fit → count eigenvalues above λ₊ → refit, to a fixed point.
inline MpFit fit_mp(const Eigen::VectorXd& eigenvalues_desc,
                    std::optional<int> n_signal_hint = std::nullopt,
                    const MpFitOptions& opt = {}) {
    std::vector<double> desc(eigenvalues_desc.data(),
                             eigenvalues_desc.data() + eigenvalues_desc.size());
    if (!std::is_sorted(desc.begin(), desc.end(), std::greater<double>()))
        std::sort(desc.begin(), desc.end(), std::greater<double>());

    if (n_signal_hint) {
        if (*n_signal_hint < 0)
            throw InvalidParameter("n_signal hint must be non-negative");
        return detail::fit_mp_fixed_signal(desc, *n_signal_hint, opt);
    }

    int n_signal = 0;
    MpFit fit = detail::fit_mp_fixed_signal(desc, n_signal, opt);
    for (int it = 0; it < opt.max_auto_iterations; ++it) {
        const double lp = fit.lambda_plus;
        const int detected = static_cast<int>(
            std::count_if(desc.begin(), desc.end(), [&](double v) { return v > lp; }));
        if (detected == n_signal)
            break;
        n_signal = detected;
        fit = detail::fit_mp_fixed_signal(desc, n_signal, opt);
    }
    return fit;
}

/// Inverse participation ratio I = Σᵢ eᵢ⁴ of a unit vector.
inline double ipr(const Eigen::VectorXd& e) {
    const double norm = e.norm();
    if (std::abs(norm - 1.0) > 1e-8)
        throw NotNormalized(norm);
    return e.array().square().square().sum();
}

/// Participation P = 1/I: effective number of non-trivial components.
inline double participation(const Eigen::VectorXd& e) { return 1.0 / ipr(e); }

/// Relative inverse participation R^(G) = Σ_{i∈G} eᵢ⁴ / Σᵢ eᵢ⁴ ∈ [0, 1].
inline double relative_ipr(const Eigen::VectorXd& e, const std::vector<int>& group) {
    if (group.empty())
        throw EmptyGroup("relative-IPR group");
    const double norm = e.norm();
    if (std::abs(norm - 1.0) > 1e-8)
        throw NotNormalized(norm);
    double num = 0.0;
    for (int i : group) {
        if (i < 0 || i >= e.size())
            throw InputError("group index " + std::to_string(i) + " out of range");
        const double v = e[i] * e[i];
        num += v * v;
    }
    return num / e.array().square().square().sum();
}

/// Flat GRMT baseline P = N/3 for Gaussian-ensemble eigenvectors.
inline double grmt_participation_baseline(long n) {
    if (n < 1)
        throw InvalidParameter("baseline needs n >= 1");
    return static_cast<double>(n) / 3.0;
}

} // namespace rmt
