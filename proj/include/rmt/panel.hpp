#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rmt/errors.hpp"

namespace rmt {

/// T×N table of returns with row time labels and column asset identifiers.
/// `standardized` marks panels whose columns have mean 0 and variance 1
/// (variance with divisor T throughout this library, so that a standardized
/// panel's correlation is exactly XᵀX/T and the spectrum traces to N).
struct ReturnPanel {
    std::vector<std::string> timestamps; // length T
    std::vector<std::string> assets;     // length N
    Eigen::MatrixXd values;              // T × N
    bool standardized = false;

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }
};

/// Symmetric unit-diagonal correlation matrix with asset labels.
struct CorrelationMatrix {
    std::vector<std::string> assets;
    Eigen::MatrixXd entries; // N × N
};

namespace detail {

inline std::vector<std::string> default_labels(const char* prefix, Eigen::Index n) {
    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
        out.push_back(prefix + std::to_string(i + 1));
    return out;
}

inline void check_panel_shape(const ReturnPanel& p) {
    if (p.rows() < 2 || p.cols() < 2)
        throw InputError("panel must have at least 2 rows and 2 columns");
    if (static_cast<Eigen::Index>(p.timestamps.size()) != p.rows())
        throw DimensionMismatch("timestamp count does not match row count");
    if (static_cast<Eigen::Index>(p.assets.size()) != p.cols())
        throw DimensionMismatch("asset count does not match column count");
    if (!p.values.allFinite())
        throw InputError("panel contains non-finite values");
}

} // namespace detail

/// Wrap a raw value matrix as a panel, generating labels where missing.
inline ReturnPanel make_panel(Eigen::MatrixXd values,
                              std::vector<std::string> assets = {},
                              std::vector<std::string> timestamps = {}) {
    ReturnPanel p;
    p.values = std::move(values);
    p.assets = assets.empty() ? detail::default_labels("A", p.values.cols())
                              : std::move(assets);
    p.timestamps = timestamps.empty() ? detail::default_labels("", p.values.rows())
                                      : std::move(timestamps);
    return p;
}

/// Log returns x[t][i] = ln(prices[t+1][i] / prices[t][i]).
/// The first timestamp is consumed; the return row carries the label of the
/// period's end point.
inline ReturnPanel log_returns(const ReturnPanel& prices) {
    if (prices.rows() < 3)
        throw TooFewRows(prices.rows());
    for (Eigen::Index t = 0; t < prices.rows(); ++t)
        for (Eigen::Index i = 0; i < prices.cols(); ++i)
            if (!(prices.values(t, i) > 0.0))
                throw NonPositivePrice(t, i);

    ReturnPanel out;
    out.assets = prices.assets;
    out.timestamps.assign(prices.timestamps.begin() + 1, prices.timestamps.end());
    const Eigen::Index t_steps = prices.rows() - 1;
    out.values.resize(t_steps, prices.cols());
    for (Eigen::Index t = 0; t < t_steps; ++t)
        for (Eigen::Index i = 0; i < prices.cols(); ++i)
            out.values(t, i) = std::log(prices.values(t + 1, i) / prices.values(t, i));
    out.standardized = false;
    return out;
}

/// Demean each column and divide by its standard deviation (divisor T).
inline ReturnPanel standardize(const ReturnPanel& panel) {
    detail::check_panel_shape(panel);
    const Eigen::Index t_steps = panel.rows();
    ReturnPanel out = panel;
    for (Eigen::Index i = 0; i < panel.cols(); ++i) {
        const double mean = panel.values.col(i).mean();
        const double var =
            (panel.values.col(i).array() - mean).square().sum() / static_cast<double>(t_steps);
        if (var <= 1e-14)
            throw ZeroVarianceColumn(i);
        out.values.col(i) = (panel.values.col(i).array() - mean) / std::sqrt(var);
    }
    out.standardized = true;
    return out;
}

/// Pearson correlation matrix; diagonal is set to 1 exactly.
inline CorrelationMatrix empirical_correlation(const ReturnPanel& panel) {
    const ReturnPanel z = panel.standardized ? panel : standardize(panel);
    CorrelationMatrix c;
    c.assets = panel.assets;
    c.entries.noalias() =
        (z.values.transpose() * z.values) / static_cast<double>(z.rows());
    c.entries = 0.5 * (c.entries + c.entries.transpose()).eval();
    c.entries.diagonal().setOnes();
    return c;
}

/// Invariant check used by consumers of externally supplied matrices.
inline void validate_correlation(const CorrelationMatrix& c, double tol = 1e-12) {
    const Eigen::Index n = c.entries.rows();
    if (c.entries.cols() != n)
        throw DimensionMismatch("correlation matrix is not square");
    if (!c.assets.empty() && static_cast<Eigen::Index>(c.assets.size()) != n)
        throw DimensionMismatch("asset labels do not match matrix size");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (std::abs(c.entries(i, i) - 1.0) > tol)
            throw InputError("correlation diagonal deviates from 1 at index " +
                             std::to_string(i));
        for (Eigen::Index j = i + 1; j < n; ++j) {
            if (std::abs(c.entries(i, j) - c.entries(j, i)) > tol)
                throw InputError("correlation matrix is not symmetric at (" +
                                 std::to_string(i) + "," + std::to_string(j) + ")");
            if (std::abs(c.entries(i, j)) > 1.0 + tol)
                throw InputError("correlation entry out of [-1, 1] at (" +
                                 std::to_string(i) + "," + std::to_string(j) + ")");
        }
    }
}

} // namespace rmt
