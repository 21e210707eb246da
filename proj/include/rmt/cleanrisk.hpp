#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rmt/errors.hpp"
#include "rmt/panel.hpp"
#include "rmt/simulate.hpp"
#include "rmt/spectral.hpp"
#include "rmt/structure.hpp"

namespace rmt {

/// Result of flat-band cleaning in the empirical eigenbasis: the top `kept`
/// eigenpairs are retained bit-identically, every other eigenvalue is set to
/// `flat_value`, and `entries` is the reconstruction in the original basis.
struct CleanedCorrelation {
    EigenSystem basis;
    int kept = 0;
    double flat_value = 0.0;
    Eigen::MatrixXd entries;
};

/// Cleaning with an explicit flat value (e.g. a fitted σ_eff²).
inline CleanedCorrelation clean_flat_band(const EigenSystem& es, int k, double flat_value) {
    const Eigen::Index n = es.size();
    if (k < 1 || k >= n)
        throw InvalidK(k, n);
    if (!(flat_value > 0.0))
        throw NegativeFlatValue(flat_value);

    CleanedCorrelation out;
    out.basis = es;
    out.kept = k;
    out.flat_value = flat_value;
    const auto kept_vecs = es.eigenvectors.leftCols(k);
    const Eigen::VectorXd excess = es.eigenvalues.head(k).array() - flat_value;
    out.entries = Eigen::MatrixXd::Identity(n, n) * flat_value;
    out.entries.noalias() += kept_vecs * excess.asDiagonal() * kept_vecs.transpose();
    return out;
}

/// Trace-preserving cleaning: the N−k noise eigenvalues share the value
/// (N − Σ_{j≤k} λ_j)/(N−k), so trace(C_clean) = N exactly.
inline CleanedCorrelation clean_flat_band(const EigenSystem& es, int k) {
    const Eigen::Index n = es.size();
    if (k < 1 || k >= n)
        throw InvalidK(k, n);
    const double flat = (static_cast<double>(n) - es.eigenvalues.head(k).sum()) /
                        static_cast<double>(n - k);
    if (!(flat > 0.0))
        throw NegativeFlatValue(flat);
    return clean_flat_band(es, k, flat);
}

/// Optional diagonal reset D^{-1/2} C D^{-1/2}; breaks exact trace
/// preservation, so it is never applied implicitly.
inline Eigen::MatrixXd renormalize_correlation(const Eigen::MatrixXd& m) {
    const Eigen::VectorXd d = m.diagonal().cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd out = d.asDiagonal() * m * d.asDiagonal();
    out.diagonal().setOnes();
    return out;
}

/// Quadratic form wᵀCw.
inline double portfolio_risk(const Eigen::VectorXd& w, const Eigen::MatrixXd& c) {
    if (w.size() != c.rows() || c.rows() != c.cols())
        throw DimensionMismatch("portfolio and matrix dimensions disagree");
    return w.dot(c * w);
}

/// Unit-norm equal-weight sum of the noise-band eigenvectors assigned to one
/// (possibly merged) group.
struct SubbandPortfolio {
    std::string name;
    std::vector<int> eigen_indices; // members of the subband, 0-based
    Eigen::VectorXd weights;        // unit norm
};

namespace detail {

/// Group names differing only by a trailing '+'/'-' share a subband
/// (G23+ and G23- merge into K23); "G<stem>" maps to subband "K<stem>".
inline std::string subband_name(const std::string& group_name) {
    std::string stem = group_name;
    if (!stem.empty() && (stem.back() == '+' || stem.back() == '-'))
        stem.pop_back();
    if (!stem.empty() && stem.front() == 'G')
        return "K" + stem.substr(1);
    return "K_" + stem;
}

} // namespace detail

/// Assign each noise-band eigenvector (index ≥ number of groups) to the
/// group with the largest relative inverse participation, merge sign-paired
/// groups, and build one unit-norm representative portfolio per subband.
inline std::vector<SubbandPortfolio> subband_portfolios(const EigenSystem& es,
                                                        const GroupPartition& p) {
    const Eigen::Index n = es.size();
    const int b = static_cast<int>(p.groups.size());
    if (b < 1 || b >= n)
        throw InvalidParameter("partition size must lie in [1, N)");

    std::vector<std::string> names;
    std::vector<std::vector<int>> members;
    std::map<std::string, int> slot;
    for (const auto& [gname, idx] : p.groups) {
        const std::string sname = detail::subband_name(gname);
        if (!slot.count(sname)) {
            slot[sname] = static_cast<int>(names.size());
            names.push_back(sname);
            members.emplace_back();
        }
    }

    for (Eigen::Index k = b; k < n; ++k) {
        const Eigen::ArrayXd e4 = es.eigenvectors.col(k).array().square().square();
        int best_group = 0;
        double best_sum = -1.0;
        for (int g = 0; g < b; ++g) {
            double acc = 0.0;
            for (int i : p.groups[g].second)
                acc += e4[i];
            if (acc > best_sum) {
                best_sum = acc;
                best_group = g;
            }
        }
        members[slot.at(detail::subband_name(p.groups[best_group].first))].push_back(
            static_cast<int>(k));
    }

    std::vector<SubbandPortfolio> out;
    for (std::size_t s = 0; s < names.size(); ++s) {
        if (members[s].empty())
            throw EmptySubband(names[s]);
        SubbandPortfolio port;
        port.name = names[s];
        port.eigen_indices = members[s];
        Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
        for (int k : members[s])
            w += es.eigenvectors.col(k);
        port.weights = w / w.norm();
        out.push_back(std::move(port));
    }
    return out;
}

enum class FlatMode { trace, sigma2 };

struct BacktestConfig {
    int t_in = 0;
    int t_out = 0;
    int trials = 50;
    int k_signal = 0; // 0 → number of blocks
    std::uint64_t seed = 0;
    FlatMode flat_mode = FlatMode::trace;
    // Diagnostic: predict with the exact model instead of the cleaned
    // estimate; the stationary bias must then vanish.
    bool predict_with_exact_model = false;
};

struct SubbandBias {
    std::string name;
    std::vector<int> eigen_indices;
    double delta_r = 0.0;
    double stderr = 0.0;
};

struct RiskBiasReport {
    std::vector<SubbandBias> subbands;
    double delta_r_all = 0.0;
    double stderr_all = 0.0;
    int trials = 0;
    int t_in = 0;
    int t_out = 0;
    int k_signal = 0;
    std::uint64_t seed = 0;
    FlatMode flat_mode = FlatMode::trace;
};

namespace detail {

inline std::pair<double, double> mean_stderr(const std::vector<double>& xs) {
    const double n = static_cast<double>(xs.size());
    double mean = 0.0;
    for (double x : xs)
        mean += x;
    mean /= n;
    double ss = 0.0;
    for (double x : xs)
        ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

} // namespace detail

/// Stationary risk-bias backtest. Per trial t two independent Gaussian panels
/// are drawn from the expanded model on streams (seed, 2t) and (seed, 2t+1);
/// the in-sample panel is estimated, eigendecomposed and flat-band cleaned,
/// and each fixed subband portfolio w_K (built once from the exact model's
/// eigenvectors) is scored by δr = (w·Ĉ_out·w − w·C_clean·w)/(w·C_clean·w).
/// Means and standard errors are aggregated across trials; δr_all scores the
/// unit-norm sum over the entire noise band.
inline RiskBiasReport risk_bias_backtest(const BlockModel& m, const BacktestConfig& cfg) {
    const CorrelationMatrix model = expand_block_model(m);
    const Eigen::Index n = model.entries.rows();
    if (cfg.t_in < n / 4 || cfg.t_out < n / 4)
        throw InvalidParameter("estimation and realization windows must be at least N/4");
    if (cfg.trials < 10)
        throw InvalidParameter("need at least 10 trials");
    const int k_signal = cfg.k_signal > 0 ? cfg.k_signal : m.blocks();
    if (k_signal < 1 || k_signal >= n)
        throw InvalidK(k_signal, n);

    const EigenSystem es = eigendecompose(model);
    const std::vector<SubbandPortfolio> ports =
        subband_portfolios(es, block_model_partition(m));

    Eigen::VectorXd w_all = Eigen::VectorXd::Zero(n);
    for (Eigen::Index k = m.blocks(); k < n; ++k)
        w_all += es.eigenvectors.col(k);
    w_all /= w_all.norm();

    const Eigen::MatrixXd factor = correlation_factor(model);
    std::vector<std::vector<double>> deltas(ports.size());
    std::vector<double> deltas_all;
    deltas_all.reserve(static_cast<std::size_t>(cfg.trials));

    for (int trial = 0; trial < cfg.trials; ++trial) {
        SplitMix64 gen_in = SplitMix64::stream(cfg.seed, 2 * static_cast<std::uint64_t>(trial));
        SplitMix64 gen_out =
            SplitMix64::stream(cfg.seed, 2 * static_cast<std::uint64_t>(trial) + 1);
        const auto unit_vol = [](SplitMix64&) { return 1.0; };

        Eigen::MatrixXd clean_entries;
        if (cfg.predict_with_exact_model) {
            clean_entries = model.entries;
        } else {
            const ReturnPanel in_panel = make_panel(
                detail::sample_factor_panel(factor, cfg.t_in, gen_in, unit_vol), model.assets);
            const EigenSystem es_in = eigendecompose(empirical_correlation(in_panel));
            if (cfg.flat_mode == FlatMode::sigma2) {
                const MpFit fit = fit_mp(es_in.eigenvalues, k_signal);
                clean_entries =
                    clean_flat_band(es_in, k_signal, fit.sigma_eff * fit.sigma_eff).entries;
            } else {
                clean_entries = clean_flat_band(es_in, k_signal).entries;
            }
        }

        const ReturnPanel out_panel = make_panel(
            detail::sample_factor_panel(factor, cfg.t_out, gen_out, unit_vol), model.assets);
        const Eigen::MatrixXd realized = empirical_correlation(out_panel).entries;

        for (std::size_t s = 0; s < ports.size(); ++s) {
            const double predicted = portfolio_risk(ports[s].weights, clean_entries);
            const double observed = portfolio_risk(ports[s].weights, realized);
            deltas[s].push_back((observed - predicted) / predicted);
        }
        const double predicted_all = portfolio_risk(w_all, clean_entries);
        const double observed_all = portfolio_risk(w_all, realized);
        deltas_all.push_back((observed_all - predicted_all) / predicted_all);
    }

    RiskBiasReport report;
    for (std::size_t s = 0; s < ports.size(); ++s) {
        SubbandBias sb;
        sb.name = ports[s].name;
        sb.eigen_indices = ports[s].eigen_indices;
        std::tie(sb.delta_r, sb.stderr) = detail::mean_stderr(deltas[s]);
        report.subbands.push_back(std::move(sb));
    }
    std::tie(report.delta_r_all, report.stderr_all) = detail::mean_stderr(deltas_all);
    report.trials = cfg.trials;
    report.t_in = cfg.t_in;
    report.t_out = cfg.t_out;
    report.k_signal = k_signal;
    report.seed = cfg.seed;
    report.flat_mode = cfg.flat_mode;
    return report;
}

} // namespace rmt
