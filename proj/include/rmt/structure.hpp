#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rmt/errors.hpp"
#include "rmt/panel.hpp"
#include "rmt/spectral.hpp"

namespace rmt {

/// Disjoint, exhaustive asset grouping with the per-eigenvector thresholds
/// that produced it.
struct GroupPartition {
    std::vector<std::pair<std::string, std::vector<int>>> groups;
    std::vector<double> thresholds;

    const std::vector<int>* find(const std::string& name) const {
        for (const auto& [n, members] : groups)
            if (n == name)
                return &members;
        return nullptr;
    }
};

/// Outlier sets before disjointness enforcement; input to overlap_report.
struct RawOutlierGroups {
    std::vector<int> g1;  // lower outliers of |e_1|
    std::vector<int> g23; // union of secondary-factor outlier sets
    std::vector<double> thresholds;
    bool g1_from_fallback = false;
};

namespace detail {

inline double entry_std(const Eigen::VectorXd& v) {
    const double mean = v.mean();
    return std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size()));
}

} // namespace detail

/// Outlier sets of the top k_factors eigenvectors, before G1/G23 are made
/// disjoint. Secondary factors contribute |e_ki| > mult·std(e_k); the top
/// factor contributes its lower outliers |e_1i| < mean(|e_1|) − mult·std(|e_1|),
/// falling back to the smallest-|e_1| decile when that set is empty.
/// Zero-dispersion eigenvectors contribute no outliers.
inline RawOutlierGroups raw_outlier_groups(const EigenSystem& es, int k_factors,
                                           double threshold_mult = 1.5) {
    if (k_factors < 2)
        throw InvalidParameter("k_factors must be at least 2");
    if (k_factors > es.size())
        throw InvalidParameter("k_factors exceeds the number of eigenvectors");
    if (!(threshold_mult > 0.0))
        throw InvalidParameter("threshold multiplier must be positive");

    const Eigen::Index n = es.size();
    RawOutlierGroups raw;

    const Eigen::VectorXd abs1 = es.eigenvectors.col(0).cwiseAbs();
    const double s1 = detail::entry_std(abs1);
    const double t1 = abs1.mean() - threshold_mult * s1;
    raw.thresholds.push_back(t1);
    if (s1 > 0.0)
        for (Eigen::Index i = 0; i < n; ++i)
            if (abs1[i] < t1)
                raw.g1.push_back(static_cast<int>(i));
    if (raw.g1.empty()) {
        raw.g1_from_fallback = true;
        std::vector<int> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return abs1[a] < abs1[b]; });
        const std::size_t count = std::max<std::size_t>(1, static_cast<std::size_t>(n) / 10);
        raw.g1.assign(order.begin(), order.begin() + count);
        std::sort(raw.g1.begin(), raw.g1.end());
    }

    std::set<int> g23;
    for (int k = 1; k < k_factors; ++k) {
        const Eigen::VectorXd& e = es.eigenvectors.col(k);
        const double sk = detail::entry_std(e);
        const double tk = threshold_mult * sk;
        raw.thresholds.push_back(tk);
        if (sk <= 0.0)
            continue;
        for (Eigen::Index i = 0; i < n; ++i)
            if (std::abs(e[i]) > tk)
                g23.insert(static_cast<int>(i));
    }
    raw.g23.assign(g23.begin(), g23.end());
    return raw;
}

/// |G1 ∩ G23| before disjointness enforcement. The paper's empirical finding
/// is 0; a nonzero count flags threshold interference.
inline int overlap_report(const RawOutlierGroups& raw) {
    std::vector<int> common;
    std::set_intersection(raw.g1.begin(), raw.g1.end(), raw.g23.begin(), raw.g23.end(),
                          std::back_inserter(common));
    return static_cast<int>(common.size());
}

/// Partition {G23, Gperp, G1} from the top-factor outlier structure.
/// Indices qualifying for both G1 and G23 go to G23 (the stronger signal);
/// use overlap_report to inspect the raw overlap.
inline GroupPartition extract_outlier_groups(const EigenSystem& es, int k_factors,
                                             double threshold_mult = 1.5) {
    const RawOutlierGroups raw = raw_outlier_groups(es, k_factors, threshold_mult);
    if (raw.g23.empty())
        throw EmptyGroup("G23");

    const std::set<int> in23(raw.g23.begin(), raw.g23.end());
    std::vector<int> g1;
    for (int i : raw.g1)
        if (!in23.count(i))
            g1.push_back(i);
    if (g1.empty())
        throw EmptyGroup("G1");

    const std::set<int> in1(g1.begin(), g1.end());
    std::vector<int> gperp;
    for (Eigen::Index i = 0; i < es.size(); ++i)
        if (!in23.count(static_cast<int>(i)) && !in1.count(static_cast<int>(i)))
            gperp.push_back(static_cast<int>(i));
    if (gperp.empty())
        throw EmptyGroup("Gperp");

    GroupPartition p;
    p.groups.emplace_back("G23", raw.g23);
    p.groups.emplace_back("Gperp", std::move(gperp));
    p.groups.emplace_back("G1", std::move(g1));
    p.thresholds = raw.thresholds;
    return p;
}

/// Average-linkage agglomerative clustering on d_ij = √(2(1−C_ij)) restricted
/// to `subset`, cut at n_clusters. Clusters are returned ordered by decreasing
/// mean intra-cluster correlation (singletons rank as 1), ties by smallest
/// member index; merge-distance ties resolve to the lowest pair index.
inline std::vector<std::vector<int>> hierarchical_split(const CorrelationMatrix& c,
                                                        const std::vector<int>& subset,
                                                        int n_clusters) {
    if (n_clusters < 2)
        throw InvalidParameter("n_clusters must be at least 2");
    const int m = static_cast<int>(subset.size());
    if (m < n_clusters)
        throw SubsetTooSmall(m, n_clusters);
    for (int i : subset)
        if (i < 0 || i >= c.entries.rows())
            throw InputError("subset index " + std::to_string(i) + " out of range");

    Eigen::MatrixXd dist(m, m);
    for (int a = 0; a < m; ++a) {
        dist(a, a) = 0.0;
        for (int b = a + 1; b < m; ++b) {
            const double d = std::sqrt(std::max(0.0, 2.0 * (1.0 - c.entries(subset[a], subset[b]))));
            dist(a, b) = dist(b, a) = d;
        }
    }

    std::vector<std::vector<int>> clusters(m);
    for (int a = 0; a < m; ++a)
        clusters[a] = {a};

    while (static_cast<int>(clusters.size()) > n_clusters) {
        int bi = 0, bj = 1;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < clusters.size(); ++i)
            for (std::size_t j = i + 1; j < clusters.size(); ++j)
                if (dist(static_cast<int>(i), static_cast<int>(j)) < best) {
                    best = dist(static_cast<int>(i), static_cast<int>(j));
                    bi = static_cast<int>(i);
                    bj = static_cast<int>(j);
                }
        const double ni = static_cast<double>(clusters[bi].size());
        const double nj = static_cast<double>(clusters[bj].size());
        for (std::size_t k = 0; k < clusters.size(); ++k) {
            if (static_cast<int>(k) == bi || static_cast<int>(k) == bj)
                continue;
            const double dk = (ni * dist(bi, static_cast<int>(k)) +
                               nj * dist(bj, static_cast<int>(k))) / (ni + nj);
            dist(bi, static_cast<int>(k)) = dist(static_cast<int>(k), bi) = dk;
        }
        clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(), clusters[bj].end());
        clusters.erase(clusters.begin() + bj);
        // drop row/col bj from the active distance block
        const int last = static_cast<int>(clusters.size());
        for (int k = bj; k < last; ++k) {
            dist.row(k) = dist.row(k + 1);
            dist.col(k) = dist.col(k + 1);
        }
    }

    std::vector<std::vector<int>> out;
    out.reserve(clusters.size());
    for (auto& cl : clusters) {
        std::vector<int> members;
        members.reserve(cl.size());
        for (int local : cl)
            members.push_back(subset[local]);
        std::sort(members.begin(), members.end());
        out.push_back(std::move(members));
    }
    const auto mean_intra = [&](const std::vector<int>& members) {
        if (members.size() < 2)
            return 1.0;
        double acc = 0.0;
        int cnt = 0;
        for (std::size_t a = 0; a < members.size(); ++a)
            for (std::size_t b = a + 1; b < members.size(); ++b) {
                acc += c.entries(members[a], members[b]);
                ++cnt;
            }
        return acc / cnt;
    };
    std::stable_sort(out.begin(), out.end(), [&](const auto& x, const auto& y) {
        const double mx = mean_intra(x), my = mean_intra(y);
        if (mx != my)
            return mx > my;
        return x.front() < y.front();
    });
    return out;
}

/// Coarse-grained block correlation model: B groups with degeneracies D_g,
/// intra-group correlations ρ_g, and constant inter-group correlations.
/// The diagonal of `inter` mirrors ρ_g for serialization only; expansion
/// never reads it.
struct BlockModel {
    std::vector<std::string> group_names;
    std::vector<int> degeneracies;
    std::vector<double> intra;
    Eigen::MatrixXd inter;

    int blocks() const { return static_cast<int>(degeneracies.size()); }
    int total_size() const {
        return std::accumulate(degeneracies.begin(), degeneracies.end(), 0);
    }
};

/// Top eigenvalue and (d−1)-fold degenerate level of a single equicorrelated
/// block: (1 + (d−1)ρ, 1 − ρ).
inline std::pair<double, double> block_spectrum_analytic(int d, double rho) {
    if (d < 2)
        throw InvalidParameter("block size must be at least 2");
    if (!(rho > -1.0 / (d - 1) && rho < 1.0))
        throw InvalidRho(rho, d);
    return {1.0 + (d - 1) * rho, 1.0 - rho};
}

namespace detail {

inline void validate_block_model(const BlockModel& m) {
    const int b = m.blocks();
    if (b == 0)
        throw InputError("block model has no groups");
    if (static_cast<int>(m.intra.size()) != b ||
        static_cast<int>(m.group_names.size()) != b)
        throw DimensionMismatch("block model field lengths disagree");
    if (m.inter.rows() != b || m.inter.cols() != b)
        throw DimensionMismatch("inter matrix must be B×B");
    for (int g = 0; g < b; ++g) {
        if (m.degeneracies[g] < 1)
            throw InputError("degeneracy must be positive");
        if (m.degeneracies[g] > 1 &&
            !(m.intra[g] > -1.0 / (m.degeneracies[g] - 1) && m.intra[g] < 1.0))
            throw InvalidRho(m.intra[g], m.degeneracies[g]);
        for (int h = g + 1; h < b; ++h)
            if (std::abs(m.inter(g, h) - m.inter(h, g)) > 1e-12)
                throw InputError("inter matrix must be symmetric");
    }
}

} // namespace detail

/// Expand a block model to its full N×N correlation matrix:
/// diagonal blocks (1−ρ_g)I + ρ_g·J, constant off-diagonal blocks.
inline CorrelationMatrix expand_block_model(const BlockModel& m) {
    detail::validate_block_model(m);
    const int n = m.total_size();
    const int b = m.blocks();
    std::vector<int> offset(b + 1, 0);
    for (int g = 0; g < b; ++g)
        offset[g + 1] = offset[g] + m.degeneracies[g];

    CorrelationMatrix c;
    c.entries.resize(n, n);
    for (int g = 0; g < b; ++g) {
        c.entries.block(offset[g], offset[g], m.degeneracies[g], m.degeneracies[g])
            .setConstant(m.intra[g]);
        for (int h = g + 1; h < b; ++h) {
            c.entries.block(offset[g], offset[h], m.degeneracies[g], m.degeneracies[h])
                .setConstant(m.inter(g, h));
            c.entries.block(offset[h], offset[g], m.degeneracies[h], m.degeneracies[g])
                .setConstant(m.inter(g, h));
        }
    }
    c.entries.diagonal().setOnes();
    c.assets.reserve(static_cast<std::size_t>(n));
    for (int g = 0; g < b; ++g)
        for (int i = 0; i < m.degeneracies[g]; ++i)
            c.assets.push_back(m.group_names[g] + "_" + std::to_string(i + 1));
    return c;
}

/// Group-mean correlations of C under partition p; the expanded model is
/// checked for positive definiteness before returning.
inline BlockModel estimate_block_model(const CorrelationMatrix& c, const GroupPartition& p) {
    const Eigen::Index n = c.entries.rows();
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    for (const auto& [name, members] : p.groups) {
        if (members.empty())
            throw EmptyGroup(name);
        for (int i : members) {
            if (i < 0 || i >= n)
                throw InputError("partition index " + std::to_string(i) + " out of range");
            if (seen[static_cast<std::size_t>(i)])
                throw InputError("partition groups overlap at index " + std::to_string(i));
            seen[static_cast<std::size_t>(i)] = true;
        }
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end())
        throw InputError("partition does not cover all indices");

    const int b = static_cast<int>(p.groups.size());
    BlockModel m;
    m.inter.resize(b, b);
    for (int g = 0; g < b; ++g) {
        const auto& [name, members] = p.groups[g];
        m.group_names.push_back(name);
        m.degeneracies.push_back(static_cast<int>(members.size()));
        double acc = 0.0;
        long cnt = 0;
        for (std::size_t a = 0; a < members.size(); ++a)
            for (std::size_t bb = a + 1; bb < members.size(); ++bb) {
                acc += c.entries(members[a], members[bb]);
                ++cnt;
            }
        m.intra.push_back(cnt > 0 ? acc / static_cast<double>(cnt) : 0.0);
    }
    for (int g = 0; g < b; ++g) {
        m.inter(g, g) = m.intra[g];
        for (int h = g + 1; h < b; ++h) {
            const auto& ga = p.groups[g].second;
            const auto& gb = p.groups[h].second;
            double acc = 0.0;
            for (int i : ga)
                for (int j : gb)
                    acc += c.entries(i, j);
            const double mean = acc / (static_cast<double>(ga.size()) * gb.size());
            m.inter(g, h) = m.inter(h, g) = mean;
        }
    }

    const CorrelationMatrix expanded = expand_block_model(m);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(expanded.entries,
                                                          Eigen::EigenvaluesOnly);
    const double min_ev = solver.eigenvalues().minCoeff();
    if (!(min_ev > 0.0))
        throw NotPositiveDefinite(min_ev);
    return m;
}

/// Index ranges per block of the expanded model, as a partition.
inline GroupPartition block_model_partition(const BlockModel& m) {
    GroupPartition p;
    int offset = 0;
    for (int g = 0; g < m.blocks(); ++g) {
        std::vector<int> members(static_cast<std::size_t>(m.degeneracies[g]));
        std::iota(members.begin(), members.end(), offset);
        offset += m.degeneracies[g];
        p.groups.emplace_back(m.group_names[g], std::move(members));
    }
    return p;
}

} // namespace rmt
