#pragma once

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rmt/cleanrisk.hpp"
#include "rmt/errors.hpp"
#include "rmt/panel.hpp"
#include "rmt/spectral.hpp"
#include "rmt/structure.hpp"

namespace rmt {

// Fixed-precision serialization: JSON numbers at 12 significant digits,
// CSV at 10, so identical runs produce byte-identical files.
inline constexpr int json_sig_digits = 12;
inline constexpr int csv_sig_digits = 10;

inline std::string format_sig(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
    return buf;
}

/// nlohmann's dump() prints doubles at shortest round-trip precision; this
/// walker emits them at a fixed significant-digit count instead (object keys
/// stay sorted, matching nlohmann's std::map ordering).
inline void dump_json_fixed(const nlohmann::json& j, std::ostream& os, int indent = 0) {
    const std::string pad(static_cast<std::size_t>(indent), ' ');
    const std::string pad_in(static_cast<std::size_t>(indent) + 2, ' ');
    switch (j.type()) {
    case nlohmann::json::value_t::object: {
        if (j.empty()) {
            os << "{}";
            return;
        }
        os << "{\n";
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first)
                os << ",\n";
            first = false;
            os << pad_in << nlohmann::json(it.key()).dump() << ": ";
            dump_json_fixed(it.value(), os, indent + 2);
        }
        os << "\n" << pad << "}";
        return;
    }
    case nlohmann::json::value_t::array: {
        if (j.empty()) {
            os << "[]";
            return;
        }
        os << "[\n";
        bool first = true;
        for (const auto& el : j) {
            if (!first)
                os << ",\n";
            first = false;
            os << pad_in;
            dump_json_fixed(el, os, indent + 2);
        }
        os << "\n" << pad << "]";
        return;
    }
    case nlohmann::json::value_t::number_float:
        os << format_sig(j.get<double>(), json_sig_digits);
        return;
    default:
        os << j.dump();
        return;
    }
}

inline std::string dump_json_fixed(const nlohmann::json& j) {
    std::ostringstream os;
    dump_json_fixed(j, os);
    os << "\n";
    return os.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw InputError("cannot open " + path + " for writing");
    f << content;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw InputError("cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

/// FNV-1a 64-bit digest, used for input provenance in reports.
inline std::string fnv1a64_hex(const std::string& bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline double parse_double(const std::string& s, long line_no) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos])))
            ++pos;
        if (pos != s.size())
            throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw CsvError("cannot parse number '" + s + "'", line_no);
    }
}

} // namespace detail

/// Wide panel CSV: header `time,ASSET1,...`, one timestamp + N values per row.
inline ReturnPanel read_panel_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f)
        throw InputError("cannot open " + path);
    std::string line;
    if (!std::getline(f, line))
        throw CsvError("empty file", 1);
    const auto header = detail::split_csv_line(line);
    if (header.size() < 3)
        throw CsvError("need a time column plus at least 2 assets", 1);
    if (header[0] != "time")
        throw CsvError("first header column must be 'time', got '" + header[0] + "'", 1);

    ReturnPanel p;
    p.assets.assign(header.begin() + 1, header.end());
    std::vector<std::vector<double>> rows;
    long line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty() || line == "\r")
            continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size())
            throw CsvError("expected " + std::to_string(header.size()) + " cells, got " +
                               std::to_string(cells.size()),
                           line_no);
        p.timestamps.push_back(cells[0]);
        std::vector<double> row;
        row.reserve(p.assets.size());
        for (std::size_t i = 1; i < cells.size(); ++i)
            row.push_back(detail::parse_double(cells[i], line_no));
        rows.push_back(std::move(row));
    }
    if (rows.size() < 2)
        throw CsvError("need at least 2 data rows", line_no);
    p.values.resize(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(p.assets.size()));
    for (std::size_t t = 0; t < rows.size(); ++t)
        for (std::size_t i = 0; i < rows[t].size(); ++i)
            p.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)) = rows[t][i];
    if (!p.values.allFinite())
        throw InputError("panel contains non-finite values");
    return p;
}

inline std::string panel_csv(const ReturnPanel& p) {
    std::ostringstream os;
    os << "time";
    for (const auto& a : p.assets)
        os << "," << a;
    os << "\n";
    for (Eigen::Index t = 0; t < p.rows(); ++t) {
        os << p.timestamps[static_cast<std::size_t>(t)];
        for (Eigen::Index i = 0; i < p.cols(); ++i)
            os << "," << format_sig(p.values(t, i), csv_sig_digits);
        os << "\n";
    }
    return os.str();
}

inline void write_panel_csv(const std::string& path, const ReturnPanel& p) {
    write_text_file(path, panel_csv(p));
}

/// Square matrix CSV with asset-labelled header and row labels.
inline std::string matrix_csv(const std::vector<std::string>& labels,
                              const Eigen::MatrixXd& m) {
    std::ostringstream os;
    os << "asset";
    for (const auto& a : labels)
        os << "," << a;
    os << "\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        os << labels[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            os << "," << format_sig(m(i, j), csv_sig_digits);
        os << "\n";
    }
    return os.str();
}

inline CorrelationMatrix read_matrix_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f)
        throw InputError("cannot open " + path);
    std::string line;
    if (!std::getline(f, line))
        throw CsvError("empty file", 1);
    auto header = detail::split_csv_line(line);
    if (header.size() < 2)
        throw CsvError("matrix header too short", 1);
    CorrelationMatrix c;
    c.assets.assign(header.begin() + 1, header.end());
    const auto n = static_cast<Eigen::Index>(c.assets.size());
    c.entries.resize(n, n);
    long line_no = 1;
    Eigen::Index i = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty() || line == "\r")
            continue;
        if (i >= n)
            throw CsvError("more rows than header columns", line_no);
        const auto cells = detail::split_csv_line(line);
        if (static_cast<Eigen::Index>(cells.size()) != n + 1)
            throw CsvError("bad cell count", line_no);
        for (Eigen::Index j = 0; j < n; ++j)
            c.entries(i, j) = detail::parse_double(cells[static_cast<std::size_t>(j) + 1], line_no);
        ++i;
    }
    if (i != n)
        throw CsvError("expected " + std::to_string(n) + " rows, got " + std::to_string(i),
                       line_no);
    return c;
}

inline std::string eigenvalues_csv(const Eigen::VectorXd& eigenvalues) {
    std::ostringstream os;
    os << "k,lambda\n";
    for (Eigen::Index k = 0; k < eigenvalues.size(); ++k)
        os << (k + 1) << "," << format_sig(eigenvalues[k], csv_sig_digits) << "\n";
    return os.str();
}

inline std::string participation_csv(const EigenSystem& es) {
    std::ostringstream os;
    os << "k,lambda_k,P_k\n";
    for (Eigen::Index k = 0; k < es.size(); ++k)
        os << (k + 1) << "," << format_sig(es.eigenvalues[k], csv_sig_digits) << ","
           << format_sig(participation(es.eigenvectors.col(k)), csv_sig_digits) << "\n";
    return os.str();
}

inline std::string relative_ipr_csv(const EigenSystem& es, const GroupPartition& p) {
    std::ostringstream os;
    os << "k,lambda_k,group,R\n";
    for (Eigen::Index k = 0; k < es.size(); ++k)
        for (const auto& [name, members] : p.groups)
            os << (k + 1) << "," << format_sig(es.eigenvalues[k], csv_sig_digits) << "," << name
               << "," << format_sig(relative_ipr(es.eigenvectors.col(k), members), csv_sig_digits)
               << "\n";
    return os.str();
}

inline std::string partition_csv(const GroupPartition& p,
                                 const std::vector<std::string>& assets) {
    std::ostringstream os;
    os << "asset_id,group_name\n";
    for (const auto& [name, members] : p.groups)
        for (int i : members)
            os << assets[static_cast<std::size_t>(i)] << "," << name << "\n";
    return os.str();
}

inline GroupPartition read_partition_csv(const std::string& path,
                                         const std::vector<std::string>& assets) {
    std::ifstream f(path);
    if (!f)
        throw InputError("cannot open " + path);
    std::map<std::string, int> index_of;
    for (std::size_t i = 0; i < assets.size(); ++i)
        index_of[assets[i]] = static_cast<int>(i);
    std::string line;
    if (!std::getline(f, line))
        throw CsvError("empty file", 1);
    if (detail::split_csv_line(line) != std::vector<std::string>{"asset_id", "group_name"})
        throw CsvError("expected header 'asset_id,group_name'", 1);
    GroupPartition p;
    std::map<std::string, std::size_t> slot;
    long line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty() || line == "\r")
            continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != 2)
            throw CsvError("expected 'asset_id,group_name'", line_no);
        const auto it = index_of.find(cells[0]);
        if (it == index_of.end())
            throw CsvError("unknown asset '" + cells[0] + "'", line_no);
        if (!slot.count(cells[1])) {
            slot[cells[1]] = p.groups.size();
            p.groups.emplace_back(cells[1], std::vector<int>{});
        }
        p.groups[slot[cells[1]]].second.push_back(it->second);
    }
    return p;
}

/// BlockModel JSON: { "groups": [{ "name", "degeneracy", "rho" }...],
///                    "inter": [[...]] }  (inter diagonal mirrors rho).
inline nlohmann::json block_model_to_json(const BlockModel& m) {
    nlohmann::json groups = nlohmann::json::array();
    for (int g = 0; g < m.blocks(); ++g)
        groups.push_back({{"name", m.group_names[g]},
                          {"degeneracy", m.degeneracies[g]},
                          {"rho", m.intra[g]}});
    nlohmann::json inter = nlohmann::json::array();
    for (int g = 0; g < m.blocks(); ++g) {
        nlohmann::json row = nlohmann::json::array();
        for (int h = 0; h < m.blocks(); ++h)
            row.push_back(g == h ? m.intra[g] : m.inter(g, h));
        inter.push_back(row);
    }
    return {{"groups", groups}, {"inter", inter}};
}

inline BlockModel block_model_from_json(const nlohmann::json& j) {
    if (!j.contains("groups") || !j.contains("inter"))
        throw InputError("block model JSON needs 'groups' and 'inter'");
    BlockModel m;
    for (const auto& g : j.at("groups")) {
        m.group_names.push_back(g.at("name").get<std::string>());
        m.degeneracies.push_back(g.at("degeneracy").get<int>());
        m.intra.push_back(g.at("rho").get<double>());
    }
    const int b = m.blocks();
    const auto& inter = j.at("inter");
    if (static_cast<int>(inter.size()) != b)
        throw InputError("inter matrix must be B×B");
    m.inter.resize(b, b);
    for (int g = 0; g < b; ++g) {
        if (static_cast<int>(inter[g].size()) != b)
            throw InputError("inter matrix must be B×B");
        for (int h = 0; h < b; ++h)
            m.inter(g, h) = inter[g][h].get<double>();
    }
    for (int g = 0; g < b; ++g)
        m.inter(g, g) = m.intra[g];
    detail::validate_block_model(m);
    return m;
}

inline BlockModel read_block_model(const std::string& path) {
    try {
        return block_model_from_json(nlohmann::json::parse(read_text_file(path)));
    } catch (const nlohmann::json::exception& e) {
        throw InputError("cannot parse " + path + ": " + e.what());
    }
}

inline nlohmann::json mp_fit_to_json(const MpFit& fit) {
    return {{"sigma_eff", fit.sigma_eff},     {"q_eff", fit.q_eff},
            {"lambda_minus", fit.lambda_minus}, {"lambda_plus", fit.lambda_plus},
            {"n_signal", fit.n_signal},         {"objective", fit.objective}};
}

inline nlohmann::json backtest_report_to_json(const RiskBiasReport& r) {
    nlohmann::json subbands = nlohmann::json::array();
    nlohmann::json delta_r = nlohmann::json::object();
    nlohmann::json err = nlohmann::json::object();
    for (const auto& sb : r.subbands) {
        subbands.push_back({{"name", sb.name},
                            {"size", static_cast<int>(sb.eigen_indices.size())}});
        delta_r[sb.name] = sb.delta_r;
        err[sb.name] = sb.stderr;
    }
    return {{"subbands", subbands},
            {"delta_r", delta_r},
            {"stderr", err},
            {"delta_r_all", r.delta_r_all},
            {"stderr_all", r.stderr_all},
            {"trials", r.trials},
            {"t_in", r.t_in},
            {"t_out", r.t_out},
            {"seed", r.seed},
            {"k_signal", r.k_signal},
            {"flat_value", r.flat_mode == FlatMode::trace ? "trace" : "sigma2"}};
}

} // namespace rmt
