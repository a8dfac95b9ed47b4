#ifndef EAEE_PIPELINE_GRAPH_IO_HPP
#define EAEE_PIPELINE_GRAPH_IO_HPP

#include "eaee/model.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace eaee::pipeline {

struct LabeledGraph {
    ObservedMatrix adjacency;
    std::vector<int> labels; // empty when no label file was found

    bool has_labels() const { return !labels.empty(); }
    std::size_t class_count() const { return std::set<int>(labels.begin(), labels.end()).size(); }
};

namespace detail {

inline std::vector<std::string> tokens(const std::string& line) {
    std::string cleaned = line;
    for (char& ch : cleaned) {
        if (ch == ',' || ch == '\t' || ch == ';') {
            ch = ' ';
        }
    }
    std::istringstream ss(cleaned);
    std::vector<std::string> out;
    for (std::string tok; ss >> tok;) {
        out.push_back(tok);
    }
    return out;
}

inline bool is_comment(const std::string& line) {
    const auto pos = line.find_first_not_of(" \t\r");
    return pos == std::string::npos || line[pos] == '%' || line[pos] == '#';
}

inline std::optional<long long> parse_int(const std::string& tok) {
    long long value = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
        return std::nullopt;
    }
    return value;
}

inline bool is_number(const std::string& tok) {
    try {
        std::size_t used = 0;
        std::stod(tok, &used);
        return used == tok.size();
    } catch (const std::exception&) {
        return false;
    }
}

inline std::runtime_error parse_error(const std::string& path, std::size_t line_no, const std::string& what) {
    return std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
}

} // namespace detail

/// Label file next to an edge list: "<stem>.node_labels" or "<stem>.labels".
inline std::optional<std::filesystem::path> sibling_label_file(const std::filesystem::path& edges) {
    for (const char* ext : {".node_labels", ".labels"}) {
        std::filesystem::path candidate = edges;
        candidate.replace_extension(ext);
        if (candidate != edges && std::filesystem::exists(candidate)) {
            return candidate;
        }
    }
    return std::nullopt;
}

/*
 * Vertex labels: either one integer label per line in vertex order, or
 * "vertex label" pairs using the edge list's index base.
 */
inline std::vector<int> load_labels(const std::string& path, Index n, int index_base) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open label file '" + path + "'");
    }
    std::vector<std::optional<int>> labels(static_cast<std::size_t>(n));
    std::size_t next = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::is_comment(line)) {
            continue;
        }
        const auto tok = detail::tokens(line);
        if (tok.size() == 1) {
            const auto label = detail::parse_int(tok[0]);
            if (!label) {
                throw detail::parse_error(path, line_no, "malformed label '" + line + "'");
            }
            if (next >= labels.size()) {
                throw detail::parse_error(path, line_no, "more labels than vertices");
            }
            labels[next++] = static_cast<int>(*label);
        } else if (tok.size() == 2) {
            const auto vertex = detail::parse_int(tok[0]);
            const auto label = detail::parse_int(tok[1]);
            if (!vertex || !label) {
                throw detail::parse_error(path, line_no, "malformed label line '" + line + "'");
            }
            const long long idx = *vertex - index_base;
            if (idx < 0 || idx >= n) {
                throw detail::parse_error(path, line_no, "vertex " + tok[0] + " out of range");
            }
            labels[static_cast<std::size_t>(idx)] = static_cast<int>(*label);
        } else {
            throw detail::parse_error(path, line_no, "malformed label line '" + line + "'");
        }
    }
    std::vector<int> out;
    out.reserve(labels.size());
    for (std::size_t v = 0; v < labels.size(); ++v) {
        if (!labels[v]) {
            throw std::runtime_error(path + ": vertex " + std::to_string(v + static_cast<std::size_t>(index_base)) +
                                     " has no label");
        }
        out.push_back(*labels[v]);
    }
    return out;
}

/*
 * Undirected edge list, one "u v" pair per line (whitespace or comma
 * separated; an optional third numeric column is ignored). Lines starting
 * with '%' or '#' are comments. Duplicate edges are idempotent; "u u" sets a
 * diagonal entry. n_hint = 0 infers n from the largest vertex index.
 */
inline LabeledGraph load_edge_list(const std::string& path, Index n_hint = 0, int index_base = 1,
                                   const std::optional<std::string>& label_path = std::nullopt) {
    require(index_base == 0 || index_base == 1, "load_edge_list: index_base must be 0 or 1");
    require(n_hint >= 0, "load_edge_list: n_hint must be non-negative");
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open edge list '" + path + "'");
    }
    std::vector<std::pair<Index, Index>> edges;
    Index max_vertex = -1;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::is_comment(line)) {
            continue;
        }
        const auto tok = detail::tokens(line);
        if (tok.size() < 2 || tok.size() > 3 || (tok.size() == 3 && !detail::is_number(tok[2]))) {
            throw detail::parse_error(path, line_no, "expected 'u v', got '" + line + "'");
        }
        const auto u = detail::parse_int(tok[0]);
        const auto v = detail::parse_int(tok[1]);
        if (!u || !v) {
            throw detail::parse_error(path, line_no, "vertex indices must be integers: '" + line + "'");
        }
        const Index iu = static_cast<Index>(*u - index_base);
        const Index iv = static_cast<Index>(*v - index_base);
        if (iu < 0 || iv < 0 || (n_hint > 0 && (iu >= n_hint || iv >= n_hint))) {
            throw detail::parse_error(path, line_no, "vertex index out of range in '" + line + "'");
        }
        max_vertex = std::max({max_vertex, iu, iv});
        edges.emplace_back(iu, iv);
    }
    const Index n = n_hint > 0 ? n_hint : max_vertex + 1;
    require(n >= 1, "load_edge_list: no vertices in '" + path + "'");

    LabeledGraph graph;
    graph.adjacency.a = Matrix::Zero(n, n);
    for (const auto& [u, v] : edges) {
        graph.adjacency.a(u, v) = 1.0;
        graph.adjacency.a(v, u) = 1.0;
    }
    if (label_path) {
        graph.labels = load_labels(*label_path, n, index_base);
    } else if (auto sibling = sibling_label_file(path)) {
        graph.labels = load_labels(sibling->string(), n, index_base);
    }
    return graph;
}

/// Writes "u v" lines (upper triangle, diagonal included) with the given index base.
inline void save_edge_list(const Matrix& adjacency, const std::string& path, int index_base = 1) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open '" + path + "' for writing");
    }
    for (Index i = 0; i < adjacency.rows(); ++i) {
        for (Index j = i; j < adjacency.cols(); ++j) {
            if (adjacency(i, j) != 0.0) {
                out << i + index_base << ' ' << j + index_base << '\n';
            }
        }
    }
}

inline void save_labels(const std::vector<int>& labels, const std::string& path, int index_base = 1) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open '" + path + "' for writing");
    }
    for (std::size_t v = 0; v < labels.size(); ++v) {
        out << v + static_cast<std::size_t>(index_base) << ' ' << labels[v] << '\n';
    }
}

} // namespace eaee::pipeline

#endif
