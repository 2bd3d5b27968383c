#pragma once
#ifndef TNN_DATASET_HPP
#define TNN_DATASET_HPP

#include <tnn/core.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace tnn {

enum class DatasetKind : std::uint8_t { DenseVector, CategoricalTuple, GraphNode };

inline const char* to_string(DatasetKind k) {
    switch (k) {
        case DatasetKind::DenseVector: return "dense-vector";
        case DatasetKind::CategoricalTuple: return "categorical-tuple";
        case DatasetKind::GraphNode: return "graph-node";
    }
    return "?";
}

/// Undirected weighted graph in CSR form over compact node indices.
/// Node "names" are the (possibly sparse) non-negative ids from the input file.
class WeightedGraph {
public:
    WeightedGraph() = default;

    /// Builds from an edge list given as (u, v, w) triples over node names.
    /// Weights must be strictly positive (negatives are taken as absolute
    /// values at load time; exact zeros are rejected upstream).
    WeightedGraph(const std::vector<std::uint64_t>& us, const std::vector<std::uint64_t>& vs,
                  const std::vector<double>& ws) {
        for (std::size_t i = 0; i < us.size(); ++i) {
            intern(us[i]);
            intern(vs[i]);
        }
        const std::size_t v = node_names_.size();
        std::vector<std::size_t> degree(v, 0);
        for (std::size_t i = 0; i < us.size(); ++i) {
            if (us[i] == vs[i]) continue; // self loops carry no metric information
            ++degree[name_to_node_.at(us[i])];
            ++degree[name_to_node_.at(vs[i])];
        }
        offsets_.assign(v + 1, 0);
        for (std::size_t i = 0; i < v; ++i) offsets_[i + 1] = offsets_[i] + degree[i];
        targets_.resize(offsets_[v]);
        weights_.resize(offsets_[v]);
        std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
        for (std::size_t i = 0; i < us.size(); ++i) {
            if (us[i] == vs[i]) continue;
            const std::uint32_t a = name_to_node_.at(us[i]);
            const std::uint32_t b = name_to_node_.at(vs[i]);
            targets_[cursor[a]] = b;
            weights_[cursor[a]++] = ws[i];
            targets_[cursor[b]] = a;
            weights_[cursor[b]++] = ws[i];
        }
    }

    std::size_t num_nodes() const { return node_names_.size(); }

    std::uint64_t node_name(std::uint32_t node) const { return node_names_[node]; }

    bool has_node_name(std::uint64_t name) const { return name_to_node_.count(name) != 0; }

    std::uint32_t node_of_name(std::uint64_t name) const {
        auto it = name_to_node_.find(name);
        if (it == name_to_node_.end())
            throw DataError("unknown graph node " + std::to_string(name));
        return it->second;
    }

    std::size_t degree_begin(std::uint32_t node) const { return offsets_[node]; }
    std::size_t degree_end(std::uint32_t node) const { return offsets_[node + 1]; }
    std::uint32_t edge_target(std::size_t e) const { return targets_[e]; }
    double edge_weight(std::size_t e) const { return weights_[e]; }

    /// Compact node indices of the largest connected component, ascending by
    /// node name. Ties on size break toward the component holding the
    /// smallest name, so extraction is deterministic.
    std::vector<std::uint32_t> largest_component() const {
        const std::size_t v = num_nodes();
        std::vector<std::uint32_t> comp(v, static_cast<std::uint32_t>(-1));
        std::uint32_t num_comps = 0;
        std::vector<std::uint32_t> stack;
        std::vector<std::uint32_t> order(v);
        for (std::size_t i = 0; i < v; ++i) order[i] = static_cast<std::uint32_t>(i);
        std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
            return node_names_[a] < node_names_[b];
        });
        std::vector<std::size_t> comp_size;
        for (std::uint32_t start : order) {
            if (comp[start] != static_cast<std::uint32_t>(-1)) continue;
            const std::uint32_t c = num_comps++;
            comp_size.push_back(0);
            stack.push_back(start);
            comp[start] = c;
            while (!stack.empty()) {
                const std::uint32_t u = stack.back();
                stack.pop_back();
                ++comp_size[c];
                for (std::size_t e = degree_begin(u); e < degree_end(u); ++e) {
                    const std::uint32_t w = edge_target(e);
                    if (comp[w] == static_cast<std::uint32_t>(-1)) {
                        comp[w] = c;
                        stack.push_back(w);
                    }
                }
            }
        }
        std::uint32_t best = 0;
        for (std::uint32_t c = 1; c < num_comps; ++c)
            if (comp_size[c] > comp_size[best]) best = c; // first-seen wins ties (smallest name)
        std::vector<std::uint32_t> nodes;
        nodes.reserve(comp_size.empty() ? 0 : comp_size[best]);
        for (std::uint32_t u : order)
            if (comp[u] == best) nodes.push_back(u);
        return nodes;
    }

private:
    void intern(std::uint64_t name) {
        if (name_to_node_.emplace(name, static_cast<std::uint32_t>(node_names_.size())).second)
            node_names_.push_back(name);
    }

    std::vector<std::size_t> offsets_;
    std::vector<std::uint32_t> targets_;
    std::vector<double> weights_;
    std::vector<std::uint64_t> node_names_;
    std::unordered_map<std::uint64_t, std::uint32_t> name_to_node_;
};

/// An indexed finite point set of one of three kinds. Immutable after load.
class Dataset {
public:
    static Dataset dense_vectors(std::size_t dim, std::vector<double> values) {
        if (dim == 0) throw DataError("vector dataset needs dim >= 1");
        if (values.empty() || values.size() % dim != 0)
            throw DataError("vector payload size is not a multiple of dim");
        Dataset d;
        d.kind_ = DatasetKind::DenseVector;
        d.arity_ = dim;
        d.values_ = std::move(values);
        d.n_ = d.values_.size() / dim;
        return d;
    }

    static Dataset categorical(std::size_t arity, std::vector<std::string> tokens) {
        if (arity == 0) throw DataError("categorical dataset needs arity >= 1");
        if (tokens.empty() || tokens.size() % arity != 0)
            throw DataError("categorical payload size is not a multiple of arity");
        Dataset d;
        d.kind_ = DatasetKind::CategoricalTuple;
        d.arity_ = arity;
        d.tokens_ = std::move(tokens);
        d.n_ = d.tokens_.size() / arity;
        return d;
    }

    static Dataset graph_points(std::shared_ptr<const WeightedGraph> graph,
                                std::vector<std::uint32_t> nodes) {
        if (nodes.empty()) throw DataError("graph dataset has no points");
        Dataset d;
        d.kind_ = DatasetKind::GraphNode;
        d.graph_ = std::move(graph);
        d.nodes_ = std::move(nodes);
        d.n_ = d.nodes_.size();
        return d;
    }

    DatasetKind kind() const { return kind_; }
    std::size_t size() const { return n_; }
    std::size_t dim() const { return arity_; }
    std::size_t arity() const { return arity_; }

    const double* vector_at(PointId p) const { return values_.data() + std::size_t(p) * arity_; }
    const std::string* tokens_at(PointId p) const { return tokens_.data() + std::size_t(p) * arity_; }
    std::uint32_t node_at(PointId p) const { return nodes_[p]; }
    const WeightedGraph& graph() const { return *graph_; }
    std::shared_ptr<const WeightedGraph> graph_ptr() const { return graph_; }

    /// New dataset holding the given points (dense re-indexing in the given order).
    Dataset subset(const std::vector<PointId>& ids) const {
        switch (kind_) {
            case DatasetKind::DenseVector: {
                std::vector<double> vals;
                vals.reserve(ids.size() * arity_);
                for (PointId p : ids)
                    vals.insert(vals.end(), vector_at(p), vector_at(p) + arity_);
                return dense_vectors(arity_, std::move(vals));
            }
            case DatasetKind::CategoricalTuple: {
                std::vector<std::string> toks;
                toks.reserve(ids.size() * arity_);
                for (PointId p : ids)
                    toks.insert(toks.end(), tokens_at(p), tokens_at(p) + arity_);
                return categorical(arity_, std::move(toks));
            }
            case DatasetKind::GraphNode: {
                std::vector<std::uint32_t> nodes;
                nodes.reserve(ids.size());
                for (PointId p : ids) nodes.push_back(nodes_[p]);
                return graph_points(graph_, std::move(nodes));
            }
        }
        throw DataError("corrupt dataset kind");
    }

    /// FNV-1a over kind and payload; ties serialized trees to their dataset.
    std::uint64_t fingerprint() const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        auto mix = [&h](const void* data, std::size_t len) {
            const unsigned char* b = static_cast<const unsigned char*>(data);
            for (std::size_t i = 0; i < len; ++i) {
                h ^= b[i];
                h *= 0x100000001b3ULL;
            }
        };
        const std::uint8_t kind_byte = static_cast<std::uint8_t>(kind_);
        mix(&kind_byte, 1);
        const std::uint64_t meta[2] = {n_, arity_};
        mix(meta, sizeof(meta));
        switch (kind_) {
            case DatasetKind::DenseVector:
                mix(values_.data(), values_.size() * sizeof(double));
                break;
            case DatasetKind::CategoricalTuple:
                for (const std::string& t : tokens_) {
                    mix(t.data(), t.size());
                    const char sep = '\0';
                    mix(&sep, 1);
                }
                break;
            case DatasetKind::GraphNode:
                for (std::uint32_t node : nodes_) {
                    const std::uint64_t name = graph_->node_name(node);
                    mix(&name, sizeof(name));
                }
                break;
        }
        return h;
    }

private:
    DatasetKind kind_ = DatasetKind::DenseVector;
    std::size_t n_ = 0;
    std::size_t arity_ = 0;
    std::vector<double> values_;
    std::vector<std::string> tokens_;
    std::shared_ptr<const WeightedGraph> graph_;
    std::vector<std::uint32_t> nodes_;
};

/// A query: either a dataset member (leave-one-out mode) or an out-of-sample
/// payload of the dataset's kind. Graph queries name an existing graph node.
class Query {
public:
    static Query member(PointId id) { return Query(id); }
    static Query vector(std::vector<double> v) { return Query(std::move(v)); }
    static Query categorical(std::vector<std::string> t) { return Query(std::move(t)); }
    static Query graph_node(std::uint64_t name) { return Query(name); }

    /// Copies the payload of a dataset member into an out-of-sample query.
    static Query payload_of(const Dataset& ds, PointId p) {
        switch (ds.kind()) {
            case DatasetKind::DenseVector:
                return vector(std::vector<double>(ds.vector_at(p), ds.vector_at(p) + ds.dim()));
            case DatasetKind::CategoricalTuple:
                return categorical(
                    std::vector<std::string>(ds.tokens_at(p), ds.tokens_at(p) + ds.arity()));
            case DatasetKind::GraphNode:
                return graph_node(ds.graph().node_name(ds.node_at(p)));
        }
        throw DataError("corrupt dataset kind");
    }

    bool is_member() const { return std::holds_alternative<PointId>(payload_); }
    PointId member_id() const { return std::get<PointId>(payload_); }

    const std::vector<double>* vector_payload() const {
        return std::get_if<std::vector<double>>(&payload_);
    }
    const std::vector<std::string>* categorical_payload() const {
        return std::get_if<std::vector<std::string>>(&payload_);
    }
    const std::uint64_t* graph_payload() const { return std::get_if<std::uint64_t>(&payload_); }

private:
    explicit Query(PointId id) : payload_(id) {}
    explicit Query(std::vector<double> v) : payload_(std::move(v)) {}
    explicit Query(std::vector<std::string> t) : payload_(std::move(t)) {}
    explicit Query(std::uint64_t name) : payload_(name) {}

    std::variant<PointId, std::vector<double>, std::vector<std::string>, std::uint64_t> payload_;
};

namespace detail {

inline std::vector<std::string_view> split_csv_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline double parse_double_field(std::string_view field, std::size_t line_no) {
    const std::string_view t = trim(field);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || ptr != t.data() + t.size())
        throw DataError("line " + std::to_string(line_no) + ": malformed numeric field '" +
                        std::string(t) + "'");
    return value;
}

} // namespace detail

/// Loads a dense-vector CSV: one point per row, all numeric, no header by
/// default (`skip_header` drops one line).
inline Dataset load_vector_csv(const std::string& path, bool skip_header = false) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file " + path);
    std::vector<double> values;
    std::size_t dim = 0;
    std::string line;
    std::size_t line_no = 0;
    bool pending_header = skip_header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (detail::trim(line).empty()) continue;
        if (pending_header) {
            pending_header = false;
            continue;
        }
        const auto fields = detail::split_csv_fields(line);
        if (dim == 0)
            dim = fields.size();
        else if (fields.size() != dim)
            throw DataError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(dim) + " fields, got " + std::to_string(fields.size()));
        for (const auto f : fields) values.push_back(detail::parse_double_field(f, line_no));
    }
    if (values.empty()) throw DataError("dataset file " + path + " holds no points");
    return Dataset::dense_vectors(dim, std::move(values));
}

/// Loads a categorical CSV of tokens; equality is string equality.
inline Dataset load_categorical_csv(const std::string& path, bool skip_header = false) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file " + path);
    std::vector<std::string> tokens;
    std::size_t arity = 0;
    std::string line;
    std::size_t line_no = 0;
    bool pending_header = skip_header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (detail::trim(line).empty()) continue;
        if (pending_header) {
            pending_header = false;
            continue;
        }
        const auto fields = detail::split_csv_fields(line);
        if (arity == 0)
            arity = fields.size();
        else if (fields.size() != arity)
            throw DataError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(arity) + " fields, got " + std::to_string(fields.size()));
        for (const auto f : fields) tokens.emplace_back(detail::trim(f));
    }
    if (tokens.empty()) throw DataError("dataset file " + path + " holds no points");
    return Dataset::categorical(arity, std::move(tokens));
}

/// Loads a whitespace edge list `u v w` (w optional, default 1). Negative
/// weights are replaced by their absolute values; zero weights are rejected
/// because they would break the metric. The dataset holds the largest
/// connected component.
inline Dataset load_graph_edges(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open graph file " + path);
    std::vector<std::uint64_t> us, vs;
    std::vector<double> ws;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string_view trimmed = detail::trim(line);
        if (trimmed.empty() || trimmed.front() == '#') continue;
        std::istringstream ls{std::string(trimmed)};
        long long u = -1, v = -1;
        double w = 1.0;
        if (!(ls >> u >> v))
            throw DataError("line " + std::to_string(line_no) + ": malformed edge '" + line + "'");
        if (!(ls >> w)) w = 1.0;
        std::string rest;
        if (ls >> rest)
            throw DataError("line " + std::to_string(line_no) + ": trailing tokens in edge list");
        if (u < 0 || v < 0)
            throw DataError("line " + std::to_string(line_no) + ": node ids must be non-negative");
        w = std::abs(w);
        if (w == 0.0)
            throw DataError("line " + std::to_string(line_no) +
                            ": zero edge weight breaks the shortest-path metric");
        us.push_back(static_cast<std::uint64_t>(u));
        vs.push_back(static_cast<std::uint64_t>(v));
        ws.push_back(w);
    }
    if (us.empty()) throw DataError("graph file " + path + " holds no edges");
    auto graph = std::make_shared<const WeightedGraph>(us, vs, ws);
    std::vector<std::uint32_t> lcc = graph->largest_component();
    return Dataset::graph_points(std::move(graph), std::move(lcc));
}

} // namespace tnn

#endif // TNN_DATASET_HPP
