#pragma once
#ifndef TNN_SYNTHETIC_HPP
#define TNN_SYNTHETIC_HPP

#include <tnn/core.hpp>
#include <tnn/csv.hpp>
#include <tnn/dataset.hpp>
#include <tnn/rng.hpp>

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

namespace tnn {

enum class SyntheticKind : std::uint8_t { UniformCube, GaussianMixture, LineGrid, Grid2d };

inline const char* to_string(SyntheticKind k) {
    switch (k) {
        case SyntheticKind::UniformCube: return "uniform-cube";
        case SyntheticKind::GaussianMixture: return "gaussian-mixture";
        case SyntheticKind::LineGrid: return "line-grid";
        case SyntheticKind::Grid2d: return "grid-2d";
    }
    return "?";
}

inline SyntheticKind parse_synthetic_kind(const std::string& s) {
    if (s == "uniform-cube") return SyntheticKind::UniformCube;
    if (s == "gaussian-mixture") return SyntheticKind::GaussianMixture;
    if (s == "line-grid") return SyntheticKind::LineGrid;
    if (s == "grid-2d") return SyntheticKind::Grid2d;
    throw ConfigError("unknown synthetic kind '" + s + "'");
}

/// Reproducible synthetic dense-vector datasets. uniform-cube draws from
/// [0,1)^dim; gaussian-mixture has 5 equal-weight unit-variance spherical
/// components with unit-spaced means along the first axis; line-grid is
/// {0,...,n-1} in one dimension; grid-2d is an integer side x side lattice.
inline Dataset generate_synthetic(SyntheticKind kind, std::size_t n, std::size_t dim,
                                  std::uint64_t seed) {
    if (n < 1) throw ConfigError("synthetic dataset needs n >= 1");
    if (dim < 1) throw ConfigError("synthetic dataset needs dim >= 1");
    SplitMix64 g(derive_stream(seed, 0xda7aU));
    std::vector<double> values;
    switch (kind) {
        case SyntheticKind::UniformCube:
            values.reserve(n * dim);
            for (std::size_t i = 0; i < n * dim; ++i) values.push_back(g.unit());
            return Dataset::dense_vectors(dim, std::move(values));
        case SyntheticKind::GaussianMixture: {
            values.reserve(n * dim);
            for (std::size_t i = 0; i < n; ++i) {
                const double mean0 = static_cast<double>(g.below(5));
                values.push_back(mean0 + g.gaussian());
                for (std::size_t j = 1; j < dim; ++j) values.push_back(g.gaussian());
            }
            return Dataset::dense_vectors(dim, std::move(values));
        }
        case SyntheticKind::LineGrid: {
            if (dim != 1) throw ConfigError("line-grid is one-dimensional; pass dim=1");
            values.reserve(n);
            for (std::size_t i = 0; i < n; ++i) values.push_back(static_cast<double>(i));
            return Dataset::dense_vectors(1, std::move(values));
        }
        case SyntheticKind::Grid2d: {
            if (dim != 2) throw ConfigError("grid-2d is two-dimensional; pass dim=2");
            const std::size_t side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
            if (side * side != n) throw ConfigError("grid-2d needs n to be a perfect square");
            values.reserve(n * 2);
            for (std::size_t r = 0; r < side; ++r)
                for (std::size_t c = 0; c < side; ++c) {
                    values.push_back(static_cast<double>(r));
                    values.push_back(static_cast<double>(c));
                }
            return Dataset::dense_vectors(2, std::move(values));
        }
    }
    throw ConfigError("corrupt synthetic kind");
}

/// Writes a dense-vector dataset as CSV with shortest round-trip doubles.
inline void write_vector_csv(const Dataset& ds, std::ostream& out) {
    if (ds.kind() != DatasetKind::DenseVector) throw DataError("only dense-vector datasets are written as CSV");
    for (PointId p = 0; p < ds.size(); ++p) {
        const double* row = ds.vector_at(p);
        for (std::size_t j = 0; j < ds.dim(); ++j) {
            if (j) out << ',';
            out << format_double(row[j]);
        }
        out << '\n';
    }
}

} // namespace tnn

#endif // TNN_SYNTHETIC_HPP
