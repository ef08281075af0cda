#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace streamrec {

// Dense row-major rows x dim matrix of doubles.
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    EmbeddingTable(std::size_t rows, std::size_t dim) : rows_(rows), dim_(dim), values_(rows * dim, 0.0) {
        if (dim == 0) throw std::invalid_argument("embedding dim must be positive");
    }
    EmbeddingTable(std::size_t rows, std::size_t dim, std::vector<double> values)
        : rows_(rows), dim_(dim), values_(std::move(values)) {
        if (dim == 0) throw std::invalid_argument("embedding dim must be positive");
        if (values_.size() != rows * dim) throw std::invalid_argument("embedding value count mismatch");
    }

    std::size_t rows() const { return rows_; }
    std::size_t dim() const { return dim_; }
    bool empty() const { return rows_ == 0; }

    std::span<double> row(std::size_t r) { return {values_.data() + r * dim_, dim_}; }
    std::span<const double> row(std::size_t r) const { return {values_.data() + r * dim_, dim_}; }

    double& operator()(std::size_t r, std::size_t c) { return values_[r * dim_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return values_[r * dim_ + c]; }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    void fill(double v) { std::fill(values_.begin(), values_.end(), v); }

    // Rows [first, first + count) as a new table.
    EmbeddingTable slice(std::size_t first, std::size_t count) const {
        EmbeddingTable out(count, dim_);
        std::copy(values_.begin() + static_cast<std::ptrdiff_t>(first * dim_),
                  values_.begin() + static_cast<std::ptrdiff_t>((first + count) * dim_),
                  out.values_.begin());
        return out;
    }

    bool all_finite() const;

    friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t dim_ = 0;
    std::vector<double> values_;
};

// Per-node vectors ready for scoring: score(u, w) = dot(user.row(u), item.row(w)).
struct ScoringTables {
    EmbeddingTable user;
    EmbeddingTable item;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace streamrec
