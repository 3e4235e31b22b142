#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ergomix {

// Small dense integer matrix (row-major). Everything here is exact:
// determinants via fraction-free elimination in 128-bit intermediates,
// ranks over Q, and the sublattice spanned by a set of integer vectors.
struct IntMatrix {
    int n = 0;
    std::vector<std::int64_t> a;  // n*n, row-major

    IntMatrix() = default;
    IntMatrix(int dim, std::vector<std::int64_t> entries);
    static IntMatrix identity(int dim);
    static IntMatrix from_rows(const std::vector<std::vector<std::int64_t>>& rows);

    std::int64_t operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }
    std::int64_t& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }

    std::vector<std::int64_t> apply(const std::vector<std::int64_t>& v) const;
    IntMatrix mul(const IntMatrix& other) const;
    bool operator==(const IntMatrix& other) const = default;

    std::vector<std::vector<std::int64_t>> rows() const;
};

// Exact determinant (Bareiss). Throws on overflow beyond 128-bit intermediates.
std::int64_t det(const IntMatrix& m);

inline bool is_unimodular(const IntMatrix& m) {
    std::int64_t d = det(m);
    return d == 1 || d == -1;
}

// Rank over Q of a list of integer vectors.
int rank_of(const std::vector<std::vector<std::int64_t>>& vectors, int dim);

// Structure of the subgroup of Z^d generated by a set of integer vectors.
struct LatticeSpan {
    int rank = 0;
    // Index of the generated sublattice in Z^d when rank == d; 1 means the
    // vectors generate all of Z^d. Unused when rank < d.
    std::int64_t index = 0;
};

LatticeSpan lattice_span(const std::vector<std::vector<std::int64_t>>& vectors, int dim);

}  // namespace ergomix
