#include "ergomix/intlinalg.hpp"

#include <cstdlib>
#include <stdexcept>

namespace ergomix {

namespace {

using i128 = __int128;

i128 iabs(i128 x) { return x < 0 ? -x : x; }

constexpr i128 kOverflowGuard = (i128(1) << 100);

void check_magnitude(i128 x) {
    if (iabs(x) > kOverflowGuard)
        throw std::overflow_error("integer elimination: intermediate value too large");
}

}  // namespace

IntMatrix::IntMatrix(int dim, std::vector<std::int64_t> entries) : n(dim), a(std::move(entries)) {
    if (a.size() != static_cast<std::size_t>(n) * n)
        throw std::invalid_argument("IntMatrix: entry count does not match dimension");
}

IntMatrix IntMatrix::identity(int dim) {
    IntMatrix m;
    m.n = dim;
    m.a.assign(static_cast<std::size_t>(dim) * dim, 0);
    for (int i = 0; i < dim; ++i) m(i, i) = 1;
    return m;
}

IntMatrix IntMatrix::from_rows(const std::vector<std::vector<std::int64_t>>& rows) {
    int dim = static_cast<int>(rows.size());
    std::vector<std::int64_t> entries;
    entries.reserve(static_cast<std::size_t>(dim) * dim);
    for (const auto& r : rows) {
        if (static_cast<int>(r.size()) != dim)
            throw std::invalid_argument("IntMatrix: matrix is not square");
        entries.insert(entries.end(), r.begin(), r.end());
    }
    return IntMatrix(dim, std::move(entries));
}

std::vector<std::int64_t> IntMatrix::apply(const std::vector<std::int64_t>& v) const {
    if (static_cast<int>(v.size()) != n)
        throw std::invalid_argument("IntMatrix::apply: size mismatch");
    std::vector<std::int64_t> out(n, 0);
    for (int i = 0; i < n; ++i) {
        i128 acc = 0;
        for (int j = 0; j < n; ++j) acc += i128((*this)(i, j)) * v[j];
        check_magnitude(acc);
        out[i] = static_cast<std::int64_t>(acc);
    }
    return out;
}

IntMatrix IntMatrix::mul(const IntMatrix& other) const {
    if (n != other.n) throw std::invalid_argument("IntMatrix::mul: size mismatch");
    IntMatrix out = identity(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            i128 acc = 0;
            for (int k = 0; k < n; ++k) acc += i128((*this)(i, k)) * other(k, j);
            check_magnitude(acc);
            out(i, j) = static_cast<std::int64_t>(acc);
        }
    return out;
}

std::vector<std::vector<std::int64_t>> IntMatrix::rows() const {
    std::vector<std::vector<std::int64_t>> out(n);
    for (int i = 0; i < n; ++i) out[i].assign(a.begin() + static_cast<std::ptrdiff_t>(i) * n,
                                              a.begin() + static_cast<std::ptrdiff_t>(i + 1) * n);
    return out;
}

std::int64_t det(const IntMatrix& m) {
    int n = m.n;
    std::vector<i128> w(m.a.begin(), m.a.end());
    auto at = [&](int i, int j) -> i128& { return w[static_cast<std::size_t>(i) * n + j]; };
    i128 prev = 1;
    int sign = 1;
    for (int k = 0; k < n - 1; ++k) {
        if (at(k, k) == 0) {
            int pivot = -1;
            for (int i = k + 1; i < n; ++i)
                if (at(i, k) != 0) {
                    pivot = i;
                    break;
                }
            if (pivot < 0) return 0;
            for (int j = 0; j < n; ++j) std::swap(at(k, j), at(pivot, j));
            sign = -sign;
        }
        for (int i = k + 1; i < n; ++i)
            for (int j = k + 1; j < n; ++j) {
                i128 v = at(i, j) * at(k, k) - at(i, k) * at(k, j);
                check_magnitude(v);
                at(i, j) = v / prev;  // Bareiss: division is exact
            }
        prev = at(k, k);
    }
    i128 d = at(n - 1, n - 1) * sign;
    check_magnitude(d);
    return static_cast<std::int64_t>(d);
}

int rank_of(const std::vector<std::vector<std::int64_t>>& vectors, int dim) {
    std::vector<std::vector<i128>> rows;
    rows.reserve(vectors.size());
    for (const auto& v : vectors) {
        if (static_cast<int>(v.size()) != dim)
            throw std::invalid_argument("rank_of: vector dimension mismatch");
        rows.emplace_back(v.begin(), v.end());
    }
    int rank = 0;
    for (int col = 0; col < dim && rank < static_cast<int>(rows.size()); ++col) {
        int pivot = -1;
        for (int i = rank; i < static_cast<int>(rows.size()); ++i)
            if (rows[i][col] != 0) {
                pivot = i;
                break;
            }
        if (pivot < 0) continue;
        std::swap(rows[rank], rows[pivot]);
        for (int i = rank + 1; i < static_cast<int>(rows.size()); ++i) {
            if (rows[i][col] == 0) continue;
            i128 p = rows[rank][col], q = rows[i][col];
            for (int j = col; j < dim; ++j) {
                i128 v = rows[i][j] * p - rows[rank][j] * q;
                check_magnitude(v);
                rows[i][j] = v;
            }
        }
        ++rank;
    }
    return rank;
}

LatticeSpan lattice_span(const std::vector<std::vector<std::int64_t>>& vectors, int dim) {
    // Hermite-style reduction by integer row operations; pivots stay exact.
    std::vector<std::vector<i128>> rows;
    for (const auto& v : vectors) {
        if (static_cast<int>(v.size()) != dim)
            throw std::invalid_argument("lattice_span: vector dimension mismatch");
        rows.emplace_back(v.begin(), v.end());
    }
    int r = 0;
    for (int col = 0; col < dim; ++col) {
        // Euclidean reduction of column col over rows r..end.
        while (true) {
            int nz = -1;
            for (int i = r; i < static_cast<int>(rows.size()); ++i)
                if (rows[i][col] != 0) {
                    if (nz < 0 || iabs(rows[i][col]) < iabs(rows[nz][col])) nz = i;
                }
            if (nz < 0) break;
            std::swap(rows[r], rows[nz]);
            bool clean = true;
            for (int i = r + 1; i < static_cast<int>(rows.size()); ++i) {
                if (rows[i][col] == 0) continue;
                i128 q = rows[i][col] / rows[r][col];
                for (int j = 0; j < dim; ++j) {
                    rows[i][j] -= q * rows[r][j];
                    check_magnitude(rows[i][j]);
                }
                if (rows[i][col] != 0) clean = false;
            }
            if (clean) break;
        }
        if (r < static_cast<int>(rows.size()) && rows[r][col] != 0) ++r;
    }
    LatticeSpan out;
    out.rank = r;
    if (r == dim) {
        i128 idx = 1;
        int row = 0;
        for (int col = 0; col < dim; ++col) {
            idx *= iabs(rows[row][col]);
            ++row;
        }
        check_magnitude(idx);
        out.index = static_cast<std::int64_t>(idx);
    }
    return out;
}

}  // namespace ergomix
