#include "ergomix/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "ergomix/kernel.hpp"

namespace ergomix::models {

namespace {

double rational_to_double(const Rational& r) {
    return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

bool on_grid(const Rational& r, int m) {
    // r = p/q with gcd(p,q)=1 sits on the (1/m)-grid iff q | m.
    return m % r.denominator() == 0;
}

}  // namespace

void DisplacementLaw::validate() const {
    if (direction.empty()) throw std::invalid_argument("displacement: empty direction vector");
    std::int64_t g = 0;
    bool nonzero = false;
    for (auto c : direction) {
        if (c != 0) nonzero = true;
        g = gcd64(g, c);
    }
    if (!nonzero) throw std::invalid_argument("displacement: direction vector is zero");
    if (g != 1)
        throw std::invalid_argument("displacement: direction vector is not primitive (gcd = " +
                                    std::to_string(g) + ")");
    for (const auto& a : atoms) {
        if (a.mass < 0) throw std::invalid_argument("displacement: negative atom mass");
        if (a.position < Rational(0) || a.position >= Rational(1))
            throw std::invalid_argument("displacement: atom position outside [0,1)");
    }
    for (const auto& p : pieces) {
        if (p.height < 0) throw std::invalid_argument("displacement: negative density height");
        if (p.lo < Rational(0) || p.hi > Rational(1) || !(p.lo < p.hi))
            throw std::invalid_argument("displacement: density piece outside [0,1) or empty");
    }
    double mass = total_mass();
    if (std::abs(mass - 1.0) > kMassTolerance)
        throw std::invalid_argument("displacement: total mass " + std::to_string(mass) +
                                    " is not 1 within 1e-12");
}

double DisplacementLaw::total_mass() const {
    std::vector<double> parts;
    for (const auto& a : atoms) parts.push_back(a.mass);
    for (const auto& p : pieces) parts.push_back(p.height * rational_to_double(p.hi - p.lo));
    return pairwise_sum(parts);
}

bool DisplacementLaw::compatible_resolution(int m, std::string* why) const {
    for (const auto& a : atoms)
        if (!on_grid(a.position, m)) {
            if (why)
                *why = "atom at " + std::to_string(a.position.numerator()) + "/" +
                       std::to_string(a.position.denominator()) + " requires " +
                       std::to_string(a.position.denominator()) + " | m, got m = " +
                       std::to_string(m);
            return false;
        }
    for (const auto& p : pieces)
        for (const Rational& e : {p.lo, p.hi})
            if (!on_grid(e, m)) {
                if (why)
                    *why = "density breakpoint " + std::to_string(e.numerator()) + "/" +
                           std::to_string(e.denominator()) + " requires " +
                           std::to_string(e.denominator()) + " | m, got m = " + std::to_string(m);
                return false;
            }
    return true;
}

std::vector<double> DisplacementLaw::cell_masses(int m) const {
    std::string why;
    if (!compatible_resolution(m, &why))
        throw std::invalid_argument("displacement law incompatible with resolution: " + why);
    std::vector<double> cells(m, 0.0);
    for (const auto& a : atoms) {
        std::int64_t k = a.position.numerator() * (m / a.position.denominator());
        cells[static_cast<std::size_t>(k)] += a.mass;
    }
    for (const auto& p : pieces) {
        // Endpoints lie on cell boundaries, so each covered cell gets height/m.
        std::int64_t klo = p.lo.numerator() * (m / p.lo.denominator());
        std::int64_t khi = p.hi.numerator() * (m / p.hi.denominator());
        for (std::int64_t k = klo; k < khi; ++k) cells[static_cast<std::size_t>(k)] += p.height / m;
    }
    return cells;
}

double DisplacementLaw::sample(std::mt19937_64& rng) const {
    double u = uniform01(rng) * total_mass();
    for (const auto& a : atoms) {
        if (u < a.mass) return rational_to_double(a.position);
        u -= a.mass;
    }
    for (const auto& p : pieces) {
        double lo = rational_to_double(p.lo), hi = rational_to_double(p.hi);
        double w = p.height * (hi - lo);
        if (u < w) {
            double t = lo + (hi - lo) * (w > 0 ? u / w : 0.0);
            return t < hi ? t : lo;
        }
        u -= w;
    }
    // Rounding pushed u past the last block; return the last support point.
    if (!pieces.empty()) return rational_to_double(pieces.back().lo);
    return rational_to_double(atoms.back().position);
}

void AffineTorusModel::validate() const {
    if (dimension <= 0) throw std::invalid_argument("model: dimension must be positive");
    if (linear_parts.empty()) throw std::invalid_argument("model: no linear parts");
    std::vector<double> ws;
    for (const auto& lp : linear_parts) {
        if (lp.weight < 0) throw std::invalid_argument("model: negative linear part weight");
        if (lp.matrix.n != dimension)
            throw std::invalid_argument("model: linear part dimension mismatch");
        if (!is_unimodular(lp.matrix))
            throw std::invalid_argument("model: linear part has |det| != 1 (det = " +
                                        std::to_string(det(lp.matrix)) + ")");
        ws.push_back(lp.weight);
    }
    double total = pairwise_sum(ws);
    if (std::abs(total - 1.0) > kMassTolerance)
        throw std::invalid_argument("model: linear part weights sum to " + std::to_string(total));
    if (static_cast<int>(displacement.direction.size()) != dimension)
        throw std::invalid_argument("model: displacement direction dimension mismatch");
    displacement.validate();
}

void CoverModel::validate() const {
    if (degree <= 0) throw std::invalid_argument("cover model: degree must be positive");
    if (step_law.empty()) throw std::invalid_argument("cover model: empty step law");
    std::set<std::vector<std::int64_t>> seen;
    std::vector<double> ms;
    for (const auto& atom : step_law) {
        if (static_cast<int>(atom.point.size()) != degree)
            throw std::invalid_argument("cover model: step point dimension mismatch");
        if (atom.mass < 0) throw std::invalid_argument("cover model: negative step mass");
        if (!seen.insert(atom.point).second)
            throw std::invalid_argument("cover model: duplicate step point");
        ms.push_back(atom.mass);
    }
    double total = pairwise_sum(ms);
    if (std::abs(total - 1.0) > kMassTolerance)
        throw std::invalid_argument("cover model: step masses sum to " + std::to_string(total));
}

bool CoverModel::symmetric() const {
    for (const auto& atom : step_law) {
        std::vector<std::int64_t> neg(atom.point.size());
        for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -atom.point[i];
        bool found = false;
        for (const auto& other : step_law)
            if (other.point == neg) {
                if (other.mass != atom.mass) return false;
                found = true;
                break;
            }
        if (!found) return false;
    }
    return true;
}

void CoverModel::require_adapted() const {
    std::vector<std::vector<std::int64_t>> pts;
    for (const auto& a : step_law)
        if (a.mass > 0) pts.push_back(a.point);
    LatticeSpan span = lattice_span(pts, degree);
    if (span.rank < degree)
        throw std::invalid_argument("step law support spans only a rank-" +
                                    std::to_string(span.rank) + " sublattice of Z^" +
                                    std::to_string(degree));
    if (span.index != 1)
        throw std::invalid_argument("step law support generates a sublattice of index " +
                                    std::to_string(span.index) +
                                    "; some coset of Z^" + std::to_string(degree) +
                                    " is unreachable");
}

int CoverModel::walk_period() const {
    if (!symmetric()) throw std::invalid_argument("walk_period: law must be symmetric");
    require_adapted();
    // Symmetric adapted laws have period 1 or 2; period 2 iff c . z is odd for
    // every support point z, for some mod-2 functional c.
    for (std::uint32_t c = 1; c < (1u << degree); ++c) {
        bool all_odd = true;
        for (const auto& atom : step_law) {
            if (atom.mass <= 0) continue;
            std::int64_t dot = 0;
            for (int i = 0; i < degree; ++i)
                if (c & (1u << i)) dot += atom.point[i];
            if (((dot % 2) + 2) % 2 == 0) {
                all_odd = false;
                break;
            }
        }
        if (all_odd) return 2;
    }
    return 1;
}

std::int64_t CoverModel::max_step_norm() const {
    std::int64_t m = 0;
    for (const auto& a : step_law)
        for (auto c : a.point) m = std::max(m, std::abs(c));
    return m;
}

std::string to_string(GrowthClass c) {
    switch (c) {
        case GrowthClass::at_most_quadratic: return "at_most_quadratic";
        case GrowthClass::superquadratic: return "superquadratic";
        case GrowthClass::inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

bool check_spread_out_deterministic(const IntMatrix& a, const std::vector<std::int64_t>& v) {
    int n = a.n;
    if (static_cast<int>(v.size()) != n)
        throw std::invalid_argument("check_spread_out_deterministic: dimension mismatch");
    if (std::all_of(v.begin(), v.end(), [](std::int64_t c) { return c == 0; }))
        throw std::invalid_argument("check_spread_out_deterministic: v must be nonzero");
    if (!is_unimodular(a))
        throw std::invalid_argument("check_spread_out_deterministic: matrix is not unimodular");
    std::vector<std::vector<std::int64_t>> orbit;
    std::vector<std::int64_t> w = v;
    for (int k = 0; k < n; ++k) {
        orbit.push_back(w);
        w = a.apply(w);
    }
    return rank_of(orbit, n) == n;
}

bool check_spread_out_independent(const std::vector<IntMatrix>& generators,
                                  const std::vector<std::int64_t>& v) {
    if (generators.empty())
        throw std::invalid_argument("check_spread_out_independent: no generators");
    int n = generators.front().n;
    if (static_cast<int>(v.size()) != n)
        throw std::invalid_argument("check_spread_out_independent: dimension mismatch");
    if (std::all_of(v.begin(), v.end(), [](std::int64_t c) { return c == 0; }))
        throw std::invalid_argument("check_spread_out_independent: v must be nonzero");
    for (const auto& g : generators) {
        if (g.n != n) throw std::invalid_argument("check_spread_out_independent: mixed dimensions");
        if (!is_unimodular(g))
            throw std::invalid_argument(
                "check_spread_out_independent: generator is not unimodular");
    }
    // Grow W = span(v) until invariant under every generator; at most n rounds.
    std::vector<std::vector<std::int64_t>> basis{v};
    int dim = 1;
    for (int round = 0; round < n; ++round) {
        std::vector<std::vector<std::int64_t>> candidate = basis;
        for (const auto& g : generators)
            for (const auto& b : basis) candidate.push_back(g.apply(b));
        int new_dim = rank_of(candidate, n);
        if (new_dim == dim) break;
        // Re-extract an integer basis: keep vectors that increase the rank.
        std::vector<std::vector<std::int64_t>> reduced;
        for (const auto& c : candidate) {
            reduced.push_back(c);
            if (rank_of(reduced, n) < static_cast<int>(reduced.size())) reduced.pop_back();
        }
        basis = std::move(reduced);
        dim = new_dim;
        if (dim == n) break;
    }
    return dim == n;
}

std::vector<std::int64_t> ball_sizes(const CoverModel& model, int n_max) {
    model.validate();
    model.require_adapted();
    int d = model.degree;
    std::int64_t step = model.max_step_norm();
    std::int64_t radius = step * n_max;
    std::int64_t side = 2 * radius + 1;
    std::size_t total = 1;
    for (int i = 0; i < d; ++i) {
        total *= static_cast<std::size_t>(side);
        if (total > (std::size_t(1) << 31))
            throw std::invalid_argument("ball_sizes: window of " + std::to_string(side) + "^" +
                                        std::to_string(d) + " cells is too large; lower n_max");
    }

    // V = supp u -supp u {0}
    std::set<std::vector<std::int64_t>> vset;
    vset.insert(std::vector<std::int64_t>(d, 0));
    for (const auto& a : model.step_law)
        if (a.mass > 0) {
            vset.insert(a.point);
            std::vector<std::int64_t> neg(a.point.size());
            for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -a.point[i];
            vset.insert(neg);
        }
    std::vector<std::ptrdiff_t> strides(d);
    std::ptrdiff_t s = 1;
    for (int i = d - 1; i >= 0; --i) {
        strides[i] = s;
        s *= side;
    }
    std::vector<std::ptrdiff_t> voffsets;
    for (const auto& z : vset) {
        std::ptrdiff_t off = 0;
        for (int i = 0; i < d; ++i) off += strides[i] * z[i];
        voffsets.push_back(off);
    }

    std::vector<char> reached(total, 0);
    std::ptrdiff_t origin = 0;
    for (int i = 0; i < d; ++i) origin += strides[i] * radius;
    reached[static_cast<std::size_t>(origin)] = 1;
    std::vector<std::ptrdiff_t> frontier{origin};

    std::vector<std::int64_t> sizes;
    std::int64_t count = 1;
    for (int n = 1; n <= n_max; ++n) {
        std::vector<std::ptrdiff_t> next;
        for (std::ptrdiff_t cell : frontier)
            for (std::ptrdiff_t off : voffsets) {
                std::ptrdiff_t tgt = cell + off;
                if (!reached[static_cast<std::size_t>(tgt)]) {
                    reached[static_cast<std::size_t>(tgt)] = 1;
                    next.push_back(tgt);
                }
            }
        count += static_cast<std::int64_t>(next.size());
        sizes.push_back(count);
        frontier = std::move(next);
    }
    return sizes;
}

GrowthReport measure_growth(const CoverModel& model, int n_max) {
    GrowthReport report;
    report.ball_sizes = ball_sizes(model, n_max);
    if (n_max < 8) {
        report.classification = GrowthClass::inconclusive;
        return report;
    }
    // Least squares of log|ball| vs log n over the top half of the range;
    // small-n transients are discarded.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int count = 0;
    for (int n = n_max / 2; n <= n_max; ++n) {
        double x = std::log(static_cast<double>(n));
        double y = std::log(static_cast<double>(report.ball_sizes[static_cast<std::size_t>(n - 1)]));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++count;
    }
    report.fitted_degree = (count * sxy - sx * sy) / (count * sxx - sx * sx);
    report.classification = report.fitted_degree <= 2.3 ? GrowthClass::at_most_quadratic
                                                        : GrowthClass::superquadratic;
    return report;
}

AperiodicityReport check_aperiodic_torus(const AffineTorusModel& model, int resolution,
                                         int cutoff) {
    auto chain = kernel::discretize(model, resolution);
    if (cutoff <= 0) cutoff = 4 * static_cast<int>(chain.state_count()) + 8;
    auto pr = kernel::period(chain, 0, cutoff);
    AperiodicityReport report;
    report.period = pr.period;
    report.aperiodic = pr.period.has_value() && *pr.period == 1;
    std::ostringstream os;
    if (!pr.period) {
        os << "inconclusive at cutoff " << cutoff
           << ": the discretized chain did not certify irreducibility";
    } else {
        os << "discretized chain at resolution " << resolution << " has period " << *pr.period
           << "; the torus is connected, so a spread-out walk on it is aperiodic and a period-1 "
              "discretization is the expected outcome";
    }
    report.rationale = os.str();
    return report;
}

}  // namespace ergomix::models
