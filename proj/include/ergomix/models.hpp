#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ergomix/common.hpp"
#include "ergomix/intlinalg.hpp"

namespace ergomix::models {

inline constexpr double kMassTolerance = 1e-12;

// Scalar displacement law on [0,1): rational atoms plus a piecewise-constant
// density with rational breakpoints. Restricting to rationals keeps the
// lattice discretization exact (cell integration has no quadrature error).
struct ScalarAtom {
    Rational position;  // in [0,1)
    double mass = 0.0;
    bool operator==(const ScalarAtom&) const = default;
};

struct DensityPiece {
    Rational lo;  // in [0,1)
    Rational hi;  // in (lo, 1]
    double height = 0.0;
    bool operator==(const DensityPiece&) const = default;
};

struct DisplacementLaw {
    std::vector<std::int64_t> direction;  // primitive integer vector
    std::vector<ScalarAtom> atoms;
    std::vector<DensityPiece> pieces;

    void validate() const;
    double total_mass() const;

    // True when every atom position and piece endpoint sits on the (1/m)-grid.
    bool compatible_resolution(int m, std::string* why = nullptr) const;
    // Exact mass of each cell [k/m,(k+1)/m), k = 0..m-1.
    std::vector<double> cell_masses(int m) const;

    double sample(std::mt19937_64& rng) const;  // a draw from the law on [0,1)

    bool operator==(const DisplacementLaw&) const = default;
};

struct LinearPart {
    IntMatrix matrix;
    double weight = 0.0;
    bool operator==(const LinearPart&) const = default;
};

// Distribution over affine maps x -> ax + D v on T^n with a in SL_n(Z) and
// scalar displacement D along a fixed primitive direction v.
struct AffineTorusModel {
    int dimension = 0;
    std::vector<LinearPart> linear_parts;
    DisplacementLaw displacement;
    bool independent = true;  // linear and translational parts independent

    void validate() const;
    bool operator==(const AffineTorusModel&) const = default;
};

// Finitely supported step law on Z^d; counting measure plays the role of Haar.
struct CoverAtom {
    std::vector<std::int64_t> point;
    double mass = 0.0;
    bool operator==(const CoverAtom&) const = default;
};

struct CoverModel {
    int degree = 0;
    std::vector<CoverAtom> step_law;

    void validate() const;
    bool symmetric() const;  // law(z) == law(-z), exact mass equality
    // Throws if the support does not generate Z^d as a group, naming the
    // rank defect or the sublattice index.
    void require_adapted() const;
    // 1 or 2 for symmetric adapted laws; 2 iff some mod-2 functional is odd
    // on the entire support.
    int walk_period() const;
    std::int64_t max_step_norm() const;  // max L-inf norm over the support
    bool operator==(const CoverModel&) const = default;
};

enum class GrowthClass { at_most_quadratic, superquadratic, inconclusive };

struct GrowthReport {
    std::vector<std::int64_t> ball_sizes;  // |V^n . 0| for n = 1..n_max
    double fitted_degree = 0.0;
    GrowthClass classification = GrowthClass::inconclusive;
};

std::string to_string(GrowthClass c);

// Spread-out criterion for a deterministic linear part: {v, av, ..., a^{n-1}v}
// must span R^n (exact integer rank).
bool check_spread_out_deterministic(const IntMatrix& a, const std::vector<std::int64_t>& v);

// Spread-out criterion for independent linear/translational parts: v must not
// lie in a proper subspace invariant under every generator. Computes the
// smallest invariant subspace containing v by iterating W <- span(W u gW).
bool check_spread_out_independent(const std::vector<IntMatrix>& generators,
                                  const std::vector<std::int64_t>& v);

// Ball sizes |V^n . 0| for V = supp u -supp u {0}, n = 1..n_max.
std::vector<std::int64_t> ball_sizes(const CoverModel& model, int n_max);

GrowthReport measure_growth(const CoverModel& model, int n_max);

struct AperiodicityReport {
    std::optional<int> period;  // empty when inconclusive at the cutoff
    bool aperiodic = false;
    std::string rationale;
};

// Period of the chain discretized at the given resolution, with the
// connectedness rationale attached.
AperiodicityReport check_aperiodic_torus(const AffineTorusModel& model, int resolution,
                                         int cutoff = 0);

}  // namespace ergomix::models
