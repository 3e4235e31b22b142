#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ergomix/common.hpp"
#include "ergomix/intlinalg.hpp"
#include "ergomix/models.hpp"

namespace ergomix::kernel {

// States of (Z/mZ)^n, indexed row-major over coordinates.
struct TorusSpace {
    int resolution = 0;
    int dimension = 0;
    std::size_t size() const;
};

// Box window [lo_i, hi_i]^d in Z^d (bounds inclusive), row-major indexing.
struct BoxWindow {
    std::vector<std::int64_t> lo;
    std::vector<std::int64_t> hi;
    std::size_t size() const;
    int dimension() const { return static_cast<int>(lo.size()); }
    bool contains(const std::vector<std::int64_t>& p) const;
    std::size_t index_of(const std::vector<std::int64_t>& p) const;
    std::vector<std::int64_t> point_of(std::size_t index) const;
    static BoxWindow centered(int dimension, std::int64_t radius);
};

enum class Boundary {
    absorbing,   // mass leaving the window is dropped (and visible as a mass deficit)
    reflecting,  // moves are clamped to the window edge
};

struct StepOffset {
    std::vector<std::int64_t> offset;
    double mass = 0.0;
};

struct TransitionComponent {
    double weight = 0.0;
    IntMatrix map;  // bijection of the torus lattice; identity on windows
    std::vector<StepOffset> steps;
};

// Dense (sub-)probability vector over a chain's state space.
struct Distribution {
    std::vector<double> p;
    double mass = 0.0;

    static Distribution delta(std::size_t states, std::size_t at);
    static Distribution uniform(std::size_t states);
    void recompute_mass() { mass = pairwise_sum(p); }
};

double tv_norm(const Distribution& d1, const Distribution& d2);

struct PeriodResult {
    std::optional<int> period;        // empty: inconclusive at this cutoff
    std::vector<int> cycle_class;     // class index per state (-1 if unknown)
};

struct DoeblinCertificate {
    int n0 = 0;
    double epsilon = 0.0;  // 0 means: not small at this n0
    Distribution lambda;
    std::vector<std::size_t> set_A;
    bool whole_space = false;

    bool valid() const { return epsilon > 0.0; }
};

struct VarianceResult {
    double gamma2 = 0.0;
    int truncated_at = 0;  // index of the last autocovariance term used
};

// Exact finite-state realization of the transition kernel: a mixture of
// (lattice bijection, displacement distribution) pairs acting on a torus or
// on a box window of Z^d.
class LatticeChain {
  public:
    static LatticeChain torus(TorusSpace space, std::vector<TransitionComponent> components);
    static LatticeChain window(BoxWindow window, std::vector<TransitionComponent> components,
                               Boundary boundary);

    bool is_torus() const { return is_torus_; }
    const TorusSpace& torus_space() const { return torus_; }
    const BoxWindow& box() const { return window_; }
    Boundary boundary() const { return boundary_; }
    std::size_t state_count() const { return states_; }
    const std::vector<TransitionComponent>& components() const { return components_; }

    // One application of the kernel; dst is overwritten, tmp is scratch.
    void step(const std::vector<double>& src, std::vector<double>& dst,
              std::vector<double>& tmp) const;

    Distribution evolve(const Distribution& dist, long n) const;

    // Pf for a bounded function f on states.
    std::vector<double> apply_to_function(const std::vector<double>& f) const;

    // Support successors of one state (for reachability / period analysis).
    std::vector<std::size_t> successors(std::size_t state) const;

  private:
    bool is_torus_ = true;
    TorusSpace torus_;
    BoxWindow window_;
    Boundary boundary_ = Boundary::absorbing;
    std::vector<TransitionComponent> components_;
    std::size_t states_ = 0;

    // torus: per-component permutation x -> a x mod m
    std::vector<std::vector<std::uint32_t>> perms_;

    // window fast path: single identity component with steps in {0, +-e_i}
    bool nn_fast_ = false;
    std::vector<double> nn_minus_, nn_plus_;
    double nn_self_ = 0.0;

    void step_torus(const std::vector<double>& src, std::vector<double>& dst,
                    std::vector<double>& tmp) const;
    void step_window_generic(const std::vector<double>& src, std::vector<double>& dst) const;
    void step_window_nn(const std::vector<double>& src, std::vector<double>& dst) const;
};

// Exact discretization of an affine torus model at resolution m. Fails with
// the required divisibility when the scalar law does not sit on the grid.
LatticeChain discretize(const models::AffineTorusModel& model, int resolution);

// Absorbing window chain for a cover model.
LatticeChain cover_window_chain(const models::CoverModel& model, std::int64_t radius);

// Birth-death chain on {0..length} with reflecting ends: down with
// probability p_down, up otherwise.
LatticeChain drift_chain(std::int64_t length, double p_down);

// Haar (uniform) law of a torus chain; asserts one-step invariance <= 1e-12.
Distribution stationary(const LatticeChain& chain);

PeriodResult period(const LatticeChain& chain, std::size_t x, int cutoff);

// Discrete minorization envelope e(y) = min_{x in A} P^{n0}(x,y);
// epsilon = sum e, lambda = e / epsilon.
DoeblinCertificate doeblin_coefficient(const LatticeChain& chain,
                                       const std::vector<std::size_t>& set_A, int n0);

// Asymptotic variance via the stationary autocovariance series, truncated
// once 10 consecutive terms fall below 1e-12.
VarianceResult asymptotic_variance(const LatticeChain& chain, const std::vector<double>& f,
                                   int k_max = 10000);

}  // namespace ergomix::kernel
