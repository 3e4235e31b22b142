#include "ergomix/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace ergomix::kernel {

namespace {

std::int64_t mod(std::int64_t a, std::int64_t m) {
    std::int64_t r = a % m;
    return r < 0 ? r + m : r;
}

// Thread cap for the large-window stencil; outputs never depend on it.
int internal_workers() {
    if (const char* env = std::getenv("ERGOMIX_WORKERS")) {
        int w = std::atoi(env);
        if (w >= 1) return std::min(w, 8);
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(std::min(hc, 4u));
}

}  // namespace

std::size_t TorusSpace::size() const {
    std::size_t s = 1;
    for (int i = 0; i < dimension; ++i) s *= static_cast<std::size_t>(resolution);
    return s;
}

std::size_t BoxWindow::size() const {
    std::size_t s = 1;
    for (std::size_t i = 0; i < lo.size(); ++i) s *= static_cast<std::size_t>(hi[i] - lo[i] + 1);
    return s;
}

bool BoxWindow::contains(const std::vector<std::int64_t>& p) const {
    for (std::size_t i = 0; i < lo.size(); ++i)
        if (p[i] < lo[i] || p[i] > hi[i]) return false;
    return true;
}

std::size_t BoxWindow::index_of(const std::vector<std::int64_t>& p) const {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < lo.size(); ++i)
        idx = idx * static_cast<std::size_t>(hi[i] - lo[i] + 1) +
              static_cast<std::size_t>(p[i] - lo[i]);
    return idx;
}

std::vector<std::int64_t> BoxWindow::point_of(std::size_t index) const {
    std::vector<std::int64_t> p(lo.size());
    for (std::size_t i = lo.size(); i-- > 0;) {
        std::size_t len = static_cast<std::size_t>(hi[i] - lo[i] + 1);
        p[i] = lo[i] + static_cast<std::int64_t>(index % len);
        index /= len;
    }
    return p;
}

BoxWindow BoxWindow::centered(int dimension, std::int64_t radius) {
    BoxWindow w;
    w.lo.assign(static_cast<std::size_t>(dimension), -radius);
    w.hi.assign(static_cast<std::size_t>(dimension), radius);
    return w;
}

Distribution Distribution::delta(std::size_t states, std::size_t at) {
    Distribution d;
    d.p.assign(states, 0.0);
    d.p[at] = 1.0;
    d.mass = 1.0;
    return d;
}

Distribution Distribution::uniform(std::size_t states) {
    Distribution d;
    d.p.assign(states, 1.0 / static_cast<double>(states));
    d.mass = 1.0;
    return d;
}

double tv_norm(const Distribution& d1, const Distribution& d2) {
    if (d1.p.size() != d2.p.size())
        throw std::invalid_argument("tv_norm: distributions live on different state spaces");
    std::vector<double> diff(d1.p.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = std::abs(d1.p[i] - d2.p[i]);
    return pairwise_sum(diff);
}

LatticeChain LatticeChain::torus(TorusSpace space, std::vector<TransitionComponent> components) {
    if (space.resolution < 1 || space.dimension < 1)
        throw std::invalid_argument("torus space: resolution and dimension must be positive");
    LatticeChain c;
    c.is_torus_ = true;
    c.torus_ = space;
    c.states_ = space.size();
    c.components_ = std::move(components);

    std::vector<double> weights;
    for (auto& comp : c.components_) {
        if (comp.weight < 0) throw std::invalid_argument("chain: negative component weight");
        weights.push_back(comp.weight);
        if (comp.map.n != space.dimension)
            throw std::invalid_argument("chain: component map dimension mismatch");
        if (!is_unimodular(comp.map))
            throw std::invalid_argument("chain: torus map must be a lattice bijection (|det|=1)");
        std::vector<double> masses;
        for (auto& s : comp.steps) {
            if (s.mass < 0) throw std::invalid_argument("chain: negative step mass");
            masses.push_back(s.mass);
        }
        double total = pairwise_sum(masses);
        if (std::abs(total - 1.0) > 1e-12)
            throw std::invalid_argument("chain: displacement masses sum to " +
                                        std::to_string(total));
    }
    if (std::abs(pairwise_sum(weights) - 1.0) > 1e-12)
        throw std::invalid_argument("chain: component weights do not sum to 1");

    // Precompute x -> a x mod m as a permutation per component.
    int m = space.resolution, n = space.dimension;
    for (const auto& comp : c.components_) {
        std::vector<std::uint32_t> perm(c.states_);
        std::vector<std::int64_t> x(static_cast<std::size_t>(n), 0);
        for (std::size_t idx = 0;; ++idx) {
            std::size_t target = 0;
            for (int i = 0; i < n; ++i) {
                std::int64_t acc = 0;
                for (int j = 0; j < n; ++j) acc += comp.map(i, j) * x[static_cast<std::size_t>(j)];
                target = target * static_cast<std::size_t>(m) +
                         static_cast<std::size_t>(mod(acc, m));
            }
            perm[idx] = static_cast<std::uint32_t>(target);
            int i = n - 1;
            while (i >= 0 && ++x[static_cast<std::size_t>(i)] == m) x[static_cast<std::size_t>(i--)] = 0;
            if (i < 0) break;
        }
        c.perms_.push_back(std::move(perm));
    }
    return c;
}

LatticeChain LatticeChain::window(BoxWindow window, std::vector<TransitionComponent> components,
                                  Boundary boundary) {
    LatticeChain c;
    c.is_torus_ = false;
    c.window_ = std::move(window);
    c.boundary_ = boundary;
    c.states_ = c.window_.size();
    c.components_ = std::move(components);
    int d = c.window_.dimension();
    for (const auto& comp : c.components_) {
        if (comp.map != IntMatrix::identity(d))
            throw std::invalid_argument("window chains support identity maps only");
    }

    // Nearest-neighbor gather path: one component, steps within {0, +-e_i}.
    if (boundary == Boundary::absorbing && c.components_.size() == 1) {
        c.nn_minus_.assign(static_cast<std::size_t>(d), 0.0);
        c.nn_plus_.assign(static_cast<std::size_t>(d), 0.0);
        c.nn_self_ = 0.0;
        bool ok = true;
        for (const auto& s : c.components_[0].steps) {
            int axis = -1, sign = 0, nz = 0;
            for (int i = 0; i < d; ++i)
                if (s.offset[static_cast<std::size_t>(i)] != 0) {
                    ++nz;
                    axis = i;
                    sign = s.offset[static_cast<std::size_t>(i)] > 0 ? 1 : -1;
                    if (std::abs(s.offset[static_cast<std::size_t>(i)]) != 1) ok = false;
                }
            if (nz == 0)
                c.nn_self_ += s.mass;
            else if (nz == 1 && ok)
                (sign > 0 ? c.nn_plus_ : c.nn_minus_)[static_cast<std::size_t>(axis)] += s.mass;
            else
                ok = false;
            if (!ok) break;
        }
        c.nn_fast_ = ok;
    }
    return c;
}

void LatticeChain::step(const std::vector<double>& src, std::vector<double>& dst,
                        std::vector<double>& tmp) const {
    if (nn_fast_) {
        dst.resize(states_);
        step_window_nn(src, dst);  // overwrites every row
        return;
    }
    dst.assign(states_, 0.0);
    if (is_torus_)
        step_torus(src, dst, tmp);
    else
        step_window_generic(src, dst);
}

void LatticeChain::step_torus(const std::vector<double>& src, std::vector<double>& dst,
                              std::vector<double>& tmp) const {
    int m = torus_.resolution, n = torus_.dimension;
    tmp.resize(states_);
    for (std::size_t ci = 0; ci < components_.size(); ++ci) {
        const auto& comp = components_[ci];
        const auto& perm = perms_[ci];
        for (std::size_t i = 0; i < states_; ++i) tmp[perm[i]] = src[i];
        for (const auto& s : comp.steps) {
            double scale = comp.weight * s.mass;
            if (scale == 0.0) continue;
            if (n == 1) {
                std::size_t o = static_cast<std::size_t>(mod(s.offset[0], m));
                for (std::size_t j = 0; j + o < static_cast<std::size_t>(m); ++j)
                    dst[j + o] += scale * tmp[j];
                for (std::size_t j = static_cast<std::size_t>(m) - o; j < static_cast<std::size_t>(m); ++j)
                    dst[j + o - static_cast<std::size_t>(m)] += scale * tmp[j];
            } else if (n == 2) {
                std::size_t o1 = static_cast<std::size_t>(mod(s.offset[0], m));
                std::size_t o2 = static_cast<std::size_t>(mod(s.offset[1], m));
                std::size_t M = static_cast<std::size_t>(m);
                for (std::size_t i = 0; i < M; ++i) {
                    const double* srow = tmp.data() + i * M;
                    double* drow = dst.data() + ((i + o1) % M) * M;
                    for (std::size_t j = 0; j + o2 < M; ++j) drow[j + o2] += scale * srow[j];
                    for (std::size_t j = M - o2; j < M; ++j) drow[j + o2 - M] += scale * srow[j];
                }
            } else {
                std::vector<std::int64_t> x(static_cast<std::size_t>(n), 0);
                for (std::size_t idx = 0;; ++idx) {
                    std::size_t target = 0;
                    for (int i = 0; i < n; ++i)
                        target = target * static_cast<std::size_t>(m) +
                                 static_cast<std::size_t>(
                                     mod(x[static_cast<std::size_t>(i)] + s.offset[static_cast<std::size_t>(i)], m));
                    dst[target] += scale * tmp[idx];
                    int i = n - 1;
                    while (i >= 0 && ++x[static_cast<std::size_t>(i)] == m)
                        x[static_cast<std::size_t>(i--)] = 0;
                    if (i < 0) break;
                }
            }
        }
    }
}

void LatticeChain::step_window_nn(const std::vector<double>& src, std::vector<double>& dst) const {
    int d = window_.dimension();
    std::vector<std::size_t> len(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i)
        len[static_cast<std::size_t>(i)] =
            static_cast<std::size_t>(window_.hi[static_cast<std::size_t>(i)] -
                                     window_.lo[static_cast<std::size_t>(i)] + 1);
    std::vector<std::size_t> stride(static_cast<std::size_t>(d));
    std::size_t s = 1;
    for (int i = d - 1; i >= 0; --i) {
        stride[static_cast<std::size_t>(i)] = s;
        s *= len[static_cast<std::size_t>(i)];
    }
    std::size_t inner = len[static_cast<std::size_t>(d - 1)];
    std::size_t outer_count = states_ / inner;

    double w0 = nn_self_;
    double wxm = nn_minus_[static_cast<std::size_t>(d - 1)];
    double wxp = nn_plus_[static_cast<std::size_t>(d - 1)];

    auto process_rows = [&](std::size_t row_begin, std::size_t row_end) {
        std::vector<std::size_t> oc(static_cast<std::size_t>(d > 1 ? d - 1 : 1), 0);
        std::size_t rest = row_begin;
        for (int i = d - 2; i >= 0; --i) {
            oc[static_cast<std::size_t>(i)] = rest % len[static_cast<std::size_t>(i)];
            rest /= len[static_cast<std::size_t>(i)];
        }
        for (std::size_t row = row_begin; row < row_end; ++row) {
            std::size_t base = row * inner;
            const double* srow = src.data() + base;
            double* drow = dst.data() + base;
            // dst[x] gathers w0*src[x] + wxm*src[x+1] + wxp*src[x-1] along the
            // inner axis (a +e move lands at x, so it reads x-1). The row is
            // fully overwritten here, so no global zeroing pass is needed.
            if (w0 != 0.0)
                for (std::size_t x = 0; x < inner; ++x) drow[x] = w0 * srow[x];
            else
                std::fill(drow, drow + inner, 0.0);
            if (wxp != 0.0)
                for (std::size_t x = 1; x < inner; ++x) drow[x] += wxp * srow[x - 1];
            if (wxm != 0.0)
                for (std::size_t x = 0; x + 1 < inner; ++x) drow[x] += wxm * srow[x + 1];
            for (int axis = 0; axis < d - 1; ++axis) {
                double wm = nn_minus_[static_cast<std::size_t>(axis)];
                double wp = nn_plus_[static_cast<std::size_t>(axis)];
                if (oc[static_cast<std::size_t>(axis)] > 0 && wp != 0.0) {
                    const double* nrow = srow - stride[static_cast<std::size_t>(axis)];
                    for (std::size_t x = 0; x < inner; ++x) drow[x] += wp * nrow[x];
                }
                if (oc[static_cast<std::size_t>(axis)] + 1 < len[static_cast<std::size_t>(axis)] &&
                    wm != 0.0) {
                    const double* nrow = srow + stride[static_cast<std::size_t>(axis)];
                    for (std::size_t x = 0; x < inner; ++x) drow[x] += wm * nrow[x];
                }
            }
            int i = d - 2;
            while (i >= 0 && ++oc[static_cast<std::size_t>(i)] == len[static_cast<std::size_t>(i)])
                oc[static_cast<std::size_t>(i--)] = 0;
        }
    };

    // Rows write disjoint destination cells, so splitting them over threads
    // is bitwise deterministic for any worker count.
    int workers = internal_workers();
    if (workers > 1 && states_ >= (1u << 20) && outer_count >= 64) {
        std::vector<std::thread> pool;
        std::size_t chunk = (outer_count + static_cast<std::size_t>(workers) - 1) /
                            static_cast<std::size_t>(workers);
        for (int w = 0; w < workers; ++w) {
            std::size_t begin = static_cast<std::size_t>(w) * chunk;
            std::size_t end = std::min(outer_count, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(process_rows, begin, end);
        }
        for (auto& t : pool) t.join();
    } else {
        process_rows(0, outer_count);
    }
}

void LatticeChain::step_window_generic(const std::vector<double>& src,
                                       std::vector<double>& dst) const {
    int d = window_.dimension();
    for (const auto& comp : components_) {
        for (const auto& s : comp.steps) {
            double scale = comp.weight * s.mass;
            if (scale == 0.0) continue;
            for (std::size_t idx = 0; idx < states_; ++idx) {
                if (src[idx] == 0.0) continue;
                auto p = window_.point_of(idx);
                bool inside = true;
                for (int i = 0; i < d; ++i) {
                    p[static_cast<std::size_t>(i)] += s.offset[static_cast<std::size_t>(i)];
                    if (p[static_cast<std::size_t>(i)] < window_.lo[static_cast<std::size_t>(i)]) {
                        if (boundary_ == Boundary::reflecting)
                            p[static_cast<std::size_t>(i)] = window_.lo[static_cast<std::size_t>(i)];
                        else
                            inside = false;
                    } else if (p[static_cast<std::size_t>(i)] >
                               window_.hi[static_cast<std::size_t>(i)]) {
                        if (boundary_ == Boundary::reflecting)
                            p[static_cast<std::size_t>(i)] = window_.hi[static_cast<std::size_t>(i)];
                        else
                            inside = false;
                    }
                }
                if (inside) dst[window_.index_of(p)] += scale * src[idx];
            }
        }
    }
}

Distribution LatticeChain::evolve(const Distribution& dist, long n) const {
    if (dist.p.size() != states_)
        throw std::invalid_argument("evolve: distribution shape mismatch");
    if (n < 0) throw std::invalid_argument("evolve: negative step count");
    Distribution out = dist;
    if (n == 0) return out;
    std::vector<double> cur = dist.p, nxt(states_), tmp;
    for (long k = 0; k < n; ++k) {
        step(cur, nxt, tmp);
        cur.swap(nxt);
    }
    out.p = std::move(cur);
    out.recompute_mass();
    return out;
}

std::vector<double> LatticeChain::apply_to_function(const std::vector<double>& f) const {
    if (f.size() != states_) throw std::invalid_argument("apply_to_function: shape mismatch");
    std::vector<double> out(states_, 0.0);
    if (is_torus_) {
        int m = torus_.resolution, n = torus_.dimension;
        std::vector<double> g(states_);
        for (std::size_t ci = 0; ci < components_.size(); ++ci) {
            const auto& comp = components_[ci];
            // g(y) = sum_k mass_k f(y + o_k), then Pf(x) += w g(a x).
            std::fill(g.begin(), g.end(), 0.0);
            std::vector<std::int64_t> x(static_cast<std::size_t>(n), 0);
            for (std::size_t idx = 0;; ++idx) {
                double acc = 0.0;
                for (const auto& s : comp.steps) {
                    std::size_t target = 0;
                    for (int i = 0; i < n; ++i)
                        target = target * static_cast<std::size_t>(m) +
                                 static_cast<std::size_t>(mod(
                                     x[static_cast<std::size_t>(i)] + s.offset[static_cast<std::size_t>(i)], m));
                    acc += s.mass * f[target];
                }
                g[idx] = acc;
                int i = n - 1;
                while (i >= 0 && ++x[static_cast<std::size_t>(i)] == m)
                    x[static_cast<std::size_t>(i--)] = 0;
                if (i < 0) break;
            }
            const auto& perm = perms_[ci];
            for (std::size_t i = 0; i < states_; ++i) out[i] += comp.weight * g[perm[i]];
        }
        return out;
    }
    int d = window_.dimension();
    for (std::size_t idx = 0; idx < states_; ++idx) {
        double acc = 0.0;
        for (const auto& comp : components_) {
            for (const auto& s : comp.steps) {
                auto p = window_.point_of(idx);
                bool inside = true;
                for (int i = 0; i < d; ++i) {
                    p[static_cast<std::size_t>(i)] += s.offset[static_cast<std::size_t>(i)];
                    if (p[static_cast<std::size_t>(i)] < window_.lo[static_cast<std::size_t>(i)]) {
                        if (boundary_ == Boundary::reflecting)
                            p[static_cast<std::size_t>(i)] = window_.lo[static_cast<std::size_t>(i)];
                        else
                            inside = false;
                    } else if (p[static_cast<std::size_t>(i)] >
                               window_.hi[static_cast<std::size_t>(i)]) {
                        if (boundary_ == Boundary::reflecting)
                            p[static_cast<std::size_t>(i)] = window_.hi[static_cast<std::size_t>(i)];
                        else
                            inside = false;
                    }
                }
                if (inside) acc += comp.weight * s.mass * f[window_.index_of(p)];
            }
        }
        out[idx] = acc;
    }
    return out;
}

std::vector<std::size_t> LatticeChain::successors(std::size_t state) const {
    std::vector<std::size_t> out;
    if (is_torus_) {
        int m = torus_.resolution, n = torus_.dimension;
        for (std::size_t ci = 0; ci < components_.size(); ++ci) {
            if (components_[ci].weight <= 0) continue;
            std::size_t mapped = perms_[ci][state];
            auto coords = [&](std::size_t idx) {
                std::vector<std::int64_t> x(static_cast<std::size_t>(n));
                for (int i = n - 1; i >= 0; --i) {
                    x[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(idx % static_cast<std::size_t>(m));
                    idx /= static_cast<std::size_t>(m);
                }
                return x;
            };
            auto x = coords(mapped);
            for (const auto& s : components_[ci].steps) {
                if (s.mass <= 0) continue;
                std::size_t target = 0;
                for (int i = 0; i < n; ++i)
                    target = target * static_cast<std::size_t>(m) +
                             static_cast<std::size_t>(
                                 mod(x[static_cast<std::size_t>(i)] + s.offset[static_cast<std::size_t>(i)], m));
                out.push_back(target);
            }
        }
    } else {
        int d = window_.dimension();
        for (const auto& comp : components_) {
            if (comp.weight <= 0) continue;
            for (const auto& s : comp.steps) {
                if (s.mass <= 0) continue;
                auto p = window_.point_of(state);
                bool inside = true;
                for (int i = 0; i < d; ++i) {
                    p[static_cast<std::size_t>(i)] += s.offset[static_cast<std::size_t>(i)];
                    if (p[static_cast<std::size_t>(i)] < window_.lo[static_cast<std::size_t>(i)]) {
                        if (boundary_ == Boundary::reflecting)
                            p[static_cast<std::size_t>(i)] = window_.lo[static_cast<std::size_t>(i)];
                        else
                            inside = false;
                    } else if (p[static_cast<std::size_t>(i)] > window_.hi[static_cast<std::size_t>(i)]) {
                        if (boundary_ == Boundary::reflecting)
                            p[static_cast<std::size_t>(i)] = window_.hi[static_cast<std::size_t>(i)];
                        else
                            inside = false;
                    }
                }
                if (inside) out.push_back(window_.index_of(p));
            }
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

LatticeChain discretize(const models::AffineTorusModel& model, int resolution) {
    model.validate();
    std::string why;
    if (!model.displacement.compatible_resolution(resolution, &why))
        throw std::invalid_argument("discretize: incompatible resolution: " + why);
    TorusSpace space{resolution, model.dimension};
    auto cells = model.displacement.cell_masses(resolution);

    std::vector<TransitionComponent> comps;
    for (const auto& lp : model.linear_parts) {
        TransitionComponent c;
        c.weight = lp.weight;
        c.map = lp.matrix;
        for (int k = 0; k < resolution; ++k) {
            if (cells[static_cast<std::size_t>(k)] == 0.0) continue;
            StepOffset s;
            s.offset.resize(static_cast<std::size_t>(model.dimension));
            for (int i = 0; i < model.dimension; ++i)
                s.offset[static_cast<std::size_t>(i)] =
                    mod(static_cast<std::int64_t>(k) * model.displacement.direction[static_cast<std::size_t>(i)],
                        resolution);
            s.mass = cells[static_cast<std::size_t>(k)];
            c.steps.push_back(std::move(s));
        }
        comps.push_back(std::move(c));
    }
    return LatticeChain::torus(space, std::move(comps));
}

LatticeChain cover_window_chain(const models::CoverModel& model, std::int64_t radius) {
    model.validate();
    double cells = std::pow(2.0 * static_cast<double>(radius) + 1.0, model.degree);
    if (cells > static_cast<double>(std::size_t(1) << 28))
        throw std::invalid_argument("cover_window_chain: window of radius " +
                                    std::to_string(radius) + " in Z^" +
                                    std::to_string(model.degree) +
                                    " exceeds the dense-state budget; lower the horizon");
    TransitionComponent c;
    c.weight = 1.0;
    c.map = IntMatrix::identity(model.degree);
    for (const auto& a : model.step_law)
        if (a.mass > 0) c.steps.push_back({a.point, a.mass});
    return LatticeChain::window(BoxWindow::centered(model.degree, radius), {std::move(c)},
                                Boundary::absorbing);
}

LatticeChain drift_chain(std::int64_t length, double p_down) {
    if (length < 1) throw std::invalid_argument("drift_chain: length must be >= 1");
    if (p_down <= 0 || p_down >= 1) throw std::invalid_argument("drift_chain: p_down in (0,1)");
    BoxWindow w;
    w.lo = {0};
    w.hi = {length};
    TransitionComponent c;
    c.weight = 1.0;
    c.map = IntMatrix::identity(1);
    c.steps.push_back({{-1}, p_down});
    c.steps.push_back({{+1}, 1.0 - p_down});
    return LatticeChain::window(std::move(w), {std::move(c)}, Boundary::reflecting);
}

Distribution stationary(const LatticeChain& chain) {
    if (!chain.is_torus())
        throw std::invalid_argument(
            "stationary: window chains have no invariant probability here (use a torus chain)");
    Distribution u = Distribution::uniform(chain.state_count());
    double residual = tv_norm(u, chain.evolve(u, 1));
    if (residual > 1e-12)
        throw CheckFailure("stationary: uniform law is not invariant, residual " +
                           std::to_string(residual));
    return u;
}

PeriodResult period(const LatticeChain& chain, std::size_t x, int cutoff) {
    std::size_t states = chain.state_count();
    if (x >= states) throw std::invalid_argument("period: start state out of range");
    if (cutoff < 1) throw std::invalid_argument("period: cutoff must be >= 1");

    std::vector<std::vector<std::size_t>> adj(states);
    for (std::size_t s = 0; s < states; ++s) adj[s] = chain.successors(s);

    std::vector<char> cur(states, 0), nxt, everc(states, 0);
    std::vector<std::int64_t> first_time(states, -1);
    cur[x] = 1;
    everc[x] = 1;
    first_time[x] = 0;
    std::int64_t g = 0;
    for (int n = 1; n <= cutoff; ++n) {
        nxt.assign(states, 0);
        for (std::size_t s = 0; s < states; ++s)
            if (cur[s])
                for (std::size_t t : adj[s]) nxt[t] = 1;
        for (std::size_t s = 0; s < states; ++s)
            if (nxt[s]) {
                if (!everc[s]) {
                    everc[s] = 1;
                    first_time[s] = n;
                }
            }
        if (nxt[x]) g = gcd64(g, n);
        cur.swap(nxt);
    }

    PeriodResult out;
    out.cycle_class.assign(states, -1);
    bool all_reached = std::all_of(everc.begin(), everc.end(), [](char c) { return c != 0; });
    if (!all_reached || g == 0) return out;  // inconclusive, never a wrong period
    out.period = static_cast<int>(g);
    for (std::size_t s = 0; s < states; ++s)
        out.cycle_class[s] = static_cast<int>(first_time[s] % g);
    return out;
}

DoeblinCertificate doeblin_coefficient(const LatticeChain& chain,
                                       const std::vector<std::size_t>& set_A, int n0) {
    if (set_A.empty()) throw std::invalid_argument("doeblin_coefficient: A must be nonempty");
    if (n0 < 1) throw std::invalid_argument("doeblin_coefficient: n0 must be >= 1");
    std::size_t states = chain.state_count();
    std::vector<double> envelope(states, std::numeric_limits<double>::infinity());
    for (std::size_t x : set_A) {
        auto row = chain.evolve(Distribution::delta(states, x), n0);
        for (std::size_t y = 0; y < states; ++y) envelope[y] = std::min(envelope[y], row.p[y]);
    }
    DoeblinCertificate cert;
    cert.n0 = n0;
    cert.set_A = set_A;
    cert.whole_space = set_A.size() == states;
    cert.epsilon = pairwise_sum(envelope);
    cert.lambda.p.assign(states, 0.0);
    cert.lambda.mass = 0.0;
    if (cert.epsilon > 0.0) {
        for (std::size_t y = 0; y < states; ++y) cert.lambda.p[y] = envelope[y] / cert.epsilon;
        cert.lambda.recompute_mass();
    }
    return cert;
}

VarianceResult asymptotic_variance(const LatticeChain& chain, const std::vector<double>& f,
                                   int k_max) {
    if (!chain.is_torus())
        throw std::invalid_argument("asymptotic_variance: defined for torus chains (pi = Haar)");
    std::size_t states = chain.state_count();
    if (f.size() != states) throw std::invalid_argument("asymptotic_variance: f shape mismatch");
    double mean = pairwise_sum(f) / static_cast<double>(states);
    std::vector<double> fbar(states);
    for (std::size_t i = 0; i < states; ++i) fbar[i] = f[i] - mean;

    auto dot_pi = [&](const std::vector<double>& a, const std::vector<double>& b) {
        std::vector<double> prods(states);
        for (std::size_t i = 0; i < states; ++i) prods[i] = a[i] * b[i];
        return pairwise_sum(prods) / static_cast<double>(states);
    };

    double gamma2 = dot_pi(fbar, fbar);
    std::vector<double> g = fbar;
    int quiet = 0;
    for (int k = 1; k <= k_max; ++k) {
        g = chain.apply_to_function(g);
        double term = dot_pi(fbar, g);
        gamma2 += 2.0 * term;
        quiet = std::abs(term) < 1e-12 ? quiet + 1 : 0;
        if (quiet >= 10) {
            if (gamma2 < -1e-9)
                throw CheckFailure("asymptotic_variance: negative variance " +
                                   std::to_string(gamma2));
            return {std::max(gamma2, 0.0), k};
        }
    }
    auto pr = period(chain, 0, 4 * static_cast<int>(states) + 8);
    std::string detail = pr.period ? (" (chain period is " + std::to_string(*pr.period) + ")")
                                   : " (chain period is inconclusive)";
    throw std::runtime_error(
        "asymptotic_variance: autocovariance series did not settle by k_max = " +
        std::to_string(k_max) + "; increase k_max or check aperiodicity" + detail);
}

}  // namespace ergomix::kernel
