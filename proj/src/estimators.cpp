#include "isingdyn/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace isingdyn {

namespace {

constexpr double kExpClamp = 700.0;
const double kExpCap = std::exp(700.0);

double clamped_exp(double z, std::size_t* clamps) {
    if (z > kExpClamp || z < -kExpClamp) {
        if (clamps) ++*clamps;
        z = std::clamp(z, -kExpClamp, kExpClamp);
    }
    return std::exp(z);
}

// ln(1/(1+e^-z)), safe for any z.
double log_sigmoid(double z) {
    return z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
}

// Rows of sigma^0 and the updated value sigma_u^1 for the updates of one node.
// Parameter vectors over this data are full length n with coordinate u pinned
// to zero; the public packed form (length n-1) is converted at the boundary.
struct NodeData {
    int n = 0;
    int u = 0;
    std::size_t m_u = 0;
    std::vector<Spin> x;  // m_u x n
    std::vector<Spin> s;  // m_u

    const Spin* row(std::size_t t) const { return x.data() + t * static_cast<std::size_t>(n); }
};

NodeData gather_node(const SampleSet& samples, int u) {
    if (u < 0 || u >= samples.n()) throw std::invalid_argument("node index out of range");
    NodeData nd;
    nd.n = samples.n();
    nd.u = u;
    nd.m_u = samples.count_for(u);
    if (nd.m_u == 0) throw NoDataError(u, "no updates in sample set");
    nd.x.reserve(nd.m_u * static_cast<std::size_t>(nd.n));
    nd.s.reserve(nd.m_u);
    for (std::size_t t = 0; t < samples.size(); ++t) {
        if (samples.updated_node(t) != u) continue;
        auto s0 = samples.sigma0(t);
        nd.x.insert(nd.x.end(), s0.begin(), s0.end());
        nd.s.push_back(samples.sigma1_value(t));
    }
    return nd;
}

std::vector<double> unpack_params(int n, int u, std::span<const double> packed) {
    if (static_cast<int>(packed.size()) != n - 1)
        throw std::invalid_argument("coupling vector must have length n-1");
    std::vector<double> full(static_cast<std::size_t>(n), 0.0);
    for (int j = 0; j < n; ++j) {
        if (j == u) continue;
        full[static_cast<std::size_t>(j)] = packed[static_cast<std::size_t>(j < u ? j : j - 1)];
    }
    return full;
}

std::vector<double> pack_params(int n, int u, const std::vector<double>& full) {
    std::vector<double> packed(static_cast<std::size_t>(n - 1), 0.0);
    for (int j = 0; j < n; ++j) {
        if (j == u) continue;
        packed[static_cast<std::size_t>(j < u ? j : j - 1)] = full[static_cast<std::size_t>(j)];
    }
    return packed;
}

double dot_row(const NodeData& nd, std::size_t t, const std::vector<double>& full_J, double H) {
    const Spin* r = nd.row(t);
    double a = H;
    for (int j = 0; j < nd.n; ++j) a += full_J[static_cast<std::size_t>(j)] * static_cast<double>(r[j]);
    return a;
}

double l1_norm_skip(const std::vector<double>& full_J, int u) {
    double acc = 0.0;
    for (int j = 0; j < static_cast<int>(full_J.size()); ++j)
        if (j != u) acc += std::abs(full_J[static_cast<std::size_t>(j)]);
    return acc;
}

struct DIsoObjective {
    const NodeData& nd;
    std::size_t* clamps = nullptr;
    std::vector<double>* capture_e = nullptr;  // filled with the per-sample terms when set

    double value(const std::vector<double>& J, double H) const {
        long double acc = 0.0L;
        for (std::size_t t = 0; t < nd.m_u; ++t) {
            const double a = dot_row(nd, t, J, H);
            acc += clamped_exp(-static_cast<double>(nd.s[t]) * a, clamps);
        }
        return static_cast<double>(acc / nd.m_u);
    }

    double value_and_gradient(const std::vector<double>& J, double H, std::vector<double>& gJ,
                              double& gH) const {
        gJ.assign(static_cast<std::size_t>(nd.n), 0.0);
        long double acc = 0.0L, gh = 0.0L;
        for (std::size_t t = 0; t < nd.m_u; ++t) {
            const Spin* r = nd.row(t);
            const double s = nd.s[t];
            const double e = clamped_exp(-s * dot_row(nd, t, J, H), clamps);
            if (capture_e) (*capture_e)[t] = e;
            acc += e;
            const double c = -s * e;
            for (int j = 0; j < nd.n; ++j) gJ[static_cast<std::size_t>(j)] += c * r[j];
            gh += c;
        }
        const double inv = 1.0 / static_cast<double>(nd.m_u);
        for (auto& g : gJ) g *= inv;
        gJ[static_cast<std::size_t>(nd.u)] = 0.0;
        gH = static_cast<double>(gh) * inv;
        return static_cast<double>(acc) * inv;
    }
};

struct DPlObjective {
    const NodeData& nd;

    double value(const std::vector<double>& J, double H) const {
        long double acc = 0.0L;
        for (std::size_t t = 0; t < nd.m_u; ++t) {
            const double a = dot_row(nd, t, J, H);
            // ln(1 + s tanh a) = ln 2 + ln sigmoid(2 s a)
            acc += std::numbers::ln2 + log_sigmoid(2.0 * static_cast<double>(nd.s[t]) * a);
        }
        return -static_cast<double>(acc / nd.m_u);
    }

    double value_and_gradient(const std::vector<double>& J, double H, std::vector<double>& gJ,
                              double& gH) const {
        gJ.assign(static_cast<std::size_t>(nd.n), 0.0);
        long double acc = 0.0L, gh = 0.0L;
        for (std::size_t t = 0; t < nd.m_u; ++t) {
            const Spin* r = nd.row(t);
            const double s = nd.s[t];
            const double a = dot_row(nd, t, J, H);
            acc += std::numbers::ln2 + log_sigmoid(2.0 * s * a);
            const double c = std::tanh(a) - s;
            for (int j = 0; j < nd.n; ++j) gJ[static_cast<std::size_t>(j)] += c * r[j];
            gh += c;
        }
        const double inv = 1.0 / static_cast<double>(nd.m_u);
        for (auto& g : gJ) g *= inv;
        gJ[static_cast<std::size_t>(nd.u)] = 0.0;
        gH = static_cast<double>(gh) * inv;
        return -static_cast<double>(acc) * inv;
    }
};

double kkt_residual(const std::vector<double>& gJ, double gH, const std::vector<double>& J, int u,
                    double lambda) {
    double r = std::abs(gH);
    for (int j = 0; j < static_cast<int>(J.size()); ++j) {
        if (j == u) continue;
        const double g = gJ[static_cast<std::size_t>(j)];
        const double v = J[static_cast<std::size_t>(j)];
        if (v == 0.0)
            r = std::max(r, std::max(0.0, std::abs(g) - lambda));
        else
            r = std::max(r, std::abs(g + (v > 0.0 ? lambda : -lambda)));
    }
    return r;
}

std::vector<int> coordinate_order(const NodeData& nd, const SolverConfig& cfg, RngStream& shuffle) {
    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(nd.n));
    for (int j = 0; j < nd.n; ++j)
        if (j != nd.u) order.push_back(j);
    order.push_back(nd.n);  // the field slot
    if (!cfg.fixed_cycle) {
        for (std::size_t k = order.size(); k > 1; --k)
            std::swap(order[k - 1], order[static_cast<std::size_t>(shuffle.next_index(static_cast<int>(k)))]);
    }
    return order;
}

// Closed-form coordinate descent on D-ISO + lambda*l1 (Method::CoordinateDescent).
NeighborhoodEstimate solve_cd_diso(const NodeData& nd, double lambda, const SolverConfig& cfg) {
    NeighborhoodEstimate est;
    est.node = nd.u;
    std::vector<double> J(static_cast<std::size_t>(nd.n), 0.0);
    double H = 0.0;
    std::vector<double> e(nd.m_u);
    std::vector<double> gJ;
    double gH = 0.0;
    double loss = 1.0;
    RngStream shuffle = RngStream(cfg.shuffle_seed).derive(static_cast<std::uint64_t>(nd.u));
    DIsoObjective obj{nd, &est.overflow_clamps, &e};

    std::size_t sweep = 0;
    for (; sweep < cfg.max_iterations; ++sweep) {
        // Fused pass: refresh e from scratch (kills multiplicative drift) and
        // get the gradient for the KKT check of the current iterate.
        loss = obj.value_and_gradient(J, H, gJ, gH);
        if (kkt_residual(gJ, gH, J, nd.u, lambda) <= cfg.tolerance) {
            est.converged = true;
            break;
        }

        for (int coord : coordinate_order(nd, cfg, shuffle)) {
            const bool is_field = coord == nd.n;
            const double theta_old = is_field ? H : J[static_cast<std::size_t>(coord)];
            long double p = 0.0L, mneg = 0.0L;
            if (is_field) {
                for (std::size_t t = 0; t < nd.m_u; ++t)
                    (nd.s[t] > 0 ? p : mneg) += e[t];
            } else {
                for (std::size_t t = 0; t < nd.m_u; ++t)
                    (nd.s[t] * nd.row(t)[coord] > 0 ? p : mneg) += e[t];
            }
            const double ep = std::exp(theta_old), em = std::exp(-theta_old);
            const double a = static_cast<double>(p * ep + mneg * em) / static_cast<double>(nd.m_u);
            const double b = static_cast<double>(p * ep - mneg * em) / static_cast<double>(nd.m_u);
            const double mu = is_field ? 0.0 : lambda / a;
            const double theta_new = cd_coordinate_minimum(a, b, mu, cfg.cd_clamp);
            if (theta_new == theta_old) continue;
            const double fp = std::exp(-(theta_new - theta_old));
            const double fm = 1.0 / fp;
            if (is_field) {
                for (std::size_t t = 0; t < nd.m_u; ++t)
                    e[t] = std::min(e[t] * (nd.s[t] > 0 ? fp : fm), kExpCap);
                H = theta_new;
            } else {
                for (std::size_t t = 0; t < nd.m_u; ++t)
                    e[t] = std::min(e[t] * (nd.s[t] * nd.row(t)[coord] > 0 ? fp : fm), kExpCap);
                J[static_cast<std::size_t>(coord)] = theta_new;
            }
        }
    }

    est.couplings = pack_params(nd.n, nd.u, J);
    est.field = H;
    est.iterations = sweep;
    est.objective_value = loss + lambda * l1_norm_skip(J, nd.u);
    return est;
}

// Coordinate descent on D-PL + lambda*l1: each 1-d subproblem is solved by
// bisection on the (monotone) derivative.
NeighborhoodEstimate solve_cd_dpl(const NodeData& nd, double lambda, const SolverConfig& cfg) {
    NeighborhoodEstimate est;
    est.node = nd.u;
    std::vector<double> J(static_cast<std::size_t>(nd.n), 0.0);
    double H = 0.0;
    std::vector<double> z(nd.m_u, 0.0);  // z_t = s_t * (J . x_t + H)
    std::vector<double> gJ;
    double gH = 0.0;
    double loss = 0.0;
    RngStream shuffle = RngStream(cfg.shuffle_seed).derive(static_cast<std::uint64_t>(nd.u));
    DPlObjective obj{nd};

    // derivative of the smooth part along coordinate value v, given the
    // per-sample signs w_t and the rest c_t = z_t - w_t * v_old
    auto deriv = [&](const std::vector<double>& c, const std::vector<Spin>& w, double v) {
        long double g = 0.0L;
        for (std::size_t t = 0; t < nd.m_u; ++t)
            g += -static_cast<double>(w[t]) * (1.0 - std::tanh(c[t] + w[t] * v));
        return static_cast<double>(g) / static_cast<double>(nd.m_u);
    };

    std::vector<double> c(nd.m_u);
    std::vector<Spin> w(nd.m_u);
    std::size_t sweep = 0;
    for (; sweep < cfg.max_iterations; ++sweep) {
        loss = obj.value_and_gradient(J, H, gJ, gH);
        for (std::size_t t = 0; t < nd.m_u; ++t)
            z[t] = static_cast<double>(nd.s[t]) * dot_row(nd, t, J, H);
        if (kkt_residual(gJ, gH, J, nd.u, lambda) <= cfg.tolerance) {
            est.converged = true;
            break;
        }

        for (int coord : coordinate_order(nd, cfg, shuffle)) {
            const bool is_field = coord == nd.n;
            const double theta_old = is_field ? H : J[static_cast<std::size_t>(coord)];
            const double mu = is_field ? 0.0 : lambda;
            for (std::size_t t = 0; t < nd.m_u; ++t) {
                w[t] = is_field ? nd.s[t] : static_cast<Spin>(nd.s[t] * nd.row(t)[coord]);
                c[t] = z[t] - w[t] * theta_old;
            }
            const double g0 = deriv(c, w, 0.0);
            double theta_new = 0.0;
            if (std::abs(g0) > mu) {
                // deriv is increasing; solve deriv(v) = -mu on (0, clamp] or
                // deriv(v) = +mu on [-clamp, 0), pinning at the clamp when the
                // root falls outside.
                double lo, hi, target;
                if (g0 < -mu) {
                    target = -mu;
                    lo = 0.0;
                    hi = cfg.cd_clamp;
                    if (deriv(c, w, hi) < target) lo = hi;
                } else {
                    target = mu;
                    lo = -cfg.cd_clamp;
                    hi = 0.0;
                    if (deriv(c, w, lo) > target) hi = lo;
                }
                for (int it = 0; it < 60 && lo < hi; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    if (deriv(c, w, mid) < target) lo = mid;
                    else hi = mid;
                }
                theta_new = 0.5 * (lo + hi);
            }
            if (theta_new == theta_old) continue;
            for (std::size_t t = 0; t < nd.m_u; ++t) z[t] += w[t] * (theta_new - theta_old);
            if (is_field) H = theta_new;
            else J[static_cast<std::size_t>(coord)] = theta_new;
        }
    }

    est.couplings = pack_params(nd.n, nd.u, J);
    est.field = H;
    est.iterations = sweep;
    est.objective_value = loss + lambda * l1_norm_skip(J, nd.u);
    return est;
}

// ISTA with backtracking on the quadratic upper bound; the prox of
// lambda*l1 + box constraint is soft-threshold followed by clamping.
template <class Objective>
NeighborhoodEstimate solve_proximal_gradient(const NodeData& nd, double lambda,
                                             const SolverConfig& cfg, const Objective& obj) {
    NeighborhoodEstimate est;
    est.node = nd.u;
    std::vector<double> J(static_cast<std::size_t>(nd.n), 0.0);
    double H = 0.0;
    std::vector<double> gJ, candJ(static_cast<std::size_t>(nd.n), 0.0);
    double gH = 0.0;
    double f = obj.value_and_gradient(J, H, gJ, gH);
    double eta = 1.0;

    auto soft = [](double v, double k) {
        if (v > k) return v - k;
        if (v < -k) return v + k;
        return 0.0;
    };

    std::size_t iter = 0;
    for (; iter < cfg.max_iterations; ++iter) {
        if (kkt_residual(gJ, gH, J, nd.u, lambda) <= cfg.tolerance) {
            est.converged = true;
            break;
        }
        eta = std::min(1.0, eta * 2.0);
        double candH = H, f_cand = f;
        while (true) {
            for (int j = 0; j < nd.n; ++j) {
                if (j == nd.u) {
                    candJ[static_cast<std::size_t>(j)] = 0.0;
                    continue;
                }
                const double v = soft(J[static_cast<std::size_t>(j)] - eta * gJ[static_cast<std::size_t>(j)],
                                      eta * lambda);
                candJ[static_cast<std::size_t>(j)] = std::clamp(v, -cfg.cd_clamp, cfg.cd_clamp);
            }
            candH = std::clamp(H - eta * gH, -cfg.cd_clamp, cfg.cd_clamp);
            double lin = 0.0, sq = 0.0;
            for (int j = 0; j < nd.n; ++j) {
                const double dj = candJ[static_cast<std::size_t>(j)] - J[static_cast<std::size_t>(j)];
                lin += gJ[static_cast<std::size_t>(j)] * dj;
                sq += dj * dj;
            }
            const double dh = candH - H;
            lin += gH * dh;
            sq += dh * dh;
            f_cand = obj.value(candJ, candH);
            if (f_cand <= f + lin + sq / (2.0 * eta)) break;
            eta *= 0.5;
            if (eta < 1e-18) break;  // step collapsed; bail out unconverged
        }
        if (eta < 1e-18) break;
        J = candJ;
        H = candH;
        f = obj.value_and_gradient(J, H, gJ, gH);
    }

    est.couplings = pack_params(nd.n, nd.u, J);
    est.field = H;
    est.iterations = iter;
    est.objective_value = f + lambda * l1_norm_skip(J, nd.u);
    return est;
}

}  // namespace

double lambda_value(const RegularizationConfig& config, int n, std::size_t m_u) {
    if (config.c_lambda <= 0.0) throw std::invalid_argument("lambda_value: c_lambda must be positive");
    if (config.delta <= 0.0 || config.delta >= 1.0)
        throw std::invalid_argument("lambda_value: delta must lie in (0,1)");
    if (m_u == 0) throw std::invalid_argument("lambda_value: m_u must be >= 1");
    const double delta_prime = config.delta / n;
    return config.c_lambda *
           std::sqrt(std::log(static_cast<double>(n) * n / delta_prime) / static_cast<double>(m_u));
}

double d_iso_value(const SampleSet& samples, int u, std::span<const double> J_u, double H_u,
                   std::size_t* overflow_clamps) {
    NodeData nd = gather_node(samples, u);
    DIsoObjective obj{nd, overflow_clamps};
    return obj.value(unpack_params(nd.n, u, J_u), H_u);
}

std::vector<double> d_iso_gradient(const SampleSet& samples, int u, std::span<const double> J_u,
                                   double H_u) {
    NodeData nd = gather_node(samples, u);
    DIsoObjective obj{nd, nullptr};
    std::vector<double> gJ;
    double gH = 0.0;
    obj.value_and_gradient(unpack_params(nd.n, u, J_u), H_u, gJ, gH);
    std::vector<double> out = pack_params(nd.n, u, gJ);
    out.push_back(gH);
    return out;
}

double d_pl_value(const SampleSet& samples, int u, std::span<const double> J_u, double H_u) {
    NodeData nd = gather_node(samples, u);
    DPlObjective obj{nd};
    return obj.value(unpack_params(nd.n, u, J_u), H_u);
}

std::vector<double> d_pl_gradient(const SampleSet& samples, int u, std::span<const double> J_u,
                                  double H_u) {
    NodeData nd = gather_node(samples, u);
    DPlObjective obj{nd};
    std::vector<double> gJ;
    double gH = 0.0;
    obj.value_and_gradient(unpack_params(nd.n, u, J_u), H_u, gJ, gH);
    std::vector<double> out = pack_params(nd.n, u, gJ);
    out.push_back(gH);
    return out;
}

double cd_coordinate_minimum(double a, double b, double mu, double clamp) {
    if (!(a > 0.0)) throw std::invalid_argument("cd_coordinate_minimum: a must be positive");
    if (mu < 0.0) throw std::invalid_argument("cd_coordinate_minimum: mu must be nonnegative");
    double kappa = b / a;
    if (std::abs(kappa) > 1.0 + 1e-12)
        throw std::logic_error("cd_coordinate_minimum: |b/a| > 1, inconsistent coordinate data");
    kappa = std::clamp(kappa, -1.0, 1.0);
    if (mu >= std::abs(kappa)) return 0.0;
    const double disc = std::sqrt(std::max(0.0, 1.0 - kappa * kappa + mu * mu));
    // Mirror positive kappa through x(kappa) = -x(-kappa) so the evaluated
    // logarithm never divides by 1 - |kappa|.
    double x;
    if (kappa < 0.0) x = std::log((disc + mu) / (1.0 - kappa));
    else x = -std::log((disc + mu) / (1.0 + kappa));
    if (!std::isfinite(x)) x = kappa > 0.0 ? clamp : -clamp;
    return std::clamp(x, -clamp, clamp);
}

NeighborhoodEstimate fit_drise(const SampleSet& samples, int u, double lambda,
                               const SolverConfig& solver) {
    if (lambda < 0.0) throw std::invalid_argument("fit_drise: lambda must be nonnegative");
    NodeData nd = gather_node(samples, u);
    if (solver.method != SolverConfig::Method::ProximalGradient)
        return solve_cd_diso(nd, lambda, solver);
    NeighborhoodEstimate est;
    DIsoObjective obj{nd, &est.overflow_clamps};
    NeighborhoodEstimate out = solve_proximal_gradient(nd, lambda, solver, obj);
    out.overflow_clamps = est.overflow_clamps;
    return out;
}

NeighborhoodEstimate fit_drple(const SampleSet& samples, int u, double lambda,
                               const SolverConfig& solver) {
    if (lambda < 0.0) throw std::invalid_argument("fit_drple: lambda must be nonnegative");
    NodeData nd = gather_node(samples, u);
    if (solver.method == SolverConfig::Method::CoordinateDescent)
        return solve_cd_dpl(nd, lambda, solver);
    DPlObjective obj{nd};
    return solve_proximal_gradient(nd, lambda, solver, obj);
}

NeighborhoodEstimate fit_neighborhood(const SampleSet& samples, int u, double lambda,
                                      EstimatorKind kind, const SolverConfig& solver) {
    return kind == EstimatorKind::DRise ? fit_drise(samples, u, lambda, solver)
                                        : fit_drple(samples, u, lambda, solver);
}

GradientTermStats gradient_term_statistics(const IsingModel& model, int u, int k, std::size_t m,
                                           RngStream& rng, GradientTermKind kind) {
    if (u == k) throw std::invalid_argument("gradient_term_statistics: u and k must differ");
    if (u < 0 || u >= model.n() || k < 0 || k >= model.n())
        throw std::invalid_argument("gradient_term_statistics: node index out of range");
    if (m == 0) throw std::invalid_argument("gradient_term_statistics: m must be >= 1");
    for (double h : model.fields())
        if (h != 0.0)
            throw std::invalid_argument("gradient_term_statistics: requires a zero-field model");

    SpinConfiguration sigma(static_cast<std::size_t>(model.n()));
    long double mean = 0.0L, second = 0.0L;
    double max_abs = 0.0;
    for (std::size_t t = 0; t < m; ++t) {
        for (auto& s : sigma) s = rng.next_bernoulli(0.5) ? 1 : -1;
        const double a = model.local_field(u, sigma);
        const double p_plus = 1.0 / (1.0 + std::exp(-2.0 * a));
        const double s1 = rng.next_double() < p_plus ? 1.0 : -1.0;
        const double s0k = sigma[static_cast<std::size_t>(k)];
        double term;
        if (kind == GradientTermKind::DIsoX) term = -s1 * s0k * std::exp(-s1 * a);
        else term = s0k * (std::tanh(a) - s1);
        mean += term;
        second += term * term;
        max_abs = std::max(max_abs, std::abs(term));
    }
    return {static_cast<double>(mean / m), static_cast<double>(second / m), max_abs};
}

}  // namespace isingdyn
