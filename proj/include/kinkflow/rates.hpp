#ifndef KINKFLOW_RATES_HPP
#define KINKFLOW_RATES_HPP

// Trajectory analysis: log-log power-law fits, inequality monitors, and the
// standalone saturated ODE system
//   dE/dt = -D,
//   dH/dt = c*^{1/2} ( (c^2 D)^{1/2} + E^{3/2 - d'/12} D^{d'/12} ),
// closed either algebraically (max-H: E = (HD)^{1/2} + c*^2 D solved for D)
// or differentially (max-D: dD/dt = D^{3/2} + E^{1 - d'/6} D^{1 + d'/6},
// capped so E stays non-negative), with c^2 = (HE)^{1/2} + c* E.

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "kinkflow/evolution.hpp"

namespace kinkflow {

struct PowerLawFit {
    double slope = 0.0;
    double prefactor = 0.0;
    double residual = 0.0;   // max |log y - (log A + slope log t)|
    int n_points = 0;
};

// OLS of log y on log t over t in [window_lo, window_hi]
inline PowerLawFit fit_power_law(const std::vector<double>& t,
                                 const std::vector<double>& y,
                                 double window_lo, double window_hi) {
    if (t.size() != y.size())
        throw std::invalid_argument("fit_power_law: mismatched series lengths");
    std::vector<double> lt, ly;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < window_lo || t[i] > window_hi) continue;
        if (!(y[i] > 0.0))
            throw std::invalid_argument("fit_power_law: non-positive value in window");
        lt.push_back(std::log(t[i]));
        ly.push_back(std::log(y[i]));
    }
    if (lt.size() < 10)
        throw std::invalid_argument("fit_power_law: fewer than 10 points in window");
    double n = double(lt.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lt.size(); ++i) {
        sx += lt[i]; sy += ly[i]; sxx += lt[i] * lt[i]; sxy += lt[i] * ly[i];
    }
    PowerLawFit fit;
    fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    double intercept = (sy - fit.slope * sx) / n;
    fit.prefactor = std::exp(intercept);
    for (std::size_t i = 0; i < lt.size(); ++i)
        fit.residual = std::max(fit.residual,
                                std::abs(ly[i] - intercept - fit.slope * lt[i]));
    fit.n_points = int(lt.size());
    return fit;
}

struct InequalityMonitor {
    double max_ratio = 0.0;
    int n_used = 0;
    int n_skipped = 0;   // records where the guarded RHS was below 1e-14
};

// max over records of the precomputed inequality ratios; records where the
// diagnostics marked the denominator degenerate (ratio stored as 0 with a
// tiny state) are counted as skipped
inline std::map<std::string, InequalityMonitor> monitor_inequalities(
    const Trajectory& traj) {
    std::map<std::string, InequalityMonitor> out;
    auto scan = [&](const std::string& key, auto&& get, auto&& degenerate) {
        InequalityMonitor m;
        for (const Diagnostics& r : traj.records) {
            if (degenerate(r)) { ++m.n_skipped; continue; }
            m.max_ratio = std::max(m.max_ratio, get(r));
            ++m.n_used;
        }
        out[key] = m;
    };
    auto tiny = [](const Diagnostics& r) {
        return r.energy_gap < 1e-14 || r.dissipation < 1e-14;
    };
    scan("alg_c", [](const Diagnostics& r) { return r.alg_ratio_c; },
         [&](const Diagnostics& r) { return r.energy_gap < 1e-14; });
    scan("alg_E", [](const Diagnostics& r) { return r.alg_ratio_E; }, tiny);
    scan("gn", [](const Diagnostics& r) { return r.gn_ratio; }, tiny);
    return out;
}

// ---------------------------------------------------------------------------
// saturated ODE system

enum class OdeVariant { max_H, max_D };

struct OdeParams {
    double E0 = 1.0;
    double H0 = 1.0;
    double c_star = 1.0;
    int d_prime = 3;
    OdeVariant variant = OdeVariant::max_H;
    double t_end = 1e4;
    double rel_tol = 1e-8;

    void validate() const {
        if (!(E0 > 0.0) || !(H0 > 0.0))
            throw std::invalid_argument("OdeParams: E0, H0 must be positive");
        if (c_star < 1.0)
            throw std::invalid_argument("OdeParams: c_star must be >= 1");
        if (d_prime < 3 || d_prime > 5)
            throw std::invalid_argument("OdeParams: d_prime in {3,4,5}");
    }

    // the ODE lemma's data functional
    double G0() const { return H0 + c_star * c_star * (1.0 + E0 * E0) * E0; }
};

struct OdeState {
    double t = 0.0, E = 0.0, H = 0.0, D = 0.0, c_sq = 0.0;
};

namespace detail {

// positive root of c*^2 s^2 + sqrt(H) s - E = 0 in s = sqrt(D)
inline double algebraic_D(double E, double H, double c_star) {
    if (E <= 0.0) return 0.0;
    double cs2 = c_star * c_star;
    double disc = H + 4.0 * cs2 * E;
    double s = (-std::sqrt(H) + std::sqrt(disc)) / (2.0 * cs2);
    return s * s;
}

inline double c_squared(double E, double H, double c_star) {
    if (E <= 0.0) return 0.0;
    return std::sqrt(H * E) + c_star * E;
}

}  // namespace detail

// adaptive Heun integration of the saturated system; every accepted step is
// emitted as an OdeState
inline std::vector<OdeState> ode_integrate(const OdeParams& p) {
    p.validate();
    const int nvar = (p.variant == OdeVariant::max_D) ? 3 : 2;  // E, H [, D]
    std::array<double, 3> y{p.E0, p.H0, 0.0};
    if (nvar == 3) y[2] = detail::algebraic_D(p.E0, p.H0, p.c_star);

    auto current_D = [&](const std::array<double, 3>& v) {
        if (v[0] <= 0.0) return 0.0;
        return (nvar == 3) ? std::max(v[2], 0.0)
                           : detail::algebraic_D(v[0], v[1], p.c_star);
    };
    auto rhs = [&](const std::array<double, 3>& v) {
        std::array<double, 3> d{};
        if (v[0] <= 0.0) return d;  // flow stops once the gap is exhausted
        double E = v[0], H = std::max(v[1], 0.0);
        double D = current_D(v);
        double c2 = detail::c_squared(E, H, p.c_star);
        d[0] = -D;
        d[1] = std::sqrt(p.c_star) *
               (std::sqrt(c2 * D) +
                std::pow(E, 1.5 - p.d_prime / 12.0) * std::pow(D, p.d_prime / 12.0));
        if (nvar == 3)
            d[2] = std::pow(D, 1.5) +
                   std::pow(E, 1.0 - p.d_prime / 6.0) * std::pow(D, 1.0 + p.d_prime / 6.0);
        return d;
    };

    std::vector<OdeState> out;
    auto emit = [&](double t, const std::array<double, 3>& v) {
        OdeState s;
        s.t = t;
        s.E = std::max(v[0], 0.0);
        s.H = v[1];
        s.D = current_D(v);
        s.c_sq = detail::c_squared(s.E, v[1], p.c_star);
        out.push_back(s);
    };

    double t = 0.0;
    emit(t, y);
    double h = 1e-6 * std::min(1.0, p.E0 / std::max(current_D(y), 1e-30));
    while (t < p.t_end) {
        h = std::min(h, p.t_end - t);
        auto k1 = rhs(y);
        std::array<double, 3> ye{};
        for (int i = 0; i < nvar; ++i) ye[i] = y[i] + h * k1[i];
        // cap: if the Euler predictor exhausts E, land on E = 0 with D = 0
        if (ye[0] < 0.0 && k1[0] < 0.0) {
            double h0 = y[0] / (-k1[0]);
            t += h0;
            y[0] = 0.0;
            y[1] += h0 * k1[1];
            if (nvar == 3) y[2] = 0.0;
            emit(t, y);
            break;
        }
        auto k2 = rhs(ye);
        std::array<double, 3> yh{};
        double err = 0.0;
        for (int i = 0; i < nvar; ++i) {
            yh[i] = y[i] + 0.5 * h * (k1[i] + k2[i]);
            double scale = std::abs(y[i]) + std::abs(yh[i]) + 1e-12;
            err = std::max(err, std::abs(yh[i] - ye[i]) / scale);
        }
        if (err <= p.rel_tol) {
            t += h;
            y = yh;
            emit(t, y);
        }
        double factor = (err > 0.0) ? 0.9 * std::sqrt(p.rel_tol / err) : 4.0;
        h *= std::clamp(factor, 0.2, 4.0);
    }
    return out;
}

// max over t of LHS / (conclusion RHS with constant 1), one entry per
// conclusion of the ODE lemma
struct OdeBoundReport {
    double ratio_E_decrease = 0.0;   // E(t) / E0
    double ratio_E_decay = 0.0;      // E(t) t / G0
    double ratio_c_static = 0.0;     // c^2 / (G0^{1/2} E0^{1/2})
    double ratio_c_decay = 0.0;      // c^2 t^{1/2} / G0
    double ratio_H = 0.0;            // H(t) / G0
    double ratio_D = 0.0;            // D(t) t^2 / (G0 + G0^2 + E0 G0^{q} t^{-r})
};

inline OdeBoundReport check_ode_bounds(const std::vector<OdeState>& states,
                                       const OdeParams& p) {
    if (states.empty()) throw std::invalid_argument("check_ode_bounds: empty states");
    const double G0 = p.G0();
    const double E0 = states.front().E;
    const double q = 6.0 / (6.0 - p.d_prime);
    const double r = (2.0 * p.d_prime - 6.0) / (6.0 - p.d_prime);
    OdeBoundReport rep;
    for (const OdeState& s : states) {
        rep.ratio_E_decrease = std::max(rep.ratio_E_decrease, s.E / E0);
        rep.ratio_c_static =
            std::max(rep.ratio_c_static, s.c_sq / std::sqrt(G0 * E0));
        rep.ratio_H = std::max(rep.ratio_H, s.H / G0);
        if (s.t > 0.0) {
            rep.ratio_E_decay = std::max(rep.ratio_E_decay, s.E * s.t / G0);
            rep.ratio_c_decay =
                std::max(rep.ratio_c_decay, s.c_sq * std::sqrt(s.t) / G0);
            double rhs = (G0 + G0 * G0 + E0 * std::pow(G0, q) * std::pow(s.t, -r)) /
                         (s.t * s.t);
            rep.ratio_D = std::max(rep.ratio_D, s.D / rhs);
        }
    }
    return rep;
}

inline double max_bound_ratio(const OdeBoundReport& r) {
    return std::max({r.ratio_E_decrease, r.ratio_E_decay, r.ratio_c_static,
                     r.ratio_c_decay, r.ratio_H, r.ratio_D});
}

}  // namespace kinkflow

#endif
