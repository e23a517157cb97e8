#ifndef KINKFLOW_KINK_HPP
#define KINKFLOW_KINK_HPP

// Analytic kink profiles v_c(z) = tanh((z-c)/sqrt(2)), the surface tension
// constant m0, and the L2 projection of a state onto the kink family.
// Profiles and their derivatives are always evaluated in closed form, never
// by differencing the grid.

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "kinkflow/grid.hpp"

namespace kinkflow {

// double well G(u) = (1-u^2)^2 / 4
inline double well(double u) {
    double w = 1.0 - u * u;
    return 0.25 * w * w;
}
inline double well_d1(double u) { return u * u * u - u; }
inline double well_d2(double u) { return 3.0 * u * u - 1.0; }

struct KinkProfile {
    double c = 0.0;

    double value(double z) const { return std::tanh((z - c) / std::sqrt(2.0)); }
    // v_cz = (1 - v^2)/sqrt(2) > 0
    double dz(double z) const {
        double v = value(z);
        return (1.0 - v * v) / std::sqrt(2.0);
    }
    double dzz(double z) const {
        double v = value(z);
        return -v * (1.0 - v * v);
    }
    double dzzz(double z) const {
        double v = value(z);
        return (3.0 * v * v - 1.0) * (1.0 - v * v) / std::sqrt(2.0);
    }
};

// m0 = int_{-1}^{1} sqrt(2 G(s)) ds = 2 sqrt(2) / 3
inline double surface_tension() { return 2.0 * std::sqrt(2.0) / 3.0; }

// int_{-L}^{L} ( v_cz^2/2 + G(v_c) ) dz in closed form; the integrand equals
// sech^4((z-c)/sqrt(2)) / 2 and int sech^4 = tanh - tanh^3/3.
inline double kink_energy_truncated(double L, double c = 0.0) {
    auto prim = [](double w) {
        double t = std::tanh(w);
        return t - t * t * t / 3.0;
    };
    double lo = (-L - c) / std::sqrt(2.0);
    double hi = (L - c) / std::sqrt(2.0);
    return (prim(hi) - prim(lo)) / std::sqrt(2.0);
}

// transverse average of u = v_0 + f as a function of z (the projection
// functional only sees this 1d profile since v_c is one-dimensional)
inline std::vector<double> transverse_average_u(const RealField& f) {
    const GridSpec& spec = f.spec;
    int nz = spec.n_z;
    std::size_t n_pencils = spec.size() / nz;
    std::vector<double> avg(nz, 0.0);
    for (std::size_t p = 0; p < n_pencils; ++p)
        for (int j = 0; j < nz; ++j) avg[j] += f.values[p * nz + j];
    KinkProfile v0{0.0};
    for (int j = 0; j < nz; ++j)
        avg[j] = avg[j] / double(n_pencils) + v0.value(spec.z_coord(j));
    return avg;
}

namespace detail {

// phi(c) = int (ubar - v_c) v_cz dz  (Euler-Lagrange function of the shift)
inline double shift_residual(const GridSpec& spec, const std::vector<double>& ubar,
                             double c) {
    KinkProfile v{c};
    double s = 0.0;
    for (int j = 0; j < spec.n_z; ++j) {
        double z = spec.z_coord(j);
        s += (ubar[j] - v.value(z)) * v.dz(z);
    }
    return s * spec.dz();
}

// phi'(c) = int v_cz^2 - (ubar - v_c) v_czz dz
inline double shift_residual_deriv(const GridSpec& spec, const std::vector<double>& ubar,
                                   double c) {
    KinkProfile v{c};
    double s = 0.0;
    for (int j = 0; j < spec.n_z; ++j) {
        double z = spec.z_coord(j);
        double vz = v.dz(z);
        s += vz * vz - (ubar[j] - v.value(z)) * v.dzz(z);
    }
    return s * spec.dz();
}

inline double shift_l2_misfit(const GridSpec& spec, const std::vector<double>& ubar,
                              double c) {
    KinkProfile v{c};
    double s = 0.0;
    for (int j = 0; j < spec.n_z; ++j) {
        double dzv = ubar[j] - v.value(spec.z_coord(j));
        s += dzv * dzv;
    }
    return s * spec.dz();
}

}  // namespace detail

struct ProjectionFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// L2 projection of u = v_0 + f onto the kink family: returns the shift c with
// phi(c) = 0 (|phi| <= 1e-10) and phi'(c) > 0, the second-order condition for
// a genuine minimum of c -> ||u - v_c||_{L2}^2. Safeguarded Newton with
// bisection fallback; among multiple roots the one with smallest misfit wins.
inline double project_shift(const RealField& f_about_v0, double c_init) {
    const GridSpec& spec = f_about_v0.spec;
    std::vector<double> ubar = transverse_average_u(f_about_v0);
    const double tol = 1e-10;
    const double half_range = spec.L_z / 2.0;

    auto newton_from = [&](double lo, double hi, double c0) -> double {
        double a = lo, b = hi;
        double fa = detail::shift_residual(spec, ubar, a);
        double fb = detail::shift_residual(spec, ubar, b);
        if (fa == 0.0) return a;
        if (fb == 0.0) return b;
        double c = c0;
        for (int it = 0; it < 100; ++it) {
            double phi = detail::shift_residual(spec, ubar, c);
            if (std::abs(phi) <= tol) return c;
            if ((fa < 0.0) == (phi < 0.0)) { a = c; fa = phi; } else { b = c; fb = phi; }
            double dphi = detail::shift_residual_deriv(spec, ubar, c);
            double cn = (dphi != 0.0) ? c - phi / dphi : a - 1.0;
            if (!(cn > a && cn < b)) cn = 0.5 * (a + b);  // bisection fallback
            c = cn;
        }
        throw ProjectionFailure("project_shift: Newton/bisection did not converge");
    };

    // bracket sign changes of phi on a scan around c_init
    const int n_scan = 256;
    double prev_c = c_init - half_range;
    double prev_phi = detail::shift_residual(spec, ubar, prev_c);
    double best_c = std::numeric_limits<double>::quiet_NaN();
    double best_misfit = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= n_scan; ++i) {
        double ci = c_init - half_range + (2.0 * half_range * i) / n_scan;
        double phi = detail::shift_residual(spec, ubar, ci);
        if ((prev_phi <= 0.0) != (phi <= 0.0) || phi == 0.0) {
            double root = newton_from(prev_c, ci, 0.5 * (prev_c + ci));
            if (detail::shift_residual_deriv(spec, ubar, root) > 0.0) {
                double m = detail::shift_l2_misfit(spec, ubar, root);
                if (m < best_misfit) { best_misfit = m; best_c = root; }
            }
        }
        prev_c = ci;
        prev_phi = phi;
    }
    if (!std::isfinite(best_c))
        throw ProjectionFailure("project_shift: no sign change of the Euler-Lagrange "
                                "residual within |c - c_init| <= L_z/2");
    return best_c;
}

// f_c = u - v_c on the grid, built from f (the perturbation about v_0) and
// the analytic kink difference v_0 - v_c
inline RealField shifted_perturbation(const RealField& f_about_v0, double c) {
    const GridSpec& spec = f_about_v0.spec;
    KinkProfile v0{0.0}, vc{c};
    std::vector<double> diff(spec.n_z);
    for (int j = 0; j < spec.n_z; ++j) {
        double z = spec.z_coord(j);
        diff[j] = v0.value(z) - vc.value(z);
    }
    RealField fc(spec);
    int nz = spec.n_z;
    std::size_t n_pencils = spec.size() / nz;
    for (std::size_t p = 0; p < n_pencils; ++p)
        for (int j = 0; j < nz; ++j)
            fc.values[p * nz + j] = f_about_v0.values[p * nz + j] + diff[j];
    return fc;
}

// ||f_c||_inf / ||f_cbar||_inf (0 when the numerator vanishes; +inf guarded)
inline double shift_comparison_monitor(const RealField& f_about_v0, double c,
                                       double c_bar) {
    double num = sup_norm(shifted_perturbation(f_about_v0, c));
    if (num == 0.0) return 0.0;
    double den = sup_norm(shifted_perturbation(f_about_v0, c_bar));
    if (den == 0.0) return std::numeric_limits<double>::infinity();
    return num / den;
}

}  // namespace kinkflow

#endif
