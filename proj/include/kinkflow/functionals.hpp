#ifndef KINKFLOW_FUNCTIONALS_HPP
#define KINKFLOW_FUNCTIONALS_HPP

// Scalar functionals of a state u = v_ref + f: energy gap, dissipation,
// squared Hdot^{-1} distance, linearized gap/dissipation, the
// Lassoued-Mironescu form, and the Hardy ratio. All derivatives are
// spectral; kink terms are analytic.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "kinkflow/grid.hpp"
#include "kinkflow/kink.hpp"

namespace kinkflow {

inline int effective_dim(int d) { return std::max(3, d); }  // d' = max(3,d)

namespace detail {

struct KinkLine {
    std::vector<double> v, vz, vzz;
};

inline KinkLine kink_line(const GridSpec& spec, double c) {
    KinkProfile k{c};
    KinkLine line;
    line.v.resize(spec.n_z);
    line.vz.resize(spec.n_z);
    line.vzz.resize(spec.n_z);
    for (int j = 0; j < spec.n_z; ++j) {
        double z = spec.z_coord(j);
        line.v[j] = k.value(z);
        line.vz[j] = k.dz(z);
        line.vzz[j] = k.dzz(z);
    }
    return line;
}

// apply a z-profile multiplicatively: out(x', z) = f(x', z) * line(z)
inline RealField mul_line(const RealField& f, const std::vector<double>& line) {
    RealField out(f.spec);
    int nz = f.spec.n_z;
    std::size_t n_pencils = f.size() / nz;
    for (std::size_t p = 0; p < n_pencils; ++p)
        for (int j = 0; j < nz; ++j)
            out.values[p * nz + j] = f.values[p * nz + j] * line[j];
    return out;
}

}  // namespace detail

// N = G'(v_ref + f) - G'(v_ref) evaluated pointwise, with the 2/3-rule
// applied to the result when the grid requests dealiasing
inline RealField nonlinearity(const RealField& f, double c_ref = 0.0) {
    const GridSpec& spec = f.spec;
    detail::KinkLine line = detail::kink_line(spec, c_ref);
    RealField N(spec);
    int nz = spec.n_z;
    std::size_t n_pencils = f.size() / nz;
    for (std::size_t p = 0; p < n_pencils; ++p)
        for (int j = 0; j < nz; ++j) {
            std::size_t i = p * nz + j;
            N.values[i] = well_d1(line.v[j] + f.values[i]) - well_d1(line.v[j]);
        }
    if (spec.dealias) {
        SpectralField Nh = forward_transform(N);
        apply_dealias(Nh);
        return inverse_transform(Nh);
    }
    return N;
}

// Energy gap E(u) - m0 for u = v_0 + f, computed as a perturbative
// difference so that no large terms cancel:
//   E = int 1/2 |grad f|^2 + v_0z f_z + [G(v_0+f) - G(v_0)] dx
//       + (E_z^trunc(v_0) - m0).
inline double energy_gap(const RealField& f) {
    if (f.first_bad() != std::size_t(-1))
        throw std::invalid_argument("energy_gap: non-finite input");
    const GridSpec& spec = f.spec;
    SpectralField F = forward_transform(f);
    std::array<double, 4> mom = spectral_moments(F);

    std::array<int, max_dim> dz_order{};
    dz_order[spec.d - 1] = 1;
    RealField fz = inverse_transform(differentiate(F, dz_order));

    detail::KinkLine line = detail::kink_line(spec, 0.0);
    double pot = 0.0, cross = 0.0;
    int nz = spec.n_z;
    std::size_t n_pencils = f.size() / nz;
    for (std::size_t p = 0; p < n_pencils; ++p)
        for (int j = 0; j < nz; ++j) {
            std::size_t i = p * nz + j;
            pot += well(line.v[j] + f.values[i]) - well(line.v[j]);
            cross += line.vz[j] * fz.values[i];
        }
    double cell = spec.cell();
    double tail = kink_energy_truncated(spec.L_z) - surface_tension();
    double e = 0.5 * mom[1] + cross * cell + pot * cell + tail;
    if (e < -1e-9)
        throw std::runtime_error("energy_gap: negative beyond truncation tolerance");
    return e;
}

// D(u) = || grad (Delta u - G'(u)) ||^2 with
// Delta u - G'(u) = Delta f - N  (the analytic kink terms cancel by the
// Euler-Lagrange equation)
inline double dissipation(const RealField& f) {
    const GridSpec& spec = f.spec;
    SpectralField F = forward_transform(f);
    SpectralField Nh = forward_transform(nonlinearity(f));
    std::vector<double> ksq = ksq_table(spec);
    double s = 0.0;
    for (std::size_t i = 0; i < F.size(); ++i) {
        cplx mu = -ksq[i] * F.coeffs[i] - Nh.coeffs[i];
        s += ksq[i] * std::norm(mu);
    }
    return s * spec.volume();
}

// H = sum_{xi != 0} |fhat_0(xi)|^2 / (2 pi |xi|)^2, the Fourier form of the
// squared Hdot^{-1} norm; requires zero mass
inline double hminus1_sq(const SpectralField& F) {
    const GridSpec& spec = F.spec;
    double mass = F.coeffs[0].real() * spec.volume();
    if (std::abs(mass) > 1e-10)
        throw std::invalid_argument(
            "hminus1_sq: nonzero mass, the Hdot^{-1} distance is +infinity");
    std::vector<double> ksq = ksq_table(spec);
    double s = 0.0;
    for (std::size_t i = 1; i < F.size(); ++i)
        if (ksq[i] > 0.0) s += std::norm(F.coeffs[i]) / ksq[i];
    return s * spec.volume();
}

inline double hminus1_sq(const RealField& f0) {
    return hminus1_sq(forward_transform(f0));
}

// E_l(f) = int |grad f|^2 + G''(v_c) f^2
inline double linearized_gap(const RealField& f, double c) {
    const GridSpec& spec = f.spec;
    SpectralField F = forward_transform(f);
    std::array<double, 4> mom = spectral_moments(F);
    detail::KinkLine line = detail::kink_line(spec, c);
    double pot = 0.0;
    int nz = spec.n_z;
    std::size_t n_pencils = f.size() / nz;
    for (std::size_t p = 0; p < n_pencils; ++p)
        for (int j = 0; j < nz; ++j) {
            double fv = f.values[p * nz + j];
            pot += well_d2(line.v[j]) * fv * fv;
        }
    return mom[1] + pot * spec.cell();
}

// D_l(f) = int |grad(-Delta f + G''(v_c) f)|^2. Note the operator uses G''
// (the linearization of G'), matching every use of D_l downstream.
inline double linearized_dissipation(const RealField& f, double c) {
    const GridSpec& spec = f.spec;
    SpectralField F = forward_transform(f);
    RealField lap = inverse_transform(laplacian(F));
    detail::KinkLine line = detail::kink_line(spec, c);
    RealField w(spec);
    int nz = spec.n_z;
    std::size_t n_pencils = f.size() / nz;
    for (std::size_t p = 0; p < n_pencils; ++p)
        for (int j = 0; j < nz; ++j) {
            std::size_t i = p * nz + j;
            w.values[i] = -lap.values[i] + well_d2(line.v[j]) * f.values[i];
        }
    SpectralField W = forward_transform(w);
    std::array<double, 4> mom = spectral_moments(W);
    return mom[1];
}

// Lassoued-Mironescu evaluation of E_l: with g = f / v_cz,
//   E_l(f) = int v_cz^2 |grad g|^2
//          = int |grad' f|^2 + (f_z - f v_czz / v_cz)^2 ,
// restricted to the window |z - c| <= z_cut where v_cz does not underflow.
inline double linearized_gap_lm(const RealField& f, double c) {
    const GridSpec& spec = f.spec;
    double z_cut = spec.L_z - 10.0;

    // f must be negligible near the z-boundary for the window truncation
    // (and the periodization) to be meaningful
    {
        double edge = 0.9 * spec.L_z;
        int nz = spec.n_z;
        std::size_t n_pencils = f.size() / nz;
        double m = 0.0;
        for (int j = 0; j < nz; ++j) {
            if (std::abs(spec.z_coord(j)) < edge) continue;
            for (std::size_t p = 0; p < n_pencils; ++p)
                m = std::max(m, std::abs(f.values[p * nz + j]));
        }
        if (m > 1e-6)
            throw std::invalid_argument(
                "linearized_gap_lm: field does not decay at the z-boundary");
    }

    SpectralField F = forward_transform(f);
    std::array<int, max_dim> dz_order{};
    dz_order[spec.d - 1] = 1;
    RealField fz = inverse_transform(differentiate(F, dz_order));

    std::vector<RealField> ft;  // transverse first derivatives
    for (int a = 0; a < spec.d - 1; ++a) {
        std::array<int, max_dim> order{};
        order[a] = 1;
        ft.push_back(inverse_transform(differentiate(F, order)));
    }

    detail::KinkLine line = detail::kink_line(spec, c);
    double s = 0.0;
    int nz = spec.n_z;
    std::size_t n_pencils = f.size() / nz;
    for (int j = 0; j < nz; ++j) {
        double z = spec.z_coord(j);
        if (std::abs(z - c) > z_cut) continue;
        double ratio = line.vzz[j] / line.vz[j];
        for (std::size_t p = 0; p < n_pencils; ++p) {
            std::size_t i = p * nz + j;
            double radial = fz.values[i] - f.values[i] * ratio;
            double acc = radial * radial;
            for (const auto& g : ft) acc += g.values[i] * g.values[i];
            s += acc;
        }
    }
    return s * spec.cell();
}

// [int f^2 / ((z-c)^2 + 1)] / ||grad f||^2 for f orthogonal to v_cz
inline double hardy_ratio(const RealField& f, double c) {
    const GridSpec& spec = f.spec;
    detail::KinkLine line = detail::kink_line(spec, c);
    double ortho = integrate(detail::mul_line(f, line.vz));
    double fl2 = std::sqrt(l2_norm_sq(f));
    if (fl2 == 0.0) return 0.0;
    if (std::abs(ortho) > 1e-8 * (1.0 + fl2))
        throw std::invalid_argument("hardy_ratio: f not orthogonal to v_cz");
    SpectralField F = forward_transform(f);
    std::array<double, 4> mom = spectral_moments(F);
    if (mom[1] == 0.0) return 0.0;
    double num = 0.0;
    int nz = spec.n_z;
    std::size_t n_pencils = f.size() / nz;
    for (int j = 0; j < nz; ++j) {
        double z = spec.z_coord(j);
        double w = 1.0 / ((z - c) * (z - c) + 1.0);
        for (std::size_t p = 0; p < n_pencils; ++p) {
            double fv = f.values[p * nz + j];
            num += w * fv * fv;
        }
    }
    return num * spec.cell() / mom[1];
}

// one time-stamped record of every monitored functional
struct Diagnostics {
    double t = 0;
    double energy_gap = 0;
    double dissipation = 0;
    double hminus1_sq = 0;
    double shift = 0;
    double f_l2 = 0;       // norms of f_c = u - v_c
    double f_grad_l2 = 0;
    double f_sup = 0;
    double gn_ratio = 0;   // ||f_c||_inf / (E^{1/2 - d'/12} D^{d'/12})
    double mass = 0;       // int f_0 dx
    double alg_ratio_c = 0;   // c^2 / ((H E)^{1/2} + (|c|+1) E)
    double alg_ratio_E = 0;   // E / ((H D)^{1/2} + (|c|+1)^2 D)
};

inline Diagnostics diagnostics(const RealField& f_about_v0, double t,
                               double c_warm_start = 0.0) {
    const GridSpec& spec = f_about_v0.spec;
    Diagnostics rec;
    rec.t = t;
    rec.energy_gap = energy_gap(f_about_v0);
    rec.dissipation = dissipation(f_about_v0);

    SpectralField F = forward_transform(f_about_v0);
    rec.mass = F.coeffs[0].real() * spec.volume();
    rec.hminus1_sq = hminus1_sq(F);

    rec.shift = project_shift(f_about_v0, c_warm_start);
    RealField fc = shifted_perturbation(f_about_v0, rec.shift);
    SpectralField Fc = forward_transform(fc);
    std::array<double, 4> mom = spectral_moments(Fc);
    rec.f_l2 = std::sqrt(mom[0]);
    rec.f_grad_l2 = std::sqrt(mom[1]);
    rec.f_sup = sup_norm(fc);

    double dp = effective_dim(spec.d);
    double e = rec.energy_gap, D = rec.dissipation, H = rec.hminus1_sq;
    double c = rec.shift;
    double gn_den = std::pow(e, 0.5 - dp / 12.0) * std::pow(D, dp / 12.0);
    rec.gn_ratio = (gn_den > 1e-14) ? rec.f_sup / gn_den : 0.0;
    double den_c = std::sqrt(H * e) + (std::abs(c) + 1.0) * e;
    rec.alg_ratio_c = (den_c > 1e-14) ? c * c / den_c : 0.0;
    double den_E = std::sqrt(H * D) + (std::abs(c) + 1.0) * (std::abs(c) + 1.0) * D;
    rec.alg_ratio_E = (den_E > 1e-14) ? e / den_E : 0.0;
    return rec;
}

}  // namespace kinkflow

#endif
