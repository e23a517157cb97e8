#include <catch_amalgamated.hpp>

#include <random>

#include "kinkflow/calibration.hpp"
#include "kinkflow/functionals.hpp"

using namespace kinkflow;

namespace {

GridSpec small_grid() {
    GridSpec s;
    s.d = 2;
    s.n_transverse = 8;
    s.n_z = 256;
    s.L_z = 25.0;
    return s;
}

RealField kink_difference(const GridSpec& spec, double c) {
    RealField f(spec);
    KinkProfile v0{0.0}, vc{c};
    int nz = spec.n_z;
    std::size_t n_pencils = spec.size() / nz;
    for (int j = 0; j < nz; ++j) {
        double diff = vc.value(spec.z_coord(j)) - v0.value(spec.z_coord(j));
        for (std::size_t p = 0; p < n_pencils; ++p) f.values[p * nz + j] = diff;
    }
    return f;
}

// random smooth field localized in z: low modes under a gaussian envelope
RealField random_windowed(const GridSpec& spec, std::uint64_t seed, double amp) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int n_modes = 4;
    std::vector<double> az(n_modes), pz(n_modes), at(n_modes), pt(n_modes);
    for (int m = 0; m < n_modes; ++m) {
        az[m] = u(rng); pz[m] = pi * u(rng);
        at[m] = u(rng); pt[m] = pi * u(rng);
    }
    RealField f(spec);
    int nz = spec.n_z;
    std::size_t n_pencils = spec.size() / nz;
    for (std::size_t p = 0; p < n_pencils; ++p) {
        double x1 = spec.transverse_coord(int(p));
        for (int j = 0; j < nz; ++j) {
            double z = spec.z_coord(j);
            double s = 0.0;
            for (int m = 0; m < n_modes; ++m)
                s += az[m] * std::cos(2.0 * pi * (m + 1) * z / 20.0 + pz[m]) *
                     (1.0 + 0.5 * at[m] * std::cos(2.0 * pi * (m % 2 + 1) * x1 + pt[m]));
            f.values[p * nz + j] = amp * s * std::exp(-z * z / 8.0);
        }
    }
    return f;
}

// remove the v_cz component so that f ⊥ v_cz
void orthogonalize(RealField& f, double c) {
    const GridSpec& spec = f.spec;
    detail::KinkLine line = detail::kink_line(spec, c);
    RealField vz(spec);
    int nz = spec.n_z;
    std::size_t n_pencils = spec.size() / nz;
    for (std::size_t p = 0; p < n_pencils; ++p)
        for (int j = 0; j < nz; ++j) vz.values[p * nz + j] = line.vz[j];
    double alpha = integrate(detail::mul_line(f, line.vz)) / l2_norm_sq(vz);
    for (std::size_t i = 0; i < f.size(); ++i) f.values[i] -= alpha * vz.values[i];
}

}  // namespace

TEST_CASE("energy gap vanishes on kinks") {
    GridSpec spec = small_grid();
    for (double c : {0.0, 0.5, -1.2})
        REQUIRE(std::abs(energy_gap(kink_difference(spec, c))) < 1e-9);
}

TEST_CASE("energy gap quadratic expansion matches the linearized gap") {
    GridSpec spec = small_grid();
    RealField w = random_windowed(spec, 31, 1.0);
    double el = linearized_gap(w, 0.0);
    double prev = 0.0;
    for (double eps : {1e-2, 5e-3}) {
        RealField f(spec);
        for (std::size_t i = 0; i < f.size(); ++i) f.values[i] = eps * w.values[i];
        double ratio = energy_gap(f) / (eps * eps);
        REQUIRE(std::abs(ratio - 0.5 * el) < 0.05 * (1.0 + 0.5 * el));
        if (prev != 0.0)
            REQUIRE(std::abs(ratio - 0.5 * el) < std::abs(prev - 0.5 * el));
        prev = ratio;
    }
}

TEST_CASE("dissipation vanishes on kinks and has the linearized limit") {
    GridSpec spec = small_grid();
    for (double c : {0.0, 0.8})
        REQUIRE(std::abs(dissipation(kink_difference(spec, c))) < 1e-9);

    RealField w = random_windowed(spec, 32, 1.0);
    double dl = linearized_dissipation(w, 0.0);
    for (double eps : {1e-2, 5e-3}) {
        RealField f(spec);
        for (std::size_t i = 0; i < f.size(); ++i) f.values[i] = eps * w.values[i];
        double ratio = dissipation(f) / (eps * eps);
        REQUIRE(std::abs(ratio - dl) < 0.05 * (1.0 + dl));
    }
}

TEST_CASE("hminus1 closed form and Poisson oracle") {
    GridSpec spec = small_grid();
    SECTION("zero field") { REQUIRE(hminus1_sq(RealField(spec)) == 0.0); }
    SECTION("single z-mode") {
        RealField f(spec);
        double a = 0.7;
        int k = 3;
        int nz = spec.n_z;
        std::size_t n_pencils = spec.size() / nz;
        for (std::size_t p = 0; p < n_pencils; ++p)
            for (int j = 0; j < nz; ++j)
                f.values[p * nz + j] =
                    a * std::sin(2.0 * pi * k * spec.z_coord(j) / (2.0 * spec.L_z));
        double xi = k / (2.0 * spec.L_z);
        double exact = a * a * spec.volume() / 2.0 / (4.0 * pi * pi * xi * xi);
        REQUIRE(std::abs(hminus1_sq(f) - exact) < 1e-10 * exact);
    }
    SECTION("Poisson-solve representation") {
        RealField f = random_windowed(spec, 33, 0.1);
        double mean = integrate(f) / spec.volume();
        for (auto& v : f.values) v -= mean;
        SpectralField F = forward_transform(f);
        F.coeffs[0] = cplx{};
        // solve -Delta phi = f spectrally, compare int |grad phi|^2
        std::vector<double> ksq = ksq_table(spec);
        SpectralField Phi(spec);
        for (std::size_t i = 1; i < F.size(); ++i)
            if (ksq[i] > 0.0) Phi.coeffs[i] = F.coeffs[i] / ksq[i];
        std::array<double, 4> mom = spectral_moments(Phi);
        double h = hminus1_sq(inverse_transform(F));
        REQUIRE(std::abs(h - mom[1]) < 1e-10 * (1.0 + mom[1]));
    }
    SECTION("nonzero mass rejected") {
        RealField f(spec);
        for (auto& v : f.values) v = 0.01;
        REQUIRE_THROWS_WITH(hminus1_sq(f),
                            Catch::Matchers::ContainsSubstring("infinity"));
    }
}

TEST_CASE("linearized gap kernel mode and positivity") {
    GridSpec spec = small_grid();
    double c = 0.3;
    detail::KinkLine line = detail::kink_line(spec, c);
    RealField vz(spec);
    int nz = spec.n_z;
    std::size_t n_pencils = spec.size() / nz;
    for (std::size_t p = 0; p < n_pencils; ++p)
        for (int j = 0; j < nz; ++j) vz.values[p * nz + j] = line.vz[j];

    REQUIRE(std::abs(linearized_gap(vz, c)) < 1e-9);
    REQUIRE(std::abs(linearized_dissipation(vz, c)) < 1e-9);
    REQUIRE(linearized_gap(RealField(spec), c) == 0.0);

    for (std::uint64_t seed : {41ull, 42ull, 43ull, 44ull, 45ull}) {
        RealField f = random_windowed(spec, seed, 0.5);
        REQUIRE(linearized_gap(f, c) >= -1e-12);
        RealField g = f;
        orthogonalize(g, c);
        double el = linearized_gap(g, c);
        REQUIRE(el >= calibration::spectral_gap_lambda * l2_norm_sq(g));
        std::array<double, 4> mom = spectral_moments(forward_transform(g));
        REQUIRE(linearized_dissipation(g, c) >= 0.05 * mom[1]);
    }
}

TEST_CASE("Lassoued-Mironescu identity") {
    GridSpec spec = small_grid();
    double c = 0.2;
    SECTION("kernel mode gives zero") {
        detail::KinkLine line = detail::kink_line(spec, c);
        RealField vz(spec);
        int nz = spec.n_z;
        std::size_t n_pencils = spec.size() / nz;
        for (std::size_t p = 0; p < n_pencils; ++p)
            for (int j = 0; j < nz; ++j) vz.values[p * nz + j] = line.vz[j];
        REQUIRE(std::abs(linearized_gap_lm(vz, c)) < 1e-12);
    }
    SECTION("transverse modulation of the kernel mode") {
        detail::KinkLine line = detail::kink_line(spec, c);
        RealField f(spec);
        int nz = spec.n_z;
        std::size_t n_pencils = spec.size() / nz;
        double closed = 0.0;
        for (std::size_t p = 0; p < n_pencils; ++p) {
            double x1 = spec.transverse_coord(int(p));
            for (int j = 0; j < nz; ++j) {
                f.values[p * nz + j] = line.vz[j] * std::sin(2.0 * pi * x1);
                double cosx = std::cos(2.0 * pi * x1);
                closed += line.vz[j] * line.vz[j] * 4.0 * pi * pi * cosx * cosx;
            }
        }
        closed *= spec.cell();
        double lm = linearized_gap_lm(f, c);
        double el = linearized_gap(f, c);
        REQUIRE(std::abs(lm - closed) < 1e-8 * (1.0 + closed));
        REQUIRE(std::abs(el - closed) < 1e-8 * (1.0 + closed));
    }
    SECTION("random windowed fields, two-evaluation agreement") {
        for (std::uint64_t seed = 100; seed < 200; ++seed) {
            RealField f = random_windowed(spec, seed, 0.3);
            double el = linearized_gap(f, c);
            double lm = linearized_gap_lm(f, c);
            REQUIRE(std::abs(lm - el) <= 1e-6 * (1.0 + el));
        }
    }
    SECTION("boundary-heavy field rejected") {
        RealField f(spec);
        for (auto& v : f.values) v = 0.01;  // constant, no decay at the edge
        REQUIRE_THROWS_AS(linearized_gap_lm(f, c), std::invalid_argument);
    }
}

TEST_CASE("Hardy ratio") {
    GridSpec spec = small_grid();
    double c = 0.1;
    SECTION("zero field guarded") { REQUIRE(hardy_ratio(RealField(spec), c) == 0.0); }
    SECTION("odd localized field") {
        RealField f(spec);
        int nz = spec.n_z;
        std::size_t n_pencils = spec.size() / nz;
        for (std::size_t p = 0; p < n_pencils; ++p)
            for (int j = 0; j < nz; ++j) {
                double z = spec.z_coord(j) - c;
                f.values[p * nz + j] = z * std::exp(-z * z / 4.0);
            }
        double r = hardy_ratio(f, c);
        REQUIRE(r > 0.0);
        REQUIRE(r <= calibration::hardy_ratio_max);
    }
    SECTION("pure transverse mode") {
        RealField f(spec);
        int nz = spec.n_z;
        std::size_t n_pencils = spec.size() / nz;
        for (std::size_t p = 0; p < n_pencils; ++p) {
            double x1 = spec.transverse_coord(int(p));
            for (int j = 0; j < nz; ++j) {
                double z = spec.z_coord(j);
                f.values[p * nz + j] = std::cos(2.0 * pi * x1) * std::exp(-z * z / 9.0);
            }
        }
        REQUIRE(hardy_ratio(f, c) <= calibration::hardy_ratio_max);
    }
    SECTION("orthogonality enforced") {
        RealField f(spec);
        detail::KinkLine line = detail::kink_line(spec, c);
        int nz = spec.n_z;
        std::size_t n_pencils = spec.size() / nz;
        for (std::size_t p = 0; p < n_pencils; ++p)
            for (int j = 0; j < nz; ++j) f.values[p * nz + j] = line.vz[j];
        REQUIRE_THROWS_AS(hardy_ratio(f, c), std::invalid_argument);
    }
}

TEST_CASE("diagnostics on the reference kink") {
    GridSpec spec = small_grid();
    Diagnostics rec = diagnostics(RealField(spec), 0.0);
    REQUIRE(std::abs(rec.energy_gap) < 1e-12);
    REQUIRE(std::abs(rec.dissipation) < 1e-12);
    REQUIRE(std::abs(rec.hminus1_sq) < 1e-12);
    REQUIRE(std::abs(rec.shift) < 1e-8);
    REQUIRE(std::abs(rec.mass) < 1e-12);
}

TEST_CASE("nonlinear equivalence band") {
    GridSpec spec = small_grid();
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double K = calibration::equivalence_K;
    for (int trial = 0; trial < 100; ++trial) {
        double c0 = 0.4 * u(rng);
        RealField pert = random_windowed(spec, 1000 + trial, 1.0);
        double s = sup_norm(pert);
        double amp = (0.02 + 0.078 * std::abs(u(rng))) / (s > 0 ? s : 1.0);
        RealField f0 = kink_difference(spec, c0);
        for (std::size_t i = 0; i < f0.size(); ++i)
            f0.values[i] += amp * pert.values[i];

        double c = project_shift(f0, c0);
        RealField fc = shifted_perturbation(f0, c);
        if (sup_norm(fc) > 0.1) continue;

        double e = energy_gap(f0);
        double D = dissipation(f0);
        FieldNorms n = norms(fc);
        double h1 = n.l2 * n.l2 + n.grad_l2 * n.grad_l2;
        double sum3 = n.grad_l2 * n.grad_l2 + n.hess_l2 * n.hess_l2 +
                      n.third_l2 * n.third_l2;
        REQUIRE(e / h1 >= 1.0 / K);
        REQUIRE(e / h1 <= K);
        REQUIRE(D / sum3 >= 1.0 / K);
        REQUIRE(D / sum3 <= K);
    }
}
