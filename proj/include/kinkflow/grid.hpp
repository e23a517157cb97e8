#ifndef KINKFLOW_GRID_HPP
#define KINKFLOW_GRID_HPP

// Discretization of the strip S = Q^(d-1) x [-L_z, L_z] with the transverse
// torus Q of unit side length. Fields are periodic in every direction; all
// differential operators are diagonal in Fourier space. Evolved fields are
// perturbations with far-field decay, so the z-periodization error is of
// order exp(-sqrt(2) L_z).

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <fftw3.h>

namespace kinkflow {

using cplx = std::complex<double>;
inline constexpr double pi = std::numbers::pi;
inline constexpr int max_dim = 5;

struct GridSpec {
    int d = 2;              // spatial dimension, 2..5
    int n_transverse = 32;  // modes per transverse direction
    double L_z = 100.0;     // half-length of the z-truncation
    int n_z = 1024;         // modes in z
    bool dealias = true;    // 2/3-rule mask on nonlinear products

    void validate() const {
        if (d < 2 || d > max_dim)
            throw std::invalid_argument("GridSpec: d must be in [2,5]");
        if (n_transverse < 8 || n_transverse % 2 != 0)
            throw std::invalid_argument("GridSpec: n_transverse must be even and >= 8");
        if (n_z < 8 || n_z % 2 != 0)
            throw std::invalid_argument("GridSpec: n_z must be even and >= 8");
        if (L_z < 20.0)
            throw std::invalid_argument("GridSpec: L_z must be >= 20");
        if (size() > (std::size_t(1) << 28))
            throw std::invalid_argument("GridSpec: grid exceeds memory budget");
    }

    // index layout: row-major [n_transverse, ..., n_transverse, n_z],
    // z is the fastest-varying (last) axis
    std::array<int, max_dim> shape() const {
        std::array<int, max_dim> s{};
        for (int a = 0; a < d - 1; ++a) s[a] = n_transverse;
        s[d - 1] = n_z;
        return s;
    }
    std::size_t size() const {
        std::size_t n = n_z;
        for (int a = 0; a < d - 1; ++a) n *= std::size_t(n_transverse);
        return n;
    }
    double volume() const { return 2.0 * L_z; }       // unit transverse torus
    double cell() const { return volume() / double(size()); }
    double dz() const { return 2.0 * L_z / n_z; }
    double z_coord(int j) const { return -L_z + j * dz(); }
    double transverse_coord(int j) const { return double(j) / n_transverse; }

    // signed integer mode index along axis a
    static int signed_index(int k, int n) { return (k <= n / 2) ? k : k - n; }

    // physical wavevector component along axis a for storage index k
    double wavevector(int a, int k) const {
        int n = (a == d - 1) ? n_z : n_transverse;
        double s = signed_index(k, n);
        return (a == d - 1) ? s / (2.0 * L_z) : s;
    }

    bool operator==(const GridSpec& o) const {
        return d == o.d && n_transverse == o.n_transverse && n_z == o.n_z &&
               L_z == o.L_z && dealias == o.dealias;
    }
};

struct RealField {
    GridSpec spec;
    std::vector<double> values;

    RealField() = default;
    explicit RealField(const GridSpec& s) : spec(s), values(s.size(), 0.0) {}

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    std::size_t size() const { return values.size(); }

    // first non-finite entry, or npos
    std::size_t first_bad() const {
        for (std::size_t i = 0; i < values.size(); ++i)
            if (!std::isfinite(values[i])) return i;
        return std::size_t(-1);
    }
};

struct SpectralField {
    GridSpec spec;
    std::vector<cplx> coeffs;

    SpectralField() = default;
    explicit SpectralField(const GridSpec& s) : spec(s), coeffs(s.size(), cplx{}) {}

    cplx& operator[](std::size_t i) { return coeffs[i]; }
    cplx operator[](std::size_t i) const { return coeffs[i]; }
    std::size_t size() const { return coeffs.size(); }
};

namespace detail {

// FFTW plans keyed by grid shape; plans are reused across transforms.
class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache c;
        return c;
    }

    void execute(const GridSpec& spec, std::vector<cplx>& buf, int sign) {
        std::lock_guard<std::mutex> lock(mutex_);
        Key key{spec.d, spec.n_transverse, spec.n_z, sign};
        auto it = plans_.find(key);
        if (it == plans_.end()) {
            std::array<int, max_dim> shape = spec.shape();
            fftw_plan p = fftw_plan_dft(
                spec.d, shape.data(),
                reinterpret_cast<fftw_complex*>(buf.data()),
                reinterpret_cast<fftw_complex*>(buf.data()),
                sign, FFTW_ESTIMATE);
            it = plans_.emplace(key, p).first;
        }
        fftw_execute_dft(it->second,
                         reinterpret_cast<fftw_complex*>(buf.data()),
                         reinterpret_cast<fftw_complex*>(buf.data()));
    }

    ~PlanCache() {
        for (auto& [k, p] : plans_) fftw_destroy_plan(p);
    }

private:
    using Key = std::array<int, 4>;
    std::map<Key, fftw_plan> plans_;
    std::mutex mutex_;
};

// iterate over all storage indices, exposing the per-axis index
template <typename F>
void for_each_mode(const GridSpec& spec, F&& fn) {
    std::array<int, max_dim> shape = spec.shape();
    std::array<int, max_dim> idx{};
    std::size_t n = spec.size();
    for (std::size_t i = 0; i < n; ++i) {
        fn(i, idx);
        for (int a = spec.d - 1; a >= 0; --a) {
            if (++idx[a] < shape[a]) break;
            idx[a] = 0;
        }
    }
}

}  // namespace detail

// Forward transform with convention f(x) = sum_xi fhat(xi) e^{2 pi i xi.x},
// so Parseval reads  int_S f^2 dx = Vol * sum |fhat|^2.
inline SpectralField forward_transform(const RealField& f) {
    std::size_t bad = f.first_bad();
    if (bad != std::size_t(-1))
        throw std::invalid_argument("forward_transform: non-finite sample at index " +
                                    std::to_string(bad));
    SpectralField F(f.spec);
    for (std::size_t i = 0; i < f.size(); ++i) F.coeffs[i] = f.values[i];
    detail::PlanCache::instance().execute(f.spec, F.coeffs, FFTW_FORWARD);
    // z runs from -L_z, not 0, so mode s picks up e^{-2 pi i xi_z L_z} = (-1)^s;
    // fold that in so the coefficients refer to the physical coordinate
    double scale = 1.0 / double(f.spec.size());
    int nz = f.spec.n_z;
    for (std::size_t i = 0; i < F.size(); ++i)
        F.coeffs[i] *= (i % nz) & 1 ? -scale : scale;
    return F;
}

inline RealField inverse_transform(const SpectralField& F) {
    std::vector<cplx> buf = F.coeffs;
    int nz = F.spec.n_z;
    for (std::size_t i = 0; i < buf.size(); ++i)
        if ((i % nz) & 1) buf[i] = -buf[i];
    detail::PlanCache::instance().execute(F.spec, buf, FFTW_BACKWARD);
    RealField f(F.spec);
    for (std::size_t i = 0; i < buf.size(); ++i) f.values[i] = buf[i].real();
    return f;
}

// Multiply each coefficient by the symbol sigma(xi); sigma receives the
// physical wavevector components.
template <typename Sigma>
SpectralField apply_symbol(const SpectralField& F, Sigma&& sigma) {
    SpectralField out(F.spec);
    const GridSpec& spec = F.spec;
    std::array<double, max_dim> xi{};
    detail::for_each_mode(spec, [&](std::size_t i, const std::array<int, max_dim>& idx) {
        for (int a = 0; a < spec.d; ++a) xi[a] = spec.wavevector(a, idx[a]);
        out.coeffs[i] = F.coeffs[i] * sigma(xi);
    });
    return out;
}

// spectral derivative: coefficient at xi multiplied by prod (2 pi i xi_a)^{order_a}
inline SpectralField differentiate(const SpectralField& F,
                                   const std::array<int, max_dim>& order) {
    int total = 0;
    for (int a = 0; a < F.spec.d; ++a) total += order[a];
    if (total > 4) throw std::invalid_argument("differentiate: |order| > 4");
    const int d = F.spec.d;
    return apply_symbol(F, [&](const std::array<double, max_dim>& xi) {
        cplx s{1.0, 0.0};
        for (int a = 0; a < d; ++a)
            for (int r = 0; r < order[a]; ++r) s *= cplx(0.0, 2.0 * pi * xi[a]);
        return s;
    });
}

inline SpectralField laplacian(const SpectralField& F) {
    const int d = F.spec.d;
    return apply_symbol(F, [&](const std::array<double, max_dim>& xi) {
        double k2 = 0.0;
        for (int a = 0; a < d; ++a) k2 += xi[a] * xi[a];
        return cplx(-4.0 * pi * pi * k2, 0.0);
    });
}

// |2 pi xi|^2 for every storage index, the workhorse array of the stepper
inline std::vector<double> ksq_table(const GridSpec& spec) {
    std::vector<double> tab(spec.size());
    detail::for_each_mode(spec, [&](std::size_t i, const std::array<int, max_dim>& idx) {
        double k2 = 0.0;
        for (int a = 0; a < spec.d; ++a) {
            double xi = spec.wavevector(a, idx[a]);
            k2 += xi * xi;
        }
        tab[i] = 4.0 * pi * pi * k2;
    });
    return tab;
}

// 2/3-rule mask: true where the mode is kept
inline std::vector<std::uint8_t> dealias_mask(const GridSpec& spec) {
    std::vector<std::uint8_t> mask(spec.size(), 1);
    detail::for_each_mode(spec, [&](std::size_t i, const std::array<int, max_dim>& idx) {
        for (int a = 0; a < spec.d; ++a) {
            int n = (a == spec.d - 1) ? spec.n_z : spec.n_transverse;
            int s = std::abs(GridSpec::signed_index(idx[a], n));
            if (3 * s > n) {  // keep |k| <= n/3
                mask[i] = 0;
                return;
            }
        }
    });
    return mask;
}

inline void apply_dealias(SpectralField& F) {
    static std::mutex m;
    static std::map<std::array<int, 3>, std::vector<std::uint8_t>> cache;
    const std::vector<std::uint8_t>* mask;
    {
        std::lock_guard<std::mutex> lock(m);
        auto& entry = cache[{F.spec.d, F.spec.n_transverse, F.spec.n_z}];
        if (entry.empty()) entry = dealias_mask(F.spec);
        mask = &entry;
    }
    for (std::size_t i = 0; i < F.size(); ++i)
        if (!(*mask)[i]) F.coeffs[i] = cplx{};
}

// pointwise product with 2/3-rule truncation of the result
inline RealField dealiased_product(const RealField& a, const RealField& b) {
    RealField prod(a.spec);
    for (std::size_t i = 0; i < a.size(); ++i)
        prod.values[i] = a.values[i] * b.values[i];
    if (!a.spec.dealias) return prod;
    SpectralField P = forward_transform(prod);
    apply_dealias(P);
    return inverse_transform(P);
}

// trapezoidal quadrature = spectral quadrature on the periodic grid
inline double integrate(const RealField& f) {
    double s = 0.0;
    for (double v : f.values) s += v;
    return s * f.spec.cell();
}

inline double l2_norm_sq(const RealField& f) {
    double s = 0.0;
    for (double v : f.values) s += v * v;
    return s * f.spec.cell();
}

inline double sup_norm(const RealField& f) {
    double m = 0.0;
    for (double v : f.values) m = std::max(m, std::abs(v));
    return m;
}

// Parseval sums  Vol * sum (2 pi |xi|)^{2p} |fhat|^2  for p = 0..3
inline std::array<double, 4> spectral_moments(const SpectralField& F) {
    std::array<double, 4> mom{};
    const GridSpec& spec = F.spec;
    std::vector<double> ksq = ksq_table(spec);
    for (std::size_t i = 0; i < F.size(); ++i) {
        double a2 = std::norm(F.coeffs[i]);
        double w = 1.0;
        for (int p = 0; p < 4; ++p) {
            mom[p] += w * a2;
            w *= ksq[i];
        }
    }
    double vol = spec.volume();
    for (auto& m : mom) m *= vol;
    return mom;
}

struct FieldNorms {
    double l2 = 0, grad_l2 = 0, hess_l2 = 0, third_l2 = 0, sup = 0;
};

// L2 norms of f, grad f, grad^2 f, grad^3 f plus the grid sup-norm.
// grad^2 is assembled from the individual second derivatives and checked
// against ||Delta f|| (they agree as exact Fourier sums).
inline FieldNorms norms(const RealField& f) {
    SpectralField F = forward_transform(f);
    std::array<double, 4> mom = spectral_moments(F);
    FieldNorms n;
    n.l2 = std::sqrt(mom[0]);
    n.grad_l2 = std::sqrt(mom[1]);
    n.third_l2 = std::sqrt(mom[3]);
    n.sup = sup_norm(f);

    // ||grad^2 f||^2 summed over all index pairs
    const int d = f.spec.d;
    double hess2 = 0.0;
    for (int a = 0; a < d; ++a) {
        for (int b = 0; b < d; ++b) {
            std::array<int, max_dim> order{};
            order[a] += 1;
            order[b] += 1;
            SpectralField Dab = differentiate(F, order);
            double s = 0.0;
            for (const auto& c : Dab.coeffs) s += std::norm(c);
            hess2 += s * f.spec.volume();
        }
    }
    n.hess_l2 = std::sqrt(hess2);

    double lap = std::sqrt(mom[2]);
    if (std::abs(lap - n.hess_l2) > 1e-10 * (1.0 + n.hess_l2))
        throw std::runtime_error("norms: ||Delta f|| != ||grad^2 f|| beyond tolerance");
    return n;
}

}  // namespace kinkflow

#endif
