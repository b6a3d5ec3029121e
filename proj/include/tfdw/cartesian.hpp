#pragma once
// Cartesian states on a cubic box centred at the origin: free-space Hartree by
// zero-padded convolution, smeared nuclear potentials and spectral derivatives.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "tfdw/errors.hpp"
#include "tfdw/fft.hpp"
#include "tfdw/potential.hpp"
#include "tfdw/radial.hpp"

namespace tfdw {

// Cube of edge L with n points per axis, x_i = (i - n/2) h, h = L/n.
class BoxGrid {
public:
    static constexpr std::size_t min_points = 16;
    static constexpr std::size_t max_points = 96;

    BoxGrid(double L, std::size_t n) : L_(L), n_(n), h_(L / double(n)) {
        if (!(L > 0) || !std::isfinite(L)) throw configuration_error("box edge length must be positive");
        if (n < min_points || n > max_points)
            throw configuration_error("box needs 16 <= n <= 96 points per axis");
        if (n % 2 != 0 || !transform_friendly(n))
            throw configuration_error("box size n must be even with prime factors 2, 3, 5, 7 only");
    }

    static bool transform_friendly(std::size_t n) {
        for (std::size_t p : {2u, 3u, 5u, 7u})
            while (n % p == 0) n /= p;
        return n == 1;
    }

    double edge() const noexcept { return L_; }
    std::size_t n() const noexcept { return n_; }
    double spacing() const noexcept { return h_; }
    double cell_volume() const noexcept { return h_ * h_ * h_; }
    std::size_t size() const noexcept { return n_ * n_ * n_; }

    double coordinate(std::size_t i) const noexcept { return (double(i) - double(n_ / 2)) * h_; }
    std::size_t index(std::size_t i, std::size_t j, std::size_t k) const noexcept { return (i * n_ + j) * n_ + k; }
    std::array<double, 3> point(std::size_t idx) const noexcept {
        std::size_t const k = idx % n_, j = (idx / n_) % n_, i = idx / (n_ * n_);
        return {coordinate(i), coordinate(j), coordinate(k)};
    }
    double radius(std::size_t idx) const noexcept {
        auto const p = point(idx);
        return std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
    }
    // Whether a point lies strictly inside the sampled cube.
    bool contains(std::array<double, 3> const& x) const noexcept {
        double const lo = coordinate(0), hi = coordinate(n_ - 1);
        return std::all_of(x.begin(), x.end(), [&](double c) { return c > lo && c < hi; });
    }

    bool operator==(BoxGrid const& o) const noexcept { return L_ == o.L_ && n_ == o.n_; }

private:
    double L_;
    std::size_t n_;
    double h_;
};

using BoxPtr = std::shared_ptr<const BoxGrid>;

inline BoxPtr make_box(double L, std::size_t n) { return std::make_shared<const BoxGrid>(L, n); }

class Field3 {
public:
    Field3() = default;
    explicit Field3(BoxPtr grid) : grid_(std::move(grid)), values_(grid_->size(), 0.0) {}
    Field3(BoxPtr grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
        if (values_.size() != grid_->size()) throw configuration_error("field size does not match its box");
    }

    template <class F>
    static Field3 sample(BoxPtr grid, F&& f) {
        Field3 u(grid);
        for (std::size_t idx = 0; idx < u.size(); ++idx) {
            auto const p = grid->point(idx);
            u.values_[idx] = f(p[0], p[1], p[2]);
        }
        return u;
    }

    // u(|x|) of a radial state, interpolated on its grid.
    static Field3 from_radial(BoxPtr grid, RadialFunction const& u) {
        Field3 f(grid);
        for (std::size_t idx = 0; idx < f.size(); ++idx) f.values_[idx] = evaluate(u, grid->radius(idx));
        return f;
    }

    BoxGrid const& grid() const { return *grid_; }
    BoxPtr const& grid_ptr() const noexcept { return grid_; }
    std::size_t size() const noexcept { return values_.size(); }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }
    std::vector<double>& data() noexcept { return values_; }

    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }

    bool is_finite() const {
        return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
    }

    Field3& operator*=(double s) {
        for (auto& v : values_) v *= s;
        return *this;
    }

private:
    BoxPtr grid_;
    std::vector<double> values_;
};

inline void require_finite(Field3 const& u) {
    if (!u.is_finite()) throw invalid_state_error("3D state has non-finite samples");
}

inline double mass(BoxGrid const& g, std::span<const double> u) {
    double s = 0;
    for (double x : u) s += x * x;
    return g.cell_volume() * s;
}

inline double mass(Field3 const& u) {
    require_finite(u);
    return mass(u.grid(), u.values());
}

// Tricubic Lagrange interpolation of u at x (4 nodes per axis); values outside the
// sampled cube count as zero. Trilinear loses a few percent of mass at typical spacings.
inline double evaluate(Field3 const& u, std::array<double, 3> const& x) {
    auto const& g = u.grid();
    auto const n = std::ptrdiff_t(g.n());
    double const c = double(g.n() / 2), h = g.spacing();
    std::array<std::ptrdiff_t, 3> base{};
    std::array<std::array<double, 4>, 3> w{};
    for (int a = 0; a < 3; ++a) {
        double const f = x[a] / h + c;
        if (!(f > -1 && f < double(n))) return 0;
        base[a] = static_cast<std::ptrdiff_t>(std::floor(f)) - 1;
        double const t = f - double(base[a] + 1);
        w[a] = {-t * (t - 1) * (t - 2) / 6, (t + 1) * (t - 1) * (t - 2) / 2, -(t + 1) * t * (t - 2) / 2,
                (t + 1) * t * (t - 1) / 6};
    }
    double s = 0;
    for (int a = 0; a < 4; ++a) {
        std::ptrdiff_t const I = base[0] + a;
        if (I < 0 || I >= n) continue;
        for (int b = 0; b < 4; ++b) {
            std::ptrdiff_t const J = base[1] + b;
            if (J < 0 || J >= n) continue;
            for (int d = 0; d < 4; ++d) {
                std::ptrdiff_t const K = base[2] + d;
                if (K < 0 || K >= n) continue;
                s += w[0][a] * w[1][b] * w[2][d] * u[g.index(std::size_t(I), std::size_t(J), std::size_t(K))];
            }
        }
    }
    return s;
}

// l^{3/2} u(l x) about the box centre, resampled by tricubic interpolation.
inline Field3 dilate(Field3 const& u, double ell) {
    if (!(ell > 0) || !std::isfinite(ell)) throw domain_error("dilate: scale must be positive");
    if (ell == 1.0) return u;
    Field3 out(u.grid_ptr());
    double const amp = std::pow(ell, 1.5);
    for (std::size_t idx = 0; idx < out.size(); ++idx) {
        auto p = u.grid().point(idx);
        for (auto& c : p) c *= ell;
        out[idx] = amp * evaluate(u, p);
    }
    return out;
}

// Average of 1/|x| over a cube of unit edge centred at the origin.
inline constexpr double cube_mean_inverse_distance = 2.3800773639795535;
// Average of 1/|x|^2 over the same cube.
inline constexpr double cube_mean_inverse_distance_squared = 7.6741242224437320;

// Free-space Coulomb convolution Phi = rho * 1/|x| on the box, by zero padding
// to (2n)^3 (Hockney). The self-cell uses the cube average of 1/|x|.
class FreeSpacePoisson {
public:
    explicit FreeSpacePoisson(BoxGrid const& g) : n_(g.n()), N_(2 * g.n()), h_(g.spacing()), fft_(N_, N_, N_) {
        auto const real = fft_.real();
        for (std::size_t a = 0; a < N_; ++a)
            for (std::size_t b = 0; b < N_; ++b)
                for (std::size_t c = 0; c < N_; ++c) {
                    double const x = wrap(a), y = wrap(b), z = wrap(c);
                    double const d = std::sqrt(x * x + y * y + z * z);
                    real[(a * N_ + b) * N_ + c] = d > 0 ? 1.0 / (h_ * d) : cube_mean_inverse_distance / h_;
                }
        fft_.forward();
        auto const spec = fft_.spectrum();
        kernel_.assign(spec.begin(), spec.end());
    }

    // phi = h^3 sum_y rho(y) G(x - y)
    void solve(std::span<const double> rho, std::span<double> phi) {
        auto real = fft_.real();
        std::fill(real.begin(), real.end(), 0.0);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j)
                for (std::size_t k = 0; k < n_; ++k) real[(i * N_ + j) * N_ + k] = rho[(i * n_ + j) * n_ + k];
        fft_.forward();
        auto spec = fft_.spectrum();
        for (std::size_t q = 0; q < spec.size(); ++q) spec[q] *= kernel_[q];
        fft_.backward();
        double const scale = h_ * h_ * h_ / double(N_ * N_ * N_);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j)
                for (std::size_t k = 0; k < n_; ++k) phi[(i * n_ + j) * n_ + k] = scale * real[(i * N_ + j) * N_ + k];
    }

private:
    double wrap(std::size_t a) const noexcept { return a < n_ ? double(a) : double(a) - double(N_); }

    std::size_t n_, N_;
    double h_;
    RealFFT3 fft_;
    std::vector<std::complex<double>> kernel_;
};

// Periodic spectral operators on the n^3 box: f(|k|^2) applied in Fourier space.
class SpectralOperator {
public:
    explicit SpectralOperator(BoxGrid const& g) : n_(g.n()), fft_(n_, n_, n_) {
        double const dk = 2 * std::numbers::pi / g.edge();
        std::size_t const nc = fft_.n2_complex();
        k2_.resize(fft_.complex_size());
        auto freq = [&](std::size_t a) { return dk * (a <= n_ / 2 ? double(a) : double(a) - double(n_)); };
        for (std::size_t a = 0; a < n_; ++a)
            for (std::size_t b = 0; b < n_; ++b)
                for (std::size_t c = 0; c < nc; ++c) {
                    double const kx = freq(a), ky = freq(b), kz = dk * double(c);
                    k2_[(a * n_ + b) * nc + c] = kx * kx + ky * ky + kz * kz;
                }
    }

    // out = F^{-1}[ mult(|k|^2) F[in] ]
    template <class Mult>
    void apply(std::span<const double> in, std::span<double> out, Mult&& mult) {
        auto real = fft_.real();
        std::copy(in.begin(), in.end(), real.begin());
        fft_.forward();
        auto spec = fft_.spectrum();
        for (std::size_t q = 0; q < spec.size(); ++q) spec[q] *= mult(k2_[q]);
        fft_.backward();
        double const inv = 1.0 / double(n_ * n_ * n_);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = inv * real[i];
    }

    // out = -Laplacian(in)
    void negative_laplacian(std::span<const double> in, std::span<double> out) {
        apply(in, out, [](double k2) { return k2; });
    }

private:
    std::size_t n_;
    RealFFT3 fft_;
    std::vector<double> k2_;
};

// int |grad u|^2 with spectral derivatives.
inline double kinetic_density(BoxGrid const& g, std::span<const double> u) {
    SpectralOperator op(g);
    std::vector<double> lap(u.size());
    op.negative_laplacian(u, lap);
    double s = 0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * lap[i];
    return g.cell_volume() * s;
}

inline double kinetic_density(Field3 const& u) {
    require_finite(u);
    return kinetic_density(u.grid(), u.values());
}

struct Hartree3Result {
    Field3 potential;
    double energy = 0;
};

// rho is a density. energy = (h^3/2) sum rho Phi.
inline Hartree3Result hartree_free_space(Field3 const& rho) {
    require_finite(rho);
    auto const v = rho.values();
    double scale = 0;
    for (double x : v) scale = std::max(scale, std::abs(x));
    for (double x : v)
        if (x < -1e-12 * std::max(scale, 1e-300))
            throw domain_error("hartree_free_space: density has negative values");
    Hartree3Result out{Field3(rho.grid_ptr()), 0.0};
    if (scale == 0) return out;
    FreeSpacePoisson poisson(rho.grid());
    poisson.solve(v, out.potential.values());
    double s = 0;
    for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * out.potential[i];
    out.energy = 0.5 * rho.grid().cell_volume() * s;
    return out;
}

// -Z erf(d / (sigma sqrt 2)) / d, the potential of a Gaussian charge of width sigma.
inline double smeared_coulomb(double Z, double d, double sigma) {
    if (Z == 0) return 0.0;
    double const s2 = sigma * std::numbers::sqrt2;
    if (d < 1e-8 * sigma) return -Z * 2 / (std::sqrt(std::numbers::pi) * s2); // limit d -> 0
    return -Z * std::erf(d / s2) / d;
}

inline Field3 molecular_potential(BoxPtr grid, std::vector<Nucleus> const& nuclei, double sigma) {
    if (!(sigma >= grid->spacing()) || !std::isfinite(sigma))
        throw domain_error("smearing width must be at least the grid spacing");
    for (auto const& nuc : nuclei) {
        if (!(nuc.Z >= 0) || !std::isfinite(nuc.Z)) throw domain_error("nuclear charges must be >= 0");
        if (!grid->contains(nuc.position)) throw domain_error("nucleus lies outside the box");
    }
    Field3 V(grid);
    for (std::size_t idx = 0; idx < V.size(); ++idx) {
        auto const p = grid->point(idx);
        double s = 0;
        for (auto const& nuc : nuclei) {
            double const dx = p[0] - nuc.position[0], dy = p[1] - nuc.position[1], dz = p[2] - nuc.position[2];
            s += smeared_coulomb(nuc.Z, std::sqrt(dx * dx + dy * dy + dz * dz), sigma);
        }
        V[idx] = s;
    }
    return V;
}

// Default smearing: two grid spacings.
inline double default_smearing(BoxGrid const& g) { return 2 * g.spacing(); }

// V sampled on the box. Coulomb centres are smeared with width sigma.
inline Field3 sample_potential(BoxPtr grid, PotentialSpec const& V, double sigma) {
    if (V.is_none()) return Field3(grid);
    if (auto const* a = std::get_if<AtomicPotential>(&V.value()))
        return molecular_potential(grid, {Nucleus{a->Z, {0, 0, 0}}}, sigma);
    if (auto const* m = std::get_if<MolecularPotential>(&V.value()))
        return molecular_potential(grid, m->nuclei, sigma);
    auto const& t = V.as<RadialTablePotential>();
    return Field3::sample(grid, [&](double x, double y, double z) { return t(std::sqrt(x * x + y * y + z * z)); });
}

} // namespace tfdw
