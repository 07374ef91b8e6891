#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>
#include <variant>
#include <vector>

#include "warped/errors.hpp"

namespace warped {

/// One distinct Laplacian eigenvalue with its multiplicity.
struct FiberEigenvalue {
    double value;
    int multiplicity;
    friend bool operator==(const FiberEigenvalue&, const FiberEigenvalue&) = default;
};

/// Closed (n-1)-dimensional fiber of the warped product: curvature constant,
/// volume, and the spectrum of its Laplace-Beltrami operator (nonnegative
/// sign convention). Immutable value type.
class FiberSpec {
public:
    struct RoundSphere {
        int dim;
        double scale; // metric g = scale * g_unit
    };
    struct FlatTorus {
        std::vector<double> lengths;
    };
    struct Explicit {
        std::vector<FiberEigenvalue> eigenvalues;
    };

    /// Round sphere S^dim carrying the metric scale * g_unit. Scaling the
    /// metric by c divides eigenvalues by c and the curvature by c, and
    /// multiplies the volume by c^(dim/2).
    static FiberSpec round_sphere(int dim, double scale = 1.0) {
        if (dim < 1) throw ConfigError("round_sphere: dim must be >= 1");
        if (!(scale > 0.0)) throw ConfigError("round_sphere: scale must be positive");
        FiberSpec f;
        f.dim_ = dim;
        f.curvature_ = dim * (dim - 1) / scale;
        f.volume_ = unit_sphere_volume(dim) * std::pow(scale, 0.5 * dim);
        f.kind_ = RoundSphere{dim, scale};
        return f;
    }

    /// Flat torus with side lengths L_m; eigenvalues 4 pi^2 sum (k_m/L_m)^2.
    static FiberSpec flat_torus(std::vector<double> lengths) {
        if (lengths.empty()) throw ConfigError("flat_torus: need at least one length");
        double vol = 1.0;
        for (double L : lengths) {
            if (!(L > 0.0)) throw ConfigError("flat_torus: lengths must be positive");
            vol *= L;
        }
        FiberSpec f;
        f.dim_ = static_cast<int>(lengths.size());
        f.curvature_ = 0.0;
        f.volume_ = vol;
        f.kind_ = FlatTorus{std::move(lengths)};
        return f;
    }

    /// User-supplied distinct eigenvalue list. Must start at (0, 1) and be
    /// strictly increasing with nonnegative values.
    static FiberSpec explicit_spectrum(int dim, double curvature, double volume,
                                       std::vector<FiberEigenvalue> eigenvalues) {
        if (dim < 1) throw ConfigError("explicit_spectrum: dim must be >= 1");
        if (!(volume > 0.0)) throw ConfigError("explicit_spectrum: volume must be positive");
        if (eigenvalues.empty()) throw ConfigError("explicit_spectrum: empty eigenvalue list");
        if (eigenvalues.front().value != 0.0 || eigenvalues.front().multiplicity != 1)
            throw ConfigError("explicit_spectrum: first eigenvalue must be 0 with multiplicity 1");
        for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
            if (eigenvalues[i].value < 0.0)
                throw ConfigError("explicit_spectrum: eigenvalues must be nonnegative");
            if (eigenvalues[i].multiplicity < 1)
                throw ConfigError("explicit_spectrum: multiplicities must be positive");
            if (i > 0 && !(eigenvalues[i - 1].value < eigenvalues[i].value))
                throw ConfigError("explicit_spectrum: distinct eigenvalues must increase strictly");
        }
        FiberSpec f;
        f.dim_ = dim;
        f.curvature_ = curvature;
        f.volume_ = volume;
        f.kind_ = Explicit{std::move(eigenvalues)};
        return f;
    }

    int dim() const { return dim_; }
    double curvature() const { return curvature_; }
    double volume() const { return volume_; }

    bool is_explicit() const { return std::holds_alternative<Explicit>(kind_); }
    const std::variant<RoundSphere, FlatTorus, Explicit>& kind() const { return kind_; }

    /// Number of distinct eigenvalues available (INT32_MAX when unbounded).
    int available_count() const {
        if (auto* e = std::get_if<Explicit>(&kind_))
            return static_cast<int>(e->eigenvalues.size());
        return INT32_MAX;
    }

private:
    static double unit_sphere_volume(int dim) {
        // vol(S^d) = 2 pi^((d+1)/2) / Gamma((d+1)/2)
        return 2.0 * std::pow(std::numbers::pi, 0.5 * (dim + 1)) / std::tgamma(0.5 * (dim + 1));
    }

    int dim_ = 0;
    double curvature_ = 0.0;
    double volume_ = 0.0;
    std::variant<RoundSphere, FlatTorus, Explicit> kind_;
};

namespace detail {

inline int sphere_multiplicity(int l, int dim) {
    if (l == 0) return 1;
    // dim(H_l) on S^d: (2l+d-1)/(l) * C(l+d-2, l-1)  — computed iteratively to stay integral.
    // Equivalent to C(l+d, d) - C(l+d-2, d).
    auto binom = [](long nn, long kk) {
        if (kk < 0 || kk > nn) return 0.0;
        double r = 1.0;
        for (long j = 1; j <= kk; ++j) r = r * (nn - kk + j) / j;
        return r;
    };
    const double m = binom(l + dim, dim) - binom(l + dim - 2, dim);
    return static_cast<int>(std::llround(m));
}

inline std::vector<FiberEigenvalue> torus_eigenvalues(const std::vector<double>& lengths,
                                                      int count) {
    // Enumerate 4 pi^2 |k/L|^2 over integer vectors inside a box large enough
    // to certify the first `count` distinct values, growing the box on demand.
    const int d = static_cast<int>(lengths.size());
    const double two_pi = 2.0 * std::numbers::pi;
    double radius2 = 1.0;
    for (int attempt = 0; attempt < 60; ++attempt) {
        std::vector<double> values;
        std::vector<int> box(d);
        for (int m = 0; m < d; ++m)
            box[m] = static_cast<int>(std::floor(std::sqrt(radius2) * lengths[m] / two_pi)) + 1;
        std::vector<int> k(d, 0);
        // Odometer over the product of [-box_m, box_m].
        for (int m = 0; m < d; ++m) k[m] = -box[m];
        while (true) {
            double q = 0.0;
            for (int m = 0; m < d; ++m) {
                const double f = two_pi * k[m] / lengths[m];
                q += f * f;
            }
            if (q <= radius2) values.push_back(q);
            int m = 0;
            for (; m < d; ++m) {
                if (k[m] < box[m]) {
                    ++k[m];
                    break;
                }
                k[m] = -box[m];
            }
            if (m == d) break;
        }
        std::sort(values.begin(), values.end());
        std::vector<FiberEigenvalue> out;
        for (double v : values) {
            if (!out.empty() && std::abs(v - out.back().value) <=
                                    1e-12 * std::max(1.0, std::abs(out.back().value))) {
                ++out.back().multiplicity;
            } else {
                out.push_back({v, 1});
            }
        }
        // The last collected distinct value may be truncated by the ball; only
        // values strictly inside radius2 are certified complete.
        int certified = 0;
        for (const auto& ev : out)
            if (ev.value < radius2 * (1.0 - 1e-9)) ++certified;
        if (certified >= count) {
            out.resize(count);
            return out;
        }
        radius2 *= 4.0;
    }
    throw SolverError("flat_torus eigenvalue enumeration did not converge");
}

} // namespace detail

/// First `count` distinct eigenvalues of the fiber Laplacian, nondecreasing,
/// with multiplicities. The sequence always starts at (0, 1).
inline std::vector<FiberEigenvalue> eigenvalues(const FiberSpec& fiber, int count) {
    if (count < 1) throw ConfigError("fiber eigenvalues: count must be >= 1");
    struct Visitor {
        int count;
        std::vector<FiberEigenvalue> operator()(const FiberSpec::RoundSphere& s) const {
            std::vector<FiberEigenvalue> out;
            out.reserve(count);
            for (int l = 0; l < count; ++l) {
                const double unit = static_cast<double>(l) * (l + s.dim - 1);
                out.push_back({unit / s.scale, detail::sphere_multiplicity(l, s.dim)});
            }
            return out;
        }
        std::vector<FiberEigenvalue> operator()(const FiberSpec::FlatTorus& t) const {
            return detail::torus_eigenvalues(t.lengths, count);
        }
        std::vector<FiberEigenvalue> operator()(const FiberSpec::Explicit& e) const {
            if (count > static_cast<int>(e.eigenvalues.size()))
                throw ConfigError("fiber eigenvalues: requested count exceeds explicit list");
            return {e.eigenvalues.begin(), e.eigenvalues.begin() + count};
        }
    };
    return std::visit(Visitor{count}, fiber.kind());
}

/// Value of the i-th distinct fiber eigenvalue (i is 0-based).
inline double fiber_eigenvalue(const FiberSpec& fiber, int i) {
    return eigenvalues(fiber, i + 1).back().value;
}

} // namespace warped
