#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "qlimits/mixed_cdf.hpp"

namespace qlimits::detail {

// A MixedCdf discretized onto a solve grid: atom list plus per-cell masses of
// the continuous component.  Convolution of a grid sequence w against dB at
// grid index k:
//   sum_j 0.5 (w[k-j] + w[k-j-1]) cell[j]  +  sum_atoms w(t_k - loc) * mass
// with w linearly interpolated at off-grid atom offsets.  This is the global
// midpoint-per-cell quadrature rule (the midpoint of a linear interpolant is
// the endpoint average), shared by the Volterra solver, its residual check,
// and the Gaussian limit sampler so all of them integrate identically.
struct DiscreteKernel {
    double h;
    std::vector<double> cell;
    std::vector<Atom> atoms;

    DiscreteKernel(const MixedCdf& B, double h_, std::size_t n_cells) : h(h_) {
        cell.resize(n_cells);
        for (std::size_t j = 0; j < n_cells; ++j)
            cell[j] = B.continuous_increment(h * static_cast<double>(j),
                                             h * static_cast<double>(j + 1));
        double horizon = h * static_cast<double>(n_cells);
        for (const Atom& a : B.atoms())
            if (a.location <= horizon + 1e-9 * h) atoms.push_back(a);
    }

    double interp(const std::vector<double>& w, double off) const {
        double u = off / h;
        auto j = static_cast<std::size_t>(std::floor(u + 1e-9));
        if (j + 1 >= w.size()) return w.back();
        double frac = u - static_cast<double>(j);
        if (frac <= 0.0) return w[j];
        return (1.0 - frac) * w[j] + frac * w[j + 1];
    }

    // Full convolution value at grid index k.
    double at(const std::vector<double>& w, std::size_t k) const {
        double s = 0.0;
        for (std::size_t j = 0; j < k; ++j)
            if (cell[j] != 0.0) s += 0.5 * (w[k - j] + w[k - j - 1]) * cell[j];
        for (const Atom& a : atoms) {
            double off = static_cast<double>(k) * h - a.location;
            if (off < -1e-9 * h) break;
            s += interp(w, std::max(off, 0.0)) * a.mass;
        }
        return s;
    }

    // Convolution at index k split into {part not involving w[k], coefficient
    // of w[k]}, so an implicit point equation can be solved in closed form.
    std::pair<double, double> split_at(const std::vector<double>& w, std::size_t k) const {
        double rest = 0.0;
        double coef = 0.0;
        if (k >= 1 && cell[0] != 0.0) {
            rest += 0.5 * w[k - 1] * cell[0];
            coef += 0.5 * cell[0];
        }
        for (std::size_t j = 1; j < k; ++j)
            if (cell[j] != 0.0) rest += 0.5 * (w[k - j] + w[k - j - 1]) * cell[j];
        for (const Atom& a : atoms) {
            double off = static_cast<double>(k) * h - a.location;
            if (off < -1e-9 * h) break;
            off = std::max(off, 0.0);
            double u = off / h;
            auto j = static_cast<std::size_t>(std::floor(u + 1e-9));
            double frac = u - static_cast<double>(j);
            if (frac < 1e-9) frac = 0.0;
            if (j >= k) {
                coef += a.mass;  // atom at 0
            } else if (j + 1 == k && frac > 0.0) {
                rest += a.mass * (1.0 - frac) * w[j];
                coef += a.mass * frac;
            } else {
                double wj = j + 1 < w.size() ? (1.0 - frac) * w[j] + frac * w[j + 1] : w[j];
                rest += a.mass * wj;
            }
        }
        return {rest, coef};
    }
};

} // namespace qlimits::detail
