#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace qlimits {

enum class Interp {
    Step,   // right-continuous step function (cadlag sample paths)
    Linear, // piecewise linear (continuous inputs, fluid iterates)
};

// A real-valued path sampled on the uniform grid {0, h, 2h, ..., Kh}.
// Evaluation is total on [0, horizon]; anything outside (beyond a small
// rounding slack) throws rather than extrapolating silently.
class GridPath {
public:
    GridPath() = default;
    GridPath(double step, std::vector<double> values, Interp mode = Interp::Step);

    static GridPath constant(double step, std::size_t n_values, double value,
                             Interp mode = Interp::Step);
    // Samples f at the grid points.
    static GridPath sampled(double step, std::size_t n_values,
                            const std::function<double(double)>& f,
                            Interp mode = Interp::Linear);

    double step() const { return step_; }
    std::size_t size() const { return values_.size(); }
    double horizon() const { return step_ * static_cast<double>(values_.size() - 1); }
    Interp interp() const { return mode_; }
    void set_interp(Interp m) { mode_ = m; }

    double value(double t) const;
    double operator[](std::size_t k) const { return values_[k]; }
    double& operator[](std::size_t k) { return values_[k]; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    // Index of the grid point at (or immediately below) time t.
    std::size_t index_below(double t) const;

private:
    double step_ = 1.0;
    std::vector<double> values_;
    Interp mode_ = Interp::Step;
};

// sup |g - h| over the union of both grids restricted to [0, T].
double sup_distance(const GridPath& g, const GridPath& h, double T);

} // namespace qlimits
