#include "dgn/deflation.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "dgn/error.hpp"
#include "dgn/numerics.hpp"

namespace dgn {

namespace {

// A point closer than this (relative to its own size) counts as deflated.
constexpr double kAtPointTolerance = 1e-13;

}  // namespace

std::string_view to_string(DeflationVariant variant) {
    switch (variant) {
        case DeflationVariant::MultiShift: return "multi-shift";
        case DeflationVariant::SingleShift: return "single-shift";
        case DeflationVariant::Exponential: return "exponential";
    }
    return "unknown";
}

DeflationVariant deflation_variant_from_string(std::string_view name) {
    if (name == "multi-shift") return DeflationVariant::MultiShift;
    if (name == "single-shift") return DeflationVariant::SingleShift;
    if (name == "exponential") return DeflationVariant::Exponential;
    throw ConfigError("unknown deflation variant '" + std::string(name) +
                      "' (expected multi-shift, single-shift or exponential)");
}

void DeflationConfig::validate() const {
    if (variant == DeflationVariant::Exponential) return;
    if (!(theta > 0.0) || !std::isfinite(theta)) throw ConfigError("deflation theta must be positive");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("deflation sigma must be nonnegative");
}

template <Field S>
DeflationState<S>::DeflationState(DeflationConfig config, Metric<S> metric)
    : config_(config), metric_(std::move(metric)) {
    config_.validate();
}

template <Field S>
DeflationState<S> DeflationState<S>::with_point(Vector<S> y) const {
    if (!points_.empty() && y.size() != points_.front().size()) {
        throw ShapeError("add_deflation_point: point has dimension " + std::to_string(y.size()) + ", expected " +
                         std::to_string(points_.front().size()));
    }
    if (!y.allFinite()) throw InvalidInputError("add_deflation_point: non-finite point");
    DeflationState next = *this;
    next.points_.push_back(std::move(y));
    return next;
}

template <Field S>
std::vector<double> DeflationState<S>::distances(const Vector<S>& x) const {
    std::vector<double> d;
    d.reserve(points_.size());
    for (const auto& y : points_) {
        if (y.size() != x.size()) throw ShapeError("deflation: evaluation point has wrong dimension");
        const double dist = metric_.distance(x, y);
        const double scale = 1.0 + metric_.distance(y, Vector<S>::Zero(y.size()));
        if (!(dist >= kAtPointTolerance * scale)) {
            throw AtDeflatedPointError("deflation operator evaluated at a deflated point");
        }
        d.push_back(dist);
    }
    return d;
}

template <Field S>
double DeflationState<S>::log_mu(const Vector<S>& x) const {
    const auto d = distances(x);
    const double theta = config_.theta;
    const double sigma = config_.sigma;
    double acc = 0.0;
    switch (config_.variant) {
        case DeflationVariant::MultiShift:
            for (double di : d) acc += std::log(sigma + std::pow(di, -theta));
            return acc;
        case DeflationVariant::SingleShift: {
            if (d.empty()) return 0.0;
            double log_prod = 0.0;
            for (double di : d) log_prod -= theta * std::log(di);
            // log(sigma + e^L) without overflow
            if (sigma == 0.0) return log_prod;
            const double a = std::log(sigma);
            const double hi = std::max(a, log_prod);
            return hi + std::log1p(std::exp(std::min(a, log_prod) - hi));
        }
        case DeflationVariant::Exponential:
            for (double di : d) acc += 1.0 / di;
            return acc;
    }
    return acc;
}

template <Field S>
double DeflationState<S>::mu(const Vector<S>& x) const {
    if (points_.empty()) return 1.0;
    return std::exp(log_mu(x));
}

template <Field S>
Vector<S> DeflationState<S>::grad_eta(const Vector<S>& x) const {
    Vector<S> g = Vector<S>::Zero(x.size());
    if (points_.empty()) return g;
    const auto d = distances(x);
    const double theta = config_.theta;
    const double sigma = config_.sigma;
    switch (config_.variant) {
        case DeflationVariant::MultiShift:
            // d/dx log(sigma + d^-theta) = -theta grad(d) / (d (1 + sigma d^theta))
            for (std::size_t i = 0; i < d.size(); ++i) {
                const double coeff = -theta / (d[i] * (1.0 + sigma * std::pow(d[i], theta)));
                g += coeff * metric_.gradient(x, points_[i]);
            }
            break;
        case DeflationVariant::SingleShift: {
            double log_prod = 0.0;
            for (double di : d) log_prod -= theta * std::log(di);
            // P / (sigma + P) with P = prod d_i^-theta
            const double weight = sigma == 0.0 ? 1.0 : 1.0 / (1.0 + sigma * std::exp(-log_prod));
            for (std::size_t i = 0; i < d.size(); ++i) {
                g += (-theta * weight / d[i]) * metric_.gradient(x, points_[i]);
            }
            break;
        }
        case DeflationVariant::Exponential:
            for (std::size_t i = 0; i < d.size(); ++i) {
                g += (-1.0 / (d[i] * d[i])) * metric_.gradient(x, points_[i]);
            }
            break;
    }
    return g;
}

double Grid2D::x_at(Index i) const {
    return nx == 1 ? x_lo : x_lo + (x_hi - x_lo) * static_cast<double>(i) / static_cast<double>(nx - 1);
}

double Grid2D::y_at(Index j) const {
    return ny == 1 ? y_lo : y_lo + (y_hi - y_lo) * static_cast<double>(j) / static_cast<double>(ny - 1);
}

void Grid2D::validate() const {
    if (nx < 1 || ny < 1) throw ConfigError("grid must have at least one node per axis");
    if (!(x_hi >= x_lo) || !(y_hi >= y_lo)) throw ConfigError("grid bounds must satisfy lo <= hi");
}

BetaField beta_field(const Problem<double>& problem, const DeflationState<double>& state, const Grid2D& grid) {
    if (problem.num_params != 2) throw ConfigError("beta_field requires a problem with two parameters");
    grid.validate();
    BetaField field{grid, {}};
    field.values.reserve(static_cast<std::size_t>(grid.nx * grid.ny));
    RealVector x(2);
    for (Index j = 0; j < grid.ny; ++j) {
        for (Index i = 0; i < grid.nx; ++i) {
            x << grid.x_at(i), grid.y_at(j);
            std::optional<double> value;
            try {
                const RealVector r = problem.residual(x);
                const RealMatrix jac = problem.jacobian(x);
                const RealVector p = lsq_min_norm<double>(jac, -r);
                const double beta = 1.0 - state.grad_eta(x).dot(p);
                if (std::isfinite(beta)) value = beta;
            } catch (const Error&) {
                value.reset();
            }
            field.values.push_back(value);
        }
    }
    return field;
}

template class DeflationState<double>;
template class DeflationState<Complex>;

}  // namespace dgn
