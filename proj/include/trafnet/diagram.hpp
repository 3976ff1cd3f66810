#pragma once

#include <limits>
#include <optional>
#include <string>

namespace trafnet {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class DiagramKind { PiecewiseLinear, Exponential };

/**
 * @brief Demand (sending) function of a link.
 *
 * PiecewiseLinear: min(v * rho, capacity).
 * Exponential:     scale * (1 - exp(-rate * rho)).
 */
class Demand {
public:
    static Demand piecewise_linear(double freeflow_speed, double capacity);
    static Demand exponential(double scale, double rate);

    DiagramKind kind() const { return kind_; }

    double operator()(double rho) const;

    /// Left derivative; at the piecewise-linear kink this is the free-flow slope.
    double derivative(double rho) const;

    /// Supremum over [0, inf).
    double supremum() const;

    /// True when the supremum is reached at a finite density.
    bool attains_supremum() const { return kind_ == DiagramKind::PiecewiseLinear; }

    /// Density at which the supremum is first reached (infinite for Exponential).
    double saturation_density() const;

    /// Density scale used for sampling and clamp thresholds.
    double density_scale() const;

    /// Smallest density with demand equal to `flow`.
    double inverse(double flow) const;

    /// Non-differentiable point, if any.
    std::optional<double> kink() const;

    /// Human-readable reason when the parameters break the model assumptions.
    std::optional<std::string> parameter_error() const;

    // PiecewiseLinear parameters.
    double freeflow_speed() const { return first_; }
    double capacity() const { return second_; }
    // Exponential parameters.
    double scale() const { return first_; }
    double rate() const { return second_; }

private:
    Demand(DiagramKind kind, double first, double second) : kind_(kind), first_(first), second_(second) {}

    DiagramKind kind_;
    double first_;
    double second_;
};

/**
 * @brief Supply (receiving) function of an ordinary link.
 *
 * PiecewiseLinear: min(w * (jam - rho), capacity), capacity may be infinite.
 * Exponential:     scale * (exp(-rate * rho) - exp(-rate * jam)).
 */
class Supply {
public:
    static Supply piecewise_linear(double congestion_speed, double jam_density, double capacity = kInfinity);
    static Supply exponential(double scale, double rate, double jam_density);

    DiagramKind kind() const { return kind_; }

    double operator()(double rho) const;
    double derivative(double rho) const;
    double jam_density() const { return jam_; }

    std::optional<double> kink() const;
    std::optional<std::string> parameter_error() const;

    // PiecewiseLinear parameters.
    double congestion_speed() const { return first_; }
    double capacity() const { return second_; }
    // Exponential parameters.
    double scale() const { return first_; }
    double rate() const { return second_; }

private:
    Supply(DiagramKind kind, double first, double second, double jam)
        : kind_(kind), first_(first), second_(second), jam_(jam) {}

    DiagramKind kind_;
    double first_;
    double second_;
    double jam_;
};

struct CriticalPoint {
    double density;
    double flow;
};

/// Unique density where demand equals supply. Throws NoCrossing.
CriticalPoint critical_point(const Demand& demand, const Supply& supply);

}  // namespace trafnet
