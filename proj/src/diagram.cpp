#include "trafnet/diagram.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "trafnet/errors.hpp"

namespace trafnet {

namespace {

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

Demand Demand::piecewise_linear(double freeflow_speed, double capacity) {
    return Demand(DiagramKind::PiecewiseLinear, freeflow_speed, capacity);
}

Demand Demand::exponential(double scale, double rate) {
    return Demand(DiagramKind::Exponential, scale, rate);
}

double Demand::operator()(double rho) const {
    if (kind_ == DiagramKind::PiecewiseLinear) {
        return std::min(first_ * rho, second_);
    }
    return first_ * -std::expm1(-second_ * rho);
}

double Demand::derivative(double rho) const {
    if (kind_ == DiagramKind::PiecewiseLinear) {
        return first_ * rho <= second_ ? first_ : 0.0;
    }
    return first_ * second_ * std::exp(-second_ * rho);
}

double Demand::supremum() const { return kind_ == DiagramKind::PiecewiseLinear ? second_ : first_; }

double Demand::saturation_density() const {
    return kind_ == DiagramKind::PiecewiseLinear ? second_ / first_ : kInfinity;
}

double Demand::density_scale() const {
    return kind_ == DiagramKind::PiecewiseLinear ? second_ / first_ : 1.0 / second_;
}

double Demand::inverse(double flow) const {
    if (!(flow >= 0.0)) {
        throw InversionFailure("demand inverse requested for negative flow");
    }
    if (kind_ == DiagramKind::PiecewiseLinear) {
        if (flow > second_) {
            throw InversionFailure("flow exceeds piecewise-linear demand capacity");
        }
        return flow / first_;
    }
    if (flow >= first_) {
        throw InversionFailure("flow is not below the exponential demand supremum");
    }
    return -std::log1p(-flow / first_) / second_;
}

std::optional<double> Demand::kink() const {
    if (kind_ == DiagramKind::PiecewiseLinear) {
        return second_ / first_;
    }
    return std::nullopt;
}

std::optional<std::string> Demand::parameter_error() const {
    if (kind_ == DiagramKind::PiecewiseLinear) {
        if (!positive_finite(first_)) return "demand free-flow speed must be positive and finite";
        if (!positive_finite(second_)) return "demand capacity must be positive and finite";
    } else {
        if (!positive_finite(first_)) return "exponential demand scale must be positive and finite";
        if (!positive_finite(second_)) return "exponential demand rate must be positive and finite";
    }
    return std::nullopt;
}

Supply Supply::piecewise_linear(double congestion_speed, double jam_density, double capacity) {
    return Supply(DiagramKind::PiecewiseLinear, congestion_speed, capacity, jam_density);
}

Supply Supply::exponential(double scale, double rate, double jam_density) {
    return Supply(DiagramKind::Exponential, scale, rate, jam_density);
}

double Supply::operator()(double rho) const {
    if (kind_ == DiagramKind::PiecewiseLinear) {
        return std::min(first_ * (jam_ - rho), second_);
    }
    return first_ * (std::exp(-second_ * rho) - std::exp(-second_ * jam_));
}

double Supply::derivative(double rho) const {
    if (kind_ == DiagramKind::PiecewiseLinear) {
        return first_ * (jam_ - rho) >= second_ ? 0.0 : -first_;
    }
    return -first_ * second_ * std::exp(-second_ * rho);
}

std::optional<double> Supply::kink() const {
    if (kind_ == DiagramKind::PiecewiseLinear && std::isfinite(second_)) {
        return jam_ - second_ / first_;
    }
    return std::nullopt;
}

std::optional<std::string> Supply::parameter_error() const {
    if (!positive_finite(jam_)) return "jam density must be positive and finite";
    if (kind_ == DiagramKind::PiecewiseLinear) {
        if (!positive_finite(first_)) return "supply congestion speed must be positive and finite";
        if (!(second_ > 0.0)) return "supply capacity must be positive";
    } else {
        if (!positive_finite(first_)) return "exponential supply scale must be positive and finite";
        if (!positive_finite(second_)) return "exponential supply rate must be positive and finite";
    }
    return std::nullopt;
}

CriticalPoint critical_point(const Demand& demand, const Supply& supply) {
    if (auto err = demand.parameter_error()) throw NoCrossing(*err);
    if (auto err = supply.parameter_error()) throw NoCrossing(*err);

    const double jam = supply.jam_density();
    if (demand.kind() == DiagramKind::PiecewiseLinear && supply.kind() == DiagramKind::PiecewiseLinear) {
        const double v = demand.freeflow_speed();
        const double w = supply.congestion_speed();
        const double demand_cap = demand.capacity();
        const double supply_cap = supply.capacity();
        const double triangle = v * w * jam / (v + w);
        if (triangle <= demand_cap && triangle <= supply_cap) {
            return {w * jam / (v + w), triangle};
        }
        if (demand_cap < supply_cap) {
            return {jam - demand_cap / w, demand_cap};
        }
        if (supply_cap < demand_cap) {
            return {supply_cap / v, supply_cap};
        }
        std::ostringstream msg;
        msg << "demand and supply plateaus coincide at " << demand_cap << "; crossing is not unique";
        throw NoCrossing(msg.str());
    }

    // Demand minus supply is nondecreasing and changes sign on [0, jam].
    const double target = 1e-10 * demand.supremum();
    double lo = 0.0;
    double hi = jam;
    auto gap = [&](double rho) { return demand(rho) - supply(rho); };
    if (!(gap(lo) < 0.0) || !(gap(hi) > 0.0)) {
        throw NoCrossing("demand and supply do not change order on [0, jam density]");
    }
    double mid = 0.5 * (lo + hi);
    for (int iter = 0; iter < 400; ++iter) {
        mid = 0.5 * (lo + hi);
        const double g = gap(mid);
        if (std::abs(g) <= target) break;
        (g < 0.0 ? lo : hi) = mid;
    }
    return {mid, demand(mid)};
}

}  // namespace trafnet
