#ifndef EAEE_WEIGHT_HPP
#define EAEE_WEIGHT_HPP

#include "eaee/common.hpp"

#include <cmath>
#include <functional>
#include <memory>
#include <sstream>
#include <string>

namespace eaee {

enum class WeightKind { Constant, Rdpg, Completion, InverseVariance, Network, Custom };

/*
 * Weight h(s, t) of the eigenvector-assisted moment function, with its partial
 * derivative in t. s is the plug-in inner product x~_i' x~_j, t = x' x~_j the
 * current fitted value.
 *
 * Builtins:
 *   constant          h = 1
 *   rdpg              h = 1 / {max(s, s_floor)(1 - t)},   t < 1
 *   completion(p)     h = p / {(1 - p) t^2 + 1}
 *   inverse_variance  h = 1 / var(s),                    var(s) > 0
 *   network(v)        h = 1 / {max(s, s_floor)(1 - t) + v^2}, denominator > 0
 *
 * s is a plug-in edge probability; on sparse or small graphs it can be <= 0,
 * so rdpg and network floor it at s_floor (default 1e-2) instead of failing
 * every row that has such a neighbour.
 *
 * All builtins except custom weights expose a closed-form antiderivative of
 * (a - u) h(s, u) over u in [0, t], used by the M-criterion.
 */
class WeightFunction {
public:
    using Fn = std::function<double(double, double)>;
    using Domain = std::function<bool(double, double)>;
    using VarianceFn = std::function<double(double)>;

    WeightKind kind() const { return kind_; }
    const std::string& name() const { return name_; }
    /// p for completion, v for network, 0 otherwise.
    double parameter() const { return param_; }
    /// Lower clamp applied to s by rdpg and network; 0 otherwise.
    double s_floor() const { return s_floor_; }

    static WeightFunction constant() { return WeightFunction(WeightKind::Constant, "constant"); }

    static WeightFunction rdpg(double s_floor = 1e-2) {
        require(s_floor > 0.0, "rdpg weight: s_floor must be positive");
        WeightFunction w(WeightKind::Rdpg, "rdpg");
        w.s_floor_ = s_floor;
        return w;
    }

    static WeightFunction completion(double p) {
        require(p > 0.0 && p <= 1.0, "completion weight: p must lie in (0, 1]");
        WeightFunction w(WeightKind::Completion, "completion");
        w.param_ = p;
        return w;
    }

    /// h(s, t) = 1 / var(s); e.g. var(s) = s (1 - s) reproduces the RDPG one-step estimator.
    static WeightFunction inverse_variance(VarianceFn variance, std::string name = "inverse_variance") {
        require(static_cast<bool>(variance), "inverse_variance weight: variance function is empty");
        WeightFunction w(WeightKind::InverseVariance, std::move(name));
        w.variance_ = std::make_shared<VarianceFn>(std::move(variance));
        return w;
    }

    static WeightFunction network(double v, double s_floor = 1e-2) {
        require(v >= 0.0, "network weight: v must be non-negative");
        require(s_floor >= 0.0, "network weight: s_floor must be non-negative");
        WeightFunction w(WeightKind::Network, "network");
        w.param_ = v;
        w.s_floor_ = s_floor;
        return w;
    }

    static WeightFunction custom(std::string name, Fn h, Fn dh_dt, Domain domain = {}) {
        require(static_cast<bool>(h) && static_cast<bool>(dh_dt), "custom weight: h and dh_dt are required");
        WeightFunction w(WeightKind::Custom, std::move(name));
        w.custom_ = std::make_shared<CustomParts>(CustomParts{std::move(h), std::move(dh_dt), std::move(domain)});
        return w;
    }

    bool in_domain(double s, double t) const {
        switch (kind_) {
        case WeightKind::Constant:
        case WeightKind::Completion:
            return std::isfinite(s) && std::isfinite(t);
        case WeightKind::Rdpg:
            return std::isfinite(s) && t < 1.0;
        case WeightKind::InverseVariance: {
            const double var = (*variance_)(s);
            return std::isfinite(t) && var > 0.0 && std::isfinite(var);
        }
        case WeightKind::Network:
            return std::isfinite(t) && network_denominator(s, t) > 0.0;
        case WeightKind::Custom:
            return !custom_->domain || custom_->domain(s, t);
        }
        return false;
    }

    /// h(s, t); throws DomainError outside the domain or when h <= 0.
    double operator()(double s, double t) const {
        check(s, t, -1);
        const double h = raw_value(s, t);
        if (!(h > 0.0) || !std::isfinite(h)) {
            throw DomainError(name_ + " weight is not positive at (" + std::to_string(s) + ", " +
                              std::to_string(t) + ")");
        }
        return h;
    }

    double dt(double s, double t) const {
        check(s, t, -1);
        return raw_dt(s, t);
    }

    bool has_antiderivative() const { return kind_ != WeightKind::Custom; }

    /// Integral of (a - u) h(s, u) du over [0, t]; requires has_antiderivative().
    double antiderivative(double s, double a, double t) const {
        switch (kind_) {
        case WeightKind::Constant:
            return a * t - 0.5 * t * t;
        case WeightKind::Rdpg:
            return (t + (1.0 - a) * std::log1p(-t)) / effective_s(s);
        case WeightKind::Completion: {
            const double p = param_;
            const double c = 1.0 - p;
            if (c <= 0.0) {
                return a * t - 0.5 * t * t;
            }
            const double rc = std::sqrt(c);
            return p * a * std::atan(rc * t) / rc - 0.5 * p / c * std::log1p(c * t * t);
        }
        case WeightKind::InverseVariance:
            return (a * t - 0.5 * t * t) / (*variance_)(s);
        case WeightKind::Network: {
            const double sig = effective_s(s);
            const double c = sig + param_ * param_;
            return t / sig - (a - c / sig) / sig * std::log1p(-sig * t / c);
        }
        case WeightKind::Custom:
            break;
        }
        throw std::logic_error("antiderivative: weight '" + name_ + "' has no closed form");
    }

    /*
     * Vectorised evaluation over neighbours j: h_j = h(s_j, t_j) and, when
     * requested, dh_j = dh/dt(s_j, t_j). Throws DomainError naming the first
     * offending j.
     */
    void evaluate(const Vector& s, const Vector& t, Vector& h, Vector* dh = nullptr) const {
        const Index n = s.size();
        h.resize(n);
        if (dh != nullptr) {
            dh->resize(n);
        }
        switch (kind_) {
        case WeightKind::Constant:
            h.setOnes();
            if (dh != nullptr) {
                dh->setZero();
            }
            return;
        case WeightKind::Rdpg: {
            first_violation([&](Index j) { return std::isfinite(s(j)) && t(j) < 1.0; }, n, s, t);
            const auto one_minus_t = (1.0 - t.array());
            h = (s.array().max(s_floor_) * one_minus_t).inverse().matrix();
            if (dh != nullptr) {
                *dh = (h.array() / one_minus_t).matrix();
            }
            return;
        }
        case WeightKind::Completion: {
            first_violation([&](Index j) { return std::isfinite(t(j)); }, n, s, t);
            const double p = param_;
            const auto denom = ((1.0 - p) * t.array().square() + 1.0);
            h = (p / denom).matrix();
            if (dh != nullptr) {
                *dh = (-2.0 * p * (1.0 - p) * t.array() / denom.square()).matrix();
            }
            return;
        }
        case WeightKind::Network: {
            first_violation([&](Index j) { return network_denominator(s(j), t(j)) > 0.0; }, n, s, t);
            const auto sig = s.array().max(s_floor_);
            const auto denom = sig * (1.0 - t.array()) + param_ * param_;
            h = denom.inverse().matrix();
            if (dh != nullptr) {
                *dh = (sig / denom.square()).matrix();
            }
            return;
        }
        case WeightKind::InverseVariance:
        case WeightKind::Custom:
            for (Index j = 0; j < n; ++j) {
                check(s(j), t(j), j);
                h(j) = raw_value(s(j), t(j));
                if (!(h(j) > 0.0) || !std::isfinite(h(j))) {
                    throw DomainError(name_ + " weight is not positive at neighbour " + std::to_string(j), j);
                }
                if (dh != nullptr) {
                    (*dh)(j) = raw_dt(s(j), t(j));
                }
            }
            return;
        }
    }

private:
    struct CustomParts {
        Fn h;
        Fn dh_dt;
        Domain domain;
    };

    WeightFunction(WeightKind kind, std::string name) : kind_(kind), name_(std::move(name)) {}

    double effective_s(double s) const { return std::max(s, s_floor_); }

    double network_denominator(double s, double t) const {
        return effective_s(s) * (1.0 - t) + param_ * param_;
    }

    void check(double s, double t, Index j) const {
        if (!in_domain(s, t)) {
            std::ostringstream msg;
            msg << name_ << " weight evaluated outside its domain at (s, t) = (" << s << ", " << t << ")";
            if (j >= 0) {
                msg << " for neighbour " << j;
            }
            throw DomainError(msg.str(), j);
        }
    }

    template <typename Pred>
    void first_violation(Pred ok, Index n, const Vector& s, const Vector& t) const {
        for (Index j = 0; j < n; ++j) {
            if (!ok(j)) {
                check(s(j), t(j), j);
                // in_domain and the vectorised predicate agree, so check() threw.
            }
        }
    }

    double raw_value(double s, double t) const {
        switch (kind_) {
        case WeightKind::Constant:
            return 1.0;
        case WeightKind::Rdpg:
            return 1.0 / (effective_s(s) * (1.0 - t));
        case WeightKind::Completion:
            return param_ / ((1.0 - param_) * t * t + 1.0);
        case WeightKind::InverseVariance:
            return 1.0 / (*variance_)(s);
        case WeightKind::Network:
            return 1.0 / network_denominator(s, t);
        case WeightKind::Custom:
            return custom_->h(s, t);
        }
        return 0.0;
    }

    double raw_dt(double s, double t) const {
        switch (kind_) {
        case WeightKind::Constant:
        case WeightKind::InverseVariance:
            return 0.0;
        case WeightKind::Rdpg:
            return 1.0 / (effective_s(s) * (1.0 - t) * (1.0 - t));
        case WeightKind::Completion: {
            const double denom = (1.0 - param_) * t * t + 1.0;
            return -2.0 * param_ * (1.0 - param_) * t / (denom * denom);
        }
        case WeightKind::Network: {
            const double denom = network_denominator(s, t);
            return effective_s(s) / (denom * denom);
        }
        case WeightKind::Custom:
            return custom_->dh_dt(s, t);
        }
        return 0.0;
    }

    WeightKind kind_;
    std::string name_;
    double param_ = 0.0;
    double s_floor_ = 0.0;
    std::shared_ptr<const VarianceFn> variance_;
    std::shared_ptr<const CustomParts> custom_;
};

/*
 * Builtin weights by name: "constant", "rdpg", "completion" (parameter = p),
 * "network" (parameter = v) and "one_step", the inverse-variance weight
 * 1 / {s (1 - s)} of Bernoulli entries.
 */
inline WeightFunction builtin_weight(const std::string& name, double parameter = 0.0) {
    if (name == "constant") {
        return WeightFunction::constant();
    }
    if (name == "rdpg") {
        return WeightFunction::rdpg();
    }
    if (name == "completion") {
        return WeightFunction::completion(parameter);
    }
    if (name == "network") {
        return WeightFunction::network(parameter);
    }
    if (name == "one_step") {
        return WeightFunction::inverse_variance([](double s) { return s * (1.0 - s); }, "one_step");
    }
    throw std::invalid_argument("unknown weight function '" + name + "'");
}

} // namespace eaee

#endif
