#ifndef RSEG_SUBSTRATE_HPP
#define RSEG_SUBSTRATE_HPP

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "rseg/autodiff.hpp"

namespace rseg {

// Central-difference gradient verification. Returns the max over coordinates
// of |analytic - numeric| / max(1, |numeric|). Intended to run in double
// precision; single precision drowns the signal in roundoff.
template <typename T>
double finite_difference_check(const std::function<T(const std::vector<T>&)>& f,
                               const std::vector<T>& analytic_grad,
                               const std::vector<T>& point, T step) {
    if (analytic_grad.size() != point.size())
        throw std::invalid_argument("finite_difference_check: gradient size mismatch");
    double worst = 0.0;
    std::vector<T> x = point;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const T saved = x[i];
        x[i] = saved + step;
        const double fp = static_cast<double>(f(x));
        x[i] = saved - step;
        const double fm = static_cast<double>(f(x));
        x[i] = saved;
        const double numeric = (fp - fm) / (2.0 * static_cast<double>(step));
        const double err = std::abs(static_cast<double>(analytic_grad[i]) - numeric) /
                           std::max(1.0, std::abs(numeric));
        worst = std::max(worst, err);
    }
    return worst;
}

// Convenience wrapper for functions expressed as tape graphs: builds the
// graph once per evaluation via 'build', which maps a flat point to a scalar
// Var on a fresh tape.
template <typename T>
double finite_difference_check_graph(
    const std::function<ad::Var<T>(ad::Tape<T>&, const std::vector<T>&)>& build,
    const std::vector<T>& point, T step, int leaf_id = 0) {
    ad::Tape<T> tape;
    ad::Var<T> out = build(tape, point);
    tape.backward(out.id);
    const std::vector<T> analytic = tape.grad(leaf_id).data;
    std::function<T(const std::vector<T>&)> f = [&build](const std::vector<T>& p) {
        ad::Tape<T> t;
        return build(t, p).value().data[0];
    };
    return finite_difference_check<T>(f, analytic, point, step);
}

}  // namespace rseg

#endif
