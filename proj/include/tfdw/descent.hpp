#pragma once
// Preconditioned projected gradient descent on the sphere {u : int |u|^2 = m}.
//
// The search direction is the Sobolev gradient M^{-1} G projected onto the
// tangent space in the M-metric, with M = 2 (c K + sigma W), K the kinetic form
// and W the mass matrix. Steps are retracted to the sphere by rescaling and
// accepted only when the objective decreases (Armijo backtracking), so the
// accepted values form a non-increasing sequence.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "tfdw/errors.hpp"

namespace tfdw {

enum class StepRule { fixed, adaptive };

struct DescentOptions {
    double mass = 1;
    std::size_t max_iter = 5000;
    double tolerance = 1e-7;          // relative projected-gradient norm
    StepRule step_rule = StepRule::adaptive;
    double fixed_step = 0.5;
    double floor = -std::numeric_limits<double>::infinity(); // divergence threshold
    bool record_history = true;
};

// What an objective returns besides its gradient. magnitude is the sum of the
// absolute values of the objective's terms; it sets the scale of the residual
// when the multiplier (and with it the full gradient) is close to zero.
struct Evaluation {
    double value = 0;
    double magnitude = 0;
};

struct DescentOutcome {
    std::vector<double> u;
    double value = 0;
    double residual = 0;
    double multiplier = 0; // mu = <g, u> / (2 m)
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<double> history; // accepted objective values, starting with the initial state
};

// Objective: value_gradient(u, G) returns an Evaluation and writes dE/du into G;
// kinetic_scale(u) is the coefficient of the kinetic form in its Hessian (c_W
// for the energy).
template <class Model, class Objective>
DescentOutcome projected_descent(Model const& model, Objective const& objective, std::vector<double> u,
                                 DescentOptions const& opt) {
    std::size_t const n = u.size();
    double const m = opt.mass;
    if (!(m > 0)) throw domain_error("descent: target mass must be positive");
    if (!(opt.tolerance > 0)) throw configuration_error("descent: tolerance must be positive");

    auto retract = [&](std::vector<double>& v) {
        double const mv = model.mass(v);
        if (!(mv > 0) || !std::isfinite(mv)) throw invalid_state_error("descent: state collapsed to zero");
        double const s = std::sqrt(m / mv);
        for (auto& x : v) x *= s;
    };
    model.constrain(u);
    retract(u);

    std::vector<double> G(n), Wu(n), d(n), Pu(n), dir(n), trial(n), Gtrial(n), Gperp(n), Gperp_prev(n),
        u_prev(n), step(n);

    DescentOutcome out;
    Evaluation ev = objective.value_gradient(u, G);
    model.constrain(G);
    double f = ev.value;
    if (opt.record_history) out.history.push_back(f);

    double kscale = objective.kinetic_scale(u);
    double sigma = -1;
    std::optional<typename Model::Preconditioner> P;
    double tau = opt.step_rule == StepRule::fixed ? opt.fixed_step : 1.0;
    bool have_prev = false;

    auto projected = [&](std::vector<double> const& v, std::vector<double> const& grad, std::vector<double>& gp,
                         double& lambda) {
        model.apply_mass(v, Wu);
        double uG = 0;
        for (std::size_t i = 0; i < n; ++i) uG += v[i] * grad[i];
        lambda = uG / m;
        for (std::size_t i = 0; i < n; ++i) gp[i] = grad[i] - lambda * Wu[i];
    };

    // iterations in a row whose accepted value did not move at working precision
    constexpr std::size_t stall_window = 50;
    std::size_t stalled = 0;
    Evaluation ev_trial;

    double lambda = 0;
    for (std::size_t it = 0;; ++it) {
        projected(u, G, Gperp, lambda);
        double const gnorm = std::max(std::sqrt(model.dual_norm2(G)), 2 * ev.magnitude / std::sqrt(m));
        out.residual = gnorm > 0 ? std::sqrt(model.dual_norm2(Gperp)) / gnorm : 0.0;
        out.multiplier = lambda / 2;
        out.iterations = it;
        if (out.residual <= opt.tolerance) {
            out.converged = true;
            break;
        }
        if (it >= opt.max_iter) break;
        if (stalled >= stall_window) break;

        // refresh the preconditioner when the spectral shift has drifted
        double const want = std::max(std::abs(lambda) / 2, model.sigma_floor(kscale));
        double const kwant = objective.kinetic_scale(u);
        if (!P || want > 2 * sigma || want < 0.5 * sigma || kwant > 1.5 * kscale || kwant < kscale / 1.5) {
            sigma = want;
            kscale = kwant;
            P.emplace(model.preconditioner(kscale, sigma));
        }

        // the projected gradient keeps the slope free of cancellation near convergence
        P->apply(Gperp, d);
        model.apply_mass(u, Wu);
        P->apply(Wu, Pu);
        double num = 0, den = 0;
        for (std::size_t i = 0; i < n; ++i) {
            num += Wu[i] * d[i];
            den += Wu[i] * Pu[i];
        }
        double const beta = num / den;
        double slope = 0;
        for (std::size_t i = 0; i < n; ++i) {
            dir[i] = d[i] - beta * Pu[i];
            slope += Gperp[i] * dir[i];
        }
        if (!(slope > 0)) break; // no descent direction left at working precision

        if (opt.step_rule == StepRule::adaptive && have_prev) {
            // two-point step in the preconditioner metric
            for (std::size_t i = 0; i < n; ++i) step[i] = u[i] - u_prev[i];
            double sy = 0;
            for (std::size_t i = 0; i < n; ++i) sy += step[i] * (Gperp[i] - Gperp_prev[i]);
            double const sMs = model.metric(step, kscale, sigma);
            tau = sy > 0 ? std::clamp(sMs / sy, 1e-6, 1e6) : std::min(2 * tau, 1e6);
        } else if (opt.step_rule == StepRule::fixed) {
            tau = opt.fixed_step;
        }

        bool accepted = false;
        double f_trial = f;
        for (int bt = 0; bt < 60; ++bt) {
            for (std::size_t i = 0; i < n; ++i) trial[i] = u[i] - tau * dir[i];
            retract(trial);
            ev_trial = objective.value_gradient(trial, Gtrial);
            model.constrain(Gtrial);
            f_trial = ev_trial.value;
            if (f_trial <= f - 1e-4 * tau * slope) {
                accepted = true;
                break;
            }
            tau *= 0.5;
        }
        if (!accepted) {
            if (f_trial <= f) accepted = true; // round-off regime: keep it only if not worse
            else break;
        }
        if (!(f_trial >= opt.floor))
            throw solver_failure("descent: objective fell below the a-priori lower bound (numerical blow-up)");

        double const noise = 64 * std::numeric_limits<double>::epsilon() * std::max(ev.magnitude, std::abs(f));
        stalled = f - f_trial <= noise ? stalled + 1 : 0;

        u_prev = u;
        Gperp_prev = Gperp;
        have_prev = true;
        u.swap(trial);
        G.swap(Gtrial);
        f = f_trial;
        ev = ev_trial;
        if (opt.record_history) out.history.push_back(f);
    }
    out.value = f;
    out.u = std::move(u);
    return out;
}

} // namespace tfdw
