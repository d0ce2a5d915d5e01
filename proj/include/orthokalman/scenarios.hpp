#pragma once

// Declarative runs of the filter: scenario generators for the bundled examples,
// the command interpreter, the timing harness and the dense-oracle comparison.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "orthokalman/covariance.hpp"
#include "orthokalman/errors.hpp"
#include "orthokalman/kalman.hpp"
#include "orthokalman/matrix.hpp"
#include "orthokalman/model.hpp"
#include "orthokalman/oracle.hpp"
#include "orthokalman/random.hpp"

namespace orthokalman {

/// Malformed scenario content (bad shapes, bad command indices, bad files).
class ScenarioError : public Error {
public:
    using Error::Error;
};

/// An engine failure while running a scenario, tagged with the step it hit.
class RunError : public Error {
public:
    RunError(StepIndex step, const std::string& what)
        : Error("step " + std::to_string(step) + ": " + what), step_(step) {}
    StepIndex step() const noexcept { return step_; }

private:
    StepIndex step_;
};

enum class CommandKind { FilterAll, Smooth, Forget, Rollback, PredictTo };

struct Command {
    CommandKind kind = CommandKind::FilterAll;
    StepIndex step = 0;  // argument of Forget, Rollback and PredictTo

    static Command filter_all() { return {CommandKind::FilterAll, 0}; }
    static Command smooth() { return {CommandKind::Smooth, 0}; }
    static Command forget(StepIndex i) { return {CommandKind::Forget, i}; }
    static Command rollback(StepIndex i) { return {CommandKind::Rollback, i}; }
    static Command predict_to(StepIndex i) { return {CommandKind::PredictTo, i}; }

    friend bool operator==(const Command&, const Command&) = default;
};

struct Scenario {
    std::string name;
    std::uint64_t seed = 0;
    std::vector<StepInput> steps;
    std::vector<Command> commands;
    std::vector<Vector> truth;  // empty, or one vector per step
};

struct StepResult {
    StepIndex index = 0;
    std::optional<Vector> truth;
    std::optional<Estimate> filtered;
    std::optional<Estimate> smoothed;
    double seconds = 0.0;  // time of the last evolve + observe of this step
};

struct RunResult {
    std::vector<StepResult> steps;  // steps touched by the commands, by index
};

/// Throws ScenarioError unless consecutive steps chain dimensionally and every
/// command refers to an existing step.
inline void validate(const Scenario& s) {
    const auto fail = [](std::size_t i, const std::string& msg) {
        throw ScenarioError("step " + std::to_string(i) + ": " + msg);
    };
    Index prev = 0;
    for (std::size_t i = 0; i < s.steps.size(); ++i) {
        const StepInput& st = s.steps[i];
        const Index n = st.state_dim();
        if (n < 1) {
            fail(i, "state dimension is unknown or not positive");
        }
        if (i == 0 && st.evolution) {
            fail(i, "the first step cannot have an evolution");
        }
        if (i > 0) {
            if (!st.evolution) {
                fail(i, "missing evolution");
            }
            const Evolution& e = *st.evolution;
            const Index l = e.F.rows();
            if (e.F.cols() != prev || l < 1) {
                fail(i, "F is " + detail::shape(e.F) + ", previous state has dimension " +
                            std::to_string(prev));
            }
            if (e.c.size() != l || e.K.dim() != l) {
                fail(i, "c or K does not match the rows of F");
            }
            if (e.H && (e.H->rows() != l || e.H->cols() != n)) {
                fail(i, "H is " + detail::shape(*e.H));
            }
            if (!e.H && l > n) {
                fail(i, "H is required when F has more rows than the new state dimension");
            }
        }
        if (st.dim && *st.dim != n) {
            fail(i, "declared dimension disagrees with the step's blocks");
        }
        if (st.observation) {
            const Observation& o = *st.observation;
            if (o.G.cols() != n || o.G.rows() < 1 || o.o.size() != o.G.rows() ||
                o.C.dim() != o.G.rows()) {
                fail(i, "observation blocks do not fit: G is " + detail::shape(o.G));
            }
        }
        prev = n;
    }
    if (!s.truth.empty()) {
        if (s.truth.size() != s.steps.size()) {
            throw ScenarioError("truth has " + std::to_string(s.truth.size()) +
                                " entries for " + std::to_string(s.steps.size()) + " steps");
        }
        for (std::size_t i = 0; i < s.truth.size(); ++i) {
            if (s.truth[i].size() != s.steps[i].state_dim()) {
                fail(i, "truth vector has the wrong length");
            }
        }
    }
    const auto count = static_cast<StepIndex>(s.steps.size());
    for (const Command& c : s.commands) {
        if (c.kind != CommandKind::FilterAll && c.kind != CommandKind::Smooth &&
            (c.step < 0 || c.step >= count)) {
            throw ScenarioError("command refers to step " + std::to_string(c.step) +
                                " of a " + std::to_string(count) + "-step scenario");
        }
    }
}

/// Feeds one step into the filter. `evolve` is false when the step's evolution
/// was already applied (after a rollback); `with_observation` false withholds
/// the observation, except in step 0 which has nothing else to anchor it.
inline void feed(Filter& filter, const StepInput& step, bool evolve, bool with_observation) {
    if (filter.empty()) {
        if (step.observation) {
            const Observation& o = *step.observation;
            filter.observe(o.G, o.o, o.C);
            return;
        }
        filter.start(step.state_dim());
        filter.observe();
        return;
    }
    if (evolve && step.evolution) {
        const Evolution& e = *step.evolution;
        filter.evolve(e.dim, e.H, e.F, e.c, e.K);
    }
    if (step.observation && (with_observation || !step.evolution)) {
        const Observation& o = *step.observation;
        filter.observe(o.G, o.o, o.C);
    } else {
        filter.observe();
    }
}

/// Executes the scenario's commands, in order, against `filter` (normally fresh).
inline RunResult run(const Scenario& scenario, Filter& filter) {
    validate(scenario);
    const auto count = static_cast<StepIndex>(scenario.steps.size());
    std::vector<StepResult> slots(scenario.steps.size());
    std::vector<bool> touched(scenario.steps.size(), false);
    for (StepIndex i = 0; i < count; ++i) {
        slots[i].index = i;
        if (!scenario.truth.empty()) {
            slots[i].truth = scenario.truth[i];
        }
    }

    StepIndex next = 0;
    std::optional<StepIndex> evolved;  // step whose evolution is already in the filter

    const auto process = [&](StepIndex i, bool with_observation) {
        try {
            const auto t0 = std::chrono::steady_clock::now();
            feed(filter, scenario.steps[i], !(evolved && *evolved == i), with_observation);
            const auto t1 = std::chrono::steady_clock::now();
            evolved.reset();
            slots[i].seconds = std::chrono::duration<double>(t1 - t0).count();
            slots[i].filtered = filter.estimate();
            touched[i] = true;
        } catch (const Error& e) {
            throw RunError(i, e.what());
        }
    };

    for (const Command& cmd : scenario.commands) {
        switch (cmd.kind) {
            case CommandKind::FilterAll:
                for (; next < count; ++next) {
                    process(next, true);
                }
                break;
            case CommandKind::PredictTo:
                for (; next <= cmd.step; ++next) {
                    process(next, false);
                }
                break;
            case CommandKind::Smooth:
                try {
                    filter.smooth();
                    for (StepIndex i = filter.earliest(); i <= filter.latest(); ++i) {
                        slots[i].smoothed = filter.estimate(i);
                        touched[i] = true;
                    }
                } catch (const Error& e) {
                    throw RunError(filter.empty() ? 0 : filter.latest(), e.what());
                }
                break;
            case CommandKind::Forget:
                try {
                    filter.forget(cmd.step);
                } catch (const Error& e) {
                    throw RunError(cmd.step, e.what());
                }
                break;
            case CommandKind::Rollback:
                try {
                    filter.rollback(cmd.step);
                } catch (const Error& e) {
                    throw RunError(cmd.step, e.what());
                }
                next = cmd.step;
                evolved = cmd.step;
                break;
        }
    }

    RunResult result;
    for (StepIndex i = 0; i < count; ++i) {
        if (touched[i]) {
            result.steps.push_back(std::move(slots[i]));
        }
    }
    return result;
}

inline RunResult run(const Scenario& scenario) {
    Filter filter;
    return run(scenario, filter);
}

// ---------------------------------------------------------------------------
// Generators

namespace detail {

inline Vector constant(Index n, double value) { return Vector::Constant(n, value); }

inline CovarianceSpec sigma_spec(Index n, double sigma) {
    return CovarianceSpec::diagonal_weights(constant(n, 1.0 / sigma));
}

}  // namespace detail

struct RotationOptions {
    Index obs_rows = 2;
    bool noiseless = false;  // exact rotation and observations with sigma 1e-12
    Index steps = 16;
};

/// A point rotating about the origin by 2*pi/16 per step, starting at (1, 0).
/// G has an identity in its first two rows (just [1 0] for one row); further
/// rows are standard normal draws. Commands predict from o_0 alone, roll back to
/// step 1, refilter with all observations and smooth.
inline Scenario gen_rotation(std::uint64_t seed, const RotationOptions& opt = {}) {
    if (opt.obs_rows < 1 || opt.obs_rows > 6) {
        throw ScenarioError("rotation: obs_rows must be in [1, 6]");
    }
    Rng rng(seed);
    const double alpha = 2.0 * std::numbers::pi / 16.0;
    Matrix F(2, 2);
    F << std::cos(alpha), -std::sin(alpha), std::sin(alpha), std::cos(alpha);

    Matrix G = Matrix::Zero(opt.obs_rows, 2);
    G(0, 0) = 1.0;
    if (opt.obs_rows > 1) {
        G(1, 1) = 1.0;
    }
    for (Index i = 2; i < opt.obs_rows; ++i) {
        G(i, 0) = rng.normal();
        G(i, 1) = rng.normal();
    }
    const double process_sigma = 0.001;
    const double obs_sigma = opt.noiseless ? 1e-12 : 0.1;

    Scenario s;
    s.name = "rotation";
    s.seed = seed;
    Vector u(2);
    u << 1.0, 0.0;
    for (Index i = 0; i < opt.steps; ++i) {
        if (i > 0) {
            u = F * u;
            if (!opt.noiseless) {
                u += rng.normal_vector(2, process_sigma);
            }
        }
        StepInput st;
        if (i > 0) {
            st.evolution = Evolution{2, std::nullopt, F, Vector::Zero(2),
                                     detail::sigma_spec(2, process_sigma)};
        }
        st.observation = Observation{G, G * u + rng.normal_vector(opt.obs_rows, obs_sigma),
                                     detail::sigma_spec(opt.obs_rows, obs_sigma)};
        s.steps.push_back(std::move(st));
        s.truth.push_back(u);
    }
    s.commands = {Command::predict_to(opt.steps - 1), Command::rollback(1), Command::filter_all(),
                  Command::smooth()};
    return s;
}

enum class VarianceMode { RandomWalk, Slope };

/// A scalar observed with sigma 10 (0.25 at step 50 when `precise_at_50`),
/// filtered with a random-walk model u_i = u_{i-1} + N(0, 1). The truth is
/// either that random walk or the slope u_i = u_{i-1} + 0.2. Steps 0..100.
inline Scenario gen_variance(std::uint64_t seed, VarianceMode mode, bool precise_at_50) {
    Rng rng(seed);
    Scenario s;
    s.name = mode == VarianceMode::Slope ? "variance-slope" : "variance-random-walk";
    s.seed = seed;
    const Matrix one = Matrix::Identity(1, 1);
    double u = 0.0;
    for (Index i = 0; i <= 100; ++i) {
        if (mode == VarianceMode::Slope) {
            u = 0.2 * static_cast<double>(i);
        } else if (i > 0) {
            u += rng.normal();
        }
        const double sigma = (precise_at_50 && i == 50) ? 0.25 : 10.0;
        StepInput st;
        if (i > 0) {
            st.evolution = Evolution{1, std::nullopt, one, Vector::Zero(1),
                                     detail::sigma_spec(1, 1.0)};
        }
        st.observation = Observation{one, detail::constant(1, u + rng.normal(0.0, sigma)),
                                     detail::sigma_spec(1, sigma)};
        s.steps.push_back(std::move(st));
        s.truth.push_back(detail::constant(1, u));
    }
    s.commands = {Command::filter_all(), Command::smooth()};
    return s;
}

/// Tracks the constant 1 for two steps, adds a second parameter (true value 2)
/// at step 2 through the default H = [1 0], keeps both through steps 3 and 4,
/// and drops the first at step 5 with H = [0; 1]. All noise has sigma 0.1
/// except the evolution row of the dropped component, which has sigma 1e3.
inline Scenario gen_add_remove(std::uint64_t seed) {
    Rng rng(seed);
    const double sigma = 0.1;
    const double dropped_sigma = 1e3;
    const Matrix i1 = Matrix::Identity(1, 1);
    const Matrix i2 = Matrix::Identity(2, 2);
    Scenario s;
    s.name = "add-remove";
    s.seed = seed;

    const auto observe = [&](const Vector& truth) {
        const Index n = truth.size();
        const Matrix g = Matrix::Identity(n, n);
        return Observation{g, truth + rng.normal_vector(n, sigma), detail::sigma_spec(n, sigma)};
    };
    const Vector one = detail::constant(1, 1.0);
    Vector both(2);
    both << 1.0, 2.0;
    const Vector two = detail::constant(1, 2.0);

    for (Index i = 0; i < 7; ++i) {
        StepInput st;
        Vector truth;
        if (i < 2) {
            truth = one;
            if (i == 1) {
                st.evolution = Evolution{1, std::nullopt, i1, Vector::Zero(1),
                                         detail::sigma_spec(1, sigma)};
            }
        } else if (i == 2) {
            truth = both;
            st.evolution = Evolution{2, std::nullopt, i1, Vector::Zero(1),
                                     detail::sigma_spec(1, sigma)};
        } else if (i < 5) {
            truth = both;
            st.evolution = Evolution{2, std::nullopt, i2, Vector::Zero(2),
                                     detail::sigma_spec(2, sigma)};
        } else if (i == 5) {
            truth = two;
            Matrix h(2, 1);
            h << 0.0, 1.0;
            Vector w(2);
            w << 1.0 / dropped_sigma, 1.0 / sigma;
            st.evolution = Evolution{1, h, i2, Vector::Zero(2), CovarianceSpec::diagonal_weights(w)};
        } else {
            truth = two;
            st.evolution = Evolution{1, std::nullopt, i1, Vector::Zero(1),
                                     detail::sigma_spec(1, sigma)};
        }
        st.observation = observe(truth);
        s.steps.push_back(std::move(st));
        s.truth.push_back(truth);
    }
    s.commands = {Command::filter_all(), Command::smooth()};
    return s;
}

struct ProjectileOptions {
    Index steps = 1200;
    double dt = 0.1;
    double drag = 1e-4;
    double gravity = 9.8;
    double obs_variance = 500.0;
    double process_sigma = 1e-3;  // per component, both in the simulation and the model
    Index first_observed = 400;
    Index last_observed = 600;
    bool noiseless = false;
};

inline Matrix projectile_evolution(double dt, double drag) {
    Matrix F(4, 4);
    F << 1, 0, dt, 0,
         0, 1, 0, dt,
         0, 0, 1 - drag, 0,
         0, 0, 0, 1 - drag;
    return F;
}

inline Vector projectile_control(double dt, double gravity) {
    Vector c = Vector::Zero(4);
    c(3) = -gravity * dt;
    return c;
}

/// Displacement and velocity of a projectile under gravity and drag, launched
/// from the origin at (300, 600) m/s. Displacements are observed in steps
/// 400..600 only; the first state is unknown to the filter.
inline Scenario gen_projectile(std::uint64_t seed, const ProjectileOptions& opt = {}) {
    Rng rng(seed);
    const Matrix F = projectile_evolution(opt.dt, opt.drag);
    const Vector c = projectile_control(opt.dt, opt.gravity);
    Matrix G = Matrix::Zero(2, 4);
    G(0, 0) = 1.0;
    G(1, 1) = 1.0;
    const double obs_sigma = std::sqrt(opt.obs_variance);

    Scenario s;
    s.name = "projectile";
    s.seed = seed;
    Vector u(4);
    u << 0.0, 0.0, 300.0, 600.0;
    for (Index i = 0; i < opt.steps; ++i) {
        StepInput st;
        if (i == 0) {
            st.dim = 4;
        } else {
            u = F * u + c;
            if (!opt.noiseless) {
                u += rng.normal_vector(4, opt.process_sigma);
            }
            st.evolution = Evolution{4, std::nullopt, F, c,
                                     detail::sigma_spec(4, opt.process_sigma)};
        }
        if (i >= opt.first_observed && i <= opt.last_observed) {
            const Vector noise = opt.noiseless ? Vector(Vector::Zero(2))
                                               : rng.normal_vector(2, obs_sigma);
            st.observation = Observation{G, G * u + noise, detail::sigma_spec(2, obs_sigma)};
        }
        s.steps.push_back(std::move(st));
        s.truth.push_back(u);
    }
    s.commands = {Command::filter_all(), Command::smooth()};
    return s;
}

struct ClockOptions {
    Index clocks = 3;
    Index packets = 100;
    double period = 0.5;          // seconds between beacon packets
    double offset_range = 1e-3;   // initial offsets uniform in +-range
    double drift_sigma = 1e-7;    // per-packet random walk of each offset
    double arrival_sigma = 1e-6;  // time-of-arrival estimation error
    bool pseudo_observation = true;
};

/// Relative clock offsets from beacon arrival times. State (f_1..f_m, tau):
/// the offsets evolve as a random walk through H = F = [I | 0], which drops the
/// previous departure time tau and introduces a new one. Observations are
/// t_j - d_j = f_j + tau + noise. A pseudo-observation f_1 = 0 in step 0 removes
/// the shared-shift rank deficiency.
inline Scenario gen_clock_offsets(std::uint64_t seed, const ClockOptions& opt = {}) {
    if (opt.clocks < 1) {
        throw ScenarioError("clock offsets: need at least one clock");
    }
    Rng rng(seed);
    const Index m = opt.clocks;
    const Index n = m + 1;
    Vector delay(m);
    Vector offset(m);
    for (Index j = 0; j < m; ++j) {
        delay(j) = 1e-6 + 19e-6 * rng.uniform();
        offset(j) = opt.offset_range * (2.0 * rng.uniform() - 1.0);
    }
    const Matrix hf = default_evolution_matrix(m, n);
    Matrix G(m, n);
    G << Matrix::Identity(m, m), Vector::Ones(m);

    Scenario s;
    s.name = "clock-offsets";
    s.seed = seed;
    for (Index i = 0; i < opt.packets; ++i) {
        if (i > 0) {
            offset += rng.normal_vector(m, opt.drift_sigma);
        }
        const double departure = static_cast<double>(i) * opt.period + 0.1 * rng.uniform();
        Vector arrival(m);
        for (Index j = 0; j < m; ++j) {
            arrival(j) = departure + delay(j) + offset(j) + rng.normal(0.0, opt.arrival_sigma);
        }
        StepInput st;
        if (i > 0) {
            st.evolution = Evolution{n, hf, hf, Vector::Zero(m),
                                     detail::sigma_spec(m, opt.drift_sigma)};
        }
        const Vector o = arrival - delay;
        if (i == 0 && opt.pseudo_observation) {
            Matrix g0 = Matrix::Zero(m + 1, n);
            g0.topRows(m) = G;
            g0(m, 0) = 1.0;
            Vector o0 = Vector::Zero(m + 1);
            o0.head(m) = o;
            Vector w = Vector::Constant(m + 1, 1.0 / opt.arrival_sigma);
            st.observation = Observation{g0, o0, CovarianceSpec::diagonal_weights(w)};
        } else {
            st.observation = Observation{G, o, detail::sigma_spec(m, opt.arrival_sigma)};
        }
        Vector truth(n);
        truth.head(m) = offset;
        truth(m) = departure;
        s.steps.push_back(std::move(st));
        s.truth.push_back(truth);
    }
    s.commands = {Command::filter_all(), Command::smooth()};
    return s;
}

/// Residuals t_j - d_j - f_j - tau of every observation row against a state
/// sequence (pseudo-observation rows excluded).
inline std::vector<Vector> clock_residuals(const Scenario& s, const std::vector<Vector>& states) {
    std::vector<Vector> out;
    for (std::size_t i = 0; i < s.steps.size(); ++i) {
        const Observation& ob = *s.steps[i].observation;
        const Index m = states[i].size() - 1;
        const Vector r = ob.o.head(m) - states[i].head(m) -
                         Vector::Constant(m, states[i](m));
        out.push_back(r);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Timing harness

struct PerfResult {
    std::vector<double> group_seconds_per_step;  // mean over each group of steps
    std::size_t max_retained = 0;
    double smooth_seconds = kNaN;  // set when smoothing was requested
};

struct PerfOptions {
    Index dim = 6;
    Index steps = 100000;
    Index window = 0;  // retained sealed steps; 0 keeps everything
    Index group = 1000;
    std::uint64_t seed = 1;
    bool smooth = false;
};

/// Filters a system with fixed random orthogonal F and G, identity covariances,
/// c = 0 and standard normal observations, timing every step (evolve, observe,
/// estimate, forget). With a window w, steps older than k - w are forgotten.
inline PerfResult perftest(const PerfOptions& opt) {
    if (opt.dim < 1 || opt.steps < 1 || opt.group < 1 || opt.window < 0) {
        throw ScenarioError("perftest: dim, steps and group must be positive");
    }
    Rng rng(opt.seed);
    const Index n = opt.dim;
    const Matrix F = rng.orthogonal(n);
    const Matrix G = rng.orthogonal(n);
    const CovarianceSpec unit = CovarianceSpec::identity(n);
    const Vector zero = Vector::Zero(n);

    PerfResult result;
    Filter filter;
    double group_total = 0.0;
    Index in_group = 0;
    for (Index k = 0; k < opt.steps; ++k) {
        const Vector o = rng.normal_vector(n);
        const auto t0 = std::chrono::steady_clock::now();
        if (k > 0) {
            filter.evolve(n, std::nullopt, F, zero, unit);
        }
        filter.observe(G, o, unit);
        const Estimate e = filter.estimate();
        if (opt.window > 0 && k - opt.window - 1 >= filter.earliest()) {
            filter.forget(k - opt.window - 1);
        }
        const auto t1 = std::chrono::steady_clock::now();
        (void)e;
        result.max_retained = std::max(result.max_retained, filter.retained());
        group_total += std::chrono::duration<double>(t1 - t0).count();
        if (++in_group == opt.group) {
            result.group_seconds_per_step.push_back(group_total / static_cast<double>(in_group));
            group_total = 0.0;
            in_group = 0;
        }
    }
    if (in_group > 0) {
        result.group_seconds_per_step.push_back(group_total / static_cast<double>(in_group));
    }
    if (opt.smooth) {
        const auto t0 = std::chrono::steady_clock::now();
        filter.smooth();
        const auto t1 = std::chrono::steady_clock::now();
        result.smooth_seconds = std::chrono::duration<double>(t1 - t0).count();
    }
    return result;
}

// ---------------------------------------------------------------------------
// Oracle comparison

struct OracleComparison {
    double max_state_error = 0.0;       // relative, normwise per step
    double max_covariance_error = 0.0;  // relative, Frobenius per step
    std::size_t filtered_checked = 0;
    std::size_t filtered_skipped = 0;  // prefixes the oracle cannot solve
    std::size_t smoothed_checked = 0;
};

inline double relative_error(const Matrix& value, const Matrix& reference) {
    const double ref = reference.norm();
    const double diff = (value - reference).norm();
    if (!std::isfinite(diff)) {
        return std::numeric_limits<double>::infinity();
    }
    return ref > 0.0 ? diff / ref : diff;
}

/// Filters every step with its observation, comparing each filtered estimate
/// with the last block of the dense solution of the prefix system, then smooths
/// and compares every step with the full dense solution. Prefix checks are
/// skipped when `check_prefixes` is false.
inline OracleComparison compare_with_oracle(const Scenario& scenario, bool check_prefixes = true) {
    validate(scenario);
    OracleComparison out;
    Filter filter;
    const std::span<const StepInput> steps(scenario.steps);
    for (std::size_t k = 0; k < steps.size(); ++k) {
        try {
            feed(filter, steps[k], true, true);
        } catch (const Error& e) {
            throw RunError(static_cast<StepIndex>(k), e.what());
        }
        if (!check_prefixes) {
            continue;
        }
        oracle::GlsSolution ref;
        try {
            ref = oracle::solve_gls(oracle::assemble(steps.first(k + 1)));
        } catch (const RankDeficient&) {
            ++out.filtered_skipped;
            continue;
        }
        const Estimate e = filter.estimate();
        out.max_state_error =
            std::max(out.max_state_error, relative_error(e.state, ref.estimates.back()));
        out.max_covariance_error = std::max(out.max_covariance_error,
                                            relative_error(e.covariance(), ref.covariances.back()));
        ++out.filtered_checked;
    }
    const oracle::GlsSolution ref = oracle::solve_gls(oracle::assemble(steps));
    filter.smooth();
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const Estimate e = filter.estimate(static_cast<StepIndex>(i));
        out.max_state_error =
            std::max(out.max_state_error, relative_error(e.state, ref.estimates[i]));
        out.max_covariance_error = std::max(out.max_covariance_error,
                                            relative_error(e.covariance(), ref.covariances[i]));
        ++out.smoothed_checked;
    }
    return out;
}

}  // namespace orthokalman
