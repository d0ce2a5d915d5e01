#pragma once

// Incremental Kalman filter and smoother built on an orthogonal factorization of
// the weighted block-bidiagonal least-squares system
//
//     [ W0 G0                ]        [ W0 o0 ]
//     [ -V1 F1   V1 H1       ]  u  ~  [ V1 c1 ]
//     [          W1 G1       ]        [ W1 o1 ]
//     [            ...       ]        [  ...  ]
//
// The factor R is block upper bidiagonal. Each evolve() seals one block row of
// it; the orthogonal transformations are applied and discarded.

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "orthokalman/covariance.hpp"
#include "orthokalman/errors.hpp"
#include "orthokalman/matrix.hpp"
#include "orthokalman/model.hpp"

namespace orthokalman {

using StepIndex = std::int64_t;

/// A state estimate with its covariance as an inverse factor W, cov = (W^T W)^{-1}.
/// Unobservable states are NaN-filled, with a NaN diagonal W.
struct Estimate {
    Vector state;
    Matrix inverse_factor;

    static Estimate unobservable(Index dim) {
        Estimate e;
        e.state = Vector::Constant(dim, kNaN);
        e.inverse_factor = Matrix::Zero(dim, dim);
        e.inverse_factor.diagonal().setConstant(kNaN);
        return e;
    }

    bool observable() const { return state.allFinite(); }

    Matrix covariance() const {
        const Index n = state.size();
        if (!observable()) {
            Matrix c = Matrix::Zero(n, n);
            c.diagonal().setConstant(kNaN);
            return c;
        }
        Matrix w = inverse_factor;
        if (!w.isUpperTriangular()) {
            w = triangularize(std::move(w)).r_top;
        }
        const Matrix winv = solve_upper_triangular(w, Matrix(Matrix::Identity(n, n)));
        return winv * winv.transpose();
    }

    Vector standard_deviations() const {
        return covariance().diagonal().cwiseSqrt();
    }
};

/// One sealed block row of R: [ diag  super ] with right-hand side `rhs`,
/// plus the pre-observation rows of the step, kept for rollback.
struct StepRecord {
    StepIndex index = 0;
    Index dim = 0;
    Matrix diag;   // R_{i,i}: dim x dim upper triangular, or flat
    Matrix super;  // R_{i,i+1}
    Vector rhs;
    Matrix saved_bar_R;
    Vector saved_bar_y;
    std::optional<Estimate> smoothed;
    std::uint64_t smoothed_generation = 0;
};

enum class StepPhase { AwaitingObserve, Observed };

/// The bottom, still incomplete, block row.
struct PendingStep {
    StepIndex index = 0;
    Index dim = 0;
    Matrix bar_R;  // rows left over from the evolution; may have zero rows
    Vector bar_y;
    std::optional<Matrix> tilde_R;
    Vector tilde_y;
    StepPhase phase = StepPhase::AwaitingObserve;
    std::optional<Estimate> smoothed;
    std::uint64_t smoothed_generation = 0;
};

/// The filter/smoother. Single writer; distinct instances are independent.
class Filter {
public:
    Filter() = default;

    /// Opens step 0 with no information about it. Only needed when the first
    /// state has no observation; observe(G, o, C) opens step 0 implicitly.
    void start(Index dim) {
        if (pending_) {
            throw LifecycleError(LifecycleError::Reason::AlreadyObserved,
                                 "start: the filter already has steps");
        }
        if (dim < 1) {
            throw DimensionError("start: state dimension must be positive");
        }
        PendingStep p;
        p.index = 0;
        p.dim = dim;
        p.bar_R = Matrix(0, dim);
        p.bar_y = Vector(0);
        pending_ = std::move(p);
        ++generation_;
    }

    /// Adds the evolution equation H u_k = F u_{k-1} + c + noise(K) and seals
    /// block row k-1.
    void evolve(Index dim, const std::optional<Matrix>& H, const Matrix& F, const Vector& c,
                const CovarianceSpec& K) {
        if (!pending_) {
            throw LifecycleError(LifecycleError::Reason::EvolveBeforeObserve,
                                 "evolve: the first step starts with observe");
        }
        if (pending_->phase != StepPhase::Observed) {
            throw LifecycleError(LifecycleError::Reason::EvolveBeforeObserve,
                                 "evolve: step " + std::to_string(pending_->index) +
                                     " has not been observed");
        }
        const Index prev_dim = pending_->dim;
        const Index rows = F.rows();
        if (dim < 1) {
            throw DimensionError("evolve: state dimension must be positive");
        }
        if (F.cols() != prev_dim || rows < 1) {
            throw DimensionError("evolve: F is " + detail::shape(F) + ", expected " +
                                 std::to_string(prev_dim) + " columns");
        }
        if (c.size() != rows) {
            throw DimensionError("evolve: c has length " + std::to_string(c.size()) +
                                 ", expected " + std::to_string(rows));
        }
        if (K.dim() != rows) {
            throw DimensionError("evolve: K has dimension " + std::to_string(K.dim()) +
                                 ", expected " + std::to_string(rows));
        }
        Matrix h;
        if (H) {
            if (H->rows() != rows || H->cols() != dim) {
                throw DimensionError("evolve: H is " + detail::shape(*H) + ", expected " +
                                     std::to_string(rows) + "x" + std::to_string(dim));
            }
            h = *H;
        } else {
            if (rows > dim) {
                throw DimensionError("evolve: H must be given when F has more rows (" +
                                     std::to_string(rows) + ") than the new state dimension (" +
                                     std::to_string(dim) + ")");
            }
            h = default_evolution_matrix(rows, dim);
        }
        if (!F.allFinite() || !h.allFinite() || !c.allFinite()) {
            throw DimensionError("evolve: non-finite entries in H, F or c");
        }

        const Matrix vf = K.weigh(F);
        const Matrix vh = K.weigh(h);
        const Vector vc = K.weigh(c);

        PendingStep& prev = *pending_;
        const Matrix& top = *prev.tilde_R;
        Matrix stacked = stack_rows(top, Matrix(-vf));
        Matrix companion = stack_rows(Matrix::Zero(top.rows(), dim), vh);
        Vector rhs = stack_rows(prev.tilde_y, vc);

        StepRecord sealed;
        sealed.index = prev.index;
        sealed.dim = prev_dim;
        sealed.saved_bar_R = std::move(prev.bar_R);
        sealed.saved_bar_y = std::move(prev.bar_y);

        PendingStep next;
        next.index = prev.index + 1;
        next.dim = dim;

        const Index p = stacked.rows();
        if (p >= prev_dim) {
            Triangularized t = triangularize(std::move(stacked), {std::move(companion)},
                                             std::move(rhs));
            Matrix& comp = t.companions.front();
            sealed.diag = std::move(t.r_top);
            sealed.super = comp.topRows(prev_dim);
            sealed.rhs = t.rhs.head(prev_dim);
            next.bar_R = comp.bottomRows(p - prev_dim);
            next.bar_y = t.rhs.tail(p - prev_dim);
        } else {
            // Flat: sealed as is, states up to this one stay unobservable.
            sealed.diag = std::move(stacked);
            sealed.super = std::move(companion);
            sealed.rhs = std::move(rhs);
            next.bar_R = Matrix(0, dim);
            next.bar_y = Vector(0);
        }

        records_.push_back(std::move(sealed));
        pending_ = std::move(next);
        ++generation_;
    }

    /// Adds the observation equation o = G u_k + noise(C) to the pending step.
    void observe(const Matrix& G, const Vector& o, const CovarianceSpec& C) {
        if (!pending_) {
            start(G.cols());
        }
        PendingStep& step = *pending_;
        require_awaiting(step);
        if (G.cols() != step.dim || G.rows() < 1) {
            throw DimensionError("observe: G is " + detail::shape(G) + ", expected " +
                                 std::to_string(step.dim) + " columns");
        }
        if (o.size() != G.rows()) {
            throw DimensionError("observe: o has length " + std::to_string(o.size()) +
                                 ", expected " + std::to_string(G.rows()));
        }
        if (C.dim() != G.rows()) {
            throw DimensionError("observe: C has dimension " + std::to_string(C.dim()) +
                                 ", expected " + std::to_string(G.rows()));
        }
        if (!o.allFinite() || !G.allFinite()) {
            throw DimensionError("observe: non-finite entries in G or o");
        }

        Matrix stacked = stack_rows(step.bar_R, C.weigh(G));
        Vector rhs = stack_rows(step.bar_y, C.weigh(o));
        close_step(step, std::move(stacked), std::move(rhs));
        ++generation_;
    }

    /// Declares that the pending step has no observation.
    void observe() {
        if (!pending_) {
            throw LifecycleError(LifecycleError::Reason::UnknownDimension,
                                 "observe: the dimension of the first state is unknown; "
                                 "call start() or observe it");
        }
        PendingStep& step = *pending_;
        require_awaiting(step);
        close_step(step, step.bar_R, step.bar_y);
        ++generation_;
    }

    /// Estimate of the latest step: filtered after observe(), predicted before.
    Estimate estimate() const {
        const PendingStep& step = require_pending();
        if (step.smoothed && step.smoothed_generation == generation_) {
            return *step.smoothed;
        }
        if (step.phase == StepPhase::Observed) {
            return solve_block(step.dim, *step.tilde_R, step.tilde_y);
        }
        // Prediction before observation: triangularize bar_R on request.
        const auto [r, y] = reduce(step.dim, step.bar_R, step.bar_y);
        return solve_block(step.dim, r, y);
    }

    /// Estimate of step `index`. Steps other than the latest need a smooth()
    /// after the last evolve/observe/rollback.
    Estimate estimate(StepIndex index) const {
        const PendingStep& step = require_pending();
        if (index == step.index) {
            return estimate();
        }
        const StepRecord& rec = record(index);
        if (!rec.smoothed || rec.smoothed_generation != generation_) {
            throw LifecycleError(LifecycleError::Reason::NotSmoothed,
                                 "estimate: step " + std::to_string(index) +
                                     " has not been smoothed");
        }
        return *rec.smoothed;
    }

    /// Smoothed estimates and covariances of every retained step. The factor
    /// itself is left untouched, so filtering can continue afterwards.
    void smooth() {
        PendingStep& last = require_pending_mut();
        Matrix r_last;
        Vector y_last;
        if (last.phase == StepPhase::Observed) {
            r_last = *last.tilde_R;
            y_last = last.tilde_y;
        } else {
            std::tie(r_last, y_last) = reduce(last.dim, last.bar_R, last.bar_y);
        }

        Estimate next = solve_block(last.dim, r_last, y_last);
        last.smoothed = next;
        last.smoothed_generation = generation_;

        bool chain = next.observable();
        // Inverse factor of the marginal of the step below the current one.
        Matrix carry = next.inverse_factor;
        for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
            StepRecord& rec = *it;
            if (chain && rec.diag.rows() == rec.dim && nonzero_diagonal(rec.diag)) {
                Estimate e;
                e.state = solve_upper_triangular(rec.diag,
                                                 Vector(rec.rhs - rec.super * next.state));

                const Index below = carry.rows();
                Matrix stacked = stack_rows(rec.super, carry);
                Matrix companion = stack_rows(rec.diag, Matrix::Zero(below, rec.dim));
                Triangularized t = triangularize(std::move(stacked), {std::move(companion)});
                Matrix marginal = t.companions.front().bottomRows(rec.diag.rows());
                e.inverse_factor = triangularize(std::move(marginal)).r_top;

                carry = e.inverse_factor;
                next = e;
                rec.smoothed = std::move(e);
            } else {
                chain = false;
                rec.smoothed = Estimate::unobservable(rec.dim);
            }
            rec.smoothed_generation = generation_;
        }
    }

    /// Drops every block row of steps <= index.
    void forget(StepIndex index) {
        const PendingStep& step = require_pending();
        if (index >= step.index) {
            throw LifecycleError(LifecycleError::Reason::CannotForget,
                                 "forget: step " + std::to_string(index) +
                                     " is not older than the latest step " +
                                     std::to_string(step.index));
        }
        if (index < earliest()) {
            throw LifecycleError(LifecycleError::Reason::StepForgotten,
                                 "forget: step " + std::to_string(index) +
                                     " was already forgotten");
        }
        while (!records_.empty() && records_.front().index <= index) {
            records_.pop_front();
        }
    }

    /// Discards steps after `index` and reopens step `index` just after its
    /// evolution, ready for a (possibly different) observation.
    void rollback(StepIndex index) {
        PendingStep& step = require_pending_mut();
        if (index > step.index) {
            throw LifecycleError(LifecycleError::Reason::FutureStep,
                                 "rollback: step " + std::to_string(index) +
                                     " is beyond the latest step " + std::to_string(step.index));
        }
        if (index < earliest()) {
            throw LifecycleError(LifecycleError::Reason::StepForgotten,
                                 "rollback: step " + std::to_string(index) + " was forgotten");
        }
        if (index < step.index) {
            const std::size_t pos = static_cast<std::size_t>(index - earliest());
            StepRecord& rec = records_[pos];
            PendingStep reopened;
            reopened.index = rec.index;
            reopened.dim = rec.dim;
            reopened.bar_R = std::move(rec.saved_bar_R);
            reopened.bar_y = std::move(rec.saved_bar_y);
            records_.erase(records_.begin() + static_cast<std::ptrdiff_t>(pos), records_.end());
            pending_ = std::move(reopened);
        } else {
            step.tilde_R.reset();
            step.tilde_y = Vector();
            step.phase = StepPhase::AwaitingObserve;
            step.smoothed.reset();
        }
        ++generation_;
    }

    StepIndex earliest() const {
        const PendingStep& step = require_pending();
        return records_.empty() ? step.index : records_.front().index;
    }

    StepIndex latest() const { return require_pending().index; }

    bool empty() const noexcept { return !pending_; }

    /// Number of retained steps, including the pending one.
    std::size_t retained() const noexcept { return records_.size() + (pending_ ? 1 : 0); }

    StepPhase phase() const { return require_pending().phase; }

    const std::deque<StepRecord>& records() const noexcept { return records_; }
    const std::optional<PendingStep>& pending() const noexcept { return pending_; }

private:
    static bool nonzero_diagonal(const Matrix& r) {
        for (Index i = 0; i < r.rows(); ++i) {
            if (r(i, i) == 0.0) {
                return false;
            }
        }
        return true;
    }

    // Triangularizes a block unless it is flat.
    static std::pair<Matrix, Vector> reduce(Index dim, const Matrix& block, const Vector& y) {
        if (block.rows() >= dim && dim > 0) {
            Triangularized t = triangularize(block, {}, y);
            return {std::move(t.r_top), t.rhs.head(dim)};
        }
        return {block, y};
    }

    static Estimate solve_block(Index dim, const Matrix& r, const Vector& y) {
        if (r.rows() != dim || !nonzero_diagonal(r)) {
            return Estimate::unobservable(dim);
        }
        Estimate e;
        e.state = solve_upper_triangular(r, y);
        e.inverse_factor = r;
        return e;
    }

    static void close_step(PendingStep& step, const Matrix& block, const Vector& y) {
        auto [r, ry] = reduce(step.dim, block, y);
        step.tilde_R = std::move(r);
        step.tilde_y = std::move(ry);
        step.phase = StepPhase::Observed;
    }

    void require_awaiting(const PendingStep& step) const {
        if (step.phase != StepPhase::AwaitingObserve) {
            throw LifecycleError(LifecycleError::Reason::AlreadyObserved,
                                 "observe: step " + std::to_string(step.index) +
                                     " was already observed");
        }
    }

    const PendingStep& require_pending() const {
        if (!pending_) {
            throw LifecycleError(LifecycleError::Reason::NoSteps, "the filter has no steps");
        }
        return *pending_;
    }

    PendingStep& require_pending_mut() {
        if (!pending_) {
            throw LifecycleError(LifecycleError::Reason::NoSteps, "the filter has no steps");
        }
        return *pending_;
    }

    const StepRecord& record(StepIndex index) const {
        const PendingStep& step = require_pending();
        if (index > step.index) {
            throw LifecycleError(LifecycleError::Reason::FutureStep,
                                 "step " + std::to_string(index) + " is beyond the latest step " +
                                     std::to_string(step.index));
        }
        if (index < earliest()) {
            throw LifecycleError(LifecycleError::Reason::StepForgotten,
                                 "step " + std::to_string(index) + " was forgotten");
        }
        return records_[static_cast<std::size_t>(index - earliest())];
    }

    std::deque<StepRecord> records_;
    std::optional<PendingStep> pending_;
    std::uint64_t generation_ = 0;
};

}  // namespace orthokalman
