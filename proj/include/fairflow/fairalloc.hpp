#pragma once

#include <map>
#include <vector>

#include "fairflow/dispatch.hpp"
#include "fairflow/model.hpp"

namespace fairflow {

/// Potential-based driver payment scheme: a non-negative potential per state
/// plus the payment y(s,s') = P(s) - P(s') + c(s,s') on every arc the plan
/// drives. On arcs the plan does not use, only the offered bound
/// max(0, P(s) - P(s') + c(s,s')) is published.
struct PaymentScheme {
    std::vector<double> potential;       // dense, indexed by state_index()
    std::map<Arc, double> payments;      // arcs with F > 0

    double potential_at(const Instance& instance, const State& s) const {
        return potential[instance.state_index(s)];
    }
    double offered_bound(const Instance& instance, const Arc& arc) const;
};

struct ConditionViolation {
    Arc arc;
    double residual = 0.0;
};

struct FairnessReport {
    double tolerance = 1e-8;
    double budget_residual = 0.0;  // sum P * (deg_i - deg_o) - (income - sum F c)
    std::vector<std::pair<State, double>> terminal_violations;      // P != 0 where drivers leave
    std::vector<std::pair<State, double>> nonnegativity_violations; // P < 0
    std::vector<ConditionViolation> subgame_violations;   // admissible arcs, P(s') - P(s) > c
    std::vector<ConditionViolation> equality_violations;  // used arcs, y != P(s) - P(s') + c
    std::vector<ConditionViolation> ir_violations;        // used arcs, y < c
    double envy_max_deviation = 0.0;  // max over states of utility spread at that state
    bool pass = false;
};

/// y(s,s') = P(s) - P(s') + c(s,s') for every arc the plan uses.
std::map<Arc, double> payments_from_potential(const std::vector<double>& potential,
                                              const DispatchPlan& plan,
                                              const Instance& instance);

/// Evaluates the four fairness conditions (terminal zeros, the subgame bound
/// on all admissible arcs, equality plus individual rationality on used arcs,
/// and budget balance against the given income) and the realized per-state
/// utility spread.
FairnessReport check_fairness(const DispatchPlan& plan, const PaymentScheme& scheme,
                              double income, const Instance& instance, double tolerance = 1e-8);

/// Longest-distance construction: order arcs count 1, cruise arcs count 0,
/// potentials scaled so the budget closes. Requires income >= total cost.
/// Throws when no fair allocation exists (surplus without any used arc
/// leaving a non-terminal state, or a driver leaves a state whose
/// continuations still earn).
PaymentScheme constructive_allocation(const DispatchPlan& plan, const Instance& instance,
                                      double income);

struct QpOptions {
    double kkt_tolerance = 1e-8;
    int max_iterations = 100'000;
    int dykstra_sweeps = 400;
};

struct QpResult {
    PaymentScheme scheme;
    double objective = 0.0;      // sum over used arcs of F (p - y)^2
    double kkt_residual = 0.0;   // projected-gradient fixed-point residual
    int iterations = 0;
};

/// Minimizes the flow-weighted squared distortion between rider prices and
/// driver payments over all fair potentials, by projected gradient with
/// Dykstra projection onto the constraint polyhedron, warm-started from the
/// constructive allocation. On arcs driven without a rider the rider-side
/// price is taken as 0.
QpResult qp_allocation(const DispatchPlan& plan, const Instance& instance, double income,
                       const QpOptions& options = {});

/// Distortion objective of an arbitrary potential (used arcs only).
double distortion_objective(const DispatchPlan& plan, const Instance& instance,
                            const std::vector<double>& potential);

/// u_q = sum over the driver's route arcs of (y - c). Throws if a route
/// crosses an arc without a defined payment.
std::vector<double> driver_utilities(const std::vector<DriverRoute>& routes,
                                     const PaymentScheme& scheme, const Instance& instance);

}  // namespace fairflow
