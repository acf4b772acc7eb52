//! Miss budgets predicted from the trace and deadline before any cache is
//! simulated.

use serde::{Deserialize, Serialize};

use crate::timing::{Deadline, TimingParams};
use crate::trace::{count_tap, Trace};
use crate::SelectError;

/// Upper limits on shared-level and memory accesses for a feasible
/// hierarchy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerfBudget {
    pub tap_observed: u64,
    pub tas_limit: u64,
    pub tam_limit: u64,
}

/// Produces miss budgets for a trace. Implementations must never
/// under-estimate: a hierarchy whose counts exceed a limit must be
/// infeasible, otherwise selection loses optimal configurations.
pub trait BudgetPredictor {
    fn predict(
        &self,
        tap: u64,
        params: TimingParams,
        deadline: Deadline,
    ) -> Result<PerfBudget, SelectError>;
}

/// Budgets that follow directly from the time model: all slack left after
/// the private level spent on shared accesses alone, or on memory accesses
/// alone.
#[derive(Clone, Copy, Debug, Default)]
pub struct SlackBound;

impl BudgetPredictor for SlackBound {
    fn predict(
        &self,
        tap: u64,
        params: TimingParams,
        deadline: Deadline,
    ) -> Result<PerfBudget, SelectError> {
        let private_ns = u128::from(tap) * u128::from(params.tp());
        let slack = u128::from(deadline.ns())
            .checked_sub(private_ns)
            .ok_or(SelectError::InfeasibleDeadline {
                wcdmot_ns: deadline.ns(),
                private_ns: private_ns.min(u128::from(u64::MAX)) as u64,
            })?;
        Ok(PerfBudget {
            tap_observed: tap,
            tas_limit: (slack / u128::from(params.ts())) as u64,
            tam_limit: (slack / u128::from(params.tm())) as u64,
        })
    }
}

pub fn predict_budgets(
    trace: &Trace,
    params: TimingParams,
    deadline: Deadline,
) -> Result<PerfBudget, SelectError> {
    SlackBound.predict(count_tap(trace), params, deadline)
}
