//! Exact solvers: value iteration, policy evaluation and finite-horizon
//! evaluation.

use alloc::vec;
use alloc::vec::Vec;

use crate::mdp::{ActionValues, Mdp, MdpError, Policy};

/// Result of a value-iteration run.
#[derive(Debug, Clone, PartialEq)]
pub struct Solved {
    pub values: ActionValues,
    /// Bellman backups evaluated.
    pub backups: u64,
}

fn check_tolerance(tol: f64) -> Result<(), MdpError> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(MdpError::InvalidTolerance(tol))
    }
}

fn check_dims(mdp: &Mdp, values: &ActionValues) -> Result<(), MdpError> {
    if values.num_states() != mdp.num_states() || values.num_actions() != mdp.num_actions() {
        return Err(MdpError::DimensionMismatch {
            expected: mdp.num_states() * mdp.num_actions(),
            actual: values.as_slice().len(),
        });
    }
    Ok(())
}

/// Synchronous value iteration, warm-started from `initial`, until the
/// max-norm change of a sweep is at most `residual_tol`.
///
/// The returned table `Q` satisfies `|Q(s, a) - backup(Q)(s, a)| <= γ · tol`.
/// After the first sweep a pair is only re-evaluated when the value of one of
/// its successors changed in the previous sweep; otherwise its backup would
/// reproduce the current entry bit for bit.
pub fn value_iteration(mdp: &Mdp, residual_tol: f64, initial: &ActionValues) -> Result<Solved, MdpError> {
    check_tolerance(residual_tol)?;
    check_dims(mdp, initial)?;
    let (ns, na) = (mdp.num_states(), mdp.num_actions());

    let mut q = initial.clone();
    let mut state_values = q.state_values();
    let mut changed = vec![true; ns];
    let mut backups = 0u64;
    loop {
        let mut next = q.clone();
        let mut delta: f64 = 0.0;
        for s in 0..ns {
            for a in 0..na {
                let stale = mdp.successors(s, a).iter().any(|&(n, _)| changed[n]);
                if !stale {
                    continue;
                }
                let updated = mdp.backup_with(&state_values, s, a);
                backups += 1;
                delta = delta.max((updated - q.get(s, a)).abs());
                next.set(s, a, updated);
            }
        }
        let next_values = next.state_values();
        for s in 0..ns {
            changed[s] = next_values[s] != state_values[s];
        }
        q = next;
        state_values = next_values;
        if delta <= residual_tol {
            return Ok(Solved { values: q, backups });
        }
    }
}

/// Value of `policy` in `mdp`: iterates the policy's Bellman operator from
/// zero until a sweep changes no state by more than `residual_tol`.
pub fn evaluate_policy(mdp: &Mdp, policy: &Policy, residual_tol: f64) -> Result<Vec<f64>, MdpError> {
    check_tolerance(residual_tol)?;
    let ns = mdp.num_states();
    if policy.len() != ns {
        return Err(MdpError::DimensionMismatch { expected: ns, actual: policy.len() });
    }
    for s in 0..ns {
        mdp.check_pair(s, policy.action(s))?;
    }
    let mut v = vec![0.0; ns];
    loop {
        let next: Vec<f64> = (0..ns).map(|s| mdp.backup_with(&v, s, policy.action(s))).collect();
        let delta = next.iter().zip(&v).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        v = next;
        if delta <= residual_tol {
            return Ok(v);
        }
    }
}

/// Expected discounted return of the first `horizon` steps of `policy`
/// from `s`, by backward induction.
pub fn finite_horizon_value(mdp: &Mdp, policy: &Policy, s: usize, horizon: usize) -> Result<f64, MdpError> {
    let ns = mdp.num_states();
    if s >= ns {
        return Err(MdpError::StateOutOfRange { state: s, num_states: ns });
    }
    if policy.len() != ns {
        return Err(MdpError::DimensionMismatch { expected: ns, actual: policy.len() });
    }
    let mut v = vec![0.0; ns];
    for _ in 0..horizon {
        v = (0..ns).map(|x| mdp.backup_with(&v, x, policy.action(x))).collect();
    }
    Ok(v[s])
}
