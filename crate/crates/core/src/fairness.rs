//! Round-robin and proportional-fair wrappers around the cone-based
//! selection, with adaptive cone parameters.

use crate::channel::{ChannelBatch, GroupProfile};
use crate::error::{JsdmError, Result};
use crate::metrics;
use crate::scheduling::{assign_beams, cqi_reports};

/// Smallest cone parameter guaranteeing every user a nonempty cone test.
pub fn alpha_min(r_star: usize) -> f64 {
    1.0 / (r_star as f64).sqrt()
}

/// Clamp rule shared by both adaptive schemes: below the floor snaps to
/// the floor; at or above 1 keeps the previous value.
fn clamp_alpha(new: f64, prev: f64, floor: f64) -> f64 {
    if new < floor {
        floor
    } else if new >= 1.0 {
        prev
    } else {
        new
    }
}

/// Round-robin parameters.
#[derive(Debug, Clone, Copy)]
pub struct RrParams {
    pub alpha_init: f64,
    pub delta_alpha: f64,
    pub rho: f64,
}

/// One complete round-robin round.
#[derive(Debug, Clone)]
pub struct RrOutcome {
    /// Per group, the service ledger: (interval, user, rate in nats).
    pub served: Vec<Vec<(u64, usize, f64)>>,
    pub intervals: u64,
    /// Total CQI-bearing reports filed over the round.
    pub cqi_reports_total: u64,
    /// Total index-only reports filed over the round.
    pub index_reports_total: u64,
}

/// Serves every user exactly once: per interval, cone reports from the
/// unserved pool (index-only when the cone test fails), per-beam argmax,
/// ZF with equal power, then the per-group cone parameter widens when
/// beams went unfilled and tightens otherwise. `batch_source(t)` supplies
/// the interval-t channel realization.
pub fn rr_round(
    profiles: &[GroupProfile],
    params: RrParams,
    batch_source: &mut dyn FnMut(u64) -> ChannelBatch,
) -> Result<RrOutcome> {
    let g_count = profiles.len();
    let floors: Vec<f64> = profiles.iter().map(|p| alpha_min(p.r_star)).collect();
    let mut alphas: Vec<f64> = floors
        .iter()
        .map(|&f| clamp_alpha(params.alpha_init, f, f))
        .collect();
    let mut pools: Vec<Vec<bool>> = profiles.iter().map(|p| vec![true; p.k_users]).collect();
    let mut served: Vec<Vec<(u64, usize, f64)>> = profiles
        .iter()
        .map(|p| Vec::with_capacity(p.k_users))
        .collect();
    // Progress guard: the decrement path reaches the floor in at most
    // ceil(1/delta) steps, after which reports are guaranteed; anything
    // past this budget is a bug, not bad luck.
    let budget: u64 = profiles
        .iter()
        .map(|p| p.k_users as u64 * (2 + (1.0 / params.delta_alpha).ceil() as u64))
        .max()
        .unwrap_or(0);
    let mut t = 0u64;
    let mut cqi_total = 0u64;
    let mut index_total = 0u64;
    while pools.iter().any(|p| p.iter().any(|&x| x)) {
        if t >= budget {
            return Err(JsdmError::RrBudgetExceeded {
                budget: budget as usize,
            });
        }
        let batch = batch_source(t);
        let reports = cqi_reports(
            profiles,
            &batch,
            params.rho,
            &|g, _| alphas[g],
            &|g, k| pools[g][k],
            true,
        );
        let outcome = assign_beams(profiles, &batch, &reports, &|_, r| r.quasi_sinr.unwrap());
        let rates = metrics::zf_equal_power_rates(profiles, &batch, &outcome, params.rho)?;
        for g in 0..g_count {
            for (i, &(_, user)) in outcome.groups[g].selected.iter().enumerate() {
                pools[g][user] = false;
                served[g].push((t, user, rates.per_user_nats[g][i]));
            }
            cqi_total += outcome.groups[g].cone_sizes.iter().sum::<usize>() as u64;
            index_total += outcome.groups[g].index_only_reports as u64;
            let remaining = pools[g].iter().filter(|&&x| x).count();
            if remaining == 0 {
                continue;
            }
            let step = if outcome.groups[g].selected.len() < profiles[g].r_star {
                -params.delta_alpha
            } else {
                params.delta_alpha
            };
            alphas[g] = clamp_alpha(alphas[g] + step, alphas[g], floors[g]);
        }
        t += 1;
    }
    Ok(RrOutcome {
        served,
        intervals: t,
        cqi_reports_total: cqi_total,
        index_reports_total: index_total,
    })
}

/// Proportional-fair parameters.
#[derive(Debug, Clone, Copy)]
pub struct PfParams {
    /// AR forgetting factor for the tracked average rate.
    pub delta: f64,
    pub delta_alpha_up: f64,
    pub delta_alpha_down: f64,
    pub mu_init: f64,
    pub alpha_init: f64,
}

/// Per-user tracked state for the proportional-fair scheme.
#[derive(Debug, Clone)]
pub struct FairnessState {
    /// Tracked average served rate per user (nats), always positive.
    pub mu: Vec<Vec<f64>>,
    /// Per-user cone parameter.
    pub alpha: Vec<Vec<f64>>,
    pub params: PfParams,
    /// Cumulative CQI-bearing reports across intervals.
    pub cqi_reports_total: u64,
    /// Times each user has been served.
    pub served_count: Vec<Vec<u64>>,
    floors: Vec<f64>,
}

impl FairnessState {
    pub fn new(profiles: &[GroupProfile], params: PfParams) -> Result<Self> {
        if !(0.0 < params.delta && params.delta <= 1.0) {
            return Err(JsdmError::InvalidSpec("delta must be in (0, 1]".into()));
        }
        if params.mu_init <= 0.0 {
            return Err(JsdmError::InvalidSpec("mu_init must be positive".into()));
        }
        let floors: Vec<f64> = profiles.iter().map(|p| alpha_min(p.r_star)).collect();
        let alpha = profiles
            .iter()
            .enumerate()
            .map(|(g, p)| vec![clamp_alpha(params.alpha_init, floors[g], floors[g]); p.k_users])
            .collect();
        Ok(Self {
            mu: profiles
                .iter()
                .map(|p| vec![params.mu_init; p.k_users])
                .collect(),
            alpha,
            params,
            cqi_reports_total: 0,
            served_count: profiles.iter().map(|p| vec![0u64; p.k_users]).collect(),
            floors,
        })
    }
}

/// Result of one proportional-fair interval.
#[derive(Debug, Clone)]
pub struct PfIntervalOutcome {
    /// Selected (group, user, rate-nats) triples.
    pub served: Vec<(usize, usize, f64)>,
    pub sum_rate_nats: f64,
}

/// One proportional-fair interval: cone reports under each user's own
/// alpha, per-beam argmax of log(1 + CQI) / mu, ZF with equal power, then
/// AR updates of mu and the per-user alpha adaptation (up when served,
/// down when not).
pub fn pf_interval(
    profiles: &[GroupProfile],
    state: &mut FairnessState,
    batch: &ChannelBatch,
    rho: f64,
) -> Result<PfIntervalOutcome> {
    let reports = cqi_reports(
        profiles,
        batch,
        rho,
        &|g, k| state.alpha[g][k],
        &|_, _| true,
        false,
    );
    let mu = &state.mu;
    let outcome = assign_beams(profiles, batch, &reports, &|g, r| {
        (1.0 + r.quasi_sinr.unwrap()).ln() / mu[g][r.user]
    });
    let rates = metrics::zf_equal_power_rates(profiles, batch, &outcome, rho)?;
    let delta = state.params.delta;
    let mut served = Vec::new();
    let mut sum = 0.0;
    let mut is_served: Vec<Vec<bool>> = profiles.iter().map(|p| vec![false; p.k_users]).collect();
    let mut rate_of: Vec<Vec<f64>> = profiles.iter().map(|p| vec![0.0; p.k_users]).collect();
    for g in 0..profiles.len() {
        state.cqi_reports_total += outcome.groups[g].cone_sizes.iter().sum::<usize>() as u64;
        for (i, &(_, user)) in outcome.groups[g].selected.iter().enumerate() {
            let r = rates.per_user_nats[g][i];
            is_served[g][user] = true;
            rate_of[g][user] = r;
            served.push((g, user, r));
            sum += r;
        }
    }
    for g in 0..profiles.len() {
        for k in 0..profiles[g].k_users {
            let hit = is_served[g][k];
            state.mu[g][k] =
                (1.0 - delta) * state.mu[g][k] + delta * if hit { rate_of[g][k] } else { 0.0 };
            // Keep mu strictly positive so the PF ratio stays defined.
            state.mu[g][k] = state.mu[g][k].max(1e-12);
            let step = if hit {
                state.params.delta_alpha_up
            } else {
                -state.params.delta_alpha_down
            };
            state.alpha[g][k] = clamp_alpha(state.alpha[g][k] + step, state.alpha[g][k], state.floors[g]);
            if hit {
                state.served_count[g][k] += 1;
            }
        }
    }
    Ok(PfIntervalOutcome {
        served,
        sum_rate_nats: sum,
    })
}
