//! Rate evaluation under the full multi-group downlink signal model and
//! feedback-overhead accounting.

use num_complex::Complex64;

use crate::beamforming::ZfPrecoder;
use crate::channel::{ChannelBatch, GroupProfile};
use crate::error::{JsdmError, Result};
use crate::linalg::CMat;
use crate::scheduling::ScheduleOutcome;

/// Intra-group residual interference above this fraction of the signal
/// power indicates broken zero-forcing and fails the evaluation.
const ZF_RESIDUAL_TOL: f64 = 1e-9;

/// Scheme identifier used for feedback accounting and reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeId {
    Redos,
    RedosRr,
    RedosPf,
    Rbf,
    SusNorm,
    SusQuasiSinr,
    GreedyDpc,
}

impl SchemeId {
    pub fn label(&self) -> &'static str {
        match self {
            SchemeId::Redos => "redos-pbr",
            SchemeId::RedosRr => "redos-pbr-rr",
            SchemeId::RedosPf => "redos-pbr-pf",
            SchemeId::Rbf => "rbf",
            SchemeId::SusNorm => "sus-norm",
            SchemeId::SusQuasiSinr => "sus-qsinr",
            SchemeId::GreedyDpc => "greedy-dpc",
        }
    }
}

/// Uplink feedback amounts for one scheduling interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackTally {
    /// Beam-index integers sent.
    pub integers_sent: u64,
    /// Real scalars sent (CQI values; each complex CSI scalar counts as 2).
    pub reals_sent: u64,
    pub scheme: SchemeId,
}

impl FeedbackTally {
    /// Total feedback in scalar units. `index_unit_cost` is how many
    /// units one integer index costs (1 by default; 0 to count reals only).
    pub fn units(&self, index_unit_cost: f64) -> f64 {
        self.integers_sent as f64 * index_unit_cost + self.reals_sent as f64
    }
}

/// Per-user and sum rates for one evaluated interval (natural log).
#[derive(Debug, Clone)]
pub struct RateReport {
    /// Rates per group, aligned with each group's selected list.
    pub per_user_nats: Vec<Vec<f64>>,
    /// Realized cross-group interference power per served user, aligned
    /// with each group's selected list (zeros for direct-rate groups).
    pub per_user_interference: Vec<Vec<f64>>,
    pub sum_nats: f64,
}

impl RateReport {
    pub fn sum_bits(&self) -> f64 {
        self.sum_nats / std::f64::consts::LN_2
    }
}

/// Evaluates realized rates. ZF-based groups need their precoder (with
/// powers allocated) in `precoders`; groups whose outcome already carries
/// direct rates (RBF) are summed as-is. Inter-group interference uses the
/// realized cross-group precoders; intra-group interference is checked to
/// be zero (ZF) before being dropped.
pub fn evaluate_rates(
    profiles: &[GroupProfile],
    batch: &ChannelBatch,
    outcome: &ScheduleOutcome,
    precoders: &[Option<ZfPrecoder>],
) -> Result<RateReport> {
    let g_count = profiles.len();
    // Scaled transmit columns per ZF group, for cross-group terms.
    let mut scaled: Vec<Option<CMat>> = vec![None; g_count];
    for g in 0..g_count {
        let out = &outcome.groups[g];
        if out.direct_rates_nats.is_some() || out.selected.is_empty() {
            continue;
        }
        let pre = precoders
            .get(g)
            .and_then(|p| p.as_ref())
            .ok_or_else(|| {
                JsdmError::InvalidSpec(format!("missing precoder for nonempty group {g}"))
            })?;
        if pre.p_alloc.len() != out.selected.len() {
            return Err(JsdmError::PowerAllocation(format!(
                "group {g}: {} powers for {} selected users",
                pre.p_alloc.len(),
                out.selected.len()
            )));
        }
        scaled[g] = Some(pre.scaled_columns()?);
    }
    let mut per_user_nats = Vec::with_capacity(g_count);
    let mut per_user_interference = Vec::with_capacity(g_count);
    let mut sum_nats = 0.0;
    for g in 0..g_count {
        let out = &outcome.groups[g];
        if let Some(direct) = &out.direct_rates_nats {
            sum_nats += direct.iter().sum::<f64>();
            per_user_interference.push(vec![0.0; direct.len()]);
            per_user_nats.push(direct.clone());
            continue;
        }
        let mut rates = Vec::with_capacity(out.selected.len());
        let mut inters = Vec::with_capacity(out.selected.len());
        if out.selected.is_empty() {
            per_user_nats.push(rates);
            per_user_interference.push(inters);
            continue;
        }
        let pre = precoders[g].as_ref().unwrap();
        let w = scaled[g].as_ref().unwrap();
        // Received matrix: row i = user i's signal across all streams.
        let y = &out.g_sel * w;
        for (i, &(_, user)) in out.selected.iter().enumerate() {
            let signal = y[(i, i)].norm_sqr();
            let intra: f64 = (0..out.selected.len())
                .filter(|&j| j != i)
                .map(|j| y[(i, j)].norm_sqr())
                .sum();
            // Users allocated zero power carry no signal; judge the
            // residual against the largest allocated power instead.
            let scale = signal.max(pre.p_alloc.iter().cloned().fold(0.0, f64::max));
            if intra > ZF_RESIDUAL_TOL * scale.max(1e-300) {
                return Err(JsdmError::Inconsistent(format!(
                    "group {g} user {user}: intra-group residual {intra:.3e} vs signal {signal:.3e}"
                )));
            }
            // Cross-group interference with realized precoders.
            let ch = &batch.groups[g].users[user];
            let mut inter = 0.0;
            for gp in 0..g_count {
                if gp == g {
                    continue;
                }
                if let Some(wp) = &scaled[gp] {
                    let row = &ch.cross_eff[gp];
                    for t in 0..wp.ncols() {
                        let mut val = Complex64::new(0.0, 0.0);
                        for j in 0..wp.nrows() {
                            val += row[j] * wp[(j, t)];
                        }
                        inter += val.norm_sqr();
                    }
                }
            }
            let rate = (1.0 + pre.p_alloc[i] / (1.0 + inter)).ln();
            sum_nats += rate;
            rates.push(rate);
            inters.push(inter);
        }
        per_user_nats.push(rates);
        per_user_interference.push(inters);
    }
    Ok(RateReport {
        per_user_nats,
        per_user_interference,
        sum_nats,
    })
}

/// Convenience pipeline used by the fairness wrappers and the harness:
/// ZF-precode every nonempty group of `outcome`, allocate equal power
/// (gamma_i^{-1} P_i = rho), and evaluate realized rates. Unit noise.
pub fn zf_equal_power_rates(
    profiles: &[GroupProfile],
    batch: &ChannelBatch,
    outcome: &ScheduleOutcome,
    rho: f64,
) -> Result<RateReport> {
    let mut precoders = Vec::with_capacity(profiles.len());
    for g in 0..profiles.len() {
        let out = &outcome.groups[g];
        if out.selected.is_empty() || out.direct_rates_nats.is_some() {
            precoders.push(None);
            continue;
        }
        let mut p = crate::beamforming::zf_precoder(&out.g_sel)?;
        let noise = vec![1.0; out.selected.len()];
        let budget = profiles[g].r_star as f64 * rho;
        crate::beamforming::allocate_power(
            &mut p,
            &noise,
            budget,
            crate::beamforming::PowerMode::Equal { rho },
        )?;
        precoders.push(Some(p));
    }
    evaluate_rates(profiles, batch, outcome, &precoders)
}

/// Sum-rate evaluation pipeline: each group's rate is the maximum of
/// sum_i log(1 + P_i / N_i) over power scalings subject to the weighted
/// budget sum_i gamma_i^{-1} P_i <= r* rho. Cross-group interference is
/// estimated from an equal-power first pass (total per-group transmit
/// power is the same either way), then realized rates are evaluated with
/// the water-filled precoders.
pub fn zf_water_filling_rates(
    profiles: &[GroupProfile],
    batch: &ChannelBatch,
    outcome: &ScheduleOutcome,
    rho: f64,
) -> Result<RateReport> {
    let mut precoders = Vec::with_capacity(profiles.len());
    for g in 0..profiles.len() {
        let out = &outcome.groups[g];
        if out.selected.is_empty() || out.direct_rates_nats.is_some() {
            precoders.push(None);
            continue;
        }
        let mut p = crate::beamforming::zf_precoder(&out.g_sel)?;
        let noise = vec![1.0; out.selected.len()];
        crate::beamforming::allocate_power(
            &mut p,
            &noise,
            profiles[g].r_star as f64 * rho,
            crate::beamforming::PowerMode::Equal { rho },
        )?;
        precoders.push(Some(p));
    }
    let estimate = evaluate_rates(profiles, batch, outcome, &precoders)?;
    for g in 0..profiles.len() {
        let Some(p) = precoders[g].as_mut() else {
            continue;
        };
        let noise: Vec<f64> = estimate.per_user_interference[g]
            .iter()
            .map(|&i| 1.0 + i)
            .collect();
        crate::beamforming::allocate_power(
            p,
            &noise,
            profiles[g].r_star as f64 * rho,
            crate::beamforming::PowerMode::WaterFill,
        )?;
    }
    evaluate_rates(profiles, batch, outcome, &precoders)
}

/// Counts the uplink feedback a scheme consumed for one interval.
pub fn tally_feedback(
    outcome: &ScheduleOutcome,
    scheme: SchemeId,
    profiles: &[GroupProfile],
) -> FeedbackTally {
    let mut integers = 0u64;
    let mut reals = 0u64;
    for (g, pg) in profiles.iter().enumerate() {
        let out = &outcome.groups[g];
        let cone_total: u64 = out.cone_sizes.iter().map(|&c| c as u64).sum();
        let k_g = pg.k_users as u64;
        let r_star = pg.r_star as u64;
        match scheme {
            SchemeId::Redos | SchemeId::RedosPf => {
                // One (index, CQI) pair per cone report, then full
                // effective CSI from the selected users.
                integers += cone_total;
                reals += cone_total + 2 * r_star * out.selected.len() as u64;
            }
            SchemeId::RedosRr => {
                // Every user reports an index; CQI only from cone members.
                integers += k_g;
                reals += cone_total + 2 * r_star * out.selected.len() as u64;
            }
            SchemeId::Rbf => {
                integers += k_g;
                reals += k_g;
            }
            SchemeId::SusNorm | SchemeId::SusQuasiSinr => {
                // Full effective CSI from every user.
                reals += 2 * r_star * k_g;
            }
            SchemeId::GreedyDpc => {
                // Full channel CSI from every user (genie baseline).
                reals += 2 * pg.m as u64 * k_g;
            }
        }
    }
    FeedbackTally {
        integers_sent: integers,
        reals_sent: reals,
        scheme,
    }
}
