//! Pre-beamformer validation, zero-forcing second-stage precoding,
//! effective channel gains, the Gershgorin gain bound, and power
//! allocation (equal split and water-filling).

use num_complex::Complex64;

use crate::channel::GroupProfile;
use crate::error::{JsdmError, Result};
use crate::linalg::{self, CMat};

/// Condition-number limit beyond which a selection counts as rank
/// deficient. ZF semantics (exact diagonalization) would silently break
/// past this point, so we error instead of regularizing.
pub const COND_LIMIT: f64 = 1e8;

/// Second-stage zero-forcing precoder for one group's selected users.
#[derive(Debug, Clone)]
pub struct ZfPrecoder {
    /// r* x s unnormalized ZF columns, the right pseudo-inverse of the
    /// selected effective channel matrix.
    pub w_tilde: CMat,
    /// Per-selected-user effective channel gain, gamma_i = 1/||w_tilde_i||^2.
    pub gammas: Vec<f64>,
    /// Per-user power scale P_i; empty until `allocate_power` runs.
    pub p_alloc: Vec<f64>,
}

impl ZfPrecoder {
    pub fn n_users(&self) -> usize {
        self.gammas.len()
    }

    /// Transmit precoder with powers applied: column i is
    /// w_tilde_i * sqrt(P_i), so each user's received signal amplitude is
    /// sqrt(P_i) and the spent power is P_i / gamma_i.
    pub fn scaled_columns(&self) -> Result<CMat> {
        if self.p_alloc.len() != self.n_users() {
            return Err(JsdmError::PowerAllocation(
                "powers not allocated yet".into(),
            ));
        }
        let mut w = self.w_tilde.clone();
        for (i, &p) in self.p_alloc.iter().enumerate() {
            let s = Complex64::new(p.sqrt(), 0.0);
            for z in w.column_mut(i).iter_mut() {
                *z *= s;
            }
        }
        Ok(w)
    }

    /// Actual spent transmit power, sum_i P_i / gamma_i.
    pub fn spent_power(&self) -> f64 {
        self.gammas
            .iter()
            .zip(&self.p_alloc)
            .map(|(g, p)| p / g)
            .sum()
    }
}

/// Per-group report from the approximate block-diagonalization check.
#[derive(Debug, Clone)]
pub struct BdReport {
    pub group: usize,
    /// max over g' != g of the largest entry magnitude of V_g^H V_{g'}.
    pub residual: f64,
    pub pass: bool,
}

/// Checks that every group's served subspace is (approximately)
/// orthogonal to every other group's pre-beamformer.
pub fn check_approx_bd(groups: &[GroupProfile], tol: f64) -> Vec<BdReport> {
    groups
        .iter()
        .enumerate()
        .map(|(g, pg)| {
            let mut residual = 0.0f64;
            for (gp, pgp) in groups.iter().enumerate() {
                if gp != g {
                    residual = residual.max(linalg::max_abs(&(pg.v.adjoint() * &pgp.v)));
                }
            }
            BdReport {
                group: g,
                residual,
                pass: residual <= tol,
            }
        })
        .collect()
}

/// Builds the ZF precoder for a selected s x r* effective channel matrix
/// (rows are users). Powers are left unset.
pub fn zf_precoder(g_sel: &CMat) -> Result<ZfPrecoder> {
    let s = g_sel.nrows();
    let r_star = g_sel.ncols();
    if s > r_star {
        return Err(JsdmError::InvalidSpec(format!(
            "cannot zero-force {s} users on {r_star} beams"
        )));
    }
    let w_tilde = linalg::right_pseudo_inverse(g_sel, COND_LIMIT)?;
    let gammas: Vec<f64> = (0..s)
        .map(|i| 1.0 / w_tilde.column(i).norm_squared())
        .collect();
    Ok(ZfPrecoder {
        w_tilde,
        gammas,
        p_alloc: Vec::new(),
    })
}

/// Certified lower-bound factor on the ZF effective gain for users
/// selected from distinct cones: gamma_i >= ||g_i||^2 * factor. Returns
/// max(0, 1 - (r*-1) * 2 alpha sqrt(1-alpha^2)); only valid for
/// alpha >= 1/sqrt(2), where distinct cones cap pairwise coherence.
pub fn gershgorin_gain_bound(alpha: f64, r_star: usize) -> Result<f64> {
    let alpha_lo = std::f64::consts::FRAC_1_SQRT_2;
    if !(alpha_lo..1.0).contains(&alpha) && alpha != 1.0 {
        return Err(JsdmError::BoundInvalid(format!(
            "gain bound needs alpha in [1/sqrt(2), 1], got {alpha}"
        )));
    }
    let off = 2.0 * alpha * (1.0 - alpha * alpha).max(0.0).sqrt();
    Ok((1.0 - (r_star as f64 - 1.0) * off).max(0.0))
}

/// Power allocation mode for `allocate_power`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PowerMode {
    /// Sets gamma_i^{-1} P_i = rho for every selected user.
    Equal { rho: f64 },
    /// Maximizes sum_i log(1 + P_i/N_i) subject to
    /// sum_i gamma_i^{-1} P_i <= budget.
    WaterFill,
}

/// Fills in `p_alloc`. `noise_plus_interference` holds each user's N_i;
/// `budget` is the group's weighted power budget r* rho (used by
/// WaterFill only).
pub fn allocate_power(
    precoder: &mut ZfPrecoder,
    noise_plus_interference: &[f64],
    budget: f64,
    mode: PowerMode,
) -> Result<()> {
    let s = precoder.n_users();
    if s == 0 {
        precoder.p_alloc.clear();
        return Ok(());
    }
    if precoder.gammas.iter().all(|&g| g <= 0.0) {
        return Err(JsdmError::PowerAllocation("all gains are zero".into()));
    }
    match mode {
        PowerMode::Equal { rho } => {
            if rho <= 0.0 {
                return Err(JsdmError::PowerAllocation("rho must be positive".into()));
            }
            precoder.p_alloc = precoder.gammas.iter().map(|&g| g * rho).collect();
        }
        PowerMode::WaterFill => {
            if budget <= 0.0 {
                return Err(JsdmError::PowerAllocation("budget must be positive".into()));
            }
            if noise_plus_interference.len() != s {
                return Err(JsdmError::PowerAllocation(format!(
                    "{} noise terms for {s} users",
                    noise_plus_interference.len()
                )));
            }
            // Substituting q_i = P_i/gamma_i turns the problem into
            // standard water-filling over e_i = gamma_i/N_i:
            // q_i = max(0, mu - 1/e_i), sum q_i = budget.
            let inv_e: Vec<f64> = precoder
                .gammas
                .iter()
                .zip(noise_plus_interference)
                .map(|(&g, &n)| n / g)
                .collect();
            let spent = |mu: f64| -> f64 {
                inv_e.iter().map(|&v| (mu - v).max(0.0)).sum()
            };
            let mut lo = inv_e.iter().cloned().fold(f64::INFINITY, f64::min);
            let mut hi = inv_e.iter().cloned().fold(0.0, f64::max) + budget;
            let tol = 1e-10 * budget;
            while hi - lo > 1e-15 * hi.max(1.0) {
                let mid = 0.5 * (lo + hi);
                if spent(mid) < budget {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if (spent(0.5 * (lo + hi)) - budget).abs() <= tol {
                    break;
                }
            }
            let mu = 0.5 * (lo + hi);
            precoder.p_alloc = precoder
                .gammas
                .iter()
                .zip(&inv_e)
                .map(|(&g, &v)| g * (mu - v).max(0.0))
                .collect();
        }
    }
    Ok(())
}
