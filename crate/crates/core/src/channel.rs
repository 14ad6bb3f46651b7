//! Channel covariance construction, correlated Rayleigh channel sampling,
//! and the generalized chi-square distribution of effective channel power.

use num_complex::Complex64;

use crate::error::{JsdmError, Result};
use crate::linalg::{self, CMat, CVec};
use crate::rng;

/// Relative threshold below which an eigenvalue counts as numerically zero.
const RANK_TOL: f64 = 1e-12;

/// How a group's channel covariance matrix is constructed.
#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceSpec {
    /// One-ring scattering model for a ULA: angle of arrival `theta`,
    /// angle spread `spread` (both radians), antenna spacing `spacing`
    /// in carrier wavelengths.
    OneRing {
        m: usize,
        theta: f64,
        spread: f64,
        spacing: f64,
    },
    /// Exponential correlation, entry (i, j) = nu^|i-j|.
    ExpCorrelation { m: usize, nu: f64 },
    /// Covariance assembled from columns `start..end` (0-based, exclusive)
    /// of the m-point unitary DFT matrix with the given eigenvalues.
    DftColumns {
        m: usize,
        start: usize,
        end: usize,
        eigenvalues: Vec<f64>,
    },
}

impl CovarianceSpec {
    pub fn dim(&self) -> usize {
        match self {
            CovarianceSpec::OneRing { m, .. }
            | CovarianceSpec::ExpCorrelation { m, .. }
            | CovarianceSpec::DftColumns { m, .. } => *m,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CovarianceSpec::OneRing { m, spread, .. } => {
                if *m == 0 {
                    return Err(JsdmError::InvalidSpec("one-ring: M must be positive".into()));
                }
                if *spread <= 0.0 {
                    return Err(JsdmError::InvalidSpec(
                        "one-ring: angle spread must be positive".into(),
                    ));
                }
            }
            CovarianceSpec::ExpCorrelation { m, nu } => {
                if *m == 0 {
                    return Err(JsdmError::InvalidSpec("exp-correlation: M must be positive".into()));
                }
                if !(0.0..=1.0).contains(nu) {
                    return Err(JsdmError::InvalidSpec(format!(
                        "exp-correlation: nu must be in [0, 1], got {nu}"
                    )));
                }
            }
            CovarianceSpec::DftColumns {
                m,
                start,
                end,
                eigenvalues,
            } => {
                if start >= end || *end > *m {
                    return Err(JsdmError::InvalidSpec(format!(
                        "dft-columns: bad column range {start}..{end} for M={m}"
                    )));
                }
                if eigenvalues.len() != end - start {
                    return Err(JsdmError::InvalidSpec(format!(
                        "dft-columns: {} eigenvalues for {} columns",
                        eigenvalues.len(),
                        end - start
                    )));
                }
                check_strictly_decreasing(eigenvalues, 1e-9)?;
            }
        }
        Ok(())
    }
}

fn check_strictly_decreasing(vals: &[f64], rel_tol: f64) -> Result<()> {
    if vals.is_empty() || vals.iter().any(|&v| v <= 0.0) {
        return Err(JsdmError::InvalidSpec(
            "eigenvalues must be positive and non-empty".into(),
        ));
    }
    let top = vals[0];
    for w in vals.windows(2) {
        if w[0] - w[1] <= rel_tol * top {
            return Err(JsdmError::InvalidSpec(format!(
                "eigenvalues must be strictly decreasing ({} then {})",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

/// Builds the Hermitian covariance matrix for a spec.
pub fn build_covariance(spec: &CovarianceSpec) -> Result<CMat> {
    spec.validate()?;
    let r = match spec {
        CovarianceSpec::OneRing {
            m,
            theta,
            spread,
            spacing,
        } => {
            let m = *m;
            // Toeplitz: entry (i, j) depends on d = i - j only.
            let mut first_col = vec![Complex64::new(0.0, 0.0); m];
            for (d, slot) in first_col.iter_mut().enumerate() {
                let df = d as f64;
                let spacing = *spacing;
                let integral = linalg::integrate_complex(
                    |w| Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * df * spacing * w.sin()),
                    theta - spread,
                    theta + spread,
                    1e-10,
                );
                *slot = integral / Complex64::new(2.0 * spread, 0.0);
            }
            CMat::from_fn(m, m, |i, j| {
                if i >= j {
                    first_col[i - j]
                } else {
                    first_col[j - i].conj()
                }
            })
        }
        CovarianceSpec::ExpCorrelation { m, nu } => CMat::from_fn(*m, *m, |i, j| {
            let d = i.abs_diff(j) as u32;
            Complex64::new(nu.powi(d as i32), 0.0)
        }),
        CovarianceSpec::DftColumns {
            m,
            start,
            end,
            eigenvalues,
        } => {
            let f = linalg::dft_matrix(*m);
            let u = f.columns(*start, end - start).into_owned();
            let lam = CMat::from_diagonal(&CVec::from_iterator(
                eigenvalues.len(),
                eigenvalues.iter().map(|&v| Complex64::new(v, 0.0)),
            ));
            &u * lam * u.adjoint()
        }
    };
    let res = linalg::hermitian_residual(&r);
    if res > 1e-10 * (1.0 + linalg::max_abs(&r)) {
        return Err(JsdmError::Inconsistent(format!(
            "covariance not Hermitian, residual {res:.3e}"
        )));
    }
    Ok(r)
}

/// Top-`r` eigenpairs of a Hermitian PSD matrix in strictly descending
/// order. Errors when `r` exceeds the numerical rank.
pub fn eig_truncate(r_mat: &CMat, r: usize) -> Result<(CMat, Vec<f64>)> {
    let (u, vals) = linalg::hermitian_eig_desc(r_mat)?;
    let top = vals.first().copied().unwrap_or(0.0);
    let rank = vals.iter().filter(|&&v| v > RANK_TOL * top.max(1e-300)).count();
    if r > rank {
        return Err(JsdmError::InvalidSpec(format!(
            "requested {r} eigenpairs but numerical rank is {rank}"
        )));
    }
    Ok((u.columns(0, r).into_owned(), vals[..r].to_vec()))
}

/// Per-group covariance eigenstructure and pre-beamformer.
#[derive(Debug, Clone)]
pub struct GroupProfile {
    pub id: usize,
    /// Number of BS antennas.
    pub m: usize,
    /// Number of users in the group.
    pub k_users: usize,
    /// M x r_g orthonormal eigenvector matrix.
    pub u: CMat,
    /// r_g positive eigenvalues in descending order.
    pub lambdas: Vec<f64>,
    /// Served-beam count r_g* <= r_g.
    pub r_star: usize,
    /// M x r_g* pre-beamformer; always the first r_g* columns of `u`.
    pub v: CMat,
    /// Optional per-user large-scale fading gains l_k (empty = all ones).
    pub user_gains: Vec<f64>,
}

impl GroupProfile {
    pub fn new(
        id: usize,
        k_users: usize,
        u: CMat,
        lambdas: Vec<f64>,
        r_star: usize,
        user_gains: Vec<f64>,
    ) -> Result<Self> {
        let m = u.nrows();
        let r_g = u.ncols();
        if lambdas.len() != r_g {
            return Err(JsdmError::InvalidSpec(format!(
                "{} eigenvalues for {} eigenvectors",
                lambdas.len(),
                r_g
            )));
        }
        if lambdas.iter().any(|&v| v <= 0.0) {
            return Err(JsdmError::InvalidSpec("eigenvalues must be positive".into()));
        }
        if lambdas.windows(2).any(|w| w[0] < w[1] - 1e-12) {
            return Err(JsdmError::InvalidSpec(
                "eigenvalues must be in descending order".into(),
            ));
        }
        if r_star == 0 || r_star > r_g {
            return Err(JsdmError::InvalidSpec(format!(
                "r_star must be in 1..={r_g}, got {r_star}"
            )));
        }
        let ortho = linalg::max_abs(&(u.adjoint() * &u - CMat::identity(r_g, r_g)));
        if ortho > 1e-9 {
            return Err(JsdmError::InvalidSpec(format!(
                "eigenvector columns not orthonormal, residual {ortho:.3e}"
            )));
        }
        if !user_gains.is_empty() {
            if user_gains.len() != k_users {
                return Err(JsdmError::InvalidSpec(
                    "user_gains length must equal the user count".into(),
                ));
            }
            if user_gains.iter().any(|&g| g <= 0.0) {
                return Err(JsdmError::InvalidSpec("user gains must be positive".into()));
            }
        }
        let v = u.columns(0, r_star).into_owned();
        Ok(Self {
            id,
            m,
            k_users,
            u,
            lambdas,
            r_star,
            v,
            user_gains,
        })
    }

    /// Builds a profile from a covariance spec, keeping the full numerical
    /// rank and clamping `r_star` to it.
    pub fn from_covariance(
        id: usize,
        spec: &CovarianceSpec,
        r_star: usize,
        k_users: usize,
    ) -> Result<Self> {
        match spec {
            CovarianceSpec::DftColumns {
                m,
                start,
                end,
                eigenvalues,
            } => {
                spec.validate()?;
                let f = linalg::dft_matrix(*m);
                let u = f.columns(*start, end - start).into_owned();
                let r_star = r_star.min(eigenvalues.len());
                Self::new(id, k_users, u, eigenvalues.clone(), r_star, Vec::new())
            }
            _ => {
                let r_mat = build_covariance(spec)?;
                let (u_full, vals) = linalg::hermitian_eig_desc(&r_mat)?;
                let top = vals.first().copied().unwrap_or(0.0);
                let rank = vals.iter().filter(|&&v| v > RANK_TOL * top.max(1e-300)).count();
                if rank == 0 {
                    return Err(JsdmError::InvalidSpec("covariance has rank zero".into()));
                }
                let u = u_full.columns(0, rank).into_owned();
                let r_star = r_star.min(rank).max(1);
                Self::new(id, k_users, u, vals[..rank].to_vec(), r_star, Vec::new())
            }
        }
    }

    pub fn rank(&self) -> usize {
        self.lambdas.len()
    }

    /// True when the kept eigenvalues are strictly decreasing with at
    /// least the given relative gap (required for the generalized
    /// chi-square partial fractions).
    pub fn has_distinct_eigenvalues(&self, rel_tol: f64) -> bool {
        check_strictly_decreasing(&self.lambdas, rel_tol).is_ok()
    }
}

/// One user's realization within a trial.
#[derive(Debug, Clone)]
pub struct UserChannel {
    /// Latent i.i.d. CN(0,1) coefficients, length r_g.
    pub eta: CVec,
    /// Full M-dimensional channel h = sqrt(l_k) U Lambda^{1/2} eta.
    pub h: CVec,
    /// Entries of h^H V_g (the user's own effective channel row), length r_g*.
    pub g_eff: CVec,
    /// Entries of h^H V_{g'} for every group g' (self slot left empty).
    pub cross_eff: Vec<CVec>,
    /// Sum over g' != g of ||h^H V_{g'}||^2.
    pub intergroup_power: f64,
}

impl UserChannel {
    pub fn g_norm_sqr(&self) -> f64 {
        self.g_eff.norm_squared()
    }
}

#[derive(Debug, Clone)]
pub struct GroupChannels {
    pub users: Vec<UserChannel>,
}

/// One Monte Carlo realization for all groups.
#[derive(Debug, Clone)]
pub struct ChannelBatch {
    pub groups: Vec<GroupChannels>,
}

/// Samples a full channel batch. Deterministic in (`base_seed`, `trial`);
/// each user draws from its own derived stream so any parallel evaluation
/// order gives identical results.
pub fn sample_channels(profiles: &[GroupProfile], base_seed: u64, trial: u64) -> ChannelBatch {
    let g_count = profiles.len();
    // T[g][g'] = U_g^H V_{g'} for cross-group projections.
    let mut proj: Vec<Vec<Option<CMat>>> = vec![vec![None; g_count]; g_count];
    for (g, pg) in profiles.iter().enumerate() {
        for (gp, pgp) in profiles.iter().enumerate() {
            if g != gp {
                proj[g][gp] = Some(pg.u.adjoint() * &pgp.v);
            }
        }
    }
    let groups = profiles
        .iter()
        .enumerate()
        .map(|(g, pg)| {
            let sqrt_lam: Vec<f64> = pg.lambdas.iter().map(|l| l.sqrt()).collect();
            let users = (0..pg.k_users)
                .map(|k| {
                    let mut r = rng::stream(&[base_seed, trial, g as u64, k as u64]);
                    let eta = rng::complex_normal_vector(&mut r, pg.rank());
                    let gain = pg.user_gains.get(k).copied().unwrap_or(1.0).sqrt();
                    // c = sqrt(l_k) Lambda^{1/2} eta
                    let c = CVec::from_iterator(
                        pg.rank(),
                        eta.iter()
                            .zip(&sqrt_lam)
                            .map(|(e, s)| e * Complex64::new(s * gain, 0.0)),
                    );
                    let h = &pg.u * &c;
                    let g_eff = CVec::from_iterator(pg.r_star, (0..pg.r_star).map(|j| c[j].conj()));
                    let mut cross_eff = vec![CVec::zeros(0); g_count];
                    let mut intergroup_power = 0.0;
                    for gp in 0..g_count {
                        if let Some(t) = &proj[g][gp] {
                            // h^H V_{g'} = c^H (U_g^H V_{g'})
                            let row = t.ad_mul(&c).conjugate();
                            intergroup_power += row.norm_squared();
                            cross_eff[gp] = row;
                        }
                    }
                    UserChannel {
                        eta,
                        h,
                        g_eff,
                        cross_eff,
                        intergroup_power,
                    }
                })
                .collect();
            GroupChannels { users }
        })
        .collect();
    ChannelBatch { groups }
}

/// Generalized chi-square distribution: the law of sum_i lambda_i |X_i|^2
/// with distinct weights and standard complex Gaussian X_i.
#[derive(Debug, Clone)]
pub struct GenChiSquare {
    pub lambdas: Vec<f64>,
    pub xi: Vec<f64>,
}

impl GenChiSquare {
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        check_strictly_decreasing(&lambdas, 1e-9)?;
        let l = lambdas.len();
        let mut xi = vec![1.0f64; l];
        for i in 0..l {
            for j in 0..l {
                if j != i {
                    xi[i] *= 1.0 - lambdas[j] / lambdas[i];
                }
            }
        }
        let total: f64 = xi.iter().map(|x| 1.0 / x).sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(JsdmError::Inconsistent(format!(
                "partial-fraction constants inconsistent, sum of reciprocals {total}"
            )));
        }
        Ok(Self { lambdas, xi })
    }

    /// Distribution of ||g||^2 for a user of this profile (top r_g*
    /// eigenvalues). Requires distinct eigenvalues.
    pub fn from_profile(profile: &GroupProfile) -> Result<Self> {
        Self::new(profile.lambdas[..profile.r_star].to_vec())
    }

    /// CDF at z >= 0. Clamped to [0, 1] only against floating-point
    /// undershoot below 1e-12 magnitude.
    pub fn cdf(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        let mut acc = 0.0;
        for (lam, xi) in self.lambdas.iter().zip(&self.xi) {
            acc += (1.0 - (-z / lam).exp()) / xi;
        }
        if acc < 0.0 && acc > -1e-12 {
            0.0
        } else if acc > 1.0 && acc < 1.0 + 1e-12 {
            1.0
        } else {
            acc
        }
    }

    /// Complementary CDF at z >= 0.
    pub fn ccdf(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 1.0;
        }
        let mut acc = 0.0;
        for (lam, xi) in self.lambdas.iter().zip(&self.xi) {
            acc += (-z / lam).exp() / xi;
        }
        acc.clamp(0.0, 1.0)
    }

    /// One random draw (direct sum of weighted exponentials).
    pub fn sample(&self, rng: &mut rand_chacha::ChaCha8Rng) -> f64 {
        self.lambdas
            .iter()
            .map(|lam| -lam * rng::uniform_open01(rng).ln())
            .sum()
    }
}
