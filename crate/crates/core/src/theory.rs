//! Executable checks of the analytical results underpinning the
//! scheduler: the cone inner-product bound, extreme-value tail behavior
//! of the effective channel power, the sum-rate scaling slope, and the
//! quasi-SINR CCDF sandwich.

use num_complex::Complex64;

use crate::channel::{sample_channels, GenChiSquare, GroupProfile};
use crate::error::{JsdmError, Result};
use crate::linalg::CVec;
use crate::rng;
use crate::scheduling;

/// Pairwise inner-product cap for normalized vectors in distinct cones:
/// 2 alpha sqrt(1 - alpha^2). Meaningful (< 1) only for alpha > 1/sqrt(2).
pub fn cone_pair_bound(alpha: f64) -> f64 {
    2.0 * alpha * (1.0 - alpha * alpha).max(0.0).sqrt()
}

/// Lower endpoint of the admissible fixed-alpha range for the
/// effective-gain argument, sqrt((1 + sqrt((r*-2)/(r*-1))) / 2). Defined
/// for r* >= 2 and always >= 1/sqrt(2).
pub fn alpha_bar_lower(r_star: usize) -> Result<f64> {
    if r_star < 2 {
        return Err(JsdmError::BoundInvalid(
            "admissible range needs r* >= 2".into(),
        ));
    }
    let r = r_star as f64;
    Ok((0.5 * (1.0 + ((r - 2.0) / (r - 1.0)).sqrt())).sqrt())
}

/// Result of the cone-pair inner-product check.
#[derive(Debug, Clone)]
pub struct ConePairReport {
    pub bound: f64,
    pub max_observed: f64,
    pub accepted: usize,
    pub pass: bool,
}

/// Draws a uniform unit vector of C^n conditioned on |v[pin]| >= alpha,
/// by inverse-CDF sampling of the pinned coordinate's power (Beta(1, n-1)
/// truncated to [alpha^2, 1]) and a uniform direction for the rest.
pub fn sample_cone_unit_vector(
    r: &mut rand_chacha::ChaCha8Rng,
    n: usize,
    pin: usize,
    alpha: f64,
) -> CVec {
    let u = rng::uniform_open01(r);
    let s = if n == 1 {
        1.0
    } else {
        1.0 - (1.0 - alpha * alpha) * u.powf(1.0 / (n as f64 - 1.0))
    };
    let phase = 2.0 * std::f64::consts::PI * rng::uniform_open01(r);
    let rest = rng::unit_vector(r, n - 1);
    let scale = (1.0 - s).sqrt();
    let mut v = CVec::zeros(n);
    v[pin] = Complex64::from_polar(s.sqrt(), phase);
    let mut w = 0;
    for i in 0..n {
        if i != pin {
            v[i] = rest[w] * Complex64::new(scale, 0.0);
            w += 1;
        }
    }
    v
}

/// Samples pairs of unit vectors lying in distinct cones and checks the
/// inner-product bound, including the deterministic extremal pair that
/// attains it.
pub fn cone_pair_bound_check(
    alpha: f64,
    r_star: usize,
    trials: usize,
    seed: u64,
) -> Result<ConePairReport> {
    if alpha < std::f64::consts::FRAC_1_SQRT_2 {
        return Err(JsdmError::BoundInvalid(
            "cone-pair bound needs alpha >= 1/sqrt(2)".into(),
        ));
    }
    if r_star < 2 {
        return Err(JsdmError::InvalidSpec("need at least two cones".into()));
    }
    let bound = cone_pair_bound(alpha);
    let mut max_observed = 0.0f64;
    let mut accepted = 0usize;
    let mut r = rng::stream(&[seed, 0xC0_4E]);
    for _ in 0..trials {
        let v = sample_cone_unit_vector(&mut r, r_star, 0, alpha);
        let w = sample_cone_unit_vector(&mut r, r_star, 1, alpha);
        let ip = v.dotc(&w).norm();
        if ip > bound + 1e-12 {
            return Ok(ConePairReport {
                bound,
                max_observed: ip,
                accepted: accepted + 1,
                pass: false,
            });
        }
        max_observed = max_observed.max(ip);
        accepted += 1;
    }
    // Extremal pair: boundary points of two cones sharing a plane.
    let c = (1.0 - alpha * alpha).sqrt();
    let mut v = CVec::zeros(r_star);
    let mut w = CVec::zeros(r_star);
    v[0] = Complex64::new(alpha, 0.0);
    v[1] = Complex64::new(c, 0.0);
    w[0] = Complex64::new(c, 0.0);
    w[1] = Complex64::new(alpha, 0.0);
    let ip = v.dotc(&w).norm();
    accepted += 1;
    max_observed = max_observed.max(ip);
    let pass = max_observed <= bound + 1e-12;
    Ok(ConePairReport {
        bound,
        max_observed,
        accepted,
        pass,
    })
}

/// Tail distribution with the truncated generalized-chi-square upper
/// segment: F(z) = 1 - zeta * sum_i e^{-z/lambda_i}/xi_i for z >= z_tau,
/// completed below z_tau by the linear interpolant from (0, 0).
#[derive(Debug, Clone)]
pub struct TailBoundSpec {
    pub gcs: GenChiSquare,
    pub zeta: f64,
    pub z_tau: f64,
    pub k: usize,
}

impl TailBoundSpec {
    pub fn new(lambdas: Vec<f64>, zeta: f64, z_tau: f64, k: usize) -> Result<Self> {
        if !(0.0 < zeta && zeta <= 1.0) {
            return Err(JsdmError::InvalidSpec("zeta must be in (0, 1]".into()));
        }
        if z_tau < 0.0 {
            return Err(JsdmError::InvalidSpec("z_tau must be nonnegative".into()));
        }
        if k < 10 {
            return Err(JsdmError::InvalidSpec("need K >= 10".into()));
        }
        let gcs = GenChiSquare::new(lambdas)?;
        let spec = Self {
            gcs,
            zeta,
            z_tau,
            k,
        };
        if spec.cdf(z_tau) < 0.0 {
            return Err(JsdmError::InvalidSpec(
                "zeta too large: CDF negative at z_tau".into(),
            ));
        }
        Ok(spec)
    }

    pub fn cdf(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        let upper = |z: f64| 1.0 - self.zeta * self.gcs.ccdf(z);
        if z >= self.z_tau {
            upper(z)
        } else {
            // Linear completion below the truncation point.
            upper(self.z_tau) * z / self.z_tau
        }
    }

    /// Inverse CDF by bisection on the upper segment (linear segment is
    /// inverted in closed form).
    pub fn inv_cdf(&self, u: f64) -> f64 {
        let f_tau = self.cdf(self.z_tau);
        if self.z_tau > 0.0 && u <= f_tau {
            return self.z_tau * u / f_tau;
        }
        let mut lo = self.z_tau;
        let mut hi = (self.z_tau + 1.0).max(1.0);
        while self.cdf(hi) < u {
            hi *= 2.0;
            if hi > 1e12 {
                break;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Exceedance threshold lambda_1 log K - lambda_1 loglog K
    /// + lambda_1 log(zeta/xi_1).
    pub fn u_k(&self) -> f64 {
        let l1 = self.gcs.lambdas[0];
        let kf = self.k as f64;
        l1 * kf.ln() - l1 * kf.ln().ln() + l1 * (self.zeta / self.gcs.xi[0]).ln()
    }
}

/// Result of the extreme-value tail check.
#[derive(Debug, Clone)]
pub struct EvtReport {
    pub u_k: f64,
    pub exceed_freq: f64,
    pub trials: usize,
    /// False when u_K fell below z_tau (threshold outside the modeled
    /// tail), making the run inconclusive rather than a failure.
    pub conclusive: bool,
}

/// Estimates Pr{Z_max > u_K} for the maximum of K i.i.d. draws from the
/// spec's distribution. The maximum is sampled exactly through the
/// order-statistic transform U_max = W^{1/K}, one inversion per trial.
pub fn evt_tail_check(spec: &TailBoundSpec, trials: usize, seed: u64) -> EvtReport {
    let u_k = spec.u_k();
    if u_k < spec.z_tau {
        return EvtReport {
            u_k,
            exceed_freq: f64::NAN,
            trials: 0,
            conclusive: false,
        };
    }
    // Pr{Z_max > u_K} = 1 - F(u_K)^K; estimate by Monte Carlo over the
    // order statistic to exercise the sampling path end to end.
    let mut r = rng::stream(&[seed, 0xE7_u64]);
    let mut exceed = 0usize;
    let threshold_cdf = spec.cdf(u_k);
    for _ in 0..trials {
        let w = rng::uniform_open01(&mut r);
        let u_max = w.powf(1.0 / spec.k as f64);
        if u_max > threshold_cdf {
            exceed += 1;
        }
    }
    EvtReport {
        u_k,
        exceed_freq: exceed as f64 / trials as f64,
        trials,
        conclusive: true,
    }
}

/// Least-squares fit y = a + b * loglog(k') over a grid of K' values.
/// Returns (intercept, slope).
pub fn loglog_fit(k_primes: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if k_primes.len() != ys.len() || k_primes.len() < 3 {
        return Err(JsdmError::InvalidSpec(
            "slope fit needs >= 3 matching grid points".into(),
        ));
    }
    let xs: Vec<f64> = k_primes.iter().map(|&k| k.ln().ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 0.0 {
        return Err(JsdmError::InvalidSpec("degenerate K grid".into()));
    }
    let slope = sxy / sxx;
    Ok((my - slope * mx, slope))
}

/// Predicted sum rate sum_g r_g* log(1 + rho lambda_{g,1} log K') (nats),
/// the multiuser-diversity curve the simulated means are overlaid on.
pub fn predicted_sum_rate(profiles: &[GroupProfile], rho: f64, k_prime: f64) -> f64 {
    profiles
        .iter()
        .map(|p| p.r_star as f64 * (1.0 + rho * p.lambdas[0] * k_prime.ln()).ln())
        .sum()
}

/// Result of the quasi-SINR CCDF sandwich check.
#[derive(Debug, Clone)]
pub struct SandwichReport {
    pub eps: f64,
    pub zeta_hat: f64,
    /// (z, lhs = Pr{phi >= z}, rhs = zeta_hat * Pr{||g||^2 >= z(1/rho+eps)})
    pub points: Vec<(f64, f64, f64)>,
    pub pass: bool,
    /// Conditional comparison: conditioning on the cone-
    /// and-interference event never lowered the channel-power CCDF
    /// (within 3 sigma).
    pub conditional_pass: bool,
}

/// Empirical check of the CCDF chain: the quasi-SINR tail dominates
/// zeta(alpha, eps) times the channel-power tail at the shifted
/// threshold, and conditioning on the cone/interference event raises the
/// channel-power tail.
pub fn ccdf_sandwich_check(
    profiles: &[GroupProfile],
    group: usize,
    alpha: f64,
    rho: f64,
    trials: u64,
    seed: u64,
) -> Result<SandwichReport> {
    let pg = &profiles[group];
    let r_star = pg.r_star as f64;
    // Collect per-user samples: (||g||^2, r* x intergroup, cone flag, phi).
    let mut samples: Vec<(f64, f64, bool, f64)> = Vec::new();
    for t in 0..trials {
        let batch = sample_channels(profiles, seed, t);
        for u in &batch.groups[group].users {
            let gn = u.g_norm_sqr();
            let interference = r_star * u.intergroup_power;
            let best = u.g_eff.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
            let cone = best / gn.sqrt() >= alpha;
            let phi = scheduling::quasi_sinr(&u.g_eff, u.intergroup_power, rho, pg.r_star);
            samples.push((gn, interference, cone, phi));
        }
    }
    let n = samples.len() as f64;
    // eps: empirical median of the scaled inter-group interference.
    let mut ints: Vec<f64> = samples.iter().map(|s| s.1).collect();
    ints.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let eps = ints[ints.len() / 2];
    let p_cone = samples.iter().filter(|s| s.2).count() as f64 / n;
    let p_cap = samples.iter().filter(|s| s.1 <= eps).count() as f64 / n;
    let zeta_hat = p_cone * p_cap;
    // z grid from quantiles of phi so both sides stay resolvable.
    let mut phis: Vec<f64> = samples.iter().map(|s| s.3).collect();
    phis.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let grid: Vec<f64> = [0.2, 0.4, 0.6, 0.8, 0.9, 0.95]
        .iter()
        .map(|&q| phis[((q * n) as usize).min(phis.len() - 1)])
        .collect();
    let mut points = Vec::new();
    let mut pass = true;
    for &z in &grid {
        let lhs = samples.iter().filter(|s| s.3 >= z).count() as f64 / n;
        let shifted = z * (1.0 / rho + eps);
        let p_g = samples.iter().filter(|s| s.0 >= shifted).count() as f64 / n;
        let rhs = zeta_hat * p_g;
        let sigma = (lhs * (1.0 - lhs) / n).sqrt() + (p_g * (1.0 - p_g) / n).sqrt();
        if lhs < rhs - 3.0 * sigma {
            pass = false;
        }
        points.push((z, lhs, rhs));
    }
    // Conditional comparison on the channel power itself.
    let cond: Vec<&(f64, f64, bool, f64)> =
        samples.iter().filter(|s| s.2 && s.1 <= eps).collect();
    let mut conditional_pass = true;
    if !cond.is_empty() {
        let nc = cond.len() as f64;
        for &z in &grid {
            let shifted = z * (1.0 / rho + eps);
            let p_cond = cond.iter().filter(|s| s.0 >= shifted).count() as f64 / nc;
            let p_unc = samples.iter().filter(|s| s.0 >= shifted).count() as f64 / n;
            let sigma = (p_cond * (1.0 - p_cond) / nc).sqrt() + (p_unc * (1.0 - p_unc) / n).sqrt();
            if p_cond < p_unc - 3.0 * sigma {
                conditional_pass = false;
            }
        }
    }
    Ok(SandwichReport {
        eps,
        zeta_hat,
        points,
        pass,
        conditional_pass,
    })
}
