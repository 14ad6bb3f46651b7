//! User-selection schemes operating on a sampled channel batch:
//! cone-based distributed selection (reference-beam CQI reports plus
//! per-beam argmax at the BS), semi-orthogonal greedy selection with a
//! hyperslab constraint, random beamforming with max-SINR reports, and a
//! greedy DPC-style QR baseline.


use crate::channel::{ChannelBatch, GroupProfile};
use crate::linalg::{CMat, CVec};

/// Score margin below which two users count as tied; ties resolve to the
/// lower user index.
const TIE_TOL: f64 = 1e-12;

/// One user's uplink feedback: best reference-beam index and, unless the
/// user is reporting index-only (round-robin mode with an empty cone
/// test), its quasi-SINR.
#[derive(Debug, Clone, PartialEq)]
pub struct CqiReport {
    pub user: usize,
    pub beam_index: usize,
    pub quasi_sinr: Option<f64>,
}

/// Per-group selection result.
#[derive(Debug, Clone)]
pub struct GroupOutcome {
    /// Ordered selected users as (beam slot, user index) pairs.
    pub selected: Vec<(usize, usize)>,
    /// Candidate-set size |W_{g,i}| per reference beam (CQI-bearing
    /// reports only). Empty for schemes without per-beam reports.
    pub cone_sizes: Vec<usize>,
    /// Count of index-only reports (round-robin mode).
    pub index_only_reports: usize,
    /// Selected users' effective channel rows, |selected| x r*.
    pub g_sel: CMat,
    /// Rates computed by the scheme itself (nats); None for ZF-based
    /// schemes whose rates come from the precoding stage.
    pub direct_rates_nats: Option<Vec<f64>>,
}

impl GroupOutcome {
    fn empty(r_star: usize) -> Self {
        GroupOutcome {
            selected: Vec::new(),
            cone_sizes: vec![0; r_star],
            index_only_reports: 0,
            g_sel: CMat::zeros(0, r_star),
            direct_rates_nats: None,
        }
    }
}

/// Selection result for all groups.
#[derive(Debug, Clone)]
pub struct ScheduleOutcome {
    pub groups: Vec<GroupOutcome>,
}

/// Cone membership test: indices whose normalized entry magnitude
/// reaches `alpha`. A zero vector yields the empty set.
pub fn candidate_set(g_eff: &CVec, alpha: f64) -> Vec<usize> {
    let norm = g_eff.norm();
    if norm <= 0.0 {
        return Vec::new();
    }
    g_eff
        .iter()
        .enumerate()
        .filter(|(_, z)| z.norm() / norm >= alpha)
        .map(|(i, _)| i)
        .collect()
}

/// CQI value: ||g||^2 / (1/rho + r* * intergroup_power).
pub fn quasi_sinr(g_eff: &CVec, intergroup_power: f64, rho: f64, r_star: usize) -> f64 {
    g_eff.norm_squared() / (1.0 / rho + r_star as f64 * intergroup_power)
}

/// Computes every user's CQI report under per-user cone parameters.
/// `alpha_of(g, k)` supplies the cone parameter; `eligible(g, k)` masks
/// users out entirely (round-robin pools). When `index_only_fallback` is
/// set, users failing the cone test still report their best beam index
/// without a CQI.
pub fn cqi_reports(
    profiles: &[GroupProfile],
    batch: &ChannelBatch,
    rho: f64,
    alpha_of: &dyn Fn(usize, usize) -> f64,
    eligible: &dyn Fn(usize, usize) -> bool,
    index_only_fallback: bool,
) -> Vec<Vec<CqiReport>> {
    profiles
        .iter()
        .enumerate()
        .map(|(g, pg)| {
            let mut reports = Vec::new();
            for (k, u) in batch.groups[g].users.iter().enumerate() {
                if !eligible(g, k) {
                    continue;
                }
                let norm = u.g_eff.norm();
                if norm <= 0.0 {
                    continue;
                }
                // Best reference beam: argmax of |g_i| (ties to lowest index).
                let mut best = 0usize;
                let mut best_mag = -1.0f64;
                for (i, z) in u.g_eff.iter().enumerate() {
                    let m = z.norm();
                    if m > best_mag + TIE_TOL {
                        best_mag = m;
                        best = i;
                    }
                }
                let in_cone = best_mag / norm >= alpha_of(g, k);
                if in_cone {
                    reports.push(CqiReport {
                        user: k,
                        beam_index: best,
                        quasi_sinr: Some(quasi_sinr(
                            &u.g_eff,
                            u.intergroup_power,
                            rho,
                            pg.r_star,
                        )),
                    });
                } else if index_only_fallback {
                    reports.push(CqiReport {
                        user: k,
                        beam_index: best,
                        quasi_sinr: None,
                    });
                }
            }
            reports
        })
        .collect()
}

/// BS-side per-beam argmax over CQI-bearing reports. `score(g, report)`
/// ranks users within a beam (default: the quasi-SINR itself; the
/// proportional-fair wrapper normalizes by tracked average rates).
pub fn assign_beams(
    profiles: &[GroupProfile],
    batch: &ChannelBatch,
    reports: &[Vec<CqiReport>],
    score: &dyn Fn(usize, &CqiReport) -> f64,
) -> ScheduleOutcome {
    let groups = profiles
        .iter()
        .enumerate()
        .map(|(g, pg)| {
            let mut out = GroupOutcome::empty(pg.r_star);
            let mut winner: Vec<Option<(usize, f64)>> = vec![None; pg.r_star];
            for rep in &reports[g] {
                if rep.quasi_sinr.is_none() {
                    out.index_only_reports += 1;
                    continue;
                }
                out.cone_sizes[rep.beam_index] += 1;
                let s = score(g, rep);
                match winner[rep.beam_index] {
                    Some((_, best)) if s <= best + TIE_TOL => {}
                    _ => winner[rep.beam_index] = Some((rep.user, s)),
                }
            }
            for (beam, w) in winner.iter().enumerate() {
                if let Some((user, _)) = w {
                    out.selected.push((beam, *user));
                }
            }
            out.g_sel = CMat::from_fn(out.selected.len(), pg.r_star, |row, col| {
                batch.groups[g].users[out.selected[row].1].g_eff[col]
            });
            out
        })
        .collect();
    ScheduleOutcome { groups }
}

/// Cone-based distributed selection: cone-test reports followed by
/// per-beam quasi-SINR argmax.
pub fn redos_select(
    profiles: &[GroupProfile],
    batch: &ChannelBatch,
    alpha: f64,
    rho: f64,
) -> ScheduleOutcome {
    let reports = cqi_reports(profiles, batch, rho, &|_, _| alpha, &|_, _| true, false);
    assign_beams(profiles, batch, &reports, &|_, r| r.quasi_sinr.unwrap())
}

/// Random beamforming on the reference beams: each user reports its best
/// beam's SINR, BS picks the per-beam argmax, transmission stays on the
/// reference beams. Rates are computed directly from the reported SINR.
pub fn rbf_select(profiles: &[GroupProfile], batch: &ChannelBatch, rho: f64) -> ScheduleOutcome {
    let groups = profiles
        .iter()
        .enumerate()
        .map(|(g, pg)| {
            let mut out = GroupOutcome::empty(pg.r_star);
            let mut winner: Vec<Option<(usize, f64)>> = vec![None; pg.r_star];
            for (k, u) in batch.groups[g].users.iter().enumerate() {
                // |h^H u_{g,i}|^2 for the served beams is |g_eff_i|^2.
                let beam_pow: Vec<f64> = (0..pg.r_star).map(|i| u.g_eff[i].norm_sqr()).collect();
                let total: f64 = beam_pow.iter().sum();
                let mut best: Option<(usize, f64)> = None;
                for (i, &p) in beam_pow.iter().enumerate() {
                    let sinr = rho * p
                        / (1.0 + rho * (total - p) + rho * u.intergroup_power);
                    match best {
                        Some((_, b)) if sinr <= b + TIE_TOL => {}
                        _ => best = Some((i, sinr)),
                    }
                }
                let (i_star, sinr) = best.unwrap();
                out.cone_sizes[i_star] += 1;
                match winner[i_star] {
                    Some((_, b)) if sinr <= b + TIE_TOL => {}
                    _ => winner[i_star] = Some((k, sinr)),
                }
            }
            let mut rates = Vec::new();
            for (beam, w) in winner.iter().enumerate() {
                if let Some((user, sinr)) = w {
                    out.selected.push((beam, *user));
                    rates.push((1.0 + sinr).ln());
                }
            }
            out.g_sel = CMat::from_fn(out.selected.len(), pg.r_star, |row, col| {
                batch.groups[g].users[out.selected[row].1].g_eff[col]
            });
            out.direct_rates_nats = Some(rates);
            out
        })
        .collect();
    ScheduleOutcome { groups }
}

/// Ranking criterion for the semi-orthogonal greedy selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SusCriterion {
    /// Largest effective channel norm.
    Norm,
    /// Largest quasi-SINR (interference-aware).
    QuasiSinr,
}

/// Semi-orthogonal user selection on effective channels: greedy argmax of
/// the criterion, pruning after every pick to users whose coherence with
/// each selected channel stays within `gamma_slab`.
pub fn sus_select(
    profiles: &[GroupProfile],
    batch: &ChannelBatch,
    gamma_slab: f64,
    rho: f64,
    criterion: SusCriterion,
) -> ScheduleOutcome {
    let groups = profiles
        .iter()
        .enumerate()
        .map(|(g, pg)| {
            let mut out = GroupOutcome::empty(pg.r_star);
            out.cone_sizes.clear();
            let users = &batch.groups[g].users;
            let score = |k: usize| -> f64 {
                let u = &users[k];
                match criterion {
                    SusCriterion::Norm => u.g_norm_sqr(),
                    SusCriterion::QuasiSinr => {
                        quasi_sinr(&u.g_eff, u.intergroup_power, rho, pg.r_star)
                    }
                }
            };
            let mut pool: Vec<usize> = (0..users.len())
                .filter(|&k| users[k].g_eff.norm() > 0.0)
                .collect();
            let mut chosen: Vec<usize> = Vec::new();
            while chosen.len() < pg.r_star && !pool.is_empty() {
                let mut best = pool[0];
                let mut best_score = score(best);
                for &k in &pool[1..] {
                    let s = score(k);
                    if s > best_score + TIE_TOL {
                        best = k;
                        best_score = s;
                    }
                }
                chosen.push(best);
                let picked = &users[best].g_eff;
                let picked_norm = picked.norm();
                pool.retain(|&k| {
                    if k == best {
                        return false;
                    }
                    let w = &users[k].g_eff;
                    let coh = picked.dotc(w).norm() / (picked_norm * w.norm());
                    coh <= gamma_slab
                });
            }
            out.selected = chosen.iter().enumerate().map(|(slot, &k)| (slot, k)).collect();
            out.g_sel = CMat::from_fn(out.selected.len(), pg.r_star, |row, col| {
                users[out.selected[row].1].g_eff[col]
            });
            out
        })
        .collect();
    ScheduleOutcome { groups }
}

/// Result of the greedy DPC-style baseline, which pools users across
/// groups and works on full channels.
#[derive(Debug, Clone)]
pub struct DpcOutcome {
    pub selected: Vec<(usize, usize)>,
    pub rate_nats: f64,
}

/// Sum rate of a DPC transmission to the given full channels at per-
/// stream power rho: sum_i log(1 + rho r_ii^2) from the QR of H^H.
pub fn dpc_rate(channels: &[&CVec], rho: f64) -> f64 {
    if channels.is_empty() {
        return 0.0;
    }
    let m = channels[0].len();
    let s = channels.len();
    // Columns of A are the channel vectors; R diagonal gives the
    // sequential (interference-pre-cancelled) gains.
    let a = CMat::from_fn(m, s, |i, j| channels[j][i]);
    let qr = a.qr();
    let r = qr.r();
    (0..s)
        .map(|i| (1.0 + rho * r[(i, i)].norm_sqr()).ln())
        .sum()
}

/// Greedy user addition maximizing the DPC sum rate, stopping when no
/// candidate improves it or `s_max` users are reached.
pub fn greedy_dpc_select(
    profiles: &[GroupProfile],
    batch: &ChannelBatch,
    rho: f64,
) -> DpcOutcome {
    let s_max: usize = profiles.iter().map(|p| p.r_star).sum();
    let mut pool: Vec<(usize, usize)> = Vec::new();
    for (g, gc) in batch.groups.iter().enumerate() {
        for k in 0..gc.users.len() {
            pool.push((g, k));
        }
    }
    let mut selected: Vec<(usize, usize)> = Vec::new();
    let mut best_rate = 0.0f64;
    while selected.len() < s_max && !pool.is_empty() {
        let mut cand_best: Option<(usize, f64)> = None;
        for (idx, &(g, k)) in pool.iter().enumerate() {
            let mut chans: Vec<&CVec> = selected
                .iter()
                .map(|&(g, k)| &batch.groups[g].users[k].h)
                .collect();
            chans.push(&batch.groups[g].users[k].h);
            let rate = dpc_rate(&chans, rho);
            match cand_best {
                Some((_, b)) if rate <= b + TIE_TOL => {}
                _ => cand_best = Some((idx, rate)),
            }
        }
        let Some((idx, rate)) = cand_best else { break };
        if rate <= best_rate + TIE_TOL {
            break;
        }
        best_rate = rate;
        selected.push(pool.remove(idx));
    }
    DpcOutcome {
        selected,
        rate_nats: best_rate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_channels, CovarianceSpec, GroupProfile};
    use crate::rng;
    use num_complex::Complex64;

    fn unit_group(m: usize, r_star: usize, k_users: usize) -> GroupProfile {
        GroupProfile::from_covariance(
            0,
            &CovarianceSpec::DftColumns {
                m,
                start: 0,
                end: m,
                eigenvalues: (0..m).map(|i| 1.0 / (1.0 + 0.5 * i as f64)).collect(),
            },
            r_star,
            k_users,
        )
        .unwrap()
    }

    fn cvec(vals: &[(f64, f64)]) -> CVec {
        CVec::from_iterator(vals.len(), vals.iter().map(|&(re, im)| Complex64::new(re, im)))
    }

    #[test]
    fn candidate_set_examples() {
        // alpha = 1/sqrt(4): nonempty for any nonzero vector.
        let mut r = rng::stream(&[51]);
        for _ in 0..1000 {
            let v = rng::complex_normal_vector(&mut r, 4);
            assert!(!candidate_set(&v, 0.5).is_empty());
        }
        let e2 = cvec(&[(0.0, 0.0), (1.0, 0.0), (0.0, 0.0), (0.0, 0.0)]);
        assert_eq!(candidate_set(&e2, 0.9), vec![1]);
        let flat = cvec(&[(0.5, 0.0), (0.0, 0.5), (-0.5, 0.0), (0.0, -0.5)]);
        assert!(candidate_set(&flat, 0.51).is_empty());
        assert!(candidate_set(&CVec::zeros(4), 0.1).is_empty());
    }

    #[test]
    fn quasi_sinr_examples() {
        let g = cvec(&[(2.0, 0.0)]);
        assert!((quasi_sinr(&g, 0.0, 3.0, 4) - 3.0 * 4.0).abs() < 1e-12);
        let g2 = cvec(&[(2.0, 0.0), (0.0, 0.0)]);
        // ||g||^2 = 4, rho = 2, r* = 4, interference 0.125 -> 4/(0.5+0.5)
        assert!((quasi_sinr(&g2, 0.125, 2.0, 4) - 4.0).abs() < 1e-12);
        // High-power limit.
        let lim = quasi_sinr(&g2, 0.125, 1e12, 4);
        assert!((lim - 4.0 / 0.5).abs() < 1e-6);
    }

    #[test]
    fn redos_matches_brute_force_oracle() {
        let profiles = [unit_group(4, 4, 100)];
        let rho = 3.0;
        let alpha = 0.55;
        for trial in 0..20 {
            let batch = sample_channels(&profiles, 61, trial);
            let out = redos_select(&profiles, &batch, alpha, rho);
            // Oracle: re-scan all users per cone directly from definitions.
            let mut oracle: Vec<Option<(usize, f64)>> = vec![None; 4];
            for (k, u) in batch.groups[0].users.iter().enumerate() {
                let cs = candidate_set(&u.g_eff, alpha);
                // Report goes to the argmax entry only.
                let mut best_i = 0;
                let mut best_m = -1.0;
                for (i, z) in u.g_eff.iter().enumerate() {
                    if z.norm() > best_m + TIE_TOL {
                        best_m = z.norm();
                        best_i = i;
                    }
                }
                if !cs.contains(&best_i) {
                    continue;
                }
                let q = quasi_sinr(&u.g_eff, u.intergroup_power, rho, 4);
                match oracle[best_i] {
                    Some((_, b)) if q <= b + TIE_TOL => {}
                    _ => oracle[best_i] = Some((k, q)),
                }
            }
            let want: Vec<(usize, usize)> = oracle
                .iter()
                .enumerate()
                .filter_map(|(beam, w)| w.map(|(k, _)| (beam, k)))
                .collect();
            assert_eq!(out.groups[0].selected, want, "trial {trial}");
        }
    }

    #[test]
    fn redos_two_users_one_cone_higher_cqi_wins() {
        let profiles = [unit_group(2, 2, 2)];
        let mut batch = sample_channels(&profiles, 1, 0);
        // Both users pinned to beam 0 with different norms.
        batch.groups[0].users[0].g_eff = cvec(&[(1.0, 0.0), (0.0, 0.0)]);
        batch.groups[0].users[0].intergroup_power = 0.0;
        batch.groups[0].users[1].g_eff = cvec(&[(2.0, 0.0), (0.0, 0.0)]);
        batch.groups[0].users[1].intergroup_power = 0.0;
        let out = redos_select(&profiles, &batch, 0.9, 1.0);
        assert_eq!(out.groups[0].selected, vec![(0, 1)]);
        assert_eq!(out.groups[0].cone_sizes[0], 2);
    }

    #[test]
    fn redos_scale_invariance() {
        let profiles = [unit_group(4, 4, 30)];
        let rho = 2.0;
        for trial in 0..10 {
            let batch = sample_channels(&profiles, 71, trial);
            let base = redos_select(&profiles, &batch, 0.6, rho);
            for k in 0..30 {
                let mut scaled = batch.clone();
                let c = Complex64::new(3.0, 0.0);
                scaled.groups[0].users[k].g_eff *= c;
                let out = redos_select(&profiles, &scaled, 0.6, rho);
                // Scaling cannot remove k from its cone; if k was selected
                // before, it must still be selected on the same beam.
                if let Some(&(beam, _)) = base.groups[0]
                    .selected
                    .iter()
                    .find(|&&(_, u)| u == k)
                {
                    assert!(
                        out.groups[0].selected.contains(&(beam, k)),
                        "trial {trial} user {k} lost its beam after upscaling"
                    );
                }
                // Cone membership is a property of the normalized vector
                // only, so scaling leaves every user's report unchanged.
                assert_eq!(base.groups[0].cone_sizes, out.groups[0].cone_sizes);
            }
        }
    }

    #[test]
    fn cone_pairwise_coherence_cap_on_selected() {
        // Users selected from distinct cones at alpha >= 1/sqrt(2) obey
        // the inner-product cap 2 alpha sqrt(1 - alpha^2).
        let profiles = [unit_group(4, 4, 200)];
        let alpha = 0.75f64;
        let bound = 2.0 * alpha * (1.0 - alpha * alpha).sqrt();
        for trial in 0..50 {
            let batch = sample_channels(&profiles, 81, trial);
            let out = redos_select(&profiles, &batch, alpha, 1.0);
            let sel = &out.groups[0].selected;
            for a in 0..sel.len() {
                for b in (a + 1)..sel.len() {
                    let ga = &batch.groups[0].users[sel[a].1].g_eff;
                    let gb = &batch.groups[0].users[sel[b].1].g_eff;
                    let coh = ga.dotc(gb).norm() / (ga.norm() * gb.norm());
                    assert!(coh <= bound + 1e-12, "coherence {coh} > bound {bound}");
                }
            }
        }
    }

    #[test]
    fn rbf_sinr_example() {
        // Numerator power 2 (at rho_b), other-beam sum 6 -> SINR 2/7.
        let profiles = [unit_group(4, 2, 1)];
        let mut batch = sample_channels(&profiles, 1, 0);
        let u = &mut batch.groups[0].users[0];
        u.g_eff = cvec(&[(2.0f64.sqrt(), 0.0), (6.0f64.sqrt(), 0.0)]);
        u.intergroup_power = 0.0;
        let out = rbf_select(&profiles, &batch, 1.0);
        // Best beam is index 1 (power 6): SINR = 6/(1+2) = 2.
        let rates = out.groups[0].direct_rates_nats.as_ref().unwrap();
        assert_eq!(out.groups[0].selected, vec![(1, 0)]);
        assert!((rates[0] - (1.0f64 + 2.0).ln()).abs() < 1e-12);
        // The worse beam would have scored 2/(1+6) = 2/7.
        let sinr_beam0 = 2.0f64 / (1.0 + 6.0);
        assert!((sinr_beam0 - 2.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn rbf_single_beam_no_intra_interference() {
        let profiles = [unit_group(2, 1, 1)];
        let mut batch = sample_channels(&profiles, 2, 0);
        batch.groups[0].users[0].g_eff = cvec(&[(1.5, 0.0)]);
        batch.groups[0].users[0].intergroup_power = 0.0;
        let rho = 4.0;
        let out = rbf_select(&profiles, &batch, rho);
        let rates = out.groups[0].direct_rates_nats.as_ref().unwrap();
        assert!((rates[0] - (1.0 + rho * 2.25).ln()).abs() < 1e-12);
    }

    #[test]
    fn rbf_on_beam_user_beats_large_off_beam_user() {
        let profiles = [unit_group(2, 2, 2)];
        let mut batch = sample_channels(&profiles, 3, 0);
        // Tiny user exactly on beam 0; huge user at 45 degrees.
        batch.groups[0].users[0].g_eff = cvec(&[(0.01, 0.0), (0.0, 0.0)]);
        batch.groups[0].users[0].intergroup_power = 0.0;
        batch.groups[0].users[1].g_eff = cvec(&[(7.0, 0.0), (7.0, 0.0)]);
        batch.groups[0].users[1].intergroup_power = 0.0;
        let out = rbf_select(&profiles, &batch, 1e4);
        let beam0 = out.groups[0].selected.iter().find(|&&(b, _)| b == 0);
        assert_eq!(beam0, Some(&(0, 0)), "on-beam user must win beam 0");
    }

    #[test]
    fn sus_vacuous_slab_is_greedy_norm_order() {
        let profiles = [unit_group(4, 3, 20)];
        let batch = sample_channels(&profiles, 91, 0);
        let out = sus_select(&profiles, &batch, 1.0, 1.0, SusCriterion::Norm);
        let mut norms: Vec<(usize, f64)> = batch.groups[0]
            .users
            .iter()
            .enumerate()
            .map(|(k, u)| (k, u.g_norm_sqr()))
            .collect();
        norms.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        let want: Vec<usize> = norms.iter().take(3).map(|&(k, _)| k).collect();
        let got: Vec<usize> = out.groups[0].selected.iter().map(|&(_, k)| k).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn sus_orthonormal_users_all_selected() {
        let profiles = [unit_group(4, 3, 3)];
        let mut batch = sample_channels(&profiles, 5, 0);
        for (k, scale) in [(0usize, 3.0), (1, 2.0), (2, 1.0)] {
            let mut v = CVec::zeros(3);
            v[k] = Complex64::new(scale, 0.0);
            batch.groups[0].users[k].g_eff = v;
            batch.groups[0].users[k].intergroup_power = 0.0;
        }
        let out = sus_select(&profiles, &batch, 0.1, 1.0, SusCriterion::Norm);
        let got: Vec<usize> = out.groups[0].selected.iter().map(|&(_, k)| k).collect();
        assert_eq!(got, vec![0, 1, 2]);
    }

    #[test]
    fn sus_matches_independent_replay() {
        let profiles = [unit_group(4, 4, 50)];
        let gamma = 0.4;
        let rho = 2.0;
        for trial in 0..20 {
            let batch = sample_channels(&profiles, 101, trial);
            let out = sus_select(&profiles, &batch, gamma, rho, SusCriterion::QuasiSinr);
            // Independent replay of the iterative definition.
            let users = &batch.groups[0].users;
            let mut remaining: Vec<usize> = (0..50).collect();
            let mut picked: Vec<usize> = Vec::new();
            while picked.len() < 4 && !remaining.is_empty() {
                let mut best = remaining[0];
                let mut best_q =
                    quasi_sinr(&users[best].g_eff, users[best].intergroup_power, rho, 4);
                for &k in &remaining[1..] {
                    let q = quasi_sinr(&users[k].g_eff, users[k].intergroup_power, rho, 4);
                    if q > best_q + TIE_TOL {
                        best = k;
                        best_q = q;
                    }
                }
                picked.push(best);
                let sel = users[best].g_eff.clone();
                remaining.retain(|&k| {
                    k != best && {
                        let w = &users[k].g_eff;
                        sel.dotc(w).norm() / (sel.norm() * w.norm()) <= gamma
                    }
                });
            }
            let got: Vec<usize> = out.groups[0].selected.iter().map(|&(_, k)| k).collect();
            assert_eq!(got, picked, "trial {trial}");
        }
    }

    #[test]
    fn sus_selected_pairwise_coherence_bounded() {
        let profiles = [unit_group(4, 4, 60)];
        let gamma = 0.35;
        for trial in 0..20 {
            let batch = sample_channels(&profiles, 111, trial);
            let out = sus_select(&profiles, &batch, gamma, 1.0, SusCriterion::Norm);
            let sel = &out.groups[0].selected;
            for a in 0..sel.len() {
                for b in (a + 1)..sel.len() {
                    let ga = &batch.groups[0].users[sel[a].1].g_eff;
                    let gb = &batch.groups[0].users[sel[b].1].g_eff;
                    let coh = ga.dotc(gb).norm() / (ga.norm() * gb.norm());
                    assert!(coh <= gamma + 1e-12);
                }
            }
        }
    }

    #[test]
    fn dpc_single_and_orthogonal_users() {
        let profiles = [unit_group(2, 2, 1)];
        let batch = sample_channels(&profiles, 6, 0);
        let out = greedy_dpc_select(&profiles, &batch, 1.0);
        assert_eq!(out.selected.len(), 1);
        let h = &batch.groups[0].users[0].h;
        assert!((out.rate_nats - (1.0 + h.norm_squared()).ln()).abs() < 1e-10);

        // Orthogonal equal-norm channels: rate = 2 log(1 + rho n^2).
        let a = cvec(&[(2.0, 0.0), (0.0, 0.0)]);
        let b = cvec(&[(0.0, 0.0), (0.0, 2.0)]);
        let rate = dpc_rate(&[&a, &b], 3.0);
        assert!((rate - 2.0 * (1.0f64 + 3.0 * 4.0).ln()).abs() < 1e-10);
    }

    #[test]
    fn dpc_rate_order_within_greedy_tolerance_of_exhaustive() {
        let profiles = [unit_group(4, 3, 10)];
        let rho = 2.0;
        let batch = sample_channels(&profiles, 121, 0);
        let out = greedy_dpc_select(&profiles, &batch, rho);
        // Exhaustive search over all subsets of size <= 3.
        let users = &batch.groups[0].users;
        let mut best = 0.0f64;
        for a in 0..10 {
            best = best.max(dpc_rate(&[&users[a].h], rho));
            for b in (a + 1)..10 {
                for perm in [[a, b], [b, a]] {
                    best = best.max(dpc_rate(&[&users[perm[0]].h, &users[perm[1]].h], rho));
                }
                for c in (b + 1)..10 {
                    let idx = [a, b, c];
                    // all orderings, since QR rate depends on encoding order
                    for p in [
                        [0, 1, 2],
                        [0, 2, 1],
                        [1, 0, 2],
                        [1, 2, 0],
                        [2, 0, 1],
                        [2, 1, 0],
                    ] {
                        let chans = [
                            &users[idx[p[0]]].h,
                            &users[idx[p[1]]].h,
                            &users[idx[p[2]]].h,
                        ];
                        best = best.max(dpc_rate(&chans, rho));
                    }
                }
            }
        }
        assert!(
            out.rate_nats >= best - 1e-9,
            "greedy {} below exhaustive {best}",
            out.rate_nats
        );
    }
}
