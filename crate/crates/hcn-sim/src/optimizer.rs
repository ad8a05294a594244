//! Single-frame solvers: required power, duration search, station
//! selection, and the comparison baselines.
//!
//! With one active station the frame decision collapses to the burst
//! length t: inverting the rate equation gives the exact power needed at
//! that length,
//!
//! ```text
//! p(t) = (I + N) / |h|^2 * (2^((T/W)(r/t)) - 1),
//! ```
//!
//! and substituting it back turns the frame energy into a one-dimensional
//! function of t. That function is searched on a uniform grid and refined
//! by golden section; for required spectral efficiencies below about one
//! bit/s/Hz it can be multimodal, which the dense grid absorbs. A closed
//! form approximates the minimizer when the amplifier term dominates:
//! clamp `r T ln2 / (2W)` to `[t_min, T]`, with the full-frame branch
//! active above `r/W = 2/ln2`.
//!
//! Selection is either exact (solve every candidate, keep the cheapest)
//! or by the back-off-aware figure of merit `eta |h| / sqrt(p_max)`, which
//! is what the exact rule degenerates to when circuit power is ignored.

use crate::error::SimError;
use crate::power::{
    frame_energy, pa_consumption, Allocation, BsProfile, EnergyReport, PaModel, UeProfile,
};
use crate::scenario::{ChannelState, CsiMode, DemandSpec, Drop};

/// Required spectral efficiency above which the closed-form duration pins
/// the burst to the whole frame: 2/ln2, about 2.885 bit/s/Hz.
pub const FULL_FRAME_SE_THRESHOLD: f64 = 2.0 / std::f64::consts::LN_2;

/// Knobs of the duration search.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    /// Uniform grid points over the feasible duration interval.
    pub t_grid_points: usize,
    /// Golden-section iterations inside the best grid bracket.
    pub refine_iters: usize,
    /// Accepted relative error of the delivered-rate identity.
    pub rate_tol_rel: f64,
    /// Relative band inside which candidate energies count as tied
    /// (ties resolve to the lowest candidate index).
    pub energy_tie_tol_rel: f64,
    /// Optional fixed lower bound on the burst length, seconds. The
    /// effective lower bound is the larger of this and the feasibility
    /// minimum.
    pub t_min_floor_s: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            t_grid_points: 2048,
            refine_iters: 60,
            rate_tol_rel: 1e-9,
            energy_tie_tol_rel: 1e-12,
            t_min_floor_s: 0.0,
        }
    }
}

/// Which scheme produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeTag {
    /// Exact duration search on every candidate, cheapest wins.
    ProposedPrecise,
    /// Figure-of-merit selection plus closed-form duration.
    ProposedApprox,
    /// Strongest received signal, then exact duration search.
    TraditionalMaxRss,
    /// Every candidate transmits the same power simultaneously.
    AllAccessUniform,
    /// Exhaustive joint grid search (see the `oracle` module).
    OracleBruteForce,
}

/// Outcome of one frame solve.
///
/// `chosen_bs` is a candidate slot index (position in the drop's
/// candidate list); `None` means all candidates transmit, and `power_w`
/// is then the common per-station power. The delivered rate equals the
/// demanded rate to within `SearchConfig::rate_tol_rel`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub chosen_bs: Option<usize>,
    pub power_w: f64,
    pub t_star_s: f64,
    pub energy: EnergyReport,
    pub scheme_tag: SchemeTag,
    pub csi_mode: CsiMode,
}

impl SolveResult {
    /// Power vector this result stands for, in candidate-slot order.
    pub fn powers_w(&self, num_candidates: usize) -> Vec<f64> {
        match self.chosen_bs {
            Some(m) => {
                let mut v = vec![0.0; num_candidates];
                v[m] = self.power_w;
                v
            }
            None => vec![self.power_w; num_candidates],
        }
    }

    /// Rate the allocation actually delivers through the drop's channels,
    /// recomputed from scratch; equal to the demanded rate within the
    /// search tolerance.
    pub fn delivered_rate_bps(&self, drop: &Drop, demand: &DemandSpec) -> Result<f64, SimError> {
        let powers = self.powers_w(drop.channels.len());
        let s = crate::scenario::received_signal_power(&powers, &drop.channels, self.csi_mode)?;
        crate::scenario::achievable_rate(self.t_star_s, s, demand)
    }
}

/// Exact radiated power that delivers the demanded rate in a burst of
/// `t_s` seconds through `channel`, watts.
pub fn power_for_duration(
    channel: &ChannelState,
    t_s: f64,
    demand: &DemandSpec,
) -> Result<f64, SimError> {
    if !t_s.is_finite() || t_s <= 0.0 || t_s > demand.frame_s {
        return Err(SimError::BadDuration {
            t_s,
            frame_s: demand.frame_s,
        });
    }
    let g = channel.gain_pow();
    if g <= 0.0 {
        return Err(SimError::DeadChannel);
    }
    let x = demand.frame_s / demand.bandwidth_hz * (demand.r_dl_bps / t_s);
    if x > 1020.0 {
        return Err(SimError::DurationOverflow { t_s });
    }
    Ok(demand.noise_plus_interference_w() / g * (x.exp2() - 1.0))
}

/// Shortest feasible burst given the ceiling SNR, clamped to the frame
/// when it overshoots by floating-point noise only.
fn t_min_from_snr(snr_max: f64, demand: &DemandSpec) -> Result<f64, SimError> {
    let t_min = demand.frame_s * demand.required_se() / (1.0 + snr_max).log2();
    if t_min <= demand.frame_s {
        Ok(t_min)
    } else if t_min <= demand.frame_s * (1.0 + 1e-9) {
        Ok(demand.frame_s)
    } else {
        Err(SimError::InfeasibleDemand {
            t_min_s: t_min,
            frame_s: demand.frame_s,
        })
    }
}

/// Shortest burst that can carry the demand at the profile's power
/// ceiling, seconds. Longer bursts need less power, so every duration in
/// `[t_min, T]` is feasible and nothing shorter is.
pub fn t_min_feasible(
    channel: &ChannelState,
    demand: &DemandSpec,
    profile: &BsProfile,
) -> Result<f64, SimError> {
    profile.validate()?;
    let g = channel.gain_pow();
    if g <= 0.0 {
        return Err(SimError::DeadChannel);
    }
    t_min_from_snr(profile.p_max_w * g / demand.noise_plus_interference_w(), demand)
}

/// Accept powers that exceed the ceiling only by floating-point noise.
fn clamp_power_boundary(p_w: f64, p_max_w: f64) -> Result<f64, SimError> {
    if p_w <= p_max_w {
        Ok(p_w)
    } else if p_w <= p_max_w * (1.0 + 1e-9) {
        Ok(p_max_w)
    } else {
        Err(SimError::PowerOutOfRange { p_w, p_max_w })
    }
}

/// Frame energy above the all-idle floor when one station carries the
/// demand alone in a burst of `t_s` seconds, joules.
///
/// Equals `incremental_energy` of the corresponding single-station
/// allocation; evaluated directly from the burst-side closed form.
pub fn energy_single_bs(
    channel: &ChannelState,
    t_s: f64,
    demand: &DemandSpec,
    profile: &BsProfile,
    ue: &UeProfile,
    model: PaModel,
) -> Result<f64, SimError> {
    let p = clamp_power_boundary(power_for_duration(channel, t_s, demand)?, profile.p_max_w)?;
    let r = demand.r_dl_bps;
    let delta_bs = profile.eps_dyn_w_per_bps * r + profile.p_base_w - profile.p_idle_w;
    let delta_ue = ue.eps_dyn_w_per_bps * r + ue.p_base_w - ue.p_idle_w;
    Ok((pa_consumption(p, profile, model)? + delta_bs + delta_ue) * t_s)
}

/// Golden-section minimization on `[a, b]`, returning the best point seen.
pub(crate) fn golden_min<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    iters: usize,
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    if !(b > a) {
        let fa = f(a);
        return (a, fa);
    }
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut best = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    for _ in 0..iters {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
        if f1 < best.1 {
            best = (x1, f1);
        }
        if f2 < best.1 {
            best = (x2, f2);
        }
    }
    best
}

/// Exact duration search for one candidate: uniform grid over the
/// feasible interval, golden-section refinement inside the best bracket.
/// Returns the burst length and its incremental energy.
pub fn solve_duration_precise(
    channel: &ChannelState,
    demand: &DemandSpec,
    profile: &BsProfile,
    ue: &UeProfile,
    model: PaModel,
    cfg: &SearchConfig,
) -> Result<(f64, f64), SimError> {
    let t_min = t_min_feasible(channel, demand, profile)?;
    let t_lo = t_min.max(cfg.t_min_floor_s);
    let frame = demand.frame_s;
    if t_lo > frame {
        return Err(SimError::InfeasibleDemand {
            t_min_s: t_lo,
            frame_s: frame,
        });
    }
    let n = cfg.t_grid_points.max(2);
    let step = (frame - t_lo) / (n - 1) as f64;
    if step <= 0.0 {
        let e = energy_single_bs(channel, frame, demand, profile, ue, model)?;
        return Ok((frame, e));
    }

    let mut best_k = 0usize;
    let mut best_e = f64::INFINITY;
    let mut ts = Vec::with_capacity(n);
    for k in 0..n {
        let t = if k == n - 1 { frame } else { t_lo + step * k as f64 };
        ts.push(t);
        let e = energy_single_bs(channel, t, demand, profile, ue, model)?;
        if e < best_e {
            best_e = e;
            best_k = k;
        }
    }

    let a = ts[best_k.saturating_sub(1)];
    let b = ts[(best_k + 1).min(n - 1)];
    let mut eval = |t: f64| {
        energy_single_bs(channel, t, demand, profile, ue, model).unwrap_or(f64::INFINITY)
    };
    let (t_ref, e_ref) = golden_min(&mut eval, a, b, cfg.refine_iters);
    if e_ref < best_e {
        Ok((t_ref, e_ref))
    } else {
        Ok((ts[best_k], best_e))
    }
}

/// Closed-form burst length: `r T ln2 / (2W)` clamped to the feasible
/// interval, full frame above `r/W = 2/ln2`.
pub fn solve_duration_approx(
    channel: &ChannelState,
    demand: &DemandSpec,
    profile: &BsProfile,
) -> Result<f64, SimError> {
    let t_min = t_min_feasible(channel, demand, profile)?;
    let t0 = demand.required_se() * demand.frame_s * std::f64::consts::LN_2 / 2.0;
    Ok(if t0 < t_min {
        t_min
    } else if demand.required_se() > FULL_FRAME_SE_THRESHOLD {
        demand.frame_s
    } else {
        t0
    })
}

fn check_drop_profiles(drop: &Drop, profiles: &[BsProfile]) -> Result<(), SimError> {
    if drop.channels.len() != profiles.len() {
        return Err(SimError::LengthMismatch {
            powers: profiles.len(),
            channels: drop.channels.len(),
        });
    }
    if drop.channels.is_empty() {
        return Err(SimError::NoFeasibleCandidate);
    }
    Ok(())
}

fn assemble_single(
    drop: &Drop,
    demand: &DemandSpec,
    profiles: &[BsProfile],
    ue: &UeProfile,
    model: PaModel,
    csi: CsiMode,
    m: usize,
    t_s: f64,
    tag: SchemeTag,
) -> Result<SolveResult, SimError> {
    let p = clamp_power_boundary(
        power_for_duration(&drop.channels[m], t_s, demand)?,
        profiles[m].p_max_w,
    )?;
    let mut powers_w = vec![0.0; profiles.len()];
    powers_w[m] = p;
    let energy = frame_energy(&Allocation { powers_w, t_s }, demand, profiles, ue, model)?;
    Ok(SolveResult {
        chosen_bs: Some(m),
        power_w: p,
        t_star_s: t_s,
        energy,
        scheme_tag: tag,
        csi_mode: csi,
    })
}

/// Exact scheme: run the duration search on every candidate and keep the
/// cheapest feasible one. Ties inside the tolerance band go to the lowest
/// index. Per-candidate infeasibility is skipped; if nothing is feasible
/// the whole solve is infeasible.
///
/// A single active station receives the same signal under either channel
/// knowledge mode, so the mode is recorded in the result without
/// branching the computation.
pub fn select_bs_precise(
    drop: &Drop,
    demand: &DemandSpec,
    profiles: &[BsProfile],
    ue: &UeProfile,
    model: PaModel,
    csi: CsiMode,
    cfg: &SearchConfig,
) -> Result<SolveResult, SimError> {
    check_drop_profiles(drop, profiles)?;
    let mut best: Option<(usize, f64, f64)> = None;
    for m in 0..drop.channels.len() {
        match solve_duration_precise(&drop.channels[m], demand, &profiles[m], ue, model, cfg) {
            Ok((t, e)) => {
                let better = match &best {
                    None => true,
                    Some((_, _, e_best)) => e < e_best - cfg.energy_tie_tol_rel * e_best.abs(),
                };
                if better {
                    best = Some((m, t, e));
                }
            }
            Err(err) if err.is_infeasible() => continue,
            Err(err) => return Err(err),
        }
    }
    let (m, t, _) = best.ok_or(SimError::NoFeasibleCandidate)?;
    assemble_single(
        drop,
        demand,
        profiles,
        ue,
        model,
        csi,
        m,
        t,
        SchemeTag::ProposedPrecise,
    )
}

/// Back-off-aware figure of merit: the candidate maximizing
/// `eta_max |h| / sqrt(p_max)`. First maximum wins ties.
pub fn select_bs_approx(drop: &Drop, profiles: &[BsProfile]) -> Result<usize, SimError> {
    check_drop_profiles(drop, profiles)?;
    let mut best = 0usize;
    let mut best_score = f64::NEG_INFINITY;
    for (m, (ch, prof)) in drop.channels.iter().zip(profiles).enumerate() {
        prof.validate()?;
        let score = prof.eta_max * ch.gain_amp() / prof.p_max_w.sqrt();
        if score > best_score {
            best_score = score;
            best = m;
        }
    }
    Ok(best)
}

/// Approximate scheme end to end: figure-of-merit selection plus the
/// closed-form burst length, energy reported at the resulting operating
/// point. The closed forms are derived for the square-root amplifier law;
/// under the linear law they are applied unchanged (and priced with that
/// law).
pub fn solve_proposed_approx(
    drop: &Drop,
    demand: &DemandSpec,
    profiles: &[BsProfile],
    ue: &UeProfile,
    model: PaModel,
    csi: CsiMode,
) -> Result<SolveResult, SimError> {
    let m = select_bs_approx(drop, profiles)?;
    let t = solve_duration_approx(&drop.channels[m], demand, &profiles[m])?;
    assemble_single(
        drop,
        demand,
        profiles,
        ue,
        model,
        csi,
        m,
        t,
        SchemeTag::ProposedApprox,
    )
}

/// What "strongest received signal" means for the traditional baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RssMetric {
    /// Equal reference power at every station: rank by channel power gain.
    #[default]
    GainPow,
    /// Rank by `p_max * gain_pow` (stations advertise at full power).
    PmaxWeighted,
}

/// Traditional baseline: attach to the strongest received signal, then
/// run the exact duration search there.
pub fn baseline_max_rss(
    drop: &Drop,
    demand: &DemandSpec,
    profiles: &[BsProfile],
    ue: &UeProfile,
    model: PaModel,
    csi: CsiMode,
    cfg: &SearchConfig,
    metric: RssMetric,
) -> Result<SolveResult, SimError> {
    check_drop_profiles(drop, profiles)?;
    let mut best = 0usize;
    let mut best_score = f64::NEG_INFINITY;
    for (m, (ch, prof)) in drop.channels.iter().zip(profiles).enumerate() {
        let score = match metric {
            RssMetric::GainPow => ch.gain_pow(),
            RssMetric::PmaxWeighted => prof.p_max_w * ch.gain_pow(),
        };
        if score > best_score {
            best_score = score;
            best = m;
        }
    }
    let (t, _) = solve_duration_precise(&drop.channels[best], demand, &profiles[best], ue, model, cfg)?;
    assemble_single(
        drop,
        demand,
        profiles,
        ue,
        model,
        csi,
        best,
        t,
        SchemeTag::TraditionalMaxRss,
    )
}

/// All-access baseline: every candidate transmits the same power for the
/// same burst. The common power needed at burst length t divides the
/// single-station requirement by the combined gain (sum of power gains,
/// or the squared sum of amplitude gains when transmissions cophase), and
/// is capped by the smallest ceiling in the set. The burst length is
/// searched exactly like the single-station case.
pub fn baseline_all_access(
    drop: &Drop,
    demand: &DemandSpec,
    profiles: &[BsProfile],
    ue: &UeProfile,
    model: PaModel,
    csi: CsiMode,
    cfg: &SearchConfig,
) -> Result<SolveResult, SimError> {
    check_drop_profiles(drop, profiles)?;
    for p in profiles {
        p.validate()?;
    }
    ue.validate()?;
    let combined = match csi {
        CsiMode::LongTerm => drop.channels.iter().map(|c| c.gain_pow()).sum::<f64>(),
        CsiMode::ShortTerm => {
            let amp: f64 = drop.channels.iter().map(|c| c.gain_amp()).sum();
            amp * amp
        }
    };
    if combined <= 0.0 {
        return Err(SimError::DeadChannel);
    }
    let p_cap = profiles.iter().map(|p| p.p_max_w).fold(f64::INFINITY, f64::min);
    let frame = demand.frame_s;
    let n_if = demand.noise_plus_interference_w();
    let t_min = t_min_from_snr(p_cap * combined / n_if, demand)?;
    let t_lo = t_min.max(cfg.t_min_floor_s);
    if t_lo > frame {
        return Err(SimError::InfeasibleDemand {
            t_min_s: t_lo,
            frame_s: frame,
        });
    }

    let r = demand.r_dl_bps;
    let delta_ue = ue.eps_dyn_w_per_bps * r + ue.p_base_w - ue.p_idle_w;
    let a = frame / demand.bandwidth_hz * r;
    let eval = |t: f64| -> Result<f64, SimError> {
        let x = a / t;
        if x > 1020.0 {
            return Err(SimError::DurationOverflow { t_s: t });
        }
        let p = clamp_power_boundary(n_if / combined * (x.exp2() - 1.0), p_cap)?;
        let mut on = delta_ue;
        for prof in profiles {
            on += pa_consumption(p.min(prof.p_max_w), prof, model)?
                + prof.eps_dyn_w_per_bps * r
                + prof.p_base_w
                - prof.p_idle_w;
        }
        Ok(on * t)
    };

    let n = cfg.t_grid_points.max(2);
    let step = (frame - t_lo) / (n - 1) as f64;
    let mut ts = Vec::with_capacity(n);
    let mut best_k = 0usize;
    let mut best_e = f64::INFINITY;
    for k in 0..n {
        let t = if k == n - 1 { frame } else { t_lo + step * k as f64 };
        ts.push(t);
        let e = eval(t)?;
        if e < best_e {
            best_e = e;
            best_k = k;
        }
    }
    let bracket_a = ts[best_k.saturating_sub(1)];
    let bracket_b = ts[(best_k + 1).min(n - 1)];
    let (t_ref, e_ref) = golden_min(
        |t| eval(t).unwrap_or(f64::INFINITY),
        bracket_a,
        bracket_b,
        cfg.refine_iters,
    );
    let t_star = if e_ref < best_e { t_ref } else { ts[best_k] };

    let x = a / t_star;
    let p = clamp_power_boundary(n_if / combined * (x.exp2() - 1.0), p_cap)?;
    let energy = frame_energy(
        &Allocation {
            powers_w: vec![p; profiles.len()],
            t_s: t_star,
        },
        demand,
        profiles,
        ue,
        model,
    )?;
    Ok(SolveResult {
        chosen_bs: None,
        power_w: p,
        t_star_s: t_star,
        energy,
        scheme_tag: SchemeTag::AllAccessUniform,
        csi_mode: csi,
    })
}
