//! Assumption-free reference solver.
//!
//! Enumerates a joint grid over every candidate's power axis, prices each
//! cell at the earliest feasible burst length, then polishes the best
//! support sets in the continuous domain. Nothing here reuses the line
//! search from `optimizer`: single-station polish runs in the power
//! domain with the burst length implied by the rate constraint, so the
//! two solvers agree only if both are right.
//!
//! With the rate constraint active, the burst length implied by a power
//! vector is `t(S) = (T r / W) / log2(1 + S / (I + N))`, and the energy
//! above the idle floor is the on-slope of the active set times that
//! length. Shorter-than-implied bursts are infeasible and longer ones
//! cost more, so `t(S)` is the only length worth pricing.

use crate::error::SimError;
use crate::power::{
    frame_energy, idle_floor_j, pa_consumption, Allocation, BsProfile, EnergyReport, PaModel,
    UeProfile,
};
use crate::scenario::{received_signal_power, CsiMode, DemandSpec, Drop};
use crate::optimizer::golden_min;

/// Grid resolution of the reference solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleGrids {
    /// Nonzero power levels per station, log-spaced over ten decades up
    /// to the ceiling. Zero is always included as an extra level.
    pub power_points: usize,
    /// Burst-length levels, uniform fractions of the frame.
    pub t_points: usize,
}

impl Default for OracleGrids {
    fn default() -> Self {
        OracleGrids {
            power_points: 40,
            t_points: 200,
        }
    }
}

/// Best allocation the reference solver found.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutcome {
    pub allocation: Allocation,
    pub energy: EnergyReport,
    /// Energy above the all-idle floor, joules.
    pub incremental_j: f64,
    /// Candidate slots transmitting strictly positive power.
    pub active_bs: Vec<usize>,
    /// Cheapest grid cell with two or more active stations, joules above
    /// the floor; `None` if no such cell was feasible.
    pub best_multi_active_j: Option<f64>,
}

struct Problem<'a> {
    drop: &'a Drop,
    demand: &'a DemandSpec,
    profiles: &'a [BsProfile],
    model: PaModel,
    csi: CsiMode,
    /// T r / W: the bit load normalized by bandwidth, seconds.
    a: f64,
    n_if: f64,
    delta_ue: f64,
}

impl Problem<'_> {
    /// Burst length implied by received signal power `s`, or None when
    /// even the whole frame cannot carry the demand.
    fn implied_t(&self, s: f64) -> Option<f64> {
        if s <= 0.0 {
            return None;
        }
        let t = self.a / (1.0 + s / self.n_if).log2();
        let frame = self.demand.frame_s;
        if t <= frame {
            Some(t)
        } else if t <= frame * (1.0 + 1e-9) {
            Some(frame)
        } else {
            None
        }
    }

    /// Power drawn above idle while transmitting, watts. Only strictly
    /// positive powers count as active.
    fn on_slope(&self, powers: &[f64]) -> Result<f64, SimError> {
        let r = self.demand.r_dl_bps;
        let mut slope = self.delta_ue;
        for (p, prof) in powers.iter().zip(self.profiles) {
            if *p > 0.0 {
                slope += pa_consumption(*p, prof, self.model)?
                    + prof.eps_dyn_w_per_bps * r
                    + prof.p_base_w
                    - prof.p_idle_w;
            }
        }
        Ok(slope)
    }

    fn signal(&self, powers: &[f64]) -> Result<f64, SimError> {
        received_signal_power(powers, &self.drop.channels, self.csi)
    }

    /// Price a power vector at its implied burst length.
    fn price(&self, powers: &[f64]) -> Result<Option<(f64, f64)>, SimError> {
        match self.implied_t(self.signal(powers)?) {
            Some(t) => Ok(Some((self.on_slope(powers)? * t, t))),
            None => Ok(None),
        }
    }
}

fn log_grid(p_max: f64, points: usize) -> Vec<f64> {
    let lo = p_max * 1e-10;
    (0..points)
        .map(|j| {
            if j == points - 1 {
                p_max
            } else {
                lo * (p_max / lo).powf(j as f64 / (points - 1) as f64)
            }
        })
        .collect()
}

/// Continuous single-station polish in the power domain: grid plus golden
/// section over the feasible interval, with the burst length implied.
fn polish_singleton(prob: &Problem, m: usize) -> Result<Option<(f64, f64, f64)>, SimError> {
    let g = prob.drop.channels[m].gain_pow();
    if g <= 0.0 {
        return Ok(None);
    }
    let p_max = prob.profiles[m].p_max_w;
    // Smallest power that fits the frame.
    let frame = prob.demand.frame_s;
    let s_req = prob.n_if * ((prob.a / frame).exp2() - 1.0);
    let mut p_lo = s_req / g;
    if p_lo > p_max {
        if p_lo <= p_max * (1.0 + 1e-9) {
            p_lo = p_max;
        } else {
            return Ok(None);
        }
    }

    let eval = |p: f64| -> f64 {
        let t = match prob.implied_t(p * g) {
            Some(t) => t,
            None => return f64::INFINITY,
        };
        let prof = &prob.profiles[m];
        let psi = match pa_consumption(p.min(p_max), prof, prob.model) {
            Ok(v) => v,
            Err(_) => return f64::INFINITY,
        };
        let r = prob.demand.r_dl_bps;
        (psi + prof.eps_dyn_w_per_bps * r + prof.p_base_w - prof.p_idle_w + prob.delta_ue) * t
    };

    const POINTS: usize = 256;
    let ratio = p_max / p_lo;
    let mut grid = Vec::with_capacity(POINTS);
    for j in 0..POINTS {
        let p = if j == POINTS - 1 {
            p_max
        } else {
            p_lo * ratio.powf(j as f64 / (POINTS - 1) as f64)
        };
        grid.push(p);
    }
    let mut best_j = 0usize;
    let mut best_e = f64::INFINITY;
    for (j, &p) in grid.iter().enumerate() {
        let e = eval(p);
        if e < best_e {
            best_e = e;
            best_j = j;
        }
    }
    if !best_e.is_finite() {
        return Ok(None);
    }
    let a = grid[best_j.saturating_sub(1)];
    let b = grid[(best_j + 1).min(POINTS - 1)];
    let (p_ref, e_ref) = golden_min(eval, a, b, 60);
    let (p_star, e_star) = if e_ref < best_e {
        (p_ref, e_ref)
    } else {
        (grid[best_j], best_e)
    };
    let t_star = prob.implied_t(p_star * g).unwrap_or(prob.demand.frame_s);
    Ok(Some((p_star, t_star, e_star)))
}

/// Coordinate descent over the powers of a fixed multi-station support,
/// burst length implied throughout. Zero stays available to a coordinate
/// whenever the rest of the support can carry the demand alone.
fn polish_support(
    prob: &Problem,
    support: &[usize],
    seed: &[f64],
) -> Result<Option<(Vec<f64>, f64, f64)>, SimError> {
    let mut powers = seed.to_vec();
    let mut best = match prob.price(&powers)? {
        Some((e, _)) => e,
        None => return Ok(None),
    };
    let frame = prob.demand.frame_s;
    let s_req = prob.n_if * ((prob.a / frame).exp2() - 1.0);

    for _ in 0..60 {
        let mut improved = false;
        for &m in support {
            let p_max = prob.profiles[m].p_max_w;
            // Feasibility floor for this coordinate given the others.
            let p_lo = match prob.csi {
                CsiMode::LongTerm => {
                    let mut s_other = 0.0;
                    for (k, p) in powers.iter().enumerate() {
                        if k != m {
                            s_other += p * prob.drop.channels[k].gain_pow();
                        }
                    }
                    let g = prob.drop.channels[m].gain_pow();
                    if g <= 0.0 {
                        continue;
                    }
                    ((s_req - s_other) / g).max(0.0)
                }
                CsiMode::ShortTerm => {
                    let mut amp_other = 0.0;
                    for (k, p) in powers.iter().enumerate() {
                        if k != m {
                            amp_other += p.sqrt() * prob.drop.channels[k].gain_amp();
                        }
                    }
                    let a_m = prob.drop.channels[m].gain_amp();
                    if a_m <= 0.0 {
                        continue;
                    }
                    let need = (s_req.sqrt() - amp_other) / a_m;
                    if need <= 0.0 {
                        0.0
                    } else {
                        need * need
                    }
                }
            };
            if p_lo > p_max * (1.0 + 1e-9) {
                continue;
            }

            let eval_at = |p: f64| -> Result<f64, SimError> {
                let mut trial = powers.clone();
                trial[m] = p.min(p_max);
                Ok(match prob.price(&trial)? {
                    Some((e, _)) => e,
                    None => f64::INFINITY,
                })
            };

            let lo = p_lo.max(p_max * 1e-12).min(p_max);
            const POINTS: usize = 64;
            let ratio = p_max / lo;
            let mut best_p = powers[m];
            let mut best_here = best;
            let mut best_j = None;
            let mut grid = Vec::with_capacity(POINTS);
            for j in 0..POINTS {
                let p = if j == POINTS - 1 {
                    p_max
                } else {
                    lo * ratio.powf(j as f64 / (POINTS - 1) as f64)
                };
                grid.push(p);
                let e = eval_at(p)?;
                if e < best_here {
                    best_here = e;
                    best_p = p;
                    best_j = Some(j);
                }
            }
            if let Some(j) = best_j {
                let a = grid[j.saturating_sub(1)];
                let b = grid[(j + 1).min(POINTS - 1)];
                let (p_ref, e_ref) = golden_min(
                    |p| match eval_at(p) {
                        Ok(e) => e,
                        Err(_) => f64::INFINITY,
                    },
                    a,
                    b,
                    40,
                );
                if e_ref < best_here {
                    best_here = e_ref;
                    best_p = p_ref;
                }
            }
            // Dropping the coordinate removes its circuit delta entirely;
            // prefer zero on ties.
            if p_lo <= 0.0 {
                let e0 = eval_at(0.0)?;
                if e0 <= best_here {
                    best_here = e0;
                    best_p = 0.0;
                }
            }
            if best_here < best * (1.0 - 1e-14) || (best_p == 0.0 && powers[m] > 0.0 && best_here <= best) {
                powers[m] = best_p.min(p_max);
                best = best_here;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }

    match prob.price(&powers)? {
        Some((e, t)) => Ok(Some((powers, t, e))),
        None => Ok(None),
    }
}

/// Exhaustive reference solve. Returns the cheapest allocation found over
/// the joint grid and its continuous polish, pricing every candidate
/// power vector at the burst length the rate constraint implies.
pub fn brute_force_oracle(
    drop: &Drop,
    demand: &DemandSpec,
    profiles: &[BsProfile],
    ue: &UeProfile,
    model: PaModel,
    csi: CsiMode,
    grids: &OracleGrids,
) -> Result<OracleOutcome, SimError> {
    if drop.channels.len() != profiles.len() {
        return Err(SimError::LengthMismatch {
            powers: profiles.len(),
            channels: drop.channels.len(),
        });
    }
    let m_count = profiles.len();
    if m_count == 0 {
        return Err(SimError::NoFeasibleCandidate);
    }
    if grids.power_points < 2 {
        return Err(SimError::BadParameter {
            what: "power_points",
            requirement: "at least 2",
            value: grids.power_points as f64,
        });
    }
    if grids.t_points < 1 {
        return Err(SimError::BadParameter {
            what: "t_points",
            requirement: "at least 1",
            value: grids.t_points as f64,
        });
    }
    let levels = grids.power_points + 1;
    let combos = (levels as f64).powi(m_count as i32);
    if combos > 3e6 {
        return Err(SimError::BadParameter {
            what: "candidate count",
            requirement: "power grid product at most 3e6 cells",
            value: combos,
        });
    }
    for p in profiles {
        p.validate()?;
    }
    ue.validate()?;

    let r = demand.r_dl_bps;
    let prob = Problem {
        drop,
        demand,
        profiles,
        model,
        csi,
        a: demand.frame_s * demand.required_se(),
        n_if: demand.noise_plus_interference_w(),
        delta_ue: ue.eps_dyn_w_per_bps * r + ue.p_base_w - ue.p_idle_w,
    };

    let axes: Vec<Vec<f64>> = profiles
        .iter()
        .map(|p| log_grid(p.p_max_w, grids.power_points))
        .collect();

    // Stage one: every grid cell, priced at the first feasible burst
    // level at or after the implied length.
    let frame = demand.frame_s;
    let tp = grids.t_points as f64;
    let mut digits = vec![0usize; m_count];
    let mut powers = vec![0.0f64; m_count];
    let mut best_grid: Option<(f64, Vec<f64>, f64)> = None;
    let mut best_per_support: Vec<Option<(f64, Vec<f64>)>> = vec![None; 1 << m_count];
    let mut best_multi: Option<f64> = None;
    'combos: loop {
        let mut mask = 0usize;
        for (m, &d) in digits.iter().enumerate() {
            powers[m] = if d == 0 { 0.0 } else { axes[m][d - 1] };
            if d > 0 {
                mask |= 1 << m;
            }
        }
        if mask != 0 {
            if let Some(t_implied) = prob.implied_t(prob.signal(&powers)?) {
                let mut k = (t_implied / frame * tp).ceil();
                if k * frame / tp < t_implied {
                    k += 1.0;
                }
                if k < 1.0 {
                    k = 1.0;
                }
                if k <= tp {
                    let t = frame * k / tp;
                    let e = prob.on_slope(&powers)? * t;
                    if best_grid.as_ref().map_or(true, |(eb, _, _)| e < *eb) {
                        best_grid = Some((e, powers.clone(), t));
                    }
                    if best_per_support[mask]
                        .as_ref()
                        .map_or(true, |(eb, _)| e < *eb)
                    {
                        best_per_support[mask] = Some((e, powers.clone()));
                    }
                    if mask.count_ones() >= 2 && best_multi.map_or(true, |eb| e < eb) {
                        best_multi = Some(e);
                    }
                }
            }
        }
        for m in 0..m_count {
            digits[m] += 1;
            if digits[m] < levels {
                continue 'combos;
            }
            digits[m] = 0;
        }
        break;
    }

    // Stage two: continuous polish. Singletons always; multi-station
    // supports from their best grid seed.
    let mut best: Option<(f64, Vec<f64>, f64)> = best_grid;
    for m in 0..m_count {
        if let Some((p, t, e)) = polish_singleton(&prob, m)? {
            if best.as_ref().map_or(true, |(eb, _, _)| e < *eb) {
                let mut pv = vec![0.0; m_count];
                pv[m] = p;
                best = Some((e, pv, t));
            }
        }
    }
    for mask in 1usize..(1 << m_count) {
        if mask.count_ones() < 2 {
            continue;
        }
        if let Some((_, seed)) = &best_per_support[mask] {
            let support: Vec<usize> = (0..m_count).filter(|m| mask & (1 << m) != 0).collect();
            if let Some((pv, t, e)) = polish_support(&prob, &support, seed)? {
                if best.as_ref().map_or(true, |(eb, _, _)| e < *eb) {
                    best = Some((e, pv, t));
                }
            }
        }
    }

    let (incremental_j, powers_w, t_s) = best.ok_or(SimError::NoFeasibleCandidate)?;
    let active_bs: Vec<usize> = powers_w
        .iter()
        .enumerate()
        .filter(|(_, p)| **p > 0.0)
        .map(|(m, _)| m)
        .collect();
    let allocation = Allocation { powers_w, t_s };
    let energy = frame_energy(&allocation, demand, profiles, ue, model)?;
    debug_assert!(
        (energy.total_j - idle_floor_j(demand.frame_s, profiles, ue) - incremental_j).abs()
            <= 1e-9 * energy.total_j
    );
    Ok(OracleOutcome {
        allocation,
        energy,
        incremental_j,
        active_bs,
        best_multi_active_j: best_multi,
    })
}
