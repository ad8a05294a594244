//! Monte Carlo sweeps over demanded spectral efficiency.
//!
//! Every configured scheme, channel-knowledge mode, and amplifier law is
//! priced on the same sequence of random drops (common random numbers),
//! so per-drop dominance relations survive into the means. Drops run in
//! parallel; results are collected in drop order and reduced by pairwise
//! summation, which makes every statistic bit-identical regardless of
//! how many worker threads were available.

use rayon::prelude::*;

use crate::error::SimError;
use crate::optimizer::{
    baseline_all_access, baseline_max_rss, select_bs_precise, solve_proposed_approx, RssMetric,
    SchemeTag, SearchConfig, SolveResult,
};
use crate::oracle::{brute_force_oracle, OracleGrids};
use crate::power::{BsProfile, PaModel, UeProfile};
use crate::scenario::{
    build_drop, CsiMode, DemandSpec, Geometry, InterferenceMode, SelectionRule,
};

/// Everything a sweep needs besides the axis itself.
#[derive(Debug, Clone)]
pub struct SweepContext {
    pub geometry: Geometry,
    pub rule: SelectionRule,
    pub interference: InterferenceMode,
    /// Demand whose rate is replaced point by point.
    pub demand_template: DemandSpec,
    /// Profile applied to every candidate station.
    pub bs_profile: BsProfile,
    /// Optional distinct profile under the linear amplifier law.
    pub bs_profile_ipa: Option<BsProfile>,
    pub ue: UeProfile,
    pub search: SearchConfig,
    pub rss_metric: RssMetric,
    pub oracle_grids: OracleGrids,
}

impl SweepContext {
    pub fn bs_profile_for(&self, model: PaModel) -> &BsProfile {
        match model {
            PaModel::Tpa => &self.bs_profile,
            PaModel::Ipa => self.bs_profile_ipa.as_ref().unwrap_or(&self.bs_profile),
        }
    }
}

/// The sweep axis and the scheme grid to price on it.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// Demanded spectral efficiencies, bit/s/Hz.
    pub se_points: Vec<f64>,
    pub drops_per_point: usize,
    pub master_seed: u64,
    pub schemes: Vec<SchemeTag>,
    pub csi_modes: Vec<CsiMode>,
    pub pa_models: Vec<PaModel>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.se_points.is_empty() {
            return Err(SimError::BadParameter {
                what: "se_points",
                requirement: "at least one point",
                value: 0.0,
            });
        }
        for &se in &self.se_points {
            if !se.is_finite() || se <= 0.0 {
                return Err(SimError::BadParameter {
                    what: "se_points",
                    requirement: "positive and finite",
                    value: se,
                });
            }
        }
        if self.drops_per_point == 0 {
            return Err(SimError::BadParameter {
                what: "drops_per_point",
                requirement: "at least 1",
                value: 0.0,
            });
        }
        if self.schemes.is_empty() || self.csi_modes.is_empty() || self.pa_models.is_empty() {
            return Err(SimError::BadParameter {
                what: "scheme grid",
                requirement: "schemes, csi modes, and amplifier laws all nonempty",
                value: 0.0,
            });
        }
        Ok(())
    }

    fn combos(&self) -> Vec<(PaModel, CsiMode, SchemeTag)> {
        let mut v = Vec::new();
        for &pa in &self.pa_models {
            for &csi in &self.csi_modes {
                for &scheme in &self.schemes {
                    v.push((pa, csi, scheme));
                }
            }
        }
        v
    }
}

/// One aggregated cell of the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub se: f64,
    pub scheme: SchemeTag,
    pub csi: CsiMode,
    pub pa: PaModel,
    /// Mean full-frame energy over feasible drops, joules. NaN when no
    /// drop was feasible.
    pub mean_energy_j: f64,
    /// Mean burst length over feasible drops, seconds. NaN likewise.
    pub mean_t_star_s: f64,
    pub infeasible_fraction: f64,
    pub drops_used: usize,
    pub drops_total: usize,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic per-drop seed. Chained rather than XOR-folded so that
/// swapping point and drop indices cannot collide.
pub fn drop_seed(master_seed: u64, point: usize, drop: usize, attempt: u32) -> u64 {
    let mut s = splitmix64(master_seed);
    s = splitmix64(s ^ point as u64);
    s = splitmix64(s ^ drop as u64);
    splitmix64(s ^ attempt as u64)
}

/// Order-fixed pairwise summation; associativity-stable and accurate.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => pairwise_sum(&xs[..n / 2]) + pairwise_sum(&xs[n / 2..]),
    }
}

const MAX_DROP_ATTEMPTS: u32 = 1000;

/// Build a drop for the context, redrawing on rejection. The attempt
/// counter is folded into the seed chain, so the result is a pure
/// function of `(master_seed, point, drop_idx)`.
pub fn build_drop_with_retries(
    ctx: &SweepContext,
    demand_at_rate: &DemandSpec,
    master_seed: u64,
    point: usize,
    drop_idx: usize,
) -> Result<(crate::scenario::Drop, DemandSpec), SimError> {
    for attempt in 0..MAX_DROP_ATTEMPTS {
        let seed = drop_seed(master_seed, point, drop_idx, attempt);
        match build_drop(
            &ctx.geometry,
            demand_at_rate,
            &ctx.rule,
            &ctx.interference,
            seed,
        ) {
            Ok(pair) => return Ok(pair),
            Err(SimError::DropRejected(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(SimError::DropRejected(format!(
        "no usable drop in {} attempts (point {}, drop {})",
        MAX_DROP_ATTEMPTS, point, drop_idx
    )))
}

/// Price one scheme on one drop, with candidate profiles taken from the
/// context for the requested amplifier law.
pub fn solve_with_scheme(
    ctx: &SweepContext,
    drop: &crate::scenario::Drop,
    demand: &DemandSpec,
    scheme: SchemeTag,
    csi: CsiMode,
    model: PaModel,
) -> Result<SolveResult, SimError> {
    let profiles = vec![ctx.bs_profile_for(model).clone(); drop.num_candidates()];
    run_scheme(scheme, drop, demand, &profiles, ctx, model, csi)
}

fn run_scheme(
    scheme: SchemeTag,
    drop: &crate::scenario::Drop,
    demand: &DemandSpec,
    profiles: &[BsProfile],
    ctx: &SweepContext,
    model: PaModel,
    csi: CsiMode,
) -> Result<SolveResult, SimError> {
    match scheme {
        SchemeTag::ProposedPrecise => {
            select_bs_precise(drop, demand, profiles, &ctx.ue, model, csi, &ctx.search)
        }
        SchemeTag::ProposedApprox => {
            solve_proposed_approx(drop, demand, profiles, &ctx.ue, model, csi)
        }
        SchemeTag::TraditionalMaxRss => baseline_max_rss(
            drop,
            demand,
            profiles,
            &ctx.ue,
            model,
            csi,
            &ctx.search,
            ctx.rss_metric,
        ),
        SchemeTag::AllAccessUniform => {
            baseline_all_access(drop, demand, profiles, &ctx.ue, model, csi, &ctx.search)
        }
        SchemeTag::OracleBruteForce => {
            let out = brute_force_oracle(
                drop,
                demand,
                profiles,
                &ctx.ue,
                model,
                csi,
                &ctx.oracle_grids,
            )?;
            Ok(SolveResult {
                chosen_bs: out.active_bs.first().copied(),
                power_w: out
                    .allocation
                    .powers_w
                    .iter()
                    .copied()
                    .fold(0.0, f64::max),
                t_star_s: out.allocation.t_s,
                energy: out.energy,
                scheme_tag: SchemeTag::OracleBruteForce,
                csi_mode: csi,
            })
        }
    }
}

/// Energy and burst length per combo for one drop; None marks an
/// infeasible demand under that combo.
type DropOutcomes = Vec<Option<(f64, f64)>>;

fn solve_one_drop(
    ctx: &SweepContext,
    combos: &[(PaModel, CsiMode, SchemeTag)],
    demand_at_rate: &DemandSpec,
    master_seed: u64,
    point: usize,
    drop_idx: usize,
) -> Result<DropOutcomes, SimError> {
    let (drop, demand) =
        build_drop_with_retries(ctx, demand_at_rate, master_seed, point, drop_idx)?;
    let mut out = Vec::with_capacity(combos.len());
    for &(pa, csi, scheme) in combos {
        match solve_with_scheme(ctx, &drop, &demand, scheme, csi, pa) {
            Ok(res) => out.push(Some((res.energy.total_j, res.t_star_s))),
            Err(e) if e.is_infeasible() => out.push(None),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Run the whole sweep. Rows come out grouped by spectral efficiency in
/// axis order, then by amplifier law, knowledge mode, and scheme in spec
/// order.
pub fn run_sweep(ctx: &SweepContext, spec: &SweepSpec) -> Result<Vec<SweepRow>, SimError> {
    spec.validate()?;
    ctx.geometry.validate()?;
    ctx.bs_profile.validate()?;
    if let Some(p) = &ctx.bs_profile_ipa {
        p.validate()?;
    }
    ctx.ue.validate()?;
    let combos = spec.combos();

    let mut rows = Vec::with_capacity(spec.se_points.len() * combos.len());
    for (point, &se) in spec.se_points.iter().enumerate() {
        let demand_at_rate = ctx
            .demand_template
            .with_rate(se * ctx.demand_template.bandwidth_hz)?;
        let per_drop: Vec<DropOutcomes> = (0..spec.drops_per_point)
            .into_par_iter()
            .map(|drop_idx| {
                solve_one_drop(ctx, &combos, &demand_at_rate, spec.master_seed, point, drop_idx)
            })
            .collect::<Result<Vec<_>, SimError>>()?;

        for (ci, &(pa, csi, scheme)) in combos.iter().enumerate() {
            let mut energies = Vec::with_capacity(per_drop.len());
            let mut durations = Vec::with_capacity(per_drop.len());
            for outcomes in &per_drop {
                if let Some((e, t)) = outcomes[ci] {
                    energies.push(e);
                    durations.push(t);
                }
            }
            let used = energies.len();
            let total = per_drop.len();
            let (mean_e, mean_t) = if used > 0 {
                (
                    pairwise_sum(&energies) / used as f64,
                    pairwise_sum(&durations) / used as f64,
                )
            } else {
                (f64::NAN, f64::NAN)
            };
            rows.push(SweepRow {
                se,
                scheme,
                csi,
                pa,
                mean_energy_j: mean_e,
                mean_t_star_s: mean_t,
                infeasible_fraction: (total - used) as f64 / total as f64,
                drops_used: used,
                drops_total: total,
            });
        }
    }
    Ok(rows)
}

/// One point of a burst-length curve.
#[derive(Debug, Clone, PartialEq)]
pub struct DurationPoint {
    pub se: f64,
    pub mean_t_s: f64,
    /// Burst fills the frame (up to rounding).
    pub saturated: bool,
}

/// Burst length against demanded spectral efficiency for rows the caller
/// already filtered down to one scheme, mode, and amplifier law.
pub fn duration_curve(rows: &[SweepRow], frame_s: f64) -> Vec<DurationPoint> {
    let mut pts: Vec<DurationPoint> = rows
        .iter()
        .map(|r| DurationPoint {
            se: r.se,
            mean_t_s: r.mean_t_star_s,
            saturated: r.mean_t_star_s >= frame_s * (1.0 - 1e-9),
        })
        .collect();
    pts.sort_by(|a, b| a.se.total_cmp(&b.se));
    pts
}

/// Amplifier-law comparison at one sweep cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PaComparePoint {
    pub se: f64,
    pub scheme: SchemeTag,
    pub csi: CsiMode,
    pub tpa_mean_j: f64,
    pub ipa_mean_j: f64,
    /// tpa / ipa; at least 1 whenever both laws share a profile.
    pub ratio: f64,
}

/// Pair sweep rows across the two amplifier laws. Cells present under
/// only one law are dropped. When both laws run the same profile the
/// linear law can never cost more, and a violation is reported as an
/// error rather than silently returned.
pub fn compare_pa_models(rows: &[SweepRow], shared_profile: bool) -> Result<Vec<PaComparePoint>, SimError> {
    let mut out = Vec::new();
    for r in rows.iter().filter(|r| r.pa == PaModel::Tpa) {
        let Some(mate) = rows.iter().find(|m| {
            m.pa == PaModel::Ipa && m.scheme == r.scheme && m.csi == r.csi && m.se == r.se
        }) else {
            continue;
        };
        if !(r.mean_energy_j.is_finite() && mate.mean_energy_j.is_finite()) {
            continue;
        }
        if shared_profile && mate.mean_energy_j > r.mean_energy_j * (1.0 + 1e-12) {
            return Err(SimError::BadParameter {
                what: "linear-law mean energy",
                requirement: "not above the square-root law on shared profiles",
                value: mate.mean_energy_j / r.mean_energy_j,
            });
        }
        out.push(PaComparePoint {
            se: r.se,
            scheme: r.scheme,
            csi: r.csi,
            tpa_mean_j: r.mean_energy_j,
            ipa_mean_j: mate.mean_energy_j,
            ratio: r.mean_energy_j / mate.mean_energy_j,
        });
    }
    Ok(out)
}
