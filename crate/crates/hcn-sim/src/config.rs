//! TOML configuration in engineering units.
//!
//! Every field has a default, so an empty file resolves to the standard
//! parameter set: 10 MHz carrier, 10 ms frame, -174 dBm/Hz noise floor,
//! 46 dBm ceiling at 35% peak efficiency, 50/30 mW station and 20/10 mW
//! user circuit power, 5 and 2 mW/Mbps dynamic factors, stations at
//! 20/km^2 over a 300 m square. Quantities are written the way link
//! budgets quote them (dBm, MHz, ms, mW, mW/Mbps) and resolved to SI on
//! load.

use std::path::Path;

use serde::Deserialize;

use crate::error::SimError;
use crate::optimizer::{RssMetric, SchemeTag, SearchConfig};
use crate::oracle::OracleGrids;
use crate::power::{BsProfile, PaModel, UeProfile};
use crate::scenario::{CsiMode, DemandSpec, Geometry, InterferenceMode, SelectionRule};
use crate::sweep::{SweepContext, SweepSpec};
use crate::units::dbm_to_watts;

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct GeometrySection {
    area_side_m: f64,
    bs_density_per_km2: f64,
    ue_position_m: [f64; 2],
}

impl Default for GeometrySection {
    fn default() -> Self {
        GeometrySection {
            area_side_m: 300.0,
            bs_density_per_km2: 20.0,
            ue_position_m: [0.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RadioSection {
    bandwidth_mhz: f64,
    frame_ms: f64,
    noise_psd_dbm_per_hz: f64,
}

impl Default for RadioSection {
    fn default() -> Self {
        RadioSection {
            bandwidth_mhz: 10.0,
            frame_ms: 10.0,
            noise_psd_dbm_per_hz: -174.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DemandSection {
    rate_mbps: f64,
}

impl Default for DemandSection {
    fn default() -> Self {
        DemandSection { rate_mbps: 10.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum InterferenceModeName {
    Constant,
    Computed,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct InterferenceSection {
    mode: InterferenceModeName,
    /// Constant mode: received interference power. Omitted means none.
    power_dbm: Option<f64>,
    /// Computed mode: transmit power of out-of-cluster stations.
    tx_power_dbm: f64,
    /// Computed mode: fraction of the frame those stations transmit.
    activity_factor: f64,
}

impl Default for InterferenceSection {
    fn default() -> Self {
        InterferenceSection {
            mode: InterferenceModeName::Constant,
            power_dbm: None,
            tx_power_dbm: 46.0,
            activity_factor: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RuleName {
    KNearest,
    SnrThreshold,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CandidatesSection {
    rule: RuleName,
    k: usize,
    min_snr_db: f64,
    ref_power_dbm: f64,
}

impl Default for CandidatesSection {
    fn default() -> Self {
        CandidatesSection {
            rule: RuleName::KNearest,
            k: 3,
            min_snr_db: 0.0,
            ref_power_dbm: 46.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct BsSection {
    p_max_dbm: f64,
    eta_max: f64,
    p_base_mw: f64,
    p_idle_mw: f64,
    eps_dyn_mw_per_mbps: f64,
    /// Peak efficiency under the linear amplifier law, when it should
    /// differ from `eta_max`.
    ipa_eta: Option<f64>,
}

impl Default for BsSection {
    fn default() -> Self {
        BsSection {
            p_max_dbm: 46.0,
            eta_max: 0.35,
            p_base_mw: 50.0,
            p_idle_mw: 30.0,
            eps_dyn_mw_per_mbps: 5.0,
            ipa_eta: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct UeSection {
    p_base_mw: f64,
    p_idle_mw: f64,
    eps_dyn_mw_per_mbps: f64,
}

impl Default for UeSection {
    fn default() -> Self {
        UeSection {
            p_base_mw: 20.0,
            p_idle_mw: 10.0,
            eps_dyn_mw_per_mbps: 2.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SearchSection {
    t_grid_points: usize,
    refine_iters: usize,
    rate_tol_rel: f64,
    energy_tie_tol_rel: f64,
    t_min_floor_ms: f64,
}

impl Default for SearchSection {
    fn default() -> Self {
        let c = SearchConfig::default();
        SearchSection {
            t_grid_points: c.t_grid_points,
            refine_iters: c.refine_iters,
            rate_tol_rel: c.rate_tol_rel,
            energy_tie_tol_rel: c.energy_tie_tol_rel,
            t_min_floor_ms: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum SchemeName {
    ProposedPrecise,
    ProposedApprox,
    TraditionalMaxRss,
    AllAccessUniform,
    OracleBruteForce,
}

impl From<SchemeName> for SchemeTag {
    fn from(n: SchemeName) -> Self {
        match n {
            SchemeName::ProposedPrecise => SchemeTag::ProposedPrecise,
            SchemeName::ProposedApprox => SchemeTag::ProposedApprox,
            SchemeName::TraditionalMaxRss => SchemeTag::TraditionalMaxRss,
            SchemeName::AllAccessUniform => SchemeTag::AllAccessUniform,
            SchemeName::OracleBruteForce => SchemeTag::OracleBruteForce,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum CsiName {
    Long,
    Short,
}

impl From<CsiName> for CsiMode {
    fn from(n: CsiName) -> Self {
        match n {
            CsiName::Long => CsiMode::LongTerm,
            CsiName::Short => CsiMode::ShortTerm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum PaName {
    Tpa,
    Ipa,
}

impl From<PaName> for PaModel {
    fn from(n: PaName) -> Self {
        match n {
            PaName::Tpa => PaModel::Tpa,
            PaName::Ipa => PaModel::Ipa,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SweepSection {
    se_start: f64,
    se_stop: f64,
    se_step: f64,
    drops_per_point: usize,
    master_seed: u64,
    schemes: Vec<SchemeName>,
    csi: Vec<CsiName>,
    pa: Vec<PaName>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            se_start: 0.25,
            se_stop: 6.0,
            se_step: 0.25,
            drops_per_point: 1000,
            master_seed: 12345,
            schemes: vec![
                SchemeName::ProposedPrecise,
                SchemeName::ProposedApprox,
                SchemeName::TraditionalMaxRss,
                SchemeName::AllAccessUniform,
            ],
            csi: vec![CsiName::Long, CsiName::Short],
            pa: vec![PaName::Tpa, PaName::Ipa],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RssMetricName {
    GainPow,
    PmaxWeighted,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TraditionalSection {
    rss_metric: RssMetricName,
}

impl Default for TraditionalSection {
    fn default() -> Self {
        TraditionalSection {
            rss_metric: RssMetricName::GainPow,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct OutputSection {
    dir: String,
    svg: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: "out".to_string(),
            svg: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct OracleSection {
    power_points: usize,
    t_points: usize,
}

impl Default for OracleSection {
    fn default() -> Self {
        let g = OracleGrids::default();
        OracleSection {
            power_points: g.power_points,
            t_points: g.t_points,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    geometry: GeometrySection,
    radio: RadioSection,
    demand: DemandSection,
    interference: InterferenceSection,
    candidates: CandidatesSection,
    bs: BsSection,
    ue: UeSection,
    search: SearchSection,
    sweep: SweepSection,
    traditional: TraditionalSection,
    output: OutputSection,
    oracle: OracleSection,
}

/// Fully resolved run configuration in SI units.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub geometry: Geometry,
    pub rule: SelectionRule,
    pub interference: InterferenceMode,
    /// Demand at the configured single-solve rate.
    pub demand: DemandSpec,
    pub bs_profile: BsProfile,
    pub bs_profile_ipa: Option<BsProfile>,
    pub ue: UeProfile,
    pub search: SearchConfig,
    pub rss_metric: RssMetric,
    pub oracle_grids: OracleGrids,
    pub sweep: SweepSpec,
    pub output_dir: String,
    pub svg: bool,
}

impl RunConfig {
    pub fn sweep_context(&self) -> SweepContext {
        SweepContext {
            geometry: self.geometry.clone(),
            rule: self.rule.clone(),
            interference: self.interference.clone(),
            demand_template: self.demand.clone(),
            bs_profile: self.bs_profile.clone(),
            bs_profile_ipa: self.bs_profile_ipa.clone(),
            ue: self.ue.clone(),
            search: self.search.clone(),
            rss_metric: self.rss_metric,
            oracle_grids: self.oracle_grids,
        }
    }
}

fn se_axis(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, SimError> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(SimError::BadParameter {
            what: "se_step",
            requirement: "positive and finite",
            value: step,
        });
    }
    if !(start > 0.0 && stop >= start) {
        return Err(SimError::BadParameter {
            what: "se_start/se_stop",
            requirement: "0 < start <= stop",
            value: start,
        });
    }
    let n = ((stop - start) / step).round() as usize + 1;
    if n > 10_000 {
        return Err(SimError::BadParameter {
            what: "se axis",
            requirement: "at most 10000 points",
            value: n as f64,
        });
    }
    Ok((0..n)
        .map(|i| start + step * i as f64)
        .filter(|&se| se <= stop * (1.0 + 1e-12))
        .collect())
}

fn resolve(file: FileConfig) -> Result<RunConfig, SimError> {
    let geometry = Geometry {
        area_side_m: file.geometry.area_side_m,
        bs_density_per_km2: file.geometry.bs_density_per_km2,
        ue_position_m: file.geometry.ue_position_m,
    };
    geometry.validate()?;

    let bandwidth_hz = file.radio.bandwidth_mhz * 1e6;
    let frame_s = file.radio.frame_ms * 1e-3;
    let noise_psd = dbm_to_watts(file.radio.noise_psd_dbm_per_hz);
    let demand = DemandSpec::new(
        file.demand.rate_mbps * 1e6,
        frame_s,
        bandwidth_hz,
        noise_psd,
        0.0,
    )?;

    let interference = match file.interference.mode {
        InterferenceModeName::Constant => {
            InterferenceMode::Constant(file.interference.power_dbm.map_or(0.0, dbm_to_watts))
        }
        InterferenceModeName::Computed => InterferenceMode::Computed {
            tx_power_w: dbm_to_watts(file.interference.tx_power_dbm),
            activity_factor: file.interference.activity_factor,
        },
    };

    let rule = match file.candidates.rule {
        RuleName::KNearest => {
            if file.candidates.k == 0 {
                return Err(SimError::BadParameter {
                    what: "candidates.k",
                    requirement: "at least 1",
                    value: 0.0,
                });
            }
            SelectionRule::KNearest(file.candidates.k)
        }
        RuleName::SnrThreshold => SelectionRule::SnrThreshold {
            min_snr_db: file.candidates.min_snr_db,
            ref_power_w: dbm_to_watts(file.candidates.ref_power_dbm),
        },
    };

    let bs_profile = BsProfile {
        p_max_w: dbm_to_watts(file.bs.p_max_dbm),
        eta_max: file.bs.eta_max,
        p_base_w: file.bs.p_base_mw * 1e-3,
        p_idle_w: file.bs.p_idle_mw * 1e-3,
        eps_dyn_w_per_bps: file.bs.eps_dyn_mw_per_mbps * 1e-9,
    };
    bs_profile.validate()?;
    let bs_profile_ipa = match file.bs.ipa_eta {
        Some(eta) => {
            let p = BsProfile {
                eta_max: eta,
                ..bs_profile.clone()
            };
            p.validate()?;
            Some(p)
        }
        None => None,
    };

    let ue = UeProfile {
        p_base_w: file.ue.p_base_mw * 1e-3,
        p_idle_w: file.ue.p_idle_mw * 1e-3,
        eps_dyn_w_per_bps: file.ue.eps_dyn_mw_per_mbps * 1e-9,
    };
    ue.validate()?;

    let search = SearchConfig {
        t_grid_points: file.search.t_grid_points,
        refine_iters: file.search.refine_iters,
        rate_tol_rel: file.search.rate_tol_rel,
        energy_tie_tol_rel: file.search.energy_tie_tol_rel,
        t_min_floor_s: file.search.t_min_floor_ms * 1e-3,
    };
    if search.t_grid_points < 2 {
        return Err(SimError::BadParameter {
            what: "search.t_grid_points",
            requirement: "at least 2",
            value: search.t_grid_points as f64,
        });
    }

    let sweep = SweepSpec {
        se_points: se_axis(file.sweep.se_start, file.sweep.se_stop, file.sweep.se_step)?,
        drops_per_point: file.sweep.drops_per_point,
        master_seed: file.sweep.master_seed,
        schemes: file.sweep.schemes.iter().map(|&s| s.into()).collect(),
        csi_modes: file.sweep.csi.iter().map(|&c| c.into()).collect(),
        pa_models: file.sweep.pa.iter().map(|&p| p.into()).collect(),
    };
    sweep.validate()?;

    Ok(RunConfig {
        geometry,
        rule,
        interference,
        demand,
        bs_profile,
        bs_profile_ipa,
        ue,
        search,
        rss_metric: match file.traditional.rss_metric {
            RssMetricName::GainPow => RssMetric::GainPow,
            RssMetricName::PmaxWeighted => RssMetric::PmaxWeighted,
        },
        oracle_grids: OracleGrids {
            power_points: file.oracle.power_points,
            t_points: file.oracle.t_points,
        },
        sweep,
        output_dir: file.output.dir,
        svg: file.output.svg,
    })
}

/// Parse configuration text. An empty string yields the full default set.
pub fn parse_config(text: &str) -> Result<RunConfig, SimError> {
    let file: FileConfig =
        toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
    resolve(file)
}

/// Load and resolve a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig, SimError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SimError::Config(format!("{}: {}", path.display(), e)))?;
    parse_config(&text)
}
