//! Power pricing and frame energy accounting.
//!
//! A transmitting station draws amplifier power plus circuit power; the
//! circuit part has a rate-proportional dynamic term and a static term.
//! Stations that stay silent draw an idle floor for the whole frame; the
//! transmitting station falls back to that floor once the burst ends. The
//! user draws a mirrored receive-side profile.
//!
//! Amplifier models for radiated power `p`:
//!
//! * `Tpa`: `psi(p) = sqrt(p * p_max) / eta_max`. An amplifier whose
//!   efficiency degrades with back-off as `eta_max * sqrt(p / p_max)`, so
//!   consumption follows a square-root law; at `p = p_max` it draws
//!   `p_max / eta_max`.
//! * `Ipa`: `psi(p) = p / eta_max`. Fixed-efficiency reference; never
//!   draws more than `Tpa` for the same `p` within the operating range.

use crate::error::SimError;
use crate::scenario::DemandSpec;
use crate::units::dbm_to_watts;

/// Transmit-side consumption profile of one station.
#[derive(Debug, Clone, PartialEq)]
pub struct BsProfile {
    /// Amplifier operating ceiling, watts radiated.
    pub p_max_w: f64,
    /// Peak amplifier efficiency, dimensionless in (0, 1].
    pub eta_max: f64,
    /// Static circuit power while transmitting, watts.
    pub p_base_w: f64,
    /// Idle floor, watts.
    pub p_idle_w: f64,
    /// Rate-proportional circuit power, W per bit/s.
    pub eps_dyn_w_per_bps: f64,
}

impl Default for BsProfile {
    /// 46 dBm ceiling, 35% peak efficiency, 50 mW static, 30 mW idle,
    /// 5 mW per Mbit/s dynamic.
    fn default() -> Self {
        BsProfile {
            p_max_w: dbm_to_watts(46.0),
            eta_max: 0.35,
            p_base_w: 50e-3,
            p_idle_w: 30e-3,
            eps_dyn_w_per_bps: 5e-9,
        }
    }
}

/// Receive-side consumption profile of the user.
#[derive(Debug, Clone, PartialEq)]
pub struct UeProfile {
    /// Static circuit power while receiving, watts.
    pub p_base_w: f64,
    /// Idle floor, watts.
    pub p_idle_w: f64,
    /// Rate-proportional circuit power, W per bit/s.
    pub eps_dyn_w_per_bps: f64,
}

impl Default for UeProfile {
    /// 20 mW static, 10 mW idle, 2 mW per Mbit/s dynamic.
    fn default() -> Self {
        UeProfile {
            p_base_w: 20e-3,
            p_idle_w: 10e-3,
            eps_dyn_w_per_bps: 2e-9,
        }
    }
}

fn check_nonneg(what: &'static str, v: f64) -> Result<(), SimError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(SimError::BadParameter {
            what,
            requirement: "nonnegative and finite",
            value: v,
        })
    }
}

impl BsProfile {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.p_max_w.is_finite() && self.p_max_w > 0.0) {
            return Err(SimError::BadParameter {
                what: "p_max_w",
                requirement: "positive and finite",
                value: self.p_max_w,
            });
        }
        if !(self.eta_max > 0.0 && self.eta_max <= 1.0) {
            return Err(SimError::BadParameter {
                what: "eta_max",
                requirement: "in (0, 1]",
                value: self.eta_max,
            });
        }
        check_nonneg("p_base_w", self.p_base_w)?;
        check_nonneg("p_idle_w", self.p_idle_w)?;
        check_nonneg("eps_dyn_w_per_bps", self.eps_dyn_w_per_bps)
    }
}

impl UeProfile {
    pub fn validate(&self) -> Result<(), SimError> {
        check_nonneg("ue p_base_w", self.p_base_w)?;
        check_nonneg("ue p_idle_w", self.p_idle_w)?;
        check_nonneg("ue eps_dyn_w_per_bps", self.eps_dyn_w_per_bps)
    }
}

/// Amplifier consumption law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PaModel {
    /// Square-root back-off law.
    Tpa,
    /// Ideal linear law.
    Ipa,
}

/// Amplifier power drawn to radiate `p_w`, watts.
pub fn pa_consumption(p_w: f64, profile: &BsProfile, model: PaModel) -> Result<f64, SimError> {
    profile.validate()?;
    if !p_w.is_finite() || p_w < 0.0 || p_w > profile.p_max_w {
        return Err(SimError::PowerOutOfRange {
            p_w,
            p_max_w: profile.p_max_w,
        });
    }
    Ok(match model {
        PaModel::Tpa => (p_w * profile.p_max_w).sqrt() / profile.eta_max,
        PaModel::Ipa => p_w / profile.eta_max,
    })
}

/// Total draw of a transmitting station: amplifier plus dynamic plus
/// static circuit power, watts.
pub fn tx_power(
    p_w: f64,
    r_bps: f64,
    profile: &BsProfile,
    model: PaModel,
) -> Result<f64, SimError> {
    check_nonneg("r_bps", r_bps)?;
    Ok(pa_consumption(p_w, profile, model)? + profile.eps_dyn_w_per_bps * r_bps + profile.p_base_w)
}

/// Total draw of the receiving user, watts.
pub fn rx_power(r_bps: f64, ue: &UeProfile) -> f64 {
    ue.eps_dyn_w_per_bps * r_bps + ue.p_base_w
}

/// One frame decision: per-candidate radiated powers and the burst length.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    /// Radiated power per candidate, watts. Zero means silent.
    pub powers_w: Vec<f64>,
    /// Burst length, seconds, within `[0, T]`.
    pub t_s: f64,
}

/// Frame energy split by origin, joules. `total_j` is the exact sum of the
/// five components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    /// Amplifier energy of active stations.
    pub pa_j: f64,
    /// Rate-proportional circuit energy of active stations.
    pub dyn_circuit_j: f64,
    /// Static circuit energy of active stations during the burst.
    pub static_circuit_j: f64,
    /// Station idle energy: silent stations all frame, active ones after
    /// the burst.
    pub idle_j: f64,
    /// User energy, receive and idle parts together.
    pub ue_j: f64,
    pub total_j: f64,
}

/// Energy drawn by every candidate station and the user over one frame.
///
/// A station is active iff its power is strictly positive. Active station
/// `m` contributes `tx_power_m * t + p_idle_m * (T - t)`; a silent one
/// contributes `p_idle_m * T`; the user contributes
/// `rx_power * t + p_idle_u * (T - t)`.
pub fn frame_energy(
    alloc: &Allocation,
    demand: &DemandSpec,
    profiles: &[BsProfile],
    ue: &UeProfile,
    model: PaModel,
) -> Result<EnergyReport, SimError> {
    if alloc.powers_w.len() != profiles.len() {
        return Err(SimError::LengthMismatch {
            powers: alloc.powers_w.len(),
            channels: profiles.len(),
        });
    }
    let t = alloc.t_s;
    let frame = demand.frame_s;
    if !t.is_finite() || t < 0.0 || t > frame {
        return Err(SimError::BadDuration { t_s: t, frame_s: frame });
    }
    ue.validate()?;

    let r = demand.r_dl_bps;
    let mut pa_j = 0.0;
    let mut dyn_circuit_j = 0.0;
    let mut static_circuit_j = 0.0;
    let mut idle_j = 0.0;
    for (p, prof) in alloc.powers_w.iter().zip(profiles) {
        if *p > 0.0 {
            pa_j += pa_consumption(*p, prof, model)? * t;
            dyn_circuit_j += prof.eps_dyn_w_per_bps * r * t;
            static_circuit_j += prof.p_base_w * t;
            idle_j += prof.p_idle_w * (frame - t);
        } else {
            if !p.is_finite() || *p < 0.0 {
                return Err(SimError::PowerOutOfRange {
                    p_w: *p,
                    p_max_w: prof.p_max_w,
                });
            }
            prof.validate()?;
            idle_j += prof.p_idle_w * frame;
        }
    }
    let ue_j = rx_power(r, ue) * t + ue.p_idle_w * (frame - t);
    let total_j = pa_j + dyn_circuit_j + static_circuit_j + idle_j + ue_j;
    Ok(EnergyReport {
        pa_j,
        dyn_circuit_j,
        static_circuit_j,
        idle_j,
        ue_j,
        total_j,
    })
}

/// Energy floor of a frame nobody uses: every candidate and the user idle
/// for the whole frame, joules.
pub fn idle_floor_j(frame_s: f64, profiles: &[BsProfile], ue: &UeProfile) -> f64 {
    let bs: f64 = profiles.iter().map(|p| p.p_idle_w).sum();
    (bs + ue.p_idle_w) * frame_s
}

/// Frame energy above the all-idle floor, joules.
///
/// Collapses to `sum_active (psi(p_m) + eps_m r + p_base_m - p_idle_m) t
/// + (eps_u r + p_base_u - p_idle_u) t`: only the burst matters, every
/// full-frame idle constant cancels.
pub fn incremental_energy(
    alloc: &Allocation,
    demand: &DemandSpec,
    profiles: &[BsProfile],
    ue: &UeProfile,
    model: PaModel,
) -> Result<f64, SimError> {
    let report = frame_energy(alloc, demand, profiles, ue, model)?;
    Ok(report.total_j - idle_floor_j(demand.frame_s, profiles, ue))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::DemandSpec;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn demand(r_bps: f64) -> DemandSpec {
        DemandSpec::new(r_bps, 0.01, 1e7, 1e-20, 0.0).unwrap()
    }

    #[test]
    fn pa_reference_values() {
        let prof = BsProfile::default();
        assert_eq!(pa_consumption(0.0, &prof, PaModel::Tpa).unwrap(), 0.0);
        assert_eq!(pa_consumption(0.0, &prof, PaModel::Ipa).unwrap(), 0.0);
        // Full drive of the default profile: p_max / eta = 39.8107/0.35.
        assert_relative_eq!(
            pa_consumption(prof.p_max_w, &prof, PaModel::Tpa).unwrap(),
            113.7449,
            max_relative = 1e-6
        );
        assert_relative_eq!(
            pa_consumption(prof.p_max_w, &prof, PaModel::Ipa).unwrap(),
            113.7449,
            max_relative = 1e-6
        );
        // Quarter drive under the square-root law costs half of full drive.
        assert_relative_eq!(
            pa_consumption(prof.p_max_w / 4.0, &prof, PaModel::Tpa).unwrap(),
            pa_consumption(prof.p_max_w, &prof, PaModel::Tpa).unwrap() / 2.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            pa_consumption(prof.p_max_w / 4.0, &prof, PaModel::Ipa).unwrap(),
            prof.p_max_w / 4.0 / prof.eta_max,
            max_relative = 1e-12
        );
    }

    #[test]
    fn pa_rejects_out_of_range() {
        let prof = BsProfile::default();
        assert!(matches!(
            pa_consumption(-1e-9, &prof, PaModel::Tpa),
            Err(SimError::PowerOutOfRange { .. })
        ));
        assert!(matches!(
            pa_consumption(prof.p_max_w * 1.001, &prof, PaModel::Tpa),
            Err(SimError::PowerOutOfRange { .. })
        ));
        assert!(pa_consumption(f64::NAN, &prof, PaModel::Ipa).is_err());
    }

    proptest! {
        #[test]
        fn linear_law_never_exceeds_sqrt_law(frac in 0.0f64..=1.0) {
            let prof = BsProfile::default();
            let p = frac * prof.p_max_w;
            let tpa = pa_consumption(p, &prof, PaModel::Tpa).unwrap();
            let ipa = pa_consumption(p, &prof, PaModel::Ipa).unwrap();
            prop_assert!(ipa <= tpa * (1.0 + 1e-12));
        }
    }

    #[test]
    fn tx_rx_reference_values() {
        let prof = BsProfile::default();
        let ue = UeProfile::default();
        // Silent amplifier, 10 Mbit/s: 5e-9*1e7 + 0.05 = 0.1 W.
        assert_relative_eq!(
            tx_power(0.0, 1e7, &prof, PaModel::Tpa).unwrap(),
            0.1,
            max_relative = 1e-12
        );
        // User at 10 Mbit/s: 2e-9*1e7 + 0.02 = 0.04 W.
        assert_relative_eq!(rx_power(1e7, &ue), 0.04, max_relative = 1e-12);
        assert_relative_eq!(rx_power(0.0, &ue), 0.02, max_relative = 1e-12);
    }

    #[test]
    fn all_idle_frame_costs_the_floor() {
        let profiles = vec![BsProfile::default(); 3];
        let ue = UeProfile::default();
        let d = demand(1e7);
        let alloc = Allocation {
            powers_w: vec![0.0, 0.0, 0.0],
            t_s: 0.0,
        };
        let rep = frame_energy(&alloc, &d, &profiles, &ue, PaModel::Tpa).unwrap();
        // (3*30 + 10) mW for 10 ms -> 1 mJ.
        assert_relative_eq!(rep.total_j, 1e-3, max_relative = 1e-12);
        assert_eq!(rep.pa_j, 0.0);
        assert_eq!(rep.dyn_circuit_j, 0.0);
        assert_eq!(rep.static_circuit_j, 0.0);
        assert_relative_eq!(rep.total_j, idle_floor_j(d.frame_s, &profiles, &ue));
        assert_relative_eq!(
            incremental_energy(&alloc, &d, &profiles, &ue, PaModel::Tpa).unwrap(),
            0.0,
            epsilon = 1e-18
        );
    }

    #[test]
    fn zero_power_with_positive_burst_still_idles() {
        // The activity indicator keys on p > 0, not on t.
        let profiles = vec![BsProfile::default()];
        let ue = UeProfile::default();
        let d = demand(1e7);
        let alloc = Allocation {
            powers_w: vec![0.0],
            t_s: 0.005,
        };
        let rep = frame_energy(&alloc, &d, &profiles, &ue, PaModel::Tpa).unwrap();
        assert_eq!(rep.pa_j, 0.0);
        assert_eq!(rep.static_circuit_j, 0.0);
        // Station idles all frame; only the user pays for the burst.
        assert_relative_eq!(rep.idle_j, 30e-3 * 0.01, max_relative = 1e-12);
        assert_relative_eq!(
            rep.ue_j,
            0.04 * 0.005 + 0.01 * 0.005,
            max_relative = 1e-12
        );
    }

    #[test]
    fn single_station_frame_assembles_from_parts() {
        let profiles = vec![BsProfile::default(), BsProfile::default()];
        let ue = UeProfile::default();
        let d = demand(1e7);
        let p = 2.0;
        let t = 0.004;
        let alloc = Allocation {
            powers_w: vec![p, 0.0],
            t_s: t,
        };
        let rep = frame_energy(&alloc, &d, &profiles, &ue, PaModel::Tpa).unwrap();
        let prof = &profiles[0];
        assert_relative_eq!(
            rep.pa_j,
            pa_consumption(p, prof, PaModel::Tpa).unwrap() * t,
            max_relative = 1e-12
        );
        assert_relative_eq!(rep.dyn_circuit_j, 5e-9 * 1e7 * t, max_relative = 1e-12);
        assert_relative_eq!(rep.static_circuit_j, 0.05 * t, max_relative = 1e-12);
        assert_relative_eq!(
            rep.idle_j,
            0.03 * (0.01 - t) + 0.03 * 0.01,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            rep.ue_j,
            rx_power(1e7, &ue) * t + 0.01 * (0.01 - t),
            max_relative = 1e-12
        );
        let sum = rep.pa_j + rep.dyn_circuit_j + rep.static_circuit_j + rep.idle_j + rep.ue_j;
        assert_eq!(rep.total_j, sum);
    }

    #[test]
    fn frame_energy_is_affine_in_duration() {
        let profiles = vec![BsProfile::default(), BsProfile::default()];
        let ue = UeProfile::default();
        let d = demand(2e7);
        let at = |t: f64| {
            frame_energy(
                &Allocation {
                    powers_w: vec![1.5, 3.0],
                    t_s: t,
                },
                &d,
                &profiles,
                &ue,
                PaModel::Tpa,
            )
            .unwrap()
            .total_j
        };
        let (a, m, b) = (at(0.002), at(0.005), at(0.008));
        assert_relative_eq!(m, (a + b) / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn incremental_energy_unit_case_equals_duration() {
        // Unit ceiling, unit efficiency, unit power, no circuit deltas:
        // the burst costs exactly t joules above the floor.
        let prof = BsProfile {
            p_max_w: 1.0,
            eta_max: 1.0,
            p_base_w: 0.5,
            p_idle_w: 0.5,
            eps_dyn_w_per_bps: 0.0,
        };
        let ue = UeProfile {
            p_base_w: 0.25,
            p_idle_w: 0.25,
            eps_dyn_w_per_bps: 0.0,
        };
        let d = demand(1e7);
        for &t in &[0.001, 0.0042, 0.01] {
            let inc = incremental_energy(
                &Allocation {
                    powers_w: vec![1.0],
                    t_s: t,
                },
                &d,
                &[prof.clone()],
                &ue,
                PaModel::Tpa,
            )
            .unwrap();
            assert_relative_eq!(inc, t, max_relative = 1e-9);
        }
    }

    proptest! {
        #[test]
        fn incremental_is_total_minus_floor(
            fracs in proptest::collection::vec(0.0f64..=1.0, 1..4),
            t_frac in 0.0f64..=1.0,
        ) {
            let profiles = vec![BsProfile::default(); fracs.len()];
            let ue = UeProfile::default();
            let d = demand(1.5e7);
            let alloc = Allocation {
                powers_w: fracs.iter().map(|f| f * profiles[0].p_max_w).collect(),
                t_s: t_frac * d.frame_s,
            };
            let rep = frame_energy(&alloc, &d, &profiles, &ue, PaModel::Ipa).unwrap();
            let inc = incremental_energy(&alloc, &d, &profiles, &ue, PaModel::Ipa).unwrap();
            let floor = idle_floor_j(d.frame_s, &profiles, &ue);
            prop_assert!((inc - (rep.total_j - floor)).abs() <= 1e-15);
            prop_assert!(rep.total_j >= floor * (1.0 - 1e-12));
        }

        #[test]
        fn frame_energy_monotone_in_power(p1 in 0.01f64..10.0, bump in 0.0f64..5.0) {
            let profiles = vec![BsProfile::default()];
            let ue = UeProfile::default();
            let d = demand(1e7);
            let e = |p: f64| {
                frame_energy(
                    &Allocation { powers_w: vec![p], t_s: 0.006 },
                    &d,
                    &profiles,
                    &ue,
                    PaModel::Tpa,
                )
                .unwrap()
                .total_j
            };
            prop_assert!(e(p1 + bump) >= e(p1) * (1.0 - 1e-12));
        }
    }

    #[test]
    fn frame_energy_validates_inputs() {
        let profiles = vec![BsProfile::default()];
        let ue = UeProfile::default();
        let d = demand(1e7);
        assert!(matches!(
            frame_energy(
                &Allocation { powers_w: vec![1.0, 2.0], t_s: 0.001 },
                &d,
                &profiles,
                &ue,
                PaModel::Tpa
            ),
            Err(SimError::LengthMismatch { .. })
        ));
        assert!(matches!(
            frame_energy(
                &Allocation { powers_w: vec![1.0], t_s: 0.011 },
                &d,
                &profiles,
                &ue,
                PaModel::Tpa
            ),
            Err(SimError::BadDuration { .. })
        ));
        assert!(frame_energy(
            &Allocation { powers_w: vec![-0.5], t_s: 0.001 },
            &d,
            &profiles,
            &ue,
            PaModel::Tpa
        )
        .is_err());
    }
}
