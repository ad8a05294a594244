//! Drop generation and the downlink rate model.
//!
//! A drop is one random snapshot of the network around a fixed user: base
//! station positions from a homogeneous Poisson point process on a square,
//! per-station channel states (log-distance mean path loss times unit-mean
//! exponential Rayleigh power fading), and the subset of stations admitted
//! as transmission candidates. Everything is reproducible from a single
//! `u64` seed; one ChaCha stream per drop, consumed in a fixed order
//! (count, positions, fades).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp1, Poisson};

use crate::error::SimError;
use crate::units::db_to_linear;

/// Path-loss distance floor. The log model diverges as d -> 0; distances
/// below this are treated as this.
pub const D_MIN_M: f64 = 1.0;

/// Mean path loss in dB at distance `d_m` meters: 103.8 + 21 log10(d).
pub fn path_loss_db(d_m: f64) -> Result<f64, SimError> {
    if !d_m.is_finite() || d_m <= 0.0 {
        return Err(SimError::BadDistance(d_m));
    }
    Ok(103.8 + 21.0 * d_m.max(D_MIN_M).log10())
}

/// Square deployment area centered on the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    /// Side of the square, meters.
    pub area_side_m: f64,
    /// Station density, 1/km^2.
    pub bs_density_per_km2: f64,
    /// User position, meters.
    pub ue_position_m: [f64; 2],
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry {
            area_side_m: 300.0,
            bs_density_per_km2: 20.0,
            ue_position_m: [0.0, 0.0],
        }
    }
}

impl Geometry {
    pub fn area_km2(&self) -> f64 {
        (self.area_side_m * 1e-3) * (self.area_side_m * 1e-3)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !self.area_side_m.is_finite() || self.area_side_m <= 0.0 {
            return Err(SimError::BadParameter {
                what: "area_side_m",
                requirement: "positive and finite",
                value: self.area_side_m,
            });
        }
        if !self.bs_density_per_km2.is_finite() || self.bs_density_per_km2 < 0.0 {
            return Err(SimError::BadParameter {
                what: "bs_density_per_km2",
                requirement: "nonnegative and finite",
                value: self.bs_density_per_km2,
            });
        }
        let h = self.area_side_m / 2.0;
        for &c in &self.ue_position_m {
            if !c.is_finite() || c.abs() > h {
                return Err(SimError::BadParameter {
                    what: "ue_position_m",
                    requirement: "inside the area",
                    value: c,
                });
            }
        }
        Ok(())
    }
}

/// Channel between one station and the user.
///
/// `gain_pow` is the power gain (mean path loss times the fading draw);
/// `gain_amp` its square root. The pair is kept consistent exactly:
/// `gain_pow == gain_amp * gain_amp` bit for bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelState {
    gain_amp: f64,
    gain_pow: f64,
}

impl ChannelState {
    pub fn from_gain_pow(gain_pow: f64) -> Result<Self, SimError> {
        if !gain_pow.is_finite() || gain_pow < 0.0 {
            return Err(SimError::BadParameter {
                what: "gain_pow",
                requirement: "nonnegative and finite",
                value: gain_pow,
            });
        }
        let gain_amp = gain_pow.sqrt();
        // Re-square so the stored pair is exactly consistent.
        Ok(ChannelState {
            gain_amp,
            gain_pow: gain_amp * gain_amp,
        })
    }

    /// Mean path loss at `d_m` meters combined with a power-fading draw.
    pub fn from_distance_and_fade(d_m: f64, fade_pow: f64) -> Result<Self, SimError> {
        if !fade_pow.is_finite() || fade_pow < 0.0 {
            return Err(SimError::BadParameter {
                what: "fade_pow",
                requirement: "nonnegative and finite",
                value: fade_pow,
            });
        }
        let pl_db = path_loss_db(d_m)?;
        ChannelState::from_gain_pow(db_to_linear(-pl_db) * fade_pow)
    }

    /// Amplitude gain |h|.
    pub fn gain_amp(&self) -> f64 {
        self.gain_amp
    }

    /// Power gain |h|^2.
    pub fn gain_pow(&self) -> f64 {
        self.gain_pow
    }
}

/// What the transmitters know about instantaneous channel phase.
///
/// With long-term knowledge simultaneous transmissions add in power; with
/// short-term knowledge they can be cophased and add in amplitude. For a
/// single active transmitter the two coincide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CsiMode {
    LongTerm,
    ShortTerm,
}

/// Rate demand and the radio constants it is judged against.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandSpec {
    /// Required downlink rate over the frame, bit/s.
    pub r_dl_bps: f64,
    /// Frame length T, seconds.
    pub frame_s: f64,
    /// Carrier bandwidth W, hertz.
    pub bandwidth_hz: f64,
    /// Noise power spectral density, W/Hz.
    pub noise_psd_w_per_hz: f64,
    /// Out-of-cluster interference power at the user, watts.
    pub interference_w: f64,
    /// Noise power over the carrier: `noise_psd_w_per_hz * bandwidth_hz`.
    pub noise_w: f64,
}

impl DemandSpec {
    pub fn new(
        r_dl_bps: f64,
        frame_s: f64,
        bandwidth_hz: f64,
        noise_psd_w_per_hz: f64,
        interference_w: f64,
    ) -> Result<Self, SimError> {
        let check = |what: &'static str, v: f64, pos: bool| -> Result<(), SimError> {
            let ok = v.is_finite() && if pos { v > 0.0 } else { v >= 0.0 };
            if ok {
                Ok(())
            } else {
                Err(SimError::BadParameter {
                    what,
                    requirement: if pos {
                        "positive and finite"
                    } else {
                        "nonnegative and finite"
                    },
                    value: v,
                })
            }
        };
        check("r_dl_bps", r_dl_bps, true)?;
        check("frame_s", frame_s, true)?;
        check("bandwidth_hz", bandwidth_hz, true)?;
        check("noise_psd_w_per_hz", noise_psd_w_per_hz, true)?;
        check("interference_w", interference_w, false)?;
        Ok(DemandSpec {
            r_dl_bps,
            frame_s,
            bandwidth_hz,
            noise_psd_w_per_hz,
            interference_w,
            noise_w: noise_psd_w_per_hz * bandwidth_hz,
        })
    }

    /// Same radio constants, different rate target.
    pub fn with_rate(&self, r_dl_bps: f64) -> Result<Self, SimError> {
        DemandSpec::new(
            r_dl_bps,
            self.frame_s,
            self.bandwidth_hz,
            self.noise_psd_w_per_hz,
            self.interference_w,
        )
    }

    /// Same radio constants, different interference floor.
    pub fn with_interference(&self, interference_w: f64) -> Result<Self, SimError> {
        DemandSpec::new(
            self.r_dl_bps,
            self.frame_s,
            self.bandwidth_hz,
            self.noise_psd_w_per_hz,
            interference_w,
        )
    }

    /// Denominator of the SINR: interference plus noise, watts.
    pub fn noise_plus_interference_w(&self) -> f64 {
        self.interference_w + self.noise_w
    }

    /// Required spectral efficiency r/W, bit/s/Hz.
    pub fn required_se(&self) -> f64 {
        self.r_dl_bps / self.bandwidth_hz
    }
}

/// Combined received signal power at the user, watts.
///
/// Long-term: sum of `p * |h|^2`. Short-term: `(sum of sqrt(p) * |h|)^2`,
/// the cophased upper envelope. Short-term is never below long-term, with
/// equality when at most one power is positive.
pub fn received_signal_power(
    powers_w: &[f64],
    channels: &[ChannelState],
    mode: CsiMode,
) -> Result<f64, SimError> {
    if powers_w.len() != channels.len() {
        return Err(SimError::LengthMismatch {
            powers: powers_w.len(),
            channels: channels.len(),
        });
    }
    for &p in powers_w {
        if !p.is_finite() || p < 0.0 {
            return Err(SimError::BadParameter {
                what: "transmit power",
                requirement: "nonnegative and finite",
                value: p,
            });
        }
    }
    Ok(match mode {
        CsiMode::LongTerm => powers_w
            .iter()
            .zip(channels)
            .map(|(&p, c)| p * c.gain_pow())
            .sum(),
        CsiMode::ShortTerm => {
            let amp: f64 = powers_w
                .iter()
                .zip(channels)
                .map(|(&p, c)| p.sqrt() * c.gain_amp())
                .sum();
            amp * amp
        }
    })
}

/// Rate delivered over the frame when the signal is on for `t_s` seconds
/// at combined received power `signal_w`: `(t/T) W log2(1 + S / (I + N))`.
pub fn achievable_rate(t_s: f64, signal_w: f64, demand: &DemandSpec) -> Result<f64, SimError> {
    if !t_s.is_finite() || t_s < 0.0 || t_s > demand.frame_s {
        return Err(SimError::BadDuration {
            t_s,
            frame_s: demand.frame_s,
        });
    }
    if !signal_w.is_finite() || signal_w < 0.0 {
        return Err(SimError::BadParameter {
            what: "signal_w",
            requirement: "nonnegative and finite",
            value: signal_w,
        });
    }
    let snr = signal_w / demand.noise_plus_interference_w();
    Ok(t_s / demand.frame_s * demand.bandwidth_hz * (1.0 + snr).log2())
}

/// Station positions from a homogeneous PPP on the square: Poisson count
/// with mean density*area, positions i.i.d. uniform.
pub fn deploy_ppp(geometry: &Geometry, seed: u64) -> Result<Vec<[f64; 2]>, SimError> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    deploy_ppp_with(geometry, &mut rng)
}

/// Same as [`deploy_ppp`] but drawing from a caller-owned stream.
pub fn deploy_ppp_with<R: Rng>(geometry: &Geometry, rng: &mut R) -> Result<Vec<[f64; 2]>, SimError> {
    geometry.validate()?;
    let lambda = geometry.bs_density_per_km2 * geometry.area_km2();
    let n = if lambda > 0.0 {
        let poisson = Poisson::new(lambda).map_err(|_| SimError::BadParameter {
            what: "bs_density_per_km2",
            requirement: "a valid Poisson mean",
            value: lambda,
        })?;
        poisson.sample(rng) as usize
    } else {
        0
    };
    let h = geometry.area_side_m / 2.0;
    Ok((0..n)
        .map(|_| [rng.random_range(-h..h), rng.random_range(-h..h)])
        .collect())
}

/// How the candidate subset is chosen from the deployed stations.
#[derive(Debug, Clone, PartialEq)]
pub enum SelectionRule {
    /// The `k` stations nearest to the user.
    KNearest(usize),
    /// Stations whose received SNR at the reference transmit power clears
    /// the threshold (instantaneous channel, noise-only denominator).
    SnrThreshold {
        min_snr_db: f64,
        ref_power_w: f64,
    },
}

/// Where the out-of-cluster interference figure comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum InterferenceMode {
    /// Fixed value, watts.
    Constant(f64),
    /// Sum over non-candidate stations of `tx_power * gain_pow * activity`.
    Computed {
        tx_power_w: f64,
        activity_factor: f64,
    },
}

/// One network snapshot.
///
/// `candidate_set` holds indices into `bs_positions`, nearest first;
/// `channels[i]` belongs to `candidate_set[i]`. `interferer_channels`
/// covers the remaining stations in the same nearest-first order.
#[derive(Debug, Clone, PartialEq)]
pub struct Drop {
    pub bs_positions: Vec<[f64; 2]>,
    pub candidate_set: Vec<usize>,
    pub channels: Vec<ChannelState>,
    pub interferer_channels: Vec<ChannelState>,
}

impl Drop {
    /// Number of candidate stations M.
    pub fn num_candidates(&self) -> usize {
        self.candidate_set.len()
    }
}

/// Build a complete drop from one seed: deploy stations, draw fading for
/// every station, pick candidates, and resolve the interference figure
/// into the returned demand copy.
///
/// Too few stations for the rule is a [`SimError::DropRejected`]; Monte
/// Carlo layers redraw with a fresh seed.
pub fn build_drop(
    geometry: &Geometry,
    demand_template: &DemandSpec,
    rule: &SelectionRule,
    interference: &InterferenceMode,
    seed: u64,
) -> Result<(Drop, DemandSpec), SimError> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let bs_positions = deploy_ppp_with(geometry, &mut rng)?;
    if bs_positions.is_empty() {
        return Err(SimError::DropRejected("no stations in area".into()));
    }

    // Fading is drawn for every station in position order, before the rule
    // runs, so the stream layout does not depend on the rule.
    let fades: Vec<f64> = (0..bs_positions.len())
        .map(|_| Exp1.sample(&mut rng))
        .collect();

    let ue = geometry.ue_position_m;
    let mut order: Vec<usize> = (0..bs_positions.len()).collect();
    let dist = |i: usize| -> f64 {
        let dx = bs_positions[i][0] - ue[0];
        let dy = bs_positions[i][1] - ue[1];
        (dx * dx + dy * dy).sqrt()
    };
    order.sort_by(|&a, &b| {
        dist(a)
            .partial_cmp(&dist(b))
            .unwrap()
            .then(a.cmp(&b))
    });

    let mut channels_all = Vec::with_capacity(bs_positions.len());
    for i in 0..bs_positions.len() {
        channels_all.push(ChannelState::from_distance_and_fade(
            dist(i).max(f64::MIN_POSITIVE),
            fades[i],
        )?);
    }

    let candidate_set: Vec<usize> = match rule {
        SelectionRule::KNearest(k) => {
            if *k == 0 {
                return Err(SimError::BadParameter {
                    what: "k_nearest",
                    requirement: "at least 1",
                    value: 0.0,
                });
            }
            if bs_positions.len() < *k {
                return Err(SimError::DropRejected(format!(
                    "{} stations deployed, {} nearest requested",
                    bs_positions.len(),
                    k
                )));
            }
            order[..*k].to_vec()
        }
        SelectionRule::SnrThreshold {
            min_snr_db,
            ref_power_w,
        } => {
            let min_snr = db_to_linear(*min_snr_db);
            let picked: Vec<usize> = order
                .iter()
                .copied()
                .filter(|&i| {
                    ref_power_w * channels_all[i].gain_pow() / demand_template.noise_w >= min_snr
                })
                .collect();
            if picked.is_empty() {
                return Err(SimError::DropRejected(
                    "no station clears the SNR threshold".into(),
                ));
            }
            picked
        }
    };

    let in_set = |i: usize| candidate_set.contains(&i);
    let interferer_idx: Vec<usize> = order.iter().copied().filter(|&i| !in_set(i)).collect();
    let channels: Vec<ChannelState> = candidate_set.iter().map(|&i| channels_all[i]).collect();
    let interferer_channels: Vec<ChannelState> =
        interferer_idx.iter().map(|&i| channels_all[i]).collect();

    let i_out = match interference {
        InterferenceMode::Constant(v) => {
            if !v.is_finite() || *v < 0.0 {
                return Err(SimError::BadParameter {
                    what: "interference_w",
                    requirement: "nonnegative and finite",
                    value: *v,
                });
            }
            *v
        }
        InterferenceMode::Computed {
            tx_power_w,
            activity_factor,
        } => {
            interferer_channels
                .iter()
                .map(|c| tx_power_w * c.gain_pow() * activity_factor)
                .sum()
        }
    };
    let demand = demand_template.with_interference(i_out)?;

    Ok((
        Drop {
            bs_positions,
            candidate_set,
            channels,
            interferer_channels,
        },
        demand,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn demand_10mhz(r_bps: f64) -> DemandSpec {
        // 10 MHz carrier, 10 ms frame, noise floor chosen so N = 1e-13 W.
        DemandSpec::new(r_bps, 0.01, 1e7, 1e-20, 0.0).unwrap()
    }

    #[test]
    fn path_loss_reference_distances() {
        assert_relative_eq!(path_loss_db(1.0).unwrap(), 103.8, max_relative = 1e-12);
        assert_relative_eq!(path_loss_db(10.0).unwrap(), 124.8, max_relative = 1e-12);
        assert_relative_eq!(path_loss_db(100.0).unwrap(), 145.8, max_relative = 1e-12);
    }

    #[test]
    fn path_loss_clamps_below_one_meter() {
        assert_eq!(path_loss_db(0.5).unwrap(), path_loss_db(1.0).unwrap());
        assert_eq!(path_loss_db(1e-9).unwrap(), path_loss_db(1.0).unwrap());
    }

    #[test]
    fn path_loss_rejects_bad_distance() {
        assert!(matches!(path_loss_db(0.0), Err(SimError::BadDistance(_))));
        assert!(matches!(path_loss_db(-3.0), Err(SimError::BadDistance(_))));
        assert!(matches!(path_loss_db(f64::NAN), Err(SimError::BadDistance(_))));
    }

    #[test]
    fn channel_state_squares_consistently() {
        let c = ChannelState::from_gain_pow(4.0).unwrap();
        assert_eq!(c.gain_amp(), 2.0);
        assert_eq!(c.gain_pow(), 4.0);
        for &g in &[0.0, 1e-17, 3.7e-12, 0.123, 9.0] {
            let c = ChannelState::from_gain_pow(g).unwrap();
            assert_eq!(c.gain_pow(), c.gain_amp() * c.gain_amp());
        }
        assert!(ChannelState::from_gain_pow(-1.0).is_err());
    }

    #[test]
    fn channel_from_distance_reference() {
        // 1 m, unit fading: power gain 10^(-10.38).
        let c = ChannelState::from_distance_and_fade(1.0, 1.0).unwrap();
        assert_relative_eq!(c.gain_pow(), 4.1687e-11, max_relative = 1e-4);
        let dead = ChannelState::from_distance_and_fade(50.0, 0.0).unwrap();
        assert_eq!(dead.gain_pow(), 0.0);
    }

    #[test]
    fn received_power_reference_cases() {
        let unit = ChannelState::from_gain_pow(1.0).unwrap();
        let chans = [unit, unit];
        let p = [4.0, 9.0];
        assert_relative_eq!(
            received_signal_power(&p, &chans, CsiMode::LongTerm).unwrap(),
            13.0
        );
        // Cophased: (2 + 3)^2.
        assert_relative_eq!(
            received_signal_power(&p, &chans, CsiMode::ShortTerm).unwrap(),
            25.0
        );
    }

    #[test]
    fn received_power_single_station_mode_independent() {
        let c = [ChannelState::from_gain_pow(0.25).unwrap()];
        let p = [4.0];
        let long = received_signal_power(&p, &c, CsiMode::LongTerm).unwrap();
        let short = received_signal_power(&p, &c, CsiMode::ShortTerm).unwrap();
        assert_relative_eq!(long, 1.0);
        assert_relative_eq!(short, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn received_power_edge_cases() {
        assert_eq!(
            received_signal_power(&[], &[], CsiMode::LongTerm).unwrap(),
            0.0
        );
        let c = [ChannelState::from_gain_pow(1.0).unwrap()];
        assert_eq!(
            received_signal_power(&[0.0], &c, CsiMode::ShortTerm).unwrap(),
            0.0
        );
        assert!(matches!(
            received_signal_power(&[1.0, 2.0], &c, CsiMode::LongTerm),
            Err(SimError::LengthMismatch { .. })
        ));
        assert!(received_signal_power(&[-1.0], &c, CsiMode::LongTerm).is_err());
    }

    proptest! {
        #[test]
        fn short_term_dominates_long_term(
            raw in proptest::collection::vec((0.0f64..10.0, 1e-6f64..1.0), 0..6)
        ) {
            let powers: Vec<f64> = raw.iter().map(|x| x.0).collect();
            let chans: Vec<ChannelState> = raw
                .iter()
                .map(|x| ChannelState::from_gain_pow(x.1).unwrap())
                .collect();
            let long = received_signal_power(&powers, &chans, CsiMode::LongTerm).unwrap();
            let short = received_signal_power(&powers, &chans, CsiMode::ShortTerm).unwrap();
            prop_assert!(short >= long * (1.0 - 1e-12));
            let active = powers.iter().filter(|&&p| p > 0.0).count();
            if active <= 1 {
                prop_assert!((short - long).abs() <= 1e-12 * long.max(1e-300));
            }
        }

        #[test]
        fn rate_is_linear_in_duration(t_frac in 0.0f64..=1.0, s in 0.0f64..1e-9) {
            let d = demand_10mhz(1e7);
            let t = t_frac * d.frame_s;
            let full = achievable_rate(d.frame_s, s, &d).unwrap();
            let part = achievable_rate(t, s, &d).unwrap();
            prop_assert!((part - t_frac * full).abs() <= 1e-9 * full.max(1e-300));
        }
    }

    #[test]
    fn rate_reference_cases() {
        let d = demand_10mhz(1e7);
        // S equal to the noise floor: SNR 1, log2(2) = 1, full frame -> W.
        assert_relative_eq!(
            achievable_rate(d.frame_s, 1e-13, &d).unwrap(),
            1e7,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            achievable_rate(d.frame_s / 2.0, 1e-13, &d).unwrap(),
            5e6,
            max_relative = 1e-12
        );
        assert_eq!(achievable_rate(d.frame_s, 0.0, &d).unwrap(), 0.0);
        assert!(matches!(
            achievable_rate(d.frame_s * 1.01, 1e-13, &d),
            Err(SimError::BadDuration { .. })
        ));
        assert!(achievable_rate(-0.001, 1e-13, &d).is_err());
    }

    #[test]
    fn demand_constructor_validates() {
        assert!(DemandSpec::new(0.0, 0.01, 1e7, 1e-20, 0.0).is_err());
        assert!(DemandSpec::new(1e7, 0.0, 1e7, 1e-20, 0.0).is_err());
        assert!(DemandSpec::new(1e7, 0.01, 1e7, 1e-20, -1.0).is_err());
        let d = demand_10mhz(2e7);
        assert_relative_eq!(d.noise_w, 1e-13, max_relative = 1e-12);
        assert_relative_eq!(d.required_se(), 2.0);
    }

    #[test]
    fn ppp_is_deterministic_per_seed() {
        let g = Geometry::default();
        let a = deploy_ppp(&g, 7).unwrap();
        let b = deploy_ppp(&g, 7).unwrap();
        assert_eq!(a, b);
        let c = deploy_ppp(&g, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn ppp_positions_inside_area() {
        let g = Geometry {
            area_side_m: 100.0,
            bs_density_per_km2: 2000.0,
            ue_position_m: [0.0, 0.0],
        };
        let pts = deploy_ppp(&g, 3).unwrap();
        assert!(!pts.is_empty());
        for p in pts {
            assert!(p[0].abs() <= 50.0 && p[1].abs() <= 50.0);
        }
    }

    #[test]
    fn ppp_zero_density_is_empty() {
        let g = Geometry {
            bs_density_per_km2: 0.0,
            ..Geometry::default()
        };
        assert!(deploy_ppp(&g, 1).unwrap().is_empty());
    }

    #[test]
    fn ppp_empirical_mean_matches_density() {
        // Default geometry: 20/km^2 over 0.09 km^2 -> mean 1.8 per drop.
        let g = Geometry::default();
        let n_drops = 10_000u64;
        let total: usize = (0..n_drops)
            .map(|s| deploy_ppp(&g, s).unwrap().len())
            .sum();
        let mean = total as f64 / n_drops as f64;
        assert!(
            (mean - 1.8).abs() < 0.05 * 1.8,
            "empirical mean {mean} too far from 1.8"
        );
    }

    fn dense_geometry() -> Geometry {
        Geometry {
            area_side_m: 300.0,
            bs_density_per_km2: 1000.0,
            ue_position_m: [0.0, 0.0],
        }
    }

    #[test]
    fn build_drop_k_nearest_orders_by_distance() {
        let g = dense_geometry();
        let d = demand_10mhz(1e7);
        let (drop, demand) = build_drop(
            &g,
            &d,
            &SelectionRule::KNearest(3),
            &InterferenceMode::Constant(0.0),
            11,
        )
        .unwrap();
        assert_eq!(drop.num_candidates(), 3);
        assert_eq!(drop.channels.len(), 3);
        assert_eq!(
            drop.interferer_channels.len(),
            drop.bs_positions.len() - 3
        );
        assert_eq!(demand.interference_w, 0.0);
        let dist = |i: usize| {
            let p = drop.bs_positions[i];
            (p[0] * p[0] + p[1] * p[1]).sqrt()
        };
        let d0 = dist(drop.candidate_set[0]);
        let d1 = dist(drop.candidate_set[1]);
        let d2 = dist(drop.candidate_set[2]);
        assert!(d0 <= d1 && d1 <= d2);
        // Every non-candidate is at least as far as the third candidate.
        for i in 0..drop.bs_positions.len() {
            if !drop.candidate_set.contains(&i) {
                assert!(dist(i) >= d2);
            }
        }
    }

    #[test]
    fn build_drop_is_deterministic() {
        let g = dense_geometry();
        let d = demand_10mhz(1e7);
        let rule = SelectionRule::KNearest(3);
        let imode = InterferenceMode::Constant(0.0);
        let a = build_drop(&g, &d, &rule, &imode, 42).unwrap();
        let b = build_drop(&g, &d, &rule, &imode, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn build_drop_rejects_when_underpopulated() {
        let g = Geometry {
            bs_density_per_km2: 1e-6,
            ..Geometry::default()
        };
        let d = demand_10mhz(1e7);
        let r = build_drop(
            &g,
            &d,
            &SelectionRule::KNearest(3),
            &InterferenceMode::Constant(0.0),
            1,
        );
        assert!(matches!(r, Err(SimError::DropRejected(_))));

        // Find a seed deploying one or two stations; three-nearest must reject.
        let sparse = Geometry {
            bs_density_per_km2: 22.0,
            ..Geometry::default()
        };
        let seed = (0..1000)
            .find(|&s| {
                let n = deploy_ppp(&sparse, s).unwrap().len();
                n == 1 || n == 2
            })
            .expect("some sparse seed");
        let r = build_drop(
            &sparse,
            &d,
            &SelectionRule::KNearest(3),
            &InterferenceMode::Constant(0.0),
            seed,
        );
        assert!(matches!(r, Err(SimError::DropRejected(_))));
    }

    #[test]
    fn build_drop_computed_interference_sums_interferers() {
        let g = dense_geometry();
        let d = demand_10mhz(1e7);
        let imode = InterferenceMode::Computed {
            tx_power_w: 2.0,
            activity_factor: 0.5,
        };
        let (drop, demand) = build_drop(&g, &d, &SelectionRule::KNearest(3), &imode, 5).unwrap();
        let expect: f64 = drop
            .interferer_channels
            .iter()
            .map(|c| 2.0 * c.gain_pow() * 0.5)
            .sum();
        assert_relative_eq!(demand.interference_w, expect, max_relative = 1e-15);
        assert!(demand.interference_w > 0.0);

        // All stations admitted -> nothing left to interfere.
        let n = drop.bs_positions.len();
        let (all, demand_all) =
            build_drop(&g, &d, &SelectionRule::KNearest(n), &imode, 5).unwrap();
        assert!(all.interferer_channels.is_empty());
        assert_eq!(demand_all.interference_w, 0.0);
    }

    #[test]
    fn build_drop_snr_threshold_rule() {
        let g = dense_geometry();
        let d = demand_10mhz(1e7);
        let imode = InterferenceMode::Constant(0.0);
        // Absurdly high bar: nobody qualifies.
        let high = SelectionRule::SnrThreshold {
            min_snr_db: 500.0,
            ref_power_w: 39.81,
        };
        assert!(matches!(
            build_drop(&g, &d, &high, &imode, 9),
            Err(SimError::DropRejected(_))
        ));
        // No bar: everyone qualifies.
        let low = SelectionRule::SnrThreshold {
            min_snr_db: -500.0,
            ref_power_w: 39.81,
        };
        let (drop, _) = build_drop(&g, &d, &low, &imode, 9).unwrap();
        assert_eq!(drop.num_candidates(), drop.bs_positions.len());
        assert!(drop.interferer_channels.is_empty());
    }
}
