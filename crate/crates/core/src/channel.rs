//! Geometry, large-scale path loss, distance-dependent Rician K-factor and
//! quasi-static fading realizations.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_finite, check_non_negative, invalid, Result, WetError};

/// Position in the plane, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        check_finite("x", x)?;
        check_finite("y", y)?;
        Ok(Self { x, y })
    }

    pub const fn origin() -> Self {
        Self { x: 0.0, y: 0.0 }
    }

    pub fn distance(&self, other: &Point2D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Log-distance path loss, clamped at the reference distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossModel {
    pub exponent: f64,
    pub ref_loss_db: f64,
    pub ref_distance_m: f64,
}

impl Default for PathLossModel {
    fn default() -> Self {
        Self {
            exponent: 3.0,
            ref_loss_db: 26.0,
            ref_distance_m: 1.0,
        }
    }
}

impl PathLossModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("path_loss_exponent", self.exponent),
            ("ref_loss_db", self.ref_loss_db),
            ("ref_distance_m", self.ref_distance_m),
        ] {
            check_finite(name, v)?;
            if v <= 0.0 {
                return Err(invalid(name, format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    /// Linear power gain at distance `d`. Distances up to the reference
    /// distance see the reference attenuation.
    pub fn gain(&self, d: f64) -> Result<f64> {
        check_non_negative("distance", d)?;
        Ok(self.gain_unchecked(d))
    }

    fn gain_unchecked(&self, d: f64) -> f64 {
        let rel = d.max(self.ref_distance_m) / self.ref_distance_m;
        10f64.powf(-self.ref_loss_db / 10.0) * rel.powf(-self.exponent)
    }

    /// Distance at which the mean received power from a transmitter of
    /// `power_w` drops to `threshold_w`.
    pub fn threshold_radius(&self, power_w: f64, threshold_w: f64) -> f64 {
        let at_ref = power_w * 10f64.powf(-self.ref_loss_db / 10.0);
        self.ref_distance_m * (at_ref / threshold_w).powf(1.0 / self.exponent)
    }
}

/// Rician K-factor decreasing linearly from `k_max` at distance 0 to zero at
/// `cutoff_m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RicianProfile {
    pub k_max: f64,
    pub cutoff_m: f64,
}

impl Default for RicianProfile {
    fn default() -> Self {
        Self {
            k_max: 15.0,
            cutoff_m: 10.0,
        }
    }
}

impl RicianProfile {
    pub fn validate(&self) -> Result<()> {
        check_non_negative("k_max", self.k_max)?;
        check_finite("k_cutoff_m", self.cutoff_m)?;
        if self.cutoff_m <= 0.0 {
            return Err(invalid("k_cutoff_m", "k_cutoff_m must be positive"));
        }
        Ok(())
    }

    pub fn k(&self, d: f64) -> Result<f64> {
        check_non_negative("distance", d)?;
        Ok(self.k_unchecked(d))
    }

    fn k_unchecked(&self, d: f64) -> f64 {
        self.k_max * (1.0 - d / self.cutoff_m).max(0.0)
    }
}

/// Whether small-scale fading is drawn or replaced by unit gains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FadingMode {
    #[default]
    Rician,
    /// Every gain is exactly 1. Used for deterministic checks.
    Disabled,
}

pub fn path_loss_gain(d: f64, model: &PathLossModel) -> Result<f64> {
    model.gain(d)
}

pub fn rician_k(d: f64, profile: &RicianProfile) -> Result<f64> {
    profile.k(d)
}

/// Draws one Rician gain with unit mean power: a unit-magnitude LOS term with
/// uniform phase weighted by `sqrt(k/(k+1))` plus a circularly-symmetric
/// complex normal term weighted by `sqrt(1/(k+1))`.
pub fn sample_fading<R: Rng + ?Sized>(rng: &mut R, k: f64) -> Result<Complex64> {
    check_non_negative("k", k)?;
    let (los, nlos) = rician_amplitudes(k);
    Ok(draw_gain(rng, los, nlos))
}

fn rician_amplitudes(k: f64) -> (f64, f64) {
    ((k / (k + 1.0)).sqrt(), (1.0 / (k + 1.0)).sqrt())
}

#[inline]
fn draw_gain<R: Rng + ?Sized>(rng: &mut R, los: f64, nlos: f64) -> Complex64 {
    let theta = rng.random::<f64>() * TAU;
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    let (s, c) = theta.sin_cos();
    Complex64::new(
        los * c + nlos * FRAC_1_SQRT_2 * re,
        los * s + nlos * FRAC_1_SQRT_2 * im,
    )
}

/// Large-scale parameters of every (PB, device) link: path-loss gain and
/// Rician amplitudes. Fixed deployments compute this once and reuse it across
/// coherence blocks.
#[derive(Debug, Clone)]
pub struct LinkBudget {
    num_pbs: usize,
    num_devices: usize,
    loss: Vec<f64>,
    k: Vec<f64>,
    los: Vec<f64>,
    nlos: Vec<f64>,
}

impl LinkBudget {
    pub fn new(
        pbs: &[Point2D],
        devices: &[Point2D],
        pl: &PathLossModel,
        rp: &RicianProfile,
    ) -> Result<Self> {
        if pbs.is_empty() {
            return Err(invalid(
                "pb_positions",
                "at least one power beacon is required",
            ));
        }
        if devices.is_empty() {
            return Err(invalid(
                "device_positions",
                "at least one device is required",
            ));
        }
        pl.validate()?;
        rp.validate()?;
        let n = pbs.len() * devices.len();
        let mut budget = Self {
            num_pbs: pbs.len(),
            num_devices: devices.len(),
            loss: Vec::with_capacity(n),
            k: Vec::with_capacity(n),
            los: Vec::with_capacity(n),
            nlos: Vec::with_capacity(n),
        };
        for pb in pbs {
            for dev in devices {
                let d = pb.distance(dev);
                let k = rp.k_unchecked(d);
                let (los, nlos) = rician_amplitudes(k);
                budget.loss.push(pl.gain_unchecked(d));
                budget.k.push(k);
                budget.los.push(los);
                budget.nlos.push(nlos);
            }
        }
        Ok(budget)
    }

    pub fn num_pbs(&self) -> usize {
        self.num_pbs
    }

    pub fn num_devices(&self) -> usize {
        self.num_devices
    }

    pub fn loss(&self, pb: usize, device: usize) -> f64 {
        self.loss[pb * self.num_devices + device]
    }

    pub fn k(&self, pb: usize, device: usize) -> f64 {
        self.k[pb * self.num_devices + device]
    }

    /// Draws one coherence block of fading on top of these links.
    pub fn realize<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        antennas: usize,
        fading: FadingMode,
    ) -> ChannelRealization {
        let mut gains = Vec::with_capacity(self.loss.len() * antennas);
        match fading {
            FadingMode::Rician => {
                for (&los, &nlos) in self.los.iter().zip(&self.nlos) {
                    for _ in 0..antennas {
                        gains.push(draw_gain(rng, los, nlos));
                    }
                }
            }
            FadingMode::Disabled => {
                gains.resize(self.loss.len() * antennas, Complex64::new(1.0, 0.0))
            }
        }
        ChannelRealization {
            num_pbs: self.num_pbs,
            antennas,
            num_devices: self.num_devices,
            gains,
            loss: self.loss.clone(),
        }
    }
}

/// Complex small-scale gains for one coherence block plus per-link path-loss
/// gains. Gains have unit mean squared magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    num_pbs: usize,
    antennas: usize,
    num_devices: usize,
    /// Indexed `[(pb * num_devices + device) * antennas + antenna]`.
    gains: Vec<Complex64>,
    /// Indexed `[pb * num_devices + device]`.
    loss: Vec<f64>,
}

impl ChannelRealization {
    /// Builds a realization from explicit values. `gains` is laid out as
    /// `[pb][device][antenna]` and `loss` as `[pb][device]`.
    pub fn from_parts(
        num_pbs: usize,
        antennas: usize,
        num_devices: usize,
        gains: Vec<Complex64>,
        loss: Vec<f64>,
    ) -> Result<Self> {
        if num_pbs == 0 || antennas == 0 || num_devices == 0 {
            return Err(invalid(
                "shape",
                "PB, antenna and device counts must be positive",
            ));
        }
        let links = num_pbs * num_devices;
        if loss.len() != links {
            return Err(WetError::Dimension {
                expected: links,
                got: loss.len(),
            });
        }
        if gains.len() != links * antennas {
            return Err(WetError::Dimension {
                expected: links * antennas,
                got: gains.len(),
            });
        }
        if gains.iter().any(|g| !g.re.is_finite() || !g.im.is_finite()) {
            return Err(invalid("gains", "gains must be finite"));
        }
        if loss.iter().any(|&l| !(l > 0.0 && l <= 1.0)) {
            return Err(invalid("loss", "path-loss gains must be in (0, 1]"));
        }
        Ok(Self {
            num_pbs,
            antennas,
            num_devices,
            gains,
            loss,
        })
    }

    pub fn num_pbs(&self) -> usize {
        self.num_pbs
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn num_devices(&self) -> usize {
        self.num_devices
    }

    pub fn gain(&self, pb: usize, antenna: usize, device: usize) -> Complex64 {
        self.gains[(pb * self.num_devices + device) * self.antennas + antenna]
    }

    /// Gains from every antenna of `pb` to `device`.
    pub fn link_gains(&self, pb: usize, device: usize) -> &[Complex64] {
        let start = (pb * self.num_devices + device) * self.antennas;
        &self.gains[start..start + self.antennas]
    }

    pub fn loss(&self, pb: usize, device: usize) -> f64 {
        self.loss[pb * self.num_devices + device]
    }

    pub fn gains(&self) -> &[Complex64] {
        &self.gains
    }

    pub fn losses(&self) -> &[f64] {
        &self.loss
    }
}

/// Draws one independent fading realization for every (PB, antenna, device)
/// triple.
pub fn realize_channels<R: Rng + ?Sized>(
    rng: &mut R,
    pb_positions: &[Point2D],
    antennas_per_pb: usize,
    device_positions: &[Point2D],
    pl: &PathLossModel,
    rp: &RicianProfile,
) -> Result<ChannelRealization> {
    if antennas_per_pb == 0 {
        return Err(invalid(
            "antennas",
            "at least one antenna per PB is required",
        ));
    }
    let budget = LinkBudget::new(pb_positions, device_positions, pl, rp)?;
    Ok(budget.realize(rng, antennas_per_pb, FadingMode::Rician))
}
