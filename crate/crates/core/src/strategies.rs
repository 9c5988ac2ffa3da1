//! Incident RF power and harvested energy per coherence block under each
//! charging strategy.
//!
//! CSI-free schemes:
//!
//! * `AA_SS`: all antennas radiate the same waveform with power `P/M` each.
//! * `AA_IS`: all antennas radiate mutually independent waveforms with power
//!   `P/M` each.
//! * `SA`: the block is split into `M` equal sub-slots and antenna `m` radiates
//!   alone at full power `P` in sub-slot `m`.
//!
//! CSI-based single-PB benchmarks:
//!
//! * `OA_CSI`: the single antenna maximizing the total harvested energy.
//! * `AA_CSI`: a precoder maximizing the total harvested energy, see
//!   [`crate::precoder`].
//!
//! With several PBs, [`SignalCorrelation::Sync`] makes every PB radiate the
//! same waveforms, so contributions add in amplitude, while
//! [`SignalCorrelation::Independent`] makes them add in power. With a single
//! PB the correlation mode has no effect.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;

use crate::channel::ChannelRealization;
use crate::error::{check_finite, invalid, Result, WetError};
use crate::precoder::{self, Precoder, PrecoderOptions};
use crate::units::HarvesterModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrategyKind {
    AaSs,
    AaIs,
    Sa,
    OaCsi,
    AaCsi,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 5] = [
        StrategyKind::AaSs,
        StrategyKind::AaIs,
        StrategyKind::Sa,
        StrategyKind::OaCsi,
        StrategyKind::AaCsi,
    ];

    pub const CSI_FREE: [StrategyKind; 3] =
        [StrategyKind::AaSs, StrategyKind::AaIs, StrategyKind::Sa];

    pub fn label(self) -> &'static str {
        match self {
            StrategyKind::AaSs => "AA_SS",
            StrategyKind::AaIs => "AA_IS",
            StrategyKind::Sa => "SA",
            StrategyKind::OaCsi => "OA_CSI",
            StrategyKind::AaCsi => "AA_CSI",
        }
    }

    pub fn requires_csi(self) -> bool {
        matches!(self, StrategyKind::OaCsi | StrategyKind::AaCsi)
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for StrategyKind {
    type Err = WetError;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        match norm.as_str() {
            "AA" | "AA_SS" => Ok(StrategyKind::AaSs),
            "AA_IS" => Ok(StrategyKind::AaIs),
            "SA" => Ok(StrategyKind::Sa),
            "OA_CSI" => Ok(StrategyKind::OaCsi),
            "AA_CSI" => Ok(StrategyKind::AaCsi),
            _ => Err(invalid(
                "strategy",
                format!("unknown strategy `{s}` (expected AA_SS, AA_IS, SA, OA_CSI or AA_CSI)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SignalCorrelation {
    #[default]
    Independent,
    Sync,
}

impl SignalCorrelation {
    pub fn label(self) -> &'static str {
        match self {
            SignalCorrelation::Independent => "independent",
            SignalCorrelation::Sync => "sync",
        }
    }
}

impl fmt::Display for SignalCorrelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SignalCorrelation {
    type Err = WetError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "independent" | "ind" => Ok(SignalCorrelation::Independent),
            "sync" | "synchronized" => Ok(SignalCorrelation::Sync),
            _ => Err(invalid(
                "correlation",
                format!("unknown correlation `{s}` (expected independent or sync)"),
            )),
        }
    }
}

/// Harvested energy of every device in one coherence block of unit duration.
/// An entry is zero exactly when that device is in energy outage.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BlockEnergy(Vec<f64>);

impl BlockEnergy {
    pub fn new(energies: Vec<f64>) -> Self {
        debug_assert!(energies.iter().all(|&e| e >= 0.0));
        Self(energies)
    }

    pub fn energies(&self) -> &[f64] {
        &self.0
    }

    pub fn is_outage(&self, device: usize) -> bool {
        self.0[device] == 0.0
    }

    pub fn outage_count(&self) -> usize {
        self.0.iter().filter(|&&e| e == 0.0).count()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

fn check_call(real: &ChannelRealization, device: usize, power: f64) -> Result<()> {
    check_finite("transmit power", power)?;
    if power <= 0.0 {
        return Err(invalid(
            "transmit_power_w",
            "transmit power must be positive",
        ));
    }
    if device >= real.num_devices() {
        return Err(WetError::DeviceIndex {
            index: device,
            count: real.num_devices(),
        });
    }
    Ok(())
}

/// Incident power at `device` when every antenna radiates the same waveform.
pub fn incident_power_aa_ss(
    real: &ChannelRealization,
    device: usize,
    power: f64,
    corr: SignalCorrelation,
) -> f64 {
    let per_antenna = power / real.antennas() as f64;
    if real.num_pbs() == 1 || corr == SignalCorrelation::Independent {
        (0..real.num_pbs())
            .map(|b| {
                let sum: Complex64 = real.link_gains(b, device).iter().sum();
                real.loss(b, device) * per_antenna * sum.norm_sqr()
            })
            .sum()
    } else {
        (0..real.num_pbs())
            .map(|b| {
                let sum: Complex64 = real.link_gains(b, device).iter().sum();
                sum * (real.loss(b, device) * per_antenna).sqrt()
            })
            .sum::<Complex64>()
            .norm_sqr()
    }
}

/// Incident power at `device` when antennas radiate independent waveforms.
pub fn incident_power_aa_is(
    real: &ChannelRealization,
    device: usize,
    power: f64,
    corr: SignalCorrelation,
) -> f64 {
    let per_antenna = power / real.antennas() as f64;
    if real.num_pbs() == 1 || corr == SignalCorrelation::Independent {
        (0..real.num_pbs())
            .map(|b| {
                let sum: f64 = real
                    .link_gains(b, device)
                    .iter()
                    .map(|g| g.norm_sqr())
                    .sum();
                real.loss(b, device) * per_antenna * sum
            })
            .sum()
    } else {
        (0..real.antennas())
            .map(|m| {
                (0..real.num_pbs())
                    .map(|b| real.gain(b, m, device) * (real.loss(b, device) * per_antenna).sqrt())
                    .sum::<Complex64>()
                    .norm_sqr()
            })
            .sum()
    }
}

/// Incident power at `device` in sub-slot `antenna` of the switching scheme.
pub fn incident_power_sa_slot(
    real: &ChannelRealization,
    device: usize,
    antenna: usize,
    power: f64,
    corr: SignalCorrelation,
) -> f64 {
    if real.num_pbs() == 1 || corr == SignalCorrelation::Independent {
        (0..real.num_pbs())
            .map(|b| real.loss(b, device) * power * real.gain(b, antenna, device).norm_sqr())
            .sum()
    } else {
        (0..real.num_pbs())
            .map(|b| real.gain(b, antenna, device) * (real.loss(b, device) * power).sqrt())
            .sum::<Complex64>()
            .norm_sqr()
    }
}

pub fn device_energy_aa_ss(
    real: &ChannelRealization,
    device: usize,
    power: f64,
    corr: SignalCorrelation,
    m: &HarvesterModel,
) -> Result<f64> {
    check_call(real, device, power)?;
    Ok(m.harvest_unchecked(incident_power_aa_ss(real, device, power, corr)))
}

pub fn device_energy_aa_is(
    real: &ChannelRealization,
    device: usize,
    power: f64,
    corr: SignalCorrelation,
    m: &HarvesterModel,
) -> Result<f64> {
    check_call(real, device, power)?;
    Ok(m.harvest_unchecked(incident_power_aa_is(real, device, power, corr)))
}

/// Switching antennas: the harvester acts on each sub-slot before averaging,
/// so the device is in outage only when every sub-slot is below sensitivity.
pub fn device_energy_sa(
    real: &ChannelRealization,
    device: usize,
    power: f64,
    corr: SignalCorrelation,
    m: &HarvesterModel,
) -> Result<f64> {
    check_call(real, device, power)?;
    Ok(energy_sa(real, device, power, corr, m))
}

fn energy_sa(
    real: &ChannelRealization,
    device: usize,
    power: f64,
    corr: SignalCorrelation,
    m: &HarvesterModel,
) -> f64 {
    let total: f64 = (0..real.antennas())
        .map(|a| m.harvest_unchecked(incident_power_sa_slot(real, device, a, power, corr)))
        .sum();
    total / real.antennas() as f64
}

/// Antenna whose lone full-power transmission maximizes the total harvested
/// energy over all devices. Ties go to the lowest index.
pub fn oa_csi_select(real: &ChannelRealization, power: f64, m: &HarvesterModel) -> Result<usize> {
    if real.num_pbs() != 1 {
        return Err(WetError::SinglePbOnly("OA_CSI"));
    }
    check_call(real, 0, power)?;
    let mut best = (0, f64::NEG_INFINITY);
    for a in 0..real.antennas() {
        let total: f64 = (0..real.num_devices())
            .map(|j| m.harvest_unchecked(real.loss(0, j) * power * real.gain(0, a, j).norm_sqr()))
            .sum();
        if total > best.1 {
            best = (a, total);
        }
    }
    Ok(best.0)
}

pub fn device_energy_oa_csi(
    real: &ChannelRealization,
    device: usize,
    power: f64,
    m: &HarvesterModel,
) -> Result<f64> {
    let a = oa_csi_select(real, power, m)?;
    check_call(real, device, power)?;
    Ok(m.harvest_unchecked(real.loss(0, device) * power * real.gain(0, a, device).norm_sqr()))
}

/// Per-device energy when the single PB transmits with precoder `w`.
pub fn device_energies_precoded(
    real: &ChannelRealization,
    w: &Precoder,
    m: &HarvesterModel,
) -> Result<BlockEnergy> {
    if real.num_pbs() != 1 {
        return Err(WetError::SinglePbOnly("AA_CSI"));
    }
    if w.weights().len() != real.antennas() {
        return Err(WetError::Dimension {
            expected: real.antennas(),
            got: w.weights().len(),
        });
    }
    Ok(BlockEnergy::new(
        (0..real.num_devices())
            .map(|j| m.harvest_unchecked(precoder::received_power(real, j, w.weights())))
            .collect(),
    ))
}

/// Harvested energy of every device in one block under `strategy`.
///
/// `rng` is only consumed by `AA_CSI` (random restarts of the precoder
/// search).
pub fn block_energy<R: Rng + ?Sized>(
    real: &ChannelRealization,
    strategy: StrategyKind,
    corr: SignalCorrelation,
    power: f64,
    m: &HarvesterModel,
    precoder_opts: &PrecoderOptions,
    rng: &mut R,
) -> Result<BlockEnergy> {
    check_call(real, 0, power)?;
    let n = real.num_devices();
    let energies = match strategy {
        StrategyKind::AaSs => (0..n)
            .map(|j| m.harvest_unchecked(incident_power_aa_ss(real, j, power, corr)))
            .collect(),
        StrategyKind::AaIs => (0..n)
            .map(|j| m.harvest_unchecked(incident_power_aa_is(real, j, power, corr)))
            .collect(),
        StrategyKind::Sa => (0..n).map(|j| energy_sa(real, j, power, corr, m)).collect(),
        StrategyKind::OaCsi => {
            let a = oa_csi_select(real, power, m)?;
            (0..n)
                .map(|j| {
                    m.harvest_unchecked(real.loss(0, j) * power * real.gain(0, a, j).norm_sqr())
                })
                .collect()
        }
        StrategyKind::AaCsi => {
            let sol = precoder::optimize_precoder(real, m, power, precoder_opts, rng)?;
            return device_energies_precoded(real, &sol.precoder, m);
        }
    };
    Ok(BlockEnergy::new(energies))
}
