//! Synthetic BPSK/QPSK spectrum observations.
//!
//! Each client sits at a random distance from the transmitter. A sample is
//! a burst of unit-power symbols of one modulation, attenuated by a power
//! law path loss, rotated by a random carrier phase and corrupted by
//! circular complex Gaussian noise of fixed power. The received burst goes
//! through a non-coherent front end (squared differential products, see
//! [`differential_square`]) and [`features_from_iq`] turns the 16 front-end
//! outputs into 16 phases and 16 powers.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_probability, Error, Result};
use crate::seed::{self, Stream};

pub const SYMBOLS_PER_SAMPLE: usize = 16;
pub const FEATURES: usize = 2 * SYMBOLS_PER_SAMPLE;

/// Class label: 0 = BPSK, 1 = QPSK.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Modulation {
    Bpsk = 0,
    Qpsk = 1,
}

impl Modulation {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(label: usize) -> Result<Self> {
        match label {
            0 => Ok(Modulation::Bpsk),
            1 => Ok(Modulation::Qpsk),
            other => Err(Error::OutOfRange {
                what: "label",
                value: other as f64,
            }),
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Modulation::Bpsk => Modulation::Qpsk,
            Modulation::Qpsk => Modulation::Bpsk,
        }
    }

    /// Constellation phase of symbol `index` (taken modulo the order).
    pub fn symbol_phase(self, index: usize) -> f64 {
        match self {
            Modulation::Bpsk => (index % 2) as f64 * PI,
            Modulation::Qpsk => FRAC_PI_4 + (index % 4) as f64 * FRAC_PI_2,
        }
    }

    fn order(self) -> usize {
        match self {
            Modulation::Bpsk => 2,
            Modulation::Qpsk => 4,
        }
    }
}

/// Path loss, noise and client placement.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    pub path_loss_exponent: f64,
    /// Linear power gain at unit distance.
    pub reference_gain: f64,
    /// Total complex noise power per received symbol.
    pub noise_power: f64,
    pub distance_min: f64,
    pub distance_max: f64,
    pub seed: u64,
}

impl Default for ChannelConfig {
    /// Exponent 2.7, unit gain, clients uniform in [1, 10] m, noise set for
    /// about 10 dB SNR at the median distance of 5.5 m.
    fn default() -> Self {
        ChannelConfig {
            path_loss_exponent: 2.7,
            reference_gain: 1.0,
            noise_power: 1.0e-3,
            distance_min: 1.0,
            distance_max: 10.0,
            seed: 0,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("path_loss_exponent", self.path_loss_exponent),
            ("reference_gain", self.reference_gain),
            ("noise_power", self.noise_power),
            ("distance_min", self.distance_min),
            ("distance_max", self.distance_max),
        ];
        for (what, v) in finite {
            if !v.is_finite() {
                return Err(Error::NonFinite(what));
            }
        }
        if self.path_loss_exponent <= 0.0 {
            return Err(Error::OutOfRange {
                what: "path_loss_exponent",
                value: self.path_loss_exponent,
            });
        }
        if self.reference_gain <= 0.0 {
            return Err(Error::OutOfRange {
                what: "reference_gain",
                value: self.reference_gain,
            });
        }
        if self.noise_power < 0.0 {
            return Err(Error::OutOfRange {
                what: "noise_power",
                value: self.noise_power,
            });
        }
        if self.distance_min <= 0.0 {
            return Err(Error::OutOfRange {
                what: "distance_min",
                value: self.distance_min,
            });
        }
        if self.distance_max < self.distance_min {
            return Err(Error::OutOfRange {
                what: "distance_max",
                value: self.distance_max,
            });
        }
        Ok(())
    }

    /// Mean received power `g * d^-gamma` at distance `d`.
    pub fn received_power(&self, distance: f64) -> f64 {
        self.reference_gain * libm::pow(distance, -self.path_loss_exponent)
    }

    /// Distance of a client from the transmitter, fixed by `(seed, client_id)`.
    pub fn client_distance(&self, client_id: usize) -> f64 {
        let mut rng = seed::rng(self.seed, Stream::Geometry, &[client_id as u64]);
        if self.distance_max > self.distance_min {
            rng.random_range(self.distance_min..self.distance_max)
        } else {
            self.distance_min
        }
    }

    pub fn snr_db(&self, distance: f64) -> f64 {
        10.0 * libm::log10(self.received_power(distance) / self.noise_power)
    }
}

/// One labelled observation: 16 phases in (-pi, pi] followed by 16 powers.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSample {
    pub features: [f64; FEATURES],
    pub label: Modulation,
}

impl SpectrumSample {
    pub fn new(features: [f64; FEATURES], label: Modulation) -> Result<Self> {
        let (phases, powers) = features.split_at(SYMBOLS_PER_SAMPLE);
        for &ph in phases {
            if !(ph > -PI && ph <= PI) {
                return Err(Error::OutOfRange {
                    what: "phase feature",
                    value: ph,
                });
            }
        }
        for &pw in powers {
            if !(pw >= 0.0 && pw.is_finite()) {
                return Err(Error::OutOfRange {
                    what: "power feature",
                    value: pw,
                });
            }
        }
        Ok(SpectrumSample { features, label })
    }

    pub fn phases(&self) -> &[f64] {
        &self.features[..SYMBOLS_PER_SAMPLE]
    }

    pub fn powers(&self) -> &[f64] {
        &self.features[SYMBOLS_PER_SAMPLE..]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetId {
    Client(usize),
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub id: DatasetId,
    samples: Vec<SpectrumSample>,
}

impl Dataset {
    pub fn new(id: DatasetId, samples: Vec<SpectrumSample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        Ok(Dataset { id, samples })
    }

    pub fn samples(&self) -> &[SpectrumSample] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [SpectrumSample] {
        &mut self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn into_samples(self) -> Vec<SpectrumSample> {
        self.samples
    }
}

/// Wraps an `atan2` result into (-pi, pi].
fn principal_phase(z: Complex64) -> f64 {
    let ph = libm::atan2(z.im, z.re);
    if ph <= -PI {
        PI
    } else {
        ph
    }
}

/// Phase and power features of 16 complex baseband values.
///
/// `out[j]` is the four-quadrant phase of `iq[j]` in (-pi, pi] and
/// `out[16 + j]` is `|iq[j]|^2`.
pub fn features_from_iq(iq: &[Complex64]) -> Result<[f64; FEATURES]> {
    if iq.len() != SYMBOLS_PER_SAMPLE {
        return Err(Error::Length {
            what: "iq samples",
            expected: SYMBOLS_PER_SAMPLE,
            actual: iq.len(),
        });
    }
    let mut out = [0.0; FEATURES];
    for (j, z) in iq.iter().enumerate() {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite("iq sample"));
        }
        out[j] = principal_phase(*z);
        out[SYMBOLS_PER_SAMPLE + j] = z.norm_sqr();
    }
    Ok(out)
}

/// Non-coherent front end over a received burst of `L + 1` symbols.
///
/// Output `j` is `-i (r[j+1] conj(r[j]))^2 / (|r[j]|^2 |r[j+1]|)`: its phase
/// is twice the phase change between consecutive symbols less a quarter
/// turn. The unknown carrier rotation cancels, BPSK transitions land on
/// -pi/2 and QPSK transitions on -pi/2 or pi/2, clear of the wrap at pi.
/// Its magnitude is `|r[j+1]|`, so the power feature is the received symbol
/// power. A zero input symbol yields zero.
const QUARTER_TURN_BACK: Complex64 = Complex64::new(0.0, -1.0);

pub fn differential_square(rx: &[Complex64]) -> Vec<Complex64> {
    rx.windows(2)
        .map(|w| {
            let (prev, cur) = (w[0], w[1]);
            let den = prev.norm_sqr() * cur.norm();
            if den > 0.0 {
                let d = cur * prev.conj();
                d * d * QUARTER_TURN_BACK / den
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect()
}

fn draw_sample<R: Rng>(
    rng: &mut R,
    distance: f64,
    channel: &ChannelConfig,
    label_balance: f64,
) -> SpectrumSample {
    let label = if rng.random_bool(label_balance) {
        Modulation::Qpsk
    } else {
        Modulation::Bpsk
    };
    let amplitude = libm::sqrt(channel.received_power(distance));
    let rotation = rng.random_range(0.0..TAU);
    let sigma = libm::sqrt(channel.noise_power / 2.0);
    let mut rx = [Complex64::new(0.0, 0.0); SYMBOLS_PER_SAMPLE + 1];
    for r in rx.iter_mut() {
        let symbol = rng.random_range(0..label.order());
        let phase = rotation + label.symbol_phase(symbol);
        let (s, c) = libm::sincos(phase);
        let ni: f64 = rng.sample(StandardNormal);
        let nq: f64 = rng.sample(StandardNormal);
        *r = Complex64::new(amplitude * c + sigma * ni, amplitude * s + sigma * nq);
    }
    let front = differential_square(&rx);
    let features = features_from_iq(&front).expect("front end yields 16 finite values");
    SpectrumSample { features, label }
}

fn check_generation(num_samples: usize, channel: &ChannelConfig, label_balance: f64) -> Result<()> {
    if num_samples == 0 {
        return Err(Error::Empty("num_samples"));
    }
    channel.validate()?;
    check_probability("label_balance", label_balance)
}

/// Local training data of one client. `label_balance` is the probability of
/// a QPSK label. Deterministic in `(channel.seed, client_id, num_samples)`.
pub fn generate_client_dataset(
    client_id: usize,
    num_samples: usize,
    channel: &ChannelConfig,
    label_balance: f64,
) -> Result<Dataset> {
    check_generation(num_samples, channel, label_balance)?;
    let distance = channel.client_distance(client_id);
    let mut rng = seed::rng(channel.seed, Stream::Samples, &[client_id as u64]);
    let samples = (0..num_samples)
        .map(|_| draw_sample(&mut rng, distance, channel, label_balance))
        .collect();
    Dataset::new(DatasetId::Client(client_id), samples)
}

/// Held-out data observed from every client location in turn
/// (sample `s` is taken at client `s % num_clients`).
pub fn generate_test_dataset(
    num_clients: usize,
    num_samples: usize,
    channel: &ChannelConfig,
    label_balance: f64,
) -> Result<Dataset> {
    if num_clients == 0 {
        return Err(Error::Empty("client set"));
    }
    check_generation(num_samples, channel, label_balance)?;
    let distances: Vec<f64> = (0..num_clients)
        .map(|c| channel.client_distance(c))
        .collect();
    let mut rng = seed::rng(channel.seed, Stream::TestSet, &[num_clients as u64]);
    let samples = (0..num_samples)
        .map(|s| draw_sample(&mut rng, distances[s % num_clients], channel, label_balance))
        .collect();
    Dataset::new(DatasetId::Test, samples)
}
