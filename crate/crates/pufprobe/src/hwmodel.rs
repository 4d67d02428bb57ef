//! Behavioral simulation of the device-under-test and the probe's
//! measurement chain: per-device diode cut-in voltages, regulator outputs and
//! oscillator period drawn from calibrated process-variation distributions,
//! an ideal-quantization ADC front end with per-sample noise and bounded slow
//! drift, a serial query surface for regulator/clock readout, and the probe
//! MCU's ADC fingerprint.
//!
//! Everything is seeded: the same (seed, parameters, call sequence) replays
//! the same measurements bit for bit.

use std::cell::Cell;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{parse_kv, parse_value, ConfigError};
use crate::sigcore::{DiodeVector, Nominals, DIODE_COUNT};

/// Signed 12-bit differential ADC code range of the probe MCU.
pub const MCU_ADC_MIN: i32 = -2048;
pub const MCU_ADC_MAX: i32 = 2047;

/// Supply sweep range the devices are specified for, volts.
pub const SUPPLY_MIN_V: f64 = 70.0;
pub const SUPPLY_MAX_V: f64 = 230.0;

#[derive(Debug, Error)]
pub enum HwError {
    #[error("port {0} outside 0..{DIODE_COUNT}")]
    InvalidPort(usize),
    #[error("invalid simulation parameter: {0}")]
    InvalidParams(String),
    #[error("ground truth out of range: {0}")]
    InvalidGroundTruth(String),
    #[error("supply {0} V outside [{SUPPLY_MIN_V}, {SUPPLY_MAX_V}]")]
    SupplyOutOfRange(f64),
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("fixture parse error: {0}")]
    Fixture(#[from] serde_json::Error),
}

/// True manufacturing state of one device: what the hardware "is", before
/// any measurement noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IedGroundTruth {
    pub device_id: String,
    /// True diode cut-in voltages, millivolts, ports 0..11.
    pub diode_mv: [f64; DIODE_COUNT],
    /// True regulator outputs, volts.
    pub vrg_v: [f64; 3],
    /// True oscillator period, nanoseconds, integer-femtosecond resolution.
    pub tp_ns: f64,
}

impl IedGroundTruth {
    pub fn new(
        device_id: impl Into<String>,
        diode_mv: [f64; DIODE_COUNT],
        vrg_v: [f64; 3],
        tp_ns: f64,
    ) -> Result<Self, HwError> {
        let truth = Self { device_id: device_id.into(), diode_mv, vrg_v, tp_ns };
        truth.validate()?;
        Ok(truth)
    }

    pub fn validate(&self) -> Result<(), HwError> {
        for (port, &mv) in self.diode_mv.iter().enumerate() {
            if !(480.0..=540.0).contains(&mv) {
                return Err(HwError::InvalidGroundTruth(format!(
                    "diode {port} at {mv} mV outside [480, 540]"
                )));
            }
        }
        let nominals = Nominals::default();
        let max_dev_v = [0.15, 0.15, 0.30];
        for idx in 0..3 {
            let dev = (nominals.vrg_v[idx] - self.vrg_v[idx]).abs();
            if dev > max_dev_v[idx] + 1e-9 {
                return Err(HwError::InvalidGroundTruth(format!(
                    "regulator {idx} at {} V deviates {dev:.3} V from nominal",
                    self.vrg_v[idx]
                )));
            }
        }
        let dev_fs = (nominals.tp_ns - self.tp_ns) * 1e6;
        if dev_fs.abs() > 63.0 + 1e-3 || (dev_fs - dev_fs.round()).abs() > 1e-3 {
            return Err(HwError::InvalidGroundTruth(format!(
                "period {} ns not an integer-fs deviation within +/-63 fs",
                self.tp_ns
            )));
        }
        Ok(())
    }
}

/// Probe analog front end. The follower path cancels the multiplexer
/// on-resistance, so only a constant residual offset and per-sample noise
/// reach the ADC; the ADC itself quantizes ideally.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeHardware {
    /// Diode bias current, mA.
    pub bias_current_ma: f64,
    /// Multiplexer channel on-resistance, ohms (documented, compensated).
    pub mux_r_on_ohm: f64,
    /// ADC full-scale range, volts (bipolar: +/- this value).
    pub adc_fsr_v: f64,
    pub adc_bits: u32,
    /// Fast per-sample noise, millivolts (standard deviation).
    pub sample_noise_sigma_mv: f64,
    /// Leftover systematic offset after R_ON compensation, millivolts.
    pub residual_offset_mv: f64,
}

impl Default for ProbeHardware {
    fn default() -> Self {
        Self {
            bias_current_ma: 1.0,
            mux_r_on_ohm: 180.0,
            adc_fsr_v: 2.048,
            adc_bits: 16,
            sample_noise_sigma_mv: 0.15,
            residual_offset_mv: 0.05,
        }
    }
}

impl ProbeHardware {
    /// ADC resolution in millivolts: 2 * FSR / 2^bits.
    pub fn step_mv(&self) -> f64 {
        2.0 * self.adc_fsr_v * 1000.0 / 2f64.powi(self.adc_bits as i32)
    }

    fn validate(&self) -> Result<(), HwError> {
        if self.bias_current_ma <= 0.0 {
            return Err(HwError::InvalidParams("bias_current_ma must be positive".into()));
        }
        if self.adc_bits == 0 || self.adc_bits > 32 || self.adc_fsr_v <= 0.0 {
            return Err(HwError::InvalidParams("adc_bits in 1..=32, adc_fsr_v positive".into()));
        }
        if self.sample_noise_sigma_mv < 0.0 {
            return Err(HwError::InvalidParams("sample_noise_sigma_mv must be >= 0".into()));
        }
        Ok(())
    }
}

/// Operating conditions plus the slow per-diode drift they induce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentState {
    pub supply_v: f64,
    pub temp_c: f64,
    /// Slow offsets added to each diode measurement, millivolts.
    pub drift_mv: [f64; DIODE_COUNT],
}

/// Probe MCU ADC fingerprint: the device-unique location and spread of
/// repeated differential reads.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McuAdcPuf {
    /// Mean output code, LSB.
    pub mu: f64,
    /// Standard deviation of output codes, LSB.
    pub sigma: f64,
}

impl McuAdcPuf {
    pub fn new(mu: f64, sigma: f64) -> Result<Self, HwError> {
        if sigma < 0.0 || !mu.is_finite() || !sigma.is_finite() {
            return Err(HwError::InvalidParams("mcu adc mu/sigma out of range".into()));
        }
        Ok(Self { mu, sigma })
    }

    /// Draws a device-unique fingerprint, deterministic per seed.
    pub fn synth(seed: u64, params: &SimParams) -> Self {
        let mut rng = ChaCha8Rng::from_seed(domain_seed(seed, 0, 0, *b"mcu_puf1"));
        let mu = rng.gen_range(-params.mcu_mu_max_abs_lsb..=params.mcu_mu_max_abs_lsb);
        let sigma = rng.gen_range(params.mcu_sigma_min_lsb..=params.mcu_sigma_max_lsb);
        Self { mu, sigma }
    }
}

/// Process-variation and measurement-model parameters with calibrated
/// defaults. Loadable from a `key = value` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub diode_mean_mv: f64,
    pub diode_sigma_mv: f64,
    pub diode_min_mv: f64,
    pub diode_max_mv: f64,
    /// Max regulator deviation magnitude per rail, millivolts (10 mV steps).
    pub vrg_max_dev_mv: [u32; 3],
    /// Max oscillator deviation magnitude, femtoseconds.
    pub tp_max_dev_fs: i64,
    /// Bound on slow per-diode drift, millivolts.
    pub drift_max_mv: f64,
    pub nominals: Nominals,
    pub probe_hw: ProbeHardware,
    pub mcu_mu_max_abs_lsb: f64,
    pub mcu_sigma_min_lsb: f64,
    pub mcu_sigma_max_lsb: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            diode_mean_mv: 512.0,
            diode_sigma_mv: 6.0,
            diode_min_mv: 480.0,
            diode_max_mv: 540.0,
            vrg_max_dev_mv: [150, 150, 300],
            tp_max_dev_fs: 63,
            drift_max_mv: 0.5,
            nominals: Nominals::default(),
            probe_hw: ProbeHardware::default(),
            mcu_mu_max_abs_lsb: 8.0,
            mcu_sigma_min_lsb: 2.0,
            mcu_sigma_max_lsb: 6.0,
        }
    }
}

impl SimParams {
    /// A configuration with every random error source disabled, for exact
    /// golden-value checks.
    pub fn noise_free() -> Self {
        let mut p = Self::default();
        p.probe_hw.sample_noise_sigma_mv = 0.0;
        p.probe_hw.residual_offset_mv = 0.0;
        p.drift_max_mv = 0.0;
        p
    }

    pub fn validate(&self) -> Result<(), HwError> {
        if self.diode_sigma_mv <= 0.0 {
            return Err(HwError::InvalidParams("diode_sigma_mv must be positive".into()));
        }
        if self.diode_min_mv >= self.diode_max_mv {
            return Err(HwError::InvalidParams("diode_min_mv must be below diode_max_mv".into()));
        }
        if !(480.0..=540.0).contains(&self.diode_min_mv)
            || !(480.0..=540.0).contains(&self.diode_max_mv)
        {
            return Err(HwError::InvalidParams("diode bounds must stay within [480, 540]".into()));
        }
        for (idx, (&dev, limit)) in
            self.vrg_max_dev_mv.iter().zip([150u32, 150, 300]).enumerate()
        {
            if dev % 10 != 0 || dev > limit {
                return Err(HwError::InvalidParams(format!(
                    "vrg_max_dev_mv[{idx}] must be a multiple of 10 within 0..={limit}"
                )));
            }
        }
        if !(0..=63).contains(&self.tp_max_dev_fs) {
            return Err(HwError::InvalidParams("tp_max_dev_fs must be in 0..=63".into()));
        }
        if self.drift_max_mv < 0.0 {
            return Err(HwError::InvalidParams("drift_max_mv must be >= 0".into()));
        }
        if self.mcu_sigma_min_lsb < 0.0 || self.mcu_sigma_min_lsb > self.mcu_sigma_max_lsb {
            return Err(HwError::InvalidParams("mcu sigma range must be 0 <= min <= max".into()));
        }
        self.probe_hw.validate()
    }

    pub fn from_config_str(text: &str) -> Result<Self, HwError> {
        let mut params = Self::default();
        for (key, value) in parse_kv(text)? {
            params.apply(&key, &value)?;
        }
        params.validate()?;
        Ok(params)
    }

    pub fn from_config_file(path: impl AsRef<Path>) -> Result<Self, HwError> {
        Self::from_config_str(&fs::read_to_string(path)?)
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "diode_mean_mv" => self.diode_mean_mv = parse_value(key, value)?,
            "diode_sigma_mv" => self.diode_sigma_mv = parse_value(key, value)?,
            "diode_min_mv" => self.diode_min_mv = parse_value(key, value)?,
            "diode_max_mv" => self.diode_max_mv = parse_value(key, value)?,
            "vrg_max_dev_mv_1" => self.vrg_max_dev_mv[0] = parse_value(key, value)?,
            "vrg_max_dev_mv_2" => self.vrg_max_dev_mv[1] = parse_value(key, value)?,
            "vrg_max_dev_mv_3" => self.vrg_max_dev_mv[2] = parse_value(key, value)?,
            "tp_max_dev_fs" => self.tp_max_dev_fs = parse_value(key, value)?,
            "drift_max_mv" => self.drift_max_mv = parse_value(key, value)?,
            "bias_current_ma" => self.probe_hw.bias_current_ma = parse_value(key, value)?,
            "mux_r_on_ohm" => self.probe_hw.mux_r_on_ohm = parse_value(key, value)?,
            "adc_fsr_v" => self.probe_hw.adc_fsr_v = parse_value(key, value)?,
            "adc_bits" => self.probe_hw.adc_bits = parse_value(key, value)?,
            "sample_noise_sigma_mv" => {
                self.probe_hw.sample_noise_sigma_mv = parse_value(key, value)?
            }
            "residual_offset_mv" => self.probe_hw.residual_offset_mv = parse_value(key, value)?,
            "mcu_mu_max_abs_lsb" => self.mcu_mu_max_abs_lsb = parse_value(key, value)?,
            "mcu_sigma_min_lsb" => self.mcu_sigma_min_lsb = parse_value(key, value)?,
            "mcu_sigma_max_lsb" => self.mcu_sigma_max_lsb = parse_value(key, value)?,
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }
}

fn domain_seed(seed: u64, a: u64, b: u64, tag: [u8; 8]) -> [u8; 32] {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&a.to_le_bytes());
    key[16..24].copy_from_slice(&b.to_le_bytes());
    key[24..32].copy_from_slice(&tag);
    key
}

/// Synthesizes the ground truth of one device, deterministic per seed.
pub fn synth_ied(seed: u64, params: &SimParams) -> Result<IedGroundTruth, HwError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::from_seed(domain_seed(seed, 0, 0, *b"ied_syn1"));

    let normal = Normal::new(params.diode_mean_mv, params.diode_sigma_mv)
        .map_err(|e| HwError::InvalidParams(e.to_string()))?;
    let mut diode_mv = [0.0; DIODE_COUNT];
    for mv in &mut diode_mv {
        // Truncated normal via rejection; bounds are several sigma wide.
        *mv = loop {
            let draw = normal.sample(&mut rng);
            if (params.diode_min_mv..=params.diode_max_mv).contains(&draw) {
                break draw;
            }
        };
    }

    let mut vrg_v = [0.0; 3];
    for (idx, v) in vrg_v.iter_mut().enumerate() {
        let steps = params.vrg_max_dev_mv[idx] as i32 / 10;
        let dev_mv = f64::from(rng.gen_range(-steps..=steps) * 10);
        *v = params.nominals.vrg_v[idx] - dev_mv / 1000.0;
    }

    let dev_fs = rng.gen_range(-params.tp_max_dev_fs..=params.tp_max_dev_fs);
    let tp_ns = params.nominals.tp_ns - dev_fs as f64 * 1e-6;

    IedGroundTruth::new(format!("IED-{seed:04x}"), diode_mv, vrg_v, tp_ns)
}

/// One simulated device instance: ground truth plus current environment.
/// Mutating the environment re-draws the bounded drift offsets
/// deterministically from (device seed, supply, temperature).
#[derive(Debug, Clone)]
pub struct SimulatedIed {
    truth: IedGroundTruth,
    seed: u64,
    drift_max_mv: f64,
    env: EnvironmentState,
    diode_samples: Cell<u64>,
    serial_queries: Cell<u64>,
}

impl SimulatedIed {
    /// Default environment: 230 V supply at 25 C.
    pub fn new(truth: IedGroundTruth, seed: u64, params: &SimParams) -> Result<Self, HwError> {
        params.validate()?;
        let mut dev = Self {
            truth,
            seed,
            drift_max_mv: params.drift_max_mv,
            env: EnvironmentState { supply_v: SUPPLY_MAX_V, temp_c: 25.0, drift_mv: [0.0; 12] },
            diode_samples: Cell::new(0),
            serial_queries: Cell::new(0),
        };
        dev.set_environment(SUPPLY_MAX_V, 25.0)?;
        Ok(dev)
    }

    pub fn synth(seed: u64, params: &SimParams) -> Result<Self, HwError> {
        Self::new(synth_ied(seed, params)?, seed, params)
    }

    pub fn truth(&self) -> &IedGroundTruth {
        &self.truth
    }

    pub fn device_id(&self) -> &str {
        &self.truth.device_id
    }

    pub fn environment(&self) -> &EnvironmentState {
        &self.env
    }

    /// Re-draws drift for the new operating point. Same (seed, supply, temp)
    /// always produces the same offsets.
    pub fn set_environment(&mut self, supply_v: f64, temp_c: f64) -> Result<&EnvironmentState, HwError> {
        if !(SUPPLY_MIN_V..=SUPPLY_MAX_V).contains(&supply_v) {
            return Err(HwError::SupplyOutOfRange(supply_v));
        }
        let mut drift_mv = [0.0; DIODE_COUNT];
        if self.drift_max_mv > 0.0 {
            let mut rng = ChaCha8Rng::from_seed(domain_seed(
                self.seed,
                supply_v.to_bits(),
                temp_c.to_bits(),
                *b"driftenv",
            ));
            let dist = Uniform::new_inclusive(-self.drift_max_mv, self.drift_max_mv);
            for d in &mut drift_mv {
                *d = dist.sample(&mut rng);
            }
        }
        self.env = EnvironmentState { supply_v, temp_c, drift_mv };
        Ok(&self.env)
    }

    pub fn set_supply(&mut self, supply_v: f64) -> Result<&EnvironmentState, HwError> {
        self.set_environment(supply_v, self.env.temp_c)
    }

    /// One ADC conversion of the selected diode through the probe front end:
    /// truth + drift + residual offset + fresh noise, quantized to the ADC
    /// step.
    pub fn sample_diode(
        &self,
        port: usize,
        hw: &ProbeHardware,
        rng: &mut ChaCha8Rng,
    ) -> Result<f64, HwError> {
        if port >= DIODE_COUNT {
            return Err(HwError::InvalidPort(port));
        }
        self.diode_samples.set(self.diode_samples.get() + 1);
        let mut mv = self.truth.diode_mv[port] + self.env.drift_mv[port] + hw.residual_offset_mv;
        if hw.sample_noise_sigma_mv > 0.0 {
            let noise = Normal::new(0.0, hw.sample_noise_sigma_mv)
                .expect("validated noise sigma")
                .sample(rng);
            mv += noise;
        }
        let step = hw.step_mv();
        Ok((mv / step).round() * step)
    }

    /// Serial API: `VRG?` reports the three regulator outputs in volts with
    /// two decimals, `TP?` the oscillator period in ns with six decimals.
    /// Anything else answers `ERR`.
    pub fn serial_query(&self, command: &str) -> String {
        self.serial_queries.set(self.serial_queries.get() + 1);
        match command {
            "VRG?" => format!(
                "{:.2},{:.2},{:.2}",
                self.truth.vrg_v[0], self.truth.vrg_v[1], self.truth.vrg_v[2]
            ),
            "TP?" => format!("{:.6}", self.truth.tp_ns),
            _ => "ERR".to_string(),
        }
    }

    pub fn diode_sample_count(&self) -> u64 {
        self.diode_samples.get()
    }

    pub fn serial_query_count(&self) -> u64 {
        self.serial_queries.get()
    }

    /// The noise-free diode vector implied by ground truth (no drift, no
    /// offset), handy for oracle comparisons in tests.
    pub fn true_diode_vector(&self) -> DiodeVector {
        DiodeVector::new(self.truth.diode_mv).expect("validated ground truth")
    }
}

/// Draws `n` MCU ADC conversions: a rounded, clamped normal over integer
/// codes.
pub fn sample_mcu_adc(puf: &McuAdcPuf, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<i32>, HwError> {
    if n < 2 {
        return Err(HwError::TooFewSamples { need: 2, got: n });
    }
    let normal =
        Normal::new(puf.mu, puf.sigma).map_err(|e| HwError::InvalidParams(e.to_string()))?;
    Ok((0..n)
        .map(|_| {
            let code = normal.sample(rng).round();
            (code as i32).clamp(MCU_ADC_MIN, MCU_ADC_MAX)
        })
        .collect())
}

/// Sample mean and sample standard deviation (n-1 denominator).
pub fn estimate_mu_sigma(samples: &[i32]) -> Result<(f64, f64), HwError> {
    if samples.len() < 2 {
        return Err(HwError::TooFewSamples { need: 2, got: samples.len() });
    }
    let n = samples.len" as f64;
    let n = samples.len() as f64;
    let mean = samples.iter().map(|&s| f64::from(s)).sum::<f64>() / n;
    let ss = samples.iter().map(|&s| (f64::from(s) - mean).powi(2)).sum::<f64>();
    Ok((mean, (ss / (n - 1.0)).sqrt()))
}

/// Writes a fleet of ground truths as a JSON fixture.
pub fn save_fleet(path: impl AsRef<Path>, fleet: &[IedGroundTruth]) -> Result<(), HwError> {
    let body = serde_json::to_string_pretty(fleet)?;
    fs::write(path, body + "\n")?;
    Ok(())
}

pub fn load_fleet(path: impl AsRef<Path>) -> Result<Vec<IedGroundTruth>, HwError> {
    let body = fs::read_to_string(path)?;
    let fleet: Vec<IedGroundTruth> = serde_json::from_str(&body)?;
    for truth in &fleet {
        truth.validate()?;
    }
    Ok(fleet)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigcore::{diode_signature, hamming};

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn reference_device() -> SimulatedIed {
        let truth = IedGroundTruth::new(
            "IED-1",
            [500.8, 516.8, 513.4, 514.2, 511.5, 514.1, 514.3, 502.0, 516.1, 517.6, 515.1, 514.4],
            [3.26, 4.95, 14.85],
            19.999945,
        )
        .unwrap();
        SimulatedIed::new(truth, 1, &SimParams::noise_free()).unwrap()
    }

    #[test]
    fn synth_is_deterministic() {
        let params = SimParams::default();
        let a = synth_ied(42, &params).unwrap();
        let b = synth_ied(42, &params).unwrap();
        assert_eq!(a, b);
        let c = synth_ied(43, &params).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn synth_respects_bounds() {
        let params = SimParams::default();
        for seed in 0..1000 {
            let truth = synth_ied(seed, &params).unwrap();
            assert!(truth.diode_mv.iter().all(|&mv| (480.0..=540.0).contains(&mv)));
            truth.validate().unwrap();
        }
    }

    #[test]
    fn distinct_seeds_give_distinct_signatures() {
        let params = SimParams::default();
        let mut nonzero = 0;
        for pair in 0..1000u64 {
            let a = synth_ied(2 * pair, &params).unwrap();
            let b = synth_ied(2 * pair + 1, &params).unwrap();
            let sig_a = diode_signature(&DiodeVector::new(a.diode_mv).unwrap());
            let sig_b = diode_signature(&DiodeVector::new(b.diode_mv).unwrap());
            if hamming(&sig_a, &sig_b).unwrap().fraction > 0.0 {
                nonzero += 1;
            }
        }
        assert!(nonzero >= 999, "only {nonzero}/1000 pairs differed");
    }

    #[test]
    fn degenerate_params_rejected() {
        let mut params = SimParams::default();
        params.diode_sigma_mv = -1.0;
        assert!(synth_ied(0, &params).is_err());

        let mut params = SimParams::default();
        params.vrg_max_dev_mv = [150, 155, 300];
        assert!(params.validate().is_err());
    }

    #[test]
    fn sample_quantizes_to_adc_step() {
        let dev = reference_device();
        let hw = SimParams::noise_free().probe_hw;
        let mv = dev.sample_diode(0, &hw, &mut rng(0)).unwrap();
        assert_eq!(mv, 500.8125); // nearest 62.5 uV step above 500.8

        // Every noisy sample still lands on the grid.
        let hw_noisy = ProbeHardware::default();
        let step = hw_noisy.step_mv();
        let mut r = rng(7);
        for _ in 0..100 {
            let mv = dev.sample_diode(3, &hw_noisy, &mut r).unwrap();
            let steps = mv / step;
            assert!((steps - steps.round()).abs() < 1e-9);
        }

        assert!(matches!(dev.sample_diode(12, &hw, &mut rng(0)), Err(HwError::InvalidPort(12))));
    }

    #[test]
    fn sample_noise_matches_configured_sigma() {
        let dev = reference_device();
        let mut hw = ProbeHardware::default();
        hw.sample_noise_sigma_mv = 0.15;
        let mut r = rng(11);
        let samples: Vec<f64> =
            (0..10_000).map(|_| dev.sample_diode(5, &hw, &mut r).unwrap()).collect();
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>()
            / (samples.len() - 1) as f64;
        let sd = var.sqrt();
        assert!((0.13..=0.17).contains(&sd), "sample sd {sd}");
    }

    #[test]
    fn serial_query_formats() {
        let dev = reference_device();
        assert_eq!(dev.serial_query("TP?"), "19.999945");
        assert_eq!(dev.serial_query("VRG?"), "3.26,4.95,14.85");
        assert_eq!(dev.serial_query("FOO?"), "ERR");
        assert_eq!(dev.serial_query_count(), 3);
    }

    #[test]
    fn environment_drift_is_bounded_and_deterministic() {
        let params = SimParams::default();
        let mut dev = SimulatedIed::synth(5, &params).unwrap();

        let drift_a = dev.set_environment(230.0, 25.0).unwrap().drift_mv;
        assert!(drift_a.iter().all(|d| d.abs() <= params.drift_max_mv));

        let drift_b = dev.set_environment(230.0, 25.0).unwrap().drift_mv;
        assert_eq!(drift_a, drift_b);

        let drift_c = dev.set_environment(70.0, 25.0).unwrap().drift_mv;
        assert_ne!(drift_a, drift_c);

        assert!(matches!(dev.set_environment(300.0, 25.0), Err(HwError::SupplyOutOfRange(_))));
    }

    #[test]
    fn mcu_adc_estimation() {
        let quiet = McuAdcPuf::new(3.0, 0.0).unwrap();
        let samples = sample_mcu_adc(&quiet, 100, &mut rng(1)).unwrap();
        let (mu, sigma) = estimate_mu_sigma(&samples).unwrap();
        assert_eq!(mu, 3.0);
        assert_eq!(sigma, 0.0);

        assert!(sample_mcu_adc(&quiet, 1, &mut rng(1)).is_err());
        assert!(estimate_mu_sigma(&[1]).is_err());

        // |estimated mu - mu| <= 4 sigma / sqrt(n) in at least 99% of trials.
        let puf = McuAdcPuf::new(-4.5, 3.0).unwrap();
        let n = 10_000;
        let bound = 4.0 * puf.sigma / (n as f64).sqrt();
        let mut r = rng(2);
        let mut hits = 0;
        for _ in 0..200 {
            let (mu, _) = estimate_mu_sigma(&sample_mcu_adc(&puf, n, &mut r).unwrap()).unwrap();
            if (mu - puf.mu).abs() <= bound {
                hits += 1;
            }
        }
        assert!(hits >= 198, "only {hits}/200 trials within bound");
    }

    #[test]
    fn mcu_fingerprints_are_distinguishable() {
        let params = SimParams::default();
        let a = McuAdcPuf::synth(100, &params);
        let b = McuAdcPuf::synth(200, &params);
        let n = 10_000;
        let (mu_a, sigma_a) = estimate_mu_sigma(&sample_mcu_adc(&a, n, &mut rng(3)).unwrap()).unwrap();
        let (mu_b, sigma_b) = estimate_mu_sigma(&sample_mcu_adc(&b, n, &mut rng(4)).unwrap()).unwrap();
        let se = (sigma_a.powi(2) / n as f64 + sigma_b.powi(2) / n as f64).sqrt();
        assert!((mu_a - mu_b).abs() > se, "means {mu_a} and {mu_b} not separated");
    }

    #[test]
    fn params_load_from_config() {
        let text = "diode_sigma_mv = 4.5\nadc_bits = 12\nsample_noise_sigma_mv = 0\n";
        let params = SimParams::from_config_str(text).unwrap();
        assert_eq!(params.diode_sigma_mv, 4.5);
        assert_eq!(params.probe_hw.adc_bits, 12);
        assert_eq!(params.probe_hw.sample_noise_sigma_mv, 0.0);
        assert_eq!(params.diode_mean_mv, 512.0); // untouched default

        assert!(SimParams::from_config_str("nonsense_key = 3").is_err());
        assert!(SimParams::from_config_str("diode_sigma_mv = -2").is_err());
    }

    #[test]
    fn fleet_fixture_round_trip() {
        let params = SimParams::default();
        let fleet: Vec<_> = (0..3).map(|s| synth_ied(s, &params).unwrap()).collect();
        let dir = std::env::temp_dir().join("pufprobe-hwmodel-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("fleet.json");
        save_fleet(&path, &fleet).unwrap();
        let loaded = load_fleet(&path).unwrap();
        assert_eq!(fleet, loaded);
        std::fs::remove_file(&path).ok();
    }
}
