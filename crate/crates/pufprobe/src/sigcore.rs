//! Bit-level encoding of PUF signatures: pairwise diode-comparison bits,
//! regulator/clock deviation fields, and challenge-selected partial
//! bit-streams. Everything here is pure and deterministic.

use std::fmt;
use std::str::FromStr;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Number of output-port diodes measured per device.
pub const DIODE_COUNT: usize = 12;
/// Ordered pairwise comparisons over 12 diodes: 12 * 11.
pub const DIODE_BITS: usize = DIODE_COUNT * (DIODE_COUNT - 1);
/// Three 5-bit regulator fields plus one 7-bit clock field.
pub const DELTA_BITS: usize = 22;
/// Full composite signature length.
pub const SIGNATURE_BITS: usize = DIODE_BITS + DELTA_BITS;

/// Regulator deviations are quantized to this step before encoding.
pub const VOLT_STEP_MV: i32 = 10;
/// 4-bit magnitude ceiling for a regulator field (in 10 mV steps).
pub const VOLT_MAG_MAX: i32 = 15;
/// 6-bit magnitude ceiling for the clock field (in fs).
pub const PERIOD_MAG_MAX: i64 = 63;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SigError {
    #[error("bit-string length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid bit character {0:?} (expected '0' or '1')")]
    InvalidBit(char),
    #[error("invalid hex bit-string {0:?}")]
    InvalidHex(String),
    #[error("diode voltage {0} mV outside (0, 1000)")]
    InvalidVoltage(f64),
    #[error("expected exactly {DIODE_COUNT} diode voltages, got {0}")]
    WrongDiodeCount(usize),
    #[error("challenge port {0} outside 0..{DIODE_COUNT}")]
    PortOutOfRange(u8),
    #[error("duplicate port {0} in challenge")]
    DuplicatePort(u8),
    #[error("challenge must name 2..=12 ports, got {0}")]
    BadChallengeSize(usize),
}

/// An ordered sequence of bits with exact ASCII '0'/'1' serialization.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitString {
    bits: Vec<u8>,
}

impl BitString {
    pub fn new() -> Self {
        Self { bits: Vec::new() }
    }

    pub fn with_capacity(n: usize) -> Self {
        Self { bits: Vec::with_capacity(n) }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn push(&mut self, bit: bool) {
        self.bits.push(u8::from(bit));
    }

    pub fn get(&self, idx: usize) -> Option<bool> {
        self.bits.get(idx).map(|&b| b == 1)
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.bits.iter().map(|&b| b == 1)
    }

    /// Appends all bits of `other`.
    pub fn extend(&mut self, other: &BitString) {
        self.bits.extend_from_slice(&other.bits);
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        let mut out = self.clone();
        out.extend(other);
        out
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        Self { bits: bits.into_iter().map(u8::from).collect() }
    }

    /// Parses an ASCII '0'/'1' string.
    pub fn from_ascii(s: &str) -> Result<Self, SigError> {
        let mut bits = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => bits.push(0),
                '1' => bits.push(1),
                other => return Err(SigError::InvalidBit(other)),
            }
        }
        Ok(Self { bits })
    }

    pub fn to_ascii(&self) -> String {
        self.bits.iter().map(|&b| if b == 1 { '1' } else { '0' }).collect()
    }

    /// Hex form with explicit bit length, e.g. `"22:215ed7"`. Bits are packed
    /// MSB-first; the leading nibble is zero-padded when the length is not a
    /// multiple of four.
    pub fn to_hex(&self) -> String {
        let mut nibbles = String::new();
        let pad = (4 - self.bits.len() % 4) % 4;
        let mut acc = 0u8;
        let mut filled = pad;
        for &b in &self.bits {
            acc = (acc << 1) | b;
            filled += 1;
            if filled == 4 {
                nibbles.push(char::from_digit(u32::from(acc), 16).unwrap());
                acc = 0;
                filled = 0;
            }
        }
        format!("{}:{}", self.bits.len(), nibbles)
    }

    pub fn from_hex(s: &str) -> Result<Self, SigError> {
        let bad = || SigError::InvalidHex(s.to_string());
        let (len_part, hex_part) = s.split_once(':').ok_or_else(bad)?;
        let bit_len: usize = len_part.parse().map_err(|_| bad())?;
        if hex_part.len() != bit_len.div_ceil(4) {
            return Err(bad());
        }
        let mut bits = Vec::with_capacity(bit_len);
        for c in hex_part.chars() {
            let v = c.to_digit(16).ok_or_else(bad)? as u8;
            for shift in (0..4).rev() {
                bits.push((v >> shift) & 1);
            }
        }
        // Drop pad bits from the leading nibble; they must be zero.
        let pad = bits.len() - bit_len;
        if bits[..pad].iter().any(|&b| b != 0) {
            return Err(bad());
        }
        Ok(Self { bits: bits.split_off(pad) })
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_ascii())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({})", self.to_ascii())
    }
}

impl FromStr for BitString {
    type Err = SigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_ascii(s)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_ascii())
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Self::from_ascii(&s).map_err(de::Error::custom)
    }
}

/// The twelve output-port diode voltages of one device, in millivolts.
/// Index 0..11 follows the physical port order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiodeVector {
    v: [f64; DIODE_COUNT],
}

impl DiodeVector {
    /// Each voltage must sit in the forward-bias cut-in region (0, 1000) mV.
    pub fn new(v: [f64; DIODE_COUNT]) -> Result<Self, SigError> {
        for &mv in &v {
            if !mv.is_finite() || mv <= 0.0 || mv >= 1000.0 {
                return Err(SigError::InvalidVoltage(mv));
            }
        }
        Ok(Self { v })
    }

    pub fn from_slice(v: &[f64]) -> Result<Self, SigError> {
        let arr: [f64; DIODE_COUNT] =
            v.try_into().map_err(|_| SigError::WrongDiodeCount(v.len()))?;
        Self::new(arr)
    }

    pub fn voltages(&self) -> &[f64; DIODE_COUNT] {
        &self.v
    }

    pub fn get(&self, port: usize) -> Option<f64> {
        self.v.get(port).copied()
    }
}

/// Signed deviations of the regulated voltages and clock period from their
/// nominals, already quantized for encoding (mV in 10 mV steps, integer fs).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeltaFields {
    /// nominal - measured, millivolts, multiples of 10.
    pub dv_mv: [i32; 3],
    /// nominal - measured, femtoseconds.
    pub dtp_fs: i64,
}

impl DeltaFields {
    /// True when any field exceeds the encodable magnitude and will clamp.
    pub fn saturates(&self) -> bool {
        self.dv_mv.iter().any(|dv| dv.abs() / VOLT_STEP_MV > VOLT_MAG_MAX)
            || self.dtp_fs.abs() > PERIOD_MAG_MAX
    }
}

/// Nominal regulator voltages (V) and oscillator period (ns).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nominals {
    pub vrg_v: [f64; 3],
    pub tp_ns: f64,
}

impl Default for Nominals {
    fn default() -> Self {
        Self { vrg_v: [3.3, 5.0, 15.0], tp_ns: 20.0 }
    }
}

/// Composite device signature: 132 diode-comparison bits followed by 22
/// deviation-field bits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PufSignature {
    diode_bits: BitString,
    delta_bits: BitString,
}

impl PufSignature {
    pub fn new(diode_bits: BitString, delta_bits: BitString) -> Result<Self, SigError> {
        if diode_bits.len() != DIODE_BITS {
            return Err(SigError::LengthMismatch { expected: DIODE_BITS, got: diode_bits.len() });
        }
        if delta_bits.len() != DELTA_BITS {
            return Err(SigError::LengthMismatch { expected: DELTA_BITS, got: delta_bits.len() });
        }
        Ok(Self { diode_bits, delta_bits })
    }

    pub fn diode_bits(&self) -> &BitString {
        &self.diode_bits
    }

    pub fn delta_bits(&self) -> &BitString {
        &self.delta_bits
    }

    /// All 154 bits, diode part first.
    pub fn full_bits(&self) -> BitString {
        self.diode_bits.concat(&self.delta_bits)
    }

    pub fn total_len(&self) -> usize {
        self.diode_bits.len() + self.delta_bits.len()
    }
}

/// An ordered list of distinct ports to compare, 2..=12 of them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Challenge {
    ports: Vec<u8>,
}

impl Challenge {
    pub fn new(ports: Vec<u8>) -> Result<Self, SigError> {
        if ports.len() < 2 || ports.len() > DIODE_COUNT {
            return Err(SigError::BadChallengeSize(ports.len()));
        }
        let mut seen = [false; DIODE_COUNT];
        for &p in &ports {
            if usize::from(p) >= DIODE_COUNT {
                return Err(SigError::PortOutOfRange(p));
            }
            if seen[usize::from(p)] {
                return Err(SigError::DuplicatePort(p));
            }
            seen[usize::from(p)] = true;
        }
        Ok(Self { ports })
    }

    /// The full-width challenge in natural port order 0..11.
    pub fn identity() -> Self {
        Self { ports: (0..DIODE_COUNT as u8).collect() }
    }

    pub fn ports(&self) -> &[u8] {
        &self.ports
    }

    pub fn m(&self) -> usize {
        self.ports.len()
    }

    /// Number of response bits this challenge selects: m * (m - 1).
    pub fn bit_count(&self) -> usize {
        self.ports.len() * (self.ports.len() - 1)
    }
}

/// One pairwise comparison: true (bit 1) iff `va > vb`. Ties give 0.
pub fn compare_bit(va_mv: f64, vb_mv: f64) -> bool {
    va_mv > vb_mv
}

/// Position of the ordered pair (i, j) in the 132-bit row-major layout:
/// row i holds the 11 comparisons of diode i against every j != i.
pub fn pair_index(i: usize, j: usize) -> usize {
    debug_assert!(i != j && i < DIODE_COUNT && j < DIODE_COUNT);
    i * (DIODE_COUNT - 1) + if j < i { j } else { j - 1 }
}

/// The full 132-bit pairwise comparison signature, row-major over (i, j != i).
pub fn diode_signature(dv: &DiodeVector) -> BitString {
    let v = dv.voltages();
    let mut bits = BitString::with_capacity(DIODE_BITS);
    for i in 0..DIODE_COUNT {
        for j in 0..DIODE_COUNT {
            if i != j {
                bits.push(compare_bit(v[i], v[j]));
            }
        }
    }
    bits
}

/// Deviations of measured regulator voltages (V) and clock period (ns) from
/// nominal, as nominal - measured, quantized for encoding.
pub fn delta_fields(vrg_meas_v: [f64; 3], tp_meas_ns: f64, nominals: &Nominals) -> DeltaFields {
    let mut dv_mv = [0i32; 3];
    for (dv, (meas, nom)) in dv_mv.iter_mut().zip(vrg_meas_v.iter().zip(nominals.vrg_v.iter())) {
        let steps = ((nom - meas) * 1000.0 / f64::from(VOLT_STEP_MV)).round() as i32;
        *dv = steps * VOLT_STEP_MV;
    }
    let dtp_fs = ((nominals.tp_ns - tp_meas_ns) * 1e6).round() as i64;
    DeltaFields { dv_mv, dtp_fs }
}

fn encode_magnitude(bits: &mut BitString, magnitude: u64, width: usize) {
    for shift in (0..width).rev() {
        bits.push((magnitude >> shift) & 1 == 1);
    }
}

/// 5-bit regulator field: sign bit (1 = negative) then the 4-bit magnitude in
/// 10 mV steps, clamped to 15.
pub fn encode_delta_voltage(dv_mv: i32) -> BitString {
    let mut bits = BitString::with_capacity(5);
    bits.push(dv_mv < 0);
    let mag = (dv_mv.abs() / VOLT_STEP_MV).min(VOLT_MAG_MAX) as u64;
    encode_magnitude(&mut bits, mag, 4);
    bits
}

/// 7-bit clock field: sign bit (1 = negative) then the 6-bit magnitude in fs,
/// clamped to 63.
pub fn encode_delta_period(dtp_fs: i64) -> BitString {
    let mut bits = BitString::with_capacity(7);
    bits.push(dtp_fs < 0);
    let mag = dtp_fs.abs().min(PERIOD_MAG_MAX) as u64;
    encode_magnitude(&mut bits, mag, 6);
    bits
}

fn decode_field(bits: &BitString, width: usize) -> Result<(bool, u64), SigError> {
    if bits.len() != width {
        return Err(SigError::LengthMismatch { expected: width, got: bits.len() });
    }
    let negative = bits.get(0).unwrap();
    let mut mag = 0u64;
    for idx in 1..width {
        mag = (mag << 1) | u64::from(bits.get(idx).unwrap());
    }
    Ok((negative, mag))
}

/// Inverse of [`encode_delta_voltage`] (signed mV).
pub fn decode_delta_voltage(bits: &BitString) -> Result<i32, SigError> {
    let (negative, mag) = decode_field(bits, 5)?;
    let mv = mag as i32 * VOLT_STEP_MV;
    Ok(if negative { -mv } else { mv })
}

/// Inverse of [`encode_delta_period`] (signed fs).
pub fn decode_delta_period(bits: &BitString) -> Result<i64, SigError> {
    let (negative, mag) = decode_field(bits, 7)?;
    Ok(if negative { -(mag as i64) } else { mag as i64 })
}

/// The 22-bit deviation signature: three regulator fields then the clock
/// field, concatenated in measurement order.
pub fn delta_signature(df: &DeltaFields) -> BitString {
    let mut bits = BitString::with_capacity(DELTA_BITS);
    for &dv in &df.dv_mv {
        bits.extend(&encode_delta_voltage(dv));
    }
    bits.extend(&encode_delta_period(df.dtp_fs));
    bits
}

/// Composes the 154-bit signature, rejecting wrong part lengths.
pub fn full_signature(diode_bits: BitString, delta_bits: BitString) -> Result<PufSignature, SigError> {
    PufSignature::new(diode_bits, delta_bits)
}

/// Partial bit-stream computed from fresh voltages, in challenge order:
/// for every i then every j != i over the challenged ports.
pub fn partial_bits_from_voltages(dv: &DiodeVector, c: &Challenge) -> BitString {
    let v = dv.voltages();
    let mut bits = BitString::with_capacity(c.bit_count());
    for &pi in c.ports() {
        for &pj in c.ports() {
            if pi != pj {
                bits.push(compare_bit(v[usize::from(pi)], v[usize::from(pj)]));
            }
        }
    }
    bits
}

/// Partial bit-stream looked up from a stored 132-bit reference. Agrees with
/// [`partial_bits_from_voltages`] whenever the reference was derived from the
/// same voltages.
pub fn partial_bits_from_reference(diode_bits: &BitString, c: &Challenge) -> Result<BitString, SigError> {
    if diode_bits.len() != DIODE_BITS {
        return Err(SigError::LengthMismatch { expected: DIODE_BITS, got: diode_bits.len() });
    }
    let mut bits = BitString::with_capacity(c.bit_count());
    for &pi in c.ports() {
        for &pj in c.ports() {
            if pi != pj {
                let idx = pair_index(usize::from(pi), usize::from(pj));
                bits.push(diode_bits.get(idx).unwrap());
            }
        }
    }
    Ok(bits)
}

/// Hamming distance between equal-length bit-strings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hamming {
    pub count: usize,
    pub fraction: f64,
}

/// XOR-and-sum distance; errors on length mismatch, and the fraction of an
/// empty pair is defined as 0.
pub fn hamming(a: &BitString, b: &BitString) -> Result<Hamming, SigError> {
    if a.len() != b.len() {
        return Err(SigError::LengthMismatch { expected: a.len(), got: b.len() });
    }
    let count = a.iter().zip(b.iter()).filter(|(x, y)| x != y).count();
    let fraction = if a.is_empty() { 0.0 } else { count as f64 / a.len() as f64 };
    Ok(Hamming { count, fraction })
}

#[cfg(test)]
mod tests {
    use super::*;

    // Measured port-diode voltages of a reference device, ports 0..11.
    pub(crate) const REF_DIODE_MV: [f64; 12] = [
        500.8, 516.8, 513.4, 514.2, 511.5, 514.1, 514.3, 502.0, 516.1, 517.6, 515.1, 514.4,
    ];

    const SIG1_DELTA: &str = "0010000101011110110111";
    const SIG2_DELTA: &str = "0000100001011101111111";

    fn ref_vector() -> DiodeVector {
        DiodeVector::new(REF_DIODE_MV).unwrap()
    }

    #[test]
    fn compare_bit_rule() {
        assert!(compare_bit(516.8, 516.1));
        assert!(!compare_bit(500.8, 500.8));
        assert!(!compare_bit(500.8, 502.0));
    }

    #[test]
    fn diode_signature_reference_rows() {
        let sig = diode_signature(&ref_vector());
        assert_eq!(sig.len(), DIODE_BITS);
        // Port 0 carries the minimum voltage: its row is all zeros.
        assert_eq!(sig.to_ascii()[..11], *"00000000000");
        // Port 7 (502.0 mV) beats only port 0.
        assert_eq!(sig.to_ascii()[7 * 11..8 * 11], *"10000000000");
    }

    #[test]
    fn diode_signature_all_equal_is_zero() {
        let dv = DiodeVector::new([500.0; 12]).unwrap();
        let sig = diode_signature(&dv);
        assert_eq!(sig.ones(), 0);
        assert_eq!(sig.len(), 132);
    }

    #[test]
    fn delta_fields_reference_devices() {
        let nom = Nominals::default();
        let a = delta_fields([3.26, 4.95, 14.85], 19.999945, &nom);
        assert_eq!(a.dv_mv, [40, 50, 150]);
        assert_eq!(a.dtp_fs, 55);

        let b = delta_fields([3.29, 4.99, 14.86], 20.000063, &nom);
        assert_eq!(b.dv_mv, [10, 10, 140]);
        assert_eq!(b.dtp_fs, -63);

        let zero = delta_fields([3.3, 5.0, 15.0], 20.0, &nom);
        assert_eq!(zero.dv_mv, [0, 0, 0]);
        assert_eq!(zero.dtp_fs, 0);
        assert!(!zero.saturates());
    }

    #[test]
    fn voltage_field_encoding() {
        assert_eq!(encode_delta_voltage(40).to_ascii(), "00100");
        assert_eq!(encode_delta_voltage(10).to_ascii(), "00001");
        assert_eq!(encode_delta_voltage(-10).to_ascii(), "10001");
        // Saturation: 20 steps clamps to 15.
        assert_eq!(encode_delta_voltage(200).to_ascii(), "01111");
        assert!(DeltaFields { dv_mv: [200, 0, 0], dtp_fs: 0 }.saturates());
    }

    #[test]
    fn period_field_encoding() {
        assert_eq!(encode_delta_period(55).to_ascii(), "0110111");
        assert_eq!(encode_delta_period(-63).to_ascii(), "1111111");
        assert_eq!(encode_delta_period(0).to_ascii(), "0000000");
    }

    #[test]
    fn delta_signature_golden() {
        let a = DeltaFields { dv_mv: [40, 50, 150], dtp_fs: 55 };
        assert_eq!(delta_signature(&a).to_ascii(), SIG1_DELTA);

        let b = DeltaFields { dv_mv: [10, 10, 140], dtp_fs: -63 };
        assert_eq!(delta_signature(&b).to_ascii(), SIG2_DELTA);

        let zero = DeltaFields { dv_mv: [0, 0, 0], dtp_fs: 0 };
        assert_eq!(delta_signature(&zero).to_ascii(), "0".repeat(22));
    }

    #[test]
    fn full_signature_composition() {
        let zeros = full_signature(
            BitString::from_ascii(&"0".repeat(132)).unwrap(),
            BitString::from_ascii(&"0".repeat(22)).unwrap(),
        )
        .unwrap();
        assert_eq!(zeros.total_len(), SIGNATURE_BITS);
        assert_eq!(zeros.full_bits().to_ascii(), "0".repeat(154));

        let err = full_signature(
            BitString::from_ascii(&"0".repeat(131)).unwrap(),
            BitString::from_ascii(&"0".repeat(22)).unwrap(),
        );
        assert_eq!(err, Err(SigError::LengthMismatch { expected: 132, got: 131 }));

        let sig = full_signature(
            diode_signature(&ref_vector()),
            BitString::from_ascii(SIG1_DELTA).unwrap(),
        )
        .unwrap();
        let ascii = sig.full_bits().to_ascii();
        assert_eq!(&ascii[147..], "0110111");
    }

    #[test]
    fn partial_bits_reference_challenge() {
        let c = Challenge::new(vec![1, 8, 0]).unwrap();
        let fresh = partial_bits_from_voltages(&ref_vector(), &c);
        assert_eq!(fresh.to_ascii(), "110100");

        let stored = diode_signature(&ref_vector());
        let looked_up = partial_bits_from_reference(&stored, &c).unwrap();
        assert_eq!(looked_up, fresh);
    }

    #[test]
    fn identity_challenge_recovers_full_signature() {
        let c = Challenge::identity();
        let fresh = partial_bits_from_voltages(&ref_vector(), &c);
        assert_eq!(fresh, diode_signature(&ref_vector()));
        assert_eq!(fresh.len(), 132);
    }

    #[test]
    fn challenge_validation() {
        assert!(matches!(Challenge::new(vec![0, 0, 1]), Err(SigError::DuplicatePort(0))));
        assert!(matches!(Challenge::new(vec![3]), Err(SigError::BadChallengeSize(1))));
        assert!(matches!(Challenge::new(vec![1, 12]), Err(SigError::PortOutOfRange(12))));
    }

    #[test]
    fn hamming_basics() {
        let a = BitString::from_ascii("0101").unwrap();
        assert_eq!(hamming(&a, &a).unwrap(), Hamming { count: 0, fraction: 0.0 });

        let z = BitString::from_ascii("0000").unwrap();
        let o = BitString::from_ascii("1111").unwrap();
        assert_eq!(hamming(&z, &o).unwrap(), Hamming { count: 4, fraction: 1.0 });

        let s1 = BitString::from_ascii(SIG1_DELTA).unwrap();
        let s2 = BitString::from_ascii(SIG2_DELTA).unwrap();
        let h = hamming(&s1, &s2).unwrap();
        assert_eq!(h.count, 6);
        assert!((h.fraction - 6.0 / 22.0).abs() < 1e-12);

        let short = BitString::from_ascii("01").unwrap();
        assert!(hamming(&a, &short).is_err());
    }

    #[test]
    fn ascii_round_trip_and_hex() {
        let s = BitString::from_ascii(SIG1_DELTA).unwrap();
        assert_eq!(s.to_ascii(), SIG1_DELTA);
        assert_eq!(s.len(), 22);

        let hex = s.to_hex();
        assert_eq!(BitString::from_hex(&hex).unwrap(), s);

        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, format!("\"{SIG1_DELTA}\""));
        let back: BitString = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);

        assert!(BitString::from_ascii("01x1").is_err());
        assert!(BitString::from_hex("8:f").is_err());
    }

    #[test]
    fn delta_round_trip_over_full_range() {
        for steps in -15..=15 {
            let mv = steps * VOLT_STEP_MV;
            assert_eq!(decode_delta_voltage(&encode_delta_voltage(mv)).unwrap(), mv);
        }
        for fs in -63..=63 {
            assert_eq!(decode_delta_period(&encode_delta_period(fs)).unwrap(), fs);
        }
        // Out-of-range values clamp.
        assert_eq!(decode_delta_voltage(&encode_delta_voltage(200)).unwrap(), 150);
        assert_eq!(decode_delta_period(&encode_delta_period(-80)).unwrap(), -63);
    }

    #[test]
    fn diode_vector_validation() {
        assert!(DiodeVector::new([0.0; 12]).is_err());
        assert!(DiodeVector::from_slice(&[500.0; 11]).is_err());
        assert!(DiodeVector::from_slice(&REF_DIODE_MV).is_ok());
    }
}
