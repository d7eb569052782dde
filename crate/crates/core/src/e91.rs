//! Two-qubit statevector simulation of the entanglement-based protocol:
//! singlet preparation, rotated-basis measurement, outcome-randomizing
//! "virtual detector" loss channels, and the CHSH statistic over a pass.
//!
//! Amplitudes are ordered |00>, |01>, |10>, |11> with the left qubit held
//! by the spacecraft (Alice) and the right by the ground station (Bob).
//! Measurement angles use the polarization convention: measuring at
//! polarizer angle `a` means measuring `cos(2a) Z + sin(2a) X`, so the
//! singlet correlation is `E(a, b) = -cos(2(a - b))`.

use crate::atmosphere::{dop, AtmosphereModel, SECANT_CAP_RAD};
use crate::error::{Error, Result};
use crate::orbit::PassSample;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8};

const NORM_TOL: f64 = 1e-12;

/// Normalized two-qubit pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitState {
    pub amplitudes: [Complex64; 4],
}

impl TwoQubitState {
    /// Computational basis state |00>.
    pub fn zero() -> Self {
        TwoQubitState {
            amplitudes: [
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn assert_normalized(&self) -> Result<()> {
        if (self.norm_sq() - 1.0).abs() > NORM_TOL {
            return Err(Error::numeric("state", format!("norm^2 = {}", self.norm_sq())));
        }
        Ok(())
    }
}

/// Which qubit a single-qubit gate acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Qubit {
    Alice,
    Bob,
}

/// Gate set used by the protocol circuit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    H(Qubit),
    X(Qubit),
    Z(Qubit),
    /// Controlled-NOT with explicit control and target.
    Cnot { control: Qubit, target: Qubit },
    /// Rotation about Y by `theta`.
    Ry { qubit: Qubit, theta: f64 },
}

impl Gate {
    /// 2x2 matrix of the single-qubit gates; `None` for CNOT.
    fn single_matrix(&self) -> Option<[[Complex64; 2]; 2]> {
        let r = |v: f64| Complex64::new(v, 0.0);
        match *self {
            Gate::H(_) => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                Some([[r(s), r(s)], [r(s), r(-s)]])
            }
            Gate::X(_) => Some([[r(0.0), r(1.0)], [r(1.0), r(0.0)]]),
            Gate::Z(_) => Some([[r(1.0), r(0.0)], [r(0.0), r(-1.0)]]),
            Gate::Ry { theta, .. } => {
                let (s, c) = (0.5 * theta).sin_cos();
                Some([[r(c), r(-s)], [r(s), r(c)]])
            }
            Gate::Cnot { .. } => None,
        }
    }

    fn qubit(&self) -> Qubit {
        match *self {
            Gate::H(q) | Gate::X(q) | Gate::Z(q) | Gate::Ry { qubit: q, .. } => q,
            Gate::Cnot { target, .. } => target,
        }
    }

    /// Largest deviation of `U U^dagger` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        match self.single_matrix() {
            Some(m) => {
                let mut worst: f64 = 0.0;
                for i in 0..2 {
                    for j in 0..2 {
                        // (U^dagger U)_ij
                        let mut acc = Complex64::new(0.0, 0.0);
                        for row in &m {
                            acc += row[i] * row[j].conj();
                        }
                        let expect = if i == j { 1.0 } else { 0.0 };
                        worst = worst.max((acc - expect).norm());
                    }
                }
                worst
            }
            None => 0.0, // permutation matrix, exactly unitary
        }
    }
}

/// Apply a gate, returning the new state. Norm is preserved to 1e-12.
pub fn apply_gate(state: &TwoQubitState, gate: Gate) -> TwoQubitState {
    let a = &state.amplitudes;
    let mut out = *a;
    match gate {
        Gate::Cnot { control, target } => {
            debug_assert!(control != target);
            match control {
                // |10> <-> |11>
                Qubit::Alice => out.swap(2, 3),
                // |01> <-> |11>
                Qubit::Bob => out.swap(1, 3),
            }
        }
        _ => {
            let m = gate.single_matrix().expect("single-qubit gate");
            // index pairs sharing the other qubit's value
            let pairs: [(usize, usize); 2] = match gate.qubit() {
                Qubit::Alice => [(0, 2), (1, 3)],
                Qubit::Bob => [(0, 1), (2, 3)],
            };
            for (i0, i1) in pairs {
                let v0 = a[i0];
                let v1 = a[i1];
                out[i0] = m[0][0] * v0 + m[0][1] * v1;
                out[i1] = m[1][0] * v0 + m[1][1] * v1;
            }
        }
    }
    TwoQubitState { amplitudes: out }
}

/// Prepare the singlet `(|01> - |10>) / sqrt(2)` with the gate sequence
/// X(A), X(B), H(A), CNOT(A -> B).
pub fn prepare_singlet() -> TwoQubitState {
    let mut s = TwoQubitState::zero();
    s = apply_gate(&s, Gate::X(Qubit::Alice));
    s = apply_gate(&s, Gate::X(Qubit::Bob));
    s = apply_gate(&s, Gate::H(Qubit::Alice));
    s = apply_gate(&s, Gate::Cnot { control: Qubit::Alice, target: Qubit::Bob });
    s
}

/// Measure both qubits in polarizer bases `a` (Alice) and `b` (Bob).
/// Outcomes are +-1; +1 corresponds to the rotated |0>.
pub fn measure_pair<R: Rng + ?Sized>(
    state: &TwoQubitState,
    a: f64,
    b: f64,
    rng: &mut R,
) -> Result<(i8, i8)> {
    state.assert_normalized()?;
    let rotated = apply_gate(
        &apply_gate(state, Gate::Ry { qubit: Qubit::Alice, theta: -2.0 * a }),
        Gate::Ry { qubit: Qubit::Bob, theta: -2.0 * b },
    );
    let p: Vec<f64> = rotated.amplitudes.iter().map(|c| c.norm_sqr()).collect();
    let u: f64 = rng.gen::<f64>() * (p[0] + p[1] + p[2] + p[3]);
    let mut acc = 0.0;
    let mut idx = 3;
    for (i, pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            idx = i;
            break;
        }
    }
    let alice = if idx & 0b10 == 0 { 1 } else { -1 };
    let bob = if idx & 0b01 == 0 { 1 } else { -1 };
    Ok((alice, bob))
}

/// Coincidence tallies for one basis pair.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct CoincidenceCounts {
    pub pp: u64,
    pub pm: u64,
    pub mp: u64,
    pub mm: u64,
}

impl CoincidenceCounts {
    pub fn record(&mut self, a: i8, b: i8) {
        match (a > 0, b > 0) {
            (true, true) => self.pp += 1,
            (true, false) => self.pm += 1,
            (false, true) => self.mp += 1,
            (false, false) => self.mm += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.pp + self.pm + self.mp + self.mm
    }
}

/// Correlation `E = (N++ + N-- - N+- - N-+) / N_total`.
pub fn correlation(counts: &CoincidenceCounts) -> Result<f64> {
    let total = counts.total();
    if total == 0 {
        return Err(Error::domain("correlation", "no coincidences tallied"));
    }
    Ok((counts.pp as f64 + counts.mm as f64 - counts.pm as f64 - counts.mp as f64) / total as f64)
}

/// CHSH measurement angles (polarization convention, radians).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ChshAngles {
    pub a1: f64,
    pub a3: f64,
    pub b1: f64,
    pub b3: f64,
}

impl Default for ChshAngles {
    fn default() -> Self {
        // 0, 45, 22.5, 67.5 degrees: the singlet optimum where
        // S = E(a1,b1) - E(a1,b3) + E(a3,b1) + E(a3,b3) = -2 sqrt(2).
        ChshAngles { a1: 0.0, a3: FRAC_PI_4, b1: FRAC_PI_8, b3: 3.0 * FRAC_PI_8 }
    }
}

impl ChshAngles {
    pub fn pairs(&self) -> [(f64, f64); 4] {
        [(self.a1, self.b1), (self.a1, self.b3), (self.a3, self.b1), (self.a3, self.b3)]
    }
}

/// Survival probabilities of the two virtual-detector loss channels. With
/// probability `1 - gamma` the ground-station outcome is replaced by a
/// uniformly random sign (a background photon arriving in the expected
/// signal window).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LossChannels {
    pub gamma_dop: f64,
    pub gamma_snr: f64,
}

impl LossChannels {
    pub fn validate(&self) -> Result<()> {
        for (n, g) in [("gamma_dop", self.gamma_dop), ("gamma_snr", self.gamma_snr)] {
            if !(0.0..=1.0).contains(&g) {
                return Err(Error::domain("chsh", format!("{n} = {g} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// CHSH estimate with per-pair tallies and binomial error propagation.
#[derive(Debug, Clone, Serialize)]
pub struct ChshResult {
    pub s: f64,
    pub std_error: f64,
    pub correlations: [f64; 4],
    pub counts: [CoincidenceCounts; 4],
    pub n_pairs: u64,
}

/// Run the CHSH test on `n_pairs` singlets split evenly across the four
/// basis pairs (remainder to the first pairs).
pub fn chsh<R: Rng + ?Sized>(
    state: &TwoQubitState,
    angles: &ChshAngles,
    n_pairs: u64,
    loss: &LossChannels,
    rng: &mut R,
) -> Result<ChshResult> {
    if n_pairs < 4 {
        return Err(Error::domain("chsh", "need at least 4 pairs"));
    }
    loss.validate()?;
    let base = n_pairs / 4;
    let rem = (n_pairs % 4) as usize;
    let mut counts = [CoincidenceCounts::default(); 4];
    for (k, (a, b)) in angles.pairs().iter().enumerate() {
        let n_k = base + if k < rem { 1 } else { 0 };
        for _ in 0..n_k {
            let (alice, mut bob) = measure_pair(state, *a, *b, rng)?;
            if rng.gen::<f64>() >= loss.gamma_dop {
                bob = if rng.gen::<bool>() { 1 } else { -1 };
            }
            if rng.gen::<f64>() >= loss.gamma_snr {
                bob = if rng.gen::<bool>() { 1 } else { -1 };
            }
            counts[k].record(alice, bob);
        }
    }
    finish_chsh(counts, n_pairs)
}

fn finish_chsh(counts: [CoincidenceCounts; 4], n_pairs: u64) -> Result<ChshResult> {
    let mut e = [0.0f64; 4];
    let mut var = 0.0f64;
    for k in 0..4 {
        e[k] = correlation(&counts[k])?;
        var += (1.0 - e[k] * e[k]) / counts[k].total() as f64;
    }
    let s = e[0] - e[1] + e[2] + e[3];
    Ok(ChshResult { s, std_error: var.sqrt(), correlations: e, counts, n_pairs })
}

/// CHSH statistic of a local deterministic strategy fed through the same
/// tally pipeline: outcomes fixed per setting, independent of the far side.
pub fn chsh_local_deterministic(
    a_outcomes: (i8, i8),
    b_outcomes: (i8, i8),
    pairs_per_setting: u64,
) -> Result<ChshResult> {
    let strategy = [
        (a_outcomes.0, b_outcomes.0),
        (a_outcomes.0, b_outcomes.1),
        (a_outcomes.1, b_outcomes.0),
        (a_outcomes.1, b_outcomes.1),
    ];
    let mut counts = [CoincidenceCounts::default(); 4];
    for (k, (a, b)) in strategy.iter().enumerate() {
        for _ in 0..pairs_per_setting {
            counts[k].record(*a, *b);
        }
    }
    finish_chsh(counts, 4 * pairs_per_setting)
}

/// Ground-station noise-survival profile for the entangled protocol.
///
/// The published correlation envelope pins the product
/// `gamma_dop * gamma_snr` at culmination and at the pass edge; with
/// `gamma_dop` equal to the polarization profile, the remaining
/// signal-to-noise survival is a power law in the airmass through those two
/// anchors (the coincidence-gated background differs from the single-photon
/// background profile).
#[derive(Debug, Clone, Serialize)]
pub struct E91NoiseModel {
    pub gamma_snr_zenith: f64,
    pub gamma_snr_airmass_exponent: f64,
}

impl E91NoiseModel {
    /// Back-solve the profile from the correlation-envelope anchors
    /// `s_best` at zenith and `s_worst` at `worst_zenith_rad`.
    pub fn calibrated(
        atmosphere: &AtmosphereModel,
        s_best: f64,
        s_worst: f64,
        worst_zenith_rad: f64,
    ) -> Result<Self> {
        let tsirelson = 2.0 * 2f64.sqrt();
        let g0 = s_best / (tsirelson * dop(FRAC_PI_2, atmosphere));
        let gw = s_worst / (tsirelson * dop(FRAC_PI_2 - worst_zenith_rad, atmosphere));
        if !(g0 > 0.0 && g0 <= 1.0 && gw > 0.0 && gw <= 1.0) {
            return Err(Error::config("protocol.e91", "anchors give survival outside (0, 1]"));
        }
        let airmass = 1.0 / worst_zenith_rad.min(SECANT_CAP_RAD).cos();
        Ok(E91NoiseModel {
            gamma_snr_zenith: g0,
            gamma_snr_airmass_exponent: (g0 / gw).ln() / airmass.ln(),
        })
    }

    pub fn default_profile(atmosphere: &AtmosphereModel) -> Result<Self> {
        E91NoiseModel::calibrated(atmosphere, 2.63, 1.91, 80f64.to_radians())
    }

    pub fn gamma_snr(&self, elevation_rad: f64) -> f64 {
        let zen = FRAC_PI_2 - elevation_rad;
        let airmass = 1.0 / zen.clamp(0.0, SECANT_CAP_RAD).cos();
        (self.gamma_snr_zenith * airmass.powf(-self.gamma_snr_airmass_exponent)).min(1.0)
    }
}

/// One CHSH evaluation along the pass.
#[derive(Debug, Clone, Serialize)]
pub struct ChshStep {
    pub t_s: f64,
    pub elevation_rad: f64,
    pub gamma_dop: f64,
    pub gamma_snr: f64,
    pub s: f64,
    pub std_error: f64,
    pub n_pairs: u64,
}

/// Run the CHSH test at every pass sample with the polarization and
/// noise-survival profiles evaluated per elevation.
///
/// Per-sample RNG streams are derived from `(seed, sample index)` so the
/// trace is bitwise reproducible.
pub fn simulate_chsh_over_pass(
    pass: &[PassSample],
    atmosphere: &AtmosphereModel,
    noise: &E91NoiseModel,
    angles: &ChshAngles,
    n_pairs_per_step: u64,
    seed: u64,
) -> Result<Vec<ChshStep>> {
    if pass.is_empty() {
        return Err(Error::domain("simulate_chsh_over_pass", "empty pass"));
    }
    if n_pairs_per_step < 1000 {
        return Err(Error::domain("simulate_chsh_over_pass", "need >= 1e3 pairs per step"));
    }
    let singlet = prepare_singlet();
    let mut out = Vec::with_capacity(pass.len());
    for (i, sample) in pass.iter().enumerate() {
        let gamma_dop = dop(sample.elevation_rad, atmosphere);
        let gamma_snr = noise.gamma_snr(sample.elevation_rad);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0x5916 + i as u64);
        let res = chsh(
            &singlet,
            angles,
            n_pairs_per_step,
            &LossChannels { gamma_dop, gamma_snr },
            &mut rng,
        )?;
        out.push(ChshStep {
            t_s: sample.t_s,
            elevation_rad: sample.elevation_rad,
            gamma_dop,
            gamma_snr,
            s: res.s,
            std_error: res.std_error,
            n_pairs: res.n_pairs,
        });
    }
    Ok(out)
}

/// Contiguous window around culmination where the Bell test stays valid,
/// `S + 2 sigma < -2`. Returns `(start_s, end_s)` or `None`.
pub fn validity_window(trace: &[ChshStep]) -> Option<(f64, f64)> {
    let mid = trace.len() / 2;
    let valid = |s: &ChshStep| s.s + 2.0 * s.std_error < -2.0;
    if !valid(&trace[mid]) {
        return None;
    }
    let mut lo = mid;
    while lo > 0 && valid(&trace[lo - 1]) {
        lo -= 1;
    }
    let mut hi = mid;
    while hi + 1 < trace.len() && valid(&trace[hi + 1]) {
        hi += 1;
    }
    Some((trace[lo].t_s, trace[hi].t_s))
}
