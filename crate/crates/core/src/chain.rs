//! Physical model of the chain: parameters, interparticle coupling matrix,
//! and exact force/energy evaluation.
//!
//! The Hamiltonian is
//!
//! ```text
//! H(q,p) = Σ_j [ ½ p_j² + ½ M_j q_j² + λ q_j⁴/4 ] + Σ_{j<l} J_{jl} q_j q_l
//! ```
//!
//! with `J_{jl} = J/|j-l|^p` (zero diagonal, symmetric, optional finite
//! range). The chain is free (non-periodic); particle masses are 1.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ChainError {
    #[error("site count must be >= 1")]
    EmptyChain,
    #[error("parameter arrays must all have length N = {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("pinning coefficients must be positive (site {0})")]
    NonPositivePinning(usize),
    #[error("anharmonic strength lambda must be >= 0")]
    NegativeLambda,
    #[error("bath couplings must be >= 0 (site {0})")]
    NegativeBathCoupling(usize),
    #[error("bath temperatures must be positive (site {0})")]
    NonPositiveTemperature(usize),
    #[error("coupling decay exponent must satisfy p > 1, got {0}")]
    NonIntegrableDecay(f64),
    #[error("coupling amplitude must be >= 0, got {0}")]
    NegativeCouplingAmplitude(f64),
    #[error("only unit particle masses are supported, got {0}")]
    UnsupportedMass(f64),
    #[error("state contains a non-finite entry at site {0}")]
    NonFiniteState(usize),
    #[error("site index {index} out of range for chain of {n} sites")]
    SiteOutOfRange { index: usize, n: usize },
}

/// Power-law interparticle coupling `J_{jl} = J/|j-l|^p`, optionally cut off
/// beyond `range` lattice spacings.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingLaw {
    pub amplitude: f64,
    pub exponent: f64,
    pub range: Option<usize>,
}

impl CouplingLaw {
    pub fn nearest_neighbor(amplitude: f64) -> Self {
        CouplingLaw {
            amplitude,
            exponent: 2.0,
            range: Some(1),
        }
    }

    pub fn power_law(amplitude: f64, exponent: f64) -> Self {
        CouplingLaw {
            amplitude,
            exponent,
            range: None,
        }
    }

    /// J at lattice distance d >= 1 (0 beyond the cutoff).
    pub fn at_distance(&self, d: usize) -> f64 {
        debug_assert!(d >= 1);
        if let Some(r) = self.range {
            if d > r {
                return 0.0;
            }
        }
        self.amplitude / (d as f64).powf(self.exponent)
    }
}

/// Full physical specification of the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainParams {
    n: usize,
    pinning: Vec<f64>,
    lambda: f64,
    bath_coupling: Vec<f64>,
    temps: Vec<f64>,
    coupling: CouplingLaw,
    mass: f64,
}

impl ChainParams {
    pub fn new(
        pinning: Vec<f64>,
        lambda: f64,
        bath_coupling: Vec<f64>,
        temps: Vec<f64>,
        coupling: CouplingLaw,
    ) -> Result<Self, ChainError> {
        let n = pinning.len();
        if n == 0 {
            return Err(ChainError::EmptyChain);
        }
        for (len, _) in [(bath_coupling.len(), "zeta"), (temps.len(), "temps")] {
            if len != n {
                return Err(ChainError::LengthMismatch {
                    expected: n,
                    got: len,
                });
            }
        }
        if let Some(j) = pinning.iter().position(|&m| !(m > 0.0)) {
            return Err(ChainError::NonPositivePinning(j));
        }
        if !(lambda >= 0.0) {
            return Err(ChainError::NegativeLambda);
        }
        if let Some(j) = bath_coupling.iter().position(|&z| !(z >= 0.0)) {
            return Err(ChainError::NegativeBathCoupling(j));
        }
        if let Some(j) = temps.iter().position(|&t| !(t > 0.0)) {
            return Err(ChainError::NonPositiveTemperature(j));
        }
        if !(coupling.exponent > 1.0) {
            return Err(ChainError::NonIntegrableDecay(coupling.exponent));
        }
        if !(coupling.amplitude >= 0.0) {
            return Err(ChainError::NegativeCouplingAmplitude(coupling.amplitude));
        }
        Ok(ChainParams {
            n,
            pinning,
            lambda,
            bath_coupling,
            temps,
            coupling,
            mass: 1.0,
        })
    }

    /// Uniform chain: same pinning, bath coupling and temperature at every site.
    pub fn uniform(
        n: usize,
        pinning: f64,
        lambda: f64,
        zeta: f64,
        temp: f64,
        coupling: CouplingLaw,
    ) -> Result<Self, ChainError> {
        ChainParams::new(
            vec![pinning; n],
            lambda,
            vec![zeta; n],
            vec![temp; n],
            coupling,
        )
    }

    /// Mass hook; any value other than 1 is rejected.
    pub fn with_mass(mut self, mass: f64) -> Result<Self, ChainError> {
        if mass != 1.0 {
            return Err(ChainError::UnsupportedMass(mass));
        }
        self.mass = mass;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn pinning(&self) -> &[f64] {
        &self.pinning
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn bath_coupling(&self) -> &[f64] {
        &self.bath_coupling
    }
    pub fn temps(&self) -> &[f64] {
        &self.temps
    }
    pub fn coupling(&self) -> &CouplingLaw {
        &self.coupling
    }

    pub fn set_temps(&mut self, temps: Vec<f64>) -> Result<(), ChainError> {
        if temps.len() != self.n {
            return Err(ChainError::LengthMismatch {
                expected: self.n,
                got: temps.len(),
            });
        }
        if let Some(j) = temps.iter().position(|&t| !(t > 0.0)) {
            return Err(ChainError::NonPositiveTemperature(j));
        }
        self.temps = temps;
        Ok(())
    }

    pub fn max_bath_coupling(&self) -> f64 {
        self.bath_coupling.iter().cloned().fold(0.0, f64::max)
    }

    pub fn min_temp(&self) -> f64 {
        self.temps.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_temp(&self) -> f64 {
        self.temps.iter().cloned().fold(0.0, f64::max)
    }
}

/// Positions and momenta of all N oscillators at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub time: f64,
}

impl PhaseState {
    pub fn new(q: Vec<f64>, p: Vec<f64>, time: f64) -> Result<Self, ChainError> {
        if q.len() != p.len() {
            return Err(ChainError::LengthMismatch {
                expected: q.len(),
                got: p.len(),
            });
        }
        let state = PhaseState { q, p, time };
        state.check_finite()?;
        Ok(state)
    }

    pub fn zeros(n: usize) -> Self {
        PhaseState {
            q: vec![0.0; n],
            p: vec![0.0; n],
            time: 0.0,
        }
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn check_finite(&self) -> Result<(), ChainError> {
        for j in 0..self.q.len() {
            if !self.q[j].is_finite() || !self.p[j].is_finite() {
                return Err(ChainError::NonFiniteState(j));
            }
        }
        Ok(())
    }
}

/// Symmetric N x N interparticle coupling matrix with zero diagonal,
/// stored dense.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl CouplingMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, j: usize, l: usize) -> f64 {
        self.entries[j * self.n + l]
    }

    /// Σ_{l≠j} J_{jl} for one row.
    pub fn row_sum(&self, j: usize) -> f64 {
        (0..self.n).map(|l| self.get(j, l)).sum()
    }

    pub fn max_row_sum(&self) -> f64 {
        (0..self.n).map(|j| self.row_sum(j)).fold(0.0, f64::max)
    }
}

/// Builds the coupling matrix `J_{jl} = J/|j-l|^p` for a free chain.
pub fn build_coupling(params: &ChainParams) -> Result<CouplingMatrix, ChainError> {
    let law = params.coupling();
    if !(law.exponent > 1.0) {
        return Err(ChainError::NonIntegrableDecay(law.exponent));
    }
    if !(law.amplitude >= 0.0) {
        return Err(ChainError::NegativeCouplingAmplitude(law.amplitude));
    }
    let n = params.n();
    let mut entries = vec![0.0; n * n];
    for j in 0..n {
        for l in (j + 1)..n {
            let v = law.at_distance(l - j);
            entries[j * n + l] = v;
            entries[l * n + j] = v;
        }
    }
    Ok(CouplingMatrix { n, entries })
}

/// Force on every site: `F_j = -M_j q_j - Σ_{l≠j} J_{jl} q_l - λ q_j³`.
pub fn force(state: &PhaseState, params: &ChainParams, coupling: &CouplingMatrix) -> Vec<f64> {
    let n = params.n();
    let mut f = vec![0.0; n];
    force_into(state, params, coupling, &mut f);
    f
}

/// In-place variant of [`force`] for integrator inner loops.
pub fn force_into(
    state: &PhaseState,
    params: &ChainParams,
    coupling: &CouplingMatrix,
    out: &mut [f64],
) {
    let n = params.n();
    let lambda = params.lambda();
    for j in 0..n {
        let qj = state.q[j];
        let mut coupled = 0.0;
        for l in 0..n {
            coupled += coupling.get(j, l) * state.q[l];
        }
        out[j] = -params.pinning()[j] * qj - coupled - lambda * qj * qj * qj;
    }
}

/// Total energy of the chain (the Hamiltonian).
pub fn total_energy(state: &PhaseState, params: &ChainParams, coupling: &CouplingMatrix) -> f64 {
    let n = params.n();
    let mut e = 0.0;
    for j in 0..n {
        let qj = state.q[j];
        e += 0.5 * state.p[j] * state.p[j]
            + 0.5 * params.pinning()[j] * qj * qj
            + 0.25 * params.lambda() * qj * qj * qj * qj;
        for l in (j + 1)..n {
            e += coupling.get(j, l) * qj * state.q[l];
        }
    }
    e
}

/// Energy assigned to a single oscillator.
///
/// The pair bond is shared symmetrically and the on-site quadratic
/// coefficient is adjusted to `M_j - Σ_{l≠j} J_{jl}` so that the site split
/// sums to the Hamiltonian exactly:
///
/// ```text
/// H_j = ½ p_j² + ¼ Σ_{l≠j} J_{jl} (q_j + q_l)² + λ q_j⁴/4 + ½ (M_j - S_j) q_j²
/// ```
///
/// The `(q_j + q_l)` bond form (rather than the difference) is forced by the
/// `+J q_j q_l` sign of the interaction in the Hamiltonian; with it the
/// identity `Σ_j H_j = H` holds to round-off for every state.
pub fn site_energy(
    j: usize,
    state: &PhaseState,
    params: &ChainParams,
    coupling: &CouplingMatrix,
) -> Result<f64, ChainError> {
    let n = params.n();
    if j >= n {
        return Err(ChainError::SiteOutOfRange { index: j, n });
    }
    let qj = state.q[j];
    let mut bond = 0.0;
    let mut row = 0.0;
    for l in 0..n {
        if l == j {
            continue;
        }
        let jl = coupling.get(j, l);
        let s = qj + state.q[l];
        bond += jl * s * s;
        row += jl;
    }
    Ok(0.5 * state.p[j] * state.p[j]
        + 0.25 * bond
        + 0.25 * params.lambda() * qj * qj * qj * qj
        + 0.5 * (params.pinning()[j] - row) * qj * qj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_state(n: usize, rng: &mut impl Rng) -> PhaseState {
        PhaseState {
            q: (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect(),
            p: (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect(),
            time: 0.0,
        }
    }

    #[test]
    fn coupling_entries_follow_power_law() {
        let params =
            ChainParams::uniform(2, 1.0, 0.0, 1.0, 1.0, CouplingLaw::power_law(0.1, 2.0)).unwrap();
        let c = build_coupling(&params).unwrap();
        assert_relative_eq!(c.get(0, 1), 0.1);

        let params =
            ChainParams::uniform(3, 1.0, 0.0, 1.0, 1.0, CouplingLaw::power_law(1.0, 2.0)).unwrap();
        let c = build_coupling(&params).unwrap();
        assert_relative_eq!(c.get(0, 2), 0.25);
        for j in 0..3 {
            assert_eq!(c.get(j, j), 0.0);
        }
    }

    #[test]
    fn coupling_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let n = rng.gen_range(2..12);
            let p = rng.gen_range(1.1..4.0);
            let amp = rng.gen_range(0.0..2.0);
            let params =
                ChainParams::uniform(n, 1.0, 0.0, 1.0, 1.0, CouplingLaw::power_law(amp, p))
                    .unwrap();
            let c = build_coupling(&params).unwrap();
            for j in 0..n {
                for l in 0..n {
                    assert_eq!(c.get(j, l), c.get(l, j));
                }
            }
        }
    }

    #[test]
    fn coupling_rejects_bad_law() {
        assert_eq!(
            ChainParams::uniform(4, 1.0, 0.0, 1.0, 1.0, CouplingLaw::power_law(1.0, 1.0))
                .unwrap_err(),
            ChainError::NonIntegrableDecay(1.0)
        );
        assert_eq!(
            ChainParams::uniform(4, 1.0, 0.0, 1.0, 1.0, CouplingLaw::power_law(-0.5, 2.0))
                .unwrap_err(),
            ChainError::NegativeCouplingAmplitude(-0.5)
        );
    }

    #[test]
    fn row_sums_bounded_and_monotone_in_exponent() {
        // Row sums are below 2 J ζ(p) and decrease as p grows.
        let n = 64;
        let amp = 0.3;
        let mut prev = f64::INFINITY;
        for &p in &[1.5, 2.0, 3.0, 4.0] {
            let params =
                ChainParams::uniform(n, 1.0, 0.0, 1.0, 1.0, CouplingLaw::power_law(amp, p))
                    .unwrap();
            let c = build_coupling(&params).unwrap();
            let zeta_p: f64 = (1..10_000).map(|k| (k as f64).powf(-p)).sum();
            let bound = 2.0 * amp * zeta_p;
            let max_row = c.max_row_sum();
            assert!(max_row <= bound * (1.0 + 1e-12));
            assert!(max_row < prev);
            prev = max_row;
        }
    }

    #[test]
    fn force_zero_state_and_single_site() {
        let params =
            ChainParams::uniform(3, 1.0, 1.0, 1.0, 1.0, CouplingLaw::power_law(0.5, 2.0)).unwrap();
        let c = build_coupling(&params).unwrap();
        let f = force(&PhaseState::zeros(3), &params, &c);
        assert_eq!(f, vec![0.0; 3]);

        // N=1, M=1, lambda=1, q=2: F = -(2 + 8) = -10.
        let params =
            ChainParams::uniform(1, 1.0, 1.0, 1.0, 1.0, CouplingLaw::power_law(0.0, 2.0)).unwrap();
        let c = build_coupling(&params).unwrap();
        let state = PhaseState::new(vec![2.0], vec![0.0], 0.0).unwrap();
        let f = force(&state, &params, &c);
        assert_relative_eq!(f[0], -10.0, max_relative = 1e-14);
    }

    #[test]
    fn force_matches_finite_difference_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let params = ChainParams::new(
            vec![1.0, 2.0, 1.5, 0.8, 1.2],
            0.7,
            vec![1.0; 5],
            vec![1.0; 5],
            CouplingLaw::power_law(0.4, 2.0),
        )
        .unwrap();
        let c = build_coupling(&params).unwrap();
        for _ in 0..5 {
            let state = random_state(5, &mut rng);
            let f = force(&state, &params, &c);
            let h = 1e-5;
            for j in 0..5 {
                let mut plus = state.clone();
                plus.q[j] += h;
                let mut minus = state.clone();
                minus.q[j] -= h;
                let fd = -(total_energy(&plus, &params, &c) - total_energy(&minus, &params, &c))
                    / (2.0 * h);
                assert_relative_eq!(f[j], fd, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn site_split_matches_hand_value() {
        // N=2, J12=1, M=(2,2), q=(1,-1), p=0, lambda=0: H = 2 - 1 = 1.
        let params = ChainParams::new(
            vec![2.0, 2.0],
            0.0,
            vec![1.0; 2],
            vec![1.0; 2],
            CouplingLaw::power_law(1.0, 2.0),
        )
        .unwrap();
        let c = build_coupling(&params).unwrap();
        let state = PhaseState::new(vec![1.0, -1.0], vec![0.0, 0.0], 0.0).unwrap();
        let total = total_energy(&state, &params, &c);
        assert_relative_eq!(total, 1.0, max_relative = 1e-14);
        let split: f64 = (0..2)
            .map(|j| site_energy(j, &state, &params, &c).unwrap())
            .sum();
        assert_relative_eq!(split, total, max_relative = 1e-14);
    }

    #[test]
    fn site_split_sums_to_total_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let n = rng.gen_range(1..10);
            let params = ChainParams::new(
                (0..n).map(|_| rng.gen_range(0.5..3.0)).collect(),
                rng.gen_range(0.0..2.0),
                vec![1.0; n],
                vec![1.0; n],
                CouplingLaw::power_law(rng.gen_range(0.0..1.0), rng.gen_range(1.2..3.0)),
            )
            .unwrap();
            let c = build_coupling(&params).unwrap();
            let state = random_state(n, &mut rng);
            let total = total_energy(&state, &params, &c);
            let split: f64 = (0..n)
                .map(|j| site_energy(j, &state, &params, &c).unwrap())
                .sum();
            assert_relative_eq!(split, total, max_relative = 1e-12, epsilon = 1e-13);
        }
    }

    #[test]
    fn zero_state_has_zero_site_energy() {
        let params =
            ChainParams::uniform(4, 1.0, 1.0, 1.0, 1.0, CouplingLaw::power_law(0.3, 2.0)).unwrap();
        let c = build_coupling(&params).unwrap();
        let state = PhaseState::zeros(4);
        for j in 0..4 {
            assert_eq!(site_energy(j, &state, &params, &c).unwrap(), 0.0);
        }
        assert!(site_energy(4, &state, &params, &c).is_err());
    }

    #[test]
    fn state_rejects_non_finite() {
        let err = PhaseState::new(vec![1.0, f64::NAN], vec![0.0, 0.0], 0.0).unwrap_err();
        assert_eq!(err, ChainError::NonFiniteState(1));
    }

    #[test]
    fn mass_hook_only_accepts_unit_mass() {
        let params =
            ChainParams::uniform(2, 1.0, 0.0, 1.0, 1.0, CouplingLaw::power_law(0.1, 2.0)).unwrap();
        assert!(params.clone().with_mass(1.0).is_ok());
        assert!(matches!(
            params.with_mass(2.0),
            Err(ChainError::UnsupportedMass(_))
        ));
    }
}
