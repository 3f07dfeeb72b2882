//! Stochastic integration of the chain dynamics
//!
//! ```text
//! dq_j = p_j dt,   dp_j = (F_j(q) - ζ_j p_j) dt + √(2 ζ_j T_j) dB_j
//! ```
//!
//! and steady-state estimators: per-site kinetic temperatures, nearest-bond
//! heat currents and reservoir fluxes, with batch-means error bars.
//!
//! Two schemes are provided. The reference scheme is an Euler-Maruyama update
//! with the position advanced first (the force acts on the updated position,
//! which keeps the deterministic part symplectic). The cross-check scheme is
//! a BAOAB-style splitting whose stochastic kick is the exact
//! Ornstein-Uhlenbeck update.

use crate::chain::{build_coupling, force_into, ChainError, ChainParams, CouplingMatrix, PhaseState};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LangevinError {
    #[error("time step must be positive, got {0}")]
    NonPositiveDt(f64),
    #[error("stability guard dt*max(zeta) < 0.5 violated: dt = {dt}, max zeta = {zeta_max}")]
    UnstableDt { dt: f64, zeta_max: f64 },
    #[error("batch count must be >= 2, got {0}")]
    TooFewBatches(usize),
    #[error("n_steps = {n_steps} cannot fill {batch_count} batches")]
    TooFewSteps { n_steps: u64, batch_count: usize },
    #[error("integrator diverged: non-finite state at site {site}, step {step}")]
    Diverged { site: usize, step: u64 },
    #[error(transparent)]
    Chain(#[from] ChainError),
}

/// Integration scheme selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    EulerMaruyama,
    /// Deterministic half-steps around an exact OU kick (BAOAB).
    Splitting,
}

/// Simulation budget and reproducibility knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub burn_in: u64,
    pub n_steps: u64,
    pub seed: u64,
    pub batch_count: usize,
}

impl SimConfig {
    pub fn validate(&self, params: &ChainParams) -> Result<(), LangevinError> {
        if !(self.dt > 0.0) {
            return Err(LangevinError::NonPositiveDt(self.dt));
        }
        let zeta_max = params.max_bath_coupling();
        if self.dt * zeta_max >= 0.5 {
            return Err(LangevinError::UnstableDt {
                dt: self.dt,
                zeta_max,
            });
        }
        if self.batch_count < 2 {
            return Err(LangevinError::TooFewBatches(self.batch_count));
        }
        if self.n_steps < self.batch_count as u64 {
            return Err(LangevinError::TooFewSteps {
                n_steps: self.n_steps,
                batch_count: self.batch_count,
            });
        }
        Ok(())
    }
}

/// Steady-state observable estimates with batch-means standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableStats {
    pub n: usize,
    pub mean_qsq: Vec<f64>,
    pub se_qsq: Vec<f64>,
    pub mean_psq: Vec<f64>,
    pub se_psq: Vec<f64>,
    /// Nearest-neighbor bond currents F_{j,j+1}, length N-1.
    pub bond_flux: Vec<f64>,
    pub se_bond_flux: Vec<f64>,
    /// Reservoir fluxes R_j = ζ_j (T_j - ⟨p_j²⟩).
    pub reservoir_flux: Vec<f64>,
    pub samples: u64,
    pub batch_count: usize,
}

impl ObservableStats {
    /// CSV with one row per site then one per bond; fixed column order.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("# steady-state observables: sites then bonds\n");
        out.push_str("kind,index,mean_qsq,se_qsq,mean_psq,se_psq,flux,se_flux,reservoir_flux,samples\n");
        for j in 0..self.n {
            out.push_str(&format!(
                "site,{},{},{},{},{},,,{},{}\n",
                j,
                self.mean_qsq[j],
                self.se_qsq[j],
                self.mean_psq[j],
                self.se_psq[j],
                self.reservoir_flux[j],
                self.samples
            ));
        }
        for b in 0..self.bond_flux.len() {
            out.push_str(&format!(
                "bond,{},,,,,{},{},,{}\n",
                b, self.bond_flux[b], self.se_bond_flux[b], self.samples
            ));
        }
        out
    }

    /// Mean bond flux and the standard error of that mean (bonds treated as
    /// independent estimates of the common steady current).
    pub fn mean_flux(&self) -> (f64, f64) {
        let nb = self.bond_flux.len() as f64;
        let mean = self.bond_flux.iter().sum::<f64>() / nb;
        let var: f64 = self.se_bond_flux.iter().map(|s| s * s).sum::<f64>() / (nb * nb);
        (mean, var.sqrt())
    }
}

/// Heat current from site j toward all forward sites l > j.
pub fn forward_flux(state: &PhaseState, coupling: &CouplingMatrix, j: usize) -> f64 {
    let n = coupling.n();
    let mut acc = 0.0;
    for l in (j + 1)..n {
        acc += pair_flux(state, coupling, j, l);
    }
    acc
}

/// Ordered-pair flux contribution `J_{jl} (q_j - q_l)(p_j + p_l)/2`.
///
/// Antisymmetric under exchanging the pair: the (l, j) term is the negative
/// of the (j, l) term.
pub fn pair_flux(state: &PhaseState, coupling: &CouplingMatrix, j: usize, l: usize) -> f64 {
    coupling.get(j, l) * (state.q[j] - state.q[l]) * (state.p[j] + state.p[l]) * 0.5
}

/// Instantaneous nearest-neighbor bond current for bond (j, j+1).
pub fn nn_bond_flux(state: &PhaseState, coupling: &CouplingMatrix, j: usize) -> f64 {
    pair_flux(state, coupling, j, j + 1)
}

/// Reservoir flux `R_j = ζ_j (T_j - ⟨p_j²⟩)` from an estimated kinetic
/// temperature.
pub fn reservoir_flux(j: usize, mean_psq: &[f64], params: &ChainParams) -> f64 {
    params.bath_coupling()[j] * (params.temps()[j] - mean_psq[j])
}

struct Workspace {
    force: Vec<f64>,
    noise_amp: Vec<f64>,
    ou_decay: Vec<f64>,
    ou_noise: Vec<f64>,
}

impl Workspace {
    fn new(params: &ChainParams, dt: f64) -> Self {
        let n = params.n();
        let mut noise_amp = vec![0.0; n];
        let mut ou_decay = vec![0.0; n];
        let mut ou_noise = vec![0.0; n];
        for j in 0..n {
            let z = params.bath_coupling()[j];
            let t = params.temps()[j];
            noise_amp[j] = (2.0 * z * t * dt).sqrt();
            let c = (-z * dt).exp();
            ou_decay[j] = c;
            ou_noise[j] = (t * (1.0 - c * c)).sqrt();
        }
        Workspace {
            force: vec![0.0; n],
            noise_amp,
            ou_decay,
            ou_noise,
        }
    }
}

/// One Euler-Maruyama update, in place. The position moves first, so the
/// force is evaluated at the updated position.
pub fn step(
    state: &mut PhaseState,
    params: &ChainParams,
    coupling: &CouplingMatrix,
    dt: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(), LangevinError> {
    let mut ws = Workspace::new(params, dt);
    step_em_inner(state, params, coupling, dt, rng, &mut ws)
        .map_err(|site| LangevinError::Diverged { site, step: 0 })
}

fn step_em_inner(
    state: &mut PhaseState,
    params: &ChainParams,
    coupling: &CouplingMatrix,
    dt: f64,
    rng: &mut ChaCha8Rng,
    ws: &mut Workspace,
) -> Result<(), usize> {
    let n = params.n();
    for j in 0..n {
        state.q[j] += state.p[j] * dt;
    }
    force_into(state, params, coupling, &mut ws.force);
    for j in 0..n {
        let xi: f64 = rng.sample(StandardNormal);
        state.p[j] += (ws.force[j] - params.bath_coupling()[j] * state.p[j]) * dt
            + ws.noise_amp[j] * xi;
    }
    state.time += dt;
    check_finite(state)
}

fn step_splitting_inner(
    state: &mut PhaseState,
    params: &ChainParams,
    coupling: &CouplingMatrix,
    dt: f64,
    rng: &mut ChaCha8Rng,
    ws: &mut Workspace,
) -> Result<(), usize> {
    let n = params.n();
    let half = 0.5 * dt;
    force_into(state, params, coupling, &mut ws.force);
    for j in 0..n {
        state.p[j] += ws.force[j] * half;
    }
    for j in 0..n {
        state.q[j] += state.p[j] * half;
    }
    for j in 0..n {
        let xi: f64 = rng.sample(StandardNormal);
        state.p[j] = ws.ou_decay[j] * state.p[j] + ws.ou_noise[j] * xi;
    }
    for j in 0..n {
        state.q[j] += state.p[j] * half;
    }
    force_into(state, params, coupling, &mut ws.force);
    for j in 0..n {
        state.p[j] += ws.force[j] * half;
    }
    state.time += dt;
    check_finite(state)
}

fn check_finite(state: &PhaseState) -> Result<(), usize> {
    for j in 0..state.q.len() {
        if !state.q[j].is_finite() || !state.p[j].is_finite() {
            return Err(j);
        }
    }
    Ok(())
}

#[derive(Debug)]
struct BatchAccumulator {
    qsq: Vec<Vec<f64>>,
    psq: Vec<Vec<f64>>,
    flux: Vec<Vec<f64>>,
}

/// Runs one trajectory and returns batch means (per batch: per-site q², p²
/// and per-bond flux averages).
fn run_batches(
    params: &ChainParams,
    coupling: &CouplingMatrix,
    config: &SimConfig,
    scheme: Scheme,
    stream: u64,
    initial: Option<&PhaseState>,
) -> Result<BatchAccumulator, LangevinError> {
    config.validate(params)?;
    let n = params.n();
    let nb = n.saturating_sub(1);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(stream);
    let mut state = match initial {
        Some(s) => s.clone(),
        None => PhaseState::zeros(n),
    };
    state.check_finite()?;
    let mut ws = Workspace::new(params, config.dt);

    let advance = |state: &mut PhaseState, rng: &mut ChaCha8Rng, ws: &mut Workspace| match scheme
    {
        Scheme::EulerMaruyama => step_em_inner(state, params, coupling, config.dt, rng, ws),
        Scheme::Splitting => step_splitting_inner(state, params, coupling, config.dt, rng, ws),
    };

    for s in 0..config.burn_in {
        advance(&mut state, &mut rng, &mut ws)
            .map_err(|site| LangevinError::Diverged { site, step: s })?;
    }

    let batch_len = config.n_steps / config.batch_count as u64;
    let mut acc = BatchAccumulator {
        qsq: Vec::with_capacity(config.batch_count),
        psq: Vec::with_capacity(config.batch_count),
        flux: Vec::with_capacity(config.batch_count),
    };
    for b in 0..config.batch_count {
        let mut qsq = vec![0.0; n];
        let mut psq = vec![0.0; n];
        let mut flux = vec![0.0; nb];
        for s in 0..batch_len {
            let global = config.burn_in + b as u64 * batch_len + s;
            advance(&mut state, &mut rng, &mut ws)
                .map_err(|site| LangevinError::Diverged { site, step: global })?;
            for j in 0..n {
                qsq[j] += state.q[j] * state.q[j];
                psq[j] += state.p[j] * state.p[j];
            }
            for j in 0..nb {
                flux[j] += nn_bond_flux(&state, coupling, j);
            }
        }
        let inv = 1.0 / batch_len as f64;
        qsq.iter_mut().for_each(|v| *v *= inv);
        psq.iter_mut().for_each(|v| *v *= inv);
        flux.iter_mut().for_each(|v| *v *= inv);
        acc.qsq.push(qsq);
        acc.psq.push(psq);
        acc.flux.push(flux);
    }
    Ok(acc)
}

fn stats_from_batches(
    params: &ChainParams,
    batches: &BatchAccumulator,
    samples: u64,
) -> ObservableStats {
    let n = params.n();
    let nb = n.saturating_sub(1);
    let nbatch = batches.qsq.len();

    let summarize = |series: &[Vec<f64>], len: usize| -> (Vec<f64>, Vec<f64>) {
        let mut mean = vec![0.0; len];
        let mut se = vec![0.0; len];
        for j in 0..len {
            let m: f64 = series.iter().map(|b| b[j]).sum::<f64>() / nbatch as f64;
            let var: f64 = series.iter().map(|b| (b[j] - m) * (b[j] - m)).sum::<f64>()
                / (nbatch as f64 - 1.0);
            mean[j] = m;
            se[j] = (var / nbatch as f64).sqrt();
        }
        (mean, se)
    };

    let (mean_qsq, se_qsq) = summarize(&batches.qsq, n);
    let (mean_psq, se_psq) = summarize(&batches.psq, n);
    let (bond_flux, se_bond_flux) = summarize(&batches.flux, nb);
    let reservoir: Vec<f64> = (0..n).map(|j| reservoir_flux(j, &mean_psq, params)).collect();

    ObservableStats {
        n,
        mean_qsq,
        se_qsq,
        mean_psq,
        se_psq,
        bond_flux,
        se_bond_flux,
        reservoir_flux: reservoir,
        samples,
        batch_count: nbatch,
    }
}

/// Runs a single trajectory from the zero state. Deterministic in
/// (seed, params, config); identical output across repeated calls.
pub fn run(
    params: &ChainParams,
    config: &SimConfig,
    scheme: Scheme,
) -> Result<ObservableStats, LangevinError> {
    let coupling = build_coupling(params)?;
    let batches = run_batches(params, &coupling, config, scheme, 0, None)?;
    let batch_len = config.n_steps / config.batch_count as u64;
    Ok(stats_from_batches(
        params,
        &batches,
        batch_len * config.batch_count as u64,
    ))
}

/// Runs `replicas` independent trajectories in parallel and pools their
/// batches. Each replica owns the RNG stream `(seed, replica-id)`, so the
/// result does not depend on the worker count or scheduling.
pub fn run_replicas(
    params: &ChainParams,
    config: &SimConfig,
    scheme: Scheme,
    replicas: usize,
) -> Result<ObservableStats, LangevinError> {
    assert!(replicas >= 1);
    let coupling = build_coupling(params)?;
    let results: Vec<Result<BatchAccumulator, LangevinError>> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| run_batches(params, &coupling, config, scheme, r, None))
        .collect();
    let mut pooled = BatchAccumulator {
        qsq: Vec::new(),
        psq: Vec::new(),
        flux: Vec::new(),
    };
    for res in results {
        let acc = res?;
        pooled.qsq.extend(acc.qsq);
        pooled.psq.extend(acc.psq);
        pooled.flux.extend(acc.flux);
    }
    let batch_len = config.n_steps / config.batch_count as u64;
    let samples = batch_len * config.batch_count as u64 * replicas as u64;
    Ok(stats_from_batches(params, &pooled, samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::CouplingLaw;
    use approx::assert_relative_eq;

    fn decoupled(n: usize, m: f64, lambda: f64, zeta: f64, t: f64) -> ChainParams {
        ChainParams::uniform(n, m, lambda, zeta, t, CouplingLaw::power_law(0.0, 2.0)).unwrap()
    }

    #[test]
    fn single_euler_step_hand_value() {
        // T = 0, zeta = 0, lambda = 0, N = 1, M = 1, (q,p) = (1,0), dt = 0.1.
        let params = decoupled(1, 1.0, 0.0, 0.0, 1e-300);
        let coupling = build_coupling(&params).unwrap();
        let mut state = PhaseState::new(vec![1.0], vec![0.0], 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        step(&mut state, &params, &coupling, 0.1, &mut rng).unwrap();
        assert_relative_eq!(state.q[0], 1.0, max_relative = 1e-15);
        assert_relative_eq!(state.p[0], -0.1, max_relative = 1e-12);
    }

    #[test]
    fn deterministic_energy_drift_is_small() {
        // Harmonic oscillator, no bath: energy drift under the reference
        // scheme stays below 5% over 10 periods at dt = 1e-3.
        let params = decoupled(1, 1.0, 0.0, 0.0, 1e-300);
        let coupling = build_coupling(&params).unwrap();
        let mut state = PhaseState::new(vec![1.0], vec![0.0], 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let dt = 1e-3;
        let steps = (10.0 * 2.0 * std::f64::consts::PI / dt) as u64;
        let e0 = crate::chain::total_energy(&state, &params, &coupling);
        let mut ws = Workspace::new(&params, dt);
        for _ in 0..steps {
            step_em_inner(&mut state, &params, &coupling, dt, &mut rng, &mut ws).unwrap();
        }
        let e1 = crate::chain::total_energy(&state, &params, &coupling);
        assert!(
            (e1 - e0).abs() / e0 < 0.05,
            "energy drift {:.3}% too large",
            100.0 * (e1 - e0).abs() / e0
        );
    }

    #[test]
    fn equilibrium_covariance_single_site() {
        // N = 1, harmonic, zeta = 1, T = 2, M = 1: <p²> -> 2, <q²> -> 2.
        let params = decoupled(1, 1.0, 0.0, 1.0, 2.0);
        let config = SimConfig {
            dt: 1e-3,
            burn_in: 20_000,
            n_steps: 2_000_000,
            seed: 42,
            batch_count: 20,
        };
        for scheme in [Scheme::EulerMaruyama, Scheme::Splitting] {
            let stats = run(&params, &config, scheme).unwrap();
            assert!(
                (stats.mean_psq[0] - 2.0).abs() < 3.0 * stats.se_psq[0] + 2e-3,
                "<p²> = {} +- {} (scheme {scheme:?})",
                stats.mean_psq[0],
                stats.se_psq[0]
            );
            assert!(
                (stats.mean_qsq[0] - 2.0).abs() < 3.0 * stats.se_qsq[0] + 2e-3,
                "<q²> = {} +- {} (scheme {scheme:?})",
                stats.mean_qsq[0],
                stats.se_qsq[0]
            );
        }
    }

    #[test]
    fn flux_formulas() {
        let params =
            ChainParams::uniform(2, 1.0, 0.0, 1.0, 1.0, CouplingLaw::power_law(1.0, 2.0)).unwrap();
        let coupling = build_coupling(&params).unwrap();
        // p = 0 gives zero flux.
        let state = PhaseState::new(vec![0.3, -0.4], vec![0.0, 0.0], 0.0).unwrap();
        assert_eq!(forward_flux(&state, &coupling, 0), 0.0);
        // J12 = 1, q = (1,0), p = (0,2): F_{1->} = 1*(1-0)*(0+2)/2 = 1.
        let state = PhaseState::new(vec![1.0, 0.0], vec![0.0, 2.0], 0.0).unwrap();
        assert_relative_eq!(forward_flux(&state, &coupling, 0), 1.0, max_relative = 1e-14);
        // Ordered-pair antisymmetry.
        assert_relative_eq!(
            pair_flux(&state, &coupling, 0, 1),
            -pair_flux(&state, &coupling, 1, 0),
            max_relative = 1e-14
        );
    }

    #[test]
    fn reservoir_flux_values() {
        let params = decoupled(2, 1.0, 0.0, 2.0, 1.0);
        // <p²> = T gives zero.
        assert_eq!(reservoir_flux(0, &[1.0, 1.0], &params), 0.0);
        // zeta = 2, T = 1, <p²> = 0.5 gives 1.0.
        assert_relative_eq!(
            reservoir_flux(1, &[1.0, 0.5], &params),
            1.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn reservoir_fluxes_balance_in_equilibrium() {
        // Stationary state: sum of reservoir fluxes is zero within error bars.
        let params =
            ChainParams::uniform(4, 1.0, 1.0, 1.0, 1.0, CouplingLaw::power_law(0.2, 2.0)).unwrap();
        let config = SimConfig {
            dt: 1e-3,
            burn_in: 50_000,
            n_steps: 1_000_000,
            seed: 7,
            batch_count: 20,
        };
        let stats = run(&params, &config, Scheme::EulerMaruyama).unwrap();
        let total: f64 = stats.reservoir_flux.iter().sum();
        let err: f64 = stats
            .se_psq
            .iter()
            .map(|s| s * params.bath_coupling()[0])
            .sum::<f64>();
        assert!(
            total.abs() < 3.0 * err + 5e-3,
            "net reservoir flux {total} exceeds error allowance {err}"
        );
    }

    #[test]
    fn equilibrium_bond_fluxes_vanish() {
        let params =
            ChainParams::uniform(4, 1.0, 1.0, 1.0, 1.0, CouplingLaw::power_law(0.2, 2.0)).unwrap();
        let config = SimConfig {
            dt: 1e-3,
            burn_in: 50_000,
            n_steps: 800_000,
            seed: 11,
            batch_count: 20,
        };
        let stats = run(&params, &config, Scheme::EulerMaruyama).unwrap();
        for b in 0..stats.bond_flux.len() {
            assert!(
                stats.bond_flux[b].abs() < 3.0 * stats.se_bond_flux[b] + 1e-4,
                "bond {b} flux {} +- {}",
                stats.bond_flux[b],
                stats.se_bond_flux[b]
            );
        }
    }

    #[test]
    fn same_seed_gives_identical_stats() {
        let params =
            ChainParams::uniform(3, 1.0, 0.5, 1.0, 1.0, CouplingLaw::power_law(0.1, 2.0)).unwrap();
        let config = SimConfig {
            dt: 1e-3,
            burn_in: 100,
            n_steps: 5_000,
            seed: 99,
            batch_count: 5,
        };
        let a = run(&params, &config, Scheme::EulerMaruyama).unwrap();
        let b = run(&params, &config, Scheme::EulerMaruyama).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn replica_pooling_is_order_deterministic() {
        let params =
            ChainParams::uniform(3, 1.0, 0.5, 1.0, 1.0, CouplingLaw::power_law(0.1, 2.0)).unwrap();
        let config = SimConfig {
            dt: 1e-3,
            burn_in: 100,
            n_steps: 4_000,
            seed: 5,
            batch_count: 4,
        };
        let a = run_replicas(&params, &config, Scheme::EulerMaruyama, 3).unwrap();
        let b = run_replicas(&params, &config, Scheme::EulerMaruyama, 3).unwrap();
        assert_eq!(a, b);
        // Replica 0 alone reproduces the single-run result.
        let single = run(&params, &config, Scheme::EulerMaruyama).unwrap();
        let rep1 = run_replicas(&params, &config, Scheme::EulerMaruyama, 1).unwrap();
        assert_eq!(single, rep1);
    }

    #[test]
    fn divergence_reports_site_and_step() {
        // A huge initial amplitude with the quartic force blows up fast.
        let params = decoupled(2, 1.0, 1.0, 0.1, 1.0);
        let coupling = build_coupling(&params).unwrap();
        let config = SimConfig {
            dt: 0.4,
            burn_in: 0,
            n_steps: 100,
            seed: 1,
            batch_count: 2,
        };
        let initial = PhaseState::new(vec![1e4, 0.0], vec![0.0, 0.0], 0.0).unwrap();
        let err = run_batches(
            &params,
            &coupling,
            &config,
            Scheme::EulerMaruyama,
            0,
            Some(&initial),
        )
        .unwrap_err();
        match err {
            LangevinError::Diverged { site, step } => {
                assert!(site < 2);
                assert!(step < 100);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn dt_halving_changes_less_than_statistical_error() {
        let params = decoupled(2, 1.0, 1.0, 1.0, 1.5);
        let coarse = SimConfig {
            dt: 2e-3,
            burn_in: 20_000,
            n_steps: 1_000_000,
            seed: 3,
            batch_count: 20,
        };
        let fine = SimConfig {
            dt: 1e-3,
            burn_in: 40_000,
            n_steps: 2_000_000,
            seed: 4,
            batch_count: 20,
        };
        let a = run(&params, &coarse, Scheme::EulerMaruyama).unwrap();
        let b = run(&params, &fine, Scheme::EulerMaruyama).unwrap();
        for j in 0..2 {
            let err = 3.0 * (a.se_psq[j].powi(2) + b.se_psq[j].powi(2)).sqrt();
            assert!(
                (a.mean_psq[j] - b.mean_psq[j]).abs() < err + 2e-3,
                "site {j}: {} vs {} (allowance {err})",
                a.mean_psq[j],
                b.mean_psq[j]
            );
        }
    }

    #[test]
    fn config_validation() {
        let params = decoupled(2, 1.0, 0.0, 2.0, 1.0);
        let bad = SimConfig {
            dt: 0.3,
            burn_in: 0,
            n_steps: 100,
            seed: 0,
            batch_count: 2,
        };
        assert!(matches!(
            bad.validate(&params),
            Err(LangevinError::UnstableDt { .. })
        ));
        let bad = SimConfig {
            dt: 1e-3,
            burn_in: 0,
            n_steps: 100,
            seed: 0,
            batch_count: 1,
        };
        assert!(matches!(
            bad.validate(&params),
            Err(LangevinError::TooFewBatches(1))
        ));
    }

    #[test]
    fn csv_has_fixed_layout() {
        let params = decoupled(2, 1.0, 0.0, 1.0, 1.0);
        let config = SimConfig {
            dt: 1e-3,
            burn_in: 10,
            n_steps: 100,
            seed: 0,
            batch_count: 2,
        };
        let stats = run(&params, &config, Scheme::EulerMaruyama).unwrap();
        let csv = stats.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with('#'));
        assert_eq!(
            lines[1],
            "kind,index,mean_qsq,se_qsq,mean_psq,se_psq,flux,se_flux,reservoir_flux,samples"
        );
        assert_eq!(lines.len(), 2 + 2 + 1); // header x2, 2 sites, 1 bond
    }
}
