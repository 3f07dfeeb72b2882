//! Self-consistent bath temperatures: the internal reservoir temperatures
//! T_2..T_{N-1} are tuned until every inner reservoir exchanges zero net
//! energy with its site in the steady state.
//!
//! The fixed-point map is `T_j <- (1-η) T_j + η <p_j²>`, which has
//! `R_j = ζ_j (T_j - <p_j²>) = 0` as its fixed point. Damping is needed
//! because `<p_j²>` is a noisy, coupled function of the whole profile.

use crate::chain::{ChainError, ChainParams};
use crate::langevin::{run_replicas, LangevinError, ObservableStats, Scheme, SimConfig};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScError {
    #[error("damping must lie in (0, 1], got {0}")]
    BadDamping(f64),
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("self-consistent solve needs N >= 3, got {0}")]
    ChainTooShort(usize),
    #[error("no convergence after {iterations} outer iterations (last max residual {last_residual:.3e})")]
    NonConvergence {
        iterations: usize,
        last_residual: f64,
        trace: Vec<TraceRow>,
    },
    #[error(transparent)]
    Langevin(#[from] LangevinError),
    #[error(transparent)]
    Chain(#[from] ChainError),
}

/// Outer-loop configuration for the profile solve.
#[derive(Debug, Clone, PartialEq)]
pub struct ScSolveConfig {
    pub damping: f64,
    pub tol: f64,
    pub max_outer: usize,
    pub sim: SimConfig,
    pub scheme: Scheme,
    pub replicas: usize,
    /// Starting interior profile; linear interpolation between the boundary
    /// temperatures when absent.
    pub initial_temps: Option<Vec<f64>>,
}

/// One outer-iteration record.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub max_residual: f64,
    pub median_residual: f64,
    pub temps: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ScSolution {
    pub temps: Vec<f64>,
    pub stats: ObservableStats,
    pub trace: Vec<TraceRow>,
}

impl ScSolution {
    pub fn trace_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("# self-consistent solve trace\n");
        out.push_str("iteration,max_residual,median_residual,profile\n");
        for row in &self.trace {
            let profile: Vec<String> = row.temps.iter().map(|t| t.to_string()).collect();
            out.push_str(&format!(
                "{},{},{},{}\n",
                row.iteration,
                row.max_residual,
                row.median_residual,
                profile.join(";")
            ));
        }
        out
    }
}

/// Linear interpolation between the boundary temperatures; exact for the
/// harmonic nearest-neighbor chain in the bulk.
pub fn linear_initial_profile(t1: f64, tn: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| t1 + (tn - t1) * j as f64 / (n - 1) as f64)
        .collect()
}

fn interior_residuals(params: &ChainParams, stats: &ObservableStats) -> Vec<f64> {
    let n = params.n();
    (1..n - 1)
        .map(|j| params.bath_coupling()[j] * (params.temps()[j] - stats.mean_psq[j]))
        .collect()
}

fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().map(|x| x.abs()).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if v.is_empty() {
        0.0
    } else if v.len() % 2 == 1 {
        v[v.len() / 2]
    } else {
        0.5 * (v[v.len() / 2 - 1] + v[v.len() / 2])
    }
}

/// Solves for the self-consistent internal temperature profile.
///
/// Boundary temperatures are held fixed. The initial interior profile is the
/// linear interpolation between them. Returns the converged profile, the
/// statistics of the final run and the per-iteration residual trace.
pub fn solve_profile(params: &ChainParams, config: &ScSolveConfig) -> Result<ScSolution, ScError> {
    if !(config.damping > 0.0 && config.damping <= 1.0) {
        return Err(ScError::BadDamping(config.damping));
    }
    if !(config.tol > 0.0) {
        return Err(ScError::BadTolerance(config.tol));
    }
    let n = params.n();
    if n < 3 {
        return Err(ScError::ChainTooShort(n));
    }

    let t1 = params.temps()[0];
    let tn = params.temps()[n - 1];
    let mut work = params.clone();
    match &config.initial_temps {
        Some(temps) => {
            let mut start = temps.clone();
            if start.len() == n {
                start[0] = t1;
                start[n - 1] = tn;
            }
            work.set_temps(start)?;
        }
        None => work.set_temps(linear_initial_profile(t1, tn, n))?,
    }

    let mut trace: Vec<TraceRow> = Vec::new();
    for iter in 1..=config.max_outer {
        // A fresh RNG stream block per outer iteration keeps iterations
        // independent while staying fully deterministic.
        let mut sim = config.sim.clone();
        sim.seed = config.sim.seed.wrapping_add(1_000_003 * iter as u64);
        let stats = run_replicas(&work, &sim, config.scheme, config.replicas)?;
        let residuals = interior_residuals(&work, &stats);
        let max_residual = residuals.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
        trace.push(TraceRow {
            iteration: iter,
            max_residual,
            median_residual: median(&residuals),
            temps: work.temps().to_vec(),
        });

        if max_residual <= config.tol {
            return Ok(ScSolution {
                temps: work.temps().to_vec(),
                stats,
                trace,
            });
        }

        let mut temps = work.temps().to_vec();
        for j in 1..n - 1 {
            temps[j] = (1.0 - config.damping) * temps[j] + config.damping * stats.mean_psq[j];
            // The target of the map is a kinetic temperature; keep it in the
            // admissible (positive) set even under statistical noise.
            temps[j] = temps[j].max(1e-12);
        }
        work.set_temps(temps)?;
    }

    let last = trace.last().map(|r| r.max_residual).unwrap_or(f64::NAN);
    Err(ScError::NonConvergence {
        iterations: config.max_outer,
        last_residual: last,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::CouplingLaw;

    fn quick_sim(seed: u64, n_steps: u64) -> SimConfig {
        SimConfig {
            dt: 1e-3,
            burn_in: 20_000,
            n_steps,
            seed,
            batch_count: 20,
        }
    }

    #[test]
    fn equilibrium_profile_is_idempotent() {
        // Equal boundary temperatures: the flat profile satisfies the
        // self-consistent condition immediately, so the solver exits after
        // a single outer iteration.
        let params =
            ChainParams::uniform(4, 1.0, 1.0, 1.0, 1.0, CouplingLaw::nearest_neighbor(0.1))
                .unwrap();
        let config = ScSolveConfig {
            damping: 0.5,
            tol: 0.08,
            max_outer: 10,
            sim: quick_sim(2, 8_000_000),
            scheme: Scheme::EulerMaruyama,
            replicas: 1,
            initial_temps: None,
        };
        let sol = solve_profile(&params, &config).unwrap();
        assert_eq!(sol.trace.len(), 1);
        for t in &sol.temps {
            assert!((t - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn boundaries_stay_fixed_and_residuals_drop() {
        let mut params =
            ChainParams::uniform(4, 1.0, 1.0, 1.0, 1.0, CouplingLaw::nearest_neighbor(0.3))
                .unwrap();
        params.set_temps(vec![1.4, 1.0, 1.0, 0.6]).unwrap();
        let config = ScSolveConfig {
            damping: 0.7,
            tol: 0.06,
            max_outer: 25,
            sim: quick_sim(5, 4_000_000),
            scheme: Scheme::EulerMaruyama,
            replicas: 1,
            initial_temps: None,
        };
        let sol = solve_profile(&params, &config).unwrap();
        assert_eq!(sol.temps[0], 1.4);
        assert_eq!(sol.temps[3], 0.6);
        let last = sol.trace.last().unwrap();
        assert!(last.max_residual <= config.tol);
        // The interior profile lies between the boundary temperatures.
        for j in 1..3 {
            assert!(sol.temps[j] < 1.4 && sol.temps[j] > 0.6);
        }
    }

    #[test]
    fn median_residual_decreases_over_early_iterations() {
        // eta = 0.5, tolerance set unreachably small so the loop runs long
        // enough to watch the transient contraction. Weak bath coupling
        // makes the kinetic temperatures mix strongly across the chain, so
        // starting the interior at the cold boundary value gives a residual
        // signal far above the statistical floor.
        let mut params =
            ChainParams::uniform(6, 1.0, 0.0, 0.1, 1.0, CouplingLaw::nearest_neighbor(0.45))
                .unwrap();
        params.set_temps(vec![3.0, 1.0, 1.0, 1.0, 1.0, 0.3]).unwrap();
        let config = ScSolveConfig {
            damping: 0.5,
            tol: 1e-9,
            max_outer: 6,
            sim: SimConfig {
                dt: 2e-3,
                burn_in: 100_000,
                n_steps: 10_000_000,
                seed: 9,
                batch_count: 20,
            },
            scheme: Scheme::EulerMaruyama,
            replicas: 1,
            initial_temps: Some(vec![3.0, 0.3, 0.3, 0.3, 0.3, 0.3]),
        };
        let err = solve_profile(&params, &config).unwrap_err();
        let trace = match err {
            ScError::NonConvergence { trace, .. } => trace,
            other => panic!("expected controlled non-convergence, got {other}"),
        };
        assert!(trace.len() >= 5);
        let mut decreasing = 0;
        for w in trace.windows(2).take(5) {
            if w[1].median_residual < w[0].median_residual {
                decreasing += 1;
            }
        }
        // Allow statistical reversals once the residual reaches the noise
        // floor; the early contraction must still dominate.
        assert!(
            decreasing >= 3,
            "median residuals did not contract: {:?}",
            trace.iter().map(|r| r.median_residual).collect::<Vec<_>>()
        );
    }

    #[test]
    fn rejects_bad_configuration() {
        let params =
            ChainParams::uniform(4, 1.0, 0.0, 1.0, 1.0, CouplingLaw::nearest_neighbor(0.1))
                .unwrap();
        let mut config = ScSolveConfig {
            damping: 0.0,
            tol: 0.01,
            max_outer: 5,
            sim: quick_sim(0, 1_000),
            scheme: Scheme::EulerMaruyama,
            replicas: 1,
            initial_temps: None,
        };
        assert!(matches!(
            solve_profile(&params, &config),
            Err(ScError::BadDamping(_))
        ));
        config.damping = 0.5;
        config.tol = -1.0;
        assert!(matches!(
            solve_profile(&params, &config),
            Err(ScError::BadTolerance(_))
        ));
        let short =
            ChainParams::uniform(2, 1.0, 0.0, 1.0, 1.0, CouplingLaw::nearest_neighbor(0.1))
                .unwrap();
        config.tol = 0.01;
        assert!(matches!(
            solve_profile(&short, &config),
            Err(ScError::ChainTooShort(2))
        ));
    }
}
