//! Discrete-time polymer (cluster) expansion engine: lattice cells, the
//! single-spin reference measure, pair link weights, activities, truncated
//! series for the log-partition function and the two-point correlation, and
//! the summability certificate with its decay kernels.

pub mod activity;
pub mod graphs;
pub mod kernel;
pub mod kp;
pub mod lattice;
pub mod links;
pub mod series;
pub mod ssd;

use crate::chain::{build_coupling, ChainError, ChainParams, CouplingMatrix};
use lattice::{Cell, CellKind, Lattice, LatticeError};
use links::LinkTerm;
use ssd::{CellMeasure, SsdError, SsdSpec};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PolymerError {
    #[error("the lattice model requires a uniform bath coupling; got {0:?}")]
    NonUniformZeta(Vec<f64>),
    #[error("the lattice model requires a uniform pinning; got {0:?}")]
    NonUniformPinning(Vec<f64>),
    #[error("the lattice model requires lambda > 0, got {0}")]
    NonPositiveLambda(f64),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Ssd(#[from] SsdError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error("polymer size {size} outside supported range {min}..={max}")]
    PolymerSize { size: usize, min: usize, max: usize },
    #[error("lattice of {cells} cells too large for this operation (cap {cap})")]
    LatticeTooLarge { cells: usize, cap: usize },
    #[error("series order {0} above cap {1}")]
    OrderTooLarge(usize, usize),
    #[error("momentum observable requested on the final time slice")]
    MomentumObservableAtTimeEnd,
    #[error(transparent)]
    Graph(#[from] graphs::GraphError),
    #[error(transparent)]
    Certificate(#[from] kp::KpError),
}

/// Numerical knobs for the expansion engine.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadSettings {
    /// Nodes per half-axis for per-cell moment tables (pair activities).
    pub half_nodes_pair: usize,
    /// Nodes per half-axis for the three-cell product quadrature.
    pub half_nodes_tri: usize,
    /// Coarse nodes per half-axis for the three-cell error estimate.
    pub half_nodes_tri_coarse: usize,
    /// Monte Carlo samples for four- and five-cell activities.
    pub mc_samples: u64,
    pub mc_batches: usize,
    pub mc_seed: u64,
    /// Relative tolerance for truncating the pair Taylor series.
    pub taylor_tol: f64,
    pub taylor_max_order: usize,
}

impl Default for QuadSettings {
    fn default() -> Self {
        QuadSettings {
            half_nodes_pair: 32,
            half_nodes_tri: 9,
            half_nodes_tri_coarse: 6,
            mc_samples: 200_000,
            mc_batches: 20,
            mc_seed: 0x9e3779b97f4a7c15,
            taylor_tol: 1e-12,
            taylor_max_order: 40,
        }
    }
}

/// Physical and numerical constants of the lattice model.
#[derive(Debug, Clone)]
pub struct PolymerModel {
    pub lattice: Lattice,
    pub coupling: CouplingMatrix,
    /// Per-site γ⁻¹ = 1/(2ζT_j).
    pub gamma_inv: Vec<f64>,
    pub zeta: f64,
    pub m: f64,
    pub lambda: f64,
    pub c1: f64,
    pub quad: QuadSettings,
}

impl PolymerModel {
    /// Builds the model from chain parameters. The expansion assumes a
    /// uniform bath coupling and pinning; temperatures may vary per site.
    /// The time step is always `ε = 1/ζ`.
    pub fn new(
        chain: &ChainParams,
        n_time: usize,
        c1: f64,
        quad: QuadSettings,
    ) -> Result<Self, PolymerError> {
        let zeta = chain.bath_coupling()[0];
        if chain
            .bath_coupling()
            .iter()
            .any(|&z| (z - zeta).abs() > 1e-12 * zeta.abs().max(1.0))
        {
            return Err(PolymerError::NonUniformZeta(chain.bath_coupling().to_vec()));
        }
        let m = chain.pinning()[0];
        if chain
            .pinning()
            .iter()
            .any(|&p| (p - m).abs() > 1e-12 * m.abs().max(1.0))
        {
            return Err(PolymerError::NonUniformPinning(chain.pinning().to_vec()));
        }
        if !(chain.lambda() > 0.0) {
            return Err(PolymerError::NonPositiveLambda(chain.lambda()));
        }
        let lattice = Lattice::new(zeta, n_time, chain.n())?;
        let coupling = build_coupling(chain)?;
        let gamma_inv = chain
            .temps()
            .iter()
            .map(|&t| 1.0 / (2.0 * zeta * t))
            .collect();
        Ok(PolymerModel {
            lattice,
            coupling,
            gamma_inv,
            zeta,
            m,
            lambda: chain.lambda(),
            c1,
            quad,
        })
    }

    pub fn eps(&self) -> f64 {
        self.lattice.eps
    }

    /// Single-spin weight coefficients for one cell.
    pub fn spec_for(&self, cell: Cell, half_nodes: usize) -> SsdSpec {
        let kind = self.lattice.kind(cell);
        let ginv = self.gamma_inv[cell.site];
        match kind {
            CellKind::TimeEnd => {
                SsdSpec::time_end(self.eps(), ginv, self.m, self.lambda, half_nodes)
            }
            _ => SsdSpec::bulk(
                kind,
                self.eps(),
                ginv,
                self.m,
                self.zeta,
                self.c1,
                self.lambda,
                half_nodes,
            ),
        }
    }
}

/// The model plus evaluated per-cell measures and cached pair link terms.
pub struct PolymerContext {
    pub model: PolymerModel,
    measures: Vec<CellMeasure>,
    measures_tri: Vec<CellMeasure>,
    measures_tri_coarse: Vec<CellMeasure>,
    pair_terms: Vec<Vec<LinkTerm>>,
}

impl PolymerContext {
    pub fn new(model: PolymerModel) -> Result<Self, PolymerError> {
        let n = model.lattice.n_cells();
        let mut measures = Vec::with_capacity(n);
        let mut measures_tri = Vec::with_capacity(n);
        let mut measures_tri_coarse = Vec::with_capacity(n);
        for i in 0..n {
            let cell = model.lattice.cell(i);
            // Degree caps: pair Taylor sums reach high monomial orders, the
            // pointwise product quadrature only needs the weight itself.
            measures.push(CellMeasure::new(
                model.spec_for(cell, model.quad.half_nodes_pair),
                130,
                45,
            )?);
            measures_tri.push(CellMeasure::new(
                model.spec_for(cell, model.quad.half_nodes_tri),
                12,
                6,
            )?);
            measures_tri_coarse.push(CellMeasure::new(
                model.spec_for(cell, model.quad.half_nodes_tri_coarse),
                12,
                6,
            )?);
        }
        let mut pair_terms = vec![Vec::new(); n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    pair_terms[i * n + j] = links::pair_terms(
                        model.lattice.cell(i),
                        model.lattice.cell(j),
                        &model,
                    );
                }
            }
        }
        Ok(PolymerContext {
            model,
            measures,
            measures_tri,
            measures_tri_coarse,
            pair_terms,
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.model.lattice
    }

    pub fn measure(&self, cell: Cell) -> &CellMeasure {
        &self.measures[self.model.lattice.index(cell)]
    }

    pub(crate) fn measure_tri(&self, cell: Cell, coarse: bool) -> &CellMeasure {
        let i = self.model.lattice.index(cell);
        if coarse {
            &self.measures_tri_coarse[i]
        } else {
            &self.measures_tri[i]
        }
    }

    /// Link terms of the unordered pair {x, y}, expressed in the (x, y)
    /// frame (both orientations of all six kinds, zero terms dropped).
    pub fn pair_terms(&self, x: Cell, y: Cell) -> &[LinkTerm] {
        let n = self.model.lattice.n_cells();
        let i = self.model.lattice.index(x);
        let j = self.model.lattice.index(y);
        &self.pair_terms[i * n + j]
    }

    /// Whether any link couples the pair.
    pub fn pair_coupled(&self, x: Cell, y: Cell) -> bool {
        !self.pair_terms(x, y).is_empty()
    }

    /// Total pair exponent `G_{xy}(ψ_x, ψ_y)`; the single overall sign of
    /// the expansion is applied here.
    pub fn g_pair(&self, x: Cell, y: Cell, qx: f64, px: f64, qy: f64, py: f64) -> f64 {
        let mut acc = 0.0;
        for t in self.pair_terms(x, y) {
            acc += t.coefficient
                * qx.powi(t.ex.0 as i32)
                * px.powi(t.ex.1 as i32)
                * qy.powi(t.ey.0 as i32)
                * py.powi(t.ey.1 as i32);
        }
        -acc
    }
}
