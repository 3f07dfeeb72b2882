//! Space-time lattice of cells for the discrete-time expansion.
//!
//! A cell `x = (x₀, x⃗)` pairs the (scaled) position variable at time `x₀`
//! with the momentum variable at time `x₀ + ε`; times run over
//! `{ε, 2ε, ..., 𝔗}` with `ε = 1/ζ` and sites over `{1, ..., N}`. The final
//! time slice has no paired momentum, so its cells carry the position
//! variable only; the first slice differs from the bulk only by an extra
//! decoupled Gaussian factor that cancels in every normalized quantity.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LatticeError {
    #[error("lattice needs at least one time slice and one site")]
    Empty,
    #[error("bath coupling must be positive to set the time step eps = 1/zeta")]
    NonPositiveZeta,
    #[error("cell ({it}, {site}) outside lattice of {n_time} slices x {n_sites} sites")]
    CellOutOfRange {
        it: usize,
        site: usize,
        n_time: usize,
        n_sites: usize,
    },
}

/// Which single-spin measure a cell carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    /// Full two-variable cell in the bulk.
    Interior,
    /// First time slice: bulk weight times a decoupled Gaussian in the
    /// unpaired initial momentum (the extra factor normalizes away).
    TimeStart,
    /// Final time slice: position variable only.
    TimeEnd,
}

impl CellKind {
    pub fn has_momentum(&self) -> bool {
        !matches!(self, CellKind::TimeEnd)
    }
}

/// One space-time cell, indexed by time slice and site (both 0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub it: usize,
    pub site: usize,
}

/// The finite space-time box `{ε..𝔗} x {1..N}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    pub eps: f64,
    pub n_time: usize,
    pub n_sites: usize,
}

impl Lattice {
    /// Builds the lattice with `ε = 1/ζ`.
    pub fn new(zeta: f64, n_time: usize, n_sites: usize) -> Result<Self, LatticeError> {
        if n_time == 0 || n_sites == 0 {
            return Err(LatticeError::Empty);
        }
        if !(zeta > 0.0) {
            return Err(LatticeError::NonPositiveZeta);
        }
        Ok(Lattice {
            eps: 1.0 / zeta,
            n_time,
            n_sites,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.n_time * self.n_sites
    }

    /// Total time extent 𝔗 = n_time · ε.
    pub fn time_extent(&self) -> f64 {
        self.eps * self.n_time as f64
    }

    pub fn kind(&self, cell: Cell) -> CellKind {
        if cell.it + 1 == self.n_time {
            CellKind::TimeEnd
        } else if cell.it == 0 {
            CellKind::TimeStart
        } else {
            CellKind::Interior
        }
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.it < self.n_time && cell.site < self.n_sites
    }

    pub fn check(&self, cell: Cell) -> Result<(), LatticeError> {
        if self.contains(cell) {
            Ok(())
        } else {
            Err(LatticeError::CellOutOfRange {
                it: cell.it,
                site: cell.site,
                n_time: self.n_time,
                n_sites: self.n_sites,
            })
        }
    }

    /// Flat index, time-major.
    pub fn index(&self, cell: Cell) -> usize {
        cell.it * self.n_sites + cell.site
    }

    pub fn cell(&self, index: usize) -> Cell {
        Cell {
            it: index / self.n_sites,
            site: index % self.n_sites,
        }
    }

    pub fn cells(&self) -> Vec<Cell> {
        (0..self.n_cells()).map(|i| self.cell(i)).collect()
    }

    /// |x₀ - y₀| in units of ε.
    pub fn time_gap(&self, x: Cell, y: Cell) -> usize {
        x.it.abs_diff(y.it)
    }

    /// |x⃗ - y⃗| in lattice spacings.
    pub fn space_gap(&self, x: Cell, y: Cell) -> usize {
        x.site.abs_diff(y.site)
    }
}
