//! The six pair interactions `G^{(k)}_{xy}` coupling lattice cells.
//!
//! Each kind is a single monomial in `(q_x, p_x, q_y, p_y)` with a delta
//! pattern on the cell coordinates:
//!
//! * kinds 1-4 act at equal times between different sites (kind 3 sums the
//!   coupling over an intermediate site, kind 4 is cubic in `q_x`),
//! * kinds 5-6 act on one site across adjacent time slices with the stencil
//!   `δ - c₁(-Δ)` (kind 5, positions) and `-c₁ δ_{|x₀-y₀|,ε}` (kind 6,
//!   momenta).
//!
//! A term whose monomial needs the momentum of a final-slice cell does not
//! exist there and is dropped. Functions here return the bare `G^{(k)}`
//! value; the expansion applies the single overall sign
//! `G_{xy} = -Σ_k G^{(k)}_{xy}` once, in [`super::PolymerContext::g_pair`].

use super::lattice::Cell;
use super::PolymerModel;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LinkError {
    #[error("link kind index {0} invalid (valid: 1..=6)")]
    InvalidKind(u8),
}

/// The six interaction kinds, named by what couples to what.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    /// q_x p_y at equal times between different sites.
    PositionMomentum,
    /// q_x q_y at equal times between different sites.
    PositionPosition,
    /// q_x q_y mediated by the coupling through a third site.
    MediatedPosition,
    /// q_x³ q_y at equal times between different sites.
    CubicPosition,
    /// q_x q_y on one site across the temporal stencil δ - c₁(-Δ).
    TemporalPosition,
    /// p_x p_y on one site between adjacent time slices.
    TemporalMomentum,
}

impl LinkKind {
    pub const ALL: [LinkKind; 6] = [
        LinkKind::PositionMomentum,
        LinkKind::PositionPosition,
        LinkKind::MediatedPosition,
        LinkKind::CubicPosition,
        LinkKind::TemporalPosition,
        LinkKind::TemporalMomentum,
    ];

    pub fn index(&self) -> u8 {
        match self {
            LinkKind::PositionMomentum => 1,
            LinkKind::PositionPosition => 2,
            LinkKind::MediatedPosition => 3,
            LinkKind::CubicPosition => 4,
            LinkKind::TemporalPosition => 5,
            LinkKind::TemporalMomentum => 6,
        }
    }

    pub fn from_index(k: u8) -> Result<Self, LinkError> {
        Ok(match k {
            1 => LinkKind::PositionMomentum,
            2 => LinkKind::PositionPosition,
            3 => LinkKind::MediatedPosition,
            4 => LinkKind::CubicPosition,
            5 => LinkKind::TemporalPosition,
            6 => LinkKind::TemporalMomentum,
            other => return Err(LinkError::InvalidKind(other)),
        })
    }

    /// Monomial exponents ((q_x, p_x), (q_y, p_y)) of the oriented term.
    pub fn exponents(&self) -> ((u8, u8), (u8, u8)) {
        match self {
            LinkKind::PositionMomentum => ((1, 0), (0, 1)),
            LinkKind::PositionPosition => ((1, 0), (1, 0)),
            LinkKind::MediatedPosition => ((1, 0), (1, 0)),
            LinkKind::CubicPosition => ((3, 0), (1, 0)),
            LinkKind::TemporalPosition => ((1, 0), (1, 0)),
            LinkKind::TemporalMomentum => ((0, 1), (0, 1)),
        }
    }
}

/// One oriented monomial coupling, expressed in a fixed (x, y) cell frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkTerm {
    pub kind: LinkKind,
    /// The coefficient A^{(k)} (sign included, overall expansion sign not).
    pub coefficient: f64,
    pub ex: (u8, u8),
    pub ey: (u8, u8),
}

/// The coefficient of the oriented `G^{(k)}(x → y)`; zero whenever the
/// kind's delta pattern does not match the pair.
///
/// The diagonal `x = y` is accepted for the temporal-position kind only (the
/// stencil center `1 - 2c₁`); it is a diagnostic value, not a link the
/// expansion uses: expansion links always join distinct cells.
pub fn link_weight(kind: LinkKind, x: Cell, y: Cell, model: &PolymerModel) -> f64 {
    let lat = &model.lattice;
    let eps = model.eps();
    let lam = model.lambda;
    let same_time = x.it == y.it;
    let same_site = x.site == y.site;
    let gap = lat.time_gap(x, y);
    let x_has_p = lat.kind(x).has_momentum();
    let y_has_p = lat.kind(y).has_momentum();
    let ginv_x = model.gamma_inv[x.site];
    match kind {
        LinkKind::PositionMomentum => {
            if !same_time || same_site || !y_has_p {
                return 0.0;
            }
            eps * ginv_x * model.coupling.get(x.site, y.site) * lam.powf(-1.0 / 3.0)
        }
        LinkKind::PositionPosition => {
            if !same_time || same_site {
                return 0.0;
            }
            eps * ginv_x * model.coupling.get(x.site, y.site) * lam.powf(-2.0 / 3.0) * model.m
        }
        LinkKind::MediatedPosition => {
            if !same_time || same_site {
                return 0.0;
            }
            let mut inner = 0.0;
            for k in 0..lat.n_sites {
                if k == x.site || k == y.site {
                    continue;
                }
                inner += model.gamma_inv[k]
                    * model.coupling.get(x.site, k)
                    * model.coupling.get(k, y.site);
            }
            eps * lam.powf(-2.0 / 3.0) / 4.0 * inner
        }
        LinkKind::CubicPosition => {
            if !same_time || same_site {
                return 0.0;
            }
            eps * ginv_x * model.coupling.get(x.site, y.site) * lam.powf(-1.0 / 3.0)
        }
        LinkKind::TemporalPosition => {
            if !same_site {
                return 0.0;
            }
            let stencil = if same_time {
                1.0 - 2.0 * model.c1
            } else if gap == 1 {
                model.c1
            } else {
                0.0
            };
            2.0 * eps * ginv_x * lam.powf(-2.0 / 3.0) * model.m * stencil
        }
        LinkKind::TemporalMomentum => {
            if !same_site || gap != 1 || !x_has_p || !y_has_p {
                return 0.0;
            }
            -eps * ginv_x * model.zeta * model.c1
        }
    }
}

/// All oriented terms coupling the unordered pair {x, y}, both orientations,
/// expressed in the (x, y) frame; zero coefficients are dropped.
pub fn pair_terms(x: Cell, y: Cell, model: &PolymerModel) -> Vec<LinkTerm> {
    debug_assert!(x != y);
    let mut out = Vec::new();
    for kind in LinkKind::ALL {
        let (ex, ey) = kind.exponents();
        let forward = link_weight(kind, x, y, model);
        if forward != 0.0 {
            out.push(LinkTerm {
                kind,
                coefficient: forward,
                ex,
                ey,
            });
        }
        let backward = link_weight(kind, y, x, model);
        if backward != 0.0 {
            out.push(LinkTerm {
                kind,
                coefficient: backward,
                // The (y → x) orientation lands in the (x, y) frame with the
                // endpoint exponents swapped.
                ex: ey,
                ey: ex,
            });
        }
    }
    out
}
