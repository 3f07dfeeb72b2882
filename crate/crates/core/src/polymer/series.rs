//! Truncated cluster series: the log-partition function
//!
//! ```text
//! log Ξ_Λ = Σ_{n≥1} (1/n!) Σ_{R₁..R_n} φ^T(R₁..R_n) ρ(R₁)…ρ(R_n)
//! ```
//!
//! and the truncated two-point correlation `S₂(x₁; x₂)`, organized by the
//! number of polymers in the cluster. For `S₂` the series splits into the
//! tuples whose distinguished polymer contains both observable cells and the
//! tuples carrying them in two different polymers; one-cell contributions
//! are absorbed into centered `(ψ - ℓ)` insertions plus a same-cell local
//! term.

use super::activity::{Activity, Insertion, MAX_POLYMER_SIZE, MIN_POLYMER_SIZE};
use super::graphs::{ursell_overlap, URSELL_CAP};
use super::lattice::Cell;
use super::{PolymerContext, PolymerError};
use rayon::prelude::*;

/// Cap on the cells of a lattice that series enumeration will handle.
pub const SERIES_CELL_CAP: usize = 16;

/// Observable component selector for a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObsComponent {
    Position,
    Momentum,
}

impl ObsComponent {
    pub fn exponents(&self) -> (u8, u8) {
        match self {
            ObsComponent::Position => (1, 0),
            ObsComponent::Momentum => (0, 1),
        }
    }
}

/// A truncated series value with per-order contributions, the propagated
/// quadrature error and a truncation estimate (the magnitude of the last
/// computed order).
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesEstimate {
    pub value: f64,
    pub per_order: Vec<f64>,
    pub quad_error: f64,
    pub truncation_estimate: f64,
}

impl SeriesEstimate {
    pub fn combined_error(&self) -> f64 {
        self.quad_error + self.truncation_estimate
    }
}

/// Enumerates the admissible polymers (cell subsets whose link-support graph
/// is connected) with `2 ≤ |R| ≤ max_size`, in canonical bitmask order.
pub fn enumerate_polymers(
    ctx: &PolymerContext,
    max_size: usize,
) -> Result<Vec<u64>, PolymerError> {
    let n_cells = ctx.lattice().n_cells();
    if n_cells > SERIES_CELL_CAP {
        return Err(PolymerError::LatticeTooLarge {
            cells: n_cells,
            cap: SERIES_CELL_CAP,
        });
    }
    if !(MIN_POLYMER_SIZE..=MAX_POLYMER_SIZE).contains(&max_size) {
        return Err(PolymerError::PolymerSize {
            size: max_size,
            min: MIN_POLYMER_SIZE,
            max: MAX_POLYMER_SIZE,
        });
    }
    let mut out = Vec::new();
    for mask in 1u64..(1 << n_cells) {
        let size = mask.count_ones() as usize;
        if size < MIN_POLYMER_SIZE || size > max_size {
            continue;
        }
        let cells = cells_of_mask(ctx, mask);
        if ctx.support_connected(&cells) {
            out.push(mask);
        }
    }
    Ok(out)
}

fn cells_of_mask(ctx: &PolymerContext, mask: u64) -> Vec<Cell> {
    let mut cells = Vec::with_capacity(mask.count_ones() as usize);
    let mut m = mask;
    while m != 0 {
        let i = m.trailing_zeros() as usize;
        cells.push(ctx.lattice().cell(i));
        m &= m - 1;
    }
    cells
}

/// Polymers with their plain activities, computed once in canonical order.
pub struct PolymerTable {
    pub masks: Vec<u64>,
    pub activities: Vec<Activity>,
}

impl PolymerTable {
    pub fn build(ctx: &PolymerContext, max_size: usize) -> Result<Self, PolymerError> {
        let masks = enumerate_polymers(ctx, max_size)?;
        let activities: Result<Vec<Activity>, PolymerError> = masks
            .par_iter()
            .map(|&mask| ctx.activity(&cells_of_mask(ctx, mask)))
            .collect();
        Ok(PolymerTable {
            masks,
            activities: activities?,
        })
    }
}

/// Odometer over ordered index tuples with repetition.
fn for_each_tuple(count: usize, len: usize, mut f: impl FnMut(&[usize])) {
    if count == 0 {
        return;
    }
    let mut idx = vec![0usize; len];
    loop {
        f(&idx);
        let mut k = len;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < count {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Truncated series for `log Ξ_Λ`.
///
/// `max_n` caps the number of polymers per cluster, `max_size` the polymer
/// cardinality. Returns per-order contributions; the quadrature error is
/// propagated to first order through the products of activities.
pub fn log_partition_series(
    ctx: &PolymerContext,
    max_n: usize,
    max_size: usize,
) -> Result<SeriesEstimate, PolymerError> {
    if max_n == 0 || max_n > URSELL_CAP {
        return Err(PolymerError::OrderTooLarge(max_n, URSELL_CAP));
    }
    let table = PolymerTable::build(ctx, max_size)?;
    let p = table.masks.len();

    let mut per_order = Vec::with_capacity(max_n);
    let mut quad_error = 0.0;

    // Order 1: φ^T of a single polymer is 1.
    let order1: f64 = table.activities.iter().map(|a| a.value).sum();
    quad_error += table.activities.iter().map(|a| a.error).sum::<f64>();
    per_order.push(order1);

    let mut factorial = 1.0;
    for n in 2..=max_n {
        factorial *= n as f64;
        let mut term = 0.0;
        let mut err = 0.0;
        let mut masks_buf = vec![0u64; n];
        for_each_tuple(p, n, |idx| {
            for (k, &i) in idx.iter().enumerate() {
                masks_buf[k] = table.masks[i];
            }
            let phi = ursell_overlap(&masks_buf).expect("tuple order under cap");
            if phi == 0 {
                return;
            }
            let mut prod = 1.0;
            for &i in idx {
                prod *= table.activities[i].value;
            }
            term += phi as f64 * prod;
            // First-order error propagation through each factor.
            for &k in idx {
                let mut d = table.activities[k].error;
                for &j in idx {
                    if j != k {
                        d *= table.activities[j].value.abs();
                    }
                }
                err += phi.unsigned_abs() as f64 * d;
            }
        });
        per_order.push(term / factorial);
        quad_error += err / factorial;
    }

    let value = per_order.iter().sum();
    let truncation_estimate = per_order.last().map(|v| v.abs()).unwrap_or(0.0);
    Ok(SeriesEstimate {
        value,
        per_order,
        quad_error,
        truncation_estimate,
    })
}

/// Truncated correlation series for the two-point function `S₂(x₁; x₂)`.
///
/// Orders count polymers per cluster; the same-cell local contribution
/// `⟨ψ₁ψ₂⟩ - ℓ₁ℓ₂` (present only when both observables sit on one cell)
/// belongs to order 1.
pub fn two_point_series(
    ctx: &PolymerContext,
    x1: Cell,
    obs1: ObsComponent,
    x2: Cell,
    obs2: ObsComponent,
    max_n: usize,
    max_size: usize,
) -> Result<SeriesEstimate, PolymerError> {
    if max_n == 0 || max_n > URSELL_CAP {
        return Err(PolymerError::OrderTooLarge(max_n, URSELL_CAP));
    }
    ctx.lattice().check(x1)?;
    ctx.lattice().check(x2)?;
    for (cell, obs) in [(x1, obs1), (x2, obs2)] {
        if obs == ObsComponent::Momentum && !ctx.lattice().kind(cell).has_momentum() {
            return Err(PolymerError::MomentumObservableAtTimeEnd);
        }
    }

    let table = PolymerTable::build(ctx, max_size)?;
    let p = table.masks.len();
    let lat = ctx.lattice();
    let bit1 = 1u64 << lat.index(x1);
    let bit2 = 1u64 << lat.index(x2);

    let ell = |cell: Cell, obs: ObsComponent| -> f64 {
        let (lq, lp) = ctx.measure(cell).ell();
        match obs {
            ObsComponent::Position => lq,
            ObsComponent::Momentum => lp,
        }
    };
    let ell1 = ell(x1, obs1);
    let ell2 = ell(x2, obs2);
    let ins1 = Insertion::centered(x1, obs1.exponents(), ell1);
    let ins2 = Insertion::centered(x2, obs2.exponents(), ell2);

    let mut per_order = vec![0.0_f64; max_n];
    let mut quad_error = 0.0;

    // Local same-cell term (the fully absorbed one-body contribution).
    if x1 == x2 {
        let m = ctx.measure(x1);
        let (e1, e2) = (obs1.exponents(), obs2.exponents());
        let joint = m.moment_with_err(
            (e1.0 + e2.0) as u32,
            (e1.1 + e2.1) as u32,
        );
        per_order[0] += joint.value - ell1 * ell2;
        quad_error += joint.error;
    }

    // Modified activities for the distinguished polymers.
    let sets_with = |bits: u64| -> Vec<usize> {
        (0..p)
            .filter(|&i| table.masks[i] & bits == bits)
            .collect()
    };
    let d2_hosts = sets_with(bit1 | bit2);
    let d1_hosts1 = sets_with(bit1);
    let d1_hosts2 = sets_with(bit2);

    let rho_with = |host: usize, insertions: &[Insertion]| -> Result<Activity, PolymerError> {
        ctx.activity_with_insertions(&cells_of_mask(ctx, table.masks[host]), insertions)
    };

    let d2_acts: Result<Vec<Activity>, PolymerError> = d2_hosts
        .par_iter()
        .map(|&i| {
            if x1 == x2 {
                rho_with(i, &[ins1.product(&ins2)])
            } else {
                rho_with(i, &[ins1.clone(), ins2.clone()])
            }
        })
        .collect();
    let d2_acts = d2_acts?;
    let d1_acts1: Result<Vec<Activity>, PolymerError> = d1_hosts1
        .par_iter()
        .map(|&i| rho_with(i, &[ins1.clone()]))
        .collect();
    let d1_acts1 = d1_acts1?;
    let d1_acts2: Result<Vec<Activity>, PolymerError> = d1_hosts2
        .par_iter()
        .map(|&i| rho_with(i, &[ins2.clone()]))
        .collect();
    let d1_acts2 = d1_acts2?;

    // Clusters with both observables in one distinguished polymer:
    // Σ_n 1/(n-1)! Σ_{R₁ ∋ x₁,x₂} Σ_{R₂..R_n} φ^T ρ̃₂(R₁) Π ρ.
    let mut factorial = 1.0; // (n-1)!
    for n in 1..=max_n {
        if n >= 2 {
            factorial *= (n - 1) as f64;
        }
        let mut term = 0.0;
        let mut err = 0.0;
        let mut masks_buf = vec![0u64; n];
        for (hi, &host) in d2_hosts.iter().enumerate() {
            let hosted = &d2_acts[hi];
            masks_buf[0] = table.masks[host];
            // A zero-length odometer fires exactly once with an empty rest,
            // which is the n = 1 cluster of the distinguished polymer alone.
            for_each_tuple(p.max(1), n - 1, |rest| {
                if n >= 2 && p == 0 {
                    return;
                }
                for (k, &i) in rest.iter().enumerate() {
                    masks_buf[k + 1] = table.masks[i];
                }
                let phi = ursell_overlap(&masks_buf[..n]).expect("order under cap");
                if phi == 0 {
                    return;
                }
                let mut prod = hosted.value;
                let mut dprod = hosted.error;
                for &i in rest {
                    prod *= table.activities[i].value;
                    dprod = dprod * table.activities[i].value.abs()
                        + table.activities[i].error * prod.abs().max(1e-300);
                }
                term += phi as f64 * prod;
                err += phi.unsigned_abs() as f64 * dprod;
            });
        }
        per_order[n - 1] += term / factorial;
        quad_error += err / factorial;
    }

    // Clusters with the observables in two distinguished polymers:
    // Σ_{n≥2} 1/(n-2)! Σ_{R₁ ∋ x₁} Σ_{R₂ ∋ x₂} Σ_{R₃..R_n} φ^T ρ̃(R₁) ρ̃(R₂) Π ρ.
    let mut factorial = 1.0; // (n-2)!
    for n in 2..=max_n {
        if n >= 3 {
            factorial *= (n - 2) as f64;
        }
        let mut term = 0.0;
        let mut err = 0.0;
        let mut masks_buf = vec![0u64; n];
        for (ai, &h1) in d1_hosts1.iter().enumerate() {
            masks_buf[0] = table.masks[h1];
            for (bi, &h2) in d1_hosts2.iter().enumerate() {
                masks_buf[1] = table.masks[h2];
                let a1 = &d1_acts1[ai];
                let a2 = &d1_acts2[bi];
                // Zero-length odometer fires once: the bare (R₁, R₂) pair.
                for_each_tuple(p.max(1), n - 2, |rest| {
                    if n >= 3 && p == 0 {
                        return;
                    }
                    for (k, &i) in rest.iter().enumerate() {
                        masks_buf[k + 2] = table.masks[i];
                    }
                    let phi = ursell_overlap(&masks_buf[..n]).expect("order under cap");
                    if phi == 0 {
                        return;
                    }
                    let mut prod = a1.value * a2.value;
                    let mut dprod =
                        a1.error * a2.value.abs() + a2.error * a1.value.abs();
                    for &i in rest {
                        prod *= table.activities[i].value;
                        dprod = dprod * table.activities[i].value.abs()
                            + table.activities[i].error * prod.abs().max(1e-300);
                    }
                    term += phi as f64 * prod;
                    err += phi.unsigned_abs() as f64 * dprod;
                });
            }
        }
        per_order[n - 1] += term / factorial;
        quad_error += err / factorial;
    }

    let value = per_order.iter().sum();
    let truncation_estimate = per_order.last().map(|v| v.abs()).unwrap_or(0.0);
    Ok(SeriesEstimate {
        value,
        per_order,
        quad_error,
        truncation_estimate,
    })
}
