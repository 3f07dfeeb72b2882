//! Single-spin distribution (SSD): the per-cell reference measure of the
//! expansion.
//!
//! Bulk cells carry the two-variable weight
//!
//! ```text
//! dν(ψ) = e^{-U(ψ)} dq dp / C,
//! U(q,p) = εγ⁻¹ ( ½ q⁶ + q³p + (M + 2ζc₁) p² + λ^{-1/3} M q⁴ )
//! ```
//!
//! final-slice cells the one-variable weight
//! `U(q) = εγ⁻¹ ( q⁶ + λ^{-1/3} M q⁴ )`. All moments are evaluated by
//! Gauss-Legendre product rules split at the axes (so absolute moments stay
//! smooth on each panel) on a box sized so the discarded tail is below
//! `e^{-42}` of the peak; error estimates come from halving the node count.

use crate::polymer::lattice::CellKind;
use crate::quadrature::{Estimate, GaussLegendre};
use crate::special::gamma;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SsdError {
    #[error("single-spin weight is not normalizable: {0}")]
    NotNormalizable(String),
    #[error("quadrature did not converge: error {error:.3e} above threshold {threshold:.3e}")]
    QuadratureNonConvergence { error: f64, threshold: f64 },
    #[error("momentum moment requested on a final-slice (position-only) cell")]
    MomentumAtTimeEnd,
}

/// Per-site stability polynomial `𝒫(q,p) = cq2 q² + cp2 p² + cq4 q⁴` used to
/// weight moments for the convergence certificate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StabilityPoly {
    pub cq2: f64,
    pub cp2: f64,
    pub cq4: f64,
}

impl StabilityPoly {
    pub fn eval(&self, q: f64, p: f64) -> f64 {
        let q2 = q * q;
        self.cq2 * q2 + self.cp2 * p * p + self.cq4 * q2 * q2
    }
}

/// Coefficients of the single-spin weight for one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsdSpec {
    pub kind: CellKind,
    /// q⁶ coefficient.
    pub a6: f64,
    /// q³p cross coefficient (zero on final-slice cells).
    pub a31: f64,
    /// p² coefficient (zero on final-slice cells).
    pub ap2: f64,
    /// q⁴ coefficient.
    pub a4: f64,
    /// Gauss-Legendre nodes per half-axis.
    pub half_nodes: usize,
}

impl SsdSpec {
    /// Bulk/first-slice weight from the physical parameters.
    pub fn bulk(
        kind: CellKind,
        eps: f64,
        gamma_inv: f64,
        m: f64,
        zeta: f64,
        c1: f64,
        lambda: f64,
        half_nodes: usize,
    ) -> Self {
        let eg = eps * gamma_inv;
        SsdSpec {
            kind,
            a6: 0.5 * eg,
            a31: eg,
            ap2: eg * (m + 2.0 * zeta * c1),
            a4: eg * lambda.powf(-1.0 / 3.0) * m,
            half_nodes,
        }
    }

    /// Final-slice weight (position variable only, unit q⁶ coefficient).
    pub fn time_end(eps: f64, gamma_inv: f64, m: f64, lambda: f64, half_nodes: usize) -> Self {
        let eg = eps * gamma_inv;
        SsdSpec {
            kind: CellKind::TimeEnd,
            a6: eg,
            a31: 0.0,
            ap2: 0.0,
            a4: eg * lambda.powf(-1.0 / 3.0) * m,
            half_nodes,
        }
    }

    pub fn u(&self, q: f64, p: f64) -> f64 {
        let q2 = q * q;
        let q3 = q2 * q;
        self.a6 * q3 * q3 + self.a31 * q3 * p + self.ap2 * p * p + self.a4 * q2 * q2
    }

    /// Effective q⁶ coefficient after completing the square in p.
    fn a6_eff(&self) -> f64 {
        if self.kind.has_momentum() {
            self.a6 - self.a31 * self.a31 / (4.0 * self.ap2)
        } else {
            self.a6
        }
    }

    pub fn validate(&self) -> Result<(), SsdError> {
        if !(self.a6 > 0.0) {
            return Err(SsdError::NotNormalizable(format!(
                "q^6 coefficient must be positive, got {}",
                self.a6
            )));
        }
        if self.kind.has_momentum() {
            if !(self.ap2 > 0.0) {
                return Err(SsdError::NotNormalizable(format!(
                    "p^2 coefficient must be positive, got {}",
                    self.ap2
                )));
            }
            if !(self.a6_eff() > 0.0) {
                return Err(SsdError::NotNormalizable(format!(
                    "cross term dominates: a6 - a31²/(4 ap2) = {}",
                    self.a6_eff()
                )));
            }
        }
        if !(self.a4 >= 0.0) {
            return Err(SsdError::NotNormalizable(format!(
                "q^4 coefficient must be nonnegative, got {}",
                self.a4
            )));
        }
        Ok(())
    }
}

/// Ln-scale at which the integrand tail is discarded (e^{-42} ≈ 6e-19 of the
/// peak, far below the 1e-12 mass target).
const TAIL_LN: f64 = 42.0;

/// Solves `lead·R^6 = TAIL_LN + deg·ln R + neg4·R^4 + neg2·R²` for the
/// truncation radius.
fn confinement_radius(lead: f64, neg4: f64, neg2: f64, deg: f64) -> f64 {
    let mut r = (TAIL_LN / lead).powf(1.0 / 6.0).max(1.0);
    for _ in 0..40 {
        let rhs = TAIL_LN + deg * r.max(1.0).ln() + neg4 * r.powi(4) + neg2 * r * r;
        r = (rhs / lead).powf(1.0 / 6.0);
    }
    r * 1.05
}

/// One quadrature node with the measure weight folded in.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Node {
    pub(crate) q: f64,
    pub(crate) p: f64,
    pub(crate) w: f64,
}

/// An evaluated cell measure: quadrature nodes with the (optionally
/// stability-weighted) Boltzmann factor folded into the weights.
#[derive(Debug, Clone)]
pub struct CellMeasure {
    pub spec: SsdSpec,
    pub stability: Option<StabilityPoly>,
    nodes: Vec<Node>,
    coarse: Vec<Node>,
    /// Unnormalized mass ∫ e^{-U+𝒫} on the fine rule.
    pub norm: f64,
    norm_coarse: f64,
    pub radius_q: f64,
    pub radius_p: f64,
}

impl CellMeasure {
    /// Builds the measure; `deg_q`, `deg_p` are the largest monomial degrees
    /// the truncation box must support.
    pub fn new(spec: SsdSpec, deg_q: usize, deg_p: usize) -> Result<Self, SsdError> {
        Self::build(spec, None, deg_q, deg_p)
    }

    /// Measure weighted by `e^{𝒫}`; used by the certificate's moment sums.
    pub fn with_stability_weight(
        spec: SsdSpec,
        poly: StabilityPoly,
        deg_q: usize,
        deg_p: usize,
    ) -> Result<Self, SsdError> {
        Self::build(spec, Some(poly), deg_q, deg_p)
    }

    fn build(
        spec: SsdSpec,
        stability: Option<StabilityPoly>,
        deg_q: usize,
        deg_p: usize,
    ) -> Result<Self, SsdError> {
        spec.validate()?;
        let st = stability.unwrap_or_default();
        let has_p = spec.kind.has_momentum();

        // Net confinement after the stability weight.
        let ap2_net = spec.ap2 - st.cp2;
        if has_p && !(ap2_net > 0.0) {
            return Err(SsdError::NotNormalizable(format!(
                "stability weight removes momentum confinement: ap2 - cp2 = {ap2_net}"
            )));
        }
        let a6_net = if has_p {
            spec.a6 - spec.a31 * spec.a31 / (4.0 * ap2_net)
        } else {
            spec.a6
        };
        if !(a6_net > 0.0) {
            return Err(SsdError::NotNormalizable(format!(
                "stability weight removes position confinement: net q^6 coefficient = {a6_net}"
            )));
        }
        let neg4 = (st.cq4 - spec.a4).max(0.0);
        let neg2 = st.cq2.max(0.0);
        let radius_q = confinement_radius(a6_net, neg4, neg2, deg_q as f64);
        let radius_p = if has_p {
            let mut w = (TAIL_LN / ap2_net).sqrt().max(1.0);
            for _ in 0..20 {
                w = ((TAIL_LN + deg_p as f64 * w.max(1.0).ln()) / ap2_net).sqrt();
            }
            spec.a31.abs() * radius_q.powi(3) / (2.0 * ap2_net) + 1.1 * w
        } else {
            0.0
        };

        let weight = |q: f64, p: f64| (-spec.u(q, p) + st.eval(q, p)).exp();
        let make_nodes = |half: usize| -> (Vec<Node>, f64) {
            let rule = GaussLegendre::new(half);
            let mut axis_q: Vec<(f64, f64)> = rule.mapped(0.0, radius_q);
            axis_q.extend(rule.mapped(0.0, radius_q).iter().map(|&(x, w)| (-x, w)));
            let mut nodes = Vec::new();
            let mut norm = 0.0;
            if has_p {
                let mut axis_p: Vec<(f64, f64)> = rule.mapped(0.0, radius_p);
                axis_p.extend(rule.mapped(0.0, radius_p).iter().map(|&(x, w)| (-x, w)));
                for &(q, wq) in &axis_q {
                    for &(p, wp) in &axis_p {
                        let w = wq * wp * weight(q, p);
                        norm += w;
                        nodes.push(Node { q, p, w });
                    }
                }
            } else {
                for &(q, wq) in &axis_q {
                    let w = wq * weight(q, 0.0);
                    norm += w;
                    nodes.push(Node { q, p: 0.0, w });
                }
            }
            (nodes, norm)
        };

        let (nodes, norm) = make_nodes(spec.half_nodes);
        let (coarse, norm_coarse) = make_nodes((spec.half_nodes / 2).max(4));
        if !(norm.is_finite() && norm > 0.0) {
            return Err(SsdError::NotNormalizable(format!(
                "quadrature mass is {norm}"
            )));
        }
        Ok(CellMeasure {
            spec,
            stability,
            nodes,
            coarse,
            norm,
            norm_coarse,
            radius_q,
            radius_p,
        })
    }

    /// Rebuilds with twice the nodes per half-axis (one refinement step).
    pub fn refined(&self) -> Result<Self, SsdError> {
        let mut spec = self.spec;
        spec.half_nodes *= 2;
        Self::build(spec, self.stability, 40, 16)
    }

    /// e^{-U(ψ)} (normalized measure density times the mass).
    pub fn weight(&self, q: f64, p: f64) -> f64 {
        (-self.spec.u(q, p)).exp()
    }

    pub(crate) fn nodes(&self) -> &[Node] {
        &self.nodes
    }


    /// Signed moment on the halved-node rule (for error estimates of
    /// quantities assembled from many moments).
    pub fn moment_coarse(&self, a: u32, b: u32) -> f64 {
        Self::raw_sum(&self.coarse, |q, p| q.powi(a as i32) * p.powi(b as i32))
            / self.norm_coarse
    }

    fn raw_sum(nodes: &[Node], f: impl Fn(f64, f64) -> f64) -> f64 {
        nodes.iter().map(|n| n.w * f(n.q, n.p)).sum()
    }

    /// Unnormalized ∫ q^a p^b e^{-U+𝒫}.
    pub fn raw_moment(&self, a: u32, b: u32) -> f64 {
        Self::raw_sum(&self.nodes, |q, p| q.powi(a as i32) * p.powi(b as i32))
    }

    /// Unnormalized ∫ |q|^a |p|^b e^{-U+𝒫}.
    pub fn raw_abs_moment(&self, a: u32, b: u32) -> f64 {
        Self::raw_sum(&self.nodes, |q, p| {
            q.abs().powi(a as i32) * p.abs().powi(b as i32)
        })
    }

    /// All unnormalized absolute moments up to the given exponents in one
    /// pass over the nodes; `table[a][b]`.
    pub fn raw_abs_moment_table(&self, a_max: u32, b_max: u32) -> Vec<Vec<f64>> {
        let mut table = vec![vec![0.0; b_max as usize + 1]; a_max as usize + 1];
        for n in &self.nodes {
            let qa = n.q.abs();
            let pa = n.p.abs();
            let mut qpow = n.w;
            for row in table.iter_mut() {
                let mut v = qpow;
                for entry in row.iter_mut() {
                    *entry += v;
                    v *= pa;
                }
                qpow *= qa;
            }
        }
        table
    }

    /// Normalized signed moment ∫ q^a p^b dν.
    pub fn moment(&self, a: u32, b: u32) -> f64 {
        if b > 0 && !self.spec.kind.has_momentum() {
            panic!("momentum moment on a final-slice cell");
        }
        self.raw_moment(a, b) / self.norm
    }

    /// Normalized absolute moment with a node-halving error estimate.
    pub fn abs_moment(&self, a: u32, b: u32) -> Estimate {
        let fine = self.raw_abs_moment(a, b) / self.norm;
        let coarse = Self::raw_sum(&self.coarse, |q, p| {
            q.abs().powi(a as i32) * p.abs().powi(b as i32)
        }) / self.norm_coarse;
        Estimate {
            value: fine,
            error: (fine - coarse).abs(),
        }
    }

    /// Normalized signed moment with a node-halving error estimate.
    pub fn moment_with_err(&self, a: u32, b: u32) -> Estimate {
        let fine = self.raw_moment(a, b) / self.norm;
        let coarse = Self::raw_sum(&self.coarse, |q, p| {
            q.powi(a as i32) * p.powi(b as i32)
        }) / self.norm_coarse;
        Estimate {
            value: fine,
            error: (fine - coarse).abs(),
        }
    }

    /// Moment with a convergence gate: refines once, then errors out if the
    /// estimate still exceeds the threshold.
    pub fn moment_checked(&self, a: u32, b: u32, threshold: f64) -> Result<Estimate, SsdError> {
        let est = self.abs_moment(a, b);
        if est.error <= threshold {
            return Ok(est);
        }
        let fine = self.refined()?;
        let est = fine.abs_moment(a, b);
        if est.error <= threshold {
            Ok(est)
        } else {
            Err(SsdError::QuadratureNonConvergence {
                error: est.error,
                threshold,
            })
        }
    }

    /// Signed first moments (ℓ_q, ℓ_p).
    pub fn ell(&self) -> (f64, f64) {
        let lq = self.moment(1, 0);
        let lp = if self.spec.kind.has_momentum() {
            self.moment(0, 1)
        } else {
            0.0
        };
        (lq, lp)
    }

    /// Analytic upper bound on the absolute moment from the Γ-function
    /// closed form: splitting the cross term with `s = ap2/2` gives
    /// `U ≥ K₃q⁶ + K₄p²`, so
    /// `∫|q|^a|p|^b dν ≤ (1/3)K₃^{-(1+a)/6}Γ((1+a)/6) · K₄^{-(1+b)/2}Γ((1+b)/2) / C`.
    pub fn moment_gamma_bound(&self, a: u32, b: u32) -> f64 {
        assert!(
            self.stability.is_none(),
            "gamma bound applies to the unweighted measure"
        );
        let spec = &self.spec;
        let q_part = |k3: f64| {
            (1.0 / 3.0) * k3.powf(-(1.0 + a as f64) / 6.0) * gamma((1.0 + a as f64) / 6.0)
        };
        if spec.kind.has_momentum() {
            let k3 = spec.a6 - spec.a31 * spec.a31 / (2.0 * spec.ap2);
            let k4 = 0.5 * spec.ap2;
            assert!(k3 > 0.0, "cross-term split failed; need M + 2ζc₁ > 1");
            let p_part =
                k4.powf(-(1.0 + b as f64) / 2.0) * gamma((1.0 + b as f64) / 2.0);
            q_part(k3) * p_part / self.norm
        } else {
            assert!(b == 0);
            2.0 * q_part(spec.a6) / self.norm
        }
    }
}

/// Exact sampler for a cell measure: the q marginal is drawn by rejection
/// from a piecewise-constant envelope (the marginal is even and unimodal, so
/// per-bin maxima are exact), then p is Gaussian given q.
#[derive(Debug, Clone)]
pub struct CellSampler {
    spec: SsdSpec,
    radius_q: f64,
    bin_edges: Vec<f64>,
    bin_max: Vec<f64>,
    bin_cdf: Vec<f64>,
}

impl CellSampler {
    pub fn new(measure: &CellMeasure) -> Self {
        assert!(
            measure.stability.is_none(),
            "sampling is defined for the physical measure"
        );
        let spec = measure.spec;
        let r = measure.radius_q;
        let bins = 2048usize;
        // Unnormalized q marginal after integrating out p exactly.
        let marginal = |q: f64| {
            let q2 = q * q;
            let q6 = q2 * q2 * q2;
            let a6e = spec.a6_eff();
            (-a6e * q6 - spec.a4 * q2 * q2).exp()
        };
        let mut bin_edges = Vec::with_capacity(bins + 1);
        for i in 0..=bins {
            bin_edges.push(-r + 2.0 * r * i as f64 / bins as f64);
        }
        let mut bin_max = Vec::with_capacity(bins);
        let mut bin_cdf = Vec::with_capacity(bins);
        let mut acc = 0.0;
        for i in 0..bins {
            let a = bin_edges[i];
            let b = bin_edges[i + 1];
            // The marginal is even and decreasing in |q|: max at the point
            // of minimal |q| in the bin.
            let m = if a < 0.0 && b > 0.0 {
                marginal(0.0)
            } else {
                marginal(a.abs().min(b.abs()))
            };
            bin_max.push(m);
            acc += m * (b - a);
            bin_cdf.push(acc);
        }
        CellSampler {
            spec,
            radius_q: r,
            bin_edges,
            bin_max,
            bin_cdf,
        }
    }

    fn marginal(&self, q: f64) -> f64 {
        let q2 = q * q;
        (-self.spec.a6_eff() * q2 * q2 * q2 - self.spec.a4 * q2 * q2).exp()
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> (f64, f64) {
        let total = *self.bin_cdf.last().unwrap();
        let q = loop {
            let u = rng.gen_range(0.0..total);
            let bin = self.bin_cdf.partition_point(|&c| c < u);
            let a = self.bin_edges[bin];
            let b = self.bin_edges[bin + 1];
            let cand = rng.gen_range(a..b);
            if rng.gen_range(0.0..1.0) * self.bin_max[bin] <= self.marginal(cand) {
                break cand;
            }
        };
        if !self.spec.kind.has_momentum() {
            return (q, 0.0);
        }
        let mean = -self.spec.a31 * q * q * q / (2.0 * self.spec.ap2);
        let sd = (0.5 / self.spec.ap2).sqrt();
        let xi: f64 = rng.sample(StandardNormal);
        (q, mean + sd * xi)
    }

    /// Ignores q beyond the truncation radius (mass below e^{-42}).
    pub fn radius_q(&self) -> f64 {
        self.radius_q
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bulk_spec() -> SsdSpec {
        // eps*gamma_inv = 0.5, M' = 8, lambda-term 0.9
        SsdSpec {
            kind: CellKind::Interior,
            a6: 0.25,
            a31: 0.5,
            ap2: 4.0,
            a4: 0.45,
            half_nodes: 32,
        }
    }

    #[test]
    fn weight_values() {
        let spec = bulk_spec();
        let m = CellMeasure::new(spec, 12, 6).unwrap();
        // U(0,0) = 0 so the unnormalized weight is 1.
        assert_eq!(m.weight(0.0, 0.0), 1.0);
        // q = 1, p = 0: e^{-(a6 + a4)}.
        assert_relative_eq!(
            m.weight(1.0, 0.0),
            (-(0.25_f64 + 0.45)).exp(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn normalization_is_unit() {
        for spec in [
            bulk_spec(),
            SsdSpec::time_end(0.1, 0.05, 75.0, 1.0e4, 32),
        ] {
            let m = CellMeasure::new(spec, 12, 6).unwrap();
            // moment(0,0) = 1 by construction; the node-halving error on the
            // mass itself must be tiny.
            assert_eq!(m.moment(0, 0), 1.0);
            let est = m.abs_moment(0, 0);
            assert!(est.error < 1e-8, "normalization error {}", est.error);
        }
    }

    #[test]
    fn sextic_moments_match_gamma_closed_form() {
        // ∫ |q|^α e^{-K q⁶} dq = (1/3) K^{-(α+1)/6} Γ((α+1)/6) over the line.
        let k = 0.37;
        let spec = SsdSpec {
            kind: CellKind::TimeEnd,
            a6: k,
            a31: 0.0,
            ap2: 0.0,
            a4: 0.0,
            half_nodes: 32,
        };
        let m = CellMeasure::new(spec, 24, 0).unwrap();
        for alpha in [0u32, 1, 2, 3, 5, 8, 12, 20] {
            let exact = (1.0 / 3.0)
                * k.powf(-(alpha as f64 + 1.0) / 6.0)
                * gamma((alpha as f64 + 1.0) / 6.0);
            let got = m.raw_abs_moment(alpha, 0);
            assert_relative_eq!(got, exact, max_relative = 1e-8);
        }
    }

    #[test]
    fn gaussian_reduction_momentum_variance() {
        // With the q-coefficients switched off the p marginal is Gaussian
        // with <p²> = 1/(2 ap2).
        let spec = SsdSpec {
            kind: CellKind::Interior,
            a6: 1e-12,
            a31: 0.0,
            ap2: 3.2,
            a4: 0.0,
            half_nodes: 32,
        };
        let m = CellMeasure::new(spec, 8, 4).unwrap();
        assert_relative_eq!(m.moment(0, 2), 1.0 / (2.0 * 3.2), max_relative = 1e-9);
    }

    #[test]
    fn joint_negation_symmetry_kills_odd_moments() {
        let m = CellMeasure::new(bulk_spec(), 12, 6).unwrap();
        assert_abs_diff_eq!(m.moment(1, 0), 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(m.moment(0, 1), 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(m.moment(2, 1), 0.0, epsilon = 1e-13);
        // Even total degree survives, including the cross correlation.
        assert!(m.moment(3, 1).abs() > 1e-6);
    }

    #[test]
    fn moments_respect_gamma_bound() {
        let m = CellMeasure::new(bulk_spec(), 16, 8).unwrap();
        for (a, b) in [(0u32, 0u32), (2, 0), (0, 2), (3, 1), (6, 2), (9, 3)] {
            let est = m.abs_moment(a, b);
            let bound = m.moment_gamma_bound(a, b);
            assert!(
                est.value <= bound,
                "moment({a},{b}) = {} exceeds bound {}",
                est.value,
                bound
            );
        }
    }

    #[test]
    fn moment_checked_flags_nonconvergence() {
        let m = CellMeasure::new(bulk_spec(), 12, 6).unwrap();
        assert!(m.moment_checked(2, 0, 1e-8).is_ok());
        let err = m.moment_checked(2, 0, 1e-30).unwrap_err();
        assert!(matches!(err, SsdError::QuadratureNonConvergence { .. }));
    }

    #[test]
    fn rejects_non_normalizable_specs() {
        let mut spec = bulk_spec();
        spec.ap2 = -1.0;
        assert!(matches!(
            CellMeasure::new(spec, 8, 4),
            Err(SsdError::NotNormalizable(_))
        ));
        let mut spec = bulk_spec();
        spec.a31 = 10.0; // cross term dominates the sextic confinement
        assert!(matches!(
            CellMeasure::new(spec, 8, 4),
            Err(SsdError::NotNormalizable(_))
        ));
    }

    #[test]
    fn stability_weighted_moments_exceed_plain_ones() {
        let spec = bulk_spec();
        let plain = CellMeasure::new(spec, 12, 6).unwrap();
        let weighted = CellMeasure::with_stability_weight(
            spec,
            StabilityPoly {
                cq2: 0.05,
                cp2: 0.2,
                cq4: 0.02,
            },
            12,
            6,
        )
        .unwrap();
        for (a, b) in [(0u32, 0u32), (2, 0), (0, 2), (4, 2)] {
            assert!(weighted.raw_abs_moment(a, b) > plain.raw_abs_moment(a, b));
        }
    }

    #[test]
    fn sampler_matches_quadrature_moments() {
        let m = CellMeasure::new(bulk_spec(), 12, 6).unwrap();
        let sampler = CellSampler::new(&m);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let n = 200_000;
        let mut sums = [0.0_f64; 4]; // q², p², q³p, q⁴
        for _ in 0..n {
            let (q, p) = sampler.sample(&mut rng);
            sums[0] += q * q;
            sums[1] += p * p;
            sums[2] += q * q * q * p;
            sums[3] += q * q * q * q;
        }
        let targets = [
            m.moment(2, 0),
            m.moment(0, 2),
            m.moment(3, 1),
            m.moment(4, 0),
        ];
        for (i, &target) in targets.iter().enumerate() {
            let mean = sums[i] / n as f64;
            // 5 sigma allowance with a crude variance estimate.
            let tol = 5.0 * (target.abs().max(0.2)) / (n as f64).sqrt() * 3.0;
            assert!(
                (mean - target).abs() < tol,
                "sampled moment {i}: {mean} vs {target}"
            );
        }
    }
}
