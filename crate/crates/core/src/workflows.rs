//! End-to-end pipelines: invariant reports, the product-formula check and
//! bulk band sweeps.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::assembly::OperatorKind;
use crate::error::{Error, Result};
use crate::geometry::{Slope, SlopePair};
use crate::invariants::{
    self, CornerFlowOptions, CrossingRecord, EdgeGaps, FlowDetail, IntegerValue, EDGE_WEIGHT,
    INTEGER_TOL, KERNEL_TOL,
};
use crate::linalg::{self, CMat};
use crate::spectra::SpectralSlice;
use crate::symbol::{ChiralGrading, HamiltonianSymbol, ProductFactors};

/// Grids, sizes and thresholds shared by the pipelines.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineConfig {
    pub alpha: Slope,
    pub beta: Slope,
    pub corner: CornerFlowOptions,
    pub chern_grid: usize,
    pub winding_grid: usize,
    pub kernel_width: usize,
    pub weak_grid: usize,
    /// Edges count as gapped when both minima reach this value.
    pub gap_threshold: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let q = SlopePair::quadrant();
        PipelineConfig {
            alpha: q.alpha,
            beta: q.beta,
            corner: CornerFlowOptions::default(),
            chern_grid: 40,
            winding_grid: 256,
            kernel_width: 40,
            weak_grid: 20,
            gap_threshold: 0.1,
        }
    }
}

impl PipelineConfig {
    pub fn pair(&self) -> Result<SlopePair> {
        SlopePair::new(self.alpha, self.beta)
    }
}

/// Tolerances fixed by the library, echoed into every report.
#[derive(Debug, Clone, Serialize)]
pub struct Tolerances {
    pub integer: f64,
    pub kernel: f64,
    pub edge_weight: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            integer: INTEGER_TOL,
            kernel: KERNEL_TOL,
            edge_weight: EDGE_WEIGHT,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub config: PipelineConfig,
    pub tolerances: Tolerances,
    /// Pre-rounding distance from the nearest integer, per invariant.
    pub residuals: BTreeMap<String, f64>,
    /// Grid sizes actually used, after any refinement.
    pub grids: BTreeMap<String, usize>,
}

impl Provenance {
    fn new(config: &PipelineConfig) -> Self {
        Provenance {
            config: config.clone(),
            tolerances: Tolerances::default(),
            residuals: BTreeMap::new(),
            grids: BTreeMap::new(),
        }
    }

    fn record(&mut self, name: &str, v: &IntegerValue) -> i32 {
        self.residuals.insert(name.to_string(), v.residual);
        self.grids.insert(name.to_string(), v.grid);
        v.value
    }
}

/// Corner-flow outcome without the full branch data.
#[derive(Debug, Clone, Serialize)]
pub struct FlowSummary {
    pub value: i32,
    pub window: f64,
    pub threshold: f64,
    pub t_points: usize,
    pub refinements: usize,
    pub jump_bound: f64,
    pub crossings: Vec<CrossingRecord>,
}

impl From<&FlowDetail> for FlowSummary {
    fn from(d: &FlowDetail) -> Self {
        FlowSummary {
            value: d.value,
            window: d.window,
            threshold: d.threshold,
            t_points: d.t_points,
            refinements: d.refinements,
            jump_bound: d.jump_bound,
            crossings: d.crossings.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EdgeGapReport {
    pub min_gap_alpha: f64,
    pub min_gap_beta: f64,
    pub width: usize,
    pub grid: usize,
    pub threshold: f64,
    pub pass: bool,
}

impl EdgeGapReport {
    pub fn new(gaps: &EdgeGaps, threshold: f64) -> Self {
        EdgeGapReport {
            min_gap_alpha: gaps.alpha,
            min_gap_beta: gaps.beta,
            width: gaps.width,
            grid: gaps.grid,
            threshold,
            pass: gaps.min() >= threshold,
        }
    }
}

/// Every invariant that applies to one model. Absent fields do not apply
/// or were skipped; `corner_skipped` says why the corner flow is missing.
#[derive(Debug, Clone, Serialize)]
pub struct InvariantReport {
    pub dim: usize,
    pub norb: usize,
    pub chern_2d_a: Option<i32>,
    pub winding_1d_aiii: Option<i32>,
    pub kernel_signature: Option<i32>,
    pub weak: Option<[i32; 3]>,
    pub edge_gaps: Option<EdgeGapReport>,
    pub corner_sf: Option<i32>,
    pub corner: Option<FlowSummary>,
    pub corner_skipped: Option<String>,
    pub bulk_edge_pair: Option<(i32, i32)>,
    pub provenance: Provenance,
}

/// Factor invariants of a product model, recorded into `prov`.
struct FactorInvariants {
    chern: i32,
    winding: i32,
    kernel: i32,
    pair: (i32, i32),
}

fn factor_invariants(
    f: &ProductFactors,
    cfg: &PipelineConfig,
    prov: &mut Provenance,
) -> Result<FactorInvariants> {
    let chern = invariants::chern_number(&f.h1, cfg.chern_grid)?;
    let winding = invariants::winding_number(&f.h2, &f.grading, cfg.winding_grid)?;
    let (kernel, kd) = invariants::kernel_signature(&f.h2, &f.grading, cfg.kernel_width)?;
    prov.grids.insert("kernel_width".into(), kd.width);
    let pair =
        invariants::bulk_edge_pair(&f.h1, &f.h2, &f.grading, cfg.chern_grid, cfg.winding_grid)?;
    Ok(FactorInvariants {
        chern: prov.record("chern_2d_a", &chern),
        winding: prov.record("winding_1d_aiii", &winding),
        kernel,
        pair,
    })
}

/// Runs every applicable invariant on a model.
///
/// 1-D models need a grading and get winding number and kernel signature;
/// planar models get the Chern invariant; 3-D models get edge gaps, weak
/// invariants and, when the edges are gapped, the corner flow. Factor
/// invariants and the bulk-edge pair are added when `factors` is known.
pub fn report(
    sym: &HamiltonianSymbol,
    grading: Option<&ChiralGrading>,
    factors: Option<&ProductFactors>,
    cfg: &PipelineConfig,
) -> Result<InvariantReport> {
    let mut prov = Provenance::new(cfg);
    let mut r = InvariantReport {
        dim: sym.dim(),
        norb: sym.norb(),
        chern_2d_a: None,
        winding_1d_aiii: None,
        kernel_signature: None,
        weak: None,
        edge_gaps: None,
        corner_sf: None,
        corner: None,
        corner_skipped: None,
        bulk_edge_pair: None,
        provenance: Provenance::new(cfg),
    };
    match sym.dim() {
        1 => {
            let g = grading.ok_or_else(|| {
                Error::Model("1-D invariants need a chiral grading in the model".into())
            })?;
            let w = invariants::winding_number(sym, g, cfg.winding_grid)?;
            r.winding_1d_aiii = Some(prov.record("winding_1d_aiii", &w));
            let (k, kd) = invariants::kernel_signature(sym, g, cfg.kernel_width)?;
            prov.grids.insert("kernel_width".into(), kd.width);
            r.kernel_signature = Some(k);
        }
        2 => {
            let c = invariants::chern_number(sym, cfg.chern_grid)?;
            r.chern_2d_a = Some(prov.record("chern_2d_a", &c));
        }
        3 => {
            let pair = cfg.pair()?;
            let gaps =
                invariants::edge_gap_scan(sym, &pair, cfg.corner.edge_width, cfg.corner.edge_grid)?;
            let gap_report = EdgeGapReport::new(&gaps, cfg.gap_threshold);
            let weak = invariants::weak_invariants(sym, cfg.weak_grid)?;
            r.weak = Some([
                prov.record("weak_xi_eta", &weak[0]),
                prov.record("weak_xi_t", &weak[1]),
                prov.record("weak_eta_t", &weak[2]),
            ]);
            if gap_report.pass {
                let (sf, detail, _) =
                    invariants::corner_spectral_flow(sym, &pair, &cfg.corner, Some(gaps))?;
                r.corner_sf = Some(sf);
                r.corner = Some(FlowSummary::from(&detail));
            } else {
                r.corner_skipped = Some(format!(
                    "edge gaps ({:.3e}, {:.3e}) below threshold {}; the corner family is not Fredholm",
                    gaps.alpha, gaps.beta, cfg.gap_threshold
                ));
            }
            r.edge_gaps = Some(gap_report);
            if let Some(f) = factors {
                let fi = factor_invariants(f, cfg, &mut prov)?;
                r.chern_2d_a = Some(fi.chern);
                r.winding_1d_aiii = Some(fi.winding);
                r.kernel_signature = Some(fi.kernel);
                r.bulk_edge_pair = Some(fi.pair);
            }
        }
        d => {
            return Err(Error::Dimension {
                what: "lattice dimension",
                expected: 3,
                got: d,
            })
        }
    }
    r.provenance = prov;
    Ok(r)
}

/// Both sides of the product formula for `H = H1 ⊗ Π + 1 ⊗ H2`.
#[derive(Debug, Clone, Serialize)]
pub struct ProductVerdict {
    /// Corner spectral flow of the product.
    pub lhs: i32,
    /// `I^{2d,A}(H1) · I^{1d,AIII}(H2)`.
    pub rhs: i32,
    pub equal: bool,
    pub chern_2d_a: i32,
    pub winding_1d_aiii: i32,
    pub kernel_signature: i32,
    pub pair: (i32, i32),
    pub edge_gaps: EdgeGapReport,
    pub corner: FlowSummary,
    pub provenance: Provenance,
}

/// Computes the factor invariants and the corner flow of the product
/// independently and compares them. Fails if the product's edges are not
/// gapped.
pub fn verify_product(factors: &ProductFactors, cfg: &PipelineConfig) -> Result<ProductVerdict> {
    let mut prov = Provenance::new(cfg);
    let fi = factor_invariants(factors, cfg, &mut prov)?;
    let sym = factors.product()?;
    let pair = cfg.pair()?;
    let gaps = invariants::edge_gap_scan(&sym, &pair, cfg.corner.edge_width, cfg.corner.edge_grid)?;
    let gap_report = EdgeGapReport::new(&gaps, cfg.gap_threshold);
    if !gap_report.pass {
        return Err(Error::GapClosed {
            context: format!("edge gap below threshold {}", cfg.gap_threshold),
            min_gap: gaps.min(),
        });
    }
    let (sf, detail, _) = invariants::corner_spectral_flow(&sym, &pair, &cfg.corner, Some(gaps))?;
    let rhs = fi.chern * fi.winding;
    Ok(ProductVerdict {
        lhs: sf,
        rhs,
        equal: sf == rhs,
        chern_2d_a: fi.chern,
        winding_1d_aiii: fi.winding,
        kernel_signature: fi.kernel,
        pair: fi.pair,
        edge_gaps: gap_report,
        corner: FlowSummary::from(&detail),
        provenance: prov,
    })
}

/// Bloch eigenvalues along one angle on an `n`-point grid over `[0, 2π)`,
/// the other angles held at `fixed` (one entry per remaining axis, in axis
/// order). Each slice carries the swept angle in `t`.
pub fn bulk_sweep(
    sym: &HamiltonianSymbol,
    axis: usize,
    n: usize,
    fixed: &[f64],
) -> Result<Vec<SpectralSlice>> {
    let d = sym.dim();
    if axis >= d {
        return Err(Error::Dimension {
            what: "swept axis",
            expected: d,
            got: axis + 1,
        });
    }
    if fixed.len() + 1 != d {
        return Err(Error::Dimension {
            what: "fixed angles",
            expected: d - 1,
            got: fixed.len(),
        });
    }
    (0..n)
        .map(|j| {
            let angle = TAU * j as f64 / n as f64;
            let mut k = fixed.to_vec();
            k.insert(axis, angle);
            let eigenvalues = linalg::eigvalsh(&sym.evaluate_bloch(&k)?)?;
            Ok(SpectralSlice {
                t: angle,
                k_edge: None,
                kind: OperatorKind::Bulk,
                eigenvalues,
                eigenvectors: None,
                weights: None,
            })
        })
        .collect()
}

/// Random Hermitian on-site block with spectral norm `norm`, reproducible
/// from `seed`.
pub fn random_onsite(norb: usize, norm: f64, seed: u64) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = CMat::from_fn(norb, norb, |_, _| {
        Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    });
    let h = (&a + a.adjoint()) * Complex64::new(0.5, 0.0);
    let scale = linalg::spectral_norm(&h);
    if scale == 0.0 {
        return h;
    }
    h * Complex64::new(norm / scale, 0.0)
}
