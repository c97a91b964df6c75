//! Integer invariants: Chern and winding numbers, kernel signatures, weak
//! invariants, edge gaps and spectral flows of edge and corner families.
//!
//! Orientation conventions. `I^{2d,A}` is minus the first Chern number `c1`
//! of the Fermi projection, where `c1` is the usual Berry-curvature integral
//! over the torus oriented by the two momenta in argument order.
//! `I^{1d,AIII}` is minus the winding of `det h(k)`, `h` being the
//! off-diagonal block of the Bloch matrix in the grading eigenbasis.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::{self, AssembledOperator};
use crate::error::{Error, Result};
use crate::geometry::{Side, SlopePair};
use crate::linalg::{self, CMat};
use crate::sparse::WindowOptions;
use crate::spectra::{self, BranchTrack, SpectralSlice, TrackOptions, CLUSTER_TOL};
use crate::symbol::{check_chiral, ChiralGrading, HamiltonianSymbol};

/// Largest distance from an integer tolerated before rounding.
pub const INTEGER_TOL: f64 = 1e-6;
/// Eigenvalues below this modulus count as a closed gap on momentum grids.
pub const GAP_TOL: f64 = 1e-8;
/// Eigenvalue modulus below which half-line states count as kernel.
pub const KERNEL_TOL: f64 = 1e-6;
/// Near-half weight above which an edge state is attributed to the edge.
pub const EDGE_WEIGHT: f64 = 0.6;

/// An integer obtained by rounding a computed real number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegerValue {
    pub value: i32,
    pub raw: f64,
    pub residual: f64,
    pub grid: usize,
}

fn round_checked(raw: f64, grid: usize, context: &str) -> Result<IntegerValue> {
    let value = raw.round();
    let residual = (raw - value).abs();
    if residual >= INTEGER_TOL || !raw.is_finite() {
        return Err(Error::NonInteger {
            context: context.to_string(),
            raw,
            residual,
        });
    }
    Ok(IntegerValue {
        value: value as i32,
        raw,
        residual,
        grid,
    })
}

fn grid_angle(j: usize, n: usize) -> f64 {
    TAU * j as f64 / n as f64
}

// --- Chern numbers -------------------------------------------------------------

/// Eigenvectors of the bands below zero, as the columns of one frame.
fn occupied_frame(h: &CMat, context: &str) -> Result<(CMat, f64)> {
    let (vals, vecs) = linalg::eigh(h)?;
    let gap = vals.iter().fold(f64::INFINITY, |g, v| g.min(v.abs()));
    if gap <= GAP_TOL {
        return Err(Error::GapClosed {
            context: context.to_string(),
            min_gap: gap,
        });
    }
    let k = vals.iter().filter(|&&v| v < 0.0).count();
    Ok((vecs.columns(0, k).clone_owned(), gap))
}

fn link_variable(a: &CMat, b: &CMat) -> Complex64 {
    if a.ncols() == 0 {
        return Complex64::new(1.0, 0.0);
    }
    (a.adjoint() * b).determinant()
}

/// First Chern number `c1` of the Fermi projection of the family
/// `(θ1, θ2) ↦ h(θ1, θ2)` on an `n x n` grid, by plaquette field strengths.
/// Refines once to `2n` if the sum is not an integer.
pub fn fermi_chern<F>(h: F, n: usize, context: &str) -> Result<IntegerValue>
where
    F: Fn(f64, f64) -> Result<CMat> + Sync,
{
    match fermi_chern_raw(&h, n, context) {
        Err(Error::NonInteger { .. }) => fermi_chern_raw(&h, 2 * n, context),
        other => other,
    }
}

fn fermi_chern_raw<F>(h: &F, n: usize, context: &str) -> Result<IntegerValue>
where
    F: Fn(f64, f64) -> Result<CMat> + Sync,
{
    if n < 2 {
        return Err(Error::Precondition("Chern grid needs n >= 2".into()));
    }
    let frames: Vec<CMat> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            let m = h(grid_angle(i, n), grid_angle(j, n))?;
            occupied_frame(&m, context).map(|(f, _)| f)
        })
        .collect::<Result<Vec<_>>>()?;
    let rank = frames[0].ncols();
    if frames.iter().any(|f| f.ncols() != rank) {
        return Err(Error::GapClosed {
            context: format!("{context}: number of bands below zero varies over the torus"),
            min_gap: 0.0,
        });
    }
    let at = |i: usize, j: usize| &frames[(i % n) * n + (j % n)];
    let phases: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            let (a, b, c, d) = (at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1));
            let loop_product = link_variable(a, b)
                * link_variable(b, c)
                * link_variable(c, d)
                * link_variable(d, a);
            loop_product.arg()
        })
        .collect();
    // Berry flux through a plaquette is minus the phase of the loop product.
    let raw = -phases.iter().sum::<f64>() / TAU;
    round_checked(raw, n, context)
}

/// `I^{2d,A} = -c1` for a planar symbol.
pub fn chern_number(sym: &HamiltonianSymbol, n: usize) -> Result<IntegerValue> {
    if sym.dim() != 2 {
        return Err(Error::Dimension {
            what: "Chern number needs a 2-D symbol",
            expected: 2,
            got: sym.dim(),
        });
    }
    let c1 = fermi_chern(|a, b| sym.evaluate_bloch(&[a, b]), n, "Chern number")?;
    Ok(IntegerValue {
        value: -c1.value,
        raw: -c1.raw,
        ..c1
    })
}

/// Chern numbers `c1` over the `(ξ, η)`, `(ξ, t)` and `(η, t)` sub-tori of
/// a 3-D symbol, the remaining angle held at zero.
pub fn weak_invariants(sym: &HamiltonianSymbol, n: usize) -> Result<[IntegerValue; 3]> {
    if sym.dim() != 3 {
        return Err(Error::Dimension {
            what: "weak invariants need a 3-D symbol",
            expected: 3,
            got: sym.dim(),
        });
    }
    let xy = fermi_chern(|a, b| sym.evaluate_bloch(&[a, b, 0.0]), n, "weak (ξ,η)")?;
    let xt = fermi_chern(|a, b| sym.evaluate_bloch(&[a, 0.0, b]), n, "weak (ξ,t)")?;
    let yt = fermi_chern(|a, b| sym.evaluate_bloch(&[0.0, a, b]), n, "weak (η,t)")?;
    Ok([xy, xt, yt])
}

// --- chiral invariants ---------------------------------------------------------

/// Columns spanning the `+1` and `-1` eigenspaces of the grading.
fn grading_frames(g: &ChiralGrading) -> Result<(CMat, CMat)> {
    let (vals, vecs) = linalg::eigh(g.matrix())?;
    let minus: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] < 0.0).collect();
    let plus: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > 0.0).collect();
    if plus.len() != minus.len() {
        return Err(Error::InvalidGrading(format!(
            "grading eigenspaces have unequal dimensions {} and {}; det h(k) is undefined",
            plus.len(),
            minus.len()
        )));
    }
    Ok((
        vecs.select_columns(plus.iter()),
        vecs.select_columns(minus.iter()),
    ))
}

/// `I^{1d,AIII} = -winding(det h)` on an `n`-point grid. The grid is doubled
/// while any step changes the phase by more than π/2, up to 2^6 n points.
pub fn winding_number(
    sym: &HamiltonianSymbol,
    g: &ChiralGrading,
    n: usize,
) -> Result<IntegerValue> {
    if sym.dim() != 1 {
        return Err(Error::Dimension {
            what: "winding number needs a 1-D symbol",
            expected: 1,
            got: sym.dim(),
        });
    }
    if !check_chiral(sym, g)? {
        return Err(Error::ChiralViolation(
            "symbol does not anticommute with the grading".into(),
        ));
    }
    let (vp, vm) = grading_frames(g)?;
    let mut n = n.max(4);
    for _ in 0..7 {
        let dets: Vec<Complex64> = (0..n)
            .into_par_iter()
            .map(|j| {
                let h = sym.evaluate_bloch(&[grid_angle(j, n)])?;
                let gap = linalg::eigvalsh(&h)?
                    .iter()
                    .fold(f64::INFINITY, |g, v| g.min(v.abs()));
                if gap <= GAP_TOL {
                    return Err(Error::GapClosed {
                        context: "winding number".into(),
                        min_gap: gap,
                    });
                }
                Ok((vp.adjoint() * h * &vm).determinant())
            })
            .collect::<Result<Vec<_>>>()?;
        let steps: Vec<f64> = (0..n)
            .map(|j| (dets[(j + 1) % n] / dets[j]).arg())
            .collect();
        if steps.iter().any(|s| s.abs() > PI / 2.0) {
            n *= 2;
            continue;
        }
        let winding = steps.iter().sum::<f64>() / TAU;
        return round_checked(-winding, n, "winding number");
    }
    Err(Error::NonInteger {
        context: "winding number: phase of det h(k) varies too fast".into(),
        raw: f64::NAN,
        residual: f64::NAN,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelDetail {
    pub width: usize,
    /// Π-signs of the near-end kernel basis.
    pub signs: Vec<i32>,
    pub far_states_discarded: usize,
}

/// Minus the signature of the grading on the kernel of the half-line
/// compression, on sites `0..w`. Only kernel vectors living on the near half
/// count; states at the artificial far wall are discarded.
pub fn kernel_signature(
    sym: &HamiltonianSymbol,
    g: &ChiralGrading,
    w: usize,
) -> Result<(i32, KernelDetail)> {
    if sym.dim() != 1 {
        return Err(Error::Dimension {
            what: "kernel signature needs a 1-D symbol",
            expected: 1,
            got: sym.dim(),
        });
    }
    if !check_chiral(sym, g)? {
        return Err(Error::ChiralViolation(
            "symbol does not anticommute with the grading".into(),
        ));
    }
    match kernel_signature_at(sym, g, w)? {
        Some(r) => Ok(r),
        None => kernel_signature_at(sym, g, 2 * w)?.ok_or_else(|| {
            Error::Precondition(format!(
                "near-zero states are not localised at either wall even at W = {}",
                2 * w
            ))
        }),
    }
}

fn kernel_signature_at(
    sym: &HamiltonianSymbol,
    g: &ChiralGrading,
    w: usize,
) -> Result<Option<(i32, KernelDetail)>> {
    let op = assembly::assemble_halfline(sym, w, 0.0)?;
    let mut slice = spectra::diagonalize(&op, true)?;
    let mask = near_half_mask(&op);
    slice.restrict_to_window(KERNEL_TOL);
    // All near-zero states form one cluster.
    spectra::resolve_degenerate(&mut slice, &mask, 2.0 * KERNEL_TOL);
    slice.apply_mask(&mask)?;
    let weights = slice.weights.clone().unwrap_or_default();
    let mut near = Vec::new();
    let mut far = 0;
    for (i, &wt) in weights.iter().enumerate() {
        if wt >= 0.9 {
            near.push(i);
        } else if wt <= 0.1 {
            far += 1;
        } else {
            return Ok(None);
        }
    }
    let signs = match slice.eigenvectors.as_ref() {
        Some(v) if !near.is_empty() => {
            let basis = v.select_columns(near.iter());
            let pi = linalg::kron(&CMat::identity(w, w), g.matrix());
            let mut form = basis.adjoint() * pi * &basis;
            linalg::symmetrize(&mut form);
            let ev = linalg::eigvalsh(&form)?;
            if ev.iter().any(|x| x.abs() < 0.5) {
                return Err(Error::NonInteger {
                    context: "grading form on the kernel is degenerate".into(),
                    raw: ev.iter().fold(f64::INFINITY, |a, b| a.min(b.abs())),
                    residual: 0.5,
                });
            }
            ev.iter().map(|&x| if x > 0.0 { 1 } else { -1 }).collect()
        }
        _ => Vec::new(),
    };
    let sig: i32 = signs.iter().sum();
    Ok(Some((
        -sig,
        KernelDetail {
            width: w,
            signs,
            far_states_discarded: far,
        },
    )))
}

/// Dof mask of the sites with transverse depth below half the width.
pub fn near_half_mask(op: &AssembledOperator) -> Vec<bool> {
    let region = op.region.as_ref().expect("strip operators carry a region");
    let depth = op.depth.as_ref().expect("strip operators carry depths");
    let w = depth.iter().max().map_or(1, |d| d + 1);
    let norb = region.norb();
    depth
        .iter()
        .flat_map(|&d| std::iter::repeat_n(2 * d < w, norb))
        .collect()
}

// --- edges ---------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeGaps {
    pub alpha: f64,
    pub beta: f64,
    pub width: usize,
    pub grid: usize,
}

impl EdgeGaps {
    pub fn min(&self) -> f64 {
        self.alpha.min(self.beta)
    }
}

/// Smallest `|λ|` over an `n x n` grid of `(k_edge, t)`, for both edges.
///
/// States localised at the far wall (near-half weight at most
/// `1 - EDGE_WEIGHT`) belong to the opposite compression and are skipped;
/// extended states still count, so a gapped edge without edge states reports
/// its bulk gap.
pub fn edge_gap_scan(
    sym: &HamiltonianSymbol,
    pair: &SlopePair,
    w: usize,
    n: usize,
) -> Result<EdgeGaps> {
    let side_gap = |side: Side| -> Result<f64> {
        let slope = pair.slope(side);
        let gaps = (0..n * n)
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx / n, idx % n);
                let op = assembly::assemble_edge_strip(
                    sym,
                    slope,
                    side,
                    w,
                    grid_angle(i, n),
                    grid_angle(j, n),
                )?;
                let mask = near_half_mask(&op);
                let mut slice = spectra::diagonalize(&op, true)?;
                spectra::resolve_degenerate(&mut slice, &mask, CLUSTER_TOL);
                slice.apply_mask(&mask)?;
                let wts = slice.weights.as_ref().expect("mask applied");
                Ok(slice
                    .eigenvalues
                    .iter()
                    .zip(wts)
                    .filter(|(_, &wt)| wt > 1.0 - EDGE_WEIGHT)
                    .fold(f64::INFINITY, |g, (v, _)| g.min(v.abs())))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(gaps.into_iter().fold(f64::INFINITY, f64::min))
    };
    Ok(EdgeGaps {
        alpha: side_gap(Side::Alpha)?,
        beta: side_gap(Side::Beta)?,
        width: w,
        grid: n,
    })
}

/// Parameter grid `2π (j + 1/2) / n`. Offsetting by half a step keeps the
/// symmetric points `t = 0, π` off the grid, where crossings of distinct
/// corners tend to coincide.
pub fn offset_grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| TAU * (j as f64 + 0.5) / n as f64).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossingRecord {
    pub t: f64,
    pub direction: i32,
    pub weight: f64,
    pub counted: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowDetail {
    pub value: i32,
    pub window: f64,
    pub threshold: f64,
    pub t_points: usize,
    pub refinements: usize,
    pub jump_bound: f64,
    pub crossings: Vec<CrossingRecord>,
    pub track: BranchTrack,
}

impl FlowDetail {
    fn from_track(
        track: BranchTrack,
        window: f64,
        threshold: f64,
        t_points: usize,
        jump_bound: f64,
    ) -> Self {
        let crossings = track
            .crossings
            .iter()
            .map(|c| CrossingRecord {
                t: c.t,
                direction: c.direction,
                weight: c.weight,
                counted: c.weight >= threshold,
            })
            .collect();
        FlowDetail {
            value: track.net_flow(threshold),
            window,
            threshold,
            t_points,
            refinements: track.refinements,
            jump_bound,
            crossings,
            track,
        }
    }

    /// Net flow recounted at another localisation threshold.
    pub fn flow_at(&self, threshold: f64) -> i32 {
        self.track.net_flow(threshold)
    }

    /// Parameter values of the counted crossings.
    pub fn counted_crossings(&self) -> impl Iterator<Item = &CrossingRecord> {
        self.crossings.iter().filter(|c| c.counted)
    }
}

/// Spectral flow of the near-end states of the half-line family
/// `t ↦ P H(t) P` of a planar symbol, sites `0..w`.
pub fn edge_spectral_flow(
    sym: &HamiltonianSymbol,
    w: usize,
    t_points: usize,
    window: f64,
) -> Result<(i32, FlowDetail)> {
    if sym.dim() != 2 {
        return Err(Error::Dimension {
            what: "edge spectral flow needs a 2-D symbol",
            expected: 2,
            got: sym.dim(),
        });
    }
    let slice_at = |t: f64| -> Result<SpectralSlice> {
        let op = assembly::assemble_halfline(sym, w, t)?;
        let mask = near_half_mask(&op);
        let mut s = spectra::diagonalize(&op, true)?;
        s.restrict_to_window(window);
        spectra::resolve_degenerate(&mut s, &mask, CLUSTER_TOL);
        s.apply_mask(&mask)?;
        Ok(s)
    };
    let slices = offset_grid(t_points)
        .into_iter()
        .map(slice_at)
        .collect::<Result<Vec<_>>>()?;
    let jump = sym.lipschitz_along(1);
    let track = spectra::track_branches(slices, &TrackOptions::new(window, jump), Some(&slice_at))?;
    let detail = FlowDetail::from_track(track, window, EDGE_WEIGHT, t_points, jump);
    Ok((detail.value, detail))
}

// --- corners -------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolverChoice {
    /// Dense below 600 degrees of freedom, windowed above.
    Auto,
    Dense,
    Window,
}

#[derive(Debug, Clone, Serialize)]
pub struct CornerFlowOptions {
    pub l: usize,
    pub t_points: usize,
    /// Half-width of the eigenvalue window; half the smallest edge gap when
    /// absent.
    pub window: Option<f64>,
    pub mask_threshold: f64,
    pub edge_width: usize,
    pub edge_grid: usize,
    pub solver: SolverChoice,
}

impl Default for CornerFlowOptions {
    fn default() -> Self {
        CornerFlowOptions {
            l: 24,
            t_points: 64,
            window: None,
            mask_threshold: 0.6,
            edge_width: 40,
            edge_grid: 16,
            solver: SolverChoice::Auto,
        }
    }
}

/// Dof mask of the sites within max-norm `l/2` of the corner vertex.
pub fn corner_mask(op: &AssembledOperator, l: usize) -> Vec<bool> {
    let region = op.region.as_ref().expect("corner operators carry a region");
    let r = (l / 2) as i64;
    region.dof_mask(|(m, n)| m.abs().max(n.abs()) <= r)
}

/// In-window corner spectrum at one parameter value, with corner-mask
/// weights attached.
pub fn corner_slice(
    sym: &HamiltonianSymbol,
    pair: &SlopePair,
    l: usize,
    t: f64,
    window: f64,
    solver: SolverChoice,
    start: Option<&CMat>,
) -> Result<SpectralSlice> {
    let op = assembly::assemble_corner(sym, pair, l, t)?;
    let mask = corner_mask(&op, l);
    let dense = match solver {
        SolverChoice::Dense => true,
        SolverChoice::Window => false,
        SolverChoice::Auto => op.dim() <= 600,
    };
    let mut s = if dense {
        let mut s = spectra::diagonalize(&op, true)?;
        s.restrict_to_window(window);
        s
    } else {
        spectra::diagonalize_window(&op, window, start, &WindowOptions::default())?
    };
    spectra::resolve_degenerate(&mut s, &mask, CLUSTER_TOL);
    s.apply_mask(&mask)?;
    Ok(s)
}

/// Net spectral flow of corner-localised states of `t ↦ H^{α,β}(t)`.
///
/// `gaps` may carry a previous [`edge_gap_scan`] result; otherwise one is run
/// with the widths in `opts`. The edges must be gapped by at least twice the
/// window half-width.
pub fn corner_spectral_flow(
    sym: &HamiltonianSymbol,
    pair: &SlopePair,
    opts: &CornerFlowOptions,
    gaps: Option<EdgeGaps>,
) -> Result<(i32, FlowDetail, EdgeGaps)> {
    let gaps = match gaps {
        Some(g) => g,
        None => edge_gap_scan(sym, pair, opts.edge_width, opts.edge_grid)?,
    };
    let window = opts.window.unwrap_or(gaps.min() / 2.0);
    if window.is_nan() || window <= 0.0 || gaps.min() < 2.0 * window {
        return Err(Error::Precondition(format!(
            "edge gaps ({:.4}, {:.4}) must be at least twice the window half-width {window:.4}",
            gaps.alpha, gaps.beta
        )));
    }
    let provider = |t: f64| corner_slice(sym, pair, opts.l, t, window, opts.solver, None);
    let mut slices: Vec<SpectralSlice> = Vec::with_capacity(opts.t_points);
    for t in offset_grid(opts.t_points) {
        let start = slices.last().and_then(|s| s.eigenvectors.clone());
        let start = start.filter(|v| v.ncols() > 0);
        slices.push(corner_slice(
            sym,
            pair,
            opts.l,
            t,
            window,
            opts.solver,
            start.as_ref(),
        )?);
    }
    let jump = sym.lipschitz_along(2);
    let track = spectra::track_branches(slices, &TrackOptions::new(window, jump), Some(&provider))?;
    let detail = FlowDetail::from_track(track, window, opts.mask_threshold, opts.t_points, jump);
    Ok((detail.value, detail, gaps))
}

/// The most corner-localised in-window eigenpair at `t`.
pub fn corner_state(
    sym: &HamiltonianSymbol,
    pair: &SlopePair,
    l: usize,
    t: f64,
    window: f64,
) -> Result<(f64, CMat, f64)> {
    let s = corner_slice(sym, pair, l, t, window, SolverChoice::Auto, None)?;
    let weights = s.weights.as_ref().expect("mask applied");
    let best = (0..s.len())
        .max_by(|&a, &b| weights[a].total_cmp(&weights[b]))
        .ok_or_else(|| {
            Error::Precondition(format!("no corner eigenvalue within ±{window} at t = {t}"))
        })?;
    let vec = s
        .eigenvectors
        .as_ref()
        .expect("vectors")
        .columns(best, 1)
        .clone_owned();
    Ok((s.eigenvalues[best], vec, weights[best]))
}

/// The near-end state of the half-line compression with the smallest `|λ|`.
pub fn halfline_edge_state(sym: &HamiltonianSymbol, w: usize, t: f64) -> Result<(f64, CMat)> {
    let op = assembly::assemble_halfline(sym, w, t)?;
    let mask = near_half_mask(&op);
    let mut s = spectra::diagonalize(&op, true)?;
    s.restrict_to_window(0.5);
    spectra::resolve_degenerate(&mut s, &mask, CLUSTER_TOL);
    s.apply_mask(&mask)?;
    let weights = s.weights.as_ref().expect("mask applied");
    let best = (0..s.len())
        .filter(|&i| weights[i] >= EDGE_WEIGHT)
        .min_by(|&a, &b| s.eigenvalues[a].abs().total_cmp(&s.eigenvalues[b].abs()))
        .ok_or_else(|| Error::Precondition(format!("no near-end state within ±0.5 at t = {t}")))?;
    let v = s
        .eigenvectors
        .as_ref()
        .expect("vectors")
        .columns(best, 1)
        .clone_owned();
    Ok((s.eigenvalues[best], v))
}

/// `(k1 · M2, I^{2d,A}(h1) · I^{1d,AIII}(h2))` for a product model, `k1`
/// being the number of bands of `h1` below zero and `M2` the orbital count
/// of `h2`.
pub fn bulk_edge_pair(
    h1: &HamiltonianSymbol,
    h2: &HamiltonianSymbol,
    g: &ChiralGrading,
    chern_grid: usize,
    winding_grid: usize,
) -> Result<(i32, i32)> {
    let bloch = h1.evaluate_bloch(&[0.0, 0.0])?;
    let k1 = linalg::eigvalsh(&bloch)?
        .iter()
        .filter(|&&v| v < 0.0)
        .count();
    if k1 == 0 {
        return Err(Error::Precondition(
            "first factor has no bands below zero; its Fermi projection is trivial".into(),
        ));
    }
    let chern = chern_number(h1, chern_grid)?;
    let winding = winding_number(h2, g, winding_grid)?;
    Ok(((k1 * h2.norb()) as i32, chern.value * winding.value))
}

/// Overlap `|⟨ψ, φ1 ⊗ φ2⟩|` of a quadrant corner vector with a product of a
/// state on the first axis and a state on the second axis.
pub fn product_overlap(corner: &CMat, phi1: &CMat, phi2: &CMat, n1: usize, n2: usize) -> f64 {
    let len1 = phi1.nrows() / n1;
    let len2 = phi2.nrows() / n2;
    let mut prod = DMatrix::<Complex64>::zeros(len1 * len2 * n1 * n2, 1);
    for m in 0..len1 {
        for n in 0..len2 {
            for o1 in 0..n1 {
                for o2 in 0..n2 {
                    let idx = ((m * len2 + n) * n1 + o1) * n2 + o2;
                    prod[idx] = phi1[m * n1 + o1] * phi2[n * n2 + o2];
                }
            }
        }
    }
    let norm = corner.norm() * prod.norm();
    (corner.adjoint() * prod)[(0, 0)].norm() / norm
}
