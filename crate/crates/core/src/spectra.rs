//! Diagonalisation, localisation weights and branch tracking over a closed
//! parameter grid.

use std::f64::consts::TAU;
use std::io::Write;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;

use crate::assembly::{AssembledOperator, OperatorKind};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::sparse::{self, WindowOptions};

/// Eigenvalues closer than this are treated as one degenerate cluster.
pub const CLUSTER_TOL: f64 = 1e-7;

#[derive(Debug, Clone)]
pub struct SpectralSlice {
    pub t: f64,
    pub k_edge: Option<f64>,
    pub kind: OperatorKind,
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Option<CMat>,
    /// Localisation weight of each eigenvector, once a mask was applied.
    pub weights: Option<Vec<f64>>,
}

impl SpectralSlice {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Keeps only eigenpairs with `|λ| < w`.
    pub fn restrict_to_window(&mut self, w: f64) {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| self.eigenvalues[i].abs() < w)
            .collect();
        self.eigenvalues = keep.iter().map(|&i| self.eigenvalues[i]).collect();
        if let Some(v) = &self.eigenvectors {
            self.eigenvectors = Some(v.select_columns(keep.iter()));
        }
        if let Some(wt) = &self.weights {
            self.weights = Some(keep.iter().map(|&i| wt[i]).collect());
        }
    }

    /// Fills `weights` from a per-dof mask.
    pub fn apply_mask(&mut self, mask: &[bool]) -> Result<()> {
        let w = (0..self.len())
            .map(|i| localization_weight(self, i, mask))
            .collect::<Result<Vec<_>>>()?;
        self.weights = Some(w);
        Ok(())
    }
}

/// Full spectrum by dense Hermitian diagonalisation.
pub fn diagonalize(op: &AssembledOperator, want_vectors: bool) -> Result<SpectralSlice> {
    let a = op.dense();
    let (eigenvalues, eigenvectors) = if want_vectors {
        let (vals, vecs) = linalg::eigh(&a)?;
        check_residuals(&a, &vals, &vecs)?;
        (vals, Some(vecs))
    } else {
        (linalg::eigvalsh(&a)?, None)
    };
    Ok(SpectralSlice {
        t: op.meta.t,
        k_edge: op.meta.k_edge,
        kind: op.meta.kind,
        eigenvalues,
        eigenvectors,
        weights: None,
    })
}

fn check_residuals(a: &CMat, vals: &[f64], vecs: &CMat) -> Result<()> {
    let scale = linalg::inf_norm(a).max(1.0);
    let av = a * vecs;
    for (j, &lam) in vals.iter().enumerate() {
        let r = (av.column(j) - vecs.column(j) * Complex64::new(lam, 0.0)).norm();
        if r > 1e-8 * scale {
            return Err(Error::Eigensolver(format!(
                "eigenpair {j} has residual {r:.2e} (norm {scale:.2e})"
            )));
        }
    }
    Ok(())
}

/// Eigenpairs with `|λ| < w` by shift-invert subspace iteration on the
/// sparse matrix. `start` seeds the subspace, typically with the vectors of a
/// neighbouring parameter value.
pub fn diagonalize_window(
    op: &AssembledOperator,
    w: f64,
    start: Option<&CMat>,
    opts: &WindowOptions,
) -> Result<SpectralSlice> {
    let (eigenvalues, vecs) = sparse::window_eigenpairs(&op.matrix, w, start, opts)?;
    Ok(SpectralSlice {
        t: op.meta.t,
        k_edge: op.meta.k_edge,
        kind: op.meta.kind,
        eigenvalues,
        eigenvectors: Some(vecs),
        weights: None,
    })
}

/// Squared norm of eigenvector `index` on the dofs where `mask` is true.
pub fn localization_weight(slice: &SpectralSlice, index: usize, mask: &[bool]) -> Result<f64> {
    let vecs = slice
        .eigenvectors
        .as_ref()
        .ok_or_else(|| Error::Precondition("localization weight needs eigenvectors".into()))?;
    if index >= vecs.ncols() {
        return Err(Error::Precondition(format!(
            "eigen-index {index} out of range ({} vectors)",
            vecs.ncols()
        )));
    }
    if mask.len() != vecs.nrows() {
        return Err(Error::Dimension {
            what: "mask length",
            expected: vecs.nrows(),
            got: mask.len(),
        });
    }
    let col = vecs.column(index);
    let total = col.norm_squared();
    let inside: f64 = col
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(z, _)| z.norm_sqr())
        .sum();
    Ok(if total > 0.0 { inside / total } else { 0.0 })
}

/// Rotates eigenvectors inside each degenerate cluster so that they
/// diagonalise the mask projector. Localised states that happen to be
/// degenerate with states elsewhere are separated this way.
pub fn resolve_degenerate(slice: &mut SpectralSlice, mask: &[bool], tol: f64) {
    let Some(vecs) = slice.eigenvectors.as_mut() else {
        return;
    };
    for range in linalg::clusters(&slice.eigenvalues, tol) {
        if range.len() < 2 {
            continue;
        }
        let block = vecs.columns(range.start, range.len()).clone_owned();
        let mut masked = block.clone();
        for (i, &m) in mask.iter().enumerate() {
            if !m {
                masked.row_mut(i).fill(linalg::ZERO);
            }
        }
        let mut proj = block.adjoint() * masked;
        linalg::symmetrize(&mut proj);
        if let Ok((_, rot)) = linalg::eigh(&proj) {
            // Highest mask weight first.
            let n = rot.ncols();
            let rot = CMat::from_fn(n, n, |i, j| rot[(i, n - 1 - j)]);
            vecs.columns_mut(range.start, range.len())
                .copy_from(&(block * rot));
        }
    }
}

// --- assignment ---------------------------------------------------------------

/// Maximum-score assignment of rows to columns (Hungarian method). Returns
/// for every row its column, or `None` when there are more rows than
/// columns and the row was left over.
pub fn assign_max(score: &[Vec<f64>], cols: usize) -> Vec<Option<usize>> {
    let rows = score.len();
    let n = rows.max(cols);
    if n == 0 {
        return Vec::new();
    }
    let cost = |i: usize, j: usize| -> f64 {
        if i < rows && j < cols {
            -score[i][j]
        } else {
            0.0
        }
    };
    // Potentials formulation, 1-based with a virtual column 0.
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![None; rows];
    for j in 1..=n {
        let i = p[j];
        if i >= 1 && i <= rows && j <= cols {
            out[i - 1] = Some(j - 1);
        }
    }
    out
}

// --- branch tracking ------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct TrackOptions {
    /// Half-width `w` of the eigenvalue window `(-w, w)`.
    pub window: f64,
    /// Lipschitz constant `C` with `|Δλ| <= C Δt` for every branch.
    pub jump_bound: f64,
    /// How many times an interval may be bisected.
    pub max_depth: usize,
    pub min_overlap: f64,
    pub cluster_tol: f64,
}

impl TrackOptions {
    pub fn new(window: f64, jump_bound: f64) -> Self {
        TrackOptions {
            window,
            jump_bound,
            max_depth: 6,
            min_overlap: 0.5,
            cluster_tol: CLUSTER_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BranchPoint {
    pub node: usize,
    pub t: f64,
    pub value: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    /// True when the branch closes on itself around the circle.
    pub closed: bool,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Crossing {
    pub t: f64,
    /// +1 for an upward crossing of zero, -1 for downward.
    pub direction: i32,
    pub weight: f64,
    pub branch: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchTrack {
    /// Parameter values of all nodes, including refinement points.
    pub grid: Vec<f64>,
    pub branches: Vec<Branch>,
    pub crossings: Vec<Crossing>,
    pub refinements: usize,
}

impl BranchTrack {
    /// Net signed crossing count over crossings with weight `>= threshold`.
    pub fn net_flow(&self, threshold: f64) -> i32 {
        self.crossings
            .iter()
            .filter(|c| c.weight >= threshold)
            .map(|c| c.direction)
            .sum()
    }
}

type Provider<'a> = &'a (dyn Fn(f64) -> Result<SpectralSlice> + Sync);

struct Node {
    t: f64,
    values: Vec<f64>,
    weights: Vec<f64>,
    vectors: Option<CMat>,
}

impl Node {
    fn from_slice(mut s: SpectralSlice, window: f64, t: f64) -> Self {
        s.restrict_to_window(window);
        let weights = s.weights.clone().unwrap_or_else(|| vec![1.0; s.len()]);
        Node {
            t,
            values: s.eigenvalues,
            weights,
            vectors: s.eigenvectors,
        }
    }
}

enum LinkOutcome {
    Linked(Vec<(usize, usize)>),
    Ambiguous(String),
}

fn link(a: &Node, b: &Node, opts: &TrackOptions) -> LinkOutcome {
    let dt = b.t - a.t;
    let jump = opts.jump_bound * dt + 1e-9;
    let na = a.values.len();
    let nb = b.values.len();
    let score: Vec<Vec<f64>> = match (&a.vectors, &b.vectors) {
        (Some(va), Some(vb)) => {
            let ov = va.adjoint() * vb;
            let single: Vec<Vec<f64>> = (0..na)
                .map(|i| (0..nb).map(|k| ov[(i, k)].norm_sqr()).collect())
                .collect();
            let mut agg = single.clone();
            for range in linalg::clusters(&b.values, opts.cluster_tol) {
                for row in agg.iter_mut() {
                    let s: f64 = range.clone().map(|k| row[k]).sum();
                    for k in range.clone() {
                        row[k] = s;
                    }
                }
            }
            (0..na)
                .map(|i| {
                    (0..nb)
                        .map(|k| {
                            let admissible = (b.values[k] - a.values[i]).abs() <= jump;
                            if admissible {
                                agg[i][k] + 1e-3 * single[i][k]
                            } else {
                                -1.0
                            }
                        })
                        .collect()
                })
                .collect()
        }
        _ => (0..na)
            .map(|i| {
                (0..nb)
                    .map(|k| {
                        let d = (b.values[k] - a.values[i]).abs();
                        if d <= jump {
                            1.0 - d / jump.max(1e-300)
                        } else {
                            -1.0
                        }
                    })
                    .collect()
            })
            .collect(),
    };
    let with_vectors = a.vectors.is_some() && b.vectors.is_some();
    let assignment = assign_max(&score, nb);
    let mut links = Vec::new();
    let mut linked_b = vec![false; nb];
    let mut linked_a = vec![false; na];
    for (i, k) in assignment.iter().enumerate() {
        let Some(k) = *k else { continue };
        let s = score[i][k];
        let ok = if with_vectors {
            s >= opts.min_overlap
        } else {
            s >= 0.0
        };
        if ok {
            links.push((i, k));
            linked_a[i] = true;
            linked_b[k] = true;
        }
    }
    let core = opts.window / 2.0;
    for i in 0..na {
        if !linked_a[i] && a.values[i].abs() < core {
            return LinkOutcome::Ambiguous(format!(
                "eigenvalue {:.4e} at t = {:.6} has no continuation",
                a.values[i], a.t
            ));
        }
    }
    for k in 0..nb {
        if !linked_b[k] && b.values[k].abs() < core {
            return LinkOutcome::Ambiguous(format!(
                "eigenvalue {:.4e} at t = {:.6} has no predecessor",
                b.values[k], b.t
            ));
        }
    }
    LinkOutcome::Linked(links)
}

/// Links in-window eigenvalues across a closed grid and records their zero
/// crossings. `slices` must cover `[0, 2π)` in increasing order; the last
/// point links back to the first. `provider` computes extra slices when an
/// interval needs bisection.
pub fn track_branches(
    slices: Vec<SpectralSlice>,
    opts: &TrackOptions,
    provider: Option<Provider<'_>>,
) -> Result<BranchTrack> {
    if slices.len() < 2 {
        return Err(Error::Tracking("need at least two grid points".into()));
    }
    let w = opts.window;
    let t0 = slices[0].t;
    let mut nodes: Vec<Node> = slices
        .into_iter()
        .map(|s| {
            let t = s.t;
            Node::from_slice(s, w, t)
        })
        .collect();
    for pair in nodes.windows(2) {
        if pair[1].t <= pair[0].t {
            return Err(Error::Tracking("grid must be strictly increasing".into()));
        }
    }
    if nodes.last().map(|n| n.t).unwrap_or(t0) >= t0 + TAU {
        return Err(Error::Tracking("grid must lie within one period".into()));
    }
    let base_dt = TAU / nodes.len() as f64;
    let min_dt = base_dt / 2f64.powi(opts.max_depth as i32);
    let fetch = |t: f64| -> Result<Node> {
        let p = provider.ok_or_else(|| {
            Error::Tracking("grid refinement requested but no slice provider given".into())
        })?;
        let s = p(t.rem_euclid(TAU))?;
        Ok(Node::from_slice(s, w, t))
    };

    // Coarse grids are refined until every step respects C·Δt <= w/2.
    let mut refinements = 0;
    let mut i = 0;
    let mut all_links: Vec<Vec<(usize, usize)>> = Vec::new();
    loop {
        let n = nodes.len();
        if i >= n {
            break;
        }
        let tb = if i + 1 < n { nodes[i + 1].t } else { t0 + TAU };
        let dt = tb - nodes[i].t;
        let outcome = if opts.jump_bound * dt > w / 2.0 {
            LinkOutcome::Ambiguous(format!("step {dt:.3e} too coarse for the jump bound"))
        } else if i + 1 < n {
            link(&nodes[i], &nodes[i + 1], opts)
        } else {
            let wrap = Node {
                t: t0 + TAU,
                values: nodes[0].values.clone(),
                weights: nodes[0].weights.clone(),
                vectors: nodes[0].vectors.clone(),
            };
            link(&nodes[i], &wrap, opts)
        };
        match outcome {
            LinkOutcome::Linked(links) => {
                all_links.push(links);
                i += 1;
            }
            LinkOutcome::Ambiguous(why) => {
                if dt / 2.0 < min_dt * 0.999 {
                    return Err(Error::Tracking(format!(
                        "ambiguous linking after {} bisections: {why}",
                        opts.max_depth
                    )));
                }
                let mid = fetch(nodes[i].t + dt / 2.0)?;
                nodes.insert(i + 1, mid);
                refinements += 1;
            }
        }
    }

    let n = nodes.len();
    let grid: Vec<f64> = nodes.iter().map(|n| n.t).collect();
    // incoming[node][state] = Some(prev state) ; outgoing[node][state] = next state.
    let mut next: Vec<Vec<Option<usize>>> =
        nodes.iter().map(|x| vec![None; x.values.len()]).collect();
    let mut has_prev: Vec<Vec<bool>> = nodes.iter().map(|x| vec![false; x.values.len()]).collect();
    for (i, links) in all_links.iter().enumerate() {
        let j = (i + 1) % n;
        for &(a, b) in links {
            next[i][a] = Some(b);
            has_prev[j][b] = true;
        }
    }

    let mut visited: Vec<Vec<bool>> = nodes.iter().map(|x| vec![false; x.values.len()]).collect();
    let mut branches = Vec::new();
    let mut crossings = Vec::new();
    let mut starts: Vec<(usize, usize, bool)> = Vec::new();
    for (i, node) in nodes.iter().enumerate() {
        for s in 0..node.values.len() {
            if !has_prev[i][s] {
                starts.push((i, s, false));
            }
        }
    }
    for (i, node) in nodes.iter().enumerate() {
        for s in 0..node.values.len() {
            starts.push((i, s, true));
        }
    }
    for (i0, s0, cyclic) in starts {
        if visited[i0][s0] {
            continue;
        }
        let id = branches.len();
        let mut points = Vec::new();
        let (mut i, mut s) = (i0, s0);
        let mut lap = 0.0;
        let mut closed = false;
        loop {
            visited[i][s] = true;
            points.push(BranchPoint {
                node: i,
                t: nodes[i].t + lap,
                value: nodes[i].values[s],
                weight: nodes[i].weights[s],
            });
            let Some(ns) = next[i][s] else { break };
            let ni = (i + 1) % n;
            let t_next = if ni == 0 {
                nodes[0].t + lap + TAU
            } else {
                nodes[ni].t + lap
            };
            let (va, vb) = (nodes[i].values[s], nodes[ni].values[ns]);
            let dir = if va < 0.0 && vb >= 0.0 {
                1
            } else if va >= 0.0 && vb < 0.0 {
                -1
            } else {
                0
            };
            if dir != 0 {
                let ta = nodes[i].t + lap;
                let frac = va / (va - vb);
                crossings.push(Crossing {
                    t: (ta + frac * (t_next - ta)).rem_euclid(TAU),
                    direction: dir,
                    weight: 0.5 * (nodes[i].weights[s] + nodes[ni].weights[ns]),
                    branch: id,
                });
            }
            if ni == 0 {
                lap += TAU;
            }
            if visited[ni][ns] {
                closed = cyclic || (ni, ns) == (i0, s0);
                break;
            }
            (i, s) = (ni, ns);
        }
        branches.push(Branch { points, closed });
    }
    crossings.sort_by(|a, b| a.t.total_cmp(&b.t));

    Ok(BranchTrack {
        grid,
        branches,
        crossings,
        refinements,
    })
}

/// Writes `t, k_edge, eigenvalue, localization_weight` rows.
pub fn write_slices_csv(slices: &[SpectralSlice], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "t,k_edge,eigenvalue,localization_weight")?;
    for s in slices {
        let k = s.k_edge.map(|k| k.to_string()).unwrap_or_default();
        for (i, lam) in s.eigenvalues.iter().enumerate() {
            let wt = s
                .weights
                .as_ref()
                .map(|v| v[i].to_string())
                .unwrap_or_default();
            writeln!(w, "{},{},{},{}", s.t, k, lam, wt)?;
        }
    }
    Ok(())
}

/// Builds a slice from explicit data, mainly for synthetic families.
pub fn slice_from_matrix(a: &CMat, t: f64, want_vectors: bool) -> Result<SpectralSlice> {
    let (eigenvalues, eigenvectors) = if want_vectors {
        let (v, x) = linalg::eigh(a)?;
        (v, Some(x))
    } else {
        (linalg::eigvalsh(a)?, None)
    };
    Ok(SpectralSlice {
        t,
        k_edge: None,
        kind: OperatorKind::Bulk,
        eigenvalues,
        eigenvectors,
        weights: None,
    })
}

/// Diagonal matrix with the given real entries.
pub fn real_diagonal(values: &[f64]) -> CMat {
    CMat::from_diagonal(&DVector::from_iterator(
        values.len(),
        values.iter().map(|&x| Complex64::new(x, 0.0)),
    ))
}
