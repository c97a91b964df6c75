//! Brute-force reference computations. They share no assembly, eigensolver
//! or tracking code with the library: half-line matrices are built from the
//! hopping list directly, kernels come from an SVD, Fermi projections from
//! the Newton iteration for the matrix sign function.

#![allow(dead_code)]

use std::f64::consts::TAU;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use cornerflow::symbol::{ChiralGrading, HamiltonianSymbol};

pub type M = DMatrix<Complex64>;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Dense compression of a 1-D symbol to sites `0..w`, `⟨b|H|a⟩ = h_{b-a}`.
pub fn halfline_matrix(sym: &HamiltonianSymbol, w: usize) -> M {
    let n = sym.norb();
    let mut a = M::zeros(w * n, w * n);
    for (r, h) in sym.hoppings() {
        for from in 0..w as i64 {
            let to = from + r[0] as i64;
            if !(0..w as i64).contains(&to) {
                continue;
            }
            let (to, from) = (to as usize, from as usize);
            for i in 0..n {
                for j in 0..n {
                    a[(to * n + i, from * n + j)] += h[(i, j)];
                }
            }
        }
    }
    a
}

fn hermitian_eigen(a: &M) -> (Vec<f64>, M) {
    let e = SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..e.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| e.eigenvalues[i].total_cmp(&e.eigenvalues[j]));
    let vals = order.iter().map(|&i| e.eigenvalues[i]).collect();
    (vals, e.eigenvectors.select_columns(order.iter()))
}

/// Dimension of the near-end kernel of the half-line compression on `0..w`
/// and the grading eigenvalues on it, largest first.
///
/// The kernel is the right null space of an SVD. Kernel vectors are rotated
/// to diagonalise the weight on the sites `< w/2`; those with weight at least
/// 0.9 form the near-end kernel.
pub fn oracle_halfline_kernel(
    sym: &HamiltonianSymbol,
    g: &ChiralGrading,
    w: usize,
) -> (usize, Vec<i32>) {
    let n = sym.norb();
    let a = halfline_matrix(sym, w);
    let svd = a.svd(false, true);
    let vt = svd.v_t.expect("right singular vectors");
    let smax = svd.singular_values.max().max(1.0);
    let null: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] < 1e-9 * smax)
        .collect();
    if null.is_empty() {
        return (0, Vec::new());
    }
    let kernel = vt.select_rows(null.iter()).adjoint();

    let near = M::from_diagonal(&nalgebra::DVector::from_fn(w * n, |i, _| {
        if 2 * (i / n) < w {
            c(1.0)
        } else {
            c(0.0)
        }
    }));
    let (weights, rot) = hermitian_eigen(&(kernel.adjoint() * &near * &kernel));
    let keep: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] >= 0.9).collect();
    let near_kernel = &kernel * rot.select_columns(keep.iter());

    let big_pi = DMatrix::<Complex64>::identity(w, w).kronecker(g.matrix());
    let (signs, _) = hermitian_eigen(&(near_kernel.adjoint() * big_pi * &near_kernel));
    let mut signs: Vec<i32> = signs.iter().map(|s| s.round() as i32).collect();
    signs.sort_by(|a, b| b.cmp(a));
    (keep.len(), signs)
}

/// Bloch matrix `Σ h_r e^{i r·k}` evaluated from the hopping list.
pub fn bloch(sym: &HamiltonianSymbol, k: &[f64]) -> M {
    let n = sym.norb();
    let mut h = M::zeros(n, n);
    for (r, block) in sym.hoppings() {
        let phase: f64 = r.iter().zip(k).map(|(&ri, &ki)| ri as f64 * ki).sum();
        h += block * Complex64::from_polar(1.0, phase);
    }
    h
}

/// Fermi projection `(1 - sign H) / 2` by the Newton iteration
/// `X ← (X + X^{-1}) / 2`.
pub fn fermi_projection(h: &M) -> M {
    let n = h.nrows();
    let mut x = h.clone();
    for _ in 0..200 {
        let inv = x.clone().try_inverse().expect("gapped Bloch matrix");
        let next = (&x + inv) * c(0.5);
        let done = (&next - &x).norm() < 1e-14 * next.norm();
        x = next;
        if done {
            break;
        }
    }
    (M::identity(n, n) - x) * c(0.5)
}

fn frame(p: &M, probe: &M) -> M {
    (p * probe).qr().q()
}

/// `c1` of the Fermi projection of a planar symbol on an `n x n` grid, from
/// plaquette products of frame overlaps. Returns the raw real sum.
pub fn field_strength_c1(sym: &HamiltonianSymbol, n: usize) -> f64 {
    let norb = sym.norb();
    let angle = |j: usize| TAU * j as f64 / n as f64;
    let p0 = fermi_projection(&bloch(sym, &[0.0, 0.0]));
    let rank = p0.trace().re.round() as usize;
    if rank == 0 {
        return 0.0;
    }
    // A fixed generic probe gives a frame of the image of every projection.
    let probe = M::from_fn(norb, rank, |i, j| {
        Complex64::new(
            ((i * 7 + j * 3 + 1) as f64).sin(),
            ((i * 5 + j * 11 + 2) as f64).cos(),
        )
    });
    let frames: Vec<M> = (0..n * n)
        .map(|idx| {
            frame(
                &fermi_projection(&bloch(sym, &[angle(idx / n), angle(idx % n)])),
                &probe,
            )
        })
        .collect();
    let at = |i: usize, j: usize| &frames[(i % n) * n + (j % n)];
    let link = |a: &M, b: &M| (a.adjoint() * b).determinant();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (a, b, cc, d) = (at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1));
            total += (link(a, b) * link(b, cc) * link(cc, d) * link(d, a)).arg();
        }
    }
    -total / TAU
}

/// `I^{2d,A} = -c1`, required to agree on 20², 40² and 80² grids.
pub fn oracle_chern_refine(sym: &HamiltonianSymbol) -> Result<i32, String> {
    let mut values = Vec::new();
    for n in [20, 40, 80] {
        let raw = field_strength_c1(sym, n);
        if (raw - raw.round()).abs() >= 1e-6 {
            return Err(format!("non-integer field strength sum {raw} at {n}²"));
        }
        values.push(-(raw.round() as i32));
    }
    if values.windows(2).any(|w| w[0] != w[1]) {
        return Err(format!("grids disagree: {values:?}"));
    }
    Ok(values[0])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowCount {
    pub net: i32,
    pub up: usize,
    pub down: usize,
}

/// Sign changes of the sorted eigenvalues of a closed family on the grid
/// `2π j / n`, counted index by index.
pub fn oracle_flow_smalls(family: impl Fn(f64) -> M, n: usize) -> FlowCount {
    let spectra: Vec<Vec<f64>> = (0..n)
        .map(|j| hermitian_eigen(&family(TAU * j as f64 / n as f64)).0)
        .collect();
    let (mut up, mut down) = (0, 0);
    for j in 0..n {
        let (a, b) = (&spectra[j], &spectra[(j + 1) % n]);
        for (va, vb) in a.iter().zip(b) {
            if *va < 0.0 && *vb >= 0.0 {
                up += 1;
            } else if *va >= 0.0 && *vb < 0.0 {
                down += 1;
            }
        }
    }
    FlowCount {
        net: up as i32 - down as i32,
        up,
        down,
    }
}

/// Diagonal family with the given eigenvalue functions.
pub fn diagonal_family(fs: Vec<fn(f64) -> f64>) -> impl Fn(f64) -> M {
    move |t| {
        M::from_diagonal(&nalgebra::DVector::from_iterator(
            fs.len(),
            fs.iter().map(|f| c(f(t))),
        ))
    }
}
