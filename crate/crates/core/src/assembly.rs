//! Finite Hermitian matrices for bulk, edge-strip, half-line and corner
//! compressions of a symbol.
//!
//! The last lattice axis of a symbol is the parameter axis. Its partial
//! Fourier transform carries the phase `exp(-i l t)`, so `H(t)` collects the
//! blocks `Σ_l h_{(r, l)} e^{-ilt}`. In real space the block from site `a` to
//! site `b` is `h_{b-a}`, and everything outside the region is dropped.

use std::collections::BTreeMap;
use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{self, LatticeRegion, Side, Site, Slope, SlopePair, Strip};
use crate::linalg::CMat;
use crate::sparse::SparseMatrix;
use crate::symbol::HamiltonianSymbol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OperatorKind {
    Bulk,
    EdgeAlpha,
    EdgeBeta,
    Corner,
    HalfLine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatorMeta {
    pub t: f64,
    pub k_edge: Option<f64>,
    pub kind: OperatorKind,
}

#[derive(Debug, Clone)]
pub struct AssembledOperator {
    pub matrix: SparseMatrix,
    pub region: Option<LatticeRegion>,
    /// Transverse layer of every site, for strips and half-lines.
    pub depth: Option<Vec<usize>>,
    pub meta: OperatorMeta,
}

impl AssembledOperator {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn dense(&self) -> CMat {
        self.matrix.to_dense()
    }

    pub fn hermitian_deviation(&self) -> f64 {
        self.matrix.hermitian_deviation()
    }

    /// Writes the matrix as CSV, one row per line, real and imaginary parts
    /// interleaved.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        let n = self.dim();
        let mut row = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            row.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            for (j, v) in self.matrix.row(i) {
                row[j] = v;
            }
            let line: Vec<String> = row
                .iter()
                .flat_map(|z| [z.re.to_string(), z.im.to_string()])
                .collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// Collapses the parameter axis (the last one) at angle `t`. The result maps
/// offsets on the remaining axes to blocks.
pub fn fold_parameter(sym: &HamiltonianSymbol, t: f64) -> BTreeMap<Vec<i32>, CMat> {
    let d = sym.dim();
    let mut out: BTreeMap<Vec<i32>, CMat> = BTreeMap::new();
    for (r, h) in sym.hoppings() {
        let phase = Complex64::from_polar(1.0, -(r[d - 1] as f64) * t);
        let key = r[..d - 1].to_vec();
        let scaled = h * phase;
        match out.get_mut(&key) {
            Some(acc) => *acc += scaled,
            None => {
                out.insert(key, scaled);
            }
        }
    }
    out
}

fn require_dim(sym: &HamiltonianSymbol, dim: usize, what: &'static str) -> Result<()> {
    if sym.dim() != dim {
        return Err(Error::Dimension {
            what,
            expected: dim,
            got: sym.dim(),
        });
    }
    Ok(())
}

/// Bloch matrix at `k = (ξ, η, t)`.
pub fn assemble_bulk(sym: &HamiltonianSymbol, k: &[f64]) -> Result<AssembledOperator> {
    let m = sym.evaluate_bloch(k)?;
    Ok(AssembledOperator {
        matrix: SparseMatrix::from_dense(&m),
        region: None,
        depth: None,
        meta: OperatorMeta {
            t: k.last().copied().unwrap_or(0.0),
            k_edge: None,
            kind: OperatorKind::Bulk,
        },
    })
}

fn compress_planar(blocks: &BTreeMap<Vec<i32>, CMat>, region: &LatticeRegion) -> SparseMatrix {
    let norb = region.norb();
    let mut triplets = Vec::new();
    for (a_pos, &(am, an)) in region.sites().iter().enumerate() {
        for (r, h) in blocks {
            let b = (am + r[0] as i64, an + r[1] as i64);
            let Some(b_pos) = region.site_position(b) else {
                continue;
            };
            for i in 0..norb {
                for j in 0..norb {
                    let v = h[(i, j)];
                    if v != Complex64::new(0.0, 0.0) {
                        triplets.push((b_pos * norb + i, a_pos * norb + j, v));
                    }
                }
            }
        }
    }
    SparseMatrix::from_triplets(region.dof(), triplets)
}

/// Compression of `H(t)` onto an arbitrary planar region.
pub fn assemble_region(
    sym: &HamiltonianSymbol,
    region: &LatticeRegion,
    t: f64,
    kind: OperatorKind,
) -> Result<AssembledOperator> {
    require_dim(sym, 3, "region assembly needs a 3-D symbol")?;
    if region.norb() != sym.norb() {
        return Err(Error::Dimension {
            what: "region orbital count",
            expected: sym.norb(),
            got: region.norb(),
        });
    }
    let blocks = fold_parameter(sym, t);
    Ok(AssembledOperator {
        matrix: compress_planar(&blocks, region),
        region: Some(region.clone()),
        depth: None,
        meta: OperatorMeta {
            t,
            k_edge: None,
            kind,
        },
    })
}

/// Corner compression `P^α P^β H(t) P^β P^α` on the wedge truncated to
/// max-norm `l`.
pub fn assemble_corner(
    sym: &HamiltonianSymbol,
    pair: &SlopePair,
    l: usize,
    t: f64,
) -> Result<AssembledOperator> {
    require_dim(sym, 3, "corner assembly needs a 3-D symbol")?;
    let range = sym.range_along(&[0, 1]);
    if range > l {
        return Err(Error::Geometry(format!(
            "hopping range {range} exceeds L = {l}"
        )));
    }
    let region = geometry::wedge_region(pair, l, sym.norb())?;
    assemble_region(sym, &region, t, OperatorKind::Corner)
}

/// One supercell of the `side` edge, `w` layers deep, at edge momentum
/// `k_edge`. Hops that leave the cell along the edge pick up
/// `exp(i k k_edge)` where `k` counts supercell translations.
pub fn assemble_edge_strip(
    sym: &HamiltonianSymbol,
    slope: Slope,
    side: Side,
    w: usize,
    k_edge: f64,
    t: f64,
) -> Result<AssembledOperator> {
    require_dim(sym, 3, "edge strip needs a 3-D symbol")?;
    let range = sym.range_along(&[0, 1]);
    if w <= range {
        return Err(Error::Geometry(format!(
            "strip width {w} must exceed the hopping range {range}"
        )));
    }
    let strip = geometry::strip_region(slope, side, w, sym.norb())?;
    let blocks = fold_parameter(sym, t);
    let matrix = compress_strip(&blocks, &strip, k_edge);
    let kind = match side {
        Side::Alpha => OperatorKind::EdgeAlpha,
        Side::Beta => OperatorKind::EdgeBeta,
    };
    Ok(AssembledOperator {
        matrix,
        depth: Some(strip.depth.clone()),
        region: Some(strip.region),
        meta: OperatorMeta {
            t,
            k_edge: Some(k_edge),
            kind,
        },
    })
}

fn compress_strip(blocks: &BTreeMap<Vec<i32>, CMat>, strip: &Strip, k_edge: f64) -> SparseMatrix {
    let region = &strip.region;
    let norb = region.norb();
    let mut triplets = Vec::new();
    for (a_pos, &(am, an)) in region.sites().iter().enumerate() {
        for (r, h) in blocks {
            let b: Site = (am + r[0] as i64, an + r[1] as i64);
            let Some((b_pos, k)) = strip.locate(b) else {
                continue;
            };
            let phase = Complex64::from_polar(1.0, k as f64 * k_edge);
            for i in 0..norb {
                for j in 0..norb {
                    let v = h[(i, j)];
                    if v != Complex64::new(0.0, 0.0) {
                        triplets.push((b_pos * norb + i, a_pos * norb + j, v * phase));
                    }
                }
            }
        }
    }
    SparseMatrix::from_triplets(region.dof(), triplets)
}

/// Half-line compression along the first axis, sites `0..w`.
///
/// A 1-D symbol is compressed directly. For a 2-D symbol the second axis is
/// the parameter axis and is folded at angle `t` first.
pub fn assemble_halfline(sym: &HamiltonianSymbol, w: usize, t: f64) -> Result<AssembledOperator> {
    let blocks: BTreeMap<i32, CMat> = match sym.dim() {
        1 => sym
            .hoppings()
            .iter()
            .map(|(r, h)| (r[0], h.clone()))
            .collect(),
        2 => fold_parameter(sym, t)
            .into_iter()
            .map(|(r, h)| (r[0], h))
            .collect(),
        d => {
            return Err(Error::Dimension {
                what: "half-line symbol dimension (1 or 2)",
                expected: 2,
                got: d,
            })
        }
    };
    let range = sym.range_along(&[0]);
    if w <= range {
        return Err(Error::Geometry(format!(
            "half-line length {w} must exceed the hopping range {range}"
        )));
    }
    let norb = sym.norb();
    let mut triplets = Vec::new();
    for a in 0..w as i64 {
        for (&r, h) in &blocks {
            let b = a + r as i64;
            if !(0..w as i64).contains(&b) {
                continue;
            }
            for i in 0..norb {
                for j in 0..norb {
                    let v = h[(i, j)];
                    if v != Complex64::new(0.0, 0.0) {
                        triplets.push((b as usize * norb + i, a as usize * norb + j, v));
                    }
                }
            }
        }
    }
    let sites: Vec<Site> = (0..w as i64).map(|m| (m, 0)).collect();
    Ok(AssembledOperator {
        matrix: SparseMatrix::from_triplets(w * norb, triplets),
        region: Some(LatticeRegion::new(sites, norb)?),
        depth: Some((0..w).collect()),
        meta: OperatorMeta {
            t,
            k_edge: None,
            kind: OperatorKind::HalfLine,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{self, eigvalsh};
    use crate::symbol::{self, onsite_gapped, product_example};

    #[test]
    fn bulk_product_spectrum_symmetric() {
        let op = assemble_bulk(&product_example(), &[0.0, 0.0, 0.0]).unwrap();
        let v = eigvalsh(&op.dense()).unwrap();
        for i in 0..4 {
            assert!((v[i] + v[3 - i]).abs() < 1e-12);
        }
    }

    #[test]
    fn bulk_h1_at_zone_corner() {
        let op = assemble_bulk(&symbol::h1_example(), &[std::f64::consts::PI; 2]).unwrap();
        let v = eigvalsh(&op.dense()).unwrap();
        assert!((v[0] + 3.0).abs() < 1e-12 && (v[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn onsite_corner_is_block_diagonal() {
        let pair = SlopePair::new(Slope::integer(-1), Slope::integer(2)).unwrap();
        let op = assemble_corner(&onsite_gapped(3), &pair, 2, 0.7).unwrap();
        let v = eigvalsh(&op.dense()).unwrap();
        let half = v.len() / 2;
        assert!(v[..half].iter().all(|x| (x + 1.0).abs() < 1e-14));
        assert!(v[half..].iter().all(|x| (x - 1.0).abs() < 1e-14));
    }

    #[test]
    fn corner_size_and_hermiticity() {
        let op = assemble_corner(&product_example(), &SlopePair::quadrant(), 24, 0.3).unwrap();
        assert_eq!(op.dim(), 2500);
        assert!(op.hermitian_deviation() < 1e-12);
    }

    #[test]
    fn corner_range_check() {
        let (ds, g) = symbol::double_shift();
        let p = symbol::product_hamiltonian(&symbol::h1_example(), &ds, &g).unwrap();
        assert!(assemble_corner(&p, &SlopePair::quadrant(), 1, 0.0).is_err());
        assert!(assemble_corner(&p, &SlopePair::quadrant(), 2, 0.0).is_ok());
    }

    #[test]
    fn interior_rows_match_bulk_blocks() {
        let sym = product_example();
        let t = 1.1;
        let op = assemble_corner(&sym, &SlopePair::quadrant(), 6, t).unwrap();
        let region = op.region.as_ref().unwrap();
        let blocks = fold_parameter(&sym, t);
        let a = (3, 3);
        for (r, h) in &blocks {
            let b = (a.0 + r[0] as i64, a.1 + r[1] as i64);
            for i in 0..4 {
                for j in 0..4 {
                    let got = op
                        .matrix
                        .get(region.index(b, i).unwrap(), region.index(a, j).unwrap());
                    assert_eq!(got, h[(i, j)]);
                }
            }
        }
    }

    #[test]
    fn fold_uses_negative_parameter_phase() {
        let blocks = fold_parameter(&product_example(), 0.5);
        let h1 = symbol::h1_example();
        let expect = linalg::kron(h1.hopping(&[0, 1]).unwrap(), &linalg::pauli(3))
            * Complex64::from_polar(1.0, -0.5)
            + linalg::kron(h1.hopping(&[0, -1]).unwrap(), &linalg::pauli(3))
                * Complex64::from_polar(1.0, 0.5)
            + linalg::kron(h1.hopping(&[0, 0]).unwrap(), &linalg::pauli(3));
        assert!(linalg::max_abs_diff(&blocks[&vec![0, 0]], &expect) < 1e-15);
    }

    #[test]
    fn strip_widths_checked() {
        let sym = product_example();
        assert!(assemble_edge_strip(&sym, Slope::integer(0), Side::Alpha, 1, 0.0, 0.0).is_err());
        let op = assemble_edge_strip(&sym, Slope::integer(0), Side::Alpha, 5, 0.2, 0.1).unwrap();
        assert_eq!(op.dim(), 20);
        assert!(op.hermitian_deviation() < 1e-12);
    }

    #[test]
    fn onsite_strip_spectrum() {
        for w in [2, 5] {
            let op = assemble_edge_strip(
                &onsite_gapped(3),
                Slope::PlusInfinity,
                Side::Beta,
                w,
                1.3,
                2.0,
            )
            .unwrap();
            let v = eigvalsh(&op.dense()).unwrap();
            assert!(v.iter().all(|x| (x.abs() - 1.0).abs() < 1e-14));
        }
    }

    #[test]
    fn halfline_h2_matrix() {
        let (h2, _) = symbol::h2_example();
        let op = assemble_halfline(&h2, 3, 0.0).unwrap();
        let m = op.dense();
        // <b|H|a> = h_{b-a}: site 1 <- site 0 through h_{+1} = E12.
        assert_eq!(m[(2, 1)], Complex64::new(1.0, 0.0));
        assert_eq!(m[(1, 2)], Complex64::new(1.0, 0.0));
        assert_eq!(m[(0, 3)], Complex64::new(0.0, 0.0));
        assert_eq!(op.matrix.nnz(), 4);
    }

    #[test]
    fn csv_dump_shape() {
        let (h2, _) = symbol::h2_example();
        let op = assemble_halfline(&h2, 2, 0.0).unwrap();
        let mut buf = Vec::new();
        op.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines.iter().all(|l| l.split(',').count() == 8));
    }
}
