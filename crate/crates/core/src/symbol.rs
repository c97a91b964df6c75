//! Matrix-valued Fourier polynomials on ℤ^d.
//!
//! A symbol stores one `norb x norb` block per lattice offset `r`; the block
//! is the coefficient of the translation operator by `r`. The Bloch matrix is
//! `Σ_r h_r exp(i⟨r, k⟩)`, i.e. the shift `S` is represented by `e^{ik}`.
//! In real space the matrix element from site `a` to site `b` is
//! `⟨b|H|a⟩ = h_{b-a}`.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, pauli, unit, CMat};

/// Entrywise tolerance for Hermiticity and chiral checks.
pub const SYMMETRY_TOL: f64 = 1e-12;

pub type Offset = Vec<i32>;

/// Hermitian Fourier-polynomial Hamiltonian on ℤ^d.
#[derive(Clone, PartialEq)]
pub struct HamiltonianSymbol {
    dim: usize,
    norb: usize,
    hoppings: BTreeMap<Offset, CMat>,
}

impl fmt::Debug for HamiltonianSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HamiltonianSymbol")
            .field("dim", &self.dim)
            .field("norb", &self.norb)
            .field("offsets", &self.hoppings.keys().collect::<Vec<_>>())
            .finish()
    }
}

fn negate(r: &[i32]) -> Offset {
    r.iter().map(|x| -x).collect()
}

impl HamiltonianSymbol {
    /// Builds a symbol from explicit blocks. Blocks at repeated offsets are
    /// summed. Every offset must come with its Hermitian partner
    /// `h_{-r} = h_r†`; nothing is symmetrised on the caller's behalf.
    pub fn new(
        dim: usize,
        norb: usize,
        blocks: impl IntoIterator<Item = (Offset, CMat)>,
    ) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Model(format!(
                "lattice dimension {dim} not in 1..=3"
            )));
        }
        if norb == 0 {
            return Err(Error::Model("orbital count must be positive".into()));
        }
        let mut hoppings: BTreeMap<Offset, CMat> = BTreeMap::new();
        for (r, h) in blocks {
            if r.len() != dim {
                return Err(Error::Dimension {
                    what: "offset length",
                    expected: dim,
                    got: r.len(),
                });
            }
            if h.shape() != (norb, norb) {
                return Err(Error::Dimension {
                    what: "hopping block size",
                    expected: norb,
                    got: h.nrows().max(h.ncols()),
                });
            }
            match hoppings.get_mut(&r) {
                Some(acc) => *acc += h,
                None => {
                    hoppings.insert(r, h);
                }
            }
        }
        let sym = HamiltonianSymbol {
            dim,
            norb,
            hoppings,
        };
        sym.validate_hermitian()?;
        Ok(sym)
    }

    /// Builds a symbol from the blocks at lexicographically nonnegative
    /// offsets; partners at negative offsets are generated. Partners that are
    /// supplied anyway must agree with the generated ones.
    pub fn from_half(
        dim: usize,
        norb: usize,
        blocks: impl IntoIterator<Item = (Offset, CMat)>,
    ) -> Result<Self> {
        let mut given: BTreeMap<Offset, CMat> = BTreeMap::new();
        for (r, h) in blocks {
            if r.len() != dim {
                return Err(Error::Dimension {
                    what: "offset length",
                    expected: dim,
                    got: r.len(),
                });
            }
            match given.get_mut(&r) {
                Some(acc) => *acc += h,
                None => {
                    given.insert(r, h);
                }
            }
        }
        let mut full = given.clone();
        for (r, h) in &given {
            if is_lex_positive(r) {
                let partner = negate(r);
                let generated = h.adjoint();
                if let Some(existing) = given.get(&partner) {
                    let dev = linalg::max_abs_diff(existing, &generated);
                    if dev > SYMMETRY_TOL {
                        return Err(Error::NotHermitian {
                            offset: partner,
                            deviation: dev,
                        });
                    }
                } else {
                    full.insert(partner, generated);
                }
            }
        }
        Self::new(dim, norb, full)
    }

    fn validate_hermitian(&self) -> Result<()> {
        for (r, h) in &self.hoppings {
            let partner = negate(r);
            let Some(hp) = self.hoppings.get(&partner) else {
                return Err(Error::MissingPartner { offset: r.clone() });
            };
            let dev = linalg::max_abs_diff(hp, &h.adjoint());
            if dev > SYMMETRY_TOL {
                return Err(Error::NotHermitian {
                    offset: r.clone(),
                    deviation: dev,
                });
            }
        }
        Ok(())
    }

    /// The zero symbol.
    pub fn zero(dim: usize, norb: usize) -> Result<Self> {
        Self::new(dim, norb, std::iter::empty())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norb(&self) -> usize {
        self.norb
    }

    pub fn hoppings(&self) -> &BTreeMap<Offset, CMat> {
        &self.hoppings
    }

    pub fn hopping(&self, r: &[i32]) -> Option<&CMat> {
        self.hoppings.get(r)
    }

    /// Largest absolute offset component over axes `axes`.
    pub fn range_along(&self, axes: &[usize]) -> usize {
        self.hoppings
            .keys()
            .flat_map(|r| axes.iter().map(move |&a| r[a].unsigned_abs() as usize))
            .max()
            .unwrap_or(0)
    }

    /// Hopping range R: largest absolute offset component.
    pub fn range(&self) -> usize {
        let axes: Vec<usize> = (0..self.dim).collect();
        self.range_along(&axes)
    }

    /// `Σ_r |r_axis| ‖h_r‖`, a Lipschitz bound for the spectrum of any
    /// compression as a function of the momentum on `axis`.
    pub fn lipschitz_along(&self, axis: usize) -> f64 {
        self.hoppings
            .iter()
            .filter(|(r, _)| r[axis] != 0)
            .map(|(r, h)| r[axis].unsigned_abs() as f64 * linalg::spectral_norm(h))
            .sum()
    }

    /// Bloch matrix `Σ_r h_r exp(i⟨r, k⟩)`, exactly Hermitian.
    pub fn evaluate_bloch(&self, k: &[f64]) -> Result<CMat> {
        if k.len() != self.dim {
            return Err(Error::Dimension {
                what: "momentum vector",
                expected: self.dim,
                got: k.len(),
            });
        }
        let mut out = CMat::zeros(self.norb, self.norb);
        for (r, h) in &self.hoppings {
            let phase: f64 = r.iter().zip(k).map(|(&ri, &ki)| ri as f64 * ki).sum();
            out += h * Complex64::from_polar(1.0, phase);
        }
        debug_assert!(linalg::hermitian_deviation(&out) < 1e-10);
        linalg::symmetrize(&mut out);
        Ok(out)
    }

    /// Adds `block` to the on-site term.
    pub fn with_onsite(&self, block: &CMat) -> Result<Self> {
        let zero = vec![0; self.dim];
        let blocks = self
            .hoppings
            .iter()
            .map(|(r, h)| (r.clone(), h.clone()))
            .chain(std::iter::once((zero, block.clone())));
        Self::new(self.dim, self.norb, blocks)
    }

    /// Direct sum `self ⊕ other` (orbitals of `self` first).
    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::Dimension {
                what: "direct sum lattice dimension",
                expected: self.dim,
                got: other.dim,
            });
        }
        let n = self.norb + other.norb;
        let mut blocks = Vec::new();
        for (r, h) in &self.hoppings {
            let mut b = CMat::zeros(n, n);
            b.view_mut((0, 0), (self.norb, self.norb)).copy_from(h);
            blocks.push((r.clone(), b));
        }
        for (r, h) in &other.hoppings {
            let mut b = CMat::zeros(n, n);
            b.view_mut((self.norb, self.norb), (other.norb, other.norb))
                .copy_from(h);
            blocks.push((r.clone(), b));
        }
        Self::new(self.dim, n, blocks)
    }
}

fn is_lex_positive(r: &[i32]) -> bool {
    r.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0)
}

/// A ℤ₂ grading Π with Π² = 1 and Π = Π†.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiralGrading {
    pi: CMat,
}

impl ChiralGrading {
    pub fn new(pi: CMat) -> Result<Self> {
        if !pi.is_square() {
            return Err(Error::InvalidGrading("grading must be square".into()));
        }
        let n = pi.nrows();
        let dev_h = linalg::hermitian_deviation(&pi);
        let dev_sq = linalg::max_abs_diff(&(&pi * &pi), &CMat::identity(n, n));
        if dev_h > SYMMETRY_TOL || dev_sq > SYMMETRY_TOL {
            return Err(Error::InvalidGrading(format!(
                "need Π = Π† and Π² = 1 (deviations {dev_h:.2e}, {dev_sq:.2e})"
            )));
        }
        Ok(ChiralGrading { pi })
    }

    pub fn matrix(&self) -> &CMat {
        &self.pi
    }

    pub fn dim(&self) -> usize {
        self.pi.nrows()
    }
}

/// True iff `Π h_r Π† = -h_r` for every stored block.
pub fn check_chiral(sym: &HamiltonianSymbol, g: &ChiralGrading) -> Result<bool> {
    if g.dim() != sym.norb() {
        return Err(Error::Dimension {
            what: "grading size",
            expected: sym.norb(),
            got: g.dim(),
        });
    }
    let pi = g.matrix();
    let pi_adj = pi.adjoint();
    Ok(sym
        .hoppings()
        .values()
        .all(|h| linalg::max_abs_diff(&(pi * h * &pi_adj), &(-h)) <= SYMMETRY_TOL))
}

/// `H = H1 ⊗ Π + 1 ⊗ H2` on ℤ³.
///
/// Axis convention: the first coordinate of `h1` becomes lattice axis 1, the
/// second coordinate of `h1` becomes the parameter axis 3, and the coordinate
/// of `h2` becomes lattice axis 2. Orbitals are ordered as `o1 * N2 + o2`.
pub fn product_hamiltonian(
    h1: &HamiltonianSymbol,
    h2: &HamiltonianSymbol,
    g: &ChiralGrading,
) -> Result<HamiltonianSymbol> {
    if h1.dim() != 2 {
        return Err(Error::Dimension {
            what: "first factor lattice dimension",
            expected: 2,
            got: h1.dim(),
        });
    }
    if h2.dim() != 1 {
        return Err(Error::Dimension {
            what: "second factor lattice dimension",
            expected: 1,
            got: h2.dim(),
        });
    }
    if !check_chiral(h2, g)? {
        return Err(Error::ChiralViolation(
            "second factor does not anticommute with the grading".into(),
        ));
    }
    let n1 = h1.norb();
    let n2 = h2.norb();
    let id1 = CMat::identity(n1, n1);
    let mut blocks = Vec::new();
    for (r, h) in h1.hoppings() {
        blocks.push((vec![r[0], 0, r[1]], linalg::kron(h, g.matrix())));
    }
    for (r, h) in h2.hoppings() {
        blocks.push((vec![0, r[0], 0], linalg::kron(&id1, h)));
    }
    HamiltonianSymbol::new(3, n1 * n2, blocks)
}

/// Lifts a planar symbol to ℤ³ with no dependence on lattice axis 2, using
/// the same axis convention as [`product_hamiltonian`].
pub fn stack_planar(h1: &HamiltonianSymbol) -> Result<HamiltonianSymbol> {
    let trivial = HamiltonianSymbol::zero(1, 1)?;
    let g = ChiralGrading::new(CMat::identity(1, 1))?;
    product_hamiltonian(h1, &trivial, &g)
}

/// Two-band Chern insulator `sin kx σ1 + sin ky σ2 + (m + cos kx + cos ky) σ3`.
pub fn chern_insulator(mass: f64) -> HamiltonianSymbol {
    let s1 = pauli(1);
    let s2 = pauli(2);
    let s3 = pauli(3);
    let half_i = c(0.0, -0.5); // 1/(2i)
    let blocks = vec![
        (vec![1, 0], &s1 * half_i + &s3 * c(0.5, 0.0)),
        (vec![-1, 0], &s1 * (-half_i) + &s3 * c(0.5, 0.0)),
        (vec![0, 1], &s2 * half_i + &s3 * c(0.5, 0.0)),
        (vec![0, -1], &s2 * (-half_i) + &s3 * c(0.5, 0.0)),
        (vec![0, 0], &s3 * c(mass, 0.0)),
    ];
    HamiltonianSymbol::new(2, 2, blocks).expect("Chern insulator blocks are Hermitian")
}

/// Chiral chain `S^w ⊗ E12 + S^{-w} ⊗ E21`; winding `w` of its off-diagonal
/// block `e^{iwk}`.
pub fn chiral_shift(w: i32) -> (HamiltonianSymbol, ChiralGrading) {
    let blocks = vec![(vec![w], unit(2, 0, 1)), (vec![-w], unit(2, 1, 0))];
    let sym = HamiltonianSymbol::new(1, 2, blocks).expect("shift blocks are Hermitian");
    let g = ChiralGrading::new(pauli(3)).expect("σ3 is a grading");
    (sym, g)
}

/// Constant symbol σ3 on ℤ^dim.
pub fn onsite_gapped(dim: usize) -> HamiltonianSymbol {
    HamiltonianSymbol::new(dim, 2, vec![(vec![0; dim], pauli(3))]).expect("σ3 is Hermitian")
}

/// Constant symbol σ1 on ℤ¹ with grading σ3.
pub fn onsite_chiral() -> (HamiltonianSymbol, ChiralGrading) {
    let sym = HamiltonianSymbol::new(1, 2, vec![(vec![0], pauli(1))]).expect("σ1 is Hermitian");
    (sym, ChiralGrading::new(pauli(3)).expect("σ3 is a grading"))
}

pub fn h1_example() -> HamiltonianSymbol {
    chern_insulator(-1.0)
}

pub fn h1_trivial() -> HamiltonianSymbol {
    chern_insulator(-3.0)
}

pub fn h2_example() -> (HamiltonianSymbol, ChiralGrading) {
    chiral_shift(1)
}

pub fn double_shift() -> (HamiltonianSymbol, ChiralGrading) {
    chiral_shift(2)
}

pub fn product_example() -> HamiltonianSymbol {
    let (h2, g) = h2_example();
    product_hamiltonian(&h1_example(), &h2, &g).expect("h2_example is chiral")
}

/// A named catalog entry.
#[derive(Debug, Clone)]
pub struct NamedModel {
    pub name: &'static str,
    pub description: &'static str,
    pub symbol: HamiltonianSymbol,
    pub grading: Option<ChiralGrading>,
    /// The factors a product model was built from.
    pub factors: Option<ProductFactors>,
}

#[derive(Debug, Clone)]
pub struct ProductFactors {
    pub h1: HamiltonianSymbol,
    pub h2: HamiltonianSymbol,
    pub grading: ChiralGrading,
}

impl ProductFactors {
    pub fn new(h1: HamiltonianSymbol, (h2, grading): (HamiltonianSymbol, ChiralGrading)) -> Self {
        ProductFactors { h1, h2, grading }
    }

    pub fn product(&self) -> Result<HamiltonianSymbol> {
        product_hamiltonian(&self.h1, &self.h2, &self.grading)
    }
}

/// Built-in models, in a fixed order.
pub fn builtin_models() -> Vec<NamedModel> {
    let (h2, g2) = h2_example();
    let (ds, gds) = double_shift();
    let (oc, goc) = onsite_chiral();
    let product = |name, description, h1, h2| {
        let factors = ProductFactors::new(h1, h2);
        NamedModel {
            name,
            description,
            symbol: factors.product().expect("chiral factor"),
            grading: None,
            factors: Some(factors),
        }
    };
    vec![
        NamedModel {
            name: "h1_example",
            description: "2-D Chern insulator, mass -1",
            symbol: h1_example(),
            grading: None,
            factors: None,
        },
        NamedModel {
            name: "h1_trivial",
            description: "2-D Chern insulator, mass -3 (trivial phase)",
            symbol: h1_trivial(),
            grading: None,
            factors: None,
        },
        NamedModel {
            name: "h2_example",
            description: "1-D chiral shift chain, winding 1",
            symbol: h2,
            grading: Some(g2),
            factors: None,
        },
        NamedModel {
            name: "double_shift",
            description: "1-D chiral chain with shift by two, winding 2",
            symbol: ds,
            grading: Some(gds),
            factors: None,
        },
        NamedModel {
            name: "onsite_chiral",
            description: "1-D constant σ1 with grading σ3",
            symbol: oc,
            grading: Some(goc),
            factors: None,
        },
        product(
            "product_example",
            "h1_example ⊗ Π + 1 ⊗ h2_example on ℤ³",
            h1_example(),
            h2_example(),
        ),
        product(
            "product_trivial",
            "h1_trivial ⊗ Π + 1 ⊗ h2_example on ℤ³",
            h1_trivial(),
            h2_example(),
        ),
        product(
            "product_double",
            "h1_example ⊗ Π + 1 ⊗ double_shift on ℤ³",
            h1_example(),
            double_shift(),
        ),
        product(
            "product_trivial_double",
            "h1_trivial ⊗ Π + 1 ⊗ double_shift on ℤ³",
            h1_trivial(),
            double_shift(),
        ),
        NamedModel {
            name: "stacked_h1",
            description: "h1_example lifted to ℤ³ without axis-2 dependence (gapless edge)",
            symbol: stack_planar(&h1_example()).expect("planar lift"),
            grading: None,
            factors: None,
        },
        NamedModel {
            name: "onsite_gapped",
            description: "constant σ3 on ℤ³",
            symbol: onsite_gapped(3),
            grading: None,
            factors: None,
        },
    ]
}

pub fn builtin(name: &str) -> Option<NamedModel> {
    builtin_models().into_iter().find(|m| m.name == name)
}

// --- model files -----------------------------------------------------------

/// JSON model file layout. Complex entries are `[re, im]` pairs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ModelFile {
    pub dim: usize,
    pub norb: usize,
    pub hoppings: Vec<HoppingEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chiral: Option<Vec<Vec<[f64; 2]>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct HoppingEntry {
    pub offset: Vec<i32>,
    pub block: Vec<Vec<[f64; 2]>>,
}

fn block_from_json(rows: &[Vec<[f64; 2]>], n: usize) -> Result<CMat> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Model(format!("block must be {n}x{n}")));
    }
    Ok(CMat::from_fn(n, n, |i, j| c(rows[i][j][0], rows[i][j][1])))
}

fn block_to_json(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

impl ModelFile {
    pub fn into_model(self) -> Result<(HamiltonianSymbol, Option<ChiralGrading>)> {
        let n = self.norb;
        let blocks = self
            .hoppings
            .iter()
            .map(|e| Ok((e.offset.clone(), block_from_json(&e.block, n)?)))
            .collect::<Result<Vec<_>>>()?;
        let sym = HamiltonianSymbol::from_half(self.dim, n, blocks)?;
        let grading = match &self.chiral {
            Some(rows) => Some(ChiralGrading::new(block_from_json(rows, n)?)?),
            None => None,
        };
        Ok((sym, grading))
    }

    /// Serialises the nonnegative half of the hopping map.
    pub fn from_model(sym: &HamiltonianSymbol, grading: Option<&ChiralGrading>) -> Self {
        let hoppings = sym
            .hoppings()
            .iter()
            .filter(|(r, _)| !is_lex_positive(&negate(r)))
            .map(|(r, h)| HoppingEntry {
                offset: r.clone(),
                block: block_to_json(h),
            })
            .collect();
        ModelFile {
            dim: sym.dim(),
            norb: sym.norb(),
            hoppings,
            chiral: grading.map(|g| block_to_json(g.matrix())),
        }
    }
}

pub fn load_model(path: &std::path::Path) -> Result<(HamiltonianSymbol, Option<ChiralGrading>)> {
    let text = std::fs::read_to_string(path)?;
    let file: ModelFile = serde_json::from_str(&text)?;
    file.into_model()
}
