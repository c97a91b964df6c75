mod oracle;

use std::f64::consts::TAU;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cornerflow::assembly;
use cornerflow::geometry::{self, LatticeRegion, Side, Slope, SlopePair};
use cornerflow::invariants;
use cornerflow::linalg::{self, CMat};
use cornerflow::symbol::{self, ChiralGrading, HamiltonianSymbol, ModelFile};

fn random_block(n: usize, rng: &mut ChaCha8Rng) -> CMat {
    CMat::from_fn(n, n, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

/// A random Hermitian symbol with up to five hoppings of range at most 2.
fn random_symbol(dim: usize, norb: usize, seed: u64) -> HamiltonianSymbol {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.gen_range(1..=5);
    let blocks: Vec<(Vec<i32>, CMat)> = (0..count)
        .map(|_| {
            let r: Vec<i32> = (0..dim).map(|_| rng.gen_range(-2..=2)).collect();
            let mut h = random_block(norb, &mut rng);
            if r.iter().all(|&x| x == 0) {
                h = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
            }
            let lex_negative = r.iter().find(|&&x| x != 0).is_some_and(|&x| x < 0);
            if lex_negative {
                (r.iter().map(|x| -x).collect(), h)
            } else {
                (r, h)
            }
        })
        .collect();
    HamiltonianSymbol::from_half(dim, norb, blocks).unwrap()
}

fn slope_strategy() -> impl Strategy<Value = Slope> {
    prop_oneof![
        4 => (-3i64..=3, 1i64..=3).prop_map(|(p, q)| Slope::rational(p, q).unwrap()),
        1 => Just(Slope::PlusInfinity),
        1 => Just(Slope::MinusInfinity),
    ]
}

fn pair_strategy() -> impl Strategy<Value = SlopePair> {
    (slope_strategy(), slope_strategy()).prop_filter_map("ordered, not both infinite", |(a, b)| {
        SlopePair::new(a, b).or_else(|_| SlopePair::new(b, a)).ok()
    })
}

fn catalog() -> Vec<HamiltonianSymbol> {
    symbol::builtin_models()
        .into_iter()
        .map(|m| m.symbol)
        .collect()
}

// --- symbols -------------------------------------------------------------------

proptest! {
    #[test]
    fn bloch_matrices_are_hermitian(dim in 1usize..=3, norb in 1usize..=3, seed: u64, k in prop::collection::vec(0.0..TAU, 3)) {
        let sym = random_symbol(dim, norb, seed);
        let h = sym.evaluate_bloch(&k[..dim]).unwrap();
        prop_assert!(linalg::hermitian_deviation(&h) < 1e-12);
    }

    #[test]
    fn bloch_matrices_are_periodic(dim in 1usize..=3, norb in 1usize..=3, seed: u64, k in prop::collection::vec(0.0..TAU, 3), axis in 0usize..3) {
        let sym = random_symbol(dim, norb, seed);
        let axis = axis % dim;
        let mut shifted = k[..dim].to_vec();
        shifted[axis] += TAU;
        let a = sym.evaluate_bloch(&k[..dim]).unwrap();
        let b = sym.evaluate_bloch(&shifted).unwrap();
        prop_assert!(linalg::max_abs_diff(&a, &b) < 1e-12);
    }

    #[test]
    fn bloch_matches_direct_sum(dim in 1usize..=3, norb in 1usize..=3, seed: u64, k in prop::collection::vec(0.0..TAU, 3)) {
        let sym = random_symbol(dim, norb, seed);
        let a = sym.evaluate_bloch(&k[..dim]).unwrap();
        let b = oracle::bloch(&sym, &k[..dim]);
        prop_assert!(linalg::max_abs_diff(&a, &b) < 1e-12);
    }

    #[test]
    fn model_files_round_trip(dim in 1usize..=3, norb in 1usize..=3, seed: u64) {
        let sym = random_symbol(dim, norb, seed);
        let text = serde_json::to_string(&ModelFile::from_model(&sym, None)).unwrap();
        let back: ModelFile = serde_json::from_str(&text).unwrap();
        let (sym2, g) = back.into_model().unwrap();
        prop_assert!(g.is_none());
        prop_assert_eq!(sym.hoppings().keys().collect::<Vec<_>>(), sym2.hoppings().keys().collect::<Vec<_>>());
        for (r, h) in sym.hoppings() {
            prop_assert!(linalg::max_abs_diff(h, sym2.hopping(r).unwrap()) < 1e-15);
        }
    }

    #[test]
    fn product_squares_split(k in prop::collection::vec(0.0..TAU, 3)) {
        let (h2, _) = symbol::h2_example();
        let h1 = symbol::h1_example();
        let prod = symbol::product_example();
        let a = h1.evaluate_bloch(&[k[0], k[2]]).unwrap();
        let b = h2.evaluate_bloch(&[k[1]]).unwrap();
        let sq = linalg::kron(&(&a * &a), &CMat::identity(2, 2)) + linalg::kron(&CMat::identity(2, 2), &(&b * &b));
        let mut lhs: Vec<f64> = linalg::eigvalsh(&prod.evaluate_bloch(&k).unwrap()).unwrap().iter().map(|v| v * v).collect();
        lhs.sort_by(f64::total_cmp);
        let rhs = linalg::eigvalsh(&sq).unwrap();
        for (x, y) in lhs.iter().zip(&rhs) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }
}

#[test]
fn catalog_bloch_matrices_are_hermitian() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for sym in catalog() {
        for _ in 0..25 {
            let k: Vec<f64> = (0..sym.dim()).map(|_| rng.gen_range(0.0..TAU)).collect();
            let h = sym.evaluate_bloch(&k).unwrap();
            assert!(linalg::hermitian_deviation(&h) < 1e-12);
        }
    }
}

#[test]
fn product_summands_anticommute() {
    let (h2, g) = symbol::h2_example();
    let h1 = symbol::h1_example();
    let n = 8;
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                let (xi, eta, t) = (
                    TAU * i as f64 / n as f64,
                    TAU * j as f64 / n as f64,
                    TAU * l as f64 / n as f64,
                );
                let a = linalg::kron(&h1.evaluate_bloch(&[xi, t]).unwrap(), g.matrix());
                let b = linalg::kron(&CMat::identity(2, 2), &h2.evaluate_bloch(&[eta]).unwrap());
                let anti = &a * &b + &b * &a;
                assert!(anti.iter().all(|z| z.norm() < 1e-12));
            }
        }
    }
}

#[test]
fn chiral_check_detects_grading() {
    let (h2, g) = symbol::h2_example();
    assert!(symbol::check_chiral(&h2, &g).unwrap());
    let identity = ChiralGrading::new(CMat::identity(2, 2)).unwrap();
    assert!(!symbol::check_chiral(&h2, &identity).unwrap());
}

// --- geometry ------------------------------------------------------------------

proptest! {
    #[test]
    fn slopes_normalise(p in -6i64..=6, q in 1i64..=6, k in 1i64..=4) {
        prop_assert_eq!(Slope::rational(p * k, q * k).unwrap(), Slope::rational(p, q).unwrap());
        prop_assert_eq!(Slope::rational(-p, -q).unwrap(), Slope::rational(p, q).unwrap());
        let s = Slope::rational(p, q).unwrap();
        prop_assert_eq!(s.to_string().parse::<Slope>().unwrap(), s);
    }

    #[test]
    fn boundary_lines_are_translation_invariant(s in slope_strategy(), m in -20i64..20, n in -20i64..20, k in -5i64..5) {
        let (vm, vn) = geometry::edge_supercell(s);
        for side in [Side::Alpha, Side::Beta] {
            prop_assert_eq!(s.line_index(side, (m, n)), s.line_index(side, (m + k * vm, n + k * vn)));
        }
    }

    #[test]
    fn region_indices_round_trip(pair in pair_strategy(), l in 1usize..8, norb in 1usize..4) {
        let region = geometry::wedge_region(&pair, l, norb).unwrap();
        for i in 0..region.dof() {
            let (site, orb) = region.unindex(i).unwrap();
            prop_assert_eq!(region.index(site, orb), Some(i));
        }
        prop_assert!(region.unindex(region.dof()).is_none());
    }

    #[test]
    fn wedges_grow_monotonically(pair in pair_strategy(), l in 1usize..10) {
        let small = geometry::wedge_region(&pair, l, 1).unwrap();
        let large = geometry::wedge_region(&pair, l + 1, 1).unwrap();
        for &s in small.sites() {
            prop_assert!(pair.contains(s));
            prop_assert!(s.0.abs().max(s.1.abs()) <= l as i64);
            prop_assert!(large.site_position(s).is_some());
        }
        prop_assert!(small.sites().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn strip_cells_tile_the_strip(s in slope_strategy(), w in 1usize..6, m in -15i64..15, n in -15i64..15) {
        let side = Side::Alpha;
        let strip = geometry::strip_region(s, side, w, 1).unwrap();
        let d = s.line_index(side, (m, n));
        let q = s.lines_per_layer();
        match strip.locate((m, n)) {
            Some((pos, k)) => {
                prop_assert!(d >= 0 && d < w as i64 * q);
                let rep = strip.region.sites()[pos];
                let (vm, vn) = s.edge_supercell();
                prop_assert_eq!((rep.0 + k * vm, rep.1 + k * vn), (m, n));
                prop_assert_eq!(strip.depth[pos] as i64, d / q);
            }
            None => prop_assert!(d < 0 || d >= w as i64 * q),
        }
    }
}

// --- assembly ------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn assembled_operators_are_hermitian(pair in pair_strategy(), norb in 1usize..=2, seed: u64, t in 0.0..TAU, k in 0.0..TAU) {
        let sym = random_symbol(3, norb, seed);
        let corner = assembly::assemble_corner(&sym, &pair, 4, t).unwrap();
        prop_assert!(corner.hermitian_deviation() < 1e-12);
        for side in [Side::Alpha, Side::Beta] {
            let strip = assembly::assemble_edge_strip(&sym, pair.slope(side), side, 4, k, t).unwrap();
            prop_assert!(strip.hermitian_deviation() < 1e-12);
        }
        let bulk = assembly::assemble_bulk(&sym, &[k, t, k]).unwrap();
        prop_assert!(bulk.hermitian_deviation() < 1e-12);
        let line = assembly::assemble_halfline(&random_symbol(1, norb, seed), 6, t).unwrap();
        prop_assert!(line.hermitian_deviation() < 1e-12);
    }

    #[test]
    fn corner_is_the_strip_compressed_again(pair in pair_strategy(), seed: u64, t in 0.0..TAU) {
        // Compress onto the α half-plane first (truncated to a box), then
        // keep the sites of the β half-plane: the result is the corner.
        let l = 5usize;
        let sym = random_symbol(3, 2, seed);
        let li = l as i64;
        let half: Vec<(i64, i64)> = (-li..=li)
            .flat_map(|m| (-li..=li).map(move |n| (m, n)))
            .filter(|&s| geometry::in_half_plane(pair.alpha, Side::Alpha, s))
            .collect();
        let half = LatticeRegion::new(half, 2).unwrap();
        let outer = assembly::assemble_region(&sym, &half, t, assembly::OperatorKind::EdgeAlpha).unwrap();
        let corner = assembly::assemble_corner(&sym, &pair, l, t).unwrap();
        let region = corner.region.as_ref().unwrap();
        for i in 0..region.dof() {
            let (si, oi) = region.unindex(i).unwrap();
            for j in 0..region.dof() {
                let (sj, oj) = region.unindex(j).unwrap();
                let (a, b) = (half.index(si, oi).unwrap(), half.index(sj, oj).unwrap());
                prop_assert!((corner.matrix.get(i, j) - outer.matrix.get(a, b)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn strips_are_periodic_in_edge_momentum(s in slope_strategy(), seed: u64, k in 0.0..TAU, t in 0.0..TAU) {
        let sym = random_symbol(3, 2, seed);
        let a = assembly::assemble_edge_strip(&sym, s, Side::Beta, 4, k, t).unwrap().dense();
        let b = assembly::assemble_edge_strip(&sym, s, Side::Beta, 4, k + TAU, t).unwrap().dense();
        prop_assert!(linalg::max_abs_diff(&a, &b) < 1e-12);
    }
}

#[test]
fn corner_interior_rows_match_bulk_blocks() {
    // Far from both walls a corner row holds exactly the hopping blocks.
    let sym = symbol::product_example();
    let pair = SlopePair::quadrant();
    let t = 0.7;
    let corner = assembly::assemble_corner(&sym, &pair, 8, t).unwrap();
    let region = corner.region.as_ref().unwrap();
    let folded = assembly::fold_parameter(&sym, t);
    let centre = (4, 4);
    for (r, h) in &folded {
        let target = (centre.0 + r[0] as i64, centre.1 + r[1] as i64);
        for i in 0..4 {
            for j in 0..4 {
                let row = region.index(target, i).unwrap();
                let col = region.index(centre, j).unwrap();
                assert!((corner.matrix.get(row, col) - h[(i, j)]).norm() < 1e-15);
            }
        }
    }
}

// --- invariants ----------------------------------------------------------------

#[test]
fn chern_is_stable_under_grid_doubling() {
    for sym in [
        symbol::h1_example(),
        symbol::h1_trivial(),
        symbol::onsite_gapped(2),
        symbol::chern_insulator(1.0),
    ] {
        let values: Vec<i32> = [20, 40, 80]
            .iter()
            .map(|&n| invariants::chern_number(&sym, n).unwrap().value)
            .collect();
        assert!(values.windows(2).all(|w| w[0] == w[1]), "{values:?}");
    }
}

#[test]
fn winding_is_stable_under_grid_doubling() {
    for (sym, g) in [
        symbol::h2_example(),
        symbol::double_shift(),
        symbol::onsite_chiral(),
        symbol::chiral_shift(3),
    ] {
        let values: Vec<i32> = [64, 128, 256]
            .iter()
            .map(|&n| invariants::winding_number(&sym, &g, n).unwrap().value)
            .collect();
        assert!(values.windows(2).all(|w| w[0] == w[1]), "{values:?}");
    }
}

#[test]
fn integer_residuals_are_small() {
    let c = invariants::chern_number(&symbol::h1_example(), 40).unwrap();
    assert!(c.residual < 1e-6);
    let (h2, g) = symbol::h2_example();
    let w = invariants::winding_number(&h2, &g, 256).unwrap();
    assert!(w.residual < 1e-6);
    for v in invariants::weak_invariants(&symbol::product_example(), 20).unwrap() {
        assert!(v.residual < 1e-6);
    }
}

#[test]
fn winding_equals_kernel_signature() {
    for (sym, g) in [
        symbol::h2_example(),
        symbol::double_shift(),
        symbol::onsite_chiral(),
        symbol::chiral_shift(-2),
    ] {
        let w = invariants::winding_number(&sym, &g, 256).unwrap().value;
        let (k, _) = invariants::kernel_signature(&sym, &g, 40).unwrap();
        assert_eq!(w, k, "{sym:?}");
    }
}

#[test]
fn edge_flow_is_minus_chern_invariant() {
    for sym in [
        symbol::h1_example(),
        symbol::h1_trivial(),
        symbol::chern_insulator(1.0),
    ] {
        let chern = invariants::chern_number(&sym, 40).unwrap().value;
        let (sf, _) = invariants::edge_spectral_flow(&sym, 40, 64, 0.5).unwrap();
        assert_eq!(sf, -chern, "{sym:?}");
    }
}
