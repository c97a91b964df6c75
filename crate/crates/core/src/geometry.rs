//! Edge slopes, half-plane membership and finite lattice regions in ℤ².

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Site = (i64, i64);

/// An edge slope: a rational number in lowest terms or ±∞.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slope {
    Rational { p: i64, q: i64 },
    PlusInfinity,
    MinusInfinity,
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Slope {
    pub fn rational(p: i64, q: i64) -> Result<Self> {
        if q == 0 {
            return Err(Error::Geometry("slope denominator is zero".into()));
        }
        let g = gcd(p, q);
        let s = q.signum();
        Ok(Slope::Rational {
            p: s * p / g,
            q: s * q / g,
        })
    }

    pub fn integer(p: i64) -> Self {
        Slope::Rational { p, q: 1 }
    }

    pub fn is_infinite(&self) -> bool {
        !matches!(self, Slope::Rational { .. })
    }

    /// Number of parallel lattice lines per unit of transverse depth.
    pub fn lines_per_layer(&self) -> i64 {
        match *self {
            Slope::Rational { q, .. } => q,
            _ => 1,
        }
    }

    /// Signed integer distance of `site` from the boundary line through the
    /// origin, oriented so that the half-plane of `side` is `d >= 0`.
    ///
    /// Infinite slopes follow a fixed table: `+∞` selects `m >= 0` and `-∞`
    /// selects `m <= 0`, for either side.
    pub fn line_index(&self, side: Side, (m, n): Site) -> i64 {
        match (*self, side) {
            (Slope::Rational { p, q }, Side::Alpha) => -p * m + q * n,
            (Slope::Rational { p, q }, Side::Beta) => p * m - q * n,
            (Slope::PlusInfinity, _) => m,
            (Slope::MinusInfinity, _) => -m,
        }
    }

    /// Primitive lattice vector along the boundary line.
    pub fn edge_supercell(&self) -> Site {
        match *self {
            Slope::Rational { p, q } => (q, p),
            _ => (0, 1),
        }
    }

    fn cmp_extended(&self, other: &Self) -> Ordering {
        use Slope::*;
        match (*self, *other) {
            (MinusInfinity, MinusInfinity) | (PlusInfinity, PlusInfinity) => Ordering::Equal,
            (MinusInfinity, _) | (_, PlusInfinity) => Ordering::Less,
            (_, MinusInfinity) | (PlusInfinity, _) => Ordering::Greater,
            (Rational { p: a, q: b }, Rational { p: c, q: d }) => (a * d).cmp(&(c * b)),
        }
    }
}

impl PartialOrd for Slope {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp_extended(other))
    }
}

impl fmt::Display for Slope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Slope::Rational { p, q: 1 } => write!(f, "{p}"),
            Slope::Rational { p, q } => write!(f, "{p}/{q}"),
            Slope::PlusInfinity => f.write_str("inf"),
            Slope::MinusInfinity => f.write_str("-inf"),
        }
    }
}

impl FromStr for Slope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "inf" | "+inf" | "infinity" | "+infinity" => return Ok(Slope::PlusInfinity),
            "-inf" | "-infinity" => return Ok(Slope::MinusInfinity),
            _ => {}
        }
        let bad = || Error::Geometry(format!("cannot parse slope {s:?}"));
        match s.split_once('/') {
            Some((a, b)) => {
                let p: i64 = a.trim().parse().map_err(|_| bad())?;
                let q: i64 = b.trim().parse().map_err(|_| bad())?;
                Slope::rational(p, q)
            }
            None => Ok(Slope::integer(s.parse().map_err(|_| bad())?)),
        }
    }
}

impl Serialize for Slope {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Slope {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Alpha,
    Beta,
}

/// `-α m + n >= 0` for the α side, `-β m + n <= 0` for the β side, with
/// denominators cleared.
pub fn in_half_plane(s: Slope, side: Side, site: Site) -> bool {
    s.line_index(side, site) >= 0
}

/// Two edge slopes with `alpha < beta`, not both infinite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlopePair {
    pub alpha: Slope,
    pub beta: Slope,
}

impl SlopePair {
    pub fn new(alpha: Slope, beta: Slope) -> Result<Self> {
        if alpha.is_infinite() && beta.is_infinite() {
            return Err(Error::Geometry(
                "alpha and beta cannot both be infinite".into(),
            ));
        }
        if alpha.cmp_extended(&beta) != Ordering::Less {
            return Err(Error::Geometry(format!(
                "need alpha < beta, got {alpha} >= {beta}"
            )));
        }
        Ok(SlopePair { alpha, beta })
    }

    /// The first quadrant, α = 0 and β = +∞.
    pub fn quadrant() -> Self {
        SlopePair {
            alpha: Slope::integer(0),
            beta: Slope::PlusInfinity,
        }
    }

    pub fn slope(&self, side: Side) -> Slope {
        match side {
            Side::Alpha => self.alpha,
            Side::Beta => self.beta,
        }
    }

    pub fn contains(&self, site: Site) -> bool {
        in_half_plane(self.alpha, Side::Alpha, site) && in_half_plane(self.beta, Side::Beta, site)
    }
}

/// A finite ordered set of sites, each carrying `norb` orbitals.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeRegion {
    sites: Vec<Site>,
    norb: usize,
    lookup: HashMap<Site, usize>,
}

impl LatticeRegion {
    pub fn new(sites: Vec<Site>, norb: usize) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::Geometry("region is empty".into()));
        }
        let mut lookup = HashMap::with_capacity(sites.len());
        for (i, &s) in sites.iter().enumerate() {
            if lookup.insert(s, i).is_some() {
                return Err(Error::Geometry(format!("duplicate site {s:?}")));
            }
        }
        Ok(LatticeRegion {
            sites,
            norb,
            lookup,
        })
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn norb(&self) -> usize {
        self.norb
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Total number of degrees of freedom.
    pub fn dof(&self) -> usize {
        self.sites.len() * self.norb
    }

    pub fn site_position(&self, s: Site) -> Option<usize> {
        self.lookup.get(&s).copied()
    }

    pub fn index(&self, s: Site, orb: usize) -> Option<usize> {
        if orb >= self.norb {
            return None;
        }
        self.site_position(s).map(|i| i * self.norb + orb)
    }

    pub fn unindex(&self, i: usize) -> Option<(Site, usize)> {
        (i < self.dof()).then(|| (self.sites[i / self.norb], i % self.norb))
    }

    /// Per-dof boolean mask lifted from a site predicate.
    pub fn dof_mask(&self, pred: impl Fn(Site) -> bool) -> Vec<bool> {
        self.sites
            .iter()
            .flat_map(|&s| std::iter::repeat_n(pred(s), self.norb))
            .collect()
    }
}

/// Wedge sites with `max(|m|, |n|) <= l`, in lexicographic order.
pub fn wedge_region(pair: &SlopePair, l: usize, norb: usize) -> Result<LatticeRegion> {
    let l = l as i64;
    let sites: Vec<Site> = (-l..=l)
        .flat_map(|m| (-l..=l).map(move |n| (m, n)))
        .filter(|&s| pair.contains(s))
        .collect();
    if sites.is_empty() {
        return Err(Error::Geometry(format!(
            "wedge region is empty for L = {l}"
        )));
    }
    LatticeRegion::new(sites, norb)
}

/// One supercell of a width-`w` strip along the boundary of the `side`
/// half-plane of slope `s`.
#[derive(Debug, Clone)]
pub struct Strip {
    pub slope: Slope,
    pub side: Side,
    pub width: usize,
    pub region: LatticeRegion,
    /// Transverse layer of each site, 0 at the boundary.
    pub depth: Vec<usize>,
    reps: Vec<Site>,
}

impl Strip {
    /// Decomposes a lattice site as `rep + k * edge_supercell` with the
    /// representative inside this strip cell. `None` if the site lies
    /// outside the strip.
    pub fn locate(&self, site: Site) -> Option<(usize, i64)> {
        let d = self.slope.line_index(self.side, site);
        let q = self.slope.lines_per_layer();
        if d < 0 || d >= self.width as i64 * q {
            return None;
        }
        let rep = self.reps[d as usize];
        let (vm, vn) = self.slope.edge_supercell();
        let (dm, dn) = (site.0 - rep.0, site.1 - rep.1);
        let k = if vm != 0 { dm / vm } else { dn / vn };
        debug_assert_eq!((dm, dn), (k * vm, k * vn));
        Some((d as usize, k))
    }
}

pub fn strip_region(s: Slope, side: Side, w: usize, norb: usize) -> Result<Strip> {
    if w == 0 {
        return Err(Error::Geometry("strip width must be positive".into()));
    }
    let q = s.lines_per_layer();
    let lines = w as i64 * q;
    let mut reps = Vec::with_capacity(lines as usize);
    for d in 0..lines {
        let rep = match s {
            Slope::Rational { .. } => (0..q)
                .find_map(|m| {
                    // Solve line_index((m, n)) = d for integer n.
                    let base = s.line_index(side, (m, 0));
                    let step = s.line_index(side, (0, 1));
                    let rem = d - base;
                    (rem % step == 0).then_some((m, rem / step))
                })
                .expect("q consecutive columns meet every line"),
            Slope::PlusInfinity => (d, 0),
            Slope::MinusInfinity => (-d, 0),
        };
        reps.push(rep);
    }
    let depth = (0..lines).map(|d| (d / q) as usize).collect();
    let region = LatticeRegion::new(reps.clone(), norb)?;
    Ok(Strip {
        slope: s,
        side,
        width: w,
        region,
        depth,
        reps,
    })
}

pub fn edge_supercell(s: Slope) -> Site {
    s.edge_supercell()
}
