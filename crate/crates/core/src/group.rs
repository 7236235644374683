//! The finite group of torus isometries that preserve the sample grid.
//!
//! Elements are stored as pixel permutations. `perm[s]` is the image of site
//! `s` under the isometry, and a signal is acted on from the right:
//! `act(φ, g)(s) = φ(perm[s])`, i.e. `φ ∘ g`. With this convention
//! `compose(g1, g2)` is the map `g1 ∘ g2`, and
//! `act(φ, compose(g1, g2)) == act(act(φ, g1), g2)`.
//!
//! Elements built from generators also carry a [`Descriptor`]: an affine map
//! `x ↦ L x + t (mod n)` where `L` is one of the eight symmetries of the square.

use std::collections::HashSet;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GeneoError, Result};
use crate::grid::{Signal, TorusGrid, WeightedSignalSpace};

/// Default cap on the number of elements `enumerate_group` will build.
pub const DEFAULT_GROUP_BUDGET: usize = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

/// Affine description of a generator-built element.
///
/// The point is first swapped (if `swap`), then each axis is negated per the
/// flip flags, then translated by `(dx, dy)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Descriptor {
    pub dx: usize,
    pub dy: usize,
    pub flip_x: bool,
    pub flip_y: bool,
    pub swap: bool,
}

type Mat2 = [[i64; 2]; 2];

impl Descriptor {
    pub const IDENTITY: Descriptor = Descriptor { dx: 0, dy: 0, flip_x: false, flip_y: false, swap: false };

    fn linear(&self) -> Mat2 {
        let mut l = if self.swap { [[0, 1], [1, 0]] } else { [[1, 0], [0, 1]] };
        if self.flip_x {
            l[0] = [-l[0][0], -l[0][1]];
        }
        if self.flip_y {
            l[1] = [-l[1][0], -l[1][1]];
        }
        l
    }

    fn from_parts(l: Mat2, t: [i64; 2], n: usize) -> Descriptor {
        let swap = l[0][0] == 0;
        let (flip_x, flip_y) = if swap { (l[0][1] < 0, l[1][0] < 0) } else { (l[0][0] < 0, l[1][1] < 0) };
        let n = n as i64;
        Descriptor { dx: t[0].rem_euclid(n) as usize, dy: t[1].rem_euclid(n) as usize, flip_x, flip_y, swap }
    }

    fn map(&self, i: i64, j: i64) -> [i64; 2] {
        let l = self.linear();
        [l[0][0] * i + l[0][1] * j + self.dx as i64, l[1][0] * i + l[1][1] * j + self.dy as i64]
    }

    /// Descriptor of `self ∘ other`.
    pub fn compose(&self, other: &Descriptor, n: usize) -> Descriptor {
        let (a, b) = (self.linear(), other.linear());
        let l = mat_mul(a, b);
        let t2 = [other.dx as i64, other.dy as i64];
        let t =
            [a[0][0] * t2[0] + a[0][1] * t2[1] + self.dx as i64, a[1][0] * t2[0] + a[1][1] * t2[1] + self.dy as i64];
        Descriptor::from_parts(l, t, n)
    }

    pub fn inverse(&self, n: usize) -> Descriptor {
        let l = self.linear();
        let lt = [[l[0][0], l[1][0]], [l[0][1], l[1][1]]];
        let t = [self.dx as i64, self.dy as i64];
        let ti = [-(lt[0][0] * t[0] + lt[0][1] * t[1]), -(lt[1][0] * t[0] + lt[1][1] * t[1])];
        Descriptor::from_parts(lt, ti, n)
    }
}

fn mat_mul(a: Mat2, b: Mat2) -> Mat2 {
    let mut c = [[0; 2]; 2];
    for r in 0..2 {
        for k in 0..2 {
            c[r][k] = a[r][0] * b[0][k] + a[r][1] * b[1][k];
        }
    }
    c
}

/// An element of the grid isometry group.
#[derive(Clone, Debug)]
pub struct GridIsometry {
    grid: TorusGrid,
    perm: Arc<[usize]>,
    descriptor: Option<Descriptor>,
}

impl PartialEq for GridIsometry {
    /// Equality is equality of the underlying permutations.
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.perm == other.perm
    }
}

impl Eq for GridIsometry {}

impl GridIsometry {
    pub fn from_descriptor(grid: TorusGrid, d: Descriptor) -> Self {
        let n = grid.n();
        let d = Descriptor { dx: d.dx % n, dy: d.dy % n, ..d };
        let perm: Vec<usize> = grid
            .sites()
            .map(|s| {
                let [a, b] = d.map(s.i as i64, s.j as i64);
                grid.index_wrapped(a, b)
            })
            .collect();
        Self { grid, perm: perm.into(), descriptor: Some(d) }
    }

    /// Wraps an arbitrary site permutation.
    pub fn from_perm(grid: TorusGrid, perm: Vec<usize>) -> Result<Self> {
        if perm.len() != grid.len() {
            return Err(GeneoError::InvalidPermutation(format!(
                "length {} does not match {} sites",
                perm.len(),
                grid.len()
            )));
        }
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if p >= perm.len() || seen[p] {
                return Err(GeneoError::InvalidPermutation(format!("entry {p} out of range or repeated")));
            }
            seen[p] = true;
        }
        Ok(Self { grid, perm: perm.into(), descriptor: None })
    }

    pub fn identity(grid: TorusGrid) -> Self {
        Self::from_descriptor(grid, Descriptor::IDENTITY)
    }

    /// Site `(i, j)` goes to `(i + dx, j + dy)` mod `n`.
    pub fn translation(grid: TorusGrid, dx: i64, dy: i64) -> Self {
        let d = Descriptor { dx: grid.wrap(dx), dy: grid.wrap(dy), ..Descriptor::IDENTITY };
        Self::from_descriptor(grid, d)
    }

    /// `X`: `(i, j) ↦ (−i, j)`; `Y`: `(i, j) ↦ (i, −j)`.
    pub fn reflection(grid: TorusGrid, axis: Axis) -> Self {
        let d = match axis {
            Axis::X => Descriptor { flip_x: true, ..Descriptor::IDENTITY },
            Axis::Y => Descriptor { flip_y: true, ..Descriptor::IDENTITY },
        };
        Self::from_descriptor(grid, d)
    }

    /// `(i, j) ↦ (j, i)`.
    pub fn swap_axes(grid: TorusGrid) -> Self {
        Self::from_descriptor(grid, Descriptor { swap: true, ..Descriptor::IDENTITY })
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn descriptor(&self) -> Option<Descriptor> {
        self.descriptor
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p)
    }

    /// Maps a flat site index.
    pub fn apply_index(&self, index: usize) -> usize {
        self.perm[index]
    }

    /// The isometry `self ∘ other`: applying it to a signal acts by `self` first.
    pub fn compose(&self, other: &GridIsometry) -> Result<GridIsometry> {
        self.grid.ensure_same(&other.grid)?;
        let perm: Vec<usize> = other.perm.iter().map(|&s| self.perm[s]).collect();
        let descriptor = match (self.descriptor, other.descriptor) {
            (Some(a), Some(b)) => Some(a.compose(&b, self.grid.n())),
            _ => None,
        };
        Ok(GridIsometry { grid: self.grid, perm: perm.into(), descriptor })
    }

    pub fn inverse(&self) -> GridIsometry {
        let mut perm = vec![0; self.perm.len()];
        for (s, &p) in self.perm.iter().enumerate() {
            perm[p] = s;
        }
        GridIsometry {
            grid: self.grid,
            perm: perm.into(),
            descriptor: self.descriptor.map(|d| d.inverse(self.grid.n())),
        }
    }

    pub fn to_json_repr(&self) -> IsometryJson {
        match self.descriptor {
            Some(d) => IsometryJson::Generator {
                n: self.grid.n(),
                dx: d.dx,
                dy: d.dy,
                flip_x: d.flip_x,
                flip_y: d.flip_y,
                swap: d.swap,
            },
            None => IsometryJson::Permutation { n: self.grid.n(), perm: self.perm.to_vec() },
        }
    }

    pub fn from_json_repr(repr: IsometryJson) -> Result<Self> {
        match repr {
            IsometryJson::Generator { n, dx, dy, flip_x, flip_y, swap } => {
                Ok(Self::from_descriptor(TorusGrid::new(n)?, Descriptor { dx, dy, flip_x, flip_y, swap }))
            }
            IsometryJson::Permutation { n, perm } => Self::from_perm(TorusGrid::new(n)?, perm),
        }
    }

    /// Short human-readable label, used for table headers.
    pub fn label(&self) -> String {
        match self.descriptor {
            Some(d) => format!(
                "t{}_{}{}{}{}",
                d.dx,
                d.dy,
                if d.swap { "s" } else { "" },
                if d.flip_x { "fx" } else { "" },
                if d.flip_y { "fy" } else { "" }
            ),
            None => "perm".to_string(),
        }
    }
}

/// JSON form of a [`GridIsometry`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IsometryJson {
    Generator { n: usize, dx: usize, dy: usize, flip_x: bool, flip_y: bool, swap: bool },
    Permutation { n: usize, perm: Vec<usize> },
}

/// `φ ∘ g`: the value at site `s` is `φ(g(s))`.
pub fn act(phi: &Signal, g: &GridIsometry) -> Result<Signal> {
    phi.grid().ensure_same(&g.grid)?;
    let values = g.perm.iter().map(|&p| phi.at_index(p)).collect();
    Ok(Signal::from_raw(phi.grid(), values))
}

/// All eight point-group descriptors, identity first.
pub fn point_group() -> Vec<Descriptor> {
    let mut out = Vec::with_capacity(8);
    for swap in [false, true] {
        for flip_x in [false, true] {
            for flip_y in [false, true] {
                out.push(Descriptor { dx: 0, dy: 0, flip_x, flip_y, swap });
            }
        }
    }
    out
}

/// Every translation composed with every point-group symmetry, deduplicated
/// by permutation. The identity comes first.
pub fn enumerate_group(grid: TorusGrid, budget: usize) -> Result<Vec<GridIsometry>> {
    let n = grid.n();
    let needed = 8 * n * n;
    if needed > budget {
        return Err(GeneoError::GroupBudget { needed, budget });
    }
    let mut seen: HashSet<Arc<[usize]>> = HashSet::with_capacity(needed);
    let mut out = Vec::with_capacity(needed);
    for base in point_group() {
        for dx in 0..n {
            for dy in 0..n {
                let g = GridIsometry::from_descriptor(grid, Descriptor { dx, dy, ..base });
                if seen.insert(g.perm.clone()) {
                    out.push(g);
                }
            }
        }
    }
    Ok(out)
}

/// All `n²` translations.
pub fn translations(grid: TorusGrid) -> Vec<GridIsometry> {
    let n = grid.n() as i64;
    (0..n)
        .flat_map(|dx| (0..n).map(move |dy| (dx, dy)))
        .map(|(dx, dy)| GridIsometry::translation(grid, dx, dy))
        .collect()
}

/// A uniformly random generator-built element.
pub fn random_element<R: Rng + ?Sized>(grid: TorusGrid, rng: &mut R) -> GridIsometry {
    let n = grid.n();
    GridIsometry::from_descriptor(
        grid,
        Descriptor {
            dx: rng.random_range(0..n),
            dy: rng.random_range(0..n),
            flip_x: rng.random(),
            flip_y: rng.random(),
            swap: rng.random(),
        },
    )
}

/// The smallest G-invariant space containing `space`: every signal is
/// replaced by its orbit `{φ ∘ g}`, each orbit member carrying `w / |G|`.
///
/// Orbit members are kept as a multiset so the density is invariant under
/// the group even when orbits overlap.
pub fn orbit_closure(space: &WeightedSignalSpace, group: &[GridIsometry]) -> Result<WeightedSignalSpace> {
    if group.is_empty() {
        return Err(GeneoError::Empty("group element list"));
    }
    let mut signals = Vec::with_capacity(space.len() * group.len());
    let mut weights = Vec::with_capacity(space.len() * group.len());
    let share = 1.0 / group.len() as f64;
    for (phi, w) in space.iter() {
        for g in group {
            signals.push(act(phi, g)?);
            weights.push(w * share);
        }
    }
    WeightedSignalSpace::new(signals, weights)
}
