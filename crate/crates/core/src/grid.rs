//! Cell-centered grids on `(-L, L)^n`, regions, boundary parametrizations and
//! the boundary-collision volume.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform cell-centered grid with `points_per_axis` cells per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    half_width: f64,
    points_per_axis: usize,
    spacing: f64,
    axis: Vec<f64>,
}

impl Grid {
    pub fn new(dim: usize, half_width: f64, points_per_axis: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::invalid(format!("half_width must be positive, got {half_width}")));
        }
        if points_per_axis < 2 {
            return Err(Error::invalid(format!(
                "points_per_axis must be at least 2, got {points_per_axis}"
            )));
        }
        let spacing = 2.0 * half_width / points_per_axis as f64;
        let axis = (0..points_per_axis)
            .map(|i| -half_width + (i as f64 + 0.5) * spacing)
            .collect();
        Ok(Self {
            dim,
            half_width,
            points_per_axis,
            spacing,
            axis,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Quadrature weight `h^n` attached to every node.
    pub fn weight(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Node coordinates along one axis.
    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    /// Coordinates of node `k`; in 2D nodes are ordered `k = i0 * M + i1`.
    pub fn node(&self, k: usize) -> [f64; 2] {
        match self.dim {
            1 => [self.axis[k], 0.0],
            _ => {
                let m = self.points_per_axis;
                [self.axis[k / m], self.axis[k % m]]
            }
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        (0..self.len()).map(move |k| self.node(k))
    }

    /// Indices of the cells touching the box walls.
    pub fn wall_indices(&self) -> Vec<usize> {
        let m = self.points_per_axis;
        match self.dim {
            1 => vec![0, m - 1],
            _ => (0..self.len())
                .filter(|&k| {
                    let (i, j) = (k / m, k % m);
                    i == 0 || j == 0 || i == m - 1 || j == m - 1
                })
                .collect(),
        }
    }

    /// Stable fingerprint of the grid geometry.
    pub fn fingerprint(&self) -> u64 {
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        for word in [
            self.dim as u64,
            self.points_per_axis as u64,
            self.half_width.to_bits(),
        ] {
            for b in word.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }
}

/// Sorted set of node indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Mask(Vec<usize>);

impl Mask {
    pub fn from_indices(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Self(indices)
    }

    pub fn full(len: usize) -> Self {
        Self((0..len).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, k: usize) -> bool {
        self.0.binary_search(&k).is_ok()
    }

    pub fn is_subset(&self, other: &Mask) -> bool {
        self.0.iter().all(|&k| other.contains(k))
    }

    pub fn intersection(&self, other: &Mask) -> Mask {
        Mask(self.0.iter().copied().filter(|&k| other.contains(k)).collect())
    }

    /// Complement within `0..len`.
    pub fn complement(&self, len: usize) -> Mask {
        Mask((0..len).filter(|&k| !self.contains(k)).collect())
    }

    /// Indicator vector of length `len`.
    pub fn indicator(&self, len: usize) -> Vec<f64> {
        let mut v = vec![0.0; len];
        for &k in &self.0 {
            v[k] = 1.0;
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskWarning {
    Empty,
}

/// Output of [`region_mask`].
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMask {
    pub mask: Mask,
    pub warning: Option<MaskWarning>,
}

/// Bounded open region in one or two dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Region {
    Interval { a: f64, b: f64 },
    Rectangle { min: [f64; 2], max: [f64; 2] },
    Disk { center: [f64; 2], radius: f64 },
    Annulus { center: [f64; 2], inner: f64, outer: f64 },
    Union { first: Box<Region>, second: Box<Region> },
}

/// One smooth piece of a 2D boundary, parametrized over `t in [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryPiece {
    Segment { from: [f64; 2], to: [f64; 2] },
    Circle { center: [f64; 2], radius: f64 },
}

impl BoundaryPiece {
    /// Point at parameter `t` and the speed `|d point / dt|`.
    pub fn at(&self, t: f64) -> ([f64; 2], f64) {
        match *self {
            BoundaryPiece::Segment { from, to } => {
                let p = [from[0] + t * (to[0] - from[0]), from[1] + t * (to[1] - from[1])];
                (p, (to[0] - from[0]).hypot(to[1] - from[1]))
            }
            BoundaryPiece::Circle { center, radius } => {
                let a = 2.0 * PI * t;
                (
                    [center[0] + radius * a.cos(), center[1] + radius * a.sin()],
                    2.0 * PI * radius,
                )
            }
        }
    }
}

/// Boundary of a region: endpoints in 1D, parametrized curves in 2D.
#[derive(Debug, Clone, PartialEq)]
pub enum Boundary {
    Points(Vec<f64>),
    Curves(Vec<BoundaryPiece>),
}

impl Region {
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        let r = Region::Interval { a, b };
        r.validate()?;
        Ok(r)
    }

    pub fn rectangle(min: [f64; 2], max: [f64; 2]) -> Result<Self> {
        let r = Region::Rectangle { min, max };
        r.validate()?;
        Ok(r)
    }

    pub fn disk(center: [f64; 2], radius: f64) -> Result<Self> {
        let r = Region::Disk { center, radius };
        r.validate()?;
        Ok(r)
    }

    pub fn annulus(center: [f64; 2], inner: f64, outer: f64) -> Result<Self> {
        let r = Region::Annulus {
            center,
            inner,
            outer,
        };
        r.validate()?;
        Ok(r)
    }

    /// Union of two regions with disjoint bounding boxes.
    pub fn union(first: Region, second: Region) -> Result<Self> {
        let r = Region::Union {
            first: Box::new(first),
            second: Box::new(second),
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Region::Interval { a, b } => a < b,
            Region::Rectangle { min, max } => min[0] < max[0] && min[1] < max[1],
            Region::Disk { radius, .. } => *radius > 0.0,
            Region::Annulus { inner, outer, .. } => *inner > 0.0 && inner < outer,
            Region::Union { first, second } => {
                first.validate()?;
                second.validate()?;
                if first.dim() != second.dim() {
                    return Err(Error::invalid("union members differ in dimension"));
                }
                let (lo1, hi1) = first.bounding_box();
                let (lo2, hi2) = second.bounding_box();
                let overlap =
                    (0..first.dim()).all(|i| lo1[i] < hi2[i] && lo2[i] < hi1[i]);
                !overlap
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("degenerate region {self:?}")))
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Region::Interval { .. } => 1,
            Region::Union { first, .. } => first.dim(),
            _ => 2,
        }
    }

    /// Open-set membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::Interval { a, b } => *a < x[0] && x[0] < *b,
            Region::Rectangle { min, max } => {
                min[0] < x[0] && x[0] < max[0] && min[1] < x[1] && x[1] < max[1]
            }
            Region::Disk { center, radius } => {
                (x[0] - center[0]).hypot(x[1] - center[1]) < *radius
            }
            Region::Annulus {
                center,
                inner,
                outer,
            } => {
                let r = (x[0] - center[0]).hypot(x[1] - center[1]);
                *inner < r && r < *outer
            }
            Region::Union { first, second } => first.contains(x) || second.contains(x),
        }
    }

    /// A point guaranteed to lie inside the region.
    pub fn interior_point(&self) -> [f64; 2] {
        match self {
            Region::Interval { a, b } => [0.5 * (a + b), 0.0],
            Region::Rectangle { min, max } => [0.5 * (min[0] + max[0]), 0.5 * (min[1] + max[1])],
            Region::Disk { center, .. } => *center,
            Region::Annulus {
                center,
                inner,
                outer,
            } => [center[0] + 0.5 * (inner + outer), center[1]],
            Region::Union { first, .. } => first.interior_point(),
        }
    }

    /// Axis-aligned bounding box `(lo, hi)`; the second axis is `[0, 0]` in 1D.
    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        match self {
            Region::Interval { a, b } => ([*a, 0.0], [*b, 0.0]),
            Region::Rectangle { min, max } => (*min, *max),
            Region::Disk { center, radius }
            | Region::Annulus {
                center,
                outer: radius,
                ..
            } => (
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ),
            Region::Union { first, second } => {
                let (a0, a1) = first.bounding_box();
                let (b0, b1) = second.bounding_box();
                (
                    [a0[0].min(b0[0]), a0[1].min(b0[1])],
                    [a1[0].max(b1[0]), a1[1].max(b1[1])],
                )
            }
        }
    }

    /// Lebesgue measure of the region.
    pub fn volume(&self) -> f64 {
        match self {
            Region::Interval { a, b } => b - a,
            Region::Rectangle { min, max } => (max[0] - min[0]) * (max[1] - min[1]),
            Region::Disk { radius, .. } => PI * radius * radius,
            Region::Annulus { inner, outer, .. } => PI * (outer * outer - inner * inner),
            Region::Union { first, second } => first.volume() + second.volume(),
        }
    }

    /// Analytic `(n-1)`-dimensional Hausdorff measure of the boundary.
    pub fn boundary_measure(&self) -> f64 {
        match self {
            Region::Interval { .. } => 2.0,
            Region::Rectangle { min, max } => 2.0 * ((max[0] - min[0]) + (max[1] - min[1])),
            Region::Disk { radius, .. } => 2.0 * PI * radius,
            Region::Annulus { inner, outer, .. } => 2.0 * PI * (inner + outer),
            Region::Union { first, second } => {
                first.boundary_measure() + second.boundary_measure()
            }
        }
    }

    pub fn boundary(&self) -> Boundary {
        match self {
            Region::Interval { a, b } => Boundary::Points(vec![*a, *b]),
            Region::Rectangle { min, max } => {
                let c = [
                    [min[0], min[1]],
                    [max[0], min[1]],
                    [max[0], max[1]],
                    [min[0], max[1]],
                ];
                Boundary::Curves(
                    (0..4)
                        .map(|i| BoundaryPiece::Segment {
                            from: c[i],
                            to: c[(i + 1) % 4],
                        })
                        .collect(),
                )
            }
            Region::Disk { center, radius } => Boundary::Curves(vec![BoundaryPiece::Circle {
                center: *center,
                radius: *radius,
            }]),
            Region::Annulus {
                center,
                inner,
                outer,
            } => Boundary::Curves(vec![
                BoundaryPiece::Circle {
                    center: *center,
                    radius: *inner,
                },
                BoundaryPiece::Circle {
                    center: *center,
                    radius: *outer,
                },
            ]),
            Region::Union { first, second } => match (first.boundary(), second.boundary()) {
                (Boundary::Points(mut p), Boundary::Points(q)) => {
                    p.extend(q);
                    Boundary::Points(p)
                }
                (Boundary::Curves(mut p), Boundary::Curves(q)) => {
                    p.extend(q);
                    Boundary::Curves(p)
                }
                _ => unreachable!("union members share a dimension"),
            },
        }
    }

    /// Function `w` with `region = {w < 0}`; smooth for interval, disk and
    /// annulus, Lipschitz for rectangles and unions.
    pub fn defining_function(&self, x: &[f64]) -> f64 {
        match self {
            Region::Interval { a, b } => (x[0] - a) * (x[0] - b),
            Region::Rectangle { min, max } => (min[0] - x[0])
                .max(x[0] - max[0])
                .max(min[1] - x[1])
                .max(x[1] - max[1]),
            Region::Disk { center, radius } => {
                (x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2) - radius * radius
            }
            Region::Annulus {
                center,
                inner,
                outer,
            } => {
                let r2 = (x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2);
                (r2 - inner * inner) * (r2 - outer * outer)
            }
            Region::Union { first, second } => {
                first.defining_function(x).min(second.defining_function(x))
            }
        }
    }
}

/// Nodes whose centers lie inside `region`.
pub fn region_mask(grid: &Grid, region: &Region) -> Result<RegionMask> {
    if region.dim() != grid.dim() {
        return Err(Error::invalid(format!(
            "region is {}-dimensional but the grid is {}-dimensional",
            region.dim(),
            grid.dim()
        )));
    }
    let indices: Vec<usize> = (0..grid.len())
        .filter(|&k| region.contains(&grid.node(k)))
        .collect();
    let warning = indices.is_empty().then_some(MaskWarning::Empty);
    Ok(RegionMask {
        mask: Mask(indices),
        warning,
    })
}

/// Estimate of `∫∫ 1_Ω(x) 1_{Ω^c}(y) 1{|x - y| <= r} dx dy`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionVolume {
    pub value: f64,
    /// Monte Carlo standard error; zero for the exact 1D sum.
    pub std_error: f64,
}

/// Boundary-collision volume of `region` at the given radius.
///
/// In 1D the double sum over grid nodes is evaluated exactly. In 2D the
/// integral is estimated by Monte Carlo: `x` uniform in the bounding box of
/// the region, `y = x + radius * u` with `u` uniform in the unit disk, drawn
/// from a ChaCha stream seeded with `seed`.
pub fn boundary_collision_volume(
    grid: &Grid,
    region: &Region,
    radius: f64,
    sampler_budget: usize,
    seed: u64,
) -> Result<CollisionVolume> {
    if !(radius > 0.0) {
        return Err(Error::invalid(format!("radius must be positive, got {radius}")));
    }
    match grid.dim() {
        1 => {
            let inside = region_mask(grid, region)?.mask;
            Ok(CollisionVolume {
                value: collision_sum_1d(grid, &inside, radius),
                std_error: 0.0,
            })
        }
        _ => {
            if sampler_budget < 10_000 {
                return Err(Error::invalid(format!(
                    "Monte Carlo budget must be at least 1e4 pairs, got {sampler_budget}"
                )));
            }
            if region.dim() != 2 {
                return Err(Error::invalid("region dimension does not match the grid"));
            }
            let (lo, hi) = region.bounding_box();
            let box_area = (hi[0] - lo[0]) * (hi[1] - lo[1]);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut hits = 0usize;
            for _ in 0..sampler_budget {
                let x = [
                    rng.random_range(lo[0]..hi[0]),
                    rng.random_range(lo[1]..hi[1]),
                ];
                // uniform point in the disk of given radius
                let rho = radius * rng.random::<f64>().sqrt();
                let phi = 2.0 * PI * rng.random::<f64>();
                let y = [x[0] + rho * phi.cos(), x[1] + rho * phi.sin()];
                if region.contains(&x) && !region.contains(&y) {
                    hits += 1;
                }
            }
            let n = sampler_budget as f64;
            let p = hits as f64 / n;
            let scale = box_area * PI * radius * radius;
            Ok(CollisionVolume {
                value: scale * p,
                std_error: scale * (p * (1.0 - p) / n).sqrt(),
            })
        }
    }
}

/// `h^2 * #{(i, j) : i in inside, j not in inside, |x_i - x_j| <= r}` on a
/// 1D grid.
pub fn collision_sum_1d(grid: &Grid, inside: &Mask, radius: f64) -> f64 {
    let m = grid.points_per_axis();
    let h = grid.spacing();
    let reach = ((radius / h) * (1.0 + 1e-12)).floor() as usize;
    let flags = inside.indicator(m);
    let mut pairs = 0usize;
    for &i in inside.indices() {
        let lo = i.saturating_sub(reach);
        let hi = (i + reach).min(m - 1);
        pairs += (lo..=hi).filter(|&j| flags[j] == 0.0).count();
    }
    pairs as f64 * h * h
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn four_node_grid() {
        let g = Grid::new(1, 1.0, 4).unwrap();
        assert_eq!(g.axis(), &[-0.75, -0.25, 0.25, 0.75]);
        assert_eq!(g.spacing(), 0.5);
        let r = Region::interval(-0.5, 0.5).unwrap();
        let m = region_mask(&g, &r).unwrap();
        assert_eq!(m.mask.indices(), &[1, 2]);
        assert!(m.warning.is_none());
    }

    #[test]
    fn weights_sum_to_box_volume() {
        for (dim, l, m) in [(1, 2.5, 7), (1, 1.0, 1000), (2, 3.0, 64), (2, 0.7, 33)] {
            let g = Grid::new(dim, l, m).unwrap();
            let total = g.weight() * g.len() as f64;
            let exact = (2.0 * l).powi(dim as i32);
            assert!(((total - exact) / exact).abs() < 1e-12);
            assert!(g.nodes().all(|p| p[..dim].iter().all(|c| c.abs() < l)));
        }
        let g = Grid::new(2, 3.0, 64).unwrap();
        assert_eq!(g.len(), 4096);
        assert!((g.weight() - (6.0f64 / 64.0).powi(2)).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(matches!(Grid::new(3, 1.0, 8), Err(Error::UnsupportedDimension(3))));
        assert!(Grid::new(1, 0.0, 8).is_err());
        assert!(Grid::new(1, 1.0, 1).is_err());
    }

    #[test]
    fn disk_mask_area() {
        let g = Grid::new(2, 3.0, 64).unwrap();
        let r = Region::disk([0.0, 0.0], 1.0).unwrap();
        let m = region_mask(&g, &r).unwrap().mask;
        let area = m.len() as f64 * g.weight();
        assert!((area - PI).abs() <= 3.0 * g.spacing(), "area {area}");
    }

    #[test]
    fn empty_and_full_masks() {
        let g = Grid::new(1, 1.0, 10).unwrap();
        let empty = region_mask(&g, &Region::interval(0.01, 0.02).unwrap()).unwrap();
        assert_eq!(empty.warning, Some(MaskWarning::Empty));
        let full = region_mask(&g, &Region::interval(-1.0, 1.0).unwrap()).unwrap();
        assert_eq!(full.mask, Mask::full(10));
        assert!(region_mask(&g, &Region::disk([0.0, 0.0], 0.5).unwrap()).is_err());
    }

    #[test]
    fn interior_points_are_members() {
        let regions = [
            Region::interval(-0.3, 0.9).unwrap(),
            Region::rectangle([-1.0, 0.0], [0.5, 0.2]).unwrap(),
            Region::disk([0.2, -0.1], 0.4).unwrap(),
            Region::annulus([0.0, 0.0], 0.3, 0.6).unwrap(),
            Region::union(
                Region::disk([-1.0, 0.0], 0.3).unwrap(),
                Region::disk([1.0, 0.0], 0.3).unwrap(),
            )
            .unwrap(),
        ];
        for r in &regions {
            assert!(r.contains(&r.interior_point()), "{r:?}");
            assert!(r.boundary_measure() > 0.0);
        }
        assert!(Region::union(
            Region::disk([0.0, 0.0], 0.5).unwrap(),
            Region::disk([0.5, 0.0], 0.5).unwrap()
        )
        .is_err());
    }

    fn parametrized_length(r: &Region) -> f64 {
        let gl = crate::quad::GaussLegendre::new(16);
        match r.boundary() {
            Boundary::Curves(pieces) => pieces
                .iter()
                .map(|p| gl.composite(0.0, 1.0, 64, |t| p.at(t).1))
                .sum(),
            Boundary::Points(p) => p.len() as f64,
        }
    }

    #[test]
    fn boundary_measure_matches_parametrization() {
        for r in [
            Region::disk([0.3, 0.1], 0.7).unwrap(),
            Region::rectangle([-1.0, -0.5], [0.5, 0.25]).unwrap(),
            Region::annulus([0.0, 0.0], 0.2, 0.5).unwrap(),
            Region::interval(-0.5, 0.5).unwrap(),
        ] {
            assert!((parametrized_length(&r) - r.boundary_measure()).abs() < 1e-10);
        }
        assert!((Region::disk([0.0, 0.0], 0.6).unwrap().boundary_measure() - 1.2 * PI).abs() < 1e-15);
    }

    #[test]
    fn defining_function_gradient_nonvanishing_on_tube() {
        let regions = [
            Region::disk([0.1, 0.0], 0.6).unwrap(),
            Region::annulus([0.0, 0.0], 0.4, 0.8).unwrap(),
        ];
        let eps = 1e-6;
        for r in &regions {
            let mut sampled = 0;
            for i in 0..200 {
                for j in 0..200 {
                    let x = [-1.0 + 0.01 * i as f64, -1.0 + 0.01 * j as f64];
                    if r.defining_function(&x).abs() > 0.05 {
                        continue;
                    }
                    sampled += 1;
                    let gx = (r.defining_function(&[x[0] + eps, x[1]])
                        - r.defining_function(&[x[0] - eps, x[1]]))
                        / (2.0 * eps);
                    let gy = (r.defining_function(&[x[0], x[1] + eps])
                        - r.defining_function(&[x[0], x[1] - eps]))
                        / (2.0 * eps);
                    assert!(gx.hypot(gy) > 1e-3, "{r:?} at {x:?}");
                }
            }
            assert!(sampled > 100);
        }
        let iv = Region::interval(-0.5, 0.5).unwrap();
        for x in [-0.52, -0.5, -0.48, 0.49, 0.51] {
            let g = (iv.defining_function(&[x + 1e-6]) - iv.defining_function(&[x - 1e-6])) / 2e-6;
            assert!(g.abs() > 0.5);
        }
    }

    #[test]
    fn mask_monotone_under_inclusion() {
        let g = Grid::new(2, 1.0, 40).unwrap();
        let small = region_mask(&g, &Region::disk([0.0, 0.0], 0.4).unwrap()).unwrap().mask;
        let big = region_mask(&g, &Region::disk([0.0, 0.0], 0.7).unwrap()).unwrap().mask;
        let square = region_mask(&g, &Region::rectangle([-0.8, -0.8], [0.8, 0.8]).unwrap())
            .unwrap()
            .mask;
        assert!(small.is_subset(&big));
        assert!(big.is_subset(&square));
    }

    #[test]
    fn collision_volume_1d_is_r_squared() {
        let g = Grid::new(1, 1.0, 4000).unwrap();
        let r = Region::interval(-0.5, 0.5).unwrap();
        for radius in [0.02, 0.05, 0.1, 0.2] {
            let v = boundary_collision_volume(&g, &r, radius, 0, 0).unwrap();
            assert!(
                (v.value - radius * radius).abs() <= 2.0 * g.spacing() * radius,
                "r={radius}: {}",
                v.value
            );
        }
        let tiny = boundary_collision_volume(&g, &r, 1e-6, 0, 0).unwrap();
        assert_eq!(tiny.value, 0.0);
        assert!(boundary_collision_volume(&g, &r, 0.0, 0, 0).is_err());
    }

    #[test]
    fn collision_volume_swap_symmetry_1d() {
        let g = Grid::new(1, 1.0, 800).unwrap();
        let inside = region_mask(&g, &Region::interval(-0.3, 0.45).unwrap()).unwrap().mask;
        let outside = inside.complement(g.len());
        for radius in [0.01, 0.1, 0.25] {
            let a = collision_sum_1d(&g, &inside, radius);
            let b = collision_sum_1d(&g, &outside, radius);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn collision_volume_2d_rejects_small_budget() {
        let g = Grid::new(2, 1.0, 16).unwrap();
        let r = Region::disk([0.0, 0.0], 0.5).unwrap();
        assert!(boundary_collision_volume(&g, &r, 0.05, 9_999, 1).is_err());
        let a = boundary_collision_volume(&g, &r, 0.05, 20_000, 1).unwrap();
        let b = boundary_collision_volume(&g, &r, 0.05, 20_000, 1).unwrap();
        assert_eq!(a, b);
        assert!(a.std_error > 0.0);
    }

    #[test]
    fn collision_volume_scales_with_dimension() {
        let radii = [0.02, 0.04, 0.08, 0.16];
        let g1 = Grid::new(1, 1.0, 8000).unwrap();
        let g2 = Grid::new(2, 1.0, 16).unwrap();
        let interval = Region::interval(-0.5, 0.5).unwrap();
        let disk = Region::disk([0.0, 0.0], 0.5).unwrap();
        for (grid, region, n) in [(&g1, &interval, 1.0), (&g2, &disk, 2.0)] {
            let logs: Vec<(f64, f64)> = radii
                .iter()
                .map(|&r| {
                    let v = boundary_collision_volume(grid, region, r, 1_000_000, 7).unwrap();
                    (r.ln(), v.value.ln())
                })
                .collect();
            let (xs, ys): (Vec<f64>, Vec<f64>) = logs.into_iter().unzip();
            let fit = crate::stats::linear_fit(&xs, &ys).unwrap();
            assert!((fit.slope - (n + 1.0)).abs() < 0.2, "n={n}: {fit:?}");
        }
    }

    #[test]
    fn collision_ratio_2d_stabilizes() {
        // flat-boundary limit: each unit of boundary length contributes 2 r^3 / 3
        let g = Grid::new(2, 1.0, 16).unwrap();
        let disk = Region::disk([0.0, 0.0], 0.5).unwrap();
        let perimeter = PI;
        let ratios: Vec<(f64, f64)> = [0.16, 0.08, 0.04, 0.02]
            .iter()
            .map(|&r| {
                let v = boundary_collision_volume(&g, &disk, r, 2_000_000, 11).unwrap();
                let scale = perimeter * r * r * r;
                (v.value / scale, v.std_error / scale)
            })
            .collect();
        let (last, err) = ratios[3];
        assert!((last - 2.0 / 3.0).abs() < 4.0 * err + 0.02, "{ratios:?}");
        let spread = |w: &[(f64, f64)]| (w[0].0 - w[1].0).abs();
        assert!(spread(&ratios[2..4]) < 4.0 * (ratios[2].1 + ratios[3].1) + spread(&ratios[0..2]));
    }

    proptest! {
        #[test]
        fn nested_regions_give_nested_masks(
            cx in -0.3f64..0.3, cy in -0.3f64..0.3,
            r1 in 0.05f64..0.4, grow in 0.0f64..0.3,
            points in 8usize..48,
        ) {
            let g = Grid::new(2, 1.0, points).unwrap();
            let inner = Region::disk([cx, cy], r1).unwrap();
            let outer = Region::disk([cx, cy], r1 + grow).unwrap();
            let satellite = Region::disk([cx + r1 + 0.15, cy], 0.05).unwrap();
            let both = Region::union(inner.clone(), satellite).unwrap();
            let half = r1 + grow;
            let square = Region::rectangle([cx - half, cy - half], [cx + half, cy + half]).unwrap();
            let m = |r: &Region| region_mask(&g, r).unwrap().mask;
            prop_assert!(m(&inner).is_subset(&m(&outer)));
            prop_assert!(m(&inner).is_subset(&m(&both)));
            prop_assert!(m(&outer).is_subset(&m(&square)));
        }

        #[test]
        fn nested_intervals_give_nested_masks(
            a in -0.9f64..0.0, b in 0.0f64..0.9, da in 0.0f64..0.1, db in 0.0f64..0.1,
            points in 4usize..200,
        ) {
            let g = Grid::new(1, 1.0, points).unwrap();
            let inner = region_mask(&g, &Region::interval(a, b).unwrap()).unwrap().mask;
            let outer = region_mask(&g, &Region::interval(a - da, b + db).unwrap()).unwrap().mask;
            prop_assert!(inner.is_subset(&outer));
        }
    }
}
