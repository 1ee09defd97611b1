use serde::Serialize;

use crate::geometry::{DeterminacyTriangle, Point};

/// Relative slack used when classifying nodes against margins and when
/// snapping interpolation weights to grid lines.
pub(crate) const SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeMask {
    /// Value guaranteed.
    Interior,
    /// Inside the triangle but closer to a lateral edge than the guaranteed
    /// margin; carries a value only when its characteristics stayed inside
    /// the source mask.
    BoundaryLayer,
    Outside,
}

impl NodeMask {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeMask::Interior => "interior",
            NodeMask::BoundaryLayer => "boundary",
            NodeMask::Outside => "outside",
        }
    }
}

/// Uniform Cartesian grid covering the bounding box of a determinacy triangle.
/// Node `(i, j)` sits at `(x1_at(i), j h)`; the endpoint `a` of the initial
/// segment is always a node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub h: f64,
    /// x1 of the node with index `a_index`.
    pub a: f64,
    pub a_index: usize,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn covering(region: &DeterminacyTriangle, h: f64) -> GridSpec {
        let (lo, hi) = region.x1_range();
        let a = region.gamma0.a;
        let a_index = ((a - lo) / h - SNAP).ceil().max(0.0) as usize;
        let right = ((hi - a) / h + SNAP).floor().max(0.0) as usize;
        let ny = (region.height() / h + SNAP).floor() as usize + 1;
        GridSpec {
            h,
            a,
            a_index,
            nx: a_index + right + 1,
            ny,
        }
    }

    pub fn x1_at(&self, i: usize) -> f64 {
        self.a + (i as f64 - self.a_index as f64) * self.h
    }

    pub fn x2_at(&self, j: usize) -> f64 {
        j as f64 * self.h
    }

    pub fn point(&self, i: usize, j: usize) -> Point {
        [self.x1_at(i), self.x2_at(j)]
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Fractional grid coordinates of a point.
    fn coords(&self, p: Point) -> (f64, f64) {
        ((p[0] - self.a) / self.h + self.a_index as f64, p[1] / self.h)
    }
}

/// Masked grid of values: a stage field of the cascade or the solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionGrid {
    pub spec: GridSpec,
    /// Nodes at least this far (max norm) from both lateral edges are
    /// [`NodeMask::Interior`].
    pub interior_margin: f64,
    pub values: Vec<Option<f64>>,
    pub mask: Vec<NodeMask>,
}

impl SolutionGrid {
    pub(crate) fn classify(
        region: &DeterminacyTriangle,
        spec: GridSpec,
        interior_margin: f64,
    ) -> Vec<NodeMask> {
        let mut mask = Vec::with_capacity(spec.len());
        for j in 0..spec.ny {
            for i in 0..spec.nx {
                let p = spec.point(i, j);
                let m = region.lateral_margin(p);
                let slack = SNAP * spec.h;
                mask.push(if m >= interior_margin - slack {
                    NodeMask::Interior
                } else if m >= -slack {
                    NodeMask::BoundaryLayer
                } else {
                    NodeMask::Outside
                });
            }
        }
        mask
    }

    pub fn h(&self) -> f64 {
        self.spec.h
    }

    pub fn value(&self, i: usize, j: usize) -> Option<f64> {
        self.values[self.spec.index(i, j)]
    }

    pub fn mask_at(&self, i: usize, j: usize) -> NodeMask {
        self.mask[self.spec.index(i, j)]
    }

    /// `(i, j, point, value)` for every interior node.
    pub fn interior_nodes(&self) -> impl Iterator<Item = (usize, usize, Point, f64)> + '_ {
        (0..self.spec.ny).flat_map(move |j| {
            (0..self.spec.nx).filter_map(move |i| {
                let k = self.spec.index(i, j);
                match (self.mask[k], self.values[k]) {
                    (NodeMask::Interior, Some(v)) => Some((i, j, self.spec.point(i, j), v)),
                    _ => None,
                }
            })
        })
    }

    pub fn interior_count(&self) -> usize {
        self.mask.iter().filter(|m| **m == NodeMask::Interior).count()
    }

    /// Bilinear interpolation. Corners with zero weight are not consulted, so
    /// points on grid lines only need the nodes of that line. `None` when a
    /// needed corner is off the grid or has no value.
    pub fn interpolate(&self, p: Point) -> Option<f64> {
        let (u, v) = self.spec.coords(p);
        let (i0, fx) = split(u)?;
        let (j0, fy) = split(v)?;
        let mut acc = 0.0;
        for (di, wx) in [(0usize, 1.0 - fx), (1, fx)] {
            if wx == 0.0 {
                continue;
            }
            for (dj, wy) in [(0usize, 1.0 - fy), (1, fy)] {
                if wy == 0.0 {
                    continue;
                }
                let (i, j) = (i0 + di, j0 + dj);
                if i >= self.spec.nx || j >= self.spec.ny {
                    return None;
                }
                acc += wx * wy * self.values[self.spec.index(i, j)]?;
            }
        }
        Some(acc)
    }
}

/// Integer cell index and fraction, snapping fractions within `SNAP` of a
/// grid line onto it.
fn split(t: f64) -> Option<(usize, f64)> {
    let r = t.round();
    if (t - r).abs() <= SNAP {
        if r < 0.0 {
            return None;
        }
        return Some((r as usize, 0.0));
    }
    let f = t.floor();
    if f < 0.0 {
        return None;
    }
    Some((f as usize, t - f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{determinacy_region, Gamma0};
    use crate::symbol::{build_symbol, SymbolCoefficients};

    fn triangle() -> DeterminacyTriangle {
        let s = build_symbol(SymbolCoefficients::new([1.0, 0.0, -5.0, 0.0, 4.0]).unwrap()).unwrap();
        determinacy_region(&s, Gamma0::new(0.0, 1.0).unwrap())
    }

    #[test]
    fn grid_covers_triangle_with_a_and_b_as_nodes() {
        let spec = GridSpec::covering(&triangle(), 0.1);
        assert_eq!(spec.a_index, 0);
        assert_eq!(spec.nx, 11);
        assert_eq!(spec.ny, 6);
        assert_eq!(spec.x1_at(10), 1.0);
    }

    #[test]
    fn bilinear_reproduces_bilinear_fields() {
        let t = triangle();
        let spec = GridSpec::covering(&t, 0.1);
        let mask = SolutionGrid::classify(&t, spec, 0.0);
        let mut values = Vec::new();
        for j in 0..spec.ny {
            for i in 0..spec.nx {
                let [x, y] = spec.point(i, j);
                values.push(Some(1.0 + 2.0 * x - y + 3.0 * x * y));
            }
        }
        let g = SolutionGrid {
            spec,
            interior_margin: 0.0,
            values,
            mask,
        };
        for p in [[0.33, 0.21], [0.5, 0.4], [0.7, 0.0], [0.1, 0.1]] {
            let want = 1.0 + 2.0 * p[0] - p[1] + 3.0 * p[0] * p[1];
            assert!((g.interpolate(p).unwrap() - want).abs() < 1e-14);
        }
        assert_eq!(g.interpolate([-0.05, 0.1]), None);
    }

    #[test]
    fn mask_classes() {
        let t = triangle();
        let spec = GridSpec::covering(&t, 0.1);
        let mask = SolutionGrid::classify(&t, spec, 0.2);
        assert_eq!(mask[spec.index(5, 1)], NodeMask::Interior);
        assert_eq!(mask[spec.index(1, 1)], NodeMask::BoundaryLayer);
        assert_eq!(mask[spec.index(0, 1)], NodeMask::Outside);
    }
}
