use crate::error::{Error, Result};
use crate::geometry::DomainBox;

/// Tensor-product grid, stored row-major with the first axis slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub axes: Vec<Vec<f64>>,
    /// Multi-index of the node nearest to the requested base point.
    pub base_index: Vec<usize>,
    pub requested_base: Vec<f64>,
}

impl Grid {
    /// Uniform nodes on the box; `base` is snapped to the nearest node.
    pub fn uniform(domain: &DomainBox, nodes: &[usize], base: &[f64]) -> Result<Grid> {
        let n = domain.dim();
        if nodes.len() != n {
            return Err(Error::Config(format!("grid needs {n} node counts, got {}", nodes.len())));
        }
        if let Some(a) = nodes.iter().position(|&c| c < 2) {
            return Err(Error::Config(format!("grid axis {} needs at least 2 nodes", a + 1)));
        }
        let axes: Vec<Vec<f64>> = (0..n)
            .map(|a| {
                let (lo, hi) = (domain.lower[a], domain.upper[a]);
                let m = nodes[a];
                (0..m)
                    .map(|k| if k + 1 == m { hi } else { lo + (hi - lo) * k as f64 / (m - 1) as f64 })
                    .collect()
            })
            .collect();
        // nearest node; a base midway between two nodes goes to the lower one
        // whatever the rounding of the node coordinates
        let base_index = (0..n)
            .map(|a| {
                let ax = &axes[a];
                let slack = 1e-9 * (ax[ax.len() - 1] - ax[0]) / (ax.len() - 1) as f64;
                let mut best = 0;
                for i in 1..ax.len() {
                    if (ax[i] - base[a]).abs() < (ax[best] - base[a]).abs() - slack {
                        best = i;
                    }
                }
                best
            })
            .collect();
        Ok(Grid {
            axes,
            base_index,
            requested_base: base.to_vec(),
        })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.len()).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.axes[axis + 1..].iter().map(|a| a.len()).product()
    }

    pub fn flat(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.axes).fold(0, |acc, (i, a)| acc * a.len() + i)
    }

    pub fn multi(&self, mut flat: usize) -> Vec<usize> {
        let mut m = vec![0; self.dim()];
        for a in (0..self.dim()).rev() {
            let len = self.axes[a].len();
            m[a] = flat % len;
            flat /= len;
        }
        m
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi(flat).iter().zip(&self.axes).map(|(i, a)| a[*i]).collect()
    }

    pub fn base_flat(&self) -> usize {
        self.flat(&self.base_index)
    }

    pub fn base_point(&self) -> Vec<f64> {
        self.point(self.base_flat())
    }

    pub fn lower(&self) -> Vec<f64> {
        self.axes.iter().map(|a| a[0]).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.axes.iter().map(|a| a[a.len() - 1]).collect()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        let a = &self.axes[axis];
        (a[a.len() - 1] - a[0]) / (a.len() - 1) as f64
    }

    /// Flat indices of the nodes on the line through `through` along `axis`.
    pub fn line(&self, through: usize, axis: usize) -> Vec<usize> {
        let m = self.multi(through);
        let start = through - m[axis] * self.stride(axis);
        (0..self.axes[axis].len()).map(|k| start + k * self.stride(axis)).collect()
    }

    /// Grid with every axis refined so the spacing halves.
    pub fn refined(&self) -> Grid {
        let axes: Vec<Vec<f64>> = self
            .axes
            .iter()
            .map(|a| {
                let mut out = Vec::with_capacity(2 * a.len() - 1);
                for k in 0..a.len() - 1 {
                    out.push(a[k]);
                    out.push(0.5 * (a[k] + a[k + 1]));
                }
                out.push(a[a.len() - 1]);
                out
            })
            .collect();
        Grid {
            axes,
            base_index: self.base_index.iter().map(|i| 2 * i).collect(),
            requested_base: self.requested_base.clone(),
        }
    }
}

/// Weights of the four-point Lagrange interpolant on the stencil starting at
/// `start` (clamped into the axis) for position `x`.
pub fn cubic_stencil(axis: &[f64], x: f64) -> (usize, Vec<f64>) {
    let m = axis.len();
    if m < 4 {
        // linear on short axes
        let k = locate(axis, x).min(m - 2);
        let t = (x - axis[k]) / (axis[k + 1] - axis[k]);
        return (k, vec![1.0 - t, t]);
    }
    let k = locate(axis, x);
    let start = k.saturating_sub(1).min(m - 4);
    let xs = &axis[start..start + 4];
    let w = (0..4)
        .map(|i| {
            (0..4)
                .filter(|&j| j != i)
                .fold(1.0, |acc, j| acc * (x - xs[j]) / (xs[i] - xs[j]))
        })
        .collect();
    (start, w)
}

/// Index `k` with `axis[k] <= x < axis[k+1]`, clamped to the valid cells.
fn locate(axis: &[f64], x: f64) -> usize {
    let m = axis.len();
    match axis.binary_search_by(|v| v.total_cmp(&x)) {
        Ok(i) => i.min(m - 2),
        Err(i) => i.saturating_sub(1).min(m - 2),
    }
}

/// Interpolates along a line of values; equal stencil values are returned
/// unchanged so constant data stays exact.
pub fn interp_line(axis: &[f64], values: &[f64], x: f64) -> f64 {
    let (start, w) = cubic_stencil(axis, x);
    let vals = &values[start..start + w.len()];
    if vals.iter().all(|v| *v == vals[0]) {
        return vals[0];
    }
    w.iter().zip(vals).map(|(a, b)| a * b).sum()
}

/// Tensor-product cubic interpolation of a grid field at `x`.
pub fn interp_grid(grid: &Grid, values: &[f64], x: &[f64]) -> f64 {
    let n = grid.dim();
    let stencils: Vec<(usize, Vec<f64>)> = (0..n).map(|a| cubic_stencil(&grid.axes[a], x[a])).collect();
    let sizes: Vec<usize> = stencils.iter().map(|s| s.1.len()).collect();
    let total: usize = sizes.iter().product();
    let mut acc = 0.0;
    let mut first = None;
    let mut all_equal = true;
    let mut idx = vec![0usize; n];
    for _ in 0..total {
        let mut w = 1.0;
        let mut flat = 0;
        for a in 0..n {
            w *= stencils[a].1[idx[a]];
            flat = flat * grid.axes[a].len() + stencils[a].0 + idx[a];
        }
        let v = values[flat];
        match first {
            None => first = Some(v),
            Some(f) if f != v => all_equal = false,
            _ => {}
        }
        acc += w * v;
        for a in (0..n).rev() {
            idx[a] += 1;
            if idx[a] < sizes[a] {
                break;
            }
            idx[a] = 0;
        }
    }
    if all_equal {
        first.unwrap_or(acc)
    } else {
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_grid(nodes: &[usize]) -> Grid {
        let n = nodes.len();
        Grid::uniform(&DomainBox::new(vec![0.0; n], vec![1.0; n]).unwrap(), nodes, &vec![0.5; n]).unwrap()
    }

    #[test]
    fn indexing_round_trips() {
        let g = unit_grid(&[3, 4, 5]);
        assert_eq!(g.len(), 60);
        for f in 0..g.len() {
            assert_eq!(g.flat(&g.multi(f)), f);
        }
        assert_eq!(g.stride(0), 20);
        assert_eq!(g.stride(2), 1);
        assert_eq!(g.base_index, vec![1, 1, 2]);
        let line = g.line(g.flat(&[2, 1, 3]), 1);
        assert_eq!(line.len(), 4);
        assert!(line.iter().all(|&f| g.multi(f)[0] == 2 && g.multi(f)[2] == 3));
    }

    #[test]
    fn rejects_single_node_axes() {
        let b = DomainBox::new(vec![0.0], vec![1.0]).unwrap();
        assert!(Grid::uniform(&b, &[1], &[0.5]).is_err());
    }

    #[test]
    fn refined_grid_keeps_nodes() {
        let g = unit_grid(&[5, 3]);
        let r = g.refined();
        assert_eq!(r.shape(), vec![9, 5]);
        assert_eq!(r.base_point(), g.base_point());
    }

    #[test]
    fn cubic_interpolation_is_exact_for_cubics() {
        let g = unit_grid(&[7, 6]);
        let f = |x: &[f64]| x[0].powi(3) - 2.0 * x[0] * x[1] * x[1] + x[1].powi(3);
        let vals: Vec<f64> = (0..g.len()).map(|i| f(&g.point(i))).collect();
        for x in [[0.13, 0.77], [0.99, 0.01], [0.5, 0.5]] {
            assert!((interp_grid(&g, &vals, &x) - f(&x)).abs() < 1e-12);
        }
        let line: Vec<f64> = g.axes[0].iter().map(|x| x * x * x).collect();
        assert!((interp_line(&g.axes[0], &line, 0.41) - 0.41_f64.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn constant_data_interpolates_exactly() {
        let g = unit_grid(&[9]);
        let vals = vec![0.1; 9];
        assert_eq!(interp_line(&g.axes[0], &vals, 0.3333), 0.1);
        assert_eq!(interp_grid(&g, &vals, &[0.71]), 0.1);
    }
}
