//! Classical RK4 and the axis sweeps built on it.

use super::grid::Grid;
use crate::error::{Error, Result};
use rayon::prelude::*;

/// One RK4 step of `y' = f(s, y)` from `s` to `end`. The last stage is
/// evaluated at `end` exactly, so steps finishing on a face stay on it.
pub fn rk4_step<F>(f: &mut F, s: f64, end: f64, y: &mut [f64]) -> Result<()>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let h = end - s;
    let m = y.len();
    let mut k1 = vec![0.0; m];
    let mut k2 = vec![0.0; m];
    let mut k3 = vec![0.0; m];
    let mut k4 = vec![0.0; m];
    let mut tmp = vec![0.0; m];
    f(s, y, &mut k1)?;
    for i in 0..m {
        tmp[i] = y[i] + 0.5 * h * k1[i];
    }
    f(s + 0.5 * h, &tmp, &mut k2)?;
    for i in 0..m {
        tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    f(s + 0.5 * h, &tmp, &mut k3)?;
    for i in 0..m {
        tmp[i] = y[i] + h * k3[i];
    }
    f(end, &tmp, &mut k4)?;
    for i in 0..m {
        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(())
}

/// Node states stored contiguously, `width` values per node, plus a mask of
/// the nodes already reached.
#[derive(Clone, Debug)]
pub struct NodeStates {
    pub width: usize,
    pub values: Vec<f64>,
    pub filled: Vec<bool>,
}

impl NodeStates {
    pub fn new(nodes: usize, width: usize) -> NodeStates {
        NodeStates {
            width,
            values: vec![f64::NAN; nodes * width],
            filled: vec![false; nodes],
        }
    }

    pub fn get(&self, node: usize) -> &[f64] {
        &self.values[node * self.width..(node + 1) * self.width]
    }

    pub fn set(&mut self, node: usize, v: &[f64]) {
        self.values[node * self.width..(node + 1) * self.width].copy_from_slice(v);
        self.filled[node] = true;
    }

    /// Values of component `c` at every node.
    pub fn component(&self, c: usize) -> Vec<f64> {
        self.values.iter().skip(c).step_by(self.width).copied().collect()
    }
}

/// Right-hand side of a sweep: `rhs(source, x, y, dy)` gives `dy/dx^axis` at
/// the point `x` on the line through the node `source`.
pub trait SweepRhs: Sync {
    fn eval(&self, source: usize, x: &[f64], y: &[f64], dy: &mut [f64]) -> Result<()>;
}

impl<F> SweepRhs for F
where
    F: Fn(usize, &[f64], &[f64], &mut [f64]) -> Result<()> + Sync,
{
    fn eval(&self, source: usize, x: &[f64], y: &[f64], dy: &mut [f64]) -> Result<()> {
        self(source, x, y, dy)
    }
}

/// Integrates along `axis` from every filled node to both ends of its line.
/// All filled nodes must share their index along `axis`.
pub fn sweep_axis<R: SweepRhs>(grid: &Grid, states: &mut NodeStates, axis: usize, substeps: usize, rhs: &R) -> Result<()> {
    let sources: Vec<usize> = (0..grid.len()).filter(|&f| states.filled[f]).collect();
    let Some(&first) = sources.first() else {
        return Err(Error::Integration("sweep started without seeded nodes".into()));
    };
    let seed_index = grid.multi(first)[axis];
    if sources.iter().any(|&s| grid.multi(s)[axis] != seed_index) {
        return Err(Error::Integration(format!("seeded nodes are not aligned across axis {}", axis + 1)));
    }
    let lines: Vec<(usize, Vec<Vec<f64>>)> = sources
        .par_iter()
        .map(|&s| integrate_line(grid, s, axis, states.get(s), substeps, rhs).map(|v| (s, v)))
        .collect::<Result<_>>()?;
    for (s, vals) in lines {
        for (node, v) in grid.line(s, axis).into_iter().zip(vals) {
            states.set(node, &v);
        }
    }
    Ok(())
}

/// States at every node of the line through `source` along `axis`.
pub fn integrate_line<R: SweepRhs>(
    grid: &Grid,
    source: usize,
    axis: usize,
    y0: &[f64],
    substeps: usize,
    rhs: &R,
) -> Result<Vec<Vec<f64>>> {
    let coords = &grid.axes[axis];
    let start = grid.multi(source)[axis];
    let mut x = grid.point(source);
    let mut out = vec![Vec::new(); coords.len()];
    out[start] = y0.to_vec();
    let f = |s: f64, y: &[f64], dy: &mut [f64], x: &mut Vec<f64>| {
        x[axis] = s;
        rhs.eval(source, x, y, dy)
    };
    for dir in [1isize, -1] {
        let mut y = y0.to_vec();
        let mut k = start as isize;
        loop {
            let next = k + dir;
            if next < 0 || next >= coords.len() as isize {
                break;
            }
            let (a, b) = (coords[k as usize], coords[next as usize]);
            let h = (b - a) / substeps as f64;
            for s in 0..substeps {
                let s0 = a + h * s as f64;
                let s1 = if s + 1 == substeps { b } else { a + h * (s + 1) as f64 };
                rk4_step(&mut |s, y, dy| f(s, y, dy, &mut x), s0, s1, &mut y).map_err(|e| {
                    let mut at = grid.point(source);
                    at[axis] = s0;
                    Error::Integration(format!("{e} (near {})", format_point(&at)))
                })?;
            }
            if y.iter().any(|v| !v.is_finite()) {
                let mut at = grid.point(source);
                at[axis] = b;
                return Err(Error::Integration(format!("non-finite state at {}", format_point(&at))));
            }
            out[next as usize] = y.clone();
            k = next;
        }
    }
    Ok(out)
}

pub fn format_point(x: &[f64]) -> String {
    let parts: Vec<String> = x.iter().map(|v| format!("{v:.6}")).collect();
    format!("({})", parts.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainBox;

    #[test]
    fn rk4_matches_exponential() {
        let mut y = vec![1.0];
        let h = 0.1;
        for k in 0..10 {
            rk4_step(&mut |_, y: &[f64], dy: &mut [f64]| {
                dy[0] = y[0];
                Ok(())
            }, k as f64 * h, (k + 1) as f64 * h, &mut y)
            .unwrap();
        }
        assert!((y[0] - 1f64.exp()).abs() < 1e-5);
    }

    #[test]
    fn sweeps_fill_the_grid() {
        // dy/dx1 = x2, dy/dx2 = x1 integrates to y = x1 x2 + const
        let b = DomainBox::new(vec![0.0, 0.0], vec![1.0, 2.0]).unwrap();
        let g = Grid::uniform(&b, &[5, 9], &[0.5, 1.0]).unwrap();
        let mut st = NodeStates::new(g.len(), 1);
        st.set(g.base_flat(), &[0.5]);
        for axis in [0, 1] {
            let rhs = move |_: usize, x: &[f64], _: &[f64], dy: &mut [f64]| {
                dy[0] = x[1 - axis];
                Ok(())
            };
            sweep_axis(&g, &mut st, axis, 2, &rhs).unwrap();
        }
        assert!(st.filled.iter().all(|f| *f));
        for node in 0..g.len() {
            let p = g.point(node);
            assert!((st.get(node)[0] - p[0] * p[1]).abs() < 1e-12);
        }
    }
}
