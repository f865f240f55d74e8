use serde::Serialize;

use crate::error::{Error, Result};

/// Strictly increasing radial nodes starting at the origin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialGrid {
    nodes: Vec<f64>,
}

impl RadialGrid {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 nodes, got {}",
                nodes.len()
            )));
        }
        if nodes[0] != 0.0 {
            return Err(Error::InvalidGrid(format!(
                "first node must be 0, got {}",
                nodes[0]
            )));
        }
        if let Some(i) = nodes
            .windows(2)
            .position(|w| !(w[1] > w[0]) || !w[1].is_finite())
        {
            return Err(Error::InvalidGrid(format!(
                "nodes must be finite and strictly increasing (nodes {} and {}: {} then {})",
                i,
                i + 1,
                nodes[i],
                nodes[i + 1]
            )));
        }
        Ok(Self { nodes })
    }

    /// `intervals + 1` equally spaced nodes on `[0, x_max]`.
    pub fn uniform(x_max: f64, intervals: usize) -> Result<Self> {
        Self::graded(x_max, intervals, 1.0)
    }

    /// Nodes `x_j = x_max (j/N)^grading`, clustering near the origin for grading > 1.
    pub fn graded(x_max: f64, intervals: usize, grading: f64) -> Result<Self> {
        if !(x_max > 0.0 && x_max.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "x_max must be positive, got {x_max}"
            )));
        }
        if intervals == 0 {
            return Err(Error::InvalidGrid("need at least one interval".into()));
        }
        if !(grading >= 1.0 && grading.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "grading exponent must be >= 1, got {grading}"
            )));
        }
        let n = intervals as f64;
        let nodes = (0..=intervals)
            .map(|j| {
                if j == intervals {
                    x_max
                } else if grading == 1.0 {
                    x_max * j as f64 / n
                } else {
                    x_max * (j as f64 / n).powf(grading)
                }
            })
            .collect();
        Self::new(nodes)
    }

    /// Sorted union of arbitrary non-negative points, merged so that
    /// neighbours closer than `min_gap` (relative) collapse to one node.
    pub fn from_points(mut points: Vec<f64>, min_gap: f64) -> Result<Self> {
        points.retain(|x| x.is_finite() && *x >= 0.0);
        points.push(0.0);
        points.sort_by(|a, b| a.total_cmp(b));
        let mut nodes: Vec<f64> = Vec::with_capacity(points.len());
        for x in points {
            match nodes.last() {
                Some(&last) if x - last <= min_gap * x.max(1.0) => {}
                _ => nodes.push(x),
            }
        }
        Self::new(nodes)
    }

    #[inline]
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    #[inline]
    pub fn x_max(&self) -> f64 {
        *self.nodes.last().expect("grid has at least two nodes")
    }

    /// Index `k` of the cell `[x_k, x_{k+1}]` containing `x`, clamped to the grid.
    pub fn cell(&self, x: f64) -> usize {
        let k = self.nodes.partition_point(|&n| n <= x);
        k.saturating_sub(1).min(self.nodes.len() - 2)
    }

    /// Like [`cell`](Self::cell), starting the search from a previous cell.
    /// Cheap when successive queries move by a few cells.
    pub fn cell_near(&self, x: f64, hint: usize) -> usize {
        let last = self.nodes.len() - 2;
        let mut k = hint.min(last);
        for _ in 0..8 {
            if k < last && self.nodes[k + 1] <= x {
                k += 1;
            } else if k > 0 && self.nodes[k] > x {
                k -= 1;
            } else {
                return k;
            }
        }
        self.cell(x)
    }

    /// Every other node, keeping the last node. Returns the coarse grid and,
    /// for each coarse node, its index in `self`.
    pub fn coarsen(&self) -> (RadialGrid, Vec<usize>) {
        let last = self.nodes.len() - 1;
        let mut idx: Vec<usize> = (0..=last).step_by(2).collect();
        if *idx.last().unwrap() != last {
            idx.push(last);
        }
        if idx.len() < 2 {
            idx = vec![0, last];
        }
        let nodes = idx.iter().map(|&i| self.nodes[i]).collect();
        (RadialGrid { nodes }, idx)
    }

    /// Largest spacing between consecutive nodes.
    pub fn max_step(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }
}
