use std::collections::VecDeque;

use super::IndicatorKind;
use crate::geometry::SamplingGrid;
use crate::{distance, Error, Point, Result};

/// Indicator values on the probes of a sampling grid.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorField {
    pub grid: SamplingGrid,
    pub values: Vec<f64>,
    pub kind: IndicatorKind,
    /// Flat index of the largest value (first one on ties).
    pub argmax: usize,
    /// Probes that coincide with a sensor or source; their value is zero.
    pub flagged: Vec<usize>,
    pub note: String,
}

impl IndicatorField {
    pub fn new(grid: SamplingGrid, values: Vec<f64>, kind: IndicatorKind, flagged: Vec<usize>) -> Self {
        assert_eq!(grid.len(), values.len(), "one value per probe");
        let mut argmax = 0;
        for (i, v) in values.iter().enumerate() {
            if *v > values[argmax] {
                argmax = i;
            }
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let note = format!("range [{:e}, {:e}]", min, values.get(argmax).copied().unwrap_or(0.0));
        IndicatorField {
            grid,
            values,
            kind,
            argmax,
            flagged,
            note,
        }
    }

    pub fn max_value(&self) -> f64 {
        self.values[self.argmax]
    }

    pub fn argmax_point(&self) -> Point {
        self.grid.points[self.argmax]
    }

    /// Flat indices of the face- and diagonal-neighbours of `flat`.
    pub fn neighbours(&self, flat: usize, diagonal: bool) -> Vec<usize> {
        let idx = self.grid.unflatten(flat);
        let axes = idx.len();
        let mut out = Vec::new();
        let combos = 3usize.pow(axes as u32);
        for c in 0..combos {
            let mut step = vec![0i64; axes];
            let mut rest = c;
            for s in step.iter_mut() {
                *s = (rest % 3) as i64 - 1;
                rest /= 3;
            }
            let moved = step.iter().filter(|s| **s != 0).count();
            if moved == 0 || (!diagonal && moved > 1) {
                continue;
            }
            let mut n = idx.clone();
            let mut inside = true;
            for (a, s) in step.iter().enumerate() {
                let v = idx[a] as i64 + s;
                if v < 0 || v >= self.grid.counts[a] as i64 {
                    inside = false;
                    break;
                }
                n[a] = v as usize;
            }
            if inside {
                out.push(self.grid.flatten(&n));
            }
        }
        out.sort_unstable();
        out
    }

    /// Probes not exceeded by any neighbour (diagonals included), strongest
    /// first. Plateaus contribute their first probe only.
    pub fn local_maxima(&self) -> Vec<usize> {
        let mut out: Vec<usize> = (0..self.values.len())
            .filter(|&i| {
                let v = self.values[i];
                v > 0.0
                    && self.neighbours(i, true).iter().all(|&n| {
                        let w = self.values[n];
                        w < v || (w == v && n > i)
                    })
            })
            .collect();
        out.sort_by(|a, b| self.values[*b].total_cmp(&self.values[*a]).then(a.cmp(b)));
        out
    }

    /// Up to `count` strongest local maxima that are pairwise further apart
    /// than `min_separation`.
    pub fn peaks(&self, count: usize, min_separation: f64) -> Vec<usize> {
        let mut chosen: Vec<usize> = Vec::new();
        for m in self.local_maxima() {
            if chosen.len() == count {
                break;
            }
            let p = self.grid.points[m];
            if chosen
                .iter()
                .all(|c| distance(&self.grid.points[*c], &p) > min_separation)
            {
                chosen.push(m);
            }
        }
        chosen
    }

    /// Probes whose value is at least `level`.
    pub fn superlevel(&self, level: f64) -> Vec<bool> {
        self.values.iter().map(|v| *v >= level).collect()
    }

    /// Face-connected component of `mask` containing `seed`.
    pub fn component(&self, mask: &[bool], seed: usize) -> Vec<bool> {
        let mut out = vec![false; mask.len()];
        if !mask[seed] {
            return out;
        }
        let mut queue = VecDeque::from([seed]);
        out[seed] = true;
        while let Some(i) = queue.pop_front() {
            for n in self.neighbours(i, false) {
                if mask[n] && !out[n] {
                    out[n] = true;
                    queue.push_back(n);
                }
            }
        }
        out
    }

    /// `mask` together with every region it encloses, i.e. all probes not
    /// face-connected to the grid border through the complement.
    pub fn fill_holes(&self, mask: &[bool]) -> Vec<bool> {
        let mut outside = vec![false; mask.len()];
        let mut queue = VecDeque::new();
        for i in 0..mask.len() {
            let idx = self.grid.unflatten(i);
            let border = idx
                .iter()
                .zip(&self.grid.counts)
                .any(|(v, n)| *v == 0 || *v + 1 == *n);
            if border && !mask[i] {
                outside[i] = true;
                queue.push_back(i);
            }
        }
        while let Some(i) = queue.pop_front() {
            for n in self.neighbours(i, false) {
                if !mask[n] && !outside[n] {
                    outside[n] = true;
                    queue.push_back(n);
                }
            }
        }
        outside.iter().map(|o| !o).collect()
    }

    /// Unweighted centroid of the probes in `mask`.
    pub fn centroid(&self, mask: &[bool]) -> Option<Point> {
        let mut sum = [0.0; 3];
        let mut n = 0usize;
        for (p, _) in self.grid.points.iter().zip(mask).filter(|(_, m)| **m) {
            for a in 0..3 {
                sum[a] += p[a];
            }
            n += 1;
        }
        (n > 0).then(|| sum.map(|s| s / n as f64))
    }

    /// 2D field on the grid plane `axis = const` nearest to `coord`.
    pub fn slice(&self, axis: usize, coord: f64) -> Result<IndicatorField> {
        if self.grid.axes() != 3 || axis > 2 {
            return Err(Error::InvalidArgument(format!(
                "slicing needs a 3D field and an axis in 0..3 (field has {} axes, axis {axis})",
                self.grid.axes()
            )));
        }
        let plane = (0..self.grid.counts[axis])
            .min_by(|a, b| {
                let da = (self.grid.axis_value(axis, *a) - coord).abs();
                let db = (self.grid.axis_value(axis, *b) - coord).abs();
                da.total_cmp(&db)
            })
            .expect("axis has points");
        let keep: Vec<usize> = (0..3).filter(|a| *a != axis).collect();
        let mut points = Vec::new();
        let mut values = Vec::new();
        let mut flat_map = Vec::new();
        for (i, p) in self.grid.points.iter().enumerate() {
            if self.grid.unflatten(i)[axis] == plane {
                points.push(*p);
                values.push(self.values[i]);
                flat_map.push(i);
            }
        }
        let grid = SamplingGrid {
            bounds: keep.iter().map(|a| self.grid.bounds[*a]).collect(),
            counts: keep.iter().map(|a| self.grid.counts[*a]).collect(),
            points,
        };
        let flagged = self
            .flagged
            .iter()
            .filter_map(|f| flat_map.iter().position(|m| m == f))
            .collect();
        let mut out = IndicatorField::new(grid, values, self.kind, flagged);
        out.note = format!(
            "{}; slice {}={:?}",
            out.note,
            ["x", "y", "z"][axis],
            self.grid.axis_value(axis, plane)
        );
        Ok(out)
    }
}
