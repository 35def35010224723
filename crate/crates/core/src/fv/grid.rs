use serde::{Deserialize, Serialize};

use super::FvError;

pub const GHOST_WIDTH: usize = 3;
/// Smallest line length that fits a WENO5 stencil.
pub const MIN_CELLS: usize = 7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    Periodic,
    Dirichlet,
}

/// Cell averages on a uniform 1-D or 2-D grid, stored `[y][x][component]`.
/// Axis 0 is x (contiguous), axis 1 is y.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub p: usize,
    /// Cells per axis.
    pub n: Vec<usize>,
    /// Cell width per axis.
    pub h: Vec<f64>,
    pub boundary: Vec<BoundaryKind>,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn zeros(p: usize, n: Vec<usize>, h: Vec<f64>, boundary: Vec<BoundaryKind>) -> Result<Self, FvError> {
        let cells: usize = n.iter().product();
        Self::from_values(p, n, h, boundary, vec![0.0; cells * p])
    }

    pub fn from_values(
        p: usize,
        n: Vec<usize>,
        h: Vec<f64>,
        boundary: Vec<BoundaryKind>,
        values: Vec<f64>,
    ) -> Result<Self, FvError> {
        if n.is_empty() || n.len() > 2 || h.len() != n.len() || boundary.len() != n.len() {
            return Err(FvError::Shape(format!("grid needs 1 or 2 axes, got n={n:?} h={h:?}")));
        }
        if let Some(&small) = n.iter().find(|&&k| k < MIN_CELLS) {
            return Err(FvError::TooFewCells(small));
        }
        let cells: usize = n.iter().product();
        if values.len() != cells * p {
            return Err(FvError::Shape(format!("expected {} values, found {}", cells * p, values.len())));
        }
        Ok(GridField { p, n, h, boundary, values })
    }

    /// Same grid, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), self.values.len());
        GridField { values, ..self.clone() }
    }

    pub fn d(&self) -> usize {
        self.n.len()
    }

    pub fn n_cells(&self) -> usize {
        self.n.iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.iter().product()
    }

    pub fn nx(&self) -> usize {
        self.n[0]
    }

    pub fn ny(&self) -> usize {
        self.n.get(1).copied().unwrap_or(1)
    }

    /// Number of grid lines running along `axis`.
    pub fn lines(&self, axis: usize) -> usize {
        self.n_cells() / self.n[axis]
    }

    /// Flat cell index of position `pos` on line `line` along `axis`.
    #[inline]
    pub fn cell_on_line(&self, axis: usize, line: usize, pos: usize) -> usize {
        if axis == 0 {
            line * self.n[0] + pos
        } else {
            pos * self.n[0] + line
        }
    }

    pub fn cell(&self, c: usize) -> &[f64] {
        &self.values[c * self.p..(c + 1) * self.p]
    }

    /// Values as `p x cells` blocks.
    pub fn component_major(&self) -> Vec<f64> {
        transpose(&self.values, self.n_cells(), self.p)
    }

    pub fn from_component_major(&self, block: &[f64]) -> Self {
        self.with_values(transpose(block, self.p, self.n_cells()))
    }

    /// `sum_j u_j |I_j|` per component.
    pub fn totals(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.p];
        for c in 0..self.n_cells() {
            for (o, v) in out.iter_mut().zip(self.cell(c)) {
                *o += v;
            }
        }
        let vol = self.cell_volume();
        out.iter().map(|s| s * vol).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Transposes a row-major `rows x cols` array.
pub fn transpose(x: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = x[r * cols + c];
        }
    }
    out
}

/// Ghost treatment of one axis. Dirichlet sides store one frozen state per
/// grid line (`lines x p`).
#[derive(Clone, Debug, PartialEq)]
pub enum AxisBoundary {
    Periodic,
    Dirichlet { low: Vec<f64>, high: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundarySpec {
    pub axes: Vec<AxisBoundary>,
}

/// Where a possibly out-of-range position along a line reads from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    Cell(usize),
    Low,
    High,
}

impl BoundarySpec {
    /// Periodic axes wrap; Dirichlet axes freeze the current boundary cells.
    pub fn frozen_from(field: &GridField) -> Self {
        let axes = (0..field.d())
            .map(|axis| match field.boundary[axis] {
                BoundaryKind::Periodic => AxisBoundary::Periodic,
                BoundaryKind::Dirichlet => {
                    let n = field.n[axis];
                    let mut low = Vec::new();
                    let mut high = Vec::new();
                    for line in 0..field.lines(axis) {
                        low.extend_from_slice(field.cell(field.cell_on_line(axis, line, 0)));
                        high.extend_from_slice(field.cell(field.cell_on_line(axis, line, n - 1)));
                    }
                    AxisBoundary::Dirichlet { low, high }
                }
            })
            .collect();
        BoundarySpec { axes }
    }

    pub fn validate(&self, field: &GridField) -> Result<(), FvError> {
        if self.axes.len() != field.d() {
            return Err(FvError::Shape("boundary spec does not match grid dimension".into()));
        }
        for (axis, b) in self.axes.iter().enumerate() {
            match (b, field.boundary[axis]) {
                (AxisBoundary::Periodic, BoundaryKind::Periodic) => {}
                (AxisBoundary::Dirichlet { low, high }, BoundaryKind::Dirichlet) => {
                    let len = field.lines(axis) * field.p;
                    if low.len() != len || high.len() != len {
                        return Err(FvError::Shape(format!("axis {axis}: frozen states need {len} values")));
                    }
                    if low.iter().chain(high).any(|v| !v.is_finite()) {
                        return Err(FvError::Shape(format!("axis {axis}: non-finite frozen state")));
                    }
                }
                _ => return Err(FvError::Shape(format!("axis {axis}: boundary kind mismatch"))),
            }
        }
        Ok(())
    }

    #[inline]
    pub fn source(&self, axis: usize, n: usize, pos: isize) -> Source {
        if pos >= 0 && (pos as usize) < n {
            return Source::Cell(pos as usize);
        }
        match self.axes[axis] {
            AxisBoundary::Periodic => Source::Cell(pos.rem_euclid(n as isize) as usize),
            AxisBoundary::Dirichlet { .. } => {
                if pos < 0 {
                    Source::Low
                } else {
                    Source::High
                }
            }
        }
    }

    /// Frozen state for `line` on the low or high side of `axis`.
    pub fn frozen(&self, axis: usize, line: usize, high: bool, p: usize) -> &[f64] {
        match &self.axes[axis] {
            AxisBoundary::Dirichlet { low, high: hi } => {
                let s = if high { hi } else { low };
                &s[line * p..(line + 1) * p]
            }
            AxisBoundary::Periodic => panic!("no frozen state on a periodic axis"),
        }
    }
}

/// A field with `GHOST_WIDTH` ghost layers along every axis.
#[derive(Clone, Debug, PartialEq)]
pub struct PaddedField {
    pub p: usize,
    pub n: Vec<usize>,
    /// Padded extent per axis.
    pub m: Vec<usize>,
    pub values: Vec<f64>,
}

impl PaddedField {
    fn index(&self, ix: isize, iy: isize) -> usize {
        let g = GHOST_WIDTH as isize;
        let x = (ix + g) as usize;
        let y = if self.n.len() > 1 { (iy + g) as usize } else { 0 };
        y * self.m[0] + x
    }

    /// State at (possibly ghost) position; `iy` is ignored in 1-D.
    pub fn get(&self, ix: isize, iy: isize) -> &[f64] {
        let k = self.index(ix, iy);
        &self.values[k * self.p..(k + 1) * self.p]
    }

    fn set(&mut self, ix: isize, iy: isize, v: &[f64]) {
        let k = self.index(ix, iy);
        self.values[k * self.p..(k + 1) * self.p].copy_from_slice(v);
    }

    /// Rewrites every ghost cell from the interior and the frozen states.
    pub fn refill(&mut self, spec: &BoundarySpec) {
        let p = self.p;
        let g = GHOST_WIDTH as isize;
        let nx = self.n[0] as isize;
        let ny = self.n.get(1).copied().unwrap_or(1) as isize;
        let ghosts: Vec<isize> = (-g..0).chain(nx..nx + g).collect();
        for iy in 0..ny {
            for &ix in &ghosts {
                let v = match spec.source(0, nx as usize, ix) {
                    Source::Cell(c) => self.get(c as isize, iy).to_vec(),
                    Source::Low => spec.frozen(0, iy as usize, false, p).to_vec(),
                    Source::High => spec.frozen(0, iy as usize, true, p).to_vec(),
                };
                self.set(ix, iy, &v);
            }
        }
        if self.n.len() > 1 {
            let ghosts: Vec<isize> = (-g..0).chain(ny..ny + g).collect();
            for ix in 0..nx {
                for &iy in &ghosts {
                    let v = match spec.source(1, ny as usize, iy) {
                        Source::Cell(c) => self.get(ix, c as isize).to_vec(),
                        Source::Low => spec.frozen(1, ix as usize, false, p).to_vec(),
                        Source::High => spec.frozen(1, ix as usize, true, p).to_vec(),
                    };
                    self.set(ix, iy, &v);
                }
            }
        }
    }
}

/// Copies the interior into a padded array and fills the ghost layers.
pub fn fill_ghosts(field: &GridField, spec: &BoundarySpec) -> Result<PaddedField, FvError> {
    spec.validate(field)?;
    let m: Vec<usize> = field.n.iter().map(|k| k + 2 * GHOST_WIDTH).collect();
    let size: usize = m.iter().product::<usize>() * field.p;
    let mut out = PaddedField { p: field.p, n: field.n.clone(), m, values: vec![0.0; size] };
    for iy in 0..field.ny() {
        for ix in 0..field.nx() {
            out.set(ix as isize, iy as isize, field.cell(iy * field.nx() + ix));
        }
    }
    out.refill(spec);
    Ok(out)
}
