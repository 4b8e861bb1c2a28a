use ndarray::{Array2, ArrayView1, ArrayViewMut1};

use crate::error::{degenerate, Error, Result};
use crate::fractional_noise::NoiseOrigin;
use crate::grid::GridSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompanionKind {
    /// `(u(t, x + theta) - u(t, x)) / theta`.
    ThetaDifference,
    /// `v = du/dx` from the coupled system.
    Gradient,
}

impl CompanionKind {
    pub fn name(self) -> &'static str {
        match self {
            CompanionKind::ThetaDifference => "theta_difference",
            CompanionKind::Gradient => "gradient",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolutionMeta {
    pub noise: Option<NoiseOrigin>,
    pub config_digest: u64,
    /// Snapped shift for `ThetaDifference` companions.
    pub theta: Option<f64>,
}

/// A solved field `u` and its companion on the node lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionField {
    u: Array2<f64>,
    companion: Array2<f64>,
    kind: CompanionKind,
    grid: GridSpec,
    /// Columns entering norms: inside the physical band and, for shifted
    /// differences, free of edge padding.
    valid_columns: usize,
    meta: SolutionMeta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    U,
    Companion,
}

impl SolutionField {
    pub(crate) fn new(
        u: Array2<f64>,
        companion: Array2<f64>,
        kind: CompanionKind,
        grid: GridSpec,
        valid_columns: usize,
        meta: SolutionMeta,
    ) -> Self {
        debug_assert_eq!(u.dim(), grid.node_shape());
        debug_assert_eq!(companion.dim(), grid.node_shape());
        Self {
            u,
            companion,
            kind,
            grid,
            valid_columns,
            meta,
        }
    }

    pub fn u(&self) -> &Array2<f64> {
        &self.u
    }

    pub fn companion(&self) -> &Array2<f64> {
        &self.companion
    }

    pub fn component(&self, c: Component) -> &Array2<f64> {
        match c {
            Component::U => &self.u,
            Component::Companion => &self.companion,
        }
    }

    pub fn companion_kind(&self) -> CompanionKind {
        self.kind
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn meta(&self) -> &SolutionMeta {
        &self.meta
    }

    /// Number of leading space columns that enter norms: `x <= L - 6 sqrt(T)`
    /// and, for shifted differences, no edge padding.
    pub fn valid_columns(&self) -> usize {
        self.valid_columns
    }
}

/// Writes `(row[j + m] - row[j]) / theta` and pads the last `m` entries with
/// the last computable value.
pub(crate) fn shifted_difference(row: ArrayView1<f64>, m: usize, theta: f64, mut out: ArrayViewMut1<f64>) {
    let n = row.len();
    for j in 0..n - m {
        out[j] = (row[j + m] - row[j]) / theta;
    }
    let last = out[n - m - 1];
    for j in n - m..n {
        out[j] = last;
    }
}

/// `max_x mean_k |a_k(t, x) - b_k(t, x)|^2` at a fixed time index, over the
/// columns valid in every member.
pub fn sup_mean_square_distance(
    a: &[SolutionField],
    b: &[SolutionField],
    t_index: usize,
    component: Component,
) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape {
            expected: (a.len(), 1),
            got: (b.len(), 1),
        });
    }
    if a.is_empty() {
        return Err(degenerate!("empty ensemble"));
    }
    let shape = a[0].grid.node_shape();
    for f in a.iter().chain(b) {
        if f.grid.node_shape() != shape {
            return Err(Error::Shape {
                expected: shape,
                got: f.grid.node_shape(),
            });
        }
    }
    if t_index >= shape.0 {
        return Err(Error::Shape {
            expected: (shape.0, 1),
            got: (t_index + 1, 1),
        });
    }
    let cols = a.iter().chain(b).map(|f| f.valid_columns).min().unwrap();
    let mut worst = 0.0f64;
    for j in 0..cols {
        let mean = a
            .iter()
            .zip(b)
            .map(|(fa, fb)| {
                let d = fa.component(component)[[t_index, j]] - fb.component(component)[[t_index, j]];
                d * d
            })
            .sum::<f64>()
            / a.len() as f64;
        worst = worst.max(mean);
    }
    Ok(worst)
}

/// `sup_t sup_x` of the ensemble mean square difference.
pub fn sup_time_mean_square_distance(a: &[SolutionField], b: &[SolutionField], component: Component) -> Result<f64> {
    let n = a.first().map(|f| f.grid.n_t() + 1).unwrap_or(0);
    let mut worst = 0.0f64;
    for i in 0..n {
        worst = worst.max(sup_mean_square_distance(a, b, i, component)?);
    }
    if n == 0 {
        return Err(degenerate!("empty ensemble"));
    }
    Ok(worst)
}
