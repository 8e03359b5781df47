//! Data ingestion, column standardization and the thresholded
//! cross-correlation graph.

use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of subjects accepted at ingestion.
pub const MIN_ROWS: usize = 4;

/// Threshold used when none is configured.
pub const DEFAULT_EPSILON: f64 = 0.2;

/// Subjects x variables matrix as read from disk, validated but untouched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawMatrix {
    values: Array2<f64>,
    column_names: Vec<String>,
}

impl RawMatrix {
    pub fn new(values: Array2<f64>, column_names: Vec<String>) -> Result<Self> {
        if column_names.len() != values.ncols() {
            return Err(Error::ColumnNameMismatch {
                names: column_names.len(),
                cols: values.ncols(),
            });
        }
        if values.nrows() < MIN_ROWS {
            return Err(Error::TooFewRows(values.nrows()));
        }
        for ((row, col), v) in values.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row,
                    column: column_names[col].clone(),
                });
            }
        }
        Ok(Self {
            values,
            column_names,
        })
    }

    /// Builds a matrix with generated names `{prefix}{j}`.
    pub fn with_prefix(values: Array2<f64>, prefix: &str) -> Result<Self> {
        let names = (0..values.ncols()).map(|j| format!("{prefix}{j}")).collect();
        Self::new(values, names)
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }
}

/// Column-centered matrix whose columns have unit Euclidean norm, so that
/// `XᵀY` is the matrix of Pearson correlations.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedMatrix {
    values: Array2<f64>,
    column_names: Vec<String>,
}

impl StandardizedMatrix {
    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    /// Copies the given columns, in order, into a new `n x |cols|` array.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Array2<f64>> {
        for &c in cols {
            if c >= self.ncols() {
                return Err(Error::IndexOutOfRange {
                    index: c,
                    len: self.ncols(),
                });
            }
        }
        Ok(self.values.select(Axis(1), cols))
    }
}

/// Centers every column and scales it to unit Euclidean norm.
pub fn standardize(raw: &RawMatrix) -> Result<StandardizedMatrix> {
    let n = raw.nrows();
    if n < MIN_ROWS {
        return Err(Error::TooFewRows(n));
    }
    let mut values = raw.values.clone();
    for (j, mut col) in values.axis_iter_mut(Axis(1)).enumerate() {
        let scale = col.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let mean = col.iter().sum::<f64>() / n as f64;
        col.mapv_inplace(|v| v - mean);
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        // Relative guard: rounding residue of a constant column is ~1e-16 * scale.
        if norm == 0.0 || norm <= 1e-12 * scale * (n as f64).sqrt() {
            return Err(Error::ConstantColumn(raw.column_names[j].clone()));
        }
        col.mapv_inplace(|v| v / norm);
    }
    Ok(StandardizedMatrix {
        values,
        column_names: raw.column_names.clone(),
    })
}

/// `R = XᵀY` for standardized inputs: entry `(i, j)` is the Pearson
/// correlation of `x_i` and `y_j`.
///
/// The product runs single-threaded through the same kernel for every call,
/// so the result is bitwise reproducible regardless of the rayon pool size.
pub fn cross_correlation(x: &StandardizedMatrix, y: &StandardizedMatrix) -> Result<Array2<f64>> {
    if x.nrows() != y.nrows() {
        return Err(Error::RowCountMismatch {
            left: x.nrows(),
            right: y.nrows(),
        });
    }
    Ok(x.values.t().dot(&y.values))
}

/// Exact fixed-point representation of the truncated weights.
///
/// Every nonzero weight exceeds epsilon, so it is an integer multiple of
/// `2^-shift` for a shift derived from the smallest nonzero exponent. Sums of
/// these integers are exact, which makes incremental row/column bookkeeping
/// agree with recomputation from scratch and makes tie-breaking exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct FixedScale {
    factor: f64,
}

impl FixedScale {
    fn for_matrix(r_trunc: &Array2<f64>) -> Self {
        let min_nonzero = r_trunc
            .iter()
            .copied()
            .filter(|&v| v > 0.0)
            .fold(f64::INFINITY, f64::min);
        let cells = (r_trunc.len() as f64 + 1.0).log2().ceil() as i32;
        // Sums and count cross-products stay below |rows| * |cols| * 2^shift.
        let budget = 126 - cells;
        let shift = if min_nonzero.is_finite() {
            52 - exponent(min_nonzero)
        } else {
            0
        };
        let shift = shift.clamp(0, budget.max(0));
        Self {
            factor: 2f64.powi(shift),
        }
    }

    #[inline]
    pub(crate) fn to_fixed(self, v: f64) -> u128 {
        (v * self.factor).round() as u128
    }

    #[inline]
    pub(crate) fn to_real(self, v: u128) -> f64 {
        v as f64 / self.factor
    }
}

fn exponent(v: f64) -> i32 {
    let biased = ((v.to_bits() >> 52) & 0x7ff) as i32;
    if biased == 0 {
        -1074 + 52
    } else {
        biased - 1023
    }
}

/// Cross-correlation matrix together with its epsilon-truncated absolute
/// version, which doubles as a weighted bipartite adjacency.
#[derive(Debug, Clone)]
pub struct CorrelationGraph {
    r: Array2<f64>,
    r_trunc: Array2<f64>,
    epsilon: f64,
    scale: FixedScale,
    edges: usize,
}

impl CorrelationGraph {
    pub fn r(&self) -> ArrayView2<'_, f64> {
        self.r.view()
    }

    pub fn r_trunc(&self) -> ArrayView2<'_, f64> {
        self.r_trunc.view()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Number of rows (variables of X).
    pub fn p(&self) -> usize {
        self.r.nrows()
    }

    /// Number of columns (variables of Y).
    pub fn q(&self) -> usize {
        self.r.ncols()
    }

    /// `A_ij = 1` exactly when the truncated weight is positive.
    pub fn is_edge(&self, i: usize, j: usize) -> bool {
        self.r_trunc[[i, j]] > 0.0
    }

    /// Total number of edges, i.e. cells with `|R_ij| > ε`.
    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub(crate) fn scale(&self) -> FixedScale {
        self.scale
    }
}

/// Zeroes every `|R_ij| ≤ ε` and takes absolute values of the rest.
pub fn truncate(r: Array2<f64>, epsilon: f64) -> Result<CorrelationGraph> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::EpsilonOutOfRange(epsilon));
    }
    if let Some(bad) = r.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "correlation matrix contains {bad}"
        )));
    }
    let r_trunc = r.mapv(|v| if v.abs() > epsilon { v.abs() } else { 0.0 });
    let edges = r_trunc.iter().filter(|&&v| v > 0.0).count();
    let scale = FixedScale::for_matrix(&r_trunc);
    Ok(CorrelationGraph {
        r,
        r_trunc,
        epsilon,
        scale,
        edges,
    })
}

/// Reads a comma-separated file with a header row of variable names and one
/// row per subject.
pub fn read_csv(path: impl AsRef<Path>) -> Result<RawMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path.as_ref())?;
    let names: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let mut data = Vec::new();
    let mut rows = 0;
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                line: r + 2,
                column: c + 1,
                value: field.to_owned(),
            })?;
            data.push(v);
        }
        rows += 1;
    }
    let cols = names.len();
    let values = Array2::from_shape_vec((rows, cols), data)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    RawMatrix::new(values, names)
}

/// Writes a matrix in the same layout [`read_csv`] accepts. Values use the
/// shortest representation that parses back to the identical `f64`.
pub fn write_csv(path: impl AsRef<Path>, m: &RawMatrix) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    writer.write_record(&m.column_names)?;
    let mut buf = Vec::with_capacity(m.ncols());
    for row in m.values.rows() {
        buf.clear();
        buf.extend(row.iter().map(|v| v.to_string()));
        writer.write_record(&buf)?;
    }
    writer.flush()?;
    Ok(())
}
