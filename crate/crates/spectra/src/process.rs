use std::fmt::Write;

/// Points closer than this are reported as near-duplicates.
pub const DUPLICATE_TOL: f64 = 1e-10;

/// Rescaled eigenvalues inside an open window. A raw value x maps to
/// `normalization * (x - center)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointProcess {
    pub points: Vec<f64>,
    pub window: (f64, f64),
    pub normalization: f64,
    pub center: f64,
    pub provenance: String,
    pub seed: u64,
    /// number of consecutive pairs closer than `DUPLICATE_TOL`
    pub near_duplicates: usize,
    pub warnings: Vec<String>,
}

impl PointProcess {
    /// Keeps the values strictly inside the window and sorts them.
    pub fn new(values: impl IntoIterator<Item = f64>, window: (f64, f64), normalization: f64, center: f64, provenance: &str, seed: u64) -> Self {
        let mut points: Vec<f64> = values.into_iter().filter(|&x| x > window.0 && x < window.1).collect();
        points.sort_by(|a, b| a.total_cmp(b));
        let near_duplicates = points.windows(2).filter(|w| w[1] - w[0] < DUPLICATE_TOL).count();
        Self { points, window, normalization, center, provenance: provenance.to_string(), seed, near_duplicates, warnings: vec![] }
    }

    /// Rescales raw values `x` to `normalization * (x - center)` and keeps the window.
    pub fn from_raw(raw: &[f64], window: (f64, f64), normalization: f64, center: f64, provenance: &str, seed: u64) -> Self {
        Self::new(raw.iter().map(|&x| normalization * (x - center)), window, normalization, center, provenance, seed)
    }

    /// Undo the rescaling.
    pub fn raw(&self) -> Vec<f64> {
        self.points.iter().map(|p| self.center + p / self.normalization).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of points in [lo, hi].
    pub fn count_in(&self, lo: f64, hi: f64) -> usize {
        self.points.iter().filter(|&&x| x >= lo && x <= hi).count()
    }

    /// Columns point, window_lo, window_hi, normalization, seed.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("point,window_lo,window_hi,normalization,seed\n");
        for p in &self.points {
            let _ = writeln!(s, "{p},{},{},{},{}", self.window.0, self.window.1, self.normalization, self.seed);
        }
        s
    }
}

/// `m` equally spaced points from lo to hi inclusive.
pub fn linspace(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    match m {
        0 => vec![],
        1 => vec![lo],
        _ => (0..m).map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64).collect(),
    }
}
