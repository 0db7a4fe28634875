//! Observation datasets, CSV round-tripping and nested subsamples.

use crate::error::{Error, Result};
use crate::rng::RngStream;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

/// A shared, sorted set of row indices into a [`Dataset`].
pub type IndexSet = Arc<[usize]>;

/// Ordered observations: N rows of D covariates plus an optional response.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    dim: usize,
    x: Vec<f64>,
    y: Option<Vec<f64>>,
}

impl Dataset {
    /// Build from row-major covariates `x` (N x `dim`) and optional responses.
    pub fn new(dim: usize, x: Vec<f64>, y: Option<Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("dataset needs at least one covariate column"));
        }
        if !x.len().is_multiple_of(dim) {
            return Err(Error::config(format!(
                "covariate buffer of length {} is not a multiple of D = {dim}",
                x.len()
            )));
        }
        let n = x.len() / dim;
        if let Some(y) = &y {
            if y.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: y.len(),
                });
            }
        }
        if x.iter().chain(y.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset entry".into()));
        }
        Ok(Self { dim, x, y })
    }

    pub fn len(&self) -> usize {
        self.x.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    pub fn covariates(&self) -> &[f64] {
        &self.x
    }

    pub fn responses(&self) -> Option<&[f64]> {
        self.y.as_deref()
    }

    /// The first `n` rows.
    pub fn prefix(&self, n: usize) -> Dataset {
        let n = n.min(self.len());
        Dataset {
            dim: self.dim,
            x: self.x[..n * self.dim].to_vec(),
            y: self.y.as_ref().map(|y| y[..n].to_vec()),
        }
    }

    /// Index set covering every row.
    pub fn all_indices(&self) -> IndexSet {
        (0..self.len()).collect()
    }

    /// CSV with header `x1..xD[,y]`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=self.dim).map(|d| format!("x{d}")).collect();
        if self.y.is_some() {
            header.push("y".into());
        }
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            if let Some(y) = &self.y {
                rec.push(y[i].to_string());
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.clone();
        let mut x_cols = Vec::new();
        let mut y_col = None;
        for (k, name) in header.iter().enumerate() {
            let name = name.trim();
            if name == "y" {
                y_col = Some(k);
            } else if let Some(d) = name.strip_prefix('x').and_then(|s| s.parse::<usize>().ok()) {
                x_cols.push((d, k));
            } else {
                return Err(Error::config(format!("unexpected dataset column `{name}`")));
            }
        }
        x_cols.sort();
        if x_cols.iter().enumerate().any(|(i, &(d, _))| d != i + 1) {
            return Err(Error::config("covariate columns must be x1..xD"));
        }
        let dim = x_cols.len();
        let mut x = Vec::new();
        let mut y = y_col.map(|_| Vec::new());
        for rec in r.records() {
            let rec = rec?;
            for &(_, k) in &x_cols {
                x.push(parse_field(&rec, k)?);
            }
            if let (Some(k), Some(y)) = (y_col, y.as_mut()) {
                y.push(parse_field(&rec, k)?);
            }
        }
        Dataset::new(dim, x, y)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

fn parse_field(rec: &csv::StringRecord, k: usize) -> Result<f64> {
    let s = rec.get(k).unwrap_or("").trim();
    s.parse::<f64>()
        .map_err(|_| Error::config(format!("bad numeric field `{s}`")))
}

/// Nested index sets `I_0 ⊇ I_1 ⊇ ... ⊇ I_M`, each sorted ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct SubsampleFamily {
    sets: Vec<IndexSet>,
}

impl SubsampleFamily {
    pub fn from_sets(sets: Vec<IndexSet>) -> Self {
        Self { sets }
    }

    pub fn sets(&self) -> &[IndexSet] {
        &self.sets
    }

    pub fn level(&self, m: usize) -> &IndexSet {
        &self.sets[m]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.sets.iter().map(|s| s.len()).collect()
    }

    /// Whether every set is contained in its predecessor.
    pub fn is_nested(&self) -> bool {
        self.sets.windows(2).all(|w| is_subset(&w[1], &w[0]))
    }
}

/// Sorted-slice containment check.
pub fn is_subset(small: &[usize], big: &[usize]) -> bool {
    let mut it = big.iter();
    small.iter().all(|s| it.by_ref().any(|b| b == s))
}

/// Uniform `n`-subset of `parent` without replacement, returned sorted.
pub fn subsample(parent: &[usize], n: usize, rng: &mut RngStream) -> Vec<usize> {
    debug_assert!(n <= parent.len());
    if n == parent.len() {
        return parent.to_vec();
    }
    let mut picked: Vec<usize> = rand::seq::index::sample(rng, parent.len(), n)
        .into_iter()
        .map(|k| parent[k])
        .collect();
    picked.sort_unstable();
    picked
}

/// Draw `I_0 = {0..N-1}` and then each `I_m` uniformly from `I_{m-1}`.
pub fn draw_nested_subsamples(n_rows: usize, sizes: &[usize], rng: &mut RngStream) -> Result<SubsampleFamily> {
    match sizes.first() {
        Some(&n0) if n0 == n_rows => {}
        _ => {
            return Err(Error::config(format!(
                "first subsample size must equal N = {n_rows}, got {sizes:?}"
            )))
        }
    }
    if sizes.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::config(format!(
            "subsample sizes must be non-increasing: {sizes:?}"
        )));
    }
    let mut sets: Vec<IndexSet> = Vec::with_capacity(sizes.len());
    sets.push((0..n_rows).collect());
    for &n in &sizes[1..] {
        let parent = sets.last().expect("level 0 present");
        let child: IndexSet = subsample(parent, n, rng).into();
        sets.push(child);
    }
    Ok(SubsampleFamily { sets })
}
