use crate::error::{Error, Result};

/// N points in ℝ^d, stored row-major. Every coordinate is finite, N >= 2, d >= 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    data: Vec<f64>,
    n: usize,
    d: usize,
}

impl SampleSet {
    /// Builds a sample set from row-major data.
    pub fn new(data: Vec<f64>, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::ZeroDimension);
        }
        if data.len() % d != 0 {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: data.len() % d,
            });
        }
        let n = data.len() / d;
        if n < 2 {
            return Err(Error::TooFewSamples(n));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / d,
                col: pos % d,
            });
        }
        Ok(SampleSet { data, n, d })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * d);
        for r in rows {
            let r = r.as_ref();
            if r.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(data, d)
    }

    /// One-dimensional samples.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec(), 1)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Concatenates the columns of `self` and `other` row by row.
    pub fn hstack(&self, other: &SampleSet) -> Result<SampleSet> {
        if self.n != other.n {
            return Err(Error::LengthMismatch {
                x: self.n,
                y: other.n,
            });
        }
        let d = self.d + other.d;
        let mut data = Vec::with_capacity(self.n * d);
        for (a, b) in self.rows().zip(other.rows()) {
            data.extend_from_slice(a);
            data.extend_from_slice(b);
        }
        Ok(SampleSet { data, n: self.n, d })
    }

    /// Splits columns into `[0, d_x)` and `[d_x, d)`.
    pub fn split_columns(&self, d_x: usize) -> Result<(SampleSet, SampleSet)> {
        if d_x == 0 || d_x >= self.d {
            return Err(Error::invalid(
                "dx",
                format!("column split must be in 1..{} for {}-column data", self.d, self.d),
            ));
        }
        let d_y = self.d - d_x;
        let mut xs = Vec::with_capacity(self.n * d_x);
        let mut ys = Vec::with_capacity(self.n * d_y);
        for r in self.rows() {
            xs.extend_from_slice(&r[..d_x]);
            ys.extend_from_slice(&r[d_x..]);
        }
        Ok((
            SampleSet { data: xs, n: self.n, d: d_x },
            SampleSet { data: ys, n: self.n, d: d_y },
        ))
    }

    /// Applies `f` to every coordinate. Used for affine transforms in tests.
    pub fn map(&self, mut f: impl FnMut(usize, f64) -> f64) -> Result<SampleSet> {
        let d = self.d;
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(k, &v)| f(k % d, v))
            .collect();
        SampleSet::new(data, d)
    }

    /// Reorders rows: row `i` of the result is row `perm[i]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> Result<SampleSet> {
        if perm.len() != self.n {
            return Err(Error::LengthMismatch {
                x: self.n,
                y: perm.len(),
            });
        }
        let mut data = Vec::with_capacity(self.data.len());
        for &p in perm {
            if p >= self.n {
                return Err(Error::IndexOutOfRange { index: p, n: self.n });
            }
            data.extend_from_slice(self.row(p));
        }
        Ok(SampleSet { data, n: self.n, d: self.d })
    }

    /// Groups of row indices whose coordinates are bit-identical. Only groups of size >= 2.
    pub fn duplicate_groups(&self) -> Vec<Vec<usize>> {
        let mut order: Vec<usize> = (0..self.n).collect();
        let key = |i: usize| -> Vec<u64> {
            self.row(i)
                .iter()
                .map(|v| if *v == 0.0 { 0 } else { v.to_bits() })
                .collect()
        };
        order.sort_by_key(|&i| key(i));
        let mut groups = Vec::new();
        let mut start = 0;
        while start < order.len() {
            let k0 = key(order[start]);
            let mut end = start + 1;
            while end < order.len() && key(order[end]) == k0 {
                end += 1;
            }
            if end - start > 1 {
                let mut g = order[start..end].to_vec();
                g.sort_unstable();
                groups.push(g);
            }
            start = end;
        }
        groups.sort();
        groups
    }
}
