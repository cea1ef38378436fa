//! Kernel blocks over a labeled/unlabeled partition.
//!
//! [`KernelBlocks`] holds `K_ll` (|L|×|L|), `K_lu` (|L|×|U|) and `K_uu`
//! (|U|×|U|), the kernel bound `d`, and two per-candidate sums that the
//! set-function gains need in O(1):
//!
//! * `rowsum_uu[j]    = Σ_{j'∈U} K_uu[j, j']`
//! * `ylabelsum_lu[j] = Σ_{i∈L} y_i K_lu[i, j]`
//!
//! `K_uu` is either materialized ([`GramMode::Dense`]) or evaluated one row at
//! a time from the stored points ([`GramMode::OnDemand`]). Every entry of every
//! block lies in `[0, d]`; construction fails otherwise.

use std::borrow::Cow;
use std::io::{Read, Write};

use rayon::prelude::*;

use crate::dataio::{Dataset, SparseVector};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

const SYMMETRY_TOL: f64 = 1e-12;
const CACHE_MAGIC: &[u8; 8] = b"QPS3KBLK";
const CACHE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum KernelKind {
    Linear,
    Rbf { gamma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    /// Replaces the data-derived bound of a linear kernel.
    pub d_override: Option<f64>,
}

impl KernelSpec {
    pub fn linear() -> Self {
        KernelSpec {
            kind: KernelKind::Linear,
            d_override: None,
        }
    }

    pub fn rbf(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("rbf gamma must be positive, got {gamma}")));
        }
        Ok(KernelSpec {
            kind: KernelKind::Rbf { gamma },
            d_override: None,
        })
    }

    /// Only linear kernels accept an override; the rbf bound is always 1.
    pub fn with_d_override(mut self, d: f64) -> Result<Self> {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::InvalidParameter(format!("d override must be positive, got {d}")));
        }
        if let KernelKind::Rbf { .. } = self.kind {
            return Err(Error::InvalidParameter("the rbf kernel bound is fixed at 1".into()));
        }
        self.d_override = Some(d);
        Ok(self)
    }

    pub fn eval(&self, x: &SparseVector, x2: &SparseVector) -> f64 {
        match self.kind {
            KernelKind::Linear => x.dot(x2),
            KernelKind::Rbf { gamma } => (-gamma * x.squared_distance(x2)).exp(),
        }
    }

    /// Stable FNV-1a digest used to tag on-disk caches.
    pub fn digest(&self) -> u64 {
        let mut bytes = Vec::with_capacity(24);
        match self.kind {
            KernelKind::Linear => bytes.push(0u8),
            KernelKind::Rbf { gamma } => {
                bytes.push(1u8);
                bytes.extend_from_slice(&gamma.to_bits().to_le_bytes());
            }
        }
        if let Some(d) = self.d_override {
            bytes.extend_from_slice(&d.to_bits().to_le_bytes());
        }
        bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| {
            (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
        })
    }
}

pub fn kernel_eval(spec: &KernelSpec, x: &SparseVector, x2: &SparseVector) -> f64 {
    spec.eval(x, x2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GramMode {
    #[default]
    Dense,
    /// Keep only the unlabeled points and evaluate `K_uu` rows lazily.
    OnDemand,
}

#[derive(Debug, Clone)]
enum UnlabeledGram {
    Dense(DenseMatrix),
    OnDemand {
        points: Vec<SparseVector>,
        spec: KernelSpec,
    },
}

#[derive(Debug, Clone)]
pub struct KernelBlocks {
    k_ll: DenseMatrix,
    k_lu: DenseMatrix,
    k_uu: UnlabeledGram,
    diag_uu: Vec<f64>,
    d: f64,
    rowsum_uu: Vec<f64>,
    ylabelsum_lu: Vec<f64>,
    y_labeled: Vec<f64>,
    spec: Option<KernelSpec>,
}

/// The bound `d` for `spec` on `data`.
///
/// rbf: 1. Linear: the override when given, else the feature count for dense
/// data (mean non-zeros at least half the features), else the mean non-zero
/// count rounded up.
pub fn kernel_bound(data: &Dataset, spec: &KernelSpec) -> f64 {
    match spec.kind {
        KernelKind::Rbf { .. } => 1.0,
        KernelKind::Linear => {
            if let Some(d) = spec.d_override {
                return d;
            }
            let nf = data.n_features() as f64;
            let mean_nz = data.mean_nonzeros();
            if mean_nz >= 0.5 * nf {
                nf
            } else {
                mean_nz.ceil().max(1.0)
            }
        }
    }
}

pub fn build_blocks(data: &Dataset, spec: &KernelSpec) -> Result<KernelBlocks> {
    build_blocks_with_mode(data, spec, GramMode::Dense)
}

pub fn build_blocks_with_mode(data: &Dataset, spec: &KernelSpec, mode: GramMode) -> Result<KernelBlocks> {
    let labeled: Vec<&SparseVector> = data.labeled_idx().iter().map(|&i| data.sample(i)).collect();
    let unlabeled: Vec<&SparseVector> = data.unlabeled_idx().iter().map(|&j| data.sample(j)).collect();
    let y_labeled: Vec<f64> = data.labeled_labels().iter().map(|l| l.value()).collect();
    let d = kernel_bound(data, spec);

    let k_ll = gram(spec, &labeled, &labeled);
    let k_lu = gram(spec, &labeled, &unlabeled);
    let (k_uu, diag_uu, rowsum_uu) = match mode {
        GramMode::Dense => {
            let k = gram(spec, &unlabeled, &unlabeled);
            let diag = (0..k.rows()).map(|j| k[(j, j)]).collect();
            let sums = k.row_sums();
            (UnlabeledGram::Dense(k), diag, sums)
        }
        GramMode::OnDemand => {
            let diag = unlabeled.par_iter().map(|x| spec.eval(x, x)).collect();
            let sums = on_demand_row_sums(spec, &unlabeled, data.n_features());
            let points = unlabeled.iter().map(|x| (*x).clone()).collect();
            (UnlabeledGram::OnDemand { points, spec: *spec }, diag, sums)
        }
    };
    let ylabelsum_lu = labeled_sums(&k_lu, &y_labeled);

    let blocks = KernelBlocks {
        k_ll,
        k_lu,
        k_uu,
        diag_uu,
        d,
        rowsum_uu,
        ylabelsum_lu,
        y_labeled,
        spec: Some(*spec),
    };
    match mode {
        GramMode::Dense => blocks.check_entries()?,
        GramMode::OnDemand => {
            blocks.check_dense_entries()?;
            check_bound_by_norms(data, spec, d)?;
        }
    }
    Ok(blocks)
}

fn gram(spec: &KernelSpec, rows: &[&SparseVector], cols: &[&SparseVector]) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(rows.len(), cols.len());
    if cols.is_empty() {
        return m;
    }
    m.as_mut_slice()
        .par_chunks_mut(cols.len())
        .zip(rows.par_iter())
        .for_each(|(out, x)| {
            for (o, x2) in out.iter_mut().zip(cols) {
                *o = spec.eval(x, x2);
            }
        });
    m
}

fn on_demand_row_sums(spec: &KernelSpec, points: &[&SparseVector], n_features: usize) -> Vec<f64> {
    match spec.kind {
        KernelKind::Linear => {
            // Σ_j' <x_j, x_j'> = <x_j, Σ_j' x_j'>
            let mut total = vec![0.0; n_features];
            for x in points {
                x.add_to_dense(&mut total, 1.0);
            }
            points.par_iter().map(|x| x.dot_dense(&total)).collect()
        }
        KernelKind::Rbf { .. } => points
            .par_iter()
            .map(|x| points.iter().map(|x2| spec.eval(x, x2)).sum())
            .collect(),
    }
}

fn labeled_sums(k_lu: &DenseMatrix, y: &[f64]) -> Vec<f64> {
    let mut sums = vec![0.0; k_lu.cols()];
    for (i, &yi) in y.iter().enumerate() {
        for (s, &k) in sums.iter_mut().zip(k_lu.row(i)) {
            *s += yi * k;
        }
    }
    sums
}

fn bound_violation(value: f64, d: f64) -> bool {
    let slack = 1e-9 * d.max(1.0);
    value < -slack || value > d + slack
}

/// On-demand linear blocks: non-negative features give non-negative entries and
/// Cauchy–Schwarz bounds every entry by the largest squared norm.
fn check_bound_by_norms(data: &Dataset, spec: &KernelSpec, d: f64) -> Result<()> {
    if let KernelKind::Linear = spec.kind {
        for x in data.samples() {
            if let Some(v) = x.values().iter().find(|v| **v < 0.0) {
                return Err(Error::KernelBound { value: *v, bound: d });
            }
            let sq = x.dot(x);
            if bound_violation(sq, d) {
                return Err(Error::KernelBound { value: sq, bound: d });
            }
        }
    }
    Ok(())
}

impl KernelBlocks {
    /// Assembles blocks from explicit matrices. `k_uu` must be square and
    /// symmetric, the shapes consistent with `y_labeled`, and all entries in `[0, d]`.
    pub fn from_parts(
        k_ll: DenseMatrix,
        k_lu: DenseMatrix,
        k_uu: DenseMatrix,
        y_labeled: Vec<f64>,
        d: f64,
    ) -> Result<KernelBlocks> {
        let nl = y_labeled.len();
        let nu = k_uu.rows();
        for (expected, found) in [
            (nl, k_ll.rows()),
            (nl, k_ll.cols()),
            (nl, k_lu.rows()),
            (nu, k_lu.cols()),
            (nu, k_uu.cols()),
        ] {
            if expected != found {
                return Err(Error::DimensionMismatch { expected, found });
            }
        }
        if let Some(y) = y_labeled.iter().find(|y| **y != 1.0 && **y != -1.0) {
            return Err(Error::InvalidParameter(format!("labels must be ±1, got {y}")));
        }
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::InvalidParameter(format!("kernel bound must be positive, got {d}")));
        }
        let diag_uu = (0..nu).map(|j| k_uu[(j, j)]).collect();
        let rowsum_uu = k_uu.row_sums();
        let ylabelsum_lu = labeled_sums(&k_lu, &y_labeled);
        let blocks = KernelBlocks {
            k_ll,
            k_lu,
            k_uu: UnlabeledGram::Dense(k_uu),
            diag_uu,
            d,
            rowsum_uu,
            ylabelsum_lu,
            y_labeled,
            spec: None,
        };
        blocks.check_entries()?;
        Ok(blocks)
    }

    /// Replaces `d` without checking it against the entries. Only useful for
    /// constructing counterexamples where the bound premise is violated.
    pub fn with_bound_unchecked(mut self, d: f64) -> KernelBlocks {
        self.d = d;
        self
    }

    fn check_dense_entries(&self) -> Result<()> {
        for v in self.k_ll.as_slice().iter().chain(self.k_lu.as_slice()) {
            if bound_violation(*v, self.d) {
                return Err(Error::KernelBound { value: *v, bound: self.d });
            }
        }
        Ok(())
    }

    fn check_entries(&self) -> Result<()> {
        self.check_dense_entries()?;
        if let UnlabeledGram::Dense(k) = &self.k_uu {
            if k.rows() != k.cols() {
                return Err(Error::DimensionMismatch {
                    expected: k.rows(),
                    found: k.cols(),
                });
            }
            let asym = k.max_asymmetry();
            if asym > SYMMETRY_TOL {
                return Err(Error::InvalidParameter(format!("K_uu asymmetric by {asym:e}")));
            }
            if let Some(v) = k.as_slice().iter().find(|v| bound_violation(**v, self.d)) {
                return Err(Error::KernelBound { value: *v, bound: self.d });
            }
        }
        Ok(())
    }

    pub fn n_labeled(&self) -> usize {
        self.y_labeled.len()
    }

    pub fn n_unlabeled(&self) -> usize {
        self.diag_uu.len()
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn spec(&self) -> Option<&KernelSpec> {
        self.spec.as_ref()
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.k_uu, UnlabeledGram::Dense(_))
    }

    pub fn k_ll(&self) -> &DenseMatrix {
        &self.k_ll
    }

    pub fn k_lu(&self) -> &DenseMatrix {
        &self.k_lu
    }

    /// The materialized `K_uu`, `None` in on-demand mode.
    pub fn k_uu_dense(&self) -> Option<&DenseMatrix> {
        match &self.k_uu {
            UnlabeledGram::Dense(k) => Some(k),
            UnlabeledGram::OnDemand { .. } => None,
        }
    }

    pub fn y_labeled(&self) -> &[f64] {
        &self.y_labeled
    }

    pub fn diag_uu(&self) -> &[f64] {
        &self.diag_uu
    }

    pub fn rowsum_uu(&self) -> &[f64] {
        &self.rowsum_uu
    }

    pub fn ylabelsum_lu(&self) -> &[f64] {
        &self.ylabelsum_lu
    }

    pub fn uu(&self, j: usize, j2: usize) -> f64 {
        match &self.k_uu {
            UnlabeledGram::Dense(k) => k[(j, j2)],
            UnlabeledGram::OnDemand { points, spec } => spec.eval(&points[j], &points[j2]),
        }
    }

    /// Row `j` of `K_uu`; borrowed when dense, computed otherwise.
    pub fn uu_row(&self, j: usize) -> Cow<'_, [f64]> {
        match &self.k_uu {
            UnlabeledGram::Dense(k) => Cow::Borrowed(k.row(j)),
            UnlabeledGram::OnDemand { points, spec } => {
                let x = &points[j];
                Cow::Owned(points.iter().map(|x2| spec.eval(x, x2)).collect())
            }
        }
    }

    /// `K_uu v`
    pub fn uu_mul(&self, v: &[f64]) -> Vec<f64> {
        match &self.k_uu {
            UnlabeledGram::Dense(k) => {
                (0..k.rows()).into_par_iter().map(|j| crate::linalg::dot(k.row(j), v)).collect()
            }
            UnlabeledGram::OnDemand { .. } => (0..self.n_unlabeled())
                .into_par_iter()
                .map(|j| crate::linalg::dot(&self.uu_row(j), v))
                .collect(),
        }
    }

    /// `u' K_uu v`
    pub fn uu_quad(&self, u: &[f64], v: &[f64]) -> f64 {
        crate::linalg::dot(u, &self.uu_mul(v))
    }

    /// Materializes an on-demand `K_uu`.
    pub fn to_dense(&self) -> KernelBlocks {
        let mut out = self.clone();
        if let UnlabeledGram::OnDemand { points, spec } = &self.k_uu {
            let refs: Vec<&SparseVector> = points.iter().collect();
            out.k_uu = UnlabeledGram::Dense(gram(spec, &refs, &refs));
        }
        out
    }

    /// Serializes dense blocks: magic, version, `|L|`, `|U|`, kernel digest,
    /// `d`, labels, then `K_ll`, `K_lu`, `K_uu` as little-endian `f64`, row-major.
    pub fn write_cache<W: Write>(&self, mut out: W) -> Result<()> {
        let Some(k_uu) = self.k_uu_dense() else {
            return Err(Error::Cache("only dense blocks can be cached".into()));
        };
        out.write_all(CACHE_MAGIC)?;
        out.write_all(&CACHE_VERSION.to_le_bytes())?;
        out.write_all(&(self.n_labeled() as u64).to_le_bytes())?;
        out.write_all(&(self.n_unlabeled() as u64).to_le_bytes())?;
        out.write_all(&self.spec.map_or(0, |s| s.digest()).to_le_bytes())?;
        out.write_all(&self.d.to_le_bytes())?;
        for v in self
            .y_labeled
            .iter()
            .chain(self.k_ll.as_slice())
            .chain(self.k_lu.as_slice())
            .chain(k_uu.as_slice())
        {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads blocks written by [`KernelBlocks::write_cache`]; the stored digest
    /// must match `spec`. Cached sums are recomputed.
    pub fn read_cache<R: Read>(mut input: R, spec: &KernelSpec) -> Result<KernelBlocks> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != CACHE_MAGIC {
            return Err(Error::Cache("bad magic".into()));
        }
        let mut b4 = [0u8; 4];
        input.read_exact(&mut b4)?;
        if u32::from_le_bytes(b4) != CACHE_VERSION {
            return Err(Error::Cache("unsupported version".into()));
        }
        let read_u64 = |input: &mut R| -> Result<u64> {
            let mut b = [0u8; 8];
            input.read_exact(&mut b)?;
            Ok(u64::from_le_bytes(b))
        };
        let nl = read_u64(&mut input)? as usize;
        let nu = read_u64(&mut input)? as usize;
        let digest = read_u64(&mut input)?;
        if digest != spec.digest() {
            return Err(Error::Cache("kernel specification does not match the cache".into()));
        }
        let d = f64::from_bits(read_u64(&mut input)?);
        let mut floats = |n: usize| -> Result<Vec<f64>> {
            let mut buf = vec![0u8; n * 8];
            input.read_exact(&mut buf)?;
            Ok(buf
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect())
        };
        let y = floats(nl)?;
        let k_ll = DenseMatrix::from_row_major(nl, nl, floats(nl * nl)?);
        let k_lu = DenseMatrix::from_row_major(nl, nu, floats(nl * nu)?);
        let k_uu = DenseMatrix::from_row_major(nu, nu, floats(nu * nu)?);
        let mut blocks = KernelBlocks::from_parts(k_ll, k_lu, k_uu, y, d)?;
        blocks.spec = Some(*spec);
        Ok(blocks)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{make_split, Label, SplitSpec};

    fn v(x: &[f64]) -> SparseVector {
        SparseVector::from_dense(x)
    }

    #[test]
    fn kernel_values() {
        assert_eq!(KernelSpec::linear().eval(&v(&[1.0, 0.0]), &v(&[1.0, 1.0])), 1.0);
        let rbf = KernelSpec::rbf(0.7).unwrap();
        assert_eq!(rbf.eval(&v(&[0.3, 2.0]), &v(&[0.3, 2.0])), 1.0);
        let unit = KernelSpec::rbf(1.0).unwrap();
        let k = unit.eval(&v(&[0.0]), &v(&[1.0]));
        assert!((k - 0.36787944117144233).abs() < 1e-15);
        assert!(KernelSpec::rbf(0.0).is_err());
        assert!(KernelSpec::rbf(1.0).unwrap().with_d_override(2.0).is_err());
    }

    fn three_samples() -> Dataset {
        let samples = vec![v(&[0.0, 1.0]), v(&[1.0, 0.5]), v(&[0.5, 0.5])];
        let labels = vec![Label::Positive, Label::Negative, Label::Positive];
        Dataset::new(samples, labels).unwrap()
    }

    #[test]
    fn block_shapes_and_bounds() {
        let d = three_samples();
        let split = make_split(
            &d,
            &SplitSpec {
                n_labeled: 2,
                seed: 0,
                stratified: false,
            },
        )
        .unwrap()
        .with_partition(vec![0]);
        let b = build_blocks(&split, &KernelSpec::linear()).unwrap();
        assert_eq!((b.k_lu().rows(), b.k_lu().cols()), (1, 2));
        assert_eq!(b.k_uu_dense().map(|k| (k.rows(), k.cols())), Some((2, 2)));
        assert_eq!(b.d(), 2.0);
        let rbf = build_blocks(&split, &KernelSpec::rbf(0.5).unwrap()).unwrap();
        assert_eq!(rbf.d(), 1.0);
        assert!(rbf.diag_uu().iter().all(|&k| k == 1.0));
    }

    #[test]
    fn sparse_linear_bound_uses_mean_nonzeros() {
        let samples = (0..10)
            .map(|i| SparseVector::new(vec![(i + 1, 1.0)]).unwrap())
            .collect::<Vec<_>>();
        let labels = (0..10)
            .map(|i| if i % 2 == 0 { Label::Positive } else { Label::Negative })
            .collect();
        let d = Dataset::new(samples, labels).unwrap().with_partition(vec![0, 1]);
        assert_eq!(kernel_bound(&d, &KernelSpec::linear()), 1.0);
        assert!(build_blocks(&d, &KernelSpec::linear()).is_ok());
    }

    #[test]
    fn entries_above_the_bound_need_an_override() {
        // Sparse data where one sample carries far more mass than the mean.
        let mut samples = vec![v(&[1.0, 1.0, 1.0, 1.0, 1.0, 1.0])];
        for i in 0..9 {
            samples.push(SparseVector::new(vec![(i % 6 + 1, 1.0)]).unwrap());
        }
        let labels = (0..10)
            .map(|i| if i % 2 == 0 { Label::Positive } else { Label::Negative })
            .collect();
        let d = Dataset::new(samples, labels).unwrap().with_partition(vec![1, 2]);
        assert!(matches!(build_blocks(&d, &KernelSpec::linear()), Err(Error::KernelBound { .. })));
        let spec = KernelSpec::linear().with_d_override(6.0).unwrap();
        assert!(build_blocks(&d, &spec).is_ok());
        assert!(matches!(
            build_blocks_with_mode(&d, &KernelSpec::linear(), GramMode::OnDemand),
            Err(Error::KernelBound { .. })
        ));
    }

    #[test]
    fn on_demand_matches_dense() {
        let samples: Vec<SparseVector> = (0..30)
            .map(|i| {
                let t = i as f64 / 30.0;
                v(&[t, (1.0 - t) * 0.5, (t * 7.0).fract()])
            })
            .collect();
        let labels = (0..30)
            .map(|i| if i % 3 == 0 { Label::Positive } else { Label::Negative })
            .collect();
        let d = Dataset::new(samples, labels).unwrap().with_partition(vec![0, 1, 3]);
        for spec in [KernelSpec::linear(), KernelSpec::rbf(2.0).unwrap()] {
            let dense = build_blocks(&d, &spec).unwrap();
            let lazy = build_blocks_with_mode(&d, &spec, GramMode::OnDemand).unwrap();
            assert!(!lazy.is_dense());
            for j in 0..dense.n_unlabeled() {
                assert!((dense.rowsum_uu()[j] - lazy.rowsum_uu()[j]).abs() < 1e-12);
                assert_eq!(dense.uu_row(j).as_ref(), lazy.uu_row(j).as_ref());
            }
            let k = lazy.to_dense();
            assert_eq!(k.k_uu_dense(), dense.k_uu_dense());
        }
    }

    #[test]
    fn cache_round_trip() {
        let d = three_samples().with_partition(vec![0, 1]);
        let spec = KernelSpec::rbf(1.5).unwrap();
        let b = build_blocks(&d, &spec).unwrap();
        let mut buf = Vec::new();
        b.write_cache(&mut buf).unwrap();
        assert_eq!(&buf[..8], b"QPS3KBLK");
        assert_eq!(buf.len(), 8 + 4 + 8 * 4 + 8 * (2 + 4 + 2 + 1));
        let back = KernelBlocks::read_cache(buf.as_slice(), &spec).unwrap();
        assert_eq!(back.k_uu_dense(), b.k_uu_dense());
        assert_eq!(back.k_lu(), b.k_lu());
        assert_eq!(back.ylabelsum_lu(), b.ylabelsum_lu());
        let other = KernelSpec::rbf(1.0).unwrap();
        assert!(matches!(KernelBlocks::read_cache(buf.as_slice(), &other), Err(Error::Cache(_))));
    }

    #[test]
    fn from_parts_validates() {
        let ok = KernelBlocks::from_parts(
            DenseMatrix::from_row_major(1, 1, vec![1.0]),
            DenseMatrix::from_row_major(1, 1, vec![0.5]),
            DenseMatrix::from_row_major(1, 1, vec![1.0]),
            vec![1.0],
            1.0,
        );
        assert!(ok.is_ok());
        let asym = KernelBlocks::from_parts(
            DenseMatrix::from_row_major(1, 1, vec![1.0]),
            DenseMatrix::from_row_major(1, 2, vec![0.5, 0.5]),
            DenseMatrix::from_row_major(2, 2, vec![1.0, 0.5, 0.4, 1.0]),
            vec![1.0],
            1.0,
        );
        assert!(asym.is_err());
        let above = KernelBlocks::from_parts(
            DenseMatrix::from_row_major(1, 1, vec![1.0]),
            DenseMatrix::from_row_major(1, 1, vec![1.5]),
            DenseMatrix::from_row_major(1, 1, vec![1.0]),
            vec![1.0],
            1.0,
        );
        assert!(matches!(above, Err(Error::KernelBound { .. })));
    }
}
