use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{abs2, cr, Cplx, Real};

use super::basis::BasisDescriptor;

/// Below this dimension operators are stored densely.
pub const DENSE_THRESHOLD: usize = 64;

#[derive(Debug, Clone, PartialEq)]
struct Csr<T> {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Cplx<T>>,
}

#[derive(Debug, Clone, PartialEq)]
enum Repr<T> {
    Dense(Vec<Cplx<T>>),
    Sparse(Csr<T>),
}

/// Complex square matrix acting on a [`BasisDescriptor`] space.
///
/// Compressed sparse rows above [`DENSE_THRESHOLD`], row-major dense below.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator<T: Real> {
    basis: BasisDescriptor,
    repr: Repr<T>,
}

impl<T: Real> Operator<T> {
    /// Build from `(row, col, value)` entries. Duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(
        basis: BasisDescriptor,
        mut entries: Vec<(usize, usize, Cplx<T>)>,
    ) -> Result<Self> {
        let dim = basis.dim();
        if let Some(&(r, c, _)) = entries.iter().find(|(r, c, _)| *r >= dim || *c >= dim) {
            return Err(Error::IndexOutOfRange {
                what: "matrix entry",
                index: r.max(c),
                count: dim,
            });
        }
        entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let zero = cr(T::zero());
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut vals: Vec<Cplx<T>> = Vec::with_capacity(entries.len());
        let mut rows = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            if rows.last() == Some(&r) && cols.last() == Some(&c) {
                *vals.last_mut().expect("nonempty") += v;
            } else {
                rows.push(r);
                cols.push(c);
                vals.push(v);
            }
        }
        let mut keep_cols = Vec::with_capacity(cols.len());
        let mut keep_vals = Vec::with_capacity(vals.len());
        for ((r, c), v) in rows.into_iter().zip(cols).zip(vals) {
            if v != zero {
                row_ptr[r + 1] += 1;
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        let csr = Csr {
            row_ptr,
            cols: keep_cols,
            vals: keep_vals,
        };
        Ok(Self::from_csr(basis, csr))
    }

    fn from_csr(basis: BasisDescriptor, csr: Csr<T>) -> Self {
        let dim = basis.dim();
        let repr = if dim < DENSE_THRESHOLD {
            let mut m = vec![cr(T::zero()); dim * dim];
            for i in 0..dim {
                for k in csr.row_ptr[i]..csr.row_ptr[i + 1] {
                    m[i * dim + csr.cols[k]] = csr.vals[k];
                }
            }
            Repr::Dense(m)
        } else {
            Repr::Sparse(csr)
        };
        Operator { basis, repr }
    }

    /// Build from a row-major dense matrix; stored sparse when large.
    pub fn from_dense(basis: BasisDescriptor, m: Vec<Cplx<T>>) -> Result<Self> {
        let dim = basis.dim();
        if m.len() != dim * dim {
            return Err(Error::LengthMismatch {
                what: "dense matrix",
                expected: dim * dim,
                got: m.len(),
            });
        }
        if dim < DENSE_THRESHOLD {
            return Ok(Operator {
                basis,
                repr: Repr::Dense(m),
            });
        }
        let zero = cr(T::zero());
        let entries = m
            .into_iter()
            .enumerate()
            .filter(|(_, v)| *v != zero)
            .map(|(k, v)| (k / dim, k % dim, v))
            .collect();
        Self::from_triplets(basis, entries)
    }

    pub fn zeros(basis: BasisDescriptor) -> Self {
        Self::from_triplets(basis, Vec::new()).expect("empty operator")
    }

    pub fn identity(basis: BasisDescriptor) -> Self {
        let entries = (0..basis.dim()).map(|i| (i, i, cr(T::one()))).collect();
        Self::from_triplets(basis, entries).expect("diagonal in range")
    }

    /// Lift a single-factor matrix (row-major, size of that factor) to the
    /// full space with identities on every other factor.
    pub fn embed(basis: BasisDescriptor, factor: usize, local: &[Cplx<T>]) -> Result<Self> {
        let dims = basis.factor_dims();
        if factor >= dims.len() {
            return Err(Error::IndexOutOfRange {
                what: "tensor factor",
                index: factor,
                count: dims.len(),
            });
        }
        let d = dims[factor];
        if local.len() != d * d {
            return Err(Error::LengthMismatch {
                what: "local factor matrix",
                expected: d * d,
                got: local.len(),
            });
        }
        let stride = basis.strides()[factor];
        let zero = cr(T::zero());
        let local_nz: Vec<(usize, usize, Cplx<T>)> = (0..d * d)
            .filter(|&k| local[k] != zero)
            .map(|k| (k / d, k % d, local[k]))
            .collect();
        let mut entries = Vec::with_capacity(basis.dim() / d * local_nz.len());
        for i in 0..basis.dim() {
            let digit = (i / stride) % d;
            let base = i - digit * stride;
            for &(r, c, v) in local_nz.iter().filter(|e| e.0 == digit) {
                debug_assert_eq!(r, digit);
                entries.push((i, base + c * stride, v));
            }
        }
        Self::from_triplets(basis, entries)
    }

    pub fn basis(&self) -> &BasisDescriptor {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.repr, Repr::Dense(_))
    }

    /// Number of stored nonzero entries.
    pub fn nnz(&self) -> usize {
        match &self.repr {
            Repr::Dense(m) => m.iter().filter(|z| **z != cr(T::zero())).count(),
            Repr::Sparse(s) => s.vals.len(),
        }
    }

    pub fn get(&self, row: usize, col: usize) -> Cplx<T> {
        let dim = self.dim();
        assert!(row < dim && col < dim, "operator index out of range");
        match &self.repr {
            Repr::Dense(m) => m[row * dim + col],
            Repr::Sparse(s) => {
                let lo = s.row_ptr[row];
                let hi = s.row_ptr[row + 1];
                match s.cols[lo..hi].binary_search(&col) {
                    Ok(k) => s.vals[lo + k],
                    Err(_) => cr(T::zero()),
                }
            }
        }
    }

    /// Nonzero entries in row-major order.
    pub fn triplets(&self) -> Vec<(usize, usize, Cplx<T>)> {
        let dim = self.dim();
        match &self.repr {
            Repr::Dense(m) => m
                .iter()
                .enumerate()
                .filter(|(_, z)| **z != cr(T::zero()))
                .map(|(k, z)| (k / dim, k % dim, *z))
                .collect(),
            Repr::Sparse(s) => (0..dim)
                .flat_map(|i| (s.row_ptr[i]..s.row_ptr[i + 1]).map(move |k| (i, k)))
                .map(|(i, k)| (i, s.cols[k], s.vals[k]))
                .collect(),
        }
    }

    pub fn to_dense(&self) -> Vec<Cplx<T>> {
        match &self.repr {
            Repr::Dense(m) => m.clone(),
            Repr::Sparse(_) => {
                let dim = self.dim();
                let mut m = vec![cr(T::zero()); dim * dim];
                for (r, c, v) in self.triplets() {
                    m[r * dim + c] = v;
                }
                m
            }
        }
    }

    /// `y += coef · O x`.
    pub fn apply_add(&self, coef: Cplx<T>, x: &[Cplx<T>], y: &mut [Cplx<T>]) {
        let dim = self.dim();
        assert!(x.len() == dim && y.len() == dim, "vector length mismatch");
        match &self.repr {
            Repr::Dense(m) => {
                for (i, yi) in y.iter_mut().enumerate() {
                    let row = &m[i * dim..(i + 1) * dim];
                    let mut acc = cr(T::zero());
                    for (a, b) in row.iter().zip(x) {
                        acc += *a * *b;
                    }
                    *yi += coef * acc;
                }
            }
            Repr::Sparse(s) => {
                for (i, yi) in y.iter_mut().enumerate() {
                    let mut acc = cr(T::zero());
                    for k in s.row_ptr[i]..s.row_ptr[i + 1] {
                        acc += s.vals[k] * x[s.cols[k]];
                    }
                    *yi += coef * acc;
                }
            }
        }
    }

    /// `O x` as a new vector.
    pub fn apply(&self, x: &[Cplx<T>]) -> Vec<Cplx<T>> {
        let mut y = vec![cr(T::zero()); self.dim()];
        self.apply_add(cr(T::one()), x, &mut y);
        y
    }

    pub fn adjoint(&self) -> Self {
        let entries = self
            .triplets()
            .into_iter()
            .map(|(r, c, v)| (c, r, v.conj()))
            .collect();
        Self::from_triplets(self.basis.clone(), entries).expect("same shape")
    }

    pub fn scale(&self, coef: Cplx<T>) -> Self {
        let entries = self
            .triplets()
            .into_iter()
            .map(|(r, c, v)| (r, c, v * coef))
            .collect();
        Self::from_triplets(self.basis.clone(), entries).expect("same shape")
    }

    /// `Σ c_k O_k` over operators sharing one basis.
    pub fn linear_combination(terms: &[(Cplx<T>, &Operator<T>)]) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::Degenerate("empty linear combination".into()))?;
        let basis = first.1.basis.clone();
        let mut entries = Vec::new();
        for (coef, op) in terms {
            basis.ensure_same(&op.basis)?;
            entries.extend(op.triplets().into_iter().map(|(r, c, v)| (r, c, v * *coef)));
        }
        Self::from_triplets(basis, entries)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Self::linear_combination(&[(cr(T::one()), self), (cr(T::one()), other)])
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Self::linear_combination(&[(cr(T::one()), self), (cr(-T::one()), other)])
    }

    /// Matrix product `self · other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.basis.ensure_same(&other.basis)?;
        let dim = self.dim();
        if let (Repr::Dense(a), Repr::Dense(b)) = (&self.repr, &other.repr) {
            return Ok(Operator {
                basis: self.basis.clone(),
                repr: Repr::Dense(linalg::matmul(dim, a, b)),
            });
        }
        let b_rows = other.rows();
        let mut entries = Vec::new();
        let mut acc = vec![cr(T::zero()); dim];
        let mut touched = Vec::new();
        let mut mark = vec![false; dim];
        for (i, row) in self.rows().into_iter().enumerate() {
            for (k, a) in row {
                for &(j, b) in &b_rows[k] {
                    if !mark[j] {
                        mark[j] = true;
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            for &j in &touched {
                entries.push((i, j, acc[j]));
                acc[j] = cr(T::zero());
                mark[j] = false;
            }
            touched.clear();
        }
        Self::from_triplets(self.basis.clone(), entries)
    }

    fn rows(&self) -> Vec<Vec<(usize, Cplx<T>)>> {
        let mut rows = vec![Vec::new(); self.dim()];
        for (r, c, v) in self.triplets() {
            rows[r].push((c, v));
        }
        rows
    }

    /// `[A, B] = AB − BA`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.matmul(other)?.sub(&other.matmul(self)?)
    }

    /// Kronecker product `self ⊗ other`.
    ///
    /// The combined layout must remain spins-first, so either `self` carries
    /// no bosonic modes or `other` carries no spins.
    pub fn kron(&self, other: &Self) -> Result<Self> {
        let (a, b) = (&self.basis, &other.basis);
        if a.num_modes() > 0 && b.num_spins() > 0 {
            return Err(Error::InvalidBasis(
                "Kronecker product would place a spin after a mode".into(),
            ));
        }
        let mut fock = a.fock_dims().to_vec();
        fock.extend_from_slice(b.fock_dims());
        let mut labels = a.mode_labels().to_vec();
        labels.extend_from_slice(b.mode_labels());
        let basis = BasisDescriptor::new(a.num_spins() + b.num_spins(), fock, labels)?;
        let db = other.dim();
        let tb = other.triplets();
        let mut entries = Vec::new();
        for (ra, ca, va) in self.triplets() {
            for &(rb, cb, vb) in &tb {
                entries.push((ra * db + rb, ca * db + cb, va * vb));
            }
        }
        Self::from_triplets(basis, entries)
    }

    /// Largest `|O_ij − conj(O_ji)|`.
    pub fn hermiticity_defect(&self) -> T {
        let adj = self.adjoint();
        self.max_abs_diff(&adj).expect("same basis")
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// Largest entrywise deviation between two operators.
    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        self.basis.ensure_same(&other.basis)?;
        let d = self.sub(other)?;
        Ok(d.triplets()
            .into_iter()
            .map(|(_, _, v)| abs2(v).sqrt())
            .fold(T::zero(), T::max))
    }

    /// Largest entrywise deviation restricted to rows and columns where
    /// every Fock digit is at most `n_cut`.
    pub fn max_abs_diff_low_occupation(&self, other: &Self, n_cut: usize) -> Result<T> {
        self.basis.ensure_same(&other.basis)?;
        let ns = self.basis.num_spins();
        let low = |i: usize| self.basis.digits(i)[ns..].iter().all(|&d| d <= n_cut);
        let d = self.sub(other)?;
        Ok(d.triplets()
            .into_iter()
            .filter(|(r, c, _)| low(*r) && low(*c))
            .map(|(_, _, v)| abs2(v).sqrt())
            .fold(T::zero(), T::max))
    }
}
