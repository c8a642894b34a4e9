//! Exact integer matrix algebra: Smith and Hermite normal forms, kernels,
//! cokernel invariants, lattice membership and preimages.
//!
//! All entries are arbitrary-precision integers; fixed-width arithmetic is
//! deliberately absent so elimination can never overflow silently. Matrices
//! are sparse, stored row-major with no explicit zeros.
//!
//! Orientation convention used throughout the crate: a matrix `A` acts on
//! column vectors, `colspan(A)` is the lattice generated by its columns, and
//! `cokernel_invariants` quotients by the lattice generated by *rows* (the
//! natural shape for relation matrices). A canary test pins the convention.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::{bi, Error, Result};

/// Sparse integer matrix. Rows hold only nonzero entries.
#[derive(Clone, PartialEq, Eq)]
pub struct IntMat {
    rows: usize,
    cols: usize,
    data: Vec<BTreeMap<usize, BigInt>>,
}

impl IntMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMat { rows, cols, data: vec![BTreeMap::new(); rows] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMat::zeros(n, n);
        for i in 0..n {
            m.data[i].insert(i, BigInt::one());
        }
        m
    }

    /// Build from dense i64 rows; test and small-construction helper.
    pub fn from_rows(cols: usize, rows: &[Vec<i64>]) -> Self {
        let mut m = IntMat::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "row length mismatch");
            for (j, &v) in r.iter().enumerate() {
                if v != 0 {
                    m.data[i].insert(j, bi(v));
                }
            }
        }
        m
    }

    pub fn from_columns(rows: usize, cols: &[Vec<BigInt>]) -> Self {
        let mut m = IntMat::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.len(), rows, "column length mismatch");
            for (i, v) in c.iter().enumerate() {
                if !v.is_zero() {
                    m.data[i].insert(j, v.clone());
                }
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> BigInt {
        self.data[i].get(&j).cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        assert!(i < self.rows && j < self.cols, "index out of range");
        if v.is_zero() {
            self.data[i].remove(&j);
        } else {
            self.data[i].insert(j, v);
        }
    }

    pub fn nnz(&self) -> usize {
        self.data.iter().map(|r| r.len()).sum()
    }

    pub fn is_zero_matrix(&self) -> bool {
        self.data.iter().all(|r| r.is_empty())
    }

    /// Iterate nonzero entries of one row in column order.
    pub fn row_entries(&self, i: usize) -> impl Iterator<Item = (usize, &BigInt)> {
        self.data[i].iter().map(|(j, v)| (*j, v))
    }

    pub fn column(&self, j: usize) -> Vec<BigInt> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn row(&self, i: usize) -> Vec<BigInt> {
        let mut out = vec![BigInt::zero(); self.cols];
        for (j, v) in &self.data[i] {
            out[*j] = v.clone();
        }
        out
    }

    pub fn transpose(&self) -> IntMat {
        let mut t = IntMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for (j, v) in &self.data[i] {
                t.data[*j].insert(i, v.clone());
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMat) -> IntMat {
        assert_eq!(self.cols, other.rows, "product shape mismatch");
        let mut out = IntMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let mut acc: BTreeMap<usize, BigInt> = BTreeMap::new();
            for (l, a) in &self.data[i] {
                for (j, b) in &other.data[*l] {
                    let e = acc.entry(*j).or_insert_with(BigInt::zero);
                    *e += a * b;
                }
            }
            acc.retain(|_, v| !v.is_zero());
            out.data[i] = acc;
        }
        out
    }

    pub fn mul_vec(&self, x: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(self.cols, x.len(), "matrix-vector shape mismatch");
        let mut out = vec![BigInt::zero(); self.rows];
        for i in 0..self.rows {
            let mut acc = BigInt::zero();
            for (j, v) in &self.data[i] {
                acc += v * &x[*j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn add(&self, other: &IntMat) -> IntMat {
        assert!(self.rows == other.rows && self.cols == other.cols, "sum shape mismatch");
        let mut out = self.clone();
        for i in 0..self.rows {
            for (j, v) in &other.data[i] {
                let e = out.data[i].entry(*j).or_insert_with(BigInt::zero);
                *e += v;
            }
            out.data[i].retain(|_, v| !v.is_zero());
        }
        out
    }

    pub fn sub(&self, other: &IntMat) -> IntMat {
        self.add(&other.scale(&bi(-1)))
    }

    pub fn scale(&self, c: &BigInt) -> IntMat {
        if c.is_zero() {
            return IntMat::zeros(self.rows, self.cols);
        }
        let mut out = self.clone();
        for r in &mut out.data {
            for v in r.values_mut() {
                *v *= c;
            }
        }
        out
    }

    /// Kronecker product; index flattening is first-factor-major, so basis
    /// element (i1, i2) of the product sits at i1 * other.rows + i2.
    pub fn kron(&self, other: &IntMat) -> IntMat {
        let mut out = IntMat::zeros(self.rows * other.rows, self.cols * other.cols);
        for i1 in 0..self.rows {
            for (j1, a) in &self.data[i1] {
                for i2 in 0..other.rows {
                    for (j2, b) in &other.data[i2] {
                        out.data[i1 * other.rows + i2]
                            .insert(j1 * other.cols + j2, a * b);
                    }
                }
            }
        }
        out
    }

    pub fn hstack(parts: &[&IntMat]) -> IntMat {
        assert!(!parts.is_empty());
        let rows = parts[0].rows;
        assert!(parts.iter().all(|p| p.rows == rows), "hstack row mismatch");
        let cols = parts.iter().map(|p| p.cols).sum();
        let mut out = IntMat::zeros(rows, cols);
        let mut off = 0;
        for p in parts {
            for i in 0..rows {
                for (j, v) in &p.data[i] {
                    out.data[i].insert(off + j, v.clone());
                }
            }
            off += p.cols;
        }
        out
    }

    pub fn vstack(parts: &[&IntMat]) -> IntMat {
        assert!(!parts.is_empty());
        let cols = parts[0].cols;
        assert!(parts.iter().all(|p| p.cols == cols), "vstack column mismatch");
        let rows = parts.iter().map(|p| p.rows).sum();
        let mut out = IntMat::zeros(rows, cols);
        let mut off = 0;
        for p in parts {
            for i in 0..p.rows {
                out.data[off + i] = p.data[i].clone();
            }
            off += p.rows;
        }
        out
    }

    pub fn take_columns(&self, idx: &[usize]) -> IntMat {
        let cols: Vec<Vec<BigInt>> = idx.iter().map(|&j| self.column(j)).collect();
        IntMat::from_columns(self.rows, &cols)
    }

    pub fn take_rows(&self, idx: &[usize]) -> IntMat {
        let mut out = IntMat::zeros(idx.len(), self.cols);
        for (i, &k) in idx.iter().enumerate() {
            out.data[i] = self.data[k].clone();
        }
        out
    }

    pub fn to_dense(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j)).collect())
            .collect()
    }
}

impl fmt::Debug for IntMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "IntMat {}x{} [", self.rows, self.cols)?;
        if self.rows <= 24 && self.cols <= 24 {
            for i in 0..self.rows {
                let row: Vec<String> = (0..self.cols).map(|j| self.get(i, j).to_string()).collect();
                writeln!(f, "  [{}]", row.join(", "))?;
            }
        } else {
            writeln!(f, "  nnz = {}", self.nnz())?;
        }
        write!(f, "]")
    }
}

/// Invariant-factor description of a finitely generated abelian group:
/// free rank plus a divisibility chain of torsion factors, each at least 2.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AbInvariants {
    pub free_rank: usize,
    pub torsion: Vec<BigInt>,
}

impl AbInvariants {
    pub fn trivial() -> Self {
        AbInvariants { free_rank: 0, torsion: Vec::new() }
    }

    pub fn free(rank: usize) -> Self {
        AbInvariants { free_rank: rank, torsion: Vec::new() }
    }

    pub fn is_trivial(&self) -> bool {
        self.free_rank == 0 && self.torsion.is_empty()
    }

    /// Build from an SNF diagonal over an ambient of `cols` generators.
    fn from_diag(diag: &[BigInt], cols: usize) -> Self {
        let rank = diag.iter().filter(|d| !d.is_zero()).count();
        let torsion: Vec<BigInt> =
            diag.iter().filter(|d| !d.is_zero() && !d.is_one()).cloned().collect();
        AbInvariants { free_rank: cols - rank, torsion }
    }
}

impl fmt::Display for AbInvariants {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_trivial() {
            return write!(f, "0");
        }
        let mut parts: Vec<String> = Vec::new();
        if self.free_rank == 1 {
            parts.push("Z".to_string());
        } else if self.free_rank > 1 {
            parts.push(format!("Z^{}", self.free_rank));
        }
        let mut i = 0;
        while i < self.torsion.len() {
            let d = &self.torsion[i];
            let mut k = 1;
            while i + k < self.torsion.len() && &self.torsion[i + k] == d {
                k += 1;
            }
            if k == 1 {
                parts.push(format!("Z/{}", d));
            } else {
                parts.push(format!("(Z/{})^{}", d, k));
            }
            i += k;
        }
        write!(f, "{}", parts.join(" + "))
    }
}

/// Smith normal form U * A * V = D with unimodular U, V. The diagonal is
/// nonnegative, satisfies d1 | d2 | ..., and zero entries trail. The
/// factorization is recomputed at construction; a SmithForm that fails its
/// own equation cannot exist.
pub struct SmithForm {
    pub u: IntMat,
    pub v: IntMat,
    pub u_inv: IntMat,
    pub v_inv: IntMat,
    pub diag: Vec<BigInt>,
    pub rank: usize,
}

/// Line-oriented sparse store used for the transform mirrors of the SNF
/// engine; `lines[k]` is row k or column k depending on orientation.
struct Lines {
    lines: Vec<BTreeMap<usize, BigInt>>,
}

impl Lines {
    fn identity(n: usize) -> Self {
        let mut lines = vec![BTreeMap::new(); n];
        for (i, l) in lines.iter_mut().enumerate() {
            l.insert(i, BigInt::one());
        }
        Lines { lines }
    }

    fn swap(&mut self, i: usize, j: usize) {
        self.lines.swap(i, j);
    }

    fn negate(&mut self, i: usize) {
        for v in self.lines[i].values_mut() {
            *v = -&*v;
        }
    }

    /// line_i += c * line_j
    fn addmul(&mut self, i: usize, j: usize, c: &BigInt) {
        if c.is_zero() {
            return;
        }
        let src: Vec<(usize, BigInt)> =
            self.lines[j].iter().map(|(k, v)| (*k, v.clone())).collect();
        for (k, v) in src {
            let e = self.lines[i].entry(k).or_insert_with(BigInt::zero);
            *e += c * &v;
            if e.is_zero() {
                self.lines[i].remove(&k);
            }
        }
    }

    /// (line_i, line_j) <- (a*line_i + b*line_j, c*line_i + d*line_j)
    fn pair(&mut self, i: usize, j: usize, a: &BigInt, b: &BigInt, c: &BigInt, d: &BigInt) {
        let keys: BTreeSet<usize> =
            self.lines[i].keys().chain(self.lines[j].keys()).copied().collect();
        for k in keys {
            let vi = self.lines[i].get(&k).cloned().unwrap_or_else(BigInt::zero);
            let vj = self.lines[j].get(&k).cloned().unwrap_or_else(BigInt::zero);
            let ni = a * &vi + b * &vj;
            let nj = c * &vi + d * &vj;
            if ni.is_zero() { self.lines[i].remove(&k); } else { self.lines[i].insert(k, ni); }
            if nj.is_zero() { self.lines[j].remove(&k); } else { self.lines[j].insert(k, nj); }
        }
    }

    /// Interpreting lines as rows of an n x width matrix.
    fn to_mat_rows(&self, width: usize) -> IntMat {
        let mut m = IntMat::zeros(self.lines.len(), width);
        for (i, l) in self.lines.iter().enumerate() {
            m.data[i] = l.clone();
        }
        m
    }

    /// Interpreting lines as columns of a height x n matrix.
    fn to_mat_cols(&self, height: usize) -> IntMat {
        let mut m = IntMat::zeros(height, self.lines.len());
        for (j, l) in self.lines.iter().enumerate() {
            for (i, v) in l {
                m.data[*i].insert(j, v.clone());
            }
        }
        m
    }
}

/// Elimination engine shared by SNF entry points. Transform tracking is
/// optional so invariant-factor-only callers avoid the bookkeeping cost.
struct SnfEngine {
    r: usize,
    c: usize,
    mat: Vec<BTreeMap<usize, BigInt>>,
    rows_of_col: Vec<BTreeSet<usize>>,
    // U acts by rows, its inverse is kept by columns; V by columns, its
    // inverse by rows. Mirrors of every elementary operation.
    u: Option<Lines>,
    u_inv: Option<Lines>,
    v: Option<Lines>,
    v_inv: Option<Lines>,
}

/// Division with remainder rounded to nearest: a = q*p + r, |r| <= |p|/2.
fn div_balanced(a: &BigInt, p: &BigInt) -> (BigInt, BigInt) {
    let (mut q, mut r) = a.div_mod_floor(p);
    if (&r + &r).abs() > p.abs() {
        q += 1;
        r -= p;
    }
    (q, r)
}

/// g = gcd(p, a) > 0 together with the smallest Bezout pair s*p + u*a = g.
/// Minimizing s (and with it u) keeps the 2x2 cross transforms from
/// inflating entries any more than the gcd structure forces.
fn bezout(p: &BigInt, a: &BigInt) -> (BigInt, BigInt, BigInt) {
    let e = p.extended_gcd(a);
    let (mut g, mut s, mut u) = (e.gcd, e.x, e.y);
    if g.is_negative() {
        g = -g;
        s = -s;
        u = -u;
    }
    let ag = a / &g;
    if !ag.is_zero() {
        let (k, _) = div_balanced(&s, &ag);
        if !k.is_zero() {
            s -= &k * &ag;
            u += &k * (p / &g);
        }
    }
    (g, s, u)
}

impl SnfEngine {
    fn new(a: &IntMat, track_u: bool, track_v: bool) -> Self {
        let mut rows_of_col = vec![BTreeSet::new(); a.cols];
        for i in 0..a.rows {
            for j in a.data[i].keys() {
                rows_of_col[*j].insert(i);
            }
        }
        SnfEngine {
            r: a.rows,
            c: a.cols,
            mat: a.data.clone(),
            rows_of_col,
            u: track_u.then(|| Lines::identity(a.rows)),
            u_inv: track_u.then(|| Lines::identity(a.rows)),
            v: track_v.then(|| Lines::identity(a.cols)),
            v_inv: track_v.then(|| Lines::identity(a.cols)),
        }
    }

    fn row_swap(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        let cols: BTreeSet<usize> =
            self.mat[i].keys().chain(self.mat[j].keys()).copied().collect();
        self.mat.swap(i, j);
        for col in cols {
            let si = self.mat[i].contains_key(&col);
            let sj = self.mat[j].contains_key(&col);
            if si { self.rows_of_col[col].insert(i); } else { self.rows_of_col[col].remove(&i); }
            if sj { self.rows_of_col[col].insert(j); } else { self.rows_of_col[col].remove(&j); }
        }
        if let Some(u) = &mut self.u {
            u.swap(i, j);
        }
        if let Some(ui) = &mut self.u_inv {
            ui.swap(i, j);
        }
    }

    fn row_negate(&mut self, i: usize) {
        for v in self.mat[i].values_mut() {
            *v = -&*v;
        }
        if let Some(u) = &mut self.u {
            u.negate(i);
        }
        if let Some(ui) = &mut self.u_inv {
            ui.negate(i);
        }
    }

    /// row_i += c * row_j
    fn row_addmul(&mut self, i: usize, j: usize, c: &BigInt) {
        if c.is_zero() {
            return;
        }
        let src: Vec<(usize, BigInt)> =
            self.mat[j].iter().map(|(k, v)| (*k, v.clone())).collect();
        for (col, v) in src {
            let e = self.mat[i].entry(col).or_insert_with(BigInt::zero);
            *e += c * &v;
            if e.is_zero() {
                self.mat[i].remove(&col);
                self.rows_of_col[col].remove(&i);
            } else {
                self.rows_of_col[col].insert(i);
            }
        }
        if let Some(u) = &mut self.u {
            u.addmul(i, j, c);
        }
        if let Some(ui) = &mut self.u_inv {
            // right-multiplying by the inverse op: col_j -= c * col_i
            ui.addmul(j, i, &-c);
        }
    }

    fn col_swap(&mut self, j: usize, k: usize) {
        if j == k {
            return;
        }
        let rows: BTreeSet<usize> =
            self.rows_of_col[j].iter().chain(self.rows_of_col[k].iter()).copied().collect();
        for i in rows {
            let vj = self.mat[i].remove(&j);
            let vk = self.mat[i].remove(&k);
            if let Some(v) = vj {
                self.mat[i].insert(k, v);
            }
            if let Some(v) = vk {
                self.mat[i].insert(j, v);
            }
        }
        self.rows_of_col.swap(j, k);
        if let Some(v) = &mut self.v {
            v.swap(j, k);
        }
        if let Some(vi) = &mut self.v_inv {
            vi.swap(j, k);
        }
    }

    fn col_negate(&mut self, j: usize) {
        let rows: Vec<usize> = self.rows_of_col[j].iter().copied().collect();
        for i in rows {
            let v = self.mat[i].get_mut(&j).expect("index desync");
            *v = -&*v;
        }
        if let Some(v) = &mut self.v {
            v.negate(j);
        }
        if let Some(vi) = &mut self.v_inv {
            vi.negate(j);
        }
    }

    /// col_j += c * col_k
    fn col_addmul(&mut self, j: usize, k: usize, c: &BigInt) {
        if c.is_zero() {
            return;
        }
        let rows: Vec<usize> = self.rows_of_col[k].iter().copied().collect();
        for i in rows {
            let v = self.mat[i].get(&k).expect("index desync").clone();
            let e = self.mat[i].entry(j).or_insert_with(BigInt::zero);
            *e += c * &v;
            if e.is_zero() {
                self.mat[i].remove(&j);
                self.rows_of_col[j].remove(&i);
            } else {
                self.rows_of_col[j].insert(i);
            }
        }
        if let Some(v) = &mut self.v {
            v.addmul(j, k, c);
        }
        if let Some(vi) = &mut self.v_inv {
            vi.addmul(k, j, &-c);
        }
    }

    /// (row_t, row_i) <- (s*row_t + u*row_i, x*row_t + y*row_i), s*y - u*x = 1.
    fn row_pair(&mut self, t: usize, i: usize, s: &BigInt, u: &BigInt, x: &BigInt, y: &BigInt) {
        let cols: BTreeSet<usize> =
            self.mat[t].keys().chain(self.mat[i].keys()).copied().collect();
        for col in cols {
            let vt = self.mat[t].get(&col).cloned().unwrap_or_else(BigInt::zero);
            let vi = self.mat[i].get(&col).cloned().unwrap_or_else(BigInt::zero);
            let nt = s * &vt + u * &vi;
            let ni = x * &vt + y * &vi;
            if nt.is_zero() {
                self.mat[t].remove(&col);
                self.rows_of_col[col].remove(&t);
            } else {
                self.mat[t].insert(col, nt);
                self.rows_of_col[col].insert(t);
            }
            if ni.is_zero() {
                self.mat[i].remove(&col);
                self.rows_of_col[col].remove(&i);
            } else {
                self.mat[i].insert(col, ni);
                self.rows_of_col[col].insert(i);
            }
        }
        if let Some(uu) = &mut self.u {
            uu.pair(t, i, s, u, x, y);
        }
        if let Some(ui) = &mut self.u_inv {
            // columns of the mirror pick up the inverse transform
            ui.pair(t, i, y, &-x, &-u, s);
        }
    }

    /// (col_t, col_j) <- (s*col_t + u*col_j, x*col_t + y*col_j), s*y - u*x = 1.
    fn col_pair(&mut self, t: usize, j: usize, s: &BigInt, u: &BigInt, x: &BigInt, y: &BigInt) {
        let rows: Vec<usize> =
            self.rows_of_col[t].iter().chain(self.rows_of_col[j].iter()).copied().collect();
        let rows: BTreeSet<usize> = rows.into_iter().collect();
        for i in rows {
            let vt = self.mat[i].get(&t).cloned().unwrap_or_else(BigInt::zero);
            let vj = self.mat[i].get(&j).cloned().unwrap_or_else(BigInt::zero);
            let nt = s * &vt + u * &vj;
            let nj = x * &vt + y * &vj;
            if nt.is_zero() {
                self.mat[i].remove(&t);
                self.rows_of_col[t].remove(&i);
            } else {
                self.mat[i].insert(t, nt);
                self.rows_of_col[t].insert(i);
            }
            if nj.is_zero() {
                self.mat[i].remove(&j);
                self.rows_of_col[j].remove(&i);
            } else {
                self.mat[i].insert(j, nj);
                self.rows_of_col[j].insert(i);
            }
        }
        if let Some(v) = &mut self.v {
            v.pair(t, j, s, u, x, y);
        }
        if let Some(vi) = &mut self.v_inv {
            vi.pair(t, j, y, &-x, &-u, s);
        }
    }

    /// Pivot choice: minimize (row nnz) * (col nnz) over the active region,
    /// break ties by smallest absolute value, then lowest (row, col).
    fn select_pivot(&self, t: usize) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize, usize, BigInt)> = None;
        for i in t..self.r {
            if self.mat[i].is_empty() {
                continue;
            }
            let rn = self.mat[i].len();
            for (j, v) in self.mat[i].range(t..) {
                let score = rn * self.rows_of_col[*j].len();
                let mag = v.abs();
                let better = match &best {
                    None => true,
                    Some((bs, _, _, bm)) => {
                        score < *bs || (score == *bs && mag < *bm)
                    }
                };
                if better {
                    best = Some((score, i, *j, mag));
                }
            }
        }
        best.map(|(_, i, j, _)| (i, j))
    }

    /// Zero mat[i][j] against the pivot at (t, j) in one unimodular step:
    /// plain reduction when the pivot divides it, otherwise a 2x2
    /// extended-gcd transform of rows t and i (the pivot becomes
    /// gcd(pivot, entry)). One mixing event per entry instead of a Euclid
    /// chain of them.
    fn row_clear_entry(&mut self, t: usize, i: usize, j: usize) {
        let p = self.mat[t].get(&j).expect("pivot vanished").clone();
        let a = match self.mat[i].get(&j) {
            Some(v) => v.clone(),
            None => return,
        };
        if (&a % &p).is_zero() {
            let q = &a / &p;
            self.row_addmul(i, t, &-q);
            return;
        }
        let (g, s, u) = bezout(&p, &a);
        let x = -(&a / &g);
        let y = &p / &g;
        self.row_pair(t, i, &s, &u, &x, &y);
    }

    /// Column twin of row_clear_entry: pivot at (i, t), clears mat[i][j].
    fn col_clear_entry(&mut self, i: usize, t: usize, j: usize) {
        let p = self.mat[i].get(&t).expect("pivot vanished").clone();
        let a = match self.mat[i].get(&j) {
            Some(v) => v.clone(),
            None => return,
        };
        if (&a % &p).is_zero() {
            let q = &a / &p;
            self.col_addmul(j, t, &-q);
            return;
        }
        let (g, s, u) = bezout(&p, &a);
        let x = -(&a / &g);
        let y = &p / &g;
        self.col_pair(t, j, &s, &u, &x, &y);
    }

    /// Clear row t and column t against the pivot at (t, t); on exit the
    /// pivot is the gcd of everything it met. Plain reductions leave the
    /// other line of the cross untouched; a gcd transform while clearing the
    /// row can refill the column, but it strictly shrinks the pivot, so the
    /// outer loop terminates.
    fn clear_cross(&mut self, t: usize) {
        loop {
            loop {
                let i = match self.rows_of_col[t].range(t + 1..).next() {
                    Some(&i) => i,
                    None => break,
                };
                self.row_clear_entry(t, i, t);
            }
            loop {
                let j = match self.mat[t].range(t + 1..).next() {
                    Some((&j, _)) => j,
                    None => break,
                };
                self.col_clear_entry(t, t, j);
            }
            let col_clear = self.rows_of_col[t].range(t + 1..).next().is_none();
            let row_clear = self.mat[t].range(t + 1..).next().is_none();
            if col_clear && row_clear {
                return;
            }
        }
    }

    /// Find an active entry not divisible by the pivot, if any.
    fn indivisible(&self, t: usize) -> Option<usize> {
        let p = self.mat[t].get(&t).expect("pivot vanished");
        for i in t + 1..self.r {
            for (_, v) in self.mat[i].range(t + 1..) {
                if !v.mod_floor(p).is_zero() {
                    return Some(i);
                }
            }
        }
        None
    }

    /// Largest bit length of any entry in the active region.
    fn active_bits(&self, t: usize) -> u64 {
        let mut bits = 0;
        for i in t..self.r {
            for (_, v) in self.mat[i].range(t..) {
                bits = bits.max(v.bits());
            }
        }
        bits
    }

    /// Balanced-reduce every staircase row's entry in column c against the
    /// pivot row of c. Keeps the whole staircase reduced at all times.
    fn reduce_column_against(&mut self, pivots: &BTreeMap<usize, usize>, c: usize) {
        let h = pivots[&c];
        let p = self.mat[h].get(&c).expect("pivot vanished").clone();
        let holders: Vec<usize> = self.rows_of_col[c]
            .iter()
            .copied()
            .filter(|&r| r != h && pivots.values().any(|&pr| pr == r))
            .collect();
        for r in holders {
            let a = self.mat[r].get(&c).expect("index desync").clone();
            let (q, _) = div_balanced(&a, &p);
            self.row_addmul(r, h, &-q);
        }
    }

    /// Reduce the entries of staircase row h at every pivot column except
    /// its own, keeping them balanced-small.
    fn reduce_row_against(&mut self, pivots: &BTreeMap<usize, usize>, h: usize, own: usize) {
        let cols: Vec<usize> = self.mat[h]
            .keys()
            .copied()
            .filter(|c| *c != own && pivots.contains_key(c))
            .collect();
        for c in cols {
            let hp = pivots[&c];
            let p = self.mat[hp].get(&c).expect("pivot vanished").clone();
            let a = self.mat[h].get(&c).expect("index desync").clone();
            let (q, _) = div_balanced(&a, &p);
            self.row_addmul(h, hp, &-q);
        }
    }

    /// Row-side Hermite pass over the active block by incremental
    /// absorption: rows join a staircase one at a time, each gcd event
    /// immediately re-reduces the touched pivot row against the whole
    /// staircase. No unreduced line ever acts as a reducer, which is what
    /// keeps intermediate entries near the bit sizes the answer forces.
    /// Ends with the staircase rows permuted to the top of the block in
    /// pivot-column order.
    fn absorb_rows(&mut self, t0: usize) {
        // pivot column -> its staircase row
        let mut pivots: BTreeMap<usize, usize> = BTreeMap::new();
        for i in t0..self.r {
            loop {
                let c = match self.mat[i].range(t0..).next() {
                    Some((&c, _)) => c,
                    None => break,
                };
                match pivots.get(&c) {
                    Some(&h) => {
                        let p = self.mat[h].get(&c).expect("pivot vanished").clone();
                        let a = self.mat[i].get(&c).expect("index desync").clone();
                        if (&a % &p).is_zero() {
                            let q = &a / &p;
                            self.row_addmul(i, h, &-q);
                        } else {
                            let (g, s, u) = bezout(&p, &a);
                            let x = -(&a / &g);
                            let y = &p / &g;
                            self.row_pair(h, i, &s, &u, &x, &y);
                            // the pivot shrank: re-reduce the staircase
                            self.reduce_row_against(&pivots, h, c);
                            self.reduce_column_against(&pivots, c);
                        }
                    }
                    None => {
                        if self.mat[i].get(&c).expect("index desync").is_negative() {
                            self.row_negate(i);
                        }
                        pivots.insert(c, i);
                        self.reduce_row_against(&pivots, i, c);
                        self.reduce_column_against(&pivots, c);
                        break;
                    }
                }
            }
        }
        // permute staircase rows to the top, in pivot-column order
        let order: Vec<usize> = pivots.keys().copied().collect();
        for (k, c) in order.iter().enumerate() {
            let target = t0 + k;
            let cur = pivots[c];
            if cur != target {
                self.row_swap(cur, target);
                for r in pivots.values_mut() {
                    if *r == target {
                        *r = cur;
                    } else if *r == cur {
                        *r = target;
                    }
                }
            }
        }
    }

    /// Column-side twin of absorb_rows.
    fn absorb_cols(&mut self, t0: usize) {
        // pivot row -> its staircase column
        let mut pivots: BTreeMap<usize, usize> = BTreeMap::new();
        for j in t0..self.c {
            loop {
                let r = match self.rows_of_col[j].range(t0..).next() {
                    Some(&r) => r,
                    None => break,
                };
                match pivots.get(&r) {
                    Some(&h) => {
                        let p = self.mat[r].get(&h).expect("pivot vanished").clone();
                        let a = self.mat[r].get(&j).expect("index desync").clone();
                        if (&a % &p).is_zero() {
                            let q = &a / &p;
                            self.col_addmul(j, h, &-q);
                        } else {
                            let (g, s, u) = bezout(&p, &a);
                            let x = -(&a / &g);
                            let y = &p / &g;
                            self.col_pair(h, j, &s, &u, &x, &y);
                            self.reduce_col_against_cols(&pivots, h, r);
                            self.reduce_row_against_cols(&pivots, r);
                        }
                    }
                    None => {
                        if self.mat[r].get(&j).expect("index desync").is_negative() {
                            self.col_negate(j);
                        }
                        pivots.insert(r, j);
                        self.reduce_col_against_cols(&pivots, j, r);
                        self.reduce_row_against_cols(&pivots, r);
                        break;
                    }
                }
            }
        }
        let order: Vec<usize> = pivots.keys().copied().collect();
        for (k, r) in order.iter().enumerate() {
            let target = t0 + k;
            let cur = pivots[r];
            if cur != target {
                self.col_swap(cur, target);
                for c in pivots.values_mut() {
                    if *c == target {
                        *c = cur;
                    } else if *c == cur {
                        *c = target;
                    }
                }
            }
        }
    }

    /// Reduce staircase column h's entries at every pivot row except its
    /// own pivot row `own`.
    fn reduce_col_against_cols(&mut self, pivots: &BTreeMap<usize, usize>, h: usize, own: usize) {
        let rows: Vec<usize> = self.rows_of_col[h]
            .iter()
            .copied()
            .filter(|r| *r != own && pivots.contains_key(r))
            .collect();
        for r in rows {
            let hp = pivots[&r];
            let p = self.mat[r].get(&hp).expect("pivot vanished").clone();
            let a = self.mat[r].get(&h).expect("index desync").clone();
            let (q, _) = div_balanced(&a, &p);
            self.col_addmul(h, hp, &-q);
        }
    }

    /// Balanced-reduce every staircase column's entry in pivot row r.
    fn reduce_row_against_cols(&mut self, pivots: &BTreeMap<usize, usize>, r: usize) {
        let h = pivots[&r];
        let p = self.mat[r].get(&h).expect("pivot vanished").clone();
        let holders: Vec<usize> = self.mat[r]
            .keys()
            .copied()
            .filter(|&c| c != h && pivots.values().any(|&pc| pc == c))
            .collect();
        for c in holders {
            let a = self.mat[r].get(&c).expect("index desync").clone();
            let (q, _) = div_balanced(&a, &p);
            self.col_addmul(c, h, &-q);
        }
    }

    /// True when every active entry sits on the main diagonal.
    fn active_diagonal(&self, t0: usize) -> bool {
        for i in t0..self.r {
            for (j, _) in self.mat[i].range(t0..) {
                if *j != i {
                    return false;
                }
            }
        }
        true
    }

    /// Restore d_i | d_{i+1} along the diagonal from t0 on, moving zeros to
    /// the back. Each violating pair is replaced by (gcd, lcm) through
    /// tracked elementary operations.
    fn fold_diagonal(&mut self, t0: usize) {
        let n = self.r.min(self.c);
        loop {
            let mut changed = false;
            for i in t0..n {
                for j in i + 1..n {
                    let di = self.mat[i].get(&i).cloned().unwrap_or_else(BigInt::zero);
                    let dj = self.mat[j].get(&j).cloned().unwrap_or_else(BigInt::zero);
                    if dj.is_zero() {
                        continue;
                    }
                    if di.is_zero() {
                        self.row_swap(i, j);
                        self.col_swap(i, j);
                        changed = true;
                        continue;
                    }
                    if (&dj % &di).is_zero() {
                        continue;
                    }
                    // couple the two positions, gcd them, re-clear the spill
                    self.col_addmul(i, j, &BigInt::one());
                    self.row_clear_entry(i, j, i);
                    let p = self.mat[i].get(&i).expect("pivot vanished").clone();
                    if let Some(e) = self.mat[i].get(&j).cloned() {
                        let q = &e / &p;
                        self.col_addmul(j, i, &-q);
                    }
                    changed = true;
                }
            }
            if !changed {
                return;
            }
        }
    }

    /// Dense-endgame driver: alternate staircase passes until the active
    /// block is diagonal, then repair divisibility and signs. Unlike the
    /// cross-clearing loop this never lets unreduced entries accumulate, so
    /// it stays near the bit sizes of the input block.
    fn finish_reduced(&mut self, t0: usize) {
        for _ in 0..10_000 {
            self.absorb_rows(t0);
            if self.active_diagonal(t0) {
                break;
            }
            self.absorb_cols(t0);
            if self.active_diagonal(t0) {
                break;
            }
        }
        assert!(self.active_diagonal(t0), "staircase alternation did not converge");
        self.fold_diagonal(t0);
        for k in t0..self.r.min(self.c) {
            if self.mat[k].get(&k).map(|v| v.is_negative()).unwrap_or(false) {
                self.row_negate(k);
            }
        }
    }

    fn run(&mut self) -> Vec<BigInt> {
        // Markowitz-driven cross clearing is ideal while the matrix is
        // sparse, but on a dense tail it can square entry sizes every step.
        // Once entries outgrow this bound the reduced staircase finishes the
        // job with bounded coefficients.
        const GROWTH_BITS: u64 = 128;
        let n = self.r.min(self.c);
        let mut t = 0;
        while t < n {
            let (pi, pj) = match self.select_pivot(t) {
                Some(p) => p,
                None => break,
            };
            if self.active_bits(t) > GROWTH_BITS {
                self.finish_reduced(t);
                break;
            }
            self.row_swap(t, pi);
            self.col_swap(t, pj);
            loop {
                self.clear_cross(t);
                match self.indivisible(t) {
                    Some(i) => {
                        // fold the offending row into the pivot row so the
                        // next sweep absorbs the missing divisor
                        self.row_addmul(t, i, &BigInt::one());
                    }
                    None => break,
                }
            }
            if self.mat[t].get(&t).map(|v| v.is_negative()).unwrap_or(false) {
                self.row_negate(t);
            }
            t += 1;
        }
        let mut diag = Vec::with_capacity(n);
        for k in 0..n {
            diag.push(self.mat.get(k).and_then(|r| r.get(&k)).cloned().unwrap_or_else(BigInt::zero));
        }
        diag
    }
}

/// Full Smith normal form with transforms. The equation U * A * V = D and
/// both unimodularity witnesses (U * U^-1 = I, V * V^-1 = I) are recomputed
/// before the value is returned.
pub fn smith(a: &IntMat) -> Result<SmithForm> {
    let mut eng = SnfEngine::new(a, true, true);
    let diag = eng.run();
    let rank = diag.iter().filter(|d| !d.is_zero()).count();
    let u = eng.u.take().expect("tracking enabled").to_mat_rows(a.rows());
    let u_inv = eng.u_inv.take().expect("tracking enabled").to_mat_cols(a.rows());
    let v = eng.v.take().expect("tracking enabled").to_mat_cols(a.cols());
    let v_inv = eng.v_inv.take().expect("tracking enabled").to_mat_rows(a.cols());

    let mut d = IntMat::zeros(a.rows(), a.cols());
    for (k, dv) in diag.iter().enumerate() {
        if !dv.is_zero() {
            d.set(k, k, dv.clone());
        }
    }
    if u.mul(a).mul(&v) != d {
        return Err(Error::Internal("smith form equation U*A*V = D failed recheck".into()));
    }
    if u.mul(&u_inv) != IntMat::identity(a.rows()) {
        return Err(Error::Internal("smith form U inverse failed recheck".into()));
    }
    if v.mul(&v_inv) != IntMat::identity(a.cols()) {
        return Err(Error::Internal("smith form V inverse failed recheck".into()));
    }
    for k in 1..rank {
        if !diag[k].mod_floor(&diag[k - 1]).is_zero() {
            return Err(Error::Internal("smith diagonal violates divisibility chain".into()));
        }
    }
    Ok(SmithForm { u, v, u_inv, v_inv, diag, rank })
}

/// Invariant factors only; skips transform tracking and the product recheck,
/// so it is the cheap path for large cokernel and rank queries.
pub fn smith_diagonal(a: &IntMat) -> Vec<BigInt> {
    let mut eng = SnfEngine::new(a, false, false);
    eng.run()
}

pub fn rank(a: &IntMat) -> usize {
    smith_diagonal(a).iter().filter(|d| !d.is_zero()).count()
}

/// Invariants of Z^cols(A) / rowspan(A).
pub fn cokernel_invariants(a: &IntMat) -> AbInvariants {
    let diag = smith_diagonal(a);
    AbInvariants::from_diag(&diag, a.cols())
}

/// Basis (as columns) of the full integer kernel {x : A x = 0}. The basis
/// is saturated: the kernel is a direct summand of the ambient lattice, and
/// every rational kernel vector with integer entries is an integer
/// combination of these columns. Each returned column is re-checked.
pub fn kernel_basis(a: &IntMat) -> Result<IntMat> {
    let mut eng = SnfEngine::new(a, false, true);
    let diag = eng.run();
    let rank = diag.iter().filter(|d| !d.is_zero()).count();
    let v = eng.v.take().expect("tracking enabled").to_mat_cols(a.cols());
    let idx: Vec<usize> = (rank..a.cols()).collect();
    let basis = v.take_columns(&idx);
    for j in 0..basis.cols() {
        let col = basis.column(j);
        if a.mul_vec(&col).iter().any(|x| !x.is_zero()) {
            return Err(Error::Internal("kernel basis column fails A x = 0 recheck".into()));
        }
    }
    Ok(basis)
}

/// Solve A x = b over the integers. None means no integral solution exists
/// (which includes the case of no rational solution).
pub fn solve_in_lattice(a: &IntMat, b: &[BigInt]) -> Result<Option<Vec<BigInt>>> {
    let solver = LatticeSolver::new(a)?;
    Ok(solver.solve(b))
}

/// Reusable solver for many right-hand sides against one matrix: membership
/// of vectors in colspan(A) and explicit preimages.
pub struct LatticeSolver {
    sf: SmithForm,
    rows: usize,
    cols: usize,
}

impl LatticeSolver {
    pub fn new(a: &IntMat) -> Result<Self> {
        Ok(LatticeSolver { sf: smith(a)?, rows: a.rows(), cols: a.cols() })
    }

    pub fn rank(&self) -> usize {
        self.sf.rank
    }

    pub fn solve(&self, b: &[BigInt]) -> Option<Vec<BigInt>> {
        assert_eq!(b.len(), self.rows, "right-hand side length mismatch");
        let y = self.sf.u.mul_vec(b);
        let mut z = vec![BigInt::zero(); self.cols];
        for (i, yi) in y.iter().enumerate() {
            if i < self.sf.rank {
                let d = &self.sf.diag[i];
                let (q, r) = yi.div_mod_floor(d);
                if !r.is_zero() {
                    return None;
                }
                z[i] = q;
            } else if !yi.is_zero() {
                return None;
            }
        }
        Some(self.sf.v.mul_vec(&z))
    }

    pub fn contains(&self, b: &[BigInt]) -> bool {
        self.solve(b).is_some()
    }

    /// Check that every column of m lies in colspan of the solver's matrix.
    pub fn contains_all_columns(&self, m: &IntMat) -> bool {
        (0..m.cols()).all(|j| self.contains(&m.column(j)))
    }
}

/// Column-style Hermite reduction: returns a canonical lattice basis (as
/// columns) of colspan(A), dropping dependent columns. Pivots are positive,
/// sit on increasing rows, and entries left of a pivot in its row are
/// reduced to [0, pivot).
pub fn hnf_basis(a: &IntMat) -> IntMat {
    let mut eng = SnfEngine::new(a, false, false);
    let mut next = 0usize;
    for row in 0..eng.r {
        if next == eng.c {
            break;
        }
        loop {
            // candidate columns >= next with a nonzero entry on this row
            let cands: Vec<(usize, BigInt)> = eng.mat[row]
                .range(next..)
                .map(|(j, v)| (*j, v.clone()))
                .collect();
            if cands.is_empty() {
                break;
            }
            if cands.len() == 1 {
                let (j, _) = cands[0];
                eng.col_swap(next, j);
                break;
            }
            // reduce everything modulo the smallest entry
            let (jm, vm) = cands
                .iter()
                .min_by(|(j1, v1), (j2, v2)| v1.abs().cmp(&v2.abs()).then(j1.cmp(j2)))
                .cloned()
                .expect("nonempty");
            for (j, v) in &cands {
                if *j == jm {
                    continue;
                }
                let q = v.div_floor(&vm);
                eng.col_addmul(*j, jm, &-q);
            }
        }
        if eng.mat[row].contains_key(&next) {
            if eng.mat[row].get(&next).expect("pivot present").is_negative() {
                eng.col_negate(next);
            }
            let p = eng.mat[row].get(&next).expect("pivot present").clone();
            // normalize earlier pivot columns on this row into [0, p)
            let earlier: Vec<(usize, BigInt)> = eng.mat[row]
                .range(..next)
                .map(|(j, v)| (*j, v.clone()))
                .collect();
            for (j, v) in earlier {
                let q = v.div_floor(&p);
                eng.col_addmul(j, next, &-q);
            }
            next += 1;
        }
    }
    let idx: Vec<usize> = (0..next).collect();
    let mut m = IntMat::zeros(eng.r, eng.c);
    m.data = eng.mat;
    m.take_columns(&idx)
}

/// Basis of the saturation {x : k x in colspan(A) for some k >= 1}.
pub fn saturation(a: &IntMat) -> Result<IntMat> {
    let sf = smith(a)?;
    let idx: Vec<usize> = (0..sf.rank).collect();
    Ok(sf.u_inv.take_columns(&idx))
}

/// Generators of the quotient Z^n / colspan(L) adapted to its invariant
/// factors: one ambient vector per torsion factor (>= 2) and per free rank,
/// in that order. Unit factors contribute nothing.
pub fn quotient_generators(l: &IntMat) -> Result<(AbInvariants, IntMat)> {
    let sf = smith(l)?;
    let inv = AbInvariants::from_diag(&sf.diag, l.rows());
    let mut idx: Vec<usize> = Vec::new();
    for (i, d) in sf.diag.iter().enumerate() {
        if !d.is_zero() && !d.is_one() {
            idx.push(i);
        }
    }
    for i in sf.rank..l.rows() {
        idx.push(i);
    }
    Ok((inv, sf.u_inv.take_columns(&idx)))
}

/// Do two column-span lattices coincide? Mutual containment, checked
/// column by column with exact solves.
pub fn lattices_equal(a: &IntMat, b: &IntMat) -> Result<bool> {
    if a.rows() != b.rows() {
        return Err(Error::Dimension("lattice ambient mismatch".into()));
    }
    let sa = LatticeSolver::new(a)?;
    let sb = LatticeSolver::new(b)?;
    Ok(sa.contains_all_columns(b) && sb.contains_all_columns(a))
}
