//! Integer matrices, Hermite and Smith normal forms, sublattices of `ℤ^r`
//! and their cosets.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Dense integer matrix with arbitrary-precision entries, row-major.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
        }
        write!(f, "]")
    }
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, BigInt::one());
        }
        m
    }

    /// Builds from rows; `cols` is needed when there are no rows.
    pub fn from_rows(cols: usize, rows: &[Vec<i64>]) -> Self {
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "ragged matrix");
            for (j, v) in r.iter().enumerate() {
                m.set(i, j, BigInt::from(*v));
            }
        }
        m
    }

    pub fn from_big_rows(cols: usize, rows: Vec<Vec<BigInt>>) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged matrix");
            data.extend(r);
        }
        Self { rows: n, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vecs(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn to_i64_rows(&self) -> Option<Vec<Vec<i64>>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.to_i64()).collect::<Option<Vec<_>>>())
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.is_zero())
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn mul(&self, o: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, o.rows, "shape mismatch in product");
        let mut m = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let idx = i * o.cols + j;
                    m.data[idx] += a * o.get(k, j);
                }
            }
        }
        m
    }

    /// `M · v` for a column vector.
    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn mul_vec_i64(&self, v: &[i64]) -> Vec<BigInt> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * BigInt::from(*b)).sum())
            .collect()
    }

    /// `vᵀ · M` for a row vector.
    pub fn left_mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(self.rows, v.len());
        let mut out = vec![BigInt::zero(); self.cols];
        for (i, c) in v.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                *o += c * self.get(i, j);
            }
        }
        out
    }

    pub fn vstack(&self, o: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, o.cols);
        let mut data = self.data.clone();
        data.extend(o.data.iter().cloned());
        IntMatrix { rows: self.rows + o.rows, cols: self.cols, data }
    }

    pub fn hstack(&self, o: &IntMatrix) -> IntMatrix {
        assert_eq!(self.rows, o.rows);
        let mut rows = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let mut r = self.row(i).to_vec();
            r.extend(o.row(i).iter().cloned());
            rows.push(r);
        }
        IntMatrix::from_big_rows(self.cols + o.cols, rows)
    }

    pub fn scaled(&self, k: &BigInt) -> IntMatrix {
        IntMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * k).collect() }
    }

    pub fn select_rows(&self, idx: &[usize]) -> IntMatrix {
        IntMatrix::from_big_rows(self.cols, idx.iter().map(|&i| self.row(i).to_vec()).collect())
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// row[dst] += f · row[src]
    fn row_addmul(&mut self, dst: usize, src: usize, f: &BigInt) {
        if f.is_zero() {
            return;
        }
        for j in 0..self.cols {
            let v = self.get(src, j) * f;
            self.data[dst * self.cols + j] += v;
        }
    }

    /// col[dst] += f · col[src]
    fn col_addmul(&mut self, dst: usize, src: usize, f: &BigInt) {
        if f.is_zero() {
            return;
        }
        for i in 0..self.rows {
            let v = self.get(i, src) * f;
            self.data[i * self.cols + dst] += v;
        }
    }

    fn negate_row(&mut self, i: usize) {
        for j in 0..self.cols {
            let v = -self.get(i, j).clone();
            self.set(i, j, v);
        }
    }

    /// Rank over ℚ.
    pub fn rank(&self) -> usize {
        hnf(self).rank
    }

    /// Determinant of a square matrix (Bareiss elimination).
    pub fn determinant(&self) -> BigInt {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut m = self.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n {
            if m.get(k, k).is_zero() {
                let Some(p) = (k + 1..n).find(|&i| !m.get(i, k).is_zero()) else {
                    return BigInt::zero();
                };
                m.swap_rows(k, p);
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = (m.get(i, j) * m.get(k, k) - m.get(i, k) * m.get(k, j)) / &prev;
                    m.set(i, j, v);
                }
            }
            prev = m.get(k, k).clone();
        }
        if n == 0 {
            return BigInt::one();
        }
        sign * prev
    }
}

/// Row-style Hermite normal form `H = U·M` with `U` unimodular. Nonzero rows
/// come first, pivots move strictly right, pivots are positive and entries
/// above a pivot lie in `[0, pivot)`.
#[derive(Clone, Debug)]
pub struct Hnf {
    pub h: IntMatrix,
    pub u: IntMatrix,
    pub rank: usize,
    pub pivots: Vec<usize>,
}

pub fn hnf(m: &IntMatrix) -> Hnf {
    let (rows, cols) = (m.rows, m.cols);
    let mut h = m.clone();
    let mut u = IntMatrix::identity(rows);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        loop {
            let mut best: Option<usize> = None;
            for i in r..rows {
                if h.get(i, c).is_zero() {
                    continue;
                }
                if best.map_or(true, |b| h.get(i, c).abs() < h.get(b, c).abs()) {
                    best = Some(i);
                }
            }
            let Some(b) = best else { break };
            h.swap_rows(r, b);
            u.swap_rows(r, b);
            let mut done = true;
            for i in r + 1..rows {
                if h.get(i, c).is_zero() {
                    continue;
                }
                let q = -h.get(i, c).div_floor(h.get(r, c));
                h.row_addmul(i, r, &q);
                u.row_addmul(i, r, &q);
                if !h.get(i, c).is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if h.get(r, c).is_zero() {
            continue;
        }
        if h.get(r, c).is_negative() {
            h.negate_row(r);
            u.negate_row(r);
        }
        let p = h.get(r, c).clone();
        for i in 0..r {
            let q = -h.get(i, c).div_floor(&p);
            h.row_addmul(i, r, &q);
            u.row_addmul(i, r, &q);
        }
        pivots.push(c);
        r += 1;
    }
    Hnf { h, u, rank: r, pivots }
}

/// Smith normal form `S = U·M·V` with `U`, `V` unimodular and the diagonal
/// `d_1 | d_2 | …` nonnegative.
#[derive(Clone, Debug)]
pub struct Snf {
    pub s: IntMatrix,
    pub u: IntMatrix,
    pub v: IntMatrix,
}

impl Snf {
    pub fn diagonal(&self) -> Vec<BigInt> {
        (0..self.s.rows.min(self.s.cols)).map(|i| self.s.get(i, i).clone()).collect()
    }
}

pub fn snf(m: &IntMatrix) -> Snf {
    let (rows, cols) = (m.rows, m.cols);
    let mut s = m.clone();
    let mut u = IntMatrix::identity(rows);
    let mut v = IntMatrix::identity(cols);
    for t in 0..rows.min(cols) {
        loop {
            let mut best: Option<(usize, usize)> = None;
            for i in t..rows {
                for j in t..cols {
                    let x = s.get(i, j);
                    if !x.is_zero() && best.map_or(true, |(bi, bj)| x.abs() < s.get(bi, bj).abs()) {
                        best = Some((i, j));
                    }
                }
            }
            let Some((bi, bj)) = best else {
                return Snf { s, u, v };
            };
            s.swap_rows(t, bi);
            u.swap_rows(t, bi);
            s.swap_cols(t, bj);
            v.swap_cols(t, bj);
            let mut clean = true;
            for i in t + 1..rows {
                let q = -s.get(i, t).div_floor(s.get(t, t));
                s.row_addmul(i, t, &q);
                u.row_addmul(i, t, &q);
                clean &= s.get(i, t).is_zero();
            }
            for j in t + 1..cols {
                let q = -s.get(t, j).div_floor(s.get(t, t));
                s.col_addmul(j, t, &q);
                v.col_addmul(j, t, &q);
                clean &= s.get(t, j).is_zero();
            }
            if !clean {
                continue;
            }
            let p = s.get(t, t).clone();
            let bad = (t + 1..rows).find(|&i| (t + 1..cols).any(|j| !s.get(i, j).is_multiple_of(&p)));
            match bad {
                Some(i) => {
                    s.row_addmul(t, i, &BigInt::one());
                    u.row_addmul(t, i, &BigInt::one());
                }
                None => break,
            }
        }
        if s.get(t, t).is_negative() {
            s.negate_row(t);
            u.negate_row(t);
        }
    }
    Snf { s, u, v }
}

/// `{x ∈ ℤ^cols : M·x = 0}`.
pub fn kernel(m: &IntMatrix) -> Lattice {
    let n = m.cols;
    if m.rows == 0 {
        return Lattice::full(n);
    }
    let h = hnf(&m.transpose());
    let rows: Vec<Vec<BigInt>> = (h.rank..n).map(|i| h.u.row(i).to_vec()).collect();
    Lattice::from_generators(n, IntMatrix::from_big_rows(n, rows))
}

/// Saturation `(ℚ·L) ∩ ℤ^r`.
pub fn saturation(l: &Lattice) -> Lattice {
    if l.rank() == 0 {
        return Lattice::zero(l.dim);
    }
    kernel(&kernel(&l.basis).basis)
}

/// A sublattice of `ℤ^dim`, stored by its HNF basis.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lattice {
    dim: usize,
    basis: IntMatrix,
    pivots: Vec<usize>,
}

impl Lattice {
    pub fn from_generators(dim: usize, gens: IntMatrix) -> Self {
        assert_eq!(gens.cols, dim);
        let h = hnf(&gens);
        let basis = h.h.select_rows(&(0..h.rank).collect::<Vec<_>>());
        Self { dim, basis, pivots: h.pivots }
    }

    pub fn from_rows(dim: usize, rows: &[Vec<i64>]) -> Self {
        Self::from_generators(dim, IntMatrix::from_rows(dim, rows))
    }

    pub fn zero(dim: usize) -> Self {
        Self { dim, basis: IntMatrix::zeros(0, dim), pivots: Vec::new() }
    }

    pub fn full(dim: usize) -> Self {
        Self::from_generators(dim, IntMatrix::identity(dim))
    }

    /// `k·ℤ^dim`.
    pub fn scaled_full(dim: usize, k: u64) -> Self {
        Self::from_generators(dim, IntMatrix::identity(dim).scaled(&BigInt::from(k)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.basis.rows
    }

    pub fn basis(&self) -> &IntMatrix {
        &self.basis
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Reduce `v` modulo the lattice: the canonical representative has each
    /// pivot coordinate in `[0, pivot)`.
    pub fn reduce(&self, v: &[BigInt]) -> Vec<BigInt> {
        let mut out = v.to_vec();
        for (k, &p) in self.pivots.iter().enumerate() {
            let q = -out[p].div_floor(self.basis.get(k, p));
            if !q.is_zero() {
                for (j, o) in out.iter_mut().enumerate() {
                    *o += &q * self.basis.get(k, j);
                }
            }
        }
        out
    }

    /// Integer coordinates of `v` in the HNF basis, if `v` lies in the lattice.
    pub fn coordinates(&self, v: &[BigInt]) -> Option<Vec<BigInt>> {
        let mut res = v.to_vec();
        let mut coords = Vec::with_capacity(self.rank());
        for (k, &p) in self.pivots.iter().enumerate() {
            let (q, r) = res[p].div_rem(self.basis.get(k, p));
            if !r.is_zero() {
                return None;
            }
            for (j, o) in res.iter_mut().enumerate() {
                *o -= &q * self.basis.get(k, j);
            }
            coords.push(q);
        }
        res.iter().all(|x| x.is_zero()).then_some(coords)
    }

    pub fn contains(&self, v: &[BigInt]) -> bool {
        self.coordinates(v).is_some()
    }

    pub fn contains_i64(&self, v: &[i64]) -> bool {
        let b: Vec<BigInt> = v.iter().map(|&x| BigInt::from(x)).collect();
        self.contains(&b)
    }

    pub fn is_sublattice_of(&self, o: &Lattice) -> bool {
        (0..self.rank()).all(|i| o.contains(self.basis.row(i)))
    }

    pub fn sum(&self, o: &Lattice) -> Lattice {
        Lattice::from_generators(self.dim, self.basis.vstack(&o.basis))
    }

    pub fn intersect(&self, o: &Lattice) -> Lattice {
        if self.rank() == 0 || o.rank() == 0 {
            return Lattice::zero(self.dim);
        }
        let stacked = self.basis.vstack(&o.basis);
        let left = kernel(&stacked.transpose());
        let q1 = self.rank();
        let mut gens = Vec::new();
        for i in 0..left.rank() {
            let x = &left.basis.row(i)[..q1];
            gens.push(self.basis.left_mul_vec(x));
        }
        Lattice::from_generators(self.dim, IntMatrix::from_big_rows(self.dim, gens))
    }

    pub fn saturation(&self) -> Lattice {
        saturation(self)
    }

    pub fn is_saturated(&self) -> bool {
        self.saturation() == *self
    }

    /// `{y : y·x = 0 for all x in the lattice}` as a lattice of row vectors.
    pub fn annihilator(&self) -> Lattice {
        kernel(&self.basis)
    }

    /// Index in `ℤ^dim` for full-rank lattices (product of the pivots).
    pub fn index(&self) -> Option<BigInt> {
        (self.rank() == self.dim).then(|| (0..self.dim).map(|i| self.basis.get(i, i).clone()).product())
    }

    /// Image under `x ↦ x·B` where `B` has `dim` rows.
    pub fn map_rows(&self, b: &IntMatrix) -> Lattice {
        Lattice::from_generators(b.cols, self.basis.mul(b))
    }
}

/// Surjection `P : ℤ^m → ℤ^t` with kernel the saturated lattice `k`, together
/// with a section `S` (`m × t`) such that `P·S = I`.
pub fn quotient_map(k: &Lattice) -> Result<(IntMatrix, IntMatrix)> {
    let m = k.dim();
    let p = k.annihilator().basis.clone();
    let t = p.rows;
    if t == 0 {
        return Ok((IntMatrix::zeros(0, m), IntMatrix::zeros(m, 0)));
    }
    let h = hnf(&p.transpose());
    for i in 0..t {
        for j in 0..t {
            let expect = if i == j { BigInt::one() } else { BigInt::zero() };
            if *h.h.get(i, j) != expect {
                return Err(Error::Precondition("quotient by a non-saturated lattice".into()));
            }
        }
    }
    let s = h.u.select_rows(&(0..t).collect::<Vec<_>>()).transpose();
    Ok((p, s))
}

/// `offset + lattice`, with the offset reduced to its canonical representative.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coset {
    offset: Vec<BigInt>,
    lattice: Lattice,
}

impl Coset {
    pub fn new(offset: Vec<BigInt>, lattice: Lattice) -> Self {
        assert_eq!(offset.len(), lattice.dim);
        let offset = lattice.reduce(&offset);
        Self { offset, lattice }
    }

    pub fn from_i64(offset: &[i64], lattice: Lattice) -> Self {
        Self::new(offset.iter().map(|&x| BigInt::from(x)).collect(), lattice)
    }

    pub fn full(dim: usize) -> Self {
        Self::new(vec![BigInt::zero(); dim], Lattice::full(dim))
    }

    pub fn point(p: &[i64]) -> Self {
        Self::from_i64(p, Lattice::zero(p.len()))
    }

    pub fn offset(&self) -> &[BigInt] {
        &self.offset
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim
    }

    pub fn rank(&self) -> usize {
        self.lattice.rank()
    }

    pub fn contains(&self, n: &[BigInt]) -> bool {
        let d: Vec<BigInt> = n.iter().zip(&self.offset).map(|(a, b)| a - b).collect();
        self.lattice.contains(&d)
    }

    pub fn contains_i64(&self, n: &[i64]) -> bool {
        let d: Vec<BigInt> = n.iter().zip(&self.offset).map(|(a, b)| BigInt::from(*a) - b).collect();
        self.lattice.contains(&d)
    }

    /// Coordinates of `n - offset` in the lattice's HNF basis.
    pub fn coordinates(&self, n: &[BigInt]) -> Option<Vec<BigInt>> {
        let d: Vec<BigInt> = n.iter().zip(&self.offset).map(|(a, b)| a - b).collect();
        self.lattice.coordinates(&d)
    }

    /// `offset + Σ c_j b_j`.
    pub fn at(&self, coords: &[BigInt]) -> Vec<BigInt> {
        let mut p = self.offset.clone();
        for (c, row) in coords.iter().zip(0..self.rank()) {
            for (j, x) in p.iter_mut().enumerate() {
                *x += c * self.lattice.basis.get(row, j);
            }
        }
        p
    }

    pub fn is_subset_of(&self, o: &Coset) -> bool {
        o.contains(&self.offset) && self.lattice.is_sublattice_of(&o.lattice)
    }

    pub fn intersect(&self, o: &Coset) -> Option<Coset> {
        coset_intersect(self, o)
    }

    /// Visit every member with sup-norm at most `radius`, in lexicographic
    /// order of the HNF coefficients.
    pub fn for_each_in_box<F: FnMut(&[i64])>(&self, radius: i64, mut visit: F) {
        let q = self.rank();
        let basis: Vec<Vec<i128>> = (0..q)
            .map(|i| self.lattice.basis.row(i).iter().map(|v| v.to_i128().expect("basis entry too large")).collect())
            .collect();
        let offset: Vec<i128> = self.offset.iter().map(|v| v.to_i128().expect("offset too large")).collect();
        let pivots = self.lattice.pivots.clone();
        let mut point = offset;
        walk(0, &basis, &pivots, radius as i128, &mut point, &mut visit);
    }

    pub fn enumerate_box(&self, radius: i64) -> Vec<Vec<i64>> {
        let mut out = Vec::new();
        self.for_each_in_box(radius, |p| out.push(p.to_vec()));
        out
    }
}

fn walk<F: FnMut(&[i64])>(
    level: usize,
    basis: &[Vec<i128>],
    pivots: &[usize],
    r: i128,
    point: &mut Vec<i128>,
    visit: &mut F,
) {
    let dim = point.len();
    // columns left of the next pivot are already fixed
    let fixed_upto = if level < pivots.len() { pivots[level] } else { dim };
    let lo_col = if level == 0 { 0 } else { pivots[level - 1] };
    for &x in &point[lo_col..fixed_upto] {
        if x < -r || x > r {
            return;
        }
    }
    if level == pivots.len() {
        let p: Vec<i64> = point.iter().map(|&x| x as i64).collect();
        visit(&p);
        return;
    }
    let col = pivots[level];
    let piv = basis[level][col];
    let s = point[col];
    let lo = div_ceil_i128(-r - s, piv);
    let hi = div_floor_i128(r - s, piv);
    if lo > hi {
        return;
    }
    let row = &basis[level];
    for (x, b) in point.iter_mut().zip(row) {
        *x += lo * b;
    }
    let mut c = lo;
    loop {
        walk(level + 1, basis, pivots, r, point, visit);
        if c == hi {
            break;
        }
        c += 1;
        for (x, b) in point.iter_mut().zip(row) {
            *x += b;
        }
    }
    for (x, b) in point.iter_mut().zip(row) {
        *x -= hi * b;
    }
}

fn div_floor_i128(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn div_ceil_i128(a: i128, b: i128) -> i128 {
    -div_floor_i128(-a, b)
}

/// Intersection of two cosets, or `None` if they are disjoint.
pub fn coset_intersect(c1: &Coset, c2: &Coset) -> Option<Coset> {
    let delta: Vec<BigInt> = c2.offset.iter().zip(&c1.offset).map(|(a, b)| a - b).collect();
    let q1 = c1.rank();
    let stacked = c1.lattice.basis.vstack(&c2.lattice.basis);
    let lattice = c1.lattice.intersect(&c2.lattice);
    if stacked.rows == 0 {
        return delta.iter().all(|x| x.is_zero()).then(|| c1.clone());
    }
    let h = hnf(&stacked);
    // solve t·H = delta on the echelon rows
    let mut res = delta;
    let mut t = vec![BigInt::zero(); stacked.rows];
    for (k, &p) in h.pivots.iter().enumerate() {
        let (q, r) = res[p].div_rem(h.h.get(k, p));
        if !r.is_zero() {
            return None;
        }
        for (j, x) in res.iter_mut().enumerate() {
            *x -= &q * h.h.get(k, j);
        }
        t[k] = q;
    }
    if !res.iter().all(|x| x.is_zero()) {
        return None;
    }
    let ab = h.u.left_mul_vec(&t);
    let shift = c1.lattice.basis.left_mul_vec(&ab[..q1]);
    let x: Vec<BigInt> = c1.offset.iter().zip(&shift).map(|(o, s)| o + s).collect();
    Some(Coset::new(x, lattice))
}

/// A coset minus finitely many cosets (typically of lower rank).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuasiCoset {
    pub base: Coset,
    pub excluded: Vec<Coset>,
}

impl QuasiCoset {
    pub fn new(base: Coset, excluded: Vec<Coset>) -> Self {
        Self { base, excluded }
    }

    pub fn contains_i64(&self, n: &[i64]) -> bool {
        self.base.contains_i64(n) && !self.excluded.iter().any(|c| c.contains_i64(n))
    }

    pub fn enumerate_box(&self, radius: i64) -> Vec<Vec<i64>> {
        let mut out = Vec::new();
        self.base.for_each_in_box(radius, |p| {
            if !self.excluded.iter().any(|c| c.contains_i64(p)) {
                out.push(p.to_vec());
            }
        });
        out
    }
}

/// Members of `coset` with sup-norm at most `radius`.
pub fn enumerate_coset_box(coset: &Coset, radius: i64) -> Vec<Vec<i64>> {
    coset.enumerate_box(radius)
}

/// Visit every point of `[-radius, radius]^dim` in lexicographic order.
pub fn for_each_in_cube<F: FnMut(&[i64])>(dim: usize, radius: i64, visit: F) {
    Coset::full(dim).for_each_in_box(radius, visit);
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mat(cols: usize, rows: &[&[i64]]) -> IntMatrix {
        IntMatrix::from_rows(cols, &rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
    }

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn hnf_example() {
        let m = mat(2, &[&[2, 4], &[6, 8]]);
        let h = hnf(&m);
        assert_eq!(h.h, mat(2, &[&[2, 0], &[0, 4]]));
        assert_eq!(h.u.mul(&m), h.h);
    }

    #[test]
    fn snf_example() {
        let m = mat(2, &[&[2, 4], &[6, 8]]);
        let s = snf(&m);
        assert_eq!(s.diagonal(), big(&[2, 4]));
        assert_eq!(s.u.mul(&m).mul(&s.v), s.s);
    }

    #[test]
    fn kernel_example() {
        let k = kernel(&mat(2, &[&[1, 1]]));
        assert_eq!(k.rank(), 1);
        assert!(k.contains(&big(&[1, -1])));
        assert!(!k.contains(&big(&[1, 1])));
    }

    #[test]
    fn saturation_example() {
        let l = Lattice::from_rows(2, &[vec![2, 2]]);
        let s = saturation(&l);
        assert_eq!(s, Lattice::from_rows(2, &[vec![1, 1]]));
        assert!(!l.is_saturated());
    }

    #[test]
    fn disjoint_cosets() {
        let a = Coset::from_i64(&[0, 0], Lattice::from_rows(2, &[vec![1, 1]]));
        let b = Coset::from_i64(&[1, 0], Lattice::from_rows(2, &[vec![1, -1]]));
        assert!(coset_intersect(&a, &b).is_none());
        let c = Coset::from_i64(&[0, 2], Lattice::from_rows(2, &[vec![1, -1]]));
        let i = coset_intersect(&a, &c).unwrap();
        assert_eq!(i, Coset::point(&[1, 1]));
    }

    #[test]
    fn box_enumeration_counts() {
        let c = Coset::from_i64(&[1], Lattice::from_rows(1, &[vec![2]]));
        let pts = c.enumerate_box(5);
        assert_eq!(pts, vec![vec![-5], vec![-3], vec![-1], vec![1], vec![3], vec![5]]);
        let mut count = 0;
        for_each_in_cube(3, 2, |_| count += 1);
        assert_eq!(count, 125);
    }

    #[test]
    fn quotient_section() {
        let k = Lattice::from_rows(3, &[vec![1, -1, 0]]);
        let (p, s) = quotient_map(&k).unwrap();
        assert_eq!(p.rows(), 2);
        assert_eq!(p.mul(&s), IntMatrix::identity(2));
        assert!(p.mul_vec(&big(&[1, -1, 0])).iter().all(|x| x.is_zero()));
    }

    fn arb_matrix() -> impl Strategy<Value = IntMatrix> {
        (1usize..4, 1usize..4).prop_flat_map(|(r, c)| {
            proptest::collection::vec(proptest::collection::vec(-6i64..7, c), r)
                .prop_map(move |rows| IntMatrix::from_rows(c, &rows))
        })
    }

    fn arb_coset(dim: usize) -> impl Strategy<Value = Coset> {
        (
            proptest::collection::vec(-4i64..5, dim),
            proptest::collection::vec(proptest::collection::vec(-3i64..4, dim), 0..dim + 1),
        )
            .prop_map(move |(o, gens)| Coset::from_i64(&o, Lattice::from_rows(dim, &gens)))
    }

    proptest! {
        #[test]
        fn hnf_is_unimodular_transform(m in arb_matrix()) {
            let h = hnf(&m);
            prop_assert_eq!(h.u.mul(&m), h.h.clone());
            prop_assert_eq!(h.u.determinant().abs(), BigInt::one());
            for (k, &p) in h.pivots.iter().enumerate() {
                let piv = h.h.get(k, p);
                prop_assert!(piv.is_positive());
                for i in 0..k {
                    prop_assert!(!h.h.get(i, p).is_negative() && h.h.get(i, p) < piv);
                }
            }
        }

        #[test]
        fn snf_divisibility(m in arb_matrix()) {
            let s = snf(&m);
            prop_assert_eq!(s.u.mul(&m).mul(&s.v), s.s.clone());
            let d = s.diagonal();
            for w in d.windows(2) {
                if !w[0].is_zero() {
                    prop_assert!(w[1].is_multiple_of(&w[0]));
                } else {
                    prop_assert!(w[1].is_zero());
                }
            }
            for i in 0..s.s.rows() {
                for j in 0..s.s.cols() {
                    if i != j {
                        prop_assert!(s.s.get(i, j).is_zero());
                    }
                }
            }
        }

        #[test]
        fn kernel_is_saturated_and_annihilated(m in arb_matrix()) {
            let k = kernel(&m);
            prop_assert!(k.is_saturated());
            for i in 0..k.rank() {
                prop_assert!(m.mul_vec(k.basis().row(i)).iter().all(|x| x.is_zero()));
            }
            prop_assert_eq!(k.rank() + m.rank(), m.cols());
        }

        #[test]
        fn intersection_matches_brute_force(a in arb_coset(2), b in arb_coset(2)) {
            let inter = coset_intersect(&a, &b);
            let r = 7;
            let mut brute = Vec::new();
            for_each_in_cube(2, r, |p| if a.contains_i64(p) && b.contains_i64(p) { brute.push(p.to_vec()) });
            match inter {
                None => prop_assert!(brute.is_empty()),
                Some(c) => prop_assert_eq!(c.enumerate_box(r), brute),
            }
        }

        #[test]
        fn box_enumeration_matches_filter(c in arb_coset(3)) {
            let r = 3;
            let mut brute = Vec::new();
            for_each_in_cube(3, r, |p| if c.contains_i64(p) { brute.push(p.to_vec()) });
            let mut got = c.enumerate_box(r);
            got.sort();
            prop_assert_eq!(got, brute);
        }
    }
}
