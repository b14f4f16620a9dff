//! Affine heights, the height seminorm attached to the characters of a PEP
//! vector, and the volume of its unit ball.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lattice::{kernel, quotient_map, IntMatrix, Lattice};
use crate::pep::{canonicalize, PepVector};
use crate::places::{archimedean_height_ln, finite_height_ln, finite_support, normalized_log_abs, Field, FieldElement, Place};
use crate::reduction::stabilizer;

/// `h_aff(x) = (1/[K:ℚ]) Σ_v ln max(1, ‖x_1‖_v, …, ‖x_n‖_v)`; the finite
/// part is exact (an ideal index), the archimedean part is in double
/// precision without cancellation.
pub fn affine_height(xs: &[FieldElement]) -> f64 {
    let field = xs.iter().map(|x| x.field()).find(|k| *k != Field::Rational).unwrap_or(Field::Rational);
    let lifted: Vec<FieldElement> = xs.iter().map(|x| x.lift(field).expect("elements of one field")).collect();
    (finite_height_ln(&lifted) + archimedean_height_ln(&lifted)) / field.degree() as f64
}

/// `H_aff` of a tuple of rationals as an exact integer: `max(D, |D x_i|)`
/// with `D` the least common denominator.
pub fn affine_height_rational(xs: &[FieldElement]) -> Option<BigInt> {
    if xs.iter().any(|x| !x.is_rational()) {
        return None;
    }
    let mut den = BigInt::one();
    for x in xs {
        den = den.lcm(x.a().denom());
    }
    let mut h = den.clone();
    for x in xs {
        let v = (x.a() * num_rational::BigRational::from_integer(den.clone())).to_integer().abs();
        if v > h {
            h = v;
        }
    }
    Some(h)
}

/// `‖n‖ = (1/[K:ℚ]) Σ_v max(0, max_i L_{v,i}(n))` with `L_{v,i}` the linear
/// forms `n ↦ ln ‖χ_i(n)‖_v`.
#[derive(Clone, Debug)]
pub struct HeightSeminorm {
    pub variables: usize,
    pub degree: u32,
    pub places: Vec<Place>,
    /// Per place, the distinct nonzero forms (one coefficient per variable).
    pub forms: Vec<Vec<Vec<f64>>>,
    /// `∩ ker χ_i`.
    pub kernel: Lattice,
    /// Integer points where the seminorm vanishes: the saturation of `kernel`.
    pub zero_lattice: Lattice,
}

pub fn build_height_seminorm(f: &PepVector) -> Result<HeightSeminorm> {
    let g = canonicalize(f)?;
    let r = g.variables();
    let field = g.field();
    let mut places = field.archimedean_places();
    let mut fin = Vec::new();
    for b in g.bases() {
        fin.extend(finite_support(b)?);
    }
    fin.sort();
    fin.dedup();
    places.extend(fin);
    let chars = g.characters();
    let mut forms = Vec::with_capacity(places.len());
    for v in &places {
        let logs: Vec<f64> = g.bases().iter().map(|b| normalized_log_abs(b, v)).collect::<Result<_>>()?;
        let mut at_v: Vec<Vec<f64>> = Vec::new();
        for c in &chars {
            let a = c.matrix();
            let form: Vec<f64> = (0..r)
                .map(|j| (0..a.rows()).map(|i| num_traits::ToPrimitive::to_f64(a.get(i, j)).unwrap() * logs[i]).sum())
                .collect();
            if form.iter().all(|x| x.abs() < 1e-300) {
                continue;
            }
            if !at_v.iter().any(|o| same_vector(o, &form)) {
                at_v.push(form);
            }
        }
        forms.push(at_v);
    }
    let kernel_lattice = stabilizer(&g, &crate::lattice::Coset::full(r))?;
    let zero_lattice = kernel_lattice.saturation();
    Ok(HeightSeminorm { variables: r, degree: field.degree(), places, forms, kernel: kernel_lattice, zero_lattice })
}

fn same_vector(a: &[f64], b: &[f64]) -> bool {
    let scale = a.iter().chain(b).fold(1.0f64, |m, x| m.max(x.abs()));
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * scale)
}

fn dot(a: &[f64], x: &[f64]) -> f64 {
    a.iter().zip(x).map(|(p, q)| p * q).sum()
}

impl HeightSeminorm {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut total = 0.0;
        for at_v in &self.forms {
            let m = at_v.iter().map(|a| dot(a, x)).fold(0.0f64, f64::max);
            total += m;
        }
        total / self.degree as f64
    }

    /// Seminorm at an integer point; exactly zero on the zero lattice.
    pub fn eval_int(&self, n: &[i64]) -> f64 {
        if self.zero_lattice.contains_i64(n) {
            return 0.0;
        }
        let x: Vec<f64> = n.iter().map(|&v| v as f64).collect();
        self.eval(&x)
    }

    /// Rank of the quotient on which the seminorm is a norm.
    pub fn quotient_rank(&self) -> usize {
        self.variables - self.zero_lattice.rank()
    }

    /// Forms in coordinates of `ℤ^r / zero_lattice` (via a section of the
    /// quotient map), together with the quotient map itself.
    pub fn quotient_forms(&self) -> Result<(IntMatrix, Vec<Vec<Vec<f64>>>)> {
        let (p, s) = quotient_map(&self.zero_lattice)?;
        let t = p.rows();
        let sf: Vec<Vec<f64>> = (0..self.variables)
            .map(|i| (0..t).map(|j| num_traits::ToPrimitive::to_f64(s.get(i, j)).unwrap()).collect())
            .collect();
        let forms = self
            .forms
            .iter()
            .map(|at_v| at_v.iter().map(|a| (0..t).map(|j| (0..self.variables).map(|i| a[i] * sf[i][j]).sum()).collect()).collect())
            .collect();
        Ok((p, forms))
    }

    /// Half-spaces `a·x ≤ 1` (quotient coordinates) cutting out the unit ball.
    pub fn ball_halfspaces(&self) -> Result<Vec<Vec<f64>>> {
        let (p, forms) = self.quotient_forms()?;
        let t = p.rows();
        let deg = self.degree as f64;
        let mut acc: Vec<Vec<f64>> = vec![vec![0.0; t]];
        for at_v in &forms {
            let mut next = Vec::with_capacity(acc.len() * (at_v.len() + 1));
            for partial in &acc {
                next.push(partial.clone());
                for a in at_v {
                    next.push(partial.iter().zip(a).map(|(x, y)| x + y).collect());
                }
            }
            if next.len() > MAX_HALFSPACES {
                return Err(Error::Cap { what: "unit ball half-spaces", limit: MAX_HALFSPACES as u64, requested: next.len() as u64 });
            }
            acc = next;
        }
        let mut out: Vec<Vec<f64>> = Vec::new();
        for a in acc {
            let a: Vec<f64> = a.iter().map(|x| x / deg).collect();
            if a.iter().all(|x| x.abs() < 1e-14) {
                continue;
            }
            if !out.iter().any(|o| same_vector(o, &a)) {
                out.push(a);
            }
        }
        Ok(out)
    }

    /// Vertices of the unit ball in quotient coordinates.
    pub fn ball_vertices(&self) -> Result<Vec<Vec<f64>>> {
        let hs = self.ball_halfspaces()?;
        polytope_vertices(&hs, self.quotient_rank())
    }

    /// Largest `c` with `‖x‖ ≥ c·|x|_∞` on the quotient.
    pub fn sup_norm_ratio(&self) -> Result<f64> {
        if self.quotient_rank() == 0 {
            return Ok(f64::INFINITY);
        }
        let verts = self.ball_vertices()?;
        let m = verts.iter().flat_map(|v| v.iter().map(|x| x.abs())).fold(0.0f64, f64::max);
        if m == 0.0 {
            return Err(Error::Diagnostic("unit ball has no vertices".into()));
        }
        Ok(1.0 / m)
    }
}

const MAX_HALFSPACES: usize = 1 << 16;

/// Seminorm at a point (convenience wrapper).
pub fn eval_seminorm(n: &HeightSeminorm, x: &[i64]) -> f64 {
    n.eval_int(x)
}

fn solve(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let d = b.len();
    for c in 0..d {
        let p = (c..d).max_by(|&i, &j| m[i][c].abs().partial_cmp(&m[j][c].abs()).unwrap())?;
        if m[p][c].abs() < 1e-12 {
            return None;
        }
        m.swap(c, p);
        b.swap(c, p);
        for i in c + 1..d {
            let f = m[i][c] / m[c][c];
            if f == 0.0 {
                continue;
            }
            for j in c..d {
                m[i][j] -= f * m[c][j];
            }
            b[i] -= f * b[c];
        }
    }
    let mut x = vec![0.0; d];
    for i in (0..d).rev() {
        let s: f64 = (i + 1..d).map(|j| m[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / m[i][i];
    }
    Some(x)
}

fn combinations(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        if idx[i] == i + n - k {
            return;
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Vertices of the bounded polytope `{x : a·x ≤ 1 for all a}` in dimension `d`.
pub fn polytope_vertices(hs: &[Vec<f64>], d: usize) -> Result<Vec<Vec<f64>>> {
    if d == 0 {
        return Ok(vec![Vec::new()]);
    }
    let mut verts: Vec<Vec<f64>> = Vec::new();
    let mut budget: u64 = 0;
    let mut over = false;
    combinations(hs.len(), d, |idx| {
        budget += 1;
        if budget > 5_000_000 {
            over = true;
            return;
        }
        let m: Vec<Vec<f64>> = idx.iter().map(|&i| hs[i].clone()).collect();
        let Some(x) = solve(m, vec![1.0; d]) else { return };
        if hs.iter().all(|a| dot(a, &x) <= 1.0 + 1e-9) && !verts.iter().any(|v| same_point(v, &x)) {
            verts.push(x);
        }
    });
    if over {
        return Err(Error::Cap { what: "vertex enumeration", limit: 5_000_000, requested: budget });
    }
    Ok(verts)
}

fn same_point(a: &[f64], b: &[f64]) -> bool {
    let scale = a.iter().chain(b).fold(1.0f64, |m, x| m.max(x.abs()));
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9 * scale)
}

fn polygon_area(pts: &[Vec<f64>]) -> f64 {
    // pts are 2D and in convex position
    let n = pts.len();
    if n < 3 {
        return 0.0;
    }
    let cx = pts.iter().map(|p| p[0]).sum::<f64>() / n as f64;
    let cy = pts.iter().map(|p| p[1]).sum::<f64>() / n as f64;
    let mut order: Vec<(f64, usize)> = pts.iter().enumerate().map(|(i, p)| (libm::atan2(p[1] - cy, p[0] - cx), i)).collect();
    order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut area = 0.0;
    for k in 0..n {
        let p = &pts[order[k].1];
        let q = &pts[order[(k + 1) % n].1];
        area += p[0] * q[1] - q[0] * p[1];
    }
    area.abs() / 2.0
}

fn polytope_volume(hs: &[Vec<f64>], d: usize) -> Result<f64> {
    let verts = polytope_vertices(hs, d)?;
    match d {
        0 => Ok(1.0),
        1 => {
            let lo = verts.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min);
            let hi = verts.iter().map(|v| v[0]).fold(f64::NEG_INFINITY, f64::max);
            Ok(hi - lo)
        }
        2 => Ok(polygon_area(&verts)),
        3 => {
            // cone decomposition from the origin: V = Σ area(F) / (3|a_F|)
            let mut vol = 0.0;
            for a in hs {
                let on: Vec<&Vec<f64>> = verts.iter().filter(|v| (dot(a, v) - 1.0).abs() < 1e-7).collect();
                if on.len() < 3 {
                    continue;
                }
                let norm = libm::sqrt(dot(a, a));
                let nrm: Vec<f64> = a.iter().map(|x| x / norm).collect();
                let helper = if nrm[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
                let u = normalize(&cross(&nrm, &helper));
                let w = cross(&nrm, &u);
                let flat: Vec<Vec<f64>> = on.iter().map(|p| vec![dot(p, &u), dot(p, &w)]).collect();
                vol += polygon_area(&flat) / (3.0 * norm);
            }
            Ok(vol)
        }
        _ => Err(Error::Precondition("exact volumes are only computed up to dimension 3".into())),
    }
}

fn cross(a: &[f64], b: &[f64]) -> Vec<f64> {
    vec![a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn normalize(a: &[f64]) -> Vec<f64> {
    let n = libm::sqrt(dot(a, a));
    a.iter().map(|x| x / n).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VolumeMethod {
    Exact,
    MonteCarlo,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VolumeEstimate {
    pub volume: f64,
    pub std_error: f64,
    pub method: VolumeMethod,
    pub rank: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct VolumeOptions {
    pub samples: u64,
    pub seed: u64,
    /// Largest quotient rank handled by the exact polytope computation.
    pub exact_max_rank: usize,
}

impl Default for VolumeOptions {
    fn default() -> Self {
        Self { samples: 1_000_000, seed: 0x5eed, exact_max_rank: 3 }
    }
}

/// Samples per independent random stream; streams are indexed so the
/// estimate does not depend on how chunks are scheduled.
pub const MC_CHUNK: u64 = 1 << 16;

/// Lebesgue volume of `{x : ‖x‖ ≤ 1}` on `ℝ^r / (zero lattice ⊗ ℝ)`, measured
/// in coordinates of the quotient lattice.
pub fn unit_ball_volume(n: &HeightSeminorm, opts: &VolumeOptions) -> Result<VolumeEstimate> {
    let rank = n.quotient_rank();
    if rank <= opts.exact_max_rank {
        let hs = n.ball_halfspaces()?;
        let volume = polytope_volume(&hs, rank)?;
        return Ok(VolumeEstimate { volume, std_error: 0.0, method: VolumeMethod::Exact, rank });
    }
    monte_carlo_volume(n, opts)
}

/// Partial sums of `φ(u)^{-d}` over uniform directions for one stream.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MonteCarloChunk {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl MonteCarloChunk {
    pub fn merge(self, o: MonteCarloChunk) -> MonteCarloChunk {
        MonteCarloChunk { count: self.count + o.count, sum: self.sum + o.sum, sum_sq: self.sum_sq + o.sum_sq }
    }
}

/// One stream of the radial estimator `vol = V_d · E[φ(u)^{-d}]`.
pub fn monte_carlo_chunk(forms: &[Vec<Vec<f64>>], degree: u32, d: usize, seed: u64, stream: u64, samples: u64) -> MonteCarloChunk {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut out = MonteCarloChunk::default();
    let mut u = vec![0.0; d];
    let mut spare: Option<f64> = None;
    for _ in 0..samples {
        for x in u.iter_mut() {
            *x = match spare.take() {
                Some(z) => z,
                None => {
                    let (a, b) = box_muller(&mut rng);
                    spare = Some(b);
                    a
                }
            };
        }
        let len = libm::sqrt(dot(&u, &u));
        let mut phi = 0.0;
        for at_v in forms {
            phi += at_v.iter().map(|a| dot(a, &u) / len).fold(0.0f64, f64::max);
        }
        phi /= degree as f64;
        let w = libm::pow(phi, -(d as f64));
        out.count += 1;
        out.sum += w;
        out.sum_sq += w * w;
    }
    out
}

fn uniform_open(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
}

fn box_muller(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let u1 = uniform_open(rng);
    let u2 = uniform_open(rng);
    let r = libm::sqrt(-2.0 * libm::log(u1));
    let t = 2.0 * core::f64::consts::PI * u2;
    (r * libm::cos(t), r * libm::sin(t))
}

/// Volume of the Euclidean unit ball in dimension `d`.
pub fn euclidean_ball_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    libm::pow(core::f64::consts::PI, h) / libm::tgamma(h + 1.0)
}

/// Turn merged chunk sums into a volume estimate.
pub fn finish_monte_carlo(total: MonteCarloChunk, d: usize) -> VolumeEstimate {
    let n = total.count as f64;
    let mean = total.sum / n;
    let var = (total.sum_sq / n - mean * mean).max(0.0);
    let vd = euclidean_ball_volume(d);
    VolumeEstimate { volume: vd * mean, std_error: vd * libm::sqrt(var / n), method: VolumeMethod::MonteCarlo, rank: d }
}

pub fn monte_carlo_volume(n: &HeightSeminorm, opts: &VolumeOptions) -> Result<VolumeEstimate> {
    let d = n.quotient_rank();
    if d == 0 {
        return Ok(VolumeEstimate { volume: 1.0, std_error: 0.0, method: VolumeMethod::Exact, rank: 0 });
    }
    let (_, forms) = n.quotient_forms()?;
    let chunks = opts.samples.div_ceil(MC_CHUNK);
    let mut total = MonteCarloChunk::default();
    for c in 0..chunks {
        let take = MC_CHUNK.min(opts.samples - c * MC_CHUNK);
        total = total.merge(monte_carlo_chunk(&forms, n.degree, d, opts.seed, c, take));
    }
    Ok(finish_monte_carlo(total, d))
}

/// `c₀ = Σ_j h_aff(a_j)` over the coefficients of a monomial vector; bounds
/// `|h_aff(f(n)) − ‖n‖_f|`.
pub fn monomial_height_gap(f: &PepVector) -> Result<f64> {
    if !f.is_monomial() {
        return Err(Error::Precondition("height gap needs every component to be a monomial".into()));
    }
    Ok(f.components().iter().flat_map(|c| c.terms.iter()).map(|t| affine_height(core::slice::from_ref(&t.coeff))).sum())
}

/// Same sum without the monomial requirement (used for best-effort boxes).
pub fn coefficient_height_sum(f: &PepVector) -> f64 {
    f.components().iter().flat_map(|c| c.terms.iter()).map(|t| affine_height(core::slice::from_ref(&t.coeff))).sum()
}

/// Integer kernel of a form matrix (helper for callers building seminorms by hand).
pub fn integer_kernel(rows: &IntMatrix) -> Lattice {
    kernel(rows)
}
