//! Image enumeration and height counts, asymptotic fits, zero loci, fiber
//! tables, degeneracy partitions and the anti-triangular census.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{FromPrimitive, ToPrimitive};

use crate::error::{Error, Result};
use crate::heightnorm::{
    affine_height, affine_height_rational, build_height_seminorm, coefficient_height_sum, monomial_height_gap, unit_ball_volume,
    VolumeOptions,
};
use crate::lattice::{Coset, Lattice, QuasiCoset};
use crate::pep::{canonicalize, degeneracy_of_terms, is_identically_zero, restrict_to_coset, DegeneracyType, PepPolynomial, PepVector, Term};
use crate::places::{Field, FieldElement};
use crate::reduction::{is_reduced, reduced_decomposition, stabilizer};

/// Largest number of lattice points a single enumeration may visit.
pub const MAX_BOX_POINTS: u64 = 50_000_000;

/// Largest modulus tried when looking for residue-class structure in fibers.
pub const MAX_FIBER_MODULUS: u64 = 64;

fn check_box(dim: usize, radius: i64) -> Result<()> {
    let side = (2 * radius.max(0) as u128) + 1;
    let n = side.checked_pow(dim as u32).unwrap_or(u128::MAX);
    if n > MAX_BOX_POINTS as u128 {
        return Err(Error::Cap { what: "box points", limit: MAX_BOX_POINTS, requested: n.min(u64::MAX as u128) as u64 });
    }
    Ok(())
}

/// Visit the points of `[lo, hi] × [-radius, radius]^{dim-1}`; with no
/// variables the single point is visited when the slab contains 0.
fn for_each_in_slab(dim: usize, radius: i64, lo: i64, hi: i64, mut visit: impl FnMut(&[i64]) -> Result<()>) -> Result<()> {
    if dim == 0 {
        return if lo <= 0 && 0 <= hi { visit(&[]) } else { Ok(()) };
    }
    let mut err = None;
    let mut p = vec![0i64; dim];
    for first in lo.max(-radius)..=hi.min(radius) {
        p[0] = first;
        crate::lattice::for_each_in_cube(dim - 1, radius, |rest| {
            if err.is_some() {
                return;
            }
            p[1..].copy_from_slice(rest);
            if let Err(e) = visit(&p) {
                err = Some(e);
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
    }
    Ok(())
}

fn for_each_in_box(dim: usize, radius: i64, visit: impl FnMut(&[i64]) -> Result<()>) -> Result<()> {
    check_box(dim, radius)?;
    for_each_in_slab(dim, radius, -radius, radius, visit)
}

/// Distinct values of `f` on a box, with the size of each fiber.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ImageTally {
    pub fibers: BTreeMap<Vec<FieldElement>, u64>,
}

impl ImageTally {
    pub fn merge(mut self, other: ImageTally) -> ImageTally {
        for (k, v) in other.fibers {
            *self.fibers.entry(k).or_insert(0) += v;
        }
        self
    }

    pub fn len(&self) -> usize {
        self.fibers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fibers.is_empty()
    }

    pub fn points(&self) -> u64 {
        self.fibers.values().sum()
    }
}

pub fn enumerate_image(f: &PepVector, radius: i64) -> Result<ImageTally> {
    check_box(f.variables(), radius)?;
    enumerate_image_slab(f, radius, -radius, radius)
}

/// Part of the image coming from points whose first coordinate is in `[lo, hi]`.
pub fn enumerate_image_slab(f: &PepVector, radius: i64, lo: i64, hi: i64) -> Result<ImageTally> {
    let mut t = ImageTally::default();
    for_each_in_slab(f.variables(), radius, lo, hi, |n| {
        *t.fibers.entry(f.evaluate(n)?).or_insert(0) += 1;
        Ok(())
    })?;
    Ok(t)
}

/// `h_aff` of a value vector, with the exact integer height when every
/// coordinate is rational.
#[derive(Clone, Debug, PartialEq)]
pub struct PointHeight {
    pub ln: f64,
    pub exact: Option<BigInt>,
}

impl PointHeight {
    pub fn of(v: &[FieldElement]) -> PointHeight {
        PointHeight { ln: affine_height(v), exact: affine_height_rational(v) }
    }

    /// `H_aff ≤ t`; decided exactly for rational points.
    pub fn at_most(&self, t: f64) -> bool {
        match (&self.exact, BigInt::from_f64(t.floor())) {
            (Some(h), Some(tf)) => *h <= tf,
            _ => {
                let lt = libm::log(t);
                self.ln <= lt + 1e-12 * lt.abs().max(1.0)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Completeness {
    Certified,
    BoundaryEstimated,
}

/// One reduced piece to enumerate, with the box radius that captures every
/// point of height at most the largest threshold.
#[derive(Clone, Debug)]
pub struct CountPiece {
    pub pep: PepVector,
    pub radius: i64,
    pub gap: f64,
    pub certified: bool,
}

#[derive(Clone, Debug)]
pub struct CountPlan {
    pub thresholds: Vec<f64>,
    pub rank: usize,
    pub pieces: Vec<CountPiece>,
}

impl CountPlan {
    pub fn completeness(&self) -> Completeness {
        if self.pieces.iter().all(|p| p.certified) {
            Completeness::Certified
        } else {
            Completeness::BoundaryEstimated
        }
    }

    pub fn box_radius(&self) -> i64 {
        self.pieces.iter().map(|p| p.radius).max().unwrap_or(0)
    }
}

pub fn plan_count(f: &PepVector, thresholds: &[f64]) -> Result<CountPlan> {
    if thresholds.is_empty() || thresholds.windows(2).any(|w| w[0] >= w[1]) || thresholds[0] < 1.0 {
        return Err(Error::Precondition("thresholds must be increasing and at least 1".into()));
    }
    let (pieces, rank) = plan_pieces(f, libm::log(*thresholds.last().unwrap()))?;
    Ok(CountPlan { thresholds: thresholds.to_vec(), rank, pieces })
}

/// Reduced pieces of `f` with boxes covering every point of log-height at
/// most `lt`, and the rank.
fn plan_pieces(f: &PepVector, lt: f64) -> Result<(Vec<CountPiece>, usize)> {
    let rd = reduced_decomposition(f)?;
    let mut pieces = Vec::with_capacity(rd.pieces.len());
    for p in &rd.pieces {
        let g = p.pep.clone();
        let certified = g.is_monomial();
        let gap = if certified { monomial_height_gap(&g)? } else { coefficient_height_sum(&g) };
        let radius = if g.variables() == 0 {
            0
        } else {
            let n = build_height_seminorm(&g)?;
            if n.quotient_rank() != g.variables() {
                return Err(Error::Diagnostic("reduced piece has a degenerate height seminorm".into()));
            }
            let c = n.sup_norm_ratio()?;
            ((lt + gap) / c).floor() as i64 + 1
        };
        check_box(g.variables(), radius)?;
        pieces.push(CountPiece { pep: g, radius, gap, certified });
    }
    Ok((pieces, rd.rank()))
}

/// Image points of `f` found in boxes that contain every point of
/// log-height at most `lt` (and possibly more); the flag says whether the
/// containment is certified.
pub fn image_up_to_height(f: &PepVector, lt: f64) -> Result<(BTreeSet<Vec<FieldElement>>, bool)> {
    let (pieces, _) = plan_pieces(f, lt)?;
    let mut out = BTreeSet::new();
    for p in &pieces {
        for_each_in_slab(p.pep.variables(), p.radius, -p.radius, p.radius, |m| {
            out.insert(p.pep.evaluate(m)?);
            Ok(())
        })?;
    }
    Ok((out, pieces.iter().all(|p| p.certified)))
}

/// Distinct points of height at most the largest threshold.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HeightTally {
    pub points: BTreeMap<Vec<FieldElement>, PointHeight>,
}

impl HeightTally {
    pub fn merge(mut self, other: HeightTally) -> HeightTally {
        for (k, v) in other.points {
            self.points.entry(k).or_insert(v);
        }
        self
    }
}

/// Enumerate one slab of one piece of a plan.
pub fn tally_piece_slab(plan: &CountPlan, piece: usize, lo: i64, hi: i64) -> Result<HeightTally> {
    let p = &plan.pieces[piece];
    let tmax = *plan.thresholds.last().unwrap();
    let mut t = HeightTally::default();
    for_each_in_slab(p.pep.variables(), p.radius, lo, hi, |m| {
        let v = p.pep.evaluate(m)?;
        if t.points.contains_key(&v) {
            return Ok(());
        }
        let h = PointHeight::of(&v);
        if h.at_most(tmax) {
            t.points.insert(v, h);
        }
        Ok(())
    })?;
    Ok(t)
}

/// `N(T)` per threshold, with the box used and the fit against `c (ln T)^{r'}`.
#[derive(Clone, Debug, PartialEq)]
pub struct CountReport {
    pub thresholds: Vec<f64>,
    pub counts: Vec<u64>,
    pub box_radius: i64,
    pub completeness: Completeness,
    pub rank: usize,
    pub fit: Option<AsymptoticFit>,
    /// Sum of unit-ball volumes over the distinct top-rank pieces.
    pub volume_prediction: Option<f64>,
}

pub fn finish_count(plan: &CountPlan, tally: &HeightTally) -> Result<CountReport> {
    let counts: Vec<u64> = plan.thresholds.iter().map(|&t| tally.points.values().filter(|h| h.at_most(t)).count() as u64).collect();
    let mut report = CountReport {
        thresholds: plan.thresholds.clone(),
        counts,
        box_radius: plan.box_radius(),
        completeness: plan.completeness(),
        rank: plan.rank,
        fit: None,
        volume_prediction: volume_prediction(plan).ok(),
    };
    if report.thresholds.len() >= 4 {
        report.fit = Some(fit_asymptotic(&report)?);
    }
    Ok(report)
}

fn volume_prediction(plan: &CountPlan) -> Result<f64> {
    let mut seen = BTreeSet::new();
    let mut total = 0.0;
    for p in plan.pieces.iter().filter(|p| p.pep.variables() == plan.rank) {
        let g = canonicalize(&p.pep)?;
        if !seen.insert(g.clone()) {
            continue;
        }
        total += unit_ball_volume(&build_height_seminorm(&g)?, &VolumeOptions::default())?.volume;
    }
    Ok(total)
}

/// Count distinct image points of height at most each threshold. Certified
/// when every reduced piece is a monomial vector; otherwise the box comes
/// from the same bound applied to the coefficient heights.
pub fn count_by_height(f: &PepVector, thresholds: &[f64]) -> Result<CountReport> {
    let plan = plan_count(f, thresholds)?;
    let mut tally = HeightTally::default();
    for (i, p) in plan.pieces.iter().enumerate() {
        tally = tally.merge(tally_piece_slab(&plan, i, -p.radius, p.radius)?);
    }
    finish_count(&plan, &tally)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AsymptoticFit {
    /// Mean of `N(T)/(ln T)^rank` over the upper half of thresholds.
    pub c_hat: f64,
    /// Least-squares slope of `ln N` against `ln ln T`, upper half.
    pub slope: Option<f64>,
    pub r_hat: Option<i64>,
    pub rank: usize,
    /// Rounded slope agrees with the exact rank.
    pub consistent: bool,
}

pub fn fit_asymptotic(report: &CountReport) -> Result<AsymptoticFit> {
    let n = report.thresholds.len();
    if n < 4 {
        return Err(Error::Precondition("fitting needs at least four thresholds".into()));
    }
    let top: Vec<(f64, f64)> =
        report.thresholds[n / 2..].iter().zip(&report.counts[n / 2..]).map(|(&t, &c)| (libm::log(t), c as f64)).collect();
    let rank = report.rank;
    let c_hat = top.iter().map(|&(lt, c)| c / libm::pow(lt, rank as f64)).sum::<f64>() / top.len() as f64;
    let pts: Vec<(f64, f64)> = top.iter().filter(|&&(lt, c)| lt > 1.0 && c > 0.0).map(|&(lt, c)| (libm::log(lt), libm::log(c))).collect();
    let slope = if pts.len() >= 2 {
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        (sxx > 0.0).then(|| sxy / sxx)
    } else {
        None
    };
    let r_hat = slope.map(|s| libm::round(s) as i64);
    let consistent = r_hat.is_some_and(|r| r == rank as i64);
    Ok(AsymptoticFit { c_hat, slope, r_hat, rank, consistent })
}

/// Group `points` into cosets accepted by `accept`. The coset spanned by all
/// points is tried first; otherwise cosets are grown one difference vector
/// at a time from each uncovered point, nearest neighbours first.
fn infer_cosets(points: &[Vec<i64>], mut accept: impl FnMut(&Coset) -> Result<bool>) -> Result<Vec<Coset>> {
    if points.is_empty() {
        return Ok(Vec::new());
    }
    let dim = points[0].len();
    let base = &points[0];
    let diffs: Vec<Vec<i64>> = points[1..].iter().map(|p| sub(p, base)).collect();
    let whole = Coset::from_i64(base, Lattice::from_rows(dim, &diffs));
    if accept(&whole)? {
        return Ok(vec![whole]);
    }
    let mut found: Vec<Coset> = Vec::new();
    let mut uncovered: Vec<&Vec<i64>> = points.iter().collect();
    while let Some(w) = uncovered.first().copied() {
        let mut near: Vec<&Vec<i64>> = points.iter().filter(|p| *p != w).collect();
        near.sort_by_key(|p| (sup(&sub(p, w)), (*p).clone()));
        near.truncate(16);
        let mut lattice = Lattice::zero(dim);
        for o in near {
            let d = sub(o, w);
            if lattice.contains_i64(&d) {
                continue;
            }
            let grown = lattice.sum(&Lattice::from_rows(dim, &[d]));
            if accept(&Coset::from_i64(w, grown.clone()))? {
                lattice = grown;
            }
        }
        let c = Coset::from_i64(w, lattice);
        let ok = c.rank() > 0 || accept(&c)?;
        uncovered.retain(|p| !(ok && c.contains_i64(p)) && *p != w);
        if ok {
            found.push(c);
        }
    }
    let mut out: Vec<Coset> = Vec::new();
    for (i, c) in found.iter().enumerate() {
        let redundant = found.iter().enumerate().any(|(j, o)| j != i && c.is_subset_of(o) && (c != o || j < i));
        if !redundant {
            out.push(c.clone());
        }
    }
    Ok(out)
}

fn sub(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn sup(a: &[i64]) -> i64 {
    a.iter().map(|x| x.abs()).max().unwrap_or(0)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZeroLocusReport {
    /// Zeros of `f` in the box.
    pub witnesses: Vec<Vec<i64>>,
    /// Cosets on which `f` vanishes identically.
    pub cosets: Vec<Coset>,
    pub uncovered: Vec<Vec<i64>>,
}

/// Zeros of `f` in the box `‖n‖∞ ≤ radius`, explained by cosets that are
/// checked symbolically to lie in the zero set.
pub fn empirical_zero_locus(f: &PepVector, radius: i64) -> Result<ZeroLocusReport> {
    let mut witnesses = Vec::new();
    for_each_in_box(f.variables(), radius, |n| {
        if f.evaluate(n)?.iter().all(|x| x.is_zero()) {
            witnesses.push(n.to_vec());
        }
        Ok(())
    })?;
    let cosets = infer_cosets(&witnesses, |c| is_identically_zero(&restrict_to_coset(f, c)?))?;
    let uncovered = witnesses.iter().filter(|w| !cosets.iter().any(|c| c.contains_i64(w))).cloned().collect();
    Ok(ZeroLocusReport { witnesses, cosets, uncovered })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecurrenceZeros {
    pub finite: Vec<i64>,
    /// `(offset, modulus)` with `0 ≤ offset < modulus`.
    pub progressions: Vec<(i64, i64)>,
}

/// Zeros of a one-variable scalar PEP: finitely many points plus
/// symbolically verified arithmetic progressions.
pub fn recurrence_zero_structure(f: &PepVector, radius: i64) -> Result<RecurrenceZeros> {
    if f.variables() != 1 || f.components().len() != 1 {
        return Err(Error::Precondition("expected a single polynomial in one variable".into()));
    }
    let z = empirical_zero_locus(f, radius)?;
    let mut finite = Vec::new();
    let mut progressions = Vec::new();
    for c in &z.cosets {
        let off = c.offset()[0].to_i64().ok_or(Error::Diagnostic("offset out of range".into()))?;
        if c.rank() == 0 {
            finite.push(off);
        } else {
            let m = c.lattice().basis().get(0, 0).to_i64().ok_or(Error::Diagnostic("modulus out of range".into()))?.abs();
            progressions.push((off.rem_euclid(m), m));
        }
    }
    finite.sort();
    progressions.sort();
    Ok(RecurrenceZeros { finite, progressions })
}

fn join_fields(a: Field, b: Field) -> Result<Field> {
    match (a, b) {
        (Field::Rational, k) | (k, Field::Rational) => Ok(k),
        (x, y) if x == y => Ok(x),
        _ => Err(Error::IncompatibleFields),
    }
}

fn lift_all(v: Vec<FieldElement>, k: Field) -> Result<Vec<FieldElement>> {
    v.iter().map(|x| x.lift(k)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiberReport {
    /// Smallest modulus `N` for which the fiber size is most nearly a
    /// function of `n mod N`.
    pub modulus: u64,
    /// Residue class (each coordinate in `[0, N)`) and its fiber size.
    pub classes: Vec<(Vec<i64>, u64)>,
    /// Points whose fiber size differs from their class value.
    pub violators: Vec<Vec<i64>>,
    /// Cosets made entirely of violators in the box.
    pub excluded: Vec<Coset>,
    pub g_radius: i64,
    /// The `g` box provably contains every preimage.
    pub certified: bool,
}

/// Sizes of the fibers `g⁻¹(f(n))` for `n` in a box, and their dependence
/// on `n mod N`.
pub fn fiber_statistics(f: &PepVector, g: &PepVector, radius: i64) -> Result<FiberReport> {
    if f.components().len() != g.components().len() {
        return Err(Error::Precondition("f and g must have the same number of components".into()));
    }
    if !is_reduced(g)? {
        return Err(Error::Precondition("g must be reduced".into()));
    }
    let k = join_fields(f.field(), g.field())?;
    let mut points = Vec::new();
    let mut values = Vec::new();
    let mut hmax: f64 = 0.0;
    for_each_in_box(f.variables(), radius, |n| {
        let v = lift_all(f.evaluate(n)?, k)?;
        hmax = hmax.max(affine_height(&v));
        points.push(n.to_vec());
        values.push(v);
        Ok(())
    })?;
    let certified = g.is_monomial();
    let gap = if certified { monomial_height_gap(g)? } else { coefficient_height_sum(g) };
    let g_radius = if g.variables() == 0 {
        0
    } else {
        let c = build_height_seminorm(g)?.sup_norm_ratio()?;
        ((hmax + gap) / c).floor() as i64 + 1
    };
    let wanted: BTreeSet<&Vec<FieldElement>> = values.iter().collect();
    let mut preimages: BTreeMap<Vec<FieldElement>, u64> = BTreeMap::new();
    for_each_in_box(g.variables(), g_radius, |m| {
        let v = lift_all(g.evaluate(m)?, k)?;
        if wanted.contains(&v) {
            *preimages.entry(v).or_insert(0) += 1;
        }
        Ok(())
    })?;
    let sizes: Vec<u64> = values.iter().map(|v| preimages.get(v).copied().unwrap_or(0)).collect();

    let mut best: Option<(usize, u64, BTreeMap<Vec<i64>, u64>)> = None;
    for modulus in 1..=MAX_FIBER_MODULUS {
        let m = modulus as i64;
        let mut per_class: BTreeMap<Vec<i64>, BTreeMap<u64, usize>> = BTreeMap::new();
        for (p, &s) in points.iter().zip(&sizes) {
            let class: Vec<i64> = p.iter().map(|x| x.rem_euclid(m)).collect();
            *per_class.entry(class).or_default().entry(s).or_insert(0) += 1;
        }
        let mut table = BTreeMap::new();
        let mut bad = 0usize;
        for (class, hist) in per_class {
            let (&mode, &hits) = hist.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).unwrap();
            bad += hist.values().sum::<usize>() - hits;
            table.insert(class, mode);
        }
        if best.as_ref().map_or(true, |b| bad < b.0) {
            best = Some((bad, modulus, table));
        }
        if bad == 0 {
            break;
        }
    }
    let (_, modulus, table) = best.expect("at least one modulus is tried");
    let m = modulus as i64;
    let violators: Vec<Vec<i64>> = points
        .iter()
        .zip(&sizes)
        .filter(|(p, s)| table[&p.iter().map(|x| x.rem_euclid(m)).collect::<Vec<_>>()] != **s)
        .map(|(p, _)| p.clone())
        .collect();
    let bad: BTreeSet<&Vec<i64>> = violators.iter().collect();
    let excluded = infer_cosets(&violators, |c| Ok(c.enumerate_box(radius).iter().all(|p| bad.contains(p))))?;
    Ok(FiberReport { modulus, classes: table.into_iter().collect(), violators, excluded, g_radius, certified })
}

/// One region of a degeneracy partition.
#[derive(Clone, Debug)]
pub struct PartitionPiece {
    pub degeneracy: DegeneracyType,
    pub region: QuasiCoset,
    /// Box points of this degeneracy type lying in the region.
    pub points: usize,
    /// `f` restricted to the region's base coset, in its coordinates.
    pub restricted: PepVector,
    pub stabilizer: Lattice,
    pub seminorm_rank: usize,
    /// Range of `h_aff(f(n)) / ‖n‖` over points with nonzero seminorm.
    pub ratio_range: Option<(f64, f64)>,
    pub height_range: (f64, f64),
}

#[derive(Clone, Debug)]
pub struct PartitionReport {
    pub pieces: Vec<PartitionPiece>,
    /// Box points not placed in any region of their own type.
    pub unplaced: Vec<Vec<i64>>,
}

/// Classify the box by degeneracy type. Each degenerate type gets the cosets
/// on which its vanishing part is identically zero; the non-degenerate type
/// gets everything else.
pub fn partition_report(f: &PepVector, radius: i64) -> Result<PartitionReport> {
    let g = canonicalize(f)?;
    let r = g.variables();
    let mut classes: BTreeMap<DegeneracyType, Vec<Vec<i64>>> = BTreeMap::new();
    for_each_in_box(r, radius, |n| {
        classes.entry(degeneracy_of_terms(&g.term_values(n)?)?).or_default().push(n.to_vec());
        Ok(())
    })?;
    let mut regions: Vec<(DegeneracyType, Coset)> = Vec::new();
    for (ty, pts) in &classes {
        if ty.is_nondegenerate() {
            continue;
        }
        let vanishing = vanishing_part(&g, ty)?;
        for c in infer_cosets(pts, |c| is_identically_zero(&restrict_to_coset(&vanishing, c)?))? {
            regions.push((ty.clone(), c));
        }
    }
    let mut pieces = Vec::new();
    let mut placed: BTreeSet<Vec<i64>> = BTreeSet::new();
    let mut layout: Vec<(DegeneracyType, QuasiCoset)> = Vec::new();
    for (ty, c) in &regions {
        let inner: Vec<Coset> = regions.iter().filter(|(t, o)| t != ty && o != c && o.is_subset_of(c)).map(|(_, o)| o.clone()).collect();
        layout.push((ty.clone(), QuasiCoset::new(c.clone(), inner)));
    }
    let nondeg = classes.keys().find(|t| t.is_nondegenerate()).cloned();
    if let Some(ty) = nondeg {
        layout.push((ty, QuasiCoset::new(Coset::full(r), regions.iter().map(|(_, c)| c.clone()).collect())));
    }
    for (ty, region) in layout {
        let pts: Vec<&Vec<i64>> = classes[&ty].iter().filter(|p| region.contains_i64(p)).collect();
        placed.extend(pts.iter().map(|p| (*p).clone()));
        pieces.push(describe_piece(&g, ty, region, &pts)?);
    }
    let unplaced = classes.values().flatten().filter(|p| !placed.contains(*p)).cloned().collect();
    Ok(PartitionReport { pieces, unplaced })
}

fn vanishing_part(g: &PepVector, ty: &DegeneracyType) -> Result<PepVector> {
    let comps = g
        .components()
        .iter()
        .zip(&ty.components)
        .map(|(c, split)| PepPolynomial::new(split.vanishing.iter().map(|&i| c.terms[i].clone()).collect::<Vec<Term>>()))
        .collect();
    PepVector::new(g.field(), g.bases().to_vec(), g.variables(), comps)
}

fn describe_piece(g: &PepVector, degeneracy: DegeneracyType, region: QuasiCoset, pts: &[&Vec<i64>]) -> Result<PartitionPiece> {
    let base = &region.base;
    let restricted = restrict_to_coset(g, base)?;
    let stab = stabilizer(g, base)?;
    let norm = build_height_seminorm(&restricted)?;
    let mut ratio: Option<(f64, f64)> = None;
    let mut hr = (f64::INFINITY, f64::NEG_INFINITY);
    for p in pts {
        let h = affine_height(&g.evaluate(p)?);
        hr = (hr.0.min(h), hr.1.max(h));
        let nb: Vec<BigInt> = p.iter().map(|&x| BigInt::from(x)).collect();
        let coords = base.coordinates(&nb).ok_or(Error::Diagnostic("point outside its region".into()))?;
        let ci: Vec<i64> = coords.iter().map(|x| x.to_i64().unwrap()).collect();
        let s = norm.eval_int(&ci);
        if s > 0.0 {
            let q = h / s;
            ratio = Some(ratio.map_or((q, q), |(a, b)| (a.min(q), b.max(q))));
        }
    }
    if pts.is_empty() {
        hr = (0.0, 0.0);
    }
    Ok(PartitionPiece {
        degeneracy,
        points: pts.len(),
        restricted,
        stabilizer: stab,
        seminorm_rank: norm.quotient_rank(),
        ratio_range: ratio,
        height_range: hr,
        region,
    })
}

/// A non-degenerate point where `h(Σ s_j) < (1/k − ε) Σ h(s_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub point: Vec<i64>,
    pub sum_height: f64,
    pub bound: f64,
}

/// Non-degenerate points of the box violating the anti-triangular
/// inequality for the terms of a single-component `f`.
pub fn anti_triangular_census(f: &PepVector, radius: i64, eps: f64) -> Result<Vec<Violation>> {
    if f.components().len() != 1 {
        return Err(Error::Precondition("census needs a single component".into()));
    }
    let k = f.components()[0].terms.len();
    if k == 0 || !(eps > 0.0 && eps < 1.0 / k as f64) {
        return Err(Error::Precondition("need 0 < eps < 1/(number of terms)".into()));
    }
    let factor = 1.0 / k as f64 - eps;
    let mut out = Vec::new();
    for_each_in_box(f.variables(), radius, |n| {
        let terms = f.term_values(n)?;
        if !degeneracy_of_terms(&terms)?.is_nondegenerate() {
            return Ok(());
        }
        let s = &terms[0];
        let total = s.iter().fold(FieldElement::zero(f.field()), |a, x| &a + x);
        let lhs = affine_height(core::slice::from_ref(&total));
        let bound = factor * s.iter().map(|x| affine_height(core::slice::from_ref(x))).sum::<f64>();
        if lhs < bound - 1e-12 * bound.abs().max(1.0) {
            out.push(Violation { point: n.to_vec(), sum_height: lhs, bound });
        }
        Ok(())
    })?;
    Ok(out)
}

/// Violation counts over increasing radii.
pub fn nested_census(f: &PepVector, radii: &[i64], eps: f64) -> Result<Vec<(i64, usize)>> {
    radii.iter().map(|&r| Ok((r, anti_triangular_census(f, r, eps)?.len()))).collect()
}
