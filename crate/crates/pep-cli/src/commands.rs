//! One function per subcommand. Each returns the full report text; the
//! caller decides where it goes.

use pep_core::counting::{
    empirical_zero_locus, fiber_statistics, finish_count, partition_report, plan_count, recurrence_zero_structure, tally_piece_slab, AsymptoticFit,
    Completeness, CountPlan, CountReport, HeightTally,
};
use pep_core::heightnorm::{
    affine_height, build_height_seminorm, finish_monte_carlo, monte_carlo_chunk, unit_ball_volume, HeightSeminorm, MonteCarloChunk, VolumeEstimate,
    VolumeMethod, VolumeOptions, MC_CHUNK,
};
use pep_core::matrix::{bg_group_rank, bg_to_pep, free_word_growth, sparseness_report, Ambient, Sl2Table, Trend};
use pep_core::pep::PepVector;
use pep_core::reduction::reduced_decomposition;
use rayon::prelude::*;
use serde::Serialize;

use crate::format::{self, lattice_rows, matrix_rows, CosetJson, GroupJson, ProblemJson};
use crate::report::{csv_table, input_digest, json_report, num, Format};
use crate::CliError;

/// Settings shared by every subcommand.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub box_radius: Option<i64>,
    pub thresholds: Option<Vec<f64>>,
    /// Requested bits for archimedean logs; recorded next to the effective 53.
    pub precision: u32,
    pub seed: u64,
    pub samples: u64,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { box_radius: None, thresholds: None, precision: 128, seed: 0x5eed, samples: 1_000_000, format: Format::Json }
    }
}

#[derive(Clone, Debug)]
pub enum Task {
    Reduce,
    Rank,
    Norm { at: Option<Vec<i64>> },
    Count,
    Fit,
    Zeros,
    Fibers { against: Input },
    Partition,
    Bg,
    Sl2Baseline,
    Sparseness { ambient_counts: Option<Vec<u64>> },
    Words { length: usize },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Reduce => "reduce",
            Task::Rank => "rank",
            Task::Norm { .. } => "norm",
            Task::Count => "count",
            Task::Fit => "fit",
            Task::Zeros => "zeros",
            Task::Fibers { .. } => "fibers",
            Task::Partition => "partition",
            Task::Bg => "bg",
            Task::Sl2Baseline => "sl2-baseline",
            Task::Sparseness { .. } => "sparseness",
            Task::Words { .. } => "words",
        }
    }
}

/// A named input file and its raw bytes.
#[derive(Clone, Debug)]
pub struct Input {
    pub path: String,
    pub bytes: Vec<u8>,
}

impl Input {
    pub fn read(path: &str) -> Result<Input, CliError> {
        let bytes = std::fs::read(path).map_err(|source| CliError::Io { path: path.to_string(), source })?;
        Ok(Input { path: path.to_string(), bytes })
    }

    fn text(&self) -> Result<&str, CliError> {
        std::str::from_utf8(&self.bytes).map_err(|e| CliError::Parse { path: self.path.clone(), line: 0, column: 0, message: e.to_string() })
    }

    pub fn problem(&self) -> Result<PepVector, CliError> {
        format::parse_json::<ProblemJson>(&self.path, self.text()?)?.to_pep()
    }

    pub fn group(&self) -> Result<GroupJson, CliError> {
        format::parse_json(&self.path, self.text()?)
    }
}

/// Parsed `--thresholds` value.
#[derive(Clone, Debug, PartialEq)]
pub struct Thresholds(pub Vec<f64>);

pub fn parse_thresholds(spec: &str) -> Result<Thresholds, String> {
    geometric(spec).map(Thresholds)
}

/// Geometric thresholds from `T0:factor:count`.
pub fn geometric(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [t0, factor, count] = parts[..] else {
        return Err("expected T0:factor:count".into());
    };
    let t0: f64 = t0.parse().map_err(|_| format!("bad T0 {t0:?}"))?;
    let factor: f64 = factor.parse().map_err(|_| format!("bad factor {factor:?}"))?;
    let count: usize = count.parse().map_err(|_| format!("bad count {count:?}"))?;
    if !(t0 >= 1.0 && t0.is_finite()) || !(factor > 1.0 && factor.is_finite()) || count == 0 {
        return Err("need T0 ≥ 1, factor > 1 and count ≥ 1".into());
    }
    let mut out = Vec::with_capacity(count);
    let mut t = t0;
    for _ in 0..count {
        out.push(t);
        t *= factor;
    }
    Ok(out)
}

pub fn run(task: &Task, input: Option<&Input>, cfg: &RunConfig) -> Result<String, CliError> {
    let need = || input.ok_or_else(|| CliError::Schema(format!("`{}` needs an input file", task.name())));
    let mut hashed: Vec<&[u8]> = input.iter().map(|i| i.bytes.as_slice()).collect();
    if let Task::Fibers { against } = task {
        hashed.push(&against.bytes);
    }
    let digest = input_digest(&hashed);
    let ctx = Ctx { command: task.name(), digest: &digest, precision: cfg.precision, format: cfg.format };
    match task {
        Task::Reduce => reduce(&ctx, &need()?.problem()?),
        Task::Rank => rank(&ctx, &need()?.problem()?),
        Task::Norm { at } => norm(&ctx, &need()?.problem()?, at.as_deref(), cfg),
        Task::Count => count(&ctx, &need()?.problem()?, &thresholds(cfg, "10:10:6")?, false),
        Task::Fit => count(&ctx, &need()?.problem()?, &thresholds(cfg, "10:10:8")?, true),
        Task::Zeros => zeros(&ctx, &need()?.problem()?, cfg.box_radius.unwrap_or(20)),
        Task::Fibers { against } => fibers(&ctx, &need()?.problem()?, &against.problem()?, cfg.box_radius.unwrap_or(10)),
        Task::Partition => partition(&ctx, &need()?.problem()?, cfg.box_radius.unwrap_or(8)),
        Task::Bg => bg(&need()?.group()?),
        Task::Sl2Baseline => sl2_baseline(&ctx, &thresholds(cfg, "16:2:6")?),
        Task::Sparseness { ambient_counts } => sparseness(&ctx, &need()?.problem()?, &thresholds(cfg, "10:4:6")?, ambient_counts.as_deref()),
        Task::Words { length } => words(&ctx, &need()?.group()?, *length),
    }
}

fn thresholds(cfg: &RunConfig, default: &str) -> Result<Vec<f64>, CliError> {
    match &cfg.thresholds {
        Some(t) => Ok(t.clone()),
        None => Ok(geometric(default).expect("valid default")),
    }
}

struct Ctx<'a> {
    command: &'a str,
    digest: &'a str,
    precision: u32,
    format: Format,
}

impl Ctx<'_> {
    fn render<T: Serialize>(&self, body: &T, header: &[&str], rows: Vec<Vec<String>>) -> String {
        match self.format {
            Format::Json => json_report(self.command, self.digest, self.precision, body),
            Format::Csv => csv_table(header, &rows),
        }
    }
}

fn completeness_label(c: Completeness) -> &'static str {
    match c {
        Completeness::Certified => "certified",
        Completeness::BoundaryEstimated => "boundary-estimated",
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

fn join_rows(rows: &[Vec<i64>]) -> String {
    rows.iter().map(|r| join(r)).collect::<Vec<_>>().join(";")
}

#[derive(Serialize)]
struct PieceJson {
    coset: CosetJson,
    /// Maps coordinates of a point in the coset basis to the piece's variables.
    projection: Vec<Vec<i64>>,
    rank: usize,
    problem: ProblemJson,
}

#[derive(Serialize)]
struct ReduceBody {
    modulus: u64,
    rank: usize,
    pieces: Vec<PieceJson>,
}

fn reduce(ctx: &Ctx, f: &PepVector) -> Result<String, CliError> {
    let rd = reduced_decomposition(f)?;
    let pieces = rd
        .pieces
        .iter()
        .map(|p| {
            Ok(PieceJson {
                coset: CosetJson::from_coset(&p.coset)?,
                projection: matrix_rows(&p.projection)?,
                rank: p.rank(),
                problem: ProblemJson::from_pep(&p.pep)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let rows = pieces
        .iter()
        .enumerate()
        .map(|(i, p)| vec![i.to_string(), join(&p.coset.offset), join_rows(&p.coset.basis), p.rank.to_string()])
        .collect();
    let body = ReduceBody { modulus: rd.modulus, rank: rd.rank(), pieces };
    Ok(ctx.render(&body, &["piece", "offset", "basis", "rank"], rows))
}

#[derive(Serialize)]
struct RankBody {
    rank: usize,
    pieces: usize,
    modulus: u64,
}

fn rank(ctx: &Ctx, f: &PepVector) -> Result<String, CliError> {
    let rd = reduced_decomposition(f)?;
    let body = RankBody { rank: rd.rank(), pieces: rd.pieces.len(), modulus: rd.modulus };
    Ok(ctx.render(&body, &["rank", "pieces", "modulus"], vec![vec![body.rank.to_string(), body.pieces.to_string(), body.modulus.to_string()]]))
}

#[derive(Serialize)]
struct PlaceForms {
    place: String,
    forms: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct VolumeJson {
    volume: f64,
    std_error: f64,
    method: &'static str,
    rank: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    samples: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Serialize)]
struct PointJson {
    point: Vec<i64>,
    seminorm: f64,
    height: f64,
}

#[derive(Serialize)]
struct NormBody {
    variables: usize,
    degree: u32,
    places: Vec<PlaceForms>,
    kernel: Vec<Vec<i64>>,
    zero_lattice: Vec<Vec<i64>>,
    quotient_rank: usize,
    sup_norm_ratio: f64,
    volume: VolumeJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    at: Option<PointJson>,
}

/// Unit-ball volume, with Monte Carlo streams spread over the thread pool.
/// Streams are merged in index order so the result does not depend on the
/// number of threads.
fn volume(n: &HeightSeminorm, cfg: &RunConfig) -> Result<VolumeEstimate, CliError> {
    let opts = VolumeOptions { samples: cfg.samples, seed: cfg.seed, ..VolumeOptions::default() };
    let d = n.quotient_rank();
    if d <= opts.exact_max_rank {
        return Ok(unit_ball_volume(n, &opts)?);
    }
    let (_, forms) = n.quotient_forms()?;
    let chunks = opts.samples.div_ceil(MC_CHUNK);
    let parts: Vec<MonteCarloChunk> = (0..chunks)
        .into_par_iter()
        .map(|c| monte_carlo_chunk(&forms, n.degree, d, opts.seed, c, MC_CHUNK.min(opts.samples - c * MC_CHUNK)))
        .collect();
    Ok(finish_monte_carlo(parts.into_iter().fold(MonteCarloChunk::default(), MonteCarloChunk::merge), d))
}

fn norm(ctx: &Ctx, f: &PepVector, at: Option<&[i64]>, cfg: &RunConfig) -> Result<String, CliError> {
    let n = build_height_seminorm(f)?;
    let v = volume(&n, cfg)?;
    let mc = v.method == VolumeMethod::MonteCarlo;
    let at = match at {
        Some(p) if p.len() != f.variables() => return Err(CliError::Schema(format!("--at needs {} coordinates", f.variables()))),
        Some(p) => Some(PointJson { point: p.to_vec(), seminorm: n.eval_int(p), height: affine_height(&f.evaluate(p)?) }),
        None => None,
    };
    let places: Vec<PlaceForms> = n.places.iter().zip(&n.forms).map(|(p, forms)| PlaceForms { place: p.to_string(), forms: forms.clone() }).collect();
    let rows = places
        .iter()
        .flat_map(|p| p.forms.iter().enumerate().map(move |(i, form)| vec![p.place.clone(), i.to_string(), form.iter().map(|x| num(*x)).collect::<Vec<_>>().join(" ")]))
        .collect();
    let body = NormBody {
        variables: n.variables,
        degree: n.degree,
        places,
        kernel: lattice_rows(&n.kernel)?,
        zero_lattice: lattice_rows(&n.zero_lattice)?,
        quotient_rank: n.quotient_rank(),
        sup_norm_ratio: if n.quotient_rank() == 0 { 0.0 } else { n.sup_norm_ratio()? },
        volume: VolumeJson {
            volume: v.volume,
            std_error: v.std_error,
            method: if mc { "monte-carlo" } else { "exact" },
            rank: v.rank,
            samples: mc.then_some(cfg.samples),
            seed: mc.then_some(cfg.seed),
        },
        at,
    };
    Ok(ctx.render(&body, &["place", "form", "coefficients"], rows))
}

/// Enumerate every piece of a plan in first-coordinate slabs on the thread
/// pool, then merge in slab order.
pub fn parallel_tally(plan: &CountPlan) -> Result<HeightTally, CliError> {
    let slabs = rayon::current_num_threads().max(1) as i64 * 4;
    let mut tasks = Vec::new();
    for (i, p) in plan.pieces.iter().enumerate() {
        if p.pep.variables() == 0 {
            tasks.push((i, 0, 0));
            continue;
        }
        let side = 2 * p.radius + 1;
        let width = (side + slabs - 1) / slabs;
        let mut lo = -p.radius;
        while lo <= p.radius {
            let hi = (lo + width - 1).min(p.radius);
            tasks.push((i, lo, hi));
            lo = hi + 1;
        }
    }
    let parts: Vec<HeightTally> = tasks.par_iter().map(|&(i, lo, hi)| tally_piece_slab(plan, i, lo, hi)).collect::<Result<_, _>>()?;
    Ok(parts.into_iter().fold(HeightTally::default(), HeightTally::merge))
}

pub fn count_report(f: &PepVector, thresholds: &[f64]) -> Result<CountReport, CliError> {
    let plan = plan_count(f, thresholds)?;
    let tally = parallel_tally(&plan)?;
    Ok(finish_count(&plan, &tally)?)
}

#[derive(Serialize)]
struct CountRow {
    threshold: f64,
    count: u64,
    ln_threshold: f64,
    /// `N(T) / (ln T)^rank`.
    normalized: Option<f64>,
}

#[derive(Serialize)]
struct FitJson {
    c_hat: f64,
    slope: Option<f64>,
    r_hat: Option<i64>,
    consistent: bool,
}

impl From<&AsymptoticFit> for FitJson {
    fn from(f: &AsymptoticFit) -> Self {
        FitJson { c_hat: f.c_hat, slope: f.slope, r_hat: f.r_hat, consistent: f.consistent }
    }
}

#[derive(Serialize)]
struct CountBody {
    rank: usize,
    box_radius: i64,
    completeness: &'static str,
    volume_prediction: Option<f64>,
    rows: Vec<CountRow>,
    fit: Option<FitJson>,
}

fn count(ctx: &Ctx, f: &PepVector, ts: &[f64], fit_only: bool) -> Result<String, CliError> {
    if fit_only && ts.len() < 4 {
        return Err(pep_core::Error::Precondition("fitting needs at least 4 thresholds".into()).into());
    }
    let r = count_report(f, ts)?;
    let rows: Vec<CountRow> = r
        .thresholds
        .iter()
        .zip(&r.counts)
        .map(|(&t, &n)| {
            let lt = t.ln();
            let normalized = (lt > 0.0).then(|| n as f64 / lt.powi(r.rank as i32));
            CountRow { threshold: t, count: n, ln_threshold: lt, normalized }
        })
        .collect();
    let fit = r.fit.as_ref().map(FitJson::from);
    let table: Vec<Vec<String>> = if fit_only {
        rows.iter()
            .filter(|row| row.count > 0 && row.ln_threshold > 0.0)
            .map(|row| vec![num(row.ln_threshold.ln()), num((row.count as f64).ln())])
            .collect()
    } else {
        rows.iter()
            .map(|row| vec![num(row.threshold), row.count.to_string(), num(row.ln_threshold), row.normalized.map(num).unwrap_or_default()])
            .collect()
    };
    let header: &[&str] = if fit_only { &["ln_ln_threshold", "ln_count"] } else { &["threshold", "count", "ln_threshold", "normalized"] };
    let body = CountBody { rank: r.rank, box_radius: r.box_radius, completeness: completeness_label(r.completeness), volume_prediction: r.volume_prediction, rows, fit };
    Ok(ctx.render(&body, header, table))
}

#[derive(Serialize)]
struct Progression {
    offset: i64,
    modulus: i64,
}

#[derive(Serialize)]
struct ZerosBody {
    #[serde(rename = "box")]
    radius: i64,
    witnesses: usize,
    cosets: Vec<CosetJson>,
    uncovered: Vec<Vec<i64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    progressions: Option<Vec<Progression>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    finite: Option<Vec<i64>>,
    /// Zeros outside the box are not ruled out.
    completeness: &'static str,
}

fn zeros(ctx: &Ctx, f: &PepVector, radius: i64) -> Result<String, CliError> {
    let z = empirical_zero_locus(f, radius)?;
    let (progressions, finite) = if f.variables() == 1 && f.components().len() == 1 {
        let rz = recurrence_zero_structure(f, radius)?;
        (Some(rz.progressions.iter().map(|&(offset, modulus)| Progression { offset, modulus }).collect::<Vec<_>>()), Some(rz.finite))
    } else {
        (None, None)
    };
    let cosets = z.cosets.iter().map(CosetJson::from_coset).collect::<Result<Vec<_>, _>>()?;
    let mut rows: Vec<Vec<String>> = cosets.iter().map(|c| vec!["coset".into(), join(&c.offset), join_rows(&c.basis)]).collect();
    rows.extend(z.uncovered.iter().map(|p| vec!["uncovered".into(), join(p), String::new()]));
    let body = ZerosBody { radius, witnesses: z.witnesses.len(), cosets, uncovered: z.uncovered, progressions, finite, completeness: "box-only" };
    Ok(ctx.render(&body, &["kind", "offset", "basis"], rows))
}

#[derive(Serialize)]
struct FiberClass {
    residue: Vec<i64>,
    size: u64,
}

#[derive(Serialize)]
struct FibersBody {
    #[serde(rename = "box")]
    radius: i64,
    modulus: u64,
    classes: Vec<FiberClass>,
    violators: Vec<Vec<i64>>,
    excluded: Vec<CosetJson>,
    g_radius: i64,
    completeness: &'static str,
}

fn fibers(ctx: &Ctx, f: &PepVector, g: &PepVector, radius: i64) -> Result<String, CliError> {
    let r = fiber_statistics(f, g, radius)?;
    let classes: Vec<FiberClass> = r.classes.iter().map(|(residue, size)| FiberClass { residue: residue.clone(), size: *size }).collect();
    let rows = classes.iter().map(|c| vec![join(&c.residue), c.size.to_string()]).collect();
    let body = FibersBody {
        radius,
        modulus: r.modulus,
        classes,
        violators: r.violators,
        excluded: r.excluded.iter().map(CosetJson::from_coset).collect::<Result<_, _>>()?,
        g_radius: r.g_radius,
        completeness: if r.certified { "certified" } else { "boundary-estimated" },
    };
    Ok(ctx.render(&body, &["residue", "size"], rows))
}

#[derive(Serialize)]
struct SplitJson {
    nondegenerate: Vec<usize>,
    vanishing: Vec<usize>,
}

#[derive(Serialize)]
struct RegionJson {
    base: CosetJson,
    excluded: Vec<CosetJson>,
}

#[derive(Serialize)]
struct PartitionPieceJson {
    degeneracy: Vec<SplitJson>,
    region: RegionJson,
    points: usize,
    stabilizer: Vec<Vec<i64>>,
    seminorm_rank: usize,
    ratio_range: Option<(f64, f64)>,
    height_range: (f64, f64),
    restricted: ProblemJson,
}

#[derive(Serialize)]
struct PartitionBody {
    #[serde(rename = "box")]
    radius: i64,
    pieces: Vec<PartitionPieceJson>,
    unplaced: Vec<Vec<i64>>,
}

fn partition(ctx: &Ctx, f: &PepVector, radius: i64) -> Result<String, CliError> {
    let rep = partition_report(f, radius)?;
    let pieces = rep
        .pieces
        .iter()
        .map(|p| {
            Ok(PartitionPieceJson {
                degeneracy: p.degeneracy.components.iter().map(|c| SplitJson { nondegenerate: c.nondegenerate.clone(), vanishing: c.vanishing.clone() }).collect(),
                region: RegionJson {
                    base: CosetJson::from_coset(&p.region.base)?,
                    excluded: p.region.excluded.iter().map(CosetJson::from_coset).collect::<Result<_, _>>()?,
                },
                points: p.points,
                stabilizer: lattice_rows(&p.stabilizer)?,
                seminorm_rank: p.seminorm_rank,
                ratio_range: p.ratio_range,
                height_range: p.height_range,
                restricted: ProblemJson::from_pep(&p.restricted)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let rows = pieces
        .iter()
        .enumerate()
        .map(|(i, p)| {
            vec![
                i.to_string(),
                p.points.to_string(),
                p.seminorm_rank.to_string(),
                p.stabilizer.len().to_string(),
                num(p.height_range.0),
                num(p.height_range.1),
            ]
        })
        .collect();
    let body = PartitionBody { radius, pieces, unplaced: rep.unplaced };
    Ok(ctx.render(&body, &["piece", "points", "seminorm_rank", "stabilizer_rank", "height_min", "height_max"], rows))
}

/// The problem file of the bounded-generation parametrization. Written bare
/// so it can be fed straight back to the other subcommands.
fn bg(group: &GroupJson) -> Result<String, CliError> {
    let spec = group.to_bg()?;
    bg_group_rank(&spec)?;
    Ok(format::write_problem(&ProblemJson::from_pep(&bg_to_pep(&spec)?)?))
}

#[derive(Serialize)]
struct Sl2Row {
    bound: i64,
    count: u64,
    /// `count / T²`.
    normalized: f64,
    /// Slope of `ln count` against `ln T` from the previous row.
    local_exponent: Option<f64>,
}

#[derive(Serialize)]
struct Sl2Body {
    rows: Vec<Sl2Row>,
}

/// `#SL₂(ℤ)` balls with the rows `a ∈ [−T, T]` split over the pool.
pub fn sl2_count(bound: i64) -> Result<u64, CliError> {
    let table = Sl2Table::new(bound)?;
    let slabs = rayon::current_num_threads().max(1) as i64 * 4;
    let width = (2 * bound + 1 + slabs - 1) / slabs;
    let starts: Vec<i64> = (0..).map(|i| -bound + i * width).take_while(|&lo| lo <= bound).collect();
    Ok(starts.par_iter().map(|&lo| table.count_rows(lo, (lo + width - 1).min(bound))).sum())
}

fn sl2_baseline(ctx: &Ctx, ts: &[f64]) -> Result<String, CliError> {
    let mut rows: Vec<Sl2Row> = Vec::with_capacity(ts.len());
    for &t in ts {
        let bound = t.floor() as i64;
        let count = sl2_count(bound)?;
        let local_exponent = rows.last().filter(|p| p.bound < bound).map(|p| ((count as f64).ln() - (p.count as f64).ln()) / ((bound as f64).ln() - (p.bound as f64).ln()));
        rows.push(Sl2Row { bound, count, normalized: count as f64 / (bound * bound) as f64, local_exponent });
    }
    let table = rows
        .iter()
        .map(|r| vec![r.bound.to_string(), r.count.to_string(), num(r.normalized), r.local_exponent.map(num).unwrap_or_default()])
        .collect();
    Ok(ctx.render(&Sl2Body { rows }, &["bound", "count", "normalized", "local_exponent"], table))
}

#[derive(Serialize)]
struct SparsenessRowJson {
    threshold: f64,
    subset: u64,
    ambient: u64,
    ratio: f64,
}

#[derive(Serialize)]
struct SparsenessBody {
    ambient: &'static str,
    trend: &'static str,
    looks_sparse: bool,
    completeness: &'static str,
    rows: Vec<SparsenessRowJson>,
}

fn sparseness(ctx: &Ctx, f: &PepVector, ts: &[f64], given: Option<&[u64]>) -> Result<String, CliError> {
    let (label, ambient) = match given {
        Some(c) => ("counts", c.to_vec()),
        None => ("sl2z", ts.iter().map(|&t| sl2_count(t.floor() as i64)).collect::<Result<Vec<_>, _>>()?),
    };
    let rep = sparseness_report(f, &Ambient::Counts(ambient), ts)?;
    let trend = match rep.trend {
        Trend::Decreasing => "decreasing",
        Trend::Constant => "constant",
        Trend::Increasing => "increasing",
        Trend::Mixed => "mixed",
    };
    let rows: Vec<SparsenessRowJson> = rep.rows.iter().map(|r| SparsenessRowJson { threshold: r.threshold, subset: r.subset, ambient: r.ambient, ratio: r.ratio }).collect();
    let table = rows.iter().map(|r| vec![num(r.threshold), r.subset.to_string(), r.ambient.to_string(), num(r.ratio)]).collect();
    let body = SparsenessBody { ambient: label, trend, looks_sparse: rep.looks_sparse(), completeness: completeness_label(rep.completeness), rows };
    Ok(ctx.render(&body, &["threshold", "subset", "ambient", "ratio"], table))
}

#[derive(Serialize)]
struct WordRow {
    length: usize,
    distinct: u64,
    max_height: f64,
    bound_holds: bool,
    delta: f64,
}

#[derive(Serialize)]
struct WordsBody {
    rows: Vec<WordRow>,
}

fn words(ctx: &Ctx, group: &GroupJson, length: usize) -> Result<String, CliError> {
    let ms = group.matrices()?;
    let [g1, g2] = &ms[..] else {
        return Err(CliError::Schema("`words` needs exactly two generators".into()));
    };
    let rows: Vec<WordRow> = free_word_growth(g1, g2, length)?
        .into_iter()
        .map(|r| WordRow { length: r.length, distinct: r.distinct, max_height: r.max_height, bound_holds: r.bound_holds, delta: r.delta })
        .collect();
    let table = rows
        .iter()
        .map(|r| vec![r.length.to_string(), r.distinct.to_string(), num(r.max_height), r.bound_holds.to_string(), num(r.delta)])
        .collect();
    Ok(ctx.render(&WordsBody { rows }, &["length", "distinct", "max_height", "bound_holds", "delta"], table))
}
