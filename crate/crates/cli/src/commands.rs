//! One function per subcommand, each producing named artifacts.

use std::path::Path;

use serde::Serialize;
use zeroflat::approx::{default_scale_grid, estimate_delta_prime_with, estimate_delta_with, partition_gamma, DeltaConfig};
use zeroflat::geometry::{blowup_sequence, recenter_at_root, sample_zero_set, SampledSet};
use zeroflat::harmonic::{build_basis, estimate_lipschitz};
use zeroflat::poly::{parse_polynomial, PolynomialRecord};
use zeroflat::regularity::{local_flatness, zeta, ExtendedNonNegReal, FlatnessReport, FlatnessSearch};
use zeroflat::{Degree, FlatError, Polynomial};

use crate::args::{Format, PolySource, Search, Target};
use crate::report::{fmt_f64, record, Artifact, Provenance, Table};
use crate::suites::{run_suites, SuiteOptions, SUITES};
use crate::CliError;

/// Global options after parsing.
#[derive(Clone, Copy, Debug)]
pub struct Context {
    pub seed: u64,
    pub resolution: Option<f64>,
    pub format: Format,
}

/// Artifacts of one command; the first is the main output.
#[derive(Debug)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    /// Set by `verify` when a suite failed.
    pub failed: bool,
}

impl Outcome {
    fn ok(artifacts: Vec<Artifact>) -> Self {
        Outcome {
            artifacts,
            failed: false,
        }
    }
}

/// Sampling resolution as a fraction of the working radius, by dimension.
pub fn default_relative_resolution(n: usize) -> f64 {
    match n {
        2 => 1e-3,
        3 => 2e-2,
        _ => 5e-2,
    }
}

/// Non-flatness threshold used when `partition` gets no `--delta`: the
/// smallest value measured by `estimate delta` for each dimension.
pub fn default_delta(n: usize) -> f64 {
    match n {
        2 => 0.7068,
        3 => 0.59,
        _ => 0.5,
    }
}

/// The absolute resolution for work at `radius` in dimension `n`.
fn resolution_for(ctx: &Context, n: usize, radius: f64) -> Result<f64, CliError> {
    let res = ctx.resolution.unwrap_or(default_relative_resolution(n) * radius);
    if !(res > 0.0 && res.is_finite()) {
        return Err(CliError::Usage(format!("resolution must be positive, got {res}")));
    }
    Ok(res)
}

/// Comma-separated numbers.
pub fn parse_list(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|t| {
            let t = t.trim();
            match t {
                "inf" => Ok(f64::INFINITY),
                _ => t.parse::<f64>().map_err(|_| CliError::Usage(format!("bad number `{t}` in {what}"))),
            }
        })
        .collect()
}

fn parse_center(text: Option<&str>, n: usize) -> Result<Vec<f64>, CliError> {
    match text {
        None => Ok(vec![0.0; n]),
        Some(t) => {
            let c = parse_list(t, "center")?;
            if c.len() != n {
                return Err(CliError::Flat(FlatError::DimensionMismatch {
                    expected: n,
                    found: c.len(),
                }));
            }
            Ok(c)
        }
    }
}

fn positive_list(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    let v = parse_list(text, what)?;
    if v.is_empty() || v.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(CliError::Usage(format!("{what} must be positive numbers")));
    }
    Ok(v)
}

fn load_polynomial_from(text: Option<&str>, file: Option<&Path>) -> Result<Polynomial, CliError> {
    match (text, file) {
        (Some(t), _) => Ok(parse_polynomial(t, None)?),
        (None, Some(path)) => {
            let body = std::fs::read_to_string(path)?;
            if body.trim_start().starts_with('{') {
                let rec: PolynomialRecord = serde_json::from_str(&body)?;
                Ok(Polynomial::from_record(rec)?)
            } else {
                Ok(parse_polynomial(body.trim(), None)?)
            }
        }
        (None, None) => Err(CliError::Usage("a polynomial is required".into())),
    }
}

pub fn load_polynomial(src: &PolySource) -> Result<Polynomial, CliError> {
    load_polynomial_from(src.poly.as_deref(), src.poly_file.as_deref())
}

fn require_nonconstant(p: &Polynomial) -> Result<(), CliError> {
    if p.is_constant() {
        return Err(CliError::Flat(FlatError::ConstantPolynomial));
    }
    Ok(())
}

fn degree_of(p: &Polynomial) -> u32 {
    match p.degree() {
        Degree::Finite(d) => d,
        Degree::Zero => 0,
    }
}

fn emit<T: Serialize>(
    ctx: &Context,
    prov: &Provenance,
    name: &str,
    table: &Table,
    data: &T,
) -> Result<Artifact, CliError> {
    Ok(match ctx.format {
        Format::Csv => Artifact::new(format!("{name}.csv"), table.render(prov)?),
        Format::Record => Artifact::new(format!("{name}.json"), record(prov, data)?),
    })
}

#[derive(Serialize)]
struct PartRecord {
    degree: u32,
    text: String,
    polynomial: Polynomial,
}

#[derive(Serialize)]
struct DecompositionRecord {
    center: Vec<f64>,
    parts: Vec<PartRecord>,
}

pub fn decompose(ctx: &Context, src: &PolySource, centers: &[String]) -> Result<Outcome, CliError> {
    let p = load_polynomial(src)?;
    require_nonconstant(&p)?;
    let n = p.dim();
    let centers = if centers.is_empty() {
        vec![vec![0.0; n]]
    } else {
        centers.iter().map(|c| parse_center(Some(c), n)).collect::<Result<_, _>>()?
    };
    let mut header: Vec<String> = (0..n).map(|i| format!("c{i}")).collect();
    header.extend(["degree".to_string(), "part".to_string()]);
    let mut table = Table::new(&header);
    let mut records = Vec::new();
    for c in centers {
        let dec = p.decompose(&c)?;
        let mut parts = Vec::new();
        for (k, part) in dec.nonzero_parts() {
            let mut row: Vec<String> = c.iter().map(|v| fmt_f64(*v)).collect();
            row.extend([k.to_string(), part.to_string()]);
            table.push(row);
            parts.push(PartRecord {
                degree: k,
                text: part.to_string(),
                polynomial: part.clone(),
            });
        }
        records.push(DecompositionRecord { center: c, parts });
    }
    let prov = Provenance::new("decompose", "homogeneous-parts", ctx.seed, None);
    Ok(Outcome::ok(vec![emit(ctx, &prov, "decompose", &table, &records)?]))
}

#[derive(Serialize)]
struct ZetaRow {
    r: f64,
    zeta: ExtendedNonNegReal,
}

pub fn zeta_cmd(ctx: &Context, src: &PolySource, k: u32, center: Option<&str>, radii: &str) -> Result<Outcome, CliError> {
    let p = load_polynomial(src)?;
    let x = parse_center(center, p.dim())?;
    let radii = positive_list(radii, "radii")?;
    let mut table = Table::new(&["r", "zeta"]);
    let mut rows = Vec::new();
    for r in radii {
        let z = zeta(&p, k, &x, r)?;
        table.push(vec![fmt_f64(r), z.to_string()]);
        rows.push(ZetaRow { r, zeta: z });
    }
    let prov = Provenance::new("zeta", "relative-part-size", ctx.seed, None);
    Ok(Outcome::ok(vec![emit(ctx, &prov, "zeta", &table, &rows)?]))
}

pub struct FlatnessInput<'a> {
    pub poly: Option<&'a str>,
    pub poly_file: Option<&'a Path>,
    pub points: Option<&'a Path>,
    pub center: Option<&'a str>,
    pub radii: &'a str,
    pub search: Search,
}

pub fn flatness(ctx: &Context, input: &FlatnessInput<'_>) -> Result<Outcome, CliError> {
    let radii = positive_list(input.radii, "radii")?;
    let search = match input.search {
        Search::Multistart => FlatnessSearch::Multistart,
        Search::Grid => FlatnessSearch::Grid,
    };
    let mut reports: Vec<FlatnessReport> = Vec::new();
    let n;
    if let Some(path) = input.points {
        let set = SampledSet::read_csv(path, None)?;
        n = set.dim();
        let x = match input.center {
            Some(_) => parse_center(input.center, n)?,
            None => set.center().to_vec(),
        };
        for &r in &radii {
            reports.push(local_flatness(&set, &x, r, search)?);
        }
    } else {
        let p = load_polynomial_from(input.poly, input.poly_file)?;
        require_nonconstant(&p)?;
        n = p.dim();
        let x = parse_center(input.center, n)?;
        for &r in &radii {
            recenter_at_root(&p, &x, r)?;
            let res = resolution_for(ctx, n, r)?;
            let set = sample_zero_set(&p, &x, r, res)?;
            reports.push(local_flatness(&set, &x, r, search)?);
        }
    }
    let mut header: Vec<String> = ["r", "theta", "resolution", "set_to_plane", "plane_to_set", "clamped"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..n).map(|i| format!("normal{i}")));
    let mut table = Table::new(&header);
    for rep in &reports {
        let mut row = vec![
            fmt_f64(rep.radius),
            fmt_f64(rep.theta),
            fmt_f64(rep.resolution),
            fmt_f64(rep.side_sup_set_to_plane),
            fmt_f64(rep.side_sup_plane_to_set),
            rep.clamped.to_string(),
        ];
        row.extend(rep.best_plane.normal().iter().map(|v| fmt_f64(*v)));
        table.push(row);
    }
    let prov = Provenance::new("flatness", "local-flatness", ctx.seed, reports.first().map(|r| r.resolution));
    let main = emit(ctx, &prov, "flatness", &table, &reports)?;
    let planes = Artifact::new("planes.json", record(&prov, &reports)?);
    Ok(Outcome::ok(if ctx.format == Format::Record { vec![main] } else { vec![main, planes] }))
}

pub fn verify(ctx: &Context, suites: &[String], list: bool, broken: bool) -> Result<Outcome, CliError> {
    if list {
        let mut table = Table::new(&["suite", "property"]);
        for s in SUITES {
            table.push(vec![s.id.to_string(), s.property.to_string()]);
        }
        let prov = Provenance::new("verify", "suite-catalogue", ctx.seed, None);
        return Ok(Outcome::ok(vec![Artifact::new("suites.csv", table.render(&prov)?)]));
    }
    let opts = SuiteOptions {
        seed: ctx.seed,
        broken_constant: broken,
    };
    let report = run_suites(suites, &opts).map_err(CliError::Usage)?;
    let mut table = Table::new(&["suite", "property", "cases", "failures", "pass", "witness"]);
    for s in &report.suites {
        table.push(vec![
            s.id.to_string(),
            s.property.to_string(),
            s.cases.to_string(),
            s.failures.to_string(),
            s.pass.to_string(),
            s.witness.clone().unwrap_or_default(),
        ]);
    }
    let prov = Provenance::new("verify", "property-suites", ctx.seed, None);
    for s in report.suites.iter().filter(|s| !s.pass) {
        log::error!("suite {} failed: {}", s.id, s.witness.as_deref().unwrap_or("no cases ran"));
    }
    Ok(Outcome {
        artifacts: vec![emit(ctx, &prov, "verify", &table, &report)?],
        failed: !report.all_pass,
    })
}

pub fn estimate(ctx: &Context, target: Target, n: usize, k: u32, trials: Option<usize>) -> Result<Outcome, CliError> {
    match target {
        Target::DeltaPrime | Target::Delta => {
            let mut cfg = DeltaConfig::for_dim(n);
            if let Some(r) = ctx.resolution {
                cfg.relative_resolution = r;
            }
            let (est, property) = if target == Target::DeltaPrime {
                let t = trials.unwrap_or(12);
                (estimate_delta_prime_with(n, k, t, ctx.seed, &cfg)?, "homogeneous-nonflatness-constant")
            } else {
                let t = trials.unwrap_or(30);
                (estimate_delta_with(n, k, t, ctx.seed, &cfg)?, "singular-root-nonflatness-constant")
            };
            let mut table = Table::new(&[
                "n",
                "degree",
                "value",
                "trials",
                "seed",
                "relative_resolution",
                "scale_spread",
                "witness_scale",
                "minimizer",
            ]);
            table.push(vec![
                n.to_string(),
                k.to_string(),
                fmt_f64(est.value),
                est.trials.to_string(),
                est.seed.to_string(),
                fmt_f64(est.relative_resolution),
                fmt_f64(est.scale_spread()),
                fmt_f64(est.witness_scale),
                est.minimizer.to_string(),
            ]);
            let prov = Provenance::new("estimate", property, ctx.seed, Some(cfg.relative_resolution));
            Ok(Outcome::ok(vec![emit(ctx, &prov, "estimate", &table, &est)?]))
        }
        Target::Lipschitz => {
            let t = trials.unwrap_or(4);
            let est = estimate_lipschitz(n, k, t, ctx.seed)?;
            let mut table = Table::new(&["n", "degree", "a_lower", "trials", "seed", "witness_polynomial"]);
            table.push(vec![
                n.to_string(),
                k.to_string(),
                fmt_f64(est.a_lower),
                est.trials.to_string(),
                est.seed.to_string(),
                est.witness_polynomial.to_string(),
            ]);
            let prov = Provenance::new("estimate", "spherical-harmonic-lipschitz", ctx.seed, None);
            Ok(Outcome::ok(vec![emit(ctx, &prov, "estimate", &table, &est)?]))
        }
    }
}

#[derive(Serialize)]
struct FrameSummary {
    scale: f64,
    hd_to_limit: f64,
    points: usize,
}

#[derive(Serialize)]
struct BlowupSummary {
    limit_degree: u32,
    limit_polynomial: String,
    frames: Vec<FrameSummary>,
}

pub fn blowup(ctx: &Context, src: &PolySource, center: Option<&str>, scales: &str, window: f64) -> Result<Outcome, CliError> {
    let p = load_polynomial(src)?;
    require_nonconstant(&p)?;
    let n = p.dim();
    let x = parse_center(center, n)?;
    let scales = parse_list(scales, "scales")?;
    let res = resolution_for(ctx, n, window)?;
    let seq = blowup_sequence(&p, &x, &scales, window, res)?;
    let mut table = Table::new(&["scale", "hd_to_limit", "hd_over_scale", "points"]);
    for f in &seq.frames {
        table.push(vec![
            fmt_f64(f.scale),
            fmt_f64(f.hd_to_limit),
            fmt_f64(f.hd_to_limit / f.scale),
            f.set.len().to_string(),
        ]);
    }
    let summary = BlowupSummary {
        limit_degree: seq.limit_degree,
        limit_polynomial: seq.limit_polynomial.to_string(),
        frames: seq
            .frames
            .iter()
            .map(|f| FrameSummary {
                scale: f.scale,
                hd_to_limit: f.hd_to_limit,
                points: f.set.len(),
            })
            .collect(),
    };
    let prov = Provenance::new("blowup", "blowup-convergence", ctx.seed, Some(res));
    let mut out = vec![emit(ctx, &prov, "blowup", &table, &summary)?];
    out.push(Artifact::new("limit.csv", seq.limit.csv_string()));
    out.push(Artifact::new("limit.csv.meta.json", seq.limit.metadata_json()?));
    for (i, f) in seq.frames.iter().enumerate() {
        out.push(Artifact::new(format!("frame_{i:02}.csv"), f.set.csv_string()));
        out.push(Artifact::new(format!("frame_{i:02}.csv.meta.json"), f.set.metadata_json()?));
    }
    Ok(Outcome::ok(out))
}

#[derive(Serialize)]
struct PartitionSummary {
    points: usize,
    degree: u32,
    eta: f64,
    delta: f64,
    flat_fraction: f64,
    oracle_agreement: Option<f64>,
    scale_grid: Vec<f64>,
}

pub struct PartitionInput<'a> {
    pub source: &'a PolySource,
    pub center: Option<&'a str>,
    pub radius: f64,
    pub degree: Option<u32>,
    pub delta: Option<f64>,
    pub eta: Option<f64>,
    pub max_scale: Option<f64>,
}

pub fn partition(ctx: &Context, input: &PartitionInput<'_>) -> Result<Outcome, CliError> {
    let p = load_polynomial(input.source)?;
    require_nonconstant(&p)?;
    let n = p.dim();
    let x = parse_center(input.center, n)?;
    let res = resolution_for(ctx, n, input.radius)?;
    let delta = input.delta.unwrap_or(default_delta(n));
    let eta = input.eta.unwrap_or(6.0 * delta);
    let d = input.degree.unwrap_or(degree_of(&p));
    let grid = default_scale_grid(res, input.max_scale.unwrap_or(input.radius / 4.0));
    let a = sample_zero_set(&p, &x, input.radius, res)?;
    let result = partition_gamma(&a, d, eta, delta, &grid)?;
    let prov = Provenance::new("partition", "flat-singular-partition", ctx.seed, Some(res));
    let summary = PartitionSummary {
        points: a.len(),
        degree: d,
        eta,
        delta,
        flat_fraction: result.flat_fraction,
        oracle_agreement: result.oracle_agreement,
        scale_grid: grid,
    };
    let labels = Artifact::new("partition.csv", prov.csv_comment() + &result.to_csv(&a));
    let summary = Artifact::new("partition_summary.json", record(&prov, &summary)?);
    Ok(Outcome::ok(match ctx.format {
        Format::Csv => vec![labels, summary],
        Format::Record => vec![summary, labels],
    }))
}

pub fn basis(ctx: &Context, n: usize, k: u32) -> Result<Outcome, CliError> {
    let b = build_basis(n, k)?;
    let mut table = Table::new(&["index", "polynomial"]);
    for (i, e) in b.elements.iter().enumerate() {
        table.push(vec![i.to_string(), e.to_string()]);
    }
    let prov = Provenance::new("basis", "harmonic-basis", ctx.seed, None);
    Ok(Outcome::ok(vec![emit(ctx, &prov, "basis", &table, &b)?]))
}
