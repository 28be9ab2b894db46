use serde::Serialize;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use super::config::{Study, SweepConfig};
use super::fit::{fit_exponent, ScalingFit};
use crate::audit::{stress_test, write_reports_csv, StressSetup, StressSummary};
use crate::cylfield::{washer_norm_set, QuadratureSpec};
use crate::error::{KornError, Result};
use crate::spectral::{
    critical_load, korn15_constant, korn_constant_on_ladder, refinement_ladder, CriticalLoad, Grid, Korn15Options,
    StressField, GRID_TOL,
};
use crate::testfields::{bending_norms, bump, scaled_ansatz, scaled_profile, BendingNorms};

/// Columns of every per-thickness study CSV.
pub const SWEEP_CSV_HEADER: [&str; 9] =
    ["study", "h", "quantity", "value", "mode", "grid", "grid_change", "converged", "residual"];

/// Columns of the audit summary CSV.
pub const AUDIT_CSV_HEADER: [&str; 10] = [
    "id",
    "seed_start",
    "seed_end",
    "count",
    "passed",
    "max_ratio",
    "max_raw_ratio",
    "argmax_seed",
    "constant",
    "all_pass",
];

/// Panels for the two-dimensional cross-check of the closed-form ansatz norms.
const ANSATZ_CHECK_SPEC: QuadratureSpec = QuadratureSpec {
    n1: 256,
    n2: 2,
    rule: crate::cylfield::Rule::Gauss(6),
};

/// One measured quantity at one thickness.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub study: Study,
    pub h: f64,
    pub quantity: String,
    pub value: f64,
    pub mode: Option<u32>,
    pub grid: Option<Grid>,
    /// Relative change between the two finest grids.
    pub grid_change: Option<f64>,
    pub converged: bool,
    /// Eigen residual or quadrature error estimate.
    pub residual: Option<f64>,
}

impl SweepRow {
    fn record(&self) -> [String; 9] {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        [
            self.study.to_string(),
            self.h.to_string(),
            self.quantity.clone(),
            self.value.to_string(),
            self.mode.map(|m| m.to_string()).unwrap_or_default(),
            self.grid.map(|g| g.to_string()).unwrap_or_default(),
            opt(self.grid_change),
            self.converged.to_string(),
            opt(self.residual),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedFit {
    pub quantity: String,
    /// Rows left out because they were not grid-converged.
    pub excluded: usize,
    pub fit: Option<ScalingFit>,
    /// Why no fit was produced.
    pub note: Option<String>,
}

/// Everything a study produced; also written to `{study}.json`.
#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub study: Study,
    pub generated: String,
    pub config: SweepConfig,
    pub rows: Vec<SweepRow>,
    pub fits: Vec<NamedFit>,
    pub audits: Vec<StressSummary>,
    pub files: Vec<PathBuf>,
}

impl SweepReport {
    pub fn fit(&self, quantity: &str) -> Option<&ScalingFit> {
        self.fits.iter().find(|f| f.quantity == quantity).and_then(|f| f.fit.as_ref())
    }

    pub fn values(&self, quantity: &str) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.quantity == quantity)
            .map(|r| (r.h, r.value))
            .collect()
    }

    /// True when every row is converged and every audit passed.
    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(|r| r.converged) && self.audits.iter().all(|a| a.all_pass())
    }
}

fn timestamp() -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("unix:{secs}")
}

/// CSV file whose first line is a `# generated ...` comment and whose rows
/// are flushed as soon as they are written.
struct StreamingCsv {
    writer: csv::Writer<BufWriter<File>>,
}

impl StreamingCsv {
    fn create(path: &Path, generated: &str, header: &[&str]) -> Result<Self> {
        let mut file = BufWriter::new(File::create(path)?);
        writeln!(file, "# generated {generated}")?;
        let mut writer = csv::Writer::from_writer(file);
        writer.write_record(header)?;
        writer.flush()?;
        Ok(Self { writer })
    }

    fn push<I, S>(&mut self, record: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(record)?;
        self.writer.flush()?;
        Ok(())
    }
}

struct Rows {
    out: StreamingCsv,
    rows: Vec<SweepRow>,
}

impl Rows {
    fn push(&mut self, row: SweepRow) -> Result<()> {
        self.out.push(row.record())?;
        self.rows.push(row);
        Ok(())
    }
}

fn with_h<T>(h: f64, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        e @ KornError::Task { .. } => e,
        e => KornError::Task {
            key: format!("h={h}"),
            source: Box::new(e),
        },
    })
}

fn rel_change(coarse: f64, fine: f64) -> f64 {
    (fine - coarse).abs() / fine.abs().max(f64::MIN_POSITIVE)
}

/// Runs one study over the thicknesses of `config`, writing
/// `{study}.csv` (rows streamed as they finish) and `{study}.json` into the
/// output directory. The first failing task aborts the sweep; rows finished
/// before it stay on disk.
pub fn run_sweep(config: &SweepConfig, study: Study) -> Result<SweepReport> {
    config.validate()?;
    fs::create_dir_all(&config.out_dir)?;
    let generated = timestamp();
    let csv_path = config.out_dir.join(format!("{study}.csv"));
    let mut files = vec![csv_path.clone()];
    let mut audits = Vec::new();
    let rows = if study == Study::Audit {
        let header: &[&str] = &AUDIT_CSV_HEADER;
        let mut out = StreamingCsv::create(&csv_path, &generated, header)?;
        let reports = config.out_dir.join("audit_reports.csv");
        audits = run_audits(config, &mut out, &reports)?;
        files.push(reports);
        Vec::new()
    } else {
        let mut rows = Rows {
            out: StreamingCsv::create(&csv_path, &generated, &SWEEP_CSV_HEADER)?,
            rows: Vec::new(),
        };
        for &h in &config.h_list {
            match study {
                Study::Korn1 => korn1_rows(config, h, &mut rows)?,
                Study::Korn15 => korn15_rows(config, h, &mut rows)?,
                Study::Ansatz => ansatz_rows(config, h, &mut rows)?,
                Study::Buckling => buckling_rows(config, h, &mut rows)?,
                Study::Audit => unreachable!(),
            }
        }
        rows.rows
    };
    let fits = fits_for(study, &rows);
    let json_path = config.out_dir.join(format!("{study}.json"));
    files.push(json_path.clone());
    let report = SweepReport {
        study,
        generated,
        config: config.clone(),
        rows,
        fits,
        audits,
        files,
    };
    let mut json = BufWriter::new(File::create(&json_path)?);
    serde_json::to_writer_pretty(&mut json, &report)?;
    writeln!(json)?;
    json.flush()?;
    Ok(report)
}

fn fits_for(study: Study, rows: &[SweepRow]) -> Vec<NamedFit> {
    let quantities: &[&str] = match study {
        Study::Korn1 => &["K"],
        Study::Korn15 => &["C"],
        Study::Ansatz => &["strain", "grad", "uz", "korn15_ratio"],
        Study::Buckling => &["lambda", "K", "lambda2_over_K"],
        Study::Audit => &[],
    };
    quantities
        .iter()
        .map(|&q| {
            let (ok, bad): (Vec<&SweepRow>, Vec<&SweepRow>) =
                rows.iter().filter(|r| r.quantity == q).partition(|r| r.converged);
            let pairs: Vec<(f64, f64)> = ok.iter().map(|r| (r.h, r.value)).collect();
            let (fit, note) = match fit_exponent(&pairs) {
                Ok(f) => (Some(f), None),
                Err(e) => (None, Some(e.to_string())),
            };
            NamedFit {
                quantity: q.to_string(),
                excluded: bad.len(),
                fit,
                note,
            }
        })
        .collect()
}

fn korn1_rows(config: &SweepConfig, h: f64, rows: &mut Rows) -> Result<()> {
    let geom = with_h(h, config.geometry(h))?;
    let ladder = refinement_ladder(config.grid.base(&geom), config.grid.levels);
    let res = korn_constant_on_ladder(&geom, config.bc, config.mode_cutoff, &ladder)?;
    rows.push(SweepRow {
        study: Study::Korn1,
        h,
        quantity: "K".into(),
        value: res.k,
        mode: Some(res.mode),
        grid: Some(res.finest.grid),
        grid_change: Some(res.rel_change),
        converged: res.converged,
        residual: Some(res.finest.residual),
    })
}

fn korn15_rows(config: &SweepConfig, h: f64, rows: &mut Rows) -> Result<()> {
    let geom = with_h(h, config.geometry(h))?;
    let opts = Korn15Options {
        starts: config.korn15_starts,
        seed: config.seed,
        ..Korn15Options::default()
    };
    let base = config.grid.base(&geom);
    let coarse = korn15_constant(&geom, config.bc, config.mode_cutoff, base, &opts)?;
    let fine = korn15_constant(&geom, config.bc, config.mode_cutoff, base.refined(), &opts)?;
    let change = rel_change(coarse.c, fine.c);
    rows.push(SweepRow {
        study: Study::Korn15,
        h,
        quantity: "C".into(),
        value: fine.c,
        mode: Some(fine.mode),
        grid: Some(base.refined()),
        grid_change: Some(change),
        converged: change <= GRID_TOL && fine.converged,
        residual: None,
    })
}

/// The bump behind the ansatz: on the outer half of the annulus for the
/// Kirchhoff case, and on `[R - (R - r)/4, R]` before compression otherwise.
fn ansatz_bump(config: &SweepConfig) -> Result<crate::testfields::BumpFunction> {
    let lo = if config.alpha == 0.0 {
        0.5 * (config.inner + config.outer)
    } else {
        config.outer - 0.25 * (config.outer - config.inner)
    };
    bump((lo, config.outer), config.bump)
}

fn ansatz_rows(config: &SweepConfig, h: f64, rows: &mut Rows) -> Result<()> {
    let geom = with_h(h, config.geometry(h))?;
    let phi = with_h(h, ansatz_bump(config))?;
    let field = with_h(h, scaled_ansatz(&geom, &phi, config.alpha, h))?;
    let psi = if config.alpha == 0.0 {
        phi
    } else {
        with_h(h, scaled_profile(&phi, config.alpha, h))?
    };
    let BendingNorms { strain, grad, uz } = bending_norms(h, &psi);
    let quad = with_h(h, washer_norm_set(&field, &ANSATZ_CHECK_SPEC))?;
    let rel = |closed: f64, q: f64| (closed - q).abs() / closed.abs().max(f64::MIN_POSITIVE);
    let ratio = grad / ((uz * strain).sqrt() / h + strain);
    let quad_ratio = quad.grad / ((quad.uz * quad.strain).sqrt() / h + quad.strain);
    for (name, value, estimate) in [
        ("strain", strain, rel(strain, quad.strain)),
        ("grad", grad, rel(grad, quad.grad)),
        ("uz", uz, rel(uz, quad.uz)),
        ("korn15_ratio", ratio, rel(ratio, quad_ratio)),
    ] {
        rows.push(SweepRow {
            study: Study::Ansatz,
            h,
            quantity: name.into(),
            value,
            mode: Some(0),
            grid: None,
            grid_change: None,
            converged: true,
            residual: Some(estimate),
        })?;
    }
    Ok(())
}

fn buckling_rows(config: &SweepConfig, h: f64, rows: &mut Rows) -> Result<()> {
    let geom = with_h(h, config.geometry(h))?;
    let sigma = StressField::radial_compression();
    let base = config.grid.base(&geom);
    let ladder = [base, base.refined()];
    let mut loads = Vec::with_capacity(2);
    for grid in ladder {
        loads.push(critical_load(&geom, &sigma, &config.lame, config.bc, config.mode_cutoff, grid)?);
    }
    let korn = korn_constant_on_ladder(&geom, config.bc, config.mode_cutoff, &ladder)?;
    let push = |rows: &mut Rows, quantity: &str, value: f64, mode, change, converged, residual| {
        rows.push(SweepRow {
            study: Study::Buckling,
            h,
            quantity: quantity.into(),
            value,
            mode,
            grid: Some(base.refined()),
            grid_change: change,
            converged,
            residual,
        })
    };
    match (&loads[0], &loads[1]) {
        (CriticalLoad::Found { lambda: coarse, .. }, CriticalLoad::Found { lambda, mode, residual, .. }) => {
            let change = rel_change(*coarse, *lambda);
            let ok = change <= GRID_TOL;
            push(rows, "lambda", *lambda, Some(*mode), Some(change), ok, Some(*residual))?;
            push(rows, "K", korn.k, Some(korn.mode), Some(korn.rel_change), korn.converged, Some(korn.finest.residual))?;
            let both = change.max(korn.rel_change);
            push(
                rows,
                "lambda2_over_K",
                lambda * lambda / korn.k,
                None,
                Some(both),
                ok && korn.converged,
                None,
            )?;
        }
        _ => {
            push(rows, "lambda", f64::NAN, None, None, false, None)?;
            push(rows, "K", korn.k, Some(korn.mode), Some(korn.rel_change), korn.converged, Some(korn.finest.residual))?;
        }
    }
    Ok(())
}

fn run_audits(config: &SweepConfig, out: &mut StreamingCsv, reports_path: &Path) -> Result<Vec<StressSummary>> {
    let h = config.h_list[0];
    let mut setup = StressSetup {
        washer: config.geometry(h)?,
        bc: config.bc,
        ..StressSetup::default()
    };
    setup.params.candidate = config.candidate;
    let seeds = config.seed..config.seed + config.trials;
    let mut summaries = Vec::with_capacity(config.audit_ids.len());
    let mut all_reports = Vec::new();
    for &id in &config.audit_ids {
        let mut s = stress_test(id, seeds.clone(), &setup)?;
        out.push([
            id.to_string(),
            s.seed_start.to_string(),
            s.seed_end.to_string(),
            s.count.to_string(),
            s.passed.to_string(),
            s.max_ratio.to_string(),
            s.max_raw_ratio.to_string(),
            s.argmax_seed.to_string(),
            s.constant.map(|c| c.to_string()).unwrap_or_else(|| "empirical".into()),
            s.all_pass().to_string(),
        ])?;
        all_reports.append(&mut s.reports);
        summaries.push(s);
    }
    write_reports_csv(BufWriter::new(File::create(reports_path)?), &all_reports)?;
    Ok(summaries)
}

/// The CSV body of a study file, i.e. everything after the timestamp line.
pub fn csv_body(path: &Path) -> Result<String> {
    let text = fs::read_to_string(path)?;
    Ok(text.split_once('\n').map(|(_, rest)| rest.to_string()).unwrap_or_default())
}
