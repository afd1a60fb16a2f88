//! Subcommand implementations. Each returns the process exit code.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use qfreq_core::harness::{fit_decay, run_plan, RiskCurve};
use qfreq_core::model::{crb, crb_t2_sharp, crb_ultimate, info_theoretic_floor};
use qfreq_core::report::{curve_to_csv, curve_to_json, format_float, read_csv, TableRow};
use qfreq_core::strategies::{optimize_exponential_base, schedule};
use qfreq_core::{DecayTime, StrategyKind, StrategySpec};

use crate::config::{parse_t2, ConfigError, Format, PlanConfig};
use crate::svg::{self, Panel};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_CELL_FAILURES: u8 = 2;

/// Default output directory when neither the config nor `--out-dir` names one.
pub const DEFAULT_OUT_DIR: &str = "out";

/// Files staged under temporary names and renamed into place together.
/// Dropping the stage without committing removes the temporaries.
pub struct Stage {
    dir: PathBuf,
    pending: Vec<(PathBuf, PathBuf)>,
}

impl Stage {
    pub fn new(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), pending: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> io::Result<PathBuf> {
        let target = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.tmp{}", std::process::id()));
        let mut f = fs::File::create(&tmp)?;
        self.pending.push((tmp.clone(), target.clone()));
        f.write_all(contents)?;
        f.sync_all()?;
        Ok(target)
    }

    pub fn commit(mut self) -> io::Result<Vec<PathBuf>> {
        let mut done = Vec::new();
        for (tmp, target) in std::mem::take(&mut self.pending) {
            fs::rename(&tmp, &target)?;
            done.push(target);
        }
        Ok(done)
    }
}

impl Drop for Stage {
    fn drop(&mut self) {
        for (tmp, _) in &self.pending {
            let _ = fs::remove_file(tmp);
        }
    }
}

/// Writes one file atomically (temporary file, then rename).
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "output path has no file name"))?;
    let mut stage = Stage::new(dir)?;
    stage.write(&name.to_string_lossy(), contents)?;
    stage.commit().map(|_| ())
}

/// Command-line overrides shared by the subcommands.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<Format>,
}

fn fail(msg: impl std::fmt::Display) -> u8 {
    eprintln!("error: {msg}");
    EXIT_CONFIG
}

/// Loads a plan file and applies overrides.
pub fn load_config(path: &Path, overrides: &Overrides) -> Result<PlanConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    let mut config = PlanConfig::from_toml(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    if let Some(trials) = overrides.trials {
        config.trials = trials;
    }
    if let Some(dir) = &overrides.out_dir {
        config.output.dir = Some(dir.clone());
    }
    if let Some(format) = overrides.format {
        config.output.format = format;
    }
    config.validate()?;
    Ok(config)
}

fn schedules_csv(config: &PlanConfig) -> Result<String, ConfigError> {
    let n_max = config.n_values().into_iter().max().unwrap_or(0);
    let mut out = String::from("strategy,k,time\n");
    for b in config.bindings()? {
        if b.kind.is_adaptive() {
            continue;
        }
        let spec = StrategySpec::new(b.kind, n_max).map_err(|e| ConfigError(e.to_string()))?;
        for (k, t) in schedule(&spec).map_err(|e| ConfigError(e.to_string()))?.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", csv_field(&b.name), k + 1, format_float(*t)));
        }
    }
    Ok(out)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn fits_table(curves: &[(String, RiskCurve)], format: Format) -> String {
    let mut rows = Vec::new();
    for (label, curve) in curves {
        let mut names: Vec<&str> = Vec::new();
        for c in &curve.cells {
            if !names.contains(&c.strategy.as_str()) {
                names.push(&c.strategy);
            }
        }
        for name in names {
            if let Ok(fit) = fit_decay(curve, name) {
                let adaptive = curve.cells_for(name).next().is_some_and(|c| c.kind.is_adaptive());
                rows.push((label.clone(), name.to_string(), if adaptive { "ln(risk)~N" } else { "ln(risk)~ln(N)" }, fit));
            }
        }
    }
    match format {
        Format::Csv => {
            let mut out = String::from("t2,strategy,model,slope,intercept,r2\n");
            for (t2, name, model, fit) in rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    csv_field(&t2),
                    csv_field(&name),
                    model,
                    format_float(fit.slope),
                    format_float(fit.intercept),
                    format_float(fit.r2)
                ));
            }
            out
        }
        Format::Json => {
            let list: Vec<serde_json::Value> = rows
                .into_iter()
                .map(|(t2, name, model, fit)| {
                    serde_json::json!({"t2": t2, "strategy": name, "model": model, "slope": fit.slope, "intercept": fit.intercept, "r2": fit.r2})
                })
                .collect();
            serde_json::to_string_pretty(&list).expect("fits serialize") + "\n"
        }
    }
}

/// `run`: executes every `t2` table of the plan and writes the bundle.
pub fn cmd_run(config_path: &Path, overrides: &Overrides) -> u8 {
    let config = match load_config(config_path, overrides) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let dir = config.output.dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    let format = config.output.format;
    let mut curves = Vec::new();
    for t2 in &config.t2 {
        let plan = match config.plan(t2) {
            Ok(p) => p,
            Err(e) => return fail(e),
        };
        match run_plan(&plan) {
            Ok(curve) => curves.push((t2.label(), curve)),
            Err(e) => return fail(e),
        }
    }
    let schedules = match schedules_csv(&config) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };

    let written = (|| -> io::Result<Vec<PathBuf>> {
        let mut stage = Stage::new(&dir)?;
        for (label, curve) in &curves {
            let body = match format {
                Format::Csv => curve_to_csv(curve),
                Format::Json => curve_to_json(curve) + "\n",
            };
            stage.write(&format!("risk_t2-{label}.{}", format.extension()), body.as_bytes())?;
        }
        stage.write("schedules.csv", schedules.as_bytes())?;
        stage.write(&format!("fits.{}", format.extension()), fits_table(&curves, format).as_bytes())?;
        stage.write("plan.toml", config.to_toml().as_bytes())?;
        if config.output.plot {
            let rows: Vec<(String, Vec<TableRow>)> = curves.iter().map(|(l, c)| (format!("T2 = {l}"), TableRow::from_curve(c))).collect();
            let panels: Vec<Panel> = rows.iter().map(|(title, rows)| Panel { title: title.clone(), rows }).collect();
            stage.write("risk.svg", svg::render(&panels).as_bytes())?;
        }
        stage.commit()
    })();
    let written = match written {
        Ok(w) => w,
        Err(e) => return fail(format!("writing outputs to {}: {e}", dir.display())),
    };
    for path in &written {
        println!("{}", path.display());
    }

    let failed: Vec<String> = curves
        .iter()
        .flat_map(|(label, c)| {
            c.cells.iter().filter(|cell| cell.failed).map(move |cell| {
                format!("t2={label} {} N={}: {} of {} trials failed", cell.strategy, cell.n, cell.risk.failures, c.trials)
            })
        })
        .collect();
    if failed.is_empty() {
        EXIT_OK
    } else {
        for f in &failed {
            eprintln!("cell failure: {f}");
        }
        EXIT_CELL_FAILURES
    }
}

/// Which times `bounds` evaluates.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundsSchedule {
    Kind(StrategyKind),
    Times(Vec<f64>),
}

/// Arguments of the `bounds` subcommand.
#[derive(Debug, Clone)]
pub struct BoundsArgs {
    pub schedule: Option<BoundsSchedule>,
    pub n: Option<usize>,
    pub eta: f64,
    pub t2: String,
    pub format: Format,
}

/// Bound values for one schedule; `None` where the schedule is not given.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BoundsRow {
    pub n: usize,
    pub crb: Option<f64>,
    pub crb_sharp: Option<f64>,
    pub crb_ultimate: f64,
    pub floor: f64,
}

pub fn compute_bounds(args: &BoundsArgs) -> Result<BoundsRow, ConfigError> {
    let t2: DecayTime<f64> = parse_t2(&args.t2)?;
    let err = |e: qfreq_core::Error| ConfigError(e.to_string());
    let times = match &args.schedule {
        Some(BoundsSchedule::Times(t)) => Some(t.clone()),
        Some(BoundsSchedule::Kind(kind)) => {
            let n = args.n.ok_or_else(|| ConfigError("--n is required with a schedule flag".into()))?;
            Some(schedule(&StrategySpec::new(*kind, n).map_err(err)?).map_err(err)?)
        }
        None => None,
    };
    let n = match (&times, args.n) {
        (Some(t), _) => t.len(),
        (None, Some(n)) => n,
        (None, None) => return Err(ConfigError("give a schedule (--fixed, --linear, --exponential, --times) or --ultimate with --n".into())),
    };
    if n == 0 {
        return Err(ConfigError("schedule is empty".into()));
    }
    if let Some(t) = &times {
        if let Some(bad) = t.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(ConfigError(format!("invalid time {bad}")));
        }
    }
    Ok(BoundsRow {
        n,
        crb: times.as_deref().map(crb),
        crb_sharp: times.as_deref().map(|t| crb_t2_sharp(t, args.eta, t2)),
        crb_ultimate: crb_ultimate(n, args.eta, t2).map_err(err)?,
        floor: info_theoretic_floor(n),
    })
}

pub fn bounds_table(row: &BoundsRow, format: Format) -> String {
    match format {
        Format::Csv => {
            let opt = |x: Option<f64>| x.map(format_float).unwrap_or_default();
            format!(
                "n,crb,crb_sharp,crb_ultimate,floor\n{},{},{},{},{}\n",
                row.n,
                opt(row.crb),
                opt(row.crb_sharp),
                format_float(row.crb_ultimate),
                format_float(row.floor)
            )
        }
        Format::Json => serde_json::to_string_pretty(row).expect("bounds serialize") + "\n",
    }
}

/// `bounds`: prints bound values for one schedule.
pub fn cmd_bounds(args: &BoundsArgs, out_dir: Option<&Path>) -> u8 {
    let row = match compute_bounds(args) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let table = bounds_table(&row, args.format);
    print!("{table}");
    if let Some(dir) = out_dir {
        if let Err(e) = write_atomic(&dir.join(format!("bounds.{}", args.format.extension())), table.as_bytes()) {
            return fail(e);
        }
    }
    EXIT_OK
}

/// `plot`: one panel per risk table.
pub fn cmd_plot(tables: &[PathBuf], out: &Path) -> u8 {
    if tables.is_empty() {
        return fail("no risk tables given");
    }
    let mut loaded = Vec::new();
    for path in tables {
        let file = match fs::File::open(path) {
            Ok(f) => f,
            Err(e) => return fail(format!("{}: {e}", path.display())),
        };
        let rows = match read_csv(file) {
            Ok(r) => r,
            Err(e) => return fail(format!("{}: {e}", path.display())),
        };
        if rows.is_empty() {
            return fail(format!("{}: risk table is empty", path.display()));
        }
        let title = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        loaded.push((title, rows));
    }
    let panels: Vec<Panel> = loaded.iter().map(|(title, rows)| Panel { title: title.clone(), rows }).collect();
    match write_atomic(out, svg::render(&panels).as_bytes()) {
        Ok(()) => {
            println!("{}", out.display());
            EXIT_OK
        }
        Err(e) => fail(format!("{}: {e}", out.display())),
    }
}

/// Default base grid: 1.05 to 1.40 in steps of 0.01, plus 9/8.
pub const DEFAULT_BASES: &str = "1.05:1.40:0.01,1.125";

/// Parses comma-separated items, each a number or an inclusive
/// `start:stop:step` range. The result is sorted and deduplicated.
pub fn parse_bases(text: &str) -> Result<Vec<f64>, ConfigError> {
    let bad = || ConfigError(format!("cannot parse bases {text:?}; use e.g. 1.05:1.40:0.01 or 1.1,1.125"));
    let mut out = Vec::new();
    for item in text.split(',') {
        if item.contains(':') {
            let parts: Vec<f64> = item.split(':').map(|p| p.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
            let [start, stop, step] = parts[..] else { return Err(bad()) };
            if !(step > 0.0) || stop < start {
                return Err(bad());
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            // Round to 12 decimals so 1.05 + 7·0.01 is 1.12, not 1.1200000000000001.
            out.extend((0..count).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12));
        } else {
            out.push(item.trim().parse().map_err(|_| bad())?);
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct OptimizeArgs {
    pub n: usize,
    pub bases: String,
    pub eta: f64,
    pub t2: String,
    pub trials: usize,
    pub seed: u64,
    pub format: Format,
}

/// `optimize-base`: Monte Carlo search over exponential bases.
pub fn cmd_optimize_base(args: &OptimizeArgs, out_dir: Option<&Path>) -> u8 {
    let bases = match parse_bases(&args.bases) {
        Ok(b) => b,
        Err(e) => return fail(e),
    };
    let t2 = match parse_t2(&args.t2) {
        Ok(t) => t,
        Err(e) => return fail(e),
    };
    let search = match optimize_exponential_base(args.n, args.eta, t2, &bases, args.trials, args.seed) {
        Ok(s) => s,
        Err(qfreq_core::Error::EstimationFailure(msg)) => {
            eprintln!("error: {msg}");
            return EXIT_CELL_FAILURES;
        }
        Err(e) => return fail(e),
    };
    let table = match args.format {
        Format::Csv => {
            let mut out = String::from("base,risk_mean,risk_stderr,risk_median,failures\n");
            for (b, r) in &search.risks {
                out.push_str(&format!(
                    "{b},{},{},{},{}\n",
                    format_float(r.mean),
                    format_float(r.stderr),
                    format_float(r.median),
                    r.failures
                ));
            }
            out
        }
        Format::Json => {
            let rows: Vec<serde_json::Value> = search
                .risks
                .iter()
                .map(|(b, r)| serde_json::json!({"base": b, "risk_mean": r.mean, "risk_stderr": r.stderr, "risk_median": r.median, "failures": r.failures}))
                .collect();
            serde_json::to_string_pretty(&serde_json::json!({"best": search.base, "n": args.n, "risks": rows})).expect("serialize") + "\n"
        }
    };
    print!("{table}");
    eprintln!("best base: {}", search.base);
    if let Some(dir) = out_dir {
        if let Err(e) = write_atomic(&dir.join(format!("base_search.{}", args.format.extension())), table.as_bytes()) {
            return fail(e);
        }
    }
    EXIT_OK
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_ranges() {
        let b = parse_bases("1.05:1.40:0.01").unwrap();
        assert_eq!(b.len(), 36);
        assert_eq!(b[0], 1.05);
        assert_eq!(b[7], 1.12);
        assert_eq!(*b.last().unwrap(), 1.4);
        assert!(!b.contains(&1.125));
        assert!(parse_bases(DEFAULT_BASES).unwrap().contains(&1.125));
        assert_eq!(parse_bases("1.1, 1.125").unwrap(), vec![1.1, 1.125]);
        assert!(parse_bases("1.1:1.0:0.1").is_err());
    }

    #[test]
    fn stage_drop_removes_temporaries() {
        let dir = tempfile::tempdir().unwrap();
        {
            let mut stage = Stage::new(dir.path()).unwrap();
            stage.write("a.csv", b"x").unwrap();
        }
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }
}
