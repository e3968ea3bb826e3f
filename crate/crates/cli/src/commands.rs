use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use fallwave::experiments::{
    classical_reference, convergence_study, ripple_check, wep_mass_sweep_with_threshold,
    wep_shape_sweep_with_threshold, DEFAULT_WEP_THRESHOLD,
};
use fallwave::{evolve_with, MomentRecord, SimError, StepScheme};
use serde::Serialize;

use crate::config::{load, ConfigError, Loaded, ScenarioConfig};

/// How a command ended; maps onto the process exit code.
#[derive(Debug)]
pub enum Outcome {
    Pass,
    /// Completed, but the checked criterion did not hold.
    NotMet(String),
    Invalid(String),
    Aborted(String),
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        match self {
            Outcome::Pass => 0,
            Outcome::NotMet(_) => 1,
            Outcome::Invalid(_) => 2,
            Outcome::Aborted(_) => 3,
        }
    }

    fn from_sim(e: SimError) -> Self {
        if e.is_runtime() {
            Outcome::Aborted(e.to_string())
        } else {
            Outcome::Invalid(e.to_string())
        }
    }

    fn judged(pass: bool, what: impl FnOnce() -> String) -> Self {
        if pass {
            Outcome::Pass
        } else {
            Outcome::NotMet(what())
        }
    }
}

impl From<ConfigError> for Outcome {
    fn from(e: ConfigError) -> Self {
        Outcome::Invalid(e.0)
    }
}

fn io_failure(path: &Path, e: io::Error) -> Outcome {
    Outcome::Invalid(format!("cannot write {}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>, Outcome> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io_failure(path, e))
}

#[derive(Serialize)]
struct Document<'a, R: Serialize> {
    command: &'a str,
    config: &'a ScenarioConfig,
    pass: bool,
    report: R,
}

fn write_json<R: Serialize>(
    out: &Path,
    command: &str,
    loaded: &Loaded,
    pass: bool,
    report: R,
) -> Result<(), Outcome> {
    let doc = Document {
        command,
        config: &loaded.config,
        pass,
        report,
    };
    let mut w = create(out)?;
    serde_json::to_writer_pretty(&mut w, &doc)
        .map_err(|e| Outcome::Invalid(format!("serializing report: {e}")))?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|e| io_failure(out, e))
}

fn csv_header(d: usize) -> String {
    let mut cols = vec!["t".to_string(), "norm".to_string()];
    cols.extend((1..=d).map(|a| format!("mx{a}")));
    cols.extend((1..=d).map(|a| format!("mv{a}")));
    for a in 1..=d {
        cols.extend((1..=d).map(|b| format!("cov{a}{b}")));
    }
    cols.extend((1..=d).map(|a| format!("clx{a}")));
    cols.push("dev".into());
    cols.join(",")
}

fn csv_row(rec: &MomentRecord, classical: &[f64]) -> String {
    let mut cells = vec![format!("{:e}", rec.t), format!("{:e}", rec.norm)];
    cells.extend(rec.mean_position.iter().map(|v| format!("{v:e}")));
    cells.extend(rec.mean_velocity.iter().map(|v| format!("{v:e}")));
    cells.extend(rec.covariance.iter().flatten().map(|v| format!("{v:e}")));
    cells.extend(classical.iter().map(|v| format!("{v:e}")));
    let dev = rec
        .mean_position
        .iter()
        .zip(classical)
        .map(|(q, c)| (q - c).powi(2))
        .sum::<f64>()
        .sqrt();
    cells.push(format!("{dev:e}"));
    cells.join(",")
}

/// Evolves the configured packet and streams one CSV row per record.
pub fn run(config: &Path, out: &Path) -> Outcome {
    match run_inner(config, out) {
        Ok(()) => Outcome::Pass,
        Err(o) => o,
    }
}

fn run_inner(config: &Path, out: &Path) -> Result<(), Outcome> {
    let loaded = load(config)?;
    let s = &loaded.scenario;
    let classical =
        classical_reference(&loaded.packet, &loaded.tidal, &s.evolve).map_err(Outcome::from_sim)?;

    let mut w = create(out)?;
    let echo = serde_json::to_string(&loaded.config).expect("config serializes");
    writeln!(w, "# config: {echo}").map_err(|e| io_failure(out, e))?;
    writeln!(w, "{}", csv_header(s.dim)).map_err(|e| io_failure(out, e))?;

    let mut index = 0;
    let mut write_error: Option<io::Error> = None;
    let result = evolve_with(&loaded.packet, &loaded.tidal, s.scheme, &s.evolve, |rec| {
        if write_error.is_none() {
            if let Err(e) = writeln!(w, "{}", csv_row(rec, &classical.positions[index])) {
                write_error = Some(e);
            }
        }
        index += 1;
    });
    if let Some(e) = write_error {
        return Err(io_failure(out, e));
    }
    match result {
        Ok(_) => w.flush().map_err(|e| io_failure(out, e)),
        Err(e) => {
            let outcome = Outcome::from_sim(e.clone());
            if matches!(outcome, Outcome::Aborted(_)) {
                writeln!(w, "# aborted: {e}")
                    .and_then(|_| w.flush())
                    .map_err(|e| io_failure(out, e))?;
            } else {
                drop(w);
                let _ = std::fs::remove_file(out);
            }
            Err(outcome)
        }
    }
}

/// Mass or shape sweep, whichever the config lists.
pub fn wep(config: &Path, out: &Path) -> Outcome {
    let inner = || -> Result<Outcome, Outcome> {
        let loaded = load(config)?;
        let c = &loaded.config;
        let factor = c.wep_threshold.unwrap_or(DEFAULT_WEP_THRESHOLD);
        if !(factor > 0.0) {
            return Err(Outcome::Invalid(format!(
                "InvalidParameter: wep_threshold must be positive, got {factor}"
            )));
        }
        let report = match (&c.masses, &c.shapes) {
            (Some(masses), None) => wep_mass_sweep_with_threshold(&loaded.scenario, masses, factor),
            (None, Some(specs)) => {
                let shapes = specs
                    .iter()
                    .map(|s| loaded.shape(s))
                    .collect::<Result<Vec<_>, _>>()?;
                wep_shape_sweep_with_threshold(&loaded.scenario, &shapes, factor)
            }
            (Some(_), Some(_)) => {
                return Err(Outcome::Invalid(
                    "InvalidParameter: give either masses or shapes, not both".into(),
                ))
            }
            (None, None) => {
                return Err(Outcome::Invalid(
                    "InvalidParameter: wep needs masses or shapes".into(),
                ))
            }
        }
        .map_err(Outcome::from_sim)?;
        write_json(out, "wep", &loaded, report.pass, &report)?;
        Ok(Outcome::judged(report.pass, || {
            format!(
                "largest deviation {:e} exceeds threshold {:e}",
                report.max_deviation, report.threshold
            )
        }))
    };
    inner().unwrap_or_else(|o| o)
}

/// Single tidal step on the configured packet.
pub fn ripple(config: &Path, out: &Path) -> Outcome {
    let inner = || -> Result<Outcome, Outcome> {
        let loaded = load(config)?;
        let report = ripple_check(&loaded.packet, &loaded.tidal, loaded.scenario.evolve.dt)
            .map_err(Outcome::from_sim)?;
        let pass = report.pass();
        write_json(out, "ripple", &loaded, pass, &report)?;
        Ok(Outcome::judged(pass, || {
            format!(
                "relative error {:e} is not below 1e-8",
                report.relative_error
            )
        }))
    };
    inner().unwrap_or_else(|o| o)
}

#[derive(Serialize)]
struct OrderReport<'a> {
    band: [f64; 2],
    #[serde(flatten)]
    study: &'a fallwave::ConvergenceReport,
}

/// Splitting-order study over `dt_list`.
pub fn converge(config: &Path, out: &Path) -> Outcome {
    let inner = || -> Result<Outcome, Outcome> {
        let loaded = load(config)?;
        let c = &loaded.config;
        let dts = c
            .dt_list
            .as_ref()
            .ok_or_else(|| Outcome::Invalid("InvalidParameter: converge needs dt_list".into()))?;
        let band = c.order_band.unwrap_or(match loaded.scenario.scheme {
            StepScheme::Lie => [0.8, 1.2],
            StepScheme::Strang => [1.8, 2.2],
        });
        if !(band[0] < band[1]) {
            return Err(Outcome::Invalid(format!(
                "InvalidParameter: order_band {band:?} is empty"
            )));
        }
        let study = convergence_study(&loaded.scenario, dts, loaded.scenario.scheme)
            .map_err(Outcome::from_sim)?;
        let pass = study.order >= band[0] && study.order <= band[1];
        write_json(
            out,
            "converge",
            &loaded,
            pass,
            OrderReport {
                band,
                study: &study,
            },
        )?;
        Ok(Outcome::judged(pass, || {
            format!("fitted order {} outside {band:?}", study.order)
        }))
    };
    inner().unwrap_or_else(|o| o)
}
