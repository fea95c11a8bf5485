use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::ssvb::ModelExport;

use super::ExperimentConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    Vb,
    Stridge,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Vb => "vb",
            Method::Stridge => "stridge",
        }
    }
}

/// One line of the metrics table.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub system: String,
    pub noise: f64,
    pub seed: u64,
    pub method: Method,
    pub support: Vec<String>,
    /// `(label, coefficient, posterior std)`; the baseline has no std.
    pub coeffs: Vec<(String, f64, Option<f64>)>,
    pub fpr: Option<f64>,
    pub fnr: Option<f64>,
    pub coeff_rel_err: Option<f64>,
    pub sweeps: Option<usize>,
    pub wall_ms: Option<f64>,
    /// `ok`, `max_sweeps`, or `error: <message>`.
    pub status: String,
}

impl ReportRow {
    pub(super) fn blank(config: &ExperimentConfig, noise: f64, seed: u64, method: Method) -> Self {
        ReportRow {
            system: config.system.kind.to_string(),
            noise,
            seed,
            method,
            support: Vec::new(),
            coeffs: Vec::new(),
            fpr: None,
            fnr: None,
            coeff_rel_err: None,
            sweeps: None,
            wall_ms: None,
            status: String::new(),
        }
    }

    pub(super) fn error(config: &ExperimentConfig, noise: f64, seed: u64, method: Method, msg: &str) -> Self {
        ReportRow {
            status: format!("error: {msg}"),
            ..ReportRow::blank(config, noise, seed, method)
        }
    }

    pub fn is_error(&self) -> bool {
        self.status.starts_with("error")
    }

    /// Support matches the truth exactly.
    pub fn is_exact(&self) -> bool {
        self.fpr == Some(0.0) && self.fnr == Some(0.0)
    }

    fn record(&self) -> [String; 12] {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let coeffs = self
            .coeffs
            .iter()
            .map(|(l, c, s)| match s {
                Some(s) => format!("{l}={c}+-{s}"),
                None => format!("{l}={c}"),
            })
            .collect::<Vec<_>>()
            .join(";");
        [
            self.system.clone(),
            self.noise.to_string(),
            self.seed.to_string(),
            self.method.name().to_string(),
            self.support.join(";"),
            coeffs,
            opt(self.fpr),
            opt(self.fnr),
            opt(self.coeff_rel_err),
            self.sweeps.map(|s| s.to_string()).unwrap_or_default(),
            opt(self.wall_ms),
            self.status.clone(),
        ]
    }
}

pub const CSV_HEADER: [&str; 12] = [
    "system",
    "noise",
    "seed",
    "method",
    "support",
    "coeffs",
    "fpr",
    "fnr",
    "coeff_rel_err",
    "sweeps",
    "wall_ms",
    "status",
];

/// Everything one `(system, noise, seed)` cell produced.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub system: String,
    pub noise: f64,
    pub seed: u64,
    pub rows: Vec<ReportRow>,
    /// The variational fit, when it succeeded.
    pub model: Option<ModelExport>,
}

impl RunArtifacts {
    pub(super) fn new(config: &ExperimentConfig, noise: f64, seed: u64) -> Self {
        RunArtifacts {
            system: config.system.kind.to_string(),
            noise,
            seed,
            rows: Vec::new(),
            model: None,
        }
    }

    pub(super) fn failed(config: &ExperimentConfig, noise: f64, seed: u64, msg: &str) -> Self {
        let mut a = RunArtifacts::new(config, noise, seed);
        a.rows = [Method::Vb, Method::Stridge]
            .into_iter()
            .map(|m| ReportRow::error(config, noise, seed, m, msg))
            .collect();
        a
    }

    fn stem(&self) -> String {
        format!("{}_noise{}_seed{}", self.system, self.noise, self.seed)
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub runs: Vec<RunArtifacts>,
}

impl Report {
    pub fn rows(&self) -> impl Iterator<Item = &ReportRow> {
        self.runs.iter().flat_map(|r| r.rows.iter())
    }

    pub fn failed_rows(&self) -> usize {
        self.rows().filter(|r| r.is_error()).count()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(CSV_HEADER)?;
        for row in self.rows() {
            out.write_record(row.record())?;
        }
        out.flush()?;
        Ok(())
    }

    /// Writes `report.csv`, one model JSON per successful variational fit
    /// under `models/`, and gnuplot data under `plots/`: per-system error
    /// curves against noise and per-run ELBO traces.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir.join("models"))?;
        fs::create_dir_all(dir.join("plots"))?;
        self.write_csv(fs::File::create(dir.join("report.csv"))?)?;
        for run in &self.runs {
            let Some(model) = &run.model else { continue };
            let stem = run.stem();
            fs::write(
                dir.join("models").join(format!("{stem}.json")),
                serde_json::to_string_pretty(model)? + "\n",
            )?;
            let mut trace = String::from("# sweep elbo\n");
            for (i, e) in model.elbo_trace.iter().enumerate() {
                let _ = writeln!(trace, "{} {}", i + 1, e);
            }
            fs::write(dir.join("plots").join(format!("{stem}_elbo.dat")), trace)?;
        }
        for (system, text) in self.error_curves() {
            fs::write(dir.join("plots").join(format!("{system}_errors.dat")), text)?;
        }
        Ok(())
    }

    /// Seed-averaged FPR and coefficient error per system and noise level.
    fn error_curves(&self) -> BTreeMap<String, String> {
        type Acc = [(f64, usize); 4];
        let mut acc: BTreeMap<String, Vec<(f64, Acc)>> = BTreeMap::new();
        for row in self.rows() {
            let curves = acc.entry(row.system.clone()).or_default();
            let pos = match curves.iter().position(|(n, _)| *n == row.noise) {
                Some(p) => p,
                None => {
                    curves.push((row.noise, [(0.0, 0); 4]));
                    curves.len() - 1
                }
            };
            let slot = &mut curves[pos].1;
            let base = if row.method == Method::Vb { 0 } else { 2 };
            for (j, v) in [row.fpr, row.coeff_rel_err].into_iter().enumerate() {
                if let Some(v) = v {
                    slot[base + j].0 += v;
                    slot[base + j].1 += 1;
                }
            }
        }
        acc.into_iter()
            .map(|(system, curves)| {
                let mut text = String::from("# noise vb_fpr vb_coeff_rel_err stridge_fpr stridge_coeff_rel_err\n");
                for (noise, slot) in curves {
                    let cols: Vec<String> = slot
                        .iter()
                        .map(|(s, n)| {
                            if *n > 0 {
                                (s / *n as f64).to_string()
                            } else {
                                "NaN".into()
                            }
                        })
                        .collect();
                    let _ = writeln!(text, "{noise} {}", cols.join(" "));
                }
                (system, text)
            })
            .collect()
    }
}
