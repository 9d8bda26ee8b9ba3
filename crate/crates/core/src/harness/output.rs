//! On-disk layout of one experiment:
//!
//! ```text
//! out/
//!   manifest.json   config echo, input hashes, verdicts, output hashes
//!   sweep.csv       one row per R
//!   residuals.csv   one row per snapshot
//!   fields/         the trajectory (manifest.json + snapshot_*.bin)
//! ```
//!
//! Nothing time- or host-dependent is written, so equal inputs give
//! byte-identical directories.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::run::{ExperimentResult, Outcome, Plan, Verdicts, WeakFormEntry};
use super::ExperimentConfig;
use crate::diagnostics::CauchyEntry;
use crate::error::Result;
use crate::exponents::RegimeReport;
use crate::integrator::{save_dir, TRAJECTORY_SCHEMA};
use crate::spectral::io;

pub const MANIFEST_SCHEMA: u32 = 1;
pub const SWEEP_SCHEMA: u32 = 1;
pub const RESIDUALS_SCHEMA: u32 = 1;

pub const SWEEP_HEADER: &str =
    "R,I_R,lemma1_ratio,data_term,data_majorant,slab_mass,slab_prediction,horizon_capped";
pub const RESIDUALS_HEADER: &str =
    "t,mass,boundary_fraction,flux,max_modulus,l2_residual,spacetime_residual";

/// Git-style object hash, `sha256("blob <len>\0" ++ bytes)`.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

#[derive(Serialize)]
struct Tool {
    name: &'static str,
    version: &'static str,
}

#[derive(Serialize)]
struct Inputs {
    config: String,
    initial_data: String,
}

#[derive(Serialize)]
struct OutputFile {
    file: String,
    schema: u32,
    hash: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema: u32,
    tool: Tool,
    plan: Plan,
    config: &'a ExperimentConfig,
    inputs: Inputs,
    regime: &'a RegimeReport,
    outcome: &'a Outcome,
    r0: Option<f64>,
    verdicts: &'a Verdicts,
    tail_fractions: &'a [Option<f64>],
    weak_form: &'a [WeakFormEntry],
    cauchy: &'a [CauchyEntry],
    outputs: Vec<OutputFile>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn sweep_csv(result: &ExperimentResult) -> String {
    let mut s = String::from(SWEEP_HEADER);
    s.push('\n');
    for r in &result.records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.r,
            r.i_r,
            r.lemma1_ratio,
            r.data_term,
            r.data_majorant,
            r.slab_mass,
            r.slab_prediction,
            r.horizon_capped
        );
    }
    s
}

pub fn residuals_csv(result: &ExperimentResult) -> String {
    let mut s = String::from(RESIDUALS_HEADER);
    s.push('\n');
    for r in &result.residuals {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.t,
            r.mass,
            r.boundary_fraction,
            r.flux,
            r.max_modulus,
            opt(r.l2_residual),
            opt(r.spacetime_residual)
        );
    }
    s
}

/// Hash over `name hash` lines of every file in `dir`, sorted by name.
fn tree_hash(dir: &Path) -> Result<String> {
    let mut names: Vec<String> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect::<std::io::Result<_>>()?;
    names.sort();
    let mut listing = String::new();
    for n in names {
        let _ = writeln!(listing, "{n} {}", content_hash(&fs::read(dir.join(&n))?));
    }
    Ok(content_hash(listing.as_bytes()))
}

/// Write the experiment directory; output writing is sequential.
pub fn persist(result: &ExperimentResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut outputs = Vec::new();
    let mut emit = |name: &str, schema: u32, text: String| -> Result<()> {
        fs::write(dir.join(name), &text)?;
        outputs.push(OutputFile {
            file: name.into(),
            schema,
            hash: content_hash(text.as_bytes()),
        });
        Ok(())
    };
    if result.plan.sweep {
        emit("sweep.csv", SWEEP_SCHEMA, sweep_csv(result))?;
    }
    emit("residuals.csv", RESIDUALS_SCHEMA, residuals_csv(result))?;
    let fields = dir.join("fields");
    if fields.exists() {
        fs::remove_dir_all(&fields)?;
    }
    save_dir(&result.integration, &fields)?;
    outputs.push(OutputFile {
        file: "fields/".into(),
        schema: TRAJECTORY_SCHEMA,
        hash: tree_hash(&fields)?,
    });

    let manifest = Manifest {
        schema: MANIFEST_SCHEMA,
        tool: Tool {
            name: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
        },
        plan: result.plan,
        config: &result.config,
        inputs: Inputs {
            config: content_hash(result.config.to_toml()?.as_bytes()),
            initial_data: content_hash(&io::to_bytes(&result.initial)),
        },
        regime: &result.regime,
        outcome: &result.outcome,
        r0: result.r0,
        verdicts: &result.verdicts,
        tail_fractions: &result.tail_fractions,
        weak_form: &result.weak_form,
        cauchy: &result.cauchy,
        outputs,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(dir.join("manifest.json"), text)?;
    Ok(())
}
