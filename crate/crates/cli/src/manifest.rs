use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use slalom_core::spectrum::NodeFailure;
use slalom_core::units::{self, LabParams};
use slalom_core::FieldParams;

/// Failures listed in full in the manifest; the rest are only counted.
const FAILURE_EXAMPLES: usize = 100;

#[derive(Debug, Clone, Serialize)]
pub struct FieldRecord {
    pub au: FieldParams,
    pub lab: LabParams,
    pub gamma: f64,
    pub kappa: f64,
    pub ponderomotive_au: f64,
    pub ponderomotive_ev: f64,
    pub quiver_radius_au: f64,
    pub momentum_scale_au: f64,
    pub period_au: f64,
}

impl FieldRecord {
    pub fn new(fp: &FieldParams) -> Self {
        Self {
            au: *fp,
            lab: LabParams::from_field(fp),
            gamma: fp.gamma(),
            kappa: fp.kappa(),
            ponderomotive_au: fp.ponderomotive(),
            ponderomotive_ev: units::hartree_to_ev(fp.ponderomotive()),
            quiver_radius_au: fp.quiver_radius(),
            momentum_scale_au: fp.momentum_scale(),
            period_au: fp.period(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct FailureSummary {
    pub nodes: usize,
    pub masked: usize,
    pub examples: Vec<NodeFailure>,
}

impl FailureSummary {
    pub fn new(nodes: usize, failures: &[NodeFailure]) -> Self {
        Self {
            nodes,
            masked: failures.len(),
            examples: failures.iter().take(FAILURE_EXAMPLES).cloned().collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Conversions {
    pub hartree_ev: f64,
    pub atomic_intensity_w_cm2: f64,
    pub omega_times_nm: f64,
}

/// Record of one run; every artifact names it in its header or `manifest` key.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub argv: Vec<String>,
    pub field: Option<FieldRecord>,
    pub settings: Value,
    pub artifacts: Vec<String>,
    pub failures: FailureSummary,
    pub conversions: Conversions,
    pub wall_time_s: f64,
}

/// Artifact sink: a directory with a manifest, or stdout.
pub struct Output {
    dir: Option<PathBuf>,
    command: String,
    artifacts: Vec<String>,
}

impl Output {
    pub fn new(dir: Option<&Path>, command: &str) -> Result<Self> {
        if let Some(d) = dir {
            fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
        }
        Ok(Self {
            dir: dir.map(Path::to_path_buf),
            command: command.to_string(),
            artifacts: Vec::new(),
        })
    }

    pub fn manifest_name(&self) -> String {
        format!("{}.manifest.json", self.command)
    }

    /// Writes `value` as `<command>.json` with a `manifest` key, or prints it.
    pub fn json<T: Serialize>(&mut self, value: &T) -> Result<()> {
        let mut v = serde_json::to_value(value)?;
        if self.dir.is_none() {
            let mut lock = std::io::stdout().lock();
            serde_json::to_writer_pretty(&mut lock, &v)?;
            writeln!(lock)?;
            return Ok(lock.flush()?);
        }
        if let Value::Object(map) = &mut v {
            map.insert("manifest".into(), Value::String(self.manifest_name()));
        }
        let name = format!("{}.json", self.command);
        self.file(&name, |w| {
            serde_json::to_writer_pretty(&mut *w, &v)?;
            Ok(writeln!(w)?)
        })
    }

    /// Writes a CSV artifact headed by `# manifest: …`. Skipped on stdout
    /// unless `print` is set.
    pub fn csv<F>(&mut self, name: &str, print: bool, body: F) -> Result<()>
    where
        F: FnOnce(&mut dyn Write) -> Result<()>,
    {
        if self.dir.is_none() {
            if print {
                let mut lock = std::io::stdout().lock();
                body(&mut lock)?;
                lock.flush()?;
            }
            return Ok(());
        }
        let manifest = self.manifest_name();
        self.file(name, |w| {
            writeln!(w, "# manifest: {manifest}")?;
            body(w)
        })
    }

    fn file<F>(&mut self, name: &str, body: F) -> Result<()>
    where
        F: FnOnce(&mut dyn Write) -> Result<()>,
    {
        let dir = self.dir.as_ref().expect("file output needs a directory");
        let path = dir.join(name);
        let f = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(f);
        body(&mut w)?;
        w.flush()?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    /// Writes the manifest when a directory was given.
    pub fn finish(self, field: Option<&FieldParams>, settings: Value, failures: FailureSummary, wall_time_s: f64) -> Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let manifest = RunManifest {
            tool: "slalom",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command.clone(),
            argv: std::env::args().skip(1).collect(),
            field: field.map(FieldRecord::new),
            settings,
            artifacts: self.artifacts.clone(),
            failures,
            conversions: Conversions {
                hartree_ev: units::HARTREE_EV,
                atomic_intensity_w_cm2: units::ATOMIC_INTENSITY_W_CM2,
                omega_times_nm: units::OMEGA_TIMES_NM,
            },
            wall_time_s,
        };
        let path = dir.join(self.manifest_name());
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}
