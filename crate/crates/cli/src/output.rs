//! Run directories, atomic writes and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

pub struct RunDir {
    path: PathBuf,
    files: Vec<String>,
}

impl RunDir {
    /// `--out` if given, else `./runs/<timestamp>-<command>/`.
    pub fn create(
        out: Option<&Path>,
        command: &str,
        stamp: &chrono::DateTime<chrono::Local>,
    ) -> Result<Self> {
        let path = match out {
            Some(p) => p.to_path_buf(),
            None => {
                let base = PathBuf::from("runs")
                    .join(format!("{}-{command}", stamp.format("%Y%m%dT%H%M%S")));
                let mut p = base.clone();
                let mut n = 1;
                while p.exists() {
                    p = PathBuf::from(format!("{}-{n}", base.display()));
                    n += 1;
                }
                p
            }
        };
        fs::create_dir_all(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(Self {
            path,
            files: Vec::new(),
        })
    }

    /// Write `name` via a temporary file and a rename.
    pub fn write_with(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
    ) -> Result<()> {
        let target = self.path.join(name);
        let tmp = self.path.join(format!(".{name}.tmp"));
        {
            let file =
                fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
            let mut w = std::io::BufWriter::new(file);
            f(&mut w).with_context(|| format!("writing {}", target.display()))?;
            w.flush()?;
        }
        fs::rename(&tmp, &target).with_context(|| format!("renaming to {}", target.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            w.write_all(b"\n")
        })
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        self.write_with(name, |w| w.write_all(text.as_bytes()))
    }

    pub fn finish(mut self, manifest: Manifest) -> Result<PathBuf> {
        let m = RunManifest {
            command: manifest.command,
            argv: std::env::args().collect(),
            config: manifest.config,
            seed: manifest.seed,
            versions: Versions {
                fracac: env!("CARGO_PKG_VERSION"),
            },
            started: manifest.started.to_rfc3339(),
            wall_time_s: manifest.wall_time_s,
            jobs: manifest.jobs,
            outputs: self.files.clone(),
            monitors: manifest.monitors,
        };
        self.write_json("run.json", &m)?;
        Ok(self.path)
    }
}

pub struct Manifest {
    pub command: &'static str,
    pub config: Value,
    pub seed: Option<u64>,
    pub started: chrono::DateTime<chrono::Local>,
    pub wall_time_s: f64,
    pub jobs: usize,
    pub monitors: Value,
}

#[derive(Serialize)]
struct Versions {
    fracac: &'static str,
}

#[derive(Serialize)]
struct RunManifest {
    command: &'static str,
    argv: Vec<String>,
    config: Value,
    seed: Option<u64>,
    versions: Versions,
    started: String,
    wall_time_s: f64,
    jobs: usize,
    /// files in the run directory other than this manifest
    outputs: Vec<String>,
    monitors: Value,
}

pub fn energy_plot() -> &'static str {
    r#"# gnuplot energy.gp
set datafile separator ','
set key autotitle columnhead
set xlabel 't'
set multiplot layout 2,1
set ylabel 'norm'
plot 'trace.csv' using 2:3 with lines title '|psi_t|_L2', \
     '' using 2:4 with lines title '|psi|_H1', \
     '' using 2:10 with lines title 'energy norm'
set ylabel 'coefficient'
plot 'trace.csv' using 2:7 with lines title 'min', '' using 2:8 with lines title 'max'
unset multiplot
pause mouse close
"#
}

pub fn rate_plot(slope: Option<f64>, intercept: Option<f64>) -> String {
    let fit = match (slope, intercept) {
        (Some(s), Some(c)) => format!(
            ", exp({c:.16e}) * x**{s:.16e} with lines title sprintf('slope %.3f', {s:.16e})"
        ),
        _ => String::new(),
    };
    format!(
        r#"# gnuplot rate.gp
set datafile separator ','
set logscale xy
set xlabel 'eps'
set ylabel 'distance'
set key left top
plot 'sweep.csv' using 1:($4 == 0 ? $2 : 1/0) with points pt 7 title 'energy distance', \
     'sweep.csv' using 1:($4 == 1 ? $2 : 1/0) with points pt 6 title 'excluded', \
     'sweep.csv' using 1:3 with linespoints title 'kernel distance'{fit}
pause mouse close
"#
    )
}
