//! Uniformly sampled model trajectories.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// State samples of the model diffusions on a uniform time grid.
///
/// Sample `k` is taken at `t = k * grid_step` days. `y = (1 - n_f) / n_f`
/// holds exactly at every sample when the trajectory comes from the agent
/// dynamics; trajectories of the standalone y diffusion carry the implied
/// `n_f = 1 / (1 + y)` and `xi = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Grid spacing in days.
    pub grid_step: f64,
    pub n_f: Vec<f64>,
    pub xi: Vec<f64>,
    pub y: Vec<f64>,
    /// Seed the trajectory was generated from, kept for reproducibility.
    pub seed: u64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Time of sample `k` in days.
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.grid_step
    }

    /// Write as CSV with columns `t_days,n_f,xi,y`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let ctx = "writing trajectory csv";
        writeln!(w, "t_days,n_f,xi,y").map_err(|e| Error::io(ctx, e))?;
        for k in 0..self.len() {
            writeln!(w, "{},{},{},{}", self.time(k), self.n_f[k], self.xi[k], self.y[k])
                .map_err(|e| Error::io(ctx, e))?;
        }
        Ok(())
    }

    pub fn write_csv_path(&self, path: &Path) -> Result<()> {
        let f = File::create(path)
            .map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        self.write_csv(BufWriter::new(f))
    }

    /// Read a trajectory written by [`Trajectory::write_csv`]. The grid step
    /// is recovered from the first two rows; the seed is not stored in the
    /// CSV and is set to 0.
    pub fn read_csv_path(path: &Path) -> Result<Trajectory> {
        let name = path.display().to_string();
        let f = File::open(path).map_err(|e| Error::io(format!("opening {name}"), e))?;
        let reader = BufReader::new(f);

        let mut times = Vec::new();
        let mut n_f = Vec::new();
        let mut xi = Vec::new();
        let mut y = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(format!("reading {name}"), e))?;
            if idx == 0 {
                continue; // header
            }
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let mut field = |what: &str| -> Result<f64> {
                fields
                    .next()
                    .ok_or_else(|| Error::Parse {
                        path: name.clone(),
                        line: idx + 1,
                        what: format!("missing column {what}"),
                    })?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse {
                        path: name.clone(),
                        line: idx + 1,
                        what: format!("{what}: {e}"),
                    })
            };
            times.push(field("t_days")?);
            n_f.push(field("n_f")?);
            xi.push(field("xi")?);
            y.push(field("y")?);
        }
        if times.len() < 2 {
            return Err(Error::TooShort { len: times.len(), min: 2 });
        }
        let grid_step = times[1] - times[0];
        if !(grid_step > 0.0) {
            return Err(Error::Parse {
                path: name,
                line: 2,
                what: "non-increasing time column".into(),
            });
        }
        Ok(Trajectory { grid_step, n_f, xi, y, seed: 0 })
    }
}
