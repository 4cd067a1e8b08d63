//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{KhoError, Result};
use crate::phase_space::DEFAULT_ENSEMBLE_SIZE;
use crate::qstate::{SystemParams, GOLDEN_RATIO};

pub const MIN_LOG2N: u32 = 6;
pub const MAX_LOG2N: u32 = 18;
pub const MAX_SPECTRAL_LOG2N: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Energy,
    Spectrum,
    Husimi,
    Poincare,
    Bench,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Energy => "energy",
            Experiment::Spectrum => "spectrum",
            Experiment::Husimi => "husimi",
            Experiment::Poincare => "poincare",
            Experiment::Bench => "bench",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = KhoError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "energy" => Experiment::Energy,
            "spectrum" => Experiment::Spectrum,
            "husimi" => Experiment::Husimi,
            "poincare" => Experiment::Poincare,
            "bench" => Experiment::Bench,
            other => {
                return Err(KhoError::Config(format!(
                    "unknown experiment `{other}` (expected energy, spectrum, husimi, poincare or bench)"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSettings {
    pub frft_log2n: (u32, u32),
    pub split_log2n: (u32, u32),
    pub reps: usize,
}

impl Default for BenchSettings {
    fn default() -> Self {
        BenchSettings {
            frft_log2n: (12, 17),
            split_log2n: (10, 13),
            reps: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoincareSettings {
    /// Initial points per quadrant ray.
    pub orbits: usize,
    pub iterations: usize,
    pub clip: f64,
    /// Initial points are spread along `p = 0, 0 < q <= radius` and the three
    /// quarter-turn images of that ray.
    pub radius: f64,
}

impl Default for PoincareSettings {
    fn default() -> Self {
        PoincareSettings {
            orbits: 40,
            iterations: 500,
            clip: 20.0,
            radius: 15.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub params: SystemParams,
    pub grid_log2n: u32,
    pub n_kicks: usize,
    pub initial_q: f64,
    pub initial_p: f64,
    pub ensemble_m: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Number of lowest-energy eigenstates written by the spectrum run.
    pub n_states: usize,
    /// Husimi resolution per axis.
    pub husimi_points: usize,
    /// Husimi window half-width; defaults to half the grid's coordinate range.
    pub husimi_extent: Option<f64>,
    pub poincare: PoincareSettings,
    pub bench: BenchSettings,
    /// Parsed key/value pairs in file order, echoed into the manifest.
    pub entries: Vec<(String, String)>,
}

const KNOWN_KEYS: &[&str] = &[
    "experiment",
    "omega",
    "ratio",
    "resonance",
    "mu",
    "k",
    "hbar",
    "grid_log2n",
    "n_kicks",
    "initial_q",
    "initial_p",
    "ensemble_m",
    "seed",
    "output_dir",
    "n_states",
    "husimi_points",
    "husimi_extent",
    "poincare_orbits",
    "poincare_iterations",
    "poincare_clip",
    "poincare_radius",
    "bench_frft_min_log2n",
    "bench_frft_max_log2n",
    "bench_split_min_log2n",
    "bench_split_max_log2n",
    "bench_reps",
];

/// Splits the text into ordered key/value pairs. Blank lines and everything
/// after `#` are ignored; keys may not repeat.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            KhoError::Config(format!("line {}: expected `key = value`, got `{line}`", lineno + 1))
        })?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || value.is_empty() {
            return Err(KhoError::Config(format!(
                "line {}: empty key or value",
                lineno + 1
            )));
        }
        if !KNOWN_KEYS.contains(&key) {
            return Err(KhoError::Config(format!("line {}: unknown key `{key}`", lineno + 1)));
        }
        if out.iter().any(|(k, _)| k == key) {
            return Err(KhoError::Config(format!("line {}: duplicate key `{key}`", lineno + 1)));
        }
        out.push((key.to_string(), value.to_string()));
    }
    Ok(out)
}

struct Table<'a> {
    map: BTreeMap<&'a str, &'a str>,
}

impl<'a> Table<'a> {
    fn raw(&self, key: &str) -> Option<&'a str> {
        self.map.get(key).copied()
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| KhoError::Config(format!("`{key}`: cannot parse `{v}`"))),
        }
    }

    fn require<T: FromStr>(&self, key: &str, experiment: Experiment) -> Result<T> {
        self.parse(key)?.ok_or_else(|| {
            KhoError::Config(format!("`{key}` is required for the {experiment} experiment"))
        })
    }

    fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.parse(key)?.unwrap_or(default))
    }
}

fn finite(key: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(KhoError::Config(format!("`{key}` must be finite, got {v}")))
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| KhoError::io(path, e))?;
        Self::parse(&text)
    }

    /// Parses and validates a configuration. Which keys are required depends
    /// on `experiment`.
    pub fn parse(text: &str) -> Result<Self> {
        let entries = parse_pairs(text)?;
        let table = Table {
            map: entries.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect(),
        };
        let experiment: Experiment = table
            .raw("experiment")
            .ok_or_else(|| KhoError::Config("`experiment` is required".into()))?
            .parse()?;

        let ratio = match (table.raw("ratio"), table.parse::<u32>("resonance")?) {
            (Some(_), Some(_)) => {
                return Err(KhoError::Config("give either `ratio` or `resonance`, not both".into()))
            }
            (Some("golden"), None) => Some(GOLDEN_RATIO),
            (Some(_), None) => Some(finite("ratio", table.parse::<f64>("ratio")?.unwrap())?),
            (None, Some(r)) if r < 3 => {
                return Err(KhoError::Config(format!("`resonance` must be >= 3, got {r}")))
            }
            (None, Some(r)) => Some(1.0 / r as f64),
            (None, None) => None,
        };

        let physics = matches!(
            experiment,
            Experiment::Energy | Experiment::Spectrum | Experiment::Husimi | Experiment::Poincare
        );
        let defaults = SystemParams::default();
        let params = SystemParams {
            omega: finite("omega", table.or("omega", defaults.omega)?)?,
            ratio: match ratio {
                Some(r) => r,
                None if physics => {
                    return Err(KhoError::Config(format!(
                        "`ratio` or `resonance` is required for the {experiment} experiment"
                    )))
                }
                None => SystemParams::resonant(5, 0.0).ratio,
            },
            mu: finite(
                "mu",
                if physics {
                    table.require("mu", experiment)?
                } else {
                    table.or("mu", 1.0)?
                },
            )?,
            k: finite("k", table.or("k", defaults.k)?)?,
            hbar: finite("hbar", table.or("hbar", defaults.hbar)?)?,
        };
        params
            .validate()
            .map_err(|e| KhoError::Config(e.to_string()))?;

        let needs_grid = matches!(
            experiment,
            Experiment::Energy | Experiment::Spectrum | Experiment::Husimi
        );
        let grid_log2n: u32 = if needs_grid {
            table.require("grid_log2n", experiment)?
        } else {
            table.or("grid_log2n", 10)?
        };
        if !(MIN_LOG2N..=MAX_LOG2N).contains(&grid_log2n) {
            return Err(KhoError::Config(format!(
                "`grid_log2n` must lie in [{MIN_LOG2N}, {MAX_LOG2N}], got {grid_log2n}"
            )));
        }

        let needs_kicks = matches!(experiment, Experiment::Energy | Experiment::Husimi);
        let n_kicks: usize = if needs_kicks {
            table.require("n_kicks", experiment)?
        } else {
            table.or("n_kicks", 0)?
        };
        let (initial_q, initial_p) = if needs_kicks {
            (
                finite("initial_q", table.require("initial_q", experiment)?)?,
                finite("initial_p", table.require("initial_p", experiment)?)?,
            )
        } else {
            (
                finite("initial_q", table.or("initial_q", 0.0)?)?,
                finite("initial_p", table.or("initial_p", 0.0)?)?,
            )
        };
        let seed: u64 = if experiment == Experiment::Energy {
            table.require("seed", experiment)?
        } else {
            table.or("seed", 0)?
        };
        let ensemble_m = table.or("ensemble_m", DEFAULT_ENSEMBLE_SIZE)?;
        if ensemble_m == 0 {
            return Err(KhoError::Config("`ensemble_m` must be positive".into()));
        }
        let output_dir = PathBuf::from(
            table
                .raw("output_dir")
                .ok_or_else(|| KhoError::Config("`output_dir` is required".into()))?,
        );

        let n_states = table.or("n_states", 20usize)?;
        let husimi_points = table.or("husimi_points", 64usize)?;
        if husimi_points < 2 {
            return Err(KhoError::Config("`husimi_points` must be at least 2".into()));
        }
        let husimi_extent = match table.parse::<f64>("husimi_extent")? {
            Some(e) if e.is_finite() && e > 0.0 => Some(e),
            Some(e) => return Err(KhoError::Config(format!("`husimi_extent` must be positive, got {e}"))),
            None => None,
        };

        let pd = PoincareSettings::default();
        let poincare = PoincareSettings {
            orbits: table.or("poincare_orbits", pd.orbits)?,
            iterations: table.or("poincare_iterations", pd.iterations)?,
            clip: finite("poincare_clip", table.or("poincare_clip", pd.clip)?)?,
            radius: finite("poincare_radius", table.or("poincare_radius", pd.radius)?)?,
        };
        if poincare.orbits == 0 || poincare.iterations == 0 || !(poincare.clip > 0.0) || !(poincare.radius > 0.0) {
            return Err(KhoError::Config(
                "poincare orbits, iterations, clip and radius must be positive".into(),
            ));
        }

        let bd = BenchSettings::default();
        let bench = BenchSettings {
            frft_log2n: (
                table.or("bench_frft_min_log2n", bd.frft_log2n.0)?,
                table.or("bench_frft_max_log2n", bd.frft_log2n.1)?,
            ),
            split_log2n: (
                table.or("bench_split_min_log2n", bd.split_log2n.0)?,
                table.or("bench_split_max_log2n", bd.split_log2n.1)?,
            ),
            reps: table.or("bench_reps", bd.reps)?,
        };
        for (name, (lo, hi)) in [("frft", bench.frft_log2n), ("split", bench.split_log2n)] {
            if lo < MIN_LOG2N || hi > MAX_LOG2N || lo > hi {
                return Err(KhoError::Config(format!(
                    "bench {name} range [{lo}, {hi}] must lie in [{MIN_LOG2N}, {MAX_LOG2N}]"
                )));
            }
        }
        if bench.reps < 5 {
            return Err(KhoError::Config("`bench_reps` must be at least 5".into()));
        }

        Ok(RunConfig {
            experiment,
            params,
            grid_log2n,
            n_kicks,
            initial_q,
            initial_p,
            ensemble_m,
            seed,
            output_dir,
            n_states,
            husimi_points,
            husimi_extent,
            poincare,
            bench,
            entries,
        })
    }

    /// Same configuration writing somewhere else.
    pub fn with_output_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.output_dir = dir.into();
        let shown = self.output_dir.display().to_string();
        match self.entries.iter_mut().find(|(k, _)| k == "output_dir") {
            Some(entry) => entry.1 = shown,
            None => self.entries.push(("output_dir".into(), shown)),
        }
        self
    }
}
