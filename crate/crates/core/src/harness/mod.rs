//! Experiment runner: turns a [`RunConfig`] into CSV files plus a
//! `manifest.json`, one experiment per call.

pub mod analysis;
pub mod config;
pub mod output;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use crate::error::{KhoError, Result};
use crate::frft::DEFAULT_MATRIX_CAP;
use crate::phase_space::{axis, husimi, poincare_section, sample_ensemble, HusimiGrid, PhasePoint};
use crate::propagators::{
    evolve, evolve_record, split_step_bound, split_step_floquet_step, EnergySeries, FloquetStepper,
};
use crate::qstate::{coherent_state, GridSpec, WaveFunction};
use crate::spectral::{build_floquet_matrix, eigendecompose, eigenstate_metrics};

use analysis::{last_half_fit, median};
pub use config::{Experiment, RunConfig};
use output::{Cell, Confinement, CsvText, OutputSet, RunManifest};

pub const ENERGY_HEADER: &[&str] = &["kick", "quantum_energy", "classical_energy"];
pub const SPECTRUM_HEADER: &[&str] = &["index", "quasi_energy", "mean_energy", "ipr"];
pub const DENSITY_HEADER: &[&str] = &["q", "density"];
pub const HUSIMI_HEADER: &[&str] = &["q", "p", "value"];
pub const POINCARE_HEADER: &[&str] = &["q", "p"];
pub const BENCH_HEADER: &[&str] = &["method", "log2n", "seconds_per_period"];

/// Fraction of Husimi mass used for the concentration summary.
pub const HUSIMI_MASS_FRACTION: f64 = 0.99;

#[derive(Debug, Clone)]
pub struct RunReport {
    pub output_dir: PathBuf,
    pub manifest: RunManifest,
}

/// Process exit status for an error: 1 configuration, 3 resource cap,
/// 2 anything else.
pub fn exit_code(err: &KhoError) -> i32 {
    match err {
        KhoError::Config(_) => 1,
        KhoError::ResourceCap { .. } => 3,
        _ => 2,
    }
}

/// Runs the configured experiment. Data files are written first and the
/// manifest last. A confinement breach still writes the partial data and a
/// manifest marked truncated before the error is returned.
pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    let start = Instant::now();
    let mut out = OutputSet::new(&cfg.output_dir)?;
    let mut summary = BTreeMap::new();
    let (grid_spacing, confinement, failure) = match cfg.experiment {
        Experiment::Energy => energy(cfg, &mut out, &mut summary)?,
        Experiment::Spectrum => spectrum(cfg, &mut out, &mut summary)?,
        Experiment::Husimi => husimi_run(cfg, &mut out, &mut summary)?,
        Experiment::Poincare => poincare(cfg, &mut out, &mut summary)?,
        Experiment::Bench => bench(cfg, &mut out)?,
    };
    let manifest = RunManifest {
        experiment: cfg.experiment.name().to_string(),
        config: cfg.entries.iter().cloned().collect(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        grid_spacing,
        confinement,
        summary,
        files: out.checksums().clone(),
    };
    manifest.write(&cfg.output_dir)?;
    match failure {
        Some(err) => Err(err),
        None => Ok(RunReport {
            output_dir: cfg.output_dir.clone(),
            manifest,
        }),
    }
}

type Outcome = (Option<f64>, Confinement, Option<KhoError>);

fn grid_of(cfg: &RunConfig) -> Result<GridSpec> {
    GridSpec::from_log2(cfg.grid_log2n, cfg.params.hbar)
}

fn initial_state(cfg: &RunConfig, grid: &GridSpec) -> Result<WaveFunction> {
    coherent_state(grid, cfg.initial_q, cfg.initial_p, 1.0)
}

fn energy_csv(series: &EnergySeries) -> CsvText {
    let mut csv = CsvText::new(ENERGY_HEADER);
    for (k, &e) in series.quantum.iter().enumerate() {
        let c = series.classical.as_ref().map_or(f64::NAN, |c| c[k]);
        csv.row(&[Cell::Int(k as u64), Cell::Float(e), Cell::Float(c)]);
    }
    csv
}

fn summarize_series(series: &EnergySeries, summary: &mut BTreeMap<String, f64>) {
    let mut put = |name: &str, values: &[f64]| {
        if let (Some(first), Some(last)) = (values.first(), values.last()) {
            summary.insert(format!("{name}_energy_initial"), *first);
            summary.insert(format!("{name}_energy_final"), *last);
        }
        if let Some(fit) = last_half_fit(values) {
            summary.insert(format!("{name}_last_half_slope"), fit.slope);
            summary.insert(format!("{name}_last_half_r_squared"), fit.r_squared);
        }
    };
    put("quantum", &series.quantum);
    if let Some(c) = &series.classical {
        put("classical", c);
    }
}

fn energy(cfg: &RunConfig, out: &mut OutputSet, summary: &mut BTreeMap<String, f64>) -> Result<Outcome> {
    let grid = grid_of(cfg)?;
    let psi0 = initial_state(cfg, &grid)?;
    let ensemble = sample_ensemble(
        PhasePoint::new(cfg.initial_q, cfg.initial_p),
        cfg.ensemble_m,
        cfg.params.hbar,
        cfg.seed,
    )?;
    match evolve_record(&psi0, &cfg.params, cfg.n_kicks, Some(&ensemble)) {
        Ok(series) => {
            out.write_csv("energy.csv", &energy_csv(&series))?;
            summarize_series(&series, summary);
            Ok((Some(grid.spacing()), Confinement::Ok, None))
        }
        Err(KhoError::Truncated(t)) => {
            out.write_csv("energy.csv", &energy_csv(&t.partial))?;
            summarize_series(&t.partial, summary);
            let confinement = Confinement::Truncated {
                completed_kicks: t.kick,
                breach_kick: t.kick + 1,
                tail_mass: t.tail_mass,
            };
            Ok((Some(grid.spacing()), confinement, Some(KhoError::Truncated(t))))
        }
        Err(e) => Err(e),
    }
}

fn husimi_axes(cfg: &RunConfig, grid: &GridSpec) -> (Vec<f64>, Vec<f64>) {
    let extent = cfg.husimi_extent.unwrap_or(0.5 * grid.max_coordinate());
    let ax = axis(-extent, extent, cfg.husimi_points);
    (ax.clone(), ax)
}

fn density_csv(psi: &WaveFunction) -> CsvText {
    let mut csv = CsvText::new(DENSITY_HEADER);
    for (a, d) in psi.density().into_iter().enumerate() {
        csv.row(&[Cell::Float(psi.grid().point(a)), Cell::Float(d)]);
    }
    csv
}

fn husimi_csv(h: &HusimiGrid) -> CsvText {
    let mut csv = CsvText::new(HUSIMI_HEADER);
    for (i, &q) in h.q_axis.iter().enumerate() {
        for (j, &p) in h.p_axis.iter().enumerate() {
            csv.row(&[Cell::Float(q), Cell::Float(p), Cell::Float(h.get(i, j))]);
        }
    }
    csv
}

fn spectrum(cfg: &RunConfig, out: &mut OutputSet, summary: &mut BTreeMap<String, f64>) -> Result<Outcome> {
    let grid = grid_of(cfg)?;
    if grid.len() > DEFAULT_MATRIX_CAP {
        return Err(KhoError::ResourceCap {
            n: grid.len(),
            cap: DEFAULT_MATRIX_CAP,
        });
    }
    let u = build_floquet_matrix(&cfg.params, &grid)?;
    let sys = eigendecompose(&u, &grid)?;
    let metrics = eigenstate_metrics(&sys);

    let mut csv = CsvText::new(SPECTRUM_HEADER);
    for (i, m) in metrics.iter().enumerate() {
        csv.row(&[
            Cell::Int(i as u64),
            Cell::Float(sys.quasi_energies[i]),
            Cell::Float(m.mean_energy),
            Cell::Float(m.ipr),
        ]);
    }
    out.write_csv("spectrum.csv", &csv)?;

    let count = cfg.n_states.min(sys.len());
    let (q_axis, p_axis) = husimi_axes(cfg, &grid);
    let mut worst_concentration: f64 = 0.0;
    for k in 0..count {
        let psi = &sys.eigenvectors[k];
        out.write_csv(&format!("states/density_{k:03}.csv"), &density_csv(psi))?;
        let h = husimi(psi, &q_axis, &p_axis)?;
        worst_concentration = worst_concentration.max(h.concentration(HUSIMI_MASS_FRACTION));
        out.write_csv(&format!("states/husimi_{k:03}.csv"), &husimi_csv(&h))?;
    }

    if count > 0 {
        let mean_ipr = metrics[..count].iter().map(|m| m.ipr).sum::<f64>() / count as f64;
        summary.insert("mean_ipr_lowest".into(), mean_ipr);
        summary.insert("max_husimi_cell_fraction".into(), worst_concentration);
    }
    summary.insert("states_written".into(), count as f64);
    summary.insert("max_residual".into(), sys.max_residual());
    Ok((Some(grid.spacing()), Confinement::NotApplicable, None))
}

fn husimi_run(cfg: &RunConfig, out: &mut OutputSet, summary: &mut BTreeMap<String, f64>) -> Result<Outcome> {
    let grid = grid_of(cfg)?;
    let psi0 = initial_state(cfg, &grid)?;
    let psi = match evolve(&psi0, &cfg.params, cfg.n_kicks) {
        Ok(psi) => psi,
        Err(KhoError::Truncated(t)) => {
            let confinement = Confinement::Truncated {
                completed_kicks: t.kick,
                breach_kick: t.kick + 1,
                tail_mass: t.tail_mass,
            };
            return Ok((Some(grid.spacing()), confinement, Some(KhoError::Truncated(t))));
        }
        Err(e) => return Err(e),
    };
    let (q_axis, p_axis) = husimi_axes(cfg, &grid);
    let h = husimi(&psi, &q_axis, &p_axis)?;
    out.write_csv("density.csv", &density_csv(&psi))?;
    out.write_csv("husimi.csv", &husimi_csv(&h))?;
    let (q, p) = h.argmax();
    summary.insert("husimi_peak_q".into(), q);
    summary.insert("husimi_peak_p".into(), p);
    summary.insert("husimi_mass".into(), h.total_mass());
    Ok((Some(grid.spacing()), Confinement::Ok, None))
}

/// Initial points along the positive `q` axis and its three quarter-turn
/// images.
pub fn poincare_initials(orbits: usize, radius: f64) -> Vec<PhasePoint> {
    let mut pts = Vec::with_capacity(4 * orbits);
    for i in 0..orbits {
        let r = radius * (i + 1) as f64 / orbits as f64;
        pts.extend([
            PhasePoint::new(r, 0.0),
            PhasePoint::new(0.0, r),
            PhasePoint::new(-r, 0.0),
            PhasePoint::new(0.0, -r),
        ]);
    }
    pts
}

fn poincare(cfg: &RunConfig, out: &mut OutputSet, summary: &mut BTreeMap<String, f64>) -> Result<Outcome> {
    let s = &cfg.poincare;
    let cloud = poincare_section(
        &poincare_initials(s.orbits, s.radius),
        &cfg.params,
        s.iterations,
        s.clip,
    )?;
    let mut csv = CsvText::new(POINCARE_HEADER);
    for pt in &cloud.points {
        csv.row(&[Cell::Float(pt.q), Cell::Float(pt.p)]);
    }
    out.write_csv("poincare.csv", &csv)?;
    summary.insert("points".into(), cloud.points.len() as f64);
    summary.insert("clipped".into(), cloud.clipped as f64);
    Ok((None, Confinement::NotApplicable, None))
}

/// Smallest sub-step count whose step lies strictly inside the split-step
/// stability bound.
pub fn compliant_substeps(grid: &GridSpec, theta: f64) -> usize {
    let bound = split_step_bound(grid);
    let mut n = (theta / bound).floor() as usize + 1;
    while theta / n as f64 >= bound {
        n += 1;
    }
    n
}

fn bench(cfg: &RunConfig, out: &mut OutputSet) -> Result<Outcome> {
    let params = cfg.params;
    let reps = cfg.bench.reps;
    let mut csv = CsvText::new(BENCH_HEADER);

    let (lo, hi) = cfg.bench.frft_log2n;
    for log2n in lo..=hi {
        let grid = GridSpec::from_log2(log2n, params.hbar)?;
        let stepper = FloquetStepper::new(&grid, &params)?;
        let mut amp = coherent_state(&grid, 2.0, 1.0, 1.0)?.into_amplitudes();
        stepper.apply(&mut amp);
        let mut times: Vec<f64> = (0..reps)
            .map(|_| {
                let t = Instant::now();
                stepper.apply(&mut amp);
                t.elapsed().as_secs_f64()
            })
            .collect();
        csv.row(&[Cell::Str("frft"), Cell::Int(log2n as u64), Cell::Float(median(&mut times))]);
    }

    let (lo, hi) = cfg.bench.split_log2n;
    for log2n in lo..=hi {
        let grid = GridSpec::from_log2(log2n, params.hbar)?;
        let psi = coherent_state(&grid, 2.0, 1.0, 1.0)?;
        let n_sub = compliant_substeps(&grid, params.theta_rot());
        let mut times = Vec::with_capacity(reps);
        for _ in 0..reps {
            let t = Instant::now();
            let next = split_step_floquet_step(&psi, &params, n_sub)?;
            times.push(t.elapsed().as_secs_f64());
            std::hint::black_box(next);
        }
        csv.row(&[
            Cell::Str("split_step"),
            Cell::Int(log2n as u64),
            Cell::Float(median(&mut times)),
        ]);
    }
    out.write_csv("bench.csv", &csv)?;
    Ok((None, Confinement::NotApplicable, None))
}
