//! Subcommand bodies.  Each returns a table or a text report; `main`
//! decides where it goes.

use std::fmt::Write as _;

use lindblad_rate::linalg::{hermitian_eigs, CMatrix};
use lindblad_rate::model::{validate_model_with_tol, ValidationReport};
use lindblad_rate::qubit::{depolarizing_at, h_of_t, Preset};
use lindblad_rate::scalar::c;
use lindblad_rate::solver::{
    evolve, homogeneity_check, memory_kernel_at, stationary_state, EvolveOptions,
};
use lindblad_rate::stochastic::{run_ensemble, EnsembleAccumulator};

use crate::config::{ConfigError, Engine, RunConfig};
use crate::table::OutputTable;

const HOMOGENEITY_TOL: f64 = 1e-8;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("model failed validation: {0}")]
    Validation(String),
    #[error("engine: {0}")]
    Engine(#[from] lindblad_rate::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("closed-form residual {residual:e} exceeds tolerance {tol:e}")]
    Residual { residual: f64, tol: f64 },
}

impl RunError {
    /// 2 for bad input, 3 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Validation(_) => 2,
            _ => 3,
        }
    }
}

pub type RunResult<T> = std::result::Result<T, RunError>;

pub fn validation(cfg: &RunConfig) -> ValidationReport<f64> {
    validate_model_with_tol(&cfg.models.rate, cfg.tolerances.psd)
}

fn options(cfg: &RunConfig) -> EvolveOptions<f64> {
    EvolveOptions {
        method: cfg.method,
        rtol: cfg.tolerances.rtol,
        atol: cfg.tolerances.atol,
        ..EvolveOptions::default()
    }
}

/// `p{i}`, then `re_rho_{i}{j}`/`im_rho_{i}{j}` for `i < j`, then `trace_ch{r}`.
fn state_columns(prefix: &str, d: usize, k: usize) -> Vec<String> {
    let mut cols: Vec<String> = (0..d).map(|i| format!("{prefix}p{i}")).collect();
    for i in 0..d {
        for j in i + 1..d {
            cols.push(format!("{prefix}re_rho_{i}{j}"));
            cols.push(format!("{prefix}im_rho_{i}{j}"));
        }
    }
    cols.extend((0..k).map(|r| format!("{prefix}trace_ch{r}")));
    cols
}

fn state_values(rho: &CMatrix<f64>, traces: &[f64]) -> Vec<f64> {
    let d = rho.nrows();
    let mut row: Vec<f64> = (0..d).map(|i| rho[(i, i)].re).collect();
    for i in 0..d {
        for j in i + 1..d {
            row.push(rho[(i, j)].re);
            row.push(rho[(i, j)].im);
        }
    }
    row.extend_from_slice(traces);
    row
}

fn min_eig(rho: &CMatrix<f64>) -> f64 {
    let sym = (rho + rho.adjoint()) * c(0.5, 0.);
    hermitian_eigs(&sym).map_or(f64::NAN, |e| e.values[0])
}

fn ensemble(cfg: &RunConfig) -> RunResult<EnsembleAccumulator<f64>> {
    let walk = cfg.models.walk.as_ref().ok_or_else(|| {
        ConfigError::field(
            "model",
            "the stochastic engine needs a preset or walk model source",
        )
    })?;
    let seed = cfg.seed.ok_or_else(|| {
        ConfigError::field("seed", "required when the stochastic engine is selected")
    })?;
    Ok(run_ensemble(
        walk,
        &cfg.initial_state,
        &cfg.grid,
        cfg.trajectories,
        seed,
    )?)
}

fn mc_values(acc: &EnsembleAccumulator<f64>, k: usize) -> (Vec<f64>, Vec<f64>) {
    let channels = acc.channels();
    let occ: Vec<f64> = (0..channels).map(|r| acc.occupancy(k, r)).collect();
    let occ_se: Vec<f64> = (0..channels).map(|r| acc.occupancy_se(k, r)).collect();
    (
        state_values(&acc.mean_system(k), &occ),
        state_values(&acc.se_system(k), &occ_se),
    )
}

/// Time series of the system state.  Stochastic runs add `se_` columns;
/// `both` puts the ensemble under `mc_` next to the deterministic values.
pub fn evolve_table(cfg: &RunConfig) -> RunResult<OutputTable> {
    cfg.check()?;
    let d = cfg.models.rate.dim();
    let k = cfg.models.rate.channels();
    let mut columns = vec!["t".to_string()];
    match cfg.engine {
        Engine::Deterministic => {
            columns.extend(state_columns("", d, k));
            columns.push("min_eig".into());
        }
        Engine::Stochastic => {
            columns.extend(state_columns("", d, k));
            columns.extend(state_columns("se_", d, k));
        }
        Engine::Both => {
            columns.extend(state_columns("", d, k));
            columns.push("min_eig".into());
            columns.extend(state_columns("mc_", d, k));
            columns.extend(state_columns("se_", d, k));
        }
    }
    let mut table = OutputTable::new(columns);
    if cfg.grid.is_empty() {
        return Ok(table);
    }
    let det = if cfg.engine.deterministic() {
        Some(evolve(
            &cfg.models.rate,
            &cfg.initial_state,
            &cfg.grid,
            &options(cfg),
        )?)
    } else {
        None
    };
    let mc = if cfg.engine.stochastic() {
        Some(ensemble(cfg)?)
    } else {
        None
    };
    for (i, &t) in cfg.grid.iter().enumerate() {
        let mut row = vec![t];
        if let Some(det) = &det {
            let rho = &det.system[i];
            row.extend(state_values(rho, &det.states[i].channel_traces()));
            row.push(min_eig(rho));
        }
        if let Some(acc) = &mc {
            let (mean, se) = mc_values(acc, i);
            row.extend(mean);
            row.extend(se);
        }
        table.push(row);
    }
    Ok(table)
}

/// One row per sample point: `u`, the kernel diagnostics, then every
/// entry of the `d² × d²` kernel as `k{row}_{col}_re/_im`.
pub fn kernel_table(cfg: &RunConfig) -> RunResult<OutputTable> {
    let n = cfg.models.rate.dim().pow(2);
    let mut columns: Vec<String> = ["u_re", "u_im", "shifted", "rank", "condition"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for i in 0..n {
        for j in 0..n {
            columns.push(format!("k{i}_{j}_re"));
            columns.push(format!("k{i}_{j}_im"));
        }
    }
    let mut table = OutputTable::new(columns);
    for &u in &cfg.kernel_points {
        let s = memory_kernel_at(&cfg.models.rate, u)?;
        let mut row = vec![
            u.re,
            u.im,
            if s.shifted { 1.0 } else { 0.0 },
            s.rank as f64,
            s.condition,
        ];
        for i in 0..n {
            for j in 0..n {
                let z = s.kernel.matrix[(i, j)];
                row.push(z.re);
                row.push(z.im);
            }
        }
        table.push(row);
    }
    Ok(table)
}

fn write_matrix(out: &mut String, m: &CMatrix<f64>) {
    for i in 0..m.nrows() {
        let cells: Vec<String> = (0..m.ncols())
            .map(|j| format!("{:+.12e}{:+.12e}i", m[(i, j)].re, m[(i, j)].im))
            .collect();
        let _ = writeln!(out, "  [{}]", cells.join(", "));
    }
}

/// Long-time state, channel traces and the homogeneity sectors.
pub fn stationary_report(cfg: &RunConfig) -> RunResult<String> {
    let model = &cfg.models.rate;
    let st = stationary_state(model, &cfg.initial_state)?;
    let mut out = String::new();
    let _ = writeln!(out, "stationary state:");
    write_matrix(&mut out, &st.rho);
    let traces = st.channels.channel_traces();
    for (r, tr) in traces.iter().enumerate() {
        let _ = writeln!(out, "channel {r} trace: {tr:.12e}");
    }
    match (st.check_time, st.check_residual) {
        (Some(t), Some(res)) => {
            let _ = writeln!(out, "evolution check at t = {t:.6e}: residual {res:.3e}");
        }
        _ => {
            let _ = writeln!(out, "evolution check: spectrum has no decaying part");
        }
    }
    let hom = homogeneity_check(model, HOMOGENEITY_TOL)?;
    let _ = write!(out, "{hom}");
    Ok(out)
}

pub struct ExampleRun {
    pub table: OutputTable,
    pub max_residual: f64,
}

/// Closed form against the deterministic engine on a preset, with the
/// Monte Carlo mean alongside when a seed and trajectory count are set.
pub fn example_table(cfg: &RunConfig, with_mc: bool) -> RunResult<ExampleRun> {
    let (_, preset) = cfg
        .models
        .preset
        .as_ref()
        .ok_or_else(|| ConfigError::field("model", "example needs a preset"))?;
    let dephasing = matches!(preset, Preset::Dephasing(_));
    let mut columns = vec!["t".to_string()];
    if dephasing {
        columns.extend(["h_closed".into(), "h_evolve".into()]);
    }
    columns.extend(state_columns("closed_", 2, 0));
    columns.extend(state_columns("evolve_", 2, 0));
    columns.push("residual".into());
    if with_mc {
        columns.extend(state_columns("mc_", 2, 0));
        columns.extend(state_columns("se_", 2, 0));
    }
    let mut table = OutputTable::new(columns);
    let mut max_residual = 0.0f64;
    if cfg.grid.is_empty() {
        return Ok(ExampleRun {
            table,
            max_residual,
        });
    }
    let rho0 = &cfg.initial_state;
    let det = evolve(&cfg.models.rate, rho0, &cfg.grid, &options(cfg))?;
    let mc = if with_mc { Some(ensemble(cfg)?) } else { None };
    let coherence0 = rho0[(0, 1)];
    for (i, &t) in cfg.grid.iter().enumerate() {
        let closed = match preset {
            Preset::Dephasing(p) => {
                let h = h_of_t(p, t);
                let mut m = rho0.clone();
                m[(0, 1)] = coherence0 * c(h, 0.);
                m[(1, 0)] = m[(0, 1)].conj();
                m
            }
            Preset::Depolarizing(p) => depolarizing_at(p, rho0, t)?.system.to_matrix(),
        };
        let ev = &det.system[i];
        let residual = (&closed - ev).iter().map(|z| z.norm()).fold(0.0, f64::max);
        max_residual = max_residual.max(residual);
        let mut row = vec![t];
        if dephasing {
            let h_ev = if coherence0.norm() > 0.0 {
                (ev[(0, 1)] / coherence0).re
            } else {
                f64::NAN
            };
            let Preset::Dephasing(p) = preset else {
                unreachable!()
            };
            row.extend([h_of_t(p, t), h_ev]);
        }
        row.extend(state_values(&closed, &[]));
        row.extend(state_values(ev, &[]));
        row.push(residual);
        if let Some(acc) = &mc {
            row.extend(state_values(&acc.mean_system(i), &[]));
            row.extend(state_values(&acc.se_system(i), &[]));
        }
        table.push(row);
    }
    Ok(ExampleRun {
        table,
        max_residual,
    })
}
