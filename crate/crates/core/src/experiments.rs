//! Experiment drivers behind the CLI subcommands: envelope sweeps for the
//! commutator and correlation statements, the projector-decomposition
//! identity check, and the many-body-versus-Hartree comparison.
//!
//! Every driver turns a validated [`ExperimentConfig`] into CSV text plus the
//! first violating row, if any. Work items (one per output row, or per shared
//! propagation) are evaluated concurrently but emitted in their construction
//! order, so output bytes never depend on scheduling. All randomness is keyed
//! by `(seed, sample, slot)` tuples, never by execution order.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::bounds::{commutator_bound, correlation_bound, LrLayout};
use crate::config::{ExperimentConfig, LayoutSection};
use crate::error::{Error, Result};
use crate::hamiltonian::{assemble_full, bound_params, PotentialSet, SparseHamiltonian};
use crate::hartree::{factorization_gap, HartreeFlow};
use crate::linalg::spectral_norm_dense;
use crate::observables::{
    commutator_norm, correlation, layout_operators, projector_decomposition, ratio_of,
};
use crate::propagator::{evolve, PropagatorConfig};
use crate::space::{LatticeGrid, Species, SpeciesConfig};
use crate::state::MixtureState;
use crate::witness::{seeded_orbital, witness_kernels};

/// A sweep row passes while `measured/bound` stays at or below this.
pub const RATIO_LIMIT: f64 = 1.0 + 1e-6;
/// Largest decomposition residual that still counts as an identity.
pub const RESIDUAL_LIMIT: f64 = 1e-9;
/// Zero-time factorization gaps above this fail the Hartree comparison.
pub const ZERO_TIME_GAP_LIMIT: f64 = 1e-10;
/// Head-room factor when judging the gap trend across particle numbers.
pub const TREND_FACTOR: f64 = 1.25;

/// A finished experiment: full CSV text and the first violating row, if any.
/// The caller maps a violation to the process exit code.
pub struct SweepOutput {
    pub csv: String,
    pub violation: Option<String>,
}

fn fmt_float(x: f64, precision: usize) -> String {
    format!("{:.*e}", precision.saturating_sub(1), x)
}

fn assemble_csv(
    cfg: &ExperimentConfig,
    header: &str,
    rows: &[String],
    trailing_comments: &[String],
) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# config_sha256={} version={}",
        cfg.sha256_hex(),
        env!("CARGO_PKG_VERSION")
    );
    let _ = writeln!(s, "{header}");
    for row in rows {
        let _ = writeln!(s, "{row}");
    }
    for comment in trailing_comments {
        let _ = writeln!(s, "{comment}");
    }
    s
}

fn propagator_config(cfg: &ExperimentConfig) -> PropagatorConfig {
    PropagatorConfig {
        method: cfg.run.method,
        krylov_dim: cfg.run.krylov_dim,
        substep: cfg.run.substep,
        tol: cfg.run.tol,
        dense_threshold: cfg.run.dense_threshold,
    }
}

/// First row whose score breaks its limit (NaN counts as broken).
fn first_violation<'a>(
    rows: impl IntoIterator<Item = (&'a String, f64)>,
    limit: f64,
) -> Option<String> {
    rows.into_iter()
        .find(|(_, score)| *score > limit || score.is_nan())
        .map(|(row, _)| row.clone())
}

/// Resolves the config layout for the commutator sweep (defaults to one slot
/// per species on each side).
fn lr_layout(cfg: &ExperimentConfig) -> LrLayout {
    cfg.layout.map_or_else(|| LrLayout::symmetric(1, 1), LayoutSection::to_lr_layout)
}

/// Resolves the config layout for correlation-type runs, which need the
/// symmetric `(n, m)` form.
fn symmetric_layout(cfg: &ExperimentConfig) -> Result<(usize, usize)> {
    match cfg.layout {
        None => Ok((1, 1)),
        Some(LayoutSection::Symmetric { n, m }) => Ok((n, m)),
        Some(LayoutSection::General { .. }) => Err(Error::invalid(
            "this run type takes the symmetric layout (n, m), not the general quadruple",
        )),
    }
}

fn kernel_dims(m: usize, layout: &LrLayout) -> [usize; 4] {
    [
        m.pow(layout.n1 as u32),
        m.pow(layout.n2 as u32),
        m.pow(layout.m1 as u32),
        m.pow(layout.m2 as u32),
    ]
}

struct Cell {
    n1: usize,
    n2: usize,
    config: SpeciesConfig,
    hamiltonian: SparseHamiltonian,
}

fn build_cells(
    cfg: &ExperimentConfig,
    grid: &LatticeGrid,
    potentials: &PotentialSet,
) -> Result<Vec<Cell>> {
    cfg.system
        .n_pairs
        .iter()
        .map(|&(n1, n2)| {
            let config = SpeciesConfig::new(n1, n2)?;
            config.dimension(grid)?;
            let hamiltonian = assemble_full(grid, &config, potentials)?;
            Ok(Cell { n1, n2, config, hamiltonian })
        })
        .collect()
}

/// Evaluates row closures concurrently, preserving item order.
fn evaluate_rows<I, F>(items: Vec<I>, eval: F) -> Result<Vec<(String, f64)>>
where
    I: Sync,
    F: Fn(&I) -> Result<(String, f64)> + Sync,
{
    let results: Vec<Result<(String, f64)>> = items.par_iter().map(&eval).collect();
    results.into_iter().collect()
}

/// Commutator-envelope sweep. One row per `(t, cell, sample)`; the score of a
/// row is `measured / bound` under the small-denominator convention, and the
/// run fails when any score exceeds [`RATIO_LIMIT`].
pub fn run_lr_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    let grid = cfg.grid()?;
    let potentials = cfg.potentials.build(&grid)?;
    let layout = lr_layout(cfg);
    let pcfg = propagator_config(cfg);
    let dims = kernel_dims(grid.sites(), &layout);
    let cells = build_cells(cfg, &grid, &potentials)?;
    let precision = cfg.output.precision;
    let seed = cfg.run.seed;

    let mut items = Vec::new();
    for &t in &cfg.run.times {
        for (ci, _) in cells.iter().enumerate() {
            for sample in 0..cfg.run.witness_count {
                items.push((t, ci, sample));
            }
        }
    }
    let rows = evaluate_rows(items, |&(t, ci, sample)| {
        let cell = &cells[ci];
        let kernels = witness_kernels(seed, sample, dims, cfg.run.hermitian);
        let opnorms = std::array::from_fn(|i| spectral_norm_dense(&kernels[i]));
        let (op1, op2) = layout_operators(&kernels, &layout, &cell.config, &grid)?;
        // Block sizes (0, 0): only the rate, densities and norm product of the
        // parameter set feed the commutator envelope.
        let params = bound_params(&cell.config, &potentials, 0, 0, opnorms)?;
        let measured = commutator_norm(&cell.hamiltonian, &op1, &op2, t, &pcfg)?;
        let bound = commutator_bound(&params, &layout, t);
        let ratio = ratio_of(measured, bound);
        let row = format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            fmt_float(t, precision),
            layout.n1,
            layout.n2,
            layout.m1,
            layout.m2,
            cell.n1,
            cell.n2,
            sample,
            fmt_float(measured, precision),
            fmt_float(bound, precision),
            fmt_float(ratio, precision),
        );
        Ok((row, ratio))
    })?;

    let violation = first_violation(rows.iter().map(|(r, s)| (r, *s)), RATIO_LIMIT);
    let row_text: Vec<String> = rows.into_iter().map(|(r, _)| r).collect();
    let csv = assemble_csv(cfg, "t,n1,n2,m1,m2,N1,N2,sample,measured,bound,ratio", &row_text, &[]);
    Ok(SweepOutput { csv, violation })
}

/// Correlation-envelope sweep. Each cell gets one seeded product state; each
/// sample draws a fresh operator pair. A trailing comment records the largest
/// ratio seen.
pub fn run_corr_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    let grid = cfg.grid()?;
    let potentials = cfg.potentials.build(&grid)?;
    let (n, m_obs) = symmetric_layout(cfg)?;
    let layout = LrLayout::symmetric(n, m_obs);
    let pcfg = propagator_config(cfg);
    let dims = kernel_dims(grid.sites(), &layout);
    let cells = build_cells(cfg, &grid, &potentials)?;
    let precision = cfg.output.precision;
    let seed = cfg.run.seed;

    // One initial product state per cell, shared by every witness and time.
    let states: Vec<MixtureState> = cells
        .iter()
        .enumerate()
        .map(|(ci, cell)| {
            let u = seeded_orbital(seed, ci, 0, grid.sites());
            let v = seeded_orbital(seed, ci, 1, grid.sites());
            MixtureState::product(&u, &v, cell.config, grid.clone())
        })
        .collect::<Result<_>>()?;

    let mut items = Vec::new();
    for &t in &cfg.run.times {
        for (ci, _) in cells.iter().enumerate() {
            for sample in 0..cfg.run.witness_count {
                items.push((t, ci, sample));
            }
        }
    }
    let rows = evaluate_rows(items, |&(t, ci, sample)| {
        let cell = &cells[ci];
        let kernels = witness_kernels(seed, sample, dims, cfg.run.hermitian);
        let opnorms = std::array::from_fn(|i| spectral_norm_dense(&kernels[i]));
        let (op1, op2) = layout_operators(&kernels, &layout, &cell.config, &grid)?;
        let params = bound_params(&cell.config, &potentials, n, m_obs, opnorms)?;
        let value = correlation(&cell.hamiltonian, &states[ci], &op1, &op2, t, &pcfg)?;
        let abs_corr = value.norm();
        let bound = correlation_bound(&params, t);
        let ratio = ratio_of(abs_corr, bound);
        let row = format!(
            "{},{},{},{},{},{},{},{},{}",
            fmt_float(t, precision),
            n,
            m_obs,
            cell.n1,
            cell.n2,
            sample,
            fmt_float(abs_corr, precision),
            fmt_float(bound, precision),
            fmt_float(ratio, precision),
        );
        Ok((row, ratio))
    })?;

    let violation = first_violation(rows.iter().map(|(r, s)| (r, *s)), RATIO_LIMIT);
    let max_ratio = rows.iter().map(|(_, s)| *s).fold(0.0f64, f64::max);
    let summary = format!("# max_ratio={}", fmt_float(max_ratio, precision));
    let row_text: Vec<String> = rows.into_iter().map(|(r, _)| r).collect();
    let csv =
        assemble_csv(cfg, "t,n,m,N1,N2,sample,abs_corr,bound,ratio", &row_text, &[summary]);
    Ok(SweepOutput { csv, violation })
}

/// Projector-decomposition identity check on a single `(N1, N2)` cell. Every
/// sample is an independent instance — fresh product orbitals and a fresh
/// operator pair — and a row fails when the reconstruction residual exceeds
/// [`RESIDUAL_LIMIT`].
pub fn run_decomposition_check(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    let grid = cfg.grid()?;
    let potentials = cfg.potentials.build(&grid)?;
    let (n, m_obs) = symmetric_layout(cfg)?;
    let layout = LrLayout::symmetric(n, m_obs);
    let pcfg = propagator_config(cfg);
    let dims = kernel_dims(grid.sites(), &layout);
    let [(n1, n2)] = cfg.system.n_pairs[..] else {
        return Err(Error::invalid(
            "the decomposition check runs on a single (N1, N2) cell; give one entry per list",
        ));
    };
    let config = SpeciesConfig::new(n1, n2)?;
    config.dimension(&grid)?;
    let h = assemble_full(&grid, &config, &potentials)?;
    let precision = cfg.output.precision;
    let seed = cfg.run.seed;

    let mut items = Vec::new();
    for &t in &cfg.run.times {
        for sample in 0..cfg.run.witness_count {
            items.push((t, sample));
        }
    }
    let rows = evaluate_rows(items, |&(t, sample)| {
        let u = seeded_orbital(seed, sample, 0, grid.sites());
        let v = seeded_orbital(seed, sample, 1, grid.sites());
        let kernels = witness_kernels(seed, sample, dims, cfg.run.hermitian);
        let (op1, op2) = layout_operators(&kernels, &layout, &config, &grid)?;
        let report = projector_decomposition(&h, &u, &v, &op1, &op2, t, &pcfg)?;
        let row = format!(
            "{},{},{},{},{},{},{},{},{},{}",
            fmt_float(t, precision),
            fmt_float(report.p.re, precision),
            fmt_float(report.p.im, precision),
            fmt_float(report.q.re, precision),
            fmt_float(report.q.im, precision),
            fmt_float(report.r.re, precision),
            fmt_float(report.r.im, precision),
            fmt_float(report.correlation.re, precision),
            fmt_float(report.correlation.im, precision),
            fmt_float(report.residual, precision),
        );
        Ok((row, report.residual))
    })?;

    let violation = first_violation(rows.iter().map(|(r, s)| (r, *s)), RESIDUAL_LIMIT);
    let row_text: Vec<String> = rows.into_iter().map(|(r, _)| r).collect();
    let csv = assemble_csv(
        cfg,
        "t,P_re,P_im,Q_re,Q_im,R_re,R_im,corr_re,corr_im,residual",
        &row_text,
        &[],
    );
    Ok(SweepOutput { csv, violation })
}

/// Many-body-versus-Hartree comparison. One shared pair of initial orbitals
/// seeds every cell (so gaps are comparable across particle numbers); each
/// `(t, cell)` row reports the trace-distance gap per species. Trailing
/// comments record whether the gaps shrink with system size; only nonzero
/// gaps at `t = 0` (an exact identity) fail the run.
pub fn run_hartree_compare(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    let grid = cfg.grid()?;
    let potentials = cfg.potentials.build(&grid)?;
    let pcfg = propagator_config(cfg);
    let cells = build_cells(cfg, &grid, &potentials)?;
    let precision = cfg.output.precision;
    let seed = cfg.run.seed;
    let u0 = seeded_orbital(seed, 0, 0, grid.sites());
    let v0 = seeded_orbital(seed, 0, 1, grid.sites());

    let flows: Vec<HartreeFlow> = cells
        .iter()
        .map(|cell| {
            let total = (cell.n1 + cell.n2) as f64;
            HartreeFlow::new(
                grid.clone(),
                potentials.clone(),
                cell.n1 as f64 / total,
                cell.n2 as f64 / total,
            )
        })
        .collect::<Result<_>>()?;
    let states: Vec<MixtureState> = cells
        .iter()
        .map(|cell| MixtureState::product(&u0, &v0, cell.config, grid.clone()))
        .collect::<Result<_>>()?;

    let mut items = Vec::new();
    for (ti, &t) in cfg.run.times.iter().enumerate() {
        for (ci, _) in cells.iter().enumerate() {
            items.push((ti, t, ci));
        }
    }
    let gap_rows: Vec<Result<(String, f64, f64)>> = items
        .par_iter()
        .map(|&(_, t, ci)| {
            let cell = &cells[ci];
            let psi_t = evolve(&cell.hamiltonian, &states[ci], t, &pcfg)?;
            let (u_t, v_t) = flows[ci].evolve(&u0, &v0, t, cfg.run.dt, cfg.run.stepper)?;
            let gap_a = factorization_gap(&psi_t.one_body_rdm(Species::A), &u_t)?;
            let gap_b = factorization_gap(&psi_t.one_body_rdm(Species::B), &v_t)?;
            let row = format!(
                "{},{},{},{},{}",
                fmt_float(t, precision),
                cell.n1,
                cell.n2,
                fmt_float(gap_a, precision),
                fmt_float(gap_b, precision),
            );
            Ok((row, gap_a, gap_b))
        })
        .collect();
    let gap_rows: Vec<(String, f64, f64)> = gap_rows.into_iter().collect::<Result<_>>()?;

    // Exit check: zero-time gaps are an exact identity.
    let zero_time = items
        .iter()
        .zip(&gap_rows)
        .filter(|((_, t, _), _)| *t == 0.0)
        .map(|(_, (row, a, b))| (row, a.max(*b)));
    let violation = first_violation(zero_time, ZERO_TIME_GAP_LIMIT);

    // Trend summary: per time, is the gap non-increasing across the cell list
    // (up to the head-room factor)?
    let mut trailing = Vec::new();
    if cells.len() > 1 {
        for (ti, &t) in cfg.run.times.iter().enumerate() {
            let row_at = |ci: usize| &gap_rows[ti * cells.len() + ci];
            // The additive floor keeps roundoff-level gaps from faking a trend.
            let non_increasing = |pick: &dyn Fn(&(String, f64, f64)) -> f64| {
                (1..cells.len()).all(|ci| {
                    pick(row_at(ci)) <= TREND_FACTOR * pick(row_at(ci - 1)) + ZERO_TIME_GAP_LIMIT
                })
            };
            trailing.push(format!(
                "# trend t={} gap_A_non_increasing={} gap_B_non_increasing={}",
                fmt_float(t, precision),
                non_increasing(&|r| r.1),
                non_increasing(&|r| r.2),
            ));
        }
    }

    let row_text: Vec<String> = gap_rows.into_iter().map(|(r, _, _)| r).collect();
    let csv = assemble_csv(cfg, "t,N1,N2,gap_A,gap_B", &row_text, &trailing);
    Ok(SweepOutput { csv, violation })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_str(text).unwrap()
    }

    fn data_lines(csv: &str) -> Vec<&str> {
        csv.lines().filter(|l| !l.starts_with('#') && !l.is_empty()).skip(1).collect()
    }

    #[test]
    fn lr_sweep_zero_time_rows_are_exact_zeros() {
        let cfg = parse(
            "[system]\nM = 2\nN1 = 2\nN2 = 2\n[potentials]\npreset = delta_v12\n\
             [run]\ntimes = 0\nwitness_count = 3\n",
        );
        let out = run_lr_sweep(&cfg).unwrap();
        assert!(out.violation.is_none());
        let rows = data_lines(&out.csv);
        assert_eq!(rows.len(), 3);
        for row in rows {
            let cols: Vec<&str> = row.split(',').collect();
            assert_eq!(cols.len(), 11);
            assert!(cols[7].parse::<usize>().unwrap() < 3);
            let measured: f64 = cols[8].parse().unwrap();
            let bound: f64 = cols[9].parse().unwrap();
            let ratio: f64 = cols[10].parse().unwrap();
            assert!(measured <= 1e-12);
            assert_eq!(bound, 0.0);
            assert_eq!(ratio, 0.0);
        }
    }

    #[test]
    fn lr_sweep_header_and_stamp_lead_the_file() {
        // A single particle per species only fits the general one-sided layout.
        let cfg = parse(
            "[system]\nM = 2\nN1 = 1\nN2 = 1\n[potentials]\npreset = delta_v12\n\
             [layout]\nn1 = 1\nn2 = 0\nm1 = 0\nm2 = 1\n\
             [run]\ntimes = 0.1\nwitness_count = 2\n",
        );
        let out = run_lr_sweep(&cfg).unwrap();
        let mut lines = out.csv.lines();
        let stamp = lines.next().unwrap();
        assert!(stamp.starts_with("# config_sha256="));
        assert!(stamp.contains(&cfg.sha256_hex()));
        assert!(stamp.contains("version="));
        assert_eq!(lines.next().unwrap(), "t,n1,n2,m1,m2,N1,N2,sample,measured,bound,ratio");
    }

    #[test]
    fn lr_sweep_interacting_cells_respect_the_envelope() {
        let cfg = parse(
            "[system]\nM = 2\nN1 = 2\nN2 = 2\n[potentials]\npreset = delta_v12\n\
             [run]\ntimes = 0.25, 0.5\nwitness_count = 2\n",
        );
        let out = run_lr_sweep(&cfg).unwrap();
        assert!(out.violation.is_none(), "{:?}", out.violation);
        for row in data_lines(&out.csv) {
            let cols: Vec<&str> = row.split(',').collect();
            let measured: f64 = cols[8].parse().unwrap();
            let bound: f64 = cols[9].parse().unwrap();
            assert!(measured > 1e-6, "interacting dynamics must move the operator");
            assert!(measured <= bound * RATIO_LIMIT);
        }
    }

    #[test]
    fn corr_sweep_free_mixture_shows_no_correlations() {
        let cfg = parse(
            "[system]\nM = 2\nN1 = 2, 3\nN2 = 2, 3\n[potentials]\npreset = zero\n\
             [run]\ntimes = 0, 0.5\nwitness_count = 2\n",
        );
        let out = run_corr_sweep(&cfg).unwrap();
        assert!(out.violation.is_none());
        let rows = data_lines(&out.csv);
        assert_eq!(rows.len(), 2 * 2 * 2);
        for row in rows {
            let cols: Vec<&str> = row.split(',').collect();
            assert_eq!(cols.len(), 9);
            let abs_corr: f64 = cols[6].parse().unwrap();
            let ratio: f64 = cols[8].parse().unwrap();
            assert!(abs_corr <= 1e-12, "free evolution keeps products uncorrelated");
            assert_eq!(ratio, 0.0);
        }
        assert!(out.csv.trim_end().ends_with(&format!("# max_ratio={}", fmt_float(0.0, 17))));
    }

    #[test]
    fn corr_sweep_rejects_the_general_layout() {
        let cfg = parse(
            "[system]\nM = 2\nN1 = 2\nN2 = 2\n[layout]\nn1 = 1\nn2 = 0\nm1 = 0\nm2 = 1\n\
             [run]\ntimes = 0.5\n",
        );
        assert!(run_corr_sweep(&cfg).is_err());
    }

    #[test]
    fn decomposition_check_reconstructs_interacting_correlations() {
        let cfg = parse(
            "[system]\nM = 2\nN1 = 2\nN2 = 2\n[potentials]\npreset = delta_v12\n\
             [run]\ntimes = 0, 0.4\nwitness_count = 3\n",
        );
        let out = run_decomposition_check(&cfg).unwrap();
        assert!(out.violation.is_none(), "{:?}", out.violation);
        let rows = data_lines(&out.csv);
        assert_eq!(rows.len(), 6);
        let mut saw_structure = false;
        for row in &rows {
            let cols: Vec<&str> = row.split(',').collect();
            assert_eq!(cols.len(), 10);
            let residual: f64 = cols[9].parse().unwrap();
            assert!(residual <= RESIDUAL_LIMIT);
            if cols[1].parse::<f64>().unwrap().abs() > 1e-6 {
                saw_structure = true;
            }
        }
        assert!(saw_structure, "interacting runs must produce nonzero pieces");
    }

    #[test]
    fn decomposition_check_needs_one_cell() {
        let cfg = parse(
            "[system]\nM = 2\nN1 = 1, 2\nN2 = 1, 2\n[run]\ntimes = 0.5\n",
        );
        assert!(run_decomposition_check(&cfg).is_err());
    }

    #[test]
    fn hartree_compare_free_mixture_has_zero_gaps() {
        let cfg = parse(
            "[system]\nM = 4\nN1 = 1, 2\nN2 = 1, 2\n[potentials]\npreset = zero\n\
             [run]\ntimes = 0, 0.3\n",
        );
        let out = run_hartree_compare(&cfg).unwrap();
        assert!(out.violation.is_none());
        let rows = data_lines(&out.csv);
        assert_eq!(rows.len(), 4);
        for row in rows {
            let cols: Vec<&str> = row.split(',').collect();
            assert_eq!(cols.len(), 5);
            let gap_a: f64 = cols[3].parse().unwrap();
            let gap_b: f64 = cols[4].parse().unwrap();
            assert!(gap_a <= 1e-8, "free dynamics factorize exactly, got {gap_a}");
            assert!(gap_b <= 1e-8);
        }
        assert!(out.csv.contains("gap_A_non_increasing=true"));
        assert!(out.csv.contains("gap_B_non_increasing=true"));
    }

    #[test]
    fn hartree_compare_interacting_single_pair_stays_finite() {
        let cfg = parse(
            "[system]\nM = 4\nN1 = 1\nN2 = 1\n[potentials]\npreset = delta_v12\n\
             [run]\ntimes = 0, 0.5\ndt = 1e-2\n",
        );
        let out = run_hartree_compare(&cfg).unwrap();
        assert!(out.violation.is_none());
        let rows = data_lines(&out.csv);
        let zero_cols: Vec<&str> = rows[0].split(',').collect();
        assert!(zero_cols[3].parse::<f64>().unwrap() <= ZERO_TIME_GAP_LIMIT);
        let late_cols: Vec<&str> = rows[1].split(',').collect();
        let gap: f64 = late_cols[3].parse().unwrap();
        assert!(gap > 1e-6, "finite N with interactions must leave a gap");
        assert!(gap <= 1.0, "trace distance is bounded by one");
    }

    #[test]
    fn reruns_are_byte_identical() {
        let text = "[system]\nM = 2\nN1 = 2\nN2 = 2\n[potentials]\npreset = delta_v12\n\
                    [run]\ntimes = 0.3\nwitness_count = 2\n";
        let a = run_lr_sweep(&parse(text)).unwrap();
        let b = run_lr_sweep(&parse(text)).unwrap();
        assert_eq!(a.csv, b.csv);
        let c = run_corr_sweep(&parse(text)).unwrap();
        let d = run_corr_sweep(&parse(text)).unwrap();
        assert_eq!(c.csv, d.csv);
    }

    #[test]
    fn violation_scan_flags_the_first_bad_row() {
        let rows = [
            ("ok".to_string(), 0.5),
            ("bad".to_string(), 2.0),
            ("worse".to_string(), f64::NAN),
        ];
        let hit = first_violation(rows.iter().map(|(r, s)| (r, *s)), RATIO_LIMIT);
        assert_eq!(hit.as_deref(), Some("bad"));
        let none = first_violation(rows[..1].iter().map(|(r, s)| (r, *s)), RATIO_LIMIT);
        assert!(none.is_none());
        let nan_hit = first_violation(rows[2..].iter().map(|(r, s)| (r, *s)), RATIO_LIMIT);
        assert_eq!(nan_hit.as_deref(), Some("worse"));
    }

    #[test]
    fn float_formatting_matches_the_documented_shape() {
        assert_eq!(fmt_float(1.0, 17), "1.0000000000000000e0");
        assert_eq!(fmt_float(-0.125, 17), "-1.2500000000000000e-1");
        assert_eq!(fmt_float(1.0, 3), "1.00e0");
    }
}
