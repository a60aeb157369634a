//! Subcommand implementations.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use primefock::dual::{conjugated_hamiltonian, operator_matrix, FlowSpec};
use primefock::fock::{FockSpace, StateVector};
use primefock::hamiltonian::{
    build_hamiltonian, single_particle_block, HamiltonianParams,
};
use primefock::io as fio;
use primefock::spectral::{
    eigensolve, eigenvalues, ground_state_observable, tridiagonal_eigen, EigenCount,
};
use primefock::thermo::{
    count_complement_regions, default_threshold, detect_singular_lines, laplacian_filter,
    log_z_grid, phase_diagram as thermo_phase_diagram, trace_identities, SectorSolver,
};

use crate::config::{linspace, pick, FileConfig};
use crate::{
    BuildArgs, CliError, FlowArgs, GapSweepArgs, GridFlags, HamiltonianFlags, OutputFlags,
    PartitionArgs, PhaseDiagramArgs, SpectrumArgs, VerifyArgs,
};

const DEFAULT_U: f64 = 10.0;
const DEFAULT_MU: f64 = 0.0;
const DEFAULT_T: f64 = 1.0;
const DEFAULT_N: u64 = 150;

fn resolve_params(
    flags: &HamiltonianFlags,
    cfg: &FileConfig,
    defaults: (f64, f64, f64, u64),
) -> Result<HamiltonianParams, CliError> {
    let h = &cfg.hamiltonian;
    Ok(HamiltonianParams::new(
        pick(flags.u, h.u, defaults.0),
        pick(flags.mu, h.mu, defaults.1),
        pick(flags.t, h.t, defaults.2),
        pick(flags.n, h.n, defaults.3),
    )?)
}

fn out_dir(output: &OutputFlags, cfg: &FileConfig) -> Result<PathBuf, CliError> {
    let dir = output
        .out
        .clone()
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn writer(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path).map_err(|e| {
        CliError::Io(format!("cannot create {}: {e}", path.display()))
    })?))
}

fn grid_axes(grid: &GridFlags, cfg: &FileConfig) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let g = &cfg.grid;
    let mu_axis = linspace(
        pick(grid.mu_min, g.mu_min, -3.0),
        pick(grid.mu_max, g.mu_max, 7.0),
        pick(grid.mu_points, g.mu_points, 101),
    )?;
    let t_axis = linspace(
        pick(grid.t_min, g.t_min, 0.1),
        pick(grid.t_max, g.t_max, 3.0),
        pick(grid.t_points, g.t_points, 101),
    )?;
    Ok((mu_axis, t_axis))
}

fn grand_shift(grid: &GridFlags, cfg: &FileConfig) -> bool {
    if grid.no_grand_shift {
        false
    } else {
        cfg.thermo.grand_shift.unwrap_or(true)
    }
}

fn write_grid_files(dir: &Path, base: &str, grid: &primefock::thermo::PhaseGrid) -> Result<(), CliError> {
    fio::write_grid_csv(writer(&dir.join(format!("{base}.csv")))?, grid)?;
    fio::write_grid_sidecar(writer(&dir.join(format!("{base}.json")))?, grid)?;
    fio::write_grid_gnuplot(writer(&dir.join(format!("{base}.gnuplot")))?, grid)?;
    Ok(())
}

#[derive(Serialize)]
struct BuildMeta {
    u: f64,
    mu: f64,
    t: f64,
    n: u64,
    nnz_stored: usize,
    nnz_symmetric: usize,
    build_seconds: f64,
}

pub fn build(args: &BuildArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let params = resolve_params(&args.hamiltonian, cfg, (DEFAULT_U, DEFAULT_MU, DEFAULT_T, DEFAULT_N))?;
    let dir = out_dir(&args.output, cfg)?;
    let base = args.output.name.clone().unwrap_or_else(|| "hamiltonian".into());

    let start = Instant::now();
    let space = FockSpace::new(params.n_max)?;
    let h = build_hamiltonian(&space, &params)?;
    let build_seconds = start.elapsed().as_secs_f64();

    let mtx = dir.join(format!("{base}.mtx"));
    fio::write_matrix_market(writer(&mtx)?, &h)?;
    let meta = BuildMeta {
        u: params.u,
        mu: params.mu,
        t: params.t,
        n: params.n_max,
        nnz_stored: h.nnz_stored(),
        nnz_symmetric: h.nnz_symmetric(),
        build_seconds,
    };
    serde_json::to_writer_pretty(writer(&dir.join(format!("{base}.json")))?, &meta)
        .map_err(|e| CliError::Io(e.to_string()))?;
    println!(
        "built {}x{} matrix, {} stored entries ({} structural), {:.3}s -> {}",
        params.n_max,
        params.n_max,
        h.nnz_stored(),
        h.nnz_symmetric(),
        build_seconds,
        mtx.display()
    );
    Ok(())
}

pub fn spectrum(args: &SpectrumArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let params = resolve_params(&args.hamiltonian, cfg, (DEFAULT_U, DEFAULT_MU, DEFAULT_T, DEFAULT_N))?;
    let dir = out_dir(&args.output, cfg)?;
    let base = args.output.name.clone().unwrap_or_else(|| "spectrum".into());
    let space = FockSpace::new(params.n_max)?;

    let rows = if args.single_particle {
        let block = single_particle_block(&space, &params);
        let (vals, vecs) = tridiagonal_eigen(&block.diag, &block.off, true)?;
        let vecs = vecs.expect("vectors requested");
        let s = block.dim();
        (0..s)
            .map(|k| {
                let mut res = 0.0f64;
                for i in 0..s {
                    let mut acc = block.diag[i] * vecs[i * s + k];
                    if i > 0 {
                        acc += block.off[i - 1] * vecs[(i - 1) * s + k];
                    }
                    if i + 1 < s {
                        acc += block.off[i] * vecs[(i + 1) * s + k];
                    }
                    res += (acc - vals[k] * vecs[i * s + k]).powi(2);
                }
                fio::SpectrumRow {
                    index: k,
                    eigenvalue: vals[k],
                    expected_n: 1.0,
                    residual: res.sqrt(),
                }
            })
            .collect::<Vec<_>>()
    } else {
        let h = build_hamiltonian(&space, &params)?;
        let count = match args.count {
            Some(0) => return Err(CliError::Usage("--count must be at least 1".into())),
            Some(k) => EigenCount::Smallest(k),
            None => EigenCount::All,
        };
        let s = eigensolve(&h, count)?;
        fio::spectrum_rows(&space, &s)?
    };

    let path = dir.join(format!("{base}.csv"));
    fio::write_spectrum_csv(writer(&path)?, &rows)?;
    println!("wrote {} eigenpairs -> {}", rows.len(), path.display());
    Ok(())
}

#[derive(Serialize)]
struct GapSweepMeta {
    mu: f64,
    t: f64,
    n: u64,
    u_min: f64,
    u_max: f64,
    points: usize,
}

pub fn gap_sweep(args: &GapSweepArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let params = resolve_params(&args.hamiltonian, cfg, (0.0, 0.0, -0.1, 1024))?;
    if params.n_max < 2 {
        return Err(CliError::Usage("gap sweep needs N >= 2".into()));
    }
    let dir = out_dir(&args.output, cfg)?;
    let base = args.output.name.clone().unwrap_or_else(|| "gap_sweep".into());
    let u_min = pick(args.u_min, cfg.sweep.u_min, 0.0);
    let u_max = pick(args.u_max, cfg.sweep.u_max, 10.0);
    let points = pick(args.points, cfg.sweep.points, 51);
    let axis = linspace(u_min, u_max, points)?;

    let space = FockSpace::new(params.n_max)?;
    let solver = SectorSolver::new(&space)?;
    let rows: Result<Vec<(f64, f64, f64)>, primefock::Error> = axis
        .par_iter()
        .map(|&u| {
            let ev = solver.hamiltonian_eigenvalues(u, params.mu, params.t)?;
            Ok((u, ev[0], ev[1]))
        })
        .collect();
    let rows = rows?;

    let path = dir.join(format!("{base}.csv"));
    let mut w = writer(&path)?;
    w.write_all(b"u,e0,e1,gap\n")?;
    for (u, e0, e1) in &rows {
        writeln!(w, "{u},{e0},{e1},{}", e1 - e0)?;
    }
    drop(w);
    let meta = GapSweepMeta {
        mu: params.mu,
        t: params.t,
        n: params.n_max,
        u_min,
        u_max,
        points,
    };
    serde_json::to_writer_pretty(writer(&dir.join(format!("{base}.json")))?, &meta)
        .map_err(|e| CliError::Io(e.to_string()))?;
    println!("swept {} points over U in [{u_min}, {u_max}] -> {}", points, path.display());
    Ok(())
}

pub fn phase_diagram(args: &PhaseDiagramArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let params = resolve_params(&args.hamiltonian, cfg, (DEFAULT_U, DEFAULT_MU, 0.0, DEFAULT_N))?;
    let dir = out_dir(&args.output, cfg)?;
    let base = args.output.name.clone().unwrap_or_else(|| "phase_diagram".into());
    let (mu_axis, t_axis) = grid_axes(&args.grid, cfg)?;
    let level = pick(args.level, cfg.grid.level, 0);
    let gs = grand_shift(&args.grid, cfg);

    let space = FockSpace::new(params.n_max)?;
    let start = Instant::now();
    let grid = thermo_phase_diagram(&space, params.u, &mu_axis, &t_axis, level, gs)?;
    write_grid_files(&dir, &base, &grid)?;

    let mut levels: Vec<f64> = grid.values().to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    println!(
        "phase diagram {}x{} at U={} level={} in {:.2}s: {} distinct values, {} degenerate cells -> {}/{base}.csv",
        grid.rows(),
        grid.cols(),
        params.u,
        level,
        start.elapsed().as_secs_f64(),
        levels.len(),
        grid.flagged().len(),
        dir.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct SingularityReport {
    threshold: f64,
    component_count: usize,
    component_sizes: Vec<usize>,
    complement_regions: usize,
    components: Vec<Vec<(usize, usize)>>,
}

pub fn partition(args: &PartitionArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let params = resolve_params(&args.hamiltonian, cfg, (DEFAULT_U, DEFAULT_MU, 0.0, DEFAULT_N))?;
    let beta = pick(args.beta, cfg.thermo.beta, 10.0);
    let dir = out_dir(&args.output, cfg)?;
    let base = args.output.name.clone().unwrap_or_else(|| "log_z".into());
    let (mu_axis, t_axis) = grid_axes(&args.grid, cfg)?;
    let gs = grand_shift(&args.grid, cfg);

    let space = FockSpace::new(params.n_max)?;
    let start = Instant::now();
    let grid = log_z_grid(&space, params.u, beta, &mu_axis, &t_axis, gs)?;
    write_grid_files(&dir, &base, &grid)?;

    let mut filtered = laplacian_filter(&grid)?;
    let threshold = pick(args.threshold, cfg.grid.threshold, default_threshold(&filtered));
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(CliError::Usage("threshold must be positive".into()));
    }
    filtered.meta_mut().threshold = Some(threshold);
    write_grid_files(&dir, &format!("{base}_laplacian"), &filtered)?;

    let components = detect_singular_lines(&filtered, threshold)?;
    let ridge: Vec<(usize, usize)> = components.iter().flatten().copied().collect();
    let regions = count_complement_regions(filtered.rows(), filtered.cols(), &ridge);
    let report = SingularityReport {
        threshold,
        component_count: components.len(),
        component_sizes: components.iter().map(|c| c.len()).collect(),
        complement_regions: regions,
        components,
    };
    serde_json::to_writer_pretty(
        writer(&dir.join(format!("{base}_singularities.json")))?,
        &report,
    )
    .map_err(|e| CliError::Io(e.to_string()))?;
    println!(
        "log Z {}x{} at U={} beta={beta} in {:.2}s: {} ridge components, {} complement regions -> {}/{base}*.csv",
        grid.rows(),
        grid.cols(),
        params.u,
        start.elapsed().as_secs_f64(),
        report.component_count,
        regions,
        dir.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct FlowReport {
    tau: f64,
    pattern_identical: bool,
    diagonal_max_drift: f64,
    offdiagonal_magnitude_max_drift: f64,
    spectrum_max_diff: f64,
    ground_expected_n_base: f64,
    ground_expected_n_flowed: f64,
    ground_degenerate: bool,
}

pub fn flow(args: &FlowArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let params = resolve_params(&args.hamiltonian, cfg, (DEFAULT_U, 3.0, 0.7, 60))?;
    let dir = out_dir(&args.output, cfg)?;
    let base = args.output.name.clone().unwrap_or_else(|| "flow".into());
    let tau = pick(args.tau, cfg.flow.tau, 1.0);

    let space = FockSpace::new(params.n_max)?;
    let spec = match args.theta.or(cfg.flow.theta) {
        Some(theta) => FlowSpec::constant(&space, theta, tau)?,
        None => FlowSpec::seeded(&space, pick(args.seed, cfg.flow.seed, 1), tau)?,
    };

    let h = build_hamiltonian(&space, &params)?;
    let ht = conjugated_hamiltonian(&space, &spec, &params)?;

    let pattern_identical = h.entries().len() == ht.entries().len()
        && h
            .entries()
            .iter()
            .zip(ht.entries())
            .all(|(a, b)| (a.0, a.1) == (b.0, b.1));
    let mut diagonal_max_drift = 0.0f64;
    let mut offdiag_drift = 0.0f64;
    for (&(r, c, v), &(_, _, z)) in h.entries().iter().zip(ht.entries()) {
        if r == c {
            diagonal_max_drift = diagonal_max_drift.max((z - v).norm());
        } else {
            offdiag_drift = offdiag_drift.max((z.norm() - v.abs()).abs());
        }
    }
    let base_evs = eigenvalues(&h)?;
    let tau_evs = ht.eigenvalues()?;
    let spectrum_max_diff = base_evs
        .iter()
        .zip(&tau_evs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let ground = ground_state_observable(&space, &params)?;
    let (_, flowed_state) = ht.ground_state()?;
    let flowed_n =
        space.expected_particle_number(&StateVector::from_amplitudes(flowed_state))?;

    let report = FlowReport {
        tau,
        pattern_identical,
        diagonal_max_drift,
        offdiagonal_magnitude_max_drift: offdiag_drift,
        spectrum_max_diff,
        ground_expected_n_base: ground.expected_n,
        ground_expected_n_flowed: flowed_n,
        ground_degenerate: ground.degenerate,
    };
    serde_json::to_writer_pretty(writer(&dir.join(format!("{base}_report.json")))?, &report)
        .map_err(|e| CliError::Io(e.to_string()))?;
    if args.export_matrix {
        fio::write_matrix_market_hermitian(writer(&dir.join(format!("{base}.mtx")))?, &ht)?;
    }
    println!(
        "flow tau={tau}: pattern {}, max spectrum drift {:.3e}, ground <N> {} -> {}",
        if pattern_identical { "fixed" } else { "CHANGED" },
        spectrum_max_diff,
        flowed_n,
        dir.join(format!("{base}_report.json")).display()
    );
    Ok(())
}

struct Check {
    name: &'static str,
    deviation: f64,
    tolerance: f64,
}

pub fn verify(args: &VerifyArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let n = pick(args.n, cfg.hamiltonian.n, 200);
    let depth = pick(args.depth, None, 32);
    if depth < 4 {
        return Err(CliError::Usage("--depth must be at least 4".into()));
    }
    let perturbation = if args.inject_perturbation { 1e-3 } else { 0.0 };

    let mut checks: Vec<Check> = Vec::new();
    if n < 2 {
        println!("warning: N = {n} leaves the Fock-space checks vacuous");
    } else {
        let space = FockSpace::new(n)?;
        checks.push(Check {
            name: "bccr-interior",
            deviation: bccr_deviation(&space)? + perturbation,
            tolerance: 1e-14,
        });
        checks.push(Check {
            name: "block-structure",
            deviation: block_structure_deviation(&space)? + perturbation,
            tolerance: 1e-10,
        });
        checks.push(Check {
            name: "flow-invariance",
            deviation: flow_invariance_deviation(&space)? + perturbation,
            tolerance: 1e-9,
        });
        checks.push(Check {
            name: "trace-identities",
            deviation: trace_deviation(&space)? + perturbation,
            tolerance: 1e-8,
        });
    }
    checks.push(Check {
        name: "dual-algebra",
        deviation: dual_algebra_deviation(depth) + perturbation,
        tolerance: 1e-12,
    });

    let mut all_pass = true;
    for c in &checks {
        let pass = c.deviation <= c.tolerance;
        all_pass &= pass;
        println!(
            "verify  {:<18} max deviation {:>10.3e}  tolerance {:>8.0e}  {}",
            c.name,
            c.deviation,
            c.tolerance,
            if pass { "PASS" } else { "FAIL" }
        );
    }
    if all_pass {
        Ok(())
    } else {
        Err(CliError::Numerical("verification failed".into()))
    }
}

fn bccr_deviation(space: &FockSpace) -> Result<f64, CliError> {
    let n_max = space.n_max();
    let primes: Vec<u64> = space
        .primes()
        .primes()
        .iter()
        .copied()
        .take_while(|&p| p <= 19)
        .collect();
    let mut max_dev = 0.0f64;
    for &p in &primes {
        for &q in &primes {
            let sp = space.site(p)?;
            let sq = space.site(q)?;
            for n in 1..=n_max {
                if n.saturating_mul(p).saturating_mul(q) > n_max {
                    continue;
                }
                let v = StateVector::basis(n_max, n)?;
                let w1 = space.annihilate(sp, &space.create(sq, &v)?)?;
                let w2 = space.create(sq, &space.annihilate(sp, &v)?)?;
                for m in 1..=n_max {
                    let diff = w1.get(m) - w2.get(m);
                    let expect = if p == q && m == n { 1.0 } else { 0.0 };
                    max_dev = max_dev.max((diff.re - expect).abs().max(diff.im.abs()));
                }
            }
        }
    }
    Ok(max_dev)
}

fn block_structure_deviation(space: &FockSpace) -> Result<f64, CliError> {
    let solver = SectorSolver::new(space)?;
    let mut max_dev = 0.0f64;
    for (u, mu, t) in [(10.0, 0.5, 1.0), (3.0, -1.0, 0.4), (7.0, 2.0, -0.8)] {
        let params = HamiltonianParams::new(u, mu, t, space.n_max())?;
        let h = build_hamiltonian(space, &params)?;
        for &(r, c, _) in h.entries() {
            if space.omega(u64::from(r) + 1) != space.omega(u64::from(c) + 1) {
                max_dev = max_dev.max(1.0);
            }
        }
        let dense = eigenvalues(&h)?;
        let blocks = solver.hamiltonian_eigenvalues(u, mu, t)?;
        for (a, b) in dense.iter().zip(&blocks) {
            max_dev = max_dev.max((a - b).abs());
        }
    }
    Ok(max_dev)
}

fn flow_invariance_deviation(space: &FockSpace) -> Result<f64, CliError> {
    let params = HamiltonianParams::new(10.0, 3.0, 0.7, space.n_max())?;
    let h = build_hamiltonian(space, &params)?;
    let base = eigenvalues(&h)?;
    let ground = ground_state_observable(space, &params)?;
    let mut max_dev = 0.0f64;
    for seed in [1u64, 2] {
        let spec = FlowSpec::seeded(space, seed, 1.0)?;
        let ht = conjugated_hamiltonian(space, &spec, &params)?;
        for (&(r1, c1, v), &(r2, c2, z)) in h.entries().iter().zip(ht.entries()) {
            if (r1, c1) != (r2, c2) {
                max_dev = max_dev.max(1.0);
            }
            if r1 != c1 {
                max_dev = max_dev.max((z.norm() - v.abs()).abs());
            }
        }
        let tau_evs = ht.eigenvalues()?;
        for (a, b) in base.iter().zip(&tau_evs) {
            max_dev = max_dev.max((a - b).abs());
        }
        if !ground.degenerate {
            let (_, state) = ht.ground_state()?;
            let n_tau =
                space.expected_particle_number(&StateVector::from_amplitudes(state))?;
            max_dev = max_dev.max((n_tau - ground.expected_n).abs());
        }
    }
    Ok(max_dev)
}

fn trace_deviation(space: &FockSpace) -> Result<f64, CliError> {
    let mut max_dev = 0.0f64;
    for (u, mu, t) in [(10.0, 0.5, 0.0), (10.0, 0.5, 1.0), (4.0, -2.0, -0.3)] {
        let params = HamiltonianParams::new(u, mu, t, space.n_max())?;
        let h = build_hamiltonian(space, &params)?;
        let closed = trace_identities(space, &params);
        let direct = h.trace();
        max_dev =
            max_dev.max((closed.trace_h - direct).abs() / direct.abs().max(1.0));
    }
    Ok(max_dev)
}

fn dual_algebra_deviation(depth: usize) -> f64 {
    use primefock::dual::{
        holstein_primakoff_inverse, k0, k1, k2, k_minus, k_plus, ladder_annihilate,
        ladder_create, reconstruct_ladder, SiteSequence,
    };
    let m = depth;
    let interior = m - 2;
    let mut max_dev = 0.0f64;

    let commutator = |a: &dyn Fn(&SiteSequence) -> SiteSequence,
                      b: &dyn Fn(&SiteSequence) -> SiteSequence| {
        operator_matrix(m, |s| {
            let ab = a(&b(s));
            let ba = b(&a(s));
            SiteSequence::from_coefficients(
                ab.coefficients()
                    .iter()
                    .zip(ba.coefficients())
                    .map(|(x, y)| x - y)
                    .collect(),
            )
        })
    };
    let i_unit = num_complex::Complex64::new(0.0, 1.0);
    let pairs: [(Vec<num_complex::Complex64>, Vec<num_complex::Complex64>, num_complex::Complex64); 3] = [
        (commutator(&k0, &k1), operator_matrix(m, k2), i_unit),
        (commutator(&k0, &k2), operator_matrix(m, k1), -i_unit),
        (commutator(&k1, &k2), operator_matrix(m, k0), -i_unit),
    ];
    for (lhs, rhs, factor) in pairs {
        for i in 0..=interior {
            for j in 0..=interior {
                max_dev = max_dev.max((lhs[i * m + j] - rhs[i * m + j] * factor).norm());
            }
        }
    }
    for j in 0..m {
        let e = SiteSequence::basis(m, j).unwrap();
        let (a, adag) = reconstruct_ladder(&e);
        let (want_a, want_adag) = (ladder_annihilate(&e), ladder_create(&e));
        let (hp_minus, hp_plus) = holstein_primakoff_inverse(&e);
        let (want_minus, want_plus) = (k_minus(&e), k_plus(&e));
        for i in 0..m {
            max_dev = max_dev.max((a.get(i) - want_a.get(i)).norm());
            max_dev = max_dev.max((adag.get(i) - want_adag.get(i)).norm());
            if i < m - 1 {
                max_dev = max_dev.max((hp_minus.get(i) - want_minus.get(i)).norm());
                max_dev = max_dev.max((hp_plus.get(i) - want_plus.get(i)).norm());
            }
        }
    }
    max_dev
}
