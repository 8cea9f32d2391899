//! The six subcommands. Each writes its CSV artifacts, the configuration echo
//! and `summary.txt` into the output directory and returns the summary.

use std::path::Path;
use std::sync::Arc;

use anyhow::{Context, Result};
use rayon::prelude::*;
use sqg_core::commutator::CommutatorTag;
use sqg_core::convergence::{cauchy_diagnostic, decreasing, dt_psi_pairing, hamiltonian_constancy, ConvergenceStudy};
use sqg_core::eigenbasis::EigenBasis;
use sqg_core::galerkin::{random_spectrum, CouplingTensor, Galerkin, TrajectoryRecord};
use sqg_core::heat::{BoundRow, KernelBoundReport};
use sqg_core::spectral::SpectralField;

use crate::artifacts::{self, BoundRecord, StudyRow};
use crate::checks;
use crate::config::{float, InitialKind, RunConfig};
use crate::summary::{Check, Summary};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Gamma,
    Commutators,
    HeatOracle,
    Converge,
    Invariants,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Self::Simulate,
        Self::Gamma,
        Self::Commutators,
        Self::HeatOracle,
        Self::Converge,
        Self::Invariants,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::Gamma => "gamma",
            Self::Commutators => "commutators",
            Self::HeatOracle => "heat-oracle",
            Self::Converge => "converge",
            Self::Invariants => "invariants",
        }
    }
}

/// Runs `command` into `out`, creating the directory.
pub fn run(command: Command, config: &RunConfig, out: &Path) -> Result<Summary> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    config.write_echo(out)?;
    let summary = match command {
        Command::Simulate => simulate(config, out),
        Command::Gamma => gamma(config, out),
        Command::Commutators => commutators(config, out),
        Command::HeatOracle => heat_oracle(config, out),
        Command::Converge => converge(config, out),
        Command::Invariants => invariants(config, out),
    }
    .with_context(|| format!("sqg {}", command.name()))?;
    summary.write(out)?;
    Ok(summary)
}

fn initial(config: &RunConfig, basis: &Arc<EigenBasis>) -> Result<SpectralField> {
    Ok(config.initial_data().build(basis, config.m)?)
}

fn simulate(config: &RunConfig, out: &Path) -> Result<Summary> {
    let mut s = Summary::new("simulate");
    let basis = Arc::new(EigenBasis::new(config.m));
    let theta0 = initial(config, &basis)?;
    let solver = Galerkin::new(CouplingTensor::closed_form(basis.clone(), config.m), config.integrator).with_solver(config.solver);
    let record = solver.run(&theta0, config.horizon, config.dt, config.stride, true)?;
    let finals = SpectralField::new(basis.clone(), record.final_state().to_vec())?;

    artifacts::write_trajectory(&out.join("trajectory.csv"), &record, true)?;
    artifacts::write_spectral(&out.join("initial_state.csv"), &theta0)?;
    artifacts::write_spectral(&out.join("final_state.csv"), &finals)?;
    let plot: Vec<f64> = (0..=64).map(|i| std::f64::consts::PI * i as f64 / 64.0).collect();
    artifacts::write_grid(&out.join("final_field.csv"), &finals.synthesize(&plot, &plot))?;

    let finite = record.energy.iter().chain(&record.hamiltonian).all(|v| v.is_finite());
    s.push(Check::assert(
        "simulate.finite",
        finite,
        format!("{} samples to T = {}, all invariants finite: {finite}", record.len(), config.horizon),
    ));
    let deviation = record
        .snapshots
        .iter()
        .map(|c| c.iter().zip(theta0.coeffs()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    let (de, dh) = (record.energy_drift(), record.hamiltonian_drift());
    if config.initial == InitialKind::Mode {
        s.push(Check::assert(
            "simulate.steady_state",
            deviation == 0.0 && de == 0.0 && dh == 0.0,
            format!(
                "single mode ({}, {}): max |θ(t) - θ₀| = {deviation:e}, drift E {de:e}, H {dh:e}",
                config.mode.0, config.mode.1
            ),
        ));
    }
    s.push(Check::info(
        "simulate.drift",
        format!("{}: relative drift E {de:.3e}, H {dh:.3e}; max |θ(t) - θ₀| = {deviation:.3e}", config.integrator.name()),
    ));
    Ok(s)
}

fn gamma(config: &RunConfig, out: &Path) -> Result<Summary> {
    let mut s = Summary::new("gamma");
    let big = config.oversampling;
    let basis = Arc::new(EigenBasis::new(big));
    artifacts::write_basis(&out.join("basis.csv"), &basis, big)?;

    s.push(checks::eigen_exact(&basis));
    s.push(checks::eigen_orthonormal(&basis, big.min(256)));
    s.push(checks::eigen_laplacian(&basis, big));
    s.push(checks::eigen_ordering(big));

    let m = config.m;
    let (closed, quadrature) = rayon::join(
        || CouplingTensor::closed_form(basis.clone(), m),
        || CouplingTensor::quadrature_default(basis.clone(), m),
    );
    artifacts::write_tensor(&out.join("tensor.csv"), &closed)?;
    artifacts::write_tensor(&out.join("tensor_quadrature.csv"), &quadrature)?;
    s.push(checks::tensor_structure(&closed, "closed_form", 0.0));
    s.push(checks::tensor_structure(&quadrature, "quadrature", 1e-12));
    s.push(checks::cross_method(&closed, &quadrature));
    s.push(checks::permutation_determinism(&basis, m));
    s.push(checks::rhs_cross_check(&closed, config.seed, 5));
    s.push(Check::info(
        "galerkin.selection_rule",
        format!("{} stored triads violate the frequency selection rule", closed.selection_rule_violations()),
    ));
    Ok(s)
}

fn bound_records(rows: &[BoundRow]) -> impl Iterator<Item = BoundRecord> + '_ {
    rows.iter().map(|r| BoundRecord {
        quantity: r.quantity.into(),
        x: r.x,
        t: r.t,
        measured: r.measured,
        bound_form: r.bound_form.into(),
    })
}

fn heat_oracle(config: &RunConfig, out: &Path) -> Result<Summary> {
    let mut s = Summary::new("heat-oracle");
    let basis = Arc::new(EigenBasis::new(config.m.max(5)));
    let f = random_spectrum(&basis, config.m, config.seed, config.beta);
    let g = random_spectrum(&basis, config.m, config.seed.wrapping_add(1), config.beta);
    s.push(checks::parseval(&f));
    s.push(checks::duality(&f, &g));
    s.push(checks::composition(&f));
    s.push(checks::divergence_free(&f));
    s.push(checks::isometry(&f));

    let five = random_spectrum(&basis, 5, config.seed, config.beta);
    s.push(checks::subordination(&five)?);
    s.push(checks::cs_normalization()?);
    let pairs = checks::kernel_pairs();
    s.push(checks::kernel_symmetry(&pairs, &config.kernel_times)?);
    let (agreement, mut records) = checks::kernel_agreement(&pairs, &config.kernel_times)?;
    s.push(agreement);
    let mut points: Vec<[f64; 2]> = pairs.iter().map(|p| p.0).collect();
    points.dedup();
    s.push(checks::sub_markov(&points, &config.kernel_times));
    let (gradient, infos, report): (Check, Vec<Check>, KernelBoundReport) = checks::gradient_bound();
    s.push(gradient);
    s.extend(infos);
    records.extend(bound_records(&report.rows));
    artifacts::write_bounds(&out.join("kernel_bounds.csv"), &records)?;
    let (integral, rows) = checks::time_integral();
    s.push(integral);
    artifacts::write_table(&out.join("time_integral.csv"), &["m", "p", "K", "quadrature", "constant"], rows)?;

    let sub = sqg_core::heat::frac_via_subordination(&five, &sqg_core::heat::SubordinationRule::new(config.s)?);
    artifacts::write_spectral(&out.join("subordinated.csv"), &sub.field)?;
    Ok(s)
}

fn commutators(config: &RunConfig, out: &Path) -> Result<Summary> {
    let mut s = Summary::new("commutators");
    let m = config.m;
    let phi = config.test_function();
    let identity = checks::identity_study(m, config.seeds, config.seed, config.beta, &phi)?;
    s.push(identity.decreasing());
    s.push(identity.tolerance());

    let basis = Arc::new(EigenBasis::new(8 * m));
    let psi = initial(config, &basis)?;
    let ratio = checks::bound_ratio(&psi, &phi, m, config.chi_p)?;
    s.push(ratio.homogeneity());
    s.push(ratio.stability());

    let ladder_study = checks::distance_ladder(&psi, config.s, config.p, config.rungs)?;
    s.push(ladder_study.bounded());
    s.push(Check::info(
        "commutator.distance_ladder_growth",
        format!("max normalized / first rung = {:.4}", ladder_study.growth()),
    ));
    s.push(checks::cross_route(&psi, config.s)?);

    let mut rows = identity.rows;
    rows.extend(ratio.rows);
    rows.extend(ladder_study.report_rows());
    artifacts::write_commutator_report(&out.join("commutator_report.csv"), &rows)?;
    let ladder: Vec<BoundRecord> = ladder_study
        .rows
        .iter()
        .map(|r| BoundRecord {
            quantity: CommutatorTag::FracsGrad.name().into(),
            x: r.x,
            t: 0.0,
            measured: r.normalized,
            bound_form: format!("|[L^s,grad]psi(x)|*d(x)^(s+1+2/p)/|psi|_Lp (s={}, p={})", float(config.s), float(config.p)),
        })
        .collect();
    artifacts::write_bounds(&out.join("distance_ladder.csv"), &ladder)?;
    Ok(s)
}

fn invariants(config: &RunConfig, out: &Path) -> Result<Summary> {
    let mut s = Summary::new("invariants");
    let basis = Arc::new(EigenBasis::new(config.m));
    let theta0 = initial(config, &basis)?;
    let solver = Galerkin::new(CouplingTensor::closed_form(basis.clone(), config.m), sqg_core::galerkin::Integrator::ImplicitMidpoint)
        .with_solver(config.solver);
    let record = solver.run(&theta0, config.horizon, config.dt, config.stride, false)?;
    artifacts::write_trajectory(&out.join("trajectory_midpoint.csv"), &record, false)?;
    s.push(checks::conservation(&record, sqg_core::galerkin::Integrator::ImplicitMidpoint));

    // a steady initial state has no drift to measure, so the order study always uses random data
    let random = random_spectrum(&basis, config.m, config.seed, config.beta);
    let order = checks::rk4_order(&random, config.m, config.horizon, &config.rk4_dts)?;
    s.push(order.check());
    let mut rows = vec![vec![
        "implicit_midpoint".to_string(),
        float(config.dt),
        float(record.energy_drift()),
        float(record.hamiltonian_drift()),
    ]];
    rows.extend(order.rows.iter().map(|&(dt, de, dh)| vec!["rk4".into(), float(dt), float(de), float(dh)]));
    artifacts::write_table(&out.join("drift.csv"), &["integrator", "dt", "energy_drift", "hamiltonian_drift"], rows)?;
    Ok(s)
}

fn series_rows(rows: &mut Vec<StudyRow>, r: &TrajectoryRecord) {
    for (i, &t) in r.times.iter().enumerate() {
        rows.push(StudyRow {
            m: r.m,
            quantity: "energy",
            t_or_pair: float(t),
            value: r.energy[i],
        });
        rows.push(StudyRow {
            m: r.m,
            quantity: "hamiltonian",
            t_or_pair: float(t),
            value: r.hamiltonian[i],
        });
    }
}

fn converge(config: &RunConfig, out: &Path) -> Result<Summary> {
    let mut s = Summary::new("converge");
    let study_config = config.study();
    study_config.validate()?;
    let basis = study_config.basis();
    let runs = study_config
        .ladder
        .par_iter()
        .map(|&m| study_config.run(&basis, m))
        .collect::<sqg_core::Result<Vec<_>>>()?;
    let study = ConvergenceStudy::from_runs(study_config, basis, runs)?;
    let phi = config.test_function();

    s.push(checks::hamiltonian_check(&study));
    let decay = checks::decay(&phi, &config.decay_ladder, config.envelope_modes)?;
    s.push(decay.strictly_decreasing());
    s.push(decay.coefficient_decay());
    s.extend(decay.infos());

    let weak_basis = Arc::new(EigenBasis::new(config.m));
    let theta0 = random_spectrum(&weak_basis, config.m, config.seed, config.beta);
    let weak = checks::weak_study(&theta0, config.m, config.horizon, config.dt, config.stride, config.solver, &phi)?;
    s.push(weak.refines());
    s.push(weak.linear());
    s.push(weak.gap_info());
    s.push(checks::padding_consistency(&study));
    s.push(checks::diagnostics_deterministic(&study)?);

    let cauchy = cauchy_diagnostic(&study, config.epsilon)?;
    let hrows = hamiltonian_constancy(&study);
    let pairing = dt_psi_pairing(&study, &phi);
    s.push(Check::info(
        "convergence.cauchy",
        format!(
            "sup_t ‖ψ_2m - ψ_m‖_(1-ε,D), ε = {}: {} (decreasing: {})",
            config.epsilon,
            cauchy
                .iter()
                .map(|c| format!("{}→{}: {:.3e}", c.m_low, c.m_high, c.difference))
                .collect::<Vec<_>>()
                .join(", "),
            decreasing(cauchy.iter().map(|c| c.difference))
        ),
    ));
    s.push(Check::info(
        "convergence.hamiltonian_gap",
        format!(
            "|H_m(0) - H(0)|: {} (decreasing: {})",
            hrows.iter().map(|h| format!("m={}: {:.3e}", h.m, h.initial_gap)).collect::<Vec<_>>().join(", "),
            decreasing(hrows.iter().map(|h| h.initial_gap))
        ),
    ));
    s.push(Check::info(
        "convergence.dt_psi_pairing",
        format!(
            "max_t |<∂ₜψ_m, P_mφ>| / ‖θ₀‖²: {}",
            pairing.iter().map(|(m, v)| format!("m={m}: {v:.3e}")).collect::<Vec<_>>().join(", ")
        ),
    ));

    let mut rows = Vec::new();
    for r in &study.runs {
        series_rows(&mut rows, r);
    }
    for h in &hrows {
        rows.push(StudyRow {
            m: h.m,
            quantity: "hamiltonian_drift",
            t_or_pair: String::new(),
            value: h.drift,
        });
        rows.push(StudyRow {
            m: h.m,
            quantity: "hamiltonian_initial_gap",
            t_or_pair: String::new(),
            value: h.initial_gap,
        });
    }
    for c in &cauchy {
        rows.push(StudyRow {
            m: c.m_high,
            quantity: "cauchy_psi_difference",
            t_or_pair: format!("{}-{}", c.m_low, c.m_high),
            value: c.difference,
        });
    }
    for (m, v) in &pairing {
        rows.push(StudyRow {
            m: *m,
            quantity: "dt_psi_pairing",
            t_or_pair: String::new(),
            value: *v,
        });
    }
    for (dt, r) in weak.residuals {
        rows.push(StudyRow {
            m: config.m,
            quantity: "weak_residual",
            t_or_pair: format!("dt={}", float(dt)),
            value: r,
        });
    }
    for w in &decay.envelope {
        rows.push(StudyRow {
            m: decay.envelope_modes,
            quantity: "coefficient_envelope_l3",
            t_or_pair: format!("lambda>={}", float(w.lambda_lo)),
            value: w.max,
        });
    }
    artifacts::write_study(&out.join("study.csv"), &rows)?;

    let table = decay.tables.iter().flat_map(|t| {
        t.rows.iter().map(move |r| {
            vec![
                t.k.to_string(),
                r.m.to_string(),
                float(r.error),
                float(r.relative),
                float(r.weighted_max),
            ]
        })
    });
    artifacts::write_table(&out.join("decay_table.csv"), &["k", "m", "error", "relative", "weighted_max_l3"], table)?;
    Ok(s)
}
