//! End-to-end acceptance checks, one line per criterion.
//!
//! Runs without the libtest harness so the lines always reach the output.
//! Pass criterion numbers as arguments to run a subset:
//! `cargo test --test acceptance -- 1 2 8`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;

use wiggle_core::config::RunConfig;
use wiggle_core::crystal_basis::Basis;
use wiggle_core::device::{sample_profile, DeviceConfig};
use wiggle_core::envelope::{
    assemble_envelope_hamiltonian, assemble_from_arrays, envelope_density_report, solve_valley_doublet,
    trapezoid, valley_splitting_ww, CouplingKernel, CouplingSource,
};
use wiggle_core::epm::{sample_density_matrix, Crystal, IntervalleyDensityMatrix, PairSigns, Pseudopotential};
use wiggle_core::sweep::report::{analyze_peaks, calibration_report, selection_rule_report, Metadata, PeakReport};
use wiggle_core::sweep::{run_sweep, FirstOrder, FullSolver, SplittingMethod, SweepSpec, SweepTable};
use wiggle_core::units::HBAR2_OVER_2ME;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

struct Ctx {
    cfg: RunConfig,
    pp: Pseudopotential,
    sweep: Option<(SweepTable, PeakReport, Duration)>,
}

impl Ctx {
    fn new() -> Self {
        let cfg = RunConfig::default();
        let pp = cfg.pseudopotential().expect("default config is valid");
        Self { cfg, pp, sweep: None }
    }

    fn rho(&self, n_ge: f64) -> IntervalleyDensityMatrix {
        let e = &self.cfg.ensemble;
        sample_density_matrix(&self.pp, n_ge, e.n_samples, e.seed, &PairSigns).expect("density matrix")
    }

    /// The default sweep (q ∈ [2, 22] step 0.1, four concentrations, 300
    /// samples), run once on a single thread.
    fn sweep(&mut self) -> &(SweepTable, PeakReport, Duration) {
        if self.sweep.is_none() {
            let spec = SweepSpec::from_config(&self.cfg).unwrap();
            let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
            let t = Instant::now();
            let table = pool.install(|| run_sweep(&spec, &self.pp, None)).unwrap();
            let elapsed = t.elapsed();
            let report = analyze_peaks(&table, Metadata::new(&self.cfg, &self.pp).unwrap());
            self.sweep = Some((table, report, elapsed));
        }
        self.sweep.as_ref().unwrap()
    }
}

fn criterion_1(ctx: &mut Ctx) -> Outcome {
    let t = Instant::now();
    let r = calibration_report(&ctx.pp).unwrap();
    let elapsed = t.elapsed();
    outcome(
        (r.k_min - 0.84).abs() <= 0.02 && elapsed < Duration::from_secs(10),
        format!("k_min = {:.4} (2π/a), target 0.84 ± 0.02, {:.2?}", r.k_min, elapsed),
    )
}

fn criterion_2(ctx: &mut Ctx) -> Outcome {
    let r = selection_rule_report(&ctx.pp, "pair", ctx.cfg.ensemble.seed).unwrap();
    let mut ok = r.ordered.len() == 4;
    let mut worst_class = 0.0f64;
    let mut worst_total = 0.0f64;
    let mut worst_coeff = 0.0f64;
    for c in &r.ordered {
        for s in c.class_sums.values() {
            worst_class = worst_class.max(Complex64::new(s[0], s[1]).norm() / c.unsigned);
        }
        worst_total = worst_total.max(c.relative);
        for (_, v) in &c.vanishing.forbidden {
            worst_coeff = worst_coeff.max(*v);
        }
        ok &= c.vanishing.ok && !c.vanishing.forbidden.is_empty();
    }
    ok &= worst_class <= 1e-10 && worst_total <= 1e-10 && worst_coeff <= 1e-10;
    outcome(
        ok,
        format!(
            "Si, Ge, VCA 0.1/0.3: max class |S|/Σ = {worst_class:.1e}, total {worst_total:.1e}, |c(0,0,±4π/a)| ≤ {worst_coeff:.1e}"
        ),
    )
}

fn criterion_3(ctx: &mut Ctx) -> Outcome {
    let mut worst = 0.0f64;
    for crystal in [Crystal::Si, Crystal::Ge, Crystal::Vca(0.1), Crystal::Vca(0.3)] {
        let s = ctx.pp.valley_state(&crystal).unwrap();
        let sum: f64 = s.coeffs.iter().map(|c| c.norm_sqr()).sum();
        worst = worst.max((sum - 1.0).abs());
    }
    outcome(worst <= 1e-12, format!("max |Σ|c₊(K)|² − 1| = {worst:.1e}"))
}

fn criterion_4(ctx: &mut Ctx) -> Outcome {
    let (_, report, elapsed) = ctx.sweep();
    let elapsed = *elapsed;
    let peaks = &report
        .by_concentration
        .iter()
        .find(|c| c.n_ge == 0.2)
        .expect("n_ge = 0.2 in the default grid")
        .peaks;
    let listed: Vec<String> = peaks.iter().map(|p| format!("{:.1}:{:.2e}", p.q, p.height)).collect();
    let mut ok = peaks.len() == 3 && elapsed < Duration::from_secs(30 * 60);
    if peaks.len() == 3 {
        let (small, mid, large) = (peaks[0], peaks[1], peaks[2]);
        ok &= (small.q - 3.7).abs() <= 0.3 + 1e-9;
        ok &= (mid.q - 9.8).abs() <= 0.5 + 1e-9;
        ok &= (large.q - 19.5).abs() <= 0.5 + 1e-9;
        // "≫" read as at least a factor of ten
        ok &= large.height >= 10.0 * mid.height && mid.height > small.height;
    }
    outcome(
        ok,
        format!("n_ge = 0.2 peaks (q:height eV) [{}], sweep {:.1?}", listed.join(", "), elapsed),
    )
}

fn criterion_5(ctx: &mut Ctx) -> Outcome {
    let (_, report, _) = ctx.sweep();
    let targets = [("q1", 1.5, 0.25), ("q_mid", 2.0, 0.25), ("q2", 1.0, 0.15)];
    let mut ok = true;
    let mut parts = Vec::new();
    for (family, target, tol) in targets {
        let f = report.families.iter().find(|f| f.family == family).unwrap();
        match &f.fit {
            Some(fit) if f.points.len() == 4 => {
                let pass = (fit.slope - target).abs() <= tol;
                ok &= pass;
                parts.push(format!(
                    "{family} {:.3}±{:.3} (want {target}±{tol}){}",
                    fit.slope,
                    fit.slope_stderr,
                    if pass { "" } else { " ✗" }
                ));
            }
            _ => {
                ok = false;
                parts.push(format!("{family}: {} points, no fit", f.points.len()));
            }
        }
    }
    outcome(ok, parts.join("; "))
}

fn criterion_6(ctx: &mut Ctx) -> Outcome {
    let (table, _, _) = ctx.sweep();
    let values: Vec<f64> = table
        .rows
        .iter()
        .filter(|r| (r.q - 19.5).abs() < 1e-9)
        .filter_map(|r| r.delta_w)
        .collect();
    let in_bracket = values.len() == 4 && values.iter().all(|d| (1e-3..=30e-3).contains(d));
    let in_decade = values.iter().any(|d| (5e-3..=15e-3).contains(d));
    let mev: Vec<String> = values.iter().map(|d| format!("{:.2}", d * 1e3)).collect();
    outcome(
        in_bracket && in_decade,
        format!("Δ_w(19.5) = [{}] meV for n_ge = 0.05..0.2", mev.join(", ")),
    )
}

fn criterion_7(ctx: &mut Ctx) -> Outcome {
    let report = envelope_density_report(&ctx.cfg.device, ctx.pp.basis(), &|n| Ok(ctx.rho(n))).unwrap();
    let count = |n: f64| report.cases.iter().find(|c| c.n_ge == n).unwrap().peaks;
    let (p0, p2) = (count(0.0), count(0.2));
    outcome(
        p0 == 1 && p2 >= 2,
        format!("q = 3.7: density peaks {p0} at n_ge = 0, {p2} at n_ge = 0.2"),
    )
}

fn criterion_8(ctx: &mut Ctx) -> Outcome {
    let basis = ctx.pp.basis();
    let rho = ctx.rho(0.005);
    let cfg = ctx.cfg.device.clone().with_point(19.4, 0.005);
    let full = FullSolver.evaluate(&cfg, &rho, basis).unwrap().delta_w;
    let first = FirstOrder.evaluate(&cfg, &rho, basis).unwrap().delta_w;
    let rel = (first - full).abs() / full;

    let rho0 = ctx.rho(0.0);
    let degenerate = valley_splitting_ww(&ctx.cfg.device.clone().with_point(19.4, 0.0), &rho0, basis)
        .unwrap()
        .delta_total;

    let (field, m, n) = (0.01, 0.92, 3001);
    let z: Vec<f64> = (0..n).map(|i| -30.0 + 30.0 * i as f64 / (n - 1) as f64).collect();
    let v: Vec<f64> = z.iter().map(|z| -field * z).collect();
    let h = assemble_from_arrays(&z, &v, &vec![Complex64::new(0.0, 0.0); n], m).unwrap();
    let e = h.operator.lowest_pair().unwrap().energies[0];
    let exact = (HBAR2_OVER_2ME / m * field * field).cbrt() * 2.338_107_410_459_767;
    let airy = (e - exact).abs();

    outcome(
        rel <= 0.10 && degenerate < 1e-9 && airy <= 1e-4,
        format!(
            "first order vs full {:.2}% ({first:.3e} vs {full:.3e} eV); Δ(n=0) = {degenerate:.1e} eV; Airy error {airy:.1e} eV",
            100.0 * rel
        ),
    )
}

/// Points exercised by the property suite: the three peak positions at the
/// lowest and highest concentration, and the oracle point.
const PROPERTY_POINTS: [(f64, f64); 7] = [
    (3.7, 0.05),
    (3.7, 0.2),
    (9.7, 0.05),
    (9.7, 0.2),
    (19.5, 0.05),
    (19.5, 0.2),
    (19.4, 0.005),
];

fn criterion_9(ctx: &mut Ctx) -> Outcome {
    let basis: &Basis = ctx.pp.basis();
    let mut herm = 0.0f64;
    let mut norm = 0.0f64;
    let mut conv = 0.0f64;
    let mut gauge = 0.0f64;
    let mut deterministic = true;
    let mut rhos: Vec<(f64, IntervalleyDensityMatrix)> = Vec::new();
    for &(q, n) in &PROPERTY_POINTS {
        if !rhos.iter().any(|(m, _)| *m == n) {
            let a = ctx.rho(n);
            deterministic &= a == ctx.rho(n);
            rhos.push((n, a));
        }
        let rho = &rhos.iter().find(|(m, _)| *m == n).unwrap().1;
        let cfg = ctx.cfg.device.clone().with_point(q, n);

        let profile = sample_profile(&cfg).unwrap();
        let kernel = CouplingKernel::new(rho, basis, &profile.z);
        for source in [CouplingSource::Total, CouplingSource::Oscillatory] {
            let h = assemble_envelope_hamiltonian(&cfg, &profile, &kernel, source).unwrap();
            let dense = h.operator.to_dense();
            let d = (&dense - dense.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            herm = herm.max(d / h.operator.norm_estimate());
            let sol = solve_valley_doublet(&h).unwrap();
            norm = norm.max((trapezoid(&sol.z, &sol.density) - 1.0).abs());
        }

        let base = valley_splitting_ww(&cfg, rho, basis).unwrap();
        deterministic &= base == valley_splitting_ww(&cfg, rho, basis).unwrap();

        let fine = DeviceConfig {
            n_grid: Some(2 * cfg.grid_points() - 1),
            ..cfg.clone()
        };
        let f = valley_splitting_ww(&fine, rho, basis).unwrap();
        conv = conv.max((f.delta_w - base.delta_w).abs() / base.delta_w);
        conv = conv.max((f.delta_total - base.delta_total).abs() / base.delta_total);

        for phase in [0.7, 2.0, -2.9] {
            let r = valley_splitting_ww(&cfg, &rho.rotated(Complex64::from_polar(1.0, phase)), basis).unwrap();
            gauge = gauge.max((r.delta_w - base.delta_w).abs());
            gauge = gauge.max((r.delta_total - base.delta_total).abs());
        }
    }
    outcome(
        herm <= 1e-12 && norm <= 1e-9 && deterministic && conv < 0.02 && gauge < 1e-12,
        format!(
            "{} points: Hermiticity {herm:.1e}, norm {norm:.1e}, deterministic {deterministic}, grid doubling {:.2}%, phase {gauge:.1e} eV",
            PROPERTY_POINTS.len(),
            100.0 * conv
        ),
    )
}

type Criterion = fn(&mut Ctx) -> Outcome;

const CRITERIA: [(u32, &str, Criterion); 9] = [
    (1, "calibration", criterion_1),
    (2, "selection rule (ordered)", criterion_2),
    (3, "short-wavelength normalization", criterion_3),
    (4, "peak structure", criterion_4),
    (5, "scaling exponents", criterion_5),
    (6, "magnitude at q = 19.5", criterion_6),
    (7, "envelope morphology", criterion_7),
    (8, "oracle equivalence", criterion_8),
    (9, "property suites", criterion_9),
];

fn main() -> ExitCode {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut ctx = Ctx::new();
    let mut failed = Vec::new();
    for (id, name, run) in CRITERIA {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let t = Instant::now();
        let o = run(&mut ctx);
        println!(
            "[{}] criterion {id} ({name}): {} [{:.1?}]",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed()
        );
        if !o.passed {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
