//! Acceptance checks, one PASS/FAIL line each. Runs the full-size tables
//! (200000 paths, 1000 seeds); `STOCHAD_ACCEPTANCE_REPEATS` lowers the repeat
//! count for a quick look.

use std::process::{Command, ExitCode};

use stochad::estimators::{record_digital, stochastic_ad_delta};
use stochad::experiment::{evaluate_seeds, summarize};
use stochad::indicator::DensityEstimate;
use stochad::model::{analytic_digital_delta, standard_normals};
use stochad::regression::{empirical_density_samples, fit_density, fit_distribution};
use stochad::{
    BlackScholesParams, DigitalOption, EstimatorSpec, ExperimentConfig, ExperimentStats,
    IndicatorDiffStrategy, Paths, RandomVariable, TableSetup, Tape, Width,
};

struct Report {
    failed: usize,
}

impl Report {
    fn check(&mut self, name: &str, pass: bool, detail: String) {
        if !pass {
            self.failed += 1;
        }
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

fn within(v: f64, target: f64, tol: f64) -> bool {
    (v - target).abs() <= tol
}

fn between(v: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&v)
}

fn row<'a>(stats: &'a ExperimentStats, label: &str) -> &'a stochad::experiment::EstimatorStats {
    stats.row(label).expect("row present")
}

fn analytic_delta(report: &mut Report) {
    let d = analytic_digital_delta(
        &BlackScholesParams::reference(),
        &DigitalOption::reference(),
    );
    report.check("analytic delta", within(d, 0.7361, 5e-5), format!("{d:.6}"));
}

fn tables(report: &mut Report) {
    let repeats = std::env::var("STOCHAD_ACCEPTANCE_REPEATS")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(1000);
    let t1 = TableSetup::new(0.5, 0.5, 2);
    let t2 = TableSetup::new(0.05, 0.5, 2);
    let t3 = TableSetup::new(0.025, 0.25, 2);
    let (e1, e2, e3) = (t1.estimators(), t2.estimators(), t3.estimators());
    // FD, AD, Reg per table; the LR and analytic columns are shared
    let mut config = ExperimentConfig::reference(&t2).with_repeats(repeats);
    config.estimators = vec![
        e1[0].clone(),
        e1[1].clone(),
        e2[0].clone(),
        e2[1].clone(),
        e2[2].clone(),
        EstimatorSpec::likelihood_ratio(),
        EstimatorSpec::analytic(),
        e3[0].clone(),
        e3[1].clone(),
        e3[2].clone(),
    ];
    let results = evaluate_seeds(&config).expect("tables run");
    let table1 = summarize(&config, &results, &[0, 1, 5, 6]).expect("table 1");
    let table2 = summarize(&config, &results, &[2, 3, 4, 5, 6]).expect("table 2");
    let table3 = summarize(&config, &results, &[7, 8, 9, 5, 6]).expect("table 3");
    for (name, t) in [
        ("w=0.5", &table1),
        ("w=0.05", &table2),
        ("w=0.025 w_phi=0.25", &table3),
    ] {
        println!("-- {name}, {repeats} repeats x {} paths", config.paths);
        print!("{}", t.text_table());
    }

    let fd2 = row(&table2, "Finite Difference");
    let ad2 = row(&table2, "Stoch. AD");
    let reg2 = row(&table2, "Stoch. AD with Regression");
    let lr = row(&table2, "Likelihood Ratio");
    report.check(
        "w=0.05 stoch. AD mean",
        within(ad2.mean, 0.7359, 0.0015),
        format!("{:.6}", ad2.mean),
    );
    report.check(
        "w=0.05 stoch. AD stddev",
        between(ad2.stddev, 0.0095, 0.0130),
        format!("{:.6}", ad2.stddev),
    );
    report.check(
        "w=0.05 regression mean",
        within(reg2.mean, 0.7355, 0.0015),
        format!("{:.6}", reg2.mean),
    );
    report.check(
        "w=0.05 regression stddev",
        between(reg2.stddev, 0.0030, 0.0043),
        format!("{:.6}", reg2.stddev),
    );
    let ratio = fd2.stddev / reg2.stddev;
    report.check(
        "w=0.05 stddev(FD)/stddev(regression)",
        ratio >= 2.5,
        format!("{ratio:.3}"),
    );
    report.check(
        "likelihood ratio stddev",
        between(lr.stddev, 0.0021, 0.0030),
        format!("{:.6}", lr.stddev),
    );
    let bound = 3.0 * lr.stddev / (repeats as f64).sqrt();
    report.check(
        "likelihood ratio bias",
        lr.bias.abs() < bound,
        format!("{:.6} (bound {bound:.6})", lr.bias),
    );

    for label in ["Finite Difference", "Stoch. AD"] {
        let m = row(&table1, label).mean;
        report.check(
            &format!("w=0.5 {label} mean"),
            between(m, 0.7265, 0.7300),
            format!("{m:.6}"),
        );
    }

    let reg3 = row(&table3, "Stoch. AD with Regression");
    let fd3 = row(&table3, "Finite Difference");
    report.check(
        "w=0.025 regression bias",
        reg3.bias.abs() <= 0.0010,
        format!("{:.6}", reg3.bias),
    );
    report.check(
        "w=0.025 regression stddev",
        between(reg3.stddev, 0.0045, 0.0065),
        format!("{:.6}", reg3.stddev),
    );
    let growth = fd3.stddev / fd2.stddev;
    report.check(
        "FD stddev growth w=0.05 -> w=0.025",
        growth >= 1.25,
        format!("{growth:.3}"),
    );
}

fn window_count_equivalence(report: &mut Report) {
    let params = BlackScholesParams::reference();
    let option = DigitalOption::reference();
    let mut mismatches = 0;
    for seed in 0..20 {
        let paths = Paths::simulate(&params, 200_000, 1000 + seed);
        for width in [Width::StdDevs(0.05), Width::Absolute(0.03)] {
            let delta = IndicatorDiffStrategy::discretized_delta(width);
            let injected = IndicatorDiffStrategy::Injection {
                width,
                density: DensityEstimate::WindowCount,
            };
            let a = stochastic_ad_delta(&paths, &option, &delta).unwrap();
            let b = stochastic_ad_delta(&paths, &option, &injected).unwrap();
            if a.to_bits() != b.to_bits() {
                mismatches += 1;
            }
        }
    }
    report.check(
        "window-count injection equals discretized delta bit-for-bit",
        mismatches == 0,
        format!("{mismatches} mismatches over 20 seeds x 2 widths"),
    );
}

fn smooth_payoffs(report: &mut Report) {
    let params = BlackScholesParams::reference();
    let strike = 1.05;
    let h = 1e-4;
    let pathwise = IndicatorDiffStrategy::Constant(0.0);
    let mut worst_call = 0.0f64;
    let mut worst_forward = 0.0f64;
    for seed in 0..20 {
        let paths = Paths::simulate(&params, 200_000, 2000 + seed);
        let call = |spot: f64| {
            paths
                .terminal(spot)
                .sub(strike)
                .unwrap()
                .max(0.0)
                .unwrap()
                .expectation()
                * params.discount()
        };
        let fd = (call(params.spot + h) - call(params.spot - h)) / (2.0 * h);

        let tape = Tape::new();
        let spot = tape.input(params.spot);
        let terminal = paths.terminal_on(&spot).unwrap();
        let payoff = terminal
            .sub_scalar(strike)
            .unwrap()
            .max_scalar(0.0)
            .unwrap()
            .mul_scalar(params.discount())
            .unwrap();
        let ad = tape
            .backward(payoff.id(), &pathwise)
            .unwrap()
            .derivative(spot.id())
            .unwrap();
        worst_call = worst_call.max(((ad - fd) / fd).abs());

        let tape = Tape::new();
        let spot = tape.input(params.spot);
        let forward = paths
            .terminal_on(&spot)
            .unwrap()
            .mul_scalar(params.discount())
            .unwrap();
        let ad = tape
            .backward(forward.id(), &pathwise)
            .unwrap()
            .derivative(spot.id())
            .unwrap();
        let exact = params.discount() * paths.terminal(params.spot).expectation() / params.spot;
        worst_forward = worst_forward.max((ad - exact).abs());
    }
    report.check(
        "European call tape delta vs central FD",
        worst_call <= 1e-4,
        format!("worst relative gap {worst_call:.2e}"),
    );
    report.check(
        "discounted terminal tape delta",
        worst_forward <= 1e-10,
        format!("worst gap {worst_forward:.2e}"),
    );
}

fn two_run_extraction(report: &mut Report) {
    let params = BlackScholesParams::reference();
    let option = DigitalOption::reference();
    let strategy = IndicatorDiffStrategy::discretized_delta(Width::StdDevs(0.05));
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let paths = Paths::simulate(&params, 50_000, 3000 + seed);
        let n = paths.path_count();
        let tape = Tape::new();
        let graph = record_digital(&tape, &paths, &option).unwrap();
        let jump = tape
            .adjoint_at_indicator_via_two_runs(graph.payoff.id(), graph.indicator.id(), &strategy)
            .unwrap();
        let incoming = tape
            .backward(graph.payoff.id(), &strategy)
            .unwrap()
            .adjoint(graph.indicator.id())
            .unwrap();
        for (a, b) in jump.to_vec(n).iter().zip(incoming.to_vec(n)) {
            worst = worst.max((a - b).abs());
        }
    }
    report.check(
        "two-run jump equals incoming adjoint",
        worst <= 1e-15,
        format!("worst gap {worst:.2e} over 20 seeds"),
    );
}

fn density_oracle(report: &mut Report) {
    let exact = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let (mut sum_d, mut sum_f) = (0.0, 0.0);
    let (mut worst_d, mut worst_f) = (0.0f64, 0.0f64);
    let seeds = 100;
    for seed in 0..seeds {
        let x: RandomVariable = standard_normals(200_000, 4000 + seed);
        let r = 0.5 * 0.5 * x.standard_deviation().unwrap();
        let d = fit_density(&empirical_density_samples(&x, r).unwrap(), 2).unwrap();
        let f = fit_distribution(&x, r, 2).unwrap();
        sum_d += d;
        sum_f += f;
        worst_d = worst_d.max((d - exact).abs());
        worst_f = worst_f.max((f - exact).abs());
    }
    let (mean_d, mean_f) = (sum_d / seeds as f64, sum_f / seeds as f64);
    report.check(
        "density scatter at zero, per seed",
        worst_d <= 0.02,
        format!("worst gap {worst_d:.4}"),
    );
    report.check(
        "distribution scatter at zero, per seed",
        worst_f <= 0.02,
        format!("worst gap {worst_f:.4}"),
    );
    report.check(
        "density scatter at zero, seed average",
        within(mean_d, exact, 0.005),
        format!("{mean_d:.6} vs {exact:.6}"),
    );
    report.check(
        "distribution scatter at zero, seed average",
        within(mean_f, exact, 0.005),
        format!("{mean_f:.6} vs {exact:.6}"),
    );
}

fn cli_determinism(report: &mut Report) {
    let dir = std::env::temp_dir().join(format!("stochad-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let run = |name: &str| {
        let out = dir.join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_stochad"))
            .args(["table", "--w", "0.05", "--wphi", "0.5", "--m", "2"])
            .args(["--repeats", "8", "--paths", "20000", "--seed", "11"])
            .arg("--out")
            .arg(&out)
            .env_remove("STOCHAD_PATHS")
            .env_remove("STOCHAD_REPEATS")
            .output()
            .expect("binary runs");
        assert!(
            status.status.success(),
            "{}",
            String::from_utf8_lossy(&status.stderr)
        );
        std::fs::read(out).unwrap()
    };
    let (a, b) = (run("a.csv"), run("b.csv"));
    std::fs::remove_dir_all(&dir).ok();
    report.check(
        "table command is byte-identical across runs",
        a == b && !a.is_empty(),
        format!("{} bytes", a.len()),
    );
}

fn main() -> ExitCode {
    let mut report = Report { failed: 0 };
    analytic_delta(&mut report);
    window_count_equivalence(&mut report);
    smooth_payoffs(&mut report);
    two_run_extraction(&mut report);
    density_oracle(&mut report);
    cli_determinism(&mut report);
    tables(&mut report);
    if report.failed == 0 {
        println!("all acceptance checks passed");
        ExitCode::SUCCESS
    } else {
        println!("{} acceptance checks failed", report.failed);
        ExitCode::FAILURE
    }
}
