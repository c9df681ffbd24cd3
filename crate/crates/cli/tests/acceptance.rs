//! Acceptance suite: one verdict line per criterion.
//!
//! Criteria 3 and 4 are known to be out of reach of this construction in
//! double precision; they are run at full strength and reported as failing.
//! The process fails if any verdict differs from that expectation.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use triproj::assembly::{
    assemble_sequence, compose_construction, initial_sizes, Fidelity, Term, ToleranceSchedule, Word,
};
use triproj::hilbert::{unit, HVector, LinOp};
use triproj::proj::{principal_angles, proj_distance, spectral_power, Flag, Projection};
use triproj::synthesis::{build_dimension_plan, build_interpolating_projection, stage_lower_bound, synthesize_ratchet};
use triproj::Error;
use triproj_cli::config::ExperimentConfig;
use triproj_cli::run_experiment;

const KNOWN_RED: [usize; 2] = [3, 4];

struct Verdict {
    id: usize,
    pass: bool,
    detail: String,
}

fn random_orthogonal(rng: &mut ChaCha8Rng, dim: usize) -> LinOp {
    let a: LinOp = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
    a.qr().q()
}

fn projection_on_columns(q: &LinOp, cols: std::ops::Range<usize>) -> Projection {
    let dim = q.nrows();
    Projection::from_orthonormal_unchecked(dim, cols.map(|j| q.column(j).into_owned()).collect())
}

/// Slabs of ranks 2, 1, 2, 1 in a random basis of a 12-dimensional space,
/// with the last six basis vectors as helpers.
fn slab_flag(rng: &mut ChaCha8Rng) -> (Flag, Vec<HVector>) {
    let dim = 12;
    let q = random_orthogonal(rng, dim);
    let starts = [0, 2, 3, 5];
    let members = starts.iter().map(|&s| projection_on_columns(&q, s..6)).collect();
    let flag = Flag::new(members, vec![2, 1, 2]).unwrap();
    let helpers = (6..12).map(|j| q.column(j).into_owned()).collect();
    (flag, helpers)
}

fn criterion_1(rng: &mut ChaCha8Rng) -> Verdict {
    let start = Instant::now();
    let (flag, helpers) = slab_flag(rng);
    let deltas: Vec<f64> = (1..=4).map(|k| 0.1 * 0.5f64.powi(k)).collect();
    let result = build_interpolating_projection(&flag, &deltas, &helpers).and_then(|ip| {
        let errs = ip.dense_level_errors(&flag)?;
        Ok((ip, errs))
    });
    let elapsed = start.elapsed();
    match result {
        Ok((ip, errs)) => {
            let below = errs.iter().zip(&deltas).all(|(e, d)| e < d);
            let ratios: Vec<String> = errs.iter().zip(&deltas).map(|(e, d)| format!("{:.3}", e / d)).collect();
            let exps: Vec<String> = ip.schedule.exponents.iter().map(ToString::to_string).collect();
            Verdict {
                id: 1,
                pass: below && elapsed < Duration::from_secs(1) && flag.dim() <= 16,
                detail: format!(
                    "dim {}, exponents [{}], error/delta [{}], {:?}",
                    flag.dim(),
                    exps.join(", "),
                    ratios.join(", "),
                    elapsed
                ),
            }
        }
        Err(e) => Verdict { id: 1, pass: false, detail: e.to_string() },
    }
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let (eps, eta, stages, idle) = (0.1, 0.05, 25, 8);
    let dim = 2 + stages + idle;
    let members = (0..=stages)
        .map(|t| {
            let mut c = vec![0, 1];
            c.extend(2 + t..2 + stages);
            Projection::coordinates(dim, &c)
        })
        .collect();
    let flag = Flag::new(members, vec![1; stages]).unwrap();
    match synthesize_ratchet(&flag, &unit(dim, 0), &unit(dim, 1), eps, eta) {
        Ok(r) => {
            let w = r.unitary.delta();
            let outside = 2 + stages..dim;
            let mut leak: f64 = 0.0;
            for c in outside.clone() {
                for r in 0..dim {
                    leak = leak.max(w[(r, c)].abs()).max(w[(c, r)].abs());
                }
            }
            let elapsed = start.elapsed();
            Verdict {
                id: 2,
                pass: r.plan.residual < eps
                    && r.plan.deviation < eta
                    && leak == 0.0
                    && elapsed < Duration::from_secs(10),
                detail: format!(
                    "dim {dim}, T {}, residual {:.4e}, deviation {:.4e}, off-range entries {leak:e}, {elapsed:?}",
                    r.plan.stage_count, r.plan.residual, r.plan.deviation
                ),
            }
        }
        Err(e) => Verdict { id: 2, pass: false, detail: e.to_string() },
    }
}

fn criterion_3() -> Verdict {
    let stages = 4;
    let tol = ToleranceSchedule::new(stages, 1.0).unwrap();
    let floor: usize = (1..=stages)
        .map(|k| stage_lower_bound(tol.forward_eps(k)) + stage_lower_bound(tol.backward_eps(k)))
        .sum::<usize>()
        + 2 * stages
        + 1;
    match build_dimension_plan(&initial_sizes(&tol), 8, 300) {
        Ok(plan) => Verdict { id: 3, pass: true, detail: format!("planned dim {}", plan.total_dim) },
        Err(Error::BudgetExceeded { required, cap }) => Verdict {
            id: 3,
            pass: false,
            detail: format!(
                "plan needs {required} dims against cap {cap}; the top projection alone needs rank >= {floor} from per-stage lower bounds"
            ),
        },
        Err(e) => Verdict { id: 3, pass: false, detail: e.to_string() },
    }
}

fn toy_word_gap(rng: &mut ChaCha8Rng) -> f64 {
    let (flag, helpers) = slab_flag(rng);
    let ip = build_interpolating_projection(&flag, &[0.2, 0.1, 0.05, 0.025], &helpers).unwrap();
    let dim = flag.dim();
    let plane = projection_on_columns(&random_orthogonal(rng, dim), 0..2);
    let gens = [plane.matrix().clone(), ip.top().matrix().clone(), ip.q.matrix().clone()];
    let e = |n| triproj::exponent::Exponent::from_u64(n).unwrap();
    let word = Word {
        terms: vec![Term::stage_factor(e(7), e(3)), Term::stage_factor(e(40), e(2)), Term::stage_factor(e(1), e(5))],
        stage_marks: vec![1, 3],
    };
    let x = plane.basis()[0].clone();
    let flat = word.apply_flattened(&gens, &x, 10_000).unwrap();
    let grouped = word.apply_grouped(&gens, &x).unwrap();
    flat.iter().zip(&grouped).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
}

fn criteria_4_5(rng: &mut ChaCha8Rng) -> Vec<Verdict> {
    let tol = ToleranceSchedule::new(1, 1.0).unwrap();
    let assembly = match assemble_sequence(tol, 8, 1024) {
        Ok(a) => a,
        Err(e) => {
            return vec![
                Verdict { id: 4, pass: false, detail: e.to_string() },
                Verdict { id: 5, pass: false, detail: e.to_string() },
            ]
        }
    };
    let seq = assembly.certify().unwrap();
    let s = &seq.stages[0];
    let exact = s.backward_steps.iter().map(|c| c.measured).fold(0.0, f64::max);
    let bounded = s.forward_steps.iter().map(|c| c.measured).fold(0.0, f64::max);
    let v5 = Verdict {
        id: 5,
        pass: s.pass(),
        detail: format!(
            "exact steps max {exact:.2e} (<= 1e-9), exact product {:.2e}, bounded steps max {bounded:.2e}, bounded product {:.2e} < {:.4}, leak {:.2e} <= {:.2e}, block defect {}",
            s.backward_product.measured,
            s.forward_product.measured,
            s.forward_product.target,
            s.leak,
            s.leak_bound,
            s.block_defect
        ),
    };

    let inst = compose_construction(assembly).unwrap();
    let r = inst.certify().unwrap();
    let toy_gap = toy_word_gap(rng);
    let fidelity = match r.fidelity {
        Fidelity::Checked { max_gap } => format!("flattened gap {max_gap:.2e}"),
        Fidelity::TooLong { ln_length } => format!("flattened word has length e^{ln_length:.1}, not applied"),
    };
    let used: Vec<String> = r.generators_used.iter().map(u8::to_string).collect();
    let v4 = Verdict {
        id: 4,
        pass: r.marks_pass() && r.non_cauchy.pass() && r.generators_used == [1, 2, 3] && r.fidelity_pass(),
        detail: format!(
            "K=1: stage distances {} {:?}, non-cauchy {} (min {:.4}), generators {{{}}}, fidelity {} ({fidelity}; toy word gap {toy_gap:.1e})",
            r.marks_pass(),
            r.marks.iter().map(|(m, b)| format!("{m:.4}<={b:.4}")).collect::<Vec<_>>(),
            r.non_cauchy.pass(),
            r.non_cauchy.min_pairwise,
            used.join(","),
            r.fidelity_pass(),
        ),
    };

    vec![v4, v5]
}

fn criterion_7() -> Verdict {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut bytes = Vec::new();
    for d in &dirs {
        let cfg = ExperimentConfig {
            stages: 1,
            reserve: 8,
            eps_scale: 1.0,
            dimension_cap: 1024,
            output_dir: d.path().to_path_buf(),
            emit_trajectory: true,
            seed: 0,
        };
        run_experiment(&cfg).unwrap();
        let report = std::fs::read(d.path().join("report.jsonl")).unwrap();
        let traj = std::fs::read(d.path().join("trajectory.csv")).unwrap();
        bytes.push((report, traj));
    }
    Verdict {
        id: 7,
        pass: bytes[0] == bytes[1],
        detail: format!(
            "report {} bytes, trajectory {} bytes, identical: {}",
            bytes[0].0.len(),
            bytes[0].1.len(),
            bytes[0] == bytes[1]
        ),
    }
}

fn random_contraction(rng: &mut ChaCha8Rng, dim: usize) -> LinOp {
    let a: LinOp = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
    let s = (&a + a.transpose()) * 0.5;
    let norm = s.symmetric_eigenvalues().iter().fold(0.0f64, |m, v: &f64| m.max(v.abs()));
    s / (norm * rng.gen_range(1.0..1.05))
}

fn criterion_6(rng: &mut ChaCha8Rng) -> Verdict {
    let cases = 120;
    let mut worst_power: f64 = 0.0;
    for case in 0..cases {
        let dim = rng.gen_range(1..=16);
        let t = random_contraction(rng, dim);
        let n: u64 = if case % 10 == 0 { 10_000 } else { rng.gen_range(0..=10_000) };
        let fast = spectral_power(&t, n).unwrap();
        let slow = (0..n).fold(LinOp::identity(dim, dim), |acc, _| &t * acc);
        worst_power = worst_power.max((fast - slow).abs().max());
    }
    let mut worst_angle: f64 = 0.0;
    for _ in 0..cases {
        let dim = rng.gen_range(2..=16);
        let rank = rng.gen_range(1..dim);
        let p = projection_on_columns(&random_orthogonal(rng, dim), 0..rank);
        let q = projection_on_columns(&random_orthogonal(rng, dim), 0..rank);
        let largest = principal_angles(&p, &q).unwrap().into_iter().fold(0.0, f64::max);
        worst_angle = worst_angle.max((proj_distance(&p, &q).unwrap() - largest.sin()).abs());
    }
    Verdict {
        id: 6,
        pass: worst_power <= 1e-8 && worst_angle <= 1e-8,
        detail: format!("{cases}+{cases} cases, power gap {worst_power:.2e}, distance vs sine gap {worst_angle:.2e}"),
    }
}

fn main() -> ExitCode {
    let mut rng = ChaCha8Rng::seed_from_u64(20261014);
    let mut verdicts = vec![criterion_1(&mut rng), criterion_2(), criterion_3()];
    verdicts.extend(criteria_4_5(&mut rng));
    verdicts.push(criterion_7());
    verdicts.push(criterion_6(&mut rng));
    verdicts.sort_by_key(|v| v.id);
    let mut surprises = 0;
    for v in &verdicts {
        let expected = !KNOWN_RED.contains(&v.id);
        let note = match (v.pass, expected) {
            (true, true) | (false, false) => "",
            (true, false) => " [unexpected pass: update KNOWN_RED]",
            (false, true) => " [regression]",
        };
        if v.pass != expected {
            surprises += 1;
        }
        println!("{} criterion {}: {}{note}", if v.pass { "PASS" } else { "FAIL" }, v.id, v.detail);
    }
    if surprises == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
