//! Runs the construction for one configuration and collects its certificates.

use std::fs;
use std::io;

use triproj::assembly::transport::HYPOTHESIS_TOL;
use triproj::assembly::{
    assemble_sequence, compose_construction, run_trajectory, Fidelity, LevelTag, SequenceAssembly, ToleranceSchedule,
    TrajectoryRow,
};

use crate::config::ExperimentConfig;
use crate::report::{render_report, render_trajectory, Record};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CERTIFICATE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

pub const REPORT_FILE: &str = "report.jsonl";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub records: Vec<Record>,
    pub trajectory: Option<Vec<TrajectoryRow>>,
}

/// Every record that carries a verdict passed.
pub fn all_pass(records: &[Record]) -> bool {
    records.iter().all(|r| r.pass() != Some(false))
}

pub fn exit_code_for(records: &[Record]) -> i32 {
    if all_pass(records) {
        EXIT_PASS
    } else {
        EXIT_CERTIFICATE
    }
}

/// Builds, certifies and writes `report.jsonl` (and `trajectory.csv` when asked).
pub fn run_experiment(cfg: &ExperimentConfig) -> io::Result<RunOutcome> {
    let (mut records, trajectory) = certify(cfg);
    let pass = all_pass(&records);
    let exit_code = exit_code_for(&records);
    records.push(Record::new("summary").with("overall_pass", pass).with("exit_code", exit_code as u64));
    fs::create_dir_all(&cfg.output_dir)?;
    fs::write(cfg.output_dir.join(REPORT_FILE), render_report(&records))?;
    if let Some(rows) = trajectory.as_ref().filter(|_| cfg.emit_trajectory) {
        fs::write(cfg.output_dir.join(TRAJECTORY_FILE), render_trajectory(rows))?;
    }
    Ok(RunOutcome { exit_code, records, trajectory })
}

fn failure(step: &'static str, err: impl ToString) -> Record {
    Record::new("construction").with("step", step).with("error", err.to_string()).with("pass", false)
}

/// All certificate records, plus the trajectory when the construction completes.
pub fn certify(cfg: &ExperimentConfig) -> (Vec<Record>, Option<Vec<TrajectoryRow>>) {
    let mut records = vec![Record::new("config")
        .with("stages", cfg.stages)
        .with("reserve", cfg.reserve)
        .with("eps_scale", cfg.eps_scale)
        .with("dimension_cap", cfg.dimension_cap)
        .with("emit_trajectory", cfg.emit_trajectory)
        .with("seed", cfg.seed)
        .with("eps_rule", "eps_i = eps_scale / (4 * 2^i)")];

    let tol = match ToleranceSchedule::new(cfg.stages, cfg.eps_scale) {
        Ok(t) => t,
        Err(e) => {
            records.push(failure("tolerances", e));
            return (records, None);
        }
    };
    let assembly = match assemble_sequence(tol, cfg.reserve, cfg.dimension_cap) {
        Ok(a) => a,
        Err(e) => {
            records.push(failure("assembly", e));
            return (records, None);
        }
    };
    plan_records(&assembly, &mut records);
    match assembly.certify() {
        Ok(report) => {
            for s in &report.stages {
                let hyp = s
                    .backward_steps
                    .iter()
                    .chain(&s.forward_steps)
                    .chain(std::iter::once(&s.backward_product))
                    .flat_map(|c| c.hypotheses.iter().map(|(_, v)| *v))
                    .fold(0.0, f64::max);
                let exact = s.backward_steps.iter().map(|c| c.measured).fold(0.0, f64::max);
                let bounded = s.forward_steps.iter().map(|c| c.measured).fold(0.0, f64::max);
                let bounded_threshold = s.forward_steps.first().map_or(0.0, |c| c.threshold);
                records.push(
                    Record::new("transport")
                        .with("stage", s.stage)
                        .with("max_hypothesis_residual", hyp)
                        .with("hypothesis_tolerance", HYPOTHESIS_TOL)
                        .with("exact_step_max", exact)
                        .with("exact_threshold", s.backward_steps.first().map_or(0.0, |c| c.threshold))
                        .with("bounded_step_max", bounded)
                        .with("bounded_threshold", bounded_threshold)
                        .with("exact_product", s.backward_product.measured)
                        .with("exact_product_threshold", s.backward_product.threshold)
                        .with("bounded_product", s.forward_product.measured)
                        .with("bounded_product_target", s.forward_product.target)
                        .with("worst_factor_defect", s.forward_product.worst_defect)
                        .with("gamma", s.forward_product.gamma)
                        .with("telescoped_bound", s.forward_product.telescoped_bound)
                        .with("leak", s.leak)
                        .with("leak_bound", s.leak_bound)
                        .with("block_defect", s.block_defect)
                        .with("pass", s.pass()),
                );
            }
            records.push(
                Record::new("ordering")
                    .with("levels", assembly.levels.len())
                    .with("detail", report.ordering.clone().err().unwrap_or_default())
                    .with("pass", report.ordering.is_ok()),
            );
            records.push(
                Record::new("tolerances")
                    .with("reserve_rank", report.reserve_rank)
                    .with("pass", report.tolerances_consistent),
            );
            for (idx, (residual, eps)) in report.residuals.iter().enumerate() {
                records.push(
                    Record::new("chain_residual")
                        .with("i", idx + 1)
                        .with("residual", *residual)
                        .with("eps", *eps)
                        .with("pass", residual < eps),
                );
            }
        }
        Err(e) => records.push(failure("sequence certificate", e)),
    }

    let inst = match compose_construction(assembly) {
        Ok(i) => i,
        Err(e) => {
            records.push(failure("composition", e));
            return (records, None);
        }
    };
    let report = match inst.certify() {
        Ok(r) => r,
        Err(e) => {
            records.push(failure("word certificate", e));
            return (records, None);
        }
    };
    for (level, (err, delta)) in report.level_errors.iter().enumerate() {
        let p = &inst.interp.schedule.exponents[level];
        records.push(
            Record::new("interp_level")
                .with("level", level + 1)
                .with("error", *err)
                .with("delta", *delta)
                .with("ln_exponent", p.ln())
                .with("exponent_digits", p.digits())
                .with("pass", err < delta),
        );
    }
    records.push(
        Record::new("interp_spectrum")
            .with("defect", report.spectrum_defect)
            .with("pass", report.spectrum_defect <= 1e-9),
    );
    let used: Vec<String> = report.generators_used.iter().map(u8::to_string).collect();
    records.push(
        Record::new("generators")
            .with("used", used.join(","))
            .with("plane_defect", report.generator_defects[0])
            .with("top_defect", report.generator_defects[1])
            .with("interp_defect", report.generator_defects[2])
            .with("pass", report.generators_used == [1, 2, 3] && report.generator_defects.iter().all(|&d| d <= 1e-9)),
    );
    for (d, chain) in report.defects.iter().zip(&inst.assembly.chains) {
        records.push(
            Record::new("substitution")
                .with("i", chain.index)
                .with("measured", d.measured)
                .with("target", d.target)
                .with("worst_defect", d.worst_defect)
                .with("delta", d.gamma)
                .with("telescoped_bound", d.telescoped_bound)
                .with("pass", d.pass()),
        );
    }
    for (idx, (dist, bound)) in report.marks.iter().enumerate() {
        records.push(
            Record::new("stage_distance")
                .with("i", idx + 1)
                .with("distance", *dist)
                .with("bound", *bound)
                .with("pass", *dist <= bound + 1e-12),
        );
    }
    records.push(Record::new("induction").with("pass", report.induction_holds));
    records.push(
        Record::new("non_cauchy")
            .with("min_pairwise", report.non_cauchy.min_pairwise)
            .with("threshold", report.non_cauchy.threshold)
            .with("pass", report.non_cauchy.pass()),
    );
    let digits = inst.word.flattened_len().to_string().len();
    let fidelity = match report.fidelity {
        Fidelity::Checked { max_gap } => Record::new("fidelity").with("status", "checked").with("max_gap", max_gap),
        Fidelity::TooLong { ln_length } => {
            Record::new("fidelity").with("status", "too_long").with("ln_flattened_length", ln_length)
        }
    };
    records.push(fidelity.with("flattened_length_digits", digits).with("pass", report.fidelity_pass()));

    let trajectory = run_trajectory(&inst).rows;
    (records, Some(trajectory))
}

fn plan_records(a: &SequenceAssembly, records: &mut Vec<Record>) {
    let plan = &a.plan;
    records.push(
        Record::new("plan")
            .with("total_dim", plan.total_dim)
            .with("top_rank", plan.top().len())
            .with("helpers", plan.helper_indices.len())
            .with("reserve", plan.reserve_indices.len())
            .with("levels", a.levels.len()),
    );
    for k in 1..=a.tol.stages {
        let mut forward_levels = 0usize;
        let mut backward_levels = 0usize;
        for l in &a.levels {
            match l.tag {
                LevelTag::Forward { stage, .. } if stage == k => forward_levels += 1,
                LevelTag::Backward { stage, .. } if stage == k => backward_levels += 1,
                _ => {}
            }
        }
        let sizes = plan.sizes(k);
        records.push(
            Record::new("plan_stage")
                .with("stage", k)
                .with("forward_steps", sizes.forward)
                .with("backward_steps", sizes.backward)
                .with("forward_levels", forward_levels)
                .with("backward_levels", backward_levels)
                .with("gamma", a.tol.gammas[k - 1])
                .with("eta", a.tol.eta(k)),
        );
        for (r, i, eps) in
            [(&a.forward[k - 1], 2 * k - 1, a.tol.forward_eps(k)), (&a.backward[k - 1], 2 * k, a.tol.backward_eps(k))]
        {
            let ln_max = r.plan.exponents.iter().map(|n| n.ln()).fold(0.0, f64::max);
            records.push(
                Record::new("ratchet")
                    .with("i", i)
                    .with("steps", r.plan.stage_count)
                    .with("residual", r.plan.residual)
                    .with("eps", eps)
                    .with("deviation", r.plan.deviation)
                    .with("deviation_bound", r.plan.deviation_bound)
                    .with("ln_max_exponent", ln_max)
                    .with("pass", r.plan.residual < eps),
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_code_follows_verdicts() {
        let ok = vec![Record::new("a").with("pass", true), Record::new("b").with("note", "x")];
        assert_eq!(exit_code_for(&ok), EXIT_PASS);
        let bad = vec![Record::new("a").with("pass", true), Record::new("b").with("pass", false)];
        assert_eq!(exit_code_for(&bad), EXIT_CERTIFICATE);
    }
}
