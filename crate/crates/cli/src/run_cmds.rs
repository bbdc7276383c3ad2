//! Single-stage runners: sparsify, nibble, finish, and trace diagnosis on
//! explicit instance files.

use crate::args::{DiagnoseArgs, FinishArgs, NibbleArgs, SparsifyArgs};
use crate::util::{
    config_hash, ensure_dir, extent_of, finish_err, mean_degree, measured_schedule, mode_of,
    nibble_err, read_configs, read_graph, read_json, read_json_or_toml, skip_finisher,
    sparsify_err, stage, tolerant_finisher, usage, write_json, write_json_with_provenance,
    CliError, MeasuredOverrides,
};
use hgmatch::designs::ExplicitDetector;
use hgmatch::finish::FinishError;
use hgmatch::nibble::{diagnostics, RoundStats};
use hgmatch::{
    finish_matching, make_schedule, run_bipartite, run_nibble, NibbleTrace, Provenance,
    ScheduleMode, ScheduleSpec,
};
use serde_json::json;

pub fn sparsify(a: &SparsifyArgs) -> Result<i32, CliError> {
    let g = read_graph(&a.graph)?;
    let h = read_configs(&a.configs, &g)?;
    let d = a.d.unwrap_or_else(|| mean_degree(&g)).max(1.0);
    let extent = extent_of(a.extent);
    let detector = ExplicitDetector::new(&h);
    let (sg, sh, origin, report) =
        hgmatch::sparsify(&g, &detector, d, a.beta, a.g, a.seed, extent).map_err(sparsify_err)?;

    let resolved = json!({
        "command": "sparsify",
        "graph": a.graph.display().to_string(),
        "configs": a.configs.display().to_string(),
        "d": d, "beta": a.beta, "g": a.g, "seed": a.seed,
        "extent": extent,
    });
    let prov = Provenance::new(
        a.seed,
        config_hash(&resolved),
        format!("random sparsification clearing configuration cycles up to length {}", a.g),
    );
    ensure_dir(&a.out)?;
    write_json_with_provenance(&a.out.join("G.json"), &sg, &prov)?;
    write_json_with_provenance(&a.out.join("H.json"), &sh, &prov)?;
    write_json(&a.out.join("origin.json"), &json!({ "origin": origin, "provenance": prov }))?;
    write_json_with_provenance(&a.out.join("report.json"), &report, &prov)?;
    println!(
        "sparsified: {} of {} edges survive, {} configurations, {} deleted -> {}",
        report.surviving_edges,
        report.input_edges,
        report.surviving_configs,
        report.deleted_edges,
        a.out.display()
    );
    Ok(0)
}

pub fn nibble(a: &NibbleArgs) -> Result<i32, CliError> {
    let g = read_graph(&a.graph)?;
    let h = read_configs(&a.configs, &g)?;

    let (schedule, schedule_source) = match &a.schedule {
        Some(path) => {
            let mut spec: ScheduleSpec = read_json_or_toml(path)?;
            if let Some(v) = a.rounds {
                spec.overrides.rounds = Some(v);
            }
            if let Some(v) = a.epsilon {
                spec.overrides.epsilon = Some(v);
            }
            if let Some(v) = a.w0 {
                spec.overrides.w0 = Some(v);
            }
            if let Some(v) = a.gamma0 {
                spec.overrides.gamma0 = Some(v);
            }
            if let Some(v) = a.da0 {
                spec.overrides.d_a0 = Some(v);
            }
            if let Some(v) = a.floor_degree {
                spec.overrides.floor_degree = v;
            }
            (make_schedule(&spec).map_err(nibble_err)?, "derived from spec")
        }
        None => {
            let ov = MeasuredOverrides {
                rounds: a.rounds,
                epsilon: a.epsilon,
                w: a.w0,
                gamma: a.gamma0,
                d_a: a.da0,
                d: None,
            };
            (measured_schedule(&g, mode_of(a.mode), ov)?, "measured from the instance")
        }
    };

    let (matching, trace) = match schedule.mode {
        ScheduleMode::Plain => run_nibble(&g, &h, &schedule, a.seed),
        ScheduleMode::Bipartite if a.finish => {
            run_bipartite(&g, &h, &schedule, a.seed, tolerant_finisher)
        }
        ScheduleMode::Bipartite => run_bipartite(&g, &h, &schedule, a.seed, skip_finisher),
    }
    .map_err(nibble_err)?;

    let resolved = json!({
        "command": "nibble",
        "graph": a.graph.display().to_string(),
        "configs": a.configs.display().to_string(),
        "schedule": a.schedule.as_ref().map(|p| p.display().to_string()),
        "mode": schedule.mode,
        "rounds": schedule.rounds.len(),
        "finish": a.finish,
        "seed": a.seed,
    });
    let prov = Provenance::new(
        a.seed,
        config_hash(&resolved),
        format!("avoiding matching grown by random rounds ({schedule_source})"),
    );
    ensure_dir(&a.out)?;
    write_json_with_provenance(&a.out.join("matching.json"), &matching, &prov)?;
    write_json_with_provenance(&a.out.join("trace.json"), &trace, &prov)?;
    write_trace_jsonl(&a.out.join("trace.jsonl"), &trace)?;
    if trace.rounds.is_empty() {
        write_json(&a.out.join("report.json"), &json!({ "rounds_used": 0, "provenance": prov }))?;
    } else {
        let report = diagnostics(&trace).map_err(nibble_err)?;
        write_json_with_provenance(&a.out.join("report.json"), &report, &prov)?;
    }
    println!(
        "nibble: {} edges matched over {} rounds ({}){} -> {}",
        matching.edge_ids().len(),
        trace.rounds.len(),
        trace.stop_reason,
        match trace.a_perfect {
            Some(true) => ", A-perfect",
            Some(false) => ", not A-perfect",
            None => "",
        },
        a.out.display()
    );
    Ok(0)
}

pub fn write_trace_jsonl(path: &std::path::Path, trace: &NibbleTrace) -> Result<(), CliError> {
    let file = std::fs::File::create(path)
        .map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
    trace
        .write_jsonl(std::io::BufWriter::new(file))
        .map_err(|e| stage(format!("cannot write {}: {e}", path.display())))
}

pub fn finish(a: &FinishArgs) -> Result<i32, CliError> {
    let g = read_graph(&a.graph)?;
    let h = read_configs(&a.configs, &g)?;

    let resolved = json!({
        "command": "finish",
        "graph": a.graph.display().to_string(),
        "configs": a.configs.display().to_string(),
        "budget": a.budget,
        "seed": a.seed,
    });
    let prov = Provenance::new(
        a.seed,
        config_hash(&resolved),
        "A-perfect avoiding matching found by local resampling",
    );
    ensure_dir(&a.out)?;
    match finish_matching(&g, &h, a.seed, a.budget) {
        Ok(success) => {
            write_json_with_provenance(&a.out.join("matching.json"), &success.matching, &prov)?;
            write_json_with_provenance(&a.out.join("assignment.json"), &success.assignment, &prov)?;
            write_json(
                &a.out.join("report.json"),
                &json!({
                    "complete": true,
                    "resamples": success.resamples,
                    "warnings": success.warnings,
                    "provenance": prov,
                }),
            )?;
            println!(
                "finish: A-perfect matching of {} edges after {} resamples -> {}",
                success.matching.edge_ids().len(),
                success.resamples,
                a.out.display()
            );
            Ok(0)
        }
        Err(FinishError::BudgetExhausted(fail)) => {
            let mut doc = serde_json::to_value(&*fail)
                .map_err(|e| stage(format!("cannot serialize failure report: {e}")))?;
            if let Some(map) = doc.as_object_mut() {
                map.insert("complete".into(), json!(false));
                map.insert("provenance".into(), json!(prov));
            }
            write_json(&a.out.join("report.json"), &doc)?;
            Err(stage(format!(
                "resampling budget of {} exhausted with {} stuck events (report written to {})",
                fail.budget,
                fail.stuck.len(),
                a.out.display()
            )))
        }
        Err(e) => Err(finish_err(e)),
    }
}

pub fn diagnose(a: &DiagnoseArgs) -> Result<i32, CliError> {
    let trace = if a.trace.extension().is_some_and(|e| e.eq_ignore_ascii_case("jsonl")) {
        let text = std::fs::read_to_string(&a.trace)
            .map_err(|e| usage(format!("cannot read {}: {e}", a.trace.display())))?;
        let mut rounds: Vec<RoundStats> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            rounds.push(serde_json::from_str(line).map_err(|e| {
                usage(format!("cannot parse {} line {}: {e}", a.trace.display(), i + 1))
            })?);
        }
        let mode = if rounds.iter().any(|r| r.params.d_a.is_some()) {
            ScheduleMode::Bipartite
        } else {
            ScheduleMode::Plain
        };
        NibbleTrace {
            mode,
            seed: 0,
            warnings: vec!["trace reassembled from per-round records; seed unknown".into()],
            stop_reason: "unknown (per-round records only)".into(),
            rounds,
            a_perfect: None,
            finisher: None,
        }
    } else {
        read_json::<NibbleTrace>(&a.trace)?
    };

    let report = diagnostics(&trace).map_err(nibble_err)?;
    for r in &report.per_round {
        println!(
            "round {:3}: degree {:9.4} predicted {:9.4} (ratio {}), weighted max {:8.4} \
             within budget {:8.4}: {}, matched fraction {:.4} (floor {:.4}): {}, clamped flips {}",
            r.round,
            r.mean_degree_observed,
            r.degree_predicted,
            r.degree_ratio.map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}")),
            r.max_weighted_observed,
            r.weight_budget,
            if r.within_weight_budget { "yes" } else { "NO" },
            r.matched_fraction,
            r.matched_fraction_floor,
            if r.meets_matched_floor { "yes" } else { "NO" },
            r.clamped_flips,
        );
    }
    println!(
        "{} rounds, {} clamped flips total, stop reason: {}",
        report.rounds_used, report.total_clamped_flips, trace.stop_reason
    );
    if let Some(out) = &a.out {
        let resolved = json!({
            "command": "diagnose",
            "trace": a.trace.display().to_string(),
        });
        let prov = Provenance::new(
            trace.seed,
            config_hash(&resolved),
            "per-round observed-versus-predicted comparison",
        );
        if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
            ensure_dir(dir)?;
        }
        write_json_with_provenance(out, &report, &prov)?;
    }
    Ok(0)
}
