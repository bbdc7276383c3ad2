//! The verify subcommand: independent re-checks of designs and matchings,
//! exiting 1 when any check fails.

use crate::args::VerifyArgs;
use crate::util::{
    config_hash, ensure_dir, read_configs, read_graph, read_json, usage, verify_err, write_json,
    CliError, MatchingDoc,
};
use hgmatch::verify::{
    verify_matching_output, verify_no_configurations, verify_partial_design, VerificationReport,
};
use hgmatch::{DesignInstance, Provenance};
use serde_json::json;

pub fn verify(a: &VerifyArgs) -> Result<i32, CliError> {
    let mut checks: Vec<VerificationReport> = Vec::new();
    match (&a.design, &a.graph) {
        (Some(_), Some(_)) => {
            return Err(usage("pass either --design or --graph/--configs/--matching, not both"))
        }
        (None, None) => {
            return Err(usage(
                "nothing to check: pass --design, or --graph with --configs and --matching",
            ))
        }
        (Some(design_path), None) => {
            let design: DesignInstance = read_json(design_path)?;
            checks.push(verify_partial_design(&design).map_err(verify_err)?);
            if !a.no_exhaustive {
                checks.push(verify_no_configurations(&design, a.max_steps).map_err(verify_err)?);
            }
        }
        (None, Some(graph_path)) => {
            // Clap enforces that --configs and --matching come along.
            let g = read_graph(graph_path)?;
            let h = read_configs(a.configs.as_ref().expect("required by clap"), &g)?;
            let m: MatchingDoc = read_json(a.matching.as_ref().expect("required by clap"))?;
            checks.push(
                verify_matching_output(&g, &h, &m.edge_ids, a.require_a_perfect)
                    .map_err(verify_err)?,
            );
        }
    }

    let all_passed = checks.iter().all(|c| c.passed);
    for c in &checks {
        println!("check {} ... {}", c.check, if c.passed { "passed" } else { "FAILED" });
        if !c.passed {
            if let Some(w) = &c.witness {
                println!("  witness: {w}");
            }
        }
    }

    if let Some(out) = &a.out {
        let resolved = json!({
            "command": "verify",
            "design": a.design.as_ref().map(|p| p.display().to_string()),
            "graph": a.graph.as_ref().map(|p| p.display().to_string()),
            "configs": a.configs.as_ref().map(|p| p.display().to_string()),
            "matching": a.matching.as_ref().map(|p| p.display().to_string()),
            "no_exhaustive": a.no_exhaustive,
            "max_steps": a.max_steps,
            "require_a_perfect": a.require_a_perfect,
        });
        let prov = Provenance::new(
            0,
            config_hash(&resolved),
            "independent re-checks of the named artifacts",
        );
        if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
            ensure_dir(dir)?;
        }
        write_json(
            &out,
            &json!({ "all_passed": all_passed, "checks": checks, "provenance": prov }),
        )?;
    }

    Ok(if all_passed { 0 } else { 1 })
}
