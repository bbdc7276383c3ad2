//! End-to-end driver: resolve a configuration (file plus flag overrides),
//! build or load the instance, sparsify, run the rounds, optionally finish,
//! verify, and write every artifact with shared provenance.

use crate::args::{KindArg, ModeArg, PipelineArgs};
use crate::run_cmds::write_trace_jsonl;
use crate::util::{
    config_hash, design_err, ensure_dir, mean_degree, measured_schedule, read_configs, read_graph,
    read_json_or_toml, skip_finisher, sparsify_err, stage, tolerant_finisher, usage, verify_err,
    write_json, write_json_with_provenance, CliError, MeasuredOverrides,
};
use hgmatch::designs::{self, BlockConfigDetector, BlockHost, SearchLimits};
use hgmatch::verify::{
    verify_matching_output, verify_no_configurations, verify_partial_design, VerificationReport,
};
use hgmatch::{
    rng, run_bipartite, run_nibble, ConfigDetector, ConfigHypergraph, DeletionExtent, Hypergraph,
    Matching, Provenance, ScheduleMode, SparsifyReport,
};
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::path::PathBuf;

/// Stage separator mixed into the master seed for the round stage, so the
/// sparsifier and the rounds never share a coin stream.
const ROUNDS_STAGE: u64 = 0x726f_756e_6473; // "rounds"

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HostFamily {
    Steiner,
    Partite,
}

/// Built-instance parameters; exactly one of this or the graph/configs file
/// pair identifies the instance.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceParams {
    pub kind: HostFamily,
    pub n: u32,
    pub q: u32,
    pub r: u32,
}

fn default_g() -> u32 {
    4
}
fn default_beta() -> f64 {
    0.5
}
fn default_true() -> bool {
    true
}
fn default_max_steps() -> u64 {
    4_000_000_000
}

/// The single-file pipeline configuration. Unknown keys are rejected so
/// typos fail loudly; every field has a flag of the same name that wins.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<InstanceParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub configs: Option<PathBuf>,
    #[serde(default = "default_g")]
    pub g: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<ScheduleMode>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default = "default_true")]
    pub sparsify: bool,
    #[serde(default)]
    pub extent: DeletionExtent,
    /// Degree scale handed to the sparsifier (default: the built instance's
    /// regular degree, or the measured mean for file instances).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounds: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_a0: Option<f64>,
    #[serde(default = "default_true")]
    pub finish: bool,
    #[serde(default = "default_true")]
    pub verify: bool,
    /// Exhaustive configuration scan of built designs (default: on for built
    /// instances).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exhaustive: Option<bool>,
    #[serde(default = "default_max_steps")]
    pub max_verify_steps: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            instance: None,
            graph: None,
            configs: None,
            g: default_g(),
            mode: None,
            seed: 0,
            beta: default_beta(),
            alpha: None,
            sparsify: true,
            extent: DeletionExtent::default(),
            d: None,
            rounds: None,
            epsilon: None,
            w0: None,
            gamma0: None,
            d_a0: None,
            finish: true,
            verify: true,
            exhaustive: None,
            max_verify_steps: default_max_steps(),
            out: None,
        }
    }
}

/// File config overlaid with flags (flags win field by field).
fn resolve(a: &PipelineArgs) -> Result<PipelineConfig, CliError> {
    let mut cfg: PipelineConfig = match &a.config {
        Some(path) => read_json_or_toml(path)?,
        None => PipelineConfig::default(),
    };
    if a.kind.is_some() || a.n.is_some() || a.q.is_some() || a.r.is_some() {
        let prev = cfg.instance;
        let kind = a.kind.map(|k| match k {
            KindArg::Steiner => HostFamily::Steiner,
            KindArg::Partite => HostFamily::Partite,
        });
        cfg.instance = Some(InstanceParams {
            kind: kind.or(prev.map(|p| p.kind)).ok_or_else(|| {
                usage("instance kind missing: pass --kind steiner|partite or set it in the config")
            })?,
            n: a.n.or(prev.map(|p| p.n)).ok_or_else(|| usage("instance needs --n"))?,
            q: a.q.or(prev.map(|p| p.q)).ok_or_else(|| usage("instance needs --q"))?,
            r: a.r.or(prev.map(|p| p.r)).ok_or_else(|| usage("instance needs --r"))?,
        });
    }
    if let Some(p) = &a.graph {
        cfg.graph = Some(p.clone());
    }
    if let Some(p) = &a.configs {
        cfg.configs = Some(p.clone());
    }
    if let Some(v) = a.g {
        cfg.g = v;
    }
    if let Some(v) = a.mode {
        cfg.mode = Some(match v {
            ModeArg::Plain => ScheduleMode::Plain,
            ModeArg::Bipartite => ScheduleMode::Bipartite,
        });
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.beta {
        cfg.beta = v;
    }
    if let Some(v) = a.alpha {
        cfg.alpha = Some(v);
    }
    if let Some(v) = a.sparsify {
        cfg.sparsify = v;
    }
    if let Some(v) = a.extent {
        cfg.extent = crate::util::extent_of(v);
    }
    if let Some(v) = a.d {
        cfg.d = Some(v);
    }
    if let Some(v) = a.rounds {
        cfg.rounds = Some(v);
    }
    if let Some(v) = a.epsilon {
        cfg.epsilon = Some(v);
    }
    if let Some(v) = a.w0 {
        cfg.w0 = Some(v);
    }
    if let Some(v) = a.gamma0 {
        cfg.gamma0 = Some(v);
    }
    if let Some(v) = a.da0 {
        cfg.d_a0 = Some(v);
    }
    if let Some(v) = a.finish {
        cfg.finish = v;
    }
    if let Some(v) = a.verify {
        cfg.verify = v;
    }
    if let Some(v) = a.exhaustive {
        cfg.exhaustive = Some(v);
    }
    if let Some(v) = a.max_verify_steps {
        cfg.max_verify_steps = v;
    }
    if let Some(p) = &a.out {
        cfg.out = Some(p.clone());
    }

    match (&cfg.instance, &cfg.graph, &cfg.configs) {
        (Some(_), None, None) => {}
        (None, Some(_), Some(_)) => {}
        (None, None, None) => {
            return Err(usage(
                "no instance: set [instance] (or --kind/--n/--q/--r) or both --graph and --configs",
            ))
        }
        (Some(_), _, _) => {
            return Err(usage("choose one instance source: built parameters or files, not both"))
        }
        _ => return Err(usage("file instances need both --graph and --configs")),
    }
    if cfg.out.is_none() {
        return Err(usage("output directory missing: pass --out or set it in the config"));
    }
    Ok(cfg)
}

/// The nibble-ready instance plus whatever is needed to translate back.
struct Instance {
    graph: Hypergraph,
    h: ConfigHypergraph,
    origin: Option<Vec<u32>>,
    sparsify_report: Option<SparsifyReport>,
    host: Option<BlockHost>,
    /// Ground of the `origin` edge ids (the pre-sparsification graph).
    base_graph: Hypergraph,
}

fn build_instance(cfg: &PipelineConfig, mode: ScheduleMode) -> Result<Instance, CliError> {
    match &cfg.instance {
        Some(inst) => {
            let host = match inst.kind {
                HostFamily::Steiner => designs::build_steiner_host(inst.n, inst.q, inst.r),
                HostFamily::Partite => designs::build_partite_host(inst.n, inst.q, inst.r),
            }
            .map_err(design_err)?;
            let base_graph = match (inst.kind, mode) {
                (HostFamily::Partite, ScheduleMode::Bipartite) => {
                    // Every block meets exactly one r-subset drawn from the
                    // first r parts; tag those as the chooser side.
                    let base = host.graph();
                    let side_a: Vec<u32> = (0..inst.n.pow(inst.r)).collect();
                    let edges: Vec<Vec<u32>> =
                        (0..base.num_edges()).map(|e| base.edge(e).to_vec()).collect();
                    Hypergraph::bipartite(base.num_vertices(), edges, &side_a)
                        .map_err(|e| stage(format!("tagging partite chooser side: {e}")))?
                }
                (HostFamily::Steiner, ScheduleMode::Bipartite) => {
                    return Err(usage(
                        "bipartite mode needs a chooser side; the steiner instance has none \
                         (use --mode plain)",
                    ))
                }
                _ => host.graph().clone(),
            };
            let detector = BlockConfigDetector::new(&host, cfg.g, SearchLimits::default())
                .map_err(design_err)?;
            if cfg.sparsify {
                let d = cfg.d.unwrap_or_else(|| host.regular_degree() as f64).max(1.0);
                let (sg, sh, origin, report) = hgmatch::sparsify(
                    &base_graph,
                    &detector,
                    d,
                    cfg.beta,
                    cfg.g,
                    cfg.seed,
                    cfg.extent,
                )
                .map_err(sparsify_err)?;
                Ok(Instance {
                    graph: sg,
                    h: sh,
                    origin: Some(origin),
                    sparsify_report: Some(report),
                    host: Some(host),
                    base_graph,
                })
            } else {
                let all_ids: Vec<u32> = (0..base_graph.num_edges()).collect();
                let configs = detector.configs_among(&all_ids).map_err(design_err)?;
                let h = ConfigHypergraph::new(&base_graph, configs)
                    .map_err(|e| stage(format!("materializing configurations: {e}")))?;
                Ok(Instance {
                    graph: base_graph.clone(),
                    h,
                    origin: None,
                    sparsify_report: None,
                    host: Some(host),
                    base_graph,
                })
            }
        }
        None => {
            let gpath = cfg.graph.as_ref().expect("validated");
            let hpath = cfg.configs.as_ref().expect("validated");
            let base_graph = read_graph(gpath)?;
            let h0 = read_configs(hpath, &base_graph)?;
            if cfg.sparsify {
                let d = cfg.d.unwrap_or_else(|| mean_degree(&base_graph)).max(1.0);
                let detector = designs::ExplicitDetector::new(&h0);
                let (sg, sh, origin, report) = hgmatch::sparsify(
                    &base_graph,
                    &detector,
                    d,
                    cfg.beta,
                    cfg.g,
                    cfg.seed,
                    cfg.extent,
                )
                .map_err(sparsify_err)?;
                Ok(Instance {
                    graph: sg,
                    h: sh,
                    origin: Some(origin),
                    sparsify_report: Some(report),
                    host: None,
                    base_graph,
                })
            } else {
                Ok(Instance {
                    graph: base_graph.clone(),
                    h: h0,
                    origin: None,
                    sparsify_report: None,
                    host: None,
                    base_graph,
                })
            }
        }
    }
}

pub fn pipeline(a: &PipelineArgs) -> Result<i32, CliError> {
    let cfg = resolve(a)?;
    let out = cfg.out.clone().expect("validated");
    ensure_dir(&out)?;
    ensure_dir(&out.join("instance"))?;

    // The hash covers everything that determines the artifacts; the output
    // path does not, so reruns into different directories compare equal.
    let mut resolved = serde_json::to_value(&cfg).expect("config serializes");
    resolved.as_object_mut().expect("config is an object").remove("out");
    let hash = config_hash(&resolved);
    let prov = |desc: &str| Provenance::new(cfg.seed, hash.clone(), desc.to_string());
    write_json(
        &out.join("resolved-config.json"),
        &json!({ "config": resolved, "provenance": prov("resolved pipeline configuration") }),
    )?;

    let mode = cfg.mode.unwrap_or(match &cfg.instance {
        Some(InstanceParams { kind: HostFamily::Partite, .. }) => ScheduleMode::Bipartite,
        _ => ScheduleMode::Plain,
    });

    // Stage: instance (with sparsification unless disabled).
    let inst = build_instance(&cfg, mode)?;
    write_json_with_provenance(
        &out.join("instance/G.json"),
        &inst.graph,
        &prov("ground hypergraph the rounds run on"),
    )?;
    write_json_with_provenance(
        &out.join("instance/H.json"),
        &inst.h,
        &prov("configurations the rounds avoid"),
    )?;
    if let Some(origin) = &inst.origin {
        write_json(
            &out.join("instance/origin.json"),
            &json!({
                "origin": origin,
                "provenance": prov("edge ids of the surviving edges in the input graph"),
            }),
        )?;
    }
    if let Some(report) = &inst.sparsify_report {
        write_json_with_provenance(
            &out.join("sparsify-report.json"),
            report,
            &prov("sparsification stage report"),
        )?;
        println!(
            "sparsify: {} of {} edges survive, {} configurations remain",
            report.surviving_edges, report.input_edges, report.surviving_configs
        );
    } else {
        println!("sparsify: skipped");
    }

    // Stage: rounds (plus the finisher on bipartite instances).
    let overrides = MeasuredOverrides {
        rounds: cfg.rounds,
        epsilon: cfg.epsilon,
        w: cfg.w0,
        gamma: cfg.gamma0,
        d_a: cfg.d_a0,
        d: None,
    };
    let schedule = measured_schedule(&inst.graph, mode, overrides)?;
    let rounds_seed = rng::round_seed(cfg.seed, ROUNDS_STAGE);
    let (matching, trace) = match mode {
        ScheduleMode::Plain => run_nibble(&inst.graph, &inst.h, &schedule, rounds_seed),
        ScheduleMode::Bipartite if cfg.finish => {
            run_bipartite(&inst.graph, &inst.h, &schedule, rounds_seed, tolerant_finisher)
        }
        ScheduleMode::Bipartite => {
            run_bipartite(&inst.graph, &inst.h, &schedule, rounds_seed, skip_finisher)
        }
    }
    .map_err(crate::util::nibble_err)?;
    write_json_with_provenance(
        &out.join("trace.json"),
        &trace,
        &prov("full per-round record of the run"),
    )?;
    write_trace_jsonl(&out.join("trace.jsonl"), &trace)?;
    println!(
        "rounds: {} edges matched over {} rounds ({}){}",
        matching.edge_ids().len(),
        trace.rounds.len(),
        trace.stop_reason,
        match trace.a_perfect {
            Some(true) => ", A-perfect",
            Some(false) => ", not A-perfect",
            None => "",
        },
    );

    // Translate back to the pre-sparsification ground where needed.
    let base_ids: Vec<u32> = match &inst.origin {
        Some(origin) => {
            let mut ids: Vec<u32> =
                matching.edge_ids().iter().map(|&e| origin[e as usize]).collect();
            ids.sort_unstable();
            ids
        }
        None => matching.edge_ids().to_vec(),
    };
    let base_matching = Matching::new(&inst.base_graph, &base_ids)
        .map_err(|e| stage(format!("translated matching is inconsistent: {e}")))?;
    let mut matching_doc = serde_json::to_value(&matching).expect("matching serializes");
    let doc = matching_doc.as_object_mut().expect("matching is an object");
    if inst.origin.is_some() {
        doc.insert("base_edge_ids".into(), json!(base_matching.edge_ids()));
    }
    if let Some(ap) = trace.a_perfect {
        doc.insert("a_perfect".into(), json!(ap));
    }
    doc.insert("provenance".into(), json!(prov("matching produced by the rounds")));
    write_json(&out.join("matching.json"), &matching_doc)?;

    // Stage: package the design for built instances.
    let design = inst.host.as_ref().map(|host| {
        host.design_from_matching(
            &base_matching,
            cfg.g,
            prov("blocks of the matching, as point sets"),
        )
    });
    if let Some(design) = &design {
        write_json(&out.join("design.json"), design)?;
        println!("design: {} blocks on {} points", design.blocks.len(), design.n);
    }

    // Stage: verification.
    let mut all_passed = true;
    let mut checks: Vec<VerificationReport> = Vec::new();
    if cfg.verify {
        let require_a_perfect =
            mode == ScheduleMode::Bipartite && trace.a_perfect == Some(true);
        checks.push(
            verify_matching_output(&inst.graph, &inst.h, matching.edge_ids(), require_a_perfect)
                .map_err(verify_err)?,
        );
        if let Some(design) = &design {
            checks.push(verify_partial_design(design).map_err(verify_err)?);
            if cfg.exhaustive.unwrap_or(true) {
                checks.push(
                    verify_no_configurations(design, cfg.max_verify_steps).map_err(verify_err)?,
                );
            }
        }
        all_passed = checks.iter().all(|c| c.passed);
        write_json(
            &out.join("verification.json"),
            &json!({
                "all_passed": all_passed,
                "checks": checks,
                "provenance": prov("independent re-checks of the run's outputs"),
            }),
        )?;
        for c in &checks {
            println!("verify: {} ... {}", c.check, if c.passed { "passed" } else { "FAILED" });
        }
    } else {
        println!("verify: skipped");
    }

    write_json(
        &out.join("report.json"),
        &json!({
            "mode": mode,
            "stage_seeds": { "sparsify": cfg.seed, "rounds": rounds_seed },
            "instance": {
                "vertices": inst.graph.num_vertices(),
                "edges": inst.graph.num_edges(),
                "configs": inst.h.num_configs(),
            },
            "sparsify": inst.sparsify_report,
            "rounds": {
                "rounds_used": trace.rounds.len(),
                "stop_reason": trace.stop_reason,
                "matched_edges": matching.edge_ids().len(),
                "a_perfect": trace.a_perfect,
                "finisher": trace.finisher,
            },
            "design_blocks": design.as_ref().map(|d| d.blocks.len()),
            "verification": if cfg.verify {
                json!({ "all_passed": all_passed, "checks": checks.len() })
            } else {
                serde_json::Value::Null
            },
            "provenance": prov("pipeline summary"),
        }),
    )?;

    Ok(if all_passed { 0 } else { 1 })
}
