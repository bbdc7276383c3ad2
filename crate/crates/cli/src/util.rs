//! Shared plumbing: error-to-exit-code mapping, deterministic JSON artifact
//! I/O with embedded provenance, and measured round-parameter derivation.

use hgmatch::designs::DesignError;
use hgmatch::finish::FinishError;
use hgmatch::nibble::NibbleError;
use hgmatch::sparsify::SparsifyError;
use hgmatch::verify::VerifyError;
use hgmatch::{
    ConfigHypergraph, Hypergraph, NibbleParams, NibbleSchedule, Provenance, RawConfigs,
    ScheduleMode,
};
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::fmt::Display;
use std::path::Path;

/// Failures split by the exit code they map to: usage and configuration
/// problems exit 2, stage failures exit 3 (verification failures exit 1 but
/// are ordinary outcomes, not errors).
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Stage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Stage(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Stage(m) => m,
        }
    }
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn stage(msg: impl Into<String>) -> CliError {
    CliError::Stage(msg.into())
}

/// Parameter validation failures are the caller's mistake; exceeded search
/// guards mean the stage gave up on a well-formed request.
pub fn design_err(e: DesignError) -> CliError {
    match e {
        DesignError::GuardExceeded { .. } => stage(e.to_string()),
        _ => usage(e.to_string()),
    }
}

pub fn sparsify_err(e: SparsifyError) -> CliError {
    match e {
        SparsifyError::BadParams(_) => usage(e.to_string()),
        _ => stage(e.to_string()),
    }
}

pub fn nibble_err(e: NibbleError) -> CliError {
    match e {
        NibbleError::BadParams(_) | NibbleError::BadSchedule(_) | NibbleError::EmptyTrace => {
            usage(e.to_string())
        }
        _ => stage(e.to_string()),
    }
}

pub fn finish_err(e: FinishError) -> CliError {
    match e {
        FinishError::BudgetExhausted(_) => stage(e.to_string()),
        _ => usage(e.to_string()),
    }
}

pub fn verify_err(e: VerifyError) -> CliError {
    match e {
        VerifyError::GuardExceeded { .. } => stage(e.to_string()),
        VerifyError::BadInput(_) => usage(e.to_string()),
    }
}

fn file_err(action: &str, path: &Path, e: impl Display) -> CliError {
    usage(format!("cannot {action} {}: {e}", path.display()))
}

// ---------------------------------------------------------------------------
// Deterministic artifact I/O.

/// FNV-1a over the canonical JSON text of the resolved parameters; the hash
/// every artifact of a run carries in its provenance block.
pub fn config_hash(resolved: &serde_json::Value) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in resolved.to_string().as_bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| file_err("create directory", dir, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| file_err("write", path, e))
}

/// Pretty JSON with a trailing newline. Object keys serialize in sorted
/// order, so byte-identical reruns need only identical data.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| stage(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

/// Writes `value` with a `provenance` field spliced into its top-level
/// object, so every artifact records seed, config hash, and tool version
/// while staying readable under the plain schema.
pub fn write_json_with_provenance<T: Serialize>(
    path: &Path,
    value: &T,
    prov: &Provenance,
) -> Result<(), CliError> {
    let mut v = serde_json::to_value(value)
        .map_err(|e| stage(format!("cannot serialize {}: {e}", path.display())))?;
    let serde_json::Value::Object(map) = &mut v else {
        return Err(stage(format!("artifact {} is not a JSON object", path.display())));
    };
    map.insert(
        "provenance".to_string(),
        serde_json::to_value(prov).expect("provenance serializes"),
    );
    write_json(path, &v)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| file_err("read", path, e))?;
    serde_json::from_str(&text).map_err(|e| file_err("parse", path, e))
}

/// Reads a structure from JSON or, when the extension says so, TOML.
pub fn read_json_or_toml<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml")) {
        let text = std::fs::read_to_string(path).map_err(|e| file_err("read", path, e))?;
        toml::from_str(&text).map_err(|e| file_err("parse", path, e))
    } else {
        read_json(path)
    }
}

pub fn read_graph(path: &Path) -> Result<Hypergraph, CliError> {
    read_json(path)
}

pub fn read_configs(path: &Path, ground: &Hypergraph) -> Result<ConfigHypergraph, CliError> {
    let raw: RawConfigs = read_json(path)?;
    raw.into_config_hypergraph(ground)
        .map_err(|e| usage(format!("configurations in {}: {e}", path.display())))
}

/// Selected-edge lists as written by the matching producers; extra fields
/// such as the provenance block are ignored.
#[derive(Debug, serde::Deserialize)]
pub struct MatchingDoc {
    pub edge_ids: Vec<u32>,
}

// ---------------------------------------------------------------------------
// Measured round parameters.

pub fn mean_degree(g: &Hypergraph) -> f64 {
    if g.num_vertices() == 0 {
        return 0.0;
    }
    let total: u64 = (0..g.num_edges()).map(|e| g.edge(e).len() as u64).sum();
    total as f64 / f64::from(g.num_vertices())
}

fn mean_side_a_degree(g: &Hypergraph) -> Option<f64> {
    let bip = g.bipartition()?;
    let side_a = bip.side_a();
    if side_a.is_empty() {
        return None;
    }
    let total: u64 = side_a.iter().map(|&a| g.incident_edges(a).len() as u64).sum();
    Some(total as f64 / side_a.len() as f64)
}

/// Per-field overrides for the measured schedule.
#[derive(Debug, Clone, Copy, Default)]
pub struct MeasuredOverrides {
    pub rounds: Option<u32>,
    pub epsilon: Option<f64>,
    pub w: Option<f64>,
    pub gamma: Option<f64>,
    pub d_a: Option<f64>,
    pub d: Option<f64>,
}

/// Builds a constant-parameter schedule from the instance itself: degree
/// scale = mean degree (floored at 1), flips off (w = 0: edges leave only by
/// conflicting with a committed edge, which maximizes fill), and enough
/// rounds that the run usually stops by exhausting the residual instead.
/// Suited to desk scales, where the mean degree is far too small for the
/// derived schedules; pass a spec file for the derived large-scale form.
pub fn measured_schedule(
    g: &Hypergraph,
    mode: ScheduleMode,
    ov: MeasuredOverrides,
) -> Result<NibbleSchedule, CliError> {
    let d = ov.d.unwrap_or_else(|| mean_degree(g)).max(1.0);
    let w = ov.w.unwrap_or(0.0);
    let epsilon = ov.epsilon.unwrap_or_else(|| if w > 0.0 { 0.3f64.min(0.2 / w) } else { 0.2 });
    let d_a = match mode {
        ScheduleMode::Plain => None,
        ScheduleMode::Bipartite => Some(
            ov.d_a
                .or_else(|| mean_side_a_degree(g))
                .ok_or_else(|| usage("bipartite rounds need a bipartite instance"))?
                .max(1.0),
        ),
    };
    let params = NibbleParams { d, epsilon, w, gamma: ov.gamma.unwrap_or(0.0), d_a };
    params.validate().map_err(nibble_err)?;
    let rounds = ov.rounds.unwrap_or(32).max(1);
    Ok(NibbleSchedule {
        mode,
        rounds: vec![params; rounds as usize],
        stop_index: rounds,
        hand_tuned: true,
        warnings: Vec::new(),
    })
}

/// Finisher that tolerates choosers with no remaining edges: they make an
/// A-perfect completion impossible, which is an outcome to report, not an
/// error to die on. The others still get completed, by re-running the
/// resampler with the stranded choosers moved off the chooser side (they are
/// isolated, so no edge changes sides). Budget exhaustion is likewise an
/// incomplete outcome, not an error.
pub fn tolerant_finisher(
    g: &Hypergraph,
    h: &ConfigHypergraph,
    seed: u64,
) -> Result<hgmatch::FinisherOutcome, NibbleError> {
    let Some(bip) = g.bipartition() else {
        return hgmatch::finish_for_nibble(g, h, seed);
    };
    let (kept, stranded): (Vec<u32>, Vec<u32>) =
        bip.side_a().into_iter().partition(|&a| !g.incident_edges(a).is_empty());
    if stranded.is_empty() {
        return hgmatch::finish_for_nibble(g, h, seed);
    }
    let detail_base = serde_json::json!({ "deficient_choosers": stranded.len() });
    if kept.is_empty() {
        return Ok(hgmatch::FinisherOutcome {
            chosen: Vec::new(),
            complete: false,
            detail: detail_base,
        });
    }
    let edges: Vec<Vec<u32>> = (0..g.num_edges()).map(|e| g.edge(e).to_vec()).collect();
    let reduced = Hypergraph::bipartite(g.num_vertices(), edges, &kept)
        .map_err(|e| NibbleError::BadFinish(format!("re-siding stranded choosers: {e}")))?;
    let reduced_h =
        ConfigHypergraph::new(&reduced, h.iter_configs().map(<[u32]>::to_vec).collect())
            .map_err(|e| NibbleError::BadFinish(format!("re-grounding configurations: {e}")))?;
    match hgmatch::finish_matching(&reduced, &reduced_h, seed, None) {
        Ok(success) => Ok(hgmatch::FinisherOutcome {
            chosen: success.matching.edge_ids().to_vec(),
            complete: false,
            detail: serde_json::json!({
                "deficient_choosers": stranded.len(),
                "completed_choosers": kept.len(),
                "resamples": success.resamples,
                "warnings": success.warnings,
            }),
        }),
        Err(FinishError::BudgetExhausted(fail)) => Ok(hgmatch::FinisherOutcome {
            chosen: Vec::new(),
            complete: false,
            detail: serde_json::json!({
                "deficient_choosers": stranded.len(),
                "budget": fail.budget,
                "resamples": fail.resamples,
                "stuck_events": fail.stuck.len(),
            }),
        }),
        Err(e) => Err(NibbleError::BadFinish(e.to_string())),
    }
}

pub fn extent_of(e: crate::args::ExtentArg) -> hgmatch::DeletionExtent {
    match e {
        crate::args::ExtentArg::Members => hgmatch::DeletionExtent::Members,
        crate::args::ExtentArg::Links => hgmatch::DeletionExtent::Links,
    }
}

pub fn mode_of(m: crate::args::ModeArg) -> ScheduleMode {
    match m {
        crate::args::ModeArg::Plain => ScheduleMode::Plain,
        crate::args::ModeArg::Bipartite => ScheduleMode::Bipartite,
    }
}

/// Finisher used when completion is switched off.
pub fn skip_finisher(
    _g: &Hypergraph,
    _h: &ConfigHypergraph,
    _seed: u64,
) -> Result<hgmatch::FinisherOutcome, NibbleError> {
    Ok(hgmatch::FinisherOutcome {
        chosen: Vec::new(),
        complete: false,
        detail: serde_json::json!({ "skipped": true }),
    })
}
