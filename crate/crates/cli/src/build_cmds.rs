//! Artifact builders: the two block-design instances, the three lifts, and
//! B-side regularization. Each writes its outputs plus a report into one
//! directory, all stamped with the same provenance block.

use crate::args::{BuildArgs, KindArg, LiftDisjointArgs, LiftListArgs, RainbowArgs, RegularizeArgs};
use crate::util::{
    config_hash, design_err, ensure_dir, read_configs, read_graph, read_json, usage, write_json,
    write_json_with_provenance, CliError,
};
use hgmatch::designs::{self, SearchLimits};
use hgmatch::{lifts, EdgeColoring, Hypergraph, ListAssignment, Provenance};
use serde_json::json;

fn limits_from(max_configs: Option<u64>, max_steps: Option<u64>) -> SearchLimits {
    let mut limits = SearchLimits::default();
    if let Some(c) = max_configs {
        limits.max_configs = c;
    }
    if let Some(s) = max_steps {
        limits.max_steps = s;
    }
    limits
}

/// Builds either block-design instance and writes the ground hypergraph, its
/// configurations, the block table, and a build report.
pub fn build_design(kind: KindArg, a: &BuildArgs) -> Result<i32, CliError> {
    let limits = limits_from(a.max_configs, a.max_steps);
    let (host, h0) = match kind {
        KindArg::Steiner => designs::build_steiner_aux(a.n, a.q, a.r, a.g, limits),
        KindArg::Partite => designs::build_partite_aux(a.n, a.q, a.r, a.g, limits),
    }
    .map_err(design_err)?;

    // The partite host is bipartite: every block meets the r-subsets drawn
    // from the first r parts in exactly one vertex, so those form a chooser
    // side. Tag it so the bipartite driver can run on the files directly.
    let (graph, kind_name) = match kind {
        KindArg::Steiner => (host.graph().clone(), "steiner"),
        KindArg::Partite => {
            let base = host.graph();
            let side_a: Vec<u32> = (0..a.n.pow(a.r)).collect();
            let edges: Vec<Vec<u32>> = (0..base.num_edges()).map(|e| base.edge(e).to_vec()).collect();
            let g = Hypergraph::bipartite(base.num_vertices(), edges, &side_a)
                .map_err(|e| CliError::Stage(format!("tagging partite chooser side: {e}")))?;
            (g, "partite")
        }
    };
    let h = hgmatch::ConfigHypergraph::new(
        &graph,
        h0.iter_configs().map(<[u32]>::to_vec).collect(),
    )
    .map_err(|e| CliError::Stage(format!("re-grounding configurations: {e}")))?;

    let resolved = json!({
        "command": format!("build-{kind_name}"),
        "n": a.n, "q": a.q, "r": a.r, "g": a.g,
        "max_configs": limits.max_configs, "max_steps": limits.max_steps,
    });
    let prov = Provenance::new(
        0,
        config_hash(&resolved),
        format!("{kind_name} block instance with configurations up to size {}", a.g),
    );

    ensure_dir(&a.out)?;
    write_json_with_provenance(&a.out.join("G.json"), &graph, &prov)?;
    write_json_with_provenance(&a.out.join("H.json"), &h, &prov)?;
    let blocks: Vec<Vec<u32>> = (0..host.num_blocks()).map(|e| host.block(e).to_vec()).collect();
    write_json(
        &a.out.join("blocks.json"),
        &json!({
            "n": a.n, "q": a.q, "r": a.r,
            "blocks": blocks,
            "provenance": prov,
        }),
    )?;
    write_json(
        &a.out.join("report.json"),
        &json!({
            "kind": kind_name,
            "n": a.n, "q": a.q, "r": a.r, "g": a.g,
            "num_vertices": graph.num_vertices(),
            "num_edges": graph.num_edges(),
            "num_configs": h.num_configs(),
            "regular_degree": host.regular_degree(),
            "provenance": prov,
        }),
    )?;
    println!(
        "built {kind_name} instance: {} vertices, {} edges, {} configurations -> {}",
        graph.num_vertices(),
        graph.num_edges(),
        h.num_configs(),
        a.out.display()
    );
    Ok(0)
}

/// Edge colorings on disk may omit the color count; default to one past the
/// largest color used.
#[derive(serde::Deserialize)]
struct ColoringDoc {
    colors: Vec<u32>,
    num_colors: Option<u32>,
}

pub fn build_rainbow(a: &RainbowArgs) -> Result<i32, CliError> {
    let g = read_graph(&a.graph)?;
    let doc: ColoringDoc = read_json(&a.coloring)?;
    let num_colors =
        doc.num_colors.unwrap_or_else(|| doc.colors.iter().max().map_or(0, |m| m + 1));
    let phi = EdgeColoring { colors: doc.colors, num_colors };
    let lifted = lifts::build_rainbow(&g, &phi).map_err(design_err)?;

    let resolved = json!({
        "command": "build-rainbow",
        "graph": a.graph.display().to_string(),
        "coloring": a.coloring.display().to_string(),
        "num_colors": num_colors,
    });
    let prov = Provenance::new(
        0,
        config_hash(&resolved),
        "bipartite lift whose matchings are the rainbow matchings of the base",
    );
    ensure_dir(&a.out)?;
    write_json_with_provenance(&a.out.join("G.json"), &lifted, &prov)?;
    let mut num_configs = None;
    let mut dropped_configs = 0usize;
    if let Some(cfg_path) = &a.configs {
        // Edge ids are preserved by the lift. A configuration whose members
        // share a color stops being a matching up there, but the shared color
        // vertex already keeps those members out of any one matching, so it
        // is enforced by the lift itself and can be dropped.
        #[derive(serde::Deserialize)]
        struct RawDoc {
            configs: Vec<Vec<u32>>,
        }
        let raw: RawDoc = read_json(cfg_path)?;
        let total = raw.configs.len();
        let mut survivors: Vec<Vec<u32>> = Vec::with_capacity(total);
        for cfg in raw.configs {
            if let Some(&bad) = cfg.iter().find(|&&e| e as usize >= phi.colors.len()) {
                return Err(usage(format!(
                    "configuration in {} references edge {bad} outside the base graph",
                    cfg_path.display()
                )));
            }
            let mut colors: Vec<u32> = cfg.iter().map(|&e| phi.colors[e as usize]).collect();
            colors.sort_unstable();
            if colors.windows(2).all(|w| w[0] != w[1]) {
                survivors.push(cfg);
            }
        }
        dropped_configs = total - survivors.len();
        let h = hgmatch::RawConfigs { configs: survivors }
            .into_config_hypergraph(&lifted)
            .map_err(|e| usage(format!("configurations in {}: {e}", cfg_path.display())))?;
        num_configs = Some(h.num_configs());
        write_json_with_provenance(&a.out.join("H.json"), &h, &prov)?;
    }
    write_json(
        &a.out.join("report.json"),
        &json!({
            "num_colors": num_colors,
            "base_vertices": g.num_vertices(),
            "num_vertices": lifted.num_vertices(),
            "num_edges": lifted.num_edges(),
            "num_configs": num_configs,
            "configs_enforced_by_lift": dropped_configs,
            "provenance": prov,
        }),
    )?;
    println!(
        "rainbow lift: {} colors + {} base vertices -> {}",
        num_colors,
        g.num_vertices(),
        a.out.display()
    );
    Ok(0)
}

pub fn lift_disjoint(a: &LiftDisjointArgs) -> Result<i32, CliError> {
    let g = read_graph(&a.graph)?;
    let h = read_configs(&a.configs, &g)?;
    let (lg, lh, codec) = lifts::lift_disjoint(&g, &h, a.m).map_err(design_err)?;

    let resolved = json!({
        "command": "lift-disjoint",
        "graph": a.graph.display().to_string(),
        "configs": a.configs.display().to_string(),
        "m": a.m,
    });
    let prov = Provenance::new(
        0,
        config_hash(&resolved),
        format!("lift whose A-perfect matchings decode to {} edge-disjoint ones", a.m),
    );
    ensure_dir(&a.out)?;
    write_json_with_provenance(&a.out.join("G.json"), &lg, &prov)?;
    write_json_with_provenance(&a.out.join("H.json"), &lh, &prov)?;
    write_json_with_provenance(&a.out.join("lift.json"), &codec, &prov)?;
    write_json(
        &a.out.join("report.json"),
        &json!({
            "m": a.m,
            "base_edges": g.num_edges(),
            "num_vertices": lg.num_vertices(),
            "num_edges": lg.num_edges(),
            "num_configs": lh.num_configs(),
            "provenance": prov,
        }),
    )?;
    println!(
        "disjoint lift (m = {}): {} edges, {} configurations -> {}",
        a.m,
        lg.num_edges(),
        lh.num_configs(),
        a.out.display()
    );
    Ok(0)
}

/// List assignments on disk may omit the color count; default to one past the
/// largest listed color.
#[derive(serde::Deserialize)]
struct ListsDoc {
    lists: Vec<Vec<u32>>,
    num_colors: Option<u32>,
}

pub fn lift_list(a: &LiftListArgs) -> Result<i32, CliError> {
    let g = read_graph(&a.graph)?;
    let h = read_configs(&a.configs, &g)?;
    let doc: ListsDoc = read_json(&a.lists)?;
    let num_colors = doc.num_colors.unwrap_or_else(|| {
        doc.lists.iter().filter_map(|l| l.iter().max()).max().map_or(0, |m| m + 1)
    });
    let lists = ListAssignment { lists: doc.lists, num_colors };
    let (lg, lh, codec) = lifts::lift_list(&g, &h, &lists).map_err(design_err)?;

    let resolved = json!({
        "command": "lift-list",
        "graph": a.graph.display().to_string(),
        "configs": a.configs.display().to_string(),
        "lists": a.lists.display().to_string(),
        "num_colors": num_colors,
    });
    let prov = Provenance::new(
        0,
        config_hash(&resolved),
        "lift whose A-perfect matchings decode to total list edge colorings",
    );
    ensure_dir(&a.out)?;
    write_json_with_provenance(&a.out.join("G.json"), &lg, &prov)?;
    write_json_with_provenance(&a.out.join("H.json"), &lh, &prov)?;
    write_json_with_provenance(&a.out.join("lift.json"), &codec, &prov)?;
    write_json(
        &a.out.join("report.json"),
        &json!({
            "num_colors": num_colors,
            "base_edges": g.num_edges(),
            "num_vertices": lg.num_vertices(),
            "num_edges": lg.num_edges(),
            "num_configs": lh.num_configs(),
            "provenance": prov,
        }),
    )?;
    println!(
        "list lift: {} lifted edges, {} configurations -> {}",
        lg.num_edges(),
        lh.num_configs(),
        a.out.display()
    );
    Ok(0)
}

pub fn regularize(a: &RegularizeArgs) -> Result<i32, CliError> {
    let g = read_graph(&a.graph)?;
    let out_g = match a.max_edges {
        Some(cap) => lifts::regularize_with_limit(&g, a.da, a.db, cap),
        None => lifts::regularize(&g, a.da, a.db),
    }
    .map_err(design_err)?;

    let resolved = json!({
        "command": "regularize",
        "graph": a.graph.display().to_string(),
        "d_a": a.da, "d_b": a.db,
    });
    let prov = Provenance::new(
        0,
        config_hash(&resolved),
        format!("B-side padded to degree {} with A-side degree {} kept", a.db, a.da),
    );
    ensure_dir(&a.out)?;
    write_json_with_provenance(&a.out.join("G.json"), &out_g, &prov)?;
    write_json(
        &a.out.join("report.json"),
        &json!({
            "d_a": a.da,
            "d_b": a.db,
            "input_vertices": g.num_vertices(),
            "input_edges": g.num_edges(),
            "num_vertices": out_g.num_vertices(),
            "num_edges": out_g.num_edges(),
            "provenance": prov,
        }),
    )?;
    println!(
        "regularized: {} -> {} edges (input embedded under identity ids) -> {}",
        g.num_edges(),
        out_g.num_edges(),
        a.out.display()
    );
    Ok(0)
}
