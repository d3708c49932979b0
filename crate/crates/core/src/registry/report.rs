use serde::Serialize;

use super::{enumerate_grid, neighbors, presets, Axis, GridCell, GridPosition, MethodSpec, RemovalLabel, RunOutcome, SummaryLabel};
use crate::behavior::BehaviorKind;
use crate::data::LabeledDataset;
use crate::error::Result;
use crate::explanation::ExplanationKind;

pub const REPORT_FORMAT: &str = "rbexplain-report";

#[derive(Serialize)]
struct PlotRow<'a> {
    feature: &'a str,
    score: f64,
    stderr: Option<f64>,
}

#[derive(Serialize)]
struct ExplainReport<'a> {
    format: &'static str,
    method: &'a MethodSpec,
    seed: u64,
    instance: Option<usize>,
    kind: ExplanationKind,
    feature_names: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    attributions: Option<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stderr: Option<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    selection: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    intercept: Option<f64>,
    u_full: f64,
    u_empty: f64,
    evaluations_used: usize,
    plot: Vec<PlotRow<'a>>,
    wall_time_ms: f64,
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

/// JSON report for one run; everything but `wall_time_ms` is a function of the inputs.
pub fn explain_report(
    outcome: &RunOutcome,
    data: &LabeledDataset,
    seed: u64,
    instance: Option<usize>,
    wall_time_ms: f64,
) -> Result<String> {
    let e = &outcome.explanation;
    let names = data.feature_names();
    let plot = match e.scores() {
        Some(scores) => names
            .iter()
            .zip(scores)
            .enumerate()
            .map(|(i, (n, &score))| PlotRow { feature: n, score, stderr: e.stderr().map(|s| s[i]) })
            .collect(),
        None => Vec::new(),
    };
    to_json(&ExplainReport {
        format: REPORT_FORMAT,
        method: &outcome.method,
        seed,
        instance,
        kind: e.kind(),
        feature_names: names,
        attributions: e.scores(),
        stderr: e.stderr(),
        selection: e.selected().map(|s| s.indices().collect()),
        intercept: e.intercept(),
        u_full: outcome.u_full,
        u_empty: outcome.u_empty,
        evaluations_used: e.evaluations_used(),
        plot,
        wall_time_ms,
    })
}

#[derive(Serialize)]
struct Neighbor {
    name: String,
    axis: Axis,
}

#[derive(Serialize)]
struct PresetEntry {
    name: String,
    position: GridPosition,
    executed_removal: &'static str,
    substituted: bool,
    substitution_note: Option<String>,
    neighbors: Vec<Neighbor>,
}

#[derive(Serialize)]
struct GridReport {
    removal_axis: Vec<&'static str>,
    behavior_axis: Vec<&'static str>,
    summary_axis: Vec<&'static str>,
    size: usize,
    occupied: usize,
    cells: Vec<GridCell>,
    presets: Vec<PresetEntry>,
}

pub fn grid_report() -> Result<String> {
    let cells = enumerate_grid();
    let entries = presets()
        .into_iter()
        .map(|p| PresetEntry {
            name: p.name.clone().unwrap_or_default(),
            position: p.position,
            executed_removal: p.removal.id(),
            substituted: p.substituted,
            substitution_note: p.substitution_note.clone(),
            neighbors: neighbors(&p)
                .into_iter()
                .map(|(q, axis)| Neighbor { name: q.name.unwrap_or_default(), axis })
                .collect(),
        })
        .collect();
    to_json(&GridReport {
        removal_axis: RemovalLabel::ALL.iter().map(|r| r.label()).collect(),
        behavior_axis: BehaviorKind::ALL.iter().map(|b| b.label()).collect(),
        summary_axis: SummaryLabel::ALL.iter().map(|s| s.label()).collect(),
        size: cells.len(),
        occupied: cells.iter().filter(|c| !c.presets.is_empty()).count(),
        cells,
        presets: entries,
    })
}
